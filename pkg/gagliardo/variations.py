"""
一阶与二阶变分

- 刚性 (s,p)-Laplacian 与构型 Hessian (亚临界)
- 重叠跳点处的尖点展开与 p=1 的分离泛函
- 磨光能量的梯度与 Hessian (所有区域，p > 1)
"""

import math
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from .config import get_config
from .domain import (
    CRITICAL_TOL,
    Configuration,
    FractionalParams,
    PiecewiseAffineRepresentative,
    make_params,
)
from .energy import energy_config, smooth_t_rule
from .errors import CuspPoint, InvalidParameters, NotOverlapping, WrongRegime
from .mollifier import MollifiedRepresentative, MollifierSpec, short_increment
from .quadrature import adaptive_quad, lattice_kernel

logger = logging.getLogger("gagliardo-variations")


class VariationReport(BaseModel):
    gradient: List[float]
    hessian: Optional[List[List[float]]] = None
    row_sum_residual: float = 0.0

    def matrix(self) -> np.ndarray:
        if self.hessian is None:
            raise InvalidParameters("report carries no Hessian")
        return np.asarray(self.hessian, dtype=float)


class SpectralReport(BaseModel):
    eigenvalues: List[float]
    near_zero: int
    kernel_angle: float
    positive_on_complement: bool


class CuspFit(BaseModel):
    """能量差的幂律拟合，系数和指数与理论展开对照"""
    h: List[float]
    differences: List[float]
    second_differences: List[float]
    exponent: float
    coefficient: float
    predicted_exponent: float
    predicted_coefficient: float


def _require_sub_critical(params: FractionalParams):
    if params.d != 1:
        raise InvalidParameters(f"variations are computed for d = 1 only, got d={params.d}")
    if params.sp >= 1.0 - CRITICAL_TOL:
        raise WrongRegime(f"configuration variations need sp < 1, got sp={params.sp:.6g}")


def _nearest_other(config: Configuration, i: int) -> float:
    """x_i 到其它跳点位置 (含周期副本) 的最近距离"""
    xi = config.points[i]
    d = np.mod(config.as_array() - xi, config.T)
    d = d[d > 0]
    if d.size == 0:
        return float(config.T)
    return float(min(d.min(), config.T - d.max()))


def _fold_edges(config: Configuration, i: int, lo: float) -> np.ndarray:
    """[lo, lo+T] 上 x_i ± z 碰到跳点的位置"""
    T = config.T
    d = np.mod(config.as_array() - config.points[i], T)
    cand = np.concatenate([d, T - d])
    cand = np.concatenate([cand, cand + T, cand - T])
    cand = cand[(cand > lo) & (cand < lo + T)]
    return np.unique(np.concatenate([[lo, lo + T], cand]))


def _folded_integral(config: Configuration, i: int, sigma: float, sp: float, phi, tol: float) -> float:
    """2∫_σ^{σ+T} [φ(x_i+z) + φ(x_i-z)] K(z) dz"""
    qcfg = get_config().quadrature
    xi = config.points[i]
    T = config.T
    edges = _fold_edges(config, i, sigma)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        def integrand(z):
            return 2.0 * float((phi(xi + z) + phi(xi - z)) * lattice_kernel(z, T, sp))

        value, _, _ = adaptive_quad(integrand, a, b, tol / len(edges), qcfg.quad_limit)
        total += value
    return total


# ============== 刚性 Laplacian 与 Hessian ==============

def rigid_laplacian(config: Configuration, i: int, params: FractionalParams,
                    tol: Optional[float] = None) -> float:
    """∂_{x_i} F^s_p[X] = 2 P.V.∫ [|u(x_i)-u(y)+1|^p - |u(x_i)-u(y)|^p] / |x_i-y|^{1+sp} dy

    在 z < σ (σ 为到最近其它跳点的距离) 上，φ(x_i+z) + φ(x_i-z) 恒为零，
    主值积分因此只需从 σ 开始。
    """
    _require_sub_critical(params)
    if config.multiplicity(i) > 1:
        raise CuspPoint(f"jump {i} at {config.points[i]} has multiplicity {config.multiplicity(i)}")
    tol = get_config().variation.pv_tol if tol is None else tol
    u = PiecewiseAffineRepresentative(config)
    ui = float(u(config.points[i]))
    p = params.p

    def phi(y):
        diff = ui - u(y)
        return np.abs(diff + 1.0) ** p - np.abs(diff) ** p

    sigma = _nearest_other(config, i)
    return _folded_integral(config, i, sigma, params.sp, phi, tol)


def gradient(config: Configuration, params: FractionalParams) -> np.ndarray:
    return np.array([rigid_laplacian(config, i, params) for i in range(config.T)])


def _assemble(off: np.ndarray, diag: np.ndarray) -> Tuple[np.ndarray, float]:
    """对称化非对角元并放入单独算出的对角元，返回矩阵与最大行和残差"""
    H = (off + off.T) / 2.0
    np.fill_diagonal(H, diag)
    residual = float(np.abs(H.sum(axis=1)).max()) if H.size else 0.0
    return H, residual


def _jump_phi(delta, p: float):
    return abs(delta + 1.0) ** p - abs(delta) ** p


def hessian(config: Configuration, params: FractionalParams, with_gradient: bool = True) -> VariationReport:
    """构型 Hessian

    H_ij = 2[2|Δ|^p - |Δ+1|^p - |Δ-1|^p] K_per(x_i-x_j)，Δ = u(x_i) - u(x_j)。
    对角元来自 x_i 移动时 Laplacian 主值积分里其它跳点处的跃变:
    H_ii = 2 Σ_{j≠i} [φ(Δ) - φ(Δ-1)] K_per(x_i-x_j)，φ(Δ) = |Δ+1|^p - |Δ|^p。
    """
    _require_sub_critical(params)
    if not config.is_regular:
        raise CuspPoint("Hessian is undefined at overlapping jumps")
    T, p, sp = config.T, params.p, params.sp
    pts = config.as_array()
    vals = PiecewiseAffineRepresentative(config)(pts)
    off = np.zeros((T, T))
    diag = np.zeros(T)
    for i in range(T):
        for j in range(T):
            if i == j:
                continue
            delta = float(vals[i] - vals[j])
            d = float(np.mod(pts[i] - pts[j], T))
            kern = float(lattice_kernel(d, T, sp) + lattice_kernel(T - d, T, sp))
            off[i, j] = 2.0 * (2.0 * abs(delta) ** p - abs(delta + 1.0) ** p
                               - abs(delta - 1.0) ** p) * kern
            diag[i] += 2.0 * (_jump_phi(delta, p) - _jump_phi(delta - 1.0, p)) * kern
    H, residual = _assemble(off, diag)
    grad = gradient(config, params) if with_gradient else np.zeros(T)
    return VariationReport(gradient=grad.tolist(), hessian=H.tolist(), row_sum_residual=residual)


def quadratic_form(H: np.ndarray, xi: np.ndarray) -> float:
    """-Σ_{i<j} H_ij (ξ_i - ξ_j)²，行和为零时等于 Hξ·ξ"""
    T = H.shape[0]
    return float(-sum(H[i, j] * (xi[i] - xi[j]) ** 2
                      for i in range(T) for j in range(i + 1, T)))


def spectral_check(report: VariationReport, rel_tol: float = 1e-8) -> SpectralReport:
    """特征分解: 平移方向为唯一近零特征向量，补空间上正定"""
    H = report.matrix()
    eigvals, eigvecs = np.linalg.eigh(H)
    scale = float(np.abs(eigvals).max()) if eigvals.size else 0.0
    if scale == 0.0:
        return SpectralReport(eigenvalues=eigvals.tolist(), near_zero=eigvals.size,
                              kernel_angle=0.0, positive_on_complement=eigvals.size <= 1)
    # 行和残差是求积误差的量级，阈值不低于它
    threshold = max(rel_tol * scale, 2.0 * report.row_sum_residual)
    zero = np.abs(eigvals) <= threshold
    k = int(np.argmin(np.abs(eigvals)))
    ones = np.ones(H.shape[0]) / math.sqrt(H.shape[0])
    cosine = min(1.0, abs(float(np.dot(eigvecs[:, k], ones))))
    others = np.delete(eigvals, k)
    return SpectralReport(
        eigenvalues=eigvals.tolist(),
        near_zero=int(zero.sum()),
        kernel_angle=math.acos(cosine),
        positive_on_complement=bool(np.all(others > threshold)),
    )


# ============== 尖点 ==============

def cusp_expansion(m: int, params: FractionalParams) -> Tuple[float, float]:
    """重数为 m 的跳点分开 h 时能量差的首项 A h^{1-sp}"""
    if m < 2:
        raise InvalidParameters(f"cusp expansion needs multiplicity >= 2, got {m}")
    if params.p == 1:
        raise WrongRegime("cusp expansion needs p > 1; use separation_functionals_p1")
    _require_sub_critical(params)
    p, sp = params.p, params.sp
    coefficient = ((m - 1) ** p - m ** p + 1.0) * 2.0 / (sp * (1.0 - sp))
    return coefficient, 1.0 - sp


def cusp_scan(config: Configuration, i: int, params: FractionalParams,
              h_values: Optional[Sequence[float]] = None) -> CuspFit:
    """D(h) = E(X + h e_i) - E(X) 的幂律拟合

    G(h) = D(2h) - 2D(h) 消去线性项，G = A(2^γ - 2) h^γ。
    """
    m = config.multiplicity(i)
    predicted, gamma0 = cusp_expansion(m, params)
    h = np.asarray(h_values if h_values is not None else np.geomspace(1e-4, 5e-3, 6), dtype=float)
    base = energy_config(config, params).value

    def diff(step: float) -> float:
        return energy_config(config.displace(i, step), params).value - base

    D = np.array([diff(x) for x in h])
    D2 = np.array([diff(2.0 * x) for x in h])
    G = D2 - 2.0 * D
    slope, _ = np.polyfit(np.log(h), np.log(np.abs(G)), 1)
    # 系数按理论指数取最小两个步长上的平均，高阶项在那里最小
    ratio = G / ((2.0 ** gamma0 - 2.0) * h ** gamma0)
    coefficient = float(np.mean(ratio[np.argsort(h)[:2]]))
    logger.info(f"cusp scan m={m}: exponent {slope:.4f} (expected {gamma0:.4f}), "
                f"coefficient {coefficient:.4f} (expected {predicted:.4f})")
    return CuspFit(
        h=h.tolist(),
        differences=D.tolist(),
        second_differences=G.tolist(),
        exponent=float(slope),
        coefficient=coefficient,
        predicted_exponent=gamma0,
        predicted_coefficient=predicted,
    )


def separation_functionals_p1(config: Configuration, i: int, s: float,
                              tol: Optional[float] = None) -> Tuple[float, float]:
    """p = 1 时重叠跳点的单侧分离泛函 (F+, F-)

    以 x_i 为原点，w(y) = u(y) - u(x_i)，u(x_i) 取全部 m 个跳之后的右值。
    窗口 z < σ' 内两侧之和为 -2z，解析积分。
    """
    m = config.multiplicity(i)
    if m == 1:
        raise NotOverlapping(f"jump {i} at {config.points[i]} is simple")
    params = make_params(s, 1.0, config.T)
    tol = get_config().variation.pv_tol if tol is None else tol
    u = PiecewiseAffineRepresentative(config)
    ui = float(u(config.points[i]))
    sigma = min(_nearest_other(config, i), 1.0)
    window = 2.0 * (-2.0 * sigma ** (1.0 - s) / (1.0 - s))

    def phi_plus(y):
        w = u(y) - ui
        return np.abs(1.0 - w) - np.abs(w)

    def phi_minus(y):
        w = u(y) - ui
        return np.abs(m - 1.0 - w) - np.abs(m - w)

    f_plus = window + _folded_integral(config, i, sigma, params.sp, phi_plus, tol)
    f_minus = window + _folded_integral(config, i, sigma, params.sp, phi_minus, tol)
    return f_plus, f_minus


def separation_slopes_p1(config: Configuration, i: int, s: float, h: float = 1e-4) -> Tuple[float, float]:
    """能量的单侧差商，扣除自作用修正 4h^{2-s}/((1-s)(2-s))"""
    params = make_params(s, 1.0, config.T)
    base = energy_config(config, params).value
    correction = 4.0 * h ** (2.0 - s) / ((1.0 - s) * (2.0 - s))
    plus = energy_config(config.displace(i, h), params).value - base
    minus = energy_config(config.displace(i, -h), params).value - base
    return (plus - correction) / h, (minus - correction) / h


# ============== 磨光变分 ==============

def _require_p_above_one(params: FractionalParams):
    if params.d != 1:
        raise InvalidParameters(f"variations are computed for d = 1 only, got d={params.d}")
    if params.p <= 1.0:
        raise WrongRegime("mollified variations need p > 1")


def _psi(z, p: float):
    return np.sign(z) * np.abs(z) ** (p - 1.0) if p != 2.0 else z


def _abs_pow(z, q: float):
    if q == 0.0:
        return np.ones_like(z)
    return np.abs(z) ** q


class _MollifiedGrid:
    """磨光变分共用的节点: 每个跳点支集上的 x 节点与固定 t 规则"""

    def __init__(self, config: Configuration, params: FractionalParams, eps: float):
        qcfg = get_config().quadrature
        self.config = config
        self.params = params
        self.spec = MollifierSpec(eps)
        self.rep = MollifiedRepresentative(config, self.spec)
        T = config.T
        self.t, self.tw, self.t_min = smooth_t_rule(T, min(eps, T / 4.0),
                                                    qcfg.geometric_levels, qcfg.gauss_order)
        self.kernel = lattice_kernel(self.t, T, params.sp)
        p, sp = params.p, params.sp
        self.tail_factor = self.t_min ** (p - sp) / (p - sp)

    def nodes(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        xi = self.config.points[i]
        return self.spec.support_rule(xi)

    def support(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """x_i 支集上的节点与 ρ_ε(x - x_i)·权重"""
        x, w = self.nodes(i)
        return x, w * self.spec.density(x - self.config.points[i])

    def density_of(self, j: int):
        """ρ_ε(z - x_j) 的周期副本及其一阶、二阶导数"""
        T, xj, spec = self.config.T, self.config.points[j], self.spec

        def shifted(f):
            return lambda z: f(z - xj - np.round((z - xj) / T) * T)

        return (shifted(spec.density), shifted(spec.density_derivative),
                shifted(spec.density_second_derivative))

    def field(self, x: np.ndarray) -> np.ndarray:
        """L(x) = ∫_0^T [ψ(u(x)-u(x+t)) + ψ(u(x)-u(x-t))] K(t) dt，含 t < t_min 的 Taylor 项"""
        rep, p = self.rep, self.params.p
        forward = _psi(-rep.increment(x[:, None], self.t), p)
        backward = _psi(-rep.increment(x[:, None], -self.t), p)
        L = ((forward + backward) * self.kernel * self.tw).sum(axis=1)
        d1, d2 = rep.derivative(x), rep.second_derivative(x)
        return L - (p - 1.0) * _abs_pow(d1, p - 2.0) * d2 * self.tail_factor


def mollified_gradient(config: Configuration, params: FractionalParams, eps: float) -> np.ndarray:
    """∂_{x_i} F^{s,ε}_p = 2p ∫ ρ_ε(x - x_i) L(x) dx，ψ(z) = |z|^{p-2}z"""
    _require_p_above_one(params)
    grid = _MollifiedGrid(config, params, eps)
    out = np.zeros(config.T)
    for i in range(config.T):
        x, wr = grid.support(i)
        out[i] = 2.0 * params.p * float(np.dot(wr, grid.field(x)))
    logger.debug(f"mollified gradient eps={eps}: max |g| = {np.abs(out).max():.3e}")
    return out


def _disjoint_block(grid: _MollifiedGrid, i: int, j: int) -> float:
    T, p, sp = grid.config.T, grid.params.p, grid.params.sp
    x, wx = grid.support(i)
    y, wy = grid.support(j)
    delta = grid.rep(x)[:, None] - grid.rep(y)[None, :]
    d = np.mod(x[:, None] - y[None, :], T)
    kern = lattice_kernel(d, T, sp) + lattice_kernel(T - d, T, sp)
    return float(-2.0 * p * (p - 1.0) * (wx[:, None] * wy[None, :] * _abs_pow(delta, p - 2.0) * kern).sum())


def _general_block(grid: _MollifiedGrid, i: int, j: int) -> float:
    """2p(p-1) ∫ ρ_i(x) ∫ |u(x)-u(y)|^{p-2} (ρ_j(x)-ρ_j(y)) K dy dx"""
    rep, p = grid.rep, grid.params.p
    rho, rho1, rho2 = grid.density_of(j)
    cutoff = grid.spec.short_cutoff
    x, wx = grid.support(i)
    xc = x[:, None]
    fwd = _abs_pow(rep.increment(xc, grid.t), p - 2.0) * short_increment(rho, rho1, xc, grid.t, cutoff)
    bwd = _abs_pow(rep.increment(xc, -grid.t), p - 2.0) * short_increment(rho, rho1, xc, -grid.t, cutoff)
    inner = -((fwd + bwd) * grid.kernel * grid.tw).sum(axis=1)

    d1, d2 = rep.derivative(x), rep.second_derivative(x)
    r1, r2 = rho1(x), rho2(x)
    safe = np.where(d1 == 0.0, np.inf, d1)
    taylor = -_abs_pow(d1, p - 2.0) * (r2 + (p - 2.0) * d2 * r1 / safe)
    inner += taylor * grid.tail_factor
    return float(2.0 * p * (p - 1.0) * np.dot(wx, inner))


def _mollified_diagonal(grid: _MollifiedGrid, i: int) -> float:
    """H_ii = 自身块 - 2p ∫ ρ_ε'(x - x_i) L(x) dx"""
    x, w = grid.nodes(i)
    drho = grid.spec.density_derivative(x - grid.config.points[i])
    moving = -2.0 * grid.params.p * float(np.dot(w * drho, grid.field(x)))
    return _general_block(grid, i, i) + moving


def mollified_hessian(config: Configuration, params: FractionalParams, eps: float,
                      with_gradient: bool = True) -> VariationReport:
    """磨光能量的 Hessian

    min_gap >= 4ε 时支集互不相交，非对角元只含交叉项；否则用一般公式。
    对角元单独计算，行和残差反映求积误差。
    """
    _require_p_above_one(params)
    grid = _MollifiedGrid(config, params, eps)
    T = config.T
    disjoint = config.min_gap >= 4.0 * eps
    block = _disjoint_block if disjoint else _general_block
    off = np.zeros((T, T))
    for i in range(T):
        for j in range(T):
            if i == j or (disjoint and j < i):
                continue
            off[i, j] = block(grid, i, j)
            if disjoint:
                off[j, i] = off[i, j]
    diag = np.array([_mollified_diagonal(grid, i) for i in range(T)])
    H, residual = _assemble(off, diag)
    logger.debug(f"mollified Hessian eps={eps} ({'disjoint' if disjoint else 'general'} branch), "
                 f"row-sum residual {residual:.3e}")
    grad = mollified_gradient(config, params, eps) if with_gradient else np.zeros(T)
    return VariationReport(gradient=grad.tolist(), hessian=H.tolist(), row_sum_residual=residual)
