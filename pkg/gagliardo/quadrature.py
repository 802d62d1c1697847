"""
积分模块

- 相关函数 g(t) = ∫_0^T |u(x+t) - u(x)|^p dx 的精确分段表示
- 周期奇异核 Σ_k (t + kT)^{-1-sp} 及其尾项的凸性夹逼
- 构型能量 2∫_0^T g(t) K(t) dt 的自适应积分
- 与上述路径独立的张量 Gauss-Legendre 暴力 oracle
"""

import logging
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import integrate, special

from .config import get_config
from .domain import (
    CRITICAL_TOL,
    Configuration,
    FractionalParams,
    JumpCountMeasure,
    circular_differences,
)
from .errors import DivergentEnergy, InvalidParameters, SingularArgument

logger = logging.getLogger("gagliardo-quadrature")

PROFILE_MERGE_TOL = 1e-12


# ============== 结果类型 ==============

class EnergyReport(BaseModel):
    """能量值及其误差信息"""
    value: float
    tail_lower: float = 0.0
    tail_upper: float = 0.0
    abs_err_est: float = 0.0
    nodes: int = 0

    def to_json(self) -> Dict[str, Any]:
        return self.model_dump()

    def csv_line(self) -> str:
        return ",".join(repr(float(v)) for v in
                        (self.value, self.tail_lower, self.tail_upper, self.abs_err_est))


class TailBound(BaseModel):
    lower: float
    upper: float
    R: float
    terms_used: int


class KernelValue(BaseModel):
    """截断格点和加尾项夹逼，exact 为 Hurwitz zeta 给出的精确值"""
    value: float
    partial: float
    exact: float
    tail: TailBound


# ============== Gauss-Legendre 工具 ==============

@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def composite_gauss(edges: Sequence[float], order: int) -> Tuple[np.ndarray, np.ndarray]:
    """在相邻断点之间各放一组 order 点 Gauss-Legendre 节点，跳过零宽度段"""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    x, w = gauss_legendre(order)
    half = (b - a)[:, None] / 2.0
    mid = (a + b)[:, None] / 2.0
    return (mid + half * x).ravel(), (half * w).ravel()


def refine_edges(edges: Sequence[float], max_width: float) -> np.ndarray:
    """把宽度超过 max_width 的段均分"""
    edges = np.unique(np.asarray(edges, dtype=float))
    out: List[float] = [float(edges[0])]
    for a, b in zip(edges[:-1], edges[1:]):
        pieces = max(1, int(np.ceil((b - a) / max_width - 1e-12)))
        out.extend(np.linspace(a, b, pieces + 1)[1:].tolist())
    return np.asarray(out)


# ============== 周期核 ==============

def lattice_kernel(t, T: float, sp: float):
    """K(t) = Σ_{k>=0} (t + kT)^{-1-sp} = T^{-1-sp} ζ(1+sp, t/T)"""
    a = 1.0 + sp
    return T ** (-a) * special.zeta(a, np.asarray(t, dtype=float) / T)


def kernel_partial(t, T: float, sp: float, K: int):
    t = np.asarray(t, dtype=float)
    k = np.arange(K)
    return ((t[..., None] + k * T) ** (-(1.0 + sp))).sum(axis=-1)


def kernel_tail_bracket(t, T: float, sp: float, K: int) -> Tuple[np.ndarray, np.ndarray]:
    """Σ_{k>=K} (t+kT)^{-1-sp} 的上下界

    f(k) 凸且递减: 梯形规则高估积分给出下界，中点规则低估积分给出上界。
    """
    t = np.asarray(t, dtype=float)
    a = 1.0 + sp
    lower = (t + K * T) ** (-sp) / (sp * T) + 0.5 * (t + K * T) ** (-a)
    upper = (t + (K - 0.5) * T) ** (-sp) / (sp * T)
    return lower, upper


def kernel_terms_for(t: float, T: float, sp: float, tol: float, max_terms: int = 1 << 22) -> int:
    """最小的 2 的幂 K 使夹逼宽度 <= tol/10"""
    K = 1
    while K < max_terms:
        lo, hi = kernel_tail_bracket(t, T, sp, K)
        if hi - lo <= tol / 10.0:
            break
        K *= 2
    return K


def periodic_kernel(t: float, T: float, sp: float, K: Optional[int] = None,
                    tol: Optional[float] = None) -> KernelValue:
    """前 K 项部分和加尾项夹逼中点"""
    if t <= 0:
        raise SingularArgument(f"kernel evaluated at t={t} <= 0")
    if sp <= 0:
        raise InvalidParameters(f"sp must be positive, got {sp}")
    if K is None:
        tol = get_config().quadrature.tol if tol is None else tol
        K = kernel_terms_for(t, T, sp, tol)
    if K < 1:
        raise InvalidParameters(f"K must be >= 1, got {K}")
    partial = float(kernel_partial(t, T, sp, K))
    lo, hi = kernel_tail_bracket(t, T, sp, K)
    lo, hi = float(lo), float(hi)
    return KernelValue(
        value=partial + (lo + hi) / 2.0,
        partial=partial,
        exact=float(lattice_kernel(t, T, sp)),
        tail=TailBound(lower=lo, upper=hi, R=float(K * T), terms_used=K),
    )


# ============== 相关函数 ==============

class CorrelationProfile:
    """g(t) = Σ_k |t-k|^p |A_t(k)|，|A_t(k)| 在每个断点区间上为整数斜率的仿射函数"""

    def __init__(self, T: int, p: float, breakpoints: np.ndarray,
                 pieces: List[Tuple[np.ndarray, np.ndarray, np.ndarray]]):
        self.T = T
        self.p = p
        self.breakpoints = breakpoints
        self.pieces = pieces

    @property
    def intervals(self) -> List[Tuple[float, float]]:
        bp = self.breakpoints
        return list(zip(bp[:-1].tolist(), bp[1:].tolist()))

    def measures(self, t: float) -> Dict[int, float]:
        idx = self._locate(np.asarray([t]))[0]
        ks, slopes, icpts = self.pieces[idx]
        return {int(k): float(m * t + c) for k, m, c in zip(ks, slopes, icpts)}

    def _locate(self, t: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def piece_value(self, idx: int, t):
        ks, slopes, icpts = self.pieces[idx]
        t = np.asarray(t, dtype=float)
        terms = np.abs(t[..., None] - ks) ** self.p * (slopes * t[..., None] + icpts)
        return terms.sum(axis=-1)

    def first_ratio(self, t):
        """首个区间上的 g(t)/t，不做除法"""
        ks, slopes, icpts = self.pieces[0]
        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        for k, m, c in zip(ks, slopes, icpts):
            if k == 0:
                total = total + t ** (self.p - 1.0) * (m * t + c)
            else:
                total = total + np.abs(t - k) ** self.p * m
        return total

    def __call__(self, t):
        t = np.mod(np.asarray(t, dtype=float), self.T)
        idx = self._locate(t)
        out = np.zeros_like(t)
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = self.piece_value(int(i), t[mask])
        return float(out) if out.ndim == 0 else out

    def mass_residual(self) -> float:
        """质量恒等式 Σ k|A_t(k)| = T·t 与 Σ|A_t(k)| = T 的最大偏差"""
        worst = 0.0
        for ks, slopes, icpts in self.pieces:
            worst = max(worst,
                        abs(float(np.dot(ks, slopes)) - self.T),
                        abs(float(np.dot(ks, icpts))),
                        abs(float(slopes.sum())),
                        abs(float(icpts.sum()) - self.T))
        return worst


def _pack(measures: Dict[int, Tuple[int, float]]):
    ks = np.array(sorted(measures), dtype=float)
    slopes = np.array([measures[int(k)][0] for k in ks], dtype=float)
    icpts = np.array([measures[int(k)][1] for k in ks], dtype=float)
    return ks, slopes, icpts


def correlation_profile(config: Configuration, p: float) -> CorrelationProfile:
    """构造精确的分段相关函数"""
    if p < 1:
        raise InvalidParameters(f"p must be >= 1, got {p}")
    T = config.T
    raw = np.unique(np.concatenate([circular_differences(config), np.arange(T + 1)]))
    keep = np.append(True, np.diff(raw) > PROFILE_MERGE_TOL * T)
    breakpoints = raw[keep]
    breakpoints[-1] = float(T)
    measure = JumpCountMeasure(config)

    positions, counts = config.positions()
    first: Dict[int, Tuple[int, float]] = {0: (-len(positions), float(T))}
    for m in np.unique(counts):
        first[int(m)] = (int(np.sum(counts == m)), 0.0)
    pieces = [_pack(first)]

    for a, b in zip(breakpoints[1:-1], breakpoints[2:]):
        t1, t2, tm = a + (b - a) / 4.0, a + 3.0 * (b - a) / 4.0, (a + b) / 2.0
        m1, m2, mm = (measure.level_measures(t) for t in (t1, t2, tm))
        affine: Dict[int, Tuple[int, float]] = {}
        for k in set(m1) | set(m2) | set(mm):
            slope = int(round((m2.get(k, 0.0) - m1.get(k, 0.0)) / (t2 - t1)))
            affine[k] = (slope, mm.get(k, 0.0) - slope * tm)
        pieces.append(_pack(affine))

    logger.debug(f"correlation profile T={T} p={p}: {len(pieces)} intervals")
    return CorrelationProfile(T, p, breakpoints, pieces)


def adaptive_quad(func: Callable, a: float, b: float, epsabs: float, limit: int, **kwargs):
    res = integrate.quad(func, a, b, epsabs=epsabs, epsrel=1e-11, limit=limit,
                         full_output=1, **kwargs)
    value, err, info = res[0], res[1], res[2]
    if len(res) > 3:
        logger.warning(f"quad on [{a:.6g}, {b:.6g}]: {res[3]}")
    return value, err, int(info["neval"])


def singular_integral(profile: CorrelationProfile, sp: float,
                      tol: Optional[float] = None) -> EnergyReport:
    """计算 2∫_0^T g(t) K(t) dt

    首个区间上 g(t) = t·r(t)，奇异部分 t^{-sp} 交给 QAWS 的代数权重处理。
    """
    if sp <= 0:
        raise InvalidParameters(f"sp must be positive, got {sp}")
    if sp >= 1.0 - CRITICAL_TOL:
        raise DivergentEnergy(f"configuration energy is infinite for sp={sp:.6g} >= 1")
    qcfg = get_config().quadrature
    tol = qcfg.tol if tol is None else tol
    T = profile.T
    a = 1.0 + sp
    # 等距等构型下断点差可能只差舍入误差，这样的区间贡献低于 tol，直接跳过
    negligible = 1e-13 * T
    pieces = [(idx, lo, hi) for idx, (lo, hi) in enumerate(profile.intervals)
              if idx == 0 or hi - lo > negligible]
    epsabs = tol / (2.0 * len(pieces))

    def first(t):
        return float(2.0 * profile.first_ratio(t) * (1.0 + t ** a * lattice_kernel(t + T, T, sp)))

    _, t0, t1 = pieces[0]
    value, err, neval = adaptive_quad(first, t0, t1, epsabs, qcfg.quad_limit,
                                      weight="alg", wvar=(-sp, 0.0))
    mass, _, _ = adaptive_quad(lambda t: float(profile.piece_value(0, t)), t0, t1, epsabs, qcfg.quad_limit)

    for idx, lo, hi in pieces[1:]:
        def integrand(t, idx=idx):
            return 2.0 * float(profile.piece_value(idx, t)) * float(lattice_kernel(t, T, sp))

        v, e, n = adaptive_quad(integrand, lo, hi, epsabs, qcfg.quad_limit)
        m, _, _ = adaptive_quad(lambda t, idx=idx: float(profile.piece_value(idx, t)), lo, hi,
                                epsabs, qcfg.quad_limit)
        value += v
        err += e
        neval += n
        mass += m

    K = qcfg.kernel_terms
    lo_T, _ = kernel_tail_bracket(float(T), T, sp, K)
    _, hi_0 = kernel_tail_bracket(0.0, T, sp, K)
    report = EnergyReport(
        value=value,
        tail_lower=2.0 * float(lo_T) * mass,
        tail_upper=2.0 * float(hi_0) * mass,
        abs_err_est=err,
        nodes=neval,
    )
    if err > tol:
        logger.warning(f"singular integral error estimate {err:.3g} exceeds tol {tol:.3g}")
    logger.debug(f"singular integral sp={sp:.6g}: {value:.12g} ({neval} evaluations)")
    return report


# ============== 暴力 oracle ==============

def _copies_in(points: np.ndarray, lo: float, hi: float, T: float) -> np.ndarray:
    if points.size == 0:
        return points
    k0 = np.floor((lo - points.max()) / T)
    k1 = np.ceil((hi - points.min()) / T)
    copies = (points[:, None] + np.arange(k0, k1 + 1) * T).ravel()
    return copies[(copies > lo) & (copies < hi)]


def direct_correlation(u: Callable, t: float, p: float, T: float,
                       jumps: Optional[Sequence[float]] = None, order: int = 16,
                       window: Optional[Tuple[float, float]] = None) -> float:
    """∫_window |u(x+t) - u(x)|^p dx，x 方向在 u(x) 与 u(x+t) 的间断处分段"""
    lo, hi = (0.0, float(T)) if window is None else window
    if hi <= lo:
        return 0.0
    if jumps is not None and len(jumps) > 0:
        pts = np.asarray(jumps, dtype=float)
        inner = np.concatenate([_copies_in(pts, lo, hi, T), _copies_in(pts - t, lo, hi, T)])
        edges = np.unique(np.concatenate([[lo, hi], inner]))
    else:
        edges = np.linspace(lo, hi, max(2, int(np.ceil(16 * (hi - lo) / T))) + 1)
    x, w = composite_gauss(edges, order)
    return float(np.dot(w, np.abs(u(x + t) - u(x)) ** p))


def _t_edges(T: float, jumps: Optional[Sequence[float]], lo: float, hi: float) -> np.ndarray:
    """t 方向的断点: 跳点的循环差加周期副本"""
    if jumps is not None and len(jumps) > 0:
        pts = np.asarray(jumps, dtype=float)
        base = np.unique(np.mod((pts[None, :] - pts[:, None]).ravel(), T))
    else:
        base = np.linspace(0.0, T, 9)[:-1]
    k = np.arange(np.floor(lo / T) - 1, np.ceil(hi / T) + 2)
    cand = (base[:, None] + k * T).ravel()
    cand = cand[(cand > lo) & (cand < hi)]
    edges = np.unique(np.concatenate([[lo, hi, 0.0] if lo < 0.0 < hi else [lo, hi], cand]))
    return refine_edges(edges, T / 16.0)


def _oracle_exponent(sp: float, p: float, jumps) -> float:
    has_jumps = jumps is not None and len(jumps) > 0
    if has_jumps and sp >= 1.0 - CRITICAL_TOL:
        raise DivergentEnergy(f"energy of a function with jumps is infinite for sp={sp:.6g}")
    return 1.0 if has_jumps else p


def _near_zero_rule(b: float, beta: float, sp: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """[0, b] 上的代换 t = v^q，q = 1/(beta - sp)，使 t^{beta-1-sp} 型被积函数变光滑"""
    q = 1.0 / (beta - sp)
    v, wv = composite_gauss([0.0, b ** (1.0 / q)], order)
    return v ** q, wv * q * v ** (q - 1.0)


def _t_rule(edges: np.ndarray, beta: float, sp: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """t 方向的求积规则，贴着 0 的两段使用代换"""
    nodes: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    for a, b in zip(edges[:-1], edges[1:]):
        if a == 0.0:
            t, w = _near_zero_rule(b, beta, sp, order)
        elif b == 0.0:
            t, w = _near_zero_rule(-a, beta, sp, order)
            t = -t
        else:
            t, w = composite_gauss([a, b], order)
        nodes.append(t)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _power_rule(q: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """[0, 1] 上的代换 ξ = v^q，吸收端点处 ξ^{1/q - 1} 型奇性"""
    v, wv = composite_gauss([0.0, 1.0], order)
    return v ** q, wv * q * v ** (q - 1.0)


class _PanelPairs:
    """(x, y) 平面上逐对面板的张量求积

    面板在跳点处断开，因此每对面板内 u 光滑。对角面板与共顶点面板用
    Duffy 三角剖分，节点全部落在 x ≠ y 上；分离的面板对直接做张量 Gauss，
    距离不足时二分较长的面板。
    """

    MAX_DEPTH = 40

    def __init__(self, u: Callable, p: float, sp: float, T: float, order: int,
                 cuts: np.ndarray):
        self.u = u
        self.p = p
        self.a = 1.0 + sp
        self.T = T
        self.order = order
        self.cuts = cuts
        self.nodes = 0
        x, w = gauss_legendre(order)
        self.plain = ((x + 1.0) / 2.0, w / 2.0)
        # 对角三角形里 r = hξη，被积函数约为 ξ^{p-sp} η^{p-1-sp}
        self.diag_xi = _power_rule(1.0 / (p - sp + 1.0), order)
        self.diag_eta = _power_rule(1.0 / (p - sp), order)
        # 顶点处 u 有跳时被积函数约为 ξ^{-sp}，连续时约为 ξ^{p-sp}
        self.corner_rules = {
            True: _power_rule(1.0 / (1.0 - sp), order),
            False: _power_rule(1.0 / (p - sp + 1.0), order),
        }

    def _f(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        vals = np.abs(self.u(x) - self.u(y)) ** self.p * np.abs(x - y) ** (-self.a)
        self.nodes += vals.size
        return vals

    def _is_cut(self, m: float) -> bool:
        if self.cuts.size == 0:
            return False
        r = float(np.mod(m, self.T))
        dist = np.abs(self.cuts - r)
        return bool(np.min(np.minimum(dist, self.T - dist)) <= 1e-12 * self.T)

    def diagonal(self, lo: float, hi: float) -> float:
        h = hi - lo
        xi, wxi = self.diag_xi
        eta, weta = self.diag_eta
        X, E = np.meshgrid(xi, eta, indexing="ij")
        x = lo + h * X
        vals = self._f(x, x - h * X * E) * (h * h * X)
        # 上下两个三角形关于对角线对称
        return 2.0 * float(wxi @ vals @ weta)

    def corner(self, m: float, A: float, B: float) -> float:
        """左面板 [m-A, m] 与右面板 [m, m+B] 在 (m, m) 处相接"""
        if A > 2.0 * B:
            return self.corner(m, B, B) + self.separated(m - A, m - B, m, m + B)
        if B > 2.0 * A:
            return self.corner(m, A, A) + self.separated(m - A, m, m + A, m + B)
        xi, wxi = self.corner_rules[self._is_cut(m)]
        eta, weta = self.plain
        X, E = np.meshgrid(xi, eta, indexing="ij")
        lower = self._f(m - A * X, m + B * X * E)
        upper = self._f(m - A * X * E, m + B * X)
        return float(wxi @ ((lower + upper) * (A * B * X)) @ weta)

    def separated(self, a: float, b: float, c: float, d: float, depth: int = 0) -> float:
        gap = max(c - b, a - d)
        if gap < max(b - a, d - c) and depth < self.MAX_DEPTH:
            if b - a >= d - c:
                mid = (a + b) / 2.0
                return (self.separated(a, mid, c, d, depth + 1)
                        + self.separated(mid, b, c, d, depth + 1))
            mid = (c + d) / 2.0
            return (self.separated(a, b, c, mid, depth + 1)
                    + self.separated(a, b, mid, d, depth + 1))
        x, wx = composite_gauss([a, b], self.order)
        y, wy = composite_gauss([c, d], self.order)
        return float(wx @ self._f(x[:, None], y[None, :]) @ wy)

    def pair(self, a: float, b: float, c: float, d: float) -> float:
        if a == c and b == d:
            return self.diagonal(a, b)
        if b == c:
            return self.corner(b, b - a, d - c)
        if d == a:
            return self.corner(a, d - c, b - a)
        return self.separated(a, b, c, d)


def cell_pair_oracle(u: Callable, s: float, p: float, T: int, K: Optional[int] = None,
                     n: Optional[int] = None, jumps: Optional[Sequence[float]] = None) -> EnergyReport:
    """暴力张量积分 ∫_{Q_T} ∫_R |u(x)-u(y)|^p / |x-y|^{1+sp} dy dx

    y 按胞 [kT, (k+1)T] 切开: |k| <= 1 的三个胞逐对面板处理奇性，
    2 <= |k| <= K 的像胞直接张量 Gauss，|k| > K 的远场用

        F0 · ((k+1)T)^{-1-sp} <= 第 k 胞 <= F0 · ((k-1)T)^{-1-sp}

    夹逼，F0 = ∫∫_{Q_T²} |u(x)-u(y)|^p。value 的远场取 (kT + z)^{-1-sp} 的二阶展开，
    并截在夹逼区间内。不是生产路径，仅用于交叉验证。
    """
    qcfg = get_config().quadrature
    K = qcfg.kernel_terms if K is None else K
    n = qcfg.oracle_nodes if n is None else n
    if n < 16 or K < 1:
        raise InvalidParameters(f"oracle needs n >= 16 and K >= 1, got n={n} K={K}")
    sp = s * p
    _oracle_exponent(sp, p, jumps)
    order = max(8, n // 16)
    a = 1.0 + sp

    if jumps is not None and len(jumps) > 0:
        cuts = np.mod(np.asarray(jumps, dtype=float), T)
        edges = refine_edges(np.concatenate([[0.0, float(T)], cuts]), T / 16.0)
    else:
        cuts = np.empty(0)
        edges = np.linspace(0.0, float(T), 17)
    panels = list(zip(edges[:-1].tolist(), edges[1:].tolist()))

    rule = _PanelPairs(u, p, sp, float(T), order, cuts)
    near = 0.0
    for k in (-1, 0, 1):
        shift = float(k * T)
        for xa, xb in panels:
            for ya, yb in panels:
                near += rule.pair(xa, xb, ya + shift, yb + shift)

    # u 以 T 为周期，像胞沿用主胞的节点值
    x, w = composite_gauss(edges, order)
    ux = u(x)
    weighted = np.abs(ux[:, None] - ux[None, :]) ** p * np.outer(w, w)
    gap = x[:, None] - x[None, :]
    F0 = float(weighted.sum())
    images = 0.0
    for k in range(2, K + 1):
        images += float((weighted * (np.abs(gap - k * T) ** (-a) + np.abs(gap + k * T) ** (-a))).sum())
    nodes = rule.nodes + x.size * x.size * (2 * K - 1)

    # 远场第 k 胞按 (kT + z)^{-1-sp} 展开到二阶，z = y - x 的一阶矩为零
    M2 = float((weighted * gap * gap).sum())
    scale = 2.0 * F0 * float(T) ** (-a)
    tail_lower = scale * float(special.zeta(a, K + 2))
    tail_upper = scale * float(special.zeta(a, K))
    far = scale * float(special.zeta(a, K + 1)) \
        + a * (a + 1.0) * M2 * float(T) ** (-a - 2.0) * float(special.zeta(a + 2.0, K + 1))
    value = near + images + min(max(far, tail_lower), tail_upper)
    logger.debug(f"cell-pair oracle s={s} p={p} T={T}: {value:.12g} with {nodes} nodes")
    return EnergyReport(
        value=value,
        tail_lower=tail_lower,
        tail_upper=tail_upper,
        abs_err_est=(tail_upper - tail_lower) / 2.0,
        nodes=int(nodes),
    )


def cutoff_energy(u: Callable, params: FractionalParams, R: float, n: Optional[int] = None,
                  jumps: Optional[Sequence[float]] = None) -> float:
    """∫_{Q_T} ∫_{B_R(0)} |u(x) - u(y)|^p / |x-y|^{1+sp} dy dx

    写成 y = x + t 后，对每个 t 外层 x 的范围是 [0,T] ∩ (-R-t, R-t)。
    """
    if params.d != 1:
        raise InvalidParameters("cut-off energy is implemented for d = 1 only")
    if R <= 0:
        raise InvalidParameters(f"R must be positive, got {R}")
    n = get_config().quadrature.oracle_nodes if n is None else n
    T, p, sp = params.T, params.p, params.sp
    beta = _oracle_exponent(sp, p, jumps)
    order = max(8, n // 16)

    edges = _t_edges(T, jumps, -R - T, R)
    edges = np.unique(np.concatenate([edges, [-R, R - T]]))
    t, w = _t_rule(edges, beta, sp, order)
    core = 0.0
    for ti, wi in zip(t, w):
        window = (max(0.0, -R - ti), min(float(T), R - ti))
        g = direct_correlation(u, ti, p, T, jumps, order, window)
        core += wi * g * abs(ti) ** (-(1.0 + sp))
    logger.debug(f"cut-off energy R={R}: {core:.12g}")
    return float(core)


def double_integral_oracle(u: Callable, p: float, T: int, n: Optional[int] = None,
                           jumps: Optional[Sequence[float]] = None) -> float:
    """∫_0^T ∫_0^T |u(x) - u(y)|^p dx dy = ∫_0^T g(t) dt"""
    n = get_config().quadrature.oracle_nodes if n is None else n
    order = max(8, n // 16)
    t, w = composite_gauss(_t_edges(T, jumps, 0.0, float(T)), order)
    g = np.array([direct_correlation(u, ti, p, T, jumps, order) for ti in t])
    return float(np.dot(w, g))
