"""
能量泛函

- 构型能量 F^s_p[X] (相关函数 + 奇异积分)
- 光滑函数能量 F^s_p(u)
- 极限能量 F^0_p[X] 的线段对分解与闭式
- 磨光能量 F^{s,ε}_p[X]
- 截断尾项的上下界
"""

import math
import logging
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from .config import get_config
from .domain import (
    CRITICAL_TOL,
    Configuration,
    FractionalParams,
    PiecewiseAffineRepresentative,
    unit_sphere_area,
)
from .errors import DivergentEnergy, InvalidParameters, InvalidRadius, WrongRegime
from .mollifier import MollifiedRepresentative, MollifierSpec
from .quadrature import (
    EnergyReport,
    composite_gauss,
    correlation_profile,
    kernel_tail_bracket,
    lattice_kernel,
    refine_edges,
    singular_integral,
)

logger = logging.getLogger("gagliardo-energy")

T_CHUNK = 64


class SegmentPairGeometry(BaseModel):
    """线段 i, j 的半长与竖直偏移 c_ij = v_j - v_i"""
    i: int
    j: int
    L_i: float
    L_j: float
    c_ij: float


class TailSandwich(NamedTuple):
    lower: float
    upper: float
    c1: float
    c2: float


def _require_1d(params: FractionalParams):
    if params.d != 1:
        raise InvalidParameters(f"energies are computed for d = 1 only, got d={params.d}")


# ============== 构型能量 ==============

def energy_config(config: Configuration, params: FractionalParams,
                  tol: Optional[float] = None) -> EnergyReport:
    """F^s_p[X]，仅在 sp < 1 时有限"""
    _require_1d(params)
    if params.T != config.T:
        raise InvalidParameters(f"params.T={params.T} does not match configuration T={config.T}")
    if params.sp >= 1.0 - CRITICAL_TOL:
        raise DivergentEnergy(f"the energy of a configuration is infinite for sp={params.sp:.6g}")
    profile = correlation_profile(config, params.p)
    return singular_integral(profile, params.sp, tol)


# ============== 光滑函数能量 ==============

def smooth_t_rule(T: float, scale: float, levels: int, order: int) -> Tuple[np.ndarray, np.ndarray, float]:
    """[t_min, T] 上的固定复合 Gauss-Legendre 规则

    [t_min, scale/2] 几何分段，[scale/2, T] 等宽分段 (宽度 <= scale/2)。
    规则不随被积函数自适应，能量对构型的依赖因而是光滑的。
    """
    switch = scale / 2.0
    geometric = switch * 2.0 ** -np.arange(levels, -1, -1, dtype=float)
    uniform = refine_edges([switch, float(T)], scale / 2.0)
    edges = np.concatenate([geometric, uniform[1:]])
    t, w = composite_gauss(edges, order)
    return t, w, float(geometric[0])


def trapezoid_correlation(u: Callable, p: float, T: float, nodes: int) -> Callable:
    """周期梯形规则下的 g(t)，对光滑周期 u 谱精度收敛"""
    x = np.arange(nodes) * (T / nodes)
    ux = np.asarray(u(x), dtype=float)

    def correlation(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        for start in range(0, t.size, T_CHUNK):
            tc = t[start:start + T_CHUNK]
            shifted = np.asarray(u(x[None, :] + tc[:, None]), dtype=float)
            out[start:start + T_CHUNK] = (np.abs(shifted - ux) ** p).sum(axis=1) * (T / nodes)
        return out

    return correlation


def energy_smooth(u: Callable, params: FractionalParams, tol: Optional[float] = None,
                  nodes: Optional[int] = None, correlation: Optional[Callable] = None,
                  scale: Optional[float] = None) -> EnergyReport:
    """光滑 T 周期函数的能量 2∫_0^T g(t) K(t) dt

    [0, t_min] 上用 g(t) ≈ c t^p 的 Taylor 余项，c 取 g(t_min)/t_min^p。
    """
    _require_1d(params)
    qcfg = get_config().quadrature
    T, p, sp = params.T, params.p, params.sp
    nodes = get_config().sweep.smooth_nodes if nodes is None else nodes
    scale = T / 4.0 if scale is None else min(scale, T / 4.0)
    if correlation is None:
        correlation = trapezoid_correlation(u, p, T, nodes)

    t, w, t_min = smooth_t_rule(T, scale, qcfg.geometric_levels, qcfg.gauss_order)
    g = correlation(t)
    kernel = lattice_kernel(t, T, sp)
    value = 2.0 * float(np.dot(w, g * kernel))

    c = float(correlation(np.array([t_min]))[0]) / t_min ** p
    remainder = 2.0 * c * t_min ** (p - sp) / (p - sp)
    value += remainder

    lo, hi = kernel_tail_bracket(t, T, sp, qcfg.kernel_terms)
    report = EnergyReport(
        value=value,
        tail_lower=2.0 * float(np.dot(w, g * lo)),
        tail_upper=2.0 * float(np.dot(w, g * hi)),
        abs_err_est=abs(remainder) * t_min / scale,
        nodes=int(t.size + 1),
    )
    logger.debug(f"smooth energy s={params.s:.6g} p={p}: {value:.12g} ({t.size} t-nodes)")
    return report


# ============== 极限能量 F^0_p ==============

def _antiderivative(z, p: float):
    return np.abs(z) ** (p + 2.0) / ((p + 1.0) * (p + 2.0))


def segment_pair_integral(l: float, lp: float, c: float, p: float) -> float:
    """f_p(ℓ, ℓ', c) = ∫_{-ℓ}^{ℓ} ∫_{-ℓ'}^{ℓ'} |x - y - c|^p dy dx"""
    if l < 0 or lp < 0:
        raise InvalidParameters(f"half-lengths must be non-negative, got {l}, {lp}")
    if l == 0 or lp == 0:
        return 0.0
    F = lambda z: _antiderivative(z, p)
    return float(F(l + lp - c) - F(-l + lp - c) - F(l - lp - c) + F(-l - lp - c))


def centered_segment_pair(l: float, lp: float, p: float) -> float:
    return 2.0 / ((p + 1.0) * (p + 2.0)) * ((l + lp) ** (p + 2.0) - abs(l - lp) ** (p + 2.0))


def centered_segment_pair_gradient(l: float, lp: float, p: float) -> float:
    """∂f̲_p/∂ℓ"""
    return 2.0 / (p + 1.0) * ((l + lp) ** (p + 1.0) - (l - lp) * abs(l - lp) ** p)


def centered_segment_pair_curvature(l: float, lp: float, p: float) -> float:
    """∂²f̲_p/∂ℓ²"""
    return 2.0 * ((l + lp) ** p - abs(l - lp) ** p)


def segment_pair_offset_curvature(l: float, lp: float, c: float, p: float) -> float:
    """∂²f_p/∂c² = p(p-1) ∫∫ |x - y - c|^{p-2}"""
    G = lambda z: abs(z) ** p
    return G(l + lp - c) - G(-l + lp - c) - G(l - lp - c) + G(-l - lp - c)


def segment_geometry(config: Configuration) -> List[SegmentPairGeometry]:
    """所有有序线段对的几何数据，线段 i 为 [x_i, x_{i+1})"""
    half = config.gaps() / 2.0
    values = PiecewiseAffineRepresentative(config).segment_midpoint_values()
    return [
        SegmentPairGeometry(i=i, j=j, L_i=float(half[i]), L_j=float(half[j]),
                            c_ij=float(values[j] - values[i]))
        for i in range(config.T) for j in range(config.T)
    ]


def energy_zero(config: Configuration, p: float) -> float:
    """F^0_p[X] = ∫_0^T ∫_0^T |u(x) - u(y)|^p = Σ_{i,j} f_p(L_i, L_j, c_ij)"""
    if p < 1:
        raise InvalidParameters(f"p must be >= 1, got {p}")
    return float(sum(segment_pair_integral(g.L_i, g.L_j, g.c_ij, p)
                     for g in segment_geometry(config)))


def jensen_lower_bound(config: Configuration, p: float) -> float:
    """Σ_{i,j} f̲_p(L_i, L_j)，介于 F^0_p[X] 与 T²·2/((p+1)(p+2)) 之间"""
    half = config.gaps() / 2.0
    return float(sum(centered_segment_pair(a, b, p) for a in half for b in half))


def equispaced_energy_zero(T: int, p: float) -> float:
    return T ** 2 * 2.0 / ((p + 1.0) * (p + 2.0))


# ============== 磨光能量 ==============

def mollified_energy(config: Configuration, params: FractionalParams, eps: float,
                     tol: Optional[float] = None) -> EnergyReport:
    """F^{s,ε}_p[X] = F^s_p(u[X] ⋆ ρ_ε)，对所有区域有限"""
    _require_1d(params)
    rep = MollifiedRepresentative(config, MollifierSpec(eps))
    return energy_smooth(rep, params, tol,
                         correlation=lambda t: rep.correlation(t, params.p),
                         scale=eps)


def critical_lower_bound(config: Configuration, p: float, eps: float, R: float) -> float:
    """临界情形 sp = 1 下磨光能量的显式下界

    2^{2-p} T ∫_{2ε}^R (h-2ε)/h² dh + 4(1-2^{1-p}) ∫_{2ε}^R (h-2ε-δ)_+/h² dh - 2R^{p-1}T/(p-1)，
    δ 为最小间距。
    """
    if p <= 1:
        raise WrongRegime(f"critical lower bound needs p > 1, got {p}")
    if R <= 2.0 * eps:
        raise InvalidRadius(f"R={R} must exceed 2·eps={2 * eps}")
    T = config.T

    def ramp(c0: float) -> float:
        if c0 >= R:
            return 0.0
        return math.log(R / c0) - 1.0 + c0 / R

    delta = config.min_gap
    return (2.0 ** (2.0 - p) * T * ramp(2.0 * eps)
            + 4.0 * (1.0 - 2.0 ** (1.0 - p)) * ramp(2.0 * eps + delta)
            - 2.0 * R ** (p - 1.0) * T / (p - 1.0))


# ============== 尾项夹逼 ==============

def tail_sandwich(F0: float, R: float, params: FractionalParams) -> TailSandwich:
    """∫_{Q_T} ∫_{|y|>R} 的上下界，F0 为胞内双积分 ∫_{Q_T}∫_{Q_T}|u(x)-u(y)|^p"""
    T, d, sp = params.T, params.d, params.sp
    root = math.sqrt(d)
    if R <= 2.0 * T * root:
        raise InvalidRadius(f"R={R} must exceed 2T√d={2.0 * T * root:.6g}")
    area = unit_sphere_area(d)
    c1 = (R + 2.0 * T * root) / (R + T * root)
    c2 = (R - 2.0 * T * root) / (R - T * root)
    lower = area * (R / T + 2.0 * root) ** (-sp) / (sp * (T * c1) ** (d + sp)) * F0
    upper = area * (R / T - 2.0 * root) ** (-sp) / (sp * (T * c2) ** (d + sp)) * F0
    return TailSandwich(lower=lower, upper=upper, c1=c1, c2=c2)
