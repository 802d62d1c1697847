"""
磨光子

标准 bump ρ(x) = Z^{-1} exp(-1/(1-x²)) 支撑在 (-1, 1)，
ρ_ε(x) = ρ(x/ε)/ε，H_ε = ρ_ε ⋆ Heaviside 为光滑阶跃。
u^ε = u[X] ⋆ ρ_ε 由阶跃叠加得到，不需要数值卷积。
"""

import logging
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.interpolate import BPoly

from .config import get_config
from .domain import Configuration, PiecewiseAffineRepresentative
from .errors import InvalidParameters
from .quadrature import composite_gauss, gauss_legendre

logger = logging.getLogger("gagliardo-mollifier")

T_CHUNK = 256
# |t| <= SHORT_FRACTION·ε 的增量改用导数的 Gauss 积分
SHORT_FRACTION = 2.0 ** -6
SHORT_ORDER = 16


def _unnormalized_bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def bump_normalization() -> float:
    """Z = ∫_{-1}^{1} exp(-1/(1-x²)) dx ≈ 0.443994"""
    value, _ = integrate.quad(lambda x: float(_unnormalized_bump(x)), -1.0, 1.0,
                              epsabs=1e-15, epsrel=1e-14, limit=200)
    return value


def bump(x):
    return _unnormalized_bump(x) / bump_normalization()


def bump_derivative(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = bump(xi) * (-2.0 * xi / (1.0 - xi ** 2) ** 2)
    return out


def bump_second_derivative(x):
    """ρ'' = ρ·(g² + g')，g = -2x/(1-x²)²"""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    q = 1.0 - xi ** 2
    g = -2.0 * xi / q ** 2
    dg = -2.0 / q ** 2 - 8.0 * xi ** 2 / q ** 3
    out[inside] = bump(xi) * (g ** 2 + dg)
    return out


def short_increment(func: Callable, derivative: Callable, x, t, cutoff: float,
                    order: int = SHORT_ORDER) -> np.ndarray:
    """f(x+t) - f(x)，|t| <= cutoff 时改为 ∫_x^{x+t} f'，不做相近值相减"""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    out = np.array(func(x + t) - func(x), dtype=float)
    short = np.abs(t) <= cutoff
    if np.any(short):
        gx, gw = gauss_legendre(order)
        half = t[short][:, None] / 2.0
        nodes = x[short][:, None] + half * (1.0 + gx)
        out[short] = (half * gw * derivative(nodes)).sum(axis=-1)
    return out


@lru_cache(maxsize=8)
def _step_table(size: int) -> BPoly:
    """H 在等距节点上的五次 Hermite 表，节点处的一阶、二阶导数取 ρ 与 ρ' 的精确值"""
    grid = np.linspace(-1.0, 1.0, size)
    x, w = gauss_legendre(8)
    half = np.diff(grid)[:, None] / 2.0
    mid = (grid[:-1] + grid[1:])[:, None] / 2.0
    cells = (half * w * bump(mid + half * x)).sum(axis=1)
    values = np.concatenate([[0.0], np.cumsum(cells)])
    total = values[-1]
    if abs(total - 1.0) > 1e-12:
        logger.warning(f"bump integrates to {total!r} on the step table")
    derivs = np.column_stack([values, bump(grid), bump_derivative(grid)]) / total
    return BPoly.from_derivatives(grid, derivs)


class MollifierSpec:
    """半径 ε 的标准磨光子及其阶跃表，构造后只读"""

    def __init__(self, eps: float, table_size: Optional[int] = None):
        if not eps > 0:
            raise InvalidParameters(f"mollifier radius must be positive, got {eps}")
        self.eps = float(eps)
        self.table_size = get_config().mollifier.table_size if table_size is None else table_size
        self.Z = bump_normalization()
        self._table = _step_table(self.table_size)

    def density(self, x):
        return bump(np.asarray(x, dtype=float) / self.eps) / self.eps

    def density_derivative(self, x):
        return bump_derivative(np.asarray(x, dtype=float) / self.eps) / self.eps ** 2

    def density_second_derivative(self, x):
        return bump_second_derivative(np.asarray(x, dtype=float) / self.eps) / self.eps ** 3

    @property
    def short_cutoff(self) -> float:
        return SHORT_FRACTION * self.eps

    def step(self, x):
        """H_ε(x)，|x| >= ε 时严格为 0 或 1"""
        y = np.asarray(x, dtype=float) / self.eps
        out = np.where(y >= 1.0, 1.0, 0.0)
        inside = np.abs(y) < 1.0
        if np.any(inside):
            out[inside] = np.clip(self._table(y[inside]), 0.0, 1.0)
        return out

    def support_rule(self, center: float, order: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """[center-ε, center+ε] 上的 Gauss-Legendre 节点与权重"""
        order = get_config().mollifier.support_order if order is None else order
        return composite_gauss([center - self.eps, center + self.eps], order)


class MollifiedRepresentative:
    """u^ε(x) = x - Σ_j [k_j - 1 + H_ε(d_j)] + C，d_j 是到 x_j 最近周期副本的有符号距离"""

    def __init__(self, config: Configuration, spec: MollifierSpec):
        if spec.eps >= config.T / 2.0:
            raise InvalidParameters(f"eps={spec.eps} must be smaller than T/2={config.T / 2}")
        self.config = config
        self.spec = spec
        self.eps = spec.eps
        self._pts = config.as_array()
        self.offset = PiecewiseAffineRepresentative(config).offset

    def _offsets(self, x):
        r = np.asarray(x, dtype=float)[..., None] - self._pts
        k = np.round(r / self.config.T)
        return k, r - k * self.config.T

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k, d = self._offsets(x)
        return x - (k - 1.0 + self.spec.step(d)).sum(axis=-1) + self.offset

    def derivative(self, x):
        _, d = self._offsets(x)
        return 1.0 - self.spec.density(d).sum(axis=-1)

    def second_derivative(self, x):
        _, d = self._offsets(x)
        return -self.spec.density_derivative(d).sum(axis=-1)

    def increment(self, x, t) -> np.ndarray:
        """u^ε(x+t) - u^ε(x)，按广播规则组合 x 与 t"""
        return short_increment(self, self.derivative, x, t, self.spec.short_cutoff)

    def zone_edges(self) -> np.ndarray:
        T = self.config.T
        zones = np.mod(np.concatenate([self._pts - self.eps, self._pts + self.eps]), T)
        return np.unique(np.concatenate([[0.0, float(T)], zones]))

    def derivative_p_norm(self, p: float, order: Optional[int] = None) -> float:
        """∫_0^T |u^ε'|^p"""
        order = get_config().mollifier.zone_order if order is None else order
        x, w = composite_gauss(self.zone_edges(), order)
        return float(np.dot(w, np.abs(self.derivative(x)) ** p))

    def correlation(self, t, p: float, order: Optional[int] = None):
        """g_ε(t) = ∫_0^T |u^ε(x+t) - u^ε(x)|^p dx

        每个 t 的 x 分段随 t 移动，端点为 x_j ± ε 与 x_j - t ± ε (模 T)，
        每段内 u^ε(x) 与 u^ε(x+t) 都只含一个过渡区。
        """
        order = get_config().mollifier.zone_order if order is None else order
        t = np.atleast_1d(np.asarray(t, dtype=float))
        T = self.config.T
        gx, gw = gauss_legendre(order)
        fixed = np.mod(np.concatenate([self._pts - self.eps, self._pts + self.eps]), T)
        out = np.empty_like(t)
        for start in range(0, t.size, T_CHUNK):
            tc = t[start:start + T_CHUNK]
            moving = np.mod(fixed[None, :] - tc[:, None], T)
            edges = np.sort(np.concatenate([
                np.zeros((tc.size, 1)), np.full((tc.size, 1), float(T)),
                np.broadcast_to(fixed, (tc.size, fixed.size)), moving,
            ], axis=1), axis=1)
            half = np.diff(edges, axis=1)[..., None] / 2.0
            mid = (edges[:, :-1] + edges[:, 1:])[..., None] / 2.0
            x = mid + half * gx
            diff = self(x + tc[:, None, None]) - self(x)
            out[start:start + T_CHUNK] = (half * gw * np.abs(diff) ** p).sum(axis=(1, 2))
        return out
