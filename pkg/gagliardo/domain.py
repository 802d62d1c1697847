"""
构型与参数

T 周期跳点构型 X、其分段仿射代表元 u[X] 以及跳点计数测度 μ^X。
所有对象构造后不可变，可在线程间共享。
"""

import math
import logging
from enum import Enum
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from .errors import InvalidConfiguration, InvalidInterval, InvalidParameters

logger = logging.getLogger("gagliardo-domain")

CRITICAL_TOL = 1e-12


class Regime(str, Enum):
    """按 s·p 与 1 的大小关系划分的区域"""
    SUB_CRITICAL = "sub-critical"
    CRITICAL = "critical"
    SUPER_CRITICAL = "super-critical"


class FractionalParams(BaseModel):
    """分数阶参数 (s, p)、周期 T 与维数 d"""
    model_config = ConfigDict(frozen=True)

    s: float
    p: float
    T: int = 1
    d: int = 1

    @field_validator("s")
    @classmethod
    def _check_s(cls, v: float) -> float:
        if not (0.0 < v < 1.0):
            raise ValueError(f"s must lie in (0, 1), got {v}")
        return v

    @field_validator("p")
    @classmethod
    def _check_p(cls, v: float) -> float:
        if not (math.isfinite(v) and v >= 1.0):
            raise ValueError(f"p must be >= 1, got {v}")
        return v

    @field_validator("T", "d")
    @classmethod
    def _check_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be a positive integer, got {v}")
        return v

    @property
    def sp(self) -> float:
        return self.s * self.p

    def regime(self) -> Regime:
        if abs(self.sp - 1.0) <= CRITICAL_TOL:
            return Regime.CRITICAL
        if self.sp < 1.0:
            return Regime.SUB_CRITICAL
        return Regime.SUPER_CRITICAL

    def with_s(self, s: float) -> "FractionalParams":
        return make_params(s, self.p, self.T, self.d)


def make_params(s: float, p: float, T: int = 1, d: int = 1) -> FractionalParams:
    """构造参数，把 pydantic 校验错误转换为 InvalidParameters"""
    try:
        return FractionalParams(s=s, p=p, T=T, d=d)
    except ValidationError as e:
        raise InvalidParameters(str(e.errors()[0]["msg"])) from e


class Configuration(BaseModel):
    """[0, T) 中按非降序排列的 T 个跳点 (允许重合)"""
    model_config = ConfigDict(frozen=True)

    T: int
    points: Tuple[float, ...]

    @model_validator(mode="after")
    def _check_canonical(self) -> "Configuration":
        if self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T}")
        if len(self.points) != self.T:
            raise ValueError(f"expected {self.T} points, got {len(self.points)}")
        pts = self.points
        for k, x in enumerate(pts):
            if not (math.isfinite(x) and 0.0 <= x < self.T):
                raise ValueError(f"point {x} outside [0, {self.T})")
            if k > 0 and x < pts[k - 1]:
                raise ValueError("points must be sorted")
        return self

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def gaps(self) -> np.ndarray:
        """循环间距，最后一项为跨越周期接缝的间距 x_1 + T - x_T"""
        pts = self.as_array()
        return np.append(np.diff(pts), pts[0] + self.T - pts[-1])

    @property
    def min_gap(self) -> float:
        return float(self.gaps().min())

    @property
    def is_regular(self) -> bool:
        return self.min_gap > 0.0

    def multiplicity(self, i: int) -> int:
        x = self.points[i]
        return sum(1 for y in self.points if y == x)

    def positions(self) -> Tuple[np.ndarray, np.ndarray]:
        """互不相同的跳点位置及其重数"""
        values, counts = np.unique(self.as_array(), return_counts=True)
        return values, counts

    def translate(self, a: float) -> "Configuration":
        return make_configuration([x + a for x in self.points], self.T)

    def displace(self, i: int, h: float) -> "Configuration":
        """只移动第 i 个跳点 (刚性变分 X + h e_i)"""
        pts = list(self.points)
        pts[i] += h
        return make_configuration(pts, self.T)

    def to_json(self) -> Dict[str, Any]:
        return {"T": self.T, "points": list(self.points)}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "Configuration":
        if "T" not in data or "points" not in data:
            raise InvalidConfiguration("configuration JSON needs 'T' and 'points'")
        return make_configuration(data["points"], int(data["T"]))


def _wrap(points: np.ndarray, T: int) -> np.ndarray:
    wrapped = np.mod(points, T)
    # np.mod 对极小的负数可能返回 T
    wrapped[wrapped >= T] = 0.0
    return wrapped


def make_configuration(points: Sequence[float], T: int) -> Configuration:
    """把点模 T 归约到 [0, T) 并稳定排序"""
    if int(T) != T or T < 1:
        raise InvalidConfiguration(f"T must be a positive integer, got {T}")
    T = int(T)
    if len(points) != T:
        raise InvalidConfiguration(f"expected {T} points, got {len(points)}")
    arr = np.asarray(points, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidConfiguration("points must be finite")
    arr = np.sort(_wrap(arr, T), kind="stable")
    return Configuration(T=T, points=tuple(float(x) for x in arr))


def equispaced(T: int) -> Configuration:
    if T < 1:
        raise InvalidConfiguration(f"T must be >= 1, got {T}")
    return make_configuration([float(i) for i in range(T)], T)


def random_configuration(T: int, min_gap: float, seed: int) -> Configuration:
    """随机构型，循环间距 >= min_gap，给定种子时逐位可复现"""
    if T < 1:
        raise InvalidConfiguration(f"T must be >= 1, got {T}")
    if not (0.0 <= min_gap <= 1.0):
        raise InvalidConfiguration(f"min_gap {min_gap} infeasible for period {T}")
    rng = np.random.default_rng(seed)
    # 累加与模 T 的舍入误差不超过 margin，抬高下限后 min_gap 严格成立
    margin = 8.0 * (T + 4) * float(np.spacing(2.0 * T))
    lifted = min(1.0, min_gap + margin)
    slack = T * (1.0 - lifted)
    gaps = lifted + slack * rng.dirichlet(np.ones(T))
    start = rng.uniform(0.0, T)
    points = start + np.concatenate([[0.0], np.cumsum(gaps[:-1])])
    config = make_configuration(points.tolist(), T)
    logger.debug(f"random configuration T={T} seed={seed} min_gap={config.min_gap:.6g}")
    return config


# ============== 分段仿射代表元 ==============

class PiecewiseAffineRepresentative:
    """u[X]: 斜率为 1、在每个跳点处下跳 1、右连续、周期内均值为零"""

    def __init__(self, config: Configuration):
        self.config = config
        self._pts = config.as_array()
        # ∫_0^T (x - n(x)) dx = T²/2 + Σ x_j
        self.offset = -(config.T / 2.0 + self._pts.sum() / config.T)

    def counter(self, x) -> np.ndarray:
        """n(x) = Σ_j floor((x - x_j)/T)，右连续且 n(x+T) = n(x) + T"""
        x = np.asarray(x, dtype=float)
        return np.floor((x[..., None] - self._pts) / self.config.T).sum(axis=-1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x - self.counter(x) + self.offset

    def left_limit(self, x):
        x = np.asarray(x, dtype=float)
        n = np.ceil((x[..., None] - self._pts) / self.config.T).sum(axis=-1) - self.config.T
        return x - n + self.offset

    def segment_midpoint_values(self) -> np.ndarray:
        """每段 [x_i, x_{i+1}) 中点处的值 (重合点给出空段)"""
        pts = self._pts
        right = np.append(pts[1:], pts[0] + self.config.T)
        return self((pts + right) / 2.0)


def evaluate_u(config: Configuration, x):
    value = PiecewiseAffineRepresentative(config)(x)
    return float(value) if np.ndim(value) == 0 else value


# ============== 跳点计数测度 ==============

class JumpCountMeasure:
    """μ^X = Σ_k Σ_j δ_{x_j + kT}"""

    def __init__(self, config: Configuration):
        self.config = config
        self._pts = config.as_array()

    def count(self, a: float, b: float) -> int:
        """闭区间 [a, b] 内的跳点数 (含重数与周期副本)"""
        if a > b:
            raise InvalidInterval(f"interval [{a}, {b}] is empty")
        T = self.config.T
        hi = np.floor((b - self._pts) / T)
        lo = np.ceil((a - self._pts) / T)
        return int(np.sum(hi - lo + 1))

    def window(self, x, t: float) -> np.ndarray:
        """半开窗口 (x, x+t] 内的跳点数，对 x 向量化"""
        x = np.asarray(x, dtype=float)
        T = self.config.T
        upper = np.floor((x[..., None] + t - self._pts) / T).sum(axis=-1)
        lower = np.floor((x[..., None] - self._pts) / T).sum(axis=-1)
        return (upper - lower).astype(int)

    def level_measures(self, t: float) -> Dict[int, float]:
        """|A_t(k)| = |{x ∈ [0,T) : μ((x, x+t]) = k}|，按窗口计数的分段常数精确求得"""
        T = self.config.T
        cuts = np.concatenate([[0.0, float(T)], self._pts, _wrap(self._pts - t, T)])
        cuts = np.unique(cuts)
        lengths = np.diff(cuts)
        keep = lengths > 0
        mids = (cuts[:-1] + cuts[1:])[keep] / 2.0
        counts = self.window(mids, t)
        measures: Dict[int, float] = {}
        for k, length in zip(counts.tolist(), lengths[keep].tolist()):
            measures[k] = measures.get(k, 0.0) + length
        return measures


def jump_count(config: Configuration, a: float, b: float) -> int:
    return JumpCountMeasure(config).count(a, b)


def circular_differences(config: Configuration) -> List[float]:
    """所有 (x_j - x_i) mod T，是相关函数的断点"""
    pts = config.as_array()
    diffs = _wrap((pts[None, :] - pts[:, None]).ravel(), config.T)
    return sorted(set(float(d) for d in diffs))


def unit_sphere_area(d: int) -> float:
    """|S^{d-1}| = 2π^{d/2}/Γ(d/2)，即 d 乘以单位球体积"""
    if d < 1:
        raise InvalidParameters(f"dimension must be >= 1, got {d}")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
