"""
极限常数与收敛扫描

s → 0+ 时 s·F^s_p(u) → dω_d/(pT^d)·F^0_p(u)，
s → 1- 时 (1-s)·F^s_p(u) → K_{d,p}·∫|u'|^p，
临界情形 sp = 1 时磨光能量随 ln(1/ε) 对数增长。
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from .config import get_config
from .domain import Configuration, make_params, unit_sphere_area
from .energy import critical_lower_bound, energy_smooth, mollified_energy
from .errors import InvalidParameters, WrongRegime
from .quadrature import composite_gauss, double_integral_oracle

logger = logging.getLogger("gagliardo-limits")


class SweepRow(BaseModel):
    param: float
    raw: float
    scaled: float
    extrapolant: Optional[float] = None
    lower: Optional[float] = None


class SweepTable(BaseModel):
    kind: str
    rows: List[SweepRow] = Field(default_factory=list)
    target: Optional[float] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @property
    def final_extrapolant(self) -> Optional[float]:
        return self.rows[-1].extrapolant if self.rows else None


# ============== 常数 ==============

def limit_constant_s0(d: int, p: float, T: int) -> float:
    """dω_d/(pT^d)，dω_d = |S^{d-1}|"""
    return unit_sphere_area(d) / (p * T ** d)


def limit_constant_s1(d: int, p: float) -> float:
    """K_{d,p} = 2π^{(d-1)/2} Γ((p+1)/2) / (p Γ((d+p)/2))"""
    if d < 1 or p < 1:
        raise InvalidParameters(f"need d >= 1 and p >= 1, got d={d}, p={p}")
    ratio = math.gamma((p + 1.0) / 2.0) / math.gamma((d + p) / 2.0)
    return 2.0 * math.pi ** ((d - 1) / 2.0) * ratio / p


# ============== 外推 ==============

def richardson_extrapolate(values: Sequence[float], steps: Sequence[float]) -> List[float]:
    """Neville 表在步长 0 处的值，逐行给出使用前 k+1 个值的外推

    假设误差按步长的整数次幂展开，从一阶开始。
    """
    if len(values) != len(steps):
        raise InvalidParameters("values and steps differ in length")
    h = [float(x) for x in steps]
    table: List[List[float]] = []
    running: List[float] = []
    for i, v in enumerate(values):
        row = [float(v)]
        for j in range(1, i + 1):
            row.append((h[i] * table[i - 1][j - 1] - h[i - j] * row[j - 1]) / (h[i] - h[i - j]))
        table.append(row)
        running.append(row[-1])
    return running


def log_slope(eps: Sequence[float], values: Sequence[float]) -> float:
    """values 对 ln(1/ε) 的最小二乘斜率"""
    slope, _ = np.polyfit(-np.log(np.asarray(eps, dtype=float)), np.asarray(values, dtype=float), 1)
    return float(slope)


# ============== 扫描 ==============

def _map_rows(fn: Callable, items: Sequence) -> List:
    """按顺序返回结果，行内计算可并行"""
    threads = get_config().runtime.threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _check_schedule(schedule: Sequence[float], increasing: bool, lo: float, hi: float, name: str):
    if len(schedule) == 0:
        raise InvalidParameters(f"empty {name} schedule")
    for v in schedule:
        if not (lo <= v <= hi):
            raise InvalidParameters(f"{name}={v} outside [{lo}, {hi}]")
    diffs = np.diff(np.asarray(schedule, dtype=float))
    if np.any(diffs <= 0 if increasing else diffs >= 0):
        order = "increasing" if increasing else "decreasing"
        raise InvalidParameters(f"{name} schedule must be strictly {order}")


def _smooth_energy_at(u: Callable, p: float, T: int):
    correlation = getattr(u, "correlation", None)
    scale = getattr(u, "eps", None)

    def energy(s: float) -> float:
        params = make_params(s, p, T)
        if correlation is not None:
            return energy_smooth(u, params, correlation=lambda t: correlation(t, p), scale=scale).value
        return energy_smooth(u, params).value

    return energy


def _build_rows(schedule: Sequence[float], raw: List[float], factor: Callable[[float], float],
                steps: List[float]) -> List[SweepRow]:
    scaled = [factor(s) * r for s, r in zip(schedule, raw)]
    extrapolants = richardson_extrapolate(scaled, steps)
    return [SweepRow(param=float(s), raw=r, scaled=c, extrapolant=e)
            for s, r, c, e in zip(schedule, raw, scaled, extrapolants)]


def sweep_s0(u: Callable, p: float, T: int, s_schedule: Sequence[float],
             label: str = "u") -> SweepTable:
    """s·F^s_p(u) 沿递减的 s 序列，目标 dω_d/(pT^d)·F^0_p(u)"""
    scfg = get_config().sweep
    _check_schedule(s_schedule, False, scfg.s_min, scfg.s_max, "s")
    energy = _smooth_energy_at(u, p, T)
    raw = _map_rows(energy, list(s_schedule))
    rows = _build_rows(s_schedule, raw, lambda s: s, list(s_schedule))
    target = limit_constant_s0(1, p, T) * double_integral_oracle(u, p, T)
    for row in rows:
        logger.info(f"s0 sweep s={row.param}: scaled {row.scaled:.8g}, extrapolant {row.extrapolant:.8g}")
    return SweepTable(kind="sweep-s0", rows=rows, target=target,
                      metadata={"p": p, "T": T, "d": 1, "function": label})


def derivative_p_norm(u: Callable, p: float, T: int, nodes: Optional[int] = None) -> float:
    """∫_0^T |u'|^p，u 若自带 derivative_p_norm 则直接使用"""
    own = getattr(u, "derivative_p_norm", None)
    if own is not None:
        return float(own(p))
    nodes = get_config().sweep.smooth_nodes if nodes is None else nodes
    x, w = composite_gauss(np.linspace(0.0, T, 65), max(8, nodes // 64))
    h = 1e-6 * T
    slope = (np.asarray(u(x + h)) - np.asarray(u(x - h))) / (2.0 * h)
    return float(np.dot(w, np.abs(slope) ** p))


def sweep_s1(u: Callable, p: float, T: int, s_schedule: Sequence[float],
             label: str = "u") -> SweepTable:
    """(1-s)·F^s_p(u) 沿递增的 s 序列，目标 K_{1,p}·∫|u'|^p"""
    scfg = get_config().sweep
    _check_schedule(s_schedule, True, scfg.s_min, scfg.s_max, "s")
    energy = _smooth_energy_at(u, p, T)
    raw = _map_rows(energy, list(s_schedule))
    rows = _build_rows(s_schedule, raw, lambda s: 1.0 - s, [1.0 - s for s in s_schedule])
    target = limit_constant_s1(1, p) * derivative_p_norm(u, p, T)
    for row in rows:
        logger.info(f"s1 sweep s={row.param}: scaled {row.scaled:.8g}, extrapolant {row.extrapolant:.8g}")
    return SweepTable(kind="sweep-s1", rows=rows, target=target,
                      metadata={"p": p, "T": T, "d": 1, "function": label})


def _best_lower_bound(config: Configuration, p: float, eps: float) -> float:
    """在一组截断半径 R 上取 critical_lower_bound 的最大值"""
    radii = np.geomspace(4.0 * eps, 2.0 * config.T, 48)
    return max(critical_lower_bound(config, p, eps, float(R)) for R in radii)


def critical_scan(config: Configuration, p: float, eps_schedule: Sequence[float]) -> SweepTable:
    """临界情形 s = 1/p 的磨光能量，补偿列为 F^{s,ε}_p + 2^{2-p} T ln ε

    每行附上显式下界 lower。bounded_below 检查补偿列相对首行的下降，
    above_lower_bound 检查每行能量（计入求积误差）不低于 lower。
    """
    if p <= 1:
        raise WrongRegime(f"critical scan needs p > 1, got {p}")
    _check_schedule(eps_schedule, False, 0.0, config.T / 2.0, "eps")
    T = config.T
    params = make_params(1.0 / p, p, T)
    bound = 2.0 ** (2.0 - p) * T
    reports = _map_rows(lambda e: mollified_energy(config, params, e), list(eps_schedule))
    raw = [r.value for r in reports]
    rows = []
    for k, (eps, value) in enumerate(zip(eps_schedule, raw)):
        slope = log_slope(eps_schedule[:k + 1], raw[:k + 1]) if k > 0 else None
        lower = _best_lower_bound(config, p, eps)
        rows.append(SweepRow(param=float(eps), raw=value, scaled=value + bound * math.log(eps),
                             extrapolant=slope, lower=lower))
        logger.info(f"critical scan eps={eps}: energy {value:.8g}, compensated {rows[-1].scaled:.8g}, "
                    f"lower bound {lower:.8g}")
    compensated = [r.scaled for r in rows]
    errors = [rep.abs_err_est for rep in reports]
    # 补偿列相对首行的下降不超过 0.5 加两端的求积误差
    bounded = all(c >= compensated[0] - 0.5 - errors[0] - e for c, e in zip(compensated, errors))
    above = all(r.raw + e >= r.lower for r, e in zip(rows, errors))
    if not above:
        logger.warning(f"critical scan p={p} T={T}: an energy fell below its lower bound")
    return SweepTable(kind="critical-scan", rows=rows, target=bound, metadata={
        "p": p, "T": T, "s": 1.0 / p,
        "bounded_below": bool(bounded),
        "above_lower_bound": bool(above),
        "compensated_lower": rows[-1].lower + bound * math.log(rows[-1].param),
        "slope": rows[-1].extrapolant,
    })
