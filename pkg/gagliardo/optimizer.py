"""
构型环面上的投影下降

每步沿 -梯度 (或平移补空间上的 Newton 方向) 移动跳点，
模 T 归约、重新排序，再把循环间距投影到下限 min_gap_floor 之上。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .config import get_config
from .domain import (
    CRITICAL_TOL,
    Configuration,
    FractionalParams,
    make_configuration,
    random_configuration,
)
from .energy import energy_config, energy_zero, equispaced_energy_zero, mollified_energy
from .errors import (
    CuspEncountered,
    CuspPoint,
    InvalidParameters,
    StalledDescent,
    WrongRegime,
)
from .quadrature import EnergyReport
from .variations import gradient, hessian, mollified_gradient, mollified_hessian

logger = logging.getLogger("gagliardo-optimizer")


class DescentMode(str, Enum):
    EXACT = "exact"
    MOLLIFIED = "mollified"


class DescentMethod(str, Enum):
    GRADIENT = "gradient"
    NEWTON = "newton"


class TerminationReason(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"


class DescentOptions(BaseModel):
    """下降参数，缺省值取自配置文件的 descent 节"""
    max_iters: int = 500
    grad_tol: float = 1e-8
    initial_step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 50
    min_gap_floor: float = 0.0
    mode: DescentMode = DescentMode.EXACT
    eps: Optional[float] = None
    method: DescentMethod = DescentMethod.GRADIENT
    energy_noise: Optional[float] = None

    @classmethod
    def from_config(cls, **overrides) -> "DescentOptions":
        dcfg = get_config().descent
        values = dict(
            max_iters=dcfg.max_iters,
            grad_tol=dcfg.grad_tol,
            initial_step=dcfg.initial_step,
            shrink=dcfg.shrink,
            armijo=dcfg.armijo,
            max_backtracks=dcfg.max_backtracks,
            min_gap_floor=dcfg.min_gap_floor,
            method=DescentMethod(dcfg.method),
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def validate_for(self, T: int):
        if self.max_iters < 0 or self.grad_tol <= 0 or self.initial_step <= 0:
            raise InvalidParameters("max_iters, grad_tol and initial_step must be positive")
        if not (0.0 < self.shrink < 1.0) or not (0.0 < self.armijo < 1.0):
            raise InvalidParameters("shrink and armijo must lie in (0, 1)")
        if not (0.0 <= self.min_gap_floor <= 1.0):
            raise InvalidParameters(f"min_gap_floor {self.min_gap_floor} infeasible for period {T}")
        if self.mode == DescentMode.MOLLIFIED:
            if self.eps is None or self.eps <= 0:
                raise InvalidParameters("mollified descent needs eps > 0")
            if self.min_gap_floor < 4.0 * self.eps - 1e-15:
                raise InvalidParameters(f"mollified descent needs min_gap_floor >= 4·eps = {4 * self.eps}")


class DescentTrace(BaseModel):
    T: int
    iterates: List[List[float]] = Field(default_factory=list)
    energies: List[float] = Field(default_factory=list)
    grad_norms: List[float] = Field(default_factory=list)
    termination: Optional[TerminationReason] = None
    jensen_ok: Optional[bool] = None

    @property
    def iterations(self) -> int:
        return max(0, len(self.iterates) - 1)

    @property
    def final(self) -> Configuration:
        return make_configuration(self.iterates[-1], self.T)

    def record(self, config: Configuration, energy: float, grad: np.ndarray):
        self.iterates.append(list(config.points))
        self.energies.append(float(energy))
        self.grad_norms.append(float(np.abs(grad).max()) if grad.size else 0.0)


class EquispacedReport(BaseModel):
    equispaced: bool
    max_deviation: float
    gaps: List[float]


# ============== 投影 ==============

def project_min_gap(points: Sequence[float], T: int, floor: float) -> Configuration:
    """把低于 floor 的间距抬到 floor，从超出部分按比例扣回，总长保持为 T"""
    config = make_configuration(points, T)
    if floor <= 0.0 or config.min_gap >= floor:
        return config
    gaps = config.gaps()
    low = gaps < floor
    deficit = float(np.sum(floor - gaps[low]))
    excess = np.where(low, 0.0, gaps - floor)
    new_gaps = np.where(low, floor, gaps - deficit * excess / excess.sum())
    start = config.points[0]
    projected = start + np.concatenate([[0.0], np.cumsum(new_gaps[:-1])])
    return make_configuration(projected.tolist(), T)


def verify_equispaced(result: Configuration, tol: float = 1e-6) -> Tuple[bool, EquispacedReport]:
    """所有循环间距与 1 相差不超过 tol (平移意义下等距)"""
    gaps = result.gaps()
    deviation = float(np.abs(gaps - 1.0).max())
    ok = deviation <= tol
    return ok, EquispacedReport(equispaced=ok, max_deviation=deviation, gaps=gaps.tolist())


# ============== 下降核心 ==============

def _direction(grad: np.ndarray, hess: Optional[np.ndarray]) -> np.ndarray:
    """Newton 方向只在平移补空间上求解，不是下降方向时退回梯度"""
    if hess is None:
        return grad
    eigvals, eigvecs = np.linalg.eigh(hess)
    scale = float(np.abs(eigvals).max()) if eigvals.size else 0.0
    if scale == 0.0:
        return grad
    keep = eigvals > 1e-10 * scale
    coeffs = eigvecs[:, keep].T @ grad / eigvals[keep]
    direction = eigvecs[:, keep] @ coeffs
    if float(np.dot(direction, grad)) <= 0.0:
        return grad
    return direction


def _resolution(energy: float, err: float, trial_energy: float, trial_err: float, noise: float) -> float:
    """两次能量比较能分辨的最小差: 两个误差估计、若干 ulp 与外加噪声"""
    ulps = 64.0 * float(np.spacing(max(abs(energy), abs(trial_energy))))
    return err + trial_err + ulps + noise


def _aligned_gradient(grad: np.ndarray, moved: np.ndarray, T: int) -> np.ndarray:
    """试探点按排序后顺序给出的梯度，换回移动前的跳点编号"""
    order = np.argsort(np.mod(moved, T), kind="stable")
    aligned = np.empty_like(grad)
    aligned[order] = grad
    return aligned


def _descend(config0: Configuration, energy_fn: Callable[[Configuration], Tuple[float, float]],
             grad_fn: Callable[[Configuration], np.ndarray],
             hess_fn: Optional[Callable[[Configuration], np.ndarray]],
             opts: DescentOptions, noise: float, exact: bool,
             on_iterate: Optional[Callable[[float], None]] = None) -> DescentTrace:
    """投影回溯下降

    Armijo 条件 E(trial) <= E - δ·α·slope 直接接受。能量差落在可分辨范围内时，
    改用近似 Armijo 条件: 试探点方向导数满足 ∇E(trial)·d >= -(1-2δ)·slope，
    梯形公式给出的下降量至少为 δ·α·slope。
    """
    T = config0.T
    floor = opts.min_gap_floor
    config = project_min_gap(config0.points, T, floor)
    trace = DescentTrace(T=T)
    energy, err = energy_fn(config)
    grad = grad_fn(config)
    trace.record(config, energy, grad)
    if on_iterate:
        on_iterate(energy)
    step_hint = opts.initial_step
    half = max(1, opts.max_backtracks // 2)

    for it in range(opts.max_iters):
        if trace.grad_norms[-1] <= opts.grad_tol:
            trace.termination = TerminationReason.CONVERGED
            break
        direction = _direction(grad, hess_fn(config) if hess_fn else None)
        slope = float(np.dot(grad, direction))
        step = opts.initial_step if hess_fn else min(opts.initial_step, 2.0 * step_hint)
        accepted = None
        for k in range(opts.max_backtracks):
            if k == half:
                logger.warning(f"line search at iteration {it + 1} needed {k} backtracks "
                               f"(step {step:.3g}, slope {slope:.3e})")
            moved = config.as_array() - step * direction
            raw = make_configuration(moved.tolist(), T)
            on_path = raw.min_gap >= floor
            trial = raw if on_path else project_min_gap(raw.points, T, floor)
            if exact and not trial.is_regular:
                raise CuspEncountered(f"iterate {it + 1} has overlapping jumps at step {step:.3g}; "
                                      f"restart with a small jitter")
            trial_energy, trial_err = energy_fn(trial)
            if trial_energy <= energy - opts.armijo * step * slope:
                accepted = (trial, trial_energy, trial_err, None)
                break
            resolution = _resolution(energy, err, trial_energy, trial_err, noise)
            if on_path and trial_energy <= energy + resolution:
                trial_grad = _gradient_at(grad_fn, trial)
                if float(np.dot(_aligned_gradient(trial_grad, moved, T), direction)) \
                        >= -(1.0 - 2.0 * opts.armijo) * slope:
                    accepted = (trial, trial_energy, trial_err, trial_grad)
                    break
            step *= opts.shrink
        if accepted is None:
            raise StalledDescent(f"line search failed {opts.max_backtracks} consecutive times "
                                 f"at iteration {it + 1}")
        step_hint = step
        config, energy, err, grad = accepted
        if grad is None:
            grad = _gradient_at(grad_fn, config)
        trace.record(config, energy, grad)
        if on_iterate:
            on_iterate(energy)
        logger.debug(f"iter {it + 1}: energy {energy:.12g}, |grad| {trace.grad_norms[-1]:.3e}, step {step:.3g}")
    else:
        trace.termination = (TerminationReason.CONVERGED if trace.grad_norms[-1] <= opts.grad_tol
                             else TerminationReason.MAX_ITERS)

    logger.info(f"descent finished after {trace.iterations} iterations: {trace.termination.value}, "
                f"energy {trace.energies[-1]:.12g}, |grad| {trace.grad_norms[-1]:.3e}")
    return trace


def _gradient_at(grad_fn: Callable[[Configuration], np.ndarray], config: Configuration) -> np.ndarray:
    try:
        return grad_fn(config)
    except CuspPoint as e:
        raise CuspEncountered(str(e)) from e


def gradient_descent(config0: Configuration, params: FractionalParams,
                     opts: Optional[DescentOptions] = None) -> DescentTrace:
    """精确模式 (亚临界) 或磨光模式 (p > 1，间距下限 >= 4ε) 的投影下降"""
    opts = DescentOptions.from_config() if opts is None else opts
    opts.validate_for(config0.T)
    noise = 0.0 if opts.energy_noise is None else opts.energy_noise
    newton = opts.method == DescentMethod.NEWTON

    if opts.mode == DescentMode.EXACT:
        if params.sp >= 1.0 - CRITICAL_TOL:
            raise WrongRegime(f"exact descent needs sp < 1, got sp={params.sp:.6g}")
        if not config0.is_regular:
            raise CuspEncountered("starting configuration has overlapping jumps")
        return _descend(
            config0,
            lambda c: _energy_with_error(energy_config(c, params)),
            lambda c: gradient(c, params),
            (lambda c: hessian(c, params, with_gradient=False).matrix()) if newton else None,
            opts, noise, exact=True,
        )

    if params.p <= 1.0:
        raise WrongRegime("mollified descent needs p > 1")
    eps = float(opts.eps)
    return _descend(
        config0,
        lambda c: _energy_with_error(mollified_energy(c, params, eps)),
        lambda c: mollified_gradient(c, params, eps),
        (lambda c: mollified_hessian(c, params, eps, with_gradient=False).matrix()) if newton else None,
        opts, noise, exact=False,
    )


def _energy_with_error(report: EnergyReport) -> Tuple[float, float]:
    return report.value, report.abs_err_est


def minimize_zero(config0: Configuration, p: float, opts: Optional[DescentOptions] = None) -> DescentTrace:
    """F^0_p 上的下降，梯度为中心差分，每个迭代点检查 Jensen 下界"""
    opts = DescentOptions.from_config() if opts is None else opts
    opts.validate_for(config0.T)
    if opts.mode != DescentMode.EXACT:
        raise InvalidParameters("minimize_zero runs in exact mode only")
    h = get_config().variation.fd_step
    T = config0.T
    bound = equispaced_energy_zero(T, p)
    violations: List[float] = []

    def grad_fn(config: Configuration) -> np.ndarray:
        return np.array([(energy_zero(config.displace(i, h), p) - energy_zero(config.displace(i, -h), p))
                         / (2.0 * h) for i in range(T)])

    def check(energy: float):
        if energy < bound - 1e-9:
            violations.append(energy)
            logger.warning(f"energy {energy!r} below the equispaced value {bound!r}")

    noise = 0.0 if opts.energy_noise is None else opts.energy_noise
    trace = _descend(config0, lambda c: (energy_zero(c, p), 0.0), grad_fn, None, opts, noise,
                     exact=False, on_iterate=check)
    trace.jensen_ok = not violations
    return trace


def multi_start(T: int, params: FractionalParams, seeds: Sequence[int], min_gap: float = 0.1,
                opts: Optional[DescentOptions] = None) -> List[DescentTrace]:
    """按种子生成随机起点并行下降，结果按种子顺序返回"""
    opts = DescentOptions.from_config() if opts is None else opts
    threads = get_config().runtime.threads

    def run(seed: int) -> DescentTrace:
        return gradient_descent(random_configuration(T, min_gap, seed), params, opts)

    if threads <= 1 or len(seeds) <= 1:
        return [run(seed) for seed in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, seeds))
