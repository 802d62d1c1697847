"""
命令行接口模块
"""

import argparse
import json
import math
import sys
import logging
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ValidationError

from .config import get_config
from .domain import (
    Configuration,
    PiecewiseAffineRepresentative,
    equispaced,
    make_configuration,
    make_params,
    random_configuration,
    unit_sphere_area,
)
from .energy import (
    energy_config,
    energy_smooth,
    energy_zero,
    equispaced_energy_zero,
    jensen_lower_bound,
    mollified_energy,
    tail_sandwich,
)
from .errors import EXIT_IO, EXIT_USAGE, GagliardoError, InvalidConfiguration, InvalidParameters
from .limits import critical_scan, limit_constant_s0, limit_constant_s1, sweep_s0, sweep_s1
from .mollifier import MollifiedRepresentative, MollifierSpec
from .optimizer import (
    DescentMethod,
    DescentMode,
    DescentOptions,
    gradient_descent,
    minimize_zero,
    verify_equispaced,
)
from .output import emit_json, emit_lines, emit_table
from .quadrature import cutoff_energy, double_integral_oracle
from .variations import (
    VariationReport,
    cusp_scan,
    gradient,
    hessian,
    mollified_gradient,
    mollified_hessian,
    separation_functionals_p1,
    separation_slopes_p1,
)

logger = logging.getLogger("gagliardo")

COMMANDS = {
    "energy": "构型 (或 --function) 的能量",
    "energy0": "极限能量 F^0_p 与 Jensen 下界",
    "mollified": "磨光能量 (需要 --eps)",
    "gradient": "能量梯度 (给出 --eps 时为磨光版本)",
    "hessian": "Hessian (给出 --eps 时为磨光版本)",
    "optimize": "投影下降",
    "sweep-s0": "s -> 0 极限扫描",
    "sweep-s1": "s -> 1 极限扫描",
    "critical-scan": "临界情形 sp = 1 的 ε 扫描",
    "cusp-scan": "重叠跳点附近的能量幂律",
    "estimates": "截断能量与尾项界",
    "constants": "d 维极限常数与尾项系数",
}

DEFAULT_SCHEDULES = {
    "sweep-s0": [0.2, 0.1, 0.05, 0.025],
    "sweep-s1": [0.8, 0.9, 0.95, 0.975],
    "critical-scan": [0.1, 0.05, 0.025, 0.0125],
}


class ExperimentSpec(BaseModel):
    """一次实验的全部输入，可由命令行参数或 JSON 文件给出"""
    command: str
    s: Optional[float] = None
    p: float = 2.0
    T: int = 1
    d: int = 1
    eps: Optional[float] = None
    equispaced: bool = False
    points: Optional[List[float]] = None
    random: bool = False
    seed: int = 0
    min_gap: float = 0.0
    schedule: Optional[List[float]] = None
    tol: Optional[float] = None
    out: Optional[str] = None
    format: Optional[str] = None
    function: Optional[str] = None
    index: int = 0
    method: Optional[str] = None
    zero: bool = False
    max_iters: Optional[int] = None
    grad_tol: Optional[float] = None


def setup_logging(level: str = "info"):
    """设置日志级别"""
    levels = {
        "debug": logging.DEBUG,
        "info": logging.INFO,
        "warning": logging.WARNING,
        "error": logging.ERROR,
    }
    logging.basicConfig(
        level=levels.get(level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )


# ============== 输入解析 ==============

def parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def build_spec(args: argparse.Namespace) -> ExperimentSpec:
    """JSON 规格文件提供默认值，显式给出的命令行参数覆盖它"""
    data: Dict[str, Any] = {}
    if getattr(args, "spec", None):
        with open(args.spec, "r", encoding="utf-8") as f:
            loaded = json.load(f)
        if not isinstance(loaded, dict):
            raise InvalidParameters("spec file must contain a JSON object")
        data.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for key, value in vars(args).items():
        if key in ("spec", "func", "log_level") or value is None:
            continue
        data[key] = value
    data["command"] = args.command
    try:
        return ExperimentSpec(**data)
    except ValidationError as e:
        raise InvalidParameters(str(e.errors()[0]["msg"])) from e


def resolve_configuration(spec: ExperimentSpec) -> Configuration:
    sources = [spec.equispaced, spec.points is not None, spec.random]
    if sum(sources) > 1:
        raise InvalidConfiguration("--equispaced, --points and --random are mutually exclusive")
    if spec.points is not None:
        return make_configuration(spec.points, spec.T)
    if spec.random:
        return random_configuration(spec.T, spec.min_gap, spec.seed)
    return equispaced(spec.T)


def resolve_function(spec: ExperimentSpec) -> Callable:
    """--function: sin (sin(2πx/T)) 或 sawtooth (ε 磨光的等距锯齿)"""
    name = spec.function or "sin"
    if name == "sin":
        return lambda x: np.sin(2.0 * math.pi * np.asarray(x) / spec.T)
    if name == "sawtooth":
        eps = 0.1 if spec.eps is None else spec.eps
        return MollifiedRepresentative(equispaced(spec.T), MollifierSpec(eps))
    raise InvalidParameters(f"unknown function {name!r}; choose sin or sawtooth")


def _params(spec: ExperimentSpec, s: Optional[float] = None):
    s = spec.s if s is None else s
    if s is None:
        raise InvalidParameters(f"command {spec.command} needs --s")
    return make_params(s, spec.p, spec.T, spec.d)


def _require_eps(spec: ExperimentSpec) -> float:
    if spec.eps is None:
        raise InvalidParameters(f"command {spec.command} needs --eps")
    return spec.eps


def _emit_report(report: BaseModel, spec: ExperimentSpec):
    if spec.format == "csv" and hasattr(report, "csv_line"):
        emit_lines([report.csv_line()], spec.out)
    else:
        emit_json(report, spec.out)


# ============== 命令 ==============

def cmd_energy(spec: ExperimentSpec):
    params = _params(spec)
    if spec.function:
        report = energy_smooth(resolve_function(spec), params)
    else:
        report = energy_config(resolve_configuration(spec), params)
    _emit_report(report, spec)


def cmd_energy0(spec: ExperimentSpec):
    config = resolve_configuration(spec)
    emit_json({
        "value": energy_zero(config, spec.p),
        "jensen_lower_bound": jensen_lower_bound(config, spec.p),
        "equispaced_value": equispaced_energy_zero(spec.T, spec.p),
    }, spec.out)


def cmd_mollified(spec: ExperimentSpec):
    report = mollified_energy(resolve_configuration(spec), _params(spec), _require_eps(spec))
    _emit_report(report, spec)


def cmd_gradient(spec: ExperimentSpec):
    config, params = resolve_configuration(spec), _params(spec)
    if spec.eps is not None:
        grad = mollified_gradient(config, params, spec.eps)
    else:
        grad = gradient(config, params)
    emit_json(VariationReport(gradient=grad.tolist()), spec.out)


def cmd_hessian(spec: ExperimentSpec):
    config, params = resolve_configuration(spec), _params(spec)
    if spec.eps is not None:
        report = mollified_hessian(config, params, spec.eps)
    else:
        report = hessian(config, params)
    emit_json(report, spec.out)


def cmd_optimize(spec: ExperimentSpec):
    config = resolve_configuration(spec)
    overrides: Dict[str, Any] = dict(max_iters=spec.max_iters, grad_tol=spec.grad_tol)
    if spec.method:
        overrides["method"] = DescentMethod(spec.method)
    if spec.eps is not None:
        overrides.update(mode=DescentMode.MOLLIFIED, eps=spec.eps,
                         min_gap_floor=max(4.0 * spec.eps, get_config().descent.min_gap_floor))
    opts = DescentOptions.from_config(**overrides)
    if spec.zero:
        trace = minimize_zero(config, spec.p, opts)
    else:
        trace = gradient_descent(config, _params(spec), opts)
    if spec.out:
        emit_table(trace, "csv" if spec.format == "csv" else "json", spec.out)
    ok, check = verify_equispaced(trace.final, 1e-6)
    emit_json({
        "termination": trace.termination.value if trace.termination else None,
        "iterations": trace.iterations,
        "energy": trace.energies[-1],
        "grad_inf": trace.grad_norms[-1],
        "points": trace.iterates[-1],
        "equispaced": ok,
        "max_deviation": check.max_deviation,
        "jensen_ok": trace.jensen_ok,
    }, None)


def cmd_sweep(spec: ExperimentSpec):
    schedule = spec.schedule or DEFAULT_SCHEDULES[spec.command]
    u = resolve_function(spec)
    label = spec.function or "sin"
    sweep = sweep_s0 if spec.command == "sweep-s0" else sweep_s1
    table = sweep(u, spec.p, spec.T, schedule, label)
    emit_table(table, spec.format or "csv", spec.out)


def cmd_critical_scan(spec: ExperimentSpec):
    schedule = spec.schedule or DEFAULT_SCHEDULES["critical-scan"]
    table = critical_scan(resolve_configuration(spec), spec.p, schedule)
    emit_table(table, spec.format or "csv", spec.out)


def cmd_cusp_scan(spec: ExperimentSpec):
    config = resolve_configuration(spec)
    if spec.p == 1.0:
        if spec.s is None:
            raise InvalidParameters("cusp-scan needs --s")
        f_plus, f_minus = separation_functionals_p1(config, spec.index, spec.s)
        slope_plus, slope_minus = separation_slopes_p1(config, spec.index, spec.s)
        emit_json({"F_plus": f_plus, "F_minus": f_minus,
                   "slope_plus": slope_plus, "slope_minus": slope_minus}, spec.out)
        return
    emit_json(cusp_scan(config, spec.index, _params(spec), spec.schedule), spec.out)


def cmd_estimates(spec: ExperimentSpec):
    """截断能量加尾项上下界，与完整能量对照"""
    params = _params(spec)
    T = spec.T
    if spec.function:
        u, jumps = resolve_function(spec), None
        full = energy_smooth(u, params).value
    else:
        config = resolve_configuration(spec)
        u, jumps = PiecewiseAffineRepresentative(config), list(config.points)
        full = energy_config(config, params).value
    F0 = double_integral_oracle(u, params.p, T, jumps=jumps)
    rows = []
    for R in spec.schedule or [3.0 * T, 5.0 * T, 10.0 * T]:
        bounds = tail_sandwich(F0, R, params)
        core = cutoff_energy(u, params, R, jumps=jumps)
        rows.append({
            "R": float(R), "core": float(core), "tail_lower": float(bounds.lower),
            "tail_upper": float(bounds.upper), "c1": float(bounds.c1), "c2": float(bounds.c2),
            "full": float(full),
            "contained": bool(core + bounds.lower <= full <= core + bounds.upper),
        })
    emit_json({"F0": F0, "rows": rows}, spec.out)


def cmd_constants(spec: ExperimentSpec):
    """d 维的极限常数，给出 --s 时附带单位 F0 的尾项夹逼"""
    d, p, T = spec.d, spec.p, spec.T
    out: Dict[str, Any] = {
        "d": d, "p": p, "T": T,
        "sphere_area": unit_sphere_area(d),
        "limit_s0": limit_constant_s0(d, p, T),
        "limit_s1": limit_constant_s1(d, p),
    }
    if spec.s is not None:
        params = _params(spec)
        root = math.sqrt(d)
        tails = []
        for R in spec.schedule or [3.0 * T * root, 5.0 * T * root, 10.0 * T * root]:
            bounds = tail_sandwich(1.0, R, params)
            tails.append({"R": float(R), "c1": bounds.c1, "c2": bounds.c2,
                          "lower_per_F0": bounds.lower, "upper_per_F0": bounds.upper})
        out["tails"] = tails
    emit_json(out, spec.out)


def cmd_config(args):
    """显示配置"""
    config = get_config()
    print("# 当前配置")
    print(yaml.safe_dump(config.model_dump(), sort_keys=False, allow_unicode=True), end="")
    return 0


HANDLERS = {
    "energy": cmd_energy,
    "energy0": cmd_energy0,
    "mollified": cmd_mollified,
    "gradient": cmd_gradient,
    "hessian": cmd_hessian,
    "optimize": cmd_optimize,
    "sweep-s0": cmd_sweep,
    "sweep-s1": cmd_sweep,
    "critical-scan": cmd_critical_scan,
    "cusp-scan": cmd_cusp_scan,
    "estimates": cmd_estimates,
    "constants": cmd_constants,
}


def run(spec: ExperimentSpec) -> int:
    """执行一次实验，返回退出码"""
    if spec.command not in HANDLERS:
        raise InvalidParameters(f"unknown command {spec.command!r}")
    if spec.format not in (None, "csv", "json"):
        raise InvalidParameters(f"unknown format {spec.format!r}")
    if spec.tol is not None:
        get_config().quadrature.tol = spec.tol
    HANDLERS[spec.command](spec)
    return 0


def _report_error(error: Dict[str, str]):
    sys.stderr.write(json.dumps(error, ensure_ascii=False) + "\n")


def _add_experiment_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--spec", help="JSON 实验规格文件 (命令行参数优先)")
    parser.add_argument("--s", type=float, help="分数阶 s ∈ (0, 1)")
    parser.add_argument("--p", type=float, help="指数 p >= 1")
    parser.add_argument("--T", type=int, help="周期 (跳点个数)")
    parser.add_argument("--d", type=int, help="维数 (仅用于常数)")
    parser.add_argument("--eps", type=float, help="磨光半径")
    parser.add_argument("--equispaced", action="store_true", default=None, help="等距构型")
    parser.add_argument("--points", type=parse_floats, help="跳点位置 a,b,c")
    parser.add_argument("--random", action="store_true", default=None, help="随机构型")
    parser.add_argument("--seed", type=int, help="随机种子")
    parser.add_argument("--min-gap", dest="min_gap", type=float, help="随机构型的最小间距")
    parser.add_argument("--schedule", type=parse_floats, help="扫描序列 v1,v2,...")
    parser.add_argument("--tol", type=float, help="积分绝对误差")
    parser.add_argument("--out", help="输出路径 (缺省为标准输出)")
    parser.add_argument("--format", choices=["csv", "json"], help="输出格式")
    parser.add_argument("--function", choices=["sin", "sawtooth"], help="光滑测试函数")
    parser.add_argument("--index", type=int, help="跳点下标")
    parser.add_argument("--method", choices=["gradient", "newton"], help="下降方向")
    parser.add_argument("--zero", action="store_true", default=None, help="对 F^0_p 做下降")
    parser.add_argument("--max-iters", dest="max_iters", type=int, help="最大迭代次数")
    parser.add_argument("--grad-tol", dest="grad_tol", type=float, help="梯度停止阈值")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gagliardo",
        description="gagliardo - 周期分数阶 (s,p)-Gagliardo 能量",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  gagliardo energy --T 1 --s 0.25 --p 2 --equispaced
  gagliardo optimize --T 5 --s 0.3 --p 2 --random --seed 7 --out trace.jsonl
  gagliardo sweep-s0 --p 2 --T 1 --schedule 0.2,0.1,0.05,0.025
  gagliardo critical-scan --T 2 --p 2 --equispaced
  gagliardo constants --d 2 --p 2 --T 1 --s 0.3
  gagliardo config                    # 显示配置
        """
    )

    parser.add_argument(
        "--log-level", "-l",
        choices=["debug", "info", "warning", "error"],
        default=None,
        help="日志级别"
    )

    subparsers = parser.add_subparsers(dest="command", help="可用命令")
    for name, help_text in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        _add_experiment_flags(sub)

    config_parser = subparsers.add_parser("config", help="显示配置")
    config_parser.set_defaults(func=cmd_config)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主入口"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level or get_config().runtime.log_level)

    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    if getattr(args, "func", None):
        return args.func(args)

    try:
        return run(build_spec(args))
    except GagliardoError as e:
        logger.error(f"{e.kind}: {e.message}")
        _report_error(e.to_dict())
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        _report_error({"kind": "IOError", "message": str(e)})
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
