"""
结果输出

CSV/JSON/JSONL 写出：列顺序固定、浮点数用最短往返十进制 (repr)、
LF 换行、UTF-8。同样的输入两次写出逐字节相同。
"""

import json
import sys
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
from pydantic import BaseModel

from .limits import SweepTable
from .optimizer import DescentTrace

logger = logging.getLogger("gagliardo-output")

SWEEP_HEADER = ["param", "raw", "scaled", "extrapolant", "target"]
TRACE_HEADER = ["iter", "energy", "grad_inf"]


def format_float(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _plain(value: Any) -> Any:
    # numpy 标量 (float64, bool_) 转成 Python 原生类型
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps(obj: Any) -> str:
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(mode="json")
    return json.dumps(obj, ensure_ascii=False, default=_plain)


def _write(text: str, path: Optional[Union[str, Path]]):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info(f"wrote {path}")


def sweep_csv(table: SweepTable) -> str:
    lines = [",".join(SWEEP_HEADER)]
    for row in table.rows:
        lines.append(",".join([
            format_float(row.param), format_float(row.raw), format_float(row.scaled),
            format_float(row.extrapolant), format_float(table.target),
        ]))
    return "\n".join(lines) + "\n"


def trace_records(trace: DescentTrace) -> List[Dict[str, Any]]:
    return [
        {"iter": k, "energy": e, "grad_inf": g, "points": pts}
        for k, (e, g, pts) in enumerate(zip(trace.energies, trace.grad_norms, trace.iterates))
    ]


def trace_jsonl(trace: DescentTrace) -> str:
    return "".join(dumps(r) + "\n" for r in trace_records(trace))


def trace_csv(trace: DescentTrace) -> str:
    lines = [",".join(TRACE_HEADER)]
    for r in trace_records(trace):
        lines.append(f"{r['iter']},{format_float(r['energy'])},{format_float(r['grad_inf'])}")
    return "\n".join(lines) + "\n"


def emit_table(table: Union[SweepTable, DescentTrace], fmt: str = "csv",
               path: Optional[Union[str, Path]] = None):
    """写出扫描表或下降轨迹；轨迹的 json 格式为 JSONL，每个迭代一行"""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt}")
    if isinstance(table, DescentTrace):
        text = trace_jsonl(table) if fmt == "json" else trace_csv(table)
    elif fmt == "json":
        text = dumps(table) + "\n"
    else:
        text = sweep_csv(table)
    _write(text, path)


def emit_json(obj: Any, path: Optional[Union[str, Path]] = None):
    _write(dumps(obj) + "\n", path)


def emit_lines(lines: Iterable[str], path: Optional[Union[str, Path]] = None):
    _write("".join(line + "\n" for line in lines), path)
