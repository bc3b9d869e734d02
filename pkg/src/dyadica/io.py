"""Plain-text formats for step functions, weights, matrices and reports."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import StepFunction, build_grid
from .operators import OperatorMatrix
from .weights import FLOOR, Weight


def _format_values(values) -> str:
    return "\n".join(repr(float(x)) for x in values)


def dumps_step_function(f: StepFunction) -> str:
    return f"depth={f.grid.depth}\n{_format_values(f.values)}\n"


def dumps_weight(w: Weight) -> str:
    return f"depth={w.grid.depth}\nfloor={w.floor!r}\n{_format_values(w.values)}\n"


def _parse(text: str):
    headers, values = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if "=" in line:
            key, _, val = line.partition("=")
            headers[key.strip()] = val.strip()
        else:
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"line {lineno}: not a number: {raw!r}") from None
    if "depth" not in headers:
        raise ValueError("missing 'depth=D' header")
    grid = build_grid(int(headers["depth"]))
    if len(values) != grid.n_cells:
        raise ValueError(f"expected {grid.n_cells} values for depth {grid.depth}, got {len(values)}")
    return headers, grid, np.array(values)


def loads_step_function(text: str) -> StepFunction:
    _, grid, vals = _parse(text)
    return StepFunction(grid, vals)


def loads_weight(text: str) -> Weight:
    headers, grid, vals = _parse(text)
    return Weight(grid, vals, float(headers.get("floor", FLOOR)))


def save_weight(w: Weight, path) -> None:
    Path(path).write_text(dumps_weight(w))


def load_weight(path) -> Weight:
    return loads_weight(Path(path).read_text())


def save_step_function(f: StepFunction, path) -> None:
    Path(path).write_text(dumps_step_function(f))


def load_step_function(path) -> StepFunction:
    return loads_step_function(Path(path).read_text())


def dumps_matrix(M: OperatorMatrix, source_id: str = "-", target_id: str = "-") -> str:
    rows, cols = M.kernel.shape
    lines = [f"{rows} {cols} {source_id} {target_id}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in M.kernel]
    return "\n".join(lines) + "\n"


def loads_matrix(text: str):
    """Returns (kernel, source_id, target_id)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    rows, cols, src, tgt = lines[0].split()
    kernel = np.array([[float(x) for x in ln.split()] for ln in lines[1:]])
    if kernel.shape != (int(rows), int(cols)):
        raise ValueError(f"matrix body has shape {kernel.shape}, header says {rows}x{cols}")
    return kernel, src, tgt


def dumps_report(report) -> str:
    return json.dumps(report.to_dict(), sort_keys=True)
