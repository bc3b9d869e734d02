"""Seeded verification sweeps over generated weight instances.

A config file holds one section per suite::

    [two-weight]
    depth = 6, 8
    instances = 20
    seed = 7
    t = -1, 0.5, 2
    volatility = 0.3, 0.6
    output = two_weight.csv

Each section produces a CSV table and a JSON sidecar (same stem).  Rows
come out in instance order and carry no timing unless ``timing = yes``,
so a fixed config reproduces the same bytes.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .conditions import (
    Triple,
    condition_report,
    sawyer_testing,
)
from .core import MAX_DEPTH, StepFunction, build_grid, haar_coefficients, haar_synthesis
from .normest import (
    fixed_sigma_norm,
    khintchine_closed_form,
    khintchine_enumeration,
    sup_sigma_norm,
)
from .operators import SignPattern, _t_haar_values
from .weights import (
    Weight,
    ap_constant,
    ap_packing,
    buckley_packing,
    c2t_constant,
    cascade_weight,
    power_weight,
    rh1_constant,
    rhp_constant,
    rhp_packing,
)

logger = logging.getLogger(__name__)

SUITES = ("two-weight", "one-weight", "unweighted", "packing", "sawyer", "khintchine", "perf")
DEFAULT_TOL = {"identity": 1e-10, "testing": 1e-8, "max_ratio": 10.0}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str
    depths: tuple = (6,)
    instances: int = 10
    seed: int = 0
    ts: tuple = (1.0,)
    volatility: tuple = (0.5,)
    alphas: tuple = (-0.4, -0.6)
    p: float = 2.0
    restarts: int = 16
    output: str | None = None
    timing: bool = False
    tolerance: dict = field(default_factory=lambda: dict(DEFAULT_TOL))

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        for d in self.depths:
            if not 1 <= d <= MAX_DEPTH:
                raise ConfigError(f"depth {d} outside [1, {MAX_DEPTH}]")
        if self.instances < 1:
            raise ConfigError("instances must be >= 1")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        for vol in self.volatility:
            if not 0 <= vol < 1:
                raise ConfigError(f"volatility {vol} outside [0, 1)")
        unknown = set(self.tolerance) - set(DEFAULT_TOL)
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.replace(",", " ").split())


_KEYS = {
    "depth": ("depths", _ints),
    "instances": ("instances", int),
    "seed": ("seed", int),
    "t": ("ts", _floats),
    "volatility": ("volatility", _floats),
    "alpha": ("alphas", _floats),
    "p": ("p", float),
    "restarts": ("restarts", int),
    "output": ("output", str),
}


def parse_config(text: str, base_dir: str | Path = ".") -> list[ExperimentConfig]:
    """One ExperimentConfig per section; relative outputs resolve against ``base_dir``."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    configs = []
    for name in cp.sections():
        kwargs, tol = {"suite": name}, dict(DEFAULT_TOL)
        for key, raw in cp[name].items():
            if key == "timing":
                kwargs["timing"] = cp[name].getboolean(key)
            elif key.startswith("tol."):
                tol[key[4:]] = float(raw)
            elif key in _KEYS:
                attr, conv = _KEYS[key]
                try:
                    kwargs[attr] = conv(raw)
                except ValueError:
                    raise ConfigError(f"[{name}] bad value for {key}: {raw!r}") from None
            else:
                raise ConfigError(f"[{name}] unknown key {key!r}")
        kwargs["tolerance"] = tol
        if "output" in kwargs:
            kwargs["output"] = str(Path(base_dir) / kwargs["output"])
        configs.append(ExperimentConfig(**kwargs))
    if not configs:
        raise ConfigError("config has no suite sections")
    return configs


def load_config(path) -> list[ExperimentConfig]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, path.parent)


# --- instances ---------------------------------------------------------------------------

def instance_seeds(seed: int, index: int, count: int = 4) -> list[int]:
    """Independent integer seeds for instance ``index``, stable across runs and platforms."""
    ss = np.random.SeedSequence([seed, index])
    return [int(s) for s in ss.generate_state(count)]


def cascade_triple(depth: int, volatility: float, seeds, *, same_uv: bool = False):
    grid = build_grid(depth)
    u = cascade_weight(grid, volatility, seeds[0])
    v = u if same_uv else cascade_weight(grid, volatility, seeds[1])
    w = cascade_weight(grid, volatility, seeds[2])
    return u, v, w


def _vol(cfg: ExperimentConfig, index: int) -> float:
    return cfg.volatility[index % len(cfg.volatility)]


def _wit(c) -> str:
    return f"{c.witness.level}:{c.witness.position}"


# --- suites (one call per instance, returning a list of rows) ------------------------------

def _two_weight_rows(cfg, depth, idx, *, same_uv=False):
    seeds = instance_seeds(cfg.seed, idx)
    vol = _vol(cfg, idx)
    u, v, w = cascade_triple(depth, vol, seeds, same_uv=same_uv)
    rows = []
    for t in cfg.ts:
        t0 = time.perf_counter()
        rep = condition_report(u, v, w, t)
        sup = sup_sigma_norm(u, v, w, t, restarts=cfg.restarts, seed=seeds[3])
        c1, c2, c3, c4 = rep.c1.value, rep.c2.value, rep.c3.value, rep.c4.value
        low = sup.value
        row = {
            "instance": idx, "seed": seeds[0], "depth": depth, "volatility": vol, "t": t,
            "c1": c1, "c2": c2, "c3": c3, "c4": c4, "combined": rep.combined,
            "sup_sigma": low, "alternation_steps": len(sup.history),
            "ratio_upper": low / rep.combined,
            "ratio_c1": math.sqrt(c1) / low, "ratio_c2": math.sqrt(c2) / low,
            "ratio_c3": math.sqrt(c3) / low,
            "c1_witness": _wit(rep.c1), "c2_witness": _wit(rep.c2), "c3_witness": _wit(rep.c3),
            "one_weight": rep.one_weight,
        }
        if same_uv:
            tr = Triple(u, v, w, t)
            row["one_weight_bound"] = rep.one_weight_bound
            row["reverse_holder_max"] = float(np.max(reverse_holder_ratio(tr)))
        monotone = all(b >= a * (1 - 1e-12) for a, b in zip(sup.history, sup.history[1:]))
        row["monotone"] = monotone
        if cfg.timing:
            row["wall_time"] = time.perf_counter() - t0
        rows.append(row)
    return rows


def reverse_holder_ratio(tr: Triple) -> np.ndarray:
    """<w>_I^{2t} / (<u^{-1}>_I <u w^{2t}>_I) on every interval; at most 1 when t >= 1 or t <= 0."""
    uw = tr.u * tr.w.power(2 * tr.t)
    return tr.w.tree ** (2 * tr.t) / (tr.U.tree * uw.tree)


def _one_weight_rows(cfg, depth, idx):
    bad = [t for t in cfg.ts if 0 < t < 1]
    if bad:
        raise ConfigError(f"one-weight suite needs t <= 0 or t >= 1, got {bad}")
    return _two_weight_rows(cfg, depth, idx, same_uv=True)


def _unweighted_rows(cfg, depth, idx):
    seeds = instance_seeds(cfg.seed, idx)
    grid = build_grid(depth)
    vol = _vol(cfg, idx)
    one = Weight.constant(grid)
    w = cascade_weight(grid, vol, seeds[2])
    rows = []
    for t in cfg.ts:
        norm = fixed_sigma_norm(one, one, w, t, SignPattern.ones(grid)).value
        c2t = c2t_constant(w, t)
        row = {"instance": idx, "seed": seeds[2], "depth": depth, "volatility": vol, "t": t,
               "norm": norm, "norm_sq": norm ** 2, "c2t": c2t.value, "c2t_witness": _wit(c2t),
               "ratio": norm ** 2 / c2t.value}
        rows.append(row)
    return rows


def _packing_rows(cfg, depth, idx):
    alpha = cfg.alphas[idx % len(cfg.alphas)]
    p = cfg.p
    w = power_weight(alpha, build_grid(depth))
    rhp = rhp_constant(w, p)
    pack = rhp_packing(w, p)
    rh1 = rh1_constant(w.power(p))
    row = {"instance": idx, "depth": depth, "alpha": alpha, "p": p,
           "rhp": rhp.value, "rhp_packing": pack.value, "rhp_packing_witness": _wit(pack),
           "rh1_wp": rh1.value, "buckley_wp": buckley_packing(w.power(p)).value}
    row["packing_ratio"] = pack.value / (rhp.value ** p * max(rh1.value, 1e-300))
    if alpha * -1.0 / (p - 1.0) > -1:  # dual weight integrable
        dual = w.power(-1.0 / (p - 1.0))
        row["ap"] = ap_constant(w, p).value
        row["ap_packing"] = ap_packing(w, p).value
        row["rh1_dual"] = rh1_constant(dual).value
    return [row]


def haar_testing_gap(tr: Triple, sigma) -> float:
    """max_I | ||T h_I||^2_{L^2(v)} - <w^{2t} v>_I / <w>_I^{2t} | (relative)."""
    grid = tr.grid
    nl = grid.n_nonleaf
    H = haar_synthesis(0.0, np.eye(nl))  # row k = h_I for flat index k
    TH = _t_haar_values(H, tr.w, tr.t, sigma)
    lhs = (TH ** 2 * tr.v.values).mean(axis=1)
    rhs = tr.V.tree[:nl] / (tr.w.tree[:nl] ** (2 * tr.t) if tr.t != 0 else 1.0)
    return float(np.max(np.abs(lhs - rhs) / rhs))


def _sawyer_rows(cfg, depth, idx):
    seeds = instance_seeds(cfg.seed, idx)
    vol = _vol(cfg, idx)
    u, v, w = cascade_triple(depth, vol, seeds)
    grid = u.grid
    sigma = SignPattern.random(grid, np.random.default_rng(seeds[3]))
    rows = []
    for t in cfg.ts:
        tc = sawyer_testing(u, v, w, t, sigma)
        norm_sq = fixed_sigma_norm(u, v, w, t, sigma).value ** 2
        vals = tc.values()
        row = {"instance": idx, "seed": seeds[0], "depth": depth, "volatility": vol, "t": t,
               "norm_sq": norm_sq, **{f"test_{k}": x for k, x in vals.items()},
               "test_max_ratio": max(vals.values()) / norm_sq,
               "haar_gap": haar_testing_gap(Triple(u, v, w, t), sigma)}
        rows.append(row)
    return rows


def _khintchine_rows(cfg, depth, idx):
    if depth > 4:
        raise ConfigError("khintchine enumeration needs depth <= 4")
    seeds = instance_seeds(cfg.seed, idx)
    grid = build_grid(depth)
    vol = _vol(cfg, idx)
    v = cascade_weight(grid, vol, seeds[1])
    w = cascade_weight(grid, vol, seeds[2])
    f = StepFunction(grid, np.random.default_rng(seeds[3]).normal(size=grid.n_cells))
    rows = []
    for t in cfg.ts:
        V = v * w.power(2 * t)
        closed = khintchine_closed_form(V, w, t, f)
        enum = khintchine_enumeration(V, w, t, f)
        rows.append({"instance": idx, "seed": seeds[1], "depth": depth, "volatility": vol, "t": t,
                     "closed_form": closed, "enumeration": enum,
                     "gap": abs(closed - enum) / max(1.0, abs(closed))})
    return rows


def _perf_rows(cfg, depth, idx):
    seeds = instance_seeds(cfg.seed, idx)
    u, v, w = cascade_triple(depth, _vol(cfg, idx), seeds)
    t = cfg.ts[0]
    values = np.random.default_rng(seeds[3]).normal(size=u.grid.n_cells)
    t0 = time.perf_counter()
    haar_coefficients(values)
    t1 = time.perf_counter()
    condition_report(u, v, w, t, with_c4=False)
    t2 = time.perf_counter()
    return [{"instance": idx, "depth": depth, "t": t, "transform_time": t1 - t0,
             "report_time": t2 - t1, "total_time": t2 - t0}]


_SUITE_FUNCS = {
    "two-weight": _two_weight_rows,
    "one-weight": _one_weight_rows,
    "unweighted": _unweighted_rows,
    "packing": _packing_rows,
    "sawyer": _sawyer_rows,
    "khintchine": _khintchine_rows,
    "perf": _perf_rows,
}


# --- checks --------------------------------------------------------------------------------

def _check_rows(cfg: ExperimentConfig, rows: list[dict]) -> list[str]:
    tol = cfg.tolerance
    fails = []
    for r in rows:
        tag = f"instance {r['instance']} depth {r['depth']} t={r.get('t')}"
        if cfg.suite in ("two-weight", "one-weight"):
            comb = math.sqrt(r["c1"]) + math.sqrt(r["c2"]) + math.sqrt(r["c3"]) + r["c4"]
            if not math.isclose(comb, r["combined"], rel_tol=1e-12):
                fails.append(f"{tag}: combined bound does not match its constants")
            if not r["monotone"]:
                fails.append(f"{tag}: alternation objective decreased")
            worst = max(r["ratio_upper"], r["ratio_c1"], r["ratio_c2"], r["ratio_c3"])
            if worst > tol["max_ratio"]:
                fails.append(f"{tag}: ratio {worst:.4g} exceeds {tol['max_ratio']}")
            if "reverse_holder_max" in r and r["reverse_holder_max"] > 1 + tol["identity"]:
                fails.append(f"{tag}: reverse Hoelder step fails ({r['reverse_holder_max']!r})")
        elif cfg.suite == "unweighted":
            if r["c2t"] > r["norm_sq"] * (1 + tol["testing"]):
                fails.append(f"{tag}: C2t exceeds the squared norm")
        elif cfg.suite == "sawyer":
            if r["test_max_ratio"] > 1 + tol["testing"]:
                fails.append(f"{tag}: a testing constant exceeds the squared norm")
            if r["haar_gap"] > tol["identity"]:
                fails.append(f"{tag}: Haar testing identity gap {r['haar_gap']:.3g}")
        elif cfg.suite == "khintchine":
            if r["gap"] > tol["identity"]:
                fails.append(f"{tag}: closed form and enumeration differ by {r['gap']:.3g}")
    return fails


def summarize(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    """Per-depth maxima of the ratio columns."""
    ratio_cols = [c for c in ("ratio_upper", "ratio_c1", "ratio_c2", "ratio_c3", "ratio",
                              "test_max_ratio", "gap", "haar_gap", "rhp_packing", "packing_ratio",
                              "transform_time", "report_time")
                  if rows and c in rows[0]]
    out = {}
    for d in cfg.depths:
        sub = [r for r in rows if r["depth"] == d]
        out[str(d)] = {c: max(r[c] for r in sub) for c in ratio_cols if sub}
    return out


# --- driver ----------------------------------------------------------------------------------

@dataclass
class SuiteResult:
    config: ExperimentConfig
    rows: list
    failures: list
    summary: dict

    @property
    def ok(self) -> bool:
        return not self.failures


def _threads() -> int:
    raw = os.environ.get("DYADICA_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"DYADICA_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def run_suite(cfg: ExperimentConfig) -> SuiteResult:
    func = _SUITE_FUNCS[cfg.suite]
    n = len(cfg.alphas) if cfg.suite == "packing" else cfg.instances
    tasks = [(d, i) for d in cfg.depths for i in range(n)]
    workers = min(_threads(), len(tasks))
    logger.info("suite %s: %d tasks on %d threads", cfg.suite, len(tasks), workers)
    if workers <= 1:
        chunks = [func(cfg, d, i) for d, i in tasks]
    else:
        with ThreadPoolExecutor(workers) as pool:
            # map yields in submission order, so rows never depend on the schedule
            chunks = list(pool.map(lambda a: func(cfg, *a), tasks))
    rows = [r for chunk in chunks for r in chunk]
    result = SuiteResult(cfg, rows, _check_rows(cfg, rows), summarize(cfg, rows))
    if cfg.output:
        write_report(result, cfg.output)
    return result


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    for r in rows[1:]:
        cols += [c for c in r if c not in cols]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(cols)
    for r in rows:
        wr.writerow([_fmt(r[c]) if c in r else "" for c in cols])
    return buf.getvalue()


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_report(result: SuiteResult, path) -> None:
    path = Path(path)
    try:
        path.write_text(rows_to_csv(result.rows))
        cfg = asdict(result.config)
        cfg.pop("output")
        meta = {"config": cfg, "summary": result.summary, "failures": result.failures}
        sidecar_path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write report: {exc}") from None


# --- describe --------------------------------------------------------------------------------

_CONDITION_TEXT = {
    "c1": "(i)   joint A2-type bound  <u^-1>_I <v w^2t>_I / <w>_I^2t",
    "c2": "(ii)  Carleson intensity of mu_I against u^-1",
    "c3": "(iii) Carleson intensity of rho_I against v w^2t",
    "c4": "(iv)  norm of the positive operator P from L2(u) to L2(v)",
}


def read_report(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def describe(report_path, instance: int) -> str:
    """Readable breakdown of every row of one instance in a report."""
    try:
        rows = [r for r in read_report(report_path) if int(r["instance"]) == instance]
    except OSError as exc:
        raise ConfigError(f"cannot read report: {exc}") from None
    if not rows:
        raise KeyError(f"instance {instance} not found in {report_path}")
    meta = {}
    side = sidecar_path(report_path)
    if side.exists():
        meta = json.loads(side.read_text())
    suite = meta.get("config", {}).get("suite", "?")
    lines = [f"instance {instance} of suite {suite} ({report_path})"]
    first = rows[0]
    if suite in ("two-weight", "one-weight") and meta:
        cfg = meta["config"]
        depth = int(first["depth"])
        u, v, w = cascade_triple(depth, float(first["volatility"]),
                                 instance_seeds(cfg["seed"], instance), same_uv=suite == "one-weight")
        for name, wt in (("u", u), ("v", v), ("w", w)):
            a2 = ap_constant(wt, 2)
            r2 = rhp_constant(wt, 2)
            lines.append(f"  weight {name}: [A2] = {a2.value:.6g} at {a2.witness}, "
                         f"[RH2] = {r2.value:.6g} at {r2.witness}")
        if first.get("one_weight") == "1":
            lines.append("  u = v: one-weight specialization, (ii) and (iii) reduce to "
                         "RH1-type conditions on u and u^-1; bound sqrt(C1)+sqrt(C2)+sqrt(C3)+sqrt(C2 C3)")
    for r in rows:
        lines.append(f"  depth {r['depth']}, t = {r.get('t', '-')}:")
        for key, text in _CONDITION_TEXT.items():
            if key in r:
                wit = r.get(f"{key}_witness")
                lines.append(f"    {key} = {float(r[key]):.6g}  {text}" + (f"  [witness {wit}]" if wit else ""))
        if "combined" in r:
            lines.append(f"    sqrt(C1)+sqrt(C2)+sqrt(C3)+C4 = {float(r['combined']):.6g}")
            lines.append(f"    sup over signs (lower bound) = {float(r['sup_sigma']):.6g}, "
                         f"ratio to combined = {float(r['ratio_upper']):.4g}")
            lines.append(f"    necessity ratios sqrt(C_k)/sup: {float(r['ratio_c1']):.4g}, "
                         f"{float(r['ratio_c2']):.4g}, {float(r['ratio_c3']):.4g}")
        else:
            for k, val in r.items():
                if k not in ("instance", "depth", "t"):
                    lines.append(f"    {k} = {val}")
    return "\n".join(lines)
