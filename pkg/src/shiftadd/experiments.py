"""Experiment runner: seeded random targets, algorithm sweeps, CSV output.

Determinism contract: matrices come from numpy's PCG64 generator via
``Generator.standard_normal`` (ziggurat transform); per-trial seeds are
spawned from one root ``SeedSequence``; trials execute and serialize in a
fixed order.  With timing capture disabled, rerunning a spec produces a
byte-identical CSV.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .core import CostModel, TargetMatrix
from .cost import total_cost
from .decompose import DecomposeConfig, decompose
from .serialize import format_float

CSV_HEADER = (
    "algorithm,s,dmax,q,grid,trial,sqnr_db,n_add,n_delay,n_inv,"
    "cost_adders,cost_total,wall_ms,flag"
)


def gen_gaussian_matrix(
    n: int, k: int, seed: Union[int, np.random.SeedSequence]
) -> TargetMatrix:
    """Standard-normal target matrix from a documented deterministic RNG.

    Same seed, same matrix, on any platform with the same numpy stream
    (PCG64 + ziggurat standard_normal).
    """
    if n < 1 or k < 1:
        raise ValueError(f"invalid dimensions {n}x{k}")
    rng = np.random.default_rng(seed)
    return TargetMatrix(rng.standard_normal((n, k)))


@dataclass(frozen=True)
class SweepGrid:
    """The swept variable: a target-SQNR grid or an addition-budget grid."""

    kind: str  # "target_sqnr_db" | "max_additions"
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("target_sqnr_db", "max_additions"):
            raise ValueError(f"unknown sweep variable {self.kind!r}")
        if not self.values:
            raise ValueError("sweep grid must not be empty")


@dataclass(frozen=True)
class ExperimentSpec:
    """A complete sweep: target shape, trials, algorithm grid, sweep grid."""

    rows: int
    cols: int
    trials: int
    seed: int
    configs: tuple[DecomposeConfig, ...]
    grid: SweepGrid
    cost_model: CostModel = CostModel()
    out: Optional[str] = None
    include_timing: bool = True

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.configs:
            raise ValueError("need at least one config")


def _dmax_str(cfg: DecomposeConfig) -> str:
    if math.isinf(cfg.delta_mu_max):
        return "inf"
    return str(int(cfg.delta_mu_max))


def _grid_str(value: float) -> str:
    if math.isinf(value):
        return "inf"
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def _row(
    cfg: DecomposeConfig,
    grid_value: float,
    trial: Union[int, str],
    sqnr_db: float,
    n_add: int,
    n_delay: int,
    n_inv: int,
    model: CostModel,
    wall_ms: float,
    flag: str,
    f2: float,
    err_sum: float,
) -> dict:
    return {
        "algorithm": cfg.algorithm,
        "s": cfg.s,
        "dmax": _dmax_str(cfg),
        "q": cfg.q,
        "grid": _grid_str(grid_value),
        "trial": trial,
        "sqnr_db": sqnr_db,
        "n_add": n_add,
        "n_delay": n_delay,
        "n_inv": n_inv,
        "cost_adders": model.c_add * n_add,
        "cost_total": model.total(n_add, n_delay, n_inv),
        "wall_ms": wall_ms,
        "flag": flag,
        "_f2": f2,
        "_err_sum": err_sum,
    }


def _target_mode_rows(
    cfg: DecomposeConfig,
    grid_values: Sequence[float],
    t: TargetMatrix,
    trial: int,
    model: CostModel,
    timing: bool,
) -> list[dict]:
    rows = []
    for value in grid_values:
        run_cfg = replace(cfg, target_sqnr_db=float(value))
        start = time.perf_counter()
        try:
            res = decompose(t, run_cfg)
        except ValueError as e:
            rows.append(
                _row(cfg, value, trial, math.nan, 0, 0, 0, model, 0.0,
                     f"error:{e}", t.frobenius_sq, math.nan)
            )
            continue
        wall = (time.perf_counter() - start) * 1e3 if timing else 0.0
        report = total_cost(res.dag, model)
        rows.append(
            _row(
                cfg, value, trial, res.sqnr_db,
                report.n_add, report.n_delay, report.n_inv,
                model, wall, res.flag, t.frobenius_sq,
                float(np.sum(res.row_errors)),
            )
        )
    return rows


def _budget_mode_rows(
    cfg: DecomposeConfig,
    grid_values: Sequence[float],
    t: TargetMatrix,
    trial: int,
    model: CostModel,
    timing: bool,
) -> list[dict]:
    """One decomposition to the largest budget; smaller budgets are read
    off the growth trajectory (a budget-capped run is a prefix of it).

    Trajectory inverter counts cover internal arcs only; the final output
    bitshift stage is not priced at intermediate budgets.
    """
    budget = int(max(grid_values))
    run_cfg = replace(cfg, target_sqnr_db=math.inf, max_additions=budget)
    start = time.perf_counter()
    try:
        res = decompose(t, run_cfg)
    except ValueError as e:
        return [
            _row(cfg, value, trial, math.nan, 0, 0, 0, model, 0.0,
                 f"error:{e}", t.frobenius_sq, math.nan)
            for value in grid_values
        ]
    wall = (time.perf_counter() - start) * 1e3 if timing else 0.0
    rows = []
    for value in grid_values:
        rec = None
        for r in res.iterations:
            if r.n_add <= value:
                rec = r
            else:
                break
        if rec is None:
            rec = res.iterations[0]
            flag = "over_budget"
        else:
            flag = ""
        rows.append(
            _row(
                cfg, value, trial, rec.sqnr_db,
                rec.n_add, rec.n_delay, rec.n_inv,
                model, wall, flag, t.frobenius_sq, rec.error_sum,
            )
        )
    return rows


def run_sweep(spec: ExperimentSpec) -> tuple[list[dict], list[dict]]:
    """Execute a sweep; returns (data rows, aggregate rows) and writes CSV.

    One data row per (config, grid point, trial), plus one aggregate row
    per (config, grid point) with ``trial == "mean"``.  Aggregate SQNR sums
    squared errors and target energies across trials before taking dB;
    counts and costs are plain means.  Per-trial failures become flagged
    rows and never abort the sweep.
    """
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.trials)
    data: list[dict] = []
    for cfg in spec.configs:
        for trial in range(spec.trials):
            t = gen_gaussian_matrix(spec.rows, spec.cols, seeds[trial])
            if spec.grid.kind == "target_sqnr_db":
                rows = _target_mode_rows(
                    cfg, spec.grid.values, t, trial, spec.cost_model, spec.include_timing
                )
            else:
                rows = _budget_mode_rows(
                    cfg, spec.grid.values, t, trial, spec.cost_model, spec.include_timing
                )
            data.extend(rows)

    aggregates: list[dict] = []
    for cfg in spec.configs:
        for value in spec.grid.values:
            group = [
                r
                for r in data
                if r["algorithm"] == cfg.algorithm
                and r["s"] == cfg.s
                and r["dmax"] == _dmax_str(cfg)
                and r["q"] == cfg.q
                and r["grid"] == _grid_str(value)
                and isinstance(r["trial"], int)
            ]
            ok = [r for r in group if not math.isnan(r["_err_sum"])]
            if not ok:
                continue
            f2 = sum(r["_f2"] for r in ok)
            err = sum(r["_err_sum"] for r in ok)
            sqnr = math.inf if err == 0.0 else 10.0 * math.log10(f2 / err)
            n_flagged = sum(1 for r in group if r["flag"])
            aggregates.append(
                {
                    "algorithm": cfg.algorithm,
                    "s": cfg.s,
                    "dmax": _dmax_str(cfg),
                    "q": cfg.q,
                    "grid": _grid_str(value),
                    "trial": "mean",
                    "sqnr_db": sqnr,
                    "n_add": float(np.mean([r["n_add"] for r in ok])),
                    "n_delay": float(np.mean([r["n_delay"] for r in ok])),
                    "n_inv": float(np.mean([r["n_inv"] for r in ok])),
                    "cost_adders": float(np.mean([r["cost_adders"] for r in ok])),
                    "cost_total": float(np.mean([r["cost_total"] for r in ok])),
                    "wall_ms": float(np.mean([r["wall_ms"] for r in ok])),
                    "flag": f"flagged:{n_flagged}" if n_flagged else "",
                    "_f2": f2,
                    "_err_sum": err,
                }
            )

    if spec.out:
        write_csv(spec.out, data + aggregates)
    return data, aggregates


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return format_float(value) if not math.isnan(value) else "nan"
    return str(value)


def rows_to_csv(rows: Sequence[dict]) -> str:
    lines = [CSV_HEADER]
    columns = CSV_HEADER.split(",")
    for r in rows:
        lines.append(",".join(_csv_cell(r[c]) for c in columns))
    return "\n".join(lines) + "\n"


def write_csv(path: str, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(rows_to_csv(rows))


def interpolate_curve(
    costs: Sequence[float], sqnrs: Sequence[float], grid: Sequence[float]
) -> np.ndarray:
    """Linear interpolation of a (cost, SQNR) curve onto a common grid.

    Points are sorted by cost; duplicate costs are averaged.  This is how
    two algorithms are compared "at matched cost" when their natural grids
    do not line up.
    """
    xs = np.asarray(costs, dtype=np.float64)
    ys = np.asarray(sqnrs, dtype=np.float64)
    order = np.argsort(xs, kind="stable")
    xs, ys = xs[order], ys[order]
    ux, inverse = np.unique(xs, return_inverse=True)
    uy = np.zeros_like(ux)
    counts = np.zeros_like(ux)
    np.add.at(uy, inverse, ys)
    np.add.at(counts, inverse, 1.0)
    uy /= counts
    return np.interp(np.asarray(grid, dtype=np.float64), ux, uy)
