"""Command-line front end.

Subcommands::

    decompose   build a DAG for a (generated or loaded) target matrix
    sweep       run an algorithm grid over random targets, emit CSV
    eval        score a saved DAG (SQNR, costs) or run it on an input
    export      convert a saved DAG to JSON or DOT

Exit codes: 0 success, 1 usage error, 2 input or schema error,
3 decomposition did not reach its target SQNR.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .core import CostModel, ExponentRange, TargetMatrix
from .cost import total_cost
from .csd import csd_decompose
from .decompose import ALGORITHMS, DecomposeConfig, SchedulePhase, decompose
from .evaluate import evaluate_dag, sqnr_db
from .experiments import ExperimentSpec, SweepGrid, gen_gaussian_matrix, run_sweep, rows_to_csv
from .serialize import SchemaError, export_dag, format_float, import_dag, load_matrix


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(message)


def _parse_schedule(text: str) -> tuple[SchedulePhase, ...]:
    """Parse an S-schedule like ``2:dmp@0.05,3:rs:16``.

    Each phase is ``S[:solver[:q]]`` with an optional ``@gain[/window]``
    handover trigger (advance once the SQNR gain per added vertex over the
    window drops below ``gain`` dB).
    """
    phases = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        head, _, trigger = chunk.partition("@")
        fields = head.split(":")
        try:
            s = int(fields[0])
            solver = fields[1] if len(fields) > 1 and fields[1] else "dmp"
            q = int(fields[2]) if len(fields) > 2 and fields[2] else 16
            min_gain = None
            window = None
            if trigger:
                gain_s, _, window_s = trigger.partition("/")
                min_gain = float(gain_s)
                window = int(window_s) if window_s else None
        except ValueError as e:
            raise UsageError(f"bad schedule phase {chunk!r}: {e}") from e
        phases.append(SchedulePhase(s=s, solver=solver, q=q, min_gain_db=min_gain, window=window))
    if not phases:
        raise UsageError("empty S-schedule")
    return tuple(phases)


def _parse_dmax(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(int(text))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", default="ma", help="fs|fp|ma|sliced|csd (sweep: comma list)")
    p.add_argument("--s", type=int, default=2, help="fan-in budget per fundamental operation")
    p.add_argument("--s-schedule", default=None, help="phases like '2:dmp@0.05,3:rs:16'")
    p.add_argument("--dmax", default="inf", help="max source-depth span (int or 'inf'; sweep: comma list)")
    p.add_argument("--q", type=int, default=16, help="beam width for the rs solver")
    p.add_argument("--target-sqnr-db", default="40", help="target SQNR in dB (sweep: comma list = grid)")
    p.add_argument("--rows", type=int, default=16)
    p.add_argument("--cols", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cost-add", type=float, default=20.0)
    p.add_argument("--cost-delay", type=float, default=20.0)
    p.add_argument("--cost-inv", type=float, default=2.0)
    p.add_argument("--emin", type=int, default=-63)
    p.add_argument("--emax", type=int, default=63)
    p.add_argument("--slice-width", type=int, default=None)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", default=None, choices=["csv", "json", "dot"])


def _build_parser() -> _Parser:
    parser = _Parser(prog="shiftadd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_dec = sub.add_parser("decompose", help="decompose one target matrix")
    p_dec.add_argument("matrix", nargs="?", default=None, help="matrix file (text); generated if omitted")
    _add_common(p_dec)

    p_sweep = sub.add_parser("sweep", help="run an experiment sweep")
    p_sweep.add_argument("--trials", type=int, default=10)
    _add_common(p_sweep)

    p_eval = sub.add_parser("eval", help="evaluate a saved DAG")
    p_eval.add_argument("dag", help="DAG JSON file")
    p_eval.add_argument("matrix", nargs="?", default=None, help="target matrix file for SQNR")
    p_eval.add_argument("--x", default=None, help="comma-separated input vector to run")
    _add_common(p_eval)

    p_exp = sub.add_parser("export", help="convert a saved DAG")
    p_exp.add_argument("dag", help="DAG JSON file")
    _add_common(p_exp)
    return parser


def _config_from_args(args, algorithm: str, dmax: float) -> DecomposeConfig:
    schedule = _parse_schedule(args.s_schedule) if args.s_schedule else None
    try:
        target = float(args.target_sqnr_db.split(",")[0])
    except ValueError as e:
        raise UsageError(f"bad --target-sqnr-db: {e}") from e
    try:
        return DecomposeConfig(
            algorithm=algorithm,
            s=args.s,
            q=args.q,
            s_schedule=schedule,
            target_sqnr_db=target,
            delta_mu_max=dmax,
            slice_width=args.slice_width,
            exponents=ExponentRange(args.emin, args.emax),
        )
    except ValueError as e:
        raise UsageError(str(e)) from e


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_safe(obj):
    if isinstance(obj, float):
        return format_float(obj) if math.isinf(obj) else obj
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _cmd_decompose(args) -> int:
    cfg = _config_from_args(args, args.algorithm, _parse_dmax(args.dmax))
    if args.matrix:
        target = TargetMatrix(load_matrix(args.matrix))
    else:
        target = gen_gaussian_matrix(args.rows, args.cols, args.seed)
    result = decompose(target, cfg) if cfg.algorithm != "csd" else csd_decompose(target, cfg)
    model = CostModel(args.cost_add, args.cost_delay, args.cost_inv)
    report = total_cost(result.dag, model)
    summary = {
        "algorithm": cfg.algorithm,
        "rows": target.rows,
        "cols": target.cols,
        "vertices": len(result.dag),
        "internal": result.dag.num_internal,
        "sqnr_db": result.sqnr_db,
        "target_sqnr_db": cfg.target_sqnr_db,
        "converged": result.converged,
        "flag": result.flag,
        "n_add": report.n_add,
        "n_delay": report.n_delay,
        "n_inv": report.n_inv,
        "cost_adders": model.c_add * report.n_add,
        "cost_total": report.total,
    }
    print(json.dumps(_json_safe(summary), indent=2))
    if args.out:
        fmt = args.format or "json"
        if fmt == "csv":
            raise UsageError("decompose writes a DAG; use --format json or dot")
        _emit(export_dag(result.dag, fmt), args.out)
    return 0 if result.converged else 3


def _cmd_sweep(args) -> int:
    algorithms = [a.strip() for a in args.algorithm.split(",") if a.strip()]
    for a in algorithms:
        if a not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {a!r}")
    dmaxes = [_parse_dmax(d) for d in str(args.dmax).split(",") if d.strip()]
    try:
        grid_values = tuple(float(v) for v in args.target_sqnr_db.split(","))
    except ValueError as e:
        raise UsageError(f"bad --target-sqnr-db grid: {e}") from e
    configs = []
    for a in algorithms:
        uses_dmax = a in ("ma", "sliced")
        for d in dmaxes if uses_dmax else [math.inf]:
            configs.append(_config_from_args(args, a, d))
    spec = ExperimentSpec(
        rows=args.rows,
        cols=args.cols,
        trials=args.trials,
        seed=args.seed,
        configs=tuple(configs),
        grid=SweepGrid("target_sqnr_db", grid_values),
        cost_model=CostModel(args.cost_add, args.cost_delay, args.cost_inv),
        out=None,
    )
    data, aggregates = run_sweep(spec)
    text = rows_to_csv(data + aggregates)
    _emit(text, args.out)
    return 0


def _cmd_eval(args) -> int:
    with open(args.dag, "r", encoding="utf-8") as fh:
        dag = import_dag(fh.read(), ExponentRange(args.emin, args.emax))
    model = CostModel(args.cost_add, args.cost_delay, args.cost_inv)
    report = total_cost(dag, model)
    summary = {
        "k": dag.num_inputs,
        "vertices": len(dag),
        "outputs": dag.num_outputs,
        "n_add": report.n_add,
        "n_delay": report.n_delay,
        "n_inv": report.n_inv,
        "cost_total": report.total,
    }
    if args.x is not None:
        x = np.array([float(v) for v in args.x.split(",")])
        summary["y"] = list(evaluate_dag(dag, x))
    if args.matrix:
        target = TargetMatrix(load_matrix(args.matrix))
        summary["sqnr_db"] = sqnr_db(target, dag, ExponentRange(args.emin, args.emax))
    print(json.dumps(_json_safe(summary), indent=2))
    return 0


def _cmd_export(args) -> int:
    with open(args.dag, "r", encoding="utf-8") as fh:
        dag = import_dag(fh.read(), ExponentRange(args.emin, args.emax))
    fmt = args.format or "dot"
    if fmt == "csv":
        raise UsageError("export emits a DAG; use --format json or dot")
    _emit(export_dag(dag, fmt), args.out)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "decompose":
            return _cmd_decompose(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_export(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (SchemaError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
