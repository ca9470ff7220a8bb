"""Decomposition algorithms: grow a DAG that approximates a target matrix.

Three growth strategies share one sequential engine:

* ``fs_decompose``: unconstrained greedy growth, one vertex per step, the
  row with the largest squared-error reduction wins.
* ``ma_decompose``: the same engine with a depth-span constraint on every
  wiring (sources may differ in depth by at most ``delta_mu_max``) and a
  multiplicative depth penalty on row selection, so the DAG's parallel
  structure is tunable.  With the penalty off and the span unconstrained it
  reduces exactly to ``fs_decompose``.
* ``fp_decompose``: strictly layered growth; every layer rewires all rows
  over the previous layer only.

``slice_decompose`` splits wide targets column-wise, decomposes each slice
independently and recombines the partial outputs with per-row adder trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import (
    DEFAULT_EXPONENTS,
    ComputationDag,
    ExponentRange,
    ShiftCoefficient,
    TargetMatrix,
    WiringVector,
    evaluate_terms,
    make_unit_codebook,
)
from .evaluate import sqnr_from_errors
from .wiring import (
    Codebook,
    Triple,
    best_selection,
    combination_error,
    dmp_batch,
    rs_batch,
)

ALGORITHMS = ("fs", "fp", "ma", "sliced", "csd")
SOLVERS = ("dmp", "rs")


@dataclass(frozen=True)
class SchedulePhase:
    """One fan-in phase of a decomposition.

    The phase hands over to the next one once the SQNR gain per added
    vertex, measured over a sliding window of ``window`` vertices (default
    2N), drops below ``min_gain_db``.  A phase without a trigger runs to
    termination.
    """

    s: int = 2
    solver: str = "dmp"
    q: int = 16
    min_gain_db: Optional[float] = None
    window: Optional[int] = None

    def __post_init__(self) -> None:
        if self.s < 1:
            raise ValueError("phase fan-in must be >= 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown phase solver {self.solver!r}")
        if self.q < 1:
            raise ValueError("phase beam width must be >= 1")


@dataclass(frozen=True)
class DecomposeConfig:
    """Everything a decomposition run needs besides the target itself."""

    algorithm: str = "fs"
    s: int = 2
    solver: str = "dmp"
    q: int = 16
    s_schedule: Optional[tuple[SchedulePhase, ...]] = None
    target_sqnr_db: float = 40.0
    max_vertices: Optional[int] = None
    max_additions: Optional[int] = None
    delta_mu_max: float = math.inf
    depth_penalty: bool = True
    layers_max: int = 64
    slice_width: Optional[int] = None
    inner_algorithm: str = "ma"
    csd_digits: int = 4
    exponents: ExponentRange = DEFAULT_EXPONENTS
    beam_window: Optional[int] = 2

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if math.isnan(self.target_sqnr_db):
            raise ValueError("target_sqnr_db must not be NaN")
        if self.delta_mu_max < 0:
            raise ValueError("delta_mu_max must be nonnegative")
        if self.s < 1 or self.q < 1:
            raise ValueError("s and q must be >= 1")
        if self.slice_width is not None and self.slice_width < 1:
            raise ValueError("slice_width must be >= 1")
        if self.inner_algorithm not in ("fs", "fp", "ma"):
            raise ValueError(f"slicing cannot nest {self.inner_algorithm!r}")
        if self.csd_digits < 1:
            raise ValueError("csd_digits must be >= 1")

    def phases(self, num_rows: int) -> tuple[SchedulePhase, ...]:
        """Resolved fan-in schedule.

        The mixed algorithm defaults to a coarse S=2 greedy phase that
        hands over to S=3 beam search once the marginal gain flattens; the
        other algorithms run a single phase at the configured fan-in.
        """
        if self.s_schedule is not None:
            return self.s_schedule
        if self.algorithm == "ma":
            return (
                SchedulePhase(s=2, solver="dmp", min_gain_db=0.05, window=2 * num_rows),
                SchedulePhase(s=3, solver="rs", q=self.q),
            )
        return (SchedulePhase(s=self.s, solver=self.solver, q=self.q),)


@dataclass(frozen=True)
class IterationRecord:
    """State snapshot after one growth step (vertex, layer, or digit).

    ``n_inv`` counts internal arcs only; output-assignment inverters exist
    once outputs are assigned and are priced by the cost module.
    """

    step: int
    vertex: int
    row: int
    n_vertices: int
    n_add: int
    n_delay: int
    n_inv: int
    error_sum: float
    sqnr_db: float


@dataclass(frozen=True)
class DecompositionResult:
    """A finished decomposition: the DAG plus its score and history."""

    dag: ComputationDag
    row_errors: np.ndarray
    sqnr_db: float
    iterations: tuple[IterationRecord, ...]
    converged: bool
    flag: str = ""
    blocks: tuple["DecompositionResult", ...] = ()


class _CostTracker:
    """Incremental N_add / N_delay / N_inv bookkeeping during growth.

    Mirrors the cost-analysis formulas so sweep trajectories can be sampled
    without re-walking the DAG after every vertex.
    """

    def __init__(self, num_inputs: int) -> None:
        self.depths: list[int] = [0] * num_inputs
        self.max_succ: list[int] = [-1] * num_inputs
        self.n_add = 0
        self.n_inv = 0
        self.eq_sum = 0

    @property
    def n_delay(self) -> int:
        return self.n_add + self.eq_sum

    def depth_array(self) -> np.ndarray:
        return np.asarray(self.depths, dtype=np.int64)

    def add(self, triples: Sequence[Triple]) -> int:
        """Account for a new vertex; returns its depth."""
        depth = 1 + max(self.depths[src] for src, _, _ in triples)
        self.n_add += len(triples) - 1
        self.n_inv += sum(1 for _, sign, _ in triples if sign < 0)
        for src, _, _ in triples:
            prev = self.max_succ[src]
            if prev < 0:
                self.eq_sum += depth - self.depths[src] - 1
                self.max_succ[src] = depth
            elif depth > prev:
                self.eq_sum += depth - prev
                self.max_succ[src] = depth
        self.depths.append(depth)
        self.max_succ.append(-1)
        return depth


def _add_or_reuse(dag: ComputationDag, tracker: _CostTracker, triples: Sequence[Triple]) -> int:
    """Add a vertex unless an existing one has the exact same dense value."""
    value = evaluate_terms(WiringVector.from_triples(triples).terms, dag.matrix_view())
    existing = dag.find_vertex(value)
    if existing is not None:
        return existing
    vid = dag.add_vertex(WiringVector.from_triples(triples))
    tracker.add(triples)
    return vid


def _adder_tree(
    dag: ComputationDag,
    tracker: _CostTracker,
    leaves: list[tuple[int, ShiftCoefficient]],
) -> tuple[int, ShiftCoefficient]:
    """Balanced binary combination of (vertex, coefficient) leaves.

    The first tree level consumes the leaf coefficients as arc labels;
    deeper levels combine with +2^0.  An odd leaf rides up unchanged.
    """
    level = leaves
    while len(level) > 1:
        nxt: list[tuple[int, ShiftCoefficient]] = []
        for i in range(0, len(level) - 1, 2):
            (v0, c0), (v1, c1) = level[i], level[i + 1]
            vid = _add_or_reuse(
                dag,
                tracker,
                [(v0, c0.sign, c0.exponent), (v1, c1.sign, c1.exponent)],
            )
            nxt.append((vid, ShiftCoefficient(1, 0)))
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def _zero_rows(t: TargetMatrix) -> np.ndarray:
    return ~np.any(t.matrix != 0.0, axis=1)


def _require_nonzero_rows(t: TargetMatrix, algorithm: str) -> None:
    zero = np.flatnonzero(_zero_rows(t))
    if zero.size:
        raise ValueError(
            f"{algorithm} cannot assign outputs for exactly zero target rows {zero.tolist()}"
        )


# -- sequential engine (FS and MA) ---------------------------------------------


def _sequential_decompose(
    t: TargetMatrix,
    cfg: DecomposeConfig,
    use_penalty: bool,
    delta_mu_max: float,
    allow_zero_rows: bool = False,
) -> DecompositionResult:
    T = t.matrix
    n_rows, k = T.shape
    f2 = t.frobenius_sq
    exponents = cfg.exponents
    phases = cfg.phases(n_rows)
    max_vertices = cfg.max_vertices if cfg.max_vertices is not None else 64 * n_rows

    if not allow_zero_rows:
        _require_nonzero_rows(t, cfg.algorithm)
    zero_rows = _zero_rows(t)

    dag = make_unit_codebook(k, n_rows)
    tracker = _CostTracker(k)

    err1, _ = best_selection(T, Codebook.of(dag), exponents)
    records = [
        IterationRecord(
            step=0,
            vertex=-1,
            row=-1,
            n_vertices=0,
            n_add=0,
            n_delay=0,
            n_inv=0,
            error_sum=float(np.sum(err1)),
            sqnr_db=sqnr_from_errors(f2, float(np.sum(err1))),
        )
    ]

    flag = ""
    converged = False
    phase_idx = 0
    phase_start = 0

    while True:
        error_sum = float(np.sum(err1))
        sqnr = sqnr_from_errors(f2, error_sum)
        if sqnr > cfg.target_sqnr_db:
            converged = True
            break
        if dag.num_internal >= max_vertices:
            flag = "max_vertices"
            break
        if cfg.max_additions is not None and tracker.n_add >= cfg.max_additions:
            flag = "max_additions"
            break

        # Phase handover: gain per vertex over the phase's sliding window.
        phase = phases[phase_idx]
        if phase_idx + 1 < len(phases) and phase.min_gain_db is not None:
            window = phase.window if phase.window is not None else 2 * n_rows
            steps_in_phase = len(records) - 1 - phase_start
            if steps_in_phase >= window:
                now = records[-1].sqnr_db
                past = records[-1 - window].sqnr_db
                if math.isfinite(now) and (now - past) / window < phase.min_gain_db:
                    phase_idx += 1
                    phase_start = len(records) - 1
                    phase = phases[phase_idx]

        depths = tracker.depth_array()
        codebook = Codebook(dag.matrix_view(), depths=depths)
        if phase.solver == "dmp":
            terms_all, _ = dmp_batch(
                T, codebook, phase.s, exponents, max_depth_span=delta_mu_max
            )
        else:
            terms_all, _ = rs_batch(
                T,
                codebook,
                phase.s,
                phase.q,
                exponents,
                beam_window=cfg.beam_window,
                max_depth_span=delta_mu_max,
            )

        err_s = np.full(n_rows, np.inf)
        for n in range(n_rows):
            if terms_all[n]:
                err_s[n] = combination_error(T[n], codebook, terms_all[n])
        gains = err1 - err_s

        banned = zero_rows.copy()
        picked = -1
        while True:
            avail = ~banned & (gains > 0.0)
            if not avail.any():
                picked = -1
                break
            if use_penalty:
                lam = np.ones(n_rows)
                for n in range(n_rows):
                    if avail[n]:
                        lam[n] = 1.0 + max(depths[src] for src, _, _ in terms_all[n])
                objective = np.where(avail, lam * (error_sum - gains), np.inf)
                candidate = int(np.argmin(objective))
            else:
                candidate = int(np.argmax(np.where(avail, gains, -np.inf)))
            value = evaluate_terms(
                WiringVector.from_triples(terms_all[candidate]).terms, dag.matrix_view()
            )
            if dag.find_vertex(value) is not None:
                # The best wiring reproduces an existing vertex; adding it
                # would be dead hardware, so this row sits out the round.
                banned[candidate] = True
                continue
            picked = candidate
            break

        if picked < 0:
            flag = "stalled"
            break

        vid = dag.add_vertex(WiringVector.from_triples(terms_all[picked]))
        tracker.add(terms_all[picked])

        new_row = dag.matrix_view()[vid : vid + 1]
        new_err, _ = best_selection(T, Codebook(new_row), exponents)
        err1 = np.minimum(err1, new_err)

        records.append(
            IterationRecord(
                step=len(records),
                vertex=vid,
                row=picked,
                n_vertices=dag.num_internal,
                n_add=tracker.n_add,
                n_delay=tracker.n_delay,
                n_inv=tracker.n_inv,
                error_sum=float(np.sum(err1)),
                sqnr_db=sqnr_from_errors(f2, float(np.sum(err1))),
            )
        )

    # Final output assignment: a fresh full S=1 sweep over the codebook.
    final_err, picks = best_selection(T, Codebook.of(dag), exponents)
    for n, pick in enumerate(picks):
        if pick is not None:
            src, sign, exp = pick
            dag.assign_output(n, src, ShiftCoefficient(sign, exp))
    sqnr = sqnr_from_errors(f2, float(np.sum(final_err)))
    return DecompositionResult(
        dag=dag,
        row_errors=final_err,
        sqnr_db=sqnr,
        iterations=tuple(records),
        converged=sqnr > cfg.target_sqnr_db,
        flag=flag,
    )


def fs_decompose(t: TargetMatrix, cfg: DecomposeConfig) -> DecompositionResult:
    """Greedy sequential decomposition, no structural constraints."""
    if cfg.algorithm != "fs":
        raise ValueError(f"config selects {cfg.algorithm!r}, not fs")
    return _sequential_decompose(t, cfg, use_penalty=False, delta_mu_max=math.inf)


def ma_decompose(
    t: TargetMatrix, cfg: DecomposeConfig, allow_zero_rows: bool = False
) -> DecompositionResult:
    """Depth-aware sequential decomposition.

    Wirings may only combine vertices whose depths differ by at most
    ``cfg.delta_mu_max``; row selection weighs each candidate update by
    one plus the depth of its deepest source (``cfg.depth_penalty=False``
    switches the weight off, recovering the plain greedy selection).
    """
    if cfg.algorithm != "ma":
        raise ValueError(f"config selects {cfg.algorithm!r}, not ma")
    return _sequential_decompose(
        t,
        cfg,
        use_penalty=cfg.depth_penalty,
        delta_mu_max=cfg.delta_mu_max,
        allow_zero_rows=allow_zero_rows,
    )


# -- fully parallel (layered) ----------------------------------------------------


def _layer_selection(
    T: np.ndarray,
    dag: ComputationDag,
    layer_ids: list[int],
    exponents: ExponentRange,
) -> tuple[np.ndarray, list[Optional[Triple]]]:
    """Best single (vertex, shift) per row, restricted to one layer."""
    ids = np.asarray(sorted(set(layer_ids)), dtype=np.int64)
    codebook = Codebook(dag.matrix_view()[ids], ids=ids)
    errs, picks = best_selection(T, codebook, exponents)
    remapped: list[Optional[Triple]] = []
    for pick in picks:
        if pick is None:
            remapped.append(None)
        else:
            remapped.append((codebook.to_global(pick[0]), pick[1], pick[2]))
    return errs, remapped


def fp_decompose(
    t: TargetMatrix, cfg: DecomposeConfig, allow_zero_rows: bool = False
) -> DecompositionResult:
    """Strictly layered decomposition.

    Every layer rewires all target rows over the vertices of the previous
    layer only, so each new vertex has all sources one level below it.  A
    layer that fails to reduce the summed error is discarded and the run
    stops with a ``stagnated`` flag.  Outputs select from the final layer.
    """
    if cfg.algorithm != "fp":
        raise ValueError(f"config selects {cfg.algorithm!r}, not fp")
    if not allow_zero_rows:
        _require_nonzero_rows(t, "fp")

    T = t.matrix
    n_rows, k = T.shape
    f2 = t.frobenius_sq
    exponents = cfg.exponents

    dag = make_unit_codebook(k, n_rows)
    tracker = _CostTracker(k)

    # Layer 0 is the unit codebook; rows start from their best unit pick.
    layer_ids: list[int] = list(range(k))
    row_vertex: list[Optional[int]] = [None] * n_rows
    row_err, picks0 = _layer_selection(T, dag, layer_ids, exponents)
    for n, pick in enumerate(picks0):
        if pick is not None:
            row_vertex[n] = pick[0]

    records = [
        IterationRecord(
            step=0,
            vertex=-1,
            row=-1,
            n_vertices=0,
            n_add=0,
            n_delay=0,
            n_inv=0,
            error_sum=float(np.sum(row_err)),
            sqnr_db=sqnr_from_errors(f2, float(np.sum(row_err))),
        )
    ]

    flag = ""
    converged = sqnr_from_errors(f2, float(np.sum(row_err))) > cfg.target_sqnr_db
    wiring_err = row_err.copy()

    if not converged:
        for layer in range(1, cfg.layers_max + 1):
            ids = np.asarray(sorted(set(layer_ids)), dtype=np.int64)
            codebook = Codebook(dag.matrix_view()[ids], ids=ids)
            if cfg.solver == "dmp":
                local_terms, _ = dmp_batch(T, codebook, cfg.s, exponents)
            else:
                local_terms, _ = rs_batch(
                    T, codebook, cfg.s, cfg.q, exponents, beam_window=cfg.beam_window
                )

            new_err = wiring_err.copy()
            remapped: list[list[Triple]] = []
            for n in range(n_rows):
                terms_n = [
                    (codebook.to_global(src), sign, exp) for src, sign, exp in local_terms[n]
                ]
                remapped.append(terms_n)
                if terms_n:
                    new_err[n] = combination_error(T[n], codebook, local_terms[n])

            if not float(np.sum(new_err)) < float(np.sum(wiring_err)):
                flag = "stagnated"
                break

            new_layer: list[int] = []
            for n in range(n_rows):
                if remapped[n]:
                    vid = _add_or_reuse(dag, tracker, remapped[n])
                    row_vertex[n] = vid
                # Rows the layer could not improve ride through on their
                # previous vertex.
                if row_vertex[n] is not None:
                    new_layer.append(row_vertex[n])
            layer_ids = new_layer
            wiring_err = new_err

            records.append(
                IterationRecord(
                    step=layer,
                    vertex=-1,
                    row=-1,
                    n_vertices=dag.num_internal,
                    n_add=tracker.n_add,
                    n_delay=tracker.n_delay,
                    n_inv=tracker.n_inv,
                    error_sum=float(np.sum(wiring_err)),
                    sqnr_db=sqnr_from_errors(f2, float(np.sum(wiring_err))),
                )
            )
            if sqnr_from_errors(f2, float(np.sum(wiring_err))) > cfg.target_sqnr_db:
                converged = True
                break
        else:
            flag = "layers_max"

    # Outputs: best selection restricted to the final layer, never worse
    # than keeping each row's own layer vertex unshifted.
    final_err, picks = _layer_selection(T, dag, layer_ids, exponents)
    for n in range(n_rows):
        pick = picks[n]
        own = row_vertex[n]
        if own is not None and not dag.is_input(own):
            d = T[n] - dag.value(own)
            own_err = float(np.sum(d * d))
            if pick is None or own_err < final_err[n]:
                pick = (own, 1, 0)
                final_err[n] = own_err
        if pick is not None:
            src, sign, exp = pick
            dag.assign_output(n, src, ShiftCoefficient(sign, exp))

    sqnr = sqnr_from_errors(f2, float(np.sum(final_err)))
    return DecompositionResult(
        dag=dag,
        row_errors=final_err,
        sqnr_db=sqnr,
        iterations=tuple(records),
        converged=sqnr > cfg.target_sqnr_db,
        flag=flag,
    )


# -- column slicing ----------------------------------------------------------------


def _decompose_block(
    block: TargetMatrix, cfg: DecomposeConfig, algorithm: str
) -> DecompositionResult:
    inner = replace(cfg, algorithm=algorithm, slice_width=None)
    if algorithm == "fs":
        # FS rejects zero rows; route through the shared engine directly so
        # a slice containing a zero row still decomposes.
        return _sequential_decompose(
            block, inner, use_penalty=False, delta_mu_max=math.inf, allow_zero_rows=True
        )
    if algorithm == "ma":
        return ma_decompose(block, inner, allow_zero_rows=True)
    return fp_decompose(block, inner, allow_zero_rows=True)


def slice_decompose(t: TargetMatrix, cfg: DecomposeConfig) -> DecompositionResult:
    """Column-sliced decomposition with per-row recombination trees.

    The target is cut into column blocks of ``cfg.slice_width``; each block
    is decomposed independently by ``cfg.inner_algorithm`` at the same
    target SQNR (block SQNRs above the target guarantee the merged SQNR is
    too, since row residuals of different blocks live on disjoint columns).
    Block outputs are summed per row by a balanced adder tree.
    """
    if cfg.algorithm != "sliced":
        raise ValueError(f"config selects {cfg.algorithm!r}, not sliced")
    if cfg.slice_width is None:
        raise ValueError("sliced decomposition needs slice_width")
    _require_nonzero_rows(t, "sliced")

    T = t.matrix
    n_rows, k = T.shape
    width = min(cfg.slice_width, k)
    bounds = [(c, min(c + width, k)) for c in range(0, k, width)]

    dag = make_unit_codebook(k, n_rows)
    tracker = _CostTracker(k)
    leaves: list[list[tuple[int, ShiftCoefficient]]] = [[] for _ in range(n_rows)]
    block_results: list[DecompositionResult] = []
    flags: list[str] = []

    for bi, (c0, c1) in enumerate(bounds):
        sub = T[:, c0:c1]
        if not np.any(sub):
            continue  # an all-zero slice contributes nothing
        res = _decompose_block(TargetMatrix(sub), cfg, cfg.inner_algorithm)
        block_results.append(res)
        if res.flag:
            flags.append(f"block{bi}:{res.flag}")

        # Graft the block DAG onto the merged one.  Local input j is global
        # input c0 + j; internal vertices are remapped in index order.
        bdag = res.dag
        local_to_global: dict[int, int] = {j: c0 + j for j in range(bdag.num_inputs)}
        for v in range(bdag.num_inputs, len(bdag)):
            w = bdag.wiring(v)
            assert w is not None
            triples = [
                (local_to_global[term.source], term.coeff.sign, term.coeff.exponent)
                for term in w.terms
            ]
            local_to_global[v] = _add_or_reuse(dag, tracker, triples)
        for n in range(n_rows):
            out = bdag.output(n)
            if out is not None:
                leaves[n].append((local_to_global[out.source], out.coeff))

    for n in range(n_rows):
        if not leaves[n]:
            raise ValueError(f"target row {n} vanished in every slice")
        src, coeff = _adder_tree(dag, tracker, leaves[n])
        dag.assign_output(n, src, coeff)

    row_errors = np.empty(n_rows)
    for n, out in enumerate(dag.outputs):
        assert out is not None
        d = T[n] - out.coeff.scale(dag.value(out.source))
        row_errors[n] = np.sum(d * d)
    sqnr = sqnr_from_errors(t.frobenius_sq, float(np.sum(row_errors)))
    return DecompositionResult(
        dag=dag,
        row_errors=row_errors,
        sqnr_db=sqnr,
        iterations=(),
        converged=sqnr > cfg.target_sqnr_db,
        flag=";".join(flags),
        blocks=tuple(block_results),
    )


def decompose(t: TargetMatrix, cfg: DecomposeConfig) -> DecompositionResult:
    """Dispatch on ``cfg.algorithm``."""
    if cfg.algorithm == "fs":
        return fs_decompose(t, cfg)
    if cfg.algorithm == "fp":
        return fp_decompose(t, cfg)
    if cfg.algorithm == "ma":
        return ma_decompose(t, cfg)
    if cfg.algorithm == "sliced":
        return slice_decompose(t, cfg)
    from .csd import csd_decompose

    return csd_decompose(t, cfg)
