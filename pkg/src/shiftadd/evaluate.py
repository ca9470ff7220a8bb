"""Ground-truth evaluation: run a DAG on inputs and score it against T."""

from __future__ import annotations

import math
import numpy as np

from .core import DEFAULT_EXPONENTS, ComputationDag, ExponentRange, TargetMatrix
from .wiring import Codebook, best_selection


class IncompleteDagError(ValueError):
    """Evaluation was asked for outputs that were never assigned."""


def evaluate_dag(dag: ComputationDag, x: np.ndarray) -> np.ndarray:
    """Forward-evaluate the DAG on an input vector.

    Each vertex value is the stored-order sum of its scaled sources; each
    output applies its assignment coefficient to its vertex value.
    """
    xv = np.asarray(x, dtype=np.float64)
    if xv.shape != (dag.num_inputs,):
        raise ValueError(f"expected input of shape ({dag.num_inputs},), got {xv.shape}")
    if dag.num_outputs == 0:
        raise IncompleteDagError("DAG has no outputs to evaluate")
    vals = np.empty(len(dag))
    vals[: dag.num_inputs] = xv
    for v in range(dag.num_inputs, len(dag)):
        w = dag.wiring(v)
        assert w is not None
        acc = 0.0
        for t in w.terms:
            acc += t.coeff.scale(vals[t.source])
        vals[v] = acc
    y = np.empty(dag.num_outputs)
    for row, out in enumerate(dag.outputs):
        if out is None:
            raise IncompleteDagError(f"output row {row} is unassigned")
        y[row] = out.coeff.scale(vals[out.source])
    return y


def codebook_matrix(dag: ComputationDag) -> np.ndarray:
    """Stacked dense vertex values, in index order (a copy)."""
    return dag.matrix_view().copy()


def effective_matrix(dag: ComputationDag) -> np.ndarray:
    """The (N, K) linear map the assigned outputs actually compute."""
    if not dag.all_outputs_assigned():
        raise IncompleteDagError("all outputs must be assigned")
    rows = [o.coeff.scale(dag.value(o.source)) for o in dag.outputs]
    return np.stack(rows)


def assigned_row_errors(t: TargetMatrix, dag: ComputationDag) -> np.ndarray:
    """Squared residual of each target row against its assigned output."""
    if t.rows != dag.num_outputs:
        raise ValueError(f"target has {t.rows} rows but DAG has {dag.num_outputs} outputs")
    errs = np.empty(t.rows)
    for n, out in enumerate(dag.outputs):
        if out is None:
            raise IncompleteDagError(f"output row {n} is unassigned")
        d = t.row(n) - out.coeff.scale(dag.value(out.source))
        errs[n] = np.sum(d * d)
    return errs


def sqnr_from_errors(frobenius_sq: float, error_sum: float) -> float:
    """SQNR in dB given the target energy and the summed row residuals."""
    if error_sum == 0.0:
        return math.inf
    return 10.0 * math.log10(frobenius_sq / error_sum)


def sqnr_db(
    t: TargetMatrix,
    dag: ComputationDag,
    exponents: ExponentRange = DEFAULT_EXPONENTS,
) -> float:
    """Signal-to-quantization-noise ratio of the codebook for T, in dB.

    Each row of T is matched by its best single (vertex, bitshift)
    selection, so this measures what the codebook can reach without any
    further additions.  Returns +inf when every row is matched exactly.
    """
    errs, _ = best_selection(t.matrix, Codebook.of(dag), exponents)
    return sqnr_from_errors(t.frobenius_sq, float(np.sum(errs)))


def selection_errors(
    t: TargetMatrix,
    dag: ComputationDag,
    exponents: ExponentRange = DEFAULT_EXPONENTS,
) -> np.ndarray:
    """Per-row squared errors of the best S=1 selection (SQNR numerator terms)."""
    errs, _ = best_selection(t.matrix, Codebook.of(dag), exponents)
    return errs
