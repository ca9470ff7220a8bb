import numpy as np
import pytest

from shiftadd.core import (
    ComputationDag,
    ShiftCoefficient,
    WiringVector,
    make_unit_codebook,
)


def random_dag(
    rng: np.random.Generator,
    k: int | None = None,
    internal: int | None = None,
    s_max: int = 3,
    exp_lo: int = -6,
    exp_hi: int = 6,
    with_outputs: bool = True,
) -> ComputationDag:
    """A random structurally-valid DAG for cost/serialization tests."""
    if k is None:
        k = int(rng.integers(1, 5))
    if internal is None:
        internal = int(rng.integers(0, 8))
    n_out = int(rng.integers(1, 5)) if with_outputs else 0
    dag = make_unit_codebook(k, num_outputs=n_out)
    for _ in range(internal):
        for _attempt in range(10):
            m = int(rng.integers(1, s_max + 1))
            triples = [
                (
                    int(rng.integers(0, len(dag))),
                    int(rng.choice([1, -1])),
                    int(rng.integers(exp_lo, exp_hi + 1)),
                )
                for _ in range(m)
            ]
            wiring = WiringVector.from_triples(triples)
            # Reject exact cancellations; searches never produce them and a
            # zero vertex would be a degenerate codeword.
            value = wiring.dense(len(dag)) @ dag.matrix_view()
            if np.any(value):
                dag.add_vertex(wiring)
                break
    if with_outputs:
        for row in range(n_out):
            dag.assign_output(
                row,
                int(rng.integers(0, len(dag))),
                ShiftCoefficient(int(rng.choice([1, -1])), int(rng.integers(exp_lo, exp_hi + 1))),
            )
    return dag


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
