"""Depths, operation counts and total pipelined hardware cost of a DAG.

The pipelining model places a latch after every adder.  A vertex whose
successors sit more than one level deeper needs extra latches on the idle
path: a source at depth d feeding a consumer at depth d' costs d' - d - 1
equalization latches, accounted once per source vertex against its deepest
consumer.  Vertices that feed nothing (the outputs) add no equalization
term; aligning outputs that finish at different depths is the consumer's
problem and can be priced in with ``align_outputs=True``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import ADDERS_ONLY, ComputationDag, CostModel, CostReport


@dataclass(frozen=True)
class DepthTable:
    """Per-vertex depth (longest path from any vertex) plus output depths."""

    depths: tuple[int, ...]
    output_depths: tuple[Optional[int], ...]


def compute_depths(dag: ComputationDag) -> DepthTable:
    """Longest-path depth of every vertex; inputs sit at depth 0.

    A single forward pass in index order suffices because terms only
    reference earlier vertices.
    """
    depths = [0] * len(dag)
    for v in range(dag.num_inputs, len(dag)):
        w = dag.wiring(v)
        assert w is not None
        depths[v] = 1 + max(depths[t.source] for t in w.terms)
    out = tuple(
        depths[o.source] if o is not None else None for o in dag.outputs
    )
    return DepthTable(tuple(depths), out)


def count_additions(dag: ComputationDag) -> int:
    """Sum of (indegree - 1) over internal vertices.

    Indegree counts term multiplicity; a pass-through vertex with a single
    term costs nothing.
    """
    return sum(dag.indegree(v) - 1 for v in range(dag.num_inputs, len(dag)))


def count_delays(dag: ComputationDag, align_outputs: bool = False) -> int:
    """Latches for a pipelined implementation.

    One latch per adder, plus per source vertex with at least one consumer
    the gap between its deepest consumer and itself, minus one.  With
    ``align_outputs`` the outputs are padded to the deepest assigned output
    as well (off by default; the base formula prices only internal arcs).
    """
    table = compute_depths(dag)
    depths = table.depths
    max_succ = [-1] * len(dag)
    for v in range(dag.num_inputs, len(dag)):
        w = dag.wiring(v)
        assert w is not None
        for t in w.terms:
            if depths[v] > max_succ[t.source]:
                max_succ[t.source] = depths[v]
    total = count_additions(dag)
    for v in range(len(dag)):
        if max_succ[v] >= 0:
            total += max_succ[v] - depths[v] - 1
    if align_outputs:
        assigned = [d for d in table.output_depths if d is not None]
        if assigned:
            deepest = max(assigned)
            total += sum(deepest - d for d in assigned)
    return total


def count_inverters(dag: ComputationDag) -> int:
    """Arcs with a negative coefficient, output assignments included.

    A negative output selection still costs a physical inverter.
    """
    n = 0
    for v in range(dag.num_inputs, len(dag)):
        w = dag.wiring(v)
        assert w is not None
        n += sum(1 for t in w.terms if t.coeff.sign < 0)
    n += sum(1 for o in dag.outputs if o is not None and o.coeff.sign < 0)
    return n


def total_cost(
    dag: ComputationDag,
    model: CostModel = CostModel(),
    align_outputs: bool = False,
) -> CostReport:
    """Full cost report: counts, weighted total and the depth table."""
    table = compute_depths(dag)
    n_add = count_additions(dag)
    n_delay = count_delays(dag, align_outputs=align_outputs)
    n_inv = count_inverters(dag)
    return CostReport(
        n_add=n_add,
        n_delay=n_delay,
        n_inv=n_inv,
        total=model.total(n_add, n_delay, n_inv),
        depths=table.depths,
        output_depths=table.output_depths,
    )


def adders_only_cost(dag: ComputationDag, model: CostModel = CostModel()) -> float:
    """The dashed-curve view: adders priced, latches and inverters free."""
    return model.c_add * count_additions(dag)


__all__ = [
    "ADDERS_ONLY",
    "DepthTable",
    "adders_only_cost",
    "compute_depths",
    "count_additions",
    "count_delays",
    "count_inverters",
    "total_cost",
]
