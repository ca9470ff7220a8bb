"""Exact-arithmetic domain types shared by every other module.

A computation DAG approximates ``y = T @ x`` using only additions and
bitshifts: every arc is labelled with a signed power of two, every vertex
combines a handful of earlier vertices, and the first K vertices are the
unit vectors of the input space.  Coefficients are stored exactly as
(sign, exponent) pairs; vertex values are cached in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

DEFAULT_EXP_MIN = -63
DEFAULT_EXP_MAX = 63


@dataclass(frozen=True)
class ExponentRange:
    """Inclusive bounds for shift exponents.

    The default window [-63, 63] covers any optimum the search can
    distinguish at double precision for targets of sane magnitude while
    keeping candidate grids finite.
    """

    lo: int = DEFAULT_EXP_MIN
    hi: int = DEFAULT_EXP_MAX

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty exponent range [{self.lo}, {self.hi}]")

    def __contains__(self, exponent: int) -> bool:
        return self.lo <= exponent <= self.hi

    def clamp(self, exponent: int) -> int:
        return min(max(exponent, self.lo), self.hi)

    @property
    def span(self) -> int:
        return self.hi - self.lo + 1


DEFAULT_EXPONENTS = ExponentRange()


@dataclass(frozen=True)
class ShiftCoefficient:
    """A signed power of two: exactly ``sign * 2**exponent``.

    This is the only arc label a DAG may carry.  Zero is not representable
    on purpose; an absent term encodes zero.
    """

    sign: int
    exponent: int

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")
        # Normalize numpy integers so equality and hashing stay canonical.
        object.__setattr__(self, "sign", int(self.sign))
        object.__setattr__(self, "exponent", int(self.exponent))

    @property
    def value(self) -> float:
        return self.sign * math.ldexp(1.0, self.exponent)

    def scale(self, vec: np.ndarray) -> np.ndarray:
        """Scale a vector by sign*2**exponent via exponent manipulation.

        np.ldexp adjusts the binary exponent directly, so the result is
        exact (no rounding) for any input that stays in double range.
        """
        out = np.ldexp(vec, self.exponent)
        return -out if self.sign < 0 else out

    def __str__(self) -> str:
        return f"{'+' if self.sign > 0 else '-'}2^{self.exponent}"


class Term(NamedTuple):
    """One summand of a wiring: an earlier vertex scaled by a coefficient."""

    source: int
    coeff: ShiftCoefficient


class OutputAssignment(NamedTuple):
    """Output row selection: a vertex plus a final bitshift, no adder."""

    source: int
    coeff: ShiftCoefficient


def term_key(term: Term) -> tuple[int, int, int]:
    """Canonical term order: source index, exponent, then + before -."""
    return (term.source, term.coeff.exponent, 0 if term.coeff.sign > 0 else 1)


@dataclass(frozen=True)
class WiringVector:
    """A sparse linear combination of codebook vertices.

    Repeated source indices are allowed and count as separate arcs (each
    term is a physical adder port).  The fan-in budget S is enforced by
    the solvers that construct wirings, not by this container.
    """

    terms: tuple[Term, ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("a wiring needs at least one term")
        for t in self.terms:
            if t.source < 0:
                raise ValueError(f"negative source index {t.source}")

    @classmethod
    def from_triples(cls, triples: Iterable[tuple[int, int, int]]) -> "WiringVector":
        """Build from (source, sign, exponent) triples."""
        return cls(tuple(Term(s, ShiftCoefficient(sg, e)) for s, sg, e in triples))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms)

    def sources(self) -> tuple[int, ...]:
        return tuple(t.source for t in self.terms)

    def dense(self, length: int) -> np.ndarray:
        """Induced coefficient row over a codebook of the given size.

        Coefficients of repeated sources accumulate in canonical term
        order, so equal multisets produce bit-identical rows.
        """
        omega = np.zeros(length)
        for t in sorted(self.terms, key=term_key):
            if t.source >= length:
                raise IndexError(f"source {t.source} outside codebook of size {length}")
            omega[t.source] += t.coeff.value
        return omega


def evaluate_terms(terms: Sequence[Term], values: np.ndarray) -> np.ndarray:
    """Dense value of a term list over cached vertex rows.

    Terms are accumulated in stored order with exact power-of-two scaling;
    this is the one definition of a vertex's cached value.
    """
    acc = np.zeros(values.shape[1])
    for t in terms:
        acc = acc + t.coeff.scale(values[t.source])
    return acc


class TargetMatrix:
    """The constant real matrix to be decomposed.

    Entries are double precision and immutable.  All entries must be
    finite and the matrix must not be identically zero.
    """

    def __init__(self, entries) -> None:
        a = np.array(entries, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"expected a 2-d array, got ndim={a.ndim}")
        n, k = a.shape
        if n < 1 or k < 1:
            raise ValueError(f"invalid dimensions {n}x{k}")
        if not np.all(np.isfinite(a)):
            raise ValueError("target entries must be finite")
        if not np.any(a):
            raise ValueError("target must not be identically zero")
        a.setflags(write=False)
        self._a = a

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """Read-only (N, K) view of the entries."""
        return self._a

    def row(self, n: int) -> np.ndarray:
        return self._a[n]

    def col(self, k: int) -> np.ndarray:
        return self._a[:, k]

    @property
    def frobenius_sq(self) -> float:
        """Squared Frobenius norm (numpy pairwise summation)."""
        return float(np.sum(self._a * self._a))

    def __repr__(self) -> str:
        return f"TargetMatrix({self.rows}x{self.cols})"


class ComputationDag:
    """Shift-and-add computation graph over ``num_inputs`` input slots.

    Vertices are indexed from 0; the first K vertices are the unit vectors
    and carry no wiring.  Every later vertex stores its wiring plus a
    cached dense value.  Acyclicity is structural: a wiring may only
    reference vertices with smaller indices.

    A DAG is mutable while a decomposition builds it and must then be
    confined to one worker; finished DAGs are read-only in practice and
    safe to share across readers.
    """

    def __init__(self, num_inputs: int, num_outputs: int = 0) -> None:
        if num_inputs < 1:
            raise ValueError("invalid dimension: need at least one input")
        if num_outputs < 0:
            raise ValueError("num_outputs must be nonnegative")
        self._k = num_inputs
        cap = max(2 * num_inputs, 16)
        self._values = np.zeros((cap, num_inputs))
        for i in range(num_inputs):
            self._values[i, i] = 1.0
        self._len = num_inputs
        self._wirings: list[Optional[WiringVector]] = [None] * num_inputs
        self._outputs: list[Optional[OutputAssignment]] = [None] * num_outputs
        self._by_value: dict[bytes, int] = {
            self._values[i].tobytes(): i for i in range(num_inputs)
        }

    # -- structure ---------------------------------------------------------

    @property
    def num_inputs(self) -> int:
        return self._k

    @property
    def num_outputs(self) -> int:
        return len(self._outputs)

    def __len__(self) -> int:
        return self._len

    @property
    def num_internal(self) -> int:
        return self._len - self._k

    def is_input(self, vertex: int) -> bool:
        self._check_vertex(vertex)
        return vertex < self._k

    def wiring(self, vertex: int) -> Optional[WiringVector]:
        self._check_vertex(vertex)
        return self._wirings[vertex]

    def indegree(self, vertex: int) -> int:
        w = self.wiring(vertex)
        return 0 if w is None else len(w)

    def _check_vertex(self, vertex: int) -> None:
        if not 0 <= vertex < self._len:
            raise IndexError(f"unknown vertex id {vertex} (have {self._len})")

    # -- values ------------------------------------------------------------

    def value(self, vertex: int) -> np.ndarray:
        """Cached dense row c_l for a vertex (a copy)."""
        self._check_vertex(vertex)
        return self._values[vertex].copy()

    def matrix_view(self) -> np.ndarray:
        """Live (len, K) view of all cached values.

        The view is invalidated by the next add_vertex call; do not hold
        it across mutations.
        """
        return self._values[: self._len]

    def find_vertex(self, value: np.ndarray) -> Optional[int]:
        """Index of a vertex with this exact dense value, if any."""
        return self._by_value.get(np.ascontiguousarray(value).tobytes())

    # -- mutation ----------------------------------------------------------

    def add_vertex(self, wiring: WiringVector) -> int:
        """Append a vertex; its terms may only reference earlier vertices."""
        for t in wiring.terms:
            if t.source >= self._len:
                raise ValueError(
                    f"term references vertex {t.source} but only {self._len} exist"
                )
        if self._len == self._values.shape[0]:
            grown = np.zeros((2 * self._values.shape[0], self._k))
            grown[: self._len] = self._values[: self._len]
            self._values = grown
        value = evaluate_terms(wiring.terms, self._values)
        idx = self._len
        self._values[idx] = value
        self._len += 1
        self._wirings.append(wiring)
        self._by_value.setdefault(self._values[idx].tobytes(), idx)
        return idx

    def set_num_outputs(self, n: int) -> None:
        if n < len(self._outputs):
            raise ValueError("cannot shrink the output list")
        self._outputs.extend([None] * (n - len(self._outputs)))

    def assign_output(self, row: int, source: int, coeff: ShiftCoefficient) -> None:
        if not 0 <= row < len(self._outputs):
            raise IndexError(f"output row {row} out of range (N={len(self._outputs)})")
        self._check_vertex(source)
        self._outputs[row] = OutputAssignment(source, coeff)

    # -- outputs -----------------------------------------------------------

    def output(self, row: int) -> Optional[OutputAssignment]:
        if not 0 <= row < len(self._outputs):
            raise IndexError(f"output row {row} out of range (N={len(self._outputs)})")
        return self._outputs[row]

    @property
    def outputs(self) -> tuple[Optional[OutputAssignment], ...]:
        return tuple(self._outputs)

    def all_outputs_assigned(self) -> bool:
        return len(self._outputs) > 0 and all(o is not None for o in self._outputs)

    # -- validation --------------------------------------------------------

    def validate(self) -> None:
        """Re-check every structural invariant, including cache coherence.

        Raises ValueError on the first violation.  Cache coherence is
        bit-for-bit: re-evaluating a wiring must reproduce the stored row.
        """
        for i in range(self._k):
            expect = np.zeros(self._k)
            expect[i] = 1.0
            if not np.array_equal(self._values[i], expect):
                raise ValueError(f"vertex {i} is not the unit vector 1_{i}")
            if self._wirings[i] is not None:
                raise ValueError(f"input vertex {i} must not have a wiring")
        for i in range(self._k, self._len):
            w = self._wirings[i]
            if w is None:
                raise ValueError(f"internal vertex {i} has no wiring")
            for t in w.terms:
                if t.source >= i:
                    raise ValueError(
                        f"vertex {i} references {t.source}, violating topological order"
                    )
            fresh = evaluate_terms(w.terms, self._values)
            if not np.array_equal(fresh, self._values[i]):
                raise ValueError(f"stale value cache at vertex {i}")
        for row, out in enumerate(self._outputs):
            if out is not None and not 0 <= out.source < self._len:
                raise ValueError(f"output {row} references unknown vertex {out.source}")

    def __repr__(self) -> str:
        return (
            f"ComputationDag(K={self._k}, vertices={self._len}, "
            f"outputs={sum(o is not None for o in self._outputs)}/{len(self._outputs)})"
        )


def make_unit_codebook(num_inputs: int, num_outputs: int = 0) -> ComputationDag:
    """DAG holding only the K unit vectors, with all outputs unassigned."""
    return ComputationDag(num_inputs, num_outputs)


def dense_value(dag: ComputationDag, vertex: int) -> np.ndarray:
    """Cached dense row of a vertex (module-level accessor)."""
    return dag.value(vertex)


@dataclass(frozen=True)
class CostModel:
    """Unit hardware costs: full adder, pipeline latch, sign inverter.

    Defaults follow a transistor-count argument: an adder and a latch cost
    about 20 each per bit, an inverter 2.
    """

    c_add: float = 20.0
    c_delay: float = 20.0
    c_inv: float = 2.0

    def __post_init__(self) -> None:
        for name in ("c_add", "c_delay", "c_inv"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def total(self, n_add: int, n_delay: int, n_inv: int) -> float:
        return self.c_add * n_add + self.c_delay * n_delay + self.c_inv * n_inv


ADDERS_ONLY = CostModel(1.0, 0.0, 0.0)


@dataclass(frozen=True)
class CostReport:
    """Counts and totals for one DAG under a cost model."""

    n_add: int
    n_delay: int
    n_inv: int
    total: float
    depths: tuple[int, ...]
    output_depths: tuple[Optional[int], ...]
