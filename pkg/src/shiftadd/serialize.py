"""DAG import/export: a stable JSON schema and Graphviz DOT rendering.

JSON schema (vertex ids are 1-based on the wire; inputs are implicit ids
1..K and never listed)::

    {
      "k": int,
      "vertices": [ { "id": int, "terms": [ { "src": int, "sign": +-1, "exp": int } ] } ],
      "outputs":  [ { "row": int, "src": int, "sign": +-1, "exp": int } ]
    }

Keys are emitted in exactly this order so equal DAGs serialize to equal
bytes.  Import re-checks every structural invariant and reports the JSON
path of the first violation.
"""

from __future__ import annotations

import json
import math
from typing import Optional, Union

import numpy as np

from .core import (
    DEFAULT_EXPONENTS,
    ComputationDag,
    ExponentRange,
    ShiftCoefficient,
    Term,
    WiringVector,
)


class SchemaError(ValueError):
    """The text is not a valid DAG description."""


def dag_to_dict(dag: ComputationDag) -> dict:
    """Schema dict for a DAG, with deterministic key and element order."""
    vertices = []
    for v in range(dag.num_inputs, len(dag)):
        w = dag.wiring(v)
        assert w is not None
        vertices.append(
            {
                "id": v + 1,
                "terms": [
                    {"src": t.source + 1, "sign": t.coeff.sign, "exp": t.coeff.exponent}
                    for t in w.terms
                ],
            }
        )
    outputs = []
    for row, out in enumerate(dag.outputs):
        if out is not None:
            outputs.append(
                {
                    "row": row + 1,
                    "src": out.source + 1,
                    "sign": out.coeff.sign,
                    "exp": out.coeff.exponent,
                }
            )
    return {"k": dag.num_inputs, "vertices": vertices, "outputs": outputs}


def export_dag(dag: ComputationDag, format: str = "json", indent: Optional[int] = 2) -> str:
    """Render a DAG as JSON or DOT text."""
    if format == "json":
        return json.dumps(dag_to_dict(dag), indent=indent)
    if format == "dot":
        return dag_to_dot(dag)
    raise ValueError(f"unknown export format {format!r}")


def _expect_int(obj: dict, key: str, where: str) -> int:
    if key not in obj:
        raise SchemaError(f"{where}: missing key {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def import_dag(
    text: Union[str, dict],
    exponents: ExponentRange = DEFAULT_EXPONENTS,
) -> ComputationDag:
    """Parse and fully validate a JSON DAG.

    The number of output rows is inferred from the largest assigned row.
    Raises SchemaError with the offending path on malformed input, bad
    references or out-of-range exponents.
    """
    if isinstance(text, str):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e}") from e
    else:
        data = text
    if not isinstance(data, dict):
        raise SchemaError("top level: expected an object")

    k = _expect_int(data, "k", "top level")
    if k < 1:
        raise SchemaError(f"k: must be >= 1, got {k}")
    vertices = data.get("vertices", [])
    outputs = data.get("outputs", [])
    if not isinstance(vertices, list):
        raise SchemaError("vertices: expected a list")
    if not isinstance(outputs, list):
        raise SchemaError("outputs: expected a list")

    max_row = 0
    for i, o in enumerate(outputs):
        if not isinstance(o, dict):
            raise SchemaError(f"outputs[{i}]: expected an object")
        max_row = max(max_row, _expect_int(o, "row", f"outputs[{i}]"))

    dag = ComputationDag(k, num_outputs=max_row)
    for i, vtx in enumerate(vertices):
        where = f"vertices[{i}]"
        if not isinstance(vtx, dict):
            raise SchemaError(f"{where}: expected an object")
        vid = _expect_int(vtx, "id", where)
        if vid != len(dag) + 1:
            raise SchemaError(
                f"{where}.id: expected {len(dag) + 1} (ids are consecutive), got {vid}"
            )
        terms = vtx.get("terms")
        if not isinstance(terms, list) or not terms:
            raise SchemaError(f"{where}.terms: expected a nonempty list")
        parsed = []
        for j, term in enumerate(terms):
            twhere = f"{where}.terms[{j}]"
            if not isinstance(term, dict):
                raise SchemaError(f"{twhere}: expected an object")
            src = _expect_int(term, "src", twhere)
            sign = _expect_int(term, "sign", twhere)
            exp = _expect_int(term, "exp", twhere)
            if not 1 <= src < vid:
                raise SchemaError(
                    f"{twhere}.src: {src} must reference an earlier vertex in [1, {vid - 1}]"
                )
            if sign not in (1, -1):
                raise SchemaError(f"{twhere}.sign: expected +1 or -1, got {sign}")
            if exp not in exponents:
                raise SchemaError(
                    f"{twhere}.exp: {exp} outside [{exponents.lo}, {exponents.hi}]"
                )
            parsed.append(Term(src - 1, ShiftCoefficient(sign, exp)))
        dag.add_vertex(WiringVector(tuple(parsed)))

    for i, o in enumerate(outputs):
        where = f"outputs[{i}]"
        row = _expect_int(o, "row", where)
        src = _expect_int(o, "src", where)
        sign = _expect_int(o, "sign", where)
        exp = _expect_int(o, "exp", where)
        if row < 1:
            raise SchemaError(f"{where}.row: must be >= 1, got {row}")
        if not 1 <= src <= len(dag):
            raise SchemaError(f"{where}.src: unknown vertex {src}")
        if sign not in (1, -1):
            raise SchemaError(f"{where}.sign: expected +1 or -1, got {sign}")
        if exp not in exponents:
            raise SchemaError(f"{where}.exp: {exp} outside [{exponents.lo}, {exponents.hi}]")
        dag.assign_output(row - 1, src - 1, ShiftCoefficient(sign, exp))

    dag.validate()
    return dag


def dag_to_dot(dag: ComputationDag) -> str:
    """Graphviz rendering: inputs, internal vertices and outputs styled
    distinctly, every arc labeled with its signed power of two."""
    lines = [
        "digraph shiftadd {",
        "  rankdir=LR;",
        '  node [fontname="Helvetica"];',
    ]
    for i in range(dag.num_inputs):
        lines.append(
            f'  v{i + 1} [label="x{i + 1}" shape=circle style=filled fillcolor="#b5e7a0"];'
        )
    for v in range(dag.num_inputs, len(dag)):
        lines.append(
            f'  v{v + 1} [label="c{v + 1}" shape=circle style=filled fillcolor="#a0c4e7"];'
        )
    for row, out in enumerate(dag.outputs):
        if out is not None:
            lines.append(
                f'  y{row + 1} [label="y{row + 1}" shape=doublecircle '
                'style=filled fillcolor="#e7a0a0"];'
            )
    for v in range(dag.num_inputs, len(dag)):
        w = dag.wiring(v)
        assert w is not None
        for t in w.terms:
            lines.append(f'  v{t.source + 1} -> v{v + 1} [label="{t.coeff}"];')
    for row, out in enumerate(dag.outputs):
        if out is not None:
            lines.append(f'  v{out.source + 1} -> y{row + 1} [label="{out.coeff}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_float(x: float) -> str:
    """Shortest round-trip decimal; infinities as the plain string 'inf'."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def load_matrix(path: str) -> np.ndarray:
    """Read a dense matrix from whitespace- or comma-separated text."""
    try:
        a = np.loadtxt(path, delimiter=None, ndmin=2)
    except ValueError:
        a = np.loadtxt(path, delimiter=",", ndmin=2)
    return a
