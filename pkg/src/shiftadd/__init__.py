"""shiftadd: compile constant matrix-vector products into shift-and-add DAGs.

The package turns ``y = T @ x`` for a constant matrix T into a directed
acyclic graph of two-input additions whose arcs carry only signed powers
of two, trading approximation quality (SQNR) against a pipelined-hardware
cost model with tunable parallelism.
"""

from .core import (
    ADDERS_ONLY,
    ComputationDag,
    CostModel,
    CostReport,
    DEFAULT_EXPONENTS,
    ExponentRange,
    OutputAssignment,
    ShiftCoefficient,
    TargetMatrix,
    Term,
    WiringVector,
    dense_value,
    make_unit_codebook,
)
from .cost import (
    DepthTable,
    adders_only_cost,
    compute_depths,
    count_additions,
    count_delays,
    count_inverters,
    total_cost,
)
from .csd import csd_decompose, csd_matrix_baseline, csd_quantize
from .decompose import (
    DecomposeConfig,
    DecompositionResult,
    IterationRecord,
    SchedulePhase,
    decompose,
    fs_decompose,
    fp_decompose,
    ma_decompose,
    slice_decompose,
)
from .evaluate import (
    IncompleteDagError,
    assigned_row_errors,
    codebook_matrix,
    effective_matrix,
    evaluate_dag,
    sqnr_db,
)
from .experiments import (
    ExperimentSpec,
    SweepGrid,
    gen_gaussian_matrix,
    interpolate_curve,
    run_sweep,
)
from .serialize import SchemaError, export_dag, import_dag
from .wiring import (
    SearchSpaceError,
    WiringConfig,
    brute_force_wiring,
    dmp_wiring,
    optimal_shift,
    rs_wiring,
    solve_wiring,
)

__version__ = "0.1.0"
