"""
helmlab: a laboratory for 2D Helmholtz problems with absorbing layers and
overlapping Schwarz solvers.

The pieces compose bottom-up: grid (meshes) -> pml (stretched coefficients)
-> assembly (sparse systems) -> decomp (subdomain layouts, partition of
unity, transfer) -> schwarz (the iterations) -> harness (experiments, CSV,
CLI).  special holds the Hankel-function reference field.
"""

from .grid import (
    Grid,
    GridError,
    MeshAlignmentError,
    MeshRule,
    Rect,
    RegionTag,
    build_grid,
    make_grid,
)
from .pml import (
    AxisScaling,
    CoefficientField,
    PmlError,
    PmlProfile,
    global_field,
    local_field,
)
from .assembly import (
    AssemblyError,
    LoadSpec,
    SesquilinearSpec,
    assemble_load,
    assemble_local,
    assemble_matrix,
    embed,
    hk_norm,
    identity_field,
    l2_error,
)
from .decomp import (
    LayoutError,
    OverlapRule,
    PartitionOfUnity,
    SubdomainLayout,
    TransferOps,
    accumulate_weighted,
    build_layout,
    build_pou,
    build_transfer,
    extend_weighted,
    restrict,
)
from .linalg import (
    Factorization,
    FormatError,
    SingularMatrixError,
    factorize,
    read_coo,
    residual_norm,
    write_coo,
    write_coo_vector,
)
from .schwarz import (
    IterationTrace,
    SchwarzContext,
    SchwarzError,
    SweepOrder,
    build_context,
    default_sweep_order,
    ras_step,
    rate_after,
    rms_double_sweep,
    run_iteration,
)
from .special import HankelError, hankel1_0, j0, point_source_field, y0
from .harness import (
    AccuracyReport,
    ConfigError,
    ExperimentConfig,
    ResultRow,
    SourceSpec,
    RESULT_COLUMNS,
    default_config,
    designated_iteration,
    export_matrix,
    hankel_reference,
    load_config,
    parse_config,
    pml_accuracy_test,
    read_rows_csv,
    run_rate,
    run_table,
    write_rows_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport", "AssemblyError", "AxisScaling", "CoefficientField",
    "ConfigError", "ExperimentConfig", "Factorization", "FormatError", "Grid",
    "GridError", "HankelError", "IterationTrace", "LayoutError", "LoadSpec",
    "MeshAlignmentError", "MeshRule", "OverlapRule", "PartitionOfUnity",
    "PmlError", "PmlProfile", "RESULT_COLUMNS", "Rect", "RegionTag",
    "ResultRow", "SchwarzContext", "SchwarzError", "SesquilinearSpec",
    "SingularMatrixError", "SourceSpec", "SubdomainLayout", "SweepOrder",
    "TransferOps", "accumulate_weighted", "assemble_load", "assemble_local",
    "assemble_matrix", "build_context", "build_grid", "build_layout",
    "build_pou", "build_transfer", "default_config", "default_sweep_order",
    "designated_iteration", "embed", "export_matrix", "extend_weighted",
    "factorize", "global_field", "hankel1_0", "hankel_reference", "hk_norm",
    "identity_field", "j0", "l2_error", "load_config", "local_field",
    "make_grid", "parse_config", "pml_accuracy_test", "point_source_field",
    "ras_step", "rate_after", "read_coo", "read_rows_csv", "residual_norm",
    "restrict", "rms_double_sweep", "run_iteration", "run_rate", "run_table",
    "write_coo", "write_coo_vector", "write_rows_csv", "y0",
]
