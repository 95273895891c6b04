"""scatkit: forward and inverse acoustic scattering workbench in 2D.

Synthesizes the far-field operator of the Helmholtz equation with
Dirichlet, Neumann, semi-transparent, local, and screen-type boundary
conditions on Lipschitz curves via boundary integral equations, and
reconstructs obstacle or screen supports from single-frequency far-field
data using spectral (Picard-series) and inf-criterion indicators.
"""

__version__ = "0.1.0"

from .geometry import (
    BoundaryMesh,
    CurveSpec,
    ProbeSegment,
    SamplingGrid,
    build_sampling_grid,
    discretize_curve,
)
from .boundary_ops import (
    DirectionGrid,
    OperatorMatrix,
    TraceMatrix,
    WaveContext,
    assemble_boundary_operator,
    assemble_trace_matrix,
    eval_farfield_of_density,
)
from .models import (
    BoundaryConditionSpec,
    ExcludedWavenumberError,
    ModelOperator,
    apply_lambda,
    assemble_M,
    coercivity_report,
)
from .scattering import (
    FarFieldOperator,
    NoiseSpec,
    add_noise,
    disk_dirichlet_oracle,
    far_field_operator,
    load_farfield,
    normality_defect,
    save_farfield,
    scattering_matrix,
    unitarity_residual,
)
from .inversion import (
    IndicatorField,
    SpectralDecomposition,
    TestFunction,
    inf_criterion,
    picard_indicator,
    point_test_function,
    scan_grid,
    screen_probe,
    segment_test_function,
    spectral_decompose,
)

__all__ = [
    "BoundaryMesh",
    "CurveSpec",
    "ProbeSegment",
    "SamplingGrid",
    "build_sampling_grid",
    "discretize_curve",
    "DirectionGrid",
    "OperatorMatrix",
    "TraceMatrix",
    "WaveContext",
    "assemble_boundary_operator",
    "assemble_trace_matrix",
    "eval_farfield_of_density",
    "BoundaryConditionSpec",
    "ExcludedWavenumberError",
    "ModelOperator",
    "apply_lambda",
    "assemble_M",
    "coercivity_report",
    "FarFieldOperator",
    "NoiseSpec",
    "add_noise",
    "disk_dirichlet_oracle",
    "far_field_operator",
    "load_farfield",
    "normality_defect",
    "save_farfield",
    "scattering_matrix",
    "unitarity_residual",
    "IndicatorField",
    "SpectralDecomposition",
    "TestFunction",
    "inf_criterion",
    "picard_indicator",
    "point_test_function",
    "scan_grid",
    "screen_probe",
    "segment_test_function",
    "spectral_decompose",
]
