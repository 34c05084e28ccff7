"""Non-parametric 2D image registration with curvature regularization.

The core solver minimizes SSD plus a Gaussian-curvature penalty on each
displacement component via an augmented Lagrangian splitting; linear
curvature, mean curvature, and demon baselines share the same field
substrate and quality metrics.
"""

from curvreg.baselines import (
    DemonConfig,
    TimeMarchConfig,
    demon_step,
    register_demon,
    register_lc,
    register_mc,
)
from curvreg.curvature import (
    CurvatureField,
    CurvatureKind,
    FlowStepResult,
    gaussian_curvature,
    gc_energy,
    gc_flow_step,
    lc_energy,
    mc_energy,
    mean_curvature,
    tv_flow_step,
)
from curvreg.errors import (
    CorruptFileError,
    NonFiniteError,
    SingularBlockError,
    UnsupportedFormatError,
)
from curvreg.fields import (
    ScalarField,
    VectorField2,
    div,
    grad,
    hessian,
    laplacian,
    sample_warped,
    warped_gradient,
)
from curvreg.fixtures import FIXTURE_KINDS, FixturePair, make_fixture
from curvreg.imgio import load_image, save_pgm
from curvreg.metrics import QualityReport, jacobian_det_field, quality
from curvreg.oracle import (
    GradCheckReport,
    gc_energy_gradient,
    numeric_gradient,
    verify_el17,
    verify_step1_el,
)
from curvreg.render import render_deformed_grid
from curvreg.similarity import ForceLinearization, force, linearize_force, ssd
from curvreg.solver_gc import (
    ALMState,
    RegistrationConfig,
    RegistrationResult,
    el_residual,
    multiplier_update,
    q_update,
    register_gc,
    u_update,
)

__version__ = "0.1.0"

__all__ = [
    "ScalarField",
    "VectorField2",
    "grad",
    "div",
    "laplacian",
    "hessian",
    "sample_warped",
    "warped_gradient",
    "CurvatureField",
    "CurvatureKind",
    "FlowStepResult",
    "gaussian_curvature",
    "mean_curvature",
    "gc_energy",
    "lc_energy",
    "mc_energy",
    "gc_flow_step",
    "tv_flow_step",
    "ssd",
    "force",
    "linearize_force",
    "ForceLinearization",
    "ALMState",
    "RegistrationConfig",
    "RegistrationResult",
    "q_update",
    "u_update",
    "multiplier_update",
    "el_residual",
    "register_gc",
    "TimeMarchConfig",
    "DemonConfig",
    "register_lc",
    "register_mc",
    "demon_step",
    "register_demon",
    "FIXTURE_KINDS",
    "FixturePair",
    "make_fixture",
    "load_image",
    "save_pgm",
    "render_deformed_grid",
    "QualityReport",
    "jacobian_det_field",
    "quality",
    "GradCheckReport",
    "numeric_gradient",
    "gc_energy_gradient",
    "verify_step1_el",
    "verify_el17",
    "CorruptFileError",
    "NonFiniteError",
    "SingularBlockError",
    "UnsupportedFormatError",
    "__version__",
]
