"""Heat kernels, pullback metrics and heat-kernel immersions on model spaces."""

from ._core import BACKEND
from .constructions import (
    HalfSpaceSample,
    flat_constant_by_quadrature,
    halfspace_gt_normal,
    halfspace_gt_normal_quadrature,
)
from .errors import (
    BudgetExceeded,
    CalibrationFailed,
    DomainError,
    HeatlabError,
    HypothesisViolated,
    RangeError,
    UnsupportedSpace,
)
from .experiments import Example45Result, example_4_5, run_scenario, torus_vs_sphere_theta
from .heat_kernel import (
    KernelValue,
    TruncationCertificate,
    diagonal,
    evaluate,
    heat_trace,
    heat_trace_certified,
)
from .pullback import (
    ImmersionReport,
    PullbackSample,
    c_of_t,
    eigenspace_immersion,
    ihki_check,
    pullback_matrix,
    pullback_scalar,
    small_t_asymptotics,
    trace_derivative_check,
)
from .spaces import (
    Circle,
    Cone,
    Euclidean,
    HalfSpace,
    Product,
    Rescaled,
    SpectralLevel,
    Sphere,
    distance,
    eigenspace_sum,
    parse_space,
    spectrum,
    volume,
)
from .specfun import SeriesEval, bessel_i, gegenbauer, log_gamma

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
