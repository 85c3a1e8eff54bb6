"""Active sampling for expectations of expensive black-box functions.

The package estimates q = E[f(x)] for x drawn from a Gaussian-mixture
input model, using a GP surrogate over f and a variance-reduction
acquisition rule to pick each new evaluation point.  Kernel integrals
against the mixture are closed-form, so the estimate and the acquisition
are cheap even though f is not.
"""

from gpexpect.errors import (
    DegenerateEstimateError,
    EvaluationError,
    GpExpectError,
    InsufficientDataError,
    NumericalConditioningError,
    OptimizationFailedError,
)
from gpexpect.kernels import RbfKernel
from gpexpect.mixtures import GaussianMixture
from gpexpect.gp import Dataset, GpPosterior, HyperparameterSample, NoiseModel

__version__ = "0.1.0"

__all__ = [
    "DegenerateEstimateError",
    "Dataset",
    "EvaluationError",
    "GaussianMixture",
    "GpExpectError",
    "GpPosterior",
    "HyperparameterSample",
    "InsufficientDataError",
    "NoiseModel",
    "NumericalConditioningError",
    "OptimizationFailedError",
    "RbfKernel",
    "__version__",
]
