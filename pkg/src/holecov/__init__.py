"""
Anisotropic covariance models with hole effects.

The package builds stationary covariance functions that combine geometric
anisotropy with negative correlations (hole effects), certifies their
positive semidefiniteness, and uses them for variogram analysis,
composite-likelihood fitting, simple kriging and Gaussian simulation.
"""

__version__ = "0.1.0"

from .anisotropy import AnisotropyMatrix, from_rotation_scaling, loewner_geq, rotation_matrix
from .errors import (
    ConvergenceError,
    DifferentiabilityError,
    DomainError,
    FactorizationError,
    HolecovError,
    InvalidModelError,
    NoSpectralDensityError,
)
from .models import Cauchy, CardinalSine, Gaussian, GaussHypergeometric, Matern
from .transforms import (
    T1,
    T2,
    T3,
    AxisProduct,
    GeometricAniso,
    NestedProfile,
    Scaled,
    Status,
    ValidityCertificate,
    certified,
    certify,
    evaluate,
    gram_matrix,
    normalized,
)

__all__ = [
    "__version__",
    "AnisotropyMatrix",
    "from_rotation_scaling",
    "loewner_geq",
    "rotation_matrix",
    "ConvergenceError",
    "DifferentiabilityError",
    "DomainError",
    "FactorizationError",
    "HolecovError",
    "InvalidModelError",
    "NoSpectralDensityError",
    "Cauchy",
    "CardinalSine",
    "Gaussian",
    "GaussHypergeometric",
    "Matern",
    "T1",
    "T2",
    "T3",
    "AxisProduct",
    "GeometricAniso",
    "NestedProfile",
    "Scaled",
    "Status",
    "ValidityCertificate",
    "certified",
    "certify",
    "evaluate",
    "gram_matrix",
    "normalized",
]
