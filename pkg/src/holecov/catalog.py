"""
Ready-made models: the three reference scenarios, the basic
constructions, the wave derivative model and the two aquifer-style
models used for fitting and validation.
"""

import math

import numpy as np

from .anisotropy import AnisotropyMatrix, from_rotation_scaling
from .models import CardinalSine, Gaussian, Matern
from .transforms import T1, T2, T3, AxisProduct, NestedProfile, Scaled

__all__ = [
    "NORTHEAST",
    "scenario_I",
    "scenario_II",
    "scenario_III",
    "wave_derivative",
    "basic_left",
    "basic_middle",
    "basic_right",
    "model_I",
    "model_II",
]

NORTHEAST = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))


def scenario_I(phi, b1=2.5, b2=1.0, scales=(0.2, 0.8), angle=math.pi / 4):
    """``T1`` with ``A1 = I`` and ``A2`` the rotated scaling ``P diag(scales) P^T``."""
    return T1(phi, AnisotropyMatrix.identity(2), from_rotation_scaling(angle, scales), b1, b2)


def scenario_II(phi, b1=2.0, b2=1.0, a1=0.8, a2=0.4, eta=(1.0, 1.0)):
    """``T2`` with the shift along the northeast diagonal."""
    return T2(phi, a1, a2, b1, b2, eta)


def scenario_III(phi1, phi2=None, b1=1.0, b2=2.0, a1=1.0, a2=0.5, u=NORTHEAST):
    """``T3`` with the derivative taken along the northeast diagonal."""
    return T3(phi1, phi1 if phi2 is None else phi2, a1, a2, b1, b2, u)


def wave_derivative(phi1=None, b1=1.0, b2=2.0, a1=1.0, a2=1.0, u=NORTHEAST):
    """``T3`` with a cardinal-sine derivative part; ``C(0) = b1 + b2/3``."""
    return T3(CardinalSine() if phi1 is None else phi1, CardinalSine(), a1, a2, b1, b2, u)


def basic_left():
    """``2 exp(-0.8 h'Ah) - exp(-0.4 h'Ah)``, ``A = [[1, -0.5], [-0.5, 1]]``."""
    a = np.array([[1.0, -0.5], [-0.5, 1.0]])
    return T1(Gaussian(), AnisotropyMatrix(0.8 * a), AnisotropyMatrix(0.4 * a), 2.0, 1.0)


def basic_middle():
    """``exp(-0.2 |h|^2) [3.41 exp(-0.8 h2^2) - 2.41 exp(-0.4 h2^2)]``."""
    nested = NestedProfile(Gaussian(), a1=0.8, a2=0.4, b1=3.41, b2=2.41)
    return AxisProduct(Gaussian(), nested, axis=1, a1=math.sqrt(0.2), a2=1.0)


def basic_right():
    """``exp(-0.5 |h|) sin(5 |h2|) / (5 |h2|)``."""
    return AxisProduct(Matern(0.5), CardinalSine(), axis=1, a1=0.5, a2=5.0)


def model_I(sigma2, a1, a2):
    """``sigma2 exp(-a1 |h|) sin(a2 |h2|) / (a2 |h2|)``."""
    return AxisProduct(Matern(0.5), CardinalSine(), axis=1, a1=a1, a2=a2, sigma2=sigma2)


def model_II(sigma2, a1, a2, a3):
    """
    Model I with unit sill plus the vertical wave-derivative covariance,
    scaled by ``3 sigma2 / 4`` so that ``C(0) = sigma2``.
    """
    inner = T3(model_I(1.0, a1, a2), CardinalSine(), 1.0, a3, 1.0, 1.0, (0.0, 1.0))
    return Scaled(inner, 0.75 * sigma2)
