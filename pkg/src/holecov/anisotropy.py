"""Symmetric positive definite matrices for geometric anisotropy."""

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "AnisotropyMatrix",
    "rotation_matrix",
    "from_rotation_scaling",
    "quad_form_sqrt",
    "loewner_geq",
]


class AnisotropyMatrix:
    """
    Immutable symmetric positive definite ``d x d`` matrix.

    The eigendecomposition and determinant are computed once at
    construction.  Eigenvalues are stored in decreasing order.

    Parameters
    ----------
    entries : array_like
        Square matrix; must be symmetric to 1e-12 (relative) and positive
        definite.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"anisotropy matrix must be square, got shape {a.shape}")
        scale = max(np.abs(a).max(), 1.0)
        if np.abs(a - a.T).max() > 1e-12 * scale:
            raise DomainError("anisotropy matrix is not symmetric")
        a = 0.5 * (a + a.T)
        w, v = np.linalg.eigh(a)
        if not w[0] > 0:
            raise DomainError(f"anisotropy matrix is not positive definite (min eigenvalue {w[0]:.3g})")
        a.setflags(write=False)
        self._a = a
        self._eigvals = w[::-1].copy()
        self._eigvecs = v[:, ::-1].copy()
        self._eigvals.setflags(write=False)
        self._eigvecs.setflags(write=False)
        self._det = float(np.prod(w))
        self._inv = np.linalg.inv(a)
        self._inv.setflags(write=False)

    @property
    def dim(self):
        return self._a.shape[0]

    @property
    def matrix(self):
        return self._a

    @property
    def eigenvalues(self):
        return self._eigvals

    @property
    def eigenvectors(self):
        return self._eigvecs

    @property
    def det(self):
        return self._det

    @property
    def inverse(self):
        return self._inv

    @property
    def lambda_min(self):
        return float(self._eigvals[-1])

    @property
    def lambda_max(self):
        return float(self._eigvals[0])

    @classmethod
    def identity(cls, d, scale=1.0):
        return cls(scale * np.eye(d))

    def scaled(self, c):
        return AnisotropyMatrix(c * self._a)

    def tolist(self):
        return self._a.tolist()

    def __eq__(self, other):
        return isinstance(other, AnisotropyMatrix) and np.array_equal(self._a, other._a)

    def __hash__(self):
        return hash(self._a.tobytes())

    def __repr__(self):
        return f"AnisotropyMatrix({self._a.tolist()})"


def rotation_matrix(angles):
    """
    Rotation matrix from one angle (2D) or three Z-Y-X Euler angles (3D).
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size == 1:
        c, s = math.cos(angles[0]), math.sin(angles[0])
        return np.array([[c, -s], [s, c]])
    if angles.size == 3:
        a, b, g = angles
        rz = np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]])
        ry = np.array([[math.cos(b), 0, math.sin(b)], [0, 1, 0], [-math.sin(b), 0, math.cos(b)]])
        rx = np.array([[1, 0, 0], [0, math.cos(g), -math.sin(g)], [0, math.sin(g), math.cos(g)]])
        return rz @ ry @ rx
    raise DomainError("rotation needs 1 angle (2D) or 3 angles (3D)")


def from_rotation_scaling(angles, scales):
    """
    Build ``P diag(scales) P^T`` with ``P`` the rotation given by ``angles``.

    Examples
    --------
    >>> a = from_rotation_scaling(np.pi / 4, [0.2, 0.8])
    >>> np.round(a.matrix, 12).tolist()
    [[0.5, -0.3], [-0.3, 0.5]]
    """
    scales = np.asarray(scales, dtype=float)
    if np.any(~(scales > 0)):
        raise DomainError(f"scales must be positive, got {scales.tolist()}")
    p = rotation_matrix(angles)
    if p.shape[0] != scales.size:
        raise DomainError(f"{scales.size} scales given for a {p.shape[0]}D rotation")
    return AnisotropyMatrix(p @ np.diag(scales) @ p.T)


def quad_form_sqrt(a, h):
    """
    ``sqrt(h^T A h)`` for one vector or a stack of vectors (last axis).
    """
    mat = a.matrix if isinstance(a, AnisotropyMatrix) else np.asarray(a, dtype=float)
    h = np.asarray(h, dtype=float)
    if h.shape[-1] != mat.shape[0]:
        raise DomainError(f"vector dimension {h.shape[-1]} does not match matrix dimension {mat.shape[0]}")
    q = np.einsum("...i,ij,...j->...", h, mat, h)
    out = np.sqrt(np.maximum(q, 0.0))
    return out[()] if out.ndim == 0 else out


def loewner_geq(a1, a2):
    """True when ``A1 - A2`` is positive semidefinite up to ``1e-10 lambda_max(A1)``."""
    m1 = a1.matrix if isinstance(a1, AnisotropyMatrix) else np.asarray(a1, dtype=float)
    m2 = a2.matrix if isinstance(a2, AnisotropyMatrix) else np.asarray(a2, dtype=float)
    if m1.shape != m2.shape:
        raise DomainError("loewner_geq needs matrices of equal shape")
    lmax1 = np.linalg.eigvalsh(m1)[-1]
    diff = np.linalg.eigvalsh(0.5 * ((m1 - m2) + (m1 - m2).T))
    return bool(diff[0] >= -1e-10 * lmax1)
