"""
Simple kriging, Gaussian simulation by Cholesky factorization and
split-sample validation.

Random numbers
--------------
Simulation draws standard normals from a fully specified stream so that a
realization can be reproduced by any implementation:

1. Philox4x32-10 (Salmon et al., 2011) with the 128-bit key set to the
   seed and the counter starting at zero, as exposed by
   ``numpy.random.Philox(key=seed)``; ``random_raw`` yields 64-bit words.
2. Each word ``w`` becomes a uniform ``u = ((w >> 11) + 0.5) / 2^53`` in
   ``(0, 1)``.
3. Consecutive uniforms ``(u1, u2)`` give ``sqrt(-2 log u1) cos(2 pi u2)``
   and ``sqrt(-2 log u1) sin(2 pi u2)`` (Box-Muller), in that order.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DomainError, FactorizationError
from .transforms import ensure_valid, evaluate, gram_matrix

__all__ = [
    "JITTER_LADDER",
    "KrigingResult",
    "ValidationReport",
    "standard_normals",
    "factorize",
    "simple_krige",
    "simulate_gaussian",
    "split_sample_validate",
    "save_predictions_csv",
]

JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)
MAX_POINTS = 5000


def standard_normals(seed, n):
    """``n`` standard normal deviates from the documented Philox/Box-Muller stream."""
    if n < 0:
        raise DomainError("n must be >= 0")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise DomainError(f"seed must be a nonnegative integer, got {seed!r}")
    m = (n + 1) // 2
    raw = np.random.Philox(key=int(seed)).random_raw(2 * m)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) / 2.0**53
    u1, u2 = u[0::2], u[1::2]
    rad = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * m)
    out[0::2] = rad * np.cos(2.0 * np.pi * u2)
    out[1::2] = rad * np.sin(2.0 * np.pi * u2)
    return out[:n]


@dataclass(frozen=True)
class Factor:
    """Lower Cholesky factor of ``G + jitter I`` and solver diagnostics."""

    lower: np.ndarray
    jitter: float
    condition: float

    def solve(self, b):
        return linalg.cho_solve((self.lower, True), b, check_finite=False)


def _condition_estimate(g):
    w = np.linalg.eigvalsh(g)
    return float(w[-1] / w[0]) if w[0] > 0 else math.inf


def factorize(g, c0=None):
    """
    Cholesky factorization with jitter escalation.

    Jitter ``eps * c0`` is added to the diagonal for ``eps`` in
    :data:`JITTER_LADDER` until the factorization succeeds.

    Raises
    ------
    FactorizationError
        After the last rung, with the eigenvalue condition estimate.
    """
    c0 = float(g[0, 0]) if c0 is None else float(c0)
    n = g.shape[0]
    for eps in JITTER_LADDER:
        try:
            low = linalg.cholesky(g + eps * c0 * np.eye(n), lower=True, check_finite=False)
        except linalg.LinAlgError:
            continue
        if np.all(np.isfinite(low)):
            d = np.diag(low)
            cond = float((d.max() / d.min()) ** 2) if d.min() > 0 else math.inf
            return Factor(low, eps * c0, cond)
    cond = _condition_estimate(g)
    raise FactorizationError(
        f"Cholesky failed after jitter {JITTER_LADDER[-1]:g}·C(0); condition estimate {cond:.3g}",
        condition=cond,
    )


@dataclass(frozen=True)
class KrigingResult:
    predictions: np.ndarray
    variances: np.ndarray
    jitter: float
    condition: float


@dataclass(frozen=True)
class ValidationReport:
    rmse: float
    mae: float
    n_holdout: int
    abs_errors: np.ndarray

    def to_dict(self):
        return {"rmse": self.rmse, "mae": self.mae, "n_holdout": self.n_holdout}


def _cross_cov(model, x, q):
    return evaluate(model, x[:, None, :] - q[None, :, :])


def simple_krige(model, data, queries, override=False):
    """
    Simple kriging with known mean zero.

    Parameters
    ----------
    model : CovarianceModel
        Must carry a passing validity certificate unless ``override``.
    data : SpatialDataset
        Zero-mean residuals (``data.z``) at the data locations.
    queries : array_like, shape (m, dim)

    Returns
    -------
    KrigingResult
        ``z* = c0' G^-1 z`` and ``C(0) - c0' G^-1 c0`` (clipped at 0).
    """
    model = ensure_valid(model, override=override)
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if q.shape[1] != model.dim:
        raise DomainError("query dimension does not match the model")
    if data.n > MAX_POINTS:
        raise DomainError(f"dense kriging is limited to {MAX_POINTS} data points")
    g = gram_matrix(model, data.locations, override=True)
    c0 = float(evaluate(model, np.zeros(model.dim)))
    fac = factorize(g, c0)
    cross = _cross_cov(model, data.locations, q)
    weights = fac.solve(cross)
    pred = weights.T @ data.z
    var = c0 - np.einsum("ij,ij->j", cross, weights)
    return KrigingResult(pred, np.clip(var, 0.0, None), fac.jitter, fac.condition)


def simulate_gaussian(model, points, seed, override=False):
    """
    Zero-mean Gaussian realization ``L eps`` with ``G = L L'``.

    ``eps`` comes from :func:`standard_normals`, so equal seeds give
    bit-identical output.
    """
    model = ensure_valid(model, override=override)
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if len(x) > MAX_POINTS:
        raise DomainError(f"dense simulation is limited to {MAX_POINTS} points")
    g = gram_matrix(model, x, override=True)
    fac = factorize(g, float(evaluate(model, np.zeros(model.dim))))
    return fac.lower @ standard_normals(seed, len(x))


def split_sample_validate(model, data, holdout, override=False):
    """Krige the held-out points from the rest and score the errors."""
    holdout = np.unique(np.asarray(holdout, dtype=int))
    if holdout.size == 0:
        raise DomainError("holdout set is empty")
    if holdout.min() < 0 or holdout.max() >= data.n:
        raise DomainError("holdout index out of range")
    train = np.setdiff1d(np.arange(data.n), holdout)
    if train.size == 0:
        raise DomainError("training set is empty")
    res = simple_krige(model, data.subset(train), data.locations[holdout], override=override)
    err = res.predictions - data.z[holdout]
    return ValidationReport(
        rmse=float(np.sqrt(np.mean(err**2))), mae=float(np.mean(np.abs(err))),
        n_holdout=int(holdout.size), abs_errors=np.abs(err),
    )


def save_predictions_csv(path, queries, result):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "prediction", "variance"])
        for (x, y), p, v in zip(np.asarray(queries)[:, :2], result.predictions, result.variances):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(p)), repr(float(v))])
