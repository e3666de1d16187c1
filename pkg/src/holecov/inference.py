"""
Parameter estimation by pairwise-difference composite likelihood or by
weighted least squares on empirical variograms.

Both objectives are optimized with Nelder-Mead in an unconstrained
parameterization: ``log(x - lower)`` for parameters bounded below only,
a scaled logit for parameters bounded on both sides, identity otherwise.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from .errors import DomainError, HolecovError
from .transforms import UNCHECKED, ValidityCertificate, certify, ensure_valid, evaluate

__all__ = [
    "ParameterVector",
    "FitResult",
    "PairSet",
    "default_radius",
    "composite_log_likelihood",
    "wls_variogram_objective",
    "fit",
]


@dataclass(frozen=True)
class ParameterVector:
    """Named parameters with box bounds (which may be infinite)."""

    names: tuple
    values: tuple
    lower: tuple
    upper: tuple

    def __post_init__(self):
        n = len(self.names)
        for attr in ("values", "lower", "upper"):
            if len(getattr(self, attr)) != n:
                raise DomainError(f"{attr} has {len(getattr(self, attr))} entries, expected {n}")
            object.__setattr__(self, attr, tuple(float(v) for v in getattr(self, attr)))
        object.__setattr__(self, "names", tuple(self.names))
        for name, v, lo, hi in zip(self.names, self.values, self.lower, self.upper):
            if not lo < hi:
                raise DomainError(f"{name}: lower bound {lo} must be below upper bound {hi}")
            if not lo <= v <= hi:
                raise DomainError(f"{name} = {v} outside [{lo}, {hi}]")

    @classmethod
    def positive(cls, **values):
        """All parameters in ``(0, inf)``."""
        names = tuple(values)
        return cls(names, tuple(values.values()), (0.0,) * len(names), (math.inf,) * len(names))

    def as_dict(self):
        return dict(zip(self.names, self.values))

    def with_values(self, values):
        return ParameterVector(self.names, tuple(values), self.lower, self.upper)

    def to_unconstrained(self):
        out = []
        for v, lo, hi in zip(self.values, self.lower, self.upper):
            if math.isfinite(lo) and math.isfinite(hi):
                p = (v - lo) / (hi - lo)
                p = min(max(p, 1e-15), 1 - 1e-15)
                out.append(math.log(p / (1 - p)))
            elif math.isfinite(lo):
                out.append(math.log(max(v - lo, 1e-300)))
            elif math.isfinite(hi):
                out.append(-math.log(max(hi - v, 1e-300)))
            else:
                out.append(v)
        return np.array(out)

    def from_unconstrained(self, x):
        vals = []
        for xi, lo, hi in zip(np.asarray(x, dtype=float), self.lower, self.upper):
            if math.isfinite(lo) and math.isfinite(hi):
                vals.append(lo + (hi - lo) / (1.0 + math.exp(-xi)) if xi > -700 else lo)
            elif math.isfinite(lo):
                vals.append(lo + math.exp(min(xi, 700.0)))
            elif math.isfinite(hi):
                vals.append(hi - math.exp(min(-xi, 700.0)))
            else:
                vals.append(float(xi))
        vals = [min(max(v, lo), hi) for v, lo, hi in zip(vals, self.lower, self.upper)]
        return self.with_values(vals)

    def to_dict(self):
        return {n: {"value": v, "lower": lo, "upper": hi}
                for n, v, lo, hi in zip(self.names, self.values, self.lower, self.upper)}


@dataclass(frozen=True)
class FitResult:
    estimate: ParameterVector
    objective_value: float
    objective_kind: str
    iterations: int
    converged: bool
    validity: ValidityCertificate
    model: object = field(default=None, compare=False)
    message: str = ""

    def to_dict(self):
        return {
            "objective_kind": self.objective_kind,
            "objective_value": self.objective_value,
            "iterations": self.iterations,
            "converged": self.converged,
            "estimate": self.estimate.to_dict(),
            "validity": self.validity.to_dict(),
            "message": self.message,
        }


# Objective value for rejected parameters; finite so the simplex stays well defined.
_REJECT = 1e300


def default_radius(data):
    """One third of the diameter of the data's bounding box."""
    span = data.locations.max(axis=0) - data.locations.min(axis=0)
    return float(np.linalg.norm(span)) / 3.0


@dataclass(frozen=True)
class PairSet:
    """
    Data pairs within a radius, in a fixed order, with their lag vectors
    and squared increments.  Reused across objective evaluations.
    """

    i: np.ndarray
    j: np.ndarray
    lags: np.ndarray
    sq_increments: np.ndarray
    radius: float

    @classmethod
    def build(cls, data, radius=None):
        r = default_radius(data) if radius is None else float(radius)
        if not r > 0:
            raise DomainError("pair radius must be > 0")
        pairs = cKDTree(data.locations).query_pairs(r, output_type="ndarray")
        if len(pairs) == 0:
            raise DomainError(f"no data pairs within radius {r:g}")
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        i, j = pairs[:, 0], pairs[:, 1]
        z = data.z
        return cls(i, j, data.locations[i] - data.locations[j], (z[i] - z[j]) ** 2, r)

    def __len__(self):
        return len(self.i)


def _cl_value(model, pairs):
    c0 = float(evaluate(model, np.zeros(model.dim)))
    gamma = c0 - evaluate(model, pairs.lags)
    bad = np.flatnonzero(~(gamma > 0))
    if bad.size:
        k = bad[0]
        raise DomainError(
            f"nonpositive variogram {gamma[k]:.3g} at pair ({pairs.i[k]}, {pairs.j[k]})"
        )
    terms = np.log(4.0 * math.pi * gamma) + pairs.sq_increments / (2.0 * gamma)
    return -0.5 * float(np.sum(terms))


def composite_log_likelihood(model, data, max_pair_distance=None, override=False, pairs=None):
    """
    Pairwise-difference composite log-likelihood.

    Each pair within ``max_pair_distance`` (default: one third of the
    domain diameter) contributes the Gaussian log-density of
    ``z_i - z_j ~ N(0, 2 gamma(h_ij))``:
    ``-1/2 [log(4 pi gamma) + (z_i - z_j)^2 / (2 gamma)]``.

    Raises
    ------
    DomainError
        If ``gamma(h_ij) <= 0`` for an included pair (the message names it).
    InvalidModelError
        If the model is not certified and ``override`` is False.
    """
    model = ensure_valid(model, override=override)
    if pairs is None:
        pairs = PairSet.build(data, max_pair_distance)
    return _cl_value(model, pairs)


def wls_variogram_objective(model, variograms):
    """``sum_b count_b (gammahat_b - gamma_model(h_b))^2`` over all directions and bins."""
    total = 0.0
    nonempty = 0
    c0 = float(evaluate(model, np.zeros(model.dim)))
    for v in variograms:
        if len(v.lag_centers) == 0:
            continue
        nonempty += 1
        g = c0 - evaluate(model, v.lag_vectors)
        total += float(np.sum(v.pair_counts * (v.semivariances - g) ** 2))
    if nonempty == 0:
        raise DomainError("all variograms are empty")
    return total


def fit(objective_kind, template, data, init, budget=2000, max_pair_distance=None,
        restarts=3, xatol=1e-8, seed=0, require_valid=True):
    """
    Fit ``template(params)`` by composite likelihood or variogram WLS.

    Parameters
    ----------
    objective_kind : {"CL", "WLS"}
    template : callable
        Maps a ``{name: value}`` dict to a covariance model.  For
        ``"custom"`` fits it may instead return the objective value
        directly (to be minimized).
    data : SpatialDataset or list of EmpiricalVariogram
    init : ParameterVector
    budget : int
        Total number of objective evaluations.
    restarts : int
        Extra Nelder-Mead runs started from a perturbation of the best
        point, guarding against a collapsed simplex.
    require_valid : bool
        Reject parameter values whose model is not certified.

    Returns
    -------
    FitResult
        ``objective_value`` is the log-CL (maximized) or the WLS sum
        (minimized).  ``converged`` is False when the budget ran out.
    """
    kind = objective_kind.upper()
    if kind not in ("CL", "WLS", "CUSTOM"):
        raise DomainError(f"unknown objective kind {objective_kind!r}")
    pairs = PairSet.build(data, max_pair_distance) if kind == "CL" else None
    sign = -1.0 if kind == "CL" else 1.0
    nfev = 0

    def loss(x):
        nonlocal nfev
        nfev += 1
        params = init.from_unconstrained(x)
        try:
            out = template(params.as_dict())
            if kind == "CUSTOM":
                return float(out)
            if require_valid and not certify(out).passed:
                return _REJECT
            val = _cl_value(out, pairs) if kind == "CL" else wls_variogram_objective(out, data)
        except (HolecovError, ValueError, ArithmeticError):
            return _REJECT
        return sign * val if math.isfinite(val) else _REJECT

    rng = np.random.Generator(np.random.Philox(key=seed))
    x_best = init.to_unconstrained()
    f_best = loss(x_best)
    converged = False
    message = ""
    for run in range(restarts + 1):
        remaining = budget - nfev
        if remaining <= len(x_best) + 1:
            message = "evaluation budget exhausted"
            converged = False
            break
        x0 = x_best if run == 0 else x_best + 0.1 * rng.standard_normal(len(x_best))
        res = optimize.minimize(
            loss, x0, method="Nelder-Mead",
            options={"maxfev": remaining, "xatol": xatol, "fatol": 1e-10,
                     "adaptive": True},
        )
        improved = res.fun < f_best - 1e-10 * max(1.0, abs(f_best))
        if res.fun < f_best:
            x_best, f_best = res.x, res.fun
        converged = bool(res.success)
        message = res.message
        if run > 0 and not improved and converged:
            break
    if f_best >= _REJECT:
        f_best = math.inf
    estimate = init.from_unconstrained(x_best)
    if kind == "CUSTOM":
        return FitResult(estimate, float(f_best), kind, nfev, converged and math.isfinite(f_best),
                         UNCHECKED, None, str(message))
    model = template(estimate.as_dict())
    cert = certify(model)
    value = sign * f_best if math.isfinite(f_best) else -math.inf * sign
    return FitResult(estimate, float(value), kind, nfev, converged and math.isfinite(f_best),
                     cert, model, str(message))
