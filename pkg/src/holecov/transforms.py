"""
Covariance constructions that combine anisotropy with hole effects.

Three constructions are provided on top of an isotropic profile ``phi``:

* :class:`T1`, a difference of two geometrically anisotropic copies,
  ``b1 phi(|h|_A1) - b2 phi(|h|_A2)``;
* :class:`T2`, an isotropic term minus the average of two copies shifted
  by ``+-eta``;
* :class:`T3`, an isotropic term minus the covariance bracket of a
  directional derivative along ``u``.

together with the two elementary constructions (:class:`GeometricAniso`
and :class:`AxisProduct`) and a scaling wrapper.  Each model can be
certified with :func:`certify`, which runs the closed-form or numerical
validity check matching its kind.
"""

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy import optimize

from .anisotropy import AnisotropyMatrix, loewner_geq, quad_form_sqrt
from .errors import ConvergenceError, DomainError, InvalidModelError
from .models import IsotropicFamily

__all__ = [
    "Status",
    "ValidityCertificate",
    "NestedProfile",
    "CovarianceModel",
    "T1",
    "T2",
    "T3",
    "GeometricAniso",
    "AxisProduct",
    "Scaled",
    "evaluate",
    "certify",
    "certified",
    "ensure_valid",
    "normalized",
    "check_T1_general",
    "check_T2",
    "check_T3",
    "derivative_bracket",
    "gram_matrix",
    "spectral_ratio_sup",
]

_BOUNDARY_TOL = 1e-12


class Status(enum.Enum):
    PROVED = "PROVED"
    NUMERIC = "NUMERIC"
    FAILED = "FAILED"
    UNCHECKED = "UNCHECKED"


@dataclass(frozen=True)
class ValidityCertificate:
    """
    Outcome of a validity check.

    ``lhs`` and ``rhs`` are the two sides of the binding inequality
    ``lhs >= rhs`` when one exists; ``relation`` is a human readable form.
    """

    status: Status
    reason: str
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    relation: str = ""
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self):
        return self.status in (Status.PROVED, Status.NUMERIC)

    def to_dict(self):
        return {
            "status": self.status.value,
            "reason": self.reason,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "relation": self.relation,
            "diagnostics": {k: _jsonable(v) for k, v in self.diagnostics.items()},
        }


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


UNCHECKED = ValidityCertificate(Status.UNCHECKED, "not certified")


def _geq(lhs, rhs):
    if not math.isfinite(rhs):
        return False
    return lhs - rhs >= -_BOUNDARY_TOL * abs(rhs)


# -- radial profiles --------------------------------------------------------


@dataclass(frozen=True)
class NestedProfile:
    """
    Isotropic nested profile ``b1 phi(sqrt(a1) t) - b2 phi(sqrt(a2) t)``.

    Valid in ``R^d`` when ``phi`` has a nonincreasing d-radial spectral
    density, ``a1 >= a2`` and ``b1 >= b2 (a1/a2)^(d/2)``.
    """

    family: IsotropicFamily
    a1: float
    a2: float
    b1: float
    b2: float

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        return (self.b1 * self.family.phi(math.sqrt(self.a1) * t)
                - self.b2 * self.family.phi(math.sqrt(self.a2) * t))

    @property
    def phi0(self):
        return float(self.phi(0.0))

    def certificate(self, d):
        if self.b2 == 0:
            ok = self.family.valid_in(d)
            return ValidityCertificate(
                Status.PROVED if ok else Status.FAILED, "no negative term",
            )
        if not self.family.spectral_density_nonincreasing_in(d):
            return ValidityCertificate(
                Status.UNCHECKED, f"{self.family!r} lacks a nonincreasing {d}-radial spectral density",
            )
        if self.a1 < self.a2:
            return ValidityCertificate(Status.UNCHECKED, "closed form needs a1 >= a2")
        rhs = self.b2 * (self.a1 / self.a2) ** (d / 2.0)
        ok = _geq(self.b1, rhs)
        return ValidityCertificate(
            Status.PROVED if ok else Status.FAILED,
            "b1 >= b2 (a1/a2)^(d/2)",
            lhs=self.b1, rhs=rhs,
            relation=f"{self.b1:g} {'≥' if ok else '<'} {self.b2:g}·({self.a1:g}/{self.a2:g})^{d / 2:g} = {rhs:.6g}",
        )

    def valid_in(self, d):
        return self.certificate(d).passed


def _profile_valid(profile, d):
    if isinstance(profile, NestedProfile):
        return profile.certificate(d)
    ok = profile.valid_in(d)
    return ValidityCertificate(
        Status.PROVED if ok else Status.FAILED,
        f"{profile!r} {'is' if ok else 'is not'} valid in R^{d}",
    )


# -- covariance models ------------------------------------------------------


class CovarianceModel:
    """Base class of the stationary covariance models."""

    kind = "model"

    def __call__(self, h):
        return evaluate(self, h)

    @property
    def dim(self):
        raise NotImplementedError

    def _eval(self, h):
        raise NotImplementedError

    def _certify(self, d):
        raise NotImplementedError


def _norm(h):
    return np.sqrt(np.einsum("...i,...i->...", h, h))


@dataclass(frozen=True)
class T1(CovarianceModel):
    phi: IsotropicFamily
    A1: AnisotropyMatrix
    A2: AnisotropyMatrix
    b1: float
    b2: float
    certificate: ValidityCertificate = field(default=UNCHECKED, compare=False)
    kind = "T1"

    def __post_init__(self):
        if self.A1.dim != self.A2.dim:
            raise DomainError("A1 and A2 must have the same dimension")
        if self.b1 < 0 or self.b2 < 0:
            raise DomainError("b1, b2 must be >= 0")

    @property
    def dim(self):
        return self.A1.dim

    def _eval(self, h):
        return (self.b1 * self.phi.phi(quad_form_sqrt(self.A1, h))
                - self.b2 * self.phi.phi(quad_form_sqrt(self.A2, h)))

    def _certify(self, d):
        return check_T1_general(self.phi, self.A1, self.A2, self.b1, self.b2, d)


@dataclass(frozen=True)
class T2(CovarianceModel):
    phi: IsotropicFamily
    a1: float
    a2: float
    b1: float
    b2: float
    eta: tuple
    certificate: ValidityCertificate = field(default=UNCHECKED, compare=False)
    kind = "T2"

    def __post_init__(self):
        object.__setattr__(self, "eta", tuple(float(x) for x in np.ravel(self.eta)))
        if not (self.a1 > 0 and self.a2 > 0):
            raise DomainError("a1, a2 must be > 0")
        if self.b1 < 0 or self.b2 < 0:
            raise DomainError("b1, b2 must be >= 0")

    @property
    def dim(self):
        return len(self.eta)

    def _eval(self, h):
        eta = np.asarray(self.eta)
        s1, s2 = math.sqrt(self.a1), math.sqrt(self.a2)
        shifted = self.phi.phi(s2 * _norm(h - eta)) + self.phi.phi(s2 * _norm(h + eta))
        return self.b1 * self.phi.phi(s1 * _norm(h)) - 0.5 * self.b2 * shifted

    def _certify(self, d):
        return check_T2(self.phi, self.a1, self.a2, self.b1, self.b2, d, eta=self.eta)


@dataclass(frozen=True)
class T3(CovarianceModel):
    """
    ``b1 phi1(sqrt(a1)|h|) - b2 [cos^2 phi2''(t) + sin^2 phi2'(t)/t]``,
    ``t = sqrt(a2)|h|``, angles measured between ``h`` and ``u``.

    ``phi1`` may be an isotropic family or any covariance model, in which
    case the first term is ``b1 C1(sqrt(a1) h)``.
    """

    phi1: Any
    phi2: IsotropicFamily
    a1: float
    a2: float
    b1: float
    b2: float
    u: tuple
    certificate: ValidityCertificate = field(default=UNCHECKED, compare=False)
    kind = "T3"

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).ravel()
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise DomainError(f"u must be a unit vector, |u| = {np.linalg.norm(u)!r}")
        object.__setattr__(self, "u", tuple(u.tolist()))
        if not (self.a1 > 0 and self.a2 > 0):
            raise DomainError("a1, a2 must be > 0")
        if self.b1 < 0 or self.b2 < 0:
            raise DomainError("b1, b2 must be >= 0")
        if isinstance(self.phi1, CovarianceModel) and self.phi1.dim != len(u):
            raise DomainError("phi1 model dimension does not match u")

    @property
    def dim(self):
        return len(self.u)

    def _first(self, h):
        s1 = math.sqrt(self.a1)
        if isinstance(self.phi1, CovarianceModel):
            return self.phi1._eval(s1 * h)
        return self.phi1.phi(s1 * _norm(h))

    def _eval(self, h):
        first = self._first(h) if self.b1 != 0 else 0.0
        return self.b1 * first - self.b2 * derivative_bracket(self.phi2, self.a2, self.u, h)

    def _certify(self, d):
        return check_T3(self.phi1, self.phi2, d)


@dataclass(frozen=True)
class GeometricAniso(CovarianceModel):
    phi: IsotropicFamily
    A: AnisotropyMatrix
    certificate: ValidityCertificate = field(default=UNCHECKED, compare=False)
    kind = "geometric"

    @property
    def dim(self):
        return self.A.dim

    def _eval(self, h):
        return self.phi.phi(quad_form_sqrt(self.A, h))

    def _certify(self, d):
        return _profile_valid(self.phi, d)


@dataclass(frozen=True)
class AxisProduct(CovarianceModel):
    """
    ``sigma2 phi1(a1 |h|) phi2(a2 |h_axis|)``.

    The scales multiply the lag directly (not through a square root), so
    ``AxisProduct(Matern(0.5), CardinalSine(), axis=1, a1, a2)`` is
    ``exp(-a1|h|) sin(a2|h_2|)/(a2|h_2|)``.  ``phi2`` may be a
    :class:`NestedProfile`; it must be valid in ``R^1``.
    """

    phi1: Any
    phi2: Any
    axis: int
    a1: float
    a2: float
    sigma2: float = 1.0
    ndim: int = 2
    certificate: ValidityCertificate = field(default=UNCHECKED, compare=False)
    kind = "axis_product"

    def __post_init__(self):
        if not (0 <= self.axis < self.ndim):
            raise DomainError(f"axis {self.axis} out of range for dimension {self.ndim}")
        if not (self.a1 > 0 and self.a2 > 0 and self.sigma2 > 0):
            raise DomainError("a1, a2, sigma2 must be > 0")

    @property
    def dim(self):
        return self.ndim

    def _eval(self, h):
        return (self.sigma2 * self.phi1.phi(self.a1 * _norm(h))
                * self.phi2.phi(self.a2 * np.abs(h[..., self.axis])))

    def _certify(self, d):
        c1 = _profile_valid(self.phi1, d)
        c2 = _profile_valid(self.phi2, 1)
        if c1.passed and c2.passed:
            return ValidityCertificate(
                Status.PROVED, "product of a covariance in R^d and one in R^1",
                lhs=c2.lhs, rhs=c2.rhs, relation=c2.relation,
            )
        bad = c1 if not c1.passed else c2
        return ValidityCertificate(bad.status, "factor not certified: " + bad.reason,
                                   lhs=bad.lhs, rhs=bad.rhs, relation=bad.relation)


@dataclass(frozen=True)
class Scaled(CovarianceModel):
    base: CovarianceModel
    sigma2: float
    certificate: ValidityCertificate = field(default=UNCHECKED, compare=False)
    kind = "scaled"

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError("sigma2 must be > 0")

    @property
    def dim(self):
        return self.base.dim

    def _eval(self, h):
        return self.sigma2 * self.base._eval(h)

    def _certify(self, d):
        return certify(self.base, d)


# -- evaluation and certification ------------------------------------------


def evaluate(model, h):
    """
    Evaluate ``C(h)`` for one lag vector or a stack of them (last axis).
    """
    h = np.asarray(h, dtype=float)
    if h.shape[-1] != model.dim:
        raise DomainError(f"lag dimension {h.shape[-1]} does not match model dimension {model.dim}")
    out = np.asarray(model._eval(h), dtype=float)
    return out[()] if out.ndim == 0 else out


def certify(model, d=None):
    """Run the validity check that matches the model kind."""
    if d is None:
        d = model.dim
    return model._certify(d)


def certified(model, d=None):
    """Return a copy of ``model`` carrying its freshly computed certificate."""
    return dataclasses.replace(model, certificate=certify(model, d))


def ensure_valid(model, override=False):
    """
    Return a certified copy of ``model``; raise unless it passes.

    ``override=True`` skips the requirement (the certificate is still
    computed and attached).
    """
    if model.certificate.status is Status.UNCHECKED and model.certificate is UNCHECKED:
        model = certified(model)
    if not override and not model.certificate.passed:
        raise InvalidModelError(
            f"{model.kind} model is {model.certificate.status.value}: {model.certificate.reason}"
        )
    return model


def normalized(model):
    """Rescale to a correlation function (value 1 at the origin)."""
    c0 = float(evaluate(model, np.zeros(model.dim)))
    if not c0 > 0:
        raise DomainError(f"cannot normalize a model with C(0) = {c0}")
    return Scaled(model, 1.0 / c0, certificate=model.certificate)


# -- validity checks ---------------------------------------------------------


def _log_density(family, d, r):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(np.asarray(family.spectral_density(d, r), dtype=float))


def _start_directions(d, n):
    if d == 1:
        return np.array([[1.0]])
    if d == 2:
        ang = np.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    # Fibonacci points on the upper half of the sphere, padded with zeros for d > 3.
    k = np.arange(n) + 0.5
    z = k / n
    theta = np.pi * (1 + 5**0.5) * k
    rho = np.sqrt(1 - z * z)
    v = np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=1)
    if d > 3:
        rng = np.random.default_rng(0)
        extra = rng.standard_normal((n, d))
        extra[:, :3] += v
        v = extra / np.linalg.norm(extra, axis=1, keepdims=True)
    return v


def spectral_ratio_sup(family, A1, A2, d=None, budget=4000):
    """
    Numerical ``sup_w f_d(|w|_{A2^-1}) / f_d(|w|_{A1^-1})``.

    A coarse scan over directions and log-spaced radii is followed by
    Nelder-Mead ascent of the log ratio from the best 32 starting points
    (8 directions on 4 nested spheres in 2D).  The value at ``w = 0`` and
    the asymptotic behaviour along every start direction are included.

    Returns
    -------
    sup : float
        Largest ratio found (``inf`` when a zero denominator meets a
        positive numerator).
    info : dict
        ``argmax``, ``evaluations`` and ``growing_at_infinity`` (True when
        the ratio still increases at the largest radius probed, so the
        supremum may be larger than reported).
    """
    d = A1.dim if d is None else d
    inv1, inv2 = A1.inverse, A2.inverse
    evals = 0

    def log_ratio(w):
        nonlocal evals
        w = np.atleast_2d(w)
        evals += len(w)
        q1 = np.sqrt(np.einsum("ni,ij,nj->n", w, inv1, w))
        q2 = np.sqrt(np.einsum("ni,ij,nj->n", w, inv2, w))
        l1 = _log_density(family, d, q1)
        l2 = _log_density(family, d, q2)
        with np.errstate(invalid="ignore"):
            out = l2 - l1
        out = np.where(np.isneginf(l1) & np.isneginf(l2), -np.inf, out)
        out = np.where(np.isneginf(l1) & ~np.isneginf(l2), np.inf, out)
        return np.where(np.isnan(out), -np.inf, out)

    n_dir = 8 if d == 2 else (1 if d == 1 else 16)
    dirs = _start_directions(d, 16 if d >= 2 else 1)
    radii = np.concatenate([[1e-8], np.logspace(-2, 3, 31)])
    grid = (dirs[:, None, :] * radii[None, :, None]).reshape(-1, d)
    vals = log_ratio(grid)
    best = float(np.max(vals))
    arg = grid[int(np.argmax(vals))]

    # 32 starts: best scan points plus fixed nested spheres.
    sphere_dirs = _start_directions(d, n_dir)
    starts = [s * r for r in (0.5, 2.0, 8.0, 32.0) for s in sphere_dirs]
    order = np.argsort(vals)[::-1][:8]
    starts = list(grid[order]) + starts
    starts = starts[:32] if len(starts) > 32 else starts
    per_start = max(50, budget // max(len(starts), 1))
    for w0 in starts:
        if evals >= budget:
            break
        res = optimize.minimize(
            lambda w: -float(log_ratio(w)[0]) if np.isfinite(log_ratio(w)[0]) else (
                -np.inf if log_ratio(w)[0] > 0 else 1e300),
            w0, method="Nelder-Mead",
            options={"maxfev": per_start, "xatol": 1e-10, "fatol": 1e-14},
        )
        val = -res.fun
        if val > best:
            best, arg = float(val), res.x

    far = np.array([1e2, 1e3, 3e3])
    growing = False
    for v in sphere_dirs:
        try:
            lv = log_ratio(far[:, None] * v[None, :])
        except ConvergenceError:
            continue
        if np.max(lv) > best:
            best, arg = float(np.max(lv)), far[int(np.argmax(lv))] * v
        if np.isfinite(lv[-1]) and lv[-1] > lv[-2] + 1e-9:
            growing = True
        if np.isposinf(lv[-1]):
            growing = True
    at_zero = float(log_ratio(np.full(d, 1e-12))[0])
    if at_zero > best:
        best, arg = at_zero, np.zeros(d)
    sup = float(np.exp(best)) if np.isfinite(best) else (np.inf if best > 0 else 0.0)
    return sup, {"argmax": np.asarray(arg), "evaluations": evals, "growing_at_infinity": growing}


def check_T1_general(phi, A1, A2, b1, b2, d=None, omega_budget=4000, use_closed_form=True):
    """
    Validity of ``b1 phi(|h|_A1) - b2 phi(|h|_A2)`` in ``R^d``.

    The condition is ``b1 >= b2 sqrt(|A1|/|A2|) sup_w f(|w|_{A2^-1}) /
    f(|w|_{A1^-1})``.  For families with a nonincreasing spectral density
    and ``A1 >= A2`` in the Loewner order the supremum is 1 and the check
    is closed form; otherwise the supremum is searched numerically.
    """
    d = A1.dim if d is None else d
    if not phi.valid_in(d):
        return ValidityCertificate(Status.FAILED, f"{phi!r} is not a covariance in R^{d}")
    if b2 == 0:
        return ValidityCertificate(Status.PROVED, "no negative term", lhs=b1, rhs=0.0,
                                   relation=f"{b1:g} ≥ 0")
    if not phi.has_spectral_density_in(d):
        return ValidityCertificate(Status.UNCHECKED, f"{phi!r} has no spectral density in R^{d}")
    det_ratio = math.sqrt(A1.det / A2.det)
    diagnostics = {"det_ratio": det_ratio}
    if use_closed_form and phi.spectral_density_nonincreasing_in(d) and loewner_geq(A1, A2):
        sup = 1.0
        reason = "nonincreasing density and A1 ⪰ A2: b1 ≥ b2 |A1|^1/2 / |A2|^1/2"
        growing = False
    else:
        sup, info = spectral_ratio_sup(phi, A1, A2, d, budget=omega_budget)
        diagnostics.update(info)
        growing = info["growing_at_infinity"]
        reason = "numerical supremum of the spectral ratio"
    diagnostics["sup"] = sup
    rhs = b2 * det_ratio * sup
    ok = _geq(b1, rhs)
    if np.isfinite(sup) and sup > 0:
        factor = 1.0 / (det_ratio * sup)
        relation = f"{b1:g}·{factor:.6g} {'≥' if ok else '<'} {b2:g}"
    else:
        relation = f"{b1:g} {'≥' if ok else '<'} {rhs:.6g}"
    if not ok:
        status = Status.FAILED
    elif growing:
        status = Status.UNCHECKED
        reason += " (ratio still increasing at the largest radius probed)"
    else:
        status = Status.PROVED if sup == 1.0 and "⪰" in reason else Status.NUMERIC
    return ValidityCertificate(status, reason, lhs=b1, rhs=rhs, relation=relation,
                               diagnostics=diagnostics)


def _t2_spectral_min(phi, a1, a2, b1, b2, d, eta, n_radial=400, n_dir=64):
    eta = np.asarray(eta, dtype=float)
    dirs = _start_directions(d, n_dir)
    dirs = np.concatenate([dirs, -dirs]) if d > 1 else np.array([[1.0], [-1.0]])
    r = np.concatenate([[0.0], np.logspace(-3, 2, n_radial)])
    w = (dirs[:, None, :] * r[None, :, None]).reshape(-1, d)
    rad = np.linalg.norm(w, axis=1)
    with np.errstate(invalid="ignore", over="ignore"):
        f1 = a1 ** (-d / 2.0) * np.asarray(phi.spectral_density(d, rad / math.sqrt(a1)), dtype=float)
        f2 = a2 ** (-d / 2.0) * np.asarray(phi.spectral_density(d, rad / math.sqrt(a2)), dtype=float)
        g = b1 * f1 - b2 * np.cos(w @ eta) * f2
    g = np.where(np.isnan(g), -np.inf, g)
    i = int(np.argmin(g))
    peak = float(np.max(np.where(np.isfinite(g), np.abs(g), 0.0)))
    return float(g[i]), w[i], peak


def check_T2(phi, a1, a2, b1, b2, d, eta=None):
    """
    Validity of the shifted construction.

    Sufficient condition: ``phi`` has a nonincreasing d-radial spectral
    density, ``a1 >= a2`` and ``b1 >= b2 (a1/a2)^(d/2)``; the shift does
    not enter.
    When it does not hold the result is never FAILED (the condition is not
    known to be necessary): a numerical scan of the spectral density
    ``b1 f_a1(w) - b2 cos(w.eta) f_a2(w)`` gives NUMERIC if it stays
    nonnegative, UNCHECKED otherwise.
    """
    if not phi.valid_in(d):
        return ValidityCertificate(Status.UNCHECKED, f"{phi!r} is not a covariance in R^{d}")
    if b2 == 0:
        return ValidityCertificate(Status.PROVED, "no negative term", lhs=b1, rhs=0.0,
                                   relation=f"{b1:g} ≥ 0")
    rhs = b2 * (a1 / a2) ** (d / 2.0)
    ok = _geq(b1, rhs)
    relation = f"{b1:g} {'≥' if ok else '<'} {b2:g}·({a1:g}/{a2:g})^{d / 2:g} = {rhs:.6g}"
    monotone = phi.spectral_density_nonincreasing_in(d)
    ordered = a1 >= a2
    if monotone and ordered and ok:
        return ValidityCertificate(Status.PROVED, "nonincreasing density and b1 ≥ b2 (a1/a2)^(d/2)",
                                   lhs=b1, rhs=rhs, relation=relation)
    if not monotone:
        why = f"precondition fails: no nonincreasing spectral density in R^{d}"
    elif not ordered:
        why = "closed form needs a1 ≥ a2"
    else:
        why = "sufficient condition b1 ≥ b2 (a1/a2)^(d/2) fails"
    if eta is None or not phi.has_spectral_density_in(d):
        return ValidityCertificate(Status.UNCHECKED, why, lhs=b1, rhs=rhs, relation=relation)
    gmin, wmin, peak = _t2_spectral_min(phi, a1, a2, b1, b2, d, eta)
    diag = {"spectral_min": gmin, "spectral_argmin": wmin, "spectral_peak": peak}
    if np.isfinite(gmin) and gmin >= -1e-10 * peak:
        return ValidityCertificate(Status.NUMERIC, why + "; spectral density nonnegative on scan grid",
                                   lhs=b1, rhs=rhs, relation=relation, diagnostics=diag)
    return ValidityCertificate(Status.UNCHECKED, why + "; numerical spectral check found negative values",
                               lhs=b1, rhs=rhs, relation=relation, diagnostics=diag)


def check_T3(phi1, phi2, d):
    """
    Validity of the derivative construction: ``phi2`` twice differentiable
    at the origin and both components valid in ``R^d``.  No constraint on
    the coefficients.
    """
    if not isinstance(phi2, IsotropicFamily):
        return ValidityCertificate(Status.FAILED, "phi2 must be an isotropic family")
    if not phi2.valid_in(d):
        return ValidityCertificate(Status.FAILED, f"phi2 {phi2!r} is not a covariance in R^{d}")
    if not phi2.twice_differentiable():
        return ValidityCertificate(Status.FAILED, f"phi2 {phi2!r} is not twice differentiable at the origin")
    if isinstance(phi1, CovarianceModel):
        c1 = phi1.certificate if phi1.certificate is not UNCHECKED else certify(phi1, d)
        if not c1.passed:
            return ValidityCertificate(c1.status, "phi1 model not certified: " + c1.reason)
        return ValidityCertificate(Status.PROVED, "sum of a valid covariance and a derivative covariance")
    if not phi1.valid_in(d):
        return ValidityCertificate(Status.FAILED, f"phi1 {phi1!r} is not a covariance in R^{d}")
    return ValidityCertificate(Status.PROVED, "sum of a valid covariance and a derivative covariance")


def derivative_bracket(phi2, a2, u, h):
    """
    ``cos^2(theta) phi2''(t) + sin^2(theta) phi2'(t)/t`` with
    ``t = sqrt(a2)|h|`` and ``theta`` the angle between ``h`` and ``u``.

    Equals ``u^T Hess[phi2(sqrt(a2)|.|)](h) u / a2``, i.e. minus the
    covariance of the directional derivative field ``(d Y2/du)(sqrt(a2) x)``.
    At ``h = 0`` the limit ``phi2''(0)`` is returned.
    """
    h = np.asarray(h, dtype=float)
    u = np.asarray(u, dtype=float)
    r = _norm(h)
    t = math.sqrt(a2) * r
    zero = r == 0
    rs = np.where(zero, 1.0, r)
    cos2 = np.where(zero, 1.0, (h @ u) ** 2 / rs**2)
    cos2 = np.clip(cos2, 0.0, 1.0)
    out = cos2 * phi2.d2(t) + (1.0 - cos2) * phi2.d1_over_t(t)
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def gram_matrix(model, points, override=False):
    """
    ``G_ij = C(x_i - x_j)``, exactly symmetric.

    Raises
    ------
    InvalidModelError
        If the model's certificate does not pass and ``override`` is False.
    """
    model = ensure_valid(model, override=override)
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None] if model.dim == 1 else x[None, :]
    n = len(x)
    iu, ju = np.triu_indices(n, k=1)
    g = np.empty((n, n))
    c0 = float(evaluate(model, np.zeros(model.dim)))
    np.fill_diagonal(g, c0)
    chunk = 2_000_000
    for s in range(0, len(iu), chunk):
        i, j = iu[s:s + chunk], ju[s:s + chunk]
        v = evaluate(model, x[i] - x[j])
        g[i, j] = v
        g[j, i] = v
    return g
