"""
Isotropic covariance families and their d-radial spectral densities.

Every family is a frozen dataclass exposing the radial profile ``phi(t)``,
its derivatives, the spectral density in dimension ``d`` and a few trait
predicates used by the validity checks in :mod:`holecov.transforms`.

Spectral densities follow the Fourier convention

    f(w) = (2 pi)^-d  int exp(-i w.h) C(h) dh,

so that ``C(h) = int exp(i w.h) f(w) dw``.  Their radial parts are
computed independently by :func:`hankel_spectral_oracle`, which the tests
use to check every closed form.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import (
    ConvergenceError,
    DifferentiabilityError,
    DomainError,
    NoSpectralDensityError,
)
from .specfun import gauss_2f1, hyper_1f2, omega_d

__all__ = [
    "IsotropicFamily",
    "Matern",
    "Cauchy",
    "GaussHypergeometric",
    "CardinalSine",
    "Gaussian",
    "FamilyTraits",
    "family_traits",
    "phi",
    "phi_normalized",
    "phi_d1",
    "phi_d1_over_t",
    "phi_d2",
    "spectral_density",
    "hankel_spectral_oracle",
]

_SMALL_T = 1e-8


def _as_array(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("radial argument must be >= 0")
    return t


def _ret(x):
    return x[()] if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class FamilyTraits:
    twice_differentiable_at_origin: bool
    spectral_density_nonincreasing: bool
    has_spectral_density: bool
    valid: bool


class IsotropicFamily:
    """Base class of the radial covariance profiles ``phi: [0, inf) -> R``."""

    name = "family"

    def phi(self, t):
        raise NotImplementedError

    def d1(self, t):
        """First radial derivative ``phi'(t)``."""
        raise NotImplementedError

    def d1_over_t(self, t):
        """``phi'(t) / t``, with its limit ``phi''(0)`` at ``t = 0``."""
        raise NotImplementedError

    def d2(self, t):
        """Second radial derivative ``phi''(t)``."""
        raise NotImplementedError

    def spectral_density(self, d, omega):
        raise NotImplementedError

    @property
    def phi0(self):
        return float(self.phi(0.0))

    def phi_normalized(self, t):
        return self.phi(t) / self.phi0

    # trait predicates
    def valid_in(self, d):
        return True

    def twice_differentiable(self):
        return True

    def has_spectral_density_in(self, d):
        return self.valid_in(d)

    def spectral_density_nonincreasing_in(self, d):
        return self.has_spectral_density_in(d)

    def traits(self, d):
        return FamilyTraits(
            twice_differentiable_at_origin=self.twice_differentiable(),
            spectral_density_nonincreasing=self.spectral_density_nonincreasing_in(d),
            has_spectral_density=self.has_spectral_density_in(d),
            valid=self.valid_in(d),
        )

    def _require_d2_at_origin(self, t):
        if not self.twice_differentiable() and np.any(t == 0):
            raise DifferentiabilityError(f"{self!r} is not twice differentiable at the origin")


@dataclass(frozen=True)
class Matern(IsotropicFamily):
    """Matern profile ``2^(1-nu)/Gamma(nu) t^nu K_nu(t)``."""

    nu: float
    name = "matern"

    def __post_init__(self):
        if not self.nu > 0:
            raise DomainError(f"Matern requires nu > 0, got {self.nu}")

    @property
    def _c(self):
        return 2.0 ** (1.0 - self.nu) / special.gamma(self.nu)

    def _tk(self, power, order, t):
        # t^power * K_order(t) for t > 0, exponent-scaled to avoid overflow of K.
        return t**power * special.kve(abs(order), t) * np.exp(-t)

    def phi(self, t):
        t = _as_array(t)
        small = t < 1e-12
        ts = np.where(small, 1.0, t)
        out = np.where(small, 1.0, self._c * self._tk(self.nu, self.nu, ts))
        return _ret(out)

    def d1(self, t):
        t = _as_array(t)
        nu = self.nu
        zero = t == 0
        ts = np.where(zero, 1.0, t)
        out = -self._c * self._tk(nu, nu - 1.0, ts)
        if nu > 0.5:
            lim = 0.0
        elif nu == 0.5:
            lim = -1.0
        else:
            lim = -np.inf
        return _ret(np.where(zero, lim, out))

    def d1_over_t(self, t):
        t = _as_array(t)
        nu = self.nu
        self._require_d2_at_origin(t)
        small = (t < _SMALL_T) if nu > 1 else (t == 0)
        ts = np.where(small, 1.0, t)
        out = -self._c * self._tk(nu - 1.0, nu - 1.0, ts)
        if nu > 1:
            out = np.where(small, -1.0 / (2.0 * (nu - 1.0)), out)
        return _ret(out)

    def d2(self, t):
        t = _as_array(t)
        nu = self.nu
        self._require_d2_at_origin(t)
        small = (t < _SMALL_T) if nu > 1 else (t == 0)
        ts = np.where(small, 1.0, t)
        out = self._c * (self._tk(nu, nu - 2.0, ts) - self._tk(nu - 1.0, nu - 1.0, ts))
        if nu > 1:
            out = np.where(small, -1.0 / (2.0 * (nu - 1.0)), out)
        return _ret(out)

    def twice_differentiable(self):
        return self.nu > 1

    def spectral_density(self, d, omega):
        omega = _as_array(omega)
        p = self.nu + d / 2.0
        logc = special.gammaln(p) - special.gammaln(self.nu) - (d / 2.0) * math.log(math.pi)
        return _ret(np.exp(logc - p * np.log1p(omega * omega)))


@dataclass(frozen=True)
class Cauchy(IsotropicFamily):
    """Cauchy profile ``(1 + t^2)^-delta``."""

    delta: float
    name = "cauchy"

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"Cauchy requires delta > 0, got {self.delta}")

    def phi(self, t):
        t = _as_array(t)
        return _ret((1.0 + t * t) ** (-self.delta))

    def d1(self, t):
        t = _as_array(t)
        return _ret(-2.0 * self.delta * t * (1.0 + t * t) ** (-self.delta - 1.0))

    def d1_over_t(self, t):
        t = _as_array(t)
        return _ret(-2.0 * self.delta * (1.0 + t * t) ** (-self.delta - 1.0))

    def d2(self, t):
        t = _as_array(t)
        q = 1.0 + t * t
        dl = self.delta
        return _ret(-2.0 * dl * q ** (-dl - 1.0) + 4.0 * dl * (dl + 1.0) * t * t * q ** (-dl - 2.0))

    def has_spectral_density_in(self, d):
        return self.delta > (d - 1) / 4.0

    def spectral_density(self, d, omega):
        if not self.has_spectral_density_in(d):
            raise NoSpectralDensityError(
                f"Cauchy density formula needs delta > (d-1)/4 = {(d - 1) / 4}"
            )
        omega = _as_array(omega)
        dl = self.delta
        order = d / 2.0 - dl
        logc = (1.0 - d / 2.0 - dl) * math.log(2.0) - special.gammaln(dl) - (d / 2.0) * math.log(math.pi)
        zero = omega == 0
        w = np.where(zero, 1.0, omega)
        out = np.exp(logc) * special.kve(abs(order), w) * np.exp(-w) / w**order
        if order < 0:
            lim = math.exp(special.gammaln(-order) - special.gammaln(dl) - (d / 2.0) * math.log(4 * math.pi))
        else:
            lim = np.inf
        return _ret(np.where(zero, lim, out))


@dataclass(frozen=True)
class Gaussian(IsotropicFamily):
    """Gaussian profile ``exp(-t^2)``."""

    name = "gaussian"

    def phi(self, t):
        t = _as_array(t)
        return _ret(np.exp(-t * t))

    def d1(self, t):
        t = _as_array(t)
        return _ret(-2.0 * t * np.exp(-t * t))

    def d1_over_t(self, t):
        t = _as_array(t)
        return _ret(-2.0 * np.exp(-t * t))

    def d2(self, t):
        t = _as_array(t)
        return _ret((4.0 * t * t - 2.0) * np.exp(-t * t))

    def spectral_density(self, d, omega):
        omega = _as_array(omega)
        return _ret((4.0 * math.pi) ** (-d / 2.0) * np.exp(-omega * omega / 4.0))


@dataclass(frozen=True)
class CardinalSine(IsotropicFamily):
    """Cardinal sine (wave) profile ``sin(t)/t`` with value 1 at the origin."""

    name = "cardinal_sine"

    def phi(self, t):
        t = _as_array(t)
        return _ret(np.sinc(t / math.pi))

    def d1(self, t):
        t = _as_array(t)
        return _ret(t * self.d1_over_t(t))

    def d1_over_t(self, t):
        t = _as_array(t)
        small = t < 0.1
        ts = np.where(small, 1.0, t)
        direct = (ts * np.cos(ts) - np.sin(ts)) / ts**3
        t2 = t * t
        series = -1.0 / 3 + t2 / 30 - t2**2 / 840 + t2**3 / 45360 - t2**4 / 3991680
        return _ret(np.where(small, series, direct))

    def d2(self, t):
        t = _as_array(t)
        small = t < 0.1
        ts = np.where(small, 1.0, t)
        s, c = np.sin(ts), np.cos(ts)
        direct = -s / ts - 2.0 * c / ts**2 + 2.0 * s / ts**3
        t2 = t * t
        series = -1.0 / 3 + t2 / 10 - t2**2 / 168 + t2**3 / 6480 - t2**4 / 443520
        return _ret(np.where(small, series, direct))

    def valid_in(self, d):
        return d <= 3

    def has_spectral_density_in(self, d):
        return d <= 2

    def spectral_density_nonincreasing_in(self, d):
        return d == 1

    def spectral_density(self, d, omega):
        if not self.has_spectral_density_in(d):
            raise NoSpectralDensityError("the cardinal sine has no spectral density for d >= 3")
        omega = _as_array(omega)
        # Projection of the uniform measure on the unit sphere of R^3 onto R^d.
        const = special.gamma(1.5) / (math.pi ** (d / 2.0) * special.gamma((3.0 - d) / 2.0))
        inside = omega < 1.0
        base = np.where(inside, 1.0 - omega * omega, 1.0)
        out = np.where(inside, const * base ** ((1.0 - d) / 2.0), 0.0)
        if d == 2:
            out = np.where(omega == 1.0, np.inf, out)
        return _ret(out)


@dataclass(frozen=True)
class GaussHypergeometric(IsotropicFamily):
    """
    Compactly supported Gauss hypergeometric profile on ``[0, 1]``.

    ``phi(t) = s^p 2F1(beta-alpha, gamma-alpha; p+1; s)`` with
    ``s = (1 - t^2)_+`` and ``p = beta - alpha + gamma - dim/2 - 1``.  The
    value at the origin is left unnormalized; use :meth:`phi_normalized`
    for a correlation.

    The profile depends on ``dim`` and is a covariance in ``R^d`` for every
    ``d <= dim``.  Its d-radial density is nonincreasing only for
    ``d <= dim - 2``: with ``dim = 2`` the density of ``(3, 7/2, 6)``
    oscillates, while the same parameters with ``dim = 4`` give a valid
    covariance in ``R^4`` whose 2-radial density decreases.  Twice
    differentiability at the origin needs ``2 alpha > dim + 2``.
    """

    alpha: float
    beta: float
    gamma: float
    dim: int = 2
    name = "gauss_hypergeometric"

    def __post_init__(self):
        if not self._constraints_hold(self.dim):
            raise DomainError(
                "Gauss hypergeometric parameters violate 2a > d, 2(b-a)(g-a) >= a, "
                f"2(b+g) >= 6a+1 for d={self.dim}: {(self.alpha, self.beta, self.gamma)}"
            )

    def _constraints_hold(self, d):
        a, b, g = self.alpha, self.beta, self.gamma
        tol = 1e-12
        return (
            2 * a > d
            and 2 * (b - a) * (g - a) >= a - tol
            and 2 * (b + g) >= 6 * a + 1 - tol
        )

    @property
    def _abc(self):
        a = self.beta - self.alpha
        b = self.gamma - self.alpha
        c = self.beta - self.alpha + self.gamma - self.dim / 2.0
        return a, b, c

    def phi(self, t):
        t = _as_array(t)
        a, b, c = self._abc
        s = np.clip(1.0 - t * t, 0.0, None)
        inside = s > 0
        ss = np.where(inside, s, 0.5)
        out = np.where(inside, ss ** (c - 1.0) * gauss_2f1(a, b, c, ss), 0.0)
        return _ret(out)

    def _g1(self, s):
        a, b, c = self._abc
        try:
            return (c - 1.0) * s ** (c - 2.0) * gauss_2f1(a, b, c - 1.0, s)
        except DomainError as exc:
            raise DifferentiabilityError(str(exc)) from exc

    def d1_over_t(self, t):
        t = _as_array(t)
        self._require_d2_at_origin(t)
        s = np.clip(1.0 - t * t, 0.0, None)
        inside = s > 0
        ss = np.where(inside, s, 0.5)
        return _ret(np.where(inside, -2.0 * self._g1(ss), 0.0))

    def d1(self, t):
        t = _as_array(t)
        s = np.clip(1.0 - t * t, 0.0, None)
        inside = (s > 0) & (t > 0)
        ss = np.where(inside, s, 0.5)
        return _ret(np.where(inside, -2.0 * t * self._g1(ss), 0.0))

    def d2(self, t):
        t = _as_array(t)
        self._require_d2_at_origin(t)
        a, b, c = self._abc
        s = np.clip(1.0 - t * t, 0.0, None)
        inside = s > 0
        ss = np.where(inside, s, 0.5)
        interior = inside & (t > 0)
        s2 = np.where(interior, ss, 0.5)
        g2 = (c - 1.0) * (c - 2.0) * s2 ** (c - 3.0) * gauss_2f1(a, b, c - 2.0, s2)
        second = np.where(interior, 4.0 * t * t * g2, 0.0)
        return _ret(np.where(inside, second - 2.0 * self._g1(ss), 0.0))

    def valid_in(self, d):
        # Parameters are checked against ``dim`` in the constructor.
        return 1 <= d <= self.dim

    def twice_differentiable(self):
        return 2 * self.alpha > self.dim + 2

    def has_spectral_density_in(self, d):
        return self.valid_in(d)

    def spectral_density_nonincreasing_in(self, d):
        # Valid in R^dim with dim >= d + 2, so f_d is the montee of f_{d+2} >= 0.
        return 1 <= d <= self.dim - 2

    @property
    def kappa(self):
        """Positive constant of the spectral density, fitted by quadrature at zero frequency."""
        return _hypergeometric_kappa(self)

    def spectral_density(self, d, omega):
        """
        ``kappa 1F2(alpha; beta, gamma; -omega^2/4)`` in ``R^dim``; for
        ``d < dim`` the Hankel transform of the compact profile is computed
        by quadrature.
        """
        if not self.has_spectral_density_in(d):
            raise NoSpectralDensityError(
                f"Gauss hypergeometric profile with dim={self.dim} is not a covariance in R^{d}"
            )
        omega = _as_array(omega)
        if d == self.dim:
            vals = hyper_1f2(self.alpha, self.beta, self.gamma, -omega * omega / 4.0)
            return _ret(self.kappa * np.asarray(vals))
        flat = [hankel_spectral_oracle(self.phi, d, float(w), truncation=1.0, tolerance=1e-12)
                for w in np.ravel(omega)]
        return _ret(np.reshape(flat, np.shape(omega)))


@functools.lru_cache(maxsize=64)
def _hypergeometric_kappa(family):
    return hankel_spectral_oracle(family.phi, family.dim, 0.0, truncation=1.0, tolerance=1e-12)


# -- module-level accessors ------------------------------------------------


def phi(family, t):
    return family.phi(t)


def phi_normalized(family, t):
    return family.phi_normalized(t)


def phi_d1(family, t):
    return family.d1(t)


def phi_d1_over_t(family, t):
    return family.d1_over_t(t)


def phi_d2(family, t):
    return family.d2(t)


def spectral_density(family, d, omega):
    return family.spectral_density(d, omega)


def family_traits(family, d):
    return family.traits(d)


# -- Hankel quadrature oracle ---------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _gauss_legendre_panels(func, edges):
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    return (func(x) * _GL_W[None, :]).sum(axis=1) * half


def _wynn_epsilon(seq):
    """Wynn epsilon extrapolation; returns (estimate, error estimate)."""
    e_prev = np.zeros(len(seq) + 1)
    e_cur = np.asarray(seq, dtype=float)
    evens = [e_cur[-1]]
    col = 0
    while len(e_cur) > 1:
        diff = np.diff(e_cur)
        if np.any(diff == 0):
            return float(e_cur[-1]), 0.0
        e_next = e_prev[1:len(e_cur)] + 1.0 / diff
        e_prev, e_cur = e_cur, e_next
        col += 1
        if col % 2 == 0:
            evens.append(e_cur[-1])
    if len(evens) < 2:
        return float(evens[-1]), abs(float(seq[-1] - seq[-2]))
    return float(evens[-1]), abs(float(evens[-1] - evens[-2]))


def hankel_spectral_oracle(phi_callable, d, omega, truncation=None, tolerance=1e-10,
                           damping=0.0, full_output=False, abs_tolerance=0.0):
    """
    d-radial spectral density of a radial profile by numerical Hankel transform.

    Computes

        f_d(u) = (2 pi)^(-d/2) u^((2-d)/2) int_0^inf J_{(d-2)/2}(u h) phi(h) h^(d/2) dh

    written through the normalized kernel ``Omega_d`` so that ``u = 0`` and
    ``d = 1`` need no special casing.

    Parameters
    ----------
    phi_callable : callable
        Vectorized radial profile.
    d : int
        Space dimension.
    omega : float
        Radial frequency ``u >= 0``.
    truncation : float, optional
        Upper integration limit.  Use the support radius for compactly
        supported profiles or a point past which ``phi`` is negligible.
        When omitted the infinite tail is summed over half periods of the
        Bessel kernel and accelerated with the Wynn epsilon algorithm.
    tolerance : float
        Relative accuracy requested.
    damping : float
        Optional Gaussian convergence factor ``exp(-damping h^2)`` for
        profiles that do not decay (e.g. the cardinal sine).  It smooths
        the returned density by a Gaussian of variance ``2 damping``.
    full_output : bool
        Also return the error estimate.
    abs_tolerance : float
        Absolute accuracy accepted regardless of ``tolerance``; useful
        where the density vanishes.

    Raises
    ------
    ConvergenceError
        When the error estimate exceeds both ``tolerance`` relative to the
        value and the double precision cancellation floor
        ``eps * int |integrand|``.
    """
    d = int(d)
    u = float(omega)
    if d < 1 or u < 0:
        raise DomainError("hankel_spectral_oracle requires d >= 1 and omega >= 0")
    nu = (d - 2) / 2.0
    prefactor = (2.0 * math.pi) ** (-d / 2.0) / (2.0**nu * special.gamma(nu + 1.0))

    def integrand(h):
        val = omega_d(d, u * h) * phi_callable(h) * h ** (d - 1)
        if damping > 0:
            val = val * np.exp(-damping * h * h)
        return val

    upper = np.inf if truncation is None else float(truncation)
    if damping > 0:
        upper = min(upper, math.sqrt(45.0 / damping))

    head_end = min(upper, 30.0)
    n_osc = u * head_end / math.pi
    head, head_err = integrate.quad(
        lambda h: float(integrand(np.asarray(h))), 0.0, head_end,
        epsabs=0.0, epsrel=min(tolerance, 1e-10) * 0.1, limit=max(200, int(20 * n_osc) + 50),
    )
    total_err = head_err
    half_period = math.pi / u if u > 0 else np.inf
    panel = min(half_period, 1.0)

    if upper > head_end and np.isfinite(upper):
        n = int(math.ceil((upper - head_end) / panel))
        edges = np.linspace(head_end, upper, n + 1)
        tail = math.fsum(_gauss_legendre_panels(integrand, edges))
        value = head + tail
    elif upper > head_end:
        if u == 0:
            raise DomainError("an infinite tail at omega = 0 needs an explicit truncation")
        per = int(math.ceil(half_period / panel))
        n_terms = 24
        for _ in range(4):
            edges = head_end + np.arange(n_terms * per + 1) * (half_period / per)
            pieces = _gauss_legendre_panels(integrand, edges).reshape(n_terms, per).sum(axis=1)
            partial = head + np.cumsum(pieces)
            value, ext_err = _wynn_epsilon(partial)
            if ext_err <= tolerance * abs(value):
                break
            n_terms *= 2
        total_err += ext_err
    else:
        value = head

    value *= prefactor
    err = total_err * prefactor
    # Cancellation floor: nothing below eps * int |integrand| is resolvable.
    scale, _ = integrate.quad(
        lambda h: abs(float(phi_callable(np.asarray(h)))) * h ** (d - 1), 0.0, head_end, limit=200,
    )
    floor = 200 * np.finfo(float).eps * scale * prefactor
    if err > max(tolerance * abs(value), abs_tolerance, floor, 1e-300):
        raise ConvergenceError(
            f"Hankel quadrature at omega={u} reached only {err:.3g} (value {value:.6g})",
            achieved=err,
        )
    if full_output:
        return value, err
    return value

