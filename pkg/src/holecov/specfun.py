"""
Special functions used by the covariance families.

Bessel functions, the gamma function and the Gauss hypergeometric function
are thin, domain-checked wrappers over :mod:`scipy.special`.  The
generalized hypergeometric function ``1F2`` is summed here directly in
extended precision because its alternating power series loses all double
precision digits once ``|z|`` exceeds a few hundred.
"""

import math

import mpmath
import numpy as np
from scipy import optimize, special

from .errors import ConvergenceError, DomainError

__all__ = [
    "gamma",
    "bessel_j",
    "bessel_k",
    "gauss_2f1",
    "hyper_1f2",
    "omega_d",
    "omega_lower_bound",
]

_MAX_J_ORDER = 4.0  # (d - 2) / 2 for d = 10


def gamma(x):
    return special.gamma(x)


def bessel_j(order, t):
    """
    Bessel function of the first kind ``J_order(t)`` for ``t >= 0``.

    Only the orders needed by Hankel transforms in dimensions 1 to 10 are
    accepted: ``-1/2, 0, 1/2, 1, ..., 4``.

    Parameters
    ----------
    order : float
        Integer or half-integer order in ``[-1/2, 4]``.
    t : float or array_like
        Nonnegative argument.

    Returns
    -------
    float or ndarray
    """
    order = float(order)
    if 2.0 * order != round(2.0 * order) or order < -0.5 or order > _MAX_J_ORDER:
        raise DomainError(f"unsupported Bessel J order {order}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("bessel_j requires t >= 0")
    out = special.jv(order, t)
    if order == -0.5:
        # J_{-1/2}(0) is infinite; callers only use it multiplied by t^{1/2}.
        out = np.where(t == 0, np.inf, out)
    return out[()] if out.ndim == 0 else out


def bessel_k(order, t):
    """
    Modified Bessel function of the second kind ``K_order(t)``, ``t > 0``.

    ``K`` is even in its order, so negative orders are accepted and mapped
    to ``|order|``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("bessel_k requires t > 0")
    if np.any(t < 1e-300):
        raise OverflowError("bessel_k argument below 1e-300 overflows")
    out = special.kv(abs(float(order)), t)
    return out[()] if out.ndim == 0 else out


def gauss_2f1(a, b, c, z):
    """
    Gauss hypergeometric function ``2F1(a, b; c; z)`` for ``z`` in ``[0, 1]``.

    At ``z = 1`` Gauss's summation theorem is used, which requires
    ``c - a - b > 0``.
    """
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"c = {c} is a nonpositive integer")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > 1) or np.any(np.isnan(z)):
        raise DomainError("gauss_2f1 is only provided on 0 <= z <= 1")
    at_one = z == 1.0
    if np.any(at_one):
        if c - a - b <= 0:
            raise DomainError(f"2F1 diverges at z=1 since c-a-b = {c - a - b} <= 0")
        gauss = math.exp(
            special.gammaln(c) + special.gammaln(c - a - b)
            - special.gammaln(c - a) - special.gammaln(c - b)
        )
        gauss *= special.gammasgn(c) * special.gammasgn(c - a - b)
        gauss *= special.gammasgn(c - a) * special.gammasgn(c - b)
    out = special.hyp2f1(a, b, c, np.where(at_one, 0.0, z))
    if np.any(at_one):
        out = np.where(at_one, gauss, out)
    if not np.all(np.isfinite(out)):
        raise ConvergenceError(f"2F1({a}, {b}; {c}; z) did not converge")
    return out[()] if out.ndim == 0 else out


def _hyper_1f2_scalar(a, b, c, z, tol, max_terms):
    if z == 0:
        return 1.0
    # Scan term magnitudes in log space to size the working precision.
    logt = 0.0
    peak = 0.0
    k = 0
    while k < max_terms:
        num = (a + k) * z
        den = (b + k) * (c + k) * (k + 1)
        if num == 0:
            break
        logt += math.log(abs(num)) - math.log(abs(den))
        peak = max(peak, logt)
        k += 1
        if k > 2 and logt < peak - 60 and logt < -40:
            break
    dps = 20 + int(peak / math.log(10)) + 1
    with mpmath.workdps(dps):
        am, bm, cm, zm = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(c), mpmath.mpf(z)
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        for k in range(max_terms):
            term *= (am + k) * zm / ((bm + k) * (cm + k) * (k + 1))
            total += term
            if term == 0:
                return float(total)
            if k > abs(z) ** 0.5 + 2 and abs(term) <= tol * abs(total):
                return float(total)
        raise ConvergenceError(
            f"1F2({a}; {b}, {c}; {z}) did not converge in {max_terms} terms",
            achieved=float(abs(term / total)),
        )


def hyper_1f2(a, b, c, z, tol=1e-16, max_terms=20000):
    """
    Generalized hypergeometric function ``1F2(a; b, c; z)``.

    The power series is summed with a working precision sized from the
    largest term, so cancellation for large negative ``z`` does not
    destroy the result.

    Raises
    ------
    DomainError
        If ``b`` or ``c`` is a nonpositive integer.
    ConvergenceError
        If the series has not reached ``tol`` after ``max_terms`` terms.
    """
    for name, v in (("b", b), ("c", c)):
        if v <= 0 and float(v).is_integer():
            raise DomainError(f"{name} = {v} is a nonpositive integer")
    z = np.asarray(z, dtype=float)
    out = np.array([_hyper_1f2_scalar(a, b, c, float(zz), tol, max_terms) for zz in z.ravel()])
    out = out.reshape(z.shape)
    return out[()] if out.ndim == 0 else out


def omega_d(d, s):
    """
    Normalized Bessel kernel ``Omega_d(s) = 2^nu Gamma(nu+1) s^-nu J_nu(s)``,
    ``nu = (d - 2) / 2``.

    ``Omega_1`` is the cosine, ``Omega_3`` the cardinal sine, and
    ``Omega_d(0) = 1`` for every ``d``.
    """
    d = int(d)
    if d < 1:
        raise DomainError("omega_d requires d >= 1")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("omega_d requires s >= 0")
    if d == 1:
        out = np.cos(s)
    elif d == 3:
        out = np.sinc(s / np.pi)
    else:
        nu = (d - 2) / 2.0
        small = s < 1e-8
        ss = np.where(small, 1.0, s)
        out = 2.0**nu * special.gamma(nu + 1.0) * ss**(-nu) * special.jv(nu, ss)
        out = np.where(small, 1.0 - s * s / (2.0 * d), out)
    return out[()] if out.ndim == 0 else out


def omega_lower_bound(d, s_max=50.0, n_grid=5001):
    """
    Global minimum of ``Omega_d`` on ``[0, s_max]``.

    Returns
    -------
    (float, float)
        The minimizer and the minimum value.
    """
    grid = np.linspace(0.0, s_max, n_grid)
    vals = omega_d(d, grid)
    i = int(np.argmin(vals))
    step = grid[1] - grid[0]
    lo, hi = max(grid[i] - step, 0.0), min(grid[i] + step, s_max)
    res = optimize.minimize_scalar(
        lambda s: float(omega_d(d, s)), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12},
    )
    if res.fun < vals[i]:
        return float(res.x), float(res.fun)
    return float(grid[i]), float(vals[i])
