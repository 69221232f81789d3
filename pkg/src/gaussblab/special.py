"""Scalar Gaussian special functions.

All functions accept floats or arrays and return the same shape. ``cdf`` is
built on the complementary error function so that both tails keep full
relative precision; ``inv_cdf`` refines a rational initial guess with two
Newton steps.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special as sps

from .errors import DomainError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
INV_SQRT2PI = 1.0 / SQRT2PI

# Acklam's rational approximation, lower region and central region.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def pdf(x):
    x = np.asarray(x, dtype=float)
    return _ret(INV_SQRT2PI * np.exp(-0.5 * x * x))


def cdf(x):
    x = np.asarray(x, dtype=float)
    return _ret(0.5 * sps.erfc(-x / SQRT2))


def sf(x):
    """Upper tail ``1 - cdf(x)`` without cancellation."""
    x = np.asarray(x, dtype=float)
    return _ret(0.5 * sps.erfc(x / SQRT2))


def _initial_lower(p):
    # valid for p <= 1/2
    out = np.empty_like(p)
    tail = p < _P_LOW
    q = np.sqrt(-2.0 * np.log(p[tail]))
    c, d = _C, _D
    out[tail] = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
        (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    mid = ~tail
    q = p[mid] - 0.5
    r = q * q
    a, b = _A, _B
    out[mid] = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
        ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    return out


def inv_cdf(p):
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError("inv_cdf argument must lie in (0, 1)")
    flat = np.atleast_1d(p).astype(float)
    upper = flat > 0.5
    # 1 - p is exact for p >= 1/2, so the upper half is mirrored onto the lower tail
    q = np.where(upper, 1.0 - flat, flat)
    x = _initial_lower(q)
    for _ in range(2):
        x = x - (0.5 * sps.erfc(-x / SQRT2) - q) / (INV_SQRT2PI * np.exp(-0.5 * x * x))
    x = np.where(upper, -x, x)
    return _ret(x.reshape(p.shape))


def upper_mills(r):
    """Integral of ``exp(-s^2/2)`` over ``[r, inf)``."""
    r = np.asarray(r, dtype=float)
    return _ret(math.sqrt(math.pi / 2.0) * sps.erfc(r / SQRT2))


def strip_mass(r):
    """Gaussian measure of the symmetric strip of half-width ``r``: ``2*cdf(r) - 1``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("strip_mass argument must be nonnegative")
    return _ret(sps.erf(r / SQRT2))


def log_strip_mass(r):
    r = np.asarray(r, dtype=float)
    return _ret(np.log1p(-sps.erfc(r / SQRT2)))


def iso_profile(p):
    """Gaussian isoperimetric profile ``pdf(inv_cdf(p))``."""
    return pdf(inv_cdf(p))


def inv_strip_mass(p):
    """Half-width of the symmetric strip with Gaussian measure ``p``."""
    return inv_cdf(0.5 * (1.0 + np.asarray(p, dtype=float)))


def chi2_cdf(x, k):
    x = np.asarray(x, dtype=float)
    return _ret(sps.gammainc(0.5 * k, 0.5 * np.maximum(x, 0.0)))


def ball_mass(n, r):
    """``gamma(r B^n)``, the chi-square CDF at ``r^2``."""
    return chi2_cdf(np.square(r), n)


def chi_density(r, n):
    """Density of ``|Z|`` for ``Z`` standard normal in R^n; the Gaussian perimeter of ``r B^n``."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        logd = ((n - 1) * np.log(r) - 0.5 * r * r
                - (0.5 * n - 1.0) * math.log(2.0) - sps.gammaln(0.5 * n))
    return _ret(np.where(r > 0, np.exp(logd), 2.0 * INV_SQRT2PI if n == 1 else 0.0))


def truncated_moment2(a):
    """``E[x^2 | |x| <= a]`` for standard normal ``x``."""
    a = np.asarray(a, dtype=float)
    h = 0.5 * a * a
    # integral of x^2 over [-a, a] is P(chi2_3 <= a^2)
    with np.errstate(invalid="ignore"):
        out = sps.gammainc(1.5, h) / sps.gammainc(0.5, h)
    out = np.where(a > 0, out, 0.0)
    return _ret(out)


def truncated_moment4(a):
    """``E[x^4 | |x| <= a]`` for standard normal ``x``."""
    a = np.asarray(a, dtype=float)
    h = 0.5 * a * a
    with np.errstate(invalid="ignore"):
        out = 3.0 * sps.gammainc(2.5, h) / sps.gammainc(0.5, h)
    out = np.where(a > 0, out, 0.0)
    return _ret(out)


KINDS = {
    "cdf": cdf,
    "inv_cdf": inv_cdf,
    "pdf": pdf,
    "upper_mills": upper_mills,
    "iso_profile": iso_profile,
    "strip_mass": strip_mass,
}


def gaussian_scalar(kind: str, arg):
    try:
        fn = KINDS[kind]
    except KeyError:
        raise DomainError(f"unknown scalar kind {kind!r}") from None
    return fn(arg)
