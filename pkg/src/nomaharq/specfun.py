"""Scalar special functions: Gaussian Q and its inverse, Ei on the negative
axis, and the two real branches of Lambert W.

``gaussian_q`` and ``gaussian_q_inv`` also accept numpy arrays, since the
Monte Carlo engine evaluates them over whole batches of channel draws.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy import special as _sp

__all__ = [
    "DomainError",
    "WBranch",
    "gaussian_q",
    "gaussian_q_inv",
    "exp_integral_ei",
    "scaled_e1",
    "lambert_w",
]

EULER_GAMMA = 0.57721566490153286061
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_INV_E = math.exp(-1.0)


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class WBranch(enum.Enum):
    PRINCIPAL = "principal"
    NEGATIVE = "negative"


# ----------------------------------------------------------------------------
# Gaussian tail


def gaussian_q(x):
    """Gaussian tail probability ``Q(x) = P(N(0,1) > x)``.

    Computed as ``erfc(x / sqrt(2)) / 2`` which keeps full relative accuracy
    in the upper tail (down to the double underflow near x = 38).
    """
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / _SQRT2)
    return 0.5 * _sp.erfc(np.asarray(x, dtype=float) / _SQRT2)


# Acklam's rational approximation to the standard normal quantile; ~1e-9
# relative, refined below by Halley steps on Q itself.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam_upper(p):
    """Initial guess for Q^-1(p), vectorised."""
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    # The quantile of the lower tail of N(0,1) at p equals -Q^-1(p).
    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(p[lo]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        out[lo] = -num / den
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log1p(-p[hi]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        out[hi] = num / den
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        out[mid] = -num / den
    return out


def gaussian_q_inv(p):
    """Inverse of :func:`gaussian_q` on the open interval (0, 1).

    Rational initial guess followed by two Halley steps, which is enough to
    bring ``gaussian_q(gaussian_q_inv(p))`` to within a few ulp of ``p``.
    """
    scalar = np.ndim(p) == 0
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError(f"gaussian_q_inv requires 0 < p < 1, got {p!r}")

    x = _acklam_upper(arr)
    for _ in range(2):
        err = 0.5 * _sp.erfc(x / _SQRT2) - arr
        u = err * _SQRT2PI * np.exp(0.5 * x * x)
        x = x + u / (1.0 - 0.5 * x * u)
    x[arr == 0.5] = 0.0
    return float(x[0]) if scalar else x


# ----------------------------------------------------------------------------
# Exponential integral


def _e1_series(x: float) -> float:
    total = 0.0
    term = 1.0
    k = 1
    while True:
        term *= -x / k
        contrib = term / k
        total += contrib
        if abs(contrib) < 1e-17 * abs(total) or k > 200:
            break
        k += 1
    return -EULER_GAMMA - math.log(x) - total


def _scaled_e1_cf(x: float) -> float:
    # Modified Lentz on the even form of the continued fraction for
    # e^x E1(x); converges for x >= 1 in well under 100 terms.
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError(f"E1 continued fraction did not converge at x={x}")


def scaled_e1(x: float) -> float:
    """``exp(x) * E1(x)`` for x > 0 without overflow for large x."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"scaled_e1 requires x > 0, got {x!r}")
    if x < 1.0:
        return math.exp(x) * _e1_series(x)
    return _scaled_e1_cf(x)


def exp_integral_ei(x: float) -> float:
    """Exponential integral Ei(x) for x < 0, via Ei(x) = -E1(-x)."""
    x = float(x)
    if not x < 0.0 or math.isnan(x):
        raise DomainError(f"exp_integral_ei is only defined here for x < 0, got {x!r}")
    y = -x
    if y < 1.0:
        return -_e1_series(y)
    return -math.exp(-y) * _scaled_e1_cf(y)


# ----------------------------------------------------------------------------
# Lambert W


def _w_initial(z: float, branch: WBranch) -> float:
    # Square-root expansion about the branch point -1/e.
    p2 = 2.0 * (math.e * z + 1.0)
    p = math.sqrt(max(p2, 0.0))
    if branch is WBranch.PRINCIPAL:
        if z < -0.25:
            return -1.0 + p - p2 / 3.0 + 11.0 / 72.0 * p * p2
        if z < 3.0:
            return math.log1p(z) if z > -0.25 else z
        lz = math.log(z)
        return lz - math.log(lz)
    if z < -0.25:
        return -1.0 - p - p2 / 3.0 - 11.0 / 72.0 * p * p2
    lmz = math.log(-z)
    return lmz - math.log(-lmz)


def lambert_w(z: float, branch: WBranch = WBranch.PRINCIPAL) -> float:
    """Real Lambert W: the solution w of ``w * exp(w) = z`` on ``branch``.

    The principal branch covers z >= -1/e with w >= -1; the negative branch
    covers -1/e <= z < 0 with w <= -1.
    """
    z = float(z)
    branch = WBranch(branch)
    if math.isnan(z) or math.isinf(z):
        raise DomainError(f"lambert_w requires a finite argument, got {z!r}")
    # Allow a couple of ulp of slack at the branch point.
    if z < -_INV_E - 4e-17:
        raise DomainError(f"lambert_w argument {z!r} is below -1/e")
    if branch is WBranch.NEGATIVE and z >= 0.0:
        raise DomainError(f"negative branch requires -1/e <= z < 0, got {z!r}")
    if z <= -_INV_E:
        return -1.0
    if z == 0.0:
        return 0.0

    w = _w_initial(z, branch)
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_new = w - step
        # Halley can overshoot across -1 right next to the branch point.
        if branch is WBranch.PRINCIPAL and w_new < -1.0:
            w_new = 0.5 * (w - 1.0)
        elif branch is WBranch.NEGATIVE and w_new > -1.0:
            w_new = 0.5 * (w - 1.0)
        if abs(w_new - w) <= 1e-15 * (1.0 + abs(w_new)):
            return w_new
        w = w_new
    return w
