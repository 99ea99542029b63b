"""Fading-averaged rates and powers for UE1.

Closed forms use the high-SNR dispersion approximation
``sqrt(1 - (1+x)^-2) ~ x / (1+x)``; the quadrature routes integrate the same
approximated integrand, so the two agree to quadrature accuracy. Passing
``approximate=False`` integrates the exact per-draw rate instead (clipped at
zero where no positive rate meets the budget).

Required powers are averaged in dB. Under Rayleigh fading the per-draw
power scales as ``1/G1`` and ``E[1/G1]`` diverges, so the arithmetic mean
of the required power is infinite; the dB mean (the log of the geometric
mean) is finite and is what the power sweeps report.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .allocation import (
    Scheme,
    linearized_rate,
    penalty,
    qinv_rate,
    snr_exact,
    snr_lambert_w,
)
from .errormodel import dispersion_factor
from .fading import LinkConfig
from .specfun import EULER_GAMMA, scaled_e1
from .streams import trial_uniforms

SINGULAR_BAND = 1e-6
_DB = 10.0 / math.log(10.0)


class ExpectationMethod(enum.Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class ExpectedRate:
    value: float
    method: ExpectationMethod
    abs_error_estimate: float = 0.0


@dataclass(frozen=True)
class ExpectedPower:
    """dB-averaged required transmit power (dB above unit noise)."""

    value_db: float
    method: ExpectationMethod
    abs_error_estimate: float = 0.0
    infeasible_fraction: float = 0.0

    @property
    def value_linear(self) -> float:
        """Geometric-mean power, ``10^(value_db/10)``."""
        return 10.0 ** (self.value_db / 10.0)


# ----------------------------------------------------------------------------
# quadrature helper


def integrate_halfline(fun, decay: float, *, tail_nepers: float = 50.0):
    """Integrate ``fun`` over [0, inf) for an integrand decaying at least
    like ``exp(-decay x)``.

    The range is cut at ``tail_nepers / decay`` and split into decades so
    QUADPACK sees smooth pieces; singular behaviour at 0 is left to its
    extrapolation. Returns ``(value, abs_error_estimate)``.
    """
    upper = max(tail_nepers / decay, 10.0)
    edges = [0.0]
    edge = 1e-6
    while edge < upper:
        edges.append(edge)
        edge *= 10.0
    edges.append(upper)
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(fun, a, b, limit=200, epsabs=1e-15, epsrel=1e-13)
        total += val
        err += e
    return total, err


def _u1_params(config: LinkConfig):
    l1, l2 = config.fading.lambda1, config.fading.lambda2
    b = l1 / config.p1
    c = l2 / config.p2
    k = l1 * config.p2 / (l2 * config.p1)
    return b, c, k


def _u1_survival(x, b, k):
    return np.exp(-b * x) / (1.0 + k * x)


def _u1_density(x, b, k):
    return np.exp(-b * x) * (b / (1.0 + k * x) + k / (1.0 + k * x) ** 2)


# ----------------------------------------------------------------------------
# slot 1 (standard order, UE1 decoded under interference)


def _slot1_closed_form(config: LinkConfig) -> float:
    b, c, k = _u1_params(config)
    a = penalty(config.blocklength, config.theta1)
    eb = scaled_e1(b)  # int e^{-bx}/(1+x) dx
    ec = scaled_e1(c)  # int k e^{-bx}/(1+kx) dx
    shannon = (eb - ec) / (1.0 - k)
    # Partial fractions of 1/((1+kx)(1+x)^2), integrated against e^{-bx}.
    second = (ec * k - eb * k + (k - 1.0) * (b * eb - 1.0)) / (k - 1.0) ** 2
    return shannon - a * second


def _slot1_quadrature(config: LinkConfig, approximate: bool):
    b, c, k = _u1_params(config)
    a = penalty(config.blocklength, config.theta1)
    if approximate:
        def integrand(x):
            s = _u1_survival(x, b, k)
            return s / (1.0 + x) - a * s / (1.0 + x) ** 2
        return integrate_halfline(integrand, b)

    # Exact per-draw rate, zero where infeasible: E[max(r(U), 0)] by parts.
    x0 = _rate_zero_crossing(a)

    def integrand(x):
        if x <= x0:
            return 0.0
        s = _u1_survival(x, b, k)
        return s * (1.0 / (1.0 + x) - a / ((1.0 + x) ** 2 * math.sqrt(x * (2.0 + x))))
    return integrate_halfline(integrand, b)


def _rate_zero_crossing(a: float) -> float:
    """SINR below which ``log(1+x) - a sqrt(1-(1+x)^-2)`` is negative."""
    if a <= 0.0:
        return 0.0

    def rate(x):
        return math.log1p(x) - a * float(dispersion_factor(x))

    lo, hi = 0.0, 1.0
    while rate(hi) <= 0.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rate(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def expected_rate_slot1(config: LinkConfig, method=ExpectationMethod.CLOSED_FORM,
                        approximate: bool = True) -> ExpectedRate:
    """Fading-averaged slot-1 rate of UE1 (interference from UE2).

    The closed form has a removable singularity at
    ``lambda1 P2 = lambda2 P1``; inside a 1e-6 relative band the quadrature
    route is used instead and reported as such.
    """
    method = ExpectationMethod(method)
    b, c, k = _u1_params(config)
    if method is ExpectationMethod.CLOSED_FORM and approximate and abs(k - 1.0) >= SINGULAR_BAND:
        return ExpectedRate(_slot1_closed_form(config), ExpectationMethod.CLOSED_FORM)
    if method is ExpectationMethod.MONTE_CARLO:
        raise ValueError("use simengine.run_batch for Monte Carlo rate estimates")
    val, err = _slot1_quadrature(config, approximate)
    return ExpectedRate(val, ExpectationMethod.QUADRATURE, err)


# ----------------------------------------------------------------------------
# slot 2 (proposed order, UE1 decoded interference-free)


def _slot2_closed_form(config: LinkConfig) -> float:
    b = config.fading.lambda1 / config.p1
    a = penalty(config.blocklength, config.theta1)
    eb = scaled_e1(b)
    return eb - a * (1.0 - b * eb)


def expected_rate_slot2(config: LinkConfig, method=ExpectationMethod.CLOSED_FORM,
                        approximate: bool = True) -> ExpectedRate:
    """Fading-averaged retransmission-slot rate of UE1 under the proposed
    decoding order (SNR ``P1 G1``)."""
    method = ExpectationMethod(method)
    if method is ExpectationMethod.CLOSED_FORM and approximate:
        return ExpectedRate(_slot2_closed_form(config), ExpectationMethod.CLOSED_FORM)
    if method is ExpectationMethod.MONTE_CARLO:
        raise ValueError("use simengine.run_batch for Monte Carlo rate estimates")
    l1, p1 = config.fading.lambda1, config.p1
    a = penalty(config.blocklength, config.theta1)

    if approximate:
        def integrand(g):
            u = p1 * g
            return l1 * math.exp(-l1 * g) * (math.log1p(u) - a * u / (1.0 + u))
    else:
        def integrand(g):
            r = qinv_rate(p1 * g, config.theta1, config.blocklength)
            return l1 * math.exp(-l1 * g) * max(r, 0.0)
    val, err = integrate_halfline(integrand, l1)
    return ExpectedRate(val, ExpectationMethod.QUADRATURE, err)


def expected_rate_linearized(config: LinkConfig, scheme=Scheme.PROPOSED) -> ExpectedRate:
    """Fading average of the linearized-model rate; infeasible draws count
    as zero rate."""
    L = config.blocklength
    alpha = 0.5 - config.theta1
    beta = math.sqrt(L / (2.0 * math.pi))

    def rate(u):
        r = linearized_rate(alpha, beta, 1.0 + u)
        return 0.0 if math.isnan(r) else r

    if Scheme(scheme) is Scheme.PROPOSED:
        l1, p1 = config.fading.lambda1, config.p1
        val, err = integrate_halfline(lambda g: l1 * math.exp(-l1 * g) * rate(p1 * g), l1)
    else:
        b, c, k = _u1_params(config)
        val, err = integrate_halfline(lambda x: _u1_density(x, b, k) * rate(x), b)
    return ExpectedRate(val, ExpectationMethod.QUADRATURE, err)


# ----------------------------------------------------------------------------
# retransmission-slot power


def required_snr(target_rate: float, config: LinkConfig, exact: bool) -> float:
    """Received SNR UE1 needs at ``target_rate`` to meet theta1."""
    L, theta = config.blocklength, config.theta1
    return snr_exact(target_rate, theta, L) if exact else snr_lambert_w(target_rate, theta, L)


def fading_average_power_db(snr: float, config: LinkConfig, scheme=Scheme.PROPOSED) -> float:
    """dB-mean of the power that delivers received SNR ``snr`` to UE1.

    Uses ``E[-ln G1] = gamma + ln(lambda1)`` and, for the standard order,
    ``E[ln(1 + P2 G2)] = e^c E1(c)`` with ``c = lambda2 / P2``.
    """
    val = _DB * (math.log(snr) + EULER_GAMMA + math.log(config.fading.lambda1))
    if Scheme(scheme) is Scheme.STANDARD:
        val += _DB * scaled_e1(config.fading.lambda2 / config.p2)
    return val


def required_power_db(config: LinkConfig, target_rate: float, scheme, g1, g2, exact: bool = True):
    """Per-draw required UE1 power in dB, vectorised over gains."""
    y = required_snr(target_rate, config, exact)
    g1 = np.asarray(g1, dtype=float)
    with np.errstate(divide="ignore"):
        p = _DB * (math.log(y) - np.log(g1))
        if Scheme(scheme) is Scheme.STANDARD:
            p = p + _DB * np.log1p(np.asarray(g2, dtype=float) * config.p2)
    return float(p) if np.ndim(p) == 0 else p


def expected_power_slot2(config: LinkConfig, target_rate: float, scheme=Scheme.PROPOSED,
                         method=ExpectationMethod.CLOSED_FORM, *, trials: int = 1_000_000,
                         seed: int = 0) -> ExpectedPower:
    """dB-mean of the minimum UE1 power meeting theta1 at ``target_rate``.

    ``CLOSED_FORM`` and ``QUADRATURE`` average the Lambert-W solution
    (high-SNR dispersion approximation); ``MONTE_CARLO`` averages the exact
    per-draw power over ``trials`` draws from the per-trial streams.
    """
    if not target_rate > 0.0:
        raise ValueError("target_rate must be positive")
    scheme = Scheme(scheme)
    method = ExpectationMethod(method)
    l1, l2 = config.fading.lambda1, config.fading.lambda2
    standard = scheme is Scheme.STANDARD

    if method is ExpectationMethod.CLOSED_FORM:
        y = required_snr(target_rate, config, exact=False)
        return ExpectedPower(fading_average_power_db(y, config, scheme), method)

    if method is ExpectationMethod.QUADRATURE:
        y = required_snr(target_rate, config, exact=False)
        val, err = integrate_halfline(lambda g: l1 * math.exp(-l1 * g) * _DB * (math.log(y) - math.log(g)), l1)
        if standard:
            p2 = config.p2
            v2, e2 = integrate_halfline(lambda g: l2 * math.exp(-l2 * g) * _DB * math.log1p(p2 * g), l2)
            val += v2
            err += e2
        return ExpectedPower(val, method, err)

    total = 0.0
    total_sq = 0.0
    n = 0
    chunk = 1 << 16
    for start in range(0, trials, chunk):
        count = min(chunk, trials - start)
        u = trial_uniforms(seed, start, count)
        g1 = -np.log1p(-u[:, 0]) / l1
        g2 = -np.log1p(-u[:, 1]) / l2
        p_db = required_power_db(config, target_rate, scheme, g1, g2, exact=True)
        p_db = p_db[np.isfinite(p_db)]
        total += float(p_db.sum())
        total_sq += float(np.square(p_db).sum())
        n += p_db.size
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return ExpectedPower(mean, method, math.sqrt(var / n), 1.0 - n / trials)
