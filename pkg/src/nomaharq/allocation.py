"""Error-constrained rate and power allocation.

Every closed form here has a bisection counterpart on the error model it
inverts; the closed forms are used for speed, the bisections for checking.
Infeasible allocations raise :class:`InfeasibleError` in the scalar API and
come back as NaN from the vectorised helpers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errormodel import (
    _fbl_error,
    _fbl_error_linearized,
    _fbl_log_error_success,
    dispersion_factor,
)
from .fading import ChannelDraw, LinkConfig
from .specfun import WBranch, gaussian_q_inv, lambert_w

RATE_FLOOR = 1e-9
MAX_ITER = 200


class InfeasibleError(ValueError):
    """No positive rate (or power) meets the error budget."""


class ConvergenceError(RuntimeError):
    pass


class Scheme(enum.Enum):
    STANDARD = "standard"
    PROPOSED = "proposed"


class RateMethod(enum.Enum):
    BISECTION = "bisection"
    CLOSED_FORM_QINV = "closed_form_qinv"
    CLOSED_FORM_QUADRATIC = "closed_form_quadratic"


class PowerMethod(enum.Enum):
    BISECTION = "bisection"
    CLOSED_FORM_LAMBERT_W = "closed_form_lambert_w"


@dataclass(frozen=True)
class RateSolution:
    rate: float
    residual: float
    method: RateMethod


@dataclass(frozen=True)
class PowerSolution:
    power: float
    residual: float
    method: PowerMethod


@dataclass(frozen=True)
class LinearizedQParams:
    """Coefficients of the linearized rate equation.

    ``alpha = 1/2 - theta``, ``beta = sqrt(L / (2 pi))``, ``gamma = 1 + SINR``.
    """

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 0.5:
            raise ValueError(f"alpha must lie in [0, 1/2), got {self.alpha!r}")
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")
        if not self.gamma >= 1.0:
            raise ValueError("gamma must be >= 1")

    @classmethod
    def from_link(cls, blocklength: int, theta: float, sinr: float) -> "LinearizedQParams":
        return cls(0.5 - theta, math.sqrt(blocklength / (2.0 * math.pi)), 1.0 + sinr)

    @property
    def blocklength(self) -> float:
        return 2.0 * math.pi * self.beta**2

    @property
    def theta(self) -> float:
        return 0.5 - self.alpha


# ----------------------------------------------------------------------------
# Generic monotone root finding


def bisect_increasing(fun, lo, hi, target, *, xtol=1e-15, max_iter=MAX_ITER):
    """Root of ``fun(x) = target`` for nondecreasing ``fun``, elementwise.

    ``lo``/``hi`` must bracket the root. Works on scalars or arrays. Each
    element stops halving once its own bracket is tight, so its root does
    not depend on which other elements share the call.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi, target = np.broadcast_arrays(lo, hi, np.asarray(target, dtype=float))
    lo, hi = lo.copy(), hi.copy()
    for _ in range(max_iter):
        active = hi - lo > xtol * np.maximum(1.0, np.abs(hi))
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        above = fun(mid) > target
        hi = np.where(active & above, mid, hi)
        lo = np.where(active & ~above, mid, lo)
    root = 0.5 * (lo + hi)
    return float(root) if root.ndim == 0 else root


# ----------------------------------------------------------------------------
# Rates


def penalty(blocklength, theta):
    """Back-off ``Q^-1(theta) / sqrt(L)`` from the Shannon rate."""
    return gaussian_q_inv(theta) / math.sqrt(blocklength)


def qinv_rate(u, theta, blocklength):
    """Rate meeting ``fbl_error = theta`` at SINR ``u`` (may be <= 0)."""
    u = np.asarray(u, dtype=float)
    r = np.log1p(u) - penalty(blocklength, theta) * dispersion_factor(u)
    return float(r) if r.ndim == 0 else r


def _rate_hi(u, theta, blocklength):
    return np.log1p(u) + 10.0 * abs(penalty(blocklength, theta)) + 1e-6


def bisection_rate(u, theta, blocklength):
    """Oracle for :func:`qinv_rate` by bisection on the error model."""
    u = np.asarray(u, dtype=float)
    return bisect_increasing(
        lambda x: _fbl_error(blocklength, x, u), RATE_FLOOR, _rate_hi(u, theta, blocklength), theta
    )


def mixture_error(x, u_clean, u_interfered, weight, blocklength):
    """``(1 - w) F(x, u_clean) + w F(x, u_interfered)``."""
    return (1.0 - weight) * _fbl_error(blocklength, x, u_clean) + weight * _fbl_error(
        blocklength, x, u_interfered
    )


def mixture_excess(x, u_clean, u_interfered, weight, target, blocklength):
    """Increasing function of the rate ``x`` that vanishes where
    :func:`mixture_error` equals ``target``.

    Written as ``(1-w) F_clean - w (1 - F_int) + (w - target)`` with each
    tail term kept to full relative precision. When ``w == target`` the two
    tails are compared in the log domain, since both can underflow long
    before they balance.
    """
    log_f_clean, _ = _fbl_log_error_success(blocklength, x, u_clean)
    _, log_s_int = _fbl_log_error_success(blocklength, x, u_interfered)
    with np.errstate(divide="ignore"):
        log_a = np.log1p(-weight) + log_f_clean
        log_b = np.log(weight) + log_s_int
    if weight == target:
        with np.errstate(invalid="ignore"):
            diff = log_a - log_b
        # Both tails at zero only when both SINRs are degenerate.
        return np.where(np.isnan(diff), 0.0, diff)
    return np.exp(log_a) - np.exp(log_b) + (weight - target)


def mixture_rate(u_clean, u_interfered, weight, target, blocklength):
    """Rate at which :func:`mixture_error` equals ``target``.

    Vectorised over the SINR arrays. Returns NaN where even the smallest
    rate overshoots the target (the interfered branch sets an error floor).
    """
    u_clean = np.asarray(u_clean, dtype=float)
    u_interfered = np.asarray(u_interfered, dtype=float)
    u_clean, u_interfered = np.broadcast_arrays(u_clean, u_interfered)
    weight = float(weight)
    target = float(target)
    hi = _rate_hi(np.maximum(u_clean, u_interfered), target, blocklength)
    floor = mixture_excess(RATE_FLOOR, u_clean, u_interfered, weight, target, blocklength)
    root = bisect_increasing(
        lambda x: mixture_excess(x, u_clean, u_interfered, weight, target, blocklength),
        RATE_FLOOR, hi, 0.0,
    )
    root = np.where(floor > 0.0, np.nan, root)
    return float(root) if root.ndim == 0 else root


def _rate_solution(rate, u, theta, blocklength, method):
    if not rate > 0.0:
        raise InfeasibleError(
            f"no positive rate meets error {theta:g} at SINR {float(u):.6g} with L={blocklength}"
        )
    residual = abs(float(_fbl_error(blocklength, rate, u)) - theta)
    return RateSolution(float(rate), residual, method)


def _single_rate(u, theta, blocklength, method):
    method = RateMethod(method)
    if method is RateMethod.CLOSED_FORM_QINV:
        rate = qinv_rate(u, theta, blocklength)
    elif method is RateMethod.BISECTION:
        if float(_fbl_error(blocklength, RATE_FLOOR, u)) > theta:
            rate = -1.0
        else:
            rate = bisection_rate(u, theta, blocklength)
    else:
        raise ValueError(f"{method} does not apply to the exact error model")
    return _rate_solution(rate, u, theta, blocklength, method)


def slot1_sinr_ue1(config: LinkConfig, draw: ChannelDraw) -> float:
    return draw.g1 * config.p1 / (1.0 + draw.g2 * config.p2)


def solve_rate_slot1_ue1(config: LinkConfig, draw: ChannelDraw,
                         method=RateMethod.CLOSED_FORM_QINV) -> RateSolution:
    """Largest UE1 rate meeting theta1 while UE2 interferes."""
    return _single_rate(slot1_sinr_ue1(config, draw), config.theta1, config.blocklength, method)


def solve_rate_slot1_ue2(config: LinkConfig, draw: ChannelDraw,
                         theta1_used: float | None = None) -> RateSolution:
    """UE2 rate meeting theta2 averaged over UE1's decode outcome.

    With probability ``theta1_used`` UE1 was not cancelled and interferes
    with UE2. Defaults to the target ``config.theta1``.
    """
    w = config.theta1 if theta1_used is None else theta1_used
    g2p2 = draw.g2 * config.p2
    u_int = g2p2 / (1.0 + draw.g1 * config.p1)
    L = config.blocklength
    rate = mixture_rate(g2p2, u_int, w, config.theta2, L)
    if not rate > 0.0:
        raise InfeasibleError(f"UE2 error floor exceeds theta2={config.theta2:g}")
    residual = abs(float(mixture_error(rate, g2p2, u_int, w, L)) - config.theta2)
    return RateSolution(float(rate), residual, RateMethod.BISECTION)


def solve_rate_slot2_ue1(config: LinkConfig, draw: ChannelDraw,
                         method=RateMethod.CLOSED_FORM_QINV) -> RateSolution:
    """UE1's retransmission-slot rate once it is decoded interference-free."""
    return _single_rate(draw.g1 * config.p1, config.theta1, config.blocklength, method)


def solve_rate_slot2_ue1_exact(config: LinkConfig, draw: ChannelDraw,
                               theta2_tilde: float) -> RateSolution:
    """As :func:`solve_rate_slot2_ue1` without assuming UE2's combined
    decode always succeeds: UE2 still interferes with probability
    ``theta2_tilde``."""
    if not 0.0 <= theta2_tilde <= 1.0:
        raise ValueError("theta2_tilde must be a probability")
    snr = draw.g1 * config.p1
    sinr = snr / (1.0 + draw.g2 * config.p2)
    L = config.blocklength
    rate = mixture_rate(snr, sinr, theta2_tilde, config.theta1, L)
    if not rate > 0.0:
        raise InfeasibleError(f"UE1 error floor exceeds theta1={config.theta1:g}")
    residual = abs(float(mixture_error(rate, snr, sinr, theta2_tilde, L)) - config.theta1)
    return RateSolution(float(rate), residual, RateMethod.BISECTION)


# ----------------------------------------------------------------------------
# Linearized error model


def linearized_rate(alpha, beta, gamma):
    """Vectorised rate from the linearized model; NaN where infeasible.

    Squaring ``beta (gamma - v) = alpha sqrt(v^2 - 1)`` with ``v = e^r``
    gives ``(b2 - a2) v^2 - 2 b2 gamma v + (b2 gamma^2 + a2) = 0``. Only the
    smaller root has ``v <= gamma`` and so solves the unsquared equation.
    """
    gamma = np.asarray(gamma, dtype=float)
    a2 = alpha * alpha
    b2 = beta * beta
    # Reduced discriminant simplifies to a2 (b2 (gamma^2 - 1) + a2).
    disc = alpha * np.sqrt(b2 * (gamma * gamma - 1.0) + a2)
    v = (b2 * gamma - disc) / (b2 - a2)
    with np.errstate(invalid="ignore", divide="ignore"):
        rate = np.where(v > 1.0, np.log(v), np.nan)
    return float(rate) if rate.ndim == 0 else rate


def linearized_roots(params: LinearizedQParams) -> tuple[float, float]:
    """Both roots of the squared quadratic, smaller first."""
    a, b, g = params.alpha, params.beta, params.gamma
    disc = a * math.sqrt(b * b * (g * g - 1.0) + a * a)
    den = b * b - a * a
    return (b * b * g - disc) / den, (b * b * g + disc) / den


def solve_rate_linearized(params: LinearizedQParams) -> RateSolution:
    if not params.beta > params.alpha:
        raise ValueError("beta must exceed alpha")
    a, b, g = params.alpha, params.beta, params.gamma
    valid = []
    for v in linearized_roots(params):
        if v < 1.0:
            continue
        lhs = b * (g - v)
        rhs = a * math.sqrt(v * v - 1.0)
        if abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs), abs(rhs)):
            valid.append(v)
    if not valid or not min(valid) > 1.0:
        raise InfeasibleError("linearized model admits no positive rate")
    rate = math.log(min(valid))
    L = params.blocklength
    residual = abs(float(_fbl_error_linearized(L, rate, g - 1.0)) - params.theta)
    return RateSolution(rate, residual, RateMethod.CLOSED_FORM_QUADRATIC)


def bisection_rate_linearized(params: LinearizedQParams) -> float:
    """Oracle for :func:`solve_rate_linearized` on the piecewise model."""
    u = params.gamma - 1.0
    L = params.blocklength
    hi = math.log1p(u) + 10.0
    return bisect_increasing(lambda x: _fbl_error_linearized(L, x, u), RATE_FLOOR, hi, params.theta)


# ----------------------------------------------------------------------------
# Power


def snr_lambert_w(rate: float, theta: float, blocklength: int) -> float:
    """Received SNR ``y`` solving ``log(1+y) - r = a y / (1+y)``,
    ``a = Q^-1(theta)/sqrt(L)``, in closed form.

    With ``s = 1 + y`` and ``t = a / s`` the condition becomes
    ``(-t) e^(-t) = -a e^(-a-r)``, so ``s = -a / W0(-a e^(-a-r))``.
    """
    a = penalty(blocklength, theta)
    if a == 0.0:
        return math.expm1(rate)
    w = lambert_w(-a * math.exp(-a - rate), WBranch.PRINCIPAL)
    return -a / w - 1.0


def snr_bisection_approx(rate: float, theta: float, blocklength: int) -> float:
    """Oracle for :func:`snr_lambert_w` by bisection on the same condition."""
    a = penalty(blocklength, theta)
    hi = math.exp(rate + abs(a) + 1.0)
    # log(1+y) - a y/(1+y) is increasing in y for a < 1.
    return bisect_increasing(lambda y: np.log1p(y) - a * y / (1.0 + y), 0.0, hi, rate)


def snr_exact(rate: float, theta: float, blocklength: int) -> float:
    """Received SNR at which the exact error model hits ``theta`` at ``rate``."""
    hi = math.exp(rate + 10.0 * abs(penalty(blocklength, theta)) + 1.0)
    return bisect_increasing(lambda y: -_fbl_error(blocklength, rate, y), 0.0, hi, -theta)


def solve_power_slot2_ue1(config: LinkConfig, draw: ChannelDraw, target_rate: float,
                          method=PowerMethod.CLOSED_FORM_LAMBERT_W,
                          scheme=Scheme.PROPOSED) -> PowerSolution:
    """Smallest UE1 transmit power meeting theta1 at ``target_rate`` in the
    retransmission slot.

    Under the proposed order UE1 is decoded interference-free; under the
    standard order UE2's copy stays as interference, scaling the power by
    ``1 + G2 P2``. The Lambert-W form uses the high-SNR dispersion
    approximation and is cross-checked against bisection on every call;
    ``BISECTION`` solves the exact error model.
    """
    if not target_rate > 0.0:
        raise ValueError("target_rate must be positive")
    if not draw.g1 > 0.0:
        raise InfeasibleError("UE1 channel gain is zero")
    method = PowerMethod(method)
    L, theta = config.blocklength, config.theta1
    if method is PowerMethod.CLOSED_FORM_LAMBERT_W:
        y = snr_lambert_w(target_rate, theta, L)
        check = snr_bisection_approx(target_rate, theta, L)
        if abs(y - check) > 1e-8 * max(1.0, abs(check)):
            raise ConvergenceError(f"Lambert-W power {y!r} disagrees with bisection {check!r}")
    else:
        y = snr_exact(target_rate, theta, L)
    interference = 1.0 if Scheme(scheme) is Scheme.PROPOSED else 1.0 + draw.g2 * config.p2
    power = y * interference / draw.g1
    residual = abs(float(_fbl_error(L, target_rate, y)) - theta)
    return PowerSolution(power, residual, method)
