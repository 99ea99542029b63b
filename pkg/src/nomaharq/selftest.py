"""Closed forms against their oracles on randomized parameter grids.

Each check draws ``points`` random parameter sets, evaluates the implemented
closed form and an independent oracle (bisection on the error model, or
adaptive quadrature), and passes when the worst relative disagreement is
at most ``tol``. Some reference formulas circulate in a typeset variant
that differs from the implemented derivation; that variant is evaluated on
the same grid and its residual reported alongside. It never decides
pass/fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import (
    LinearizedQParams,
    bisection_rate,
    bisection_rate_linearized,
    linearized_rate,
    penalty,
    qinv_rate,
    snr_bisection_approx,
    snr_lambert_w,
)
from .errormodel import CodeParams
from .expectation import ExpectationMethod, expected_rate_slot1, expected_rate_slot2
from .fading import FadingParams, LinkConfig
from .specfun import WBranch, exp_integral_ei, lambert_w

TOLERANCE = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    points: int
    max_rel_error: float
    tol: float
    printed_residual: float | None = None  # median relative deviation of the printed form
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        out = f"{status} {self.name}: max rel err {self.max_rel_error:.3e} over {self.points} points (tol {self.tol:g})"
        if self.printed_residual is not None:
            out += f"; printed form median rel residual {self.printed_residual:.3e}"
        if self.note:
            out += f"; {self.note}"
        return out


def _loguniform(rng, lo, hi):
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _random_config(rng) -> LinkConfig:
    L = int(rng.integers(100, 10_001))
    return LinkConfig(
        p1_db=float(rng.uniform(10.0, 50.0)),
        p2_db=float(rng.uniform(10.0, 50.0)),
        fading=FadingParams(_loguniform(rng, 0.05, 2.0), _loguniform(rng, 0.2, 5.0)),
        code1=CodeParams(L, 1.0),
        code2=CodeParams(L, 1.0),
        theta1=_loguniform(rng, 1e-6, 0.3),
    )


# ----------------------------------------------------------------------------
# typeset variants, kept only for residual reporting


def printed_expected_rate_slot1(config: LinkConfig) -> float:
    b = config.fading.lambda1 / config.p1
    c = config.fading.lambda2 / config.p2
    k = config.fading.lambda1 * config.p2 / (config.fading.lambda2 * config.p1)
    a = penalty(config.blocklength, config.theta1)
    eib = math.exp(b) * exp_integral_ei(-b)
    eic = math.exp(c) * exp_integral_ei(-c)
    first = (eic - eib) / (k - 1.0)
    second = a / (k - 1.0) ** 2 * ((b * (k - 1.0) + k) * eib + k * eic + k - 1.0)
    return first - second


def printed_expected_rate_slot2(config: LinkConfig) -> float:
    p1 = config.p1
    b = config.fading.lambda1 / p1
    a = penalty(config.blocklength, config.theta1)
    eib = math.exp(b) * exp_integral_ei(-b)
    return p1 * eib - a * b * (eib + 1.0 / b)


def printed_linearized_rate(alpha: float, beta: float, gamma: float) -> float:
    a2, b2 = alpha * alpha, beta * beta
    disc = gamma * gamma * b2 * b2 - (b2 - a2) * (a2 + gamma * gamma)
    if disc < 0.0:
        return math.nan
    return math.log((gamma * b2 + math.sqrt(disc)) / (b2 - a2))


def printed_power_snr(rate: float, theta: float, blocklength: int) -> float:
    """Received SNR ``x G1`` from the typeset Lambert-W variant."""
    a = penalty(blocklength, theta)
    z = -a * math.exp(a - rate)
    if z < -1.0 / math.e:
        return math.nan
    w = lambert_w(z, WBranch.PRINCIPAL)
    return (a + w) / w


def _power_condition_residual(y: float, rate: float, theta: float, blocklength: int) -> float:
    a = penalty(blocklength, theta)
    if not y > -1.0:
        return math.inf
    return abs(math.log1p(y) - rate - a * y / (1.0 + y)) / rate


# ----------------------------------------------------------------------------
# checks


def check_rate_qinv(points: int, rng) -> CheckResult:
    worst = 0.0
    n = 0
    while n < points:
        L = int(rng.integers(100, 10_001))
        theta = _loguniform(rng, 1e-8, 0.4)
        u = _loguniform(rng, 0.5, 1e5)
        r = qinv_rate(u, theta, L)
        if not r > 0.0:
            continue
        worst = max(worst, _rel(r, bisection_rate(u, theta, L)))
        n += 1
    return CheckResult("slot rate, inverse-Q closed form vs bisection", n, worst, TOLERANCE)


def check_expected_rate_slot1(points: int, rng) -> CheckResult:
    worst = 0.0
    printed = []
    for _ in range(points):
        config = _random_config(rng)
        cf = expected_rate_slot1(config, ExpectationMethod.CLOSED_FORM).value
        quad = expected_rate_slot1(config, ExpectationMethod.QUADRATURE).value
        worst = max(worst, _rel(cf, quad))
        printed.append(_rel(printed_expected_rate_slot1(config), quad))
    return CheckResult("slot-1 expected rate, closed form vs quadrature", points, worst,
                       TOLERANCE, float(np.median(printed)))


def check_expected_rate_slot2(points: int, rng) -> CheckResult:
    worst = 0.0
    printed = []
    for _ in range(points):
        config = _random_config(rng).replace(p1_db=float(rng.uniform(0.0, 50.0)))
        cf = expected_rate_slot2(config, ExpectationMethod.CLOSED_FORM).value
        quad = expected_rate_slot2(config, ExpectationMethod.QUADRATURE).value
        worst = max(worst, _rel(cf, quad))
        printed.append(_rel(printed_expected_rate_slot2(config), quad))
    return CheckResult("slot-2 expected rate, closed form vs quadrature", points, worst,
                       TOLERANCE, float(np.median(printed)))


def check_linearized_rate(points: int, rng) -> CheckResult:
    worst = 0.0
    printed = []
    for _ in range(points):
        L = int(rng.integers(100, 10_001))
        theta = _loguniform(rng, 1e-6, 0.4)
        u = _loguniform(rng, 0.5, 1e4)
        params = LinearizedQParams.from_link(L, theta, u)
        r = linearized_rate(params.alpha, params.beta, params.gamma)
        oracle = bisection_rate_linearized(params)
        worst = max(worst, _rel(r, oracle))
        p = printed_linearized_rate(params.alpha, params.beta, params.gamma)
        printed.append(_rel(p, oracle) if math.isfinite(p) else math.inf)
    return CheckResult("linearized-model rate, quadratic root vs bisection", points, worst,
                       TOLERANCE, float(np.median(printed)))


def check_power_lambert(points: int, rng) -> CheckResult:
    worst = 0.0
    printed = []
    for _ in range(points):
        L = int(rng.integers(100, 10_001))
        theta = _loguniform(rng, 1e-8, 0.4)
        rate = float(rng.uniform(0.05, 5.0))
        y = snr_lambert_w(rate, theta, L)
        worst = max(worst, _rel(y, snr_bisection_approx(rate, theta, L)))
        printed.append(_power_condition_residual(printed_power_snr(rate, theta, L), rate, theta, L))
    return CheckResult("slot-2 power, Lambert-W closed form vs bisection", points, worst,
                       TOLERANCE, float(np.median(printed)),
                       "printed residual is on the defining equation")


CHECKS = (
    check_rate_qinv,
    check_expected_rate_slot1,
    check_expected_rate_slot2,
    check_linearized_rate,
    check_power_lambert,
)


def run_selftest(points: int = 1000, seed: int = 20240601) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [check(points, rng) for check in CHECKS]
