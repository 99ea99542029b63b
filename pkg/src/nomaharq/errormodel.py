"""Finite-blocklength decoding error model.

Rates are in nats per channel use, SINR values are linear power ratios.
All error functions accept numpy arrays for ``u`` and ``rate`` so that the
simulator can evaluate a whole batch of channel draws at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import log_ndtr

from .specfun import gaussian_q

if TYPE_CHECKING:
    from .fading import ChannelDraw, LinkConfig

MIN_BLOCKLENGTH = 100


@dataclass(frozen=True)
class CodeParams:
    """Codeword length ``blocklength`` (channel uses) and rate (nats/cu).

    ``info_nats`` is optional; when given, the rate must equal
    ``info_nats / blocklength``. Use :meth:`from_info_nats` to derive it.
    """

    blocklength: int
    rate: float
    info_nats: float | None = None

    def __post_init__(self):
        if int(self.blocklength) != self.blocklength or self.blocklength < MIN_BLOCKLENGTH:
            raise ValueError(
                f"blocklength must be an integer >= {MIN_BLOCKLENGTH}, got {self.blocklength!r}"
            )
        if not self.rate > 0.0 or not math.isfinite(self.rate):
            raise ValueError(f"rate must be positive and finite, got {self.rate!r}")
        if self.info_nats is not None and abs(self.rate * self.blocklength - self.info_nats) >= 1e-9:
            raise ValueError("rate * blocklength must equal info_nats")

    @classmethod
    def from_info_nats(cls, blocklength: int, info_nats: float) -> "CodeParams":
        return cls(blocklength, info_nats / blocklength, info_nats)

    def with_rate(self, rate: float) -> "CodeParams":
        return CodeParams(self.blocklength, rate)


def _check_sinr(u):
    if np.any(np.asarray(u) < 0) or not np.all(np.isfinite(u)):
        raise ValueError(f"SINR must be finite and nonnegative, got {u!r}")


def dispersion_factor(u):
    """``sqrt(1 - 1/(1+u)^2)``, evaluated without cancellation for small u."""
    u = np.asarray(u, dtype=float)
    # 1 - (1+u)^-2 = u(2+u)/(1+u)^2
    return np.sqrt(u * (2.0 + u)) / (1.0 + u)


def q_argument(blocklength, rate, u):
    """Argument of Q in the normal approximation; +inf at u = 0 is avoided
    by callers, which map u = 0 to certain failure."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return math.sqrt(blocklength) * (np.log1p(u) - rate) / dispersion_factor(u)


def _fbl_error(blocklength, rate, u):
    u = np.asarray(u, dtype=float)
    zero = u <= 0.0
    arg = q_argument(blocklength, rate, np.where(zero, 1.0, u))
    err = gaussian_q(arg)
    if np.ndim(err) == 0:
        return 1.0 if bool(zero) else float(err)
    return np.where(zero, 1.0, err)


def _fbl_log_error_success(blocklength, rate, u):
    """``(log F, log (1 - F))`` without forming ``1 - F``, so both stay
    accurate deep in either tail."""
    u = np.asarray(u, dtype=float)
    zero = u <= 0.0
    arg = q_argument(blocklength, rate, np.where(zero, 1.0, u))
    log_err = np.where(zero, 0.0, log_ndtr(-arg))
    log_ok = np.where(zero, -np.inf, log_ndtr(arg))
    return log_err, log_ok


def fbl_error(code: CodeParams, u):
    """Block error probability of a length-L code at rate r over SINR ``u``.

    Normal approximation ``Q(sqrt(L) (log(1+u) - r) / sqrt(1 - (1+u)^-2))``.
    Zero SINR means certain failure.
    """
    _check_sinr(u)
    return _fbl_error(code.blocklength, code.rate, u)


def linear_ramp_halfwidth(blocklength, rate):
    """Half-width (in SINR) of the ramp region of the linearized model."""
    return np.sqrt(np.pi * np.expm1(2.0 * np.asarray(rate, dtype=float)) / (2.0 * blocklength))


def _fbl_error_linearized(blocklength, rate, u):
    u = np.asarray(u, dtype=float)
    rate = np.asarray(rate, dtype=float)
    centre = np.expm1(rate)
    slope = np.sqrt(blocklength / (2.0 * np.pi * np.expm1(2.0 * rate)))
    ramp = np.clip(0.5 - slope * (u - centre), 0.0, 1.0)
    half = linear_ramp_halfwidth(blocklength, rate)
    out = np.where(u <= centre - half, 1.0, np.where(u >= centre + half, 0.0, ramp))
    return float(out) if out.ndim == 0 else out


def fbl_error_linearized(code: CodeParams, u):
    """Piecewise-linear surrogate of :func:`fbl_error`.

    First-order expansion of the Q argument about ``u0 = e^r - 1``: equal to
    1/2 at ``u0`` with slope ``-sqrt(L / (2 pi (e^{2r} - 1)))``, saturating
    to 1 and 0 where the ramp leaves [0, 1].
    """
    _check_sinr(u)
    return _fbl_error_linearized(code.blocklength, code.rate, u)


def rtd_combined_error(code: CodeParams, u_copy1, u_copy2):
    """Error after chase-combining two copies of the same codeword.

    Maximum ratio combining accumulates SINR, so the combined decode is
    ``fbl_error`` at ``u_copy1 + u_copy2`` with the codeword's own rate.
    """
    _check_sinr(u_copy1)
    _check_sinr(u_copy2)
    return _fbl_error(code.blocklength, code.rate, np.add(u_copy1, u_copy2))


def sic_slot1_error_pair(config: "LinkConfig", draw: "ChannelDraw") -> tuple[float, float]:
    """Slot-1 error probabilities (UE1, UE2) under SIC with UE1 decoded first.

    UE2's error mixes the interference-free case (UE1 cancelled) with the
    case where UE1 failed and remains as interference. Both branches use
    UE2's own rate ``config.code2.rate``.
    """
    p1, p2 = config.p1, config.p2
    g1p1 = draw.g1 * p1
    g2p2 = draw.g2 * p2
    L = config.blocklength
    r1 = config.code1.rate
    r2 = config.code2.rate
    if math.isinf(g1p1):
        theta1 = 0.0
        interfered = 0.0
    else:
        theta1 = float(_fbl_error(L, r1, g1p1 / (1.0 + g2p2)))
        interfered = g2p2 / (1.0 + g1p1)
    theta2 = (1.0 - theta1) * float(_fbl_error(L, r2, g2p2)) + theta1 * float(
        _fbl_error(L, r2, interfered)
    )
    return theta1, theta2
