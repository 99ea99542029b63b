"""Rayleigh block fading and the static link configuration.

Transmit powers are given in dB relative to the unit noise power, so a
power of 30 dB is a linear SNR factor of 1000 before fading.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errormodel import CodeParams
from .streams import RandomStream


def db_to_linear(x_db):
    out = np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class FadingParams:
    """Rates of the exponential channel-gain distributions (mean gain 1/lambda)."""

    lambda1: float = 0.1
    lambda2: float = 1.0

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError("fading rates must be strictly positive")


@dataclass(frozen=True)
class ChannelDraw:
    """Channel gains |H1|^2, |H2|^2, held fixed for a whole HARQ cycle."""

    g1: float
    g2: float

    def __post_init__(self):
        for name in ("g1", "g2"):
            v = getattr(self, name)
            if not v >= 0.0 or math.isnan(v):
                raise ValueError(f"{name} must be nonnegative, got {v!r}")


@dataclass(frozen=True)
class LinkConfig:
    p1_db: float = 30.0
    p2_db: float = 30.0
    fading: FadingParams = FadingParams()
    code1: CodeParams = CodeParams(1000, 1.0)
    code2: CodeParams = CodeParams(1000, 1.0)
    theta1: float = 1e-3
    theta2: float = 1e-3

    def __post_init__(self):
        if not (math.isfinite(self.p1_db) and math.isfinite(self.p2_db)):
            raise ValueError("transmit powers must be finite")
        for name in ("theta1", "theta2"):
            v = getattr(self, name)
            if not 0.0 < v < 0.5:
                raise ValueError(f"{name} must lie in (0, 0.5), got {v!r}")
        if self.code1.blocklength != self.code2.blocklength:
            raise ValueError("both UEs must use the same blocklength")

    @property
    def p1(self) -> float:
        return 10.0 ** (self.p1_db / 10.0)

    @property
    def p2(self) -> float:
        return 10.0 ** (self.p2_db / 10.0)

    @property
    def blocklength(self) -> int:
        return self.code1.blocklength

    def replace(self, **changes) -> "LinkConfig":
        return dataclasses.replace(self, **changes)

    def with_blocklength(self, blocklength: int) -> "LinkConfig":
        """Same scenario at a new blocklength; codes carrying ``info_nats``
        keep K fixed, so their rate becomes K / L."""

        def rescale(code: CodeParams) -> CodeParams:
            if code.info_nats is not None:
                return CodeParams.from_info_nats(blocklength, code.info_nats)
            return CodeParams(blocklength, code.rate)

        return self.replace(code1=rescale(self.code1), code2=rescale(self.code2))

    def with_rates(self, rate1: float, rate2: float | None = None) -> "LinkConfig":
        rate2 = rate1 if rate2 is None else rate2
        L = self.blocklength
        return self.replace(code1=CodeParams(L, rate1), code2=CodeParams(L, rate2))


def sample_gains(params: FadingParams, stream: RandomStream, size: int | None = None):
    """Independent exponential gains by inverse CDF.

    Returns a :class:`ChannelDraw` when ``size`` is None, else a pair of
    arrays ``(g1, g2)`` of length ``size``.
    """
    if size is None:
        u = stream.uniforms(2)
        return ChannelDraw(float(-np.log1p(-u[0]) / params.lambda1),
                           float(-np.log1p(-u[1]) / params.lambda2))
    u = stream.uniforms((int(size), 2))
    return -np.log1p(-u[:, 0]) / params.lambda1, -np.log1p(-u[:, 1]) / params.lambda2


def sinr_cdf_u1(x, config: LinkConfig):
    """CDF of UE1's slot-1 SINR ``P1 G1 / (1 + P2 G2)`` under Rayleigh fading."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("SINR must be nonnegative")
    l1, l2 = config.fading.lambda1, config.fading.lambda2
    p1, p2 = config.p1, config.p2
    kx = l1 * p2 * x / (l2 * p1)
    with np.errstate(over="ignore", invalid="ignore"):
        out = -np.expm1(-l1 * x / p1) + np.exp(-l1 * x / p1) * kx / (1.0 + kx)
    out = np.where(np.isinf(x), 1.0, out)
    return float(out) if out.ndim == 0 else out
