"""Monte Carlo engine for two-slot NOMA-HARQ cycles.

Decoding outcomes are Bernoulli draws whose failure probability comes from
the finite-blocklength error model; no actual codewords are simulated.

Each trial reads the 8 uniforms of its counter block (see ``streams``):

====  ==========================================
u0    gain G1 (inverse CDF)
u1    gain G2
u2    UE1 slot-1 decode
u3    UE2 slot-1 decode
u4    UE1 slot-2 decode
u5    UE2 slot-2 (combined) decode
u6    UE1 retransmission when only UE1 failed
u7    unused
====  ==========================================

Uniforms are tied to users, not to decoding order, so both policies see the
same draws under the same seed.

A UE whose slot-1 allocation is infeasible is in outage: it transmits but
every decode of its codeword fails. Such trials are still played out and
recorded, flagged ``feasible=False``, and left out of the error statistics.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .allocation import Scheme, mixture_rate, qinv_rate, snr_exact
from .errormodel import _fbl_error
from .fading import ChannelDraw, LinkConfig
from .streams import UNIFORMS_PER_TRIAL, RandomStream, trial_uniforms

CHUNK_TRIALS = 1 << 14


class Adaptation(enum.Enum):
    RATE = "rate"
    POWER = "power"


@dataclass(frozen=True)
class SchemePolicy:
    """Decoding-order policy plus what UE1 adapts in the retransmission slot.

    ``target_rate`` is UE1's slot-2 rate under power adaptation.
    """

    variant: Scheme = Scheme.PROPOSED
    adaptation: Adaptation = Adaptation.RATE
    target_rate: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Scheme(self.variant))
        object.__setattr__(self, "adaptation", Adaptation(self.adaptation))
        if self.adaptation is Adaptation.POWER:
            if self.target_rate is None or not self.target_rate > 0.0:
                raise ValueError("power adaptation needs a positive target_rate")


@dataclass(frozen=True)
class HarqTrialRecord:
    """One HARQ cycle.

    ``slot2_*`` fields are None unless UE2 failed in slot 1. ``alloc_*``
    hold what UE1 would be allocated in slot 2 for this draw whether or not
    the slot happens (NaN when infeasible); they are the per-draw samples
    of the fading-averaged rate and power.
    """

    draw: ChannelDraw
    scheme: SchemePolicy
    feasible: bool
    rate_ue1_slot1: float
    rate_ue2_slot1: float
    slot1_ue1_ok: bool
    slot1_ue2_ok: bool
    slot2_ue1_ok: bool | None
    slot2_ue2_ok: bool | None
    ue1_new_packet_slot2: bool | None
    rate_ue1_slot2: float | None
    power_ue1_slot2: float | None
    inverse_retx_ok: bool | None
    alloc_rate_ue1_slot2: float
    alloc_power_ue1_slot2: float


@dataclass(frozen=True)
class Estimate:
    """Sample mean with standard error ``std / sqrt(n)``; NaN when n = 0."""

    value: float
    se: float
    n: int


@dataclass(frozen=True)
class AggregateStats:
    trials: int
    infeasible_fraction: float
    ue1_error_rate: Estimate
    ue1_slot1_error_rate: Estimate
    ue1_slot2_error_rate: Estimate
    ue2_error_rate: Estimate
    ue2_slot1_error_rate: Estimate
    ue2_slot2_error_rate: Estimate
    retransmission_fraction: Estimate
    divergence_fraction: Estimate
    inverse_fraction: Estimate
    inverse_retx_error_rate: Estimate
    mean_rate_ue1_slot2: Estimate
    mean_power_ue1_slot2_db: Estimate
    rate_infeasible_fraction: float
    power_infeasible_fraction: float


# ----------------------------------------------------------------------------
# vectorised protocol


def _decode_ok(u, blocklength, rate, sinr):
    # NaN rate (outage) compares False, i.e. the decode fails.
    return u >= _fbl_error(blocklength, rate, sinr)


def _simulate(config: LinkConfig, policy: SchemePolicy, u: np.ndarray) -> dict:
    """Play out ``len(u)`` cycles; returns per-trial columns."""
    L = config.blocklength
    p1, p2 = config.p1, config.p2
    l1, l2 = config.fading.lambda1, config.fading.lambda2
    g1 = -np.log1p(-u[:, 0]) / l1
    g2 = -np.log1p(-u[:, 1]) / l2
    g1p1, g2p2 = g1 * p1, g2 * p2
    sinr1 = g1p1 / (1.0 + g2p2)
    u2_int = g2p2 / (1.0 + g1p1)

    # Slot 1 allocation and decoding (UE1 first).
    r1 = qinv_rate(sinr1, config.theta1, L)
    r1 = np.where(r1 > 0.0, r1, np.nan)
    r2 = mixture_rate(g2p2, u2_int, config.theta1, config.theta2, L)
    feasible = ~(np.isnan(r1) | np.isnan(r2))
    ok1 = _decode_ok(u[:, 2], L, r1, sinr1)
    ok2 = _decode_ok(u[:, 3], L, r2, np.where(ok1, g2p2, u2_int))

    # UE1's slot-2 allocation for this draw.
    proposed = policy.variant is Scheme.PROPOSED
    if policy.adaptation is Adaptation.RATE:
        if proposed:
            rate_new = qinv_rate(g1p1, config.theta1, L)
            rate_new = np.where(rate_new > 0.0, rate_new, np.nan)
        else:
            rate_new = r1
        power_new = np.full_like(g1, p1)
    else:
        y = snr_exact(policy.target_rate, config.theta1, L)
        with np.errstate(divide="ignore"):
            power_new = y / g1 if proposed else y * (1.0 + g2p2) / g1
        power_new = np.where(np.isfinite(power_new), power_new, np.nan)
        rate_new = np.full_like(g1, policy.target_rate)
    g1p1_new = g1 * power_new

    retx = ~ok2
    divergence = ok1 & ~ok2
    both_fail = ~ok1 & ~ok2
    inverse = ~ok1 & ok2

    # Divergence branch: UE1 sends a new packet, UE2 repeats its codeword.
    # UE2's slot-1 copy is clean there because UE1 was cancelled in slot 1.
    if proposed:
        ue2_copy2 = g2p2 / (1.0 + g1p1_new)
        ok2_div = _decode_ok(u[:, 5], L, r2, g2p2 + ue2_copy2)
        sinr_new = np.where(ok2_div, g1p1_new, g1p1_new / (1.0 + g2p2))
        ok1_div = _decode_ok(u[:, 4], L, rate_new, sinr_new)
    else:
        ok1_div = _decode_ok(u[:, 4], L, rate_new, g1p1_new / (1.0 + g2p2))
        ue2_copy2 = np.where(ok1_div, g2p2, g2p2 / (1.0 + g1p1_new))
        ok2_div = _decode_ok(u[:, 5], L, r2, g2p2 + ue2_copy2)

    # Both failed: both repeat; standard order with chase combining.
    ok1_both = _decode_ok(u[:, 4], L, r1, 2.0 * sinr1)
    ok2_both = _decode_ok(u[:, 5], L, r2, np.where(ok1_both, 2.0 * g2p2, 2.0 * u2_int))

    slot2_ue1_ok = np.where(divergence, ok1_div, ok1_both)
    slot2_ue2_ok = np.where(divergence, ok2_div, ok2_both)
    inverse_ok = _decode_ok(u[:, 6], L, r1, 2.0 * sinr1)

    return {
        "g1": g1,
        "g2": g2,
        "feasible": feasible,
        "r1": r1,
        "r2": r2,
        "ok1": ok1,
        "ok2": ok2,
        "retx": retx,
        "divergence": divergence,
        "both_fail": both_fail,
        "inverse": inverse,
        "slot2_ue1_ok": slot2_ue1_ok,
        "slot2_ue2_ok": slot2_ue2_ok,
        "slot2_rate": np.where(divergence, rate_new, r1),
        "slot2_power": np.where(divergence, power_new, p1),
        "inverse_ok": inverse_ok,
        "alloc_rate": rate_new,
        "alloc_power": power_new,
    }


def _record(cols: dict, i: int, policy: SchemePolicy) -> HarqTrialRecord:
    retx = bool(cols["retx"][i])

    def slot2(name, cast):
        return cast(cols[name][i]) if retx else None

    return HarqTrialRecord(
        draw=ChannelDraw(float(cols["g1"][i]), float(cols["g2"][i])),
        scheme=policy,
        feasible=bool(cols["feasible"][i]),
        rate_ue1_slot1=float(cols["r1"][i]),
        rate_ue2_slot1=float(cols["r2"][i]),
        slot1_ue1_ok=bool(cols["ok1"][i]),
        slot1_ue2_ok=bool(cols["ok2"][i]),
        slot2_ue1_ok=slot2("slot2_ue1_ok", bool),
        slot2_ue2_ok=slot2("slot2_ue2_ok", bool),
        ue1_new_packet_slot2=slot2("divergence", bool),
        rate_ue1_slot2=slot2("slot2_rate", float),
        power_ue1_slot2=slot2("slot2_power", float),
        inverse_retx_ok=bool(cols["inverse_ok"][i]) if cols["inverse"][i] else None,
        alloc_rate_ue1_slot2=float(cols["alloc_rate"][i]),
        alloc_power_ue1_slot2=float(cols["alloc_power"][i]),
    )


def run_trial(config: LinkConfig, policy: SchemePolicy, stream: RandomStream) -> HarqTrialRecord:
    """Simulate one cycle from the uniforms of ``stream``."""
    u = np.asarray(stream.uniforms(UNIFORMS_PER_TRIAL), dtype=float).reshape(1, -1)
    return _record(_simulate(config, policy, u), 0, policy)


def simulate_records(config: LinkConfig, policy: SchemePolicy, trials: int, seed: int,
                     start: int = 0) -> list[HarqTrialRecord]:
    """Records of trials ``start .. start+trials-1``, identical to calling
    :func:`run_trial` on each trial's own stream."""
    cols = _simulate(config, policy, trial_uniforms(seed, start, trials))
    return [_record(cols, i, policy) for i in range(trials)]


# ----------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class _Moments:
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values) -> "_Moments":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls()
        mean = float(values.mean())
        return cls(values.size, mean, float(np.square(values - mean).sum()))

    def merge(self, other: "_Moments") -> "_Moments":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return _Moments(n, mean, m2)

    def estimate(self) -> Estimate:
        if self.n == 0:
            return Estimate(math.nan, math.nan, 0)
        var = self.m2 / (self.n - 1) if self.n > 1 else 0.0
        return Estimate(self.mean, math.sqrt(var / self.n), self.n)


def _chunk_moments(config: LinkConfig, policy: SchemePolicy, seed: int, start: int, count: int):
    c = _simulate(config, policy, trial_uniforms(seed, start, count))
    f = c["feasible"]
    div = f & c["divergence"]
    retx = f & c["retx"]
    inv = f & c["inverse"]
    fail1 = ~c["ok1"]
    ue1_attempts = np.concatenate([fail1[f], ~c["slot2_ue1_ok"][div]])
    ue2_residual = ~c["ok2"] & ~c["slot2_ue2_ok"]
    rate = c["alloc_rate"]
    power = c["alloc_power"]
    rate_ok = np.isfinite(rate)
    power_ok = np.isfinite(power) & (power > 0.0)
    return {
        "infeasible": _Moments.of(~f),
        "ue1_error_rate": _Moments.of(ue1_attempts),
        "ue1_slot1_error_rate": _Moments.of(fail1[f]),
        "ue1_slot2_error_rate": _Moments.of(~c["slot2_ue1_ok"][div]),
        "ue2_error_rate": _Moments.of(ue2_residual[f]),
        "ue2_slot1_error_rate": _Moments.of(~c["ok2"][f]),
        "ue2_slot2_error_rate": _Moments.of(~c["slot2_ue2_ok"][retx]),
        "retransmission_fraction": _Moments.of(c["retx"][f]),
        "divergence_fraction": _Moments.of(c["divergence"][f]),
        "inverse_fraction": _Moments.of(c["inverse"][f]),
        "inverse_retx_error_rate": _Moments.of(~c["inverse_ok"][inv]),
        "mean_rate_ue1_slot2": _Moments.of(rate[rate_ok]),
        "mean_power_ue1_slot2_db": _Moments.of(10.0 * np.log10(power[power_ok])),
        "rate_infeasible": _Moments.of(~rate_ok),
        "power_infeasible": _Moments.of(~power_ok),
    }


def _chunk_task(args):
    return _chunk_moments(*args)


def run_batch(config: LinkConfig, policy: SchemePolicy, trials: int, seed: int,
              workers: int = 1) -> AggregateStats:
    """Aggregate statistics over ``trials`` cycles.

    Trials are processed in fixed chunks whose partial moments are merged
    in chunk order, so the result is bitwise independent of ``workers``.
    """
    if int(trials) != trials or trials < 1:
        raise ValueError("trials must be a positive integer")
    trials = int(trials)
    tasks = [(config, policy, seed, s, min(CHUNK_TRIALS, trials - s))
             for s in range(0, trials, CHUNK_TRIALS)]
    workers = max(1, min(int(workers), len(tasks)))
    if workers == 1:
        parts = map(_chunk_task, tasks)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_task, tasks))
    total = None
    for part in parts:
        total = part if total is None else {k: total[k].merge(v) for k, v in part.items()}

    est = {k: m.estimate() for k, m in total.items()}
    names = {f.name for f in fields(AggregateStats)}
    return AggregateStats(
        trials=trials,
        infeasible_fraction=est.pop("infeasible").value,
        rate_infeasible_fraction=est.pop("rate_infeasible").value,
        power_infeasible_fraction=est.pop("power_infeasible").value,
        **{k: v for k, v in est.items() if k in names},
    )
