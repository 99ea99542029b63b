import dataclasses
import math

import numpy as np
import pytest

from nomaharq.allocation import Scheme
from nomaharq.expectation import ExpectationMethod, expected_rate_slot2
from nomaharq.fading import LinkConfig
from nomaharq.simengine import (
    Adaptation,
    SchemePolicy,
    run_batch,
    run_trial,
    simulate_records,
)
from nomaharq.streams import RandomStream

DEFAULT = LinkConfig()
POLICIES = [SchemePolicy(s, a, 1.0 if a is Adaptation.POWER else None)
            for s in Scheme for a in Adaptation]


def test_policy_validation():
    with pytest.raises(ValueError):
        SchemePolicy(Scheme.PROPOSED, Adaptation.POWER)
    with pytest.raises(ValueError):
        SchemePolicy(Scheme.PROPOSED, Adaptation.POWER, 0.0)
    assert SchemePolicy("standard", "rate").variant is Scheme.STANDARD


def test_rejects_bad_trial_count():
    with pytest.raises(ValueError):
        run_batch(DEFAULT, SchemePolicy(), 0, 0)


class TestRecords:
    def test_dead_second_user(self):
        config = DEFAULT.replace(fading=dataclasses.replace(DEFAULT.fading, lambda2=1e300))
        for policy in POLICIES:
            for rec in simulate_records(config, policy, 200, seed=1):
                assert rec.draw.g2 < 1e-290
                assert not rec.feasible
                assert not rec.slot1_ue2_ok and rec.slot2_ue2_ok is False
                if policy.variant is Scheme.PROPOSED and policy.adaptation is Adaptation.RATE:
                    # UE2 adds no interference in slot 2 whatever its decode does
                    assert rec.alloc_rate_ue1_slot2 >= rec.rate_ue1_slot1

    @pytest.mark.parametrize("policy", POLICIES, ids=lambda p: f"{p.variant.value}-{p.adaptation.value}")
    def test_slot2_fields_present_iff_retransmission(self, policy):
        for rec in simulate_records(DEFAULT.replace(theta1=0.2, theta2=0.2), policy, 500, seed=3):
            retx = not rec.slot1_ue2_ok
            for value in (rec.slot2_ue1_ok, rec.slot2_ue2_ok, rec.rate_ue1_slot2, rec.power_ue1_slot2):
                assert (value is not None) == retx
            assert (rec.inverse_retx_ok is not None) == (not rec.slot1_ue1_ok and rec.slot1_ue2_ok)
            if rec.feasible:
                assert rec.rate_ue1_slot1 > 0 and rec.rate_ue2_slot1 > 0

    def test_single_trial_matches_batch_records(self):
        policy = SchemePolicy()
        records = simulate_records(DEFAULT, policy, 5, seed=9, start=100)
        for k, rec in enumerate(records):
            assert run_trial(DEFAULT, policy, RandomStream.for_trial(9, 100 + k)) == rec

    def test_records_deterministic(self):
        policy = SchemePolicy(Scheme.STANDARD)
        assert simulate_records(DEFAULT, policy, 300, 4) == simulate_records(DEFAULT, policy, 300, 4)
        assert simulate_records(DEFAULT, policy, 300, 4) != simulate_records(DEFAULT, policy, 300, 5)

    def test_both_policies_share_draws(self):
        a = simulate_records(DEFAULT, SchemePolicy(Scheme.STANDARD), 50, 2)
        b = simulate_records(DEFAULT, SchemePolicy(Scheme.PROPOSED), 50, 2)
        assert [r.draw for r in a] == [r.draw for r in b]
        assert [r.slot1_ue1_ok for r in a] == [r.slot1_ue1_ok for r in b]


class TestBatch:
    def test_one_trial_reproduces_run_trial(self):
        policy = SchemePolicy()
        rec = run_trial(DEFAULT, policy, RandomStream.for_trial(17, 0))
        stats = run_batch(DEFAULT, policy, 1, 17)
        assert stats.trials == 1
        assert stats.mean_rate_ue1_slot2.value == rec.alloc_rate_ue1_slot2
        assert stats.ue1_slot1_error_rate.value == float(not rec.slot1_ue1_ok)

    def test_worker_count_does_not_change_result(self):
        policy = SchemePolicy(Scheme.PROPOSED, Adaptation.POWER, 1.0)
        one = run_batch(DEFAULT, policy, 70_000, 21, workers=1)
        eight = run_batch(DEFAULT, policy, 70_000, 21, workers=8)
        assert repr(one) == repr(eight)

    def test_ue1_slot1_error_hits_budget(self):
        stats = run_batch(DEFAULT, SchemePolicy(), 400_000, 5)
        est = stats.ue1_slot1_error_rate
        se = math.sqrt(DEFAULT.theta1 * (1 - DEFAULT.theta1) / est.n)
        assert abs(est.value - DEFAULT.theta1) < 3 * se

    def test_mean_rate_matches_expectation(self):
        stats = run_batch(DEFAULT, SchemePolicy(), 400_000, 6)
        exact = expected_rate_slot2(DEFAULT, ExpectationMethod.QUADRATURE, approximate=False).value
        est = stats.mean_rate_ue1_slot2
        assert abs(est.value - exact) < 3 * est.se

    def test_combining_helps_ue2(self):
        config = DEFAULT.replace(theta1=1e-2, theta2=1e-2)
        for variant in Scheme:
            stats = run_batch(config, SchemePolicy(variant), 200_000, 8)
            assert stats.ue2_slot2_error_rate.value < stats.ue2_slot1_error_rate.value

    def test_standard_errors(self):
        stats = run_batch(DEFAULT, SchemePolicy(), 50_000, 1)
        est = stats.retransmission_fraction
        assert est.se == pytest.approx(math.sqrt(est.value * (1 - est.value) / (est.n - 1)), rel=1e-9)


class TestDominance:
    def test_proposed_rate_not_below_standard(self):
        config = DEFAULT.replace(theta1=0.05, theta2=0.05)
        std = simulate_records(config, SchemePolicy(Scheme.STANDARD), 3000, 11)
        prop = simulate_records(config, SchemePolicy(Scheme.PROPOSED), 3000, 11)
        pairs = [(s, p) for s, p in zip(std, prop) if not p.slot1_ue2_ok and p.feasible]
        assert pairs
        for s, p in pairs:
            assert p.alloc_rate_ue1_slot2 >= s.alloc_rate_ue1_slot2

    def test_proposed_power_not_above_standard(self):
        std = simulate_records(DEFAULT, SchemePolicy(Scheme.STANDARD, Adaptation.POWER, 1.0), 3000, 12)
        prop = simulate_records(DEFAULT, SchemePolicy(Scheme.PROPOSED, Adaptation.POWER, 1.0), 3000, 12)
        s = np.array([r.alloc_power_ue1_slot2 for r in std])
        p = np.array([r.alloc_power_ue1_slot2 for r in prop])
        assert np.all(p <= s)
