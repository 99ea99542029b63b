import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from nomaharq.fading import (
    ChannelDraw,
    FadingParams,
    LinkConfig,
    db_to_linear,
    linear_to_db,
    sample_gains,
    sinr_cdf_u1,
)
from nomaharq.streams import RandomStream, trial_uniforms


@pytest.mark.parametrize("db,lin", [(0.0, 1.0), (30.0, 1000.0), (40.0, 10000.0)])
def test_db_to_linear(db, lin):
    assert db_to_linear(db) == pytest.approx(lin, rel=1e-14)
    assert linear_to_db(lin) == pytest.approx(db, abs=1e-12)


@given(st.floats(-100.0, 100.0))
def test_db_round_trip(x):
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-10)


def test_validation():
    with pytest.raises(ValueError):
        FadingParams(0.0, 1.0)
    with pytest.raises(ValueError):
        ChannelDraw(-1.0, 1.0)
    with pytest.raises(ValueError):
        LinkConfig(theta1=0.5)
    with pytest.raises(ValueError):
        LinkConfig(p1_db=math.inf)


class TestSampling:
    @pytest.fixture(scope="class")
    @staticmethod
    def gains():
        return sample_gains(FadingParams(0.1, 1.0), RandomStream.bulk(7), 1_000_000)

    def test_means(self, gains):
        g1, g2 = gains
        assert abs(g1.mean() - 10.0) < 0.1
        assert abs(g2.mean() - 1.0) < 0.01

    def test_independent(self, gains):
        assert abs(np.corrcoef(*gains)[0, 1]) < 5.0 / math.sqrt(len(gains[0]))

    def test_deterministic(self):
        a = sample_gains(FadingParams(), RandomStream.bulk(3), 100)
        b = sample_gains(FadingParams(), RandomStream.bulk(3), 100)
        c = sample_gains(FadingParams(), RandomStream.bulk(4), 100)
        np.testing.assert_array_equal(a[0], b[0])
        assert not np.array_equal(a[0], c[0])

    def test_scalar_draw(self):
        draw = sample_gains(FadingParams(), RandomStream.for_trial(1, 5))
        assert isinstance(draw, ChannelDraw) and draw.g1 >= 0 and draw.g2 >= 0

    def test_trial_streams_are_position_keyed(self):
        block = trial_uniforms(11, 40, 5)
        for k in range(5):
            np.testing.assert_array_equal(RandomStream.for_trial(11, 40 + k).uniforms(8), block[k])

    def test_trial_stream_is_bounded(self):
        stream = RandomStream.for_trial(0, 0)
        stream.uniforms(8)
        with pytest.raises(RuntimeError):
            stream.uniforms(1)


class TestSinrCdf:
    def test_endpoints(self):
        config = LinkConfig()
        assert sinr_cdf_u1(0.0, config) == 0.0
        assert sinr_cdf_u1(math.inf, config) == 1.0
        assert sinr_cdf_u1(1e12, config) == pytest.approx(1.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            sinr_cdf_u1(-1.0, LinkConfig())

    def test_nondecreasing_on_grid(self):
        config = LinkConfig()
        x = np.concatenate([[0.0], np.logspace(-6, 8, 2000)])
        cdf = sinr_cdf_u1(x, config)
        assert np.all(np.diff(cdf) >= 0.0)
        assert np.all((cdf >= 0.0) & (cdf <= 1.0))

    def test_matches_empirical_at_5(self):
        config = LinkConfig()
        g1, g2 = sample_gains(config.fading, RandomStream.bulk(2), 1_000_000)
        u1 = config.p1 * g1 / (1.0 + config.p2 * g2)
        p_hat = np.mean(u1 <= 5.0)
        se = math.sqrt(p_hat * (1 - p_hat) / len(u1))
        assert abs(p_hat - sinr_cdf_u1(5.0, config)) < 3.0 * se

    @pytest.mark.parametrize("lambdas,p_db", [((0.1, 1.0), (30.0, 30.0)),
                                              ((1.0, 0.5), (10.0, 20.0)),
                                              ((0.3, 3.0), (40.0, 25.0))])
    def test_kolmogorov_smirnov(self, lambdas, p_db):
        config = LinkConfig(p1_db=p_db[0], p2_db=p_db[1], fading=FadingParams(*lambdas))
        g1, g2 = sample_gains(config.fading, RandomStream.bulk(9), 100_000)
        u1 = config.p1 * g1 / (1.0 + config.p2 * g2)
        result = stats.kstest(u1, lambda x: sinr_cdf_u1(x, config))
        assert result.statistic < 1.628 / math.sqrt(len(u1))  # 1% critical value
