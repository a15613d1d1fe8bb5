import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pam6rin import rng
from pam6rin.constellation import cross_qam32, optimized_qam32, reference_qam32
from pam6rin.model import (PAM6, ChannelParams, NoiseModel, Point2D, asymptotic_snr, beta_from_extinction_ratio,
                           channel_sample, channel_samples, oma_to_eta, rin_variance, snr, symbol_variance,
                           thermal_variance)


def enumerate_snr(points, sth, srin, beta):
    """Independent enumeration: plain loops over the point list."""
    energy = sum(a * a + b * b for a, b in points) / len(points)
    noise = sum(2 * sth + ((a + beta) ** 2 + (b + beta) ** 2) * srin for a, b in points) / len(points)
    return energy / noise


class TestChannelParams:
    def test_rejects_small_beta(self):
        with pytest.raises(ValueError):
            ChannelParams(beta=4.9)

    @pytest.mark.parametrize("kw", [dict(nep=-1.0), dict(bandwidth_b=0.0), dict(eta=0.0)])
    def test_rejects_bad_fields(self, kw):
        with pytest.raises(ValueError):
            ChannelParams(**kw)

    def test_oma_round_trip(self):
        p = ChannelParams().with_oma(3.0)
        assert p.oma_dbm == pytest.approx(3.0)


class TestThermalVariance:
    def test_zero_nep(self):
        assert thermal_variance(ChannelParams(nep=0.0, eta=0.3, bandwidth_b=7e9)) == 0.0

    def test_eta_doubled_quarters_variance(self):
        a = thermal_variance(ChannelParams(eta=0.2))
        b = thermal_variance(ChannelParams(eta=0.4))
        assert a / b == pytest.approx(4.0)

    def test_arithmetic(self):
        # eta = 0.1 mW per unit is 1e-4 W: (1e-12 / 1e-4)^2 * 1e11 = 1e-5
        p = ChannelParams(nep=1e-12, eta=0.1, bandwidth_b=1e11)
        assert thermal_variance(p) == pytest.approx(1e-5, rel=1e-12)

    @given(st.floats(1e-3, 1e3), st.floats(1.01, 10))
    def test_strictly_decreasing_in_eta(self, eta, factor):
        assert thermal_variance(ChannelParams(eta=eta * factor)) < thermal_variance(ChannelParams(eta=eta))


class TestRinVariance:
    def test_disabled(self):
        assert rin_variance(ChannelParams(rin_db_hz=-math.inf)) == 0.0

    def test_plus_3db(self):
        a = rin_variance(ChannelParams(rin_db_hz=-144))
        b = rin_variance(ChannelParams(rin_db_hz=-141))
        assert b / a == pytest.approx(10**0.3, rel=1e-12)
        assert b / a == pytest.approx(1.9953, abs=1e-4)

    def test_arithmetic(self):
        assert rin_variance(ChannelParams(rin_db_hz=-144, bandwidth_b=1e11)) == pytest.approx(3.981e-4, rel=1e-3)
        assert rin_variance(ChannelParams(rin_db_hz=-144, bandwidth_b=1e11)) == pytest.approx(10**-3.4, rel=1e-12)


class TestSymbolVariance:
    def test_bias_cancels_lowest_level(self):
        assert symbol_variance(-5, NoiseModel(0, 0.3), 5) == 0

    def test_top_level(self):
        assert symbol_variance(5, NoiseModel(0, 0.7), 5) == pytest.approx(70.0)

    def test_arithmetic(self):
        assert symbol_variance(3, NoiseModel(2, 0.1), 6) == pytest.approx(10.1)

    def test_rejects_off_alphabet(self):
        with pytest.raises(ValueError):
            symbol_variance(2, NoiseModel(1, 1), 5)

    @given(st.floats(0, 10), st.floats(0, 10), st.floats(5, 20))
    def test_at_least_thermal_and_monotone(self, sth, srin, beta):
        m = NoiseModel(sth, srin)
        vals = [symbol_variance(x, m, beta) for x in PAM6]
        assert all(v >= sth for v in vals)
        assert vals == sorted(vals)

    def test_equality_with_thermal(self):
        m = NoiseModel(1.5, 0.2)
        assert symbol_variance(-5, m, 5.0) == 1.5
        assert all(symbol_variance(x, m, 5.0) > 1.5 for x in PAM6[1:])
        assert all(symbol_variance(x, NoiseModel(1.5, 0), 5.0) == 1.5 for x in PAM6)


class TestConversions:
    @pytest.mark.parametrize("dbm, eta", [(10, 1.0), (0, 0.1), (6, 0.39810717)])
    def test_oma_to_eta(self, dbm, eta):
        assert oma_to_eta(dbm) == pytest.approx(eta, rel=1e-7)

    def test_beta_from_er(self):
        assert beta_from_extinction_ratio(math.inf) == 5
        assert beta_from_extinction_ratio(11) == pytest.approx(6)
        assert beta_from_extinction_ratio(3) == pytest.approx(10)
        assert beta_from_extinction_ratio(1e9) == pytest.approx(5, abs=1e-6)

    @pytest.mark.parametrize("er", [1.0, 0.5])
    def test_beta_from_er_rejects(self, er):
        with pytest.raises(ValueError):
            beta_from_extinction_ratio(er)

    @given(st.floats(1.001, 1e6))
    def test_beta_inverts_ratio(self, er):
        b = beta_from_extinction_ratio(er)
        assert (5 + b) / (b - 5) == pytest.approx(er, rel=1e-9)


class TestChannelSample:
    def test_noiseless(self):
        g = rng.generator(1)
        y = channel_sample(Point2D(3, -1), NoiseModel(0, 0), 5.0, g)
        assert tuple(y) == (3, -1)

    def test_batch_matches_single_draws(self):
        m = NoiseModel(0.3, 0.01)
        pts = [Point2D(1, -3), Point2D(5, 5), Point2D(-5, 3)]
        g1, g2 = rng.generator(9, 3), rng.generator(9, 3)
        single = [channel_sample(p, m, 5.25, g1) for p in pts]
        batch = np.concatenate([channel_samples(np.array([p]), m, 5.25, g2) for p in pts])
        np.testing.assert_allclose(np.array(single), batch, rtol=0, atol=1e-15)

    def test_unbiased(self):
        g = rng.generator(2)
        n = 10**6
        m = NoiseModel(0.5, 0.01)
        y = channel_samples(np.tile([1.0, -3.0], (n, 1)), m, 5.0, g)
        se = np.sqrt([symbol_variance(1, m, 5.0), symbol_variance(-3, m, 5.0)]) / np.sqrt(n)
        assert np.all(np.abs(y.mean(axis=0) - [1, -3]) < 5 * se)

    def test_variance_at_top_level(self):
        g = rng.generator(3)
        n = 10**6
        y = channel_samples(np.tile([5.0, 5.0], (n, 1)), NoiseModel(1.0, 0.01), 5.0, g)
        assert np.var(y[:, 0] - 5) == pytest.approx(2.0, rel=0.01)

    def test_moments_every_grid_point(self):
        m = NoiseModel(0.2, 0.004)
        beta = 5.25
        n = 10**6
        for i, a in enumerate(PAM6):
            for j, b in enumerate(PAM6):
                g = rng.generator(11, rng.STREAM_SAMPLER, 6 * i + j)
                y = channel_samples(np.tile([a, b], (n, 1)).astype(float), m, beta, g)
                v = np.array([symbol_variance(a, m, beta), symbol_variance(b, m, beta)])
                mean_se = np.sqrt(v / n)
                var_se = v * np.sqrt(2.0 / (n - 1))
                assert np.all(np.abs(y.mean(axis=0) - [a, b]) < 5 * mean_se)
                assert np.all(np.abs(y.var(axis=0, ddof=1) - v) < 5 * var_se)


class TestSNR:
    def test_cross_thermal_only(self):
        assert snr(cross_qam32(), NoiseModel(0.7, 0), 5.25).linear == pytest.approx(20 / (2 * 0.7))

    def test_cross_rin_only(self):
        assert snr(cross_qam32(), NoiseModel(0, 1), 5).linear == pytest.approx(20 / 70)
        assert snr(cross_qam32(), NoiseModel(0, 1), 5).linear == pytest.approx(0.2857, abs=1e-4)

    @given(st.floats(1e-4, 10), st.floats(1e-6, 1), st.floats(0.01, 100), st.floats(5, 10))
    def test_homogeneity(self, sth, srin, c, beta):
        con = optimized_qam32()
        a = snr(con, NoiseModel(sth, srin), beta).linear
        b = snr(con, NoiseModel(sth * c, srin * c), beta).linear
        assert b == pytest.approx(a / c, rel=1e-10)

    @pytest.mark.parametrize("name", ["cross", "reference", "optimized"])
    def test_matches_enumeration(self, builtins, name):
        pts = builtins[name].points
        for sth, srin, beta in [(0.1, 1e-3, 5.0), (0.0, 2e-3, 6.0), (1.0, 0.0, 5.25)]:
            assert snr(pts, NoiseModel(sth, srin), beta).linear == pytest.approx(
                enumerate_snr(pts, sth, srin, beta), rel=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            snr([], NoiseModel(1, 1), 5)

    def test_increasing_in_eta_and_limit(self):
        base = ChannelParams(beta=5.25, rin_db_hz=-144)
        vals = [snr(optimized_qam32(), base.replace(eta=e).noise_model(), 5.25).db for e in np.geomspace(1e-3, 1e3, 25)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        far = snr(optimized_qam32(), base.replace(eta=1e6).noise_model(), 5.25).db
        srin = base.noise_model().sigma_rin_sq
        assert far == pytest.approx(asymptotic_snr(optimized_qam32(), 5.25, srin).db, abs=0.01)


class TestAsymptoticSNR:
    def test_equals_snr_without_thermal(self):
        for c in (cross_qam32(), reference_qam32(), optimized_qam32()):
            assert asymptotic_snr(c, 5.5, 3e-4).linear == pytest.approx(snr(c, NoiseModel(0, 3e-4), 5.5).linear)

    def test_optimized_value(self):
        assert asymptotic_snr(optimized_qam32(), 5, 1).linear == pytest.approx(23.5 / 66)
        assert asymptotic_snr(optimized_qam32(), 5, 1).linear == pytest.approx(0.35606, abs=1e-5)

    def test_gain_over_cross(self):
        gain = asymptotic_snr(optimized_qam32(), 5, 1).db - asymptotic_snr(cross_qam32(), 5, 1).db
        assert gain == pytest.approx(10 * math.log10((23.5 / 66) / (20 / 70)))
        assert gain == pytest.approx(0.956, abs=1e-3)

    def test_ordering(self):
        o, r, c = (asymptotic_snr(x, 5, 1).linear for x in (optimized_qam32(), reference_qam32(), cross_qam32()))
        assert (o, r, c) == pytest.approx((23.5 / 66, 24 / 74, 20 / 70))
        assert o > r > c

    def test_rejects_zero_rin(self):
        with pytest.raises(ValueError):
            asymptotic_snr(cross_qam32(), 5, 0)
