import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lzsgate.core import (CS_GEOMETRIC_PREFACTOR, DecayRates, DriveParams, PhysicalChannel,
                          TwoLevelState, Units, check_units, decay_from_lifetimes, delta_of_t,
                          vdd_from_channel)

finite = st.floats(-50, 50, allow_nan=False)
positive = st.floats(0.05, 50)


class TestDriveParams:
    def test_rejects_nonpositive_coupling_and_frequency(self):
        with pytest.raises(ValueError):
            DriveParams(0.0, 1, 1, 1)
        with pytest.raises(ValueError):
            DriveParams(1.0, 1, 1, -1)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            DriveParams(1.0, math.nan, 1, 1)

    def test_from_mhz_tags_units(self):
        p = DriveParams.from_mhz(3.2, 83.2, 76.8, 3.15)
        assert p.units == Units.RAD_PER_US
        assert p.omega == pytest.approx(2 * math.pi * 3.15)

    def test_ratios(self):
        assert DriveParams(2.0, 26, 24, 1.5).ratios() == (13, 12, 0.75)

    def test_unit_mismatch_detected(self):
        with pytest.raises(ValueError, match="unit mismatch"):
            check_units(Units.DIMENSIONLESS, Units.RAD_PER_US)


class TestDeltaOfT:
    def test_zero_amplitude(self):
        assert delta_of_t(DriveParams(1, 0, 5, 3.0), 1.0) == 5

    def test_peak_value(self):
        assert delta_of_t(DriveParams(1, 10, 5, 1), 0.0) == 15

    def test_half_period(self):
        assert delta_of_t(DriveParams(1, 10, 5, 1), math.pi) == pytest.approx(-5, abs=1e-14)

    def test_array_input(self):
        t = np.linspace(0, 1, 5)
        p = DriveParams(1, 2, 3, 4, 0.5)
        np.testing.assert_allclose(delta_of_t(p, t), [delta_of_t(p, x) for x in t])

    @given(positive, finite, finite, positive, st.floats(-3, 3), st.floats(0, 20))
    def test_periodic(self, v, a, d0, w, phi, t):
        p = DriveParams(v, a, d0, w, phi)
        assert delta_of_t(p, t) == pytest.approx(delta_of_t(p, t + 2 * math.pi / w),
                                                  abs=1e-12 * (1 + abs(a) + abs(d0)) * (1 + t * w))

    @given(positive, finite, finite, positive, st.floats(-3, 3))
    def test_range(self, v, a, d0, w, phi):
        p = DriveParams(v, a, d0, w, phi)
        values = delta_of_t(p, np.linspace(0, 2 * math.pi / w, 4001))
        tol = 1e-12 * (1 + abs(a) + abs(d0))
        assert values.min() >= d0 - abs(a) - tol
        assert values.max() <= d0 + abs(a) + tol
        assert values.max() - values.min() == pytest.approx(2 * abs(a), rel=1e-5, abs=1e-12)


class TestChannel:
    def test_cs_pair_gives_3p2_mhz(self):
        ch = PhysicalChannel(-154968.0, 20.0, (270, 314, 361, 406))
        assert vdd_from_channel(ch) / (2 * math.pi) == pytest.approx(3.2, rel=1e-12)
        assert CS_GEOMETRIC_PREFACTOR == pytest.approx(0.16519, abs=1e-5)

    def test_unit_prefactor(self):
        ch = PhysicalChannel(-8000.0, 20.0, (1, 1, 1, 1), geometric_prefactor=1.0)
        assert vdd_from_channel(ch) / (2 * math.pi) == pytest.approx(1.0)

    def test_cubic_law(self):
        a = PhysicalChannel(-1000.0, 5.0, (1, 1, 1, 1))
        b = PhysicalChannel(-1000.0, 10.0, (1, 1, 1, 1))
        assert vdd_from_channel(a) / vdd_from_channel(b) == pytest.approx(8.0)

    def test_rejects_zero_distance(self):
        with pytest.raises(ValueError):
            vdd_from_channel(PhysicalChannel(-1000.0, 0.0, (1, 1, 1, 1)))

    def test_rejects_bad_lifetimes(self):
        with pytest.raises(ValueError):
            PhysicalChannel(-1.0, 1.0, (1, 1, 0, 1))

    @given(st.floats(0.5, 100), st.floats(0.01, 10))
    def test_vdd_decreasing_in_r(self, r, dr):
        near = PhysicalChannel(-1e5, r, (1, 1, 1, 1))
        far = PhysicalChannel(-1e5, r + dr, (1, 1, 1, 1))
        assert vdd_from_channel(far) < vdd_from_channel(near)


class TestDecay:
    def test_cs_lifetimes(self):
        rates = decay_from_lifetimes(PhysicalChannel(-1.0, 1.0, (270, 314, 361, 406)))
        assert rates.gamma_g == pytest.approx(1 / 270 + 1 / 314)
        assert rates.gamma_g == pytest.approx(0.006888, abs=1e-6)
        assert rates.gamma_e == pytest.approx(1 / 361 + 1 / 406)
        # |01> carries the second S state, |10> the first
        assert rates.single_rates == (pytest.approx(1 / 314), pytest.approx(1 / 270))

    def test_equal_lifetimes(self):
        rates = decay_from_lifetimes(PhysicalChannel(-1.0, 1.0, (100, 100, 100, 100)))
        assert rates.gamma_g == pytest.approx(0.02)
        assert rates.gamma_e == pytest.approx(0.02)

    def test_infinite_lifetimes(self):
        rates = decay_from_lifetimes(PhysicalChannel(-1.0, 1.0, (math.inf,) * 4))
        assert rates.gamma_g == 0 and rates.gamma_e == 0

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            DecayRates(-1.0, 0.0)

    def test_default_single_rates(self):
        assert DecayRates(0.2, 0.3).single_rates == (0.1, 0.1)


def test_two_level_state_roundtrip():
    s = TwoLevelState(0.6 + 0j, 0.8j)
    assert s.norm == pytest.approx(1.0)
    assert TwoLevelState.from_array(s.as_array()) == s
