import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import series_bessel
from lzsgate.core import DriveParams, TwoLevelState
from lzsgate.dynamics import evolve_state
from lzsgate.hamiltonians import (LAB, ROTATED, Frame, FrameKind, default_cutoff,
                                  effective_rabi, hamiltonian, harmonic_couplings,
                                  instantaneous_spectrum, resonance_order)

PAPER_SETS = [(10, 5, 1), (4, 20, 20), (18, 6, 6), (18, 6, 3), (18, 6, 0.75),
              (13, 12, 12), (13, 12, 3), (13, 12, 0.75)]
FRAMES = [LAB, ROTATED, Frame.interaction(), Frame.floquet(), Frame.floquet(3)]


class TestFrame:
    def test_parse(self):
        assert Frame.parse("floquet:12") == Frame.floquet(12)
        assert Frame.parse("Lab") == LAB
        assert Frame.parse("interaction").cutoff is None

    def test_cutoff_validation(self):
        with pytest.raises(ValueError):
            Frame.floquet(0)
        with pytest.raises(ValueError):
            Frame(FrameKind.LAB, 3)


class TestHamiltonian:
    def test_static_resonant(self):
        h = hamiltonian(DriveParams(1, 0, 0, 2.0), LAB, 0.37)
        np.testing.assert_array_equal(h, -0.5 * np.array([[0, 1], [1, 0]]))

    def test_rotated_at_zero(self):
        h = hamiltonian(DriveParams(1.3, 13, 12, 3), ROTATED, 0.0)
        assert h[0, 1] == -1.3 / 2

    def test_lab_diagonal_at_peak(self):
        h = hamiltonian(DriveParams(1, 10, 5, 1), LAB, 0.0)
        assert h[1, 1] == -15

    def test_rotated_phase(self):
        p = DriveParams(1, 13, 12, 3)
        t = 0.41
        expected = -0.5 * np.exp(1j * (13 / 3) * math.sin(3 * t))
        assert hamiltonian(p, ROTATED, t)[0, 1] == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("frame", FRAMES, ids=lambda f: f.label())
    @given(t=st.floats(0, 50))
    def test_hermitian(self, frame, t):
        h = hamiltonian(DriveParams(1, 13, 12, 3), frame, t)
        assert np.max(np.abs(h - h.conj().T)) == 0

    def test_floquet_matches_rotated_with_full_series(self):
        p = DriveParams(1, 13, 12, 3)
        for t in (0.0, 0.3, 1.7):
            np.testing.assert_allclose(hamiltonian(p, Frame.floquet(40), t),
                                       hamiltonian(p, ROTATED, t), atol=1e-13)

    def test_phase_only_in_lab(self):
        with pytest.raises(ValueError):
            hamiltonian(DriveParams(1, 1, 1, 1, phi=0.2), ROTATED, 0.0)


class TestSpectrum:
    def test_resonance(self):
        sp = instantaneous_spectrum(DriveParams(1, 0, 0, 1), 0.0)
        assert sp.gap == pytest.approx(1.0)
        assert sp.theta == pytest.approx(math.pi / 4)

    def test_decoupled_limit(self):
        sp = instantaneous_spectrum(DriveParams(1e-9, 0, 2.0, 1), 0.0)
        assert sp.gap == pytest.approx(2.0)
        assert sp.theta == pytest.approx(0.0, abs=1e-9)

    def test_eigenvalues_match_matrix(self):
        p = DriveParams(1, 10, 5, 1)
        for t in np.linspace(0, 2 * math.pi, 7):
            sp = instantaneous_spectrum(p, t)
            ev = np.linalg.eigvalsh(hamiltonian(p, LAB, t))
            np.testing.assert_allclose([sp.e_minus, sp.e_plus], ev, atol=1e-12)

    def test_minimum_gap_at_crossings(self):
        p = DriveParams(1, 10, 5, 1)
        t = np.linspace(0, 2 * math.pi, 200001)
        sp = instantaneous_spectrum(p, t)
        crossings = np.array([math.acos(-0.5), 2 * math.pi - math.acos(-0.5)])
        assert sp.gap.min() == pytest.approx(1.0, abs=1e-8)
        minima = t[np.argsort(sp.gap)[:2]]
        np.testing.assert_allclose(np.sort(minima), crossings, atol=1e-4)
        assert np.all(sp.gap >= 1.0 - 1e-15)

    @given(st.floats(0.1, 5), st.floats(-30, 30), st.floats(-30, 30), st.floats(0.1, 10),
           st.floats(0, 10))
    def test_gap_bounded_by_coupling(self, v, a, d0, w, t):
        sp = instantaneous_spectrum(DriveParams(v, a, d0, w), t)
        assert sp.e_plus >= sp.e_minus
        assert sp.gap >= v * (1 - 1e-12)
        assert 0 < sp.theta < math.pi / 2


class TestEffectiveRabi:
    def test_no_drive(self):
        p = DriveParams(2.0, 0, 5, 1)
        assert effective_rabi(p, 0) == 2.0
        assert effective_rabi(p, 3) == 0.0

    def test_strong_first_harmonic(self):
        p = DriveParams(1, 18, 6, 6)
        assert effective_rabi(p, 1) == pytest.approx(series_bessel(1, 3.0), abs=1e-14)
        assert effective_rabi(p, 1) == pytest.approx(0.3391, abs=1e-4)

    def test_intermediate_fourth_harmonic(self):
        p = DriveParams(1, 13, 12, 3)
        assert effective_rabi(p, 4) == pytest.approx(series_bessel(4, 13 / 3), abs=1e-14)

    def test_harmonic_couplings_signs(self):
        p = DriveParams(1, -7, 3, 2)
        orders, om = harmonic_couplings(p, 6)
        for n, value in zip(orders, om):
            assert value == pytest.approx(series_bessel(int(n), -3.5), abs=1e-14)


class TestResonanceOrder:
    def test_captions(self):
        assert resonance_order(DriveParams(1, 13, 12, 3)) == (4, 0.0)
        assert resonance_order(DriveParams(1, 18, 6, 6)) == (1, 0.0)

    def test_cs_caption(self):
        m, mismatch = resonance_order(DriveParams.from_mhz(3.2, 83.2, 76.8, 3.15))
        assert m == 24
        assert mismatch == pytest.approx(2 * math.pi * 1.2, rel=1e-9)


class TestDefaultCutoff:
    def test_at_least_margin(self):
        for a, d0, w in PAPER_SETS:
            p = DriveParams(1, a, d0, w)
            assert default_cutoff(p) >= math.ceil(a / w) + 10

    def test_tail_below_target(self):
        p = DriveParams(1, 18, 6, 0.75)
        n = default_cutoff(p)
        tail = 2 * sum(abs(series_bessel(k, 24.0)) for k in range(n + 1, n + 60))
        assert tail < 1e-12


@pytest.mark.parametrize("a,d0,w", PAPER_SETS)
def test_frames_share_ground_amplitude(a, d0, w):
    p = DriveParams(1, a, d0, w)
    y0 = TwoLevelState.ground()
    lab = evolve_state(p, LAB, None, y0, 0.0, 17.0)
    for frame in (ROTATED, Frame.interaction(), Frame.floquet()):
        other = evolve_state(p, frame, None, y0, 0.0, 17.0)
        assert abs(lab.c_g - other.c_g) < 1e-8, frame.label()
