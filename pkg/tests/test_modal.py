"""Modal series: coefficients, evaluation, accelerated summation and invariants."""

import math

import mpmath as mp
import numpy as np
import pytest

from beamlab._compute import descending_sum
from beamlab.asym import asymptotic_coefficients
from beamlab.core import BeamModel
from beamlab.modal import (ModalSeries, displacement_response, displacement_values,
                           modal_coefficient, slope_bound, slope_response, slope_values)

PI_BEAM = BeamModel()


@pytest.fixture(scope="module")
def pi_series():
    return ModalSeries(PI_BEAM)


class TestModalSeries:
    def test_requires_unit_beam(self):
        with pytest.raises(ValueError, match="nondimensional"):
            ModalSeries(BeamModel(rho_A=2.0))

    @pytest.mark.parametrize("x0", [0.0, math.pi, -1.0])
    def test_load_position_inside(self, x0):
        with pytest.raises(ValueError, match="strictly inside"):
            ModalSeries(PI_BEAM, 10, x0)

    def test_needs_terms(self):
        with pytest.raises(ValueError, match="n_terms"):
            ModalSeries(PI_BEAM, 0)

    def test_frequency_invariants(self, pi_series):
        w, p = pi_series.frequencies, pi_series.wavenumbers
        assert np.all(np.diff(w) > 0)
        assert np.all(w < p)
        assert w[-1] / p[-1] == pytest.approx(1.0, abs=1e-9)


class TestModalCoefficient:
    def test_odd_modes_vanish_for_midspan_load(self, pi_series):
        assert all(modal_coefficient(pi_series, k) == 0.0 for k in (1, 3, 5, 99))

    def test_second_mode_against_arbitrary_precision(self, pi_series):
        with mp.workdps(40):
            L = mp.pi
            p = 2 * mp.pi / L
            w = p**2 / mp.sqrt(1 + p**2)
            ref = 2 * p * mp.cos(p * L / 2) / (L * (1 + p**2) * w)
        assert float(ref) == pytest.approx(-1 / (math.sqrt(5) * math.pi), rel=1e-15)
        assert modal_coefficient(pi_series, 2) == pytest.approx(float(ref), rel=1e-14)

    def test_node_of_projection(self):
        ms = ModalSeries(PI_BEAM, 20, math.pi / 4)  # cos(2 * pi/4) = 0
        assert modal_coefficient(ms, 2) == 0.0

    @pytest.mark.parametrize("k", [0, 100_001, 2.5])
    def test_out_of_range(self, pi_series, k):
        with pytest.raises(ValueError, match="mode index out of range"):
            modal_coefficient(pi_series, k)


class TestSlope:
    def test_zero_at_tau_zero(self, pi_series):
        assert slope_values(pi_series, math.pi / 2, [0.0])[0] == 0.0

    def test_agrees_with_cubic_at_half(self, pi_series):
        s = slope_values(pi_series, math.pi / 2, [0.5])[0]
        assert abs(s - float(asymptotic_coefficients(PI_BEAM)(0.5))) < 5e-3

    def test_midspan_matches_simplified_sum(self):
        # (2/L) sum_k sin(4 k^2 a^2 tau / sqrt(1 + 4k^2a^2)) / sqrt(1 + 4 k^2 a^2), brute force in mpmath
        ms = ModalSeries(PI_BEAM, 200)
        tau = 0.37
        with mp.workdps(30):
            ref = 2 / mp.pi * mp.fsum(
                mp.sin(4 * k * k * tau / mp.sqrt(1 + 4 * k * k)) / mp.sqrt(1 + 4 * k * k)
                for k in range(1, 101))
        assert slope_values(ms, math.pi / 2, [tau])[0] == pytest.approx(float(ref), abs=1e-14)

    def test_truncation_convergence(self):
        tau = np.linspace(0.1, 1.0, 46)
        s1 = slope_values(ModalSeries(PI_BEAM, 10_000), math.pi / 2, tau)
        s2 = slope_values(ModalSeries(PI_BEAM, 20_000), math.pi / 2, tau)
        s4 = slope_values(ModalSeries(PI_BEAM, 40_000), math.pi / 2, tau)
        assert np.max(np.abs(s1 - s2)) < 1e-3
        assert np.max(np.abs(s2 - s4)) < np.max(np.abs(s1 - s2))

    def test_bounded(self, pi_series):
        tau = np.linspace(0, 4, 401)
        bound = slope_bound(pi_series)
        assert np.max(np.abs(slope_values(pi_series, math.pi / 2, tau))) <= bound

    def test_mirror_points_have_equal_slope(self):
        # a midspan moment gives an odd deflection about L/2, hence an even slope
        ms = ModalSeries(PI_BEAM, 20_000)
        tau = np.linspace(0.05, 2.0, 40)
        for x in (0.3, 1.0, 1.4):
            np.testing.assert_allclose(slope_values(ms, x, tau), slope_values(ms, math.pi - x, tau),
                                       atol=1e-12)

    def test_load_point_independence_short_beam_window(self):
        # far from both supports the response depends only on the local beam
        b = BeamModel(length=24.0)
        tau = np.linspace(0.01, 1.0, 100)
        r = [slope_values(ModalSeries(b, load_pos=x0), x0, tau) for x0 in (12.0, 6.0)]
        assert np.max(np.abs(r[0] - r[1])) < 1e-3

    def test_response_series_metadata(self, pi_series):
        ts = slope_response(pi_series, math.pi / 2, np.linspace(0, 0.1, 11))
        assert ts.source == "series" and ts.metadata["n_terms"] == 100_000

    def test_unknown_method(self, pi_series):
        with pytest.raises(ValueError, match="unknown method"):
            slope_values(pi_series, 1.0, [0.1], method="magic")

    def test_point_outside_beam(self, pi_series):
        with pytest.raises(ValueError, match=r"\[0, L\]"):
            slope_values(pi_series, 4.0, [0.1])


class TestAcceleratedSlope:
    """The accelerated evaluation sums the same series with the slow tail in closed form."""

    @pytest.mark.parametrize("x0, x", [(math.pi / 2, math.pi / 2), (1.0, 1.0), (1.0, 2.2)])
    def test_agrees_with_long_truncation(self, x0, x):
        tau = np.array([0.3, 0.9, 1.7])
        acc = slope_values(ModalSeries(PI_BEAM, 2000, x0), x, tau, "accelerated")
        ref = slope_values(ModalSeries(PI_BEAM, 400_000, x0), x, tau)
        np.testing.assert_allclose(acc, ref, atol=3e-5)

    def test_converges_faster_than_truncation(self):
        tau = np.array([0.05, 0.1])
        ref = slope_values(ModalSeries(PI_BEAM, 200_000), math.pi / 2, tau, "accelerated")
        acc = slope_values(ModalSeries(PI_BEAM, 1000), math.pi / 2, tau, "accelerated")
        tru = slope_values(ModalSeries(PI_BEAM, 1000), math.pi / 2, tau)
        assert np.max(np.abs(acc - ref)) < 1e-3 * np.max(np.abs(tru - ref))

    def test_zero_at_tau_zero(self):
        v = slope_values(ModalSeries(PI_BEAM, 1000), math.pi / 2, [0.0], "accelerated")[0]
        assert abs(v) < 1e-15


class TestDisplacement:
    def test_zero_at_start(self, pi_series):
        assert np.all(displacement_values(pi_series, 1.0, [0.0]) == 0.0)

    @pytest.mark.parametrize("x", [0.0, math.pi])
    def test_zero_at_supports(self, pi_series, x):
        assert np.all(displacement_values(pi_series, x, np.linspace(0, 3, 7)) == 0.0)

    def test_odd_about_midspan(self):
        ms = ModalSeries(PI_BEAM, 20_000)
        tau = np.linspace(0.1, 2.0, 20)
        np.testing.assert_allclose(displacement_values(ms, 1.0, tau),
                                   -displacement_values(ms, math.pi - 1.0, tau), atol=1e-13)
        assert np.max(np.abs(displacement_values(ms, math.pi / 2, tau))) < 1e-12

    def test_response_container(self, pi_series):
        ts = displacement_response(pi_series, 1.0, np.linspace(0, 1, 5))
        assert ts.values.shape == (5,)


class TestSummation:
    def test_descending_sum_matches_fsum(self):
        k = np.arange(1, 50_001, dtype=float)
        tau = np.array([0.2, 1.3])
        got = descending_sum(lambda i, t: np.sin(t * k[i]) / k[i], np.arange(k.size), tau)
        for g, t in zip(got, tau):
            assert g == pytest.approx(math.fsum(np.sin(t * k) / k), abs=1e-13)

    def test_thread_count_does_not_change_results(self, monkeypatch):
        ms = ModalSeries(PI_BEAM, 30_000)
        tau = np.linspace(0, 2, 1001)
        monkeypatch.setenv("BEAMLAB_THREADS", "1")
        one = slope_values(ms, math.pi / 2, tau)
        monkeypatch.setenv("BEAMLAB_THREADS", "4")
        four = slope_values(ms, math.pi / 2, tau)
        np.testing.assert_array_equal(one, four)

    def test_bad_thread_setting(self, monkeypatch):
        monkeypatch.setenv("BEAMLAB_THREADS", "many")
        with pytest.raises(ValueError, match="BEAMLAB_THREADS"):
            slope_values(ModalSeries(PI_BEAM, 10), 1.0, [0.1])
