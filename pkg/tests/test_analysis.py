import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from Simulation.analysis import (
    FitModel,
    ProfileAverager,
    anchored_small_ell_curve,
    count_entangled_qubits,
    critical_ell,
    estimate_ell,
    estimate_ell_from_profile,
    fit_exponential,
    fit_power_law,
    geometric_ell_grid,
    localization_time,
    locate_peak,
    map_params_for_ell,
    saturation_halfwidth,
    saturation_value,
    small_ell_concurrence_model,
    theoretical_ell,
)
from Simulation.dynamics import evolve
from Simulation.errors import DomainError, InsufficientSupportError, WindowError
from Simulation.statevec import (
    StateVector,
    exponential_localized_state,
    momentum_eigenstate,
    signed_momenta,
    uniform_state,
)


def ring_distance(momenta, center):
    distance = np.abs(momenta - center) % momenta.shape[0]
    return np.minimum(distance, momenta.shape[0] - distance).astype(np.float64)


class TestTheory:
    def test_unit_kick(self):
        assert theoretical_ell(1.0) == pytest.approx(math.pi ** 2 / 3)

    def test_inverse(self):
        assert theoretical_ell(math.sqrt(3 / math.pi ** 2)) == pytest.approx(1.0)

    def test_quadratic_law(self):
        assert theoretical_ell(0.8) / theoretical_ell(0.4) == pytest.approx(4.0)

    def test_non_positive_kick(self):
        with pytest.raises(DomainError):
            theoretical_ell(0.0)

    @pytest.mark.parametrize("ell, expected", [(2.8, 50), (100, 200), (31, 62), (0.03, 50)])
    def test_localization_time(self, ell, expected):
        assert localization_time(ell) == expected

    def test_calibration_places_m300_at_31(self):
        assert map_params_for_ell(10, math.sqrt(2), 31.0).M == 300

    def test_grid_density(self):
        grid = geometric_ell_grid(0.03, 64.0, 8)
        assert grid[0] == pytest.approx(0.03)
        assert grid[-1] == pytest.approx(64.0)
        assert len(grid) >= 8 * math.log10(64 / 0.03)
        assert np.all(np.diff(grid) > 0)


class TestEstimateEll:
    def test_exact_profile(self):
        estimate = estimate_ell(exponential_localized_state(10, 5.0))
        assert estimate.ell_fit == pytest.approx(5.0, rel=0.01)
        assert estimate.r_squared == pytest.approx(1.0, abs=1e-9)
        assert estimate.peak_slot == 0

    def test_random_phases_do_not_matter(self):
        a = estimate_ell(exponential_localized_state(9, 3.0, center=-7, seed=4))
        assert a.ell_fit == pytest.approx(3.0, rel=0.01)

    def test_eigenstate_has_no_support(self):
        with pytest.raises(InsufficientSupportError):
            estimate_ell(momentum_eigenstate(10, 0))

    def test_flat_profile_reports_infinity(self):
        estimate = estimate_ell_from_profile(uniform_state(6).probabilities())
        assert estimate.ell_fit == math.inf
        assert estimate.points_used == 15

    def test_side_peaks_stay_outside_the_fit(self):
        n = signed_momenta(10)
        profile = np.exp(-2.0 * ring_distance(n, 0) / 8.0)
        for center in (-256, 256, 512):
            profile += 1e-3 * np.exp(-ring_distance(n, center))
        estimate = estimate_ell_from_profile(profile)
        assert estimate.ell_fit == pytest.approx(8.0, rel=1e-6)
        assert estimate.fit_window == (-110, 110)
        assert estimate.points_used == 221
        assert estimate.r_squared == pytest.approx(1.0, abs=1e-9)

    def test_window_ends_where_the_tail_climbs(self):
        distance = ring_distance(signed_momenta(8), 0)
        profile = np.where(distance <= 20, np.exp(-distance / 2.0), 1e-2)
        estimate = estimate_ell_from_profile(profile)
        assert estimate.fit_window == (-20, 20)
        assert estimate.ell_fit == pytest.approx(4.0, rel=1e-9)

    def test_window_is_capped_at_an_eighth_of_the_ring(self):
        estimate = estimate_ell(exponential_localized_state(8, 100.0))
        assert estimate.fit_window == (-31, 31)
        assert estimate.points_used == 63
        assert estimate.ell_fit == pytest.approx(100.0, rel=1e-6)

    def test_window_follows_an_off_center_peak(self):
        estimate = estimate_ell(exponential_localized_state(9, 3.0, center=250))
        assert estimate.peak_slot == 250
        assert estimate.fit_window[0] < 250 < estimate.fit_window[1]
        assert estimate.fit_window[1] > 256
        assert estimate.ell_fit == pytest.approx(3.0, rel=1e-6)

    @pytest.mark.slow
    def test_localized_dynamics_at_m300(self):
        params = map_params_for_ell(10, math.sqrt(2), 31.0)
        averager = ProfileAverager(start_step=1901)
        evolve(momentum_eigenstate(10, 0), params, 2000, observers=[averager])
        estimate = estimate_ell_from_profile(averager.profile())
        assert params.M == 300
        assert estimate.fit_window[1] - estimate.fit_window[0] <= 2 * 127
        assert 31.0 / 3 < estimate.ell_fit < 2 * 31.0
        assert estimate.r_squared > 0.8

    def test_profile_averager(self):
        averager = ProfileAverager(start_step=3)
        first = exponential_localized_state(6, 2.0)
        second = exponential_localized_state(6, 4.0)
        for step, state in enumerate([first, first, first, second], start=1):
            averager(step, state)
        np.testing.assert_allclose(averager.profile(), (first.probabilities() + second.probabilities()) / 2)

    def test_profile_averager_without_samples(self):
        with pytest.raises(WindowError):
            ProfileAverager(start_step=10).profile()


class TestSaturation:
    def test_constant_series_is_exact(self):
        assert saturation_value([0.3] * 400, 2.8) == 0.3

    def test_alternating_tail(self):
        t_star = localization_time(2.8)
        series = [0.0] * t_star + [0.2, 0.4] * 200
        assert saturation_value(series, 2.8) == pytest.approx(0.3, abs=1e-15)

    def test_too_short(self):
        with pytest.raises(WindowError):
            saturation_value([0.1] * 249, 2.8)

    def test_prefix_invariance(self):
        rng = np.random.default_rng(3)
        series = list(rng.uniform(size=600))
        prefixed = list(rng.uniform(size=localization_time(2.8))) + series
        assert saturation_value(prefixed, 2.8) == saturation_value(series, 2.8)

    def test_tail_only_series(self):
        tail = [0.25] * 200
        assert saturation_value(tail, 31.0, total_steps=2000) == 0.25
        with pytest.raises(WindowError):
            saturation_value(tail, 31.0)

    def test_halfwidth(self):
        assert saturation_halfwidth([0.5] * 300, 1.0) == 0.0
        assert saturation_halfwidth([0.2, 0.4] * 150, 1.0) > 0.0


class TestFits:
    def test_power_law_square_root(self):
        report = fit_power_law([(ell, 2 * math.sqrt(ell)) for ell in (0.1, 0.2, 0.4)])
        assert report.model is FitModel.POWER_LAW
        assert report.exponent_or_rate == pytest.approx(0.5, abs=1e-12)
        assert report.coefficient == pytest.approx(2.0, rel=1e-12)
        assert report.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_power_law_square(self):
        report = fit_power_law([(ell, ell ** 2) for ell in (0.5, 1.0, 2.0, 3.0)])
        assert report.exponent_or_rate == pytest.approx(2.0, abs=1e-12)

    def test_exponential(self):
        report = fit_exponential([(ell, math.exp(-0.7 * ell)) for ell in (4, 8, 12, 20)])
        assert report.model is FitModel.EXPONENTIAL
        assert report.exponent_or_rate == pytest.approx(0.7, abs=1e-12)
        assert report.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_exponential_constant(self):
        report = fit_exponential([(ell, 0.2) for ell in (1, 2, 3, 4)])
        assert report.exponent_or_rate == pytest.approx(0.0, abs=1e-12)

    def test_non_positive_values(self):
        with pytest.raises(DomainError):
            fit_power_law([(0.1, 0.3), (0.2, 0.0), (0.3, 0.5)])
        with pytest.raises(DomainError):
            fit_exponential([(4, 0.3), (5, 0.0), (6, 0.1)])

    def test_too_few_points(self):
        with pytest.raises(InsufficientSupportError):
            fit_power_law([(0.1, 0.3), (0.2, 0.4)])

    @settings(max_examples=40, deadline=None)
    @given(st.permutations([(0.05, 0.11), (0.1, 0.16), (0.3, 0.24), (0.6, 0.37), (0.9, 0.41)]))
    def test_reordering_invariance(self, points):
        reference = fit_power_law(sorted(points))
        shuffled = fit_power_law(points)
        assert shuffled == reference


class TestModels:
    @pytest.mark.parametrize("j", [2, 3, 4, 5])
    def test_coding_ratio(self, j):
        ratio = small_ell_concurrence_model(0.5, 1, j + 1) / small_ell_concurrence_model(0.5, 1, j)
        assert ratio == 0.25

    def test_depends_on_the_upper_label_only(self):
        reference = small_ell_concurrence_model(0.5, 1, 4)
        assert small_ell_concurrence_model(0.5, 3, 4) == reference
        assert small_ell_concurrence_model(0.5, 4, 2) == reference

    def test_square_root_law(self):
        assert small_ell_concurrence_model(0.8, 1, 3) / small_ell_concurrence_model(0.2, 1, 3) == pytest.approx(2.0)

    def test_anchored_curve_passes_through_anchor(self):
        curve = anchored_small_ell_curve([0.1, 0.4], 1, 2, 0.1, 0.05)
        assert curve[0] == pytest.approx(0.05)
        assert curve[1] == pytest.approx(0.1)

    def test_critical_ell(self):
        assert critical_ell(1) == 2.0
        assert critical_ell(2) == 4.0
        assert critical_ell(5) / critical_ell(4) == 2.0

    def test_peak_ties_go_to_smaller_ell(self):
        assert locate_peak([(4.0, 0.1), (1.0, 0.3), (2.0, 0.3)]) == (1.0, 0.3)


class TestEntangledQubits:
    def test_product_state(self):
        assert count_entangled_qubits(momentum_eigenstate(6, 3), 1.0) == 0

    def test_bell_pair(self):
        amplitudes = np.zeros(2 ** 5, dtype=np.complex128)
        amplitudes[[0, 3]] = 1 / math.sqrt(2)
        assert count_entangled_qubits(StateVector(amplitudes, 5), 0.5) >= 1

    def test_grows_with_ell(self):
        states = [exponential_localized_state(10, ell, center=200, seed=5) for ell in (2.0, 64.0)]
        counts = [count_entangled_qubits(psi, 1.0) for psi in states]
        assert counts[0] <= counts[1]
