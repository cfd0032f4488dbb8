import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dlczsim.decoherence import (
    MFI_COHERENCE,
    MFS_COHERENCE,
    AtomEnsemble,
    Coherence,
    DecayCurve,
    average_lifetime,
    combined_lifetime,
    fit_exponential,
    gradient_lifetime,
    lifetime_budget,
    mean_thermal_speed,
    motional_lifetime,
    retrieval_efficiency_model,
)
from dlczsim.errors import DomainError, FitError
from dlczsim.geometry import ArrayGeometry, mode_angles


@pytest.fixture
def ensemble():
    return AtomEnsemble()


class TestThermalSpeed:
    def test_cold_rubidium_value(self, ensemble):
        assert mean_thermal_speed(ensemble) == pytest.approx(0.0978, abs=2e-4)

    def test_square_root_temperature_law(self, ensemble):
        hot = AtomEnsemble(temperature_K=4 * ensemble.temperature_K)
        assert mean_thermal_speed(hot) == pytest.approx(
            2 * mean_thermal_speed(ensemble), rel=1e-12
        )

    def test_vanishes_with_temperature(self):
        cold = AtomEnsemble(temperature_K=1e-12)
        assert mean_thermal_speed(cold) < 1e-4


class TestMotionalLifetime:
    def test_center_channel_value(self):
        assert motional_lifetime(6.98e-4, 795e-9, 0.0978) == pytest.approx(
            1850e-6, rel=0.02
        )

    def test_outer_channel_value(self):
        assert motional_lifetime(1.571e-3, 795e-9, 0.0978) == pytest.approx(
            840e-6, rel=0.02
        )

    def test_inverse_angle_law(self):
        assert motional_lifetime(5e-4, 795e-9, 0.1) == pytest.approx(
            2 * motional_lifetime(1e-3, 795e-9, 0.1), rel=1e-12
        )

    @given(st.floats(min_value=1e-5, max_value=1e-1))
    def test_angle_times_lifetime_constant(self, theta):
        product = motional_lifetime(theta, 795e-9, 0.1) * theta
        reference = motional_lifetime(1e-3, 795e-9, 0.1) * 1e-3
        assert product == pytest.approx(reference, rel=1e-12)

    def test_rejects_collinear(self):
        with pytest.raises(DomainError):
            motional_lifetime(0.0, 795e-9, 0.1)


class TestGradientLifetime:
    def test_field_insensitive_value(self, ensemble):
        assert gradient_lifetime(ensemble, MFI_COHERENCE) == pytest.approx(32e-3, rel=0.05)

    def test_field_sensitive_value(self, ensemble):
        tau = gradient_lifetime(ensemble, MFS_COHERENCE)
        assert 60e-6 < tau < 70e-6

    def test_sensitive_to_insensitive_ratio(self, ensemble):
        ratio = gradient_lifetime(ensemble, MFI_COHERENCE) / gradient_lifetime(
            ensemble, MFS_COHERENCE
        )
        assert ratio > 400

    def test_zero_gradient_unbounded(self):
        ensemble = AtomEnsemble(gradient_T_per_m=0.0)
        assert math.isinf(gradient_lifetime(ensemble, MFS_COHERENCE))

    def test_coherence_quantum_number_bounds(self):
        with pytest.raises(DomainError):
            Coherence(m_a=2, m_b=0)
        with pytest.raises(DomainError):
            Coherence(m_a=0, m_b=3)


class TestCombinedLifetime:
    def test_headline_combination(self):
        assert combined_lifetime(840e-6, 32e-3) == pytest.approx(818.5e-6, rel=1e-3)

    def test_equal_inputs_halve(self):
        assert combined_lifetime(2e-3, 2e-3) == pytest.approx(1e-3, rel=1e-12)

    def test_unbounded_passthrough(self):
        assert combined_lifetime(840e-6, math.inf) == pytest.approx(840e-6)
        assert combined_lifetime(math.inf, 32e-3) == pytest.approx(32e-3)

    @given(
        st.floats(min_value=1e-6, max_value=1e3),
        st.floats(min_value=1e-6, max_value=1e3),
    )
    def test_never_exceeds_either_input(self, a, b):
        combined = combined_lifetime(a, b)
        assert combined <= min(a, b) + 1e-18

    def test_rejects_non_positive(self):
        with pytest.raises(DomainError):
            combined_lifetime(0.0, 1.0)


class TestRetrievalModel:
    def test_zero_delay(self):
        curve = DecayCurve(gamma0=0.15, tau0_s=870e-6)
        assert retrieval_efficiency_model(0.0, curve) == pytest.approx(0.15)

    def test_one_over_e_point(self):
        curve = DecayCurve(gamma0=0.15, tau0_s=870e-6)
        assert retrieval_efficiency_model(870e-6, curve) == pytest.approx(
            0.15 / math.e, rel=1e-12
        )

    def test_monotone_decay(self):
        curve = DecayCurve(gamma0=0.2, tau0_s=500e-6)
        values = [retrieval_efficiency_model(t, curve) for t in np.linspace(0, 3e-3, 50)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[0] == pytest.approx(curve.gamma0)

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            retrieval_efficiency_model(-1e-6, DecayCurve(0.15, 870e-6))


class TestFit:
    def test_noiseless_round_trip(self):
        curve = DecayCurve(gamma0=0.15, tau0_s=870e-6)
        samples = [(t, retrieval_efficiency_model(t, curve)) for t in
                   np.linspace(0, 2e-3, 9)]
        fit = fit_exponential(samples)
        assert fit.gamma0 == pytest.approx(curve.gamma0, rel=1e-9)
        assert fit.tau0_s == pytest.approx(curve.tau0_s, rel=1e-9)

    @given(
        st.floats(min_value=0.01, max_value=1.0),
        st.floats(min_value=1e-5, max_value=1e-1),
    )
    def test_round_trip_property(self, gamma0, tau0):
        curve = DecayCurve(gamma0=gamma0, tau0_s=tau0)
        times = np.linspace(0, 2 * tau0, 6)
        fit = fit_exponential([(t, retrieval_efficiency_model(t, curve)) for t in times])
        assert fit.gamma0 == pytest.approx(gamma0, rel=1e-7)
        assert fit.tau0_s == pytest.approx(tau0, rel=1e-7)

    def test_unit_efficiency_boundary(self):
        curve = DecayCurve(gamma0=1.0, tau0_s=1e-5)
        samples = [(t, retrieval_efficiency_model(t, curve)) for t in
                   np.linspace(0, 2e-5, 6)]
        fit = fit_exponential(samples)
        assert fit.gamma0 == pytest.approx(1.0, rel=1e-9)
        assert fit.gamma0 <= 1.0

    def test_two_points_interpolate_exactly(self):
        fit = fit_exponential([(0.0, 0.2), (1e-3, 0.2 / math.e)])
        assert fit.gamma0 == pytest.approx(0.2, rel=1e-12)
        assert fit.tau0_s == pytest.approx(1e-3, rel=1e-12)

    def test_rejects_non_positive_samples(self):
        with pytest.raises(DomainError):
            fit_exponential([(0.0, 0.1), (1e-3, 0.0), (2e-3, 0.05)])

    def test_rejects_duplicate_times(self):
        with pytest.raises(DomainError):
            fit_exponential([(0.0, 0.1), (0.0, 0.2), (1e-3, 0.05)])

    def test_rejects_single_sample(self):
        with pytest.raises(DomainError):
            fit_exponential([(0.0, 0.1)])

    def test_rejects_growth(self):
        with pytest.raises(FitError):
            fit_exponential([(0.0, 0.1), (1e-3, 0.2)])


def test_average_of_configured_lifetimes():
    assert average_lifetime([730e-6, 1170e-6, 730e-6]) == pytest.approx(
        876.7e-6, abs=1e-7
    )


def test_lifetime_budget_matches_published_figures(ensemble):
    geometry = ArrayGeometry()
    budget = lifetime_budget(mode_angles(geometry), 795e-9, ensemble, MFI_COHERENCE)
    motional = [row.motional_s for row in budget]
    assert motional[0] == pytest.approx(840e-6, rel=0.03)
    assert motional[1] == pytest.approx(1850e-6, rel=0.03)
    assert motional[0] == motional[2]
    for row in budget:
        assert row.combined_s < row.motional_s
        assert row.gradient_s == pytest.approx(32e-3, rel=0.05)
