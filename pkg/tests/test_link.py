import json
import io
import math

import pytest

from dlczsim.errors import ConfigError
from dlczsim.link import (
    DUTY_FACTOR,
    LinkConfig,
    attempt_interval,
    deterministic_rate,
    heralded_feasible,
    simulate_link,
)
from dlczsim.node import NodeConfig
from dlczsim.states import NoiseModel


def fast_node(chi=0.1, m=3):
    return NodeConfig(
        channel_count=m,
        chi=chi,
        p_mfs=0.0,
        eta_s=1.0,
        lifetimes_s=(1e-3,) * m,
        noise=NoiseModel(v0=1.0, tau_v_s=math.inf),
    )


class TestAttemptInterval:
    def test_field_fiber_distance(self):
        assert attempt_interval(LinkConfig(separation_m=22e3)) == pytest.approx(110e-6)

    def test_lifetime_limited_distance(self):
        assert attempt_interval(LinkConfig(separation_m=200e3)) == pytest.approx(1e-3)

    def test_zero_distance(self):
        assert attempt_interval(LinkConfig(separation_m=0.0)) == 0.0


class TestFeasibility:
    def test_short_memory_long_fiber_infeasible(self):
        link = LinkConfig(separation_m=10e3, memory_lifetime_s=50e-6)
        result = heralded_feasible(link)
        assert not result.feasible
        assert result.margin == pytest.approx(1.0)

    def test_millisecond_memory_over_field_fiber(self):
        link = LinkConfig(separation_m=22e3, memory_lifetime_s=1e-3)
        result = heralded_feasible(link)
        assert result.feasible
        assert result.margin == pytest.approx(9.09, rel=1e-3)

    def test_boundary_is_infeasible(self):
        link = LinkConfig(separation_m=200e3, memory_lifetime_s=1e-3)
        result = heralded_feasible(link)
        assert result.margin == pytest.approx(1.0)
        assert not result.feasible

    def test_zero_distance_always_feasible(self):
        result = heralded_feasible(LinkConfig(separation_m=0.0))
        assert result.feasible
        assert math.isinf(result.margin)


class TestDeterministicRate:
    def test_single_mode_values(self):
        required, rate = deterministic_rate(LinkConfig(separation_m=1.0))
        assert required == pytest.approx(150.0)
        assert rate == pytest.approx(6.7e-3, rel=1e-2)

    def test_multiplexed_values(self):
        link = LinkConfig(separation_m=1.0, multiplexed_qubits=650)
        required, rate = deterministic_rate(link)
        assert required == pytest.approx(0.2308, abs=5e-5)
        assert rate == pytest.approx(4.33, abs=5e-3)

    def test_linear_scaling(self):
        one = deterministic_rate(LinkConfig(separation_m=1.0, multiplexed_qubits=1))
        two = deterministic_rate(LinkConfig(separation_m=1.0, multiplexed_qubits=2))
        assert two[0] == pytest.approx(one[0] / 2)
        assert two[1] == pytest.approx(one[1] * 2)

    def test_reciprocal_identity(self):
        for n in (1, 7, 123, 650):
            link = LinkConfig(separation_m=1.0, multiplexed_qubits=n)
            required, rate = deterministic_rate(link)
            assert required * rate == pytest.approx(1.0, rel=1e-12)


class TestSimulateLink:
    def test_infeasible_link_rejected(self):
        link = LinkConfig(separation_m=10e3, memory_lifetime_s=50e-6)
        with pytest.raises(ConfigError):
            simulate_link(link, fast_node(), n_cycles=10, seed=0)

    def test_perfect_components_succeed_every_cycle(self):
        link = LinkConfig(
            separation_m=1e3, memory_lifetime_s=math.inf, p_bsm=1.0,
        )
        with pytest.warns(UserWarning):
            node = fast_node(chi=1.0, m=1)
        report = simulate_link(link, node, n_cycles=500, seed=1)
        assert report.successes == 500
        assert report.p_success == 1.0
        assert report.dt_s == pytest.approx(5e-6)

    def test_multimode_triples_success_rate(self):
        link = LinkConfig(separation_m=1e3, memory_lifetime_s=math.inf, p_bsm=0.5)
        cycles = 600_000
        triple = simulate_link(link, fast_node(chi=0.1, m=3), n_cycles=cycles, seed=7)
        single = simulate_link(link, fast_node(chi=0.1, m=1), n_cycles=cycles, seed=8)
        ratio = triple.p_success / single.p_success
        assert ratio == pytest.approx(3.0, abs=0.1)

    def test_success_rate_monotone_in_mode_count(self):
        link = LinkConfig(separation_m=1e3, memory_lifetime_s=math.inf, p_bsm=0.5)
        cycles = 300_000
        rates = []
        for m in (1, 2, 3):
            run = simulate_link(link, fast_node(chi=0.1, m=m), n_cycles=cycles, seed=10 + m)
            rates.append(run.p_success)
        for lower, higher in zip(rates, rates[1:]):
            sigma = math.sqrt(max(higher, lower) / cycles)
            assert higher >= lower - 3 * sigma

    def test_herald_rate_is_linear_in_modes(self):
        link = LinkConfig(separation_m=1e3, memory_lifetime_s=math.inf)
        node = fast_node(chi=0.01, m=3)
        report = simulate_link(link, node, n_cycles=200_000, seed=3)
        expected = 3 * 0.01
        rate = report.heralds_a / report.cycles
        sigma = math.sqrt(expected / report.cycles)
        assert abs(rate - expected) < 4 * sigma

    def test_success_requires_heralds_on_both_sides(self):
        link = LinkConfig(separation_m=1e3, memory_lifetime_s=math.inf, p_bsm=1.0)
        sink = io.StringIO()
        with pytest.warns(UserWarning):
            node = fast_node(chi=0.2, m=2)
        simulate_link(link, node, n_cycles=5_000, seed=5, log_sink=sink)
        entangled_cycles = 0
        for line in sink.getvalue().splitlines():
            payload = json.loads(line)
            if payload["entangled"]:
                entangled_cycles += 1
                assert payload["heralds_a"] and payload["heralds_b"]
                assert payload["bsm_success_mode"] in payload["matched_modes"]
            if not (payload["heralds_a"] and payload["heralds_b"]):
                assert not payload["entangled"]
                assert payload["matched_modes"] == []
        assert entangled_cycles > 50

    def test_infinite_memory_factorizes(self):
        link = LinkConfig(separation_m=1e3, memory_lifetime_s=math.inf, p_bsm=0.5)
        node = fast_node(chi=0.05, m=1)
        cycles = 400_000
        report = simulate_link(link, node, n_cycles=cycles, seed=9)
        herald_p = node.herald_probability()
        expected = herald_p * herald_p * link.p_attempt
        sigma = math.sqrt(expected / cycles)
        assert abs(report.p_success - expected) < 4 * sigma

    def test_finite_memory_applies_two_survivals(self):
        dt = 5e-6
        tau = 10e-6
        link = LinkConfig(separation_m=1e3, memory_lifetime_s=tau, p_bsm=1.0)
        with pytest.warns(UserWarning):
            node = fast_node(chi=1.0, m=1)
        cycles = 200_000
        report = simulate_link(link, node, n_cycles=cycles, seed=4)
        expected = math.exp(-2 * dt / tau)
        sigma = math.sqrt(expected * (1 - expected) / cycles)
        assert abs(report.p_success - expected) < 4 * sigma

    def test_deterministic_for_fixed_seed(self):
        link = LinkConfig(separation_m=1e3, memory_lifetime_s=math.inf)
        a = simulate_link(link, fast_node(), n_cycles=50_000, seed=17)
        b = simulate_link(link, fast_node(), n_cycles=50_000, seed=17)
        assert a == b

    def test_mode_count_mismatch_rejected(self):
        link = LinkConfig(separation_m=1e3, memory_lifetime_s=math.inf)
        with pytest.raises(ConfigError):
            simulate_link(link, fast_node(m=3), fast_node(m=2), n_cycles=10, seed=0)

    def test_wallclock_rate_includes_duty_cycle(self):
        link = LinkConfig(separation_m=1e3, memory_lifetime_s=math.inf, p_bsm=1.0)
        with pytest.warns(UserWarning):
            node = fast_node(chi=1.0, m=1)
        report = simulate_link(link, node, n_cycles=100, seed=2)
        assert report.rate_hz_wallclock == pytest.approx(DUTY_FACTOR / 5e-6)


def test_link_config_validation():
    with pytest.raises(ConfigError):
        LinkConfig(separation_m=-1.0)
    with pytest.raises(ConfigError):
        LinkConfig(separation_m=1.0, p_bsm=0.0)
    with pytest.raises(ConfigError):
        LinkConfig(separation_m=1.0, multiplexed_qubits=0)
    link = LinkConfig(separation_m=1.0, p_bsm=0.5, fiber_transmission=0.9)
    assert link.p_attempt == pytest.approx(0.5 * 0.81)
