import json

import pytest

from dlczsim.config import default_config
from dlczsim.errors import ConfigError
from dlczsim.manifest import verify_manifest
from dlczsim.scenarios import (
    ALIASES,
    resolve_name,
    run_scenario,
    run_scenario_file,
    scenario_names,
)


@pytest.fixture(scope="module")
def app():
    return default_config()


class TestNames:
    def test_aliases_resolve(self):
        assert resolve_name("fig2_retrieval") == "retrieval_decay"
        assert resolve_name("fig3_bell") == "bell_decay"
        assert resolve_name("fig4_gain") == "mode_gain"
        assert resolve_name("channel_lifetimes") == "retrieval_decay"

    def test_unknown_rejected_with_listing(self):
        with pytest.raises(ConfigError, match="bell_decay"):
            resolve_name("figX")

    def test_listing_contains_all(self):
        names = scenario_names()
        for name in ("retrieval_decay", "bell_decay", "mode_gain", "tomography"):
            assert name in names
        for alias in ALIASES:
            assert alias in names


class TestRetrievalScenario:
    def test_small_run_structure(self, app, tmp_path):
        result = run_scenario("retrieval_decay", app, tmp_path, trials=200_000)
        assert verify_manifest(tmp_path / "manifest.json")
        for name in result.files:
            assert (tmp_path / name).exists(), name
        fit = result.report["fit"]
        assert 0.10 < fit["gamma0"] < 0.20
        assert 500e-6 < fit["tau0_s"] < 1300e-6
        assert result.report["configured"]["lifetimes_average_s"] == pytest.approx(
            876.7e-6, abs=1e-7
        )
        assert len(result.report["per_channel_fits"]) == 3

    def test_expected_counts_mode_is_deterministic(self, app, tmp_path):
        result = run_scenario(
            "retrieval_decay", app, tmp_path, trials=10_000, expected_counts=True
        )
        assert result.report["fit"]["gamma0"] == pytest.approx(0.1494, abs=2e-3)
        assert result.report["fit"]["tau0_s"] == pytest.approx(856.7e-6, rel=2e-3)

    def test_rerun_is_byte_identical(self, app, tmp_path):
        first = tmp_path / "a"
        second = tmp_path / "b"
        run_scenario("retrieval_decay", app, first, trials=300_000)
        run_scenario("retrieval_decay", app, second, trials=300_000)
        for name in ("counts.csv", "retrieval_vs_time.csv", "report.json", "schedule.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes()


class TestBellScenario:
    def test_small_run_structure(self, app, tmp_path):
        result = run_scenario("bell_decay", app, tmp_path, trials=300_000)
        assert verify_manifest(tmp_path / "manifest.json")
        points = result.report["points"]
        assert len(points) == 2
        assert points[0]["S"] > 2.0
        violation = result.report["violation_at_count_scale"]
        assert violation["significance"] == pytest.approx(3.5, abs=0.7)

    def test_expected_counts_hit_published_values(self, app, tmp_path):
        result = run_scenario(
            "bell_decay", app, tmp_path, trials=300_000, expected_counts=True
        )
        points = {p["t_s"]: p["S"] for p in result.report["points"]}
        assert points[1e-6] == pytest.approx(2.4995, abs=1e-3)
        assert points[1e-3] == pytest.approx(2.07, abs=1e-6)


class TestGainScenario:
    def test_expected_counts_gains(self, app, tmp_path):
        result = run_scenario("mode_gain", app, tmp_path, trials=10_000, expected_counts=True)
        assert result.report["stokes_gain"] == pytest.approx(3.0, rel=1e-9)
        assert result.report["osn_adjusted_gain"] == pytest.approx(2.4, rel=1e-3)
        assert result.report["analytic_osn_gain"] == pytest.approx(2.4)
        assert [row["m"] for row in result.report["rows"]] == [1, 2, 3]
        assert verify_manifest(tmp_path / "manifest.json")

    def test_sampled_small_run(self, app, tmp_path):
        result = run_scenario("mode_gain", app, tmp_path, trials=2_000_000)
        assert result.report["stokes_gain"] == pytest.approx(3.0, abs=0.4)
        for m in (1, 2, 3):
            assert (tmp_path / f"counts_m{m}.csv").exists()
        assert (tmp_path / "counts_reference.csv").exists()


class TestTomographyScenario:
    def test_expected_counts_fidelity(self, app, tmp_path):
        result = run_scenario("tomography", app, tmp_path, trials=300_000, expected_counts=True)
        visibility = app.node.noise.visibility(1e-6)
        assert result.report["pooled"]["fidelity"] == pytest.approx(
            (1 + 3 * visibility) / 4, abs=1e-6
        )
        assert len(result.report["channels"]) == 3
        assert result.report["channels_consistent_within_3_sigma"]

    def test_sampled_small_run(self, app, tmp_path):
        result = run_scenario("tomography", app, tmp_path, trials=400_000)
        assert 0.8 < result.report["pooled"]["fidelity"] < 1.0
        assert (tmp_path / "tomo_pooled.csv").exists()
        assert (tmp_path / "tomo_channel2.csv").exists()


class TestScenarioFile:
    def test_custom_schedule_runs(self, app, tmp_path):
        scenario = tmp_path / "custom.toml"
        scenario.write_text(
            """
[scenario]
name = "custom-sweep"
master_seed = 99

[[scenario.schedule]]
theta_s_deg = 0.0
theta_t_deg = 22.5
storage_time_us = 1.0
n_trials = 30000

[[scenario.schedule]]
label_s = "D"
label_t = "D"
storage_time_us = 1.0
n_trials = 30000
"""
        )
        out = tmp_path / "out"
        result = run_scenario_file(scenario, app, out)
        assert result.report["scenario"] == "custom-sweep"
        assert result.report["total_trials"] == 60000
        assert verify_manifest(out / "manifest.json")
        assert (out / "counts.csv").exists()

    def test_trial_log_written(self, app, tmp_path):
        scenario = tmp_path / "logged.toml"
        scenario.write_text(
            """
[scenario]
master_seed = 5

[[scenario.schedule]]
theta_s_deg = 0.0
theta_t_deg = 0.0
n_trials = 500
"""
        )
        out = tmp_path / "out"
        run_scenario_file(scenario, app, out, log_trials=True)
        lines = (out / "trials.jsonl").read_text().splitlines()
        assert len(lines) == 500
        assert json.loads(lines[0])["schema"] == "dlczsim.trial.v1"

    def test_missing_schedule_diagnosed(self, app, tmp_path):
        scenario = tmp_path / "bad.toml"
        scenario.write_text("[scenario]\nmaster_seed = 1\n")
        with pytest.raises(ConfigError, match="schedule"):
            run_scenario_file(scenario, app, tmp_path / "out")

    def test_missing_angle_key_diagnosed(self, app, tmp_path):
        scenario = tmp_path / "bad.toml"
        scenario.write_text(
            """
[scenario]
master_seed = 1

[[scenario.schedule]]
theta_s_deg = 0.0
n_trials = 10
"""
        )
        with pytest.raises(ConfigError, match="theta_t_deg"):
            run_scenario_file(scenario, app, tmp_path / "out")
