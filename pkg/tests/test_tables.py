import math

import numpy as np
import pytest

from dlczsim.errors import ConfigError, DomainError, EstimationError
from dlczsim.node import NodeConfig, ScheduleEntry, run_batch
from dlczsim.states import PolarizationSetting
from dlczsim.tables import CoincidenceTable, SettingBlock


@pytest.fixture
def sampled_table():
    cfg = NodeConfig()
    schedule = [
        ScheduleEntry(PolarizationSetting.linear(0.0, 0.0), 1e-6, 50_000),
        ScheduleEntry(PolarizationSetting.linear(0.0, math.pi / 8), 400e-6, 50_000),
        ScheduleEntry(PolarizationSetting.tomography("D", "sigma+"), 1e-6, 50_000),
    ]
    return run_batch(cfg, schedule, master_seed=41)


class TestCsvRoundTrip:
    def test_counts_and_settings_survive(self, tmp_path, sampled_table):
        csv_path = tmp_path / "counts.csv"
        sidecar = tmp_path / "schedule.json"
        sampled_table.write_csv(csv_path)
        sampled_table.write_schedule_sidecar(sidecar)

        loaded = CoincidenceTable.read_csv(csv_path, sidecar)
        assert loaded.channel_count == sampled_table.channel_count
        for setting_id, block in sampled_table.blocks.items():
            other = loaded.blocks[setting_id]
            np.testing.assert_array_equal(other.counts, block.counts)
            assert other.storage_time_s == pytest.approx(block.storage_time_s)
            assert other.n_trials == block.n_trials
            assert other.setting.is_tomography == block.setting.is_tomography

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("setting_id,theta_S_deg\nE000,0\n")
        with pytest.raises(ConfigError, match="theta_T_deg"):
            CoincidenceTable.read_csv(path)

    def test_bad_value_diagnosed(self, tmp_path):
        path = tmp_path / "bad.csv"
        header = "setting_id,theta_S_deg,theta_T_deg,channel,n_S1T1,n_S1T2,n_S2T1,n_S2T2,n_S1,n_S2"
        path.write_text(header + "\nE000,0,0,1,1,2,3,4,oops,6\n")
        with pytest.raises(ConfigError, match="oops"):
            CoincidenceTable.read_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ConfigError):
            CoincidenceTable.read_csv(path)

    def test_coincidences_above_singles_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        header = "setting_id,theta_S_deg,theta_T_deg,channel,n_S1T1,n_S1T2,n_S2T1,n_S2T2,n_S1,n_S2"
        path.write_text(header + "\nE000,0,0,1,10,5,0,0,8,8\n")
        with pytest.raises(ConfigError, match="n_S1"):
            CoincidenceTable.read_csv(path)


class TestLookup:
    def test_find_by_angle_and_time(self, sampled_table):
        block = sampled_table.find(theta_s=0.0, theta_t=math.pi / 8)
        assert block.storage_time_s == pytest.approx(400e-6)

    def test_find_by_labels(self, sampled_table):
        block = sampled_table.find(labels=("D", "sigma+"))
        assert block.setting.label_t == "sigma+"

    def test_ambiguous_lookup_needs_time(self):
        table = CoincidenceTable(channel_count=1)
        for index, t in enumerate((0.0, 1e-3)):
            table.add_block(
                f"E{index:03d}",
                SettingBlock(PolarizationSetting.linear(0, 0), t, 10, np.ones((1, 6))),
            )
        with pytest.raises(EstimationError, match="ambiguous"):
            table.find(theta_s=0.0, theta_t=0.0)
        block = table.find(theta_s=0.0, theta_t=0.0, storage_time_s=1e-3)
        assert block.storage_time_s == pytest.approx(1e-3)

    def test_missing_raises(self, sampled_table):
        with pytest.raises(EstimationError):
            sampled_table.find(theta_s=1.0, theta_t=1.0)


class TestBlockValidation:
    def test_negative_counts_rejected(self):
        with pytest.raises(DomainError):
            SettingBlock(PolarizationSetting.linear(0, 0), 0.0, 10, -np.ones((1, 6)))

    def test_wrong_shape_rejected(self):
        with pytest.raises(DomainError):
            SettingBlock(PolarizationSetting.linear(0, 0), 0.0, 10, np.ones((1, 5)))

    def test_duplicate_ids_rejected(self):
        table = CoincidenceTable(channel_count=1)
        block = SettingBlock(PolarizationSetting.linear(0, 0), 0.0, 10, np.ones((1, 6)))
        table.add_block("E000", block)
        with pytest.raises(DomainError):
            table.add_block("E000", block)

    def test_scaling(self):
        table = CoincidenceTable(channel_count=1)
        table.add_block(
            "E000", SettingBlock(PolarizationSetting.linear(0, 0), 0.0, 10, np.ones((1, 6)))
        )
        scaled = table.scaled(2.5)
        np.testing.assert_allclose(scaled.blocks["E000"].counts, 2.5 * np.ones((1, 6)))
        assert scaled.blocks["E000"].n_trials == 25
        with pytest.raises(DomainError):
            table.scaled(0.0)
