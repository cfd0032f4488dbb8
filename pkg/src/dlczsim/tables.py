"""Coincidence-count tables and their CSV interchange format.

A table holds one block of per-channel counts for every analyzer setting it
was accumulated under. Counts are stored as float64 so that estimators can
run on real-valued expected counts as well as on sampled integers.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, EstimationError
from .states import PolarizationSetting

CSV_COLUMNS = (
    "setting_id",
    "theta_S_deg",
    "theta_T_deg",
    "channel",
    "n_S1T1",
    "n_S1T2",
    "n_S2T1",
    "n_S2T2",
    "n_S1",
    "n_S2",
)

#: Column indices within a per-channel counts row.
COL_S1T1, COL_S1T2, COL_S2T1, COL_S2T2, COL_S1, COL_S2 = range(6)

_ANGLE_ATOL = 1e-9


@dataclass
class SettingBlock:
    """Counts accumulated for one (setting, storage time) combination."""

    setting: PolarizationSetting
    storage_time_s: float
    n_trials: float
    counts: np.ndarray  # shape (channel_count, 6)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.float64)
        if self.counts.ndim != 2 or self.counts.shape[1] != 6:
            raise DomainError("counts block must have shape (channels, 6)")
        if np.any(self.counts < 0):
            raise DomainError("counts must be non-negative")

    @property
    def channel_count(self) -> int:
        return self.counts.shape[0]

    def check_consistency(self) -> None:
        """Coincidences cannot exceed the singles they are conditioned on.

        Holds for simulator output and expected counts by construction; used
        to vet externally supplied tables. Bootstrap resamples skip it since
        independent Poisson draws may transiently violate it.
        """
        for s, singles_col in ((0, COL_S1), (1, COL_S2)):
            coincidences = self.counts[:, 2 * s] + self.counts[:, 2 * s + 1]
            if np.any(coincidences > self.counts[:, singles_col] + 1e-9):
                raise DomainError(
                    f"n_S{s + 1}T1 + n_S{s + 1}T2 exceeds n_S{s + 1} singles"
                )

    def coincidences(self, channels=None) -> np.ndarray:
        rows = self._rows(channels)
        return self.counts[rows, :4]

    def singles(self, channels=None) -> np.ndarray:
        rows = self._rows(channels)
        return self.counts[rows, 4:]

    def _rows(self, channels):
        if channels is None:
            return slice(None)
        rows = [c - 1 for c in channels]
        if any(r < 0 or r >= self.channel_count for r in rows):
            raise DomainError("channel index outside table")
        return rows


@dataclass
class CoincidenceTable:
    channel_count: int
    blocks: dict = field(default_factory=dict)  # setting_id -> SettingBlock

    def add_block(self, setting_id: str, block: SettingBlock) -> None:
        if block.channel_count != self.channel_count:
            raise DomainError("block channel count does not match table")
        if setting_id in self.blocks:
            raise DomainError(f"duplicate setting id {setting_id!r}")
        self.blocks[setting_id] = block

    def find(
        self,
        theta_s: float | None = None,
        theta_t: float | None = None,
        labels: tuple | None = None,
        storage_time_s: float | None = None,
    ) -> SettingBlock:
        """Locate the unique block matching the given analyzer setting."""
        matches = []
        for block in self.blocks.values():
            setting = block.setting
            if labels is not None:
                if (setting.label_s, setting.label_t) != tuple(labels):
                    continue
            elif theta_s is not None:
                if setting.is_tomography:
                    continue
                if abs(setting.theta_s - theta_s) > _ANGLE_ATOL:
                    continue
                if abs(setting.theta_t - theta_t) > _ANGLE_ATOL:
                    continue
            if storage_time_s is not None and not math.isclose(
                block.storage_time_s, storage_time_s, rel_tol=0.0, abs_tol=1e-15
            ):
                continue
            matches.append(block)
        if not matches:
            raise EstimationError(
                f"no counts recorded for setting theta_s={theta_s} theta_t={theta_t} "
                f"labels={labels} t={storage_time_s}"
            )
        if len(matches) > 1:
            raise EstimationError(
                "setting lookup is ambiguous; pass storage_time_s to disambiguate"
            )
        return matches[0]

    def scaled(self, factor: float) -> "CoincidenceTable":
        """Copy with every count (and trial total) multiplied by `factor`."""
        if factor <= 0:
            raise DomainError("scale factor must be positive")
        out = CoincidenceTable(self.channel_count)
        for setting_id, block in self.blocks.items():
            out.add_block(
                setting_id,
                SettingBlock(
                    setting=block.setting,
                    storage_time_s=block.storage_time_s,
                    n_trials=block.n_trials * factor,
                    counts=block.counts * factor,
                ),
            )
        return out

    # -- CSV / sidecar round trip ------------------------------------------

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(CSV_COLUMNS)
            for setting_id, block in self.blocks.items():
                if block.setting.is_tomography:
                    col_s, col_t = block.setting.label_s, block.setting.label_t
                else:
                    col_s = _format_number(math.degrees(block.setting.theta_s))
                    col_t = _format_number(math.degrees(block.setting.theta_t))
                for channel in range(1, block.channel_count + 1):
                    row = [setting_id, col_s, col_t, channel]
                    row.extend(_format_number(v) for v in block.counts[channel - 1])
                    writer.writerow(row)

    def write_schedule_sidecar(self, path) -> None:
        entries = []
        for setting_id, block in self.blocks.items():
            entries.append(
                {
                    "setting_id": setting_id,
                    "setting": block.setting.describe(),
                    "storage_time_s": block.storage_time_s,
                    "n_trials": block.n_trials,
                }
            )
        with open(path, "w") as handle:
            json.dump({"schema": "dlczsim.schedule.v1", "entries": entries}, handle, indent=2)
            handle.write("\n")

    @classmethod
    def read_csv(cls, path, schedule_path=None) -> "CoincidenceTable":
        sidecar = {}
        if schedule_path is not None:
            with open(schedule_path) as handle:
                payload = json.load(handle)
            for entry in payload.get("entries", []):
                sidecar[entry["setting_id"]] = entry

        grouped: dict[str, dict] = {}
        with open(path, newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None:
                raise ConfigError(f"{path}: empty counts file")
            missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
            if missing:
                raise ConfigError(f"{path}: missing column {missing[0]!r}")
            for record in reader:
                setting_id = record["setting_id"]
                group = grouped.setdefault(
                    setting_id,
                    {"theta_s": record["theta_S_deg"], "theta_t": record["theta_T_deg"], "rows": {}},
                )
                try:
                    channel = int(record["channel"])
                    values = [float(record[c]) for c in CSV_COLUMNS[4:]]
                except ValueError as exc:
                    raise ConfigError(f"{path}: bad value in row {record!r}: {exc}") from None
                group["rows"][channel] = values

        table = None
        for setting_id, group in grouped.items():
            channels = sorted(group["rows"])
            if channels != list(range(1, len(channels) + 1)):
                raise ConfigError(f"{path}: non-contiguous channels for {setting_id!r}")
            counts = np.array([group["rows"][c] for c in channels])
            if table is None:
                table = cls(channel_count=len(channels))
            setting = _parse_setting(group["theta_s"], group["theta_t"])
            meta = sidecar.get(setting_id, {})
            block = SettingBlock(
                setting=setting,
                storage_time_s=float(meta.get("storage_time_s", 0.0)),
                n_trials=float(meta.get("n_trials", 0.0)),
                counts=counts,
            )
            try:
                block.check_consistency()
            except DomainError as exc:
                raise ConfigError(f"{path}: {setting_id}: {exc}") from None
            table.add_block(setting_id, block)
        if table is None:
            raise ConfigError(f"{path}: no data rows")
        return table


def _parse_setting(col_s: str, col_t: str) -> PolarizationSetting:
    try:
        theta_s = math.radians(float(col_s))
        theta_t = math.radians(float(col_t))
    except ValueError:
        return PolarizationSetting.tomography(col_s, col_t)
    return PolarizationSetting.linear(theta_s, theta_t)


def _format_number(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))
