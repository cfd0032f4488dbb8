"""Trial-level Monte-Carlo engine for one multimode memory node.

Each trial applies a write pulse: every optical channel independently
generates a photon/spin-wave pair with probability chi, field-sensitive
pairs are excluded from collection, and collected Stokes photons herald
their channel. Feed-forward then reads out the lowest-index heralded
channel through the switch network after the configured storage time.

All randomness is counter-based (see _rng), so batches are reproducible
for any worker count and both kernel backends.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import json
import math
import warnings

import numpy as np

from . import constants, _kernels
from ._rng import TrialStream, derive_seed
from .errors import ConfigError, DomainError, ModelValidityWarning
from .states import NoiseModel, PolarizationSetting, born_probabilities
from .tables import CoincidenceTable, SettingBlock

TRIAL_SCHEMA = "dlczsim.trial.v1"

_SLOT_PAIR, _SLOT_BRANCH, _SLOT_SCLICK, _SLOT_SDET = range(4)


def _default_noise() -> NoiseModel:
    return NoiseModel(v0=constants.DEFAULT_V0, tau_v_s=constants.DEFAULT_TAU_V_S)


@dataclass(frozen=True)
class NodeConfig:
    """Physical parameters of one m-mode node."""

    channel_count: int = constants.DEFAULT_CHANNEL_COUNT
    chi: float = constants.DEFAULT_EXCITATION_PROBABILITY
    eta_s: float = constants.DEFAULT_ETA_S
    eta_t: float = constants.DEFAULT_ETA_T
    eta_sw: float = constants.DEFAULT_ETA_SW
    p_mfs: float = constants.DEFAULT_P_MFS
    gamma0: float = constants.DEFAULT_GAMMA0
    lifetimes_s: tuple = constants.DEFAULT_LIFETIMES_S
    noise: NoiseModel = field(default_factory=_default_noise)
    storage_time_s: float = 1e-6

    def __post_init__(self):
        if self.channel_count < 1:
            raise ConfigError("channel_count must be >= 1")
        for name in ("chi", "eta_s", "eta_t", "eta_sw", "p_mfs"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if not 0.0 < self.gamma0 <= 1.0:
            raise ConfigError("gamma0 must be in (0, 1]")
        if len(self.lifetimes_s) != self.channel_count:
            raise ConfigError(
                f"need one lifetime per channel: got {len(self.lifetimes_s)} "
                f"for {self.channel_count} channels"
            )
        if any(tau <= 0 for tau in self.lifetimes_s):
            raise ConfigError("lifetimes must be positive")
        if self.storage_time_s < 0:
            raise ConfigError("storage time must be non-negative")
        if self.chi > 0.1:
            warnings.warn(
                f"chi = {self.chi} is not small; the single-pair model degrades",
                ModelValidityWarning,
                stacklevel=2,
            )

    def survival_probabilities(self, storage_time_s: float | None = None) -> np.ndarray:
        """Per-channel probability that a heralded excitation is retrieved
        through the switch network: gamma0 * exp(-t / tau_i) * eta_sw."""
        t = self.storage_time_s if storage_time_s is None else storage_time_s
        taus = np.asarray(self.lifetimes_s, dtype=np.float64)
        return self.gamma0 * np.exp(-t / taus) * self.eta_sw

    def herald_probability(self) -> float:
        """Per-channel per-trial probability of a collected Stokes click."""
        return self.chi * (1.0 - self.p_mfs) * self.eta_s


def double_excitation_note(cfg: NodeConfig) -> str | None:
    """Advisory about unmodeled multi-pair emission; warns for chi > 0.05."""
    if cfg.chi > 0.05:
        message = (
            f"chi = {cfg.chi}: multi-pair emission is not modeled; "
            "results are first-order in the excitation probability"
        )
        warnings.warn(message, ModelValidityWarning, stacklevel=2)
        return message
    return None


@dataclass(frozen=True)
class ScheduleEntry:
    setting: PolarizationSetting
    storage_time_s: float
    n_trials: int

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if self.storage_time_s < 0:
            raise ConfigError("storage time must be non-negative")


@dataclass(frozen=True)
class ChannelOutcome:
    pair_generated: bool
    branch: str | None  # "MFI" | "MFS" | None
    stokes_detector: int | None  # 1 | 2 | None


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    setting: PolarizationSetting
    storage_time_s: float
    channels: tuple
    heralded: tuple  # 1-based channel indices
    selected_channel: int | None
    retrieved: bool
    anti_stokes_detector: int | None

    def to_json(self) -> str:
        payload = {
            "schema": TRIAL_SCHEMA,
            "trial_id": self.trial_id,
            "setting": self.setting.describe(),
            "storage_time_s": self.storage_time_s,
            "channels": [
                {
                    "pair_generated": c.pair_generated,
                    "branch": c.branch,
                    "stokes_detector": c.stokes_detector,
                }
                for c in self.channels
            ],
            "heralded": list(self.heralded),
            "selected_channel": self.selected_channel,
            "retrieved": self.retrieved,
            "anti_stokes_detector": self.anti_stokes_detector,
        }
        return json.dumps(payload, separators=(",", ":"), sort_keys=True)


def _setting_probabilities(cfg: NodeConfig, setting: PolarizationSetting, storage_time_s: float):
    """Stokes marginal at write time and anti-Stokes conditionals at read time."""
    write_probs = born_probabilities(cfg.noise.state_at(0.0), setting)
    marginal_s1 = float(write_probs[0].sum())
    read_probs = born_probabilities(cfg.noise.state_at(storage_time_s), setting)
    cond_t1 = np.empty(2)
    for s in (0, 1):
        row = read_probs[s].sum()
        cond_t1[s] = read_probs[s, 0] / row if row > 0 else 0.5
    return marginal_s1, cond_t1


def run_trial(
    cfg: NodeConfig,
    setting: PolarizationSetting,
    stream: TrialStream,
    storage_time_s: float | None = None,
) -> TrialRecord:
    """Simulate one write/read trial, consuming only the supplied stream."""
    t = cfg.storage_time_s if storage_time_s is None else storage_time_s
    m = cfg.channel_count
    if stream.n_slots != 4 * m + 3:
        raise DomainError(f"stream has {stream.n_slots} slots, expected {4 * m + 3}")
    marginal_s1, cond_t1 = _setting_probabilities(cfg, setting, t)

    channels = []
    heralded = []
    stokes_outcomes = {}
    for c in range(m):
        base = 4 * c
        if stream.uniform(base + _SLOT_PAIR) >= cfg.chi:
            channels.append(ChannelOutcome(False, None, None))
            continue
        if stream.uniform(base + _SLOT_BRANCH) < cfg.p_mfs:
            channels.append(ChannelOutcome(True, "MFS", None))
            continue
        if stream.uniform(base + _SLOT_SCLICK) >= cfg.eta_s:
            channels.append(ChannelOutcome(True, "MFI", None))
            continue
        s = 0 if stream.uniform(base + _SLOT_SDET) < marginal_s1 else 1
        channels.append(ChannelOutcome(True, "MFI", s + 1))
        heralded.append(c + 1)
        stokes_outcomes[c] = s

    selected = None
    retrieved = False
    anti_detector = None
    if heralded:
        selected = heralded[0]
        survival = cfg.survival_probabilities(t)[selected - 1]
        if stream.uniform(4 * m) < survival:
            retrieved = True
            if stream.uniform(4 * m + 1) < cfg.eta_t:
                s = stokes_outcomes[selected - 1]
                anti = 0 if stream.uniform(4 * m + 2) < cond_t1[s] else 1
                anti_detector = anti + 1

    return TrialRecord(
        trial_id=stream.base // stream.n_slots,
        setting=setting,
        storage_time_s=t,
        channels=tuple(channels),
        heralded=tuple(heralded),
        selected_channel=selected,
        retrieved=retrieved,
        anti_stokes_detector=anti_detector,
    )


def _accumulate_record(counts: np.ndarray, record: TrialRecord) -> None:
    for c, outcome in enumerate(record.channels):
        if outcome.stokes_detector is not None:
            counts[c, 4 + (outcome.stokes_detector - 1)] += 1
    if record.anti_stokes_detector is not None:
        c = record.selected_channel - 1
        s = record.channels[c].stokes_detector - 1
        t = record.anti_stokes_detector - 1
        counts[c, 2 * s + t] += 1


def run_batch(
    cfg: NodeConfig,
    schedule,
    master_seed: int,
    worker_count: int = 1,
    backend: str | None = None,
    log_sink=None,
) -> CoincidenceTable:
    """Run every schedule entry and aggregate a coincidence table.

    Identical (master_seed, schedule) inputs give identical tables for any
    worker_count and either kernel backend. When `log_sink` is given (a
    writable text file object), one JSON line per trial is emitted and the
    slow single-trial path is used.
    """
    schedule = list(schedule)
    if not schedule:
        raise ConfigError("schedule is empty")
    if worker_count < 1:
        raise ConfigError("worker_count must be >= 1")
    kernel = _kernels.simulate_batch
    if backend is not None:
        backends = _kernels.available_backends()
        if backend not in backends:
            raise ConfigError(f"kernel backend {backend!r} not available")
        kernel = backends[backend]

    m = cfg.channel_count
    table = CoincidenceTable(channel_count=m)
    for entry_index, entry in enumerate(schedule):
        entry_seed = derive_seed(master_seed, entry_index)
        if log_sink is not None:
            counts = _run_entry_logged(cfg, entry, entry_seed, log_sink)
        else:
            counts = _run_entry_kernel(cfg, entry, entry_seed, worker_count, kernel)
        block = SettingBlock(
            setting=entry.setting,
            storage_time_s=entry.storage_time_s,
            n_trials=entry.n_trials,
            counts=counts,
        )
        block.check_consistency()
        table.add_block(f"E{entry_index:03d}", block)
    return table


def _run_entry_kernel(cfg, entry, entry_seed, worker_count, kernel):
    marginal_s1, cond_t1 = _setting_probabilities(cfg, entry.setting, entry.storage_time_s)
    survival = cfg.survival_probabilities(entry.storage_time_s)
    args = (cfg.chi, cfg.p_mfs, cfg.eta_s, marginal_s1, survival, cfg.eta_t, cond_t1)

    n = entry.n_trials
    if worker_count == 1:
        return kernel(entry_seed, 0, n, *args).astype(np.float64)

    chunk = max(1, math.ceil(n / (worker_count * 4)))
    ranges = [(start, min(chunk, n - start)) for start in range(0, n, chunk)]
    with ThreadPoolExecutor(max_workers=worker_count) as pool:
        futures = [pool.submit(kernel, entry_seed, start, count, *args) for start, count in ranges]
        partials = [f.result() for f in futures]
    total = partials[0]
    for part in partials[1:]:
        total = total + part
    return total.astype(np.float64)


def _run_entry_logged(cfg, entry, entry_seed, sink):
    m = cfg.channel_count
    counts = np.zeros((m, 6), dtype=np.float64)
    n_slots = 4 * m + 3
    for trial_id in range(entry.n_trials):
        record = run_trial(
            cfg,
            entry.setting,
            TrialStream(entry_seed, trial_id, n_slots),
            storage_time_s=entry.storage_time_s,
        )
        _accumulate_record(counts, record)
        sink.write(record.to_json() + "\n")
    return counts


def expected_coincidence_table(cfg: NodeConfig, schedule) -> CoincidenceTable:
    """Noiseless expected counts for the given schedule.

    Uses the first-order (chi << 1) probabilities, under which every channel
    contributes independently; this is the regime where the per-channel sums
    in the estimators are exact identities.
    """
    schedule = list(schedule)
    if not schedule:
        raise ConfigError("schedule is empty")
    m = cfg.channel_count
    p_herald = cfg.herald_probability()
    table = CoincidenceTable(channel_count=m)
    for entry_index, entry in enumerate(schedule):
        write_probs = born_probabilities(cfg.noise.state_at(0.0), entry.setting)
        marginal_s = write_probs.sum(axis=1)
        read_probs = born_probabilities(cfg.noise.state_at(entry.storage_time_s), entry.setting)
        joint = np.empty((2, 2))
        for s in (0, 1):
            row = read_probs[s].sum()
            cond = read_probs[s] / row if row > 0 else np.full(2, 0.5)
            joint[s] = marginal_s[s] * cond
        survival = cfg.survival_probabilities(entry.storage_time_s)
        counts = np.zeros((m, 6))
        for c in range(m):
            reads = entry.n_trials * p_herald * survival[c] * cfg.eta_t
            counts[c, :4] = reads * joint.reshape(-1)
            counts[c, 4] = entry.n_trials * p_herald * marginal_s[0]
            counts[c, 5] = entry.n_trials * p_herald * marginal_s[1]
        table.add_block(
            f"E{entry_index:03d}",
            SettingBlock(
                setting=entry.setting,
                storage_time_s=entry.storage_time_s,
                n_trials=entry.n_trials,
                counts=counts,
            ),
        )
    return table
