"""Elementary-link timing, feasibility, rate scaling, and cycle simulation.

Two memory nodes separated by fiber distance L0 attempt heralded
entanglement once per interval dt = L0 / c: photons from modes that
produced a collected pair travel to the midpoint station, a Bell-state
measurement is attempted on each mode whose photons arrived from both
sides, and on the first success both memories must survive the round-trip
feed-forward latency.
"""

from dataclasses import dataclass
import json
import math

import numpy as np

from . import constants
from ._rng import uniform_array
from .errors import ConfigError, DomainError
from .node import NodeConfig

_CHUNK = 1 << 16

#: Fraction of wall-clock time the interface is running trials (the rest
#: prepares the cold ensemble).
DUTY_FACTOR = constants.RUN_DURATION_S / (
    constants.PREP_DURATION_S + constants.RUN_DURATION_S
)


@dataclass(frozen=True)
class LinkConfig:
    separation_m: float
    fiber_speed_m_per_s: float = constants.DEFAULT_FIBER_SPEED_M_PER_S
    memory_lifetime_s: float = constants.DEFAULT_TAU0_S
    multiplexed_qubits: int = 1
    p_bsm: float = constants.DEFAULT_P_BSM
    fiber_transmission: float = 1.0
    t_req_single_s: float = constants.DEFAULT_T_REQ_SINGLE_S

    def __post_init__(self):
        if self.separation_m < 0:
            raise ConfigError("node separation must be non-negative")
        if self.fiber_speed_m_per_s <= 0:
            raise ConfigError("fiber light speed must be positive")
        if self.memory_lifetime_s <= 0:
            raise ConfigError("memory lifetime must be positive")
        if self.multiplexed_qubits < 1:
            raise ConfigError("multiplexed qubit count must be >= 1")
        if not 0.0 < self.p_bsm <= 1.0:
            raise ConfigError("BSM success probability must be in (0, 1]")
        if not 0.0 < self.fiber_transmission <= 1.0:
            raise ConfigError("fiber transmission must be in (0, 1]")
        if self.t_req_single_s <= 0:
            raise ConfigError("single-mode required storage time must be positive")

    @property
    def p_attempt(self) -> float:
        """BSM success times two-photon fiber transmission."""
        return self.p_bsm * self.fiber_transmission**2


def attempt_interval(link: LinkConfig) -> float:
    """Duration of one heralded attempt, L0 / c."""
    return link.separation_m / link.fiber_speed_m_per_s


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    margin: float  # memory lifetime over the attempt interval


def heralded_feasible(link: LinkConfig) -> Feasibility:
    """Heralded operation requires the memory to outlive one attempt."""
    dt = attempt_interval(link)
    if dt == 0.0:
        return Feasibility(feasible=True, margin=math.inf)
    margin = link.memory_lifetime_s / dt
    return Feasibility(feasible=link.memory_lifetime_s > dt, margin=margin)


def deterministic_rate(link: LinkConfig) -> tuple[float, float]:
    """(required storage time, delivery rate) for deterministic generation.

    Multiplexing N_m qubits divides the required storage time and multiplies
    the rate, so the product of the two outputs is identically 1.
    """
    required = link.t_req_single_s / link.multiplexed_qubits
    rate = link.multiplexed_qubits / link.t_req_single_s
    return required, rate


@dataclass(frozen=True)
class LinkRunReport:
    link: LinkConfig
    dt_s: float
    feasible: bool
    margin: float
    cycles: int
    heralds_a: int
    heralds_b: int
    matched_cycles: int
    bsm_successes: int
    successes: int

    @property
    def p_success(self) -> float:
        return self.successes / self.cycles if self.cycles else 0.0

    @property
    def rate_hz_wallclock(self) -> float:
        """Entanglement rate with the preparation duty cycle folded in."""
        if self.dt_s == 0.0:
            return math.inf if self.successes else 0.0
        return self.p_success / self.dt_s * DUTY_FACTOR

    def to_payload(self) -> dict:
        return {
            "L0_m": self.link.separation_m,
            "dt_s": self.dt_s,
            "feasible": self.feasible,
            "margin": self.margin,
            "cycles": self.cycles,
            "heralds_a": self.heralds_a,
            "heralds_b": self.heralds_b,
            "matched_cycles": self.matched_cycles,
            "bsm_successes": self.bsm_successes,
            "successes": self.successes,
            "p_success": self.p_success,
            "rate_hz_wallclock": self.rate_hz_wallclock,
        }


def simulate_link(
    link: LinkConfig,
    node_a: NodeConfig,
    node_b: NodeConfig | None = None,
    n_cycles: int = 1,
    seed: int = 0,
    log_sink=None,
) -> LinkRunReport:
    """Cycle-level Monte Carlo of one elementary link.

    Per cycle each node's modes independently produce a collected pair with
    the node's herald probability; the station attempts a BSM on every mode
    index that received photons from both sides (the multiplexed gain comes
    from these parallel mode-resolved attempts), and the first success is
    kept. Both memories must then survive the feed-forward round trip dt.
    """
    if node_b is None:
        node_b = node_a
    if node_a.channel_count != node_b.channel_count:
        raise ConfigError("both nodes must expose the same mode count")
    if n_cycles < 1:
        raise ConfigError("n_cycles must be >= 1")
    feasibility = heralded_feasible(link)
    if not feasibility.feasible:
        raise ConfigError(
            "link is infeasible for heralded operation: memory lifetime "
            f"{link.memory_lifetime_s} s <= attempt interval {attempt_interval(link)} s"
        )

    m = node_a.channel_count
    dt = attempt_interval(link)
    survival_p = math.exp(-dt / link.memory_lifetime_s) if math.isfinite(
        link.memory_lifetime_s
    ) else 1.0
    n_slots = np.uint64(7 * m + 2)
    mode_offsets = np.arange(m, dtype=np.uint64)[None, :]

    heralds_a = heralds_b = matched_cycles = bsm_successes = successes = 0
    for start in range(0, n_cycles, _CHUNK):
        k = min(_CHUNK, n_cycles - start)
        base = np.arange(start, start + k, dtype=np.uint64) * n_slots

        avail_a = _mode_availability(seed, base, mode_offsets, 0, node_a)
        avail_b = _mode_availability(seed, base, mode_offsets, 3 * m, node_b)
        heralds_a += int(avail_a.any(axis=1).sum())
        heralds_b += int(avail_b.any(axis=1).sum())

        matched = avail_a & avail_b
        matched_any = matched.any(axis=1)
        matched_cycles += int(matched_any.sum())

        bsm_slots = base[:, None] + np.uint64(6 * m) + mode_offsets
        bsm_ok = matched & (uniform_array(seed, bsm_slots) < link.p_attempt)
        success_rows = np.nonzero(bsm_ok.any(axis=1))[0]
        selected = bsm_ok[success_rows].argmax(axis=1)
        bsm_successes += success_rows.size

        alive_a = uniform_array(seed, base[success_rows] + np.uint64(7 * m)) < survival_p
        alive_b = uniform_array(seed, base[success_rows] + np.uint64(7 * m + 1)) < survival_p
        entangled = alive_a & alive_b
        successes += int(entangled.sum())

        if log_sink is not None:
            _write_cycle_log(
                log_sink, start, k, avail_a, avail_b, matched,
                success_rows, selected, entangled,
            )

    return LinkRunReport(
        link=link,
        dt_s=dt,
        feasible=feasibility.feasible,
        margin=feasibility.margin,
        cycles=n_cycles,
        heralds_a=heralds_a,
        heralds_b=heralds_b,
        matched_cycles=matched_cycles,
        bsm_successes=bsm_successes,
        successes=successes,
    )


def _mode_availability(seed, base, mode_offsets, slot_offset, cfg: NodeConfig):
    """Pair generated, field-insensitive, and photon collected, per mode."""
    slots = base[:, None] + np.uint64(slot_offset) + np.uint64(3) * mode_offsets
    available = uniform_array(seed, slots) < cfg.chi
    rows, cols = np.nonzero(available)
    keep_slots = slots[rows, cols]
    insensitive = uniform_array(seed, keep_slots + np.uint64(1)) >= cfg.p_mfs
    rows, cols, keep_slots = rows[insensitive], cols[insensitive], keep_slots[insensitive]
    collected = uniform_array(seed, keep_slots + np.uint64(2)) < cfg.eta_s
    out = np.zeros(available.shape, dtype=bool)
    out[rows[collected], cols[collected]] = True
    return out


def _write_cycle_log(sink, start, k, avail_a, avail_b, matched, success_rows, selected, entangled):
    success_mode = {int(r): int(s) for r, s in zip(success_rows, selected)}
    outcome = {int(r): bool(e) for r, e in zip(success_rows, entangled)}
    for row in range(k):
        payload = {
            "schema": "dlczsim.link_cycle.v1",
            "cycle": start + row,
            "heralds_a": [int(i) + 1 for i in np.nonzero(avail_a[row])[0]],
            "heralds_b": [int(i) + 1 for i in np.nonzero(avail_b[row])[0]],
            "matched_modes": [int(i) + 1 for i in np.nonzero(matched[row])[0]],
            "bsm_success_mode": (success_mode[row] + 1) if row in success_mode else None,
            "entangled": outcome.get(row, False),
        }
        sink.write(json.dumps(payload, separators=(",", ":"), sort_keys=True) + "\n")


def wall_clock_run_time(n_trials: int, trial_period_s: float) -> float:
    """Wall-clock time to execute n trials, duty cycle included."""
    if n_trials < 0 or trial_period_s <= 0:
        raise DomainError("need non-negative trials and a positive trial period")
    return n_trials * trial_period_s / DUTY_FACTOR
