"""Estimators over coincidence tables.

Correlation function, CHSH parameter, retrieval efficiency, multiplexing
gain, and Poissonian Monte-Carlo error bars. Every estimator works on
integer counts from the simulator and on real-valued expected counts, so
analytic oracles can be run without sampling noise.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._rng import derive_seed
from .errors import DomainError, EstimationError
from .states import PolarizationSetting, born_probabilities
from .tables import (
    COL_S1T1,
    COL_S1T2,
    COL_S2T1,
    COL_S2T2,
    CoincidenceTable,
    SettingBlock,
)

#: theta_S, theta_S', theta_T, theta_T' maximizing the CHSH value.
CANONICAL_CHSH_ANGLES = (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)

DEFAULT_RESAMPLES = 400


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise DomainError("sigma must be non-negative")


def _correlation_value(block: SettingBlock, channels) -> float:
    coincidences = block.coincidences(channels)
    same = coincidences[:, COL_S1T1].sum() + coincidences[:, COL_S2T2].sum()
    crossed = coincidences[:, COL_S1T2].sum() + coincidences[:, COL_S2T1].sum()
    total = same + crossed
    if total <= 0:
        raise EstimationError("no coincidences at this setting")
    return (same - crossed) / total


def correlation(
    table: CoincidenceTable,
    theta_s: float,
    theta_t: float,
    channels=None,
    storage_time_s: float | None = None,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
) -> EstimateWithError:
    """Correlation function E(theta_s, theta_t) summed over channels."""
    block = table.find(theta_s=theta_s, theta_t=theta_t, storage_time_s=storage_time_s)
    value = _correlation_value(block, channels)
    sigma = _bootstrap_blocks([block], lambda blocks: _correlation_value(blocks[0], channels),
                              n_resamples, seed)
    return EstimateWithError(value=value, sigma=sigma)


def chsh(
    table: CoincidenceTable,
    angles=CANONICAL_CHSH_ANGLES,
    channels=None,
    storage_time_s: float | None = None,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
) -> EstimateWithError:
    """CHSH parameter |E(a,b) - E(a,b') + E(a',b) + E(a',b')|.

    The error bar comes from a joint Poisson resampling of all four setting
    blocks, so correlations between settings are handled without an
    independence assumption.
    """
    theta_s, theta_s2, theta_t, theta_t2 = angles
    pairs = [
        (theta_s, theta_t),
        (theta_s, theta_t2),
        (theta_s2, theta_t),
        (theta_s2, theta_t2),
    ]
    blocks = [
        table.find(theta_s=a, theta_t=b, storage_time_s=storage_time_s) for a, b in pairs
    ]

    def statistic(bs):
        e = [_correlation_value(b, channels) for b in bs]
        return abs(e[0] - e[1] + e[2] + e[3])

    value = statistic(blocks)
    sigma = _bootstrap_blocks(blocks, statistic, n_resamples, seed)
    return EstimateWithError(value=value, sigma=sigma)


@dataclass(frozen=True)
class RetrievalEstimate:
    """Retrieval efficiency with and without switch-loss correction."""

    raw: EstimateWithError
    switch_corrected: EstimateWithError | None


def retrieval_efficiency_estimate(
    table: CoincidenceTable,
    eta_t: float,
    eta_sw: float | None = None,
    channels=None,
    storage_time_s: float | None = None,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
) -> RetrievalEstimate:
    """Matched coincidences over eta_t-corrected singles at theta_S=theta_T=0.

    The raw value still contains the switch-network loss; passing eta_sw
    reports the corrected value alongside.
    """
    if not 0.0 < eta_t <= 1.0:
        raise DomainError("eta_t must be in (0, 1]")
    if eta_sw is not None and not 0.0 < eta_sw <= 1.0:
        raise DomainError("eta_sw must be in (0, 1]")
    block = table.find(theta_s=0.0, theta_t=0.0, storage_time_s=storage_time_s)

    def statistic(bs):
        b = bs[0]
        matched = b.coincidences(channels)[:, [COL_S1T1, COL_S2T2]].sum()
        singles = b.singles(channels).sum()
        if singles <= 0:
            raise EstimationError("no Stokes singles at theta_S = theta_T = 0")
        return matched / (eta_t * singles)

    value = statistic([block])
    sigma = _bootstrap_blocks([block], statistic, n_resamples, seed)
    raw = EstimateWithError(value=value, sigma=sigma)
    corrected = None
    if eta_sw is not None:
        corrected = EstimateWithError(value=value / eta_sw, sigma=sigma / eta_sw)
    return RetrievalEstimate(raw=raw, switch_corrected=corrected)


@dataclass(frozen=True)
class GainRow:
    mode_count: int
    p_stokes: float
    p_coincidence: float


@dataclass(frozen=True)
class GainReport:
    rows: tuple
    stokes_gain: float  # P_S(max m) / P_S(1)
    coincidence_gain: float  # same switch network on both sides
    osn_adjusted_gain: float | None  # against a reference without the switch
    analytic_osn_gain: float  # m * eta_sw


def _block_probabilities(table: CoincidenceTable) -> tuple[float, float]:
    blocks = list(table.blocks.values())
    if len(blocks) != 1:
        raise EstimationError("gain tables must hold exactly one setting block")
    block = blocks[0]
    if block.n_trials <= 0:
        raise EstimationError("gain tables need the trial count (schedule sidecar)")
    singles = block.singles().sum()
    matched = block.coincidences()[:, [COL_S1T1, COL_S2T2]].sum()
    return singles / block.n_trials, matched / block.n_trials


def multiplex_gain(
    tables: dict[int, CoincidenceTable],
    eta_sw: float,
    reference_no_osn: CoincidenceTable | None = None,
) -> GainReport:
    """Stokes and coincidence probabilities as a function of mode count.

    `tables` maps mode count m to the table of a run at that m (all sharing
    trial counts); `reference_no_osn` is an m=1 run with a perfect switch
    path, used for the switch-adjusted coincidence gain.
    """
    if not tables:
        raise EstimationError("no gain tables given")
    rows = []
    for m in sorted(tables):
        p_s, p_st = _block_probabilities(tables[m])
        rows.append(GainRow(mode_count=m, p_stokes=p_s, p_coincidence=p_st))
    if rows[0].mode_count != 1:
        raise EstimationError("gain analysis needs the single-mode table")
    base = rows[0]
    top = rows[-1]
    if base.p_stokes <= 0 or base.p_coincidence <= 0:
        raise EstimationError("single-mode table has no counts")
    osn_adjusted = None
    if reference_no_osn is not None:
        _, p_st_ref = _block_probabilities(reference_no_osn)
        if p_st_ref <= 0:
            raise EstimationError("reference table has no coincidences")
        osn_adjusted = top.p_coincidence / p_st_ref
    return GainReport(
        rows=tuple(rows),
        stokes_gain=top.p_stokes / base.p_stokes,
        coincidence_gain=top.p_coincidence / base.p_coincidence,
        osn_adjusted_gain=osn_adjusted,
        analytic_osn_gain=top.mode_count * eta_sw,
    )


def poisson_bootstrap(
    table: CoincidenceTable,
    estimator,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
) -> float:
    """Standard deviation of `estimator(table)` under Poisson count noise.

    Every count c in the table is resampled as Poisson(c) and the estimator
    re-evaluated; resamples where it fails are dropped, and more than 10%
    failures raise EstimationError.
    """
    if n_resamples < 100:
        raise DomainError("need at least 100 resamples")
    blocks = list(table.blocks.values())
    ids = list(table.blocks.keys())

    def rebuild(resampled):
        out = CoincidenceTable(table.channel_count)
        for setting_id, block, counts in zip(ids, blocks, resampled):
            out.add_block(
                setting_id,
                SettingBlock(
                    setting=block.setting,
                    storage_time_s=block.storage_time_s,
                    n_trials=block.n_trials,
                    counts=counts,
                ),
            )
        return out

    values = []
    failures = 0
    for r in range(n_resamples):
        rng = np.random.default_rng(derive_seed(seed, r))
        resampled = [rng.poisson(block.counts).astype(np.float64) for block in blocks]
        try:
            values.append(estimator(rebuild(resampled)))
        except EstimationError:
            failures += 1
    if failures > 0.1 * n_resamples:
        raise EstimationError(
            f"{failures}/{n_resamples} bootstrap resamples failed; counts too sparse"
        )
    return float(np.std(values, ddof=1))


def _bootstrap_blocks(blocks, statistic, n_resamples, seed) -> float:
    """Joint Poisson resampling of the given blocks."""
    if n_resamples < 100:
        raise DomainError("need at least 100 resamples")
    values = []
    failures = 0
    for r in range(n_resamples):
        rng = np.random.default_rng(derive_seed(seed, r))
        resampled = []
        for block in blocks:
            resampled.append(
                SettingBlock(
                    setting=block.setting,
                    storage_time_s=block.storage_time_s,
                    n_trials=block.n_trials,
                    counts=rng.poisson(block.counts).astype(np.float64),
                )
            )
        try:
            values.append(statistic(resampled))
        except EstimationError:
            failures += 1
    if failures > 0.1 * n_resamples:
        raise EstimationError(
            f"{failures}/{n_resamples} bootstrap resamples failed; counts too sparse"
        )
    return float(np.std(values, ddof=1))


def born_expected_table(
    rho: np.ndarray,
    settings,
    per_setting_total: float,
    storage_time_s: float = 0.0,
) -> CoincidenceTable:
    """Single-channel expected-count table straight from the Born rule.

    The four coincidence cells of each setting are per_setting_total times
    the joint outcome probabilities on `rho`; singles are split by the
    Stokes marginals. This is the state-level oracle feeding the estimator
    property tests.
    """
    if per_setting_total <= 0:
        raise DomainError("per-setting total must be positive")
    table = CoincidenceTable(channel_count=1)
    for index, setting in enumerate(settings):
        probs = born_probabilities(rho, setting)
        counts = np.zeros((1, 6))
        counts[0, :4] = per_setting_total * probs.reshape(-1)
        counts[0, 4] = per_setting_total * probs[0].sum()
        counts[0, 5] = per_setting_total * probs[1].sum()
        table.add_block(
            f"E{index:03d}",
            SettingBlock(
                setting=setting,
                storage_time_s=storage_time_s,
                n_trials=per_setting_total,
                counts=counts,
            ),
        )
    return table


def expected_chsh_table(
    rho: np.ndarray, per_setting_total: float, angles=CANONICAL_CHSH_ANGLES
) -> CoincidenceTable:
    """Born-rule expected counts at the four CHSH settings."""
    theta_s, theta_s2, theta_t, theta_t2 = angles
    settings = [
        PolarizationSetting.linear(a, b)
        for a, b in [
            (theta_s, theta_t),
            (theta_s, theta_t2),
            (theta_s2, theta_t),
            (theta_s2, theta_t2),
        ]
    ]
    return born_expected_table(rho, settings, per_setting_total)
