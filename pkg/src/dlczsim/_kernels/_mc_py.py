"""NumPy implementation of the per-trial Monte-Carlo kernel.

Mirrors the compiled kernel decision for decision: every random draw lives
at an absolute stream index trial_id * (4 m + 3) + slot, so both backends
and any chunking of the trial range produce identical count tables.

Slot layout per trial (m channels):
  4c + 0   pair generated on channel c        (u < chi)
  4c + 1   pair branch is field-sensitive     (u < p_mfs, dropped)
  4c + 2   Stokes photon detected             (u < eta_s)
  4c + 3   Stokes detector choice             (0 if u < marginal_s1)
  4m + 0   read-out survival of the selected channel
  4m + 1   anti-Stokes photon detected        (u < eta_t)
  4m + 2   anti-Stokes detector choice        (0 if u < cond_t1[s])
"""

import numpy as np

from .._rng import uniform_array

_CHUNK = 1 << 19


def simulate_batch(
    seed: int,
    trial_start: int,
    n_trials: int,
    chi: float,
    p_mfs: float,
    eta_s: float,
    marginal_s1: float,
    survival: np.ndarray,
    eta_t: float,
    cond_t1: np.ndarray,
) -> np.ndarray:
    """Aggregate counts [S1T1, S1T2, S2T1, S2T2, S1, S2] per channel."""
    survival = np.asarray(survival, dtype=np.float64)
    cond_t1 = np.asarray(cond_t1, dtype=np.float64)
    m = survival.shape[0]
    n_slots = np.uint64(4 * m + 3)
    channel_offsets = (np.uint64(4) * np.arange(m, dtype=np.uint64))[None, :]
    counts = np.zeros((m, 6), dtype=np.int64)

    for start in range(0, n_trials, _CHUNK):
        k = min(_CHUNK, n_trials - start)
        first = trial_start + start
        base = np.arange(first, first + k, dtype=np.uint64) * n_slots

        pair = uniform_array(seed, base[:, None] + channel_offsets) < chi
        rows, cols = np.nonzero(pair)
        slots = base[rows] + np.uint64(4) * cols.astype(np.uint64)

        insensitive = uniform_array(seed, slots + np.uint64(1)) >= p_mfs
        rows, cols, slots = rows[insensitive], cols[insensitive], slots[insensitive]

        clicked = uniform_array(seed, slots + np.uint64(2)) < eta_s
        rows, cols, slots = rows[clicked], cols[clicked], slots[clicked]

        s_out = (uniform_array(seed, slots + np.uint64(3)) >= marginal_s1).astype(np.int64)
        np.add.at(counts, (cols, 4 + s_out), 1)

        herald = np.zeros((k, m), dtype=bool)
        herald[rows, cols] = True
        s_grid = np.zeros((k, m), dtype=np.int64)
        s_grid[rows, cols] = s_out

        read_rows = np.nonzero(herald.any(axis=1))[0]
        selected = herald[read_rows].argmax(axis=1)
        read_base = base[read_rows] + np.uint64(4 * m)

        alive = uniform_array(seed, read_base) < survival[selected]
        read_rows, selected, read_base = read_rows[alive], selected[alive], read_base[alive]

        t_clicked = uniform_array(seed, read_base + np.uint64(1)) < eta_t
        read_rows, selected, read_base = (
            read_rows[t_clicked],
            selected[t_clicked],
            read_base[t_clicked],
        )

        s_selected = s_grid[read_rows, selected]
        t_out = (
            uniform_array(seed, read_base + np.uint64(2)) >= cond_t1[s_selected]
        ).astype(np.int64)
        np.add.at(counts, (selected, 2 * s_selected + t_out), 1)

    return counts
