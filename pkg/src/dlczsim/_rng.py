"""Counter-based random streams for reproducible parallel simulation.

Every random decision in the simulators is a pure function of
(seed, draw index) through a splitmix64 hash, so results do not depend on
execution order, chunking, or worker count, and the compiled and NumPy
kernels can reproduce each other bit for bit.
"""

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def u64_at(seed: int, index: int) -> int:
    """splitmix64 output at position `index` of the stream keyed by `seed`."""
    z = (seed + ((index + 1) * _GAMMA)) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def uniform_at(seed: int, index: int) -> float:
    """Uniform double in [0, 1) at stream position `index`."""
    return (u64_at(seed, index) >> 11) * _INV_2_53


def derive_seed(master_seed: int, stream_id: int) -> int:
    """A decorrelated 64-bit sub-seed for stream number `stream_id`."""
    return u64_at(master_seed & _MASK64, stream_id)


def uniform_array(seed: int, indices: np.ndarray) -> np.ndarray:
    """Vectorized `uniform_at` over an array of uint64 draw indices."""
    z = np.uint64(seed & _MASK64) + (indices + np.uint64(1)) * np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


class TrialStream:
    """Random draws for one trial, addressed by slot number.

    A trial's draws live at absolute indices trial_id * n_slots + slot, so a
    single-trial replay consumes exactly the same numbers as a batch run.
    """

    def __init__(self, seed: int, trial_id: int, n_slots: int):
        self.seed = seed & _MASK64
        self.base = trial_id * n_slots
        self.n_slots = n_slots

    def uniform(self, slot: int) -> float:
        if not 0 <= slot < self.n_slots:
            raise IndexError(f"slot {slot} outside layout of {self.n_slots} slots")
        return uniform_at(self.seed, self.base + slot)
