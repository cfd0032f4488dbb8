# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-trial Monte-Carlo kernel.

Decision-for-decision mirror of the NumPy fallback (_mc_py); both consume
the same splitmix64 counter stream, so count tables are bit-identical
across backends and trial-range chunkings.
"""

import numpy as np

from libc.stdint cimport int64_t, uint64_t


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _u01(uint64_t seed, uint64_t index) nogil:
    cdef uint64_t z = seed + (index + 1) * <uint64_t>0x9E3779B97F4A7C15
    return <double>(_mix64(z) >> 11) * (1.0 / 9007199254740992.0)


def simulate_batch(
    seed,
    trial_start,
    n_trials,
    double chi,
    double p_mfs,
    double eta_s,
    double marginal_s1,
    survival,
    double eta_t,
    cond_t1,
):
    """Aggregate counts [S1T1, S1T2, S2T1, S2T2, S1, S2] per channel."""
    survival_arr = np.ascontiguousarray(survival, dtype=np.float64)
    cond_arr = np.ascontiguousarray(cond_t1, dtype=np.float64)
    cdef double[::1] surv = survival_arr
    cdef double[::1] cond = cond_arr
    cdef Py_ssize_t m = surv.shape[0]

    counts_arr = np.zeros((m, 6), dtype=np.int64)
    cdef int64_t[:, ::1] counts = counts_arr

    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t start = <uint64_t>int(trial_start)
    cdef uint64_t n = <uint64_t>int(n_trials)
    cdef uint64_t n_slots = <uint64_t>(4 * m + 3)
    cdef uint64_t trial, base
    cdef Py_ssize_t c, selected, s, s_sel, t
    cdef double u

    with nogil:
        for trial in range(start, start + n):
            base = trial * n_slots
            selected = -1
            s_sel = 0
            for c in range(m):
                if _u01(useed, base + 4 * c) >= chi:
                    continue
                if _u01(useed, base + 4 * c + 1) < p_mfs:
                    continue  # field-sensitive branch, excluded from collection
                if _u01(useed, base + 4 * c + 2) >= eta_s:
                    continue
                s = 0 if _u01(useed, base + 4 * c + 3) < marginal_s1 else 1
                counts[c, 4 + s] += 1
                if selected < 0:
                    selected = c
                    s_sel = s
            if selected < 0:
                continue
            if _u01(useed, base + 4 * m) >= surv[selected]:
                continue
            if _u01(useed, base + 4 * m + 1) >= eta_t:
                continue
            u = _u01(useed, base + 4 * m + 2)
            t = 0 if u < cond[s_sel] else 1
            counts[selected, 2 * s_sel + t] += 1

    return counts_arr
