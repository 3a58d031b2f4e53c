"""Hot numeric kernels for the optimizer inner loop.

Two operations dominate a run: drawing batches of per-position categorical
indices and counting elite choices during the pmf refit. Both exist in a
numba ``@njit`` version and a pure-numpy version that produce bit-identical
results (they consume the same pre-drawn uniforms with the same search rule).

Set ``CEA_NUMBA=0`` to force the numpy path; anything else (including unset)
uses numba when it imports. ``USING_NUMBA`` records which path is active.
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

_env = os.environ.get("CEA_NUMBA", "1").strip().lower()
_want_numba = _env not in ("0", "false", "no", "off")

USING_NUMBA = False
if _want_numba:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False


def _sample_categorical_np(cumsum: np.ndarray, offsets: np.ndarray,
                           uniforms: np.ndarray) -> np.ndarray:
    """Pure-numpy batch categorical draw.

    ``cumsum`` holds per-row cumulative sums laid out flat; ``offsets`` has
    row boundaries; ``uniforms`` is (n_samples, n_rows). Returns row-local
    indices, shape (n_samples, n_rows).
    """
    n_samples, n_rows = uniforms.shape
    out = np.empty((n_samples, n_rows), dtype=np.int64)
    for i in range(n_rows):
        lo, hi = offsets[i], offsets[i + 1]
        row = cumsum[lo:hi]
        idx = np.searchsorted(row, uniforms[:, i], side="right")
        np.minimum(idx, hi - lo - 1, out=idx)
        out[:, i] = idx
    return out


def _elite_counts_np(offsets: np.ndarray, choices: np.ndarray,
                     elite_mask: np.ndarray) -> np.ndarray:
    """Count elite choices per (row, candidate); flat layout matching offsets."""
    n_rows = offsets.size - 1
    counts = np.zeros(offsets[-1], dtype=np.float64)
    elite = choices[elite_mask]
    for i in range(n_rows):
        lo, hi = offsets[i], offsets[i + 1]
        counts[lo:hi] = np.bincount(elite[:, i], minlength=hi - lo)
    return counts


if USING_NUMBA:

    @njit(cache=True)
    def _sample_categorical_nb(cumsum, offsets, uniforms):  # pragma: no cover
        n_samples, n_rows = uniforms.shape
        out = np.empty((n_samples, n_rows), dtype=np.int64)
        for h in range(n_samples):
            for i in range(n_rows):
                lo = offsets[i]
                hi = offsets[i + 1]
                u = uniforms[h, i]
                # bisect_right over cumsum[lo:hi]
                a, b = lo, hi
                while a < b:
                    mid = (a + b) // 2
                    if cumsum[mid] <= u:
                        a = mid + 1
                    else:
                        b = mid
                j = a - lo
                if j > hi - lo - 1:
                    j = hi - lo - 1
                out[h, i] = j
        return out

    @njit(cache=True)
    def _elite_counts_nb(offsets, choices, elite_mask):  # pragma: no cover
        n_rows = offsets.size - 1
        counts = np.zeros(offsets[-1], dtype=np.float64)
        n_samples = choices.shape[0]
        for h in range(n_samples):
            if elite_mask[h]:
                for i in range(n_rows):
                    counts[offsets[i] + choices[h, i]] += 1.0
        return counts

    sample_categorical = _sample_categorical_nb
    elite_counts = _elite_counts_nb
else:
    sample_categorical = _sample_categorical_np
    elite_counts = _elite_counts_np


def numpy_paths():
    """The pure-numpy implementations, regardless of the env flag (for tests/benchmarks)."""
    return _sample_categorical_np, _elite_counts_np
