"""Hot numeric kernels with numba and pure-numpy implementations.

The layout detector's gradient profiles walk every pixel of a crop and
the edit-distance DP is quadratic in string length, so both carry an
``@njit`` fast path. Selection happens once at import time:

* numba available and ``PK_NO_NUMBA`` unset  -> jitted kernels
* ``PK_NO_NUMBA=1`` (or numba missing)       -> pure numpy fallback

Both paths are exercised by the test suite and compared by
``benchmarks/bench_kernels.py``. Results agree to float64 rounding; the
fallback keeps the package dependency-light.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("PK_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

# ITU-R BT.601 luma weights; the detector works on single-channel luminance.
_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114


def _luminance_numpy(rgb: np.ndarray) -> np.ndarray:
    pix = rgb.astype(np.float64)
    return _LUMA_R * pix[:, :, 0] + _LUMA_G * pix[:, :, 1] + _LUMA_B * pix[:, :, 2]


def _gradient_sums_numpy(lum: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    row_sums = np.abs(np.diff(lum, axis=1)).sum(axis=1)
    col_sums = np.abs(np.diff(lum, axis=0)).sum(axis=0)
    return row_sums, col_sums


def _levenshtein_numpy(a: np.ndarray, b: np.ndarray) -> int:
    # Row-at-a-time DP; the within-row dependency collapses to a prefix
    # minimum: cur[j] = min_k<=j (t[k] + j - k) with t the two backward moves.
    if a.size == 0:
        return int(b.size)
    if b.size == 0:
        return int(a.size)
    m = b.size
    offsets = np.arange(1, m + 1)
    prev = np.arange(m + 1, dtype=np.int64)
    for i in range(a.size):
        cost = (b != a[i]).astype(np.int64)
        tentative = np.minimum(prev[1:] + 1, prev[:-1] + cost)
        head = np.concatenate(([i + 1], tentative - offsets))
        cur = np.minimum.accumulate(head)[1:] + offsets
        prev = np.concatenate(([i + 1], cur))
    return int(prev[-1])


if HAVE_NUMBA:

    @njit(cache=True)
    def _gradient_sums_jit(rgb):  # pragma: no cover - measured via dispatcher
        h, w = rgb.shape[0], rgb.shape[1]
        row_sums = np.zeros(h, dtype=np.float64)
        col_sums = np.zeros(w, dtype=np.float64)
        prev_row = np.zeros(w, dtype=np.float64)
        for y in range(h):
            prev = 0.0
            for x in range(w):
                lum = (_LUMA_R * rgb[y, x, 0] + _LUMA_G * rgb[y, x, 1]
                       + _LUMA_B * rgb[y, x, 2])
                if x > 0:
                    row_sums[y] += abs(lum - prev)
                if y > 0:
                    col_sums[x] += abs(lum - prev_row[x])
                prev = lum
                prev_row[x] = lum
        return row_sums, col_sums

    @njit(cache=True)
    def _levenshtein_jit(a, b):  # pragma: no cover - measured via dispatcher
        n, m = a.size, b.size
        if n == 0:
            return m
        if m == 0:
            return n
        prev = np.arange(m + 1, dtype=np.int64)
        cur = np.zeros(m + 1, dtype=np.int64)
        for i in range(n):
            cur[0] = i + 1
            for j in range(m):
                cost = 0 if a[i] == b[j] else 1
                best = prev[j] + cost
                if prev[j + 1] + 1 < best:
                    best = prev[j + 1] + 1
                if cur[j] + 1 < best:
                    best = cur[j] + 1
                cur[j + 1] = best
            prev, cur = cur, prev
        return prev[m]


def luminance(rgb: np.ndarray) -> np.ndarray:
    """float64 luminance plane of an (H, W, 3) uint8 image."""
    return _luminance_numpy(rgb)


def gradient_sums(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row sums of |dL/dx| and per-column sums of |dL/dy|.

    Strip profiles aggregate these; computing at full resolution once
    keeps the strip loop cheap for any strip count.
    """
    if HAVE_NUMBA:
        return _gradient_sums_jit(np.ascontiguousarray(rgb))
    return _gradient_sums_numpy(_luminance_numpy(rgb))


def levenshtein_codes(a: np.ndarray, b: np.ndarray) -> int:
    """Unit-cost edit distance between two int32 code sequences."""
    if HAVE_NUMBA:
        return int(_levenshtein_jit(a, b))
    return _levenshtein_numpy(a, b)


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
