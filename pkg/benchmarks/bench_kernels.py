"""Compare the numba and pure-numpy kernel paths.

Runs the strip-gradient profile and the edit-distance DP through both
implementations on representative inputs and prints a timing table.
The numba rows are skipped when the backend is unavailable.

Usage:
    python benchmarks/bench_kernels.py [--repeats 5]
    PK_NO_NUMBA=1 python benchmarks/bench_kernels.py   # fallback only
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from posterkit import _kernels
from posterkit.layout import DetectorConfig, PanelBox, detect, split_strips, strip_profile


def timeit(fn, repeats: int) -> float:
    fn()  # warm-up (JIT compilation, caches)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_gradient(repeats: int) -> list[tuple[str, float]]:
    rng = np.random.default_rng(7)
    img = rng.integers(0, 256, size=(1200, 1600, 3), dtype=np.uint8)
    rows = [("gradient_sums numpy 1600x1200",
             timeit(lambda: _kernels._gradient_sums_numpy(_kernels._luminance_numpy(img)), repeats))]
    if _kernels.HAVE_NUMBA:
        rows.append(("gradient_sums numba 1600x1200",
                     timeit(lambda: _kernels._gradient_sums_jit(img), repeats)))
    return rows


def bench_levenshtein(repeats: int) -> list[tuple[str, float]]:
    rng = np.random.default_rng(11)
    a = rng.integers(97, 123, size=800).astype(np.int32)
    b = rng.integers(97, 123, size=800).astype(np.int32)
    rows = [("levenshtein numpy 800x800",
             timeit(lambda: _kernels._levenshtein_numpy(a, b), repeats))]
    if _kernels.HAVE_NUMBA:
        rows.append(("levenshtein numba 800x800",
                     timeit(lambda: int(_kernels._levenshtein_jit(a, b)), repeats)))
    return rows


def bench_detect(repeats: int) -> list[tuple[str, float]]:
    rng = np.random.default_rng(3)
    img = np.full((1200, 1600, 3), 255, dtype=np.uint8)
    img[300:800, 500:1100] = rng.integers(0, 256, size=(500, 600, 3), dtype=np.uint8)
    panel = PanelBox(400, 250, 800, 700)
    cfg = DetectorConfig(n_strips=512)
    return [(f"detect end-to-end ({_kernels.backend()})",
             timeit(lambda: detect(img, panel, cfg), repeats))]


def bench_profile_only(repeats: int) -> list[tuple[str, float]]:
    rng = np.random.default_rng(5)
    img = rng.integers(0, 256, size=(1200, 1600, 3), dtype=np.uint8)
    geo = split_strips(img, 512)
    return [(f"strip_profile n=512 ({_kernels.backend()})",
             timeit(lambda: strip_profile(img, geo), repeats))]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"active backend: {_kernels.backend()}")
    rows = []
    rows += bench_gradient(args.repeats)
    rows += bench_levenshtein(args.repeats)
    rows += bench_profile_only(args.repeats)
    rows += bench_detect(args.repeats)
    width = max(len(name) for name, _ in rows)
    print(f"{'kernel':<{width}}  best of {args.repeats}")
    for name, seconds in rows:
        print(f"{name:<{width}}  {seconds * 1e3:8.2f} ms")


if __name__ == "__main__":
    main()
