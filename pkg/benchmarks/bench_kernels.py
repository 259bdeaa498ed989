"""Benchmark the compiled kernels against the pure-Python fallback.

Run:  python benchmarks/bench_kernels.py [--repeat N]

Covers the two hot paths: per-frame pixel statistics over a cine stack and
embedding-triangle Gram terms. The pure backend exists for portability;
this shows what the extension buys on real sizes.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cagkit.kernels import backends


def time_call(fn, *args, repeat: int = 3) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_frame_stats(impl, n_frames: int, side: int, dtype, repeat: int) -> float:
    rng = np.random.default_rng(0)
    high = 256 if dtype == np.uint8 else 65536
    data = rng.integers(0, high, size=n_frames * side * side).astype(dtype)
    means = np.empty(n_frames)
    variances = np.empty(n_frames)
    fn = impl.frame_mean_var_u8 if dtype == np.uint8 else impl.frame_mean_var_u16
    return time_call(fn, data, n_frames, side * side, means, variances,
                     repeat=repeat)


def bench_triangle_gram(impl, n: int, d: int, repeat: int) -> float:
    rng = np.random.default_rng(1)
    i, g, r = (rng.normal(size=n * d) for _ in range(3))
    a = np.empty(n)
    b = np.empty(n)
    ab = np.empty(n)
    return time_call(impl.triangle_gram, i, g, r, n, d, a, b, ab, repeat=repeat)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    impls = backends()
    if "native" not in impls:
        print("note: native extension not built; timing pure backend only")

    cases = [
        ("frame stats u8  64 frames 256x256",
         lambda impl: bench_frame_stats(impl, 64, 256, np.uint8, args.repeat)),
        ("frame stats u16 64 frames 256x256",
         lambda impl: bench_frame_stats(impl, 64, 256, np.uint16, args.repeat)),
        ("frame stats u8  16 frames 512x512",
         lambda impl: bench_frame_stats(impl, 16, 512, np.uint8, args.repeat)),
        ("triangle gram 2000 x d=512",
         lambda impl: bench_triangle_gram(impl, 2000, 512, args.repeat)),
        ("triangle gram 20000 x d=8",
         lambda impl: bench_triangle_gram(impl, 20000, 8, args.repeat)),
    ]

    header = f"{'case':38s}" + "".join(f"{name:>12s}" for name in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    print("-" * len(header))
    for label, runner in cases:
        times = {name: runner(impl) for name, impl in impls.items()}
        row = f"{label:38s}" + "".join(f"{times[name] * 1e3:10.2f}ms" for name in impls)
        if "native" in times and "pure" in times:
            row += f"{times['pure'] / times['native']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
