"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the three hot paths at corpus scale: pair accumulation, the
strength-fit sweep loop, and batch divergence scans. Run from the repo root:

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from define_engine import _kernels


def time_call(func, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        func()
        best = min(best, time.perf_counter() - start)
    return best


def build_cases(scale: float, rng: np.random.Generator) -> dict:
    m = 33
    n_pairs = int(20_000 * scale)
    n_corpus = int(100_000 * scale)
    winners = rng.uniform(0.01, 1.0, (n_pairs, m))
    losers = rng.uniform(0.01, 1.0, (n_pairs, m))
    w = rng.uniform(0.1, 2.0, (m, m))
    np.fill_diagonal(w, 0.0)
    p0 = np.full(m, 1.0 / m)
    target = rng.uniform(0.05, 1.0, m)
    target /= target.sum()
    corpus = rng.uniform(0.05, 1.0, (n_corpus, m))
    corpus /= corpus.sum(axis=1, keepdims=True)
    return {
        f"accumulate ({n_pairs} pairs, M={m})": lambda: _kernels.accumulate_outer(
            winners, losers
        ),
        f"fit loop (M={m}, tol=1e-12)": lambda: _kernels.bt_fit_loop(w, p0, 1e-12, 10_000),
        f"divergence scan ({n_corpus} rows, M={m})": lambda: _kernels.kl_rows(
            target, corpus
        ),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="best-of-N timing")
    parser.add_argument("--scale", type=float, default=1.0, help="workload multiplier")
    args = parser.parse_args()

    backends = _kernels.available_backends()
    if "c" not in backends:
        print("note: compiled backend not built; only the python fallback will run")
    cases = build_cases(args.scale, np.random.default_rng(0))

    width = max(len(name) for name in cases)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, func in cases.items():
        timings = {}
        for backend in backends:
            _kernels.use_backend(backend)
            timings[backend] = time_call(func, args.repeat)
        row = f"{name:<{width}}  " + "".join(
            f"{timings[b] * 1e3:>10.2f}ms" for b in backends
        )
        if len(backends) == 2:
            row += f"{timings['python'] / timings['c']:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
