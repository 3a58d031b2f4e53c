"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two inner-loop operations (batch categorical sampling and elite
counting) on optimizer-shaped workloads, then times a whole optimization run
under each path. The paths are bit-identical; this only measures speed.

Run from the repository root:  python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from cea import _kernels
from cea.optimizer import FunctionObjective, run_attack
from cea.types import AttackConfig, CandidateSpace, SamplingDistribution, TokenizedDocument


def layout(rng, n_rows, max_size, n_samples):
    sizes = rng.integers(2, max_size + 1, size=n_rows)
    rows = [rng.dirichlet(np.ones(n)) for n in sizes]
    offsets = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    cumsum = np.concatenate([np.cumsum(r) for r in rows])
    uniforms = rng.random((n_samples, n_rows))
    return cumsum, offsets, uniforms


def time_fn(fn, *args, repeats=200):
    fn(*args)  # warm-up / JIT compile
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def bench_kernels():
    np_sample, np_counts = _kernels.numpy_paths()
    rng = np.random.default_rng(0)
    print(f"{'workload':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for n_rows, max_size, n_samples in ((10, 8, 100), (30, 8, 100),
                                        (30, 20, 500), (120, 10, 1000)):
        cumsum, offsets, uniforms = layout(rng, n_rows, max_size, n_samples)
        t_nb = time_fn(_kernels._sample_categorical_nb, cumsum, offsets, uniforms) \
            if _kernels.USING_NUMBA else float("nan")
        t_np = time_fn(np_sample, cumsum, offsets, uniforms)
        label = f"sample {n_samples}x{n_rows} (<= {max_size})"
        print(f"{label:<28}{t_nb * 1e6:>10.1f}us{t_np * 1e6:>10.1f}us"
              f"{t_np / t_nb:>9.1f}x")

        choices = np_sample(cumsum, offsets, uniforms)
        mask = rng.random(n_samples) < 0.3
        t_nb = time_fn(_kernels._elite_counts_nb, offsets, choices, mask) \
            if _kernels.USING_NUMBA else float("nan")
        t_np = time_fn(np_counts, offsets, choices, mask)
        label = f"count  {n_samples}x{n_rows}"
        print(f"{label:<28}{t_nb * 1e6:>10.1f}us{t_np * 1e6:>10.1f}us"
              f"{t_np / t_nb:>9.1f}x")


def bench_attack():
    rng = np.random.default_rng(1)
    sizes = [6] * 12
    space = CandidateSpace(
        candidates=tuple(tuple(f"w{i}_{j}" for j in range(n))
                         for i, n in enumerate(sizes)),
        identity_index=tuple(0 for _ in sizes),
    )
    doc = TokenizedDocument(tokens=space.original_tokens())
    weights = [rng.random(n) for n in sizes]
    total = sum(w.max() for w in weights)

    def score(a):
        return float(sum(w[j] for w, j in zip(weights, a.indices)) / total)

    cfg = AttackConfig(n_candidates=100, iterations=50, seed=0, full_trace=False)

    def one_run():
        run_attack(doc, space, FunctionObjective(score), cfg)

    t = time_fn(one_run, repeats=10)
    path = "numba" if _kernels.USING_NUMBA else "numpy"
    print(f"\nfull 50x100 optimization run ({path} path): {t * 1e3:.1f} ms")


if __name__ == "__main__":
    print(f"active path: {'numba' if _kernels.USING_NUMBA else 'numpy'} "
          f"(set CEA_NUMBA=0 to force numpy)\n")
    bench_kernels()
    bench_attack()
