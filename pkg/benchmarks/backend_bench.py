"""Benchmark the compiled subspace pursuit kernel against the numpy fallback.

Times the pursuit on the reduced-sample measurement matrices the grid
search actually visits, across a range of problem sizes.

Run:  python benchmarks/backend_bench.py
"""

import time

import numpy as np

import mimosync as ms
from mimosync.recovery import HAVE_COMPILED


def bench_case(cfg, m, reps=200, seed=0):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(cfg.n_taps_total,))
    s_chan, s_pilot, s_sel = ss.spawn(3)
    pilots = ms.generate_pilots(cfg, s_pilot)
    channel = ms.generate_channel(cfg, s_chan)
    a = ms.embedded_model_matrix(cfg, pilots, 0.1, 1e-4)
    sel = ms.select_samples(cfg, m, s_sel)
    a_u = ms.row_subsample(a, sel)
    h_emb = ms.embed_timing(channel, 2, cfg)
    r_u = a_u @ h_emb.taps
    k_total = cfg.total_sparsity

    out = {}
    backends = ["python"] + (["compiled"] if HAVE_COMPILED else [])
    for backend in backends:
        ms.subspace_pursuit(a_u, r_u, k_total, backend=backend)  # warm-up
        t0 = time.perf_counter()
        for _ in range(reps):
            fit = ms.subspace_pursuit(a_u, r_u, k_total, backend=backend)
        out[backend] = (time.perf_counter() - t0) / reps
        err = np.linalg.norm(fit.h_hat - h_emb.taps) / np.linalg.norm(h_emb.taps)
        assert err < 1e-8, f"{backend} backend failed to recover ({err:.2e})"
    return a_u.shape, out


def main():
    cases = [
        (ms.SystemConfig(128, 1, 1, 26, 5, 5, 32), 45),
        (ms.SystemConfig(128, 2, 2, 26, 5, 5, 32), 45),
        (ms.SystemConfig(256, 2, 2, 52, 5, 5, 64), 90),
    ]
    print(f"{'matrix':>12} {'k_total':>8} {'python':>12} {'compiled':>12} {'speedup':>8}")
    for cfg, m in cases:
        shape, times = bench_case(cfg, m)
        python_t = times["python"]
        compiled_t = times.get("compiled")
        label = f"{shape[0]}x{shape[1]}"
        if compiled_t is None:
            print(f"{label:>12} {cfg.total_sparsity:>8} {python_t:>12.3e} {'-':>12} {'-':>8}")
        else:
            print(f"{label:>12} {cfg.total_sparsity:>8} {python_t:>12.3e} "
                  f"{compiled_t:>12.3e} {python_t / compiled_t:>8.2f}")
    if not HAVE_COMPILED:
        print("compiled kernel not built; install with `pip install -e .` to compare")


if __name__ == "__main__":
    main()
