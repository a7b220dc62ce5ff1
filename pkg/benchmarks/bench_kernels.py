"""Timing comparison of the compiled reduction kernel vs the numpy fallback.

Two workloads:
  kernel     - reduce_skyline alone on pre-built ragged batches
  end-to-end - sample_blockage (city generation + reduction); the fallback
               is timed in a subprocess with SKYVIS_PURE=1 because the
               backend is fixed at import time

Run:  python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5]
"""
import argparse
import json
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from skyvis import KERNEL_BACKEND, EnvParams, ModelKind, sample_blockage
from skyvis._kernels import available_backends

HERE = os.path.dirname(os.path.abspath(__file__))


def make_batch(n, mean_count, seed):
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean_count, n)
    starts = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=starts[1:])
    tot = int(starts[-1])
    xs = rng.uniform(0.0, 50.0, tot)
    hs = rng.exponential(1.0, tot)
    x0 = np.zeros(n)
    h0 = np.zeros(n)
    return xs, hs, starts, x0, h0


def time_call(fn, *args, repeat):
    # one warm-up, then best/median over the timed repetitions
    fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def bench_kernel(n, repeat):
    batch = make_batch(n, mean_count=30, seed=0)
    rows = []
    outputs = {}
    for name, fn in available_backends().items():
        best, med = time_call(fn, *batch, True, repeat=repeat)
        outputs[name] = fn(*batch, True)
        rows.append((name, best, med))
    if len(outputs) == 2:
        a, b = outputs.values()
        same = all(np.array_equal(x, y, equal_nan=True)
                   for x, y in zip(a, b))
        print(f"backends bit-identical on this workload: {same}")
    return rows


def bench_end_to_end(n, repeat):
    params = EnvParams(lam=1.0, mu=1.0)

    def run():
        sample_blockage(params, ModelKind.MM, n=n, seed=3)

    best, med = time_call(run, repeat=repeat)
    return [(f"sample_blockage[{KERNEL_BACKEND}]", best, med)]


def gather_end_to_end(n, repeat):
    rows = bench_end_to_end(n, repeat)
    if not os.environ.get("SKYVIS_PURE") and len(available_backends()) == 2:
        code = ("import json, sys\n"
                f"sys.path.insert(0, {HERE!r})\n"
                "from bench_kernels import bench_end_to_end\n"
                f"print(json.dumps(bench_end_to_end({n}, {repeat})))\n")
        out = subprocess.run([sys.executable, "-c", code],
                             env=dict(os.environ, SKYVIS_PURE="1"),
                             capture_output=True, text=True, check=True)
        rows += [tuple(r) for r in
                 json.loads(out.stdout.strip().splitlines()[-1])]
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000,
                    help="realizations per run (default 200000)")
    ap.add_argument("--repeat", type=int, default=5,
                    help="timed repetitions per workload (default 5)")
    args = ap.parse_args()

    print(f"kernel workload: {args.n} segments, ~30 buildings each")
    kernel_rows = bench_kernel(args.n, args.repeat)
    print(f"{'backend':<12} {'best [s]':>10} {'median [s]':>11}")
    for name, best, med in kernel_rows:
        print(f"{name:<12} {best:>10.4f} {med:>11.4f}")
    if len(kernel_rows) == 2:
        by = {name: best for name, best, _ in kernel_rows}
        fast, slow = sorted(by, key=by.get)
        print(f"speedup {slow} -> {fast}: {by[slow] / by[fast]:.2f}x")

    print(f"\nend-to-end workload: sample_blockage n={args.n}")
    rows = gather_end_to_end(args.n, args.repeat)
    print(f"{'pipeline':<28} {'best [s]':>10} {'median [s]':>11}")
    for name, best, med in rows:
        print(f"{name:<28} {best:>10.4f} {med:>11.4f}")


if __name__ == "__main__":
    main()
