"""Compare the numba and pure-numpy backends on the hot loops.

    python benchmarks/bench_backends.py --scale 12 --edge-factor 8
    python benchmarks/bench_backends.py --json > backends.json

Each routine runs once per backend to warm up (numba compiles on first call),
then ``--repeat`` timed runs; the median is reported. Both backends must
return identical results, which is checked before timing.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

import numpy as np

from graphreorder import (
    CacheConfig,
    LorderConfig,
    build_csr,
    gorder_greedy,
    lorder,
    norder,
    reuse_histogram,
    run_kernel,
    run_traced,
    simulate_lru,
    sorder,
    use_backend,
)
from graphreorder.generators import rmat


def _cases(g, small, trace):
    return {
        "lorder": lambda: lorder(g, LorderConfig.explicit(3)).new_id,
        "norder": lambda: norder(g).new_id,
        "sorder": lambda: sorder(g).new_id,
        "gorder": lambda: gorder_greedy(small).new_id,
        "bfs": lambda: run_kernel("bfs", g).values,
        "pr": lambda: run_kernel("pr", g, max_iters=5).values,
        "sssp": lambda: run_kernel("sssp", g).values,
        "cc": lambda: run_kernel("cc", g).values,
        "cc_sv": lambda: run_kernel("cc_sv", g).values,
        "bc": lambda: run_kernel("bc", g, sample_sources=2).values,
        "simulate_lru": lambda: np.array([simulate_lru(trace, CacheConfig()).misses]),
        "reuse_histogram": lambda: reuse_histogram(trace).distances,
    }


def _time(fn, repeat):
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--scale", type=int, default=12)
    ap.add_argument("--edge-factor", type=int, default=8)
    ap.add_argument("--gorder-scale", type=int, default=9, help="GOrder is quadratic; keep this small")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--only", help="comma-separated subset of routines")
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)

    g = build_csr(rmat(args.scale, args.edge_factor, seed=42), build_in_edges=True)
    small = build_csr(rmat(args.gorder_scale, args.edge_factor, seed=42), build_in_edges=True)
    _, trace = run_traced("pr", g, max_iters=1)
    cases = _cases(g, small, trace)
    if args.only:
        cases = {k: v for k, v in cases.items() if k in args.only.split(",")}

    rows = []
    for name, fn in cases.items():
        with use_backend("numba"):
            ref = fn()
            t_numba = _time(fn, args.repeat)
        with use_backend("numpy"):
            if not np.array_equal(fn(), ref):
                raise SystemExit(f"{name}: backends disagree")
            t_numpy = _time(fn, args.repeat)
        rows.append({"routine": name, "numba_s": t_numba, "numpy_s": t_numpy,
                     "speedup": t_numpy / t_numba if t_numba > 0 else float("nan")})
        if not args.json:
            print(f"{name:16s} numba {t_numba:9.4f}s  numpy {t_numpy:9.4f}s  x{rows[-1]['speedup']:8.1f}",
                  flush=True)

    if args.json:
        json.dump({"scale": args.scale, "edge_factor": args.edge_factor, "edges": g.num_edges,
                   "rows": rows}, sys.stdout, indent=2)
        sys.stdout.write("\n")


if __name__ == "__main__":
    main()
