"""Command-line front end.

    graphreorder generate --scale 14 --edge-factor 16 --out g.csr
    graphreorder convert  --graph g.txt --out g.csr --in-edges
    graphreorder stats    --graph g.csr --json
    graphreorder reorder  --graph g.csr --scheme lorder --out g.perm
    graphreorder run      --graph g.csr --kernel pr --perm g.perm --trace pr.trac
    graphreorder bench    --graph g.csr --schemes identity,dbg,lorder --kernels bfs,pr,cc
    graphreorder cachesim --graph g.csr --kernel pr --schemes identity,random,lorder --json

Graph files are read as binary CSR when they start with the ``CSRG`` magic
and as text edge lists otherwise. Outputs are written atomically: a failed
command leaves no partial file behind.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import SCHEMES, reorder
from .cachesim import CacheConfig, compare_orderings, simulate_lru
from .errors import GraphError
from .generators import DEFAULT_SEED, clustered_rmat, rmat
from .graph import (
    CSR_MAGIC,
    CsrGraph,
    DegreeBasis,
    Permutation,
    apply_permutation,
    approximate_diameter,
    average_degree,
    build_csr,
    classify_hotness,
    load_edge_list,
    read_csr,
    read_permutation,
    write_csr,
    write_edge_list,
    write_permutation,
)
from .kernels import KERNEL_NAMES, map_params, read_trace, run_kernel, run_traced, write_result_csv
from .lorder import LorderConfig, kappa_from_diameter

log = logging.getLogger("graphreorder")

DEFAULT_TRIALS = 16
BENCH_COLUMNS = ["scheme", "kernel", "mean_time", "speedup", "reorder_time", "trials"]
CACHESIM_COLUMNS = ["scheme", "kernel", "accesses", "hits", "misses", "miss_ratio"]


class UsageError(GraphError):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


@contextlib.contextmanager
def atomic_output(path, mode="wb"):
    """Yield a temp file that replaces ``path`` only if the block succeeds."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def load_graph(path, build_in_edges: bool = False, symmetrize: bool = False,
               dedup: bool = False) -> CsrGraph:
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == CSR_MAGIC:
        g = read_csr(path)
        if not (symmetrize or dedup):
            return g.with_in_edges() if build_in_edges else g
        edges = g.to_edge_list()
        directed = g.directed
    else:
        edges = load_edge_list(path)
        directed = True
    if dedup:
        edges = edges.deduplicated()
    if symmetrize:
        edges = edges.symmetrized()
        if dedup:
            edges = edges.deduplicated()
        directed = False
    return build_csr(edges, build_in_edges=build_in_edges, directed=directed)


def geometric_mean(values: Sequence[float]) -> float:
    values = [v for v in values if v > 0 and math.isfinite(v)]
    if not values:
        return float("nan")
    return math.exp(sum(math.log(v) for v in values) / len(values))


def _split(text: Optional[str]) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()] if text else []


def scheme_params(scheme: str, kappa=None, threshold=None, omega=None, seed=None) -> dict:
    """Keep only the flags a scheme understands."""
    params: dict = {}
    if scheme in ("lorder", "sorder") and kappa is not None:
        params["kappa"] = kappa
    if scheme in ("lorder", "sorder", "dbg") and threshold is not None:
        params["threshold"] = threshold
    if scheme == "gorder" and omega is not None:
        params["window"] = omega
    if scheme == "random" and seed is not None:
        params["seed"] = seed
    return params


def kernel_params(kernel: str, source=None, seed=None, samples=None, max_iters=None) -> dict:
    params: dict = {}
    if kernel in ("bfs", "sssp") and source is not None:
        params["source"] = source
    if kernel == "bc":
        if seed is not None:
            params["seed"] = seed
        if samples is not None:
            params["sample_sources"] = samples
    if kernel == "pr" and max_iters is not None:
        params["max_iters"] = max_iters
    return params


@dataclass
class RunManifest:
    """One bench or cachesim job."""

    graph: str
    schemes: list[str] = field(default_factory=lambda: ["identity"])
    kernels: list[str] = field(default_factory=lambda: ["bfs"])
    scheme_params: dict = field(default_factory=dict)
    kernel_params: dict = field(default_factory=dict)
    trials: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED
    out: Optional[str] = None

    def __post_init__(self):
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise UsageError(f"unknown scheme(s) {unknown}; choose from {sorted(SCHEMES)}")
        unknown = [k for k in self.kernels if k not in KERNEL_NAMES]
        if unknown:
            raise UsageError(f"unknown kernel(s) {unknown}; choose from {KERNEL_NAMES}")

    @classmethod
    def from_json(cls, path) -> "RunManifest":
        with open(path) as fh:
            data = json.load(fh)
        try:
            return cls(**data)
        except TypeError as exc:
            raise UsageError(f"bad manifest: {exc}") from None

    def params_for_scheme(self, scheme: str) -> dict:
        params = dict(self.scheme_params.get(scheme, {}))
        if scheme == "random":
            params.setdefault("seed", self.seed)
        return params

    def params_for_kernel(self, kernel: str) -> dict:
        params = dict(self.kernel_params.get(kernel, {}))
        if kernel == "bc":
            params.setdefault("seed", self.seed)
        return params


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_convert(src, dst, to: str = "csr", in_edges: bool = False, symmetrize: bool = False,
                dedup: bool = False) -> CsrGraph:
    g = load_graph(src, build_in_edges=in_edges, symmetrize=symmetrize, dedup=dedup)
    with atomic_output(dst) as fh:
        if to == "csr":
            write_csr(g, fh)
        elif to == "text":
            write_edge_list(g, fh)
        else:
            raise UsageError(f"unknown output format {to!r}")
    return g


def cmd_stats(g: CsrGraph, basis: str = "out", sweeps: int = 4) -> dict:
    if g.num_vertices == 0:
        raise UsageError("graph has no vertices")
    degree = g.degree(basis)
    hot = classify_hotness(g, None, basis)
    diameter = approximate_diameter(g, sweeps)
    return {
        "num_vertices": g.num_vertices,
        "num_edges": g.num_edges,
        "directed": g.directed,
        "degree_basis": DegreeBasis(basis).value,
        "average_degree": average_degree(g, basis),
        "max_degree": int(degree.max()),
        "min_degree": int(degree.min()),
        "hot_vertices": hot.num_hot,
        "hot_fraction": hot.hot_fraction,
        "approx_diameter": diameter,
        "suggested_kappa": kappa_from_diameter(diameter),
    }


def cmd_reorder(g: CsrGraph, scheme: str, params: Optional[dict] = None) -> tuple[Permutation, dict]:
    if scheme not in SCHEMES:
        raise UsageError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    params = dict(params or {})
    info: dict = {"scheme": scheme, "params": dict(params)}
    if scheme == "lorder" and params.get("kappa") is None:
        kappa = LorderConfig(diameter=params.get("diameter")).resolve_kappa(g)
        params["kappa"] = kappa
        info["resolved_kappa"] = kappa
        log.info("lorder: kappa resolved from diameter estimate: %d", kappa)
    t0 = time.perf_counter()
    try:
        perm = reorder(g, scheme, **params)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {scheme}: {exc}") from None
    info["reorder_time"] = time.perf_counter() - t0
    return perm, info


def cmd_bench(g: CsrGraph, manifest: RunManifest) -> list[dict]:
    """Time every (scheme, kernel) cell; speedups are relative to identity.

    Data rows come first, then one ``geomean`` row per scheme.
    """
    schemes = list(manifest.schemes)
    baseline_only = "identity" not in schemes
    if baseline_only:
        schemes.insert(0, "identity")
    means: dict[tuple[str, str], float] = {}
    rows: list[dict] = []
    for scheme in schemes:
        perm, info = cmd_reorder(g, scheme, manifest.params_for_scheme(scheme))
        relabeled = apply_permutation(g, perm)
        if any(k == "pr" for k in manifest.kernels):
            relabeled = relabeled.with_in_edges()
        for kernel in manifest.kernels:
            params = map_params(kernel, manifest.params_for_kernel(kernel), perm.new_id, g.num_vertices)
            run_kernel(kernel, relabeled, **params)  # compile outside the timed loop
            times = []
            for _ in range(manifest.trials):
                times.append(run_kernel(kernel, relabeled, **params).wall_time)
            means[scheme, kernel] = float(np.mean(times))
            rows.append({"scheme": scheme, "kernel": kernel, "mean_time": means[scheme, kernel],
                         "reorder_time": info["reorder_time"], "trials": manifest.trials})
    for row in rows:
        row["speedup"] = means["identity", row["kernel"]] / row["mean_time"] if row["mean_time"] > 0 else float("nan")
    if baseline_only:
        rows = [r for r in rows if r["scheme"] != "identity"]
        schemes.remove("identity")
    for scheme in schemes:
        speedups = [r["speedup"] for r in rows if r["scheme"] == scheme]
        rows.append({"scheme": scheme, "kernel": "geomean", "mean_time": float("nan"),
                     "speedup": geometric_mean(speedups), "reorder_time": float("nan"),
                     "trials": manifest.trials})
    return rows


def cmd_cachesim(g: CsrGraph, manifest: RunManifest, cfg: CacheConfig) -> list[dict]:
    rows = []
    perms = {}
    for scheme in manifest.schemes:
        perms[scheme], _ = cmd_reorder(g, scheme, manifest.params_for_scheme(scheme))
    for kernel in manifest.kernels:
        reports = compare_orderings(g, kernel, manifest.params_for_kernel(kernel), perms, cfg)
        for scheme, report in reports.items():
            rows.append({"scheme": scheme, "kernel": kernel, **report.to_dict()})
    return rows


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with atomic_output(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_graph(p, required=True):
    p.add_argument("--graph", required=required, help="edge-list text or binary CSR file")
    p.add_argument("--symmetrize", action="store_true", help="add reverse arcs (undirected view)")
    p.add_argument("--dedup", action="store_true", help="drop repeated edges")


def _add_scheme_flags(p):
    p.add_argument("--kappa", type=int, help="hop radius (lorder, sorder)")
    p.add_argument("--lambda", dest="threshold", type=float, help="hotness threshold (lorder, sorder, dbg)")
    p.add_argument("--omega", type=int, help="gorder window")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)


def _add_cache_flags(p):
    p.add_argument("--cache-kb", type=int, default=32)
    p.add_argument("--line-bytes", type=int, default=64)
    p.add_argument("--assoc", type=int, default=8)
    p.add_argument("--element-bytes", type=int, default=8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphreorder", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic RMAT graph")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--edge-factor", type=int, default=16)
    p.add_argument("--abc", default="0.57,0.19,0.19", help="RMAT quadrant probabilities a,b,c")
    p.add_argument("--block-scale", type=int, help="plant communities of 2**B vertices")
    p.add_argument("--intra", type=float, default=0.9, help="fraction of arcs inside communities")
    p.add_argument("--permute", action="store_true", help="scramble vertex labels")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--format", choices=["csr", "text"], default="csr")
    p.add_argument("--in-edges", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("convert", help="edge list <-> binary CSR")
    _add_graph(p)
    p.add_argument("--to", choices=["csr", "text"], default="csr")
    p.add_argument("--in-edges", action="store_true", help="store in-edge arrays")
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", help="size, degree and diameter statistics")
    _add_graph(p)
    p.add_argument("--basis", choices=[b.value for b in DegreeBasis], default="out")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("reorder", help="compute a permutation")
    _add_graph(p)
    p.add_argument("--scheme", required=True, choices=list(SCHEMES))
    _add_scheme_flags(p)
    p.add_argument("--localities", help="write the lorder locality table as CSV")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", required=True, help="permutation file")

    p = sub.add_parser("run", help="run one kernel, optionally on a relabeled graph")
    _add_graph(p)
    p.add_argument("--kernel", required=True, choices=KERNEL_NAMES)
    p.add_argument("--perm", help="permutation file to apply first")
    p.add_argument("--source", type=int)
    p.add_argument("--samples", type=int, help="bc source samples")
    p.add_argument("--max-iters", type=int, help="pagerank iteration cap")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--trace", help="write the access trace (TRAC format)")
    p.add_argument("--out", help="result CSV (vertex,value)")

    for name, helptext in (("bench", "time kernels across schemes"),
                           ("cachesim", "simulate cache misses across schemes")):
        p = sub.add_parser(name, help=helptext)
        _add_graph(p, required=False)
        p.add_argument("--manifest", help="JSON RunManifest; flags fill in what it omits")
        p.add_argument("--schemes", help="comma-separated scheme names")
        p.add_argument("--scheme", help="single scheme (same as --schemes)")
        p.add_argument("--kernels", help="comma-separated kernel names")
        p.add_argument("--kernel", help="single kernel (same as --kernels)")
        _add_scheme_flags(p)
        p.add_argument("--source", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--max-iters", type=int)
        p.add_argument("--json", action="store_true")
        p.add_argument("--out")
        if name == "bench":
            p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
        else:
            _add_cache_flags(p)
            p.add_argument("--trace", help="simulate an existing TRAC file instead")
    return parser


def _manifest_from_args(args) -> RunManifest:
    if args.manifest:
        m = RunManifest.from_json(args.manifest)
        if args.graph:
            m.graph = args.graph
        if args.out:
            m.out = args.out
        return m
    if not args.graph:
        raise UsageError("--graph or --manifest is required")
    schemes = _split(args.schemes) or _split(args.scheme) or ["identity"]
    kernels = _split(args.kernels) or _split(args.kernel) or (["pr"] if args.command == "cachesim" else ["bfs"])
    sp = {s: scheme_params(s, args.kappa, args.threshold, args.omega, args.seed) for s in schemes}
    kp = {k: kernel_params(k, args.source, args.seed, args.samples, args.max_iters) for k in kernels}
    if args.command == "cachesim":
        for k in kernels:
            if k == "pr":
                kp[k].setdefault("max_iters", 1)
    return RunManifest(graph=args.graph, schemes=schemes, kernels=kernels, scheme_params=sp,
                       kernel_params=kp, trials=getattr(args, "trials", DEFAULT_TRIALS),
                       seed=args.seed, out=args.out)


def _dispatch(args) -> int:
    if args.command == "generate":
        a, b, c = (float(x) for x in args.abc.split(","))
        if args.block_scale is None:
            edges = rmat(args.scale, args.edge_factor, a, b, c, seed=args.seed, permute=args.permute)
        else:
            edges = clustered_rmat(args.scale, args.edge_factor, args.block_scale, args.intra,
                                   seed=args.seed, a=a, b=b, c=c, permute=args.permute)
        with atomic_output(args.out) as fh:
            if args.format == "csr":
                write_csr(build_csr(edges, build_in_edges=args.in_edges), fh)
            else:
                write_edge_list(edges, fh)
        return 0

    if args.command == "convert":
        cmd_convert(args.graph, args.out, args.to, args.in_edges, args.symmetrize, args.dedup)
        return 0

    if args.command in ("bench", "cachesim"):
        if args.command == "cachesim" and args.trace:
            cfg = CacheConfig(args.cache_kb * 1024, args.line_bytes, args.assoc, args.element_bytes)
            report = simulate_lru(read_trace(args.trace), cfg)
            rows = [{"scheme": "trace", "kernel": os.path.basename(args.trace), **report.to_dict()}]
        else:
            manifest = _manifest_from_args(args)
            g = load_graph(manifest.graph, symmetrize=args.symmetrize, dedup=args.dedup)
            if args.command == "bench":
                rows = cmd_bench(g, manifest)
            else:
                cfg = CacheConfig(args.cache_kb * 1024, args.line_bytes, args.assoc, args.element_bytes)
                rows = cmd_cachesim(g, manifest, cfg)
        columns = BENCH_COLUMNS if args.command == "bench" else CACHESIM_COLUMNS
        text = json.dumps(rows, indent=2) + "\n" if args.json else _rows_to_csv(rows, columns)
        _emit(text, args.out)
        return 0

    g = load_graph(args.graph, symmetrize=args.symmetrize, dedup=args.dedup)

    if args.command == "stats":
        stats = cmd_stats(g, args.basis)
        if args.json:
            text = json.dumps(stats, indent=2) + "\n"
        else:
            text = "".join(f"{k}: {v}\n" for k, v in stats.items())
        _emit(text, args.out)
        return 0

    if args.command == "reorder":
        params = scheme_params(args.scheme, args.kappa, args.threshold, args.omega, args.seed)
        perm, info = cmd_reorder(g, args.scheme, params)
        with atomic_output(args.out) as fh:
            write_permutation(perm, fh)
        if args.localities:
            if args.scheme != "lorder":
                raise UsageError("--localities only applies to --scheme lorder")
            from .lorder import lorder_detailed

            detail = lorder_detailed(g, LorderConfig.explicit(
                info.get("resolved_kappa", params.get("kappa")), threshold=params.get("threshold")))
            with atomic_output(args.localities, "w") as fh:
                fh.write(detail.table.to_csv())
        if args.json:
            sys.stdout.write(json.dumps(info, indent=2) + "\n")
        else:
            extra = f" kappa={info['resolved_kappa']}" if "resolved_kappa" in info else ""
            sys.stdout.write(f"scheme={args.scheme}{extra} reorder_time={info['reorder_time']:.6f}s\n")
        return 0

    if args.command == "run":
        params = kernel_params(args.kernel, args.source, args.seed, args.samples, args.max_iters)
        if args.perm:
            perm = read_permutation(args.perm)
            params = map_params(args.kernel, params, perm.new_id, g.num_vertices)
            g = apply_permutation(g, perm)
        if args.trace:
            result, trace = run_traced(args.kernel, g, **params)
            with atomic_output(args.trace) as fh:
                fh.write(trace.to_bytes())
        else:
            result = run_kernel(args.kernel, g, **params)
        if args.out:
            with atomic_output(args.out, "w") as fh:
                write_result_csv(result, fh)
        sys.stdout.write(f"kernel={args.kernel} iterations={result.iterations} "
                         f"wall_time={result.wall_time:.6f}s\n")
        return 0

    raise UsageError(f"unknown command {args.command!r}")  # pragma: no cover


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"graphreorder: error: {exc}", file=sys.stderr)
        return 2
    except (GraphError, OSError, ValueError) as exc:
        print(f"graphreorder: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
