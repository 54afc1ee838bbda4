"""Graph kernels run on original or relabeled graphs.

Every kernel can record an :class:`AccessTrace`: the sequence of per-vertex
property-array elements it reads or writes, in execution order. Property
arrays of one kernel (levels, ranks, component ids, path counts) are all
indexed by vertex id, so the trace is a list of vertex ids in the current
labeling.

BFS and SSSP push along out-edges, PageRank pulls along in-edges, and the
two connected-components kernels treat every arc as undirected.
"""

from __future__ import annotations

import enum
import io
import os
import struct
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._accel import helper, kernel
from .errors import NegativeCycleError, ParseError, VertexRangeError
from .generators import DEFAULT_SEED
from .graph import CsrGraph

UNREACHED = -1
TRACE_MAGIC = b"TRAC"
_TRACE_INIT = 1024


class Kernel(str, enum.Enum):
    BFS = "bfs"
    PR = "pr"
    BC = "bc"
    SSSP = "sssp"
    CC = "cc"
    CC_SV = "cc_sv"


@dataclass
class KernelResult:
    kernel: Kernel
    values: np.ndarray
    iterations: int = 1
    wall_time: float = 0.0
    converged: bool = True


@dataclass
class AccessTrace:
    accesses: np.ndarray

    def __len__(self) -> int:
        return int(self.accesses.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, AccessTrace) and np.array_equal(self.accesses, other.accesses)

    def to_bytes(self) -> bytes:
        return TRACE_MAGIC + struct.pack("<Q", self.accesses.size) + self.accesses.astype("<u8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "AccessTrace":
        if data[:4] != TRACE_MAGIC:
            raise ParseError(f"bad magic {data[:4]!r}; expected {TRACE_MAGIC!r}")
        if len(data) < 12:
            raise ParseError("truncated trace header")
        (length,) = struct.unpack("<Q", data[4:12])
        body = data[12:]
        if len(body) != 8 * length:
            raise ParseError(f"trace header declares {length} entries, found {len(body) // 8}")
        return cls(np.frombuffer(body, dtype="<u8").astype(np.int64))

    def frequencies(self, num_vertices: int) -> np.ndarray:
        return np.bincount(self.accesses, minlength=num_vertices)


def write_trace(trace: AccessTrace, path) -> None:
    with open(path, "wb") as fh:
        fh.write(trace.to_bytes())


def read_trace(path) -> AccessTrace:
    with open(path, "rb") as fh:
        return AccessTrace.from_bytes(fh.read())


def write_result_csv(result: KernelResult, stream) -> None:
    out = io.StringIO()
    out.write("vertex,value\n")
    for v, x in enumerate(result.values.tolist()):
        out.write(f"{v},{x!r}\n")
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, "w") as fh:
            fh.write(out.getvalue())
    else:
        stream.write(out.getvalue())


@helper
def _record(trace, pos, v):
    if pos >= trace.shape[0]:
        grown = np.empty(2 * trace.shape[0] + 16, dtype=np.int64)
        grown[:pos] = trace[:pos]
        trace = grown
    trace[pos] = v
    return trace, pos + 1


# ---------------------------------------------------------------------------
# BFS
# ---------------------------------------------------------------------------


@kernel
def _bfs(offsets, neighbors, source, tracing, trace):
    n = offsets.shape[0] - 1
    pos = 0
    level = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    level[source] = 0
    if tracing:
        trace, pos = _record(trace, pos, source)
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        next_level = level[u] + 1
        if tracing:
            trace, pos = _record(trace, pos, u)
        for e in range(offsets[u], offsets[u + 1]):
            v = neighbors[e]
            if tracing:
                trace, pos = _record(trace, pos, v)
            if level[v] < 0:
                level[v] = next_level
                if tracing:
                    trace, pos = _record(trace, pos, v)
                queue[tail] = v
                tail += 1
    return level, trace[:pos]


# ---------------------------------------------------------------------------
# PageRank
# ---------------------------------------------------------------------------


@kernel
def _pagerank(in_off, in_nbr, out_deg, damping, max_iters, tol, tracing, trace):
    n = in_off.shape[0] - 1
    pos = 0
    rank = np.full(n, 1.0 / n)
    nxt = np.empty(n)
    contrib = np.empty(n)
    converged = False
    iters = 0
    for it in range(max_iters):
        iters = it + 1
        dangling = 0.0
        for u in range(n):
            if out_deg[u] == 0:
                dangling += rank[u]
                contrib[u] = 0.0
            else:
                contrib[u] = rank[u] / out_deg[u]
        base = (1.0 - damping) / n + damping * dangling / n
        delta = 0.0
        for v in range(n):
            s = 0.0
            for e in range(in_off[v], in_off[v + 1]):
                u = in_nbr[e]
                s += contrib[u]
                if tracing:
                    trace, pos = _record(trace, pos, u)
            nxt[v] = base + damping * s
            if tracing:
                trace, pos = _record(trace, pos, v)
            delta += abs(nxt[v] - rank[v])
        rank, nxt = nxt, rank
        if delta < tol:
            converged = True
            break
    return rank, iters, converged, trace[:pos]


# ---------------------------------------------------------------------------
# Bellman-Ford
# ---------------------------------------------------------------------------


@kernel
def _bellman_ford(offsets, neighbors, weights, source, tracing, trace):
    n = offsets.shape[0] - 1
    pos = 0
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    if tracing:
        trace, pos = _record(trace, pos, source)
    changed = True
    rounds = 0
    while changed and rounds < n:
        changed = False
        rounds += 1
        for u in range(n):
            if tracing:
                trace, pos = _record(trace, pos, u)
            du = dist[u]
            if du == np.inf:
                continue
            for e in range(offsets[u], offsets[u + 1]):
                v = neighbors[e]
                cand = du + weights[e]
                if tracing:
                    trace, pos = _record(trace, pos, v)
                if cand < dist[v]:
                    dist[v] = cand
                    changed = True
                    if tracing:
                        trace, pos = _record(trace, pos, v)
    # still relaxing after n full passes means a reachable negative cycle
    return dist, rounds, changed, trace[:pos]


# ---------------------------------------------------------------------------
# Connected components
# ---------------------------------------------------------------------------


@helper
def _find(parent, x, tracing, trace, pos):
    while True:
        if tracing:
            trace, pos = _record(trace, pos, x)
        p = parent[x]
        if p == x:
            return x, trace, pos
        gp = parent[p]
        if tracing:
            trace, pos = _record(trace, pos, p)
        if gp != p:
            parent[x] = gp
            if tracing:
                trace, pos = _record(trace, pos, x)
        x = gp


@kernel
def _cc_union_find(offsets, neighbors, tracing, trace):
    n = offsets.shape[0] - 1
    pos = 0
    parent = np.arange(n, dtype=np.int64)
    for u in range(n):
        for e in range(offsets[u], offsets[u + 1]):
            v = neighbors[e]
            ru, trace, pos = _find(parent, u, tracing, trace, pos)
            rv, trace, pos = _find(parent, v, tracing, trace, pos)
            if ru != rv:
                # the smaller id stays root, so roots are component minima
                if ru < rv:
                    parent[rv] = ru
                    if tracing:
                        trace, pos = _record(trace, pos, rv)
                else:
                    parent[ru] = rv
                    if tracing:
                        trace, pos = _record(trace, pos, ru)
    label = np.empty(n, dtype=np.int64)
    for v in range(n):
        r, trace, pos = _find(parent, v, tracing, trace, pos)
        label[v] = r
    return label, trace[:pos]


@kernel
def _cc_shiloach_vishkin(offsets, neighbors, tracing, trace):
    n = offsets.shape[0] - 1
    pos = 0
    comp = np.arange(n, dtype=np.int64)
    change = True
    rounds = 0
    while change:
        change = False
        rounds += 1
        # hooking: point the larger root at the smaller component id
        for u in range(n):
            for e in range(offsets[u], offsets[u + 1]):
                v = neighbors[e]
                cu = comp[u]
                cv = comp[v]
                if tracing:
                    trace, pos = _record(trace, pos, u)
                    trace, pos = _record(trace, pos, v)
                if cu == cv:
                    continue
                high = max(cu, cv)
                low = min(cu, cv)
                if tracing:
                    trace, pos = _record(trace, pos, high)
                if comp[high] == high:
                    change = True
                    comp[high] = low
                    if tracing:
                        trace, pos = _record(trace, pos, high)
        # shortcutting: pointer jumping until every tree is a star
        for v in range(n):
            while True:
                c = comp[v]
                if tracing:
                    trace, pos = _record(trace, pos, v)
                    trace, pos = _record(trace, pos, c)
                cc = comp[c]
                if c == cc:
                    break
                comp[v] = cc
                if tracing:
                    trace, pos = _record(trace, pos, v)
    return comp, rounds, trace[:pos]


# ---------------------------------------------------------------------------
# Betweenness centrality
# ---------------------------------------------------------------------------


@kernel
def _brandes(offsets, neighbors, sources, tracing, trace):
    n = offsets.shape[0] - 1
    pos = 0
    bc = np.zeros(n)
    sigma = np.zeros(n)
    delta = np.zeros(n)
    depth = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    for i in range(sources.shape[0]):
        s = sources[i]
        sigma[:] = 0.0
        delta[:] = 0.0
        depth[:] = -1
        sigma[s] = 1.0
        depth[s] = 0
        if tracing:
            trace, pos = _record(trace, pos, s)
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = order[head]
            head += 1
            if tracing:
                trace, pos = _record(trace, pos, u)
            for e in range(offsets[u], offsets[u + 1]):
                v = neighbors[e]
                if tracing:
                    trace, pos = _record(trace, pos, v)
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    order[tail] = v
                    tail += 1
                if depth[v] == depth[u] + 1:
                    sigma[v] += sigma[u]
                    if tracing:
                        trace, pos = _record(trace, pos, v)
        for k in range(tail - 1, -1, -1):
            w = order[k]
            if tracing:
                trace, pos = _record(trace, pos, w)
            acc = 0.0
            for e in range(offsets[w], offsets[w + 1]):
                v = neighbors[e]
                if depth[v] == depth[w] + 1:
                    if tracing:
                        trace, pos = _record(trace, pos, v)
                    acc += (sigma[w] / sigma[v]) * (1.0 + delta[v])
            delta[w] = acc
            if w != s:
                bc[w] += acc
                if tracing:
                    trace, pos = _record(trace, pos, w)
    return bc, trace[:pos]


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def _trace_buffer(tracing: bool) -> np.ndarray:
    return np.empty(_TRACE_INIT if tracing else 1, dtype=np.int64)


def _check_source(g: CsrGraph, source: int) -> int:
    if not 0 <= source < g.num_vertices:
        raise VertexRangeError(f"source {source} outside [0, {g.num_vertices})")
    return int(source)


def _bfs_run(g, tracing, source=0):
    source = _check_source(g, source)
    level, trace = _bfs(g.out_offsets, g.out_neighbors, source, tracing, _trace_buffer(tracing))
    return KernelResult(Kernel.BFS, level), trace


def _pagerank_run(g, tracing, damping=0.85, max_iters=100, tol=1e-10):
    if g.num_vertices == 0:
        raise ValueError("PageRank needs at least one vertex")
    g = g.with_in_edges()
    rank, iters, converged, trace = _pagerank(
        g.in_offsets, g.in_neighbors, g.out_degree().astype(np.float64), float(damping),
        int(max_iters), float(tol), tracing, _trace_buffer(tracing))
    return KernelResult(Kernel.PR, rank, iters, converged=converged), trace


def _sssp_run(g, tracing, source=0, weights=None):
    source = _check_source(g, source)
    if weights is None:
        weights = g.weights if g.weights is not None else np.ones(g.num_edges)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if weights.shape != (g.num_edges,):
        raise ValueError("weights must align with out_neighbors")
    dist, rounds, cycle, trace = _bellman_ford(g.out_offsets, g.out_neighbors, weights, source,
                                               tracing, _trace_buffer(tracing))
    if cycle:
        raise NegativeCycleError(f"negative cycle reachable from source {source}")
    return KernelResult(Kernel.SSSP, dist, rounds), trace


def _cc_run(g, tracing):
    label, trace = _cc_union_find(g.out_offsets, g.out_neighbors, tracing, _trace_buffer(tracing))
    return KernelResult(Kernel.CC, label), trace


def _cc_sv_run(g, tracing):
    comp, rounds, trace = _cc_shiloach_vishkin(g.out_offsets, g.out_neighbors, tracing,
                                               _trace_buffer(tracing))
    return KernelResult(Kernel.CC_SV, comp, rounds), trace


def bc_sources(num_vertices: int, sample_sources: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Sources for sampled BC: every vertex when the sample covers the graph."""
    if sample_sources < 1:
        raise ValueError("sample_sources must be >= 1")
    if sample_sources >= num_vertices:
        return np.arange(num_vertices, dtype=np.int64)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(num_vertices, size=sample_sources, replace=False)).astype(np.int64)


def _bc_run(g, tracing, sample_sources=4, seed=DEFAULT_SEED, sources: Optional[Sequence[int]] = None):
    if sources is None:
        sources = bc_sources(g.num_vertices, sample_sources, seed)
    sources = np.asarray(sources, dtype=np.int64)
    for s in sources.tolist():
        _check_source(g, s)
    bc, trace = _brandes(g.out_offsets, g.out_neighbors, sources, tracing, _trace_buffer(tracing))
    return KernelResult(Kernel.BC, bc, int(sources.size)), trace


_RUNNERS = {
    Kernel.BFS: _bfs_run,
    Kernel.PR: _pagerank_run,
    Kernel.SSSP: _sssp_run,
    Kernel.CC: _cc_run,
    Kernel.CC_SV: _cc_sv_run,
    Kernel.BC: _bc_run,
}

KERNEL_NAMES = [k.value for k in Kernel]


def _run(kernel_name, g, tracing, params):
    runner = _RUNNERS[Kernel(kernel_name)]
    t0 = time.perf_counter()
    result, trace = runner(g, tracing, **params)
    result.wall_time = time.perf_counter() - t0
    return result, trace


def run_kernel(kernel_name, g: CsrGraph, **params) -> KernelResult:
    return _run(kernel_name, g, False, params)[0]


def run_traced(kernel_name, g: CsrGraph, **params) -> tuple[KernelResult, AccessTrace]:
    """Run a kernel and return its result with the property-array access trace."""
    result, trace = _run(kernel_name, g, True, params)
    return result, AccessTrace(np.ascontiguousarray(trace))


def bfs(g: CsrGraph, source: int = 0) -> KernelResult:
    """Hop levels from ``source`` over out-edges; unreached vertices get -1."""
    return run_kernel(Kernel.BFS, g, source=source)


def pagerank(g: CsrGraph, damping: float = 0.85, max_iters: int = 100, tol: float = 1e-10) -> KernelResult:
    """Pull-based PageRank; dangling mass is spread uniformly.

    Stops once the L1 change between iterations drops below ``tol``;
    ``converged`` is False if ``max_iters`` ran out first.
    """
    return run_kernel(Kernel.PR, g, damping=damping, max_iters=max_iters, tol=tol)


def sssp_bellman_ford(g: CsrGraph, source: int = 0, weights=None) -> KernelResult:
    """Shortest distances (inf when unreachable); unit weights unless given."""
    return run_kernel(Kernel.SSSP, g, source=source, weights=weights)


def cc_label(g: CsrGraph) -> KernelResult:
    return run_kernel(Kernel.CC, g)


def cc_sv(g: CsrGraph) -> KernelResult:
    return run_kernel(Kernel.CC_SV, g)


def betweenness_centrality(g: CsrGraph, sample_sources: int = 4, seed: int = DEFAULT_SEED,
                           sources=None) -> KernelResult:
    """Brandes accumulation over sampled sources; exact when every vertex is a source."""
    return run_kernel(Kernel.BC, g, sample_sources=sample_sources, seed=seed, sources=sources)


def map_params(kernel_name, params: dict, new_id: np.ndarray, num_vertices: int) -> dict:
    """Translate vertex-valued kernel parameters into a relabeled graph's ids."""
    params = dict(params)
    if "source" in params:
        params["source"] = int(new_id[params["source"]])
    k = Kernel(kernel_name)
    if k is Kernel.BC:
        if params.get("sources") is None:
            params["sources"] = bc_sources(num_vertices, params.pop("sample_sources", 4),
                                           params.pop("seed", DEFAULT_SEED))
        params["sources"] = new_id[np.asarray(params["sources"], dtype=np.int64)]
        params.pop("sample_sources", None)
        params.pop("seed", None)
    if k is Kernel.SSSP and params.get("weights") is not None:
        raise ValueError("pass weights on the graph, not as a parameter, when relabeling")
    return params
