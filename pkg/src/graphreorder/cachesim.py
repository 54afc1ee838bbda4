"""Trace-driven cache model for property-array accesses.

Element ``i`` of the property array lives at byte ``i * element_bytes``;
byte addresses map to cache lines and lines to sets the usual way
(``set = line mod num_sets``). Replacement is LRU inside each set.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional

import numpy as np

from ._accel import kernel
from .graph import CsrGraph, Permutation, apply_permutation
from .kernels import AccessTrace, map_params, run_traced

COLD = -1


def _is_pow2(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


@dataclass(frozen=True)
class CacheConfig:
    capacity_bytes: int = 32 * 1024
    line_bytes: int = 64
    associativity: int = 8
    element_bytes: int = 8

    def __post_init__(self):
        for name in ("capacity_bytes", "line_bytes", "associativity", "element_bytes"):
            if not _is_pow2(getattr(self, name)):
                raise ValueError(f"{name} must be a positive power of two")
        if self.capacity_bytes < self.line_bytes * self.associativity:
            raise ValueError("capacity must hold at least one full set")

    @classmethod
    def fully_associative(cls, capacity_bytes: int, line_bytes: int = 64,
                          element_bytes: int = 8) -> "CacheConfig":
        return cls(capacity_bytes, line_bytes, capacity_bytes // line_bytes, element_bytes)

    @property
    def num_lines(self) -> int:
        return self.capacity_bytes // self.line_bytes

    @property
    def num_sets(self) -> int:
        return self.num_lines // self.associativity


@dataclass
class ReuseHistogram:
    """Exact LRU stack distances of a trace.

    ``distances[i]`` is the number of distinct other keys touched since the
    previous access to the same key, or ``COLD`` for a first touch.
    ``buckets[0]`` counts distance 0 and ``buckets[k]`` distances in
    ``[2**(k-1), 2**k)``.
    """

    distances: np.ndarray
    buckets: np.ndarray
    cold: int

    def misses(self, capacity_lines: int) -> int:
        """Miss count of a fully associative LRU cache holding ``capacity_lines`` keys."""
        d = self.distances
        return int(np.count_nonzero((d == COLD) | (d >= capacity_lines)))


@dataclass
class CacheSimReport:
    accesses: int
    hits: int
    misses: int
    miss_ratio: float
    histogram: Optional[ReuseHistogram] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("histogram")
        return d


@kernel
def _simulate_lru(accesses, element_bytes, line_bytes, num_sets, ways):
    tags = np.full((num_sets, ways), -1, dtype=np.int64)
    stamps = np.full((num_sets, ways), -1, dtype=np.int64)
    hits = 0
    for t in range(accesses.shape[0]):
        line = (accesses[t] * element_bytes) // line_bytes
        s = line % num_sets
        victim = 0
        oldest = stamps[s, 0]
        hit = False
        for w in range(ways):
            if tags[s, w] == line:
                stamps[s, w] = t
                hits += 1
                hit = True
                break
            if stamps[s, w] < oldest:
                oldest = stamps[s, w]
                victim = w
        if not hit:
            tags[s, victim] = line
            stamps[s, victim] = t
    return hits


@kernel
def _stack_distances(keys, num_keys):
    n = keys.shape[0]
    last = np.full(num_keys, -1, dtype=np.int64)
    tree = np.zeros(n + 1, dtype=np.int64)
    dist = np.empty(n, dtype=np.int64)
    for i in range(n):
        k = keys[i]
        p = last[k]
        if p < 0:
            dist[i] = -1
        else:
            # marks in (p, i): prefix(i) - prefix(p + 1), 1-based Fenwick indices
            total = 0
            j = i
            while j > 0:
                total += tree[j]
                j -= j & -j
            j = p + 1
            while j > 0:
                total -= tree[j]
                j -= j & -j
            dist[i] = total
            j = p + 1
            while j <= n:
                tree[j] -= 1
                j += j & -j
        j = i + 1
        while j <= n:
            tree[j] += 1
            j += j & -j
        last[k] = i
    return dist


def _as_array(trace) -> np.ndarray:
    if isinstance(trace, AccessTrace):
        return np.ascontiguousarray(trace.accesses, dtype=np.int64)
    return np.ascontiguousarray(trace, dtype=np.int64)


def simulate_lru(trace, cfg: Optional[CacheConfig] = None) -> CacheSimReport:
    """Set-associative LRU over the property-array trace."""
    cfg = cfg or CacheConfig()
    accesses = _as_array(trace)
    if accesses.size and accesses.min() < 0:
        raise ValueError("trace indices must be non-negative")
    hits = int(_simulate_lru(accesses, cfg.element_bytes, cfg.line_bytes, cfg.num_sets,
                             cfg.associativity))
    total = int(accesses.size)
    misses = total - hits
    return CacheSimReport(total, hits, misses, misses / total if total else 0.0)


def reuse_histogram(trace, line_granularity: bool = False, element_bytes: int = 8,
                    line_bytes: int = 64) -> ReuseHistogram:
    """Stack distances per access, optionally measured between cache lines."""
    keys = _as_array(trace)
    if line_granularity:
        keys = (keys * element_bytes) // line_bytes
    if keys.size == 0:
        return ReuseHistogram(np.empty(0, dtype=np.int64), np.zeros(1, dtype=np.int64), 0)
    _, compact = np.unique(keys, return_inverse=True)
    compact = compact.astype(np.int64).reshape(-1)
    dist = _stack_distances(compact, int(compact.max()) + 1)
    warm = dist[dist != COLD]
    bucket = np.zeros(warm.size, dtype=np.int64)
    nz = warm > 0
    # frexp exponent is the bit length, i.e. floor(log2 d) + 1, exactly
    bucket[nz] = np.frexp(warm[nz].astype(np.float64))[1]
    counts = np.bincount(bucket, minlength=1) if bucket.size else np.zeros(1, dtype=np.int64)
    return ReuseHistogram(dist, counts, int(np.count_nonzero(dist == COLD)))


def compare_orderings(g: CsrGraph, kernel_name: str, params: Optional[dict],
                      perms: Mapping[str, Permutation],
                      cfg: Optional[CacheConfig] = None) -> dict[str, CacheSimReport]:
    """Relabel ``g`` by each permutation, trace the kernel, and simulate the cache.

    Vertex-valued parameters (``source``, BC ``sources``) are given in the
    original labeling and translated for each relabeled graph.
    """
    cfg = cfg or CacheConfig()
    params = params or {}
    reports: dict[str, CacheSimReport] = {}
    for name, perm in perms.items():
        relabeled = apply_permutation(g, perm)
        local = map_params(kernel_name, params, perm.new_id, g.num_vertices)
        _, trace = run_traced(kernel_name, relabeled, **local)
        reports[name] = simulate_lru(trace, cfg)
    return reports
