"""Locality-based reordering (Lorder).

Two passes over the graph:

1. Locality formation. Vertices are taken as seeds in ascending id order;
   each unclaimed seed runs a BFS over out-neighbors bounded at ``kappa``
   hops that claims every unclaimed vertex it reaches. Claimed vertices are
   tagged with the seed id and the number of hot members is recorded.
2. Index assignment. Localities are visited hottest first (ties by seed
   id). Each locality's BFS is replayed, restricted to vertices carrying its
   tag, and its members get consecutive new ids: hot members first, then
   cold ones, each group in BFS visit order.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from ._accel import kernel
from .errors import ConsistencyError
from .graph import (
    VERTEX_DTYPE,
    CsrGraph,
    DegreeBasis,
    HotnessProfile,
    Permutation,
    approximate_diameter,
    classify_hotness,
)


class KappaPolicy(str, enum.Enum):
    EXPLICIT = "explicit"
    HALF_DIAMETER = "half_diameter"


def kappa_from_diameter(diameter: int) -> int:
    """Hop radius as half the diameter, rounded down and at least 1."""
    if diameter < 0:
        raise ValueError("diameter must be non-negative")
    return max(1, diameter // 2)


@dataclass(frozen=True)
class LorderConfig:
    kappa: Optional[int] = None
    threshold: Optional[float] = None
    kappa_policy: KappaPolicy = KappaPolicy.HALF_DIAMETER
    degree_basis: DegreeBasis = DegreeBasis.OUT
    diameter: Optional[int] = None
    diameter_sweeps: int = 4

    def __post_init__(self):
        object.__setattr__(self, "kappa_policy", KappaPolicy(self.kappa_policy))
        object.__setattr__(self, "degree_basis", DegreeBasis(self.degree_basis))
        if self.kappa_policy is KappaPolicy.EXPLICIT:
            if self.kappa is None or self.kappa < 1:
                raise ValueError("explicit kappa must be an integer >= 1")
        if self.threshold is not None and self.threshold < 0:
            raise ValueError("hotness threshold must be non-negative")

    @classmethod
    def explicit(cls, kappa: int, **kwargs) -> "LorderConfig":
        return cls(kappa=kappa, kappa_policy=KappaPolicy.EXPLICIT, **kwargs)

    def resolve_kappa(self, g: CsrGraph) -> int:
        if self.kappa_policy is KappaPolicy.EXPLICIT:
            return int(self.kappa)
        diameter = self.diameter
        if diameter is None:
            diameter = approximate_diameter(g, self.diameter_sweeps) if g.num_vertices else 0
        return kappa_from_diameter(diameter)


class LocalityRecord(NamedTuple):
    seed: int
    hotness: int
    size: int


@dataclass(frozen=True)
class LocalityTable:
    """Per-vertex locality tags plus one (seed, hotness, size) row per locality.

    Rows appear in formation order, i.e. ascending seed id.
    """

    tag: np.ndarray
    seeds: np.ndarray
    hotness: np.ndarray
    sizes: np.ndarray

    @property
    def records(self) -> list[LocalityRecord]:
        return [LocalityRecord(*row) for row in zip(self.seeds.tolist(), self.hotness.tolist(),
                                                    self.sizes.tolist())]

    def __len__(self) -> int:
        return int(self.seeds.size)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("seed,hotness,size\n")
        for rec in self.records:
            out.write(f"{rec.seed},{rec.hotness},{rec.size}\n")
        return out.getvalue()


@kernel
def _form_localities(offsets, neighbors, hot, kappa):
    n = offsets.shape[0] - 1
    tag = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    seeds = np.empty(n, dtype=np.int64)
    hotness = np.zeros(n, dtype=np.int64)
    sizes = np.zeros(n, dtype=np.int64)
    dequeues = np.zeros(n, dtype=np.int64)
    count = 0
    for s in range(n):
        if tag[s] >= 0:
            continue
        tag[s] = s
        depth[s] = 0
        queue[0] = s
        head = 0
        tail = 1
        h = 1 if hot[s] else 0
        while head < tail:
            u = queue[head]
            head += 1
            dequeues[u] += 1
            if depth[u] >= kappa:
                continue
            for e in range(offsets[u], offsets[u + 1]):
                v = neighbors[e]
                if tag[v] < 0:
                    tag[v] = s
                    depth[v] = depth[u] + 1
                    queue[tail] = v
                    tail += 1
                    if hot[v]:
                        h += 1
        seeds[count] = s
        hotness[count] = h
        sizes[count] = tail
        count += 1
    return tag, seeds[:count], hotness[:count], sizes[:count], dequeues


@kernel
def _assign_indices(offsets, neighbors, hot, tag, order, kappa):
    n = offsets.shape[0] - 1
    new_id = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=np.bool_)
    depth = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    cold = np.empty(n, dtype=np.int64)
    dequeues = np.zeros(n, dtype=np.int64)
    counter = 0
    for i in range(order.shape[0]):
        s = order[i]
        if tag[s] != s or seen[s]:
            return new_id, dequeues, i
        seen[s] = True
        depth[s] = 0
        queue[0] = s
        head = 0
        tail = 1
        n_cold = 0
        while head < tail:
            u = queue[head]
            head += 1
            dequeues[u] += 1
            if hot[u]:
                new_id[u] = counter
                counter += 1
            else:
                cold[n_cold] = u
                n_cold += 1
            if depth[u] >= kappa:
                continue
            for e in range(offsets[u], offsets[u + 1]):
                v = neighbors[e]
                if not seen[v] and tag[v] == s:
                    seen[v] = True
                    depth[v] = depth[u] + 1
                    queue[tail] = v
                    tail += 1
        for j in range(n_cold):
            new_id[cold[j]] = counter
            counter += 1
    return new_id, dequeues, -1


def form_localities(g: CsrGraph, hot: HotnessProfile, kappa: int,
                    counters: Optional[dict] = None) -> LocalityTable:
    """Partition the vertices into kappa-bounded out-BFS localities.

    When ``counters`` is a dict, the per-vertex dequeue counts of this pass
    are stored under ``"phase1_dequeues"``.
    """
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    tag, seeds, hotness, sizes, dequeues = _form_localities(
        g.out_offsets, g.out_neighbors, np.asarray(hot.hot, dtype=np.bool_), int(kappa))
    if counters is not None:
        counters["phase1_dequeues"] = dequeues
    for a in (tag, seeds, hotness, sizes):
        a.flags.writeable = False
    return LocalityTable(tag, seeds, hotness, sizes)


def sort_localities(t: LocalityTable) -> np.ndarray:
    """Seeds by descending hotness, ties broken by ascending seed id."""
    idx = np.lexsort((t.seeds, -t.hotness))
    return t.seeds[idx].astype(VERTEX_DTYPE)


def assign_indices(g: CsrGraph, hot: HotnessProfile, t: LocalityTable, order, kappa: int,
                   counters: Optional[dict] = None) -> Permutation:
    order = np.asarray(order, dtype=VERTEX_DTYPE)
    if order.size != len(t) or not np.array_equal(np.sort(order), np.sort(t.seeds)):
        raise ConsistencyError("locality order must list exactly the table's seeds")
    new_id, dequeues, bad = _assign_indices(
        g.out_offsets, g.out_neighbors, np.asarray(hot.hot, dtype=np.bool_),
        t.tag, order, int(kappa))
    if bad >= 0:
        raise ConsistencyError(f"seed {int(order[bad])} does not carry its own tag")
    missing = np.flatnonzero(new_id < 0)
    if missing.size:
        raise ConsistencyError(
            f"{missing.size} vertices were not reached from their locality seed "
            f"(first: {int(missing[0])}); tags do not match a kappa={kappa} formation pass")
    if counters is not None:
        counters["phase2_dequeues"] = dequeues
    return Permutation(new_id, validate=False)


@dataclass
class LorderResult:
    permutation: Permutation
    table: LocalityTable
    order: np.ndarray
    kappa: int
    hotness: HotnessProfile
    counters: dict = field(default_factory=dict)


def lorder_detailed(g: CsrGraph, cfg: Optional[LorderConfig] = None) -> LorderResult:
    cfg = cfg or LorderConfig()
    kappa = cfg.resolve_kappa(g)
    hot = classify_hotness(g, cfg.threshold, cfg.degree_basis)
    counters: dict = {}
    table = form_localities(g, hot, kappa, counters)
    order = sort_localities(table)
    perm = assign_indices(g, hot, table, order, kappa, counters)
    return LorderResult(perm, table, order, kappa, hot, counters)


def lorder(g: CsrGraph, cfg: Union[LorderConfig, None] = None) -> Permutation:
    """Compute the Lorder relabeling of ``g``."""
    return lorder_detailed(g, cfg).permutation
