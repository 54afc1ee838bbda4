"""Comparison reordering schemes: identity, random, Sort, DBG, NOrder, SOrder, GOrder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ._accel import helper, kernel
from .generators import DEFAULT_SEED
from .graph import (
    VERTEX_DTYPE,
    CsrGraph,
    DegreeBasis,
    HotnessProfile,
    Permutation,
    average_degree,
    build_csr,
    classify_hotness,
)

SORDER_DEFAULT_THRESHOLD = 50.0
SORDER_DEFAULT_KAPPA = 2


def identity_order(g: CsrGraph) -> Permutation:
    return Permutation.identity(g.num_vertices)


def random_order(g: CsrGraph, seed: int = DEFAULT_SEED) -> Permutation:
    rng = np.random.default_rng(seed)
    return Permutation(rng.permutation(g.num_vertices), validate=False)


def sort_order(g: CsrGraph, basis: Union[DegreeBasis, str] = DegreeBasis.OUT) -> Permutation:
    """New ids ascend as degree descends; equal degrees keep their old order."""
    degree = g.degree(basis)
    return Permutation.from_order(np.argsort(-degree, kind="stable"))


# ---------------------------------------------------------------------------
# DBG
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DbgParams:
    """Degree-based grouping. Cutoffs are ``threshold * 2**k``."""

    threshold: Optional[float] = None
    degree_basis: DegreeBasis = DegreeBasis.OUT


def dbg_groups(degree: np.ndarray, threshold: float) -> np.ndarray:
    """Group index per vertex: 0 for ``[0, t]``, k for ``(t*2**(k-1), t*2**k]``."""
    if threshold <= 0:
        raise ValueError("DBG threshold must be positive")
    group = np.zeros(degree.size, dtype=np.int64)
    cut = threshold
    above = degree > cut
    k = 1
    while above.any():
        group[above] = k
        cut *= 2
        above = degree > cut
        k += 1
    return group


def dbg_order(g: CsrGraph, params: Optional[DbgParams] = None) -> Permutation:
    """Bin vertices by degree range, hottest bin first, old order kept inside bins."""
    params = params or DbgParams()
    degree = g.degree(params.degree_basis)
    threshold = params.threshold
    if threshold is None:
        threshold = average_degree(g, params.degree_basis) if g.num_vertices else 1.0
        threshold = threshold if threshold > 0 else 1.0
    group = dbg_groups(degree, threshold)
    # stable sort on descending group keeps the original order inside a group
    return Permutation.from_order(np.argsort(-group, kind="stable"))


# ---------------------------------------------------------------------------
# NOrder
# ---------------------------------------------------------------------------


@kernel
def _bfs_from_seed_list(offsets, neighbors, seeds):
    n = offsets.shape[0] - 1
    visited = np.zeros(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    dequeues = np.zeros(n, dtype=np.int64)
    tail = 0
    head = 0
    for i in range(seeds.shape[0]):
        s = seeds[i]
        if visited[s]:
            continue
        visited[s] = True
        order[tail] = s
        tail += 1
        while head < tail:
            u = order[head]
            head += 1
            dequeues[u] += 1
            for e in range(offsets[u], offsets[u + 1]):
                v = neighbors[e]
                if not visited[v]:
                    visited[v] = True
                    order[tail] = v
                    tail += 1
    return order, dequeues


def norder(g: CsrGraph, hot: Optional[HotnessProfile] = None,
           basis: Union[DegreeBasis, str] = DegreeBasis.OUT,
           counters: Optional[dict] = None) -> Permutation:
    """Degree-sorted seed list, then out-BFS from each unvisited seed in that order.

    New ids follow global BFS visitation order. ``hot`` only supplies the
    degree basis when given.
    """
    if hot is not None:
        basis = hot.degree_basis
    seeds = np.argsort(-g.degree(basis), kind="stable").astype(VERTEX_DTYPE)
    order, dequeues = _bfs_from_seed_list(g.out_offsets, g.out_neighbors, seeds)
    if counters is not None:
        counters["dequeues"] = dequeues
    return Permutation.from_order(order)


# ---------------------------------------------------------------------------
# SOrder
# ---------------------------------------------------------------------------


@kernel
def _sorder(offsets, neighbors, hot, kappa):
    n = offsets.shape[0] - 1
    numbered = np.zeros(n, dtype=np.bool_)
    in_node = np.zeros(n, dtype=np.bool_)
    marked = np.zeros(n, dtype=np.bool_)
    depth = np.zeros(n, dtype=np.int64)
    node = np.empty(n, dtype=np.int64)
    hot_nb = np.empty(n, dtype=np.int64)
    cold_nb = np.empty(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    count = 0
    for s in range(n):
        if numbered[s]:
            continue
        # hypernode: unnumbered cold vertices within kappa hops, via cold vertices
        node[0] = s
        in_node[s] = True
        depth[s] = 0
        head = 0
        tail = 1
        if not hot[s]:
            while head < tail:
                u = node[head]
                head += 1
                if depth[u] >= kappa:
                    continue
                for e in range(offsets[u], offsets[u + 1]):
                    v = neighbors[e]
                    if not numbered[v] and not in_node[v] and not hot[v]:
                        in_node[v] = True
                        depth[v] = depth[u] + 1
                        node[tail] = v
                        tail += 1
        for i in range(tail):
            u = node[i]
            numbered[u] = True
            in_node[u] = False
            order[count] = u
            count += 1
        # unnumbered neighbors of the hypernode, split by hotness
        n_hot = 0
        n_cold = 0
        for i in range(tail):
            u = node[i]
            for e in range(offsets[u], offsets[u + 1]):
                v = neighbors[e]
                if not numbered[v] and not marked[v]:
                    marked[v] = True
                    if hot[v]:
                        hot_nb[n_hot] = v
                        n_hot += 1
                    else:
                        cold_nb[n_cold] = v
                        n_cold += 1
        hs = np.sort(hot_nb[:n_hot])
        cs = np.sort(cold_nb[:n_cold])
        for i in range(n_hot):
            v = hs[i]
            marked[v] = False
            numbered[v] = True
            order[count] = v
            count += 1
        for i in range(n_cold):
            v = cs[i]
            marked[v] = False
            numbered[v] = True
            order[count] = v
            count += 1
    return order


def sorder(g: CsrGraph, hot: Optional[HotnessProfile] = None, kappa: int = SORDER_DEFAULT_KAPPA,
           threshold: float = SORDER_DEFAULT_THRESHOLD) -> Permutation:
    """Hypernode reordering.

    From each unnumbered seed (ascending), a hypernode of unnumbered cold
    vertices within ``kappa`` out-hops is numbered in BFS order, followed by
    its unnumbered hot neighbors and then its cold neighbors (each ascending).
    A hot seed forms a singleton hypernode. ``hot`` overrides ``threshold``.
    """
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    if hot is None:
        hot = classify_hotness(g, threshold)
    order = _sorder(g.out_offsets, g.out_neighbors, np.asarray(hot.hot, dtype=np.bool_), int(kappa))
    return Permutation.from_order(order)


# ---------------------------------------------------------------------------
# GOrder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GorderParams:
    window: int = 5

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")


class _GorderArrays:
    """Sorted, de-duplicated adjacency used by the score computations."""

    def __init__(self, g: CsrGraph):
        g.require_in_edges()
        self.out_off = g.out_offsets
        self.out_nbr = g.out_neighbors
        self.in_off = g.in_offsets
        self.in_nbr = g.in_neighbors
        uniq = build_csr(g.to_edge_list().deduplicated(), build_in_edges=True)
        self.uout_off = uniq.out_offsets
        self.uout_nbr = uniq.out_neighbors
        self.uin_off = uniq.in_offsets
        self.uin_nbr = uniq.in_neighbors


@helper
def _count_in_run(nbr, lo, hi, x):
    # occurrences of x in the sorted slice nbr[lo:hi]
    a = lo
    b = hi
    while a < b:
        mid = (a + b) // 2
        if nbr[mid] < x:
            a = mid + 1
        else:
            b = mid
    c = a
    while c < hi and nbr[c] == x:
        c += 1
    return c - a


@helper
def _pair_score(out_off, out_nbr, uin_off, uin_nbr, u, v):
    i = uin_off[u]
    i_end = uin_off[u + 1]
    j = uin_off[v]
    j_end = uin_off[v + 1]
    common = 0
    while i < i_end and j < j_end:
        a = uin_nbr[i]
        b = uin_nbr[j]
        if a == b:
            common += 1
            i += 1
            j += 1
        elif a < b:
            i += 1
        else:
            j += 1
    direct = _count_in_run(out_nbr, out_off[u], out_off[u + 1], v)
    direct += _count_in_run(out_nbr, out_off[v], out_off[v + 1], u)
    return common + direct


@kernel
def _evaluate_f(out_off, out_nbr, uin_off, uin_nbr, order, window):
    n = order.shape[0]
    total = 0
    for i in range(n):
        u = order[i]
        stop = min(n, i + window + 1)
        for j in range(i + 1, stop):
            total += _pair_score(out_off, out_nbr, uin_off, uin_nbr, u, order[j])
    return total


@helper
def _window_update(out_off, out_nbr, in_off, in_nbr, uout_off, uout_nbr, uin_off, uin_nbr,
                   key, w, sign):
    for e in range(out_off[w], out_off[w + 1]):
        key[out_nbr[e]] += sign
    for e in range(in_off[w], in_off[w + 1]):
        key[in_nbr[e]] += sign
    for e in range(uin_off[w], uin_off[w + 1]):
        x = uin_nbr[e]
        for f in range(uout_off[x], uout_off[x + 1]):
            v = uout_nbr[f]
            if v != w:
                key[v] += sign


@kernel
def _gorder_greedy(out_off, out_nbr, in_off, in_nbr, uout_off, uout_nbr, uin_off, uin_nbr,
                   window, start):
    n = out_off.shape[0] - 1
    key = np.zeros(n, dtype=np.int64)
    placed = np.zeros(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    if n == 0:
        return order
    order[0] = start
    placed[start] = True
    _window_update(out_off, out_nbr, in_off, in_nbr, uout_off, uout_nbr, uin_off, uin_nbr,
                   key, start, 1)
    for i in range(1, n):
        best = -1
        best_key = -1
        for v in range(n):
            if not placed[v] and key[v] > best_key:
                best = v
                best_key = key[v]
        order[i] = best
        placed[best] = True
        _window_update(out_off, out_nbr, in_off, in_nbr, uout_off, uout_nbr, uin_off, uin_nbr,
                       key, best, 1)
        if i >= window:
            _window_update(out_off, out_nbr, in_off, in_nbr, uout_off, uout_nbr, uin_off,
                           uin_nbr, key, order[i - window], -1)
    return order


def gorder_score(g: CsrGraph, u: int, v: int) -> int:
    """Common in-neighbors of u and v plus direct arcs between them (both directions)."""
    g.require_in_edges()
    if u == v:
        raise ValueError("score is defined for distinct vertices")
    arr = _GorderArrays(g)
    return int(_pair_score(arr.out_off, arr.out_nbr, arr.uin_off, arr.uin_nbr, int(u), int(v)))


def evaluate_f(g: CsrGraph, perm: Permutation, omega: int) -> int:
    """Sum of pair scores over vertex pairs whose new ids differ by 1..omega."""
    if omega < 1:
        raise ValueError("omega must be >= 1")
    arr = _GorderArrays(g)
    return int(_evaluate_f(arr.out_off, arr.out_nbr, arr.uin_off, arr.uin_nbr, perm.order,
                           int(omega)))


def gorder_greedy(g: CsrGraph, params: Optional[GorderParams] = None) -> Permutation:
    """Window greedy: start at the max in-degree vertex, then repeatedly append the
    unplaced vertex with the largest score sum against the last ``window`` placed
    vertices (ties to the lowest id)."""
    params = params or GorderParams()
    arr = _GorderArrays(g)
    if g.num_vertices == 0:
        return Permutation.identity(0)
    start = int(np.argmax(g.in_degree()))
    order = _gorder_greedy(arr.out_off, arr.out_nbr, arr.in_off, arr.in_nbr, arr.uout_off,
                           arr.uout_nbr, arr.uin_off, arr.uin_nbr, int(params.window), start)
    return Permutation.from_order(order)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


def _lorder_scheme(g, kappa=None, threshold=None, basis="out", diameter=None):
    from .lorder import KappaPolicy, LorderConfig, lorder

    policy = KappaPolicy.HALF_DIAMETER if kappa is None else KappaPolicy.EXPLICIT
    return lorder(g, LorderConfig(kappa=kappa, threshold=threshold, kappa_policy=policy,
                                  degree_basis=basis, diameter=diameter))


def _dbg_scheme(g, threshold=None, basis="out"):
    return dbg_order(g, DbgParams(threshold, DegreeBasis(basis)))


def _norder_scheme(g, basis="out"):
    return norder(g, basis=basis)


def _sorder_scheme(g, kappa=SORDER_DEFAULT_KAPPA, threshold=SORDER_DEFAULT_THRESHOLD):
    return sorder(g, kappa=kappa, threshold=threshold)


def _gorder_scheme(g, window=5):
    return gorder_greedy(g.with_in_edges(), GorderParams(window))


SCHEMES: dict[str, Callable[..., Permutation]] = {
    "identity": identity_order,
    "random": random_order,
    "sort": sort_order,
    "dbg": _dbg_scheme,
    "norder": _norder_scheme,
    "sorder": _sorder_scheme,
    "gorder": _gorder_scheme,
    "lorder": _lorder_scheme,
}


def reorder(g: CsrGraph, scheme: str, **params) -> Permutation:
    """Run a scheme by name. Parameters not accepted by the scheme raise TypeError."""
    try:
        fn = SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}") from None
    return fn(g, **params)
