"""Synthetic graph generators used for fixtures and benchmarks.

All generators take an explicit seed (default 42) and are fully
reproducible for a given seed and numpy version.
"""

from __future__ import annotations

import numpy as np

from .graph import VERTEX_DTYPE, EdgeList

DEFAULT_SEED = 42
GRAPH500_PROBS = (0.57, 0.19, 0.19)


def _rmat_ids(rng, scale, count, a, b, c):
    src = np.zeros(count, dtype=VERTEX_DTYPE)
    dst = np.zeros(count, dtype=VERTEX_DTYPE)
    ab = a + b
    abc = a + b + c
    for bit in range(scale):
        r = rng.random(count)
        # quadrants: a = (0,0), b = (0,1), c = (1,0), d = (1,1)
        src_bit = r >= ab
        dst_bit = ((r >= a) & (r < ab)) | (r >= abc)
        src |= src_bit.astype(VERTEX_DTYPE) << bit
        dst |= dst_bit.astype(VERTEX_DTYPE) << bit
    return src, dst


def rmat(scale: int, edge_factor: int = 16, a: float = GRAPH500_PROBS[0],
         b: float = GRAPH500_PROBS[1], c: float = GRAPH500_PROBS[2],
         seed: int = DEFAULT_SEED, permute: bool = False) -> EdgeList:
    """Recursive-matrix (Kronecker) graph with ``2**scale`` vertices.

    Draws ``edge_factor * 2**scale`` directed arcs. With the Graph500
    probabilities the low ids end up as hubs; ``permute=True`` scrambles
    labels the way Graph500 does.
    """
    if scale < 0:
        raise ValueError("scale must be non-negative")
    d = 1.0 - a - b - c
    if min(a, b, c, d) < 0:
        raise ValueError("quadrant probabilities must be non-negative and sum to at most 1")
    n = 1 << scale
    m = edge_factor * n
    rng = np.random.default_rng(seed)
    src, dst = _rmat_ids(rng, scale, m, a, b, c)
    if permute:
        relabel = rng.permutation(n).astype(VERTEX_DTYPE)
        src, dst = relabel[src], relabel[dst]
    return EdgeList(n, src, dst)


def clustered_rmat(scale: int, edge_factor: int = 16, block_scale: int = 9,
                   intra_fraction: float = 0.9, seed: int = DEFAULT_SEED,
                   a: float = GRAPH500_PROBS[0], b: float = GRAPH500_PROBS[1],
                   c: float = GRAPH500_PROBS[2], permute: bool = False) -> EdgeList:
    """RMAT graph with planted communities.

    Vertices are split into contiguous blocks of ``2**block_scale`` ids. A
    fraction ``intra_fraction`` of the arcs is drawn by a small RMAT inside
    a uniformly chosen block, the rest by a global RMAT, so each block has
    its own hubs and dense interior. ``permute=True`` hides the blocks behind
    a random relabeling.
    """
    if not 0 <= block_scale <= scale:
        raise ValueError("block_scale must lie in [0, scale]")
    if not 0.0 <= intra_fraction <= 1.0:
        raise ValueError("intra_fraction must lie in [0, 1]")
    n = 1 << scale
    m = edge_factor * n
    rng = np.random.default_rng(seed)
    n_intra = int(rng.binomial(m, intra_fraction))
    num_blocks = 1 << (scale - block_scale)
    block = rng.integers(0, num_blocks, size=n_intra, dtype=VERTEX_DTYPE) << block_scale
    s_in, d_in = _rmat_ids(rng, block_scale, n_intra, a, b, c)
    s_out, d_out = _rmat_ids(rng, scale, m - n_intra, a, b, c)
    src = np.concatenate([s_in + block, s_out])
    dst = np.concatenate([d_in + block, d_out])
    if permute:
        relabel = rng.permutation(n).astype(VERTEX_DTYPE)
        src, dst = relabel[src], relabel[dst]
    return EdgeList(n, src, dst)


def uniform_random(num_vertices: int, num_edges: int, seed: int = DEFAULT_SEED) -> EdgeList:
    """Directed arcs with independent uniform endpoints."""
    rng = np.random.default_rng(seed)
    if num_vertices == 0:
        return EdgeList(0, np.empty(0, VERTEX_DTYPE), np.empty(0, VERTEX_DTYPE))
    src = rng.integers(0, num_vertices, size=num_edges, dtype=VERTEX_DTYPE)
    dst = rng.integers(0, num_vertices, size=num_edges, dtype=VERTEX_DTYPE)
    return EdgeList(num_vertices, src, dst)


def random_tree(num_vertices: int, seed: int = DEFAULT_SEED) -> EdgeList:
    """Random recursive tree, each vertex attached to a uniformly chosen earlier one.

    Returned as a symmetric arc list.
    """
    rng = np.random.default_rng(seed)
    child = np.arange(1, num_vertices, dtype=VERTEX_DTYPE)
    parent = (rng.random(child.size) * child).astype(VERTEX_DTYPE)
    return EdgeList(num_vertices, child, parent).symmetrized()
