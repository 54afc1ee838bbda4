"""CSR graphs: ingestion, construction, degree statistics and relabeling.

A :class:`CsrGraph` always stores directed arcs. An undirected graph is one
whose arc set is symmetric (``directed=False``); algorithms that need the
undirected view of a directed graph build it on demand with
:meth:`CsrGraph.undirected_view`.
"""

from __future__ import annotations

import enum
import io
import os
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import BinaryIO, Optional, Union

import numpy as np

from ._accel import kernel
from .errors import CapabilityError, ParseError, PermutationError, VertexRangeError

VERTEX_DTYPE = np.int64
U64_MAX = 2**64 - 1

CSR_MAGIC = b"CSRG"
FLAG_IN_EDGES = 0x01
FLAG_WEIGHTS = 0x02
FLAG_UNDIRECTED = 0x04

Source = Union[bytes, str, os.PathLike, BinaryIO]


class DegreeBasis(str, enum.Enum):
    OUT = "out"
    IN = "in"
    TOTAL = "total"


class EdgeFormat(str, enum.Enum):
    TEXT = "text"
    CSR = "csr"


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# Edge lists
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeList:
    """Staging form between a file and a CSR graph."""

    num_vertices: int
    src: np.ndarray
    dst: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "src", _frozen(self.src, VERTEX_DTYPE))
        object.__setattr__(self, "dst", _frozen(self.dst, VERTEX_DTYPE))
        if self.weights is not None:
            object.__setattr__(self, "weights", _frozen(self.weights, np.float64))
            if self.weights.shape != self.src.shape:
                raise ValueError("weights must align with edges")
        if self.src.shape != self.dst.shape:
            raise ValueError("src and dst must have the same length")
        if self.num_vertices < 0:
            raise VertexRangeError("num_vertices must be non-negative")
        for ids in (self.src, self.dst):
            if ids.size and (ids.min() < 0 or ids.max() >= self.num_vertices):
                raise VertexRangeError(
                    f"vertex id out of range for num_vertices={self.num_vertices}"
                )

    @classmethod
    def from_pairs(cls, pairs, num_vertices=None, weights=None):
        arr = np.asarray(list(pairs), dtype=VERTEX_DTYPE).reshape(-1, 2)
        if num_vertices is None:
            num_vertices = int(arr.max()) + 1 if arr.size else 0
        return cls(num_vertices, arr[:, 0], arr[:, 1], weights)

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist()))

    def deduplicated(self) -> "EdgeList":
        """Drop repeated (src, dst) pairs, keeping the first weight seen."""
        if self.num_edges == 0:
            return self
        key = self.src * max(self.num_vertices, 1) + self.dst
        _, first = np.unique(key, return_index=True)
        first.sort()
        w = None if self.weights is None else self.weights[first]
        return EdgeList(self.num_vertices, self.src[first], self.dst[first], w)

    def without_self_loops(self) -> "EdgeList":
        keep = self.src != self.dst
        w = None if self.weights is None else self.weights[keep]
        return EdgeList(self.num_vertices, self.src[keep], self.dst[keep], w)

    def symmetrized(self) -> "EdgeList":
        """Add the reverse of every non-loop arc."""
        rev = self.src != self.dst
        src = np.concatenate([self.src, self.dst[rev]])
        dst = np.concatenate([self.dst, self.src[rev]])
        w = None
        if self.weights is not None:
            w = np.concatenate([self.weights, self.weights[rev]])
        return EdgeList(self.num_vertices, src, dst, w)


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    return source.read()


def _parse_id(token: bytes, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"invalid vertex id {token.decode(errors='replace')!r}", lineno) from None
    if value < 0 or value > U64_MAX:
        raise VertexRangeError(f"line {lineno}: vertex id {value} outside [0, 2^64)")
    return value


def _parse_text(data: bytes) -> EdgeList:
    src: list[int] = []
    dst: list[int] = []
    weights: list[float] = []
    header: Optional[tuple[int, int]] = None
    seen_data = False
    weighted: Optional[bool] = None
    for lineno, raw in enumerate(data.split(b"\n"), start=1):
        line = raw.strip()
        if not line or line[:1] in (b"#", b"%"):
            continue
        parts = line.split()
        if not seen_data and header is None and parts[0] == b"H":
            if len(parts) != 3:
                raise ParseError("header must be 'H n m'", lineno)
            header = (_parse_id(parts[1], lineno), _parse_id(parts[2], lineno))
            continue
        seen_data = True
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'src dst', got {len(parts)} fields", lineno)
        is_weighted = len(parts) == 3
        if weighted is None:
            weighted = is_weighted
        elif weighted != is_weighted:
            raise ParseError("mixed weighted and unweighted lines", lineno)
        s = _parse_id(parts[0], lineno)
        d = _parse_id(parts[1], lineno)
        if header is not None and (s >= header[0] or d >= header[0]):
            raise VertexRangeError(f"line {lineno}: vertex id exceeds header n={header[0]}")
        src.append(s)
        dst.append(d)
        if is_weighted:
            try:
                weights.append(float(parts[2]))
            except ValueError:
                raise ParseError(f"invalid weight {parts[2].decode(errors='replace')!r}", lineno) from None
    if max(src + dst, default=-1) > np.iinfo(VERTEX_DTYPE).max:
        raise VertexRangeError("vertex id does not fit in a signed 64-bit index")
    if header is not None:
        n, m = header
        if m != len(src):
            raise ParseError(f"header declares m={m} but {len(src)} edges were read")
    else:
        n = max(src + dst, default=-1) + 1
    return EdgeList(n, np.array(src, dtype=VERTEX_DTYPE), np.array(dst, dtype=VERTEX_DTYPE),
                    np.array(weights) if weighted else None)


def load_edge_list(source: Source, format: Union[EdgeFormat, str] = EdgeFormat.TEXT) -> EdgeList:
    """Parse an edge list from a path, bytes or binary stream.

    Text files hold one ``src dst`` pair per line; ``#`` and ``%`` lines are
    comments and an optional first data line ``H n m`` fixes the vertex and
    edge counts. Without a header ``n`` is one more than the largest id.
    Self-loops and repeated edges are kept.
    """
    format = EdgeFormat(format)
    data = _read_bytes(source)
    if format is EdgeFormat.TEXT:
        return _parse_text(data)
    return read_csr(io.BytesIO(data)).to_edge_list()


def write_edge_list(edges: "EdgeList | CsrGraph", stream, header: bool = True) -> None:
    if isinstance(edges, CsrGraph):
        edges = edges.to_edge_list()
    out = io.StringIO()
    if header:
        out.write(f"H {edges.num_vertices} {edges.num_edges}\n")
    if edges.weights is None:
        for s, d in zip(edges.src.tolist(), edges.dst.tolist()):
            out.write(f"{s} {d}\n")
    else:
        for s, d, w in zip(edges.src.tolist(), edges.dst.tolist(), edges.weights.tolist()):
            out.write(f"{s} {d} {w!r}\n")
    text = out.getvalue().encode("ascii")
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, "wb") as fh:
            fh.write(text)
    else:
        stream.write(text)


# ---------------------------------------------------------------------------
# CSR
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CsrGraph:
    out_offsets: np.ndarray
    out_neighbors: np.ndarray
    in_offsets: Optional[np.ndarray] = None
    in_neighbors: Optional[np.ndarray] = None
    directed: bool = True
    weights: Optional[np.ndarray] = None
    in_weights: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("out_offsets", "out_neighbors", "in_offsets", "in_neighbors"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen(value, VERTEX_DTYPE))
        for name in ("weights", "in_weights"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen(value, np.float64))
        if (self.in_offsets is None) != (self.in_neighbors is None):
            raise ValueError("in_offsets and in_neighbors must be given together")
        offs = self.out_offsets
        if offs.ndim != 1 or offs.size == 0 or offs[0] != 0 or offs[-1] != self.out_neighbors.size:
            raise ValueError("out_offsets must start at 0 and end at num_edges")
        if np.any(np.diff(offs) < 0):
            raise ValueError("out_offsets must be non-decreasing")
        n = offs.size - 1
        if self.out_neighbors.size and (self.out_neighbors.min() < 0 or self.out_neighbors.max() >= n):
            raise VertexRangeError("neighbor id out of range")

    @property
    def num_vertices(self) -> int:
        return int(self.out_offsets.shape[0] - 1)

    @property
    def num_edges(self) -> int:
        return int(self.out_neighbors.shape[0])

    @property
    def has_in_edges(self) -> bool:
        return self.in_offsets is not None

    @property
    def is_weighted(self) -> bool:
        return self.weights is not None

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_offsets)

    def in_degree(self) -> np.ndarray:
        if self.has_in_edges:
            return np.diff(self.in_offsets)
        return np.bincount(self.out_neighbors, minlength=self.num_vertices).astype(VERTEX_DTYPE)

    def degree(self, basis: Union[DegreeBasis, str] = DegreeBasis.OUT) -> np.ndarray:
        basis = DegreeBasis(basis)
        if basis is DegreeBasis.OUT:
            return self.out_degree()
        if basis is DegreeBasis.IN:
            return self.in_degree()
        return self.out_degree() + self.in_degree()

    def out_neighbors_of(self, v: int) -> np.ndarray:
        return self.out_neighbors[self.out_offsets[v]:self.out_offsets[v + 1]]

    def in_neighbors_of(self, v: int) -> np.ndarray:
        self.require_in_edges()
        return self.in_neighbors[self.in_offsets[v]:self.in_offsets[v + 1]]

    def require_in_edges(self) -> None:
        if not self.has_in_edges:
            raise CapabilityError("operation needs in-edge arrays; build with build_in_edges=True")

    def edge_sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_vertices, dtype=VERTEX_DTYPE), self.out_degree())

    def to_edge_list(self) -> EdgeList:
        return EdgeList(self.num_vertices, self.edge_sources(), self.out_neighbors, self.weights)

    def with_in_edges(self) -> "CsrGraph":
        if self.has_in_edges:
            return self
        return build_csr(self.to_edge_list(), build_in_edges=True, directed=self.directed)

    @cached_property
    def undirected_view(self) -> tuple[np.ndarray, np.ndarray]:
        """(offsets, neighbors) of the symmetric closure, self-loops dropped."""
        if not self.directed:
            return self.out_offsets, self.out_neighbors
        src = self.edge_sources()
        dst = self.out_neighbors
        keep = src != dst
        both_src = np.concatenate([src[keep], dst[keep]])
        both_dst = np.concatenate([dst[keep], src[keep]])
        offsets, neighbors, _ = _csr_arrays(self.num_vertices, both_src, both_dst, None)
        offsets.flags.writeable = False
        neighbors.flags.writeable = False
        return offsets, neighbors

    def same_structure(self, other: "CsrGraph") -> bool:
        if not (np.array_equal(self.out_offsets, other.out_offsets)
                and np.array_equal(self.out_neighbors, other.out_neighbors)):
            return False
        if (self.weights is None) != (other.weights is None):
            return False
        return self.weights is None or np.array_equal(self.weights, other.weights)


def _csr_arrays(n, src, dst, weights):
    if weights is None:
        order = np.lexsort((dst, src))
    else:
        order = np.lexsort((weights, dst, src))
    counts = np.bincount(src, minlength=n) if src.size else np.zeros(n, dtype=VERTEX_DTYPE)
    offsets = np.zeros(n + 1, dtype=VERTEX_DTYPE)
    np.cumsum(counts, out=offsets[1:])
    w = None if weights is None else weights[order]
    return offsets, dst[order].astype(VERTEX_DTYPE), w


def build_csr(edges: EdgeList, build_in_edges: bool = False, directed: bool = True) -> CsrGraph:
    """Group edges by source; each neighbor run is sorted ascending."""
    n = edges.num_vertices
    out_off, out_nbr, w = _csr_arrays(n, edges.src, edges.dst, edges.weights)
    in_off = in_nbr = in_w = None
    if build_in_edges:
        in_off, in_nbr, in_w = _csr_arrays(n, edges.dst, edges.src, edges.weights)
    return CsrGraph(out_off, out_nbr, in_off, in_nbr, directed=directed, weights=w, in_weights=in_w)


def from_edges(pairs, num_vertices=None, build_in_edges=False, directed=True, weights=None) -> CsrGraph:
    """Convenience constructor from an iterable of (src, dst) pairs."""
    return build_csr(EdgeList.from_pairs(pairs, num_vertices, weights), build_in_edges, directed)


# ---------------------------------------------------------------------------
# Degree statistics and hotness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HotnessProfile:
    threshold: float
    hot: np.ndarray
    degree_basis: DegreeBasis = DegreeBasis.OUT

    @property
    def num_hot(self) -> int:
        return int(np.count_nonzero(self.hot))

    @property
    def hot_fraction(self) -> float:
        return self.num_hot / self.hot.size if self.hot.size else 0.0


def average_degree(g: CsrGraph, basis: Union[DegreeBasis, str] = DegreeBasis.OUT) -> float:
    if g.num_vertices == 0:
        raise ValueError("average degree of an empty graph is undefined")
    scale = 2 if DegreeBasis(basis) is DegreeBasis.TOTAL else 1
    return scale * g.num_edges / g.num_vertices


def classify_hotness(g: CsrGraph, threshold: Optional[float] = None,
                     basis: Union[DegreeBasis, str] = DegreeBasis.OUT) -> HotnessProfile:
    """Mark vertices whose degree strictly exceeds ``threshold``.

    ``threshold`` defaults to the average degree on the same basis, so a
    regular graph has no hot vertices.
    """
    basis = DegreeBasis(basis)
    if threshold is None:
        threshold = average_degree(g, basis) if g.num_vertices else 0.0
    if threshold < 0:
        raise ValueError("hotness threshold must be non-negative")
    hot = g.degree(basis) > threshold
    hot.flags.writeable = False
    return HotnessProfile(float(threshold), hot, basis)


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------


class Permutation:
    """Bijection old id -> new id, stored as ``new_id[old]``."""

    __slots__ = ("new_id",)

    def __init__(self, new_id, validate: bool = True):
        arr = np.array(new_id, dtype=VERTEX_DTYPE, copy=True).reshape(-1)
        if validate:
            check_bijection(arr)
        arr.flags.writeable = False
        self.new_id = arr

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n, dtype=VERTEX_DTYPE), validate=False)

    @classmethod
    def from_order(cls, order) -> "Permutation":
        """Build from the sequence of old ids listed in new-id order."""
        order = np.asarray(order, dtype=VERTEX_DTYPE)
        check_bijection(order)
        new_id = np.empty_like(order)
        new_id[order] = np.arange(order.size, dtype=VERTEX_DTYPE)
        return cls(new_id, validate=False)

    def __len__(self) -> int:
        return int(self.new_id.size)

    def __getitem__(self, v):
        return self.new_id[v]

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self.new_id, other.new_id)

    def __repr__(self) -> str:
        return f"Permutation({self.new_id.tolist() if len(self) <= 16 else f'n={len(self)}'})"

    @property
    def order(self) -> np.ndarray:
        """Old ids sorted by new id (the inverse map)."""
        inv = np.empty_like(self.new_id)
        inv[self.new_id] = np.arange(self.new_id.size, dtype=VERTEX_DTYPE)
        return inv

    def inverse(self) -> "Permutation":
        return Permutation(self.order, validate=False)

    def compose(self, then: "Permutation") -> "Permutation":
        """Apply ``self`` first, then ``then``."""
        return Permutation(then.new_id[self.new_id], validate=False)

    def to_bytes(self) -> bytes:
        return self.new_id.astype("<u8").tobytes()


def check_bijection(new_id, n: Optional[int] = None) -> None:
    arr = np.asarray(new_id)
    size = arr.size if n is None else n
    if arr.size != size:
        raise PermutationError(f"permutation has length {arr.size}, expected {size}")
    if size == 0:
        return
    if arr.min() < 0 or arr.max() >= size:
        raise PermutationError("permutation entries must lie in [0, n)")
    if np.bincount(arr, minlength=size).max() != 1:
        raise PermutationError("permutation is not injective")


def apply_permutation(g: CsrGraph, p: Union[Permutation, np.ndarray]) -> CsrGraph:
    """Relabel every vertex ``v`` as ``p[v]``; neighbor runs are re-sorted."""
    new_id = p.new_id if isinstance(p, Permutation) else np.asarray(p, dtype=VERTEX_DTYPE)
    check_bijection(new_id, g.num_vertices)
    src = new_id[g.edge_sources()]
    dst = new_id[g.out_neighbors]
    return build_csr(EdgeList(g.num_vertices, src, dst, g.weights),
                     build_in_edges=g.has_in_edges, directed=g.directed)


# ---------------------------------------------------------------------------
# Diameter estimation
# ---------------------------------------------------------------------------


@kernel
def _bfs_distances(offsets, neighbors, source):
    n = offsets.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for e in range(offsets[u], offsets[u + 1]):
            v = neighbors[e]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue[tail] = v
                tail += 1
    return dist


@kernel
def _component_labels(offsets, neighbors):
    n = offsets.shape[0] - 1
    label = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = s
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for e in range(offsets[u], offsets[u + 1]):
                v = neighbors[e]
                if label[v] < 0:
                    label[v] = s
                    queue[tail] = v
                    tail += 1
    return label


def approximate_diameter(g: CsrGraph, sweeps: int = 4) -> int:
    """Lower bound on the undirected diameter by repeated double-sweep BFS.

    Runs inside the largest connected component; the first sweep starts at
    that component's highest-degree vertex. Exact on trees, paths and cliques.
    """
    if g.num_vertices == 0:
        raise ValueError("diameter of an empty graph is undefined")
    offsets, neighbors = g.undirected_view
    labels = _component_labels(offsets, neighbors)
    sizes = np.bincount(labels, minlength=g.num_vertices)
    biggest = int(np.argmax(sizes))
    if sizes[biggest] <= 1:
        return 0
    members = np.flatnonzero(labels == biggest)
    degree = np.diff(offsets)[members]
    start = int(members[np.argmax(degree)])
    best = 0
    for sweep in range(max(1, sweeps)):
        dist = _bfs_distances(offsets, neighbors, start)
        far = int(np.argmax(dist))
        ecc = int(dist[far])
        if sweep > 1 and ecc <= best:
            break
        best = max(best, ecc)
        start = far
    return best


def exact_diameter(g: CsrGraph) -> int:
    """All-pairs BFS over the undirected view, ignoring unreachable pairs."""
    offsets, neighbors = g.undirected_view
    best = 0
    for s in range(g.num_vertices):
        best = max(best, int(_bfs_distances(offsets, neighbors, s).max(initial=0)))
    return best


# ---------------------------------------------------------------------------
# Binary CSR and permutation files
# ---------------------------------------------------------------------------


def write_csr(g: CsrGraph, stream) -> None:
    """Little-endian: magic, u64 n, u64 m, offsets, neighbors, u8 flags, extras."""
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, "wb") as fh:
            return write_csr(g, fh)
    flags = 0
    if g.has_in_edges:
        flags |= FLAG_IN_EDGES
    if g.is_weighted:
        flags |= FLAG_WEIGHTS
    if not g.directed:
        flags |= FLAG_UNDIRECTED
    stream.write(CSR_MAGIC)
    stream.write(struct.pack("<QQ", g.num_vertices, g.num_edges))
    stream.write(g.out_offsets.astype("<u8").tobytes())
    stream.write(g.out_neighbors.astype("<u8").tobytes())
    stream.write(struct.pack("<B", flags))
    if g.has_in_edges:
        stream.write(g.in_offsets.astype("<u8").tobytes())
        stream.write(g.in_neighbors.astype("<u8").tobytes())
    if g.is_weighted:
        stream.write(g.weights.astype("<f8").tobytes())


def _take(stream, nbytes, what):
    data = stream.read(nbytes)
    if len(data) != nbytes:
        raise ParseError(f"truncated CSR file while reading {what}")
    return data


def read_csr(stream) -> CsrGraph:
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, "rb") as fh:
            return read_csr(fh)
    magic = stream.read(4)
    if magic != CSR_MAGIC:
        raise ParseError(f"bad magic {magic!r}; expected {CSR_MAGIC!r}")
    n, m = struct.unpack("<QQ", _take(stream, 16, "header"))

    def u64s(count, what):
        return np.frombuffer(_take(stream, 8 * count, what), dtype="<u8").astype(VERTEX_DTYPE)

    out_off = u64s(n + 1, "offsets")
    out_nbr = u64s(m, "neighbors")
    (flags,) = struct.unpack("<B", _take(stream, 1, "flags"))
    in_off = in_nbr = None
    if flags & FLAG_IN_EDGES:
        in_off = u64s(n + 1, "in-offsets")
        in_nbr = u64s(m, "in-neighbors")
    weights = None
    if flags & FLAG_WEIGHTS:
        weights = np.frombuffer(_take(stream, 8 * m, "weights"), dtype="<f8").astype(np.float64)
    try:
        g = CsrGraph(out_off, out_nbr, in_off, in_nbr, directed=not flags & FLAG_UNDIRECTED,
                     weights=weights)
    except ValueError as exc:
        raise ParseError(f"invalid CSR arrays: {exc}") from None
    if weights is not None and in_off is not None:
        # in-weights are not stored; rebuild them from the out side
        g = build_csr(g.to_edge_list(), build_in_edges=True, directed=g.directed)
    return g


def write_permutation(p: Permutation, stream) -> None:
    text = "".join(f"{v}\n" for v in p.new_id.tolist()).encode("ascii")
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, "wb") as fh:
            fh.write(text)
    else:
        stream.write(text)


def read_permutation(source: Source) -> Permutation:
    data = _read_bytes(source)
    values = []
    for lineno, raw in enumerate(data.split(b"\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise ParseError(f"invalid permutation entry {line.decode(errors='replace')!r}", lineno) from None
    return Permutation(values)
