"""Immutable undirected graphs in CSR form.

A graph is stored as two flat int64 arrays: ``offsets`` (length n+1) and
``neighbors`` (length 2m, both endpoints of every edge, each adjacency
list sorted ascending).  Degrees are O(1), neighbor iteration is O(d_u),
and the structure is read-only after construction so any number of query
workers can share it.

Simple graphs only: self-loops are dropped at load time (walk semantics
divide by d_u and self-loop degree conventions would silently change the
scores), duplicate edges are collapsed, and a node that ends up with
degree 0 is a hard error rather than being silently patched.
"""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "Graph",
    "GraphStats",
    "load_edge_list",
    "dump_edge_list",
    "generate",
    "complete",
    "star",
    "path",
    "ring",
    "erdos_renyi",
    "power_law",
    "check_invariants",
]


@dataclass(frozen=True)
class GraphStats:
    avg_degree: float
    max_degree: int
    min_degree: int


class Graph:
    """Undirected simple graph with CSR adjacency.

    Attributes
    ----------
    offsets : int64 array, length n+1, nondecreasing, offsets[n] == 2m
    neighbors : int64 array, length 2m, ascending within each list
    degrees : int64 array, degrees[u] == offsets[u+1] - offsets[u]
    original_ids : int64 array mapping dense id -> id in the source file
    self_loops_dropped : count of self-loop lines discarded at load
    """

    __slots__ = ("offsets", "neighbors", "degrees", "original_ids", "self_loops_dropped")

    def __init__(
        self,
        offsets: np.ndarray,
        neighbors: np.ndarray,
        original_ids: np.ndarray | None = None,
        self_loops_dropped: int = 0,
    ):
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.neighbors = np.ascontiguousarray(neighbors, dtype=np.int64)
        self.degrees = np.diff(self.offsets)
        n = self.offsets.shape[0] - 1
        if original_ids is None:
            original_ids = np.arange(n, dtype=np.int64)
        self.original_ids = np.ascontiguousarray(original_ids, dtype=np.int64)
        self.self_loops_dropped = int(self_loops_dropped)
        for arr in (self.offsets, self.neighbors, self.degrees, self.original_ids):
            arr.flags.writeable = False

    @property
    def node_count(self) -> int:
        return self.offsets.shape[0] - 1

    @property
    def edge_count(self) -> int:
        return self.neighbors.shape[0] // 2

    def degree(self, u: int) -> int:
        self._check_node(u)
        return int(self.degrees[u])

    def neighbor_list(self, u: int) -> np.ndarray:
        """Neighbors of u in ascending order; position idx holds the
        idx-th neighbor (1-based idx-1 here) used by index-addressed
        sampling."""
        self._check_node(u)
        return self.neighbors[self.offsets[u] : self.offsets[u + 1]]

    def stats(self) -> GraphStats:
        return GraphStats(
            avg_degree=2.0 * self.edge_count / self.node_count,
            max_degree=int(self.degrees.max()),
            min_degree=int(self.degrees.min()),
        )

    def to_original(self, u: int) -> int:
        self._check_node(u)
        return int(self.original_ids[u])

    def from_original(self, label: int) -> int:
        hits = np.flatnonzero(self.original_ids == label)
        if hits.size == 0:
            raise ValidationError(f"node {label} not present in graph")
        return int(hits[0])

    def _check_node(self, u: int) -> None:
        if not 0 <= u < self.node_count:
            raise IndexError(f"node {u} out of range [0, {self.node_count})")

    def _labeled_edges(self) -> np.ndarray:
        """Undirected edge list in original-label space, sorted; the
        identity a Graph keeps through remapping round-trips."""
        src = np.repeat(self.original_ids, self.degrees)
        dst = self.original_ids[self.neighbors]
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        order = np.lexsort((hi, lo))
        pairs = np.stack([lo[order], hi[order]], axis=1)
        return pairs[::2]  # each edge appears once per endpoint

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.node_count == other.node_count and np.array_equal(
            self._labeled_edges(), other._labeled_edges()
        )

    def __hash__(self):
        return hash((self.node_count, self.edge_count, self._labeled_edges().tobytes()))

    def __repr__(self):
        return f"Graph(n={self.node_count}, m={self.edge_count})"


def _build_csr(
    n: int,
    src: np.ndarray,
    dst: np.ndarray,
    original_ids: np.ndarray | None = None,
    self_loops_dropped: int = 0,
) -> Graph:
    """Build a Graph from directed half-edges after cleaning.

    ``src``/``dst`` must already exclude self-loops; duplicates are
    collapsed here.  Raises if any of the n nodes ends with degree 0.
    """
    if n < 1 or src.size == 0:
        raise ValidationError("empty graph: no edges after cleaning")
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    und = np.unique(lo * np.int64(n) + hi)
    lo = und // n
    hi = und % n
    all_src = np.concatenate([lo, hi])
    all_dst = np.concatenate([hi, lo])
    order = np.lexsort((all_dst, all_src))
    degrees = np.bincount(all_src, minlength=n)
    isolated = np.flatnonzero(degrees == 0)
    if isolated.size:
        labels = isolated if original_ids is None else np.asarray(original_ids)[isolated]
        raise ValidationError(f"isolated node(s) with degree 0: {labels[:8].tolist()}")
    offsets = np.concatenate([[0], np.cumsum(degrees)]).astype(np.int64)
    return Graph(offsets, all_dst[order], original_ids, self_loops_dropped)


def load_edge_list(source: IO[str] | IO[bytes] | str | bytes | Iterable[str]) -> Graph:
    """Parse a SNAP-style edge list into a Graph.

    Lines starting with '#' or '%' are comments; data lines hold exactly
    two whitespace-separated nonnegative integer ids.  Ids are remapped
    densely to 0..n-1 in first-appearance order; duplicate edges collapse,
    self-loops are dropped (counted on the result), and a node left with
    degree 0 is a validation error naming its original id.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)

    id_map: dict[int, int] = {}
    us: list[int] = []
    vs: list[int] = []
    loops = 0
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected two node ids, got {len(parts)} tokens", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer node id in {parts!r}", lineno) from None
        if a < 0 or b < 0:
            raise ParseError(f"negative node id in {parts!r}", lineno)
        ua = id_map.setdefault(a, len(id_map))
        ub = id_map.setdefault(b, len(id_map))
        if ua == ub:
            loops += 1
            continue
        us.append(ua)
        vs.append(ub)

    if not id_map:
        raise ValidationError("empty graph: no data lines")
    if loops:
        logger.warning("dropped %d self-loop(s) while loading edge list", loops)
    n = len(id_map)
    original = np.empty(n, dtype=np.int64)
    for label, dense in id_map.items():
        original[dense] = label
    src = np.asarray(us, dtype=np.int64)
    dst = np.asarray(vs, dtype=np.int64)
    if src.size == 0:
        raise ValidationError("empty graph: all edges were self-loops")
    degrees = np.bincount(np.concatenate([src, dst]), minlength=n)
    dead = np.flatnonzero(degrees == 0)
    if dead.size:
        raise ValidationError(
            f"isolated node(s) after cleaning, original id(s): {original[dead][:8].tolist()}"
        )
    return _build_csr(n, src, dst, original, loops)


def dump_edge_list(g: Graph, out: IO[str]) -> None:
    """Canonical serialization: header, then 'u v' with u < v, sorted
    ascending, one edge per line, in original-label space.

    load(dump(g)) == g and dump is idempotent under reload, which makes
    the byte output a canonical form of the labeled graph.
    """
    out.write(f"# undirected graph: n={g.node_count} m={g.edge_count}\n")
    for u, v in g._labeled_edges():
        out.write(f"{u} {v}\n")


def complete(n: int) -> Graph:
    _need(n >= 2, "complete graph needs n >= 2")
    src, dst = np.triu_indices(n, k=1)
    return _build_csr(n, src.astype(np.int64), dst.astype(np.int64))


def star(n: int) -> Graph:
    _need(n >= 2, "star graph needs n >= 2")
    leaves = np.arange(1, n, dtype=np.int64)
    return _build_csr(n, np.zeros(n - 1, dtype=np.int64), leaves)


def path(n: int) -> Graph:
    _need(n >= 2, "path graph needs n >= 2")
    src = np.arange(n - 1, dtype=np.int64)
    return _build_csr(n, src, src + 1)


def ring(n: int) -> Graph:
    _need(n >= 3, "ring graph needs n >= 3")
    src = np.arange(n, dtype=np.int64)
    return _build_csr(n, src, (src + 1) % n)


def erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p) by geometric skipping over the C(n,2) pair index space;
    isolated nodes are attached to a uniformly random other node."""
    _need(n >= 2, "erdos_renyi needs n >= 2")
    _need(0.0 < p <= 1.0, "erdos_renyi needs 0 < p <= 1")
    rng = np.random.default_rng(seed)
    total = n * (n - 1) // 2
    picks: list[int] = []
    if p >= 1.0:
        picks = list(range(total))
    else:
        log_q = math.log1p(-p)
        k = -1
        while True:
            k += 1 + int(math.log(1.0 - rng.random()) / log_q)
            if k >= total:
                break
            picks.append(k)
    idx = np.asarray(picks, dtype=np.int64)
    # invert the row-major upper-triangle linearization
    src = np.empty(idx.shape, dtype=np.int64)
    dst = np.empty(idx.shape, dtype=np.int64)
    if idx.size:
        i = (
            n
            - 2
            - np.floor(np.sqrt(-8.0 * idx + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5)
        ).astype(np.int64)
        j = idx + i + 1 - i * (2 * n - i - 1) // 2
        src, dst = i, j.astype(np.int64)
    return _attach_isolated(n, src, dst, rng)


def power_law(n: int, exponent: float, seed: int) -> Graph:
    """Configuration-model graph with a discrete power-law degree tail.

    Degrees are drawn as floor(U^(-1/(exponent-1))) capped at n-1, stubs
    are matched uniformly at random, then self-loops and duplicate edges
    are discarded; any node isolated by the cleanup is attached to a
    uniformly random neighbor.
    """
    _need(n >= 2, "power_law needs n >= 2")
    _need(exponent > 1.0, "power_law needs exponent > 1")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    deg = np.floor(u ** (-1.0 / (exponent - 1.0))).astype(np.int64)
    deg = np.clip(deg, 1, n - 1)
    if deg.sum() % 2 == 1:
        deg[int(rng.integers(n))] += 1
    stubs = np.repeat(np.arange(n, dtype=np.int64), deg)
    rng.shuffle(stubs)
    half = stubs.reshape(-1, 2)
    keep = half[:, 0] != half[:, 1]
    return _attach_isolated(n, half[keep, 0], half[keep, 1], rng)


def _attach_isolated(
    n: int, src: np.ndarray, dst: np.ndarray, rng: np.random.Generator
) -> Graph:
    degrees = np.bincount(np.concatenate([src, dst]), minlength=n)
    isolated = np.flatnonzero(degrees == 0)
    if isolated.size:
        partners = rng.integers(0, n - 1, size=isolated.size)
        partners = partners + (partners >= isolated)  # never itself
        src = np.concatenate([src, isolated])
        dst = np.concatenate([dst, partners.astype(np.int64)])
    return _build_csr(n, src, dst)


_ALIASES = {"k2": "complete:2", "p3": "path:3"}


def generate(spec: str) -> Graph:
    """Build a graph from a 'kind:param[:param...]' spec string.

    Kinds: complete:N, star:N, path:N, ring:N, erdos_renyi:N:P:SEED,
    power_law:N:EXPONENT:SEED.  Aliases: k2, p3.
    """
    spec = _ALIASES.get(spec.strip().lower(), spec.strip().lower())
    parts = spec.split(":")
    kind, args = parts[0], parts[1:]
    try:
        if kind == "complete":
            return complete(int(args[0]))
        if kind == "star":
            return star(int(args[0]))
        if kind == "path":
            return path(int(args[0]))
        if kind == "ring":
            return ring(int(args[0]))
        if kind in ("erdos_renyi", "er"):
            return erdos_renyi(int(args[0]), float(args[1]), int(args[2]))
        if kind == "power_law":
            return power_law(int(args[0]), float(args[1]), int(args[2]))
    except (IndexError, ValueError) as exc:
        raise ValidationError(f"bad generator spec {spec!r}: {exc}") from None
    raise ValidationError(f"unknown generator kind {kind!r}")


def check_invariants(g: Graph) -> None:
    """Re-verify every structural invariant; raises ValidationError."""
    n = g.node_count
    if g.offsets[0] != 0 or np.any(np.diff(g.offsets) < 0):
        raise ValidationError("offsets not nondecreasing from 0")
    if g.offsets[-1] != g.neighbors.shape[0]:
        raise ValidationError("offsets[n] != len(neighbors)")
    if g.neighbors.size and (g.neighbors.min() < 0 or g.neighbors.max() >= n):
        raise ValidationError("neighbor id out of range")
    if np.any(g.degrees < 1):
        raise ValidationError(f"degree-0 node(s): {np.flatnonzero(g.degrees < 1)[:8].tolist()}")
    src = np.repeat(np.arange(n, dtype=np.int64), g.degrees)
    if np.any(src == g.neighbors):
        raise ValidationError("self-loop present")
    # sorted ascending and duplicate-free within each list
    if g.neighbors.size > 1:
        list_start = np.zeros(g.neighbors.size, dtype=bool)
        list_start[g.offsets[1:-1]] = True
        within = ~list_start[1:]
        if np.any(np.diff(g.neighbors)[within] <= 0):
            raise ValidationError("adjacency list not strictly ascending")
    fwd = np.sort(src * np.int64(n) + g.neighbors)
    rev = np.sort(g.neighbors * np.int64(n) + src)
    if not np.array_equal(fwd, rev):
        raise ValidationError("adjacency not symmetric")


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)
