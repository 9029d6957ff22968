"""Immutable undirected graphs, graph powers, BFS utilities and file readers.

Vertices are dense integers 0..n-1. External identifiers from input files are
remapped on ingestion; readers return the new->old mapping so results can be
reported in the caller's coordinates.
"""

from __future__ import annotations

from bisect import insort
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence


class Graph:
    """Undirected simple graph with sorted adjacency lists, immutable after construction."""

    __slots__ = ("n", "_adj", "_m")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            adj[u].add(v)
            adj[v].add(u)
        self.n = n
        self._adj = tuple(tuple(sorted(s)) for s in adj)
        self._m = sum(len(a) for a in self._adj) // 2

    @property
    def m(self) -> int:
        return self._m

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def closed_neighborhood(self, v: int) -> tuple[int, ...]:
        """N[v] = {v} union N(v), sorted ascending."""
        nb = list(self._adj[v])
        insort(nb, v)
        return tuple(nb)

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (u, v) with u < v, lexicographically sorted."""
        return [(u, v) for u in range(self.n) for v in self._adj[u] if u < v]

    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        return self._adj

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def induced_subgraph(self, vertices: Sequence[int]) -> tuple["Graph", tuple[int, ...]]:
        """Induced subgraph on `vertices`, relabeled 0..k-1 in the given order.

        Returns the subgraph and the new->old identifier mapping. Pass the
        vertices in ascending order to keep the relabeling monotone.
        """
        old_to_new = {old: new for new, old in enumerate(vertices)}
        if len(old_to_new) != len(vertices):
            raise ValueError("duplicate vertices in induced_subgraph")
        sub_edges = []
        for new_u, old_u in enumerate(vertices):
            for old_v in self._adj[old_u]:
                new_v = old_to_new.get(old_v)
                if new_v is not None and new_u < new_v:
                    sub_edges.append((new_u, new_v))
        return Graph(len(vertices), sub_edges), tuple(vertices)

    def connected_components(self) -> tuple[tuple[int, ...], ...]:
        """Components as sorted vertex tuples, ordered by smallest member."""
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            comp = []
            queue = deque([s])
            seen[s] = True
            while queue:
                v = queue.popleft()
                comp.append(v)
                for u in self._adj[v]:
                    if not seen[u]:
                        seen[u] = True
                        queue.append(u)
            comps.append(tuple(sorted(comp)))
        return tuple(comps)

    def __eq__(self, other):
        if isinstance(other, Graph):
            return self.n == other.n and self._adj == other._adj
        return NotImplemented

    def __hash__(self):
        return hash((self.n, self._adj))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self._m})"


def max_degree(g: Graph) -> int:
    """Maximum vertex degree; 0 on edgeless (or empty) graphs."""
    return max((len(g.neighbors(v)) for v in range(g.n)), default=0)


def square_graph(g: Graph) -> Graph:
    """Graph on the same vertices with edges between all pairs at distance 1 or 2.

    Built as the per-vertex union of neighbor-of-neighbor sets, which is
    near-linear on sparse bounded-degree inputs.
    """
    edges = []
    for v in range(g.n):
        reach = set(g.neighbors(v))
        for u in g.neighbors(v):
            reach.update(g.neighbors(u))
        reach.discard(v)
        edges.extend((v, u) for u in reach if v < u)
    return Graph(g.n, edges)


def graph_power(g: Graph, p: int) -> Graph:
    """Edges between all distinct pairs at distance <= p. graph_power(g, 2) == square_graph(g)."""
    if p < 1:
        raise ValueError("power must be >= 1")
    if p == 1:
        return g
    edges = []
    for v in range(g.n):
        # BFS truncated at depth p
        dist = {v: 0}
        queue = deque([v])
        while queue:
            w = queue.popleft()
            if dist[w] == p:
                continue
            for u in g.neighbors(w):
                if u not in dist:
                    dist[u] = dist[w] + 1
                    queue.append(u)
        edges.extend((v, u) for u in dist if v < u)
    return Graph(g.n, edges)


@dataclass(frozen=True)
class BfsLayering:
    """Distance layering from a root; unreachable vertices carry layer None."""

    root: int
    layer: tuple  # per-vertex distance from root, None when unreachable
    layers: tuple[tuple[int, ...], ...]  # layers[i] = sorted vertices at distance i
    unreachable: tuple[int, ...]

    @property
    def depth(self) -> int:
        """Largest distance present (-1 when the root itself is the whole layering)."""
        return len(self.layers) - 1


def bfs_layering(g: Graph, root: int) -> BfsLayering:
    """BFS layers from `root` with deterministic ascending-identifier neighbor order."""
    if not 0 <= root < g.n:
        raise ValueError(f"root {root} out of range for n={g.n}")
    layer: list = [None] * g.n
    layer[root] = 0
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v):  # adjacency already sorted ascending
            if layer[u] is None:
                layer[u] = layer[v] + 1
                queue.append(u)
    depth = max((d for d in layer if d is not None), default=0)
    layers: list[list[int]] = [[] for _ in range(depth + 1)]
    unreachable = []
    for v in range(g.n):
        if layer[v] is None:
            unreachable.append(v)
        else:
            layers[layer[v]].append(v)
    return BfsLayering(
        root=root,
        layer=tuple(layer),
        layers=tuple(tuple(lay) for lay in layers),
        unreachable=tuple(unreachable),
    )


def bfs_visit_order(g: Graph, root: int) -> list[int]:
    """FIFO BFS visit order, neighbors enqueued in ascending identifier order."""
    if not 0 <= root < g.n:
        raise ValueError(f"root {root} out of range for n={g.n}")
    seen = [False] * g.n
    seen[root] = True
    order = []
    queue = deque([root])
    while queue:
        v = queue.popleft()
        order.append(v)
        for u in g.neighbors(v):
            if not seen[u]:
                seen[u] = True
                queue.append(u)
    return order


def bfs_induced_prefix(g: Graph, root: int, n_target: int) -> tuple[Graph, tuple[int, ...]]:
    """Induced subgraph on the first `n_target` vertices of the BFS visit order.

    Prefixes are nested: the size-n vertex sequence is a prefix of any larger
    one from the same root. Returns the subgraph (vertices renumbered by visit
    rank) and the new->old mapping.
    """
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    order = bfs_visit_order(g, root)
    if n_target > len(order):
        raise ValueError(
            f"n_target={n_target} exceeds the {len(order)} vertices reachable from {root}"
        )
    return g.induced_subgraph(order[:n_target])


@dataclass(frozen=True)
class LoadedGraph:
    """A graph read from a file plus ingestion bookkeeping."""

    graph: Graph
    vertex_ids: tuple[int, ...]  # new -> original identifier from the file
    dropped_self_loops: int
    dropped_duplicates: int

    def original_to_internal(self, original: int) -> int:
        index = {old: new for new, old in enumerate(self.vertex_ids)}
        try:
            return index[original]
        except KeyError:
            raise ValueError(f"vertex {original} not present in the input file") from None


def _build_loaded(raw_edges: list[tuple[int, int]], ids: Sequence[int]) -> LoadedGraph:
    ids = sorted(set(ids))
    old_to_new = {old: new for new, old in enumerate(ids)}
    loops = 0
    dupes = 0
    seen = set()
    edges = []
    for a, b in raw_edges:
        if a == b:
            loops += 1
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            dupes += 1
            continue
        seen.add(key)
        edges.append((old_to_new[a], old_to_new[b]))
    return LoadedGraph(Graph(len(ids), edges), tuple(ids), loops, dupes)


def _read_source(source) -> str:
    """Accept a filesystem path or already-loaded text."""
    if isinstance(source, Path):
        return source.read_text()
    text = str(source)
    if "\n" not in text:
        try:
            if Path(text).exists():
                return Path(text).read_text()
        except OSError:
            pass
    return text


def read_edge_list(source) -> LoadedGraph:
    """Plain `u v` per line text format; `#` starts a comment. Identifiers arbitrary ints."""
    text = _read_source(source)
    raw = []
    ids = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"edge list line {lineno}: expected 'u v', got {line!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"edge list line {lineno}: non-integer vertex in {line!r}") from None
        raw.append((a, b))
        ids.extend((a, b))
    return _build_loaded(raw, ids)


def write_edge_list(g: Graph, vertex_ids: Sequence[int] | None = None) -> str:
    """Inverse of read_edge_list; optional new->old mapping restores file identifiers."""
    out = []
    for u, v in g.edges():
        if vertex_ids is not None:
            u, v = vertex_ids[u], vertex_ids[v]
        out.append(f"{u} {v}")
    return "\n".join(out) + ("\n" if out else "")


def read_matrix_market(source) -> LoadedGraph:
    """MatrixMarket coordinate files treated as undirected unweighted graphs.

    Accepts pattern/real/integer fields and general/symmetric symmetry; entry
    values are ignored. Vertex identifiers in the file are 1-based and are
    preserved in the mapping.
    """
    text = _read_source(source)
    lines = iter(text.splitlines())
    try:
        header = next(lines)
    except StopIteration:
        raise ValueError("empty MatrixMarket input") from None
    parts = header.split()
    if len(parts) < 4 or parts[0] != "%%MatrixMarket" or parts[1].lower() != "matrix":
        raise ValueError(f"not a MatrixMarket header: {header!r}")
    if parts[2].lower() != "coordinate":
        raise ValueError("only coordinate MatrixMarket format is supported")
    dims = None
    raw = []
    declared_nnz = 0
    for lineno, line in enumerate(lines, 2):
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        fields = line.split()
        if dims is None:
            if len(fields) != 3:
                raise ValueError(f"line {lineno}: expected 'rows cols nnz'")
            rows, cols, declared_nnz = (int(x) for x in fields)
            if rows != cols:
                raise ValueError(f"adjacency matrix must be square, got {rows}x{cols}")
            dims = rows
            continue
        if len(fields) < 2:
            raise ValueError(f"line {lineno}: malformed entry {line!r}")
        i, j = int(fields[0]), int(fields[1])
        if not (1 <= i <= dims and 1 <= j <= dims):
            raise ValueError(f"line {lineno}: entry ({i}, {j}) outside 1..{dims}")
        raw.append((i, j))
    if dims is None:
        raise ValueError("MatrixMarket input has no dimensions line")
    if declared_nnz != len(raw):
        raise ValueError(f"declared {declared_nnz} entries but found {len(raw)}")
    return _build_loaded(raw, range(1, dims + 1))
