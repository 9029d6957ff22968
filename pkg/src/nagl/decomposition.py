"""Tree decompositions: validation, min-fill construction, nice form, PACE files.

The dynamic program consumes a *nice* decomposition of the squared graph plus
an assignment of every vertex's closed neighborhood to one bag that contains
it. Everything here is deterministic: min-fill breaks ties by
(fill, degree, identifier), the nice conversion orders forgets by descending
and introduces by ascending identifier, and bag ownership picks the earliest
node in postorder.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

from .graph import Graph

LEAF = "leaf"
INTRODUCE = "introduce"
FORGET = "forget"
JOIN = "join"


@dataclass(frozen=True)
class TreeDecomposition:
    """Bags over a graph on `n` vertices connected by tree edges between bag indices."""

    n: int
    bags: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def bag_adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.bags]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj


@dataclass
class DecompositionReport:
    """Outcome of checking the three decomposition conditions plus tree shape."""

    missing_vertices: list[int] = field(default_factory=list)
    uncovered_edges: list[tuple[int, int]] = field(default_factory=list)
    disconnected_vertices: list[int] = field(default_factory=list)
    not_a_tree: bool = False

    @property
    def ok(self) -> bool:
        return not (
            self.missing_vertices
            or self.uncovered_edges
            or self.disconnected_vertices
            or self.not_a_tree
        )

    def __str__(self) -> str:
        if self.ok:
            return "valid tree decomposition"
        parts = []
        if self.not_a_tree:
            parts.append("bag graph is not a tree")
        if self.missing_vertices:
            parts.append(f"vertices in no bag: {self.missing_vertices}")
        if self.uncovered_edges:
            parts.append(f"edges in no bag: {self.uncovered_edges}")
        if self.disconnected_vertices:
            parts.append(f"vertices with disconnected bag sets: {self.disconnected_vertices}")
        return "; ".join(parts)


def validate(td: TreeDecomposition, h: Graph) -> DecompositionReport:
    """Check coverage, edge coverage, and connectivity of occurrence sets."""
    report = DecompositionReport()
    b = len(td.bags)
    # tree shape: connected and |edges| == bags - 1
    adj = td.bag_adjacency()
    if b:
        seen = [False] * b
        queue = deque([0])
        seen[0] = True
        count = 1
        while queue:
            i = queue.popleft()
            for j in adj[i]:
                if not seen[j]:
                    seen[j] = True
                    count += 1
                    queue.append(j)
        if count != b or len(td.edges) != b - 1:
            report.not_a_tree = True
    bag_sets = [set(bag) for bag in td.bags]
    occurrence: list[list[int]] = [[] for _ in range(h.n)]
    for i, bag in enumerate(td.bags):
        for v in bag:
            if not 0 <= v < h.n:
                raise ValueError(f"bag {i} contains vertex {v}, graph has n={h.n}")
            occurrence[v].append(i)
    for v in range(h.n):
        if not occurrence[v]:
            report.missing_vertices.append(v)
    for u, v in h.edges():
        if not any(u in bag_sets[i] and v in bag_sets[i] for i in occurrence[u]):
            report.uncovered_edges.append((u, v))
    if not report.not_a_tree:
        for v in range(h.n):
            nodes = occurrence[v]
            if len(nodes) <= 1:
                continue
            members = set(nodes)
            queue = deque([nodes[0]])
            reached = {nodes[0]}
            while queue:
                i = queue.popleft()
                for j in adj[i]:
                    if j in members and j not in reached:
                        reached.add(j)
                        queue.append(j)
            if len(reached) != len(nodes):
                report.disconnected_vertices.append(v)
    return report


# ---------------------------------------------------------------------------
# min-fill elimination ordering


def _fill_count(adj: list[set[int]], v: int) -> int:
    nb = list(adj[v])
    count = 0
    for i in range(len(nb)):
        ai = adj[nb[i]]
        for j in range(i + 1, len(nb)):
            if nb[j] not in ai:
                count += 1
    return count


def min_fill_decomposition(h: Graph) -> TreeDecomposition:
    """Elimination-ordering decomposition with (fill, degree, identifier) tie-breaking.

    Eliminating v creates the bag {v} union N(v) in the current (filled) graph;
    bags are wired by the standard elimination-tree rule. The reported width is
    an upper bound on the treewidth of h. Only vertices within distance two of
    an elimination have their heap keys recomputed; the selection sequence is
    identical to full recomputation.
    """
    n = h.n
    if n == 0:
        return TreeDecomposition(0, ((),), ())
    adj: list[set[int]] = [set(h.neighbors(v)) for v in range(n)]
    alive = [True] * n
    version = [0] * n
    heap: list[tuple[int, int, int, int]] = []
    for v in range(n):
        heapq.heappush(heap, (_fill_count(adj, v), len(adj[v]), v, 0))

    position = [0] * n  # elimination rank
    elim_bags: list[tuple[int, ...]] = []
    order: list[int] = []
    for rank in range(n):
        while True:
            fill, deg, v, ver = heapq.heappop(heap)
            if alive[v] and ver == version[v]:
                break
        alive[v] = False
        position[v] = rank
        order.append(v)
        nb = sorted(adj[v])
        elim_bags.append(tuple(sorted([v] + nb)))
        # connect the remaining neighbors into a clique
        added_fill = False
        for i in range(len(nb)):
            a = nb[i]
            for j in range(i + 1, len(nb)):
                b = nb[j]
                if b not in adj[a]:
                    adj[a].add(b)
                    adj[b].add(a)
                    added_fill = True
        affected = set(nb)
        if added_fill:
            for w in nb:
                affected.update(adj[w])
        affected.discard(v)
        for w in nb:
            adj[w].discard(v)
        for w in affected:
            if alive[w]:
                version[w] += 1
                heapq.heappush(heap, (_fill_count(adj, w), len(adj[w]), w, version[w]))

    # elimination tree: bag of v hangs off the bag of its earliest-eliminated
    # later neighbor; component roots are chained to keep one tree
    edges = []
    roots = []
    for rank, v in enumerate(order):
        later = [u for u in elim_bags[rank] if u != v]
        if later:
            parent = min(later, key=lambda u: position[u])
            edges.append((rank, position[parent]))
        else:
            roots.append(rank)
    for a, b in zip(roots, roots[1:]):
        edges.append((a, b))
    return TreeDecomposition(n, tuple(elim_bags), tuple(tuple(sorted(e)) for e in edges))


# ---------------------------------------------------------------------------
# nice tree decompositions


class NiceTreeDecomposition:
    """Rooted decomposition of leaf/introduce/forget/join nodes with empty root
    and leaf bags. Construct through make_nice; immutable afterwards."""

    def __init__(self):
        self.kinds: list[str] = []
        self.bags: list[tuple[int, ...]] = []
        self.children: list[tuple[int, ...]] = []
        self.vertex: list[int | None] = []  # introduced/forgotten vertex
        self.root: int = -1
        self._postorder: tuple[int, ...] | None = None

    def _add(self, kind: str, bag: tuple[int, ...], children: tuple[int, ...], vertex=None) -> int:
        self.kinds.append(kind)
        self.bags.append(bag)
        self.children.append(children)
        self.vertex.append(vertex)
        return len(self.kinds) - 1

    def __len__(self):
        return len(self.kinds)

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def postorder(self) -> tuple[int, ...]:
        """Children before parents, left child subtree first."""
        if self._postorder is None:
            out = []
            stack: list[tuple[int, bool]] = [(self.root, False)]
            while stack:
                node, expanded = stack.pop()
                if expanded:
                    out.append(node)
                else:
                    stack.append((node, True))
                    for c in reversed(self.children[node]):
                        stack.append((c, False))
            self._postorder = tuple(out)
        return self._postorder

    def height(self) -> int:
        """Edges on the longest root-to-leaf path."""
        depth = [0] * len(self.kinds)
        best = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            for c in self.children[node]:
                depth[c] = depth[node] + 1
                if depth[c] > best:
                    best = depth[c]
                stack.append(c)
        return best

    def to_tree_decomposition(self, n: int) -> TreeDecomposition:
        edges = []
        for i, kids in enumerate(self.children):
            edges.extend((min(i, c), max(i, c)) for c in kids)
        return TreeDecomposition(n, tuple(self.bags), tuple(edges))


def make_nice(td: TreeDecomposition, root_bag: int = 0) -> NiceTreeDecomposition:
    """Convert a decomposition into nice form of the same width.

    Rooted at `root_bag`. Between a lower bag A and its upper neighbor B the
    chain applies all forgets of A\\B in descending identifier order, then all
    introduces of B\\A in ascending order; leaves extend down to empty bags by
    ascending introduces and the root is reached by descending forgets. Joins
    duplicate the shared bag, folding children right to left. Node count is at
    most 4*(sum of bag sizes) + O(bags), i.e. O(n * width) for elimination
    decompositions.
    """
    if not td.bags:
        raise ValueError("decomposition has no bags")
    if not 0 <= root_bag < len(td.bags):
        raise ValueError("root bag out of range")
    ntd = NiceTreeDecomposition()
    adj = td.bag_adjacency()

    def chain_up(top: int, lower: tuple[int, ...], upper: tuple[int, ...]) -> int:
        """Append forget/introduce nodes transforming bag `lower` into `upper`."""
        bag = list(lower)
        for v in sorted(set(lower) - set(upper), reverse=True):
            bag.remove(v)
            top = ntd._add(FORGET, tuple(bag), (top,), v)
        for v in sorted(set(upper) - set(lower)):
            bag.append(v)
            bag.sort()
            top = ntd._add(INTRODUCE, tuple(bag), (top,), v)
        return top

    # root the bag tree at root_bag (iterative: deep path decompositions are common)
    parent = [-2] * len(td.bags)
    parent[root_bag] = -1
    bfs_order = [root_bag]
    queue = deque([root_bag])
    while queue:
        i = queue.popleft()
        for j in adj[i]:
            if parent[j] == -2:
                parent[j] = i
                bfs_order.append(j)
                queue.append(j)
    if len(bfs_order) != len(td.bags) or len(td.edges) != len(td.bags) - 1:
        raise ValueError("invalid input decomposition: bag graph is not a tree")
    children_of: list[list[int]] = [[] for _ in td.bags]
    for i in bfs_order[1:]:
        children_of[parent[i]].append(i)

    top_of: dict[int, int] = {}  # bag index -> node whose bag equals that bag
    for i in reversed(bfs_order):
        bag = tuple(sorted(td.bags[i]))
        branches = [
            chain_up(top_of[c], tuple(sorted(td.bags[c])), bag) for c in children_of[i]
        ]
        if not branches:
            leaf = ntd._add(LEAF, (), ())
            top_of[i] = chain_up(leaf, (), bag)
        else:
            top = branches[-1]
            for other in reversed(branches[:-1]):
                top = ntd._add(JOIN, bag, (other, top))
            top_of[i] = top
    ntd.root = chain_up(top_of[root_bag], tuple(sorted(td.bags[root_bag])), ())
    return ntd


def validate_nice(ntd: NiceTreeDecomposition, n: int) -> list[str]:
    """Structural check of the four node templates; empty list when sound."""
    problems = []
    if ntd.bags[ntd.root]:
        problems.append("root bag not empty")
    for i, kind in enumerate(ntd.kinds):
        bag = ntd.bags[i]
        kids = ntd.children[i]
        if tuple(sorted(bag)) != bag:
            problems.append(f"node {i}: bag not sorted")
        if kind == LEAF:
            if kids or bag:
                problems.append(f"node {i}: leaf must have empty bag and no children")
        elif kind == INTRODUCE:
            if len(kids) != 1:
                problems.append(f"node {i}: introduce needs one child")
            else:
                child = set(ntd.bags[kids[0]])
                a = ntd.vertex[i]
                if a in child or set(bag) != child | {a}:
                    problems.append(f"node {i}: introduce template violated")
        elif kind == FORGET:
            if len(kids) != 1:
                problems.append(f"node {i}: forget needs one child")
            else:
                child = set(ntd.bags[kids[0]])
                a = ntd.vertex[i]
                if a not in child or set(bag) != child - {a}:
                    problems.append(f"node {i}: forget template violated")
        elif kind == JOIN:
            if len(kids) != 2 or any(ntd.bags[c] != bag for c in kids):
                problems.append(f"node {i}: join template violated")
        else:
            problems.append(f"node {i}: unknown kind {kind!r}")
    td_view = ntd.to_tree_decomposition(n)
    report = validate(td_view, Graph(n))  # structural conditions only need coverage
    if report.not_a_tree:
        problems.append("node graph is not a tree")
    if report.missing_vertices:
        problems.append(f"vertices missing from all bags: {report.missing_vertices}")
    if report.disconnected_vertices:
        problems.append(f"disconnected occurrence sets: {report.disconnected_vertices}")
    return problems


# ---------------------------------------------------------------------------
# assigning reward terms to bags


@dataclass(frozen=True)
class BagAssignment:
    """For every vertex, one node whose bag contains its closed neighborhood."""

    beta: tuple[int, ...]
    owners: tuple[tuple[int, ...], ...]  # owners[i] = vertices assigned to node i


def assign_bags(ntd: NiceTreeDecomposition, g: Graph) -> BagAssignment:
    """Map each vertex to the earliest postorder node whose bag covers N[v].

    Such a node exists whenever the decomposition really decomposes the squared
    graph (closed neighborhoods are cliques there); otherwise this raises.
    """
    order = ntd.postorder()
    bag_sets = [frozenset(bag) for bag in ntd.bags]
    occurrence: list[list[int]] = [[] for _ in range(g.n)]  # postorder ranks per vertex
    for rank, node in enumerate(order):
        for v in ntd.bags[node]:
            occurrence[v].append(rank)
    beta = []
    owners: list[list[int]] = [[] for _ in range(len(ntd))]
    for v in range(g.n):
        nb = g.closed_neighborhood(v)
        pivot = min(nb, key=lambda u: len(occurrence[u]))
        need = frozenset(nb)
        chosen = None
        for rank in occurrence[pivot]:
            node = order[rank]
            if need <= bag_sets[node]:
                chosen = node
                break
        if chosen is None:
            raise ValueError(
                f"no bag contains the closed neighborhood of vertex {v}; "
                "the decomposition does not decompose the squared graph"
            )
        beta.append(chosen)
        owners[chosen].append(v)
    return BagAssignment(tuple(beta), tuple(tuple(o) for o in owners))


# ---------------------------------------------------------------------------
# PACE 2017 .td format


def write_pace(td: TreeDecomposition) -> str:
    """PACE 2017 text: 1-based bag ids and vertex ids, bags then tree edges."""
    width_plus_1 = max((len(b) for b in td.bags), default=0)
    lines = [f"s td {len(td.bags)} {width_plus_1} {td.n}"]
    for i, bag in enumerate(td.bags, start=1):
        entries = " ".join(str(v + 1) for v in bag)
        lines.append(f"b {i} {entries}".rstrip())
    for i, j in sorted(td.edges):
        lines.append(f"{i + 1} {j + 1}")
    return "\n".join(lines) + "\n"


def read_pace(source) -> TreeDecomposition:
    """Parse PACE 2017 .td text; checks header consistency against the bags."""
    from .graph import _read_source

    text = _read_source(source)
    header = None
    bags: dict[int, tuple[int, ...]] = {}
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "s":
            if header is not None:
                raise ValueError(f"line {lineno}: duplicate solution line")
            if len(parts) != 5 or parts[1] != "td":
                raise ValueError(f"line {lineno}: malformed solution line {line!r}")
            header = (int(parts[2]), int(parts[3]), int(parts[4]))
        elif parts[0] == "b":
            if header is None:
                raise ValueError(f"line {lineno}: bag before solution line")
            bag_id = int(parts[1])
            if bag_id in bags:
                raise ValueError(f"line {lineno}: duplicate bag id {bag_id}")
            bags[bag_id] = tuple(sorted(int(tok) - 1 for tok in parts[2:]))
        else:
            if header is None:
                raise ValueError(f"line {lineno}: edge before solution line")
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: malformed tree edge {line!r}")
            edges.append((int(parts[0]) - 1, int(parts[1]) - 1))
    if header is None:
        raise ValueError("no solution line in .td input")
    num_bags, width_plus_1, n = header
    if set(bags) != set(range(1, num_bags + 1)):
        raise ValueError(f"expected bag ids 1..{num_bags}, got {sorted(bags)}")
    ordered = tuple(bags[i] for i in range(1, num_bags + 1))
    actual = max((len(b) for b in ordered), default=0)
    if actual != width_plus_1:
        raise ValueError(
            f"header declares width+1 = {width_plus_1} but the largest bag has {actual} vertices"
        )
    for bag in ordered:
        for v in bag:
            if not 0 <= v < n:
                raise ValueError(f"bag vertex {v + 1} outside 1..{n}")
    for i, j in edges:
        if not (0 <= i < num_bags and 0 <= j < num_bags):
            raise ValueError(f"tree edge ({i + 1}, {j + 1}) references unknown bags")
    return TreeDecomposition(n, ordered, tuple(tuple(sorted(e)) for e in edges))


def import_pace(source, h: Graph) -> TreeDecomposition:
    """Read a .td file and validate it against the graph it should decompose."""
    td = read_pace(source)
    if td.n != h.n:
        raise ValueError(f".td file is for {td.n} vertices, graph has {h.n}")
    report = validate(td, h)
    if not report.ok:
        raise ValueError(f"imported decomposition invalid: {report}")
    return td
