"""Approximation algorithms for nonnegative rewards.

Two routes: (i) a proper coloring of the squared graph gives color classes
whose closed neighborhoods are pairwise disjoint, so stitching each class's
local maximizers yields a 1/q-approximation; (ii) BFS-layer shifting removes
every k-th layer, solves the kept components exactly, and keeps the best of
the k offsets, losing at most 3/k of the optimum because each vertex is unsafe
for at most three offsets.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cfdp import solve_pipeline
from .errors import CapExceeded
from .graph import BfsLayering, Graph, bfs_layering, graph_power, square_graph
from .rewards import (
    ConstantOracle,
    Labeling,
    RewardSystem,
    TableOracle,
    decode_assignment,
)

DEFAULT_VERTEX_ENUM_CAP = 1 << 22
_REL_TOL = 1e-9

DEFAULT_LABEL = 0  # background label used wherever "any label" would do


@dataclass(frozen=True)
class ProperColoring:
    """Vertex coloring of a target graph with colors 0..q-1 and no monochromatic edge."""

    color: tuple[int, ...]
    q: int


def greedy_coloring(h: Graph) -> ProperColoring:
    """Process vertices in ascending identifier order, assigning the smallest
    color not used by an already-colored neighbor. Uses at most max_degree+1 colors."""
    color = [-1] * h.n
    for v in range(h.n):
        taken = {color[u] for u in h.neighbors(v) if color[u] >= 0}
        c = 0
        while c in taken:
            c += 1
        color[v] = c
    q = max(color, default=-1) + 1
    return ProperColoring(tuple(color), max(q, 1))


def coloring_violations(coloring: ProperColoring, h: Graph) -> list[tuple[int, int]]:
    """Monochromatic edges of h; empty when the coloring is proper."""
    return [(u, v) for u, v in h.edges() if coloring.color[u] == coloring.color[v]]


def read_coloring(source, n: int) -> ProperColoring:
    """`vertex color` pairs, one per line, `#` comments. Colors are compacted to 0..q-1."""
    from .graph import _read_source

    text = _read_source(source)
    color = [-1] * n
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"coloring line {lineno}: expected 'vertex color'")
        v, c = int(parts[0]), int(parts[1])
        if not 0 <= v < n:
            raise ValueError(f"coloring line {lineno}: vertex {v} out of range")
        if c < 0:
            raise ValueError(f"coloring line {lineno}: negative color")
        color[v] = c
    if any(c < 0 for c in color):
        missing = [v for v, c in enumerate(color) if c < 0]
        raise ValueError(f"coloring is missing vertices {missing[:10]}")
    distinct = sorted(set(color))
    remap = {c: i for i, c in enumerate(distinct)}
    return ProperColoring(tuple(remap[c] for c in color), len(distinct))


def enumeration_cost(g: Graph, L: int) -> int:
    """Oracle evaluations needed to maximize every vertex's local table."""
    return sum(L ** len(g.closed_neighborhood(v)) for v in range(g.n))


def coloring_approx(
    g: Graph,
    rs: RewardSystem,
    coloring: ProperColoring,
    max_states_per_vertex: int = DEFAULT_VERTEX_ENUM_CAP,
) -> Labeling:
    """Stitch the best color class's per-vertex maximizers over a default background.

    Requires nonnegative rewards and a coloring proper on the squared graph.
    The returned labeling achieves at least a 1/q fraction of the optimum.
    """
    if not rs.all_nonnegative:
        raise ValueError("coloring approximation requires nonnegative rewards")
    if len(coloring.color) != g.n:
        raise ValueError("coloring does not cover the vertex set")
    h = square_graph(g)
    bad = coloring_violations(coloring, h)
    if bad:
        raise ValueError(f"coloring not proper on the squared graph, e.g. edges {bad[:5]}")

    L = rs.L
    best_value = np.zeros(g.n)
    best_assignment: list[tuple[int, ...]] = []
    for v in range(g.n):
        table = rs.table(v, max_entries=max_states_per_vertex)
        arg = int(np.argmax(table))  # first occurrence = smallest encoding
        best_value[v] = table[arg]
        best_assignment.append(decode_assignment(arg, L, len(rs.neighborhood(v))))

    class_score = np.zeros(coloring.q)
    for v in range(g.n):
        class_score[coloring.color[v]] += best_value[v]
    winner = int(np.argmax(class_score))

    labels = np.full(g.n, DEFAULT_LABEL, dtype=np.int64)
    prescribed = np.zeros(g.n, dtype=bool)
    for v in range(g.n):
        if coloring.color[v] != winner:
            continue
        for u, lab in zip(rs.neighborhood(v), best_assignment[v]):
            if prescribed[u]:
                raise AssertionError(
                    f"vertex {u} prescribed twice; disjointness of class neighborhoods violated"
                )
            prescribed[u] = True
            labels[u] = lab
    labeling = Labeling(labels)
    value = rs.evaluate_total(labeling)
    if value < class_score[winner] * (1 - _REL_TOL) - _REL_TOL:
        raise AssertionError("stitched labeling fell below its class score")
    return labeling


# ---------------------------------------------------------------------------
# BFS-layer shifting


@dataclass(frozen=True)
class ShiftScheme:
    """One offset of the shifting scheme: removed layer class, safe set, and the
    connected components of the kept subgraph."""

    k: int
    offset: int
    removed: tuple[int, ...]
    kept: tuple[int, ...]
    safe: tuple[int, ...]
    components: tuple[tuple[int, ...], ...]


def shift_scheme(g: Graph, layering: BfsLayering, k: int, s: int, radius: int = 1) -> ShiftScheme:
    """Remove layers congruent to s mod k; safe vertices have no removed vertex
    within `radius`; components computed by union-find over kept vertices."""
    if k < 2 * radius + 1:
        raise ValueError(f"period k={k} must be at least {2 * radius + 1}")
    if not 0 <= s < k:
        raise ValueError("offset out of range")
    if layering.unreachable:
        raise ValueError("layering does not cover the graph; run per component")
    removed = [v for v in range(g.n) if layering.layer[v] % k == s]
    removed_mask = np.zeros(g.n, dtype=bool)
    removed_mask[removed] = True
    kept = [v for v in range(g.n) if not removed_mask[v]]

    # multi-source BFS to distance `radius` marks unsafe kept vertices
    dist = {v: 0 for v in removed}
    frontier = deque(removed)
    while frontier:
        v = frontier.popleft()
        if dist[v] == radius:
            continue
        for u in g.neighbors(v):
            if u not in dist:
                dist[u] = dist[v] + 1
                frontier.append(u)
    safe = [v for v in kept if v not in dist]

    parent = list(range(g.n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for v in kept:
        for u in g.neighbors(v):
            if u > v and not removed_mask[u]:
                ra, rb = find(u), find(v)
                if ra != rb:
                    parent[ra] = rb
    groups: dict[int, list[int]] = {}
    for v in kept:
        groups.setdefault(find(v), []).append(v)
    components = tuple(tuple(sorted(grp)) for grp in sorted(groups.values(), key=min))
    return ShiftScheme(k, s, tuple(removed), tuple(kept), tuple(safe), components)


def _component_instance(
    g: Graph, rs: RewardSystem, component: tuple[int, ...], safe: set, radius: int
) -> tuple[Graph, RewardSystem, dict[int, int]]:
    """Induced instance on one kept component; unsafe vertices get zero rewards.

    The component is relabeled monotonically so sorted neighborhoods (and thus
    table encodings) carry over unchanged for safe vertices.
    """
    base, mapping = g.induced_subgraph(component)
    old_to_new = {old: new for new, old in enumerate(mapping)}
    instance_graph = base if radius == 1 else graph_power(base, radius)
    oracles = []
    for old in component:
        if old in safe:
            oracles.append(TableOracle(rs.table(old)))
        else:
            oracles.append(ConstantOracle(0.0))
    return instance_graph, RewardSystem(instance_graph, rs.L, oracles), old_to_new


def baker_ptas(
    g: Graph,
    rs: RewardSystem,
    epsilon: float,
    root: int = 0,
    radius: int = 1,
    width_cap: int | None = None,
    threads: int = 1,
    offset_log: list | None = None,
) -> Labeling:
    """Shifting scheme: try k = ceil((2*radius+1)/epsilon) offsets, solve each
    kept component exactly, and return the best candidate under the full
    objective. With nonnegative rewards the result is within (1 - epsilon) of
    the optimum; the polynomial runtime bound additionally assumes a planar
    bounded-degree input, which is not verified here.

    For radius > 1 the reward system must be built over graph_power(g, radius).
    """
    if not rs.all_nonnegative:
        raise ValueError("shifting approximation requires nonnegative rewards")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if not 0 <= root < max(g.n, 1):
        raise ValueError("root out of range")
    if radius == 1:
        if rs.graph != g:
            raise ValueError("reward system is not defined over this graph")
    elif rs.graph != graph_power(g, radius):
        raise ValueError("radius-p shifting needs rewards over graph_power(g, p)")
    k = shifting_period(epsilon, radius)

    if g.n == 0:
        return Labeling(np.zeros(0, dtype=np.int64), 0.0)

    labels = np.full(g.n, DEFAULT_LABEL, dtype=np.int64)
    for comp in g.connected_components():
        comp_root = root if root in comp else comp[0]
        comp_labels = _baker_component(
            g, rs, comp, comp_root, k, radius, width_cap, threads, offset_log
        )
        labels[list(comp)] = comp_labels
    labeling = Labeling(labels)
    rs.evaluate_total(labeling)
    return labeling


def _baker_component(
    g: Graph,
    rs: RewardSystem,
    component: tuple[int, ...],
    root: int,
    k: int,
    radius: int,
    width_cap: int | None,
    threads: int,
    offset_log: list | None,
) -> np.ndarray:
    """Best-of-k-offsets labels for one connected component (in component order)."""
    base, mapping = g.induced_subgraph(component)
    old_to_new = {old: new for new, old in enumerate(mapping)}
    comp_graph = base if radius == 1 else graph_power(base, radius)
    comp_oracles = [rs.oracles[old] for old in component]
    comp_rs = RewardSystem(comp_graph, rs.L, comp_oracles)
    layering = bfs_layering(base, old_to_new[root])

    def run_offset(s: int) -> tuple[float, float, np.ndarray]:
        scheme = shift_scheme(base, layering, k, s, radius)
        candidate = np.full(base.n, DEFAULT_LABEL, dtype=np.int64)
        safe = set(scheme.safe)
        for micro in scheme.components:
            sub_graph, sub_rs, sub_map = _component_instance(base, comp_rs, micro, safe, radius)
            result = solve_pipeline(sub_graph, sub_rs, width_cap=width_cap)
            for old, new in sub_map.items():
                candidate[old] = result.labeling.labels[new]
        full_value = comp_rs.evaluate_total(candidate)
        safe_value = sum(
            comp_rs.evaluate_local(v, candidate[np.array(comp_rs.neighborhood(v))])
            for v in scheme.safe
        )
        if full_value < safe_value * (1 - _REL_TOL) - _REL_TOL:
            raise AssertionError("dropping nonnegative terms increased the objective")
        return full_value, safe_value, candidate

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_offset, range(k)))
    else:
        outcomes = [run_offset(s) for s in range(k)]

    best_value = -np.inf
    best_labels = None
    for s, (full_value, safe_value, candidate) in enumerate(outcomes):
        if offset_log is not None:
            offset_log.append(
                {"offset": s, "value": full_value, "safe_value": safe_value, "k": k}
            )
        if full_value > best_value:
            best_value = full_value
            best_labels = candidate
    return best_labels
