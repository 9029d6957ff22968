"""Brute-force reference solvers. Deliberately obvious; used to check everything else."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import CapExceeded
from .graph import Graph
from .rewards import Labeling, RewardSystem

BRUTE_FORCE_CAP = 1 << 24
BUDGETED_CAP = 1 << 22
_CHUNK = 1 << 20


def brute_force_opt(
    g: Graph, rs: RewardSystem, max_evaluations: int = BRUTE_FORCE_CAP
) -> tuple[Labeling, float]:
    """Enumerate every labeling in mixed-radix order (index = sum x_v * L**v) and
    return the first maximizer."""
    n, L = g.n, rs.L
    total = L**n
    if total > max_evaluations:
        raise CapExceeded(f"brute force needs {total} evaluations (cap {max_evaluations})")
    if n == 0:
        return Labeling(np.zeros(0, dtype=np.int64), 0.0), 0.0

    neighborhoods = [rs.neighborhood(v) for v in range(n)]
    tables = [rs.table(v) for v in range(n)]
    best_value = -np.inf
    best_index = -1
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        values = np.zeros(len(idx), dtype=np.float64)
        for v in range(n):
            sub = np.zeros(len(idx), dtype=np.int64)
            for j, u in enumerate(neighborhoods[v]):
                sub += ((idx // L**u) % L) * L**j
            values += tables[v][sub]
        arg = int(np.argmax(values))
        if values[arg] > best_value:
            best_value = float(values[arg])
            best_index = start + arg
    labels = np.array([(best_index // L**v) % L for v in range(n)], dtype=np.int64)
    return Labeling(labels, best_value), best_value


def brute_force_budgeted(g: Graph, rs: RewardSystem, budget: int, max_sets: int = BUDGETED_CAP):
    """Enumerate all active sets of size <= budget (sizes ascending, each size in
    lexicographic order) and return the first maximizer as (ActiveSet, value)."""
    from .submod import ActiveSet

    if rs.L != 2:
        raise ValueError("budgeted enumeration needs a binary alphabet")
    n = g.n
    budget = min(budget, n)
    count = sum(_binomial(n, j) for j in range(budget + 1))
    if count > max_sets:
        raise CapExceeded(f"budgeted brute force needs {count} sets (cap {max_sets})")
    best_set: tuple[int, ...] = ()
    best_value = rs.evaluate_total(np.zeros(n, dtype=np.int64))
    for size in range(1, budget + 1):
        for members in combinations(range(n), size):
            x = np.zeros(n, dtype=np.int64)
            x[list(members)] = 1
            value = rs.evaluate_total(x)
            if value > best_value:
                best_value = value
                best_set = members
    return ActiveSet(best_set, best_value), best_value


def _binomial(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


def brute_force_treewidth(h: Graph, max_n: int = 8) -> int:
    """Exact treewidth by exhaustive search over elimination orderings.

    Standard memoization over eliminated subsets: the filled graph after
    eliminating S is determined by S alone (u and w become adjacent iff some
    path joins them through S), so the minimum over orderings decomposes by
    the set of already-eliminated vertices.
    """
    n = h.n
    if n > max_n:
        raise ValueError(f"exhaustive treewidth limited to n <= {max_n}, got {n}")
    if n == 0:
        return -1
    adj = [frozenset(h.neighbors(v)) for v in range(n)]

    def eliminated_degree(v: int, eliminated: int) -> int:
        # neighbors of v in the filled graph where `eliminated` is gone
        seen = 1 << v
        stack = [v]
        degree = 0
        while stack:
            w = stack.pop()
            for u in adj[w]:
                bit = 1 << u
                if seen & bit:
                    continue
                seen |= bit
                if eliminated & bit:
                    stack.append(u)
                else:
                    degree += 1
        return degree

    full = (1 << n) - 1

    @lru_cache(maxsize=None)
    def best(eliminated: int) -> int:
        if eliminated == full:
            return -1
        out = n
        for v in range(n):
            bit = 1 << v
            if eliminated & bit:
                continue
            width = max(eliminated_degree(v, eliminated), best(eliminated | bit))
            if width < out:
                out = width
        return out

    result = best(0)
    best.cache_clear()
    return result
