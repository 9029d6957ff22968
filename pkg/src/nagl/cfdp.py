"""Exact dynamic programming over a nice decomposition of the squared graph.

Tables are indexed by the shared mixed-radix encoding of bag labelings
(position j of the sorted bag has stride L**j). A flat table of length L**b
reshaped C-style to (L,)*b puts the bag's vertices on the axes in descending
order, which lets reward tables, introduces and forgets all run as plain
numpy broadcasting along axes:

  * a reward table over N[v] (a subsequence of the bag) broadcast-adds after
    inserting singleton axes for the bag vertices outside N[v];
  * introduce expands a new axis; forget maxes an axis out (argmax keeps the
    first, i.e. smallest, label for deterministic reconstruction);
  * join adds tables elementwise.

Only forget nodes lose information, so only they store backpointers; value
tables are freed bottom-up and reconstruction replays the choices top-down.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .decomposition import (
    FORGET,
    INTRODUCE,
    JOIN,
    LEAF,
    BagAssignment,
    NiceTreeDecomposition,
    TreeDecomposition,
    assign_bags,
    make_nice,
    min_fill_decomposition,
    validate,
)
from .errors import CapExceeded, SolveTimeout
from .graph import Graph, square_graph
from .rewards import Labeling, RewardSystem

DEFAULT_STATE_LIMIT = 1 << 26


def default_width_cap(L: int) -> int:
    """Largest width t with L**(t+1) <= 2**26 states per table (25 for L=2)."""
    t = 0
    while L ** (t + 2) <= DEFAULT_STATE_LIMIT:
        t += 1
    return t


def _check_width(ntd: NiceTreeDecomposition, L: int, width_cap: int | None) -> None:
    cap = default_width_cap(L) if width_cap is None else width_cap
    if ntd.width > cap:
        raise CapExceeded(
            f"decomposition width {ntd.width} exceeds the cap {cap} "
            f"({L}**{ntd.width + 1} states per table); supply a better decomposition "
            "or raise the cap explicitly"
        )
    if L ** (ntd.width + 1) > 1 << 62:
        raise CapExceeded("state indices would overflow 64-bit integers")


def _table_dtype(rs: RewardSystem):
    """Exact int64 accumulation when rewards are integral and safely bounded."""
    if rs.all_integer:
        bound = (rs.graph.n + 1) * (rs.max_abs_value() + 1)
        if bound < 2**62:
            return np.int64
    return np.float64


def phi_table(rs: RewardSystem, ntd: NiceTreeDecomposition, ba: BagAssignment, node: int,
              dtype=np.float64) -> np.ndarray:
    """Aggregate reward of the node's owned vertices for every bag labeling."""
    L = rs.L
    bag = ntd.bags[node]
    b = len(bag)
    flat = np.zeros(L**b, dtype=dtype)
    owners = ba.owners[node]
    if not owners:
        return flat
    nd = flat.reshape((L,) * b)
    bag_desc = bag[::-1]
    for v in owners:
        nb = rs.neighborhood(v)
        members = set(nb)
        table = rs.table(v)
        if dtype is np.int64:
            table = np.rint(table).astype(np.int64)
        shape = tuple(L if u in members else 1 for u in bag_desc)
        nd += table.reshape((L,) * len(nb)).reshape(shape)
    return flat


def phi_tables(rs: RewardSystem, ntd: NiceTreeDecomposition, ba: BagAssignment) -> list[np.ndarray]:
    """All per-node reward aggregates; their sum over any labeling equals F."""
    return [phi_table(rs, ntd, ba, i) for i in range(len(ntd))]


def _insert_digit(state: int, position: int, digit: int, L: int) -> int:
    stride = L**position
    low = state % stride
    high = state // stride
    return (high * L + digit) * stride + low


def _remove_digit(state: int, position: int, L: int) -> int:
    stride = L**position
    low = state % stride
    high = state // (stride * L)
    return high * stride + low


def _choice_dtype(L: int):
    return np.int8 if L <= 127 else np.int32


def _run_tables(
    rs: RewardSystem,
    ntd: NiceTreeDecomposition,
    ba: BagAssignment,
    keep_choices: bool,
    trace_sink: list | None,
):
    """Bottom-up pass; returns (root value, forget choices or None)."""
    L = rs.L
    dtype = _table_dtype(rs)
    tables: dict[int, np.ndarray] = {}
    choices: dict[int, np.ndarray] | None = {} if keep_choices else None
    for node in ntd.postorder():
        started = time.perf_counter() if trace_sink is not None else 0.0
        kind = ntd.kinds[node]
        bag = ntd.bags[node]
        b = len(bag)
        phi = phi_table(rs, ntd, ba, node, dtype)
        if kind == LEAF:
            table = phi  # identically zero: leaves own no vertices
        elif kind == INTRODUCE:
            (child,) = ntd.children[node]
            axis = b - 1 - bag.index(ntd.vertex[node])
            child_nd = tables.pop(child).reshape((L,) * (b - 1))
            table = phi.reshape((L,) * b) + np.expand_dims(child_nd, axis)
            table = table.reshape(-1)
        elif kind == FORGET:
            (child,) = ntd.children[node]
            child_bag = ntd.bags[child]
            axis = len(child_bag) - 1 - child_bag.index(ntd.vertex[node])
            child_nd = tables.pop(child).reshape((L,) * len(child_bag))
            table = child_nd.max(axis=axis).reshape(-1) + phi
            if keep_choices:
                choices[node] = child_nd.argmax(axis=axis).reshape(-1).astype(_choice_dtype(L))
        else:  # JOIN
            c1, c2 = ntd.children[node]
            table = tables.pop(c1) + tables.pop(c2) + phi
        tables[node] = table
        if trace_sink is not None:
            trace_sink.append(
                {
                    "node": node,
                    "kind": kind,
                    "bag_size": b,
                    "states": L**b,
                    "seconds": time.perf_counter() - started,
                }
            )
    root_value = tables[ntd.root][0]
    value = int(root_value) if dtype is np.int64 else float(root_value)
    return value, choices


def _reconstruct(
    ntd: NiceTreeDecomposition, choices: dict[int, np.ndarray], n: int, L: int
) -> np.ndarray:
    """Top-down replay of forget choices; every vertex is forgotten exactly once."""
    labels = np.full(n, -1, dtype=np.int64)
    stack: list[tuple[int, int]] = [(ntd.root, 0)]
    while stack:
        node, state = stack.pop()
        kind = ntd.kinds[node]
        if kind == LEAF:
            continue
        if kind == JOIN:
            c1, c2 = ntd.children[node]
            stack.append((c1, state))
            stack.append((c2, state))
            continue
        (child,) = ntd.children[node]
        a = ntd.vertex[node]
        if kind == INTRODUCE:
            position = ntd.bags[node].index(a)
            stack.append((child, _remove_digit(state, position, L)))
        else:  # FORGET
            digit = int(choices[node][state])
            labels[a] = digit
            position = ntd.bags[child].index(a)
            stack.append((child, _insert_digit(state, position, digit, L)))
    if n and labels.min() < 0:
        raise AssertionError("reconstruction left vertices unlabeled")
    return labels


def solve(
    g: Graph,
    rs: RewardSystem,
    ntd: NiceTreeDecomposition,
    ba: BagAssignment,
    width_cap: int | None = None,
    trace_sink: list | None = None,
) -> tuple[Labeling, float]:
    """Optimal labeling and value for the instance under the given decomposition."""
    _check_width(ntd, rs.L, width_cap)
    value, choices = _run_tables(rs, ntd, ba, keep_choices=True, trace_sink=trace_sink)
    labels = _reconstruct(ntd, choices, g.n, rs.L)
    labeling = Labeling(labels, float(value))
    return labeling, value


def solve_value_only(
    g: Graph,
    rs: RewardSystem,
    ntd: NiceTreeDecomposition,
    ba: BagAssignment,
    width_cap: int | None = None,
    trace_sink: list | None = None,
) -> float:
    """Optimal value only; child tables are discarded as soon as they are consumed."""
    _check_width(ntd, rs.L, width_cap)
    value, _ = _run_tables(rs, ntd, ba, keep_choices=False, trace_sink=trace_sink)
    return value


@dataclass
class PipelineResult:
    """End-to-end solve record: value, labeling, structure stats and timings."""

    value: float
    labeling: Labeling | None
    width: int
    node_count: int
    height: int
    total_states: int
    timings: dict = field(default_factory=dict)
    trace: list | None = None


def solve_pipeline(
    g: Graph,
    rs: RewardSystem,
    td: TreeDecomposition | None = None,
    value_only: bool = False,
    width_cap: int | None = None,
    collect_trace: bool = False,
    time_budget: float | None = None,
) -> PipelineResult:
    """Square the graph, decompose (min-fill unless one is supplied), convert to
    nice form, assign neighborhoods to bags, and run the dynamic program."""
    deadline = time.perf_counter() + time_budget if time_budget else None

    def checkpoint(stage: str):
        if deadline is not None and time.perf_counter() > deadline:
            raise SolveTimeout(f"time budget exhausted after {stage}")

    timings = {}
    t0 = time.perf_counter()
    h = square_graph(g)
    timings["square"] = time.perf_counter() - t0
    checkpoint("square")

    t0 = time.perf_counter()
    if td is None:
        td = min_fill_decomposition(h)
    else:
        report = validate(td, h)
        if not report.ok:
            raise ValueError(f"supplied decomposition invalid for the squared graph: {report}")
    timings["decompose"] = time.perf_counter() - t0
    checkpoint("decompose")

    t0 = time.perf_counter()
    ntd = make_nice(td)
    timings["nice"] = time.perf_counter() - t0
    checkpoint("nice")

    t0 = time.perf_counter()
    ba = assign_bags(ntd, g)
    timings["assign"] = time.perf_counter() - t0
    checkpoint("assign")

    trace: list | None = [] if collect_trace else None
    t0 = time.perf_counter()
    if value_only:
        value = solve_value_only(g, rs, ntd, ba, width_cap=width_cap, trace_sink=trace)
        labeling = None
    else:
        labeling, value = solve(g, rs, ntd, ba, width_cap=width_cap, trace_sink=trace)
    timings["solve"] = time.perf_counter() - t0
    timings["total"] = sum(timings.values())
    checkpoint("solve")

    L = rs.L
    return PipelineResult(
        value=value,
        labeling=labeling,
        width=ntd.width,
        node_count=len(ntd),
        height=ntd.height(),
        total_states=sum(L ** len(b) for b in ntd.bags),
        timings=timings,
        trace=trace,
    )
