"""Per-vertex reward oracles, gadget constructions, and labeling evaluation.

A reward system attaches one oracle to every vertex. An oracle maps an
assignment of labels to the vertex's closed neighborhood (a vector aligned
with the sorted order of N[v]) to a real value. Assignments are also
addressable as mixed-radix integers: index = sum label(u_j) * L^j over the
sorted members u_0 < u_1 < ... of N[v]. That encoding is shared with the
dynamic-programming tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapExceeded
from .graph import Graph

DEFAULT_TABLE_CAP = 1 << 26  # entries per materialized neighborhood table


# ---------------------------------------------------------------------------
# mixed-radix encoding helpers


def encode_assignment(labels: Sequence[int], radix: int) -> int:
    """Mixed-radix integer of a label vector (position j has stride radix**j)."""
    index = 0
    for j in range(len(labels) - 1, -1, -1):
        index = index * radix + int(labels[j])
    return index


def decode_assignment(index: int, radix: int, size: int) -> tuple[int, ...]:
    """Inverse of encode_assignment."""
    labels = []
    for _ in range(size):
        labels.append(index % radix)
        index //= radix
    return tuple(labels)


def digit_matrix(radix: int, size: int) -> np.ndarray:
    """(radix**size, size) array: row i holds decode_assignment(i, radix, size)."""
    count = radix**size
    idx = np.arange(count, dtype=np.int64)
    out = np.empty((count, size), dtype=np.int64)
    for j in range(size):
        out[:, j] = (idx // radix**j) % radix
    return out


@dataclass(frozen=True)
class LabelAlphabet:
    """Label set {0, ..., size-1}."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("alphabet size must be >= 1")


# ---------------------------------------------------------------------------
# CNF formulas (DIMACS-style literals) for the SAT-star gadget


@dataclass(frozen=True)
class Cnf:
    """CNF over variables 1..num_vars; literals are signed nonzero ints."""

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("CNF needs at least one variable")
        for clause in self.clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range")

    def evaluate(self, assignment: Sequence[int]) -> bool:
        """True when every clause has a satisfied literal; assignment[i] is var i+1."""
        for clause in self.clauses:
            for lit in clause:
                value = assignment[abs(lit) - 1]
                if (lit > 0) == bool(value):
                    break
            else:
                return False
        return True


def parse_dimacs_cnf(source) -> Cnf:
    """DIMACS CNF: `p cnf <vars> <clauses>` header, clauses terminated by 0."""
    from .graph import _read_source

    text = _read_source(source)
    num_vars = None
    declared_clauses = 0
    clauses: list[tuple[int, ...]] = []
    pending: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"malformed DIMACS problem line: {line!r}")
            num_vars, declared_clauses = int(parts[2]), int(parts[3])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(pending))
                pending = []
            else:
                pending.append(lit)
    if pending:
        clauses.append(tuple(pending))
    if num_vars is None:
        raise ValueError("DIMACS input has no problem line")
    if declared_clauses != len(clauses):
        raise ValueError(f"declared {declared_clauses} clauses but found {len(clauses)}")
    return Cnf(num_vars, tuple(clauses))


def random_cnf(num_vars: int, num_clauses: int, width: int, seed: int) -> Cnf:
    """Random width-literal clauses over distinct variables, deterministic by seed."""
    rng = np.random.default_rng(seed)
    clauses = []
    for _ in range(num_clauses):
        variables = rng.choice(num_vars, size=min(width, num_vars), replace=False) + 1
        signs = rng.integers(0, 2, size=len(variables)) * 2 - 1
        clauses.append(tuple(int(v * s) for v, s in zip(variables, signs)))
    return Cnf(num_vars, tuple(clauses))


# ---------------------------------------------------------------------------
# oracle kinds


class RewardOracle:
    """One vertex's reward as a function of its closed-neighborhood assignment."""

    integer_valued: bool
    nonnegative: bool

    def value(self, labels) -> float:
        raise NotImplementedError

    def max_abs(self, radix: int, size: int) -> float:
        raise NotImplementedError

    def full_table(self, radix: int, size: int) -> np.ndarray:
        """All radix**size values in mixed-radix order (float64)."""
        digits = digit_matrix(radix, size)
        return np.array([self.value(row) for row in digits], dtype=np.float64)


class ConstantOracle(RewardOracle):
    def __init__(self, constant: float):
        self.constant = float(constant)
        self.integer_valued = float(constant).is_integer()
        self.nonnegative = constant >= 0

    def value(self, labels) -> float:
        return self.constant

    def max_abs(self, radix, size):
        return abs(self.constant)

    def full_table(self, radix, size):
        return np.full(radix**size, self.constant, dtype=np.float64)


class TableOracle(RewardOracle):
    """Explicit table in mixed-radix order over the sorted closed neighborhood."""

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("reward table must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("reward table contains non-finite entries")
        self.values = arr
        self.values.setflags(write=False)
        self.integer_valued = bool(np.all(arr == np.rint(arr)))
        self.nonnegative = bool(np.all(arr >= 0))

    def value(self, labels) -> float:
        return float(self.values[encode_assignment(labels, self._radix)])

    def max_abs(self, radix, size):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def full_table(self, radix, size):
        if self.values.size != radix**size:
            raise ValueError(
                f"table has {self.values.size} entries, neighborhood needs {radix**size}"
            )
        return self.values

    # bound by RewardSystem so value() can encode against the right radix
    _radix = 2


class IndependenceOracle(RewardOracle):
    """Pays 1 when the vertex is active (label 1) and its whole neighborhood is inactive.

    Summed over all vertices this counts an independent set, so the optimum of
    the induced instance is the graph's independence number.
    """

    integer_valued = True
    nonnegative = True

    def __init__(self, self_position: int):
        self.self_position = self_position

    def value(self, labels) -> float:
        if labels[self.self_position] != 1:
            return 0.0
        for j, lab in enumerate(labels):
            if j != self.self_position and lab != 0:
                return 0.0
        return 1.0

    def max_abs(self, radix, size):
        return 1.0

    def full_table(self, radix, size):
        table = np.zeros(radix**size, dtype=np.float64)
        table[radix**self.self_position] = 1.0
        return table


class MaxTypeOracle(RewardOracle):
    """Activation reward: 0 for no active vertex in N[v], w_hi if v itself is
    active, otherwise the vertex's own fallback weight w_lo."""

    def __init__(self, self_position: int, w_hi: float, w_lo: float):
        if not (0 <= w_lo <= w_hi):
            raise ValueError("need 0 <= w_lo <= w_hi")
        self.self_position = self_position
        self.w_hi = float(w_hi)
        self.w_lo = float(w_lo)
        self.integer_valued = float(w_hi).is_integer() and float(w_lo).is_integer()
        self.nonnegative = True

    def value(self, labels) -> float:
        if labels[self.self_position] == 1:
            return self.w_hi
        if any(lab == 1 for lab in labels):
            return self.w_lo
        return 0.0

    def max_abs(self, radix, size):
        return self.w_hi

    def full_table(self, radix, size):
        if radix != 2:
            raise ValueError("activation rewards need a binary alphabet")
        idx = np.arange(2**size, dtype=np.int64)
        self_active = (idx >> self.self_position) & 1
        return np.where(idx == 0, 0.0, np.where(self_active == 1, self.w_hi, self.w_lo))


class SatFormulaOracle(RewardOracle):
    """Star-center oracle: decodes leaf labels as base-L digits into an integer,
    reads it as a binary variable assignment, and pays 1 iff the formula holds.

    The center's own label is ignored; indices at or above 2**num_vars pay 0.
    Variable i (1-based) reads bit i-1 of the decoded integer.
    """

    integer_valued = True
    nonnegative = True

    def __init__(self, formula: Cnf, center_position: int, radix: int):
        self.formula = formula
        self.center_position = center_position
        self.radix = radix

    def _decode(self, labels) -> int:
        code = 0
        weight = 1
        for j, lab in enumerate(labels):
            if j == self.center_position:
                continue
            code += int(lab) * weight
            weight *= self.radix
        return code

    def value(self, labels) -> float:
        code = self._decode(labels)
        if code >= 1 << self.formula.num_vars:
            return 0.0
        bits = [(code >> i) & 1 for i in range(self.formula.num_vars)]
        return 1.0 if self.formula.evaluate(bits) else 0.0

    def max_abs(self, radix, size):
        return 1.0

    def full_table(self, radix, size):
        n_vars = self.formula.num_vars
        leaf_count = size - 1
        if radix**leaf_count >= 1 << 62:
            return super().full_table(radix, size)  # falls back to exact big-int path
        digits = digit_matrix(radix, size)
        leaf_cols = [j for j in range(size) if j != self.center_position]
        weights = radix ** np.arange(leaf_count, dtype=np.int64)
        codes = digits[:, leaf_cols] @ weights
        valid = codes < (1 << n_vars)
        bits = (codes[:, None] >> np.arange(n_vars, dtype=np.int64)) & 1
        satisfied = np.ones(len(codes), dtype=bool)
        for clause in self.formula.clauses:
            clause_ok = np.zeros(len(codes), dtype=bool)
            for lit in clause:
                col = bits[:, abs(lit) - 1]
                clause_ok |= (col == 1) if lit > 0 else (col == 0)
            satisfied &= clause_ok
        return np.where(valid & satisfied, 1.0, 0.0)


# ---------------------------------------------------------------------------
# reward system and labelings


class Labeling:
    """Total assignment of labels to vertices, with a cached objective value."""

    __slots__ = ("labels", "value")

    def __init__(self, labels, value: float | None = None):
        self.labels = np.asarray(labels, dtype=np.int64)
        self.value = value

    def __len__(self):
        return len(self.labels)

    def __repr__(self):
        return f"Labeling(value={self.value}, labels={self.labels.tolist()})"


class RewardSystem:
    """Graph + alphabet + one oracle per vertex.

    Immutable after construction; evaluation methods are pure and safe to call
    from concurrent readers.
    """

    def __init__(self, graph: Graph, alphabet: LabelAlphabet | int, oracles: Sequence[RewardOracle]):
        if isinstance(alphabet, int):
            alphabet = LabelAlphabet(alphabet)
        if len(oracles) != graph.n:
            raise ValueError(f"need {graph.n} oracles, got {len(oracles)}")
        self.graph = graph
        self.alphabet = alphabet
        self.oracles = tuple(oracles)
        self._neighborhoods = tuple(graph.closed_neighborhood(v) for v in range(graph.n))
        self._nb_arrays = tuple(np.array(nb, dtype=np.int64) for nb in self._neighborhoods)
        L = alphabet.size
        for v, oracle in enumerate(self.oracles):
            if isinstance(oracle, TableOracle):
                expected = L ** len(self._neighborhoods[v])
                if oracle.values.size != expected:
                    raise ValueError(
                        f"vertex {v}: table has {oracle.values.size} entries, expected {expected}"
                    )
                oracle._radix = L
        self.all_integer = all(o.integer_valued for o in self.oracles)
        self.all_nonnegative = all(o.nonnegative for o in self.oracles)

    @property
    def L(self) -> int:
        return self.alphabet.size

    def neighborhood(self, v: int) -> tuple[int, ...]:
        return self._neighborhoods[v]

    def config_count(self, v: int) -> int:
        return self.L ** len(self._neighborhoods[v])

    def max_abs_value(self) -> float:
        L = self.L
        return max(
            (o.max_abs(L, len(nb)) for o, nb in zip(self.oracles, self._neighborhoods)),
            default=0.0,
        )

    def evaluate_local(self, v: int, assignment) -> float:
        """Reward of vertex v under a label vector aligned with sorted N[v]."""
        nb = self._neighborhoods[v]
        if len(assignment) != len(nb):
            raise ValueError(
                f"vertex {v}: assignment covers {len(assignment)} vertices, N[v] has {len(nb)}"
            )
        L = self.L
        for lab in assignment:
            if not 0 <= lab < L:
                raise ValueError(f"label {lab} outside alphabet of size {L}")
        return float(self.oracles[v].value(assignment))

    def evaluate_total(self, labeling) -> float:
        """F(x) = sum of f_v over all vertices; caches the value on a Labeling."""
        if isinstance(labeling, Labeling):
            x = labeling.labels
        else:
            x = np.asarray(labeling, dtype=np.int64)
        if len(x) != self.graph.n:
            raise ValueError(f"labeling covers {len(x)} vertices, graph has {self.graph.n}")
        if len(x) and (x.min() < 0 or x.max() >= self.L):
            raise ValueError("labeling uses labels outside the alphabet")
        total = 0.0
        for v in range(self.graph.n):
            total += float(self.oracles[v].value(x[self._nb_arrays[v]]))
        if isinstance(labeling, Labeling):
            labeling.value = total
        return total

    def table(self, v: int, max_entries: int = DEFAULT_TABLE_CAP) -> np.ndarray:
        """Materialized reward table of vertex v in mixed-radix order."""
        size = len(self._neighborhoods[v])
        entries = self.L**size
        if entries > max_entries:
            raise CapExceeded(
                f"vertex {v}: neighborhood table needs {entries} entries (cap {max_entries}); "
                "use a sparser graph or a gadget oracle"
            )
        return self.oracles[v].full_table(self.L, size)


def evaluate_local(rs: RewardSystem, v: int, assignment) -> float:
    return rs.evaluate_local(v, assignment)


def evaluate_total(rs: RewardSystem, labeling) -> float:
    return rs.evaluate_total(labeling)


# ---------------------------------------------------------------------------
# builders


def constant_system(g: Graph, L: int, value: float = 0.0) -> RewardSystem:
    return RewardSystem(g, L, [ConstantOracle(value) for _ in range(g.n)])


def build_mis_gadget(g: Graph) -> RewardSystem:
    """Binary instance whose optimum equals the independence number of g."""
    oracles = []
    for v in range(g.n):
        nb = g.closed_neighborhood(v)
        oracles.append(IndependenceOracle(nb.index(v)))
    return RewardSystem(g, 2, oracles)


def build_sat_star_gadget(formula: Cnf, L: int) -> tuple[Graph, RewardSystem]:
    """Star instance with 0/1 rewards whose optimum is 1 iff the formula is satisfiable.

    The star has center 0 and t = ceil(N / log2 L) leaves, the smallest t with
    L**t >= 2**N. Leaf oracles are identically zero; the center oracle decodes
    the leaf labels.
    """
    if L < 2:
        raise ValueError("SAT gadget needs an alphabet of size >= 2")
    n_vars = formula.num_vars
    t = 1
    while L**t < 2**n_vars:
        t += 1
    g = star_topology(t)
    center_nb = g.closed_neighborhood(0)
    oracles: list[RewardOracle] = [SatFormulaOracle(formula, center_nb.index(0), L)]
    oracles.extend(ConstantOracle(0.0) for _ in range(t))
    return g, RewardSystem(g, L, oracles)


def star_topology(leaves: int) -> Graph:
    """Star with center 0 and leaves 1..leaves."""
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def build_max_type_gadget(
    g: Graph,
    w_hi: float = 100.0,
    w_lo=None,
    seed: int | None = None,
) -> RewardSystem:
    """Binary activation instance; every local function is monotone and submodular.

    `w_lo` may be a per-vertex sequence; when omitted it is sampled uniformly
    from [30, 90] using `seed`.
    """
    if w_hi < 0:
        raise ValueError("w_hi must be nonnegative")
    if w_lo is None:
        rng = np.random.default_rng(seed)
        w_lo = rng.uniform(30.0, 90.0, size=g.n)
    w_lo = np.asarray(w_lo, dtype=np.float64)
    if w_lo.shape != (g.n,):
        raise ValueError(f"w_lo must have one weight per vertex ({g.n})")
    if np.any(w_lo < 0) or np.any(w_lo > w_hi):
        raise ValueError("need 0 <= w_lo <= w_hi for every vertex")
    oracles = []
    for v in range(g.n):
        nb = g.closed_neighborhood(v)
        oracles.append(MaxTypeOracle(nb.index(v), w_hi, float(w_lo[v])))
    return RewardSystem(g, 2, oracles)


@dataclass(frozen=True)
class TableDistribution:
    """Sampling law for random reward tables."""

    name: str  # uniform01 | uniform | integer
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.name not in ("uniform01", "uniform", "integer"):
            raise ValueError(f"unknown distribution {self.name!r}")
        if self.name != "uniform01" and self.hi < self.lo:
            raise ValueError("distribution needs lo <= hi")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.name == "uniform01":
            return rng.random(size)
        if self.name == "uniform":
            return rng.uniform(self.lo, self.hi, size)
        return rng.integers(int(self.lo), int(self.hi), size=size, endpoint=True).astype(np.float64)

    @staticmethod
    def parse(text: str) -> "TableDistribution":
        """Accepts `uniform01`, `uniform:lo:hi`, `integer:lo:hi`."""
        parts = text.split(":")
        if parts[0] == "uniform01" and len(parts) == 1:
            return TableDistribution("uniform01")
        if parts[0] in ("uniform", "integer") and len(parts) == 3:
            return TableDistribution(parts[0], float(parts[1]), float(parts[2]))
        raise ValueError(f"cannot parse distribution {text!r}")


def build_random_table_system(
    g: Graph,
    L: int,
    seed: int,
    distribution: TableDistribution | str = "uniform01",
    max_total_entries: int = DEFAULT_TABLE_CAP,
) -> RewardSystem:
    """Independent random table per vertex, filled in sorted-neighborhood
    mixed-radix order from one generator; bitwise deterministic given the seed."""
    if isinstance(distribution, str):
        distribution = TableDistribution.parse(distribution)
    sizes = [L ** len(g.closed_neighborhood(v)) for v in range(g.n)]
    total = sum(sizes)
    if total > max_total_entries:
        raise CapExceeded(
            f"random tables need {total} entries (cap {max_total_entries}); "
            "use a sparser graph or a gadget oracle"
        )
    rng = np.random.default_rng(seed)
    oracles = [TableOracle(distribution.sample(rng, size)) for size in sizes]
    return RewardSystem(g, L, oracles)


def build_table_system(g: Graph, L: int, tables: Sequence[Sequence[float]]) -> RewardSystem:
    """Explicit per-vertex tables (mixed-radix order over sorted N[v])."""
    return RewardSystem(g, L, [TableOracle(t) for t in tables])
