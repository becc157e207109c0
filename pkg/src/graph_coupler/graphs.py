"""Graph models: configuration models by stub pairing, rank-1 inhomogeneous graphs."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .attributes import AttributeSequence
from .rng import SharedRandomness

# ---------------------------------------------------------------------------
# kernel configuration


@dataclass(frozen=True)
class TruncationSchedule:
    """b_n = n^exponent (and a_n = n^in_exponent for directed models)."""

    exponent: float = 0.25
    in_exponent: float | None = None

    def __post_init__(self):
        for e in (self.exponent, self.in_exponent):
            if e is not None and not 0 < e < 0.5:
                raise ValueError("truncation exponents must lie in (0, 1/2)")

    def b(self, n: int) -> float:
        return float(n) ** self.exponent

    def a(self, n: int) -> float:
        e = self.exponent if self.in_exponent is None else self.in_exponent
        return float(n) ** e


PhiFunction = Callable[[int, float, np.ndarray, dict], np.ndarray]


def _phi_zero(n, wi, wj, summary):
    return np.zeros_like(wj, dtype=np.float64)


def _phi_norros_reittu(n, wi, wj, summary):
    # 1 - exp(-r) written as r (1 + phi)
    r = wi * wj / (summary["theta"] * n)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r > 0, -np.expm1(-r) / np.where(r > 0, r, 1.0) - 1.0, 0.0)
    return out


def _phi_grg(n, wi, wj, summary):
    # r / (1 + r) written as r (1 + phi)
    r = wi * wj / (summary["theta"] * n)
    return -r / (1.0 + r)


@dataclass(frozen=True)
class Phi:
    """Perturbation phi_n(W_i, W_j); must stay above -1."""

    name: str = "zero"
    value: float = 0.0

    def __post_init__(self):
        if self.name not in ("zero", "chung-lu", "constant", "norros-reittu", "generalized-random-graph"):
            raise ValueError(f"unknown phi '{self.name}'")
        if self.name == "constant" and not self.value > -1:
            raise ValueError("constant phi must exceed -1")

    @property
    def is_zero(self) -> bool:
        return self.name in ("zero", "chung-lu") or (self.name == "constant" and self.value == 0)

    def __call__(self, n: int, wi: float, wj: np.ndarray, summary: dict) -> np.ndarray:
        if self.is_zero:
            return _phi_zero(n, wi, wj, summary)
        if self.name == "constant":
            return np.full(np.shape(wj), self.value, dtype=np.float64)
        if self.name == "norros-reittu":
            return _phi_norros_reittu(n, wi, wj, summary)
        return _phi_grg(n, wi, wj, summary)


def phi_from_config(spec) -> Phi:
    if spec is None:
        return Phi()
    if isinstance(spec, str):
        return Phi(spec)
    if isinstance(spec, dict):
        return Phi(spec.get("name", "zero"), float(spec.get("value", 0.0)))
    raise ValueError("phi must be a name or an object")


@dataclass(frozen=True)
class KernelConfig:
    theta: float
    phi: Phi = field(default_factory=Phi)
    truncation: TruncationSchedule = field(default_factory=TruncationSchedule)

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")


def edge_probability_row(attrs: AttributeSequence, kernel: KernelConfig, i: int, direction: str = "undirected") -> np.ndarray:
    """p_ij for all j (undirected), p_{i->j} ("out") or p_{j->i} ("in")."""
    n = attrs.n
    summary = {"theta": kernel.theta}
    if direction == "undirected":
        w = attrs.primary
        wi, others = float(w[i]), w
    elif direction == "out":
        wi, others = float(attrs.primary[i, 1]), attrs.primary[:, 0]
    elif direction == "in":
        wi, others = float(attrs.primary[i, 0]), attrs.primary[:, 1]
    else:
        raise ValueError("direction must be undirected, out or in")
    r = wi * others / (kernel.theta * n)
    p = np.minimum(1.0, r * (1.0 + kernel.phi(n, wi, others, summary)))
    p = np.clip(p, 0.0, 1.0)
    p[i] = 0.0
    return p


def edge_probability_ir(i: int, j: int, attrs: AttributeSequence, kernel: KernelConfig) -> float:
    """p_ij = min(1, W_i W_j (1 + phi) / (theta n)); p_ii = 0.

    For directed weights this is the probability of the edge i -> j.
    """
    if i == j:
        return 0.0
    n = attrs.n
    if attrs.directed:
        wi, wj = float(attrs.primary[i, 1]), float(attrs.primary[j, 0])
    else:
        wi, wj = float(attrs.primary[i]), float(attrs.primary[j])
    r = wi * wj / (kernel.theta * n)
    phi = float(kernel.phi(n, wi, np.array([wj]), {"theta": kernel.theta})[0])
    return float(min(1.0, max(0.0, r * (1.0 + phi))))


# ---------------------------------------------------------------------------
# multigraphs


@dataclass(frozen=True, eq=False)
class MultiGraph:
    """Vertices 0..n-1 with self-loop counts l(i) and edge multiplicities e(i,j).

    Undirected edges are keyed (min, max); directed edges (tail, head).
    """

    n: int
    directed: bool
    self_loops: dict
    edges: dict
    attributes: AttributeSequence | None = None

    @cached_property
    def _adjacency(self):
        if self.directed:
            out_nb = [dict() for _ in range(self.n)]
            in_nb = [dict() for _ in range(self.n)]
            for (a, b), m in self.edges.items():
                out_nb[a][b] = m
                in_nb[b][a] = m
            return out_nb, in_nb
        nb = [dict() for _ in range(self.n)]
        for (a, b), m in self.edges.items():
            nb[a][b] = m
            nb[b][a] = m
        return nb, nb

    def neighbors(self, v: int) -> list[int]:
        """Distinct neighbors in ascending id (undirected)."""
        return sorted(self._adjacency[0][v])

    def in_neighbors(self, v: int) -> list[int]:
        return sorted(self._adjacency[1][v])

    def out_neighbors(self, v: int) -> list[int]:
        return sorted(self._adjacency[0][v])

    def multiplicity(self, a: int, b: int) -> int:
        if self.directed:
            return self.edges.get((a, b), 0)
        return self.edges.get((min(a, b), max(a, b)), 0)

    def degree(self, v: int) -> int:
        return 2 * self.self_loops.get(v, 0) + sum(self._adjacency[0][v].values())

    def in_degree(self, v: int) -> int:
        return self.self_loops.get(v, 0) + sum(self._adjacency[1][v].values())

    def out_degree(self, v: int) -> int:
        return self.self_loops.get(v, 0) + sum(self._adjacency[0][v].values())

    def degrees(self) -> np.ndarray:
        if self.directed:
            return np.array([[self.in_degree(v), self.out_degree(v)] for v in range(self.n)], dtype=np.int64)
        return np.array([self.degree(v) for v in range(self.n)], dtype=np.int64)

    @property
    def edge_count(self) -> int:
        return sum(self.edges.values()) + sum(self.self_loops.values())


def _counts(pairs: np.ndarray) -> dict:
    if pairs.size == 0:
        return {}
    uniq, cnt = np.unique(pairs, axis=0, return_counts=True)
    return {(int(a), int(b)): int(c) for (a, b), c in zip(uniq, cnt)}


# ---------------------------------------------------------------------------
# configuration models


def repair_attribute_sequence(raw: AttributeSequence, seed: int | None = None) -> AttributeSequence:
    """Make a degree sequence graphical for pairing.

    CM: if L_n is odd add one stub to the last vertex. DCM: while the in and
    out totals differ, add a stub on the deficient side at a uniformly chosen
    vertex. Weight sequences are returned unchanged.
    """
    if raw.kind == "cm-degree":
        if raw.n == 0 or int(raw.primary.sum()) % 2 == 0:
            return raw
        d = raw.primary.copy()
        d[-1] += 1
        return raw.with_primary(d)
    if raw.kind == "dcm-degrees":
        d = raw.primary.copy()
        gap = int(d[:, 0].sum() - d[:, 1].sum())
        if gap == 0 or raw.n == 0:
            return raw
        rng = np.random.default_rng(seed)
        side = 1 if gap > 0 else 0
        picks = rng.integers(0, raw.n, size=abs(gap))
        np.add.at(d[:, side], picks, 1)
        return raw.with_primary(d)
    return raw


def stub_owners(degrees: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(degrees.size), degrees)


def sample_cm(attrs: AttributeSequence, seed) -> MultiGraph:
    """Uniform pairing of all stubs; a self-loop uses two stubs of one vertex."""
    if attrs.kind != "cm-degree":
        raise ValueError("sample_cm needs cm-degree attributes")
    d = attrs.primary
    if int(d.sum()) % 2:
        raise ValueError("total degree must be even")
    rng = np.random.default_rng(seed)
    owners = stub_owners(d)
    # a uniform perfect matching equals sequential uniform pairing in law
    pairs = owners[rng.permutation(owners.size)].reshape(-1, 2)
    pairs.sort(axis=1)
    loops_mask = pairs[:, 0] == pairs[:, 1]
    loops = Counter(int(v) for v in pairs[loops_mask, 0])
    return MultiGraph(attrs.n, False, dict(loops), _counts(pairs[~loops_mask]), attrs)


def sample_dcm(attrs: AttributeSequence, seed) -> MultiGraph:
    """Each inbound stub is paired with a uniformly chosen unpaired outbound stub."""
    if attrs.kind != "dcm-degrees":
        raise ValueError("sample_dcm needs dcm-degrees attributes")
    din, dout = attrs.primary[:, 0], attrs.primary[:, 1]
    if din.sum() != dout.sum():
        raise ValueError("in and out totals must agree")
    rng = np.random.default_rng(seed)
    heads = stub_owners(din)
    tails = stub_owners(dout)[rng.permutation(int(dout.sum()))]
    pairs = np.stack((tails, heads), axis=1)
    loops_mask = tails == heads
    loops = Counter(int(v) for v in heads[loops_mask])
    return MultiGraph(attrs.n, True, dict(loops), _counts(pairs[~loops_mask]), attrs)


# ---------------------------------------------------------------------------
# inhomogeneous random graphs


def sample_ir(attrs: AttributeSequence, kernel: KernelConfig, seed) -> MultiGraph:
    """Simple graph with X_ij = 1(U_ij > 1 - p_ij), U from the pair-uniform hash."""
    if attrs.kind != "ir-weight":
        raise ValueError("sample_ir needs ir-weight attributes")
    rand = seed if isinstance(seed, SharedRandomness) else SharedRandomness(int(seed), attrs.n)
    edges = {}
    for i in range(attrs.n - 1):
        p = edge_probability_row(attrs, kernel, i)
        u = rand.pair_row(i)
        hit = np.flatnonzero(u[i + 1:] > 1.0 - p[i + 1:]) + i + 1
        for j in hit:
            edges[(i, int(j))] = 1
        rand.clear_cache()
    return MultiGraph(attrs.n, False, {}, edges, attrs)


def sample_ird(attrs: AttributeSequence, kernel: KernelConfig, seed) -> MultiGraph:
    """Simple digraph with X_{i->j} = 1(U_{i->j} > 1 - p_{i->j})."""
    if attrs.kind != "ird-weights":
        raise ValueError("sample_ird needs ird-weights attributes")
    rand = seed if isinstance(seed, SharedRandomness) else SharedRandomness(int(seed), attrs.n)
    edges = {}
    for i in range(attrs.n):
        p = edge_probability_row(attrs, kernel, i, "out")
        u = rand.out_row(i)
        for j in np.flatnonzero(u > 1.0 - p):
            edges[(i, int(j))] = 1
        rand.clear_cache()
    return MultiGraph(attrs.n, True, {}, edges, attrs)


# ---------------------------------------------------------------------------
# CSV import / export

_PRIMARY_COLUMNS = {
    "cm-degree": ["d"],
    "ir-weight": ["w"],
    "dcm-degrees": ["d_in", "d_out"],
    "ird-weights": ["w_in", "w_out"],
}


def write_attributes_csv(attrs: AttributeSequence, path) -> None:
    cols = _PRIMARY_COLUMNS[attrs.kind]
    d = attrs.aux_dimension
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex_id", *cols, *[f"b_{c + 1}" for c in range(d)]])
        prim = attrs.primary.reshape(attrs.n, -1)
        for i in range(attrs.n):
            w.writerow([i, *[repr(x.item()) for x in prim[i]], *[repr(float(b)) for b in attrs.aux[i]]])


def read_attributes_csv(path, theta: float | None = None) -> AttributeSequence:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "vertex_id":
        raise ValueError("attribute CSV must start with a vertex_id column")
    header = rows[0]
    kind = next((k for k, cols in _PRIMARY_COLUMNS.items() if header[1:1 + len(cols)] == cols), None)
    if kind is None:
        raise ValueError(f"unrecognized attribute columns {header[1:]}")
    width = len(_PRIMARY_COLUMNS[kind])
    aux_cols = header[1 + width:]
    if any(c != f"b_{j + 1}" for j, c in enumerate(aux_cols)):
        raise ValueError("aux columns must be named b_1..b_d")
    body = rows[1:]
    ids = [int(r[0]) for r in body]
    if ids != list(range(len(body))):
        raise ValueError("vertex ids must be 0..n-1 in order")
    prim = np.array([[float(x) for x in r[1:1 + width]] for r in body]).reshape(len(body), width)
    aux = np.array([[float(x) for x in r[1 + width:]] for r in body]).reshape(len(body), len(aux_cols))
    if width == 1:
        prim = prim[:, 0]
    return AttributeSequence(kind, prim, aux, theta)
