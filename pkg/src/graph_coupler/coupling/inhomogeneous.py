"""Common-uniform couplings of IR/IRD explorations with intermediate trees.

The graph edge indicator is X_ij = 1(U_ij > 1 - p_ij); the tree offspring
count of type j under a type-i node is Z_ij = G^{-1}(U_ij; q_ij) with the
same U_ij and q_ij = Wbar_i Wbar_j / (theta n). A pair uniform is used by
the tree at most once; pairs it has already consumed get independent
Poisson draws Z* from the auxiliary stream, in increasing type order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..attributes import AttributeSequence
from ..exploration import NeighborhoodResult, RootedMarkedTree
from ..graphs import KernelConfig, edge_probability_row
from ..rng import SharedRandomness
from ..stats import poisson_inverse
from ..trees import IntermediateLaw
from .outcome import CouplingOutcome

MISMATCH = "bernoulli-poisson-mismatch"
CYCLE = "cycle-or-self-loop"
PHANTOM = "phantom-offspring"


@dataclass
class InhomogeneousState:
    """Type sets and edge rows carried over between explorations of one graph.

    ``rows`` (undirected), ``in_pass`` and ``out_pass`` mark the types whose
    pair uniforms some tree has already consumed; ``graph`` marks vertices
    discovered by earlier graph explorations. ``x`` caches edge-indicator
    rows keyed by (direction, vertex).
    """

    n: int
    rows: np.ndarray = None
    in_pass: np.ndarray = None
    out_pass: np.ndarray = None
    graph: np.ndarray = None
    x: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("rows", "in_pass", "out_pass", "graph"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(self.n, dtype=bool))


class _Break:
    def __init__(self):
        self.tau = None
        self.reason = None

    def note(self, gen: int, why: str) -> None:
        if self.tau is None or gen < self.tau:
            self.tau, self.reason = gen, why


def _check(attrs: AttributeSequence, kind: str, root: int, k: int) -> None:
    if attrs.kind != kind:
        raise ValueError(f"expected {kind} attributes, got {attrs.kind}")
    if not 0 <= root < attrs.n:
        raise ValueError(f"root {root} outside 0..{attrs.n - 1}")
    if k < 0:
        raise ValueError("depth must be nonnegative")


def _xrow(state, attrs, kernel, rand, key: str, v: int) -> np.ndarray:
    x = state.x.get((key, v))
    if x is None:
        if key == "u":
            u, p = rand.pair_row(v), edge_probability_row(attrs, kernel, v)
        elif key == "o":
            u, p = rand.out_row(v), edge_probability_row(attrs, kernel, v, "out")
        else:
            u, p = rand.in_col(v), edge_probability_row(attrs, kernel, v, "in")
        x = u > 1.0 - p
        state.x[(key, v)] = x
    return x


def _poisson_row(u: np.ndarray, q: np.ndarray, fresh: np.ndarray) -> np.ndarray:
    z = np.zeros(u.size, dtype=np.int64)
    cand = fresh & (u > np.exp(-q))
    if cand.any():
        z[cand] = poisson_inverse(u[cand], q[cand])
    return z


def _aggregate(rand: SharedRandomness, mean: float, cum: np.ndarray | None, n: int) -> np.ndarray:
    """Poisson(mean) children with i.i.d. types drawn from ``cum``."""
    count = int(rand.aux.poisson(mean))
    if count == 0 or cum is None:
        return np.zeros(0, dtype=np.int64)
    return np.minimum(np.searchsorted(cum, rand.aux.random(count), side="right"), n - 1)


def _cum(weights: np.ndarray) -> np.ndarray | None:
    s = float(weights.sum())
    return np.cumsum(weights) / s if s > 0 else None


def _children(z: np.ndarray, js: np.ndarray, zstar: np.ndarray) -> np.ndarray:
    hit = np.flatnonzero(z)
    return np.concatenate((np.repeat(hit, z[hit]), np.repeat(js, zstar))).astype(np.int64)


# ---------------------------------------------------------------------------
# undirected


def couple_ir(attrs: AttributeSequence, kernel: KernelConfig, root: int, k: int, rand: SharedRandomness,
              state: InhomogeneousState | None = None, law: IntermediateLaw | None = None) -> CouplingOutcome:
    """Joint IR exploration from ``root`` and intermediate tree, to depth k.

    Every tree node up to depth k draws its offspring count; children are
    only created above depth k. A break while counting generation-k
    offspring is reported as tau = k + 1.
    """
    _check(attrs, "ir-weight", root, k)
    n = attrs.n
    law = IntermediateLaw(attrs, kernel) if law is None else law
    state = InhomogeneousState(n) if state is None else state
    wbar, scale = law.wbar, law.scale
    cum = _cum(wbar)

    # graph side
    dist = {root: 0}
    layers = [[root]]
    edges = {}
    explored = set()
    for r in range(k):
        nxt = []
        for i in layers[r]:
            for j in np.flatnonzero(_xrow(state, attrs, kernel, rand, "u", i)).tolist():
                if j in explored:
                    continue
                edges[(min(i, j), max(i, j))] = 1
                if j not in dist:
                    dist[j] = r + 1
                    nxt.append(j)
            explored.add(i)
        if not nxt:
            break
        layers.append(nxt)
    vmarks = {v: law.mark(v, True, (int(_xrow(state, attrs, kernel, rand, "u", v).sum()),)) for v in dist}
    graph = NeighborhoodResult(root, k, False, tuple(tuple(x) for x in layers), vmarks, edges, {})

    # tree side
    brk = _Break()
    consumed = state.rows.copy()
    blocked_prior = state.rows | state.graph
    disc = np.zeros(n, dtype=bool)
    disc[root] = True
    if blocked_prior[root]:
        brk.note(1, CYCLE)
    marks, sources = {}, {(): root}
    queue = deque([((), root, -1)])
    while queue:
        lab, i, par = queue.popleft()
        r = len(lab)
        if consumed[i]:
            kids = _aggregate(rand, law.offspring_mean(i), cum, n)
        else:
            u = rand.pair_row(i)
            q = wbar[i] * wbar * scale
            fresh = ~consumed
            z = _poisson_row(u, q, fresh)
            x = _xrow(state, attrs, kernel, rand, "u", i)
            js = np.flatnonzero(consumed)
            zstar = rand.aux.poisson(q[js]) if js.size else np.zeros(0, dtype=np.int64)
            touch = (consumed | blocked_prior) & x
            if par >= 0:
                touch[par] = False
            if np.any(fresh & disc & (z >= 1)) or touch.any():
                brk.note(r + 1, CYCLE)
            elif np.any(fresh & (x.astype(np.int64) != z)):
                brk.note(r + 1, MISMATCH)
            elif np.any(zstar >= 1):
                brk.note(r + 1, PHANTOM)
            kids = _children(z, js, zstar)
            consumed[i] = True
        marks[lab] = law.mark(i, r == 0, (int(kids.size),))
        if r < k and kids.size:
            kids = rand.aux.permutation(kids)
            for j, ty in enumerate(kids.tolist(), start=1):
                child = lab + (j,)
                sources[child] = ty
                disc[ty] = True
                queue.append((child, ty, i))
    state.rows |= consumed
    for v in dist:
        state.graph[v] = True
    order = sorted(marks, key=lambda lab: (len(lab), lab))
    tree = RootedMarkedTree({lab: marks[lab] for lab in order}, k, {lab: sources[lab] for lab in order})
    limit = k + 1 if brk.tau is None else brk.tau - 1
    sigma = {lab: sources[lab] for lab in order if len(lab) < limit}
    return CouplingOutcome("ir", graph, tree, sigma, brk.tau, brk.reason)


# ---------------------------------------------------------------------------
# directed


def couple_ird(attrs: AttributeSequence, kernel: KernelConfig, root: int, k: int, rand: SharedRandomness,
               state: InhomogeneousState | None = None, law: IntermediateLaw | None = None) -> CouplingOutcome:
    """Joint IRD in-exploration and intermediate tree.

    In-passes (offspring along inbound edges) run breadth first; afterwards
    an out-pass counts every node's out-degree. Inbound pair uniforms
    U_{j->v} are fresh for the first node of type v; in the out-pass the
    pair (v -> l) is consumed whenever l has had an in-pass.
    """
    _check(attrs, "ird-weights", root, k)
    n = attrs.n
    law = IntermediateLaw(attrs, kernel) if law is None else law
    state = InhomogeneousState(n) if state is None else state
    win, wout, scale = law.wbar_in, law.wbar_out, law.scale
    cum_out = _cum(wout)

    # graph side
    dist = {root: 0}
    layers = [[root]]
    edges = {}
    for r in range(k):
        nxt = []
        for v in layers[r]:
            for j in np.flatnonzero(_xrow(state, attrs, kernel, rand, "i", v)).tolist():
                edges[(j, v)] = 1
                if j not in dist:
                    dist[j] = r + 1
                    nxt.append(j)
        if not nxt:
            break
        layers.append(nxt)
    vmarks = {}
    for v in dist:
        d_in = int(_xrow(state, attrs, kernel, rand, "i", v).sum())
        d_out = int(_xrow(state, attrs, kernel, rand, "o", v).sum())
        vmarks[v] = law.mark(v, True, (d_in, d_out))
    graph = NeighborhoodResult(root, k, True, tuple(tuple(x) for x in layers), vmarks, edges, {})

    # tree side: in-passes
    brk = _Break()
    in_done = state.in_pass.copy()
    out_prior = state.out_pass
    blocked_prior = state.in_pass | state.out_pass | state.graph
    disc = np.zeros(n, dtype=bool)
    disc[root] = True
    if blocked_prior[root]:
        brk.note(1, CYCLE)
    in_count, sources, parent = {}, {(): root}, {(): -1}
    queue = deque([()])
    while queue:
        lab = queue.popleft()
        v, r = sources[lab], len(lab)
        if in_done[v]:
            kids = _aggregate(rand, law.offspring_mean(v), cum_out, n)
        else:
            u = rand.in_col(v)
            q = win[v] * wout * scale
            fresh = ~out_prior
            z = _poisson_row(u, q, fresh)
            x = _xrow(state, attrs, kernel, rand, "i", v)
            js = np.flatnonzero(out_prior)
            zstar = rand.aux.poisson(q[js]) if js.size else np.zeros(0, dtype=np.int64)
            if np.any(fresh & disc & (z >= 1)) or np.any(blocked_prior & x):
                brk.note(r + 1, CYCLE)
            elif np.any(fresh & (x.astype(np.int64) != z)):
                brk.note(r + 1, MISMATCH)
            elif np.any(zstar >= 1):
                brk.note(r + 1, PHANTOM)
            kids = _children(z, js, zstar)
            in_done[v] = True
        in_count[lab] = int(kids.size)
        if r < k and kids.size:
            kids = rand.aux.permutation(kids)
            for j, ty in enumerate(kids.tolist(), start=1):
                child = lab + (j,)
                sources[child] = ty
                parent[child] = v
                disc[ty] = True
                queue.append(child)

    # tree side: out-passes
    out_done = state.out_pass.copy()
    order = sorted(sources, key=lambda lab: (len(lab), lab))
    marks = {}
    for lab in order:
        v, r, par = sources[lab], len(lab), parent[lab]
        if out_done[v]:
            d_out = int(rand.aux.poisson(law.out_mean(v)))
        else:
            u = rand.out_row(v)
            q = wout[v] * win * scale
            fresh = ~in_done
            z = _poisson_row(u, q, fresh)
            x = _xrow(state, attrs, kernel, rand, "o", v)
            js = np.flatnonzero(in_done)
            zstar = rand.aux.poisson(q[js]) if js.size else np.zeros(0, dtype=np.int64)
            touch = (in_done | state.graph) & x
            if par >= 0:
                touch[par] = False
            if touch.any():
                brk.note(r + 1, CYCLE)
            elif np.any(fresh & (x.astype(np.int64) != z)):
                brk.note(r + 1, MISMATCH)
            elif np.any(zstar >= 1):
                brk.note(r + 1, PHANTOM)
            d_out = int(z.sum() + zstar.sum())
            out_done[v] = True
        marks[lab] = law.mark(v, r == 0, (in_count[lab], d_out))
    state.in_pass |= in_done
    state.out_pass |= out_done
    for v in dist:
        state.graph[v] = True
    tree = RootedMarkedTree(marks, k, {lab: sources[lab] for lab in order})
    limit = k + 1 if brk.tau is None else brk.tau - 1
    sigma = {lab: sources[lab] for lab in order if len(lab) < limit}
    return CouplingOutcome("ird", graph, tree, sigma, brk.tau, brk.reason)
