"""Stub-pairing couplings of CM/DCM explorations with intermediate trees.

Both sides read the t-th pairing event's first pick from the same stub
uniform u(t). The graph side rejects a pick that is the current stub or an
already paired one and redraws from the auxiliary stream; the tree side
always accepts. Until the first rejection or repeated vertex the two sides
build identical marked trees.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field

from ..attributes import AttributeSequence
from ..exploration import NeighborhoodResult, RootedMarkedTree
from ..rng import SharedRandomness
from .outcome import CouplingOutcome


@dataclass
class PairingState:
    """Stub pairings and vertices carried over between explorations of one graph.

    ``partner`` maps each paired stub to its partner (for DCM: in-stub to
    out-stub, with paired out-stubs in ``paired_out``); ``vertices`` holds
    every vertex discovered by earlier explorations.
    """

    partner: dict = field(default_factory=dict)
    paired_out: set = field(default_factory=set)
    vertices: set = field(default_factory=set)


def _check(attrs: AttributeSequence, kind: str, root: int, k: int) -> None:
    if attrs.kind != kind:
        raise ValueError(f"expected {kind} attributes, got {attrs.kind}")
    if not 0 <= root < attrs.n:
        raise ValueError(f"root {root} outside 0..{attrs.n - 1}")
    if k < 0:
        raise ValueError("depth must be nonnegative")


def _pick(rand: SharedRandomness, t: int, total: int) -> int:
    return min(int(rand.stub_uniform(t) * total), total - 1)


def _tree_side(marks, root: int, k: int, rand: SharedRandomness, total: int,
               starts: list, counts: list, shift: int) -> tuple:
    """BFS tree whose t-th child owns stub u(t); returns (tree, labels in event order).

    The root has ``counts[root]`` children and a non-root node drawn from
    vertex v has ``counts[v] - shift``.
    """
    stub = rand.stub_uniform
    last = total - 1
    tree_marks = {(): marks(root)}
    sources = {(): root}
    events = []
    frontier = [((), counts[root])]
    t = 0
    for _ in range(k):
        nxt = []
        for lab, count in frontier:
            for j in range(1, count + 1):
                c = int(stub(t) * total)
                w = bisect_right(starts, c if c < last else last) - 1
                t += 1
                child = lab + (j,)
                tree_marks[child] = marks(w)
                sources[child] = w
                events.append(child)
                nxt.append((child, counts[w] - shift))
        frontier = nxt
    return RootedMarkedTree(tree_marks, k, sources), events


def couple_cm(attrs: AttributeSequence, root: int, k: int, rand: SharedRandomness,
              state: PairingState | None = None) -> CouplingOutcome:
    """Joint CM exploration from ``root`` and intermediate tree, to depth k.

    Vertices are 0-based; stub s belongs to the vertex whose stub block
    contains s. ``state`` carries pairings across several roots of the
    same graph; touching an earlier exploration counts as a repeated vertex.
    """
    _check(attrs, "cm-degree", root, k)
    deg = attrs.primary_lists
    total = int(attrs.total)
    if total % 2:
        raise ValueError("total degree must be even")
    starts = attrs.stub_offsets
    state = PairingState() if state is None else state
    partner, prior = state.partner, state.vertices

    def owner(s: int) -> int:
        return bisect_right(starts, s) - 1

    marks = attrs.nominal_mark
    dist = {root: 0}
    layers = [[root]]
    edges, loops = Counter(), Counter()
    local = set()
    found = []
    tau = reason = None
    if root in prior:
        tau, reason = 1, "repeat-vertex"
    t = 0
    for r in range(k):
        nxt = []
        for v in layers[r]:
            for s in range(starts[v], starts[v] + deg[v]):
                if s in partner:
                    if s in local:
                        continue
                    c, why = partner[s], "repeat-vertex"
                else:
                    c, why = _pick(rand, t, total), None
                    t += 1
                    if c == s or c in partner:
                        why = "resample"
                        while c == s or c in partner:
                            c = min(int(rand.aux_uniform() * total), total - 1)
                    partner[s], partner[c] = c, s
                    local.update((s, c))
                w = owner(c)
                if w == v:
                    loops[v] += 1
                else:
                    edges[(min(v, w), max(v, w))] += 1
                if why is None and (w in dist or w in prior):
                    why = "repeat-vertex"
                if w not in dist:
                    dist[w] = r + 1
                    nxt.append(w)
                if why is not None and tau is None:
                    tau, reason = r + 1, why
                if tau is None:
                    found.append(w)
        if not nxt:
            break
        layers.append(nxt)
    prior.update(dist)
    graph = NeighborhoodResult(root, k, False, tuple(tuple(x) for x in layers),
                               {v: marks(v) for v in dist}, dict(edges), dict(loops))
    tree, events = _tree_side(marks, root, k, rand, total, starts, deg, 1)
    sigma = {(): root}
    sigma.update(zip(events, found))
    return CouplingOutcome("cm", graph, tree, sigma, tau, reason)


def couple_dcm(attrs: AttributeSequence, root: int, k: int, rand: SharedRandomness,
               state: PairingState | None = None) -> CouplingOutcome:
    """Joint DCM in-exploration and intermediate tree.

    Each inbound stub of an explored vertex is paired with a uniformly chosen
    unpaired outbound stub; tree children are the owners of uniformly
    chosen outbound stubs, so they are size-biased by out-degree.
    """
    _check(attrs, "dcm-degrees", root, k)
    din = attrs.primary_lists[0]
    total, total_out = (int(x) for x in attrs.total)
    if total != total_out:
        raise ValueError("in and out totals must agree")
    in_starts, out_starts = attrs.stub_offsets
    state = PairingState() if state is None else state
    partner, paired_out, prior = state.partner, state.paired_out, state.vertices

    def out_owner(s: int) -> int:
        return bisect_right(out_starts, s) - 1

    marks = attrs.nominal_mark
    dist = {root: 0}
    layers = [[root]]
    edges, loops = Counter(), Counter()
    found = []
    tau = reason = None
    if root in prior:
        tau, reason = 1, "repeat-vertex"
    t = 0
    for r in range(k):
        nxt = []
        for v in layers[r]:
            for s in range(in_starts[v], in_starts[v] + din[v]):
                if s in partner:
                    c, why = partner[s], "repeat-vertex"
                else:
                    c, why = _pick(rand, t, total), None
                    t += 1
                    if c in paired_out:
                        why = "resample"
                        while c in paired_out:
                            c = min(int(rand.aux_uniform() * total), total - 1)
                    partner[s] = c
                    paired_out.add(c)
                w = out_owner(c)
                if w == v:
                    loops[v] += 1
                else:
                    edges[(w, v)] += 1
                if why is None and (w in dist or w in prior):
                    why = "repeat-vertex"
                if w not in dist:
                    dist[w] = r + 1
                    nxt.append(w)
                if why is not None and tau is None:
                    tau, reason = r + 1, why
                if tau is None:
                    found.append(w)
        if not nxt:
            break
        layers.append(nxt)
    prior.update(dist)
    graph = NeighborhoodResult(root, k, True, tuple(tuple(x) for x in layers),
                               {v: marks(v) for v in dist}, dict(edges), dict(loops))
    tree, events = _tree_side(marks, root, k, rand, total, out_starts, din, 0)
    sigma = {(): root}
    sigma.update(zip(events, found))
    return CouplingOutcome("dcm", graph, tree, sigma, tau, reason)
