"""Breadth-first neighborhoods, rooted marked trees, and tree isomorphism codes."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .attributes import Attribute, FullMark, full_mark_distance, mark_offspring
from .graphs import MultiGraph

Label = tuple


@dataclass(frozen=True, eq=False)
class RootedMarkedTree:
    """Ulam-Harris labelled tree cut at ``depth``.

    ``marks`` maps labels to full marks in breadth-first order; node
    ``label`` at depth < ``depth`` has exactly ``offspring(label)`` children
    labelled ``label + (j,)`` for j = 1..N. ``sources`` optionally records the
    vertex each node was drawn from.
    """

    marks: dict
    depth: int
    sources: dict | None = None

    @property
    def size(self) -> int:
        return len(self.marks)

    @property
    def directed(self) -> bool:
        return next(iter(self.marks.values())).directed

    @property
    def root(self) -> FullMark:
        return self.marks[()]

    def offspring(self, label: Label) -> int:
        return mark_offspring(self.marks[label], len(label) == 0)

    def children(self, label: Label) -> list:
        if len(label) >= self.depth:
            return []
        return [label + (j,) for j in range(1, self.offspring(label) + 1)]

    def generation(self, r: int) -> list:
        return [lab for lab in self.marks if len(lab) == r]

    def validate(self) -> None:
        if () not in self.marks:
            raise ValueError("tree has no root")
        expected = {()}
        for lab in self.marks:
            expected.update(self.children(lab))
        if expected != set(self.marks):
            raise ValueError("labels do not match the offspring counts")

    def relabel(self, perm_children) -> "RootedMarkedTree":
        """Permute children; ``perm_children(label, k)`` returns a permutation of 1..k."""
        out, src = {}, {} if self.sources is not None else None
        queue = deque([((), ())])
        while queue:
            old, new = queue.popleft()
            out[new] = self.marks[old]
            if src is not None:
                src[new] = self.sources[old]
            kids = self.children(old)
            perm = perm_children(old, len(kids))
            placed = sorted(zip(perm, kids))
            for j, kid in placed:
                queue.append((kid, new + (j,)))
        ordered = dict(sorted(out.items(), key=lambda kv: (len(kv[0]), kv[0])))
        if src is not None:
            src = {lab: src[lab] for lab in ordered}
        return RootedMarkedTree(ordered, self.depth, src)


@dataclass(frozen=True, eq=False)
class NeighborhoodResult:
    """An explored depth-k neighborhood.

    ``edges`` holds multiplicities of the explored subgraph (undirected keys
    (min, max); directed keys (tail, head)); ``loops`` the self-loop counts.
    ``vertex_marks`` holds the full mark of every discovered vertex.
    """

    root: int
    depth: int
    directed: bool
    layers: tuple
    vertex_marks: dict
    edges: dict = field(default_factory=dict)
    loops: dict = field(default_factory=dict)

    @property
    def vertices(self) -> list:
        return [v for layer in self.layers for v in layer]

    @property
    def size(self) -> int:
        return sum(len(layer) for layer in self.layers)


def graph_full_mark(g: MultiGraph, v: int) -> FullMark:
    attr = g.attributes.attribute(v) if g.attributes is not None else None
    if g.directed:
        return FullMark((g.in_degree(v), g.out_degree(v)), attr)
    return FullMark((g.degree(v),), attr)


def _check_root(g: MultiGraph, root: int, k: int) -> None:
    if not 0 <= root < g.n:
        raise ValueError(f"root {root} outside 0..{g.n - 1}")
    if k < 0:
        raise ValueError("depth must be nonnegative")


def explore_undirected(g: MultiGraph, root: int, k: int) -> NeighborhoodResult:
    """Depth-k BFS closure: all vertices within distance k with every edge among them."""
    if g.directed:
        raise ValueError("explore_undirected needs an undirected graph")
    _check_root(g, root, k)
    dist = {root: 0}
    layers = [[root]]
    for r in range(1, k + 1):
        nxt = []
        for v in layers[-1]:
            for u in g.neighbors(v):
                if u not in dist:
                    dist[u] = r
                    nxt.append(u)
        if not nxt:
            break
        layers.append(nxt)
    edges, loops = {}, {}
    for v in dist:
        if g.self_loops.get(v):
            loops[v] = g.self_loops[v]
        for u in g.neighbors(v):
            if u in dist and v < u:
                edges[(v, u)] = g.multiplicity(v, u)
    marks = {v: graph_full_mark(g, v) for v in dist}
    return NeighborhoodResult(root, k, False, tuple(tuple(x) for x in layers), marks, edges, loops)


def explore_in_component(g: MultiGraph, root: int, k: int) -> NeighborhoodResult:
    """Depth-k exploration along inbound edges only; out-degrees go into the marks."""
    if not g.directed:
        raise ValueError("explore_in_component needs a directed graph")
    _check_root(g, root, k)
    dist = {root: 0}
    layers = [[root]]
    edges, loops = {}, {}
    for r in range(1, k + 1):
        nxt = []
        for v in layers[-1]:
            if g.self_loops.get(v):
                loops[v] = g.self_loops[v]
            for u in g.in_neighbors(v):
                edges[(u, v)] = g.multiplicity(u, v)
                if u not in dist:
                    dist[u] = r
                    nxt.append(u)
        if not nxt:
            break
        layers.append(nxt)
    marks = {v: graph_full_mark(g, v) for v in dist}
    return NeighborhoodResult(root, k, True, tuple(tuple(x) for x in layers), marks, edges, loops)


def neighborhood_is_tree(nr: NeighborhoodResult):
    """(True, tree, sigma) when the explored subgraph is a tree, else (False, None, None).

    ``sigma`` maps tree labels to vertex ids; children are labelled in the
    order the exploration discovered them.
    """
    if nr.loops or any(m != 1 for m in nr.edges.values()):
        return False, None, None
    if len(nr.edges) != nr.size - 1:
        return False, None, None
    layer_of = {v: r for r, layer in enumerate(nr.layers) for v in layer}
    parent = {}
    for (a, b) in nr.edges:
        if nr.directed:
            child, par = a, b
        elif layer_of[a] > layer_of[b]:
            child, par = a, b
        else:
            child, par = b, a
        if layer_of[child] != layer_of[par] + 1 or child in parent:
            return False, None, None
        parent[child] = par
    kids = {v: [] for v in layer_of}
    for layer in nr.layers[1:]:
        for v in layer:
            if v not in parent:
                return False, None, None
            kids[parent[v]].append(v)
    label_of = {nr.root: ()}
    marks, sigma = {}, {}
    for layer in nr.layers:
        for v in layer:
            lab = label_of[v]
            marks[lab] = nr.vertex_marks[v]
            sigma[lab] = v
            for j, c in enumerate(kids[v], start=1):
                label_of[c] = lab + (j,)
    tree = RootedMarkedTree(marks, nr.depth, dict(sigma))
    # a tree neighborhood must also agree with the offspring counts its marks encode
    for lab in marks:
        if len(lab) < nr.depth and len(kids[sigma[lab]]) != tree.offspring(lab):
            return False, None, None
    return True, tree, sigma


# ---------------------------------------------------------------------------
# canonical codes


def _fmt(x, quantum) -> str:
    if quantum is None:
        return repr(x)
    return str(int(x // quantum))


def _mark_bytes(mark: FullMark, quantum) -> str:
    a: Attribute = mark.attribute
    parts = [",".join(str(int(d)) for d in mark.degrees)]
    if a is not None:
        parts.append(a.kind)
        parts.append(",".join(_fmt(x, quantum) for x in a.primary))
        parts.append(",".join(_fmt(x, quantum) for x in a.aux))
    return "|".join(parts)


def canonical_code(t: RootedMarkedTree, with_marks: bool = True, quantization: float | None = None) -> bytes:
    """AHU-style code: equal codes iff the trees are (mark-preserving) isomorphic.

    With ``quantization`` real coordinates are compared after flooring to
    multiples of it.
    """
    codes = {}
    for lab in sorted(t.marks, key=len, reverse=True):
        kid_codes = sorted(codes.pop(c) for c in t.children(lab) if c in codes)
        head = _mark_bytes(t.marks[lab], quantization) if with_marks else ""
        codes[lab] = "(" + head + "".join(kid_codes) + ")"
    return codes[()].encode()


def marks_match_within(corr: dict, t1: RootedMarkedTree, t2: RootedMarkedTree, eps: float) -> bool:
    """True iff every pair matched by ``corr`` is within ``eps`` in the full-mark metric."""
    if set(corr) != set(t1.marks) or set(corr.values()) != set(t2.marks) or len(set(corr.values())) != len(corr):
        raise ValueError("correspondence is not a bijection between the node sets")
    return all(full_mark_distance(t1.marks[a], t2.marks[b]) <= eps for a, b in corr.items())


# ---------------------------------------------------------------------------
# text format


def _label_str(lab: Label) -> str:
    return "." if not lab else ".".join(str(j) for j in lab)


def _parse_label(s: str) -> Label:
    return () if s == "." else tuple(int(x) for x in s.split("."))


def tree_to_text(t: RootedMarkedTree) -> str:
    """One node per line: label, degrees, kind, primary, aux (tab separated)."""
    lines = [f"# depth={t.depth}"]
    for lab, m in t.marks.items():
        a = m.attribute
        fields = [
            _label_str(lab),
            ",".join(str(int(d)) for d in m.degrees),
            a.kind,
            ",".join(repr(x) for x in a.primary),
            ",".join(repr(x) for x in a.aux),
        ]
        if t.sources is not None:
            fields.append(str(t.sources[lab]))
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def tree_from_text(text: str) -> RootedMarkedTree:
    depth = None
    marks, sources = {}, {}
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            if line.startswith("# depth="):
                depth = int(line.split("=", 1)[1])
            continue
        parts = line.split("\t")
        lab = _parse_label(parts[0])
        degrees = tuple(int(x) for x in parts[1].split(","))
        kind = parts[2]
        integer = kind in ("cm-degree", "dcm-degrees")
        prim = tuple((int(x) if integer else float(x)) for x in parts[3].split(","))
        aux = tuple(float(x) for x in parts[4].split(",")) if parts[4] else ()
        marks[lab] = FullMark(degrees, Attribute(kind, prim, aux))
        if len(parts) > 5:
            sources[lab] = int(parts[5])
    if depth is None:
        depth = max((len(lab) for lab in marks), default=0)
    tree = RootedMarkedTree(marks, depth, sources or None)
    tree.validate()
    return tree
