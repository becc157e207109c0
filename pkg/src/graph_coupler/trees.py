"""Intermediate and limiting marked Galton-Watson trees and the couplings between them."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .attributes import MODEL_KIND, Attribute, AttributeSequence, FullMark, full_mark_distance
from .exploration import RootedMarkedTree
from .graphs import KernelConfig
from .laws import AuxGenerator, ReferenceLaw
from .stats import EmpiricalMeasure, conditional_poisson_uniform, poisson_inverse, w1_quantile

MODELS = ("cm", "ir", "dcm", "ird")
_KIND_MODEL = {v: k for k, v in MODEL_KIND.items()}


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# intermediate law


class IntermediateLaw:
    """The finite-n tree law built from one attribute sequence.

    Root: a uniform vertex. Non-root: a vertex drawn proportionally to D (CM),
    the truncated weight (IR), D_out (DCM) or the truncated out-weight (IRD).
    IR/IRD offspring counts are Poisson with means computed from the
    truncated weights; the other models read them off the degrees.
    """

    def __init__(self, attrs: AttributeSequence, kernel: KernelConfig | None = None):
        if attrs.n == 0:
            raise ValueError("empty attribute sequence")
        self.attrs = attrs
        self.model = _KIND_MODEL[attrs.kind]
        self.n = attrs.n
        self.kernel = kernel
        n = self.n
        if self.model in ("ir", "ird") and kernel is None:
            raise ValueError(f"{self.model} needs a kernel configuration")
        if self.model == "cm":
            self.degrees = attrs.primary
            self.total = int(self.degrees.sum())
            self.weights = self.degrees.astype(np.float64)
            self.starts = np.concatenate(([0], np.cumsum(self.degrees)[:-1])).tolist()
        elif self.model == "dcm":
            self.din = attrs.primary[:, 0]
            self.dout = attrs.primary[:, 1]
            self.total = int(self.din.sum())
            if self.total != int(self.dout.sum()):
                raise ValueError("DCM needs equal in and out totals")
            self.weights = self.dout.astype(np.float64)
            self.in_starts = np.concatenate(([0], np.cumsum(self.din)[:-1])).tolist()
            self.out_starts = np.concatenate(([0], np.cumsum(self.dout)[:-1])).tolist()
        elif self.model == "ir":
            self.w = attrs.primary
            self.b_n = kernel.truncation.b(n)
            self.wbar = np.minimum(self.w, self.b_n)
            self.lam = float(self.wbar.sum())
            self.scale = 1.0 / (kernel.theta * n)
            self.weights = self.wbar
        else:
            self.w_in = attrs.primary[:, 0]
            self.w_out = attrs.primary[:, 1]
            self.a_n = kernel.truncation.a(n)
            self.b_n = kernel.truncation.b(n)
            self.wbar_in = np.minimum(self.w_in, self.a_n)
            self.wbar_out = np.minimum(self.w_out, self.b_n)
            self.lam_in = float(self.wbar_in.sum())
            self.lam_out = float(self.wbar_out.sum())
            self.scale = 1.0 / (kernel.theta * n)
            self.weights = self.wbar_out
        wsum = float(self.weights.sum())
        self.weight_total = wsum
        self._cum = np.cumsum(self.weights) / wsum if wsum > 0 else None
        self._couplings = {}
        self._attr_cache = {}

    @property
    def directed(self) -> bool:
        return self.model in ("dcm", "ird")

    def attribute(self, v: int) -> Attribute:
        a = self._attr_cache.get(v)
        if a is None:
            a = self.attrs.attribute(v)
            self._attr_cache[v] = a
        return a

    # vertex draws ------------------------------------------------------
    def root_vertex(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n))

    def nonroot_vertex_from_uniform(self, u: float) -> int:
        if self._cum is None:
            raise ValueError("non-root law undefined: all biasing weights are zero")
        return int(min(np.searchsorted(self._cum, u, side="right"), self.n - 1))

    def nonroot_vertex(self, rng: np.random.Generator) -> int:
        return self.nonroot_vertex_from_uniform(rng.random())

    def nonroot_vertices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self._cum is None:
            raise ValueError("non-root law undefined: all biasing weights are zero")
        return np.minimum(np.searchsorted(self._cum, rng.random(size), side="right"), self.n - 1)

    # offspring means ---------------------------------------------------
    def offspring_mean(self, v: int) -> float:
        """Poisson mean of the offspring (IR) or in-offspring (IRD) count of vertex v."""
        if self.model == "ir":
            return self.lam * float(self.wbar[v]) * self.scale
        if self.model == "ird":
            return self.lam_out * float(self.wbar_in[v]) * self.scale
        raise ValueError("offspring counts are deterministic for configuration models")

    def out_mean(self, v: int) -> float:
        if self.model != "ird":
            raise ValueError("out-degree means exist only for IRD")
        return self.lam_in * float(self.wbar_out[v]) * self.scale

    # marks -------------------------------------------------------------
    def mark(self, v: int, root: bool, counts: tuple = ()) -> FullMark:
        """Full mark of a node drawn from vertex v; ``counts`` are the Poisson draws for IR/IRD."""
        a = self.attribute(v)
        shift = 0 if root else 1
        if self.model == "cm":
            return FullMark((int(self.degrees[v]),), a)
        if self.model == "dcm":
            return FullMark((int(self.din[v]), int(self.dout[v])), a)
        if self.model == "ir":
            return FullMark((counts[0] + shift,), a)
        return FullMark((counts[0], counts[1] + shift), a)

    def sample_mark(self, v: int, root: bool, rng: np.random.Generator) -> FullMark:
        if self.model == "ir":
            return self.mark(v, root, (int(rng.poisson(self.offspring_mean(v))),))
        if self.model == "ird":
            return self.mark(v, root, (int(rng.poisson(self.offspring_mean(v))), int(rng.poisson(self.out_mean(v)))))
        return self.mark(v, root)

    # attribute coupling --------------------------------------------------
    def coupling(self, limit: "LimitLaw", root: bool) -> "AttributeCoupling":
        key = (id(limit), root)
        hit = self._couplings.get(key)
        if hit is not None and hit[0] is limit:
            return hit[1]
        marg = limit.root_marginals if root else limit.nonroot_marginals
        weights = None if root else self.weights
        cpl = AttributeCoupling(self.attrs, marg, limit.aux, weights)
        self._couplings[key] = (limit, cpl)
        return cpl


# ---------------------------------------------------------------------------
# limit law


@dataclass(eq=False)
class LimitLaw:
    """The n-free tree law built from a reference measure.

    ``marginals`` holds one law (CM degree / IR weight) or two (in, out) for
    directed models, which are taken independent. IR offspring are
    Poisson(W E[W]/theta); IRD in/out counts are Poisson(c_in W_in) and
    Poisson(c_out W_out) with c_in = E[W_out]/theta and c_out = E[W_in]/theta.
    """

    model: str
    marginals: tuple
    aux: AuxGenerator = field(default_factory=AuxGenerator)
    theta: float | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model '{self.model}'")
        self.marginals = tuple(self.marginals)
        width = 2 if self.model in ("dcm", "ird") else 1
        if len(self.marginals) != width:
            raise ValueError(f"{self.model} needs {width} marginal law(s)")
        for law in self.marginals:
            if not isinstance(law, ReferenceLaw):
                raise ValueError("marginals must be reference laws")
            if not math.isfinite(law.mean):
                raise ValueError("reference law must have a finite mean")
            if self.model in ("cm", "dcm") and not law.integer_valued:
                raise ValueError("configuration models need integer-valued degree laws")
        means = [law.mean for law in self.marginals]
        if self.theta is None and self.model in ("ir", "ird"):
            self.theta = float(sum(means))
        if self.model in ("ir", "ird") and not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.model == "dcm" and abs(means[0] - means[1]) > 1e-9 * max(1.0, means[0]):
            raise ValueError("DCM in and out degree laws need equal means")
        # size-biasing: CM/IR by the primary, DCM/IRD by the out coordinate
        if self.model in ("cm", "ir"):
            self.root_marginals = self.marginals
            self.nonroot_marginals = (self.marginals[0].biased(),) if means[0] > 0 else self.marginals
        else:
            self.root_marginals = self.marginals
            self.nonroot_marginals = ((self.marginals[0], self.marginals[1].biased())
                                      if means[1] > 0 else self.marginals)

    @property
    def kind(self) -> str:
        return MODEL_KIND[self.model]

    @property
    def directed(self) -> bool:
        return self.model in ("dcm", "ird")

    @property
    def ratio(self) -> float:
        return self.marginals[0].mean / self.theta

    @property
    def c_in(self) -> float:
        return self.marginals[1].mean / self.theta

    @property
    def c_out(self) -> float:
        return self.marginals[0].mean / self.theta

    def attribute_from(self, primary, aux) -> Attribute:
        if self.model in ("cm", "dcm"):
            prim = tuple(int(round(float(x))) for x in primary)
        else:
            prim = tuple(float(x) for x in primary)
        return Attribute(self.kind, prim, tuple(float(b) for b in aux))

    def mark_from(self, attr: Attribute, root: bool, u_counts=()) -> FullMark:
        """Full mark given the attribute and (IR/IRD) the uniforms driving the Poisson counts."""
        shift = 0 if root else 1
        if self.model == "cm":
            return FullMark((attr.primary[0],), attr)
        if self.model == "dcm":
            return FullMark(attr.primary, attr)
        if self.model == "ir":
            n_off = poisson_inverse(u_counts[0], self.ratio * attr.primary[0])
            return FullMark((n_off + shift,), attr)
        d_in = poisson_inverse(u_counts[0], self.c_in * attr.primary[0])
        d_out = poisson_inverse(u_counts[1], self.c_out * attr.primary[1])
        return FullMark((d_in, d_out + shift), attr)

    def sample_mark(self, root: bool, rng: np.random.Generator) -> FullMark:
        marg = self.root_marginals if root else self.nonroot_marginals
        prim = [float(law.ppf(rng.random())) for law in marg]
        aux = self.aux.generate(np.array([prim if self.directed else prim[0]]),
                                rng.random((1, self.aux.dimension)))[0]
        attr = self.attribute_from(prim, aux)
        return self.mark_from(attr, root, tuple(rng.random(2)))


# ---------------------------------------------------------------------------
# attribute coupling


class AttributeCoupling:
    """Comonotone coupling of a weighted empirical attribute law with a reference law.

    The first primary coordinate selects the vertex through its weighted
    quantile function, so the intermediate side is drawn exactly from the
    weighted empirical law. Every other coordinate of the limit side (second
    primary coordinate, aux uniforms) is driven by the randomized probability
    integral transform of the chosen vertex's coordinate under its weighted
    marginal, which is exactly uniform. Each limit marginal is therefore
    exact and each coordinate pair is comonotone.
    """

    def __init__(self, attrs: AttributeSequence, marginals, aux: AuxGenerator, weights=None):
        n = attrs.n
        w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=np.float64)
        if w.sum() <= 0:
            raise ValueError("coupling weights must not all vanish")
        w = w / w.sum()
        self.attrs = attrs
        self.marginals = tuple(marginals)
        self.aux_gen = aux
        self.weights = w
        prim = attrs.primary.reshape(n, -1).astype(np.float64)
        self._x = prim
        order = np.lexsort((np.arange(n), prim[:, 0]))
        sw = w[order]
        cum = np.cumsum(sw)
        cum[-1] = 1.0
        self._order = order
        self._cum = cum
        start = np.empty(n)
        start[order] = cum - sw
        self._start = start
        self._pit = [self._pit_bounds(prim[:, c]) for c in range(1, prim.shape[1])]
        self._aux_pit = [self._pit_bounds(attrs.aux[:, c]) for c in range(attrs.aux_dimension)]
        if aux.dimension != attrs.aux_dimension:
            raise ValueError("aux generator dimension does not match the attributes")

    def _pit_bounds(self, values):
        uniq, inv = np.unique(values, return_inverse=True)
        mass = np.bincount(inv, weights=self.weights, minlength=uniq.size)
        upper = np.cumsum(mass)
        upper[-1] = 1.0
        lower = upper - mass
        return lower[inv], upper[inv]

    def vertex_for(self, u):
        idx = np.minimum(np.searchsorted(self._cum, u, side="right"), self._cum.size - 1)
        return self._order[idx]

    def _limit_from(self, vertices, u1, v_rest, v_aux):
        prims = [self.marginals[0].ppf(u1)]
        for c, (lo, hi) in enumerate(self._pit):
            prims.append(self.marginals[c + 1].ppf(lo[vertices] + v_rest[:, c] * (hi[vertices] - lo[vertices])))
        prim = np.stack(prims, axis=1)
        if self._aux_pit:
            u = np.stack([lo[vertices] + v_aux[:, c] * (hi[vertices] - lo[vertices])
                          for c, (lo, hi) in enumerate(self._aux_pit)], axis=1)
        else:
            u = np.zeros((vertices.size, 0))
        aux = self.aux_gen.generate(prim if prim.shape[1] == 2 else prim[:, 0], u)
        return prim, aux

    def sample(self, rng: np.random.Generator, size: int):
        """Joint draws: (vertices, intermediate primaries, limit primaries, limit aux)."""
        u1 = rng.random(size)
        verts = self.vertex_for(u1)
        prim, aux = self._limit_from(verts, u1, rng.random((size, len(self._pit))),
                                     rng.random((size, len(self._aux_pit))))
        return verts, self._x[verts], prim, aux

    def limit_given(self, v: int, rng: np.random.Generator):
        """Limit (primary, aux) drawn from the coupling conditionally on vertex v."""
        verts = np.array([v])
        u1 = self._start[v] + rng.random(1) * self.weights[v]
        prim, aux = self._limit_from(verts, u1, rng.random((1, len(self._pit))),
                                     rng.random((1, len(self._aux_pit))))
        return prim[0], aux[0]

    def expected_distance(self, aux_draws: int = 20000, seed: int = 0) -> float:
        """E of the attribute distance under the coupling.

        Primary coordinates are exact 1-D Wasserstein distances (the coupling
        is comonotone in each); the aux part, if any, is a Monte Carlo mean.
        """
        total = 0.0
        for c, law in enumerate(self.marginals):
            total += w1_quantile(EmpiricalMeasure(self._x[:, c], self.weights), law)
        if self._aux_pit:
            rng = np.random.default_rng(seed)
            verts, _, _, aux = self.sample(rng, aux_draws)
            total += float(np.abs(self.attrs.aux[verts] - aux).sum(axis=1).mean())
        return total


def couple_attribute(attrs: AttributeSequence, limit: LimitLaw, weights=None) -> AttributeCoupling:
    """Couple the empirical law of ``attrs`` (optionally reweighted) with the limit root law."""
    return AttributeCoupling(attrs, limit.root_marginals, limit.aux, weights)


def couple_attribute_biased(attrs: AttributeSequence, limit: LimitLaw, weights) -> AttributeCoupling:
    """Couple the size-biased empirical law (weights given) with the size-biased limit law."""
    return AttributeCoupling(attrs, limit.nonroot_marginals, limit.aux, weights)


# ---------------------------------------------------------------------------
# tree samplers


def _grow(depth: int, root_mark, child_mark, start_label=(), start_depth=0):
    """Breadth-first growth; ``child_mark()`` returns (mark, source)."""
    marks, sources = {}, {}
    mark, src = root_mark
    queue = deque([(start_label, mark, src)])
    while queue:
        lab, mark, src = queue.popleft()
        marks[lab] = mark
        sources[lab] = src
        level = start_depth + len(lab) - len(start_label)
        if level >= depth:
            continue
        n_kids = mark.degrees[0] if mark.directed else mark.degrees[0] - (0 if level == 0 and start_depth == 0 else 1)
        for j in range(1, n_kids + 1):
            m, s = child_mark()
            queue.append((lab + (j,), m, s))
    return marks, sources


def sample_intermediate_tree(law: IntermediateLaw, k: int, seed, root: int | None = None) -> RootedMarkedTree:
    """Delayed marked GW tree from the intermediate law, cut at depth k."""
    if k < 0:
        raise ValueError("depth must be nonnegative")
    rng = as_generator(seed)
    v0 = law.root_vertex(rng) if root is None else int(root)

    def child():
        v = law.nonroot_vertex(rng)
        return law.sample_mark(v, False, rng), v

    marks, sources = _grow(k, (law.sample_mark(v0, True, rng), v0), child)
    return RootedMarkedTree(marks, k, sources)


def sample_intermediate_subtree(law: IntermediateLaw, label: tuple, depth: int, rng: np.random.Generator) -> tuple:
    """Marks and sources of a fresh GW subtree hanging at ``label`` (a root if label is empty)."""
    is_root = len(label) == 0
    v0 = law.root_vertex(rng) if is_root else law.nonroot_vertex(rng)

    def child():
        v = law.nonroot_vertex(rng)
        return law.sample_mark(v, False, rng), v

    return _grow(depth, (law.sample_mark(v0, is_root, rng), v0), child, label, len(label))


def sample_limit_tree(law: LimitLaw, k: int, seed) -> RootedMarkedTree:
    """Delayed marked GW tree from the limit law, cut at depth k."""
    if k < 0:
        raise ValueError("depth must be nonnegative")
    rng = as_generator(seed)
    marks, _ = _grow(k, (law.sample_mark(True, rng), None), lambda: (law.sample_mark(False, rng), None))
    return RootedMarkedTree(marks, k)


# ---------------------------------------------------------------------------
# tree-to-tree coupling


@dataclass(frozen=True, eq=False)
class TreeCouplingOutcome:
    intermediate: RootedMarkedTree
    limit: RootedMarkedTree
    kappa: int | None
    distances: dict

    @property
    def shapes_equal(self) -> bool:
        return set(self.intermediate.marks) == set(self.limit.marks)


def glue_limit_mark(inter: IntermediateLaw, limit: LimitLaw, v: int, mark: FullMark, root: bool,
                    rng: np.random.Generator) -> FullMark:
    """Draw the limit mark paired with an intermediate node (vertex v, full mark) under the coupling."""
    prim, aux = inter.coupling(limit, root).limit_given(v, rng)
    attr = limit.attribute_from(prim, aux)
    shift = 0 if root else 1
    if limit.model == "ir":
        u = conditional_poisson_uniform(mark.degrees[0] - shift, inter.offspring_mean(v), rng.random())
        return limit.mark_from(attr, root, (u,))
    if limit.model == "ird":
        u_in = conditional_poisson_uniform(mark.degrees[0], inter.offspring_mean(v), rng.random())
        u_out = conditional_poisson_uniform(mark.degrees[1] - shift, inter.out_mean(v), rng.random())
        return limit.mark_from(attr, root, (u_in, u_out))
    return limit.mark_from(attr, root)


def couple_trees(inter: IntermediateLaw, limit: LimitLaw, k: int, eps: float, seed,
                 intermediate: RootedMarkedTree | None = None) -> TreeCouplingOutcome:
    """Couple an intermediate tree with a limit tree node by node.

    Nodes carrying the same label are paired through the attribute coupling
    and, for IR/IRD, a shared Poisson uniform. If ``intermediate`` is given
    (with ``sources``), the limit tree is drawn from its conditional law given
    that tree, which is how the graph-side coupling is composed with this one.
    kappa is the first generation holding a pair farther apart than ``eps``
    (or a node present in only one tree).
    """
    if inter.model != limit.model:
        raise ValueError("intermediate and limit laws belong to different models")
    rng = as_generator(seed)
    if intermediate is None:
        intermediate = sample_intermediate_tree(inter, k, rng)
    if intermediate.sources is None:
        raise ValueError("intermediate tree needs vertex sources")
    marks = {}
    queue = deque([()])
    while queue:
        lab = queue.popleft()
        root = len(lab) == 0
        if lab in intermediate.marks:
            m = glue_limit_mark(inter, limit, intermediate.sources[lab], intermediate.marks[lab], root, rng)
        else:
            m = limit.sample_mark(root, rng)
        marks[lab] = m
        if len(lab) < k:
            n_kids = m.degrees[0] if m.directed else m.degrees[0] - (0 if root else 1)
            queue.extend(lab + (j,) for j in range(1, n_kids + 1))
    limit_tree = RootedMarkedTree(marks, k)
    distances = {lab: full_mark_distance(intermediate.marks[lab], marks[lab])
                 for lab in intermediate.marks if lab in marks}
    kappa = None
    for r in range(k + 1):
        gen_i = {lab for lab in intermediate.marks if len(lab) == r}
        gen_l = {lab for lab in marks if len(lab) == r}
        if gen_i != gen_l or any(distances[lab] > eps for lab in gen_i):
            kappa = r
            break
    return TreeCouplingOutcome(intermediate, limit_tree, kappa, distances)


# ---------------------------------------------------------------------------
# independent copies


@dataclass(frozen=True)
class CollisionReport:
    splices: tuple

    @property
    def total(self) -> int:
        return sum(self.splices)


def independent_copies(inter: IntermediateLaw, roots, k: int, seed, trees=None):
    """Turn m trees rooted at distinct vertices into i.i.d. intermediate trees.

    The first tree is kept. Later trees are copied node by node while the
    node's vertex has not been seen in any earlier copied node; at a repeated
    vertex an independent GW subtree from the intermediate law is spliced in
    instead. Without ``trees``, trees rooted at ``roots`` are sampled first.
    Returns (copies, CollisionReport).
    """
    roots = [int(r) for r in roots]
    if len(set(roots)) != len(roots):
        raise ValueError("roots must be distinct")
    if not roots:
        raise ValueError("need at least one root")
    rng = as_generator(seed)
    if trees is None:
        trees = [sample_intermediate_tree(inter, k, rng, root=r) for r in roots]
    if len(trees) != len(roots):
        raise ValueError("one tree per root expected")
    seen = set(trees[0].sources.values())
    copies = [trees[0]]
    splices = [0]
    for t in trees[1:]:
        marks, sources = {}, {}
        spliced = []
        count = 0
        for lab, mark in t.marks.items():
            if any(lab[:len(p)] == p for p in spliced):
                continue
            v = t.sources[lab]
            if v not in seen:
                marks[lab] = mark
                sources[lab] = v
                seen.add(v)
            else:
                sub_m, sub_s = sample_intermediate_subtree(inter, lab, t.depth, rng)
                marks.update(sub_m)
                sources.update(sub_s)
                spliced.append(lab)
                count += 1
        order = sorted(marks, key=lambda lab: (len(lab), lab))
        copies.append(RootedMarkedTree({lab: marks[lab] for lab in order}, t.depth,
                                       {lab: sources[lab] for lab in order}))
        splices.append(count)
    return copies, CollisionReport(tuple(splices))
