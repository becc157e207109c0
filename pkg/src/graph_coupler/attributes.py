"""Vertex attributes, full marks, and the metrics on them."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

KINDS = ("cm-degree", "ir-weight", "dcm-degrees", "ird-weights")
MODEL_KIND = {"cm": "cm-degree", "ir": "ir-weight", "dcm": "dcm-degrees", "ird": "ird-weights"}
DIRECTED_KINDS = ("dcm-degrees", "ird-weights")
DEGREE_KINDS = ("cm-degree", "dcm-degrees")


@dataclass(frozen=True, slots=True)
class Attribute:
    """a_i: primary coordinates (degree(s) or weight(s)) plus the aux vector b_i."""

    kind: str
    primary: tuple
    aux: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown attribute kind '{self.kind}'")
        width = 2 if self.kind in DIRECTED_KINDS else 1
        if len(self.primary) != width:
            raise ValueError(f"{self.kind} needs {width} primary coordinate(s)")
        for x in self.primary:
            if not np.isfinite(x) or x < 0:
                raise ValueError("primary coordinates must be finite and nonnegative")
        if self.kind in DEGREE_KINDS and any(int(x) != x for x in self.primary):
            raise ValueError("degrees must be integers")

    @property
    def directed(self) -> bool:
        return self.kind in DIRECTED_KINDS


@dataclass(frozen=True, slots=True)
class FullMark:
    """X_i: realized degree(s) followed by the attribute.

    ``degrees`` is (D,) for undirected models and (D_in, D_out) for directed ones.
    """

    degrees: tuple
    attribute: Attribute

    @property
    def directed(self) -> bool:
        return len(self.degrees) == 2


def aux_distance(b1, b2) -> float:
    """L1 distance between aux vectors."""
    a = np.asarray(b1, dtype=np.float64)
    b = np.asarray(b2, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"aux dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def attribute_distance(a1: Attribute, a2: Attribute) -> float:
    """Sum of primary gaps plus the aux distance."""
    if a1.kind != a2.kind:
        raise ValueError(f"attribute kinds differ: {a1.kind} vs {a2.kind}")
    gap = sum(abs(float(x) - float(y)) for x, y in zip(a1.primary, a2.primary))
    return gap + aux_distance(a1.aux, a2.aux)


def full_mark_distance(x: FullMark, y: FullMark) -> float:
    """Degree gaps plus primary gaps plus aux distance."""
    if x.directed != y.directed:
        raise ValueError("cannot compare directed and undirected marks")
    gap = sum(abs(int(p) - int(q)) for p, q in zip(x.degrees, y.degrees))
    return gap + attribute_distance(x.attribute, y.attribute)


class AttributeSequence:
    """The attributes a_1..a_n of one graph, stored column-wise.

    ``primary`` has shape (n,) for undirected kinds and (n, 2) for directed
    ones (in, out); ``aux`` has shape (n, d). Arrays are frozen on construction.
    """

    def __init__(self, kind: str, primary, aux=None, theta: float | None = None):
        if kind not in KINDS:
            raise ValueError(f"unknown attribute kind '{kind}'")
        directed = kind in DIRECTED_KINDS
        integer = kind in DEGREE_KINDS
        prim = np.asarray(primary)
        if prim.ndim == 1 and directed and prim.size == 0:
            prim = prim.reshape(0, 2)
        if (directed and (prim.ndim != 2 or prim.shape[1] != 2)) or (not directed and prim.ndim != 1):
            raise ValueError(f"bad primary shape {prim.shape} for {kind}")
        if integer:
            if prim.size and (np.any(prim != np.round(prim)) or np.any(prim < 0)):
                raise ValueError("degrees must be nonnegative integers")
            prim = prim.astype(np.int64)
        else:
            prim = prim.astype(np.float64)
            if prim.size and (np.any(~np.isfinite(prim)) or np.any(prim < 0)):
                raise ValueError("weights must be finite and nonnegative")
        n = prim.shape[0]
        aux_arr = np.zeros((n, 0)) if aux is None else np.asarray(aux, dtype=np.float64)
        if aux_arr.ndim == 1:
            aux_arr = aux_arr.reshape(n, -1) if n else aux_arr.reshape(0, 0)
        if aux_arr.shape[0] != n:
            raise ValueError("aux rows must match the number of vertices")
        if aux_arr.size and not np.all(np.isfinite(aux_arr)):
            raise ValueError("aux entries must be finite")
        if theta is not None and not theta > 0:
            raise ValueError("theta must be positive")
        prim.setflags(write=False)
        aux_arr.setflags(write=False)
        self.kind = kind
        self.primary = prim
        self.aux = aux_arr
        self.theta = None if theta is None else float(theta)

    # shape -------------------------------------------------------------
    @property
    def n(self) -> int:
        return int(self.primary.shape[0])

    def __len__(self) -> int:
        return self.n

    @property
    def directed(self) -> bool:
        return self.kind in DIRECTED_KINDS

    @property
    def aux_dimension(self) -> int:
        return int(self.aux.shape[1])

    def attribute(self, i: int) -> Attribute:
        i = int(i)
        memo = self._attributes
        a = memo.get(i)
        if a is None:
            a = memo[i] = self._build_attribute(i)
        return a

    @cached_property
    def _attributes(self) -> dict:
        return {}

    @cached_property
    def _nominal(self) -> dict:
        return {}

    def nominal_mark(self, i: int) -> FullMark:
        """Full mark whose degrees are the primary coordinates (exact for degree kinds)."""
        m = self._nominal.get(i)
        if m is None:
            a = self.attribute(i)
            m = self._nominal[i] = FullMark(a.primary, a)
        return m

    def _build_attribute(self, i: int) -> Attribute:
        if self.directed:
            p = self.primary[i]
            prim = (int(p[0]), int(p[1])) if self.kind == "dcm-degrees" else (float(p[0]), float(p[1]))
        else:
            p = self.primary[i]
            prim = (int(p),) if self.kind == "cm-degree" else (float(p),)
        return Attribute(self.kind, prim, tuple(float(b) for b in self.aux[i]))

    def __iter__(self):
        return (self.attribute(i) for i in range(self.n))

    # aggregates ----------------------------------------------------------
    @cached_property
    def total(self):
        """L_n (CM), (sum in, sum out) for DCM/IRD, sum W for IR."""
        if self.directed:
            s = self.primary.sum(axis=0)
            return (s[0].item(), s[1].item())
        return self.primary.sum().item()

    @cached_property
    def primary_lists(self):
        """Primary coordinates as Python lists: one list, or (in, out) for directed kinds."""
        if self.directed:
            return self.primary[:, 0].tolist(), self.primary[:, 1].tolist()
        return self.primary.tolist()

    @cached_property
    def stub_offsets(self):
        """First stub index of every vertex as Python lists: one list, or (in, out) for DCM."""
        if self.kind == "cm-degree":
            return np.concatenate(([0], np.cumsum(self.primary)[:-1])).astype(np.int64).tolist()
        if self.kind == "dcm-degrees":
            cols = [self.primary[:, c] for c in (0, 1)]
            return tuple(np.concatenate(([0], np.cumsum(c)[:-1])).astype(np.int64).tolist() for c in cols)
        raise ValueError("stub offsets exist only for degree attributes")

    def empirical_theta(self) -> float:
        if self.n == 0:
            raise ValueError("empty attribute sequence")
        # directed: mean of W_in + W_out
        return float(self.primary.sum()) / self.n

    def effective_theta(self) -> float:
        return self.theta if self.theta is not None else self.empirical_theta()

    def with_primary(self, primary) -> "AttributeSequence":
        return AttributeSequence(self.kind, primary, self.aux, self.theta)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AttributeSequence):
            return NotImplemented
        return (self.kind == other.kind and self.theta == other.theta
                and np.array_equal(self.primary, other.primary) and np.array_equal(self.aux, other.aux))

    __hash__ = None

    def __repr__(self) -> str:
        return f"AttributeSequence(kind={self.kind!r}, n={self.n}, d={self.aux_dimension})"


def mark_offspring(mark: FullMark, is_root: bool) -> int:
    """The offspring count a tree node's full mark encodes."""
    if mark.directed:
        return int(mark.degrees[0])
    return int(mark.degrees[0]) - (0 if is_root else 1)
