"""Edge-level discrepancy diagnostics for the inhomogeneous couplings."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..attributes import AttributeSequence
from ..graphs import KernelConfig, edge_probability_row
from ..laws import ReferenceLaw
from ..stats import w1_quantile


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Quantities entering the per-vertex mismatch bound.

    ``delta``: quantile distance between the empirical and reference weight
    laws; ``g_b``: E[(W - b_n)^+]; ``eta``: the combined rate term;
    ``p_i``: sum over j of |p_ji - min(r_ji, 1)|; ``e_n``: the average of
    p_i over all vertices (None unless requested); ``bound``: the resulting
    bound on P(some X_ji differs from Z_ji).
    """

    delta: float
    g_b: float
    eta: float
    p_i: float
    bound: float
    b_n: float
    e_n: float | None = None


def positive_part_mean(law: ReferenceLaw, x: float) -> float:
    """g(x) = E[(W - x)^+] through the integrated quantile function."""
    mean = law.mean
    if not math.isfinite(mean):
        raise ValueError("reference law needs a finite first moment")
    if x <= 0:
        return mean - x
    fx = float(law.cdf(x))
    below = float(law.quantile_integral(np.array([fx]))[0])
    return max(0.0, (mean - below) - x * (1.0 - fx))


def _sides(attrs: AttributeSequence, kernel: KernelConfig):
    n = attrs.n
    if attrs.kind == "ir-weight":
        return attrs.primary, attrs.primary, kernel.truncation.b(n), kernel.truncation.b(n), "undirected"
    if attrs.kind == "ird-weights":
        # column i collects j -> i: target side W_in (cut at a_n), source side W_out (cut at b_n)
        return attrs.primary[:, 0], attrs.primary[:, 1], kernel.truncation.a(n), kernel.truncation.b(n), "in"
    raise ValueError("diagnostics need IR or IRD attributes")


def _p_sum(attrs, kernel, i, target, source, direction) -> float:
    n = attrs.n
    p = edge_probability_row(attrs, kernel, i, direction)
    r = np.minimum(1.0, float(target[i]) * source / (kernel.theta * n))
    gap = np.abs(p - r)
    gap[i] = 0.0
    return float(gap.sum())


def edge_discrepancy_diagnostics(attrs: AttributeSequence, kernel: KernelConfig, i: int,
                                 reference: ReferenceLaw, total: bool = False) -> DiagnosticsRecord:
    """Diagnostics for vertex i against the reference law of the source-side weights.

    For IRD the inbound column of i is used: the reference law describes
    W_out, and W_in of i is truncated at a_n.
    """
    if not 0 <= i < attrs.n:
        raise ValueError(f"vertex {i} outside 0..{attrs.n - 1}")
    if not math.isfinite(reference.mean):
        raise ValueError("reference law needs a finite first moment")
    target, source, cut_i, b, direction = _sides(attrs, kernel)
    n, theta = attrs.n, kernel.theta
    delta = w1_quantile(np.asarray(source, dtype=np.float64), reference)
    g_b = positive_part_mean(reference, b)
    eta = (delta + g_b + b * b / n + b * b * delta / (theta * n)) / theta
    p_i = _p_sum(attrs, kernel, i, target, source, direction)
    w_i = float(target[i])
    bound = min(1.0, (1.0 if w_i > cut_i else 0.0) + p_i + min(w_i, cut_i) * eta)
    e_n = None
    if total:
        e_n = sum(_p_sum(attrs, kernel, j, target, source, direction) for j in range(n)) / n
    return DiagnosticsRecord(delta, g_b, eta, p_i, bound, b, e_n)


def pair_mismatch_probability(p: float, q: float) -> float:
    """Exact P(1(U > 1 - p) != G^{-1}(U; q)) for a single uniform U."""
    if not (0.0 <= p <= 1.0) or q < 0:
        raise ValueError("need p in [0, 1] and q >= 0")
    e0 = math.exp(-q)
    e1 = e0 + e0 * q
    cut = 1.0 - p
    # Z = 0 on [0, e0], Z = 1 on (e0, e1], Z >= 2 above; X = 1 above cut
    return max(0.0, e0 - cut) + max(0.0, min(e1, cut) - e0) + (1.0 - e1)


def pair_mismatch_bound(p: float, r: float, q: float) -> float:
    """|p - min(r, 1)| + (r - q) + q^2."""
    return abs(p - min(r, 1.0)) + (r - q) + q * q
