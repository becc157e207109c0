"""Numeric kernels: Poisson pseudoinverse, Wasserstein-1 distances, intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

# Beyond this mean exp(-lam) underflows and forward accumulation is useless.
_LOG_SAFE = 700.0


def poisson_cap(lam: float) -> int:
    return int(lam + 20.0 * math.sqrt(lam) + 100.0)


def _poisson_inverse_scalar(u: float, lam: float) -> int:
    if lam < 0 or not math.isfinite(lam):
        raise ValueError(f"Poisson mean must be finite and nonnegative, got {lam}")
    p = math.exp(-lam)
    if u <= p:
        return 0
    if lam > _LOG_SAFE:
        return int(stats.poisson.ppf(u, lam))
    cap = poisson_cap(lam)
    cdf = p
    m = 0
    while cdf < u:
        m += 1
        if m >= cap:
            return cap
        p *= lam / m
        cdf += p
    return m


def _poisson_inverse_table(u: np.ndarray, lam: float) -> np.ndarray:
    # same accumulation as the scalar path, tabulated once up to the cap
    cap = poisson_cap(lam)
    cdf = np.empty(cap + 1)
    p = math.exp(-lam)
    acc = p
    cdf[0] = acc
    for m in range(1, cap + 1):
        p *= lam / m
        acc += p
        cdf[m] = acc
    cdf[cap] = np.inf
    return np.searchsorted(cdf, u, side="left").astype(np.int64)


def poisson_inverse(u, lam):
    """Smallest m with G(m; lam) >= u, by forward accumulation of the pmf.

    Works on scalars or broadcastable arrays. The count is capped at
    ``lam + 20 sqrt(lam) + 100``.
    """
    if np.ndim(u) == 0 and np.ndim(lam) == 0:
        return _poisson_inverse_scalar(float(u), float(lam))
    if np.ndim(lam) == 0 and 0 <= float(lam) <= _LOG_SAFE:
        return _poisson_inverse_table(np.asarray(u, dtype=np.float64), float(lam))
    u, lam = np.broadcast_arrays(np.asarray(u, dtype=np.float64), np.asarray(lam, dtype=np.float64))
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("Poisson means must be finite and nonnegative")
    out = np.zeros(u.shape, dtype=np.int64)
    p0 = np.exp(-lam)
    idx = np.flatnonzero(u > p0)
    if idx.size == 0:
        return out
    uu = u.ravel()[idx]
    ll = lam.ravel()[idx]
    big = ll > _LOG_SAFE
    if np.any(big):
        out.ravel()[idx[big]] = stats.poisson.ppf(uu[big], ll[big]).astype(np.int64)
        idx, uu, ll = idx[~big], uu[~big], ll[~big]
    p = np.exp(-ll)
    cdf = p.copy()
    caps = (ll + 20.0 * np.sqrt(ll) + 100.0).astype(np.int64)
    res = np.zeros(idx.size, dtype=np.int64)
    active = np.arange(idx.size)
    m = 0
    while active.size:
        m += 1
        p[active] *= ll[active] / m
        cdf[active] += p[active]
        res[active] = m
        capped = m >= caps[active]
        active = active[(cdf[active] < uu[active]) & ~capped]
    out.ravel()[idx] = res
    return out


def poisson_cdf_pair(m: int, lam: float) -> tuple[float, float]:
    """(G(m-1; lam), G(m; lam)) with the accumulation used by poisson_inverse."""
    if m < 0:
        raise ValueError("count must be nonnegative")
    if lam > _LOG_SAFE:
        return float(stats.poisson.cdf(m - 1, lam)), float(stats.poisson.cdf(m, lam))
    p = math.exp(-lam)
    prev, cdf = 0.0, p
    for j in range(1, m + 1):
        p *= lam / j
        prev, cdf = cdf, cdf + p
    return prev, cdf


def conditional_poisson_uniform(m: int, lam: float, v: float) -> float:
    """A uniform U with G^{-1}(U; lam) = m, given an independent uniform v.

    If m came from G^{-1}(U; lam) then U given m is uniform on
    (G(m-1), G(m)]; this returns a draw from that conditional law.
    """
    lo, hi = poisson_cdf_pair(m, lam)
    if hi <= lo:
        return hi
    return lo + (1.0 - v) * (hi - lo)


# ---------------------------------------------------------------------------
# empirical measures and Wasserstein-1

@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted point masses on the real line (or in R^d for the OT oracle)."""

    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def of(cls, points, weights=None) -> "EmpiricalMeasure":
        pts = np.asarray(points, dtype=np.float64)
        if pts.shape[0] == 0:
            raise ValueError("empirical measure needs at least one point")
        if weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.asarray(weights, dtype=np.float64)
            if w.shape[0] != pts.shape[0] or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("weights must be nonnegative, nonzero and match the points")
            w = w / w.sum()
        return cls(pts, w)

    def sorted_1d(self) -> tuple[np.ndarray, np.ndarray]:
        if self.points.ndim != 1:
            raise ValueError("1-D measure expected")
        order = np.argsort(self.points, kind="stable")
        return self.points[order], self.weights[order]

    def quantile(self, u):
        x, w = self.sorted_1d()
        cum = np.cumsum(w)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, np.asarray(u), side="left")
        return x[np.minimum(idx, x.size - 1)]


def _as_measure(a) -> EmpiricalMeasure:
    if isinstance(a, EmpiricalMeasure):
        return a
    return EmpiricalMeasure.of(np.asarray(a, dtype=np.float64).ravel())


def w1_quantile(a, b) -> float:
    """Integral of |F_a^{-1} - F_b^{-1}| over (0, 1).

    ``a`` is a sample (array or EmpiricalMeasure). ``b`` is either another
    sample or a law exposing ``cdf``, ``ppf`` and ``quantile_integral``
    (the map u -> integral of its quantile function over (0, u)).
    """
    xa, wa = _as_measure(a).sorted_1d()
    ca = np.cumsum(wa)
    ca[-1] = 1.0
    if hasattr(b, "quantile_integral"):
        return _w1_sample_law(xa, ca, b)
    xb, wb = _as_measure(b).sorted_1d()
    cb = np.cumsum(wb)
    cb[-1] = 1.0
    knots = np.union1d(ca, cb)
    lo = np.concatenate(([0.0], knots[:-1]))
    mid = 0.5 * (lo + knots)
    qa = xa[np.minimum(np.searchsorted(ca, mid, side="left"), xa.size - 1)]
    qb = xb[np.minimum(np.searchsorted(cb, mid, side="left"), xb.size - 1)]
    return float(np.sum(np.abs(qa - qb) * (knots - lo)))


def _w1_sample_law(x: np.ndarray, cum: np.ndarray, law) -> float:
    u0 = np.concatenate(([0.0], cum[:-1]))
    u1 = cum
    keep = u1 > u0
    x, u0, u1 = x[keep], u0[keep], u1[keep]
    # F^{-1}(u) <= x exactly when u <= F(x)
    us = np.clip(np.asarray(law.cdf(x), dtype=np.float64), u0, u1)
    m0 = law.quantile_integral(u0)
    m1 = law.quantile_integral(u1)
    ms = law.quantile_integral(us)
    below = x * (us - u0) - (ms - m0)
    above = (m1 - ms) - x * (u1 - us)
    return float(np.sum(np.maximum(below, 0.0) + np.maximum(above, 0.0)))


W1_ORACLE_CAP = 64


def w1_exact_discrete(a, b, metric=None) -> float:
    """Exact optimal transport cost between two small weighted samples.

    ``a`` and ``b`` are EmpiricalMeasure objects or plain arrays (uniform
    weights). ``metric`` is an explicit cost matrix, or None for the L1
    distance between points. Equal-size uniform instances use the assignment
    solver; the rest go to the HiGHS simplex on the transport LP.
    """
    ma, mb = _as_measure_nd(a), _as_measure_nd(b)
    na, nb = ma.weights.size, mb.weights.size
    if na > W1_ORACLE_CAP or nb > W1_ORACLE_CAP:
        raise ValueError(f"oracle supports at most {W1_ORACLE_CAP} points per side")
    if metric is None:
        pa = ma.points.reshape(na, -1)
        pb = mb.points.reshape(nb, -1)
        cost = np.abs(pa[:, None, :] - pb[None, :, :]).sum(axis=2)
    else:
        cost = np.asarray(metric, dtype=np.float64)
        if cost.shape != (na, nb):
            raise ValueError("metric matrix shape does not match the supports")
    if na == nb and np.allclose(ma.weights, 1.0 / na) and np.allclose(mb.weights, 1.0 / nb):
        rows, cols = optimize.linear_sum_assignment(cost)
        return float(cost[rows, cols].sum() / na)
    a_eq = np.zeros((na + nb, na * nb))
    for i in range(na):
        a_eq[i, i * nb:(i + 1) * nb] = 1.0
    for j in range(nb):
        a_eq[na + j, j::nb] = 1.0
    b_eq = np.concatenate((ma.weights, mb.weights))
    res = optimize.linprog(cost.ravel(), A_eq=a_eq[:-1], b_eq=b_eq[:-1], bounds=(0, None),
                           method="highs-ds",
                           options={"primal_feasibility_tolerance": 1e-10,
                                    "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun)


def _as_measure_nd(a) -> EmpiricalMeasure:
    if isinstance(a, EmpiricalMeasure):
        return a
    return EmpiricalMeasure.of(np.asarray(a, dtype=np.float64))


# ---------------------------------------------------------------------------
# intervals

def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    z = stats.norm.ppf(0.5 + level / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def pearson_interval(x, y, level: float = 0.95) -> tuple[float, float, float]:
    """Pearson r with a Fisher-z confidence interval: (r, lo, hi)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 4:
        raise ValueError("need at least four paired observations")
    if x.std() == 0 or y.std() == 0:
        return float("nan"), float("nan"), float("nan")
    r = float(np.corrcoef(x, y)[0, 1])
    z = math.atanh(min(max(r, -0.999999999), 0.999999999))
    half = stats.norm.ppf(0.5 + level / 2) / math.sqrt(x.size - 3)
    return r, math.tanh(z - half), math.tanh(z + half)


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])
