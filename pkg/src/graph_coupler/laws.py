"""Reference laws, their size-biased versions, and auxiliary mark generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

_TINY = 1e-300


class ReferenceLaw:
    """A law on the nonnegative reals with quantile access.

    Subclasses provide ``cdf``, ``ppf``, ``mean`` and ``biased`` (the law
    reweighted by x and renormalized). ``quantile_integral(u)`` returns the
    integral of the quantile function over (0, u), which is what exact
    Wasserstein computations against a sample need.
    """

    name = "law"
    integer_valued = False

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def biased(self) -> "ReferenceLaw":
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf(rng.random(size))

    def quantile_integral(self, u):
        # E[X; X <= F^{-1}(u)] corrected for a split atom
        u = np.asarray(u, dtype=np.float64)
        q = self.ppf(np.clip(u, 0.0, 1.0))
        q = np.where(u >= 1.0, np.inf, q)
        b = self.biased()
        upto = self.mean * np.where(np.isinf(q), 1.0, b.cdf(np.where(np.isinf(q), 0.0, q)))
        atom = self.cdf(np.where(np.isinf(q), 0.0, q)) - u
        atom = np.where(np.isinf(q), 0.0, np.maximum(atom, 0.0))
        return upto - np.where(np.isinf(q), 0.0, q) * atom

    def describe(self) -> dict:
        return {"family": self.name}


class DiscreteLaw(ReferenceLaw):
    """Finitely supported law stored as a table."""

    name = "discrete"

    def __init__(self, values, probs):
        v = np.asarray(values, dtype=np.float64)
        p = np.asarray(probs, dtype=np.float64)
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise ValueError("values and probs must be equal-length 1-D arrays")
        if np.any(p < 0) or p.sum() <= 0:
            raise ValueError("probabilities must be nonnegative and not all zero")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("support must be finite and nonnegative")
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        keep = p > 0
        self.values = v[keep]
        self.probs = p[keep] / p[keep].sum()
        self.cum = np.cumsum(self.probs)
        self.cum[-1] = 1.0
        self.integer_valued = bool(np.all(self.values == np.round(self.values)))
        self._mean = float(np.dot(self.values, self.probs))
        self._prefix = np.concatenate(([0.0], np.cumsum(self.values * self.probs)))

    @property
    def mean(self) -> float:
        return self._mean

    def cdf(self, x):
        idx = np.searchsorted(self.values, np.asarray(x, dtype=np.float64), side="right")
        return np.where(idx == 0, 0.0, self.cum[np.maximum(idx - 1, 0)])

    def ppf(self, u):
        idx = np.searchsorted(self.cum, np.asarray(u, dtype=np.float64), side="left")
        return self.values[np.minimum(idx, self.values.size - 1)]

    def quantile_integral(self, u):
        u = np.clip(np.asarray(u, dtype=np.float64), 0.0, 1.0)
        idx = np.minimum(np.searchsorted(self.cum, u, side="left"), self.values.size - 1)
        prev = np.where(idx == 0, 0.0, self.cum[np.maximum(idx - 1, 0)])
        return self._prefix[idx] + self.values[idx] * (u - prev)

    def biased(self) -> "DiscreteLaw":
        if self._mean <= 0:
            raise ValueError("size-biasing needs a positive mean")
        return DiscreteLaw(self.values, self.values * self.probs)

    def second_moment(self) -> float:
        return float(np.dot(self.values ** 2, self.probs))

    def describe(self) -> dict:
        return {"family": "discrete", "values": self.values.tolist(), "probs": self.probs.tolist()}


def poisson_law(mean: float) -> DiscreteLaw:
    """Poisson(mean) tabulated far enough into the tail to be exact in double precision."""
    if mean < 0 or not math.isfinite(mean):
        raise ValueError("Poisson mean must be finite and nonnegative")
    top = int(mean + 40.0 * math.sqrt(mean) + 40.0)
    ks = np.arange(top + 1)
    law = DiscreteLaw(ks, stats.poisson.pmf(ks, mean))
    law.name = "poisson"
    law.param = mean
    return law


def constant_law(value: float) -> DiscreteLaw:
    law = DiscreteLaw([value], [1.0])
    law.name = "constant"
    return law


class GammaLaw(ReferenceLaw):
    """Gamma(shape, scale); Exp(rate) is shape 1. Size-biasing adds one to the shape."""

    name = "gamma"

    def __init__(self, shape: float, scale: float = 1.0):
        if shape <= 0 or scale <= 0:
            raise ValueError("gamma shape and scale must be positive")
        self.shape = float(shape)
        self.scale = float(scale)
        self._dist = stats.gamma(self.shape, scale=self.scale)

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    def cdf(self, x):
        return special.gammainc(self.shape, np.maximum(np.asarray(x, dtype=np.float64), 0.0) / self.scale)

    def ppf(self, u):
        return special.gammaincinv(self.shape, np.asarray(u, dtype=np.float64)) * self.scale

    def quantile_integral(self, u):
        u = np.clip(np.asarray(u, dtype=np.float64), 0.0, 1.0)
        q = self.ppf(np.minimum(u, 1.0))
        inner = special.gammainc(self.shape + 1, np.where(u >= 1.0, 0.0, q) / self.scale)
        return self.mean * np.where(u >= 1.0, 1.0, inner)

    def biased(self) -> "GammaLaw":
        return GammaLaw(self.shape + 1.0, self.scale)

    def describe(self) -> dict:
        if self.shape == 1.0:
            return {"family": "exponential", "rate": 1.0 / self.scale}
        return {"family": "gamma", "shape": self.shape, "scale": self.scale}


def exponential_law(rate: float = 1.0) -> GammaLaw:
    if rate <= 0:
        raise ValueError("rate must be positive")
    return GammaLaw(1.0, 1.0 / rate)


class ParetoLaw(ReferenceLaw):
    """Pareto with tail index alpha and minimum xm; biased index is alpha - 1."""

    name = "pareto"

    def __init__(self, alpha: float, xm: float = 1.0):
        if alpha <= 0 or xm <= 0:
            raise ValueError("pareto parameters must be positive")
        self.alpha = float(alpha)
        self.xm = float(xm)

    @property
    def mean(self) -> float:
        if self.alpha <= 1:
            return math.inf
        return self.alpha * self.xm / (self.alpha - 1)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x < self.xm, 0.0, 1.0 - (self.xm / np.maximum(x, self.xm)) ** self.alpha)

    def ppf(self, u):
        u = np.asarray(u, dtype=np.float64)
        return self.xm * (1.0 - u) ** (-1.0 / self.alpha)

    def biased(self) -> "ParetoLaw":
        if self.alpha <= 1:
            raise ValueError("size-biasing needs a finite mean (alpha > 1)")
        return ParetoLaw(self.alpha - 1.0, self.xm)

    def quantile_integral(self, u):
        u = np.clip(np.asarray(u, dtype=np.float64), 0.0, 1.0)
        if self.alpha <= 1:
            raise ValueError("quantile integral needs a finite mean")
        a = 1.0 - 1.0 / self.alpha
        return self.xm * (1.0 - (1.0 - u) ** a) / a

    def describe(self) -> dict:
        return {"family": "pareto", "alpha": self.alpha, "scale": self.xm}


class ZetaLaw(ReferenceLaw):
    """P(D = k) proportional to k^-alpha on k >= 1; size-biasing lowers alpha by one."""

    name = "zeta"
    integer_valued = True

    def __init__(self, alpha: float):
        if alpha <= 1:
            raise ValueError("zeta law needs alpha > 1")
        self.alpha = float(alpha)
        self._dist = stats.zipf(self.alpha)

    @property
    def mean(self) -> float:
        if self.alpha <= 2:
            return math.inf
        return float(special.zeta(self.alpha - 1) / special.zeta(self.alpha))

    def cdf(self, x):
        return self._dist.cdf(np.floor(np.asarray(x, dtype=np.float64)))

    def ppf(self, u):
        u = np.clip(np.asarray(u, dtype=np.float64), _TINY, None)
        return self._dist.ppf(u).astype(np.float64)

    def biased(self) -> "ZetaLaw":
        if self.alpha <= 2:
            raise ValueError("size-biasing needs a finite mean (alpha > 2)")
        return ZetaLaw(self.alpha - 1.0)

    def describe(self) -> dict:
        return {"family": "zeta", "alpha": self.alpha}


def law_from_config(spec: dict) -> ReferenceLaw:
    """Build a reference law from a JSON-style description."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise ValueError("law description must be an object with a 'family' field")
    fam = spec["family"]
    try:
        if fam == "poisson":
            return poisson_law(float(spec["mean"]))
        if fam in ("exponential", "exp"):
            return exponential_law(float(spec.get("rate", 1.0)))
        if fam == "gamma":
            return GammaLaw(float(spec["shape"]), float(spec.get("scale", 1.0)))
        if fam == "constant":
            return constant_law(float(spec["value"]))
        if fam == "discrete":
            return DiscreteLaw(spec["values"], spec["probs"])
        if fam == "pareto":
            return ParetoLaw(float(spec["alpha"]), float(spec.get("scale", 1.0)))
        if fam == "zeta":
            return ZetaLaw(float(spec["alpha"]))
    except KeyError as exc:
        raise ValueError(f"law '{fam}' is missing parameter {exc}") from None
    raise ValueError(f"unknown law family '{fam}'")


def size_biased_rejection(law: ReferenceLaw, rng: np.random.Generator, size: int, cap: float) -> np.ndarray:
    """Size-biased draws by acceptance-rejection: accept x with probability x / cap.

    Exact when the law puts no mass above ``cap``; used as an independent
    route to the closed-form biased laws.
    """
    out = np.empty(0)
    while out.size < size:
        x = law.sample(rng, 2 * (size - out.size) + 16)
        acc = rng.random(x.size) * cap < x
        out = np.concatenate((out, x[acc]))
    return out[:size]


# ---------------------------------------------------------------------------
# auxiliary marks

@dataclass(frozen=True)
class AuxGenerator:
    """Auxiliary marks b = f(primary, u) for uniforms u, one per coordinate.

    kinds:
      none            -- dimension 0
      gaussian        -- b_c = scale * Phi^{-1}(u_c), independent of the primary
      scaled-primary  -- b_c = scale * sum(primary) + noise * Phi^{-1}(u_c)
    """

    kind: str = "none"
    dimension: int = 0
    scale: float = 1.0
    noise: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "scaled-primary"):
            raise ValueError(f"unknown aux generator '{self.kind}'")
        if self.kind == "none" and self.dimension != 0:
            raise ValueError("aux generator 'none' has dimension 0")
        if self.dimension < 0:
            raise ValueError("aux dimension must be nonnegative")

    def generate(self, primary, u) -> np.ndarray:
        """primary: (m,) or (m, 2); u: (m, d) uniforms in [0, 1)."""
        u = np.asarray(u, dtype=np.float64)
        prim = np.asarray(primary, dtype=np.float64)
        m = prim.shape[0]
        if self.dimension == 0:
            return np.zeros((m, 0))
        z = special.ndtri(np.clip(u, _TINY, 1 - 1e-16))
        if self.kind == "gaussian":
            return self.scale * z
        total = prim if prim.ndim == 1 else prim.sum(axis=1)
        return self.scale * total[:, None] + self.noise * z

    def describe(self) -> dict:
        return {"kind": self.kind, "dimension": self.dimension, "scale": self.scale, "noise": self.noise}


def aux_from_config(spec: dict | None) -> AuxGenerator:
    if spec is None:
        return AuxGenerator()
    if not isinstance(spec, dict):
        raise ValueError("aux description must be an object")
    kind = spec.get("kind", spec.get("generator", "none"))
    dim = int(spec.get("dimension", 0 if kind == "none" else 1))
    return AuxGenerator(kind, dim, float(spec.get("scale", 1.0)), float(spec.get("noise", 0.0)))
