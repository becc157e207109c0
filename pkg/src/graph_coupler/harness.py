"""Monte Carlo driver: configured experiments, replications, CSV output."""

from __future__ import annotations

import csv
import json
import math
import multiprocessing as mp
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .attributes import MODEL_KIND, AttributeSequence, full_mark_distance
from .coupling import InhomogeneousState, PairingState, couple_cm, couple_dcm, couple_ir, couple_ird
from .exploration import canonical_code
from .graphs import KernelConfig, Phi, TruncationSchedule, phi_from_config, repair_attribute_sequence
from .laws import AuxGenerator, aux_from_config, law_from_config
from .rng import SharedRandomness, derive_key
from .stats import EmpiricalMeasure, pearson_interval, w1_quantile, wilson_interval
from .trees import MODELS, IntermediateLaw, LimitLaw, couple_trees, independent_copies

_ATTR, _REPAIR, _REP, _ROOTS, _TREES = 0xA77, 0x4E9, 0x5E9, 0x4007, 0x7EE5

RECORD_HEADER = (
    "model", "n", "replication", "root_index", "root", "seed", "k", "tau", "break_reason", "kappa",
    "iso_intermediate", "iso_limit", "c_event", "root_mark_distance", "max_mark_distance",
    "inter_mark_distance", "graph_size", "tree_size", "limit_size", "splices",
)

SUMMARY_HEADER = (
    "model", "n", "replications", "roots", "break_rate", "break_lo", "break_hi",
    "not_iso_rate", "not_iso_lo", "not_iso_hi", "c_rate", "c_lo", "c_hi",
    "mean_root_distance", "root_distance_se", "splice_rate", "splice_lo", "splice_hi",
    "size_corr", "size_corr_lo", "size_corr_hi", "attribute_w1",
)


class ConfigError(ValueError):
    """An experiment configuration that cannot be run."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    n_grid: tuple
    k: int
    m: int
    epsilon: float
    replications: int
    seed: int
    reference_law: tuple
    aux: AuxGenerator = field(default_factory=AuxGenerator)
    phi: Phi = field(default_factory=Phi)
    truncation_exponent: float = 0.25
    theta: float | None = None
    source: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        try:
            model = str(d["model"]).lower()
            if model not in MODELS:
                raise ConfigError(f"model must be one of {MODELS}")
            n_grid = tuple(int(x) for x in d["n_grid"])
            k = int(d["k"])
            m = int(d.get("m", 1))
            eps = float(d.get("epsilon", 0.5))
            reps = int(d["replications"])
            seed = int(d.get("seed", 0))
            laws = _parse_laws(model, d["reference_law"])
            aux = aux_from_config(d.get("aux"))
            phi = phi_from_config(d.get("phi"))
            trunc = float(d.get("truncation_exponent", 0.25))
            theta = d.get("theta")
            theta = None if theta is None else float(theta)
        except ConfigError:
            raise
        except KeyError as exc:
            raise ConfigError(f"missing configuration key {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        unknown = set(d) - {"model", "n_grid", "k", "m", "epsilon", "replications", "seed",
                            "reference_law", "aux", "phi", "truncation_exponent", "theta"}
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
        cfg = cls(model, n_grid, k, m, eps, reps, seed, laws, aux, phi, trunc, theta, dict(d))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid needs positive sizes")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if self.k < 0:
            raise ConfigError("k must be nonnegative")
        if self.m < 1 or self.m > self.n_grid[0]:
            raise ConfigError("m must lie in 1..min(n_grid)")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.theta is not None and not self.theta > 0:
            raise ConfigError("theta must be positive")
        if self.model in ("ir", "ird"):
            try:
                TruncationSchedule(self.truncation_exponent)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        try:
            self.limit_law()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def with_seed(self, seed: int) -> "ExperimentConfig":
        src = dict(self.source)
        src["seed"] = int(seed)
        return ExperimentConfig.from_dict(src)

    def limit_law(self) -> LimitLaw:
        return LimitLaw(self.model, self.reference_law, self.aux, self.theta)

    def kernel(self) -> KernelConfig | None:
        if self.model not in ("ir", "ird"):
            return None
        return KernelConfig(self.limit_law().theta, self.phi, TruncationSchedule(self.truncation_exponent))

    def to_json(self) -> str:
        return json.dumps(self.source, sort_keys=True)


def _parse_laws(model: str, spec) -> tuple:
    directed = model in ("dcm", "ird")
    if isinstance(spec, dict) and "in" in spec and "out" in spec:
        if not directed:
            raise ConfigError(f"{model} takes a single reference law, not an in/out pair")
        laws = (law_from_config(spec["in"]), law_from_config(spec["out"]))
    else:
        law = law_from_config(spec)
        laws = (law, law) if directed else (law,)
    for law in laws:
        if not math.isfinite(law.mean):
            raise ConfigError("reference law needs a finite mean")
        if model in ("cm", "dcm") and not law.integer_valued:
            raise ConfigError(f"{model} needs an integer-valued degree law")
    return laws


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from None
    return ExperimentConfig.from_dict(data)


# ---------------------------------------------------------------------------
# per-n context


@dataclass(frozen=True, eq=False)
class Context:
    cfg: ExperimentConfig
    n: int
    attrs: AttributeSequence
    inter: IntermediateLaw
    limit: LimitLaw
    kernel: KernelConfig | None


def sample_attributes(cfg: ExperimentConfig, n: int) -> AttributeSequence:
    """i.i.d. attributes from the reference law, repaired for pairing."""
    rng = np.random.default_rng(derive_key(cfg.seed, _ATTR, n))
    cols = [np.asarray(law.sample(rng, n), dtype=np.float64) for law in cfg.reference_law]
    prim = np.stack(cols, axis=1) if len(cols) == 2 else cols[0]
    aux = cfg.aux.generate(prim, rng.random((n, cfg.aux.dimension)))
    kind = MODEL_KIND[cfg.model]
    if kind in ("cm-degree", "dcm-degrees"):
        prim = np.rint(prim).astype(np.int64)
    attrs = AttributeSequence(kind, prim, aux, cfg.theta)
    return repair_attribute_sequence(attrs, derive_key(cfg.seed, _REPAIR, n))


@lru_cache(maxsize=4)
def _context(cfg_json: str, n: int) -> Context:
    cfg = ExperimentConfig.from_dict(json.loads(cfg_json))
    attrs = sample_attributes(cfg, n)
    kernel = cfg.kernel()
    return Context(cfg, n, attrs, IntermediateLaw(attrs, kernel), cfg.limit_law(), kernel)


def context_for(cfg: ExperimentConfig, n: int) -> Context:
    return _context(cfg.to_json(), n)


def draw_roots(n: int, m: int, rng: np.random.Generator) -> list:
    """m distinct uniform vertices by rejection."""
    roots = []
    while len(roots) < m:
        v = int(rng.integers(n))
        if v not in roots:
            roots.append(v)
    return roots


def replication_key(cfg: ExperimentConfig, n: int, rep: int) -> int:
    return derive_key(cfg.seed, _REP, n, rep)


def couple_roots(ctx: Context, roots: list, rand: SharedRandomness) -> list:
    """Graph/tree couplings for every root of one graph, in order."""
    model, k = ctx.cfg.model, ctx.cfg.k
    if model in ("cm", "dcm"):
        state = PairingState()
        fn = couple_cm if model == "cm" else couple_dcm
        return [fn(ctx.attrs, r, k, rand.for_stream(j), state) for j, r in enumerate(roots)]
    state = InhomogeneousState(ctx.n)
    fn = couple_ir if model == "ir" else couple_ird
    return [fn(ctx.attrs, ctx.kernel, r, k, rand.for_stream(j), state, ctx.inter) for j, r in enumerate(roots)]


def _fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".9g")


def run_replication(ctx: Context, rep: int) -> list:
    """Records (tuples of strings) for every root of one replication."""
    cfg, n, k = ctx.cfg, ctx.n, ctx.cfg.k
    key = replication_key(cfg, n, rep)
    rand = SharedRandomness(key, n)
    aux = np.random.default_rng(derive_key(key, _ROOTS))
    roots = draw_roots(n, cfg.m, aux)
    outcomes = couple_roots(ctx, roots, rand)
    rand.clear_cache()
    tree_rng = np.random.default_rng(derive_key(key, _TREES))
    copies, report = independent_copies(ctx.inter, roots, k, tree_rng, trees=[o.tree_side for o in outcomes])
    rows = []
    for j, (o, copy) in enumerate(zip(outcomes, copies)):
        tc = couple_trees(ctx.inter, ctx.limit, k, cfg.epsilon, tree_rng, intermediate=copy)
        ok, gtree, _ = o.graph_tree()
        iso_inter = ok and canonical_code(gtree) == canonical_code(o.tree_side)
        iso_limit = ok and canonical_code(gtree, False) == canonical_code(tc.limit, False)
        gmarks = o.graph_side.vertex_marks
        root_dist = full_mark_distance(gmarks[roots[j]], tc.limit.marks[()])
        max_dist = max((full_mark_distance(gmarks[v], tc.limit.marks[lab])
                        for lab, v in o.correspondence.items() if lab in tc.limit.marks), default=0.0)
        c_event = (o.tau is None and report.splices[j] == 0 and tc.kappa is None and max_dist <= cfg.epsilon)
        rows.append(tuple(_fmt(x) for x in (
            cfg.model, n, rep, j, roots[j], key, k, o.tau, o.break_reason, tc.kappa,
            iso_inter, iso_limit, c_event, root_dist, max_dist, o.max_mark_distance(),
            o.graph_side.size, o.tree_side.size, tc.limit.size, report.splices[j],
        )))
    return rows


def _work(item) -> list:
    cfg_json, n, lo, hi, curve = item
    ctx = _context(cfg_json, n)
    out = []
    for rep in range(lo, hi):
        out.append(break_counts(ctx, rep) if curve else run_replication(ctx, rep))
    return out


def _items(cfg: ExperimentConfig, jobs: int, curve: bool) -> list:
    chunk = max(1, math.ceil(cfg.replications / max(1, 4 * jobs)))
    text = cfg.to_json()
    return [(text, n, lo, min(lo + chunk, cfg.replications), curve)
            for n in cfg.n_grid for lo in range(0, cfg.replications, chunk)]


def _map(items: list, jobs: int) -> list:
    if jobs <= 1:
        return [_work(it) for it in items]
    with mp.get_context("spawn").Pool(jobs) as pool:
        return pool.map(_work, items, chunksize=1)


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class ExperimentResult:
    records: list
    summary: list


def summarize(cfg: ExperimentConfig, n: int, rows: list) -> tuple:
    """One summary row for the records of a single n."""
    col = {name: i for i, name in enumerate(RECORD_HEADER)}
    total = len(rows)
    broke = sum(1 for r in rows if r[col["tau"]] != "none" and int(r[col["tau"]]) <= cfg.k)
    not_iso = sum(1 for r in rows if r[col["iso_limit"]] == "0")
    c_hits = sum(1 for r in rows if r[col["c_event"]] == "1")
    dist = np.array([float(r[col["root_mark_distance"]]) for r in rows])
    spliced = {}
    for r in rows:
        rep = int(r[col["replication"]])
        spliced[rep] = spliced.get(rep, False) or int(r[col["splices"]]) > 0
    n_rep = len(spliced)
    s_hits = sum(spliced.values())
    corr = (float("nan"),) * 3
    if cfg.m >= 2 and n_rep >= 4:
        sizes = {}
        for r in rows:
            sizes.setdefault(int(r[col["replication"]]), {})[int(r[col["root_index"]])] = int(r[col["graph_size"]])
        x = [s[0] for s in sizes.values()]
        y = [s[1] for s in sizes.values()]
        corr = pearson_interval(x, y)
    ctx = context_for(cfg, n)
    w1 = sum(w1_quantile(EmpiricalMeasure.of(ctx.attrs.primary.reshape(n, -1)[:, c].astype(np.float64)), law)
             for c, law in enumerate(cfg.reference_law))
    se = float(dist.std(ddof=1) / math.sqrt(total)) if total > 1 else float("nan")
    return tuple(_fmt(x) for x in (
        cfg.model, n, n_rep, total, broke / total, *wilson_interval(broke, total),
        not_iso / total, *wilson_interval(not_iso, total), c_hits / total, *wilson_interval(c_hits, total),
        float(dist.mean()), se, s_hits / n_rep, *wilson_interval(s_hits, n_rep), *corr, w1,
    ))


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """All replications for every n, in (n, replication, root) order, plus per-n summaries."""
    chunks = _map(_items(cfg, jobs, False), jobs)
    records = [row for chunk in chunks for rep_rows in chunk for row in rep_rows]
    summary = []
    for n in cfg.n_grid:
        rows = [r for r in records if int(r[1]) == n]
        summary.append(summarize(cfg, n, rows))
    return ExperimentResult(records, summary)


def break_counts(ctx: Context, rep: int) -> tuple:
    """(breaks with tau <= k, roots) for one replication, graph couplings only."""
    key = replication_key(ctx.cfg, ctx.n, rep)
    rand = SharedRandomness(key, ctx.n)
    roots = draw_roots(ctx.n, ctx.cfg.m, np.random.default_rng(derive_key(key, _ROOTS)))
    outcomes = couple_roots(ctx, roots, rand)
    rand.clear_cache()
    return sum(1 for o in outcomes if o.tau is not None and o.tau <= ctx.cfg.k), len(outcomes)


def estimate_break_curve(cfg: ExperimentConfig, jobs: int = 1) -> list:
    """Rows (n, P(tau <= k) estimate, Wilson lo, Wilson hi) over the n grid."""
    chunks = _map(_items(cfg, jobs, True), jobs)
    per_n = {n: [0, 0] for n in cfg.n_grid}
    for item, chunk in zip(_items(cfg, jobs, True), chunks):
        for hits, total in chunk:
            per_n[item[1]][0] += hits
            per_n[item[1]][1] += total
    return [(n, hits / total, *wilson_interval(hits, total)) for n, (hits, total) in per_n.items()]


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_results(result: ExperimentResult, out_dir) -> tuple:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "replications.csv", RECORD_HEADER, result.records)
    write_csv(out / "summary.csv", SUMMARY_HEADER, result.summary)
    return out / "summary.csv", out / "replications.csv"


def write_break_curve(rows: list, path) -> None:
    write_csv(path, ("n", "break_rate", "break_lo", "break_hi"),
              [tuple(_fmt(x) for x in row) for row in rows])


__all__ = [
    "ConfigError", "Context", "ExperimentConfig", "ExperimentResult", "RECORD_HEADER", "SUMMARY_HEADER",
    "context_for", "draw_roots", "estimate_break_curve", "load_config", "run_experiment",
    "run_replication", "sample_attributes", "summarize", "write_break_curve", "write_results",
]
