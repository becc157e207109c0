"""Coupled explorations of sparse random graphs and marked Galton-Watson trees."""

from .attributes import Attribute, AttributeSequence, FullMark, attribute_distance, full_mark_distance
from .coupling import (
    CouplingOutcome,
    DiagnosticsRecord,
    couple_cm,
    couple_dcm,
    couple_ir,
    couple_ird,
    edge_discrepancy_diagnostics,
)
from .exploration import (
    NeighborhoodResult,
    RootedMarkedTree,
    canonical_code,
    explore_in_component,
    explore_undirected,
    neighborhood_is_tree,
)
from .graphs import KernelConfig, MultiGraph, Phi, TruncationSchedule, sample_cm, sample_dcm, sample_ir, sample_ird
from .harness import ConfigError, ExperimentConfig, estimate_break_curve, run_experiment
from .rng import SharedRandomness
from .stats import poisson_inverse, w1_exact_discrete, w1_quantile, wilson_interval
from .trees import (
    IntermediateLaw,
    LimitLaw,
    TreeCouplingOutcome,
    couple_attribute,
    couple_attribute_biased,
    couple_trees,
    independent_copies,
    sample_intermediate_tree,
    sample_limit_tree,
)

__version__ = "0.1.0"
