"""Joint constructions of graph explorations and intermediate trees."""

from .configuration import PairingState, couple_cm, couple_dcm
from .diagnostics import (
    DiagnosticsRecord,
    edge_discrepancy_diagnostics,
    pair_mismatch_bound,
    pair_mismatch_probability,
    positive_part_mean,
)
from .inhomogeneous import InhomogeneousState, couple_ir, couple_ird
from .outcome import CSV_HEADER, CouplingOutcome

__all__ = [
    "CSV_HEADER",
    "CouplingOutcome",
    "DiagnosticsRecord",
    "InhomogeneousState",
    "PairingState",
    "couple_cm",
    "couple_dcm",
    "couple_ir",
    "couple_ird",
    "edge_discrepancy_diagnostics",
    "pair_mismatch_bound",
    "pair_mismatch_probability",
    "positive_part_mean",
]
