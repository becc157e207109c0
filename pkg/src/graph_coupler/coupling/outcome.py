"""Result type shared by all graph/tree couplings."""

from __future__ import annotations

from dataclasses import dataclass

from ..attributes import full_mark_distance
from ..exploration import NeighborhoodResult, RootedMarkedTree, canonical_code, neighborhood_is_tree

CM_REASONS = ("resample", "repeat-vertex")
IR_REASONS = ("bernoulli-poisson-mismatch", "cycle-or-self-loop", "phantom-offspring")

CSV_HEADER = ("model", "n", "k", "seed", "tau", "break_reason", "tree_size", "max_mark_distance")


@dataclass(frozen=True, eq=False)
class CouplingOutcome:
    """One joint construction of a graph neighborhood and an intermediate tree.

    ``tau`` is the first generation at which the two constructions diverge
    (None if they never do within the explored depth). A break detected
    while completing the marks of generation-k nodes is reported as k + 1.
    ``correspondence`` maps tree labels created before the break to vertices.
    """

    model: str
    graph_side: NeighborhoodResult
    tree_side: RootedMarkedTree
    correspondence: dict
    tau: int | None
    break_reason: str | None

    @property
    def k(self) -> int:
        return self.tree_side.depth

    @property
    def broke(self) -> bool:
        return self.tau is not None

    def max_mark_distance(self) -> float:
        """Largest full-mark distance over the label/vertex correspondence."""
        marks = self.graph_side.vertex_marks
        return max((full_mark_distance(self.tree_side.marks[lab], marks[v])
                    for lab, v in self.correspondence.items()), default=0.0)

    def graph_tree(self):
        """(is_tree, tree, sigma) for the graph side."""
        return neighborhood_is_tree(self.graph_side)

    def isomorphic(self) -> bool:
        """Graph side is a tree whose exact-mark code equals the tree side's."""
        ok, tree, _ = self.graph_tree()
        return ok and canonical_code(tree) == canonical_code(self.tree_side)

    def csv_row(self, n: int, seed: int) -> list:
        return [self.model, str(n), str(self.k), str(seed),
                "none" if self.tau is None else str(self.tau),
                self.break_reason or "none", str(self.tree_side.size),
                format(self.max_mark_distance(), ".9g")]
