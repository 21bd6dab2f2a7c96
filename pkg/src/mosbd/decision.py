"""Best-compromise selection by minimum Manhattan distance to the ideal point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dominance import EvaluatedSolution, ParetoArchive


@dataclass(frozen=True)
class MmdReport:
    chosen_index: int
    chosen: EvaluatedSolution | None
    normalized_costs: np.ndarray
    ideal: np.ndarray
    l1_distances: np.ndarray

    def to_dict(self) -> dict:
        out = {
            "chosen_index": self.chosen_index,
            "normalized_costs": self.normalized_costs.tolist(),
            "ideal": self.ideal.tolist(),
            "l1_distances": self.l1_distances.tolist(),
        }
        if self.chosen is not None:
            out["x"] = self.chosen.x.tolist()
            out["phi"] = self.chosen.phi.tolist()
        return out


def mmd_normalize(F) -> np.ndarray:
    """Divide each objective by its range over the set; a zero range maps to 0."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    span = F.max(axis=0) - F.min(axis=0)
    out = np.zeros_like(F)
    ok = span > 0
    out[:, ok] = F[:, ok] / span[ok]
    return out


def mmd_select_objectives(F) -> MmdReport:
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if F.shape[0] == 0:
        raise ValueError("MMD selection needs at least one member")
    norm = mmd_normalize(F)
    ideal = norm.min(axis=0)
    dist = np.abs(norm - ideal).sum(axis=1)
    # argmin returns the first minimum: ties go to the lowest index
    best = int(np.argmin(dist))
    return MmdReport(best, None, norm, ideal, dist)


def mmd_select(archive: ParetoArchive) -> MmdReport:
    if len(archive) == 0:
        raise ValueError("MMD selection needs a non-empty archive")
    rep = mmd_select_objectives(archive.objectives)
    return MmdReport(rep.chosen_index, archive[rep.chosen_index], rep.normalized_costs, rep.ideal, rep.l1_distances)
