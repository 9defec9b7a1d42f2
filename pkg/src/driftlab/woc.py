"""Weighted per-fixation majority voting and disagreement scoring.

A voting pool holds assignments for one trial, each with an integer
weight; adding weight w is equivalent to adding w unit-weight copies. The
vote winner per fixation is the line with the largest summed weight, ties
resolved toward the lowest line index. Disagreement is one minus the
winning share, averaged over fixations for the trial score.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentPoolError
from .trial import Assignment


@dataclass(frozen=True)
class PoolMember:
    assignment: Assignment
    weight: int = 1

    def __post_init__(self):
        if self.weight < 1:
            raise InconsistentPoolError(f"weight must be >= 1, got {self.weight}")


@dataclass(frozen=True)
class VotingPool:
    members: tuple[PoolMember, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise InconsistentPoolError("voting pool is empty")
        first = self.members[0].assignment
        for pm in self.members[1:]:
            a = pm.assignment
            if a.trial_id != first.trial_id:
                raise InconsistentPoolError(
                    f"mixed trials in pool: {a.trial_id!r} vs {first.trial_id!r}"
                )
            if len(a.lines) != len(first.lines):
                raise InconsistentPoolError(
                    f"member lengths differ: {len(a.lines)} vs {len(first.lines)}"
                )

    @classmethod
    def from_assignments(cls, assignments, weights=None) -> "VotingPool":
        assignments = list(assignments)
        if weights is None:
            weights = [1] * len(assignments)
        return cls(members=tuple(PoolMember(a, w) for a, w in zip(assignments, weights)))


def _tally(pool: VotingPool) -> np.ndarray:
    """(n_fixations, max_line+1) weighted vote counts."""
    lines = np.array([pm.assignment.lines for pm in pool.members], dtype=np.int64)
    weights = np.array([pm.weight for pm in pool.members], dtype=np.int64)
    n = lines.shape[1]
    counts = np.zeros((n, int(lines.max()) + 1), dtype=np.int64)
    for member_lines, w in zip(lines, weights):
        np.add.at(counts, (np.arange(n), member_lines), w)
    return counts


def vote(pool: VotingPool) -> Assignment:
    """Weighted mode of the member lines at every fixation."""
    counts = _tally(pool)
    winners = np.argmax(counts, axis=1)  # first max = lowest line index
    return Assignment(
        trial_id=pool.members[0].assignment.trial_id,
        lines=tuple(int(v) for v in winners),
        source="woc",
    )


def disagreement(pool: VotingPool) -> tuple[np.ndarray, float]:
    """Per-fixation disagreement in [0, 1] and the per-trial mean."""
    counts = _tally(pool)
    total = sum(pm.weight for pm in pool.members)
    per_fixation = 1.0 - counts.max(axis=1) / total
    return per_fixation, float(per_fixation.mean())
