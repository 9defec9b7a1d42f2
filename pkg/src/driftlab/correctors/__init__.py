"""Classical vertical-drift correction algorithms behind one dispatch call.

Eleven algorithms are available: attach, chain, cluster, compare, merge,
regress, segment, slice, split, stretch, warp. All of them are
deterministic given (trial, spec). Any internal numerical failure degrades
to attach and flags the assignment instead of aborting a batch run.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParamError
from ..trial import Assignment, Trial
from . import algorithms

ALGORITHM_NAMES = (
    "attach",
    "chain",
    "cluster",
    "compare",
    "merge",
    "regress",
    "segment",
    "slice",
    "split",
    "stretch",
    "warp",
)

_DEFAULT_PARAMS = {
    "attach": {},
    "chain": {"x_thresh": 192.0, "y_thresh": 35.0},
    "cluster": {"max_iter": 100, "restarts": 10},
    "compare": {"x_thresh": 512.0, "n_nearest": 3},
    "merge": {"y_thresh": 32.0, "g_thresh": 0.1, "e_thresh": 20.0},
    "regress": {
        "slope_bounds": (-0.1, 0.1),
        "offset_bounds": (-50.0, 50.0),
        "sd_bounds": (1.0, 20.0),
    },
    "segment": {},
    "slice": {"x_thresh": 192.0, "y_thresh": 32.0, "w_thresh": 32.0},
    "split": {},
    "stretch": {"scale_bounds": (0.9, 1.1), "offset_bounds": (-50.0, 50.0)},
    "warp": {},
}

_IMPLS = {
    "attach": algorithms.attach,
    "chain": algorithms.chain,
    "cluster": algorithms.cluster,
    "compare": algorithms.compare,
    "merge": algorithms.merge,
    "regress": algorithms.regress,
    "segment": algorithms.segment,
    "slice": algorithms.slice_runs,
    "split": algorithms.split,
    "stretch": algorithms.stretch,
    "warp": algorithms.warp,
}


@dataclass(frozen=True)
class CorrectorSpec:
    """Algorithm name plus parameter overrides (defaults fill the rest)."""

    algo: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algo not in _DEFAULT_PARAMS:
            raise ParamError(f"unknown algorithm {self.algo!r}; choose from {ALGORITHM_NAMES}")
        unknown = set(self.params) - set(_DEFAULT_PARAMS[self.algo])
        if unknown:
            raise ParamError(f"{self.algo}: unknown parameter(s) {sorted(unknown)}")

    def resolved_params(self) -> dict:
        merged = dict(_DEFAULT_PARAMS[self.algo])
        merged.update(self.params)
        return merged

    @classmethod
    def from_dict(cls, doc: dict) -> "CorrectorSpec":
        return cls(algo=doc["algo"], params=dict(doc.get("params", {})))


def apply_corrector(trial: Trial, spec: CorrectorSpec) -> Assignment:
    """Run one corrector over a trial; every fixation gets a line in 0..m-1.

    Numerical failures (degenerate clustering, optimizer breakdown) fall
    back to attach and record the reason under ``meta['fallback']``.
    """
    m = trial.stimulus.line_count
    params = spec.resolved_params()
    n = len(trial.fixations)
    if n == 0:
        return Assignment(trial_id=trial.id, lines=(), source=spec.algo)
    if m == 1:
        return Assignment(trial_id=trial.id, lines=(0,) * n, source=spec.algo)

    meta = {}
    try:
        lines = _IMPLS[spec.algo](trial, params)
        lines = np.asarray(lines, dtype=np.int64)
        if lines.shape != (n,) or lines.min() < 0 or lines.max() >= m:
            raise algorithms.CorrectorFailure("assignment out of range")
    except algorithms.CorrectorFailure as e:
        lines = algorithms.attach(trial, {})
        meta["fallback"] = "attach"
        meta["reason"] = str(e)
    return Assignment(trial_id=trial.id, lines=tuple(int(v) for v in lines), source=spec.algo, meta=meta)


def correct_all(trial: Trial, names=ALGORITHM_NAMES) -> dict[str, Assignment]:
    """Apply every named algorithm with default parameters."""
    return {name: apply_corrector(trial, CorrectorSpec(name)) for name in names}
