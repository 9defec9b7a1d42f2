"""Fixation coordinate normalization and training-set standardization.

Two per-trial schemes feed the external model pipeline: subtracting the
minimum character box corner (xy), optionally followed by dividing x by
the widest line and y by the shortest line (xy_lw). Standardization to
zero mean / unit variance uses statistics fitted on a training split and
is always applied last.
"""

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DegenerateStimulusError, ShapeMismatchError, ZeroVarianceError
from .trial import Trial


class NormScheme(str, Enum):
    XY_ONLY = "xy"
    XY_AND_LW = "xy_lw"


@dataclass(frozen=True)
class NormStats:
    """Per-feature mean/std fitted on training data (population std)."""

    means: tuple[float, ...]
    stds: tuple[float, ...]
    scheme: NormScheme

    def __post_init__(self):
        if any(s <= 0 for s in self.stds):
            raise ZeroVarianceError("all stds must be strictly positive")

    def to_json(self) -> str:
        doc = {"means": list(self.means), "stds": list(self.stds), "scheme": self.scheme.value}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "NormStats":
        doc = json.loads(text)
        return cls(
            means=tuple(float(v) for v in doc["means"]),
            stds=tuple(float(v) for v in doc["stds"]),
            scheme=NormScheme(doc["scheme"]),
        )

    def save(self, path: Path):
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "NormStats":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def xy_norm(trial: Trial) -> np.ndarray:
    """Shift fixation coordinates so the minimum box corner becomes (0, 0)."""
    xy = trial.xy()
    x0 = min(b.x0 for b in trial.stimulus.boxes)
    y0 = min(b.y0 for b in trial.stimulus.boxes)
    return xy - np.array([x0, y0])


def lw_norm(xy_normed: np.ndarray, trial: Trial) -> np.ndarray:
    """Divide x by the maximum line width and y by the minimum line height."""
    max_width = float(np.max(trial.stimulus.line_widths))
    min_height = float(np.min(trial.stimulus.line_heights))
    if max_width <= 0 or min_height <= 0:
        raise DegenerateStimulusError(
            f"max line width {max_width}, min line height {min_height}; both must be > 0"
        )
    return np.asarray(xy_normed, dtype=np.float64) / np.array([max_width, min_height])


def apply_scheme(trial: Trial, scheme: NormScheme) -> np.ndarray:
    """Normalized (n, 2) coordinates; xy shift always happens first."""
    out = xy_norm(trial)
    if scheme is NormScheme.XY_AND_LW:
        out = lw_norm(out, trial)
    return out


def fit_stats(features: np.ndarray, scheme: NormScheme = NormScheme.XY_AND_LW) -> NormStats:
    """Fit per-feature mean and population std over a (n, f) feature matrix."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] < 2:
        raise ShapeMismatchError("fit_stats needs a (n >= 2, f) feature matrix")
    means = feats.mean(axis=0)
    stds = feats.std(axis=0)
    zero = np.nonzero(stds == 0)[0]
    if zero.size:
        raise ZeroVarianceError(f"feature(s) {zero.tolist()} have zero variance")
    return NormStats(means=tuple(means.tolist()), stds=tuple(stds.tolist()), scheme=scheme)


def apply_stats(features: np.ndarray, stats: NormStats) -> np.ndarray:
    feats = np.asarray(features, dtype=np.float64)
    means = np.array(stats.means)
    stds = np.array(stats.stds)
    if feats.shape[-1] != means.shape[0]:
        raise ShapeMismatchError(
            f"feature width {feats.shape[-1]} != fitted width {means.shape[0]}"
        )
    return (feats - means) / stds


def unapply_stats(features: np.ndarray, stats: NormStats) -> np.ndarray:
    """Inverse of apply_stats; useful for round-trip checks."""
    feats = np.asarray(features, dtype=np.float64)
    return feats * np.array(stats.stds) + np.array(stats.means)
