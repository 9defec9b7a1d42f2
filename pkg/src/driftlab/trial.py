"""Core domain types: fixations, stimulus geometry, trials, assignments.

All types are immutable after construction and safe to share across
workers. Stimulus line geometry (centers, ranges, widths) is derived from
the character boxes once and cached.
"""

from collections import namedtuple
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

Violation = namedtuple("Violation", ["code", "detail"])


@dataclass(frozen=True)
class Fixation:
    """One fixation event in screen pixel coordinates.

    ``start`` and ``duration`` are milliseconds from trial start.
    ``gold_line`` is the human-assigned line index, or None when the labeler
    never assigned one (possible for discarded fixations).
    """

    x: float
    y: float
    start: int
    duration: int
    gold_line: int | None = None
    discarded: bool = False


@dataclass(frozen=True)
class CharBox:
    """Axis-aligned bounding box of one stimulus character."""

    ch: str
    x0: float
    y0: float
    x1: float
    y1: float
    line: int


@dataclass(frozen=True)
class Stimulus:
    """Character boxes grouped into text lines.

    ``boxes`` keeps reading order; ``line_count`` is the declared number of
    lines (indices 0..line_count-1).
    """

    boxes: tuple[CharBox, ...]
    line_count: int

    def __post_init__(self):
        if not self.boxes:
            raise ValueError("stimulus requires at least one character box")
        if self.line_count < 1:
            raise ValueError("line_count must be >= 1")

    @classmethod
    def from_boxes(cls, boxes):
        boxes = tuple(boxes)
        count = max(b.line for b in boxes) + 1 if boxes else 0
        return cls(boxes=boxes, line_count=count)

    @cached_property
    def _line_geometry(self):
        m = self.line_count
        y_min = np.full(m, np.inf)
        y_max = np.full(m, -np.inf)
        x_min = np.full(m, np.inf)
        x_max = np.full(m, -np.inf)
        for b in self.boxes:
            if 0 <= b.line < m:
                y_min[b.line] = min(y_min[b.line], b.y0)
                y_max[b.line] = max(y_max[b.line], b.y1)
                x_min[b.line] = min(x_min[b.line], b.x0)
                x_max[b.line] = max(x_max[b.line], b.x1)
        return y_min, y_max, x_min, x_max

    @cached_property
    def line_y_ranges(self) -> np.ndarray:
        """(m, 2) array of each line's [y_min, y_max]."""
        y_min, y_max, _, _ = self._line_geometry
        return np.column_stack([y_min, y_max])

    @cached_property
    def line_centers_y(self) -> np.ndarray:
        y_min, y_max, _, _ = self._line_geometry
        return (y_min + y_max) / 2.0

    @cached_property
    def line_widths(self) -> np.ndarray:
        _, _, x_min, x_max = self._line_geometry
        return x_max - x_min

    @cached_property
    def line_heights(self) -> np.ndarray:
        y_min, y_max, _, _ = self._line_geometry
        return y_max - y_min

    @cached_property
    def extent(self):
        """(x_min, y_min, x_max, y_max) over all boxes."""
        x0 = min(b.x0 for b in self.boxes)
        y0 = min(b.y0 for b in self.boxes)
        x1 = max(b.x1 for b in self.boxes)
        y1 = max(b.y1 for b in self.boxes)
        return x0, y0, x1, y1

    @cached_property
    def words(self):
        """Word boxes in reading order as (line, x0, x1, y0, y1) tuples.

        Words split at whitespace characters, line changes, and horizontal
        gaps wider than half a typical character cell.
        """
        widths = [b.x1 - b.x0 for b in self.boxes if not b.ch.isspace()]
        gap_thresh = 0.75 * float(np.median(widths)) if widths else 0.0
        out = []
        current = None
        prev = None
        for b in self.boxes:
            if b.ch.isspace():
                if current is not None:
                    out.append(tuple(current))
                    current = None
                prev = b
                continue
            broke = (
                current is None
                or b.line != current[0]
                or (prev is not None and not prev.ch.isspace() and b.x0 - prev.x1 > gap_thresh)
            )
            if broke:
                if current is not None:
                    out.append(tuple(current))
                current = [b.line, b.x0, b.x1, b.y0, b.y1]
            else:
                current[2] = max(current[2], b.x1)
                current[3] = min(current[3], b.y0)
                current[4] = max(current[4], b.y1)
            prev = b
        if current is not None:
            out.append(tuple(current))
        return tuple(out)

    def word_centers(self) -> np.ndarray:
        """(n_words, 2) x/y centers of word boxes in reading order."""
        return np.array(
            [((x0 + x1) / 2.0, (y0 + y1) / 2.0) for _, x0, x1, y0, y1 in self.words]
        )

    def word_lines(self) -> np.ndarray:
        return np.array([w[0] for w in self.words], dtype=np.int64)


@dataclass(frozen=True)
class Trial:
    """One participant reading one screen of text."""

    id: str
    dataset: str
    fixations: tuple[Fixation, ...]
    stimulus: Stimulus
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "fixations", tuple(self.fixations))

    def xy(self) -> np.ndarray:
        """(n, 2) fixation coordinates."""
        return np.array([(f.x, f.y) for f in self.fixations], dtype=np.float64)

    def gold_lines(self) -> np.ndarray:
        """Gold labels with -1 where absent."""
        return np.array(
            [f.gold_line if f.gold_line is not None else -1 for f in self.fixations],
            dtype=np.int64,
        )

    def discarded_mask(self) -> np.ndarray:
        return np.array([f.discarded for f in self.fixations], dtype=bool)

    @property
    def line_count(self) -> int:
        return self.stimulus.line_count

    def is_labeled(self) -> bool:
        return any(f.gold_line is not None for f in self.fixations)


@dataclass(frozen=True)
class Assignment:
    """Per-fixation line indices from one source (algorithm, decode, vote, human)."""

    trial_id: str
    lines: tuple[int, ...]
    source: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(int(v) for v in self.lines))

    def array(self) -> np.ndarray:
        return np.array(self.lines, dtype=np.int64)


def line_centers(stimulus: Stimulus) -> list[float]:
    """Midpoint of each line's vertical range, index-aligned with lines."""
    return [float(v) for v in stimulus.line_centers_y]


def line_overlap(y: float, stimulus: Stimulus) -> int:
    """Line whose box y-range contains ``y``, or -1 for gaps and outside.

    A shared boundary between two zero-gap lines resolves to the lower index.
    """
    ranges = stimulus.line_y_ranges
    for i in range(ranges.shape[0]):
        if ranges[i, 0] <= y <= ranges[i, 1]:
            return i
    return -1


def validate(trial: Trial) -> list[Violation]:
    """Check every trial invariant; returns an empty list when the trial is ok."""
    violations = []
    m = trial.stimulus.line_count

    if not trial.fixations:
        violations.append(Violation("empty_trial", "fixation list is empty"))

    labeled = trial.is_labeled()
    for i, f in enumerate(trial.fixations):
        if f.duration <= 0:
            violations.append(Violation("bad_duration", f"fixation {i}: duration {f.duration} <= 0"))
        if f.start < 0:
            violations.append(Violation("bad_start", f"fixation {i}: start {f.start} < 0"))
        if f.gold_line is not None and not (0 <= f.gold_line < m):
            violations.append(
                Violation("label_out_of_range", f"fixation {i}: gold_line {f.gold_line} not in 0..{m - 1}")
            )
        if labeled and not f.discarded and f.gold_line is None:
            violations.append(
                Violation("missing_label", f"fixation {i}: non-discarded fixation lacks gold_line")
            )

    seen_lines = set()
    for j, b in enumerate(trial.stimulus.boxes):
        if not (b.x0 < b.x1 and b.y0 < b.y1):
            violations.append(Violation("bad_box", f"box {j} ({b.ch!r}): degenerate extent"))
        if not (0 <= b.line < m):
            violations.append(
                Violation("line_count_mismatch", f"box {j} references line {b.line}, line_count is {m}")
            )
        seen_lines.add(b.line)

    missing = [i for i in range(m) if i not in seen_lines]
    if missing:
        violations.append(Violation("line_index_gap", f"lines without boxes: {missing}"))

    if not missing and not any(v.code == "line_count_mismatch" for v in violations):
        centers = trial.stimulus.line_centers_y
        if np.any(np.diff(centers) <= 0):
            violations.append(Violation("line_centers_not_increasing", "line y-centers not strictly increasing"))
        ranges = trial.stimulus.line_y_ranges
        for i in range(m - 1):
            if ranges[i + 1, 0] < ranges[i, 1]:
                violations.append(
                    Violation("line_ranges_overlap", f"lines {i} and {i + 1} overlap in y")
                )
    return violations
