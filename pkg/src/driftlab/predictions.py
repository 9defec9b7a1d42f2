"""Predictions CSV format: one row per fixation, trivially joinable with gold.

Schema: ``trial_id,fixation_index,line``. One file holds the output of one
source (an algorithm, a vote, or a decode run) over a whole dataset.
"""

from pathlib import Path

from .errors import ParseError
from .trial import Assignment

HEADER = "trial_id,fixation_index,line"


def write_predictions(assignments: list[Assignment], path: Path):
    rows = [HEADER]
    for a in assignments:
        for i, line in enumerate(a.lines):
            rows.append(f"{a.trial_id},{i},{line}")
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def read_predictions(path: Path, source: str | None = None) -> dict[str, Assignment]:
    """Load a predictions CSV into per-trial assignments keyed by trial id."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    rows = text.splitlines()
    if not rows or rows[0] != HEADER:
        raise ParseError(f"{path}: expected header {HEADER!r}")
    per_trial: dict[str, dict[int, int]] = {}
    for r, row in enumerate(rows[1:], start=1):
        parts = row.split(",")
        if len(parts) != 3:
            raise ParseError(f"{path}: row {r} has {len(parts)} columns, expected 3")
        tid, idx_s, line_s = parts
        try:
            idx, line = int(idx_s), int(line_s)
        except ValueError:
            raise ParseError(f"{path}: row {r}: non-integer index or line") from None
        per_trial.setdefault(tid, {})[idx] = line
    out = {}
    src = source if source is not None else path.stem
    for tid, by_idx in per_trial.items():
        n = max(by_idx) + 1
        missing = [i for i in range(n) if i not in by_idx]
        if missing:
            raise ParseError(f"{path}: trial {tid} missing fixation indices {missing[:5]}")
        out[tid] = Assignment(trial_id=tid, lines=tuple(by_idx[i] for i in range(n)), source=src)
    return out
