"""Reading and writing the per-trial CSV + JSON dataset format.

Each trial is a ``<id>.csv`` holding the fixation sequence and a
``<id>.json`` holding trial info plus the character boxes that define the
stimulus. Output is deterministic byte-for-byte for a fixed trial: UTF-8,
LF line endings, shortest round-trip float formatting.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import OrphanFileError, ParseError, ValidationError
from .trial import CharBox, Fixation, Stimulus, Trial, validate

CSV_HEADER = "x,y,start,duration,gold_line,discarded"


@dataclass(frozen=True)
class DatasetManifest:
    """Paired trial files discovered in a dataset directory."""

    name: str
    entries: tuple[tuple[str, Path, Path], ...]  # (trial id, csv path, json path)


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _parse_ms(s: str, row: int, col: str) -> int:
    try:
        v = float(s)
    except ValueError:
        raise ParseError(f"row {row}: {col} {s!r} is not a number") from None
    if v != int(v):
        raise ParseError(f"row {row}: {col} {s!r} is not a whole millisecond count")
    return int(v)


def trial_to_csv_text(trial: Trial) -> str:
    lines = [CSV_HEADER]
    for f in trial.fixations:
        gold = "" if f.gold_line is None else str(f.gold_line)
        lines.append(
            f"{_fmt_float(f.x)},{_fmt_float(f.y)},{f.start},{f.duration},{gold},{int(f.discarded)}"
        )
    return "\n".join(lines) + "\n"


def trial_to_json_text(trial: Trial) -> str:
    doc = {
        "id": trial.id,
        "dataset": trial.dataset,
        "line_count": trial.stimulus.line_count,
        "metadata": trial.metadata,
        "chars": [
            {"ch": b.ch, "x0": b.x0, "y0": b.y0, "x1": b.x1, "y1": b.y1, "line": b.line}
            for b in trial.stimulus.boxes
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_trial(trial: Trial, dir: Path) -> tuple[Path, Path]:
    """Write ``<id>.csv`` and ``<id>.json`` into ``dir``; returns both paths."""
    dir = Path(dir)
    dir.mkdir(parents=True, exist_ok=True)
    csv_path = dir / f"{trial.id}.csv"
    json_path = dir / f"{trial.id}.json"
    csv_path.write_text(trial_to_csv_text(trial), encoding="utf-8", newline="\n")
    json_path.write_text(trial_to_json_text(trial), encoding="utf-8", newline="\n")
    return csv_path, json_path


def load_trial(csv_path: Path, json_path: Path) -> Trial:
    """Inverse of save_trial; validates the assembled trial."""
    csv_path, json_path = Path(csv_path), Path(json_path)
    try:
        doc = json.loads(json_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{json_path}: invalid JSON ({e})") from None

    for key in ("id", "dataset", "line_count", "metadata", "chars"):
        if key not in doc:
            raise ParseError(f"{json_path}: missing key {key!r}")
    boxes = []
    for i, c in enumerate(doc["chars"]):
        try:
            boxes.append(
                CharBox(
                    ch=c["ch"],
                    x0=float(c["x0"]),
                    y0=float(c["y0"]),
                    x1=float(c["x1"]),
                    y1=float(c["y1"]),
                    line=int(c["line"]),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"{json_path}: bad char entry {i} ({e})") from None
    if not boxes:
        raise ParseError(f"{json_path}: empty chars list")
    stimulus = Stimulus(boxes=tuple(boxes), line_count=int(doc["line_count"]))

    fixations = []
    text = csv_path.read_text(encoding="utf-8")
    rows = text.splitlines()
    if not rows or rows[0] != CSV_HEADER:
        raise ParseError(f"{csv_path}: expected header {CSV_HEADER!r}")
    for r, row in enumerate(rows[1:], start=1):
        parts = row.split(",")
        if len(parts) != 6:
            raise ParseError(f"{csv_path}: row {r} has {len(parts)} columns, expected 6")
        x_s, y_s, start_s, dur_s, gold_s, disc_s = parts
        try:
            x, y = float(x_s), float(y_s)
        except ValueError:
            raise ParseError(f"{csv_path}: row {r}: bad coordinate") from None
        if disc_s not in ("0", "1"):
            raise ParseError(f"{csv_path}: row {r}: discarded must be 0 or 1, got {disc_s!r}")
        gold = None
        if gold_s != "":
            try:
                gold = int(gold_s)
            except ValueError:
                raise ParseError(f"{csv_path}: row {r}: bad gold_line {gold_s!r}") from None
        fixations.append(
            Fixation(
                x=x,
                y=y,
                start=_parse_ms(start_s, r, "start"),
                duration=_parse_ms(dur_s, r, "duration"),
                gold_line=gold,
                discarded=disc_s == "1",
            )
        )

    trial = Trial(
        id=str(doc["id"]),
        dataset=str(doc["dataset"]),
        fixations=tuple(fixations),
        stimulus=stimulus,
        metadata=dict(doc["metadata"]),
    )
    violations = validate(trial)
    if violations:
        raise ValidationError(violations, source=str(csv_path))
    return trial


def scan_dataset(dir: Path) -> DatasetManifest:
    """Pair up ``<id>.csv``/``<id>.json`` files; unpaired files are errors."""
    dir = Path(dir)
    csvs = {p.stem: p for p in sorted(dir.glob("*.csv")) if p.stem != "predictions"}
    jsons = {p.stem: p for p in sorted(dir.glob("*.json")) if p.stem != "manifest"}
    orphans = sorted(set(csvs) ^ set(jsons))
    if orphans:
        names = ", ".join(orphans)
        raise OrphanFileError(f"{dir}: unpaired trial files for ids: {names}")
    entries = tuple((tid, csvs[tid], jsons[tid]) for tid in sorted(csvs))
    return DatasetManifest(name=dir.name, entries=entries)


def load_dataset(dir: Path) -> list[Trial]:
    """Load every paired trial in ``dir``, sorted by trial id."""
    manifest = scan_dataset(dir)
    return [load_trial(csv, js) for _, csv, js in manifest.entries]
