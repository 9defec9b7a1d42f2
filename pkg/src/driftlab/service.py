"""HTTP review service: inspect assignments, collect human overrides.

The service loads a dataset plus precomputed per-source prediction files,
votes them into an effective assignment, and exposes trials sorted by
inter-algorithm disagreement so a reviewer can check the contentious ones
first. Overrides append to a JSON-lines log (fsync per write, replayed on
startup); the latest record per (trial, fixation) wins. GET /export
returns the corrected dataset as a deterministic zip archive.
"""

import io
import json
import os
import threading
import zipfile
from dataclasses import replace
from pathlib import Path
from typing import Literal, Union

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import trial_io
from .predictions import read_predictions
from .trial import Assignment, Trial
from .woc import PoolMember, VotingPool, disagreement, vote

DISCARD = "DISCARD"
DEFAULT_EDIST_WEIGHT = 3


class OverrideBody(BaseModel):
    fixation_index: int = Field(ge=0)
    line: Union[int, Literal["DISCARD"]]
    author: str = Field(min_length=1)


class ReviewState:
    """All loaded data plus the append-only override log."""

    def __init__(self, data_dir, runs_dir, overrides_path):
        self.overrides_path = Path(overrides_path)
        self.trials: dict[str, Trial] = {
            t.id: t for t in trial_io.load_dataset(Path(data_dir))
        }
        self.sources: dict[str, dict[str, Assignment]] = {}
        runs_dir = Path(runs_dir)
        for f in sorted(runs_dir.glob("*.csv")):
            self.sources[f.stem] = read_predictions(f, source=f.stem)
        if not self.sources and self.trials:
            raise ValueError(f"no prediction files in {runs_dir}")

        self.weights = {name: 1 for name in self.sources}
        if "edist" in self.weights:
            self.weights["edist"] = DEFAULT_EDIST_WEIGHT
        pool_cfg = runs_dir / "pool.json"
        if pool_cfg.exists():
            for member in json.loads(pool_cfg.read_text(encoding="utf-8")):
                if member["source"] in self.weights:
                    self.weights[member["source"]] = int(member["weight"])

        self.woc: dict[str, Assignment] = {}
        self.fix_disagreement: dict[str, list[float]] = {}
        self.trial_disagreement: dict[str, float] = {}
        for tid, trial in self.trials.items():
            members = []
            for name, preds in sorted(self.sources.items()):
                if tid not in preds:
                    raise ValueError(f"source {name!r} has no predictions for trial {tid}")
                if len(preds[tid].lines) != len(trial.fixations):
                    raise ValueError(f"source {name!r} length mismatch on trial {tid}")
                members.append(PoolMember(preds[tid], self.weights[name]))
            pool = VotingPool(tuple(members))
            self.woc[tid] = vote(pool)
            per_fix, per_trial = disagreement(pool)
            self.fix_disagreement[tid] = [float(v) for v in per_fix]
            self.trial_disagreement[tid] = per_trial

        # (trial_id, fixation_index) -> latest override record
        self.overrides: dict[tuple[str, int], dict] = {}
        self._log_lock = threading.Lock()
        self._replay_log()

    def _replay_log(self):
        if not self.overrides_path.exists():
            return
        with self.overrides_path.open(encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if raw:
                    rec = json.loads(raw)
                    self.overrides[(rec["trial_id"], rec["fixation_index"])] = rec

    def append_override(self, rec: dict):
        with self._log_lock:
            self.overrides_path.parent.mkdir(parents=True, exist_ok=True)
            with self.overrides_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.overrides[(rec["trial_id"], rec["fixation_index"])] = rec

    def trial_overrides(self, tid: str) -> list[dict]:
        return [rec for (t, _), rec in sorted(self.overrides.items()) if t == tid]

    def effective(self, tid: str) -> tuple[list[int | None], list[bool]]:
        """WOC assignment shadowed by overrides; DISCARD clears the line."""
        trial = self.trials[tid]
        lines: list[int | None] = list(self.woc[tid].lines)
        discarded = [f.discarded for f in trial.fixations]
        for (t, idx), rec in self.overrides.items():
            if t != tid or idx >= len(lines):
                continue
            if rec["line"] == DISCARD:
                lines[idx] = None
                discarded[idx] = True
            else:
                lines[idx] = int(rec["line"])
                discarded[idx] = False
        return lines, discarded

    def export_zip(self) -> bytes:
        """Corrected dataset: trial files with effective lines as labels."""
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
            for tid in sorted(self.trials):
                trial = self.trials[tid]
                lines, discarded = self.effective(tid)
                fixations = tuple(
                    replace(f, gold_line=lines[i], discarded=discarded[i])
                    for i, f in enumerate(trial.fixations)
                )
                corrected = replace(trial, fixations=fixations)
                for name, text in (
                    (f"{tid}.csv", trial_io.trial_to_csv_text(corrected)),
                    (f"{tid}.json", trial_io.trial_to_json_text(corrected)),
                ):
                    info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
                    zf.writestr(info, text)
        return buf.getvalue()


def create_app(data_dir, runs_dir, overrides_path) -> FastAPI:
    state = ReviewState(data_dir, runs_dir, overrides_path)
    app = FastAPI(title="driftlab review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.review = state

    @app.get("/trials")
    def list_trials(
        sort: str = Query("id"),
        page: int = Query(1, ge=1),
        page_size: int = Query(50, ge=1, le=500),
    ):
        if sort not in ("id", "disagreement"):
            raise HTTPException(status_code=400, detail=f"unknown sort key {sort!r}")
        ids = sorted(state.trials)
        if sort == "disagreement":
            ids.sort(key=lambda tid: (-state.trial_disagreement[tid], tid))
        total = len(ids)
        start = (page - 1) * page_size
        chunk = ids[start : start + page_size]
        items = [
            {
                "id": tid,
                "fixation_count": len(state.trials[tid].fixations),
                "disagreement": state.trial_disagreement[tid],
                "overridden_count": sum(1 for (t, _) in state.overrides if t == tid),
            }
            for tid in chunk
        ]
        return {
            "trials": items,
            "page": page,
            "page_size": page_size,
            "total_trials": total,
            "total_pages": (total + page_size - 1) // page_size if total else 0,
        }

    @app.get("/trials/{tid}")
    def get_trial(tid: str):
        if tid not in state.trials:
            raise HTTPException(status_code=404, detail=f"unknown trial {tid!r}")
        trial = state.trials[tid]
        lines, discarded = state.effective(tid)
        return {
            "id": tid,
            "dataset": trial.dataset,
            "line_count": trial.stimulus.line_count,
            "fixations": [
                {
                    "x": f.x,
                    "y": f.y,
                    "start": f.start,
                    "duration": f.duration,
                    "gold_line": f.gold_line,
                    "discarded": f.discarded,
                }
                for f in trial.fixations
            ],
            "chars": [
                {"ch": b.ch, "x0": b.x0, "y0": b.y0, "x1": b.x1, "y1": b.y1, "line": b.line}
                for b in trial.stimulus.boxes
            ],
            "sources": {
                name: list(preds[tid].lines) for name, preds in sorted(state.sources.items())
            },
            "woc": list(state.woc[tid].lines),
            "disagreement": state.fix_disagreement[tid],
            "trial_disagreement": state.trial_disagreement[tid],
            "overrides": state.trial_overrides(tid),
            "effective_lines": lines,
            "effective_discarded": discarded,
        }

    @app.post("/trials/{tid}/overrides", status_code=201)
    def post_override(tid: str, body: OverrideBody):
        if tid not in state.trials:
            raise HTTPException(status_code=404, detail=f"unknown trial {tid!r}")
        trial = state.trials[tid]
        if body.fixation_index >= len(trial.fixations):
            raise HTTPException(
                status_code=422,
                detail=f"fixation_index {body.fixation_index} out of range",
            )
        if body.line != DISCARD and not 0 <= body.line < trial.stimulus.line_count:
            raise HTTPException(
                status_code=422,
                detail=f"line {body.line} outside 0..{trial.stimulus.line_count - 1}",
            )
        import datetime

        rec = {
            "trial_id": tid,
            "fixation_index": body.fixation_index,
            "line": body.line,
            "author": body.author,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        state.append_override(rec)
        return rec

    @app.get("/export")
    def export():
        return Response(
            content=state.export_zip(),
            media_type="application/zip",
            headers={"Content-Disposition": "attachment; filename=corrected.zip"},
        )

    return app
