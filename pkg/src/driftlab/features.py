"""Dual-stream feature construction for the external model pipeline.

Stream one is a per-fixation matrix of normalized x, y plus the raw-y line
overlap (sentinel -1 between lines or off the page). Stream two is a
224x224 three-channel grayscale raster: rendered text, filled character
boxes, and a fixation scatter whose gray level encodes start time scaled
to [0.25, 1.0] per trial.
"""

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .errors import ShapeMismatchError
from .normalize import NormScheme, NormStats, apply_scheme, apply_stats
from .trial import Trial, line_overlap

RASTER_SIZE = 224
MARKER_PX = 3
TIME_LEVEL_MIN = 0.25
TIME_LEVEL_MAX = 1.0


@dataclass(frozen=True)
class FirstStreamMatrix:
    """(length, 3) rows of (x_norm, y_norm, overlap) plus a padding mask."""

    values: np.ndarray
    mask: np.ndarray
    scheme: NormScheme


def first_stream(
    trial: Trial, scheme: NormScheme, stats: NormStats, pad_to: int | None = None
) -> FirstStreamMatrix:
    """Standardized coordinates and raw-y line overlap, optionally padded."""
    if stats.scheme != scheme:
        raise ShapeMismatchError(
            f"stats fitted for scheme {stats.scheme.value!r}, requested {scheme.value!r}"
        )
    coords = apply_stats(apply_scheme(trial, scheme), stats)
    overlap = np.array(
        [line_overlap(f.y, trial.stimulus) for f in trial.fixations], dtype=np.float64
    )
    values = np.column_stack([coords, overlap])
    n = values.shape[0]
    length = n if pad_to is None else pad_to
    if length < n:
        raise ShapeMismatchError(f"pad_to {length} < fixation count {n}")
    padded = np.zeros((length, 3), dtype=np.float64)
    padded[:n] = values
    mask = np.zeros(length, dtype=bool)
    mask[:n] = True
    return FirstStreamMatrix(values=padded, mask=mask, scheme=scheme)


@lru_cache(maxsize=256)
def _glyph_pixels(ch: str) -> tuple[tuple[int, int], ...]:
    """Set pixels of one character in the built-in bitmap font, as (row, col)
    pairs relative to the glyph cell, plus the cell size appended last."""
    font = ImageFont.load_default()
    cell = Image.new("L", (12, 14), 0)
    ImageDraw.Draw(cell).text((0, 0), ch, fill=255, font=font)
    arr = np.asarray(cell)
    rows, cols = np.nonzero(arr > 0)
    if rows.size == 0:
        return ((14, 12),)
    height = int(rows.max()) + 1
    width = int(cols.max()) + 1
    return tuple((int(r), int(c)) for r, c in zip(rows, cols)) + ((height, width),)


def raster_transform(trial: Trial) -> dict:
    """Affine stimulus->raster map preserving aspect ratio (letterboxed)."""
    x0, y0, x1, y1 = trial.stimulus.extent
    width = max(x1 - x0, 1e-9)
    height = max(y1 - y0, 1e-9)
    scale = min(RASTER_SIZE / width, RASTER_SIZE / height)
    return {
        "scale": scale,
        "offset_x": (RASTER_SIZE - scale * width) / 2.0,
        "offset_y": (RASTER_SIZE - scale * height) / 2.0,
        "x_min": x0,
        "y_min": y0,
        "marker_px": MARKER_PX,
    }


def _to_raster(xs, ys, tf):
    px = tf["offset_x"] + tf["scale"] * (np.asarray(xs) - tf["x_min"])
    py = tf["offset_y"] + tf["scale"] * (np.asarray(ys) - tf["y_min"])
    return px, py


def render_second_stream(trial: Trial) -> np.ndarray:
    """(224, 224, 3) float raster in [0, 1].

    Channel 0: text glyph coverage. Channel 1: filled character boxes.
    Channel 2: 3x3 fixation markers, gray level 0.25 + 0.75 * normalized
    start time; later fixations overwrite earlier ones where they overlap.
    """
    tf = raster_transform(trial)
    raster = np.zeros((RASTER_SIZE, RASTER_SIZE, 3), dtype=np.float64)

    for b in trial.stimulus.boxes:
        (bx0, bx1), (by0, by1) = _to_raster([b.x0, b.x1], [b.y0, b.y1], tf)
        ix0, ix1 = int(round(bx0)), int(round(bx1))
        iy0, iy1 = int(round(by0)), int(round(by1))
        ix0c, ix1c = max(ix0, 0), min(max(ix1, ix0 + 1), RASTER_SIZE)
        iy0c, iy1c = max(iy0, 0), min(max(iy1, iy0 + 1), RASTER_SIZE)
        if not b.ch.isspace():
            raster[iy0c:iy1c, ix0c:ix1c, 1] = 1.0
        pixels = _glyph_pixels(b.ch)
        if len(pixels) > 1:
            gh, gw = pixels[-1]
            for r, c in pixels[:-1]:
                px = int(round(bx0 + (c + 0.5) / gw * (bx1 - bx0)))
                py = int(round(by0 + (r + 0.5) / gh * (by1 - by0)))
                if 0 <= px < RASTER_SIZE and 0 <= py < RASTER_SIZE:
                    raster[py, px, 0] = 1.0

    starts = np.array([f.start for f in trial.fixations], dtype=np.float64)
    span = starts.max() - starts.min() if len(starts) > 1 else 0.0
    if span > 0:
        levels = TIME_LEVEL_MIN + (TIME_LEVEL_MAX - TIME_LEVEL_MIN) * (starts - starts.min()) / span
    else:
        levels = np.full(len(starts), TIME_LEVEL_MAX)
    px, py = _to_raster([f.x for f in trial.fixations], [f.y for f in trial.fixations], tf)
    half = MARKER_PX // 2
    for cx, cy, level in zip(px, py, levels):
        ix, iy = int(round(cx)), int(round(cy))
        x_lo, x_hi = max(ix - half, 0), min(ix + half + 1, RASTER_SIZE)
        y_lo, y_hi = max(iy - half, 0), min(iy + half + 1, RASTER_SIZE)
        if x_lo < x_hi and y_lo < y_hi:
            raster[y_lo:y_hi, x_lo:x_hi, 2] = level
    return raster


def save_raster_png(raster: np.ndarray, path: Path):
    """Composite the three channels as RGB and write a PNG."""
    arr = np.clip(np.round(raster * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(Path(path), format="PNG")


def export_trial_features(
    trial: Trial, scheme: NormScheme, stats: NormStats, out_dir: Path
) -> dict:
    """Write first-stream CSV, raster PNG and sidecar JSON for one trial."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix = first_stream(trial, scheme, stats)
    csv_path = out_dir / f"{trial.id}_first.csv"
    rows = ["x,y,overlap"]
    for x, y, ov in matrix.values:
        rows.append(f"{float(x)!r},{float(y)!r},{int(ov)}")
    csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    raster = render_second_stream(trial)
    png_path = out_dir / f"{trial.id}.png"
    save_raster_png(raster, png_path)

    sidecar = dict(raster_transform(trial))
    sidecar["trial_id"] = trial.id
    sidecar["scheme"] = scheme.value
    sidecar_path = out_dir / f"{trial.id}_sidecar.json"
    sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"first": csv_path, "raster": png_path, "sidecar": sidecar_path}
