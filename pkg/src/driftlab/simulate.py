"""Synthetic passage-reading trials with controllable distortion.

Passages are laid out as monospace text blocks. The reader model walks the
lines in order emitting one fixation per word; the vertical coordinate of
every fixation is drawn as

    y = Normal(l_y, d_noise) + l_y * d_shift

where l_y is the y-center of the fixated line. Within-line and
between-line regressions insert extra fixations that jump back to earlier
text, with triangular distributions making short jumps and recent lines
more likely. Gold labels are exact by construction: each fixation records
the line whose center parameterized its draw.
"""

import string
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import CorpusTooShortError, ParamError
from .trial import CharBox, Fixation, Stimulus, Trial

# Fallback corpus so the generator works out of the box; any plain-text
# UTF-8 file can be supplied instead.
DEFAULT_CORPUS = """
The river begins as a trickle of meltwater high on the northern slope and
gathers strength from dozens of small streams before it reaches the valley
floor. Farmers in the lowlands have relied on its spring floods for
centuries, timing their planting around the slow retreat of the water from
the fields. In the old town the houses nearest the bank are built on stone
piers, and their doors open onto narrow walkways that stay dry in all but
the wettest years. Downstream the channel widens and slows, braiding
around gravel bars where terns nest in early summer. Barges once carried
timber and grain from the upper valley to the coast, and the towpath they
used is now a walking route marked by weathered stone posts. Where the
river meets the sea it spreads into a broad estuary of mudflats and salt
marsh, a stopping point for migrating birds that feed on the invertebrates
buried in the silt. Tides push brackish water several miles inland twice a
day, and the reeds along the margins shift from green to gold as autumn
arrives. Local records describe winters when the whole estuary froze and
carts crossed on the ice, though no one living remembers such a season.
The lighthouse on the southern headland was automated decades ago, but its
keeper's cottage still stands, rented out in summer to visitors who come
for the long empty beaches. On clear evenings the light sweeps across the
water every ten seconds, and fishing boats use it to line up their return
through the narrow channel between the sandbanks. The harbor master keeps
a log of every arrival, a habit unchanged since the days when the quay was
stacked with barrels and the air smelled of tar and rope.
"""


@dataclass(frozen=True)
class DistortionConfig:
    """Noise, shift, and regression severity for one simulated condition."""

    d_noise: float = 0.0  # std-dev of vertical noise, pixels, 0..40
    d_shift: float = 0.0  # proportional vertical shift, -0.2..0.2
    p_within: float = 0.0  # within-line regression probability per fixation
    p_between: float = 0.0  # between-line regression probability per line
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.d_noise <= 40:
            raise ParamError(f"d_noise {self.d_noise} outside [0, 40]")
        if not -0.2 <= self.d_shift <= 0.2:
            raise ParamError(f"d_shift {self.d_shift} outside [-0.2, 0.2]")
        if not 0 <= self.p_within <= 1:
            raise ParamError(f"p_within {self.p_within} outside [0, 1]")
        if not 0 <= self.p_between <= 1:
            raise ParamError(f"p_between {self.p_between} outside [0, 1]")


def _as_range(value, kind=float):
    if isinstance(value, (tuple, list)):
        lo, hi = kind(value[0]), kind(value[1])
    else:
        lo = hi = kind(value)
    if lo > hi:
        raise ParamError(f"range {value} has lo > hi")
    return lo, hi


@dataclass(frozen=True)
class PassageConfig:
    """Layout parameters for generated passages.

    ``lines``, ``max_chars_per_line`` and ``line_height`` accept either a
    single value or a (lo, hi) range sampled uniformly per passage.
    """

    lines: object = (8, 14)
    max_chars_per_line: object = 130
    line_height: object = (49.0, 79.0)
    max_fixations: int = 500
    corpus: object = None  # path to a plain-text file; None uses DEFAULT_CORPUS
    char_width: float = 12.0

    def __post_init__(self):
        lo, hi = _as_range(self.lines, int)
        if lo < 1:
            raise ParamError("lines must be >= 1")
        _, chars_hi = _as_range(self.max_chars_per_line, int)
        if chars_hi > 130:
            raise ParamError("max_chars_per_line capped at 130")
        h_lo, _ = _as_range(self.line_height)
        if h_lo <= 0:
            raise ParamError("line_height must be positive")
        if not 1 <= self.max_fixations <= 500:
            raise ParamError("max_fixations must be in 1..500")
        if self.char_width <= 0:
            raise ParamError("char_width must be positive")


def clean_text(raw: str) -> str:
    """Drop non-ASCII characters and collapse whitespace runs to one space."""
    printable = set(string.printable) - set("\t\n\r\x0b\x0c")
    kept = "".join(c if c in printable else " " for c in raw)
    return " ".join(kept.split())


def load_corpus_words(corpus) -> list[str]:
    if corpus is None:
        text = DEFAULT_CORPUS
    else:
        text = Path(corpus).read_text(encoding="utf-8")
    words = clean_text(text).split()
    if len(words) < 30:
        raise CorpusTooShortError(f"corpus has only {len(words)} usable words")
    return words


def trial_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator keyed on (seed, *stream); stable across platforms."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *stream])))


def generate_passage(cfg: PassageConfig, rng: np.random.Generator) -> Stimulus:
    """Lay out one monospace passage; all parameters drawn uniformly."""
    words = load_corpus_words(cfg.corpus)
    lines_lo, lines_hi = _as_range(cfg.lines, int)
    chars_lo, chars_hi = _as_range(cfg.max_chars_per_line, int)
    h_lo, h_hi = _as_range(cfg.line_height)

    n_lines = int(rng.integers(lines_lo, lines_hi + 1))
    max_chars = int(rng.integers(chars_lo, chars_hi + 1))
    height = float(rng.uniform(h_lo, h_hi)) if h_hi > h_lo else h_lo
    offset = int(rng.integers(0, len(words)))

    cw = cfg.char_width
    boxes = []
    w_idx = offset
    for li in range(n_lines):
        y0, y1 = li * height, (li + 1) * height
        col = 0
        line_words = 0
        while True:
            word = words[w_idx % len(words)][:max_chars]
            needed = len(word) + (1 if line_words else 0)
            if line_words and col + needed > max_chars:
                break
            if line_words:
                boxes.append(CharBox(" ", col * cw, y0, (col + 1) * cw, y1, li))
                col += 1
            for ch in word:
                boxes.append(CharBox(ch, col * cw, y0, (col + 1) * cw, y1, li))
                col += 1
            w_idx += 1
            line_words += 1
    return Stimulus(boxes=tuple(boxes), line_count=n_lines)


def generate_fixations(
    stim: Stimulus,
    dc: DistortionConfig,
    rng: np.random.Generator,
    trial_id: str = "sim",
    dataset: str = "synthetic",
    max_fixations: int = 500,
) -> Trial:
    """Simulate a reading pass over ``stim``; gold labels set on every fixation."""
    centers = stim.line_centers_y
    words = stim.words
    by_line = [[w for w in words if w[0] == li] for li in range(stim.line_count)]

    fixations = []
    clock = 0

    def emit(line: int, x: float) -> bool:
        nonlocal clock
        l_y = centers[line]
        y = rng.normal(l_y, dc.d_noise) + l_y * dc.d_shift
        duration = int(rng.integers(180, 331))
        fixations.append(
            Fixation(x=float(x), y=float(y), start=clock, duration=duration, gold_line=line)
        )
        clock += duration + 30  # saccade gap
        return len(fixations) < max_fixations

    def triangular(left, mode, right):
        if right - left < 1e-9:
            return mode
        return float(rng.triangular(left, mode, right))

    done = False
    for li in range(stim.line_count):
        if done or not by_line[li]:
            continue
        line_start_x = by_line[li][0][1]
        regress_line = li > 0 and float(rng.random()) < dc.p_between
        regress_after = int(rng.integers(0, len(by_line[li]))) if regress_line else -1

        for k, (_, x0, x1, _, _) in enumerate(by_line[li]):
            x = float(rng.uniform(x0, x1))
            if not emit(li, x):
                done = True
                break
            if float(rng.random()) < dc.p_within:
                xr = triangular(line_start_x, x, x)
                if not emit(li, xr):
                    done = True
                    break
            if k == regress_after:
                target = int(np.floor(triangular(0.0, float(li), float(li))))
                target = min(max(target, 0), li - 1)
                if by_line[target]:
                    t_lo = by_line[target][0][1]
                    t_hi = by_line[target][-1][2]
                    mode = min(max(x, t_lo), t_hi)
                    xr = triangular(t_lo, mode, t_hi)
                    if not emit(target, xr):
                        done = True
                        break

    return Trial(
        id=trial_id,
        dataset=dataset,
        fixations=tuple(fixations),
        stimulus=stim,
        metadata={
            "d_noise": dc.d_noise,
            "d_shift": dc.d_shift,
            "p_within": dc.p_within,
            "p_between": dc.p_between,
        },
    )


def generate_trial(
    pc: PassageConfig,
    dc: DistortionConfig,
    passage_index: int = 0,
    cell_index: int = 0,
    dataset: str = "synthetic",
) -> Trial:
    """One trial from the (passage, distortion cell) grid position.

    The passage stream is keyed on (seed, passage) so every distortion cell
    sees the same passage; the fixation stream additionally keys on the
    cell. Parallel generation therefore cannot change outputs.
    """
    passage_rng = trial_rng(dc.seed, 1, passage_index)
    stim = generate_passage(pc, passage_rng)
    fix_rng = trial_rng(dc.seed, 2, passage_index, cell_index)
    trial_id = f"p{passage_index:03d}c{cell_index:02d}"
    return generate_fixations(
        stim, dc, fix_rng, trial_id=trial_id, dataset=dataset, max_fixations=pc.max_fixations
    )


def sweep(
    pc: PassageConfig,
    cells: list[DistortionConfig],
    out_dir: Path,
    passages: int,
    seed: int = 0,
) -> list[Trial]:
    """Generate passages x cells trials and save them under ``out_dir``.

    Returns the trials in saved (id) order. Every cell's ``seed`` field is
    overridden by the sweep seed so one number reproduces the dataset.
    """
    from . import trial_io

    if not cells:
        raise ParamError("sweep needs at least one distortion cell")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trials = []
    for p in range(passages):
        for c, cell in enumerate(cells):
            dc = replace(cell, seed=seed)
            trial = generate_trial(pc, dc, passage_index=p, cell_index=c, dataset=out_dir.name)
            trial_io.save_trial(trial, out_dir)
            trials.append(trial)
    return trials
