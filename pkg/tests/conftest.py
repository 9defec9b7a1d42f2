"""Shared builders for tests."""

import numpy as np
import pytest

from driftlab.trial import CharBox, Fixation, Stimulus, Trial


def make_stimulus(line_rows, chars_per_line=10, char_width=12.0, text=None):
    """Stimulus from explicit (y0, y1) line rows; monospace box tiling."""
    boxes = []
    for li, (y0, y1) in enumerate(line_rows):
        line_text = text[li] if text else "ab cd efg h"[:chars_per_line].ljust(chars_per_line)
        for j, ch in enumerate(line_text):
            boxes.append(CharBox(ch, j * char_width, y0, (j + 1) * char_width, y1, li))
    return Stimulus(boxes=tuple(boxes), line_count=len(line_rows))


def uniform_stimulus(n_lines, height=64.0, chars_per_line=10, char_width=12.0):
    rows = [(i * height, (i + 1) * height) for i in range(n_lines)]
    return make_stimulus(rows, chars_per_line=chars_per_line, char_width=char_width)


def make_trial(stimulus, points, trial_id="t0", dataset="test", start_step=250):
    """Trial from (x, y, gold_line[, discarded]) tuples."""
    fixations = []
    clock = 0
    for p in points:
        x, y, gold = p[0], p[1], p[2]
        discarded = bool(p[3]) if len(p) > 3 else False
        fixations.append(
            Fixation(x=float(x), y=float(y), start=clock, duration=220, gold_line=gold, discarded=discarded)
        )
        clock += start_step
    return Trial(id=trial_id, dataset=dataset, fixations=tuple(fixations), stimulus=stimulus)


def reading_trial(n_lines=3, height=64.0, words_per_line=4, noise=0.0, seed=0, trial_id="t0"):
    """Deterministic multi-line reading trial with optional y noise."""
    stim = uniform_stimulus(n_lines, height=height, chars_per_line=words_per_line * 3)
    rng = np.random.default_rng(seed)
    points = []
    for li in range(n_lines):
        centre = (li + 0.5) * height
        for w in range(words_per_line):
            x = w * 36.0 + 18.0
            y = centre + (rng.normal(0, noise) if noise else 0.0)
            points.append((x, y, li))
    return make_trial(stim, points, trial_id=trial_id)


@pytest.fixture
def simple_stimulus():
    return make_stimulus([(0.0, 50.0), (60.0, 110.0)])
