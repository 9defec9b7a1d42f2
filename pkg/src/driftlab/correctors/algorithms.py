"""Implementations of the eleven drift-correction algorithms.

Every function maps (trial, params) to an int array of line indices, one
per fixation. Raising CorrectorFailure signals the dispatcher to fall back
to attach; anything else propagates as a bug.
"""

import numpy as np
from scipy.optimize import minimize

from .. import _kernels

LOG_2PI = float(np.log(2.0 * np.pi))


class CorrectorFailure(Exception):
    """Internal numerical failure; dispatcher degrades to attach."""


def _nearest_line(y_values, centers):
    """Index of the nearest line center per y value; ties go down."""
    return np.argmin(np.abs(np.asarray(y_values)[:, None] - centers[None, :]), axis=1)


def attach(trial, params):
    """Nearest line center in y, fixation by fixation."""
    return _nearest_line(trial.xy()[:, 1], trial.stimulus.line_centers_y)


def chain(trial, params):
    """Chain consecutive fixations that stay close in x and y; each chain
    goes to the line nearest its mean y."""
    xy = trial.xy()
    centers = trial.stimulus.line_centers_y
    dx = np.abs(np.diff(xy[:, 0]))
    dy = np.abs(np.diff(xy[:, 1]))
    breaks = np.nonzero((dx > params["x_thresh"]) | (dy > params["y_thresh"]))[0] + 1
    lines = np.empty(len(xy), dtype=np.int64)
    for seg in np.split(np.arange(len(xy)), breaks):
        lines[seg] = _nearest_line([xy[seg, 1].mean()], centers)[0]
    return lines


def cluster(trial, params):
    """k-means on fixation y with k = line count; clusters ranked by mean y."""
    y = trial.xy()[:, 1]
    m = trial.stimulus.line_count
    if m > len(y):
        raise CorrectorFailure(f"{m} lines but only {len(y)} fixations")
    try:
        labels, _ = _kernels.kmeans_1d(
            y, m, max_iter=params["max_iter"], restarts=params["restarts"]
        )
    except ValueError as e:
        raise CorrectorFailure(str(e)) from None
    return labels


def _sweep_bounds(x, x_thresh):
    """Split indices into forward sweeps; a new sweep starts after a leftward
    move larger than x_thresh."""
    jumps = np.nonzero(np.diff(x) < -x_thresh)[0] + 1
    return np.split(np.arange(len(x)), jumps)


def compare(trial, params):
    """Match each sweep's x profile against the word x profiles of the
    nearest candidate lines using warped distance."""
    xy = trial.xy()
    centers = trial.stimulus.line_centers_y
    word_centers = trial.stimulus.word_centers()
    word_lines = trial.stimulus.word_lines()
    if word_centers.shape[0] == 0:
        raise CorrectorFailure("stimulus has no words")
    n_nearest = int(params["n_nearest"])

    lines = np.empty(len(xy), dtype=np.int64)
    for sweep in _sweep_bounds(xy[:, 0], params["x_thresh"]):
        mean_y = xy[sweep, 1].mean()
        order = np.argsort(np.abs(centers - mean_y), kind="stable")
        candidates = np.sort(order[:n_nearest])
        best_line, best_cost = candidates[0], np.inf
        sweep_x = np.column_stack([xy[sweep, 0], np.zeros(len(sweep))])
        for li in candidates:
            wx = word_centers[word_lines == li, 0]
            if wx.size == 0:
                continue
            line_x = np.column_stack([wx, np.zeros(wx.size)])
            cost = _kernels.dtw_cost(sweep_x, line_x)[-1, -1]
            if cost < best_cost:
                best_cost = cost
                best_line = li
        lines[sweep] = best_line
    return lines


def _progressive_sequences(xy, y_thresh):
    """Progressive runs: break where x moves left or y jumps past y_thresh."""
    dx = np.diff(xy[:, 0])
    dy = np.abs(np.diff(xy[:, 1]))
    breaks = np.nonzero((dx < 0) | (dy > y_thresh))[0] + 1
    return [list(seg) for seg in np.split(np.arange(len(xy)), breaks)]


def _sequence_stats(xy, seqs):
    """Per-sequence regression sufficient statistics: n, Sx, Sy, Sxx, Sxy, Syy."""
    stats = np.zeros((len(seqs), 6))
    for i, seq in enumerate(seqs):
        x, y = xy[seq, 0], xy[seq, 1]
        stats[i] = (len(seq), x.sum(), y.sum(), (x * x).sum(), (x * y).sum(), (y * y).sum())
    return stats


def _pair_fit(stats):
    """Gradient and RMS error of the joint least-squares line for every
    sequence pair, computed from combined sufficient statistics."""
    s = stats[:, None, :] + stats[None, :, :]
    n, sx, sy, sxx, sxy, syy = (s[..., k] for k in range(6))
    denom = n * sxx - sx * sx
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(denom > 1e-9, (n * sxy - sx * sy) / np.where(denom > 1e-9, denom, 1.0), 0.0)
        b = (sy - g * sx) / n
        sse = syy - 2 * g * sxy - 2 * b * sy + g * g * sxx + 2 * g * b * sx + n * b * b
    return g, np.sqrt(np.maximum(sse, 0.0) / n)


def _precise_rms(xy, idx):
    """Two-pass RMS error of the least-squares line through xy[idx]."""
    px = xy[idx, 0] - xy[idx, 0].mean()
    py = xy[idx, 1] - xy[idx, 1].mean()
    denom = float((px * px).sum())
    g = float((px * py).sum()) / denom if denom > 1e-12 else 0.0
    resid = py - g * px
    return float(np.sqrt((resid * resid).mean()))


def merge(trial, params):
    """Merge progressive sequences until one remains per line.

    Four relaxation phases: (1) only sequences of useful length under both
    gradient and error thresholds, (2) any lengths under both thresholds,
    (3) gradient threshold only, (4) unconditional forced merging. The best
    pair is always the one whose joint regression has the lowest RMS error.
    Final sequences map to lines in mean-y order.
    """
    xy = trial.xy()
    m = trial.stimulus.line_count
    centers = trial.stimulus.line_centers_y
    sequences = _progressive_sequences(xy, params["y_thresh"])
    g_thresh, e_thresh = params["g_thresh"], params["e_thresh"]
    # center coordinates so the least-squares statistics are insensitive to
    # where on screen the stimulus sits
    centered = xy - xy.mean(axis=0)

    phases = (
        {"min_i": 3, "min_j": 2, "g": True, "e": True},
        {"min_i": 1, "min_j": 1, "g": True, "e": True},
        {"min_i": 1, "min_j": 1, "g": True, "e": False},
        {"min_i": 1, "min_j": 1, "g": False, "e": False},
    )
    for phase in phases:
        while len(sequences) > m:
            stats = _sequence_stats(centered, sequences)
            gradients, errors = _pair_fit(stats)
            lengths = stats[:, 0]
            eligible = np.triu(np.ones_like(errors, dtype=bool), k=1)
            eligible &= (lengths[:, None] >= phase["min_i"]) & (lengths[None, :] >= phase["min_j"])
            if phase["g"]:
                eligible &= np.abs(gradients) < g_thresh
            if phase["e"]:
                eligible &= errors < e_thresh
            if not eligible.any():
                break
            masked = np.where(eligible, errors, np.inf)
            # sufficient-statistic errors carry cancellation noise around
            # exact fits; re-evaluate near-minimal pairs precisely and
            # tie-break to the first pair in row order so the choice does
            # not depend on where the stimulus sits on screen
            best = masked.min()
            candidates = np.argwhere(masked <= best + 1e-3)
            i, j = candidates[0]
            if len(candidates) > 1:
                precise = [
                    _precise_rms(centered, sequences[a] + sequences[b]) for a, b in candidates
                ]
                cutoff = min(precise) + 1e-9
                for (a, b), err in zip(candidates, precise):
                    if err <= cutoff:
                        i, j = a, b
                        break
            sequences[i] = sequences[i] + sequences[j]
            del sequences[j]
        if len(sequences) <= m:
            break

    sequences.sort(key=lambda seq: xy[seq, 1].mean())
    lines = np.empty(len(xy), dtype=np.int64)
    if len(sequences) == m:
        for li, seq in enumerate(sequences):
            lines[seq] = li
    else:
        for seq in sequences:
            lines[seq] = _nearest_line([xy[seq, 1].mean()], centers)[0]
    return lines


def regress(trial, params):
    """Fit m regression lines anchored at the line centers with a shared
    slope, offset and noise scale; assign each fixation to its highest
    likelihood line.

    The three parameters are optimized inside their bounds by multi-start
    Nelder-Mead (8 deterministic starts at the corners of the half-size
    parameter box).
    """
    xy = trial.xy()
    centers = trial.stimulus.line_centers_y
    (k_lo, k_hi) = params["slope_bounds"]
    (o_lo, o_hi) = params["offset_bounds"]
    (s_lo, s_hi) = params["sd_bounds"]
    lo = np.array([k_lo, o_lo, s_lo])
    hi = np.array([k_hi, o_hi, s_hi])
    xs, ys = xy[:, 0], xy[:, 1]

    def neg_log_likelihood(raw):
        p = np.clip(raw, lo, hi)
        penalty = 1e3 * float(np.sum((raw - p) ** 2))
        slope, offset, sd = p
        mu = slope * xs[:, None] + offset + centers[None, :]
        log_pdf = -0.5 * ((ys[:, None] - mu) / sd) ** 2 - np.log(sd) - 0.5 * LOG_2PI
        return -float(log_pdf.max(axis=1).sum()) + penalty

    quarter = (hi - lo) / 4.0
    starts = [
        lo + quarter + (hi - lo) / 2.0 * np.array(bits)
        for bits in np.ndindex(2, 2, 2)
    ]
    best_x, best_val = None, np.inf
    for x0 in starts:
        res = minimize(
            neg_log_likelihood,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-3, "fatol": 1e-3, "maxiter": 400},
        )
        if np.isfinite(res.fun) and res.fun < best_val:
            best_val, best_x = float(res.fun), res.x
    if best_x is None:
        raise CorrectorFailure("likelihood optimization failed on every start")

    slope, offset, sd = np.clip(best_x, lo, hi)
    mu = slope * xs[:, None] + offset + centers[None, :]
    log_pdf = -0.5 * ((ys[:, None] - mu) / sd) ** 2
    return np.argmax(log_pdf, axis=1)


def segment(trial, params):
    """Cut the sequence at the m-1 largest leftward x moves; piece i -> line i."""
    xy = trial.xy()
    m = trial.stimulus.line_count
    if len(xy) < m:
        raise CorrectorFailure(f"{m} lines but only {len(xy)} fixations")
    dx = np.diff(xy[:, 0])
    cut_at = np.sort(np.argsort(dx, kind="stable")[: m - 1]) + 1
    lines = np.empty(len(xy), dtype=np.int64)
    for li, seg in enumerate(np.split(np.arange(len(xy)), cut_at)):
        lines[seg] = li
    return lines


def slice_runs(trial, params):
    """Three-phase run grouping.

    Phase 1 finds runs of fixations likely on one line; phase 2 walks the
    runs longest-first and joins each onto the group with the closest mean
    y when within w_thresh; phase 3 forces the group count down to the
    number of lines, then maps groups to lines in mean-y order.
    """
    xy = trial.xy()
    m = trial.stimulus.line_count
    centers = trial.stimulus.line_centers_y

    dx = np.diff(xy[:, 0])
    dy = np.abs(np.diff(xy[:, 1]))
    breaks = np.nonzero((dx < -params["x_thresh"]) | (dy > params["y_thresh"]))[0] + 1
    runs = [list(seg) for seg in np.split(np.arange(len(xy)), breaks)]

    order = sorted(range(len(runs)), key=lambda r: (-len(runs[r]), r))
    groups = []  # each: [indices, weighted mean y]
    for r in order:
        run_y = xy[runs[r], 1].mean()
        best, best_d = -1, np.inf
        for gi, (_, gy) in enumerate(groups):
            d = abs(run_y - gy)
            if d < best_d:
                best, best_d = gi, d
        if best >= 0 and best_d <= params["w_thresh"]:
            idx = groups[best][0] + runs[r]
            groups[best] = [idx, xy[idx, 1].mean()]
        else:
            groups.append([list(runs[r]), run_y])

    while len(groups) > m:
        means = np.array([g[1] for g in groups])
        rank = np.argsort(means, kind="stable")
        gaps = np.diff(means[rank])
        a, b = rank[np.argmin(gaps)], rank[np.argmin(gaps) + 1]
        a, b = min(a, b), max(a, b)
        idx = groups[a][0] + groups[b][0]
        groups[a] = [idx, xy[idx, 1].mean()]
        del groups[b]

    groups.sort(key=lambda g: g[1])
    lines = np.empty(len(xy), dtype=np.int64)
    if len(groups) == m:
        for li, (idx, _) in enumerate(groups):
            lines[idx] = li
    else:
        for idx, gy in groups:
            lines[idx] = _nearest_line([gy], centers)[0]
    return lines


def split(trial, params):
    """2-means on the x steps separates return sweeps from forward reading;
    cut at the sweeps, then send each run to the line nearest its mean y."""
    xy = trial.xy()
    centers = trial.stimulus.line_centers_y
    dx = np.diff(xy[:, 0])
    if dx.size < 2 or np.unique(dx).size < 2:
        raise CorrectorFailure("not enough distinct x steps for 2-means")
    try:
        labels, _ = _kernels.kmeans_1d(dx, 2, max_iter=100, restarts=10)
    except ValueError as e:
        raise CorrectorFailure(str(e)) from None
    breaks = np.nonzero(labels == 0)[0] + 1  # cluster 0 has the smaller mean
    lines = np.empty(len(xy), dtype=np.int64)
    for seg in np.split(np.arange(len(xy)), breaks):
        lines[seg] = _nearest_line([xy[seg, 1].mean()], centers)[0]
    return lines


def stretch(trial, params):
    """Find the y scale and offset that best snap fixations onto line
    centers (dense grid, then two local refinements), assign by nearest
    center after the transform."""
    xy = trial.xy()
    centers = trial.stimulus.line_centers_y
    y = xy[:, 1]
    (sc_lo, sc_hi) = params["scale_bounds"]
    (of_lo, of_hi) = params["offset_bounds"]

    def objective(scales, offsets):
        # |scale*y + offset - nearest center| summed over fixations
        cost = np.empty((len(scales), len(offsets)))
        sorted_c = np.sort(centers)
        for i, s in enumerate(scales):
            t = s * y[:, None] + offsets[None, :]
            pos = np.searchsorted(sorted_c, t)
            lower = sorted_c[np.clip(pos - 1, 0, len(sorted_c) - 1)]
            upper = sorted_c[np.clip(pos, 0, len(sorted_c) - 1)]
            dist = np.minimum(np.abs(t - lower), np.abs(t - upper))
            cost[i] = dist.sum(axis=0)
        return cost

    scales = np.linspace(sc_lo, sc_hi, 41)
    offsets = np.linspace(of_lo, of_hi, 101)
    for _ in range(3):
        cost = objective(scales, offsets)
        i, j = np.unravel_index(np.argmin(cost), cost.shape)
        s_step = scales[1] - scales[0] if len(scales) > 1 else 0.0
        o_step = offsets[1] - offsets[0] if len(offsets) > 1 else 0.0
        best_s, best_o = scales[i], offsets[j]
        scales = np.linspace(
            max(sc_lo, best_s - s_step), min(sc_hi, best_s + s_step), 21
        )
        offsets = np.linspace(
            max(of_lo, best_o - o_step), min(of_hi, best_o + o_step), 21
        )
    return _nearest_line(best_s * y + best_o, centers)


def warp(trial, params):
    """Dynamic time warping of the fixation sequence against the expected
    reading-order word centers; each fixation takes the line of its matched
    word (mode over multi-matches, lower line on ties)."""
    xy = trial.xy()
    word_centers = trial.stimulus.word_centers()
    word_lines = trial.stimulus.word_lines()
    if word_centers.shape[0] == 0:
        raise CorrectorFailure("stimulus has no words")
    acc = _kernels.dtw_cost(np.ascontiguousarray(xy), np.ascontiguousarray(word_centers))
    path = _kernels.dtw_path(acc)
    m = trial.stimulus.line_count
    votes = np.zeros((len(xy), m), dtype=np.int64)
    for fi, wi in path:
        votes[fi, word_lines[wi]] += 1
    return np.argmax(votes, axis=1)
