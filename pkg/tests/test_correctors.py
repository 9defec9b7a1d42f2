"""The eleven correction algorithms: oracles, invariants, fallbacks."""

import itertools
from functools import lru_cache

import numpy as np
import pytest

from conftest import make_stimulus, make_trial, reading_trial, uniform_stimulus
from driftlab import simulate
from driftlab.correctors import ALGORITHM_NAMES, CorrectorSpec, apply_corrector
from driftlab.errors import ParamError
from driftlab.simulate import DistortionConfig, PassageConfig
from driftlab.trial import Fixation, Trial


def sim_trial(seed, cell=0, dc=None, pc=None):
    pc = pc or PassageConfig()
    dc = dc or DistortionConfig(seed=seed)
    return simulate.generate_trial(pc, dc, passage_index=seed, cell_index=cell)


def run(trial, algo, **params):
    return apply_corrector(trial, CorrectorSpec(algo, params))


def brute_force_dtw(a, b):
    """Independent DTW oracle: recursive minimum over the three unit steps."""

    @lru_cache(maxsize=None)
    def best(i, j):
        cost = float(np.hypot(a[i][0] - b[j][0], a[i][1] - b[j][1]))
        if i == 0 and j == 0:
            return cost
        options = []
        if i > 0 and j > 0:
            options.append(best(i - 1, j - 1))
        if i > 0:
            options.append(best(i - 1, j))
        if j > 0:
            options.append(best(i, j - 1))
        return cost + min(options)

    return best(len(a) - 1, len(b) - 1)


def brute_force_2means(values):
    """Exhaustive 1-D 2-means oracle: best labeling over all splits."""
    values = np.asarray(values, dtype=float)
    best_labels, best_inertia = None, np.inf
    for assign in itertools.product([0, 1], repeat=len(values)):
        assign = np.array(assign)
        if assign.min() == assign.max():
            continue
        inertia = 0.0
        centers = []
        for c in (0, 1):
            pts = values[assign == c]
            centers.append(pts.mean())
            inertia += float(((pts - pts.mean()) ** 2).sum())
        if inertia < best_inertia - 1e-12:
            best_inertia = inertia
            # order clusters by center so label 0 is the lower group
            if centers[0] <= centers[1]:
                best_labels = assign
            else:
                best_labels = 1 - assign
    return best_labels


class TestDispatch:
    @pytest.mark.parametrize("algo", ALGORITHM_NAMES)
    def test_single_line_trial_all_zero(self, algo):
        stim = uniform_stimulus(1)
        trial = make_trial(stim, [(10, 30, 0), (50, 35, 0), (90, 28, 0)])
        assert run(trial, algo).lines == (0, 0, 0)

    def test_unknown_algorithm_rejected(self):
        with pytest.raises(ParamError):
            CorrectorSpec("sort")

    def test_unknown_param_rejected(self):
        with pytest.raises(ParamError):
            CorrectorSpec("chain", {"bogus": 1})

    @pytest.mark.parametrize("algo", ALGORITHM_NAMES)
    def test_determinism(self, algo):
        trial = sim_trial(3, dc=DistortionConfig(d_noise=25.0, p_within=0.3, p_between=0.5, seed=3))
        a = run(trial, algo)
        b = run(trial, algo)
        assert a.lines == b.lines

    @pytest.mark.parametrize("algo", ALGORITHM_NAMES)
    def test_output_range_on_noisy_trials(self, algo):
        for seed in range(3):
            dc = DistortionConfig(d_noise=35.0, d_shift=-0.15, p_within=0.4, p_between=0.6, seed=seed)
            trial = sim_trial(seed, dc=dc)
            lines = run(trial, algo).array()
            assert lines.shape == (len(trial.fixations),)
            assert lines.min() >= 0
            assert lines.max() < trial.stimulus.line_count

    @pytest.mark.parametrize("algo", ALGORITHM_NAMES)
    def test_translation_equivariance(self, algo):
        dc = DistortionConfig(d_noise=18.0, p_within=0.2, seed=5)
        trial = sim_trial(5, dc=dc)
        dx, dy = 137.0, 59.0
        moved = Trial(
            id=trial.id,
            dataset=trial.dataset,
            fixations=tuple(
                Fixation(f.x + dx, f.y + dy, f.start, f.duration, f.gold_line, f.discarded)
                for f in trial.fixations
            ),
            stimulus=type(trial.stimulus)(
                boxes=tuple(
                    type(b)(b.ch, b.x0 + dx, b.y0 + dy, b.x1 + dx, b.y1 + dy, b.line)
                    for b in trial.stimulus.boxes
                ),
                line_count=trial.stimulus.line_count,
            ),
        )
        assert run(trial, algo).lines == run(moved, algo).lines


class TestZeroDistortionOracle:
    @pytest.mark.parametrize(
        "algo", [a for a in ALGORITHM_NAMES if a != "compare"]
    )
    def test_equals_gold(self, algo):
        for seed in range(4):
            trial = sim_trial(seed)
            gold = tuple(int(g) for g in trial.gold_lines())
            assert run(trial, algo).lines == gold, f"{algo} failed on seed {seed}"


class TestAttach:
    def test_nearest_center(self, simple_stimulus):
        trial = make_trial(simple_stimulus, [(5, 60.0, 1)])
        # |60-25| = 35 vs |60-85| = 25, so line 1
        assert run(trial, "attach").lines == (1,)

    def test_matches_brute_force_on_fuzzed_fixations(self):
        stim = make_stimulus([(0, 50), (60, 110), (130, 180)])
        centers = stim.line_centers_y
        rng = np.random.default_rng(0)
        for _ in range(100):
            y = float(rng.uniform(-30, 220))
            trial = make_trial(stim, [(10, y, 0)])
            expected = int(np.argmin([abs(y - c) for c in centers]))
            assert run(trial, "attach").lines == (expected,)


class TestCluster:
    def test_two_line_oracle(self):
        stim = make_stimulus([(0, 22), (60, 82)])  # centers 11, 71
        pts = [(10, 10.0, 0), (30, 12.0, 0), (50, 70.0, 1), (70, 72.0, 1)]
        trial = make_trial(stim, pts)
        got = run(trial, "cluster").lines
        expected = brute_force_2means([10.0, 12.0, 70.0, 72.0])
        assert list(got) == list(expected)
        assert got == (0, 0, 1, 1)

    def test_identical_y_falls_back_with_flag(self):
        stim = make_stimulus([(0, 50), (60, 110)])
        trial = make_trial(stim, [(10, 30.0, 0), (40, 30.0, 0)])
        out = run(trial, "cluster")
        assert out.meta.get("fallback") == "attach"

    def test_more_lines_than_fixations_falls_back(self):
        stim = make_stimulus([(0, 50), (60, 110), (120, 170)])
        trial = make_trial(stim, [(10, 25.0, 0), (40, 85.0, 1)])
        out = run(trial, "cluster")
        assert out.meta.get("fallback") == "attach"

    def test_matches_brute_force_on_random_small_sets(self):
        stim = make_stimulus([(0, 40), (60, 100)])
        rng = np.random.default_rng(7)
        for _ in range(20):
            ys = rng.uniform(0, 100, size=6)
            trial = make_trial(stim, [(i * 10.0, y, 0) for i, y in enumerate(ys)])
            got = run(trial, "cluster").lines
            expected = brute_force_2means(ys)
            assert list(got) == list(expected)


class TestSegment:
    def test_cut_at_single_jump(self):
        stim = make_stimulus([(0, 50), (60, 110)])
        pts = [(i * 20.0, 25.0, 0) for i in range(5)]
        pts += [(i * 20.0, 85.0, 1) for i in range(5)]  # x jumps back to 0
        trial = make_trial(stim, pts)
        assert run(trial, "segment").lines == (0,) * 5 + (1,) * 5

    def test_too_few_fixations_falls_back(self):
        stim = make_stimulus([(0, 50), (60, 110), (120, 170)])
        trial = make_trial(stim, [(10, 25.0, 0), (30, 25.0, 0)])
        out = run(trial, "segment")
        assert out.meta.get("fallback") == "attach"


class TestMerge:
    def test_fragmented_line_remerges(self):
        # two fragments of line 0 split by a regression to nowhere in x,
        # same gradient and intercept, so they merge back onto one line
        stim = make_stimulus([(0, 50), (60, 110)])
        pts = [(10.0, 25.0, 0), (30.0, 25.0, 0), (20.0, 26.0, 0), (50.0, 25.0, 0), (70.0, 25.5, 0)]
        pts += [(10.0, 85.0, 1), (40.0, 85.0, 1), (80.0, 86.0, 1)]
        trial = make_trial(stim, pts)
        assert run(trial, "merge").lines == (0, 0, 0, 0, 0, 1, 1, 1)

    def test_forced_phase_yields_exactly_m_groups(self):
        # scattered y forces many initial sequences; output must still be valid
        stim = make_stimulus([(0, 50), (60, 110)])
        rng = np.random.default_rng(2)
        pts = [(float(10 + 15 * i), float(rng.uniform(0, 110)), 0) for i in range(10)]
        trial = make_trial(stim, pts)
        lines = run(trial, "merge").array()
        assert set(np.unique(lines)) <= {0, 1}


class TestRegress:
    def test_proportional_shift_recovered(self):
        # y = 1.1 * l_y is within reach of the offset/sigma parameters for
        # a small stimulus, so regress recovers gold where attach cannot
        trial = sim_trial(1, dc=DistortionConfig(d_shift=0.1, seed=1), pc=PassageConfig(lines=8, line_height=50.0))
        gold = tuple(int(g) for g in trial.gold_lines())
        assert run(trial, "regress").lines == gold

    def test_single_fixation_per_line(self):
        stim = make_stimulus([(0, 50), (60, 110), (120, 170)])
        trial = make_trial(stim, [(10, 25.0, 0), (10, 85.0, 1), (10, 145.0, 2)])
        assert run(trial, "regress").lines == (0, 1, 2)


class TestSlice:
    def test_three_runs_merge_to_two_lines(self):
        stim = make_stimulus([(0, 50), (60, 110)])
        pts = [(i * 30.0, 25.0, 0) for i in range(4)]
        pts += [(i * 30.0, 27.0, 0) for i in range(3)]  # second run, same line
        pts += [(i * 30.0, 85.0, 1) for i in range(4)]
        trial = make_trial(stim, pts)
        lines = run(trial, "slice").lines
        assert lines == (0,) * 7 + (1,) * 4


class TestStretch:
    def test_recovers_scale_and_offset(self):
        # fixations at y = 1.05 * l_y + 3; the inverse transform is
        # scale = 1/1.05, offset = -3/1.05
        stim = uniform_stimulus(8, height=60.0)
        centers = stim.line_centers_y
        pts = []
        for li in range(8):
            for w in range(4):
                pts.append((w * 30.0 + 10.0, 1.05 * centers[li] + 3.0, li))
        trial = make_trial(stim, pts)
        got = run(trial, "stretch").lines
        assert got == tuple(int(g) for g in trial.gold_lines())

        # independent dense grid oracle over the same objective
        y = trial.xy()[:, 1]
        best = (np.inf, None, None)
        for s in np.linspace(0.9, 1.1, 201):
            t = s * y[:, None] + np.linspace(-50, 50, 401)[None, :]
            d = np.abs(t[:, :, None] - centers[None, None, :]).min(axis=2).sum(axis=0)
            j = int(np.argmin(d))
            if d[j] < best[0]:
                best = (d[j], s, np.linspace(-50, 50, 401)[j])
        assert abs(best[1] - 1 / 1.05) < 5e-3
        assert abs(best[2] - (-3 / 1.05)) < 0.5


class TestWarp:
    def test_identity_alignment(self):
        stim = uniform_stimulus(3, chars_per_line=11)
        words = stim.words
        pts = [((x0 + x1) / 2, (y0 + y1) / 2, li) for li, x0, x1, y0, y1 in words]
        trial = make_trial(stim, pts)
        assert run(trial, "warp").lines == tuple(int(g) for g in trial.gold_lines())

    def test_uniform_y_shift_still_gold(self):
        stim = uniform_stimulus(3, height=64.0, chars_per_line=11)
        words = stim.words
        pts = [((x0 + x1) / 2, (y0 + y1) / 2 + 0.4 * 64.0, li) for li, x0, x1, y0, y1 in words]
        trial = make_trial(stim, pts)
        assert run(trial, "warp").lines == tuple(int(g) for g in trial.gold_lines())

    def test_cost_matches_brute_force(self):
        from driftlab import _kernels

        rng = np.random.default_rng(3)
        a = [tuple(p) for p in rng.uniform(0, 100, size=(7, 2))]
        b = [tuple(p) for p in rng.uniform(0, 100, size=(5, 2))]
        acc = _kernels.dtw_cost(np.array(a), np.array(b))
        assert abs(acc[-1, -1] - brute_force_dtw(tuple(a), tuple(b))) < 1e-9

    def test_reversed_order_documented_behavior(self):
        # DTW assumes monotone progress; feeding the reading pass backwards
        # is not expected to recover gold, only to stay in range
        stim = uniform_stimulus(3, chars_per_line=11)
        words = stim.words
        pts = [((x0 + x1) / 2, (y0 + y1) / 2, li) for li, x0, x1, y0, y1 in reversed(words)]
        trial = make_trial(stim, pts)
        lines = run(trial, "warp").array()
        gold = trial.gold_lines()
        assert lines.min() >= 0 and lines.max() < 3
        assert not np.array_equal(lines, gold)


class TestChainSplitCompare:
    def test_chain_groups_nearby_fixations(self):
        stim = make_stimulus([(0, 50), (60, 110)])
        pts = [(10, 20.0, 0), (60, 24.0, 0), (110, 30.0, 0), (10, 88.0, 1), (60, 84.0, 1)]
        trial = make_trial(stim, pts)
        assert run(trial, "chain").lines == (0, 0, 0, 1, 1)

    def test_split_cuts_at_return_sweeps(self):
        stim = make_stimulus([(0, 50), (60, 110)])
        pts = [(i * 40.0, 22.0 + i, 0) for i in range(5)]
        pts += [(i * 40.0, 82.0 + i, 1) for i in range(5)]
        trial = make_trial(stim, pts)
        assert run(trial, "split").lines == (0,) * 5 + (1,) * 5

    def test_compare_assigns_full_sweeps(self):
        trial = sim_trial(2)
        lines = run(trial, "compare").array()
        xs = trial.xy()[:, 0]
        sweep_starts = np.nonzero(np.diff(xs) < -512.0)[0] + 1
        for seg in np.split(np.arange(len(xs)), sweep_starts):
            assert np.unique(lines[seg]).size == 1
