"""Ordinal regression: loss values, analytic gradient, decode, ensembles."""

import itertools
import math

import numpy as np
import pytest

from driftlab import corn
from driftlab.corn import LogitTensor, corn_decode, corn_grad, corn_loss, ensemble_decode
from driftlab.errors import BadMaxLineError, EmptyEnsembleError, ShapeMismatchError


def tensor(values, mask=None, **kw):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if mask is None:
        mask = np.ones(values.shape[0], dtype=bool)
    return LogitTensor(values=values, mask=np.asarray(mask, dtype=bool), **kw)


def log_sigmoid_ref(z):
    # independent reference: high-precision direct formula
    return -math.log1p(math.exp(-z)) if z >= 0 else z - math.log1p(math.exp(z))


def loss_reference(values, mask, y, k):
    """Direct loop evaluation of the conditional loss definition."""
    total = 0.0
    count = 0
    for j in range(1, k):  # rank r_j = j, subset S_j requires y > j - 1
        for i in range(len(y)):
            if not mask[i]:
                continue
            if j > 1 and not y[i] > j - 1:
                continue
            count += 1
            z = values[i][j - 1]
            if y[i] > j:
                total += log_sigmoid_ref(z)
            else:
                total += log_sigmoid_ref(-z)
    return -total / count if count else 0.0


class TestLoss:
    def test_single_binary_position_y1(self):
        t = tensor([[0.0]])
        assert corn_loss(t, np.array([1])) == pytest.approx(math.log(2), abs=1e-12)

    def test_single_binary_position_y2_symmetry(self):
        t = tensor([[0.0]])
        assert corn_loss(t, np.array([2])) == pytest.approx(math.log(2), abs=1e-12)

    def test_three_rank_hand_value(self):
        # K=3, y = {1, 3}, all logits +10: subsets S_1 = both, S_2 = {y=3};
        # loss = (softplus(10)·? ...) evaluated independently below
        t = tensor([[10.0, 10.0], [10.0, 10.0]])
        y = np.array([1, 3])
        expected = (
            -(log_sigmoid_ref(-10.0) + log_sigmoid_ref(10.0) + log_sigmoid_ref(10.0)) / 3.0
        )
        assert expected == pytest.approx((10.000045398899217 + 2 * 4.5398899216870535e-05) / 3, rel=1e-12)
        assert corn_loss(t, y) == pytest.approx(expected, abs=1e-12)

    def test_matches_loop_reference_on_random_instances(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            s = int(rng.integers(1, 12))
            k = int(rng.integers(2, 9))
            values = rng.normal(0, 3, size=(s, k - 1))
            mask = rng.random(s) < 0.8
            y = rng.integers(1, k + 1, size=s)
            t = tensor(values, mask)
            assert corn_loss(t, y) == pytest.approx(
                loss_reference(values, mask, y, k), abs=1e-10
            )

    def test_loss_decreases_with_confidence(self):
        y = np.array([1, 2, 3])
        losses = []
        for c in (1.0, 2.0, 4.0, 8.0):
            # correct-direction logits: +c where y > r_j else -c
            values = np.array([[c if yy > j else -c for j in (1, 2)] for yy in y])
            losses.append(corn_loss(tensor(values), y))
        assert all(b < a for a, b in zip(losses, losses[1:]))
        assert all(v >= 0 for v in losses)

    def test_all_masked_gives_zero(self):
        t = tensor([[1.0], [2.0]], mask=[False, False])
        assert corn_loss(t, np.array([1, 1])) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            corn_loss(tensor([[0.0]]), np.array([1, 2]))


class TestGrad:
    def test_binary_hand_values(self):
        assert corn_grad(tensor([[0.0]]), np.array([2]))[0, 0] == pytest.approx(-0.5)
        assert corn_grad(tensor([[0.0]]), np.array([1]))[0, 0] == pytest.approx(+0.5)

    def test_masked_positions_exactly_zero(self):
        rng = np.random.default_rng(1)
        values = rng.normal(0, 2, size=(6, 4))
        mask = np.array([True, False, True, False, True, True])
        y = rng.integers(1, 6, size=6)
        grad = corn_grad(tensor(values, mask), y)
        assert np.all(grad[~mask] == 0.0)

    def test_finite_difference_oracle(self):
        rng = np.random.default_rng(2)
        h = 1e-4
        worst = 0.0
        for _ in range(120):
            s = int(rng.integers(1, 21))
            k = int(rng.integers(2, 15))
            values = rng.normal(0, 2, size=(s, k - 1))
            mask = rng.random(s) < 0.85
            y = rng.integers(1, k + 1, size=s)
            t = tensor(values, mask)
            grad = corn_grad(t, y)
            for _ in range(3):  # spot-check a few coordinates per instance
                i = int(rng.integers(0, s))
                j = int(rng.integers(0, k - 1))
                vp, vm = values.copy(), values.copy()
                vp[i, j] += h
                vm[i, j] -= h
                fd = (corn_loss(tensor(vp, mask), y) - corn_loss(tensor(vm, mask), y)) / (2 * h)
                rel = abs(grad[i, j] - fd) / max(abs(grad[i, j]) + abs(fd), 1e-8)
                worst = max(worst, rel)
        assert worst < 1e-5


class TestDecode:
    def test_high_logits_reach_top_rank(self):
        # sigma(2) = 0.8808, cumulative [0.8808, 0.7759] -> q = 3 -> index 2
        t = tensor([[2.0, 2.0]])
        assert corn_decode(t, 3).tolist() == [2]

    def test_zero_logits_decode_to_first_line(self):
        t = tensor([[0.0, 0.0]])
        assert corn_decode(t, 3).tolist() == [0]

    def test_clipping_to_max_line(self):
        t = tensor([[2.0, 2.0]])
        assert corn_decode(t, 2).tolist() == [1]

    def test_bad_max_line(self):
        with pytest.raises(BadMaxLineError):
            corn_decode(tensor([[0.0]]), 3)

    def test_masked_positions_omitted(self):
        t = tensor([[2.0], [2.0], [2.0]], mask=[True, False, True])
        assert corn_decode(t, 2).shape == (2,)

    def test_exhaustive_threshold_patterns(self):
        # brute-force evaluation of the rank rule over every +/- logit pattern
        def sigma(z):
            return 1.0 / (1.0 + math.exp(-z))

        for k in range(2, 7):
            for pattern in itertools.product((-2.0, 2.0), repeat=k - 1):
                t = tensor([list(pattern)])
                got = corn_decode(t, k)[0]
                prod, q = 1.0, 1
                for z in pattern:
                    prod *= sigma(z)
                    if prod > 0.5:
                        q += 1
                assert got == min(q, k) - 1, f"K={k} pattern={pattern}"

    def test_rank_monotonicity_in_each_logit(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            k = int(rng.integers(2, 8))
            values = rng.normal(0, 2, size=(1, k - 1))
            q0 = corn.decode_q(values)[0]
            j = int(rng.integers(0, k - 1))
            bumped = values.copy()
            bumped[0, j] += float(rng.uniform(0, 3))
            assert corn.decode_q(bumped)[0] >= q0

    def test_clip_never_exceeded_on_fuzz(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            k = int(rng.integers(2, 15))
            s = int(rng.integers(1, 30))
            t = tensor(rng.normal(0, 5, size=(s, k - 1)))
            max_line = int(rng.integers(1, k + 1))
            lines = corn_decode(t, max_line)
            assert lines.max(initial=0) <= max_line - 1
            assert lines.min(initial=0) >= 0


class TestEnsemble:
    def test_single_member_identity(self):
        rng = np.random.default_rng(5)
        t = tensor(rng.normal(0, 2, size=(6, 4)))
        assert ensemble_decode([t], 5).tolist() == corn_decode(t, 5).tolist()

    def test_opposite_members_cancel(self):
        rng = np.random.default_rng(6)
        values = rng.normal(0, 2, size=(5, 3))
        a, b = tensor(values), tensor(-values)
        assert ensemble_decode([a, b], 4).tolist() == [0] * 5

    def test_matches_mean_then_decode_oracle(self):
        rng = np.random.default_rng(7)
        members = [tensor(rng.normal(0, 2, size=(8, 5))) for _ in range(3)]
        got = ensemble_decode(members, 6)
        mean = np.mean([m.values for m in members], axis=0)
        expected = corn_decode(tensor(mean), 6)
        assert got.tolist() == expected.tolist()

    def test_empty_rejected(self):
        with pytest.raises(EmptyEnsembleError):
            ensemble_decode([], 3)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeMismatchError):
            ensemble_decode([tensor([[0.0]]), tensor([[0.0, 1.0]])], 2)


class TestFiles:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        t = LogitTensor(
            values=rng.normal(0, 2, size=(4, 3)),
            mask=np.array([True, True, False, True]),
            trial_id="t7",
            scheme="xy",
        )
        path = tmp_path / "t7_xy.json"
        corn.save_logits(t, path)
        back = corn.load_logits(path)
        assert np.array_equal(back.values, t.values)
        assert np.array_equal(back.mask, t.mask)
        assert back.trial_id == "t7" and back.scheme == "xy"

    def test_load_dir_sorted(self, tmp_path):
        for name in ("b.json", "a.json"):
            corn.save_logits(tensor([[1.0]], trial_id=name[0]), tmp_path / name)
        loaded = corn.load_logit_dir(tmp_path)
        assert [t.trial_id for t in loaded] == ["a", "b"]
