"""Acceptance suite: one test per release criterion, printed pass/fail lines.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines.
"""

import itertools
import json
import math
import time
from collections import Counter
from decimal import Decimal

import numpy as np
import pytest

from conftest import make_trial, uniform_stimulus
from driftlab import corn, evaluate, simulate, trial_io
from driftlab.cli import main as cli_main
from driftlab.corn import LogitTensor
from driftlab.correctors import ALGORITHM_NAMES, CorrectorSpec, apply_corrector
from driftlab.features import render_second_stream, save_raster_png
from driftlab.simulate import DistortionConfig, PassageConfig
from driftlab.trial import Assignment
from driftlab.woc import PoolMember, VotingPool, disagreement, vote

PASS = "[PASS]"


def report(name, detail):
    print(f"{PASS} {name}: {detail}")


def make_level_trials(n, dc, pc=None):
    pc = pc or PassageConfig()
    return [simulate.generate_trial(pc, dc, passage_index=p, cell_index=0) for p in range(n)]


def algo_accuracy(trials, algo, **params):
    preds = [apply_corrector(t, CorrectorSpec(algo, params)) for t in trials]
    return evaluate.dataset_accuracy(preds, trials)


def test_corn_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    h = 1e-4
    worst = 0.0
    t0 = time.time()
    instances = 0
    while instances < 100:
        s = int(rng.integers(1, 21))
        k = int(rng.integers(2, 15))
        values = rng.normal(0, 2, size=(s, k - 1))
        mask = rng.random(s) < 0.85
        y = rng.integers(1, k + 1, size=s)
        tensor = LogitTensor(values=values, mask=mask)
        grad = corn.corn_grad(tensor, y)
        assert np.all(grad[~mask] == 0.0)
        fd = np.zeros_like(values)
        for i in range(s):
            for j in range(k - 1):
                vp, vm = values.copy(), values.copy()
                vp[i, j] += h
                vm[i, j] -= h
                fd[i, j] = (
                    corn.corn_loss(LogitTensor(values=vp, mask=mask), y)
                    - corn.corn_loss(LogitTensor(values=vm, mask=mask), y)
                ) / (2 * h)
        rel = np.abs(grad - fd) / np.maximum(np.abs(grad) + np.abs(fd), 1e-8)
        worst = max(worst, float(rel.max()))
        instances += 1
    elapsed = time.time() - t0
    assert worst < 1e-5, f"max relative error {worst}"
    assert elapsed < 5.0, f"gradient check took {elapsed:.2f}s"
    report(
        "corn-gradient",
        f"{instances} instances, max rel err {worst:.2e}, {elapsed:.2f}s",
    )


def test_corn_decode_matches_exhaustive_oracle():
    checked = 0
    for k in range(2, 7):
        for pattern in itertools.product((-2.0, 2.0), repeat=k - 1):
            tensor = LogitTensor(values=np.array([pattern]), mask=np.array([True]))
            got = int(corn.corn_decode(tensor, k)[0])
            prod, q = 1.0, 1
            for z in pattern:
                prod *= 1.0 / (1.0 + math.exp(-z))
                if prod > 0.5:
                    q += 1
            assert got == min(q, k) - 1
            checked += 1
    rng = np.random.default_rng(12)
    for _ in range(300):
        k = int(rng.integers(2, 15))
        s = int(rng.integers(1, 25))
        tensor = LogitTensor(
            values=rng.normal(0, 5, size=(s, k - 1)), mask=np.ones(s, dtype=bool)
        )
        max_line = int(rng.integers(1, k + 1))
        lines = corn.corn_decode(tensor, max_line)
        assert lines.max(initial=0) <= max_line - 1
    report("corn-decode", f"{checked} threshold patterns plus 300 clipping fuzz cases")


def test_zero_distortion_oracle_all_algorithms_and_cwoc():
    t0 = time.time()
    trials = make_level_trials(50, DistortionConfig(seed=21))
    per_algo = {}
    all_preds = {}
    for algo in ALGORITHM_NAMES:
        preds = [apply_corrector(t, CorrectorSpec(algo)) for t in trials]
        all_preds[algo] = preds
        per_algo[algo] = evaluate.dataset_accuracy(preds, trials)
    cwoc_preds = []
    for i, t in enumerate(trials):
        pool = VotingPool(tuple(PoolMember(all_preds[a][i], 1) for a in ALGORITHM_NAMES))
        cwoc_preds.append(vote(pool))
    per_algo["c-woc"] = evaluate.dataset_accuracy(cwoc_preds, trials)
    elapsed = time.time() - t0

    required = [a for a in ALGORITHM_NAMES if a != "compare"] + ["c-woc"]
    for name in required:
        assert per_algo[name] == 1.0, f"{name} accuracy {per_algo[name]} != 1.0"
    assert elapsed < 60.0, f"oracle run took {elapsed:.1f}s"
    report(
        "zero-distortion-oracle",
        f"10 algorithms + C-WOC exact 1.0 on 50 trials in {elapsed:.1f}s "
        f"(compare, exempt, scored {per_algo['compare']:.4f})",
    )


def test_noise_degradation_attach():
    pc = PassageConfig(line_height=64.0)
    accs = []
    for noise in (0.0, 10.0, 20.0, 30.0, 40.0):
        trials = make_level_trials(30, DistortionConfig(d_noise=noise, seed=31), pc)
        accs.append(algo_accuracy(trials, "attach"))
    assert accs[0] == 1.0, f"accuracy at zero noise is {accs[0]}"
    for a, b in zip(accs, accs[1:]):
        assert b <= a + 1e-12, f"accuracy increased across noise levels: {accs}"
    report("noise-degradation", "attach accuracies " + ", ".join(f"{a:.4f}" for a in accs))


def test_shift_robustness_regress_beats_attach():
    dc = DistortionConfig(d_noise=5.0, d_shift=0.15, seed=41)
    trials = make_level_trials(30, dc)
    acc_regress = algo_accuracy(trials, "regress")
    acc_attach = algo_accuracy(trials, "attach")
    assert acc_regress > acc_attach, f"regress {acc_regress} <= attach {acc_attach}"
    report(
        "shift-robustness",
        f"regress {acc_regress:.4f} > attach {acc_attach:.4f} at d_shift=0.15",
    )


def test_simulator_noise_calibration():
    details = []
    for d_noise in (10.0, 40.0):
        residuals = []
        p = 0
        while len(residuals) < 1000:
            trial = simulate.generate_trial(
                PassageConfig(), DistortionConfig(d_noise=d_noise, d_shift=0.1, seed=51), p, 0
            )
            centers = trial.stimulus.line_centers_y
            expected = centers[trial.gold_lines()] * 1.1
            residuals.extend(trial.xy()[:, 1] - expected)
            p += 1
        std = float(np.std(residuals))
        assert abs(std - d_noise) / d_noise < 0.10, f"std {std} vs configured {d_noise}"
        details.append(f"d_noise={d_noise:g}: std={std:.2f} over {len(residuals)} fixations")
    report("simulator-calibration", "; ".join(details))


def test_woc_exhaustive_properties():
    def tally_winner(members):
        votes = Counter()
        for line, w in members:
            votes[line] += w
        top = max(votes.values())
        return min(l for l, c in votes.items() if c == top)

    def build(members):
        return VotingPool(
            tuple(
                PoolMember(Assignment(trial_id="t", lines=(line,), source=str(i)), w)
                for i, (line, w) in enumerate(members)
            )
        )

    pools = 0
    for n in (1, 2, 3, 4):
        for lines in itertools.product((0, 1, 2), repeat=n):
            for weights in itertools.product((1, 2, 3), repeat=n):
                members = list(zip(lines, weights))
                pool = build(members)
                winner = vote(pool).lines[0]
                # tally oracle with lowest-index tie-break
                assert winner == tally_winner(members)
                # unanimity
                if len(set(lines)) == 1:
                    assert winner == lines[0]
                # weight-duplication equivalence
                expanded = build([(l, 1) for l, w in members for _ in range(w)])
                assert vote(expanded).lines[0] == winner
                assert disagreement(expanded)[1] == pytest.approx(disagreement(pool)[1])
                # permutation invariance (rotations suffice at this size)
                for shift in range(1, n):
                    rotated = members[shift:] + members[:shift]
                    assert vote(build(rotated)).lines[0] == winner
                pools += 1
    report("woc-properties", f"{pools} pools enumerated exhaustively")


def test_io_round_trip_and_determinism(tmp_path):
    from test_trial_io import fuzz_trial

    rng = np.random.default_rng(61)
    for i in range(200):
        trial = fuzz_trial(rng, f"t{i:03d}")
        csv_path, json_path = trial_io.save_trial(trial, tmp_path / "a")
        assert trial_io.load_trial(csv_path, json_path) == trial
        csv2, json2 = trial_io.save_trial(trial, tmp_path / "b")
        assert csv_path.read_bytes() == csv2.read_bytes()
        assert json_path.read_bytes() == json2.read_bytes()
    report("io-round-trip", "200 fuzzed trials round-tripped, saves byte-identical")


def test_metric_spot_values():
    stim = uniform_stimulus(4)
    pts = [(10.0 * i, (g + 0.5) * 64.0, g) for i, g in enumerate([0, 1, 2, 2])]
    trial = make_trial(stim, pts)
    acc = evaluate.trial_accuracy(
        Assignment(trial_id="t0", lines=(0, 1, 1, 2), source="x"), trial
    )
    assert acc == 0.75

    expected = float((Decimal("98.17") - Decimal("96.75")) / Decimal("96.75"))
    rel = evaluate.relative_accuracy(98.17, 96.75)
    assert rel == pytest.approx(expected, abs=1e-12)
    assert f"{rel:.7f}" == "0.0146770"

    rng = np.random.default_rng(71)
    for _ in range(20):
        k = int(rng.integers(2, 7))
        n = int(rng.integers(1, 30))
        gold = rng.integers(0, k, size=n).tolist()
        pred = rng.integers(0, k, size=n).tolist()
        stim = uniform_stimulus(k)
        trial = make_trial(stim, [(float(i), (g + 0.5) * 64.0, g) for i, g in enumerate(gold)])
        mat = evaluate.confusion(
            [Assignment(trial_id="t0", lines=tuple(pred), source="x")], [trial], k
        )
        sums = mat.sum(axis=1)
        assert np.all((np.abs(sums - 1.0) < 1e-12) | (sums == 0.0))
    report(
        "metric-spot-values",
        f"trial accuracy 0.75, relative accuracy {rel:.7f}, confusion rows normalized",
    )


def test_raster_contract(tmp_path):
    trial = simulate.generate_trial(PassageConfig(), DistortionConfig(seed=81), 0, 0)
    raster = render_second_stream(trial)
    assert raster.shape == (224, 224, 3)
    marker_levels = raster[:, :, 2][raster[:, :, 2] > 0]
    assert marker_levels.min() >= 0.25 and marker_levels.max() <= 1.0
    assert np.any(np.isclose(marker_levels, 0.25)) and np.any(np.isclose(marker_levels, 1.0))
    assert np.array_equal(raster, render_second_stream(trial))
    p1, p2 = tmp_path / "r1.png", tmp_path / "r2.png"
    save_raster_png(raster, p1)
    save_raster_png(raster, p2)
    assert p1.read_bytes() == p2.read_bytes()
    report(
        "raster-contract",
        f"224x224x3, marker levels in [{marker_levels.min():.2f}, {marker_levels.max():.2f}], "
        "extremes attained, byte-deterministic",
    )


def test_end_to_end_cli_chain(tmp_path, capsys):
    data = tmp_path / "data"
    preds = tmp_path / "preds"
    metrics = tmp_path / "metrics"
    assert cli_main(["simulate", "--out", str(data), "--trials", "5", "--seed", "91"]) == 0
    assert cli_main(["correct", "--algo", "attach", "--in", str(data), "--out", str(preds)]) == 0
    assert (
        cli_main(["evaluate", "--pred", str(preds), "--gold", str(data), "--out", str(metrics)])
        == 0
    )
    summary = json.loads((metrics / "summary.json").read_text())
    assert summary["attach"]["dataset_accuracy"] == 1.0
    captured = capsys.readouterr().out
    assert "attach: dataset accuracy 1.000000" in captured
    report("end-to-end-cli", "simulate -> correct(attach) -> evaluate gives accuracy 1.0, exit 0")
