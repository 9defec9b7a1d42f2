"""Command-line entry point.

Subcommands: simulate, correct, decode, evaluate, export-features, serve.
Exit codes: 0 success, 1 usage error, 2 data error. Every run that writes
output records a reproducibility manifest (resolved config, seeds, package
versions) next to its outputs. ``--config run.json`` can supply any flag;
explicit flags win. DRIFTLAB_SEED serves as the seed fallback.
"""

import argparse
import concurrent.futures
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, corn, evaluate, normalize, predictions, simulate, trial_io
from .correctors import ALGORITHM_NAMES, CorrectorSpec, apply_corrector
from .errors import DriftlabError
from .features import export_trial_features
from .normalize import NormScheme
from .trial import Assignment
from .woc import PoolMember, VotingPool, vote


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_seed() -> int:
    return int(os.environ.get("DRIFTLAB_SEED", "0"))


def write_manifest(out_dir: Path, command: str, config: dict):
    doc = {
        "command": command,
        "config": config,
        "versions": {
            "driftlab": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _parallel_map(fn, items, jobs):
    """Order-preserving map, optionally over a process pool."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_simulate(args):
    cells = []
    for noise in args.noise:
        for shift in args.shift:
            cells.append(
                simulate.DistortionConfig(
                    d_noise=noise,
                    d_shift=shift,
                    p_within=args.p_within,
                    p_between=args.p_between,
                    seed=args.seed,
                )
            )
    pc = simulate.PassageConfig(
        lines=tuple(args.lines),
        line_height=tuple(args.line_height),
        max_fixations=args.max_fixations,
        corpus=args.corpus,
    )
    trials = simulate.sweep(pc, cells, args.out, passages=args.trials, seed=args.seed)
    write_manifest(
        args.out,
        "simulate",
        {
            "trials": args.trials,
            "seed": args.seed,
            "noise": args.noise,
            "shift": args.shift,
            "p_within": args.p_within,
            "p_between": args.p_between,
            "lines": list(args.lines),
            "line_height": list(args.line_height),
            "max_fixations": args.max_fixations,
            "corpus": str(args.corpus) if args.corpus else None,
            "trial_ids": [t.id for t in trials],
        },
    )
    print(f"wrote {len(trials)} trials to {args.out}")
    return 0


def _run_one_algo(packed):
    trial, algo, params = packed
    return apply_corrector(trial, CorrectorSpec(algo, params))


def cmd_correct(args):
    trials = trial_io.load_dataset(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = json.loads(args.params) if args.params else {}

    if args.woc:
        pool_cfg = json.loads(Path(args.woc).read_text(encoding="utf-8"))
        sources = {}
        for member in pool_cfg:
            name = member["source"]
            if name in ALGORITHM_NAMES:
                assigned = _parallel_map(
                    _run_one_algo, [(t, name, {}) for t in trials], args.jobs
                )
                sources[name] = {a.trial_id: a for a in assigned}
            else:
                if "path" not in member:
                    raise DriftlabError(
                        f"pool member {name!r} is not a built-in algorithm; give it a 'path'"
                    )
                sources[name] = predictions.read_predictions(member["path"], source=name)
        voted = []
        for t in trials:
            members = []
            for member in pool_cfg:
                name = member["source"]
                if t.id not in sources[name]:
                    raise DriftlabError(f"source {name!r} has no predictions for trial {t.id}")
                members.append(PoolMember(sources[name][t.id], int(member.get("weight", 1))))
            voted.append(vote(VotingPool(tuple(members))))
        predictions.write_predictions(voted, out_dir / "woc.csv")
        names_run = ["woc"]
    else:
        algos = list(ALGORITHM_NAMES) if args.algo == "all" else [args.algo]
        names_run = algos
        for algo in algos:
            assigned = _parallel_map(
                _run_one_algo, [(t, algo, params) for t in trials], args.jobs
            )
            predictions.write_predictions(assigned, out_dir / f"{algo}.csv")

    write_manifest(
        out_dir,
        "correct",
        {
            "input": str(args.input),
            "algo": args.algo,
            "woc": str(args.woc) if args.woc else None,
            "params": params,
            "jobs": args.jobs,
            "sources": names_run,
            "trial_ids": [t.id for t in trials],
        },
    )
    print(f"wrote predictions for {names_run} over {len(trials)} trials to {out_dir}")
    return 0


def cmd_decode(args):
    tensors = corn.load_logit_dir(args.logits)
    if not tensors:
        raise DriftlabError(f"no logit tensors found in {args.logits}")
    by_trial: dict[str, list] = {}
    for t in tensors:
        by_trial.setdefault(t.trial_id, []).append(t)

    max_lines = {}
    if args.data:
        for trial in trial_io.load_dataset(args.data):
            max_lines[trial.id] = trial.stimulus.line_count
    out = []
    for tid in sorted(by_trial):
        max_line = args.max_line if args.max_line else max_lines.get(tid)
        if not max_line:
            raise DriftlabError(f"no max line known for trial {tid}; pass --max-line or --data")
        lines = corn.ensemble_decode(by_trial[tid], max_line)
        out.append(Assignment(trial_id=tid, lines=tuple(int(v) for v in lines), source="edist"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    predictions.write_predictions(out, out_dir / "edist.csv")
    write_manifest(
        out_dir,
        "decode",
        {
            "logits": str(args.logits),
            "max_line": args.max_line,
            "data": str(args.data) if args.data else None,
            "trial_ids": sorted(by_trial),
        },
    )
    print(f"decoded {len(out)} trials to {out_dir / 'edist.csv'}")
    return 0


def cmd_evaluate(args):
    trials = trial_io.load_dataset(args.gold)
    by_id = {t.id: t for t in trials}
    pred_path = Path(args.pred)
    files = sorted(pred_path.glob("*.csv")) if pred_path.is_dir() else [pred_path]
    files = [f for f in files if f.stem != "manifest"]
    if not files:
        raise DriftlabError(f"no prediction files at {args.pred}")

    summary = {}
    per_trial_rows = ["source,trial_id,accuracy"]
    for f in files:
        preds = predictions.read_predictions(f)
        missing = sorted(set(by_id) - set(preds))
        if missing:
            raise DriftlabError(f"{f}: missing predictions for trials {missing[:5]}")
        ordered = [preds[tid] for tid in sorted(by_id)]
        ordered_trials = [by_id[tid] for tid in sorted(by_id)]
        accs = [evaluate.trial_accuracy(p, t) for p, t in zip(ordered, ordered_trials)]
        for tid, acc in zip(sorted(by_id), accs):
            per_trial_rows.append(f"{f.stem},{tid},{acc!r}")
        summary[f.stem] = {"dataset_accuracy": float(np.mean(accs)), "trials": len(accs)}
        if args.confusion:
            k = max(t.stimulus.line_count for t in trials)
            summary[f.stem]["confusion"] = evaluate.confusion(
                ordered, ordered_trials, k
            ).tolist()

    for source in sorted(summary):
        print(f"{source}: dataset accuracy {summary[source]['dataset_accuracy']:.6f}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "per_trial.csv").write_text("\n".join(per_trial_rows) + "\n", encoding="utf-8")
        (out_dir / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        write_manifest(out_dir, "evaluate", {"pred": str(args.pred), "gold": str(args.gold)})
    return 0


def cmd_export_features(args):
    trials = trial_io.load_dataset(args.input)
    scheme = NormScheme(args.scheme)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.stats:
        stats = normalize.NormStats.load(args.stats)
    else:
        stacked = np.vstack([normalize.apply_scheme(t, scheme) for t in trials])
        stats = normalize.fit_stats(stacked, scheme)
    stats.save(out_dir / "stats.json")
    for t in trials:
        export_trial_features(t, scheme, stats, out_dir)
    write_manifest(
        out_dir,
        "export-features",
        {
            "input": str(args.input),
            "scheme": scheme.value,
            "stats": str(args.stats) if args.stats else "fitted",
            "trial_ids": [t.id for t in trials],
        },
    )
    print(f"exported features for {len(trials)} trials to {out_dir}")
    return 0


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    app = create_app(args.data, args.runs, args.overrides)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="driftlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic reading trials")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--trials", type=int, default=10, help="number of passages")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--noise", type=float, nargs="*", default=[0.0])
    p.add_argument("--shift", type=float, nargs="*", default=[0.0])
    p.add_argument("--p-within", type=float, default=0.0)
    p.add_argument("--p-between", type=float, default=0.0)
    p.add_argument("--lines", type=int, nargs=2, default=[8, 14])
    p.add_argument("--line-height", type=float, nargs=2, default=[49.0, 79.0])
    p.add_argument("--max-fixations", type=int, default=500)
    p.add_argument("--corpus", type=Path, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("correct", help="run correction algorithms over a dataset")
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--algo", choices=list(ALGORITHM_NAMES) + ["all"], default=None)
    p.add_argument("--params", default=None, help="JSON object of algorithm parameters")
    p.add_argument("--woc", type=Path, default=None, help="JSON voting pool config")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("decode", help="CORN-decode external logit tensors")
    p.add_argument("--logits", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--max-line", type=int, default=None)
    p.add_argument("--data", type=Path, default=None, help="dataset dir for per-trial line counts")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    p.add_argument("--pred", required=True, type=Path)
    p.add_argument("--gold", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--confusion", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-features", help="emit model-input features per trial")
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--scheme", choices=[s.value for s in NormScheme], default="xy_lw")
    p.add_argument("--stats", type=Path, default=None)
    p.set_defaults(func=cmd_export_features)

    p = sub.add_parser("serve", help="start the review service")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--runs", required=True, type=Path)
    p.add_argument("--overrides", required=True, type=Path)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)
    return parser


def _merge_config(argv):
    """Pull --config file values in as defaults; explicit flags win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise UsageError("--config needs a file path")
    cfg_path = Path(argv[idx + 1])
    argv = argv[:idx] + argv[idx + 2 :]
    try:
        cfg = json.loads(cfg_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"bad config file {cfg_path}: {e}") from None
    extra = []
    for key, value in cfg.items():
        flag = f"--{key.replace('_', '-')}"
        if flag in argv:
            continue
        if isinstance(value, bool):
            if value:
                extra.append(flag)
        elif isinstance(value, list):
            extra.extend([flag] + [str(v) for v in value])
        else:
            extra.extend([flag, str(value)])
    return argv[:1] + extra + argv[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _merge_config(argv)
        args = parser.parse_args(argv)
        if args.command == "correct" and not args.woc and not args.algo:
            raise UsageError("correct needs --algo or --woc")
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except DriftlabError as e:
        print(f"error [{e.code}]: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error [io_error]: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
