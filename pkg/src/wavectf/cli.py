"""``ctf`` command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error. Diagnostics go to
standard error; ``--json`` prints exactly one JSON document to standard output.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import yaml

from . import _jsonfmt
from .baselines import make_estimator, run_baseline, write_submission
from .io import load_any
from .preprocessing import NoiseSpec, derive_seed
from .presets import PRESETS, build_preset
from .referee import (
    ingest,
    leaderboard,
    leaderboard_json,
    read_ledger,
    render_table,
    score_and_record,
)
from .metrics import evaluate_submission
from .splits import CONFIGS, Bundle, DatasetConfig, make_splits, publish
from .tasks import SCORE_IDS, TASK_BY_ID
from .tuning import Budget, HyperParamSpace, tune, write_trials

log = logging.getLogger("wavectf")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(args, doc, text):
    if args.json:
        sys.stdout.write(_jsonfmt.dumps(doc, indent=2) + "\n")
    elif text:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _resolve_bundle(value):
    """Bundle directory from the flag, falling back to ``CTF_DATA_DIR``."""
    root = os.environ.get("CTF_DATA_DIR")
    if value is None:
        if not root:
            raise UsageError("--bundle is required when CTF_DATA_DIR is unset")
        path = Path(root)
    else:
        path = Path(value)
        if not path.exists() and root and (Path(root) / value).exists():
            path = Path(root) / value
    if not (path / "dataset.json").is_file():
        raise UsageError(f"{path} is not a bundle directory (no dataset.json)")
    return path


def _load_yaml(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: expected a mapping at top level")
    return doc


def cmd_gen(args):
    bundle = build_preset(args.preset, seed=args.seed)
    out = bundle.save(args.out)
    doc = {"dataset": bundle.config.name, "bundle": str(out), "seed": args.seed,
           "matrices": {k: list(bundle.config.shape_of(k)) for k in bundle.config.index_table}}
    if args.public:
        doc["public"] = str(publish(out, args.public))
    _emit(args, doc, f"wrote {bundle.config.name} bundle to {out}")
    return EXIT_OK


def _config_from_arg(value):
    if value in CONFIGS:
        return CONFIGS[value]()
    path = Path(value)
    if not path.is_file():
        raise UsageError(f"--config must be one of {sorted(CONFIGS)} or a dataset JSON file")
    return DatasetConfig.from_dict(json.loads(path.read_text()))


def cmd_split(args):
    config = _config_from_arg(args.config)
    if args.seed is not None:
        config.noise_low = NoiseSpec(config.noise_low.sigma_rel, derive_seed(args.seed, "noise_low"))
        config.noise_high = NoiseSpec(config.noise_high.sigma_rel, derive_seed(args.seed, "noise_high"))
    source = load_any(args.source)
    family = [load_any(f) for f in args.family]
    bundle = Bundle(config, make_splits(source, config, family))
    out = bundle.save(args.out)
    doc = {"dataset": config.name, "bundle": str(out)}
    if args.public:
        doc["public"] = str(publish(out, args.public))
    _emit(args, doc, f"wrote {config.name} bundle to {out}")
    return EXIT_OK


def cmd_baseline(args):
    root = _resolve_bundle(args.bundle)
    view = Bundle.load(root).train_view()
    cfg = _load_yaml(args.config)
    estimator = make_estimator(args.method, cfg.get("params"))
    predictions, failures = run_baseline(estimator, view, overrides=cfg.get("tasks"))
    manifest = write_submission(predictions, args.out, view.config.name, args.method)
    doc = {"manifest": str(manifest), "method": args.method, "dataset": view.config.name,
           "written": sorted(predictions), "failures": failures}
    _emit(args, doc, f"wrote {len(predictions)} predictions and {manifest}")
    return EXIT_OK


def cmd_tune(args):
    root = _resolve_bundle(args.bundle)
    bundle = Bundle.load(root)
    if args.task not in TASK_BY_ID:
        raise UsageError(f"--task must be one of {list(SCORE_IDS)}")
    space_arg = args.space or args.method
    space = HyperParamSpace.from_yaml(space_arg) if Path(space_arg).is_file() else HyperParamSpace.builtin(space_arg)
    budget = Budget(max_trials=args.trials, max_seconds=args.max_seconds, rungs=args.rungs,
                    keep_fraction=args.keep_fraction)
    result = tune(make_estimator(args.method), TASK_BY_ID[args.task], bundle.train_view(), space,
                  budget=budget, seed=args.seed, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trials(result.trials, out / "trials.jsonl", timings_path=out / "timings.jsonl")
    best = {"method": args.method, "task": args.task, "metric": result.metric, "seed": args.seed,
            "best_trial": result.best_trial, "best_score": result.best_score,
            "best_params": result.best_params, "effective_params": result.effective_params,
            "n_trainings": result.n_trainings}
    (out / "best.json").write_text(_jsonfmt.dumps(best, indent=2) + "\n")
    _emit(args, best, f"best trial {result.best_trial}: score {result.best_score:.4f} "
                      f"params {_jsonfmt.dumps(result.best_params)}")
    return EXIT_OK


def _score_text(report):
    lines = [f"{s:<4} {report.scores[s]:10.4f}" for s in SCORE_IDS]
    lines.append(f"Avg  {report.composite:10.4f}")
    for s, reason in report.failures.items():
        lines.append(f"# {s}: {reason}")
    return "\n".join(lines)


def cmd_score(args):
    root = _resolve_bundle(args.bundle)
    bundle = Bundle.load(root)
    if not bundle.has_tests:
        raise RuntimeError(f"referee bundle required: {root} has no test matrices "
                           "(participant bundles cannot be scored)")
    sub = ingest(args.manifest)
    if args.ledger:
        entry = score_and_record(sub, bundle, args.ledger, workers=args.workers)
        report, doc = entry.report, entry.to_dict()
    else:
        report = evaluate_submission(bundle, sub.predictions, dataset=sub.dataset, method=sub.method,
                                     workers=args.workers)
        doc = report.to_dict()
    _emit(args, doc, _score_text(report))
    return EXIT_OK


def cmd_board(args):
    rows = leaderboard(read_ledger(args.ledger), args.dataset, view=args.view)
    if args.json:
        sys.stdout.write(leaderboard_json(rows, args.dataset, args.view))
    else:
        sys.stdout.write(render_table(rows))
    return EXIT_OK


def cmd_serve(args):
    from .server import RefereeService, make_server

    bundles = args.bundles or os.environ.get("CTF_DATA_DIR")
    if not bundles:
        raise UsageError("--bundles is required when CTF_DATA_DIR is unset")
    service = RefereeService(args.ledger, bundles, args.inbox, workers=args.workers)
    server = make_server(service, args.host, args.port)
    host, port = server.server_address[:2]
    log.info("serving on http://%s:%d", host, port)
    if args.json:
        sys.stdout.write(_jsonfmt.dumps({"host": host, "port": port}) + "\n")
        sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="print one JSON document to stdout")
    common.add_argument("--workers", type=int, default=1, help="parallel workers (default 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="ctf", description="Wavefield forecasting benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic referee bundle")
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--public", help="also write a participant bundle (no test data) here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("split", parents=[common], help="cut a bundle from source trajectories")
    p.add_argument("--source", required=True, help="CTFW or CSV matrix (rows = time)")
    p.add_argument("--family", required=True, nargs=5, metavar="TRAJ",
                   help="parametric trajectories: 3 training, interpolation, extrapolation")
    p.add_argument("--config", required=True, help=f"one of {sorted(CONFIGS)} or a dataset JSON file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="reseed the noise of X2/X3/X5train")
    p.add_argument("--public")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("baseline", parents=[common], help="run a baseline and write a submission")
    p.add_argument("--method", required=True)
    p.add_argument("--bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="YAML with 'params' and per-prediction 'tasks' overrides")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("tune", parents=[common], help="random search with successive halving")
    p.add_argument("--method", required=True)
    p.add_argument("--bundle")
    p.add_argument("--task", required=True)
    p.add_argument("--space", help="search-space YAML or builtin name (default: the method's)")
    p.add_argument("--trials", type=int, default=32)
    p.add_argument("--rungs", type=int, default=1)
    p.add_argument("--keep-fraction", type=float, default=0.5)
    p.add_argument("--max-seconds", type=float, default=600.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("score", parents=[common], help="score a submission against a referee bundle")
    p.add_argument("--bundle")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ledger", help="append the result to this ledger")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("board", parents=[common], help="render the leaderboard")
    p.add_argument("--ledger", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--view", choices=("best", "latest"), default="best")
    p.set_defaults(func=cmd_board)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP referee")
    p.add_argument("--ledger", required=True)
    p.add_argument("--bundles", help="directory holding one referee bundle per dataset")
    p.add_argument("--inbox", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    # rank truncation and similar notices are routine during tuning
    logging.captureWarnings(True)
    logging.getLogger("py.warnings").setLevel(logging.INFO if args.verbose else logging.ERROR)
    if args.workers < 1:
        print("ctf: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ctf {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError, RuntimeError, ArithmeticError) as exc:
        print(f"ctf {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
