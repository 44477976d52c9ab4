"""``noiselab`` command-line entry point.

Exit codes: 0 success, 2 validation error, 3 runtime or convergence error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, config_from_dict
from .features import FeatureError
from .ml import ConvergenceError, SchemaError
from .pipeline import (
    CORPUS_NAMES,
    DATASET,
    StageError,
    cmd_evaluate,
    cmd_featurize,
    cmd_pipeline,
    cmd_simulate,
    cmd_train,
)

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("noiselab")


def _config(args):
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise ConfigError(["<root>: config must be a JSON object"])
    else:
        data = {}
    for key in ("scenario", "protocol"):
        if getattr(args, key):
            data[key] = getattr(args, key)
    if args.seed is not None:
        data["master_seed"] = args.seed
    return config_from_dict(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noiselab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="experiment config (JSON)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--scenario", choices=["channel_remote", "gate_based"])
        p.add_argument("--protocol", choices=["bb84", "bbm92"])
        return p

    add("simulate", "generate the two QBER corpora")
    p = add("featurize", "build the labelled feature dataset")
    p.add_argument("--corpus-a", help=f"default: <out>/{CORPUS_NAMES[0]}")
    p.add_argument("--corpus-b", help=f"default: <out>/{CORPUS_NAMES[1]}")
    p = add("train", "fit PCA and classifiers")
    p.add_argument("--dataset", help=f"default: <out>/{DATASET}")
    p = add("evaluate", "score trained models and write plot data")
    p.add_argument("--models", help="directory holding the trained models (default: <out>)")
    p.add_argument("--dataset", help=f"default: <out>/{DATASET}")
    add("pipeline", "run every stage")
    return parser


def run(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    if args.command == "simulate":
        for path in cmd_simulate(cfg, out):
            print(path)
    elif args.command == "featurize":
        a = args.corpus_a or out / CORPUS_NAMES[0]
        b = args.corpus_b or out / CORPUS_NAMES[1]
        for path in cmd_featurize(a, b, cfg, out).values():
            print(path)
    elif args.command == "train":
        report = cmd_train(args.dataset or out / DATASET, cfg, out)
        print(json.dumps(report["classifiers"], indent=2))
    elif args.command == "evaluate":
        metrics = cmd_evaluate(args.models or out, args.dataset or out / DATASET, cfg, out)
        print(json.dumps({k: {"train_accuracy": v["train_accuracy"], "test_accuracy": v["test_accuracy"]} for k, v in metrics.items()}, indent=2))
    else:
        report = cmd_pipeline(cfg, out)
        for name, m in report["metrics"].items():
            print(f"{name}: train {m['train_accuracy']:.4f}  test {m['test_accuracy']:.4f}")
    return EXIT_OK


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (ConfigError, SchemaError, FeatureError, json.JSONDecodeError)):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, (ConvergenceError, RuntimeError)):
        return EXIT_RUNTIME
    if isinstance(exc, (ValueError, KeyError, TypeError)):
        return EXIT_VALIDATION
    return EXIT_RUNTIME


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except Exception as exc:  # noqa: BLE001
        print(f"noiselab: error: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
