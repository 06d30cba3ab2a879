"""``plrank`` command-line interface.

Subcommands: synth, fit, train, predict, evaluate, sample. Every flag may
also be given in a JSON file passed with ``--config``; keys are the flag
names with dashes or underscores, and explicit flags win over the file.

Exit codes: 0 success, 1 invalid input, 2 I/O failure, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from collections import OrderedDict
from pathlib import Path

import numpy as np

from . import __version__
from .core import rank_from_weights
from .estimation import FitConfig, fit_mle, sample_rankings
from .io import (
    DATASET_FORMAT,
    PREDICTIONS_FORMAT,
    Dataset,
    PredictionRecord,
    Predictions,
    read_dataset,
    read_predictions,
    sniff_format,
    write_dataset,
    write_predictions,
)
from .metrics import evaluate
from .ranker import (
    TrainConfig,
    TrainingDivergedError,
    default_labels,
    forward,
    init_model,
    load_model,
    save_model,
    train,
)
from .synth import SyntheticConfig, generate_dataset, instance_key, split_by_object

logger = logging.getLogger("plrank")

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- helpers


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"missing required option(s): {flags}")


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _labels(text, n):
    if not text:
        return default_labels(n)
    names = [s.strip() for s in text.split(",")]
    if len(names) != n or len(set(names)) != n or not all(names):
        raise UsageError(f"--labels must give {n} distinct non-empty names")
    return names


def _group_references(dataset: Dataset) -> "OrderedDict[tuple, list]":
    refs: OrderedDict[tuple, list] = OrderedDict()
    for inst in dataset.instances:
        refs.setdefault(instance_key(inst), []).append(inst.ranking)
    return refs


def _predict(model, dataset: Dataset) -> Predictions:
    if dataset.input_dim != model.input_dim:
        raise UsageError(f"data has input_dim {dataset.input_dim}, model expects {model.input_dim}")
    if dataset.label_names != model.label_names:
        raise UsageError("data and model label names differ")
    first: OrderedDict[tuple, np.ndarray] = OrderedDict()
    for inst in dataset.instances:
        first.setdefault(instance_key(inst), inst.features)
    if not first:
        return Predictions(list(model.label_names), [])
    W = forward(model, np.stack(list(first.values())))
    records = [
        PredictionRecord(key[0], key[1], w, rank_from_weights(w)) for key, w in zip(first, W)
    ]
    return Predictions(list(model.label_names), records)


def _evaluate(predictions: Predictions, references: Dataset, mode: str):
    if predictions.label_names != references.label_names:
        raise UsageError("prediction and reference label names differ")
    refs = _group_references(references)
    preds, dists = OrderedDict(), OrderedDict()
    for rec in predictions.records:
        key = (rec.object_id, rec.orientation_id)
        if key in preds:
            raise UsageError(f"duplicate prediction for instance {key!r}")
        if key not in refs:
            raise UsageError(f"no reference rankings for instance {key!r}")
        preds[key] = rec.ranking
        dists[key] = rec.weights
    if not preds:
        raise UsageError("no predictions to evaluate")
    has_dists = all(d is not None for d in dists.values())
    return evaluate(preds, refs, mode=mode, distributions=dists if has_dists else None)


def _as_predictions(path) -> Predictions:
    fmt = sniff_format(path)
    if fmt == DATASET_FORMAT:
        data = read_dataset(path)
        return Predictions(
            data.label_names,
            [PredictionRecord(i.object_id, i.orientation_id, None, i.ranking) for i in data.instances],
        )
    if fmt == PREDICTIONS_FORMAT:
        return read_predictions(path)
    raise UsageError(f"{path}: not a predictions or dataset file")


# ---------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    _require(args, "out")
    fields = {
        "n_classes": args.n_classes,
        "input_dim": args.input_dim,
        "n_objects": args.n_objects,
        "orientations_per_object": args.orientations,
        "n_labellers": args.n_labellers,
        "labeller_coverage": args.coverage,
        "labeller_bias_scale": args.bias_scale,
        "feature_noise": args.feature_noise,
        "orientation_scale": args.orientation_scale,
        "signal_scale": args.signal_scale,
        "complexity_spread": args.complexity_spread,
        "seed": args.seed,
    }
    fields = {k: v for k, v in fields.items() if v is not None}
    if args.low_noise:
        fields.setdefault("labeller_temperature_range", (1.0, 1.0))
        fields.setdefault("labeller_bias_scale", 0.0)
    if args.temperature_range is not None:
        fields["labeller_temperature_range"] = tuple(args.temperature_range)
    config = SyntheticConfig(**fields)
    names = _labels(args.labels, config.n_classes)
    data, truth = generate_dataset(config)

    out = Path(args.out)
    write_dataset(out, Dataset(names, config.input_dim, data))
    truth_path = out.with_name(out.name + ".truth.json")
    sidecar = {"config": config.to_dict(), "label_names": names, **truth.to_dict()}
    truth_path.write_text(json.dumps(sidecar, indent=1) + "\n", encoding="utf-8")
    report = [f"records: {len(data)}", f"dataset: {out}", f"truth: {truth_path}"]

    if args.split is not None:
        train_part, test_part = split_by_object(data, args.split, config.seed)
        stem, suffix = out.stem, out.suffix
        for tag, part in (("train", train_part), ("test", test_part)):
            path = out.with_name(f"{stem}.{tag}{suffix}")
            write_dataset(path, Dataset(names, config.input_dim, part))
            report.append(f"{tag}: {path} ({len(part)} records)")
    if not args.quiet:
        _emit(args, "\n".join(report) + "\n")
    return EXIT_OK


def cmd_fit(args) -> int:
    _require(args, "data")
    data = read_dataset(args.data)
    if not data.instances:
        raise UsageError(f"{args.data}: no rankings")
    config = FitConfig(
        method=args.method,
        max_iters=args.max_iters,
        tolerance=args.tolerance,
        smoothing=args.smoothing,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )
    result = fit_mle(np.stack([inst.ranking for inst in data.instances]), config)
    if not np.all(np.isfinite(result.weights)) or not math.isfinite(result.final_log_likelihood):
        raise FloatingPointError("fit produced non-finite values")
    width = max(len(n) for n in data.label_names)
    lines = [f"{data.label_names[i]:<{width}}  {float(result.weights[i])!r}" for i in rank_from_weights(result.weights)]
    lines += [
        f"log_likelihood: {result.final_log_likelihood!r}",
        f"iterations: {result.iterations}",
        f"converged: {str(result.converged).lower()}",
    ]
    if not result.converged:
        logger.warning("fit did not converge")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_train(args) -> int:
    _require(args, "train", "model_out")
    data = read_dataset(args.train)
    if not data.instances:
        raise UsageError(f"{args.train}: no training records")
    test = read_dataset(args.test) if args.test else None
    if test is not None and (test.input_dim != data.input_dim or test.label_names != data.label_names):
        raise UsageError("train and test files disagree on input_dim or label names")
    config = TrainConfig(
        learning_rate=args.lr,
        l2_lambda=args.l2,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        init_scale=args.init_scale,
    )
    model = init_model(
        args.arch,
        data.input_dim,
        data.n_classes,
        hidden_dim=args.hidden_dim,
        seed=args.seed,
        init_scale=config.init_scale,
        label_names=data.label_names,
    )
    model, history = train(model, data.instances, config)
    save_model(model, args.model_out)
    lines = [f"final_train_loss: {history.loss[-1]!r}"]
    if test is not None:
        report = _evaluate(_predict(model, test), test, "pair")
        lines.append(f"test_mean_overlap_accuracy: {report.mean_overlap_accuracy!r}")
        lines.append(f"test_pairs: {report.n_pairs}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_predict(args) -> int:
    _require(args, "model", "data")
    model = load_model(args.model)
    preds = _predict(model, read_dataset(args.data))
    if args.output:
        write_predictions(args.output, preds)
    else:
        write_predictions(sys.stdout, preds)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _require(args, "predictions", "references")
    report = _evaluate(_as_predictions(args.predictions), read_dataset(args.references), args.mode)
    if args.json:
        text = json.dumps({"mode": report.mode, **report.as_dict()}, indent=1) + "\n"
    else:
        text = report.to_text()
    _emit(args, text)
    return EXIT_OK


def cmd_sample(args) -> int:
    _require(args, "weights")
    try:
        parts = args.weights if isinstance(args.weights, list) else str(args.weights).split(",")
        raw = np.array([float(v) for v in parts])
    except ValueError:
        raise UsageError(f"--weights must be comma-separated numbers, got {args.weights!r}") from None
    if raw.size == 0 or not np.all(np.isfinite(raw)) or np.any(raw <= 0):
        raise UsageError("--weights entries must be finite and strictly positive")
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    weights = raw / raw.sum()
    names = _labels(args.labels, weights.size)
    rankings = sample_rankings(weights, args.count, np.random.default_rng(args.seed))
    if args.format == "dataset":
        from .synth import LabelledInstance

        width = len(str(max(args.count - 1, 0)))
        insts = [
            LabelledInstance("sample", "0", f"s{k:0{width}d}", np.zeros(0), r) for k, r in enumerate(rankings)
        ]
        if args.output:
            write_dataset(args.output, Dataset(names, 0, insts))
        else:
            write_dataset(sys.stdout, Dataset(names, 0, insts))
        return EXIT_OK
    _emit(args, "".join(",".join(names[i] for i in r) + "\n" for r in rankings))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--quiet", action="store_true", help="suppress informational messages")
    common.add_argument("--output", help="write the main output here instead of stdout")
    common.add_argument("--config", help="JSON file of flag values; explicit flags override it")

    parser = _Parser(prog="plrank", description="Plackett-Luce estimation from ranking labels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic labelled dataset")
    p.add_argument("--out", help="dataset file to write (ground truth goes to OUT.truth.json)")
    p.add_argument("--n-classes", type=int)
    p.add_argument("--input-dim", type=int)
    p.add_argument("--n-objects", type=int)
    p.add_argument("--orientations", type=int, help="orientations per object")
    p.add_argument("--n-labellers", type=int)
    p.add_argument("--coverage", type=float, help="probability a labeller labels an instance")
    p.add_argument("--temperature-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--bias-scale", type=float)
    p.add_argument("--feature-noise", type=float)
    p.add_argument("--orientation-scale", type=float)
    p.add_argument("--signal-scale", type=float)
    p.add_argument("--complexity-spread", type=float)
    p.add_argument("--low-noise", action="store_true", help="unit temperatures and zero labeller bias")
    p.add_argument("--labels", help="comma-separated class names")
    p.add_argument("--split", type=float, metavar="FRACTION", help="also write object-level train/test files")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", parents=[common], help="fit one PL distribution to the rankings in a file")
    p.add_argument("--data")
    p.add_argument("--method", choices=["mm", "gradient"], default="mm")
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--smoothing", type=float, default=1e-6)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("train", parents=[common], help="train a feature-conditioned ranker")
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--arch", choices=["linear", "mlp1"], default="linear")
    p.add_argument("--hidden-dim", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--l2", type=float, default=0.002)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--init-scale", type=float, default=0.01)
    p.add_argument("--model-out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="predict distributions and rankings")
    p.add_argument("--model")
    p.add_argument("--data")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="average-overlap evaluation against references")
    p.add_argument("--predictions")
    p.add_argument("--references")
    p.add_argument("--mode", choices=["pair", "instance"], default="pair")
    p.add_argument("--json", action="store_true", help="emit the report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sample", parents=[common], help="sample rankings from given weights")
    p.add_argument("--weights", help="comma-separated positive weights (normalized to sum 1)")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--labels", help="comma-separated class names")
    p.add_argument("--format", choices=["names", "dataset"], default="names")
    p.set_defaults(func=cmd_sample)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from the ``--config`` JSON file."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            values = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.config}: invalid JSON ({exc})") from None
    if not isinstance(values, dict):
        raise UsageError(f"{args.config}: expected a JSON object")
    values = {k.replace("-", "_"): v for k, v in values.items()}
    known = set(vars(args)) - {"func", "command", "config"}
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"{args.config}: unknown option(s) for {args.command}: {', '.join(sorted(unknown))}")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    subparser.set_defaults(**values)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(
            level=logging.ERROR if args.quiet else logging.INFO,
            format="plrank: %(levelname)s: %(message)s",
            stream=sys.stderr,
        )
        return args.func(args)
    except FloatingPointError as exc:
        print(f"plrank: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"plrank: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"plrank: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
