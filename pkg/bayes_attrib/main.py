#!/usr/bin/env python3
"""
Bayes Attrib Command Line
Train, explain, verify, compare, global importance and benchmark commands with JSON/CSV reports
"""

import argparse
import logging
import sys
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .config import get_settings
from .exceptions import (
    AttributionError,
    DataFormatError,
    FitError,
    ModelFormatError,
    UsageError,
    VerificationError,
    ZeroSumAttributionError,
)
from .models.schemas import RunConfig, SamplingConfig
from .services.agreement import compare_methods
from .services.benchmark import BenchmarkRunner, linear_slope_ratio, write_bench_csv
from .services.data_loader import DatasetLoader, parse_missing_markers
from .services.explainer import AttributionExplainer, canonical_method, normalize
from .services.naive_bayes import NaiveBayesModel, NaiveBayesTrainer, load_model, load_weights_file, save_model
from .services.oracle import shapley_bruteforce
from .services.preprocessor import PartDataset, PartitionFitter
from .services.storage import atomic_write_text, dump_json, write_json

logger = logging.getLogger(__name__)

# first match wins, so subclasses come before their bases
EXIT_CODES: List[Tuple[type, int]] = [
    (VerificationError, 2),
    (DataFormatError, 3),
    (ModelFormatError, 3),
    (UsageError, 1),
    (FitError, 1),
    (AttributionError, 1),
]


def exit_code_for(error: Exception) -> int:
    for kind, code in EXIT_CODES:
        if isinstance(error, kind):
            return code
    if isinstance(error, OSError):
        return 3
    return 1


class _ArgumentParser(argparse.ArgumentParser):
    """Argument errors become usage errors (exit 1) instead of argparse's exit 2"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _csv_list(cast):
    def parse(text: str):
        try:
            return [cast(item) for item in text.split(",") if item.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid comma-separated list '{text}'")

    return parse


def _value_fn(text: str) -> str:
    mapped = {"logodds": "log_odds", "log_odds": "log_odds", "posterior": "posterior"}.get(text)
    if mapped is None:
        raise argparse.ArgumentTypeError(f"invalid value function '{text}' (posterior or logodds)")
    return mapped


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="bayes_attrib", description="Exact Shapley explanations for naive Bayes")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    common = _ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="Debug logging")
    common.add_argument("--missing", type=parse_missing_markers, help="Comma-separated missing-value markers")

    explaining = _ArgumentParser(add_help=False)
    explaining.add_argument("--model", required=True)
    explaining.add_argument("--data", required=True)
    explaining.add_argument("--class", dest="class_label", help="Positive class label")
    explaining.add_argument("--against", help="Negative class label or 'rest'")
    explaining.add_argument("--value-fn", dest="value_fn", type=_value_fn, default="posterior")
    explaining.add_argument("--background", choices=["marginal", "knowledge"], default="marginal")
    explaining.add_argument("--knowledge-rows", dest="knowledge_rows", type=int, default=100)
    explaining.add_argument("--budget", type=int, default=200, help="Permutations for the sampling estimator")
    explaining.add_argument("--seed", type=int)
    explaining.add_argument("--threads", type=int)

    train = commands.add_parser("train", parents=[common], help="Fit partitions and a naive Bayes model")
    train.add_argument("--data", required=True)
    train.add_argument("--target", required=True)
    train.add_argument("--out", required=True)
    train.add_argument("--columns", type=_csv_list(str), help="Feature columns to keep")
    train.add_argument("--bins", type=int, default=10)
    train.add_argument("--max-groups", dest="max_groups", type=int, default=10)
    train.add_argument("--strict", action="store_true", help="No fallback group unless pooling happened")
    train.add_argument("--smoothing", type=float, default=0.5)
    train.add_argument("--marginal", choices=["empirical", "mixture"], default="empirical")
    train.add_argument("--weights", help="JSON file mapping variable names to weights")

    explain = commands.add_parser("explain", parents=[common, explaining], help="Per-row attributions")
    explain.add_argument("--method", default="shapley")
    explain.add_argument("--out", required=True)
    explain.add_argument("--csv")
    explain.add_argument("--normalize", action="store_true")
    explain.add_argument("--near-proba", dest="near_proba", type=_csv_list(float))

    verify = commands.add_parser("verify", parents=[common, explaining], help="Analytic vs brute-force check")
    verify.add_argument("--rows", type=int, default=20)
    verify.add_argument("--tol", type=float, default=1e-9)
    verify.add_argument("--out")

    compare = commands.add_parser("compare", parents=[common, explaining], help="Agreement between two methods")
    compare.add_argument("--a", "--method", dest="method", default="shapley")
    compare.add_argument("--b", dest="method_b", required=True)
    compare.add_argument("--out", required=True)

    global_ = commands.add_parser("global", parents=[common, explaining], help="Global importances")
    global_.add_argument("--method", default="shapley")
    global_.add_argument("--out", required=True)
    global_.add_argument("--csv")

    bench = commands.add_parser("bench", parents=[common], help="Timing runs on synthetic data")
    bench.add_argument("--rows", dest="bench_rows", type=int, default=50_000)
    bench.add_argument("--d", dest="bench_d", type=_csv_list(int), default=[10, 20, 40, 80])
    bench.add_argument("--p", dest="bench_p", type=int, default=5)
    bench.add_argument("--budgets", dest="bench_budgets", type=_csv_list(int), default=[50, 100, 200])
    bench.add_argument("--sampling-rows", dest="sampling_rows", type=int, default=20)
    bench.add_argument("--knowledge-rows", dest="knowledge_rows", type=int, default=100)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--threads", type=int)
    bench.add_argument("--out", required=True)
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> Tuple[RunConfig, bool]:
    """Parse arguments into a validated RunConfig plus the verbose flag"""
    args = vars(build_parser().parse_args(argv))
    verbose = bool(args.pop("verbose", False))
    settings = get_settings()
    if args.get("seed") is None:
        args["seed"] = settings.seed
    if args.get("threads") is None:
        args["threads"] = settings.threads
    if args.get("missing") is None:
        args.pop("missing", None)
    try:
        return RunConfig(**{k: v for k, v in args.items() if v is not None}), verbose
    except ValidationError as e:
        raise UsageError(f"Invalid arguments: {str(e)}")


def configure_logging(verbose: bool) -> None:
    level = "DEBUG" if verbose else get_settings().log_level
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def _timestamped(document: Dict[str, Any]) -> Dict[str, Any]:
    return {**document, "generated_at": datetime.now().isoformat()}


def _resolve_classes(model: NaiveBayesModel, config: RunConfig, multiclass: bool = False) -> Tuple[Optional[int], Optional[int]]:
    """Positive and negative class indices from --class / --against (None means the pooled rest)"""
    schema = model.schema
    try:
        if config.class_label is None:
            if multiclass:
                return None, None
            if model.n_classes != 2:
                raise UsageError(f"--class is required with {model.n_classes} classes; valid labels: {schema.class_labels}")
            pos = 1
        else:
            pos = schema.class_index(config.class_label)
        if config.against is None:
            neg = 1 - pos if model.n_classes == 2 else None
        elif config.against == "rest":
            neg = None
        else:
            neg = schema.class_index(config.against)
    except ValueError as e:
        raise UsageError(f"--class/--against: {str(e)}")
    if neg == pos:
        raise UsageError(f"--against must differ from --class ('{config.class_label}')")
    return pos, neg


def _label(model: NaiveBayesModel, k: Optional[int]) -> Optional[str]:
    return None if k is None else model.class_labels[k]


def _load_parts(config: RunConfig, model: NaiveBayesModel) -> PartDataset:
    loader = DatasetLoader(config.missing)
    dataset = loader.load_csv(config.data, model.schema, require_target=False, allow_extra=True)
    return model.preprocessor.encode(dataset)


def _sampling_config(config: RunConfig) -> SamplingConfig:
    try:
        return SamplingConfig(
            n_permutations=config.budget,
            seed=config.seed,
            value_fn=config.value_fn,
            background=config.background,
            knowledge_rows=config.knowledge_rows,
        )
    except ValidationError as e:
        raise UsageError(f"Invalid sampling configuration: {str(e)}")


def run_train(config: RunConfig) -> None:
    loader = DatasetLoader(config.missing)
    schema = loader.infer_schema(config.data, config.target)
    if config.columns:
        try:
            schema = schema.restrict(config.columns)
        except ValueError as e:
            raise UsageError(f"--columns: {str(e)}")
    dataset = loader.load_csv(config.data, schema, allow_extra=True)
    prep = PartitionFitter(config.bins, config.max_groups, config.strict).fit(dataset)
    weights = load_weights_file(config.weights) if config.weights else "uniform"
    model = NaiveBayesTrainer(config.smoothing, config.marginal).fit(prep.encode(dataset), prep, weights)
    save_model(model, config.out)


def run_explain(config: RunConfig) -> None:
    model = load_model(config.model)
    method = canonical_method(config.method)
    pos, neg = _resolve_classes(model, config, multiclass=method == "shapley_multiclass")
    parts = _load_parts(config, model).parts
    explainer = AttributionExplainer(model, n_jobs=config.threads)
    sampling = _sampling_config(config) if method == "sampling" else None

    indices = list(range(len(parts)))
    if config.near_proba:
        if len(parts) == 0:
            raise UsageError("--near-proba needs at least one data row")
        indices = explainer.select_by_probability(parts, 1 if pos is None else pos, config.near_proba)
    selected = parts[indices]

    matrix = explainer.explain_all(selected, method, pos, neg, sampling, parts)
    proba = model.predict_proba_batch(selected) if len(selected) else np.zeros((0, model.n_classes))
    rows = []
    for i, index in enumerate(indices):
        row: Dict[str, Any] = {"index": int(index), "values": matrix[i].tolist(), "prediction": proba[i].tolist()}
        if config.normalize:
            try:
                row["normalized"] = normalize(matrix[i])
            except ZeroSumAttributionError:
                row["normalized"] = None
        if method == "shapley_multiclass":
            row["per_class"] = explainer.shapley_multiclass(selected[i]).per_class
        rows.append(row)

    document = {
        "method": method,
        "pos_class": _label(model, pos),
        "neg_class": "rest" if neg is None and method != "shapley_multiclass" else _label(model, neg),
        "class_labels": model.class_labels,
        "variables": model.feature_names,
        "rows": rows,
        "global": np.abs(matrix).mean(axis=0).tolist() if len(rows) else None,
    }
    if method != "shapley_multiclass":
        document["efficiency_constant"] = explainer.efficiency_constant(pos, neg)
    if config.near_proba:
        document["near_proba"] = list(config.near_proba)
    if sampling is not None:
        document["sampling"] = sampling.model_dump()
    write_json(config.out, _timestamped(document))
    logger.info(f"Wrote {len(rows)} {method} explanations to {config.out}")

    if config.csv:
        frame = pd.DataFrame(matrix, columns=model.feature_names)
        frame.insert(0, "index", indices)
        atomic_write_text(config.csv, frame.to_csv(index=False, lineterminator="\n"))


def run_verify(config: RunConfig) -> None:
    model = load_model(config.model)
    pos, neg = _resolve_classes(model, config)
    parts = _load_parts(config, model).parts
    if len(parts) == 0:
        raise DataFormatError(f"No data rows in {config.data}")

    rng = np.random.default_rng(config.seed)
    chosen = np.sort(rng.choice(len(parts), size=min(config.rows, len(parts)), replace=False))
    explainer = AttributionExplainer(model)
    deviations = []
    for index in chosen:
        analytic = np.asarray(explainer.shapley_analytic(parts[index], pos, neg).values)
        exhaustive = np.asarray(shapley_bruteforce(model, parts[index], pos, neg).values)
        deviations.append(float(np.max(np.abs(analytic - exhaustive))) if analytic.size else 0.0)

    max_deviation = max(deviations)
    document = {
        "rows": [int(i) for i in chosen],
        "deviations": deviations,
        "max_deviation": max_deviation,
        "tol": config.tol,
        "passed": max_deviation <= config.tol,
        "pos_class": _label(model, pos),
        "neg_class": "rest" if neg is None else _label(model, neg),
        "n_variables": model.n_features,
    }
    if config.out:
        write_json(config.out, _timestamped(document))
    else:
        sys.stdout.write(dump_json(_timestamped(document)))
    logger.info(f"Verified {len(chosen)} rows: max deviation {max_deviation:.3e} (tol {config.tol:g})")
    if max_deviation > config.tol:
        raise VerificationError(
            f"Analytic and brute-force Shapley values differ by {max_deviation:.3e} > --tol {config.tol:g}"
        )


def run_compare(config: RunConfig) -> None:
    model = load_model(config.model)
    pos, neg = _resolve_classes(model, config)
    parts = _load_parts(config, model).parts
    uses_sampling = "sampling" in (canonical_method(config.method), canonical_method(config.method_b))
    sampling = _sampling_config(config) if uses_sampling else None
    explainer = AttributionExplainer(model, n_jobs=config.threads)
    report = compare_methods(explainer, parts, config.method, config.method_b, pos, neg, sampling, parts)
    document = {
        **report.model_dump(),
        "pos_class": _label(model, pos),
        "neg_class": "rest" if neg is None else _label(model, neg),
        "variables": model.feature_names,
    }
    write_json(config.out, _timestamped(document))


def run_global(config: RunConfig) -> None:
    model = load_model(config.model)
    method = canonical_method(config.method)
    pos, neg = _resolve_classes(model, config, multiclass=method == "shapley_multiclass")
    parts = _load_parts(config, model).parts
    sampling = _sampling_config(config) if method == "sampling" else None
    explainer = AttributionExplainer(model, n_jobs=config.threads)
    importance = explainer.global_importance(parts, method, pos, neg, sampling, parts)
    document = {
        **importance.model_dump(),
        "variables": model.feature_names,
        "pos_class": _label(model, pos),
        "neg_class": None if method == "shapley_multiclass" else ("rest" if neg is None else _label(model, neg)),
    }
    write_json(config.out, _timestamped(document))
    if config.csv:
        frame = pd.DataFrame({"variable": model.feature_names, "importance": importance.values})
        atomic_write_text(config.csv, frame.to_csv(index=False, lineterminator="\n"))


def run_bench(config: RunConfig) -> None:
    runner = BenchmarkRunner(seed=config.seed, n_jobs=config.threads, knowledge_rows=config.knowledge_rows)
    frame = runner.run(config.bench_rows, config.bench_d, config.bench_p, config.bench_budgets, config.sampling_rows)
    write_bench_csv(frame, config.out)
    if len(config.bench_d) > 1:
        logger.info(f"Analytic seconds-per-variable spread across d: x{linear_slope_ratio(frame):.2f}")


COMMANDS = {
    "train": run_train,
    "explain": run_explain,
    "verify": run_verify,
    "compare": run_compare,
    "global": run_global,
    "bench": run_bench,
}


def run(config: RunConfig) -> int:
    """
    Dispatch one command

    Args:
        config: Validated invocation

    Returns:
        int: 0 on success, 1 usage error, 2 verification failure, 3 I/O or format error
    """
    try:
        COMMANDS[config.command](config)
        return 0
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"{config.command} failed: {str(e)}")
        if code == 1 and not isinstance(e, AttributionError):
            logger.exception("Unexpected error")
        return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config, verbose = parse_config(argv)
    except UsageError as e:
        configure_logging(False)
        logger.error(str(e))
        return 1
    configure_logging(verbose)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
