"""Command-line pipeline: preprocess, decompose, features, evaluate, pipeline.

Exit codes: 0 success, 1 usage error (bad flags, bad config, bad model
spec), 2 data error (missing/malformed input, unlabeled recordings, too few
windows).  Every stage writes plain CSV/JSON artifacts so intermediate
results can be inspected or re-fed to later stages.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import classify, dlfeatures, ingest, peaks
from .classify import ModelSpec
from .decompose import Decomposition, decompose
from .preprocess import preprocess_recording
from .trace import LabeledWindow, Recording

DEFAULT_MODEL_SPECS = ("knn:k=1", "gaussian_nb", "random_forest:max_depth=5", "linear_svm")


class UsageError(Exception):
    """Command line or config problem; maps to exit code 1."""


class DataError(Exception):
    """Input data problem; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path: str | None) -> ingest.PipelineConfig:
    if path is None:
        return ingest.PipelineConfig()
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {p}")
    try:
        return ingest.load_config(p)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad config {p}: {exc}") from exc


def _load_recording(path: str) -> Recording:
    p = Path(path)
    if not p.exists():
        raise DataError(f"input file not found: {p}")
    try:
        return ingest.parse_recording_csv(p)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def parse_model_specs(items: list[str]) -> list[ModelSpec]:
    """Expand spec strings like ``knn:k=1..10`` into ModelSpec lists.

    Grammar: ``kind[:param=value,...]`` where an integer param accepts
    ``lo..hi`` to enumerate a range.  Multiple ranged params expand as a
    cartesian product.
    """
    param_names = {
        "k": ("k", int),
        "max_depth": ("max_depth", int),
        "n_trees": ("n_trees", int),
        "lambda": ("svm_lambda", float),
        "epochs": ("svm_epochs", int),
        "standardize": ("standardize", bool),
    }
    specs: list[ModelSpec] = []
    for item in items:
        kind, _, params_part = item.partition(":")
        kind = kind.strip()
        combos: list[dict] = [{}]
        if params_part:
            for part in params_part.split(","):
                name, eq, raw = part.partition("=")
                name = name.strip()
                raw = raw.strip()
                if not eq or name not in param_names:
                    raise UsageError(f"bad model spec {item!r}: unknown parameter {name!r}")
                field, parser = param_names[name]
                try:
                    if parser is int and ".." in raw:
                        lo, hi = raw.split("..", 1)
                        values = list(range(int(lo), int(hi) + 1))
                    elif parser is bool:
                        values = [{"true": True, "false": False}[raw.lower()]]
                    else:
                        values = [parser(raw)]
                except (ValueError, KeyError):
                    raise UsageError(f"bad model spec {item!r}: cannot parse {raw!r}") from None
                if not values:
                    raise UsageError(f"bad model spec {item!r}: empty range {raw!r}")
                combos = [c | {field: v} for c in combos for v in values]
        for combo in combos:
            try:
                specs.append(ModelSpec(kind=kind, **combo))
            except ValueError as exc:
                raise UsageError(f"bad model spec {item!r}: {exc}") from exc
    return specs


def _preprocess_recording(path: str, cfg: ingest.PipelineConfig) -> Recording:
    return preprocess_recording(_load_recording(path), cfg)


def _decompose_trace(rec: Recording, cfg: ingest.PipelineConfig) -> Decomposition:
    dec = decompose(rec.trace, cfg.decomposition)
    if not dec.converged:
        print(
            f"warning: decomposition of {rec.id!r} did not converge "
            f"(status {dec.solver_status})",
            file=sys.stderr,
        )
    return dec


def _window_features(rec: Recording, dec: Decomposition, cfg: ingest.PipelineConfig):
    """Labeled windows, their statistical features, and the full peak list."""
    filtered = peaks.lowpass_phasic(dec.phasic, cfg.peaks)
    windows = peaks.detect_response_windows(filtered, cfg.peaks)
    peak_list = peaks.extract_peaks(windows, rec.trace, cfg.peaks)
    try:
        labeled = ingest.segment_windows(rec, cfg.window_s, cfg.stride_s)
    except ValueError as exc:
        raise DataError(f"windows require labels: {exc}") from exc
    stats = [peaks.statistical_features(rec.trace, peak_list, w) for w in labeled]
    return labeled, stats, peak_list


def _window_matrix(rec: Recording, labeled: list[LabeledWindow]) -> np.ndarray:
    return np.stack([rec.trace.samples[a:b] for a, b in (w.sample_range for w in labeled)])


def _write_peaks_csv(path: str, peak_list: list[peaks.Peak]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "amplitude", "onset_s", "offset_s"])
        for p in peak_list:
            writer.writerow(
                [repr(p.time_s), repr(p.amplitude), repr(p.window.onset_s), repr(p.window.offset_s)]
            )


def _deep_features(
    model_path: str,
    windows: np.ndarray,
    labels: np.ndarray,
    cfg: ingest.PipelineConfig,
) -> np.ndarray:
    """Embed windows with the model file, training and saving it first if absent."""
    path = Path(model_path)
    input_length = windows.shape[1]
    if path.exists():
        params = dlfeatures.load_params(path)
        if params.input_length != input_length:
            raise DataError(
                f"model {path} expects {params.input_length}-sample windows, "
                f"these recordings produce {input_length}"
            )
    else:
        if np.unique(labels).size < 2:
            raise DataError(
                "cannot train a feature extractor: windows cover a single class "
                f"(and no model file exists at {path})"
            )
        seeds = classify.spawn_seeds(cfg.seed, 2)
        params = dlfeatures.init_cnn(dlfeatures.CnnArchitecture(), input_length, seed=seeds[0])
        params, _ = dlfeatures.train(
            params, windows, labels, replace(cfg.training, seed=seeds[1])
        )
        dlfeatures.save_params(path, params)
        print(f"trained feature extractor written to {path}")
    return dlfeatures.extract_features(params, windows)


def _metrics_document(reports: list[classify.CvReport], seed: int) -> dict:
    return {
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "reports": [r.to_dict() for r in reports],
    }


def _summary_table(reports: list[classify.CvReport]) -> str:
    width = max(len("model"), *(len(r.spec.describe()) for r in reports))
    header = f"{'model':<{width}} {'features':<12} {'mean':>7} {'std':>7}"
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(
            f"{r.spec.describe():<{width}} {r.feature_set:<12} {r.mean:>7.4f} {r.std:>7.4f}"
        )
    return "\n".join(lines)


def _cmd_preprocess(args) -> None:
    cfg = _load_config(args.config)
    rec = _preprocess_recording(args.in_path, cfg)
    ingest.write_recording_csv(args.out, rec)
    print(f"wrote {len(rec.trace)} samples at {rec.trace.fs:g} Hz to {args.out}")


def _cmd_decompose(args) -> None:
    cfg = _load_config(args.config)
    rec = _preprocess_recording(args.in_path, cfg)
    dec = _decompose_trace(rec, cfg)
    ingest.write_decomposition_csv(args.out, rec.trace, dec)
    print(f"wrote decomposition ({dec.solver_status}, {dec.iterations} iterations) to {args.out}")


def _cmd_features(args) -> None:
    if args.dl and not args.model:
        raise UsageError("--dl requires --model <file>")
    cfg = _load_config(args.config)
    rec = _preprocess_recording(args.in_path, cfg)
    if rec.labels is None:
        raise DataError("windows require labels: recording has no label column")
    dec = _decompose_trace(rec, cfg)
    labeled, stats, peak_list = _window_features(rec, dec, cfg)
    if args.peaks_csv:
        _write_peaks_csv(args.peaks_csv, peak_list)
    deep = None
    if args.dl:
        if not labeled:
            raise DataError("no label-pure windows to featurize")
        matrix = _window_matrix(rec, labeled)
        labels = np.array([w.label for w in labeled])
        deep = _deep_features(args.model, matrix, labels, cfg)
    ingest.write_features_csv(args.out, labeled, stats, deep)
    print(f"wrote {len(labeled)} windows ({len(peak_list)} peaks detected) to {args.out}")


def _cmd_evaluate(args) -> None:
    specs = parse_model_specs(args.models)
    try:
        table = ingest.read_features_csv(args.features)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if table.n_windows < 10:
        raise DataError(f"need at least 10 windows for 10-fold CV, got {table.n_windows}")
    reports = []
    for spec in specs:
        reports.append(
            classify.cross_validate(
                spec, table.statistical, table.y, folds=10, seed=args.seed
            )
        )
        if table.deep is not None:
            reports.append(
                classify.cross_validate(
                    spec, table.deep, table.y, folds=10, seed=args.seed, feature_set="deep"
                )
            )
    Path(args.out).write_text(
        json.dumps(_metrics_document(reports, args.seed), indent=2, sort_keys=True) + "\n"
    )
    print(_summary_table(reports))


def _cmd_pipeline(args) -> None:
    cfg = _load_config(args.config)
    specs = parse_model_specs(args.models or list(DEFAULT_MODEL_SPECS))
    out_dir = Path(args.out_dir)
    if out_dir.exists() and not args.force:
        raise UsageError(f"refusing to overwrite existing directory {out_dir} (use --force)")
    out_dir.mkdir(parents=True, exist_ok=True)

    all_windows: list[LabeledWindow] = []
    all_stats: list[peaks.StatFeatures] = []
    matrices: list[np.ndarray] = []
    for path in args.in_paths:
        rec = _preprocess_recording(path, cfg)
        if rec.labels is None:
            raise DataError(f"windows require labels: {rec.id} has no label column")
        ingest.write_recording_csv(out_dir / f"preprocessed_{rec.id}.csv", rec)
        dec = _decompose_trace(rec, cfg)
        ingest.write_decomposition_csv(out_dir / f"decomposition_{rec.id}.csv", rec.trace, dec)
        labeled, stats, _ = _window_features(rec, dec, cfg)
        ingest.write_features_csv(out_dir / f"features_{rec.id}.csv", labeled, stats)
        all_windows.extend(labeled)
        all_stats.extend(stats)
        if labeled:
            matrices.append(_window_matrix(rec, labeled))

    n = len(all_windows)
    if n < cfg.folds:
        raise DataError(f"need at least {cfg.folds} label-pure windows, got {n}")
    lengths = {m.shape[1] for m in matrices}
    if len(lengths) != 1:
        raise DataError(f"window lengths differ across recordings: {sorted(lengths)}")
    X_stat = np.array([[s.num_peaks, s.mean_gsr, s.max_peak_amp] for s in all_stats])
    y = np.array([w.label for w in all_windows])
    window_matrix = np.concatenate(matrices, axis=0)

    reports = []
    for spec in specs:
        reports.append(
            classify.cross_validate(spec, X_stat, y, folds=cfg.folds, seed=cfg.seed)
        )
        reports.append(
            classify.cross_validate_deep(
                spec, window_matrix, y, folds=cfg.folds, seed=cfg.seed, train_cfg=cfg.training
            )
        )
    metrics_path = out_dir / "metrics.json"
    metrics_path.write_text(
        json.dumps(_metrics_document(reports, cfg.seed), indent=2, sort_keys=True) + "\n"
    )
    print(_summary_table(reports))
    print(f"artifacts in {out_dir}")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="gsrpipe",
        description="Skin-conductance stress analysis: conditioning, sparse "
        "decomposition, peak features, learned features, and cross-validated "
        "classification.",
        epilog="config file keys (key = value per line):\n" + ingest.config_key_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="downsample, smooth, and normalize a recording")
    p.add_argument("--in", dest="in_path", required=True, metavar="CSV")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--config", metavar="FILE")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("decompose", help="split a recording into phasic/tonic/driver/residual")
    p.add_argument("--in", dest="in_path", required=True, metavar="CSV")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--config", metavar="FILE")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("features", help="per-window statistical (and learned) features")
    p.add_argument("--in", dest="in_path", required=True, metavar="CSV")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--dl", action="store_true", help="append learned feature columns")
    p.add_argument("--model", metavar="FILE", help="trained extractor .npz (trained here if absent)")
    p.add_argument("--peaks-csv", dest="peaks_csv", metavar="FILE")
    p.add_argument("--config", metavar="FILE")
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("evaluate", help="cross-validate model specs on feature CSVs")
    p.add_argument("--features", nargs="+", required=True, metavar="CSV")
    p.add_argument(
        "--models",
        nargs="+",
        required=True,
        metavar="SPEC",
        help="e.g. knn:k=1..10 gaussian_nb random_forest:max_depth=5 linear_svm",
    )
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, metavar="JSON")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pipeline", help="run every stage and write all artifacts")
    p.add_argument("--in", dest="in_paths", nargs="+", required=True, metavar="CSV")
    p.add_argument("--out-dir", dest="out_dir", required=True, metavar="DIR")
    p.add_argument("--models", nargs="+", metavar="SPEC")
    p.add_argument("--force", action="store_true", help="allow writing into an existing directory")
    p.add_argument("--config", metavar="FILE")
    p.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
