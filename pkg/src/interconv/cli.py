"""Command-line front end.

Subcommands: synth, fit, transform, train, predict, eval, export-maps,
report. Configuration is a flat UTF-8 key=value file ('#' starts a comment);
any key can be overridden on the command line with --set key=value, and
--seed/--workers are shortcuts for the keys of the same name.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure during training or evaluation.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import dataio, synth
from .core import GridShape, RealDataset, WindowSpec
from .errors import ConfigError, DataError, InterconvError, NumericError
from .metrics import write_roc_csv
from .nn import TrainingHyper
from .pgm import write_pgm
from .pipeline import (
    PipelineConfig,
    PRESETS,
    evaluate_bundle,
    fit_pipeline,
    format_report,
    geometry_chain,
    layer_maps,
    predict_bundle,
    bundle_features,
    preset_config,
    resolve_grid,
    write_fit_outputs,
)

DEFAULTS: dict[str, str] = {
    # data
    "train": "",
    "val": "",
    "images": "",
    "grid": "",
    "test_per_class": "0",
    "augment_per_class": "0",
    "noise_sd": "0.05",
    # pipeline
    "preset": "",
    "discretizer": "median",
    "layers": "",
    "rediscretizer": "median",
    "features": "last",
    "hidden": "none",
    "output_units": "2",
    # training
    "learning_rate": "0.001",
    "decay": "0.9",
    "epochs": "50",
    "batch_size": "32",
    # misc
    "seed": "0",
    "workers": "0",
    # synth
    "synth_features": "36",
    "synth_train": "500",
    "synth_test": "10000",
    "synth_modules": "1,2:0.5;3,4,5:0.5",
}


def parse_kv_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def _parse_int(raw: dict[str, str], key: str) -> int:
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw[key]!r}") from None


def _parse_float(raw: dict[str, str], key: str) -> float:
    try:
        return float(raw[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw[key]!r}") from None


def _parse_grid(text: str) -> GridShape:
    try:
        rows, cols = text.lower().split("x")
        return GridShape(int(rows), int(cols))
    except (ValueError, TypeError):
        raise ConfigError(f"grid must look like 6x6, got {text!r}") from None


def _parse_layers(text: str) -> tuple[WindowSpec, ...]:
    specs = []
    for token in text.replace(";", " ").split():
        parts = token.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"layer spec must be window:stride[:start], got {token!r}")
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise ConfigError(f"layer spec must be integers, got {token!r}") from None
        specs.append(WindowSpec(*nums))
    return tuple(specs)


def _parse_modules(text: str, n_features: int) -> tuple[tuple[tuple[int, ...], float], ...]:
    """'1,2:0.5;3,4,5:0.5' with 1-based feature indices."""
    modules = []
    for token in text.split(";"):
        token = token.strip()
        if not token:
            continue
        idx_part, _, mix_part = token.partition(":")
        if not mix_part:
            raise ConfigError(f"module spec needs indices:mix, got {token!r}")
        try:
            indices = tuple(int(i) - 1 for i in idx_part.split(","))
            mix = float(mix_part)
        except ValueError:
            raise ConfigError(f"bad module spec {token!r}") from None
        modules.append((indices, mix))
    if not modules:
        raise ConfigError("synth_modules must define at least one module")
    for indices, _ in modules:
        for j in indices:
            if not (0 <= j < n_features):
                raise ConfigError(
                    f"module index {j + 1} out of range for {n_features} features"
                )
    return tuple(modules)


def resolve_config(args: argparse.Namespace) -> dict[str, str]:
    """DEFAULTS + preset expansion + config file + --set/--seed/--workers."""
    user: dict[str, str] = {}
    if getattr(args, "config", None):
        user.update(parse_kv_file(args.config))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        user[key.strip()] = value.strip()
    if getattr(args, "seed", None) is not None:
        user["seed"] = str(args.seed)
    if getattr(args, "workers", None) is not None:
        user["workers"] = str(args.workers)

    for key in user:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")

    resolved = dict(DEFAULTS)
    preset = user.get("preset", "")
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        p = preset_config(preset)
        resolved["grid"] = f"{p.grid.rows}x{p.grid.cols}"
        resolved["layers"] = " ".join(
            f"{s.window}:{s.stride}:{s.start}" for s in p.layers
        )
        resolved["features"] = p.features_mode
        resolved["hidden"] = "none" if p.hidden is None else str(p.hidden)
    resolved.update(user)
    return resolved


def build_pipeline_config(raw: dict[str, str]) -> PipelineConfig:
    hidden = None if raw["hidden"] in ("", "none") else int(raw["hidden"])
    hyper = TrainingHyper(
        learning_rate=_parse_float(raw, "learning_rate"),
        decay=_parse_float(raw, "decay"),
        epochs=_parse_int(raw, "epochs"),
        batch_size=_parse_int(raw, "batch_size"),
        seed=_parse_int(raw, "seed"),
    )
    return PipelineConfig(
        grid=_parse_grid(raw["grid"]) if raw["grid"] else None,
        discretizer=raw["discretizer"],
        layers=_parse_layers(raw["layers"]),
        rediscretizer=raw["rediscretizer"],
        features_mode=raw["features"],
        hidden=hidden,
        output_units=_parse_int(raw, "output_units"),
        hyper=hyper,
        workers=_parse_int(raw, "workers"),
    )


def write_resolved(out_dir: Path, raw: dict[str, str], extra: dict[str, str] | None = None) -> None:
    lines = [f"{k} = {raw[k]}" for k in sorted(raw)]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {value}")
    (out_dir / "resolved.cfg").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out)


def load_table_or_images(path: str | Path) -> tuple[RealDataset, tuple[str, ...] | None]:
    """A dataset CSV, or an image corpus when the file is a path,label manifest."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            first = next(csv.reader(fh), None)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if first is not None and [c.strip().lower() for c in first] == ["path", "label"]:
        images = dataio.load_images(path)
        return images.to_real_dataset(), images.sources
    return dataio.read_dataset_csv(path), None


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args: argparse.Namespace) -> int:
    raw = resolve_config(args)
    n_features = _parse_int(raw, "synth_features")
    spec = synth.ParityModelSpec(
        n_features=n_features,
        n_train=_parse_int(raw, "synth_train"),
        n_test=_parse_int(raw, "synth_test"),
        modules=_parse_modules(raw["synth_modules"], n_features),
        seed=_parse_int(raw, "seed"),
    )
    train_data, test_data = synth.generate(spec)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_dataset_csv(out / "train.csv", train_data)
    if test_data is not None:
        dataio.write_dataset_csv(out / "test.csv", test_data)
    write_resolved(out, raw, {"generator": synth.GENERATOR_ID})
    rates = []
    for m, (indices, mix) in enumerate(spec.modules):
        rate = synth.theoretical_rate(spec, m)
        rates.append(rate)
        names = " ".join(f"X{j + 1}" for j in indices)
        print(f"module {m + 1} ({names}, mix {mix}): theoretical rate {rate}")
    print(f"best theoretical rate: {max(rates)}")
    print(f"wrote {out / 'train.csv'}" + (f" and {out / 'test.csv'}" if test_data else ""))
    return 0


def _load_fit_data(raw: dict[str, str], seed: int):
    """Training data for fit/train plus optional sources and held-out images."""
    if raw["train"] and raw["images"]:
        raise ConfigError("set either train= (CSV) or images= (manifest), not both")
    if raw["images"]:
        images = dataio.load_images(raw["images"])
        heldout = None
        test_per_class = int(raw["test_per_class"])
        if test_per_class > 0:
            images, heldout = dataio.split_images(images, test_per_class, seed)
        target = int(raw["augment_per_class"])
        if target > 0:
            images = dataio.augment_images(
                images, target, noise_sd=float(raw["noise_sd"]), seed=seed
            )
        return images.to_real_dataset(), heldout
    if raw["train"]:
        return dataio.read_dataset_csv(raw["train"]), None
    raise ConfigError("fit needs train= (dataset CSV) or images= (manifest)")


def cmd_fit(args: argparse.Namespace, *, require_flat: bool = False) -> int:
    raw = resolve_config(args)
    config = build_pipeline_config(raw)
    if require_flat and config.layers:
        raise ConfigError("the train subcommand trains on flat features; use fit for window layers")
    data, heldout = _load_fit_data(raw, config.hyper.seed)
    val_data = dataio.read_dataset_csv(raw["val"]) if raw["val"] else None
    # validate the full geometry chain before creating any output
    if config.layers:
        grid = resolve_grid(config, data.width)
        geometry_chain(grid, config.layers)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved(out, raw)
    bundle, report = fit_pipeline(config, data, val_data)
    paths = write_fit_outputs(out, bundle, report)
    if heldout is not None:
        summary, curve = evaluate_bundle(bundle, heldout.to_real_dataset())
        write_roc_csv(out / "heldout_roc.csv", curve)
        print(
            f"held-out ({summary.n} rows): auc={summary.auc:.4f} "
            f"sensitivity={summary.sensitivity:.4f} specificity={summary.specificity:.4f}"
        )
    if report.geometry:
        dims = " -> ".join(f"{g.rows}x{g.cols}" for g in report.geometry)
        print(f"geometry: {dims}")
    print(f"parameters: {report.parameters}")
    if report.train_result.train_losses:
        print(f"final train loss: {report.train_result.train_losses[-1]:.6f}")
    print(f"wrote {paths['bundle']}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    return cmd_fit(args, require_flat=True)


def cmd_transform(args: argparse.Namespace) -> int:
    bundle = dataio.load_bundle(args.bundle)
    data, _ = load_table_or_images(args.data)
    feats = bundle_features(bundle, data.features)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    engineered = RealDataset(feats.features, data.response)
    dataio.write_dataset_csv(out / "features.csv", engineered)
    print(f"wrote {out / 'features.csv'} ({engineered.n} rows x {engineered.width} features)")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    bundle = dataio.load_bundle(args.bundle)
    data, sources = load_table_or_images(args.data)
    scores = predict_bundle(bundle, data.features)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "source", "score"])
        for i, s in enumerate(scores, start=1):
            src = sources[i - 1] if sources else ""
            writer.writerow([i, src, repr(float(s))])
    print(f"wrote {out / 'predictions.csv'} ({len(scores)} rows)")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    bundle = dataio.load_bundle(args.bundle)
    data, _ = load_table_or_images(args.data)
    summary, curve = evaluate_bundle(bundle, data, threshold=args.threshold)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    write_roc_csv(out / "roc.csv", curve)
    text = (
        f"n = {summary.n}\nauc = {summary.auc!r}\n"
        f"threshold = {summary.threshold!r}\n"
        f"sensitivity = {summary.sensitivity!r}\nspecificity = {summary.specificity!r}\n"
    )
    (out / "metrics.txt").write_text(text, encoding="utf-8")
    print(
        f"auc={summary.auc:.4f} sensitivity={summary.sensitivity:.4f} "
        f"specificity={summary.specificity:.4f} (threshold {summary.threshold}, n={summary.n})"
    )
    return 0


def cmd_export_maps(args: argparse.Namespace) -> int:
    bundle = dataio.load_bundle(args.bundle)
    data, _ = load_table_or_images(args.data)
    if args.rows:
        try:
            rows = [int(r) for r in args.rows.split(",")]
        except ValueError:
            raise ConfigError(f"--rows expects comma-separated integers, got {args.rows!r}") from None
    else:
        rows = list(range(1, min(10, data.n) + 1))
    for r in rows:
        if not (1 <= r <= data.n):
            raise DataError(f"row {r} out of range (data has {data.n} rows)")
    sel = np.array([r - 1 for r in rows])
    maps = layer_maps(bundle, data.features[sel])
    scores = predict_bundle(bundle, data.features[sel])
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for li, layer_map in enumerate(maps, start=1):
        for i, r in enumerate(rows):
            name = f"row{r:04d}_layer{li}_p{scores[i]:.3f}.pgm"
            write_pgm(out / name, layer_map[i])
            count += 1
    print(f"wrote {count} maps to {out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    bundle = dataio.load_bundle(args.bundle)
    text = format_report(bundle)
    if args.out:
        out = _out_dir(args)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text, encoding="utf-8")
        print(f"wrote {out / 'report.txt'}")
    else:
        print(text, end="")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interconv",
        description="Influence-score screened window features with a small classifier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, config: bool = True) -> None:
        if config:
            p.add_argument("--config", help="key=value configuration file")
            p.add_argument("--set", action="append", metavar="KEY=VALUE",
                           help="override one config key (repeatable)")
            p.add_argument("--seed", type=int, help="override the seed key")
            p.add_argument("--workers", type=int, help="override the workers key")

    p = sub.add_parser("synth", help="generate the synthetic parity benchmark")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit the full pipeline and save a model bundle")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("train", help="train a classifier on flat features (no window layers)")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transform", help="apply a bundle's window stack to data")
    common(p, config=False)
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True, help="dataset CSV or image manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("predict", help="score rows with a fitted bundle")
    common(p, config=False)
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="ROC/AUC evaluation of a bundle on labeled data")
    common(p, config=False)
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-maps", help="write per-layer feature maps as PGM images")
    common(p, config=False)
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--rows", help="comma-separated 1-based rows (default: first 10)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_maps)

    p = sub.add_parser("report", help="print the fit report stored in a bundle")
    common(p, config=False)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", help="optional output directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (DataError, InterconvError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
