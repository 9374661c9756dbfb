"""End-to-end orchestration: binarize, fit the window stack, train, predict.

A `PipelineConfig` is validated in full (geometry chain included) before any
work starts, so an invalid configuration can never leave partial outputs.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .convlayer import ConvStack, stack_layers, stack_outputs, transform_stack
from .core import GridShape, RealDataset, WindowSpec, output_grid
from .dataio import ModelBundle, save_bundle
from .discretize import Discretizer, apply_discretizer, fit_discretizer
from .errors import ConfigError, DataError
from .metrics import RocCurve, roc_curve, sensitivity, specificity
from .nn import (
    MlpArchitecture,
    MlpModel,
    TrainingHyper,
    TrainResult,
    forward,
    param_count,
    train,
    write_loss_csv,
)

FEATURE_MODES = ("last", "concat")


def parse_discretizer_spec(text: str) -> tuple[str, float | None]:
    """Parse 'median', 'global:<cut>', or 'quantile:<q>'."""
    method, _, arg = text.strip().partition(":")
    if method == "median":
        if arg:
            raise ConfigError("median discretizer takes no parameter")
        return "median", None
    if method in ("global", "quantile"):
        if not arg:
            raise ConfigError(f"{method} discretizer needs a parameter, e.g. {method}:0.5")
        try:
            value = float(arg)
        except ValueError:
            raise ConfigError(f"bad {method} parameter {arg!r}") from None
        if method == "quantile" and not (0.0 < value < 1.0):
            raise ConfigError(f"quantile must lie in (0, 1), got {value}")
        return method, value
    raise ConfigError(f"unknown discretizer {text!r}")


def fit_discretizer_spec(data: RealDataset, text: str) -> Discretizer:
    method, param = parse_discretizer_spec(text)
    if method == "global":
        return fit_discretizer(data, "global", threshold=param)
    if method == "quantile":
        return fit_discretizer(data, "quantile", quantile=param)
    return fit_discretizer(data, "median")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the fit path needs. `grid=None` infers a square grid from
    the data width when window layers are present."""

    grid: GridShape | None = None
    discretizer: str = "median"
    layers: tuple[WindowSpec, ...] = ()
    rediscretizer: str = "median"
    features_mode: str = "last"
    hidden: int | None = None
    output_units: int = 2
    hyper: TrainingHyper = field(default_factory=TrainingHyper)
    workers: int = 1

    def __post_init__(self) -> None:
        if self.features_mode not in FEATURE_MODES:
            raise ConfigError(f"features mode must be one of {FEATURE_MODES}, got {self.features_mode!r}")
        parse_discretizer_spec(self.discretizer)
        parse_discretizer_spec(self.rediscretizer)
        if self.workers < 0:
            raise ConfigError(f"workers must be >= 0, got {self.workers}")


def resolve_grid(config: PipelineConfig, width: int) -> GridShape:
    """The input grid, inferring a square when the config leaves it open."""
    if config.grid is not None:
        if config.grid.size != width:
            raise ConfigError(
                f"grid {config.grid.rows}x{config.grid.cols} needs {config.grid.size} "
                f"columns, data has {width}"
            )
        return config.grid
    side = math.isqrt(width)
    if side * side != width:
        raise ConfigError(
            f"data width {width} is not a perfect square; set an explicit grid"
        )
    return GridShape(side, side)


def geometry_chain(grid: GridShape, layers: tuple[WindowSpec, ...]) -> list[GridShape]:
    """Grids produced by each layer in turn, starting with the input grid.

    Raises GeometryError before any fitting if a window does not fit.
    """
    chain = [grid]
    for spec in layers:
        chain.append(output_grid(chain[-1], spec))
    return chain


def classifier_width(chain: list[GridShape], mode: str) -> int:
    outputs = chain[1:]
    if mode == "concat":
        return sum(g.size for g in outputs)
    return outputs[-1].size


@dataclass(frozen=True, eq=False)
class FitReport:
    geometry: list[GridShape]
    stack: ConvStack | None
    train_result: TrainResult
    parameters: int


def fit_pipeline(
    config: PipelineConfig, data: RealDataset, val_data: RealDataset | None = None
) -> tuple[ModelBundle, FitReport]:
    """Fit the full pipeline on `data` and return the bundle plus a report."""
    # workers == 0 means "use all available cores"
    workers = config.workers if config.workers > 0 else (os.cpu_count() or 1)
    if config.layers:
        grid = resolve_grid(config, data.width)
        chain = geometry_chain(grid, config.layers)
        disc = fit_discretizer_spec(data, config.discretizer)
        ddata = apply_discretizer(disc, data)
        stack = stack_layers(
            ddata,
            grid,
            list(config.layers),
            rediscretize=config.rediscretizer,
            workers=workers,
        )
        features = transform_stack(stack, ddata, mode=config.features_mode)
        val_features = None
        if val_data is not None:
            if val_data.width != data.width:
                raise DataError("validation data width does not match training data")
            val_d = apply_discretizer(disc, val_data)
            val_features = transform_stack(stack, val_d, mode=config.features_mode)
    else:
        grid = None
        chain = []
        disc = None
        stack = None
        features = data
        val_features = val_data

    arch = MlpArchitecture(
        input_width=features.width, hidden=config.hidden, output_units=config.output_units
    )
    result = train(arch, features, config.hyper, val_features)
    bundle = ModelBundle(
        input_grid=grid,
        discretizer=disc,
        stack=stack,
        features_mode=config.features_mode,
        arch=arch,
        weights=result.model.weights,
        hyper=config.hyper,
    )
    report = FitReport(
        geometry=chain, stack=stack, train_result=result, parameters=param_count(arch)
    )
    return bundle, report


def _bundle_model(bundle: ModelBundle) -> MlpModel:
    state = tuple(np.zeros_like(w) for w in bundle.weights)
    return MlpModel(arch=bundle.arch, weights=bundle.weights, rms_state=state, hyper=bundle.hyper)


def bundle_features(bundle: ModelBundle, features: np.ndarray) -> RealDataset:
    """Push raw feature rows through the bundle's discretizer and stack."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DataError(f"expected a feature matrix, got shape {x.shape}")
    dataset = RealDataset(x, np.zeros(x.shape[0], dtype=np.int64))
    if bundle.stack is None:
        return dataset
    if bundle.discretizer is None:
        raise DataError("bundle has window layers but no discretizer")
    ddata = apply_discretizer(bundle.discretizer, dataset)
    return transform_stack(bundle.stack, ddata, mode=bundle.features_mode)


def predict_bundle(bundle: ModelBundle, features: np.ndarray) -> np.ndarray:
    """Class-1 probability for every row of raw input features."""
    feats = bundle_features(bundle, features)
    out = forward(_bundle_model(bundle), feats.features)
    return np.asarray(out, dtype=np.float64)


def layer_maps(bundle: ModelBundle, features: np.ndarray) -> list[np.ndarray]:
    """Per-layer feature maps for raw input rows: one (n, out_rows, out_cols)
    array per layer."""
    if bundle.stack is None:
        raise DataError("bundle has no window layers to map")
    x = np.asarray(features, dtype=np.float64)
    dataset = RealDataset(x, np.zeros(x.shape[0], dtype=np.int64))
    if bundle.discretizer is None:
        raise DataError("bundle has window layers but no discretizer")
    ddata = apply_discretizer(bundle.discretizer, dataset)
    outputs = stack_outputs(bundle.stack, ddata)
    maps = []
    for layer, out in zip(bundle.stack.layers, outputs):
        g = layer.output_grid
        maps.append(out.features.reshape(-1, g.rows, g.cols))
    return maps


@dataclass(frozen=True)
class EvalSummary:
    auc: float
    sensitivity: float
    specificity: float
    threshold: float
    n: int


def evaluate_bundle(
    bundle: ModelBundle, data: RealDataset, threshold: float = 0.5
) -> tuple[EvalSummary, RocCurve]:
    scores = predict_bundle(bundle, data.features)
    curve = roc_curve(data.response, scores)
    summary = EvalSummary(
        auc=curve.auc,
        sensitivity=sensitivity(data.response, scores, threshold),
        specificity=specificity(data.response, scores, threshold),
        threshold=threshold,
        n=data.n,
    )
    return summary, curve


# ---------------------------------------------------------------------------
# reference architectures (128x128 input, window stack presets)

PRESETS: dict[str, dict] = {
    "model1": {"layers": ((2, 2, 6),), "features_mode": "last", "hidden": None},
    "model2": {"layers": ((2, 2, 6),), "features_mode": "last", "hidden": 64},
    "model3": {"layers": ((2, 2, 6), (2, 2, 1)), "features_mode": "last", "hidden": None},
    "model4": {"layers": ((2, 2, 6), (2, 2, 1)), "features_mode": "last", "hidden": 64},
    "model5": {"layers": ((2, 2, 6), (2, 2, 1)), "features_mode": "concat", "hidden": None},
    "model6": {"layers": ((2, 2, 6), (2, 2, 1)), "features_mode": "concat", "hidden": 64},
}


def preset_config(name: str, grid: GridShape = GridShape(128, 128)) -> PipelineConfig:
    """Named window-stack presets over a 128x128 grid (model1 .. model6)."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    p = PRESETS[name]
    return PipelineConfig(
        grid=grid,
        layers=tuple(WindowSpec(*t) for t in p["layers"]),
        features_mode=p["features_mode"],
        hidden=p["hidden"],
    )


def preset_architecture(name: str, grid: GridShape = GridShape(128, 128)) -> MlpArchitecture:
    """The classifier architecture a preset produces on `grid`."""
    config = preset_config(name, grid)
    chain = geometry_chain(grid, config.layers)
    return MlpArchitecture(
        input_width=classifier_width(chain, config.features_mode),
        hidden=config.hidden,
        output_units=config.output_units,
    )


# ---------------------------------------------------------------------------
# report files


def write_windows_csv(path: str | Path, stack: ConvStack) -> None:
    """Per-window fit table: position, selected variables (1-based), score, AUC."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["layer", "window", "out_row", "out_col", "variables", "n_cells", "iscore", "train_auc"]
        )
        for li, layer in enumerate(stack.layers, start=1):
            out = layer.output_grid
            for f in layer.features:
                b = f.window_index
                row = (b - 1) // out.cols + 1
                col = (b - 1) % out.cols + 1
                names = " ".join(f"X{j + 1}" for j in f.selected_subset)
                writer.writerow(
                    [li, b, row, col, names, len(f.cell_keys), repr(f.iscore), repr(f.train_auc)]
                )


def format_report(bundle: ModelBundle, train_result: TrainResult | None = None) -> str:
    lines: list[str] = []
    if bundle.stack is not None:
        chain = [bundle.stack.layers[0].input_grid] + [
            layer.output_grid for layer in bundle.stack.layers
        ]
        dims = " -> ".join(f"{g.rows}x{g.cols}" for g in chain)
        lines.append(f"geometry: {dims}")
        for li, layer in enumerate(bundle.stack.layers, start=1):
            s = layer.spec
            lines.append(
                f"layer {li}: window {s.window}x{s.window} stride {s.stride} start {s.start} "
                f"-> {layer.output_grid.rows}x{layer.output_grid.cols} ({layer.n_windows} windows)"
            )
        if bundle.discretizer is not None:
            param = "" if bundle.discretizer.param is None else f":{bundle.discretizer.param}"
            lines.append(f"discretizer: {bundle.discretizer.method}{param}")
        lines.append(f"features: {bundle.features_mode} ({bundle.arch.input_width})")
    hidden = "none" if bundle.arch.hidden is None else str(bundle.arch.hidden)
    lines.append(
        f"classifier: {bundle.arch.input_width} -> hidden {hidden} -> "
        f"{bundle.arch.output_units} unit(s), {param_count(bundle.arch)} parameters"
    )
    if train_result is not None:
        losses = train_result.train_losses
        if losses:
            lines.append(f"training: {len(losses)} epochs, final loss {losses[-1]:.6f}")
        else:
            lines.append("training: 0 epochs (initial weights kept)")
    if bundle.stack is not None:
        lines.append("")
        lines.append("strongest windows (by influence score):")
        for li, layer in enumerate(bundle.stack.layers, start=1):
            ranked = sorted(layer.features, key=lambda f: -f.iscore)[:10]
            for f in ranked:
                names = " ".join(f"X{j + 1}" for j in f.selected_subset)
                lines.append(
                    f"  layer {li} window {f.window_index}: {names}"
                    f"  iscore {f.iscore:.4f}  train_auc {f.train_auc:.4f}"
                )
    return "\n".join(lines) + "\n"


def write_fit_outputs(
    out_dir: str | Path, bundle: ModelBundle, report: FitReport
) -> dict[str, Path]:
    """Write model.bundle, report.txt, loss.csv, and windows.csv into `out_dir`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"bundle": out / "model.bundle", "report": out / "report.txt", "loss": out / "loss.csv"}
    save_bundle(bundle, paths["bundle"])
    paths["report"].write_text(format_report(bundle, report.train_result), encoding="utf-8")
    write_loss_csv(paths["loss"], report.train_result)
    if report.stack is not None:
        paths["windows"] = out / "windows.csv"
        write_windows_csv(paths["windows"], report.stack)
    return paths
