"""Sliding-window feature engineering driven by influence-score selection.

For every window position, backward dropping picks the strongest variable
subset inside the window, and the engineered feature value of a row is the
*training* local response mean of the cell that row falls into. Rows landing
in cells never seen during fitting fall back to the training grand mean, so
transformed values always stay inside [0, 1].

Stacking layers re-binarizes the engineered features (per-feature median by
default) before the next layer is fit; the thresholds fitted between layers
travel with the stack so new data can be pushed through identically.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import DiscreteDataset, GridShape, RealDataset, WindowSpec, enumerate_windows, output_grid
from .discretize import Discretizer, apply_discretizer, fit_discretizer
from .errors import DataError, UndefinedMetricError
from .bda import backward_drop
from .iscore import encode_cells, partition_stats
from .metrics import auc


@dataclass(frozen=True, eq=False)
class WindowFeature:
    """One fitted window: 1-based position index, the selected subset
    (0-based flattened pixel indices), sorted occupied cell keys with their
    training means, the training grand mean as fallback, and the subset's
    standardized influence score plus its single-feature training AUC
    (NaN when the training response is single-class)."""

    window_index: int
    selected_subset: tuple[int, ...]
    cell_keys: np.ndarray
    cell_means: np.ndarray
    fallback_mean: float
    iscore: float
    train_auc: float

    def means_by_key(self) -> dict[int, float]:
        return {int(k): float(m) for k, m in zip(self.cell_keys, self.cell_means)}


@dataclass(frozen=True, eq=False)
class FittedConvLayer:
    input_grid: GridShape
    spec: WindowSpec
    level_counts: np.ndarray
    features: tuple[WindowFeature, ...]

    @property
    def output_grid(self) -> GridShape:
        return output_grid(self.input_grid, self.spec)

    @property
    def n_windows(self) -> int:
        return len(self.features)


def _fit_window(
    data: DiscreteDataset, index: int, window: tuple[int, ...]
) -> WindowFeature:
    trace = backward_drop(data, window)
    stats = partition_stats(data, trace.best_subset)
    means = stats.sums / stats.counts
    fallback = float(data.response.mean())
    feature_col = means[stats.row_cells]
    try:
        train_auc = auc(data.response, feature_col)
    except UndefinedMetricError:
        train_auc = float("nan")
    return WindowFeature(
        window_index=index + 1,
        selected_subset=trace.best_subset,
        cell_keys=stats.keys,
        cell_means=means,
        fallback_mean=fallback,
        iscore=trace.best_score,
        train_auc=train_auc,
    )


def fit_layer(
    data: DiscreteDataset,
    grid: GridShape,
    spec: WindowSpec,
    *,
    workers: int | None = None,
) -> FittedConvLayer:
    """Fit every window position of `spec` over `grid` on training data.

    `workers` > 1 fits windows on a thread pool; results are collected in
    window order, so the worker count never changes the output.
    """
    if data.width != grid.size:
        raise DataError(f"grid {grid.rows}x{grid.cols} needs {grid.size} columns, data has {data.width}")
    windows = enumerate_windows(grid, spec)
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_fit_window, data, i, w) for i, w in enumerate(windows)]
            features = tuple(f.result() for f in futures)
    else:
        features = tuple(_fit_window(data, i, w) for i, w in enumerate(windows))
    return FittedConvLayer(
        input_grid=grid, spec=spec, level_counts=data.level_counts, features=features
    )


def _lookup(feature: WindowFeature, keys: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(feature.cell_keys, keys)
    pos_clipped = np.minimum(pos, len(feature.cell_keys) - 1)
    hit = feature.cell_keys[pos_clipped] == keys
    return np.where(hit, feature.cell_means[pos_clipped], feature.fallback_mean)


def transform(layer: FittedConvLayer, data: DiscreteDataset) -> RealDataset:
    """Engineered features for `data`, one column per window position.

    Uses only training-time state (cell means and fallback); cells unseen at
    fit time map to the fallback mean.
    """
    if data.width != layer.input_grid.size:
        raise DataError(
            f"layer expects {layer.input_grid.size} columns, data has {data.width}"
        )
    if (data.level_counts > layer.level_counts).any():
        raise DataError("data has more levels per column than the layer was fit on")
    cols = np.empty((data.n, layer.n_windows), dtype=np.float64)
    for j, feature in enumerate(layer.features):
        keys = encode_cells(data.features, feature.selected_subset, layer.level_counts)
        cols[:, j] = _lookup(feature, keys)
    return RealDataset(cols, data.response)


@dataclass(frozen=True, eq=False)
class ConvStack:
    """Fitted layers in order plus the re-binarizers fitted between them
    (len(rediscretizers) == len(layers) - 1)."""

    layers: tuple[FittedConvLayer, ...]
    rediscretizers: tuple[Discretizer, ...]

    @property
    def output_grid(self) -> GridShape:
        return self.layers[-1].output_grid


def stack_layers(
    data: DiscreteDataset,
    grid: GridShape,
    specs: list[WindowSpec],
    *,
    rediscretize: str = "median",
    workers: int | None = None,
) -> ConvStack:
    """Fit a chain of layers, re-binarizing engineered features between them."""
    if not specs:
        raise DataError("at least one window spec is required")
    layers: list[FittedConvLayer] = []
    rediscretizers: list[Discretizer] = []
    current = data
    current_grid = grid
    for i, spec in enumerate(specs):
        layer = fit_layer(current, current_grid, spec, workers=workers)
        layers.append(layer)
        if i + 1 < len(specs):
            engineered = transform(layer, current)
            disc = fit_discretizer(engineered, rediscretize)
            rediscretizers.append(disc)
            current = apply_discretizer(disc, engineered)
            current_grid = layer.output_grid
    return ConvStack(layers=tuple(layers), rediscretizers=tuple(rediscretizers))


def stack_outputs(stack: ConvStack, data: DiscreteDataset) -> list[RealDataset]:
    """Engineered features of every layer for `data`, in layer order."""
    outputs: list[RealDataset] = []
    current = data
    for i, layer in enumerate(stack.layers):
        engineered = transform(layer, current)
        outputs.append(engineered)
        if i < len(stack.rediscretizers):
            current = apply_discretizer(stack.rediscretizers[i], engineered)
    return outputs


def transform_stack(
    stack: ConvStack, data: DiscreteDataset, *, mode: str = "last"
) -> RealDataset:
    """Final feature matrix of the stack.

    mode "last" keeps the deepest layer's features; "concat" joins every
    layer's features left to right (shallow first).
    """
    outputs = stack_outputs(stack, data)
    if mode == "last":
        return outputs[-1]
    if mode == "concat":
        joined = np.concatenate([o.features for o in outputs], axis=1)
        return RealDataset(joined, data.response)
    raise DataError(f"unknown feature mode {mode!r}")


def export_feature_map(
    layer: FittedConvLayer, data: DiscreteDataset, row_index: int
) -> np.ndarray:
    """One row's engineered features reshaped to the layer's output grid."""
    if not (0 <= row_index < data.n):
        raise DataError(f"row {row_index} out of range for {data.n} rows")
    engineered = transform(layer, data)
    out = layer.output_grid
    return engineered.features[row_index].reshape(out.rows, out.cols)
