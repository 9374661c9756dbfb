"""Grids, sliding windows, and the two dataset value types.

Conventions used throughout the package:

* grid pixels are stored row-major, flattened to feature columns;
* feature indices are 0-based internally, 1-based in reports and CLI output;
* window placement is written (window w, stride l, start p) with a 1-based
  start pixel, so the first window covers rows/cols p .. p+w-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, GeometryError


@dataclass(frozen=True)
class GridShape:
    """Rectangular pixel grid, rows x cols."""

    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise GeometryError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def size(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class WindowSpec:
    """Square sliding window: side length, stride, and 1-based start pixel."""

    window: int
    stride: int
    start: int = 1

    def __post_init__(self) -> None:
        if self.window < 1:
            raise GeometryError(f"window must be >= 1, got {self.window}")
        if self.stride < 1:
            raise GeometryError(f"stride must be >= 1, got {self.stride}")
        if self.start < 1:
            raise GeometryError(f"start is 1-based and must be >= 1, got {self.start}")


def output_dim(size: int, spec: WindowSpec) -> int:
    """Number of window positions along one axis of length `size`.

    floor((size - start - window + 1) / stride) + 1, requiring that the
    first window fits entirely inside the axis.
    """
    span = size - spec.start - spec.window + 1
    if span < 0:
        raise GeometryError(
            f"window {spec.window} starting at {spec.start} does not fit in axis of {size}"
        )
    return span // spec.stride + 1


def output_grid(grid: GridShape, spec: WindowSpec) -> GridShape:
    """Grid of window positions produced by sliding `spec` over `grid`."""
    return GridShape(output_dim(grid.rows, spec), output_dim(grid.cols, spec))


def enumerate_windows(grid: GridShape, spec: WindowSpec) -> list[tuple[int, ...]]:
    """Flattened pixel indices of every window position, row-major.

    Windows are emitted in row-major order of their top-left corner, and the
    indices inside each window are themselves row-major, so window b (1-based)
    lands at output position (ceil(b / out_cols), ((b-1) mod out_cols) + 1).
    """
    out = output_grid(grid, spec)
    first = spec.start - 1  # 0-based corner of the first window
    windows: list[tuple[int, ...]] = []
    for i in range(out.rows):
        r0 = first + i * spec.stride
        for j in range(out.cols):
            c0 = first + j * spec.stride
            idx = tuple(
                (r0 + wr) * grid.cols + (c0 + wc)
                for wr in range(spec.window)
                for wc in range(spec.window)
            )
            windows.append(idx)
    return windows


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


def _check_response(response: np.ndarray, n: int) -> np.ndarray:
    response = np.asarray(response)
    if response.shape != (n,):
        raise DataError(f"response shape {response.shape} does not match {n} rows")
    vals = np.unique(response)
    if not np.isin(vals, (0, 1)).all():
        raise DataError("response must contain only 0 and 1")
    return response.astype(np.int64)


@dataclass(frozen=True, eq=False)
class DiscreteDataset:
    """Rows of small non-negative integer levels with a binary response.

    `level_counts[j]` is the number of admissible levels of column j; values
    in column j must lie in [0, level_counts[j]). Arrays are frozen after
    construction.
    """

    features: np.ndarray
    response: np.ndarray
    level_counts: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        feats = np.asarray(self.features)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise DataError(f"features must be a non-empty 2-d array, got shape {feats.shape}")
        if not np.issubdtype(feats.dtype, np.integer):
            if not np.all(feats == np.floor(feats)):
                raise DataError("discrete features must be integer-valued")
        feats = feats.astype(np.int64)
        if feats.min() < 0:
            raise DataError("discrete features must be non-negative")
        n, p = feats.shape
        resp = _check_response(self.response, n)
        if self.level_counts is None:
            counts = np.maximum(feats.max(axis=0) + 1, 2)
        else:
            counts = np.asarray(self.level_counts, dtype=np.int64)
            if counts.shape != (p,):
                raise DataError(f"level_counts shape {counts.shape} does not match {p} columns")
            if (feats >= counts[np.newaxis, :]).any() or (counts < 2).any():
                raise DataError("feature levels must lie in [0, level_counts) with >= 2 levels")
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "response", _freeze(resp))
        object.__setattr__(self, "level_counts", _freeze(counts))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True, eq=False)
class RealDataset:
    """Rows of real-valued features with a binary response."""

    features: np.ndarray
    response: np.ndarray

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise DataError(f"features must be a non-empty 2-d array, got shape {feats.shape}")
        if not np.isfinite(feats).all():
            raise DataError("features must be finite")
        resp = _check_response(self.response, feats.shape[0])
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "response", _freeze(resp))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]
