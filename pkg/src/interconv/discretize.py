"""Binarization of real-valued features.

Three threshold rules, all applied as `level = 1 if value > threshold else 0`
(ties go to 0):

* ``global``   -- one fixed cut for every column;
* ``median``   -- per-column median of the fitted data;
* ``quantile`` -- per-column q-quantile of the fitted data.

Thresholds are fit once (on training data) and reused; `apply_discretizer`
never looks at the data it is given beyond the feature values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DiscreteDataset, RealDataset
from .errors import ConfigError, DataError

METHODS = ("global", "median", "quantile")


@dataclass(frozen=True, eq=False)
class Discretizer:
    """Fitted per-column thresholds plus the rule that produced them."""

    method: str
    thresholds: np.ndarray
    param: float | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown discretizer method {self.method!r}")
        thr = np.asarray(self.thresholds, dtype=np.float64)
        if thr.ndim != 1:
            raise ConfigError("thresholds must be a 1-d array")
        thr = np.ascontiguousarray(thr)
        thr.flags.writeable = False
        object.__setattr__(self, "thresholds", thr)

    @property
    def width(self) -> int:
        return self.thresholds.shape[0]


def fit_discretizer(
    data: RealDataset,
    method: str = "median",
    *,
    threshold: float | None = None,
    quantile: float | None = None,
) -> Discretizer:
    """Learn per-column cut points on `data`.

    `threshold` is required for the global rule; `quantile` (in the open
    interval (0, 1)) for the quantile rule.
    """
    x = data.features
    if method == "global":
        if threshold is None:
            raise ConfigError("global discretizer needs an explicit threshold")
        cuts = np.full(x.shape[1], float(threshold))
        return Discretizer("global", cuts, float(threshold))
    if method == "median":
        return Discretizer("median", np.median(x, axis=0))
    if method == "quantile":
        if quantile is None or not (0.0 < float(quantile) < 1.0):
            raise ConfigError(f"quantile must lie in (0, 1), got {quantile!r}")
        return Discretizer("quantile", np.quantile(x, float(quantile), axis=0), float(quantile))
    raise ConfigError(f"unknown discretizer method {method!r}")


def apply_discretizer(disc: Discretizer, data: RealDataset) -> DiscreteDataset:
    """Binarize `data` with previously fitted thresholds."""
    if data.width != disc.width:
        raise DataError(
            f"discretizer was fit on {disc.width} columns, data has {data.width}"
        )
    levels = (data.features > disc.thresholds[np.newaxis, :]).astype(np.int64)
    return DiscreteDataset(levels, data.response, np.full(data.width, 2, dtype=np.int64))
