"""Ordinary least squares in log-log coordinates."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import FitError


@dataclass(frozen=True)
class PowerFit:
    """``log y ~ intercept + slope * log x`` with RMS residual in log space."""

    slope: float
    intercept: float
    residual: float
    points: int
    identically_zero: bool = False

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope

    def to_dict(self):
        return asdict(self)


def loglog_fit(x, y, labels=None, min_points=4) -> PowerFit:
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y))
    if x.size != y.size:
        raise FitError("abscissa and ordinate differ in length")
    if x.size < min_points:
        raise FitError(f"need at least {min_points} ladder points, got {x.size}")
    labels = list(labels) if labels is not None else [f"#{i}" for i in range(x.size)]
    bad = ~np.isfinite(y) | ~np.isfinite(x)
    if bad.any():
        raise FitError(f"non-finite value at {labels[int(np.argmax(bad))]}")
    if np.all(y == 0):
        return PowerFit(0.0, float("-inf"), 0.0, int(x.size), identically_zero=True)
    if np.any(y == 0):
        raise FitError(f"zero value at {labels[int(np.argmax(y == 0))]} among non-zero ones")
    lx = np.log(x)
    if np.ptp(lx) <= 1e-12 * max(1.0, np.max(np.abs(lx))):
        raise FitError("degenerate abscissae: all ladder points coincide")
    ly = np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (intercept + slope * lx)
    return PowerFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))), int(x.size))
