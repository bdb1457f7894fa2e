"""Uniform cell-centred grids on [-L, L]^n."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CFLError, ConfigurationError

BOUNDARIES = ("periodic", "zero")


@dataclass(frozen=True)
class Grid:
    """Cell-centred grid ``x_j = -L + (j + 1/2) h`` with ``h = 2L / points``.

    The point set is symmetric about 0 in every axis.  ``boundary`` is
    ``"periodic"`` or ``"zero"`` (zero padding outside the box).
    """

    dimension: int = 1
    extent: float = 8.0
    points: int = 1024
    boundary: str = "periodic"
    horizon: float = 1.0
    cfl: float = 0.5
    stride: int = 2

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ConfigurationError("solver grids support dimension 1 or 2", "grid.dimension")
        if self.boundary not in BOUNDARIES:
            raise ConfigurationError(f"boundary must be one of {BOUNDARIES}", "grid.boundary")
        if not 0 < self.cfl <= 0.5:
            raise CFLError(f"CFL factor {self.cfl} outside (0, 0.5]")
        if self.points < 8 or self.extent <= 0 or self.horizon <= 0 or self.stride < 1:
            raise ConfigurationError("grid needs points >= 8, extent > 0, horizon > 0, stride >= 1")

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / self.points

    @cached_property
    def axis(self) -> np.ndarray:
        h = self.spacing
        return -self.extent + (np.arange(self.points) + 0.5) * h

    @cached_property
    def coords(self) -> tuple:
        if self.dimension == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @cached_property
    def wavenumbers(self) -> tuple:
        k = 2 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)
        if self.dimension == 1:
            return (k,)
        return tuple(np.meshgrid(k, k, indexing="ij"))

    def time_step(self, max_speed_squared: float) -> float:
        """``theta * h / sqrt(max sum_i a_i)``; falls back to ``theta * h`` when a vanishes."""
        h = self.spacing
        if max_speed_squared <= 0:
            return self.cfl * h
        return self.cfl * h / math.sqrt(max_speed_squared)

    def schedule(self, max_speed_squared: float):
        """Step count (a multiple of ``stride``) and step size landing exactly on the horizon."""
        dt_max = self.time_step(max_speed_squared)
        blocks = math.ceil(self.horizon / (dt_max * self.stride))
        steps = blocks * self.stride
        return steps, self.horizon / steps

    def inner(self, u, v) -> complex:
        """Quadrature ``(u, v)_{L^2} = h^n sum u conj(v)``."""
        return self.cell_volume * np.sum(u * np.conj(v))

    def norm(self, u) -> float:
        return float(math.sqrt(self.cell_volume * np.sum(np.abs(u) ** 2)))

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "extent": self.extent,
            "points": self.points,
            "boundary": self.boundary,
            "horizon": self.horizon,
            "cfl": self.cfl,
            "stride": self.stride,
        }
