"""Leapfrog solver for the regularised Cauchy problem and closed-form oracles."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import CFLError, ConfigurationError, DivergenceError, ResolutionError
from .grid import Grid

__all__ = [
    "Grid",
    "SolveTrace",
    "SolveSweep",
    "solve",
    "solve_ladder",
    "dalembert_oracle",
    "second_difference",
    "state_vector",
]


def second_difference(u, h, axis, boundary):
    """3-point ``D^2`` along ``axis``; periodic wrap or zero padding."""
    if boundary == "periodic":
        return (np.roll(u, 1, axis) - 2 * u + np.roll(u, -1, axis)) / (h * h)
    out = -2 * u
    sl = [slice(None)] * u.ndim
    sr = [slice(None)] * u.ndim
    sl[axis], sr[axis] = slice(1, None), slice(None, -1)
    out[tuple(sl)] += u[tuple(sr)]
    out[tuple(sr)] += u[tuple(sl)]
    return out / (h * h)


@dataclass(frozen=True)
class SolveTrace:
    """Checkpointed history of one regularised solve.

    ``u`` and ``ut`` have shape ``(checkpoints, *grid.shape)``.  ``ut`` is
    the centred difference ``(u^{m+1} - u^{m-1}) / 2 dt`` at checkpoints
    (``g1`` at t = 0).
    """

    eps: float
    grid: Grid
    times: np.ndarray
    u: np.ndarray
    ut: np.ndarray
    dt: float
    steps: int
    coefficients: tuple = field(repr=False)
    forcing_norms: np.ndarray = field(repr=False, default=None)
    meta: dict = field(default_factory=dict)

    @property
    def stride(self) -> int:
        return self.grid.stride

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.u)

    def at(self, t):
        j = int(np.argmin(np.abs(self.times - t)))
        return self.u[j]

    def file_stem(self) -> str:
        kernel = self.meta.get("kernel", "kernel")
        return f"trace_{kernel}_eps{self.eps:.6e}"

    def export_csv(self, directory, every=1):
        """Columns ``t, x[, y], re_u, im_u`` plus a JSON sidecar of metadata."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{self.file_stem()}.csv"
        coords = [c.ravel() for c in self.grid.coords]
        names = ["x", "y"][: self.grid.dimension]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *names, "re_u", "im_u"])
            for j in range(0, len(self.times), every):
                flat = self.u[j].ravel()
                re, im = np.real(flat), np.imag(flat) if self.is_complex else np.zeros(flat.size)
                t = repr(float(self.times[j]))
                for i in range(flat.size):
                    w.writerow([t, *(repr(float(c[i])) for c in coords),
                                repr(float(re[i])), repr(float(im[i]))])
        sidecar = {
            "eps": self.eps,
            "dt": self.dt,
            "steps": self.steps,
            "checkpoints": len(self.times),
            "grid": self.grid.to_dict(),
            **self.meta,
        }
        with open(path.with_suffix(".json"), "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
        return path


def _as_field(v, grid: Grid, dtype=float):
    if v is None:
        return np.zeros(grid.shape, dtype=dtype)
    if callable(v):
        return np.asarray(v(*grid.coords))
    arr = np.asarray(v)
    if arr.ndim == 0:
        return np.full(grid.shape, arr)
    if arr.shape != grid.shape:
        raise ConfigurationError(f"field of shape {arr.shape} does not match grid {grid.shape}")
    return arr


def solve(coefficients, grid: Grid, g0, g1=None, forcing=None, eps: float = 0.0,
          dt: Optional[float] = None, steps: Optional[int] = None, meta=None) -> SolveTrace:
    """Leapfrog for ``u_tt = sum_i a_i D_i^2 u + f`` on ``grid``.

    ``coefficients`` is a sequence of ``grid.dimension`` arrays (or scalars).
    ``forcing`` is None, an array (time independent) or a callable
    ``f(t) -> array``.  ``dt``/``steps`` may be imposed so that a whole
    ladder shares one time step; otherwise the grid's CFL rule is used.
    """
    n = grid.dimension
    coeffs = [_as_field(a, grid) for a in coefficients]
    if len(coeffs) != n:
        raise ConfigurationError(f"need {n} coefficients, got {len(coeffs)}")
    a_min = min(float(np.min(np.real(a))) for a in coeffs)
    if a_min < -1e-12 * max(1.0, max(float(np.max(np.abs(a))) for a in coeffs)):
        raise ConfigurationError(f"coefficients must be non-negative (min {a_min:.3g})")
    speed2 = float(np.max(sum(np.abs(a) for a in coeffs)))
    if dt is None or steps is None:
        steps, dt = grid.schedule(speed2)
    elif steps % grid.stride:
        raise ConfigurationError("imposed step count must be a multiple of the stride")
    h = grid.spacing
    if speed2 > 0 and dt * math.sqrt(speed2) > 0.5 * h * (1 + 1e-12):
        raise CFLError(f"dt={dt:.4g} violates dt*sqrt(max a) <= h/2 (h={h:.4g}, max a={speed2:.4g})")

    u0 = _as_field(g0, grid)
    v0 = _as_field(g1, grid)
    if callable(forcing):
        f_at = lambda t: _as_field(forcing(t), grid)
    elif forcing is None:
        f_at = None
    else:
        fixed = _as_field(forcing, grid)
        f_at = lambda t: fixed
    dtype = np.result_type(u0, v0, *coeffs, f_at(0.0) if f_at else 0.0, float)

    def accel(u, t):
        out = sum(a * second_difference(u, h, i, grid.boundary) for i, a in enumerate(coeffs))
        if f_at is not None:
            out = out + f_at(t)
        return out

    u_prev = u0.astype(dtype)
    u_curr = u_prev + dt * v0 + 0.5 * dt * dt * accel(u_prev, 0.0)
    stride = grid.stride
    nchk = steps // stride + 1
    us = np.empty((nchk,) + grid.shape, dtype=dtype)
    uts = np.empty_like(us)
    fnorm = np.zeros(nchk)
    us[0], uts[0] = u_prev, v0
    if f_at is not None:
        fnorm[0] = grid.norm(f_at(0.0))
    for m in range(1, steps + 1):
        u_next = 2 * u_curr - u_prev + dt * dt * accel(u_curr, m * dt)
        if m % stride == 0:
            j = m // stride
            us[j] = u_curr
            uts[j] = (u_next - u_prev) / (2 * dt)
            if f_at is not None:
                fnorm[j] = grid.norm(f_at(m * dt))
            if not np.all(np.isfinite(u_curr)):
                raise DivergenceError(f"non-finite values by step {m}", step=m)
        u_prev, u_curr = u_curr, u_next
    times = np.arange(nchk) * stride * dt
    info = {"scheme": "leapfrog", **(meta or {})}
    return SolveTrace(float(eps), grid, times, us, uts, float(dt), int(steps), tuple(coeffs),
                      fnorm, info)


@dataclass(frozen=True)
class SolveSweep:
    """Traces for a whole ladder sharing one time step."""

    traces: tuple
    dt: float
    steps: int

    def __iter__(self):
        return iter(self.traces)

    def __len__(self):
        return len(self.traces)

    def __getitem__(self, j) -> SolveTrace:
        return self.traces[j]

    @property
    def ladder(self):
        return np.array([t.eps for t in self.traces])


def common_schedule(grid: Grid, coefficient_sets):
    """One (steps, dt) for every ladder member, from the largest total speed."""
    speed2 = max(float(np.max(sum(np.abs(np.asarray(a)) for a in cs))) for cs in coefficient_sets)
    return grid.schedule(speed2)


def solve_ladder(coefficient_sets, grid: Grid, g0s, g1s=None, forcings=None, ladder=None,
                 workers: int = 1, meta=None) -> SolveSweep:
    """Solve every eps with one shared time step; optional thread pool."""
    m = len(coefficient_sets)
    g1s = g1s if g1s is not None else [None] * m
    forcings = forcings if forcings is not None else [None] * m
    ladder = ladder if ladder is not None else [0.0] * m
    steps, dt = common_schedule(grid, coefficient_sets)

    def one(j):
        return solve(coefficient_sets[j], grid, g0s[j], g1s[j], forcings[j], eps=ladder[j],
                     dt=dt, steps=steps, meta=meta)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(one, range(m)))
    else:
        traces = [one(j) for j in range(m)]
    return SolveSweep(tuple(traces), dt, steps)


# ---------------------------------------------------------------------------
# oracles


def dalembert_oracle(c: float, g0: Callable, g1: Optional[Callable], t: float, x,
                     g1_antiderivative: Optional[Callable] = None):
    """``(g0(x - s t) + g0(x + s t)) / 2 + (1 / 2s) int_{x - s t}^{x + s t} g1``, ``s = sqrt(c)``."""
    if c < 0:
        raise ValueError("wave speed squared must be non-negative")
    x = np.asarray(x, dtype=float)
    if c == 0:
        out = np.asarray(g0(x), dtype=np.result_type(float, np.asarray(g0(x))))
        return out + (t * np.asarray(g1(x)) if g1 is not None else 0.0)
    s = math.sqrt(c)
    out = 0.5 * (np.asarray(g0(x - s * t)) + np.asarray(g0(x + s * t)))
    if g1 is None or t == 0:
        return out
    if g1_antiderivative is not None:
        integral = g1_antiderivative(x + s * t) - g1_antiderivative(x - s * t)
    else:
        flat = x.ravel()
        integral = np.array([quad(g1, xi - s * t, xi + s * t, limit=200)[0] for xi in flat])
        integral = integral.reshape(x.shape)
    return out + integral / (2 * s)


# ---------------------------------------------------------------------------
# state vector


def spatial_gradient(u, grid: Grid, axis: int, method: Optional[str] = None):
    """``d_axis u`` spectrally (periodic) or by 4th-order central differences."""
    method = method or ("spectral" if grid.boundary == "periodic" else "fd4")
    if method == "spectral":
        n = grid.points
        k = 2 * np.pi * np.fft.fftfreq(n, d=grid.spacing)
        if n % 2 == 0:
            k[n // 2] = 0.0
        shape = [1] * u.ndim
        ax = u.ndim - grid.dimension + axis
        shape[ax] = n
        out = np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(u, axis=ax), axis=ax)
        return out if np.iscomplexobj(u) else np.real(out)
    if method != "fd4":
        raise ValueError(f"unknown gradient method {method!r}")
    ax = u.ndim - grid.dimension + axis
    h = grid.spacing
    pad = [(0, 0)] * u.ndim
    pad[ax] = (2, 2)
    up = np.pad(u, pad, mode="wrap" if grid.boundary == "periodic" else "constant")

    def sh(s):
        sl = [slice(None)] * u.ndim
        sl[ax] = slice(2 + s, up.shape[ax] - 2 + s)
        return up[tuple(sl)]

    return (-sh(2) + 8 * sh(1) - 8 * sh(-1) + sh(-2)) / (12 * h)


@dataclass(frozen=True)
class StateTrajectory:
    """``U = (d_1 u, ..., d_n u, d_t u)`` at every checkpoint: shape ``(checkpoints, n + 1, *grid)``."""

    times: np.ndarray
    U: np.ndarray
    level: int = 0

    @property
    def components(self) -> int:
        return self.U.shape[1]


def state_vector(trace: SolveTrace, method: Optional[str] = None, time_derivative="stored",
                 max_stride: Optional[int] = None) -> StateTrajectory:
    """Level-0 state from a trace.

    ``time_derivative="stored"`` uses the per-checkpoint centred step
    difference; ``"checkpoints"`` differentiates across checkpoints, which
    is refused when the checkpoint spacing exceeds ``max_stride`` steps.
    """
    n = trace.grid.dimension
    grads = [spatial_gradient(trace.u, trace.grid, i, method) for i in range(n)]
    if time_derivative == "stored":
        ut = trace.ut
    elif time_derivative == "checkpoints":
        if max_stride is not None and trace.stride > max_stride:
            raise ResolutionError(f"checkpoint stride {trace.stride} exceeds {max_stride} steps")
        if len(trace.times) < 3:
            raise ResolutionError("need at least three checkpoints")
        ut = np.gradient(trace.u, trace.times, axis=0, edge_order=2)
    else:
        raise ValueError(f"unknown time derivative mode {time_derivative!r}")
    U = np.stack(grads + [ut], axis=1)
    return StateTrajectory(trace.times, U)


def lift_state(state: StateTrajectory, grid: Grid, method: Optional[str] = None) -> StateTrajectory:
    """Next-level state ``(d_1 X, ..., d_n X)`` by spatial differentiation."""
    n = grid.dimension
    parts = [spatial_gradient(state.U, grid, i, method) for i in range(n)]
    return StateTrajectory(state.times, np.concatenate(parts, axis=1), state.level + 1)
