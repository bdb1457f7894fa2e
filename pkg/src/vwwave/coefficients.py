"""Coefficient fields, their regularised nets, and the Glaeser machinery."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigurationError, GlaeserViolation, ResolutionError
from .fitting import PowerFit, loglog_fit
from .grid import Grid
from .mollifier import (
    DistributionSum,
    Heaviside,
    Mollifier,
    PointMass,
    PositiveScale,
    bump_plateau,
    convolve,
    scale_kernel,
)

KINDS = ("constant", "smooth", "sampled", "example1", "heaviside", "point-mass-sum")
DISTRIBUTIONAL = ("example1", "heaviside", "point-mass-sum")


@dataclass(frozen=True)
class CoefficientField:
    """Non-negative coefficient profile along coordinate ``axis``.

    Only one-dimensional profiles are represented; in two dimensions the
    field is constant along the other axis.
    """

    kind: str
    value: float = 0.0
    function: Optional[Callable] = field(default=None, repr=False, compare=False)
    derivatives: tuple = field(default=(), repr=False, compare=False)
    table: Optional[tuple] = field(default=None, repr=False, compare=False)
    plateau_radius: float = 1.0
    support_radius: float = 2.0
    location: float = 0.0
    height: float = 1.0
    locations: tuple = ()
    weights: tuple = ()
    axis: int = 0
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "constant" and self.value < 0:
            raise ConfigurationError("constant coefficient must be non-negative")
        if self.kind == "heaviside" and self.height < 0:
            raise ConfigurationError("Heaviside coefficient must jump upwards")
        if self.kind == "point-mass-sum":
            if len(self.locations) != len(self.weights) or not self.locations:
                raise ConfigurationError("point masses need matching locations and weights")
            if min(self.weights) < 0:
                raise ConfigurationError("point-mass weights must be non-negative")
        if self.kind == "sampled":
            if self.table is None or np.min(self.table[1]) < 0:
                raise ConfigurationError("sampled coefficient needs a non-negative table")
        if self.kind == "smooth" and self.function is None:
            raise ConfigurationError("smooth coefficient needs a function")
        if self.kind == "example1" and not 0 < self.plateau_radius < self.support_radius:
            raise ConfigurationError("example1 cutoff needs 0 < plateau < support")

    @property
    def is_distributional(self) -> bool:
        return self.kind in DISTRIBUTIONAL

    @property
    def is_smooth(self) -> bool:
        return self.kind in ("constant", "smooth", "sampled")

    @property
    def identifier(self) -> str:
        return self.label or self.kind

    def exact(self, x, derivative=0):
        """Pointwise values of the unregularised field (functions only)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.value if derivative == 0 else 0.0)
        if self.kind == "smooth":
            if derivative == 0:
                return np.asarray(self.function(x), dtype=float)
            if derivative <= len(self.derivatives):
                return np.asarray(self.derivatives[derivative - 1](x), dtype=float)
            raise ConfigurationError(f"derivative {derivative} not supplied for smooth field")
        if self.kind == "example1":
            return example1_profile(x, derivative, self.plateau_radius, self.support_radius)
        if self.kind == "sampled":
            if derivative:
                raise ConfigurationError("sampled fields carry values only")
            return np.interp(x, *self.table)
        raise ConfigurationError(f"{self.kind} coefficient has no pointwise values")


def constant(value: float, axis=0) -> CoefficientField:
    return CoefficientField("constant", value=float(value), axis=axis, label=f"const{value:g}")


def heaviside(location=0.0, height=1.0, axis=0) -> CoefficientField:
    return CoefficientField("heaviside", location=location, height=height, axis=axis,
                            label="heaviside")


def example1(plateau_radius=1.0, support_radius=2.0, axis=0) -> CoefficientField:
    return CoefficientField("example1", plateau_radius=plateau_radius,
                            support_radius=support_radius, axis=axis, label="example1")


def point_masses(locations, weights, axis=0) -> CoefficientField:
    return CoefficientField("point-mass-sum", locations=tuple(locations),
                            weights=tuple(weights), axis=axis, label="point-masses")


def quadratic(scale=1.0, center=0.0, axis=0) -> CoefficientField:
    """``scale * (x - center)**2``: globally C^2 with M = 2 * scale."""
    return CoefficientField(
        "smooth",
        function=lambda x: scale * (x - center) ** 2,
        derivatives=(lambda x: 2 * scale * (x - center), lambda x: np.full_like(x, 2.0 * scale)),
        axis=axis,
        label=f"quadratic{scale:g}",
    )


def gaussian(amplitude=1.0, center=0.0, width=1.0, base=0.0, axis=0) -> CoefficientField:
    def f(x):
        return base + amplitude * np.exp(-(((x - center) / width) ** 2))

    def f1(x):
        s = (x - center) / width
        return amplitude * np.exp(-s * s) * (-2 * s / width)

    def f2(x):
        s = (x - center) / width
        return amplitude * np.exp(-s * s) * (4 * s * s - 2) / width**2

    return CoefficientField("smooth", function=f, derivatives=(f1, f2), axis=axis,
                            label="gaussian")


def example1_profile(x, derivative=0, plateau_radius=1.0, support_radius=2.0):
    """``a(x) = x^2 chi(x) / 2`` for x > 0, 0 otherwise; second derivative jumps at 0."""
    x = np.asarray(x, dtype=float)
    pos = x > 0
    xp = np.where(pos, x, 0.0)
    chi = [bump_plateau(xp, plateau_radius, support_radius, d) for d in range(3)]
    if derivative == 0:
        val = 0.5 * xp**2 * chi[0]
    elif derivative == 1:
        val = xp * chi[0] + 0.5 * xp**2 * chi[1]
    elif derivative == 2:
        val = chi[0] + 2 * xp * chi[1] + 0.5 * xp**2 * chi[2]
    else:
        raise ValueError("example1 derivatives are available up to order 2")
    return np.where(pos, val, 0.0)


# ---------------------------------------------------------------------------
# nets


@dataclass(frozen=True)
class NetEntry:
    """Samples of ``a_eps`` with gradient ``(n, *shape)`` and Hessian ``(n, n, *shape)``."""

    eps: float
    omega: float
    a: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    # sup-norms of orders 0..2 measured off-grid near singular points
    refined: Optional[tuple] = None

    @property
    def laplacian_sum(self) -> float:
        """``sum_j ||d_j^2 a||_inf`` (the Glaeser constant M)."""
        n = self.grad.shape[0]
        grid_value = float(sum(np.max(np.abs(self.hess[j, j])) for j in range(n)))
        return grid_value if self.refined is None else max(grid_value, self.refined[2])

    def supnorms(self):
        out = (
            float(np.max(np.abs(self.a))),
            float(max(np.max(np.abs(g)) for g in self.grad)),
            self.laplacian_sum,
        )
        if self.refined is None:
            return out
        return tuple(max(u, v) for u, v in zip(out, self.refined))


@dataclass(frozen=True)
class RegularizedNet:
    field: Optional[CoefficientField]
    kernel: Optional[Mollifier]
    scale: Optional[PositiveScale]
    ladder: np.ndarray
    omegas: np.ndarray
    grid: Optional[Grid]
    entries: tuple
    supnorm_table: np.ndarray

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, j) -> NetEntry:
        return self.entries[j]

    @property
    def dimension(self) -> int:
        return self.entries[0].grad.shape[0]

    @property
    def max_value(self) -> float:
        return float(max(np.max(e.a) for e in self.entries))

    @classmethod
    def from_entries(cls, entries, field=None, kernel=None, scale=None, grid=None):
        entries = tuple(entries)
        table = np.array([e.supnorms() for e in entries])
        return cls(field, kernel, scale,
                   np.array([e.eps for e in entries]), np.array([e.omega for e in entries]),
                   grid, entries, table)

    @classmethod
    def from_samples(cls, a, grad, hess, eps=1.0, omega=1.0, grid=None):
        """Single-entry net from given samples (one-dimensional arrays accepted)."""
        a = np.asarray(a, dtype=float)
        grad = np.asarray(grad, dtype=float)
        hess = np.asarray(hess, dtype=float)
        if grad.shape == a.shape:
            grad = grad[None]
            hess = hess[None, None]
        return cls.from_entries([NetEntry(eps, omega, a, grad, hess)], grid=grid)

    def export_csv(self, directory, prefix="net"):
        """One CSV per eps with columns ``x, a, a', a''`` (one-dimensional nets)."""
        from pathlib import Path

        paths = []
        x = self.grid.axis
        for e in self.entries:
            a = e.a if e.a.ndim == 1 else e.a[:, e.a.shape[1] // 2]
            ax = self.field.axis if self.field is not None else 0
            g = e.grad[ax] if e.a.ndim == 1 else e.grad[ax][:, e.a.shape[1] // 2]
            hh = e.hess[ax, ax] if e.a.ndim == 1 else e.hess[ax, ax][:, e.a.shape[1] // 2]
            path = Path(directory) / f"{prefix}_eps{e.eps:.6e}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x", "a", "da", "d2a"])
                for row in zip(x, a, g, hh):
                    w.writerow([repr(float(v)) for v in row])
            paths.append(path)
        return paths


def _requires_positive(field: CoefficientField, kernel: Mollifier):
    if field.is_distributional and not kernel.is_positive:
        raise ConfigurationError(
            f"{field.kind} coefficient needs a non-negative compact kernel, got {kernel.kind}",
            "regularization.kernel",
        )


def _example1_regularized(field: CoefficientField, kernel: Mollifier, omega, x, derivative,
                          panels=6, order=20):
    """``(a^(d) * phi_omega)(x)`` by Gauss-Legendre on the overlap of supports.

    ``a`` is C^1 and ``a''`` is a bounded jump function, so moving every
    derivative onto ``a`` is exact for ``d <= 2``.
    """
    m = scale_kernel(kernel, omega)
    lo_k = omega * (kernel.offset - kernel.support_radius)
    hi_k = omega * (kernel.offset + kernel.support_radius)
    lo = np.maximum(0.0, x - hi_k)
    hi = np.minimum(field.support_radius, x - lo_k)
    empty = hi <= lo
    hi = np.where(empty, lo + 1.0, hi)
    nodes, weights = leggauss(order)
    edges = lo[:, None] + (hi - lo)[:, None] * np.linspace(0, 1, panels + 1)[None, :]
    mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
    half = 0.5 * (edges[:, 1:] - edges[:, :-1])
    y = mid[..., None] + half[..., None] * nodes
    integrand = field.exact(y, derivative) * m(x[:, None, None] - y)
    out = np.sum(integrand * weights * half[..., None], axis=(1, 2))
    return np.where(empty, 0.0, out)


def regularize_profile(field: CoefficientField, kernel: Mollifier, omega: float, x, k_max=2):
    """``[a_eps, a_eps', a_eps'']`` of a one-dimensional profile on points ``x``."""
    _requires_positive(field, kernel)
    x = np.asarray(x, dtype=float)
    out = []
    for d in range(k_max + 1):
        if field.kind == "constant":
            v = np.full_like(x, field.value if d == 0 else 0.0)
        elif field.kind == "heaviside":
            v = convolve(Heaviside(field.location, field.height), kernel, omega, x, d)
        elif field.kind == "point-mass-sum":
            dist = DistributionSum(tuple(PointMass(l, w) for l, w in zip(field.locations, field.weights)))
            v = convolve(dist, kernel, omega, x, d)
        elif field.kind == "example1":
            v = _example1_regularized(field, kernel, omega, x, d)
        elif field.kind == "smooth":
            v = convolve(field.function, kernel, omega, x, d)
        else:  # sampled
            samples = np.interp(x, *field.table)
            v = convolve(samples, kernel, omega, x, d, periodic=True)
        out.append(np.real_if_close(v, tol=1e6))
    return out


def regularize(field: CoefficientField, kernel: Mollifier, scale: PositiveScale, ladder,
               grid: Grid, k_max: int = 2) -> RegularizedNet:
    """Regularised net ``a_eps = a * phi_omega(eps)`` sampled on ``grid`` for every eps."""
    ladder = np.asarray(ladder, dtype=float)
    omegas = np.atleast_1d(scale(ladder))
    n = grid.dimension
    if field.axis >= n:
        raise ConfigurationError(f"field axis {field.axis} outside a {n}-dimensional grid")
    if field.kind != "constant":
        width = 2.0 * float(np.min(omegas)) * kernel.support_radius * kernel.scale
        if width < 4.0 * grid.spacing:
            raise ResolutionError(
                f"scaled kernel width {width:.3g} spans fewer than 4 cells of size {grid.spacing:.3g}"
            )
    entries = []
    for eps, om in zip(ladder, omegas):
        prof = regularize_profile(field, kernel, float(om), grid.axis, k_max)
        while len(prof) < 3:
            prof.append(np.zeros_like(prof[0]))
        refined = _refined_supnorms(field, kernel, float(om), grid, k_max)
        entries.append(_lift_profile(prof, n, field.axis, float(eps), float(om), refined))
    return RegularizedNet.from_entries(entries, field, kernel, scale, grid)


def _singular_points(field: CoefficientField):
    if field.kind == "heaviside":
        return (field.location,)
    if field.kind == "point-mass-sum":
        return field.locations
    if field.kind == "example1":
        return (0.0,)
    return ()


def _refined_supnorms(field, kernel, omega, grid, k_max, samples=513):
    """Sup-norms on a fine local mesh around the singular support.

    Grid sampling under-estimates ``||a_eps''||`` once the kernel spans
    only a few cells, which would make the Glaeser ratio exceed 1 spuriously.
    """
    points = _singular_points(field)
    if not points:
        return None
    reach = omega * kernel.scale * (kernel.support_radius + abs(kernel.offset))
    lo, hi = grid.axis[0], grid.axis[-1]
    x = np.concatenate([np.linspace(max(lo, p - reach), min(hi, p + reach), samples)
                        for p in points])
    prof = regularize_profile(field, kernel, omega, x, k_max)
    while len(prof) < 3:
        prof.append(np.zeros_like(prof[0]))
    return tuple(float(np.max(np.abs(v))) for v in prof)


def _lift_profile(prof, n, axis, eps, omega, refined=None) -> NetEntry:
    if n == 1:
        return NetEntry(eps, omega, prof[0], prof[1][None], prof[2][None, None], refined)
    shape = (prof[0].size,) * n
    expand = [None] * n
    expand[axis] = slice(None)
    expand = tuple(expand)

    def lift(v):
        return np.broadcast_to(v[expand], shape).copy()

    a = lift(prof[0])
    grad = np.zeros((n,) + shape)
    hess = np.zeros((n, n) + shape)
    grad[axis] = lift(prof[1])
    hess[axis, axis] = lift(prof[2])
    return NetEntry(eps, omega, a, grad, hess, refined)


def stack_nets(nets):
    """Per-eps tuples ``(a_1, ..., a_n)`` from one net per coordinate coefficient."""
    return [tuple(net[j] for net in nets) for j in range(len(nets[0]))]


# ---------------------------------------------------------------------------
# Glaeser


@dataclass(frozen=True)
class GlaeserReport:
    ladder: np.ndarray
    omegas: np.ndarray
    constants: np.ndarray
    ratios: np.ndarray
    floors: np.ndarray
    tolerance: float
    exponent: Optional[PowerFit]

    @property
    def passed(self) -> bool:
        return bool(np.all(self.ratios <= 1.0 + self.tolerance))

    def to_dict(self):
        return {
            "ladder": self.ladder.tolist(),
            "omega": self.omegas.tolist(),
            "M_eps": self.constants.tolist(),
            "rho_eps": self.ratios.tolist(),
            "floor": self.floors.tolist(),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "M_exponent_vs_inverse_omega": None if self.exponent is None else self.exponent.to_dict(),
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def glaeser_ratio(entry: NetEntry, floor=None):
    """Worst ``|d_i a|^2 / (2 M a + floor)`` over the grid and all i; returns (rho, M, floor)."""
    M = entry.laplacian_sum
    a = np.real(entry.a)
    if floor is None:
        floor = 1e-14 * float(np.max(np.abs(a)))
    denom = 2.0 * M * a + floor
    rho = 0.0
    for g in entry.grad:
        num = np.abs(g) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(denom > 0, num / denom, np.where(num > 0, np.inf, 0.0))
        rho = max(rho, float(np.max(r)))
    return rho, M, floor


def glaeser_check(net: RegularizedNet, tolerance=1e-6, floor=None, strict=True) -> GlaeserReport:
    """Verify ``|d a_eps|^2 <= 2 M_eps a_eps`` on every net entry.

    ``floor=0`` demands strict pointwise verification away from zeros of a.
    """
    rhos, Ms, floors = [], [], []
    for e in net:
        rho, M, fl = glaeser_ratio(e, floor)
        rhos.append(rho)
        Ms.append(M)
        floors.append(fl)
    Ms = np.array(Ms)
    fit = None
    inv = 1.0 / np.asarray(net.omegas)
    if len(net) >= 4 and np.ptp(np.log(inv)) > 1e-12 and np.all(Ms > 0):
        fit = loglog_fit(inv, Ms)
    report = GlaeserReport(np.asarray(net.ladder), np.asarray(net.omegas), Ms,
                           np.array(rhos), np.array(floors), tolerance, fit)
    if strict and not report.passed:
        j = int(np.argmax(report.ratios))
        raise GlaeserViolation(
            f"rho={report.ratios[j]:.6g} > 1 + {tolerance} at eps={report.ladder[j]:.4g}"
        )
    return report


def supnorm_exponent_fit(net: RegularizedNet, order: int) -> PowerFit:
    """Slope of ``log ||d^order a_eps||_inf`` against ``log(1/omega)``."""
    if not 0 <= order <= 2:
        raise ValueError("order must be 0, 1 or 2")
    norms = net.supnorm_table[:, order]
    labels = [f"eps={e:.4g}" for e in net.ladder]
    return loglog_fit(1.0 / np.asarray(net.omegas), norms, labels)
