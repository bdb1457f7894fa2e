"""Energies, Sobolev norms, asymptotic fits and the quantitative verdicts.

Sobolev convention: on a grid with N points per axis and spacing h,

    ||u||_{H^k}^2 = (h^n / N^n) sum_xi (1 + |xi|^2)^k |fft(u)(xi)|^2,

so ``||u||_{H^0}`` equals the grid L^2 norm ``sqrt(h^n sum |u|^2)`` exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .coefficients import CoefficientField, NetEntry, regularize
from .errors import ConfigurationError, FitError, ResolutionError
from .fitting import PowerFit, loglog_fit
from .grid import Grid
from .mollifier import Mollifier, PositiveScale, convolve
from .solver import SolveTrace, StateTrajectory, dalembert_oracle, solve, solve_ladder, state_vector


class AliasingWarning(UserWarning):
    """Top Sobolev norm dominated by the highest resolved frequencies."""


# ---------------------------------------------------------------------------
# energy and Gronwall


@dataclass(frozen=True)
class EnergyTrace:
    times: np.ndarray
    E: np.ndarray
    kinetic: np.ndarray  # ||U_{n+1}||^2
    M: float
    n: int
    forcing_integral: np.ndarray  # int_0^t ||f||^2

    @property
    def c(self) -> float:
        return max(2.0 * self.M, float(self.n + 1))

    @property
    def bound(self) -> np.ndarray:
        return (self.E[0] + self.forcing_integral) * np.exp(self.c * self.times)

    def to_rows(self):
        return [(float(t), float(e), float(k), float(b))
                for t, e, k, b in zip(self.times, self.E, self.kinetic, self.bound)]


def _coefficient_arrays(coefficients, grid: Grid):
    out = []
    for a in coefficients:
        a = a.a if isinstance(a, NetEntry) else a
        a = np.asarray(a)
        if a.ndim == 0:
            a = np.full(grid.shape, float(a))
        if a.shape != grid.shape:
            raise ConfigurationError(f"coefficient of shape {a.shape} does not match grid {grid.shape}")
        out.append(a)
    return out


def energy(state: StateTrajectory, coefficients, grid: Grid, M: float = 0.0,
           forcing_norms=None) -> EnergyTrace:
    """``E(t) = sum_i (a_i U_i, U_i) + ||U_{n+1}||^2`` at every checkpoint."""
    n = grid.dimension
    if state.U.shape[1] != n + 1 or state.U.shape[2:] != grid.shape:
        raise ConfigurationError("state and grid disagree")
    a = _coefficient_arrays(coefficients, grid)
    if len(a) != n:
        raise ConfigurationError(f"need {n} coefficients")
    vol = grid.cell_volume
    axes = tuple(range(1, 1 + n))
    kinetic = vol * np.sum(np.abs(state.U[:, n]) ** 2, axis=axes)
    potential = sum(vol * np.sum(np.real(a[i]) * np.abs(state.U[:, i]) ** 2, axis=axes)
                    for i in range(n))
    E = potential + kinetic
    if np.any(kinetic > E * (1 + 1e-12) + 1e-300):
        raise ConfigurationError("energy fell below the kinetic part: coefficients negative?")
    if forcing_norms is None:
        fint = np.zeros_like(E)
    else:
        fint = cumulative_trapezoid(np.asarray(forcing_norms) ** 2, state.times, initial=0.0)
    return EnergyTrace(state.times, E, kinetic, float(M), n, fint)


def trace_energy(trace: SolveTrace, M: float = 0.0) -> EnergyTrace:
    return energy(state_vector(trace), trace.coefficients, trace.grid, M, trace.forcing_norms)


@dataclass(frozen=True)
class GronwallResult:
    passed: bool
    c: float
    worst_time: float
    worst_ratio: float  # max E / bound
    tolerance: float
    differential_excess: float  # max (dE/dt - cE - |f|^2) / max E, should be <= 0

    @property
    def margin(self) -> float:
        return 1.0 + self.tolerance - self.worst_ratio

    def to_dict(self):
        return dict(self.__dict__, margin=self.margin)


def gronwall_check(E, M: float = None, n: int = None, forcing_norms=None, times=None,
                   tol: float = 0.05, min_checkpoints: int = 32) -> GronwallResult:
    """``E(t) <= (E(0) + int ||f||^2) e^{ct}`` with ``c = max(2M, n + 1)``.

    ``E`` is an EnergyTrace or raw energies (then ``times``, ``M`` and ``n``
    are required).
    """
    if isinstance(E, EnergyTrace):
        times, values = E.times, E.E
        M = E.M if M is None else M
        n = E.n if n is None else n
        fint = E.forcing_integral if forcing_norms is None else None
    else:
        values = np.asarray(E, dtype=float)
        times = np.asarray(times, dtype=float)
        fint = None
    if fint is None:
        fint = (np.zeros_like(values) if forcing_norms is None else
                cumulative_trapezoid(np.asarray(forcing_norms) ** 2, times, initial=0.0))
        f2 = np.zeros_like(values) if forcing_norms is None else np.asarray(forcing_norms) ** 2
    else:
        f2 = np.gradient(fint, times) if len(times) > 1 else np.zeros_like(values)
    if len(times) < min_checkpoints:
        raise ResolutionError(f"need at least {min_checkpoints} checkpoints, got {len(times)}")
    c = max(2.0 * M, float(n + 1))
    bound = (values[0] + fint) * np.exp(c * times)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, values / bound, np.where(values > 0, np.inf, 0.0))
    j = int(np.argmax(ratio))
    dE = np.gradient(values, times, edge_order=1)
    scale = max(float(np.max(np.abs(values))), 1e-300)
    excess = float(np.max(dE - c * values - f2)) / scale
    return GronwallResult(bool(ratio[j] <= 1.0 + tol), c, float(times[j]), float(ratio[j]),
                          tol, excess)


@dataclass(frozen=True)
class IntegralGronwallResult:
    passed: bool
    constant: float  # sup_t y(t) / (phi(0) + int psi)
    worst_time: float
    worst_ratio: float  # max phi / y
    envelope: np.ndarray


def gronwall_integral_check(phi, psi, times, C1: float, C2: float, tol: float = 0.05,
                            min_checkpoints: int = 32) -> IntegralGronwallResult:
    """Compare ``phi`` with the solution of ``y' = C1 y + C2 int_0^t y + psi``, ``y(0) = phi(0)``.

    The comparison solution is the sharpest envelope allowed by the
    hypothesis ``phi' <= C1 phi + C2 int phi + psi`` (C2 >= 0, psi >= 0).
    """
    times = np.asarray(times, dtype=float)
    phi = np.asarray(phi, dtype=float)
    psi = np.zeros_like(times) if psi is None else np.asarray(psi, dtype=float)
    if len(times) < min_checkpoints:
        raise ResolutionError(f"need at least {min_checkpoints} checkpoints, got {len(times)}")
    if C2 < 0 or np.any(psi < 0):
        raise ConfigurationError("the comparison argument needs C2 >= 0 and psi >= 0")

    def rhs(t, z):
        return [C1 * z[0] + C2 * z[1] + np.interp(t, times, psi), z[0]]

    sol = solve_ivp(rhs, (times[0], times[-1]), [phi[0], 0.0], t_eval=times, method="DOP853",
                    rtol=1e-11, atol=1e-14)
    y = sol.y[0]
    base = phi[0] + np.concatenate([[0.0], np.cumsum(0.5 * (psi[1:] + psi[:-1]) * np.diff(times))])
    with np.errstate(divide="ignore", invalid="ignore"):
        constant = float(np.max(np.where(base > 0, y / base, 0.0)))
        ratio = np.where(y > 0, phi / y, np.where(phi > 0, np.inf, 0.0))
    j = int(np.argmax(ratio))
    return IntegralGronwallResult(bool(ratio[j] <= 1 + tol), constant, float(times[j]),
                                  float(ratio[j]), y)


# ---------------------------------------------------------------------------
# Sobolev norms


def sobolev_norm(u, grid: Grid, k: float, warn: bool = False) -> float:
    """``||u||_{H^k}`` under the module convention (Parseval exact for k = 0)."""
    n = grid.dimension
    axes = tuple(range(u.ndim - n, u.ndim))
    uh = np.fft.fftn(u, axes=axes)
    xi2 = sum(kk**2 for kk in grid.wavenumbers)
    weight = (1.0 + xi2) ** k
    dens = weight * np.abs(uh) ** 2
    total = float(np.sum(dens)) * grid.cell_volume / grid.points**n
    if warn and total > 0:
        kmax = math.pi / grid.spacing
        top = np.sqrt(xi2) > (2.0 / 3.0) * kmax
        frac = float(np.sum(dens[..., top])) * grid.cell_volume / grid.points**n / total
        if frac > 1e-2:
            warnings.warn(f"H^{k} norm has {frac:.1%} of its mass in the top third of the spectrum",
                          AliasingWarning, stacklevel=2)
    return math.sqrt(total)


@dataclass(frozen=True)
class SobolevTable:
    times: np.ndarray
    orders: tuple
    norms: np.ndarray  # (len(times), len(orders))

    def sup_over_time(self):
        return np.max(self.norms, axis=0)


def sobolev_norms(trace: SolveTrace, k_max: int = 4, warn: bool = True) -> SobolevTable:
    orders = tuple(range(k_max + 1))
    table = np.zeros((len(trace.times), len(orders)))
    for j in range(len(trace.times)):
        for i, k in enumerate(orders):
            table[j, i] = sobolev_norm(trace.u[j], trace.grid, k, warn=warn and k == k_max and j == len(trace.times) - 1)
    return SobolevTable(trace.times, orders, table)


def sobolev_estimate_ratio(trace: SolveTrace, g0, g1=None, k: int = 0, forcing_sobolev=None):
    """``||u(t)||^2_{H^{k+1}} / (||g0||^2_{H^{k+2}} + ||g1||^2_{H^{k+1}} + int ||f||^2_{H^{k+1}})``."""
    grid = trace.grid
    denom = sobolev_norm(np.asarray(g0), grid, k + 2) ** 2
    if g1 is not None:
        denom += sobolev_norm(np.asarray(g1), grid, k + 1) ** 2
    fint = 0.0
    if forcing_sobolev is not None:
        fint = cumulative_trapezoid(np.asarray(forcing_sobolev) ** 2, trace.times, initial=0.0)
    num = np.array([sobolev_norm(u, grid, k + 1) ** 2 for u in trace.u])
    return num / (denom + fint)


# ---------------------------------------------------------------------------
# asymptotic fits


@dataclass(frozen=True)
class ModeratenessFit:
    ladder: np.ndarray
    norms: np.ndarray
    kind: str
    fit: PowerFit
    cap: Optional[float] = None
    q: Optional[float] = None

    @property
    def slope(self) -> float:
        return self.fit.slope

    @property
    def residual(self) -> float:
        return self.fit.residual

    @property
    def verdict(self) -> str:
        if self.q is not None and self.slope <= -self.q + 1e-9:
            return "negligible-trend"
        if self.cap is not None and self.slope > self.cap:
            return "exceeds-cap"
        return "moderate"

    def to_dict(self):
        return {
            "kind": self.kind,
            "ladder": self.ladder.tolist(),
            "norms": self.norms.tolist(),
            "slope": self.slope,
            "intercept": self.fit.intercept,
            "residual": self.residual,
            "cap": self.cap,
            "q": self.q,
            "verdict": self.verdict,
        }


def moderateness_fit(ladder, norms, kind: str = "L2", cap: Optional[float] = None,
                     q: Optional[float] = None) -> ModeratenessFit:
    """Slope ``N`` of ``log ||u_eps||`` against ``log(1/eps)`` (``||u_eps|| ~ eps^-N``)."""
    ladder = np.asarray(ladder, dtype=float)
    norms = np.asarray(norms, dtype=float)
    labels = [f"eps={e:.4g}" for e in ladder]
    fit = loglog_fit(1.0 / ladder, norms, labels)
    return ModeratenessFit(ladder, norms, kind, fit, cap, q)


def decay_order(ladder, errors) -> PowerFit:
    """Order p in ``error ~ eps^p``."""
    ladder = np.asarray(ladder, dtype=float)
    return loglog_fit(ladder, errors, [f"eps={e:.4g}" for e in ladder])


def convergence_order(errors, refinement: float = 2.0) -> np.ndarray:
    """Observed orders ``log(e_j / e_{j+1}) / log(r)`` for successive refinements."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / math.log(refinement)


def richardson_order(coarse, medium, fine, refinement: float = 2.0) -> float:
    """Order from three nested solutions without a reference: ``log(|c-m| / |m-f|) / log r``."""
    return math.log(np.linalg.norm(coarse - medium) / np.linalg.norm(medium - fine)) / math.log(refinement)


# ---------------------------------------------------------------------------
# data regularisation


def regularize_data(g, kernel: Mollifier, eps: float, grid: Grid):
    """``g * kernel_eps`` on a periodic grid via the kernel's Fourier multiplier.

    ``g`` is a callable, samples, None (zero data), or an object with its
    own ``regularized(kernel, eps, grid)`` method (distributional data).
    """
    if g is None:
        return np.zeros(grid.shape)
    if hasattr(g, "regularized"):
        return g.regularized(kernel, eps, grid)
    samples = np.asarray(g(*grid.coords)) if callable(g) else np.asarray(g)
    if grid.dimension == 1:
        return convolve(samples, kernel, eps, grid.axis, periodic=True)
    # separable tensor kernel, one axis at a time
    out = samples
    for ax in range(grid.dimension):
        out = np.apply_along_axis(lambda row: convolve(row, kernel, eps, grid.axis, periodic=True), ax, out)
    return out


def data_regularization_error(g, kernel: Mollifier, ladder, grid: Grid, k: int = 2):
    """``||g * psi_eps - g||_{H^k}`` along the ladder."""
    exact = np.asarray(g(*grid.coords)) if callable(g) else np.asarray(g)
    return np.array([sobolev_norm(regularize_data(exact, kernel, e, grid) - exact, grid, k)
                     for e in ladder])


# ---------------------------------------------------------------------------
# consistency


@dataclass
class ConsistencyReport:
    ladder: np.ndarray
    reference: str  # dalembert | numerical | no-oracle
    errors: np.ndarray  # (len(ladder), 3): sup_t ||u_eps - u_ref||_{H^k}, k = 0, 1, 2
    floor: np.ndarray  # same norms for the solve with exact data and coefficients
    data_errors: np.ndarray  # ||g0_eps - g0||_{H^2}
    data_fit: Optional[PowerFit]
    error_fit: Optional[PowerFit]

    def monotone(self, k: int = 0, rtol: float = 1e-3) -> bool:
        e = self.errors[:, k]
        slack = rtol * self.floor[k]
        return bool(np.all(np.diff(e) <= slack))

    def reaches_floor(self, k: int = 0, rtol: float = 0.1) -> bool:
        return bool(abs(self.errors[-1, k] - self.floor[k]) <= rtol * self.floor[k])

    def to_dict(self):
        return {
            "ladder": self.ladder.tolist(),
            "reference": self.reference,
            "errors_H0_H1_H2": self.errors.tolist(),
            "floor_H0_H1_H2": self.floor.tolist(),
            "data_errors_H2": self.data_errors.tolist(),
            "data_order": None if self.data_fit is None else self.data_fit.slope,
            "error_order": None if self.error_fit is None else self.error_fit.slope,
            "monotone_L2": self.monotone(0),
            "reaches_floor_L2": self.reaches_floor(0),
        }


def _sup_sobolev(diff_stack, grid, orders=(0, 1, 2)):
    return np.array([max(sobolev_norm(d, grid, k) for d in diff_stack) for k in orders])


def consistency_test(field: CoefficientField, kernel: Mollifier, data_kernel: Mollifier,
                     ladder, grid: Grid, g0: Callable, g1: Optional[Callable] = None,
                     scale: Optional[PositiveScale] = None, g1_antiderivative=None,
                     reference_grid: Optional[Grid] = None) -> ConsistencyReport:
    """``sup_t ||u_eps - u||_{H^k}`` for a smooth coefficient along the ladder.

    For constant coefficients the reference is d'Alembert; for smooth
    fields it is a solve on a refined grid (``reference_grid``) with
    unregularised data; otherwise a "no-oracle" self-reference (the finest
    ladder member) is used.
    """
    if not field.is_smooth:
        raise ConfigurationError("consistency requires a smooth coefficient field")
    if grid.dimension != 1:
        raise ConfigurationError("consistency_test is implemented in one dimension")
    ladder = np.asarray(ladder, dtype=float)
    scale = scale or PositiveScale("power", 1.0)
    x = grid.axis
    if field.kind == "constant":
        coeff_sets = [[np.full(grid.shape, field.value)] for _ in ladder]
        exact_coeff = [np.full(grid.shape, field.value)]
    else:
        net = regularize(field, kernel, scale, ladder, grid, k_max=0)
        coeff_sets = [[e.a] for e in net]
        exact_coeff = [field.exact(x)] if field.kind == "smooth" else [field.exact(x)]
    g0s = [regularize_data(g0, data_kernel, e, grid) for e in ladder]
    g1s = [regularize_data(g1, data_kernel, e, grid) if g1 is not None else None for e in ladder]
    exact_g0 = g0(x)
    exact_g1 = g1(x) if g1 is not None else None
    sweep = solve_ladder(coeff_sets + [exact_coeff], grid, g0s + [exact_g0], g1s + [exact_g1],
                         ladder=list(ladder) + [0.0])
    exact_run = sweep[len(ladder)]
    times = exact_run.times
    if field.kind == "constant":
        reference = "dalembert"
        ref = np.stack([dalembert_oracle(field.value, g0, g1, t, x, g1_antiderivative) for t in times])
    elif reference_grid is not None:
        reference = "numerical"
        fine = solve([field.exact(reference_grid.axis)], reference_grid, g0(reference_grid.axis),
                     g1(reference_grid.axis) if g1 is not None else None)
        ref = np.stack([np.interp(x, reference_grid.axis, np.real(fine.at(t))) for t in times])
    else:
        reference = "no-oracle"
        ref = exact_run.u
    errors = np.stack([_sup_sobolev(tr.u - ref, grid) for tr in sweep.traces[: len(ladder)]])
    floor = _sup_sobolev(exact_run.u - ref, grid)
    data_err = np.array([sobolev_norm(g - exact_g0, grid, 2) for g in g0s])
    data_fit = _safe_fit(ladder, data_err)
    excess = np.maximum(errors[:, 0] - floor[0], 0.0)
    error_fit = _safe_fit(ladder, excess)
    return ConsistencyReport(ladder, reference, errors, floor, data_err, data_fit, error_fit)


def _safe_fit(ladder, values, floor=1e-14):
    """Decay fit over the ladder points still above the roundoff floor."""
    values = np.asarray(values)
    keep = values > floor * max(1.0, float(np.max(values)))
    if keep.sum() < 4:
        return None
    try:
        return decay_order(np.asarray(ladder)[keep], values[keep])
    except FitError:
        return None


# ---------------------------------------------------------------------------
# mollifier sensitivity


@dataclass
class SensitivityReport:
    kernels: tuple
    ladder: np.ndarray
    omegas: np.ndarray
    times: np.ndarray
    differences: np.ndarray  # (len(ladder), len(times)) ||u_eps - u~_eps||_{L^2}
    # fits are decay orders p in value ~ eps^p (positive p: decreasing as eps -> 0)
    mode: str  # example1 | heaviside | generic
    envelope: Optional[np.ndarray] = None  # omega^2 lambda
    lam: Optional[np.ndarray] = None
    data_exponent: Optional[float] = None
    N: Optional[int] = None
    difference_fit: Optional[PowerFit] = None
    envelope_ratio_fit: Optional[PowerFit] = None
    envelope_constant: Optional[float] = None
    moderateness: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def sup_differences(self):
        return np.max(self.differences, axis=1)

    @property
    def converging(self) -> bool:
        if self.difference_fit is None:
            return bool(np.all(self.sup_differences == 0))
        return self.difference_fit.identically_zero or self.difference_fit.slope > 0

    @property
    def within_envelope(self) -> Optional[bool]:
        if self.envelope_ratio_fit is None:
            return None
        return self.envelope_ratio_fit.identically_zero or -self.envelope_ratio_fit.slope <= 0.1

    @property
    def slope_gap(self) -> Optional[float]:
        if len(self.moderateness) != 2:
            return None
        return abs(self.moderateness[0].slope - self.moderateness[1].slope)

    def to_dict(self):
        out = {
            "kernels": list(self.kernels),
            "mode": self.mode,
            "ladder": self.ladder.tolist(),
            "omega": self.omegas.tolist(),
            "sup_t_difference_L2": self.sup_differences.tolist(),
            "converging": self.converging,
        }
        if self.difference_fit is not None:
            out["difference_slope_vs_log_inv_eps"] = -self.difference_fit.slope
            out["difference_fit_residual"] = self.difference_fit.residual
        if self.envelope is not None:
            out.update(
                envelope=self.envelope.tolist(),
                lam=self.lam.tolist(),
                data_exponent=self.data_exponent,
                N=self.N,
                envelope_constant=self.envelope_constant,
                envelope_ratio_slope=None if self.envelope_ratio_fit is None else -self.envelope_ratio_fit.slope,
                within_envelope=self.within_envelope,
            )
        if self.moderateness:
            out["moderateness"] = [m.to_dict() for m in self.moderateness]
            out["slope_gap"] = self.slope_gap
        out.update(self.extra)
        return out


def data_norm_growth(g0s, g1s, grid: Grid, forcing_h2_integrals=None):
    """``Lambda(eps) = ||g0||^2_{H^3} + ||g1||^2_{H^2} + int ||f||^2_{H^2}`` per ladder point."""
    out = []
    for j, g in enumerate(g0s):
        v = sobolev_norm(g, grid, 3) ** 2
        if g1s is not None and g1s[j] is not None:
            v += sobolev_norm(g1s[j], grid, 2) ** 2
        if forcing_h2_integrals is not None:
            v += forcing_h2_integrals[j]
        out.append(v)
    return np.array(out)


def second_derivative_norms(trace: SolveTrace) -> np.ndarray:
    """``||d_x^2 u(t)||_{L^2}`` at every checkpoint (spectral)."""
    grid = trace.grid
    k2 = sum(kk**2 for kk in grid.wavenumbers)
    out = []
    for u in trace.u:
        uh = np.fft.fftn(u)
        out.append(math.sqrt(float(np.sum(k2**2 * np.abs(uh) ** 2)) * grid.cell_volume / grid.points**grid.dimension))
    return np.array(out)


def example1_scale(data_exponent: float, tolerance: float = 0.05) -> tuple:
    """``N = max(0, ceil(slope - tol))`` and the scale ``omega = eps^((N + 1) / 2)``."""
    N = max(0, int(math.ceil(data_exponent - tolerance)))
    return N, PositiveScale("power", (N + 1) / 2.0)


def mollifier_sensitivity(field: CoefficientField, kernel: Mollifier, other: Mollifier,
                          data_kernel: Mollifier, scale: Optional[PositiveScale], ladder,
                          grid: Grid, g0, g1=None, workers: int = 1) -> SensitivityReport:
    """Compare the solution nets obtained with two coefficient mollifiers.

    Example 1: when ``scale`` is None the scale ``omega^2 = eps^(N+1)`` is
    chosen from the measured growth exponent N of the data norms, and the
    differences are compared with ``omega^2 lambda``, where ``lambda`` is
    the measured ``sup_t ||d_x^2 u~_eps||^2``.
    Heaviside (and other fields): moderateness slopes of ``sup_t ||u_eps||``
    for both kernels are reported side by side.
    """
    if field.is_distributional and not (kernel.is_positive and other.is_positive):
        raise ConfigurationError("distributional coefficients need two positive bump kernels",
                                 "regularization.kernels")
    ladder = np.asarray(ladder, dtype=float)
    g0s = [regularize_data(g0, data_kernel, e, grid) for e in ladder]
    g1s = [regularize_data(g1, data_kernel, e, grid) if g1 is not None else None for e in ladder]
    mode = "example1" if field.kind == "example1" else ("heaviside" if field.kind == "heaviside" else "generic")
    data_exponent = N = None
    lam_growth = None
    if scale is None:
        lam_growth = data_norm_growth(g0s, g1s, grid)
        data_exponent = moderateness_fit(ladder, lam_growth, "data-H3").slope
        N, scale = example1_scale(data_exponent)
    net = regularize(field, kernel, scale, ladder, grid, k_max=0)
    net2 = regularize(field, other, scale, ladder, grid, k_max=0)
    sets = [[e.a] for e in net] + [[e.a] for e in net2]
    sweep = solve_ladder(sets, grid, g0s + g0s, g1s + g1s, ladder=list(ladder) * 2, workers=workers)
    m = len(ladder)
    first, second = sweep.traces[:m], sweep.traces[m:]
    diffs = np.array([[grid.norm(a - b) for a, b in zip(t1.u, t2.u)] for t1, t2 in zip(first, second)])
    sup_diff = diffs.max(axis=1)
    diff_fit = None
    if np.any(sup_diff > 0):
        diff_fit = decay_order(ladder, sup_diff)
    sup_norms = [np.array([grid.norm(u) for u in tr.u]).max() for tr in first]
    sup_norms2 = [np.array([grid.norm(u) for u in tr.u]).max() for tr in second]
    mods = (moderateness_fit(ladder, sup_norms, "sup_t L2"), moderateness_fit(ladder, sup_norms2, "sup_t L2"))
    report = SensitivityReport((kernel.identifier, other.identifier), ladder, np.asarray(net.omegas),
                               sweep[0].times, diffs, mode, moderateness=mods,
                               difference_fit=diff_fit, data_exponent=data_exponent, N=N)
    if mode == "example1":
        lam = np.array([second_derivative_norms(tr).max() ** 2 for tr in second])
        envelope = np.asarray(net.omegas) ** 2 * lam
        report.lam, report.envelope = lam, envelope
        ratio = sup_diff**2 / envelope
        report.envelope_constant = float(np.max(ratio))
        if np.any(ratio > 0):
            report.envelope_ratio_fit = decay_order(ladder, ratio)
        if lam_growth is not None:
            report.extra["data_norm_growth"] = lam_growth.tolist()
    report.extra["scale"] = scale.identifier
    return report


def heaviside_bound(T: float, kernel: Mollifier, slack: float = 0.5) -> float:
    """Moderateness cap ``2 T ||phi'||_inf + slack`` for the sqrt-log scale."""
    return 2.0 * T * kernel.derivative_supnorm(1) + slack
