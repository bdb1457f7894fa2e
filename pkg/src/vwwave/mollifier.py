"""Mollifiers, positive scales and regularisation by convolution.

Two kernel families are provided:

* ``compact-bump``: ``C * exp(-s / (1 - (x/R)**2))`` on ``|x| < R``, non-negative,
  normalised by quadrature.
* ``vanishing-moments``: inverse Fourier transform of a smooth plateau
  ``chi_hat`` that is identically 1 on ``[-w, w]``.  All moments of order >= 1
  vanish analytically; the kernel is Schwartz, so it is truncated at a radius
  where the discarded mass is certified below ``1e-10``.

Fourier convention: ``phi_hat(xi) = int phi(x) exp(-i x xi) dx``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BPoly

from .errors import (
    ConstructionError,
    DomainError,
    ResolutionError,
    UnsupportedDistributionError,
)

TAIL_MASS_LIMIT = 1e-10


# ---------------------------------------------------------------------------
# unit bump and its normalised antiderivative


def _bump_raw(r, sharpness=1.0, derivative=0):
    """exp(-s/(1-r^2)) and its first two r-derivatives, zero outside (-1, 1)."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    ri = r[inside]
    q = 1.0 - ri * ri
    val = np.exp(-sharpness / q)
    if derivative == 0:
        out[inside] = val
    elif derivative == 1:
        out[inside] = val * (-2.0 * sharpness * ri / q**2)
    elif derivative == 2:
        g1 = -2.0 * sharpness * ri / q**2
        g2 = -2.0 * sharpness * (1.0 + 3.0 * ri * ri) / q**3
        out[inside] = val * (g1 * g1 + g2)
    else:
        raise ValueError("bump derivatives are available up to order 2")
    return out


@lru_cache(maxsize=None)
def _bump_mass(sharpness=1.0, panels=512, order=12):
    """Integral of the raw unit bump, panel Gauss-Legendre."""
    nodes, weights = leggauss(order)
    edges = np.linspace(-1.0, 1.0, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    return float(np.sum(_bump_raw(pts, sharpness) * weights[None, :] * half[:, None]))


@lru_cache(maxsize=None)
def _bump_cdf(sharpness=1.0, knots=4097):
    """Quintic Hermite interpolant of the normalised bump antiderivative on [-1, 1]."""
    t = np.linspace(-1.0, 1.0, knots)
    nodes, weights = leggauss(12)
    half = 0.5 * (t[1] - t[0])
    mid = 0.5 * (t[1:] + t[:-1])
    pts = mid[:, None] + half * nodes[None, :]
    panel = np.sum(_bump_raw(pts, sharpness) * weights[None, :], axis=1) * half
    mass = _bump_mass(sharpness)
    cum = np.concatenate([[0.0], np.cumsum(panel)]) / mass
    cum /= cum[-1]
    d1 = _bump_raw(t, sharpness) / mass
    d2 = _bump_raw(t, sharpness, 1) / mass
    return BPoly.from_derivatives(t, np.column_stack([cum, d1, d2]))


def bump_step(t, derivative=0, sharpness=1.0):
    """Smooth monotone step: 0 for t <= -1, 1 for t >= 1, bump antiderivative between."""
    t = np.asarray(t, dtype=float)
    if derivative == 0:
        cdf = _bump_cdf(sharpness)
        out = np.where(t >= 1.0, 1.0, 0.0)
        inside = np.abs(t) < 1.0
        out[inside] = cdf(t[inside])
        return out
    return _bump_raw(t, sharpness, derivative - 1) / _bump_mass(sharpness)


def bump_plateau(x, plateau_radius=1.0, support_radius=2.0, derivative=0):
    """C-infinity cutoff: 1 on |x| <= plateau_radius, 0 on |x| >= support_radius."""
    x = np.asarray(x, dtype=float)
    width = support_radius - plateau_radius
    if width <= 0:
        raise ValueError("support_radius must exceed plateau_radius")
    u = 1.0 - 2.0 * (np.abs(x) - plateau_radius) / width
    if derivative == 0:
        return bump_step(u)
    if derivative == 1:
        return bump_step(u, 1) * (-2.0 / width) * np.sign(x)
    if derivative == 2:
        return bump_step(u, 2) * (2.0 / width) ** 2
    raise ValueError("plateau derivatives are available up to order 2")


def smooth_step(s):
    """Closed-form C-infinity step on [0, 1]: exp(-1/s) / (exp(-1/s) + exp(-1/(1-s)))."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def plateau_cutoff(xi, width, left_transition=None, right_transition=None):
    """Frequency cutoff equal to 1 on [-width, width], vanishing past the transitions."""
    xi = np.asarray(xi, dtype=float)
    tl = width if left_transition is None else left_transition
    tr = width if right_transition is None else right_transition
    out = np.ones_like(xi)
    right = xi > width
    left = xi < -width
    out[right] = smooth_step((width + tr - xi[right]) / tr)
    out[left] = smooth_step((xi[left] + width + tl) / tl)
    return out


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class Mollifier:
    """Immutable unit-mass kernel together with its quadrature certificate.

    ``samples`` hold the one-dimensional profile (already including the
    ``scale**-1`` factor of the current scaling).  In ``dimension`` n the kernel
    is the tensor product of n profiles, so its mass factor is ``scale**-n``.
    """

    kind: str
    support_radius: float
    grid_spacing: float
    x: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    moment_table: np.ndarray
    tolerance: float
    scale: float = 1.0
    dimension: int = 1
    sharpness: float = 1.0
    offset: float = 0.0
    cutoff_width: float = float("nan")
    left_transition: float = float("nan")
    right_transition: float = float("nan")
    tail_mass: float = 0.0
    name: str = ""

    def __post_init__(self):
        for arr in (self.x, self.samples, self.moment_table):
            arr.setflags(write=False)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.samples)

    @property
    def is_positive(self) -> bool:
        return self.kind == "compact-bump"

    @property
    def identifier(self) -> str:
        if self.name:
            return self.name
        if self.kind == "compact-bump":
            tag = f"bump-R{self.support_radius:g}-s{self.sharpness:g}"
            return tag if self.offset == 0 else f"{tag}-c{self.offset:g}"
        return f"vm-w{self.cutoff_width:g}"

    # -- evaluation ---------------------------------------------------------

    def profile(self, x, derivative=0):
        """Unscaled (omega = 1) one-dimensional profile and its derivatives."""
        x = np.asarray(x, dtype=float)
        if self.kind == "compact-bump":
            R = self.support_radius
            norm = 1.0 / (R * _bump_mass(self.sharpness))
            r = (x - self.offset) / R
            return _bump_raw(r, self.sharpness, derivative) * norm / R**derivative
        return _vm_profile(
            x,
            self.cutoff_width,
            self.left_transition,
            self.right_transition,
            self.support_radius,
            derivative,
        )

    def __call__(self, x, derivative=0):
        """Evaluate the scaled profile ``scale**-(1+d) * profile^(d)(x/scale)``."""
        w = self.scale
        return self.profile(np.asarray(x, dtype=float) / w, derivative) / w ** (1 + derivative)

    def fourier(self, xi):
        """Fourier transform of the scaled one-dimensional profile at ``xi``."""
        xi = np.asarray(xi, dtype=float)
        arg = xi * self.scale
        if self.kind == "vanishing-moments":
            return _vm_cutoff(arg, self.cutoff_width, self.left_transition, self.right_transition)
        base_x = self.x / self.scale
        base = self.samples * self.scale
        h = self.grid_spacing / self.scale
        flat = arg.reshape(-1)
        out = np.empty(flat.shape, dtype=complex)
        for start in range(0, flat.size, 512):
            chunk = flat[start : start + 512]
            out[start : start + 512] = h * np.exp(-1j * np.outer(chunk, base_x)) @ base
        out = out.reshape(arg.shape)
        # a centred bump is even, so its transform is real up to roundoff
        return out.real if self.offset == 0 else out

    def antiderivative(self, x):
        """``int_{-inf}^{x} phi_scale``; only available for compact bumps."""
        if self.kind != "compact-bump":
            raise UnsupportedDistributionError(
                "Heaviside fast path requires a compact-bump kernel"
            )
        r = (np.asarray(x, dtype=float) / self.scale - self.offset) / self.support_radius
        return bump_step(r, 0, self.sharpness)

    def derivative_supnorm(self, order=1):
        """Sup-norm of ``phi^(order)`` for the current scale, on a fine grid."""
        r = (self.offset + np.linspace(-self.support_radius, self.support_radius, 20001)) * self.scale
        return float(np.max(np.abs(self(r, order))))


def _vm_cutoff(xi, width, tl, tr):
    return plateau_cutoff(xi, width, tl, tr)


def _vm_profile(x, width, tl, tr, radius, derivative=0, nodes=4096):
    lo, hi = -(width + tl), width + tr
    xi = np.linspace(lo, hi, nodes)
    dxi = xi[1] - xi[0]
    weight = plateau_cutoff(xi, width, tl, tr) * (1j * xi) ** derivative
    weight[0] *= 0.5
    weight[-1] *= 0.5
    flat = x.reshape(-1)
    out = np.zeros(flat.shape, dtype=complex)
    inside = np.abs(flat) <= radius
    idx = np.nonzero(inside)[0]
    for start in range(0, idx.size, 256):
        sel = idx[start : start + 256]
        out[sel] = np.exp(1j * np.outer(flat[sel], xi)) @ weight * dxi / (2 * np.pi)
    out = out.reshape(x.shape)
    if tl == tr:
        return out.real
    return out


def _moments(x, samples, h, p_max):
    return np.array([h * np.sum(x**k * samples) for k in range(p_max + 1)])


def build_bump(support_radius=1.0, grid_spacing=1 / 256, sharpness=1.0, p_max=4,
               tolerance=1e-10, offset=0.0, name=""):
    """Compact non-negative bump normalised to unit mass.

    ``offset`` moves the centre off the origin (non-zero first moment).
    Raises ResolutionError when fewer than 16 samples cover the support.
    """
    if support_radius <= 0:
        raise ValueError("support_radius must be positive")
    n_across = 2 * support_radius / grid_spacing
    if n_across < 16:
        raise ResolutionError(
            f"{n_across:.1f} samples across the support; at least 16 are needed"
        )
    half = int(math.floor(support_radius / grid_spacing))
    x = np.arange(-half, half + 1) * grid_spacing
    raw = _bump_raw(x / support_radius, sharpness)
    x = x + offset
    # trapezoid normalisation on the stored grid; the profile is flat at both ends
    samples = raw / (grid_spacing * raw.sum())
    moments = _moments(x, samples, grid_spacing, p_max)
    if abs(moments[0] - 1.0) > tolerance:
        raise ConstructionError(f"mass {moments[0]!r} misses 1 by more than {tolerance}")
    return Mollifier(
        kind="compact-bump",
        support_radius=float(support_radius),
        grid_spacing=float(grid_spacing),
        x=x,
        samples=samples,
        moment_table=moments,
        tolerance=tolerance,
        sharpness=float(sharpness),
        offset=float(offset),
        name=name,
    )


def build_vanishing_moments(p_max=4, cutoff_width=8.0, grid_spacing=None,
                            tolerance=1e-8, left_transition=None, right_transition=None,
                            name=""):
    """Schwartz kernel whose Fourier transform is a plateau equal to 1 near 0.

    Unequal ``left_transition``/``right_transition`` give a complex kernel.
    The kernel is truncated where the remaining samples sit at the roundoff
    floor; the discarded mass is reported in ``tail_mass``.
    """
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    w = float(cutoff_width)
    tl = w if left_transition is None else float(left_transition)
    tr = w if right_transition is None else float(right_transition)
    band = w + max(tl, tr)
    h_max = math.pi / band
    h = 0.5 * h_max if grid_spacing is None else float(grid_spacing)
    if h > h_max:
        raise ResolutionError(
            f"grid_spacing {h} aliases the cutoff band; need <= {h_max:.4g}"
        )
    n = 1 << 15
    xi = 2 * np.pi * np.fft.fftfreq(n, d=h)
    full = np.fft.fftshift(np.fft.ifft(plateau_cutoff(xi, w, tl, tr))) / h
    xs = (np.arange(n) - n // 2) * h
    if tl == tr:
        full = full.real
        # x_i and x_{n-i} are mirror images; index 0 has no partner
        full[1:] = 0.5 * (full[1:] + full[1:][::-1])
        full[0] = 0.0
    amp = np.abs(full)
    floor = 1e-15 * amp.max()
    above = np.nonzero(amp > floor)[0]
    radius = 1.5 * float(np.max(np.abs(xs[above])))
    keep = np.abs(xs) <= radius
    tail = float(h * amp[~keep].sum())
    if tail > TAIL_MASS_LIMIT:
        raise ConstructionError(f"truncated tail mass {tail:.2e} exceeds {TAIL_MASS_LIMIT}")
    x = xs[keep]
    samples = full[keep]
    moments = _moments(x, samples, h, p_max)
    worst = int(np.argmax(np.abs(moments[1:]))) + 1
    if abs(moments[0] - 1.0) > tolerance or abs(moments[worst]) > tolerance:
        raise ConstructionError(
            f"moment certification failed: m0={moments[0]!r}, "
            f"worst m{worst}={moments[worst]!r} (tolerance {tolerance})"
        )
    return Mollifier(
        kind="vanishing-moments",
        support_radius=radius,
        grid_spacing=h,
        x=x,
        samples=samples,
        moment_table=moments,
        tolerance=tolerance,
        cutoff_width=w,
        left_transition=tl,
        right_transition=tr,
        tail_mass=tail,
        name=name,
    )


def scale_kernel(m: Mollifier, omega: float, dimension: int = 1) -> Mollifier:
    """Return ``omega**-n phi(x / omega)``; mass is preserved in every dimension."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    factor = omega / m.scale
    return Mollifier(
        kind=m.kind,
        support_radius=m.support_radius,
        grid_spacing=m.grid_spacing * factor,
        x=m.x * factor,
        samples=m.samples / factor,
        moment_table=m.moment_table * factor ** np.arange(m.moment_table.size),
        tolerance=m.tolerance,
        scale=float(omega),
        dimension=int(dimension),
        sharpness=m.sharpness,
        offset=m.offset,
        cutoff_width=m.cutoff_width,
        left_transition=m.left_transition,
        right_transition=m.right_transition,
        tail_mass=m.tail_mass,
        name=m.name,
    )


def kernel_mass(m: Mollifier) -> complex:
    """Trapezoid mass of the n-dimensional tensor kernel."""
    one_d = m.grid_spacing * np.sum(m.samples)
    return one_d ** m.dimension


def matching_bump(reference: Mollifier, sharpness: float, grid_spacing=None) -> Mollifier:
    """Bump of a different sharpness whose ||phi'||_inf equals the reference's.

    For a fixed shape ``||phi_R'||_inf`` scales like ``R**-2``.
    """
    if reference.kind != "compact-bump":
        raise ValueError("reference must be a compact bump")
    target = reference.derivative_supnorm(1)
    unit = build_bump(1.0, 1 / 1024, sharpness)
    radius = math.sqrt(unit.derivative_supnorm(1) / target)
    h = grid_spacing if grid_spacing is not None else radius / 256
    return build_bump(radius, h, sharpness)


# ---------------------------------------------------------------------------
# scales


@dataclass(frozen=True)
class PositiveScale:
    """Positive scale omega(eps) -> 0 as eps -> 0.

    ``loglog``: 1/omega = ln(ln(1/eps)), spliced to 1 where that quantity is <= 1.
    ``sqrtlog``: omega**-2 = ln(1/eps), spliced to 1 where that quantity is <= 1.
    ``power``: omega = constant * eps**exponent.
    """

    kind: str = "power"
    exponent: float = 1.0
    constant: float = 1.0

    def __post_init__(self):
        if self.kind not in ("power", "loglog", "sqrtlog", "constant"):
            raise ValueError(f"unknown scale kind {self.kind!r}")
        if self.constant <= 0:
            raise ValueError("scale constant must be positive")

    def __call__(self, eps):
        eps = np.asarray(eps, dtype=float)
        if np.any(eps <= 0) or np.any(eps > 1):
            raise ValueError("eps must lie in (0, 1]")
        if self.kind == "power":
            out = self.constant * eps**self.exponent
        elif self.kind == "constant":
            out = np.full_like(eps, self.constant)
        elif self.kind == "loglog":
            with np.errstate(divide="ignore", invalid="ignore"):
                inv = np.log(np.log(1.0 / eps))
            out = np.where(np.nan_to_num(inv, nan=0.0) > 1.0, 1.0 / np.where(inv > 1.0, inv, 1.0), 1.0)
        else:
            inv2 = np.log(1.0 / eps)
            out = np.where(inv2 > 1.0, 1.0 / np.sqrt(np.where(inv2 > 1.0, inv2, 1.0)), 1.0)
        return out if out.ndim else float(out)

    @property
    def identifier(self) -> str:
        if self.kind == "power":
            return f"power{self.exponent:g}"
        return self.kind

    def sandwich(self, ladder, r=None):
        """Smallest c1 and largest c2 with c2*eps**r <= omega(eps) <= c1 on the ladder."""
        ladder = np.asarray(ladder, dtype=float)
        om = np.asarray(self(ladder))
        if r is None:
            r = self.exponent if self.kind == "power" else 1.0
        return float(om.max()), float(np.min(om / ladder**r)), float(r)


def default_ladder(j_min=2, j_max=9):
    return [2.0**-j for j in range(j_min, j_max + 1)]


# ---------------------------------------------------------------------------
# distributions


@dataclass(frozen=True)
class Heaviside:
    location: float = 0.0
    height: float = 1.0

    def __add__(self, other):
        return DistributionSum((self,)) + other


@dataclass(frozen=True)
class PointMass:
    location: float = 0.0
    weight: float = 1.0

    def __add__(self, other):
        return DistributionSum((self,)) + other


@dataclass(frozen=True)
class DistributionSum:
    terms: tuple = ()

    def __add__(self, other):
        if isinstance(other, DistributionSum):
            return DistributionSum(self.terms + other.terms)
        if isinstance(other, (Heaviside, PointMass)):
            return DistributionSum(self.terms + (other,))
        raise UnsupportedDistributionError(f"cannot add {type(other).__name__} to a distribution")


DISTRIBUTIONS = (Heaviside, PointMass, DistributionSum)


def _convolve_distribution(f, m: Mollifier, x, derivative):
    if isinstance(f, DistributionSum):
        out = np.zeros_like(x, dtype=float)
        for term in f.terms:
            out = out + _convolve_distribution(term, m, x, derivative)
        return out
    if isinstance(f, Heaviside):
        shifted = x - f.location
        if derivative == 0:
            return f.height * m.antiderivative(shifted)
        return f.height * m(shifted, derivative - 1)
    if isinstance(f, PointMass):
        return f.weight * m(x - f.location, derivative)
    raise UnsupportedDistributionError(f"unsupported distribution {type(f).__name__}")


def convolve(f, m: Mollifier, omega: float, x, derivative: int = 0, periodic: bool = False):
    """Sample ``d^k/dx^k (f * phi_omega)`` on the one-dimensional grid ``x``.

    ``f`` may be a distribution descriptor (exact fast paths), a callable
    (quadrature on the kernel's own grid), or samples on ``x`` (Fourier
    multiplier with the kernel transform).
    """
    x = np.asarray(x, dtype=float)
    mw = scale_kernel(m, omega) if omega != m.scale else m
    if isinstance(f, DISTRIBUTIONS):
        return _convolve_distribution(f, mw, x, derivative)
    if callable(f):
        return _convolve_callable(f, mw, x, derivative)
    return _convolve_samples(np.asarray(f), mw, x, derivative, periodic)


def _convolve_callable(f: Callable, m: Mollifier, x, derivative):
    # (f * phi_w)^(d)(x) = w^-d int f(x - w y) phi^(d)(y) dy
    w = m.scale
    y = m.x / w
    h = m.grid_spacing / w
    ker = m.profile(y, derivative) * h / w**derivative
    flat = x.reshape(-1)
    out = np.empty(flat.shape, dtype=np.result_type(ker, float))
    for start in range(0, flat.size, 256):
        chunk = flat[start : start + 256]
        vals = f(chunk[:, None] - w * y[None, :])
        out[start : start + 256] = vals @ ker
    return out.reshape(x.shape)


def _convolve_samples(f, m: Mollifier, x, derivative, periodic):
    if f.shape != x.shape:
        raise ValueError("samples must match the grid")
    h = x[1] - x[0]
    if not periodic:
        reach = m.scale * (m.support_radius + abs(m.offset))
        edge = np.abs(x - x[0]) <= reach
        edge |= np.abs(x - x[-1]) <= reach
        scale_ref = max(np.max(np.abs(f)), 1e-300)
        if np.max(np.abs(f[edge])) > 1e-12 * scale_ref:
            raise DomainError(
                f"data within {reach:.3g} of the boundary; enlarge the domain"
            )
    xi = 2 * np.pi * np.fft.fftfreq(x.size, d=h)
    mult = m.fourier(xi) * (1j * xi) ** derivative
    out = np.fft.ifft(np.fft.fft(f) * mult)
    if np.isrealobj(f) and not m.is_complex:
        return out.real
    return out


# ---------------------------------------------------------------------------
# persistence


def export_kernel_csv(m: Mollifier, path):
    """Write ``x, re(phi), im(phi)`` rows."""
    samples = np.asarray(m.samples, dtype=complex)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "re_phi", "im_phi"])
        for xv, v in zip(m.x, samples):
            writer.writerow([repr(float(xv)), repr(float(v.real)), repr(float(v.imag))])


def import_kernel_csv(path):
    """Read a kernel CSV back into ``(x, samples)`` arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x = data[:, 0]
    vals = data[:, 1] + 1j * data[:, 2]
    if not np.any(data[:, 2]):
        vals = vals.real
    return x, vals
