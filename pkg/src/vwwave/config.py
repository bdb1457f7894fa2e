"""Experiment configuration: JSON schema, semantic validation and builders."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import coefficients as coef
from .errors import ConfigurationError
from .grid import Grid
from .mollifier import Mollifier, PositiveScale, build_bump, build_vanishing_moments

_number = {"type": "number"}

PROFILE = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["zero", "gaussian", "bump", "point-mass"]},
        "amplitude": _number,
        "center": _number,
        "width": {"type": "number", "exclusiveMinimum": 0},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "location": _number,
        "weight": _number,
        "frequency": _number,
    },
    "required": ["kind"],
    "additionalProperties": False,
}

COEFFICIENT = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["constant", "quadratic", "gaussian", "example1", "heaviside",
                          "point-mass-sum"]},
        "value": {"type": "number", "minimum": 0},
        "scale": {"type": "number", "minimum": 0},
        "center": _number,
        "amplitude": {"type": "number", "minimum": 0},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "base": {"type": "number", "minimum": 0},
        "plateau_radius": {"type": "number", "exclusiveMinimum": 0},
        "support_radius": {"type": "number", "exclusiveMinimum": 0},
        "location": _number,
        "height": {"type": "number", "minimum": 0},
        "locations": {"type": "array", "items": _number, "minItems": 1},
        "weights": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

KERNEL = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["compact-bump", "vanishing-moments", "matching-bump"]},
        "support_radius": {"type": "number", "exclusiveMinimum": 0},
        "sharpness": {"type": "number", "exclusiveMinimum": 0},
        "offset": _number,
        "grid_spacing": {"type": "number", "exclusiveMinimum": 0},
        "p_max": {"type": "integer", "minimum": 1},
        "cutoff_width": {"type": "number", "exclusiveMinimum": 0},
        "left_transition": {"type": "number", "exclusiveMinimum": 0},
        "right_transition": {"type": "number", "exclusiveMinimum": 0},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "name": {"type": "string"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SCALE = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["power", "loglog", "sqrtlog", "constant", "example1-auto"]},
        "exponent": {"type": "number", "exclusiveMinimum": 0},
        "constant": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "problem": {
            "type": "object",
            "properties": {
                "dimension": {"enum": [1, 2]},
                "coefficients": {"type": "array", "items": COEFFICIENT, "minItems": 1, "maxItems": 2},
                "g0": PROFILE,
                "g1": PROFILE,
                "forcing": PROFILE,
            },
            "required": ["coefficients", "g0"],
            "additionalProperties": False,
        },
        "regularization": {
            "type": "object",
            "properties": {
                "kernels": {"type": "array", "items": KERNEL, "minItems": 1},
                "data_kernel": KERNEL,
                "scales": {"type": "array", "items": SCALE, "minItems": 1},
                "ladder": {
                    "type": "object",
                    "properties": {
                        "j_min": {"type": "number"},
                        "j_max": {"type": "number"},
                        "step": {"type": "number", "exclusiveMinimum": 0},
                        "values": {"type": "array", "minItems": 1,
                                   "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
                    },
                    "additionalProperties": False,
                },
            },
            "required": ["kernels"],
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "properties": {
                "extent": {"type": "number", "exclusiveMinimum": 0},
                "points": {"type": "integer", "minimum": 8},
                "boundary": {"enum": ["periodic", "zero"]},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
                "stride": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "analyses": {
            "type": "object",
            "properties": {
                "glaeser": {"type": "boolean"},
                "energy": {"type": "boolean"},
                "gronwall": {"type": "boolean"},
                "sobolev": {
                    "type": "object",
                    "properties": {"k_max": {"type": "integer", "minimum": 0, "maximum": 6}},
                    "additionalProperties": False,
                },
                "moderateness": {
                    "type": "object",
                    "properties": {"cap": {"type": ["number", "null"]},
                                   "q": {"type": ["number", "null"]}},
                    "additionalProperties": False,
                },
                "consistency": {"type": "boolean"},
                "sensitivity": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "root": {"type": ["string", "null"]},
                "trace_every": {"type": "integer", "minimum": 1},
                "export_nets": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["problem", "regularization"],
    "additionalProperties": False,
}

DEFAULTS = {
    "name": "run",
    "seed": 0,
    "workers": 1,
    "grid": {"extent": 8.0, "points": 1024, "boundary": "periodic", "horizon": 1.0, "cfl": 0.5,
             "stride": 2},
    "analyses": {"glaeser": True, "energy": True, "gronwall": True, "sobolev": {"k_max": 4},
                 "moderateness": {"cap": None, "q": None}, "consistency": False,
                 "sensitivity": False},
    "output": {"root": None, "trace_every": 4, "export_nets": True},
}
PROBLEM_DEFAULTS = {"dimension": 1, "g1": {"kind": "zero"}, "forcing": {"kind": "zero"}}
REGULARIZATION_DEFAULTS = {
    "data_kernel": {"kind": "vanishing-moments", "p_max": 4, "cutoff_width": 8.0},
    "scales": [{"kind": "power", "exponent": 1.0}],
    "ladder": {"j_min": 2, "j_max": 9, "step": 1},
}


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _path(error) -> str:
    parts = [str(p) for p in error.absolute_path]
    return ".".join(parts) if parts else "<root>"


def resolve(raw: dict) -> dict:
    """Schema-validate and fill defaults; raises ConfigurationError with a field path."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigurationError(e.message, _path(e))
    cfg = _merge(DEFAULTS, raw)
    cfg["problem"] = _merge(PROBLEM_DEFAULTS, raw["problem"])
    cfg["regularization"] = _merge(REGULARIZATION_DEFAULTS, raw["regularization"])
    check_semantics(cfg)
    return cfg


def load(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}", str(path)) from exc
    except OSError as exc:
        raise ConfigurationError(str(exc), str(path)) from exc
    return resolve(raw)


# ---------------------------------------------------------------------------
# builders


def build_ladder(spec: dict) -> list:
    if "values" in spec:
        return [float(v) for v in spec["values"]]
    step = spec.get("step", 1)
    j = np.arange(spec["j_min"], spec["j_max"] + 0.5 * step, step)
    return [float(2.0**-v) for v in j]


def build_kernel(spec: dict, reference: Mollifier = None) -> Mollifier:
    kind = spec["kind"]
    if kind == "compact-bump":
        return build_bump(spec.get("support_radius", 1.0), spec.get("grid_spacing", 1 / 256),
                          spec.get("sharpness", 1.0), tolerance=spec.get("tolerance", 1e-10),
                          offset=spec.get("offset", 0.0), name=spec.get("name", ""))
    if kind == "matching-bump":
        from .mollifier import matching_bump

        if reference is None:
            raise ConfigurationError("matching-bump needs a preceding compact-bump kernel")
        m = matching_bump(reference, spec.get("sharpness", 2.0))
        return m if not spec.get("name") else _renamed(m, spec["name"])
    return build_vanishing_moments(spec.get("p_max", 4), spec.get("cutoff_width", 8.0),
                                   spec.get("grid_spacing"), spec.get("tolerance", 1e-8),
                                   spec.get("left_transition"), spec.get("right_transition"),
                                   name=spec.get("name", ""))


def _renamed(m: Mollifier, name: str) -> Mollifier:
    from dataclasses import replace

    return replace(m, name=name)


def build_kernels(specs) -> list:
    out = []
    for s in specs:
        ref = next((k for k in out if k.kind == "compact-bump"), None)
        out.append(build_kernel(s, ref))
    return out


def build_scale(spec: dict):
    if spec["kind"] == "example1-auto":
        return None
    return PositiveScale(spec["kind"], spec.get("exponent", 1.0), spec.get("constant", 1.0))


def build_coefficient(spec: dict, axis: int) -> coef.CoefficientField:
    kind = spec["kind"]
    if kind == "constant":
        return coef.constant(spec.get("value", 1.0), axis)
    if kind == "quadratic":
        return coef.quadratic(spec.get("scale", 1.0), spec.get("center", 0.0), axis)
    if kind == "gaussian":
        return coef.gaussian(spec.get("amplitude", 1.0), spec.get("center", 0.0),
                             spec.get("width", 1.0), spec.get("base", 0.0), axis)
    if kind == "example1":
        return coef.example1(spec.get("plateau_radius", 1.0), spec.get("support_radius", 2.0), axis)
    if kind == "heaviside":
        return coef.heaviside(spec.get("location", 0.0), spec.get("height", 1.0), axis)
    return coef.point_masses(spec["locations"], spec["weights"], axis)


def build_grid(spec: dict, dimension: int) -> Grid:
    return Grid(dimension, spec["extent"], spec["points"], spec["boundary"], spec["horizon"],
                spec["cfl"], spec["stride"])


@dataclass(frozen=True)
class Profile:
    """Initial data or forcing profile ``amplitude * shape(x)`` (times ``cos(frequency t)``)."""

    kind: str
    amplitude: float = 1.0
    center: float = 0.0
    width: float = 1.0
    radius: float = 1.0
    frequency: float = 0.0

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.amplitude == 0

    @property
    def is_distribution(self) -> bool:
        return self.kind == "point-mass"

    def __call__(self, *coords):
        r2 = sum((c - self.center) ** 2 for c in coords)
        if self.kind == "zero":
            return np.zeros_like(coords[0], dtype=float)
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-r2 / self.width**2)
        if self.kind == "bump":
            s = r2 / self.radius**2
            with np.errstate(divide="ignore", over="ignore"):
                return np.where(s < 1, self.amplitude * np.exp(-1.0 / np.where(s < 1, 1 - s, 1.0)), 0.0)
        raise ConfigurationError(f"{self.kind} data has no pointwise values")

    def regularized(self, kernel: Mollifier, eps: float, grid: Grid):
        """``profile * kernel_eps`` on the (periodic) grid."""
        from .analysis import regularize_data

        if self.kind == "point-mass":
            # delta_c * psi_eps = (1/2L) sum_k psi^(eps xi_k) exp(i xi_k (x - c)), per axis
            xi = 2 * np.pi * np.fft.fftfreq(grid.points, d=grid.spacing)
            spec = np.asarray(kernel.fourier(eps * xi)) * np.exp(1j * xi * (grid.axis[0] - self.center))
            line = np.fft.ifft(spec) / grid.spacing
            line = line if kernel.is_complex else np.real(line)
            out = line
            for _ in range(grid.dimension - 1):
                out = np.multiply.outer(out, line)
            return self.amplitude * out
        return regularize_data(lambda *c: self(*c), kernel, eps, grid)


def build_profile(spec: dict) -> Profile:
    kind = spec["kind"]
    amplitude = spec.get("amplitude", spec.get("weight", 1.0))
    center = spec.get("center", spec.get("location", 0.0))
    return Profile(kind, amplitude, center, spec.get("width", 1.0), spec.get("radius", 1.0),
                   spec.get("frequency", 0.0))


# ---------------------------------------------------------------------------
# semantics


def check_semantics(cfg: dict):
    """Cross-field checks run before any compute."""
    prob, reg, an = cfg["problem"], cfg["regularization"], cfg["analyses"]
    n = prob["dimension"]
    if len(prob["coefficients"]) != n:
        raise ConfigurationError(f"need {n} coefficient descriptors", "problem.coefficients")
    for i, c in enumerate(prob["coefficients"]):
        p = f"problem.coefficients.{i}"
        if c["kind"] == "point-mass-sum" and len(c.get("locations", [])) != len(c.get("weights", [])):
            raise ConfigurationError("locations and weights differ in length", p)
        if c["kind"] == "point-mass-sum" and "locations" not in c:
            raise ConfigurationError("point-mass-sum needs locations and weights", p)
        if c["kind"] == "example1" and c.get("plateau_radius", 1.0) >= c.get("support_radius", 2.0):
            raise ConfigurationError("plateau radius must be below support radius", p)
    kernels = reg["kernels"]
    if kernels[0]["kind"] == "matching-bump":
        raise ConfigurationError("matching-bump cannot be the first kernel", "regularization.kernels.0")
    distributional = any(c["kind"] in coef.DISTRIBUTIONAL for c in prob["coefficients"])
    if distributional:
        for i, k in enumerate(kernels):
            if k["kind"] == "vanishing-moments":
                raise ConfigurationError(
                    "distributional coefficients need non-negative compact kernels",
                    f"regularization.kernels.{i}",
                )
    ladder = build_ladder(reg["ladder"])
    if any(not 0 < e <= 1 for e in ladder):
        raise ConfigurationError("ladder values must lie in (0, 1]", "regularization.ladder")
    if len(ladder) < 4 and (an["moderateness"] is not None or an["sensitivity"] or an["consistency"]):
        raise ConfigurationError("asymptotic fits need at least 4 ladder points", "regularization.ladder")
    auto = [i for i, s in enumerate(reg["scales"]) if s["kind"] == "example1-auto"]
    if auto and not an["sensitivity"]:
        raise ConfigurationError("example1-auto scale is only meaningful for the sensitivity analysis",
                                 f"regularization.scales.{auto[0]}")
    if an["sensitivity"]:
        if len(kernels) < 2:
            raise ConfigurationError("sensitivity needs two coefficient kernels", "regularization.kernels")
        if n != 1:
            raise ConfigurationError("sensitivity is implemented in one dimension", "problem.dimension")
    if an["consistency"]:
        if any(c["kind"] in coef.DISTRIBUTIONAL for c in prob["coefficients"]):
            raise ConfigurationError("consistency requires smooth or constant coefficients",
                                     "analyses.consistency")
        if n != 1:
            raise ConfigurationError("consistency is implemented in one dimension", "problem.dimension")
        if prob["g0"]["kind"] == "point-mass":
            raise ConfigurationError("consistency needs pointwise initial data", "problem.g0")
    if prob["forcing"]["kind"] == "point-mass":
        raise ConfigurationError("forcing must be a function profile", "problem.forcing")
    grid = cfg["grid"]
    try:
        g = build_grid(grid, n)
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), "grid") from exc
    if an["consistency"] or an["sensitivity"] or prob["g0"]["kind"] == "point-mass":
        if g.boundary != "periodic":
            raise ConfigurationError("data regularisation uses periodic transforms", "grid.boundary")
    # the scaled kernels must be resolved by the grid
    for si, s in enumerate(reg["scales"]):
        if s["kind"] == "example1-auto":
            continue
        scale = build_scale(s)
        om = float(np.min(scale(np.asarray(ladder))))
        for ki, k in enumerate(kernels):
            if k["kind"] == "compact-bump":
                width = 2 * om * k.get("support_radius", 1.0)
                if distributional and width < 4 * g.spacing:
                    raise ConfigurationError(
                        f"smallest scaled kernel ({width:.3g}) spans fewer than 4 cells",
                        f"regularization.scales.{si}",
                    )
    data_kernel = reg["data_kernel"]
    if data_kernel["kind"] == "vanishing-moments":
        band = data_kernel.get("cutoff_width", 8.0) * 1.5
        if band / min(ladder) > np.pi / g.spacing and prob["g0"]["kind"] == "point-mass":
            raise ConfigurationError("point-mass data not resolved at the smallest eps", "grid.points")
    return cfg


def dump(cfg: dict, path):
    with open(path, "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def bundled(name: str) -> Path:
    """Path of a configuration shipped with the package."""
    return Path(__file__).parent / "configs" / name
