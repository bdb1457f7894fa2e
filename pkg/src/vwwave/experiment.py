"""Run pipeline behind the ``run`` and ``sweep`` commands."""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from . import analysis as an
from . import config as cf
from .coefficients import glaeser_check, regularize
from .errors import ConfigurationError, VerificationError
from .mollifier import export_kernel_csv
from .solver import common_schedule, solve_ladder
from .system import CoefficientData, build_system, derive_system, q_lower_bound_check, verify_symmetriser

log = logging.getLogger(__name__)

ENV_ROOT = "VWWAVE_OUTPUT_ROOT"


def _f(v) -> str:
    return repr(float(v))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else _f(v) for v in r])


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def output_root(cfg) -> Path:
    root = cfg["output"].get("root") or os.environ.get(ENV_ROOT) or "runs"
    return Path(root)


def new_run_dir(root: Path, name: str) -> Path:
    """Fresh timestamped directory; never reuses an existing one."""
    root.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now().strftime("%Y%m%dT%H%M%S")
    base = root / f"{name}-{stamp}"
    path, k = base, 0
    while True:
        try:
            path.mkdir()
            return path
        except FileExistsError:
            k += 1
            path = Path(f"{base}-{k}")


@dataclass
class Problem:
    """Everything built from a resolved configuration."""

    cfg: dict
    grid: object
    fields: list
    kernels: list
    data_kernel: object
    scales: list
    ladder: np.ndarray
    g0: object
    g1: object
    forcing: object

    @classmethod
    def from_config(cls, cfg):
        prob, reg = cfg["problem"], cfg["regularization"]
        n = prob["dimension"]
        grid = cf.build_grid(cfg["grid"], n)
        fields = [cf.build_coefficient(c, i) for i, c in enumerate(prob["coefficients"])]
        kernels = cf.build_kernels(reg["kernels"])
        data_kernel = cf.build_kernel(reg["data_kernel"])
        scales = [cf.build_scale(s) for s in reg["scales"]]
        ladder = np.array(cf.build_ladder(reg["ladder"]))
        return cls(cfg, grid, fields, kernels, data_kernel, scales, ladder,
                   cf.build_profile(prob["g0"]), cf.build_profile(prob["g1"]),
                   cf.build_profile(prob["forcing"]))

    def data(self, eps):
        g0 = self.g0.regularized(self.data_kernel, eps, self.grid)
        g1 = None if self.g1.is_zero else self.g1.regularized(self.data_kernel, eps, self.grid)
        if self.forcing.is_zero:
            return g0, g1, None
        space = self.forcing.regularized(self.data_kernel, eps, self.grid)
        w = self.forcing.frequency
        return g0, g1, (lambda t, s=space: np.cos(w * t) * s)


def _moderateness_cap(problem: Problem, scale, kernel):
    cap = problem.cfg["analyses"]["moderateness"].get("cap")
    if cap is None and scale is not None and scale.kind == "sqrtlog" and \
            any(f.kind == "heaviside" for f in problem.fields):
        cap = an.heaviside_bound(problem.grid.horizon, kernel)
    return cap


def execute(problem: Problem, kernel, scale, out: Path, full: bool = True) -> dict:
    """Nets, solves and analyses for one (kernel, scale) pair; writes into ``out``."""
    cfg, grid, ladder = problem.cfg, problem.grid, problem.ladder
    analyses = cfg["analyses"]
    workers = cfg["workers"]
    out.mkdir(parents=True, exist_ok=True)
    summary = {"kernel": kernel.identifier, "scale": scale.identifier, "ladder": ladder.tolist()}

    nets = [regularize(f, kernel, scale, ladder, grid) for f in problem.fields]
    summary["omega"] = nets[0].omegas.tolist()
    glaeser_ok = True
    if analyses["glaeser"]:
        for i, net in enumerate(nets):
            rep = glaeser_check(net, strict=False)
            rep.to_json(out / f"glaeser_axis{i}.json")
            glaeser_ok &= rep.passed
        summary["glaeser_passed"] = glaeser_ok
    if full and cfg["output"]["export_nets"] and grid.dimension == 1:
        (out / "nets").mkdir(exist_ok=True)
        nets[0].export_csv(out / "nets", prefix=f"net_{kernel.identifier}")

    # symmetriser checks on the finest net entry
    entry_data = CoefficientData.from_entries([net[-1] for net in nets])
    sys0 = build_system(grid.dimension, entry_data)
    summary["symmetriser_residual"] = max(verify_symmetriser(sys0), verify_symmetriser(derive_system(sys0)))
    summary["q_lower_bound_min"] = q_lower_bound_check(sys0, vectors=8, seed=cfg["seed"])

    data = [problem.data(e) for e in ladder]
    coeff_sets = [[net[j].a for net in nets] for j in range(len(ladder))]
    if analyses["gronwall"]:
        # coarse grids: refine the checkpoint stride until the Gronwall check has enough samples
        steps, _ = common_schedule(grid, coeff_sets)
        while grid.stride > 1 and steps // grid.stride < 32:
            grid = replace(grid, stride=grid.stride // 2)
            steps, _ = common_schedule(grid, coeff_sets)
    summary["stride"] = grid.stride
    sweep = solve_ladder(coeff_sets, grid, [d[0] for d in data], [d[1] for d in data],
                         [d[2] for d in data], ladder=list(ladder), workers=workers,
                         meta={"kernel": kernel.identifier, "scale": scale.identifier})
    summary["dt"], summary["steps"] = sweep.dt, sweep.steps
    if full:
        every = cfg["output"]["trace_every"]
        for tr in sweep:
            tr.export_csv(out / "traces", every=every)

    # energy and Gronwall
    if analyses["energy"] or analyses["gronwall"]:
        rows, gron = [], []
        for j, tr in enumerate(sweep):
            M = max(net[j].laplacian_sum for net in nets)
            E = an.trace_energy(tr, M)
            rows += [(tr.eps, *r) for r in E.to_rows()]
            if analyses["gronwall"]:
                res = an.gronwall_check(E)
                gron.append({"eps": tr.eps, "M": M, **res.to_dict()})
        write_csv(out / "energy.csv", ["eps", "t", "E", "kinetic", "bound"], rows)
        if gron:
            write_json(out / "gronwall.json", gron)
            summary["gronwall_passed"] = all(g["passed"] for g in gron)

    # Sobolev table and moderateness
    k_max = analyses["sobolev"]["k_max"]
    tables = [an.sobolev_norms(tr, k_max) for tr in sweep]
    write_csv(out / "sobolev.csv", ["eps", "t", "k", "norm"],
              [(tr.eps, t, k, tab.norms[i, k]) for tr, tab in zip(sweep, tables)
               for i, t in enumerate(tab.times) for k in tab.orders])
    sup = np.array([tab.sup_over_time() for tab in tables])
    ratio = np.array([an.sobolev_estimate_ratio(tr, d[0], d[1]).max() for tr, d in zip(sweep, data)])
    write_csv(out / "moderateness.csv",
              ["eps", "omega"] + [f"sup_t_H{k}" for k in range(k_max + 1)] + ["sobolev_ratio_H1"],
              [(e, o, *s, r) for e, o, s, r in zip(ladder, nets[0].omegas, sup, ratio)])
    mod_cfg = analyses["moderateness"]
    cap = _moderateness_cap(problem, scale, kernel)
    fits = []
    if len(ladder) >= 4:
        for k in range(k_max + 1):
            if np.all(sup[:, k] > 0):
                fits.append(an.moderateness_fit(ladder, sup[:, k], f"sup_t H{k}", cap if k == 0 else None,
                                                mod_cfg.get("q")).to_dict())
        write_json(out / "moderateness.json", fits)
        if fits:
            summary["moderateness_slope_L2"] = fits[0]["slope"]
            summary["moderateness_verdict"] = fits[0]["verdict"]
            summary["moderateness_cap"] = cap
    return summary


def run(cfg: dict, root=None) -> Path:
    problem = Problem.from_config(cfg)
    run_dir = new_run_dir(Path(root) if root else output_root(cfg), cfg["name"])
    cf.dump(cfg, run_dir / "config.json")
    log.info("run directory %s", run_dir)
    kernel = problem.kernels[0]
    scale = next((s for s in problem.scales if s is not None), None)
    analyses = cfg["analyses"]
    summary = {"name": cfg["name"], "seed": cfg["seed"]}
    (run_dir / "kernels").mkdir()
    for k in problem.kernels + [problem.data_kernel]:
        export_kernel_csv(k, run_dir / "kernels" / f"{k.identifier}.csv")
    if scale is not None:
        summary.update(execute(problem, kernel, scale, run_dir))
    if analyses["consistency"]:
        field = problem.fields[0]
        rep = an.consistency_test(field, kernel, problem.data_kernel, problem.ladder, problem.grid,
                                  problem.g0, None if problem.g1.is_zero else problem.g1, scale)
        d = rep.to_dict()
        write_json(run_dir / "consistency.json", d)
        write_csv(run_dir / "consistency.csv",
                  ["eps", "err_H0", "err_H1", "err_H2", "data_err_H2"],
                  [(e, *r, de) for e, r, de in zip(rep.ladder, rep.errors, rep.data_errors)])
        summary["consistency"] = {k: d[k] for k in ("reference", "data_order", "monotone_L2", "reaches_floor_L2")}
    if analyses["sensitivity"]:
        auto = any(s is None for s in problem.scales)
        rep = an.mollifier_sensitivity(problem.fields[0], problem.kernels[0], problem.kernels[1],
                                       problem.data_kernel, None if auto else scale, problem.ladder,
                                       problem.grid, problem.g0,
                                       None if problem.g1.is_zero else problem.g1,
                                       workers=cfg["workers"])
        d = rep.to_dict()
        write_json(run_dir / "sensitivity.json", d)
        write_csv(run_dir / "sensitivity.csv", ["eps", "t", "difference_L2"],
                  [(e, t, v) for e, row in zip(rep.ladder, rep.differences)
                   for t, v in zip(rep.times, row)])
        summary["sensitivity"] = {k: d[k] for k in ("kernels", "mode", "converging") if k in d}
        for k in ("within_envelope", "N", "slope_gap"):
            if k in d:
                summary["sensitivity"][k] = d[k]
    write_json(run_dir / "summary.json", summary)
    failures = []
    if summary.get("glaeser_passed") is False:
        failures.append("glaeser")
    if summary.get("gronwall_passed") is False:
        failures.append("gronwall")
    if failures:
        raise VerificationError(f"checks failed: {', '.join(failures)} (see {run_dir})")
    return run_dir


def sweep(cfg: dict, root=None) -> Path:
    """Cartesian product kernels x scales; one sub-directory per pair plus sweep.csv."""
    problem = Problem.from_config(cfg)
    if any(s is None for s in problem.scales):
        raise ConfigurationError("sweeps need explicit scales", "regularization.scales")
    run_dir = new_run_dir(Path(root) if root else output_root(cfg), f"{cfg['name']}-sweep")
    cf.dump(cfg, run_dir / "config.json")
    rows, summaries = [], []
    for kernel in problem.kernels:
        for scale in problem.scales:
            sub = run_dir / f"{kernel.identifier}__{scale.identifier}"
            s = execute(problem, kernel, scale, sub, full=False)
            summaries.append(s)
            rows.append((kernel.identifier, scale.identifier, s.get("moderateness_slope_L2", float("nan")),
                         s.get("moderateness_verdict", "n/a"),
                         "pass" if s.get("glaeser_passed", True) else "fail",
                         "pass" if s.get("gronwall_passed", True) else "fail"))
    write_csv(run_dir / "sweep.csv", ["kernel", "scale", "slope_L2", "verdict", "glaeser", "gronwall"], rows)
    write_json(run_dir / "summary.json", {"name": cfg["name"], "pairs": summaries})
    return run_dir
