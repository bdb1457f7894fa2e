"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run directly (``python3 tests/test_acceptance.py``) or through pytest, which
prints the lines in its terminal summary.
"""

import json
import math
import sys

import numpy as np
import pytest

from vwwave import analysis as an
from vwwave import coefficients as co
from vwwave import config as cf
from vwwave import experiment as ex
from vwwave.config import Profile
from vwwave.mollifier import PositiveScale, build_bump, build_vanishing_moments, convolve, default_ladder
from vwwave.solver import Grid, dalembert_oracle, solve
from vwwave.system import build_system, lift, random_coefficients, verify_energy_identities, verify_symmetriser

RESULTS = {}


def record(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def kernels():
    return build_bump(), build_vanishing_moments(p_max=4)


def test_c01_symmetriser_exact():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for n in range(1, 6):
        for _ in range(5):
            data, _ = random_coefficients(n, 8 if n <= 3 else 4, rng)
            assert min(float(np.min(a)) for a in data.a) >= 0
            s = build_system(n, data)
            worst = max(worst, verify_symmetriser(s), verify_symmetriser(lift(s, 1)))
    record(1, worst == 0.0, f"max |QA_k - A_k^T Q| over n=1..5, levels 0-1 = {worst}")


def test_c02_energy_identities():
    worst = {}
    for n in (1, 2, 3):
        # n=3 uses 16 points per axis: the random fields are band-limited to |k| <= 3,
        # so spectral derivatives are exact there as well
        rep = verify_energy_identities(n, trials=100, seed=n, points=64 if n < 3 else 16)
        worst[n] = rep.max_error
    ok = max(worst.values()) <= 1e-10
    record(2, ok, "max relative error " + ", ".join(f"n={k}: {v:.2e}" for k, v in worst.items()) + " (tol 1e-10)")


def test_c03_glaeser(kernels):
    bump = kernels[0]
    grid = Grid(points=8192, extent=2.0)
    lad = default_ladder()
    rho = {}
    for field in (co.heaviside(), co.example1()):
        rep = co.glaeser_check(co.regularize(field, bump, PositiveScale(), lad, grid), strict=False)
        rho[field.kind] = float(rep.ratios.max())
    x = grid.axis
    eq = co.glaeser_check(co.RegularizedNet.from_samples(x**2, 2 * x, np.full_like(x, 2.0))).ratios[0]
    ok = all(r <= 1 + 1e-6 for r in rho.values()) and abs(eq - 1) <= 1e-8
    record(3, ok, f"max rho heaviside={rho['heaviside']:.6f}, example1={rho['example1']:.6f} "
                  f"(<= 1+1e-6); x^2 rho={eq:.12f}")


def test_c04_gronwall(tmp_path):
    raw = json.loads(cf.bundled("heaviside.json").read_text())
    raw["analyses"]["sensitivity"] = False
    cfg = cf.resolve(raw)
    prob = ex.Problem.from_config(cfg)
    summary = ex.execute(prob, prob.kernels[0], prob.scales[0], tmp_path / "h", full=False)
    runs = json.loads((tmp_path / "h" / "gronwall.json").read_text())
    margins = [r["margin"] for r in runs]
    # smooth globally C^2 coefficient with forcing
    g = Grid(points=512, extent=3.0, boundary="zero")
    tr = solve([g.axis**2], g, Profile("bump"), forcing=lambda t: math.cos(t) * np.exp(-4 * g.axis**2))
    quad = an.gronwall_check(an.trace_energy(tr, M=2.0))
    t = np.linspace(0, 1, 64)
    injected = an.gronwall_check(np.exp(2 * 2.0 * t), M=0.0, n=1, times=t)
    ok = summary["gronwall_passed"] and all(r["passed"] for r in runs) and quad.passed and not injected.passed
    record(4, ok, f"{len(runs)} heaviside runs min margin {min(margins):.3f}, x^2 margin {quad.margin:.3f}, "
                  f"injected ratio {injected.worst_ratio:.2f} rejected={not injected.passed}")


def test_c05_oracle():
    g0 = lambda x: np.exp(-x**2)  # noqa: E731
    errs = []
    for N in (512, 1024, 2048):
        g = Grid(points=N, horizon=1.0)
        tr = solve([1.0], g, g0)
        exact = dalembert_oracle(1.0, g0, None, tr.times[-1], g.axis)
        errs.append(g.norm(tr.u[-1] - exact) / g.norm(exact))
    order = an.convergence_order(errs)[-1]
    ok = errs[-1] <= 1e-3 and abs(order - 2) <= 0.3
    record(5, ok, f"rel L2 error at 2048 pts = {errs[-1]:.2e} (<= 1e-3), observed order {order:.3f}")


def test_c06_heaviside_moderateness(kernels):
    bump, psi = kernels
    from vwwave.mollifier import matching_bump

    other = matching_bump(bump, 2.0)
    grid = Grid(points=1024, extent=8.0, horizon=1.0)
    g0 = Profile("gaussian", center=0.5, width=0.5)
    rep = an.mollifier_sensitivity(co.heaviside(), bump, other, psi, PositiveScale("sqrtlog"),
                                   default_ladder(), grid, g0)
    cap = an.heaviside_bound(grid.horizon, bump)
    s1, s2 = (m.slope for m in rep.moderateness)
    ok = s1 <= cap and s2 <= cap and abs(s1 - s2) <= 0.3
    record(6, ok, f"slopes {s1:.3g} / {s2:.3g} vs cap 2T|phi'|+0.5 = {cap:.3f}; gap {abs(s1 - s2):.3g} (<= 0.3)")


def test_c07_consistency(kernels):
    bump, psi = kernels
    grid = Grid(points=2048, extent=8.0, horizon=1.0)
    lad = [2.0 ** (-j / 2) for j in range(2, 10)]
    rep = an.consistency_test(co.constant(1.0), bump, psi, lad, grid, Profile("bump", radius=2.0))
    order = rep.data_fit.slope
    ok = rep.reference == "dalembert" and rep.monotone(0) and rep.reaches_floor(0) and order >= 4
    record(7, ok, f"sup_t L2 error {rep.errors[0, 0]:.2e} -> {rep.errors[-1, 0]:.2e} (floor {rep.floor[0]:.2e}), "
                  f"monotone={rep.monotone(0)}, data order {order:.2f} (>= 4)")


def test_c08_example1_sensitivity(kernels):
    _, psi = kernels
    b1, b2 = build_bump(), build_bump(sharpness=2.0)
    grid = Grid(points=2048, extent=8.0, horizon=1.0)
    g0 = Profile("gaussian", center=0.5, width=0.5)
    rep = an.mollifier_sensitivity(co.example1(), b1, b2, psi, None, default_ladder(2, 7), grid, g0)
    d = rep.to_dict()
    slope = d["difference_slope_vs_log_inv_eps"]
    ratio = rep.sup_differences**2 / (rep.envelope_constant * rep.envelope)
    ok = slope < 0 and rep.converging and rep.within_envelope and np.all(ratio <= 1 + 1e-12)
    record(8, ok, f"N={rep.N}, difference slope vs log(1/eps) = {slope:.3f} (< 0), "
                  f"C={rep.envelope_constant:.3g}, ratio slope {d['envelope_ratio_slope']:.3f}")


def test_c09_vanishing_moments(kernels):
    psi = kernels[1]
    f = Profile("bump", radius=2.0)
    x = np.linspace(-3, 3, 601)
    lad = [2.0 ** (-j / 2) for j in range(2, 10)]
    err = [float(np.max(np.abs(convolve(f, psi, e, x) - f(x)))) for e in lad]
    fit = an.decay_order(lad, err)
    mom = float(np.max(np.abs(psi.moment_table[1:5])))
    ok = mom <= 1e-8 and fit.slope >= 4
    record(9, ok, f"max |moment 1..4| = {mom:.2e} (<= 1e-8), sup-norm decay order {fit.slope:.2f} (>= 4)")


def test_c10_determinism(tmp_path):
    cfg = cf.load(cf.bundled("heaviside.json"))
    a = ex.run(cfg, tmp_path)
    b = ex.run(cf.load(a / "config.json"), tmp_path)
    files = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    same = [(a / f).read_bytes() == (b / f).read_bytes() for f in files]
    ok = a != b and len(files) > 0 and all(same)
    record(10, ok, f"{sum(same)}/{len(files)} CSV files bitwise identical across two runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
