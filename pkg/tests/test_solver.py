import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vwwave.errors import CFLError, ConfigurationError, DivergenceError, ResolutionError
from vwwave.solver import (Grid, dalembert_oracle, lift_state, second_difference, solve, solve_ladder,
                           spatial_gradient, state_vector)

G0 = lambda x: np.exp(-x**2)  # noqa: E731


def test_dalembert_examples():
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(dalembert_oracle(1.0, np.cos, None, math.pi, x), -np.cos(x), atol=1e-14)
    np.testing.assert_allclose(dalembert_oracle(0.0, np.sin, np.cos, 0.7, x), np.sin(x) + 0.7 * np.cos(x))
    one = lambda y: np.ones_like(np.asarray(y, dtype=float))  # noqa: E731
    np.testing.assert_allclose(dalembert_oracle(4.0, lambda y: 0 * y, one, 1.3, x), 1.3, rtol=1e-12)


def test_zero_coefficient_keeps_data():
    g = Grid(points=256)
    tr = solve([0.0], g, G0)
    for u in tr.u:
        np.testing.assert_allclose(u, G0(g.axis), rtol=0, atol=1e-15)


def test_dalembert_accuracy_and_order():
    errs = []
    for N in (512, 1024, 2048):
        g = Grid(points=N, horizon=1.0)
        tr = solve([1.0], g, G0)
        assert tr.times[-1] == pytest.approx(1.0)
        ex = dalembert_oracle(1.0, G0, None, 1.0, g.axis)
        errs.append(g.norm(tr.u[-1] - ex) / g.norm(ex))
    assert errs[-1] <= 1e-3
    assert math.log2(errs[-2] / errs[-1]) == pytest.approx(2.0, abs=0.3)


def test_energy_conserved_constant():
    g = Grid(points=1024)
    tr = solve([1.0], g, G0)
    st_ = state_vector(tr)
    E = [g.norm(U[0]) ** 2 + g.norm(U[1]) ** 2 for U in st_.U]
    assert max(abs(e / E[0] - 1) for e in E) < 1e-3


def test_two_dimensional_separable():
    g2 = Grid(dimension=2, points=128, extent=6.0, horizon=0.5)
    g1 = Grid(points=128, extent=6.0, horizon=0.5)
    tr2 = solve([1.0, 0.0], g2, lambda x, y: np.exp(-x**2) * np.ones_like(y))
    tr1 = solve([1.0], g1, G0, dt=tr2.dt, steps=tr2.steps)
    np.testing.assert_allclose(tr2.u[-1][:, 5], tr1.u[-1], atol=1e-13)


def test_cfl_and_sign_guards():
    g = Grid(points=128)
    with pytest.raises(CFLError):
        solve([1.0], g, G0, dt=g.spacing, steps=g.stride)
    with pytest.raises(ConfigurationError):
        solve([-1.0], g, G0)
    with pytest.raises(ConfigurationError):
        solve([1.0, 1.0], g, G0)
    with pytest.raises(CFLError):
        Grid(cfl=0.8)


def test_divergence_detected():
    g = Grid(points=64)
    with pytest.raises(DivergenceError):
        solve([1.0], g, G0, forcing=lambda t: np.full(64, np.nan))


def test_ladder_shares_dt():
    g = Grid(points=256)
    sw = solve_ladder([[np.ones(256)], [np.full(256, 4.0)]], g, [G0, G0], ladder=[0.5, 0.25], workers=2)
    assert sw[0].dt == sw[1].dt == sw.dt
    assert sw.dt * 2.0 <= 0.5 * g.spacing * (1 + 1e-12)
    np.testing.assert_array_equal(sw.ladder, [0.5, 0.25])


def test_ladder_workers_deterministic():
    g = Grid(points=256)
    sets = [[np.full(256, c)] for c in (1.0, 2.0, 3.0)]
    a = solve_ladder(sets, g, [G0] * 3, workers=1)
    b = solve_ladder(sets, g, [G0] * 3, workers=3)
    for ta, tb in zip(a, b):
        np.testing.assert_array_equal(ta.u, tb.u)


def test_state_vector_synthetic():
    g = Grid(points=128, boundary="zero", extent=4.0)
    x = g.axis
    times = np.linspace(0, 1, 5)
    from vwwave.solver import SolveTrace

    tr = SolveTrace(0.0, g, times, np.array([x + 0 * t for t in times]), np.zeros((5, 128)), 0.1, 10, ())
    U = state_vector(tr, method="fd4").U
    np.testing.assert_allclose(U[:, 0, 2:-2], 1.0, atol=1e-12)
    np.testing.assert_array_equal(U[:, 1], 0.0)
    tr = SolveTrace(0.0, g, times, np.array([np.full(128, t) for t in times]), np.ones((5, 128)), 0.1, 10, ())
    U = state_vector(tr, time_derivative="checkpoints").U
    np.testing.assert_allclose(U[:, 1], 1.0, atol=1e-12)
    np.testing.assert_allclose(U[:, 0, 2:-2], 0.0, atol=1e-12)
    with pytest.raises(ResolutionError):
        state_vector(tr, time_derivative="checkpoints", max_stride=1)


def test_state_vector_matches_analytic_gradient():
    g = Grid(points=2048)
    tr = solve([1.0], g, G0)
    U = state_vector(tr).U[-1]
    dG = lambda y: -2 * y * np.exp(-y**2)  # noqa: E731
    x, t = g.axis, tr.times[-1]
    ux = 0.5 * (dG(x - t) + dG(x + t))
    ut = 0.5 * (-dG(x - t) + dG(x + t))
    assert g.norm(U[0] - ux) / g.norm(ux) < 1e-3
    assert g.norm(U[1] - ut) / g.norm(ut) < 1e-3


@given(st.integers(1, 6))
def test_spectral_gradient_of_modes(k):
    g = Grid(points=64, extent=math.pi)
    u = np.sin(k * g.axis)
    np.testing.assert_allclose(spatial_gradient(u, g, 0), k * np.cos(k * g.axis), atol=1e-10)


def test_lift_state_shapes():
    g = Grid(dimension=2, points=32, horizon=0.1)
    tr = solve([1.0, 1.0], g, lambda x, y: np.exp(-x**2 - y**2))
    s = lift_state(state_vector(tr), g)
    assert s.U.shape[1] == 6 and s.level == 1


def test_second_difference_zero_boundary():
    u = np.ones(8)
    d = second_difference(u, 1.0, 0, "zero")
    assert d[0] == -1 and d[-1] == -1 and np.all(d[1:-1] == 0)


def test_trace_export(tmp_path):
    g = Grid(points=32, horizon=0.2)
    tr = solve([1.0], g, G0, meta={"kernel": "k"})
    p = tr.export_csv(tmp_path, every=2)
    assert p.name == "trace_k_eps0.000000e+00.csv"
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:32, 2], tr.u[0])
    assert p.with_suffix(".json").exists()
