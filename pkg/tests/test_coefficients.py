import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vwwave import coefficients as co
from vwwave.errors import ConfigurationError, GlaeserViolation, ResolutionError
from vwwave.grid import Grid
from vwwave.mollifier import PositiveScale, build_bump, default_ladder

LADDER = default_ladder()  # 8 points


@pytest.fixture(scope="module")
def fine():
    return Grid(points=8192, extent=2.0)


def test_validation():
    with pytest.raises(ConfigurationError):
        co.constant(-1.0)
    with pytest.raises(ConfigurationError):
        co.heaviside(height=-1)
    with pytest.raises(ConfigurationError):
        co.point_masses([0, 1], [1.0, -1.0])
    with pytest.raises(ConfigurationError):
        co.point_masses([0, 1], [1.0])
    with pytest.raises(ConfigurationError):
        co.example1(2.0, 1.0)


def test_example1_profile():
    x = np.linspace(-3, 3, 601)
    a = co.example1_profile(x)
    assert np.all(a[x <= 0] == 0)
    near = (x > 0) & (x <= 1)
    np.testing.assert_allclose(a[near], 0.5 * x[near] ** 2, rtol=1e-14)
    assert np.all(a[x >= 2] == 0) and np.all(a >= 0)


def test_constant_net_is_exact(psi):
    g = Grid(points=128)
    net = co.regularize(co.constant(1.0), psi, PositiveScale(), LADDER, g)
    for e in net:
        assert np.all(e.a == 1.0) and np.all(e.grad == 0)
    fit = co.supnorm_exponent_fit(net, 1)
    assert fit.identically_zero and fit.slope == 0


def test_heaviside_half_at_jump(bump):
    x = np.array([0.0])
    for om in (0.5, 0.05):
        assert co.regularize_profile(co.heaviside(), bump, om, x)[0][0] == pytest.approx(0.5)


def test_heaviside_positive_kernel_required(psi):
    with pytest.raises(ConfigurationError):
        co.regularize_profile(co.heaviside(), psi, 0.5, np.zeros(1))


def test_heaviside_exponents(bump, fine):
    net = co.regularize(co.heaviside(), bump, PositiveScale(), LADDER, fine)
    assert co.supnorm_exponent_fit(net, 1).slope == pytest.approx(1.0, abs=0.2)
    assert co.supnorm_exponent_fit(net, 2).slope == pytest.approx(2.0, abs=0.2)
    assert np.all(np.array([e.a.min() for e in net]) >= 0)


def test_resolution_guard(bump):
    with pytest.raises(ResolutionError):
        co.regularize(co.heaviside(), bump, PositiveScale(), LADDER, Grid(points=256))


def test_glaeser_constant_is_zero(bump):
    g = Grid(points=64)
    net = co.regularize(co.constant(2.0), bump, PositiveScale(), LADDER[:4], g)
    assert np.all(co.glaeser_check(net).ratios == 0)


def test_glaeser_x2_equality():
    x = np.linspace(-1, 1, 1001)
    net = co.RegularizedNet.from_samples(x**2, 2 * x, np.full_like(x, 2.0))
    rep = co.glaeser_check(net)
    assert rep.ratios[0] == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("field", [co.heaviside(), co.example1(), co.point_masses([-0.5, 0.5], [1.0, 2.0])])
def test_glaeser_distributional_nets(field, bump, fine):
    rep = co.glaeser_check(co.regularize(field, bump, PositiveScale(), LADDER, fine))
    assert rep.passed and np.all(rep.ratios <= 1 + 1e-6)


def test_glaeser_violation_raised():
    x = np.linspace(0, 1, 101)
    # a = x but claimed Hessian 0: |a'|^2 = 1 > 0 = 2 M a
    net = co.RegularizedNet.from_samples(x, np.ones_like(x), np.zeros_like(x))
    with pytest.raises(GlaeserViolation):
        co.glaeser_check(net, floor=0.0)


@given(st.floats(0.05, 3.0), st.floats(-0.5, 0.5))
def test_glaeser_holds_for_quadratic_nets(scale, center):
    g = Grid(points=256, extent=2.0)
    net = co.regularize(co.quadratic(scale, center), build_bump(), PositiveScale(), [0.5, 0.25], g)
    assert co.glaeser_check(net, strict=False).ratios.max() <= 1 + 1e-6


def test_example1_regularisation_order(fine):
    # symmetric kernels cancel the first moment: error is second order
    f = co.example1()
    x = fine.axis
    sym, off = build_bump(), build_bump(offset=0.5)
    oms = np.array(LADDER[:6])
    e_sym = [np.max(np.abs(co.regularize_profile(f, sym, o, x, 0)[0] - f.exact(x))) for o in oms]
    e_off = [np.max(np.abs(co.regularize_profile(f, off, o, x, 0)[0] - f.exact(x))) for o in oms]
    assert np.polyfit(np.log(oms), np.log(e_sym), 1)[0] == pytest.approx(2.0, abs=0.2)
    assert np.polyfit(np.log(oms), np.log(e_off), 1)[0] == pytest.approx(1.0, abs=0.2)


def test_two_dimensional_lift(bump):
    g = Grid(dimension=2, points=256, extent=2.0)
    net = co.regularize(co.heaviside(axis=1), bump, PositiveScale(), [0.25, 0.125], g)
    e = net[0]
    assert e.a.shape == (256, 256)
    assert np.all(e.grad[0] == 0)
    np.testing.assert_array_equal(e.a[0], e.a[17])


def test_net_csv(tmp_path, bump):
    g = Grid(points=256, extent=2.0)
    net = co.regularize(co.heaviside(), bump, PositiveScale(), [0.5, 0.25], g)
    paths = net.export_csv(tmp_path)
    data = np.loadtxt(paths[0], delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 1], net[0].a)
