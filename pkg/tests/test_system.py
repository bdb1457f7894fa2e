import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vwwave.errors import ConfigurationError, UnsupportedLevelError
from vwwave.system import (CoefficientData, Symbol, build_system, cancellation_residual, dense_apply_residual,
                           derive_system, lift, q_lower_bound_check, random_coefficients,
                           verify_energy_identities, verify_symmetriser)


def _dense(sys, values):
    """Dense matrices at a single point with given a-values."""
    n = sys.n
    data = CoefficientData([np.array([v]) for v in values],
                           [np.zeros((n, 1)) for _ in values], [np.zeros((n, n, 1)) for _ in values])
    return [A.dense(data)[..., 0] for A in sys.A], np.diag([q[0] if np.ndim(q) else q
                                                              for q in sys.__class__(
                                                                  sys.level, n, sys.A, sys.B, sys.Q, data
                                                              ).Q_values()])


def test_n1_matrices():
    sys = build_system(1, [np.array([3.0])])
    (A,), Q = _dense(sys, [3.0])
    np.testing.assert_array_equal(A, [[0, 1], [3.0, 0]])
    np.testing.assert_array_equal(Q, np.diag([3.0, 1.0]))


def test_n2_matrices():
    sys = build_system(2, [np.ones(1), np.ones(1)])
    (A1, A2), Q = _dense(sys, [2.0, 5.0])
    np.testing.assert_array_equal(A1, [[0, 0, 1], [0, 0, 0], [2.0, 0, 0]])
    np.testing.assert_array_equal(A2, [[0, 0, 0], [0, 0, 1], [0, 5.0, 0]])
    np.testing.assert_array_equal(Q, np.diag([2.0, 5.0, 1.0]))
    QA1 = Q @ A1
    assert sorted(zip(*np.nonzero(QA1))) == [(0, 2), (2, 0)]
    assert QA1[0, 2] == QA1[2, 0] == 2.0


def test_n3_matrices():
    sys = build_system(3, [np.ones(1)] * 3)
    As, _ = _dense(sys, [2.0, 3.0, 4.0])
    for k, A in enumerate(As):
        expect = np.zeros((4, 4))
        expect[k, 3] = 1.0
        expect[3, k] = [2.0, 3.0, 4.0][k]
        np.testing.assert_array_equal(A, expect)


def test_level1_n2_structure():
    rng = np.random.default_rng(0)
    data, _ = random_coefficients(2, 8, rng)
    s1 = derive_system(build_system(2, data))
    assert s1.size == 6
    A1 = s1.A[0].dense(data)
    base = build_system(2, data).A[0].dense(data)
    np.testing.assert_array_equal(A1[:3, :3], base)
    np.testing.assert_array_equal(A1[3:, 3:], base)
    assert not np.any(A1[:3, 3:]) and not np.any(A1[3:, :3])
    # B~ block (i, k) = d_i A_k
    B = s1.B.dense(data)
    for i in range(2):
        for k in range(2):
            blk = B[3 * i:3 * i + 3, 3 * k:3 * k + 3]
            expect = np.zeros_like(blk)
            expect[2, k] = data.da[k][i]
            np.testing.assert_array_equal(blk, expect)


def test_n1_lift_is_derivative():
    x = np.linspace(0, 1, 5)
    sys = derive_system(build_system(1, [x**2], [np.array([2 * x])], [np.full((1, 1, 5), 2.0)]))
    B = sys.B.dense(sys.data)
    np.testing.assert_array_equal(B[1, 0], 2 * x)
    assert not np.any(B[0])


def test_constant_coefficients_no_lower_order():
    data = CoefficientData([np.full(4, 2.0)], [np.zeros((1, 4))], [np.zeros((1, 1, 4))])
    for s in (derive_system(build_system(1, data)), lift(build_system(1, data), 2)):
        assert not np.any(s.B.dense(data))


def test_level_cap():
    s = lift(build_system(1, [np.ones(2)], [np.zeros((1, 2))], [np.zeros((1, 1, 2))]), 2)
    with pytest.raises(UnsupportedLevelError):
        derive_system(s)
    with pytest.raises(UnsupportedLevelError):
        CoefficientData([np.ones(2)]).value(Symbol(1.0, 0, (0, 0, 0)))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_symmetriser_exact(n):
    data, _ = random_coefficients(n, 6 if n < 4 else 3, np.random.default_rng(n))
    s = build_system(n, data)
    for level in (0, 1):
        assert verify_symmetriser(lift(s, level)) == 0.0


@given(st.integers(1, 3), st.integers(0, 2**31))
def test_q_lower_bound_property(n, seed):
    data, _ = random_coefficients(n, 4, np.random.default_rng(seed))
    assert q_lower_bound_check(build_system(n, data), vectors=8, seed=seed) >= 0


def test_cancellation_and_dense_apply():
    rng = np.random.default_rng(3)
    data1, _ = random_coefficients(1, 16, rng)
    assert cancellation_residual(data1, rng.normal(size=(2, 16))) == 0.0
    data, _ = random_coefficients(2, 8, rng)
    s = derive_system(build_system(2, data))
    assert dense_apply_residual(s) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_energy_identities(n):
    rep = verify_energy_identities(n, trials=10, seed=n)
    assert rep.passed(1e-10)
    assert set(rep.results) == {"principal_structured_vs_dense", "principal_closed_form",
                                "lower_order_structured_vs_dense", "lower_order_closed_form"}


def test_energy_identities_constant_are_zero():
    rep = verify_energy_identities(2, trials=3, constant=True, points=16)
    assert rep.max_error <= 1e-12


def test_shape_mismatch():
    with pytest.raises(ConfigurationError):
        CoefficientData([np.ones(3), np.ones(4)])
    with pytest.raises(ConfigurationError):
        build_system(2, [np.ones(3)])


def test_level2_forcing_coupling():
    data, _ = random_coefficients(1, 16, np.random.default_rng(2))
    s2 = lift(build_system(1, data), 2)
    V = np.random.default_rng(1).normal(size=(2, 16))
    f = {(): np.zeros(16), (0,): np.zeros(16), (0, 0): np.ones(16)}
    F = s2.forcing(f, lower_state=V)
    # (d_x B~) V with B~ = [[0,0],[a',0]] gives a'' V_1 in the second slot
    np.testing.assert_allclose(F[1], 1.0 + data.d2a[0][0, 0] * V[0])
    assert not np.any(F[0])
