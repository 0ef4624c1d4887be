import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from ceramsim import tensorlab as tl

finite = st.floats(-1.0, 1.0, allow_nan=False)


def random_rotation(seed):
    return Rotation.random(random_state=seed).as_matrix()


def test_log_strain_of_stretch():
    F = np.diag([1.2, 0.9, 1.0])
    eps = tl.log_strain_from_defgrad(F)
    assert np.allclose(eps, np.diag(np.log([1.2, 0.9, 1.0])), atol=1e-15)


@given(st.integers(0, 10_000), st.lists(st.floats(0.3, 3.0), min_size=3, max_size=3))
@settings(max_examples=50, deadline=None)
def test_log_strain_ignores_rotation(seed, stretches):
    U = np.diag(stretches)
    R = random_rotation(seed)
    assert np.allclose(tl.log_strain_from_defgrad(R @ U), tl.log_strain_from_defgrad(U),
                       atol=1e-12)


def test_log_strain_trace_is_log_jacobian():
    F = np.array([[1.1, 0.2, 0.0], [0.05, 0.95, 0.1], [0.0, -0.1, 1.02]])
    assert tl.trace(tl.log_strain_from_defgrad(F)) == pytest.approx(np.log(np.linalg.det(F)),
                                                                      abs=1e-13)


@pytest.mark.parametrize("F", [np.diag([1.0, 1.0, -1.0]), np.zeros((3, 3)), np.eye(2)])
def test_log_strain_rejects_bad_input(F):
    with pytest.raises(tl.InvalidDeformationError):
        tl.log_strain_from_defgrad(F)


def test_voigt_round_trip():
    a = tl.sym(np.arange(9.0).reshape(3, 3))
    assert np.array_equal(tl.from_voigt(tl.to_voigt(a)), a)
    w = tl.voigt_weights()
    b = tl.sym(np.random.default_rng(1).normal(size=(3, 3)))
    assert np.dot(w * tl.to_voigt(a), tl.to_voigt(b)) == pytest.approx(tl.ddot(a, b))


def test_stiffness_matrix_matches_tensor_law():
    lam, mu = 1.3, 0.7
    eps = tl.sym(np.random.default_rng(2).normal(size=(3, 3)))
    sig = lam * tl.trace(eps) * tl.I3 + 2 * mu * eps
    assert np.allclose(tl.isotropic_stiffness(lam, mu) @ tl.to_voigt(eps), tl.to_voigt(sig))


def test_lode_anchors():
    comp = tl.stress_invariants(np.diag([-100.0, 0.0, 0.0]))
    ext = tl.stress_invariants(np.diag([100.0, 0.0, 0.0]))
    assert comp.theta_c == pytest.approx(np.pi / 3, abs=1e-12)
    assert ext.theta_c == pytest.approx(0.0, abs=1e-12)
    assert comp.p == pytest.approx(100 / 3) and comp.q == pytest.approx(100.0)


def test_hydrostatic_state_is_degenerate():
    inv = tl.stress_invariants(-5.0 * tl.I3)
    assert inv.degenerate and inv.q == 0.0 and inv.p == 5.0


@given(st.lists(finite, min_size=6, max_size=6))
@settings(max_examples=200, deadline=None)
def test_lode_angle_matches_cubic_invariant(v):
    sig = tl.from_voigt(np.array(v))
    inv = tl.stress_invariants(sig)
    if inv.degenerate or inv.q < 1e-3:
        return
    assert 0.0 <= inv.theta_c <= np.pi / 3
    assert np.cos(3 * inv.theta_c) == pytest.approx(inv.lode_arg, abs=1e-7)


@given(st.integers(0, 10_000), st.lists(finite, min_size=6, max_size=6))
@settings(max_examples=50, deadline=None)
def test_invariants_are_rotation_invariant(seed, v):
    sig = tl.from_voigt(np.array(v))
    R = random_rotation(seed)
    a, b = tl.stress_invariants(sig), tl.stress_invariants(R @ sig @ R.T)
    assert a.p == pytest.approx(b.p, abs=1e-12)
    assert a.q == pytest.approx(b.q, abs=1e-12)
    if a.q > 1e-3:
        assert a.theta_c == pytest.approx(b.theta_c, abs=1e-8)
