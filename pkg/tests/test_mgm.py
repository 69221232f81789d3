import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import linalg, optimize

from gaussblab import mgm
from gaussblab import special as sp
from gaussblab.bodies import Ball, Box, Strip, full_space
from gaussblab.corpus import random_rotation
from gaussblab.errors import DomainError, StallError


def _sym(A):
    return 0.5 * (A + A.T)


@given(arrays(float, (3, 3), elements=st.floats(-2, 2)))
def test_sym_expm_matches_scipy(A):
    S = _sym(A)
    np.testing.assert_allclose(mgm.sym_expm(S), linalg.expm(S), rtol=1e-10, atol=1e-12)


@given(arrays(float, (3, 3), elements=st.floats(-1, 1)))
def test_sym_logm_inverts_expm(A):
    S = _sym(A)
    np.testing.assert_allclose(mgm.sym_logm(mgm.sym_expm(S)), S, atol=1e-10)


@given(arrays(float, (4, 4), elements=st.floats(-5, 5)))
def test_traceless(A):
    assert abs(np.trace(mgm.traceless(A))) <= 1e-12


def test_isotropy_residual_and_direction():
    assert mgm.isotropy_residual(np.eye(3) * 0.4) == pytest.approx(0.0, abs=1e-15)
    M = np.diag([0.2, 0.6])
    D = mgm.ascent_direction(M)
    assert np.trace(D) == pytest.approx(0.0) and D[0, 0] > 0 > D[1, 1]
    assert mgm.isotropy_residual(M) > 0


def test_evaluate_volume_preserving():
    D = mgm.random_traceless(3, np.random.default_rng(0))
    s = mgm.evaluate(Box([1.0, 2.0, 0.5]), D)
    assert np.linalg.det(s.T) == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(s.T, s.T.T, atol=1e-12)


def _box_oracle(a1, a2):
    """Bisection on the derivative of the log-measure of [-s a1, s a1] x [-a2/s, a2/s]."""
    f = lambda u: sp.log_strip_mass(math.exp(u) * a1) + sp.log_strip_mass(a2 * math.exp(-u))
    h = 1e-6
    return math.exp(optimize.brentq(lambda u: (f(u + h) - f(u - h)) / (2 * h), -5, 5, xtol=1e-14))


def test_box_converges_to_oracle():
    res = mgm.mgm_solve(Box([1.0, 2.0]), seed=1, samples=200_000)
    s = _box_oracle(1.0, 2.0)
    assert s == pytest.approx(math.sqrt(2.0), rel=1e-7)
    assert res.converged and res.state.iteration <= 200
    np.testing.assert_allclose(res.state.T, np.diag([s, 1 / s]), atol=2e-3)
    objs = [t["objective"] for t in res.trajectory]
    assert objs[-1] >= objs[0]
    assert len(res.trajectory) == res.state.iteration + 1


def test_ball_needs_no_steps():
    res = mgm.mgm_solve(Ball(1.0, 3))
    assert res.converged and res.state.iteration == 0


def test_rotated_box_isotropic_position_is_a_cube():
    Q = random_rotation(np.random.default_rng(2), 2)
    from gaussblab.bodies import linear_image
    res = mgm.mgm_solve(linear_image(Box([0.5, 2.0]), Q), seed=2, samples=200_000)
    assert res.converged
    sv = np.linalg.svd(res.state.T, compute_uv=False)
    np.testing.assert_allclose(sorted(sv), [0.5, 2.0], rtol=5e-3)


def test_solver_errors():
    with pytest.raises(DomainError):
        mgm.mgm_solve(full_space(2))
    with pytest.raises(DomainError):
        mgm.mgm_solve(Box([1.0, 2.0]), tol=0.0)
    s = mgm.evaluate(Box([1.0, 2.0]), np.zeros((2, 2)))
    with pytest.raises(DomainError):
        mgm.mgm_step(Box([1.0, 2.0]), s, step=0.0)


def test_stall_error_carries_diagnostics(monkeypatch):
    body = Box([1.0, 2.0])
    state = mgm.evaluate(body, np.zeros((2, 2)))
    real = mgm.evaluate

    def worse(*args, **kw):
        s = real(*args, **kw)
        s.objective.value = -1.0
        return s

    monkeypatch.setattr(mgm, "evaluate", worse)
    with pytest.raises(StallError) as exc:
        mgm.mgm_step(body, state)
    assert "objective" in exc.value.diagnostics


def test_log_concavity_probe_closed_form():
    pr = mgm.log_concavity_probe(Strip([1.0, 0.0], 1.0), np.diag([1.0, -1.0]), [0, 0.5, 1.0, 1.5])
    assert pr.method == "closed_form" and pr.holds and len(pr.slacks) == 2


def test_log_concavity_probe_monte_carlo():
    from gaussblab.corpus import random_polytope
    K = random_polytope(np.random.default_rng(1), 3)
    D = mgm.random_traceless(3, np.random.default_rng(2))
    pr = mgm.log_concavity_probe(K, D, [0.0, 0.5, 1.0], seed=1, samples=100_000)
    assert pr.method == "monte_carlo" and pr.holds


def test_probe_grid_validation():
    with pytest.raises(DomainError):
        mgm.log_concavity_probe(Box([1.0, 1.0]), np.zeros((2, 2)), [0.0, 1.0])
    with pytest.raises(DomainError):
        mgm.log_concavity_probe(Box([1.0, 1.0]), np.zeros((2, 2)), [0.0, 1.0, 0.5])


def test_gradient_check_box():
    gc = mgm.gradient_check(Box([1.0, 2.0]), directions=3, seed=3, samples=400_000)
    assert gc.holds


def test_procrustes_distance():
    T = np.diag([2.0, 0.5])
    Q = random_rotation(np.random.default_rng(0), 2)
    assert mgm.procrustes_distance(Q @ T, T) == pytest.approx(0.0, abs=1e-12)
    assert mgm.procrustes_distance(T, np.eye(2)) == pytest.approx(math.hypot(1.0, 0.5))


def test_uniqueness_experiment():
    uq = mgm.uniqueness_experiment(Box([1.0, 2.0]), starts=2, seed=4, samples=100_000)
    assert uq.asserted and all(uq.converged)
    assert uq.gap_resolved and uq.max_procrustes <= 1e-2
    with pytest.raises(DomainError):
        mgm.uniqueness_experiment(Box([1.0, 2.0]), starts=1)
