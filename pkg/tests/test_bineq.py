import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate, stats

from gaussblab import bineq
from gaussblab.bodies import Ball, Box, Ellipsoid, HPolytope, Product, Strip, full_space
from gaussblab.errors import DimensionMismatchError, DomainError
from gaussblab.functions import FunctionSpec


def _strip_mass_quad(s):
    return 2.0 * integrate.quad(stats.norm.pdf, 0.0, s, epsabs=1e-14, epsrel=1e-13)[0]


def _log_strip_quad(t, R=1.0):
    return math.log(_strip_mass_quad(math.exp(t) * R))


# ---------------------------------------------------------------- deficits

def test_strip_deficit_against_1d_oracle():
    rep = bineq.deficit(Strip([1.0, 0.0], 1.0), 1.0, 4.0)
    oracle = _strip_mass_quad(2.0) / math.sqrt(_strip_mass_quad(1.0) * _strip_mass_quad(4.0)) - 1
    assert rep.engine == "closed_form"
    assert rep.epsilon == pytest.approx(oracle, abs=1e-12)
    assert rep.epsilon == pytest.approx(0.1552552706, abs=1e-10)


def test_full_space_deficit_is_zero():
    rep = bineq.deficit(full_space(3), 0.5, 2.0)
    assert rep.epsilon == 0.0 and rep.epsilon_error == 0.0


def test_equal_endpoints_give_zero():
    rep = bineq.strong_deficit(HPolytope([[1.0, 0.2], [0.0, 1.0]], [1.0, 1.0]), [0.1, 0.2],
                               [0.1, 0.2], samples=10_000)
    assert rep.epsilon == 0.0 and rep.epsilon_error == 0.0


def test_cylinder_scaled_along_full_block_has_zero_deficit():
    K = Product((((0,), Box([0.7])), ((1, 2), None)))
    rep = bineq.strong_deficit(K, [0.0, 0.3, -0.4], [0.0, -0.8, 0.5], "monte_carlo",
                               seed=1, samples=100_000)
    assert abs(rep.epsilon) <= 3 * rep.epsilon_error + 1e-15


@pytest.mark.parametrize("K,x,y", [
    (Box([1.0, 1.0]), [0.0, 0.0], [1.0, -0.5]),
    (Ball(1.0, 3), [0.0, 0.0, 0.0], [0.6, 0.6, 0.6]),
    (Strip([1.0, 2.0], 0.8), [0.2, -0.3], [-0.4, 0.5]),
], ids=["box", "ball", "strip"])
def test_monte_carlo_deficit_matches_closed_form(K, x, y):
    exact = bineq.strong_deficit(K, x, y)
    mc = bineq.strong_deficit(K, x, y, "monte_carlo", seed=3, samples=400_000)
    assert exact.engine == "closed_form" and mc.engine == "monte_carlo"
    assert abs(mc.epsilon - exact.epsilon) <= 4 * mc.epsilon_error


@given(arrays(float, 2, elements=st.floats(0.2, 3.0)),
       arrays(float, 2, elements=st.floats(-1.5, 1.5)),
       arrays(float, 2, elements=st.floats(-1.5, 1.5)))
def test_box_strong_deficit_nonnegative(a, x, y):
    rep = bineq.strong_deficit(Box(a), x, y)
    assert rep.epsilon >= -1e-12


def test_random_polytope_deficit_nonnegative():
    K = HPolytope([[1.0, 0.3], [-0.2, 1.0], [0.7, 0.7]], [1.0, 0.8, 1.1])
    rep = bineq.deficit(K, 0.5, 2.0, seed=2, samples=200_000)
    assert rep.holds(3.0)
    lg, lg_err = rep.log_gap
    assert lg == pytest.approx(-math.log1p(rep.epsilon))


def test_deficit_argument_errors():
    with pytest.raises(DomainError):
        bineq.deficit(Box([1.0]), 2.0, 1.0)
    with pytest.raises(DimensionMismatchError):
        bineq.strong_deficit(Box([1.0, 1.0]), [0.0], [1.0])
    with pytest.raises(DomainError):
        bineq.deficit(Box([1.0]), 0.5, 2.0, engine="nope")


def test_deficit_csv_row_matches_fields():
    rep = bineq.deficit(Box([1.0, 2.0]), 0.5, 2.0)
    assert len(rep.csv_row()) == len(bineq.DeficitReport.CSV_FIELDS)


# ---------------------------------------------------------------- Hessian

def test_strip_hessian_against_finite_difference():
    h = 1e-3
    f = lambda t: _log_strip_quad(t)
    d1 = (f(h) - 2 * f(0) + f(-h)) / h ** 2
    d2 = (f(h / 2) - 2 * f(0) + f(-h / 2)) / (h / 2) ** 2
    oracle = (4 * d2 - d1) / 3
    val = bineq.log_measure_hessian(Strip([1.0, 0.0], 1.0), [1.0, 1.0]).value
    assert val == pytest.approx(oracle, abs=1e-6)
    assert val == pytest.approx(-0.5025036312608813, rel=1e-12)


def test_full_space_hessian_zero():
    for n in range(1, 6):
        assert abs(bineq.log_measure_hessian(full_space(n), np.ones(n)).value) <= 1e-12


@given(arrays(float, 3, elements=st.floats(0.2, 3.0)),
       arrays(float, 3, elements=st.floats(-2.0, 2.0)))
def test_box_hessian_nonpositive(a, d):
    assert bineq.log_measure_hessian(Box(a), d).value <= 1e-10


def test_hessian_monte_carlo_matches_exact():
    K = Box([0.8, 1.5])
    d = np.array([1.0, -0.5])
    ex = bineq.log_measure_hessian(K, d, 0.3)
    mc = bineq.log_measure_hessian(K, d, 0.3, seed=2, samples=400_000, engine="monte_carlo")
    assert abs(ex.value - mc.value) <= 4 * mc.std_error


def test_ellipsoid_hessian_nonpositive():
    K = Ellipsoid([[1.0, 0.4], [0.4, 2.0]])
    h = bineq.log_measure_hessian(K, [1.0, 1.0], seed=1, samples=200_000)
    assert h.value <= 3 * h.std_error


def test_hessian_sample_floor():
    with pytest.raises(DomainError):
        bineq.log_measure_hessian(Ellipsoid([[1.0, 0.4], [0.4, 2.0]]), [1.0, 1.0], samples=100)


# ---------------------------------------------------------------- midpoint identity

@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_midpoint_identity_strip(R):
    g = bineq.midpoint_gap_identity(Strip([1.0, 0.0], R), [0.0, 0.0], [math.log(4.0), 0.0], 64)
    assert g.residual <= 1e-3 and g.ok
    # the identity: V(mid) + beta = (V(x) + V(y)) / 2
    Vx, Vy = _log_strip_quad(0.0, R), _log_strip_quad(math.log(4.0), R)
    Vm = _log_strip_quad(math.log(2.0), R)
    assert g.rhs == pytest.approx(0.5 * (Vx + Vy), abs=1e-10)
    assert g.beta == pytest.approx(0.5 * (Vx + Vy) - Vm, abs=1e-3)


def test_midpoint_identity_monte_carlo():
    K = Ellipsoid([[1.0, 0.3], [0.3, 0.8]])
    g = bineq.midpoint_gap_identity(K, [0.0, 0.0], [0.4, -0.3], 8, seed=1, samples=100_000,
                                    engine="monte_carlo")
    assert g.ok


def test_midpoint_identity_arguments():
    with pytest.raises(DomainError):
        bineq.midpoint_gap_identity(Box([1.0]), [0.0], [1.0], quad_nodes=7)
    g = bineq.midpoint_gap_identity(Box([1.0]), [0.5], [0.5])
    assert g.residual == 0.0 and g.beta == 0.0


# ---------------------------------------------------------------- Poincare gaps

def test_linear_poincare_gap_box():
    g = bineq.poincare_gap(Box([1.0, 1.0]), FunctionSpec.linear([1.0, 0.0]))
    m2 = integrate.quad(lambda x: x * x * stats.norm.pdf(x), -1, 1)[0] / _strip_mass_quad(1.0)
    assert g.gap == pytest.approx(1.0 - m2, abs=1e-12)
    assert g.gap == pytest.approx(0.7088749, abs=1e-7)


def test_even_half_gap_is_minus_hessian():
    K = Box([0.7, 1.3, 2.0])
    d = np.array([1.0, -0.4, 0.3])
    g = bineq.poincare_gap(K, FunctionSpec.quadratic(np.diag(d)), mode="even_half")
    h = bineq.log_measure_hessian(K, d)
    assert g.gap == pytest.approx(-h.value, abs=1e-12)
    assert g.gap >= 0


def test_poincare_gap_monte_carlo_nonnegative():
    K = HPolytope([[1.0, 0.3], [-0.2, 1.0], [0.7, 0.7]], [1.0, 0.8, 1.1])
    f = FunctionSpec.polynomial({(1, 0): 1.0, (0, 3): 0.2, (1, 1): 0.5}, 2)
    g = bineq.poincare_gap(K, f, seed=1, samples=200_000)
    assert g.method == "monte_carlo" and g.gap >= -3 * g.gap_error


def test_poincare_gap_errors():
    with pytest.raises(DomainError):
        bineq.poincare_gap(Box([1.0]), FunctionSpec.linear([1.0]), mode="even_half")
    with pytest.raises(DimensionMismatchError):
        bineq.poincare_gap(Box([1.0, 1.0]), FunctionSpec.linear([1.0]))
    with pytest.raises(DomainError):
        bineq.poincare_gap(Box([1.0]), FunctionSpec.linear([1.0]), mode="odd")
