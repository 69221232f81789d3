import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaussblab.bodies import (Ball, Box, DiagScaled, Ellipsoid, HPolytope, LinearImage, Product,
                              Strip, contains, full_space, in_radius, in_radius_report,
                              linear_image, scale_diag, support, unit_facets)
from gaussblab.corpus import random_rotation, random_symmetric_bodies, standard_corpus
from gaussblab.errors import DimensionMismatchError, SchemaError, SingularMatrixError

CORPUS = standard_corpus(0)
LABELS = [label for label, _ in CORPUS]
BODIES = dict(CORPUS)


def test_box_membership_and_support():
    K = Box([1.0, 2.0])
    assert contains(K, [0.9, -1.9]) and not contains(K, [1.1, 0.0])
    u = np.array([3.0, 4.0]) / 5
    assert support(K, u) == pytest.approx(0.6 + 1.6)


def test_ball_gauge_and_support():
    K = Ball(2.0, 3)
    assert K.gauge(np.array([[0.0, 3.0, 4.0]]))[0] == pytest.approx(2.5)
    assert support(K, [0.0, 0.0, 1.0]) == pytest.approx(2.0)


def test_strip_direction_is_normalized():
    K = Strip([3.0, 4.0], 1.0)
    np.testing.assert_allclose(K.direction, [0.6, 0.8])
    assert contains(K, [0.6 * 0.99, 0.8 * 0.99]) and not contains(K, [0.61, 0.81])


def test_support_requires_unit_vector():
    with pytest.raises(ValueError):
        support(Box([1.0]), [2.0])


@pytest.mark.parametrize("make,field", [
    (lambda: Ball(-1.0), "radius"),
    (lambda: Strip([0.0, 0.0], 1.0), "direction"),
    (lambda: Ellipsoid([[1.0, 2.0], [2.0, 1.0]]), "matrix"),
    (lambda: Box([]), "half_widths"),
])
def test_constructor_errors_name_field(make, field):
    with pytest.raises(SchemaError) as exc:
        make()
    assert exc.value.field == field


def test_linear_image_rejects_singular_and_mismatch():
    with pytest.raises(SingularMatrixError):
        linear_image(Box([1.0, 1.0]), [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(DimensionMismatchError):
        linear_image(Box([1.0, 1.0]), np.eye(3))


def test_unit_facets_merge_parallel_rows():
    A, b = unit_facets([[2.0, 0.0], [-1.0, 0.0], [0.0, 1.0]], [2.0, 0.5, 1.0])
    assert len(b) == 2
    row = int(np.argmax(np.abs(A[:, 0])))
    np.testing.assert_allclose(A[row], [1.0, 0.0])
    assert b[row] == pytest.approx(0.5)


# DERIVED: closed-form in-radii from elementary geometry
@pytest.mark.parametrize("body,r", [
    (Box([1.0, 2.0]), 1.0),
    (Ball(1.5, 4), 1.5),
    (Strip([1.0, 1.0], 0.3), 0.3),
    (Ellipsoid(np.diag([1.0, 4.0])), 0.5),
    (HPolytope([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [1.0, 1.0, 1.0]), 1 / math.sqrt(2)),
    (scale_diag(Box([1.0, 1.0]), [math.log(3.0), 0.0]), 1.0),
    (full_space(3), math.inf),
])
def test_in_radius_closed_forms(body, r):
    assert in_radius(body) == pytest.approx(r, rel=1e-12)


def test_numeric_in_radius_rotation_invariant():
    # a rotated product has no closed form; rotation does not change the in-radius
    base = Product((((0, 1), Ball(0.8, 2)), ((2,), Box([1.3]))))
    Q = random_rotation(np.random.default_rng(3), 3)
    K = linear_image(base, Q)
    assert isinstance(K, LinearImage)
    rep = in_radius_report(K)
    assert rep.method != "closed_form"
    assert rep.value == pytest.approx(0.8, rel=1e-5)


def test_full_space_product():
    K = full_space(2)
    assert K.is_full_space() and contains(K, [1e9, -1e9])


def test_diag_scaled_membership():
    K = scale_diag(Box([1.0, 1.0]), [math.log(2.0), 0.0])
    assert contains(K, [1.9, 0.5]) and not contains(K, [2.1, 0.5])
    assert isinstance(K, DiagScaled)


@pytest.mark.parametrize("label", LABELS)
def test_corpus_symmetry_and_midpoint_convexity(label):
    K = BODIES[label]
    rng = np.random.default_rng(1)
    P = 1.5 * rng.standard_normal((400, K.dim))
    inside = K.contains(P)
    np.testing.assert_array_equal(inside, K.contains(-P))
    Q = P[inside][:60]
    mids = 0.5 * (Q[:, None] + Q[None, :]).reshape(-1, K.dim)
    assert np.all(K.contains(mids))


@pytest.mark.parametrize("label", LABELS)
def test_gauge_homogeneous_and_support_dual(label):
    K = BODIES[label]
    rng = np.random.default_rng(2)
    P = rng.standard_normal((50, K.dim))
    np.testing.assert_allclose(K.gauge(2.5 * P), 2.5 * K.gauge(P), rtol=1e-10)
    # <x, u> <= h_K(u) for x on the boundary
    for p in P[:10]:
        g = K.gauge(p[None])[0]
        if g == 0:
            continue
        x = p / g
        u = x / np.linalg.norm(x)
        assert x @ u <= K.support(u) + 1e-9


@pytest.mark.parametrize("label", LABELS)
def test_in_radius_ball_is_contained(label):
    K = BODIES[label]
    r = in_radius(K)
    if not math.isfinite(r):
        return
    rng = np.random.default_rng(4)
    U = rng.standard_normal((500, K.dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    assert np.all(K.contains(0.999 * r * U))


@given(arrays(float, 3, elements=st.floats(0.2, 3.0)),
       arrays(float, 3, elements=st.floats(-1.0, 1.0)))
def test_scale_diag_box_rewrite(a, x):
    K = scale_diag(Box(a), x)
    np.testing.assert_allclose(K.reduced().half_widths, a * np.exp(x), rtol=1e-12)


@pytest.mark.parametrize("k", range(6))
def test_random_bodies_have_positive_in_radius(k):
    label, K = random_symmetric_bodies(6, 5)[k]
    assert 0 < in_radius(K) < math.inf
