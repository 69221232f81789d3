import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaussblab.errors import DimensionMismatchError, SchemaError
from gaussblab.functions import FunctionSpec

SPECS = [
    FunctionSpec.linear([1.0, -2.0, 0.5]),
    FunctionSpec.quadratic([[1.0, 0.3, 0.0], [0.0, 2.0, 0.1], [0.2, 0.0, -1.0]], c=0.4),
    FunctionSpec.polynomial({(1, 0, 0): 1.0, (3, 0, 0): 0.1, (1, 1, 2): -0.7, (0, 0, 0): 2.0}, 3),
]


@pytest.mark.parametrize("f", SPECS, ids=lambda f: f.kind)
@given(x=arrays(float, 3, elements=st.floats(-2, 2)))
def test_gradient_matches_central_difference(f, x):
    h = 1e-5
    fd = [(f.value(x + h * e)[0] - f.value(x - h * e)[0]) / (2 * h) for e in np.eye(3)]
    np.testing.assert_allclose(f.grad(x)[0], fd, atol=1e-6)


@pytest.mark.parametrize("f", SPECS, ids=lambda f: f.kind)
def test_dict_roundtrip(f):
    g = FunctionSpec.from_dict(f.to_dict())
    X = np.random.default_rng(0).standard_normal((20, 3))
    np.testing.assert_allclose(g.value(X), f.value(X))


def test_quadratic_is_symmetrized():
    f = FunctionSpec.quadratic([[0.0, 2.0], [0.0, 0.0]])
    np.testing.assert_allclose(f.T, [[0.0, 1.0], [1.0, 0.0]])
    assert f.value(np.array([[1.0, 1.0]]))[0] == pytest.approx(2.0)


def test_parity():
    assert FunctionSpec.quadratic(np.eye(2)).is_even()
    assert not FunctionSpec.linear([1.0, 0.0]).is_even()
    assert FunctionSpec.polynomial({(2, 2): 1.0, (0, 4): 1.0}).is_even()


def test_errors():
    with pytest.raises(DimensionMismatchError):
        FunctionSpec.linear([1.0, 2.0]).value(np.zeros((1, 3)))
    with pytest.raises(SchemaError):
        FunctionSpec.polynomial({(1, -1): 1.0})
    with pytest.raises(SchemaError):
        FunctionSpec.from_dict({"type": "spline"})
    with pytest.raises(SchemaError):
        FunctionSpec.quadratic([1.0, 2.0])
