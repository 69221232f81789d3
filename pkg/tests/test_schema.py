import json

import numpy as np
import pytest

from gaussblab.bodies import Ball, Box, Product, Strip, linear_image, scale_diag
from gaussblab.corpus import standard_corpus
from gaussblab.errors import DimensionMismatchError, SchemaError
from gaussblab.functions import FunctionSpec
from gaussblab.schema import body_from_dict, load_body, load_function, spot_check


def test_ball_default_dimension():
    K = load_body('{"type":"ball","radius":1}')
    assert isinstance(K, Ball) and K.dim == 1 and K.radius == 1.0


def test_box():
    K = load_body('{"type":"box","half_widths":[1,2]}')
    assert isinstance(K, Box)
    np.testing.assert_array_equal(K.half_widths, [1.0, 2.0])


@pytest.mark.parametrize("text,field,message", [
    ('{"type":"box","half_widths":[-1]}', "half_widths", "half_widths must be positive"),
    ('{"type":"ball","radius":0}', "radius", "radius must be positive"),
    ('{"type":"ball"}', "radius", "missing"),
    ('{"type":"strip","direction":[1,0],"half_width":-2}', "half_width", "positive"),
    ('{"type":"polytope","normals":[[1,0]],"offsets":[-1]}', "offsets", "offsets must be positive"),
    ('{"type":"blob"}', "type", "unknown body type"),
    ('{"half_widths":[1]}', "type", "missing"),
    ('{"type":"ellipsoid","matrix":[1,2]}', "matrix", "matrix"),
])
def test_schema_errors_name_the_field(text, field, message):
    with pytest.raises(SchemaError) as exc:
        load_body(text)
    assert exc.value.field == field
    assert message in str(exc.value)


def test_dimension_mismatch_messages():
    with pytest.raises(DimensionMismatchError, match="x"):
        load_body({"type": "diag_scaled", "x": [0, 0, 0], "body": {"type": "box", "half_widths": [1, 1]}})
    with pytest.raises(DimensionMismatchError, match="matrix"):
        load_body({"type": "linear_image", "matrix": [[1]], "body": {"type": "box", "half_widths": [1, 1]}})
    with pytest.raises(DimensionMismatchError, match="offsets"):
        load_body({"type": "polytope", "normals": [[1, 0], [0, 1]], "offsets": [1]})


def test_invalid_json():
    with pytest.raises(SchemaError, match="invalid JSON"):
        load_body("{not json")


def test_product_with_full_block():
    K = load_body({"type": "product", "blocks": [{"coords": [0], "body": {"type": "box", "half_widths": [1]}},
                                                 {"coords": [1], "body": "full"}]})
    assert isinstance(K, Product) and K.dim == 2


@pytest.mark.parametrize("K", [
    Box([1.0, 2.0]), Ball(1.5, 3), Strip([3.0, 4.0], 0.7),
    Product((((0,), Box([1.0])), ((1, 2), None))),
    scale_diag(Box([1.0, 2.0]), [0.1, -0.2]),
    linear_image(Ball(1.0, 2), [[1.0, 0.5], [0.0, 1.0]]),
] + [b for _, b in standard_corpus(0)])
def test_to_dict_roundtrip(K):
    text = json.dumps(K.to_dict())
    K2 = load_body(text)
    assert K2.to_dict() == K.to_dict()
    P = np.random.default_rng(0).standard_normal((200, K.dim))
    np.testing.assert_array_equal(K.contains(P), K2.contains(P))


def test_load_from_path(tmp_path):
    p = tmp_path / "box.json"
    p.write_text('{"type":"box","half_widths":[1,2]}')
    assert load_body(str(p)).dim == 2


class _Lopsided(Box):
    def contains(self, P):
        P = np.atleast_2d(P)
        return super().contains(P) & (P[:, 0] > -0.5)


def test_spot_check_rejects_asymmetric():
    with pytest.raises(SchemaError, match="symmetric"):
        spot_check(_Lopsided([1.0, 1.0]))


class _Cross(Box):
    def contains(self, P):
        P = np.atleast_2d(P)
        return (np.abs(P[:, 0]) <= 0.2) | (np.abs(P[:, 1]) <= 0.2)


def test_spot_check_rejects_nonconvex():
    with pytest.raises(SchemaError, match="convex"):
        spot_check(_Cross([1.0, 1.0]))


def test_load_function_roundtrip():
    f = FunctionSpec.polynomial({(1, 0): 1.0, (3, 0): 0.1}, 2)
    g = load_function(json.dumps(f.to_dict()))
    X = np.random.default_rng(1).standard_normal((10, 2))
    np.testing.assert_allclose(g.value(X), f.value(X))
