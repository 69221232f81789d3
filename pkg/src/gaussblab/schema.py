"""JSON schema for bodies and functions, with load-time invariant spot checks."""
from __future__ import annotations

import json
import os

import numpy as np

from .bodies import (Ball, Box, DiagScaled, Ellipsoid, HPolytope, Product, Strip, SymmetricBody,
                     linear_image)
from .errors import DimensionMismatchError, SchemaError
from .functions import FunctionSpec

BODY_TYPES = ("ball", "strip", "box", "ellipsoid", "polytope", "product", "diag_scaled",
              "linear_image")


def _field(d, name):
    if name not in d:
        raise SchemaError(name, f"missing required field {name!r}")
    return d[name]


def _vector(d, name):
    v = _field(d, name)
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(name, f"{name} must be a list of numbers") from None
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise SchemaError(name, f"{name} must be a finite vector")
    return arr


def _matrix(d, name):
    v = _field(d, name)
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(name, f"{name} must be a nested list of numbers") from None
    if arr.ndim != 2 or not np.all(np.isfinite(arr)):
        raise SchemaError(name, f"{name} must be a finite matrix")
    return arr


def _number(d, name):
    v = _field(d, name)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(name, f"{name} must be a number")
    return float(v)


def body_from_dict(d) -> SymmetricBody:
    if not isinstance(d, dict):
        raise SchemaError("type", "body must be a JSON object")
    kind = _field(d, "type")
    if kind == "ball":
        r = _number(d, "radius")
        if r <= 0:
            raise SchemaError("radius", "radius must be positive")
        return Ball(r, int(d.get("dim", 1)))
    if kind == "strip":
        R = _number(d, "half_width")
        if R <= 0:
            raise SchemaError("half_width", "half_width must be positive")
        return Strip(_vector(d, "direction"), R)
    if kind == "box":
        a = _vector(d, "half_widths")
        if a.size == 0 or np.any(a < 0):
            raise SchemaError("half_widths", "half_widths must be positive")
        return Box(a)
    if kind == "ellipsoid":
        return Ellipsoid(_matrix(d, "matrix"))
    if kind == "polytope":
        A = _matrix(d, "normals")
        b = _vector(d, "offsets")
        if len(b) != len(A):
            raise DimensionMismatchError("offsets: need one offset per normal")
        if np.any(b < 0):
            raise SchemaError("offsets", "offsets must be positive")
        return HPolytope(A, b)
    if kind == "product":
        blocks = []
        for blk in _field(d, "blocks"):
            coords = _field(blk, "coords")
            sub = _field(blk, "body")
            blocks.append((tuple(coords), None if sub == "full" else body_from_dict(sub)))
        return Product(tuple(blocks))
    if kind == "diag_scaled":
        inner = body_from_dict(_field(d, "body"))
        x = _vector(d, "x")
        if x.size != inner.dim:
            raise DimensionMismatchError(f"x: length {x.size} does not match body dimension {inner.dim}")
        return DiagScaled(x, inner)
    if kind == "linear_image":
        inner = body_from_dict(_field(d, "body"))
        T = _matrix(d, "matrix")
        if T.shape != (inner.dim, inner.dim):
            raise DimensionMismatchError(f"matrix: shape {T.shape} does not match body dimension {inner.dim}")
        return linear_image(inner, T)
    raise SchemaError("type", f"unknown body type {kind!r}; expected one of {', '.join(BODY_TYPES)}")


def spot_check(body: SymmetricBody, points=100, seed=0):
    """Symmetry and midpoint convexity on random points; raises :class:`SchemaError`."""
    rng = np.random.default_rng(seed)
    P = 2.0 * rng.standard_normal((points, body.dim))
    inside = body.contains(P)
    if np.any(inside != body.contains(-P)):
        raise SchemaError("body", "membership is not centrally symmetric")
    Q = P[inside]
    if len(Q) >= 2:
        mids = 0.5 * (Q[:, None, :] + Q[None, :, :]).reshape(-1, body.dim)
        if not np.all(body.contains(mids)):
            raise SchemaError("body", "membership is not midpoint convex")
    return body


def _parse(text_or_path):
    if isinstance(text_or_path, dict):
        return text_or_path
    text = str(text_or_path)
    if not text.lstrip().startswith(("{", "[")) and os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc}") from None


def load_body(text_or_path) -> SymmetricBody:
    """Parse a body from JSON text, a path, or a dict, and spot-check it."""
    return spot_check(body_from_dict(_parse(text_or_path)))


def load_function(text_or_path) -> FunctionSpec:
    return FunctionSpec.from_dict(_parse(text_or_path))
