"""Seeded body corpora for audits, calibration and acceptance runs."""
from __future__ import annotations

import numpy as np

from .bodies import Ball, Box, Ellipsoid, HPolytope, Product, Strip, full_space, linear_image

CORPUS_VERSION = "standard-v1"


def random_polytope(rng, n, facets=None, offsets=(0.5, 2.0)) -> HPolytope:
    """Symmetric polytope with ``facets`` Gaussian normals (default ``2n + 2``)."""
    m = facets or 2 * n + 2
    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    b = rng.uniform(*offsets, m)
    return HPolytope(A, b)


def random_ellipsoid(rng, n, axes=(0.4, 2.5)) -> Ellipsoid:
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    s = rng.uniform(*axes, n)
    return Ellipsoid((Q / s ** 2) @ Q.T)


def random_rotation(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_symmetric_bodies(count, seed=0, dims=(2, 6), facets=None):
    """Alternating random polytopes and ellipsoids with dimensions in ``dims``."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(dims[0], dims[1] + 1))
        if k % 2 == 0:
            out.append((f"polytope-{k}-n{n}", random_polytope(rng, n, facets)))
        else:
            out.append((f"ellipsoid-{k}-n{n}", random_ellipsoid(rng, n)))
    return out


def closed_form_bodies(count=50, seed=0, dims=(1, 8)):
    """Strips, boxes, balls and products whose Gaussian measure has a closed form."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(dims[0], dims[1] + 1))
        kind = k % 4
        if kind == 0:
            d = rng.standard_normal(n)
            body = Strip(d, float(rng.uniform(0.3, 2.5)))
            label = "strip"
        elif kind == 1:
            body = Box(rng.uniform(0.3, 2.5, n))
            label = "box"
        elif kind == 2:
            body = Ball(float(rng.uniform(0.5, 1.5) * np.sqrt(n)), n)
            label = "ball"
        else:
            blocks, start = [], 0
            while start < n:
                size = int(rng.integers(1, n - start + 1))
                coords = tuple(range(start, start + size))
                pick = rng.integers(3)
                sub = (None if pick == 0 else Ball(float(rng.uniform(0.5, 2.0) * np.sqrt(size)), size)
                       if pick == 1 else Box(rng.uniform(0.3, 2.5, size)))
                blocks.append((coords, sub))
                start += size
            body = Product(tuple(blocks))
            label = "product"
        out.append((f"{label}-{k}-n{n}", body))
    return out


def standard_corpus(seed=0, facets=None):
    """The calibration corpus: closed-form bodies plus random polytopes and ellipsoids.

    ``facets`` fixes the facet count of the random polytopes (default
    ``2n + 2``); boundary functionals on smooth bodies should use polytopal
    approximations with a chosen facet count.
    """
    rng = np.random.default_rng(seed)
    out = [(f"strip-R{R}", Strip([1.0, 0.0], R)) for R in (0.5, 1.0, 2.0, 4.0)]
    out += [("box-1-2", Box([1.0, 2.0])), ("box-0.1", Box([0.1, 0.1])),
            ("box-3d", Box([0.5, 1.0, 1.5])), ("box-1d", Box([1.0])),
            ("box-wide", Box([3.0, 3.0])), ("box-5d", Box([1.2, 0.8, 1.5, 2.0, 1.0]))]
    out += [("ball-2", Ball(1.0, 2)), ("ball-3", Ball(2.0, 3)), ("ball-4", Ball(0.5, 4))]
    out += [("cyl-box-ball", Product((((0,), Box([0.7])), ((1, 2), Ball(1.5, 2)))))]
    for n in (2, 3, 4, 5):
        out.append((f"polytope-n{n}", random_polytope(rng, n, facets)))
    for n in (2, 3):
        out.append((f"rotated-box-n{n}", linear_image(Box(rng.uniform(0.5, 2.0, n)),
                                                      random_rotation(rng, n))))
    for n in (2, 3, 4):
        out.append((f"ellipsoid-n{n}", random_ellipsoid(rng, n)))
    return out


def corpus_id(seed=0, facets=None):
    return f"{CORPUS_VERSION}:seed={seed}:facets={facets or 'auto'}"


__all__ = ["standard_corpus", "random_symmetric_bodies", "closed_form_bodies", "corpus_id",
           "random_polytope", "random_ellipsoid", "random_rotation", "full_space"]
