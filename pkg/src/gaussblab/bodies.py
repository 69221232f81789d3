"""Centrally symmetric convex bodies and their geometric oracles.

Every body is described through its gauge (Minkowski functional) ``g_K``:
``K = {p : g_K(p) <= 1}``. Gauges are vectorised over rows of a point
array, which is what the Monte Carlo engines consume. Bodies are immutable;
``scale_diag`` and ``linear_image`` build new nodes, and :meth:`reduced`
rewrites a node into a closed-form variant whenever the algebra allows it
(e.g. a linear image of a box is an H-polytope).

Degenerate encodings (a zero half-width or radius) are accepted; they have
empty interior, in-radius 0 and Gaussian measure 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .errors import (DimensionMismatchError, SchemaError, SingularMatrixError,
                     UnsupportedEngineError)

TOL = 1e-12
INF = float("inf")


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _ratio(num, den):
    """``num/den`` for ``num >= 0`` with ``0/0 = 0`` and ``x/0 = inf``."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where(den > 0, out, np.where(num > 0, INF, 0.0))


def _as_points(P, dim):
    P = np.asarray(P, dtype=float)
    single = P.ndim == 1
    P2 = P.reshape(1, -1) if single else P
    if P2.shape[-1] != dim:
        raise DimensionMismatchError(f"point dimension {P2.shape[-1]} != body dimension {dim}")
    return P2, single


class SymmetricBody:
    """Common interface. Subclasses implement ``_gauge`` and friends."""

    dim: int

    # -- membership -------------------------------------------------------
    def gauge(self, P):
        P2, single = _as_points(P, self.dim)
        g = self._gauge(P2)
        return float(g[0]) if single else g

    def contains(self, P):
        P2, single = _as_points(P, self.dim)
        inside = self._gauge(P2) <= 1.0 + TOL
        return bool(inside[0]) if single else inside

    # -- support ----------------------------------------------------------
    def support(self, u) -> float:
        """Support function at ``u``; positively homogeneous, ``inf`` if unbounded."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise DimensionMismatchError(f"direction dimension {u.shape} != ({self.dim},)")
        return float(self._support(u))

    # -- rewriting --------------------------------------------------------
    def reduced(self) -> "SymmetricBody":
        return self

    def polytope(self):
        """``(normals, offsets)`` with ``K = {x : |<a_i, x>| <= b_i}``, or ``None``."""
        return None

    def orthogonal_frame(self):
        """``(Q, c)`` with orthonormal columns ``Q`` and ``K = {|Q^T x| <= c}``, or ``None``.

        Bodies with such a frame are products of strips in rotated
        coordinates, so their Gaussian measure and moments factorise.
        """
        return None

    def ball_radius(self) -> Optional[float]:
        """Radius if the body is a centred Euclidean ball, else ``None``."""
        return None

    def closed_in_radius(self) -> Optional[float]:
        return None

    def signed_distance(self, P, band=INF):
        """Signed Euclidean distance to the boundary (negative inside).

        Values are exact where ``|d| <= band``; outside the band only the sign
        and the bound ``|d| > band`` are guaranteed.
        """
        P2, single = _as_points(P, self.dim)
        d = self._signed_distance(P2, band)
        return float(d[0]) if single else d

    def _signed_distance(self, P, band=INF):
        raise UnsupportedEngineError(f"no distance oracle for {type(self).__name__}")

    def is_full_space(self) -> bool:
        return False

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


# ---------------------------------------------------------------------------
# primitive variants


@dataclass(frozen=True, eq=False, repr=False)
class Ball(SymmetricBody):
    radius: float
    dim: int = 1

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius < 0:
            raise SchemaError("radius", "radius must be positive")
        if int(self.dim) < 1:
            raise SchemaError("dim", "dim must be a positive integer")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "dim", int(self.dim))

    def _gauge(self, P):
        return _ratio(np.linalg.norm(P, axis=1), self.radius)

    def _support(self, u):
        return self.radius * np.linalg.norm(u)

    def ball_radius(self):
        return self.radius

    def polytope(self):
        if self.dim == 1:
            return np.ones((1, 1)), np.array([self.radius])
        return None

    def orthogonal_frame(self):
        return self.polytope()

    def closed_in_radius(self):
        return self.radius

    def _signed_distance(self, P, band=INF):
        return np.linalg.norm(P, axis=1) - self.radius

    def to_dict(self):
        return {"type": "ball", "radius": self.radius, "dim": self.dim}


@dataclass(frozen=True, eq=False, repr=False)
class Strip(SymmetricBody):
    """``{x : |<direction, x>| <= half_width}``; the direction is normalised."""

    direction: np.ndarray
    half_width: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float).reshape(-1)
        nrm = np.linalg.norm(d)
        if d.size == 0 or not nrm > 0:
            raise SchemaError("direction", "direction must be a nonzero vector")
        if not np.isfinite(self.half_width) or self.half_width < 0:
            raise SchemaError("half_width", "half_width must be positive")
        object.__setattr__(self, "direction", _frozen(d / nrm))
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def dim(self):
        return self.direction.size

    def _gauge(self, P):
        return _ratio(np.abs(P @ self.direction), self.half_width)

    def _support(self, u):
        c = float(u @ self.direction)
        perp = u - c * self.direction
        if np.linalg.norm(perp) > TOL * max(1.0, np.linalg.norm(u)):
            return INF
        return self.half_width * abs(c)

    def polytope(self):
        return self.direction[None, :], np.array([self.half_width])

    def orthogonal_frame(self):
        return self.direction[:, None], np.array([self.half_width])

    def closed_in_radius(self):
        return self.half_width

    def _signed_distance(self, P, band=INF):
        return np.abs(P @ self.direction) - self.half_width

    def to_dict(self):
        return {"type": "strip", "direction": self.direction.tolist(),
                "half_width": self.half_width}


@dataclass(frozen=True, eq=False, repr=False)
class Box(SymmetricBody):
    half_widths: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.half_widths, dtype=float).reshape(-1)
        if a.size == 0:
            raise SchemaError("half_widths", "half_widths must be nonempty")
        if np.any(~np.isfinite(a)) or np.any(a < 0):
            raise SchemaError("half_widths", "half_widths must be positive")
        object.__setattr__(self, "half_widths", _frozen(a))

    @property
    def dim(self):
        return self.half_widths.size

    def _gauge(self, P):
        return np.max(_ratio(np.abs(P), self.half_widths), axis=1)

    def _support(self, u):
        return float(np.sum(self.half_widths * np.abs(u)))

    def polytope(self):
        return np.eye(self.dim), self.half_widths.copy()

    def orthogonal_frame(self):
        return np.eye(self.dim), self.half_widths.copy()

    def closed_in_radius(self):
        return float(self.half_widths.min())

    def _signed_distance(self, P, band=INF):
        return _box_sdf(np.abs(P) - self.half_widths)

    def to_dict(self):
        return {"type": "box", "half_widths": self.half_widths.tolist()}


def _box_sdf(q):
    """Signed distance of a box given ``q = |p| - a`` per row (``a`` may be inf)."""
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
    inside = np.minimum(q.max(axis=1), 0.0)
    return outside + inside


@dataclass(frozen=True, eq=False, repr=False)
class Ellipsoid(SymmetricBody):
    """``{x : <A x, x> <= 1}`` for symmetric positive definite ``A``."""

    matrix: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise SchemaError("matrix", "matrix must be square")
        if not np.allclose(A, A.T, rtol=1e-10, atol=1e-12):
            raise SchemaError("matrix", "matrix must be symmetric")
        A = 0.5 * (A + A.T)
        w, V = np.linalg.eigh(A)
        if not np.all(w > 0):
            raise SchemaError("matrix", "matrix must be positive definite")
        object.__setattr__(self, "matrix", _frozen(A))
        object.__setattr__(self, "_eig", (_frozen(w), _frozen(V)))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def _gauge(self, P):
        return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", P, self.matrix, P), 0.0))

    def _support(self, u):
        return float(np.sqrt(u @ np.linalg.solve(self.matrix, u)))

    def ball_radius(self):
        w = self._eig[0]
        if w.max() - w.min() <= 1e-14 * w.max():
            return float(1.0 / np.sqrt(w.mean()))
        return None

    def closed_in_radius(self):
        return float(1.0 / np.sqrt(self._eig[0].max()))

    def _signed_distance(self, P, band=INF):
        w, V = self._eig
        Q = P @ V
        rho = np.sqrt(np.einsum("ij,j,ij->i", Q, w, Q))
        rin = 1.0 / np.sqrt(w.max())
        rout = 1.0 / np.sqrt(w.min())
        # bracket from the gauge: rin |rho-1| <= |sd| <= rout |rho-1|
        out = np.where(rho >= 1, (rho - 1) * rin, (rho - 1) * rout)
        hard = np.abs(rho - 1.0) * rin <= band
        out[hard] = _ellipsoid_sd_exact(Q[hard], w)
        return out

    def to_dict(self):
        return {"type": "ellipsoid", "matrix": self.matrix.tolist()}


def _ellipsoid_sd_exact(Q, w, iters=200):
    """Signed distance to ``{sum w_i y_i^2 <= 1}`` for points in the eigenbasis.

    The nearest boundary point is ``y_i = q_i / (1 + lam w_i)`` where ``lam``
    is the unique root on ``(-1/w_max, inf)`` of ``sum w_i q_i^2/(1+lam w_i)^2 = 1``.
    """
    if len(Q) == 0:
        return np.zeros(0)
    wmax = w.max()
    lo = np.full(len(Q), -1.0 / wmax)
    hi = np.linalg.norm(Q, axis=1) / np.sqrt(w.min()) + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        g = np.sum(w * Q * Q / (1.0 + mid[:, None] * w) ** 2, axis=1)
        big = g > 1.0
        lo = np.where(big, mid, lo)
        hi = np.where(big, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(hi))):
            break
    lam = 0.5 * (lo + hi)
    Y = Q / (1.0 + lam[:, None] * w)
    # points with no component on the shortest axis may sit on the branch
    # lam = -1/w_max, where the nearest point leaves the coordinate plane
    top = w >= wmax * (1.0 - 1e-12)
    rest = ~top
    with np.errstate(divide="ignore", invalid="ignore"):
        g_edge = np.sum(w[rest] * Q[:, rest] ** 2 / (1.0 - w[rest] / wmax) ** 2, axis=1)
    edge = (np.sum(Q[:, top] ** 2, axis=1) <= 1e-30) & (g_edge <= 1.0)
    if np.any(edge):
        Ye = np.zeros((edge.sum(), len(w)))
        Ye[:, rest] = Q[edge][:, rest] / (1.0 - w[rest] / wmax)
        k = np.flatnonzero(top)[0]
        Ye[:, k] = np.sqrt(np.maximum(1.0 - np.sum(w * Ye * Ye, axis=1), 0.0) / wmax)
        Y[edge] = Ye
    dist = np.linalg.norm(Q - Y, axis=1)
    rho2 = np.sum(w * Q * Q, axis=1)
    return np.where(rho2 > 1.0, dist, -dist)


@dataclass(frozen=True, eq=False, repr=False)
class HPolytope(SymmetricBody):
    """``{x : |<a_i, x>| <= b_i for all i}``; symmetric by construction, may be unbounded."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.normals, dtype=float)
        b = np.asarray(self.offsets, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[1] == 0:
            raise SchemaError("normals", "normals must be a nonempty list of vectors")
        if A.shape[0] != b.size:
            raise DimensionMismatchError(
                f"offsets: {b.size} offsets for {A.shape[0]} normals")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise SchemaError("normals", "normals must be nonzero")
        if np.any(~np.isfinite(b)) or np.any(b < 0):
            raise SchemaError("offsets", "offsets must be positive")
        object.__setattr__(self, "normals", _frozen(A))
        object.__setattr__(self, "offsets", _frozen(b))

    @property
    def dim(self):
        return self.normals.shape[1]

    def _gauge(self, P):
        if len(self.offsets) == 0:
            return np.zeros(len(P))
        return np.max(_ratio(np.abs(P @ self.normals.T), self.offsets), axis=1)

    def _support(self, u):
        frame = self.orthogonal_frame()
        if frame is not None:
            return _frame_support(frame, u)
        A, b = self.normals, self.offsets
        res = linprog(-u, A_ub=np.vstack([A, -A]), b_ub=np.concatenate([b, b]),
                      bounds=[(None, None)] * self.dim, method="highs")
        if res.status == 3:
            return INF
        if res.status != 0:
            raise RuntimeError(f"support LP failed: {res.message}")
        return max(-res.fun, 0.0)

    def polytope(self):
        return self.normals.copy(), self.offsets.copy()

    def orthogonal_frame(self):
        U, c = unit_facets(self.normals, self.offsets)
        if len(U) and np.max(np.abs(U @ U.T - np.eye(len(U)))) > 1e-12:
            return None
        return U.T.copy(), c

    def closed_in_radius(self):
        if len(self.offsets) == 0:
            return INF
        return float(np.min(self.offsets / np.linalg.norm(self.normals, axis=1)))

    def _signed_distance(self, P, band=INF):
        frame = self.orthogonal_frame()
        if frame is None:
            raise UnsupportedEngineError(
                "distance oracle needs an H-polytope with orthogonal normals; "
                "use the facet engine")
        return _frame_sdf(frame, P)

    def to_dict(self):
        return {"type": "polytope", "normals": self.normals.tolist(),
                "offsets": self.offsets.tolist()}


def _frame_support(frame, u):
    Q, c = frame
    proj = Q.T @ u
    perp = u - Q @ proj
    if np.linalg.norm(perp) > TOL * max(1.0, np.linalg.norm(u)):
        return INF
    return float(np.sum(c * np.abs(proj)))


def _frame_sdf(frame, P):
    Q, c = frame
    n = Q.shape[0]
    # complete the frame; the added directions are unconstrained
    full, _ = np.linalg.qr(np.hstack([Q, np.eye(n)]))
    Y = P @ np.hstack([Q, full[:, Q.shape[1]:n]])
    a = np.concatenate([c, np.full(n - Q.shape[1], INF)])
    return _box_sdf(np.abs(Y) - a)


def unit_facets(normals, offsets):
    """Unit normals with offsets, parallel duplicates merged (tightest kept).

    Each unit normal is sign-normalised so that its first nonzero entry is
    positive; the facets of the body are ``+u`` and ``-u`` for each row.
    """
    A = np.asarray(normals, dtype=float)
    b = np.asarray(offsets, dtype=float)
    if len(A) == 0:
        return np.zeros((0, A.shape[1] if A.ndim == 2 else 0)), np.zeros(0)
    nrm = np.linalg.norm(A, axis=1)
    U = A / nrm[:, None]
    c = b / nrm
    lead = np.argmax(np.abs(U) > 1e-14, axis=1)
    sign = np.sign(U[np.arange(len(U)), lead])
    U = U * sign[:, None]
    keepU, keepc = [], []
    for u, ci in zip(U, c):
        for k, v in enumerate(keepU):
            if v @ u > 1.0 - 1e-12:
                keepc[k] = min(keepc[k], ci)
                break
        else:
            keepU.append(u)
            keepc.append(ci)
    return np.array(keepU), np.array(keepc)


# ---------------------------------------------------------------------------
# composite variants


@dataclass(frozen=True, eq=False, repr=False)
class Product(SymmetricBody):
    """Product over disjoint coordinate blocks covering ``0..n-1``.

    ``blocks`` is a sequence of ``(coords, body)`` pairs; ``body=None`` marks
    a full-space block.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = []
        seen = []
        for coords, body in self.blocks:
            coords = tuple(int(c) for c in coords)
            if not coords:
                raise SchemaError("coords", "coordinate blocks must be nonempty")
            if body is not None and body.dim != len(coords):
                raise DimensionMismatchError(
                    f"block {coords} has {len(coords)} coordinates but body dimension {body.dim}")
            blocks.append((coords, body))
            seen.extend(coords)
        if sorted(seen) != list(range(len(seen))):
            raise SchemaError("coords", "coordinate blocks must partition 0..n-1")
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def dim(self):
        return sum(len(c) for c, _ in self.blocks)

    def is_full_space(self):
        return all(b is None or b.is_full_space() for _, b in self.blocks)

    def _gauge(self, P):
        g = np.zeros(len(P))
        for coords, body in self.blocks:
            if body is not None:
                g = np.maximum(g, body._gauge(P[:, coords]))
        return g

    def _support(self, u):
        total = 0.0
        for coords, body in self.blocks:
            ub = u[list(coords)]
            if body is None:
                if np.linalg.norm(ub) > TOL * max(1.0, np.linalg.norm(u)):
                    return INF
            else:
                total += body._support(ub)
        return total

    def reduced(self):
        blocks = tuple((c, None if b is None or b.is_full_space() else b.reduced())
                       for c, b in self.blocks)
        if len(blocks) == 1 and blocks[0][1] is not None and blocks[0][0] == tuple(range(self.dim)):
            return blocks[0][1]
        return Product(blocks)

    def _lifted(self, pieces):
        out = []
        for (coords, _), piece in zip(self.blocks, pieces):
            if piece is None:
                continue
            M = np.zeros((self.dim, piece.shape[1]))
            M[list(coords), :] = piece
            out.append(M)
        return out

    def polytope(self):
        rows, offs = [], []
        for coords, body in self.blocks:
            if body is None:
                continue
            poly = body.reduced().polytope()
            if poly is None:
                return None
            A, b = poly
            lift = np.zeros((len(b), self.dim))
            lift[:, list(coords)] = A
            rows.append(lift)
            offs.append(b)
        if not rows:
            return np.zeros((0, self.dim)), np.zeros(0)
        return np.vstack(rows), np.concatenate(offs)

    def orthogonal_frame(self):
        cols, cs = [], []
        for coords, body in self.blocks:
            if body is None:
                continue
            fr = body.reduced().orthogonal_frame()
            if fr is None:
                return None
            Q, c = fr
            lift = np.zeros((self.dim, Q.shape[1]))
            lift[list(coords), :] = Q
            cols.append(lift)
            cs.append(c)
        if not cols:
            return np.zeros((self.dim, 0)), np.zeros(0)
        return np.hstack(cols), np.concatenate(cs)

    def ball_radius(self):
        if len(self.blocks) == 1 and self.blocks[0][1] is not None:
            return self.blocks[0][1].reduced().ball_radius()
        return None

    def closed_in_radius(self):
        r = INF
        for _, body in self.blocks:
            if body is None:
                continue
            rb = body.reduced().closed_in_radius()
            if rb is None:
                return None
            r = min(r, rb)
        return r

    def _signed_distance(self, P, band=INF):
        parts = []
        for coords, body in self.blocks:
            if body is not None:
                parts.append(body.reduced()._signed_distance(P[:, coords], band))
        if not parts:
            return np.full(len(P), -INF)
        S = np.column_stack(parts)
        inside = np.all(S <= 0, axis=1)
        return np.where(inside, S.max(axis=1),
                        np.linalg.norm(np.maximum(S, 0.0), axis=1))

    def to_dict(self):
        return {"type": "product", "blocks": [
            {"coords": list(c), "body": "full" if b is None else b.to_dict()}
            for c, b in self.blocks]}


def full_space(n: int) -> Product:
    return Product(((tuple(range(n)), None),))


@dataclass(frozen=True, eq=False, repr=False)
class DiagScaled(SymmetricBody):
    """``e^x K``: coordinate ``i`` of every point of ``K`` multiplied by ``exp(x_i)``."""

    x: np.ndarray
    body: SymmetricBody

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if x.size != self.body.dim:
            raise DimensionMismatchError(f"x has dimension {x.size}, body {self.body.dim}")
        object.__setattr__(self, "x", _frozen(x))

    @property
    def dim(self):
        return self.body.dim

    def is_full_space(self):
        return self.body.is_full_space()

    def _gauge(self, P):
        return self.body._gauge(P * np.exp(-self.x))

    def _support(self, u):
        return self.body._support(np.exp(self.x) * u)

    def reduced(self):
        return _scale_rewrite(self.body.reduced(), self.x)

    def polytope(self):
        r = self.reduced()
        return None if r is self else r.polytope()

    def orthogonal_frame(self):
        r = self.reduced()
        return None if r is self else r.orthogonal_frame()

    def ball_radius(self):
        r = self.reduced()
        return None if r is self else r.ball_radius()

    def closed_in_radius(self):
        r = self.reduced()
        return None if r is self else r.closed_in_radius()

    def _signed_distance(self, P, band=INF):
        r = self.reduced()
        if r is self:
            return SymmetricBody._signed_distance(self, P, band)
        return r._signed_distance(P, band)

    def to_dict(self):
        return {"type": "diag_scaled", "x": self.x.tolist(), "body": self.body.to_dict()}


@dataclass(frozen=True, eq=False, repr=False)
class LinearImage(SymmetricBody):
    """``T K``; membership of ``p`` is membership of ``T^{-1} p`` in ``K``."""

    matrix: np.ndarray
    body: SymmetricBody

    def __post_init__(self):
        T = np.asarray(self.matrix, dtype=float)
        if T.shape != (self.body.dim, self.body.dim):
            raise DimensionMismatchError(
                f"matrix shape {T.shape} incompatible with body dimension {self.body.dim}")
        Tinv = _checked_inverse(T)
        object.__setattr__(self, "matrix", _frozen(T))
        object.__setattr__(self, "_inv", _frozen(Tinv))

    @property
    def dim(self):
        return self.body.dim

    def is_full_space(self):
        return self.body.is_full_space()

    def _gauge(self, P):
        return self.body._gauge(P @ self._inv.T)

    def _support(self, u):
        return self.body._support(self.matrix.T @ u)

    def reduced(self):
        return _linear_rewrite(self.body.reduced(), self.matrix)

    def polytope(self):
        r = self.reduced()
        return None if isinstance(r, LinearImage) else r.polytope()

    def orthogonal_frame(self):
        r = self.reduced()
        return None if isinstance(r, LinearImage) else r.orthogonal_frame()

    def ball_radius(self):
        r = self.reduced()
        return None if isinstance(r, LinearImage) else r.ball_radius()

    def closed_in_radius(self):
        r = self.reduced()
        return None if isinstance(r, LinearImage) else r.closed_in_radius()

    def _signed_distance(self, P, band=INF):
        r = self.reduced()
        if isinstance(r, LinearImage):
            return SymmetricBody._signed_distance(self, P, band)
        return r._signed_distance(P, band)

    def to_dict(self):
        return {"type": "linear_image", "matrix": self.matrix.tolist(),
                "body": self.body.to_dict()}


def _checked_inverse(T):
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise SingularMatrixError("matrix must be square")
    det = np.linalg.det(T)
    if not np.isfinite(det) or det == 0 or np.linalg.cond(T) > 1e14:
        raise SingularMatrixError("matrix is singular")
    return np.linalg.inv(T)


# ---------------------------------------------------------------------------
# rewrite rules


def _scale_rewrite(body, x):
    e = np.exp(x)
    if np.all(x == 0):
        return body
    if isinstance(body, Box):
        return Box(body.half_widths * e)
    if isinstance(body, Ball):
        if np.all(x == x[0]):
            return Ball(body.radius * e[0], body.dim)
        if body.radius == 0:
            return body
        return Ellipsoid(np.diag(1.0 / (e * e)) / body.radius ** 2)
    if isinstance(body, Product):
        return Product(tuple((c, None if b is None else _scale_rewrite(b, x[list(c)]))
                             for c, b in body.blocks))
    if isinstance(body, DiagScaled):
        return _scale_rewrite(body.body.reduced(), body.x + x)
    return _linear_rewrite(body, np.diag(e))


def _linear_rewrite(body, T):
    """Closed-form ``T K`` when available, else a :class:`LinearImage` node."""
    T = np.asarray(T, dtype=float)
    n = body.dim
    if np.array_equal(T, np.eye(n)):
        return body
    Tinv = _checked_inverse(T)
    diagonal = np.count_nonzero(T - np.diag(np.diag(T))) == 0
    if isinstance(body, Box) and diagonal:
        return Box(body.half_widths * np.abs(np.diag(T)))
    if isinstance(body, Strip):
        w = Tinv.T @ body.direction
        nw = np.linalg.norm(w)
        return Strip(w / nw, body.half_width / nw)
    if isinstance(body, Ball):
        G = T.T @ T
        s2 = G[0, 0]
        if np.allclose(G, s2 * np.eye(n), rtol=1e-14, atol=1e-14 * s2):
            return Ball(body.radius * np.sqrt(s2), n)
        if body.radius == 0:
            return body
        return Ellipsoid(Tinv.T @ Tinv / body.radius ** 2)
    if isinstance(body, Ellipsoid):
        return Ellipsoid(Tinv.T @ body.matrix @ Tinv)
    if isinstance(body, (Box, HPolytope)):
        A, b = body.polytope()
        return HPolytope(A @ Tinv, b)
    if isinstance(body, Product):
        if diagonal:
            d = np.diag(T)
            return Product(tuple(
                (c, None if b is None else _linear_rewrite(b, np.diag(d[list(c)])))
                for c, b in body.blocks))
        poly = body.polytope()
        if poly is not None:
            A, b = poly
            if len(b) == 0:
                return body
            return HPolytope(A @ Tinv, b)
        return LinearImage(T, body)
    if isinstance(body, DiagScaled):
        return _linear_rewrite(body.body.reduced(), T @ np.diag(np.exp(body.x)))
    if isinstance(body, LinearImage):
        return _linear_rewrite(body.body.reduced(), T @ body.matrix)
    return LinearImage(T, body)


# ---------------------------------------------------------------------------
# public operations


def contains(body: SymmetricBody, point) -> bool:
    return body.contains(np.asarray(point, dtype=float))


def support(body: SymmetricBody, u) -> float:
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise ValueError("support direction must be a unit vector")
    return body.support(u)


def scale_diag(body: SymmetricBody, x) -> DiagScaled:
    return DiagScaled(np.asarray(x, dtype=float), body)


def linear_image(body: SymmetricBody, T) -> SymmetricBody:
    T = np.asarray(T, dtype=float)
    if T.shape != (body.dim, body.dim):
        raise DimensionMismatchError(f"matrix shape {T.shape} incompatible with dimension {body.dim}")
    _checked_inverse(T)
    return _linear_rewrite(body, T)


@dataclass(frozen=True)
class InRadius:
    value: float
    method: str
    gap: float = 0.0


def in_radius_report(body: SymmetricBody, seed: int = 0) -> InRadius:
    r = body.closed_in_radius()
    if r is not None:
        return InRadius(float(r), "closed_form")
    return _numeric_in_radius(body, seed)


def in_radius(body: SymmetricBody) -> float:
    return in_radius_report(body).value


def _numeric_in_radius(body, seed):
    """``1 / max_{|u|=1} gauge(u)`` by multi-start projected gradient ascent.

    Maximising the gauge is equivalent to minimising the support function
    (``r(K) = min h_K = 1/max g_K``) but stays finite for unbounded bodies.
    The reported gap compares the optimiser with a dense random scan.
    """
    n = body.dim
    rng = np.random.default_rng(seed)
    scan = rng.standard_normal((4000 * n, n))
    scan /= np.linalg.norm(scan, axis=1, keepdims=True)
    gs = body._gauge(scan)
    if np.any(np.isinf(gs)):
        return InRadius(0.0, "numeric", 0.0)
    best_scan = float(gs.max())
    starts = scan[np.argsort(gs)[::-1][: 8 * n]]

    def g(u):
        return float(body._gauge((u / np.linalg.norm(u))[None, :])[0])

    best = best_scan
    for u in starts:
        val = g(u)
        step = 0.1
        for _ in range(400):
            grad = np.empty(n)
            h = 1e-7
            for i in range(n):
                e = np.zeros(n)
                e[i] = h
                grad[i] = (g(u + e) - g(u - e)) / (2 * h)
            grad -= (grad @ u) * u
            if np.linalg.norm(grad) < 1e-13:
                break
            while step > 1e-14:
                cand = u + step * grad / np.linalg.norm(grad)
                cand /= np.linalg.norm(cand)
                cv = g(cand)
                if cv > val:
                    u, val = cand, cv
                    step *= 1.5
                    break
                step *= 0.5
            else:
                break
        best = max(best, val)
    if best == 0:
        return InRadius(INF, "numeric", 0.0)
    r = 1.0 / best
    return InRadius(r, "numeric", 1.0 / best_scan - r)
