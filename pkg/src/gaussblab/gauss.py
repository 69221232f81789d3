"""Gaussian measure, restricted moments and boundary integrals of symmetric bodies.

Three kinds of engines are used:

* closed forms for bodies that factor into strips in an orthonormal frame,
  centred balls (chi-square laws), full-space blocks and products of these;
* plain Monte Carlo on a seeded Philox stream (see :mod:`gaussblab.sampling`);
* a facet engine for polytopes, which writes the Gaussian surface measure of
  a facet ``{<u, x> = c}`` as ``pdf(c)`` times the probability that a
  standard Gaussian on the hyperplane lands in the facet.

Facets come in pairs ``+u, -u``; by central symmetry both carry the same
mass, so one hyperplane sample serves the pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import special as sp
from .bodies import TOL, SymmetricBody, unit_facets
from .errors import DomainError, NoClosedFormError, UnresolvableMassError, UnsupportedEngineError
from .sampling import Accumulator, accumulate, derive_seed

METHODS = ("closed_form", "quadrature_1d", "monte_carlo")
PARALLEL_STEPS = (1e-2, 5e-3)


@dataclass
class MeasureEstimate:
    """A Gaussian probability or integral with its provenance.

    ``std_error`` is zero exactly for deterministic methods. ``extra`` holds
    engine-specific diagnostics (for example the Richardson extrapolation
    error of the parallel-body perimeter).
    """

    value: float
    std_error: float = 0.0
    method: str = "closed_form"
    samples: int = 0
    seed: Optional[int] = None
    partition_count: int = 1
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = {"value": float(self.value), "std_error": float(self.std_error),
             "method": self.method, "samples": int(self.samples), "seed": self.seed,
             "partition_count": int(self.partition_count)}
        if self.extra:
            d["extra"] = {k: float(v) for k, v in self.extra.items()}
        return d

    @classmethod
    def exact(cls, value, method="closed_form"):
        return cls(float(value), 0.0, method)


@dataclass
class MomentSummary:
    """Moments of the standard Gaussian conditioned on a body.

    ``fourth_cross[i, j]`` is the conditional mean of ``x_i^2 x_j^2``;
    ``coord_fourth`` is its diagonal. Each ``*_err`` field holds standard
    errors of the same shape (zeros on exact paths).
    """

    mass: MeasureEstimate
    second_moment: np.ndarray
    mean_sq: float
    mean_quart: float
    coord_fourth: np.ndarray
    fourth_cross: np.ndarray
    second_moment_err: np.ndarray
    mean_sq_err: float
    mean_quart_err: float
    coord_fourth_err: np.ndarray
    fourth_cross_err: np.ndarray
    method: str = "closed_form"
    accepted: int = 0

    @property
    def dim(self):
        return self.second_moment.shape[0]

    @property
    def var_sq(self):
        """Conditional variance of ``|x|^2``."""
        return self.mean_quart - self.mean_sq ** 2

    def to_dict(self):
        return {"mass": self.mass.to_dict(), "method": self.method, "accepted": self.accepted,
                "second_moment": self.second_moment.tolist(),
                "second_moment_err": self.second_moment_err.tolist(),
                "mean_sq": self.mean_sq, "mean_sq_err": self.mean_sq_err,
                "mean_quart": self.mean_quart, "mean_quart_err": self.mean_quart_err,
                "coord_fourth": self.coord_fourth.tolist(),
                "coord_fourth_err": self.coord_fourth_err.tolist()}


# ---------------------------------------------------------------------------
# closed forms


def _closed_pair(body: SymmetricBody):
    """``(measure, perimeter)`` in closed form, or ``None``."""
    b = body.reduced()
    if b.is_full_space():
        return 1.0, 0.0
    r = b.ball_radius()
    if r is not None:
        return float(sp.ball_mass(b.dim, r)), float(sp.chi_density(r, b.dim))
    fr = b.orthogonal_frame()
    if fr is not None:
        _, c = fr
        J = np.atleast_1d(sp.strip_mass(c))
        per = 2.0 * np.atleast_1d(sp.pdf(c))
        mass = float(np.prod(J))
        perim = sum(per[k] * np.prod(np.delete(J, k)) for k in range(len(c)))
        return mass, float(perim)
    blocks = getattr(b, "blocks", None)
    if blocks is None:
        return None
    mass, perim = 1.0, 0.0
    for _, sub in blocks:
        if sub is None:
            continue
        pair = _closed_pair(sub)
        if pair is None:
            return None
        # product rule for the surface measure of a product set
        mass, perim = mass * pair[0], perim * pair[0] + mass * pair[1]
    return mass, perim


def closed_form_measure(body: SymmetricBody) -> Optional[float]:
    pair = _closed_pair(body)
    return None if pair is None else pair[0]


def _check_samples(samples, floor, what):
    if int(samples) < floor:
        raise DomainError(f"{what} needs at least {floor} samples, got {samples}")


def measure(body: SymmetricBody, engine: str = "auto", seed: int = 0,
            samples: int = 1_000_000, partition_count: int = 1, workers: int = 1) -> MeasureEstimate:
    """Gaussian measure of ``body``.

    ``engine`` is ``"auto"`` (closed form when available, else Monte Carlo),
    ``"closed_form"`` or ``"monte_carlo"``.
    """
    if engine not in ("auto", "closed_form", "monte_carlo"):
        raise UnsupportedEngineError(f"unknown measure engine {engine!r}")
    if engine != "monte_carlo":
        val = closed_form_measure(body)
        if val is not None:
            return MeasureEstimate.exact(val)
        if engine == "closed_form":
            raise NoClosedFormError(f"no closed-form measure for {type(body).__name__}")
    _check_samples(samples, 1000, "monte_carlo measure")
    acc = joint_indicators([body], seed, samples, partition_count, workers)
    p = float(acc.mean[0])
    return MeasureEstimate(p, float(np.sqrt(p * (1.0 - p) / samples)), "monte_carlo",
                           int(samples), int(seed), partition_count)


def joint_indicators(bodies, seed: int, samples: int, partition_count: int = 1,
                     workers: int = 1) -> Accumulator:
    """Indicator means and covariance of several bodies on one shared stream."""
    red = [b.reduced() for b in bodies]
    dim = red[0].dim

    def feat(Z):
        F = np.column_stack([b.contains(Z) for b in red]).astype(float)
        return [(F, None, True)]

    return accumulate(feat, dim, seed, samples, partition_count, workers)[0]


def restricted_stream(body: SymmetricBody, feature: Callable, seed: int, samples: int,
                      partition_count: int = 1, workers: int = 1):
    """Self-normalised feature means over the part of the stream inside ``body``.

    ``feature(X)`` maps accepted points to an ``(m, k)`` array. Returns
    ``(mass, acc)`` where ``acc`` holds the conditional means and their full
    covariance. Raises :class:`UnresolvableMassError` below two hits.
    """
    red = body.reduced()

    def feat(Z):
        inside = red.contains(Z)
        F = np.asarray(feature(Z[inside]), dtype=float).reshape(int(inside.sum()), -1)
        full = np.zeros((len(Z), F.shape[1]))
        full[inside] = F
        return [(inside.astype(float), None, False), (full, inside, True)]

    mass_acc, acc = accumulate(feat, red.dim, seed, samples, partition_count, workers)
    if acc.count < 2:
        raise UnresolvableMassError(
            f"only {acc.count} of {samples} samples fell in the body; mass is not resolvable")
    p = float(mass_acc.mean[0])
    mass = MeasureEstimate(p, float(np.sqrt(p * (1 - p) / samples)), "monte_carlo",
                           int(samples), int(seed), partition_count)
    return mass, acc


def ball_truncated_second_moment(n: int, r: float) -> float:
    """Integral of ``|x|^2`` over ``r B^n`` against the standard Gaussian."""
    if n < 1 or r < 0:
        raise DomainError("need n >= 1 and r >= 0")
    return float(n * sp.chi2_cdf(r * r, n + 2))


# ---------------------------------------------------------------------------
# restricted moments


def _free_moments(k):
    S = np.ones((k, k)) + 2.0 * np.eye(k)
    return 1.0, np.eye(k), S


def _frame_moments(Q, c, n):
    # complete Q to an orthonormal basis; free directions are untruncated
    k = Q.shape[1]
    if k < n:
        U, _, _ = np.linalg.svd(Q, full_matrices=True) if k else (np.eye(n), None, None)
        Qf = np.hstack([Q, U[:, k:]])
    else:
        Qf = Q
    m2 = np.concatenate([np.atleast_1d(sp.truncated_moment2(c)), np.ones(n - k)])
    m4 = np.concatenate([np.atleast_1d(sp.truncated_moment4(c)), 3.0 * np.ones(n - k)])
    A = Qf * Qf
    M = (Qf * m2) @ Qf.T
    Am2 = A @ m2
    D2 = (A * m2 ** 2) @ A.T
    S = (A * m4) @ A.T + np.outer(Am2, Am2) - D2 + 2.0 * (M * M - D2)
    mass = float(np.prod(np.atleast_1d(sp.strip_mass(c)))) if k else 1.0
    return mass, M, S


def _ball_moments(r, n):
    pn = float(sp.chi2_cdf(r * r, n))
    if pn <= 0.0:
        return 0.0, np.zeros((n, n)), np.zeros((n, n))
    m = float(sp.chi2_cdf(r * r, n + 2)) / pn
    q = float(sp.chi2_cdf(r * r, n + 4)) / pn
    return pn, m * np.eye(n), q * (np.ones((n, n)) + 2.0 * np.eye(n))


def _exact_moments(body):
    """``(mass, M, S, method)`` from closed forms, or ``None``."""
    b = body.reduced()
    n = b.dim
    if b.is_full_space():
        return (*_free_moments(n), "closed_form")
    r = b.ball_radius()
    if r is not None:
        return (*_ball_moments(r, n), "closed_form")
    fr = b.orthogonal_frame()
    if fr is not None:
        return (*_frame_moments(fr[0], fr[1], n), "quadrature_1d")
    blocks = getattr(b, "blocks", None)
    if blocks is None:
        return None
    mass, M, S = 1.0, np.zeros((n, n)), np.zeros((n, n))
    method = "closed_form"
    for coords, sub in blocks:
        if sub is None:
            part = (*_free_moments(len(coords)), "closed_form")
        else:
            part = _exact_moments(sub)
            if part is None:
                return None
        idx = np.array(coords)
        mass *= part[0]
        M[np.ix_(idx, idx)] = part[1]
        S[np.ix_(idx, idx)] = part[2]
        if part[3] != "closed_form":
            method = part[3]
    d = np.diag(M)
    same = np.zeros((n, n), dtype=bool)
    for coords, _ in blocks:
        same[np.ix_(coords, coords)] = True
    # coordinates in different blocks are independent under the restriction
    S = np.where(same, S, np.outer(d, d))
    return mass, M, S, method


def _summary_exact(mass, M, S, method):
    n = M.shape[0]
    z = np.zeros((n, n))
    return MomentSummary(MeasureEstimate.exact(mass, method), M, float(np.trace(M)),
                         float(S.sum()), np.diag(S).copy(), S, z, 0.0, 0.0,
                         np.zeros(n), z.copy(), method)


def moments(body: SymmetricBody, seed: int = 0, samples: int = 200_000,
            partition_count: int = 1, engine: str = "auto", workers: int = 1) -> MomentSummary:
    """Moments of the standard Gaussian restricted to ``body``.

    ``engine="auto"`` uses the exact path for balls, frame bodies (boxes,
    strips, orthogonal polytopes), full-space blocks and products of these,
    and self-normalised Monte Carlo otherwise.
    """
    if engine not in ("auto", "monte_carlo"):
        raise UnsupportedEngineError(f"unknown moment engine {engine!r}")
    if engine == "auto":
        ex = _exact_moments(body)
        if ex is not None:
            if ex[0] <= 0.0:
                raise UnresolvableMassError("body has zero Gaussian mass")
            return _summary_exact(*ex)
    _check_samples(samples, 10_000, "moments")
    red = body.reduced()
    n = red.dim
    iu = np.triu_indices(n)

    def feat(Z):
        inside = red.contains(Z)
        X = Z[inside]
        sq = X * X
        r2 = sq.sum(axis=1)
        F = np.column_stack([(X[:, iu[0]] * X[:, iu[1]]), sq[:, iu[0]] * sq[:, iu[1]],
                             r2, r2 * r2])
        full = np.zeros((len(Z), F.shape[1]))
        full[inside] = F
        return [(inside.astype(float), None, False), (full, inside, False)]

    mass_acc, acc = accumulate(feat, n, seed, samples, partition_count, workers)
    if acc.count < 2:
        raise UnresolvableMassError(
            f"only {acc.count} of {samples} samples fell in the body; mass is not resolvable")
    p = float(mass_acc.mean[0])
    mass = MeasureEstimate(p, float(np.sqrt(p * (1 - p) / samples)), "monte_carlo",
                           int(samples), int(seed), partition_count)
    k = len(iu[0])
    mean, sem = acc.mean, acc.sem

    def sym(v):
        A = np.zeros((n, n))
        A[iu] = v
        return A + np.triu(A, 1).T

    M, Me = sym(mean[:k]), sym(sem[:k])
    S, Se = sym(mean[k:2 * k]), sym(sem[k:2 * k])
    return MomentSummary(mass, M, float(mean[2 * k]), float(mean[2 * k + 1]), np.diag(S).copy(),
                         S, Me, float(sem[2 * k]), float(sem[2 * k + 1]), np.diag(Se).copy(), Se,
                         "monte_carlo", int(acc.count))


# ---------------------------------------------------------------------------
# boundary integrals


@dataclass
class FacetPair:
    """The two opposite facets ``<u, x> = +-c`` of a polytope.

    ``mass`` is the Gaussian surface measure of the pair; ``integrals`` are
    surface integrals of the user features over the pair.
    """

    normal: np.ndarray
    offset: float
    hit_rate: float
    mass: float
    mass_error: float
    integrals: np.ndarray
    integral_errors: np.ndarray


def _facet_data(body):
    poly = body.reduced().polytope()
    if poly is None:
        raise UnsupportedEngineError(f"facet engine needs a polytopal body, got {type(body).__name__}")
    return unit_facets(*poly)


def facet_integrals(body: SymmetricBody, feature: Optional[Callable] = None, seed: int = 0,
                    samples: int = 100_000, partition_count: int = 1) -> list[FacetPair]:
    """Per-facet-pair surface measures and integrals of ``feature``.

    ``feature(Y, u)`` gets points ``Y`` on the facet with outer normal ``u``
    and returns an ``(m, k)`` array; it is integrated over both facets of
    every pair against the Gaussian surface measure.
    """
    U, c = _facet_data(body)
    n = U.shape[1] if U.ndim == 2 else body.dim
    out = []
    for k, (u, ck) in enumerate(zip(U, c)):
        others = np.delete(np.arange(len(c)), k)
        Uo, co = U[others], c[others]

        def feat(Z, u=u, ck=ck, Uo=Uo, co=co):
            Y = ck * u + Z - np.outer(Z @ u, u)
            hit = np.all(np.abs(Y @ Uo.T) <= co * (1.0 + TOL), axis=1)
            cols = [hit.astype(float)]
            if feature is not None:
                h = np.asarray(feature(Y, u), dtype=float).reshape(len(Y), -1)
                hm = np.asarray(feature(-Y, -u), dtype=float).reshape(len(Y), -1)
                cols.append((h + hm) * hit[:, None])
            return [(np.column_stack(cols), None, False)]

        acc = accumulate(feat, n, derive_seed(seed, k), samples, partition_count)[0]
        w = float(sp.pdf(ck))
        p = float(acc.mean[0])
        out.append(FacetPair(u, float(ck), p, 2.0 * w * p, 2.0 * w * np.sqrt(p * (1 - p) / samples),
                             w * acc.mean[1:], w * acc.sem[1:]))
    return out


def _facet_perimeter(body, seed, samples, partition_count):
    pairs = facet_integrals(body, None, seed, samples, partition_count)
    val = sum(p.mass for p in pairs)
    err = float(np.sqrt(sum(p.mass_error ** 2 for p in pairs)))
    return MeasureEstimate(float(val), err, "monte_carlo", int(samples), int(seed), partition_count,
                           {"facet_pairs": len(pairs)})


def _parallel_perimeter(body, steps, seed, samples, partition_count, workers=1):
    h1, h2 = steps
    if not (h1 > 0 and h2 > 0):
        raise DomainError("parallel_diff steps must be positive")
    red = body.reduced()
    band = max(h1, h2)
    red.signed_distance(np.zeros(red.dim))  # raises early if no distance oracle

    def feat(Z):
        d = red.signed_distance(Z, band)
        F = np.column_stack([d <= h1, d <= -h1, d <= h2, d <= -h2]).astype(float)
        return [(F, None, True)]

    acc = accumulate(feat, red.dim, seed, samples, partition_count, workers)[0]
    g1 = np.array([1, -1, 0, 0]) / (2 * h1)
    g2 = np.array([0, 0, 1, -1]) / (2 * h2)
    ratio = h1 / h2
    # central differences are O(h^2), so the Richardson weights use ratio^2
    w = ratio ** 2
    gR = (w * g2 - g1) / (w - 1.0)
    D1, D2, R = g1 @ acc.mean, g2 @ acc.mean, gR @ acc.mean
    return MeasureEstimate(float(R), acc.delta_se(gR), "monte_carlo", int(samples), int(seed),
                           partition_count, {"extrapolation_error": float(abs(R - D2)),
                                             "coarse": float(D1), "fine": float(D2)})


def perimeter(body: SymmetricBody, engine: str = "auto", seed: int = 0, samples: int = 200_000,
              partition_count: int = 1, steps=PARALLEL_STEPS, workers: int = 1) -> MeasureEstimate:
    """Gaussian surface area of the boundary of ``body``.

    ``engine``: ``"auto"``, ``"closed_form"``, ``"facet"`` or ``"parallel_diff"``.
    ``auto`` prefers the closed form, then facets for polytopes, then the
    parallel-body difference.
    """
    if engine in ("auto", "closed_form"):
        pair = _closed_pair(body)
        if pair is not None:
            return MeasureEstimate.exact(pair[1])
        if engine == "closed_form":
            raise NoClosedFormError(f"no closed-form perimeter for {type(body).__name__}")
        engine = "facet" if body.reduced().polytope() is not None else "parallel_diff"
    if engine == "facet":
        return _facet_perimeter(body, seed, samples, partition_count)
    if engine == "parallel_diff":
        return _parallel_perimeter(body, steps, seed, samples, partition_count, workers)
    raise UnsupportedEngineError(f"unknown perimeter engine {engine!r}")


@dataclass
class BoundaryStats:
    """Boundary-normal statistics of a polytope.

    ``dir_second_moment[k]`` and ``omega_mass`` are ``(value, std_error)``.
    """

    perimeter: MeasureEstimate
    dir_second_moment: list
    omega_mass: tuple
    directions: list
    sigma: tuple
    alpha: float

    def to_dict(self):
        return {"perimeter": self.perimeter.to_dict(),
                "directions": [list(map(float, d)) for d in self.directions],
                "dir_second_moment": [{"value": v, "std_error": e} for v, e in self.dir_second_moment],
                "sigma": list(self.sigma), "alpha": self.alpha,
                "omega_mass": {"value": self.omega_mass[0], "std_error": self.omega_mass[1]}}


def _weighted(pairs, weights):
    val = sum(w * p.mass for w, p in zip(weights, pairs))
    err = np.sqrt(sum((w * p.mass_error) ** 2 for w, p in zip(weights, pairs)))
    return float(val), float(err)


def boundary_stats(body: SymmetricBody, directions=(), sigma=(), alpha: float = 1.0,
                   seed: int = 0, samples: int = 100_000, partition_count: int = 1) -> BoundaryStats:
    """Perimeter, directional normal moments and the mass of a normal cone set.

    ``sigma`` holds 0-based coordinate indices; ``omega_mass`` is the surface
    measure of boundary points whose normal satisfies
    ``sum_{i in sigma} n_i^2 >= alpha``.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError("alpha must lie in (0, 1]")
    pairs = facet_integrals(body, None, seed, samples, partition_count)
    per = sum(p.mass for p in pairs)
    per_err = float(np.sqrt(sum(p.mass_error ** 2 for p in pairs)))
    perim = MeasureEstimate(float(per), per_err, "monte_carlo", int(samples), int(seed), partition_count)
    dirs = [np.asarray(t, dtype=float) for t in directions]
    dsm = [_weighted(pairs, [float(t @ p.normal) ** 2 for p in pairs]) for t in dirs]
    idx = list(sigma)
    omega = _weighted(pairs, [float(np.sum(p.normal[idx] ** 2) >= alpha - TOL) for p in pairs])
    return BoundaryStats(perim, dsm, omega, dirs, tuple(idx), float(alpha))
