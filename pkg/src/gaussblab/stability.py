"""Stability thresholds, bound audits, boundary witnesses and constant calibration.

The absolute constants of the stability estimates are never hard coded: a
:class:`ConstantsRecord` either carries the neutral defaults (all ones) or the
extremal values fitted on a corpus by :func:`calibrate_constants`. The
calibrated record shipped with the package lives in
``gaussblab/data/calibrated_constants.json``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import bineq, gauss
from . import special as sp
from .bodies import SymmetricBody, in_radius, scale_diag
from .errors import DomainError, GaussblabError
from .functions import FunctionSpec
from .sampling import accumulate, derive_seed

BRANCHES = ("upper_branch", "lower_branch", "omega_branch", "violated", "inconclusive")
CONSTANT_NAMES = ("c_weak", "C_weak", "c_prop", "C_prop", "c_ball", "c_iso", "C_q")


class CalibrationError(GaussblabError):
    """An audit fails for every positive value of its constant."""


@dataclass
class ConstantsRecord:
    c_weak: float = 1.0
    C_weak: float = 1.0
    c_prop: float = 1.0
    C_prop: float = 1.0
    c_ball: float = 1.0
    c_iso: float = 1.0
    C_q: float = 1.0
    provenance: str = "default"
    binding: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in CONSTANT_NAMES:
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"constant {name} must be positive and finite, got {v}")

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in (*CONSTANT_NAMES, "provenance", "binding") if k in d})

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def calibrated_constants() -> ConstantsRecord:
    """The calibrated record shipped with the package."""
    text = resources.files("gaussblab").joinpath("data/calibrated_constants.json").read_text()
    return ConstantsRecord.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# thresholds and verdicts


@dataclass
class Thresholds:
    r_lo: float
    r_hi: Optional[float]
    flag: Optional[str] = None

    def to_dict(self):
        return {"r_lo": self.r_lo, "r_hi": self.r_hi, "flag": self.flag}


def _r_hi(scale, arg):
    if not arg > 1.0:
        return None, "log argument <= 1; upper threshold absent"
    if math.isinf(arg):
        return math.inf, None
    return math.sqrt(math.log(arg)) / scale, None


def thresholds_weak(n, a, b, eps, constants: ConstantsRecord = None) -> Thresholds:
    """In-radius thresholds for a scalar deficit ``eps`` on ``(a, b)``."""
    k = constants or ConstantsRecord()
    if not 0 < a < b:
        raise DomainError("need 0 < a < b")
    if eps < 0:
        raise DomainError("deficit must be nonnegative")
    L = math.log(b / a)
    arg = math.inf if eps == 0 else k.c_weak * L * L / (n * n * eps)
    r_hi, flag = _r_hi(b, arg)
    r_lo = k.C_weak * math.sqrt(n) * eps ** (1.0 / (n + 1)) * L ** (-2.0 / (n + 1)) / a
    return Thresholds(r_lo, r_hi, flag)


def thresholds_strong(n, x, y, delta, alpha, beta, eps,
                      constants: ConstantsRecord = None) -> Thresholds:
    """Thresholds for the strong deficit; ``x`` and ``y`` are reordered so ``|e^x| <= |e^y|``."""
    k = constants or ConstantsRecord()
    if eps < 0:
        raise DomainError("deficit must be nonnegative")
    ex, ey = np.linalg.norm(np.exp(x)), np.linalg.norm(np.exp(y))
    if ex > ey:
        ex, ey = ey, ex
    prod = delta * delta * alpha * beta
    arg = math.inf if eps == 0 else prod / (eps * n * n)
    r_hi, flag = _r_hi(ey, arg)
    r_lo = k.C_weak * math.sqrt(n) * eps ** (1.0 / (n + 1)) * prod ** (-1.0 / (n + 1)) / ex
    return Thresholds(r_lo, r_hi, flag)


def thresholds(kind: str, constants: ConstantsRecord = None, **params) -> Thresholds:
    if kind == "weak":
        return thresholds_weak(constants=constants, **params)
    if kind == "strong":
        return thresholds_strong(constants=constants, **params)
    raise DomainError(f"unknown threshold kind {kind!r}")


@dataclass
class StabilityVerdict:
    r: float
    r_lo: float
    r_hi: Optional[float]
    branch: str
    inputs: dict
    reason: str = ""

    def to_dict(self):
        return asdict(self)


def _branch(r, th: Thresholds, th_loose: Thresholds):
    if th.r_hi is not None and r >= th.r_hi:
        return "upper_branch", ""
    if r <= th.r_lo:
        return "lower_branch", ""
    if th.r_hi is None:
        return "inconclusive", th.flag
    if (th_loose.r_hi is not None and r >= th_loose.r_hi) or r <= th_loose.r_lo:
        return "inconclusive", "error bars straddle a branch boundary"
    return "violated", "radius lies strictly between the thresholds"


def weak_verdict(body: SymmetricBody, a, b, constants: ConstantsRecord = None, seed=0,
                 samples=400_000, report=None) -> StabilityVerdict:
    rep = report or bineq.deficit(body, a, b, seed=seed, samples=samples)
    n, r = body.dim, in_radius(body)
    eps, err = rep.epsilon, rep.epsilon_error
    inputs = {"n": n, "a": a, "b": b, "epsilon": eps, "epsilon_error": err}
    if eps <= 3 * err:
        th = thresholds_weak(n, a, b, max(eps, 0.0), constants)
        return StabilityVerdict(r, th.r_lo, th.r_hi, "inconclusive", inputs,
                                "deficit not resolved from zero")
    th = thresholds_weak(n, a, b, eps, constants)
    loose = thresholds_weak(n, a, b, eps + 3 * err, constants)
    branch, why = _branch(r, th, loose)
    return StabilityVerdict(r, th.r_lo, th.r_hi, branch, inputs, why)


def strong_verdict(body: SymmetricBody, x, y, delta, alpha, beta, constants: ConstantsRecord = None,
                   seed=0, samples=400_000, omega_nodes=5) -> StabilityVerdict:
    """Verdict for the strong deficit.

    The first alternative of the strong statement (a point ``z`` on the
    segment where the normal-cone set is light) is checked on ``omega_nodes``
    points for polytopal bodies and reported as ``omega_branch``.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    rep = bineq.strong_deficit(body, x, y, seed=seed, samples=samples)
    n, r = body.dim, in_radius(body)
    eps, err = rep.epsilon, rep.epsilon_error
    inputs = {"n": n, "x": x.tolist(), "y": y.tolist(), "delta": delta, "alpha": alpha,
              "beta": beta, "epsilon": eps, "epsilon_error": err}
    if body.reduced().polytope() is not None:
        sigma = [i for i in range(n) if abs(x[i] - y[i]) >= delta]
        for j, s in enumerate(np.linspace(0.0, 1.0, omega_nodes)):
            z = (1 - s) * x + s * y
            st = gauss.boundary_stats(scale_diag(body, z), (), sigma, min(alpha, 1.0),
                                      derive_seed(seed, j), 50_000)
            if st.omega_mass[0] + 3 * st.omega_mass[1] <= beta * st.perimeter.value:
                th = thresholds_strong(n, x, y, delta, alpha, beta, max(eps, 0.0), constants)
                return StabilityVerdict(r, th.r_lo, th.r_hi, "omega_branch", inputs,
                                        f"light normal-cone set at z={z.tolist()}")
    if eps <= 3 * err:
        th = thresholds_strong(n, x, y, delta, alpha, beta, max(eps, 0.0), constants)
        return StabilityVerdict(r, th.r_lo, th.r_hi, "inconclusive", inputs,
                                "deficit not resolved from zero")
    th = thresholds_strong(n, x, y, delta, alpha, beta, eps, constants)
    loose = thresholds_strong(n, x, y, delta, alpha, beta, eps + 3 * err, constants)
    branch, why = _branch(r, th, loose)
    return StabilityVerdict(r, th.r_lo, th.r_hi, branch, inputs, why)


# ---------------------------------------------------------------------------
# dichotomy


@dataclass
class Dichotomy:
    Q: float
    Q_error: float
    r: float
    n: int
    mass: float
    perimeter: float
    ball_moment: float
    verdict: str
    reason: str = ""
    needed_C: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def _dichotomy_branch(Q, r, n, k):
    if Q <= 1.0 / k.c_prop:
        return None
    if r >= math.sqrt(math.log(Q)):
        return "upper_branch"
    if r <= k.C_prop * math.sqrt(n) * Q ** (-1.0 / (n + 1)):
        return "lower_branch"
    return "violated"


def dichotomy_quantity(body: SymmetricBody, constants: ConstantsRecord = None, seed=0,
                       samples=200_000) -> Dichotomy:
    """``Q = gamma(K)/int_{rB}|x|^2 + gamma(K)/(r gamma^+)`` and the resulting branch."""
    k = constants or ConstantsRecord()
    r = in_radius(body)
    if not (0 < r < math.inf):
        raise DomainError("dichotomy needs a finite positive in-radius")
    n = body.dim
    g = gauss.measure(body, seed=seed, samples=max(samples, 1000))
    p = gauss.perimeter(body, seed=derive_seed(seed, 1), samples=samples)
    I = gauss.ball_truncated_second_moment(n, r)
    Q = g.value / I + g.value / (r * p.value)
    dQ = math.hypot((1 / I + 1 / (r * p.value)) * g.std_error,
                    g.value / (r * p.value ** 2) * p.std_error)
    needed = r / (math.sqrt(n) * Q ** (-1.0 / (n + 1)))
    branch = _dichotomy_branch(Q, r, n, k)
    reason = ""
    if branch is None:
        branch, reason = "inconclusive", "Q below 1/c_prop; hypothesis not met"
    elif branch == "violated":
        loose = _dichotomy_branch(max(Q - 3 * dQ, 1e-300), r, n, k)
        if loose != "violated":
            branch, reason = "inconclusive", "error bars straddle a branch boundary"
    return Dichotomy(Q, dQ, r, n, g.value, p.value, I, branch, reason, needed)


def corpus_dichotomies(corpus, constants: ConstantsRecord = None, seed=0, samples=100_000):
    """``(label, Dichotomy)`` for every bounded corpus body.

    Body ``j`` uses ``derive_seed(seed, j)``, the stream :func:`calibrate_constants`
    uses for the same entry, so a record calibrated with the same seed and
    sample count is checked on exactly the quantities it was fitted on.
    """
    out = []
    for j, (label, body) in enumerate(corpus):
        r = in_radius(body)
        if 0 < r < math.inf:
            out.append((label, dichotomy_quantity(body, constants, derive_seed(seed, j), samples)))
    return out


# ---------------------------------------------------------------------------
# bound audits


@dataclass
class AuditRow:
    kind: str
    lhs: float
    rhs: float
    slack: float
    error: float = 0.0
    skipped: Optional[str] = None
    params: dict = field(default_factory=dict)
    label: str = ""

    @property
    def holds(self):
        return self.skipped is not None or self.slack >= -3.0 * self.error

    def to_dict(self):
        return asdict(self)

    CSV_FIELDS = ("label", "kind", "lhs", "rhs", "slack", "error", "skipped")

    def csv_row(self):
        return [self.label, self.kind, self.lhs, self.rhs, self.slack, self.error,
                self.skipped or ""]


def tilde_radius(n: int, tol: float = 1e-10) -> float:
    """Radius of the centred ball in R^n whose Gaussian measure equals ``strip_mass(1)``."""
    target = sp.strip_mass(1.0)
    hi = 1.0
    while sp.ball_mass(n, hi) < target:
        hi *= 2.0
    return brentq(lambda r: sp.ball_mass(n, r) - target, 0.0, hi, xtol=tol, rtol=1e-15)


def _body_stats(body, seed, samples):
    g = gauss.measure(body, seed=seed, samples=max(samples, 1000))
    p = gauss.perimeter(body, seed=derive_seed(seed, 1), samples=samples)
    return g, p, in_radius(body)


def bound_audit(kind: str, params: dict, constants: ConstantsRecord = None, seed=0,
                samples=200_000) -> list[AuditRow]:
    """Evaluate one of the elementary bounds; returns one or two rows.

    ``params``: ``{"body": K}`` for ``iso_big``, ``iso_small`` and
    ``strip_perimeter``; ``{"n": n}`` for ``ball_mass``; ``{"n": n, "r": r}``
    for ``ball_moment``; ``{"R": R}`` for ``komatsu``.
    """
    k = constants or ConstantsRecord()
    label = params.get("label", "")
    if kind in ("iso_big", "iso_small", "strip_perimeter"):
        body = params["body"]
        g, p, r = _body_stats(body, seed, samples)
        n = body.dim
        info = {"n": n, "r": r, "mass": g.value}
        if not math.isfinite(r):
            return [AuditRow(kind, p.value, 0.0, p.value, p.std_error, "unbounded in-radius", info, label)]
        if kind == "iso_big":
            if g.value < 0.5:
                return [AuditRow(kind, p.value, math.nan, math.nan, p.std_error,
                                 "gamma(K) < 1/2", info, label)]
            rhs = sp.INV_SQRT2PI * math.exp(-r * r / 2)
        elif kind == "iso_small":
            if g.value > 0.5:
                return [AuditRow(kind, p.value, math.nan, math.nan, p.std_error,
                                 "gamma(K) > 1/2", info, label)]
            rhs = (k.c_iso * r / math.sqrt(n)) ** n * math.exp(-r * r / 2)
        else:
            Rt = tilde_radius(n)
            info["R_tilde"] = Rt
            if r < Rt:
                return [AuditRow(kind, p.value, math.nan, math.nan, p.std_error,
                                 "in-radius below R_tilde", info, label)]
            rhs = 2 * sp.INV_SQRT2PI * math.exp(-r * r / 2)
        return [AuditRow(kind, p.value, rhs, p.value - rhs, p.std_error, None, info, label)]
    if kind == "ball_mass":
        n = int(params["n"])
        R = 2 * math.sqrt(n)
        m = float(sp.ball_mass(n, R))
        I = gauss.ball_truncated_second_moment(n, R)
        return [AuditRow("ball_mass", m, 0.75, m - 0.75, 0.0, None, {"n": n}, label),
                AuditRow("ball_mass_moment", I, k.c_ball * n, I - k.c_ball * n, 0.0, None,
                         {"n": n}, label)]
    if kind == "ball_moment":
        n, r = int(params["n"]), float(params["r"])
        I = gauss.ball_truncated_second_moment(n, r)
        rhs = (k.c_ball / math.sqrt(n)) ** n * r ** (n + 2) * math.exp(-r * r / 2)
        return [AuditRow(kind, I, rhs, I - rhs, 0.0, None, {"n": n, "r": r}, label)]
    if kind == "komatsu":
        R = float(params["R"])
        mid = float(sp.upper_mills(R))
        lo = math.exp(-R * R / 2) / (R + 1)
        hi = math.exp(-R * R / 2) / R
        return [AuditRow("komatsu_lower", mid, lo, mid - lo, 0.0, None, {"R": R}, label),
                AuditRow("komatsu_upper", hi, mid, hi - mid, 0.0, None, {"R": R}, label)]
    raise DomainError(f"unknown audit kind {kind!r}")


# ---------------------------------------------------------------------------
# strip sharpness


def strip_sharpness(a: float, b: float, R_grid) -> list[tuple]:
    """Rows ``(R, eps(R), C(R))`` for the strip of half-width ``R``.

    ``eps(R)`` is the scalar deficit of the strip at ``(a, b)`` and
    ``C(R) = R / sqrt(log(1 + 1/eps))`` the constant implied by it.
    """
    if not 0 < a < b:
        raise DomainError("need 0 < a < b")
    rows = []
    for R in np.asarray(R_grid, dtype=float):
        if R <= 0:
            raise DomainError("strip half-widths must be positive")
        lg = (sp.log_strip_mass(math.sqrt(a * b) * R)
              - 0.5 * (sp.log_strip_mass(a * R) + sp.log_strip_mass(b * R)))
        eps = math.expm1(lg)
        C = R / math.sqrt(math.log1p(1.0 / eps)) if eps > 0 else math.inf
        rows.append((float(R), float(eps), float(C)))
    return rows


# ---------------------------------------------------------------------------
# trace theorem and Poincare witnesses


@dataclass
class TraceCheck:
    lhs: float
    lhs_error: float
    rhs: float
    rhs_error: float
    slack: float
    error: float
    r: float

    @property
    def holds(self):
        return self.slack >= -3.0 * self.error

    def to_dict(self):
        return asdict(self) | {"holds": self.holds}


def _full_integral(body, feature, seed, samples):
    """Unnormalised integral of ``feature`` over ``body`` and its standard error."""
    red = body.reduced()

    def feat(Z):
        inside = red.contains(Z)
        F = np.zeros((len(Z), 1))
        F[inside, 0] = feature(Z[inside])
        return [(F, None, False)]

    acc = accumulate(feat, red.dim, seed, samples)[0]
    return float(acc.mean[0]), float(acc.sem[0])


def trace_check(body: SymmetricBody, g: FunctionSpec, seed=0, samples=200_000) -> TraceCheck:
    """Boundary integral of ``g^2`` against ``(1/r) int_K (n g^2 + |grad g|^2)``."""
    r = in_radius(body)
    if not (0 < r < math.inf):
        raise DomainError("trace check needs a finite positive in-radius")
    n = body.dim
    pairs = gauss.facet_integrals(body, lambda Y, u: g.value(Y) ** 2, seed, samples)
    lhs = float(sum(p.integrals[0] for p in pairs))
    lhs_err = float(np.sqrt(sum(p.integral_errors[0] ** 2 for p in pairs)))

    def h(X):
        G = g.grad(X)
        return n * g.value(X) ** 2 + np.einsum("ij,ij->i", G, G)

    I, I_err = _full_integral(body, h, derive_seed(seed, 1), samples)
    rhs, rhs_err = I / r, I_err / r
    return TraceCheck(lhs, lhs_err, rhs, rhs_err, rhs - lhs, math.hypot(lhs_err, rhs_err), r)


@dataclass
class PoincareWitness:
    theta: list
    epsilon: float
    epsilon_error: float
    w12_residual: float
    residual_error: float
    sobolev_residual: float
    boundary_moment: float
    boundary_error: float
    bound_gradient: float
    bound_boundary: float
    check_error: float
    gradient_holds: bool
    boundary_holds: bool
    flag: str = ""

    def to_dict(self):
        return asdict(self)


def poincare_stability_witness(body: SymmetricBody, f: FunctionSpec, seed=0,
                               samples=200_000) -> PoincareWitness:
    """Test the gradient conclusion of Poincare stability with ``theta = E_K grad f``.

    ``gradient_holds`` is the asserted check ``E|grad f - theta|^2 <= 4 eps``
    (within three errors); ``boundary_holds`` compares the boundary moment
    of ``theta`` with ``2(n+1) gamma(K) eps / r`` and is informational.
    """
    r = in_radius(body)
    if not (0 < r < math.inf):
        raise DomainError("witness needs a finite positive in-radius")
    n = body.dim

    def feat(X):
        v = f.value(X)
        G = f.grad(X)
        XX = (X[:, :, None] * X[:, None, :]).reshape(len(X), -1)
        return np.column_stack([v, v * v, np.einsum("ij,ij->i", G, G), G, X * v[:, None], XX])

    mass, acc = gauss.restricted_stream(body, feat, seed, samples)
    mu = acc.mean
    Ef, Ef2, Eg2 = mu[:3]
    theta = mu[3:3 + n]
    Exf = mu[3 + n:3 + 2 * n]
    M = mu[3 + 2 * n:].reshape(n, n)
    pad = np.zeros(n + n * n)
    eps = Eg2 - (Ef2 - Ef * Ef)
    eps_err = acc.delta_se(np.r_[2 * Ef, -1, 1, np.zeros(n), pad])
    resid = Eg2 - theta @ theta
    resid_err = acc.delta_se(np.r_[0, 0, 1, -2 * theta, pad])
    # resid - 4 eps as one linear functional for a joint error
    check_err = acc.delta_se(np.r_[-8 * Ef, 4, -3, -2 * theta, pad])
    # full Sobolev residual of f - <x, theta> - mean(f), informational
    sob = (Ef2 - Ef * Ef) - 2 * theta @ Exf + theta @ M @ theta + resid
    pairs = gauss.facet_integrals(body, None, derive_seed(seed, 1), samples)
    bm = float(sum(float(theta @ p.normal) ** 2 * p.mass for p in pairs))
    bm_err = float(np.sqrt(sum((float(theta @ p.normal) ** 2 * p.mass_error) ** 2 for p in pairs)))
    bound_b = 2 * (n + 1) * mass.value * eps / r
    flag = "negative deficit beyond error budget" if eps < -3 * eps_err else ""
    return PoincareWitness(theta.tolist(), float(eps), eps_err, float(resid), resid_err, float(sob),
                           bm, bm_err, float(4 * eps), float(bound_b), check_err,
                           bool(resid - 4 * eps <= 3 * check_err),
                           bool(bm <= bound_b + 3 * bm_err), flag)


# ---------------------------------------------------------------------------
# boundary check for quadratic forms


@dataclass
class QuadRow:
    index: int
    B: float
    B_error: float
    rhs: float
    implied_constant: float


@dataclass
class QuadCheck:
    epsilon: float
    epsilon_error: float
    rhs_unit: float
    rows: list
    flag: str = ""

    def to_dict(self):
        return {"epsilon": self.epsilon, "epsilon_error": self.epsilon_error,
                "rhs_unit": self.rhs_unit, "flag": self.flag,
                "rows": [asdict(r) for r in self.rows]}


def _quad_epsilon(body, T, seed, samples):
    ex = gauss._exact_moments(body)
    if ex is not None and np.count_nonzero(T - np.diag(np.diag(T))) == 0:
        _, M, S, _ = ex
        d = np.diag(T)
        m2 = np.diag(M)
        var = d @ S @ d - (d @ m2) ** 2
        return float(2 * (d * d) @ m2 - var), 0.0

    def feat(X):
        TX = X @ T
        q = np.einsum("ij,ij->i", TX, X)
        return np.column_stack([q, q * q, np.einsum("ij,ij->i", TX, TX)])

    _, acc = gauss.restricted_stream(body, feat, seed, samples)
    Eq, Eq2, Et = acc.mean
    return float(2 * Et - (Eq2 - Eq * Eq)), acc.delta_se([2 * Eq, -1, 2])


def quad_boundary_check(body: SymmetricBody, T, constants: ConstantsRecord = None, seed=0,
                        samples=200_000) -> QuadCheck:
    """Boundary moments of the rows of ``T`` against the quadratic-form bound.

    ``epsilon = 2 E|Tx|^2 - Var<Tx, x>`` (nonnegative by the even Poincare
    inequality). ``implied_constant`` is the constant that would make row
    ``i`` tight.
    """
    k = constants or ConstantsRecord()
    T = np.asarray(T, dtype=float)
    T = 0.5 * (T + T.T)
    if np.linalg.eigvalsh(T).min() <= 0:
        raise DomainError("T must be positive definite")
    n = body.dim
    r = in_radius(body)
    if not (0 < r < math.inf):
        raise DomainError("quad check needs a finite positive in-radius")
    eps, eps_err = _quad_epsilon(body, T, seed, samples)
    flag = "negative deficit beyond error budget" if eps < -3 * eps_err else ""
    g = gauss.measure(body, seed=derive_seed(seed, 1), samples=max(samples, 1000))
    per = gauss.perimeter(body, seed=derive_seed(seed, 2), samples=samples)
    I = gauss.ball_truncated_second_moment(n, r)
    unit = (per.value / I + 1.0 / r) * n * n * max(eps, 0.0) * g.value
    pairs = gauss.facet_integrals(body, None, derive_seed(seed, 3), samples)
    rows = []
    for i in range(n):
        t = T[:, i]
        w = [float(t @ p.normal) ** 2 for p in pairs]
        B = sum(wi * p.mass for wi, p in zip(w, pairs))
        Be = math.sqrt(sum((wi * p.mass_error) ** 2 for wi, p in zip(w, pairs)))
        implied = B / unit if unit > 0 else (0.0 if B == 0 else math.inf)
        rows.append(QuadRow(i, float(B), float(Be), float(k.C_q * unit), float(implied)))
    return QuadCheck(eps, eps_err, float(unit), rows, flag)


# ---------------------------------------------------------------------------
# calibration


_SHRINK = 1.0 - 1e-9


def calibrate_constants(corpus, seed: int = 0, samples: int = 100_000, corpus_id: str = "custom",
                        ball_dims=range(1, 21)) -> ConstantsRecord:
    """Fit the extremal constants that make every audit hold on ``corpus``.

    ``corpus`` is a list of ``(label, body)`` pairs. Minimal constants (the
    ``c`` family) take the smallest admissible value, maximal ones (``C``)
    the largest required value; ``c_prop`` and ``C_weak`` keep their
    defaults and the other constants are fitted around them. A constant no
    corpus entry constrains keeps the default 1.
    """
    if not corpus:
        raise DomainError("corpus must be nonempty")
    # lower-type constants start at +inf, upper-type at 0; unbound ones fall back to 1
    best = {"c_iso": (math.inf, ""), "c_ball": (math.inf, ""), "C_prop": (0.0, ""),
            "c_weak": (math.inf, ""), "C_q": (0.0, "")}

    def lower(name, value, label):
        if not value > 0:
            raise CalibrationError(f"{name} would have to be nonpositive for {label}")
        if value * _SHRINK < best[name][0]:
            best[name] = (value * _SHRINK, label)

    def upper(name, value, label):
        if not math.isfinite(value):
            raise CalibrationError(f"{name} would have to be infinite for {label}")
        if value / _SHRINK > best[name][0]:
            best[name] = (value / _SHRINK, label)

    for n in ball_dims:
        if sp.ball_mass(n, 2 * math.sqrt(n)) < 0.75:
            raise CalibrationError(f"gamma(2 sqrt(n) B) < 3/4 for n={n}")
        lower("c_ball", gauss.ball_truncated_second_moment(n, 2 * math.sqrt(n)) / n, f"ball n={n}")
    for R in np.arange(0.25, 6.0001, 0.25):
        for row in bound_audit("komatsu", {"R": R}):
            if row.slack <= 0:
                raise CalibrationError(f"Komatsu sandwich fails at R={R}")
    defaults = ConstantsRecord()
    for j, (label, body) in enumerate(corpus):
        s = derive_seed(seed, j)
        n = body.dim
        r = in_radius(body)
        if not (0 < r < math.inf):
            continue
        I = gauss.ball_truncated_second_moment(n, r)
        lower("c_ball", math.sqrt(n) * (I / (r ** (n + 2) * math.exp(-r * r / 2))) ** (1.0 / n), label)
        g, p, _ = _body_stats(body, s, samples)
        if g.value <= 0.5:
            lower("c_iso", math.sqrt(n) / r * (p.value * math.exp(r * r / 2)) ** (1.0 / n), label)
        Q = g.value / I + g.value / (r * p.value)
        if Q > 1.0 / defaults.c_prop and r < math.sqrt(math.log(Q)):
            upper("C_prop", r / (math.sqrt(n) * Q ** (-1.0 / (n + 1))), label)
        rep = bineq.deficit(body, 0.5, 2.0, seed=derive_seed(s, 2), samples=samples)
        if rep.epsilon > 3 * rep.epsilon_error:
            th = thresholds_weak(n, 0.5, 2.0, rep.epsilon, defaults)
            if r > th.r_lo:
                L = math.log(4.0)
                lower("c_weak", n * n * rep.epsilon * math.exp((2.0 * r) ** 2) / (L * L), label)
        if body.reduced().polytope() is not None:
            qc = quad_boundary_check(body, np.eye(n), defaults, derive_seed(s, 3), samples)
            for row in qc.rows:
                if qc.rhs_unit > 0:
                    upper("C_q", row.implied_constant, label)
    values = {k: (v[0] if v[1] else 1.0) for k, v in best.items()}
    binding = {k: v[1] for k, v in best.items() if v[1]}
    return ConstantsRecord(c_weak=values["c_weak"], C_weak=1.0, c_prop=1.0,
                           C_prop=values["C_prop"], c_ball=values["c_ball"], c_iso=values["c_iso"],
                           C_q=values["C_q"],
                           provenance=f"calibrated({corpus_id};seed={seed};samples={samples})",
                           binding=binding)
