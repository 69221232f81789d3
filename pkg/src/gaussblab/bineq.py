"""B-inequality deficits, the log-measure Hessian and Poincare-type gaps.

For a symmetric convex ``K`` the map ``z -> V(z) = log gamma(e^z K)`` is
concave. The deficit of a pair of scalings is the multiplicative defect

    eps = gamma(e^{(x+y)/2} K) / sqrt(gamma(e^x K) gamma(e^y K)) - 1,

and the second derivative of ``V`` along a direction ``d`` is a moment
identity of the restricted Gaussian on ``e^{td} K``:

    V'' = Var(sum_i d_i x_i^2) - 2 sum_i d_i^2 E[x_i^2].

All Monte Carlo measures entering one deficit share a sample stream, and
errors of the ratio come from the delta method on the joint indicators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gauss
from .bodies import SymmetricBody, scale_diag
from .errors import DimensionMismatchError, DomainError, UnresolvableMassError
from .functions import FunctionSpec
from .gauss import MeasureEstimate
from .sampling import derive_seed


@dataclass
class DeficitReport:
    endpoints: dict
    gamma_lo: MeasureEstimate
    gamma_hi: MeasureEstimate
    gamma_mid: MeasureEstimate
    epsilon: float
    epsilon_error: float
    engine: str

    @property
    def log_gap(self):
        """``(V(x) + V(y))/2 - V(mid) = -log(1 + eps)`` and its error."""
        return -math.log1p(self.epsilon), self.epsilon_error / (1.0 + self.epsilon)

    def holds(self, k=3.0):
        return self.epsilon >= -k * self.epsilon_error

    def to_dict(self):
        return {"endpoints": {k: (list(map(float, v)) if np.ndim(v) else float(v))
                              for k, v in self.endpoints.items()},
                "gamma_lo": self.gamma_lo.to_dict(), "gamma_hi": self.gamma_hi.to_dict(),
                "gamma_mid": self.gamma_mid.to_dict(), "epsilon": self.epsilon,
                "epsilon_error": self.epsilon_error, "engine": self.engine}

    CSV_FIELDS = ("gamma_lo", "gamma_hi", "gamma_mid", "epsilon", "epsilon_error", "engine")

    def csv_row(self):
        return [self.gamma_lo.value, self.gamma_hi.value, self.gamma_mid.value,
                self.epsilon, self.epsilon_error, self.engine]


def _three_bodies(body, x, y):
    mid = 0.5 * (x + y)
    return [scale_diag(body, x), scale_diag(body, y), scale_diag(body, mid)]


def _deficit_core(body, x, y, engine, seed, samples, partition_count, workers, endpoints):
    if engine not in ("auto", "closed_form", "monte_carlo"):
        raise DomainError(f"unknown deficit engine {engine!r}")
    lo, hi, mid = _three_bodies(body, x, y)
    if engine != "monte_carlo":
        vals = [gauss.closed_form_measure(b) for b in (lo, hi, mid)]
        if all(v is not None for v in vals) or engine == "closed_form":
            ests = [gauss.measure(b, "closed_form") for b in (lo, hi, mid)]
            g_lo, g_hi, g_mid = (e.value for e in ests)
            if g_lo <= 0 or g_hi <= 0:
                raise UnresolvableMassError("an endpoint body has zero Gaussian mass")
            eps = 0.0 if g_lo == g_hi == g_mid else g_mid / math.sqrt(g_lo * g_hi) - 1.0
            return DeficitReport(endpoints, *ests, eps, 0.0, "closed_form")
    acc = gauss.joint_indicators([lo, hi, mid], seed, samples, partition_count, workers)
    p = acc.mean
    if np.any(p * samples < 2):
        raise UnresolvableMassError(
            f"fewer than two samples hit one of the scaled bodies (hit rates {p.tolist()})")
    ests = [MeasureEstimate(float(v), float(np.sqrt(v * (1 - v) / samples)), "monte_carlo",
                            int(samples), int(seed), partition_count) for v in p]
    if p[0] == p[1] == p[2]:
        eps, err = 0.0, acc.delta_se([-0.5 / p[0], -0.5 / p[1], 1.0 / p[2]])
    else:
        root = math.sqrt(p[0] * p[1])
        eps = p[2] / root - 1.0
        grad = [-0.5 * (1 + eps) / p[0], -0.5 * (1 + eps) / p[1], 1.0 / root]
        err = acc.delta_se(grad)
    return DeficitReport(endpoints, *ests, float(eps), float(err), "monte_carlo")


def strong_deficit(body: SymmetricBody, x, y, engine: str = "auto", seed: int = 0,
                   samples: int = 1_000_000, partition_count: int = 1, workers: int = 1) -> DeficitReport:
    """Deficit of the strong B-inequality for coordinatewise scalings ``e^x``, ``e^y``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != (body.dim,) or y.shape != (body.dim,):
        raise DimensionMismatchError("scaling vectors must match the body dimension")
    ends = {"x": x, "y": y}
    if np.array_equal(x, y):
        m = gauss.measure(scale_diag(body, x), engine, seed, samples, partition_count, workers)
        if m.value <= 0:
            raise UnresolvableMassError("body has zero Gaussian mass")
        return DeficitReport(ends, m, m, m, 0.0, 0.0, m.method)
    return _deficit_core(body, x, y, engine, seed, samples, partition_count, workers, ends)


def deficit(body: SymmetricBody, a: float, b: float, engine: str = "auto", seed: int = 0,
            samples: int = 1_000_000, partition_count: int = 1, workers: int = 1) -> DeficitReport:
    """Deficit of ``gamma(sqrt(ab) K) >= sqrt(gamma(aK) gamma(bK))``."""
    if not 0 < a < b:
        raise DomainError("need 0 < a < b")
    one = np.ones(body.dim)
    return _deficit_core(body, math.log(a) * one, math.log(b) * one, engine, seed, samples,
                         partition_count, workers, {"a": float(a), "b": float(b)})


# ---------------------------------------------------------------------------
# second derivative of the log-measure


@dataclass
class HessianEstimate:
    value: float
    std_error: float
    method: str
    samples: int = 0

    def to_dict(self):
        return {"value": self.value, "std_error": self.std_error, "method": self.method,
                "samples": self.samples}


def log_measure_hessian(body: SymmetricBody, d, t: float = 0.0, seed: int = 0,
                        samples: int = 200_000, partition_count: int = 1,
                        engine: str = "auto") -> HessianEstimate:
    """``d^2/dt^2 log gamma(e^{td} K)`` from moments of ``e^{td} K``."""
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.shape != (body.dim,):
        raise DimensionMismatchError("direction must match the body dimension")
    Kt = scale_diag(body, t * d)
    if engine == "auto":
        ex = gauss._exact_moments(Kt)
        if ex is not None:
            mass, M, S, method = ex
            if mass <= 0:
                raise UnresolvableMassError("body has zero Gaussian mass")
            m2 = np.diag(M)
            val = d @ S @ d - (d @ m2) ** 2 - 2.0 * (d * d) @ m2
            return HessianEstimate(float(val), 0.0, method)
    if samples < 10_000:
        raise DomainError("log_measure_hessian needs at least 1e4 samples")
    d2 = d * d

    def feat(X):
        sq = X * X
        g = sq @ d
        return np.column_stack([g, g * g, sq @ d2])

    _, acc = gauss.restricted_stream(Kt, feat, seed, samples, partition_count)
    Eg, Eg2, Eq = acc.mean
    val = Eg2 - Eg * Eg - 2.0 * Eq
    return HessianEstimate(float(val), acc.delta_se([-2.0 * Eg, 1.0, -2.0]), "monte_carlo",
                           int(samples))


# ---------------------------------------------------------------------------
# midpoint identity


@dataclass
class MidpointGap:
    """``V(mid) + beta`` against ``(V(x) + V(y))/2`` with an error budget."""

    lhs: float
    rhs: float
    beta: float
    beta_error: float
    quad_error: float
    quad_nodes: int
    residual: float
    budget: float
    v_error: float

    @property
    def ok(self):
        return self.residual <= self.budget

    def to_dict(self):
        return {k: getattr(self, k) for k in ("lhs", "rhs", "beta", "beta_error", "quad_error",
                                              "quad_nodes", "residual", "budget", "v_error")} | {
            "ok": self.ok}


def _midpoint_rule(f, m):
    t = -1.0 + (np.arange(m) + 0.5) * (2.0 / m)
    w = (2.0 / m) * (1.0 - np.abs(t))
    vals, errs = zip(*(f(tj, j) for j, tj in enumerate(t)))
    vals, errs = np.array(vals), np.array(errs)
    return float(w @ vals) / 8.0, float(np.sqrt(np.sum((w * errs) ** 2))) / 8.0


def midpoint_gap_identity(body: SymmetricBody, x, y, quad_nodes: int = 64, seed: int = 0,
                          samples: int = 200_000, partition_count: int = 1,
                          engine: str = "auto") -> MidpointGap:
    """Check ``V(mid) + beta(x, y) = (V(x) + V(y))/2`` for ``V(z) = log gamma(e^z K)``.

    ``beta`` is the weighted Hessian integral along the segment, computed by
    the composite midpoint rule on ``quad_nodes`` cells; its discretisation
    error is estimated by the difference with the rule on half the cells.
    """
    if quad_nodes < 8 or quad_nodes % 2:
        raise DomainError("quad_nodes must be even and at least 8")
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    w = x - y
    if np.array_equal(x, y):
        return MidpointGap(0.0, 0.0, 0.0, 0.0, 0.0, quad_nodes, 0.0, 0.0, 0.0)

    def node(offset):
        def f(t, j):
            z = 0.5 * ((1 - t) * x + (1 + t) * y)
            h = log_measure_hessian(scale_diag(body, z), w, 0.0, derive_seed(seed, offset, j),
                                    samples, partition_count, engine)
            return h.value, h.std_error
        return f

    beta, beta_err = _midpoint_rule(node(0), quad_nodes)
    beta_half, _ = _midpoint_rule(node(1), quad_nodes // 2)
    # second order rule: the halving gap is about three times the fine-rule error
    quad_err = abs(beta - beta_half)

    rep = strong_deficit(body, x, y, engine, derive_seed(seed, 2), max(samples, 1000),
                         partition_count)
    v_mid = math.log(rep.gamma_mid.value)
    rhs = 0.5 * (math.log(rep.gamma_lo.value) + math.log(rep.gamma_hi.value))
    _, v_err = rep.log_gap
    lhs = v_mid + beta
    residual = abs(lhs - rhs)
    budget = quad_err + 3.0 * math.hypot(beta_err, v_err) + 1e-12 * (1 + abs(rhs))
    return MidpointGap(lhs, rhs, beta, beta_err, quad_err, quad_nodes, residual, budget, v_err)


# ---------------------------------------------------------------------------
# Poincare-type gaps


@dataclass
class PoincareGap:
    variance: float
    variance_error: float
    dirichlet: float
    dirichlet_error: float
    gap: float
    gap_error: float
    mode: str
    method: str

    def to_dict(self):
        return dict(self.__dict__)


def _exact_poincare(body, f):
    ex = gauss._exact_moments(body)
    if ex is None:
        return None
    mass, M, S, _ = ex
    if mass <= 0:
        raise UnresolvableMassError("body has zero Gaussian mass")
    if f.kind == "linear":
        return float(f.v @ M @ f.v), float(f.v @ f.v)
    if f.kind == "quadratic" and np.count_nonzero(f.T - np.diag(np.diag(f.T))) == 0:
        d = np.diag(f.T)
        m2 = np.diag(M)
        return float(d @ S @ d - (d @ m2) ** 2), float(4.0 * (d * d) @ m2)
    return None


def poincare_gap(body: SymmetricBody, f: FunctionSpec, mode: str = "general", seed: int = 0,
                 samples: int = 200_000, partition_count: int = 1,
                 engine: str = "auto") -> PoincareGap:
    """``E|grad f|^2 - Var f`` under the Gaussian restricted to ``body``.

    In ``even_half`` mode the Dirichlet term is halved, which is the sharp
    constant for even ``f`` on symmetric bodies.
    """
    if mode not in ("general", "even_half"):
        raise DomainError(f"unknown mode {mode!r}")
    if f.dim != body.dim:
        raise DimensionMismatchError("function and body dimensions differ")
    if mode == "even_half" and not f.is_even(seed):
        raise DomainError("even_half mode requires an even function")
    c = 0.5 if mode == "even_half" else 1.0
    if engine == "auto":
        ex = _exact_poincare(body, f)
        if ex is not None:
            var, dir_ = ex
            return PoincareGap(var, 0.0, c * dir_, 0.0, c * dir_ - var, 0.0, mode, "quadrature_1d")

    def feat(X):
        v = f.value(X)
        G = f.grad(X)
        return np.column_stack([v, v * v, np.einsum("ij,ij->i", G, G)])

    _, acc = gauss.restricted_stream(body, feat, seed, samples, partition_count)
    Ef, Ef2, Eg = acc.mean
    var = Ef2 - Ef * Ef
    dir_ = c * Eg
    return PoincareGap(float(var), acc.delta_se([-2 * Ef, 1, 0]), float(dir_), acc.delta_se([0, 0, c]),
                       float(dir_ - var), acc.delta_se([2 * Ef, -1, c]), mode, "monte_carlo")
