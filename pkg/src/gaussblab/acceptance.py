"""Seeded recipes for the thirteen acceptance criteria.

Every ``criterion_k(seed, constants)`` returns a :class:`CriterionResult`;
:func:`run_all` runs them in order. Wall-clock times are kept out of the
deterministic report and only feed the runtime budget of criterion 1.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize, stats

from . import bineq, gauss, mgm, stability
from .bodies import Ball, Box, Product, Strip, full_space
from .corpus import (closed_form_bodies, corpus_id, random_polytope, random_symmetric_bodies,
                     standard_corpus)
from .functions import FunctionSpec
from .sampling import derive_seed
from .stability import ConstantsRecord

# recipe of the shipped calibrated constants
CALIBRATION_SEED = 0
CALIBRATION_SAMPLES = 100_000
RUNTIME_BUDGET = 300.0


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail}"

    def to_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "detail": self.detail, "metrics": self.metrics}


def _calibrate_standard():
    return stability.calibrate_constants(standard_corpus(CALIBRATION_SEED), CALIBRATION_SEED,
                                         CALIBRATION_SAMPLES, corpus_id(CALIBRATION_SEED))


def criterion_1(seed=0, constants=None):
    """Monte Carlo against closed form on 50 bodies, N = 1e6, 4 standard errors."""
    t0 = time.perf_counter()
    worst, fails = 0.0, []
    for k, (label, body) in enumerate(closed_form_bodies(50, seed)):
        cf = gauss.measure(body, "closed_form")
        mc = gauss.measure(body, "monte_carlo", derive_seed(seed, 1, k), 1_000_000)
        diff = abs(mc.value - cf.value)
        z = diff / mc.std_error if mc.std_error > 0 else (0.0 if diff == 0 else math.inf)
        worst = max(worst, z)
        if z > 4.0:
            fails.append(label)
    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed <= RUNTIME_BUDGET
    detail = (f"50 bodies, max |MC - exact|/se = {worst:.3f} (<= 4), "
              f"runtime {'within' if elapsed <= RUNTIME_BUDGET else 'over'} {RUNTIME_BUDGET:.0f} s")
    return CriterionResult(1, "measure-engine oracle agreement", ok, detail,
                           {"max_z": worst, "failures": fails}, elapsed)


def criterion_2(seed=0, constants=None):
    """Deficit nonnegativity on 100 random bodies at (a, b) = (1/2, 2)."""
    worst, fails = math.inf, []
    for k, (label, body) in enumerate(random_symmetric_bodies(100, seed)):
        rep = bineq.deficit(body, 0.5, 2.0, "monte_carlo", derive_seed(seed, 2, k), 200_000)
        score = rep.epsilon / rep.epsilon_error if rep.epsilon_error > 0 else math.inf
        worst = min(worst, score)
        if not rep.holds(3.0):
            fails.append(label)
    return CriterionResult(2, "B-inequality positivity", not fails,
                           f"100 bodies, min eps/err = {worst:.3f} (>= -3)",
                           {"min_score": worst, "failures": fails})


def criterion_3(seed=0, constants=None):
    """Hessian of log gamma(e^t K) at t = 0 is nonpositive; exactly zero for R^n."""
    worst, fails = -math.inf, []
    for k, (label, body) in enumerate(random_symmetric_bodies(100, seed)):
        h = bineq.log_measure_hessian(body, np.ones(body.dim), 0.0, derive_seed(seed, 3, k),
                                      200_000, engine="monte_carlo")
        score = h.value / h.std_error
        worst = max(worst, score)
        if h.value > 3 * h.std_error:
            fails.append(label)
    full = [abs(bineq.log_measure_hessian(full_space(n), np.ones(n)).value) for n in range(1, 7)]
    ok = not fails and max(full) <= 1e-12
    return CriterionResult(3, "local Hessian nonpositivity", ok,
                           f"100 bodies, max V''/se = {worst:.3f} (<= 3); "
                           f"full space max |V''| = {max(full):.1e}",
                           {"max_score": worst, "full_space": max(full), "failures": fails})


def criterion_4(seed=0, constants=None):
    """Midpoint-gap identity: exact strips with 64 nodes, 10 Monte Carlo bodies."""
    strip_res = []
    for R in (0.5, 1.0, 2.0):
        for y in (math.log(4.0), 1.0):
            g = bineq.midpoint_gap_identity(Strip([1.0, 0.0], R), [0.0, 0.0], [y, 0.0], 64)
            strip_res.append(g.residual)
    rng = np.random.default_rng(derive_seed(seed, 4))
    mc_ok, ratios = 0, []
    for k, (label, body) in enumerate(random_symmetric_bodies(10, derive_seed(seed, 4, 1))):
        y = rng.uniform(-0.5, 0.5, body.dim)
        g = bineq.midpoint_gap_identity(body, np.zeros(body.dim), y, 8, derive_seed(seed, 4, 2, k),
                                        100_000, engine="monte_carlo")
        ratios.append(g.residual / g.budget)
        mc_ok += g.ok
    ok = max(strip_res) <= 1e-3 and mc_ok == 10
    return CriterionResult(4, "midpoint identity", ok,
                           f"strips max residual = {max(strip_res):.2e} (<= 1e-3); "
                           f"{mc_ok}/10 MC cases within budget (max residual/budget {max(ratios):.3f})",
                           {"strip_residual": max(strip_res), "mc_ratio": max(ratios)})


def _strip_eps_oracle(a, b, R):
    mass = lambda s: 2.0 * integrate.quad(stats.norm.pdf, 0.0, s, epsabs=1e-14, epsrel=1e-13)[0]
    return mass(math.sqrt(a * b) * R) / math.sqrt(mass(a * R) * mass(b * R)) - 1.0


def criterion_5(seed=0, constants=None):
    """Strip sharpness sweep at (a, b) = (1, 4)."""
    rows = stability.strip_sharpness(1.0, 4.0, np.arange(1.0, 5.0001, 0.25))
    C = [c for _, _, c in rows]
    ratio = max(C) / min(C)
    eps1 = rows[0][1]
    oracle = _strip_eps_oracle(1.0, 4.0, 1.0)
    ok = ratio <= 2.0 and abs(oracle - 0.1552) <= 1e-4 and abs(eps1 - oracle) <= 1e-10
    return CriterionResult(5, "strip sharpness", ok,
                           f"C(R) max/min = {ratio:.4f} (<= 2); eps(1) = {eps1:.6f}, "
                           f"1D oracle {oracle:.6f}",
                           {"ratio": ratio, "eps1": eps1, "oracle": oracle})


def criterion_6(seed=0, constants=None):
    """Komatsu sandwich on R = 0.25, 0.5, ..., 6 with a quadrature cross-check."""
    min_slack, max_q = math.inf, 0.0
    for R in np.arange(0.25, 6.0001, 0.25):
        for row in stability.bound_audit("komatsu", {"R": R}):
            min_slack = min(min_slack, row.slack)
        q, _ = integrate.quad(lambda s: math.exp(-s * s / 2), R, math.inf, epsabs=1e-14,
                              epsrel=1e-13)
        max_q = max(max_q, abs(q - stability.sp.upper_mills(R)))
    ok = min_slack > 0 and max_q < 1e-12
    return CriterionResult(6, "Komatsu sandwich", ok,
                           f"min slack = {min_slack:.3e} (> 0); max quadrature gap = {max_q:.1e}",
                           {"min_slack": min_slack, "quadrature_gap": max_q})


def criterion_7(seed=0, constants=None):
    """Ball mass bound, calibrated audits on the corpus, reproducible record."""
    k = constants or stability.calibrated_constants()
    mass_slack = min(stability.bound_audit("ball_mass", {"n": n}, k)[0].slack for n in range(1, 21))
    audits, fails = 0, []
    for n in range(1, 21):
        for row in stability.bound_audit("ball_mass", {"n": n}, k):
            audits += 1
            if row.slack < 0:
                fails.append(f"{row.kind}-n{n}")
    for j, (label, body) in enumerate(standard_corpus(CALIBRATION_SEED)):
        r = stability.in_radius(body)
        if not 0 < r < math.inf:
            continue
        rows = stability.bound_audit("ball_moment", {"n": body.dim, "r": r}, k)
        rows += stability.bound_audit("iso_small", {"body": body, "label": label}, k,
                                      derive_seed(CALIBRATION_SEED, j), CALIBRATION_SAMPLES)
        for row in rows:
            if row.skipped is None:
                audits += 1
                if row.slack < 0:
                    fails.append(f"{row.kind}-{label}")
    shipped = stability.calibrated_constants()
    fresh = _calibrate_standard()
    reproducible = all(math.isclose(getattr(shipped, c), getattr(fresh, c), rel_tol=1e-12)
                       for c in stability.CONSTANT_NAMES) and shipped.binding == fresh.binding
    ok = mass_slack >= 0 and not fails and reproducible
    return CriterionResult(7, "bound audits", ok,
                           f"min gamma(2 sqrt(n) B) - 3/4 = {mass_slack:.4f}; "
                           f"{audits - len(fails)}/{audits} calibrated audits hold; "
                           f"record {'reproduced' if reproducible else 'NOT reproduced'}",
                           {"ball_mass_slack": mass_slack, "failures": fails,
                            "reproducible": reproducible})


def criterion_8(seed=0, constants=None):
    """Dichotomy with calibrated constants; Q(1) on the strip."""
    k = constants or stability.calibrated_constants()
    rows = stability.corpus_dichotomies(standard_corpus(CALIBRATION_SEED), k, seed,
                                        CALIBRATION_SAMPLES)
    rows += [(f"strip-R{R}", stability.dichotomy_quantity(Strip([1.0, 0.0], R), k, seed))
             for R in (0.5, 1.0, 2.0)]
    violated = [label for label, d in rows if d.verdict == "violated"]
    Q1 = dict(rows)["strip-R1.0"].Q
    tally = {}
    for _, d in rows:
        tally[d.verdict] = tally.get(d.verdict, 0) + 1
    ok = not violated and abs(Q1 - 5.1955) <= 1e-3
    return CriterionResult(8, "dichotomy", ok,
                           f"{len(rows)} bodies, verdicts {dict(sorted(tally.items()))}; "
                           f"Q(1) = {Q1:.6f} (5.1955 +- 1e-3)",
                           {"Q1": Q1, "violated": violated, "verdicts": tally})


def _random_polynomial(rng, n, terms=3, degree=3):
    out = {}
    while len(out) < terms:
        e = np.zeros(n, int)
        for _ in range(int(rng.integers(0, degree + 1))):
            e[rng.integers(n)] += 1
        out[tuple(e)] = float(rng.standard_normal())
    return FunctionSpec.polynomial(out, n)


def criterion_9(seed=0, constants=None):
    """Trace theorem on 20 (box, polynomial) cases with n <= 3."""
    rng = np.random.default_rng(derive_seed(seed, 9))
    worst, fails = math.inf, 0
    for k in range(20):
        n = int(rng.integers(1, 4))
        body = Box(rng.uniform(0.5, 2.0, n))
        g = _random_polynomial(rng, n)
        tc = stability.trace_check(body, g, derive_seed(seed, 9, k), 200_000)
        worst = min(worst, tc.slack / tc.error if tc.error > 0 else math.inf)
        fails += not tc.holds
    return CriterionResult(9, "trace theorem", fails == 0,
                           f"{20 - fails}/20 cases hold, min slack/err = {worst:.3f}",
                           {"min_score": worst})


def criterion_10(seed=0, constants=None):
    """Poincare stability witness for f = x1 + eta x1^3 on Box([1, 1])."""
    body = Box([1.0, 1.0])
    out = []
    for j, eta in enumerate((0.0, 0.05, 0.1)):
        f = FunctionSpec.polynomial({(1, 0): 1.0, (3, 0): eta}, 2)
        w = stability.poincare_stability_witness(body, f, derive_seed(seed, 10, j), 400_000)
        out.append((eta, w))
    ok = all(w.gradient_holds for _, w in out)
    detail = "; ".join(f"eta={eta}: resid {w.w12_residual:.2e} vs 4eps {w.bound_gradient:.2e}"
                       for eta, w in out)
    return CriterionResult(10, "Poincare stability witness", ok, detail,
                           {"cases": [w.to_dict() for _, w in out]})


def criterion_11(seed=0, constants=None):
    """Equality case: cylinders scaled only along their full block."""
    rng = np.random.default_rng(derive_seed(seed, 11))
    worst, fails = 0.0, 0
    for k in range(10):
        m, f = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        pick = k % 3
        base = (Box(rng.uniform(0.5, 2.0, m)) if pick == 0 else
                Ball(float(rng.uniform(0.5, 2.0)) * math.sqrt(m), m) if pick == 1 else
                random_polytope(rng, m))
        body = Product(((tuple(range(m)), base), (tuple(range(m, m + f)), None)))
        x = np.r_[np.zeros(m), rng.uniform(-1, 1, f)]
        y = np.r_[np.zeros(m), rng.uniform(-1, 1, f)]
        rep = bineq.strong_deficit(body, x, y, "monte_carlo", derive_seed(seed, 11, k), 200_000)
        worst = max(worst, abs(rep.epsilon))
        fails += abs(rep.epsilon) > 3 * rep.epsilon_error
    return CriterionResult(11, "equality case", fails == 0,
                           f"{10 - fails}/10 cylinders with |eps| <= 3 err (max |eps| {worst:.1e})",
                           {"max_abs_eps": worst})


def _box_oracle(a1, a2):
    """``s`` maximizing ``gamma([-s a1, s a1]) gamma([-a2/s, a2/s])`` by bisection on the slope."""
    from .special import log_strip_mass

    def slope(ls):
        s = math.exp(ls)
        h = 1e-6
        f = lambda u: log_strip_mass(math.exp(u) * a1) + log_strip_mass(a2 * math.exp(-u))
        return (f(ls + h) - f(ls - h)) / (2 * h)

    return math.exp(optimize.brentq(slope, -5.0, 5.0, xtol=1e-14))


def criterion_12(seed=0, constants=None):
    """MGM solver on Box([1, 2]) and a ball, uniqueness and the gradient check."""
    box = Box([1.0, 2.0])
    res = mgm.mgm_solve(box, seed=derive_seed(seed, 12), samples=1_000_000)
    s_star = _box_oracle(1.0, 2.0)
    T_err = float(np.max(np.abs(res.state.T - np.diag([s_star, 1 / s_star]))))
    ball = mgm.mgm_solve(Ball(1.0, 3), seed=derive_seed(seed, 12, 1))
    uq = mgm.uniqueness_experiment(box, 5, seed=derive_seed(seed, 12, 2))
    gc = mgm.gradient_check(box, res.state, 5, seed=derive_seed(seed, 12, 3))
    checks = {
        "converged": res.converged and res.state.iteration <= 200,
        "oracle": T_err <= 1e-3,
        "ball_zero_steps": ball.converged and ball.state.iteration == 0,
        "uniqueness": uq.gap_resolved and uq.max_procrustes <= 1e-2,
        "gradient": gc.holds,
    }
    detail = (f"{res.state.iteration} iterations, residual {res.state.isotropy_residual:.1e}, "
              f"|T - T*| = {T_err:.1e}; ball steps {ball.state.iteration}; "
              f"5 starts gap {uq.max_objective_gap:.1e}, Procrustes {uq.max_procrustes:.1e}; "
              f"gradient check {'ok' if gc.holds else 'failed'}")
    return CriterionResult(12, "MGM solver", all(checks.values()), detail,
                           {"checks": checks, "s_star": s_star, "T_error": T_err})


PROBE_LABELS = ("box-1-2", "box-0.1", "box-3d", "ball-2", "ball-3", "cyl-box-ball",
                "polytope-n2", "polytope-n3", "rotated-box-n2", "ellipsoid-n3")


def criterion_13(seed=0, constants=None):
    """Log-concavity of ``t -> gamma(exp(tD) K)`` along random traceless ``D``."""
    corpus = dict(standard_corpus(CALIBRATION_SEED))
    rng = np.random.default_rng(derive_seed(seed, 13))
    worst, fails, total = math.inf, 0, 0
    for i, label in enumerate(PROBE_LABELS):
        body = corpus[label]
        for j in range(10):
            D = mgm.random_traceless(body.dim, rng)
            pr = mgm.log_concavity_probe(body, D, [0.0, 0.5, 1.0], derive_seed(seed, 13, i, j),
                                         100_000)
            total += 1
            fails += not pr.holds
            for s, e in zip(pr.slacks, pr.errors):
                worst = min(worst, s / e if e > 0 else (math.inf if s >= 0 else -math.inf))
    return CriterionResult(13, "log-concavity probe", fails == 0,
                           f"{total - fails}/{total} probes hold, min slack/err = {worst:.3f}",
                           {"min_score": worst})


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12,
            criterion_13)


def run_criterion(number: int, seed=0, constants: Optional[ConstantsRecord] = None):
    t0 = time.perf_counter()
    res = CRITERIA[number - 1](seed, constants)
    res.elapsed = res.elapsed or time.perf_counter() - t0
    return res


def run_all(seed=0, constants: Optional[ConstantsRecord] = None, only=None, log=None):
    """Run the criteria (all, or the numbers in ``only``); ``log`` receives each line."""
    out = []
    for number in (only or range(1, len(CRITERIA) + 1)):
        res = run_criterion(number, seed, constants)
        if log is not None:
            log(res.line())
        out.append(res)
    return out
