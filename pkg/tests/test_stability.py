import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from gaussblab import stability as stb
from gaussblab.bodies import Ball, Box, HPolytope, Strip, full_space
from gaussblab.corpus import standard_corpus
from gaussblab.errors import DomainError
from gaussblab.functions import FunctionSpec
from gaussblab.stability import ConstantsRecord

PHI1 = stats.norm.pdf(1.0)
G1 = 2 * stats.norm.cdf(1.0) - 1


def _m2(a):
    return integrate.quad(lambda x: x * x * stats.norm.pdf(x), -a, a)[0]


# ---------------------------------------------------------------- constants

def test_shipped_record_loads():
    k = stb.calibrated_constants()
    assert k.provenance.startswith("calibrated(standard-v1")
    assert set(k.binding) <= set(stb.CONSTANT_NAMES)
    for name in stb.CONSTANT_NAMES:
        assert getattr(k, name) > 0


def test_record_json_roundtrip(tmp_path):
    k = ConstantsRecord(c_weak=2.0, C_q=0.3, provenance="x", binding={"C_q": "box"})
    p = tmp_path / "k.json"
    p.write_text(k.to_json())
    assert ConstantsRecord.load(str(p)) == k
    assert json.loads(k.to_json())["C_q"] == 0.3


def test_record_rejects_nonpositive():
    with pytest.raises(DomainError):
        ConstantsRecord(c_iso=0.0)


# ---------------------------------------------------------------- thresholds

def test_weak_thresholds_formula():
    th = stb.thresholds_weak(2, 1.0, math.e, 1e-6)
    # r_hi = sqrt(log(c L^2 / (n^2 eps))) / b with L = 1, c = 1
    assert th.r_hi == pytest.approx(math.sqrt(math.log(1.0 / (4 * 1e-6))) / math.e, rel=1e-12)
    assert th.r_hi == pytest.approx(1.29696, abs=1e-5)
    assert th.r_lo == pytest.approx(math.sqrt(2) * 1e-2, rel=1e-9)


def test_weak_thresholds_edge_cases():
    assert stb.thresholds_weak(2, 1.0, 2.0, 0.0).r_hi == math.inf
    th = stb.thresholds_weak(3, 1.0, 1.1, 10.0)
    assert th.r_hi is None and th.flag
    with pytest.raises(DomainError):
        stb.thresholds_weak(2, 2.0, 1.0, 0.1)
    with pytest.raises(DomainError):
        stb.thresholds("medium")


def test_strong_thresholds_symmetric_in_endpoints():
    x, y = np.array([0.0, 0.5]), np.array([1.0, -0.2])
    a = stb.thresholds("strong", n=2, x=x, y=y, delta=0.5, alpha=0.5, beta=0.5, eps=1e-4)
    b = stb.thresholds("strong", n=2, x=y, y=x, delta=0.5, alpha=0.5, beta=0.5, eps=1e-4)
    assert a == b


def test_weak_verdict_full_space_inconclusive():
    v = stb.weak_verdict(Box([0.1, 0.1]), 0.5, 2.0)
    assert v.branch in stb.BRANCHES
    v0 = stb.weak_verdict(full_space(2), 0.5, 2.0)
    assert v0.branch == "inconclusive"


def test_strong_verdict_returns_known_branch():
    v = stb.strong_verdict(Box([1.0, 2.0]), [0.0, 0.0], [1.0, -0.5], 0.4, 0.5, 0.5,
                           seed=1, samples=50_000)
    assert v.branch in stb.BRANCHES


# ---------------------------------------------------------------- dichotomy

def test_strip_dichotomy_quantity():
    d = stb.dichotomy_quantity(Strip([1.0, 0.0], 1.0), stb.calibrated_constants())
    I = integrate.quad(lambda s: s * s * stats.chi.pdf(s, 2), 0, 1)[0]
    oracle = G1 / I + G1 / (2 * PHI1)
    assert d.Q == pytest.approx(oracle, rel=1e-10)
    assert abs(d.Q - 5.1955) <= 1e-3
    assert d.verdict != "violated"


def test_small_box_lower_branch():
    d = stb.dichotomy_quantity(Box([0.1, 0.1]), stb.calibrated_constants())
    assert d.verdict == "lower_branch"


def test_corpus_dichotomies_never_violated():
    rows = stb.corpus_dichotomies(standard_corpus(0), stb.calibrated_constants(), 0, 100_000)
    assert len(rows) >= 20
    assert all(d.verdict != "violated" for _, d in rows)


def test_dichotomy_needs_bounded_body():
    with pytest.raises(DomainError):
        stb.dichotomy_quantity(full_space(2))


# ---------------------------------------------------------------- audits

def test_ball_mass_audit():
    rows = stb.bound_audit("ball_mass", {"n": 1})
    assert rows[0].slack == pytest.approx(stats.chi2.cdf(4, 1) - 0.75, rel=1e-12)
    assert rows[0].slack == pytest.approx(0.2045, abs=1e-4)
    assert rows[1].kind == "ball_mass_moment"


def test_komatsu_audit_values():
    lo, hi = stb.bound_audit("komatsu", {"R": 1.0})
    assert lo.rhs == pytest.approx(math.exp(-0.5) / 2)
    assert lo.lhs == pytest.approx(integrate.quad(lambda s: math.exp(-s * s / 2), 1, math.inf)[0])
    assert hi.lhs == pytest.approx(math.exp(-0.5))
    assert lo.slack > 0 and hi.slack > 0


def test_iso_small_skipped_for_large_bodies():
    row, = stb.bound_audit("iso_small", {"body": Box([3.0, 3.0])})
    assert row.skipped and row.holds


def test_iso_big_holds_for_large_box():
    row, = stb.bound_audit("iso_big", {"body": Box([2.0, 2.0])})
    assert row.skipped is None and row.holds


def test_unknown_audit():
    with pytest.raises(DomainError):
        stb.bound_audit("nope", {})


def test_tilde_radius():
    target = 2 * stats.norm.cdf(1) - 1
    assert stb.tilde_radius(2) == pytest.approx(math.sqrt(stats.chi2.ppf(target, 2)), rel=1e-9)
    assert stb.tilde_radius(2) == pytest.approx(1.515173, abs=1e-6)


# ---------------------------------------------------------------- strip sharpness

def test_strip_sharpness_rows():
    rows = stb.strip_sharpness(1.0, 4.0, [1.0, 2.0, 3.0])
    assert rows[0][1] == pytest.approx(0.1552552706, abs=1e-10)
    for R, eps, C in rows:
        assert C == pytest.approx(R / math.sqrt(math.log1p(1 / eps)))
    Cs = [c for *_, c in stb.strip_sharpness(1.0, 4.0, np.arange(1, 5.01, 0.25))]
    assert max(Cs) / min(Cs) <= 2


def test_strip_sharpness_errors():
    with pytest.raises(DomainError):
        stb.strip_sharpness(4.0, 1.0, [1.0])
    with pytest.raises(DomainError):
        stb.strip_sharpness(1.0, 4.0, [-1.0])


# ---------------------------------------------------------------- trace and witnesses

def test_trace_check_linear_box():
    tc = stb.trace_check(Box([1.0, 1.0]), FunctionSpec.linear([1.0, 0.0]), seed=1, samples=200_000)
    lhs = 2 * PHI1 * G1 + 2 * PHI1 * _m2(1.0)
    rhs = (2 * _m2(1.0) * G1 + G1 * G1)
    assert abs(tc.lhs - lhs) <= 4 * tc.lhs_error
    assert abs(tc.rhs - rhs) <= 4 * tc.rhs_error
    assert tc.holds


@pytest.mark.parametrize("eta", [0.0, 0.05, 0.1])
def test_poincare_witness(eta):
    f = FunctionSpec.polynomial({(1, 0): 1.0, (3, 0): eta}, 2)
    w = stb.poincare_stability_witness(Box([1.0, 1.0]), f, seed=2, samples=200_000)
    assert w.gradient_holds and not w.flag
    if eta == 0.0:
        assert w.w12_residual == pytest.approx(0.0, abs=1e-12)
        assert abs(w.epsilon - (1 - _m2(1.0) / G1)) <= 4 * w.epsilon_error


def test_quad_check_box():
    qc = stb.quad_boundary_check(Box([1.0, 1.0]), np.eye(2), seed=1, samples=200_000)
    # eps = 2E|x|^2 - Var|x|^2 for T = I, exact on boxes
    m2 = _m2(1.0) / G1
    m4 = integrate.quad(lambda x: x ** 4 * stats.norm.pdf(x), -1, 1)[0] / G1
    assert qc.epsilon == pytest.approx(4 * m2 - 2 * (m4 - m2 * m2), rel=1e-10)
    for row in qc.rows:
        assert abs(row.B - 2 * PHI1 * G1) <= 4 * row.B_error
        assert row.B <= row.rhs


def test_quad_check_scales_with_rows():
    qc = stb.quad_boundary_check(Box([1.0, 1.0]), np.diag([1.0, 2.0]), seed=1, samples=200_000)
    B1, B2 = qc.rows[0].B, qc.rows[1].B
    assert B2 / B1 == pytest.approx(4.0, rel=0.03)
    with pytest.raises(DomainError):
        stb.quad_boundary_check(Box([1.0, 1.0]), np.diag([1.0, -1.0]))


# ---------------------------------------------------------------- calibration

def test_calibration_on_small_corpus():
    corpus = [("box-1d", Box([1.0])), ("ball-2", Ball(1.0, 2)),
              ("tri", HPolytope([[1.0, 0.0], [0.5, 0.9], [-0.5, 0.9]], [0.6, 0.6, 0.6]))]
    k = stb.calibrate_constants(corpus, seed=0, samples=20_000, corpus_id="mini",
                                ball_dims=range(1, 6))
    assert k.provenance.startswith("calibrated(mini")
    assert k.c_prop == 1.0 and k.C_weak == 1.0
    # fitted constants make the audits they were fitted on hold
    for label, body in corpus:
        r = stb.in_radius(body)
        row, = stb.bound_audit("ball_moment", {"n": body.dim, "r": r}, k)
        assert row.slack >= 0
    for n in range(1, 6):
        assert all(r.slack >= 0 for r in stb.bound_audit("ball_mass", {"n": n}, k))
    # deterministic
    k2 = stb.calibrate_constants(corpus, seed=0, samples=20_000, corpus_id="mini",
                                 ball_dims=range(1, 6))
    assert k2 == k


def test_calibration_requires_corpus():
    with pytest.raises(DomainError):
        stb.calibrate_constants([])
