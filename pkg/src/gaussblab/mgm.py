"""Maximal Gaussian measure position: isotropy ascent over volume-preserving maps.

A position is ``TK`` with ``T = exp(D)``, ``D`` symmetric and traceless.
Rotations do not change Gaussian measure, so the polar part of ``T`` is
dropped after every update. The ascent direction at ``TK`` is the traceless
gradient of ``s -> log gamma(exp(s A) T K)``,

    Delta = (tr M / n) I - M,

where ``M`` is the second-moment matrix of the Gaussian restricted to
``TK``; ``Delta = 0`` exactly when the restriction is isotropic.

All estimates along one trajectory reuse the same sample stream, so the
accept/reject decisions compare objectives under common random numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gauss
from .bodies import SymmetricBody, in_radius, linear_image
from .errors import DomainError, StallError
from .gauss import MeasureEstimate, MomentSummary
from .sampling import derive_seed

STEP_FLOOR = 1e-6


def sym_expm(D):
    """Exponential of a symmetric matrix via its eigendecomposition."""
    w, V = np.linalg.eigh(0.5 * (D + D.T))
    return (V * np.exp(w)) @ V.T


def sym_logm(P):
    w, V = np.linalg.eigh(0.5 * (P + P.T))
    if w.min() <= 0:
        raise DomainError("matrix logarithm needs a positive definite argument")
    return (V * np.log(w)) @ V.T


def traceless(A):
    A = 0.5 * (A + A.T)
    return A - np.trace(A) / len(A) * np.eye(len(A))


def isotropy_residual(moments) -> float:
    """``||M - (tr M / n) I||_F / (tr M / n)`` for a summary or a matrix ``M``."""
    M = moments.second_moment if isinstance(moments, MomentSummary) else np.asarray(moments, float)
    n = len(M)
    s = np.trace(M) / n
    if not s > 0:
        raise DomainError("second-moment matrix has zero trace")
    return float(np.linalg.norm(M - s * np.eye(n)) / s)


def ascent_direction(M):
    n = len(M)
    return np.trace(M) / n * np.eye(n) - M


@dataclass
class MgmState:
    D: np.ndarray
    T: np.ndarray
    M: np.ndarray
    isotropy_residual: float
    objective: MeasureEstimate
    iteration: int = 0
    step: float = 0.0
    delta: np.ndarray = None

    def to_dict(self):
        return {"D": self.D.tolist(), "T": self.T.tolist(), "M": self.M.tolist(),
                "isotropy_residual": self.isotropy_residual,
                "objective": self.objective.to_dict(), "iteration": self.iteration,
                "step": self.step}


def evaluate(body: SymmetricBody, D, seed=0, samples=200_000, iteration=0, step=0.0) -> MgmState:
    """State of the position ``exp(D) K``; moments and measure share ``seed``."""
    D = traceless(np.asarray(D, dtype=float))
    T = sym_expm(D)
    T /= np.linalg.det(T) ** (1.0 / len(T))
    TK = linear_image(body, T)
    mom = gauss.moments(TK, seed, samples)
    obj = gauss.measure(TK, seed=seed, samples=samples)
    M = mom.second_moment
    return MgmState(D, T, M, isotropy_residual(M), obj, iteration, step, ascent_direction(M))


def _accept(new: MgmState, old: MgmState) -> bool:
    tol = 3.0 * max(new.objective.std_error, old.objective.std_error)
    return new.objective.value >= old.objective.value - tol - 1e-12 * old.objective.value


def mgm_step(body: SymmetricBody, state: MgmState, step: float = 0.5, seed=0,
             samples=200_000) -> MgmState:
    """One backtracking ascent step from ``state``.

    The update is ``T' = polar part of exp(step * Delta) T``; the step is
    halved until the objective does not drop by more than three standard
    errors, down to a floor of 1e-6.
    """
    if not step > 0:
        raise DomainError("step must be positive")
    if not np.any(state.delta):
        return state
    h = step
    while h >= STEP_FLOOR:
        T1 = sym_expm(h * state.delta) @ state.T
        D1 = traceless(0.5 * sym_logm(T1.T @ T1))
        new = evaluate(body, D1, seed, samples, state.iteration + 1, h)
        if _accept(new, state):
            return new
        h *= 0.5
    raise StallError("backtracking reached the step floor without an accepted step",
                     {"iteration": state.iteration, "T": state.T.tolist(),
                      "objective": state.objective.value,
                      "isotropy_residual": state.isotropy_residual})


@dataclass
class MgmResult:
    state: MgmState
    trajectory: list = field(default_factory=list)
    converged: bool = False

    def to_dict(self):
        return {"converged": self.converged, "state": self.state.to_dict(),
                "trajectory": self.trajectory}

    CSV_FIELDS = ("iteration", "objective", "std_error", "residual", "step")


def _record(state):
    return {"iteration": state.iteration, "objective": state.objective.value,
            "std_error": state.objective.std_error, "residual": state.isotropy_residual,
            "step": state.step}


def mgm_solve(body: SymmetricBody, tol=1e-3, max_iter=200, step0=0.5, seed=0, samples=200_000,
              D0=None) -> MgmResult:
    """Ascend to the isotropic (maximal Gaussian measure) position of ``body``."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    r = in_radius(body)
    if not (0 < r < math.inf):
        raise DomainError("MGM position needs a bounded body with nonempty interior")
    n = body.dim
    state = evaluate(body, np.zeros((n, n)) if D0 is None else D0, seed, samples)
    traj = [_record(state)]
    while state.isotropy_residual >= tol and state.iteration < max_iter:
        state = mgm_step(body, state, step0, seed, samples)
        traj.append(_record(state))
    return MgmResult(state, traj, state.isotropy_residual < tol)


def random_traceless(n, rng):
    A = rng.uniform(-0.5, 0.5, (n, n))
    return traceless(A)


# ---------------------------------------------------------------------------
# probes


@dataclass
class ProbeResult:
    grid: list
    values: list
    slacks: list
    errors: list
    min_slack: float
    min_error: float
    method: str

    @property
    def holds(self):
        return all(s >= -3.0 * e - 1e-12 for s, e in zip(self.slacks, self.errors))

    def to_dict(self):
        return {"grid": self.grid, "values": self.values, "slacks": self.slacks,
                "errors": self.errors, "min_slack": self.min_slack,
                "min_error": self.min_error, "method": self.method, "holds": self.holds}


def log_concavity_probe(body: SymmetricBody, D, grid, seed=0, samples=400_000) -> ProbeResult:
    """Concavity slacks of ``t -> log gamma(exp(tD) K)`` on consecutive grid triples.

    For a triple ``t0 < t1 < t2`` the slack is ``V(t1)`` minus the chord
    value at ``t1``; on a uniform grid this is the midpoint slack.
    """
    grid = [float(t) for t in grid]
    if len(grid) < 3 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid needs at least three increasing points")
    D = traceless(np.asarray(D, dtype=float))
    bodies = [linear_image(body, sym_expm(t * D)) for t in grid]
    exact = [gauss.closed_form_measure(b) for b in bodies]
    if all(v is not None for v in exact):
        p = np.array(exact)
        cov = np.zeros((len(p), len(p)))
        count, method = 1, "closed_form"
    else:
        acc = gauss.joint_indicators(bodies, seed, samples)
        p, cov, count, method = acc.mean, acc.cov, acc.count, "monte_carlo"
    if np.any(p <= 0):
        raise gauss.UnresolvableMassError("a probed body has no resolvable mass")
    V = np.log(p)
    slacks, errors = [], []
    for j in range(1, len(grid) - 1):
        t0, t1, t2 = grid[j - 1:j + 2]
        w0, w2 = (t2 - t1) / (t2 - t0), (t1 - t0) / (t2 - t0)
        g = np.zeros(len(p))
        g[j - 1], g[j], g[j + 1] = -w0 / p[j - 1], 1.0 / p[j], -w2 / p[j + 1]
        slacks.append(float(V[j] - w0 * V[j - 1] - w2 * V[j + 1]))
        errors.append(float(np.sqrt(max(g @ cov @ g, 0.0) / count)))
    k = int(np.argmin(slacks))
    return ProbeResult(grid, V.tolist(), slacks, errors, slacks[k], errors[k], method)


@dataclass
class GradientCheck:
    predicted: list
    finite_difference: list
    errors: list

    @property
    def holds(self):
        return all(abs(a - b) <= 3.0 * e for a, b, e in zip(self.predicted, self.finite_difference,
                                                          self.errors))

    def to_dict(self):
        return {"predicted": self.predicted, "finite_difference": self.finite_difference,
                "errors": self.errors, "holds": self.holds}


def gradient_check(body: SymmetricBody, state: MgmState = None, directions=5, h=0.05, seed=0,
                   samples=1_000_000) -> GradientCheck:
    """Compare ``<Delta, A>_F`` with a central difference of ``log gamma(exp(sA) TK)``.

    ``A`` runs over random unit traceless directions; the difference uses
    the Richardson pair ``(h, h/2)`` on one shared stream.
    """
    n = body.dim
    state = state or evaluate(body, np.zeros((n, n)), seed, samples)
    base = linear_image(body, state.T)
    mom = gauss.moments(base, derive_seed(seed, 7), samples)
    delta = ascent_direction(mom.second_moment)
    rng = np.random.default_rng(derive_seed(seed, 8))
    pred, fd, errs = [], [], []
    for k in range(directions):
        A = random_traceless(n, rng)
        A /= np.linalg.norm(A)
        steps = [h, -h, h / 2, -h / 2]
        bodies = [linear_image(base, sym_expm(s * A)) for s in steps]
        acc = gauss.joint_indicators(bodies, derive_seed(seed, 9, k), samples)
        p = acc.mean
        g1 = np.array([1 / p[0], -1 / p[1], 0, 0]) / (2 * h)
        g2 = np.array([0, 0, 1 / p[2], -1 / p[3]]) / h
        gR = (4 * g2 - g1) / 3
        V = np.log(p)
        D1 = (V[0] - V[1]) / (2 * h)
        D2 = (V[2] - V[3]) / h
        est = (4 * D2 - D1) / 3
        # error of the moment-level prediction: linear in the entries of M
        pe = float(np.sqrt(np.sum((A * mom.second_moment_err) ** 2)))
        pred.append(float(np.sum(delta * A)))
        fd.append(float(est))
        errs.append(float(math.hypot(acc.delta_se(gR), pe)))
    return GradientCheck(pred, fd, errs)


# ---------------------------------------------------------------------------
# uniqueness


def procrustes_distance(T1, T2) -> float:
    """``min_Q ||T1 T2^{-1} - Q||_F`` over orthogonal ``Q``."""
    s = np.linalg.svd(T1 @ np.linalg.inv(T2), compute_uv=False)
    return float(np.linalg.norm(s - 1.0))


@dataclass
class UniquenessReport:
    objectives: list
    objective_errors: list
    max_objective_gap: float
    max_spectrum_gap: float
    max_procrustes: float
    converged: list
    asserted: bool
    maps: list

    @property
    def gap_resolved(self):
        return self.max_objective_gap <= 3.0 * max(self.objective_errors + [0.0]) + 1e-12

    def to_dict(self):
        return {"objectives": self.objectives, "objective_errors": self.objective_errors,
                "max_objective_gap": self.max_objective_gap,
                "max_spectrum_gap": self.max_spectrum_gap, "max_procrustes": self.max_procrustes,
                "converged": self.converged, "asserted": self.asserted, "maps": self.maps}


def uniqueness_experiment(body: SymmetricBody, starts=5, tol=1e-3, max_iter=200, step0=0.5,
                          seed=0, samples=200_000) -> UniquenessReport:
    """Solve from ``starts`` random traceless generators and compare the optima.

    Every start uses the same sample stream; only the initial generator
    (drawn from a per-start derived seed) differs. Uniqueness is asserted
    only for bodies with in-radius at least 1e-3.
    """
    if starts < 2:
        raise DomainError("need at least two starts")
    n = body.dim
    results = []
    for k in range(starts):
        D0 = random_traceless(n, np.random.default_rng(derive_seed(seed, 100, k)))
        results.append(mgm_solve(body, tol, max_iter, step0, seed, samples, D0))
    objs = [r.state.objective.value for r in results]
    errs = [r.state.objective.std_error for r in results]
    spectra = [np.sort(np.linalg.eigvalsh(r.state.M)) for r in results]
    maps = [r.state.T for r in results]
    gap = spec = proc = 0.0
    for i in range(starts):
        for j in range(i + 1, starts):
            gap = max(gap, abs(objs[i] - objs[j]))
            spec = max(spec, float(np.max(np.abs(spectra[i] - spectra[j]))))
            proc = max(proc, procrustes_distance(maps[i], maps[j]))
    return UniquenessReport(objs, errs, gap, spec, proc, [r.converged for r in results],
                            bool(in_radius(body) >= 1e-3), [m.tolist() for m in maps])
