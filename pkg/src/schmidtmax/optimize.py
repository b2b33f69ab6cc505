"""Core Schmidt-norm maximization iteration and restart orchestration.

One update step: Schmidt decompose across every cut in the objective, form
the gradient-weighted top-k truncation sum_{i<=k} c_i lambda_i^(p-1)
|left_i>(x)|right_i> per cut, add the terms, project back into the
constraint subspace and normalize. The summed quantity
sum_terms sum_{i<=k} c_i lambda_i^p is monotonically nondecreasing along
the flow and converges; the iteration stops when its increments stall.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg

from .measures import NormSpec, clamp_k
from .states import (Cut, CutShape, PureState, cut_matrix, uncut_matrix,
                     random_state, robust_svd)
from .subspaces import SubspaceProjector, DENSE_LIMIT

DEGENERATE_NORM = 1e-14
SUBSPACE_TOL = 1e-8
SUCCESS_TOL = 1e-5


class DegenerateDirectionError(RuntimeError):
    """The projected update vanished; a different restart is needed."""


@dataclass(frozen=True)
class _TermPlan:
    shape: CutShape
    p: float
    k: int
    weights: np.ndarray


@dataclass(frozen=True)
class Objective:
    """Subspace projector plus (cut, norm-spec) terms over fixed factor dims."""

    dims: tuple[int, ...]
    projector: SubspaceProjector
    terms: tuple[tuple[Cut, NormSpec], ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("objective needs at least one term")
        if self.projector.ambient_dim != math.prod(dims):
            raise ValueError("projector ambient dimension does not match dims")
        plans = []
        for cut, spec in self.terms:
            shape = cut.split(dims)
            k = clamp_k(spec, shape.n_s)
            plans.append(_TermPlan(shape, float(spec.p), k, spec.weight_array(k)))
        object.__setattr__(self, "_plans", tuple(plans))

    def value(self, amps: np.ndarray) -> float:
        """sum over terms of sum_{i<=k} c_i lambda_i^p (the monotone quantity)."""
        return _evaluate(amps, self)[0]

    def term_norms(self, amps: np.ndarray) -> tuple[float, ...]:
        """Per-term Schmidt-norm values (sum c lambda^p)^(1/p)."""
        return _evaluate(amps, self)[1]


def _evaluate(amps, objective):
    total = 0.0
    norms = []
    for plan in objective._plans:
        s = robust_svd(cut_matrix(amps, objective.dims, plan.shape), compute_uv=False)
        v = float(np.sum(plan.weights * s[:plan.k] ** plan.p))
        total += v
        norms.append(v ** (1.0 / plan.p))
    return total, tuple(norms)


def _term_update_svd(m, plan):
    """Direct SVD variant, preferred for nearly square cut matrices."""
    u, s, vh = robust_svd(m)
    lam = s[:plan.k]
    value = float(np.sum(plan.weights * lam**plan.p))
    if plan.p == 1.0:
        # zero coefficients get no gradient weight: their vectors are
        # SVD-arbitrary directions
        grad = plan.weights * (lam > 1e-12)
    else:
        grad = plan.weights * lam ** (plan.p - 1.0)
    m_up = (u[:, :plan.k] * grad) @ vh[:plan.k]
    return value, m_up


def _term_update(m, plan):
    """Value and gradient-weighted truncation for one cut.

    Works on the Gram matrix of the smaller side: an eigh of the
    min(d_A,d_B)-dimensional Gram matrix is much cheaper than the SVD of
    the rectangular cut matrix and yields the same squared coefficients.
    The update sum_i c_i lambda_i^(p-1) u_i v_i^dagger is reassembled as
    Q diag(c_i lambda_i^(p-2)) Q^dagger applied to m from the small side.
    """
    d_a, d_b = m.shape
    if max(d_a, d_b) < 2 * min(d_a, d_b):
        return _term_update_svd(m, plan)
    gram = m @ m.conj().T if d_a <= d_b else m.conj().T @ m
    eigs, q = np.linalg.eigh(gram)
    eigs = np.clip(eigs[::-1], 0.0, None)
    q = q[:, ::-1]
    lam = np.sqrt(eigs[:plan.k])
    value = float(np.sum(plan.weights * lam**plan.p))
    # coefficients below the (relative) floor are treated as exact zeros:
    # their singular vectors are numerically arbitrary directions
    floor = max(1e-12, 1e-8 * math.sqrt(eigs[0]) if eigs[0] > 0 else 1e-12)
    keep = lam > floor
    if plan.p == 1.0:
        grad = plan.weights * keep
    else:
        grad = plan.weights * lam ** (plan.p - 1.0)
    coef = np.where(keep, grad / np.maximum(lam, 1e-300), 0.0)
    qk = q[:, :plan.k]
    if d_a <= d_b:
        m_up = (qk * coef) @ (qk.conj().T @ m)
    else:
        m_up = (m @ qk) * coef @ qk.conj().T
    return value, m_up


def _step(amps, objective):
    """One update. Returns (value of amps, per-term norms, next amps)."""
    update = np.zeros_like(amps)
    total = 0.0
    norms = []
    for plan in objective._plans:
        m = cut_matrix(amps, objective.dims, plan.shape)
        v, m_up = _term_update(m, plan)
        total += v
        norms.append(v ** (1.0 / plan.p))
        update += uncut_matrix(m_up, objective.dims, plan.shape)
    nxt = objective.projector.apply(update)
    nrm = np.linalg.norm(nxt)
    if nrm < DEGENERATE_NORM:
        raise DegenerateDirectionError("projected update direction vanished")
    return total, tuple(norms), nxt / nrm


def iterate_once(state: PureState, objective: Objective) -> PureState:
    """Apply a single iteration step to a normalized in-subspace state."""
    state.require_normalized()
    amps = state.amps
    if np.linalg.norm(objective.projector.apply(amps) - amps) > SUBSPACE_TOL:
        raise ValueError("state is not in the constraint subspace")
    _, _, nxt = _step(amps, objective)
    return PureState(state.dims, nxt)


def fixed_point_residual(state: PureState, objective: Objective) -> float:
    """min over a global phase of || iterate(psi) - e^{i theta} psi ||."""
    nxt = iterate_once(state, objective)
    overlap = abs(np.vdot(state.amps, nxt.amps))
    return math.sqrt(max(0.0, 2.0 - 2.0 * overlap))


def distance_bound_check(prev_state: PureState, next_state: PureState,
                         objective: Objective) -> tuple[float, float]:
    """(lhs, rhs) of ||psi - phi||^2 <= 2 - 2 ||psi|| / ||phi|| for consecutive iterates."""
    if len(objective.terms) != 1:
        raise ValueError("distance bound applies to single-term objectives")
    overlap = abs(np.vdot(prev_state.amps, next_state.amps))
    lhs = 2.0 - 2.0 * overlap
    n_prev = objective.term_norms(prev_state.amps)[0]
    n_next = objective.term_norms(next_state.amps)[0]
    rhs = 2.0 - 2.0 * n_prev / n_next
    return lhs, rhs


@dataclass(frozen=True)
class IterationConfig:
    max_iters: int = 100_000
    tol_increment: float = 1e-10
    stall_window: int = 50
    seed: int = 0
    restarts: int = 10
    record_trace: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.max_iters < 1 or self.stall_window < 1 or self.restarts < 1:
            raise ValueError("counts must be positive")
        if self.tol_increment <= 0:
            raise ValueError("tol_increment must be positive")


def split_seed(master: int, index: int) -> int:
    """Deterministic per-restart seed from the master seed (splitmix64 step)."""
    z = (int(master) + (index + 1) * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RestartResult:
    seed: int
    value: float
    term_norms: tuple[float, ...]
    iterations: int
    converged: bool
    residual: float
    amps: np.ndarray
    iters_to_target: int | None
    success: bool


@dataclass(frozen=True)
class IterationReport:
    restarts: tuple[RestartResult, ...]
    term_targets: tuple[float, ...] | None
    trace: tuple[tuple[int, int, float, float], ...]  # (restart, iter, objective, residual)

    @property
    def best(self) -> RestartResult:
        return max(self.restarts, key=lambda r: r.value)

    @property
    def success_count(self) -> int:
        return sum(r.success for r in self.restarts)

    @property
    def mean_iterations_success(self) -> float | None:
        its = [r.iters_to_target if r.iters_to_target is not None else r.iterations
               for r in self.restarts if r.success]
        return float(np.mean(its)) if its else None


def _init_state(objective: Objective, seed: int) -> np.ndarray:
    for attempt in range(10):
        amps = random_state(objective.dims, split_seed(seed, 1000 + attempt)).amps
        proj = objective.projector.apply(amps)
        nrm = np.linalg.norm(proj)
        if nrm >= DEGENERATE_NORM:
            return proj / nrm
    raise DegenerateDirectionError("could not initialize inside the subspace")


def _run_restart(objective, config, seed, term_targets):
    amps = _init_state(objective, seed)
    trace = []
    prev_value = None
    stall = 0
    steps = 0
    iters_to_target = None
    converged = False
    value, norms = _evaluate(amps, objective)
    residual = float("nan")
    for _ in range(config.max_iters):
        value, norms, nxt = _step(amps, objective)
        overlap = abs(np.vdot(amps, nxt))
        residual = math.sqrt(max(0.0, 2.0 - 2.0 * overlap))
        if config.record_trace:
            trace.append((steps, value, residual))
        if term_targets is not None and iters_to_target is None:
            if all(abs(n - t) < SUCCESS_TOL for n, t in zip(norms, term_targets)):
                iters_to_target = steps
        if prev_value is not None:
            if value - prev_value < config.tol_increment:
                stall += 1
            else:
                stall = 0
        prev_value = value
        if stall >= config.stall_window:
            converged = True
            break
        amps = nxt
        steps += 1
    success = iters_to_target is not None if term_targets is not None else converged
    return RestartResult(seed=seed, value=value, term_norms=norms, iterations=steps,
                         converged=converged, residual=residual, amps=amps,
                         iters_to_target=iters_to_target, success=success), trace


def run_single(objective: Objective, config: IterationConfig,
               term_targets=None) -> IterationReport:
    """Multi-restart optimization of an objective.

    ``term_targets``: optional per-term Schmidt-norm targets; a restart is
    successful once every term norm is within 1e-5 of its target.
    """
    if term_targets is not None:
        term_targets = tuple(float(t) for t in term_targets)
        if len(term_targets) != len(objective.terms):
            raise ValueError("need one target per objective term")
    seeds = [split_seed(config.seed, r) for r in range(config.restarts)]

    def job(seed):
        try:
            return _run_restart(objective, config, seed, term_targets)
        except DegenerateDirectionError:
            return None

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(job, seeds))
    else:
        outcomes = [job(s) for s in seeds]

    results = []
    trace = []
    for r, outcome in enumerate(outcomes):
        if outcome is None:
            continue
        res, rows = outcome
        results.append(res)
        trace.extend((r, it, val, resid) for it, val, resid in rows)
    if not results:
        raise DegenerateDirectionError("all restarts degenerate")
    return IterationReport(tuple(results), term_targets, tuple(trace))


def shor_baseline(objective: Objective, alpha: float,
                  config: IterationConfig) -> IterationReport:
    """Leading-eigenvector iteration for the p = 2 alpha, k = n_s problem.

    Each step diagonalizes P((rho_A)^(alpha-1) (x) 1)P for the current
    state's reduction and moves to the top eigenvector. Dense-scale only.
    """
    if len(objective.terms) != 1:
        raise ValueError("baseline handles a single cut")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    cut, spec = objective.terms[0]
    shape = cut.split(objective.dims)
    if spec.k != shape.n_s or spec.p != 2 * alpha:
        raise ValueError("baseline requires k = n_s and p = 2 alpha")
    n = objective.projector.ambient_dim
    if n > DENSE_LIMIT:
        raise ValueError(f"ambient dimension {n} too large for the dense baseline")
    proj = objective.projector

    results = []
    trace = []
    for r in range(config.restarts):
        seed = split_seed(config.seed, r)
        amps = _init_state(objective, seed)
        prev_value = None
        stall = 0
        steps = 0
        converged = False
        value = objective.value(amps)
        for _ in range(config.max_iters):
            m = cut_matrix(amps, objective.dims, shape)
            rho = m @ m.conj().T
            if alpha == 1:
                rho_pow = np.eye(rho.shape[0], dtype=np.complex128)
            else:
                eigs, vecs = np.linalg.eigh(rho)
                eigs = np.clip(eigs, 0.0, None)
                rho_pow = (vecs * eigs ** (alpha - 1.0)) @ vecs.conj().T

            def matvec(x):
                w = proj.apply(x.astype(np.complex128))
                wm = cut_matrix(w, objective.dims, shape)
                return proj.apply(uncut_matrix(rho_pow @ wm, objective.dims, shape))

            op = scipy.sparse.linalg.LinearOperator((n, n), matvec=matvec,
                                                    dtype=np.complex128)
            _, vec = scipy.sparse.linalg.eigsh(op, k=1, which="LA",
                                               v0=amps, tol=1e-12)
            amps = vec[:, 0] / np.linalg.norm(vec[:, 0])
            steps += 1
            value = objective.value(amps)
            if config.record_trace:
                trace.append((r, steps, value, float("nan")))
            if prev_value is not None and value - prev_value < config.tol_increment:
                stall += 1
            elif prev_value is not None:
                stall = 0
            prev_value = value
            if stall >= config.stall_window or alpha == 1:
                converged = True
                break
        norms = objective.term_norms(amps)
        results.append(RestartResult(seed=seed, value=value, term_norms=norms,
                                     iterations=steps, converged=converged,
                                     residual=float("nan"), amps=amps,
                                     iters_to_target=None, success=converged))
    return IterationReport(tuple(results), None, tuple(trace))
