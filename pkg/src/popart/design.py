"""Experimental design over a finite arm set.

Two scalar criteria of a design (a probability vector mu over the arms,
inducing the population covariance Q(mu) = sum_k mu_k a_k a_k^T):

* ``h_squared``: the largest diagonal entry of Q(mu)^{-1}.  Minimizing it
  picks the sampling distribution whose per-coordinate one-sample noise is
  smallest in the worst coordinate.  ``solve_h_star`` performs that
  minimization.
* minimum eigenvalue of Q(mu).  Maximizing it is the classical criterion
  used by Lasso-style guarantees; ``solve_c_min`` performs that
  maximization.

Both problems are convex over the simplex.  The solvers run entropic
mirror descent (exponentiated gradient) from several starts and then
polish the best iterate with an SLSQP pass; the returned objective is the
best exactly-evaluated candidate seen anywhere along the way, so highly
symmetric arm sets (e.g. the canonical basis, where the uniform design is
optimal) come out exact rather than approximate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

__all__ = [
    "ActionSet",
    "Design",
    "CovMatrix",
    "DesignSolution",
    "population_covariance",
    "h_squared",
    "solve_h_star",
    "solve_c_min",
    "compatibility_constant",
]

# weights below this after convergence are treated as exact zeros
PRUNE_TOL = 1e-10
# relative ridge added to Q inside solver iterations only
RIDGE = 1e-12


@dataclass(frozen=True)
class ActionSet:
    """A finite arm set, one arm per row."""

    arms: np.ndarray

    def __post_init__(self):
        arms = np.asarray(self.arms, dtype=float)
        if arms.ndim != 2 or arms.shape[0] < 1:
            raise ValueError("arms must be a nonempty 2-D array, one arm per row")
        if not np.all(np.isfinite(arms)):
            raise ValueError("arms must be finite")
        object.__setattr__(self, "arms", arms)

    @property
    def k(self) -> int:
        return self.arms.shape[0]

    @property
    def d(self) -> int:
        return self.arms.shape[1]


@dataclass(frozen=True)
class Design:
    """Probability weights over the arms of an ActionSet."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(w < -1e-12) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be nonnegative and finite")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1 within 1e-9")
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)


@dataclass(frozen=True)
class CovMatrix:
    """A population covariance together with its cached inverse."""

    q: np.ndarray
    q_inv: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        qi = np.asarray(self.q_inv, dtype=float)
        scale = max(1.0, np.max(np.abs(q)))
        if np.max(np.abs(q - q.T)) > 1e-10 * scale:
            raise ValueError("q must be symmetric")
        resid = q @ qi - np.eye(q.shape[0])
        if np.max(np.abs(resid)) > 1e-8 * max(1.0, np.max(np.abs(qi)) * scale):
            raise ValueError("q_inv is not an inverse of q")
        if np.any(np.diag(qi) <= 0):
            raise ValueError("q_inv must have positive diagonal")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "q_inv", qi)

    @classmethod
    def from_q(cls, q: np.ndarray) -> "CovMatrix":
        q = np.asarray(q, dtype=float)
        q = 0.5 * (q + q.T)
        try:
            cf = scipy.linalg.cho_factor(q)
            qi = scipy.linalg.cho_solve(cf, np.eye(q.shape[0]))
        except scipy.linalg.LinAlgError as exc:
            raise ValueError("covariance not invertible") from exc
        qi = 0.5 * (qi + qi.T)
        return cls(q=q, q_inv=qi)

    @property
    def d(self) -> int:
        return self.q.shape[0]


@dataclass(frozen=True)
class DesignSolution:
    """Solver output: the design, its covariance, and convergence info."""

    design: Design
    cov: CovMatrix
    objective: float
    iterations: int
    certified_gap: float


def population_covariance(actions: ActionSet, weights) -> CovMatrix:
    """Q(mu) = sum_k mu_k a_k a_k^T for a design mu, with cached inverse."""
    if isinstance(weights, Design):
        w = weights.weights
    else:
        w = Design(np.asarray(weights, dtype=float)).weights
    arms = actions.arms
    if w.shape[0] != actions.k:
        raise ValueError("weights length must match the number of arms")
    q = (arms * w[:, None]).T @ arms
    q = 0.5 * (q + q.T)
    evals = np.linalg.eigvalsh(q)
    if evals[0] <= 1e-12 * max(np.trace(q), 1e-300):
        raise ValueError("design does not span the space")
    return CovMatrix.from_q(q)


def h_squared(cov: CovMatrix) -> float:
    """Worst-coordinate variance proxy: max_i (Q^{-1})_{ii}."""
    return float(np.max(np.diag(cov.q_inv)))


# ---------------------------------------------------------------------------
# solver internals
# ---------------------------------------------------------------------------


def _check_spanning(actions: ActionSet, err: str) -> None:
    if np.linalg.matrix_rank(actions.arms, tol=None) < actions.d:
        raise ValueError(err)


def _q_of(arms: np.ndarray, w: np.ndarray, ridge: bool) -> np.ndarray:
    q = (arms * w[:, None]).T @ arms
    q = 0.5 * (q + q.T)
    if ridge:
        q = q + (RIDGE * np.trace(q) / q.shape[0] + 1e-300) * np.eye(q.shape[0])
    return q


def _mirror_starts(k: int, seed: int, n_random: int = 5):
    rng = np.random.default_rng(seed)
    starts = [np.full(k, 1.0 / k)]
    for _ in range(n_random):
        starts.append(rng.dirichlet(np.ones(k)))
    return starts


def _mirror_descent(arms, start, grad_fn, obj_fn, max_iter, tol, sign):
    """Exponentiated-gradient loop.  sign=+1 descends, sign=-1 ascends.

    Steps are normalized by the current subgradient's max magnitude;
    raw eta_t = 1/sqrt(t) steps overflow exp() on badly scaled instances.
    """
    w = start.copy()
    best_w = w.copy()
    best_f = obj_fn(w)
    trace = [best_f]
    for t in range(1, max_iter + 1):
        g = grad_fn(w)
        gmax = np.max(np.abs(g))
        if gmax <= 0:
            break
        u = (-sign) * g / (gmax * np.sqrt(t))
        u -= u.max()  # keep exp() in range
        w = w * np.exp(u)
        w /= w.sum()
        f = obj_fn(w)
        trace.append(f)
        if sign * f < sign * best_f:
            best_f, best_w = f, w.copy()
        if t >= 50 and abs(trace[-50] - f) <= tol * max(abs(f), 1e-300):
            break
    return best_w, best_f, trace


def _finish(actions, w, obj_exact, iterations, trace):
    """Prune, renormalize, and package a solver result."""
    w = np.clip(w, 0.0, None)
    w[w < PRUNE_TOL] = 0.0
    if w.sum() <= 0:
        raise ValueError("design collapsed to zero weight")
    w = w / w.sum()
    try:
        cov = population_covariance(actions, w)
    except ValueError:
        # pruning destroyed the span; rebuild it from the unpruned weights
        w = np.clip(w + PRUNE_TOL, 0.0, None)
        w = w / w.sum()
        cov = population_covariance(actions, w)
    objective = obj_exact(cov)
    trace = list(trace) + [objective]
    tail = trace[-50:]
    certified_gap = abs(tail[0] - tail[-1]) / max(abs(tail[-1]), 1e-300)
    return DesignSolution(
        design=Design(w),
        cov=cov,
        objective=float(objective),
        iterations=int(iterations),
        certified_gap=float(certified_gap),
    )


def solve_h_star(actions: ActionSet, tol: float = 1e-8, max_iter: int = 300,
                 seed: int = 0) -> DesignSolution:
    """Minimize the worst diagonal entry of Q(mu)^{-1} over the simplex.

    Parameters
    ----------
    actions : ActionSet
        Arm set; its rows must span R^d.
    tol, max_iter : float, int
        Per-start stopping tolerance and iteration cap of the mirror
        descent phase.  The SLSQP polish afterwards runs to much tighter
        internal tolerances.
    seed : int
        Seeds the Dirichlet restarts; the solve is deterministic in it.

    Returns
    -------
    DesignSolution
        ``objective`` equals ``h_squared(population_covariance(actions,
        design))`` up to pruning of weights below 1e-10.
    """
    _check_spanning(actions, "cannot attain finite H^2: arms do not span the space")
    arms = actions.arms
    k, d = arms.shape

    def obj(w):
        qi = np.linalg.inv(_q_of(arms, w, ridge=True))
        return float(np.max(np.diag(qi)))

    def grad(w):
        qi = np.linalg.inv(_q_of(arms, w, ridge=True))
        i_star = int(np.argmax(np.diag(qi)))  # lowest index wins ties
        return -((arms @ qi[:, i_star]) ** 2)

    best_w, best_f, iters, full_trace = None, np.inf, 0, []
    for start in _mirror_starts(k, seed):
        w, f, trace = _mirror_descent(arms, start, grad, obj, max_iter, tol, sign=+1)
        iters += len(trace) - 1
        full_trace += trace
        if f < best_f:
            best_f, best_w = f, w

    # epigraph polish: min t  s.t.  (Q(w)^{-1})_{ii} <= t for all i
    w0 = np.clip(best_w, 1e-14, None)
    w0 /= w0.sum()
    x0 = np.concatenate([w0, [obj(w0)]])

    def cons_f(x):
        qi = np.linalg.inv(_q_of(arms, x[:k], ridge=True))
        return x[k] - np.diag(qi)

    def cons_jac(x):
        qi = np.linalg.inv(_q_of(arms, x[:k], ridge=True))
        jac = np.empty((d, k + 1))
        # d/dw_k of [t - (Q^{-1})_{ii}] = +(a_k' Q^{-1} e_i)^2
        jac[:, :k] = ((arms @ qi) ** 2).T
        jac[:, k] = 1.0
        return jac

    res = scipy.optimize.minimize(
        lambda x: x[k],
        x0,
        jac=lambda x: np.concatenate([np.zeros(k), [1.0]]),
        method="SLSQP",
        bounds=[(0.0, 1.0)] * k + [(0.0, None)],
        constraints=[
            {"type": "ineq", "fun": cons_f, "jac": cons_jac},
            {"type": "eq", "fun": lambda x: np.array([x[:k].sum() - 1.0]),
             "jac": lambda x: np.concatenate([np.ones(k), [0.0]])[None, :]},
        ],
        options={"maxiter": 400, "ftol": 1e-14},
    )
    iters += int(res.get("nit", 0))
    cand = [best_w]
    if np.all(np.isfinite(res.x[:k])) and res.x[:k].sum() > 0.5:
        cand.append(np.clip(res.x[:k], 0.0, None) / np.clip(res.x[:k], 0.0, None).sum())
    w_fin = min(cand, key=obj)
    full_trace.append(obj(w_fin))
    return _finish(actions, w_fin, h_squared, iters, full_trace)


def solve_c_min(actions: ActionSet, tol: float = 1e-8, max_iter: int = 300,
                seed: int = 0) -> DesignSolution:
    """Maximize the minimum eigenvalue of Q(mu) over the simplex.

    Same solver skeleton as ``solve_h_star``: mirror ascent restarts
    followed by a polish pass.  The polish maximizes a log-sum-exp
    soft-min of the spectrum with an increasing sharpness schedule, which
    stays differentiable at eigenvalue multiplicities (the exact min
    eigenvalue is not); every candidate is re-scored with the exact
    minimum eigenvalue and the best one is returned.
    """
    _check_spanning(actions, "C_min = 0; set does not span")
    arms = actions.arms
    k, d = arms.shape

    def lam_min(w):
        return float(np.linalg.eigvalsh(_q_of(arms, w, ridge=False))[0])

    def grad(w):
        evals, vecs = np.linalg.eigh(_q_of(arms, w, ridge=False))
        v = vecs[:, 0]
        return (arms @ v) ** 2

    best_w, best_f, iters, full_trace = None, -np.inf, 0, []
    for start in _mirror_starts(k, seed):
        w, f, trace = _mirror_descent(arms, start, grad, lam_min, max_iter, tol, sign=-1)
        iters += len(trace) - 1
        full_trace += trace
        if f > best_f:
            best_f, best_w = f, w

    # soft-min polish with continuation in the sharpness beta
    lam_ref = max(best_f, 1e-12)
    w_cur = np.clip(best_w, 1e-14, None)
    w_cur /= w_cur.sum()
    for beta in (1e2 / lam_ref, 1e3 / lam_ref, 1e4 / lam_ref, 1e5 / lam_ref):

        def neg_softmin(w, beta=beta):
            evals = np.linalg.eigvalsh(_q_of(arms, w, ridge=False))
            shifted = -beta * (evals - evals[0])
            return -(evals[0] - np.log(np.sum(np.exp(shifted))) / beta)

        def neg_softmin_grad(w, beta=beta):
            evals, vecs = np.linalg.eigh(_q_of(arms, w, ridge=False))
            omega = np.exp(-beta * (evals - evals[0]))
            omega /= omega.sum()
            m = vecs * omega[None, :]
            return -np.einsum("kd,kd->k", arms @ (m @ vecs.T), arms)

        res = scipy.optimize.minimize(
            neg_softmin,
            w_cur,
            jac=neg_softmin_grad,
            method="SLSQP",
            bounds=[(0.0, 1.0)] * k,
            constraints=[{"type": "eq",
                          "fun": lambda w: np.array([w.sum() - 1.0]),
                          "jac": lambda w: np.ones((1, k))}],
            options={"maxiter": 200, "ftol": 1e-14},
        )
        iters += int(res.get("nit", 0))
        if np.all(np.isfinite(res.x)) and res.x.sum() > 0.5:
            w_new = np.clip(res.x, 0.0, None)
            w_new /= w_new.sum()
            if lam_min(w_new) > lam_min(w_cur):
                w_cur = w_new
    cand = max([best_w, w_cur], key=lam_min)
    full_trace.append(lam_min(cand))

    def exact(cov):
        return float(np.linalg.eigvalsh(cov.q)[0])

    return _finish(actions, cand, exact, iters, full_trace)


# ---------------------------------------------------------------------------
# compatibility constant (small-scale certified oracle)
# ---------------------------------------------------------------------------


def compatibility_constant(sigma_matrix: np.ndarray, s: int,
                           convention: str = "standard",
                           restarts: int = 2000, seed: int = 0) -> float:
    """Compatibility constant phi_0^2 of a covariance, by brute search.

    min over supports S of size s, and over v in the convention's cone,
    of s * v' Sigma v / ||v_S||_1^2.  ``convention='standard'`` uses the
    cone ||v_{S^c}||_1 <= 3 ||v_S||_1 (the usual restricted-eigenvalue
    style condition); ``'reversed'`` uses ||v_S||_1 <= 3 ||v_{S^c}||_1.
    Multi-start projected descent per support; the result is an upper
    bound on the true constant that tightens with ``restarts``.

    Only meant for small problems; d <= 8 and s <= 3 are enforced.
    """
    sig = np.asarray(sigma_matrix, dtype=float)
    d = sig.shape[0]
    if sig.shape != (d, d):
        raise ValueError("sigma_matrix must be square")
    if d > 8 or s > 3:
        raise ValueError("oracle scale exceeded: requires d <= 8 and s <= 3")
    if s < 1 or s > d:
        raise ValueError("s must be in [1, d]")
    if convention not in ("standard", "reversed"):
        raise ValueError("convention must be 'standard' or 'reversed'")
    sig = 0.5 * (sig + sig.T)
    rng = np.random.default_rng(seed)
    best = np.inf
    n_steps = 150

    for support in itertools.combinations(range(d), s):
        on = np.zeros(d, dtype=bool)
        on[list(support)] = True

        def project(v):
            # enforce the cone by shrinking the violating block, then land
            # on the unit l1 sphere
            ns = np.abs(v[:, on]).sum(axis=1)
            nc = np.abs(v[:, ~on]).sum(axis=1) if s < d else np.zeros(len(v))
            if convention == "standard":
                if s < d:
                    bad = nc > 3.0 * ns
                    scl = 3.0 * ns / np.where(nc > 0, nc, 1.0)
                    v[:, ~on] = np.where(bad[:, None], v[:, ~on] * scl[:, None],
                                         v[:, ~on])
            else:
                bad = ns > 3.0 * nc
                scl = 3.0 * nc / np.where(ns > 0, ns, 1.0)
                v[:, on] = np.where(bad[:, None], v[:, on] * scl[:, None],
                                    v[:, on])
            l1 = np.abs(v).sum(axis=1)
            l1 = np.where(l1 > 0, l1, 1.0)
            return v / l1[:, None]

        def ratio(v):
            ns = np.abs(v[:, on]).sum(axis=1)
            quad = np.einsum("ij,jk,ik->i", v, sig, v)
            return np.where(ns > 1e-12, s * quad / np.maximum(ns, 1e-12) ** 2, np.inf)

        # structured starts: uniform sign patterns on the support, single axes
        seeds = []
        for signs in itertools.product((-1.0, 1.0), repeat=s):
            u = np.zeros(d)
            u[list(support)] = np.array(signs) / s
            seeds.append(u)
        for i in support:
            u = np.zeros(d)
            u[i] = 1.0
            seeds.append(u)
        n_rand = max(restarts - len(seeds), 0)
        v = np.vstack(seeds + [rng.standard_normal((n_rand, d))])
        v = project(v)
        best = min(best, float(np.min(ratio(v))))

        for it in range(n_steps):
            ns = np.maximum(np.abs(v[:, on]).sum(axis=1), 1e-12)
            quad = np.einsum("ij,jk,ik->i", v, sig, v)
            sign_s = np.sign(v) * on[None, :]
            g = 2.0 * s * (v @ sig - (quad / ns)[:, None] * sign_s) / (ns ** 2)[:, None]
            gn = np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-12)
            v = project(v - (0.15 / np.sqrt(it + 1.0)) * g / gn)
            best = min(best, float(np.min(ratio(v))))
    return best
