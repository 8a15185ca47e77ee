"""Sparse linear bandit environments and explore-then-commit algorithms.

The environment serves rewards <theta*, a_k> + sigma * xi_t where xi_t is
the t-th draw of a generator keyed by (seed, 0); rewards depend only on
(seed, round), never on the order pulls are issued, so every run replays
bit-for-bit.  Arm draws inside algorithms use the separate (seed, 1)
stream.

Three algorithms:

* ``run_etc_popart``   - explore with the design minimizing the worst
  inverse-covariance diagonal, estimate with the two-stage thresholding
  estimator, commit greedily.
* ``run_estc_baseline`` - explore with the min-eigenvalue design,
  estimate with Lasso, commit greedily.
* ``run_restricted_phase_elim`` - recover the support exactly with a long
  design phase (given a known minimum signal m), then run phased
  elimination restricted to the recovered coordinates.

Exploration batches can reach ~5e7 rounds, so reward streams and
traces are built from arm indices and per-arm lookups throughout;
nothing here materializes an n x d matrix except the Lasso baseline,
whose exploration lengths stay small.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .design import ActionSet, CovMatrix, DesignSolution, solve_c_min, solve_h_star
from .estimators import (
    SampleBatch,
    SparseEstimate,
    _warm_popart_indexed,
    lasso_cd,
    lasso_penalty,
)

__all__ = [
    "BanditEnv",
    "RegretTrace",
    "AlgorithmReport",
    "env_pull",
    "pull_many",
    "run_etc_popart",
    "run_estc_baseline",
    "run_restricted_phase_elim",
    "phased_elimination",
    "default_r_max",
]

_NOISE_CHUNK = 1 << 22


@dataclass(frozen=True)
class BanditEnv:
    """Fixed arm set, hidden parameter, noise scale, and replay seed."""

    actions: ActionSet
    theta_star: np.ndarray
    sigma: float
    seed: int

    def __post_init__(self):
        th = np.asarray(self.theta_star, dtype=float).ravel()
        if th.shape[0] != self.actions.d:
            raise ValueError("theta_star length must match the action dimension")
        if not np.all(np.isfinite(th)):
            raise ValueError("theta_star must be finite")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        object.__setattr__(self, "theta_star", th)
        means = self.actions.arms @ th
        object.__setattr__(self, "_means", means)
        object.__setattr__(self, "_gaps", float(means.max()) - means)
        # sequential noise cursor; see _noise_block
        object.__setattr__(self, "_gen", None)
        object.__setattr__(self, "_gen_pos", 0)

    @property
    def means(self) -> np.ndarray:
        """Per-arm expected rewards <theta*, a_k>."""
        return self._means

    @property
    def gaps(self) -> np.ndarray:
        """Per-arm optimality gaps max_k means - means_k."""
        return self._gaps

    def _noise_block(self, start: int, stop: int) -> np.ndarray:
        """Noise draws for rounds [start, stop).

        Draw t is defined as the t-th standard normal of the stream seeded
        by (seed, 0), regardless of access order.  A cursor generator makes
        sequential access O(block); out-of-order access replays the stream
        from the top, which costs time but never changes values.
        """
        if stop <= start:
            return np.empty(0)
        if self._gen is None or self._gen_pos > start:
            object.__setattr__(self, "_gen", np.random.default_rng((self.seed, 0)))
            object.__setattr__(self, "_gen_pos", 0)
        gen, pos = self._gen, self._gen_pos
        while pos < start:  # discard up to the window in bounded chunks
            step = min(_NOISE_CHUNK, start - pos)
            gen.standard_normal(step)
            pos += step
        out = gen.standard_normal(stop - start)
        object.__setattr__(self, "_gen_pos", stop)
        return out


def env_pull(env: BanditEnv, arm_index: int, round: int) -> float:
    """One reward draw: <theta*, a> + sigma * noise(seed, round)."""
    k = env.actions.k
    if not 0 <= arm_index < k:
        raise IndexError(f"arm index {arm_index} out of range for {k} arms")
    if round < 0:
        raise ValueError("round must be nonnegative")
    return float(env._means[arm_index] + env.sigma * env._noise_block(round, round + 1)[0])


def pull_many(env: BanditEnv, arm_indices: np.ndarray, start_round: int) -> np.ndarray:
    """Rewards for pulling arm_indices[j] at round start_round + j."""
    idx = np.asarray(arm_indices)
    if idx.size == 0:
        return np.empty(0)
    if idx.min() < 0 or idx.max() >= env.actions.k:
        raise IndexError("arm index out of range")
    rewards = env._means[idx]
    if env.sigma > 0:
        rewards = rewards + env.sigma * env._noise_block(
            start_round, start_round + idx.shape[0]
        )
    return rewards


@dataclass(frozen=True)
class RegretTrace:
    """Per-round and running-total pseudo-regret of one run."""

    instantaneous: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        if self.instantaneous.shape != self.cumulative.shape:
            raise ValueError("trace components must have equal length")

    @classmethod
    def from_instantaneous(cls, inst: np.ndarray) -> "RegretTrace":
        inst = np.asarray(inst, dtype=float)
        return cls(instantaneous=inst, cumulative=np.cumsum(inst))

    @property
    def n(self) -> int:
        return self.instantaneous.shape[0]

    @property
    def total(self) -> float:
        return float(self.cumulative[-1]) if self.n else 0.0


@dataclass(frozen=True)
class AlgorithmReport:
    """Everything a run produced: trace, estimate, support, pull ledger."""

    regret: RegretTrace
    estimate: SparseEstimate | None
    recovered_support: frozenset | None
    exploration_length: int
    pull_counts: np.ndarray
    notes: tuple = ()


def default_r_max(env: BanditEnv) -> float:
    """Simulation convenience bound max_k ||a_k||_1 * ||theta*||_inf.

    Upper bounds |<a, theta*>| for every arm; loose when mass of a and
    theta* live on disjoint coordinates.
    """
    norms1 = np.abs(env.actions.arms).sum(axis=1)
    return float(norms1.max() * np.abs(env.theta_star).max())


def _clamp(x: float, lo: int, hi: int) -> int:
    return int(min(max(x, lo), hi))


def _design_draws(weights: np.ndarray, k: int, n0: int, seed: int) -> np.ndarray:
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    w = w / w.sum()
    rng = np.random.default_rng((seed, 1))
    return rng.choice(k, size=n0, p=w).astype(np.int32)


def _commit_trace(env: BanditEnv, arm_idx: np.ndarray, best: int,
                  n: int) -> tuple[RegretTrace, np.ndarray]:
    gaps = env.gaps
    n0 = arm_idx.shape[0]
    inst = np.empty(n)
    inst[:n0] = gaps[arm_idx]
    inst[n0:] = gaps[best]
    counts = np.bincount(arm_idx, minlength=env.actions.k).astype(np.int64)
    counts[best] += n - n0
    return RegretTrace.from_instantaneous(inst), counts


def run_etc_popart(env: BanditEnv, n: int, delta: float, r_max: float, s: int,
                   design: DesignSolution | None = None) -> AlgorithmReport:
    """Explore-commit with the max-diagonal design and two-stage estimator.

    Exploration length balances the per-round exploration price r_max
    against the commit price of the estimator's l1 error:
    n0 = 4 (s^2 sigma^2 H*^2 n^2 log(2d/delta) / r_max^2)^(1/3), rounded,
    clamped to [4 ceil(log(2d/delta)), n].  Explores i.i.d. from the
    design, estimates, then plays argmax_a <theta_hat, a> (ties to the
    lowest index) for the rest of the horizon.

    Pass a precomputed ``design`` (from solve_h_star on env.actions) to
    amortize the solve across repetitions; it must match env.actions.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if design is None:
        design = solve_h_star(env.actions)
    d = env.actions.d
    ell = math.log(2.0 * d / delta)
    h_sq = design.objective
    n0_raw = 4.0 * (s * s * env.sigma ** 2 * h_sq * n * n * ell / r_max ** 2) ** (1.0 / 3.0)
    n0 = _clamp(round(n0_raw), 4 * math.ceil(ell), n)
    arm_idx = _design_draws(design.design.weights, env.actions.k, n0, env.seed)
    rewards = pull_many(env, arm_idx, 0)
    est = _warm_popart_indexed(arm_idx, rewards, env.actions.arms, design.cov,
                               r_max, env.sigma, delta)
    best = int(np.argmax(env.actions.arms @ est.theta_hat))
    trace, counts = _commit_trace(env, arm_idx, best, n)
    return AlgorithmReport(regret=trace, estimate=est,
                           recovered_support=est.support,
                           exploration_length=n0, pull_counts=counts)


def run_estc_baseline(env: BanditEnv, n: int, delta: float, r_max: float, s: int,
                      design: DesignSolution | None = None) -> AlgorithmReport:
    """Explore-commit with the min-eigenvalue design and Lasso estimate.

    n0 = (s^2 sigma^2 n^2 log(2d/delta) / (C_min^2 r_max^2))^(1/3),
    rounded, clamped to [1, n]; penalty from the default rule.  A
    faithful-in-spirit baseline: same tuning shape as the original, not a
    bit-exact port.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if design is None:
        design = solve_c_min(env.actions)
    d = env.actions.d
    ell = math.log(2.0 * d / delta)
    c_min = design.objective
    n0_raw = (s * s * env.sigma ** 2 * n * n * ell / (c_min ** 2 * r_max ** 2)) ** (1.0 / 3.0)
    n0 = _clamp(round(n0_raw), 1, n)
    arm_idx = _design_draws(design.design.weights, env.actions.k, n0, env.seed)
    rewards = pull_many(env, arm_idx, 0)
    batch = SampleBatch(env.actions.arms[arm_idx], rewards)
    fit = lasso_cd(batch, lasso_penalty(n0, d, delta, env.sigma))
    theta = fit.theta
    est = SparseEstimate(theta_hat=theta, theta_prime=theta,
                         thresholds=np.zeros(d),
                         support=frozenset(int(i) for i in np.flatnonzero(theta)))
    best = int(np.argmax(env.actions.arms @ theta))
    trace, counts = _commit_trace(env, arm_idx, best, n)
    notes = () if fit.converged else ("lasso did not converge",)
    return AlgorithmReport(regret=trace, estimate=est,
                           recovered_support=est.support,
                           exploration_length=n0, pull_counts=counts,
                           notes=notes)


def run_restricted_phase_elim(env: BanditEnv, n: int, delta: float, r_max: float,
                              s: int, m: float,
                              design: DesignSolution | None = None) -> AlgorithmReport:
    """Support recovery by thresholding, then phased elimination on it.

    With a known minimum signal m, a design phase of length
    n2 = max(256 sigma^2 H*^2 / m^2, 32 s^2 (r_max^2+sigma^2) H*^2 / sigma^2)
         * log(2d/delta)
    makes the thresholded support equal supp(theta*) with probability at
    least 1 - 2 delta; the remaining horizon runs phased elimination on
    the arms restricted to those coordinates.  If every coordinate is
    thresholded away the run commits to the lowest-index greedy arm and
    the report is flagged "empty support".
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if env.sigma <= 0:
        raise ValueError("sigma must be positive for the support recovery phase")
    notes = []
    supp_true = np.flatnonzero(env.theta_star)
    if supp_true.size and np.min(np.abs(env.theta_star[supp_true])) <= m:
        warnings.warn("minimum-signal assumption violated: "
                      "min nonzero |theta*_j| <= m", stacklevel=2)
        notes.append("min-signal assumption violated")
    if design is None:
        design = solve_h_star(env.actions)
    d = env.actions.d
    ell = math.log(2.0 * d / delta)
    h_sq = design.objective
    n2_raw = max(256.0 * env.sigma ** 2 * h_sq / m ** 2,
                 32.0 * s * s * (r_max ** 2 + env.sigma ** 2) * h_sq / env.sigma ** 2) * ell
    n2 = max(int(round(n2_raw)), math.ceil(4.0 * ell))
    if n <= n2:
        raise ValueError("horizon too short for support recovery phase")
    arm_idx = _design_draws(design.design.weights, env.actions.k, n2, env.seed)
    rewards = pull_many(env, arm_idx, 0)
    est = _warm_popart_indexed(arm_idx, rewards, env.actions.arms, design.cov,
                               r_max, env.sigma, delta)
    del rewards
    support = sorted(est.support)
    gaps = env.gaps
    counts = np.bincount(arm_idx, minlength=env.actions.k).astype(np.int64)
    if not support:
        notes.append("empty support")
        best = int(np.argmax(env.actions.arms @ est.theta_hat))
        trace, counts = _commit_trace(env, arm_idx, best, n)
        return AlgorithmReport(regret=trace, estimate=est,
                               recovered_support=frozenset(),
                               exploration_length=n2, pull_counts=counts,
                               notes=tuple(notes))
    restricted = ActionSet(env.actions.arms[:, support])
    pe_trace, pe_counts = _phased_elimination_core(restricted, env, n - n2,
                                                   delta, start_round=n2)
    inst = np.empty(n)
    inst[:n2] = gaps[arm_idx]
    inst[n2:] = pe_trace.instantaneous
    counts += pe_counts
    return AlgorithmReport(regret=RegretTrace.from_instantaneous(inst),
                           estimate=est,
                           recovered_support=frozenset(support),
                           exploration_length=n2, pull_counts=counts,
                           notes=tuple(notes))


def phased_elimination(actions_restricted: ActionSet, env: BanditEnv,
                       horizon: int, delta: float,
                       start_round: int = 0) -> RegretTrace:
    """Phase-by-phase elimination on a (possibly restricted) feature view.

    actions_restricted must carry one row per env arm (row k is arm k's
    feature vector in the restricted coordinate view); rewards come from
    the unrestricted env.  Each phase ell targets accuracy 2^-ell via a
    G-optimal design, pulls each design arm proportionally, least-squares
    estimates, and drops arms whose estimated gap exceeds twice the
    target.
    """
    trace, _ = _phased_elimination_core(actions_restricted, env, horizon,
                                        delta, start_round)
    return trace


def _g_optimal_fw(arms: np.ndarray, max_iter: int = 1000,
                  slack: float = 1e-3) -> np.ndarray:
    """G-optimal design weights by Frank-Wolfe on the log-det objective.

    Stops once the largest leverage a' Q^{-1} a is within (1+slack) of the
    dimension (the optimum when the arms span), or when the step size
    formula gives no ascent, or after max_iter rounds.  A tiny ridge keeps
    iterates invertible when the arms do not span.
    """
    k, dim = arms.shape
    if k == 1:
        return np.ones(1)
    w = np.full(k, 1.0 / k)
    for _ in range(max_iter):
        q = (arms.T * w) @ arms
        q += np.eye(dim) * (1e-10 * np.trace(q) / dim + 1e-300)
        qi = np.linalg.inv(q)
        lev = np.einsum("kd,dc,kc->k", arms, qi, arms)
        g = float(lev.max())
        if g <= (1.0 + slack) * dim:
            break
        gamma = (g / dim - 1.0) / (g - 1.0)
        if gamma <= 0.0:
            break
        w *= 1.0 - gamma
        w[int(np.argmax(lev))] += gamma
    w[w < 1e-10] = 0.0
    return w / w.sum()


def _phased_elimination_core(actions_restricted: ActionSet, env: BanditEnv,
                             horizon: int, delta: float,
                             start_round: int) -> tuple[RegretTrace, np.ndarray]:
    k = env.actions.k
    if actions_restricted.k != k:
        raise ValueError("restricted action set must have one row per env arm")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    gaps = env.gaps
    counts_total = np.zeros(k, dtype=np.int64)
    if horizon == 0:
        return RegretTrace.from_instantaneous(np.empty(0)), counts_total
    arms_r = actions_restricted.arms
    live_cols = np.flatnonzero(np.any(arms_r != 0.0, axis=0))
    arms_r = arms_r[:, live_cols]
    if arms_r.shape[1] == 0:
        # every arm looks identical (zero) in this view: no information to
        # gather, pull the lowest index throughout
        inst = np.full(horizon, gaps[0])
        counts_total[0] = horizon
        return RegretTrace.from_instantaneous(inst), counts_total
    dim = arms_r.shape[1]
    active = np.arange(k)
    pieces = []
    used = 0
    ell = 1
    while used < horizon:
        if active.shape[0] == 1:
            arm = int(active[0])
            block = horizon - used
            pieces.append(np.full(block, gaps[arm]))
            counts_total[arm] += block
            used = horizon
            break
        eps = 2.0 ** (-ell)
        w = _g_optimal_fw(arms_r[active])
        mult = (2.0 * dim / eps ** 2) * math.log(k * ell * (ell + 1) / delta)
        per_arm = np.ceil(w * mult).astype(np.int64)
        per_arm[w <= 0.0] = 0
        remaining = horizon - used
        total = int(per_arm.sum())
        if total > remaining:  # truncate the schedule at the horizon
            cum = np.cumsum(per_arm)
            cut = int(np.searchsorted(cum, remaining, side="left"))
            per_arm[cut + 1:] = 0
            per_arm[cut] -= int(cum[cut]) - remaining
            total = remaining
        schedule = np.repeat(active, per_arm).astype(np.int32)
        rewards = pull_many(env, schedule, start_round + used)
        pieces.append(gaps[schedule])
        used += total
        # least squares on the restricted features actually pulled
        sched_counts = np.bincount(schedule, minlength=k)
        counts_total += sched_counts
        sched_counts = sched_counts[active]
        reward_sums = np.bincount(schedule, weights=rewards, minlength=k)[active]
        v = (arms_r[active].T * sched_counts) @ arms_r[active]
        v += np.eye(dim) * (1e-10 * np.trace(v) / dim + 1e-300)
        b = arms_r[active].T @ reward_sums
        theta_r = np.linalg.solve(v, b)
        est_means = arms_r[active] @ theta_r
        keep = est_means >= est_means.max() - 2.0 * eps
        if np.any(keep):
            active = active[keep]
        ell += 1
    inst = np.concatenate(pieces) if pieces else np.empty(0)
    return RegretTrace.from_instantaneous(inst), counts_total
