"""Sparse recovery on the two-block arm set that separates the designs.

The arm set has one strong direction and d-1 weak ones; the
max-inverse-diagonal design samples it so that per-coordinate
thresholding finds the two true nonzeros, while Lasso on the
min-eigenvalue design pays the tiny eigenvalue.  Run:

    python3 demos/sparse_estimation.py
"""

import numpy as np

from popart.design import solve_c_min, solve_h_star
from popart.estimators import (
    SampleBatch,
    lasso_cd,
    lasso_penalty,
    warm_popart,
)
from popart.instances import make_instance

D, N, SIGMA, DELTA = 10, 10_000, 0.1, 0.05
SEEDS = range(5)

inst = make_instance("case-1-l1", D, None, SIGMA, seed=0)
acts = inst.actions
h_sol = solve_h_star(acts)
c_sol = solve_c_min(acts)
print(f"hard instance d = {D}: H*^2 = {h_sol.objective:.2f}, "
      f"C_min = {c_sol.objective:.2e}")
r_max = float(np.abs(acts.arms).sum(axis=1).max()
              * np.abs(inst.theta_star).max())

print(f"\n{'seed':>4s} {'algorithm':>12s} {'l1 error':>10s} {'support':>12s}")
for seed in SEEDS:
    inst = make_instance("case-1-l1", D, None, SIGMA, seed)
    means = acts.arms @ inst.theta_star
    truth = sorted(int(i) for i in np.flatnonzero(inst.theta_star))

    # two-stage thresholding on its own design
    draws = np.random.default_rng((seed, 1, N)).choice(
        acts.k, size=N, p=h_sol.design.weights)
    noise = np.random.default_rng((seed, 0, N)).standard_normal(N)
    batch = SampleBatch(acts.arms[draws], means[draws] + SIGMA * noise)
    est = warm_popart(batch, h_sol.cov, r_max, SIGMA, DELTA)
    err = np.abs(est.theta_hat - inst.theta_star).sum()
    print(f"{seed:4d} {'popart':>12s} {err:10.4f} {sorted(est.support)!s:>12s}"
          f"   true {truth}")

    # Lasso on the min-eigenvalue design
    draws = np.random.default_rng((seed, 2, N)).choice(
        acts.k, size=N, p=c_sol.design.weights)
    noise = np.random.default_rng((seed, 3, N)).standard_normal(N)
    batch = SampleBatch(acts.arms[draws], means[draws] + SIGMA * noise)
    fit = lasso_cd(batch, lasso_penalty(N, D, DELTA, SIGMA))
    err = np.abs(fit.theta - inst.theta_star).sum()
    supp = sorted(int(i) for i in np.flatnonzero(fit.theta))
    print(f"{seed:4d} {'c_min-lasso':>12s} {err:10.4f} {supp!s:>12s}")
