"""Robust mean estimation on heavy-tailed samples.

Student-t with 2.5 degrees of freedom has a finite variance but wild
outliers; the truncated-influence estimator keeps its deviation bound
while the sample mean occasionally blows up.  Run:

    python3 demos/robust_mean.py
"""

import math

import numpy as np

from popart.estimators import CatoniParams, catoni_alpha, catoni_estimate

N = 2000
DELTA = 0.05
TRIALS = 500
DF = 2.5

var = DF / (DF - 2.0)  # t_df variance for df > 2
params = CatoniParams(alpha=catoni_alpha(N, var, DELTA), delta=DELTA)
ell = math.log(1.0 / DELTA)
bound = math.sqrt(2.0 * var * ell / (N - ell))

rng = np.random.default_rng(0)
err_mean = np.empty(TRIALS)
err_catoni = np.empty(TRIALS)
for t in range(TRIALS):
    z = rng.standard_t(DF, size=N)
    err_mean[t] = abs(z.mean())
    err_catoni[t] = abs(catoni_estimate(z, params))

print(f"n = {N}, {TRIALS} trials, t({DF}) noise, variance {var:.3f}")
print(f"deviation bound at delta = {DELTA}: {bound:.4f}")
print(f"{'':14s}{'rms':>10s}{'worst':>10s}{'> bound':>10s}")
for name, err in (("sample mean", err_mean), ("catoni", err_catoni)):
    rms = float(np.sqrt(np.mean(err ** 2)))
    print(f"{name:14s}{rms:10.4f}{err.max():10.4f}"
          f"{int((err > bound).sum()):10d}")
print(f"allowed violations ~ {2 * DELTA:.0%} of trials "
      f"({int(2 * DELTA * TRIALS)})")
