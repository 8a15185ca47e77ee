"""Benchmark instances: action sets and hidden parameter vectors.

Two families of arm sets drive the experiments.  The hard instance
(``hard_instance_actions``) is a d-arm set engineered so that the
max-inverse-diagonal design criterion and the min-eigenvalue design
criterion disagree by a Theta(d) factor: one short arm along e_1 plus
d-1 arms that pack e_1 with a small e_i bump, which forces any design to
pay a (sqrt(d) + sqrt(d-1))^2 price on the off coordinates.  Its optimal
criterion values have closed forms, used as solver ground truth.  The
second family is K random unit vectors, where the two criteria roughly
agree.

Hidden vectors are 2-sparse sign patterns drawn by label via
``theta_generator``; ``make_instance`` bundles arms, vector, and noise
scale for the bench harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .design import ActionSet, Design

__all__ = [
    "InstanceSpec",
    "hard_instance_actions",
    "hard_instance_h_sq",
    "hard_instance_h_design",
    "hard_instance_inv_lambda_bound",
    "hard_instance_c_min_bracket",
    "canonical_basis_actions",
    "unit_sphere_actions",
    "theta_generator",
    "make_instance",
]


@dataclass(frozen=True)
class InstanceSpec:
    """A named problem: arms, hidden vector, noise scale, sparsity."""

    name: str
    actions: ActionSet
    theta_star: np.ndarray
    sigma: float
    s: int

    def __post_init__(self):
        th = np.asarray(self.theta_star, dtype=float).ravel()
        if th.shape[0] != self.actions.d:
            raise ValueError("theta_star length must match the action dimension")
        nnz = int(np.count_nonzero(th))
        if nnz != self.s:
            raise ValueError(f"theta_star has {nnz} nonzeros, declared s = {self.s}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        object.__setattr__(self, "theta_star", th)


def hard_instance_actions(d: int) -> ActionSet:
    """The d-arm set {e_1/sqrt(d)} + {e_1 + e_i/sqrt(d) : i = 2..d}.

    Coordinate 1 is observable only through the short first arm or the
    shared e_1 component of the others, while coordinates 2..d ride on
    1/sqrt(d) bumps; estimating any bump coordinate in isolation costs a
    factor d(sqrt(d)+sqrt(d-1))^2 in inverse-covariance diagonal no
    matter how the design spreads its mass.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    arms = np.zeros((d, d))
    arms[0, 0] = 1.0 / np.sqrt(d)
    for i in range(1, d):
        arms[i, 0] = 1.0
        arms[i, i] = 1.0 / np.sqrt(d)
    return ActionSet(arms)


def hard_instance_h_sq(d: int) -> float:
    """Optimal max-diagonal value d (sqrt(d) + sqrt(d-1))^2 for the hard set."""
    if d < 2:
        raise ValueError("need d >= 2")
    return d * (np.sqrt(d) + np.sqrt(d - 1.0)) ** 2


def hard_instance_h_design(d: int) -> Design:
    """The optimal design for the max-diagonal criterion on the hard set.

    Mass a = d - sqrt(d(d-1)) on the short arm and
    b = 1/(sqrt(d-1)(sqrt(d)+sqrt(d-1))) on each bump arm; a + (d-1)b = 1
    and the resulting inverse covariance has every bump diagonal equal to
    hard_instance_h_sq(d).
    """
    if d < 2:
        raise ValueError("need d >= 2")
    a = d - np.sqrt(d * (d - 1.0))
    b = 1.0 / (np.sqrt(d - 1.0) * (np.sqrt(d) + np.sqrt(d - 1.0)))
    w = np.full(d, b)
    w[0] = a
    return Design(w)


def hard_instance_inv_lambda_bound(d: int, b: float) -> float:
    """f(b) = d (1 + (d^2-2d+2) b) / (2 b (1 - (d-1) b)).

    For the symmetric design putting b on every bump arm, f brackets the
    inverse minimum eigenvalue: f(b) <= 1/lambda_min <= 2 f(b).  Valid
    for 0 < b < 1/(d-1).
    """
    if not 0.0 < b < 1.0 / (d - 1.0):
        raise ValueError("b must lie in (0, 1/(d-1))")
    return d * (1.0 + (d * d - 2.0 * d + 2.0) * b) / (2.0 * b * (1.0 - (d - 1.0) * b))


def hard_instance_c_min_bracket(d: int) -> tuple[float, float]:
    """(min_b f(b), 2 min_b f(b)): certified range for 1/C_min on the hard set.

    The minimizer solves (d^2-2d+2)(d-1) b^2 + 2(d-1) b - 1 = 0; the
    bracket endpoints are found here by direct one-dimensional
    minimization of f over its domain.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    hi = 1.0 / (d - 1.0)
    res = minimize_scalar(
        lambda b: hard_instance_inv_lambda_bound(d, b),
        bounds=(1e-9 * hi, (1.0 - 1e-9) * hi),
        method="bounded",
        options={"xatol": 1e-14},
    )
    f_min = float(res.fun)
    return f_min, 2.0 * f_min


def canonical_basis_actions(d: int) -> ActionSet:
    """The d standard basis vectors; both design criteria are exact here."""
    if d < 1:
        raise ValueError("need d >= 1")
    return ActionSet(np.eye(d))


def unit_sphere_actions(d: int, K: int, seed: int) -> ActionSet:
    """K i.i.d. uniform unit vectors (normalized Gaussians), seeded.

    Requires K >= d; on the measure-zero event that the rows fail to
    span, redraws with seed+1 (and so on) until they do.
    """
    if d < 1:
        raise ValueError("need d >= 1")
    if K < d:
        raise ValueError("need K >= d arms to span the space")
    attempt = seed
    while True:
        g = np.random.default_rng(attempt).standard_normal((K, d))
        norms = np.linalg.norm(g, axis=1)
        if np.all(norms > 0) and np.linalg.matrix_rank(g) == d:
            return ActionSet(g / norms[:, None])
        attempt += 1


def _norm_label(label: str) -> str:
    return label.lower().replace("-", "").replace("_", "")


def theta_generator(case: str, d: int, seed: int) -> np.ndarray:
    """Seeded 2-sparse hidden vector for the named experiment case.

    case1-l1     -> -e_1 + e_i, i uniform on {2..d}
    case1-bandit ->  e_1 + e_i, i uniform on {2..d}
    case2        ->  e_i + e_j, i != j uniform on {1..d}
    (case2-l1 and case2-bandit are aliases for case2; separators and
    capitalization in the label are ignored)
    """
    if d < 2:
        raise ValueError("need d >= 2")
    rng = np.random.default_rng(seed)
    key = _norm_label(case)
    theta = np.zeros(d)
    if key == "case1l1":
        theta[0] = -1.0
        theta[int(rng.integers(1, d))] = 1.0
    elif key == "case1bandit":
        theta[0] = 1.0
        theta[int(rng.integers(1, d))] = 1.0
    elif key in ("case2", "case2l1", "case2bandit"):
        i = int(rng.integers(0, d))
        j = i
        while j == i:
            j = int(rng.integers(0, d))
        theta[i] = 1.0
        theta[j] = 1.0
    else:
        raise ValueError(f"unknown case label: {case!r}")
    return theta


def make_instance(case: str, d: int, K: int | None, sigma: float,
                  seed: int) -> InstanceSpec:
    """Arms + hidden vector for a named case, fully determined by seed.

    Case-1 labels use the hard instance (K is ignored); case-2 labels use
    K uniform unit vectors (K defaults to 3d).
    """
    key = _norm_label(case)
    if key in ("case1l1", "case1bandit"):
        actions = hard_instance_actions(d)
    elif key in ("case2", "case2l1", "case2bandit"):
        actions = unit_sphere_actions(d, 3 * d if K is None else K, seed)
    else:
        raise ValueError(f"unknown case label: {case!r}")
    theta = theta_generator(case, d, seed)
    return InstanceSpec(name=key, actions=actions, theta_star=theta,
                        sigma=sigma, s=2)
