"""Sparse linear estimation from designed covariates, and the bandits on top.

The package has four layers:

* ``estimators`` - Catoni robust means, the one-sample thresholding
  estimator and its two-stage variant, and a Lasso baseline.
* ``design`` - population covariance construction and the two design
  criteria over the arm simplex (max inverse-covariance diagonal,
  minimum eigenvalue), plus a small-instance compatibility oracle.
* ``bandits`` - reproducible reward environments, explore-then-commit
  on either design, and support-recovery + phased elimination.
* ``instances`` / ``bench`` / ``cli`` - benchmark instances, the
  experiment harness, and the ``bench`` command.
"""

from .bandits import (
    AlgorithmReport,
    BanditEnv,
    RegretTrace,
    default_r_max,
    env_pull,
    phased_elimination,
    pull_many,
    run_estc_baseline,
    run_etc_popart,
    run_restricted_phase_elim,
)
from .bench import (
    ConfigError,
    ExperimentConfig,
    load_matrix,
    parse_config,
    run_experiment,
    save_matrix,
)
from .design import (
    ActionSet,
    CovMatrix,
    Design,
    DesignSolution,
    compatibility_constant,
    h_squared,
    population_covariance,
    solve_c_min,
    solve_h_star,
)
from .estimators import (
    CatoniParams,
    LassoFit,
    PopArtConfig,
    SampleBatch,
    SparseEstimate,
    catoni_alpha,
    catoni_estimate,
    lasso_cd,
    lasso_penalty,
    one_sample_estimates,
    popart,
    psi,
    warm_popart,
)
from .instances import (
    InstanceSpec,
    canonical_basis_actions,
    hard_instance_actions,
    hard_instance_c_min_bracket,
    hard_instance_h_design,
    hard_instance_h_sq,
    hard_instance_inv_lambda_bound,
    make_instance,
    theta_generator,
    unit_sphere_actions,
)

__version__ = "0.1.0"

__all__ = [
    "ActionSet",
    "AlgorithmReport",
    "BanditEnv",
    "CatoniParams",
    "ConfigError",
    "CovMatrix",
    "Design",
    "DesignSolution",
    "ExperimentConfig",
    "InstanceSpec",
    "LassoFit",
    "PopArtConfig",
    "RegretTrace",
    "SampleBatch",
    "SparseEstimate",
    "canonical_basis_actions",
    "catoni_alpha",
    "catoni_estimate",
    "compatibility_constant",
    "default_r_max",
    "env_pull",
    "h_squared",
    "hard_instance_actions",
    "hard_instance_c_min_bracket",
    "hard_instance_h_design",
    "hard_instance_h_sq",
    "hard_instance_inv_lambda_bound",
    "lasso_cd",
    "lasso_penalty",
    "load_matrix",
    "make_instance",
    "one_sample_estimates",
    "parse_config",
    "phased_elimination",
    "popart",
    "population_covariance",
    "psi",
    "pull_many",
    "run_estc_baseline",
    "run_etc_popart",
    "run_experiment",
    "run_restricted_phase_elim",
    "save_matrix",
    "solve_c_min",
    "solve_h_star",
    "theta_generator",
    "unit_sphere_actions",
    "warm_popart",
]
