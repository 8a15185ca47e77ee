"""Benchmark harness: presets, seeded repetitions, CSV and SVG outputs.

Six presets cover the desk-scale experiments:

* ``case1-l1`` / ``case2-l1``  - l1 estimation error sweeps over
  n = 1000..10000: the two-stage thresholding estimator on its own
  design versus Lasso on the min-eigenvalue design (``c_min-lasso``)
  and Lasso fed the exact same draws as popart (``h2-lasso``).
* ``case1-bandit`` / ``case2-bandit`` - cumulative regret of the
  explore-then-commit algorithms plus the support-recovery algorithm.
* ``design-diagnostics`` - solver optima on the hard instance against
  their closed forms.
* ``custom`` - the l1 sweep on the hard instance with user parameters.

Repetition k always uses seed base_seed + k.  Raw rows are byte-stable
across re-runs with the same config; wall-clock timings therefore go to
a separate timings.csv with the same schema rather than into raw.csv.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bandits import (
    BanditEnv,
    run_estc_baseline,
    run_etc_popart,
    run_restricted_phase_elim,
)
from .design import ActionSet, DesignSolution, solve_c_min, solve_h_star
from .estimators import SampleBatch, _warm_popart_indexed, lasso_cd, lasso_penalty
from .instances import (
    hard_instance_actions,
    hard_instance_c_min_bracket,
    hard_instance_h_sq,
    hard_instance_inv_lambda_bound,
    make_instance,
)
from .svgplot import line_chart

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "run_experiment",
    "save_matrix",
    "load_matrix",
    "PRESETS",
]


class ConfigError(Exception):
    """Bad preset name, unknown key, malformed line, or out-of-range value."""


_L1_GRID = tuple(range(1000, 10001, 1000))

PRESETS = ("case1-l1", "case1-bandit", "case2-l1", "case2-bandit",
           "design-diagnostics", "custom")

_L1_PRESETS = ("case1-l1", "case2-l1", "custom")
_BANDIT_PRESETS = ("case1-bandit", "case2-bandit")

_CASE_LABEL = {
    "case1-l1": "case1l1",
    "case1-bandit": "case1bandit",
    "case2-l1": "case2l1",
    "case2-bandit": "case2bandit",
    "custom": "case1l1",
}


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str
    d: int
    s: int
    K: int | None
    sigma: float
    delta: float
    n_values: tuple
    reps: int
    base_seed: int
    r_max: float | None
    m: float
    scale: int
    output_dir: str


_KEY_TYPES = {
    "preset": str,
    "d": int,
    "s": int,
    "sigma": float,
    "delta": float,
    "n": int,
    "reps": int,
    "seed": int,
    "r_max": float,
    "m": float,
    "scale": int,
    "out": str,
}


def _read_config_file(path: str) -> dict:
    vals = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}: malformed line {lineno}: "
                                  f"expected `key = value`, got {stripped!r}")
            key, _, value = stripped.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{path}: malformed line {lineno}: "
                                  f"expected `key = value`, got {stripped!r}")
            vals[key] = value
    return vals


def _coerce(key: str, value):
    if key not in _KEY_TYPES:
        raise ConfigError(f"unknown config key: {key}")
    typ = _KEY_TYPES[key]
    if isinstance(value, str) and typ is not str:
        try:
            value = typ(value)
        except ValueError as exc:
            raise ConfigError(f"config key {key}: cannot parse {value!r} "
                              f"as {typ.__name__}") from exc
    elif typ is int and isinstance(value, float) and value != int(value):
        raise ConfigError(f"config key {key}: expected integer, got {value!r}")
    return typ(value)


def parse_config(path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Resolve a config file plus CLI overrides into an ExperimentConfig.

    File format is line-oriented ``key = value`` (# comments and blank
    lines allowed); ``overrides`` (from CLI flags) win over file values;
    preset defaults fill the rest.
    """
    merged: dict = {}
    if path is not None:
        merged.update(_read_config_file(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key.replace("-", "_")] = value
    merged = {k: _coerce(k, v) for k, v in merged.items()}

    preset = merged.pop("preset", "custom")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset: {preset!r} (choices: {', '.join(PRESETS)})")

    d = merged.pop("d", 30 if preset.startswith("case2") else 10)
    s = merged.pop("s", 2)
    sigma = merged.pop("sigma", 0.1)
    delta = merged.pop("delta", 0.05)
    reps = merged.pop("reps", 1 if preset == "design-diagnostics" else 30)
    base_seed = merged.pop("seed", 0)
    r_max = merged.pop("r_max", None)
    m = merged.pop("m", 1.0)
    scale = merged.pop("scale", 1)
    out = merged.pop("out", f"bench-{preset}")
    n = merged.pop("n", None)

    if merged:
        raise ConfigError(f"unknown config key: {sorted(merged)[0]}")
    if d < 2:
        raise ConfigError("d must be at least 2")
    if s < 1 or s > d:
        raise ConfigError("s must be in [1, d]")
    if sigma < 0:
        raise ConfigError("sigma must be nonnegative")
    if not 0.0 < delta < 1.0:
        raise ConfigError("delta must be in (0, 1)")
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    if scale < 1:
        raise ConfigError("scale must be a positive integer")
    if r_max is not None and r_max <= 0:
        raise ConfigError("r_max must be positive")
    if m <= 0:
        raise ConfigError("m must be positive")
    if n is not None and n < 1:
        raise ConfigError("n must be at least 1")

    if preset in _BANDIT_PRESETS:
        horizon = n if n is not None else (400000 if preset == "case1-bandit" else 10000)
        n_values = (max(horizon // scale, 1),)
    elif preset in _L1_PRESETS:
        n_values = (n,) if n is not None else _L1_GRID
    else:  # design-diagnostics
        n_values = (0,)

    k = 3 * d if preset.startswith("case2") else None
    return ExperimentConfig(preset=preset, d=d, s=s, K=k, sigma=sigma,
                            delta=delta, n_values=n_values, reps=reps,
                            base_seed=base_seed, r_max=r_max, m=m,
                            scale=scale, output_dir=out)


# ---------------------------------------------------------------------------
# matrix/vector text interchange
# ---------------------------------------------------------------------------


def save_matrix(path: str, a: np.ndarray) -> None:
    """Whitespace-separated text with a one-line `rows cols` header.

    Vectors are stored as a single column.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("only matrices and vectors are supported")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_matrix(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected `rows cols` header")
        rows, cols = int(header[0]), int(header[1])
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, "
                         f"data is {data.shape[0]}x{data.shape[1]}")
    return data


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------


def _design_pair(actions: ActionSet, cache: dict) -> tuple[DesignSolution, DesignSolution]:
    key = (actions.arms.shape, actions.arms.tobytes())
    if key not in cache:
        cache[key] = (solve_h_star(actions), solve_c_min(actions))
    return cache[key]


def _derive_r_max(config: ExperimentConfig, actions, theta) -> float:
    if config.r_max is not None:
        return config.r_max
    norms1 = np.abs(actions.arms).sum(axis=1)
    return float(norms1.max() * np.abs(theta).max())


def _support_of(theta: np.ndarray) -> frozenset:
    return frozenset(int(i) for i in np.flatnonzero(theta))


def _run_l1_rep(config: ExperimentConfig, rep: int, cache: dict):
    seed = config.base_seed + rep
    label = _CASE_LABEL[config.preset]
    inst = make_instance(label, config.d, config.K, config.sigma, seed)
    h_sol, c_sol = _design_pair(inst.actions, cache)
    arms = inst.actions.arms
    k = inst.actions.k
    means = arms @ inst.theta_star
    r_max = _derive_r_max(config, inst.actions, inst.theta_star)
    theta = inst.theta_star
    sigma, delta, d = config.sigma, config.delta, config.d
    rows, timings = [], []
    for n in config.n_values:
        draws = np.random.default_rng((seed, 1, n)).choice(
            k, size=n, p=h_sol.design.weights).astype(np.int32)
        noise = np.random.default_rng((seed, 0, n)).standard_normal(n)
        rewards = means[draws] + sigma * noise

        t0 = time.perf_counter()
        est = _warm_popart_indexed(draws, rewards, arms, h_sol.cov,
                                   r_max, sigma, delta)
        t_pop = (time.perf_counter() - t0) * 1e3
        rows.append((config.preset, "popart", seed, n, "l1_error",
                     float(np.abs(est.theta_hat - theta).sum())))
        timings.append((config.preset, "popart", seed, n, "runtime_ms", t_pop))

        t0 = time.perf_counter()
        fit_h = lasso_cd(SampleBatch(arms[draws], rewards),
                         lasso_penalty(n, d, delta, sigma))
        t_h = (time.perf_counter() - t0) * 1e3
        rows.append((config.preset, "h2-lasso", seed, n, "l1_error",
                     float(np.abs(fit_h.theta - theta).sum())))
        timings.append((config.preset, "h2-lasso", seed, n, "runtime_ms", t_h))

        draws_c = np.random.default_rng((seed, 2, n)).choice(
            k, size=n, p=c_sol.design.weights).astype(np.int32)
        noise_c = np.random.default_rng((seed, 3, n)).standard_normal(n)
        rewards_c = means[draws_c] + sigma * noise_c
        t0 = time.perf_counter()
        fit_c = lasso_cd(SampleBatch(arms[draws_c], rewards_c),
                         lasso_penalty(n, d, delta, sigma))
        t_c = (time.perf_counter() - t0) * 1e3
        rows.append((config.preset, "c_min-lasso", seed, n, "l1_error",
                     float(np.abs(fit_c.theta - theta).sum())))
        timings.append((config.preset, "c_min-lasso", seed, n, "runtime_ms", t_c))
    return rows, timings, None


_BANDIT_ALGOS = ("etc-popart", "estc", "restricted-phase-elim")


def _run_bandit_rep(config: ExperimentConfig, rep: int, cache: dict):
    seed = config.base_seed + rep
    label = _CASE_LABEL[config.preset]
    inst = make_instance(label, config.d, config.K, config.sigma, seed)
    h_sol, c_sol = _design_pair(inst.actions, cache)
    env = BanditEnv(inst.actions, inst.theta_star, config.sigma, seed)
    true_supp = _support_of(inst.theta_star)
    r_max = _derive_r_max(config, inst.actions, inst.theta_star)
    n = config.n_values[0]
    mid = n // 2
    sample_pts = np.unique(np.linspace(1, n, min(200, n)).astype(np.int64))
    rows, timings = [], []
    curves = {}

    def one(alg_name, fn, with_support):
        t0 = time.perf_counter()
        try:
            report = fn()
        except Exception:
            report = None
        dt = (time.perf_counter() - t0) * 1e3
        if report is None:
            if mid >= 1:
                rows.append((config.preset, alg_name, seed, mid, "cum_regret",
                             float("nan")))
            rows.append((config.preset, alg_name, seed, n, "cum_regret",
                         float("nan")))
            if with_support:
                rows.append((config.preset, alg_name, seed, n,
                             "support_recovered", float("nan")))
        else:
            cum = report.regret.cumulative
            if mid >= 1:
                rows.append((config.preset, alg_name, seed, mid, "cum_regret",
                             float(cum[mid - 1])))
            rows.append((config.preset, alg_name, seed, n, "cum_regret",
                         float(cum[-1])))
            if with_support:
                rows.append((config.preset, alg_name, seed, n, "support_recovered",
                             float(report.recovered_support == true_supp)))
            curves[alg_name] = cum[sample_pts - 1].copy()
        timings.append((config.preset, alg_name, seed, n, "runtime_ms", dt))

    one("etc-popart",
        lambda: run_etc_popart(env, n, config.delta, r_max, config.s, design=h_sol),
        with_support=True)
    one("estc",
        lambda: run_estc_baseline(env, n, config.delta, r_max, config.s, design=c_sol),
        with_support=False)
    one("restricted-phase-elim",
        lambda: run_restricted_phase_elim(env, n, config.delta, r_max, config.s,
                                          config.m, design=h_sol),
        with_support=True)
    return rows, timings, (sample_pts, curves)


def _run_diagnostics(config: ExperimentConfig, out: Path):
    d = config.d
    actions = hard_instance_actions(d)
    rows, timings = [], []
    t0 = time.perf_counter()
    h_sol = solve_h_star(actions)
    t_h = (time.perf_counter() - t0) * 1e3
    t0 = time.perf_counter()
    c_sol = solve_c_min(actions)
    t_c = (time.perf_counter() - t0) * 1e3
    closed = hard_instance_h_sq(d)
    lo, hi = hard_instance_c_min_bracket(d)
    inv_c = 1.0 / c_sol.objective
    rel = abs(h_sol.objective - closed) / closed
    in_bracket = lo <= inv_c <= hi
    print(f"H^2 criterion: solver {h_sol.objective:.6f}, "
          f"closed form {closed:.6f}, relative error {rel:.2e}")
    print(f"C_min criterion: solver {c_sol.objective:.8f}, "
          f"1/C_min {inv_c:.4f}")
    print(f"1/lambda_min bracket [{lo:.4f}, {hi:.4f}]: "
          f"{'contains' if in_bracket else 'MISSES'} the solver value")
    rows.append((config.preset, "design", config.base_seed, 0, "h_star_sq",
                 float(h_sol.objective)))
    rows.append((config.preset, "design", config.base_seed, 0, "c_min",
                 float(c_sol.objective)))
    timings.append((config.preset, "design", config.base_seed, 0, "runtime_ms",
                    t_h + t_c))
    save_matrix(str(out / "h_design_weights.txt"), h_sol.design.weights)
    save_matrix(str(out / "h_design_cov.txt"), h_sol.cov.q)
    save_matrix(str(out / "c_design_weights.txt"), c_sol.design.weights)
    b_hi = 1.0 / (d - 1)
    b_grid = np.linspace(0.01 * b_hi, 0.95 * b_hi, 200)
    f_vals = np.array([hard_instance_inv_lambda_bound(d, b) for b in b_grid])
    chart = out / f"{config.preset}_f_bound.svg"
    line_chart(str(chart), b_grid,
               [("f(b)", f_vals, None),
                ("1/C_min (solver)", np.full_like(b_grid, inv_c), None)],
               title=f"inverse min-eigenvalue bound, hard instance d={d}",
               xlabel="b (weight per bump arm)", ylabel="bound", log_y=True)
    return rows, timings, [chart]


def _write_rows(path: Path, rows, header: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            preset, alg, seed, n, metric, value = row
            fh.write(f"{preset},{alg},{seed},{n},{metric},{value!r}\n")


def _summarize(rows):
    order = []
    groups = {}
    for preset, alg, _seed, n, metric, value in rows:
        key = (preset, alg, n, metric)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(value)
    summary = []
    for key in order:
        vals = np.array(groups[key], dtype=float)
        kept = vals[np.isfinite(vals)]
        if kept.size == 0:
            mean, std = float("nan"), float("nan")
        else:
            mean = float(kept.mean())
            std = float(kept.std(ddof=1)) if kept.size > 1 else 0.0
        summary.append(key + (mean, std, int(kept.size)))
    return summary


def _write_summary(path: Path, summary) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("preset,algorithm,n,metric,mean,std,count\n")
        for preset, alg, n, metric, mean, std, count in summary:
            fh.write(f"{preset},{alg},{n},{metric},{mean!r},{std!r},{count}\n")


def _l1_charts(config: ExperimentConfig, summary, out: Path):
    charts = []
    grid = np.array(config.n_values, dtype=float)
    by_metric = {}
    for preset, alg, n, metric, mean, std, _cnt in summary:
        by_metric.setdefault(metric, {}).setdefault(alg, {})[n] = (mean, std)
    for metric, algs in by_metric.items():
        series = []
        for alg, pts in algs.items():
            mean = np.array([pts.get(n, (np.nan, np.nan))[0] for n in config.n_values])
            std = np.array([pts.get(n, (np.nan, np.nan))[1] for n in config.n_values])
            series.append((alg, mean, std))
        path = out / f"{config.preset}_{metric}.svg"
        line_chart(str(path), grid, series,
                   title=f"{config.preset}: {metric} vs n",
                   xlabel="n (samples)", ylabel=metric)
        charts.append(path)
    return charts


def _bandit_chart(config: ExperimentConfig, curve_data, out: Path):
    sample_pts = None
    per_alg = {}
    for pts, curves in curve_data:
        sample_pts = pts
        for alg, cum in curves.items():
            per_alg.setdefault(alg, []).append(cum)
    if sample_pts is None or not per_alg:
        return []
    series = []
    for alg in _BANDIT_ALGOS:
        if alg not in per_alg:
            continue
        stacked = np.vstack(per_alg[alg])
        mean = stacked.mean(axis=0)
        std = stacked.std(axis=0, ddof=1) if stacked.shape[0] > 1 else np.zeros_like(mean)
        series.append((alg, mean, std))
    path = out / f"{config.preset}_cum_regret.svg"
    line_chart(str(path), sample_pts.astype(float), series,
               title=f"{config.preset}: cumulative regret",
               xlabel="round", ylabel="cumulative regret")
    return [path]


def run_experiment(config: ExperimentConfig) -> dict:
    """Run every repetition of the preset and write the result file set.

    Returns a dict with the paths of raw.csv, summary.csv, timings.csv,
    and any SVG charts.  Individual repetition failures become NaN rows;
    config problems and unwritable output directories raise.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache: dict = {}
    rows, timings, charts = [], [], []
    curve_data = []
    if config.preset in _L1_PRESETS:
        for rep in range(config.reps):
            r, t, _ = _run_l1_rep(config, rep, cache)
            rows += r
            timings += t
    elif config.preset in _BANDIT_PRESETS:
        for rep in range(config.reps):
            r, t, curves = _run_bandit_rep(config, rep, cache)
            rows += r
            timings += t
            curve_data.append(curves)
    else:
        rows, timings, charts = _run_diagnostics(config, out)

    raw = out / "raw.csv"
    header = "preset,algorithm,seed,n,metric,value"
    _write_rows(raw, rows, header)
    timing_path = out / "timings.csv"
    _write_rows(timing_path, timings, header)
    summary = _summarize(rows)
    summary_path = out / "summary.csv"
    _write_summary(summary_path, summary)
    if config.preset in _L1_PRESETS:
        charts = _l1_charts(config, summary, out)
    elif config.preset in _BANDIT_PRESETS:
        charts = _bandit_chart(config, curve_data, out)
    return {
        "raw": raw,
        "summary": summary_path,
        "timings": timing_path,
        "charts": [Path(c) for c in charts],
    }
