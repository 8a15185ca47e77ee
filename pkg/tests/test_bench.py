"""Config parsing, experiment runner outputs, matrix IO, and the CLI."""

import shutil
import subprocess
import sys

import numpy as np
import pytest

from popart.bench import (
    PRESETS,
    ConfigError,
    ExperimentConfig,
    load_matrix,
    parse_config,
    run_experiment,
    save_matrix,
)
from popart.cli import main
from popart.instances import hard_instance_c_min_bracket, hard_instance_h_sq

RAW_HEADER = "preset,algorithm,seed,n,metric,value"
SUMMARY_HEADER = "preset,algorithm,n,metric,mean,std,count"


def _read_lines(path):
    return path.read_text(encoding="utf-8").splitlines()


# -------------------------------------------------------------------- parsing

def test_preset_defaults_case2_bandit():
    cfg = parse_config(None, {"preset": "case2-bandit"})
    assert cfg == ExperimentConfig(preset="case2-bandit", d=30, s=2, K=90,
                                   sigma=0.1, delta=0.05, n_values=(10000,),
                                   reps=30, base_seed=0, r_max=None, m=1.0,
                                   scale=1, output_dir="bench-case2-bandit")


def test_preset_defaults_case1():
    cfg = parse_config(None, {"preset": "case1-bandit"})
    assert cfg.d == 10 and cfg.K is None
    assert cfg.n_values == (400000,)
    cfg = parse_config(None, {"preset": "case1-bandit", "scale": 40})
    assert cfg.n_values == (10000,)
    cfg = parse_config(None, {"preset": "case1-l1"})
    assert cfg.n_values == tuple(range(1000, 10001, 1000))
    assert cfg.reps == 30


def test_preset_defaults_diagnostics_and_custom():
    cfg = parse_config(None, {"preset": "design-diagnostics"})
    assert cfg.reps == 1 and cfg.n_values == (0,)
    cfg = parse_config(None, None)
    assert cfg.preset == "custom" and cfg.d == 10


def test_n_override_collapses_l1_grid():
    cfg = parse_config(None, {"preset": "case2-l1", "n": 2500})
    assert cfg.n_values == (2500,)
    assert cfg.K == 90


def test_config_file_and_override_precedence(tmp_path):
    path = tmp_path / "bench.cfg"
    path.write_text("# comment line\n"
                    "\n"
                    "preset = case1-l1\n"
                    "d = 12\n"
                    "sigma = 0.3\n"
                    "r-max = 2.5\n",
                    encoding="utf-8")
    cfg = parse_config(str(path), {"sigma": 0.5, "out": "elsewhere"})
    assert cfg.d == 12
    assert cfg.sigma == 0.5
    assert cfg.r_max == 2.5
    assert cfg.output_dir == "elsewhere"


def test_malformed_config_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("d = 10\nno equals sign here\n", encoding="utf-8")
    with pytest.raises(ConfigError, match=r"malformed line 2: expected `key = value`"):
        parse_config(str(path))
    assert str(path) in str(pytest.raises(ConfigError, parse_config, str(path)).value)


def test_unknown_key_and_preset():
    with pytest.raises(ConfigError, match="unknown config key: frobnicate"):
        parse_config(None, {"frobnicate": 3})
    with pytest.raises(ConfigError, match="unknown preset: 'bogus'"):
        parse_config(None, {"preset": "bogus"})


def test_unparsable_value(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("d = ten\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="cannot parse 'ten' as int"):
        parse_config(str(path))


@pytest.mark.parametrize("overrides,msg", [
    ({"delta": 1.5}, r"delta must be in \(0, 1\)"),
    ({"delta": 0.0}, r"delta must be in \(0, 1\)"),
    ({"d": 1}, "d must be at least 2"),
    ({"s": 0}, r"s must be in \[1, d\]"),
    ({"s": 11}, r"s must be in \[1, d\]"),
    ({"sigma": -0.1}, "sigma must be nonnegative"),
    ({"reps": 0}, "reps must be at least 1"),
    ({"scale": 0}, "scale must be a positive integer"),
    ({"r_max": 0.0}, "r_max must be positive"),
    ({"m": 0.0}, "m must be positive"),
    ({"n": 0}, "n must be at least 1"),
])
def test_value_range_checks(overrides, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(None, overrides)


def test_preset_list_is_stable():
    assert PRESETS == ("case1-l1", "case1-bandit", "case2-l1", "case2-bandit",
                       "design-diagnostics", "custom")


# ------------------------------------------------------------------ matrix IO

def test_matrix_round_trip_exact(tmp_path):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, 3))
    path = tmp_path / "a.txt"
    save_matrix(str(path), a)
    assert _read_lines(path)[0] == "4 3"
    assert np.array_equal(load_matrix(str(path)), a)


def test_vector_saved_as_column(tmp_path):
    v = np.array([1.5, -2.25, 1e-17])
    path = tmp_path / "v.txt"
    save_matrix(str(path), v)
    back = load_matrix(str(path))
    assert back.shape == (3, 1)
    assert np.array_equal(back[:, 0], v)


def test_matrix_io_errors(tmp_path):
    with pytest.raises(ValueError, match="only matrices and vectors"):
        save_matrix(str(tmp_path / "x.txt"), np.zeros((2, 2, 2)))
    bad = tmp_path / "bad.txt"
    bad.write_text("junk\n1.0\n", encoding="utf-8")
    with pytest.raises(ValueError, match="expected `rows cols` header"):
        load_matrix(str(bad))
    mismatch = tmp_path / "mismatch.txt"
    mismatch.write_text("3 1\n1.0\n2.0\n", encoding="utf-8")
    with pytest.raises(ValueError, match="header says 3x1"):
        load_matrix(str(mismatch))


# ------------------------------------------------------------------- l1 runs

@pytest.fixture(scope="module")
def l1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("l1")
    cfg = parse_config(None, {"preset": "case1-l1", "n": 2000, "reps": 2,
                              "out": str(out)})
    return cfg, run_experiment(cfg), out


def test_l1_raw_rows(l1_run):
    cfg, outputs, out = l1_run
    lines = _read_lines(outputs["raw"])
    assert lines[0] == RAW_HEADER
    assert len(lines) == 1 + 2 * 1 * 3  # reps x grid points x algorithms
    algos = set()
    for line in lines[1:]:
        preset, alg, seed, n, metric, value = line.split(",")
        assert preset == "case1-l1"
        assert metric == "l1_error"
        assert n == "2000"
        assert seed in ("0", "1")
        algos.add(alg)
        assert float(value) >= 0.0
    assert algos == {"popart", "h2-lasso", "c_min-lasso"}


def test_l1_summary_and_timings(l1_run):
    cfg, outputs, out = l1_run
    lines = _read_lines(outputs["summary"])
    assert lines[0] == SUMMARY_HEADER
    assert len(lines) == 1 + 3
    for line in lines[1:]:
        assert line.split(",")[-1] == "2"  # both reps kept
    tlines = _read_lines(outputs["timings"])
    assert tlines[0] == RAW_HEADER
    assert len(tlines) == 1 + 6
    assert all(line.split(",")[4] == "runtime_ms" for line in tlines[1:])


def test_l1_chart_written(l1_run):
    cfg, outputs, out = l1_run
    charts = outputs["charts"]
    assert [c.name for c in charts] == ["case1-l1_l1_error.svg"]
    text = charts[0].read_text(encoding="utf-8")
    assert text.startswith("<svg")
    assert "c_min-lasso" in text


def test_l1_raw_is_byte_stable(l1_run, tmp_path):
    cfg, outputs, out = l1_run
    cfg2 = parse_config(None, {"preset": "case1-l1", "n": 2000, "reps": 2,
                               "out": str(tmp_path / "again")})
    outputs2 = run_experiment(cfg2)
    assert outputs2["raw"].read_bytes() == outputs["raw"].read_bytes()
    assert outputs2["summary"].read_bytes() == outputs["summary"].read_bytes()


# ---------------------------------------------------------------- bandit runs

@pytest.fixture(scope="module")
def bandit_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("bandit")
    cfg = parse_config(None, {"preset": "case2-bandit", "d": 6, "n": 600,
                              "reps": 2, "out": str(out)})
    # unit signals sit exactly at the default m = 1.0 boundary, so the
    # support-recovery runner must flag its assumption
    with pytest.warns(UserWarning, match="minimum-signal assumption violated"):
        outputs = run_experiment(cfg)
    return cfg, outputs, out


def test_bandit_raw_rows(bandit_run):
    cfg, outputs, out = bandit_run
    assert cfg.K == 18
    lines = _read_lines(outputs["raw"])
    assert lines[0] == RAW_HEADER
    # per rep: etc 2 regret + 1 support, estc 2 regret, rpe 2 regret + 1 support
    assert len(lines) == 1 + 2 * 8
    mids = {line.split(",")[3] for line in lines[1:]}
    assert mids == {"300", "600"}
    algos = {line.split(",")[1] for line in lines[1:]}
    assert algos == {"etc-popart", "estc", "restricted-phase-elim"}


def test_bandit_infeasible_algorithm_yields_nan_rows(bandit_run):
    # the support-recovery phase needs far more than 600 rounds here, so
    # that algorithm's rows are NaN but the file shape is unchanged
    cfg, outputs, out = bandit_run
    rpe = [line for line in _read_lines(outputs["raw"])[1:]
           if line.split(",")[1] == "restricted-phase-elim"]
    assert len(rpe) == 6
    assert all(line.split(",")[5] == "nan" for line in rpe)
    summary = [line for line in _read_lines(outputs["summary"])[1:]
               if line.split(",")[1] == "restricted-phase-elim"]
    assert summary and all(line.split(",")[-1] == "0" for line in summary)
    etc = [line for line in _read_lines(outputs["summary"])[1:]
           if line.split(",")[1] == "etc-popart"]
    assert etc and all(line.split(",")[-1] == "2" for line in etc)


@pytest.mark.filterwarnings("ignore:minimum-signal assumption violated")
def test_bandit_chart_and_byte_stability(bandit_run, tmp_path):
    cfg, outputs, out = bandit_run
    assert [c.name for c in outputs["charts"]] == ["case2-bandit_cum_regret.svg"]
    assert outputs["charts"][0].read_text(encoding="utf-8").startswith("<svg")
    cfg2 = parse_config(None, {"preset": "case2-bandit", "d": 6, "n": 600,
                               "reps": 2, "out": str(tmp_path / "again")})
    outputs2 = run_experiment(cfg2)
    assert outputs2["raw"].read_bytes() == outputs["raw"].read_bytes()


# ----------------------------------------------------------------- diagnostics

@pytest.fixture(scope="module")
def diagnostics_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("diag")
    cfg = parse_config(None, {"preset": "design-diagnostics", "out": str(out)})
    return cfg, run_experiment(cfg), out


def test_diagnostics_metrics(diagnostics_run):
    cfg, outputs, out = diagnostics_run
    lines = _read_lines(outputs["raw"])
    assert lines[0] == RAW_HEADER
    vals = {line.split(",")[4]: float(line.split(",")[5]) for line in lines[1:]}
    assert set(vals) == {"h_star_sq", "c_min"}
    closed = hard_instance_h_sq(10)
    assert abs(vals["h_star_sq"] - closed) / closed < 0.02
    lo, hi = hard_instance_c_min_bracket(10)
    assert lo <= 1.0 / vals["c_min"] <= hi


def test_diagnostics_files(diagnostics_run):
    cfg, outputs, out = diagnostics_run
    w = load_matrix(str(out / "h_design_weights.txt"))
    assert w.shape == (10, 1)
    assert w.sum() == pytest.approx(1.0, abs=1e-9)
    q = load_matrix(str(out / "h_design_cov.txt"))
    assert q.shape == (10, 10)
    assert np.allclose(q, q.T)
    c = load_matrix(str(out / "c_design_weights.txt"))
    assert c.shape == (10, 1)
    chart = out / "design-diagnostics_f_bound.svg"
    assert chart.exists()
    assert chart.read_text(encoding="utf-8").startswith("<svg")


# ------------------------------------------------------------------------ CLI

def test_cli_design_ok(tmp_path, capsys):
    rc = main(["design", "--out", str(tmp_path / "o")])
    captured = capsys.readouterr()
    assert rc == 0
    assert "preset design-diagnostics: 1 repetition(s)" in captured.out
    assert "H^2 criterion" in captured.out
    assert (tmp_path / "o" / "raw.csv").exists()
    assert (tmp_path / "o" / "summary.csv").exists()
    assert (tmp_path / "o" / "timings.csv").exists()


def test_cli_estimate_with_config_file(tmp_path, capsys):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("n = 1200\nreps = 1\n", encoding="utf-8")
    rc = main(["estimate", "--config", str(cfgfile), "--n", "1500",
               "--out", str(tmp_path / "o")])
    assert rc == 0
    lines = _read_lines(tmp_path / "o" / "raw.csv")
    assert all(line.split(",")[3] == "1500" for line in lines[1:])  # flag wins


def test_cli_rejects_bad_preset(capsys):
    rc = main(["sweep", "--preset", "bogus"])
    captured = capsys.readouterr()
    assert rc == 1
    assert captured.err.startswith("config error: unknown preset")


def test_cli_rejects_preset_outside_subcommand(capsys):
    rc = main(["design", "--preset", "case1-l1"])
    captured = capsys.readouterr()
    assert rc == 1
    assert "not valid for `design`" in captured.err


def test_cli_rejects_bad_delta(capsys):
    rc = main(["bandit", "--delta", "1.5"])
    captured = capsys.readouterr()
    assert rc == 1
    assert captured.err.startswith("config error: delta must be in")


def test_cli_runtime_error_exit_code(tmp_path, capsys):
    blocker = tmp_path / "taken"
    blocker.write_text("", encoding="utf-8")
    rc = main(["estimate", "--n", "1000", "--reps", "1", "--out", str(blocker)])
    captured = capsys.readouterr()
    assert rc == 2
    assert captured.err.startswith("runtime error: ")


def test_cli_entry_points_exist():
    assert shutil.which("bench") is not None
    proc = subprocess.run([sys.executable, "-m", "popart.cli", "sweep",
                           "--preset", "bogus"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stderr.startswith("config error:")
