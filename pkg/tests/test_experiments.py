import json
import math

import numpy as np
import pytest

from conftest import CONFIG_DIR, short_noise
from stochastic_rim.errors import ConfigurationError
from stochastic_rim.experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    RunManifest,
    calibrate_constant,
    config_from_mapping,
    decay_rate,
    load_experiment_config,
    loglog_slope,
    map_paths,
    resolve_threads,
    write_run,
)
from stochastic_rim.experiments.amplitude import run_amplitude
from stochastic_rim.experiments.attraction import run_attraction
from stochastic_rim.experiments.cone import ConeMonitor, run_cone
from stochastic_rim.experiments.contraction import run_contraction
from stochastic_rim.experiments.fitting import fraction, is_calibration, is_non_increasing
from stochastic_rim.experiments.gchain import run_gchain
from stochastic_rim.experiments.ktail import explicit_k2_constant, run_ktail
from stochastic_rim.experiments.report import tail_warning
from stochastic_rim.experiments.shape import run_shape
from stochastic_rim.experiments.simulate import run_simulate
from stochastic_rim.models.dynamics import ForwardNoise, integrate_v
from stochastic_rim.models.noise import z_origin
from stochastic_rim.models.spectral import norms


def smoke_config(**sections) -> ExperimentConfig:
    """smoke.yaml with some sections partially replaced."""
    data = load_experiment_config(CONFIG_DIR / "smoke.yaml").snapshot()
    for name, update in sections.items():
        target = data
        *parents, leaf = name.split(".")
        for p in parents:
            target = target[p]
        target[leaf] = {**target[leaf], **update}
    return config_from_mapping(data)


@pytest.fixture(scope="module")
def smoke():
    return load_experiment_config(CONFIG_DIR / "smoke.yaml")


def test_default_config():
    config = load_experiment_config(None)
    assert config.model.r_cut == 0.05
    assert config.model.n_total == 16
    assert config.dynamics.lam == 2.5
    assert config.perron.strict
    assert set(EXPERIMENTS) == {"shape", "attract", "cone", "ktail", "amplitude", "gchain", "contraction", "simulate"}


def test_config_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        config_from_mapping({"model": {"modes": 8}})
    with pytest.raises(ConfigurationError):
        config_from_mapping({"grid": {"window": 60.0, "tail": 50.0}})
    with pytest.raises(ConfigurationError):
        config_from_mapping({"dynamics": {"sigma": -0.1}})
    with pytest.raises(ConfigurationError):
        load_experiment_config(tmp_path / "missing.yaml")

    (tmp_path / "list.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ConfigurationError):
        load_experiment_config(tmp_path / "list.yaml")

    (tmp_path / "interp.yaml").write_text("grid:\n  tail: 30.0\n  window: ${grid.tail}\n")
    assert load_experiment_config(tmp_path / "interp.yaml").grid.window == 30.0


def test_shipped_configs_load():
    for fpath in sorted(CONFIG_DIR.glob("*.yaml")):
        config = load_experiment_config(fpath)
        config.build_model()


def test_smoke_config(smoke):
    assert smoke.name == "smoke"
    assert smoke.monte_carlo.n_paths == 10
    assert smoke.grid.history_stride == 4
    perron = smoke.perron_config()
    assert (perron.window, perron.stride, perron.tol, perron.psi_nodes) == (20.0, 4, 1e-10, 17)
    assert smoke.perron_config(nu=0.1).nu == 0.1


def test_content_hash(smoke):
    again = load_experiment_config(CONFIG_DIR / "smoke.yaml")
    assert smoke.content_hash() == again.content_hash()
    assert config_from_mapping(smoke.snapshot()).content_hash() == smoke.content_hash()
    assert smoke.with_overrides().content_hash() == smoke.content_hash()

    other = smoke.with_overrides(seed=1, n_paths=3, threads=2)
    assert other.content_hash() != smoke.content_hash()
    assert (other.monte_carlo.master_seed, other.monte_carlo.n_paths, other.monte_carlo.threads) == (1, 3, 2)
    assert smoke.monte_carlo.n_paths == 10


def test_overrides_are_validated(smoke):
    with pytest.raises(ConfigurationError):
        smoke.with_overrides(n_paths=-3)
    with pytest.raises(ConfigurationError):
        smoke.with_overrides(threads=0)
    with pytest.raises(ConfigurationError):
        smoke.with_overrides(seed=-1)


def test_fitting_helpers():
    assert loglog_slope([1.0, 2.0, 4.0], [1.0, 8.0, 64.0]) == pytest.approx(3.0)
    assert math.isnan(loglog_slope([1.0, 2.0], [0.0, 1.0]))

    t = np.linspace(0.0, 3.0, 7)
    assert decay_rate(t, 5.0 * np.exp(-2.0 * t)) == pytest.approx(2.0)
    assert decay_rate(t, 5.0 * np.exp(-2.0 * t), floor=1.0) is None

    assert calibrate_constant([1.0, 4.0, 7.0], [1.0, 2.0, 0.0]) == 2.0
    assert calibrate_constant([1.0], [0.0]) == 0.0
    assert is_calibration(0, 10, 0.2) and is_calibration(1, 10, 0.2)
    assert not is_calibration(2, 10, 0.2)
    assert is_calibration(0, 3, 0.01)

    assert fraction([True, False, True, True]) == 0.75
    assert math.isnan(fraction([]))
    assert is_non_increasing([3.0, 2.0, float("nan"), 2.0, 1.0])
    assert not is_non_increasing([1.0, 1.5])
    assert is_non_increasing([1.0, 1.5], slack=0.5)


def test_explicit_k2_constant():
    assert explicit_k2_constant(0.0, 0.1, 1.0) == pytest.approx(max(1.0, 1.0 / (np.e * 0.9)))
    assert math.isnan(explicit_k2_constant(0.5, 0.6, 1.0))


def test_cone_monitor():
    monitor = ConeMonitor(delta=1.0, tol=1e-8)
    assert not monitor.step(0.0, 1.0, 2.0)
    assert monitor.step(0.1, 1.0, 0.5)
    assert monitor.step(0.2, 1.0, 0.9)
    assert not monitor.step(0.3, 1.0, 1.5)
    result = monitor.get_analysis_result()
    assert result.entered and result.entered_at == 0.1
    assert result.re_exits == 1
    assert result.max_excess == pytest.approx(0.5)

    monitor.reset()
    assert monitor.step(0.0, 0.0, 0.0)
    fresh = ConeMonitor(delta=1.0)
    fresh.step(0.0, 1.0, 3.0)
    assert not fresh.get_analysis_result().entered
    assert math.isnan(fresh.get_analysis_result().max_excess)


def test_map_paths_keeps_order(monkeypatch):
    assert map_paths(math.sqrt, [1, 4, 9], 2) == [1.0, 2.0, 3.0]
    assert map_paths(math.sqrt, [16], 4) == [4.0]

    monkeypatch.setenv("STOCHASTIC_RIM_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads(1) == 1
    monkeypatch.setenv("STOCHASTIC_RIM_THREADS", "many")
    with pytest.raises(ConfigurationError):
        resolve_threads()
    with pytest.raises(ConfigurationError):
        resolve_threads(0)


def test_ktail_is_deterministic(smoke):
    first = run_ktail(smoke)
    second = run_ktail(smoke)
    assert len(first.rows) == 10
    assert [r["k2"] for r in first.rows] == [r["k2"] for r in second.rows]
    assert all(r["z0_bound_ok"] for r in first.rows)
    assert first.checks["z0_bound"]
    assert first.aggregates["bridge"] is True
    assert sum(r["calibration"] for r in first.rows) == 2


def test_ktail_does_not_depend_on_worker_count(smoke):
    serial = run_ktail(smoke.with_overrides(n_paths=4, threads=1))
    parallel = run_ktail(smoke.with_overrides(n_paths=4, threads=2))
    assert [r["k_tilde"] for r in serial.rows] == [r["k_tilde"] for r in parallel.rows]


def test_write_run(tmp_path, smoke):
    report = run_ktail(smoke)
    run_dir = write_run(report, tmp_path, smoke.content_hash())
    assert run_dir.name.startswith("ktail-") and run_dir.name.endswith(smoke.content_hash()[:8])
    for name in ("manifest.json", "summary.json", "rows.csv"):
        assert (run_dir / name).is_file()

    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["experiment"] == "ktail"
    assert summary["n_rows"] == 10
    assert summary["passed"] == report.passed
    header = (run_dir / "rows.csv").read_text().splitlines()[0]
    assert header.split(",") == report.columns

    manifest = RunManifest.load(run_dir / "manifest.json")
    assert manifest.config_hash == smoke.content_hash()
    assert manifest.master_seed == smoke.monte_carlo.master_seed
    assert config_from_mapping(manifest.config).content_hash() == manifest.config_hash

    rerun = run_ktail(config_from_mapping(manifest.config))
    again = write_run(rerun, tmp_path, manifest.config_hash)
    assert again != run_dir
    assert (again / "rows.csv").read_bytes() == (run_dir / "rows.csv").read_bytes()


def test_contraction_smoke():
    report = run_contraction(smoke_config(monte_carlo={"n_paths": 3}))
    assert len(report.rows) == 3
    assert report.checks["within_bound"]
    assert all(r["measured"] <= r["bound"] < 1.0 for r in report.rows)


def test_cone_differences_do_not_re_exit():
    report = run_cone(smoke_config(monte_carlo={"n_paths": 3}))
    assert [r["kind"] for r in report.rows] == ["mixed", "center", "stable"]
    assert all(r["status"] == "ok" for r in report.rows)
    assert report.checks == {"no_re_exit": True, "outside_decay_bound": True}
    assert all(r["bound_max_ratio"] <= 1.0 + 1e-9 for r in report.rows)
    stable = report.rows[2]
    assert stable["p0"] == 0.0 and stable["q0"] > 0.0


def test_stable_mode_difference_decays_under_cone_bound(smoke):
    model = smoke.build_model()
    path = short_noise(0.01)
    z0 = z_origin(path)
    u0 = model.basis_vector(1, 0.02)
    gap = model.basis_vector(3, 0.005)
    v = integrate_v(model, path, np.exp(-z0) * u0, 1.0, 0.01)
    v_bar = integrate_v(model, path, np.exp(-z0) * (u0 + gap), 1.0, 0.01)
    diff = v.states - v_bar.states
    p = norms(model, model.project_c(diff))
    q = norms(model, model.project_s(diff))

    forward = ForwardNoise(path, 1.0, 0.01)
    bound = float(norms(model, gap)) ** 2 * np.exp(
        -0.5 * model.lambda_star * forward.grid.times + 2.0 * forward.big_z - 2.0 * z0
    )
    outside = np.logical_and.accumulate(q >= smoke.dynamics.delta * p)
    assert outside[0]
    assert np.all(q[outside] ** 2 <= bound[outside] * (1.0 + 1e-9))


def test_attraction_rate_and_bound():
    report = run_attraction(smoke_config(monte_carlo={"n_paths": 3}))
    agg = report.aggregates
    assert agg["lambda_star"] == 3.0
    assert agg["n_flagged"] == 0
    assert agg["bound_fraction"] == 1.0
    assert all(rate is not None and rate >= 0.5 * agg["lambda_star"] for rate in agg["rates"])
    assert report.checks == {"pathwise_bound": True, "decay_rate": True}

    # samples at t = 0, 0.5 and 1 on every path
    ok = [r for r in report.rows if r["status"] == "ok"]
    assert len(ok) == 9
    assert all(r["distance"] <= r["bound"] for r in ok)


def test_shape_zero_rows_and_violation_trend():
    config = smoke_config(monte_carlo={"n_paths": 2}, **{"experiment.shape": {"run_limit": False}})
    report = run_shape(config)
    zero = [r for r in report.rows if r["xi_norm"] == 0.0]
    assert len(zero) == 4
    for r in zero:
        assert r["status"] == "ok"
        assert r["error"] == 0.0 and r["envelope"] == 0.0
        assert r["satisfied"]

    per_sigma = report.aggregates["per_sigma"]
    assert set(per_sigma) == {"0.04", "0.01"}
    for stats in per_sigma.values():
        assert 0.0 <= stats["violation_fraction"] <= 1.0
        assert stats["violation_fraction"] == pytest.approx(1.0 - stats["satisfied_fraction"])
    assert per_sigma["0.01"]["exp_envelope"] == pytest.approx(np.exp(-10.0))
    assert "violation_non_increasing" in report.checks
    assert "limit_slope" not in report.checks


def test_amplitude_error_shrinks_with_eps():
    report = run_amplitude(smoke_config(monte_carlo={"n_paths": 2}))
    assert all(r["status"] == "ok" for r in report.rows)
    medians = report.aggregates["median_errors_by_decreasing_eps"]
    assert len(medians) == 2
    assert medians[1] < medians[0]
    assert report.checks["error_decreases"]


def test_gchain_scales_with_the_radius():
    config = smoke_config(monte_carlo={"n_paths": 2}, **{"experiment.gchain": {"r_sweep": [0.0125, 0.025, 0.05]}})
    report = run_gchain(config)
    agg = report.aggregates
    assert agg["n_failed"] == 0
    assert agg["vs_slope"] == pytest.approx(1.0, abs=0.15)
    assert agg["vs_g1_slope"] == pytest.approx(2.0, abs=0.15)
    assert report.checks == {"vs_slope": True, "vs_g1_slope": True}


def test_ktail_two_k_tilde_law(smoke):
    report = run_ktail(smoke.with_overrides(n_paths=200))
    assert report.aggregates["ks_pvalue"] > 0.01
    assert report.aggregates["mean_two_k_tilde"] == pytest.approx(1.0, abs=0.2)


@pytest.mark.slow
def test_ktail_ks_acceptance(smoke):
    report = run_ktail(smoke.with_overrides(n_paths=2000))
    assert report.checks["ks"]
    assert report.aggregates["ks_statistic"] < smoke.acceptance.ks_max


def test_tail_warning_summarises_paths():
    rows = [{"path": 0, "z0_tail_term": 1e-3}, {"path": 0, "z0_tail_term": 2e-3}, {"path": 1, "z0_tail_term": 0.0}]
    msg = tail_warning(rows)
    assert "on 1 path(s)" in msg and "2.00e-03" in msg
    assert tail_warning([{"path": 0}]) is None


def test_short_history_is_reported(tmp_path):
    config = smoke_config(grid={"tail": 5.0, "window": 5.0})
    report = run_simulate(config)
    assert any("history tail too short" in w for w in report.warnings)

    run_dir = write_run(report, tmp_path, config.content_hash())
    summary = json.loads((run_dir / "summary.json").read_text())
    assert any("history tail too short" in w for w in summary["warnings"])
    assert "z0_tail_term" not in (run_dir / "rows.csv").read_text().splitlines()[0]

    assert not any("history tail" in w for w in run_simulate(smoke_config()).warnings)


def test_simulate_linear_benchmark(tmp_path):
    config = load_experiment_config(CONFIG_DIR / "linear-benchmark.yaml")
    report = run_simulate(config)
    assert report.checks == {"benchmark": True}
    assert report.aggregates["benchmark_rel_error"] <= 1.01 * np.expm1(report.aggregates["ou_residual"]) + 1e-12
    assert len(report.rows) == 2001
    run_dir = write_run(report, tmp_path, config.content_hash())
    assert (run_dir / "trajectory-full.csv").is_file()


def test_simulate_burgers_options():
    config = smoke_config(**{"experiment.simulate": {"compare_cutoff": True, "reduced": "quadratic"}})
    report = run_simulate(config)
    assert report.checks["cutoff_agreement"]
    assert {"cutoff_diff", "reduced_u1"} <= set(report.columns)
    assert set(report.trajectories) == {"full", "other-cutoff", "reduced-quadratic"}


def test_experiment_argument_checks():
    with pytest.raises(ConfigurationError):
        run_amplitude(smoke_config(**{"experiment.amplitude": {"eps_sweep": [0.3]}}))
    with pytest.raises(ConfigurationError):
        run_amplitude(smoke_config(model={"kind": "linear", "eigenvalues": [0.0, 3.0, 8.0]}))
    with pytest.raises(ConfigurationError):
        run_attraction(smoke_config(dynamics={"nu": 0.8}))
    with pytest.raises(ConfigurationError):
        run_ktail(smoke_config(grid={"tail": 20.0, "window": 10.0}))
    with pytest.raises(ConfigurationError):
        run_simulate(smoke_config(**{"experiment.simulate": {"u0": [0.01] * 9}}))


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_every_experiment_runs_on_smoke_config(tmp_path, smoke, name):
    report = EXPERIMENTS[name](smoke)
    assert report.experiment == name
    assert report.rows
    run_dir = write_run(report, tmp_path, smoke.content_hash())
    assert (run_dir / "summary.json").is_file()
