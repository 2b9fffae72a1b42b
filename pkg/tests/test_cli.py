import numpy as np
import pytest

from conftest import CONFIG_DIR
from stochastic_rim.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_RUNTIME, main
from stochastic_rim.experiments import EXPERIMENTS

SMOKE = str(CONFIG_DIR / "smoke.yaml")


def _run_dirs(root):
    return sorted(p for p in root.iterdir() if p.is_dir())


def test_conditions_default(capsys):
    assert main(["conditions"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "contraction" in out
    assert "condition1     : ok" in out


def test_conditions_exit_codes(tmp_path):
    (tmp_path / "wide.yaml").write_text("model:\n  r_cut: 10.0\n")
    assert main(["--quiet", "conditions", "--config", str(tmp_path / "wide.yaml")]) == EXIT_FAIL

    (tmp_path / "flat.yaml").write_text("model:\n  r_cut: 0.0\n")
    assert main(["--quiet", "conditions", "--config", str(tmp_path / "flat.yaml")]) == EXIT_OK

    (tmp_path / "typo.yaml").write_text("model:\n  radius: 0.1\n")
    assert main(["conditions", "--config", str(tmp_path / "typo.yaml")]) == EXIT_CONFIG
    assert main(["conditions", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as err:
        main(["run", "no-such-experiment"])
    assert err.value.code == 2
    assert main(["run"]) == EXIT_CONFIG


def test_run_and_rerun_from_manifest(tmp_path, capsys):
    out = tmp_path / "runs"
    code = main(["--quiet", "run", "ktail", "--config", SMOKE, "--out", str(out)])
    assert code in (EXIT_OK, EXIT_FAIL)
    assert "[PASS] z0_bound" in capsys.readouterr().out
    (first,) = _run_dirs(out)

    assert main(["--quiet", "run", "--manifest", str(first / "manifest.json"), "--out", str(out)]) == code
    second = [p for p in _run_dirs(out) if p != first][0]
    assert (second / "rows.csv").read_bytes() == (first / "rows.csv").read_bytes()

    assert main(["run", "cone", "--manifest", str(first / "manifest.json"), "--out", str(out)]) == EXIT_CONFIG


def test_overrides_change_the_run(tmp_path):
    out = tmp_path / "runs"
    main(["--quiet", "run", "ktail", "--config", SMOKE, "--out", str(out), "--paths", "3", "--seed", "5"])
    (run_dir,) = _run_dirs(out)
    assert len((run_dir / "rows.csv").read_text().splitlines()) == 4
    assert '"master_seed": 5' in (run_dir / "manifest.json").read_text()


def test_output_root_is_a_file(tmp_path):
    blocker = tmp_path / "runs"
    blocker.write_text("not a directory")
    code = main(["--quiet", "run", "ktail", "--config", SMOKE, "--out", str(blocker), "--paths", "2"])
    assert code == EXIT_RUNTIME


def test_simulate_linear_benchmark(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("STOCHASTIC_RIM_OUT_DIR", str(tmp_path / "env-runs"))
    assert main(["simulate", "--config", str(CONFIG_DIR / "linear-benchmark.yaml")]) == EXIT_OK
    assert "[PASS] benchmark" in capsys.readouterr().out
    (run_dir,) = _run_dirs(tmp_path / "env-runs")
    assert run_dir.name.startswith("simulate-")
    assert (run_dir / "trajectory-full.csv").is_file()


def test_invalid_override_is_a_config_error(tmp_path, capsys):
    out = tmp_path / "runs"
    assert main(["--quiet", "run", "ktail", "--config", SMOKE, "--paths", "-3", "--out", str(out)]) == EXIT_CONFIG
    assert main(["--quiet", "run", "ktail", "--config", SMOKE, "--threads", "0", "--out", str(out)]) == EXIT_CONFIG
    assert "Configuration error" in capsys.readouterr().err
    assert not out.exists()


def test_unexpected_failure_is_a_runtime_error(tmp_path, monkeypatch, capsys):
    def singular(config):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setitem(EXPERIMENTS, "ktail", singular)
    out = tmp_path / "runs"
    assert main(["--quiet", "run", "ktail", "--config", SMOKE, "--out", str(out)]) == EXIT_RUNTIME
    assert "LinAlgError: Singular matrix" in capsys.readouterr().err
    assert not out.exists()
