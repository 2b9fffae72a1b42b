"""
Command-line front end.

    stochastic-rim conditions --config CONFIG
    stochastic-rim run EXPERIMENT [--config CONFIG] [--out DIR] [--seed N] [--threads N] [--paths N]
    stochastic-rim run --manifest RUN_DIR/manifest.json [--out DIR]
    stochastic-rim simulate [--config CONFIG] [--out DIR] [--seed N]

Exit codes: 0 success, 1 acceptance threshold or condition failed,
2 configuration error, 3 runtime error.

Environment:
    STOCHASTIC_RIM_OUT_DIR     default output root (default: ./runs)
    STOCHASTIC_RIM_THREADS     default worker cap (default: all cores)
    STOCHASTIC_RIM_LOG_LEVEL   log level (default: INFO)
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from stochastic_rim.errors import ConfigurationError, RimError
from stochastic_rim.experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    RunManifest,
    config_from_mapping,
    env_default,
    load_experiment_config,
    write_run,
)
from stochastic_rim.models.spectral import check_conditions

logger = logging.getLogger("stochastic_rim")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

DEFAULT_OUT_DIR = "runs"


def configure_logging(quiet: bool = False) -> None:
    level_name = "WARNING" if quiet else (env_default("LOG_LEVEL", "INFO") or "INFO").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        print(f"[WARNING] STOCHASTIC_RIM_LOG_LEVEL={level_name} is not a log level. Using INFO instead.")
        level = logging.INFO
    logging.basicConfig(level=level, format="[%(levelname)s] %(message)s", force=True)


def print_banner(title: str, config: ExperimentConfig, quiet: bool) -> None:
    if quiet:
        return
    m, d, mc = config.model, config.dynamics, config.monte_carlo
    print(title)
    print("=" * 60)
    print("Configuration:")
    print(f"  Model: {m.kind}, n_total={m.n_total}, R={m.r_cut}, alpha={m.alpha}")
    print(f"  Dynamics: nu={d.nu}, sigma={d.sigma}, eta={d.eta}, delta={d.delta}, lambda={d.lam}")
    print(f"  Grid: dt={config.grid.dt}, tail={config.grid.tail}, window={config.grid.window}, T={config.grid.t_end}")
    print(f"  Monte-Carlo: n_paths={mc.n_paths}, master_seed={mc.master_seed}, threads={mc.threads or 'auto'}")
    print("=" * 60)


def cmd_conditions(config_path: Optional[str], quiet: bool = False) -> int:
    config = load_experiment_config(config_path)
    model = config.build_model()
    d = config.dynamics
    report = check_conditions(model, d.nu, d.eta, d.delta, d.lam)
    print_banner("Lyapunov-Perron admissibility conditions", config, quiet)
    print(f"lambda*        = {model.lambda_star!r}")
    print(f"C_B            = {report.c_b!r}")
    print(f"L_R            = {report.l_r!r}")
    print(f"M_alpha,lambda = {report.m_alpha_lambda!r}")
    print(f"contraction    = {report.contraction_bound!r}")
    for i, (ok, margin) in enumerate(
        [(report.condition1, report.margin1), (report.condition2, report.margin2), (report.condition3, report.margin3)],
        start=1,
    ):
        print(f"condition{i}     : {'ok  ' if ok else 'FAIL'} margin={margin!r}")
    return EXIT_OK if report.all_satisfied else EXIT_FAIL


def cmd_run(
    experiment: Optional[str],
    config_path: Optional[str] = None,
    out_dir: Optional[str] = None,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    paths: Optional[int] = None,
    manifest_path: Optional[str] = None,
    quiet: bool = False,
) -> int:
    if manifest_path is not None:
        manifest = RunManifest.load(manifest_path)
        if experiment is not None and experiment != manifest.experiment:
            raise ConfigurationError(f"manifest is for {manifest.experiment!r}, not {experiment!r}")
        experiment = manifest.experiment
        config = config_from_mapping(manifest.config)
        if config.content_hash() != manifest.config_hash:
            raise ConfigurationError(f"config hash mismatch in {manifest_path}")
    else:
        if experiment is None:
            raise ConfigurationError("name an experiment or pass --manifest")
        config = load_experiment_config(config_path)
    if experiment not in EXPERIMENTS:
        raise ConfigurationError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    config = config.with_overrides(seed=seed, n_paths=paths, threads=threads)

    print_banner(f"Running experiment '{experiment}'", config, quiet)
    report = EXPERIMENTS[experiment](config)
    out_root = Path(out_dir or env_default("OUT_DIR", DEFAULT_OUT_DIR))
    run_dir = write_run(report, out_root, config.content_hash())

    for w in report.warnings:
        logger.warning(w)
    for name, ok in report.checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    print(f"[INFO] {len(report.rows)} rows in {report.wall_clock:.1f}s -> {run_dir}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_simulate(config_path: Optional[str], out_dir: Optional[str] = None, seed: Optional[int] = None,
                 quiet: bool = False) -> int:
    return cmd_run("simulate", config_path, out_dir, seed=seed, quiet=quiet)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochastic-rim",
        description="Random invariant manifolds of Galerkin-truncated SPDEs via the Lyapunov-Perron fixed point",
    )
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("conditions", help="Print the admissibility margins of a configuration")
    p.add_argument("--config", help="Experiment YAML (default: built-in defaults)")

    p = sub.add_parser("run", help="Run a Monte-Carlo experiment and write a run directory")
    p.add_argument("experiment", nargs="?", choices=sorted(EXPERIMENTS), help="Experiment name")
    p.add_argument("--config", help="Experiment YAML (default: built-in defaults)")
    p.add_argument("--manifest", help="Rerun from a manifest.json written by an earlier run")
    p.add_argument("--out", help="Output root (default: $STOCHASTIC_RIM_OUT_DIR or ./runs)")
    p.add_argument("--seed", type=int, help="Override monte_carlo.master_seed")
    p.add_argument("--threads", type=int, help="Cap the number of worker processes")
    p.add_argument("--paths", type=int, help="Override monte_carlo.n_paths")

    p = sub.add_parser("simulate", help="Integrate one trajectory and write plot-ready CSV")
    p.add_argument("--config", help="Experiment YAML (default: built-in defaults)")
    p.add_argument("--out", help="Output root (default: $STOCHASTIC_RIM_OUT_DIR or ./runs)")
    p.add_argument("--seed", type=int, help="Override monte_carlo.master_seed")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.quiet)
    try:
        if args.command == "conditions":
            return cmd_conditions(args.config, args.quiet)
        if args.command == "run":
            return cmd_run(args.experiment, args.config, args.out, args.seed, args.threads, args.paths,
                           args.manifest, args.quiet)
        return cmd_simulate(args.config, args.out, args.seed, args.quiet)
    except ConfigurationError as e:
        print(f"[ERROR] Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RimError as e:
        print(f"[ERROR] {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"[ERROR] I/O error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception(f"Unexpected failure in '{args.command}'")
        print(f"[ERROR] {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
