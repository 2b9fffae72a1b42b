from .config import ExperimentConfig, config_from_mapping, env_default, load_experiment_config
from .report import ExperimentReport, RunManifest, TrajectoryExport, write_run
from .runner import map_paths, resolve_threads
from .fitting import calibrate_constant, decay_rate, loglog_slope
from .shape import run_shape
from .attraction import run_attraction
from .cone import ConeMonitor, run_cone
from .ktail import run_ktail
from .amplitude import run_amplitude
from .gchain import run_gchain
from .contraction import run_contraction
from .simulate import run_simulate

EXPERIMENTS = {
    "shape": run_shape,
    "attract": run_attraction,
    "cone": run_cone,
    "ktail": run_ktail,
    "amplitude": run_amplitude,
    "gchain": run_gchain,
    "contraction": run_contraction,
    "simulate": run_simulate,
}
