from .config import ConfigError, EvalConfig, ExperimentConfig, from_dict, preset_trainer, resolve
from .evaluate import EvalResult, evaluate_policy, rates_from_totals
from .metrics import MetricRecord, read_csv, summarize
from .plots import emit_plots
from .run import SeedRun, load_checkpoint, run_experiment

__all__ = [
    "ConfigError", "EvalConfig", "EvalResult", "ExperimentConfig", "MetricRecord", "SeedRun", "emit_plots",
    "evaluate_policy", "from_dict", "load_checkpoint", "preset_trainer", "rates_from_totals", "read_csv",
    "resolve", "run_experiment", "summarize",
]
