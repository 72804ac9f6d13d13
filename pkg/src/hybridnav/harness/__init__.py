"""Configuration, metrics, experiment drivers and the command-line interface."""
from .config import RunConfig
from .experiments import compare, make_policy, run_once, sweep_n
from .logs import load_log
from .metrics import MetricsReport, cdf_table, pmae, prmse

__all__ = ["MetricsReport", "RunConfig", "cdf_table", "compare", "load_log", "make_policy",
           "pmae", "prmse", "run_once", "sweep_n"]
