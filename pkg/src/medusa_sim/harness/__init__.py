"""Scenario files, seeded experiments, metrics and the command line."""
from .experiment import Comparison, SchedulerSummary, compare_schedulers, run_experiment, run_once, seeds_for
from .metrics import RunMetrics, compute_metrics, table_columns
from .scenario import Scenario, ScenarioError, SimParams, load_scenario, scenario_from_dict, validate

__all__ = [
    "Comparison", "SchedulerSummary", "compare_schedulers", "run_experiment", "run_once", "seeds_for",
    "RunMetrics", "compute_metrics", "table_columns",
    "Scenario", "ScenarioError", "SimParams", "load_scenario", "scenario_from_dict", "validate",
]
