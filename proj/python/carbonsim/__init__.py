"""Python bindings for the carbonsim scheduling simulator."""

import json

from ._carbonsim import (
    CarbonsimError,
    CarbonTrace,
    TraceStats,
    cap_parallelism,
    load_trace,
    pcaps_parallelism,
    policy_names,
    psi,
    quota,
    solve_alpha,
    square_wave,
    thresholds,
)
from . import _carbonsim


def run(config, base_dir="."):
    """Run an experiment described by a dict; returns the run directories."""
    return _carbonsim.run_config_json(json.dumps(config), str(base_dir))


def run_file(path, out=None):
    """Run an experiment config file; returns the first run directory."""
    return _carbonsim.run_config_file(str(path), None if out is None else str(out))


def analyze(run_dir):
    """Recomputed metrics of a run directory as a dict."""
    return json.loads(_carbonsim.analyze(str(run_dir)))


def compare(baseline_dir, aware_dir):
    """Comparison of a baseline run against a carbon-aware run as a dict."""
    return json.loads(_carbonsim.compare(str(baseline_dir), str(aware_dir)))


def generate_workload(n_jobs, mean_interarrival_s=1800.0, seed=1):
    """Generated workload as a dict in the workload JSON schema."""
    return json.loads(_carbonsim.generate_workload_json(n_jobs, mean_interarrival_s, seed))


__all__ = [
    "CarbonsimError",
    "CarbonTrace",
    "TraceStats",
    "analyze",
    "cap_parallelism",
    "compare",
    "generate_workload",
    "load_trace",
    "pcaps_parallelism",
    "policy_names",
    "psi",
    "quota",
    "run",
    "run_file",
    "solve_alpha",
    "square_wave",
    "thresholds",
]
