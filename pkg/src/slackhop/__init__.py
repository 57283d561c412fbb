"""Simulation and experiment harness for a hopping leg with a slack-tendon damper.

The leg is a spring-loaded knee driven by a motor, with a viscous damper
coupled through a tendon that only tightens after enough knee flexion.  The
package simulates vertical hopping on a rail and forward hopping on a boom,
runs the perturbation protocols, and reduces trials to energetics and
robustness metrics.
"""
from .config import ScenarioConfig, SweepSpec, default_forward, default_vertical, load_config
from .dynamics import TrialRecord, simulate
from .analysis import TrialMetrics, trial_metrics
from .harness import calibrate, run, run_trial, sweep

__all__ = [
    "ScenarioConfig",
    "SweepSpec",
    "TrialRecord",
    "TrialMetrics",
    "default_forward",
    "default_vertical",
    "load_config",
    "simulate",
    "trial_metrics",
    "run",
    "run_trial",
    "sweep",
    "calibrate",
]

__version__ = "0.1.0"
