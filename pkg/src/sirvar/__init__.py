"""SIR epidemic simulation under two paradigms with ensemble variance analysis.

The package pairs a deterministic system-dynamics SIR integrator (with a
Monte-Carlo parameter-variation harness) against a stochastic agent-based
SIR simulator on Watts-Strogatz small-world contact networks, and provides
the statistics used to compare them: weekly quartile summaries, total
variation, and the Wilcoxon signed-rank test.
"""

__version__ = "0.1.0"

from .core import (
    CompartmentState,
    EnsembleResult,
    SirParams,
    Trajectory,
    WeeklySeries,
    basic_reproduction_number,
    calibrate_contact_rate,
    default_params,
    derived_rates,
)
from .sd import integrate, sir_derivatives, weekly_sample
from .montecarlo import VariationSpec, run_sd_ensemble, sample_params
from .network import NetworkGenParams, NetworkTopology, build_small_world
from .abm import AgentState, Population, Status, run_abm, run_abm_ensemble, step_day
from .stats import (
    WeeklySummary,
    WilcoxonResult,
    median_series,
    weekly_summary,
    wilcoxon_signed_rank,
)

__all__ = [
    "AgentState",
    "CompartmentState",
    "EnsembleResult",
    "NetworkGenParams",
    "NetworkTopology",
    "Population",
    "SirParams",
    "Status",
    "Trajectory",
    "VariationSpec",
    "WeeklySeries",
    "WeeklySummary",
    "WilcoxonResult",
    "basic_reproduction_number",
    "build_small_world",
    "calibrate_contact_rate",
    "default_params",
    "derived_rates",
    "integrate",
    "median_series",
    "run_abm",
    "run_abm_ensemble",
    "run_sd_ensemble",
    "sample_params",
    "sir_derivatives",
    "step_day",
    "weekly_sample",
    "weekly_summary",
    "wilcoxon_signed_rank",
]
