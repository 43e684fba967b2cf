"""Stochastic ground-staff shift planning by column generation.

Builds minimum-cost sets of job sequences covering every job, where a
shift's cost adds the expected number of back-up interventions under delay
scenarios to its wage.  The exact solver runs column generation whose
pricing is a monoid-resource-constrained shortest path on an acyclic shift
digraph.
"""

__version__ = "0.1.0"

from .model import (Break, Instance, Job, JobRealization, JobRef, RuleParams,
                    Scenario, Shift, WageCurve, evaluate_cost,
                    evaluate_solution, is_feasible, is_well_scheduled,
                    load_instance, save_instance, simulate, well_schedule)
from .digraph import build_digraph, enumerate_all_shifts, path_to_shift, shift_to_path
from .generator import GeneratorSpec, generate_instance
from .solver import (CgConfig, CgReport, build_compact_model,
                     compare_deterministic, export_lp_format,
                     run_column_generation, run_exact, solve_compact,
                     solve_deterministic)

__all__ = [
    "Break", "CgConfig", "CgReport", "GeneratorSpec", "Instance", "Job",
    "JobRealization", "JobRef", "RuleParams", "Scenario", "Shift", "WageCurve",
    "build_compact_model", "build_digraph", "compare_deterministic",
    "enumerate_all_shifts", "evaluate_cost", "evaluate_solution",
    "export_lp_format", "generate_instance", "is_feasible",
    "is_well_scheduled", "load_instance", "path_to_shift",
    "run_column_generation", "run_exact", "save_instance", "shift_to_path",
    "simulate", "solve_compact", "solve_deterministic", "well_schedule",
]
