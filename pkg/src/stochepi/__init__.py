"""Stochastic epidemic simulation for a population with a vulnerable group.

Sub-modules:

``distributions``  seeded random streams and samplers
``model``          scenario types and validation
``engine``         the daily-tick stochastic simulator
``composer``       aggregation of time-shifted subpopulation epidemics
``burden``         mortality calibration, expected and sampled deaths
``oracle``         deterministic mean-field recursion and comparisons
``ensemble``       replicate ensembles, shape sensitivity, sweeps
``io``, ``plotting``, ``cli``  config files, CSV/SVG output, command line
"""
from .burden import UK_AGE_TABLE, calibrate_age_table, expected_deaths, group_mortality_rates, sample_deaths
from .composer import Subpopulation, SubpopulationPlan, compose, peak_prevalence
from .distributions import RngStream, derive_stream, make_rng
from .engine import Trajectory, align_to_threshold, run
from .ensemble import Ensemble, SweepGrid, run_replicates, sensitivity_k
from .kernels import BACKEND, available_backends, use_backend
from .model import (
    DiseaseParams,
    InterventionPolicy,
    Phase,
    PopulationSpec,
    ScenarioConfig,
    effective_beta,
    validate_scenario,
)
from .oracle import compare, mean_field_run

__version__ = "0.1.0"
