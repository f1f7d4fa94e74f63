"""Third-order power-grid oscillator networks with secondary control."""

from .bulk import (
    BulkEnvelope,
    BulkParams,
    admissible_network_size,
    analytic_bulk_constant_voltage,
    analytic_bulk_with_ramps,
    bulk_mean_series,
    voltage_envelope,
)
from .dynamics import IntegratorSettings, Perturbation, Trajectory, integrate, rhs_full, rhs_reduced
from .errors import ConfigError, NumericalError, VoltsyncError
from .metrics import ReturnTimeSpec, return_time, steady_state_deviation_check, sync_check
from .model import GridModel, NodeParams, SimState, reduce_full_model, uniform_model, validate_model
from .scenario import Scenario
from .stability import (
    analyze,
    build_linearization,
    eigen_shift_check,
    find_fixed_point,
    proposition_one_check,
    spectral_stability,
)
from .topology import TopologySpec, all_to_all_susceptance, heterogeneous_case_study, star_bus_susceptance

__version__ = "0.1.0"


def run_preset(*args, **kwargs):
    from .runner import run_preset as _run

    return _run(*args, **kwargs)


def run_scenario(*args, **kwargs):
    from .runner import run_scenario as _run

    return _run(*args, **kwargs)
