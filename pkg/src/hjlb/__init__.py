"""Lower bounds on spatial gradients of Hamilton-Jacobi solutions, with numerical checks."""

from .bounds import (BoundInputs, DependenceDomain, bounds_table, compare_F, in_domain_D, in_domain_E, lower_L,
                     lower_l, lower_ley, lower_sharpened, radius_R, special_M, special_m, vanish_time_L,
                     vanish_time_l)
from .config import ConfigError, ScenarioConfig, load_config
from .hamiltonians import HamiltonianModel, StructuralConstants, make_builtin
from .initial_data import InitialDatum, SubgradientSet, make_datum, theta_on_ball
from .solver import ClosedFormOracle, GridSpec, solve

__version__ = "0.1.0"
