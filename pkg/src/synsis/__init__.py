"""Extinction bounds and simulation for SIS epidemics with synergistic infection."""
from .errors import ConvergenceError, GraphParseError, StateSpaceTooLarge, ValidationError
from .graph import Graph, degree, load_builtin, parse_edge_list, read_edge_list
from .model import EpidemicState, ModelParams, homogeneous, infection_rate
from .moments import MomentIndex, MomentMatrix, build_moment_matrix, index_of_pair, index_of_single
from .sim import SimConfig, SimResult, estimate_infection_probabilities, run, run_many
from .spectral import lambda_max_adjacency, lambda_max_metzler, rho_sis_bar
from .exact import build_exact, exact_growth_rate, integrate_master_equation
from .sweep import SweepGrid, classify_boundaries, run_sweep, write_csv

__version__ = "0.1.0"
