"""qrelax: MIP relaxation compiler and verification toolkit for
non-convex mixed-integer quadratically constrained quadratic programs."""

from .bilinear import EnvelopeOracle, Method, RelaxationConfig
from .compiler import count_binaries, dual_bound, relax_problem
from .milp import MilpModel, lp_relax, solve_builtin, solve_external, write_mps
from .model import Miqcqp, parse_instance
from .sawtooth import SawtoothDepths, epi_lower, pwl_square, tooth

__all__ = [
    "EnvelopeOracle", "Method", "RelaxationConfig",
    "count_binaries", "dual_bound", "relax_problem",
    "MilpModel", "lp_relax", "solve_builtin", "solve_external", "write_mps",
    "Miqcqp", "parse_instance",
    "SawtoothDepths", "epi_lower", "pwl_square", "tooth",
]

__version__ = "0.1.0"
