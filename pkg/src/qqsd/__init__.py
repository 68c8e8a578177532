"""Stochastic trajectory simulator for a dissipative qubit-qutrit pair.

A qutrit and a qubit couple collectively (with asymmetry kappa) to a common
zero-temperature bath with exponentially correlated noise.  The package
propagates pure-state trajectories driven by a time-local memory operator,
reconstructs the density matrix from trajectory ensembles, computes the
negativity of the qubit-qutrit split, and cross-validates everything against
a memoryless master-equation reference.
"""

from .backend import HAVE_NUMBA, default_backend
from .coeffs import (CoeffTables, CoefficientBlowupError, integrate_coeff_tables,
                     kernel_grid_check, memory_operator, step_noise_functionals)
from .ensemble import (DensityTrajectory, EnsembleError, observable_series,
                       run_ensemble)
from .entanglement import (negativity, partial_transpose_qubit, populations,
                           purity, schmidt_negativity)
from .markov import (ConvergenceError, SteadyStateResult, integrate_master,
                     lindblad_rhs, liouvillian, mixture_negativity,
                     rate_equations_rhs, scan_kappa, steady_state, step_master)
from .model import (DIM, ParameterError, SystemParams, build_basis_operators,
                    build_hamiltonian, build_lindblad, composite_index,
                    make_initial_state)
from .noise import (NoisePath, autocorrelation_stats, sample_ou_block,
                    sample_ou_path, sample_ou_values, stationary_variance,
                    trajectory_rng, update_shift)
from .trajectory import (TrajectoryFailure, TrajectoryRecord, run_trajectory,
                         step_linear, step_nonlinear)

__version__ = "0.1.0"

__all__ = [
    "CoeffTables", "CoefficientBlowupError", "ConvergenceError",
    "DensityTrajectory", "DIM", "EnsembleError", "HAVE_NUMBA", "NoisePath",
    "ParameterError", "SteadyStateResult", "SystemParams",
    "TrajectoryFailure", "TrajectoryRecord", "autocorrelation_stats",
    "build_basis_operators", "build_hamiltonian", "build_lindblad",
    "composite_index", "default_backend", "integrate_coeff_tables",
    "integrate_master", "kernel_grid_check", "lindblad_rhs", "liouvillian",
    "make_initial_state", "memory_operator", "mixture_negativity",
    "negativity", "observable_series", "partial_transpose_qubit",
    "populations", "purity", "rate_equations_rhs", "run_ensemble",
    "run_trajectory", "sample_ou_block", "sample_ou_path", "sample_ou_values",
    "scan_kappa", "schmidt_negativity", "stationary_variance", "steady_state",
    "step_linear", "step_master", "step_noise_functionals", "step_nonlinear",
    "trajectory_rng", "update_shift",
]
