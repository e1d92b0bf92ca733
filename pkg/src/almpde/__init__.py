"""Augmented Lagrangian solver for state-constrained parabolic optimal control.

The state equation y_t + A y = u with flux boundary control is discretized
by implicit Euler on a uniform rectangle grid; the pointwise constraint
y <= psi enters through a smooth quadratic penalty whose multiplier is
updated only on outer iterations that sufficiently reduce the combined
feasibility/complementarity residual.  Sub-problems are solved by successive
approximations with pointwise Hamiltonian minimization.
"""

from .grid import (Mesh, TimeField, BoundaryTimeField, ControlBounds,
                   build_mesh, integrate_omega_t, integrate_sigma_t,
                   sup_norm, positive_part, project_interval, extract_boundary,
                   space_slice_from_function)
from .operators import DiffusionCoefficients, DiscreteOperator, assemble_operator
from .solvers import solve_forward, solve_adjoint, LinearSolveError
from .cost import (ProblemSpec, cost_J, augmented_lagrangian,
                   multiplier_candidate, residual_index, kkt_residuals,
                   subproblem_objective)
from .msa import (MsaConfig, MsaResult, msa_solve, hamiltonian_omega,
                  hamiltonian_sigma, argmin_hamiltonian_u, argmin_hamiltonian_v,
                  grad_hamiltonian_u, grad_hamiltonian_v)
from .alm import AlmConfig, AlmState, AlmTrace, alm_step, alm_run
from .presets import PRESETS, build_problem
from .oracles import (OracleReport, analytic_decay_oracle, adjoint_identity_check,
                      projected_gradient_oracle, argmin_bruteforce_check, run_checks)

__version__ = "0.1.0"
