"""Successive-approximation solver for the penalized sub-problems.

Each iteration alternates: forward state solve, multiplier candidate,
backward adjoint solve, then a pointwise control update.  Because the
Hamiltonian densities

    H_omega = alpha/2 u^2 + 1/(2 rho) ((rho (y - psi) + mu)_+^2 - mu^2) + p u
    H_sigma = beta/2 v^2 + p v

are strictly convex quadratics in the controls, the pointwise minimizer over
a box is the closed-form clamp -p/alpha (resp. -p/beta); that is the default
update.  A projected-gradient update with a decaying learning rate is kept as
an alternative mode.  Iteration stops when the sup-norm control gap falls
below eps1.
"""

from dataclasses import dataclass

import numpy as np

from .grid import (TimeField, BoundaryTimeField, extract_boundary,
                   project_interval)
from .cost import multiplier_candidate
from .solvers import solve_forward, solve_adjoint, DEFAULT_LIN_TOL


class MsaDivergenceError(RuntimeError):
    """Inner iteration produced non-finite values."""

    def __init__(self, iteration, message):
        self.iteration = iteration
        super().__init__(f"inner solver diverged at iteration {iteration}: {message}")


@dataclass
class MsaConfig:
    eps1: float = 1e-4
    max_inner: int = 500
    update_mode: str = "exact_argmin"
    lr0: float = 1e-3
    lr_decay: float = 0.9
    lr_period: int = 100
    lin_tol: float = DEFAULT_LIN_TOL

    def __post_init__(self):
        if self.eps1 <= 0:
            raise ValueError(f"eps1 must be positive, got {self.eps1}")
        if self.max_inner < 1:
            raise ValueError(f"max_inner must be >= 1, got {self.max_inner}")
        if self.update_mode not in ("exact_argmin", "projected_gradient"):
            raise ValueError(f"unknown update_mode {self.update_mode!r}")
        if self.lr0 <= 0:
            raise ValueError(f"lr0 must be positive, got {self.lr0}")
        if not 0 < self.lr_decay <= 1:
            raise ValueError(f"lr_decay must lie in (0, 1], got {self.lr_decay}")
        if self.lr_period < 1:
            raise ValueError(f"lr_period must be >= 1, got {self.lr_period}")


@dataclass
class MsaResult:
    y: TimeField
    u: TimeField
    v: BoundaryTimeField
    p: TimeField
    mu_bar: TimeField
    inner_iters: int
    final_gap: float
    converged: bool


def learning_rate(config, iteration):
    """Step size at 1-based inner iteration: lr0 * decay^((i-1) // period)."""
    return config.lr0 * config.lr_decay ** ((iteration - 1) // config.lr_period)


def hamiltonian_omega(y, u, p, mu, rho, psi, alpha):
    shifted = np.maximum(rho * (y.values - psi.values) + mu.values, 0.0)
    vals = (0.5 * alpha * u.values ** 2
            + (shifted ** 2 - mu.values ** 2) / (2.0 * rho)
            + p.values * u.values)
    return TimeField(y.mesh, vals)


def hamiltonian_sigma(v, p_boundary, beta):
    return BoundaryTimeField(v.mesh, 0.5 * beta * v.values ** 2 + p_boundary.values * v.values)


def argmin_hamiltonian_u(p, alpha, bounds):
    """Exact pointwise minimizer of H_omega over [ua, ub]: clamp(-p/alpha)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return TimeField(p.mesh, np.clip(-p.values / alpha, bounds.ua.values, bounds.ub.values))


def argmin_hamiltonian_v(p_boundary, beta, bounds):
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return BoundaryTimeField(p_boundary.mesh,
                             np.clip(-p_boundary.values / beta,
                                     bounds.va.values, bounds.vb.values))


def grad_hamiltonian_u(u, p, alpha):
    """alpha u + p; the penalty term of H_omega does not depend on u."""
    return TimeField(u.mesh, alpha * u.values + p.values)


def grad_hamiltonian_v(v, p_boundary, beta):
    return BoundaryTimeField(v.mesh, beta * v.values + p_boundary.values)


def _sup_diff(a, b):
    return float(np.max(np.abs(a.values - b.values))) if a is not None else 0.0


def msa_solve(spec, rho, mu, init_u=None, init_v=None, config=None, backend=None):
    """Solve the sub-problem at (rho, mu) by successive approximations.

    Controls start from init_u/init_v (projected into the admissible box;
    zero when omitted).  Non-convergence within max_inner is reported through
    the converged flag, not an exception.
    """
    if config is None:
        config = MsaConfig()
    mesh = spec.mesh
    op = spec.operator()
    b = spec.bounds
    with_v = spec.boundary_control_enabled

    u = project_interval(init_u if init_u is not None else TimeField.zeros(mesh),
                         b.ua, b.ub)
    v = project_interval(init_v if init_v is not None else BoundaryTimeField.zeros(mesh),
                         b.va, b.vb)

    gap = np.inf
    converged = False
    iters = 0
    for i in range(1, config.max_inner + 1):
        iters = i
        try:
            y = solve_forward(mesh, op, u, v if with_v else None, spec.y0,
                              lin_tol=config.lin_tol, backend=backend)
            mu_bar = multiplier_candidate(y, spec.psi, mu, rho)
            p = solve_adjoint(mesh, op, mu_bar, y.values[-1] - spec.y_d,
                              lin_tol=config.lin_tol, backend=backend)
        except ValueError as exc:
            raise MsaDivergenceError(i, str(exc)) from exc
        if config.update_mode == "exact_argmin":
            u_new = argmin_hamiltonian_u(p, spec.alpha, b)
            v_new = argmin_hamiltonian_v(extract_boundary(p), spec.beta, b) if with_v else v
        else:
            lr = learning_rate(config, i)
            u_new = project_interval(
                TimeField(mesh, u.values - lr * grad_hamiltonian_u(u, p, spec.alpha).values),
                b.ua, b.ub)
            if with_v:
                pb = extract_boundary(p)
                v_new = project_interval(
                    BoundaryTimeField(mesh, v.values - lr * grad_hamiltonian_v(v, pb, spec.beta).values),
                    b.va, b.vb)
            else:
                v_new = v
        gap = _sup_diff(u_new, u)
        if with_v:
            gap = max(gap, _sup_diff(v_new, v))
        if not np.isfinite(gap):
            raise MsaDivergenceError(i, "non-finite control gap")
        u, v = u_new, v_new
        if gap <= config.eps1:
            converged = True
            break

    # consistency pass so the returned state/adjoint/multiplier match the
    # returned controls
    y = solve_forward(mesh, op, u, v if with_v else None, spec.y0,
                      lin_tol=config.lin_tol, backend=backend)
    mu_bar = multiplier_candidate(y, spec.psi, mu, rho)
    p = solve_adjoint(mesh, op, mu_bar, y.values[-1] - spec.y_d,
                      lin_tol=config.lin_tol, backend=backend)
    return MsaResult(y=y, u=u, v=v, p=p, mu_bar=mu_bar,
                     inner_iters=iters, final_gap=gap, converged=converged)
