"""Implicit-Euler marching for the forward state and backward adjoint equations.

Forward step m (m = 1..nt):

    (M + dt A) y_m = M y_{m-1} + dt M u_m + dt B v_m

where M is the diagonal trapezoidal mass matrix, A the flux stencil and B
scatters the boundary control with arc-length weights (the natural flux
load of the finite-volume closure).  The backward sweep transposes the same
propagator:

    p_nt = terminal,   (M + dt A) p_m = M p_{m+1} + dt M mu_m,  m = nt-1..0.

Each step is an SPD solve handled by the CG kernels, warm-started from the
neighboring time slice.
"""

import numpy as np

from . import kernels
from .grid import TimeField

DEFAULT_LIN_TOL = 1e-10


class LinearSolveError(RuntimeError):
    """CG failed to reach the requested relative residual."""

    def __init__(self, step, iterations, residual, tol):
        self.step = step
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"linear solve at time step {step} stopped at relative residual "
            f"{residual:.3e} > {tol:.1e} after {iterations} iterations")


def _max_iter(mesh, max_iter):
    return 10 * mesh.nx * mesh.ny if max_iter is None else int(max_iter)


def _boundary_load(mesh, v_slice):
    load = np.zeros(mesh.shape_space)
    load[mesh.boundary_j, mesh.boundary_i] = mesh.w_arc * v_slice
    return load


def solve_forward(mesh, op, u, v, y0, lin_tol=DEFAULT_LIN_TOL, max_iter=None, backend=None):
    """March the state equation forward from the initial slice y0.

    u is a TimeField source, v an optional BoundaryTimeField flux (None means
    homogeneous Neumann), y0 a (ny, nx) array.  Returns the state TimeField.
    """
    y0 = np.asarray(y0, dtype=np.float64)
    if y0.shape != mesh.shape_space:
        raise ValueError(f"initial slice shape {y0.shape} != {mesh.shape_space}")
    maxiter = _max_iter(mesh, max_iter)
    mass = mesh.w_space
    dt = mesh.dt
    y = np.empty((mesh.nt + 1, mesh.ny, mesh.nx))
    y[0] = y0
    for m in range(1, mesh.nt + 1):
        rhs = mass * (y[m - 1] + dt * u.values[m])
        if v is not None:
            rhs += dt * _boundary_load(mesh, v.values[m])
        x, iters, rel = kernels.solve_shifted(op.cx, op.cy, mass, dt, rhs, y[m - 1],
                                              lin_tol, maxiter, backend=backend)
        if rel > lin_tol:
            raise LinearSolveError(m, iters, rel, lin_tol)
        y[m] = x
    return TimeField(mesh, y)


def solve_adjoint(mesh, op, mu, terminal, lin_tol=DEFAULT_LIN_TOL, max_iter=None, backend=None):
    """March the adjoint equation backward from the assigned terminal slice.

    mu is the TimeField source (the multiplier candidate) and terminal a
    (ny, nx) array; the boundary closure is homogeneous.
    """
    terminal = np.asarray(terminal, dtype=np.float64)
    if terminal.shape != mesh.shape_space:
        raise ValueError(f"terminal slice shape {terminal.shape} != {mesh.shape_space}")
    maxiter = _max_iter(mesh, max_iter)
    mass = mesh.w_space
    dt = mesh.dt
    p = np.empty((mesh.nt + 1, mesh.ny, mesh.nx))
    p[mesh.nt] = terminal
    for m in range(mesh.nt - 1, -1, -1):
        rhs = mass * (p[m + 1] + dt * mu.values[m])
        x, iters, rel = kernels.solve_shifted(op.cx, op.cy, mass, dt, rhs, p[m + 1],
                                              lin_tol, maxiter, backend=backend)
        if rel > lin_tol:
            raise LinearSolveError(m, iters, rel, lin_tol)
        p[m] = x
    return TimeField(mesh, p)
