"""Finite-volume assembly of the diagonal-coefficient elliptic operator.

The operator -d/dx(a11 dy/dx) - d/dy(a22 dy/dy) with natural (Neumann) flux
boundary conditions is discretized on the vertex-centered grid by integrating
fluxes over the dual cells: full cells at interior nodes, half cells along
edges, quarter cells at corners.  This yields a symmetric positive
semidefinite stiffness matrix A with zero row sums, paired with the diagonal
mass matrix of the trapezoidal space weights.
"""

import numpy as np
import scipy.sparse as sp

from . import kernels


class DiffusionCoefficients:
    """Nodal diagonal diffusion tensor with a stored ellipticity constant."""

    def __init__(self, mesh, a11, a22):
        self.mesh = mesh
        self.a11 = np.array(np.broadcast_to(np.asarray(a11, dtype=np.float64),
                                            mesh.shape_space))
        self.a22 = np.array(np.broadcast_to(np.asarray(a22, dtype=np.float64),
                                            mesh.shape_space))
        theta = min(self.a11.min(), self.a22.min())
        if not np.isfinite(theta) or theta <= 0.0:
            raise ValueError(f"coefficients must be uniformly elliptic, min = {theta}")
        self.theta = float(theta)
        self.a11.flags.writeable = False
        self.a22.flags.writeable = False

    @classmethod
    def unit(cls, mesh):
        """Constant-Laplacian preset a11 = a22 = 1."""
        return cls(mesh, 1.0, 1.0)


class DiscreteOperator:
    """5-point flux stencil with Neumann closure.

    Holds the edge conductances consumed by the CG kernels, the diagonal
    mass weights, and (lazily) a CSR copy for whole-matrix checks.
    """

    def __init__(self, mesh, coeffs, cx, cy):
        self.mesh = mesh
        self.coeffs = coeffs
        self.cx = cx
        self.cy = cy
        self.mass = mesh.w_space
        self.inv_mass = 1.0 / mesh.w_space
        self.inv_mass.flags.writeable = False
        for arr in (self.cx, self.cy):
            arr.flags.writeable = False
        self._csr = None

    @property
    def n(self):
        return self.mesh.nx * self.mesh.ny

    def apply(self, f, backend=None):
        """A f for one spatial slice f of shape (ny, nx)."""
        return kernels.apply_operator(self.cx, self.cy, f, backend=backend)

    def normalized_apply(self, f, backend=None):
        """M^{-1} A f, the operator entering the implicit-Euler step."""
        return self.inv_mass * self.apply(f, backend=backend)

    def as_csr(self):
        if self._csr is None:
            self._csr = self._assemble_csr()
        return self._csr

    def _assemble_csr(self):
        nx, ny = self.mesh.nx, self.mesh.ny
        idx = np.arange(nx * ny).reshape(ny, nx)
        rows, cols, vals = [], [], []

        def add_edges(r1, r2, c):
            r1 = r1.ravel()
            r2 = r2.ravel()
            c = c.ravel()
            rows.extend([r1, r2, r1, r2])
            cols.extend([r2, r1, r1, r2])
            vals.extend([-c, -c, c, c])

        add_edges(idx[:, :-1], idx[:, 1:], self.cx)
        add_edges(idx[:-1, :], idx[1:, :], self.cy)
        A = sp.coo_matrix((np.concatenate(vals),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(nx * ny, nx * ny))
        return A.tocsr()


def assemble_operator(mesh, coeffs):
    """Build the DiscreteOperator for the given coefficients.

    Edge conductances combine the arithmetic mean of the nodal coefficient
    with the transverse dual-cell width (halved along the boundary rows and
    columns), divided by the edge length.
    """
    if not coeffs.mesh.compatible(mesh):
        raise ValueError("coefficient grid does not match mesh")
    if coeffs.theta <= 0.0:
        raise ValueError("coefficients are not elliptic")
    nx, ny, hx, hy = mesh.nx, mesh.ny, mesh.hx, mesh.hy
    wx = np.ones(nx)
    wx[0] = wx[-1] = 0.5
    wy = np.ones(ny)
    wy[0] = wy[-1] = 0.5
    a11_edge = 0.5 * (coeffs.a11[:, :-1] + coeffs.a11[:, 1:])
    a22_edge = 0.5 * (coeffs.a22[:-1, :] + coeffs.a22[1:, :])
    cx = a11_edge * (hy * wy[:, None]) / hx   # (ny, nx-1)
    cy = a22_edge * (hx * wx[None, :]) / hy   # (ny-1, nx)
    return DiscreteOperator(mesh, coeffs, cx, cy)
