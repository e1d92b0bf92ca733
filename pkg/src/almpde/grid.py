"""Uniform space-time grids, nodal field containers, and trapezoidal quadrature.

The spatial domain is the rectangle [0, lx] x [0, ly] sampled on nx * ny
vertex-centered nodes; time is [0, T] sampled at nt + 1 levels.  A TimeField
stores one value per space-time node as a float64 array of shape
(nt + 1, ny, nx), indexed [m, j, i] with i the x-index.  A BoundaryTimeField
stores one value per boundary-node/time-level pair, following a fixed
counterclockwise walk of the rectangle boundary that owns each corner once.

Fields are immutable value objects: the backing arrays are marked read-only
and every operation returns a new field, so instances are safe to share.
"""

import numpy as np


class Mesh:
    """Uniform tensor grid with trapezoidal quadrature weights.

    Space weights w_space sum to the rectangle area exactly; time weights
    w_time sum to T.  Boundary nodes carry trapezoidal arc weights along the
    closed boundary walk (corners get (hx + hy) / 2), summing to the
    perimeter.
    """

    def __init__(self, nx, ny, nt, lx, ly, T):
        nx, ny, nt = int(nx), int(ny), int(nt)
        if nx < 3 or ny < 3:
            raise ValueError(f"need at least 3 nodes per spatial axis, got nx={nx}, ny={ny}")
        if nt < 1:
            raise ValueError(f"need at least 1 time step, got nt={nt}")
        if lx <= 0 or ly <= 0 or T <= 0:
            raise ValueError(f"domain extents must be positive, got lx={lx}, ly={ly}, T={T}")
        self.nx, self.ny, self.nt = nx, ny, nt
        self.lx, self.ly, self.T = float(lx), float(ly), float(T)
        self.hx = self.lx / (nx - 1)
        self.hy = self.ly / (ny - 1)
        self.dt = self.T / nt

        self.x = np.linspace(0.0, self.lx, nx)
        self.y = np.linspace(0.0, self.ly, ny)
        self.t = np.linspace(0.0, self.T, nt + 1)

        wx = np.ones(nx)
        wx[0] = wx[-1] = 0.5
        wy = np.ones(ny)
        wy[0] = wy[-1] = 0.5
        self.w_space = (self.hx * self.hy) * np.outer(wy, wx)  # (ny, nx)
        wt = np.full(nt + 1, self.dt)
        wt[0] *= 0.5
        wt[-1] *= 0.5
        self.w_time = wt

        bi, bj = _boundary_walk(nx, ny)
        self.boundary_i = bi
        self.boundary_j = bj
        self.n_boundary = bi.size
        self.w_arc = _boundary_arc_weights(bi, bj, self.hx, self.hy)

        for arr in (self.x, self.y, self.t, self.w_space, self.w_time,
                    self.boundary_i, self.boundary_j, self.w_arc):
            arr.flags.writeable = False

    @property
    def shape_space(self):
        return (self.ny, self.nx)

    @property
    def key(self):
        return (self.nx, self.ny, self.nt, self.lx, self.ly, self.T)

    def compatible(self, other):
        return isinstance(other, Mesh) and self.key == other.key

    def __repr__(self):
        return (f"Mesh(nx={self.nx}, ny={self.ny}, nt={self.nt}, "
                f"lx={self.lx}, ly={self.ly}, T={self.T})")


def _boundary_walk(nx, ny):
    """Counterclockwise boundary node indices, each node listed once."""
    i = []
    j = []
    for k in range(nx):              # bottom edge, left to right
        i.append(k)
        j.append(0)
    for k in range(1, ny):           # right edge, bottom to top
        i.append(nx - 1)
        j.append(k)
    for k in range(nx - 2, -1, -1):  # top edge, right to left
        i.append(k)
        j.append(ny - 1)
    for k in range(ny - 2, 0, -1):   # left edge, top to bottom
        i.append(0)
        j.append(k)
    return np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64)


def _boundary_arc_weights(bi, bj, hx, hy):
    """Trapezoidal weights along the closed boundary polyline."""
    nb = bi.size
    seg = np.empty(nb)  # seg[k]: length of edge from node k to node k+1 (cyclic)
    for k in range(nb):
        k2 = (k + 1) % nb
        seg[k] = abs(bi[k2] - bi[k]) * hx + abs(bj[k2] - bj[k]) * hy
    w = np.empty(nb)
    for k in range(nb):
        w[k] = 0.5 * (seg[k - 1] + seg[k])
    return w


def build_mesh(nx, ny, nt, lx, ly, T):
    """Construct a Mesh; raises ValueError on too-small or non-positive input."""
    return Mesh(nx, ny, nt, lx, ly, T)


def _freeze(values):
    arr = np.array(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


class TimeField:
    """Scalar function sampled on every space-time node, shape (nt+1, ny, nx)."""

    __slots__ = ("mesh", "values")

    def __init__(self, mesh, values):
        values = np.asarray(values, dtype=np.float64)
        expected = (mesh.nt + 1, mesh.ny, mesh.nx)
        if values.shape != expected:
            raise ValueError(f"TimeField shape {values.shape} != {expected} for {mesh!r}")
        if not np.all(np.isfinite(values)):
            raise ValueError("TimeField values must be finite")
        object.__setattr__(self, "mesh", mesh)
        object.__setattr__(self, "values", _freeze(values))

    def __setattr__(self, name, value):
        raise AttributeError("TimeField is immutable")

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros((mesh.nt + 1, mesh.ny, mesh.nx)))

    @classmethod
    def constant(cls, mesh, c):
        return cls(mesh, np.full((mesh.nt + 1, mesh.ny, mesh.nx), float(c)))

    @classmethod
    def from_function(cls, mesh, fn):
        """Sample fn(x, y, t) at all nodes (fn must broadcast over arrays)."""
        X = mesh.x[None, None, :]
        Y = mesh.y[None, :, None]
        Tm = mesh.t[:, None, None]
        vals = np.broadcast_to(fn(X, Y, Tm), (mesh.nt + 1, mesh.ny, mesh.nx))
        return cls(mesh, np.array(vals))

    def terminal(self):
        """The final-time slice as a (ny, nx) array."""
        return self.values[-1]


class BoundaryTimeField:
    """Scalar function on boundary-node x time-level samples, shape (nt+1, nb)."""

    __slots__ = ("mesh", "values")

    def __init__(self, mesh, values):
        values = np.asarray(values, dtype=np.float64)
        expected = (mesh.nt + 1, mesh.n_boundary)
        if values.shape != expected:
            raise ValueError(f"BoundaryTimeField shape {values.shape} != {expected}")
        if not np.all(np.isfinite(values)):
            raise ValueError("BoundaryTimeField values must be finite")
        object.__setattr__(self, "mesh", mesh)
        object.__setattr__(self, "values", _freeze(values))

    def __setattr__(self, name, value):
        raise AttributeError("BoundaryTimeField is immutable")

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros((mesh.nt + 1, mesh.n_boundary)))

    @classmethod
    def constant(cls, mesh, c):
        return cls(mesh, np.full((mesh.nt + 1, mesh.n_boundary), float(c)))

    @classmethod
    def from_function(cls, mesh, fn):
        """Sample fn(x, y, t) on the boundary walk."""
        xb = mesh.x[mesh.boundary_i][None, :]
        yb = mesh.y[mesh.boundary_j][None, :]
        tb = mesh.t[:, None]
        vals = np.broadcast_to(fn(xb, yb, tb), (mesh.nt + 1, mesh.n_boundary))
        return cls(mesh, np.array(vals))


def space_slice_from_function(mesh, fn):
    """Sample fn(x, y) on one spatial slice, returning a (ny, nx) array."""
    X = mesh.x[None, :]
    Y = mesh.y[:, None]
    return np.array(np.broadcast_to(fn(X, Y), (mesh.ny, mesh.nx)), dtype=np.float64)


def extract_boundary(f):
    """Restrict a TimeField to the boundary walk."""
    vals = f.values[:, f.mesh.boundary_j, f.mesh.boundary_i]
    return BoundaryTimeField(f.mesh, vals)


def _check_same_mesh(f, g):
    if not f.mesh.compatible(g.mesh):
        raise ValueError(f"mesh mismatch: {f.mesh!r} vs {g.mesh!r}")
    if type(f) is not type(g):
        raise ValueError(f"field kind mismatch: {type(f).__name__} vs {type(g).__name__}")


def integrate_omega_t(f, g):
    """Space-time inner product over the cylinder, trapezoidal in all variables."""
    _check_same_mesh(f, g)
    if not isinstance(f, TimeField):
        raise TypeError("integrate_omega_t expects TimeFields")
    slice_sums = np.einsum("mji,ji->m", f.values * g.values, f.mesh.w_space)
    return float(np.dot(f.mesh.w_time, slice_sums))


def integrate_sigma_t(f, g):
    """Boundary space-time inner product with arc-length trapezoidal weights."""
    _check_same_mesh(f, g)
    if not isinstance(f, BoundaryTimeField):
        raise TypeError("integrate_sigma_t expects BoundaryTimeFields")
    slice_sums = (f.values * g.values) @ f.mesh.w_arc
    return float(np.dot(f.mesh.w_time, slice_sums))


def l2_norm_omega_t(f):
    return np.sqrt(max(integrate_omega_t(f, f), 0.0))


def l2_norm_sigma_t(f):
    return np.sqrt(max(integrate_sigma_t(f, f), 0.0))


def sup_norm(f):
    """Max of |f| over all nodes (discrete sup norm on the closed cylinder)."""
    return float(np.max(np.abs(f.values)))


def positive_part(f):
    """Elementwise max(f, 0); idempotent."""
    return type(f)(f.mesh, np.maximum(f.values, 0.0))


def project_interval(f, lo, hi):
    """Elementwise clamp of f into [lo, hi].

    Degenerate intervals (lo == hi somewhere) are allowed and pin the value;
    lo > hi anywhere is an error.
    """
    _check_same_mesh(f, lo)
    _check_same_mesh(f, hi)
    if np.any(lo.values > hi.values):
        raise ValueError("invalid bounds: lower bound exceeds upper bound somewhere")
    return type(f)(f.mesh, np.clip(f.values, lo.values, hi.values))


class ControlBounds:
    """Pointwise box bounds for the distributed and boundary controls."""

    __slots__ = ("ua", "ub", "va", "vb")

    def __init__(self, ua, ub, va, vb):
        _check_same_mesh(ua, ub)
        _check_same_mesh(va, vb)
        if not isinstance(ua, TimeField) or not isinstance(va, BoundaryTimeField):
            raise TypeError("ua/ub must be TimeFields and va/vb BoundaryTimeFields")
        if np.any(ua.values > ub.values):
            raise ValueError("invalid control bounds: ua > ub somewhere")
        if np.any(va.values > vb.values):
            raise ValueError("invalid control bounds: va > vb somewhere")
        object.__setattr__(self, "ua", ua)
        object.__setattr__(self, "ub", ub)
        object.__setattr__(self, "va", va)
        object.__setattr__(self, "vb", vb)

    def __setattr__(self, name, value):
        raise AttributeError("ControlBounds is immutable")

    @classmethod
    def constant(cls, mesh, ua, ub, va=-1.0, vb=1.0):
        return cls(TimeField.constant(mesh, ua), TimeField.constant(mesh, ub),
                   BoundaryTimeField.constant(mesh, va), BoundaryTimeField.constant(mesh, vb))


# ---------------------------------------------------------------------------
# Plain-text CSV field dumps.  One header line with the field name and mesh
# dims, then one row per time slice: m, t, values...  Values are written with
# 17 significant digits so a dump/load round trip is bit-identical.
# ---------------------------------------------------------------------------

def _fmt(v):
    return f"{v:.17g}"


def dump_time_field(f, name, path):
    mesh = f.mesh
    with open(path, "w") as fh:
        fh.write(f"field,{name},nx,{mesh.nx},ny,{mesh.ny},nt,{mesh.nt}\n")
        for m in range(mesh.nt + 1):
            row = [str(m), _fmt(mesh.t[m])] + [_fmt(v) for v in f.values[m].ravel()]
            fh.write(",".join(row) + "\n")


def dump_boundary_field(f, name, path):
    mesh = f.mesh
    with open(path, "w") as fh:
        fh.write(f"field,{name},nb,{mesh.n_boundary},nt,{mesh.nt}\n")
        for m in range(mesh.nt + 1):
            row = [str(m), _fmt(mesh.t[m])] + [_fmt(v) for v in f.values[m]]
            fh.write(",".join(row) + "\n")


def dump_space_slice(values, name, path, mesh):
    """Write a single spatial slice (nt recorded as 0, one data row)."""
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write(f"field,{name},nx,{mesh.nx},ny,{mesh.ny},nt,0\n")
        row = ["0", _fmt(0.0)] + [_fmt(v) for v in values.ravel()]
        fh.write(",".join(row) + "\n")


def _read_dump(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty field dump")
    head = lines[0].split(",")
    if len(head) < 2 or head[0] != "field":
        raise ValueError(f"{path}: malformed field dump header")
    meta = {"name": head[1]}
    for key, val in zip(head[2::2], head[3::2]):
        meta[key] = int(val)
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        rows.append(np.array([float(v) for v in parts[2:]]))
    return meta, rows


def load_time_field(path, mesh):
    meta, rows = _read_dump(path)
    if meta.get("nx") != mesh.nx or meta.get("ny") != mesh.ny or meta.get("nt") != mesh.nt:
        raise ValueError(f"{path}: dump dims {meta} do not match {mesh!r}")
    vals = np.stack(rows).reshape(mesh.nt + 1, mesh.ny, mesh.nx)
    return TimeField(mesh, vals)


def load_boundary_field(path, mesh):
    meta, rows = _read_dump(path)
    if meta.get("nb") != mesh.n_boundary or meta.get("nt") != mesh.nt:
        raise ValueError(f"{path}: dump dims {meta} do not match boundary of {mesh!r}")
    return BoundaryTimeField(mesh, np.stack(rows))


def load_space_slice(path, mesh):
    meta, rows = _read_dump(path)
    if meta.get("nx") != mesh.nx or meta.get("ny") != mesh.ny:
        raise ValueError(f"{path}: dump dims {meta} do not match {mesh!r}")
    if len(rows) != 1:
        raise ValueError(f"{path}: expected a single-slice dump, got {len(rows)} rows")
    return rows[0].reshape(mesh.ny, mesh.nx)
