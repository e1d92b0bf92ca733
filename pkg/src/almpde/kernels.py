"""Stencil matvec and conjugate-gradient kernels, numba-jitted with a numpy fallback.

Every implicit time step solves (diag(mass) + dt * A) x = b where A is the
5-point flux stencil held as edge conductance arrays cx (ny, nx-1) and
cy (ny-1, nx).  These solves dominate runtime, so the kernels exist twice:
a numba @njit version with explicit loops and a vectorized numpy version.

Backend selection: the ALMPDE_BACKEND environment variable may be set to
"numba", "numpy", or "auto" (default).  "auto" picks numba when importable.
All entry points also take an explicit backend argument that overrides the
environment choice, which is what the benchmark and the equivalence tests
use.
"""

import os

import numpy as np

ENV_VAR = "ALMPDE_BACKEND"

try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn
        return deco


def default_backend():
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise RuntimeError(f"{ENV_VAR}=numba requested but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"{ENV_VAR} must be 'auto', 'numba' or 'numpy', got {choice!r}")


def resolve_backend(backend=None):
    if backend is None:
        return default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {backend!r}")
    if backend == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------

def _apply_a_numpy(cx, cy, f):
    out = np.zeros_like(f)
    fx = cx * (f[:, :-1] - f[:, 1:])
    out[:, :-1] += fx
    out[:, 1:] -= fx
    fy = cy * (f[:-1, :] - f[1:, :])
    out[:-1, :] += fy
    out[1:, :] -= fy
    return out


def _cg_numpy(cx, cy, mass, dt, b, x, tol, maxiter):
    bnorm2 = float(np.sum(b * b))
    if bnorm2 == 0.0:
        x[...] = 0.0
        return 0, 0.0
    r = b - (mass * x + dt * _apply_a_numpy(cx, cy, x))
    rs = float(np.sum(r * r))
    thresh = tol * tol * bnorm2
    if rs <= thresh:
        return 0, np.sqrt(rs / bnorm2)
    p = r.copy()
    for it in range(1, maxiter + 1):
        Kp = mass * p + dt * _apply_a_numpy(cx, cy, p)
        alpha = rs / float(np.sum(p * Kp))
        x += alpha * p
        r -= alpha * Kp
        rs_new = float(np.sum(r * r))
        if rs_new <= thresh:
            return it, np.sqrt(rs_new / bnorm2)
        p *= rs_new / rs
        p += r
        rs = rs_new
    return maxiter, np.sqrt(rs / bnorm2)


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

@njit(cache=True)
def _apply_k_numba(cx, cy, mass, dt, f, out):
    ny, nx = f.shape
    for j in range(ny):
        for i in range(nx):
            v = f[j, i]
            acc = mass[j, i] * v
            if i > 0:
                acc += dt * cx[j, i - 1] * (v - f[j, i - 1])
            if i < nx - 1:
                acc += dt * cx[j, i] * (v - f[j, i + 1])
            if j > 0:
                acc += dt * cy[j - 1, i] * (v - f[j - 1, i])
            if j < ny - 1:
                acc += dt * cy[j, i] * (v - f[j + 1, i])
            out[j, i] = acc


@njit(cache=True)
def _apply_a_numba(cx, cy, f, out):
    ny, nx = f.shape
    for j in range(ny):
        for i in range(nx):
            v = f[j, i]
            acc = 0.0
            if i > 0:
                acc += cx[j, i - 1] * (v - f[j, i - 1])
            if i < nx - 1:
                acc += cx[j, i] * (v - f[j, i + 1])
            if j > 0:
                acc += cy[j - 1, i] * (v - f[j - 1, i])
            if j < ny - 1:
                acc += cy[j, i] * (v - f[j + 1, i])
            out[j, i] = acc


@njit(cache=True)
def _cg_numba(cx, cy, mass, dt, b, x, tol, maxiter):
    ny, nx = b.shape
    bnorm2 = 0.0
    for j in range(ny):
        for i in range(nx):
            bnorm2 += b[j, i] * b[j, i]
    if bnorm2 == 0.0:
        for j in range(ny):
            for i in range(nx):
                x[j, i] = 0.0
        return 0, 0.0
    Kx = np.empty_like(b)
    _apply_k_numba(cx, cy, mass, dt, x, Kx)
    r = np.empty_like(b)
    rs = 0.0
    for j in range(ny):
        for i in range(nx):
            r[j, i] = b[j, i] - Kx[j, i]
            rs += r[j, i] * r[j, i]
    thresh = tol * tol * bnorm2
    if rs <= thresh:
        return 0, np.sqrt(rs / bnorm2)
    p = r.copy()
    Kp = np.empty_like(b)
    for it in range(1, maxiter + 1):
        _apply_k_numba(cx, cy, mass, dt, p, Kp)
        denom = 0.0
        for j in range(ny):
            for i in range(nx):
                denom += p[j, i] * Kp[j, i]
        alpha = rs / denom
        rs_new = 0.0
        for j in range(ny):
            for i in range(nx):
                x[j, i] += alpha * p[j, i]
                r[j, i] -= alpha * Kp[j, i]
                rs_new += r[j, i] * r[j, i]
        if rs_new <= thresh:
            return it, np.sqrt(rs_new / bnorm2)
        beta = rs_new / rs
        for j in range(ny):
            for i in range(nx):
                p[j, i] = r[j, i] + beta * p[j, i]
        rs = rs_new
    return maxiter, np.sqrt(rs / bnorm2)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def apply_operator(cx, cy, f, backend=None):
    """Apply the flux stencil A to one spatial slice."""
    backend = resolve_backend(backend)
    f = np.ascontiguousarray(f, dtype=np.float64)
    if backend == "numba":
        out = np.empty_like(f)
        _apply_a_numba(cx, cy, f, out)
        return out
    return _apply_a_numpy(cx, cy, f)


def solve_shifted(cx, cy, mass, dt, b, x0, tol, maxiter, backend=None):
    """CG solve of (diag(mass) + dt * A) x = b starting from x0.

    Returns (x, iterations, relative_residual); the caller decides whether a
    residual above tol is an error.
    """
    backend = resolve_backend(backend)
    x = np.array(x0, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if backend == "numba":
        iters, rel = _cg_numba(cx, cy, mass, dt, b, x, tol, maxiter)
    else:
        iters, rel = _cg_numpy(cx, cy, mass, dt, b, x, tol, maxiter)
    return x, int(iters), float(rel)
