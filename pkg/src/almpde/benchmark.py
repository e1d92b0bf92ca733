"""Timing comparison of the numba and numpy kernel backends.

Runs the forward time stepper on a moderately sized grid with a smooth
source and reports seconds per run and per implicit step for each backend.
"""

import time

import numpy as np

from . import kernels
from .grid import build_mesh, TimeField, space_slice_from_function
from .operators import DiffusionCoefficients, assemble_operator
from .solvers import solve_forward


def run_benchmark(nx=65, ny=65, nt=32, reps=3):
    mesh = build_mesh(nx, ny, nt, 1.0, 1.0, 0.1)
    op = assemble_operator(mesh, DiffusionCoefficients.unit(mesh))
    y0 = space_slice_from_function(mesh, lambda x, y: np.cos(np.pi * x) * np.cos(2 * np.pi * y))
    u = TimeField.from_function(mesh, lambda x, y, t: np.sin(np.pi * x) * np.exp(-t) + 0.0 * y)

    backends = ["numba", "numpy"] if kernels.HAS_NUMBA else ["numpy"]
    rows = []
    for backend in backends:
        solve_forward(mesh, op, u, None, y0, backend=backend)  # warm-up / JIT
        t0 = time.perf_counter()
        for _ in range(reps):
            solve_forward(mesh, op, u, None, y0, backend=backend)
        total = (time.perf_counter() - t0) / reps
        rows.append((backend, total, 1e3 * total / nt))
    return rows
