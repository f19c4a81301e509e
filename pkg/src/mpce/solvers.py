"""Deterministic forward models for the three benchmarks.

All solvers are pure functions of the problem description: a second-order
finite-difference Poisson solve on [-1, 1], a cell-centered finite-volume
steady diffusion solve on the unit square, and a method-of-lines
Brusselator integrator with implicit diffusion and explicit reaction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solveh_banded
from scipy.sparse.linalg import cg, splu

from .grid import GridSpec, line_grid


@dataclass
class PoissonProblem:
    """-u'' = f on [-1, 1] with u(-1) = u(1) = 0, f given on the grid."""

    grid: GridSpec
    forcing: np.ndarray

    def __post_init__(self):
        if self.grid.dims != 1 or self.grid.n_points < 3:
            raise ValueError("Poisson problem needs a 1-D grid with >= 3 points")
        self.forcing = np.asarray(self.forcing, dtype=float)
        if self.forcing.shape != (self.grid.n_points,):
            raise ValueError("forcing length must match the grid")


@dataclass
class HeatProblem:
    """div(D grad u) = 0 on the unit square, n x n cells.

    Dirichlet u = 1 at the x = 0 face and u = 0 at x = 1; zero flux at the
    y faces. Diffusivity is given per cell, flattened x fastest.
    """

    n: int
    diffusivity: np.ndarray
    cg_rtol: float = 1e-10

    def __post_init__(self):
        self.diffusivity = np.asarray(self.diffusivity, dtype=float).reshape(-1)
        if self.diffusivity.shape != (self.n * self.n,):
            raise ValueError("diffusivity must have n*n entries")
        if np.any(self.diffusivity <= 0):
            raise ValueError("diffusivity must be strictly positive")


@dataclass
class BrusselatorProblem:
    """Two-species reaction-diffusion on the unit square with zero-flux walls.

    u starts at the constant a; v starts at the supplied field. The v field
    is recorded at `snapshots` equispaced times ending at the horizon.
    """

    n: int
    v0: np.ndarray
    a: float = 1.0
    b: float = 3.0
    d0: float = 1.0
    d1: float = 0.1
    horizon: float = 1.0
    snapshots: int = 10
    dt_report: float = 1e-2
    cfl: float = 0.25
    max_substep: float | None = None
    include_reaction: bool = True

    def __post_init__(self):
        self.v0 = np.asarray(self.v0, dtype=float).reshape(-1)
        if self.v0.shape != (self.n * self.n,):
            raise ValueError("v0 must have n*n entries")
        if min(self.a, self.b, self.d0, self.d1) < 0:
            raise ValueError("a, b, d0, d1 must be nonnegative")

    def snapshot_times(self) -> np.ndarray:
        dt = self.horizon / self.snapshots
        return dt * np.arange(1, self.snapshots + 1)


def solve_poisson1d(problem: PoissonProblem) -> np.ndarray:
    """Solution on the full grid (boundary values zero)."""
    return solve_poisson1d_many(problem.grid, problem.forcing[None, :])[0]


def solve_poisson1d_many(grid: GridSpec, F: np.ndarray) -> np.ndarray:
    """Solve -u'' = f for each row of F with one banded factorization."""
    t = grid.n_points
    (lo, hi), = grid.extents
    h = (hi - lo) / (t - 1)
    F = np.atleast_2d(np.asarray(F, dtype=float))
    # SPD tridiagonal system for the t-2 interior unknowns
    ab = np.zeros((2, t - 2))
    ab[0, 1:] = -1.0 / h**2
    ab[1, :] = 2.0 / h**2
    interior = solveh_banded(ab, F[:, 1:-1].T, lower=False)
    U = np.zeros_like(F)
    U[:, 1:-1] = interior.T
    return U


def _heat_system(n: int, D: np.ndarray) -> tuple[sp.csr_matrix, np.ndarray]:
    """Assemble the SPD finite-volume system with harmonic-mean faces."""
    Dg = D.reshape(n, n)  # [j, i]: j along y, i along x
    idx = np.arange(n * n).reshape(n, n)

    def harmonic(a, b):
        return 2.0 * a * b / (a + b)

    rows, cols, vals = [], [], []
    diag = np.zeros(n * n)
    rhs = np.zeros(n * n)

    # interior x faces between (j, i) and (j, i+1); face distance h, area h
    tx = harmonic(Dg[:, :-1], Dg[:, 1:])
    for j in range(n):
        for i in range(n - 1):
            p, q = idx[j, i], idx[j, i + 1]
            t = tx[j, i]
            diag[p] += t
            diag[q] += t
            rows += [p, q]
            cols += [q, p]
            vals += [-t, -t]
    # interior y faces
    ty = harmonic(Dg[:-1, :], Dg[1:, :])
    for j in range(n - 1):
        for i in range(n):
            p, q = idx[j, i], idx[j + 1, i]
            t = ty[j, i]
            diag[p] += t
            diag[q] += t
            rows += [p, q]
            cols += [q, p]
            vals += [-t, -t]
    # Dirichlet faces: half-cell distance h/2 -> transmissibility 2 D_cell
    for j in range(n):
        p = idx[j, 0]
        t = 2.0 * Dg[j, 0]
        diag[p] += t
        rhs[p] += t * 1.0  # u = 1 at x = 0
        q = idx[j, n - 1]
        t = 2.0 * Dg[j, n - 1]
        diag[q] += t  # u = 0 at x = 1 contributes nothing to rhs
    # zero-flux y walls contribute nothing

    rows += list(range(n * n))
    cols += list(range(n * n))
    vals += list(diag)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n))
    return A, rhs


def solve_heat2d(problem: HeatProblem) -> np.ndarray:
    """Cell-centered solution, flattened x fastest; values lie in [0, 1]."""
    n = problem.n
    A, rhs = _heat_system(n, problem.diffusivity)
    precond = sp.diags(1.0 / A.diagonal())
    maxiter = 10 * n * n
    u, info = cg(A, rhs, rtol=problem.cg_rtol, atol=0.0, maxiter=maxiter, M=precond)
    if info != 0:
        raise RuntimeError(f"CG failed to converge within {maxiter} iterations (info={info})")
    return u


def heat_boundary_fluxes(problem: HeatProblem, u: np.ndarray) -> tuple[float, float]:
    """Net flux entering at x = 0 and leaving at x = 1 (per unit depth)."""
    n = problem.n
    D = problem.diffusivity.reshape(n, n)
    ug = u.reshape(n, n)
    # transmissibility 2 D_cell (face area over half-cell distance cancels h)
    flux_in = float(np.sum(2.0 * D[:, 0] * (1.0 - ug[:, 0])))
    flux_out = float(np.sum(2.0 * D[:, -1] * (ug[:, -1] - 0.0)))
    return flux_in, flux_out


def neumann_laplacian(n: int) -> sp.csr_matrix:
    """5-point zero-flux Laplacian on n x n cell centers, spacing 1/n.

    The finite-volume form is symmetric with zero row and column sums, so
    backward Euler diffusion conserves the spatial mean exactly.
    """
    h = 1.0 / n
    main = np.full(n, -2.0)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    L1 = (sp.diags([off, main, off], [-1, 0, 1]) / h**2).tocsr()
    eye = sp.identity(n, format="csr")
    return (sp.kron(eye, L1) + sp.kron(L1, eye)).tocsr()


def _reaction_rates(u, v, a, b):
    du = a - (1.0 + b) * u + v * u**2
    dv = b * u - v * u**2
    return du, dv


def _reaction_rate_scale(u, v, b):
    """Largest reaction Jacobian entry magnitude over the grid."""
    j11 = np.abs(-(1.0 + b) + 2.0 * u * v)
    j12 = u**2
    j21 = np.abs(b - 2.0 * u * v)
    return max(j11.max(), j12.max(), j21.max(), 1e-12)


def solve_brusselator2d(problem: BrusselatorProblem) -> np.ndarray:
    """Integrate and return the v field at the snapshot times.

    Each reporting interval is split into substeps so that the explicit
    reaction satisfies dt * |reaction Jacobian| <= cfl; diffusion advances
    by backward Euler per substep with a cached sparse factorization.
    """
    n = problem.n
    L = neumann_laplacian(n) if n > 1 else sp.csr_matrix((1, 1))
    eye = sp.identity(n * n, format="csc")
    u = np.full(n * n, problem.a, dtype=float)
    v = problem.v0.copy()

    solver_cache: dict[float, tuple] = {}

    def diffusion_solvers(dt):
        if dt not in solver_cache:
            lu_u = splu((eye - dt * problem.d0 * L).tocsc()) if problem.d0 > 0 else None
            lu_v = splu((eye - dt * problem.d1 * L).tocsc()) if problem.d1 > 0 else None
            solver_cache[dt] = (lu_u, lu_v)
        return solver_cache[dt]

    snaps = problem.snapshot_times()
    out = np.empty((problem.snapshots, n * n))
    t = 0.0
    n_report = max(1, int(round(problem.horizon / problem.dt_report)))
    report_edges = problem.horizon * np.arange(1, n_report + 1) / n_report
    next_snap = 0
    for edge in report_edges:
        span = edge - t
        if problem.include_reaction:
            scale = _reaction_rate_scale(u, v, problem.b)
            dt_max = problem.cfl / scale
        else:
            dt_max = span
        if problem.max_substep is not None:
            dt_max = min(dt_max, problem.max_substep)
        m = max(1, int(np.ceil(span / dt_max - 1e-12)))
        dt = span / m
        lu_u, lu_v = diffusion_solvers(dt)
        for _ in range(m):
            if problem.include_reaction:
                with np.errstate(over="ignore", invalid="ignore"):
                    du, dv = _reaction_rates(u, v, problem.a, problem.b)
                    u = u + dt * du
                    v = v + dt * dv
            if lu_u is not None:
                u = lu_u.solve(u)
            if lu_v is not None:
                v = lu_v.solve(v)
            if not (np.isfinite(u).all() and np.isfinite(v).all()):
                raise RuntimeError(f"non-finite state at t={t + dt:.6g}")
            t += dt
        t = edge
        tol = 1e-9 * problem.horizon
        while next_snap < problem.snapshots and snaps[next_snap] <= edge + tol:
            out[next_snap] = v
            next_snap += 1
    if next_snap != problem.snapshots:
        raise RuntimeError("reporting grid did not cover all snapshot times")
    return out
