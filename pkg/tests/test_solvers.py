import numpy as np
import pytest
from scipy.integrate import solve_ivp

from mpce.grid import cell_center_grid, line_grid
from mpce.solvers import (
    BrusselatorProblem,
    HeatProblem,
    PoissonProblem,
    heat_boundary_fluxes,
    neumann_laplacian,
    solve_brusselator2d,
    solve_heat2d,
    solve_poisson1d,
    solve_poisson1d_many,
)


class TestPoisson:
    def test_zero_forcing(self):
        g = line_grid(-1, 1, 64)
        u = solve_poisson1d(PoissonProblem(g, np.zeros(64)))
        assert np.allclose(u, 0.0)

    def test_sine_analytic(self):
        g = line_grid(-1, 1, 1024)
        x = g.axes()[0]
        u = solve_poisson1d(PoissonProblem(g, np.sin(np.pi * x)))
        assert np.abs(u - np.sin(np.pi * x) / np.pi**2).max() < 1e-4

    def test_quadratic_exact(self):
        g = line_grid(-1, 1, 200)
        x = g.axes()[0]
        u = solve_poisson1d(PoissonProblem(g, np.ones(200)))
        assert np.abs(u - (1 - x**2) / 2).max() < 1e-6

    def test_second_order_convergence(self):
        errs = []
        sizes = (64, 128, 256)
        for t in sizes:
            g = line_grid(-1, 1, t)
            x = g.axes()[0]
            u = solve_poisson1d(PoissonProblem(g, np.sin(np.pi * x)))
            errs.append(np.abs(u - np.sin(np.pi * x) / np.pi**2).max())
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        # halving h needs the observed order in [1.8, 2.2]
        assert all(1.8 <= o <= 2.2 for o in orders)

    def test_batched_solve_matches_single(self):
        g = line_grid(-1, 1, 80)
        rng = np.random.default_rng(0)
        F = rng.normal(size=(5, 80))
        U = solve_poisson1d_many(g, F)
        for i in range(5):
            assert np.allclose(U[i], solve_poisson1d(PoissonProblem(g, F[i])), atol=1e-14)

    def test_deterministic(self):
        g = line_grid(-1, 1, 64)
        f = np.random.default_rng(1).normal(size=64)
        a = solve_poisson1d(PoissonProblem(g, f))
        b = solve_poisson1d(PoissonProblem(g, f))
        assert np.array_equal(a, b)

    def test_validation(self):
        with pytest.raises(ValueError):
            PoissonProblem(line_grid(-1, 1, 2), np.zeros(2))
        with pytest.raises(ValueError):
            PoissonProblem(line_grid(-1, 1, 8), np.zeros(9))


class TestHeat:
    def test_constant_diffusivity_linear_profile(self):
        n = 32
        u = solve_heat2d(HeatProblem(n=n, diffusivity=np.full(n * n, 2.7)))
        xc = cell_center_grid(n).points()[:, 0]
        assert np.abs(u - (1.0 - xc)).max() < 1e-8

    def test_two_slab_resistor_oracle(self):
        n = 32
        d1, d2 = 0.5, 4.0
        xc = cell_center_grid(n).points()[:, 0]
        D = np.where(xc < 0.5, d1, d2)
        u = solve_heat2d(HeatProblem(n=n, diffusivity=D))
        # series resistance: flux q = 1 / (R1 + R2), u continuous piecewise linear
        r1, r2 = 0.5 / d1, 0.5 / d2
        q = 1.0 / (r1 + r2)
        resistance_to = np.where(xc < 0.5, xc / d1, r1 + (xc - 0.5) / d2)
        u_exact = 1.0 - q * resistance_to
        assert np.abs(u - u_exact).max() < 1e-3
        # interface value carries the inverse-diffusivity weighting
        u_mid = 1.0 - q * r1
        assert np.isclose(u_mid, (1.0 / d2) / (1.0 / d1 + 1.0 / d2))

    def test_maximum_principle(self):
        n = 16
        rng = np.random.default_rng(2)
        D = np.exp(rng.normal(size=n * n))
        u = solve_heat2d(HeatProblem(n=n, diffusivity=D))
        assert u.min() >= -1e-10 and u.max() <= 1.0 + 1e-10

    def test_global_flux_balance(self):
        n = 24
        rng = np.random.default_rng(3)
        D = np.exp(rng.normal(size=n * n))
        prob = HeatProblem(n=n, diffusivity=D, cg_rtol=1e-12)
        u = solve_heat2d(prob)
        fin, fout = heat_boundary_fluxes(prob, u)
        assert abs(fin - fout) / abs(fin) < 1e-8

    def test_positive_diffusivity_required(self):
        with pytest.raises(ValueError):
            HeatProblem(n=4, diffusivity=np.zeros(16))

    def test_cg_failure_raises(self):
        n = 8
        # unreachable tolerance forces the iteration cap
        prob = HeatProblem(n=n, diffusivity=np.ones(n * n), cg_rtol=1e-300)
        with pytest.raises(RuntimeError, match="CG"):
            solve_heat2d(prob)


def _reaction_rhs(t, y, a, b):
    u, v = y
    return [a - (1 + b) * u + v * u**2, b * u - v * u**2]


class TestBrusselator:
    def test_fixed_point_stasis(self):
        n = 8
        a, b = 1.0, 3.0
        prob = BrusselatorProblem(
            n=n, v0=np.full(n * n, b / a), a=a, b=b, horizon=0.1, snapshots=2, dt_report=0.01
        )
        traj = solve_brusselator2d(prob)
        assert np.abs(traj - b / a).max() < 1e-6

    def test_reaction_only_matches_ode_oracle(self):
        a, b = 1.0, 3.0
        v0 = 2.2
        prob = BrusselatorProblem(
            n=1, v0=np.array([v0]), a=a, b=b, d0=0.0, d1=0.0,
            horizon=0.01, snapshots=1, dt_report=1e-3, max_substep=1e-6,
        )
        traj = solve_brusselator2d(prob)
        sol = solve_ivp(
            _reaction_rhs, (0, 0.01), [a, v0], args=(a, b), rtol=1e-12, atol=1e-12
        )
        assert abs(traj[-1, 0] - sol.y[1, -1]) < 1e-6

    def test_step_halving_self_convergence(self):
        n = 12
        rng = np.random.default_rng(4)
        v0 = 3.0 + 0.5 * rng.normal(size=n * n)
        base = dict(n=n, v0=v0, horizon=1.0, snapshots=10, dt_report=1e-2)
        coarse = solve_brusselator2d(BrusselatorProblem(**base, max_substep=1e-2))
        fine = solve_brusselator2d(BrusselatorProblem(**base, max_substep=5e-3))
        rel = np.linalg.norm(coarse[-1] - fine[-1]) / np.linalg.norm(fine[-1])
        assert rel < 1e-3

    def test_pure_diffusion_conserves_mean(self):
        n = 10
        rng = np.random.default_rng(5)
        v0 = rng.normal(size=n * n)
        prob = BrusselatorProblem(
            n=n, v0=v0, a=0.0, b=0.0, horizon=0.05, snapshots=5, dt_report=1e-2,
            include_reaction=False,
        )
        traj = solve_brusselator2d(prob)
        means = traj.mean(axis=1)
        assert np.abs(means - v0.mean()).max() < 1e-10

    def test_neumann_laplacian_row_and_column_sums(self):
        L = neumann_laplacian(6)
        assert np.abs(np.asarray(L.sum(axis=1))).max() < 1e-12
        assert np.abs(np.asarray(L.sum(axis=0))).max() < 1e-12
        assert (L - L.T).nnz == 0

    def test_deterministic(self):
        n = 6
        v0 = np.random.default_rng(6).normal(size=n * n)
        a = solve_brusselator2d(BrusselatorProblem(n=n, v0=v0, horizon=0.1, snapshots=2, dt_report=0.01))
        b = solve_brusselator2d(BrusselatorProblem(n=n, v0=v0, horizon=0.1, snapshots=2, dt_report=0.01))
        assert np.array_equal(a, b)

    def test_snapshot_times(self):
        prob = BrusselatorProblem(n=2, v0=np.zeros(4), horizon=1.0, snapshots=10, dt_report=1e-2)
        assert np.allclose(prob.snapshot_times(), np.arange(1, 11) / 10)

    def test_nonfinite_state_aborts(self):
        n = 4
        # gigantic reaction state without substepping blows up quickly
        prob = BrusselatorProblem(
            n=n, v0=np.full(n * n, 1e160), a=1.0, b=3.0, d0=0.0, d1=0.0,
            horizon=0.1, snapshots=1, dt_report=0.1, cfl=1e18, max_substep=0.1,
        )
        with pytest.raises(RuntimeError, match="non-finite"):
            solve_brusselator2d(prob)
