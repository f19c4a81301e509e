import numpy as np
import pytest

from mpce.pce import (
    InputScaler,
    PceSurrogate,
    design_matrix,
    hermite_orthonormal,
    legendre_orthonormal,
    pce_fit,
    pce_moments,
    pce_predict,
    total_degree_set,
    total_degree_size,
)


class TestMultiIndexSet:
    def test_k2_smax2_enumeration(self):
        ms = total_degree_set(2, 2)
        assert ms.indices.tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
        assert ms.size == 6

    def test_k15_smax2_cardinality(self):
        assert total_degree_set(15, 2).size == 136

    def test_smax0_single_zero_tuple(self):
        ms = total_degree_set(4, 0)
        assert ms.size == 1
        assert ms.indices.tolist() == [[0, 0, 0, 0]]

    def test_closed_form_cardinality_exhaustive(self):
        # acceptance range: 1 <= k <= 25, 0 <= s_max <= 6
        for k in range(1, 26):
            for s_max in range(0, 7):
                ms = total_degree_set(k, s_max)
                assert ms.size == total_degree_size(k, s_max)
                assert len(np.unique(ms.indices, axis=0)) == ms.size
                assert int(ms.indices.sum(axis=1).max()) <= s_max

    def test_validation(self):
        with pytest.raises(ValueError):
            total_degree_set(0, 2)
        with pytest.raises(ValueError):
            total_degree_set(2, -1)


class TestOrthonormalPolynomials:
    def test_degree0_is_one(self):
        x = np.linspace(-1, 1, 11)
        assert np.allclose(legendre_orthonormal(0, x), 1.0)

    def test_degree1_scaling(self):
        x = np.linspace(-1, 1, 11)
        assert np.allclose(legendre_orthonormal(1, x), np.sqrt(3) * x)
        # integral of (sqrt(3) x)^2 / 2 over [-1, 1] equals 1
        nodes, weights = np.polynomial.legendre.leggauss(8)
        val = 0.5 * np.sum(weights * legendre_orthonormal(1, nodes) ** 2)
        assert np.isclose(val, 1.0, atol=1e-14)

    def test_quadrature_orthonormality_to_degree8(self):
        nodes, weights = np.polynomial.legendre.leggauss(20)
        for s in range(9):
            for t in range(9):
                val = 0.5 * np.sum(
                    weights * legendre_orthonormal(s, nodes) * legendre_orthonormal(t, nodes)
                )
                assert abs(val - (1.0 if s == t else 0.0)) < 1e-12

    def test_out_of_domain_rejected(self):
        with pytest.raises(ValueError):
            legendre_orthonormal(2, np.array([1.5]))

    def test_hermite_quadrature_orthonormality(self):
        nodes, weights = np.polynomial.hermite_e.hermegauss(30)
        weights = weights / np.sqrt(2 * np.pi)  # normalize the N(0,1) measure
        for s in range(7):
            for t in range(7):
                val = np.sum(weights * hermite_orthonormal(s, nodes) * hermite_orthonormal(t, nodes))
                assert abs(val - (1.0 if s == t else 0.0)) < 1e-10


class TestInputScaler:
    def test_margin_expansion_and_mapping(self):
        Z = np.array([[0.0], [2.0]])
        sc = InputScaler.fit(Z, margin=0.01)
        zeta = sc.apply(Z)
        # training extremes stay strictly inside [-1, 1]
        assert np.abs(zeta).max() < 1.0
        assert np.isclose(np.abs(zeta).max(), 1.0 / 1.01)

    def test_clipping_counts_and_warns(self):
        Z = np.random.default_rng(0).uniform(-1, 1, size=(50, 2))
        sc = InputScaler.fit(Z)
        with pytest.warns(UserWarning, match="clipped"):
            out = sc.apply(np.array([[5.0, 0.0]]))
        assert sc.clipped_points == 1
        assert np.abs(out).max() <= 1.0

    def test_degenerate_column_rejected(self):
        with pytest.raises(ValueError):
            InputScaler.fit(np.ones((10, 1)))

    def test_hermite_standardizes(self):
        rng = np.random.default_rng(1)
        Z = rng.normal(3.0, 2.0, size=(500, 2))
        sc = InputScaler.fit(Z, family="hermite")
        out = sc.apply(Z)
        assert np.allclose(out.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(out.std(axis=0), 1.0, atol=1e-12)


class TestDesignMatrix:
    def test_zero_index_column_is_ones(self):
        ms = total_degree_set(3, 2)
        Z = np.random.default_rng(0).uniform(-1, 1, (20, 3))
        Phi = design_matrix(Z, ms)
        assert np.allclose(Phi[:, 0], 1.0)

    def test_k1_smax1_at_zero(self):
        ms = total_degree_set(1, 1)
        Phi = design_matrix(np.array([[0.0]]), ms)
        assert np.allclose(Phi, [[1.0, 0.0]])

    def test_monte_carlo_gram_is_identity(self):
        ms = total_degree_set(3, 3)
        rng = np.random.default_rng(42)
        Z = rng.uniform(-1, 1, (100_000, 3))
        Phi = design_matrix(Z, ms)
        G = Phi.T @ Phi / Z.shape[0]
        assert np.abs(G - np.eye(ms.size)).max() < 0.02

    def test_dimension_mismatch(self):
        ms = total_degree_set(2, 1)
        with pytest.raises(ValueError):
            design_matrix(np.zeros((4, 3)), ms)


def _ista_lasso(Q, y, lam, iters=200_000):
    """Independent proximal-gradient oracle for
    (1/N)||y - Q c||^2 + lam ||c||_1 with column-normalized Q."""
    N = Q.shape[0]
    L = 2.0 * np.linalg.norm(Q, 2) ** 2 / N
    eta = 1.0 / L
    c = np.zeros(Q.shape[1])
    for _ in range(iters):
        grad = -2.0 / N * Q.T @ (y - Q @ c)
        v = c - eta * grad
        c_new = np.sign(v) * np.maximum(np.abs(v) - eta * lam, 0.0)
        if np.abs(c_new - c).max() < 1e-12:
            c = c_new
            break
        c = c_new
    return c


class TestPceFit:
    def test_ols_recovers_planted_coefficients(self):
        rng = np.random.default_rng(3)
        Z = rng.uniform(-2, 2, (120, 3))
        ms = total_degree_set(3, 2)
        sc = InputScaler.fit(Z)
        Phi = design_matrix(sc.apply(Z), ms)
        c_star = rng.normal(size=(ms.size, 2))
        Y = Phi @ c_star
        model = pce_fit(Z, Y, s_max=2)
        assert np.abs(model.coeffs - c_star).max() < 1e-8

    def test_ridge_large_penalty_shrinks_all(self):
        rng = np.random.default_rng(4)
        Z = rng.uniform(-1, 1, (60, 2))
        Y = rng.normal(size=(60, 1))
        model = pce_fit(Z, Y, s_max=2, regression="ridge", penalty=1e12)
        assert np.abs(model.coeffs).max() < 1e-6  # intercept penalized too

    def test_lasso_support_recovery(self):
        rng = np.random.default_rng(5)
        Z = rng.uniform(-1, 1, (200, 5))
        ms = total_degree_set(5, 3)  # S = 56
        sc = InputScaler.fit(Z)
        Phi = design_matrix(sc.apply(Z), ms)
        c_star = np.zeros(ms.size)
        support = [3, 11, 40]
        c_star[support] = [2.0, -1.5, 1.0]
        y = Phi @ c_star
        model = pce_fit(Z, y, s_max=3, regression="lasso", penalty=1e-3)
        found = np.flatnonzero(np.abs(model.coeffs[:, 0]) > 1e-2)
        assert set(found) == set(support)

    def test_lasso_matches_proximal_gradient_oracle(self):
        rng = np.random.default_rng(6)
        Z = rng.uniform(-1, 1, (40, 2))
        ms = total_degree_set(2, 2)
        sc = InputScaler.fit(Z)
        Phi = design_matrix(sc.apply(Z), ms)
        y = rng.normal(size=40)
        lam = 5e-2
        model = pce_fit(Z, y, s_max=2, regression="lasso", penalty=lam)
        norms = np.linalg.norm(Phi, axis=0)
        oracle = _ista_lasso(Phi / norms, y, lam) / norms
        assert np.abs(model.coeffs[:, 0] - oracle).max() < 1e-6

    def test_underdetermined_warns(self):
        rng = np.random.default_rng(7)
        Z = rng.uniform(-1, 1, (5, 3))
        Y = rng.normal(size=(5, 1))
        with pytest.warns(UserWarning, match="underdetermined"):
            pce_fit(Z, Y, s_max=2)

    def test_nonfinite_rejected(self):
        Z = np.array([[0.0], [np.nan]])
        with pytest.raises(ValueError):
            pce_fit(Z, np.zeros((2, 1)), s_max=1)

    def test_ols_residual_orthogonality(self):
        rng = np.random.default_rng(8)
        Z = rng.uniform(-1, 1, (100, 3))
        Y = rng.normal(size=(100, 4))
        model = pce_fit(Z, Y, s_max=2)
        Phi = design_matrix(model.scaler.apply(Z), model.mset)
        resid = Y - Phi @ model.coeffs
        assert np.abs(Phi.T @ resid).max() < 1e-8 * np.linalg.norm(Y)


class TestPcePredict:
    def test_interpolation_regime(self):
        rng = np.random.default_rng(9)
        ms = total_degree_set(2, 2)
        Z = rng.uniform(-1, 1, (ms.size, 2))  # N = S
        Y = rng.normal(size=(ms.size, 3))
        model = pce_fit(Z, Y, s_max=2)
        assert np.abs(pce_predict(model, Z) - Y).max() < 1e-8

    def test_constant_model_predicts_column_means(self):
        rng = np.random.default_rng(10)
        Z = rng.uniform(-1, 1, (30, 2))
        Y = rng.normal(size=(30, 2))
        model = pce_fit(Z, Y, s_max=0)
        pred = pce_predict(model, Z[:5])
        assert np.allclose(pred, Y.mean(axis=0)[None, :], atol=1e-12)

    def test_matches_termwise_summation(self):
        rng = np.random.default_rng(11)
        Z = rng.uniform(-1, 1, (50, 3))
        Y = rng.normal(size=(50, 2))
        model = pce_fit(Z, Y, s_max=2)
        Znew = rng.uniform(-0.9, 0.9, (7, 3))
        zeta = model.scaler.apply(Znew)
        naive = np.zeros((7, 2))
        for row, idx in enumerate(model.mset.indices):
            term = np.ones(7)
            for j, s in enumerate(idx):
                term = term * legendre_orthonormal(int(s), zeta[:, j])
            naive += np.outer(term, model.coeffs[row])
        assert np.abs(naive - pce_predict(model, Znew)).max() < 1e-12

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(12)
        Z = rng.uniform(-1, 1, (30, 2))
        model = pce_fit(Z, rng.normal(size=(30, 1)), s_max=1)
        with pytest.raises(ValueError):
            pce_predict(model, np.zeros((3, 5)))

    def test_prediction_invariant_to_index_order(self):
        rng = np.random.default_rng(13)
        Z = rng.uniform(-1, 1, (60, 2))
        Y = rng.normal(size=(60, 1))
        model = pce_fit(Z, Y, s_max=3)
        Znew = rng.uniform(-0.8, 0.8, (9, 2))
        base = pce_predict(model, Znew)
        perm = rng.permutation(model.mset.size)
        shuffled = PceSurrogate(
            mset=type(model.mset)(k=2, s_max=3, indices=model.mset.indices[perm]),
            scaler=model.scaler,
            coeffs=model.coeffs[perm],
            family=model.family,
        )
        assert np.allclose(pce_predict(shuffled, Znew), base, atol=1e-12)


class TestPceMoments:
    def test_constant_model(self):
        rng = np.random.default_rng(14)
        Z = rng.uniform(-1, 1, (20, 2))
        Y = np.full((20, 3), 2.5)
        model = pce_fit(Z, Y, s_max=0)
        mean, var = pce_moments(model)
        assert np.allclose(mean, 2.5) and np.allclose(var, 0.0)

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(15)
        Z = rng.uniform(-1, 1, (300, 3))
        zeta = Z.copy()
        Y = 1.0 + zeta[:, [0]] + 0.3 * zeta[:, [1]] * zeta[:, [2]] + 0.2 * zeta[:, [0]] ** 2
        model = pce_fit(Z, Y, s_max=2)
        mean, var = pce_moments(model)
        # MC through the prediction path with z uniform over the scaled box
        lo, hi = model.scaler.lo, model.scaler.hi
        Zmc = rng.uniform(lo, hi, size=(1_000_000, 3))
        Ymc = pce_predict(model, Zmc)
        assert np.abs(Ymc.mean(axis=0) - mean).max() / np.abs(mean).max() < 0.005
        assert np.abs(Ymc.var(axis=0) - var).max() / var.max() < 0.005

    def test_doubling_coefficients_quadruples_variance(self):
        rng = np.random.default_rng(16)
        Z = rng.uniform(-1, 1, (40, 2))
        Y = rng.normal(size=(40, 1))
        model = pce_fit(Z, Y, s_max=2)
        _, var = pce_moments(model)
        doubled = PceSurrogate(
            mset=model.mset,
            scaler=model.scaler,
            coeffs=np.where(model.mset.indices.any(axis=1)[:, None], 2 * model.coeffs, model.coeffs),
            family=model.family,
        )
        _, var2 = pce_moments(doubled)
        assert np.allclose(var2, 4 * var)


def test_surrogate_serialization_round_trip():
    rng = np.random.default_rng(17)
    Z = rng.uniform(-1, 1, (50, 3))
    Y = rng.normal(size=(50, 4))
    model = pce_fit(Z, Y, s_max=2, regression="ridge", penalty=1e-6)
    back = PceSurrogate.from_dict(model.to_dict())
    Znew = rng.uniform(-0.9, 0.9, (6, 3))
    assert np.array_equal(pce_predict(back, Znew), pce_predict(model, Znew))
    assert back.regression == "ridge" and back.penalty == 1e-6
