import numpy as np
import pytest

from krylov_pls.data import Dataset, gen_design, gen_noise
from krylov_pls.estimators import fit_pls_krylov, prediction_risk
from krylov_pls.data import gram_summary
from krylov_pls.krylov import krylov_basis
from krylov_pls.linalg import project_onto_colspace
from krylov_pls.pls_iter import EmptyModelError, fit_pls_iterative


def random_instance(rng, n=None, p=None, k=None):
    n = n or int(rng.integers(50, 201))
    p = p or int(rng.integers(2, 11))
    k = k or int(rng.integers(1, min(5, p + 1)))
    x = rng.standard_normal((n, p)) @ np.diag(rng.uniform(0.3, 3.0, p))
    beta = rng.standard_normal(p)
    y = x @ beta + rng.standard_normal(n)
    return Dataset(x=x, y=y), k


class TestIterativeFit:
    def test_single_covariate_is_simple_slope(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((30, 1))
        y = rng.standard_normal(30)
        fit, state = fit_pls_iterative(Dataset(x=x, y=y), 1)
        slope = float(x[:, 0] @ y / (x[:, 0] @ x[:, 0]))
        assert fit.beta_hat[0] == pytest.approx(slope, rel=1e-12)
        assert state.k_effective == 1

    def test_full_components_match_ols_prediction(self):
        rng = np.random.default_rng(1)
        d, _ = random_instance(rng, n=80, p=4)
        fit, _ = fit_pls_iterative(d, 4)
        ols, *_ = np.linalg.lstsq(d.x, d.y, rcond=None)
        pred, pred_ols = d.x @ fit.beta_hat, d.x @ ols
        assert np.linalg.norm(pred - pred_ols) <= 1e-8 * np.linalg.norm(pred_ols)

    def test_noiseless_signal_in_krylov_space_recovered(self):
        # beta supported on two distinct eigenvalues spans the same
        # 2-dimensional eigenspace as its own Krylov basis, so the
        # 2-component fit recovers the signal exactly.
        x = gen_design(100, [3.0, 2.0, 1.0, 0.5], seed=3)
        rng = np.random.default_rng(4)
        beta = np.zeros(4)
        beta[:2] = rng.uniform(0.5, 2.0, 2)
        sigma = x.T @ x / 100
        d = Dataset(x=x, y=x @ beta)
        fit, _ = fit_pls_iterative(d, 2)
        signal = float(beta @ sigma @ beta)
        assert prediction_risk(x, beta, fit) <= 1e-16 * signal

    def test_prediction_is_projection_onto_component_span(self):
        rng = np.random.default_rng(5)
        d, k = random_instance(rng)
        fit, state = fit_pls_iterative(d, k)
        proj = project_onto_colspace(d.x @ state.loadings, d.y)
        pred = d.x @ fit.beta_hat
        assert np.linalg.norm(pred - proj) <= 1e-9 * max(1.0, np.linalg.norm(proj))


class TestStateInvariants:
    def test_unit_loadings_and_orthogonal_components(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            d, k = random_instance(rng)
            _, state = fit_pls_iterative(d, k)
            norms = np.linalg.norm(state.loadings, axis=0)
            assert np.all(np.abs(norms - 1.0) <= 1e-12)
            t = state.components
            for i in range(state.k_effective):
                for j in range(i + 1, state.k_effective):
                    bound = 1e-8 * np.linalg.norm(t[:, i]) * np.linalg.norm(t[:, j])
                    assert abs(t[:, i] @ t[:, j]) <= bound

    def test_prediction_depends_only_on_loading_span(self):
        rng = np.random.default_rng(7)
        d, k = random_instance(rng, p=6, k=3)
        _, state = fit_pls_iterative(d, k)
        w = state.loadings
        q = rng.standard_normal((state.k_effective, state.k_effective))
        q += np.eye(state.k_effective) * 2.0  # keep it invertible
        p1 = project_onto_colspace(d.x @ w, d.y)
        p2 = project_onto_colspace(d.x @ (w @ q), d.y)
        assert np.linalg.norm(p1 - p2) <= 1e-9 * max(1.0, np.linalg.norm(p1))


class TestEdgeCases:
    def test_empty_model(self):
        x = np.zeros((4, 2))
        x[0, 0] = 1.0
        x[1, 1] = 1.0
        y = np.array([0.0, 0.0, 1.0, 0.0])  # orthogonal to both columns
        with pytest.raises(EmptyModelError):
            fit_pls_iterative(Dataset(x=x, y=y), 1)

    def test_early_stop_on_rank_one_design(self):
        rng = np.random.default_rng(8)
        col = rng.standard_normal(30)
        x = np.column_stack([col, 2.0 * col])
        y = col + 0.01 * rng.standard_normal(30)
        fit, state = fit_pls_iterative(Dataset(x=x, y=y), 2)
        assert state.k_effective == 1
        assert fit.k_effective == 1

    def test_rejects_bad_k(self):
        d = Dataset(x=np.eye(3), y=np.ones(3))
        with pytest.raises(ValueError):
            fit_pls_iterative(d, 0)
        with pytest.raises(ValueError):
            fit_pls_iterative(d, 4)


class TestAgreementWithKrylovForm:
    def test_well_conditioned_instances_agree(self):
        rng = np.random.default_rng(9)
        checked = 0
        while checked < 100:
            d, k = random_instance(rng)
            gs = gram_summary(d)
            try:
                closed = fit_pls_krylov(gs, k)
            except Exception:
                continue
            if closed.rcond_theta < 1e-8:
                continue
            checked += 1
            iterative, _ = fit_pls_iterative(d, k)
            ref = d.x @ closed.beta_hat
            gap = np.linalg.norm(d.x @ iterative.beta_hat - ref)
            assert gap <= 1e-8 * np.linalg.norm(ref)
