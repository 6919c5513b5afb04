import numpy as np
import pytest

from krylov_pls.data import (
    CsvFormatError,
    Dataset,
    ModelSpec,
    gen_design,
    gen_noise,
    gen_response,
    gram_summary,
    population_sigma,
    read_csv,
    write_csv,
)

SPECTRUM_1A = np.array([6.1, 6.0, 0.5, 0.5, 0.5])


class TestGramSummary:
    def test_identity_design(self):
        d = Dataset(x=np.eye(2), y=np.array([1.0, 2.0]))
        gs = gram_summary(d)
        assert np.allclose(gs.sigma_mat.a, 0.5 * np.eye(2))
        assert np.allclose(gs.sigma_hat, [0.5, 1.0])

    def test_zero_column(self):
        x = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        gs = gram_summary(Dataset(x=x, y=np.array([1.0, 1.0, 1.0])))
        assert np.all(gs.sigma_mat.a[:, 1] == 0)
        assert np.all(gs.sigma_mat.a[1, :] == 0)
        assert gs.sigma_hat[1] == 0

    def test_matches_naive_double_loop(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((200, 5))
        y = rng.standard_normal(200)
        gs = gram_summary(Dataset(x=x, y=y))
        naive = np.zeros((5, 5))
        for i in range(5):
            for j in range(5):
                naive[i, j] = sum(x[t, i] * x[t, j] for t in range(200)) / 200
        assert np.allclose(gs.sigma_mat.a, naive, atol=1e-12)


class TestPopulationSigma:
    def test_identity(self):
        beta = np.array([1.0, -2.0, 3.0])
        assert np.allclose(population_sigma(np.eye(3), beta), beta)

    def test_diagonal_action(self):
        beta = np.array([1.0, 1.0, 0.0, 0.0, 0.0])
        got = population_sigma(np.diag(SPECTRUM_1A), beta)
        assert np.allclose(got, [6.1, 6.0, 0.0, 0.0, 0.0])

    def test_zero(self):
        assert np.allclose(population_sigma(np.eye(4), np.zeros(4)), 0.0)


class TestGenDesign:
    def test_exact_spectrum(self):
        x = gen_design(200, SPECTRUM_1A, seed=42)
        sigma = x.T @ x / 200
        assert np.abs(sigma - np.diag(SPECTRUM_1A)).max() <= 1e-10

    def test_single_column(self):
        x = gen_design(5, [1.0], seed=7)
        assert x.shape == (5, 1)
        assert (x[:, 0] @ x[:, 0]) / 5 == pytest.approx(1.0, abs=1e-12)

    def test_deterministic(self):
        a = gen_design(50, [2.0, 1.0], seed=9)
        b = gen_design(50, [2.0, 1.0], seed=9)
        assert np.array_equal(a, b)
        c = gen_design(50, [2.0, 1.0], seed=10)
        assert not np.array_equal(a, c)

    def test_raw_design_skips_exactness(self):
        x = gen_design(500, [3.0, 1.0], seed=1, exact=False)
        sigma = x.T @ x / 500
        assert abs(sigma[0, 0] - 3.0) > 1e-8  # sampling noise remains
        assert abs(sigma[0, 0] - 3.0) < 0.5

    def test_underdetermined_warns(self):
        with pytest.warns(UserWarning, match="singular"):
            gen_design(3, [1.0, 1.0, 1.0, 1.0], seed=0)

    def test_rejects_bad_spectrum(self):
        with pytest.raises(ValueError):
            gen_design(10, [1.0, -1.0], seed=0)


class TestGenResponse:
    def test_noiseless_limit(self):
        x = gen_design(50, [2.0, 1.0], seed=3)
        beta = np.array([1.0, -1.0])
        y = gen_response(x, ModelSpec(beta=beta, tau2=1e-30, seed=0), 0)
        assert np.abs(y - x @ beta).max() <= 1e-10

    def test_unit_variance(self):
        x = np.ones((100_000, 1))
        y = gen_response(x, ModelSpec(beta=np.zeros(1), tau2=1.0, seed=11), 0)
        assert y.var() == pytest.approx(1.0, abs=0.02)

    def test_deterministic_per_replication(self):
        x = gen_design(20, [1.0], seed=5)
        spec = ModelSpec(beta=np.array([1.0]), tau2=1.0, seed=5)
        assert np.array_equal(gen_response(x, spec, 3), gen_response(x, spec, 3))
        assert not np.array_equal(gen_response(x, spec, 3), gen_response(x, spec, 4))

    def test_noise_independent_of_design_stream(self):
        e = gen_noise(10, 1.0, seed=5, replication_index=0)
        x = gen_design(10, [1.0], seed=5)
        assert not np.allclose(e, x[:, 0])


class TestSigmaHatDistribution:
    """Moments of sigma_hat = sigma + X'eps/n over replications."""

    N = 2000

    def setup_method(self):
        self.n = 200
        self.x = gen_design(self.n, SPECTRUM_1A, seed=21)
        self.beta = np.array([1.0, 1.0, 0.0, 0.0, 0.0])
        spec = ModelSpec(beta=self.beta, tau2=1.0, seed=21)
        draws = np.empty((self.N, 5))
        for r in range(self.N):
            y = gen_response(self.x, spec, r)
            draws[r] = self.x.T @ y / self.n
        self.draws = draws

    def test_mean_matches_population(self):
        sigma = np.diag(SPECTRUM_1A) @ self.beta
        stderr = np.sqrt(SPECTRUM_1A / self.n / self.N)  # per-coordinate
        assert np.all(np.abs(self.draws.mean(axis=0) - sigma) <= 4 * stderr)

    def test_covariance_matches_population(self):
        cov = np.cov(self.draws.T)
        target = np.diag(SPECTRUM_1A) / self.n
        rel = np.linalg.norm(cov - target) / np.linalg.norm(target)
        assert rel <= 0.10


class TestCsv:
    def test_round_trip(self, tmp_path):
        x = gen_design(10, [2.0, 1.0], seed=13)
        y = gen_response(x, ModelSpec(beta=np.array([0.5, -0.5]), seed=13), 0)
        d = Dataset(x=x, y=y)
        path = tmp_path / "d.csv"
        write_csv(path, d)
        back = read_csv(path)
        assert np.array_equal(back.x, d.x)
        assert np.array_equal(back.y, d.y)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(CsvFormatError) as exc:
            read_csv(path)
        assert exc.value.row == 1

    def test_bad_field_location(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,x2,y\n1.0,2.0,3.0\n1.0,oops,3.0\n")
        with pytest.raises(CsvFormatError) as exc:
            read_csv(path)
        assert exc.value.row == 3
        assert exc.value.column == 2

    def test_short_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,y\n1.0\n")
        with pytest.raises(CsvFormatError) as exc:
            read_csv(path)
        assert exc.value.row == 2


class TestDatasetValidation:
    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Dataset(x=np.array([[np.inf]]), y=np.array([1.0]))

    def test_rejects_mismatched(self):
        with pytest.raises(ValueError):
            Dataset(x=np.eye(3), y=np.array([1.0]))

    def test_rejects_nonpositive_tau2(self):
        with pytest.raises(ValueError):
            ModelSpec(beta=np.array([1.0]), tau2=0.0)
