import math

import numpy as np
import pytest

from mirror_select import (
    BadDimension,
    build_covariance,
    build_precision,
    sample_design,
    sample_design_raw,
    sample_gaussian_graph_data,
    sample_linear_truth,
    sample_response,
    substream,
)
from mirror_select.synth import (
    CovarianceSpec,
    CovKind,
    DesignKind,
    DesignSpec,
    GraphKind,
    GraphSpec,
)


class TestBuildCovariance:
    def test_toeplitz_block_values(self):
        spec = CovarianceSpec(CovKind.TOEPLITZ_BLOCK, 500, 0.5)
        sigma = build_covariance(spec)
        # block size 50: adjacent entry (50-2)*rho/(50-1), corner exactly 0
        assert sigma[0, 1] == pytest.approx(48 * 0.5 / 49)
        assert sigma[0, 49] == 0.0
        assert sigma[0, 50] == 0.0  # across blocks
        assert np.array_equal(sigma, sigma.T)
        assert np.all(np.diag(sigma) == 1.0)
        np.linalg.cholesky(sigma)  # positive definite

    def test_block_dimension_validated(self):
        with pytest.raises(BadDimension):
            CovarianceSpec(CovKind.TOEPLITZ_BLOCK, 55, 0.5)

    def test_constant_correlation(self):
        sigma = build_covariance(CovarianceSpec(CovKind.CONSTANT, 6, 0.3))
        assert np.all(np.diag(sigma) == 1.0)
        off = sigma[~np.eye(6, dtype=bool)]
        assert np.all(off == 0.3)
        np.linalg.cholesky(sigma)

    def test_constant_zero_is_identity(self):
        assert np.array_equal(
            build_covariance(CovarianceSpec(CovKind.CONSTANT, 4, 0.0)), np.eye(4)
        )

    def test_constant_range_validated(self):
        with pytest.raises(ValueError):
            CovarianceSpec(CovKind.CONSTANT, 4, 1.0)


class TestSampleDesign:
    def test_gaussian_identity_variances(self):
        spec = DesignSpec(
            DesignKind.GAUSSIAN, CovarianceSpec(CovKind.IDENTITY, 20), 10_000
        )
        raw = sample_design_raw(spec, substream(1, "design"))
        assert np.all((raw.var(axis=0) > 0.95) & (raw.var(axis=0) < 1.05))

    def test_mixture_is_centered(self):
        spec = DesignSpec(
            DesignKind.MIXTURE2, CovarianceSpec(CovKind.IDENTITY, 10), 10_000
        )
        raw = sample_design_raw(spec, substream(4, "design"))
        assert np.abs(raw.mean(axis=0)).max() < 0.02
        # and the two mixture branches are actually offset
        assert raw.mean(axis=1).std() > 0.3

    def test_student_t_heavy_tails(self):
        spec = DesignSpec(
            DesignKind.STUDENT_T, CovarianceSpec(CovKind.IDENTITY, 4), 10_000
        )
        raw = sample_design_raw(spec, substream(3, "design"))
        col = raw[:, 0]
        z = (col - col.mean()) / col.std()
        excess_kurtosis = (z**4).mean() - 3.0
        assert excess_kurtosis > 3.0

    def test_t_needs_dof_above_two(self):
        with pytest.raises(ValueError):
            DesignSpec(
                DesignKind.STUDENT_T,
                CovarianceSpec(CovKind.IDENTITY, 4),
                100,
                t_dof=2.0,
            )

    def test_output_is_standardized(self, rng):
        spec = DesignSpec(
            DesignKind.GAUSSIAN, CovarianceSpec(CovKind.CONSTANT, 8, 0.4), 200
        )
        x = sample_design(spec, rng)
        assert np.abs(x.mean(axis=0)).max() < 1e-10
        assert np.abs(x.std(axis=0) - 1).max() < 1e-10

    def test_toeplitz_correlation_reproduced(self):
        spec = DesignSpec(
            DesignKind.GAUSSIAN, CovarianceSpec(CovKind.TOEPLITZ_BLOCK, 50, 0.8), 20_000
        )
        x = sample_design(spec, substream(4, "design"))
        empirical = x[:, 0] @ x[:, 1] / 20_000
        assert empirical == pytest.approx(3 * 0.8 / 4, abs=0.03)


class TestLinearTruth:
    def test_no_signals_gives_zero_vector(self, rng):
        truth = sample_linear_truth(40, 0, 5.0, 100, rng)
        assert not truth.coef.any()
        assert truth.signals.size == 0

    def test_zero_strength_gives_zero_signals(self, rng):
        truth = sample_linear_truth(40, 5, 0.0, 100, rng)
        assert not truth.coef.any()
        assert truth.signals.size == 5

    def test_half_normal_mean(self):
        # E|coef_j| = scale * sqrt(2/pi) with scale = 5 sqrt(log(500)/500)
        gen = substream(5, "truth")
        draws = []
        for _ in range(200):
            truth = sample_linear_truth(500, 50, 5.0, 500, gen)
            draws.extend(np.abs(truth.coef[truth.signals]))
        expected = 5 * math.sqrt(math.log(500) / 500) * math.sqrt(2 / math.pi)
        assert np.mean(draws) == pytest.approx(expected, rel=0.03)

    def test_variance_reading_switch(self, rng):
        sd_read = sample_linear_truth(100, 100, 4.0, 50, substream(6, "t"), "sd")
        var_read = sample_linear_truth(100, 100, 4.0, 50, substream(6, "t"), "variance")
        ratio = var_read.coef.std() / sd_read.coef.std()
        scale = 4.0 * math.sqrt(math.log(100) / 50)
        assert ratio == pytest.approx(math.sqrt(scale) / scale, rel=0.05)

    def test_too_many_signals(self, rng):
        with pytest.raises(ValueError):
            sample_linear_truth(5, 6, 1.0, 10, rng)


class TestSampleResponse:
    def test_null_model_is_unit_noise(self):
        gen = substream(7, "resp")
        truth = sample_linear_truth(10, 0, 0.0, 5000, gen)
        x = gen.standard_normal((5000, 10))
        y = sample_response(x, truth, gen)
        assert abs(y.mean()) < 1e-12
        assert y.var() == pytest.approx(1.0, abs=0.05)

    def test_noiseless_hook_exact(self, rng):
        truth = sample_linear_truth(6, 3, 2.0, 50, rng)
        x = rng.standard_normal((50, 6))
        y = sample_response(x, truth, rng, add_noise=False)
        assert np.array_equal(y, x @ truth.coef)

    def test_deterministic(self, rng):
        truth = sample_linear_truth(6, 3, 2.0, 50, rng)
        x = rng.standard_normal((50, 6))
        a = sample_response(x, truth, substream(8, "resp"))
        b = sample_response(x, truth, substream(8, "resp"))
        assert np.array_equal(a, b)


class TestBuildPrecision:
    def test_banded_values(self):
        spec = GraphSpec(GraphKind.BANDED, size=30, bandwidth=8, band_value=-0.6)
        precision, edges = build_precision(spec)
        assert precision[0, 1] == pytest.approx(-(0.6 ** (1 / 1.5)), abs=1e-9)
        assert precision[0, 1] == pytest.approx(-0.71138, abs=1e-5)
        assert precision[0, 9] == 0.0  # beyond the band
        assert (0, 8) in edges and (0, 9) not in edges

    def test_banded_support_exact(self):
        spec = GraphSpec(GraphKind.BANDED, size=20, bandwidth=3, band_value=-0.5)
        _, edges = build_precision(spec)
        expected = {
            (i, j)
            for i in range(20)
            for j in range(i + 1, min(i + 4, 20))
        }
        assert edges == expected

    def test_repair_restores_positive_definite(self):
        spec = GraphSpec(GraphKind.BANDED, size=100, bandwidth=8, band_value=-0.6)
        raw = np.eye(100)
        for d in range(1, 9):
            value = -(0.6 ** (d / 1.5))
            idx = np.arange(100 - d)
            raw[idx, idx + d] = value
            raw[idx + d, idx] = value
        assert np.linalg.eigvalsh(raw)[0] < 0  # this setting needs repair
        precision, _ = build_precision(spec)
        smallest = np.linalg.eigvalsh(precision)[0]
        assert smallest > 0
        assert smallest == pytest.approx(0.005, abs=1e-9)
        # repair only shifts the diagonal
        off = ~np.eye(100, dtype=bool)
        assert np.array_equal(precision[off], raw[off])

    def test_block_diagonal_magnitudes(self):
        spec = GraphSpec(GraphKind.BLOCK_DIAG, size=50, block=25)
        precision, edges = build_precision(spec, substream(9, "graph"))
        first = precision[:25, :25]
        off = np.abs(first[~np.eye(25, dtype=bool)])
        assert off.min() >= 0.4 and off.max() <= 0.8
        assert np.array_equal(precision, precision.T)
        assert not precision[:25, 25:].any()
        assert all((i < 25) == (j < 25) for i, j in edges)

    def test_block_diag_needs_rng(self):
        with pytest.raises(ValueError):
            build_precision(GraphSpec(GraphKind.BLOCK_DIAG, size=50, block=25))

    def test_block_dimension_validated(self):
        with pytest.raises(BadDimension):
            GraphSpec(GraphKind.BLOCK_DIAG, size=55, block=25)


class TestSampleGraphData:
    def test_identity_precision_gives_uncorrelated_columns(self):
        spec = GraphSpec(GraphKind.BANDED, size=10, band_value=0.0, bandwidth=1)
        x, edges = sample_gaussian_graph_data(spec, 10_000, substream(10, "graph"))
        assert not edges
        corr = np.corrcoef(x.T)
        assert np.abs(corr[~np.eye(10, dtype=bool)]).max() < 0.05

    def test_empirical_precision_matches(self):
        spec = GraphSpec(GraphKind.BANDED, size=10, bandwidth=3, band_value=-0.6)
        x, _ = sample_gaussian_graph_data(spec, 50_000, substream(11, "graph"))
        # standardization rescales columns; compare after undoing the scale
        precision, _ = build_precision(spec)
        sds = np.sqrt(np.diag(np.linalg.inv(precision)))
        empirical = np.linalg.inv(np.cov((x * sds).T))
        assert np.abs(empirical - precision).max() < 0.05

    def test_deterministic(self):
        spec = GraphSpec(GraphKind.BLOCK_DIAG, size=50, block=25)
        a, ea = sample_gaussian_graph_data(spec, 60, substream(12, "graph"))
        b, eb = sample_gaussian_graph_data(spec, 60, substream(12, "graph"))
        assert np.array_equal(a, b)
        assert ea == eb
