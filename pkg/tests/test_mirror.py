import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirror_select import (
    Contrast,
    ds_select,
    estimated_fdp,
    fdp_power,
    mirror_statistic,
    mirror_values,
    normal_means_ds,
    normal_means_mirror,
    select_cutoff,
    substream,
)
from mirror_select.mirror import ds_select as mirror_ds_select
from tests.conftest import linear_dataset, standardized_dataset

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False, allow_subnormal=False)


class TestMirrorStatistic:
    @pytest.mark.parametrize(
        "b1,b2,contrast,expected",
        [
            (1, 2, Contrast.SUM, 3),
            (1, -2, Contrast.SUM, -3),
            (1, 2, Contrast.MIN2, 2),
            (1, 2, Contrast.PRODUCT, 2),
            (0, 5, Contrast.SUM, 0),
            (5, 0, Contrast.PRODUCT, 0),
        ],
    )
    def test_examples(self, b1, b2, contrast, expected):
        assert mirror_statistic(b1, b2, contrast) == expected

    @given(finite, finite, st.sampled_from(list(Contrast)))
    @settings(max_examples=300, deadline=None)
    def test_symmetric_in_arguments(self, b1, b2, contrast):
        assert mirror_statistic(b1, b2, contrast) == mirror_statistic(
            b2, b1, contrast
        )

    @given(
        st.floats(0.01, 1e3),
        st.floats(0.01, 1e3),
        st.floats(1.0, 4.0),
        st.sampled_from(list(Contrast)),
    )
    @settings(max_examples=300, deadline=None)
    def test_monotone_for_aligned_signs(self, u, v, factor, contrast):
        base = mirror_statistic(u, v, contrast)
        assert mirror_statistic(u * factor, v, contrast) >= base
        assert mirror_statistic(u, v * factor, contrast) >= base

    @given(finite, finite, st.floats(0.01, 100.0))
    @settings(max_examples=300, deadline=None)
    def test_sum_scale_equivariance(self, b1, b2, scale):
        lhs = mirror_statistic(scale * b1, scale * b2, Contrast.SUM)
        rhs = scale * mirror_statistic(b1, b2, Contrast.SUM)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_vectorized_matches_scalar(self, rng):
        coef1 = rng.standard_normal(40)
        coef2 = rng.standard_normal(40)
        coef1[::7] = 0.0
        for contrast in Contrast:
            vec = mirror_values(coef1, coef2, contrast)
            ref = [mirror_statistic(a, b, contrast) for a, b in zip(coef1, coef2)]
            assert np.allclose(vec, ref, atol=0)


class TestEstimatedFdp:
    def test_mixed_tails(self):
        m = np.array([3.0, 2.0, -1.0, -2.0, 0.5])
        assert estimated_fdp(m, 1.5) == pytest.approx(0.5)

    def test_all_positive(self):
        assert estimated_fdp(np.array([1.0, 2.0, 3.0]), 0.7) == 0.0

    def test_denominator_floor(self):
        assert estimated_fdp(np.array([-1.0, -2.0]), 0.5) == pytest.approx(2.0)

    def test_positive_threshold_required(self):
        with pytest.raises(ValueError):
            estimated_fdp(np.array([1.0]), 0.0)


def cutoff_by_brute_force(values, level, grid_points=10_000):
    """Dense-grid reimplementation of the cutoff rule.

    Evaluates the estimate at every uniform grid point and every candidate,
    by direct counting; the returned threshold must be an attained nonzero
    magnitude (all-positive vectors pin the cutoff at the smallest one).
    """
    values = np.asarray(values, dtype=np.float64)
    magnitudes = sorted({abs(v) for v in values if v != 0.0})
    if not magnitudes:
        return math.inf, math.nan
    top = max(magnitudes)
    points = sorted(set(np.linspace(top / grid_points, top, grid_points)) | set(magnitudes))
    for t in points:
        if t not in magnitudes:
            continue
        n_above = sum(v > t for v in values)
        if n_above == 0:
            continue
        est = sum(v <= -t for v in values) / n_above
        if est <= level:
            return t, est
    return math.inf, math.nan


class TestSelectCutoff:
    def test_hand_example_feasible(self):
        cutoff, est = select_cutoff(np.array([5.0, 4.0, 3.0, -1.0]), 0.34)
        assert cutoff == 1.0
        assert est == pytest.approx(1 / 3)

    def test_hand_example_infeasible(self):
        cutoff, est = select_cutoff(np.array([-3.0, -2.0, 1.0]), 0.1)
        assert math.isinf(cutoff)
        assert math.isnan(est)

    def test_all_positive_uses_smallest_magnitude(self):
        cutoff, est = select_cutoff(np.array([4.0, 1.0, 2.0, 3.0]), 0.25)
        assert cutoff == 1.0
        assert est == 0.0

    def test_all_zero_is_infeasible(self):
        cutoff, est = select_cutoff(np.zeros(6), 0.2)
        assert math.isinf(cutoff)

    def test_level_validated(self):
        with pytest.raises(ValueError):
            select_cutoff(np.array([1.0]), 0.0)

    def test_matches_brute_force_battery(self):
        gen = substream(17, "cutoff-oracle")
        for trial in range(300):
            size = int(gen.integers(1, 50))
            values = np.round(gen.standard_normal(size), 2)
            values[gen.random(size) < 0.2] = 0.0
            level = float(gen.uniform(0.02, 0.6))
            assert select_cutoff(values, level) == pytest.approx(
                cutoff_by_brute_force(values, level, grid_points=2_000), nan_ok=True
            )

    @given(
        st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=50),
        st.floats(0.01, 0.8),
    )
    @settings(max_examples=150, deadline=None)
    def test_matches_brute_force_property(self, raw, level):
        values = np.asarray(raw)
        expected = cutoff_by_brute_force(values, level, grid_points=500)
        assert select_cutoff(values, level) == pytest.approx(expected, nan_ok=True)

    def test_cutoff_guarantee_rescan(self):
        gen = substream(23, "cutoff-guarantee")
        seen_finite = 0
        for _ in range(200):
            values = gen.standard_normal(int(gen.integers(2, 60)))
            level = float(gen.uniform(0.05, 0.5))
            cutoff, est = select_cutoff(values, level)
            if not math.isfinite(cutoff):
                continue
            seen_finite += 1
            assert estimated_fdp(values, cutoff) <= level
            for t in np.unique(np.abs(values[values != 0.0])):
                if t < cutoff:
                    assert estimated_fdp(values, t) > level
        assert seen_finite > 20

    def test_selection_invariant_to_common_scaling(self, rng):
        values = rng.standard_normal(30)
        cutoff, _ = select_cutoff(values, 0.3)
        scaled_cutoff, _ = select_cutoff(7.5 * values, 0.3)
        lhs = np.flatnonzero(values > cutoff)
        rhs = np.flatnonzero(7.5 * values > scaled_cutoff)
        assert np.array_equal(lhs, rhs)


class TestNormalMeansMirror:
    @pytest.mark.parametrize("a,b,expected", [(1, 1, 2), (1, -1, -2), (0, 3.7, 0)])
    def test_examples(self, a, b, expected):
        assert normal_means_mirror(a, b) == expected

    @given(finite, finite)
    @settings(max_examples=300, deadline=None)
    def test_equals_min2_contrast(self, a, b):
        assert normal_means_mirror(a, b) == pytest.approx(
            mirror_statistic(a, b, Contrast.MIN2), rel=1e-9, abs=1e-9
        )


class TestDsSelect:
    def test_deterministic(self):
        coef = np.zeros(30)
        coef[:4] = 1.2
        data, _ = linear_dataset(120, 30, coef, seed=5)
        a = ds_select(data, 0.1, Contrast.SUM, substream(9, "ds"))
        b = ds_select(data, 0.1, Contrast.SUM, substream(9, "ds"))
        assert np.array_equal(a.selected, b.selected)
        assert a.cutoff == b.cutoff
        assert np.array_equal(a.mirror.values, b.mirror.values)

    def test_requires_standardized_data(self, rng):
        from mirror_select import Dataset

        data = Dataset(
            x=rng.standard_normal((20, 3)),
            y=rng.standard_normal(20),
            standardized=False,
            column_means=np.zeros(3),
            column_sds=np.ones(3),
        )
        with pytest.raises(ValueError):
            ds_select(data, 0.1, Contrast.SUM, rng)

    def test_unscreened_features_get_zero(self):
        coef = np.zeros(25)
        coef[:3] = 2.0
        data, gen = linear_dataset(100, 25, coef, seed=11)
        result = ds_select(data, 0.1, Contrast.SUM, gen)
        screened = result.mirror.fit.screened
        outside = np.setdiff1d(np.arange(25), result.mirror.fit.screening_fit.support)
        assert np.all(result.mirror.values[outside] == 0.0)
        assert np.all(np.isin(result.selected, screened))

    def test_empty_screen_flagged(self, monkeypatch, rng):
        import mirror_select.mirror as mirror_mod
        from mirror_select.regress import LassoFit

        def fake_cv(x, y, folds, grid_size, gen):
            return LassoFit(
                coef=np.zeros(x.shape[1]),
                penalty=1.0,
                support=np.empty(0, dtype=np.int64),
                n_sweeps=1,
                converged=True,
            )

        monkeypatch.setattr(mirror_mod, "lasso_cv", fake_cv)
        coef = np.zeros(10)
        data, gen = linear_dataset(40, 10, coef, seed=13)
        result = mirror_ds_select(data, 0.1, Contrast.SUM, gen)
        assert result.selected.size == 0
        assert math.isinf(result.cutoff)
        assert "empty-screen" in result.flags

    def test_oversized_screen_truncated(self, monkeypatch):
        import mirror_select.mirror as mirror_mod
        from mirror_select.regress import LassoFit

        coef = np.zeros(30)
        data, gen = linear_dataset(48, 30, coef, seed=15)

        def fake_cv(x, y, folds, grid_size, inner):
            dense = np.linspace(1.0, 2.0, 30)
            return LassoFit(
                coef=dense,
                penalty=0.5,
                support=np.arange(30),
                n_sweeps=1,
                converged=True,
            )

        monkeypatch.setattr(mirror_mod, "lasso_cv", fake_cv)
        result = mirror_ds_select(data, 0.1, Contrast.SUM, gen)
        # floor(48/4) = 12 largest first-stage coefficients survive
        assert result.mirror.fit.screened.size == 12
        assert np.array_equal(result.mirror.fit.screened, np.arange(18, 30))

    def test_null_model_control(self):
        fdps = []
        sizes = []
        for rep in range(200):
            data, gen = linear_dataset(200, 100, np.zeros(100), seed=rep, label="dsnull")
            result = ds_select(data, 0.1, Contrast.SUM, gen)
            sizes.append(result.selected.size)
            fdps.append(1.0 if result.selected.size else 0.0)
        assert np.median(sizes) == 0
        assert np.mean(fdps) <= 0.15

    def test_strong_signals_fdr_and_power(self):
        from mirror_select.synth import (
            CovarianceSpec,
            CovKind,
            DesignKind,
            DesignSpec,
            sample_design,
            sample_linear_truth,
            sample_response,
        )

        fdps, powers = [], []
        spec = DesignSpec(
            DesignKind.GAUSSIAN, CovarianceSpec(CovKind.TOEPLITZ_BLOCK, 500, 0.5), 500
        )
        for rep in range(20):
            gen = substream(rep, "ds-strong")
            x = sample_design(spec, gen)
            truth = sample_linear_truth(500, 50, 5.0, 500, gen)
            y = sample_response(x, truth, gen)
            data = standardized_dataset(x, y)
            result = ds_select(data, 0.1, Contrast.SUM, gen)
            fdp, power = fdp_power(result.selected, truth.signals, 500)
            fdps.append(fdp)
            powers.append(power)
        assert np.mean(fdps) <= 0.15
        assert np.mean(powers) >= 0.6


class TestNormalMeansDs:
    def test_deterministic(self, rng):
        x = rng.standard_normal((60, 40))
        a = normal_means_ds(x, 0.1, substream(3, "nm"))
        b = normal_means_ds(x, 0.1, substream(3, "nm"))
        assert np.array_equal(a.selected, b.selected)

    def test_global_null_rarely_selects(self):
        # The ratio estimate has no +1 correction, so an all-positive extreme
        # tail can slip a feature or two through; selections stay rare and
        # tiny but the value of a nonempty null selection is always FDP 1.
        sizes = []
        for rep in range(100):
            x = substream(rep, "nm-null").standard_normal((500, 800))
            result = normal_means_ds(x, 0.1, substream(rep, "nm-null-sel"))
            sizes.append(result.selected.size)
        sizes = np.asarray(sizes)
        assert np.median(sizes) == 0
        assert (sizes > 0).mean() <= 0.45
        assert sizes.max() <= 25

    def test_signals_detected_with_control(self):
        fdps, powers = [], []
        for rep in range(50):
            gen = substream(rep, "nm-signal")
            means = np.zeros(800)
            signals = np.sort(gen.choice(800, 160, replace=False))
            means[signals] = 0.5 * gen.standard_normal(160)
            x = means + gen.standard_normal((500, 800))
            result = normal_means_ds(x, 0.1, gen)
            fdp, power = fdp_power(result.selected, signals, 800)
            fdps.append(fdp)
            powers.append(power)
        assert np.mean(powers) > 0.4
        assert np.mean(fdps) <= 0.12
