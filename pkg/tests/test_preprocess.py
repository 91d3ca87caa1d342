import math

import numpy as np
import pytest

import oracles
from conftest import make_dataset
from mpcafd.errors import DegenerateColumnError, SchemaError, TooFewSamplesError
from mpcafd.preprocess import (
    CleaningReport,
    StandardizationParams,
    apply_standardization,
    chauvenet_filter,
    chauvenet_mask,
    fit_standardization,
    haar_denoise_1d,
    invert_standardization,
    transient_filter,
    wavelet_denoise,
)


class TestChauvenet:
    def test_gross_outlier_removed(self):
        data = make_dataset([10.0, 10.1, 9.9, 10.05, 50.0])
        kept, report = chauvenet_filter(data)
        assert kept.values[:, 0].tolist() == [10.0, 10.1, 9.9, 10.05]
        assert report.rows_in == 5 and report.rows_out == 4
        assert report.outliers_removed == {"x0": 1}

    def test_symmetric_column_untouched(self):
        kept, _ = chauvenet_filter(make_dataset([-1.0, 1.0, -1.0, 1.0]))
        assert kept.n == 4

    def test_normal_sample_removal_count_matches_cutoff(self):
        # a single n=10000 draw expects only 0.5 rejections, so pool replicates
        n, reps = 10_000, 400
        cutoff = oracles.chauvenet_cutoff(n)
        rng = np.random.default_rng(10)
        expected = removed = 0
        for _ in range(reps):
            x = rng.standard_normal(n)
            z = np.abs(x - x.mean()) / x.std(ddof=1)
            expected += int(np.sum(z > cutoff))
            kept, _ = chauvenet_filter(make_dataset(x))
            removed += n - kept.n
        assert expected > 100
        assert abs(removed - expected) <= 0.2 * expected
        assert abs(removed - 0.5 * reps) <= 0.2 * 0.5 * reps

    def test_single_pass(self):
        # after removing 100 the value 20 would be an outlier, but only one pass runs
        x = [1.0, 1.1, 0.9, 1.0, 1.05, 0.95, 1.0, 1.02, 0.98, 20.0, 100.0]
        kept, _ = chauvenet_filter(make_dataset(x))
        assert 20.0 in kept.values[:, 0]
        assert 100.0 not in kept.values[:, 0]

    def test_any_variable_drops_row(self):
        x = np.ones((8, 2)) + np.arange(8)[:, None] * 0.01
        x[3, 1] = 40.0
        kept, report = chauvenet_filter(make_dataset(x))
        assert kept.n == 7 and 3 not in (kept.timestamps - kept.timestamps[0]) // 60
        assert report.outliers_removed == {"x0": 0, "x1": 1}

    def test_permutation_invariant(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((40, 3))
        x[5, 0] = 9.0
        x[17, 2] = -7.5
        perm = rng.permutation(40)
        base = chauvenet_mask(x).any(axis=1)
        permuted = chauvenet_mask(x[perm]).any(axis=1)
        assert np.array_equal(base[perm], permuted)

    def test_too_few_rows(self):
        with pytest.raises(TooFewSamplesError):
            chauvenet_filter(make_dataset([1.0, 2.0, 3.0]))

    def test_constant_column(self):
        with pytest.raises(DegenerateColumnError, match="x1"):
            chauvenet_filter(make_dataset(np.column_stack([np.arange(6.0), np.ones(6)])))

    def test_survivors_unmodified(self):
        x = np.random.default_rng(1).standard_normal((50, 2))
        x[0, 0] = 30.0
        kept, _ = chauvenet_filter(make_dataset(x))
        rejected = oracles.chauvenet_rows(x)
        assert 0 in rejected
        assert np.array_equal(kept.values, x[[i for i in range(50) if i not in rejected]])


class TestTransient:
    def test_constant_series(self):
        kept, report = transient_filter(make_dataset(np.full(20, 4.2)))
        assert kept.n == 20 and report.transients_removed == 0

    def test_step_jump(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(200) * 0.1
        x[120:] += 100 * np.std(np.diff(x), ddof=1)
        kept, report = transient_filter(make_dataset(x))
        assert report.transients_removed == 1
        idx = (kept.timestamps - 1_570_000_000) // 60
        assert 120 not in idx and 119 in idx and 121 in idx

    def test_linear_ramp(self):
        kept, _ = transient_filter(make_dataset(np.linspace(0.0, 5.0, 100)))
        assert kept.n == 100

    def test_first_sample_kept(self):
        x = np.zeros(30)
        x[0] = 50.0
        x[1:] = np.random.default_rng(2).standard_normal(29) * 0.01
        kept, _ = transient_filter(make_dataset(x))
        assert kept.values[0, 0] == 50.0

    def test_too_few(self):
        with pytest.raises(TooFewSamplesError):
            transient_filter(make_dataset([1.0, 2.0]))


class TestStandardization:
    def test_two_point_column(self):
        params = fit_standardization(np.array([[0.0], [2.0]]))
        assert params.mu[0] == 1.0
        assert params.sigma[0] == pytest.approx(math.sqrt(2.0), rel=1e-15)
        z = apply_standardization(np.array([[0.0], [2.0]]), params)
        assert z[:, 0] == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)], rel=1e-15)

    def test_mean_maps_to_zero(self):
        x = np.random.default_rng(5).normal(3.0, 2.0, size=(30, 4))
        params = fit_standardization(x)
        assert np.all(apply_standardization(params.mu, params) == 0.0)

    def test_moments(self):
        x = np.random.default_rng(6).normal(100.0, 7.0, size=(500, 3))
        z = apply_standardization(x, fit_standardization(x))
        assert np.max(np.abs(z.mean(axis=0))) < 1e-12
        assert np.max(np.abs(z.std(axis=0, ddof=1) - 1)) < 1e-12

    def test_invertible(self):
        x = np.random.default_rng(7).normal(50.0, 3.0, size=(100, 3))
        params = fit_standardization(x)
        back = invert_standardization(apply_standardization(x, params), params)
        assert np.max(np.abs(back - x) / np.abs(x)) < 1e-12

    def test_mismatched_width(self):
        params = fit_standardization(np.random.default_rng(0).random((10, 3)))
        with pytest.raises(SchemaError):
            apply_standardization(np.zeros((2, 4)), params)

    def test_constant_column_rejected(self):
        with pytest.raises(DegenerateColumnError):
            fit_standardization(np.column_stack([np.arange(5.0), np.full(5, 2.0)]))

    def test_params_need_positive_sigma(self):
        with pytest.raises(DegenerateColumnError):
            StandardizationParams(mu=[0.0], sigma=[0.0])


class TestWavelet:
    def test_constant_unchanged(self):
        x = np.full(64, 3.25)
        assert np.array_equal(haar_denoise_1d(x, 3), x)

    def test_noise_variance_drops(self):
        x = np.random.default_rng(11).standard_normal(1024)
        assert np.var(haar_denoise_1d(x, 1)) < np.var(x)

    def test_sine_rmse_improves(self):
        t = np.arange(1024)
        clean = np.sin(2 * np.pi * t / 128)
        noisy = clean + 0.3 * np.random.default_rng(12).standard_normal(1024)
        out = haar_denoise_1d(noisy, 3)
        assert np.sqrt(np.mean((out - clean) ** 2)) < np.sqrt(np.mean((noisy - clean) ** 2))

    def test_matches_orthonormal_reference(self):
        x = np.random.default_rng(15).standard_normal(512) + np.linspace(0, 3, 512)
        r2 = math.sqrt(2.0)
        approx, details = x, []
        for _ in range(3):
            details.append((approx[0::2] - approx[1::2]) / r2)
            approx = (approx[0::2] + approx[1::2]) / r2
        thr = np.median(np.abs(details[0])) / 0.6745 * math.sqrt(2 * math.log(512))
        details = [np.sign(d) * np.maximum(np.abs(d) - thr, 0) for d in details]
        for d in reversed(details):
            out = np.empty(2 * approx.size)
            out[0::2], out[1::2] = (approx + d) / r2, (approx - d) / r2
            approx = out
        assert np.allclose(haar_denoise_1d(x, 3), approx, rtol=0, atol=1e-12)

    def test_non_power_of_two_length(self):
        x = np.random.default_rng(13).standard_normal(1000)
        assert haar_denoise_1d(x, 2).shape == (1000,)

    def test_dataset_wrapper(self):
        data = make_dataset(np.random.default_rng(14).standard_normal((100, 2)))
        out = wavelet_denoise(data, 2)
        assert out.values.shape == data.values.shape
        assert np.array_equal(out.timestamps, data.timestamps)

    def test_too_short(self):
        with pytest.raises(TooFewSamplesError):
            wavelet_denoise(make_dataset(np.arange(3.0)), 2)


def test_cleaning_report_merge():
    a = CleaningReport(rows_in=10, rows_out=8, outliers_removed={"x": 2})
    b = CleaningReport(rows_in=8, rows_out=7, outliers_removed={"x": 1}, transients_removed=1)
    merged = a.merge(b)
    assert merged.rows_in == 10 and merged.rows_out == 7
    assert merged.outliers_removed == {"x": 3} and merged.transients_removed == 1
