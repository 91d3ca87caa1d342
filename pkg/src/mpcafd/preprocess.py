"""Training-time data cleaning and the z-score transform."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .dataset_io import TimeSeriesDataset
from .errors import DegenerateColumnError, SchemaError, TooFewSamplesError

# sigma of first differences at or below this (relative to the largest
# step) is treated as zero and the transient rule skips the variable
_FLAT_DIFF_RTOL = 1e-9


@dataclass(frozen=True)
class StandardizationParams:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=np.float64))
        if self.mu.shape != self.sigma.shape or self.mu.ndim != 1:
            raise SchemaError("mu and sigma must be vectors of equal length")
        if np.any(~(self.sigma > 0)):
            raise DegenerateColumnError("standard deviations must be strictly positive")

    @property
    def m(self) -> int:
        return self.mu.shape[0]


@dataclass
class CleaningReport:
    rows_in: int
    rows_out: int
    outliers_removed: dict[str, int] = field(default_factory=dict)
    transients_removed: int = 0

    def merge(self, other: "CleaningReport") -> "CleaningReport":
        """Chain two consecutive cleaning steps into one report."""
        counts = dict(self.outliers_removed)
        for k, v in other.outliers_removed.items():
            counts[k] = counts.get(k, 0) + v
        return CleaningReport(
            rows_in=self.rows_in,
            rows_out=other.rows_out,
            outliers_removed=counts,
            transients_removed=self.transients_removed + other.transients_removed,
        )


def _column_stats(values: np.ndarray, names: list[str]) -> tuple[np.ndarray, np.ndarray]:
    mu = values.mean(axis=0)
    sigma = values.std(axis=0, ddof=1)
    flat = np.flatnonzero(~(sigma > 0))
    if flat.size:
        raise DegenerateColumnError(
            "constant column(s): " + ", ".join(names[j] for j in flat)
        )
    return mu, sigma


def chauvenet_mask(values: np.ndarray, names: list[str] | None = None) -> np.ndarray:
    """Boolean (n, m) matrix flagging cells rejected by Chauvenet's criterion.

    A cell is rejected when ``n * erfc(|x - mu| / (sigma * sqrt(2))) < 0.5``
    with column mean and sample standard deviation.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    names = names or [f"x{j}" for j in range(values.shape[1])]
    mu, sigma = _column_stats(values, names)
    z = np.abs(values - mu) / (sigma * math.sqrt(2.0))
    return n * special.erfc(z) < 0.5


def chauvenet_filter(data: TimeSeriesDataset) -> tuple[TimeSeriesDataset, CleaningReport]:
    """Single-pass Chauvenet outlier removal; any rejected cell drops its row."""
    if data.n < 4:
        raise TooFewSamplesError(f"Chauvenet's criterion needs n >= 4, got {data.n}")
    bad = chauvenet_mask(data.values, data.variable_names)
    drop = bad.any(axis=1)
    kept = data.subset(~drop)
    report = CleaningReport(
        rows_in=data.n,
        rows_out=kept.n,
        outliers_removed={name: int(bad[:, j].sum()) for j, name in enumerate(data.variable_names)},
    )
    return kept, report


def transient_filter(
    data: TimeSeriesDataset, k_sigma: float = 3.0
) -> tuple[TimeSeriesDataset, CleaningReport]:
    """Drop samples whose step from the previous sample exceeds
    ``k_sigma`` standard deviations of that variable's first differences.

    The first sample is never dropped; variables whose first differences
    are (numerically) constant are skipped.
    """
    if data.n < 3:
        raise TooFewSamplesError(f"transient filter needs n >= 3, got {data.n}")
    steps = np.abs(np.diff(data.values, axis=0))
    sd = np.diff(data.values, axis=0).std(axis=0, ddof=1)
    active = sd > _FLAT_DIFF_RTOL * np.maximum(steps.max(axis=0), np.finfo(float).tiny)
    jump = (steps > k_sigma * sd) & active
    drop = np.concatenate([[False], jump.any(axis=1)])
    kept = data.subset(~drop)
    report = CleaningReport(rows_in=data.n, rows_out=kept.n, transients_removed=int(drop.sum()))
    return kept, report


def fit_standardization(data: TimeSeriesDataset | np.ndarray) -> StandardizationParams:
    values, names = _unpack(data)
    if values.shape[0] < 2:
        raise TooFewSamplesError("standardization needs at least 2 samples")
    mu, sigma = _column_stats(values, names)
    return StandardizationParams(mu=mu, sigma=sigma)


def apply_standardization(
    data: TimeSeriesDataset | np.ndarray, params: StandardizationParams
) -> np.ndarray:
    """``z = (x - mu) / sigma`` element-wise; accepts a matrix or one sample."""
    values = data.values if isinstance(data, TimeSeriesDataset) else np.asarray(data, dtype=np.float64)
    if values.shape[-1] != params.m:
        raise SchemaError(f"expected {params.m} variables, got {values.shape[-1]}")
    return (values - params.mu) / params.sigma


def invert_standardization(z: np.ndarray, params: StandardizationParams) -> np.ndarray:
    return np.asarray(z) * params.sigma + params.mu


def _unpack(data) -> tuple[np.ndarray, list[str]]:
    if isinstance(data, TimeSeriesDataset):
        return data.values, data.variable_names
    values = np.asarray(data, dtype=np.float64)
    if values.ndim != 2:
        raise SchemaError("expected an n x m matrix")
    return values, [f"x{j}" for j in range(values.shape[1])]


# -- Haar wavelet denoising -------------------------------------------------

def _haar_forward(x: np.ndarray, levels: int) -> tuple[np.ndarray, list[np.ndarray]]:
    # average/difference form: coefficients are the orthonormal ones scaled
    # by 2**(-j/2) at level j, which keeps constant signals exact
    approx = x
    details = []
    for _ in range(levels):
        even, odd = approx[0::2], approx[1::2]
        details.append((even - odd) / 2.0)
        approx = (even + odd) / 2.0
    return approx, details


def _haar_inverse(approx: np.ndarray, details: list[np.ndarray]) -> np.ndarray:
    for d in reversed(details):
        out = np.empty(2 * approx.size)
        out[0::2] = approx + d
        out[1::2] = approx - d
        approx = out
    return approx


def haar_denoise_1d(x: np.ndarray, levels: int = 1) -> np.ndarray:
    """Soft-threshold the Haar details of one signal at the universal
    threshold ``sigma_hat * sqrt(2 ln n)``, ``sigma_hat = MAD(d1) / 0.6745``
    (both on the orthonormal coefficient scale)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    size = 1 << max(levels, (n - 1).bit_length())
    padded = np.pad(x, (0, size - n), mode="symmetric") if size > n else x
    approx, details = _haar_forward(padded, levels)
    sigma_hat = np.median(np.abs(details[0])) * math.sqrt(2.0) / 0.6745
    thr = sigma_hat * math.sqrt(2.0 * math.log(n))
    shrunk = []
    for j, d in enumerate(details, 1):
        t = thr / 2.0 ** (j / 2.0)
        shrunk.append(np.sign(d) * np.maximum(np.abs(d) - t, 0.0))
    return _haar_inverse(approx, shrunk)[:n]


def wavelet_denoise(data: TimeSeriesDataset, levels: int = 1) -> TimeSeriesDataset:
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if data.n < 2 ** levels:
        raise TooFewSamplesError(f"{levels}-level Haar transform needs n >= {2 ** levels}, got {data.n}")
    out = np.column_stack([haar_denoise_1d(data.values[:, j], levels) for j in range(data.m)])
    return data.with_values(out)
