"""Single PCA model: decomposition, detection indices, control limits.

All models work on standardized data, so the decomposed matrix is the
sample correlation matrix and its eigenvalues sum to the variable count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from . import kernels
from .config import GlobalConfig
from .errors import (
    DataError,
    DegenerateResidualError,
    InsufficientSamplesError,
    ModelNotFinalizedError,
    ParameterError,
    SchemaError,
    SingularModelError,
)
from .preprocess import StandardizationParams, apply_standardization, fit_standardization
from .quantiles import chi2_inv, f_inv, normal_inv

EIG_TOL = 1e-12


@dataclass(frozen=True)
class IndexTriple:
    t2: float
    spe: float
    phi: float


@dataclass
class PcaSubmodel:
    """PCA model of one operating condition.

    ``loadings`` is m x l with orthonormal columns ordered by descending
    eigenvalue; ``eigenvalues`` is the full length-m spectrum of the
    per-condition correlation matrix. ``centroid`` lives in the bank's
    global standardized space and is only used for routing.
    """

    condition_id: int
    prior_key: Any
    standardization: StandardizationParams
    loadings: np.ndarray
    eigenvalues: np.ndarray
    l: int
    n_train: int
    t2_limit: Optional[float] = None
    spe_limit: Optional[float] = None
    phi_limit: Optional[float] = None
    centroid: Optional[np.ndarray] = None
    max_match_distance: float = math.inf

    @property
    def m(self) -> int:
        return self.loadings.shape[0]

    @property
    def retained_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[: self.l]

    def inverse_retained(self) -> np.ndarray:
        lam = self.retained_eigenvalues
        if np.any(lam <= EIG_TOL):
            raise SingularModelError(
                f"condition {self.condition_id}: retained eigenvalue <= {EIG_TOL}"
            )
        return 1.0 / lam

    def _require_limits(self) -> None:
        if self.t2_limit is None or self.spe_limit is None:
            raise ModelNotFinalizedError(f"condition {self.condition_id}: limits not computed")
        if not (self.t2_limit > 0 and self.spe_limit > 0):
            raise ModelNotFinalizedError(f"condition {self.condition_id}: non-positive limits")

    def standardize(self, x_raw: np.ndarray) -> np.ndarray:
        return apply_standardization(x_raw, self.standardization)

    def score(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized ``(t2, spe, phi)`` for rows of standardized data."""
        self._require_limits()
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        if z.shape[1] != self.m:
            raise SchemaError(f"expected {self.m} variables, got {z.shape[1]}")
        return kernels.score_indices(
            z, self.loadings, self.inverse_retained(), self.t2_limit, self.spe_limit
        )

    def check_invariants(self) -> None:
        p = self.loadings
        if not 1 <= self.l < self.m or p.shape != (self.m, self.l):
            raise SchemaError(f"condition {self.condition_id}: bad loading shape {p.shape}")
        if np.max(np.abs(p.T @ p - np.eye(self.l))) >= 1e-8:
            raise DataError(f"condition {self.condition_id}: loadings not orthonormal")
        if np.any(np.diff(self.eigenvalues) > 0):
            raise DataError(f"condition {self.condition_id}: eigenvalues not descending")
        if abs(self.eigenvalues.sum() - self.m) > 1e-6:
            raise DataError(f"condition {self.condition_id}: eigenvalues do not sum to m")
        for name in ("t2_limit", "spe_limit", "phi_limit"):
            value = getattr(self, name)
            if value is None or not value > 0:
                raise ModelNotFinalizedError(f"condition {self.condition_id}: {name} missing")


def _as_matrix(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise SchemaError("expected an n x m matrix")
    if not np.all(np.isfinite(z)):
        raise DataError("non-finite values in input matrix")
    return z


def correlation_matrix(z: np.ndarray) -> np.ndarray:
    """``Z^T Z / (n - 1)`` for column-standardized ``Z``."""
    z = _as_matrix(z)
    s = z.T @ z / (z.shape[0] - 1)
    return 0.5 * (s + s.T)


def select_retained(eigenvalues: np.ndarray, cpv_target: float) -> int:
    """Smallest l whose cumulative percent variance reaches ``cpv_target``,
    clamped to ``[1, m - 1]``."""
    m = eigenvalues.shape[0]
    total = eigenvalues.sum()
    cpv = np.cumsum(eigenvalues) / total
    # tiny slack so an exact hit is not lost to rounding
    l = int(np.searchsorted(cpv, cpv_target - 1e-12) + 1)
    return min(max(l, 1), m - 1)


def fit_pca(z: np.ndarray, cpv_target: float = 0.85):
    """Eigen-decompose the correlation matrix of standardized ``z``.

    Returns ``(loadings, eigenvalues, l)``: the m x l retained loadings,
    the full descending spectrum (entries below 1e-12 clamped to zero)
    and the retained component count.
    """
    z = _as_matrix(z)
    n, m = z.shape
    if n <= m:
        raise InsufficientSamplesError(f"PCA needs n > m, got n={n}, m={m}")
    if not 0.0 < cpv_target <= 1.0:
        raise ParameterError(f"cpv_target must lie in (0, 1], got {cpv_target}")
    w, v = kernels.eigh_sorted(correlation_matrix(z))
    w = np.where(w < EIG_TOL, 0.0, w)
    l = select_retained(w, cpv_target)
    return v[:, :l].copy(), w, l


def project(x, model: PcaSubmodel) -> tuple[np.ndarray, np.ndarray]:
    """Split standardized ``x`` into its principal and residual parts."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.m:
        raise SchemaError(f"expected {model.m} variables, got {x.shape[-1]}")
    p = model.loadings
    x_hat = (x @ p) @ p.T
    return x_hat, x - x_hat


def t2_statistic(x, model: PcaSubmodel) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.m,):
        raise SchemaError(f"expected a length-{model.m} sample")
    t = model.loadings.T @ x
    return float(np.sum(t * t * model.inverse_retained()))


def spe_statistic(x, model: PcaSubmodel) -> float:
    _, x_tilde = project(x, model)
    return float(x_tilde @ x_tilde)


def phi_statistic(x, model: PcaSubmodel) -> float:
    model._require_limits()
    return spe_statistic(x, model) / model.spe_limit + t2_statistic(x, model) / model.t2_limit


def indices(x, model: PcaSubmodel) -> IndexTriple:
    t2 = t2_statistic(x, model)
    spe = spe_statistic(x, model)
    model._require_limits()
    return IndexTriple(t2=t2, spe=spe, phi=spe / model.spe_limit + t2 / model.t2_limit)


def phi_matrix(model: PcaSubmodel) -> np.ndarray:
    """``Phi = P L^-1 P^T / T2_lim + (I - P P^T) / SPE_lim``, so that
    ``phi(x) = x^T Phi x``."""
    model._require_limits()
    p = model.loadings
    m = model.m
    phi = (p * model.inverse_retained()) @ p.T / model.t2_limit
    phi += (np.eye(m) - p @ p.T) / model.spe_limit
    return 0.5 * (phi + phi.T)


# -- control limits ---------------------------------------------------------


def t2_limit(l: int, n: int, alpha: float, variant: str = "standard") -> float:
    """Hotelling T2 control limit from the F distribution.

    ``standard``: ``l (n-1)(n+1) / (n (n-l)) * F(l, n-l; alpha)``.
    ``paper_printed`` replaces ``n (n-l)`` with ``n (n-1)``.
    """
    if not (isinstance(l, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise ParameterError("l and n must be integers")
    if not n > l >= 1:
        raise ParameterError(f"need n > l >= 1, got l={l}, n={n}")
    f = f_inv(l, n - l, alpha)
    if variant == "standard":
        denom = n * (n - l)
    elif variant == "paper_printed":
        denom = n * (n - 1)
    else:
        raise ParameterError(f"unknown t2 limit variant {variant!r}")
    return l * (n - 1) * (n + 1) / denom * f


def spe_limit(eigenvalues, l: int, alpha: float, variant: str = "standard") -> float:
    """Jackson-Mudholkar SPE (Q) limit from the discarded eigenvalues.

    ``h0 = 1 - 2 theta1 theta3 / (3 theta2^2)`` for ``standard``;
    ``paper_printed`` uses ``3 theta1^2`` in the denominator.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)[l:]
    theta1, theta2, theta3 = (float(np.sum(lam ** i)) for i in (1, 2, 3))
    if theta1 <= EIG_TOL:
        raise DegenerateResidualError("residual subspace carries no variance")
    if variant == "standard":
        h0 = 1.0 - 2.0 * theta1 * theta3 / (3.0 * theta2 ** 2)
    elif variant == "paper_printed":
        h0 = 1.0 - 2.0 * theta1 * theta3 / (3.0 * theta1 ** 2)
    else:
        raise ParameterError(f"unknown SPE h0 variant {variant!r}")
    if h0 == 0.0:
        raise DegenerateResidualError("h0 = 0, SPE limit undefined")
    c = normal_inv(alpha)
    base = c * math.sqrt(2.0 * theta2 * h0 * h0) / theta1 + 1.0 + theta2 * h0 * (h0 - 1.0) / theta1 ** 2
    if base <= 0.0:
        raise DegenerateResidualError(f"SPE limit base {base} is not positive")
    return theta1 * base ** (1.0 / h0)


def phi_limit_from_matrices(s: np.ndarray, phi: np.ndarray, alpha: float) -> float:
    """``g * chi2(h; alpha)`` with ``g = tr((S Phi)^2) / tr(S Phi)`` and
    ``h = tr(S Phi)^2 / tr((S Phi)^2)``."""
    sp = s @ phi
    tr1 = float(np.trace(sp))
    tr2 = float(np.trace(sp @ sp))
    if not tr1 > 0 or not tr2 > 0:
        raise DegenerateResidualError(f"tr(S Phi) = {tr1} is not positive")
    g = tr2 / tr1
    h = tr1 * tr1 / tr2
    return g * chi2_inv(h, alpha)


def phi_limit(model: PcaSubmodel, alpha: float) -> float:
    """Combined-index limit evaluated from the stored spectrum.

    Equivalent to :func:`phi_limit_from_matrices` on the reconstructed
    correlation matrix: in the eigenbasis ``S Phi`` is diagonal with
    ``1 / T2_lim`` on retained and ``lambda / SPE_lim`` on residual axes.
    """
    model._require_limits()
    diag = np.concatenate(
        [np.full(model.l, 1.0 / model.t2_limit), model.eigenvalues[model.l:] / model.spe_limit]
    )
    tr1 = float(diag.sum())
    tr2 = float(np.sum(diag * diag))
    g = tr2 / tr1
    h = tr1 * tr1 / tr2
    return g * chi2_inv(h, alpha)


def fit_submodel(
    x_raw: np.ndarray,
    config: GlobalConfig,
    condition_id: int = 1,
    prior_key: Any = None,
    centroid: Optional[np.ndarray] = None,
    max_match_distance: float = math.inf,
) -> PcaSubmodel:
    """Standardize raw members of one condition, fit PCA and all limits."""
    x_raw = _as_matrix(x_raw)
    n, m = x_raw.shape
    if n <= m:
        raise InsufficientSamplesError(
            f"condition {condition_id}: {n} samples for {m} variables (need n > m)"
        )
    params = fit_standardization(x_raw)
    z = apply_standardization(x_raw, params)
    loadings, eigenvalues, l = fit_pca(z, config.cpv_target)
    model = PcaSubmodel(
        condition_id=condition_id,
        prior_key=prior_key,
        standardization=params,
        loadings=loadings,
        eigenvalues=eigenvalues,
        l=l,
        n_train=n,
        centroid=None if centroid is None else np.asarray(centroid, dtype=np.float64),
        max_match_distance=float(max_match_distance),
    )
    model.t2_limit = t2_limit(l, n, config.alpha, config.t2_limit_variant)
    model.spe_limit = spe_limit(eigenvalues, l, config.alpha, config.spe_h0_variant)
    s = correlation_matrix(z)
    model.phi_limit = phi_limit_from_matrices(s, phi_matrix(model), config.alpha)
    return model
