"""Inverse CDFs used by the control limits.

Thin, validated wrappers over the Cephes routines shipped in
:mod:`scipy.special`. The test suite checks them against an independent
density-quadrature + bisection oracle.
"""
from __future__ import annotations

import math

from scipy import special

from .errors import ParameterError


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0) or math.isnan(alpha):
        raise ParameterError(f"alpha must lie strictly between 0 and 1, got {alpha}")


def _check_dof(name: str, value: float) -> None:
    if not (value > 0.0) or math.isinf(value):
        raise ParameterError(f"{name} must be a positive finite number, got {value}")


def normal_inv(alpha: float) -> float:
    """Standard normal quantile ``c`` with ``P(Z <= c) = alpha``."""
    _check_alpha(alpha)
    return float(special.ndtri(alpha))


def f_inv(d1: float, d2: float, alpha: float) -> float:
    """Quantile of the F distribution with ``(d1, d2)`` degrees of freedom."""
    _check_alpha(alpha)
    _check_dof("d1", d1)
    _check_dof("d2", d2)
    return float(special.fdtri(d1, d2, alpha))


def chi2_inv(df: float, alpha: float) -> float:
    """Chi-squared quantile; ``df`` may be any positive real.

    Solves ``P(df/2, x/2) = alpha`` for the regularized lower incomplete
    gamma function ``P``.
    """
    _check_alpha(alpha)
    _check_dof("df", df)
    return 2.0 * float(special.gammaincinv(0.5 * df, alpha))
