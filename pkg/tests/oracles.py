"""Independent reference implementations used as test oracles.

Quantiles come from integrating the density with adaptive quadrature
and bisecting on the resulting CDF; nothing here calls the inverse CDF
routines the package relies on.
"""
import math

import numpy as np
from scipy import integrate


def _cdf(logpdf, x, lo=0.0):
    if x <= lo:
        return 0.0
    val, _ = integrate.quad(lambda t: math.exp(logpdf(t)), lo, x, epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


def normal_cdf(x):
    half = _cdf(lambda t: -0.5 * t * t - 0.5 * math.log(2 * math.pi), abs(x))
    return 0.5 + half if x >= 0 else 0.5 - half


def chi2_logpdf(df):
    k = df / 2.0
    const = -k * math.log(2.0) - math.lgamma(k)
    return lambda t: const + (k - 1.0) * math.log(t) - t / 2.0 if t > 0 else -math.inf


def f_logpdf(d1, d2):
    const = 0.5 * d1 * math.log(d1) + 0.5 * d2 * math.log(d2) - (
        math.lgamma(d1 / 2) + math.lgamma(d2 / 2) - math.lgamma((d1 + d2) / 2)
    )

    def lp(t):
        if t <= 0:
            return -math.inf
        return const + (d1 / 2 - 1) * math.log(t) - 0.5 * (d1 + d2) * math.log(d1 * t + d2)

    return lp


def bisect(cdf, alpha, lo, hi, iters=200):
    while cdf(hi) < alpha:
        lo, hi = hi, 2 * hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def normal_quantile(alpha):
    if alpha == 0.5:
        return 0.0
    sign = 1.0 if alpha > 0.5 else -1.0
    a = alpha if alpha > 0.5 else 1.0 - alpha
    return sign * bisect(normal_cdf, a, 0.0, 4.0)


def chi2_quantile(df, alpha):
    lp = chi2_logpdf(df)
    return bisect(lambda x: _cdf(lp, x), alpha, 0.0, max(df, 1.0) * 4)


def f_quantile(d1, d2, alpha):
    lp = f_logpdf(d1, d2)
    return bisect(lambda x: _cdf(lp, x), alpha, 0.0, 8.0)


def chauvenet_rows(values):
    """Rows rejected by evaluating Chauvenet's criterion point by point."""
    values = [list(map(float, row)) for row in values]
    n = len(values)
    m = len(values[0])
    rejected = set()
    for j in range(m):
        col = [row[j] for row in values]
        mean = sum(col) / n
        sd = math.sqrt(sum((v - mean) ** 2 for v in col) / (n - 1))
        for i, v in enumerate(col):
            if n * math.erfc(abs(v - mean) / (sd * math.sqrt(2.0))) < 0.5:
                rejected.add(i)
    return rejected


def chauvenet_cutoff(n):
    """|z| beyond which a point from n samples is rejected: erfc(c/sqrt2) = 0.5/n."""
    return bisect(lambda c: 1.0 - math.erfc(c / math.sqrt(2.0)), 1.0 - 0.5 / n, 0.0, 10.0)


def spd_spectrum_data(eigenvalues, n, rng):
    """Gaussian samples whose covariance has the given spectrum in a random
    orthonormal basis; returns ``(samples, basis)`` with eigenvectors as columns."""
    m = len(eigenvalues)
    q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    return (rng.standard_normal((n, m)) * np.sqrt(eigenvalues)) @ q.T, q
