"""Pure numpy implementations of the numerical kernels.

Same contracts and arithmetic order as ``_ckernels.pyx``; used when the
compiled extension is unavailable or ``MPCAFD_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np


def jacobi_eigh(a, tol=1e-15, max_sweeps=64):
    """Cyclic Jacobi eigensolver for a symmetric matrix.

    Returns ``(diag, V, sweeps)`` with eigenvalues unsorted and
    eigenvectors in the columns of ``V``.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    total = float(np.sum(a * a))
    sweeps = 0
    for sweeps in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if off <= tol * tol * total or off == 0.0 or sweeps == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps


def nearest_centroid(x, centroids):
    """Index of the nearest centroid per row (lowest index on ties) and
    the squared Euclidean distance to it."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    c = np.ascontiguousarray(centroids, dtype=np.float64)
    n, m = x.shape
    d2 = np.zeros((n, c.shape[0]))
    # column-by-column accumulation keeps the summation order sequential
    for j in range(m):
        diff = x[:, j, None] - c[None, :, j]
        d2 += diff * diff
    labels = np.argmin(d2, axis=1).astype(np.int64)
    return labels, d2[np.arange(n), labels]


def score_indices(z, loadings, inv_lam, t2_limit, spe_limit):
    """T2, SPE and the combined index for each row of standardized ``z``."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    p = np.ascontiguousarray(loadings, dtype=np.float64)
    scores = z @ p
    t2 = (scores * scores) @ np.asarray(inv_lam, dtype=np.float64)
    resid = z - scores @ p.T
    spe = np.einsum("ij,ij->i", resid, resid)
    phi = spe / spe_limit + t2 / t2_limit
    return t2, spe, phi
