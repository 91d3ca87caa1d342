"""Kernel backend selection.

The compiled extension ``_ckernels`` is used when it imports; otherwise,
or when the environment variable ``MPCAFD_PURE_PYTHON`` is set to a
truthy value, the numpy fallback in ``_pykernels`` is used. ``BACKEND``
names the active choice.
"""
import os

import numpy as np

from . import _pykernels

_want_pure = os.environ.get("MPCAFD_PURE_PYTHON", "").lower() not in ("", "0", "false", "no")

if _want_pure:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

jacobi_eigh = _impl.jacobi_eigh
nearest_centroid = _impl.nearest_centroid
score_indices = _impl.score_indices


def eigh_sorted(s, backend=None):
    """Eigen-decompose a symmetric matrix, eigenvalues descending.

    Each eigenvector is sign-normalized so that its largest-magnitude
    component (first one on ties) is positive, which makes fits
    reproducible across runs and backends.
    """
    impl = _impl if backend is None else backend
    w, v, _ = impl.jacobi_eigh(s)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    for k in range(v.shape[1]):
        pivot = np.argmax(np.abs(v[:, k]))
        if v[pivot, k] < 0:
            v[:, k] = -v[:, k]
    return w, v
