"""Backend selection for the hot inner loops.

The compiled extension ``_ckernels`` is used when it was built; otherwise the
numpy implementations in ``_pykernels`` are used. Setting the environment
variable ``IRLSREG_PURE_PYTHON=1`` forces the fallback.

All functions take and return contiguous float64 arrays.
"""

import os

import numpy as np

from . import _pykernels

_ext = None
if os.environ.get("IRLSREG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _ext
    except ImportError:  # extension not built
        _ext = None

BACKEND = "cython" if _ext is not None else "python"
_impl = _ext if _ext is not None else _pykernels


def _vec(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def correlate2d_same(image, kernel):
    """Zero-padded 2D correlation whose output has the image's shape."""
    return _impl.correlate2d_same(
        np.ascontiguousarray(image, dtype=np.float64),
        np.ascontiguousarray(kernel, dtype=np.float64),
    )


def irls_weights(x, eps, q):
    return _impl.irls_weights(_vec(x), float(eps), _vec(q))


def reweighted_scale(v, lam, q, w):
    return _impl.reweighted_scale(_vec(v), _vec(lam), _vec(q), _vec(w))


def soft_threshold(v, tau):
    return _impl.soft_threshold(_vec(v), float(tau))


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
