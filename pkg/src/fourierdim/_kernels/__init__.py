"""Kernel backend selection: compiled Cython core if available, numpy fallback.

Set FOURIERDIM_PURE_PYTHON=1 to force the fallback (used by the benchmark and
for debugging); both backends implement the same contracts and are compared in
tests/test_kernels.py.
"""

import os

import numpy as np

from . import _pyfallback

if os.environ.get("FOURIERDIM_PURE_PYTHON"):
    _impl = _pyfallback
    HAVE_COMPILED = False
else:
    try:
        from . import _core as _impl

        HAVE_COMPILED = True
    except ImportError:
        _impl = _pyfallback
        HAVE_COMPILED = False


def backend() -> str:
    return "compiled" if HAVE_COMPILED else "python"


def atomic_ft(Z, pts, w):
    Z = np.ascontiguousarray(Z, dtype=float)
    pts = np.ascontiguousarray(pts, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    return _impl.atomic_ft(Z, pts, w)


def selfsimilar_ft(z, ratio, trans, probs, depth):
    z = np.ascontiguousarray(z, dtype=float)
    trans = np.ascontiguousarray(trans, dtype=float)
    probs = np.ascontiguousarray(probs, dtype=float)
    return _impl.selfsimilar_ft(z, float(ratio), trans, probs, int(depth))


def capacity_fw(points, r, s, tol, max_iter):
    points = np.ascontiguousarray(points, dtype=float)
    return _impl.capacity_fw(points, float(r), float(s), float(tol), int(max_iter))


def capacity_matvec(points, r, s, w):
    points = np.ascontiguousarray(points, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    return _impl.capacity_matvec(points, float(r), float(s), w)
