"""Hot-kernel dispatch: compiled Cython extension when available, numpy
fallback otherwise.

`BACKEND` records which implementation is active ("cython" or "numpy").
"""
import numpy as np

from . import _numpy

try:
    from . import _core

    _HAVE_CORE = True
    BACKEND = "cython"
except ImportError:
    _core = None
    _HAVE_CORE = False
    BACKEND = "numpy"


def pattern_loglik(x, p):
    """(N, Q) log-likelihood of each response row at each quadrature node."""
    if _HAVE_CORE:
        xu = np.ascontiguousarray(x, dtype=np.uint8)
        pc = np.ascontiguousarray(p, dtype=np.float64)
        return _core.pattern_loglik(xu, pc)
    return _numpy.pattern_loglik(x, p)


def score_distribution(p):
    """Number-correct score distribution for independent items (length J+1)."""
    if _HAVE_CORE:
        return _core.score_distribution(np.ascontiguousarray(p, dtype=np.float64))
    return _numpy.score_distribution(p)
