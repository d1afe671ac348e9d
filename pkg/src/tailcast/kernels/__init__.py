"""Likelihood kernel dispatch: compiled extension if built, NumPy otherwise.

Set TAILCAST_PURE_PYTHON=1 to force the fallback (used by the equivalence
tests and the benchmark).
"""

import os

from . import _pykernels

if os.environ.get("TAILCAST_PURE_PYTHON"):
    _impl = _pykernels
    HAVE_COMPILED = False
else:
    try:
        from . import _ckernels as _impl

        HAVE_COMPILED = True
    except ImportError:
        _impl = _pykernels
        HAVE_COMPILED = False

DIST_NORMAL = _pykernels.DIST_NORMAL
DIST_STUDENT_T = _pykernels.DIST_STUDENT_T
DIST_TW = _pykernels.DIST_TW
LOGPDF_FLOOR = _pykernels.LOGPDF_FLOOR

rg_filter = _impl.rg_filter
rg_loglik = _impl.rg_loglik
garch_loglik = _impl.garch_loglik
