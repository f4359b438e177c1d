"""Backend selection for the hot loops.

The compiled extension is used when importable; setting the environment
variable ``SPINCOMB_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _pykernels

if os.environ.get("SPINCOMB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"
rk4_arrowhead = _impl.rk4_arrowhead
volterra_gregory = _impl.volterra_gregory
lawson_arrowhead = _impl.lawson_arrowhead
