"""Backend selection for the leapfrog kernel.

The compiled extension is used when importable; set ``SPHMEAN_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _kernels_py

python_leapfrog = _kernels_py.leapfrog

try:
    from ._kernels import leapfrog as compiled_leapfrog
except ImportError:
    compiled_leapfrog = None

if compiled_leapfrog is not None and not os.environ.get("SPHMEAN_PURE_PYTHON"):
    leapfrog = compiled_leapfrog
    BACKEND = "cython"
else:
    leapfrog = python_leapfrog
    BACKEND = "python"
