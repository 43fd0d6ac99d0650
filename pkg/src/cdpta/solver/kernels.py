"""Backend selection for the value-iteration kernel.

The compiled extension is used when it was built; setting the environment
variable ``CDPTA_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

from . import _vi_py

BACKEND = "python"
value_iteration = _vi_py.value_iteration

if os.environ.get("CDPTA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _vi  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        pass
    else:
        value_iteration = _vi.value_iteration
        BACKEND = "cython"

BACKENDS = {"python": _vi_py.value_iteration}
try:
    from . import _vi as _compiled  # type: ignore[attr-defined]

    BACKENDS["cython"] = _compiled.value_iteration
except ImportError:
    pass
