"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable. Setting
``RANKPREF_BACKEND=python`` forces the numpy fallback.
"""

import os

from rankpref import _fallback

if os.environ.get("RANKPREF_BACKEND", "").lower() == "python":
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from rankpref import _kernels as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        kernels = _fallback
        BACKEND = "python"

balance_additive = kernels.balance_additive
label_components = kernels.label_components
