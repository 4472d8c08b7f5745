"""Pick the compiled correlation core when available.

Set ``HIERKRIG_BACKEND=python`` to force the numpy fallback.
"""
import os

from . import _core_py

EXP, MATERN32, MATERN52 = _core_py.EXP, _core_py.MATERN32, _core_py.MATERN52

_core = None
if os.environ.get("HIERKRIG_BACKEND", "").lower() != "python":
    try:
        from . import _core
    except ImportError:  # extension not built
        _core = None

if _core is not None:
    BACKEND = "cython"
    corr_product = _core.corr_product
    corr_product_grad = _core.corr_product_grad
else:
    BACKEND = "python"
    corr_product = _core_py.corr_product
    corr_product_grad = _core_py.corr_product_grad
