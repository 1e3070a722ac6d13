"""Kernel backend selection.

The compiled extension ``_ckernels`` is preferred. Setting the environment
variable ``UDW_PURE_PYTHON=1`` (or a failed import) selects the numpy
implementation in ``_pykernels``. ``BACKEND`` names the active choice.
"""
import os

from . import _pykernels

if os.environ.get("UDW_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

k_imag_trapz = _impl.k_imag_trapz
k_imag_trapz_array = _impl.k_imag_trapz_array
fourier_sum = _impl.fourier_sum

__all__ = ["BACKEND", "k_imag_trapz", "k_imag_trapz_array", "fourier_sum"]
