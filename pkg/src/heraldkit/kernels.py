"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
pure-Python reference in ``_pykernels`` is loaded. Set
``HERALDKIT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("HERALDKIT_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        pass

sinc2 = _impl.sinc2
phi_from_mismatch = _impl.phi_from_mismatch
max_phi_conjugate = _impl.max_phi_conjugate
max_phi_conjugate_many = _impl.max_phi_conjugate_many
gate_outcomes = _impl.gate_outcomes

__all__ = [
    "BACKEND",
    "sinc2",
    "phi_from_mismatch",
    "max_phi_conjugate",
    "max_phi_conjugate_many",
    "gate_outcomes",
]
