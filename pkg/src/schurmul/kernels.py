"""Kernel backend selection.

The hot numerical kernels (batched Hermitian Jacobi eigensolver and PSD
projection) exist twice: as the compiled extension ``schurmul._jacobi``
and as the numpy fallback ``schurmul._jacobi_py``.  The compiled module is
preferred when importable; both expose the same three functions, so
everything above this module is backend-agnostic.
"""
from __future__ import annotations

try:
    from . import _jacobi as _impl

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _jacobi_py as _impl

    BACKEND = "python"

eigh_batch = _impl.eigh_batch
eigvalsh_batch = _impl.eigvalsh_batch
psd_project_batch = _impl.psd_project_batch

__all__ = ["BACKEND", "eigh_batch", "eigvalsh_batch", "psd_project_batch"]
