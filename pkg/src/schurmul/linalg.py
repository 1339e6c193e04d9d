"""Dense complex linear algebra for the norm machinery.

Everything is built on the Jacobi kernels from :mod:`schurmul.kernels`:
Hermitian eigendecomposition, singular values, operator norm, projection
onto the PSD cone, and unitary polar factors.  Matrices are plain numpy
complex arrays; :func:`as_matrix` is the validating constructor used at
every public entry point.  Sizes here are desk scale (<= ~260), where the
cyclic Jacobi solver converges unconditionally.
"""
from __future__ import annotations

import numpy as np

from . import kernels

DEFAULT_HERMITIAN_TOL = 1e-12


class NotHermitianError(ValueError):
    """Matrix is farther from self-adjoint than the tolerance allows."""


def as_matrix(a, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Validate and convert input to a dense complex128 matrix.

    Rejects non-2d input, empty dimensions, and non-finite entries.
    """
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or Inf entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got {arr.shape}")
    return arr


def _hermitian_part(m, tol, name="matrix"):
    scale = max(1.0, float(np.abs(m).max()))
    asym = float(np.abs(m - m.conj().T).max())
    if asym > tol * scale:
        raise NotHermitianError(
            f"{name} asymmetry {asym:.3e} exceeds tolerance {tol:.1e} (scale {scale:.3e})"
        )
    return (m + m.conj().T) / 2.0


def hermitian_eig(m, *, tol: float = DEFAULT_HERMITIAN_TOL):
    """Eigendecomposition M = U diag(w) U* of a Hermitian matrix.

    Returns (w, U) with eigenvalues sorted descending and eigenvectors as
    the columns of the unitary U.  The input is symmetrized internally;
    asymmetry beyond `tol` (relative to the largest entry) raises
    :class:`NotHermitianError`.
    """
    M = as_matrix(m, square=True)
    H = _hermitian_part(M, tol)
    w, v = kernels.eigh_batch(H[None])
    order = np.argsort(-w[0], kind="stable")
    return w[0][order], np.ascontiguousarray(v[0][:, order])


def psd_project(m, *, tol: float = DEFAULT_HERMITIAN_TOL) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix (eigenvalue clipping)."""
    M = as_matrix(m, square=True)
    H = _hermitian_part(M, tol)
    out, _ = kernels.psd_project_batch(H[None])
    return out[0]


def singular_values(m) -> np.ndarray:
    """Singular values in descending order, via the Gram matrix of the smaller side."""
    M = as_matrix(m)
    if M.shape[0] <= M.shape[1]:
        g = M @ M.conj().T
    else:
        g = M.conj().T @ M
    g = (g + g.conj().T) / 2.0
    w = kernels.eigvalsh_batch(g[None])[0]
    w = np.clip(w, 0.0, None)
    return np.sqrt(np.sort(w)[::-1])


def operator_norm(m) -> float:
    """Largest singular value."""
    return float(singular_values(m)[0])


def polar_unitary(m) -> np.ndarray:
    """Unitary polar factor U of a square matrix M = U |M|.

    Computed from the eigenbasis of M*M; directions with negligible
    singular values are completed orthonormally, so the result is unitary
    even for rank-deficient input.
    """
    M = as_matrix(m, square=True)
    n = M.shape[0]
    g = M.conj().T @ M
    g = (g + g.conj().T) / 2.0
    w, v = kernels.eigh_batch(g[None])
    w, v = w[0], v[0]
    wmax = float(w.max(initial=0.0))
    floor = max(wmax, 1.0) * 1e-28
    inv = 1.0 / np.sqrt(np.maximum(w, floor))
    u = M @ (v * inv) @ v.conj().T
    defect = float(np.abs(u.conj().T @ u - np.eye(n)).max())
    if defect > 1e-10:
        u = _orthonormalize(u)
    return u


def _orthonormalize(u):
    """Modified Gram-Schmidt on columns, randomized completion for null columns."""
    n = u.shape[0]
    q = np.array(u, dtype=np.complex128, copy=True)
    rng = np.random.default_rng(0)
    for j in range(n):
        for i in range(j):
            q[:, j] -= (q[:, i].conj() @ q[:, j]) * q[:, i]
        nrm = np.linalg.norm(q[:, j])
        while nrm < 1e-14:
            q[:, j] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            for i in range(j):
                q[:, j] -= (q[:, i].conj() @ q[:, j]) * q[:, i]
            nrm = np.linalg.norm(q[:, j])
        q[:, j] /= nrm
    return q
