"""Pure-python (numpy) twin of the compiled Jacobi kernels.

Same interface as the ``schurmul._jacobi`` extension module: batched
Hermitian eigendecomposition by cyclic Jacobi rotations, eigenvalues-only
variant, and projection onto the PSD cone.  Pivots follow a round-robin
schedule so that each round consists of disjoint index pairs; a whole
round of rotations is then applied to every matrix in the batch at once
with vectorized array operations.
"""
from __future__ import annotations

import numpy as np

# Rotations with |off-diagonal| below this are skipped (identity).
_TINY = 1e-300


def _round_robin_rounds(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pivot schedule: n-1 (or n) rounds of disjoint (p, q) pairs covering all pairs."""
    players = list(range(n)) + ([n] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _rotate_round(a, v, p, q, skip2):
    """Apply one round of disjoint Jacobi rotations to every matrix in the batch.

    For each pair (p, q): with b = a[p, q] = |b| e^{i phi}, the unitary
    J = diag(1, conj(b)/|b|) . G(theta) zeroes the (p, q) entry, where G is
    the classical real rotation with tan(2 theta) = 2|b| / (a_pp - a_qq).
    Pivots whose squared modulus is below the per-matrix threshold `skip2`
    are left alone (the rotation becomes the identity).
    """
    app = a[:, p, p].real
    aqq = a[:, q, q].real
    apq = a[:, p, q]
    absb2 = (apq * apq.conj()).real
    act = absb2 > skip2[:, None]
    if not act.any():
        return
    absb = np.sqrt(absb2)
    safe = np.where(act, absb, 1.0)
    u = np.where(act, np.conj(apq) / safe, 1.0 + 0j)
    tau = (aqq - app) / (2.0 * safe)
    t = np.where(tau == 0.0, 1.0, np.sign(tau) / (np.abs(tau) + np.hypot(1.0, tau)))
    t = np.where(act, t, 0.0)
    c = 1.0 / np.hypot(1.0, t)
    s = t * c
    us = u * s
    uc = u * c

    cp = a[:, :, p]
    cq = a[:, :, q]
    a[:, :, p] = c[:, None, :] * cp - us[:, None, :] * cq
    a[:, :, q] = s[:, None, :] * cp + uc[:, None, :] * cq

    rp = a[:, p, :]
    rq = a[:, q, :]
    cu = np.conj(u)
    a[:, p, :] = c[:, :, None] * rp - (cu * s)[:, :, None] * rq
    a[:, q, :] = s[:, :, None] * rp + (cu * c)[:, :, None] * rq

    # rotated pivot entries are zero in exact arithmetic; enforce to limit drift
    kk, jj = np.nonzero(act)
    a[kk, p[jj], q[jj]] = 0.0
    a[kk, q[jj], p[jj]] = 0.0

    if v is not None:
        vp = v[:, :, p]
        vq = v[:, :, q]
        v[:, :, p] = c[:, None, :] * vp - us[:, None, :] * vq
        v[:, :, q] = s[:, None, :] * vp + uc[:, None, :] * vq


def _offdiag_sq(a):
    iu, ju = np.triu_indices(a.shape[1], 1)
    off = a[:, iu, ju]
    return 2.0 * (off * off.conj()).real.sum(axis=1)


def _jacobi(a, tol, max_sweeps, want_vectors):
    work = np.array(a, dtype=np.complex128, order="C", copy=True)
    if work.ndim != 3 or work.shape[1] != work.shape[2]:
        raise ValueError("expected a (batch, n, n) array")
    k, n, _ = work.shape
    v = None
    if want_vectors:
        v = np.zeros_like(work)
        v[:, np.arange(n), np.arange(n)] = 1.0
    if n == 1 or k == 0:
        w = np.einsum("kii->ki", work).real.copy()
        return w, v
    fro2 = np.abs(work * work.conj()).sum(axis=(1, 2)).real
    target = (tol * tol) * np.maximum(fro2, _TINY)
    skip2 = target / (n * n)
    rounds = _round_robin_rounds(n)
    for _ in range(max_sweeps):
        if (_offdiag_sq(work) <= target).all():
            break
        for p, q in rounds:
            _rotate_round(work, v, p, q, skip2)
    else:
        raise ArithmeticError("jacobi sweep limit reached without convergence")
    w = np.einsum("kii->ki", work).real.copy()
    return w, v


def eigh_batch(a, tol: float = 1e-13, max_sweeps: int = 60):
    """Diagonalize a batch of Hermitian matrices: a[k] = V[k] diag(w[k]) V[k]^H.

    Eigenvalues are unsorted.  `tol` is the relative off-diagonal Frobenius
    norm at which sweeps stop.
    """
    return _jacobi(a, tol, max_sweeps, True)


def eigvalsh_batch(a, tol: float = 1e-13, max_sweeps: int = 60):
    """Eigenvalues (unsorted) of a batch of Hermitian matrices."""
    w, _ = _jacobi(a, tol, max_sweeps, False)
    return w


def psd_project_batch(a, tol: float = 1e-13, max_sweeps: int = 60):
    """Frobenius-nearest PSD projection of each matrix in a Hermitian batch.

    Returns (projected, lam_min) where lam_min[k] is the smallest eigenvalue
    of a[k] before clipping.
    """
    w, v = _jacobi(a, tol, max_sweeps, True)
    lam_min = w.min(axis=1)
    wp = np.clip(w, 0.0, None)
    out = np.einsum("kij,kj,klj->kil", v, wp, v.conj(), optimize=True)
    out += out.conj().transpose(0, 2, 1)
    out *= 0.5
    return np.ascontiguousarray(out), lam_min
