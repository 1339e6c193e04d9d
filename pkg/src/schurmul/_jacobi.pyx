# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Hermitian Jacobi kernels.

Batched cyclic-Jacobi eigendecomposition, eigenvalues-only variant, and
PSD projection for stacks of small dense Hermitian matrices.  The pure
python module ``schurmul._jacobi_py`` implements the same interface and is
used when this extension is unavailable.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

ctypedef double complex zdouble

cdef extern from "complex.h" nogil:
    double creal(zdouble)
    double cimag(zdouble)
    double cabs(zdouble)
    zdouble conj(zdouble)


cdef double _offdiag_sq(zdouble* a, int n) nogil:
    cdef int i, j
    cdef double acc = 0.0, re, im
    for i in range(n):
        for j in range(i + 1, n):
            re = creal(a[i * n + j])
            im = cimag(a[i * n + j])
            acc += 2.0 * (re * re + im * im)
    return acc


cdef int _jacobi_one(zdouble* a, zdouble* v, double* w, int n,
                     double tol, int max_sweeps, bint want_v) nogil:
    """Diagonalize one n*n Hermitian matrix in place.  Returns sweeps used, -1 on failure."""
    cdef int i, r, p, q, sweep
    cdef double app, aqq, absb, tau, t, c, s, fro2, target, re, im
    cdef zdouble apq, u, us, uc, cus, cuc, xp, xq

    if want_v:
        for i in range(n * n):
            v[i] = 0.0
        for i in range(n):
            v[i * n + i] = 1.0
    if n == 1:
        w[0] = creal(a[0])
        return 0

    fro2 = 0.0
    for i in range(n * n):
        re = creal(a[i])
        im = cimag(a[i])
        fro2 += re * re + im * im
    if fro2 < 1e-300:
        fro2 = 1e-300
    target = tol * tol * fro2
    # pivots below this make no meaningful progress: if every pivot is
    # skipped, the total off-diagonal mass is already below target
    skip2 = target / (<double> (n * n))

    for sweep in range(max_sweeps):
        if _offdiag_sq(a, n) <= target:
            for i in range(n):
                w[i] = creal(a[i * n + i])
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p * n + q]
                re = creal(apq)
                im = cimag(apq)
                if re * re + im * im <= skip2:
                    continue
                absb = cabs(apq)
                app = creal(a[p * n + p])
                aqq = creal(a[q * n + q])
                u = conj(apq) / absb
                tau = (aqq - app) / (2.0 * absb)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = 1.0 / (fabs(tau) + sqrt(1.0 + tau * tau))
                    if tau < 0.0:
                        t = -t
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                us = u * s
                uc = u * c
                cus = conj(u) * s
                cuc = conj(u) * c
                # columns p, q: A <- A J
                for r in range(n):
                    xp = a[r * n + p]
                    xq = a[r * n + q]
                    a[r * n + p] = c * xp - us * xq
                    a[r * n + q] = s * xp + uc * xq
                # rows p, q: A <- J^H A
                for r in range(n):
                    xp = a[p * n + r]
                    xq = a[q * n + r]
                    a[p * n + r] = c * xp - cus * xq
                    a[q * n + r] = s * xp + cuc * xq
                # exact zeros at the pivot, real diagonal
                a[p * n + q] = 0.0
                a[q * n + p] = 0.0
                a[p * n + p] = creal(a[p * n + p])
                a[q * n + q] = creal(a[q * n + q])
                if want_v:
                    for r in range(n):
                        xp = v[r * n + p]
                        xq = v[r * n + q]
                        v[r * n + p] = c * xp - us * xq
                        v[r * n + q] = s * xp + uc * xq
    if _offdiag_sq(a, n) <= target:
        for i in range(n):
            w[i] = creal(a[i * n + i])
        return max_sweeps
    return -1


def _as_batch(a):
    arr = np.array(a, dtype=np.complex128, order="C", copy=True)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError("expected a (batch, n, n) array")
    return arr


def eigh_batch(a, double tol=1e-13, int max_sweeps=60):
    """Diagonalize a batch of Hermitian matrices: a[k] = V[k] diag(w[k]) V[k]^H.

    Eigenvalues are unsorted.  `tol` is the relative off-diagonal Frobenius
    norm at which sweeps stop.
    """
    work = _as_batch(a)
    cdef Py_ssize_t k = work.shape[0]
    cdef Py_ssize_t n = work.shape[1]
    w = np.empty((k, n), dtype=np.float64)
    v = np.empty_like(work)
    cdef zdouble[:, :, ::1] amv = work
    cdef zdouble[:, :, ::1] vmv = v
    cdef double[:, ::1] wmv = w
    cdef Py_ssize_t idx
    cdef int status = 0
    if k == 0 or n == 0:
        return w, v
    with nogil:
        for idx in range(k):
            if _jacobi_one(&amv[idx, 0, 0], &vmv[idx, 0, 0], &wmv[idx, 0],
                           <int> n, tol, max_sweeps, 1) < 0:
                status = -1
                break
    if status < 0:
        raise ArithmeticError("jacobi sweep limit reached without convergence")
    return w, v


def eigvalsh_batch(a, double tol=1e-13, int max_sweeps=60):
    """Eigenvalues (unsorted) of a batch of Hermitian matrices."""
    work = _as_batch(a)
    cdef Py_ssize_t k = work.shape[0]
    cdef Py_ssize_t n = work.shape[1]
    w = np.empty((k, n), dtype=np.float64)
    cdef zdouble[:, :, ::1] amv = work
    cdef double[:, ::1] wmv = w
    cdef Py_ssize_t idx
    cdef int status = 0
    if k == 0 or n == 0:
        return w
    with nogil:
        for idx in range(k):
            if _jacobi_one(&amv[idx, 0, 0], NULL, &wmv[idx, 0],
                           <int> n, tol, max_sweeps, 0) < 0:
                status = -1
                break
    if status < 0:
        raise ArithmeticError("jacobi sweep limit reached without convergence")
    return w


def psd_project_batch(a, double tol=1e-13, int max_sweeps=60):
    """Frobenius-nearest PSD projection of each matrix in a Hermitian batch.

    Returns (projected, lam_min) where lam_min[k] is the smallest eigenvalue
    of a[k] before clipping.
    """
    work = _as_batch(a)
    cdef Py_ssize_t k = work.shape[0]
    cdef Py_ssize_t n = work.shape[1]
    out = np.empty_like(work)
    v = np.empty_like(work)
    w = np.empty((k, n), dtype=np.float64)
    lam_min = np.empty(k, dtype=np.float64)
    cdef zdouble[:, :, ::1] amv = work
    cdef zdouble[:, :, ::1] omv = out
    cdef zdouble[:, :, ::1] vmv = v
    cdef double[:, ::1] wmv = w
    cdef double[::1] lmv = lam_min
    cdef Py_ssize_t idx
    cdef int i, j, c2, status = 0
    cdef double lmin, lam
    cdef zdouble acc
    if k == 0 or n == 0:
        return out, lam_min
    with nogil:
        for idx in range(k):
            if _jacobi_one(&amv[idx, 0, 0], &vmv[idx, 0, 0], &wmv[idx, 0],
                           <int> n, tol, max_sweeps, 1) < 0:
                status = -1
                break
            lmin = wmv[idx, 0]
            for i in range(1, n):
                if wmv[idx, i] < lmin:
                    lmin = wmv[idx, i]
            lmv[idx] = lmin
            # reconstruct over the positive part only
            for i in range(n):
                for j in range(i, n):
                    acc = 0.0
                    for c2 in range(n):
                        lam = wmv[idx, c2]
                        if lam > 0.0:
                            acc += lam * vmv[idx, i, c2] * conj(vmv[idx, j, c2])
                    if i == j:
                        omv[idx, i, i] = creal(acc)
                    else:
                        omv[idx, i, j] = acc
                        omv[idx, j, i] = conj(acc)
    if status < 0:
        raise ArithmeticError("jacobi sweep limit reached without convergence")
    return out, lam_min
