"""Schur multiplier maps and their exact norms.

The norm of the entrywise multiplication map X -> A o X equals the best
factorization value  min (max_i ||x_i||) (max_j ||y_j||)  over vector
families with a_ij = <x_i, y_j>; equivalently, the smallest t admitting a
PSD completion [[P, A], [A*, Q]] with diagonal at most t.  (For maps of
this kind the completely bounded norm coincides with the ordinary norm,
so a single number is reported.)

The completion problem is solved by Dykstra alternating projections
between the PSD cone and the entrywise constraint set, driven by a
certified bracket on t:

* a probe that reaches the constraint set yields an explicit PSD matrix,
  hence a factorization certificate and an upper bound;
* a probe that stalls yields a separating functional (read off the
  limiting displacement between the two sets) which, after a small
  diagonal lift, is a dual certificate and a lower bound.

Brackets therefore shrink from both sides with certificates at each end,
and the reported value is always the certified upper end.  A seeded
random search over unitaries provides the independent lower bound
required for the reported duality gap (unitaries suffice: they are the
extreme points of the unit ball).
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import multiprocessing

import numpy as np

from . import kernels
from .linalg import as_matrix, hermitian_eig, operator_norm, polar_unitary
from .patterns import PatternSet, has_three_of_four, is_tro_closed

__all__ = [
    "FactorizationCertificate",
    "NormReport",
    "GapScanReport",
    "BudgetExceededError",
    "schur_apply",
    "haagerup_norm",
    "lower_bound_search",
    "certify_idempotent",
    "gap_scan",
    "direct_sum",
    "kronecker",
    "NORM_GAP_EDGE",
]

# Upper edge of the forbidden norm interval for idempotent multipliers.
NORM_GAP_EDGE = 2.0 / np.sqrt(3.0)

# Exhaustive scans are refused above this many pattern bits.
EXHAUSTIVE_LIMIT_BITS = 16


class BudgetExceededError(ValueError):
    """Exhaustive enumeration was requested beyond the desk-scale budget."""


def schur_apply(a, x) -> np.ndarray:
    """Entrywise (Schur) product A o X."""
    A = as_matrix(a, name="multiplier")
    X = as_matrix(x, name="operand")
    if A.shape != X.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {X.shape}")
    return A * X


def direct_sum(a, b) -> np.ndarray:
    """Block diagonal A (+) B.  Multiplier norms satisfy the supremum law
    ||S_{A(+)B}|| = max(||S_A||, ||S_B||); tested, not assumed."""
    A = as_matrix(a, name="left")
    B = as_matrix(b, name="right")
    m1, n1 = A.shape
    m2, n2 = B.shape
    out = np.zeros((m1 + m2, n1 + n2), dtype=np.complex128)
    out[:m1, :n1] = A
    out[m1:, n1:] = B
    return out


def kronecker(a, b) -> np.ndarray:
    """Kronecker product.  Multiplier norms multiply: ||S_{AxB}|| =
    ||S_A|| ||S_B||; tested, not assumed."""
    A = as_matrix(a, name="left")
    B = as_matrix(b, name="right")
    return np.kron(A, B)


def certify_idempotent(a, tol: float = 1e-6) -> Optional[PatternSet]:
    """Pattern of an idempotent multiplier symbol, if it is one.

    An idempotent Schur map forces every entry to be 0 or 1.  When every
    entry of `a` lies within `tol` of {0, 1}, returns the PatternSet of
    entries near 1; otherwise returns None.
    """
    A = as_matrix(a)
    dist0 = np.abs(A)
    dist1 = np.abs(A - 1.0)
    if not (np.minimum(dist0, dist1) <= tol).all():
        return None
    return PatternSet.from_matrix(dist1 <= tol, tol=0.5)


# ---------------------------------------------------------------------------
# certificates and reports
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class FactorizationCertificate:
    """Vectors x_i, y_j with a_ij = <x_i, y_j> and the achieved bound.

    `value` is (max_i ||x_i||)(max_j ||y_j||), an upper bound for the
    multiplier norm; `residual` is max_ij |a_ij - <x_i, y_j>|.
    """

    row_vectors: np.ndarray  # (m, r)
    col_vectors: np.ndarray  # (n, r)
    value: float
    residual: float

    def __post_init__(self):
        value, _ = self.recompute_value()
        if abs(value - self.value) > 1e-10 * max(1.0, abs(self.value)):
            raise ValueError("stored certificate value does not recompute")

    def recompute_value(self) -> tuple[float, float]:
        rmax = float(np.sqrt((np.abs(self.row_vectors) ** 2).sum(axis=1).max()))
        cmax = float(np.sqrt((np.abs(self.col_vectors) ** 2).sum(axis=1).max()))
        return rmax * cmax, rmax

    def gram(self) -> np.ndarray:
        """The matrix <x_i, y_j> reproduced by the certificate."""
        return self.row_vectors @ self.col_vectors.conj().T

    def recompute_residual(self, a) -> float:
        return float(np.abs(as_matrix(a) - self.gram()).max())

    @property
    def rank(self) -> int:
        return int(self.row_vectors.shape[1])


@dataclass(eq=False)
class NormReport:
    """Two-sided norm estimate for one multiplier.

    sdp_value is the certified upper bound (it equals the certificate's
    achieved value); lower_bound is attained by the witness contraction:
    lower_bound = ||A o witness||.  certified_lower is the dual
    (separating-functional) bound from the completion solver itself.
    """

    sdp_value: float
    lower_bound: float
    certificate: FactorizationCertificate
    witness: np.ndarray
    iterations: int
    converged: bool
    certified_lower: float = 0.0


# ---------------------------------------------------------------------------
# the completion solver: batched Dykstra probes with certified brackets
# ---------------------------------------------------------------------------


@dataclass
class SolverOptions:
    """Tuning for the PSD-completion bracket solver.

    width: final bracket width on t (the reported value sits at most
    width + cert_tol above the true norm).  cert_tol: accepted eigenvalue
    slack when certifying a probe feasible.  probe_budget: projection
    iteration cap per probe; total_budget caps the whole solve.  engine
    selects the alternating-projection scheme: "dr" (Douglas-Rachford
    splitting, default) or "dykstra" (plain Dykstra-corrected alternating
    projections); both use only the PSD projection and entrywise clamps
    and feed the same certificates.
    """

    width: float = 5e-5
    cert_tol: float = 2e-5
    probe_budget: int = 2500
    total_budget: int = 50_000
    check_every: int = 20
    plateau_window: int = 40
    plateau_rtol: float = 1e-5
    proj_tol: float = 1e-12
    engine: str = "dr"


def _clamp_constraints(x, a, t, m, n):
    """Project each matrix of the batch onto {M = M*, off-block = A, diag <= t}."""
    x += x.conj().transpose(0, 2, 1)
    x *= 0.5
    x[:, :m, m:] = a
    x[:, m:, :m] = a.conj().transpose(0, 2, 1)
    idx = np.arange(m + n)
    d = np.minimum(x[:, idx, idx].real, t[:, None])
    x[:, idx, idx] = d
    return x


def _farkas_lower(disp, a, m, n):
    """Certified lower bounds from displacement vectors of stalled probes.

    The displacement s between the PSD cone and the constraint set
    separates the two; forcing the dual structure (diagonal blocks
    diagonal and nonnegative) and lifting the diagonal by the most
    negative eigenvalue produces an exact dual certificate
    [[diag, -Z], [-Z*, diag]] >= 0 with bound 2 Re<Z, A> / trace(diag).
    """
    k = disp.shape[0]
    nn = m + n
    idx = np.arange(nn)
    s = (disp + disp.conj().transpose(0, 2, 1)) * 0.5
    d = np.clip(s[:, idx, idx].real, 0.0, None)
    z = -s[:, :m, m:]
    cert = np.zeros_like(disp)
    cert[:, :m, m:] = -z
    cert[:, m:, :m] = -z.conj().transpose(0, 2, 1)
    cert[:, idx, idx] = d
    lam = kernels.eigvalsh_batch(cert).min(axis=1)
    scale = np.maximum(1.0, np.abs(d).max(axis=1))
    lift = np.maximum(0.0, -lam) + 1e-13 * scale
    denom = d.sum(axis=1) + nn * lift
    num = 2.0 * np.einsum("kij,kij->k", z.conj(), a).real
    out = np.zeros(k)
    ok = denom > 1e-300
    out[ok] = num[ok] / denom[ok]
    return out


def _completion_probe(a, t, opts: SolverOptions, warm=None):
    """Run one batch of feasibility probes at per-item levels t.

    One projection scheme iterates per item until it can either produce a
    PSD matrix meeting the constraints (certified feasible) or a flat
    displacement between the PSD cone and the constraint set (stalled,
    yielding a dual lower bound).

    Returns (status, value, lower, iters, xcert, warm_out): status 1 =
    certified feasible within cert_tol, status 2 = stalled with a dual
    bound in `lower`, status 0 = budget exhausted.  `value` always carries
    the best partially-certified upper bound seen (any eigenvalue slack
    eps of the constrained iterate gives the valid bound achieved by
    iterate + eps I), with the matching shifted matrix in xcert.
    warm_out holds the engine state for warm starts.
    """
    k, m, n = a.shape
    nn = m + n
    dykstra = opts.engine == "dykstra"
    if warm is None:
        state = [np.zeros((k, nn, nn), dtype=np.complex128)
                 for _ in range(3 if dykstra else 1)]
        state[0] = _clamp_constraints(state[0], a, t, m, n)
    else:
        state = [np.array(s, copy=True) for s in warm]

    status = np.zeros(k, dtype=np.int8)
    value = np.full(k, np.inf)
    lower = np.full(k, -np.inf)
    iters = np.zeros(k, dtype=np.int64)
    xcert = np.zeros((k, nn, nn), dtype=np.complex128)
    warm_out = [np.array(s, copy=True) for s in state]

    hist = np.full((k, opts.plateau_window), np.nan)
    idx_map = np.arange(k)  # position in working set -> original row
    eye = np.eye(nn)

    it = 0
    while idx_map.size and it < opts.probe_budget:
        it += 1
        if dykstra:
            x, p, q = state
            y = x + p
            proj, _ = kernels.psd_project_batch(y, opts.proj_tol)
            p = y - proj
            y2 = proj + q
            xa = _clamp_constraints(y2, a[idx_map], t[idx_map], m, n)
            q = y2 - xa
            state = [xa, p, q]
            disp = proj - xa
        else:
            (z,) = state
            proj, _ = kernels.psd_project_batch(z, opts.proj_tol)
            xa = _clamp_constraints(2.0 * proj - z, a[idx_map], t[idx_map], m, n)
            z = z + (xa - proj)
            state = [z]
            disp = proj - xa
        res = np.sqrt(np.abs(disp * disp.conj()).sum(axis=(1, 2)).real)
        iters[idx_map] += 1

        slot = (it - 1) % opts.plateau_window
        old = hist[:, slot].copy()
        hist[:, slot] = res

        # candidates for an eigenvalue check: periodic, nearly feasible
        # (lam_min(xa) >= -||disp||_F), or displacement no longer moving
        near = res <= opts.cert_tol
        flat = np.zeros(idx_map.size, dtype=bool)
        if it > opts.plateau_window:
            flat = (old > 0) & (np.abs(old - res) <= opts.plateau_rtol * np.maximum(res, 1e-300))
        check = near | flat | (it % opts.check_every == 0)
        exit_mask = np.zeros(idx_map.size, dtype=bool)
        cidx = np.nonzero(check)[0]
        if cidx.size:
            lam = kernels.eigvalsh_batch(xa[cidx], opts.proj_tol).min(axis=1)
            eps = np.maximum(0.0, -lam)
            # every slack gives a valid (partial) upper bound; keep the best
            vals = _achieved_value(xa[cidx], eps, m)
            rows = idx_map[cidx]
            better = vals < value[rows]
            if better.any():
                bidx = cidx[better]
                value[idx_map[bidx]] = vals[better]
                xcert[idx_map[bidx]] = xa[bidx] + eps[better][:, None, None] * eye
            good = eps <= opts.cert_tol
            gidx = cidx[good]
            if gidx.size:
                status[idx_map[gidx]] = 1
                exit_mask[gidx] = True
            # stalled and not certifiable: extract the dual bound and stop
            sidx = cidx[~good & flat[cidx] & (res[cidx] > opts.cert_tol)]
            if sidx.size:
                rows = idx_map[sidx]
                status[rows] = 2
                lower[rows] = np.maximum(
                    lower[rows], _farkas_lower(disp[sidx], a[rows], m, n)
                )
                exit_mask[sidx] = True

        if exit_mask.any():
            keep = ~exit_mask
            gone = idx_map[exit_mask]
            for w, s in zip(warm_out, state):
                w[gone] = s[exit_mask]
            state = [s[keep] for s in state]
            idx_map = idx_map[keep]
            hist = hist[keep]

    if idx_map.size:
        # budget exhausted: one last dual extraction from the displacement
        if dykstra:
            x, p, q = state
            y = x + p
            proj, _ = kernels.psd_project_batch(y, opts.proj_tol)
            disp = proj - _clamp_constraints(
                proj + q, a[idx_map], t[idx_map], m, n
            )
        else:
            (z,) = state
            proj, _ = kernels.psd_project_batch(z, opts.proj_tol)
            disp = proj - _clamp_constraints(
                2.0 * proj - z, a[idx_map], t[idx_map], m, n
            )
        lower[idx_map] = np.maximum(
            lower[idx_map], _farkas_lower(disp, a[idx_map], m, n)
        )
        for w, s in zip(warm_out, state):
            w[idx_map] = s
    return status, value, lower, iters, xcert, warm_out


def _achieved_value(xa, eps, m):
    """Certificate value sqrt(max diag P) * sqrt(max diag Q) of xa + eps I."""
    nn = xa.shape[1]
    idx = np.arange(nn)
    d = xa[:, idx, idx].real + eps[:, None]
    dp = np.clip(d[:, :m], 0.0, None).max(axis=1)
    dq = np.clip(d[:, m:], 0.0, None).max(axis=1)
    return np.sqrt(dp * dq)


def schur_norm_batch(mats, opts: SolverOptions = SolverOptions(), *, want_blocks=False,
                     lower_hint=None):
    """Certified multiplier norms for a batch of same-shaped matrices.

    The bracket on each norm closes from both sides: feasible probes pull
    the certified upper end down, stalled probes push the lower end up
    through their dual certificates.  Probes are placed just above the
    current lower end (the dual jumps make this nearly a secant method),
    with a bisection-style fallback whenever a stalled probe fails to move
    the bracket by a fair fraction.

    Returns a dict of arrays: value (certified upper bounds), lower
    (certified dual lower bounds), iterations, converged (bracket closed
    to opts.width within budget), and optionally blocks (the feasible PSD
    completions behind each value).
    """
    a = np.ascontiguousarray(mats, dtype=np.complex128)
    if a.ndim != 3:
        raise ValueError("expected a (batch, m, n) array")
    k, m, n = a.shape
    nn = m + n

    lo_cert = np.abs(a).max(axis=(1, 2))  # compression to a single entry
    if lower_hint is not None:
        lo_cert = np.maximum(lo_cert, np.asarray(lower_hint, dtype=float))
    row_bound = np.sqrt((np.abs(a) ** 2).sum(axis=2).max(axis=1))
    col_bound = np.sqrt((np.abs(a) ** 2).sum(axis=1).max(axis=1))
    hi = np.minimum(row_bound, col_bound)  # explicit basis-vector factorizations
    lo = lo_cert.copy()  # probe-placement bracket (may also absorb stalled probe levels)

    value = hi.copy()
    iterations = np.zeros(k, dtype=np.int64)
    blocks = np.zeros((k, nn, nn), dtype=np.complex128) if want_blocks else None
    if want_blocks:
        # trivial completion behind the row/column bound
        for i in range(k):
            blocks[i] = _trivial_block(a[i], hi[i])

    nstate = 3 if opts.engine == "dykstra" else 1
    warm = [np.zeros((k, nn, nn), dtype=np.complex128) for _ in range(nstate)]
    budget_left = np.full(k, opts.total_budget, dtype=np.int64)
    # probe offset above lo: optimistic (0.6 * width) while dual jumps make
    # progress, a fraction of the bracket once they stop
    step = np.full(k, 0.6 * opts.width)

    while True:
        act = np.nonzero((hi - lo > opts.width) & (budget_left > 0))[0]
        if act.size == 0:
            break
        t = lo[act] + np.maximum(step[act], 0.25 * opts.width)
        t = np.minimum(t, hi[act] - 0.25 * opts.width)
        status, val, lowb, iters, xcert, wout = _completion_probe(
            a[act], t, opts, warm=[w[act] for w in warm]
        )
        iterations[act] += iters
        budget_left[act] -= iters
        for w, s in zip(warm, wout):
            w[act] = s

        # partial upper bounds are certified regardless of probe outcome
        have_val = np.isfinite(val)
        if have_val.any():
            rows = act[have_val]
            better = val[have_val] < value[rows]
            upd = rows[better]
            value[upd] = val[have_val][better]
            hi[upd] = np.minimum(hi[upd], value[upd])
            if want_blocks:
                blocks[upd] = xcert[have_val][better]
        # dual bounds are certified regardless of probe outcome
        have_low = np.isfinite(lowb)
        if have_low.any():
            rows = act[have_low]
            lo_cert[rows] = np.maximum(lo_cert[rows], lowb[have_low])
            lo[rows] = np.maximum(lo[rows], lo_cert[rows])

        # placement: stay optimistic (probe just above lo) while probes
        # resolve quickly; fall back to bisection-style steps once a probe
        # went slow, so later probes carry a decisive margin either way
        fast = (status == 1) & (iters <= max(200, opts.probe_budget // 4))
        step[act[fast]] = 0.6 * opts.width
        slow = ~fast
        if slow.any():
            rows = act[slow]
            step[rows] = np.maximum(0.35 * (hi[rows] - lo[rows]), 0.6 * opts.width)
        stalled = status == 2
        if stalled.any():
            rows = act[stalled]
            # the probe level itself is an uncertified lower bound; use it
            # for placement so a weak dual certificate cannot cause a loop
            lo[rows] = np.maximum(
                lo[rows], np.minimum(t[stalled], hi[rows] - 0.5 * opts.width)
            )

    converged = hi - lo <= opts.width
    out = {
        "value": value,
        "lower": lo_cert,
        "iterations": iterations,
        "converged": converged,
    }
    if want_blocks:
        out["blocks"] = blocks
    return out


def _trivial_block(a, bound):
    """PSD completion behind the basis-vector factorization bound.

    Row side: x_i = (row i)/sqrt(bound), y_j = sqrt(bound) e_j gives the
    exactly PSD completion [[AA*/bound, A], [A*, bound I]] with diagonal
    at most `bound`; the column side is symmetric.
    """
    m, n = a.shape
    nn = m + n
    out = np.zeros((nn, nn), dtype=np.complex128)
    if bound <= 0.0:
        return out
    rn2 = (np.abs(a) ** 2).sum(axis=1).max()
    cn2 = (np.abs(a) ** 2).sum(axis=0).max()
    if rn2 <= cn2:
        out[:m, :m] = (a @ a.conj().T) / bound
        out[m:, m:] = np.eye(n) * bound
    else:
        out[:m, :m] = np.eye(m) * bound
        out[m:, m:] = (a.conj().T @ a) / bound
    out[:m, m:] = a
    out[m:, :m] = a.conj().T
    return out


# ---------------------------------------------------------------------------
# public per-matrix solvers
# ---------------------------------------------------------------------------


def _certificate_from_block(block, a, eig_floor=1e-12) -> FactorizationCertificate:
    m, n = a.shape
    w, v = hermitian_eig(block, tol=1e-8)
    w = np.clip(w, 0.0, None)
    keep = w > eig_floor
    if not keep.any():
        keep = np.zeros_like(w, dtype=bool)
        keep[0] = True
    factor = v[:, keep] * np.sqrt(w[keep])
    rows = np.ascontiguousarray(factor[:m])
    cols = np.ascontiguousarray(factor[m:])
    rmax = float(np.sqrt((np.abs(rows) ** 2).sum(axis=1).max()))
    cmax = float(np.sqrt((np.abs(cols) ** 2).sum(axis=1).max()))
    residual = float(np.abs(a - rows @ cols.conj().T).max())
    return FactorizationCertificate(rows, cols, rmax * cmax, residual)


def haagerup_norm(a, tol: float = 1e-7, *, seed: int = 0, restarts: int = 32,
                  max_iter: int = 50_000, gap_tol: float = 1e-3) -> NormReport:
    """Exact multiplier norm with a factorization certificate.

    Runs the seeded unitary search first (its value is a true lower
    bound), then closes a certified bracket on the completion SDP down to
    width ~tol.  The reported sdp_value is the value achieved by the
    returned certificate; `converged` requires the bracket to close and
    the duality gap sdp_value - lower_bound to fall below max(gap_tol,
    10*tol).  When the iteration budget `max_iter` runs out first, the
    best bounds so far are returned with converged = False.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = as_matrix(a)
    m, n = A.shape

    if np.abs(A).max() == 0.0:
        cert = FactorizationCertificate(
            np.zeros((m, 1), dtype=np.complex128),
            np.zeros((n, 1), dtype=np.complex128),
            0.0,
            0.0,
        )
        witness = np.zeros((m, n), dtype=np.complex128)
        return NormReport(0.0, 0.0, cert, witness, 0, True, 0.0)

    lower, witness = lower_bound_search(A, seed=seed, restarts=restarts)

    width = max(tol / 2.0, 1e-10)
    opts = SolverOptions(
        width=width,
        cert_tol=max(tol / 4.0, 1e-10),
        probe_budget=min(max_iter, 2500),
        total_budget=max_iter,
    )
    res = schur_norm_batch(A[None], opts, want_blocks=True,
                           lower_hint=np.array([max(0.0, lower - 1e-12)]))
    sdp_value = float(res["value"][0])
    cert = _certificate_from_block(res["blocks"][0], A)
    if cert.value <= sdp_value:
        sdp_value = cert.value
    iterations = int(res["iterations"][0])
    certified_lower = float(res["lower"][0])
    converged = bool(res["converged"][0]) and (sdp_value - lower) <= max(gap_tol, 10 * tol)
    return NormReport(
        sdp_value=sdp_value,
        lower_bound=lower,
        certificate=cert,
        witness=witness,
        iterations=iterations,
        converged=converged,
        certified_lower=certified_lower,
    )


def lower_bound_search(a, seed: int = 0, restarts: int = 32, *,
                       ascent_iters: int = 250, step0: float = 0.25,
                       shrink: float = 0.5, grow: float = 1.4,
                       min_step: float = 1e-9, patience: int = 10) -> tuple[float, np.ndarray]:
    """Best lower bound max_U ||A o U|| over unitaries, by seeded ascent.

    Rectangular input is zero-padded to square for the search; the witness
    is restricted back to the original shape (a contraction).  Each
    restart draws a Gaussian matrix, maps it to a unitary by polar
    factorization, and climbs: perturb along the norm supergradient,
    re-unitarize, accept improvements, halving the step on rejection and
    stopping below `min_step`.  Deterministic for a fixed seed.  Restarts
    stop early after `patience` consecutive restarts without improvement.
    """
    A = as_matrix(a)
    m, n = A.shape
    nn = max(m, n)
    pad = np.zeros((nn, nn), dtype=np.complex128)
    pad[:m, :n] = A
    rng = np.random.default_rng(seed)

    def climb(u):
        x = pad * u
        val = _sigma_pair(x)[0]
        step = step0
        for _ in range(ascent_iters):
            if step < min_step:
                break
            sig, uvec, vvec = _sigma_pair(x, want_vectors=True)
            if sig <= 0:
                grad = rng.standard_normal((nn, nn)) + 1j * rng.standard_normal((nn, nn))
            else:
                grad = np.conj(pad) * np.outer(uvec, vvec.conj())
            gn = np.abs(grad).max()
            if gn < 1e-300:
                break
            cand = polar_unitary(u + (step / gn) * grad)
            xc = pad * cand
            vc = _sigma_pair(xc)[0]
            if vc > val + 1e-15:
                u, x, val = cand, xc, vc
                step *= grow
            else:
                step *= shrink
        return val, u

    best_val = -np.inf
    best_u = np.eye(nn, dtype=np.complex128)
    stale = 0
    for r in range(max(1, restarts)):
        if r == 0:
            u0 = np.eye(nn, dtype=np.complex128)
        else:
            g = rng.standard_normal((nn, nn)) + 1j * rng.standard_normal((nn, nn))
            u0 = polar_unitary(g)
        val, u = climb(u0)
        if val > best_val + 1e-12:
            best_val, best_u = val, u
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    witness = np.ascontiguousarray(best_u[:m, :n])
    value = operator_norm(A * witness)
    return value, witness


def _sigma_pair(x, want_vectors=False):
    """Largest singular value of x, optionally with its singular vectors."""
    g = x.conj().T @ x
    g = (g + g.conj().T) / 2
    if not want_vectors:
        lam = kernels.eigvalsh_batch(g[None])[0].max()
        return (float(np.sqrt(max(lam, 0.0))),)
    w, v = kernels.eigh_batch(g[None])
    j = int(np.argmax(w[0]))
    sig = float(np.sqrt(max(w[0][j], 0.0)))
    vvec = v[0][:, j]
    if sig > 0:
        uvec = x @ vvec / sig
    else:
        uvec = np.zeros_like(vvec)
    return sig, uvec, vvec


# ---------------------------------------------------------------------------
# the norm-gap scan
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class GapScanReport:
    """Result of a full (or sampled) scan over 0/1 patterns on a grid.

    Norms are the certified upper ends of per-pattern brackets of width
    ~tol/2.  gap_empty: no nonzero pattern norm fell strictly inside
    (1 + tol, edge - tol) where edge = 2/sqrt(3).  equivalence_ok: norm
    <= 1 + tol exactly for the 3-of-4 patterns (nonzero patterns).
    """

    rows: int
    cols: int
    tol: float
    bits: np.ndarray
    norms: np.ndarray
    lower_bounds: np.ndarray
    three_of_four: np.ndarray
    tro_closed: np.ndarray
    sampled: bool
    gap_empty: bool = field(init=False)
    equivalence_ok: bool = field(init=False)
    distinct_norms: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        nz = self.bits != 0
        norms = self.norms[nz]
        in_gap = (norms > 1.0 + self.tol) & (norms < NORM_GAP_EDGE - self.tol)
        self.gap_empty = not bool(in_gap.any())
        low = self.norms <= 1.0 + self.tol
        self.equivalence_ok = bool((low[nz] == self.three_of_four[nz]).all())
        self.distinct_norms = _cluster(self.norms, 10 * self.tol)

    @property
    def evaluated(self) -> int:
        return int(self.bits.size)


def _cluster(values, eps) -> tuple[float, ...]:
    out = []
    for v in np.sort(values):
        if not out or v - out[-1] > eps:
            out.append(float(v))
    return tuple(out)


def _bits_to_matrices(bits, m, n):
    k = len(bits)
    out = np.zeros((k, m, n), dtype=np.complex128)
    arr = np.asarray(bits, dtype=np.uint64)
    for pos in range(m * n):
        i, j = divmod(pos, n)
        mask = (arr >> np.uint64(pos)) & np.uint64(1)
        out[:, i, j] = mask
    return out


def _scan_chunk(payload):
    m, n, bits, tol = payload
    mats = _bits_to_matrices(bits, m, n)
    opts = SolverOptions(width=tol / 2.0, cert_tol=2 * tol / 5.0)
    res = schur_norm_batch(mats, opts)
    t34 = np.zeros(len(bits), dtype=bool)
    tro = np.zeros(len(bits), dtype=bool)
    for idx, b in enumerate(bits):
        pat = PatternSet.from_bits(m, n, int(b))
        t34[idx] = has_three_of_four(pat)
        tro[idx] = is_tro_closed(pat)
    return res["value"], res["lower"], t34, tro


def gap_scan(m: int, n: int, tol: float = 1e-4, *, workers: int = 1,
             sample: Optional[int] = None, seed: int = 0,
             chunk_size: int = 1024) -> GapScanReport:
    """Scan 0/1 patterns on an m x n grid: norm plus combinatorial class.

    Exhaustive over all 2^(m*n) patterns when m*n <= 16; beyond that a
    seeded `sample` count must be requested (BudgetExceededError
    otherwise).  Each pattern's norm is solved to a certified bracket of
    width tol/2; the report records per-pattern norms, the 3-of-4 and
    triple-product-closure booleans, whether norm <= 1 + tol happened
    exactly on the 3-of-4 patterns, and whether the open interval
    (1 + tol, 2/sqrt(3) - tol) stayed empty.  The empty pattern (norm 0)
    is exempt from the gap statement.

    Chunks of patterns are evaluated independently (optionally on a
    process pool); the report is a deterministic reduction independent of
    worker count.
    """
    if m < 1 or n < 1:
        raise ValueError("grid dimensions must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    total_bits = m * n
    if sample is None:
        if total_bits > EXHAUSTIVE_LIMIT_BITS:
            raise BudgetExceededError(
                f"2^{total_bits} patterns exceeds the exhaustive budget "
                f"(2^{EXHAUSTIVE_LIMIT_BITS}); request sampling"
            )
        bits = np.arange(1 << total_bits, dtype=np.uint64)
        sampled = False
    else:
        if sample < 1:
            raise ValueError("sample count must be positive")
        rng = np.random.default_rng(seed)
        if total_bits >= 64:
            raise ValueError("grids beyond 63 bits are not supported")
        draw = rng.integers(0, 1 << total_bits, size=sample, dtype=np.uint64)
        bits = np.unique(draw)
        sampled = True

    chunks = [bits[i: i + chunk_size] for i in range(0, len(bits), chunk_size)]
    payloads = [(m, n, chunk, tol) for chunk in chunks]

    if workers == 1 or len(chunks) == 1:
        parts = [_scan_chunk(p) for p in payloads]
    else:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            parts = list(pool.map(_scan_chunk, payloads))

    norms = np.concatenate([p[0] for p in parts])
    lowers = np.concatenate([p[1] for p in parts])
    t34 = np.concatenate([p[2] for p in parts])
    tro = np.concatenate([p[3] for p in parts])
    return GapScanReport(
        rows=m,
        cols=n,
        tol=tol,
        bits=bits,
        norms=norms,
        lower_bounds=lowers,
        three_of_four=t34,
        tro_closed=tro,
        sampled=sampled,
    )
