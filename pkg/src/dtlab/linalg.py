"""Dense complex linear algebra: trace norms, log-determinants, Schur forms.

Everything here is a pure function on square complex matrices.  The Schur
triangularization is implemented directly (Householder reduction to Hessenberg
form, then explicitly shifted QR iteration with Wilkinson shifts and
deflation) so the rest of the package has an eigenvalue path whose behaviour
is fully under our control; the LU-based log-determinant is the deliberately
separate second route used by the density-field estimator.

Intended scale is dense matrices up to a couple thousand rows in double
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConvergenceError",
    "SchurForm",
    "as_square_matrix",
    "norm2",
    "lu_logabsdet",
    "lu_logabsdet_stack",
    "schur",
    "eigenvalues",
    "spectral_radius_bound",
]

#: Relative sub-diagonal magnitude below which an entry is deflated to zero.
_COL_BATCH = 10
_DEFLATE_TOL = 1e-14
#: QR sweep budget is this multiple of the matrix dimension.
_SWEEPS_PER_DIM = 30
#: Sweeps without a deflation before an exceptional (ad hoc) shift is used.
_STALL_PERIOD = 16


class ConvergenceError(RuntimeError):
    """QR iteration failed to deflate within the sweep budget."""


@dataclass(frozen=True)
class SchurForm:
    """Unitary triangularization a = q t q*.

    ``t`` is upper triangular, ``q`` unitary, and ``residual`` is the
    relative reconstruction error ||a - q t q*||_F / ||a||_F.
    """

    t: np.ndarray
    q: np.ndarray
    residual: float

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.t)


def as_square_matrix(a, name: str = "a") -> np.ndarray:
    """Validate and return ``a`` as a square complex128 array."""
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        raise ValueError(f"{name} must have at least one row")
    m = m.astype(np.complex128, copy=False)
    if not np.isfinite(m).all():
        raise ValueError(f"{name} contains non-finite entries")
    return m


def norm2(a) -> float:
    """Normalized trace norm tr_k(a* a)^(1/2) == ||a||_F / sqrt(k)."""
    m = as_square_matrix(a)
    return float(np.linalg.norm(m) / math.sqrt(m.shape[0]))


def lu_logabsdet(a) -> float:
    """log|det a| via partial-pivot elimination; -inf for singular input."""
    m = as_square_matrix(a)
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0:
        return float("-inf")
    return float(logdet)


def lu_logabsdet_stack(stack: np.ndarray) -> np.ndarray:
    """Vectorized ``lu_logabsdet`` over a (..., k, k) stack."""
    sign, logdet = np.linalg.slogdet(stack)
    out = np.asarray(logdet, dtype=float).copy()
    out[np.asarray(sign) == 0] = -np.inf
    return out


def spectral_radius_bound(a, max_power: int = 16) -> float:
    """Cheap upper bound on the spectral radius via ||a^m||_F^(1/m).

    Repeated squaring up to ``max_power``; every ||a^m||^(1/m) dominates the
    spectral radius, and higher powers tighten the bound for heavily
    non-normal matrices.  Used to validate that density grids cover the
    spectrum.
    """
    m = as_square_matrix(a)
    best = float(np.linalg.norm(m))  # Frobenius dominates rho
    power = m
    exponent = 1
    while exponent < max_power:
        power = power @ power
        exponent *= 2
        nrm = float(np.linalg.norm(power))
        if nrm == 0.0:
            return 0.0
        # Guard against overflow for strongly expanding matrices.
        if not math.isfinite(nrm):
            break
        best = min(best, nrm ** (1.0 / exponent))
    return best


# ----------------------------------------------------------------------------
# Schur triangularization


_HESS_PANEL = 32
_HESS_BLOCK_MIN = 96


def _reflector(x: np.ndarray) -> tuple[np.ndarray | None, complex]:
    """Unit Householder vector mapping x onto -phase*||x||*e1, with that target.

    Returns (None, 0) when x is negligibly small and no reflection is needed.
    """
    xnorm = float(np.linalg.norm(x))
    if xnorm <= 1e-300:
        return None, 0.0
    x0 = x[0]
    phase = x0 / abs(x0) if x0 != 0.0 else 1.0
    v = x.copy()
    # Reflect onto -phase*xnorm*e1; the sign choice avoids cancellation.
    v[0] += phase * xnorm
    vnorm = float(np.linalg.norm(v))
    if vnorm <= 1e-300:
        return None, 0.0
    v /= vnorm
    return v, -phase * xnorm


def _hessenberg_small(h: np.ndarray, q: np.ndarray | None) -> None:
    """Column-at-a-time Householder reduction, rank-1 updates."""
    n = h.shape[0]
    buf = np.empty((n, n), dtype=np.complex128)
    for j in range(n - 2):
        v, _ = _reflector(h[j + 1 :, j])
        if v is None:
            h[j + 2 :, j] = 0.0
            continue
        v2 = 2.0 * v
        vc = v.conj()
        vc2 = 2.0 * vc
        m = v.size
        w = vc @ h[j + 1 :, j:]
        rank1 = buf[:m, : w.size]
        np.multiply.outer(v2, w, out=rank1)
        h[j + 1 :, j:] -= rank1
        w = h[:, j + 1 :] @ v
        rank1 = buf[: w.size, :m]
        np.multiply.outer(w, vc2, out=rank1)
        h[:, j + 1 :] -= rank1
        if q is not None:
            w = q[:, j + 1 :] @ v
            rank1 = buf[: w.size, :m]
            np.multiply.outer(w, vc2, out=rank1)
            q[:, j + 1 :] -= rank1
        h[j + 2 :, j] = 0.0


def _hessenberg_blocked(h: np.ndarray, q: np.ndarray | None) -> None:
    """Panelled Householder reduction in compact WY form.

    Reflectors inside a panel are aggregated as I - V T V* so the trailing
    matrix and q absorb whole panels through matrix products instead of one
    rank-1 update per column.  Within the panel, each pivot column is brought
    up to date against the pending reflectors (right side through the running
    product Y = A V T, left side through V and T) before its own reflector is
    taken, which reproduces the unblocked elimination order exactly.
    """
    n = h.shape[0]
    bmax = _HESS_PANEL
    vbuf = np.empty((n, bmax), dtype=np.complex128)
    tbuf = np.zeros((bmax, bmax), dtype=np.complex128)
    ybuf = np.empty((n, bmax), dtype=np.complex128)
    j0 = 0
    while j0 < n - 2:
        b = min(bmax, n - 2 - j0)
        r0 = j0 + 1
        vp = vbuf[: n - r0, :b]
        t = tbuf[:b, :b]
        y = ybuf[:, :b]
        col = np.empty(n, dtype=np.complex128)
        for i in range(b):
            j = j0 + i
            col[:] = h[:, j]
            if i > 0:
                # Right side: subtract (A V T) conj(row j of V).
                col -= y[:, :i] @ vp[i - 1, :i].conj()
                # Left side: col -= V T* (V* col) below the panel row.
                w = vp[:, :i].conj().T @ col[r0:]
                col[r0:] -= vp[:, :i] @ (t[:i, :i].conj().T @ w)
            v, beta = _reflector(col[j + 1 :])
            vp[:, i] = 0.0
            if v is None:
                t[:i, i] = 0.0
                t[i, i] = 0.0
                y[:, i] = 0.0
                h[:, j] = col
                h[j + 2 :, j] = 0.0
                continue
            vp[i:, i] = v
            s = vp[:, :i].conj().T @ vp[:, i]
            t[:i, i] = -2.0 * (t[:i, :i] @ s)
            t[i, i] = 2.0
            y[:, i] = 2.0 * (h[:, j + 1 :] @ v)
            if i > 0:
                y[:, i] -= 2.0 * (y[:, :i] @ s)
            h[: j + 1, j] = col[: j + 1]
            h[j + 1, j] = beta
            h[j + 2 :, j] = 0.0
        # Panel columns are final; fold the aggregated reflectors into the
        # trailing block, right side first so the left update sees A - Y V*.
        jb = j0 + b
        h[:, jb:] -= y @ vp[b - 1 :, :].conj().T
        w = vp.conj().T @ h[r0:, jb:]
        h[r0:, jb:] -= vp @ (t.conj().T @ w)
        if q is not None:
            q[:, r0:] -= (q[:, r0:] @ vp @ t) @ vp.conj().T
        j0 = jb


def _hessenberg(h: np.ndarray, q: np.ndarray | None) -> None:
    """In-place Householder reduction to upper Hessenberg form."""
    if h.shape[0] < _HESS_BLOCK_MIN:
        _hessenberg_small(h, q)
    else:
        _hessenberg_blocked(h, q)


def _wilkinson_shift(h: np.ndarray, hi: int) -> complex:
    """Eigenvalue of the trailing 2x2 block closest to its last entry."""
    a = h[hi - 2, hi - 2]
    b = h[hi - 2, hi - 1]
    c = h[hi - 1, hi - 2]
    d = h[hi - 1, hi - 1]
    mid = 0.5 * (a + d)
    disc = np.sqrt(np.complex128(0.25 * (a - d) ** 2 + b * c))
    lam1 = mid + disc
    lam2 = mid - disc
    return complex(lam1 if abs(lam1 - d) <= abs(lam2 - d) else lam2)


def _qr_sweep(
    h: np.ndarray,
    q: np.ndarray | None,
    lo: int,
    hi: int,
    shift: complex,
    eig_only: bool,
    n: int,
) -> None:
    """One explicit shifted QR similarity step on the active block [lo, hi)."""
    col_end = hi if eig_only else n
    row_start = lo if eig_only else 0
    diag = h.reshape(-1)[lo * (n + 1) : (hi - 1) * (n + 1) + 1 : n + 1]
    diag -= shift

    # The row pass applies each rotation immediately (a contiguous 2 x w
    # matmul).  Column rotations never feed the rotation parameters, so they
    # are deferred: rotation i becomes applicable once the row rotation at
    # i + 1 has finalized row i + 1, and groups of them are flushed together
    # by _apply_col_batch.  This turns the strided two-column updates into
    # one panel matmul per batch.
    ring = _COL_BATCH + 2
    rot = np.empty((2, 2), dtype=np.complex128)
    rths = np.empty((ring, 2, 2), dtype=np.complex128)
    live = [False] * ring
    wbuf = np.empty((_COL_BATCH + 2, _COL_BATCH + 2), dtype=np.complex128)
    item = h.item
    b = lo
    for i in range(lo, hi - 1):
        if i - b > _COL_BATCH:
            _apply_col_batch(h, q, b, i - 1, rths, live, wbuf, row_start, ring)
            b = i - 1
        slot = i % ring
        f = item(i, i)
        g = item(i + 1, i)
        ag = abs(g)
        if ag == 0.0:
            live[slot] = False
            continue
        af = abs(f)
        r = math.hypot(af, ag)
        if af == 0.0:
            c = 0.0
            s = g.conjugate() / r
        else:
            c = af / r
            s = (f / af) * (g.conjugate() / r)
        sc = s.conjugate()
        rot[0, 0] = c
        rot[0, 1] = s
        rot[1, 0] = -sc
        rot[1, 1] = c
        rth = rths[slot]
        rth[0, 0] = c
        rth[0, 1] = -s
        rth[1, 0] = sc
        rth[1, 1] = c
        live[slot] = True
        h[i : i + 2, i:col_end] = rot @ h[i : i + 2, i:col_end]
        h[i + 1, i] = 0.0
    _apply_col_batch(h, q, b, hi - 1, rths, live, wbuf, row_start, ring)

    diag += shift


def _apply_col_batch(
    h: np.ndarray,
    q: np.ndarray | None,
    b: int,
    f_end: int,
    rths: np.ndarray,
    live: list,
    wbuf: np.ndarray,
    row_start: int,
    ring: int,
) -> None:
    """Apply the deferred column rotations at positions [b, f_end) in order.

    Rows above the group (everything before b + 2) receive all rotations at
    once through their accumulated product; the short staircase rows inside
    the group, where rotation j only reaches down to row j + 1, are handled
    rotation by rotation.
    """
    e = f_end - b
    if e <= 0:
        return
    if e == 1:
        slot = b % ring
        if live[slot]:
            rth = rths[slot]
            h[row_start : b + 2, b : b + 2] = h[row_start : b + 2, b : b + 2] @ rth
            if q is not None:
                q[:, b : b + 2] = q[:, b : b + 2] @ rth
        return
    w = wbuf[: e + 1, : e + 1]
    w[:] = 0.0
    np.fill_diagonal(w, 1.0)
    useful = False
    for t in range(e):
        j = b + t
        slot = j % ring
        if not live[slot]:
            continue
        useful = True
        rth = rths[slot]
        w[: t + 2, t : t + 2] = w[: t + 2, t : t + 2] @ rth
        if t >= 1:
            h[b + 2 : j + 2, j : j + 2] = h[b + 2 : j + 2, j : j + 2] @ rth
    if not useful:
        return
    h[row_start : b + 2, b : f_end + 1] = h[row_start : b + 2, b : f_end + 1] @ w
    if q is not None:
        q[:, b : f_end + 1] = q[:, b : f_end + 1] @ w


def _triangularize(h: np.ndarray, q: np.ndarray | None, eig_only: bool) -> None:
    """Drive h to upper triangular form in place by shifted QR with deflation."""
    n = h.shape[0]
    anorm = float(np.linalg.norm(h))
    if anorm == 0.0 or n == 1:
        return
    budget = _SWEEPS_PER_DIM * n
    sweeps = 0
    stall = 0
    hi = n
    flat = h.reshape(-1)
    dview = flat[:: n + 1]
    sview = flat[n :: n + 1]
    while hi > 1:
        # Zero every negligible sub-diagonal entry, then take the lowest
        # split as the active block boundary.
        dabs = np.abs(dview[:hi])
        base = dabs[:-1] + dabs[1:]
        np.copyto(base, anorm, where=base == 0.0)
        negligible = np.abs(sview[: hi - 1]) <= _DEFLATE_TOL * base
        idx = np.nonzero(negligible)[0]
        if idx.size:
            sview[idx] = 0.0
            lo = int(idx[-1]) + 1
        else:
            lo = 0
        if lo == hi - 1:
            hi -= 1
            stall = 0
            continue
        sweeps += 1
        if sweeps > budget:
            sub = np.abs(np.diag(h, -1))
            raise ConvergenceError(
                f"QR iteration exceeded {budget} sweeps at dimension {n}; "
                f"max sub-diagonal magnitude {sub.max():.3e}"
            )
        stall += 1
        if stall % _STALL_PERIOD == 0:
            shift = complex(h[hi - 1, hi - 1] + 0.75 * abs(h[hi - 1, hi - 2]))
        else:
            shift = _wilkinson_shift(h, hi)
        _qr_sweep(h, q, lo, hi, shift, eig_only, n)


def schur(a) -> SchurForm:
    """Unitary Schur triangularization a = q t q*.

    Householder Hessenberg reduction followed by explicitly shifted QR with
    Wilkinson shifts, exceptional shifts on stall, and relative-threshold
    deflation.  Raises :class:`ConvergenceError` if the sweep budget
    (30 per dimension) is exhausted.
    """
    m = as_square_matrix(a)
    n = m.shape[0]
    h = m.copy()
    q = np.eye(n, dtype=np.complex128)
    _hessenberg(h, q)
    _triangularize(h, q, eig_only=False)
    t = np.triu(h)
    anorm = float(np.linalg.norm(m))
    if anorm == 0.0:
        residual = 0.0
    else:
        residual = float(np.linalg.norm(m - q @ t @ q.conj().T) / anorm)
    return SchurForm(t=t, q=q, residual=residual)


def eigenvalues(a) -> np.ndarray:
    """Eigenvalue multiset of ``a`` (diagonal of its Schur form).

    Runs the same reduction as :func:`schur` without accumulating the unitary
    factor or the cross-block coupling updates, which does not change the
    triangular diagonal but is considerably faster at large dimension.
    """
    m = as_square_matrix(a)
    h = m.copy()
    _hessenberg(h, None)
    _triangularize(h, None, eig_only=True)
    return np.diag(h).copy()
