"""Matrix exponential: scaling-and-squaring series and eigendecomposition.

The two routes share no code beyond the matrix type, so each serves as an
oracle for the other.
"""

from __future__ import annotations

import math

import numpy as np
from flint import acb, acb_mat, arb

from ..errors import DegenerateSpectrumError
from .cmatrix import CMatrix, acb_abs, arb_log2, to_acb
from .precision import working_precision

#: Relative eigenvalue gap below which the eigendecomposition route refuses.
DEGENERACY_GAP = 1e-8

#: Largest accepted eigenvector condition number (log2).
MAX_LOG2_CONDITION = 100.0


def mat_exp_series(f: CMatrix) -> CMatrix:
    """``exp(F)`` by scaling and squaring with a truncated Taylor series.

    ``F`` is scaled by ``2**-s`` until its norm is below ``2**-r`` with
    ``r ~ sqrt(bits)/2``; the Taylor sum stops once a term drops below the
    unit roundoff relative to the partial sum, and the result is squared
    ``s`` times.  The computation carries ``s + 32`` guard bits.
    """
    n = f.nrows
    if f.ncols != n:
        raise ValueError("mat_exp_series needs a square matrix")
    bits = f.bits
    norm = f.max_abs() * n
    if norm.is_zero():
        return CMatrix.identity(n, bits)
    r = max(2, int(math.isqrt(bits) // 2))
    s = max(0, int(math.ceil(arb_log2(norm))) + r)
    work = bits + s + 32
    with working_precision(work):
        x = f.with_bits(work).scale(arb(2) ** (-s))
        total = CMatrix.identity(n, work)
        term = total
        tol_lg = -(work + 4)
        for k in range(1, 10 * work):
            term = (term @ x).scale(arb(1) / k)
            total = total + term
            tn = term.max_abs()
            if tn.is_zero() or arb_log2(tn) < tol_lg:
                break
        for _ in range(s):
            total = total @ total
    return total.with_bits(bits)


def _is_diagonal(f: CMatrix) -> bool:
    rows = f.tolist()
    return all(rows[i][j].is_zero() for i in range(f.nrows) for j in range(f.ncols) if i != j)


def _seed_eigenpairs(f: CMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Double-precision eigenpairs used as starting points for refinement."""
    a = f.to_numpy()
    if np.all(np.isfinite(a)):
        w, v = np.linalg.eig(a)
        if np.all(np.isfinite(w)) and np.all(np.isfinite(v)):
            return w, v
    raise DegenerateSpectrumError("entries outside double range; no eigenvector seeds")


def _refine_pair(f: CMatrix, lam0: complex, v0: np.ndarray, bits: int) -> tuple[acb, list[acb]]:
    """Inverse iteration with Newton eigenvalue updates and precision doubling.

    Convergence is quadratic, so doubling the working precision each step
    keeps every step useful; one step at the final precision suffices.
    """
    n = f.nrows
    lam = to_acb(lam0)
    v = [to_acb(c) for c in v0]
    prec = 64
    while True:
        prec = min(2 * prec, bits)
        with working_precision(prec):
            fm = f.raw
            shifted = acb_mat(fm)
            for i in range(n):
                shifted[i, i] = (fm[i, i] - lam).mid()
            rhs = acb_mat([[c] for c in v])
            try:
                x = shifted.solve(rhs, algorithm="approx")
            except ZeroDivisionError:
                # shift hit an eigenvalue exactly: nudge it
                lam = (lam * (1 + arb(2) ** (-prec // 2))).mid()
                continue
            xs = [x[i, 0].mid() for i in range(n)]
            # Newton update of the eigenvalue: lam + 1 / (v^H x) for unit v
            vx = sum((v[i].conjugate() * xs[i] for i in range(n)), acb(0)).mid()
            if not vx.is_zero():
                lam = (lam + 1 / vx).mid()
            nrm = sum((abs(c) ** 2 for c in xs), arb(0)).sqrt().mid()
            v = [(c / nrm).mid() for c in xs]
        if prec >= bits:
            return lam, v


def _assemble_exp(vecs: list[list[acb]], lams: list[acb], bits: int) -> CMatrix:
    n = len(lams)
    with working_precision(bits):
        g = acb_mat(n, n)
        ge = acb_mat(n, n)
        for j in range(n):
            e = lams[j].exp().mid()
            for i in range(n):
                g[i, j] = vecs[j][i]
                ge[i, j] = (vecs[j][i] * e).mid()
        # exp(F) = G E G^-1, computed as (G^-T (G E)^T)^T
        out = g.transpose().solve(ge.transpose(), algorithm="approx").transpose()
    return CMatrix(out, bits)


def eigenpairs(f: CMatrix, *, gap: float = DEGENERACY_GAP) -> tuple[list[acb], list[list[acb]], int]:
    """Eigenvalues and unit eigenvectors of ``F`` refined to its precision.

    Returns ``(values, vectors, bits)`` where ``bits`` is the precision the
    pairs were refined at (``F.bits`` plus bits covering the eigenvector
    conditioning).

    Raises
    ------
    DegenerateSpectrumError
        When the smallest pairwise eigenvalue gap is below ``gap`` times
        the spectral radius, the eigenvector matrix is too ill-conditioned,
        or refinement lets two eigenpairs merge.
    """
    n = f.nrows
    w, v = _seed_eigenpairs(f)
    rho = float(np.max(np.abs(w)))
    d = np.abs(w[:, None] - w[None, :]) + np.diag(np.full(n, np.inf))
    min_gap = float(np.min(d))
    if rho == 0.0 or min_gap < gap * rho:
        raise DegenerateSpectrumError(
            f"eigenvalue gap {min_gap:.3e} below {gap:g} x spectral radius {rho:.3e}"
        )
    cond0 = np.linalg.cond(v)
    if not np.isfinite(cond0) or math.log2(cond0) > MAX_LOG2_CONDITION:
        raise DegenerateSpectrumError(f"eigenvector condition {cond0:.3e} too large")
    work = f.bits + int(math.ceil(math.log2(cond0))) + 24
    fw = f.with_bits(work)
    lams, vecs = [], []
    for i in range(n):
        lam, vec = _refine_pair(fw, complex(w[i]), v[:, i], work)
        lams.append(lam)
        vecs.append(vec)
    # refinement must stay near its seed; otherwise two pairs collapsed
    for i in range(n):
        moved = abs(complex(lams[i]) - w[i]) if np.isfinite(abs(complex(lams[i]))) else math.inf
        if not moved <= 0.25 * float(np.min(d[i])) + 1e-12 * rho:
            raise DegenerateSpectrumError("eigenpair refinement drifted to a neighbour")
    return lams, vecs, work


def mat_exp_eig(f: CMatrix, *, gap: float = DEGENERACY_GAP) -> CMatrix:
    """``exp(F) = G diag(exp(s_i)) G^-1`` from an eigendecomposition of F.

    Eigenpairs are seeded in double precision and refined to the working
    precision of ``F``.  Extra bits cover the eigenvector conditioning.

    Raises
    ------
    DegenerateSpectrumError
        See :func:`eigenpairs`.  Use :func:`mat_exp_series` instead.
    """
    n = f.nrows
    if f.ncols != n:
        raise ValueError("mat_exp_eig needs a square matrix")
    bits = f.bits
    if _is_diagonal(f):
        with working_precision(bits):
            return CMatrix.diag([f[i, i].exp().mid() for i in range(n)], bits)
    lams, vecs, work = eigenpairs(f, gap=gap)
    return _assemble_exp(vecs, lams, work).with_bits(bits)


def expm(f: CMatrix) -> CMatrix:
    """Eigendecomposition route with automatic fallback to the series."""
    try:
        return mat_exp_eig(f)
    except DegenerateSpectrumError:
        return mat_exp_series(f)


def spectral_log_range(f: np.ndarray) -> float:
    """``max |Re eig(F)|`` in double precision (growth exponent of exp(+-F))."""
    a = np.asarray(f, dtype=complex)
    if not np.all(np.isfinite(a)):
        return float(np.max(np.abs(a[np.isfinite(a)]), initial=0.0)) * a.shape[0]
    w = np.linalg.eigvals(a)
    return float(np.max(np.abs(w.real)))


__all__ = [
    "mat_exp_series",
    "mat_exp_eig",
    "eigenpairs",
    "expm",
    "spectral_log_range",
    "DEGENERACY_GAP",
    "acb_abs",
]
