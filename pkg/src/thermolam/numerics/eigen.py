"""Dense eigensolver for small complex matrices in working precision.

Balancing (diagonal similarity by powers of two), Householder reduction to
upper Hessenberg form, then single-shift complex QR with Wilkinson shifts
and Givens rotations.  Eigenvectors come from inverse iteration on the
original matrix.  Sizes here are tiny (8x8), so the code favours clarity
over blocking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from flint import acb, acb_mat, arb

from ..errors import ConvergenceError
from .cmatrix import CMatrix, acb_abs, arb_log2, arb_to_float
from .precision import working_precision

Rows = list[list[acb]]


@dataclass(frozen=True)
class EigenSolution:
    """Eigenpairs of a square matrix.

    Attributes
    ----------
    values : list of acb
        Eigenvalues in the order the solver produced them.
    vectors : CMatrix or None
        Column ``i`` is a unit 2-norm eigenvector for ``values[i]``.
    residuals : list of float
        ``||T g - lam g|| / ||T||`` per pair (``max|.|`` norms).
    condition : float
        ``||G|| ||G^-1||`` of the eigenvector matrix (inf when singular).
    """

    values: list
    vectors: CMatrix | None
    residuals: list
    condition: float


def _abs1(z: acb) -> arb:
    """Cheap modulus surrogate |re| + |im|."""
    return abs(z.real) + abs(z.imag)


def balance(a: Rows, max_sweeps: int = 20) -> tuple[Rows, list[int]]:
    """Parlett-Reinsch balancing with power-of-two scalings.

    Returns the balanced rows and the base-2 exponents ``e`` such that the
    result is ``D^-1 A D`` with ``D = diag(2**e)``.
    """
    n = len(a)
    a = [row[:] for row in a]
    e = [0] * n
    for _ in range(max_sweeps):
        changed = False
        for i in range(n):
            c = sum((_abs1(a[j][i]) for j in range(n) if j != i), arb(0))
            r = sum((_abs1(a[i][j]) for j in range(n) if j != i), arb(0))
            if c.is_zero() or r.is_zero():
                continue
            shift = int(round((arb_log2(r) - arb_log2(c)) / 2.0))
            if abs(shift) < 1:
                continue
            # accept only if it reduces c + r noticeably (power of two, exact)
            f = arb(2) ** shift
            if (c * f + r / f) >= arb("0.95") * (c + r):
                continue
            for j in range(n):
                a[i][j] = (a[i][j] / f).mid()
                a[j][i] = (a[j][i] * f).mid()
            e[i] += shift
            changed = True
        if not changed:
            break
    return a, e


def hessenberg(a: Rows) -> Rows:
    """Reduce to upper Hessenberg form by Householder reflections."""
    n = len(a)
    h = [row[:] for row in a]
    for k in range(n - 2):
        x = [h[i][k] for i in range(k + 1, n)]
        alpha = sum((abs(v) ** 2 for v in x), arb(0)).sqrt().mid()
        if alpha.is_zero():
            continue
        x0 = x[0]
        ax0 = abs(x0).mid()
        phase = acb(1) if ax0.is_zero() else (x0 / ax0).mid()
        v = x[:]
        v[0] = (x0 + phase * alpha).mid()
        vnorm2 = sum((abs(t) ** 2 for t in v), arb(0)).mid()
        if vnorm2.is_zero():
            continue
        # H <- (I - 2 v v^H / v^H v) H (I - 2 v v^H / v^H v)
        for j in range(n):
            s = sum((v[i].conjugate() * h[k + 1 + i][j] for i in range(len(v))), acb(0))
            s = (2 * s / vnorm2).mid()
            for i in range(len(v)):
                h[k + 1 + i][j] = (h[k + 1 + i][j] - v[i] * s).mid()
        for i in range(n):
            s = sum((h[i][k + 1 + j] * v[j] for j in range(len(v))), acb(0))
            s = (2 * s / vnorm2).mid()
            for j in range(len(v)):
                h[i][k + 1 + j] = (h[i][k + 1 + j] - s * v[j].conjugate()).mid()
        for i in range(k + 2, n):
            h[i][k] = acb(0)
    return h


def _wilkinson(a: acb, b: acb, c: acb, d: acb) -> acb:
    """Eigenvalue of [[a, b], [c, d]] closer to d."""
    half_tr = (a + d) / 2
    disc = ((a - d) / 2) ** 2 + b * c
    s = disc.mid().sqrt()
    mu1, mu2 = (half_tr + s).mid(), (half_tr - s).mid()
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def hessenberg_qr(h: Rows, bits: int, max_iter_per_eig: int = 60) -> list[acb]:
    """Eigenvalues of an upper Hessenberg matrix by shifted complex QR."""
    n = len(h)
    h = [row[:] for row in h]
    eps = arb(2) ** (-bits)
    out: list[acb] = []
    hi = n - 1
    its = 0
    while hi >= 0:
        if hi == 0:
            out.append(h[0][0])
            break
        # look for a negligible subdiagonal entry in the active block
        lo = hi
        while lo > 0:
            scale = _abs1(h[lo - 1][lo - 1]) + _abs1(h[lo][lo])
            if scale.is_zero():
                scale = sum((_abs1(h[i][j]) for i in range(n) for j in range(n)), arb(0))
            if _abs1(h[lo][lo - 1]) <= eps * scale:
                h[lo][lo - 1] = acb(0)
                break
            lo -= 1
        if lo == hi:
            out.append(h[hi][hi])
            hi -= 1
            its = 0
            continue
        its += 1
        if its > max_iter_per_eig:
            raise ConvergenceError(
                f"QR did not converge after {max_iter_per_eig} iterations "
                f"(active block {lo}..{hi})"
            )
        if its % 11 == 0:
            # exceptional shift to break cycles
            mu = (h[hi][hi] + _abs1(h[hi][hi - 1]) * acb("0.75")).mid()
        else:
            mu = _wilkinson(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        for k in range(lo, hi + 1):
            h[k][k] = (h[k][k] - mu).mid()
        rots = []
        for k in range(lo, hi):
            x, y = h[k][k], h[k + 1][k]
            r = (abs(x) ** 2 + abs(y) ** 2).sqrt().mid()
            if r.is_zero():
                c, s = acb(1), acb(0)
            else:
                c, s = (x / r).mid(), (y / r).mid()
            rots.append((c, s))
            cc, sc = c.conjugate(), s.conjugate()
            # only the active block matters for its eigenvalues
            for j in range(k, hi + 1):
                u, v = h[k][j], h[k + 1][j]
                h[k][j] = (cc * u + sc * v).mid()
                h[k + 1][j] = (-s * u + c * v).mid()
        for k, (c, s) in enumerate(rots, start=lo):
            cc, sc = c.conjugate(), s.conjugate()
            for i in range(lo, min(k + 2, hi) + 1):
                u, v = h[i][k], h[i][k + 1]
                h[i][k] = (u * c + v * s).mid()
                h[i][k + 1] = (-u * sc + v * cc).mid()
        for k in range(lo, hi + 1):
            h[k][k] = (h[k][k] + mu).mid()
    return out


def eigenvalues(t: CMatrix, balanced: bool = True) -> list[acb]:
    """Eigenvalues of ``t`` by (balanced) Hessenberg QR at ``t.bits``."""
    with working_precision(t.bits):
        rows = t.tolist()
        if balanced:
            rows, _ = balance(rows)
        return [v.mid() for v in hessenberg_qr(hessenberg(rows), t.bits)]


def _lu_solve_guarded(a: Rows, b: list[acb], tiny: arb) -> list[acb]:
    """Gaussian elimination with partial pivoting; zero pivots become ``tiny``.

    Used for inverse iteration, where the matrix is singular on purpose.
    """
    n = len(a)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for k in range(n):
        p = max(range(k, n), key=lambda i: arb_log2(acb_abs(m[i][k])) if not m[i][k].is_zero() else -math.inf)
        m[k], m[p] = m[p], m[k]
        piv = m[k][k]
        if piv.is_zero():
            piv = acb(tiny)
            m[k][k] = piv
        for i in range(k + 1, n):
            f = (m[i][k] / piv).mid()
            if f.is_zero():
                continue
            for j in range(k, n + 1):
                m[i][j] = (m[i][j] - f * m[k][j]).mid()
    x = [acb(0)] * n
    for i in range(n - 1, -1, -1):
        s = (m[i][n] - sum((m[i][j] * x[j] for j in range(i + 1, n)), acb(0))).mid()
        piv = m[i][i] if not m[i][i].is_zero() else acb(tiny)
        x[i] = (s / piv).mid()
    return x


def _start_vector(n: int) -> list[acb]:
    # fixed, generic start (no randomness: results must be reproducible)
    return [acb(1 + 0.37 * i, 0.11 * (i % 3) - 0.05 * i) for i in range(n)]


def _normalize(x: list[acb]) -> list[acb]:
    nrm = sum((abs(v) ** 2 for v in x), arb(0)).sqrt().mid()
    if nrm.is_zero() or not nrm.is_finite():
        return x
    return [(v / nrm).mid() for v in x]


def inverse_iteration(t: CMatrix, lam: acb, steps: int = 2) -> list[acb]:
    """Unit eigenvector of ``t`` for the (approximate) eigenvalue ``lam``."""
    n = t.nrows
    with working_precision(t.bits):
        rows = t.tolist()
        scale = t.max_abs()
        tiny = scale * arb(2) ** (-t.bits) if not scale.is_zero() else arb(2) ** (-t.bits)
        shifted = [[(rows[i][j] - lam).mid() if i == j else rows[i][j] for j in range(n)] for i in range(n)]
        x = _start_vector(n)
        for _ in range(steps):
            x = _normalize(_lu_solve_guarded(shifted, x, tiny))
        return x


def eigen_residual(t: CMatrix, lam: acb, vec: list[acb]) -> float:
    """``max|T v - lam v| / (max|T| max|v|)``."""
    n = t.nrows
    with working_precision(t.bits):
        rows = t.tolist()
        worst = arb(0)
        for i in range(n):
            r = sum((rows[i][j] * vec[j] for j in range(n)), acb(0)) - lam * vec[i]
            a = acb_abs(r)
            if a > worst:
                worst = a
        den = t.max_abs() * max((acb_abs(v) for v in vec), default=arb(0))
        if den.is_zero():
            return 0.0 if worst.is_zero() else math.inf
        return 2.0 ** max(-1074.0, min(1023.0, arb_log2(worst) - arb_log2(den))) if not worst.is_zero() else 0.0


def vectors_condition(g: CMatrix) -> float:
    """``||G|| ||G^-1||`` in the max-entry norm scaled by n (inf if singular)."""
    try:
        gi = g.inv()
    except Exception:
        return math.inf
    if not gi.is_finite():
        return math.inf
    lg = g.log2_norm() + gi.log2_norm() + math.log2(g.nrows)
    return math.inf if lg > 1023 else 2.0 ** lg


def eigen8(t: CMatrix, with_vectors: bool = True) -> EigenSolution:
    """All eigenpairs of a small dense matrix (balanced Hessenberg QR).

    Parameters
    ----------
    t : CMatrix
        Square matrix with finite entries.
    with_vectors : bool
        Skip inverse iteration when only eigenvalues are needed.

    Raises
    ------
    ConvergenceError
        If QR exceeds its iteration cap.
    """
    if t.nrows != t.ncols:
        raise ValueError("eigen8 needs a square matrix")
    if not t.is_finite():
        raise ValueError("matrix has non-finite entries")
    vals = eigenvalues(t)
    if not with_vectors:
        return EigenSolution(vals, None, [], math.nan)
    vecs = [inverse_iteration(t, lam) for lam in vals]
    res = [eigen_residual(t, lam, v) for lam, v in zip(vals, vecs)]
    with working_precision(t.bits):
        n = t.nrows
        g = acb_mat(n, n)
        for j, v in enumerate(vecs):
            for i in range(n):
                g[i, j] = v[i]
    gm = CMatrix(g, t.bits)
    return EigenSolution(vals, gm, res, vectors_condition(gm))


__all__ = [
    "EigenSolution",
    "balance",
    "hessenberg",
    "hessenberg_qr",
    "eigenvalues",
    "inverse_iteration",
    "eigen_residual",
    "vectors_condition",
    "eigen8",
    "arb_to_float",
]
