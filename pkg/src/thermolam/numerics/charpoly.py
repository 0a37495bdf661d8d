"""Characteristic polynomials, palindromic reduction and root extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass

from flint import acb, arb
from flint import ctx as flint_ctx

from ..errors import PalindromicityError
from .cmatrix import CMatrix, acb_abs, arb_log2, to_acb
from .precision import working_precision


@dataclass(frozen=True)
class CharPoly8:
    """Coefficients of ``det(lambda I - T) = sum_k C_k lambda**k``.

    For even ``n`` this equals ``det(T - lambda I)``.

    Attributes
    ----------
    coeffs : list of acb
        ``C_0 .. C_n`` with ``C_n = 1``.
    aux : list of CMatrix
        Recursion matrices ``M_1 .. M_n`` (``M_0 = 0`` omitted).
    bits : int
        Precision the recursion ran at.
    """

    coeffs: list
    aux: list
    bits: int

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def palindromic_residual(self) -> float:
        """``max_j |C_{n-j} - C_j| / max_j |C_j|`` (``C_n = 1`` included)."""
        c = self.coeffs
        n = self.degree
        with working_precision(self.bits):
            scale = max(acb_abs(v) for v in c)
            worst = max(acb_abs(c[n - j] - c[j]) for j in range(n // 2 + 1))
        return _ratio(worst, scale)

    def __call__(self, lam) -> acb:
        """Evaluate the polynomial (Horner)."""
        with working_precision(self.bits):
            x = to_acb(lam)
            acc = acb(0)
            for c in reversed(self.coeffs):
                acc = (acc * x + c).mid()
            return acc


def _ratio(num: arb, den: arb) -> float:
    if num.is_zero():
        return 0.0
    if den.is_zero():
        return math.inf
    lg = arb_log2(num) - arb_log2(den)
    return math.inf if lg > 1023 else 2.0 ** max(lg, -1074.0)


def faddeev_leverrier(t: CMatrix, steps: int | None = None) -> CharPoly8:
    """Characteristic polynomial by the Faddeev-LeVerrier recursion.

    ``M_0 = 0``, ``C_n = 1`` and for ``k = 1..n``::

        M_k = T M_{k-1} + C_{n-k+1} I
        C_{n-k} = -tr(T M_k) / k

    Parameters
    ----------
    t : CMatrix
        Square matrix (the recursion is exact for any size; the package
        uses it for ``n <= 8``).
    steps : int, optional
        Stop after this many steps.  Coefficients not reached are
        returned as ``None``.  The upper half (``steps = n // 2``) is all
        a palindromic polynomial needs and is far less sensitive to
        rounding than the lower half.

    Returns
    -------
    CharPoly8
    """
    n = t.nrows
    if t.ncols != n:
        raise ValueError("faddeev_leverrier needs a square matrix")
    steps = n if steps is None else max(0, min(n, steps))
    bits = t.bits
    coeffs: list = [None] * (n + 1)
    coeffs[n] = acb(1)
    aux: list[CMatrix] = []
    eye = CMatrix.identity(n, bits)
    m = CMatrix.zeros(n, n, bits)
    with working_precision(bits):
        for k in range(1, steps + 1):
            m = t @ m + eye.scale(coeffs[n - k + 1])
            aux.append(m)
            coeffs[n - k] = (-(t @ m).trace() / k).mid()
    return CharPoly8(coeffs, aux, bits)


def palindromic_reduce(p: CharPoly8, tol: float | None = None, *, use_upper: bool = True) -> list[acb]:
    """Quartic in ``z = lambda + 1/lambda`` equivalent to a palindromic octic.

    Returns ``[1, a, b, c, d]`` for ``z**4 + a z**3 + b z**2 + c z + d``
    with ``a = C1, b = C2 - 4, c = C3 - 3 C1, d = C4 - 2 C2 + 2``.

    Parameters
    ----------
    p : CharPoly8
        Degree-8 polynomial.  May be upper-half only (see ``use_upper``).
    tol : float, optional
        Maximum accepted palindromicity residual; checked only when the
        full set of coefficients is present.
    use_upper : bool
        Take ``C1, C2, C3`` from their mirror images ``C7, C6, C5``.  For a
        palindromic polynomial they are equal; the recursion produces the
        upper ones first, from lower powers of ``T``, so they carry less
        rounding error.

    Raises
    ------
    PalindromicityError
        If the residual exceeds ``tol``.
    """
    if p.degree != 8:
        raise ValueError("palindromic reduction is defined here for degree 8")
    c = p.coeffs
    if tol is not None and all(v is not None for v in c):
        res = p.palindromic_residual()
        if not res <= tol:
            raise PalindromicityError(
                f"characteristic polynomial not palindromic: residual {res:.3e} > {tol:.1e}",
                res,
            )
    if use_upper:
        c1, c2, c3 = c[7], c[6], c[5]
    else:
        c1, c2, c3 = c[1], c[2], c[3]
    c4 = c[4]
    if any(v is None for v in (c1, c2, c3, c4)):
        raise ValueError("coefficients C4..C7 (or C1..C4) are required")
    with working_precision(p.bits):
        return [acb(1), c1, (c2 - 4).mid(), (c3 - 3 * c1).mid(), (c4 - 2 * c2 + 2).mid()]


def _cbrt(z: acb) -> acb:
    return z.root(3) if hasattr(z, "root") else z ** (acb(1) / 3)


def _poly_eval(coeffs: list[acb], x: acb) -> tuple[acb, acb]:
    """Value and derivative of a monic-ordered (highest first) polynomial."""
    p = acb(0)
    dp = acb(0)
    for c in coeffs:
        dp = (dp * x + p).mid()
        p = (p * x + c).mid()
    return p, dp


def solve_quartic(coeffs: list, newton_steps: int = 1, *, bits: int | None = None) -> list[acb]:
    """Roots of ``z**4 + a z**3 + b z**2 + c z + d`` (Ferrari + Newton polish).

    Parameters
    ----------
    coeffs : sequence
        ``[1, a, b, c, d]`` (leading coefficient must be 1).
    newton_steps : int
        Newton iterations on the original quartic applied to each root.
    bits : int, optional
        Working precision.  Defaults to the current flint precision.

    Notes
    -----
    The depressed quartic ``y**4 + P y**2 + Q y + R`` is split into two
    quadratics with the resolvent-cubic root of largest modulus, which
    keeps the square root ``sqrt(2m)`` away from zero.
    """
    if bits is None:
        bits = flint_ctx.prec
    with working_precision(bits):
        return _solve_quartic(coeffs, newton_steps)


def _solve_quartic(coeffs: list, newton_steps: int) -> list[acb]:
    one, a, b, c, d = [to_acb(v) for v in coeffs]
    if not (one - 1).is_zero():
        raise ValueError("leading coefficient must be 1")
    a4 = a / 4
    P = (b - 3 * a * a / 8).mid()
    Q = (c - a * b / 2 + a * a * a / 8).mid()
    R = (d - a * c / 4 + a * a * b / 16 - 3 * a * a * a * a / 256).mid()

    if Q.is_zero():
        disc = (P * P - 4 * R).mid().sqrt()
        ys = []
        for s2 in ((-P + disc) / 2, (-P - disc) / 2):
            r = s2.mid().sqrt()
            ys += [r, -r]
    else:
        # resolvent: 8 m^3 + 8 P m^2 + (2 P^2 - 8 R) m - Q^2 = 0
        m = _largest_cubic_root(acb(8), 8 * P, 2 * P * P - 8 * R, -Q * Q)
        s = (2 * m).mid().sqrt()
        qs = (Q / (2 * s)).mid()
        ys = []
        for sign in (1, -1):
            # y^2 - sign*s*y + (P/2 + m + sign*Q/(2s)) = 0
            bb = -sign * s
            cc = P / 2 + m + sign * qs
            disc = (bb * bb - 4 * cc).mid().sqrt()
            ys += [((-bb + disc) / 2).mid(), ((-bb - disc) / 2).mid()]
    roots = [(y - a4).mid() for y in ys]
    poly = [one, a, b, c, d]
    out = []
    for z in roots:
        for _ in range(newton_steps):
            f, df = _poly_eval(poly, z)
            if df.is_zero() or f.is_zero():
                break
            step = (f / df).mid()
            if not step.is_finite():
                break
            z_new = (z - step).mid()
            # accept only improving steps (guards multiple roots)
            if acb_abs(_poly_eval(poly, z_new)[0]) <= acb_abs(f):
                z = z_new
        out.append(z)
    return out


def _largest_cubic_root(a: acb, b: acb, c: acb, d: acb) -> acb:
    """Root of largest modulus of ``a m^3 + b m^2 + c m + d`` (Cardano)."""
    b, c, d = (b / a).mid(), (c / a).mid(), (d / a).mid()
    # m = t - b/3: t^3 + p t + q = 0
    p = (c - b * b / 3).mid()
    q = (2 * b * b * b / 27 - b * c / 3 + d).mid()
    shift = (b / 3).mid()
    if p.is_zero():
        t0 = _cbrt((-q).mid())
        cands = [t0 * w for w in _unit_cube_roots()]
    else:
        disc = (q * q / 4 + p * p * p / 27).mid().sqrt()
        u3 = (-q / 2 + disc).mid()
        u3b = (-q / 2 - disc).mid()
        if acb_abs(u3b) > acb_abs(u3):
            u3 = u3b
        if u3.is_zero():
            cands = [acb(0)]
        else:
            u = _cbrt(u3)
            cands = []
            for w in _unit_cube_roots():
                uw = (u * w).mid()
                cands.append((uw - p / (3 * uw)).mid())
    roots = [(t - shift).mid() for t in cands]
    return max(roots, key=lambda r: -math.inf if r.is_zero() else arb_log2(acb_abs(r)))


def _unit_cube_roots() -> list[acb]:
    w = acb(-0.5, 0) + acb(0, 1) * arb(3).sqrt() / 2
    return [acb(1), w.mid(), (w * w).mid()]


def z_to_lambda(z, *, bits: int | None = None) -> tuple[acb, acb]:
    """Both roots of ``lambda**2 - z lambda + 1 = 0``.

    The root of larger modulus is formed without cancellation and the other
    is its reciprocal, so the product is 1 up to one rounding.
    """
    with working_precision(flint_ctx.prec if bits is None else bits):
        return _z_to_lambda(to_acb(z))


def _z_to_lambda(z: acb) -> tuple[acb, acb]:
    s = (z * z - 4).mid().sqrt()
    l1 = ((z + s) / 2).mid()
    l2 = ((z - s) / 2).mid()
    big = l1 if acb_abs(l1) >= acb_abs(l2) else l2
    if big.is_zero():  # only when z = 0 and s = 0, impossible since s^2 = -4
        raise ZeroDivisionError("degenerate quadratic")
    return big, (1 / big).mid()


__all__ = [
    "CharPoly8",
    "faddeev_leverrier",
    "palindromic_reduce",
    "solve_quartic",
    "z_to_lambda",
]
