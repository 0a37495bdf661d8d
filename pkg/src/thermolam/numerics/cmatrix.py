"""Immutable dense complex matrices carrying a precision tag."""

from __future__ import annotations

import math
from numbers import Number
from typing import Iterable, Sequence

import numpy as np
from flint import acb, acb_mat, arb

from .precision import working_precision

#: Scalar type of the backend.  Values are kept as exact midpoints.
CScalar = acb


def to_acb(z) -> acb:
    """Convert a Python/numpy number or a flint ball into an ``acb`` midpoint."""
    if isinstance(z, acb):
        return z.mid()
    if isinstance(z, arb):
        return acb(z.mid())
    if isinstance(z, (complex, np.complexfloating)):
        return acb(float(z.real), float(z.imag))
    if isinstance(z, (int, np.integer)):
        return acb(int(z))
    if isinstance(z, (float, np.floating)):
        return acb(float(z))
    if hasattr(z, "real") and hasattr(z, "imag"):
        # mpmath mpc/mpf and similar: go through their exact string form
        return acb(arb(str(z.real)), arb(str(z.imag)))
    if isinstance(z, Number):
        return acb(complex(z).real, complex(z).imag)
    raise TypeError(f"cannot convert {type(z).__name__} to a complex scalar")


def acb_abs(z: acb) -> arb:
    """Modulus of a midpoint value, itself a midpoint."""
    return abs(z).mid()


def arb_log2(x: arb) -> float:
    """``log2(x)`` for a positive ball without overflow; ``-inf`` for zero."""
    if x.is_zero():
        return -math.inf
    man, exp = x.mid().man_exp()
    man = int(man)
    return math.log2(abs(man)) + int(exp)


def arb_to_float(x: arb) -> float:
    """Nearest float, saturating to +-inf or 0 outside the double range."""
    lg = arb_log2(abs(x)) if not x.is_zero() else -math.inf
    if lg > 1023.5:
        return math.copysign(math.inf, float(x.mid().sgn()))
    if lg < -1080:
        return 0.0
    return float(x.mid())


def acb_to_complex(z: acb) -> complex:
    return complex(arb_to_float(z.real), arb_to_float(z.imag))


class CMatrix:
    """Dense complex matrix with a fixed mantissa width.

    Every operation runs at the precision tag of its operands (the larger
    one for binary operations) and returns a new matrix; nothing mutates
    in place.  Radii of the underlying balls are dropped after each
    operation, so arithmetic behaves like ordinary floating point with an
    unbounded exponent.

    Parameters
    ----------
    m : flint.acb_mat
        Backend matrix.  Its entries are replaced by their midpoints.
    bits : int
        Mantissa width used for all arithmetic on this matrix.
    """

    __slots__ = ("_m", "_bits")

    def __init__(self, m: acb_mat, bits: int):
        if not isinstance(m, acb_mat):
            raise TypeError("CMatrix wraps a flint.acb_mat; use from_rows()")
        with working_precision(bits):
            self._m = m.mid()
        self._bits = int(bits)

    # construction -------------------------------------------------------

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence], bits: int) -> "CMatrix":
        with working_precision(bits):
            data = [[to_acb(v) for v in row] for row in rows]
            if not data or any(len(r) != len(data[0]) for r in data):
                raise ValueError("rows must be non-empty and of equal length")
            return cls(acb_mat(data), bits)

    @classmethod
    def from_numpy(cls, a: np.ndarray, bits: int) -> "CMatrix":
        a = np.asarray(a, dtype=complex)
        if a.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls.from_rows(a.tolist(), bits)

    @classmethod
    def zeros(cls, nrows: int, ncols: int, bits: int) -> "CMatrix":
        return cls(acb_mat(nrows, ncols), bits)

    @classmethod
    def identity(cls, n: int, bits: int) -> "CMatrix":
        m = acb_mat(n, n)
        for i in range(n):
            m[i, i] = 1
        return cls(m, bits)

    @classmethod
    def diag(cls, values: Sequence, bits: int) -> "CMatrix":
        n = len(values)
        with working_precision(bits):
            m = acb_mat(n, n)
            for i, v in enumerate(values):
                m[i, i] = to_acb(v)
        return cls(m, bits)

    @classmethod
    def block(cls, blocks: Sequence[Sequence["CMatrix"]]) -> "CMatrix":
        """Assemble a matrix from a 2-D grid of equally aligned blocks."""
        bits = max(b.bits for row in blocks for b in row)
        heights = [row[0].nrows for row in blocks]
        widths = [b.ncols for b in blocks[0]]
        for row, h in zip(blocks, heights):
            if len(row) != len(widths):
                raise ValueError("ragged block grid")
            for b, w in zip(row, widths):
                if b.shape != (h, w):
                    raise ValueError("block shapes do not line up")
        m = acb_mat(sum(heights), sum(widths))
        r0 = 0
        for row, h in zip(blocks, heights):
            c0 = 0
            for b, w in zip(row, widths):
                bm = b._m
                for i in range(h):
                    for j in range(w):
                        m[r0 + i, c0 + j] = bm[i, j]
                c0 += w
            r0 += h
        return cls(m, bits)

    # inspection ---------------------------------------------------------

    @property
    def bits(self) -> int:
        return self._bits

    @property
    def nrows(self) -> int:
        return self._m.nrows()

    @property
    def ncols(self) -> int:
        return self._m.ncols()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def raw(self) -> acb_mat:
        """Backend matrix (treat as read-only)."""
        return self._m

    def __getitem__(self, idx: tuple[int, int]) -> acb:
        i, j = idx
        return self._m[i, j]

    def tolist(self) -> list[list[acb]]:
        m = self._m
        return [[m[i, j] for j in range(self.ncols)] for i in range(self.nrows)]

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> "CMatrix":
        m = self._m
        out = acb_mat(r1 - r0, c1 - c0)
        for i in range(r0, r1):
            for j in range(c0, c1):
                out[i - r0, j - c0] = m[i, j]
        return CMatrix(out, self._bits)

    def to_numpy(self) -> np.ndarray:
        """Complex128 copy; entries outside the double range saturate."""
        return np.array(
            [[acb_to_complex(v) for v in row] for row in self.tolist()], dtype=complex
        )

    def max_abs(self) -> arb:
        """Largest entry modulus (an exact midpoint, unbounded exponent)."""
        with working_precision(self._bits):
            best = arb(0)
            for row in self.tolist():
                for v in row:
                    a = acb_abs(v)
                    if a > best:
                        best = a
            return best

    def log2_norm(self) -> float:
        """``log2`` of :meth:`max_abs`, finite for any nonzero matrix."""
        return arb_log2(self.max_abs())

    def is_finite(self) -> bool:
        return all(v.is_finite() for row in self.tolist() for v in row)

    # arithmetic ---------------------------------------------------------

    def with_bits(self, bits: int) -> "CMatrix":
        """Same values re-tagged (and rounded, if narrower) at ``bits``."""
        with working_precision(bits):
            return CMatrix(+self._m, bits)

    def _coerce(self, other: "CMatrix") -> int:
        if not isinstance(other, CMatrix):
            raise TypeError("operand must be a CMatrix")
        return max(self._bits, other._bits)

    def __matmul__(self, other: "CMatrix") -> "CMatrix":
        bits = self._coerce(other)
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        with working_precision(bits):
            return CMatrix(self._m * other._m, bits)

    def __add__(self, other: "CMatrix") -> "CMatrix":
        bits = self._coerce(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} + {other.shape}")
        with working_precision(bits):
            return CMatrix(self._m + other._m, bits)

    def __sub__(self, other: "CMatrix") -> "CMatrix":
        bits = self._coerce(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} - {other.shape}")
        with working_precision(bits):
            return CMatrix(self._m - other._m, bits)

    def __neg__(self) -> "CMatrix":
        with working_precision(self._bits):
            return CMatrix(-self._m, self._bits)

    def scale(self, s) -> "CMatrix":
        with working_precision(self._bits):
            return CMatrix(self._m * to_acb(s), self._bits)

    def __mul__(self, s) -> "CMatrix":
        if isinstance(s, CMatrix):
            raise TypeError("use @ for matrix products")
        return self.scale(s)

    __rmul__ = __mul__

    def transpose(self) -> "CMatrix":
        return CMatrix(self._m.transpose(), self._bits)

    def trace(self) -> acb:
        with working_precision(self._bits):
            return self._m.trace().mid()

    def det(self) -> acb:
        with working_precision(self._bits):
            return self._m.det().mid()

    def solve(self, rhs: "CMatrix") -> "CMatrix":
        """Solve ``self @ X = rhs`` by LU with partial pivoting."""
        bits = self._coerce(rhs)
        with working_precision(bits):
            try:
                x = self._m.solve(rhs._m, algorithm="approx")
            except ZeroDivisionError:
                raise np.linalg.LinAlgError("matrix is singular to working precision")
            return CMatrix(x, bits)

    def inv(self) -> "CMatrix":
        return self.solve(CMatrix.identity(self.nrows, self._bits))

    def max_abs_diff(self, other: "CMatrix") -> arb:
        return (self - other).max_abs()

    def rel_diff(self, other: "CMatrix") -> float:
        """``max|self - other| / max|other|`` as a float (0 if both vanish)."""
        bits = self._coerce(other)
        with working_precision(bits):
            num = self.max_abs_diff(other)
            den = other.max_abs()
        if num.is_zero():
            return 0.0
        if den.is_zero():
            return math.inf
        lg = arb_log2(num) - arb_log2(den)
        return math.inf if lg > 1023 else 2.0 ** max(lg, -1074.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CMatrix) or self.shape != other.shape:
            return NotImplemented if not isinstance(other, CMatrix) else False
        a, b = self.tolist(), other.tolist()
        return all(x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"CMatrix({self.nrows}x{self.ncols}, bits={self._bits})"
