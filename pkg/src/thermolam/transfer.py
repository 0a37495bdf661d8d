"""Layer and cell transfer matrices, and their truncated power series.

The state vector ``y = (u1, u2, theta, eta, sigma_21, sigma_22, q_2, j_2)``
(displacements, temperature, chemical potential, tractions and fluxes
through a face ``x2 = const``) is carried across a layer of thickness
``l`` by

    T = P exp(-M^-1 N l) P^-1 exp(i k2 l).

The cell matrix is the ordered product ``T_n ... T_1``; the first layer of
a cell is applied first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from flint import acb, arb

from .assembly import build_abc_isotropic, build_boundary_map, build_mn
from .errors import DegenerateSpectrumError, SeriesError
from .materials import PhaseCoefficients, apply_coupling
from .numerics.cmatrix import CMatrix, acb_to_complex, arb_log2, to_acb
from .numerics.expm import mat_exp_eig, mat_exp_series, spectral_log_range
from .numerics.precision import PrecisionPolicy, working_precision

I = acb(0, 1)


@dataclass(frozen=True)
class LayerSpec:
    """One homogeneous layer: coefficients and thickness ``l >= 0`` [m]."""

    coefficients: PhaseCoefficients
    thickness: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.thickness) and self.thickness >= 0):
            raise ValueError(f"layer thickness must be finite and >= 0 (got {self.thickness})")

    def with_coupling(self, delta: float) -> "LayerSpec":
        return replace(self, coefficients=apply_coupling(self.coefficients, delta))


@dataclass(frozen=True)
class CellSpec:
    """Periodic cell: layers in the order a wave crosses them."""

    layers: tuple[LayerSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("a cell needs at least one layer")
        if not self.L > 0:
            raise ValueError("cell period L must be positive")

    @property
    def L(self) -> float:
        return float(sum(layer.thickness for layer in self.layers))

    def with_coupling(self, delta: float) -> "CellSpec":
        return CellSpec(tuple(layer.with_coupling(delta) for layer in self.layers))


@dataclass(frozen=True)
class TransferMatrix:
    """Transfer operator with symplecticity diagnostics.

    Attributes
    ----------
    T : CMatrix
        8x8 matrix.
    det_residual : float
        ``|det T - 1|``.
    k1, k2, omega : complex
        Evaluation point (``k2`` is the value used; the result does not
        depend on it, which ``k2_independent`` records).
    delta : float
        Coupling factor of the (first) layer.
    bits : int
        Precision the matrix was computed at.
    log_range : float
        Estimated ``ln`` of the largest growth factor in ``T``.
    methods : tuple of str
        Exponential route used per layer (``"eig"`` or ``"series"``).
    """

    T: CMatrix
    det_residual: float
    k1: complex
    k2: complex
    omega: complex
    delta: float
    bits: int
    log_range: float
    methods: tuple[str, ...] = ()
    k2_independent: bool = True
    reciprocity_residual: float | None = None


def _complex(z) -> complex:
    return acb_to_complex(to_acb(z)) if not isinstance(z, (int, float, complex)) else complex(z)


def _generator(layer: LayerSpec, k1, k2, omega, bits: int) -> CMatrix:
    """``-M^-1 N l`` of a layer."""
    abc = build_abc_isotropic(layer.coefficients, k1, k2, omega, bits)
    return build_mn(abc).generator().scale(-to_acb(layer.thickness))


def layer_log_range(layer: LayerSpec, k1, k2, omega) -> float:
    """Natural-log growth exponent of ``T_m``, estimated in double precision."""
    if layer.thickness == 0:
        return 0.0
    f = _generator(layer, k1, k2, omega, 53).to_numpy()
    x = spectral_log_range(f)
    return x + abs(_complex(k2).imag) * layer.thickness


def _det_residual(t: CMatrix) -> float:
    d = t.det() - 1
    with working_precision(t.bits):
        a = abs(d).mid()
    if a.is_zero():
        return 0.0
    lg = arb_log2(a)
    return math.inf if lg > 1023 else 2.0 ** max(lg, -1074.0)


def _exp(f: CMatrix) -> tuple[CMatrix, str]:
    try:
        return mat_exp_eig(f), "eig"
    except DegenerateSpectrumError:
        return mat_exp_series(f), "series"


def _layer_matrix(layer: LayerSpec, k1, k2, omega, bits: int) -> tuple[CMatrix, str]:
    if layer.thickness == 0:
        return CMatrix.identity(8, bits), "none"
    f = _generator(layer, k1, k2, omega, bits)
    e, method = _exp(f)
    bm = build_boundary_map(layer.coefficients, k2, bits, k1=k1)
    with working_precision(bits):
        phase = (I * to_acb(k2) * to_acb(layer.thickness)).exp().mid()
    return (bm.P @ e @ bm.Pinv).scale(phase), method


def resolve_bits(policy, log_range: float, bits: int | None = None) -> int:
    if bits is not None:
        return int(bits)
    return PrecisionPolicy.coerce(policy).bits_for_range(log_range)


def layer_transfer(
    layer: LayerSpec, k1, k2, omega, precision=None, *, bits: int | None = None
) -> TransferMatrix:
    """Transfer matrix of a single layer.

    Parameters
    ----------
    layer : LayerSpec
    k1, k2, omega : complex
    precision : PrecisionPolicy or str, optional
        Defaults to adaptive double-double.  A level name (``"dd"``)
        fixes the precision.
    bits : int, optional
        Explicit working precision; overrides ``precision``.

    Returns
    -------
    TransferMatrix
        ``P exp(-M^-1 N l) P^-1 exp(i k2 l)``.  The exponential falls back
        to the series route when the generator has near-degenerate
        eigenvalues.
    """
    x = layer_log_range(layer, k1, k2, omega)
    b = resolve_bits(precision, x, bits)
    t, method = _layer_matrix(layer, k1, k2, omega, b)
    return TransferMatrix(
        T=t, det_residual=_det_residual(t), k1=_complex(k1), k2=_complex(k2),
        omega=_complex(omega), delta=layer.coefficients.coupling, bits=b,
        log_range=x, methods=(method,),
    )


def cell_transfer(
    cell: CellSpec, k1, k2, omega, precision=None, *, bits: int | None = None
) -> TransferMatrix:
    """Transfer matrix of the whole cell, ``T_n ... T_2 T_1``.

    All layers are computed at a common precision sized from the summed
    growth exponents of the layers (adaptive policy) or at the fixed level.
    """
    xs = [layer_log_range(layer, k1, k2, omega) for layer in cell.layers]
    x = float(sum(xs))
    b = resolve_bits(precision, x, bits)
    total = None
    methods = []
    for layer in cell.layers:
        t, method = _layer_matrix(layer, k1, k2, omega, b)
        methods.append(method)
        total = t if total is None else t @ total
    return TransferMatrix(
        T=total, det_residual=_det_residual(total), k1=_complex(k1), k2=_complex(k2),
        omega=_complex(omega), delta=cell.layers[0].coefficients.coupling, bits=b,
        log_range=x, methods=tuple(methods),
    )


# ---------------------------------------------------------------------------
# power series in k1 or omega


@dataclass(frozen=True)
class PolyMatrix:
    """Matrix polynomial ``sum_j coeffs[j] x**j`` in the variable ``var``.

    Attributes
    ----------
    coeffs : tuple of CMatrix
        ``coeffs[0] .. coeffs[order]``.
    var : str
        ``"k1"`` or ``"omega"``.
    tail_estimate : float
        Estimated norm of the discarded terms at ``radius`` relative to
        the polynomial's norm there (nan when unknown).
    radius : float
        Evaluation radius the tail estimate refers to.
    converged : bool
        ``tail_estimate`` below the tolerance the series was built with.
    terms : int
        Taylor terms used for the scaled exponential.
    """

    coeffs: tuple
    var: str
    tail_estimate: float = math.nan
    radius: float = math.nan
    converged: bool = True
    terms: int = 0

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def bits(self) -> int:
        return max(c.bits for c in self.coeffs)

    def __call__(self, x) -> CMatrix:
        """Horner evaluation."""
        with working_precision(self.bits):
            xv = to_acb(x)
            acc = self.coeffs[-1]
            for c in reversed(self.coeffs[:-1]):
                acc = acc.scale(xv) + c
        return acc


def _poly_mul(a: Sequence[CMatrix], b: Sequence[CMatrix], order: int) -> list[CMatrix]:
    out = []
    for m in range(order + 1):
        acc = None
        for i in range(max(0, m - len(b) + 1), min(m, len(a) - 1) + 1):
            term = a[i] @ b[m - i]
            acc = term if acc is None else acc + term
        if acc is None:
            acc = CMatrix.zeros(a[0].nrows, b[0].ncols, max(a[0].bits, b[0].bits))
        out.append(acc)
    return out


def poly_multiply_truncate(a: PolyMatrix, b: PolyMatrix, order: int | None = None) -> PolyMatrix:
    """Cauchy product ``a b`` keeping powers up to ``order``.

    Raises
    ------
    SeriesError
        If the variables differ or the shapes do not chain.
    """
    if a.var != b.var:
        raise SeriesError(f"variable mismatch: {a.var!r} vs {b.var!r}")
    if a.coeffs[0].ncols != b.coeffs[0].nrows:
        raise SeriesError("incompatible coefficient shapes")
    if order is None:
        order = min(a.order, b.order)
    coeffs = _poly_mul(a.coeffs, b.coeffs, order)
    return PolyMatrix(
        tuple(coeffs), a.var, converged=a.converged and b.converged, terms=max(a.terms, b.terms)
    )


def _weighted_norm(poly: Sequence[CMatrix], r: float) -> arb:
    acc = arb(0)
    rr = arb(r)
    w = arb(1)
    for c in poly:
        acc += c.max_abs() * w
        w *= rr
    return acc.mid()


def _poly_exp(f: list[CMatrix], order: int, radius: float, max_terms: int = 400) -> tuple[list[CMatrix], int]:
    """Taylor coefficients of ``exp(F(x))`` for a matrix polynomial ``F``.

    Scaling and squaring on truncated matrix polynomials: the products of
    non-commuting coefficients are formed exactly, so this equals the
    multinomial expansion of the exponential series with operator order
    kept.
    """
    bits = f[0].bits
    n = f[0].nrows
    f = list(f) + [CMatrix.zeros(n, n, bits)] * max(0, order + 1 - len(f))
    f = f[: order + 1]
    nrm = _weighted_norm(f, radius) * n
    r = max(2, int(math.isqrt(bits) // 2))
    s = 0 if nrm.is_zero() else max(0, int(math.ceil(arb_log2(nrm))) + r)
    work = bits + s + 32
    with working_precision(work):
        scale = arb(2) ** (-s)
        z = [c.with_bits(work).scale(scale) for c in f]
        eye = CMatrix.identity(n, work)
        zero = CMatrix.zeros(n, n, work)
        total = [eye] + [zero] * order
        term = list(total)
        tol_lg = -(work + 4)
        used = 0
        for k in range(1, max_terms + 1):
            term = [c.scale(arb(1) / k) for c in _poly_mul(term, z, order)]
            total = [a + b for a, b in zip(total, term)]
            used = k
            tn = _weighted_norm(term, radius)
            if tn.is_zero() or arb_log2(tn) < tol_lg:
                break
        for _ in range(s):
            total = _poly_mul(total, total, order)
    return [c.with_bits(bits) for c in total], used


def _generator_poly(layer: LayerSpec, var: str, k1, k2, omega, bits: int) -> list[CMatrix]:
    """Coefficients ``F0, F1, F2`` of the generator ``-M^-1 N l`` in ``var``.

    The generator is exactly quadratic in ``k1`` and in ``omega``; the
    coefficients are recovered from values at ``x = 0, +1, -1`` computed
    with 64 extra bits.
    """
    work = bits + 64

    def at(x):
        if var == "k1":
            return _generator(layer, x, k2, omega, work)
        return _generator(layer, k1, k2, x, work)

    f0, fp, fm = at(0), at(1), at(-1)
    with working_precision(work):
        half = arb(1) / 2
        f1 = (fp - fm).scale(half)
        f2 = (fp + fm).scale(half) - f0
    return [c.with_bits(bits) for c in (f0, f1, f2)]


def _boundary_poly(layer: LayerSpec, var: str, k1, k2, bits: int) -> tuple[list[CMatrix], list[CMatrix]]:
    """``P(x)`` and ``P^-1(x)`` as polynomials (both linear in ``k1``)."""
    if var == "omega":
        bm = build_boundary_map(layer.coefficients, k2, bits, k1=k1)
        return [bm.P], [bm.Pinv]
    b0 = build_boundary_map(layer.coefficients, k2, bits, k1=0)
    b1 = build_boundary_map(layer.coefficients, k2, bits, k1=1)
    return [b0.P, b1.P - b0.P], [b0.Pinv, b1.Pinv - b0.Pinv]


def _series_layer(
    layer: LayerSpec, var: str, k1, k2, omega, order: int, radius: float, bits: int
) -> tuple[list[CMatrix], int]:
    f = _generator_poly(layer, var, k1, k2, omega, bits)
    e, terms = _poly_exp(f, order, radius)
    p, pinv = _boundary_poly(layer, var, k1, k2, bits)
    with working_precision(bits):
        phase = (I * to_acb(k2) * to_acb(layer.thickness)).exp().mid()
    t = _poly_mul(_poly_mul(p, e, order), pinv, order)
    return [c.scale(phase) for c in t], terms


#: Tolerance and cap of the adaptive series order.
SERIES_TOL = 1e-12
SERIES_MAX_ORDER = 60


def _tail(coeffs: list[CMatrix], order: int, radius: float) -> float:
    """Norm of the term beyond ``order`` at ``radius`` relative to the sum."""
    head = _weighted_norm(coeffs[: order + 1], radius)
    nxt = coeffs[order + 1].max_abs() * arb(radius) ** (order + 1)
    if nxt.is_zero():
        return 0.0
    if head.is_zero():
        return math.inf
    lg = arb_log2(nxt.mid()) - arb_log2(head)
    return math.inf if lg > 1023 else 2.0 ** max(lg, -1074.0)


def _series(
    layer: LayerSpec, var: str, k1, k2, omega, order: int | None, radius: float | None,
    precision, bits: int | None, tol: float,
) -> PolyMatrix:
    r = 1.0 if radius is None else float(radius)
    if bits is None:
        x = layer_log_range(layer, k1 if var == "omega" else 0, k2, omega if var == "k1" else 0)
        bits = resolve_bits(precision, x)
    if order is not None:
        if order < 0:
            raise ValueError("order must be >= 0")
        coeffs, terms = _series_layer(layer, var, k1, k2, omega, order + 1, r, bits)
        tail = _tail(coeffs, order, r)
        return PolyMatrix(
            tuple(coeffs[: order + 1]), var, tail, r,
            converged=(radius is None) or tail <= tol, terms=terms,
        )
    m = 4
    while True:
        coeffs, terms = _series_layer(layer, var, k1, k2, omega, m + 1, r, bits)
        tail = _tail(coeffs, m, r)
        if tail <= tol or m >= SERIES_MAX_ORDER:
            return PolyMatrix(tuple(coeffs[: m + 1]), var, tail, r, tail <= tol, terms)
        m = min(SERIES_MAX_ORDER, 2 * m)


def series_transfer_k1(
    layer: LayerSpec, k2, omega, order: int | None = None, *, radius: float | None = None,
    precision=None, bits: int | None = None, tol: float = SERIES_TOL,
) -> PolyMatrix:
    """Layer transfer matrix as a power series in ``k1`` about ``k1 = 0``.

    Parameters
    ----------
    layer : LayerSpec
    k2, omega : complex
    order : int, optional
        Truncation order.  ``None`` picks the order adaptively: it grows
        until the next coefficient times ``radius**(order+1)`` falls below
        ``tol`` times the accumulated norm (cap 60).
    radius : float, optional
        Evaluation radius for the tail estimate (default 1).

    Returns
    -------
    PolyMatrix
        ``converged`` is false when the tail estimate at ``radius``
        exceeds ``tol``.
    """
    return _series(layer, "k1", 0, k2, omega, order, radius, precision, bits, tol)


def series_transfer_omega(
    layer: LayerSpec, k1, k2, order: int | None = None, *, radius: float | None = None,
    precision=None, bits: int | None = None, tol: float = SERIES_TOL,
) -> PolyMatrix:
    """Layer transfer matrix as a power series in ``omega`` about ``omega = 0``.

    Same contract as :func:`series_transfer_k1`.
    """
    return _series(layer, "omega", k1, k2, 0, order, radius, precision, bits, tol)


def series_cell(
    cell: CellSpec, var: str, k1, k2, omega, order: int, *, radius: float | None = None,
    precision=None, bits: int | None = None,
) -> PolyMatrix:
    """Truncated series of the cell matrix (product of layer series)."""
    out = None
    for layer in cell.layers:
        if var == "k1":
            s = series_transfer_k1(layer, k2, omega, order, radius=radius, precision=precision, bits=bits)
        elif var == "omega":
            s = series_transfer_omega(layer, k1, k2, order, radius=radius, precision=precision, bits=bits)
        else:
            raise SeriesError(f"unknown series variable {var!r}")
        out = s if out is None else poly_multiply_truncate(s, out, order)
    return out


# ---------------------------------------------------------------------------
# independent check through generalised amplitudes


def _omega_rows(c: PhaseCoefficients, k1, k2, gammas: list[list[acb]]) -> list[list[acb]]:
    """State-vector image of eigenvectors ``gamma = (w', w)`` column by column.

    Written out entry by entry from the constitutive relations rather than
    through the boundary-map blocks.
    """
    G, nu = to_acb(c.G), to_acb(c.nu)
    c22 = 2 * G * (1 - nu) / (1 - 2 * nu)
    c12 = 2 * G * nu / (1 - 2 * nu)
    K, D, al, be = (to_acb(v) for v in (c.K, c.D, c.alpha, c.beta))
    k1, k2 = to_acb(k1), to_acb(k2)
    rows = [[acb(0)] * 8 for _ in range(8)]
    for j, g in enumerate(gammas):
        rows[0][j] = g[4]
        rows[1][j] = g[5]
        rows[2][j] = g[6]
        rows[3][j] = g[7]
        rows[4][j] = G * (g[0] + I * k1 * g[5] + I * k2 * g[4])
        rows[5][j] = c22 * g[1] + c12 * I * k1 * g[4] + c22 * I * k2 * g[5] - al * g[6] - be * g[7]
        rows[6][j] = -K * (g[2] + I * k2 * g[6])
        rows[7][j] = -D * (g[3] + I * k2 * g[7])
    return rows


def omega_route_residual(
    layer: LayerSpec, k1, k2, omega, y_minus: Sequence, bits: int = 106
) -> float:
    """Compare ``T y^-`` with the eigen-expansion reconstruction of ``y^+``.

    The field in the layer is expanded as ``r = sum_i a_i gamma_i
    exp(-s_i x)`` over eigenpairs of ``M^-1 N``; the amplitudes ``a`` are
    fitted to ``y^-`` on the lower face and the expansion is evaluated on
    the upper face.  Returns ``max|y^+_T - y^+_Omega| / max|y^+_T|``.
    """
    from .numerics.expm import eigenpairs

    abc = build_abc_isotropic(layer.coefficients, k1, k2, omega, bits)
    g = build_mn(abc).generator()
    lams, vecs, work = eigenpairs(g)
    bits = max(bits, work)
    with working_precision(bits):
        om = CMatrix.from_rows(_omega_rows(layer.coefficients, k1, k2, vecs), bits)
        h = to_acb(layer.thickness)
        ph = (I * to_acb(k2) * h).exp()
        e = CMatrix.diag([(-lam * h).exp().mid() for lam in lams], bits)
        ym = CMatrix.from_rows([[v] for v in y_minus], bits)
        a = om.solve(ym)
        y_plus_omega = (om @ e @ a).scale(ph)
    t = layer_transfer(layer, k1, k2, omega, bits=bits).T
    y_plus_t = t @ ym
    return y_plus_omega.rel_diff(y_plus_t)


__all__ = [
    "LayerSpec",
    "CellSpec",
    "TransferMatrix",
    "PolyMatrix",
    "layer_transfer",
    "cell_transfer",
    "layer_log_range",
    "series_transfer_k1",
    "series_transfer_omega",
    "series_cell",
    "poly_multiply_truncate",
    "omega_route_residual",
    "resolve_bits",
]
