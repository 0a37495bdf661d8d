"""Operator matrices of a single homogeneous layer.

For a Bloch ansatz ``exp(i (k1 x1 + k2 x2 - omega t))`` with amplitude
``w(x2) = (u1, u2, theta, eta)`` the field equations of a layer reduce to

    A w'' + B w' + C w = 0,

which is rewritten as the first-order system ``M r' + N r = 0`` for
``r = (w', w)``.  The boundary map ``P`` takes ``r`` to the state vector
``y = (w, s)``, where ``s`` collects the tractions ``sigma_21``,
``sigma_22`` and the heat and mass fluxes through the layer faces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from flint import acb, acb_mat

from .errors import SingularOperatorError
from .materials import PhaseCoefficients
from .numerics.cmatrix import CMatrix, to_acb
from .numerics.precision import working_precision

DEFAULT_BITS = 106
I = acb(0, 1)


@dataclass(frozen=True)
class ABCMatrices:
    """Second-order operator matrices of one layer at fixed ``(k1, k2, omega)``."""

    A: CMatrix
    B: CMatrix
    C: CMatrix
    k1: acb
    k2: acb
    omega: acb
    phase: str = "phase"


@dataclass(frozen=True)
class MNMatrices:
    """First-order pair ``M = [[A, 0], [0, I]]``, ``N = [[B, C], [-I, 0]]``."""

    M: CMatrix
    N: CMatrix
    Minv: CMatrix

    def generator(self) -> CMatrix:
        """``M^-1 N``; the solution is ``r(x) = exp(-M^-1 N x) r(0)``."""
        return self.Minv @ self.N


@dataclass(frozen=True)
class RSMatrices:
    """Face-flux blocks: ``R`` multiplies ``w'`` and ``S`` the coupling terms."""

    R: CMatrix
    S: CMatrix


@dataclass(frozen=True)
class BoundaryMap:
    """``P = [[0, I], [R, Q]]`` with ``Q = i k2 R + S + i k1 W`` and its inverse.

    ``W`` holds the in-plane gradient contributions to the tractions
    (``G`` in the ``sigma_21``/``u2`` slot, ``2 G nu / (1 - 2 nu)`` in the
    ``sigma_22``/``u1`` slot); it vanishes at ``k1 = 0``.
    """

    P: CMatrix
    Pinv: CMatrix
    R: CMatrix
    S: CMatrix
    Q: CMatrix


def _c(z, bits: int) -> acb:
    with working_precision(bits):
        return to_acb(z)


def build_abc_isotropic(
    c: PhaseCoefficients, k1, k2, omega, bits: int = DEFAULT_BITS
) -> ABCMatrices:
    """Assemble ``A``, ``B``, ``C`` for an isotropic plane-strain layer.

    Parameters
    ----------
    c : PhaseCoefficients
        Layer coefficients (coupling already applied).
    k1, k2, omega : complex
        Wavenumbers and angular frequency; any of them may be complex.
    bits : int
        Working precision of the entries.

    Returns
    -------
    ABCMatrices
        ``A = diag(G, C22, K, D)`` with ``C22 = 2G(1-nu)/(1-2nu)``::

            B = [[2i k2 G,      i k1 Gs,     0,        0      ],
                 [i k1 Gs,      2i k2 C22,   -alpha,   -beta  ],
                 [0,            i w alpha,   2i k2 K,  0      ],
                 [0,            i w beta,    0,        2i k2 D]]

        with ``Gs = G/(1-2nu)``, and ``C`` holding the inertia, stiffness,
        capacity and cross-coupling terms (see the module tests for the
        entry-by-entry form).
    """
    with working_precision(bits):
        k1, k2, w = to_acb(k1), to_acb(k2), to_acb(omega)
        G, nu, rho = to_acb(c.G), to_acb(c.nu), to_acb(c.rho)
        al, be = to_acb(c.alpha), to_acb(c.beta)
        K, D, p, q, psi = (to_acb(v) for v in (c.K, c.D, c.p, c.q, c.psi))
        one_m_2nu = 1 - 2 * nu
        c22 = 2 * G * (1 - nu) / one_m_2nu
        gs = G / one_m_2nu
        kk = k1 * k1 + k2 * k2
        rw2 = rho * w * w
        A = [[G, 0, 0, 0], [0, c22, 0, 0], [0, 0, K, 0], [0, 0, 0, D]]
        B = [
            [2 * I * k2 * G, I * k1 * gs, 0, 0],
            [I * k1 * gs, 2 * I * k2 * c22, -al, -be],
            [0, I * w * al, 2 * I * k2 * K, 0],
            [0, I * w * be, 0, 2 * I * k2 * D],
        ]
        C = [
            [rw2 - k1 * k1 * c22 - G * k2 * k2, -k1 * k2 * gs, -I * k1 * al, -I * k1 * be],
            [-k1 * k2 * gs, rw2 - k1 * k1 * G - k2 * k2 * c22, -I * k2 * al, -I * k2 * be],
            [-w * k1 * al, -w * k2 * al, I * w * p - kk * K, I * w * psi],
            [-w * k1 * be, -w * k2 * be, I * w * psi, I * w * q - kk * D],
        ]
        return ABCMatrices(
            CMatrix.from_rows(A, bits),
            CMatrix.from_rows(B, bits),
            CMatrix.from_rows(C, bits),
            k1, k2, w, c.name,
        )


@dataclass(frozen=True)
class AnisotropicPhase:
    """General in-plane material tensors of one layer.

    ``C[i][j][h][k]`` is the plane elasticity tensor (indices 0, 1 for
    directions 1, 2); ``alpha``, ``beta``, ``K``, ``D`` are symmetric 2x2.
    """

    C: Sequence
    alpha: Sequence
    beta: Sequence
    K: Sequence
    D: Sequence
    rho: float
    p: float
    q: float
    psi: float
    name: str = "anisotropic"

    def check_symmetry(self) -> None:
        r = range(2)
        for i in r:
            for j in r:
                for h in r:
                    for k in r:
                        v = self.C[i][j][h][k]
                        if not (v == self.C[j][i][h][k] == self.C[i][j][k][h] == self.C[h][k][i][j]):
                            raise ValueError(
                                f"elasticity tensor lacks minor/major symmetry at {(i, j, h, k)}"
                            )
        for name in ("alpha", "beta", "K", "D"):
            t = getattr(self, name)
            if t[0][1] != t[1][0]:
                raise ValueError(f"{name} must be symmetric")


def isotropic_tensors(c: PhaseCoefficients, bits: int = DEFAULT_BITS) -> AnisotropicPhase:
    """Lift isotropic coefficients to the general tensor form."""
    with working_precision(bits):
        G, nu = to_acb(c.G), to_acb(c.nu)
        lam = 2 * G * nu / (1 - 2 * nu)
        d = lambda a, b: 1 if a == b else 0  # noqa: E731
        C = [
            [
                [[lam * d(i, j) * d(h, k) + G * (d(i, h) * d(j, k) + d(i, k) * d(j, h)) for k in range(2)]
                 for h in range(2)]
                for j in range(2)
            ]
            for i in range(2)
        ]
        diag = lambda v: [[to_acb(v), acb(0)], [acb(0), to_acb(v)]]  # noqa: E731
        return AnisotropicPhase(
            C=C, alpha=diag(c.alpha), beta=diag(c.beta), K=diag(c.K), D=diag(c.D),
            rho=c.rho, p=c.p, q=c.q, psi=c.psi, name=c.name,
        )


def build_abc_anisotropic(
    phase: AnisotropicPhase, k1, k2, omega, bits: int = DEFAULT_BITS,
    *, require_invertible: bool = True,
) -> ABCMatrices:
    """Assemble ``A``, ``B``, ``C`` from general in-plane tensors.

    Raises
    ------
    ValueError
        If the tensors lack the required symmetries.
    SingularOperatorError
        If ``A`` is singular and ``require_invertible`` is set.
    """
    phase.check_symmetry()
    with working_precision(bits):
        ks = [to_acb(k1), to_acb(k2)]
        w = to_acb(omega)
        Ct = [[[[to_acb(phase.C[i][j][h][k]) for k in range(2)] for h in range(2)]
               for j in range(2)] for i in range(2)]
        al = [[to_acb(v) for v in row] for row in phase.alpha]
        be = [[to_acb(v) for v in row] for row in phase.beta]
        Kt = [[to_acb(v) for v in row] for row in phase.K]
        Dt = [[to_acb(v) for v in row] for row in phase.D]
        rho, p, q, psi = (to_acb(v) for v in (phase.rho, phase.p, phase.q, phase.psi))
        A = [[acb(0)] * 4 for _ in range(4)]
        B = [[acb(0)] * 4 for _ in range(4)]
        C = [[acb(0)] * 4 for _ in range(4)]
        r2 = range(2)
        for i in r2:
            for h in r2:
                A[i][h] = Ct[i][1][h][1]
                B[i][h] = I * sum((ks[j] * (Ct[i][j][h][1] + Ct[i][1][h][j]) for j in r2), acb(0))
                C[i][h] = (rho * w * w if i == h else acb(0)) - sum(
                    (Ct[i][j][h][k] * ks[j] * ks[k] for j in r2 for k in r2), acb(0)
                )
            B[i][2] = -al[i][1]
            B[i][3] = -be[i][1]
            C[i][2] = -I * sum((al[i][j] * ks[j] for j in r2), acb(0))
            C[i][3] = -I * sum((be[i][j] * ks[j] for j in r2), acb(0))
        for row, cond, coup, cap in ((2, Kt, al, p), (3, Dt, be, q)):
            A[row][row] = cond[1][1]
            B[row][row] = 2 * I * sum((cond[1][j] * ks[j] for j in r2), acb(0))
            for i in r2:
                B[row][i] = I * w * coup[i][1]
                C[row][i] = -w * sum((coup[i][j] * ks[j] for j in r2), acb(0))
            C[row][row] = I * w * cap - sum((cond[a][b] * ks[a] * ks[b] for a in r2 for b in r2), acb(0))
        C[2][3] = I * w * psi
        C[3][2] = I * w * psi
        out = ABCMatrices(
            CMatrix.from_rows(A, bits), CMatrix.from_rows(B, bits), CMatrix.from_rows(C, bits),
            ks[0], ks[1], w, phase.name,
        )
    if require_invertible and out.A.det().is_zero():
        raise SingularOperatorError("A is singular: a conductivity, diffusivity or stiffness vanishes")
    return out


def build_mn(abc: ABCMatrices) -> MNMatrices:
    """First-order pair ``(M, N)`` and ``M^-1``.

    Raises
    ------
    SingularOperatorError
        If ``A`` (hence ``M``) is singular.
    """
    A, B, C = abc.A, abc.B, abc.C
    bits = A.bits
    eye = CMatrix.identity(4, bits)
    zero = CMatrix.zeros(4, 4, bits)
    M = CMatrix.block([[A, zero], [zero, eye]])
    N = CMatrix.block([[B, C], [-eye, zero]])
    if _is_diag(A):
        diag = [A[i, i] for i in range(4)]
        if any(d.is_zero() for d in diag):
            raise SingularOperatorError("A has a zero diagonal entry (e.g. zero conductivity)")
        with working_precision(bits):
            Ainv = CMatrix.diag([(1 / d).mid() for d in diag], bits)
    else:
        if A.det().is_zero():
            raise SingularOperatorError("A is singular")
        Ainv = A.inv()
    Minv = CMatrix.block([[Ainv, zero], [zero, eye]])
    return MNMatrices(M, N, Minv)


def _is_diag(a: CMatrix) -> bool:
    return all(a[i, j].is_zero() for i in range(a.nrows) for j in range(a.ncols) if i != j)


def build_rs(c: PhaseCoefficients, bits: int = DEFAULT_BITS) -> RSMatrices:
    """``R = diag(G, C22, -K, -D)`` and ``S`` with ``S[1,2] = -alpha``, ``S[1,3] = -beta``."""
    with working_precision(bits):
        G, nu = to_acb(c.G), to_acb(c.nu)
        c22 = 2 * G * (1 - nu) / (1 - 2 * nu)
        R = CMatrix.diag([G, c22, -to_acb(c.K), -to_acb(c.D)], bits)
        s = acb_mat(4, 4)
        s[1, 2] = -to_acb(c.alpha)
        s[1, 3] = -to_acb(c.beta)
        return RSMatrices(R, CMatrix(s, bits))


def build_boundary_map(
    c: PhaseCoefficients, k2, bits: int = DEFAULT_BITS, k1=0
) -> BoundaryMap:
    """State map ``y = P r`` from ``r = (w', w)`` to displacements and fluxes.

    Parameters
    ----------
    c : PhaseCoefficients
    k2 : complex
    bits : int
    k1 : complex, optional
        In-plane wavenumber.  The tractions contain ``i k1`` terms
        (``sigma_21`` through ``u2``, ``sigma_22`` through ``u1``); they
        drop out at ``k1 = 0``, where ``Q = i k2 R + S``.

    Raises
    ------
    SingularOperatorError
        If ``R`` is singular.
    """
    rs = build_rs(c, bits)
    R, S = rs.R, rs.S
    diag = [R[i, i] for i in range(4)]
    if any(d.is_zero() for d in diag):
        raise SingularOperatorError("R is singular")
    with working_precision(bits):
        kk1, kk2 = to_acb(k1), to_acb(k2)
        G, nu = to_acb(c.G), to_acb(c.nu)
        c12 = 2 * G * nu / (1 - 2 * nu)
        w = acb_mat(4, 4)
        w[0, 1] = G
        w[1, 0] = c12
        W = CMatrix(w, bits)
        Q = R.scale(I * kk2) + S + W.scale(I * kk1)
        Rinv = CMatrix.diag([(1 / d).mid() for d in diag], bits)
    eye = CMatrix.identity(4, bits)
    zero = CMatrix.zeros(4, 4, bits)
    P = CMatrix.block([[zero, eye], [R, Q]])
    Pinv = CMatrix.block([[-(Rinv @ Q), Rinv], [eye, zero]])
    return BoundaryMap(P, Pinv, R, S, Q)


__all__ = [
    "ABCMatrices",
    "MNMatrices",
    "RSMatrices",
    "BoundaryMap",
    "AnisotropicPhase",
    "build_abc_isotropic",
    "build_abc_anisotropic",
    "isotropic_tensors",
    "build_mn",
    "build_rs",
    "build_boundary_map",
]
