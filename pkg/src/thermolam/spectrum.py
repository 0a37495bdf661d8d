"""Complex band structure of periodic laminates.

Frequency sweeps solve the Floquet eigenproblem ``T y = lambda y`` of the
cell transfer matrix, map each multiplier to a dimensionless Bloch
wavenumber ``k2* = k2 L`` with ``lambda = exp(i k2 L)``, classify the
Bloch waves by the content of their eigenvectors and track branches
across frequency.  Band reports locate pass bands and band gaps per wave
family; the temporal problem solves for complex frequencies at real
wavenumbers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np
import scipy.linalg
from flint import acb, arb
from scipy.optimize import linear_sum_assignment

from .errors import ConvergenceError, PalindromicityError, SeriesError, ThermolamError
from .numerics.charpoly import CharPoly8, faddeev_leverrier, palindromic_reduce, solve_quartic, z_to_lambda
from .numerics.cmatrix import CMatrix, acb_abs, acb_to_complex, arb_log2, arb_to_float, to_acb
from .numerics.eigen import eigenvalues, inverse_iteration
from .numerics.precision import PrecisionPolicy, working_precision
from .transfer import CellSpec, TransferMatrix, cell_transfer, series_cell

#: Reference angular frequency [rad/s]; ``omega* = omega / OMEGA_REF``.
OMEGA_REF = 1.0

#: Accepted palindromicity residual of the characteristic polynomial.
PALINDROMIC_TOL = 1e-12

#: Relative Hausdorff distance accepted between quartic and QR multipliers.
CROSS_CHECK_TOL = 1e-10

#: Largest accepted ``|lambda_i lambda_j - 1|`` over matched pairs.
RECIPROCITY_TOL = 1e-12

#: Dynamic-range multipliers (see ``PrecisionPolicy.bits_for_range``) for
#: the full characteristic polynomial and for the quartic solve.
CHARPOLY_RANGE_FACTOR = 7.0
QUARTIC_RANGE_FACTOR = 3.0

FAMILIES = ("shear", "compressional", "thermal", "diffusive", "mixed")
LABELS = (
    "shear-propagating",
    "shear-attenuated",
    "compressional-propagating",
    "compressional-attenuated",
    "thermal-damping",
    "diffusive-damping",
    "mixed",
)


# ---------------------------------------------------------------------------
# Floquet eigenproblem


@dataclass(frozen=True)
class FloquetSolution:
    """Floquet multipliers of a cell matrix.

    Attributes
    ----------
    multipliers : tuple of acb
        Eight values ordered in reciprocal pairs ``(lambda, 1/lambda)``
        with ``|lambda| >= 1`` first.
    vectors : tuple of tuple of acb or None
        Unit eigenvectors matching ``multipliers``.
    charpoly : CharPoly8
        Characteristic polynomial the multipliers were extracted from.
    palindromic_residual : float
        ``max |C_{8-j} - C_j| / max |C_j|``.
    reciprocity_residual : float
        ``max |lambda_i lambda_j - 1|`` over matched pairs of the QR
        eigenvalues (of the quartic multipliers without cross-check).
    cross_check_distance : float or None
        Relative Hausdorff distance between quartic and QR multipliers.
    qr_multipliers : tuple of acb or None
    bits : int
        Precision of the transfer matrix used.
    escalated : bool
        The first attempt failed the palindromicity test.
    """

    multipliers: tuple
    vectors: tuple | None
    charpoly: CharPoly8
    palindromic_residual: float
    reciprocity_residual: float
    cross_check_distance: float | None
    qr_multipliers: tuple | None
    bits: int
    escalated: bool = False


def _lg_abs(z: acb) -> float:
    return arb_log2(acb_abs(z))


def relative_distance(a: acb, b: acb, bits: int) -> float:
    """``|a - b| / max(|a|, |b|)`` without overflow."""
    with working_precision(bits):
        d = acb_abs(a - b)
        if d.is_zero():
            return 0.0
        lg = arb_log2(d) - max(_lg_abs(a), _lg_abs(b))
    return math.inf if lg > 1023 else 2.0 ** max(lg, -1074.0)


def hausdorff_relative(xs: Sequence[acb], ys: Sequence[acb], bits: int) -> float:
    """Symmetric Hausdorff distance of two point sets in the relative metric."""
    if not xs or not ys:
        return math.inf
    d = [[relative_distance(x, y, bits) for y in ys] for x in xs]
    fwd = max(min(row) for row in d)
    bwd = max(min(d[i][j] for i in range(len(xs))) for j in range(len(ys)))
    return max(fwd, bwd)


def reciprocity_residual(values: Sequence[acb], bits: int) -> float:
    """Largest ``|lambda_i lambda_j - 1|`` after greedy reciprocal matching.

    Pairs are formed cheapest first over all candidate pairs, so a
    near-degenerate cluster on the unit circle cannot steal a partner.
    """
    n = len(values)
    if n % 2:
        return math.inf
    cost = {}
    with working_precision(bits):
        for i in range(n):
            for j in range(i + 1, n):
                c = acb_abs(values[i] * values[j] - 1)
                cost[(i, j)] = -math.inf if c.is_zero() else arb_log2(c)
    used: set[int] = set()
    worst = -math.inf
    for (i, j), lg in sorted(cost.items(), key=lambda kv: (kv[1], kv[0])):
        if i in used or j in used:
            continue
        used.update((i, j))
        worst = max(worst, lg)
    return 0.0 if worst == -math.inf else (math.inf if worst > 1023 else 2.0 ** max(worst, -1074.0))


def _range_bits(policy: PrecisionPolicy, log_range: float, factor: float) -> int:
    if not policy.adaptive:
        return 0
    return int(math.ceil(factor * max(0.0, log_range) / math.log(2.0))) + 64


def _pair_key(big: acb) -> tuple[float, float]:
    return (-_lg_abs(big), acb_to_complex(big / acb_abs(big)).imag if not big.is_zero() else 0.0)


def _floquet_once(
    tm: TransferMatrix, policy: PrecisionPolicy, tol: float, cross_check: bool,
    with_vectors: bool, full: bool, extra: int,
) -> FloquetSolution:
    t = tm.T
    cp_bits = t.bits + extra + _range_bits(policy, tm.log_range, CHARPOLY_RANGE_FACTOR if full else QUARTIC_RANGE_FACTOR)
    cp = faddeev_leverrier(t.with_bits(cp_bits), steps=None if full else 4)
    res = cp.palindromic_residual() if full else math.nan
    if full and not res <= tol:
        raise PalindromicityError(
            f"characteristic polynomial not palindromic: residual {res:.3e} > {tol:.1e}", res
        )
    quartic = palindromic_reduce(cp)
    q_bits = min(cp_bits, t.bits + extra + _range_bits(policy, tm.log_range, QUARTIC_RANGE_FACTOR))
    with working_precision(q_bits):
        quartic = [acb(c.mid()) + 0 for c in quartic]
    zs = solve_quartic(quartic, newton_steps=2, bits=q_bits)
    pairs = [z_to_lambda(z, bits=q_bits) for z in zs]
    pairs.sort(key=lambda pr: _pair_key(pr[0]))
    mult = tuple(v for pr in pairs for v in pr)

    qr = None
    dist = None
    if cross_check:
        qr = tuple(eigenvalues(t))
        dist = hausdorff_relative(mult, qr, t.bits)
        recip = reciprocity_residual(qr, t.bits)
    else:
        recip = reciprocity_residual(mult, q_bits)

    vecs = None
    if with_vectors:
        vecs = tuple(tuple(inverse_iteration(t, lam.mid(), steps=1)) for lam in mult)
    return FloquetSolution(
        multipliers=mult, vectors=vecs, charpoly=cp, palindromic_residual=res,
        reciprocity_residual=recip, cross_check_distance=dist, qr_multipliers=qr,
        bits=t.bits,
    )


def solve_floquet(
    tm: TransferMatrix,
    *,
    precision=None,
    cross_check: bool = True,
    with_vectors: bool = True,
    full: bool = True,
    tol: float = PALINDROMIC_TOL,
    recompute: Callable[[int], TransferMatrix] | None = None,
) -> FloquetSolution:
    """Floquet multipliers and eigenvectors of a cell transfer matrix.

    The characteristic polynomial is formed by Faddeev-LeVerrier, checked
    for palindromicity, reduced to a quartic in ``z = lambda + 1/lambda``
    and solved in closed form; each ``z`` gives the pair ``(lambda,
    1/lambda)``.  Eigenvectors come from one inverse-iteration step.

    Parameters
    ----------
    tm : TransferMatrix
        Cell matrix with finite entries.
    precision : PrecisionPolicy or str, optional
        Policy that sized ``tm``.  With an adaptive policy the polynomial
        is formed with extra bits covering the dynamic range of ``T``.
    cross_check : bool
        Also compute the eigenvalues by balanced Hessenberg QR and report
        the relative Hausdorff distance between the two sets.
    with_vectors : bool
        Compute eigenvectors.
    full : bool
        Form all eight coefficients and test palindromicity.  ``False``
        stops after the four coefficients the quartic needs.
    tol : float
        Palindromicity tolerance.
    recompute : callable, optional
        ``bits -> TransferMatrix``.  On a palindromicity failure the
        matrix is recomputed at twice its precision and the solve retried
        once; without it only the polynomial precision is raised.

    Raises
    ------
    PalindromicityError
        If the retry fails as well.
    """
    policy = PrecisionPolicy.coerce(precision)
    if not tm.T.is_finite():
        raise ThermolamError("transfer matrix has non-finite entries")
    try:
        return _floquet_once(tm, policy, tol, cross_check, with_vectors, full, 0)
    except PalindromicityError:
        if recompute is not None:
            tm2 = recompute(2 * tm.bits)
            sol = _floquet_once(tm2, policy, tol, cross_check, with_vectors, full, 0)
        else:
            sol = _floquet_once(tm, policy, tol, cross_check, with_vectors, full, tm.bits)
        return replace(sol, escalated=True)


# ---------------------------------------------------------------------------
# wavenumbers


def lambda_to_k2(lam, L: float = 1.0) -> tuple[float, float]:
    """Dimensionless Bloch wavenumber ``(k2r*, k2i*)`` of a multiplier.

    ``k2r* = Arg(lambda)`` in ``(-pi, pi]`` and ``k2i* = -ln|lambda|``, so
    ``lambda = exp(i (k2r* + i k2i*))``.  Divide by ``L`` for the
    dimensional wavenumber.

    Raises
    ------
    ValueError
        For ``lambda = 0`` or a non-positive ``L``.

    Examples
    --------
    >>> lambda_to_k2(-1)
    (3.141592653589793, 0.0)
    """
    if not L > 0:
        raise ValueError("cell period must be positive")
    z = to_acb(lam)
    if z.is_zero():
        raise ValueError("lambda = 0 has no Bloch wavenumber")
    bits = max(128, int(abs(_lg_abs(z))).bit_length() + 128)
    with working_precision(bits):
        if z.imag.is_zero() and z.real < 0:
            k2r = math.pi
        else:
            k2r = float(z.arg().mid())
        k2i = arb_to_float(-acb_abs(z).log().mid())
    if k2r <= -math.pi:
        k2r = math.pi
    return k2r, (0.0 if k2i == 0 else k2i)


def k2_to_lambda(k2r: float, k2i: float) -> mpmath.mpc:
    """Inverse map ``exp(i k2r - k2i)`` at 53 bits with unbounded exponent."""
    with mpmath.workprec(80):
        v = mpmath.exp(mpmath.mpc(-k2i, k2r))
    return mpmath.mpc(+v.real, +v.imag)


def acb_to_mpc(z: acb) -> mpmath.mpc:
    """Round an ``acb`` midpoint to an mpmath complex at 53 bits."""

    def part(x: arb) -> mpmath.mpf:
        x = x.mid()
        if x.is_zero():
            return mpmath.mpf(0)
        man, exp = x.man_exp()
        return mpmath.ldexp(mpmath.mpf(int(man)), int(exp))

    with mpmath.workprec(53):
        return mpmath.mpc(part(z.real), part(z.imag))


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Thresholds:
    """Classification settings.

    ``weights`` scale the field amplitudes ``(u1, u2, theta, eta)`` before
    the dominance test; for a phase with density ``rho`` and capacities
    ``p``, ``q`` at frequency ``omega`` the energy-like choice is
    ``(sqrt(rho)|omega|, sqrt(rho)|omega|, sqrt(p), sqrt(q))`` (see
    :meth:`for_phase`).
    """

    eps_band: float = 1e-6
    dominance: float = 0.6
    weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if not self.eps_band > 0:
            raise ValueError("eps_band must be positive")
        if not 0 < self.dominance <= 1:
            raise ValueError("dominance must lie in (0, 1]")

    @classmethod
    def for_phase(cls, coeffs, omega: float, eps_band: float = 1e-6, dominance: float = 0.6) -> "Thresholds":
        w_u = math.sqrt(coeffs.rho) * (abs(omega) if omega != 0 else 1.0)
        return cls(eps_band, dominance, (w_u, w_u, math.sqrt(coeffs.p), math.sqrt(coeffs.q)))


@dataclass(frozen=True)
class SpectrumPoint:
    """One Bloch wave at one frequency.

    ``lam`` is stored as an mpmath complex with 53-bit mantissa and
    unbounded exponent, so multipliers far outside the double range keep
    their value.
    """

    omega_star: float
    delta: float
    k1_star: float
    branch: int
    lam: mpmath.mpc
    k2r_star: float
    k2i_star: float
    family: str = "mixed"
    flags: tuple[str, ...] = ()
    eigvec: tuple[complex, ...] | None = None

    @property
    def family_group(self) -> str:
        return self.family.split("-")[0]


def _snapshot(vec: Sequence[acb]) -> tuple[complex, ...]:
    """Unit vector with its largest entry real and positive."""
    vals = [acb_to_complex(v) for v in vec]
    big = max(range(len(vals)), key=lambda i: abs(vals[i]))
    a = abs(vals[big])
    if a == 0:
        return tuple(vals)
    phase = vals[big] / a
    nrm = math.sqrt(sum(abs(v) ** 2 for v in vals))
    return tuple(complex(v / phase / nrm) for v in vals)


def classify(point: SpectrumPoint, thresholds: Thresholds | None = None) -> str:
    """Label a Bloch wave by its dominant field and its attenuation.

    The weighted field amplitudes ``(u1, u2, theta, eta)`` of the
    eigenvector pick the family (shear, compressional, thermal,
    diffusive); ``"mixed"`` when none exceeds ``dominance`` times their
    norm.  Elastic families are ``-propagating`` when ``|k2i*| <
    eps_band`` and ``-attenuated`` otherwise; thermal and diffusive
    families are always ``-damping``.

    Examples
    --------
    >>> p = SpectrumPoint(1.0, 0.0, 0.0, 1, mpmath.mpc(1), 0.0, 0.0,
    ...                   eigvec=(1, 0, 0, 0, 0, 0, 0, 0))
    >>> classify(p)
    'shear-propagating'
    """
    th = thresholds or Thresholds()
    if point.eigvec is None:
        raise ValueError("classification needs an eigenvector snapshot")
    amps = [abs(point.eigvec[i]) * th.weights[i] for i in range(4)]
    nrm = math.sqrt(sum(a * a for a in amps))
    if nrm == 0 or not math.isfinite(nrm):
        return "mixed"
    top = max(range(4), key=lambda i: amps[i])
    if amps[top] <= th.dominance * nrm:
        return "mixed"
    fam = FAMILIES[top]
    if fam in ("thermal", "diffusive"):
        return f"{fam}-damping"
    return f"{fam}-propagating" if abs(point.k2i_star) < th.eps_band else f"{fam}-attenuated"


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepConfig:
    """Frequency sweep settings.

    Parameters
    ----------
    omega_star : sequence of float
        Strictly increasing, non-negative dimensionless frequencies.
    k1_star : float
        Fixed ``k1 L`` (real).
    deltas : sequence of float
        Coupling factors.
    precision : PrecisionPolicy or str
        ``None`` means adaptive double-double.
    eps_band : float
        Pass-band threshold on ``|k2i*|``.
    cross_check : bool
        Run the QR cross-check at every point.
    workers : int
        Processes used to evaluate points (results are ordered
        afterwards, so output does not depend on it).
    """

    omega_star: tuple[float, ...]
    k1_star: float = 0.0
    deltas: tuple[float, ...] = (1.0,)
    precision: object = None
    eps_band: float = 1e-6
    cross_check: bool = True
    workers: int = 1

    def __post_init__(self) -> None:
        om = tuple(float(w) for w in self.omega_star)
        object.__setattr__(self, "omega_star", om)
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if not om:
            raise ValueError("omega grid is empty")
        if any(not math.isfinite(w) or w < 0 for w in om):
            raise ValueError("omega grid values must be finite and >= 0")
        if any(b <= a for a, b in zip(om, om[1:])):
            raise ValueError("omega grid must be strictly increasing")
        if not self.deltas:
            raise ValueError("delta list is empty")
        if not self.eps_band > 0:
            raise ValueError("eps_band must be positive")
        if not math.isfinite(self.k1_star):
            raise ValueError("k1* must be finite")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        PrecisionPolicy.coerce(self.precision)

    @property
    def policy(self) -> PrecisionPolicy:
        return PrecisionPolicy.coerce(self.precision)


@dataclass(frozen=True)
class PointDiagnostics:
    """Numerical health of one sweep point."""

    omega_star: float
    delta: float
    bits: int
    det_residual: float
    palindromic_residual: float
    reciprocity_residual: float
    cross_check_distance: float | None
    escalated: bool


@dataclass(frozen=True)
class PointFailure:
    omega_star: float
    delta: float
    k1_star: float
    error: str


@dataclass
class SpectrumTable:
    """Sweep output: points, per-point diagnostics and failures.

    Points are ordered by ``delta``, then ``omega*``, then ``k2i*``, then
    ``k2r*``.
    """

    points: list[SpectrumPoint]
    diagnostics: list[PointDiagnostics] = field(default_factory=list)
    failures: list[PointFailure] = field(default_factory=list)
    L: float = 1.0
    k1_star: float = 0.0
    eps_band: float = 1e-6

    @property
    def deltas(self) -> tuple[float, ...]:
        return tuple(sorted({p.delta for p in self.points} | {f.delta for f in self.failures}))

    def select(self, *, delta: float | None = None, family: str | None = None) -> list[SpectrumPoint]:
        out = self.points
        if delta is not None:
            out = [p for p in out if p.delta == delta]
        if family is not None:
            out = [p for p in out if p.family_group == family or p.family == family]
        return out

    def at(self, omega_star: float, delta: float) -> list[SpectrumPoint]:
        return [p for p in self.points if p.omega_star == omega_star and p.delta == delta]


def _sort_key(p: SpectrumPoint) -> tuple:
    return (p.delta, p.omega_star, p.k2i_star, p.k2r_star)


def evaluate_point(
    cell: CellSpec, omega_star: float, delta: float, k1_star: float = 0.0, *,
    precision=None, eps_band: float = 1e-6, cross_check: bool = True, full: bool = True,
) -> tuple[list[SpectrumPoint], PointDiagnostics]:
    """All eight Bloch waves of ``cell`` (already scaled to ``delta``) at one frequency.

    Branch indices are provisional (1..8 in output order) until
    :func:`track_branches` runs.
    """
    L = cell.L
    k1 = k1_star / L
    omega = omega_star * OMEGA_REF
    policy = PrecisionPolicy.coerce(precision)
    tm = cell_transfer(cell, k1, 0, omega, policy)

    def recompute(bits: int) -> TransferMatrix:
        return cell_transfer(cell, k1, 0, omega, policy, bits=bits)

    sol = solve_floquet(tm, precision=policy, cross_check=cross_check, full=full, recompute=recompute)
    th = Thresholds.for_phase(cell.layers[0].coefficients, omega, eps_band)
    flags: list[str] = []
    if k1_star != 0:
        flags.append("inhomogeneous")
    if sol.escalated:
        flags.append("escalated")
    if sol.cross_check_distance is not None and not sol.cross_check_distance <= CROSS_CHECK_TOL:
        flags.append("qr-mismatch")
    if not sol.reciprocity_residual <= RECIPROCITY_TOL:
        flags.append("nonreciprocal")
    pts = []
    for lam, vec in zip(sol.multipliers, sol.vectors):
        k2r, k2i = lambda_to_k2(lam)
        p = SpectrumPoint(
            omega_star=float(omega_star), delta=float(delta), k1_star=float(k1_star), branch=0,
            lam=acb_to_mpc(lam), k2r_star=k2r, k2i_star=k2i, flags=tuple(flags),
            eigvec=_snapshot(vec),
        )
        pts.append(replace(p, family=classify(p, th)))
    pts.sort(key=_sort_key)
    pts = [replace(p, branch=i + 1) for i, p in enumerate(pts)]
    diag = PointDiagnostics(
        omega_star=float(omega_star), delta=float(delta), bits=sol.bits,
        det_residual=tm.det_residual if sol.bits == tm.bits else math.nan,
        palindromic_residual=sol.palindromic_residual,
        reciprocity_residual=sol.reciprocity_residual,
        cross_check_distance=sol.cross_check_distance, escalated=sol.escalated,
    )
    return pts, diag


def _eval_task(args):
    cell, w, d, k1s, precision, eps, cc = args
    try:
        return evaluate_point(cell, w, d, k1s, precision=precision, eps_band=eps, cross_check=cc)
    except (ThermolamError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return PointFailure(w, d, k1s, f"{type(exc).__name__}: {exc}")


def _branch_cost(a: SpectrumPoint, b: SpectrumPoint) -> float:
    dr = abs(a.k2r_star - b.k2r_star)
    dr = min(dr, 2 * math.pi - dr) / math.pi
    di = abs(a.k2i_star - b.k2i_star) / (1.0 + abs(a.k2i_star))
    overlap = 0.0
    if a.eigvec is not None and b.eigvec is not None:
        overlap = abs(sum(x.conjugate() * y for x, y in zip(a.eigvec, b.eigvec)))
    return dr + di + (1.0 - min(1.0, overlap))


def track_branches(points: list[SpectrumPoint]) -> list[SpectrumPoint]:
    """Renumber branches by continuity across consecutive frequencies.

    Neighbouring frequency sets are matched by minimum total cost (jump in
    ``k2*`` plus eigenvector misalignment) with the Hungarian algorithm,
    so crossing branches keep their identity.  Input must hold a single
    ``delta``; output keeps the input order.
    """
    by_w: dict[float, list[int]] = {}
    for i, p in enumerate(points):
        by_w.setdefault(p.omega_star, []).append(i)
    out = list(points)
    prev: list[SpectrumPoint] | None = None
    for w in sorted(by_w):
        idx = by_w[w]
        cur = [out[i] for i in idx]
        if prev is None or len(prev) != len(cur):
            for n, i in enumerate(idx):
                out[i] = replace(out[i], branch=n + 1)
        else:
            cost = np.array([[_branch_cost(a, b) for b in cur] for a in prev])
            rows, cols = linear_sum_assignment(cost)
            for r, c in zip(rows, cols):
                out[idx[c]] = replace(out[idx[c]], branch=prev[r].branch)
        prev = [out[i] for i in idx]
    return out


def sweep(cell: CellSpec, cfg: SweepConfig) -> SpectrumTable:
    """Evaluate the complex band structure on the configured grid.

    ``cell`` carries the fully coupled coefficients; each ``delta`` of the
    configuration scales them.  A failing point is logged in
    ``failures`` and the sweep continues.
    """
    tasks = []
    for d in cfg.deltas:
        cd = cell.with_coupling(d)
        for w in cfg.omega_star:
            tasks.append((cd, w, d, cfg.k1_star, cfg.precision, cfg.eps_band, cfg.cross_check))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_eval_task, tasks))
    else:
        results = [_eval_task(t) for t in tasks]
    points: list[SpectrumPoint] = []
    diags: list[PointDiagnostics] = []
    failures: list[PointFailure] = []
    for r in results:
        if isinstance(r, PointFailure):
            failures.append(r)
        else:
            points.extend(r[0])
            diags.append(r[1])
    tracked: list[SpectrumPoint] = []
    for d in cfg.deltas:
        tracked.extend(track_branches(sorted((p for p in points if p.delta == d), key=_sort_key)))
    tracked.sort(key=_sort_key)
    return SpectrumTable(
        points=tracked, diagnostics=diags, failures=failures, L=cell.L,
        k1_star=cfg.k1_star, eps_band=cfg.eps_band,
    )


# ---------------------------------------------------------------------------
# band reports


@dataclass(frozen=True)
class Band:
    kind: str
    index: int
    omega_lo: float
    omega_hi: float
    samples: int
    flags: tuple[str, ...] = ()

    @property
    def width(self) -> float:
        return self.omega_hi - self.omega_lo

    @property
    def mean(self) -> float:
        return 0.5 * (self.omega_lo + self.omega_hi)


@dataclass(frozen=True)
class BandReport:
    """Pass bands and band gaps of one wave family at one coupling factor.

    Frequencies are dimensionless (``omega*``).  Pass bands and gaps
    alternate; the first interval starts at the first grid frequency.
    """

    family: str
    delta: float
    bands: tuple[Band, ...]
    flags: tuple[str, ...] = ()

    @property
    def passbands(self) -> list[Band]:
        return [b for b in self.bands if b.kind == "pass"]

    @property
    def gaps(self) -> list[Band]:
        return [b for b in self.bands if b.kind == "gap"]

    def _first(self, kind: str) -> Band | None:
        bs = self.passbands if kind == "pass" else self.gaps
        return bs[0] if bs else None

    @property
    def first_pass_width(self) -> float:
        b = self._first("pass")
        return b.width if b else 0.0

    @property
    def first_gap_width(self) -> float:
        b = self._first("gap")
        return b.width if b else 0.0

    @property
    def first_pass_mean(self) -> float:
        b = self._first("pass")
        return b.mean if b else math.nan

    @property
    def first_gap_mean(self) -> float:
        b = self._first("gap")
        return b.mean if b else math.nan


def _passing(points: Iterable[SpectrumPoint], family: str, eps: float) -> bool:
    return any(p.family_group == family and abs(p.k2i_star) < eps for p in points)


def band_report(
    table: SpectrumTable,
    family: str,
    delta: float | None = None,
    *,
    cell: CellSpec | None = None,
    precision=None,
    rtol: float = 1e-6,
    max_iter: int = 80,
) -> BandReport:
    """Pass bands and gaps of ``family`` from a sweep table.

    A frequency belongs to a pass band when the family has a point with
    ``|k2i*| < eps_band``.  With ``cell`` (the fully coupled cell given to
    :func:`sweep`) each edge is refined by bisection on that condition
    until the bracket is below ``rtol`` relative; otherwise edges sit
    midway between grid samples and the bands carry ``"unrefined"``.
    Bands with fewer than three samples are flagged ``"under-resolved"``.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if delta is None:
        ds = table.deltas
        if len(ds) != 1:
            raise ValueError("table holds several deltas; pass one")
        delta = ds[0]
    pts = [p for p in table.points if p.delta == delta]
    grid = sorted({p.omega_star for p in pts})
    if not grid:
        return BandReport(family, delta, (), ("empty",))
    state = {}
    for p in pts:
        state.setdefault(p.omega_star, []).append(p)
    passing = [_passing(state[w], family, table.eps_band) for w in grid]

    refined_cell = cell.with_coupling(delta) if cell is not None else None

    def is_pass(w: float) -> bool:
        ps, _ = evaluate_point(
            refined_cell, w, delta, table.k1_star, precision=precision,
            eps_band=table.eps_band, cross_check=False, full=False,
        )
        return _passing(ps, family, table.eps_band)

    def edge(lo: float, hi: float, lo_pass: bool) -> tuple[float, bool]:
        if refined_cell is None:
            return 0.5 * (lo + hi), False
        for _ in range(max_iter):
            if hi - lo <= rtol * hi:
                break
            mid = 0.5 * (lo + hi)
            if is_pass(mid) == lo_pass:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi), True

    # runs of equal state on the grid
    runs: list[tuple[bool, int, int]] = []
    start = 0
    for i in range(1, len(grid) + 1):
        if i == len(grid) or passing[i] != passing[start]:
            runs.append((passing[start], start, i - 1))
            start = i
    edges = []
    refined = True
    for (s0, a0, b0), (s1, a1, b1) in zip(runs, runs[1:]):
        e, ok = edge(grid[b0], grid[a1], s0)
        edges.append(e)
        refined = refined and ok
    bands = []
    counts = {"pass": 0, "gap": 0}
    seen_pass = False
    for n, (s, a, b) in enumerate(runs):
        kind = "pass" if s else "gap"
        if kind == "gap" and not seen_pass:
            # frequencies below the first pass band are not a gap between bands
            continue
        seen_pass = seen_pass or s
        lo = grid[0] if n == 0 else edges[n - 1]
        hi = grid[-1] if n == len(runs) - 1 else edges[n]
        fl = []
        if b - a + 1 < 3:
            fl.append("under-resolved")
        if not refined:
            fl.append("unrefined")
        if n == 0:
            fl.append("open-lower")
        if n == len(runs) - 1:
            fl.append("open-upper")
        counts[kind] += 1
        bands.append(Band(kind, counts[kind], lo, hi, b - a + 1, tuple(fl)))
    # a trailing gap that runs to the end of the grid is still a gap
    flags = tuple(sorted({f for b in bands for f in b.flags if f in ("under-resolved", "unrefined")}))
    return BandReport(family, delta, tuple(bands), flags)


# ---------------------------------------------------------------------------
# dispersion function


def dispersion_determinant(cell: CellSpec, k1, k2, omega, precision=None, *, bits: int | None = None) -> tuple[acb, TransferMatrix]:
    """``det(T(k1, omega) - exp(i k2 L) I)`` and the matrix it came from."""
    tm = cell_transfer(cell, k1, 0, omega, precision, bits=bits)
    t = tm.T
    with working_precision(t.bits):
        lam = (acb(0, 1) * to_acb(k2) * to_acb(cell.L)).exp().mid()
        shifted = t - CMatrix.identity(8, t.bits).scale(lam)
    return shifted.det().mid(), tm


def dispersion_residual(cell: CellSpec, k1, k2, omega, precision=None, *, scaled: bool = False):
    """Dispersion function ``D(k, omega) = det(T - exp(i k2 L) I)``.

    Parameters
    ----------
    scaled : bool
        Return ``|D| / max(1, max|T|)**8`` (a float) instead of ``D``.
        Roots computed from a sweep give values near the working
        precision; away from a root the value is of order one or larger.

    Returns
    -------
    complex or float
        ``D`` saturates to ``inf`` components outside the double range.
    """
    d, tm = dispersion_determinant(cell, k1, k2, omega, precision)
    if not scaled:
        return acb_to_complex(d)
    if d.is_zero():
        return 0.0
    lg = _lg_abs(d) - 8 * max(0.0, tm.T.log2_norm())
    return math.inf if lg > 1023 else 2.0 ** max(lg, -1074.0)


def homogeneity_defect(k1: complex, k2: complex) -> float:
    """``k1r k2i - k2r k1i``; zero for a homogeneous plane wave."""
    k1, k2 = complex(k1), complex(k2)
    return k1.real * k2.imag - k2.real * k1.imag


def is_homogeneous(k1: complex, k2: complex, rtol: float = 1e-12) -> bool:
    k1, k2 = complex(k1), complex(k2)
    scale = max(abs(k1) * abs(k2), 1e-300)
    return abs(homogeneity_defect(k1, k2)) <= rtol * scale


# ---------------------------------------------------------------------------
# temporal problem


@dataclass(frozen=True)
class TemporalRoot:
    """Complex frequency root.  ``residual`` is the scaled dispersion residual."""

    omega: complex
    residual: float
    polished: bool
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class TemporalSpectrum:
    k1: complex
    k2: complex
    order: int
    trust_radius: float
    roots: tuple[TemporalRoot, ...]


def _series_trust_radius(poly, tol: float = 1e-8) -> float:
    """Largest ``r`` where the last retained term is below ``tol`` of the sum."""
    coeffs = poly.coeffs
    n = len(coeffs) - 1
    if n < 1:
        return 0.0
    norms = [c.max_abs() for c in coeffs]
    lg = [(-math.inf if v.is_zero() else arb_log2(v)) for v in norms]
    if lg[n] == -math.inf:
        return math.inf
    lg0 = lg[0]
    # |c_n| r^n <= tol |c_0|
    return 2.0 ** ((lg0 + math.log2(tol) - lg[n]) / n)


def _companion_roots(coeffs: list[np.ndarray], lam: complex, scale: float) -> np.ndarray:
    """Eigenvalues of ``sum_j A_j w**j`` with ``A_0`` shifted by ``-lam``.

    Uses the first companion linearisation ``A x = w B x`` in the scaled
    variable ``w / scale``; infinite eigenvalues are dropped.
    """
    n = coeffs[0].shape[0]
    a = [c * scale**j for j, c in enumerate(coeffs)]
    a[0] = a[0] - lam * np.eye(n)
    d = len(a) - 1
    # diagonal scaling of the state variables equalises row norms
    s = np.array([max(np.max(np.abs(ai[i])) for ai in a) for i in range(n)])
    s[s == 0] = 1.0
    a = [ai / s[:, None] for ai in a]
    big = n * d
    A = np.zeros((big, big), dtype=complex)
    B = np.eye(big, dtype=complex)
    for j in range(d - 1):
        A[j * n:(j + 1) * n, (j + 1) * n:(j + 2) * n] = np.eye(n)
    for j in range(d):
        A[(d - 1) * n:, j * n:(j + 1) * n] = -a[j]
    B[(d - 1) * n:, (d - 1) * n:] = a[d]
    w = scipy.linalg.eig(A, B, right=False)
    w = w[np.isfinite(w)]
    return w * scale


def temporal_spectrum(
    cell: CellSpec, k1: complex, k2: float, order: int = 8, *, precision=None,
    newton_steps: int = 6, max_roots: int | None = None, center: complex | None = None,
) -> TemporalSpectrum:
    """Complex frequencies of Bloch waves with real wavenumbers.

    The cell matrix is expanded in ``omega`` to ``order``; the polynomial
    eigenproblem ``det(T_N(omega) - exp(i k2 L) I) = 0`` is linearised to
    a generalised companion problem and solved in double precision.
    Roots inside the series trust radius are polished by Newton on the
    exact determinant (at least one step, more while the residual
    drops); roots outside are flagged ``"outside-trust-radius"`` and left
    unpolished.

    Parameters
    ----------
    cell : CellSpec
    k1 : complex
    k2 : float
        Real Bloch wavenumber [1/m].
    order : int
        Truncation order of the frequency series.
    max_roots : int, optional
        Polish only the roots nearest to ``center`` (default: the origin).
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    poly = series_cell(cell, "omega", k1, 0, 0, order, precision=precision)
    radius = _series_trust_radius(poly)
    coeffs = [c.to_numpy() for c in poly.coeffs]
    if not all(np.all(np.isfinite(c)) for c in coeffs):
        raise SeriesError("series coefficients outside the double range")
    lam = complex(np.exp(1j * k2 * cell.L))
    scale = radius if math.isfinite(radius) and radius > 0 else 1.0
    cand = _companion_roots(coeffs, lam, scale)
    c0 = 0j if center is None else complex(center)
    order_idx = np.argsort(np.abs(cand - c0), kind="stable")
    if max_roots is not None:
        order_idx = order_idx[:max_roots]
    roots = []
    for i in order_idx:
        w = complex(cand[i])
        if abs(w) > radius:
            res = dispersion_residual(cell, k1, k2, w, precision, scaled=True)
            roots.append(TemporalRoot(w, res, False, ("outside-trust-radius",)))
            continue
        w, res = _newton_det(cell, k1, k2, w, precision, newton_steps)
        roots.append(TemporalRoot(w, res, True, ()))
    return TemporalSpectrum(complex(k1), complex(k2), order, radius, tuple(roots))


def _newton_det(cell, k1, k2, w: complex, precision, steps: int) -> tuple[complex, float]:
    """Newton on ``D(omega)`` with a central-difference derivative."""
    res = dispersion_residual(cell, k1, k2, w, precision, scaled=True)
    for n in range(steps):
        h = 1e-7 * max(abs(w), 1e-3)
        d0, tm = dispersion_determinant(cell, k1, k2, w, precision)
        dp, _ = dispersion_determinant(cell, k1, k2, w + h, precision, bits=tm.bits)
        dm, _ = dispersion_determinant(cell, k1, k2, w - h, precision, bits=tm.bits)
        with working_precision(tm.bits):
            der = (dp - dm) / (2 * to_acb(h))
            if der.is_zero():
                break
            step = acb_to_complex((d0 / der).mid())
        if not (math.isfinite(step.real) and math.isfinite(step.imag)):
            break
        w_new = w - step
        res_new = dispersion_residual(cell, k1, k2, w_new, precision, scaled=True)
        if n > 0 and not res_new < res:
            break
        w, res = w_new, res_new
        if res == 0.0:
            break
    return w, res


__all__ = [
    "OMEGA_REF",
    "FloquetSolution",
    "solve_floquet",
    "lambda_to_k2",
    "k2_to_lambda",
    "acb_to_mpc",
    "Thresholds",
    "SpectrumPoint",
    "classify",
    "SweepConfig",
    "SpectrumTable",
    "PointDiagnostics",
    "PointFailure",
    "evaluate_point",
    "track_branches",
    "sweep",
    "Band",
    "BandReport",
    "band_report",
    "dispersion_residual",
    "dispersion_determinant",
    "homogeneity_defect",
    "is_homogeneous",
    "TemporalRoot",
    "TemporalSpectrum",
    "temporal_spectrum",
    "hausdorff_relative",
    "reciprocity_residual",
]
