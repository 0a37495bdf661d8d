"""Engineering inputs to the coefficients of the coupled field equations.

All inputs are SI.  Normalisation by the reference temperature ``T0``
happens here and nowhere else.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

from .errors import MaterialError

#: Reference temperature of the solid-oxide fuel cell data set [K].
SOFC_T0 = 293.15


@dataclass(frozen=True)
class PhaseInput:
    """Raw isotropic material data of one phase.

    Parameters
    ----------
    E : float
        Young's modulus [Pa].
    nu : float
        Poisson ratio, ``-1 < nu < 0.5``.
    rho : float
        Mass density [kg/m^3].
    Kt : float
        Thermal conductivity [W/(m K)].
    C_spec : float
        Specific heat [J/(kg K)].
    alpha_t : float
        Linear thermal dilatation [1/K].
    beta_t : float, optional
        Linear diffusive dilatation.  Defaults to ``alpha_t / 10``.
    D_over_q : float
        Ratio of mass diffusivity to diffusive capacity [m^2/s].
    q_over_p, psi_over_p : float
        Ratios fixing ``q`` and ``psi`` from the thermal capacity ``p``.
    T0 : float
        Natural-state temperature [K].
    q, psi, D : float, optional
        Direct overrides of the ratio rules.
    name : str
        Label carried into the coefficients.
    """

    E: float
    nu: float
    rho: float
    Kt: float
    C_spec: float
    alpha_t: float
    D_over_q: float
    beta_t: float | None = None
    q_over_p: float = 0.1
    psi_over_p: float = 1.0 / 3.0
    T0: float = SOFC_T0
    q: float | None = None
    psi: float | None = None
    D: float | None = None
    name: str = "phase"

    def validate(self) -> None:
        """Raise :class:`MaterialError` naming the first violated invariant."""
        for key in ("E", "rho", "Kt", "C_spec", "T0", "D_over_q"):
            v = getattr(self, key)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise MaterialError(f"{key} must be positive and finite (got {v!r})")
        if not (-1.0 < self.nu < 0.5):
            if self.nu >= 0.5:
                raise MaterialError(
                    f"nu = {self.nu} >= 0.5: the plane-strain modulus "
                    "2G(1-nu)/(1-2nu) is singular"
                )
            raise MaterialError(f"nu = {self.nu} must exceed -1")
        for key in ("q_over_p", "psi_over_p", "alpha_t"):
            v = getattr(self, key)
            if not math.isfinite(v):
                raise MaterialError(f"{key} must be finite (got {v!r})")
        if self.q_over_p <= 0 and self.q is None:
            raise MaterialError("q_over_p must be positive")
        for key in ("q", "D"):
            v = getattr(self, key)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise MaterialError(f"{key} override must be positive (got {v!r})")
        if self.beta_t is not None and not math.isfinite(self.beta_t):
            raise MaterialError("beta_t must be finite")


@dataclass(frozen=True)
class PhaseCoefficients:
    """Coefficients entering the isotropic plane-strain field equations.

    ``alpha``, ``beta`` and ``psi`` already include the coupling factor
    recorded in ``coupling``.
    """

    rho: float
    G: float
    nu: float
    alpha: float
    beta: float
    K: float
    D: float
    p: float
    q: float
    psi: float
    name: str = "phase"
    coupling: float = 1.0
    flags: tuple[str, ...] = field(default=())

    @property
    def lam_ratio(self) -> float:
        """``1 / (1 - 2 nu)``, the factor in the Lame combinations."""
        return 1.0 / (1.0 - 2.0 * self.nu)

    @property
    def c_shear(self) -> float:
        """Shear wave speed ``sqrt(G / rho)``."""
        return math.sqrt(self.G / self.rho)

    @property
    def c_long(self) -> float:
        """Uncoupled longitudinal speed ``sqrt(2G(1-nu)/((1-2nu) rho))``."""
        return math.sqrt(2.0 * self.G * (1.0 - self.nu) / ((1.0 - 2.0 * self.nu) * self.rho))


def derive_coefficients(inp: PhaseInput) -> PhaseCoefficients:
    """Derive field-equation coefficients from raw phase data.

    ``G = E / (2 (1 + nu))``, ``alpha = 2 G (1 + nu) alpha_t / (1 - 2 nu)``
    (likewise ``beta``), ``K = Kt / T0``, ``p = rho C / T0``,
    ``q = q_over_p p``, ``psi = psi_over_p p`` and ``D = D_over_q q``.

    Raises
    ------
    MaterialError
        For non-positive inputs or ``nu`` outside ``(-1, 0.5)``.

    Examples
    --------
    >>> c = derive_coefficients(PhaseInput(E=2 * 1.25, nu=0.25, rho=1, Kt=1,
    ...                                    C_spec=1, alpha_t=0, D_over_q=1))
    >>> c.G
    1.0
    """
    inp.validate()
    G = inp.E / (2.0 * (1.0 + inp.nu))
    stress = 2.0 * G * (1.0 + inp.nu) / (1.0 - 2.0 * inp.nu)
    alpha = stress * inp.alpha_t
    # default diffusive dilatation is a tenth of the thermal one
    beta = alpha / 10.0 if inp.beta_t is None else stress * inp.beta_t
    K = inp.Kt / inp.T0
    p = inp.rho * inp.C_spec / inp.T0
    q = inp.q_over_p * p if inp.q is None else inp.q
    psi = inp.psi_over_p * p if inp.psi is None else inp.psi
    D = inp.D_over_q * q if inp.D is None else inp.D
    if not (G > 0 and K > 0 and D > 0 and p > 0 and q > 0):
        raise MaterialError("derived G, K, D, p, q must all be positive")
    return PhaseCoefficients(
        rho=inp.rho, G=G, nu=inp.nu, alpha=alpha, beta=beta, K=K, D=D, p=p, q=q,
        psi=psi, name=inp.name,
    )


def apply_coupling(c: PhaseCoefficients, delta: float) -> PhaseCoefficients:
    """Scale the coupling coefficients ``alpha``, ``beta``, ``psi`` by ``delta``.

    ``delta > 1`` is allowed for parametric studies but issues a warning
    and adds the flag ``"delta>1"``.  Negative values are rejected.
    """
    delta = float(delta)
    if not math.isfinite(delta) or delta < 0:
        raise MaterialError(f"coupling factor must be finite and >= 0 (got {delta})")
    flags = c.flags
    if delta > 1:
        warnings.warn(f"coupling factor {delta} > 1 extrapolates the model", stacklevel=2)
        if "delta>1" not in flags:
            flags = flags + ("delta>1",)
    if delta == 1.0:
        return c
    return replace(
        c,
        alpha=delta * c.alpha,
        beta=delta * c.beta,
        psi=delta * c.psi,
        coupling=c.coupling * delta,
        flags=flags,
    )


def sofc_phase_inputs() -> tuple[PhaseInput, PhaseInput]:
    """The two phases of the solid-oxide fuel cell bi-layer (SI units)."""
    phase1 = PhaseInput(
        E=155e9, nu=0.3, rho=5532.0, Kt=2.64, C_spec=400.0, alpha_t=2.2205e-6,
        D_over_q=0.9e-5, name="phase1",
    )
    phase2 = PhaseInput(
        E=50e9, nu=0.25, rho=6670.0, Kt=9.96, C_spec=440.0, alpha_t=3.8858e-6,
        D_over_q=0.73e-5, name="phase2",
    )
    return phase1, phase2


__all__ = [
    "PhaseInput",
    "PhaseCoefficients",
    "derive_coefficients",
    "apply_coupling",
    "sofc_phase_inputs",
    "SOFC_T0",
]
