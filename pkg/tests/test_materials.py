import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermolam.errors import MaterialError
from thermolam.materials import (
    PhaseInput, apply_coupling, derive_coefficients, sofc_phase_inputs,
)

T0 = 293.15


def test_phase1_values():
    p1, _ = sofc_phase_inputs()
    c = derive_coefficients(p1)
    assert c.G == 155e9 / 2.6
    assert c.G == pytest.approx(59.615e9, rel=1e-4)
    assert c.K == 2.64 / T0
    assert c.p == 5532 * 400 / T0
    assert c.q == 0.1 * c.p
    assert c.psi == c.p / 3
    assert c.D == 0.9e-5 * c.q
    assert c.alpha == pytest.approx(2 * c.G * 1.3 * 2.2205e-6 / 0.4, rel=1e-15)


def test_phase2_values():
    _, p2 = sofc_phase_inputs()
    c = derive_coefficients(p2)
    assert c.G == 20e9
    assert c.p == 6670 * 440 / T0


def test_unit_shear_modulus():
    c = derive_coefficients(PhaseInput(E=2 * 1.3, nu=0.3, rho=1, Kt=1, C_spec=1, alpha_t=0, D_over_q=1))
    assert c.G == 1.0


def test_beta_is_tenth_of_alpha():
    for p in sofc_phase_inputs():
        c = derive_coefficients(p)
        assert c.beta == c.alpha / 10


@pytest.mark.parametrize("nu", [0.5, 0.6])
def test_rejects_incompressible(nu):
    with pytest.raises(MaterialError, match="plane-strain"):
        derive_coefficients(PhaseInput(E=1, nu=nu, rho=1, Kt=1, C_spec=1, alpha_t=0, D_over_q=1))


@pytest.mark.parametrize("key", ["E", "rho", "Kt", "C_spec", "T0", "D_over_q"])
def test_rejects_nonpositive(key):
    kw = dict(E=1.0, nu=0.2, rho=1.0, Kt=1.0, C_spec=1.0, alpha_t=0.0, D_over_q=1.0)
    kw[key] = 0.0
    with pytest.raises(MaterialError, match=key):
        derive_coefficients(PhaseInput(**kw))


def test_overrides():
    c = derive_coefficients(PhaseInput(E=1, nu=0.2, rho=1, Kt=1, C_spec=1, alpha_t=0, D_over_q=1, q=5.0, psi=2.0, D=3.0))
    assert (c.q, c.psi, c.D) == (5.0, 2.0, 3.0)


def test_coupling_zero_and_identity():
    c = derive_coefficients(sofc_phase_inputs()[0])
    z = apply_coupling(c, 0.0)
    assert (z.alpha, z.beta, z.psi) == (0.0, 0.0, 0.0)
    assert (z.G, z.K, z.D, z.p, z.q) == (c.G, c.K, c.D, c.p, c.q)
    assert apply_coupling(c, 1.0) == c


def test_coupling_half():
    c = derive_coefficients(sofc_phase_inputs()[0])
    h = apply_coupling(c, 0.5)
    assert h.alpha == c.alpha / 2
    assert h.p == c.p


def test_coupling_limits():
    c = derive_coefficients(sofc_phase_inputs()[0])
    with pytest.raises(MaterialError):
        apply_coupling(c, -0.1)
    with pytest.warns(UserWarning):
        big = apply_coupling(c, 1.5)
    assert "delta>1" in big.flags


@given(st.floats(0, 1), st.floats(0, 1))
def test_coupling_linear(a, b):
    c = derive_coefficients(sofc_phase_inputs()[1])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ca = apply_coupling(c, a)
    assert ca.alpha == pytest.approx(a * c.alpha, rel=1e-15, abs=0)
    assert ca.psi == pytest.approx(a * c.psi, rel=1e-15, abs=0)


@given(st.floats(100, 2000))
def test_temperature_scaling(t0):
    base = dict(E=1e9, nu=0.25, rho=1000.0, Kt=3.0, C_spec=500.0, alpha_t=1e-6, D_over_q=1e-5)
    a = derive_coefficients(PhaseInput(T0=t0, **base))
    b = derive_coefficients(PhaseInput(T0=2 * t0, **base))
    assert b.K == a.K / 2
    assert b.p == a.p / 2


def test_wave_speeds():
    c = derive_coefficients(sofc_phase_inputs()[0])
    assert c.c_shear == math.sqrt(c.G / c.rho)
    assert c.c_long > c.c_shear
