import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermolam.errors import SeriesError
from thermolam.materials import apply_coupling
from thermolam.numerics.cmatrix import CMatrix
from thermolam.transfer import (
    CellSpec, LayerSpec, cell_transfer, layer_transfer, omega_route_residual,
    poly_multiply_truncate, series_cell, series_transfer_k1, series_transfer_omega,
)


def _block(t: CMatrix, i: int, j: int) -> np.ndarray:
    return t.to_numpy()[np.ix_([i, j], [i, j])]


def test_layer_and_cell_validation(sofc_coeffs):
    with pytest.raises(ValueError):
        LayerSpec(sofc_coeffs[0], -1.0)
    with pytest.raises(ValueError):
        LayerSpec(sofc_coeffs[0], math.inf)
    with pytest.raises(ValueError):
        CellSpec(())
    with pytest.raises(ValueError):
        CellSpec((LayerSpec(sofc_coeffs[0], 0.0),))


def test_cell_period_and_coupling(sofc_cell):
    assert sofc_cell.L == pytest.approx(2e-3)
    c0 = sofc_cell.with_coupling(0.0)
    assert all(l.coefficients.alpha == 0 for l in c0.layers)


@given(
    st.floats(-500, 500), st.floats(1.0, 1e6), st.sampled_from([0.0, 0.5, 1.0]),
)
def test_cell_determinant_is_one(sofc_cell, k1, omega, delta):
    tm = cell_transfer(sofc_cell.with_coupling(delta), k1, 0.0, omega)
    assert tm.det_residual < 1e-25
    assert tm.bits > 106


@pytest.mark.parametrize("omega", [10.0, 3e5, 5e6])
def test_independent_of_k2(sofc_cell, omega):
    a = cell_transfer(sofc_cell, 20.0, 0.0, omega).T
    b = cell_transfer(sofc_cell, 20.0, 3.7, omega).T
    assert b.rel_diff(a) < 1e-25


def test_shear_block_closed_form(sofc_coeffs):
    """With k1 = 0 the (u1, sigma21) pair is a 1-D elastic string at any coupling."""
    c = sofc_coeffs[0]
    l, w = 1e-3, 2e6
    k = w * math.sqrt(c.rho / c.G)
    expect = np.array([[math.cos(k * l), math.sin(k * l) / (c.G * k)], [-c.G * k * math.sin(k * l), math.cos(k * l)]])
    for delta in (0.0, 1.0):
        t = layer_transfer(LayerSpec(apply_coupling(c, delta), l), 0.0, 0.0, w).T
        assert np.allclose(_block(t, 0, 4), expect, rtol=1e-13, atol=0)


def test_heat_block_closed_form(sofc_coeffs):
    """Decoupled (theta, q2) block of K theta'' + i omega p theta = 0."""
    c = apply_coupling(sofc_coeffs[0], 0.0)
    l, w = 1e-3, 10.0
    k = cmath.sqrt(1j * w * c.p / c.K)
    expect = np.array([[cmath.cos(k * l), -cmath.sin(k * l) / (c.K * k)], [c.K * k * cmath.sin(k * l), cmath.cos(k * l)]])
    t = layer_transfer(LayerSpec(c, l), 0.0, 0.0, w).T
    assert np.allclose(_block(t, 2, 6), expect, rtol=1e-12, atol=0)


def test_split_layer_composes(sofc_coeffs):
    c = sofc_coeffs[1]
    whole = layer_transfer(LayerSpec(c, 1e-3), 30.0, 0.0, 4e5, bits=200).T
    half = layer_transfer(LayerSpec(c, 5e-4), 30.0, 0.0, 4e5, bits=200).T
    assert (half @ half).rel_diff(whole) < 1e-40


def test_cell_is_ordered_product(sofc_cell):
    l1, l2 = sofc_cell.layers
    t = cell_transfer(sofc_cell, 5.0, 0.0, 1e5, bits=200)
    t1 = layer_transfer(l1, 5.0, 0.0, 1e5, bits=200).T
    t2 = layer_transfer(l2, 5.0, 0.0, 1e5, bits=200).T
    assert t.T.rel_diff(t2 @ t1) < 1e-50
    assert t.bits == 200 and len(t.methods) == 2


def test_fixed_precision_level(sofc_cell):
    tm = cell_transfer(sofc_cell, 0.0, 0.0, 1e3, "dd")
    assert tm.bits == 106


def test_adaptive_bits_grow_with_range(sofc_cell):
    lo = cell_transfer(sofc_cell, 0.0, 0.0, 1e2)
    hi = cell_transfer(sofc_cell, 0.0, 0.0, 1e6)
    assert hi.log_range > lo.log_range and hi.bits > lo.bits


def test_series_k1_matches_direct(sofc_coeffs):
    layer = LayerSpec(sofc_coeffs[0], 1e-3)
    s = series_transfer_k1(layer, 0.0, 1e4, radius=50.0, bits=160)
    assert s.converged and s.var == "k1"
    for k1 in (0.0, 17.0, -45.0):
        direct = layer_transfer(layer, k1, 0.0, 1e4, bits=160).T
        assert s(k1).rel_diff(direct) < 1e-11


def test_series_omega_matches_direct(sofc_coeffs):
    layer = LayerSpec(sofc_coeffs[0], 1e-5)
    s = series_transfer_omega(layer, 3.0, 0.0, radius=100.0, bits=160)
    assert s.converged
    direct = layer_transfer(layer, 3.0, 0.0, 80.0, bits=160).T
    assert s(80.0).rel_diff(direct) < 1e-11


def test_series_fixed_order_reports_tail(sofc_coeffs):
    layer = LayerSpec(sofc_coeffs[0], 1e-3)
    s = series_transfer_omega(layer, 0.0, 0.0, 3, radius=1e4, bits=128)
    assert s.order == 3 and not s.converged and s.tail_estimate > 1e-12


def test_series_errors(sofc_coeffs, sofc_cell):
    layer = LayerSpec(sofc_coeffs[0], 1e-3)
    with pytest.raises(ValueError):
        series_transfer_k1(layer, 0.0, 1.0, -1)
    with pytest.raises(SeriesError):
        series_cell(sofc_cell, "k2", 0.0, 0.0, 1.0, 4)


def test_series_cell_product(sofc_cell):
    s = series_cell(sofc_cell, "k1", 0.0, 0.0, 1e3, 24, radius=10.0, bits=160)
    direct = cell_transfer(sofc_cell, 4.0, 0.0, 1e3, bits=160).T
    assert s(4.0).rel_diff(direct) < 1e-12


def test_poly_multiply_truncate_scalar_case():
    one = CMatrix.identity(1, 64)
    from thermolam.transfer import PolyMatrix

    a = PolyMatrix((one, one.scale(2)), "k1")        # 1 + 2x
    b = PolyMatrix((one, one.scale(3)), "k1")        # 1 + 3x
    c = poly_multiply_truncate(a, b)
    assert [complex(m.to_numpy()[0, 0]) for m in c.coeffs] == [1, 5]
    c2 = poly_multiply_truncate(a, b, 2)
    assert complex(c2.coeffs[2].to_numpy()[0, 0]) == 6


@pytest.mark.parametrize("delta", [0.0, 1.0])
def test_amplitude_route_agrees(sofc_coeffs, delta):
    """Eigen-expansion reconstruction, written independently, matches T y^-."""
    layer = LayerSpec(apply_coupling(sofc_coeffs[0], delta), 1e-3)
    rng = np.random.default_rng(4)
    y = list(rng.normal(size=8) + 1j * rng.normal(size=8))
    assert omega_route_residual(layer, 12.0, 0.3, 5e4, y, bits=160) < 1e-30


def test_zero_thickness_is_identity(sofc_coeffs):
    t = layer_transfer(LayerSpec(sofc_coeffs[0], 0.0), 3.0, 2.0, 1e5, bits=128).T
    assert t.rel_diff(CMatrix.identity(8, 128)) < 1e-35


def test_shear_block_independent_of_coupling(sofc_cell):
    """At k1 = 0 the (u1, sigma21) block does not see the coupling factor."""
    ref = cell_transfer(sofc_cell.with_coupling(0.0), 0.0, 0.0, 3e6, bits=300).T.to_numpy()
    for delta in (0.5, 1.0):
        t = cell_transfer(sofc_cell.with_coupling(delta), 0.0, 0.0, 3e6, bits=300).T.to_numpy()
        assert np.allclose(t[np.ix_([0, 4], [0, 4])], ref[np.ix_([0, 4], [0, 4])], rtol=1e-15, atol=0)
