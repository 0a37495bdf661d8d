import math

import mpmath
import numpy as np
import pytest
from flint import acb
from hypothesis import given
from hypothesis import strategies as st

from oracles import fold, long_speed, shear_speed, temporal_heat_root
from thermolam.materials import PhaseInput, apply_coupling, derive_coefficients
from thermolam.numerics.cmatrix import CMatrix, arb_log2
from thermolam.numerics.precision import working_precision
from thermolam.spectrum import (
    LABELS, SpectrumPoint, SweepConfig, Thresholds, acb_to_mpc, band_report, classify,
    dispersion_determinant, dispersion_residual, evaluate_point, hausdorff_relative, homogeneity_defect,
    is_homogeneous, k2_to_lambda, lambda_to_k2, reciprocity_residual, solve_floquet,
    sweep, temporal_spectrum, track_branches,
)
from thermolam.transfer import CellSpec, LayerSpec, TransferMatrix


@pytest.fixture(scope="module")
def unit_cell():
    """Unit-scaled decoupled phase: G = rho = p = K = 1, q = D = 0.1."""
    c = derive_coefficients(PhaseInput(E=2.6, nu=0.3, rho=1, Kt=1, C_spec=1, alpha_t=0, D_over_q=1, T0=1))
    return CellSpec((LayerSpec(apply_coupling(c, 0.0), 1.0),))


@pytest.fixture(scope="module")
def point_1e6(sofc_cell):
    return evaluate_point(sofc_cell, 1e6, 1.0)


# wavenumber map ------------------------------------------------------------

@pytest.mark.parametrize(
    "lam,expect",
    [
        (1, (0.0, 0.0)),
        (-1, (math.pi, 0.0)),
        (1j, (math.pi / 2, 0.0)),
        (-1j, (-math.pi / 2, 0.0)),
        (complex(-math.e, -0.0), (math.pi, -1.0)),
        (math.exp(-2) * complex(math.cos(0.5), math.sin(0.5)), (0.5, 2.0)),
    ],
)
def test_lambda_to_k2_examples(lam, expect):
    k2r, k2i = lambda_to_k2(lam)
    assert k2r == pytest.approx(expect[0], abs=1e-15)
    assert k2i == pytest.approx(expect[1], abs=1e-15)


def test_lambda_to_k2_beyond_double_range():
    with working_precision(128):
        big = acb(2) ** 5000
    k2r, k2i = lambda_to_k2(big)
    assert k2r == 0.0 and k2i == pytest.approx(-5000 * math.log(2), rel=1e-15)
    assert lambda_to_k2(1 / big)[1] == pytest.approx(5000 * math.log(2), rel=1e-15)


def test_lambda_to_k2_errors():
    with pytest.raises(ValueError):
        lambda_to_k2(0)
    with pytest.raises(ValueError):
        lambda_to_k2(1, L=0.0)


@given(st.floats(-math.pi, math.pi, exclude_min=True), st.floats(-700, 700))
def test_wavenumber_roundtrip(k2r, k2i):
    r, i = lambda_to_k2(k2_to_lambda(k2r, k2i))
    assert abs(r - k2r) <= 1e-14 * max(1.0, abs(k2r)) + 1e-15
    assert abs(i - k2i) <= 1e-14 * max(1.0, abs(k2i)) + 1e-15


def test_acb_to_mpc_keeps_huge_exponent():
    with working_precision(128):
        z = acb(3) ** 4000
    m = acb_to_mpc(z)
    assert mpmath.log(abs(m)) == pytest.approx(4000 * math.log(3), rel=1e-15)


# classification -------------------------------------------------------------

def _pt(vec, k2i=0.0):
    return SpectrumPoint(1.0, 0.0, 0.0, 1, mpmath.mpc(1), 0.0, k2i, eigvec=tuple(vec) + (0,) * 4)


@pytest.mark.parametrize(
    "vec,k2i,label",
    [
        ((1, 0, 0, 0), 0.0, "shear-propagating"),
        ((1, 0, 0, 0), 0.1, "shear-attenuated"),
        ((0.1, 1, 0, 0), 0.0, "compressional-propagating"),
        ((0, 1, 0.2, 0), -3.0, "compressional-attenuated"),
        ((0, 0, 1, 0), 5.0, "thermal-damping"),
        ((0, 0, 0.1, 1j), 5.0, "diffusive-damping"),
        ((1, 1, 1, 0), 0.0, "mixed"),
        ((0, 0, 0, 0), 0.0, "mixed"),
    ],
)
def test_classify_examples(vec, k2i, label):
    assert classify(_pt(vec, k2i)) == label
    assert label in LABELS


def test_classify_weights_change_family():
    p = _pt((1, 0, 0.5, 0))
    assert classify(p) == "shear-propagating"
    assert classify(p, Thresholds(weights=(1, 1, 10, 1))) == "thermal-damping"


def test_classify_threshold_edge():
    p = _pt((1, 0, 0, 0), 1e-6)
    assert classify(p, Thresholds(eps_band=1e-6)) == "shear-attenuated"
    assert classify(p, Thresholds(eps_band=2e-6)) == "shear-propagating"


def test_classify_needs_vector():
    with pytest.raises(ValueError):
        classify(SpectrumPoint(1.0, 0.0, 0.0, 1, mpmath.mpc(1), 0.0, 0.0))


def test_thresholds_validation():
    with pytest.raises(ValueError):
        Thresholds(eps_band=0)
    with pytest.raises(ValueError):
        Thresholds(dominance=1.5)


# Floquet problem -------------------------------------------------------------

def test_identity_matrix_multipliers():
    t = CMatrix.identity(8, 128)
    tm = TransferMatrix(t, 0.0, 0j, 0j, 0j, 0.0, 128, 0.0)
    sol = solve_floquet(tm, with_vectors=False)
    for lam in sol.multipliers:
        assert abs(complex(acb_to_mpc(lam)) - 1) < 1e-15
    assert sol.palindromic_residual == 0.0


def test_reciprocity_and_distance_helpers():
    with working_precision(128):
        vals = [acb(2), acb(0.5), acb(0, 3), 1 / acb(0, 3)]
        assert reciprocity_residual(vals, 128) < 1e-35
        assert reciprocity_residual([acb(2), acb(0.4)], 128) == pytest.approx(0.2, rel=1e-12)
        assert hausdorff_relative(vals, list(reversed(vals)), 128) == 0.0


def test_point_has_four_decaying_waves(point_1e6):
    pts, diag = point_1e6
    assert len(pts) == 8
    mods = [abs(p.lam) for p in pts]
    assert sum(m <= 1 for m in mods) >= 4 and sum(m >= 1 for m in mods) >= 4
    assert [p.branch for p in pts] == list(range(1, 9))
    assert diag.det_residual < 1e-25
    assert diag.reciprocity_residual < 1e-25
    assert diag.cross_check_distance < 1e-25


def test_point_is_symmetric_in_k2(point_1e6):
    """Reciprocity: every (k2r, k2i) has a partner (-k2r, -k2i) modulo 2 pi."""
    pts, _ = point_1e6
    for p in pts:
        best = min(
            abs(fold(p.k2r_star + q.k2r_star)) + abs(p.k2i_star + q.k2i_star) / (1 + abs(p.k2i_star))
            for q in pts
        )
        assert best < 1e-10


def test_point_satisfies_dispersion(sofc_cell, point_1e6):
    pts, _ = point_1e6
    L = sofc_cell.L
    for p in pts:
        k2 = complex(p.k2r_star, p.k2i_star) / L
        assert dispersion_residual(sofc_cell, 0.0, k2, 1e6, scaled=True) < 1e-20


def test_dispersion_vanishes_relative_to_nearby(sofc_cell):
    pts, _ = evaluate_point(sofc_cell, 1e4, 1.0)
    L = sofc_cell.L
    for p in pts:
        k2 = complex(p.k2r_star, p.k2i_star) / L
        on, _ = dispersion_determinant(sofc_cell, 0.0, k2, 1e4)
        off, _ = dispersion_determinant(sofc_cell, 0.0, k2 + 0.3 / L, 1e4)
        # D exceeds the double range here; compare base-2 logarithms.  k2 is
        # stored as a double, so the on-root value drops by at most ~2**-52.
        assert arb_log2(abs(on)) < arb_log2(abs(off)) - 40


def test_point_inhomogeneous_flag(sofc_cell):
    pts, _ = evaluate_point(sofc_cell, 1e5, 1.0, k1_star=0.3, cross_check=False)
    assert all("inhomogeneous" in p.flags for p in pts)


def test_homogeneity_helpers():
    assert homogeneity_defect(2.0, 3.0 + 1j) == pytest.approx(2.0)
    assert is_homogeneous(2 + 2j, 1 + 1j)
    assert not is_homogeneous(2.0, 1 + 1j)


# sweeps ---------------------------------------------------------------------

def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(())
    with pytest.raises(ValueError):
        SweepConfig((2.0, 1.0))
    with pytest.raises(ValueError):
        SweepConfig((-1.0,))
    with pytest.raises(ValueError):
        SweepConfig((1.0,), deltas=())
    with pytest.raises(ValueError):
        SweepConfig((1.0,), workers=0)
    with pytest.raises(ValueError):
        SweepConfig((1.0,), precision="octuple")


@pytest.fixture(scope="module")
def small_sweep(sofc_cell):
    cfg = SweepConfig(tuple(np.linspace(2e5, 2e6, 6)), deltas=(0.0, 1.0), cross_check=False)
    return cfg, sweep(sofc_cell, cfg)


def test_sweep_ordering(small_sweep):
    cfg, table = small_sweep
    keys = [(p.delta, p.omega_star, p.k2i_star, p.k2r_star) for p in table.points]
    assert keys == sorted(keys)
    assert len(table.points) == 8 * len(cfg.omega_star) * 2
    assert table.deltas == (0.0, 1.0) and not table.failures
    for w in cfg.omega_star:
        assert sorted(p.branch for p in table.at(w, 1.0)) == list(range(1, 9))


def test_sweep_parallel_identical(sofc_cell, small_sweep):
    cfg, table = small_sweep
    cfg2 = SweepConfig(cfg.omega_star, deltas=cfg.deltas, cross_check=False, workers=2)
    assert sweep(sofc_cell, cfg2).points == table.points


def test_track_branches_follows_continuity():
    def p(w, k2r, vec):
        return SpectrumPoint(w, 0.0, 0.0, 0, mpmath.mpc(1), k2r, 0.0, eigvec=vec)

    e1, e2 = (1, 0, 0, 0, 0, 0, 0, 0), (0, 1, 0, 0, 0, 0, 0, 0)
    pts = [p(1.0, 0.1, e1), p(1.0, 0.2, e2), p(2.0, 0.25, e1), p(2.0, 0.3, e2)]
    out = track_branches(pts)
    # eigenvector overlap outweighs the smaller k2 jump
    assert [q.branch for q in out] == [1, 2, 1, 2]


def test_band_report_homogeneous_has_no_gap(sofc_coeffs):
    cell = CellSpec((LayerSpec(sofc_coeffs[0], 1e-3),))
    table = sweep(cell, SweepConfig(tuple(np.linspace(1e5, 2e7, 12)), deltas=(0.0,), cross_check=False))
    for fam in ("shear", "compressional"):
        rep = band_report(table, fam)
        assert len(rep.passbands) == 1 and not rep.gaps
        assert rep.first_gap_width == 0.0


def test_band_report_finds_shear_gap(sofc_cell, small_sweep):
    cfg = SweepConfig(tuple(np.linspace(2.5e6, 4.5e6, 9)), deltas=(1.0,), cross_check=False)
    table = sweep(sofc_cell, cfg)
    rep = band_report(table, "shear")
    assert rep.gaps and "unrefined" in rep.flags
    refined = band_report(table, "shear", cell=sofc_cell, rtol=1e-3)
    gap = refined.gaps[0]
    assert 3.09e6 < gap.omega_lo < 3.11e6 and 3.98e6 < gap.omega_hi < 4.01e6


def test_band_report_errors(small_sweep):
    _, table = small_sweep
    with pytest.raises(ValueError):
        band_report(table, "shear")
    with pytest.raises(ValueError):
        band_report(table, "acoustic", 1.0)


# temporal problem ------------------------------------------------------------

def test_temporal_zero_frequency_root(unit_cell):
    ts = temporal_spectrum(unit_cell, 0.0, 0.0, 8, max_roots=4)
    assert all(abs(r.omega) < 1e-10 for r in ts.roots)


def test_temporal_roots_match_closed_forms(unit_cell):
    c = unit_cell.layers[0].coefficients
    k = 0.5
    ts = temporal_spectrum(unit_cell, 0.0, k, 12, max_roots=6)
    got = [r.omega for r in ts.roots if r.polished]
    expect = [
        shear_speed(c.G, c.rho) * k, -shear_speed(c.G, c.rho) * k,
        long_speed(c.G, c.nu, c.rho) * k, -long_speed(c.G, c.nu, c.rho) * k,
        temporal_heat_root(k, c.p, c.K), temporal_heat_root(k, c.q, c.D),
    ]
    for e in expect:
        assert min(abs(g - e) for g in got) < 1e-12 * max(1.0, abs(e))


def test_temporal_flags_outside_radius(unit_cell):
    ts = temporal_spectrum(unit_cell, 0.0, 0.5, 12, max_roots=8)
    outside = [r for r in ts.roots if abs(r.omega) > ts.trust_radius]
    assert all("outside-trust-radius" in r.flags and not r.polished for r in outside)


def test_temporal_rejects_order(unit_cell):
    with pytest.raises(ValueError):
        temporal_spectrum(unit_cell, 0.0, 0.5, 0)


def test_map_consistency_and_zone(small_sweep):
    """Stored multipliers follow from the emitted wavenumbers; k2r* stays in (-pi, pi]."""
    _, table = small_sweep
    for p in table.points:
        assert -math.pi < p.k2r_star <= math.pi
        back = k2_to_lambda(p.k2r_star, p.k2i_star)
        assert abs(back - p.lam) <= 1e-12 * abs(p.lam)
