"""Invariant self-test suite (``--check``): no sweep, strict exit status."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..numerics.charpoly import faddeev_leverrier
from ..numerics.cmatrix import CMatrix, acb_to_complex
from ..spectrum import (
    CROSS_CHECK_TOL, RECIPROCITY_TOL, k2_to_lambda, lambda_to_k2, solve_floquet,
)
from ..transfer import cell_transfer
from .config import RunConfig
from .runner import DET_TOL


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_charpoly(rng: np.random.Generator, n_mats: int) -> CheckResult:
    worst = 0.0
    for _ in range(n_mats):
        lam = rng.normal(size=8) + 1j * rng.normal(size=8)
        q, _ = np.linalg.qr(rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))
        a = q @ np.diag(lam) @ np.linalg.inv(q)
        expect = np.poly(lam)[::-1]  # C_0 .. C_8
        cp = faddeev_leverrier(CMatrix.from_numpy(a, 128))
        got = np.array([acb_to_complex(c) for c in cp.coeffs])
        scale = np.max(np.abs(expect))
        worst = max(worst, float(np.max(np.abs(got - expect)) / scale))
    return CheckResult("charpoly-oracle", worst <= 1e-10, f"max rel err {worst:.2e} over {n_mats} matrices")


def _wavenumber_roundtrip(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(50):
        kr = rng.uniform(-math.pi, math.pi)
        ki = rng.uniform(-50, 50)
        lam = k2_to_lambda(kr, ki)
        r, i = lambda_to_k2(lam)
        worst = max(worst, abs(r - kr), abs(i - ki))
    return CheckResult("wavenumber-roundtrip", worst <= 1e-12, f"max abs err {worst:.2e}")


def _cell_points(cfg: RunConfig, rng: np.random.Generator, n: int) -> list[CheckResult]:
    cell = cfg.build_cell()
    grid = [w for w in cfg.omega_grid() if w > 0]
    lo, hi = (min(grid), max(grid)) if grid else (1.0, 1e6)
    ws = np.exp(rng.uniform(math.log(lo), math.log(hi), size=n)) if hi > lo else np.full(n, lo)
    policy = cfg.policy()
    out = []
    for d in cfg.sweep.deltas:
        cd = cell.with_coupling(d)
        for w in sorted(float(v) for v in ws):
            tm = cell_transfer(cd, cfg.sweep.k1_star / cell.L, 0, w, policy)
            out.append(CheckResult(
                f"symplecticity d={d:g} w={w:.6g}", tm.det_residual <= DET_TOL[cfg.precision],
                f"|det T - 1| = {tm.det_residual:.2e}",
            ))
            try:
                sol = solve_floquet(tm, precision=policy, with_vectors=False)
            except ArithmeticError as exc:
                out.append(CheckResult(f"floquet d={d:g} w={w:.6g}", False, str(exc)))
                continue
            out.append(CheckResult(
                f"reciprocity d={d:g} w={w:.6g}", sol.reciprocity_residual <= RECIPROCITY_TOL,
                f"max |l_i l_j - 1| = {sol.reciprocity_residual:.2e}",
            ))
            out.append(CheckResult(
                f"quartic-vs-qr d={d:g} w={w:.6g}", sol.cross_check_distance <= CROSS_CHECK_TOL,
                f"hausdorff {sol.cross_check_distance:.2e}",
            ))
    return out


def run_checks(cfg: RunConfig, seed: int = 0, n_points: int = 3) -> list[CheckResult]:
    """Seeded invariant suite on random matrices and on the configured cell."""
    rng = np.random.default_rng(seed)
    results = [_random_charpoly(rng, 20), _wavenumber_roundtrip(rng)]
    results += _cell_points(cfg, rng, n_points)
    return results


__all__ = ["CheckResult", "run_checks"]
