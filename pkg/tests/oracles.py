"""Closed-form oracles, written independently of the package internals.

Only plain floats, ``cmath`` and numpy are used here; nothing is imported
from ``thermolam`` except the material data containers.
"""

from __future__ import annotations

import cmath
import math

import numpy as np


def fold(x: float) -> float:
    """Reduce a real phase into the zone ``(-pi, pi]``."""
    y = math.fmod(x, 2 * math.pi)
    if y > math.pi:
        y -= 2 * math.pi
    elif y <= -math.pi:
        y += 2 * math.pi
    return y


def shear_speed(G: float, rho: float) -> float:
    return math.sqrt(G / rho)


def long_speed(G: float, nu: float, rho: float) -> float:
    return math.sqrt(2 * G * (1 - nu) / ((1 - 2 * nu) * rho))


def heat_k2i_star(omega: float, cap: float, cond: float, L: float) -> float:
    """``|Im k| L`` of ``k = sqrt(i omega cap / cond)``."""
    return L * math.sqrt(omega * cap / (2 * cond))


def heat_k(omega: complex, cap: float, cond: float) -> complex:
    return cmath.sqrt(1j * omega * cap / cond)


def temporal_heat_root(k: float, cap: float, cond: float) -> complex:
    """Decaying root of ``i omega cap - k**2 cond = 0`` (``exp(-i omega t)``)."""
    return -1j * cond * k * k / cap


def bilayer_shear_rhs(omega: float, l1: float, c1: float, z1: float, l2: float, c2: float, z2: float) -> float:
    """Right-hand side of ``cos(k2 L) = cos a1 cos a2 - (z1/z2 + z2/z1)/2 sin a1 sin a2``."""
    a1 = omega * l1 / c1
    a2 = omega * l2 / c2
    return math.cos(a1) * math.cos(a2) - 0.5 * (z1 / z2 + z2 / z1) * math.sin(a1) * math.sin(a2)


def bisect(f, lo: float, hi: float, rtol: float = 1e-13) -> float:
    flo = f(lo)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= rtol * abs(hi):
            break
    return 0.5 * (lo + hi)


def bilayer_shear_gaps(l1, c1, z1, l2, c2, z2, omega_max: float, n_gaps: int, samples: int = 200000):
    """First ``n_gaps`` intervals where ``|rhs| > 1`` (band gaps), by bisection."""
    g = lambda w: abs(bilayer_shear_rhs(w, l1, c1, z1, l2, c2, z2)) - 1.0
    ws = np.linspace(omega_max / samples, omega_max, samples)
    vals = [g(float(w)) for w in ws]
    edges = []
    for i in range(len(ws) - 1):
        if (vals[i] > 0) != (vals[i + 1] > 0):
            edges.append(bisect(g, float(ws[i]), float(ws[i + 1])))
    gaps = []
    # gaps start where g turns positive
    for a, b in zip(edges, edges[1:]):
        if g(0.5 * (a + b)) > 0:
            gaps.append((a, b))
        if len(gaps) == n_gaps:
            break
    return gaps


def monic_product_coeffs(roots) -> np.ndarray:
    """Coefficients ``C_0 .. C_n`` of ``prod (x - r)`` by repeated convolution."""
    c = np.array([1.0 + 0j])
    for r in roots:
        c = np.convolve(c, np.array([1.0, -r]))
    return c[::-1]  # ascending powers
