"""Shared Euclidean geometry helpers: ball volumes, caps, lenses, lattices."""

from __future__ import annotations

import math

from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import betainc, gammaln


@lru_cache(maxsize=64)
def leggauss(order: int):
    """Cached Gauss-Legendre nodes and weights."""
    return np.polynomial.legendre.leggauss(order)


def ball_volume(n: int, r: float = 1.0) -> float:
    """Volume of the n-ball of radius r."""
    return math.exp((n / 2) * math.log(math.pi) - gammaln(n / 2 + 1)) * r ** n


def sphere_area(n: int, r: float = 1.0) -> float:
    """Surface area of the (n-1)-sphere of radius r in R^n."""
    return 2 * math.exp((n / 2) * math.log(math.pi) - gammaln(n / 2)) * r ** (n - 1)


def cap_volume(n: int, R: float, a: float) -> float:
    """Volume of the cap {y in B(0,R): y_1 >= a} for a in [-R, R]."""
    if a >= R:
        return 0.0
    if a <= -R:
        return ball_volume(n, R)
    if n == 1:
        return R - a
    # |B^{n-1}| * int_a^R (R^2 - t^2)^((n-1)/2) dt, via the regularized
    # incomplete beta for speed and accuracy
    x = 1.0 - (a / R) ** 2
    half = 0.5 * ball_volume(n, R)
    if a >= 0:
        return half * betainc((n + 1) / 2, 0.5, x)
    return ball_volume(n, R) - half * betainc((n + 1) / 2, 0.5, 1.0 - (a / R) ** 2)


def ball_intersection_volume(n: int, d: float, R1: float, R2: float) -> float:
    """Volume of B(c1,R1) cap B(c2,R2) with |c1-c2| = d."""
    if d >= R1 + R2:
        return 0.0
    if d <= abs(R1 - R2):
        return ball_volume(n, min(R1, R2))
    x = (d * d - R2 * R2 + R1 * R1) / (2 * d)
    return cap_volume(n, R1, x) + cap_volume(n, R2, d - x)


def lattice_count_ball_2d(center, r: float) -> int:
    """Number of Z^2 points inside the open ball B(center, r), by row sums."""
    cx, cy = float(center[0]), float(center[1])
    i0 = math.ceil(cx - r)
    i1 = math.floor(cx + r)
    if i1 < i0:
        return 0
    i = np.arange(i0, i1 + 1, dtype=float)
    h2 = r * r - (i - cx) ** 2
    h = np.sqrt(np.clip(h2, 0.0, None))
    lo = np.ceil(cy - h)
    hi = np.floor(cy + h)
    cnt = np.clip(hi - lo + 1, 0, None)
    return int(cnt.sum())


def lattice_count_two_balls_2d(c1, r1: float, c2, r2: float) -> int:
    """Number of Z^2 points in B(c1,r1) cap B(c2,r2), by row sums."""
    x_lo = max(c1[0] - r1, c2[0] - r2)
    x_hi = min(c1[0] + r1, c2[0] + r2)
    i0, i1 = math.ceil(x_lo), math.floor(x_hi)
    if i1 < i0:
        return 0
    i = np.arange(i0, i1 + 1, dtype=float)
    h1 = np.sqrt(np.clip(r1 * r1 - (i - c1[0]) ** 2, 0.0, None))
    h2 = np.sqrt(np.clip(r2 * r2 - (i - c2[0]) ** 2, 0.0, None))
    lo = np.ceil(np.maximum(c1[1] - h1, c2[1] - h2))
    hi = np.floor(np.minimum(c1[1] + h1, c2[1] + h2))
    cnt = np.clip(hi - lo + 1, 0, None)
    return int(cnt.sum())


def h_floor(h_fn, t: float, hint: int | None = None) -> int:
    """Largest integer m >= -1 with h(m) <= t, for strictly increasing h."""
    if t < h_fn(0):
        return -1
    hi = max(4, hint or 4)
    while h_fn(hi) <= t:
        hi *= 2
    lo = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if h_fn(mid) <= t:
            lo = mid
        else:
            hi = mid
    return lo


def quadrant_lattice_count_ball(center, r: float, h_fn, h_inv=None) -> int:
    """Count m in Z_+^2 with |(h(m1), h(m2)) - center| < r, h increasing."""
    cx, cy = float(center[0]), float(center[1])
    m1_max = h_floor(h_fn, cx + r)
    if m1_max < 0:
        return 0
    total = 0
    hint = None
    for m1 in range(0, m1_max + 1):
        dx = h_fn(m1) - cx
        rem = r * r - dx * dx
        if rem <= 0:
            continue
        w = math.sqrt(rem)
        lo_t, hi_t = cy - w, cy + w
        if hi_t < 0:
            continue
        m2_hi = h_floor(h_fn, hi_t, hint)
        hint = m2_hi + 2
        if m2_hi < 0:
            continue
        m2_lo = 0 if lo_t <= 0 else h_floor(h_fn, lo_t) + 1
        if m2_hi >= m2_lo:
            total += m2_hi - m2_lo + 1
    return total


def strip_section_volume(n_free: int, rho: float) -> float:
    """Volume of the (n_free)-ball slice of radius rho; 1 when n_free = 0."""
    if n_free == 0:
        return 1.0
    return ball_volume(n_free, rho)


def disk_line_chord(r: float, dist: float) -> float:
    """Length of the chord of B(0,r) at distance dist from the center."""
    if dist >= r:
        return 0.0
    return 2.0 * math.sqrt(r * r - dist * dist)


def gauss_panels(a: float, b: float, npanels: int, order: int = 16):
    """Composite Gauss-Legendre nodes/weights on [a, b]."""
    x, w = leggauss(order)
    edges = np.linspace(a, b, npanels + 1)
    mid = (edges[1:] + edges[:-1]) / 2
    half = (edges[1:] - edges[:-1]) / 2
    return ((mid[:, None] + half[:, None] * x[None, :]).ravel(),
            (half[:, None] * w[None, :]).ravel())


def geom_panels(a: float, b: float, npanels: int, order: int = 16):
    """Composite Gauss-Legendre nodes/weights on geometric panels of [a, b]."""
    x, w = leggauss(order)
    edges = np.geomspace(a, b, npanels + 1)
    mid = (edges[1:] + edges[:-1]) / 2
    half = (edges[1:] - edges[:-1]) / 2
    return ((mid[:, None] + half[:, None] * x[None, :]).ravel(),
            (half[:, None] * w[None, :]).ravel())


def loglin_integral(r: np.ndarray, f: np.ndarray) -> float:
    """Trapezoid integral int f(r) dr on a log-spaced grid (in log r)."""
    u = np.log(r)
    return float(np.trapz(f * r, u))
