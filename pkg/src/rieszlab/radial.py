"""Radial Fourier inversion in R^n: fast Hankel transform and panel quadrature.

The inverse Fourier transform of a radial function F(|xi|) reduces to a
Hankel transform of order n/2 - 1:

    K(r) = 2 pi r^(1 - n/2) int_0^inf F(rho) J_{n/2-1}(2 pi rho r) rho^(n/2) drho.

Two evaluators implement it: a log-grid fast Hankel transform (FFT-based,
excellent when the input has clean power-law ends) and composite
Gauss-Legendre panel quadrature with phase-aware panel widths.  For
oscillatory-regularized integrands whose leading Bessel moments vanish, the
quadrature path subtracts those moments analytically (bessel_remainder) so
the small-r evaluation does not rely on numerical cancellation.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.fft import fht, fhtoffset
from scipy.special import gammaln, jv

from . import geom


def smoothstep(u, order: int):
    """C^order polynomial step 0 -> 1 on [0, 1]."""
    u = np.clip(u, 0.0, 1.0)
    N = order
    s = np.zeros_like(u)
    for k in range(N + 1):
        s += math.comb(N + k, k) * math.comb(2 * N + 1, N - k) * (-u) ** k
    return u ** (N + 1) * s


def smoothstep_sympy(x, order: int):
    """Symbolic version of smoothstep for differentiation."""
    import sympy as sp

    N = order
    s = 0
    for k in range(N + 1):
        s += sp.binomial(N + k, k) * sp.binomial(2 * N + 1, N - k) * (-x) ** k
    return x ** (N + 1) * s


def radial_ift_fht(F, n: int, rho: np.ndarray, bias: float = 0.0):
    """Inverse Fourier transform of radial F via the log-grid fast Hankel
    transform; returns (r_out, K) on the reciprocal log grid."""
    mu = n / 2 - 1
    N = len(rho)
    dln = math.log(rho[1] / rho[0])
    jc = (N - 1) / 2
    rc = rho[0] * math.exp(jc * dln)
    offset = fhtoffset(dln, mu=mu, initial=0.0, bias=bias)
    a = np.asarray(F(rho), dtype=float) * rho ** (n / 2)
    A = fht(a, dln, mu=mu, offset=offset, bias=bias)
    kc = math.exp(offset) / rc
    k = kc * np.exp((np.arange(N) - jc) * dln)
    r_out = k / (2 * np.pi)
    return r_out, A / r_out ** (n / 2)


def bessel_remainder(z, mu: float, msub: int, z_switch: float = 6.0):
    """J_mu(z) minus its first msub ascending-series terms, evaluated stably.

    For z below z_switch the remainder is summed directly from term msub on;
    above, the finite polynomial is subtracted from J_mu without cancellation
    trouble because the terms are O(1) there.
    """
    z = np.asarray(z, dtype=float)
    if msub <= 0:
        return jv(mu, z)
    out = np.empty_like(z)
    small = z < z_switch
    zs = z[small]
    if zs.size:
        acc = np.zeros_like(zs)
        logz = np.log(np.maximum(zs / 2, 1e-300))
        for k in range(msub, msub + 80):
            term = (-1.0) ** k * np.exp((mu + 2 * k) * logz
                                        - gammaln(k + 1) - gammaln(mu + k + 1))
            acc += term
            if np.all(np.abs(term) <= 1e-18 * (np.abs(acc) + 1e-300)):
                break
        out[small] = acc
    zl = z[~small]
    if zl.size:
        poly = np.zeros_like(zl)
        logz = np.log(zl / 2)
        for k in range(msub):
            poly += (-1.0) ** k * np.exp((mu + 2 * k) * logz
                                         - gammaln(k + 1) - gammaln(mu + k + 1))
        out[~small] = jv(mu, zl) - poly
    return out


def phase_panels(a: float, b: float, r: float, order: int = 16,
                 log_ratio: float = 1.12, phase_cap: float = 0.5):
    """Gauss-Legendre panels on [a, b] whose widths respect both a geometric
    growth limit and a cap on the oscillation phase 2 pi r * width."""
    edges = [a]
    x = a
    osc = phase_cap / (2 * math.pi * max(r, 1e-300))
    while x < b:
        w = max(min(x * (log_ratio - 1.0), osc), 1e-12)
        x = min(b, x + w)
        edges.append(x)
    edges = np.asarray(edges)
    gx, gw = geom.leggauss(order)
    mid = (edges[1:] + edges[:-1]) / 2
    half = (edges[1:] - edges[:-1]) / 2
    return ((mid[:, None] + half[:, None] * gx[None, :]).ravel(),
            (half[:, None] * gw[None, :]).ravel())


def radial_ift_quad(F, n: int, r: float, rho_max: float,
                    rho_min: float = 0.0, msub: int = 0) -> float:
    """Inverse Fourier transform of radial F at radius r by panel quadrature.

    msub > 0 subtracts the leading Bessel moments (only valid when the
    corresponding moments of F vanish, as for Laplacian-regularized tails).
    """
    mu = n / 2 - 1
    nodes, wts = phase_panels(max(rho_min, 1e-12), rho_max, r)
    vals = np.asarray(F(nodes), dtype=float)
    Jlike = bessel_remainder(2 * np.pi * nodes * r, mu, msub)
    H = float(np.sum(wts * vals * Jlike * nodes ** (n / 2)))
    return 2 * np.pi * r ** (1 - n / 2) * H
