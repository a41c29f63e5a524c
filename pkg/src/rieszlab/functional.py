"""Potential evaluation and exponential-integral experiments.

Potentials Tf(x) = int k(x,y) f(y) dy are evaluated for radial kernels and
radial data through exact spherical means (Chebyshev nodes absorb the
endpoint weight in n = 2, a plain chord integral in n = 3), with the
singular self-interaction integrated analytically through the kernel's
local power law.  On top of that sit the regularized exponentials exp_m,
the exponential functional over a finite-measure evaluation region with an
optional radially-singular target measure, log-normalized extremal families,
the blow-up (saturation) exponent fit, and the explicit unbounded-potential
witness sequence for critical kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import geom, kernels, rearrange


# ---------------------------------------------------------------------------
# radial data


@dataclass(frozen=True)
class RadialPowerLaw:
    """f(y) = scale * |y|^exponent on the annulus r_lo < |y| < r_hi."""

    exponent: float
    r_lo: float
    r_hi: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0 <= self.r_lo < self.r_hi:
            raise ValueError("need 0 <= r_lo < r_hi")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(all="ignore"):
            vals = self.scale * s ** self.exponent
        return np.where((s > self.r_lo) & (s < self.r_hi), vals, 0.0)

    def support(self):
        return self.r_lo, self.r_hi

    def lp_norm(self, p: float, n: int) -> float:
        """||f||_p over R^n, exact."""
        a = p * self.exponent + n
        omega = geom.sphere_area(n)
        if abs(a) < 1e-12:
            val = omega * math.log(self.r_hi / max(self.r_lo, 1e-300))
        else:
            val = omega * (self.r_hi ** a - self.r_lo ** a) / a
        return abs(self.scale) * val ** (1.0 / p)

    def rescaled(self, factor: float) -> "RadialPowerLaw":
        return RadialPowerLaw(self.exponent, self.r_lo, self.r_hi,
                              self.scale * factor)


@dataclass(frozen=True)
class RadialStep:
    """Piecewise-constant radial function: values[i] on [breaks[i], breaks[i+1])."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        b = tuple(float(v) for v in self.breaks)
        v = tuple(float(x) for x in self.values)
        if len(b) != len(v) + 1 or any(x >= y for x, y in zip(b, b[1:])):
            raise ValueError("breaks must be increasing with len(values)+1 edges")
        if b[0] < 0:
            raise ValueError("radii must be nonnegative")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(np.asarray(self.breaks), s, side="right") - 1
        ok = (idx >= 0) & (idx < len(self.values))
        vals = np.where(ok, np.asarray(self.values + (0.0,))[np.minimum(
            idx, len(self.values))], 0.0)
        return vals

    def support(self):
        return self.breaks[0], self.breaks[-1]

    def lp_norm(self, p: float, n: int) -> float:
        omega = geom.sphere_area(n)
        total = 0.0
        for lo, hi, v in zip(self.breaks, self.breaks[1:], self.values):
            total += abs(v) ** p * omega * (hi ** n - lo ** n) / n
        return total ** (1.0 / p)


# ---------------------------------------------------------------------------
# spherical means and potentials


def _spherical_mean(kernel_radial, rho: float, s: float, n: int) -> float:
    """Mean of K(|x - s w|) over unit directions w, with |x| = rho.

    The chord length w runs over [|rho-s|, rho+s]; the angular measure has
    inverse-square-root endpoint weights in n = 2 (resolved by a squared
    substitution on geometric panels, which also captures the logarithmic
    blow-up as s -> rho for order-one kernels) and is a plain chord integral
    in n = 3.
    """
    a, b = abs(rho - s), rho + s
    if b <= 0:
        return float(kernel_radial(np.array([1e-300]))[0])
    if rho == 0 or s == 0:
        return float(kernel_radial(np.array([max(a, 1e-300)]))[0])
    if n == 2:
        # M = (1/pi) int_0^1 K(w(u)) du / sqrt(u(1-u)), w^2 = a^2+(b^2-a^2)u
        # split at u = 1/2 and substitute u = v^2 (resp. 1-u = v^2)
        nodes, wts = geom.geom_panels(1e-9, math.sqrt(0.5), 40, order=8)
        total = 0.0
        for flip in (False, True):
            u = nodes ** 2
            if flip:
                u = 1.0 - u
            w = np.sqrt(a * a + (b * b - a * a) * u)
            total += float(np.sum(wts * 2.0 * kernel_radial(w)
                                  / np.sqrt(1.0 - nodes ** 2 + 1e-300)))
        return total / math.pi
    if n == 3:
        nodes, wts = geom.geom_panels(max(a, 1e-12), b, 24, order=8)
        return float(np.sum(wts * kernel_radial(nodes) * nodes)
                     / (2 * rho * s))
    # general n: Gauss in u = cos(angle) against (1-u^2)^((n-3)/2)
    x, wt = geom.leggauss(64)
    w = np.sqrt(np.maximum(rho * rho + s * s - 2 * rho * s * x, 1e-300))
    dens = (1 - x * x) ** ((n - 3) / 2)
    norm = float(np.sum(wt * dens))
    return float(np.sum(wt * dens * kernel_radial(w)) / norm)


def _kernel_radial_fn(spec):
    if isinstance(spec, kernels.RieszKernel):
        return lambda w: np.asarray(w, dtype=float) ** (spec.alpha - spec.n)
    if isinstance(spec, kernels.BesselKernel):
        prof = kernels.bessel_kernel(spec.n, spec.alpha)
        return lambda w: np.asarray(prof(w))
    if isinstance(spec, kernels.SymbolInverseKernel):
        asm = kernels._radial_assembly_cached(spec)
        return lambda w: np.array([asm.eval(float(x)) for x in
                                   np.atleast_1d(w)])
    raise TypeError(f"potential() supports radial kernels, got {spec!r}")


def potential(spec, f, x, singular_delta: float | None = None) -> float:
    """Tf(x) for a radial kernel and radial data f.

    The radial profile of f is integrated against spherical means of the
    kernel whose singular chord endpoint is resolved analytically, so the
    self-interaction needs no cell surgery: the adaptive shell integral
    declares |x| as a breakpoint and converges through the (integrable)
    logarithmic spike.  singular_delta optionally excises the shell band
    |s - |x|| < delta and replaces it with the kernel's exact local
    power-law ball integral (useful for coarsely sampled step data).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rho = float(np.linalg.norm(x))
    n = spec.n
    lo, hi = f.support()
    if hi <= lo:
        return 0.0
    kr = _kernel_radial_fn(spec)
    omega = geom.sphere_area(n)

    def integrand(s):
        fs = float(f(np.array([s]))[0])
        if fs == 0.0:
            return 0.0
        return fs * s ** (n - 1) * _spherical_mean(kr, rho, s, n)

    total = 0.0
    segs = [(lo, hi)]
    if singular_delta and lo < rho < hi:
        delta = float(singular_delta)
        alpha_loc = spec.alpha
        c_loc = float(kr(np.array([delta]))[0]) * delta ** (n - alpha_loc)
        total += float(f(np.array([rho]))[0]) * c_loc * omega * \
            delta ** alpha_loc / alpha_loc
        segs = [(lo, max(lo, rho - delta)), (min(hi, rho + delta), hi)]
    for a, b in segs:
        if b <= a:
            continue
        inner_pts = [p for p in (rho,) if a < p < b]
        # break at the support edges of step data as well
        if isinstance(f, RadialStep):
            inner_pts.extend(p for p in f.breaks if a < p < b)
        val, _ = quad(integrand, a, b, points=sorted(inner_pts) or None,
                      limit=400)
        total += omega * val
    return total


# ---------------------------------------------------------------------------
# regularized exponentials


def exp_regularized(t, m: int):
    """exp_m(t) = e^t - sum_{k<=m} t^k/k!; m = -1 gives the plain exponential.

    Small arguments (t < m + 1) are summed from the series tail to avoid
    cancellation; large ones subtract directly.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    if m < 0:
        out = np.exp(t)
        return float(out[0]) if scalar else out
    out = np.empty_like(t)
    small = t < m + 1
    ts = t[small]
    if ts.size:
        acc = np.zeros_like(ts)
        term = ts ** (m + 1) / math.factorial(m + 1)
        k = m + 1
        while True:
            acc += term
            k += 1
            term = term * ts / k
            if np.all(term <= 1e-18 * (acc + 1e-300)) or k > m + 400:
                break
        out[small] = acc
    tl = t[~small]
    if tl.size:
        poly = np.zeros_like(tl)
        term = np.ones_like(tl)
        for k in range(0, m + 1):
            if k > 0:
                term = term * tl / k
            poly += term
        out[~small] = np.exp(tl) - poly
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# exponential functional


@dataclass(frozen=True)
class PotentialField:
    """Sampled potential with quadrature weights over the evaluation region."""

    points: np.ndarray   # (m, n)
    values: np.ndarray   # Tf at the points
    weights: np.ndarray  # Lebesgue quadrature weights over E
    error_estimates: np.ndarray | None = None


def radial_field(spec, f, region_radius: float, n_nodes: int = 48,
                 center=None) -> PotentialField:
    """Potential of radial data sampled on a radial Gauss grid of B(0, R)."""
    n = spec.n
    x0 = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    xg, wg = geom.leggauss(n_nodes)
    radii = 0.5 * region_radius * (xg + 1.0)
    wts = 0.5 * region_radius * wg * geom.sphere_area(n) * radii ** (n - 1)
    pts = np.zeros((n_nodes, n))
    pts[:, 0] = radii
    pts += x0
    vals = np.array([potential(spec, f, p) for p in pts])
    return PotentialField(points=pts, values=vals, weights=wts)


def measure_density(measure, pts: np.ndarray) -> np.ndarray:
    """Density of the target measure at the points.

    measure: "lebesgue" or ("radial_power", sigma) with density
    min(1, |x|^(n(sigma-1))), which gives a ball-growth exponent sigma*n.
    """
    if measure == "lebesgue" or measure is None:
        return np.ones(len(pts))
    kind, sigma = measure
    if kind != "radial_power":
        raise ValueError(f"unknown measure {measure!r}")
    n = pts.shape[1]
    r = np.linalg.norm(pts, axis=1)
    return np.minimum(1.0, np.maximum(r, 1e-300) ** (n * (sigma - 1.0)))


def mt_functional(fld: PotentialField, gamma: float, beta: float,
                  m: int = -1, measure="lebesgue", E=None) -> float:
    """int exp_m[gamma |Tf|^beta] over the field's region, against Lebesgue
    measure or the built-in radially singular measure.  Cells are combined
    in log space, so very large exponents degrade to inf gracefully.
    An optional domain E masks the field's points to E's interior."""
    if gamma <= 0 or beta <= 1:
        raise ValueError("need gamma > 0 and beta > 1")
    t = gamma * np.abs(fld.values) ** beta
    dens = measure_density(measure, fld.points) * fld.weights
    if E is not None:
        dens = dens * E.contains(fld.points).astype(float)
    big = t > 700.0
    small_sum = float(np.sum(dens[~big] * exp_regularized(t[~big], m))) \
        if np.any(~big) else 0.0
    if not np.any(big):
        return small_sum
    logs = np.log(np.maximum(dens[big], 1e-300)) + t[big]
    peak = float(np.max(logs))
    if peak > 700.0:
        return math.inf
    return small_sum + float(np.exp(peak) * np.sum(np.exp(logs - peak)))


# ---------------------------------------------------------------------------
# extremal families


@dataclass(frozen=True)
class ExtremalFamily:
    """Log-type normalized test family concentrating at the origin.

    kind "riesz_log": f = |y|^(-alpha) on eps < |y| < r0, whose n/alpha-norm
    has the exact form (|B_1| log(r0^n/eps^n))^(alpha/n).
    kind "kernel_adapted": f = K |K|^(beta-2) on eps < |y| < 1 for a radial
    kernel profile K.
    """

    kind: str
    epsilon: float
    r0: float
    n: int
    alpha: float

    def __post_init__(self):
        if not 0 < self.epsilon < self.r0:
            raise ValueError("need 0 < epsilon < r0")
        if self.kind not in ("riesz_log", "kernel_adapted"):
            raise ValueError("unknown family kind")

    def profile(self) -> RadialPowerLaw:
        if self.kind != "riesz_log":
            raise ValueError("closed-form profile only for riesz_log")
        return RadialPowerLaw(-self.alpha, self.epsilon, self.r0)

    def norm_conjugate(self) -> float:
        """||f||_{n/alpha}, exact for riesz_log."""
        if self.kind != "riesz_log":
            raise ValueError("closed-form norm only for riesz_log")
        vol1 = geom.ball_volume(self.n)
        val = vol1 * math.log(self.r0 ** self.n / self.epsilon ** self.n)
        return val ** (self.alpha / self.n)

    def normalized_profile(self) -> RadialPowerLaw:
        return self.profile().rescaled(1.0 / self.norm_conjugate())


@dataclass(frozen=True)
class HyperbolicLogFamily:
    """Radial log plateau on hyperbolic space with C^1 transitions of width
    epsilon/2 at the inner plateau and at the outer cutoff."""

    epsilon: float
    n: int

    def __post_init__(self):
        if not 0 < self.epsilon < 0.25:
            raise ValueError("need 0 < epsilon < 1/4")

    def value(self, r):
        r = np.asarray(r, dtype=float)
        eps = self.epsilon
        out = np.zeros_like(r)
        plateau = math.log(1.0 / eps)
        a, b = eps, 1.5 * eps            # inner C^1 transition
        c, d = 0.5, 0.5 + eps / 2        # outer C^1 transition to 0
        out = np.where(r <= a, plateau, out)
        mid = (r > b) & (r <= c)
        out = np.where(mid, -np.log(np.maximum(r, 1e-300)), out)
        t1 = (r > a) & (r <= b)
        out = np.where(t1, _hermite(r, a, b, plateau, 0.0,
                                    math.log(1.0 / b), -1.0 / b), out)
        t2 = (r > c) & (r <= d)
        out = np.where(t2, _hermite(r, c, d, math.log(1.0 / c), -1.0 / c,
                                    0.0, 0.0), out)
        return out

    def laplacian(self, r, h: float = 1e-5):
        """Hyperbolic radial Laplacian v'' + (n-1) coth(r) v' by central
        differences (the profile is piecewise smooth)."""
        r = np.asarray(r, dtype=float)
        v_p = self.value(r + h)
        v_m = self.value(r - h)
        v_0 = self.value(r)
        d1 = (v_p - v_m) / (2 * h)
        d2 = (v_p - 2 * v_0 + v_m) / (h * h)
        return d2 + (self.n - 1) / np.tanh(r) * d1

    def energy(self) -> float:
        """||Delta_H v||_{n/2}^{n/2} with the hyperbolic volume element."""
        p = self.n / 2.0
        eps = self.epsilon

        def ig(r):
            return abs(self.laplacian(np.array([r]))[0]) ** p * \
                math.sinh(r) ** (self.n - 1)

        total = 0.0
        brk = [1e-6, eps, 1.5 * eps, 0.5, 0.5 + eps / 2]
        for a, b in zip(brk, brk[1:]):
            val, _ = quad(ig, a + 1e-9, b - 1e-9, limit=300)
            total += val
        return geom.sphere_area(self.n) * total


def _hermite(r, a, b, va, da, vb, db):
    """Cubic Hermite interpolant on [a, b] with endpoint values/derivatives."""
    h = b - a
    t = (np.asarray(r, dtype=float) - a) / h
    h00 = 2 * t ** 3 - 3 * t ** 2 + 1
    h10 = t ** 3 - 2 * t ** 2 + t
    h01 = -2 * t ** 3 + 3 * t ** 2
    h11 = t ** 3 - t ** 2
    return h00 * va + h10 * h * da + h01 * vb + h11 * h * db


# ---------------------------------------------------------------------------
# saturation experiment


@dataclass(frozen=True)
class SaturationResult:
    gamma: float
    sigma: float
    epsilons: np.ndarray
    values: np.ndarray
    fitted_exponent: float
    predicted_exponent: float
    r_squared: float


def saturation_experiment(spec, gammas, epsilons, sigma: float = 1.0,
                          measure=None, r0: float = 1.0,
                          n_nodes: int = 24) -> list:
    """Exponential integral of the normalized log family over B(0, eps/2).

    For each gamma the integral values are fitted as a power of eps over the
    smallest epsilons; blow-up corresponds to a negative fitted exponent and
    the prediction is n (sigma - gamma |B_1|).
    """
    n, alpha = spec.n, spec.alpha
    beta = n / (n - alpha)
    vol1 = geom.ball_volume(n)
    if measure is None:
        measure = "lebesgue" if sigma == 1.0 else ("radial_power", sigma)
    epsilons = np.sort(np.asarray(epsilons, dtype=float))[::-1]
    fields = []
    for eps in epsilons:
        fam = ExtremalFamily("riesz_log", eps, r0, n, alpha)
        psi = fam.normalized_profile()
        fields.append(radial_field(spec, psi, eps / 2, n_nodes=n_nodes))
    out = []
    for gamma in np.atleast_1d(gammas):
        vals = np.array([mt_functional(fld, float(gamma), beta, m=-1,
                                       measure=measure) for fld in fields])
        # fit on the smallest epsilons (asymptotic regime)
        k = min(4, len(epsilons))
        xs = np.log(epsilons[-k:])
        ys = np.log(vals[-k:])
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + intercept)
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
        out.append(SaturationResult(
            gamma=float(gamma), sigma=sigma, epsilons=epsilons.copy(),
            values=vals, fitted_exponent=float(slope),
            predicted_exponent=float(n * (sigma - gamma * vol1)),
            r_squared=float(r2)))
    return out


# ---------------------------------------------------------------------------
# failure witness for critical kernels


@dataclass(frozen=True)
class WitnessStep:
    m: int
    level: float              # eps_m
    norm_conjugate: float     # ||Phi_m||_{beta'}
    inf_potential: float      # inf over the witness ball of T Psi_m


def failure_witness(spec, ms, eps0: float = 1.0, basepoint=None,
                    ball_radius: float = 0.5, check_critical: bool = True
                    ) -> list:
    """Normalized level-set test functions with potentials blowing up.

    For each m the function k(x_m, .) |k|^(beta-2) restricted to the level
    annulus {2^-m < |k(x_m, .)| <= eps0} is conjugate-normalized, and the
    infimum of its potential over the ball B(x_m, ball_radius) is recorded.
    The sequence must increase without bound exactly when the tail integral
    of the rearrangement diverges; subcritical kernels are rejected.
    """
    n, alpha = spec.n, spec.alpha
    beta = n / (n - alpha)
    x0 = np.zeros(n) if basepoint is None else np.asarray(basepoint,
                                                          dtype=float)
    if check_critical:
        rep = rearrange.critical_integral(spec, [x0], tau=1.0, beta=beta,
                                          doublings=14)
        if not rep.divergent:
            raise ValueError("kernel is subcritical at the basepoint; "
                             "no witness sequence exists")
    if not isinstance(spec, kernels.RieszKernel):
        raise TypeError("witness construction implemented for the Riesz "
                        "kernel (radial level sets)")
    omega = geom.sphere_area(n)
    out = []
    for m in ms:
        eps_m = 2.0 ** (-m)
        u0 = eps0 ** (-1.0 / (n - alpha))
        u1 = eps_m ** (-1.0 / (n - alpha))
        if u1 <= u0:
            raise ValueError("empty level annulus")
        # Phi = |y|^((alpha-n)(beta-1)) on u0 < |y| < u1
        phi = RadialPowerLaw((alpha - n) * (beta - 1.0), u0, u1)
        norm_pow = omega * math.log(u1 / u0)  # int |k|^beta over the annulus
        norm = norm_pow ** (1.0 / _conjugate(beta))
        psi = phi.rescaled(1.0 / norm)
        radii = np.linspace(0.0, ball_radius, 5)
        vals = []
        for r in radii:
            x = x0.copy()
            x[0] += r
            vals.append(potential(spec, psi, x))
        out.append(WitnessStep(m=int(m), level=eps_m, norm_conjugate=norm,
                               inf_potential=float(min(vals))))
    return out


def _conjugate(beta: float) -> float:
    return beta / (beta - 1.0)
