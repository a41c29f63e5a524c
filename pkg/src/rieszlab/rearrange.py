"""Distribution functions, nonincreasing rearrangements and related functionals.

The central object is the nonincreasing rearrangement f* of a function f,
represented either as an exact step profile (finite weighted atoms) or as a
log-linearly interpolated sampled profile (analytic radial kernels).  On top
of that the module provides the maximal envelope of a family of profiles, the
running average f**, the tail integral sup_x int_tau^inf (k1*(x,t))^beta dt
used to classify kernels as subcritical or critical, and the exact layer-cake
identity that converts between t-integrals of a profile and s-integrals of
its distribution function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_T_MIN = 1e-6
DEFAULT_T_MAX = 1e6
DEFAULT_POINTS_PER_DECADE = 32

# Divergence rule for doubling schedules: flag divergent when the increment
# per doubling fails to shrink by 1/GROWTH_FACTOR for CONSECUTIVE doublings.
GROWTH_FACTOR = 1.5
CONSECUTIVE_DOUBLINGS = 4


def log_grid(t_min: float = DEFAULT_T_MIN, t_max: float = DEFAULT_T_MAX,
             points_per_decade: int = DEFAULT_POINTS_PER_DECADE) -> np.ndarray:
    """Logarithmic grid used for sampled profiles."""
    decades = math.log10(t_max / t_min)
    npts = max(2, int(round(decades * points_per_decade)) + 1)
    return np.geomspace(t_min, t_max, npts)


@dataclass(frozen=True)
class WeightedSamples:
    """A function on a finite atomic measure space: value v_i with mass w_i."""

    values: np.ndarray
    weights: np.ndarray
    total_mass: float = field(default=math.nan)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if v.shape != w.shape or v.ndim != 1:
            raise ValueError("values and weights must be 1-d arrays of equal length")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)
        if math.isnan(self.total_mass):
            object.__setattr__(self, "total_mass", float(w.sum()))


def distribution_function(f: WeightedSamples, s: float) -> float:
    """Total mass of the superlevel set {|f| > s}."""
    if s < 0:
        raise ValueError("level s must be nonnegative")
    if f.values.size == 0:
        return 0.0
    return float(f.weights[np.abs(f.values) > s].sum())


@dataclass(frozen=True)
class RearrangementProfile:
    """Sampled nonincreasing profile t -> value(t) on (0, infinity).

    interpretation:
      "step"      right-continuous step function; grid holds the right
                  endpoints of the intervals [t_{i-1}, t_i) (t_0 = 0) and the
                  profile is 0 beyond the last grid point.  Exact arithmetic.
      "loglinear" samples at the grid points, power-law (linear in log-log)
                  interpolation in between, power-law extrapolation at both
                  ends from the adjacent segment.

    tail: behaviour beyond the last grid point; "auto" resolves to "zero"
    for step profiles and "extrapolate" for loglinear ones.  "zero" forces a
    hard cutoff (kernels supported on a bounded level set).
    """

    grid: np.ndarray
    star_values: np.ndarray
    interpretation: str = "step"
    tail: str = "auto"

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.star_values, dtype=float)
        if g.shape != v.shape or g.ndim != 1 or g.size == 0:
            raise ValueError("grid and star_values must be matching 1-d arrays")
        if np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing and positive")
        if np.any(v < 0):
            raise ValueError("star values must be nonnegative")
        if np.any(np.diff(v) > 1e-12 * (np.abs(v[:-1]) + 1e-300)):
            raise ValueError("star values must be nonincreasing along the grid")
        if self.interpretation not in ("step", "loglinear"):
            raise ValueError("interpretation must be 'step' or 'loglinear'")
        if self.tail not in ("auto", "zero", "extrapolate"):
            raise ValueError("tail must be 'auto', 'zero' or 'extrapolate'")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "star_values", np.minimum.accumulate(v))

    def tail_mode(self) -> str:
        if self.tail != "auto":
            return self.tail
        return "zero" if self.interpretation == "step" else "extrapolate"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.interpretation == "step":
            idx = np.searchsorted(self.grid, t, side="left")
            vals = np.where(idx < self.grid.size,
                            self.star_values[np.minimum(idx, self.grid.size - 1)], 0.0)
            return vals if vals.ndim else float(vals)
        vals = _loglinear_eval(self.grid, self.star_values, t)
        if self.tail_mode() == "zero":
            vals = np.where(np.asarray(t) > self.grid[-1], 0.0, vals)
            return float(vals) if np.ndim(vals) == 0 else vals
        return vals

    def total_mass(self) -> float:
        return float(self.grid[-1])

    def as_weighted_samples(self) -> WeightedSamples:
        """Step profile viewed as atoms (value, interval length)."""
        if self.interpretation != "step":
            raise ValueError("only step profiles convert exactly to atoms")
        lengths = np.diff(np.concatenate(([0.0], self.grid)))
        return WeightedSamples(self.star_values.copy(), lengths)

    def to_csv(self, path) -> None:
        arr = np.column_stack([self.grid, self.star_values])
        header = "t,value"
        np.savetxt(path, arr, delimiter=",", header=header, comments="",
                   fmt="%.17g")


def profile_from_csv(path, interpretation="step") -> RearrangementProfile:
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return RearrangementProfile(arr[:, 0], arr[:, 1], interpretation)


def _loglinear_eval(grid, vals, t):
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    logs = np.log(grid)
    # zero values break log interpolation; clip to a tiny floor and restore
    floor = 1e-300
    logv = np.log(np.maximum(vals, floor))
    out[:] = np.interp(np.log(np.maximum(t, 1e-300)), logs, logv)
    # extrapolate with the edge-segment exponents
    if grid.size >= 2:
        lo = t < grid[0]
        hi = t > grid[-1]
        slope0 = (logv[1] - logv[0]) / (logs[1] - logs[0])
        slope1 = (logv[-1] - logv[-2]) / (logs[-1] - logs[-2])
        out[lo] = logv[0] + slope0 * (np.log(t[lo]) - logs[0])
        out[hi] = logv[-1] + slope1 * (np.log(t[hi]) - logs[-1])
    res = np.exp(out)
    res[res < 10 * floor] = 0.0
    return float(res[0]) if scalar else res


def rearrangement(f: WeightedSamples) -> RearrangementProfile:
    """Nonincreasing rearrangement of |f| as an exact step profile.

    Ties between equal values are broken by original index, so the output is
    deterministic.  Zero-weight atoms are dropped.
    """
    v = np.abs(f.values)
    w = f.weights
    keep = w > 0
    v, w = v[keep], w[keep]
    if v.size == 0:
        return RearrangementProfile(np.array([1.0]), np.array([0.0]), "step")
    order = np.lexsort((np.arange(v.size), -v))
    v, w = v[order], w[order]
    grid = np.cumsum(w)
    # merge equal consecutive values so the grid stays strictly increasing
    same = np.concatenate((np.abs(np.diff(v)) == 0.0, [False]))
    keep = ~same
    return RearrangementProfile(grid[keep], v[keep], "step")


def maximal_rearrangement(profiles, regrid: str | None = None) -> RearrangementProfile:
    """Pointwise supremum envelope of a family of nonincreasing profiles.

    Profiles sharing a common grid are combined exactly.  Otherwise a regrid
    rule must be supplied: "union" evaluates every profile on the union of
    the grids before taking the maximum.
    """
    profiles = list(profiles)
    if not profiles:
        raise ValueError("need at least one profile")
    if len(profiles) == 1:
        return profiles[0]
    grids_equal = all(p.grid.shape == profiles[0].grid.shape and
                      np.array_equal(p.grid, profiles[0].grid) and
                      p.interpretation == profiles[0].interpretation
                      for p in profiles)
    if grids_equal:
        vals = np.max([p.star_values for p in profiles], axis=0)
        return RearrangementProfile(profiles[0].grid, vals,
                                    profiles[0].interpretation)
    if regrid != "union":
        raise ValueError("incompatible grids; pass regrid='union'")
    union = np.unique(np.concatenate([p.grid for p in profiles]))
    interp = ("step" if all(p.interpretation == "step" for p in profiles)
              else "loglinear")
    if interp == "step":
        # on a union grid the step value on [t_{i-1}, t_i) is the value at
        # any interior point; use the left endpoint shifted right
        probes = np.concatenate(([union[0] / 2], (union[:-1] + union[1:]) / 2))
        vals = np.max([np.asarray(p(probes)) for p in profiles], axis=0)
    else:
        vals = np.max([np.asarray(p(union)) for p in profiles], axis=0)
    return RearrangementProfile(union, np.minimum.accumulate(vals), interp)


def _step_partial_integral(profile: RearrangementProfile, t: float) -> float:
    """Exact int_0^t for a step profile."""
    edges = np.concatenate(([0.0], profile.grid))
    v = profile.star_values
    widths = np.clip(np.minimum(edges[1:], t) - edges[:-1], 0.0, None)
    return float(np.dot(widths, v))


def _powerlaw_segment_integral(t0, t1, v0, v1, power=1.0):
    """int_t0^t1 (value(t))^power dt for a log-log linear segment."""
    if v0 <= 0 or v1 <= 0:
        return 0.0
    logr = math.log(t1 / t0)
    a = power * math.log(v1 / v0) / logr
    if abs((a + 1.0) * logr) < 1e-12:
        return (v0 ** power) * t0 * logr
    # v0^p t0 * expm1((a+1) log(t1/t0)) / (a+1), stable near a = -1
    return (v0 ** power) * t0 * math.expm1((a + 1.0) * logr) / (a + 1.0)


def _loglinear_partial_integral(profile, t, power=1.0):
    """int_0^t value(u)^power du for a loglinear profile, inf if divergent."""
    g, v = profile.grid, profile.star_values
    t = float(t)
    total = 0.0
    # leading piece [0, g0] by extrapolated power law
    if g.size >= 2 and v[0] > 0 and v[1] > 0:
        gamma0 = math.log(v[1] / v[0]) / math.log(g[1] / g[0])
    else:
        gamma0 = 0.0
    head = min(t, g[0])
    if head > 0:
        a = power * gamma0
        if a <= -1.0:
            return math.inf
        # int_0^head (v0 (u/g0)^gamma0)^power du
        total += (v[0] ** power) * (g[0] ** (-a)) * head ** (a + 1) / (a + 1)
    if t <= g[0]:
        return total
    for i in range(g.size - 1):
        if g[i] >= t:
            break
        hi = min(t, g[i + 1])
        v_hi = profile(hi) if hi < g[i + 1] else v[i + 1]
        total += _powerlaw_segment_integral(g[i], hi, v[i], max(v_hi, 0.0), power)
    if t > g[-1] and profile.tail_mode() == "extrapolate":
        if g.size >= 2 and v[-1] > 0 and v[-2] > 0:
            gamma1 = math.log(v[-1] / v[-2]) / math.log(g[-1] / g[-2])
            total += _powerlaw_segment_integral(g[-1], t, v[-1],
                                                v[-1] * (t / g[-1]) ** gamma1,
                                                power)
    return total


def double_star(profile: RearrangementProfile, t: float) -> float:
    """Running average (1/t) int_0^t of the profile.

    Returns inf when the profile has a non-integrable singularity at 0
    (extrapolated exponent <= -1).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if profile.interpretation == "step":
        return _step_partial_integral(profile, t) / t
    return _loglinear_partial_integral(profile, t) / t


def profile_tail_power_integral(profile: RearrangementProfile, tau: float,
                                power: float, t_max: float) -> float:
    """int_tau^t_max value(t)^power dt, exact on the piecewise model.

    Loglinear profiles are walked segment by segment: subtracting two
    partial integrals would cancel catastrophically whenever the head is
    nearly critical (exponent close to -1).
    """
    if profile.interpretation == "step":
        edges = np.concatenate(([0.0], profile.grid))
        v = profile.star_values ** power
        widths = np.clip(np.minimum(edges[1:], t_max) - np.maximum(edges[:-1], tau),
                         0.0, None)
        return float(np.dot(widths, v))
    g, v = profile.grid, profile.star_values
    total = 0.0
    if tau < g[0]:
        # extrapolated head piece [tau, g[0]]
        gamma0 = 0.0
        if g.size >= 2 and v[0] > 0 and v[1] > 0:
            gamma0 = math.log(v[1] / v[0]) / math.log(g[1] / g[0])
        hi = min(g[0], t_max)
        va = v[0] * (tau / g[0]) ** gamma0
        vb = v[0] * (hi / g[0]) ** gamma0
        total += _powerlaw_segment_integral(tau, hi, va, vb, power)
    for i in range(g.size - 1):
        if g[i + 1] <= tau:
            continue
        if g[i] >= t_max:
            break
        a = max(tau, g[i])
        b = min(t_max, g[i + 1])
        if b > a:
            va, vb = profile(a), profile(b)
            total += _powerlaw_segment_integral(a, b, max(va, 0.0),
                                                max(vb, 0.0), power)
    if t_max > g[-1] and profile.tail_mode() == "extrapolate":
        va = profile(max(tau, g[-1]))
        vb = profile(t_max)
        total += _powerlaw_segment_integral(max(tau, g[-1]), t_max,
                                            max(va, 0.0), max(vb, 0.0), power)
    return total


@dataclass(frozen=True)
class CriticalIntegralReport:
    """Tail integrability of per-basepoint rearrangements.

    per_point maps the basepoint index to int_tau^inf (k1*(x,t))^beta dt / A
    (inf when the doubling schedule detects divergence).  sup_value is the
    max over the recorded basepoint sample; the essential sup over all of N
    is approximated by that sample and nothing more.
    """

    tau: float
    beta: float
    A: float
    basepoints: tuple
    per_point: dict
    sup_value: float
    divergent: bool
    rates: dict
    t_max_reached: float
    tail_estimates: dict

    def is_divergent(self) -> bool:
        return self.divergent


def _doubling_verdict(increments, atol):
    """True when the trailing increments fail to decay.

    Only the final CONSECUTIVE_DOUBLINGS pairs count: integrands that ramp
    up and then saturate (bounded tails behind a finite cutoff) must not be
    mistaken for divergence on the strength of their early growth.
    """
    incs = np.asarray(list(increments), dtype=float)
    if incs.size < CONSECUTIVE_DOUBLINGS + 1:
        return False
    tail = incs[-(CONSECUTIVE_DOUBLINGS + 1):]
    return bool(np.all(tail[1:] > atol) and
                np.all(tail[1:] >= tail[:-1] / GROWTH_FACTOR))


def critical_integral(kernel, basepoints, tau: float, beta: float,
                      A: float | None = None, t_start: float = None,
                      doublings: int = 24, atol: float = 1e-12,
                      **rearrange_kwargs) -> CriticalIntegralReport:
    """Per-basepoint tail integrals int_tau^inf (k1*(x,t))^beta dt.

    The infinite upper limit is replaced by a doubling schedule; divergence
    is declared when the per-doubling increments stop decaying (see
    GROWTH_FACTOR / CONSECUTIVE_DOUBLINGS).  The sup over basepoints is
    divided by A when given.
    """
    from . import kernels  # local import; kernels builds on these profiles

    if tau <= 0 or beta <= 1:
        raise ValueError("need tau > 0 and beta > 1")
    A = 1.0 if A is None else float(A)
    basepoints = [np.atleast_1d(np.asarray(x, dtype=float)) for x in basepoints]
    t0 = tau if t_start is None else t_start
    per_point, rates, tails = {}, {}, {}
    divergent_any = False
    t_max = t0 * 2.0 ** doublings
    for i, x in enumerate(basepoints):
        prof = kernels.partial_rearrangement(kernel, x, t_min=min(tau, 1e-6),
                                             t_max=t_max * 2, **rearrange_kwargs)
        partial = []
        T = t0
        for _ in range(doublings):
            T *= 2.0
            partial.append(profile_tail_power_integral(prof, tau, beta, T))
        increments = np.diff([0.0] + partial)
        scale = max(partial[-1], atol)
        diverges = _doubling_verdict(increments, atol * scale)
        # log-divergence rate: increment per doubling / log 2
        tail_incs = increments[-CONSECUTIVE_DOUBLINGS:]
        rates[i] = float(np.mean(tail_incs) / math.log(2.0))
        tails[i] = float(increments[-1])
        if diverges:
            per_point[i] = math.inf
            divergent_any = True
        else:
            per_point[i] = partial[-1] / A
    sup_value = max(per_point.values()) if per_point else 0.0
    return CriticalIntegralReport(
        tau=tau, beta=beta, A=A,
        basepoints=tuple(tuple(x) for x in basepoints),
        per_point=per_point, sup_value=sup_value, divergent=divergent_any,
        rates=rates, t_max_reached=t_max, tail_estimates=tails)


@dataclass(frozen=True)
class LayerCakeResult:
    lhs: float
    rhs: float
    residual: float
    rhs_printed_variant: float


def _distribution_breaks(profile: RearrangementProfile):
    """Distinct step values with the measure of the strict superlevel sets."""
    edges = np.concatenate(([0.0], profile.grid))
    v = profile.star_values
    # lambda(s) for s in [v_{k+1}, v_k) equals cumulative mass through step k
    return v, edges[1:]


def layer_cake_identity(phi: RearrangementProfile, p: float, t0: float,
                        t_max: float | None = None) -> LayerCakeResult:
    """Exact check of the distribution-function identity for nonincreasing phi.

    lhs = int_0^{phi(t0)} lambda_phi(s) s^{p-1} ds
    rhs = (1/p) int_{t0}^inf phi^p dt + (t0/p) phi(t0)^p

    Both sides are computed independently (lhs on the s-side through the
    distribution function, rhs on the t-side); the residual is |lhs - rhs|.
    rhs_printed_variant replaces the boundary term by t0 * phi(t0)^(p-1),
    a variant that circulates in the literature; the two agree only when
    phi(t0) is 0 or p, so the variant is reported for comparison, never used.
    """
    if p <= 1:
        raise ValueError("need p > 1")
    if t0 <= 0:
        raise ValueError("need t0 > 0")
    phi_t0 = float(phi(t0))

    if phi.interpretation == "step":
        vals, cum = _distribution_breaks(phi)
        # integrate lambda(s) s^{p-1} over [0, phi_t0]; lambda is a step in s
        # with lambda(s) = cum[k] for s in [vals[k+1], vals[k])
        s_hi = np.concatenate((vals, [0.0]))  # vals sorted decreasing
        lhs = 0.0
        upper = phi_t0
        for k in range(vals.size):
            hi = min(vals[k], upper) if k > 0 else upper
            lo = s_hi[k + 1]
            if hi > lo:
                lhs += cum[k] * (hi ** p - lo ** p) / p
        tail = profile_tail_power_integral(phi, t0, p, phi.grid[-1])
        rhs = tail / p + (t0 / p) * phi_t0 ** p
        printed = tail / p + t0 * phi_t0 ** (p - 1)
        return LayerCakeResult(lhs, rhs, abs(lhs - rhs), printed)

    # sampled profile: integrate both sides numerically on the same model
    if t_max is None:
        t_max = phi.grid[-1]
        if phi.tail_mode() == "extrapolate":
            t_max = phi.grid[-1] * 1e8
    from scipy.integrate import quad

    def lam(s):
        # measure of {phi > s} under the power-law model, via monotone inversion
        g, v = phi.grid, phi.star_values
        if s >= v[0]:
            # extrapolate the head power law
            if v.size >= 2 and v[1] > 0:
                gamma0 = math.log(v[1] / v[0]) / math.log(g[1] / g[0])
                if gamma0 < 0:
                    return g[0] * (s / v[0]) ** (1.0 / gamma0)
            return 0.0
        idx = np.searchsorted(-v, -s, side="right") - 1
        idx = min(max(idx, 0), v.size - 2)
        if v[idx + 1] == v[idx]:
            return g[idx + 1]
        gamma = math.log(v[idx + 1] / v[idx]) / math.log(g[idx + 1] / g[idx])
        return g[idx] * (s / v[idx]) ** (1.0 / gamma)

    lhs, _ = quad(lambda s: lam(s) * s ** (p - 1), 0.0, phi_t0, limit=400)
    tail = profile_tail_power_integral(phi, t0, p, t_max)
    rhs = tail / p + (t0 / p) * phi_t0 ** p
    printed = tail / p + t0 * phi_t0 ** (p - 1)
    return LayerCakeResult(lhs, rhs, abs(lhs - rhs), printed)
