"""Brute-force verification of the improved convolution-rearrangement bound.

Everything here lives on finite atomic measure spaces, where distribution
functions, rearrangements and running averages are exact finite sums.  The
central check compares the averaged rearrangement of a discrete potential
(T f)**(t) against the two-term majorant

    C0 max(tau^(-sigma/q), t^(-1/q)) int_0^tau u^(1/p - 1) f*(u) du
       + sup_i int_tau^inf k1*(i, u) f*(u) du

whose second term uses the per-basepoint rearrangements (strictly smaller
than the maximal-envelope variant).  The multiplicative constant is not
dictated by theory, so it is calibrated once on a seeded suite of random
instances and asserted stable on fresh ones.  The module also verifies the
weak-type bound with its explicit constant and the bounded-support pointwise
estimates, including the exact split at the level r = k1*(x, z).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .rearrange import WeightedSamples, rearrangement


def parameter_window(beta: float, sigma: float):
    """Admissible (p, q) range: p in [max(1, beta(1-sigma)/(beta-1)), beta')
    with 1/q = 1/(sigma beta) + (1/sigma)(1/p - 1)."""
    if beta <= 1 or not 0 < sigma <= 1:
        raise ValueError("need beta > 1 and sigma in (0, 1]")
    p_lo = max(1.0, beta * (1 - sigma) / (beta - 1))
    p_hi = beta / (beta - 1)
    return p_lo, p_hi


def q_from_p(p: float, beta: float, sigma: float) -> float:
    inv_q = 1.0 / (sigma * beta) + (1.0 / sigma) * (1.0 / p - 1.0)
    if inv_q <= 0:
        raise ValueError("q is not positive for these parameters")
    return 1.0 / inv_q


@dataclass(frozen=True)
class DiscreteInstance:
    """Kernel matrix on a product of finite atomic measure spaces."""

    mu: np.ndarray       # source atom weights (M side)
    nu: np.ndarray       # target atom weights (N side)
    kernel: np.ndarray   # (len(nu), len(mu)), nonnegative
    beta: float
    sigma: float = 1.0
    p: float = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        nu = np.asarray(self.nu, dtype=float)
        k = np.asarray(self.kernel, dtype=float)
        if k.shape != (nu.size, mu.size):
            raise ValueError("kernel shape must be (len(nu), len(mu))")
        if np.any(k < 0) or np.any(mu <= 0) or np.any(nu <= 0):
            raise ValueError("weights must be positive and kernel nonnegative")
        p_lo, p_hi = parameter_window(self.beta, self.sigma)
        p = self.p if self.p is not None else p_lo
        if not p_lo <= p < p_hi:
            raise ValueError(f"p = {p} outside the window [{p_lo}, {p_hi})")
        q = q_from_p(p, self.beta, self.sigma)
        if q <= p:
            raise ValueError("need q > p")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "p", float(p))

    @property
    def q(self) -> float:
        return q_from_p(self.p, self.beta, self.sigma)

    # -- rearrangement bookkeeping (exact step functions) -------------------

    def row_rearrangement(self, i: int):
        return rearrangement(WeightedSamples(self.kernel[i], self.mu))

    def col_rearrangement(self, j: int):
        return rearrangement(WeightedSamples(self.kernel[:, j], self.nu))

    def rearrangement_constants(self):
        """Smallest (D, B) with k1*(t) <= D t^(-1/beta) and
        k2*(t) <= B t^(-1/(sigma beta)) at every breakpoint."""
        D = 0.0
        for i in range(self.nu.size):
            prof = self.row_rearrangement(i)
            D = max(D, float(np.max(prof.star_values *
                                    prof.grid ** (1.0 / self.beta),
                                    initial=0.0)))
        B = 0.0
        for j in range(self.mu.size):
            prof = self.col_rearrangement(j)
            B = max(B, float(np.max(prof.star_values *
                                    prof.grid ** (1.0 / (self.sigma * self.beta)),
                                    initial=0.0)))
        return D, B

    def weak_type_constants(self):
        """Distribution-function constants: lambda_1 <= D_w s^-beta and
        lambda_2 <= B_w s^(-sigma beta) (the rearrangement constants raised
        to the matching powers)."""
        D, B = self.rearrangement_constants()
        return D ** self.beta, B ** (self.sigma * self.beta)

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"beta {self.beta!r} sigma {self.sigma!r} p {self.p!r}\n")
        buf.write("mu " + " ".join(repr(v) for v in self.mu) + "\n")
        buf.write("nu " + " ".join(repr(v) for v in self.nu) + "\n")
        for row in self.kernel:
            buf.write(" ".join(repr(v) for v in row) + "\n")
        return buf.getvalue()


def instance_from_text(text: str) -> DiscreteInstance:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    beta, sigma, p = float(head[1]), float(head[3]), float(head[5])
    mu = np.array([float(v) for v in lines[1].split()[1:]])
    nu = np.array([float(v) for v in lines[2].split()[1:]])
    k = np.array([[float(v) for v in ln.split()] for ln in lines[3:]])
    return DiscreteInstance(mu=mu, nu=nu, kernel=k, beta=beta, sigma=sigma, p=p)


# ---------------------------------------------------------------------------
# potentials and averaged rearrangements


def discrete_potential(inst: DiscreteInstance, f) -> np.ndarray:
    """T f(i) = sum_j k(i, j) f(j) mu_j, exact."""
    f = np.asarray(f, dtype=float)
    if f.shape != inst.mu.shape:
        raise ValueError("f must live on the source atoms")
    return inst.kernel @ (f * inst.mu)


def _step_breaks(profile):
    edges = np.concatenate(([0.0], profile.grid))
    return edges, profile.star_values


def step_partial_average(profile, t: np.ndarray) -> np.ndarray:
    """(1/t) int_0^t of a step profile, vectorized and exact."""
    edges, vals = _step_breaks(profile)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    csum = np.concatenate(([0.0], np.cumsum(np.diff(edges) * vals)))
    idx = np.searchsorted(edges, t, side="right") - 1
    idx = idx.clip(0, len(vals))
    base = csum[idx]
    inside = idx < len(vals)
    extra = np.where(inside, (t - edges[idx]) * np.append(vals, 0.0)[idx], 0.0)
    return (base + extra) / t


def step_weighted_tail(profile, weight_profile, tau: float) -> float:
    """int_tau^inf  k*(u) f*(u) du for two step profiles, exact."""
    e1, v1 = _step_breaks(profile)
    e2, v2 = _step_breaks(weight_profile)
    edges = np.unique(np.concatenate((e1, e2, [tau])))
    edges = edges[edges >= tau]
    if edges.size < 2:
        return 0.0
    mids = (edges[1:] + edges[:-1]) / 2
    i1 = np.searchsorted(e1, mids, side="right") - 1
    i2 = np.searchsorted(e2, mids, side="right") - 1
    k_vals = np.where(i1 < len(v1), np.append(v1, 0.0)[i1.clip(0, len(v1))], 0.0)
    f_vals = np.where(i2 < len(v2), np.append(v2, 0.0)[i2.clip(0, len(v2))], 0.0)
    return float(np.sum(np.diff(edges) * k_vals * f_vals))


def step_power_head(profile, tau: float, p: float) -> float:
    """int_0^tau u^(1/p - 1) f*(u) du for a step profile, exact."""
    edges, vals = _step_breaks(profile)
    lo = edges[:-1]
    hi = np.minimum(edges[1:], tau)
    w = np.clip(hi, 0, None)
    seg = np.where(hi > lo, (w ** (1.0 / p) - lo ** (1.0 / p)) * p, 0.0)
    return float(np.sum(seg * vals))


# ---------------------------------------------------------------------------
# the two-term majorant check


@dataclass(frozen=True)
class OneilCheckResult:
    max_margin: float        # max over the grids of LHS - RHS (<= 0 passes)
    required_c0: float       # smallest C0 making every grid point pass
    t_grid: np.ndarray
    tau_grid: np.ndarray


def _grids_from_profile(profile):
    g = profile.grid
    mids = (np.concatenate(([0.0], g[:-1])) + g) / 2
    return np.unique(np.concatenate((g, mids)))


def oneil_check(inst: DiscreteInstance, f, c0: float,
                t_grid=None, tau_grid=None) -> OneilCheckResult:
    """Evaluate the averaged-rearrangement majorant on step-function grids.

    Returns the worst signed margin with the supplied constant and the
    smallest constant that would make the instance pass (for calibration).
    """
    f = np.asarray(f, dtype=float)
    sigma, beta, p, q = inst.sigma, inst.beta, inst.p, inst.q
    Tf = discrete_potential(inst, f)
    tf_prof = rearrangement(WeightedSamples(Tf, inst.nu))
    f_prof = rearrangement(WeightedSamples(f, inst.mu))
    if t_grid is None:
        t_grid = _grids_from_profile(tf_prof)
    if tau_grid is None:
        tau_grid = _grids_from_profile(f_prof)
    t_grid = np.asarray(t_grid, dtype=float)
    tau_grid = np.asarray(tau_grid, dtype=float)
    lhs = step_partial_average(tf_prof, t_grid)
    rows = [inst.row_rearrangement(i) for i in range(inst.nu.size)]
    max_margin = -math.inf
    required = 0.0
    for tau in tau_grid:
        head = step_power_head(f_prof, float(tau), p)
        tail = max(step_weighted_tail(r, f_prof, float(tau)) for r in rows)
        scale = np.maximum(float(tau) ** (-sigma / q), t_grid ** (-1.0 / q))
        rhs = c0 * scale * head + tail
        margin = float(np.max(lhs - rhs))
        max_margin = max(max_margin, margin)
        if head > 0:
            need = np.max((lhs - tail) / (scale * head))
            required = max(required, float(need))
    return OneilCheckResult(max_margin=max_margin, required_c0=required,
                            t_grid=t_grid, tau_grid=tau_grid)


def random_instance(rng, n_source: int, n_target: int, beta: float,
                    sigma: float = 1.0, p: float = None) -> DiscreteInstance:
    """Near-extremal random instance: rank-decaying rows scaled to make the
    smallest admissible rearrangement constant equal to 1."""
    mu = rng.uniform(0.5, 1.5, n_source)
    nu = rng.uniform(0.5, 1.5, n_target)
    ranks = np.empty((n_target, n_source))
    for i in range(n_target):
        ranks[i] = rng.permutation(n_source)
    base = ((ranks + 1.0) * float(np.mean(mu))) ** (-1.0 / beta)
    k = base * rng.uniform(0.5, 1.0, size=base.shape)
    inst = DiscreteInstance(mu=mu, nu=nu, kernel=k, beta=beta, sigma=sigma, p=p)
    D, _ = inst.rearrangement_constants()
    return DiscreteInstance(mu=mu, nu=nu, kernel=k / D, beta=beta,
                            sigma=sigma, p=p)


def random_f(rng, n_source: int) -> np.ndarray:
    spiky = rng.pareto(1.5, n_source) + 0.01
    flat = rng.uniform(0.0, 1.0, n_source)
    mix = rng.random(n_source) < 0.5
    return np.where(mix, spiky, flat)


def calibrate_c0(seed: int = 20240, n_instances: int = 200,
                 max_atoms: int = 32, beta_range=(1.3, 4.0),
                 sigma_choices=(1.0,), inflation: float = 1.05) -> float:
    """Empirical majorant constant: the max required constant over a seeded
    suite of random instances, inflated by 5%."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    worst = 0.0
    for _ in range(n_instances):
        beta = rng.uniform(*beta_range)
        sigma = rng.choice(np.asarray(sigma_choices))
        nm = int(rng.integers(2, max_atoms + 1))
        nn = int(rng.integers(2, max_atoms + 1))
        inst = random_instance(rng, nm, nn, beta, float(sigma))
        f = random_f(rng, nm)
        res = oneil_check(inst, f, c0=1.0)
        worst = max(worst, res.required_c0)
    return worst * inflation


# ---------------------------------------------------------------------------
# weak-type bound


@dataclass(frozen=True)
class WeakTypeResult:
    max_observed: float
    printed_bound: float
    ratios: np.ndarray

    def passes(self) -> bool:
        return self.max_observed <= self.printed_bound * (1 + 1e-12)


def weak_type_observed(inst: DiscreteInstance, f) -> float:
    """sup_s s nu({Tf > s})^(1/q) / ||f||_p, exact on atoms."""
    f = np.asarray(f, dtype=float)
    Tf = np.abs(discrete_potential(inst, f))
    norm = float(np.sum(np.abs(f) ** inst.p * inst.mu) ** (1.0 / inst.p))
    if norm == 0:
        return 0.0
    order = np.argsort(-Tf)
    vals = Tf[order]
    cums = np.cumsum(inst.nu[order])
    # sup over s is attained just below each distinct value
    return float(np.max(vals * cums ** (1.0 / inst.q)) / norm)


def weak_type_bound(inst: DiscreteInstance) -> float:
    """q^2 / (sigma beta (q - p)) * D_w^(1 - 1/p) * B_w^(1/q) with the
    distribution-function constants."""
    Dw, Bw = inst.weak_type_constants()
    p, q = inst.p, inst.q
    return q * q / (inst.sigma * inst.beta * (q - p)) * \
        Dw ** (1.0 - 1.0 / p) * Bw ** (1.0 / q)


def weak_type_check(inst: DiscreteInstance, f_batch) -> WeakTypeResult:
    ratios = np.array([weak_type_observed(inst, f) for f in f_batch])
    return WeakTypeResult(max_observed=float(ratios.max(initial=0.0)),
                          printed_bound=weak_type_bound(inst), ratios=ratios)


# ---------------------------------------------------------------------------
# bounded-support pointwise estimates


@dataclass(frozen=True)
class ClaimResult:
    pointwise_ok: bool       # Tf(x) <= bound * int_0^z k1*(x, v) dv
    average_ok: bool         # (Tf)**(t) <= C bound z^(1/p) t^(-1/q)
    worst_pointwise_ratio: float
    worst_average_ratio: float
    split_residual: float    # exactness of the level-r split recombination


def _step_head_integral(profile, z: float) -> float:
    """int_0^z of a step profile (exact)."""
    edges, vals = _step_breaks(profile)
    w = np.clip(np.minimum(edges[1:], z) - edges[:-1], 0.0, None)
    return float(np.dot(w, vals))


def claim_check(inst: DiscreteInstance, f, alpha_bound: float,
                z: float = None) -> ClaimResult:
    """Check the bounded-support estimates exactly on the atoms.

    f must satisfy 0 <= f <= alpha_bound; z defaults to the measure of its
    support.  The split residual recombines the truncation of the kernel at
    level r = k1*(x, z) and must vanish on step functions.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0) or np.any(f > alpha_bound * (1 + 1e-12)):
        raise ValueError("need 0 <= f <= alpha_bound")
    support = f > 0
    z_actual = float(np.sum(inst.mu[support]))
    if z is None:
        z = z_actual
    Tf = discrete_potential(inst, f)
    worst_pt = 0.0
    split_res = 0.0
    for i in range(inst.nu.size):
        prof = inst.row_rearrangement(i)
        bound = alpha_bound * _step_head_integral(prof, z)
        if bound > 0:
            worst_pt = max(worst_pt, float(Tf[i] / bound))
        elif Tf[i] > 1e-14:
            worst_pt = math.inf
        # split at r = k1*(x, z): alpha z r + alpha int_r^inf lambda_1(x, s) ds
        r = float(prof(z)) if z <= prof.grid[-1] else 0.0
        lam_tail = _lambda_tail_integral(prof, r)
        recombined = alpha_bound * (z * r + lam_tail)
        split_res = max(split_res,
                        abs(recombined - bound) / max(bound, 1e-300))
    tf_prof = rearrangement(WeightedSamples(Tf, inst.nu))
    t_grid = _grids_from_profile(tf_prof)
    avg = step_partial_average(tf_prof, t_grid)
    c24 = weak_type_bound(inst) * inst.q / (inst.q - 1.0)
    rhs = c24 * alpha_bound * z ** (1.0 / inst.p) * t_grid ** (-1.0 / inst.q)
    worst_avg = float(np.max(avg / rhs)) if rhs.size else 0.0
    return ClaimResult(pointwise_ok=bool(worst_pt <= 1 + 1e-10),
                       average_ok=bool(worst_avg <= 1 + 1e-10),
                       worst_pointwise_ratio=worst_pt,
                       worst_average_ratio=worst_avg,
                       split_residual=float(split_res))


def _lambda_tail_integral(profile, r: float) -> float:
    """int_r^inf lambda(s) ds = int_0^inf (k*(u) - r)_+ du for step profiles."""
    edges, vals = _step_breaks(profile)
    w = np.diff(edges)
    return float(np.sum(w * np.clip(vals - r, 0.0, None)))
