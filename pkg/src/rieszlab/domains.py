"""Measurable-domain models and their growth functions.

A domain carries three capabilities used throughout the package:

* membership tests (vectorized), used for Monte-Carlo volume estimation;
* the local growth function Lambda(x, r) = |Omega cap B(x, r)|, closed form
  where available, otherwise stratified Monte-Carlo with a 95% half-width;
* canonical basepoints, the sample over which essential sups are taken.

On top of these sit the integral growth test that classifies a domain as
subcritical or critical, the Young-type bound sup_x int |x-y|^(alpha-n) dy,
the strict-inradius grid search with its complement-point selector, and the
two explicit lattice constructions (thinning clusters and h-spaced ball
lattices) with their growth-envelope checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geom

MC_SAMPLES_DEFAULT = 100_000
MC_STRATA = 16
GROWTH_FACTOR = 1.5
CONSECUTIVE_DOUBLINGS = 4


# ---------------------------------------------------------------------------
# domain variants


@dataclass(frozen=True)
class FullSpace:
    n: int

    def contains(self, pts):
        return np.ones(len(pts), dtype=bool)

    def canonical_basepoints(self):
        return [np.zeros(self.n)]


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def n(self):
        return len(self.center)

    def contains(self, pts):
        d = pts - np.asarray(self.center)
        return np.einsum("ij,ij->i", d, d) < self.radius ** 2

    def canonical_basepoints(self):
        return [np.asarray(self.center)]


@dataclass(frozen=True)
class Strip:
    """First k coordinates confined to bounded intervals, rest free."""

    n: int
    intervals: tuple  # ((a1,b1), ..., (ak,bk)) for coordinates 0..k-1

    def __post_init__(self):
        iv = tuple((float(a), float(b)) for a, b in self.intervals)
        if not iv or len(iv) >= self.n:
            raise ValueError("need 1 <= #intervals < n")
        if any(b <= a for a, b in iv):
            raise ValueError("intervals must be nondegenerate")
        object.__setattr__(self, "intervals", iv)

    @property
    def k(self):
        return len(self.intervals)

    def contains(self, pts):
        ok = np.ones(len(pts), dtype=bool)
        for j, (a, b) in enumerate(self.intervals):
            ok &= (pts[:, j] > a) & (pts[:, j] < b)
        return ok

    def canonical_basepoints(self):
        mid = np.zeros(self.n)
        for j, (a, b) in enumerate(self.intervals):
            mid[j] = 0.5 * (a + b)
        edge = mid.copy()
        edge[0] = self.intervals[0][0] + 1e-3 * (self.intervals[0][1] -
                                                 self.intervals[0][0])
        return [mid, edge]


@dataclass(frozen=True)
class BallLatticeComplement:
    """R^n minus closed balls of radius eps0 at the integer lattice."""

    n: int
    eps0: float

    def __post_init__(self):
        if not 0 < self.eps0 < 0.5:
            raise ValueError("need 0 < eps0 < 1/2")

    def contains(self, pts):
        frac = pts - np.round(pts)
        return np.einsum("ij,ij->i", frac, frac) > self.eps0 ** 2

    def canonical_basepoints(self):
        return [np.full(self.n, 0.5)]


@dataclass(frozen=True)
class BallClusterUnion:
    """Sparse clusters of tiny lattice balls (thinning at infinity).

    Cluster m is the union of balls B(k, eps_m) over integer points k within
    distance R_m of the on-axis center c_m * e1.  With radii shrinking fast
    enough the integral growth test stays bounded at every basepoint even
    though the maximal growth envelope diverges.
    """

    n: int
    centers: tuple      # c_m scalars (position on the first axis)
    radii: tuple        # R_m
    ball_radii: tuple   # eps_m
    m_max: int

    def __post_init__(self):
        eps = tuple(float(e) for e in self.ball_radii)
        if any(e >= 0.5 or e <= 0 for e in eps):
            raise ValueError("cluster ball radii must lie in (0, 1/2)")
        if not (len(self.centers) == len(self.radii) == len(eps) == self.m_max):
            raise ValueError("sequences must have length m_max")
        object.__setattr__(self, "centers", tuple(float(c) for c in self.centers))
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        object.__setattr__(self, "ball_radii", eps)

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        near = np.round(pts)
        frac = pts - near
        dist2 = np.einsum("ij,ij->i", frac, frac)
        ok = np.zeros(len(pts), dtype=bool)
        for c, R, e in zip(self.centers, self.radii, self.ball_radii):
            center = np.zeros(self.n)
            center[0] = c
            d = near - center
            inside_cluster = np.einsum("ij,ij->i", d, d) < R * R
            ok |= inside_cluster & (dist2 < e * e)
        return ok

    def canonical_basepoints(self):
        out = []
        for c in self.centers:
            x = np.zeros(self.n)
            x[0] = round(c)
            out.append(x)
        return out

    def supint_series_terms(self):
        """Terms eps_m^n log(R_m / R_{m-1}), the growth-envelope lower bound."""
        terms = []
        for m in range(1, self.m_max):
            terms.append(self.ball_radii[m] ** self.n *
                         math.log(self.radii[m] / self.radii[m - 1]))
        return np.asarray(terms)


def dominio_cluster(n: int = 2, m_max: int = 12, R_base: float = 4.0,
                    c_base: float = 100.0, eps_scale: float | None = None
                    ) -> BallClusterUnion:
    """The canonical thinning-cluster example: R_m = 4^m, c_m = 100^m and
    eps_m^n log R_m held constant (= 2^-n by default)."""
    if eps_scale is None:
        eps_scale = 2.0 ** (-n)
    ms = np.arange(1, m_max + 1)
    R = R_base ** ms
    c = c_base ** ms
    eps = (eps_scale / np.log(R)) ** (1.0 / n)
    return BallClusterUnion(n=n, centers=tuple(c), radii=tuple(R),
                            ball_radii=tuple(eps), m_max=m_max)


_H_REGISTRY = {
    "linear": (lambda x: x, lambda t: t),
    "square": (lambda x: x * x, lambda t: math.sqrt(max(t, 0.0))),
    "cubic": (lambda x: x ** 3, lambda t: max(t, 0.0) ** (1.0 / 3.0)),
    "expm1": (lambda x: math.expm1(x), lambda t: math.log1p(max(t, 0.0))),
}


@dataclass(frozen=True)
class LatticeBallUnion:
    """Union of balls B((h(m1),...,h(mn)), delta0) over m in Z_+^n."""

    n: int
    h_name: str
    delta0: float
    m_cut: int = 4096  # truncation of the index lattice per axis

    def __post_init__(self):
        if self.h_name not in _H_REGISTRY:
            raise ValueError(f"unknown h function {self.h_name!r}; "
                             f"choose from {sorted(_H_REGISTRY)}")
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        h, _ = _H_REGISTRY[self.h_name]
        if h(0) != 0:
            raise ValueError("h(0) must be 0")
        gaps = [h(m + 1) - h(m) for m in range(32)]
        if any(g2 < g1 - 1e-12 for g1, g2 in zip(gaps, gaps[1:])):
            raise ValueError("h(x+1)-h(x) must be nondecreasing")
        # the construction needs disjoint balls; the stronger 10*delta0
        # separation is recorded but not required by the growth checks
        if h(1) - h(0) < 2 * self.delta0:
            raise ValueError("delta0 too large: the balls overlap")

    @property
    def strictly_separated(self) -> bool:
        """True when even the 10*delta0 enlargements stay disjoint."""
        return self.h(1) - self.h(0) >= 20 * self.delta0

    @property
    def h(self):
        return _H_REGISTRY[self.h_name][0]

    @property
    def h_inv(self):
        return _H_REGISTRY[self.h_name][1]

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        ok = np.ones(len(pts), dtype=bool)
        h, h_inv = self.h, self.h_inv
        nearest = np.empty_like(pts)
        for j in range(self.n):
            col = pts[:, j]
            m_guess = np.array([max(0, geom.h_floor(h, t)) for t in col])
            cand = np.stack([np.array([h(int(m + d)) for m in m_guess])
                             for d in (0, 1)], axis=1)
            pick = np.argmin(np.abs(cand - col[:, None]), axis=1)
            nearest[:, j] = cand[np.arange(len(col)), pick]
        d = pts - nearest
        ok &= np.einsum("ij,ij->i", d, d) < self.delta0 ** 2
        ok &= np.all(pts >= -self.delta0, axis=1)
        return ok

    def canonical_basepoints(self):
        return [np.zeros(self.n)]


@dataclass(frozen=True)
class Product1D:
    """Product of n copies of a 1-d set A = (0,inf) minus periodic gap bursts.

    Inside each unit interval (k, k+1) the set loses 2^k - 1 equally spaced
    closed intervals of length delta_k < 2^-k.  delta_k is stored explicitly
    for k up to k_max; beyond that an optional remaining-mass law
    (A, gamma) -> min(1, A k^-gamma) extends the measure bookkeeping where
    the individual gap lengths underflow floats.
    """

    n: int
    deltas: tuple  # delta_k for k = 1..len(deltas); interval (0,1) is intact
    mass_law: tuple | None = None
    k_max: int = field(init=False, default=0)

    def __post_init__(self):
        d = tuple(float(x) for x in self.deltas)
        for k, dk in enumerate(d, start=1):
            if not 0 <= dk < 2.0 ** (-k):
                raise ValueError(f"delta_{k} must lie in [0, 2^-{k})")
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "k_max", len(d))
        if self.mass_law is not None:
            object.__setattr__(self, "mass_law",
                               (float(self.mass_law[0]),
                                float(self.mass_law[1])))

    def segment_mass(self, k: int) -> float:
        """Measure of A cap (k, k+1); cells beyond the stored profile follow
        the mass law when given and are intact otherwise."""
        if k < 1:
            return 1.0
        if k > self.k_max:
            if self.mass_law is not None:
                A, gamma = self.mass_law
                return min(1.0, A * float(k) ** (-gamma))
            return 1.0
        return 1.0 - (2 ** k - 1) * self.deltas[k - 1]

    def partial_mass(self, m: int) -> float:
        """S_m = sum_{k=0}^m of the per-interval masses."""
        return float(sum(self.segment_mass(k) for k in range(0, m + 1)))

    def _coord_in_A(self, y):
        y = np.asarray(y, dtype=float)
        ok = y > 0
        k = np.floor(y).astype(int)
        inside = ok & (k >= 1) & (k <= self.k_max)
        if np.any(inside):
            kk = k[inside]
            frac = y[inside] - kk
            spacing = 2.0 ** (-kk.astype(float))
            j = np.round(frac / spacing)
            dk = np.array([self.deltas[int(q) - 1] for q in kk])
            hit = (j >= 1) & (j <= 2 ** kk - 1) & \
                  (np.abs(frac - j * spacing) <= dk / 2)
            res = ok.copy()
            idx = np.where(inside)[0]
            res[idx[hit]] = False
            return res
        return ok

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        ok = np.ones(len(pts), dtype=bool)
        for j in range(self.n):
            ok &= self._coord_in_A(pts[:, j])
        return ok

    def axis_measure(self, lo: float, hi: float) -> float:
        """|A cap [lo, hi]|, exact; gap overlaps are counted arithmetically
        so whole cells cost O(1)."""
        lo = max(lo, 0.0)
        if hi <= lo:
            return 0.0
        total = 0.0
        k0, k1 = int(math.floor(lo)), int(math.ceil(hi))
        for k in range(k0, k1):
            a = max(lo, float(k))
            b = min(hi, float(k + 1))
            if b <= a:
                continue
            if a <= k and b >= k + 1:
                total += self.segment_mass(k)
                continue
            length = b - a
            if k > self.k_max:
                # uniform-density model for partial far cells (their gap
                # lengths underflow floats; the error is below one gap)
                total += length * self.segment_mass(k)
                continue
            if 1 <= k <= self.k_max:
                dk = self.deltas[k - 1]
                sp = 2.0 ** (-k)
                jmax = 2 ** k - 1
                if dk > 0:
                    # gaps centred at k + j*sp, half-width dk/2, j=1..jmax
                    jf_lo = max(1, int(math.ceil((a - k + dk / 2) / sp)))
                    jf_hi = min(jmax, int(math.floor((b - k - dk / 2) / sp)))
                    if jf_hi >= jf_lo:
                        length -= (jf_hi - jf_lo + 1) * dk
                    # at most one gap straddles each endpoint
                    for j in {int(math.floor((a - k + dk / 2) / sp)),
                              int(math.ceil((b - k - dk / 2) / sp))}:
                        if 1 <= j <= jmax and not jf_lo <= j <= jf_hi:
                            g_lo = k + j * sp - dk / 2
                            g_hi = k + j * sp + dk / 2
                            length -= max(0.0, min(b, g_hi) - max(a, g_lo))
            total += length
        return total

    def cube_growth(self, x, r: float) -> float:
        """|Omega cap Q(x, r)| for the cube of half-side r, exact.

        Cube growth is equivalent to ball growth for every integral test
        used here (the integrands compare up to fixed dimensional factors).
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        prod = 1.0
        for j in range(self.n):
            prod *= self.axis_measure(x[j] - r, x[j] + r)
            if prod == 0.0:
                return 0.0
        return prod

    def canonical_basepoints(self):
        return [np.full(self.n, 0.5)]


def product1d_from_power_law(n: int, A: float, gamma: float, k_max: int = 40
                             ) -> Product1D:
    """deltas chosen so the remaining mass in (k,k+1) tracks A*k^-gamma.

    Exact equality is infeasible for every k (delta_k < 2^-k forces the
    remaining mass above 2^-k), so delta_k is clipped into its admissible
    range; the asymptotic decay is unaffected.  Beyond k_max the measure
    bookkeeping follows the mass law directly.
    """
    deltas = []
    for k in range(1, k_max + 1):
        target = min(1.0, A * k ** (-gamma))
        dk = (1.0 - target) / (2 ** k - 1)
        dk = min(max(dk, 0.0), (1.0 - 1e-9) * 2.0 ** (-k))
        deltas.append(dk)
    return Product1D(n=n, deltas=tuple(deltas), mass_law=(A, gamma))


@dataclass(frozen=True)
class FiniteUnion:
    members: tuple

    def __post_init__(self):
        if not self.members:
            raise ValueError("need at least one member")
        ns = {m.n for m in self.members}
        if len(ns) != 1:
            raise ValueError("members must share the dimension")
        object.__setattr__(self, "members", tuple(self.members))

    @property
    def n(self):
        return self.members[0].n

    def contains(self, pts):
        ok = np.zeros(len(pts), dtype=bool)
        for m in self.members:
            ok |= m.contains(pts)
        return ok

    def canonical_basepoints(self):
        out = []
        for m in self.members:
            out.extend(m.canonical_basepoints())
        return out


DomainSpec = (FullSpace | Ball | Strip | BallLatticeComplement |
              BallClusterUnion | LatticeBallUnion | Product1D | FiniteUnion)


# ---------------------------------------------------------------------------
# serialization (JSON-compatible dicts)


def domain_to_dict(dom) -> dict:
    if isinstance(dom, FullSpace):
        return {"type": "full_space", "n": dom.n}
    if isinstance(dom, Ball):
        return {"type": "ball", "center": list(dom.center), "radius": dom.radius}
    if isinstance(dom, Strip):
        return {"type": "strip", "n": dom.n,
                "intervals": [list(iv) for iv in dom.intervals]}
    if isinstance(dom, BallLatticeComplement):
        return {"type": "ball_lattice_complement", "n": dom.n, "eps0": dom.eps0}
    if isinstance(dom, BallClusterUnion):
        return {"type": "ball_cluster_union", "n": dom.n,
                "centers": list(dom.centers), "radii": list(dom.radii),
                "ball_radii": list(dom.ball_radii), "m_max": dom.m_max}
    if isinstance(dom, LatticeBallUnion):
        return {"type": "lattice_ball_union", "n": dom.n, "h": dom.h_name,
                "delta0": dom.delta0}
    if isinstance(dom, Product1D):
        out = {"type": "product_1d", "n": dom.n, "deltas": list(dom.deltas)}
        if dom.mass_law is not None:
            out["mass_law"] = list(dom.mass_law)
        return out
    if isinstance(dom, FiniteUnion):
        return {"type": "finite_union",
                "members": [domain_to_dict(m) for m in dom.members]}
    raise TypeError(f"unknown domain {dom!r}")


def domain_from_dict(cfg: dict):
    kind = cfg.get("type")
    if kind == "full_space":
        return FullSpace(int(cfg["n"]))
    if kind == "ball":
        return Ball(tuple(cfg["center"]), float(cfg["radius"]))
    if kind == "strip":
        return Strip(int(cfg["n"]), tuple(tuple(iv) for iv in cfg["intervals"]))
    if kind == "ball_lattice_complement":
        return BallLatticeComplement(int(cfg["n"]), float(cfg["eps0"]))
    if kind == "ball_cluster_union":
        if "centers" in cfg:
            return BallClusterUnion(int(cfg["n"]), tuple(cfg["centers"]),
                                    tuple(cfg["radii"]), tuple(cfg["ball_radii"]),
                                    int(cfg["m_max"]))
        return dominio_cluster(int(cfg.get("n", 2)), int(cfg.get("m_max", 12)))
    if kind == "lattice_ball_union":
        return LatticeBallUnion(int(cfg["n"]), cfg["h"], float(cfg["delta0"]))
    if kind == "product_1d":
        if "deltas" in cfg:
            law = tuple(cfg["mass_law"]) if "mass_law" in cfg else None
            return Product1D(int(cfg["n"]), tuple(cfg["deltas"]),
                             mass_law=law)
        return product1d_from_power_law(int(cfg["n"]), float(cfg["A"]),
                                        float(cfg["gamma"]))
    if kind == "finite_union":
        return FiniteUnion(tuple(domain_from_dict(m) for m in cfg["members"]))
    raise ValueError(f"unknown domain type {kind!r} in config")


# ---------------------------------------------------------------------------
# local growth


def _mc_ball_volume_fraction(domain, x, r, samples, seed):
    """Stratified MC estimate of |Omega cap B(x,r)| with a 95% half-width."""
    n = len(x)
    rng_root = np.random.SeedSequence(entropy=seed)
    per = max(1, samples // MC_STRATA)
    vol = geom.ball_volume(n, r)
    means, varis = [], []
    for s, child in enumerate(rng_root.spawn(MC_STRATA)):
        rng = np.random.default_rng(child)
        u = rng.random(per)
        # radii filling the equal-volume shell [s/K, (s+1)/K] of the ball
        radii = r * ((s + u) / MC_STRATA) ** (1.0 / n)
        dirs = rng.standard_normal((per, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = x + radii[:, None] * dirs
        hits = domain.contains(pts).astype(float)
        means.append(hits.mean())
        varis.append(hits.var(ddof=1) / per if per > 1 else 0.25 / per)
    frac = float(np.mean(means))
    half = 1.96 * math.sqrt(float(np.sum(varis)) / MC_STRATA ** 2)
    return frac * vol, half * vol


def _chord_area_antiderivative(u, r):
    """Antiderivative of the disk chord 2 sqrt(r^2 - u^2)."""
    u = min(max(u, -r), r)
    return u * math.sqrt(max(r * r - u * u, 0.0)) + r * r * math.asin(u / r)


def _strip_growth(dom: Strip, x, r):
    """|Strip cap B(x,r)| by integrating slab cross-sections (exact)."""
    from scipy.integrate import quad

    k = dom.k
    nf = dom.n - k
    if k == 1:
        a, b = dom.intervals[0]
        lo, hi = max(a, x[0] - r), min(b, x[0] + r)
        if hi <= lo:
            return 0.0
        if dom.n == 2:
            return _chord_area_antiderivative(hi - x[0], r) - \
                _chord_area_antiderivative(lo - x[0], r)
        val, _ = quad(
            lambda t: geom.strip_section_volume(
                nf, math.sqrt(max(r * r - (t - x[0]) ** 2, 0.0))),
            lo, hi, limit=200, epsabs=0.0, epsrel=1e-10)
        return val
    if k == 2:
        (a1, b1), (a2, b2) = dom.intervals
        lo1, hi1 = max(a1, x[0] - r), min(b1, x[0] + r)
        if hi1 <= lo1:
            return 0.0

        def inner(t):
            rho2 = r * r - (t - x[0]) ** 2
            if rho2 <= 0:
                return 0.0
            rho = math.sqrt(rho2)
            lo2, hi2 = max(a2, x[1] - rho), min(b2, x[1] + rho)
            if hi2 <= lo2:
                return 0.0
            val, _ = quad(lambda s: geom.strip_section_volume(
                nf, math.sqrt(max(rho2 - (s - x[1]) ** 2, 0.0))), lo2, hi2,
                limit=200, epsabs=0.0, epsrel=1e-10)
            return val

        val, _ = quad(inner, lo1, hi1, limit=200)
        return val
    raise NotImplementedError("closed-form strip growth supports k <= 2")


def _cluster_growth(dom: BallClusterUnion, x, r):
    """Analytic growth for the thinning clusters (lattice count x ball volume).

    Exact row-sum counts are used while the intersection stays small; for the
    astronomically large radii of the far clusters the count is replaced by
    the lens area (unit lattice density), an O(perimeter) approximation.
    """
    if dom.n != 2:
        raise NotImplementedError("analytic cluster growth implemented for n=2")
    total = 0.0
    x = np.asarray(x, dtype=float)
    for c, R, e in zip(dom.centers, dom.radii, dom.ball_radii):
        center = np.array([c, 0.0])
        d = float(np.linalg.norm(x - center))
        if d >= R + r:
            continue
        if min(R, r) <= 1e4:
            cnt = geom.lattice_count_two_balls_2d(center, R, x, r)
        else:
            cnt = geom.ball_intersection_volume(2, d, R, r)
        total += cnt * geom.ball_volume(2, e)
    return total


def _lattice_union_growth(dom: LatticeBallUnion, x, r):
    cnt = geom.quadrant_lattice_count_ball(np.asarray(x)[:2] if dom.n == 2
                                           else x, r, dom.h, dom.h_inv)
    if dom.n != 2:
        raise NotImplementedError("analytic h-lattice growth implemented for n=2")
    return cnt * geom.ball_volume(dom.n, dom.delta0)


def local_growth(domain, x, r, samples: int = MC_SAMPLES_DEFAULT,
                 seed: int = 0, method: str = "auto", model: str = "ball"):
    """|Omega cap B(x, r)| with an uncertainty half-width.

    Closed forms are used for FullSpace, Ball and Strip (half-width 0), the
    lattice constructions use exact counting / lens areas, everything else
    falls back to stratified Monte-Carlo.  method="mc" forces Monte-Carlo.
    model="cube" measures the cube Q(x, r) instead (exact for product sets,
    equivalent for every integral growth test up to dimensional factors).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if r <= 0:
        raise ValueError("r must be positive")
    if method not in ("auto", "mc"):
        raise ValueError("method must be 'auto' or 'mc'")
    if model == "cube":
        if isinstance(domain, Product1D):
            return domain.cube_growth(x, r), 0.0
        raise NotImplementedError("cube growth is exposed for product sets")
    if method == "auto":
        if isinstance(domain, Product1D):
            # exact cube growth scaled to the inscribed/enclosing balls is
            # not available; Monte-Carlo handles moderate radii
            pass
        if isinstance(domain, FullSpace):
            return geom.ball_volume(domain.n, r), 0.0
        if isinstance(domain, Ball):
            d = float(np.linalg.norm(x - np.asarray(domain.center)))
            return geom.ball_intersection_volume(domain.n, d, domain.radius, r), 0.0
        if isinstance(domain, Strip):
            return _strip_growth(domain, x, r), 0.0
        if isinstance(domain, BallClusterUnion):
            return _cluster_growth(domain, x, r), 0.0
        if isinstance(domain, LatticeBallUnion):
            return _lattice_union_growth(domain, x, r), 0.0
    return _mc_ball_volume_fraction(domain, x, r, samples, seed)


@dataclass(frozen=True)
class GrowthProfile:
    basepoint: tuple
    radii: np.ndarray
    lambda_values: np.ndarray
    half_widths: np.ndarray
    model: str = "ball"

    def __post_init__(self):
        lv = np.asarray(self.lambda_values, dtype=float)
        n = len(self.basepoint)
        if self.model == "ball":
            bound = geom.ball_volume(n, 1.0) * np.asarray(self.radii) ** n
        else:
            bound = (2.0 * np.asarray(self.radii)) ** n
        if np.any(lv > bound * (1 + 1e-6) + np.asarray(self.half_widths) + 1e-12):
            raise ValueError("growth exceeds the full-cell volume")


def growth_profile(domain, x, radii, samples=MC_SAMPLES_DEFAULT, seed=0,
                   method="auto", model="ball") -> GrowthProfile:
    vals, hws = [], []
    for i, r in enumerate(radii):
        v, h = local_growth(domain, x, float(r), samples=samples,
                            seed=seed + 7919 * i, method=method, model=model)
        vals.append(v)
        hws.append(h)
    vals = np.maximum.accumulate(np.asarray(vals))  # iron out MC jitter
    return GrowthProfile(tuple(np.atleast_1d(x)), np.asarray(radii, dtype=float),
                         vals, np.asarray(hws), model=model)


# ---------------------------------------------------------------------------
# subcriticality


@dataclass(frozen=True)
class SubcriticalityReport:
    domain: object
    basepoints: tuple
    per_point: dict           # basepoint index -> final partial integral
    half_widths: dict
    sup_value: float
    verdict: str              # "Subcritical" | "Critical" | "Inconclusive"
    rate: float               # log-divergence slope (Critical only)
    growth_exponent: float    # fitted d log Lambda / d log r at the far end
    r_max: dict
    notes: tuple = ()


def _integral_on_log_grid(radii, lam, n):
    """Cumulative int_1^r Lambda(rho)/rho^(n+1) drho on the log grid."""
    u = np.log(radii)
    f = lam / radii ** n  # integrand wrt du
    cums = np.concatenate(([0.0], np.cumsum((f[1:] + f[:-1]) / 2 * np.diff(u))))
    return cums


def subcriticality_test(domain, basepoints=None, doublings: int = 13,
                        points_per_doubling: int = 8,
                        samples: int = MC_SAMPLES_DEFAULT, seed: int = 0,
                        method: str = "auto", r_start: float = 1.0,
                        extend_for_clusters: bool = True) -> SubcriticalityReport:
    """Integral growth test sup_x int_1^inf Lambda(x,r) / r^(n+1) dr.

    The upper limit runs through a doubling schedule; the verdict is
    Critical only when the per-doubling increments fail to decay for at
    least CONSECUTIVE_DOUBLINGS doublings (and exceed Monte-Carlo noise),
    Subcritical when they decay or vanish, Inconclusive when noise swamps
    the trend.  The essential sup is taken over the recorded basepoints.
    """
    n = domain.n
    if basepoints is None:
        basepoints = domain.canonical_basepoints()
    basepoints = [np.atleast_1d(np.asarray(b, dtype=float)) for b in basepoints]
    notes = []
    inside = [bool(domain.contains(np.asarray([b]))[0]) for b in basepoints]
    if not all(inside):
        notes.append("some basepoints lie outside the domain; the in-domain "
                     "sup controls them up to a dimensional factor 3^n")

    per_point, hw, rmax, rates, slopes = {}, {}, {}, {}, {}
    verdicts = []
    for i, b in enumerate(basepoints):
        dbl = doublings
        if extend_for_clusters and isinstance(domain, BallClusterUnion):
            # push past the radius of the cluster containing this basepoint
            dists = [abs(b[0] - c) for c in domain.centers]
            m = int(np.argmin(dists))
            dbl = max(doublings, int(math.ceil(math.log2(
                64.0 * domain.radii[m] / r_start))))
        radii = np.geomspace(r_start, r_start * 2.0 ** dbl,
                             dbl * points_per_doubling + 1)
        model = "cube" if isinstance(domain, Product1D) else "ball"
        prof = growth_profile(domain, b, radii, samples=samples,
                              seed=seed + 104729 * i, method=method,
                              model=model)
        cums = _integral_on_log_grid(radii, prof.lambda_values, n)
        # per-doubling increments
        idx = np.arange(0, dbl + 1) * points_per_doubling
        partial = cums[idx]
        increments = np.diff(partial)
        noise = float(np.mean(prof.half_widths / radii ** n)) * math.log(2.0)
        diverge, converged = _classify_increments(increments, noise)
        per_point[i] = float(partial[-1])
        hw[i] = noise * dbl
        rmax[i] = float(radii[-1])
        rates[i] = float(np.mean(increments[-CONSECUTIVE_DOUBLINGS:]) /
                         math.log(2.0))
        # fitted growth exponent of Lambda over the last decade
        tail = radii >= radii[-1] / 10
        lam_tail = np.maximum(prof.lambda_values[tail], 1e-300)
        slope = np.polyfit(np.log(radii[tail]), np.log(lam_tail), 1)[0]
        slopes[i] = float(slope)
        verdicts.append("Critical" if diverge
                        else ("Subcritical" if converged else "Inconclusive"))

    if "Critical" in verdicts:
        verdict = "Critical"
    elif "Inconclusive" in verdicts:
        verdict = "Inconclusive"
    else:
        verdict = "Subcritical"
    worst = max(per_point, key=per_point.get)
    return SubcriticalityReport(
        domain=domain, basepoints=tuple(tuple(b) for b in basepoints),
        per_point=per_point, half_widths=hw,
        sup_value=float(per_point[worst]), verdict=verdict,
        rate=float(rates[worst]), growth_exponent=float(slopes[worst]),
        r_max=rmax, notes=tuple(notes))


def _classify_increments(increments, noise):
    """(diverges, converged) under the shrink-by-1/GROWTH_FACTOR rule,
    judged on the trailing doublings only (early ramps before a saturation
    radius carry no information about the tail)."""
    inc = np.asarray(increments, dtype=float)
    atol = max(noise * 3.0, 1e-12 * max(inc.max(initial=0.0), 1e-300))
    window = inc[-(CONSECUTIVE_DOUBLINGS + 1):]
    diverges = bool(window.size > CONSECUTIVE_DOUBLINGS and
                    np.all(window[1:] > atol) and
                    np.all(window[1:] >= window[:-1] / GROWTH_FACTOR))
    tail = inc[-CONSECUTIVE_DOUBLINGS:]
    if bool(np.all(tail <= atol)):
        converged = True
    else:
        ratios = tail[1:] / np.maximum(tail[:-1], 1e-300)
        converged = bool(np.all(ratios <= 1.0 / GROWTH_FACTOR + 0.13)) \
            and not diverges
    return diverges, converged


def cluster_envelope_partial_sums(dom: BallClusterUnion) -> np.ndarray:
    """Partial sums of the maximal-growth-envelope series for the clusters.

    These are the lower-bound terms eps_m^n log(R_m/R_{m-1}) accumulated in
    m; with the canonical parameters they grow like 2^-n times the harmonic
    numbers, witnessing that the envelope integral diverges even though
    every per-basepoint integral stays bounded.
    """
    return np.cumsum(dom.supint_series_terms())


# ---------------------------------------------------------------------------
# Young-type bound


def young_bound(domain, alpha: float, basepoints=None, doublings: int = 14,
                points_per_doubling: int = 8, samples: int = MC_SAMPLES_DEFAULT,
                seed: int = 0, method: str = "auto", r_start: float = 1.0):
    """sup_x int_Omega |x-y|^(alpha-n) dy, or math.inf when divergent.

    Computed as (n - alpha) int_0^inf Lambda(x,r) r^(alpha-n-1) dr; the
    singular end r -> 0 is integrated with the full-ball bound
    Lambda <= |B_1| r^n (exact for interior basepoints).  Borderline decay
    is classified divergent, never finite.
    """
    n = domain.n
    if not 0 < alpha < n:
        raise ValueError("need 0 < alpha < n")
    if basepoints is None:
        basepoints = domain.canonical_basepoints()
    basepoints = [np.atleast_1d(np.asarray(b, dtype=float)) for b in basepoints]
    worst = -math.inf
    r_tiny = 1e-4 * r_start
    model = "cube" if isinstance(domain, Product1D) else "ball"
    for i, b in enumerate(basepoints):
        # below r_tiny use the full-ball bound Lambda <= |B_1| r^n exactly
        head = (n - alpha) * geom.ball_volume(n) * r_tiny ** alpha / alpha
        # inner region [r_tiny, r_start]: measured growth on a log grid
        n_in = int(math.log2(r_start / r_tiny) * 8) + 1
        radii_in = np.geomspace(r_tiny, r_start, n_in)
        prof_in = growth_profile(domain, b, radii_in, samples=samples,
                                 seed=seed + 32452843 * i, method=method,
                                 model=model)
        f_in = (n - alpha) * prof_in.lambda_values * radii_in ** (alpha - n - 1)
        head += geom.loglin_integral(radii_in, f_in)
        radii = np.geomspace(r_start, r_start * 2.0 ** doublings,
                             doublings * points_per_doubling + 1)
        prof = growth_profile(domain, b, radii, samples=samples,
                              seed=seed + 15485863 * i, method=method,
                              model=model)
        f = (n - alpha) * prof.lambda_values * radii ** (alpha - n - 1)
        u = np.log(radii)
        cums = np.concatenate(([0.0],
                               np.cumsum((f[1:] * radii[1:] + f[:-1] * radii[:-1])
                                         / 2 * np.diff(u))))
        idx = np.arange(0, doublings + 1) * points_per_doubling
        increments = np.diff(cums[idx])
        noise = float(np.mean(prof.half_widths * radii ** (alpha - n))) or 0.0
        atol = max(noise * 3.0, 1e-12 * max(increments.max(initial=0.0),
                                            1e-300))
        tail = increments[-CONSECUTIVE_DOUBLINGS:]
        if not np.all(tail <= atol):
            ratios = tail[1:] / np.maximum(tail[:-1], 1e-300)
            # exact exponent balance has ratio 1; anything at or near the
            # boundary is reported divergent, never finite
            if np.median(ratios) > 0.90:
                return math.inf
        worst = max(worst, head + float(cums[-1]))
    return worst


# ---------------------------------------------------------------------------
# strict inradius


@dataclass(frozen=True)
class InradiusWitness:
    R1: float
    eps1: float
    selector: object  # x -> x* with |x - x*| <= R1 and B(x*, eps1) c complement


def _complement_point(domain, a, eps):
    """A point x* with B(x*, eps) inside the complement, or None."""
    a = np.asarray(a, dtype=float)
    if isinstance(domain, BallLatticeComplement):
        if eps > domain.eps0:
            return None
        return np.round(a)
    if isinstance(domain, Strip):
        best, bestd = None, math.inf
        for j, (lo, hi) in enumerate(domain.intervals):
            for wall, sgn in ((lo, -1.0), (hi, 1.0)):
                x = a.copy()
                # deepest of: probe's own depth beyond the wall, or depth eps
                x[j] = min(a[j], wall - eps) if sgn < 0 else \
                    max(a[j], wall + eps)
                d = abs(a[j] - x[j])
                if d < bestd:
                    best, bestd = x, d
        return best
    if isinstance(domain, FiniteUnion):
        # complement of a union of balls: step away from every member
        if all(isinstance(m, Ball) for m in domain.members):
            far = max(np.linalg.norm(np.asarray(m.center) - a) + m.radius
                      for m in domain.members)
            direction = np.zeros_like(a)
            direction[0] = 1.0
            x = a + (far + eps) * direction
            ok = all(np.linalg.norm(x - np.asarray(m.center)) >= m.radius + eps
                     for m in domain.members)
            return x if ok else None
        return None
    if isinstance(domain, FullSpace):
        return None
    return None


def strict_inradius(domain, R_grid=None, eps_grid=None, probe_points=None,
                    seed: int = 0):
    """Grid estimate of the strict inradius with a usable witness.

    Scans R over R_grid (ascending) and eps over eps_grid (descending) until
    every probe ball B(a, R) traps a complement ball B(x*, eps) inside it;
    returns (rho_prime_estimate, InradiusWitness).  FullSpace (and any domain
    whose complement swallows no ball) yields math.inf and witness None.
    """
    n = domain.n
    if R_grid is None:
        R_grid = np.linspace(0.05, 8.0, 160)
    if eps_grid is None:
        eps_grid = np.geomspace(1e-3, 1.0, 25)[::-1]
    if probe_points is None:
        rng = np.random.default_rng(seed)
        probe_points = list(rng.uniform(-2.0, 2.0, size=(24, n)))
        if isinstance(domain, BallLatticeComplement):
            probe_points.append(np.full(n, 0.5))  # cell center, worst case
        if isinstance(domain, Strip):
            mid = np.zeros(n)
            for j, (a, b) in enumerate(domain.intervals):
                mid[j] = 0.5 * (a + b)
            probe_points.append(mid)

    R_grid = np.sort(np.asarray(R_grid, dtype=float))
    eps_grid = np.sort(np.asarray(eps_grid, dtype=float))[::-1]

    def smallest_feasible_R(eps):
        for R in R_grid:
            ok = True
            for a in probe_points:
                x_star = _complement_point(domain, a, eps)
                if x_star is None or \
                        np.linalg.norm(np.asarray(a) - x_star) + eps > R:
                    ok = False
                    break
            if ok:
                return float(R)
        return None

    rho_prime = math.inf
    witness = None
    for eps in eps_grid:
        R = smallest_feasible_R(float(eps))
        if R is None:
            continue
        rho_prime = min(rho_prime, R)
        if witness is None:  # largest complement radius wins the witness
            def selector(x, _dom=domain, _eps=float(eps)):
                return _complement_point(_dom, x, _eps)

            witness = InradiusWitness(R1=R, eps1=float(eps),
                                      selector=selector)
    return rho_prime, witness


@dataclass(frozen=True)
class AgmonCover:
    """Deterministic cover bookkeeping for inradius-normalized kernels.

    Cells are B(x_j*, 2 R1) minus the earlier balls, in a fixed enumeration;
    assign(x) returns the anchor point x_j* of the cell containing x.
    """

    domain: object
    witness: InradiusWitness

    def assign(self, x):
        x = np.asarray(x, dtype=float)
        dom = self.domain
        R2 = 2.0 * self.witness.R1
        if isinstance(dom, BallLatticeComplement):
            # enumerate lattice anchors by (sup-norm shell, lexicographic)
            w = int(math.ceil(R2)) + 1
            base = np.floor(x).astype(int)
            cands = []
            for off in np.ndindex(*(2 * w + 1,) * len(x)):
                k = base + np.asarray(off) - w
                if np.linalg.norm(x - k) < R2:
                    cands.append(tuple(int(v) for v in k))
            if not cands:
                raise ValueError("cover does not reach this point")
            key = min(cands, key=lambda k: (max(abs(v) for v in k), k))
            return np.asarray(key, dtype=float)
        x_star = self.witness.selector(x)
        if x_star is None:
            raise ValueError("no complement anchor for this point")
        return np.asarray(x_star, dtype=float)


# ---------------------------------------------------------------------------
# h-lattice growth envelope checks


@dataclass(frozen=True)
class LatticeGrowthReport:
    passed: bool
    c1: float
    c2: float
    c3: float
    r_grid: np.ndarray
    details: dict


def lattice_growth_bounds(dom: LatticeBallUnion, r_grid, sample_points=None,
                          seed: int = 0) -> LatticeGrowthReport:
    """Check the two-sided growth envelope of the h-spaced ball lattice.

    Fits the extremal constants in
        c1 (h^-1(r/sqrt(n)))^n <= Lambda(0,r) <= c2 (h^-1(r+1))^n
        Lambda(x,r) <= c3 Lambda(0, r sqrt(n))
    over the supplied radii and reports them together with their stability
    (ratio of the constants fitted on the two halves of the grid).
    """
    n = dom.n
    h, h_inv = dom.h, dom.h_inv
    r_grid = np.asarray(r_grid, dtype=float)
    r_min_valid = max(h(4) - dom.delta0, 1.0)
    if np.any(r_grid <= r_min_valid):
        raise ValueError(f"radii must exceed the validity threshold "
                         f"{r_min_valid:.3g}")
    origin = np.zeros(n)
    lam0 = np.array([local_growth(dom, origin, r)[0] for r in r_grid])
    lam0_s = np.array([local_growth(dom, origin, r * math.sqrt(n))[0]
                       for r in r_grid])
    lower = np.array([max(h_inv(r / math.sqrt(n)), 1e-12) ** n for r in r_grid])
    upper = np.array([max(h_inv(r + 1.0), 1e-12) ** n for r in r_grid])
    c1 = float(np.min(lam0 / lower))
    c2 = float(np.max(lam0 / upper))
    if sample_points is None:
        rng = np.random.default_rng(seed)
        ms = rng.integers(0, 6, size=(8, n))
        sample_points = [np.array([h(int(m)) for m in row]) for row in ms]
    ratios = []
    for x in sample_points:
        lamx = np.array([local_growth(dom, x, r)[0] for r in r_grid])
        ratios.append(np.max(lamx / np.maximum(lam0_s, 1e-300)))
    c3 = float(max(ratios))
    half = len(r_grid) // 2
    c1_a = float(np.min(lam0[:half] / lower[:half]))
    c1_b = float(np.min(lam0[half:] / lower[half:]))
    stable = (c1 > 0) and (c2 < math.inf) and \
        (max(c1_a, c1_b) / max(min(c1_a, c1_b), 1e-300) < 10.0)
    passed = bool(np.all(lam0 >= c1 * lower * (1 - 1e-9)) and
                  np.all(lam0 <= c2 * upper * (1 + 1e-9)) and stable)
    return LatticeGrowthReport(passed=passed, c1=c1, c2=c2, c3=c3,
                               r_grid=r_grid,
                               details={"c1_halves": (c1_a, c1_b)})
