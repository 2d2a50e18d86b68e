"""Random Čech complexes: point sampling, the component decomposition of β_k,
truncation and tail bounds, μ-constant estimation, Mecke-formula self-tests
and de-Poissonization increments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.spatial import cKDTree

from .homology import betti_numbers
from .rng import trial_rng
from .simplicial import (
    RADIUS_TOL,
    PointCloud,
    SimplicialComplex,
    _DisjointSet,
    build_cech_complex,
    connected_components,
    geometric_edges,
)


@dataclass(frozen=True)
class DensitySpec:
    d: int
    kind: str = "uniform-unit-cube"
    supremum: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.kind != "uniform-unit-cube":
            raise ValueError(f"unsupported density {self.kind!r}")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        size = (size,) if isinstance(size, int) else tuple(size)
        return rng.random(size + (self.d,))


@dataclass(frozen=True)
class GeomConfig:
    n: int
    r: float
    d: int = 2
    k: int = 1
    delta: float = 0.05
    poissonized: bool = False
    seed: int = 0
    density: DensitySpec | None = None

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if not self.r >= 0:
            raise ValueError("r must be nonnegative")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.density is None:
            object.__setattr__(self, "density", DensitySpec(self.d))
        elif self.density.d != self.d:
            raise ValueError("density dimension does not match d")


@dataclass(frozen=True)
class ComponentDecomposition:
    """S_k, the table X[(i, j)] of components on i vertices with β_k = j, and
    their total.  Entries with i = k+2 are included, so S_k = X[(k+2, 1)]."""

    k: int
    S_k: int
    X: dict[tuple[int, int], int] = field(default_factory=dict)
    beta_k_total: int = 0
    n_components: int = 0
    largest: int = 0

    def tail_above(self, m: int) -> int:
        return sum(j * c for (i, j), c in self.X.items() if i > m)

    def digest(self) -> str:
        return ";".join(f"{i}:{j}:{c}" for (i, j), c in sorted(self.X.items()))


@dataclass(frozen=True)
class MuEstimate:
    i: int
    j: int
    k: int
    d: int
    r_used: float
    trials: int
    mu_hat: float
    std_err: float
    successes: int = 0
    degenerate: bool = False


def sample_points(config: GeomConfig, rng: np.random.Generator | None = None) -> PointCloud:
    """n i.i.d. points, or N ~ Poisson(n) of them in Poissonized mode."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    count = int(rng.poisson(config.n)) if config.poissonized else config.n
    return PointCloud(config.density.sample(rng, count), config.r)


def component_decomposition(cplx: SimplicialComplex, k: int) -> ComponentDecomposition:
    if cplx.max_dim < k + 1:
        raise ValueError(f"complex must be stored to dimension {k + 1}")
    table: dict[tuple[int, int], int] = {}
    comps = connected_components(cplx)
    largest = 0
    for comp in comps:
        size = len(comp.simplices[0])
        largest = max(largest, size)
        # fewer than k+2 vertices cannot carry a k-cycle
        if size < k + 2:
            continue
        b = betti_numbers(comp, k)[k]
        if b:
            table[(size, b)] = table.get((size, b), 0) + 1
    s_k = table.get((k + 2, 1), 0)
    total = s_k + sum(j * c for (i, j), c in table.items() if i > k + 2)
    return ComponentDecomposition(k, s_k, dict(sorted(table.items())), total, len(comps), largest)


def truncated_beta(decomp: ComponentDecomposition, k: int, m: int) -> int:
    """S_k + Σ_{i=k+3..m} Σ_j j X[i, j]; equals S_k when m < k+3."""
    return decomp.S_k + sum(j * c for (i, j), c in decomp.X.items() if k + 3 <= i <= m)


def _exact(x) -> Fraction:
    return Fraction(repr(x)) if isinstance(x, float) else Fraction(x)


def truncation_order(delta: float, d: int) -> int:
    """⌊1 + 1/(δ d)⌋, evaluated on the decimal value of δ."""
    if not delta > 0 or d < 1:
        raise ValueError("need delta > 0 and d >= 1")
    return math.floor(1 + 1 / (_exact(delta) * d))


def tail_split_order(delta: float, d: int) -> int:
    """⌈2/(d δ) + 1⌉."""
    if not delta > 0 or d < 1:
        raise ValueError("need delta > 0 and d >= 1")
    return math.ceil(2 / (d * _exact(delta)) + 1)


def tail_contribution_bound(n: float, r: float, d: int, i: int, k: int, f_sup: float = 1.0) -> float:
    """(n^i / i!) i^(i-2) (f_sup r^d)^(i-1) C(i, k+1), evaluated in log space."""
    if i < k + 3:
        raise ValueError("bound applies to components with i >= k+3 vertices")
    if r == 0 or n == 0:
        return 0.0
    log = (i * math.log(n) - math.lgamma(i + 1) + (i - 2) * math.log(i)
           + (i - 1) * (math.log(f_sup) + d * math.log(r)) + math.log(math.comb(i, k + 1)))
    return math.exp(log)


def _connected_mask(pts: np.ndarray, r: float) -> np.ndarray:
    """Which batches of points (B, i, d) have a connected distance-<=2r graph."""
    diff = pts[:, :, None, :] - pts[:, None, :, :]
    adj = np.sqrt((diff ** 2).sum(-1)) / 2 <= r + RADIUS_TOL
    reach = adj.astype(np.int64)
    for _ in range(max(1, math.ceil(math.log2(max(pts.shape[1], 2))))):
        reach = ((reach @ reach) > 0).astype(np.int64)
    return reach.all(axis=(1, 2))


def _empty_triangle_mask(pts: np.ndarray, r: float) -> np.ndarray:
    """Which triples (B, 3, d) span the boundary of a 2-simplex: all three
    edges present, minimal enclosing ball wider than r."""
    u = pts[:, 1] - pts[:, 0]
    v = pts[:, 2] - pts[:, 0]
    w = pts[:, 2] - pts[:, 1]
    sq = np.stack([(u * u).sum(-1), (v * v).sum(-1), (w * w).sum(-1)], axis=1)
    sides = np.sqrt(sq)
    edges_ok = (sides / 2 <= r + RADIUS_TOL).all(axis=1)
    sq_sorted = np.sort(sq, axis=1)
    obtuse = sq_sorted[:, 2] >= sq_sorted[:, 0] + sq_sorted[:, 1]
    gram = sq[:, 0] * sq[:, 1] - ((u * v).sum(-1)) ** 2
    area = 0.5 * np.sqrt(np.maximum(gram, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        circum = np.where(area > 0, sides.prod(axis=1) / (4 * area), np.inf)
    radius = np.where(obtuse, np.sqrt(sq_sorted[:, 2]) / 2, circum)
    return edges_ok & (radius > r + RADIUS_TOL)


def estimate_mu(i: int, j: int, k: int, d: int, density: DensitySpec | None, r: float,
                trials: int, seed: int, batch: int = 200_000) -> MuEstimate:
    """r^(-d(i-1)) times the fraction of trials where i i.i.d. points span a
    connected Čech complex with β_k = j."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if not r > 0:
        raise ValueError("r must be positive")
    density = density or DensitySpec(d)
    scale = r ** (-d * (i - 1))
    hits = 0
    if j <= math.comb(i, k + 1) and i >= k + 2 and j >= 0:
        rng = np.random.default_rng(seed)
        done = 0
        while done < trials:
            b = min(batch, trials - done)
            pts = density.sample(rng, (b, i))
            if k == 1 and i == 3:
                # the only 1-cycle on three vertices is the empty triangle
                if j == 1:
                    hits += int(_empty_triangle_mask(pts, r).sum())
                done += b
                continue
            for idx in np.flatnonzero(_connected_mask(pts, r)):
                cplx = build_cech_complex(PointCloud(pts[idx], r), k + 1)
                if betti_numbers(cplx, k)[k] == j:
                    hits += 1
            done += b
    frac = hits / trials
    # zero or full success would give a zero binomial error; clamp by one trial
    pf = min(max(frac, 1 / trials), 1 - 1 / trials) if trials > 1 else frac
    se = scale * math.sqrt(pf * (1 - pf) / trials)
    return MuEstimate(i, j, k, d, r, trials, scale * frac, se, hits, hits == 0)


def cech_statistics(cloud: PointCloud, k: int, m: int, max_dim: int | None = None) -> dict:
    """Per-sample statistics: β_k (global and via the component table),
    S_k, truncated β_k and the highest Betti number in degrees >= d."""
    d = cloud.d
    top = max(k, d) if max_dim is None else max_dim
    cplx = build_cech_complex(cloud, top + 1)
    betti = betti_numbers(cplx, top)
    dec = component_decomposition(cplx, k)
    trunc = truncated_beta(dec, k, m)
    cap_ok = all(j <= math.comb(i, k + 1) for (i, j) in dec.X)
    return {
        "n_points": len(cloud),
        "beta_k": betti[k],
        "beta_k_components": dec.beta_k_total,
        "S_k": dec.S_k,
        "truncated_beta": trunc,
        "tail": dec.beta_k_total - trunc,
        "components": dec.n_components,
        "largest_component": dec.largest,
        "nerve_max": max(betti[d:], default=0),
        "decomposition_ok": int(betti[k] == dec.beta_k_total),
        "cap_ok": int(cap_ok),
        "x_digest": dec.digest(),
    }


@dataclass(frozen=True)
class ScalingResult:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    mean_S: float
    mu: MuEstimate
    S_values: tuple[int, ...] = field(repr=False, default=())

    @property
    def combined_se(self) -> float:
        return math.hypot(self.lhs_se, self.rhs_se)


def s_k_count(cloud: PointCloud, k: int) -> int:
    """Number of components on exactly k+2 vertices with β_k = 1."""
    pts = cloud.points
    edges = geometric_edges(pts, cloud.radius)
    ds = _DisjointSet(range(len(pts)))
    for u, v in edges:
        ds.union(int(u), int(v))
    groups: dict[int, list[int]] = {}
    for v in range(len(pts)):
        groups.setdefault(ds.find(v), []).append(v)
    count = 0
    for g in groups.values():
        if len(g) != k + 2:
            continue
        cplx = build_cech_complex(PointCloud(pts[g], cloud.radius), k + 1)
        count += betti_numbers(cplx, k)[k] == 1
    return count


def poisson_mean_scaling(config: GeomConfig, trials: int, mu: MuEstimate | None = None,
                         mu_r: float = 0.05, mu_trials: int = 1_000_000) -> ScalingResult:
    """Compare n^-(k+2) r^-(d(k+1)) E[S_k] with μ_{k+2,1}/(k+2)!.

    μ is estimated at its own radius ``mu_r`` unless supplied.
    """
    if not config.poissonized:
        raise ValueError("poisson_mean_scaling needs a Poissonized config")
    if not config.r > 0:
        raise ValueError("r must be positive")
    if trials < 2:
        raise ValueError("need at least two trials")
    k, d = config.k, config.d
    s_vals = [s_k_count(sample_points(config, trial_rng(config.seed, t)), k)
              for t in range(trials)]
    arr = np.asarray(s_vals, dtype=float)
    norm = config.n ** -(k + 2) * config.r ** -(d * (k + 1))
    if mu is None:
        mu = estimate_mu(k + 2, 1, k, d, config.density, mu_r, mu_trials, config.seed + 1)
    fact = math.factorial(k + 2)
    return ScalingResult(
        lhs=norm * arr.mean(),
        rhs=mu.mu_hat / fact,
        lhs_se=norm * arr.std(ddof=1) / math.sqrt(trials),
        rhs_se=mu.std_err / fact,
        mean_S=float(arr.mean()),
        mu=mu,
        S_values=tuple(s_vals),
    )


@dataclass(frozen=True)
class HSpec:
    """Built-in functionals h(Y, P) on j-subsets.

    ``zero``: h = 0.  ``count``: h = 1.  ``isolated``: Y is exactly a connected
    component of the Čech complex of P at radius ``r``.
    """

    kind: str
    r: float = 0.05
    d: int = 2

    def __post_init__(self):
        if self.kind not in ("zero", "count", "isolated"):
            raise ValueError(f"unknown h spec {self.kind!r}")


def _component_sizes(pts: np.ndarray, r: float) -> tuple[np.ndarray, list[int]]:
    ds = _DisjointSet(range(len(pts)))
    for u, v in geometric_edges(pts, r):
        ds.union(int(u), int(v))
    roots = np.array([ds.find(v) for v in range(len(pts))], dtype=np.int64)
    _, inv, counts = np.unique(roots, return_inverse=True, return_counts=True)
    return inv, counts.tolist()


def _h_sum(h: HSpec, pts: np.ndarray, j: int) -> float:
    """Σ over j-subsets Y of the process of h(Y, P)."""
    if h.kind == "zero":
        return 0.0
    if h.kind == "count":
        return float(math.comb(len(pts), j))
    if len(pts) == 0:
        return 0.0
    _, counts = _component_sizes(pts, h.r)
    return float(sum(1 for c in counts if c == j))


def _h_at(h: HSpec, pts: np.ndarray, j: int) -> float:
    """h(X_j, X_j ∪ P) where X_j are the first j rows of ``pts``."""
    if h.kind == "zero":
        return 0.0
    if h.kind == "count":
        return 1.0
    inv, counts = _component_sizes(pts, h.r)
    labels = set(inv[:j].tolist())
    return float(len(labels) == 1 and counts[inv[0]] == j)


@dataclass(frozen=True)
class MeckeResult:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    lhs_samples: np.ndarray = field(repr=False, default=None)
    rhs_samples: np.ndarray = field(repr=False, default=None)

    @property
    def combined_se(self) -> float:
        return math.hypot(self.lhs_se, self.rhs_se)


def mecke_selftest(lam: float, j: int, h_spec: HSpec, trials: int, seed: int) -> MeckeResult:
    """Two independent estimates of E Σ_{Y ⊆ P} h(Y, P): directly on the
    process, and as (λ^j / j!) E h(X_j, X_j ∪ P)."""
    if trials < 2:
        raise ValueError("need at least two trials")
    density = DensitySpec(h_spec.d)
    lhs = np.empty(trials)
    rhs = np.empty(trials)
    for t in range(trials):
        # two independent streams per trial: one per side of the identity
        rng_l, rng_r = (np.random.default_rng(c) for c in trial_rng(seed, t).bit_generator.seed_seq.spawn(2))
        proc = density.sample(rng_l, int(rng_l.poisson(lam)))
        lhs[t] = _h_sum(h_spec, proc, j)
        extra = density.sample(rng_r, j)
        proc = density.sample(rng_r, int(rng_r.poisson(lam)))
        rhs[t] = _h_at(h_spec, np.vstack([extra, proc]), j)
    factor = lam ** j / math.factorial(j)
    return MeckeResult(
        lhs=float(lhs.mean()),
        rhs=factor * float(rhs.mean()),
        lhs_se=float(lhs.std(ddof=1)) / math.sqrt(trials),
        rhs_se=factor * float(rhs.std(ddof=1)) / math.sqrt(trials),
        lhs_samples=lhs,
        rhs_samples=factor * rhs,
    )


def h_prefactor(n: float, r: float, d: int, k: int) -> float:
    return (n * r ** d) ** (-(k + 1) / 2)


def h_functional(cloud, n: float, r: float, k: int, m: int) -> float:
    """(n r^d)^(-(k+1)/2) times the truncated β_k of the cloud's Čech complex."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if len(pts) == 0 or r == 0:
        return 0.0
    cloud = PointCloud(pts, r)
    dec = component_decomposition(build_cech_complex(cloud, k + 1), k)
    return h_prefactor(n, r, cloud.d, k) * truncated_beta(dec, k, m)


def _contribution(pts: np.ndarray, r: float, k: int, m: int) -> int:
    """Truncated-sum contribution of a connected vertex set."""
    if not k + 2 <= len(pts) <= m:
        return 0
    return betti_numbers(build_cech_complex(PointCloud(pts, r), k + 1), k)[k]


def increment(points: np.ndarray, tree: cKDTree, q: int, r: float, k: int, m: int) -> int:
    """D = (truncated β_k of X_{q+1}) - (that of X_q), where X_q holds the
    first q rows of ``points`` and row q is the added point.

    Only the added point's component changes, so D is computed there.
    """
    reach = 2 * r + 2 * RADIUS_TOL
    seen = {q}
    todo = [q]
    while todo:
        v = todo.pop()
        for w in tree.query_ball_point(points[v], reach):
            if w <= q and w not in seen:
                if np.linalg.norm(points[v] - points[w]) / 2 <= r + RADIUS_TOL:
                    seen.add(w)
                    todo.append(w)
    if len(seen) < k + 2:
        return 0
    comp = sorted(seen)
    local = points[comp]
    after = _contribution(local, r, k, m)
    pos = comp.index(q)
    rest = [idx for idx in range(len(comp)) if idx != pos]
    ds = _DisjointSet(rest)
    for u, v in geometric_edges(local, r):
        if u != pos and v != pos:
            ds.union(int(u), int(v))
    groups: dict[int, list[int]] = {}
    for v in rest:
        groups.setdefault(ds.find(v), []).append(v)
    before = sum(_contribution(local[g], r, k, m) for g in groups.values())
    return after - before


def increment_bound(n: float, r: float, d: int, k: int, m: int, gamma: float, f_sup: float = 1.0) -> float:
    """C(m, k+1) ((n + n^γ) f_sup r^d)^(k+1) / sqrt((n r^d)^(k+1)), the cap on |E R_{q,n}|."""
    if r == 0:
        return 0.0
    return math.comb(m, k + 1) * ((n + n ** gamma) * f_sup * r ** d) ** (k + 1) / math.sqrt(
        (n * r ** d) ** (k + 1))


@dataclass(frozen=True)
class IncrementStats:
    n: int
    gamma: float
    m: int
    qs: tuple[int, ...]
    mean_R: tuple[float, ...]
    se_R: tuple[float, ...]
    mean_RR: dict[tuple[int, int], float]
    se_RR: dict[tuple[int, int], float]
    mean_R2_sqrt_n: tuple[float, ...]
    se_R2_sqrt_n: tuple[float, ...]
    bound: float
    samples: np.ndarray = field(repr=False)


def increment_stats(config: GeomConfig, gamma: float, q_offsets, trials: int,
                    m: int | None = None) -> IncrementStats:
    """Estimate E[R_q], E[R_q R_q'] and E[R_q^2]/sqrt(n) for q = n + offset,
    where R_q = H(X_{q+1}) - H(X_q) on one nested point stream per trial."""
    if not 0.5 < gamma <= 1:
        raise ValueError("gamma must lie in (1/2, 1]")
    if trials < 2:
        raise ValueError("need at least two trials")
    n, k, d = config.n, config.k, config.d
    width = n ** gamma
    qs = tuple(n + int(o) for o in q_offsets)
    if not qs or any(abs(q - n) > width or q < 0 for q in qs):
        raise ValueError(f"offsets must lie within ±n^gamma = ±{width:.3f}")
    m = truncation_order(config.delta, d) if m is None else m
    r = config.r
    samples = np.zeros((trials, len(qs)))
    if r == 0:
        # no edges: every component is a single point and H vanishes
        active = range(0)
    else:
        pref = h_prefactor(n, r, d, k)
        active = range(trials)
    for t in active:
        rng = trial_rng(config.seed, t)
        pts = config.density.sample(rng, max(qs) + 1)
        tree = cKDTree(pts)
        for col, q in enumerate(qs):
            samples[t, col] = pref * increment(pts, tree, q, r, k, m)
    root_t = math.sqrt(trials)
    mean_rr, se_rr = {}, {}
    for a, b in combinations(range(len(qs)), 2):
        prod = samples[:, a] * samples[:, b]
        mean_rr[(qs[a], qs[b])] = float(prod.mean())
        se_rr[(qs[a], qs[b])] = float(prod.std(ddof=1)) / root_t
    sq = samples ** 2 / math.sqrt(n)
    return IncrementStats(
        n=n, gamma=gamma, m=m, qs=qs,
        mean_R=tuple(samples.mean(axis=0).tolist()),
        se_R=tuple((samples.std(axis=0, ddof=1) / root_t).tolist()),
        mean_RR=mean_rr, se_RR=se_rr,
        mean_R2_sqrt_n=tuple(sq.mean(axis=0).tolist()),
        se_R2_sqrt_n=tuple((sq.std(axis=0, ddof=1) / root_t).tolist()),
        bound=increment_bound(n, r, d, k, m, gamma, config.density.supremum),
        samples=samples,
    )
