"""Seeded Monte Carlo trials over both models and the normality and
scaling diagnostics applied to them."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.special import ndtr, ndtri

from .cech import GeomConfig, cech_statistics, sample_points, truncation_order
from .er import ERConfig, f_vector, morse_bounds, sample_er_graph, tilde_beta
from .homology import betti_numbers, euler_characteristic
from .rng import derive_seed
from .simplicial import build_clique_complex

WORKERS_ENV = "BETTICLT_WORKERS"


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed: int
    model: str
    statistics: dict = field(default_factory=dict)
    wall_time: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class ERTrial:
    """ER battery settings; ``homology=False`` keeps only face counts."""

    n: int
    p: float
    k: int = 1
    delta: float = 0.05
    homology: bool = True


@dataclass(frozen=True)
class CechTrial:
    n: int
    r: float
    d: int = 2
    k: int = 1
    delta: float = 0.05
    poissonized: bool = False
    m: int | None = None


def er_statistics(cfg: ERTrial, seed: int) -> dict:
    k = cfg.k
    g = sample_er_graph(ERConfig(cfg.n, cfg.p, k, cfg.delta, seed))
    f = f_vector(g)
    tb = tilde_beta(f, k)
    lo, hi = morse_bounds(f, k)
    chi = euler_characteristic(f.f)
    out = {
        "f_km1": f[k - 1], "f_k": f[k], "f_kp1": f[k + 1],
        "clique_number": len(f),
        "tilde_beta": tb, "chi": chi,
        "alt_identity_ok": int(tb == (-1) ** k * chi),
        "morse_lower": lo, "morse_upper": hi,
    }
    if cfg.homology:
        # one dimension above the clique number, so every Betti number is exact
        top = max(len(f), k + 1)
        betti = betti_numbers(build_clique_complex(g, top), top - 1)
        b = betti[k]
        others = sum((-1) ** i * x for i, x in enumerate(betti) if i != k)
        out.update({
            "beta_k": b,
            "beta_0": betti[0],
            "betti_other_alt": others,
            "betti_other_nonzero": sum(x for i, x in enumerate(betti) if i != k and i != 0)
            + max(betti[0] - 1, 0),
            "euler_ok": int(euler_characteristic(betti) == chi),
            "offset_ok": int(tb == b + (-1) ** k * others),
            "morse_ok": int(lo <= b <= hi),
            "equals_tilde": int(b == tb),
            "equals_tilde_offset": int(b == tb - (-1) ** k),
        })
    return out


def cech_trial_statistics(cfg: CechTrial, seed: int) -> dict:
    m = truncation_order(cfg.delta, cfg.d) if cfg.m is None else cfg.m
    geom = GeomConfig(cfg.n, cfg.r, cfg.d, cfg.k, cfg.delta, cfg.poissonized, seed)
    return cech_statistics(sample_points(geom), cfg.k, m)


def _one_trial(args) -> TrialRecord:
    config, master_seed, idx = args
    seed = derive_seed(master_seed, idx)
    start = time.perf_counter()
    try:
        if isinstance(config, ERTrial):
            model, st = "er", er_statistics(config, seed)
        elif isinstance(config, CechTrial):
            model, st = "cech", cech_trial_statistics(config, seed)
        else:
            raise TypeError(f"unsupported trial config {type(config).__name__}")
    except Exception as exc:
        raise RuntimeError(f"trial {idx} (seed {seed}) failed: {exc}") from exc
    return TrialRecord(idx, seed, model, st, time.perf_counter() - start)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_trials(config, trials: int, master_seed: int, workers: int | None = None
               ) -> list[TrialRecord]:
    """Run ``trials`` independent trials; records come back in index order.

    Results depend only on (config, master_seed); the worker count only
    changes speed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    workers = worker_count() if workers is None else workers
    jobs = [(config, master_seed, i) for i in range(trials)]
    if workers <= 1 or trials == 1:
        return [_one_trial(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(_one_trial, jobs, chunksize=max(1, trials // (8 * workers))))
    return sorted(records, key=lambda r: r.trial_index)


def column(records: Sequence[TrialRecord], name: str) -> np.ndarray:
    return np.asarray([r.statistics[name] for r in records], dtype=float)


# --- diagnostics -----------------------------------------------------------

@dataclass(frozen=True)
class SummaryStats:
    count: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    se_mean: float
    se_variance: float
    se_skewness: float
    se_kurtosis: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _from_power_sums(m, s1, s2, s3, s4):
    """Mean, unbiased variance, adjusted skewness G1 and excess kurtosis G2
    of samples of size ``m`` given their (centred) power sums."""
    mu = s1 / m
    m2 = s2 / m - mu ** 2
    m3 = s3 / m - 3 * mu * s2 / m + 2 * mu ** 3
    m4 = s4 / m - 4 * mu * s3 / m + 6 * mu ** 2 * s2 / m - 3 * mu ** 4
    var = m2 * m / (m - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = m2 > 1e-300
        g1 = np.where(pos, m3 / np.where(pos, m2, 1) ** 1.5, np.nan)
        g2 = np.where(pos, m4 / np.where(pos, m2, 1) ** 2 - 3, np.nan)
        skew = g1 * np.sqrt(m * (m - 1)) / (m - 2) if m > 2 else np.full_like(g1, np.nan)
        kurt = ((m + 1) * g2 + 6) * (m - 1) / ((m - 2) * (m - 3)) if m > 3 else np.full_like(g2, np.nan)
    return mu, var, skew, kurt


def _jackknife_se(leave_one_out: np.ndarray) -> float:
    n = len(leave_one_out)
    if n < 2 or not np.all(np.isfinite(leave_one_out)):
        return math.nan
    return float(math.sqrt((n - 1) / n * ((leave_one_out - leave_one_out.mean()) ** 2).sum()))


def summarize(values) -> SummaryStats:
    """Unbiased mean/variance, bias-corrected skewness and excess kurtosis,
    each with a leave-one-out jackknife standard error."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("summarize needs at least two values")
    y = x - x.mean()
    sums = [np.sum(y ** p) for p in (1, 2, 3, 4)]
    mean, var, skew, kurt = (float(v) for v in _from_power_sums(n, *(np.float64(s) for s in sums)))
    mean += float(x.mean())
    loo = _from_power_sums(n - 1, *(s - y ** p for p, s in zip((1, 2, 3, 4), sums))) if n > 2 else None
    if loo is None:
        se = [float(abs(x[1] - x[0])) / 2, math.nan, math.nan, math.nan]
    else:
        se = [_jackknife_se(v) for v in loo]
    if var <= 0:
        var = 0.0
        se[2] = se[3] = math.nan
    return SummaryStats(n, mean, var, skew, kurt, *se)


def standardize(values, center: float, scale: float) -> np.ndarray:
    if not scale > 0:
        raise ValueError("scale must be positive")
    return (np.asarray(values, dtype=float) - center) / scale


def empirical_standardize(values) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    return standardize(x, x.mean(), x.std(ddof=1))


def ks_normal(samples) -> float:
    """sup_t |F_n(t) - Φ(t)|, attained at the sample points."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("ks_normal needs samples")
    cdf = ndtr(x)
    i = np.arange(1, n + 1)
    return float(max((i / n - cdf).max(), (cdf - (i - 1) / n).max()))


def _phi_integral(t: np.ndarray) -> np.ndarray:
    """G(t) = ∫_{-∞}^t Φ(s) ds = t Φ(t) + φ(t)."""
    return t * ndtr(t) + stats.norm.pdf(t)


def normal_tail_mass(x) -> float:
    """∫ |F_n - Φ| over (-∞, min x) and (max x, ∞)."""
    x = np.asarray(x, dtype=float)
    lo, hi = x.min(), x.max()
    return float(_phi_integral(np.array(lo)) + stats.norm.pdf(hi) - hi * ndtr(-hi))


def wasserstein1_normal(samples) -> float:
    """∫ |F_n(t) - Φ(t)| dt, integrated exactly piece by piece."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("wasserstein1_normal needs samples")
    total = normal_tail_mass(x)
    if n > 1:
        a, b = x[:-1], x[1:]
        c = np.arange(1, n) / n
        # on [a, b] F_n = c; Φ crosses c at most once, at t*
        ts = np.clip(ndtri(c), a, b)
        ga, gb, gt = _phi_integral(a), _phi_integral(b), _phi_integral(ts)
        left = c * (ts - a) - (gt - ga)
        right = (gb - gt) - c * (b - ts)
        total += float(np.abs(left).sum() + np.abs(right).sum())
    return float(total)


def rate_regression(points) -> tuple[float, float, float]:
    """Least-squares line y = slope x + intercept and its r²."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise ValueError("need at least three (x, y) points")
    if len(np.unique(pts[:, 0])) != len(pts):
        raise ValueError("x values must be distinct")
    res = stats.linregress(pts[:, 0], pts[:, 1])
    r2 = res.rvalue ** 2 if np.ptp(pts[:, 1]) > 0 else 1.0
    return float(res.slope), float(res.intercept), float(r2)


def grouped_jackknife_se(values, statistic, groups: int = 50) -> float:
    """Delete-a-group jackknife standard error of ``statistic(values)``."""
    x = np.asarray(values, dtype=float)
    g = min(groups, len(x))
    parts = np.array_split(np.arange(len(x)), g)
    reps = np.array([statistic(np.delete(x, p)) for p in parts])
    return float(math.sqrt((g - 1) / g * ((reps - reps.mean()) ** 2).sum()))


def w1_standardized(values) -> float:
    return wasserstein1_normal(empirical_standardize(values))
