"""Erdős–Rényi clique complexes: sampling, face counts, the alternating
surrogate for β_k, and closed-form face-count moments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import numpy as np

from .simplicial import Graph, _bits

Number = int | float | Fraction

VAR_N_CAP = 100_000
DEFAULT_CLIQUE_CAP = 64


@dataclass(frozen=True)
class ERConfig:
    n: int
    p: float
    k: int = 1
    delta: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        # p = 0 and p = 1 are allowed so degenerate graphs can be sampled.
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.delta > 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class FVector:
    f: tuple[int, ...]

    def __getitem__(self, i: int) -> int:
        return self.f[i] if 0 <= i < len(self.f) else 0

    def __len__(self) -> int:
        return len(self.f)

    def __iter__(self):
        return iter(self.f)


@dataclass(frozen=True)
class MomentResult:
    value: float | Fraction
    mode: Literal["exact", "asymptotic-order"]
    symbol: str

    def __float__(self) -> float:
        return float(self.value)


@lru_cache(maxsize=16)
def _pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu, ju = np.triu_indices(n, 1)
    return iu, ju


def sample_er_graph(config: ERConfig) -> Graph:
    """Each of the C(n, 2) edges independently with probability p."""
    n = config.n
    rng = np.random.default_rng(config.seed)
    iu, ju = _pair_index(n)
    keep = rng.random(len(iu)) < config.p
    rows = [0] * n
    for u, v in zip(iu[keep].tolist(), ju[keep].tolist()):
        rows[u] |= 1 << v
        rows[v] |= 1 << u
    return Graph(n, tuple(rows))


def f_vector(graph: Graph, cap: int = DEFAULT_CLIQUE_CAP) -> FVector:
    """Exact clique counts by ordered extension over adjacency bitsets.

    Cliques are counted, never stored.  A clique larger than ``cap`` raises
    rather than being truncated.
    """
    counts = [graph.n]
    up = graph.upper_rows()
    stack = [(cand, 1) for cand in up if cand]
    while stack:
        cand, size = stack.pop()
        # every vertex of cand closes a clique of size + 1
        if size + 1 > cap:
            raise ValueError(f"clique of size {size + 1} exceeds cap {cap}")
        if len(counts) <= size:
            counts.append(0)
        counts[size] += cand.bit_count()
        for w in _bits(cand):
            nxt = cand & up[w]
            if nxt:
                stack.append((nxt, size + 1))
    return FVector(tuple(counts) if graph.n else ())


def tilde_beta(f: FVector | tuple, k: int) -> int:
    """f_k - f_{k+1} - f_{k-1} + f_{k+2} + f_{k-2} - ... ; missing entries are 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    f = f if isinstance(f, FVector) else FVector(tuple(f))
    up = sum((-1) ** j * f[k + j] for j in range(len(f) - k)) if len(f) > k else 0
    down = sum((-1) ** j * f[k - j] for j in range(1, k + 1))
    return up + down


def morse_bounds(f: FVector | tuple, k: int) -> tuple[int, int]:
    if k < 1:
        raise ValueError("k must be >= 1")
    f = f if isinstance(f, FVector) else FVector(tuple(f))
    return f[k] - f[k + 1] - f[k - 1], f[k]


# --- moments ---------------------------------------------------------------

def _is_exact(p) -> bool:
    return isinstance(p, (Fraction, int)) and not isinstance(p, bool)


def _check_p(p):
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")


def _log_comb(n: int, r: int) -> float:
    if r < 0 or r > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)


def _c2(x: int) -> int:
    return x * (x - 1) // 2


def mean_f(n: int, p: Number, dim: int) -> MomentResult:
    """E[f_dim] = C(n, dim+1) p^C(dim+1, 2)."""
    _check_p(p)
    s = dim + 1
    if _is_exact(p):
        return MomentResult(Fraction(math.comb(n, s)) * Fraction(p) ** _c2(s), "exact", f"E[f_{dim}]")
    if s > n:
        return MomentResult(0.0, "exact", f"E[f_{dim}]")
    if p == 0:
        return MomentResult(float(math.comb(n, s)) if _c2(s) == 0 else 0.0, "exact", f"E[f_{dim}]")
    try:
        val = float(math.comb(n, s)) * p ** _c2(s)
    except OverflowError:
        val = 0.0
    if not 0 < val < math.inf:
        val = math.exp(_log_comb(n, s) + _c2(s) * math.log(p))
    return MomentResult(val, "exact", f"E[f_{dim}]")


def _cov_exact(n: int, p: Fraction, s: int, t: int) -> Fraction:
    if p == 0 or s > n:
        return Fraction(0)
    total = Fraction(0)
    for r in range(2, t + 1):
        total += math.comb(s, r) * math.comb(n - s, t - r) * (p ** -_c2(r) - 1)
    return math.comb(n, s) * p ** (_c2(s) + _c2(t)) * total


def _log_cov(n: int, p: float, s: int, t: int) -> float:
    """log Cov(f_{s-1}, f_{t-1}) for s >= t; every summand is nonnegative."""
    if t < 2 or s > n or p <= 0 or p >= 1:
        return -math.inf
    lp = math.log(p)
    terms = []
    for r in range(2, t + 1):
        lc = _log_comb(s, r) + _log_comb(n - s, t - r)
        if lc == -math.inf:
            continue
        terms.append(lc + math.log(math.expm1(-_c2(r) * lp)))
    if not terms:
        return -math.inf
    top = max(terms)
    lse = top + math.log(math.fsum(math.exp(x - top) for x in terms))
    return _log_comb(n, s) + (_c2(s) + _c2(t)) * lp + lse


def cov_f(n: int, p: Number, a: int, b: int) -> MomentResult:
    """Cov(f_a, f_b) via the shared-vertex expansion.

    With s = a+1 >= t = b+1:
    C(n,s) p^(C(s,2)+C(t,2)) Σ_{r=2..t} C(s,r) C(n-s,t-r) (p^-C(r,2) - 1).
    Exact for rational p, log-space floats otherwise.
    """
    _check_p(p)
    s, t = max(a, b) + 1, min(a, b) + 1
    sym = f"Cov(f_{a},f_{b})"
    if _is_exact(p):
        return MomentResult(_cov_exact(n, Fraction(p), s, t), "exact", sym)
    if p == 1:
        return MomentResult(0.0, "exact", sym)
    lv = _log_cov(n, float(p), s, t)
    return MomentResult(0.0 if lv == -math.inf else math.exp(lv), "exact", sym)


def _sign(a: int, k: int) -> int:
    return -1 if (a - k) % 2 else 1


def exact_var_tilde_beta(n: int, p: Number, k: int) -> MomentResult:
    """Var(β̃_k) = Σ_{a,b} s_a s_b Cov(f_a, f_b), s_a = (-1)^(a-k).

    Rational p sums every dimension 0..n-1 exactly.  Float p sums in log
    space and stops once the face-count variances have fallen below 1e-40
    of their maximum past the peak dimension; by Cauchy-Schwarz the dropped
    covariances are negligible at double precision.
    """
    if n > VAR_N_CAP:
        raise ValueError(f"n capped at {VAR_N_CAP}")
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_p(p)
    sym = f"Var(tilde_beta_{k})"
    if _is_exact(p):
        p = Fraction(p)
        total = Fraction(0)
        for a in range(n):
            for b in range(n):
                total += _sign(a, k) * _sign(b, k) * _cov_exact(n, p, max(a, b) + 1, min(a, b) + 1)
        return MomentResult(total, "exact", sym)
    p = float(p)
    if p <= 0 or p >= 1:
        return MomentResult(0.0, "exact", sym)
    logv = []
    peak = -math.inf
    for a in range(n):
        lv = _log_cov(n, p, a + 1, a + 1)
        logv.append(lv)
        peak = max(peak, lv)
        if a > 1 and lv < logv[-2] and lv < peak - 92.0:
            break
    dims = len(logv)
    terms = []
    for a in range(dims):
        for b in range(dims):
            lv = _log_cov(n, p, max(a, b) + 1, min(a, b) + 1)
            if lv > -math.inf:
                terms.append(_sign(a, k) * _sign(b, k) * math.exp(lv))
    return MomentResult(math.fsum(terms), "exact", sym)


def sigma2_asymptotic(n: float, p: float, k: int) -> MomentResult:
    """Order of Var(β̃_k): n^(2k) p^(2 C(k+1,2) - 1), constant suppressed."""
    return MomentResult(float(n) ** (2 * k) * float(p) ** (2 * _c2(k + 1) - 1),
                        "asymptotic-order", f"sigma2_{k}")


def stein_rate(n: float, p: float, k: int, c: float = 1.0) -> float:
    """Normal-approximation error envelope c / (n sqrt(p))."""
    if not c > 0:
        raise ValueError("c must be positive")
    return c / (n * math.sqrt(p))


def regime_bounds(n: float, k: int, delta: float) -> tuple[float, float]:
    return float(n) ** (-1 / k + delta), float(n) ** (-1 / (k + 1) - delta)


def regime_check(n: float, p: float, k: int, delta: float) -> str:
    """'inside' iff n^(-1/k+δ) <= p <= n^(-1/(k+1)-δ) at this n."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    lo, hi = regime_bounds(n, k, delta)
    if p < lo:
        return "below"
    if p > hi:
        return "above"
    return "inside"
