"""Exhaustive ground truth for tiny Erdős–Rényi instances and clique counts."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

from .homology import skeleton_betti
from .simplicial import Graph, build_clique_complex

ENUM_N_CAP = 5
BRUTE_N_CAP = 16


@dataclass(frozen=True)
class EnumerationResult:
    """Exact moments over all graphs on n vertices.

    Statistics are named ``f{i}``, ``beta{i}`` and ``tilde_beta``.
    """

    n: int
    p: Fraction
    k: int
    names: tuple[str, ...]
    mean: dict[str, Fraction]
    cov: dict[tuple[str, str], Fraction] = field(repr=False)
    total_weight: Fraction = Fraction(1)

    def expectation(self, name: str) -> Fraction:
        return self.mean.get(name, Fraction(0))

    def covariance(self, a: str, b: str) -> Fraction:
        if a not in self.names or b not in self.names:
            return Fraction(0)
        return self.cov[(a, b)]

    def variance(self, name: str) -> Fraction:
        return self.covariance(name, name)


@lru_cache(maxsize=None)
def _graph_table(n: int):
    """(edge count, f-vector, Betti vector) for every labelled graph on n vertices."""
    pairs = list(combinations(range(n), 2))
    table = []
    for mask in range(1 << len(pairs)):
        edges = [e for i, e in enumerate(pairs) if mask >> i & 1]
        g = Graph.from_edges(n, edges)
        f = tuple(brute_clique_count(g, size) for size in range(1, n + 1))
        # one dimension past any possible clique, so the top Betti number is exact
        cplx = build_clique_complex(g, n)
        table.append((len(edges), f, skeleton_betti(cplx)))
    return len(pairs), table


def enumerate_er(n: int, p, k: int) -> EnumerationResult:
    if n > ENUM_N_CAP:
        raise ValueError(f"enumeration is capped at n <= {ENUM_N_CAP}")
    if n < 1:
        raise ValueError("n must be positive")
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    n_pairs, table = _graph_table(n)
    names = [f"f{i}" for i in range(n)] + [f"beta{i}" for i in range(n)] + ["tilde_beta"]
    rows = []
    for e, f, betti in table:
        w = p ** e * (1 - p) ** (n_pairs - e)
        vals = {f"f{i}": (f[i] if i < len(f) else 0) for i in range(n)}
        vals.update({f"beta{i}": (betti[i] if i < len(betti) else 0) for i in range(n)})
        # alternating surrogate via its Euler-characteristic form
        vals["tilde_beta"] = (-1) ** k * sum((-1) ** i * x for i, x in enumerate(f))
        rows.append((w, vals))
    total = sum((w for w, _ in rows), Fraction(0))
    mean = {nm: sum((w * v[nm] for w, v in rows), Fraction(0)) for nm in names}
    cov = {}
    for i, a in enumerate(names):
        for b in names[i:]:
            c = sum((w * v[a] * v[b] for w, v in rows), Fraction(0)) - mean[a] * mean[b]
            cov[(a, b)] = cov[(b, a)] = c
    return EnumerationResult(n, p, k, tuple(names), mean, cov, total)


def brute_clique_count(graph: Graph, size: int) -> int:
    """Number of `size`-cliques, by testing every vertex subset."""
    if graph.n > BRUTE_N_CAP:
        raise ValueError(f"brute force is capped at n <= {BRUTE_N_CAP}")
    return sum(
        all(graph.has_edge(u, v) for u, v in combinations(sub, 2))
        for sub in combinations(range(graph.n), size)
    )
