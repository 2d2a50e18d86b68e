"""Simplicial complexes built from graphs (clique/flag complexes) and from
point clouds (Čech complexes), plus connected-component splitting."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

# Radius comparisons in the Čech test use this slack; ties count as included.
RADIUS_TOL = 1e-9

Simplex = tuple[int, ...]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices 0..n-1.

    ``rows[v]`` is an int bitset of the neighbours of ``v``.
    """

    n: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.n:
            raise ValueError("need one adjacency row per vertex")
        for v, row in enumerate(self.rows):
            if row >> v & 1:
                raise ValueError(f"self-loop at vertex {v}")
            if row >> self.n:
                raise ValueError(f"vertex {v} has a neighbour outside 0..n-1")
        for u, v in self.edges():
            if not self.rows[v] >> u & 1:
                raise ValueError(f"adjacency not symmetric at ({u}, {v})")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        rows = [0] * n
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside 0..{n - 1}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, tuple(rows))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        full = (1 << n) - 1
        return cls(n, tuple(full & ~(1 << v) for v in range(n)))

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.rows[u] >> v & 1)

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for u, row in enumerate(self.rows):
            out.extend((u, v) for v in _bits(row >> (u + 1) << (u + 1)))
        return out

    def edge_count(self) -> int:
        return sum(row.bit_count() for row in self.rows) // 2

    def upper_rows(self) -> list[int]:
        """Neighbour bitsets restricted to larger labels."""
        return [row >> (v + 1) << (v + 1) for v, row in enumerate(self.rows)]


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    radius: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(0, 1) if pts.size == 0 else pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError("points must be an (n, d) array with d >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive and finite, got {self.radius}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class SimplicialComplex:
    """Simplices stored per dimension as sorted lists of increasing tuples.

    ``max_dim`` is the highest dimension that was *requested*; the list for a
    dimension may be empty.  Higher-dimensional simplices are simply not
    stored, so homology is only meaningful below ``max_dim``.
    """

    max_dim: int
    simplices: tuple[tuple[Simplex, ...], ...] = field(default=())

    def __post_init__(self):
        if self.max_dim < 0:
            raise ValueError("max_dim must be nonnegative")
        simp = tuple(tuple(sorted(set(map(tuple, s)))) for s in self.simplices)
        if len(simp) > self.max_dim + 1:
            if any(simp[self.max_dim + 1:]):
                raise ValueError("simplices stored above max_dim")
            simp = simp[: self.max_dim + 1]
        simp = simp + ((),) * (self.max_dim + 1 - len(simp))
        object.__setattr__(self, "simplices", simp)

    @classmethod
    def from_simplices(cls, maximal: Iterable[Sequence[int]], max_dim: int | None = None
                       ) -> "SimplicialComplex":
        """Downward closure of the given simplices."""
        maximal = [tuple(sorted(set(s))) for s in maximal]
        top = max((len(s) - 1 for s in maximal), default=0)
        if max_dim is None:
            max_dim = top
        faces: list[set[Simplex]] = [set() for _ in range(max_dim + 1)]
        for s in maximal:
            for size in range(1, min(len(s), max_dim + 1) + 1):
                faces[size - 1].update(combinations(s, size))
        return cls(max_dim, tuple(tuple(sorted(f)) for f in faces))

    def dim_simplices(self, dim: int) -> tuple[Simplex, ...]:
        if 0 <= dim <= self.max_dim:
            return self.simplices[dim]
        return ()

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(s[0] for s in self.simplices[0])

    def f_vector(self) -> tuple[int, ...]:
        """Face counts with trailing zeros dropped."""
        f = [len(s) for s in self.simplices]
        while f and f[-1] == 0:
            f.pop()
        return tuple(f)

    def __len__(self) -> int:
        return sum(len(s) for s in self.simplices)

    def is_closed(self) -> bool:
        for dim in range(1, self.max_dim + 1):
            below = set(self.simplices[dim - 1])
            for s in self.simplices[dim]:
                if any(s[:i] + s[i + 1:] not in below for i in range(len(s))):
                    return False
        return True

    def induced(self, vertices: Iterable[int]) -> "SimplicialComplex":
        keep = set(vertices)
        return SimplicialComplex(
            self.max_dim,
            tuple(tuple(s for s in layer if keep.issuperset(s)) for layer in self.simplices),
        )


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def build_clique_complex(graph: Graph, max_dim: int) -> SimplicialComplex:
    if max_dim < 0:
        raise ValueError("max_dim must be nonnegative")
    up = graph.upper_rows()
    layers: list[list[Simplex]] = [[(v,) for v in range(graph.n)]]
    # each frontier entry carries the common upper neighbourhood of its simplex
    frontier = [((v,), up[v]) for v in range(graph.n)]
    for _ in range(max_dim):
        nxt = []
        for s, cand in frontier:
            for w in _bits(cand):
                nxt.append((s + (w,), cand & up[w]))
        if not nxt:
            break
        nxt.sort()
        layers.append([s for s, _ in nxt])
        frontier = nxt
    return SimplicialComplex(max_dim, tuple(tuple(layer) for layer in layers))


def _circumball(pts: np.ndarray) -> tuple[np.ndarray, float]:
    """Smallest ball with every point of ``pts`` on its boundary (affine hull)."""
    if len(pts) == 1:
        return pts[0].copy(), 0.0
    base = pts[0]
    a = pts[1:] - base
    if len(pts) == 2:
        c = base + a[0] / 2
        return c, float(np.linalg.norm(a[0]) / 2)
    g = a @ a.T
    rhs = 0.5 * np.einsum("ij,ij->i", a, a)
    lam = np.linalg.lstsq(g, rhs, rcond=None)[0]
    c = base + lam @ a
    return c, float(max(np.linalg.norm(p - c) for p in pts))


def _welzl(pts: np.ndarray, support: list[int], n: int, dim: int):
    if n == 0 or len(support) == dim + 1:
        if not support:
            return None, -1.0
        return _circumball(pts[support])
    c, r = _welzl(pts, support, n - 1, dim)
    p = pts[n - 1]
    if c is not None and np.linalg.norm(p - c) <= r + RADIUS_TOL * max(1.0, r):
        return c, r
    return _welzl(pts, support + [n - 1], n - 1, dim)


def min_enclosing_ball(points, seed: int = 0) -> tuple[np.ndarray, float]:
    """Minimal enclosing ball by Welzl's randomized support-set recursion.

    The shuffle uses a fixed seed so results are reproducible.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if len(pts) == 0:
        raise ValueError("min_enclosing_ball needs at least one point")
    order = list(range(len(pts)))
    random.Random(seed).shuffle(order)
    pts = pts[order]
    c, r = _welzl(pts, [], len(pts), pts.shape[1])
    return c, r


def triangle_radius(a, b, c) -> float:
    """Minimal enclosing ball radius of three points, in closed form."""
    u = [y - x for x, y in zip(a, b)]
    v = [y - x for x, y in zip(a, c)]
    uu = sum(x * x for x in u)
    vv = sum(x * x for x in v)
    uv = sum(x * y for x, y in zip(u, v))
    ww = uu + vv - 2 * uv
    sq = sorted((uu, vv, ww))
    gram = uu * vv - uv * uv
    # right or obtuse (or degenerate): the longest side is a diameter
    if sq[2] >= sq[0] + sq[1] or gram <= 0:
        return math.sqrt(sq[2]) / 2
    return math.sqrt(uu * vv * ww / gram) / 2


def _fits(pts: np.ndarray, radius: float) -> bool:
    if len(pts) == 2:
        return float(np.linalg.norm(pts[0] - pts[1])) / 2 <= radius + RADIUS_TOL
    if len(pts) == 3:
        a, b, c = pts.tolist()
        return triangle_radius(a, b, c) <= radius + RADIUS_TOL
    return min_enclosing_ball(pts)[1] <= radius + RADIUS_TOL


def geometric_edges(points: np.ndarray, radius: float) -> np.ndarray:
    """Index pairs (i < j) with |x_i - x_j| <= 2 * radius (within tolerance)."""
    if len(points) < 2:
        return np.empty((0, 2), dtype=np.int64)
    pairs = cKDTree(points).query_pairs(2 * radius + 2 * RADIUS_TOL, output_type="ndarray")
    if len(pairs) == 0:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.sort(pairs, axis=1)
    d = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
    pairs = pairs[d / 2 <= radius + RADIUS_TOL]
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def build_cech_complex(cloud: PointCloud, max_dim: int) -> SimplicialComplex:
    """Čech complex with balls of radius ``cloud.radius``.

    A simplex is kept iff its minimal enclosing ball has radius <= r, so edges
    appear at distance <= 2r.  Candidates are cliques of that graph; a
    candidate is tested only once all of its facets are present.
    """
    if max_dim < 0:
        raise ValueError("max_dim must be nonnegative")
    pts = cloud.points
    n = len(cloud)
    layers: list[list[Simplex]] = [[(v,) for v in range(n)]]
    if max_dim == 0 or n == 0:
        return SimplicialComplex(max_dim, tuple(tuple(x) for x in layers))
    d = cloud.d
    edges = geometric_edges(pts, cloud.radius)
    up = [0] * n
    for u, v in edges:
        up[u] |= 1 << int(v)
    layers.append([(int(u), int(v)) for u, v in edges])
    frontier = [(s, up[s[0]] & up[s[1]]) for s in layers[1]]
    for dim in range(2, max_dim + 1):
        below = set(layers[-1])
        nxt = []
        for s, cand in frontier:
            for w in _bits(cand):
                t = s + (w,)
                if any(t[:i] + t[i + 1:] not in below for i in range(len(t) - 1)):
                    continue
                # Helly: beyond d+1 vertices the facets already decide
                if len(t) > d + 1 or _fits(pts[list(t)], cloud.radius):
                    nxt.append((t, cand & up[w]))
        if not nxt:
            break
        nxt.sort()
        layers.append([t for t, _ in nxt])
        frontier = nxt
    return SimplicialComplex(max_dim, tuple(tuple(x) for x in layers))


class _DisjointSet:
    def __init__(self, items):
        self.parent = {v: v for v in items}

    def find(self, v):
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def vertex_partition(cplx: SimplicialComplex) -> list[list[int]]:
    """Vertex sets of the 1-skeleton components, ordered by smallest vertex."""
    ds = _DisjointSet(cplx.vertices)
    for u, v in cplx.dim_simplices(1):
        ds.union(u, v)
    groups: dict[int, list[int]] = {}
    for v in cplx.vertices:
        groups.setdefault(ds.find(v), []).append(v)
    return sorted(groups.values(), key=lambda g: g[0])


def connected_components(cplx: SimplicialComplex) -> list[SimplicialComplex]:
    parts = vertex_partition(cplx)
    owner = {}
    for idx, part in enumerate(parts):
        for v in part:
            owner[v] = idx
    buckets = [[[] for _ in range(cplx.max_dim + 1)] for _ in parts]
    for dim, layer in enumerate(cplx.simplices):
        for s in layer:
            buckets[owner[s[0]]][dim].append(s)
    return [SimplicialComplex(cplx.max_dim, tuple(tuple(x) for x in b)) for b in buckets]
