"""Betti numbers over GF(2) from bit-packed boundary matrices, with an exact
rational-rank oracle for spotting field dependence."""

from __future__ import annotations

from dataclasses import dataclass

from .simplicial import SimplicialComplex, vertex_partition

RATIONAL_RANK_CAP = 500


@dataclass(frozen=True)
class BoundaryMatrix:
    """Row ``i`` is a bitset over the (dim-1)-simplices that are facets of
    the ``i``-th dim-simplex.  Columns follow the sorted facet list."""

    n_rows: int
    n_cols: int
    rows: tuple[int, ...]
    dim: int = 1

    @classmethod
    def from_dense(cls, dense, dim: int = 1) -> "BoundaryMatrix":
        dense = [list(r) for r in dense]
        n_cols = len(dense[0]) if dense else 0
        rows = tuple(sum(1 << j for j, x in enumerate(r) if x % 2) for r in dense)
        return cls(len(dense), n_cols, rows, dim)

    def to_dense(self) -> list[list[int]]:
        return [[row >> j & 1 for j in range(self.n_cols)] for row in self.rows]

    def signed_rows(self) -> list[list[tuple[int, int]]]:
        """Oriented entries (column, ±1) of each row.

        For a sorted simplex (v0..vt) the facet dropping v_i is lexicographically
        larger the smaller i is, so the j-th set column (ascending) drops
        v_{t-j} and carries sign (-1)^(t-j).
        """
        out = []
        for row in self.rows:
            cols = []
            while row:
                low = row & -row
                cols.append(low.bit_length() - 1)
                row ^= low
            t = len(cols) - 1
            out.append([(c, -1 if (t - j) % 2 else 1) for j, c in enumerate(cols)])
        return out


def boundary_matrix(cplx: SimplicialComplex, dim: int) -> BoundaryMatrix:
    if not 1 <= dim <= cplx.max_dim:
        raise ValueError(f"dim must lie in 1..{cplx.max_dim}, got {dim}")
    index = {s: i for i, s in enumerate(cplx.simplices[dim - 1])}
    rows = []
    for s in cplx.simplices[dim]:
        bits = 0
        for i in range(len(s)):
            bits |= 1 << index[s[:i] + s[i + 1:]]
        rows.append(bits)
    return BoundaryMatrix(len(rows), len(index), tuple(rows), dim)


def rank_gf2(matrix: BoundaryMatrix) -> int:
    """Row reduction over GF(2), pivoting on each row's lowest set bit."""
    pivots: dict[int, int] = {}
    for row in matrix.rows:
        while row:
            low = (row & -row).bit_length() - 1
            piv = pivots.get(low)
            if piv is None:
                pivots[low] = row
                break
            row ^= piv
    return len(pivots)


def gf2_product(a: BoundaryMatrix, b: BoundaryMatrix) -> list[int]:
    """Rows of the GF(2) product ``A·B`` where A is n×m and B is m×k."""
    if a.n_cols != b.n_rows:
        raise ValueError("shape mismatch")
    out = []
    for row in a.rows:
        acc = 0
        while row:
            low = row & -row
            acc ^= b.rows[low.bit_length() - 1]
            row ^= low
        out.append(acc)
    return out


def rational_rank(matrix: BoundaryMatrix) -> int:
    """Rank over Q of the oriented matrix, by fraction-free (Bareiss) elimination."""
    if matrix.n_rows > RATIONAL_RANK_CAP or matrix.n_cols > RATIONAL_RANK_CAP:
        raise ValueError(f"rational_rank is capped at {RATIONAL_RANK_CAP}x{RATIONAL_RANK_CAP}")
    m = [[0] * matrix.n_cols for _ in range(matrix.n_rows)]
    for i, entries in enumerate(matrix.signed_rows()):
        for c, sgn in entries:
            m[i][c] = sgn
    rank = 0
    prev = 1
    n_rows, n_cols = matrix.n_rows, matrix.n_cols
    for col in range(n_cols):
        if rank == n_rows:
            break
        piv = next((r for r in range(rank, n_rows) if m[r][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][col]
        for r in range(rank + 1, n_rows):
            mr = m[r]
            f = mr[col]
            top = m[rank]
            for c in range(col + 1, n_cols):
                mr[c] = (p * mr[c] - f * top[c]) // prev
            mr[col] = 0
        prev = p
        rank += 1
    return rank


def _ranks(cplx: SimplicialComplex, top: int) -> list[int]:
    """rank ∂_t for t = 0..top (∂_0 = 0); dims above max_dim give 0."""
    ranks = [0]
    for t in range(1, top + 1):
        if t > cplx.max_dim or not cplx.simplices[t]:
            ranks.append(0)
        elif t == 1:
            # over any field, rank ∂_1 = vertices - components of the 1-skeleton
            ranks.append(len(cplx.simplices[0]) - len(vertex_partition(cplx)))
        else:
            ranks.append(rank_gf2(boundary_matrix(cplx, t)))
    return ranks


def betti_numbers(cplx: SimplicialComplex, max_k: int) -> tuple[int, ...]:
    """β_0..β_max_k over GF(2).  Needs the complex stored to dimension max_k+1."""
    if max_k < 0:
        raise ValueError("max_k must be nonnegative")
    if cplx.max_dim < max_k + 1:
        raise ValueError(
            f"complex stored to dimension {cplx.max_dim}; β_{max_k} needs {max_k + 1}")
    ranks = _ranks(cplx, max_k + 1)
    return tuple(len(cplx.simplices[t]) - ranks[t] - ranks[t + 1] for t in range(max_k + 1))


def skeleton_betti(cplx: SimplicialComplex) -> tuple[int, ...]:
    """Betti numbers of the stored complex itself, all dimensions 0..max_dim.

    Nothing above ``max_dim`` is stored, so the top value is that of the
    skeleton, not of any larger complex it was cut from.
    """
    ranks = _ranks(cplx, cplx.max_dim + 1)
    return tuple(len(cplx.simplices[t]) - ranks[t] - ranks[t + 1]
                 for t in range(cplx.max_dim + 1))


def euler_characteristic(values) -> int:
    return sum(v if i % 2 == 0 else -v for i, v in enumerate(values))


def euler_check(cplx: SimplicialComplex) -> bool:
    return euler_characteristic(cplx.f_vector()) == euler_characteristic(skeleton_betti(cplx))
