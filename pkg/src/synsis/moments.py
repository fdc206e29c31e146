"""Stacked first/second moment vector and its Metzler bounding matrix.

The moment vector ``p`` holds ``p_i = E[x_i]`` at positions ``0..N-1``,
followed by ``p_ij = E[x_i x_j]`` for ``i < j`` in lexicographic order.
:func:`build_moment_matrix` assembles the sparse matrix ``M`` for which
``dp/dt <= M p`` holds componentwise along every trajectory of the
synergistic SIS process.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .graph import Graph
from .model import ModelParams


@dataclass(frozen=True)
class MomentIndex:
    n: int

    @property
    def dim(self) -> int:
        return self.n * (self.n + 1) // 2

    def single(self, i: int) -> int:
        return index_of_single(self, i)

    def pair(self, i: int, j: int) -> int:
        return index_of_pair(self, i, j)

    def pairs(self, i, j) -> np.ndarray:
        """Vectorised :func:`index_of_pair` over arrays with ``i != j``."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        a = np.minimum(i, j)
        b = np.maximum(i, j)
        return self.n + a * self.n - a * (a + 1) // 2 + (b - a - 1)

    def pair_list(self) -> list[tuple[int, int]]:
        """Node pairs in stacking order."""
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]

    def stack(self, singles, pairs) -> np.ndarray:
        """Stack ``singles[i]`` and the upper triangle of ``pairs[i, j]``."""
        iu, ju = np.triu_indices(self.n, k=1)
        return np.concatenate([np.asarray(singles, dtype=float),
                               np.asarray(pairs, dtype=float)[iu, ju]])


def index_of_single(idx: MomentIndex, i: int) -> int:
    if not 0 <= i < idx.n:
        raise IndexError(f"node index {i} out of range [0, {idx.n})")
    return i


def index_of_pair(idx: MomentIndex, i: int, j: int) -> int:
    n = idx.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"node pair ({i}, {j}) out of range [0, {n})")
    if i == j:
        raise ValidationError("p_ii is not a stacked moment; pairs need distinct nodes")
    a, b = min(i, j), max(i, j)
    return n + a * n - a * (a + 1) // 2 + (b - a - 1)


@dataclass(frozen=True, eq=False)
class MomentMatrix:
    index: MomentIndex
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.index.dim

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def entries(self) -> Iterator[tuple[int, int, float]]:
        coo = self.matrix.tocoo()
        for r, c, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
            yield r, c, v

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def write_coordinate(self, fh: TextIO) -> None:
        """Coordinate text: header ``dim nnz``, then ``row col value`` lines."""
        fh.write(f"{self.dim} {self.nnz}\n")
        for r, c, v in self.entries():
            fh.write(f"{r} {c} {v:.17g}\n")


def is_metzler(m) -> bool:
    a = m.matrix if isinstance(m, MomentMatrix) else m
    if sp.issparse(a):
        coo = a.tocoo()
        off = coo.row != coo.col
        return bool(np.all(coo.data[off] >= 0))
    a = np.asarray(a)
    return bool(np.all(a[~np.eye(a.shape[0], dtype=bool)] >= 0))


def _gather(ptr: np.ndarray, heads: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For CSR row pointer ``ptr``, list ``(owner, position)`` of every stored
    slot of rows ``heads``; ``owner`` indexes into ``heads``."""
    heads = np.asarray(heads, dtype=np.int64)
    lens = ptr[heads + 1] - ptr[heads]
    total = int(lens.sum())
    owner = np.repeat(np.arange(heads.size, dtype=np.int64), lens)
    block_start = np.repeat(np.cumsum(lens) - lens, lens)
    pos = np.repeat(ptr[heads], lens) + (np.arange(total, dtype=np.int64) - block_start)
    return owner, pos


def build_moment_matrix(g: Graph, p: ModelParams) -> MomentMatrix:
    """Assemble the sparse Metzler matrix ``M`` with ``dp/dt <= M p``.

    Row ``i`` (first moment) keeps ``-delta_i p_i``, the direct infection
    terms ``beta_i p_j`` of neighbours ``j`` and, for every path
    ``i - j - k`` with ``k != i``, the synergy term ``gamma_j p_jk``; the
    negative ``-beta_i p_ij`` and all third-order terms are dropped.

    Row ``(i, l)`` is the sum of two one-sided blocks, one with ``l`` as the
    node being infected while ``i`` is already infected and one with the
    roles swapped. For target ``t`` and other node ``o`` the block holds

    * ``-(delta_t + a_ot beta_t)`` on the diagonal and ``a_ot beta_t`` on ``p_o``,
    * ``beta_t`` on ``p_om`` for each neighbour ``m != o`` of ``t``,
    * ``gamma_m`` on ``p_mn`` for each path ``t - m - n`` with ``n != t``.

    Coinciding slots are summed.
    """
    p.check_graph(g)
    n = g.num_nodes
    idx = MomentIndex(n)
    delta, beta, gamma = p.delta, p.beta, p.gamma
    indptr32, indices32 = g.csr
    indptr = indptr32.astype(np.int64)
    nbr = indices32.astype(np.int64)
    deg = np.diff(indptr)
    nodes = np.arange(n, dtype=np.int64)

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    cross_rows: list[np.ndarray] = []
    cross_cols: list[np.ndarray] = []

    def add(r, c, v, cross=False):
        rows.append(r)
        cols.append(c)
        vals.append(np.broadcast_to(np.asarray(v, dtype=float), r.shape))
        if cross:
            cross_rows.append(r)
            cross_cols.append(c)

    # adjacency slots as ordered (src, dst)
    src = np.repeat(nodes, deg)
    dst = nbr

    # length-2 paths a - c - b with b != a, grouped by a
    own, pos = _gather(indptr, dst)
    path_a = src[own]
    path_c = dst[own]
    path_b = nbr[pos]
    keep = path_b != path_a
    path_a, path_c, path_b = path_a[keep], path_c[keep], path_b[keep]
    path_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(path_a, minlength=n), out=path_ptr[1:])
    path_col = idx.pairs(path_c, path_b)
    path_val = gamma[path_c]

    # first-moment rows
    add(nodes, nodes, -delta)
    add(src, dst, beta[src])
    add(path_a, path_col, path_val)

    if n > 1:
        # ordered pairs (o, t), o != t, grouped by t
        t_all = np.repeat(nodes, n - 1)
        o_all = np.concatenate([np.delete(nodes, t) for t in range(n)])
        row_all = idx.pairs(o_all, t_all)

        adj = np.zeros((n, n), dtype=bool)
        adj[src, dst] = True
        a_ot = adj[o_all, t_all]

        add(row_all, row_all, -delta[t_all] - a_ot * beta[t_all])
        add(row_all[a_ot], o_all[a_ot], beta[t_all[a_ot]])

        # beta_t p_om for m in N(t), m != o
        own, pos = _gather(indptr, t_all)
        m = nbr[pos]
        o = o_all[own]
        keep = m != o
        r = row_all[own][keep]
        c = idx.pairs(o[keep], m[keep])
        add(r, c, beta[t_all[own][keep]], cross=True)

        # gamma_m p_mn for each path t - m - n, n != t
        own, pos = _gather(path_ptr, t_all)
        add(row_all[own], path_col[pos], path_val[pos], cross=True)

    row = np.concatenate(rows)
    col = np.concatenate(cols)
    val = np.concatenate(vals)
    if cross_rows:
        cr = np.concatenate(cross_rows)
        cc = np.concatenate(cross_cols)
        if np.any(cr == cc):
            raise AssertionError("cross-pair term landed on the diagonal of M")

    mat = sp.coo_matrix((val, (row, col)), shape=(idx.dim, idx.dim)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    result = MomentMatrix(idx, mat)
    if not is_metzler(result):
        raise AssertionError("assembled matrix is not Metzler")
    return result
