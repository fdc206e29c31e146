"""Brute-force reference for small networks: the full 2^N-state chain.

State ``s`` is a bitmask with bit ``i`` equal to ``x_i``. Besides the
generator and its spectral growth rate, this module evaluates the moment
balance laws along exact distributions so the bounding matrix can be
checked against ground truth.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import StateSpaceTooLarge, ValidationError
from .graph import Graph
from .model import ModelParams

DEFAULT_CAP = 12


def state_bits(n: int) -> np.ndarray:
    """``(2**n, n)`` 0/1 matrix; row ``s`` holds the bits of mask ``s``."""
    masks = np.arange(1 << n, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(np.int8)


@dataclass(frozen=True, eq=False)
class ExactModel:
    graph: Graph
    params: ModelParams
    generator: sp.csr_matrix  # Q[s, s'] = rate s -> s'

    @property
    def n(self) -> int:
        return self.graph.num_nodes

    @property
    def num_states(self) -> int:
        return 1 << self.n


def build_exact(g: Graph, p: ModelParams, cap: int = DEFAULT_CAP) -> ExactModel:
    p.check_graph(g)
    n = g.num_nodes
    if n > cap:
        raise StateSpaceTooLarge(
            f"{n} nodes means {2 ** n} states; the cap is {cap} nodes ({2 ** cap} states)")
    if n > DEFAULT_CAP:
        warnings.warn(f"building a {2 ** n}-state generator", ResourceWarning, stacklevel=2)
    X = state_bits(n).astype(float)
    A = g.adjacency().toarray()
    m = X @ A                          # infected neighbours of each node
    # sum over infected neighbours j of i of gamma_j * (m_j - x_i)
    syn = ((X * p.gamma) * m) @ A - X * ((X * p.gamma) @ A)
    inf_rate = p.beta * (X @ A) + syn

    masks = np.arange(1 << n, dtype=np.int64)
    rows, cols, vals = [], [], []
    for i in range(n):
        bit = 1 << i
        on = X[:, i] == 1
        rows.append(masks[on])
        cols.append(masks[on] ^ bit)
        vals.append(np.full(on.sum(), p.delta[i]))
        off = ~on
        rows.append(masks[off])
        cols.append(masks[off] | bit)
        vals.append(inf_rate[off, i])
    row = np.concatenate(rows)
    col = np.concatenate(cols)
    val = np.concatenate(vals)
    keep = val > 0
    q = sp.coo_matrix((val[keep], (row[keep], col[keep])), shape=(1 << n, 1 << n)).tocsr()
    out = np.asarray(q.sum(axis=1)).ravel()
    q = (q - sp.diags(out)).tocsr()
    q.sort_indices()
    return ExactModel(g, p, q)


def integrate_master_equation(m: ExactModel, initial: int, times, rtol: float = 1e-10,
                              atol: float = 1e-10, method: str = "DOP853") -> np.ndarray:
    """State distributions ``pi(t)`` at ``times`` starting from mask ``initial``.

    Integrates ``dpi/dt = Q^T pi`` with an adaptive Runge-Kutta scheme.
    Returns an array of shape ``(len(times), 2**N)``.
    """
    times = np.asarray(times, dtype=float)
    if not 0 <= initial < m.num_states:
        raise ValidationError(f"initial mask {initial} out of range")
    if times.ndim != 1 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValidationError("times must be nondecreasing and nonnegative")
    pi0 = np.zeros(m.num_states)
    pi0[initial] = 1.0
    out = np.empty((times.size, m.num_states))
    at_zero = times == 0
    out[at_zero] = pi0
    rest = times[~at_zero]
    if rest.size:
        qt = m.generator.T.tocsr()
        sol = solve_ivp(lambda t, y: qt @ y, (0.0, float(rest[-1])), pi0, method=method,
                        t_eval=rest, rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"master-equation integration failed: {sol.message}")
        out[~at_zero] = sol.y.T
    return out


@dataclass
class MomentTrajectories:
    """``singles[t, i] = p_i``; ``pairs[t, i, j] = p_ij`` (symmetric, diagonal
    ``p_i``); ``triples[t, i, j, k] = p_ijk`` (fully symmetric)."""

    times: np.ndarray
    singles: np.ndarray
    pairs: np.ndarray
    triples: np.ndarray

    def at(self, k: int) -> "MomentTrajectories":
        return MomentTrajectories(self.times[k:k + 1], self.singles[k], self.pairs[k],
                                  self.triples[k])


def moments_of(dist: np.ndarray, n: int):
    """First, second and third moments of one or more distributions over masks."""
    X = state_bits(n).astype(float)
    d = np.atleast_2d(dist)
    singles = d @ X
    pairs = np.einsum("ts,si,sj->tij", d, X, X)
    triples = np.einsum("ts,si,sj,sk->tijk", d, X, X, X)
    return singles, pairs, triples


def moment_trajectories(m: ExactModel, initial: int, times, **kw) -> MomentTrajectories:
    dist = integrate_master_equation(m, initial, times, **kw)
    s, p2, p3 = moments_of(dist, m.n)
    return MomentTrajectories(np.asarray(times, dtype=float), s, p2, p3)


def exact_growth_rate(m: ExactModel) -> float:
    """Spectral abscissa of the generator restricted to nonempty states.

    This is the largest asymptotic exponential rate of the expected number
    of infected nodes over all initial infected sets.
    """
    if m.num_states < 2:
        raise ValidationError("graph has no nodes")
    sub = m.generator[1:, 1:].toarray()
    try:
        eig = np.linalg.eigvals(sub)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    return float(eig.real.max())


# Balance laws. Each takes moments at a single instant: ``s`` (N,),
# ``p2`` (N, N), ``p3`` (N, N, N).

def first_moment_identity_rhs(g: Graph, p: ModelParams, s, p2, p3) -> np.ndarray:
    """Exact ``dp_i/dt``: recovery, direct infection, synergy, each with its
    negative higher-order correction."""
    out = np.empty(g.num_nodes)
    for i in range(g.num_nodes):
        v = -p.delta[i] * s[i]
        for j in g.neighbors[i]:
            v += p.beta[i] * (s[j] - p2[i, j])
            for k in g.neighbors[j]:
                if k != i:
                    v += p.gamma[j] * (p2[j, k] - p3[i, j, k])
        out[i] = v
    return out


def first_moment_bound_rhs(g: Graph, p: ModelParams, s, p2) -> np.ndarray:
    """Upper bound on ``dp_i/dt`` with the negative terms dropped."""
    out = np.empty(g.num_nodes)
    for i in range(g.num_nodes):
        v = -p.delta[i] * s[i]
        for j in g.neighbors[i]:
            v += p.beta[i] * s[j]
            for k in g.neighbors[j]:
                if k != i:
                    v += p.gamma[j] * p2[j, k]
        out[i] = v
    return out


def _expect(dist, X, ones=(), zeros=()):
    w = dist.copy()
    for a in ones:
        w = w * X[:, a]
    for a in zeros:
        w = w * (1.0 - X[:, a])
    return float(w.sum())


def pair_moment_identity_rhs(g: Graph, p: ModelParams, dist: np.ndarray) -> np.ndarray:
    """Exact ``dp_il/dt`` for ``i != l`` from a full state distribution.

    Entry ``[i, l]``; the diagonal is left at zero.
    """
    n = g.num_nodes
    X = state_bits(n).astype(float)
    out = np.zeros((n, n))
    for i in range(n):
        for l in range(n):
            if i == l:
                continue
            v = -(p.delta[l] + p.delta[i]) * _expect(dist, X, (i, l))
            for mm in g.neighbors[l]:
                v += p.beta[l] * _expect(dist, X, (i, mm), (l,))
                for nn in g.neighbors[mm]:
                    if nn != l:
                        v += p.gamma[mm] * _expect(dist, X, (i, mm, nn), (l,))
            for j in g.neighbors[i]:
                v += p.beta[i] * _expect(dist, X, (j, l), (i,))
                for k in g.neighbors[j]:
                    if k != i:
                        v += p.gamma[j] * _expect(dist, X, (j, k, l), (i,))
            out[i, l] = v
    return out


def pair_moment_bound_rhs(g: Graph, p: ModelParams, s, p2) -> np.ndarray:
    """Upper bound on ``dp_il/dt`` closed in first and second moments."""
    n = g.num_nodes
    A = g.adjacency().toarray()
    out = np.zeros((n, n))
    for i in range(n):
        for l in range(n):
            if i == l:
                continue
            v = -p.delta[l] * p2[i, l] + A[i, l] * p.beta[l] * (s[i] - p2[i, l])
            for mm in g.neighbors[l]:
                if mm != i:
                    v += p.beta[l] * p2[i, mm]
                for nn in g.neighbors[mm]:
                    if nn != l:
                        v += p.gamma[mm] * p2[mm, nn]
            v += -p.delta[i] * p2[i, l] + A[l, i] * p.beta[i] * (s[l] - p2[i, l])
            for j in g.neighbors[i]:
                if j != l:
                    v += p.beta[i] * p2[j, l]
                for k in g.neighbors[j]:
                    if k != i:
                        v += p.gamma[j] * p2[k, j]
            out[i, l] = v
    return out


def generator_derivative(m: ExactModel, dist: np.ndarray) -> np.ndarray:
    """``dpi/dt = Q^T pi`` evaluated at one or more distributions."""
    d = np.atleast_2d(dist)
    return (m.generator.T @ d.T).T
