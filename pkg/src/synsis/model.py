"""Rate parameters and the synergistic infection rate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import Graph


def _rate_array(values, n: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValidationError(f"{name} must have length {n}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    if np.any(arr < 0):
        raise ValidationError(f"{name} contains negative rates")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Per-node recovery (``delta``), transmission (``beta``) and synergy
    (``gamma``) rates, in events per unit time."""

    delta: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __init__(self, delta, beta, gamma):
        n = np.size(delta)
        object.__setattr__(self, "delta", _rate_array(delta, n, "delta"))
        object.__setattr__(self, "beta", _rate_array(beta, n, "beta"))
        object.__setattr__(self, "gamma", _rate_array(gamma, n, "gamma"))

    @property
    def n(self) -> int:
        return self.delta.size

    def check_graph(self, g: Graph) -> None:
        if self.n != g.num_nodes:
            raise ValidationError(f"parameters sized for {self.n} nodes, graph has {g.num_nodes}")


def homogeneous(n: int, beta: float, delta: float, gamma: float) -> ModelParams:
    if n < 1:
        raise ValidationError("n must be positive")
    return ModelParams(np.full(n, delta, dtype=float), np.full(n, beta, dtype=float),
                       np.full(n, gamma, dtype=float))


class EpidemicState:
    """Infection indicators ``x`` (uint8) with a cached infected count."""

    __slots__ = ("x", "infected_count")

    def __init__(self, n: int, infected=()):
        self.x = np.zeros(n, dtype=np.uint8)
        for i in infected:
            self.x[i] = 1
        self.infected_count = int(self.x.sum())

    @classmethod
    def from_mask(cls, n: int, mask: int) -> "EpidemicState":
        return cls(n, [i for i in range(n) if mask >> i & 1])

    @property
    def n(self) -> int:
        return self.x.size

    def infected(self) -> list[int]:
        return np.flatnonzero(self.x).tolist()

    def infect(self, i: int) -> None:
        if self.x[i]:
            raise ValidationError(f"node {i} already infected")
        self.x[i] = 1
        self.infected_count += 1

    def recover(self, i: int) -> None:
        if not self.x[i]:
            raise ValidationError(f"node {i} is not infected")
        self.x[i] = 0
        self.infected_count -= 1

    def copy(self) -> "EpidemicState":
        s = EpidemicState(self.n)
        s.x[:] = self.x
        s.infected_count = self.infected_count
        return s


def _check_node(g: Graph, i: int) -> None:
    if not 0 <= i < g.num_nodes:
        raise IndexError(f"node index {i} out of range [0, {g.num_nodes})")


def infected_neighbor_count(g: Graph, s: EpidemicState, j: int, excluding: int) -> int:
    """Infected neighbours of ``j`` other than ``excluding``."""
    _check_node(g, j)
    _check_node(g, excluding)
    x = s.x
    return sum(int(x[k]) for k in g.neighbors[j] if k != excluding)


def infection_rate(g: Graph, p: ModelParams, s: EpidemicState, i: int) -> float:
    """Rate at which susceptible node ``i`` becomes infected.

    Each infected neighbour ``j`` contributes ``beta[i] + gamma[j] * m``,
    where ``m`` counts the infected neighbours of ``j`` other than ``i``.
    """
    _check_node(g, i)
    if s.x[i]:
        raise ValidationError(f"infection_rate called on infected node {i}")
    rate = 0.0
    for j in g.neighbors[i]:
        if s.x[j]:
            rate += p.beta[i] + p.gamma[j] * infected_neighbor_count(g, s, j, i)
    return float(rate)
