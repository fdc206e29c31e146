"""Simple undirected networks loaded from edge-list text."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import GraphParseError, ValidationError


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph on nodes ``0..num_nodes-1``.

    ``edges`` holds each edge once as ``(i, j)`` with ``i < j``;
    ``neighbors[i]`` is the sorted tuple of nodes adjacent to ``i``.
    """

    num_nodes: int
    edges: frozenset
    neighbors: tuple
    node_labels: tuple = field(compare=False)

    @classmethod
    def from_edges(cls, num_nodes: int, edges: Iterable[tuple[int, int]],
                   node_labels: Iterable[str] | None = None) -> "Graph":
        if num_nodes < 1:
            raise ValidationError("graph must have at least one node")
        canon = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if not (0 <= i < num_nodes and 0 <= j < num_nodes):
                raise ValidationError(f"edge ({i}, {j}) out of range for {num_nodes} nodes")
            if i == j:
                raise ValidationError(f"self-loop at node {i}")
            canon.add((min(i, j), max(i, j)))
        nbrs: list[list[int]] = [[] for _ in range(num_nodes)]
        for i, j in canon:
            nbrs[i].append(j)
            nbrs[j].append(i)
        if node_labels is None:
            labels = tuple(str(i) for i in range(num_nodes))
        else:
            labels = tuple(str(s) for s in node_labels)
            if len(labels) != num_nodes:
                raise ValidationError("node_labels length does not match num_nodes")
        return cls(num_nodes, frozenset(canon), tuple(tuple(sorted(n)) for n in nbrs), labels)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degree(self, i: int) -> int:
        return degree(self, i)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` arrays of the adjacency lists (int32)."""
        deg = np.fromiter((len(n) for n in self.neighbors), dtype=np.int64, count=self.num_nodes)
        indptr = np.zeros(self.num_nodes + 1, dtype=np.int32)
        np.cumsum(deg, out=indptr[1:])
        indices = np.fromiter((j for n in self.neighbors for j in n), dtype=np.int32,
                              count=int(indptr[-1]))
        return indptr, indices

    def adjacency(self) -> sp.csr_matrix:
        indptr, indices = self.csr
        data = np.ones(len(indices), dtype=float)
        return sp.csr_matrix((data, indices, indptr), shape=(self.num_nodes, self.num_nodes))

    def index_of(self, label: str) -> int:
        try:
            return self.node_labels.index(str(label))
        except ValueError:
            raise ValidationError(f"unknown node label {label!r}") from None


def degree(g: Graph, i: int) -> int:
    if not 0 <= i < g.num_nodes:
        raise IndexError(f"node index {i} out of range [0, {g.num_nodes})")
    return len(g.neighbors[i])


def parse_edge_list(text: str | TextIO) -> Graph:
    """Parse whitespace-delimited ``LABEL LABEL`` lines into a Graph.

    Labels become indices in order of first appearance. Lines starting with
    ``#`` and blank lines are skipped; repeated edges collapse.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    labels: dict[str, int] = {}
    edges = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(f"expected two node labels, got {len(parts)} field(s)", lineno)
        a, b = parts
        if a == b:
            raise ValidationError(f"line {lineno}: self-loop on node {a!r}")
        for lab in (a, b):
            if lab not in labels:
                labels[lab] = len(labels)
        edges.append((labels[a], labels[b]))
    if not labels:
        raise GraphParseError("edge list contains no edges", None)
    return Graph.from_edges(len(labels), edges, node_labels=list(labels))


def read_edge_list(path: str | Path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def load_builtin(name: str) -> Graph:
    """Bundled networks: ``"karate"`` (N=34) and ``"lesmis"`` (N=77)."""
    ref = resources.files("synsis.data").joinpath(f"{name}.edges")
    if not ref.is_file():
        raise ValidationError(f"no bundled network named {name!r}")
    return parse_edge_list(ref.read_text(encoding="utf-8"))
