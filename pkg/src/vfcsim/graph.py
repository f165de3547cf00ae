"""Collaboration networks: construction, ingestion and team partitioning."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np


class EdgeListError(ValueError):
    """Raised for unparseable or empty edge-list input."""


class DroppedEdgesWarning(UserWarning):
    """Emitted when ingestion drops self-loops or duplicate edges."""

    def __init__(self, self_loops: int, duplicates: int):
        self.self_loops = self_loops
        self.duplicates = duplicates
        super().__init__(
            f"dropped {self_loops} self-loop(s) and {duplicates} duplicate edge(s)"
        )


@dataclass(frozen=True)
class CollaborationGraph:
    """Undirected simple graph over dense user indices 0..n_users-1.

    ``adjacency[u]`` is the strictly increasing tuple of collaborators of u.
    ``labels`` optionally maps each dense index to its external string id.
    """

    adjacency: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] | None = None

    @property
    def n_users(self) -> int:
        return len(self.adjacency)

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    yield (u, v)

    def label(self, u: int) -> str:
        return self.labels[u] if self.labels is not None else str(u)

    def validate(self) -> None:
        """Check symmetry and simplicity; raise ``ValueError`` on violation."""
        n = self.n_users
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("labels length does not match n_users")
        for u, nbrs in enumerate(self.adjacency):
            prev = -1
            for v in nbrs:
                if not 0 <= v < n:
                    raise ValueError(f"neighbor {v} of {u} out of range")
                if v <= prev:
                    raise ValueError(f"adjacency of {u} not strictly sorted")
                if v == u:
                    raise ValueError(f"self-loop at {u}")
                prev = v
        for u, v in self.edges():
            if not _contains(self.adjacency[v], u):
                raise ValueError(f"edge ({u}, {v}) is not symmetric")

    @classmethod
    def from_edges(
        cls,
        n_users: int,
        edges: Iterable[tuple[int, int]],
        labels: Sequence[str] | None = None,
    ) -> "CollaborationGraph":
        nbrs: list[set[int]] = [set() for _ in range(n_users)]
        for u, v in edges:
            if u == v:
                continue
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(
            adjacency=tuple(tuple(sorted(s)) for s in nbrs),
            labels=tuple(labels) if labels is not None else None,
        )

    def to_json(self) -> dict:
        return {
            "n_users": self.n_users,
            "edges": [[u, v] for u, v in self.edges()],
            "labels": list(self.labels) if self.labels is not None else None,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CollaborationGraph":
        graph = cls.from_edges(
            int(data["n_users"]),
            ((int(u), int(v)) for u, v in data["edges"]),
            data.get("labels"),
        )
        graph.validate()
        return graph

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))


def _contains(sorted_tuple: tuple[int, ...], x: int) -> bool:
    from bisect import bisect_left

    i = bisect_left(sorted_tuple, x)
    return i < len(sorted_tuple) and sorted_tuple[i] == x


@dataclass(frozen=True)
class TeamAssignment:
    team_of: tuple[int, ...]
    n_teams: int

    def members(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_teams)]
        for u, t in enumerate(self.team_of):
            out[t].append(u)
        return out


def generate_configuration_model(
    degree_sequence: Sequence[int], seed: int
) -> CollaborationGraph:
    """Random stub matching followed by removal of self-loops and multi-edges.

    Collapsed edges are dropped, not rewired, so realized degrees may fall
    below the requested ones. If the stub total is odd, one stub is removed
    from a seeded-random node of positive degree.
    """
    degrees = np.asarray(list(degree_sequence), dtype=np.int64)
    if degrees.size == 0:
        raise ValueError("degree sequence is empty")
    if (degrees < 0).any():
        raise ValueError("degree sequence contains negative entries")
    rng = np.random.default_rng(seed)
    degrees = degrees.copy()
    if degrees.sum() % 2 == 1:
        candidates = np.flatnonzero(degrees > 0)
        degrees[rng.choice(candidates)] -= 1
    stubs = np.repeat(np.arange(degrees.size), degrees)
    rng.shuffle(stubs)
    pairs = stubs.reshape(-1, 2)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    return CollaborationGraph.from_edges(int(degrees.size), map(tuple, pairs.tolist()))


def ingest_edge_list(lines: Iterable[str]) -> CollaborationGraph:
    """Build a graph from ``"id_a id_b"`` records.

    Labels are assigned dense indices in order of first appearance. Lines that
    are blank or start with ``#`` are skipped.
    """
    index: dict[str, int] = {}
    labels: list[str] = []
    edges: set[tuple[int, int]] = set()
    self_loops = duplicates = 0

    def idx(label: str) -> int:
        if label not in index:
            index[label] = len(labels)
            labels.append(label)
        return index[label]

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListError(f"line {lineno}: expected two labels, got {len(parts)}")
        a, b = idx(parts[0]), idx(parts[1])
        if a == b:
            self_loops += 1
            continue
        key = (a, b) if a < b else (b, a)
        if key in edges:
            duplicates += 1
            continue
        edges.add(key)

    if not labels:
        raise EdgeListError("edge list is empty")
    if self_loops or duplicates:
        warnings.warn(DroppedEdgesWarning(self_loops, duplicates), stacklevel=2)
    return CollaborationGraph.from_edges(len(labels), edges, labels)


def degree_sequence(graph: CollaborationGraph) -> list[int]:
    return [len(a) for a in graph.adjacency]


def detect_teams(graph: CollaborationGraph) -> TeamAssignment:
    """Label teams as the connected components of the undirected graph.

    Union-find with path halving; team ids are dense and ordered by the
    smallest member of each component.
    """
    parent = list(range(graph.n_users))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in graph.edges():
        ru, rv = find(u), find(v)
        if ru != rv:
            if ru < rv:
                parent[rv] = ru
            else:
                parent[ru] = rv

    team_id: dict[int, int] = {}
    team_of = []
    for u in range(graph.n_users):
        root = find(u)
        if root not in team_id:
            team_id[root] = len(team_id)
        team_of.append(team_id[root])
    return TeamAssignment(team_of=tuple(team_of), n_teams=len(team_id))


def resample_degrees(source: Sequence[int], n: int, seed: int) -> list[int]:
    """Draw ``n`` degrees with replacement from an empirical degree sample."""
    if n < 1:
        raise ValueError("n must be positive")
    source = np.asarray(list(source), dtype=np.int64)
    if source.size == 0:
        raise ValueError("empty source degree sample")
    rng = np.random.default_rng(seed)
    return rng.choice(source, size=n, replace=True).tolist()


def lognormal_degrees(
    n: int,
    mean_degree: float,
    sigma: float,
    seed: int,
    min_degree: int = 0,
    max_degree: int | None = None,
) -> list[int]:
    """Heavy-tailed integer degree sample with the requested mean.

    Degrees are ``round(exp(N(mu, sigma)))`` clipped to
    ``[min_degree, max_degree]``; ``mu`` is set so the unclipped mean matches
    ``mean_degree``.
    """
    if mean_degree <= 0:
        raise ValueError("mean_degree must be positive")
    rng = np.random.default_rng(seed)
    mu = np.log(mean_degree) - sigma**2 / 2
    raw = np.rint(np.exp(rng.normal(mu, sigma, size=n))).astype(np.int64)
    hi = max_degree if max_degree is not None else n - 1
    return np.clip(raw, min_degree, hi).tolist()


def read_graph(path) -> CollaborationGraph:
    with open(path, encoding="utf-8") as fh:
        return CollaborationGraph.from_json(json.load(fh))


def read_edge_list(path) -> CollaborationGraph:
    with open(path, encoding="utf-8") as fh:
        return ingest_edge_list(fh)


def mean_relative_deficit(requested: Sequence[int], graph: CollaborationGraph) -> float:
    """Mean of (requested - realized) / requested over nodes with requested > 0."""
    realized = degree_sequence(graph)
    terms = [(r - d) / r for r, d in zip(requested, realized) if r > 0]
    return float(np.mean(terms)) if terms else 0.0
