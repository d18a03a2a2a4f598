"""Relaxed-minimum-spanning-tree sparsification of the similarity matrix.

The full kernel matrix is pruned to a connected weighted graph: the MST of
the distance matrix is always kept, and a non-tree edge (i, j) survives iff

    d_ij <= mlink_ij + gamma * (d_i^(k) + d_j^(k))

where mlink_ij is the largest distance on the MST path between i and j and
d_i^(k) is the distance from i to its k-th nearest neighbour.  Surviving
edges are weighted by kernel similarity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dtw import SimilarityMatrix


@dataclass
class RmstConfig:
    gamma: float = 0.5
    k: int = 1

    def validate(self, n: int) -> None:
        if self.gamma < 0 or not np.isfinite(self.gamma):
            raise ValueError("gamma must be finite and >= 0")
        if not 1 <= self.k < n:
            raise ValueError(f"k must satisfy 1 <= k < n (got k={self.k}, n={n})")


@dataclass
class SimGraph:
    """Undirected weighted graph of learners; connected by construction."""

    ids: list[str]
    adjacency: np.ndarray  # similarity weights, zero diagonal

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=float)
        n = len(self.ids)
        if self.adjacency.shape != (n, n):
            raise ValueError("adjacency shape does not match id count")
        if not np.allclose(self.adjacency, self.adjacency.T):
            raise ValueError("adjacency not symmetric")
        if np.any(np.diag(self.adjacency) != 0):
            raise ValueError("self-loops not allowed")
        if not _is_connected(self.adjacency > 0):
            raise ValueError("graph is disconnected")

    @property
    def n(self) -> int:
        return len(self.ids)

    def edges(self) -> list[tuple[int, int, float]]:
        ii, jj = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(i), int(j), float(self.adjacency[i, j])) for i, j in zip(ii, jj)]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency, k=1)))

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def to_networkx(self, labels=None):
        import networkx as nx

        g = nx.Graph()
        for i, lid in enumerate(self.ids):
            attrs = {"learner_id": lid}
            if labels is not None:
                attrs["cluster"] = int(labels[i])
            g.add_node(lid, **attrs)
        for i, j, w in self.edges():
            g.add_edge(self.ids[i], self.ids[j], weight=w)
        return g

    def write_graphml(self, path, labels=None) -> None:
        import networkx as nx

        nx.write_graphml(self.to_networkx(labels=labels), path)


def _is_connected(mask: np.ndarray) -> bool:
    n = mask.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for v in np.nonzero(mask[u])[0]:
            if not seen[v]:
                seen[v] = True
                stack.append(int(v))
    return bool(seen.all())


def _check_distance_matrix(distances: np.ndarray) -> np.ndarray:
    distances = np.asarray(distances, dtype=float)
    n = distances.shape[0]
    if distances.ndim != 2 or distances.shape != (n, n) or n < 2:
        raise ValueError("distance matrix must be square with n >= 2")
    if not np.all(np.isfinite(distances)):
        raise ValueError("distance matrix has non-finite entries")
    if not np.array_equal(distances, distances.T):
        raise ValueError("distance matrix not symmetric")
    if np.any(np.diag(distances) != 0):
        raise ValueError("distance matrix diagonal must be zero")
    return distances


def minimum_spanning_tree(distances) -> list[tuple[int, int]]:
    """Kruskal MST with lexicographic (d, i, j) tie-breaking.

    Returns n-1 edges as (i, j) pairs with i < j, sorted lexicographically.
    """
    d = _check_distance_matrix(distances)
    n = d.shape[0]
    ii, jj = np.triu_indices(n, k=1)
    order = np.lexsort((jj, ii, d[ii, jj]))
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    edges: list[tuple[int, int]] = []
    for idx in order:
        i, j = int(ii[idx]), int(jj[idx])
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j))
            if len(edges) == n - 1:
                break
    edges.sort()
    return edges


def _mst_max_link(distances: np.ndarray, mst_edges) -> np.ndarray:
    """mlink[i, j]: largest edge distance on the MST path from i to j."""
    n = distances.shape[0]
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for i, j in mst_edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    mlink = np.zeros((n, n))
    for root in range(n):
        seen = np.zeros(n, dtype=bool)
        seen[root] = True
        stack = [root]
        while stack:
            u = stack.pop()
            for v in nbrs[u]:
                if not seen[v]:
                    seen[v] = True
                    mlink[root, v] = max(mlink[root, u], distances[u, v])
                    stack.append(v)
    return mlink


def rmst_graph(sim: SimilarityMatrix, cfg: RmstConfig | None = None) -> SimGraph:
    """Sparsify a similarity matrix with the relaxed-MST retention rule."""
    cfg = cfg or RmstConfig()
    d = _check_distance_matrix(sim.distances)
    n = d.shape[0]
    cfg.validate(n)
    mst_edges = minimum_spanning_tree(d)
    mlink = _mst_max_link(d, mst_edges)
    # distance to the k-th nearest other node
    sorted_d = np.sort(d + np.diag(np.full(n, np.inf)), axis=1)
    dk = sorted_d[:, cfg.k - 1]
    keep = d <= mlink + cfg.gamma * np.add.outer(dk, dk)
    np.fill_diagonal(keep, False)
    for i, j in mst_edges:
        keep[i, j] = keep[j, i] = True
    keep &= keep.T
    adjacency = np.where(keep, sim.similarities, 0.0)
    np.fill_diagonal(adjacency, 0.0)
    graph = SimGraph(list(sim.ids), adjacency)
    assert graph.n_edges >= n - 1
    return graph


def knn_graph(sim: SimilarityMatrix, k: int) -> SimGraph:
    """Plain symmetrized k-nearest-neighbour graph (robustness experiments).

    Raises if the union graph is disconnected; RMST is the default
    sparsifier precisely because it cannot disconnect.
    """
    d = _check_distance_matrix(sim.distances)
    n = d.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n (got k={k}, n={n})")
    keep = np.zeros((n, n), dtype=bool)
    masked = d + np.diag(np.full(n, np.inf))
    for i in range(n):
        nearest = np.argsort(masked[i], kind="stable")[:k]
        keep[i, nearest] = True
    keep |= keep.T
    adjacency = np.where(keep, sim.similarities, 0.0)
    np.fill_diagonal(adjacency, 0.0)
    return SimGraph(list(sim.ids), adjacency)
