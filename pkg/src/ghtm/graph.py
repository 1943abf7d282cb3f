"""KNN document graph, GCN normalization and cluster batching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError


@dataclass(frozen=True)
class DocumentGraph:
    """Undirected graph. ``edges`` is an (E, 2) array with ``u < v``, sorted."""

    n_nodes: int
    edges: np.ndarray
    weights: np.ndarray
    neighbors: tuple

    def degree(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=np.int64)

    def binary_adjacency(self) -> sp.csr_matrix:
        u, v = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.ones(rows.size, dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n_nodes, self.n_nodes))

    @classmethod
    def from_edges(cls, n_nodes: int, edge_weights: dict) -> "DocumentGraph":
        keys = sorted(edge_weights)
        edges = np.array(keys, dtype=np.int64).reshape(-1, 2)
        weights = np.array([edge_weights[k] for k in keys], dtype=np.float64)
        nbrs: list[list[int]] = [[] for _ in range(n_nodes)]
        for u, v in keys:
            nbrs[u].append(v)
            nbrs[v].append(u)
        neighbors = tuple(np.array(sorted(nb), dtype=np.int64) for nb in nbrs)
        return cls(n_nodes, edges, weights, neighbors)


@dataclass(frozen=True)
class ClusterPartition:
    assignment: np.ndarray
    num_clusters: int

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cluster_id)


@dataclass(frozen=True)
class ClusterBatch:
    """One Cluster-GCN batch.

    ``nodes`` lists core nodes first, then halo nodes, each ascending; local
    index ``i`` refers to ``nodes[i]``. ``edges`` holds global ``(u, v)``
    pairs with ``u < v`` and at least one core endpoint.
    """

    core: np.ndarray
    halo: np.ndarray
    edges: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([self.core, self.halo])


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def _unit_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X, dtype=np.float64), where=norms > 0)


def _exact_knn(X: np.ndarray, k: int, block: int = 1024) -> tuple[np.ndarray, np.ndarray]:
    # brute force; ties go to the lower index via stable sort
    U = _unit_rows(np.asarray(X, dtype=np.float64))
    n = U.shape[0]
    idx = np.empty((n, k), dtype=np.int64)
    sims = np.empty((n, k), dtype=np.float64)
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        S = np.clip(U[lo:hi] @ U.T, -1.0, 1.0)
        S[np.arange(hi - lo), np.arange(lo, hi)] = -np.inf
        order = np.argsort(-S, axis=1, kind="stable")[:, :k]
        idx[lo:hi] = order
        sims[lo:hi] = np.take_along_axis(S, order, axis=1)
    return idx, sims


_KNN_BACKENDS = {"exact": _exact_knn}


def build_knn_graph(X, k: int, backend: str = "exact") -> DocumentGraph:
    """Union-symmetrized cosine KNN graph over the rows of ``X``."""
    X = getattr(X, "matrix", X)
    n = X.shape[0]
    if k < 1:
        raise ParameterError("k must be >= 1")
    if n < 2 or k >= n:
        raise ParameterError(f"need 1 <= k < N, got k={k}, N={n}")
    idx, sims = _KNN_BACKENDS[backend](X, k)
    edges: dict[tuple[int, int], float] = {}
    for u in range(n):
        for v, s in zip(idx[u].tolist(), sims[u].tolist()):
            key = (u, v) if u < v else (v, u)
            edges[key] = s
    return DocumentGraph.from_edges(n, edges)


def normalize_adjacency(g: DocumentGraph) -> sp.csr_matrix:
    """Symmetric ``D^-1/2 (A + I) D^-1/2`` with binary ``A``."""
    A = g.binary_adjacency() + sp.identity(g.n_nodes, format="csr")
    d = np.asarray(A.sum(axis=1)).ravel()
    inv_sqrt = sp.diags(1.0 / np.sqrt(d))
    out = (inv_sqrt @ A @ inv_sqrt).tocsr()
    out.sort_indices()
    return out


def kmeans(X: np.ndarray, n_clusters: int, seed=0, max_iter: int = 100) -> np.ndarray:
    """Lloyd's k-means with k-means++ seeding; returns labels."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    rng = np.random.default_rng(seed)

    centers = np.empty((n_clusters, X.shape[1]))
    chosen = [int(rng.integers(n))]
    centers[0] = X[chosen[0]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, n_clusters):
        total = d2.sum()
        if total > 0:
            i = int(rng.choice(n, p=d2 / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            i = int(rng.choice(rest))
        chosen.append(i)
        centers[c] = X[i]
        d2 = np.minimum(d2, np.sum((X - X[i]) ** 2, axis=1))

    sq = np.sum(X**2, axis=1)
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        dist = sq[:, None] - 2.0 * X @ centers.T + np.sum(centers**2, axis=1)[None, :]
        new = np.argmin(dist, axis=1)
        new = _repair_empty(X, new, n_clusters, centers)
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(n_clusters):
            centers[c] = X[labels == c].mean(axis=0)
    return labels


def _repair_empty(X, labels, n_clusters, centers):
    labels = labels.copy()
    while True:
        sizes = np.bincount(labels, minlength=n_clusters)
        empty = np.flatnonzero(sizes == 0)
        if empty.size == 0:
            return labels
        largest = int(np.argmax(sizes))
        members = np.flatnonzero(labels == largest)
        far = members[np.argmax(np.sum((X[members] - centers[largest]) ** 2, axis=1))]
        labels[far] = empty[0]
        centers[empty[0]] = X[far]


def partition_graph(X, num_clusters: int, seed=0) -> ClusterPartition:
    X = getattr(X, "matrix", X)
    n = X.shape[0]
    if not 1 <= num_clusters <= n:
        raise ParameterError(f"num_clusters must be in [1, {n}], got {num_clusters}")
    if num_clusters == 1:
        return ClusterPartition(np.zeros(n, dtype=np.int64), 1)
    return ClusterPartition(kmeans(X, num_clusters, seed), num_clusters)


def cluster_batch(g: DocumentGraph, partition: ClusterPartition, cluster_id: int) -> ClusterBatch:
    if not 0 <= cluster_id < partition.num_clusters:
        raise ParameterError(f"cluster_id {cluster_id} out of range")
    in_core = partition.assignment == cluster_id
    core = np.flatnonzero(in_core)
    halo = set()
    for u in core:
        for v in g.neighbors[u]:
            if not in_core[v]:
                halo.add(int(v))
    halo_arr = np.array(sorted(halo), dtype=np.int64)
    if len(g.edges):
        touch = in_core[g.edges[:, 0]] | in_core[g.edges[:, 1]]
        edges = g.edges[touch]
    else:
        edges = g.edges
    return ClusterBatch(core, halo_arr, edges)


def batch_adjacency(adj: sp.csr_matrix, batch: ClusterBatch) -> sp.csr_matrix:
    """Restrict the global normalized adjacency to a batch.

    Keeps self-loops for every batch node and the entries of batch edges;
    halo-halo links are dropped. Entries keep their full-graph values.
    """
    nodes = batch.nodes
    n_core = len(batch.core)
    sub = adj[nodes][:, nodes].tocoo()
    keep = (sub.row < n_core) | (sub.col < n_core) | (sub.row == sub.col)
    out = sp.csr_matrix(
        (sub.data[keep], (sub.row[keep], sub.col[keep])), shape=(len(nodes), len(nodes))
    )
    out.sort_indices()
    return out


def write_edge_list(g: DocumentGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (u, v), w in zip(g.edges.tolist(), g.weights.tolist()):
            fh.write(f"{u} {v} {w!r}\n")
