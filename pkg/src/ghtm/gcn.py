"""Graph convolutional refinement of document embeddings.

A stack of GCN layers with residual connections is trained on cluster
batches of the document graph. The objective combines a margin hinge loss
over graph edges with a two-view contrastive loss whose views come from
independent feature- and edge-dropout masks. All gradients are derived by
hand; there is no autodiff dependency.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError, ShapeError, TrainingError
from .graph import ClusterBatch, ClusterPartition, DocumentGraph, batch_adjacency, cluster_batch

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
_NORM_EPS = 1e-12


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.005
    dropout: float = 0.4
    edge_dropout: float = 0.2
    margin: float = 0.5
    temperature: float = 0.5
    hinge_weight: float = 1.0
    contrastive_weight: float = 1.0
    negatives_per_edge: int = 1
    hidden_dims: tuple = (32, 32)
    output_dim: int = 64
    num_clusters: int = 1
    seed: int = 0

    def __post_init__(self):
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        if not (0 <= self.dropout < 1 and 0 <= self.edge_dropout < 1):
            raise ParameterError("dropout and edge_dropout must lie in [0, 1)")
        if self.margin <= 0 or self.temperature <= 0:
            raise ParameterError("margin and temperature must be positive")
        if self.hinge_weight < 0 or self.contrastive_weight < 0:
            raise ParameterError("loss weights must be non-negative")
        if self.negatives_per_edge < 1:
            raise ParameterError("negatives_per_edge must be >= 1")
        if self.epochs < 0:
            raise ParameterError("epochs must be >= 0")


class GcnModel:
    """Layer weights plus optional residual projections.

    ``projections[l]`` is ``None`` when layer ``l`` maps a dimension onto
    itself; the residual branch is then the identity.
    """

    def __init__(self, dims: Sequence[int], weights, projections):
        self.dims = [int(d) for d in dims]
        self.weights = list(weights)
        self.projections = list(projections)
        if len(self.weights) != len(self.dims) - 1:
            raise ShapeError("need one weight matrix per consecutive dim pair")
        for l, W in enumerate(self.weights):
            if W.shape != (self.dims[l], self.dims[l + 1]):
                raise ShapeError(f"layer {l} weight has shape {W.shape}")
            P = self.projections[l]
            if (P is None) != (self.dims[l] == self.dims[l + 1]):
                raise ShapeError(f"layer {l} residual projection mismatch")

    @classmethod
    def initialize(cls, dims: Sequence[int], rng: np.random.Generator) -> "GcnModel":
        """Glorot-uniform initialization of every matrix."""
        weights, projections = [], []
        for d_in, d_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / (d_in + d_out))
            weights.append(rng.uniform(-limit, limit, size=(d_in, d_out)))
            if d_in != d_out:
                projections.append(rng.uniform(-limit, limit, size=(d_in, d_out)))
            else:
                projections.append(None)
        return cls(dims, weights, projections)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def parameters(self) -> list[np.ndarray]:
        return self.weights + [P for P in self.projections if P is not None]

    def copy(self) -> "GcnModel":
        return GcnModel(
            self.dims,
            [W.copy() for W in self.weights],
            [None if P is None else P.copy() for P in self.projections],
        )

    def save(self, path) -> None:
        arrays = {"version": np.array(CHECKPOINT_VERSION), "dims": np.array(self.dims)}
        for l, W in enumerate(self.weights):
            arrays[f"W{l}"] = W
            if self.projections[l] is not None:
                arrays[f"P{l}"] = self.projections[l]
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> "GcnModel":
        with np.load(Path(path)) as z:
            version = int(z["version"])
            if version != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {version}")
            dims = z["dims"].tolist()
            weights = [z[f"W{l}"] for l in range(len(dims) - 1)]
            projections = [z[f"P{l}"] if f"P{l}" in z.files else None for l in range(len(dims) - 1)]
        return cls(dims, weights, projections)


@dataclass
class RefinedEmbeddings:
    matrix: np.ndarray
    model: Optional[GcnModel] = None
    loss_history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# forward / backward


@dataclass
class _LayerCache:
    h_in: np.ndarray
    adj: sp.csr_matrix
    pre: np.ndarray
    mask: Optional[np.ndarray]


def dropout_masks(model: GcnModel, n_nodes: int, p: float, rng) -> list:
    """Inverted-dropout masks for every layer input (``None`` when p == 0)."""
    if p <= 0:
        return [None] * model.n_layers
    keep = 1.0 - p
    return [
        (rng.random((n_nodes, d)) < keep).astype(np.float64) / keep for d in model.dims[:-1]
    ]


def edge_dropout_mask(adj: sp.csr_matrix, p: float, rng) -> Optional[np.ndarray]:
    """Multiplier for ``adj.data``: each undirected edge is kept or dropped as
    a unit and survivors are scaled by 1/(1-p); self-loops are always kept."""
    if p <= 0:
        return None
    coo_rows = np.repeat(np.arange(adj.shape[0]), np.diff(adj.indptr))
    cols = adj.indices
    lo = np.minimum(coo_rows, cols).astype(np.int64)
    hi = np.maximum(coo_rows, cols).astype(np.int64)
    keys, inverse = np.unique(lo * adj.shape[0] + hi, return_inverse=True)
    keep = (rng.random(keys.size) >= p) / (1.0 - p)
    mask = keep[inverse]
    mask[coo_rows == cols] = 1.0
    return mask


def forward(
    model: GcnModel,
    features: np.ndarray,
    adj: sp.csr_matrix,
    feature_dropout_mask=None,
    edge_dropout_mask=None,
    training: bool = False,
    return_cache: bool = False,
):
    """Run the network. Masks are ignored unless ``training`` is set.

    Each layer computes ``act(A @ (H @ W) + R(H))`` where ``R`` is the
    identity or the residual projection, and ``act`` is ReLU on hidden
    layers and the identity on the last one.
    """
    H = np.asarray(features, dtype=np.float64)
    if H.ndim != 2 or H.shape[1] != model.dims[0]:
        raise ShapeError(f"features have shape {H.shape}, model expects {model.dims[0]} columns")
    if adj.shape != (H.shape[0], H.shape[0]):
        raise ShapeError(f"adjacency shape {adj.shape} does not match {H.shape[0]} nodes")

    A = adj
    if training and edge_dropout_mask is not None:
        A = sp.csr_matrix((adj.data * edge_dropout_mask, adj.indices, adj.indptr), shape=adj.shape)
    caches = []
    for l in range(model.n_layers):
        mask = feature_dropout_mask[l] if (training and feature_dropout_mask is not None) else None
        h_in = H * mask if mask is not None else H
        pre = A @ (h_in @ model.weights[l])
        P = model.projections[l]
        pre += h_in @ P if P is not None else h_in
        H = np.maximum(pre, 0.0) if l < model.n_layers - 1 else pre
        caches.append(_LayerCache(h_in, A, pre, mask))
    return (H, caches) if return_cache else H


def backward(model: GcnModel, caches, grad_out: np.ndarray):
    """Gradients of a scalar loss w.r.t. weights and projections."""
    dW = [None] * model.n_layers
    dP = [None] * model.n_layers
    dH = grad_out
    for l in reversed(range(model.n_layers)):
        c = caches[l]
        dpre = dH * (c.pre > 0) if l < model.n_layers - 1 else dH
        dS = c.adj.T @ dpre
        dW[l] = c.h_in.T @ dS
        P = model.projections[l]
        if P is not None:
            dP[l] = c.h_in.T @ dpre
            dh_in = dS @ model.weights[l].T + dpre @ P.T
        else:
            dh_in = dS @ model.weights[l].T + dpre
        if l > 0:
            dH = dh_in * c.mask if c.mask is not None else dh_in
    return dW, dP


# ---------------------------------------------------------------------------
# losses


def _unit_rows(Z):
    norms = np.maximum(np.linalg.norm(Z, axis=1, keepdims=True), _NORM_EPS)
    return Z / norms, norms


def _unit_rows_backward(U, norms, dU):
    return (dU - U * np.sum(U * dU, axis=1, keepdims=True)) / norms


def hinge_triplet_loss(Z, anchors, positives, negatives, margin, return_grad=False):
    """Mean of ``max(0, margin - cos(z_a, z_p) + cos(z_a, z_n))``."""
    anchors = np.asarray(anchors, dtype=np.int64)
    if anchors.size == 0:
        return (0.0, np.zeros_like(Z)) if return_grad else 0.0
    positives = np.asarray(positives, dtype=np.int64)
    negatives = np.asarray(negatives, dtype=np.int64)
    U, norms = _unit_rows(Z)
    Ua = U[anchors]
    cos_p = np.sum(Ua * U[positives], axis=1)
    cos_n = np.sum(Ua * U[negatives], axis=1)
    viol = margin - cos_p + cos_n
    loss = float(np.mean(np.maximum(viol, 0.0)))
    if not return_grad:
        return loss
    w = (viol > 0).astype(np.float64)[:, None] / anchors.size
    dU = np.zeros_like(U)
    np.add.at(dU, anchors, w * (U[negatives] - U[positives]))
    np.add.at(dU, positives, -w * Ua)
    np.add.at(dU, negatives, w * Ua)
    return loss, _unit_rows_backward(U, norms, dU)


def hinge_loss(emb, pos_pairs, neg_pairs, margin: float = 0.5) -> float:
    """Hinge loss over aligned positive and negative pairs.

    ``neg_pairs`` may hold ``r`` consecutive negatives per positive pair;
    the anchor of every negative must match its positive.
    """
    pos = np.asarray(pos_pairs, dtype=np.int64).reshape(-1, 2)
    neg = np.asarray(neg_pairs, dtype=np.int64).reshape(-1, 2)
    if len(pos) == 0 or len(neg) == 0:
        return 0.0
    if len(neg) % len(pos):
        raise ParameterError("negatives must be aligned with positives")
    pos = np.repeat(pos, len(neg) // len(pos), axis=0)
    if not np.array_equal(pos[:, 0], neg[:, 0]):
        raise ParameterError("negative pair anchors do not match positive pair anchors")
    return hinge_triplet_loss(np.asarray(emb, dtype=np.float64), pos[:, 0], pos[:, 1], neg[:, 1], margin)


def contrastive_loss(view1, view2, temperature: float = 0.5, return_grad=False):
    """Symmetric NT-Xent between two views of the same nodes.

    Every anchor's positive is the same node in the other view; all other
    nodes of both views are negatives. Returns 0 for fewer than 2 nodes.
    """
    view1 = np.asarray(view1, dtype=np.float64)
    view2 = np.asarray(view2, dtype=np.float64)
    B = view1.shape[0]
    if B < 2:
        zero = (np.zeros_like(view1), np.zeros_like(view2))
        return (0.0, *zero) if return_grad else 0.0
    U1, n1 = _unit_rows(view1)
    U2, n2 = _unit_rows(view2)
    Z = np.vstack([U1, U2])
    S = (Z @ Z.T) / temperature
    np.fill_diagonal(S, -np.inf)
    pos = np.concatenate([np.arange(B, 2 * B), np.arange(B)])
    rows = np.arange(2 * B)
    smax = S.max(axis=1, keepdims=True)
    E = np.exp(S - smax)
    denom = E.sum(axis=1, keepdims=True)
    lse = np.log(denom[:, 0]) + smax[:, 0]
    loss = float(np.mean(lse - S[rows, pos]))
    if not return_grad:
        return loss
    dS = E / denom
    dS[rows, pos] -= 1.0
    dS /= 2 * B
    dZ = (dS + dS.T) @ Z / temperature
    d1 = _unit_rows_backward(U1, n1, dZ[:B])
    d2 = _unit_rows_backward(U2, n2, dZ[B:])
    return loss, d1, d2


# ---------------------------------------------------------------------------
# negative sampling


def sample_negatives(g: DocumentGraph, edges, count_per_edge: int, rng, candidates=None, return_index=False):
    """Draw ``count_per_edge`` negatives for every positive pair ``(u, v)``.

    Negatives are uniform over ``candidates`` (default: all graph nodes)
    minus ``u`` and its neighbors. Pairs whose anchor has no valid negative
    are skipped. With ``return_index`` the positive-pair index of each
    negative is returned too.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    pool = np.arange(g.n_nodes) if candidates is None else np.asarray(candidates, dtype=np.int64)
    out, index = [], []
    allowed_cache: dict[int, np.ndarray] = {}
    for i, (u, _v) in enumerate(edges.tolist()):
        allowed = allowed_cache.get(u)
        if allowed is None:
            bad = np.append(g.neighbors[u], u)
            allowed = pool[~np.isin(pool, bad)]
            allowed_cache[u] = allowed
        if allowed.size == 0:
            continue
        picks = allowed[rng.integers(allowed.size, size=count_per_edge)]
        out.extend((u, int(n)) for n in picks)
        index.extend([i] * count_per_edge)
    pairs = np.array(out, dtype=np.int64).reshape(-1, 2)
    if return_index:
        return pairs, np.array(index, dtype=np.int64)
    return pairs


# ---------------------------------------------------------------------------
# training


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class BatchData:
    """Everything about one cluster batch that stays fixed across epochs."""

    nodes: np.ndarray
    n_core: int
    adj: sp.csr_matrix
    anchors: np.ndarray
    positives: np.ndarray
    candidates: list

    @classmethod
    def build(cls, g: DocumentGraph, adj: sp.csr_matrix, batch: ClusterBatch) -> "BatchData":
        nodes = batch.nodes
        n_core = len(batch.core)
        local = np.full(g.n_nodes, -1, dtype=np.int64)
        local[nodes] = np.arange(len(nodes))
        anchors, positives = [], []
        for u, v in batch.edges.tolist():
            if local[u] < n_core:
                anchors.append(local[u])
                positives.append(local[v])
            if local[v] < n_core:
                anchors.append(local[v])
                positives.append(local[u])
        order = np.lexsort((positives, anchors))
        anchors = np.array(anchors, dtype=np.int64)[order]
        positives = np.array(positives, dtype=np.int64)[order]
        everyone = np.arange(len(nodes))
        candidates = []
        for a in range(n_core):
            bad = local[np.append(g.neighbors[nodes[a]], nodes[a])]
            candidates.append(everyone[~np.isin(everyone, bad[bad >= 0])])
        return cls(nodes, n_core, batch_adjacency(adj, batch), anchors, positives, candidates)

    def sample_triplets(self, count: int, rng):
        a_out, p_out, n_out = [], [], []
        if self.anchors.size == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, empty
        starts = np.flatnonzero(np.r_[True, self.anchors[1:] != self.anchors[:-1]])
        stops = np.r_[starts[1:], self.anchors.size]
        for lo, hi in zip(starts.tolist(), stops.tolist()):
            a = int(self.anchors[lo])
            cands = self.candidates[a]
            if cands.size == 0:
                continue
            m = (hi - lo) * count
            a_out.append(np.full(m, a, dtype=np.int64))
            p_out.append(np.repeat(self.positives[lo:hi], count))
            n_out.append(cands[rng.integers(cands.size, size=m)])
        if not a_out:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, empty
        return np.concatenate(a_out), np.concatenate(p_out), np.concatenate(n_out)


def joint_loss_and_grads(
    model: GcnModel,
    features: np.ndarray,
    adj: sp.csr_matrix,
    n_core: int,
    triplets,
    config: TrainConfig,
    view_masks=((None, None), (None, None)),
    need_grad: bool = True,
):
    """Joint objective on one batch and its exact gradients.

    ``view_masks`` holds ``(feature_masks, edge_mask)`` for each of the two
    stochastic passes. Returns ``(loss, grads)`` where ``grads`` is aligned
    with ``model.parameters()``.
    """
    training = any(m is not None for pair in view_masks for m in pair)
    (f1, e1), (f2, e2) = view_masks
    Z1, c1 = forward(model, features, adj, f1, e1, training=training, return_cache=True)
    Z2, c2 = forward(model, features, adj, f2, e2, training=training, return_cache=True)
    anchors, positives, negatives = triplets

    loss = 0.0
    dZ1 = np.zeros_like(Z1)
    dZ2 = np.zeros_like(Z2)
    if config.hinge_weight > 0:
        h, dh = hinge_triplet_loss(Z1, anchors, positives, negatives, config.margin, return_grad=True)
        loss += config.hinge_weight * h
        dZ1 += config.hinge_weight * dh
    if config.contrastive_weight > 0:
        c, d1, d2 = contrastive_loss(Z1[:n_core], Z2[:n_core], config.temperature, return_grad=True)
        loss += config.contrastive_weight * c
        dZ1[:n_core] += config.contrastive_weight * d1
        dZ2[:n_core] += config.contrastive_weight * d2
    if not need_grad:
        return loss, None
    dW1, dP1 = backward(model, c1, dZ1)
    dW2, dP2 = backward(model, c2, dZ2)
    grads = [a + b for a, b in zip(dW1, dW2)]
    grads += [a + b for a, b in zip(dP1, dP2) if a is not None]
    return loss, grads


def prepare_batches(g: DocumentGraph, adj: sp.csr_matrix, partition: ClusterPartition) -> list[BatchData]:
    return [BatchData.build(g, adj, cluster_batch(g, partition, c)) for c in range(partition.num_clusters)]


def evaluate_loss(model, features, batches: list[BatchData], config: TrainConfig, seed=0) -> float:
    """Mean joint loss over all batches with dropout disabled and a fixed
    negative sample drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    total = 0.0
    for b in batches:
        trip = b.sample_triplets(config.negatives_per_edge, rng)
        loss, _ = joint_loss_and_grads(model, features[b.nodes], b.adj, b.n_core, trip, config, need_grad=False)
        total += loss
    return total / len(batches)


def train(
    features,
    g: DocumentGraph,
    adj: sp.csr_matrix,
    partition: ClusterPartition,
    config: TrainConfig,
    callback: Optional[Callable[[int, GcnModel], None]] = None,
) -> RefinedEmbeddings:
    """Fit the GCN with cluster batches and return refined embeddings.

    ``callback(epoch, model)`` runs after every epoch (1-based).
    """
    X = np.asarray(getattr(features, "matrix", features), dtype=np.float64)
    if X.shape[0] != g.n_nodes:
        raise ShapeError(f"{X.shape[0]} feature rows for a {g.n_nodes}-node graph")
    dims = [X.shape[1], *config.hidden_dims, config.output_dim]
    init_ss, loop_ss = np.random.SeedSequence(config.seed).spawn(2)
    model = GcnModel.initialize(dims, np.random.default_rng(init_ss))
    rng = np.random.default_rng(loop_ss)
    params = model.parameters()
    opt = Adam(params, config.learning_rate)

    batches = prepare_batches(g, adj, partition)
    history = []
    for epoch in range(1, config.epochs + 1):
        epoch_loss = 0.0
        for bi in rng.permutation(len(batches)).tolist():
            b = batches[bi]
            feats = X[b.nodes]
            masks = tuple(
                (
                    dropout_masks(model, len(b.nodes), config.dropout, rng),
                    edge_dropout_mask(b.adj, config.edge_dropout, rng),
                )
                for _ in range(2)
            )
            trip = b.sample_triplets(config.negatives_per_edge, rng)
            loss, grads = joint_loss_and_grads(model, feats, b.adj, b.n_core, trip, config, masks)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(gr)) for gr in grads):
                raise TrainingError(f"non-finite loss at epoch {epoch}, cluster batch {bi}")
            opt.step(grads)
            epoch_loss += loss
        history.append(epoch_loss / len(batches))
        log.debug("epoch %d loss %.6f", epoch, history[-1])
        if callback is not None:
            callback(epoch, model)

    out = forward(model, X, adj, training=False)
    if not np.all(np.isfinite(out)):
        raise TrainingError("refined embeddings contain non-finite values")
    return RefinedEmbeddings(out, model, history)
