"""Variational graph autoencoder on numpy, and unit-norm edge embeddings.

A two-layer GCN encoder (shared first layer, separate mean / log-std heads)
is trained full batch against edge reconstruction with 1:1 negative sampling
plus a KL pull toward the standard normal prior. Gradients are analytic;
``vgae_loss`` exposes them so they can be checked against finite differences.
Inference uses the mean head only, which keeps everything downstream
deterministic.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .errors import DomainError, TrainingError

log = logging.getLogger(__name__)

_CACHE_MAGIC = b"TOAK-EMB-1\n"


@dataclass
class VgaeConfig:
    hidden1: int = 32
    hidden2: int = 16
    learning_rate: float = 0.001
    epochs: int = 1000
    seed: int = 0
    neg_ratio: float = 1.0
    optimizer: str = "adam"

    def __post_init__(self):
        if self.hidden1 < 1 or self.hidden2 < 1:
            raise DomainError("hidden dimensions must be >= 1")


@dataclass
class VgaeParams:
    """Encoder weights: input layer (d x h1) and the two heads (h1 x h2)."""

    w_in: np.ndarray
    w_mu: np.ndarray
    w_logstd: np.ndarray
    config: VgaeConfig = field(default_factory=VgaeConfig)

    def validate(self):
        for name, w in self.items():
            if not np.all(np.isfinite(w)):
                raise DomainError(f"non-finite entries in {name}")

    def items(self):
        return [("w_in", self.w_in), ("w_mu", self.w_mu), ("w_logstd", self.w_logstd)]

    def copy(self):
        return VgaeParams(self.w_in.copy(), self.w_mu.copy(), self.w_logstd.copy(), self.config)


@dataclass
class VgaeLossResult:
    loss: float
    recon: float
    kl: float
    grads: dict


def glorot_init(shape, rng):
    limit = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape)


def init_params(attr_dim, config, rng):
    return VgaeParams(
        w_in=glorot_init((attr_dim, config.hidden1), rng),
        w_mu=glorot_init((config.hidden1, config.hidden2), rng),
        w_logstd=glorot_init((config.hidden1, config.hidden2), rng),
        config=config,
    )


def normalized_adjacency(g):
    """Symmetric renormalized adjacency D^-1/2 (A + I) D^-1/2 (sparse CSR)."""
    a = g.adjacency() + sp.identity(g.n_nodes, format="csr")
    d = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(d)
    dmat = sp.diags(inv_sqrt)
    return (dmat @ a @ dmat).tocsr()


def gcn_layer(a_norm, h_in, w, activation="relu"):
    """One graph convolution: activation(a_norm @ h_in @ w)."""
    h_in = np.asarray(h_in, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if a_norm.shape[1] != h_in.shape[0] or h_in.shape[1] != w.shape[0]:
        raise DomainError(
            f"incompatible shapes {a_norm.shape} x {h_in.shape} x {w.shape}"
        )
    out = a_norm @ (h_in @ w)
    out = np.asarray(out)
    if activation == "relu":
        return np.maximum(out, 0.0)
    if activation == "identity":
        return out
    raise DomainError(f"unknown activation {activation!r}")


def encode(params, a_norm, x):
    """Forward pass; returns (mu, logstd)."""
    h1 = gcn_layer(a_norm, x, params.w_in, "relu")
    mu = gcn_layer(a_norm, h1, params.w_mu, "identity")
    logstd = gcn_layer(a_norm, h1, params.w_logstd, "identity")
    return mu, logstd


def sample_negative_edges(g, count, rng, max_rounds=100):
    """Uniform (i, j) pairs with i != j that are not edges of ``g``.

    Returns fewer than ``count`` pairs only when the graph has too few
    non-edges (near-complete graphs).
    """
    n = g.n_nodes
    available = n * (n - 1) // 2 - g.n_edges
    count = min(count, available)
    if count <= 0:
        return np.empty((0, 2), dtype=np.int64)
    out = []
    need = count
    for _ in range(max_rounds):
        i = rng.integers(0, n, size=2 * need)
        j = rng.integers(0, n, size=2 * need)
        mask = i != j
        i, j = i[mask], j[mask]
        for a, b in zip(i, j):
            if not g.has_edge(a, b):
                out.append((a, b))
                if len(out) == count:
                    return np.array(out, dtype=np.int64)
        need = count - len(out)
    return np.array(out, dtype=np.int64)


def vgae_loss(params, g, noise, neg_edges, a_norm=None):
    """Loss and analytic gradients for one full-batch step.

    The reconstruction part is the mean binary cross-entropy over positive
    edges and the supplied negative pairs, with per-pair logit z_i . z_j and
    z = mu + exp(logstd) * noise. The KL part is
    0.5 * sum(exp(2 logstd) + mu^2 - 1 - 2 logstd), weighted by 1/|V| in the
    total so reconstruction and prior stay balanced across graph sizes.

    Negative pairs are passed explicitly (not resampled inside) so the same
    loss can be re-evaluated under parameter perturbations.
    """
    n = g.n_nodes
    x = g.attributes
    if noise.shape != (n, params.w_mu.shape[1]):
        raise DomainError(f"noise shape {noise.shape} != ({n}, {params.w_mu.shape[1]})")
    if a_norm is None:
        a_norm = normalized_adjacency(g)

    p_in = np.asarray(a_norm @ x)
    u = p_in @ params.w_in
    h1 = np.maximum(u, 0.0)
    q = np.asarray(a_norm @ h1)
    mu = q @ params.w_mu
    lam = q @ params.w_logstd
    sig = np.exp(lam)
    z = mu + sig * noise

    pos = g.edges
    neg = np.asarray(neg_edges, dtype=np.int64).reshape(-1, 2)
    pairs = np.concatenate([pos, neg]) if (len(pos) or len(neg)) else np.empty((0, 2), np.int64)
    labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])

    n_pairs = len(pairs)
    dz = np.zeros_like(z)
    if n_pairs:
        zi = z[pairs[:, 0]]
        zj = z[pairs[:, 1]]
        scores = np.sum(zi * zj, axis=1)
        # bce = softplus(s) - y*s, numerically stable
        recon = float(np.mean(np.logaddexp(0.0, scores) - labels * scores))
        coef = (expit(scores) - labels)[:, None] / n_pairs
        np.add.at(dz, pairs[:, 0], coef * zj)
        np.add.at(dz, pairs[:, 1], coef * zi)
    else:
        recon = 0.0

    var = sig ** 2
    kl = 0.5 * float(np.sum(var + mu ** 2 - 1.0 - 2.0 * lam))
    loss = recon + kl / n

    g_mu = dz + mu / n
    g_lam = dz * noise * sig + (var - 1.0) / n
    grad_w_mu = q.T @ g_mu
    grad_w_logstd = q.T @ g_lam
    dq = g_mu @ params.w_mu.T + g_lam @ params.w_logstd.T
    dh1 = np.asarray(a_norm @ dq)
    du = dh1 * (u > 0.0)
    grad_w_in = p_in.T @ du

    return VgaeLossResult(
        loss=float(loss),
        recon=recon,
        kl=kl,
        grads={"w_in": grad_w_in, "w_mu": grad_w_mu, "w_logstd": grad_w_logstd},
    )


def fit_vgae(g, config=None):
    """Train the encoder full batch; returns the final parameters.

    Deterministic for a fixed seed: initialization, per-epoch noise and
    negative resampling all come from one seeded stream, consumed
    sequentially.
    """
    if g.n_nodes < 1:
        raise DomainError("need at least one node")
    config = config or VgaeConfig()
    rng = np.random.default_rng(config.seed)
    params = init_params(g.attributes.shape[1], config, rng)
    a_norm = normalized_adjacency(g)
    n_neg = int(round(config.neg_ratio * g.n_edges))

    state = {name: (np.zeros_like(w), np.zeros_like(w)) for name, w in params.items()}
    lr = config.learning_rate
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    for epoch in range(1, config.epochs + 1):
        noise = rng.standard_normal((g.n_nodes, config.hidden2))
        neg = sample_negative_edges(g, n_neg, rng)
        result = vgae_loss(params, g, noise, neg, a_norm=a_norm)
        if not np.isfinite(result.loss):
            raise TrainingError(f"non-finite loss {result.loss}", epoch=epoch)
        for name, w in params.items():
            grad = result.grads[name]
            if config.optimizer == "adam":
                m, v = state[name]
                m *= beta1
                m += (1 - beta1) * grad
                v *= beta2
                v += (1 - beta2) * grad ** 2
                mhat = m / (1 - beta1 ** epoch)
                vhat = v / (1 - beta2 ** epoch)
                w -= lr * mhat / (np.sqrt(vhat) + eps)
            elif config.optimizer == "sgd":
                w -= lr * grad
            else:
                raise DomainError(f"unknown optimizer {config.optimizer!r}")
    params.validate()
    return params


def train_vgae(g, config=None):
    """Train on ``g`` and return the mean-head embeddings, shape (|V|, h2)."""
    config = config or VgaeConfig()
    params = fit_vgae(g, config)
    a_norm = normalized_adjacency(g)
    mu, _ = encode(params, a_norm, g.attributes)
    if not np.all(np.isfinite(mu)):
        raise TrainingError("non-finite embeddings after training")
    return mu


def edge_embedding(embeddings, edge):
    """Unit-norm edge vector: endpoints' embeddings concatenated low id first.

    A zero concatenation (possible only for degenerate embeddings) falls back
    to the unit vector along the first coordinate and is flagged in the log.
    """
    u, w = edge
    lo, hi = (u, w) if u <= w else (w, u)
    vec = np.concatenate([embeddings[lo], embeddings[hi]])
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        log.warning("zero edge vector for (%d, %d); using fallback basis vector", u, w)
        vec = np.zeros_like(vec)
        vec[0] = 1.0
        return vec
    return vec / norm


def edge_embeddings_for(embeddings, edges):
    """Unit edge vectors for an (m, 2) canonical edge array, shape (m, 2*h2)."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) == 0:
        return np.empty((0, 2 * embeddings.shape[1]))
    lo = edges.min(axis=1)
    hi = edges.max(axis=1)
    vecs = np.hstack([embeddings[lo], embeddings[hi]])
    norms = np.linalg.norm(vecs, axis=1)
    zero = norms == 0.0
    if np.any(zero):
        log.warning("%d zero edge vectors; using fallback basis vector", int(zero.sum()))
        vecs[zero] = 0.0
        vecs[zero, 0] = 1.0
        norms[zero] = 1.0
    return vecs / norms[:, None]


def save_embeddings(path, embeddings, seed, config_hash):
    """Binary embedding cache: magic, a JSON header line, then row-major
    float64 payload."""
    emb = np.ascontiguousarray(embeddings, dtype=np.float64)
    header = {
        "n_nodes": emb.shape[0],
        "h2": emb.shape[1],
        "seed": int(seed),
        "config_hash": config_hash,
    }
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(emb.tobytes())


def load_embeddings(path, expect_hash=None):
    """Read an embedding cache; returns (embeddings, header).

    Raises DomainError when the stored config hash does not match
    ``expect_hash``.
    """
    with open(path, "rb") as fh:
        magic = fh.read(len(_CACHE_MAGIC))
        if magic != _CACHE_MAGIC:
            raise DomainError(f"{path}: not an embedding cache")
        header = json.loads(fh.readline().decode())
        payload = fh.read()
    n, h2 = header["n_nodes"], header["h2"]
    emb = np.frombuffer(payload, dtype=np.float64).reshape(n, h2).copy()
    if expect_hash is not None and header.get("config_hash") != expect_hash:
        raise DomainError(
            f"{path}: embedding cache config hash {header.get('config_hash')!r} "
            f"does not match expected {expect_hash!r}"
        )
    return emb, header
