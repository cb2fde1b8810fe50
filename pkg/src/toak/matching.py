"""Victim-side machinery: cross-network matchers and attack metrics.

Two matchers are provided as attack targets. The closed-form matcher scores
every (source, target) node pair with the edge-distribution kernel between
their ego networks and mixes in the prior: M = Phi / (2 alpha) + H. The
propagation matcher iterates pairwise similarity through both adjacency
structures, anchored at the prior. Metrics: mismatching rate (1 - top-1
accuracy over held-out anchor pairs) and the per-node fraction of edges an
attack left untouched.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .attack import ego_distribution, edge_probabilities
from .errors import DomainError, GraphFormatError
from .graph import k_ego, random_walks
from .kernel import edd_kernel
from .seeds import derive_seed
from .vgae import VgaeConfig, edge_embeddings_for, train_vgae


@dataclass(frozen=True)
class MatchingMatrix:
    """Dense (|V_source|, |V_target|) linkage scores."""

    m: np.ndarray
    alpha: float | None = None

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.ndim != 2:
            raise DomainError("matching matrix must be 2-d")
        if not np.all(np.isfinite(m)):
            raise DomainError("matching matrix has non-finite entries")
        object.__setattr__(self, "m", m)


@dataclass
class GroundTruth:
    """One-to-one anchor pairs between source and target node ids."""

    pairs: list

    def __post_init__(self):
        self.pairs = [(int(s), int(t)) for s, t in self.pairs]
        if len({s for s, _ in self.pairs}) != len(self.pairs):
            raise DomainError("duplicate source node in anchor pairs")
        if len({t for _, t in self.pairs}) != len(self.pairs):
            raise DomainError("duplicate target node in anchor pairs")

    def split(self, train_ratio=0.2, seed=0):
        """Disjoint (train, test) anchor lists; the split is seeded."""
        if not 0.0 <= train_ratio < 1.0:
            raise DomainError("train_ratio must lie in [0, 1)")
        rng = np.random.default_rng(derive_seed(seed, "anchor-split"))
        order = rng.permutation(len(self.pairs))
        n_train = int(round(train_ratio * len(self.pairs)))
        train = [self.pairs[i] for i in sorted(order[:n_train])]
        test = [self.pairs[i] for i in sorted(order[n_train:])]
        return train, test

    @classmethod
    def load(cls, path):
        pairs = []
        with open(path) as fh:
            for line_no, line in enumerate(fh, start=1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                parts = body.replace(",", " ").split()
                if len(parts) != 2:
                    raise GraphFormatError(
                        f"expected 'source,target', got {body!r}",
                        path=str(path), line_no=line_no,
                    )
                pairs.append((int(parts[0]), int(parts[1])))
        return cls(pairs)

    def save(self, path):
        with open(path, "w") as fh:
            for s, t in self.pairs:
                fh.write(f"{s},{t}\n")


def ego_distributions(
    g, embeddings, k=2, walks_per_node=1000, walk_length=5, walk_seed=0,
    prior=None, lam=0.0,
):
    """Edge distribution of every node's k-ego network.

    Probabilities are walk frequencies, boosted where the prior mass of an
    endpoint reaches 1 when a prior and a positive ``lam`` are given (the
    same edge-importance model the attack scores against).
    """
    vectors = edge_embeddings_for(embeddings, g.edges)
    walks = random_walks(g, walks_per_node, walk_length, walk_seed)
    probs = edge_probabilities(g, walks, prior=prior, lam=lam)
    return [
        ego_distribution(g, k_ego(g, v, k), vectors, probs)
        for v in range(g.n_nodes)
    ]


def kernel_matrix(
    gs, gt, k=2, mode="accelerated", vgae_config=None,
    walks_per_node=1000, walk_length=5, seed=0, prior=None, lam=0.0,
):
    """Pairwise kernel Phi between all source and target ego networks.

    Both graphs are embedded by a single encoder trained on their disjoint
    union, which puts the two edge-embedding spaces in the same coordinates
    and makes cross-graph distributions comparable. When a prior and ``lam``
    are given, each side's edge probabilities are boosted along its own axis
    of the prior matrix (rows for the source graph, columns for the target).
    Accelerated mode is the Gaussian kernel over ego centroids and is
    computed as one pairwise distance matrix.
    """
    from .attack import PriorKnowledge
    from .graph import disjoint_union

    if mode not in ("exact", "accelerated"):
        raise DomainError(f"unknown kernel mode {mode!r}")
    union = disjoint_union(gs, gt)
    vcfg = vgae_config or VgaeConfig(seed=derive_seed(seed, "uil-vgae"))
    emb = train_vgae(union, vcfg)
    emb_s = emb[: gs.n_nodes]
    emb_t = emb[gs.n_nodes :]
    walk_seed = derive_seed(seed, "uil-walks")
    prior_s = PriorKnowledge(prior.h.T, mode=prior.mode) if prior is not None else None
    dists_s = ego_distributions(
        gs, emb_s, k, walks_per_node, walk_length, walk_seed, prior_s, lam
    )
    dists_t = ego_distributions(
        gt, emb_t, k, walks_per_node, walk_length, walk_seed, prior, lam
    )
    if mode == "accelerated":
        cs = np.stack([d.centroid() for d in dists_s])
        ct = np.stack([d.centroid() for d in dists_t])
        return np.exp(-cdist(cs, ct, "sqeuclidean"))
    phi = np.empty((gs.n_nodes, gt.n_nodes))
    for i, ds in enumerate(dists_s):
        for j, dt in enumerate(dists_t):
            phi[i, j] = edd_kernel(ds, dt, "exact")
    return phi


def closed_form_match(phi, h, alpha=1.0):
    """Closed-form matcher: M = Phi / (2 alpha) + H."""
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    phi = np.asarray(phi, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if phi.shape != h.shape:
        raise DomainError(f"shape mismatch {phi.shape} vs {h.shape}")
    return MatchingMatrix(phi / (2.0 * alpha) + h, alpha=alpha)


def _sym_normalized_adjacency(g):
    a = g.adjacency()
    d = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(np.maximum(d, 1.0))
    dmat = sp.diags(inv_sqrt)
    return (dmat @ a @ dmat).tocsr()


def propagation_match(gs, gt, h, damping=0.5, iters=20):
    """Similarity-propagation matcher:
    M <- damping * As M At^T + (1 - damping) * H for a fixed iteration count,
    with symmetrically normalized adjacencies."""
    if not 0.0 < damping < 1.0:
        raise DomainError("damping must lie in (0, 1)")
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (gs.n_nodes, gt.n_nodes):
        raise DomainError(f"prior shape {h.shape} != ({gs.n_nodes}, {gt.n_nodes})")
    a_s = _sym_normalized_adjacency(gs)
    a_t = _sym_normalized_adjacency(gt)
    m = h.copy()
    for _ in range(iters):
        m = damping * np.asarray(a_s @ m @ a_t.T) + (1.0 - damping) * h
    return MatchingMatrix(m)


def mismatching_rate(matching, test_pairs):
    """1 - top-1 accuracy over held-out anchor pairs.

    A source row's prediction is the argmax over target nodes; ties resolve
    to the lowest target id.
    """
    m = matching.m if isinstance(matching, MatchingMatrix) else np.asarray(matching)
    if len(test_pairs) == 0:
        raise DomainError("test pair set is empty")
    predictions = np.argmax(m, axis=1)
    hits = sum(1 for s, t in test_pairs if predictions[s] == t)
    return 1.0 - hits / len(test_pairs)


def _incident_removed(g, removed):
    removed = [(min(u, w), max(u, w)) for u, w in removed]
    if len(set(removed)) != len(removed):
        raise DomainError("removed edge list contains duplicates")
    if removed:
        g.edge_ids_of(removed)  # validates membership in the clean graph
    counts = np.zeros(g.n_nodes, dtype=np.int64)
    for u, w in removed:
        counts[u] += 1
        counts[w] += 1
    return counts


def nis(g_clean, removed, v):
    """Fraction of v's clean edges the attack left in place."""
    deg = g_clean.degrees()
    g_clean._check_node(v)
    if deg[v] == 0:
        raise DomainError(f"node {v} has no edges in the clean graph")
    hit = _incident_removed(g_clean, removed)
    return 1.0 - hit[v] / deg[v]


def mean_nis(g_clean, removed):
    """Graph-level imperceptibility: mean per-node score over nodes with
    degree >= 1 in the clean graph."""
    deg = g_clean.degrees()
    mask = deg > 0
    if not mask.any():
        raise DomainError("clean graph has no edges")
    hit = _incident_removed(g_clean, removed)
    return float(np.mean(1.0 - hit[mask] / deg[mask]))
