"""Edge-removal poisoning of a single target network.

The pipeline turns the graph into per-ego edge distributions (random-walk
frequencies, optionally boosted where prior knowledge touches an endpoint),
scores every edge by how little the kernel between each clean ego network
and its edge-dropped version would be (small kernel = large structural
change), and greedily keeps the K lowest-scoring edges in one pass. Baseline
attacks (random / degree / pagerank / anchored-edge) share the same
removal-set contract.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .graph import k_ego, pagerank, random_walks
from .kernel import EdgeDistribution, edd_kernel
from .seeds import derive_seed
from .vgae import VgaeConfig, edge_embeddings_for, train_vgae

log = logging.getLogger(__name__)

BASELINE_KINDS = ("random", "deg", "pr", "fpta")


@dataclass
class PriorKnowledge:
    """Cross-network prior: matrix of shape (|V_source|, |V_target|) in [0,1].

    Supervised mode sets 1 at training anchor pairs; the unsupervised mode
    scores degree similarity 1 / (1 + |deg_s - deg_t|); "none" is all zero.
    """

    h: np.ndarray
    mode: str = "none"

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=np.float64)
        if self.h.ndim != 2:
            raise DomainError("prior matrix must be 2-d")
        if self.h.size and (self.h.min() < 0.0 or self.h.max() > 1.0):
            raise DomainError("prior entries must lie in [0, 1]")

    @classmethod
    def none(cls, n_source, n_target):
        return cls(np.zeros((n_source, n_target)), mode="none")

    @classmethod
    def from_anchors(cls, pairs, n_source, n_target):
        h = np.zeros((n_source, n_target))
        for s, t in pairs:
            if not (0 <= s < n_source and 0 <= t < n_target):
                raise DomainError(f"anchor ({s}, {t}) out of range")
            h[s, t] = 1.0
        return cls(h, mode="anchors")

    @classmethod
    def degree_similarity(cls, g_source, g_target):
        ds = g_source.degrees()[:, None].astype(np.float64)
        dt = g_target.degrees()[None, :].astype(np.float64)
        return cls(1.0 / (1.0 + np.abs(ds - dt)), mode="degree")

    def target_marginals(self):
        """Per-target-node prior mass (column sums)."""
        return self.h.sum(axis=0)


@dataclass(frozen=True)
class EdgeProbabilities:
    """Normalized importance of every edge of the target graph."""

    probs: np.ndarray
    lam: float
    walks_per_node: int
    walk_length: int
    walk_seed: int
    prior_mode: str


@dataclass
class RemovalSet:
    """Selected removal edges, ascending by score then canonical pair."""

    edges: list
    scores: np.ndarray
    budget: int
    config: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.edges = [(int(min(u, w)), int(max(u, w))) for u, w in self.edges]
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if len(self.edges) != len(self.scores):
            raise DomainError("edges and scores lengths disagree")
        if len(set(self.edges)) != len(self.edges):
            raise DomainError("removal edges must be distinct")
        if len(self.edges) > self.budget:
            raise DomainError(f"{len(self.edges)} edges exceed budget {self.budget}")
        order = sorted(range(len(self.edges)), key=lambda i: (self.scores[i], self.edges[i]))
        if order != list(range(len(self.edges))):
            raise DomainError("removal list must be sorted by (score, edge)")

    def to_json_dict(self, config_hash=None, timestamp=None):
        return {
            "budget": self.budget,
            "config": dict(self.config),
            "config_hash": config_hash,
            "edges": [
                {"u": u, "w": w, "score": float(s)}
                for (u, w), s in zip(self.edges, self.scores)
            ],
            "timings": dict(self.timings),
            "timestamp": timestamp,
        }

    @classmethod
    def from_json_dict(cls, data):
        return cls(
            edges=[(e["u"], e["w"]) for e in data["edges"]],
            scores=[e["score"] for e in data["edges"]],
            budget=data["budget"],
            config=data.get("config", {}),
            timings=data.get("timings", {}),
        )


def edge_probabilities(g, walks, prior=None, lam=0.0):
    """Per-edge distribution p(e) over the whole graph.

    p(e_uw) is the walk traversal count times exp(lam) when the prior mass of
    either endpoint reaches 1, normalized over all edges. All-zero walk
    counts fall back to uniform with a warning.
    """
    if lam < 0:
        raise DomainError("lam must be nonnegative")
    counts = walks.counts.astype(np.float64)
    if len(counts) != g.n_edges:
        raise DomainError("walk counts do not match the graph's edge table")
    if g.n_edges == 0:
        return EdgeProbabilities(
            np.empty(0), lam, walks.walks_per_node, walks.walk_length, walks.seed,
            prior.mode if prior else "none",
        )
    if counts.sum() <= 0:
        log.warning("all walk counts are zero; falling back to uniform probabilities")
        counts = np.ones_like(counts)
    if prior is not None and lam != 0.0:
        marg = prior.target_marginals()
        if len(marg) != g.n_nodes:
            raise DomainError(
                f"prior has {len(marg)} target columns for a {g.n_nodes}-node graph"
            )
        pair_mass = marg[g.edges[:, 0]] + marg[g.edges[:, 1]]
        counts = counts * np.exp(lam * (pair_mass >= 1.0))
    probs = counts / counts.sum()
    return EdgeProbabilities(
        probs, lam, walks.walks_per_node, walks.walk_length, walks.seed,
        prior.mode if prior else "none",
    )


def _normalize_ego_probs(weights):
    """Renormalize nonnegative masses inside an ego; uniform when degenerate."""
    total = weights.sum()
    if total <= 0.0:
        return np.full(len(weights), 1.0 / len(weights))
    return weights / total


def ego_distribution(g, ego, edge_vectors, probs):
    """Distribution of an ego network: its edges with their global embedding
    vectors, global probabilities renormalized inside the ego."""
    ids = ego.edge_ids
    dim = edge_vectors.shape[1] if edge_vectors.ndim == 2 else 2
    if len(ids) == 0:
        return EdgeDistribution.empty(dim)
    return EdgeDistribution(ids, edge_vectors[ids], _normalize_ego_probs(probs.probs[ids]))


def drop_support_point(dist, edge_id):
    """Distribution with one support point removed and mass renormalized."""
    keep = dist.edge_ids != edge_id
    if keep.all():
        return dist
    ids = dist.edge_ids[keep]
    if len(ids) == 0:
        return EdgeDistribution.empty(dist.vectors.shape[1])
    return EdgeDistribution(ids, dist.vectors[keep], _normalize_ego_probs(dist.probs[keep]))


@dataclass
class AttackConfig:
    k: int = 2
    lam: float = 2.0
    walks_per_node: int = 1000
    walk_length: int = 5
    mode: str = "accelerated"
    seed: int = 0
    vgae: VgaeConfig | None = None

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("k must be >= 1")
        if self.mode not in ("exact", "accelerated"):
            raise DomainError(f"unknown mode {self.mode!r}")

    def resolved_vgae(self):
        return self.vgae or VgaeConfig(seed=derive_seed(self.seed, "vgae"))

    def snapshot(self):
        v = self.resolved_vgae()
        return {
            "k": self.k,
            "lam": self.lam,
            "walks_per_node": self.walks_per_node,
            "walk_length": self.walk_length,
            "mode": self.mode,
            "seed": self.seed,
            "vgae": {
                "hidden1": v.hidden1, "hidden2": v.hidden2,
                "learning_rate": v.learning_rate, "epochs": v.epochs,
                "seed": v.seed, "neg_ratio": v.neg_ratio, "optimizer": v.optimizer,
            },
        }


class AttackState:
    """Shared immutable state for scoring: embeddings, probabilities, and the
    per-node ego edge lists with their inverted index."""

    def __init__(self, graph, config, edge_vectors, probs, ego_edge_ids):
        self.graph = graph
        self.config = config
        self.edge_vectors = edge_vectors
        self.probs = probs
        self.ego_edge_ids = ego_edge_ids
        # invert: nodes whose ego network contains each edge
        members = [[] for _ in range(graph.n_edges)]
        for v, ids in enumerate(ego_edge_ids):
            for eid in ids:
                members[eid].append(v)
        self.edge_members = [np.array(m, dtype=np.int64) for m in members]

    @classmethod
    def build(cls, g, prior=None, config=None, embeddings=None):
        config = config or AttackConfig()
        if embeddings is None:
            embeddings = train_vgae(g, config.resolved_vgae())
        edge_vectors = edge_embeddings_for(embeddings, g.edges)
        walks = random_walks(
            g, config.walks_per_node, config.walk_length,
            derive_seed(config.seed, "walks"),
        )
        probs = edge_probabilities(g, walks, prior, config.lam)
        ego_edge_ids = [k_ego(g, v, config.k).edge_ids for v in range(g.n_nodes)]
        return cls(g, config, edge_vectors, probs, ego_edge_ids)

    def clean_distribution(self, v):
        ids = self.ego_edge_ids[v]
        if len(ids) == 0:
            return EdgeDistribution.empty(self.edge_vectors.shape[1])
        return EdgeDistribution(
            ids, self.edge_vectors[ids], _normalize_ego_probs(self.probs.probs[ids])
        )


def _ego_drop_kernels_fast(state, v):
    """Accelerated kernels K(clean ego of v, ego minus each of its edges).

    Returns (edge ids of the ego, kernel per dropped edge). Uses the centroid
    bound incrementally: dropping support point e moves the centroid from
    S/W to (S - w_e v_e) / (W - w_e).
    """
    ids = state.ego_edge_ids[v]
    m = len(ids)
    vecs = state.edge_vectors[ids]
    w = state.probs.probs[ids]
    total = w.sum()
    if total <= 0.0:
        w = np.full(m, 1.0 / m)
        total = 1.0
    s = w @ vecs
    c = s / total
    if m == 1:
        # dropping the only edge empties the ego; compare with zero centroid
        return ids, np.exp(-np.array([c @ c]))
    denom = total - w
    safe = denom > 0.0
    centroids = np.empty_like(vecs)
    if safe.any():
        centroids[safe] = (s[None, :] - w[safe, None] * vecs[safe]) / denom[safe, None]
    if not safe.all():
        # the dropped point held all the mass; remainder renormalizes uniformly
        vec_sum = vecs.sum(axis=0)
        centroids[~safe] = (vec_sum[None, :] - vecs[~safe]) / (m - 1)
    d2 = np.sum((centroids - c[None, :]) ** 2, axis=1)
    return ids, np.exp(-d2)


def _ego_drop_kernels_exact(state, v):
    ids = state.ego_edge_ids[v]
    clean = state.clean_distribution(v)
    kernels = np.empty(len(ids))
    for pos, eid in enumerate(ids):
        kernels[pos] = edd_kernel(clean, drop_support_point(clean, eid), "exact")
    return ids, kernels


def score_all_edges(state, mode=None):
    """Removal score for every edge: sum over all nodes of the kernel between
    the node's clean ego distribution and the distribution with that edge's
    support point dropped. Nodes whose ego does not contain the edge
    contribute exactly 1.
    """
    mode = mode or state.config.mode
    g = state.graph
    scores = np.full(g.n_edges, float(g.n_nodes))
    per_ego = _ego_drop_kernels_fast if mode == "accelerated" else _ego_drop_kernels_exact
    for v in range(g.n_nodes):
        if len(state.ego_edge_ids[v]) == 0:
            continue
        ids, kernels = per_ego(state, v)
        scores[ids] += kernels - 1.0
    return scores


def score_edge(state, edge, mode=None):
    """Score of removing one edge; see ``score_all_edges``.

    Computed over the affected nodes only: the node set whose k-hop
    neighborhoods contain both endpoints, everything else contributes 1.
    """
    mode = mode or state.config.mode
    g = state.graph
    eid = g.edge_id(*edge)
    affected = state.edge_members[eid]
    score = float(g.n_nodes - len(affected))
    for v in affected:
        clean = state.clean_distribution(v)
        poisoned = drop_support_point(clean, eid)
        score += edd_kernel(clean, poisoned, mode)
    return score


def affected_nodes(g, edge, k):
    """Nodes whose k-ego network contains ``edge``: the intersection of the
    k-hop neighborhoods of its endpoints."""
    u, w = edge
    g.edge_id(u, w)  # validates the edge
    return np.intersect1d(k_ego(g, u, k).nodes, k_ego(g, w, k).nodes)


def select_from_scores(g, scores, budget, config_snapshot=None, timings=None):
    """Removal set of the ``budget`` lowest-scoring edges, ties broken by
    canonical edge order."""
    if not (0 <= budget <= g.n_edges):
        raise DomainError(f"budget {budget} outside 0..{g.n_edges}")
    order = np.lexsort((np.arange(g.n_edges), scores))
    chosen = order[:budget]
    return RemovalSet(
        edges=[tuple(g.edges[i]) for i in chosen],
        scores=scores[chosen],
        budget=budget,
        config=config_snapshot or {},
        timings=timings or {},
    )


def toak_select(g, prior, budget, config=None, state=None):
    """Greedy one-shot selection: embed, walk, score every edge once on the
    clean graph, keep the K smallest scores."""
    config = config or AttackConfig()
    if state is None:
        state = AttackState.build(g, prior, config)
    scores = score_all_edges(state)
    snapshot = dict(config.snapshot(), attack="toak", budget=int(budget))
    return select_from_scores(g, scores, budget, snapshot)


def baseline_attack_scored(g, kind, budget, prior=None, seed=0):
    """As ``baseline_attack`` but also returns the full per-edge score vector
    (lower = removed earlier) for score dumps."""
    if kind not in BASELINE_KINDS:
        raise DomainError(f"unknown baseline {kind!r}; expected one of {BASELINE_KINDS}")
    if not (0 <= budget <= g.n_edges):
        raise DomainError(f"budget {budget} outside 0..{g.n_edges}")
    m = g.n_edges
    ids = np.arange(m)
    rng = np.random.default_rng(derive_seed(seed, f"baseline-{kind}"))

    if kind == "random":
        perm = rng.permutation(m)
        scores_full = np.empty(m)
        scores_full[perm] = np.arange(m, dtype=np.float64)
        order = perm
    elif kind in ("deg", "pr"):
        value = g.degrees().astype(np.float64) if kind == "deg" else pagerank(g)
        vu = value[g.edges[:, 0]]
        vw = value[g.edges[:, 1]]
        top = np.maximum(vu, vw)
        both = vu + vw
        order = np.lexsort((ids, -both, -top))
        scores_full = -top
    else:  # fpta
        if prior is None:
            prior = PriorKnowledge.none(0, g.n_nodes)
        marg = prior.target_marginals()
        if len(marg) != g.n_nodes:
            raise DomainError("prior target dimension does not match the graph")
        mu = marg[g.edges[:, 0]]
        mw = marg[g.edges[:, 1]]
        anchored = (mu >= 1.0) | (mw >= 1.0)
        scores_full = np.empty(m)
        scores_full[anchored] = -(mu + mw)[anchored]
        rest = ids[~anchored]
        pad = rng.permutation(len(rest))
        scores_full[rest[pad]] = 1.0 + np.arange(len(rest), dtype=np.float64)
        order = np.lexsort((ids, scores_full))

    chosen = order[:budget]
    chosen = chosen[np.lexsort((chosen, scores_full[chosen]))]
    removal = RemovalSet(
        edges=[tuple(g.edges[i]) for i in chosen],
        scores=scores_full[chosen],
        budget=budget,
        config={"attack": kind, "seed": int(seed), "budget": int(budget)},
    )
    return removal, scores_full


def baseline_attack(g, kind, budget, prior=None, seed=0):
    """Reference attacks sharing the RemovalSet contract.

    random: uniform edges without replacement. deg / pr: edges ranked by the
    larger endpoint degree / pagerank (ties by endpoint sum, then edge id).
    fpta: edges touching a node with prior mass >= 1 first, ranked by total
    endpoint prior mass, padded with random edges when too few qualify.
    """
    removal, _ = baseline_attack_scored(g, kind, budget, prior, seed)
    return removal
