"""Edge-removal poisoning against cross-network user identity linkage.

The package is organized around the attack pipeline:

- :mod:`toak.graph` - immutable undirected graphs, ego networks, random
  walks, pagerank, file IO.
- :mod:`toak.vgae` - numpy variational graph autoencoder and unit-norm edge
  embeddings.
- :mod:`toak.kernel` - edge-distribution distance kernel, exact EMD via
  network simplex and the accelerated centroid lower bound.
- :mod:`toak.attack` - edge probabilities, removal scoring, greedy selection
  and the baseline attacks.
- :mod:`toak.matching` - victim matchers and the MR / NIS metrics.
- :mod:`toak.synth`, :mod:`toak.config`, :mod:`toak.experiment`,
  :mod:`toak.cli` - synthetic data, manifests, orchestration, command line.
"""

from .attack import (
    AttackConfig,
    AttackState,
    EdgeProbabilities,
    PriorKnowledge,
    RemovalSet,
    baseline_attack,
    edge_probabilities,
    ego_distribution,
    score_all_edges,
    score_edge,
    toak_select,
)
from .graph import (
    EgoNetwork,
    Graph,
    WalkCounts,
    degrees,
    disjoint_union,
    k_ego,
    load_graph,
    pagerank,
    random_walks,
    remove_edges,
)
from .kernel import Coupling, EdgeDistribution, edd_kernel, emd_exact, emd_lower_bound
from .matching import (
    GroundTruth,
    MatchingMatrix,
    closed_form_match,
    kernel_matrix,
    mean_nis,
    mismatching_rate,
    nis,
    propagation_match,
)
from .synth import synthetic_pair
from .vgae import (
    VgaeConfig,
    VgaeParams,
    edge_embedding,
    gcn_layer,
    train_vgae,
    vgae_loss,
)

__version__ = "0.1.0"

__all__ = [
    "AttackConfig", "AttackState", "Coupling", "EdgeDistribution",
    "EdgeProbabilities", "EgoNetwork", "Graph", "GroundTruth",
    "MatchingMatrix", "PriorKnowledge", "RemovalSet", "VgaeConfig",
    "VgaeParams", "WalkCounts", "baseline_attack", "closed_form_match",
    "degrees", "disjoint_union", "edd_kernel", "edge_embedding",
    "edge_probabilities", "ego_distribution", "emd_exact", "emd_lower_bound",
    "gcn_layer", "k_ego", "kernel_matrix", "load_graph", "mean_nis",
    "mismatching_rate", "nis", "pagerank", "propagation_match",
    "random_walks", "remove_edges", "score_all_edges", "score_edge",
    "synthetic_pair", "toak_select", "train_vgae", "vgae_loss",
]
