"""Correlated synthetic graph pairs for end-to-end experiments.

The source graph is a random graph with a chosen mean degree; the target is
a copy with a fraction of edges independently rewired. Both share one
attribute matrix (i.i.d. uniform rows, so corresponding nodes carry an
identical attribute signature) and the anchor list is the full identity
mapping, so matching quality degrades smoothly with the rewire fraction.
"""

from pathlib import Path

import numpy as np

from .errors import DomainError
from .graph import Graph, write_attributes, write_edge_list
from .matching import GroundTruth
from .seeds import derive_seed

ATTR_DIM = 8


def _random_edges(n_nodes, n_edges, rng):
    edges = set()
    limit = n_nodes * (n_nodes - 1) // 2
    if n_edges > limit:
        raise DomainError(f"cannot place {n_edges} edges on {n_nodes} nodes")
    while len(edges) < n_edges:
        need = n_edges - len(edges)
        u = rng.integers(0, n_nodes, size=2 * need + 8)
        w = rng.integers(0, n_nodes, size=2 * need + 8)
        for a, b in zip(u, w):
            if a == b:
                continue
            edges.add((min(a, b), max(a, b)))
            if len(edges) == n_edges:
                break
    return sorted(edges)


def synthetic_pair(n_nodes, mean_degree=6.0, rewire=0.05, seed=0):
    """Build (source graph, target graph, anchors).

    rewire = 0 gives identical edge lists. Each rewired edge is replaced by a
    uniformly random new edge; replacements that cannot be placed are dropped,
    so the target edge count can fall marginally short in dense graphs.
    """
    if n_nodes < 10:
        raise DomainError("need at least 10 nodes")
    if not 0.0 <= rewire < 1.0:
        raise DomainError("rewire fraction must lie in [0, 1)")
    rng = np.random.default_rng(derive_seed(seed, "synth"))
    n_edges = int(round(n_nodes * mean_degree / 2.0))
    base = _random_edges(n_nodes, n_edges, rng)

    target = set(base)
    move = rng.random(len(base)) < rewire
    for edge, flagged in zip(base, move):
        if not flagged:
            continue
        target.discard(edge)
        for _ in range(100):
            a, b = rng.integers(0, n_nodes, size=2)
            if a == b:
                continue
            cand = (min(a, b), max(a, b))
            if cand not in target:
                target.add(cand)
                break

    attrs = rng.random((n_nodes, ATTR_DIM))
    gs = Graph(n_nodes, base, attributes=attrs)
    gt = Graph(n_nodes, sorted(target), attributes=attrs)
    anchors = GroundTruth([(i, i) for i in range(n_nodes)])
    return gs, gt, anchors


def write_pair(outdir, gs, gt, anchors):
    """Write source/target edge lists, attribute files and the anchor CSV;
    returns the path map."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "source": outdir / "source.edges",
        "target": outdir / "target.edges",
        "source_attrs": outdir / "source.attrs",
        "target_attrs": outdir / "target.attrs",
        "anchors": outdir / "anchors.csv",
    }
    write_edge_list(gs, paths["source"])
    write_edge_list(gt, paths["target"])
    write_attributes(gs.attributes, paths["source_attrs"])
    write_attributes(gt.attributes, paths["target_attrs"])
    anchors.save(paths["anchors"])
    return paths
