"""Independent oracles used by the unit and acceptance suites.

Nothing here touches the library's solver paths: the transportation oracle
enumerates every basic feasible solution of the polytope (spanning trees of
the complete bipartite support graph), and the scoring oracle rebuilds every
ego distribution from scratch with its own renormalization.
"""

import itertools
from functools import lru_cache

import numpy as np

from toak.graph import k_ego
from toak.kernel import EdgeDistribution, edd_kernel


@lru_cache(maxsize=8)
def _spanning_trees(m, n):
    """All spanning trees of K_{m,n} as tuples of (i, j) cells."""
    cells = [(i, j) for i in range(m) for j in range(n)]
    need = m + n - 1
    trees = []
    for subset in itertools.combinations(range(len(cells)), need):
        parent = list(range(m + n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        acyclic = True
        for idx in subset:
            i, j = cells[idx]
            ri, rj = find(i), find(m + j)
            if ri == rj:
                acyclic = False
                break
            parent[ri] = rj
        if acyclic:  # m+n-1 acyclic edges on m+n vertices => spanning tree
            trees.append(tuple(cells[idx] for idx in subset))
    return trees


def _tree_flows(tree, a, b):
    """Basic solution for one spanning tree via leaf elimination; returns the
    flow dict or None when some flow is negative (infeasible vertex)."""
    m, n = len(a), len(b)
    balance = list(a) + list(b)
    adj = {v: [] for v in range(m + n)}
    for i, j in tree:
        adj[i].append((m + j, (i, j)))
        adj[m + j].append((i, (i, j)))
    degree = {v: len(edges) for v, edges in adj.items()}
    removed = set()
    leaves = [v for v, d in degree.items() if d == 1]
    flows = {}
    while leaves:
        v = leaves.pop()
        edge = next(((other, cell) for other, cell in adj[v] if cell not in removed), None)
        if edge is None:
            continue
        other, cell = edge
        flows[cell] = balance[v]
        balance[other] -= balance[v]
        balance[v] = 0.0
        removed.add(cell)
        degree[other] -= 1
        degree[v] -= 1
        if degree[other] == 1:
            leaves.append(other)
    if any(f < -1e-12 for f in flows.values()):
        return None
    return flows


def brute_force_emd(a, b, cost):
    """Transportation optimum by enumerating every basic feasible solution."""
    m, n = cost.shape
    best = np.inf
    for tree in _spanning_trees(m, n):
        flows = _tree_flows(tree, a, b)
        if flows is None:
            continue
        value = sum(f * cost[i, j] for (i, j), f in flows.items())
        best = min(best, value)
    return best


def random_unit_distribution(rng, size, dim):
    """Seed-driven distribution with unit-sphere support vectors."""
    vecs = rng.standard_normal((size, dim))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    probs = rng.random(size) + 0.05
    probs /= probs.sum()
    return EdgeDistribution(np.arange(size), vecs, probs)


def naive_edge_scores(g, state, mode):
    """Full-recomputation scoring oracle: for every candidate edge, rebuild
    every node's clean ego distribution from scratch, drop the candidate's
    support point, renormalize, and sum the kernels over all nodes."""
    scores = np.zeros(g.n_edges)
    egos = [k_ego(g, v, state.config.k) for v in range(g.n_nodes)]
    for eid in range(g.n_edges):
        total = 0.0
        for v in range(g.n_nodes):
            ids = egos[v].edge_ids
            if len(ids) == 0:
                total += 1.0  # empty vs empty
                continue
            weights = state.probs.probs[ids]
            if weights.sum() <= 0:
                weights = np.full(len(ids), 1.0 / len(ids))
            else:
                weights = weights / weights.sum()
            clean = EdgeDistribution(ids, state.edge_vectors[ids], weights)
            keep = ids != eid
            if keep.all():
                total += 1.0  # untouched ego: identical distributions
                continue
            if keep.sum() == 0:
                poisoned = EdgeDistribution.empty(state.edge_vectors.shape[1])
            else:
                remaining = clean.probs[keep]
                if remaining.sum() <= 0:
                    remaining = np.full(keep.sum(), 1.0 / keep.sum())
                else:
                    remaining = remaining / remaining.sum()
                poisoned = EdgeDistribution(ids[keep], clean.vectors[keep], remaining)
            total += edd_kernel(clean, poisoned, mode)
        scores[eid] = total
    return scores
