"""Undirected attributed graphs: construction, file IO, ego networks,
random walks and classical centralities.

Graphs are immutable after construction. Edges are stored canonically as
(u, w) pairs with u < w, sorted lexicographically; the position of a pair in
that ordering is its edge id, used everywhere downstream (walk counts, edge
probabilities, embeddings).
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, GraphFormatError

log = logging.getLogger(__name__)

DEGREE_BUCKETS = 8


class Graph:
    """Undirected graph with dense node ids 0..n-1 and a real attribute matrix.

    Parameters
    ----------
    n_nodes : int
        Number of nodes; node ids are 0..n_nodes-1.
    edges : array-like of shape (m, 2)
        Unordered endpoint pairs. Must contain no self-loops and no
        duplicates (after canonicalization to u < w).
    attributes : ndarray of shape (n_nodes, d), optional
        Per-node attribute rows. When omitted, one-hot bucketed log-degree
        features are generated (``DEGREE_BUCKETS`` buckets).
    external_ids : ndarray, optional
        Original labels for nodes that were renumbered on load.
    """

    def __init__(self, n_nodes, edges, attributes=None, external_ids=None):
        if n_nodes < 0:
            raise DomainError(f"negative node count {n_nodes}")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if np.any(edges < 0) or np.any(edges >= n_nodes):
                bad = edges[(edges < 0).any(axis=1) | (edges >= n_nodes).any(axis=1)]
                raise DomainError(f"edge endpoints outside 0..{n_nodes - 1}: {bad[:5].tolist()}")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise DomainError("self-loops are not allowed")
            lo = edges.min(axis=1)
            hi = edges.max(axis=1)
            edges = np.stack([lo, hi], axis=1)
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            keys = edges[:, 0] * n_nodes + edges[:, 1]
            if np.any(np.diff(keys) == 0):
                raise DomainError("duplicate edges are not allowed")
            self._edge_keys = keys
        else:
            edges = edges.reshape(0, 2)
            self._edge_keys = np.empty(0, dtype=np.int64)

        self._n = int(n_nodes)
        self._edges = edges
        self._edges.setflags(write=False)
        self._edge_keys.setflags(write=False)

        deg = np.zeros(self._n, dtype=np.int64)
        if edges.size:
            np.add.at(deg, edges[:, 0], 1)
            np.add.at(deg, edges[:, 1], 1)
        self._degrees = deg
        self._degrees.setflags(write=False)

        if attributes is None:
            attributes = _degree_bucket_features(deg)
        attributes = np.asarray(attributes, dtype=np.float64)
        if attributes.ndim != 2 or attributes.shape[0] != self._n:
            raise DomainError(
                f"attribute matrix shape {attributes.shape} does not match {self._n} nodes"
            )
        if attributes.shape[1] < 1:
            raise DomainError("attributes need at least one column")
        self._attributes = attributes
        self._attributes.setflags(write=False)

        # CSR-style neighbor arrays, neighbors of v at indices[indptr[v]:indptr[v+1]]
        indptr = np.zeros(self._n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(deg)
        indices = np.empty(indptr[-1], dtype=np.int64)
        cursor = indptr[:-1].copy()
        for u, w in edges:
            indices[cursor[u]] = w
            cursor[u] += 1
            indices[cursor[w]] = u
            cursor[w] += 1
        # sort each neighbor list for deterministic iteration
        for v in range(self._n):
            seg = indices[indptr[v]:indptr[v + 1]]
            seg.sort()
        self._indptr = indptr
        self._indices = indices
        self._indptr.setflags(write=False)
        self._indices.setflags(write=False)

        self.external_ids = None
        if external_ids is not None:
            self.external_ids = np.asarray(external_ids)
            if self.external_ids.shape[0] != self._n:
                raise DomainError("external id list does not match node count")

    # -- basic accessors ----------------------------------------------------

    @property
    def n_nodes(self):
        return self._n

    @property
    def n_edges(self):
        return self._edges.shape[0]

    @property
    def edges(self):
        """Canonical (m, 2) edge array, u < w, lexicographically sorted."""
        return self._edges

    @property
    def attributes(self):
        return self._attributes

    def degrees(self):
        """Per-node degree vector; sums to 2 * n_edges."""
        return self._degrees

    def neighbors(self, v):
        self._check_node(v)
        return self._indices[self._indptr[v]:self._indptr[v + 1]]

    def has_edge(self, u, w):
        if u == w or min(u, w) < 0 or max(u, w) >= self._n:
            return False
        key = min(u, w) * self._n + max(u, w)
        i = np.searchsorted(self._edge_keys, key)
        return i < self._edge_keys.size and self._edge_keys[i] == key

    def edge_id(self, u, w):
        """Index of edge (u, w) in the canonical edge table."""
        self._check_node(u)
        self._check_node(w)
        key = min(u, w) * self._n + max(u, w)
        i = np.searchsorted(self._edge_keys, key)
        if i >= self._edge_keys.size or self._edge_keys[i] != key:
            raise DomainError(f"({u}, {w}) is not an edge")
        return int(i)

    def edge_ids_of(self, pairs):
        """Vectorized edge_id lookup for an (m, 2) pair array."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size == 0:
            return np.empty(0, dtype=np.int64)
        if self._edge_keys.size == 0:
            raise DomainError(f"not edges of this graph: {pairs[:5].tolist()}")
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        keys = lo * self._n + hi
        idx = np.searchsorted(self._edge_keys, keys)
        clipped = np.minimum(idx, self._edge_keys.size - 1)
        ok = (idx < self._edge_keys.size) & (self._edge_keys[clipped] == keys)
        if not np.all(ok):
            bad = pairs[~ok]
            raise DomainError(f"not edges of this graph: {bad[:5].tolist()}")
        return idx

    def adjacency(self):
        """Symmetric sparse adjacency matrix (CSR, float64)."""
        m = self.n_edges
        if m == 0:
            return sp.csr_matrix((self._n, self._n))
        rows = np.concatenate([self._edges[:, 0], self._edges[:, 1]])
        cols = np.concatenate([self._edges[:, 1], self._edges[:, 0]])
        data = np.ones(2 * m)
        return sp.csr_matrix((data, (rows, cols)), shape=(self._n, self._n))

    def _check_node(self, v):
        if not (0 <= v < self._n):
            raise DomainError(f"node {v} outside 0..{self._n - 1}")

    def __repr__(self):
        return f"Graph(n_nodes={self._n}, n_edges={self.n_edges}, d={self._attributes.shape[1]})"


def _degree_bucket_features(degrees):
    """One-hot log2 degree buckets, capped at DEGREE_BUCKETS - 1 buckets."""
    n = degrees.shape[0]
    buckets = np.minimum(
        np.floor(np.log2(degrees + 1)).astype(np.int64), DEGREE_BUCKETS - 1
    )
    x = np.zeros((n, DEGREE_BUCKETS))
    x[np.arange(n), buckets] = 1.0
    return x


@dataclass(frozen=True)
class EgoNetwork:
    """Subgraph induced by the k-hop neighborhood of a center node.

    ``nodes`` and ``edge_ids`` index into the parent graph; ``edge_ids`` are
    exactly the parent edges with both endpoints inside ``nodes``.
    """

    center: int
    k: int
    nodes: np.ndarray
    edge_ids: np.ndarray


@dataclass(frozen=True)
class WalkCounts:
    """Per-edge traversal counts from the random walk process."""

    counts: np.ndarray
    walks_per_node: int
    walk_length: int
    seed: int

    @property
    def total(self):
        return int(self.counts.sum())


def load_graph(path, attr_path=None, num_nodes=None, mapping_path=None):
    """Load a graph from an edge-list file, renumbering nodes densely.

    Edge-list format: one "u w" pair per line, whitespace separated, '#'
    starts a comment. The optional attribute file has lines
    "node a1 ... ad"; when present it defines the node set and every edge
    endpoint must appear in it. Without it the node set is the ids seen in
    edges (plus 0..num_nodes-1 when ``num_nodes`` is given).

    Self-loops and duplicate undirected edges are dropped, not fatal; the
    dropped counts are logged. A sidecar CSV mapping "external_id,internal_id"
    is written next to the edge file (or to ``mapping_path``) so original
    labels survive round-trips.
    """
    path = Path(path)
    raw_edges = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2:
                raise GraphFormatError(
                    f"expected 'u w', got {body!r}", path=str(path), line_no=line_no
                )
            try:
                u, w = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(
                    f"non-integer node id in {body!r}", path=str(path), line_no=line_no
                ) from None
            raw_edges.append((u, w))

    attrs_by_node = None
    if attr_path is not None:
        attrs_by_node = {}
        width = None
        with open(attr_path) as fh:
            for line_no, line in enumerate(fh, start=1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                parts = body.split()
                if len(parts) < 2:
                    raise GraphFormatError(
                        "expected 'node a1 ... ad'", path=str(attr_path), line_no=line_no
                    )
                try:
                    node = int(parts[0])
                    vals = [float(p) for p in parts[1:]]
                except ValueError:
                    raise GraphFormatError(
                        f"unparseable attribute row {body!r}",
                        path=str(attr_path),
                        line_no=line_no,
                    ) from None
                if width is None:
                    width = len(vals)
                elif len(vals) != width:
                    raise GraphFormatError(
                        f"attribute row has {len(vals)} values, expected {width}",
                        path=str(attr_path),
                        line_no=line_no,
                    )
                if node in attrs_by_node:
                    raise GraphFormatError(
                        f"duplicate attribute row for node {node}",
                        path=str(attr_path),
                        line_no=line_no,
                    )
                attrs_by_node[node] = vals

    if attrs_by_node is not None:
        ext_ids = sorted(attrs_by_node)
        known = set(ext_ids)
        for u, w in raw_edges:
            if u not in known or w not in known:
                raise GraphFormatError(
                    f"edge ({u}, {w}) references a node missing from the attribute file",
                    path=str(path),
                )
    else:
        seen = {u for e in raw_edges for u in e}
        if num_nodes is not None:
            seen.update(range(num_nodes))
        ext_ids = sorted(seen)

    to_internal = {ext: i for i, ext in enumerate(ext_ids)}

    dropped_self = 0
    dropped_dup = 0
    edge_set = set()
    for u, w in raw_edges:
        iu, iw = to_internal[u], to_internal[w]
        if iu == iw:
            dropped_self += 1
            continue
        key = (min(iu, iw), max(iu, iw))
        if key in edge_set:
            dropped_dup += 1
            continue
        edge_set.add(key)
    if dropped_self or dropped_dup:
        log.warning(
            "%s: dropped %d self-loop(s) and %d duplicate edge(s)",
            path, dropped_self, dropped_dup,
        )

    attributes = None
    if attrs_by_node is not None:
        attributes = np.array([attrs_by_node[e] for e in ext_ids], dtype=np.float64)

    g = Graph(
        len(ext_ids),
        sorted(edge_set),
        attributes=attributes,
        external_ids=np.array(ext_ids),
    )

    if mapping_path is None:
        mapping_path = path.with_suffix(path.suffix + ".idmap.csv")
    with open(mapping_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["external_id", "internal_id"])
        for i, ext in enumerate(ext_ids):
            writer.writerow([ext, i])

    return g


def k_ego(g, v, k):
    """Ego network of ``v``: the subgraph induced by nodes within ``k`` hops.

    The center is always a member, even when isolated.
    """
    g._check_node(v)
    if k < 1:
        raise DomainError(f"hop count must be >= 1, got {k}")
    dist = {v: 0}
    frontier = [v]
    for depth in range(1, k + 1):
        nxt = []
        for u in frontier:
            for w in g.neighbors(u):
                if w not in dist:
                    dist[w] = depth
                    nxt.append(w)
        frontier = nxt
        if not frontier:
            break
    members = np.array(sorted(dist), dtype=np.int64)
    edge_ids = _induced_edge_ids(g, dist)
    return EgoNetwork(center=v, k=k, nodes=members, edge_ids=edge_ids)


def _induced_edge_ids(g, member_set):
    ids = []
    for u in member_set:
        for w in g.neighbors(u):
            if w > u and w in member_set:
                ids.append(g.edge_id(u, w))
    ids.sort()
    return np.array(ids, dtype=np.int64)


def remove_edges(g, removed):
    """New graph with ``removed`` edges deleted; nodes and attributes kept.

    ``removed`` is an iterable of (u, w) pairs, all of which must be edges
    of ``g`` (offenders are reported). Isolated nodes may result.
    """
    removed = [(min(u, w), max(u, w)) for u, w in removed]
    offenders = [e for e in removed if not g.has_edge(*e)]
    if offenders:
        raise DomainError(f"cannot remove non-edges: {offenders[:10]}")
    drop = set(removed)
    kept = [tuple(e) for e in g.edges if (e[0], e[1]) not in drop]
    return Graph(g.n_nodes, kept, attributes=g.attributes, external_ids=g.external_ids)


def random_walks(g, walks_per_node, walk_length, seed):
    """Uniform random walks: ``walks_per_node`` walks of ``walk_length`` steps
    from every node, counting each traversed edge once regardless of direction.

    Each start node gets its own RNG stream derived from (seed, node), so the
    counts are reproducible and independent of any parallel scheduling. A
    walk halts immediately only when its start node is isolated; once moving,
    an undirected walk always has the return edge available.
    """
    if walks_per_node < 1 or walk_length < 1:
        raise DomainError("walks_per_node and walk_length must be >= 1")
    if seed < 0:
        raise DomainError("seed must be a nonnegative integer")
    counts = np.zeros(g.n_edges, dtype=np.int64)
    if g.n_edges == 0:
        return WalkCounts(counts, walks_per_node, walk_length, seed)

    deg = g.degrees()
    indptr, indices = g._indptr, g._indices
    keys = g._edge_keys
    n = g.n_nodes
    r = walks_per_node
    for v in range(n):
        if deg[v] == 0:
            continue
        rng = np.random.default_rng([seed, v])
        cur = np.full(r, v, dtype=np.int64)
        traversed = np.empty((walk_length, r), dtype=np.int64)
        for step in range(walk_length):
            d = deg[cur]
            pick = (rng.random(r) * d).astype(np.int64)
            np.minimum(pick, d - 1, out=pick)
            nxt = indices[indptr[cur] + pick]
            lo = np.minimum(cur, nxt)
            hi = np.maximum(cur, nxt)
            traversed[step] = np.searchsorted(keys, lo * n + hi)
            cur = nxt
        counts += np.bincount(traversed.ravel(), minlength=g.n_edges)
    return WalkCounts(counts, walks_per_node, walk_length, seed)


def pagerank(g, damping=0.85, tol=1e-10, max_iter=10_000):
    """PageRank by power iteration until the max per-node change drops
    below ``tol``. Isolated nodes are dangling and teleport uniformly.
    Scores are nonnegative and sum to 1.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    n = g.n_nodes
    if n == 0:
        return np.empty(0)
    deg = g.degrees().astype(np.float64)
    adj = g.adjacency()
    active = deg > 0
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        contrib = np.where(active, p / np.maximum(deg, 1.0), 0.0)
        dangling = p[~active].sum()
        new_p = (1.0 - damping) / n + damping * (adj @ contrib + dangling / n)
        delta = np.abs(new_p - p).max()
        p = new_p
        if delta < tol:
            break
    return p / p.sum()


def degrees(g):
    """Per-node degree vector."""
    return g.degrees().copy()


def disjoint_union(g1, g2):
    """Disjoint union of two graphs; nodes of ``g2`` are offset by ``g1.n_nodes``.

    Attribute dimensionalities must agree.
    """
    if g1.attributes.shape[1] != g2.attributes.shape[1]:
        raise DomainError(
            f"attribute dimensions differ: {g1.attributes.shape[1]} vs {g2.attributes.shape[1]}"
        )
    off = g1.n_nodes
    edges = np.concatenate([g1.edges, g2.edges + off]) if (g1.n_edges or g2.n_edges) else []
    attrs = np.vstack([g1.attributes, g2.attributes])
    return Graph(off + g2.n_nodes, edges, attributes=attrs)


def write_edge_list(g, path):
    """Write the canonical edge list as "u w" lines."""
    with open(path, "w") as fh:
        for u, w in g.edges:
            fh.write(f"{u} {w}\n")


def write_attributes(x, path):
    """Write an attribute matrix as "node a1 ... ad" lines."""
    x = np.asarray(x)
    with open(path, "w") as fh:
        for i, row in enumerate(x):
            fh.write(" ".join([str(i)] + [repr(float(a)) for a in row]) + "\n")
