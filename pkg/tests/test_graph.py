import numpy as np
import pytest

from toak.errors import DomainError, GraphFormatError
from toak.graph import (
    Graph,
    degrees,
    disjoint_union,
    k_ego,
    load_graph,
    pagerank,
    random_walks,
    remove_edges,
)


def path_graph(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def bfs_distances(g, start):
    """Independent BFS oracle over a plain adjacency dict."""
    adj = {v: set() for v in range(g.n_nodes)}
    for u, w in g.edges:
        adj[u].add(w)
        adj[w].add(u)
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


class TestGraphConstruction:
    def test_canonical_edges(self):
        g = Graph(4, [(2, 1), (0, 3)])
        assert g.edges.tolist() == [[0, 3], [1, 2]]

    def test_rejects_self_loop(self):
        with pytest.raises(DomainError):
            Graph(3, [(1, 1)])

    def test_rejects_duplicate(self):
        with pytest.raises(DomainError):
            Graph(3, [(0, 1), (1, 0)])

    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            Graph(3, [(0, 5)])

    def test_attribute_shape_checked(self):
        with pytest.raises(DomainError):
            Graph(3, [(0, 1)], attributes=np.zeros((2, 4)))

    def test_default_attributes_are_degree_buckets(self):
        g = Graph(3, [(0, 1), (0, 2)])
        assert g.attributes.shape == (3, 8)
        np.testing.assert_allclose(g.attributes.sum(axis=1), 1.0)
        # center has degree 2 -> bucket floor(log2(3)) = 1, leaves bucket 1 too
        assert g.attributes[0, 1] == 1.0

    def test_immutable(self):
        g = Graph(3, [(0, 1)])
        with pytest.raises(ValueError):
            g.edges[0, 0] = 2

    def test_edge_id_lookup(self):
        g = Graph(4, [(0, 1), (1, 2), (2, 3)])
        assert g.edge_id(2, 1) == 1
        with pytest.raises(DomainError):
            g.edge_id(0, 3)


class TestLoadGraph:
    def test_basic_load_with_comments_and_dedup(self, tmp_path):
        p = tmp_path / "g.edges"
        p.write_text("# a comment\n0 1\n1 0\n1 2  # trailing\n2 2\n")
        g = load_graph(p)
        assert g.n_nodes == 3
        assert g.n_edges == 2
        assert (tmp_path / "g.edges.idmap.csv").exists()

    def test_declared_nodes_empty_edges(self, tmp_path):
        p = tmp_path / "empty.edges"
        p.write_text("# nothing\n")
        g = load_graph(p, num_nodes=3)
        assert g.n_nodes == 3 and g.n_edges == 0

    def test_malformed_line_reports_position(self, tmp_path):
        p = tmp_path / "bad.edges"
        p.write_text("0 1\n0 x\n")
        with pytest.raises(GraphFormatError) as exc:
            load_graph(p)
        assert "2" in str(exc.value)

    def test_renumbering_keeps_external_ids(self, tmp_path):
        p = tmp_path / "sparse_ids.edges"
        p.write_text("10 30\n30 77\n")
        g = load_graph(p)
        assert g.n_nodes == 3
        assert g.external_ids.tolist() == [10, 30, 77]
        mapping = (tmp_path / "sparse_ids.edges.idmap.csv").read_text().splitlines()
        assert mapping[0] == "external_id,internal_id"
        assert mapping[1] == "10,0"

    def test_attribute_file_defines_nodes(self, tmp_path):
        e = tmp_path / "g.edges"
        e.write_text("0 1\n")
        a = tmp_path / "g.attrs"
        a.write_text("0 1.0 2.0\n1 0.5 0.5\n2 0.0 1.0\n")
        g = load_graph(e, attr_path=a)
        assert g.n_nodes == 3
        np.testing.assert_allclose(g.attributes[2], [0.0, 1.0])

    def test_edge_endpoint_missing_from_attrs(self, tmp_path):
        e = tmp_path / "g.edges"
        e.write_text("0 5\n")
        a = tmp_path / "g.attrs"
        a.write_text("0 1.0\n1 1.0\n")
        with pytest.raises(GraphFormatError):
            load_graph(e, attr_path=a)


class TestKEgo:
    def test_one_hop_on_path(self):
        g = path_graph(4)
        ego = k_ego(g, 0, 1)
        assert ego.nodes.tolist() == [0, 1]
        assert [tuple(g.edges[i]) for i in ego.edge_ids] == [(0, 1)]

    def test_two_hop_on_path_matches_bfs(self):
        g = path_graph(4)
        ego = k_ego(g, 1, 2)
        assert ego.nodes.tolist() == [0, 1, 2, 3]
        assert len(ego.edge_ids) == 3

    def test_isolated_center(self):
        g = Graph(3, [(0, 1)])
        ego = k_ego(g, 2, 5)
        assert ego.nodes.tolist() == [2]
        assert len(ego.edge_ids) == 0

    def test_out_of_range_center(self):
        with pytest.raises(DomainError):
            k_ego(path_graph(3), 7, 1)

    def test_against_bfs_oracle_random_graphs(self):
        rng = np.random.default_rng(5)
        for trial in range(20):
            n = int(rng.integers(4, 15))
            edges = [(i, j) for i in range(n) for j in range(i + 1, n)
                     if rng.random() < 0.25]
            g = Graph(n, edges)
            v = int(rng.integers(0, n))
            k = int(rng.integers(1, 4))
            ego = k_ego(g, v, k)
            dist = bfs_distances(g, v)
            expected_nodes = sorted(u for u, d in dist.items() if d <= k)
            assert ego.nodes.tolist() == expected_nodes
            member = set(expected_nodes)
            expected_edges = [i for i, (u, w) in enumerate(g.edges)
                              if u in member and w in member]
            assert ego.edge_ids.tolist() == expected_edges


class TestRemoveEdges:
    def test_triangle(self):
        g = Graph(3, [(0, 1), (1, 2), (0, 2)])
        h = remove_edges(g, [(0, 1)])
        assert h.n_nodes == 3 and h.n_edges == 2

    def test_remove_nothing_is_identity(self):
        g = path_graph(5)
        h = remove_edges(g, [])
        assert np.array_equal(g.edges, h.edges)

    def test_remove_everything(self):
        g = path_graph(5)
        h = remove_edges(g, [tuple(e) for e in g.edges])
        assert h.n_nodes == 5 and h.n_edges == 0

    def test_non_edge_rejected_with_offenders(self):
        g = path_graph(4)
        with pytest.raises(DomainError) as exc:
            remove_edges(g, [(0, 1), (0, 3)])
        assert "(0, 3)" in str(exc.value)

    def test_sequential_equals_union(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            n = 12
            edges = [(i, j) for i in range(n) for j in range(i + 1, n)
                     if rng.random() < 0.3]
            g = Graph(n, edges)
            m = g.n_edges
            pick = rng.permutation(m)[:6]
            a = [tuple(g.edges[i]) for i in pick[:3]]
            b = [tuple(g.edges[i]) for i in pick[3:]]
            h1 = remove_edges(remove_edges(g, a), b)
            h2 = remove_edges(remove_edges(g, b), a)
            h3 = remove_edges(g, a + b)
            assert np.array_equal(h1.edges, h3.edges)
            assert np.array_equal(h2.edges, h3.edges)


class TestRandomWalks:
    def test_single_edge_counts_both_starts(self):
        g = Graph(2, [(0, 1)])
        wc = random_walks(g, 1, 1, seed=0)
        assert wc.counts.tolist() == [2]
        assert wc.total == 2

    def test_cycle_uniformity(self):
        g = Graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        wc = random_walks(g, 1000, 5, seed=3)
        freq = wc.counts / wc.total
        # vertex-transitive graph: analytic edge frequencies are equal
        assert freq.max() / freq.min() < 1.05

    def test_edgeless(self):
        g = Graph(4, [])
        wc = random_walks(g, 10, 5, seed=1)
        assert wc.counts.size == 0 and wc.total == 0

    def test_bitwise_reproducible(self):
        g = path_graph(8)
        a = random_walks(g, 20, 6, seed=9)
        b = random_walks(g, 20, 6, seed=9)
        assert np.array_equal(a.counts, b.counts)

    def test_total_bound_and_isolated_start(self):
        g = Graph(5, [(0, 1), (1, 2)])  # nodes 3, 4 isolated
        wc = random_walks(g, 7, 3, seed=2)
        assert wc.total == 3 * 7 * 3  # only non-isolated starts walk
        assert wc.total <= g.n_nodes * 7 * 3

    def test_invalid_params(self):
        g = path_graph(3)
        with pytest.raises(DomainError):
            random_walks(g, 0, 1, seed=0)
        with pytest.raises(DomainError):
            random_walks(g, 1, 1, seed=-1)


class TestPagerank:
    def test_triangle_uniform(self):
        g = Graph(3, [(0, 1), (1, 2), (0, 2)])
        np.testing.assert_allclose(pagerank(g, 0.85), [1 / 3] * 3, atol=1e-9)

    def test_star_center_dominates_and_matches_dense_oracle(self):
        g = Graph(5, [(0, i) for i in range(1, 5)])
        scores = pagerank(g, 0.85, tol=1e-12)
        assert scores[0] > scores[1:].max()
        # dense power-iteration oracle
        n, d = 5, 0.85
        a = np.zeros((n, n))
        for u, w in g.edges:
            a[u, w] = a[w, u] = 1.0
        trans = a / a.sum(axis=0, keepdims=True)
        p = np.full(n, 1 / n)
        for _ in range(5000):
            p = (1 - d) / n + d * trans @ p
        np.testing.assert_allclose(scores, p / p.sum(), atol=1e-8)

    def test_single_isolated_node(self):
        g = Graph(1, [])
        np.testing.assert_allclose(pagerank(g), [1.0])

    def test_sums_to_one_with_dangling(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            n = 20
            edges = [(i, j) for i in range(n) for j in range(i + 1, n)
                     if rng.random() < 0.1]
            g = Graph(n, edges)
            s = pagerank(g)
            assert abs(s.sum() - 1.0) < 1e-9
            assert s.min() >= 0.0


class TestDegrees:
    def test_examples(self):
        assert degrees(Graph(3, [(0, 1), (1, 2), (0, 2)])).tolist() == [2, 2, 2]
        star = Graph(5, [(0, i) for i in range(1, 5)])
        assert degrees(star).tolist() == [4, 1, 1, 1, 1]
        assert degrees(Graph(3, [])).tolist() == [0, 0, 0]

    def test_handshake(self):
        g = path_graph(9)
        assert degrees(g).sum() == 2 * g.n_edges


class TestDisjointUnion:
    def test_offsets(self):
        a = Graph(2, [(0, 1)], attributes=np.ones((2, 3)))
        b = Graph(3, [(0, 2)], attributes=np.zeros((3, 3)))
        u = disjoint_union(a, b)
        assert u.n_nodes == 5
        assert u.edges.tolist() == [[0, 1], [2, 4]]

    def test_dimension_mismatch(self):
        a = Graph(2, [(0, 1)], attributes=np.ones((2, 3)))
        b = Graph(2, [(0, 1)], attributes=np.ones((2, 4)))
        with pytest.raises(DomainError):
            disjoint_union(a, b)
