import numpy as np
import pytest

from toak.attack import PriorKnowledge
from toak.errors import DomainError
from toak.graph import Graph
from toak.matching import (
    GroundTruth,
    MatchingMatrix,
    closed_form_match,
    kernel_matrix,
    mean_nis,
    mismatching_rate,
    nis,
    propagation_match,
)
from toak.vgae import VgaeConfig


def random_graph(n, p, seed, attrs=None):
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph(n, edges, attributes=attrs)


class TestGroundTruth:
    def test_one_to_one_enforced(self):
        with pytest.raises(DomainError):
            GroundTruth([(0, 1), (0, 2)])
        with pytest.raises(DomainError):
            GroundTruth([(0, 1), (2, 1)])

    def test_split_disjoint_and_seeded(self):
        gt = GroundTruth([(i, i) for i in range(20)])
        tr1, te1 = gt.split(0.2, seed=5)
        tr2, te2 = gt.split(0.2, seed=5)
        assert tr1 == tr2 and te1 == te2
        assert len(tr1) == 4 and len(te1) == 16
        assert set(tr1).isdisjoint(te1)
        tr3, _ = gt.split(0.2, seed=6)
        assert tr1 != tr3

    def test_load_save_round_trip(self, tmp_path):
        gt = GroundTruth([(0, 3), (1, 2)])
        path = tmp_path / "anchors.csv"
        gt.save(path)
        again = GroundTruth.load(path)
        assert again.pairs == gt.pairs


class TestKernelMatrix:
    def test_identical_graphs_have_unit_diagonal(self):
        g = random_graph(8, 0.4, 0, attrs=np.random.default_rng(1).random((8, 3)))
        phi = kernel_matrix(
            g, g, k=2, mode="accelerated",
            vgae_config=VgaeConfig(hidden1=6, hidden2=3, epochs=50, seed=2),
            walks_per_node=40, walk_length=3, seed=3,
        )
        np.testing.assert_allclose(np.diag(phi), 1.0)
        assert phi.min() > 0.0 and phi.max() <= 1.0

    def test_exact_mode_matches_entrywise_kernel(self):
        from toak.graph import disjoint_union
        from toak.matching import ego_distributions
        from toak.kernel import edd_kernel
        from toak.seeds import derive_seed
        from toak.vgae import train_vgae

        rng = np.random.default_rng(4)
        gs = Graph(3, [(0, 1), (1, 2)], attributes=rng.random((3, 2)))
        gt = Graph(3, [(0, 1), (0, 2)], attributes=rng.random((3, 2)))
        vcfg = VgaeConfig(hidden1=4, hidden2=2, epochs=40, seed=5)
        phi = kernel_matrix(gs, gt, k=1, mode="exact", vgae_config=vcfg,
                            walks_per_node=30, walk_length=3, seed=6)
        emb = train_vgae(disjoint_union(gs, gt), vcfg)
        walk_seed = derive_seed(6, "uil-walks")
        ds = ego_distributions(gs, emb[:3], 1, 30, 3, walk_seed)
        dt = ego_distributions(gt, emb[3:], 1, 30, 3, walk_seed)
        for i in range(3):
            for j in range(3):
                assert phi[i, j] == pytest.approx(edd_kernel(ds[i], dt[j], "exact"), abs=1e-12)


class TestClosedFormMatch:
    def test_alpha_half_returns_phi(self):
        rng = np.random.default_rng(5)
        phi = rng.random((4, 5))
        m = closed_form_match(phi, np.zeros((4, 5)), alpha=0.5)
        np.testing.assert_allclose(m.m, phi)

    def test_zero_phi_returns_prior(self):
        rng = np.random.default_rng(6)
        h = rng.random((3, 3))
        m = closed_form_match(np.zeros((3, 3)), h, alpha=2.0)
        np.testing.assert_allclose(m.m, h)

    def test_linear_combination(self):
        rng = np.random.default_rng(7)
        phi = rng.random((6, 4))
        h = rng.random((6, 4))
        m = closed_form_match(phi, h, alpha=1.0)
        np.testing.assert_allclose(m.m, 0.5 * phi + h, atol=1e-12)

    def test_alpha_validated(self):
        with pytest.raises(DomainError):
            closed_form_match(np.zeros((2, 2)), np.zeros((2, 2)), alpha=0.0)

    def test_attack_objective_identity(self):
        # || M - M* ||_F == (1 / 2 alpha) || Phi - Phi* ||_F for shared H
        rng = np.random.default_rng(8)
        for _ in range(50):
            shape = (int(rng.integers(2, 8)), int(rng.integers(2, 8)))
            phi = rng.random(shape)
            phi_star = rng.random(shape)
            h = rng.random(shape)
            alpha = float(rng.uniform(0.1, 5.0))
            m = closed_form_match(phi, h, alpha).m
            m_star = closed_form_match(phi_star, h, alpha).m
            lhs = np.linalg.norm(m - m_star)
            rhs = np.linalg.norm(phi - phi_star) / (2 * alpha)
            assert abs(lhs - rhs) < 1e-12


class TestPropagationMatch:
    def test_tiny_damping_returns_prior(self):
        gs = random_graph(6, 0.4, 9)
        gt = random_graph(6, 0.4, 10)
        h = np.random.default_rng(11).random((6, 6))
        m = propagation_match(gs, gt, h, damping=1e-9, iters=10)
        np.testing.assert_allclose(m.m, h, atol=1e-6)

    def test_identical_graphs_diagonal_dominates(self):
        g = random_graph(10, 0.35, 12)
        h = np.eye(10) * 0.5
        m = propagation_match(g, g, h, damping=0.5, iters=20).m
        for i in range(10):
            off = np.delete(m[i], i)
            assert m[i, i] > off.max()

    def test_single_iteration_matches_dense_oracle(self):
        gs = Graph(3, [(0, 1), (1, 2)])
        gt = Graph(3, [(0, 2)])
        rng = np.random.default_rng(13)
        h = rng.random((3, 3))
        m = propagation_match(gs, gt, h, damping=0.3, iters=1).m
        def norm_adj(g):
            a = np.zeros((3, 3))
            for u, w in g.edges:
                a[u, w] = a[w, u] = 1.0
            d = np.maximum(a.sum(axis=1), 1.0)
            dm = np.diag(1.0 / np.sqrt(d))
            return dm @ a @ dm
        expected = 0.3 * norm_adj(gs) @ h @ norm_adj(gt).T + 0.7 * h
        np.testing.assert_allclose(m, expected, atol=1e-10)

    def test_damping_validated(self):
        g = random_graph(5, 0.5, 14)
        with pytest.raises(DomainError):
            propagation_match(g, g, np.zeros((5, 5)), damping=1.0)

    def test_symmetric_inputs_give_symmetric_matrix(self):
        g = random_graph(8, 0.4, 15)
        h = np.eye(8)
        m = propagation_match(g, g, h, damping=0.5, iters=15).m
        np.testing.assert_allclose(m, m.T, atol=1e-12)


class TestMismatchingRate:
    def test_perfect_matcher(self):
        m = np.eye(10)
        pairs = [(i, i) for i in range(10)]
        assert mismatching_rate(m, pairs) == 0.0

    def test_six_of_ten_correct(self):
        m = np.eye(10)
        pairs = [(i, i) for i in range(6)] + [(i, (i + 1) % 10) for i in range(6, 10)]
        assert mismatching_rate(m, pairs) == pytest.approx(0.4)

    def test_constant_rows_tie_break_to_lowest_target(self):
        m = np.ones((5, 5))
        pairs = [(0, 0), (1, 0), (2, 3), (3, 4)]
        # ties resolve to target 0; only pairs whose target is 0 match
        assert mismatching_rate(m, pairs) == pytest.approx(1.0 - 2 / 4)

    def test_empty_test_set(self):
        with pytest.raises(DomainError):
            mismatching_rate(np.eye(3), [])

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(16)
        m = rng.random((8, 8))
        pairs = [(i, i) for i in range(8)]
        base = mismatching_rate(m, pairs)
        assert mismatching_rate(np.exp(3.0 * m), pairs) == base
        assert mismatching_rate(5.0 * m + 2.0, pairs) == base

    def test_accepts_matching_matrix(self):
        mm = MatchingMatrix(np.eye(4))
        assert mismatching_rate(mm, [(0, 0)]) == 0.0


class TestNis:
    def test_one_of_four_removed(self):
        g = Graph(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
        assert nis(g, [(0, 1)], 0) == pytest.approx(0.75)

    def test_untouched_node(self):
        g = Graph(4, [(0, 1), (2, 3)])
        assert nis(g, [(0, 1)], 2) == 1.0

    def test_fully_stripped_node(self):
        g = Graph(3, [(0, 1), (0, 2)])
        assert nis(g, [(0, 1), (0, 2)], 0) == 0.0

    def test_degree_zero_rejected_and_excluded_from_mean(self):
        g = Graph(4, [(0, 1), (1, 2)])  # node 3 isolated
        with pytest.raises(DomainError):
            nis(g, [], 3)
        assert mean_nis(g, [(0, 1)]) == pytest.approx((0.0 + 0.5 + 1.0) / 3)

    def test_mean_nis_monotone_under_inclusion(self):
        g = random_graph(12, 0.4, 17)
        edges = [tuple(e) for e in g.edges]
        rng = np.random.default_rng(18)
        order = rng.permutation(len(edges))
        previous = 1.0
        for cut in range(0, len(edges), 3):
            value = mean_nis(g, [edges[i] for i in order[:cut]])
            assert value <= previous + 1e-12
            previous = value

    def test_removed_must_be_clean_edges(self):
        g = Graph(3, [(0, 1)])
        with pytest.raises(DomainError):
            mean_nis(g, [(0, 2)])
