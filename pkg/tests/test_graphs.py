import io

import numpy as np
import pytest
import scipy.sparse as sp

from dieout.graphs import (DENSE_NODE_LIMIT, DiagonalModulation, EdgeListError,
                           LocalityGraph, SpectralError, effective_matrix,
                           geometric_lower, is_strongly_connected,
                           load_edge_list, normalize_mean_column_weight,
                           spectral_radius, symmetrized_upper,
                           top_nodes_by_total_weight, weighted_degrees)

from conftest import random_strong_digraph


def rho_oracle(matrix) -> float:
    """Independent spectral radius: dense eigenvalue solver."""
    m = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    return float(np.abs(np.linalg.eigvals(m)).max())


def reachability_oracle(weights: np.ndarray) -> bool:
    """Strong connectivity via boolean closure by repeated products."""
    adj = weights > 0
    reach = adj | np.eye(adj.shape[0], dtype=bool)
    for _ in range(adj.shape[0]):
        reach = reach | (reach @ reach)
    return bool(reach.all())


class TestLoadEdgeList:
    def test_symmetric_pair(self):
        g = load_edge_list("a b 1\nb a 1")
        assert g.labels == ("a", "b")
        np.testing.assert_array_equal(g.weights, [[0, 1], [1, 0]])

    def test_asymmetric_and_orientation(self):
        # "a b 2" is pressure received by a from b
        g = load_edge_list("a b 2\nb c 3")
        assert g.labels == ("a", "b", "c")
        assert g.weights[0, 1] == 2
        assert g.weights[1, 2] == 3
        assert g.weights[1, 0] == 0

    def test_negative_weight_rejected(self):
        with pytest.raises(EdgeListError, match="line 1.*negative"):
            load_edge_list("a b -1")

    def test_duplicate_edge_rejected(self):
        with pytest.raises(EdgeListError, match="duplicate"):
            load_edge_list("a b 1\na b 2")

    def test_malformed_line_reports_number(self):
        with pytest.raises(EdgeListError, match="line 2"):
            load_edge_list("a b 1\na b")

    def test_non_numeric_weight(self):
        with pytest.raises(EdgeListError, match="not a number"):
            load_edge_list("a b x")

    def test_self_loop_rejected(self):
        with pytest.raises(EdgeListError, match="self-loop"):
            load_edge_list("a a 2")

    def test_comments_and_blanks_ignored(self):
        g = load_edge_list("# header\n\na b 1  # trailing\nb a 2\n")
        assert g.weights[0, 1] == 1
        assert g.weights[1, 0] == 2

    def test_accepts_stream(self):
        g = load_edge_list(io.StringIO("x y 4\ny x 4\n"))
        assert g.labels == ("x", "y")


class TestNormalize:
    def test_two_node_example(self):
        g = load_edge_list("a b 2\nb a 2")
        normed = normalize_mean_column_weight(g)
        np.testing.assert_allclose(normed.weights, [[0, 1], [1, 0]])

    def test_single_direction_example(self):
        g = load_edge_list("a b 4")
        normed = normalize_mean_column_weight(g)
        np.testing.assert_allclose(normed.weights, [[0, 2], [0, 0]])

    def test_airport_fixture_mean_column_sum_is_one(self, airports):
        # independent recomputation of the column sums
        col_sums = np.asarray(airports.weights.sum(axis=0)).ravel()
        assert col_sums.mean() == pytest.approx(1.0, abs=1e-12)

    def test_idempotent(self, airports):
        again = normalize_mean_column_weight(airports)
        np.testing.assert_allclose(again.weights, airports.weights,
                                   rtol=0, atol=1e-12)

    def test_all_zero_rejected(self):
        g = LocalityGraph(("a", "b"), np.zeros((2, 2)))
        with pytest.raises(ValueError, match="all-zero"):
            normalize_mean_column_weight(g)


class TestStrongConnectivity:
    def test_two_cycle(self):
        assert is_strongly_connected(load_edge_list("a b 1\nb a 1"))

    def test_one_way_edge(self):
        assert not is_strongly_connected(load_edge_list("a b 1"))

    def test_matches_reachability_oracle_on_random_digraphs(self):
        rng = np.random.default_rng(7)
        for trial in range(40):
            n = 10
            w = np.where(rng.random((n, n)) < 0.18,
                         rng.random((n, n)), 0.0)
            np.fill_diagonal(w, 0.0)
            g = LocalityGraph(tuple(f"v{i}" for i in range(n)), w)
            assert is_strongly_connected(g) == reachability_oracle(w)

    def test_single_node(self):
        assert is_strongly_connected(LocalityGraph(("a",), np.zeros((1, 1))))


class TestSpectralRadius:
    def test_complete_graph(self, k3):
        info = spectral_radius(k3.weights)
        assert info.radius == pytest.approx(2.0, abs=1e-10)
        np.testing.assert_allclose(info.eigvec, [1 / 3] * 3, atol=1e-10)

    def test_star_is_sqrt_leaves(self, star4):
        info = spectral_radius(star4.weights)
        assert info.radius == pytest.approx(2.0, abs=1e-10)

    def test_random_matrices_match_eig_oracle(self):
        rng = np.random.default_rng(101)
        for trial in range(30):
            m = rng.random((6, 6)) * rng.integers(1, 4)
            info = spectral_radius(m, tol=1e-13)
            assert info.radius == pytest.approx(rho_oracle(m), abs=1e-9)

    def test_eigvec_positive_and_residual(self):
        for seed in range(10):
            g = random_strong_digraph(seed)
            info = spectral_radius(g.weights, tol=1e-13)
            assert (info.eigvec > 0).all()
            assert info.eigvec.sum() == pytest.approx(1.0)
            res = np.abs(g.weights @ info.eigvec
                         - info.radius * info.eigvec).max()
            assert res <= max(info.residual, 1e-15) * 1.01
            assert info.residual <= 1e-13 * max(1.0, info.radius)

    def test_periodic_structure_converges(self):
        # two-cycle has eigenvalues +-1; the shift breaks the period
        m = np.array([[0.0, 1.0], [1.0, 0.0]])
        info = spectral_radius(m)
        assert info.radius == pytest.approx(1.0, abs=1e-10)

    def test_diagonal_matrix(self):
        m = np.diag([0.5, 2.0, 1.0])
        info = spectral_radius(m, tol=1e-12)
        assert info.radius == pytest.approx(2.0, abs=1e-9)

    def test_zero_matrix(self):
        info = spectral_radius(np.zeros((3, 3)))
        assert info.radius == 0.0
        assert info.iterations == 0

    def test_scaling_covariance(self):
        rng = np.random.default_rng(5)
        m = rng.random((8, 8))
        base = spectral_radius(m, tol=1e-13).radius
        for s in (0.25, 3.0, 17.5):
            assert spectral_radius(s * m, tol=1e-13).radius == pytest.approx(
                s * base, rel=1e-10)

    def test_rejects_negative_and_nonsquare(self):
        with pytest.raises(ValueError, match="nonnegative"):
            spectral_radius(np.array([[0.0, -1.0], [0.0, 0.0]]))
        with pytest.raises(ValueError, match="square"):
            spectral_radius(np.zeros((2, 3)))

    def test_nonconvergence_carries_residual(self):
        g = random_strong_digraph(3)
        with pytest.raises(SpectralError) as exc:
            spectral_radius(g.weights, tol=1e-15, max_iterations=2)
        assert exc.value.residual > 0
        assert exc.value.iterations == 2


class TestDegreesAndBounds:
    def test_complete_graph_degrees(self, k3):
        assert weighted_degrees(k3) == (2.0, 2.0)

    def test_star_degrees(self, star4):
        assert weighted_degrees(star4) == (4.0, 1.0)

    def test_airport_degrees_match_independent_row_sums(self, airports):
        rows = airports.dense_weights().sum(axis=1)
        d_max, d_min = weighted_degrees(airports)
        assert d_max == pytest.approx(rows.max(), rel=1e-12)
        assert d_min == pytest.approx(rows.min(), rel=1e-12)

    def test_symmetric_graph_is_fixed_point(self, k3):
        np.testing.assert_array_equal(symmetrized_upper(k3), k3.weights)
        np.testing.assert_allclose(geometric_lower(k3), k3.weights)

    def test_two_node_asymmetric_example(self):
        g = load_edge_list("a b 4\nb a 1")
        np.testing.assert_allclose(geometric_lower(g), [[0, 2], [2, 0]])
        np.testing.assert_allclose(symmetrized_upper(g),
                                   [[0, 2.5], [2.5, 0]])

    def test_schwenk_sandwich_on_random_matrices(self):
        rng = np.random.default_rng(11)
        for trial in range(100):
            w = np.where(rng.random((8, 8)) < 0.5, rng.random((8, 8)), 0.0)
            np.fill_diagonal(w, 0.0)
            g = LocalityGraph(tuple(f"v{i}" for i in range(8)), w)
            rho = spectral_radius(w, tol=1e-13).radius
            lo = spectral_radius(geometric_lower(g), tol=1e-13).radius
            hi = spectral_radius(symmetrized_upper(g), tol=1e-13).radius
            assert lo <= rho + 1e-9
            assert rho <= hi + 1e-9

    def test_diagonal_shift_sandwich_on_random_symmetric(self):
        rng = np.random.default_rng(13)
        for trial in range(100):
            p = rng.random((7, 7))
            p = (p + p.T) / 2
            np.fill_diagonal(p, 0.0)
            q = rng.random(7) * 3
            rho_p = spectral_radius(p, tol=1e-13).radius
            rho_pq = spectral_radius(p + np.diag(q), tol=1e-13).radius
            assert rho_p + q.min() <= rho_pq + 1e-9
            assert rho_pq <= rho_p + q.max() + 1e-9


class TestEffectiveMatrix:
    def test_no_coupling_is_diagonal(self, k3):
        d = DiagonalModulation(np.array([1.0, 2.0, 3.0]))
        m = effective_matrix(k3, d, beta_inf=0.0, betaint_inf=1.5)
        np.testing.assert_allclose(m, np.diag([1.5, 3.0, 4.5]))

    def test_no_modulation_is_scaled_graph(self, k3):
        d = DiagonalModulation.uniform(3)
        m = effective_matrix(k3, d, beta_inf=2.0, betaint_inf=0.0)
        np.testing.assert_allclose(m, 2.0 * k3.dense_weights())

    def test_k3_radius_example(self, k3):
        m = effective_matrix(k3, DiagonalModulation.uniform(3), 2.0, 2.0)
        assert spectral_radius(m).radius == pytest.approx(6.0, abs=1e-9)

    def test_dimension_mismatch(self, k3):
        with pytest.raises(ValueError, match="length"):
            effective_matrix(k3, DiagonalModulation.uniform(4), 1.0, 1.0)


class TestSparseStorage:
    def test_large_ring_uses_sparse_and_ops_work(self):
        n = DENSE_NODE_LIMIT + 10
        ring = sp.lil_matrix((n, n))
        for i in range(n):
            ring[i, (i + 1) % n] = 1.0
            ring[(i + 1) % n, i] = 1.0
        g = LocalityGraph(tuple(f"v{i}" for i in range(n)), ring.tocsr())
        assert not g.is_dense
        assert is_strongly_connected(g)
        assert weighted_degrees(g) == (2.0, 2.0)
        info = spectral_radius(g.weights, tol=1e-10)
        assert info.radius == pytest.approx(2.0, abs=1e-8)
        normed = normalize_mean_column_weight(g)
        assert float(normed.weights.sum()) == pytest.approx(n, rel=1e-12)

    def test_simulation_on_sparse_graph(self):
        from dieout.gillespie import SimConfig, simulate_run
        from dieout.rates import parse_profile
        n = DENSE_NODE_LIMIT + 10
        ring = sp.lil_matrix((n, n))
        for i in range(n):
            ring[i, (i + 1) % n] = 1.0
            ring[(i + 1) % n, i] = 1.0
        g = LocalityGraph(tuple(f"v{i}" for i in range(n)), ring.tocsr())
        cfg = SimConfig(beta=parse_profile("const:0.3"),
                        beta_int=parse_profile("const:0.3"), delta=3.0,
                        t_max=50.0, n0=8, master_seed=6, record_events=True)
        traj = simulate_run(cfg, g, 0)
        assert traj.extinct_at is not None
        counts = traj.initial.copy()
        for _, node, dc in traj.events:
            counts[node] += dc
            assert counts[node] >= 0
        assert counts.sum() == 0


class TestValidation:
    def test_nonzero_diagonal_rejected(self):
        w = np.array([[1.0, 1.0], [1.0, 0.0]])
        with pytest.raises(ValueError, match="diagonal"):
            LocalityGraph(("a", "b"), w)

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            LocalityGraph(("a", "a"), np.zeros((2, 2)))

    def test_modulation_must_be_positive(self):
        with pytest.raises(ValueError, match="positive"):
            DiagonalModulation(np.array([1.0, 0.0]))

    def test_top_nodes_ranking(self):
        g = load_edge_list("a b 1\nb a 1\na c 10\nc a 10")
        assert top_nodes_by_total_weight(g, 2) == ["a", "c"]
