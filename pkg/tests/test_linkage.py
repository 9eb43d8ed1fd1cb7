import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from algotune.errors import DomainError
from algotune.families.linkage import (
    ClusterTree,
    ExpRule,
    SclRule,
    clustering_utility,
    extract_k_clustering,
    linkage_tree,
    scl_stability_interval,
    scl_sweep,
)
from algotune.instances import ClusteringInstance, RandomTape, gen_clustering_smooth

from oracles import best_pruning_cost, naive_linkage, random_distinct_dist, scipy_merge_sets, tree_merge_sets


def scl_distance(rho):
    def d(dist, a, b):
        block = dist[np.ix_(a, b)]
        return (1 - rho) * block.min() + rho * block.max()

    return d


def test_three_point_hand_example():
    x = ClusteringInstance([[0, 1, 5], [1, 0, 3], [5, 3, 0]], 1)
    t = linkage_tree(x, SclRule(0.0))
    assert t.sequence == (((0,), (1,)), ((0, 1), (2,)))
    assert t.merges[1].distance == 3


def test_merge_distance_formulas():
    # B = {1, 2} merges first; then A = {0} sees distances {1, 3}
    x = ClusteringInstance([[0, 1, 3], [1, 0, 0.5], [3, 0.5, 0]], 1)
    assert linkage_tree(x, SclRule(0.5)).merges[1].distance == 2.0
    assert linkage_tree(x, ExpRule(1.0)).merges[1].distance == pytest.approx(2.0)
    assert linkage_tree(x, ExpRule(2.0)).merges[1].distance == pytest.approx(math.sqrt(5))
    assert linkage_tree(x, ExpRule(0.0)).merges[1].distance == pytest.approx(math.sqrt(3))


def test_rule_validation():
    with pytest.raises(DomainError):
        SclRule(1.5)
    with pytest.raises(DomainError):
        linkage_tree(ClusteringInstance([[0]], 1), SclRule(0))


@given(st.integers(2, 7), st.integers(0, 2**32), st.floats(0, 1))
def test_scl_matches_naive_oracle_with_ties(n, seed, rho):
    rng = np.random.default_rng(seed)
    d = rng.integers(1, 4, (n, n)).astype(float)
    d = np.triu(d, 1)
    x = ClusteringInstance(d + d.T, 1)
    assert list(linkage_tree(x, SclRule(rho)).sequence) == naive_linkage(x.dist, scl_distance(rho))


@given(st.integers(2, 7), st.integers(0, 2**32), st.sampled_from([-3.0, -1.0, 0.0, 0.5, 1.0, 2.0]))
def test_exp_matches_naive_oracle(n, seed, rho):
    x = ClusteringInstance(random_distinct_dist(np.random.default_rng(seed), n), 1)

    def power_mean(dist, a, b):
        block = dist[np.ix_(a, b)]
        if rho == 0:
            return float(np.exp(np.mean(np.log(block))))
        return float(np.mean(block**rho) ** (1 / rho))

    assert list(linkage_tree(x, ExpRule(rho)).sequence) == naive_linkage(x.dist, power_mean)


def test_scl_limits_match_scipy():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = ClusteringInstance(random_distinct_dist(rng, int(rng.integers(2, 12))), 1)
        assert tree_merge_sets(linkage_tree(x, SclRule(0.0))) == scipy_merge_sets(x.dist, "single")
        assert tree_merge_sets(linkage_tree(x, SclRule(1.0))) == scipy_merge_sets(x.dist, "complete")


def test_exp_extremes_match_complete_and_single():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = ClusteringInstance(random_distinct_dist(rng, 8, 1.0, 3.9), 1)
        assert tree_merge_sets(linkage_tree(x, ExpRule(50.0))) == scipy_merge_sets(x.dist, "complete")
        assert tree_merge_sets(linkage_tree(x, ExpRule(-50.0))) == scipy_merge_sets(x.dist, "single")


def test_exp_large_rho_does_not_overflow():
    x = gen_clustering_smooth(8, 100.0, 1.0, 2, RandomTape(3))
    for rho in (-200.0, 200.0):
        t = linkage_tree(x, ExpRule(rho))
        assert all(np.isfinite(m.distance) for m in t.merges)


def test_exp_zero_distances_merge_first():
    d = np.array([[0, 0, 2, 3], [0, 0, 2.5, 1], [2, 2.5, 0, 4], [3, 1, 4, 0]], dtype=float)
    x = ClusteringInstance(d, 1)
    for rho in (-2.0, 0.0, 1.0):
        assert linkage_tree(x, ExpRule(rho)).sequence[0] == ((0,), (1,))


def test_stability_two_points():
    x = ClusteringInstance([[0, 1], [1, 0]], 1)
    s = scl_stability_interval(x, 0.3)
    assert (s.lo, s.hi) == (0.0, 1.0)


def test_stability_reexecution_midpoint_and_quantile():
    rng = np.random.default_rng(2)
    for seed in range(30):
        x = gen_clustering_smooth(10, 1.0, 4.0, 2, RandomTape(seed))
        rho = float(rng.uniform(0, 1))
        s = scl_stability_interval(x, rho)
        assert s.lo <= rho < s.hi
        ref = linkage_tree(x, SclRule(rho)).sequence
        for r in (s.lo, s.lo + (s.hi - s.lo) / 2, s.lo + 0.999 * (s.hi - s.lo)):
            assert linkage_tree(x, SclRule(min(r, 1.0))).sequence == ref
        assert len(s.certificate) == x.n - 1


def test_stability_interval_is_maximal():
    x = gen_clustering_smooth(9, 1.0, 3.0, 2, RandomTape(5))
    s = scl_stability_interval(x, 0.4)
    ref = linkage_tree(x, SclRule(0.4)).sequence
    if s.hi < 1:
        assert linkage_tree(x, SclRule(s.hi)).sequence != ref
    if s.lo > 0:
        assert linkage_tree(x, SclRule(float(np.nextafter(s.lo, -1)))).sequence != ref


def test_stability_walk_always_advances():
    # restarting at each interval's right end must always contain the restart
    # point, including where the computed crossing is many ulps off
    rng = np.random.default_rng(3)
    for i in range(50):
        x = gen_clustering_smooth(int(rng.integers(3, 16)), 1.0, 5.0, 2, RandomTape(3, i))
        r, steps = 0.0, 0
        while r <= 1.0:
            s = scl_stability_interval(x, r)
            assert s.lo <= r < s.hi
            r, steps = s.hi, steps + 1
            assert steps < 10_000


def test_sweep_tiles_unit_interval():
    for seed in range(5):
        x = gen_clustering_smooth(8, 1.0, 3.0, 2, RandomTape(seed))
        pieces = scl_sweep(x)
        assert pieces[0][0] == 0.0 and pieces[-1][1] == 1.0
        assert all(a < b for a, b, _ in pieces)
        assert all(p[1] == q[0] for p, q in zip(pieces, pieces[1:]))
        assert len(pieces) <= x.n**8
        rng = np.random.default_rng(seed)
        for a, b, tree in pieces:
            for r in rng.uniform(a, b, 3):
                assert linkage_tree(x, SclRule(float(r))).sequence == tree.sequence


def test_extract_unmerge_extremes():
    x = gen_clustering_smooth(6, 1.0, 3.0, 2, RandomTape(1))
    t = linkage_tree(x, SclRule(0.5))
    assert extract_k_clustering(t, x, k=1) == [tuple(range(6))]
    assert extract_k_clustering(t, x, k=6) == [(i,) for i in range(6)]
    with pytest.raises(DomainError):
        extract_k_clustering(t, x, k=7)


def test_dp_pruning_matches_exhaustive():
    rng = np.random.default_rng(3)
    for seed in range(25):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, n + 1))
        x = gen_clustering_smooth(n, 1.0, 3.0, k, RandomTape(seed))
        t = linkage_tree(x, SclRule(float(rng.uniform())))
        for objective in ("kmedian", "kmeans"):
            p = extract_k_clustering(t, x, "dp", objective)
            assert len(p) == k
            assert sorted(i for c in p for i in c) == list(range(n))
            assert clustering_utility(p, x, objective) == pytest.approx(best_pruning_cost(t, x, k, objective))


def test_ground_truth_loss():
    x = ClusteringInstance(np.ones((4, 4)) - np.eye(4), 2, ground_truth=[[0, 2], [1, 3]])
    assert clustering_utility([(0, 1), (2, 3)], x, "ground_truth") == 0.5
    assert clustering_utility([(0, 2), (1, 3)], x, "ground_truth") == 0.0
    assert clustering_utility([(1, 3), (0, 2)], x, "ground_truth") == 0.0
    with pytest.raises(DomainError):
        clustering_utility([(0, 1, 2, 3)], x, "ground_truth")
    with pytest.raises(DomainError):
        clustering_utility([(0, 1), (2, 3)], ClusteringInstance(x.dist, 2), "ground_truth")


def test_kmeans_singletons_cost_zero():
    x = gen_clustering_smooth(5, 1.0, 2.0, 5, RandomTape(0))
    assert clustering_utility([(i,) for i in range(5)], x, "kmeans") == 0.0


def test_tree_json_round_trip():
    x = gen_clustering_smooth(5, 1.0, 2.0, 2, RandomTape(0))
    t = linkage_tree(x, SclRule(0.2))
    back = ClusterTree.from_dict(t.to_dict())
    assert back == t and back.merges[-1].distance == t.merges[-1].distance
