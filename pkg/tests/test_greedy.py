import numpy as np
import pytest
from hypothesis import given, strategies as st

from algotune.errors import DomainError, InternalError
from algotune.families.greedy import (
    GreedyFamilySpec,
    knapsack_critical_values,
    knapsack_greedy,
    knapsack_spec,
    knapsack_utilities,
    mwis_greedy,
    mwis_right_trace,
    mwis_spec,
    mwis_stability_interval,
    run_scored_greedy,
)
from algotune.instances import GraphInstance, KnapsackInstance, RandomTape, gen_knapsack_smooth, gen_maxcut

from oracles import knapsack_bruteforce_greedy

ITEMS3 = KnapsackInstance([6, 5, 4], [4, 3, 2], 5)


def test_knapsack_tie_goes_to_smaller_index():
    x = KnapsackInstance([1, 1], [1, 1], 1)
    for rho in (0.0, 0.5, 3.0):
        assert knapsack_greedy(x, rho) == ((0,), 1.0)


def test_knapsack_hand_examples():
    assert knapsack_greedy(ITEMS3, 1.0) == ((2, 1), 9.0)
    assert knapsack_greedy(ITEMS3, 0.0) == ((0,), 6.0)
    with pytest.raises(DomainError):
        knapsack_greedy(ITEMS3, -0.1)


@given(st.integers(1, 10), st.integers(0, 2**32), st.floats(0, 8))
def test_knapsack_matches_ratio_oracle_and_fits(n, seed, rho):
    x = gen_knapsack_smooth(n, 5.0, 2.0, RandomTape(seed))
    chosen, total = knapsack_greedy(x, rho)
    assert sum(x.sizes[list(chosen)]) <= x.capacity
    ref_chosen, ref_total = knapsack_bruteforce_greedy(x.values.tolist(), x.sizes.tolist(), x.capacity, rho)
    # ratios and log scores can disagree only on exact ties, which continuous draws avoid
    assert sorted(chosen) == sorted(ref_chosen)
    assert total == pytest.approx(ref_total)


def test_knapsack_utilities_bit_identical():
    x = gen_knapsack_smooth(12, 4.0, 3.0, RandomTape(2))
    rhos = np.random.default_rng(0).uniform(0, 5, 300)
    assert knapsack_utilities(x, rhos).tolist() == [knapsack_greedy(x, r)[1] for r in rhos]


def test_critical_values_examples():
    assert knapsack_critical_values(KnapsackInstance([4, 2], [4, 2], 5)).tolist() == [1.0]
    assert knapsack_critical_values(KnapsackInstance([3, 5], [2, 2], 5)).tolist() == []


def test_critical_values_pin_behavior_on_dense_grid():
    x = gen_knapsack_smooth(8, 4.0, 2.0, RandomTape(17))
    crit = knapsack_critical_values(x)
    assert len(crit) <= 28
    grid = np.linspace(0, 10, 100_001)
    utils = knapsack_utilities(x, grid)
    region = np.searchsorted(crit, grid, side="right")
    for r in np.unique(region):
        inside = utils[region == r]
        assert np.all(inside == inside[0])


def test_mwis_examples():
    tri = GraphInstance(3, [3, 2, 1], ((0, 1), (0, 2), (1, 2)))
    assert mwis_greedy(tri, 0.0) == ((0,), 3.0)
    star = GraphInstance(4, [10, 4, 4, 4], ((0, 1), (0, 2), (0, 3)))
    chosen, total = mwis_greedy(star, 50.0)
    assert sorted(chosen) == [1, 2, 3] and total == 12.0
    assert mwis_greedy(star, 0.0) == ((0,), 10.0)


@given(st.integers(0, 12), st.floats(0, 1), st.integers(0, 2**32), st.floats(0, 10))
def test_mwis_output_is_maximal_independent(n, p, seed, rho):
    g = gen_maxcut(n, p, 2.0, RandomTape(seed))
    chosen, total = mwis_greedy(g, rho)
    s = set(chosen)
    assert all(not (i in s and j in s) for i, j in g.edges)
    assert all(v in s or g.adjacency[v] & s for v in range(n))
    assert total == pytest.approx(sum(g.weights[v] for v in chosen))


def test_mwis_stability_interval_reexecution():
    rng = np.random.default_rng(4)
    for seed in range(20):
        g = gen_maxcut(10, 0.4, 1.0, RandomTape(seed))
        rho = float(rng.uniform(0, 10))
        lo, hi = mwis_stability_interval(g, rho)
        assert lo <= rho < hi
        ref = mwis_greedy(g, rho)[0]
        for r in rng.uniform(lo, min(hi, 50.0), 10):
            assert mwis_greedy(g, float(r))[0] == ref


def test_mwis_right_trace_agrees_inside_interval():
    g = gen_maxcut(9, 0.5, 1.0, RandomTape(8))
    chosen, _, hi = mwis_right_trace(g, 0.0)
    for r in np.linspace(0, min(hi, 10), 7)[1:-1]:
        assert mwis_greedy(g, float(r))[0] == chosen


def test_scored_greedy_reproduces_knapsack():
    rng = np.random.default_rng(5)
    for seed in range(100):
        x = gen_knapsack_smooth(int(rng.integers(1, 12)), 4.0, 3.0, RandomTape(seed))
        rho = float(rng.uniform(0, 5))
        spec, objects = knapsack_spec(x)
        assignment, utility = run_scored_greedy(spec, objects, rho)
        chosen, total = knapsack_greedy(x, rho)
        assert utility == total
        assert sorted(i for i, y in enumerate(assignment) if y == 1) == sorted(chosen)


def test_scored_greedy_reproduces_mwis():
    rng = np.random.default_rng(6)
    for seed in range(100):
        g = gen_maxcut(int(rng.integers(0, 10)), 0.4, 2.0, RandomTape(seed))
        rho = float(rng.uniform(0, 10))
        spec, objects = mwis_spec(g)
        assignment, utility = run_scored_greedy(spec, objects, rho)
        chosen, total = mwis_greedy(g, rho)
        assert sorted(i for i, y in enumerate(assignment) if y == 1) == sorted(chosen)
        assert utility == pytest.approx(total)


def test_scored_greedy_empty_and_guard():
    spec = GreedyFamilySpec(score=lambda r, a: 0.0, assign=lambda i, a, u, s: (1, s), utility=lambda a, s: float(len(a)))
    assert run_scored_greedy(spec, [], 0.3) == ([], 0.0)

    def runaway(i, attrs, unassigned, state):
        unassigned[i] = attrs  # never lets the object go
        return 1, state

    bad = GreedyFamilySpec(score=lambda r, a: 0.0, assign=runaway, utility=lambda a, s: 0.0, beta=2)
    with pytest.raises(InternalError):
        run_scored_greedy(bad, [0, 1], 0.0)
