import numpy as np
import pytest
from hypothesis import given, strategies as st

from algotune.errors import DomainError
from algotune.families.rounding import (
    default_rank,
    expected_given_projection,
    phi,
    round_signs,
    sdp_embed,
    slinear_flip_points,
    slinear_round,
)
from algotune.instances import GraphInstance, IqpInstance, RandomTape, gen_maxcut, maxcut_to_iqp


def test_single_vertex():
    q = IqpInstance([[2.5]])
    e = sdp_embed(q, 2, 3, RandomTape(0))
    assert e.n == 1 and abs(np.linalg.norm(e.vectors[0]) - 1) < 1e-12
    assert e.objective == pytest.approx(2.5)


def test_single_edge_goes_antipodal():
    q = maxcut_to_iqp(GraphInstance(2, [1, 1], ((0, 1),), [2.0]))
    e = sdp_embed(q, 3, 10, RandomTape(1))
    assert e.objective == pytest.approx(1.0, abs=1e-12)
    assert e.vectors[0] @ e.vectors[1] == pytest.approx(-1.0, abs=1e-12)


@given(st.integers(1, 15), st.floats(0.1, 1), st.integers(0, 2**32))
def test_embedding_monotone_and_unit(n, p, seed):
    q = maxcut_to_iqp(gen_maxcut(n, p, 2.0, RandomTape(seed)))
    e = sdp_embed(q, None, 20, RandomTape(seed))
    assert e.rank == default_rank(n)
    assert np.all(np.diff(e.history) >= -1e-12)
    assert np.all(np.abs(np.linalg.norm(e.vectors, axis=1) - 1) <= 1e-9)


def test_sdp_bounds_the_best_cut():
    import itertools

    g = gen_maxcut(8, 0.6, 1.0, RandomTape(3))
    q = maxcut_to_iqp(g)
    best = max(q.objective(z) for z in itertools.product([-1, 1], repeat=8))
    e = sdp_embed(q, None, 200, RandomTape(3))
    assert e.objective >= best - 1e-9


def test_zero_matrix_keeps_initialization():
    q = IqpInstance(np.zeros((4, 4)))
    e = sdp_embed(q, 3, 5, RandomTape(2))
    init = RandomTape(2).rng("sdp.init").standard_normal((4, 3))
    init /= np.linalg.norm(init, axis=1, keepdims=True)
    assert np.allclose(e.vectors, init) and e.objective == 0.0


def test_argument_checks():
    q = IqpInstance(np.zeros((2, 2)))
    with pytest.raises(DomainError):
        sdp_embed(q, 1, 5)
    with pytest.raises(DomainError):
        sdp_embed(q, 2, 0)
    with pytest.raises(DomainError):
        phi([0.1], -1.0)


def test_phi_values():
    assert phi([0.5], 1.0).tolist() == [0.5]
    assert phi([-3.0, 3.0, 0.2], 1.0).tolist() == [-1.0, 1.0, 0.2]
    assert phi([-0.1, 0.2], 0.0).tolist() == [-1.0, 1.0]


def test_probability_three_quarters():
    coins = np.random.default_rng(0).random((100_000, 1))
    z = round_signs(np.array([0.5]), coins, 1.0)
    frac = np.mean(z == 1)
    assert abs(frac - 0.75) <= 3 * np.sqrt(0.75 * 0.25 / 100_000)


def test_round_signs_matches_probability_form():
    rng = np.random.default_rng(1)
    v = rng.normal(size=50)
    coins = rng.random(50)
    for rho in (0.0, 0.3, 1.0, 4.0):
        direct = np.where(coins < 0.5 + phi(v, rho) / 2, 1.0, -1.0)
        assert np.array_equal(round_signs(v, coins, rho), direct)


def test_rho_zero_is_sign_rounding():
    q = maxcut_to_iqp(gen_maxcut(7, 0.5, 1.0, RandomTape(4)))
    e = sdp_embed(q, None, 30, RandomTape(4))
    z, realized, expected = slinear_round(e, q, 0.0, RandomTape(5))
    Z = RandomTape(5).rng("slinear.gaussian").standard_normal(e.rank)
    assert np.array_equal(z, np.sign(e.vectors @ Z))
    assert realized == pytest.approx(expected, abs=1e-12)


def test_monte_carlo_mean_matches_expectation():
    q = maxcut_to_iqp(gen_maxcut(6, 0.7, 1.0, RandomTape(6)))
    e = sdp_embed(q, None, 30, RandomTape(6))
    Z = np.random.default_rng(7).normal(size=e.rank)
    _, realized, expected = slinear_round(e, q, 1.0, RandomTape(8), gaussian=Z, size=100_000)
    se = realized.std(ddof=1) / np.sqrt(len(realized))
    assert abs(realized.mean() - expected) <= 3 * se


def test_expectation_continuous_in_rho():
    q = maxcut_to_iqp(gen_maxcut(8, 0.5, 1.0, RandomTape(9)))
    e = sdp_embed(q, None, 30, RandomTape(9))
    v = e.vectors @ np.random.default_rng(2).normal(size=e.rank)
    rng = np.random.default_rng(3)
    for rho in rng.uniform(1e-3, 5, 1000):
        a = expected_given_projection(q, v, rho)
        b = expected_given_projection(q, v, rho + 1e-9)
        assert abs(a - b) <= 1e-5 * (1 + 1 / rho**3)


def test_flip_points_pin_the_rounding():
    rng = np.random.default_rng(4)
    v = rng.normal(size=12)
    coins = rng.random(12)
    flips = slinear_flip_points(v, coins)
    assert len(flips) <= 12
    edges = np.concatenate(([0.0], flips[flips < 10], [10.0]))
    for a, b in zip(edges[:-1], edges[1:]):
        ref = round_signs(v, coins, a)
        for r in rng.uniform(a, b, 20):
            assert np.array_equal(round_signs(v, coins, r), ref)
        assert np.array_equal(round_signs(v, coins, float(np.nextafter(b, -1))), ref)
