import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from specshare import game
from specshare.errors import CapabilityError, DomainError
from specshare.game import GameParams

from oracles import shapley_enumerate

LN1000 = math.log(1000.0)


def brentq_payoff(B, beta):
    """Independent root of ``B ln(B/l) - B + l = beta`` on (0, B)."""
    f = lambda lam: B * math.log(B / lam) - B + lam - beta
    return brentq(f, 1e-300, B, xtol=1e-14, rtol=1e-14)


def test_rate_function_values():
    assert game.rate_function(7.0, 7.0) == 0.0
    assert game.rate_function(10, 2.33) == pytest.approx(6.91, abs=0.02)
    vals = [game.rate_function(10, 10.0**-k) for k in range(1, 8)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("lam", [0.0, -1.0, 10.5])
def test_rate_function_domain(lam):
    with pytest.raises(DomainError):
        game.rate_function(10, lam)


@pytest.mark.parametrize("B,expected", [(10, 2.33), (5, 0.51), (15, 4.79), (20, 7.62), (30, 13.95)])
def test_payoff_checkpoints(B, expected):
    v = game.payoff(B, LN1000)
    assert v == pytest.approx(expected, abs=0.02)
    assert v == pytest.approx(brentq_payoff(B, LN1000), abs=1e-8)
    assert game.rate_function(B, v) == pytest.approx(LN1000, abs=1e-6)


def test_payoff_zero_bandwidth_and_bad_beta():
    assert game.payoff(0, 3.0) == 0.0
    with pytest.raises(DomainError):
        game.payoff(10, 0.0)


def test_payoff_many_matches_scalar_bitwise():
    bs = np.array([0.0, 0.5, 1.0, 5.0, 10.0, 15.0, 33.3])
    vec = game.payoff_many(bs, 4.0)
    for b, v in zip(bs, vec):
        assert game.payoff(float(b), 4.0) == v


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 200), st.floats(0.1, 15))
def test_round_trip_rate(B, beta):
    lam = game.payoff(B, beta)
    assert game.rate_function(B, lam) == pytest.approx(beta, abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 100), st.floats(0.5, 100), st.floats(0.5, 12))
def test_payoff_increasing_in_bandwidth(b1, b2, beta):
    if abs(b1 - b2) < 1e-3:
        return
    lo, hi = sorted((b1, b2))
    assert game.payoff(hi, beta) > game.payoff(lo, beta)


@settings(max_examples=200, deadline=None)
@given(st.floats(1, 100), st.floats(0.5, 12), st.floats(0.5, 12))
def test_payoff_decreasing_in_beta(B, e1, e2):
    if abs(e1 - e2) < 1e-3:
        return
    lo, hi = sorted((e1, e2))
    assert game.payoff(B, hi) < game.payoff(B, lo)


def test_exact_oracle_closed_form_at_zero():
    for beta in (1.0, LN1000, 10.0):
        assert game.payoff_exact_oracle(0, beta) == pytest.approx(-math.log(1 - math.exp(-beta)), abs=1e-6)


def test_exact_oracle_properties():
    v = game.payoff_exact_oracle(10, LN1000)
    assert v >= 2.33
    # the tail at the returned rate honours the target; a hair above it does not
    assert game.poisson_tail(10, v) <= 1e-3
    assert game.poisson_tail(10, v + 2e-6) > 1e-3
    seq = [game.payoff_exact_oracle(10, b) for b in (5, 10, 20, 40)]
    assert all(b < a for a, b in zip(seq, seq[1:]))


def test_poisson_tail_direct():
    lam = 3.0
    exact = 1 - sum(math.exp(-lam) * lam**k / math.factorial(k) for k in range(5))
    assert game.poisson_tail(4, lam) == pytest.approx(exact, rel=1e-12)


def test_conservative_bound_sample():
    for B in (1, 7, 23, 50):
        for beta in (1, 6, 12):
            assert game.payoff(B, beta) <= game.payoff_exact_oracle(B, beta)


def test_characteristic_function_examples():
    p = GameParams.from_bandwidths([10, 5], LN1000)
    assert game.characteristic_function(p, []).value == 0.0
    v1 = game.characteristic_function(p, ["1"]).value
    v2 = game.characteristic_function(p, ["2"]).value
    v12 = game.characteristic_function(p, ["1", "2"])
    assert v12.coalition == frozenset({"1", "2"})
    assert v12.value == pytest.approx(4.79, abs=0.02)
    assert v1 + v2 == pytest.approx(2.84, abs=0.02)
    with pytest.raises(DomainError):
        game.characteristic_function(p, ["3"])


def test_grand_coalition_superlinear():
    v2 = game.coalition_values(GameParams.from_bandwidths([10] * 2, LN1000))[-1]
    v3 = game.coalition_values(GameParams.from_bandwidths([10] * 3, LN1000))[-1]
    assert v2 == pytest.approx(7.62, abs=0.02)
    assert v3 == pytest.approx(13.95, abs=0.02)


def test_game_params_validation():
    with pytest.raises(DomainError):
        GameParams(0.0, (game.OperatorProfile("a", 1),))
    with pytest.raises(DomainError):
        GameParams(1.0, ())
    with pytest.raises(DomainError):
        GameParams(1.0, (game.OperatorProfile("a", 1), game.OperatorProfile("a", 2)))
    with pytest.raises(DomainError):
        game.OperatorProfile("a", -1)


def test_shapley_two_player_formula():
    p = GameParams.from_bandwidths([10, 5], LN1000)
    v = game.coalition_values(p)
    phi = game.shapley(p)
    assert phi[0] == pytest.approx((v[1] + v[3] - v[2]) / 2, abs=1e-12)
    assert phi[1] == pytest.approx((v[2] + v[3] - v[1]) / 2, abs=1e-12)
    assert tuple(phi) == pytest.approx((3.305, 1.485), abs=0.005)


def test_shapley_symmetry_and_dummy():
    p = GameParams.from_bandwidths([7, 7, 7], 3.0)
    phi = game.shapley(p)
    assert phi[0] == phi[1] == phi[2]
    assert phi.sum() == pytest.approx(game.coalition_values(p)[-1], abs=1e-12)
    q = GameParams.from_bandwidths([10, 0, 4], 2.0)
    assert game.shapley(q)[1] == 0.0


def test_shapley_capability_limit():
    with pytest.raises(CapabilityError):
        game.shapley(GameParams.from_bandwidths([1.0] * 21, 1.0))


def test_shapley_matches_independent_enumeration():
    rng = random.Random(5)
    for _ in range(10):
        bw = [rng.uniform(0, 30) for _ in range(rng.randint(1, 5))]
        p = GameParams.from_bandwidths(bw, rng.uniform(1, 10))
        value = lambda S: brentq_payoff(sum(bw[i] for i in S), p.qos_exponent) if S else 0.0
        ref = shapley_enumerate(value, len(bw))
        assert np.allclose(game.shapley(p), ref, atol=1e-7)


def test_core_examples():
    p1 = GameParams.from_bandwidths([10], LN1000)
    assert game.is_in_core(p1, [game.payoff(10, LN1000)]).in_core
    p = GameParams.from_bandwidths([10, 5, 10], LN1000)
    phi = game.shapley(p)
    assert game.is_in_core(p, phi).in_core
    bad = game.is_in_core(p, phi + 0.1)
    assert not bad.in_core and bad.reason == "efficiency" and bad.blocking_coalition == frozenset({"1", "2", "3"})
    skewed = np.array([phi.sum(), 0.0, 0.0])
    check = game.is_in_core(p, skewed)
    assert not check.in_core and check.reason == "blocked"
    blocked = check.blocking_coalition
    assert sum(skewed[p.index_of(i)] for i in blocked) < game.characteristic_function(p, blocked).value
    with pytest.raises(DomainError):
        game.is_in_core(p, [1.0, 2.0])


def _random_masks(rng, n):
    s = rng.randrange(1 << n)
    t = rng.randrange(1 << n) & ~s
    return s, t


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 40), min_size=2, max_size=6), st.floats(0.5, 12), st.randoms())
def test_superadditive(bw, beta, rng):
    p = GameParams.from_bandwidths(bw, beta)
    v = game.coalition_values(p)
    for _ in range(20):
        s, t = _random_masks(rng, p.n)
        assert v[s | t] >= v[s] + v[t] - 1e-9


@pytest.mark.parametrize("n", range(1, 8))
def test_independent_sum_linear(n):
    p = GameParams.from_bandwidths([10] * n, LN1000)
    assert game.independent_sum(p) == n * game.payoff(10, LN1000)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 30), min_size=1, max_size=5), st.floats(0.5, 12))
def test_supermodular_implies_shapley_in_core(bw, beta):
    p = GameParams.from_bandwidths(bw, beta)
    v = game.coalition_values(p)
    if game.is_supermodular(p, values=v):
        assert game.is_in_core(p, game.shapley(p, v), tol=1e-9, values=v).in_core
