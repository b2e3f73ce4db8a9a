import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from permchan.bounds import (
    PETROV_ALPHA,
    balls_in_bins_bound,
    balls_in_bins_prob,
    bernoulli_sum_max_mass,
    bernstein_tail,
    c_star,
    calibrate_alpha,
    capacity_value,
    erasure_gamma,
    mi_upper_bound,
    petrov_bound,
    prob_a_stirling_bound,
    gap_constant_bound,
    stam_bounds,
    zigzag_conditional_bound,
)
from permchan.core import ChannelClass, PreconditionError, classify_channel, enumerate_ntypes
from permchan.covering import net_for_n
from permchan.exact import gap_term, marginal_divergence, mutual_information_exact

from . import oracles


def neg_log_prob_a(t):
    n = sum(t)
    p = oracles.multinomial_prob(t, [Fraction(c, n) for c in t])
    return -(math.log(p.numerator) - math.log(p.denominator))


def test_capacity_examples():
    assert capacity_value([[0.5, 0.5], [0, 1]]).value == 0.5
    er = [[0.6, 0, 0, 0.4], [0, 0.9, 0, 0.1], [0, 0, 0.5, 0.5]]
    assert capacity_value(er).value == 1
    for q in (2, 3, 5):
        assert capacity_value(np.eye(q).tolist()).value == q - 1


def test_capacity_structure_identity(rng):
    cases = [rng.dirichlet(np.ones(3), size=3).tolist(), np.eye(3).tolist(), [[0.5, 0.5], [0, 1]],
             [[0.7, 0, 0.3], [0, 0.6, 0.4]],
             [[0.5, 0.5, 0, 0], [0.2, 0.8, 0, 0], [0, 0, 0.3, 0.7], [0, 0, 0.6, 0.4]]]
    for P in cases:
        ch = classify_channel(P)
        rep = capacity_value(ch)
        assert rep.solved
        inc = (ch.beta - 1) / 2 if ch.kind is ChannelClass.BLOCK_DIAGONAL else 0
        if ch.kind in (ChannelClass.STRICTLY_POSITIVE, ChannelClass.BLOCK_DIAGONAL):
            assert rep.value == (ch.rank - 1) / 2 + inc


def test_capacity_unsolved_classes():
    zz = capacity_value([[0.5, 0.5, 0], [0, 0.5, 0.5], [0, 0, 1]])
    assert not zz.solved and zz.lower == 1 and zz.upper == 1.5 and zz.caveat
    gen = capacity_value([[0.5, 0.5, 0], [0, 0.5, 0.5], [0.3, 0.3, 0.4]])
    assert gen.kind is ChannelClass.GENERAL and gen.caveat == "bounds-only"
    assert gen.lower <= gen.upper == 1.0


def test_zigzag_bound():
    assert zigzag_conditional_bound(3).value == 1.5
    assert zigzag_conditional_bound(1).value == 0
    assert zigzag_conditional_bound(5).value - (5 - 1) / 2 == (5 - 1) / 4
    assert "even" in zigzag_conditional_bound(4).note


def test_c_star_and_gap_constant():
    assert c_star([[0.9, 0.1], [0.1, 0.9]]) == pytest.approx(1 / 9)
    a = 0.6
    assert gap_constant_bound([[0.5, 0.5], [0.5, 0.5]], a) == pytest.approx(0.5 * math.log(2 * math.pi * a * a) + 1 / 6)
    assert gap_constant_bound([[0.5, 0.5], [0.5, 0.5]], a, n=10) == pytest.approx(0.5 * math.log(2 * math.pi * a * a) + 1 / 60)
    assert c_star([[0.5, 0.5], [0, 1]]) == 0
    with pytest.raises(PreconditionError):
        gap_constant_bound([[0.5, 0.5], [0, 1]], a)


def test_stirling_examples():
    assert prob_a_stirling_bound((7,)) == pytest.approx(1 / 84)
    assert prob_a_stirling_bound((1, 1)) >= math.log(2)
    assert prob_a_stirling_bound((4, 4)) >= neg_log_prob_a((4, 4))


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_stirling_dominates_exact(q):
    for n in range(1, 15):
        for t in enumerate_ntypes(n, q):
            assert prob_a_stirling_bound(t) >= neg_log_prob_a(t)


def test_stirling_single_remainder_is_too_small():
    # the single 1/(12n) remainder undercuts the exact value once two counts are nonzero
    assert prob_a_stirling_bound((1, 1), remainder="single") < math.log(2)
    bad = [t for t in enumerate_ntypes(8, 3) if prob_a_stirling_bound(t, remainder="single") < neg_log_prob_a(t)]
    assert bad == [t for t in enumerate_ntypes(8, 3) if sum(c > 0 for c in t) >= 2]


def test_alpha_calibration():
    assert PETROV_ALPHA == calibrate_alpha(1000)
    assert 0.56 < PETROV_ALPHA < 1 / math.sqrt(math.pi)
    for n in range(1, 31):
        exact = math.comb(n, n // 2) / 2 ** n
        assert exact <= PETROV_ALPHA / math.sqrt(n / 2) * (1 + 1e-12)
    assert calibrate_alpha(30) <= PETROV_ALPHA


def test_petrov_examples():
    assert petrov_bound([0, 1, 1, 0]) == math.inf
    assert petrov_bound([0.1, 0.9, 0.5], alpha=0.7) == pytest.approx(0.7 / math.sqrt(0.7))


@given(st.lists(st.sampled_from([0.5]), min_size=1, max_size=60))
def test_petrov_dominates_fair(ps):
    assert bernoulli_sum_max_mass(ps) <= petrov_bound(ps) * (1 + 1e-12)


def test_balls_in_bins_examples():
    assert balls_in_bins_bound([1.0], [[1.0]] * 5) == pytest.approx(1)
    assert balls_in_bins_prob([5], [[1.0]] * 5) == pytest.approx(1)
    ex = math.comb(10, 5) / 2 ** 10
    assert balls_in_bins_prob([5, 5], [[0.5, 0.5]] * 10) == pytest.approx(ex)
    assert ex <= balls_in_bins_bound([0.5, 0.5], [[0.5, 0.5]] * 10)
    with pytest.raises(PreconditionError):
        balls_in_bins_bound([1.0, 0.0], [[0.5, 0.5]])


@pytest.mark.parametrize("q", [2, 3, 4])
def test_balls_in_bins_dominates_uniform_family(q):
    pi = [1 / q] * q
    for n in range(q, 9 * q, q):
        exact = balls_in_bins_prob([n // q] * q, [pi] * n)
        assert exact <= balls_in_bins_bound(pi, [pi] * n) * (1 + 1e-12)


def test_bernstein():
    rep = bernstein_tail(1000, 4, math.e)
    assert rep.applicable and rep.tail == pytest.approx(2 / math.e)
    assert erasure_gamma(3) == 120
    low = bernstein_tail(1.0, 4, 100)
    assert not low.applicable and "precondition" in low.note


def test_mi_upper_bound_rank_one_constant():
    ch = [[0.3, 0.7], [0.3, 0.7]]
    sizes = {len(net_for_n(ch, n)) for n in (10, 100, 1000)}
    assert sizes == {1}
    rep = mi_upper_bound(ch, 100, 1, 0.0)
    assert rep.value == 1.0 and rep.asymptotic_slope == 0


@pytest.mark.parametrize("ch", [[[0.8, 0.2], [0.3, 0.7]], [[0.7, 0, 0.3], [0, 0.6, 0.4]]])
def test_mi_upper_bound_slope(ch):
    ns = [100, 1000, 10_000]
    vals = [mi_upper_bound(ch, n, len(net_for_n(ch, n)), 0.5).value for n in ns]
    slope = np.polyfit(np.log(ns), vals, 1)[0]
    assert slope == pytest.approx(0.5, abs=0.05)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_mi_upper_bound_dominates_exact(n, bsc01):
    from permchan.core import iter_ntypes
    c = max(gap_term(pi, bsc01) for pi in iter_ntypes(n, 2))
    ub = mi_upper_bound(bsc01, n, len(net_for_n(bsc01, n)), c).value
    assert ub >= mutual_information_exact(bsc01, n)


def test_stam_examples():
    assert stam_bounds(3, 10, 1).stam == 0
    full = stam_bounds(3, 10, 10)
    assert full.stam == pytest.approx((3 - 1) / 2 * 10)
    assert full.large_m is None and "skipped" in full.note
    with pytest.raises(ValueError):
        stam_bounds(2, 5, 6)


def test_stam_half_against_exact(bsc01):
    n, m = 12, 6
    pi = (6, 6)
    c = gap_term(pi, bsc01)
    rep = stam_bounds(2, n, m, c)
    assert rep.han == pytest.approx(c / 2)
    exact = marginal_divergence(pi, bsc01, None, m)
    assert exact <= rep.han + 1e-12
    assert exact <= rep.stam and exact <= rep.large_m
    assert rep.minimal in ("han", "stam", "large_m")


def test_large_m_closed_form():
    q, n, m = 3, 20, 15
    rep = stam_bounds(q, n, m)
    H = sum(1 / j for j in range(n - m + 1, n))
    assert rep.large_m == pytest.approx((q - 1) / (n - 1) * (n * H - (m - 1)))


@pytest.mark.parametrize("seed", range(4))
def test_stam_and_han_hold_on_random_channels(seed):
    r = np.random.default_rng(seed)
    P = (0.05 + r.dirichlet(np.ones(2), size=2) * 0.9).tolist()
    for n in range(2, 9):
        for pi in enumerate_ntypes(n, 2):
            c = gap_term(pi, P)
            for m in range(1, n + 1):
                d = marginal_divergence(pi, P, None, m)
                rep = stam_bounds(2, n, m, c)
                assert d <= rep.han + 1e-10
                assert d <= rep.stam + 1e-10
                if rep.large_m is not None:
                    assert d <= rep.large_m + 1e-10


def test_crossover_condition():
    rep = stam_bounds(2, 100, 50, 1.0, c_star_value=1 / 9)
    assert rep.crossover_rhs == pytest.approx(min(1.0, 2 * math.log(2)))
    assert rep.ours_tighter is False
