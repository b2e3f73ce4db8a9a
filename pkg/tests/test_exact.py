import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from permchan.core import PreconditionError, enumerate_ntypes
from permchan.exact import (
    bsc,
    divergence_exact,
    gap_profile,
    gap_term,
    joint_count_enumerate,
    log_slope,
    marginal_divergence,
    mutual_information_exact,
    prob_A_given_ytype,
    tightness_probe,
    ytype_law_given_A,
    ytype_law_iid,
)

from . import oracles

F = Fraction
ERASURE = [[0.7, 0, 0.3], [0, 0.6, 0.4]]


def test_joint_count_enumerate_counts():
    assert len(list(joint_count_enumerate((1, 1), 2))) == 4
    assert len(list(joint_count_enumerate((2,), 2))) == 3
    assert len(list(joint_count_enumerate((2, 1), 2))) == 6


def test_law_identity_is_point_mass():
    law = ytype_law_given_A((2, 3, 1), np.eye(3).tolist())
    assert set(law.log_probs) == {(2, 3, 1)}
    assert law.prob((2, 3, 1)) == pytest.approx(1)


def test_law_uniform_rows():
    half = [[F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)]]
    law = ytype_law_given_A((1, 1), half, exact=True)
    assert law.probs == {(2, 0): F(1, 4), (1, 1): F(1, 2), (0, 2): F(1, 4)}


def test_law_erasure_reachable_types():
    law = ytype_law_given_A((1, 1), ERASURE)
    assert len(law) == 4
    exact = oracles.output_type_law((1, 1), [[F(7, 10), 0, F(3, 10)], [0, F(3, 5), F(2, 5)]])
    for m, p in exact.items():
        assert law.prob(m) == pytest.approx(float(p), abs=1e-14)


def test_prob_a_examples(bsc01):
    assert prob_A_given_ytype((2, 1), [[1, 0], [0, 1]], (2, 1)) == pytest.approx(1)
    same = [[0.3, 0.7], [0.3, 0.7]]
    p_a = math.comb(3, 1) * (2 / 3) ** 2 * (1 / 3)
    for m in [(3, 0), (1, 2), (0, 3)]:
        assert prob_A_given_ytype((2, 1), same, m) == pytest.approx(p_a)
    # brute force: P[A=1 | m] = P[m | A=1] P[A=1] / P_iid[m]
    rows = [[F(9, 10), F(1, 10)], [F(1, 10), F(9, 10)]]
    num = oracles.output_type_law((1, 1), rows)[(1, 1)] * F(1, 2)
    den = oracles.iid_output_type_law((1, 1), rows)[(1, 1)]
    assert prob_A_given_ytype((1, 1), bsc01, (1, 1)) == pytest.approx(float(num / den), abs=1e-14)
    assert prob_A_given_ytype((1, 1), rows, (1, 1), exact=True) == num / den


def test_prob_a_unreachable_type():
    with pytest.raises(PreconditionError):
        prob_A_given_ytype((2, 0), [[1, 0], [0, 1]], (1, 1))


def test_divergence_examples():
    assert divergence_exact((1,), [[0.2, 0.8]], (0.2, 0.8)).direct == pytest.approx(0, abs=1e-15)
    ident = divergence_exact((1, 1), [[1, 0], [0, 1]], (0.5, 0.5))
    assert ident.direct == pytest.approx(math.log(2))
    rep = divergence_exact((2, 2), bsc(0.1))
    assert rep.residual < 1e-10
    rows = [[F(9, 10), F(1, 10)], [F(1, 10), F(9, 10)]]
    assert rep.direct == pytest.approx(oracles.sequence_divergence((2, 2), rows, (0.5, 0.5)), abs=1e-12)
    assert rep.term_iid == pytest.approx(0, abs=1e-15)


def test_divergence_infinite_when_q_misses_support():
    rep = divergence_exact((1, 1), ERASURE, (0.5, 0.5, 0.0))
    assert rep.infinite and rep.direct == math.inf and rep.offending == (2,)


def test_law_normalizes(rng):
    for _ in range(5):
        P = rng.dirichlet(np.ones(3), size=3)
        for pi in [(4, 4, 4), (12, 0, 0), (1, 5, 6)]:
            assert ytype_law_given_A(pi, P.tolist()).total() == pytest.approx(1, abs=1e-10)
            assert ytype_law_iid(pi, P.tolist()).total() == pytest.approx(1, abs=1e-10)


channel_seed = st.integers(0, 2**32 - 1)


@given(channel_seed, st.integers(1, 10), st.integers(2, 3), st.integers(2, 3))
def test_decomposition_identity(seed, n, q, k):
    r = np.random.default_rng(seed)
    P = (0.02 + r.dirichlet(np.ones(k), size=q) * (1 - 0.02 * k)).tolist()
    pi = tuple(int(v) for v in r.multinomial(n, np.ones(q) / q))
    Q = r.dirichlet(np.ones(k))
    rep = divergence_exact(pi, P, Q)
    assert abs(rep.direct - rep.decomposed) <= 1e-8
    assert rep.gap >= -1e-9


@given(channel_seed, st.integers(1, 8))
def test_gap_does_not_depend_on_q(seed, n):
    r = np.random.default_rng(seed)
    P = r.dirichlet(np.ones(2), size=2).tolist()
    pi = (n // 2, n - n // 2)
    g = [divergence_exact(pi, P, r.dirichlet(np.ones(2))).gap for _ in range(3)]
    assert max(g) - min(g) < 1e-12


def test_gap_profile_rank_one_is_zero():
    rows = gap_profile([[0.3, 0.7], [0.3, 0.7]], [2, 5, 9])
    assert all(abs(r.gap) < 1e-12 for r in rows)


def test_gap_profile_identity_slope():
    ns = [4, 6, 8, 10, 12]
    g = [r.gap for r in gap_profile(np.eye(3).tolist(), ns)]
    assert log_slope(ns, g) == pytest.approx(1.0, rel=0.15)


def test_gap_profile_fixed_q_only_changes_direct(bsc01):
    a = gap_profile(bsc01, [6], "marginal")[0]
    b = gap_profile(bsc01, [6], (0.3, 0.7))[0]
    assert a.gap == pytest.approx(b.gap, abs=1e-14)
    assert b.direct > a.direct


def test_marginal_divergence_endpoints(bsc01):
    pi = (3, 2)
    full = divergence_exact(pi, bsc01, (0.4, 0.6)).direct
    assert marginal_divergence(pi, bsc01, (0.4, 0.6), 5) == pytest.approx(full, abs=1e-9)
    assert marginal_divergence(pi, bsc01, None, 1) == pytest.approx(0, abs=1e-12)


def test_marginal_divergence_identity_against_brute_force():
    rows = [[1, 0], [0, 1]]
    got = marginal_divergence((2, 2), rows, (0.5, 0.5), 2)
    assert got == pytest.approx(oracles.first_m_divergence((2, 2), rows, (0.5, 0.5), 2), abs=1e-12)
    # first two of a uniform arrangement of 0011: P(00) = P(11) = 1/6, P(01) = P(10) = 1/3
    assert got == pytest.approx(2 * (1 / 6) * math.log(4 / 6) + 2 * (1 / 3) * math.log(4 / 3), abs=1e-12)


@pytest.mark.parametrize("pi", [(3, 1), (2, 2, 1), (1, 2, 1)])
def test_marginal_divergence_against_brute_force(pi):
    q = len(pi)
    rows = [[F(1, 5), F(4, 5)], [F(3, 5), F(2, 5)], [F(1, 2), F(1, 2)]][:q]
    Q = (0.45, 0.55)
    for m in range(1, sum(pi) + 1):
        assert marginal_divergence(pi, rows, Q, m) == pytest.approx(oracles.first_m_divergence(pi, rows, Q, m),
                                                                    abs=1e-12)


def test_marginal_divergence_monotone_in_m(rng):
    for _ in range(4):
        P = rng.dirichlet(np.ones(3), size=2).tolist()
        pi = (4, 3)
        Q = rng.dirichlet(np.ones(3))
        vals = [marginal_divergence(pi, P, Q, m) for m in range(1, 8)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_tightness_probe_values():
    tab = tightness_probe([4, 8, 12])
    assert tab.min_gap > 0.01
    assert tab.identity_slope > 0.3
    # at n = 2 the crossover is 1/2: outputs are independent of the input
    assert tightness_probe([2]).rows[0]["gap_nats"] == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        tightness_probe([3])


@pytest.mark.parametrize("q,k", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_cross_oracle_small(q, k):
    r = np.random.default_rng(q * 10 + k)
    rows = []
    for _ in range(q):
        cuts = sorted(r.choice(np.arange(1, 12), size=k - 1, replace=False))
        parts = np.diff([0, *cuts, 12])
        rows.append([F(int(v), 12) for v in parts])
    n_max = 6 if k == 2 else 4
    for n in range(1, n_max + 1):
        for pi in enumerate_ntypes(n, q):
            assert ytype_law_given_A(pi, rows, exact=True).probs == oracles.output_type_law(pi, rows)
            assert ytype_law_iid(pi, rows, exact=True).probs == oracles.iid_output_type_law(pi, rows)
            Q = [1 / k] * k
            assert divergence_exact(pi, rows, Q, exact=True).direct == pytest.approx(
                oracles.sequence_divergence(pi, rows, Q), abs=1e-12)


def test_gap_term_exact_matches_float(bsc01):
    rows = [[F(9, 10), F(1, 10)], [F(1, 10), F(9, 10)]]
    assert gap_term((3, 4), rows, exact=True) == pytest.approx(gap_term((3, 4), bsc01), abs=1e-12)


def test_mutual_information_limits():
    assert mutual_information_exact([[0.4, 0.6], [0.4, 0.6]], 5) == pytest.approx(0, abs=1e-12)
    # noiseless: the output type reveals the input type
    assert mutual_information_exact([[1, 0], [0, 1]], 6) == pytest.approx(math.log(7), abs=1e-12)
