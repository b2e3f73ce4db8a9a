import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from permchan.core import (
    ChannelClass,
    DimensionError,
    NotStochasticError,
    SizeError,
    classify_channel,
    count_ntypes,
    enumerate_ntypes,
    exact_rank,
    extreme_point_count,
    float_rank,
    format_channel_text,
    in_convex_hull,
    kl_divergence,
    log_type_class_size,
    multinomial_log_prob,
    numerical_rank,
    output_marginal,
    parse_channel_text,
)

from . import oracles


def test_kl_examples():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0
    assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2))
    v = kl_divergence([0.5, 0.5], [0.25, 0.75])
    assert v == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(2 / 3), abs=1e-14)
    assert v == pytest.approx(0.14384, abs=1e-5)
    # rational route gives the same number
    assert kl_divergence([Fraction(1, 2)] * 2, [Fraction(1, 4), Fraction(3, 4)]) == pytest.approx(v, abs=1e-15)


def test_kl_support_violation_is_inf():
    assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == math.inf
    assert kl_divergence([1.0, 0.0], [1.0, 0.0]) == 0


def test_kl_length_mismatch():
    with pytest.raises(DimensionError):
        kl_divergence([1.0], [0.5, 0.5])


probs = st.integers(2, 5).flatmap(
    lambda k: st.tuples(
        st.lists(st.floats(0.01, 1), min_size=k, max_size=k),
        st.lists(st.floats(0.01, 1), min_size=k, max_size=k),
    )
)


@given(probs)
def test_kl_nonnegative_zero_iff_equal(pair):
    a, b = (np.array(v) / sum(v) for v in pair)
    d = kl_divergence(a, b)
    assert d >= 0
    assert kl_divergence(a, a) == pytest.approx(0, abs=1e-15)
    if np.max(np.abs(a - b)) > 1e-3:
        assert d > 0


def test_output_marginal_examples(bsc01):
    assert np.allclose(output_marginal([0.3, 0.7], [[1, 0], [0, 1]]), [0.3, 0.7])
    assert np.allclose(output_marginal([0.5, 0.5], bsc01), [0.5, 0.5])
    assert np.allclose(output_marginal([1, 0], bsc01), [0.9, 0.1])


def test_output_marginal_exact():
    ch = [[Fraction(1, 3), Fraction(2, 3)], [Fraction(1, 2), Fraction(1, 2)]]
    assert output_marginal([Fraction(1, 2), Fraction(1, 2)], ch) == (Fraction(5, 12), Fraction(7, 12))


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_output_marginal_in_simplex(q, k, seed):
    r = np.random.default_rng(seed)
    P = r.dirichlet(np.ones(k), size=q)
    pi = r.dirichlet(np.ones(q))
    py = output_marginal(pi, P.tolist())
    assert np.all(py >= 0) and abs(py.sum() - 1) < 1e-12


def test_rank_examples():
    assert numerical_rank(np.eye(3).tolist()) == 3
    assert numerical_rank([[0.5, 0.5], [0.5, 0.5]]) == 1
    rows = [[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.4, 0.4, 0.2]]
    assert numerical_rank(rows) == 2
    assert exact_rank([[Fraction(str(v)) for v in r] for r in rows]) == 2


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1), st.booleans())
def test_float_rank_matches_exact(q, k, seed, dup):
    r = np.random.default_rng(seed)
    ints = r.integers(0, 4, size=(q, k))
    if dup and q > 1:
        ints[-1] = ints[0]
    fr = [[Fraction(int(v)) for v in row] for row in ints]
    assert float_rank(ints.astype(float)) == exact_rank(fr)


def test_enumerate_ntypes_examples():
    assert enumerate_ntypes(2, 2) == [(0, 2), (1, 1), (2, 0)]
    assert len(enumerate_ntypes(1, 3)) == 3
    assert len(enumerate_ntypes(4, 3)) == 15 == math.comb(6, 2)


def test_enumerate_ntypes_guard():
    with pytest.raises(SizeError):
        enumerate_ntypes(1000, 6)
    assert count_ntypes(1000, 6) > 10**8


def test_multinomial_examples():
    assert multinomial_log_prob((2, 0), (1, 0)) == 0
    assert multinomial_log_prob((1, 1), (0.5, 0.5)) == pytest.approx(math.log(0.5))
    assert multinomial_log_prob((2, 1), (2 / 3, 1 / 3)) == pytest.approx(math.log(4 / 9))
    assert multinomial_log_prob((1, 1), (1, 0)) == -math.inf


def test_type_class_size_examples():
    assert log_type_class_size((5, 0, 0)) == 0
    assert log_type_class_size((1, 1)) == pytest.approx(math.log(2))
    assert log_type_class_size((2, 2)) == pytest.approx(math.log(6))


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_multinomial_normalizes(q):
    r = np.random.default_rng(q)
    for n in (1, 5, 12):
        p = r.dirichlet(np.ones(q))
        total = math.fsum(math.exp(multinomial_log_prob(t, p)) for t in enumerate_ntypes(n, q))
        assert total == pytest.approx(1, abs=1e-10)


def test_multinomial_against_oracle():
    p = [Fraction(1, 6), Fraction(1, 3), Fraction(1, 2)]
    for t in enumerate_ntypes(5, 3):
        assert multinomial_log_prob(t, p) == pytest.approx(math.log(oracles.multinomial_prob(t, p)), abs=1e-12)


def test_classify_examples():
    ident = classify_channel([[1, 0], [0, 1]])
    assert ident.kind is ChannelClass.BLOCK_DIAGONAL and ident.beta == 2 and ident.rank == 2
    er = classify_channel([[0.7, 0, 0.3], [0, 0.6, 0.4]])
    assert er.kind is ChannelClass.ERASURE and er.q == 2
    assert classify_channel([[0.5, 0.5], [0, 1]]).kind is ChannelClass.Z_CHANNEL
    assert classify_channel([[0.9, 0.1], [0.2, 0.8]]).kind is ChannelClass.STRICTLY_POSITIVE
    zz = [[0.5, 0.5, 0], [0, 0.5, 0.5], [0, 0, 1]]
    assert classify_channel(zz).kind is ChannelClass.ZIGZAG


def test_classify_rejects_bad_rows():
    with pytest.raises(NotStochasticError):
        classify_channel([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(NotStochasticError):
        classify_channel([[1.5, -0.5], [0.5, 0.5]])
    with pytest.raises(DimensionError):
        classify_channel([[1.0], [0.5, 0.5]])


def test_strictly_positive_iff_min_positive(rng):
    for _ in range(20):
        P = rng.dirichlet(np.ones(3), size=3)
        if rng.random() < 0.5:
            P[0] = [0.5, 0.5, 0.0]
        ch = classify_channel(P.tolist())
        assert (ch.kind is ChannelClass.STRICTLY_POSITIVE) == (P.min() > 0)
        assert 1 <= ch.rank <= 3


@given(st.integers(0, 2**32 - 1))
def test_classify_permutation_invariant(seed):
    r = np.random.default_rng(seed)
    pool = [
        np.array([[0.7, 0.3, 0, 0], [0.4, 0.6, 0, 0], [0, 0, 0.2, 0.8]]),
        np.array([[0.7, 0, 0.3], [0, 0.6, 0.4]]),
        np.array([[0.5, 0.5], [0, 1.0]]),
        np.array([[0.5, 0.5, 0], [0, 0.5, 0.5], [0, 0, 1.0]]),
        np.array([[0.5, 0.2, 0.3], [0.1, 0.0, 0.9], [0.2, 0.3, 0.5]]),
    ]
    P = pool[int(r.integers(len(pool)))]
    Pp = P[r.permutation(P.shape[0])][:, r.permutation(P.shape[1])]
    a, b = classify_channel(P.tolist()), classify_channel(Pp.tolist())
    assert a.kind is b.kind and a.rank == b.rank and a.beta == b.beta


def test_parse_channel_text_roundtrip():
    text = "# a comment\n2 3\n0.7 0 3/10   # trailing\n0 0.6 0.4\n"
    ch = parse_channel_text(text)
    assert ch.kind is ChannelClass.ERASURE
    assert ch.exact[0][2] == Fraction(3, 10)
    again = parse_channel_text(format_channel_text(ch))
    assert again.exact == ch.exact


def test_parse_channel_text_errors():
    with pytest.raises(ValueError):
        parse_channel_text("2 2\n0.5 0.5\n")
    with pytest.raises(ValueError):
        parse_channel_text("2 2\n0.5 0.6\n0.5 0.5\n")
    with pytest.raises(ValueError):
        parse_channel_text("2 2\n0.5 x\n0.5 0.5\n")


def test_parse_renormalizes_within_tolerance():
    ch = parse_channel_text("1 2\n0.5 0.5000000000001\n")
    assert sum(ch.exact[0]) == 1


def test_hull_and_extreme_points():
    tri = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert in_convex_hull([0.2, 0.3, 0.5], tri)
    assert not in_convex_hull([0.2, 0.3, 0.6], tri)
    assert extreme_point_count(tri + [[1 / 3, 1 / 3, 1 / 3]]) == 3
    assert extreme_point_count([[0.5, 0.5], [0.5, 0.5]]) == 1
