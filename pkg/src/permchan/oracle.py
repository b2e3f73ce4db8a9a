"""Sequence-level reference computations.

Everything here enumerates whole input and output sequences and shares no
code with the type-level machinery in :mod:`permchan.exact`; the two are
compared against each other by the verification suites.  Channel entries
must be rational.  Probabilities are kept as integer numerators over a
common denominator, so results are exact.
"""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import permutations, product
from typing import Sequence

import numpy as np

from .core import SizeError

ORACLE_MAX_SEQUENCES = 3 ** 9


def _integer_rows(rows) -> tuple[list[list[int]], int]:
    fr = [[Fraction(v) for v in r] for r in rows]
    den = math.lcm(*(v.denominator for r in fr for v in r))
    return [[int(v * den) for v in r] for r in fr], den


def _type_class(pi: Sequence[int]) -> list[tuple[int, ...]]:
    word = [i for i, c in enumerate(pi) for _ in range(c)]
    return sorted(set(permutations(word)))


def sequence_law(pi: Sequence[int], rows) -> tuple[np.ndarray, int]:
    """P[Y^n = y] for every y in [k]^n (row-major, first output slowest)
    as integer numerators, together with the common denominator.

    Inputs are uniform over the sequences of type ``pi``; each position goes
    through the channel independently; the outputs are uniformly permuted.
    The permutation leaves the law of Y^n equal to the symmetrization of
    the law of Z^n, computed here by averaging over all input orderings.
    """
    ints, den = _integer_rows(rows)
    n, k = sum(pi), len(ints[0])
    if k ** n > ORACLE_MAX_SEQUENCES:
        raise SizeError(f"k^n = {k ** n} exceeds the oracle limit {ORACLE_MAX_SEQUENCES}")
    xs = _type_class(pi)
    table = np.array(ints, dtype=object)
    total = np.zeros(k ** n, dtype=object)
    for x in xs:
        vec = np.array([1], dtype=object)
        for sym in x:
            vec = np.multiply.outer(vec, table[sym]).reshape(-1)
        total = total + vec
    return total, den ** n * len(xs)


def _output_types(n: int, k: int) -> list[tuple[int, ...]]:
    return [tuple(np.bincount(y, minlength=k)) for y in product(range(k), repeat=n)]


def ytype_law_oracle(pi: Sequence[int], rows) -> dict[tuple[int, ...], Fraction]:
    """Law of the output type, by summing the sequence law over type classes."""
    nums, den = sequence_law(pi, rows)
    k = len(rows[0])
    out: dict[tuple[int, ...], int] = {}
    for y, v in zip(_output_types(sum(pi), k), nums):
        if v:
            key = tuple(int(c) for c in y)
            out[key] = out.get(key, 0) + int(v)
    return {m: Fraction(v, den) for m, v in out.items()}


def iid_ytype_law_oracle(pi: Sequence[int], rows) -> dict[tuple[int, ...], Fraction]:
    """Output-type law when the n inputs are iid from pi / n."""
    n = sum(pi)
    fr = [[Fraction(v) for v in r] for r in rows]
    k = len(fr[0])
    py = [sum(Fraction(c, n) * fr[i][j] for i, c in enumerate(pi)) for j in range(k)]
    out: dict[tuple[int, ...], Fraction] = {}
    for y in product(range(k), repeat=n):
        p = math.prod((py[j] for j in y), start=Fraction(1))
        if p:
            key = tuple(int(c) for c in np.bincount(y, minlength=k))
            out[key] = out.get(key, 0) + p
    return out


def divergence_oracle(pi: Sequence[int], rows, Q: Sequence) -> float:
    """D(P_{Y^n} || Q^n) summed over every output sequence."""
    nums, den = sequence_law(pi, rows)
    k = len(rows[0])
    n = sum(pi)
    log_q = [math.log(float(v)) if v > 0 else -math.inf for v in Q]
    log_den = math.log(den)
    terms = []
    for y, v in zip(product(range(k), repeat=n), nums):
        if not v:
            continue
        lq = math.fsum(log_q[j] for j in y)
        if lq == -math.inf:
            return math.inf
        lp = math.log(int(v)) - log_den
        terms.append(math.exp(lp) * (lp - lq))
    return math.fsum(terms)


def bayes_decode_oracle(y_type: Sequence[int], codewords, rows) -> int:
    """Maximum-likelihood message under uniform priors, computed from the
    sequence-level law; the lowest index wins ties."""
    best, best_p = 0, Fraction(-1)
    for i, w in enumerate(codewords):
        law = ytype_law_oracle(tuple(int(c) for c in w), rows)
        p = law.get(tuple(int(c) for c in y_type), Fraction(0))
        if p > best_p:
            best, best_p = i, p
    return best
