"""Exact divergence between a type-class channel output and product laws.

Everything here works on output *types* rather than sequences: given the
input type, the output sequence law is exchangeable, so a sequence's
probability is its type's probability divided by the type class size.

The law of the output type when the input is uniform on a type class with
counts ``c`` is the coefficient array of prod_i (sum_j p_ij z_j)^{c_i}.  It is
built by pushing one input symbol at a time through the channel, in the log
domain for floats and with Fractions in exact mode.  Arrays are indexed by
the first ``k - 1`` output counts; the last count is implied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .core import (
    MAX_ENUMERATION,
    DimensionError,
    PreconditionError,
    SizeError,
    as_channel,
    check_ntype,
    iter_ntypes,
    kl_divergence,
    log_factorial,
    log_fraction,
    multinomial_log_prob,
    output_marginal,
)

# ---------------------------------------------------------------------------
# joint count matrices


def joint_count_enumerate(pi: Sequence[int], k: int, *, limit: int = MAX_ENUMERATION):
    """All q x k nonnegative integer matrices whose row i sums to ``pi[i]``."""
    pi = check_ntype(pi)
    total = 1
    for c in pi:
        total *= math.comb(c + k - 1, k - 1)
    if total > limit:
        raise SizeError(f"{total} joint count matrices exceeds limit {limit}")
    per_row = [list(iter_ntypes(c, k)) for c in pi]
    return [tuple(rows) for rows in product(*per_row)]


# ---------------------------------------------------------------------------
# y-type laws


def _log_rows(rows) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(rows, dtype=float))


def _shift_slices(axis: int, ndim: int):
    dst = [slice(None)] * ndim
    src = [slice(None)] * ndim
    dst[axis] = slice(1, None)
    src[axis] = slice(None, -1)
    return tuple(dst), tuple(src)


def _push_log(arr: np.ndarray, logp: np.ndarray) -> np.ndarray:
    k = logp.shape[0]
    out = arr + logp[-1]
    for j in range(k - 1):
        if logp[j] == -math.inf:
            continue
        dst, src = _shift_slices(j, k - 1)
        shifted = np.full_like(arr, -math.inf)
        shifted[dst] = arr[src] + logp[j]
        out = np.logaddexp(out, shifted)
    return out


def _push_exact(arr: np.ndarray, row: Sequence[Fraction]) -> np.ndarray:
    k = len(row)
    out = arr * row[-1]
    for j in range(k - 1):
        if row[j] == 0:
            continue
        dst, src = _shift_slices(j, k - 1)
        out[dst] = out[dst] + arr[src] * row[j]
    return out


def _conv_log(symbol_rows: list[tuple[int, np.ndarray]], n: int, k: int) -> np.ndarray:
    shape = (n + 1,) * (k - 1)
    arr = np.full(shape, -math.inf)
    arr[(0,) * (k - 1)] = 0.0
    for count, logp in symbol_rows:
        for _ in range(count):
            arr = _push_log(arr, logp)
    return arr


def _conv_exact(symbol_rows: list[tuple[int, Sequence[Fraction]]], n: int, k: int) -> np.ndarray:
    shape = (n + 1,) * (k - 1)
    arr = np.empty(shape, dtype=object)
    arr.fill(Fraction(0))
    arr[(0,) * (k - 1)] = Fraction(1)
    for count, row in symbol_rows:
        for _ in range(count):
            arr = _push_exact(arr, row)
    return arr


@dataclass
class YTypeLaw:
    """Law of the output type under a named conditioning.

    ``log_probs`` maps each reachable output type to its natural-log
    probability; unreachable types are omitted.  In exact mode ``probs``
    holds the same law as Fractions.
    """

    n: int
    k: int
    conditioning: str
    log_probs: dict[tuple[int, ...], float]
    probs: dict[tuple[int, ...], Fraction] | None = None
    log_prob_A: float | None = None
    _array: np.ndarray | None = field(default=None, repr=False)

    def prob(self, m) -> float:
        lp = self.log_probs.get(tuple(m))
        return 0.0 if lp is None else math.exp(lp)

    def total(self) -> float:
        if self.probs is not None:
            return float(sum(self.probs.values()))
        return math.fsum(math.exp(v) for v in self.log_probs.values())

    def __len__(self) -> int:
        return len(self.log_probs)


def _types_of_array(arr: np.ndarray, n: int, exact: bool):
    if exact:
        idx = [i for i in np.ndindex(arr.shape) if arr[i] != 0]
    else:
        idx = [tuple(int(v) for v in i) for i in np.argwhere(arr > -math.inf)]
    return [(i, tuple(i) + (n - sum(i),)) for i in idx]


def _law_from_array(arr, n, k, conditioning, exact, log_prob_A=None) -> YTypeLaw:
    log_probs: dict[tuple[int, ...], float] = {}
    probs = {} if exact else None
    for i, m in _types_of_array(arr, n, exact):
        if exact:
            probs[m] = arr[i]
            log_probs[m] = log_fraction(arr[i])
        else:
            log_probs[m] = float(arr[i])
    return YTypeLaw(n, k, conditioning, log_probs, probs, log_prob_A, arr)


def _symbol_rows(pi, ch, exact: bool):
    rows = ch.rows(exact)
    if exact:
        return [(c, rows[i]) for i, c in enumerate(pi) if c]
    logp = _log_rows(rows)
    return [(c, logp[i]) for i, c in enumerate(pi) if c]


def _check_inputs(pi, ch):
    pi = check_ntype(pi)
    ch = as_channel(ch)
    if len(pi) != ch.q:
        raise DimensionError(f"type has {len(pi)} entries, channel has {ch.q} inputs")
    return pi, ch


def ytype_law_given_A(pi: Sequence[int], ch, *, exact: bool = False) -> YTypeLaw:
    """Law of the output type when the input is uniform on the type class of
    ``pi`` (the event A = 1 under iid inputs)."""
    pi, ch = _check_inputs(pi, ch)
    n = sum(pi)
    if exact:
        arr = _conv_exact(_symbol_rows(pi, ch, True), n, ch.k)
    else:
        arr = _conv_log(_symbol_rows(pi, ch, False), n, ch.k)
    p_in = [Fraction(c, n) for c in pi] if exact else [c / n for c in pi]
    return _law_from_array(arr, n, ch.k, "A=1", exact, multinomial_log_prob(pi, p_in))


def ytype_law_iid(pi: Sequence[int], ch, *, exact: bool = False) -> YTypeLaw:
    """Law of the output type when the n inputs are iid from pi / n; this is
    the multinomial law with the output marginal as cell probabilities."""
    pi, ch = _check_inputs(pi, ch)
    n = sum(pi)
    if exact:
        p_in = [Fraction(c, n) for c in pi]
        p_y = output_marginal(p_in, ch)
        arr = _conv_exact([(n, p_y)], n, ch.k)
    else:
        p_y = output_marginal([c / n for c in pi], ch)
        arr = _conv_log([(n, _log_rows(p_y))], n, ch.k)
    return _law_from_array(arr, n, ch.k, "iid", exact)


def prob_A_given_ytype(pi: Sequence[int], ch, m: Sequence[int], *, exact: bool = False):
    """P[A = 1 | type(Y^n) = m] under iid inputs from pi / n.

    The conditional is constant on an output type class, so this is also
    P[A = 1 | Y^n = y^n] for any y^n of type m.
    """
    pi, ch = _check_inputs(pi, ch)
    m = tuple(int(v) for v in m)
    if len(m) != ch.k or sum(m) != sum(pi):
        raise DimensionError("output type does not match channel and block length")
    law_a = ytype_law_given_A(pi, ch, exact=exact)
    law_i = ytype_law_iid(pi, ch, exact=exact)
    if m not in law_i.log_probs:
        raise PreconditionError(f"output type {m} has probability zero; conditional undefined")
    if exact:
        n = sum(pi)
        p_a = _exact_prob_A(pi, n)
        return p_a * law_a.probs.get(m, Fraction(0)) / law_i.probs[m]
    if m not in law_a.log_probs:
        return 0.0
    return math.exp(law_a.log_prob_A + law_a.log_probs[m] - law_i.log_probs[m])


def _exact_prob_A(pi, n) -> Fraction:
    from .core import multinomial_prob_exact

    return multinomial_prob_exact(pi, [Fraction(c, n) for c in pi])


# ---------------------------------------------------------------------------
# divergence and its decomposition


@dataclass
class DivergenceReport:
    """D(P_{Y|X}^n o U || Q^n) computed directly and via the decomposition
    n D(P_Y || Q) + gap.  Values in nats."""

    n: int
    pi: tuple[int, ...]
    Q: tuple[float, ...]
    term_iid: float
    gap: float
    direct: float
    residual: float
    infinite: bool = False
    offending: tuple[int, ...] = ()

    @property
    def decomposed(self) -> float:
        return self.term_iid + self.gap

    def as_row(self) -> dict:
        return {
            "n": self.n,
            "pi": " ".join(map(str, self.pi)),
            "Q": " ".join(f"{v:.12g}" for v in self.Q),
            "term_iid_nats": self.term_iid,
            "gap_nats": self.gap,
            "direct_nats": self.direct,
            "residual": self.residual,
            "infinite": int(self.infinite),
            "offending": " ".join(map(str, self.offending)),
        }


def _log_type_sizes(types, n):
    lfn = log_factorial(n)
    return {m: lfn - sum(log_factorial(c) for c in m) for m in types}


def _gap_from_laws(law_a: YTypeLaw, law_i: YTypeLaw) -> float:
    terms = [math.exp(la) * (la - law_i.log_probs[m]) for m, la in law_a.log_probs.items()]
    return math.fsum(terms)


def _log_q(Q):
    return [log_fraction(v) if isinstance(v, Fraction) else (math.log(v) if v > 0 else -math.inf)
            for v in Q]


def divergence_exact(pi: Sequence[int], ch, Q: Sequence | None = None, *,
                     exact: bool = False, residual_tol: float = 1e-8) -> DivergenceReport:
    """Exact D(P_{Y|X}^n o U || Q^n) for U uniform on the type class of ``pi``.

    ``Q`` defaults to the output marginal P_Y.  If ``Q`` vanishes on a symbol
    that the channel can emit, the divergence is reported as infinite and
    the offending symbols are listed.
    """
    pi, ch = _check_inputs(pi, ch)
    n = sum(pi)
    p_in = [Fraction(c, n) for c in pi] if exact else [c / n for c in pi]
    p_y = output_marginal(p_in, ch)
    if Q is None:
        Q = p_y
    if len(Q) != ch.k:
        raise DimensionError(f"Q has {len(Q)} entries, channel has {ch.k} outputs")
    law_a = ytype_law_given_A(pi, ch, exact=exact)
    law_i = ytype_law_iid(pi, ch, exact=exact)
    gap = _gap_from_laws(law_a, law_i)
    q_float = tuple(float(v) for v in Q)

    offending = tuple(j for j in range(ch.k) if p_y[j] > 0 and Q[j] == 0)
    if offending:
        return DivergenceReport(n, pi, q_float, math.inf, gap, math.inf, 0.0, True, offending)

    term_iid = n * kl_divergence(p_y, Q)
    log_q = _log_q(Q)
    sizes = _log_type_sizes(law_a.log_probs, n)
    direct_terms = []
    for m, la in law_a.log_probs.items():
        log_qn = math.fsum(c * log_q[j] for j, c in enumerate(m) if c)
        direct_terms.append(math.exp(la) * (la - sizes[m] - log_qn))
    direct = math.fsum(direct_terms)
    residual = abs(direct - (term_iid + gap))
    if residual_tol is not None and residual > residual_tol:
        raise ArithmeticError(f"decomposition residual {residual:.3e} exceeds {residual_tol}")
    return DivergenceReport(n, pi, q_float, term_iid, gap, direct, residual)


def gap_term(pi: Sequence[int], ch, *, exact: bool = False) -> float:
    """E[ln(P[A=1 | Y^n] / P[A=1]) | A=1]; does not depend on Q."""
    return _gap_from_laws(ytype_law_given_A(pi, ch, exact=exact), ytype_law_iid(pi, ch, exact=exact))


@dataclass
class GapRow:
    n: int
    worst_pi: tuple[int, ...]
    gap: float
    direct: float


def gap_profile(ch, n_list: Sequence[int], q_mode="marginal") -> list[GapRow]:
    """Worst case over input types of the gap term, for each n.

    ``q_mode`` is ``"marginal"`` (Q = P_Y of each type) or a fixed output
    distribution; it only affects the ``direct`` column because the gap
    itself is free of Q.
    """
    ch = as_channel(ch)
    rows = []
    for n in n_list:
        best = None
        for pi in iter_ntypes(n, ch.q):
            g = gap_term(pi, ch)
            if best is None or g > best[1] + 1e-15:
                best = (pi, g)
        pi, g = best
        Q = None if isinstance(q_mode, str) else q_mode
        if isinstance(q_mode, str) and q_mode != "marginal":
            raise ValueError(f"unknown q_mode {q_mode!r}")
        rep = divergence_exact(pi, ch, Q)
        rows.append(GapRow(n, pi, g, rep.direct))
    return rows


def log_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``values`` against ln n."""
    return float(np.polyfit(np.log(np.asarray(ns, dtype=float)), np.asarray(values, dtype=float), 1)[0])


# ---------------------------------------------------------------------------
# marginals of the exchangeable output law


def _sub_types(M: tuple[int, ...], m: int):
    def rec(j, left):
        if j == len(M) - 1:
            if left <= M[j]:
                yield (left,)
            return
        for v in range(min(left, M[j]) + 1):
            for rest in rec(j + 1, left - v):
                yield (v,) + rest

    return rec(0, m)


def _log_comb(a: int, b: int) -> float:
    return log_factorial(a) - log_factorial(b) - log_factorial(a - b)


def marginal_ytype_law(pi: Sequence[int], ch, m: int) -> dict[tuple[int, ...], float]:
    """Log-law of the type of the first ``m`` outputs.  Given the full output
    type, the first m coordinates form a multivariate hypergeometric draw."""
    pi, ch = _check_inputs(pi, ch)
    n = sum(pi)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    law = ytype_law_given_A(pi, ch)
    buckets: dict[tuple[int, ...], list[float]] = {}
    lc_nm = _log_comb(n, m)
    for M, lp in law.log_probs.items():
        for sub in _sub_types(M, m):
            w = sum(_log_comb(Mj, sj) for Mj, sj in zip(M, sub)) - lc_nm
            buckets.setdefault(sub, []).append(lp + w)
    return {sub: float(logsumexp(v)) for sub, v in buckets.items()}


def marginal_divergence(pi: Sequence[int], ch, Q: Sequence | None, m: int) -> float:
    """Exact D(P_{Y^m} || Q^m) for the first m outputs of P_{Y|X}^n o U."""
    pi, ch = _check_inputs(pi, ch)
    n = sum(pi)
    if m > n:
        raise ValueError(f"m={m} exceeds n={n}")
    if Q is None:
        Q = output_marginal([c / n for c in pi], ch)
    log_q = _log_q(Q)
    law = marginal_ytype_law(pi, ch, m)
    sizes = _log_type_sizes(law, m)
    terms = []
    for sub, lp in law.items():
        if any(c and log_q[j] == -math.inf for j, c in enumerate(sub)):
            return math.inf
        log_qm = math.fsum(c * log_q[j] for j, c in enumerate(sub) if c)
        terms.append(math.exp(lp) * (lp - sizes[sub] - log_qm))
    return max(math.fsum(terms), 0.0)


# ---------------------------------------------------------------------------
# tightness probe


def bsc(eps) -> list[list]:
    return [[1 - eps, eps], [eps, 1 - eps]]


@dataclass
class TightnessTable:
    rows: list[dict]

    @property
    def min_gap(self) -> float:
        return min(r["gap_nats"] for r in self.rows)

    @property
    def identity_slope(self) -> float:
        return log_slope([r["n"] for r in self.rows], [r["identity_gap_nats"] for r in self.rows])


def tightness_probe(n_list: Sequence[int]) -> TightnessTable:
    """Gap for the binary symmetric channel with crossover 1/n, balanced
    input type and Q = (1/2, 1/2), next to the noiseless (identity) value."""
    rows = []
    for n in n_list:
        if n < 2 or n % 2:
            raise ValueError(f"tightness probe needs even n >= 2, got {n}")
        pi = (n // 2, n // 2)
        eps = Fraction(1, n)
        g = divergence_exact(pi, bsc(eps), (0.5, 0.5)).direct
        g_id = divergence_exact(pi, bsc(0), (0.5, 0.5)).direct
        rows.append({"n": n, "crossover": float(eps), "gap_nats": g, "identity_gap_nats": g_id})
    return TightnessTable(rows)


# ---------------------------------------------------------------------------
# mutual information


def mutual_information_exact(ch, n: int) -> float:
    """I(pi; Y^n) in nats with pi uniform over all n-types of the input.

    The output type is sufficient, so the computation runs over types.
    """
    ch = as_channel(ch)
    laws = [ytype_law_given_A(pi, ch)._array for pi in iter_ntypes(n, ch.q)]
    stack = np.stack(laws)
    log_mix = logsumexp(stack, axis=0) - math.log(len(laws))
    total = []
    for arr in laws:
        mask = arr > -math.inf
        total.append(np.sum(np.exp(arr[mask]) * (arr[mask] - log_mix[mask])))
    return max(math.fsum(total) / len(laws), 0.0)
