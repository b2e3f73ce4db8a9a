"""Closed-form capacities and bounds for noisy permutation channels.

Rates are ratios log M / log n and so carry no log base; every divergence
or log-probability bound here is in nats.

The concentration bounds involve a universal constant ``alpha`` whose value
is not known in closed form.  :data:`PETROV_ALPHA` is the smallest value
for which the point-mass bound holds on fair Bernoulli sums up to
n = 1000 (see :func:`calibrate_alpha`); every function takes ``alpha``
explicitly so other choices can be tried.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import (
    ChannelClass,
    PreconditionError,
    as_channel,
    check_ntype,
    extreme_point_count,
    log_factorial,
)


@dataclass
class BoundReport:
    name: str
    value: float
    formula: str
    inputs: dict = field(default_factory=dict)
    note: str = ""

    def as_row(self) -> dict:
        return {"name": self.name, "value": self.value, "formula": self.formula,
                "inputs": " ".join(f"{k}={v}" for k, v in self.inputs.items()), "note": self.note}


# ---------------------------------------------------------------------------
# capacity


@dataclass
class CapacityReport:
    kind: ChannelClass
    lower: float
    upper: float
    solved: bool
    formula: str
    caveat: str = ""

    @property
    def value(self) -> float | None:
        return self.lower if self.solved else None


def capacity_value(ch) -> CapacityReport:
    """Noisy permutation capacity (rate normalized by log n).

    Exact for strictly positive, block diagonal with strictly positive
    blocks, erasure and Z channels.  Zigzag channels get the achievable
    (rank - 1)/2 and a conditional upper bound; anything else gets the
    achievable rate and the (ext - 1)/2 converse.
    """
    ch = as_channel(ch)
    achievable = (ch.rank - 1) / 2
    kind = ch.kind
    if kind is ChannelClass.STRICTLY_POSITIVE:
        return CapacityReport(kind, achievable, achievable, True, "(rank-1)/2 [strictly positive]")
    if kind is ChannelClass.Z_CHANNEL:
        return CapacityReport(kind, 0.5, 0.5, True, "1/2 [Z-channel]")
    if kind is ChannelClass.ERASURE:
        v = (ch.q - 1) / 2
        return CapacityReport(kind, v, v, True, "(q-1)/2 [q-ary erasure]")
    if kind is ChannelClass.BLOCK_DIAGONAL and all(b.strictly_positive for b in ch.blocks):
        v = (ch.rank + ch.beta - 2) / 2
        return CapacityReport(kind, v, v, True, "(rank+beta-2)/2 [block diagonal]")
    if kind is ChannelClass.ZIGZAG:
        up = zigzag_conditional_bound(ch.q)
        return CapacityReport(kind, achievable, up.value, False, "(rank-1)/2 <= C <= 3(q-1)/4 [zigzag]",
                              up.note)
    ext = extreme_point_count(ch.matrix)
    return CapacityReport(kind, achievable, (ext - 1) / 2, False, "(rank-1)/2 <= C <= (ext-1)/2",
                          "bounds-only")


def zigzag_conditional_bound(q: int) -> BoundReport:
    """3(q-1)/4, valid only if inputs using every other symbol are the worst
    case; the construction behind it needs odd q."""
    if q < 1:
        raise ValueError("q must be positive")
    note = "conditional on the worst-case input structure"
    if q % 2 == 0:
        note += "; even q is outside the odd-q construction"
    return BoundReport("zigzag_upper", 3 * (q - 1) / 4, "3(q-1)/4", {"q": q}, note)


# ---------------------------------------------------------------------------
# constants of the divergence sandwich


def c_star(ch) -> float:
    """min over rows of (smallest entry / largest entry); zero unless the
    channel is strictly positive."""
    m = as_channel(ch).matrix
    return float(np.min(m.min(axis=1) / m.max(axis=1)))


def gap_constant_bound(ch, alpha: float | None = None, n: int | None = None) -> float:
    """Upper bound on the divergence-gap constant of a strictly positive
    channel: ((q-1)/2) ln(2 pi alpha^2 / c*) + q/12 nats.

    With ``n`` given, q/12 becomes q/(12 n).
    """
    ch = as_channel(ch)
    alpha = PETROV_ALPHA if alpha is None else alpha
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    cs = c_star(ch)
    if cs <= 0:
        raise PreconditionError("channel is not strictly positive (c* = 0); the constant is infinite")
    tail = ch.q / 12 if n is None else ch.q / (12 * n)
    return (ch.q - 1) / 2 * math.log(2 * math.pi * alpha ** 2 / cs) + tail


def prob_a_stirling_bound(t: Sequence[int], remainder: str = "per-count") -> float:
    """Upper bound on -ln P[type = t] for n iid draws from t / n.

    -(1/2) ln n + sum_{c_i > 0} (1/2) ln c_i + ((q'-1)/2) ln 2 pi + R,
    with q' the number of nonzero counts.  ``remainder="per-count"`` uses
    R = sum_i 1/(12 c_i), which is what the Robbins factorial bounds give.
    ``remainder="single"`` uses R = 1/(12 n); that form is smaller and is
    violated by every type with two or more nonzero counts.
    """
    t = check_ntype(t)
    n = sum(t)
    nz = [c for c in t if c > 0]
    base = -0.5 * math.log(n) + sum(0.5 * math.log(c) for c in nz) + (len(nz) - 1) / 2 * math.log(2 * math.pi)
    if remainder == "per-count":
        return base + sum(1 / (12 * c) for c in nz)
    if remainder == "single":
        return base + 1 / (12 * n)
    raise ValueError(f"unknown remainder {remainder!r}")


# ---------------------------------------------------------------------------
# concentration


def _fair_binomial_mode_mass(n: int) -> float:
    return math.exp(log_factorial(n) - log_factorial(n // 2) - log_factorial(n - n // 2) - n * math.log(2))


@lru_cache(maxsize=None)
def calibrate_alpha(n_max: int = 1000) -> float:
    """Smallest alpha with max_w P[S_n = w] <= alpha / sqrt(n/2) for sums of
    n fair Bernoulli variables, n = 1..n_max."""
    return max(_fair_binomial_mode_mass(n) * math.sqrt(n / 2) for n in range(1, n_max + 1))


PETROV_ALPHA = calibrate_alpha(1000)


def petrov_bound(probs: Sequence[float], alpha: float | None = None) -> float:
    """alpha / sqrt(sum_i min(p_i, 1 - p_i)): a bound on every point mass of a
    sum of independent Bernoulli(p_i) variables.  Infinite if degenerate."""
    alpha = PETROV_ALPHA if alpha is None else alpha
    p = np.asarray(probs, dtype=float)
    if p.size == 0:
        raise ValueError("need at least one probability")
    s = float(np.minimum(p, 1 - p).sum())
    return math.inf if s <= 0 else alpha / math.sqrt(s)


def bernoulli_sum_max_mass(probs: Sequence[float]) -> float:
    """Exact max_w P[sum of independent Bernoulli(p_i) = w]."""
    dist = np.array([1.0])
    for p in probs:
        dist = np.convolve(dist, [1 - p, p])
    return float(dist.max())


def _c_star_rel(pi: np.ndarray, rel: np.ndarray) -> float:
    ratios = rel / pi[None, :]
    return float(np.min(ratios.min(axis=1) / ratios.max(axis=1)))


def balls_in_bins_bound(pi: Sequence[float], rel_probs, alpha: float | None = None) -> float:
    """Bound on P[N_b = n pi_b for every bin b] when ball i lands in bin b
    with probability proportional to ``rel_probs[i][b]``.

    alpha^(q-1) / (n^((q-1)/2) sqrt(B)), B = c*^(q-1) prod(pi) / max(pi),
    where c* is the smallest over balls of min_b (p_ib/pi_b) / max_b (p_ib/pi_b).
    """
    alpha = PETROV_ALPHA if alpha is None else alpha
    pi = np.asarray(pi, dtype=float)
    rel = np.atleast_2d(np.asarray(rel_probs, dtype=float))
    if np.any(pi <= 0):
        raise PreconditionError("every bin needs pi_b > 0")
    if rel.shape[1] != pi.size:
        raise ValueError("rel_probs must have one column per bin")
    n, q = rel.shape
    cs = _c_star_rel(pi, rel)
    if cs <= 0:
        return math.inf
    B = cs ** (q - 1) * np.prod(pi) / pi.max()
    return alpha ** (q - 1) / (n ** ((q - 1) / 2) * math.sqrt(B))


def balls_in_bins_prob(counts: Sequence[int], rel_probs) -> float:
    """Exact P[N = counts] for independent balls with the given relative
    bin probabilities (one row per ball)."""
    rel = np.atleast_2d(np.asarray(rel_probs, dtype=float))
    probs = rel / rel.sum(axis=1, keepdims=True)
    target = tuple(int(c) for c in counts)
    if sum(target) != len(probs):
        return 0.0
    dist: dict[tuple[int, ...], float] = {(0,) * len(target): 1.0}
    for row in probs:
        nxt: dict[tuple[int, ...], float] = {}
        for key, p in dist.items():
            for b, pb in enumerate(row):
                if pb == 0 or key[b] >= target[b]:
                    continue
                new = key[:b] + (key[b] + 1,) + key[b + 1:]
                nxt[new] = nxt.get(new, 0.0) + p * pb
        dist = nxt
    return dist.get(target, 0.0)


@dataclass
class BernsteinReport:
    applicable: bool
    tail: float
    deviation_floor: float
    fraction_floor: float
    note: str = ""


def erasure_gamma(q: int) -> int:
    """Exponent choice that makes the concentration failure term negligible
    for q-ary erasure channels."""
    return 40 * q


def bernstein_tail(expected: float, gamma: float, n: float) -> BernsteinReport:
    """Lower-tail concentration for a sum of n independent Bernoulli variables.

    When E[Y] > 2 gamma ln n, with probability at least 1 - 2/n^(gamma/4),
    Y > E[Y] - sqrt(E[Y] gamma ln n) >= E[Y] / 5.
    """
    log_n = math.log(n)
    dev = expected - math.sqrt(max(expected, 0.0) * gamma * log_n)
    if not expected > 2 * gamma * log_n:
        return BernsteinReport(False, 1.0, dev, expected / 5,
                               f"precondition E[Y] > 2 gamma ln n fails ({expected} <= {2 * gamma * log_n:.6g})")
    return BernsteinReport(True, 2 / n ** (gamma / 4), dev, expected / 5)


# ---------------------------------------------------------------------------
# mutual information and Stam comparison


@dataclass
class MIBound:
    value: float
    asymptotic_slope: float
    log_net_size: float
    c: float
    n: int

    @property
    def asymptotic(self) -> float:
        return self.asymptotic_slope * math.log(self.n)


def mi_upper_bound(ch, n: int, net_size: int, c: float) -> MIBound:
    """ln |net| + c + 1 for a radius-1/n net: the covering bound on I(pi; Y^n),
    reported with the (rank-1)/2 ln n leading term."""
    ch = as_channel(ch)
    if net_size < 1:
        raise ValueError("net must be nonempty")
    log_size = math.log(net_size)
    return MIBound(log_size + c + 1.0, (ch.rank - 1) / 2, log_size, c, n)


@dataclass
class StamReport:
    q: int
    n: int
    m: int
    han: float | None
    stam: float
    large_m: float | None
    large_m_log: float | None
    minimal: str
    crossover_lhs: float | None = None
    crossover_rhs: float | None = None
    note: str = ""

    @property
    def ours_tighter(self) -> bool | None:
        if self.crossover_lhs is None:
            return None
        return self.crossover_lhs <= self.crossover_rhs


def stam_bounds(q: int, n: int, m: int, c: float | None = None, *,
                c_star_value: float | None = None, alpha: float | None = None) -> StamReport:
    """Three bounds on D(P_{Y^m} || P_Y^m) for the first m of n outputs.

    ``han``: (m/n) c from the constant of the divergence sandwich (needs c);
    ``stam``: ((q-1)/2) m (m-1) / ((n-1)(n-m+1));
    ``large_m``: (q-1)/(n-1) sum_{t<m} t/(n-t), the exact harmonic form, with
    its leading term (q-1) ln((n-1)/(n-m)) in ``large_m_log``; both need m < n.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    han = None if c is None else m / n * c
    stam = 0.0 if m == 1 else (q - 1) / 2 * m * (m - 1) / ((n - 1) * (n - m + 1))
    note = ""
    if m < n:
        large = (q - 1) / (n - 1) * math.fsum(t / (n - t) for t in range(1, m))
        large_log = (q - 1) * math.log((n - 1) / (n - m)) if n > 1 else 0.0
    else:
        large = large_log = None
        note = "large-m form needs m < n; skipped"
    candidates = {"stam": stam}
    if han is not None:
        candidates["han"] = han
    if large is not None:
        candidates["large_m"] = large
    minimal = min(candidates, key=candidates.get)
    lhs = rhs = None
    if c_star_value is not None and m < n:
        a = PETROV_ALPHA if alpha is None else alpha
        g = m / n
        lhs = 0.5 * math.log(2 * math.pi * a ** 2 / c_star_value)
        rhs = min(g / (1 - g), math.log(1 / (1 - g)) / g)
    return StamReport(q, n, m, han, stam, large, large_log, minimal, lhs, rhs, note)
