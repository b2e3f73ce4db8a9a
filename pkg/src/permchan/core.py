"""Distributions, types, stochastic matrices and channel classification.

All logarithms are natural; divergences are in nats.  Probability vectors
may be float sequences or sequences of :class:`fractions.Fraction`, in which
case the rational code paths are exact.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterator, NamedTuple, Sequence

import numpy as np

ROW_SUM_TOL = 1e-9
RANK_TOL = 1e-9
MAX_ENUMERATION = 10**8


class PermchanError(Exception):
    """Base class for library errors."""


class DimensionError(PermchanError, ValueError):
    pass


class SizeError(PermchanError, ValueError):
    """An enumeration would exceed the configured size guard."""


class PreconditionError(PermchanError, ValueError):
    pass


class NotStochasticError(PermchanError, ValueError):
    pass


# ---------------------------------------------------------------------------
# scalar helpers


def is_exact(values) -> bool:
    """True when every entry is an int or Fraction (no floats)."""
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool)
               for v in np.ravel(np.asarray(values, dtype=object)))


def log_fraction(x: Fraction | int) -> float:
    """Natural log of a nonnegative rational without float underflow."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("log of a negative number")
    if x == 0:
        return -math.inf
    return math.log(x.numerator) - math.log(x.denominator)


def xlogy(x, y) -> float:
    # 0 * log(0 / anything) = 0; the x > 0, y = 0 case is the caller's problem
    if x == 0:
        return 0.0
    if isinstance(x, Fraction) or isinstance(y, Fraction):
        return float(x) * log_fraction(y)
    return x * math.log(y)


def as_prob(p, *, tol: float = 1e-12) -> np.ndarray | tuple:
    """Validate a probability vector.

    Rational input is returned as a tuple of Fractions and must sum to one
    exactly; float input is returned as a float array and must sum to one
    within ``tol``.
    """
    if is_exact(p):
        out = tuple(Fraction(v) for v in p)
        if any(v < 0 for v in out) or sum(out) != 1:
            raise ValueError(f"not a probability vector: {p!r}")
        return out
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or np.any(arr < 0) or abs(arr.sum() - 1.0) > tol:
        raise ValueError(f"not a probability vector: {p!r}")
    return arr


def kl_divergence(p: Sequence, q: Sequence) -> float:
    """KL divergence D(p || q) in nats.

    Uses 0 log(0/x) = 0 and returns ``math.inf`` exactly when some p_i > 0
    has q_i = 0.  Rational inputs are summed term by term from exact ratios.
    """
    if len(p) != len(q):
        raise DimensionError(f"length mismatch: {len(p)} vs {len(q)}")
    terms = []
    for pi, qi in zip(p, q):
        if pi == 0:
            continue
        if qi == 0:
            return math.inf
        if isinstance(pi, Fraction) or isinstance(qi, Fraction):
            terms.append(float(pi) * log_fraction(Fraction(pi) / Fraction(qi)))
        else:
            terms.append(pi * (math.log(pi) - math.log(qi)))
    return max(math.fsum(terms), 0.0) if terms else 0.0


def output_marginal(pi: Sequence, ch) -> np.ndarray | tuple:
    """Output distribution P_Y(j) = sum_i pi_i p_ij.

    Exact when both ``pi`` and the channel are rational.
    """
    ch = as_channel(ch)
    if len(pi) != ch.q:
        raise DimensionError(f"input distribution has {len(pi)} entries, channel has {ch.q} rows")
    if ch.exact is not None and is_exact(pi):
        return tuple(sum((Fraction(pi[i]) * ch.exact[i][j] for i in range(ch.q)), Fraction(0))
                     for j in range(ch.k))
    return np.asarray(pi, dtype=float) @ ch.matrix


# ---------------------------------------------------------------------------
# types


def count_ntypes(n: int, q: int) -> int:
    return math.comb(n + q - 1, q - 1)


def _compositions(n: int, q: int) -> Iterator[tuple[int, ...]]:
    if q == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, q - 1):
            yield (first,) + rest


def enumerate_ntypes(n: int, q: int, *, limit: int = MAX_ENUMERATION) -> list[tuple[int, ...]]:
    """All count vectors of length ``q`` summing to ``n``, lexicographically."""
    if n < 0 or q < 1:
        raise ValueError("need n >= 0 and q >= 1")
    total = count_ntypes(n, q)
    if total > limit:
        raise SizeError(f"{total} types of length {q} for n={n} exceeds limit {limit}")
    return list(_compositions(n, q))


def iter_ntypes(n: int, q: int) -> Iterator[tuple[int, ...]]:
    """Lazy variant of :func:`enumerate_ntypes` without the size guard."""
    return _compositions(n, q)


def check_ntype(t: Sequence[int]) -> tuple[int, ...]:
    t = tuple(int(c) for c in t)
    if not t or any(c < 0 for c in t) or sum(t) < 1:
        raise ValueError(f"not an n-type: {t!r}")
    return t


@lru_cache(maxsize=None)
def _log_factorial_table(size: int) -> np.ndarray:
    table = np.zeros(size + 1)
    table[1:] = np.cumsum(np.log(np.arange(1, size + 1)))
    return table


def log_factorial(n: int) -> float:
    if n < 0:
        raise ValueError("negative factorial")
    if n <= 4096:
        size = 1 << max(6, (n).bit_length())
        return float(_log_factorial_table(size)[n])
    return math.lgamma(n + 1)


def log_type_class_size(t: Sequence[int]) -> float:
    """ln |T_n(t)| = ln( n! / prod c_i! )."""
    n = sum(t)
    return log_factorial(n) - sum(log_factorial(c) for c in t)


def multinomial_log_prob(t: Sequence[int], p: Sequence) -> float:
    """ln P[type = t] for n iid draws from ``p``; ``-inf`` if impossible."""
    if len(t) != len(p):
        raise DimensionError(f"type has {len(t)} entries, distribution has {len(p)}")
    out = log_type_class_size(t)
    for c, pi in zip(t, p):
        if c == 0:
            continue
        if pi == 0:
            return -math.inf
        out += c * (log_fraction(pi) if isinstance(pi, Fraction) else math.log(pi))
    return out


def multinomial_prob_exact(t: Sequence[int], p: Sequence[Fraction]) -> Fraction:
    n = sum(t)
    coef = math.factorial(n)
    for c in t:
        coef //= math.factorial(c)
    out = Fraction(coef)
    for c, pi in zip(t, p):
        out *= Fraction(pi) ** c
    return out


# ---------------------------------------------------------------------------
# rank


def exact_rank(rows: Sequence[Sequence]) -> int:
    """Rank by fraction-exact Gaussian elimination."""
    a = [[Fraction(v) for v in row] for row in rows]
    if not a:
        return 0
    n_rows, n_cols = len(a), len(a[0])
    rank = 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if a[r][col] != 0), None)
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        for r in range(rank + 1, n_rows):
            if a[r][col] != 0:
                f = a[r][col] / a[rank][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[rank])]
        rank += 1
        if rank == n_rows:
            break
    return rank


def float_rank(matrix, tol: float = RANK_TOL) -> int:
    """Rank by partial-pivoting row reduction; pivots below ``tol`` (after
    scaling the matrix to unit max-abs) are treated as zero."""
    a = np.array(matrix, dtype=float)
    if a.size == 0:
        return 0
    scale = np.abs(a).max()
    if scale == 0:
        return 0
    a /= scale
    n_rows, n_cols = a.shape
    rank = 0
    for col in range(n_cols):
        if rank == n_rows:
            break
        pivot = rank + int(np.argmax(np.abs(a[rank:, col])))
        if abs(a[pivot, col]) < tol:
            continue
        a[[rank, pivot]] = a[[pivot, rank]]
        a[rank + 1:] -= np.outer(a[rank + 1:, col] / a[rank, col], a[rank])
        rank += 1
    return rank


def numerical_rank(ch, tol: float = RANK_TOL) -> int:
    """Rank of a channel matrix; exact when the entries are rational."""
    if isinstance(ch, ChannelModel):
        return exact_rank(ch.exact) if ch.exact is not None else float_rank(ch.matrix, tol)
    if is_exact(ch):
        return exact_rank(ch)
    return float_rank(ch, tol)


# ---------------------------------------------------------------------------
# convex hulls


def in_convex_hull(point, vertices, tol: float = 1e-9) -> bool:
    """Whether ``point`` is a convex combination of ``vertices`` (rows),
    judged by the residual of a nonnegative least-squares fit."""
    from scipy.optimize import nnls

    v = np.atleast_2d(np.asarray(vertices, dtype=float))
    x = np.asarray(point, dtype=float)
    a = np.vstack([v.T, np.ones(v.shape[0])])
    b = np.append(x, 1.0)
    _, resid = nnls(a, b)
    return resid <= tol


def extreme_point_count(matrix, tol: float = 1e-9) -> int:
    """Number of extreme points of the convex hull of the rows."""
    rows = np.asarray(matrix, dtype=float)
    unique: list[np.ndarray] = []
    for r in rows:
        if not any(np.max(np.abs(r - u)) <= tol for u in unique):
            unique.append(r)
    if len(unique) <= 2:
        return len(unique)
    count = 0
    for i, r in enumerate(unique):
        others = [u for j, u in enumerate(unique) if j != i]
        if not in_convex_hull(r, others, tol):
            count += 1
    return count


# ---------------------------------------------------------------------------
# channels


class ChannelClass(enum.Enum):
    STRICTLY_POSITIVE = "strictly-positive"
    BLOCK_DIAGONAL = "block-diagonal"
    ERASURE = "erasure"
    Z_CHANNEL = "z-channel"
    ZIGZAG = "zigzag"
    GENERAL = "general"


class Block(NamedTuple):
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    strictly_positive: bool


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """A row-stochastic q x k matrix together with its structural class.

    ``exact`` holds the entries as Fractions when the channel was given in
    rational form; ``matrix`` is always the float64 view.
    """

    matrix: np.ndarray
    kind: ChannelClass
    rank: int
    blocks: tuple[Block, ...]
    exact: tuple[tuple[Fraction, ...], ...] | None = field(default=None, repr=False)

    @property
    def q(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return self.matrix.shape[1]

    @property
    def beta(self) -> int:
        return len(self.blocks)

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.matrix > 0))

    def rows(self, exact: bool = False):
        if exact:
            if self.exact is None:
                raise PreconditionError("channel has no rational representation")
            return self.exact
        return self.matrix

    def __repr__(self) -> str:
        return (f"ChannelModel(q={self.q}, k={self.k}, kind={self.kind.value}, "
                f"rank={self.rank}, beta={self.beta})")


def _support_components(support: np.ndarray) -> list[tuple[list[int], list[int]]]:
    """Connected components of the bipartite input/output support graph.
    Output symbols that no input can reach are dropped."""
    q, k = support.shape
    seen_r = [False] * q
    comps = []
    for start in range(q):
        if seen_r[start]:
            continue
        rows, cols = {start}, set()
        stack = [("r", start)]
        seen_r[start] = True
        while stack:
            side, idx = stack.pop()
            if side == "r":
                for j in np.flatnonzero(support[idx]):
                    if j not in cols:
                        cols.add(int(j))
                        stack.append(("c", int(j)))
            else:
                for i in np.flatnonzero(support[:, idx]):
                    if not seen_r[i]:
                        seen_r[i] = True
                        rows.add(int(i))
                        stack.append(("r", int(i)))
        comps.append((sorted(rows), sorted(cols)))
    return comps


def _is_erasure(support: np.ndarray) -> bool:
    q, k = support.shape
    if q < 2 or k != q + 1:
        return False
    full_cols = [j for j in range(k) if support[:, j].all()]
    for e in full_cols:
        rest = np.delete(support, e, axis=1)
        if (rest.sum(axis=0) == 1).all() and (rest.sum(axis=1) == 1).all():
            return True
    return False


def _is_z_channel(support: np.ndarray) -> bool:
    return support.shape == (2, 2) and int(support.sum()) == 3


def _is_zigzag(support: np.ndarray) -> bool:
    # support graph is a single path in1-out2-in2-...; for a q x q matrix this
    # means q + q nodes, 2q - 1 edges, connected, every degree <= 2
    q, k = support.shape
    if q != k or q < 3:
        return False
    if int(support.sum()) != 2 * q - 1:
        return False
    if (support.sum(axis=1) > 2).any() or (support.sum(axis=0) > 2).any():
        return False
    return len(_support_components(support)) == 1


def _parse_entry(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    return None


def classify_channel(matrix, *, tol: float = ROW_SUM_TOL, rank_tol: float = RANK_TOL) -> ChannelModel:
    """Validate a stochastic matrix and detect its structural class.

    The most specific class wins: strictly positive, then Z-channel, erasure,
    zigzag, block diagonal (two or more support components), general.
    Detection only looks at the zero pattern, so it is invariant under row
    and column permutations.
    """
    if isinstance(matrix, ChannelModel):
        return matrix
    raw = [list(r) for r in matrix] if not isinstance(matrix, np.ndarray) else matrix.tolist()
    if not raw or not raw[0]:
        raise DimensionError("empty channel matrix")
    if len({len(r) for r in raw}) != 1:
        raise DimensionError("ragged channel matrix")
    exact_rows = None
    if all(_parse_entry(v) is not None for r in raw for v in r):
        exact_rows = tuple(tuple(_parse_entry(v) for v in r) for r in raw)
    m = np.array([[float(v) for v in r] for r in raw], dtype=float)
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise NotStochasticError("channel entries must be finite and nonnegative")
    if exact_rows is not None:
        bad = [i for i, r in enumerate(exact_rows) if sum(r) != 1]
    else:
        bad = [i for i, s in enumerate(m.sum(axis=1)) if abs(s - 1.0) > tol]
    if bad:
        raise NotStochasticError(f"rows {bad} do not sum to 1")

    support = m > 0
    rank = exact_rank(exact_rows) if exact_rows is not None else float_rank(m, rank_tol)
    comps = _support_components(support)
    blocks = tuple(
        Block(tuple(r), tuple(c), bool(support[np.ix_(r, c)].all())) for r, c in comps
    )
    if support.all():
        kind = ChannelClass.STRICTLY_POSITIVE
    elif _is_z_channel(support):
        kind = ChannelClass.Z_CHANNEL
    elif _is_erasure(support):
        kind = ChannelClass.ERASURE
    elif _is_zigzag(support):
        kind = ChannelClass.ZIGZAG
    elif len(blocks) >= 2:
        kind = ChannelClass.BLOCK_DIAGONAL
    else:
        kind = ChannelClass.GENERAL
    m.setflags(write=False)
    return ChannelModel(matrix=m, kind=kind, rank=rank, blocks=blocks, exact=exact_rows)


def as_channel(ch) -> ChannelModel:
    return ch if isinstance(ch, ChannelModel) else classify_channel(ch)


# ---------------------------------------------------------------------------
# channel files


def _parse_number(tok: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad channel entry {tok!r}") from exc


def parse_channel_text(text: str) -> ChannelModel:
    """Parse the channel file format.

    First non-comment line holds ``q k``; then ``q`` rows of ``k`` entries,
    each a decimal (``0.3``) or a ratio (``3/10``).  ``#`` starts a comment.
    Rows more than 1e-9 away from summing to one are rejected.  Entries are
    kept as exact rationals; rows that are off by a tolerated amount are
    renormalized.
    """
    lines = []
    for raw in text.splitlines():
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append(body.replace(",", " ").split())
    if not lines:
        raise ValueError("empty channel file")
    header = lines[0]
    if len(header) != 2:
        raise ValueError("first line must be 'q k'")
    q, k = int(header[0]), int(header[1])
    if q < 1 or k < 1:
        raise ValueError("q and k must be positive")
    body = lines[1:]
    if len(body) != q:
        raise ValueError(f"expected {q} rows, found {len(body)}")
    rows = []
    for i, toks in enumerate(body):
        if len(toks) != k:
            raise ValueError(f"row {i + 1} has {len(toks)} entries, expected {k}")
        row = [_parse_number(t) for t in toks]
        if any(v < 0 for v in row):
            raise ValueError(f"row {i + 1} has a negative entry")
        s = sum(row)
        if abs(s - 1) > Fraction(1, 10**9):
            raise ValueError(f"row {i + 1} sums to {float(s)!r}, not 1")
        if s != 1:
            row = [v / s for v in row]
        rows.append(row)
    return classify_channel(rows)


def load_channel(path) -> ChannelModel:
    with open(path, encoding="utf-8") as fh:
        return parse_channel_text(fh.read())


def format_channel_text(ch) -> str:
    ch = as_channel(ch)
    rows = ch.exact if ch.exact is not None else ch.matrix.tolist()
    out = [f"{ch.q} {ch.k}"]
    for r in rows:
        out.append(" ".join(str(v) if isinstance(v, Fraction) else repr(float(v)) for v in r))
    return "\n".join(out) + "\n"


def corner_subsets(q: int, size: int) -> list[tuple[int, ...]]:
    return list(combinations(range(q), size))
