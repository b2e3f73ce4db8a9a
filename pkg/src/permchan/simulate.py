"""Monte-Carlo coding experiments over noisy permutation channels.

Messages are input types; the channel output is summarized by its type, so
a trial draws one multinomial per input symbol and adds the counts.

Randomness: a trial run with master seed ``s`` is cut into blocks of
:data:`BLOCK_TRIALS` trials; block ``b`` uses ``PCG64`` seeded by child
``b`` of ``SeedSequence(s)``.  Blocks are independent of how many threads
run them, so results depend only on (inputs, seed).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from .core import PermchanError, SizeError, as_channel, check_ntype, float_rank, iter_ntypes
from .exact import ytype_law_given_A

BLOCK_TRIALS = 1024
EXACT_DECODE_MAX_N = 14


class InfeasibleRateError(PermchanError, ValueError):
    """The requested number of messages does not fit the available lattice."""


@dataclass
class Codebook:
    n: int
    codewords: np.ndarray
    construction: str
    rate: float
    spacing: int | None = None
    stems: int | None = None
    note: str = ""

    def __post_init__(self):
        cw = np.asarray(self.codewords, dtype=np.int64)
        if cw.ndim != 2 or len(cw) < 2:
            raise ValueError("a codebook needs at least two codewords")
        if np.any(cw < 0) or np.any(cw.sum(axis=1) != self.n):
            raise ValueError("codewords must be n-types")
        if len({tuple(r) for r in cw}) != len(cw):
            raise ValueError("codewords must be distinct")
        self.codewords = cw

    @property
    def M(self) -> int:
        return len(self.codewords)

    @property
    def actual_rate(self) -> float:
        return math.log(self.M) / math.log(self.n)

    def means(self, ch) -> np.ndarray:
        """Expected output distribution for each codeword."""
        return self.codewords / self.n @ as_channel(ch).matrix


@dataclass
class TrialOutcome:
    trials: int
    errors: int

    def __post_init__(self):
        if not 0 <= self.errors <= self.trials or self.trials < 1:
            raise ValueError("need 0 <= errors <= trials and trials >= 1")

    @property
    def rate(self) -> float:
        return self.errors / self.trials

    @property
    def wilson(self) -> tuple[float, float]:
        ci = binomtest(self.errors, self.trials).proportion_ci(0.95, method="wilson")
        return float(ci.low), float(ci.high)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def sample_output_type(x: Sequence[int], ch, seed=None) -> np.ndarray:
    """Output type for input type ``x``: row i of the channel is applied to
    x_i symbols and the counts are summed."""
    ch = as_channel(ch)
    x = np.asarray(check_ntype(x))
    if len(x) != ch.q:
        raise ValueError("type length does not match channel inputs")
    return _sample_batch(x[None, :], ch.matrix, _rng(seed))[0]


def _sample_batch(inputs: np.ndarray, P: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = np.zeros((len(inputs), P.shape[1]), dtype=np.int64)
    for i in range(P.shape[0]):
        col = inputs[:, i]
        if col.any():
            out += rng.multinomial(col, P[i])
    return out


# ---------------------------------------------------------------------------
# codebooks


def message_count(n: int, R: float) -> int:
    return int(round(n ** R))


def _independent_rows(P: np.ndarray, rank: int) -> list[int]:
    chosen: list[int] = []
    for i in range(P.shape[0]):
        if float_rank(P[chosen + [i]]) == len(chosen) + 1:
            chosen.append(i)
        if len(chosen) == rank:
            break
    return chosen


def _spacing(n: int) -> int:
    return max(1, math.ceil(math.sqrt(n * math.log(n))))


def _line_points(n: int, M: int, s: int, spread: str) -> tuple[list[int], int]:
    if spread == "min" and (M - 1) * s <= n:
        off = (n - (M - 1) * s) // 2
        return [off + j * s for j in range(M)], s
    if M > n + 1:
        raise InfeasibleRateError(f"M={M} exceeds the {n + 1} available types")
    pts = [round(j * n / (M - 1)) for j in range(M)]
    return pts, min(b - a for a, b in zip(pts, pts[1:]))


def _pick(count: int, M: int) -> list[int]:
    return [round(j * (count - 1) / (M - 1)) for j in range(M)]


def _simplex_points(n: int, dim: int, M: int, s: int, spread: str) -> tuple[np.ndarray, int]:
    # lattice {s c + offset : c a composition of N = n // s into dim + 1 parts}
    def size(step):
        return math.comb(n // step + dim, dim)

    if spread == "max" or size(s) < M:
        s = max((t for t in range(1, n + 1) if size(t) >= M), default=0)
        if s == 0:
            raise InfeasibleRateError(f"M={M} exceeds the {size(1)} available types")
    N = n // s
    left = n - s * N
    extra = np.array([left // (dim + 1) + (1 if j < left % (dim + 1) else 0) for j in range(dim + 1)])
    lattice = list(iter_ntypes(N, dim + 1))
    idx = _pick(len(lattice), M)
    return np.array([s * np.array(lattice[i]) + extra for i in idx]), s


def build_grid_codebook(ch, n: int, R: float, *, spread: str = "min", M: int | None = None) -> Codebook:
    """M = round(n^R) input types on the face spanned by rank(P) linearly
    independent input symbols.

    ``spread="min"`` puts neighbouring codewords ceil(sqrt(n ln n)) counts
    apart when that fits (falling back to the widest spacing that does);
    ``spread="max"`` spreads them over the whole face.
    """
    ch = as_channel(ch)
    if spread not in ("min", "max"):
        raise ValueError(f"unknown spread {spread!r}")
    if n < 2:
        raise ValueError("n must be >= 2")
    M = message_count(n, R) if M is None else M
    if M < 2:
        raise InfeasibleRateError(f"rate {R} gives M={M} < 2 at n={n}")
    dim = ch.rank - 1
    if dim == 0:
        raise InfeasibleRateError("rank-1 channel: no separable directions")
    active = _independent_rows(ch.matrix, ch.rank)
    s = _spacing(n)
    if dim == 1:
        pts, used = _line_points(n, M, s, spread)
        sub = np.array([[n - a, a] for a in pts])
    else:
        sub, used = _simplex_points(n, dim, M, s, spread)
    cw = np.zeros((M, ch.q), dtype=np.int64)
    cw[:, active] = sub
    note = "" if used >= s else f"spacing {used} below target {s}"
    return Codebook(n, cw, "grid", R, used, None, note)


def _stems(N: int, beta: int) -> list[tuple[int, ...]]:
    # compositions of N into beta parts, the first beta - 1 parts positive
    if beta == 1:
        return [(N,)]
    out = []
    for head in iter_ntypes(N - (beta - 1), beta):
        out.append(tuple(h + 1 for h in head[:-1]) + (head[-1],))
    return out


def build_block_code(ch, n: int, R_total: float | None = None, *, tail_sizes: Sequence[int] | None = None,
                     spread: str = "min") -> Codebook:
    """Two-step code for block diagonal channels.

    Half of the (rounded down) n' positions carry a stem: how many symbols
    go to each block, binom(n'/2, beta - 1) choices, each block's share sent
    as its first input symbol.  Each block also gets n'/(2 beta) reserved
    positions carrying a grid codeword over that block's inputs.  Tail
    sizes default to the smallest equal split reaching round(n^R_total)
    messages; the codebook holds every stem-tail combination.
    """
    ch = as_channel(ch)
    blocks = ch.blocks
    beta = len(blocks)
    if not blocks or not all(b.strictly_positive for b in blocks):
        raise ValueError("channel must be block diagonal with strictly positive blocks")
    n2 = n - n % (2 * beta)
    if n2 < 2 * beta:
        raise InfeasibleRateError(f"n={n} too small for {beta} blocks")
    N, r = n2 // 2, n2 // (2 * beta)
    stems = _stems(N, beta)
    if tail_sizes is None:
        if R_total is None:
            raise ValueError("give R_total or tail_sizes")
        need = math.ceil(message_count(n2, R_total) / len(stems))
        per = 1 if need <= 1 else math.ceil(need ** (1 / beta) - 1e-12)
        tail_sizes = [per if _block_rank(ch, b) > 1 and r >= 2 else 1 for b in blocks]
    tails = []
    for b, size in zip(blocks, tail_sizes):
        rows = list(b.rows)
        if size <= 1:
            t = np.zeros((1, ch.q), dtype=np.int64)
            t[0, rows[0]] = r
        else:
            sub = ch.matrix[np.ix_(rows, list(b.cols))]
            inner = build_grid_codebook(sub, r, 0.0, spread=spread, M=size).codewords
            t = np.zeros((size, ch.q), dtype=np.int64)
            t[:, rows] = inner
        tails.append(t)
    firsts = [b.rows[0] for b in blocks]
    cws = []
    for stem in stems:
        base = np.zeros(ch.q, dtype=np.int64)
        base[firsts] = stem
        for combo in product(*tails):
            cws.append(base + np.sum(combo, axis=0))
    cw = np.array(cws)
    rate = R_total if R_total is not None else math.log(len(cw)) / math.log(n2)
    return Codebook(n2, cw, "block-two-step", rate, None, len(stems))


def _block_rank(ch, b) -> int:
    return float_rank(ch.matrix[np.ix_(list(b.rows), list(b.cols))])


# ---------------------------------------------------------------------------
# decoders


def _divergences(y: np.ndarray, means: np.ndarray) -> np.ndarray:
    """D(y_t / n || means_w) for every row t of y and codeword w."""
    p = y / y.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_m = np.log(means)
        neg_ent = np.where(p > 0, p * np.log(p), 0.0).sum(axis=1)
        cross = np.where(p[:, None, :] > 0, p[:, None, :] * log_m[None, :, :], 0.0).sum(axis=2)
    return np.nan_to_num(neg_ent[:, None] - cross, nan=np.inf)


def _decode_batch(y: np.ndarray, means: np.ndarray) -> np.ndarray:
    d = _divergences(y, means)
    # argmin returns the first minimizer; rows of all +inf give index 0
    return np.argmin(d, axis=1)


def min_divergence_decode(y_type: Sequence[int], codebook: Codebook, ch) -> int:
    """Codeword whose mean output is closest to the empirical output type."""
    y = np.asarray(y_type, dtype=float)[None, :]
    return int(_decode_batch(y, codebook.means(ch))[0])


def ml_log_likelihoods(codebook: Codebook, ch) -> list[dict]:
    if codebook.n > EXACT_DECODE_MAX_N:
        raise SizeError(f"exact decoding is limited to n <= {EXACT_DECODE_MAX_N}")
    return [ytype_law_given_A(tuple(int(v) for v in w), ch).log_probs for w in codebook.codewords]


def exact_ml_decode(y_type: Sequence[int], codebook: Codebook, ch, *, tables: list[dict] | None = None) -> int:
    """argmax_w P[output type = y | input type w], lowest index on ties."""
    tables = ml_log_likelihoods(codebook, ch) if tables is None else tables
    y = tuple(int(v) for v in y_type)
    best, best_lp = 0, -math.inf
    for i, t in enumerate(tables):
        lp = t.get(y, -math.inf)
        if lp > best_lp:
            best, best_lp = i, lp
    return best


# ---------------------------------------------------------------------------
# error estimation


def _threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("PERMCHAN_THREADS")
    return max(1, int(env)) if env else 1


def _run_block(child: np.random.SeedSequence, size: int, codebook: Codebook, P: np.ndarray,
               decoder: str, means: np.ndarray, tables) -> int:
    rng = np.random.Generator(np.random.PCG64(child))
    msgs = rng.integers(codebook.M, size=size)
    y = _sample_batch(codebook.codewords[msgs], P, rng)
    if decoder == "min-divergence":
        guess = _decode_batch(y.astype(float), means)
    else:
        guess = np.array([exact_ml_decode(row, codebook, None, tables=tables) for row in y])
    return int(np.count_nonzero(guess != msgs))


def simulate_error(codebook: Codebook, ch, trials: int, seed=0, *, decoder: str = "min-divergence",
                   threads: int | None = None) -> TrialOutcome:
    """Error rate with a uniformly random message per trial."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if decoder not in ("min-divergence", "ml"):
        raise ValueError(f"unknown decoder {decoder!r}")
    ch = as_channel(ch)
    means = codebook.means(ch)
    tables = ml_log_likelihoods(codebook, ch) if decoder == "ml" else None
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    nblocks = -(-trials // BLOCK_TRIALS)
    children = ss.spawn(nblocks)
    sizes = [min(BLOCK_TRIALS, trials - b * BLOCK_TRIALS) for b in range(nblocks)]
    args = [(c, s, codebook, ch.matrix, decoder, means, tables) for c, s in zip(children, sizes)]
    nt = _threads(threads)
    if nt == 1:
        errors = sum(_run_block(*a) for a in args)
    else:
        with ThreadPoolExecutor(nt) as ex:
            errors = sum(ex.map(lambda a: _run_block(*a), args))
    return TrialOutcome(trials, errors)


@dataclass
class SweepRow:
    rate: float
    n: int
    M: int | None
    trials: int
    outcome: TrialOutcome | None = None
    status: str = "ok"

    def as_row(self) -> dict:
        if self.outcome is None:
            return {"rate": self.rate, "n": self.n, "M": "", "trials": self.trials, "errors": "",
                    "err_rate": "", "wilson_lo": "", "wilson_hi": "", "status": self.status}
        lo, hi = self.outcome.wilson
        return {"rate": self.rate, "n": self.n, "M": self.M, "trials": self.trials,
                "errors": self.outcome.errors, "err_rate": self.outcome.rate,
                "wilson_lo": lo, "wilson_hi": hi, "status": self.status}


def cell_seed(seed: int, rate: float, n: int) -> np.random.SeedSequence:
    """Seed for one sweep cell; depends on the cell, not on its neighbours."""
    return np.random.SeedSequence([int(seed), int(round(rate * 1_000_000)), int(n)])


def sweep_rate(ch, rates: Sequence[float], ns: Sequence[int], trials: int, seed: int = 0, *,
               spread: str = "min", threads: int | None = None) -> list[SweepRow]:
    """Error rate for every (rate, n) cell; infeasible cells are marked."""
    ch = as_channel(ch)
    rows = []
    for R in rates:
        for n in ns:
            try:
                cb = build_grid_codebook(ch, n, R, spread=spread)
            except InfeasibleRateError as exc:
                rows.append(SweepRow(R, n, None, trials, None, f"infeasible: {exc}"))
                continue
            out = simulate_error(cb, ch, trials, cell_seed(seed, R, n), threads=threads)
            rows.append(SweepRow(R, n, cb.M, trials, out))
    return rows
