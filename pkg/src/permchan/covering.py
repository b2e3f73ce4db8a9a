"""KL-divergence epsilon-nets over the probability simplex and over the set
of output marginals a channel can produce.

The simplex net is built recursively: a center on k symbols is a scalar
``lam`` for the last coordinate together with a center on k - 1 symbols,
rescaled by ``1 - lam``.  Because D(p || q) splits into a binary divergence
on the last coordinate plus a weighted divergence on the rest, the covering
radius of such a product net is computed exactly by dynamic programming
over the barycentric lattice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import as_channel, iter_ntypes

GAMMA = 18


@dataclass(frozen=True)
class ScalarNet:
    eps: float
    points: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.points)


def scalar_net(eps) -> ScalarNet:
    """The scalar set {eps i^2} u {1 - eps i^2} u {1/2}, over positive
    integers i with eps i^2 < 1/2.  Exact when ``eps`` is a Fraction."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    half = Fraction(1, 2) if isinstance(eps, Fraction) else 0.5
    low = []
    i = 1
    while eps * i * i < half:
        low.append(eps * i * i)
        i += 1
    pts = low + [half] + [1 - v for v in reversed(low)]
    return ScalarNet(eps, tuple(pts))


@dataclass
class SimplexNet:
    """Centers covering the simplex on ``k`` symbols to divergence ``eps``.

    ``levels`` keeps the scalar net used for the last coordinate at each
    recursion depth (index 0 is the two-symbol base); it is what makes the
    exact radius computation possible.
    """

    k: int
    eps: float
    gamma: float
    centers: np.ndarray
    levels: tuple[ScalarNet, ...] = field(default=(), repr=False)

    def __len__(self) -> int:
        return len(self.centers)

    @property
    def measured_c(self) -> float:
        """Smallest c with |centers| <= c^(k-1) ((k-1)/eps)^((k-1)/2)."""
        if self.k == 1:
            return 1.0
        d = self.k - 1
        return (len(self) / ((d / self.eps) ** (d / 2))) ** (1 / d)

    def size_bound(self, c: float) -> float:
        d = self.k - 1
        return c ** d * (d / self.eps) ** (d / 2)


def _level_nets(k: int, eps) -> list[ScalarNet]:
    # Lambda_k(eps) lifts Lambda_{k-1}((k-1) eps / k) by Lambda(eps / k);
    # the base Lambda_2(eps') is Lambda(eps') itself
    levels = []
    cur_k, cur_eps = k, eps
    while cur_k > 2:
        levels.append(scalar_net(cur_eps / cur_k))
        cur_eps = cur_eps * (cur_k - 1) / cur_k
        cur_k -= 1
    levels.append(scalar_net(cur_eps))
    return levels[::-1]


def _dedup(points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    keep, seen = [], set()
    for row in points:
        key = tuple(np.round(row / tol).astype(np.int64)) if tol else tuple(row)
        if key in seen:
            continue
        seen.add(key)
        keep.append(row)
    return np.array(keep).reshape(-1, points.shape[1])


def simplex_net(k: int, eps, gamma: float = GAMMA) -> SimplexNet:
    """Centers on k symbols with divergence covering radius ``eps``.

    Built as the recursive product net at scale ``eps / gamma``; the
    ordering is deterministic (last-coordinate value ascending, inner
    centers in generation order).  Every center is strictly positive.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if k == 1:
        return SimplexNet(1, eps, gamma, np.ones((1, 1)), ())
    levels = _level_nets(k, eps / gamma)
    centers = np.array([[lam, 1 - lam] for lam in levels[0].points], dtype=float)
    for lev in levels[1:]:
        blocks = []
        for lam in lev.points:
            lam = float(lam)
            blocks.append(np.hstack([(1 - lam) * centers, np.full((len(centers), 1), lam)]))
        centers = np.vstack(blocks)
    return SimplexNet(k, eps, gamma, _dedup(centers), tuple(levels))


# ---------------------------------------------------------------------------
# covering radius


def _binary_kl(a: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """D((a, 1-a) || (lam, 1-lam)) on a grid, broadcasting a against lam."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(a > 0, a * np.log(a / lam), 0.0)
        t2 = np.where(a < 1, (1 - a) * np.log((1 - a) / (1 - lam)), 0.0)
    return t1 + t2


def _best_binary(m: int, lams: Sequence[float]) -> np.ndarray:
    """table[s, a] = min over lam of D((a/s, 1 - a/s) || (lam, 1 - lam))."""
    lam = np.asarray([float(v) for v in lams])
    table = np.zeros((m + 1, m + 1))
    for s in range(1, m + 1):
        a = np.arange(s + 1) / s
        table[s, : s + 1] = _binary_kl(a[:, None], lam[None, :]).min(axis=1)
    return table


def _radius_dp(net: SimplexNet, m: int) -> float:
    # R_j(s) = max over lattice points with total s on j symbols of the
    # min divergence to the depth-j net; the split of D over the last
    # coordinate makes the inner max independent of the outer choice.
    tables = [_best_binary(m, lev.points) for lev in net.levels]
    radius = np.array([tables[0][s, : s + 1].max() if s else 0.0 for s in range(m + 1)])
    for tab in tables[1:]:
        nxt = np.zeros(m + 1)
        for s in range(1, m + 1):
            a = np.arange(s + 1)
            vals = tab[s, a] + (1 - a / s) * radius[s - a]
            nxt[s] = vals.max()
        radius = nxt
    return float(radius[m])


def _lattice(m: int, k: int) -> np.ndarray:
    return np.array(list(iter_ntypes(m, k)), dtype=float) / m


def min_divergence_to_centers(points: np.ndarray, centers: np.ndarray, chunk: int | None = None) -> np.ndarray:
    """For each row of ``points`` the smallest D(point || center)."""
    points = np.atleast_2d(points)
    centers = np.atleast_2d(centers)
    if chunk is None:
        chunk = max(1, 4_000_000 // centers.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_c = np.log(centers)
        out = np.empty(len(points))
        for start in range(0, len(points), chunk):
            p = points[start:start + chunk]
            neg_ent = np.where(p > 0, p * np.log(p), 0.0).sum(axis=1)
            # cross term sum_j p_j log c_j with 0 * log 0 = 0
            cross = np.where(p[:, None, :] > 0, p[:, None, :] * log_c[None, :, :], 0.0).sum(axis=2)
            d = neg_ent[:, None] - cross
            out[start:start + chunk] = np.maximum(np.nan_to_num(d, nan=np.inf).min(axis=1), 0.0)
    return out


def covering_radius(net, m: int, *, method: str = "auto") -> float:
    """Max over the barycentric lattice {t/m} of the min divergence to a center.

    For nets produced by :func:`simplex_net` the exact lattice maximum comes
    from a dynamic program; other center sets (or ``method="brute"``) are
    checked point by point.
    """
    if m < 1:
        raise ValueError("grid resolution must be positive")
    if isinstance(net, SimplexNet):
        centers, k = net.centers, net.k
    else:
        centers = np.atleast_2d(np.asarray(net, dtype=float))
        k = centers.shape[1]
    if k == 1:
        return 0.0
    if method == "auto":
        method = "dp" if isinstance(net, SimplexNet) and net.levels else "brute"
    if method == "dp":
        return _radius_dp(net, m)
    if method != "brute":
        raise ValueError(f"unknown method {method!r}")
    return float(min_divergence_to_centers(_lattice(m, k), centers).max())


# ---------------------------------------------------------------------------
# subspace nets


@dataclass
class SubspaceNet:
    """Centers covering the output marginals of a channel.

    ``sources[i]`` names the corner subset (input rows) whose simplex image
    first produced ``centers[i]``.
    """

    channel: object
    eps: float
    rank: int
    centers: np.ndarray
    sources: tuple[tuple[int, ...], ...]
    base: SimplexNet | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.centers)

    @property
    def dimension(self) -> int:
        return self.rank - 1

    @property
    def log_size(self) -> float:
        return math.log(len(self))

    def count_bound(self) -> int:
        """binom(q, rank) |simplex_net(rank, eps)|."""
        base = len(self.base) if self.base is not None else 1
        return math.comb(self.channel.q, self.rank) * base


def subspace_net(ch, eps, gamma: float = GAMMA) -> SubspaceNet:
    """Net of radius ``eps`` over the channel's output marginals.

    For every set of ``rank`` input rows, the simplex net on ``rank``
    symbols is mapped through those rows (a stochastic map), and the images
    are pooled.  Divergence can only shrink under the map, so the radius
    carries over to each sub-simplex, and the sub-simplices cover every
    reachable marginal.
    """
    ch = as_channel(ch)
    ell = ch.rank
    base = simplex_net(ell, eps, gamma) if ell >= 2 else None
    base_centers = base.centers if base is not None else np.ones((1, 1))
    chunks, sources = [], []
    for subset in combinations(range(ch.q), ell):
        img = base_centers @ ch.matrix[list(subset)]
        chunks.append(img)
        sources.extend([subset] * len(img))
    allc = np.vstack(chunks)
    keep, seen, src = [], set(), []
    for row, s in zip(allc, sources):
        key = tuple(np.round(row / 1e-12).astype(np.int64))
        if key in seen:
            continue
        seen.add(key)
        keep.append(row)
        src.append(s)
    return SubspaceNet(ch, eps, ell, np.array(keep), tuple(src), base)


def net_for_n(ch, n: int, gamma: float = GAMMA) -> SubspaceNet:
    """Subspace net with radius 1/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return subspace_net(ch, Fraction(1, n), gamma)


def subspace_covering_radius(net: SubspaceNet, m: int) -> float:
    """Max, over input distributions on the lattice {t/m}, of the min
    divergence from the induced output marginal to the net."""
    ch = net.channel
    marg = _lattice(m, ch.q) @ ch.matrix
    return float(min_divergence_to_centers(marg, net.centers).max())


def log_size_slope(ch, ns: Sequence[int], gamma: float = GAMMA) -> float:
    """Least-squares slope of ln |net_for_n(ch, n)| against ln n."""
    sizes = [math.log(len(net_for_n(ch, n, gamma))) for n in ns]
    return float(np.polyfit(np.log(ns), sizes, 1)[0])
