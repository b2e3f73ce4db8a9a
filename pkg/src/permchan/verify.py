"""Verification suites: the battery of small channels and the checks run
by ``permchan verify``.

Each check returns a :class:`CheckResult`; ``run_suite`` groups them:

    sandwich   checks 1-4 (decomposition, lower bound, boundedness, probe)
    covering   checks 5-6
    capacity   check 7
    threshold  check 8
    dominance  check 9
    oracle     check 10
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import bounds, covering, exact, oracle, simulate
from .core import (
    as_channel,
    classify_channel,
    enumerate_ntypes,
    in_convex_hull,
    iter_ntypes,
    log_fraction,
    multinomial_prob_exact,
    output_marginal,
)

BATTERY_SEED = 20240611
BATTERY_SHAPES = ((2, 2), (2, 3), (3, 2), (3, 3))
MIN_ENTRY = 0.05


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


# ---------------------------------------------------------------------------
# battery


def random_channel(q: int, k: int, rng: np.random.Generator, floor: float = MIN_ENTRY) -> np.ndarray:
    """Strictly positive q x k channel with every entry >= floor."""
    return floor + (1 - floor * k) * rng.dirichlet(np.ones(k), size=q)


def random_rational_channel(q: int, k: int, rng: np.random.Generator, den: int = 20) -> list[list[Fraction]]:
    """Rows are random compositions of ``den`` into k positive parts, over den."""
    rows = []
    for _ in range(q):
        cuts = np.sort(rng.choice(np.arange(1, den), size=k - 1, replace=False))
        parts = np.diff(np.concatenate([[0], cuts, [den]]))
        rows.append([Fraction(int(v), den) for v in parts])
    return rows


def battery_channels(seed: int = BATTERY_SEED) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [random_channel(q, k, rng) for q, k in BATTERY_SHAPES]


def q_grid(k: int) -> list[np.ndarray]:
    """Five fixed strictly positive output distributions."""
    if k == 2:
        return [np.array([a, 1 - a]) for a in (0.1, 0.3, 0.5, 0.7, 0.9)]
    base = [np.full(k, 1 / k)]
    for j in range(min(k, 3)):
        v = np.full(k, 0.2 / (k - 1))
        v[j] = 0.8
        base.append(v)
    w = np.arange(1, k + 1, dtype=float)
    base.append(w / w.sum())
    return base[:5]


def battery_types(n: int, q: int, rng: np.random.Generator, full_up_to: int = 8, draws: int = 20):
    if n <= full_up_to:
        return enumerate_ntypes(n, q)
    return [tuple(int(c) for c in rng.multinomial(n, np.full(q, 1 / q))) for _ in range(draws)]


@dataclass
class BatteryRow:
    channel: int
    n: int
    pi: tuple[int, ...]
    q_label: str
    direct: float
    decomposed: float
    gap: float


def run_battery(seed: int = BATTERY_SEED, n_max: int = 12) -> list[BatteryRow]:
    rng = np.random.default_rng(seed + 1)
    rows = []
    for ci, P in enumerate(battery_channels(seed)):
        ch = as_channel(P.tolist())
        grid = q_grid(ch.k)
        for n in range(1, n_max + 1):
            for pi in battery_types(n, ch.q, rng):
                qs = [("P_Y", None)] + [(f"grid{j}", g) for j, g in enumerate(grid)]
                for label, Q in qs:
                    rep = exact.divergence_exact(pi, ch, Q, residual_tol=None)
                    rows.append(BatteryRow(ci, n, pi, label, rep.direct, rep.decomposed, rep.gap))
    return rows


# ---------------------------------------------------------------------------
# checks


def _timed(fn: Callable[[], CheckResult]) -> CheckResult:
    t = time.perf_counter()
    res = fn()
    res.seconds = time.perf_counter() - t
    return res


def check_decomposition(rows: list[BatteryRow], tol: float = 1e-8) -> CheckResult:
    worst = max(abs(r.direct - r.decomposed) for r in rows)
    ok = len(rows) >= 200 and worst <= tol
    return CheckResult(1, "decomposition identity", ok, f"{len(rows)} instances, max |direct - decomposed| = {worst:.2e}",
                       data={"instances": len(rows), "max_residual": worst})


def check_gap_lower(rows: list[BatteryRow], tol: float = 1e-9) -> CheckResult:
    low = min(r.gap for r in rows)
    return CheckResult(2, "gap lower bound", low >= -tol, f"min gap = {low:.3e}", data={"min_gap": low})


def check_gap_bounded(seed: int = BATTERY_SEED, limit: float = 0.5) -> CheckResult:
    diffs = []
    for P in battery_channels(seed):
        g4, g12 = exact.gap_profile(P.tolist(), [4, 12])
        diffs.append(g12.gap - g4.gap)
    ns = [4, 6, 8, 10, 12]
    ident = [r.gap for r in exact.gap_profile([[1, 0], [0, 1]], ns)]
    slope = exact.log_slope(ns, ident)
    ok = max(diffs) <= limit and abs(slope - 0.5) <= 0.15 * 0.5
    return CheckResult(3, "gap boundedness", ok,
                       f"max gap(12)-gap(4) = {max(diffs):+.2e} (<= {limit}); identity slope = {slope:.4f} (0.5 +/- 0.075)",
                       data={"diffs": diffs, "identity_slope": slope})


def check_tightness(floor: float = 0.01) -> CheckResult:
    tab = exact.tightness_probe([4, 8, 12])
    gaps = [r["gap_nats"] for r in tab.rows]
    return CheckResult(4, "tightness probe", tab.min_gap > floor,
                       "BSC(1/n) gaps " + ", ".join(f"n={r['n']}: {r['gap_nats']:.4f}" for r in tab.rows),
                       data={"gaps": gaps})


def check_covering(m: int = 500) -> CheckResult:
    parts, ok = [], True
    radii = {}
    for k in (2, 3, 4):
        for eps in (1.0, 0.25, 0.05):
            net = covering.simplex_net(k, eps)
            r = covering.covering_radius(net, m)
            radii[(k, eps)] = r
            ok &= r <= eps
    sizes = {}
    for eps in (1.0, 0.25, 0.05, 0.01, 0.001):
        s = len(covering.simplex_net(2, eps))
        sizes[eps] = s
        ok &= s <= 7 / math.sqrt(eps)
    worst = max(r / e for (_, e), r in radii.items())
    parts.append(f"max radius/eps = {worst:.4f} at m={m}")
    parts.append("|net_2| <= 7/sqrt(eps) for eps in " + ",".join(str(e) for e in sizes))
    return CheckResult(5, "simplex covering", bool(ok), "; ".join(parts), data={"radii": radii, "sizes": sizes})


def _random_general_channel(rng: np.random.Generator) -> list[list[float]]:
    q, k = int(rng.integers(2, 5)), int(rng.integers(2, 5))
    P = rng.dirichlet(np.full(k, 0.7), size=q)
    if rng.random() < 0.3:
        P[-1] = P[0]  # force a rank drop now and then
    return P.tolist()


def check_subspace(seed: int = BATTERY_SEED, count: int = 20, eps: float = 0.25) -> CheckResult:
    rng = np.random.default_rng(seed + 6)
    ok, worst = True, 0
    for _ in range(count):
        ch = as_channel(_random_general_channel(rng))
        net = covering.subspace_net(ch, eps)
        bound = math.comb(ch.q, ch.rank) * (len(covering.simplex_net(ch.rank, eps)) if ch.rank > 1 else 1)
        ok &= len(net) <= bound
        inside = all(in_convex_hull(c, ch.matrix, tol=1e-9) for c in net.centers)
        ok &= inside
        worst = max(worst, len(net) / bound)
    return CheckResult(6, "subspace covering", bool(ok), f"{count} channels, max |net|/bound = {worst:.3f}, centers in hull")


def random_block_channel(rng: np.random.Generator) -> tuple[list[list[float]], int]:
    """Block diagonal channel with strictly positive blocks, shuffled; returns
    the matrix and the expected (rank + beta - 2)/2 numerator rank + beta - 2."""
    beta = int(rng.integers(2, 4))
    shapes = [(int(rng.integers(1, 4)), int(rng.integers(1, 4))) for _ in range(beta)]
    q, k = sum(s[0] for s in shapes), sum(s[1] for s in shapes)
    P = np.zeros((q, k))
    r0 = c0 = 0
    rank = 0
    for a, b in shapes:
        blk = 0.05 + rng.dirichlet(np.ones(b), size=a) * (1 - 0.05 * b)
        P[r0:r0 + a, c0:c0 + b] = blk
        rank += int(np.linalg.matrix_rank(blk))
        r0, c0 = r0 + a, c0 + b
    P = P[rng.permutation(q)][:, rng.permutation(k)]
    return P.tolist(), rank + beta - 2


def erasure_channel(q: int, probs) -> list[list[float]]:
    rows = []
    for i, e in enumerate(probs):
        r = [0.0] * (q + 1)
        r[i], r[q] = 1 - e, e
        rows.append(r)
    return rows


def check_capacity(seed: int = BATTERY_SEED) -> CheckResult:
    rng = np.random.default_rng(seed + 7)
    failures = []

    def expect(label, ch, value):
        got = bounds.capacity_value(ch).value
        if got != value:
            failures.append(f"{label}: {got} != {value}")

    expect("Z", [[0.5, 0.5], [0, 1]], 0.5)
    for q in (2, 3, 4):
        for _ in range(3):
            expect(f"erasure q={q}", erasure_channel(q, rng.uniform(0.05, 0.95, size=q)), (q - 1) / 2)
    for i in range(10):
        P, twice = random_block_channel(rng)
        expect(f"block #{i}", P, twice / 2)
    for q in (2, 3, 4, 5):
        expect(f"identity {q}", np.eye(q).tolist(), q - 1)
    ok = not failures
    return CheckResult(7, "capacity table", ok, "all exact" if ok else "; ".join(failures))


THRESHOLD_CHANNEL = [[0.9, 0.1], [0.1, 0.9]]


def check_threshold(trials: int = 20_000, seed: int = 7, threads: int | None = None) -> CheckResult:
    ch = THRESHOLD_CHANNEL
    rows = {}
    for R, n in ((0.3, 256), (0.3, 4096), (0.8, 4096)):
        cb = simulate.build_grid_codebook(ch, n, R)
        rows[(R, n)] = (cb.M, simulate.simulate_error(cb, ch, trials, simulate.cell_seed(seed, R, n), threads=threads))
    lo_small, hi_small = rows[(0.3, 256)][1].wilson
    lo_big, hi_big = rows[(0.3, 4096)][1].wilson
    high = rows[(0.8, 4096)][1].rate
    ok = hi_big < lo_small and high >= 0.3
    detail = (f"R=0.3: err(256)={rows[(0.3, 256)][1].rate:.2e} [{lo_small:.2e},{hi_small:.2e}], "
              f"err(4096)={rows[(0.3, 4096)][1].rate:.2e} [{lo_big:.2e},{hi_big:.2e}]; R=0.8: err(4096)={high:.3f}")
    return CheckResult(8, "threshold simulation", ok, detail, data={"rows": rows})


def _neg_log_prob_a(t) -> float:
    n = sum(t)
    return -log_fraction(multinomial_prob_exact(t, [Fraction(c, n) for c in t]))


def check_dominance(seed: int = BATTERY_SEED) -> CheckResult:
    fails = []
    count_a = 0
    for q in range(1, 5):
        for n in range(1, 15):
            for t in iter_ntypes(n, q):
                count_a += 1
                if bounds.prob_a_stirling_bound(t) < _neg_log_prob_a(t):
                    fails.append(f"stirling {t}")
    count_c = 0
    for P in battery_channels(seed):
        ch = as_channel(P.tolist())
        for n in range(1, 11):
            for pi in iter_ntypes(n, ch.q):
                gap = exact.gap_term(pi, ch)
                py = output_marginal([c / n for c in pi], ch)
                for Q in [py] + q_grid(ch.k)[:2]:
                    d1 = float(sum(a * math.log(a / b) for a, b in zip(py, Q) if a > 0))
                    for m in range(1, n + 1):
                        count_c += 1
                        lhs = exact.marginal_divergence(pi, ch, Q, m)
                        if lhs > m * d1 + m / n * gap + 1e-10:
                            fails.append(f"marginal {pi} m={m}")
    count_mi = 0
    for P in battery_channels(seed):
        ch = as_channel(P.tolist())
        for n in range(1, 9):
            c = max(exact.gap_term(pi, ch) for pi in iter_ntypes(n, ch.q))
            net = covering.net_for_n(ch, n)
            ub = bounds.mi_upper_bound(ch, n, len(net), c).value
            count_mi += 1
            if ub < exact.mutual_information_exact(ch, n):
                fails.append(f"mi n={n}")
    ok = not fails
    detail = f"{count_a} Stirling cases, {count_c} marginal cases, {count_mi} MI cases"
    if fails:
        detail += "; failures: " + ", ".join(fails[:5])
    return CheckResult(9, "bound dominance", ok, detail)


def check_oracle(seed: int = BATTERY_SEED, max_sequences: int = 3 ** 6) -> CheckResult:
    rng = np.random.default_rng(seed + 10)
    count, fails, worst = 0, [], 0.0
    for q, k in BATTERY_SHAPES:
        rows = random_rational_channel(q, k, rng)
        ch = classify_channel(rows)
        for n in range(1, 20):
            if k ** n > max_sequences:
                break
            for pi in iter_ntypes(n, q):
                count += 1
                law = exact.ytype_law_given_A(pi, ch, exact=True).probs
                iid = exact.ytype_law_iid(pi, ch, exact=True).probs
                if law != oracle.ytype_law_oracle(pi, rows) or iid != oracle.iid_ytype_law_oracle(pi, rows):
                    fails.append(f"law {pi}")
                Q = [1 / k] * k
                d = exact.divergence_exact(pi, ch, Q, exact=True).direct
                err = abs(d - oracle.divergence_oracle(pi, rows, Q))
                worst = max(worst, err)
                if err > 1e-12:
                    fails.append(f"divergence {pi}")
    ok = not fails
    return CheckResult(10, "oracle equivalence", ok,
                       f"{count} instances, laws equal as fractions, max divergence difference {worst:.1e}")


SUITES = {
    "sandwich": (1, 2, 3, 4),
    "covering": (5, 6),
    "capacity": (7,),
    "threshold": (8,),
    "dominance": (9,),
    "oracle": (10,),
}


def run_checks(numbers, *, threads: int | None = None) -> list[CheckResult]:
    numbers = sorted(set(numbers))
    out = []
    if 1 in numbers or 2 in numbers:
        t = time.perf_counter()
        rows = run_battery()
        elapsed = time.perf_counter() - t
        for num, fn in ((1, check_decomposition), (2, check_gap_lower)):
            if num in numbers:
                r = fn(rows)
                r.seconds = elapsed
                out.append(r)
    single = {3: check_gap_bounded, 4: check_tightness, 5: check_covering, 6: check_subspace,
              7: check_capacity, 8: lambda: check_threshold(threads=threads), 9: check_dominance,
              10: check_oracle}
    for num in numbers:
        if num in single:
            out.append(_timed(single[num]))
    return out


def run_suite(name: str, *, threads: int | None = None) -> list[CheckResult]:
    if name == "all":
        return run_checks(range(1, 11), threads=threads)
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    return run_checks(SUITES[name], threads=threads)
