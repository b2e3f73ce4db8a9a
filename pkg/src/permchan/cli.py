"""``permchan`` command line.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 verification
failure.  Tabular output is CSV with '#'-prefixed metadata lines (version,
seed, sha256 of the channel file) and is byte-identical across runs with
the same arguments.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import __version__, bounds, covering, exact, simulate, verify
from .core import PermchanError, load_channel


@dataclass
class ExperimentConfig:
    subcommand: str
    channel: str | None = None
    n: int | None = None
    m: int | None = None
    pi: tuple[int, ...] | None = None
    Q: tuple[float, ...] | None = None
    ns: tuple[int, ...] = ()
    rates: tuple[float, ...] = ()
    trials: int = 1000
    seed: int = 0
    k: int | None = None
    eps: float | None = None
    gamma: float = covering.GAMMA
    grid: int | None = None
    alpha: float | None = None
    exact: bool = False
    spread: str = "min"
    suite: str = "all"
    threads: int | None = None
    out: str | None = None
    svg: str | None = None
    fmt: str = "csv"


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(Fraction(v.strip())) for v in text.split(",") if v.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive_float(text: str) -> float:
    try:
        v = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="permchan", description="Noisy permutation channel toolkit.")
    p.add_argument("--version", action="version", version=f"permchan {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, channel: bool | None):
        if channel is not None:
            sp.add_argument("--channel", required=channel, help="channel file ('q k' header, then rows)")
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", dest="fmt", choices=("csv", "text"), default="csv")

    sp = sub.add_parser("capacity", help="capacity of the channel's class")
    common(sp, True)

    sp = sub.add_parser("cover", help="KL epsilon-net centers")
    common(sp, False)
    sp.add_argument("--k", type=_positive_int, help="simplex dimension (number of symbols)")
    sp.add_argument("--eps", type=_positive_float, required=True)
    sp.add_argument("--gamma", type=_positive_float, default=covering.GAMMA)
    sp.add_argument("--grid", type=_positive_int, help="also certify the covering radius on this lattice")

    sp = sub.add_parser("divergence", help="exact divergence of the uniform-type output law")
    common(sp, True)
    sp.add_argument("--pi", type=_ints, help="input type counts, e.g. 3,5")
    sp.add_argument("--q", dest="Q", type=_floats, help="reference distribution (default: output marginal)")
    sp.add_argument("--ns", type=_ints, help="gap profile over these n instead of a single type")
    sp.add_argument("--exact", action="store_true", help="rational arithmetic (rational channels only)")

    sp = sub.add_parser("bounds", help="closed-form bounds for the channel")
    common(sp, True)
    sp.add_argument("--n", type=_positive_int, default=1000)
    sp.add_argument("--m", type=_positive_int, help="observations for the Stam comparison (default n/2)")
    sp.add_argument("--alpha", type=_positive_float)

    sp = sub.add_parser("simulate", help="Monte-Carlo error rates over rates and block lengths")
    common(sp, True)
    sp.add_argument("--rates", type=_floats, required=True)
    sp.add_argument("--ns", type=_ints, required=True)
    sp.add_argument("--trials", type=_positive_int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--spread", choices=("min", "max"), default="min")
    sp.add_argument("--svg", help="also write a line chart of error rate against n")
    sp.add_argument("--threads", type=_positive_int)

    sp = sub.add_parser("verify", help="run verification suites")
    common(sp, None)
    sp.add_argument("--suite", choices=tuple(verify.SUITES) + ("all",), default="all")
    sp.add_argument("--threads", type=_positive_int)
    return p


def parse_args(argv: Sequence[str] | None = None) -> ExperimentConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = ExperimentConfig(subcommand=ns.subcommand)
    for key, value in vars(ns).items():
        if key != "subcommand" and hasattr(cfg, key) and value is not None:
            setattr(cfg, key, value)
    if cfg.subcommand == "cover":
        if cfg.k is None and cfg.channel is None:
            parser.error("cover needs --k")
        if cfg.eps > 1:
            parser.error("--eps must lie in (0, 1]")
    if cfg.subcommand == "divergence" and cfg.pi is None and not cfg.ns:
        parser.error("divergence needs --pi or --ns")
    if cfg.subcommand == "simulate":
        if any(r <= 0 for r in cfg.rates):
            parser.error("--rates must be positive")
        if any(n < 2 for n in cfg.ns):
            parser.error("--ns must be >= 2")
    if cfg.subcommand == "bounds" and cfg.m is not None and cfg.m > cfg.n:
        parser.error("--m must not exceed --n")
    return cfg


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _channel_hash(path: str | None) -> str:
    if path is None:
        return "none"
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _emit(cfg: ExperimentConfig, rows: list[dict], meta: dict | None = None) -> str:
    buf = io.StringIO()
    if cfg.fmt == "csv":
        buf.write(f"# permchan {__version__}\n")
        buf.write(f"# command={cfg.subcommand} seed={cfg.seed}\n")
        buf.write(f"# channel_sha256={_channel_hash(cfg.channel)}\n")
        for key, value in (meta or {}).items():
            buf.write(f"# {key}={_fmt(value)}\n")
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
    else:
        for key, value in (meta or {}).items():
            buf.write(f"{key}: {_fmt(value)}\n")
        if rows:
            cols = list(rows[0])
            cells = [[_fmt(r[c]) for c in cols] for r in rows]
            widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
            buf.write("  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip() + "\n")
            for row in cells:
                buf.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n")
    return buf.getvalue()


def _write(cfg: ExperimentConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def sweep_svg(rows: list[simulate.SweepRow], width: int = 480, height: int = 320) -> str:
    """Line chart of error rate (y, 0..1) against n (x, log scale), one line
    per rate."""
    pad = 40
    ns = sorted({r.n for r in rows})
    lo, hi = math.log(ns[0]), math.log(ns[-1])
    span = hi - lo or 1.0

    def xy(n, e):
        x = pad + (math.log(n) - lo) / span * (width - 2 * pad)
        y = height - pad - e * (height - 2 * pad)
        return f"{x:.1f},{y:.1f}"

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">n (log scale)</text>',
           f'<text x="12" y="{height / 2}" transform="rotate(-90 12 {height / 2})" text-anchor="middle">error rate</text>']
    for n in ns:
        x = xy(n, 0).split(",")[0]
        out.append(f'<text x="{x}" y="{height - pad + 14}" text-anchor="middle">{n}</text>')
    for e in (0.0, 0.5, 1.0):
        y = xy(ns[0], e).split(",")[1]
        out.append(f'<text x="{pad - 4}" y="{y}" text-anchor="end">{e:g}</text>')
    rates = sorted({r.rate for r in rows})
    for i, R in enumerate(rates):
        pts = [xy(r.n, r.outcome.rate) for r in rows if r.rate == R and r.outcome is not None]
        color = colors[i % len(colors)]
        if pts:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{" ".join(pts)}"/>')
        out.append(f'<text x="{width - pad + 2}" y="{pad + 14 * i}" fill="{color}">R={R:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _capacity(cfg):
    ch = load_channel(cfg.channel)
    rep = bounds.capacity_value(ch)
    if cfg.fmt == "text":
        if rep.solved:
            return f"{_fmt(rep.value)}  ({rep.formula})\n"
        tag = rep.caveat or "bounds-only"
        return f"bounds-only: {_fmt(rep.lower)} <= C <= {_fmt(rep.upper)}  ({rep.formula}; {tag})\n"
    row = {"class": rep.kind.value, "capacity": rep.value if rep.solved else "bounds-only",
           "lower": rep.lower, "upper": rep.upper, "formula": rep.formula, "caveat": rep.caveat}
    return _emit(cfg, [row])


def _cover(cfg):
    meta = {"eps": cfg.eps, "gamma": cfg.gamma}
    if cfg.channel is not None:
        net = covering.subspace_net(load_channel(cfg.channel), cfg.eps, cfg.gamma)
        centers = net.centers
        meta["bound"] = net.count_bound()
        if cfg.grid:
            meta["radius"] = covering.subspace_covering_radius(net, cfg.grid)
    else:
        net = covering.simplex_net(cfg.k, cfg.eps, cfg.gamma)
        centers = net.centers
        if cfg.grid:
            meta["radius"] = covering.covering_radius(net, cfg.grid)
    meta["centers"] = len(centers)
    rows = [{f"p{j}": float(v) for j, v in enumerate(c)} for c in centers]
    return _emit(cfg, rows, meta)


def _divergence(cfg):
    ch = load_channel(cfg.channel)
    if cfg.ns:
        Q = cfg.Q if cfg.Q is not None else "marginal"
        rows = [{"n": r.n, "worst_pi": " ".join(map(str, r.worst_pi)), "gap_nats": r.gap, "direct_nats": r.direct}
                for r in exact.gap_profile(ch, cfg.ns, Q)]
        meta = {"log_slope": exact.log_slope(cfg.ns, [r["gap_nats"] for r in rows])} if len(cfg.ns) > 1 else {}
        return _emit(cfg, rows, meta)
    Q = cfg.Q
    if Q is not None and cfg.exact:
        Q = [Fraction(v).limit_denominator(10 ** 12) for v in Q]
    rep = exact.divergence_exact(cfg.pi, ch, Q, exact=cfg.exact)
    return _emit(cfg, [rep.as_row()])


def _bounds(cfg):
    ch = load_channel(cfg.channel)
    alpha = bounds.PETROV_ALPHA if cfg.alpha is None else cfg.alpha
    n = cfg.n
    rows = []
    cap = bounds.capacity_value(ch)
    rows.append(bounds.BoundReport("capacity_lower", cap.lower, cap.formula, {"class": cap.kind.value}).as_row())
    rows.append(bounds.BoundReport("capacity_upper", cap.upper, cap.formula, {"class": cap.kind.value},
                                   cap.caveat).as_row())
    cs = bounds.c_star(ch)
    rows.append(bounds.BoundReport("c_star", cs, "min_i min_j p_ij / max_j p_ij").as_row())
    c_val = None
    if cs > 0:
        c_val = bounds.gap_constant_bound(ch, alpha)
        rows.append(bounds.BoundReport("gap_constant", c_val, "((q-1)/2) ln(2 pi alpha^2 / c*) + q/12",
                                       {"alpha": alpha}).as_row())
        rows.append(bounds.BoundReport("gap_constant_n", bounds.gap_constant_bound(ch, alpha, n),
                                       "((q-1)/2) ln(2 pi alpha^2 / c*) + q/(12n)", {"alpha": alpha, "n": n}).as_row())
    else:
        rows.append(bounds.BoundReport("gap_constant", math.inf, "((q-1)/2) ln(2 pi alpha^2 / c*) + q/12",
                                       {"alpha": alpha}, "c* = 0: channel not strictly positive").as_row())
    m = cfg.m if cfg.m is not None else max(1, n // 2)
    st = bounds.stam_bounds(ch.q, n, m, c_val, c_star_value=cs if cs > 0 else None, alpha=alpha)
    inputs = {"q": ch.q, "n": n, "m": m}
    if st.han is not None:
        rows.append(bounds.BoundReport("marginal_han", st.han, "(m/n) c", inputs).as_row())
    rows.append(bounds.BoundReport("marginal_stam", st.stam, "((q-1)/2) m(m-1)/((n-1)(n-m+1))", inputs).as_row())
    if st.large_m is not None:
        rows.append(bounds.BoundReport("marginal_large_m", st.large_m, "(q-1)/(n-1) sum_{t<m} t/(n-t)", inputs,
                                       f"minimal: {st.minimal}").as_row())
    g = bounds.erasure_gamma(ch.q)
    bern = bounds.bernstein_tail(n / ch.q, g, n)
    rows.append(bounds.BoundReport("bernstein_tail", bern.tail, "2 / n^(gamma/4)",
                                   {"E": n / ch.q, "gamma": g, "n": n}, bern.note).as_row())
    if cap.kind.value == "zigzag":
        z = bounds.zigzag_conditional_bound(ch.q)
        rows.append(bounds.BoundReport("zigzag_upper", z.value, z.formula, z.inputs, z.note).as_row())
    return _emit(cfg, rows, {"alpha": alpha})


def _simulate(cfg):
    ch = load_channel(cfg.channel)
    rows = simulate.sweep_rate(ch, cfg.rates, cfg.ns, cfg.trials, cfg.seed, spread=cfg.spread, threads=cfg.threads)
    if cfg.svg:
        with open(cfg.svg, "w", encoding="utf-8") as fh:
            fh.write(sweep_svg(rows))
    return _emit(cfg, [r.as_row() for r in rows], {"trials": cfg.trials, "spread": cfg.spread, "decoder": "min-divergence"})


def _verify(cfg):
    results = verify.run_suite(cfg.suite, threads=cfg.threads)
    for r in results:
        print(r.line(), file=sys.stderr)
    rows = [{"check": r.number, "name": r.name, "passed": int(r.passed), "detail": r.detail} for r in results]
    return _emit(cfg, rows, {"suite": cfg.suite}), all(r.passed for r in results)


def run(cfg: ExperimentConfig) -> int:
    try:
        if cfg.subcommand == "verify":
            text, ok = _verify(cfg)
            _write(cfg, text)
            return 0 if ok else 3
        handler = {"capacity": _capacity, "cover": _cover, "divergence": _divergence,
                   "bounds": _bounds, "simulate": _simulate}[cfg.subcommand]
        _write(cfg, handler(cfg))
        return 0
    except (PermchanError, ValueError, ArithmeticError, OSError) as exc:
        print(f"permchan: error: {exc}", file=sys.stderr)
        return 1


def main(argv: Sequence[str] | None = None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
