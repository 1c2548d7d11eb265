"""Command-line front end: ``graph``, ``decode``, ``verify``, ``bench`` and ``stats``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (
    BenchConfig,
    cmd_verify,
    latency_table,
    read_csv,
    run_bench,
    summarize,
    verification_grid,
    write_csv,
)
from .fusion import decode_stream, parse_syndrome_document
from .graph import DEFAULT_MAX_WEIGHT, graph_to_dict, load_graph, save_graph
from .oracle import MAX_DEFECTS
from .primal import decode_batch


def _rounds_token(text: str) -> int | str:
    if text == "d":
        return "d"
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("rounds must be positive or 'd'")
    return value


def _add_mode(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--no-prematch", dest="prematch", action="store_false", help="disable in-accelerator pre-matching")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--stream", dest="stream", action="store_true", help="decode round by round")
    mode.add_argument("--batch", dest="stream", action="store_false", help="decode all rounds at once (default)")
    parser.set_defaults(stream=False)


def _dump(doc, out: str | None) -> None:
    text = json.dumps(doc, indent=1) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_graph(args) -> int:
    cfg = BenchConfig(
        code=args.code, distance=args.distance, rounds=args.rounds, p=(args.p,), p_time=args.p_time, max_weight=args.max_weight
    )
    graph = cfg.build_graph(args.p)
    if args.out:
        save_graph(graph, args.out)
    else:
        _dump(graph_to_dict(graph), None)
    return 0


def cmd_decode(args) -> int:
    graph = load_graph(args.graph)
    doc = json.loads(Path(args.syndrome).read_text(encoding="utf-8"))
    rounds = parse_syndrome_document(doc, graph)
    if args.stream:
        solution = decode_stream(graph, rounds, args.prematch)
    else:
        solution = decode_batch(graph, [v for r in rounds for v in r], args.prematch)
    _dump(
        {
            "pairs": [list(p) for p in solution.pairs],
            "boundary_matches": [list(b) for b in solution.boundary_matches],
            "prematched_edges": list(solution.prematched_edges),
            "total_weight": solution.total_weight,
            "cycle_count": solution.stats.cycle_count,
            "primal_interactions": solution.stats.interactions,
            "round_cycles": list(solution.stats.round_cycles),
        },
        args.out,
    )
    return 0


def cmd_verify_cli(args) -> int:
    grid = verification_grid(args.code, args.distance, args.rounds, args.p)
    report = cmd_verify(
        grid,
        args.shots,
        args.seed,
        args.prematch,
        args.stream,
        args.max_defects,
        max_draws=args.max_draws,
        cross_check=args.cross_check,
    )
    for e in report.entries:
        status = "ok" if not e.failures else f"{len(e.failures)} FAILED"
        print(
            f"{e.code:10s} d={e.distance:<2d} rounds={e.rounds:<2d} p={e.p:<6g} "
            f"verified={e.verified:<5d} cross_checked={e.cross_checked:<4d} drawn={e.drawn:<7d} {status}"
        )
        for f in e.failures[:5]:
            print(f"    seed={f['seed']} shot={f['shot']} [{f['kind']}]: {f['problem']}")
    if args.out:
        _dump(report.as_dict(), args.out)
    short = [e for e in report.entries if e.verified < args.shots]
    if short:
        print(f"warning: {len(short)} configurations reached the draw limit before {args.shots} verified shots")
    return 0 if report.ok else 1


def cmd_bench(args) -> int:
    cfg = BenchConfig(
        code=args.code,
        distance=args.distance,
        rounds=args.rounds,
        p=tuple(args.p),
        p_time=args.p_time,
        shots=args.shots,
        seed=args.seed,
        prematch=args.prematch,
        stream=args.stream,
        verify_oracle=args.verify_oracle,
        max_weight=args.max_weight,
        penalty=args.penalty,
        workers=args.workers,
        out=Path(args.out) if args.out else None,
    )
    stats = run_bench(cfg)
    if cfg.out:
        write_csv(stats, cfg.out)
    summary = summarize(stats)
    for row in summary:
        lo, hi = row["logical_error_ci95"]
        print(
            f"p={row['p']:g} shots={row['shots']} "
            f"cycles mean={row['cycle_count']['mean']:.1f} p99={row['cycle_count']['p99']:.0f} "
            f"interactions mean={row['primal_interactions']['mean']:.3f} p99={row['primal_interactions']['p99']:.0f} "
            f"p_L={row['logical_error_rate']:.3g} [{lo:.3g}, {hi:.3g}]"
        )
    if args.summary:
        _dump(summary, args.summary)
    return 0


def cmd_stats(args) -> int:
    stats = [s for path in args.csv for s in read_csv(path)]
    table = latency_table(stats, args.distance, args.k, args.cycles_per_round)
    for row in table:
        cut = " ".join(f"k={k}:{v:g}" if v is not None else f"k={k}:n/a" for k, v in row["cutoff_latency"].items())
        print(
            f"p={row['p']:g} shots={row['shots']} p_L={row['logical_error_rate']:.3g} "
            f"mean_latency={row['mean_latency']:.1f} p_eff={row['effective_error_rate']:.3g} {cut}"
        )
    if args.out:
        _dump(table, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="microblossom", description="Exact MWPM decoding with a simulated dual accelerator.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph", help="generate a decoding graph document")
    g.add_argument("--code", choices=("repetition", "surface"), default="surface")
    g.add_argument("--distance", type=int, default=3)
    g.add_argument("--rounds", type=int, default=None, help="measurement rounds (surface; default: distance)")
    g.add_argument("--p", type=float, default=0.01)
    g.add_argument("--p-time", type=float, default=None)
    g.add_argument("--max-weight", type=int, default=DEFAULT_MAX_WEIGHT)
    g.add_argument("--out", help="JSON path (default: stdout)")
    g.set_defaults(func=cmd_graph)

    d = sub.add_parser("decode", help="decode one syndrome document")
    d.add_argument("graph", help="graph JSON document")
    d.add_argument("syndrome", help='syndrome JSON: {"rounds": [[...], ...]} or {"defects": [...]}')
    _add_mode(d)
    d.add_argument("--out")
    d.set_defaults(func=cmd_decode)

    v = sub.add_parser("verify", help="oracle verification campaign")
    v.add_argument("--code", nargs="+", choices=("repetition", "surface"), default=["repetition", "surface"])
    v.add_argument("--distance", nargs="+", type=int, default=[3, 5])
    v.add_argument("--rounds", nargs="+", type=_rounds_token, default=[1, "d"], help="integers or 'd'")
    v.add_argument("--p", nargs="+", type=float, default=[0.001, 0.01, 0.05, 0.1, 0.3])
    v.add_argument("--shots", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--max-defects", type=int, default=MAX_DEFECTS)
    v.add_argument("--max-draws", type=int, default=None, help="draw budget per configuration (default: 100 x shots)")
    v.add_argument("--cross-check", type=int, default=0, help="over-cap shots per configuration checked on a relabeled graph")
    _add_mode(v)
    v.add_argument("--out", help="JSON report path")
    v.set_defaults(func=cmd_verify_cli)

    b = sub.add_parser("bench", help="Monte Carlo benchmark to CSV")
    b.add_argument("--code", choices=("repetition", "surface"), default="surface")
    b.add_argument("--distance", type=int, default=3)
    b.add_argument("--rounds", type=int, default=None)
    b.add_argument("--p", nargs="+", type=float, default=[0.01])
    b.add_argument("--p-time", type=float, default=None)
    b.add_argument("--shots", type=int, default=1000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--max-weight", type=int, default=DEFAULT_MAX_WEIGHT)
    b.add_argument("--penalty", type=float, default=0.0, help="latency-proxy cycles charged per primal interaction")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--verify-oracle", action="store_true", help="check shots with few defects against the oracle")
    _add_mode(b)
    b.add_argument("--out", help="per-shot CSV path")
    b.add_argument("--summary", help="summary JSON path")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("stats", help="cutoff latency and effective error rate from bench CSVs")
    s.add_argument("csv", nargs="+")
    s.add_argument("--distance", type=int, required=True)
    s.add_argument("--k", nargs="+", type=float, default=[0.0, 1.0, 10.0])
    s.add_argument("--cycles-per-round", type=float, default=1000.0, help="accelerator cycles per measurement round")
    s.add_argument("--out", help="JSON table path")
    s.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
