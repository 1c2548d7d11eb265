"""Monte Carlo campaigns: per-shot statistics, CSV output, verification and latency metrics."""

from __future__ import annotations

import csv
import math
import warnings
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .fusion import decode_stream, split_rounds
from .graph import (
    DEFAULT_MAX_WEIGHT,
    DecodingGraph,
    build_repetition_graph,
    build_surface_graph_3d,
    relabel_graph,
)
from .noise import (
    check_logical_error,
    draw_defects,
    edge_probabilities,
    sample_errors,
    syndrome_from_errors,
)
from .oracle import MAX_DEFECTS, Verdict, build_syndrome_graph, check_certificate, verify
from .primal import MatchingSolution, Pipeline

CSV_SCHEMA = "microblossom-bench/1"
CSV_FIELDS = (
    "shot",
    "p",
    "defects",
    "cycle_count",
    "primal_interactions",
    "latency_proxy",
    "logical_error",
    "weight",
)
_Z95 = 1.959963984540054
_NOMINAL_P = 0.01


@dataclass(frozen=True)
class BenchConfig:
    code: str = "surface"
    distance: int = 3
    rounds: int | None = None
    p: tuple[float, ...] = (0.01,)
    p_time: float | None = None
    shots: int = 1000
    seed: int = 0
    prematch: bool = True
    stream: bool = False
    verify_oracle: bool = False
    max_weight: int = DEFAULT_MAX_WEIGHT
    penalty: float = 0.0
    max_defects: int = MAX_DEFECTS
    workers: int = 1
    out: Path | None = None

    def __post_init__(self) -> None:
        if self.code not in ("repetition", "surface"):
            raise ValueError(f"unknown code family {self.code!r}")
        if self.shots < 0:
            raise ValueError("shots must be non-negative")
        if not self.p:
            raise ValueError("at least one error rate is required")
        if self.verify_oracle and self.max_defects > MAX_DEFECTS:
            raise ValueError(f"oracle verification caps max_defects at {MAX_DEFECTS}")

    @property
    def num_rounds(self) -> int:
        if self.code == "repetition":
            return 1
        return self.distance if self.rounds is None else self.rounds

    def build_graph(self, p: float) -> DecodingGraph:
        # weights only depend on p through the p_space / p_time ratio, so a
        # noiseless run borrows a nominal rate for them
        wp = p if p > 0 else _NOMINAL_P
        if self.code == "repetition":
            return build_repetition_graph(self.distance, wp, self.max_weight)
        return build_surface_graph_3d(self.distance, self.num_rounds, wp, self.p_time, self.max_weight)

    def sampling(self, p: float) -> tuple[DecodingGraph, np.ndarray]:
        graph = self.build_graph(p)
        probs = edge_probabilities(graph)
        if p == 0:
            probs = np.zeros_like(probs)
        return graph, probs


@dataclass(frozen=True)
class ShotStats:
    shot: int
    p: float
    defects: int
    cycle_count: int
    primal_interactions: int
    latency_proxy: float
    logical_error: bool
    weight: int
    round_cycles: tuple[int, ...] = ()

    def row(self) -> list[str]:
        return [
            str(self.shot),
            repr(float(self.p)),
            str(self.defects),
            str(self.cycle_count),
            str(self.primal_interactions),
            repr(float(self.latency_proxy)),
            str(int(self.logical_error)),
            str(self.weight),
        ]


def decode_shot(pipeline: Pipeline, defects, stream: bool) -> MatchingSolution:
    if stream:
        return decode_stream(pipeline.graph, split_rounds(pipeline.graph, defects), pipeline=pipeline)
    return pipeline.decode(defects)


def run_shot(
    pipeline: Pipeline,
    probabilities: np.ndarray,
    seed: int,
    shot: int,
    p: float,
    stream: bool = False,
    penalty: float = 0.0,
) -> tuple[ShotStats, MatchingSolution]:
    graph = pipeline.graph
    sample = sample_errors(graph, probabilities, seed, shot)
    defects = syndrome_from_errors(graph, sample)
    solution = decode_shot(pipeline, defects, stream)
    st = solution.stats
    stats = ShotStats(
        shot,
        p,
        len(defects),
        st.cycle_count,
        st.interactions,
        st.cycle_count + penalty * st.interactions,
        check_logical_error(graph, sample, solution),
        solution.total_weight,
        tuple(st.round_cycles),
    )
    return stats, solution


def _bench_chunk(args) -> list[ShotStats]:
    config, p, start, stop = args
    graph, probs = config.sampling(p)
    pipeline = Pipeline(graph, config.prematch)
    out = []
    for shot in range(start, stop):
        stats, solution = run_shot(pipeline, probs, config.seed, shot, p, config.stream, config.penalty)
        if config.verify_oracle and stats.defects <= config.max_defects:
            verdict = verify(solution, build_syndrome_graph(graph, solution.defects))
            if not verdict:
                raise AssertionError(f"oracle mismatch at seed={config.seed} shot={shot} p={p}: {verdict.diagnostics}")
        out.append(stats)
    return out


def run_bench(config: BenchConfig) -> list[ShotStats]:
    """Decode ``config.shots`` shots per error rate; results are ordered by (p, shot)."""
    tasks = []
    for p in config.p:
        step = max(1, math.ceil(config.shots / max(1, config.workers)))
        for start in range(0, config.shots, step):
            tasks.append((config, p, start, min(config.shots, start + step)))
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            parts = list(pool.map(_bench_chunk, tasks))
    else:
        parts = [_bench_chunk(t) for t in tasks]
    return [s for part in parts for s in part]


def write_csv(stats: Iterable[ShotStats], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {CSV_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for s in stats:
            writer.writerow(s.row())
    return path


def read_csv(path: str | Path) -> list[ShotStats]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != f"# {CSV_SCHEMA}":
            raise ValueError(f"{path}: expected schema header '# {CSV_SCHEMA}', got {first!r}")
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [
            ShotStats(
                int(r["shot"]),
                float(r["p"]),
                int(r["defects"]),
                int(r["cycle_count"]),
                int(r["primal_interactions"]),
                float(r["latency_proxy"]),
                r["logical_error"] == "1",
                int(r["weight"]),
            )
            for r in reader
        ]


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def cutoff_latency(samples: Sequence[float], k: float, p_L: float) -> float:
    """Smallest sample value ``L`` whose empirical tail ``P(X >= L)`` is at most ``k * p_L``."""
    values = np.sort(np.asarray(samples, dtype=np.float64))
    if values.size == 0:
        raise ValueError("cutoff_latency needs at least one sample")
    if k < 0:
        raise ValueError("k must be non-negative")
    tail = k * p_L
    if tail > 1:
        raise ValueError(f"k * p_L must not exceed 1, got {tail}")
    n = values.size
    unique = np.unique(values)
    counts = n - np.searchsorted(values, unique, side="left")
    ok = np.flatnonzero(counts <= tail * n * (1 + 1e-12))
    if not ok.size:
        # also reached when the maximum alone carries more than the tail mass
        warnings.warn("tail mass below the resolution of the samples; returning the maximum", stacklevel=2)
        return float(values[-1])
    return float(unique[ok[0]])


def effective_error_rate(p_L: float, mean_latency_rounds: float, d: float) -> float:
    """Logical error rate including idling while the decoder catches up."""
    if d <= 0:
        raise ValueError("d must be positive")
    return p_L * (1.0 + mean_latency_rounds / d)


def _describe(values: np.ndarray) -> dict[str, float]:
    if values.size == 0:
        return {"mean": 0.0, "p50": 0.0, "p90": 0.0, "p99": 0.0, "max": 0.0}
    q = np.percentile(values, [50, 90, 99])
    return {
        "mean": float(values.mean()),
        "p50": float(q[0]),
        "p90": float(q[1]),
        "p99": float(q[2]),
        "max": float(values.max()),
    }


def summarize(stats: Sequence[ShotStats]) -> list[dict]:
    """Per error rate: cycle and interaction statistics and the logical error rate with a 95% Wilson interval."""
    out = []
    for p in sorted({s.p for s in stats}):
        rows = [s for s in stats if s.p == p]
        errors = sum(s.logical_error for s in rows)
        lo, hi = wilson_interval(errors, len(rows))
        out.append(
            {
                "p": p,
                "shots": len(rows),
                "cycle_count": _describe(np.array([s.cycle_count for s in rows], dtype=np.float64)),
                "primal_interactions": _describe(np.array([s.primal_interactions for s in rows], dtype=np.float64)),
                "latency_proxy": _describe(np.array([s.latency_proxy for s in rows], dtype=np.float64)),
                "logical_errors": errors,
                "logical_error_rate": errors / len(rows) if rows else 0.0,
                "logical_error_ci95": [lo, hi],
            }
        )
    return out


def latency_table(
    stats: Sequence[ShotStats], distance: int, ks: Sequence[float] = (0.0, 1.0, 10.0), cycles_per_round: float = 1000.0
) -> list[dict]:
    """Cutoff latencies and effective logical error rates per error rate."""
    out = []
    for row in summarize(stats):
        samples = [s.latency_proxy for s in stats if s.p == row["p"]]
        p_L = row["logical_error_rate"]
        mean_rounds = row["latency_proxy"]["mean"] / cycles_per_round
        cutoffs = {}
        for k in ks:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                cutoffs[str(k)] = cutoff_latency(samples, k, p_L) if k * p_L <= 1 else None
        out.append(
            {
                "p": row["p"],
                "shots": row["shots"],
                "logical_error_rate": p_L,
                "mean_latency": row["latency_proxy"]["mean"],
                "mean_latency_rounds": mean_rounds,
                "effective_error_rate": effective_error_rate(p_L, mean_rounds, distance),
                "cutoff_latency": cutoffs,
            }
        )
    return out


@dataclass
class VerifyEntry:
    code: str
    distance: int
    rounds: int
    p: float
    verified: int = 0
    cross_checked: int = 0
    drawn: int = 0
    failures: list[dict] = field(default_factory=list)
    defect_counts: dict[int, int] = field(default_factory=dict)


@dataclass
class VerifyReport:
    entries: list[VerifyEntry]

    @property
    def ok(self) -> bool:
        return all(not e.failures for e in self.entries)

    def as_dict(self) -> dict:
        return {"ok": self.ok, "entries": [asdict(e) for e in self.entries]}


def verification_grid(
    codes: Sequence[str], distances: Sequence[int], rounds: Sequence[int | str], ps: Sequence[float]
) -> list[tuple[str, int, int, float]]:
    """Expand a campaign grid; a rounds entry ``"d"`` means rounds equal to the distance."""
    grid = []
    for code in codes:
        for d in distances:
            if code == "repetition":
                round_set = [1]
            else:
                round_set = sorted({d if r == "d" else int(r) for r in rounds})
            for r in round_set:
                for p in ps:
                    grid.append((code, d, r, p))
    return grid


def cmd_verify(
    grid: Sequence[tuple[str, int, int, float]],
    shots: int,
    seed: int = 0,
    prematch: bool = True,
    stream: bool = False,
    max_defects: int = MAX_DEFECTS,
    max_draws: int | None = None,
    cross_check: int = 0,
    certificates: bool = True,
    decoder: Callable[[Pipeline, list[int]], MatchingSolution] | None = None,
) -> VerifyReport:
    """Oracle verification over a grid of (code, distance, rounds, p).

    Shots are drawn in order until ``shots`` of them have at most
    ``max_defects`` defects (or ``max_draws`` draws are spent); each such shot
    is compared with the exhaustive oracle. Up to ``cross_check`` larger shots
    per configuration are compared against a decode of the same syndrome on a
    graph with shuffled vertex ids. With ``certificates`` the dual solution of
    every verified shot must also satisfy complementary slackness.
    """
    if max_defects > MAX_DEFECTS:
        raise ValueError(f"max_defects cannot exceed {MAX_DEFECTS}")
    decoder = decoder or (lambda pl, defects: decode_shot(pl, defects, stream))
    max_draws = 100 * shots if max_draws is None else max_draws
    entries = []
    for code, d, r, p in grid:
        cfg = BenchConfig(code=code, distance=d, rounds=r, p=(p,))
        graph, probs = cfg.sampling(p)
        pipeline = Pipeline(graph, prematch)
        entry = VerifyEntry(code, d, r, p)
        shuffled = None
        shot = 0
        while entry.verified < shots and entry.drawn < max_draws:
            defects = draw_defects(graph, probs, seed, shot)
            entry.drawn += 1
            if len(defects) <= max_defects:
                kind, problem = None, None
                try:
                    solution = decoder(pipeline, defects)
                    sg = build_syndrome_graph(graph, defects)
                    verdict = verify(solution, sg)
                    if verdict and solution.total_weight != verdict.weight:
                        verdict = Verdict(False, verdict.weight, verdict.optimum, [f"reported weight {solution.total_weight} != {verdict.weight}"])
                    if not verdict:
                        kind, problem = "weight", "; ".join(verdict.diagnostics)
                    elif certificates:
                        issues = check_certificate(solution, sg)
                        if issues:
                            kind, problem = "certificate", "; ".join(issues)
                except Exception as exc:  # noqa: BLE001 - any decoder failure is a reportable verification failure
                    kind, problem = "error", f"{type(exc).__name__}: {exc}"
                if problem:
                    entry.failures.append({"seed": seed, "shot": shot, "defects": defects, "kind": kind, "problem": problem})
                entry.verified += 1
                entry.defect_counts[len(defects)] = entry.defect_counts.get(len(defects), 0) + 1
            elif entry.cross_checked < cross_check:
                if shuffled is None:
                    shuffled = relabel_graph(graph, seed)
                g2, perm = shuffled
                w1 = decoder(pipeline, defects).total_weight
                w2 = Pipeline(g2, prematch).decode([perm[v] for v in defects]).total_weight
                if w1 != w2:
                    entry.failures.append(
                        {
                            "seed": seed,
                            "shot": shot,
                            "defects": defects,
                            "kind": "cross-check",
                            "problem": f"shuffled weight {w2} != {w1}",
                        }
                    )
                entry.cross_checked += 1
            shot += 1
        entries.append(entry)
    return VerifyReport(entries)


def with_overrides(config: BenchConfig, **kwargs) -> BenchConfig:
    return replace(config, **kwargs)
