"""Experiment driver: seeded sweeps to CSV plus summary statistics, and the
pinned golden checks for the shipped fixtures.

Reproducibility contract: the same spec and base seed produce byte-identical
CSV output aside from the wall-time column.  Episode seeds are derived by
stable hashing so every planner sees the same instances.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from .envs import (
    BINS_2X2_FIXTURE,
    FIG_BLOCKS_FIXTURE,
    GeneratorParams,
    load_fixture,
    load_instance_text,
    resolve_planner,
    run_episode,
)
from .errors import IntroplanError, SpecError
from .introspector import introspector_plan, literal_count_heuristic
from .mdp import RelationalMdp, SearchLimits
from .mutation import MutabilityIndex, format_mutation, is_satisfied, mutate_true
from .planners import bfs_oracle
from .rewards import EvalOver, TerminationValue, extract_maximal_reward_condition

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "schema_version",
    "domain",
    "size",
    "planner",
    "seed",
    "episode",
    "return",
    "normalized_score",
    "nodes_expanded",
    "plan_length",
    "status",
    "wall_time_ms",
    "config_fingerprint",
)

TIMING_COLUMNS = ("wall_time_ms",)


@dataclass
class ExperimentSpec:
    """One sweep: a domain, a list of sizes, planners with budgets, episodes
    per cell, and a base seed.  Serializes losslessly to JSON."""

    domain: str
    sizes: list[int]
    planners: list[str]
    episodes: int = 100
    seed: int = 0
    out: str | None = None
    node_cap: int = 5_000_000
    time_cap: float = 60.0
    workers: int = 1
    normalize: str = "auto"

    def validate(self) -> None:
        if not self.sizes or any(s < 0 for s in self.sizes):
            raise SpecError("spec needs a non-empty list of non-negative sizes")
        if not self.planners:
            raise SpecError("spec needs at least one planner")
        for p in self.planners:
            resolve_planner(p)
        if self.episodes < 0:
            raise SpecError("episodes must be non-negative")
        if self.normalize not in ("auto", "oracle", "none"):
            raise SpecError("normalize must be auto, oracle, or none")
        if self.workers < 1:
            raise SpecError("workers must be >= 1")
        # size-zero instances only make sense for bins (close-only episodes)
        if 0 in self.sizes and not self.domain.startswith("bins"):
            raise SpecError(f"size 0 is not valid for domain {self.domain}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}") from exc
        try:
            spec = cls(**data)
        except TypeError as exc:
            raise SpecError(f"bad spec fields: {exc}") from exc
        spec.validate()
        return spec


def episode_seed(base: int, domain: str, size: int, episode: int) -> int:
    """Stable per-episode seed; independent of the planner so every planner
    sees the same instance stream."""
    key = f"{base}|{domain}|{size}|{episode}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def _fingerprint(spec: ExperimentSpec, size: int, planner: str) -> str:
    key = json.dumps(
        [spec.domain, size, planner, spec.episodes, spec.seed, spec.node_cap,
         spec.time_cap, spec.normalize],
        sort_keys=True,
    ).encode()
    return hashlib.sha256(key).hexdigest()[:12]


def _cell_episode(args):
    (domain, size, planner, seed, episode, node_cap, time_cap, normalize, fp) = args
    params = GeneratorParams(domain, size, seed)
    limits = SearchLimits(node_cap=node_cap, time_cap=time_cap)
    result = run_episode(params, planner, limits=limits, normalize=normalize)
    status = "BUDGET" if result.stats.budget_exhausted else result.status.name
    score = "" if result.normalized_score is None else repr(result.normalized_score)
    return [
        CSV_SCHEMA_VERSION,
        domain,
        size,
        planner,
        seed,
        episode,
        str(result.total_return),
        score,
        result.stats.nodes_expanded,
        len(result.stats.plan.actions),
        status,
        f"{result.stats.wall_time * 1000.0:.3f}",
        fp,
    ]


def run_experiment(spec: ExperimentSpec, out_path=None, summary_path=None):
    """Execute every cell of the sweep, appending rows incrementally.

    Returns (rows, csv_path, summary_path); the summary groups rows per
    (domain, size, planner) with means and standard deviations, plus
    least-squares slopes of log(metric) against size per planner.
    """
    spec.validate()
    out_path = Path(out_path or spec.out or "results.csv")
    summary_path = Path(summary_path) if summary_path else out_path.with_suffix(".summary.txt")
    tasks = []
    for size in spec.sizes:
        for planner in spec.planners:
            fp = _fingerprint(spec, size, planner)
            for episode in range(spec.episodes):
                seed = episode_seed(spec.seed, spec.domain, size, episode)
                tasks.append(
                    (spec.domain, size, planner, seed, episode,
                     spec.node_cap, spec.time_cap, spec.normalize, fp)
                )
    rows = []
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        if spec.workers > 1 and tasks:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                for row in pool.map(_cell_episode, tasks, chunksize=4):
                    writer.writerow(row)
                    rows.append(row)
        else:
            for task in tasks:
                row = _cell_episode(task)
                writer.writerow(row)
                rows.append(row)
    summary = summarize_rows(rows)
    summary_path.write_text(summary)
    return rows, out_path, summary_path


def _slope(xs, ys) -> float:
    """Least-squares slope; xs are sizes, ys the (log) metric values."""
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    denom = sum((x - mx) ** 2 for x in xs)
    if denom == 0:
        return 0.0
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / denom


def summarize_rows(rows) -> str:
    """Per-cell means/stddevs and per-planner log-growth slope estimates."""
    cells: dict = {}
    for row in rows:
        rec = dict(zip(CSV_COLUMNS, row))
        key = (rec["domain"], str(rec["size"]), rec["planner"])
        cells.setdefault(key, []).append(rec)
    lines = [f"# summary schema_version={CSV_SCHEMA_VERSION}"]
    per_planner: dict = {}
    for (domain, size, planner) in sorted(cells, key=lambda k: (k[0], k[2], int(k[1]))):
        recs = cells[(domain, size, planner)]
        rets = [float(Fraction(str(r["return"]))) for r in recs]
        nodes = [int(r["nodes_expanded"]) for r in recs]
        lengths = [int(r["plan_length"]) for r in recs]
        times = [float(r["wall_time_ms"]) for r in recs]
        scores = [float(r["normalized_score"]) for r in recs if r["normalized_score"] != ""]
        success = sum(1 for r in recs if r["status"] == "SUCCESS") / len(recs)
        parts = [
            f"cell domain={domain} size={size} planner={planner} episodes={len(recs)}",
            f"mean_return={_fmt(statistics.fmean(rets))}",
            f"std_return={_fmt(statistics.pstdev(rets))}",
            f"mean_nodes={_fmt(statistics.fmean(nodes))}",
            f"std_nodes={_fmt(statistics.pstdev(nodes))}",
            f"mean_plan_length={_fmt(statistics.fmean(lengths))}",
            f"mean_time_ms={_fmt(statistics.fmean(times))}",
            f"success_rate={_fmt(success)}",
        ]
        if scores:
            parts.append(f"mean_score={_fmt(statistics.fmean(scores))}")
        lines.append(" ".join(parts))
        per_planner.setdefault((domain, planner), []).append(
            (int(size), statistics.fmean(nodes), statistics.fmean(times))
        )
    for (domain, planner), pts in sorted(per_planner.items()):
        if len(pts) < 2:
            continue
        pts.sort()
        xs = [p[0] for p in pts]
        log_nodes = [math.log(max(p[1], 1.0)) for p in pts]
        log_time = [math.log(max(p[2], 1e-3)) for p in pts]
        lines.append(
            f"slope domain={domain} planner={planner} "
            f"log_nodes_per_size={_fmt(_slope(xs, log_nodes))} "
            f"log_time_per_size={_fmt(_slope(xs, log_time))}"
        )
    return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def strip_timing_columns(csv_text: str) -> str:
    """Drop the timing columns; the remainder is the reproducibility surface."""
    reader = csv.reader(io.StringIO(csv_text))
    rows = list(reader)
    keep = [i for i, name in enumerate(rows[0]) if name not in TIMING_COLUMNS]
    out = io.StringIO()
    writer = csv.writer(out)
    for row in rows:
        writer.writerow([row[i] for i in keep])
    return out.getvalue()


@dataclass
class GoldenCheck:
    name: str
    expected: object
    actual: object

    @property
    def passed(self) -> bool:
        return self.expected == self.actual


@dataclass
class GoldenReport:
    checks: list[GoldenCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, expected, actual) -> None:
        self.checks.append(GoldenCheck(name, expected, actual))

    def to_json(self) -> str:
        return json.dumps(
            {
                "passed": self.passed,
                "checks": [
                    {
                        "name": c.name,
                        "expected": _jsonable(c.expected),
                        "actual": _jsonable(c.actual),
                        "passed": c.passed,
                    }
                    for c in self.checks
                ],
            },
            indent=2,
        )

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            mark = "ok" if c.passed else "FAIL"
            lines.append(f"[{mark}] {c.name}: expected {c.expected!r}, got {c.actual!r}")
        lines.append("golden suite: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def _jsonable(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return str(v)


def verify_goldens() -> GoldenReport:
    """Run the pinned fixture checks: the two-bin instance's reachability
    counts and mutation sets, and the two-stack blocks instance's mutation,
    heuristic value, and two-action plan."""
    report = GoldenReport()
    try:
        _golden_bins(report)
    except IntroplanError as exc:
        report.add("bins2x2 fixture usable", True, f"error: {exc}")
    try:
        _golden_blocks(report)
    except IntroplanError as exc:
        report.add("blocks fixture usable", True, f"error: {exc}")
    return report


def _golden_bins(report: GoldenReport) -> None:
    domain, state = load_fixture(BINS_2X2_FIXTURE)
    mdp = RelationalMdp(domain, state)
    graph = bfs_oracle(mdp)
    report.add("bins2x2 reachable states", 36, len(graph.states))
    report.add("bins2x2 dead-end states", 18, len(graph.dead_ends))
    plan = graph.optimal_success_plan
    report.add("bins2x2 oracle plan length", 4, None if plan is None else len(plan.actions))
    report.add(
        "bins2x2 oracle plan status",
        "SUCCESS",
        None if plan is None else plan.status.name,
    )
    idx = MutabilityIndex.from_domain(domain)
    condition = extract_maximal_reward_condition(domain.reward)
    mutations = mutate_true(state, condition, idx)
    report.add("bins2x2 initial mutation count", 2, len(mutations))
    expected_sets = [
        "-InBin(i1, b1) -InBin(i2, b1) @CloseBin(b1)",
        "-InBin(i1, b2) -InBin(i2, b2) @CloseBin(b2)",
    ]
    report.add(
        "bins2x2 mutation constraint sets",
        expected_sets,
        [format_mutation(m) for m in mutations],
    )
    goal_on_prior = domain.reward.eval_over is EvalOver.PRIOR_STATE
    for label, m in zip(("first", "second"), mutations):
        count = sum(
            1
            for t in graph.transitions
            if is_satisfied(m, graph.states[t.src if goal_on_prior else t.dst], t.action)
        )
        report.add(f"bins2x2 transitions satisfying {label} mutation", 8, count)
    report.add("bins2x2 milestone transitions", 16, len(graph.milestone_transitions))
    stats = introspector_plan(domain, state, 32)
    report.add("bins2x2 introspector plan length", 4, len(stats.plan.actions))
    report.add("bins2x2 introspector status", "SUCCESS", stats.plan.status.name)


def _golden_blocks(report: GoldenReport) -> None:
    domain, state = load_fixture(FIG_BLOCKS_FIXTURE)
    idx = MutabilityIndex.from_domain(domain)
    condition = extract_maximal_reward_condition(domain.reward)
    mutations = mutate_true(state, condition, idx)
    report.add("blocks fixture mutation count", 1, len(mutations))
    report.add(
        "blocks fixture mutation",
        "+OnTable(a) +OnTable(b) +OnTable(c) +OnTable(d)",
        format_mutation(mutations[0]) if mutations else None,
    )
    report.add(
        "blocks fixture heuristic value",
        1,
        literal_count_heuristic(state, mutations[0]) if mutations else None,
    )
    stats = introspector_plan(domain, state, 32)
    report.add("blocks fixture introspector plan length", 2, len(stats.plan.actions))
    report.add("blocks fixture introspector status", "SUCCESS", stats.plan.status.name)
    milestone = _replay_state(domain, state, stats.plan.actions)
    expected_milestone = sorted(
        ["OnTable(a)", "OnTable(b)", "OnTable(c)", "OnTable(d)",
         "Clear(a)", "Clear(b)", "Clear(c)", "Clear(d)", "HandEmpty()"]
    )
    report.add(
        "blocks fixture milestone facts",
        expected_milestone,
        sorted(repr(f) for f in milestone.facts),
    )


def _replay_state(domain, state, actions):
    from .domain import apply

    for action in actions:
        state = apply(state, action)
    return state


def oracle_report(instance_text: str, state_cap: int = 100_000, dump: bool = False) -> str:
    """Human-readable reachability report for an instance file."""
    domain, state = load_instance_text(instance_text)
    mdp = RelationalMdp(domain, state)
    graph = bfs_oracle(mdp, state_cap=state_cap)
    plan = graph.optimal_success_plan
    lines = [
        f"domain: {domain.name}",
        f"reachable states: {len(graph.states)}",
        f"transitions: {len(graph.transitions)}",
        f"milestone transitions: {len(graph.milestone_transitions)}",
        f"dead-end states: {len(graph.dead_ends)}",
        (
            "optimal success plan: none"
            if plan is None
            else f"optimal success plan: {len(plan.actions)} action(s), return {plan.total_return}: "
            + " -> ".join(repr(a) for a in plan.actions)
        ),
    ]
    if dump:
        lines.append("")
        for i, s in enumerate(graph.states, start=1):
            dead = " dead-end" if (i - 1) in graph.dead_ends else ""
            lines.append(f"state {i}{dead}: " + " ".join(sorted(repr(f) for f in s.facts)))
        for t in graph.transitions:
            mark = "*" if t.reward == graph.r_max else " "
            lines.append(
                f"  {mark} {t.src + 1} -> {t.dst + 1} via {t.action!r} "
                f"reward={t.reward} {t.termination.name}"
            )
    return "\n".join(lines)
