"""Step-by-step app adoption simulation over a populated collaboration network."""

from __future__ import annotations

import logging
import math
import os
import random
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Any, Mapping, Sequence

import numpy as np

from . import catalog as catalog_mod
from . import graph as graph_mod
from .catalog import AppCatalog
from .decisions import DecisionModel, EventClass, ModelKind, Scope, decide
from .graph import CollaborationGraph, TeamAssignment, detect_teams
from .ledger import AccessLedger
from .sharing import (
    EmpiricalTables,
    SharingProfile,
    SyntheticSharingParams,
    build_empirical_tables,
    populate,
    synthetic_tables,
)

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
SERIES_FIELDS = (
    "step",
    "avg_apps",
    "avg_aggregate_vfc",
    "new_vendor",
    "own_vendor",
    "collab_vendor",
    "saturated",
)
SATURATED = "saturated"


def mix64(x: int) -> int:
    """SplitMix64 finalizer."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def replicate_seed(master_seed: int, replicate: int) -> int:
    return mix64((master_seed & MASK64) ^ mix64(replicate))


def derive_seed(seed: int, stream: int) -> int:
    return mix64(seed ^ (stream * 0xD1B54A32D192ED03 & MASK64))


# seed streams per replicate
_GRAPH, _SHARING, _CATALOG, _SIM, _TABLES = 1, 2, 3, 4, 5


@dataclass
class SimConfig:
    network: dict
    catalog: dict = field(default_factory=dict)
    sharing: dict = field(default_factory=dict)
    models: list[DecisionModel] = field(
        default_factory=lambda: [DecisionModel(ModelKind.EBL)]
    )
    team_mode: bool = False
    target_avg_apps: float = 30.0
    replicates: int = 1
    seed: int = 0
    record_stride: int = 0
    max_resample: int = 100
    check_every: int = 0
    event_log_limit: int = 0
    baseline: str = "EBL"

    def __post_init__(self):
        if self.target_avg_apps <= 0:
            raise ValueError("target_avg_apps must be positive")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not self.models:
            raise ValueError("at least one decision model is required")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ValueError("duplicate decision models")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimConfig":
        scope = Scope.TEAM if data.get("team_mode", False) else Scope.INDIVIDUAL
        models = [DecisionModel.from_config(m, scope) for m in data.get("models", ["EBL"])]
        kwargs = {k: data[k] for k in (
            "catalog", "sharing", "team_mode", "target_avg_apps", "replicates", "seed",
            "record_stride", "max_resample", "check_every", "event_log_limit", "baseline",
        ) if k in data}
        return cls(network=dict(data["network"]), models=models, **kwargs)

    def to_dict(self) -> dict:
        return {
            "network": self.network,
            "catalog": self.catalog,
            "sharing": self.sharing,
            "models": [m.to_config() for m in self.models],
            "team_mode": self.team_mode,
            "target_avg_apps": self.target_avg_apps,
            "replicates": self.replicates,
            "seed": self.seed,
            "record_stride": self.record_stride,
            "max_resample": self.max_resample,
            "check_every": self.check_every,
            "event_log_limit": self.event_log_limit,
            "baseline": self.baseline,
        }


@dataclass
class World:
    graph: CollaborationGraph
    profiles: list[SharingProfile]
    catalog: AppCatalog
    teams: TeamAssignment | None = None


def build_graph(spec: Mapping[str, Any], seed: int) -> CollaborationGraph:
    mode = spec.get("mode", "config-model")
    if mode == "config-model":
        if "degrees" in spec:
            degrees = list(spec["degrees"])
        else:
            degrees = graph_mod.lognormal_degrees(
                int(spec["n_users"]),
                float(spec.get("mean_degree", 15.0)),
                float(spec.get("sigma", 0.8)),
                derive_seed(seed, 1),
                int(spec.get("min_degree", 0)),
                spec.get("max_degree"),
            )
        return graph_mod.generate_configuration_model(degrees, seed)
    if mode == "inflate":
        from .dataset import read_dataset

        records = read_dataset(spec["dataset"])
        source = [r.degree for r in records.users.values()]
        degrees = graph_mod.resample_degrees(source, int(spec["n_users"]), derive_seed(seed, 1))
        return graph_mod.generate_configuration_model(degrees, seed)
    if mode == "edge-list":
        return graph_mod.read_edge_list(spec["path"])
    if mode == "graph":
        return graph_mod.read_graph(spec["path"])
    raise ValueError(f"unknown network mode {mode!r}")


def build_catalog(spec: Mapping[str, Any], seed: int) -> AppCatalog:
    if "path" in spec:
        return catalog_mod.read_catalog(spec["path"])
    return catalog_mod.generate_synthetic_catalog(
        n_apps=int(spec.get("n_apps", 1000)),
        zipf_exponent=float(spec.get("zipf_exponent", 1.0)),
        apps_per_vendor_mean=float(spec.get("apps_per_vendor_mean", 1.3)),
        related_size=int(spec.get("related_size", 5)),
        seed=seed,
    )


def build_tables(spec: Mapping[str, Any], seed: int) -> EmpiricalTables:
    if "dataset" in spec:
        from .dataset import read_dataset

        return build_empirical_tables(read_dataset(spec["dataset"]))
    params = {k: spec[k] for k in SyntheticSharingParams.__dataclass_fields__ if k in spec}
    return synthetic_tables(seed, SyntheticSharingParams(**params))


def build_world(config: SimConfig, rep_seed: int) -> World:
    graph = build_graph(config.network, derive_seed(rep_seed, _GRAPH))
    tables = build_tables(config.sharing, derive_seed(rep_seed, _TABLES))
    profiles = populate(
        graph,
        tables,
        derive_seed(rep_seed, _SHARING),
        float(config.sharing.get("multi_collab_prob", 0.0)),
    )
    catalog = build_catalog(config.catalog, derive_seed(rep_seed, _CATALOG))
    teams = detect_teams(graph) if config.team_mode else None
    return World(graph, profiles, catalog, teams)


def assign_install_weights(profiles: Sequence[SharingProfile]) -> list[float]:
    """Selection probability per user, with zero-app users clamped to weight 1."""
    w = [max(p.install_weight, 1) for p in profiles]
    total = sum(w)
    return [x / total for x in w]


@dataclass(frozen=True)
class EventRecord:
    step: int
    user: int
    sampled_app: int | None
    chosen_app: int | None
    chosen_vendor: int | None
    scenario: str | None
    event_class: str
    took_history_path: bool


@dataclass
class SimResult:
    model: str
    replicate: int
    seed: int
    series: list[tuple]
    final_self: list[float]
    final_collab: list[float]
    final_aggregate: list[float]
    events: dict[str, int]
    steps: int
    installs: int
    n_users: int
    event_log: list[EventRecord] = field(default_factory=list)

    @property
    def final_avg_aggregate(self) -> float:
        return self.series[-1][2] if self.series else 0.0

    @property
    def saturation_fraction(self) -> float:
        return self.events[SATURATED] / self.steps if self.steps else 0.0


class Simulation:
    """One replicate of one decision model over a world.

    The average Aggregate-VFC is kept as a per-user cache refreshed only for
    users touched by each authorization.
    """

    def __init__(
        self,
        world: World,
        model: DecisionModel,
        seed: int,
        max_resample: int = 100,
        team_mode: bool = False,
        event_log_limit: int = 0,
    ):
        self.world = world
        self.model = model
        self.seed = seed
        self.rng = random.Random(seed)
        self.max_resample = max_resample
        self.ledger = AccessLedger.for_network(world.graph, world.profiles)
        self.n = world.graph.n_users
        self.user_cum = list(accumulate(max(p.install_weight, 1) for p in world.profiles))
        self.user_total = self.user_cum[-1]
        self.agg = [0.0] * self.n
        self.agg_sum = 0.0
        self.user_installs = [0] * self.n
        self.installs = 0
        self.steps = 0
        self.events = {e.value: 0 for e in EventClass}
        self.events[SATURATED] = 0
        self.team_mode = team_mode
        if team_mode:
            teams = world.teams or detect_teams(world.graph)
            self.team_of = teams.team_of
            self.team_vendors: list[set[int]] = [set() for _ in range(teams.n_teams)]
        self.event_log: list[EventRecord] = []
        self.event_log_limit = event_log_limit

    @property
    def avg_apps(self) -> float:
        return self.installs / self.n

    def avg_aggregate(self) -> float:
        return math.fsum(self.agg) / self.n

    def recompute_avg_aggregate(self) -> float:
        led = self.ledger
        return math.fsum(led.aggregate_count(u) / led.n_files[u] for u in range(self.n)) / self.n

    def step(self) -> EventRecord:
        rng = self.rng
        cat = self.world.catalog
        led = self.ledger
        self.steps += 1
        u0 = bisect_right(self.user_cum, rng.random() * self.user_total)
        installed = led.installed_apps[u0]
        a0 = None
        for _ in range(self.max_resample):
            a = cat.sample_index(rng)
            if a not in installed:
                a0 = a
                break
        if a0 is None:
            self.events[SATURATED] += 1
            rec = EventRecord(self.steps, u0, None, None, None, None, SATURATED, False)
            self._log(rec)
            return rec

        a_rel, v_rel = cat.alternatives_ix(a0)
        known = self.team_vendors[self.team_of[u0]] if self.team_mode else None
        out = decide(self.model, u0, a0, a_rel, v_rel, led, cat, rng, known)

        changed = led.authorize(u0, out.chosen_vendor, out.chosen_app)
        if self.team_mode:
            self.team_vendors[self.team_of[u0]].add(out.chosen_vendor)
        covered = led.covered_total
        n_files = led.n_files
        agg = self.agg
        delta = 0.0
        for w in changed:
            new = covered[w] / n_files[w]
            delta += new - agg[w]
            agg[w] = new
        self.agg_sum += delta

        self.installs += 1
        self.user_installs[u0] += 1
        self.events[out.event_class.value] += 1
        rec = EventRecord(
            self.steps, u0, a0, out.chosen_app, out.chosen_vendor,
            out.scenario.value, out.event_class.value, out.took_history_path,
        )
        self._log(rec)
        return rec

    def _log(self, rec: EventRecord) -> None:
        if len(self.event_log) < self.event_log_limit:
            self.event_log.append(rec)

    def row(self) -> tuple:
        e = self.events
        return (
            self.steps,
            self.avg_apps,
            self.avg_aggregate(),
            e[EventClass.NEW_VENDOR.value],
            e[EventClass.OWN_VENDOR.value],
            e[EventClass.COLLAB_VENDOR.value],
            e[SATURATED],
        )

    def check_consistency(self, tol: float = 1e-9) -> None:
        cached = self.agg_sum / self.n
        exact = self.recompute_avg_aggregate()
        if abs(cached - exact) > tol:
            raise AssertionError(f"cached average {cached} drifted from {exact}")

    def run(self, target_avg_apps: float, record_stride: int = 0, check_every: int = 0,
            max_steps: int | None = None) -> list[tuple]:
        """Step until the average installs per user reaches the target."""
        stride = record_stride or self.n
        goal = math.ceil(target_avg_apps * self.n - 1e-9)
        if max_steps is None:
            max_steps = 20 * goal + 1000
        series: list[tuple] = []
        while self.installs < goal and self.steps < max_steps:
            before = self.installs
            self.step()
            if self.installs != before and self.installs % stride == 0:
                series.append(self.row())
            if check_every and self.steps % check_every == 0:
                self.check_consistency()
        if self.steps >= max_steps and self.installs < goal:
            logger.warning("step budget exhausted at %d installs (goal %d)", self.installs, goal)
        if not series or series[-1][0] != self.steps:
            series.append(self.row())
        return series

    def result(self, replicate: int, series: list[tuple]) -> SimResult:
        led = self.ledger
        return SimResult(
            model=self.model.name,
            replicate=replicate,
            seed=self.seed,
            series=series,
            final_self=[led.self_vfc(u) for u in range(self.n)],
            final_collab=[led.collaborators_vfc(u) for u in range(self.n)],
            final_aggregate=[led.aggregate_vfc(u) for u in range(self.n)],
            events=dict(self.events),
            steps=self.steps,
            installs=self.installs,
            n_users=self.n,
            event_log=list(self.event_log),
        )


def run_replicate(config: SimConfig, replicate: int) -> list[SimResult]:
    """All model arms of one replicate over a shared world and a shared seed."""
    rep_seed = replicate_seed(config.seed, replicate)
    world = build_world(config, rep_seed)
    sim_seed = derive_seed(rep_seed, _SIM)
    out = []
    for model in config.models:
        sim = Simulation(
            world, model, sim_seed, config.max_resample, config.team_mode, config.event_log_limit
        )
        series = sim.run(config.target_avg_apps, config.record_stride, config.check_every)
        out.append(sim.result(replicate, series))
    return out


def _worker_count(jobs: int) -> int:
    env = os.environ.get("COVERAGE_SIM_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, jobs))


def _run_replicate_dict(args):
    cfg, r = args
    return run_replicate(SimConfig.from_dict(cfg), r)


def run(config: SimConfig, workers: int | None = None) -> dict[str, list[SimResult]]:
    """Run every replicate; results keyed by model name, ordered by replicate."""
    workers = workers or _worker_count(config.replicates)
    reps = range(config.replicates)
    if workers > 1:
        cfg = config.to_dict()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_rep = list(pool.map(_run_replicate_dict, [(cfg, r) for r in reps]))
    else:
        per_rep = [run_replicate(config, r) for r in reps]
    out: dict[str, list[SimResult]] = {m.name: [] for m in config.models}
    for results in per_rep:
        for res in results:
            out[res.model].append(res)
    return out


@dataclass
class ModelComparison:
    model: str
    ratio_series: list[list[tuple[float, float | None]]]
    final_ratios: list[float | None]

    def _values(self) -> np.ndarray:
        return np.array([r for r in self.final_ratios if r is not None], dtype=float)

    @property
    def mean(self) -> float | None:
        v = self._values()
        return float(v.mean()) if v.size else None

    @property
    def std(self) -> float | None:
        v = self._values()
        if not v.size:
            return None
        return float(v.std(ddof=1)) if v.size > 1 else 0.0

    @property
    def stderr(self) -> float | None:
        v = self._values()
        if not v.size:
            return None
        return self.std / math.sqrt(v.size)


def _ratio_series(series: list[tuple], base: list[tuple]) -> list[tuple[float, float | None]]:
    by_apps = {row[1]: row[2] for row in base}
    out = []
    for row in series:
        b = by_apps.get(row[1])
        if b is None:
            continue
        out.append((row[1], row[2] / b if b > 0 else None))
    return out


def run_comparative(
    results: Mapping[str, list[SimResult]], baseline: str = "EBL"
) -> dict[str, ModelComparison]:
    """Ratios of each arm's average Aggregate-VFC to the baseline arm.

    Series are aligned on the average-apps-per-user axis; a ratio is
    ``None`` while the baseline average is zero.
    """
    if baseline not in results:
        raise ValueError(f"baseline model {baseline!r} was not run")
    base = results[baseline]
    out = {}
    for name, reps in results.items():
        if len(reps) != len(base):
            raise ValueError("arms have different replicate counts")
        series = [_ratio_series(r.series, b.series) for r, b in zip(reps, base)]
        finals = []
        for r, b in zip(reps, base):
            bf = b.final_avg_aggregate
            finals.append(r.final_avg_aggregate / bf if bf > 0 else None)
        out[name] = ModelComparison(name, series, finals)
    return out


def paired_gap(cmp: Mapping[str, ModelComparison], lower: str, upper: str) -> tuple[float, float]:
    """Mean and standard error of ``upper - lower`` final ratios, paired by replicate."""
    d = np.array(
        [u - l for l, u in zip(cmp[lower].final_ratios, cmp[upper].final_ratios)
         if l is not None and u is not None],
        dtype=float,
    )
    if d.size < 2:
        return float(d.mean()) if d.size else 0.0, float("inf")
    return float(d.mean()), float(d.std(ddof=1) / math.sqrt(d.size))


def summarize(config: SimConfig, results: Mapping[str, list[SimResult]]) -> dict:
    """Plain-data summary suitable for ``summary.json``."""
    baseline = config.baseline if config.baseline in results else None
    cmp = run_comparative(results, baseline) if baseline else {}
    models = {}
    for name, reps in results.items():
        finals = np.array([r.final_avg_aggregate for r in reps], dtype=float)
        events: dict[str, int] = {}
        for r in reps:
            for k, v in r.events.items():
                events[k] = events.get(k, 0) + v
        steps = sum(r.steps for r in reps)
        entry = {
            "final_avg_aggregate_vfc": {
                "mean": float(finals.mean()),
                "std": float(finals.std(ddof=1)) if finals.size > 1 else 0.0,
                "per_replicate": finals.tolist(),
            },
            "final_avg_apps": [r.installs / r.n_users for r in reps],
            "events": events,
            "saturation_fraction": events[SATURATED] / steps if steps else 0.0,
        }
        if name in cmp and name != baseline:
            c = cmp[name]
            entry["ratio_vs_baseline"] = {
                "mean": c.mean,
                "std": c.std,
                "stderr": c.stderr,
                "per_replicate": c.final_ratios,
            }
        models[name] = entry
    return {
        "baseline": baseline,
        "replicates": config.replicates,
        "seeds": [replicate_seed(config.seed, r) for r in range(config.replicates)],
        "models": models,
        "config": config.to_dict(),
    }
