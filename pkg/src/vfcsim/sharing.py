"""Per-user file counts and per-edge shared file sets."""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from .graph import CollaborationGraph

if TYPE_CHECKING:
    from .dataset import DatasetRecords


@dataclass(frozen=True)
class SharingProfile:
    """Files of one user and which of them each collaborator can read.

    ``shared_with[c]`` holds indices of this user's files accessible by
    collaborator ``c``. Only non-empty sets are stored.
    """

    n_files: int
    shared_with: Mapping[int, frozenset[int]] = field(default_factory=dict)
    install_weight: int = 0

    def shared_union(self) -> frozenset[int]:
        out: set[int] = set()
        for s in self.shared_with.values():
            out |= s
        return frozenset(out)


def shared_fraction(profile: SharingProfile) -> float:
    if profile.n_files <= 0:
        return 0.0
    return len(profile.shared_union()) / profile.n_files


Triple = tuple[int, float, int]


@dataclass(frozen=True)
class EmpiricalTables:
    """(file count, shared fraction, apps count) samples keyed by degree."""

    buckets: Mapping[int, tuple[Triple, ...]]

    def __post_init__(self):
        if not self.buckets:
            raise ValueError("empirical tables are empty")
        for key, triples in self.buckets.items():
            if not triples:
                raise ValueError(f"bucket {key} is empty")
            for n_files, _, _ in triples:
                if n_files < 1:
                    raise ValueError(f"bucket {key} holds a file count below 1")

    @property
    def degrees(self) -> list[int]:
        return sorted(self.buckets)

    def bucket_for(self, degree: int) -> tuple[Triple, ...]:
        """Exact bucket, else the nearest degree (lower degree wins a tie)."""
        if degree in self.buckets:
            return self.buckets[degree]
        keys = self.degrees
        i = bisect_left(keys, degree)
        if i == 0:
            return self.buckets[keys[0]]
        if i == len(keys):
            return self.buckets[keys[-1]]
        lo, hi = keys[i - 1], keys[i]
        return self.buckets[lo] if degree - lo <= hi - degree else self.buckets[hi]


def build_empirical_tables(dataset: "DatasetRecords") -> EmpiricalTables:
    """Group explicit dataset users by collaborator count.

    Users with no files are skipped since they cannot carry a sharing
    fraction.
    """
    buckets: dict[int, list[Triple]] = {}
    for rec in dataset.users.values():
        if not rec.files:
            continue
        buckets.setdefault(rec.degree, []).append(
            (len(rec.files), rec.shared_fraction, len(rec.vendors))
        )
    if not buckets:
        raise ValueError("dataset has no users with files")
    return EmpiricalTables({k: tuple(v) for k, v in sorted(buckets.items())})


@dataclass(frozen=True)
class SyntheticSharingParams:
    """Stand-in distributions when no dataset is available.

    Defaults target a median of 67 files, a median shared fraction of 0.18
    and a median of one installed app per user.
    """

    files_median: float = 67.0
    files_sigma: float = 1.2
    shared_median: float = 0.18
    shared_concentration: float = 4.0
    apps_p: float = 0.5
    n_samples: int = 2000
    max_degree: int = 200


def _beta_with_median(median: float, concentration: float) -> tuple[float, float]:
    # approximate median of Beta(a, b) ~ (a - 1/3) / (a + b - 2/3)
    a = median * (concentration - 2 / 3) + 1 / 3
    b = concentration - a
    return a, b


def synthetic_tables(
    seed: int, params: SyntheticSharingParams = SyntheticSharingParams()
) -> EmpiricalTables:
    """Sample triples from log-normal / Beta / geometric laws.

    Triples do not depend on degree; they are spread across degree buckets
    0..max_degree so every lookup hits an exact bucket.
    """
    rng = np.random.default_rng(seed)
    n = params.n_samples
    files = np.maximum(
        1, np.rint(np.exp(rng.normal(math.log(params.files_median), params.files_sigma, n)))
    ).astype(int)
    a, b = _beta_with_median(params.shared_median, params.shared_concentration)
    fractions = rng.beta(a, b, n)
    apps = rng.geometric(params.apps_p, n)
    degrees = np.arange(n) % (params.max_degree + 1)
    buckets: dict[int, list[Triple]] = {}
    for d, f, s, k in zip(degrees.tolist(), files.tolist(), fractions.tolist(), apps.tolist()):
        buckets.setdefault(d, []).append((f, s, k))
    return EmpiricalTables({k: tuple(v) for k, v in sorted(buckets.items())})


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def allocate_shared(
    n_files: int,
    fraction: float,
    collaborators: Sequence[int],
    rng: np.random.Generator,
    multi_collab_prob: float = 0.0,
) -> dict[int, frozenset[int]]:
    """Spread ``round(fraction * n_files)`` shared files over the edges.

    Each shared file lands on one uniformly random collaborator, then joins
    every other collaborator independently with ``multi_collab_prob``.
    """
    if not collaborators:
        return {}
    k = min(max(round_half_up(fraction * n_files), 0), n_files)
    if k == 0:
        return {}
    deg = len(collaborators)
    owners = rng.integers(0, deg, size=k)
    sets: list[set[int]] = [set() for _ in range(deg)]
    for f, e in enumerate(owners.tolist()):
        sets[e].add(f)
    if multi_collab_prob > 0 and deg > 1:
        extra = rng.random((k, deg)) < multi_collab_prob
        for f, e in zip(*np.nonzero(extra)):
            sets[int(e)].add(int(f))
    return {c: frozenset(s) for c, s in zip(collaborators, sets) if s}


def populate(
    graph: CollaborationGraph,
    tables: EmpiricalTables,
    seed: int,
    multi_collab_prob: float = 0.0,
) -> list[SharingProfile]:
    """Give every user a resampled (files, fraction, apps) triple and shared sets."""
    if not 0.0 <= multi_collab_prob <= 1.0:
        raise ValueError("multi_collab_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    out = []
    for u in range(graph.n_users):
        nbrs = graph.adjacency[u]
        bucket = tables.bucket_for(len(nbrs))
        n_files, frac, apps = bucket[int(rng.integers(len(bucket)))]
        shared = allocate_shared(n_files, frac, nbrs, rng, multi_collab_prob)
        out.append(SharingProfile(n_files=n_files, shared_with=shared, install_weight=apps))
    return out


def dump_profiles(profiles: Sequence[SharingProfile]) -> list[str]:
    lines = []
    for u, p in enumerate(profiles):
        shared = {str(c): sorted(s) for c, s in sorted(p.shared_with.items())}
        lines.append(
            json.dumps(
                {"user": u, "n_files": p.n_files, "shared": shared, "install_weight": p.install_weight},
                separators=(",", ":"),
            )
        )
    return lines


def load_profiles(lines: Iterable[str]) -> list[SharingProfile]:
    rows: dict[int, SharingProfile] = {}
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
            u = int(rec["user"])
            n_files = int(rec["n_files"])
            shared = {int(c): frozenset(int(i) for i in idx) for c, idx in rec["shared"].items()}
            weight = int(rec.get("install_weight", 0))
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"line {lineno}: malformed profile record ({exc})") from exc
        if u in rows:
            raise ValueError(f"line {lineno}: duplicate user {u}")
        for c, idx in shared.items():
            if any(not 0 <= i < n_files for i in idx):
                raise ValueError(f"line {lineno}: shared index out of range on edge to {c}")
        rows[u] = SharingProfile(n_files, {c: s for c, s in shared.items() if s}, weight)
    if sorted(rows) != list(range(len(rows))):
        raise ValueError("profile user ids are not dense 0..n-1")
    return [rows[u] for u in range(len(rows))]
