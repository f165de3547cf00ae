"""Collaborator-impact analysis over file-sharing datasets.

Input is one JSON object per user::

    {"user_id": "u1", "files": [{"file_id": "f1", "collaborators": ["u2"]}],
     "vendors": ["v1"]}

Collaborators without their own record become implicit entries whose
vendor lists are imputed from a random explicit user.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ledger import AccessLedger

N_FILES_MIN = 10
N_APPS_MIN = 1
METRICS = ("self", "collab", "agg")
ANALYSIS_HEADER = (
    "threshold,count,self_q1,self_med,self_q3,"
    "collab_q1,collab_med,collab_q3,agg_q1,agg_med,agg_q3"
)


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    files: tuple[tuple[str, tuple[str, ...]], ...]
    vendors: tuple[str, ...]

    def collaborators(self) -> list[str]:
        out = set()
        for _, collabs in self.files:
            out.update(collabs)
        return sorted(out)

    @property
    def degree(self) -> int:
        return len(self.collaborators())

    @property
    def n_shared(self) -> int:
        return sum(1 for _, c in self.files if c)

    @property
    def shared_fraction(self) -> float:
        return self.n_shared / len(self.files) if self.files else 0.0


@dataclass(frozen=True)
class DatasetRecords:
    users: Mapping[str, UserRecord]
    # collaborator-only ids -> vendor list (empty until imputed)
    implicit: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def vendors_of(self, uid: str) -> tuple[str, ...]:
        if uid in self.users:
            return self.users[uid].vendors
        return self.implicit.get(uid, ())


def ingest_dataset(lines: Iterable[str]) -> DatasetRecords:
    users: dict[str, UserRecord] = {}
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
            uid = rec["user_id"]
            files_raw = rec.get("files", [])
            vendors = tuple(str(v) for v in rec.get("vendors", []))
        except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
            raise DatasetError(f"line {lineno}: malformed user record ({exc})") from exc
        if not isinstance(uid, str) or not uid:
            raise DatasetError(f"line {lineno}: user_id must be a non-empty string")
        if uid in users:
            raise DatasetError(f"line {lineno}: duplicate user id {uid!r}")
        files = []
        seen = set()
        try:
            for f in files_raw:
                fid = str(f["file_id"])
                collabs = f.get("collaborators", [])
                if any(not isinstance(c, str) or not c for c in collabs):
                    raise DatasetError(f"line {lineno}: empty or non-string collaborator id")
                if fid in seen:
                    raise DatasetError(f"line {lineno}: duplicate file id {fid!r}")
                seen.add(fid)
                files.append((fid, tuple(sorted({c for c in collabs if c != uid}))))
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"line {lineno}: malformed file entry ({exc})") from exc
        users[uid] = UserRecord(uid, tuple(files), tuple(dict.fromkeys(vendors)))

    referenced = set()
    for rec in users.values():
        for _, collabs in rec.files:
            referenced.update(collabs)
    implicit = {c: () for c in sorted(referenced - users.keys())}
    return DatasetRecords(users, implicit)


def read_dataset(path) -> DatasetRecords:
    with open(path, encoding="utf-8") as fh:
        return ingest_dataset(fh)


def dump_dataset(records: DatasetRecords) -> list[str]:
    return [
        json.dumps(
            {
                "user_id": r.user_id,
                "files": [{"file_id": f, "collaborators": list(c)} for f, c in r.files],
                "vendors": list(r.vendors),
            },
            separators=(",", ":"),
        )
        for r in records.users.values()
    ]


def impute_collaborator_apps(records: DatasetRecords, seed: int) -> DatasetRecords:
    """Give each collaborator-only entry the vendor list of a random explicit user."""
    if not records.users:
        raise DatasetError("no explicit users to draw vendor lists from")
    if not records.implicit:
        return records
    donors = sorted(records.users)
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(donors), size=len(records.implicit))
    implicit = {
        cid: records.users[donors[int(k)]].vendors
        for cid, k in zip(sorted(records.implicit), picks.tolist())
    }
    return replace(records, implicit=implicit)


@dataclass(frozen=True)
class UserMetrics:
    self: float
    collab: float
    agg: float


def build_static_ledger(
    records: DatasetRecords, subjects: Sequence[str]
) -> tuple[AccessLedger, dict[str, int]]:
    """Coverage implied by the dataset for the given subject users.

    A vendor the subject authorized covers all of the subject's files; a
    vendor authorized by collaborator ``c`` covers the files shared with ``c``.
    """
    vendor_names = sorted(
        {v for r in records.users.values() for v in r.vendors}
        | {v for vs in records.implicit.values() for v in vs}
    )
    vid = {v: i for i, v in enumerate(vendor_names)}
    ledger = AccessLedger([len(records.users[s].files) for s in subjects])
    for i, s in enumerate(subjects):
        rec = records.users[s]
        for v in rec.vendors:
            ledger.grant_self(i, vid[v])
        masks: dict[str, int] = {}
        for k, (_, collabs) in enumerate(rec.files):
            for c in collabs:
                masks[c] = masks.get(c, 0) | (1 << k)
        for c in sorted(masks):
            for v in records.vendors_of(c):
                ledger.grant_collab(i, vid[v], masks[c])
    return ledger, vid


def compute_metrics(
    records: DatasetRecords, n_files_min: int = N_FILES_MIN
) -> dict[str, UserMetrics]:
    """Self, Collaborators and Aggregate VFC for users with enough files."""
    subjects = sorted(u for u, r in records.users.items() if len(r.files) >= max(n_files_min, 1))
    ledger, _ = build_static_ledger(records, subjects)
    return {
        s: UserMetrics(ledger.self_vfc(i), ledger.collaborators_vfc(i), ledger.aggregate_vfc(i))
        for i, s in enumerate(subjects)
    }


def quantile(sorted_values: Sequence[float], p: float) -> float:
    """Linear interpolation between closest ranks (Hyndman-Fan type 7).

    The interpolation runs in exact rationals and is rounded once, so the
    result does not depend on floating-point evaluation order.
    """
    n = len(sorted_values)
    if n == 0:
        raise ValueError("quantile of empty sample")
    h = (n - 1) * Fraction(p)
    lo = math.floor(h)
    hi = min(lo + 1, n - 1)
    a, b = Fraction(sorted_values[lo]), Fraction(sorted_values[hi])
    return float(a + (h - lo) * (b - a))


@dataclass(frozen=True)
class AnalysisRow:
    threshold: float
    count: int
    # metric -> (q1, median, q3); absent for an empty cohort
    stats: Mapping[str, tuple[float, float, float]] | None

    def csv_line(self) -> str:
        cells = [repr(float(self.threshold)), str(self.count)]
        for m in METRICS:
            if self.stats is None:
                cells.extend(["", "", ""])
            else:
                cells.extend(repr(x) for x in self.stats[m])
        return ",".join(cells)


def sweep_p_min_shared(
    records: DatasetRecords,
    thresholds: Sequence[float],
    n_files_min: int = N_FILES_MIN,
    n_apps_min: int = N_APPS_MIN,
) -> list[AnalysisRow]:
    """Metric quartiles for cohorts sharing at least each threshold fraction."""
    thresholds = [float(t) for t in thresholds]
    if any(not 0.0 <= t <= 1.0 for t in thresholds):
        raise ValueError("thresholds must lie in [0, 1]")
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be ascending")
    metrics = compute_metrics(records, n_files_min)
    rows = []
    for t in thresholds:
        cohort = [
            m for u, m in metrics.items()
            if records.users[u].shared_fraction >= t and len(records.users[u].vendors) >= n_apps_min
        ]
        if not cohort:
            rows.append(AnalysisRow(t, 0, None))
            continue
        stats = {}
        for name in METRICS:
            vals = sorted(getattr(m, name) for m in cohort)
            stats[name] = (quantile(vals, 0.25), quantile(vals, 0.5), quantile(vals, 0.75))
        rows.append(AnalysisRow(t, len(cohort), stats))
    return rows


def analysis_csv(rows: Sequence[AnalysisRow]) -> str:
    return "\n".join([ANALYSIS_HEADER, *(r.csv_line() for r in rows)]) + "\n"


# fixtures


def generate_fixture_dataset(
    n_users: int = 200,
    seed: int = 0,
    n_vendors: int = 99,
    files_median: float = 67.0,
    shared_median: float = 0.18,
    degree_median: float = 8.0,
    explicit_collab_prob: float = 0.2,
) -> list[dict]:
    """Synthetic user records shaped like a small real dataset.

    Targets a median of 67 files, a median shared fraction near 18% and a
    median of one authorized vendor. Useful for smoke tests, not as ground
    truth.
    """
    rng = np.random.default_rng(seed)
    ids = [f"u{i:04d}" for i in range(n_users)]
    vendor_w = 1.0 / np.arange(1, n_vendors + 1)
    vendor_w /= vendor_w.sum()
    out = []
    next_implicit = 0
    for i, uid in enumerate(ids):
        n_files = max(1, int(round(math.exp(rng.normal(math.log(files_median), 1.0)))))
        frac = float(rng.beta(1.2, 1.2 * (1 - shared_median) / shared_median))
        n_shared = min(n_files, max(0, int(round(frac * n_files))))
        degree = max(1, int(round(math.exp(rng.normal(math.log(degree_median), 1.0)))))
        collabs = []
        for _ in range(degree):
            if rng.random() < explicit_collab_prob and n_users > 1:
                j = int(rng.integers(n_users - 1))
                collabs.append(ids[j + (j >= i)])
            else:
                collabs.append(f"c{next_implicit:05d}")
                next_implicit += 1
        collabs = sorted(set(collabs))
        files = []
        for k in range(n_files):
            if k < n_shared:
                m = 1 + int(rng.integers(min(3, len(collabs))))
                chosen = rng.choice(len(collabs), size=m, replace=False)
                fc = sorted(collabs[int(c)] for c in chosen)
            else:
                fc = []
            files.append({"file_id": f"{uid}-f{k}", "collaborators": fc})
        n_v = min(n_vendors, int(rng.geometric(0.5)) - (1 if rng.random() < 0.3 else 0))
        vendors = sorted(rng.choice(n_vendors, size=n_v, replace=False, p=vendor_w).tolist())
        out.append({"user_id": uid, "files": files, "vendors": [f"v{v:02d}" for v in vendors]})
    return out


def generate_collab_dominant_dataset(n_users: int = 200, seed: int = 0) -> list[dict]:
    """Fixture where collaborator-held coverage outweighs self coverage.

    Every subject authorizes one vendor. Each shared file is shared with
    three collaborators, each of whom has a single file (so is never an
    analysis subject) and authorizes two vendors nobody else uses.
    Collaborators-VFC is then six times the shared fraction.
    """
    rng = np.random.default_rng(seed)
    out = []
    collab_records = []
    for i in range(n_users):
        uid = f"s{i:04d}"
        n_files = int(rng.integers(20, 121))
        frac = float(rng.uniform(0.05, 1.0))
        n_shared = max(1, int(round(frac * n_files)))
        pool = [f"{uid}-c{k}" for k in range(6)]
        files = []
        for k in range(n_files):
            if k < n_shared:
                chosen = rng.choice(len(pool), size=3, replace=False)
                fc = sorted(pool[int(c)] for c in chosen)
            else:
                fc = []
            files.append({"file_id": f"f{k}", "collaborators": fc})
        out.append({"user_id": uid, "files": files, "vendors": [f"own-{uid}"]})
        for c in pool:
            collab_records.append(
                {"user_id": c, "files": [{"file_id": "f0", "collaborators": []}],
                 "vendors": [f"{c}-va", f"{c}-vb"]}
            )
    return out + collab_records


def records_from_dicts(rows: Iterable[dict]) -> DatasetRecords:
    return ingest_dataset(json.dumps(r) for r in rows)
