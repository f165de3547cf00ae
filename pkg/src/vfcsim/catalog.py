"""App catalog: vendors, popularity weights and related-app alternatives."""

from __future__ import annotations

import json
import random
import warnings
from bisect import bisect_right
from dataclasses import dataclass
from itertools import accumulate
from typing import Iterable, Sequence

import numpy as np


class CatalogError(ValueError):
    pass


class PrunedRelatedWarning(UserWarning):
    """Related-app references to unknown apps were removed on ingestion."""

    def __init__(self, count: int):
        self.count = count
        super().__init__(f"pruned {count} dangling related-app reference(s)")


@dataclass(frozen=True)
class App:
    app_id: str
    vendor: str
    install_count: int
    related: tuple[str, ...] = ()


class AppCatalog:
    """Immutable app universe with dense app and vendor indices.

    Vendors are numbered by sorted vendor name. Sampling
    is proportional to ``install_count``.
    """

    def __init__(self, apps: Sequence[App]):
        ids = [a.app_id for a in apps]
        if len(set(ids)) != len(ids):
            raise CatalogError("duplicate app_id in catalog")
        self.apps: tuple[App, ...] = tuple(apps)
        self.index = {a.app_id: i for i, a in enumerate(self.apps)}
        for a in self.apps:
            if a.install_count < 0:
                raise CatalogError(f"negative install_count for {a.app_id}")
        # dense vendor ids follow sorted vendor names, independent of record order
        self.vendor_names: list[str] = sorted({a.vendor for a in self.apps})
        vendor_ix = {name: i for i, name in enumerate(self.vendor_names)}
        vendor_of = [vendor_ix[a.vendor] for a in self.apps]
        self.vendor_ix = vendor_ix
        self.vendor_of: tuple[int, ...] = tuple(vendor_of)
        self.vendor_apps: dict[int, list[int]] = {}
        for i, v in enumerate(vendor_of):
            self.vendor_apps.setdefault(v, []).append(i)
        self.related_ix: tuple[tuple[int, ...], ...] = tuple(
            tuple(self.index[r] for r in a.related) for a in self.apps
        )
        for i, rel in enumerate(self.related_ix):
            if i in rel:
                raise CatalogError(f"app {self.apps[i].app_id} lists itself as related")
        self.cumulative: list[int] = list(accumulate(a.install_count for a in self.apps))
        self.total_weight = self.cumulative[-1] if self.cumulative else 0
        if self.total_weight <= 0:
            raise CatalogError("catalog total install weight must be positive")
        self._alternatives = [self._compute_alternatives(i) for i in range(len(self.apps))]

    def __len__(self) -> int:
        return len(self.apps)

    @property
    def n_vendors(self) -> int:
        return len(self.vendor_names)

    def vendor_index(self) -> dict[str, list[str]]:
        """Vendor name -> app ids, in catalog order."""
        out: dict[str, list[str]] = {}
        for a in self.apps:
            out.setdefault(a.vendor, []).append(a.app_id)
        return out

    def sample_index(self, rng: random.Random) -> int:
        return bisect_right(self.cumulative, rng.random() * self.total_weight)

    def _compute_alternatives(self, i: int):
        a_rel = tuple(sorted({i, *self.related_ix[i]}))
        v_rel = tuple(sorted({self.vendor_of[j] for j in a_rel}))
        return a_rel, v_rel

    def alternatives_ix(self, i: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self._alternatives[i]

    def dump(self) -> list[str]:
        return [
            json.dumps(
                {
                    "app_id": a.app_id,
                    "vendor": a.vendor,
                    "install_count": a.install_count,
                    "related": list(a.related),
                },
                separators=(",", ":"),
            )
            for a in self.apps
        ]


def sample_app(catalog: AppCatalog, rng: random.Random) -> App:
    return catalog.apps[catalog.sample_index(rng)]


def alternatives(catalog: AppCatalog, app: App | str) -> tuple[set[str], set[str]]:
    """The app plus its related apps, and the vendors behind them."""
    app_id = app if isinstance(app, str) else app.app_id
    a_rel, v_rel = catalog.alternatives_ix(catalog.index[app_id])
    return (
        {catalog.apps[i].app_id for i in a_rel},
        {catalog.vendor_names[v] for v in v_rel},
    )


def ingest_catalog(lines: Iterable[str]) -> AppCatalog:
    records: list[tuple[int, dict]] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        try:
            app_id = str(rec["app_id"])
            vendor = str(rec["vendor"])
            count = int(rec["install_count"])
            related = [str(r) for r in rec.get("related", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise CatalogError(f"line {lineno}: bad catalog record ({exc})") from exc
        if app_id in seen:
            raise CatalogError(f"line {lineno}: duplicate app_id {app_id!r}")
        seen.add(app_id)
        records.append((lineno, {"app_id": app_id, "vendor": vendor, "count": count, "related": related}))

    pruned = 0
    apps = []
    for _, rec in records:
        related = []
        for r in rec["related"]:
            if r in seen and r != rec["app_id"] and r not in related:
                related.append(r)
            else:
                pruned += 1
        apps.append(App(rec["app_id"], rec["vendor"], rec["count"], tuple(related)))
    if pruned:
        warnings.warn(PrunedRelatedWarning(pruned), stacklevel=2)
    return AppCatalog(apps)


def read_catalog(path) -> AppCatalog:
    with open(path, encoding="utf-8") as fh:
        return ingest_catalog(fh)


def generate_synthetic_catalog(
    n_apps: int = 1000,
    zipf_exponent: float = 1.0,
    apps_per_vendor_mean: float = 1.3,
    related_size: int = 5,
    seed: int = 0,
    max_installs: int = 10_000_000,
) -> AppCatalog:
    """Zipf-popular apps with geometric vendor sizes and random related sets.

    App ``k`` (0-based) has rank ``k + 1`` and ``install_count =
    max(1, round(max_installs / rank**zipf_exponent))``. Related sets are
    clamped to ``n_apps - 1`` entries.
    """
    if n_apps < 1:
        raise ValueError("n_apps must be at least 1")
    if zipf_exponent < 0:
        raise ValueError("zipf_exponent must be non-negative")
    if related_size < 0:
        raise ValueError("related_size must be non-negative")
    if apps_per_vendor_mean < 1.0:
        raise ValueError("apps_per_vendor_mean must be at least 1")
    rng = np.random.default_rng(seed)

    ranks = np.arange(1, n_apps + 1, dtype=float)
    counts = np.maximum(1, np.rint(max_installs / ranks**zipf_exponent)).astype(np.int64)

    sizes = []
    remaining = n_apps
    while remaining > 0:
        s = int(rng.geometric(1.0 / apps_per_vendor_mean))
        s = min(s, remaining)
        sizes.append(s)
        remaining -= s
    vendor_slots = np.repeat(np.arange(len(sizes)), sizes)
    rng.shuffle(vendor_slots)

    k = min(related_size, n_apps - 1)
    width = len(str(n_apps - 1))
    vwidth = len(str(len(sizes) - 1))
    app_ids = [f"a{i:0{width}d}" for i in range(n_apps)]
    apps = []
    for i in range(n_apps):
        if k:
            picks = rng.choice(n_apps - 1, size=k, replace=False)
            picks = np.where(picks >= i, picks + 1, picks)
            related = tuple(app_ids[j] for j in sorted(picks.tolist()))
        else:
            related = ()
        apps.append(App(app_ids[i], f"v{vendor_slots[i]:0{vwidth}d}", int(counts[i]), related))
    return AppCatalog(apps)
