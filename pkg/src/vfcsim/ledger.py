"""Vendor file coverage bookkeeping and the VFC family of metrics.

Coverage of user ``u`` by vendor ``v`` is stored as an ``int`` bitset over
u's file indices. A user's metrics are sums of per-vendor popcounts divided
by the user's file count, so every metric has an exact integer numerator.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .graph import CollaborationGraph
from .sharing import SharingProfile

SELF = "self"
COLLAB = "collab"


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


class AccessLedger:
    """Per-(user, vendor) file coverage with authorization provenance.

    A vendor appears in at most one of ``self_vendors[u]`` and
    ``collab_vendors[u]``; self-authorization moves it out of the
    collaborator set. Coverage only ever grows.
    """

    def __init__(self, n_files: Sequence[int]):
        if any(n < 1 for n in n_files):
            raise ValueError("every user needs at least one file")
        self.n_files: list[int] = list(n_files)
        self.full: list[int] = [(1 << n) - 1 for n in self.n_files]
        n = len(self.n_files)
        self.coverage: list[dict[int, int]] = [{} for _ in range(n)]
        self.self_vendors: list[set[int]] = [set() for _ in range(n)]
        self.collab_vendors: list[set[int]] = [set() for _ in range(n)]
        self.installed_apps: list[set[int]] = [set() for _ in range(n)]
        # running sum of popcounts over all vendors in coverage[u]
        self.covered_total: list[int] = [0] * n
        self._adjacency: tuple[tuple[int, ...], ...] | None = None
        self._share: list[dict[int, int]] | None = None

    @classmethod
    def for_network(
        cls, graph: CollaborationGraph, profiles: Sequence[SharingProfile]
    ) -> "AccessLedger":
        """Ledger bound to a graph so that :meth:`authorize` can propagate."""
        if len(profiles) != graph.n_users:
            raise ValueError("profile count does not match graph size")
        ledger = cls([p.n_files for p in profiles])
        ledger._adjacency = graph.adjacency
        share = []
        for u, p in enumerate(profiles):
            nbrs = set(graph.adjacency[u])
            row = {}
            for c, files in p.shared_with.items():
                if c not in nbrs:
                    raise ValueError(f"user {u} shares files with non-collaborator {c}")
                if files and max(files) >= p.n_files:
                    raise ValueError(f"user {u} shares an out-of-range file index")
                row[c] = mask_of(files)
            share.append(row)
        ledger._share = share
        return ledger

    @property
    def n_users(self) -> int:
        return len(self.n_files)

    # mutation

    def grant_self(self, u: int, v: int) -> int:
        """Give ``v`` full access to u's files; returns newly covered file count."""
        cov = self.coverage[u]
        old = cov.get(v, 0)
        full = self.full[u]
        self.self_vendors[u].add(v)
        self.collab_vendors[u].discard(v)
        if old == full:
            return 0
        cov[v] = full
        gained = self.n_files[u] - old.bit_count()
        self.covered_total[u] += gained
        return gained

    def grant_collab(self, u: int, v: int, mask: int) -> int:
        """Record that a collaborator exposed the files in ``mask`` of u to ``v``."""
        if v in self.self_vendors[u]:
            return 0
        self.collab_vendors[u].add(v)
        if not mask:
            return 0
        cov = self.coverage[u]
        old = cov.get(v, 0)
        new = old | mask
        if new == old:
            return 0
        cov[v] = new
        gained = new.bit_count() - old.bit_count()
        self.covered_total[u] += gained
        return gained

    def authorize(self, u: int, vendor: int, app: int | None = None) -> tuple[int, ...]:
        """User ``u`` installs a full-access app of ``vendor``.

        Returns the users whose metrics may have changed: ``u`` followed by
        its collaborators.
        """
        if self._adjacency is None or self._share is None:
            raise RuntimeError("ledger is not bound to a network; use for_network()")
        if not 0 <= u < self.n_users:
            raise IndexError(f"unknown user {u}")
        if app is not None:
            self.installed_apps[u].add(app)
        self.grant_self(u, vendor)
        nbrs = self._adjacency[u]
        share = self._share
        self_vendors = self.self_vendors
        for c in nbrs:
            if vendor in self_vendors[c]:
                continue
            self.grant_collab(c, vendor, share[c].get(u, 0))
        return (u, *nbrs)

    def share_mask(self, owner: int, collaborator: int) -> int:
        """Bitset of owner's files readable by ``collaborator``."""
        if self._share is None:
            raise RuntimeError("ledger is not bound to a network")
        return self._share[owner].get(collaborator, 0)

    # metrics

    def covered_count(self, u: int, vendors: Iterable[int]) -> int:
        cov = self.coverage[u]
        return sum(cov.get(v, 0).bit_count() for v in set(vendors))

    def vendor_count(self, u: int, v: int) -> int:
        return self.coverage[u].get(v, 0).bit_count()

    def self_count(self, u: int) -> int:
        return self.covered_count(u, self.self_vendors[u])

    def collaborators_count(self, u: int) -> int:
        return self.covered_count(u, self.collab_vendors[u] - self.self_vendors[u])

    def aggregate_count(self, u: int) -> int:
        return self.covered_count(u, self.self_vendors[u] | self.collab_vendors[u])

    def vfc(self, u: int, vendors: Iterable[int]) -> float:
        return self.covered_count(u, vendors) / self.n_files[u]

    def self_vfc(self, u: int) -> float:
        return self.self_count(u) / self.n_files[u]

    def collaborators_vfc(self, u: int) -> float:
        return self.collaborators_count(u) / self.n_files[u]

    def aggregate_vfc(self, u: int) -> float:
        return self.aggregate_count(u) / self.n_files[u]

    def vendor_coverage_percent(self, u: int, v: int) -> float:
        return self.vendor_count(u, v) / self.n_files[u]

    def exact(self, u: int, count: int) -> Fraction:
        return Fraction(count, self.n_files[u])

    def snapshot(self, u: int) -> dict:
        vendors = {}
        for v in sorted(self.coverage[u]):
            files = self.coverage[u][v].bit_count()
            vendors[str(v)] = {
                "files": files,
                "fraction": files / self.n_files[u],
                "provenance": SELF if v in self.self_vendors[u] else COLLAB,
            }
        return {"user": u, "vendors": vendors}


# free-function surface over the ledger


def vfc(ledger: AccessLedger, u: int, vendors: Iterable[int]) -> float:
    return ledger.vfc(u, vendors)


def self_vfc(ledger: AccessLedger, u: int) -> float:
    return ledger.self_vfc(u)


def collaborators_vfc(ledger: AccessLedger, u: int) -> float:
    return ledger.collaborators_vfc(u)


def aggregate_vfc(ledger: AccessLedger, u: int) -> float:
    return ledger.aggregate_vfc(u)


def vendor_coverage_percent(ledger: AccessLedger, u: int, v: int) -> float:
    return ledger.vendor_coverage_percent(u, v)
