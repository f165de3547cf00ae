"""User decision models and the greedy vendor choice.

Three models are supported. FA always picks the vendor holding the largest
share of the user's files. EHB and EBL take the history-based path with a
scenario-dependent probability ``q`` and otherwise install the sampled app.

The per-vendor exposure probability of the greedy argument is a common
factor in every candidate's risk increment and so never enters the choice.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import AbstractSet, Mapping, Sequence

from .catalog import AppCatalog
from .ledger import AccessLedger


class ModelKind(str, Enum):
    FA = "FA"
    EHB = "EHB"
    EBL = "EBL"


class Scenario(str, Enum):
    SAME_VENDOR = "same_vendor"
    COLLAB_SINGLE = "collab_single"
    COLLAB_MULTI = "collab_multi"
    NO_HISTORY = "no_history"


class EventClass(str, Enum):
    NEW_VENDOR = "new_vendor"
    OWN_VENDOR = "own_vendor"
    COLLAB_VENDOR = "collab_vendor"


class Scope(str, Enum):
    INDIVIDUAL = "individual"
    TEAM = "team"


_DEFAULT_Q = {
    ModelKind.EHB: {
        Scenario.SAME_VENDOR: 0.57,
        Scenario.COLLAB_SINGLE: 0.70,
        Scenario.COLLAB_MULTI: 0.67,
        Scenario.NO_HISTORY: 0.0,
    },
    ModelKind.EBL: {
        Scenario.SAME_VENDOR: 0.18,
        Scenario.COLLAB_SINGLE: 0.0,
        Scenario.COLLAB_MULTI: 0.0,
        Scenario.NO_HISTORY: 0.0,
    },
    ModelKind.FA: {s: 1.0 for s in Scenario},
}


def default_q(kind: ModelKind | str, scenario: Scenario | str) -> float:
    return _DEFAULT_Q[ModelKind(kind)][Scenario(scenario)]


@dataclass(frozen=True)
class DecisionModel:
    kind: ModelKind
    q: Mapping[Scenario, float] = field(default_factory=dict)
    scope: Scope = Scope.INDIVIDUAL

    def __post_init__(self):
        table = dict(_DEFAULT_Q[ModelKind(self.kind)])
        table.update({Scenario(k): float(v) for k, v in self.q.items()})
        for s, p in table.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"q[{s.value}] = {p} outside [0, 1]")
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "scope", Scope(self.scope))
        object.__setattr__(self, "q", table)

    @property
    def name(self) -> str:
        return self.kind.value

    @classmethod
    def from_config(cls, cfg: Mapping | str, scope: Scope | str = Scope.INDIVIDUAL) -> "DecisionModel":
        """Accept ``"EHB"`` or ``{"model": "EHB", "q": {"same_vendor": 0.57, ...}}``."""
        if isinstance(cfg, str):
            return cls(ModelKind(cfg), scope=Scope(scope))
        return cls(ModelKind(cfg["model"]), cfg.get("q", {}), Scope(cfg.get("scope", scope)))

    def to_config(self) -> dict:
        return {
            "model": self.kind.value,
            "q": {s.value: self.q[s] for s in Scenario if s is not Scenario.NO_HISTORY},
            "scope": self.scope.value,
        }


@dataclass(frozen=True)
class DecisionOutcome:
    chosen_app: int
    chosen_vendor: int
    scenario: Scenario
    event_class: EventClass
    took_history_path: bool


def optimal_vendor(ledger: AccessLedger, u: int, candidates: AbstractSet[int] | Sequence[int]) -> int:
    """Vendor already holding the most files of ``u``; ties go to the smallest id."""
    if not candidates:
        raise ValueError("no candidate vendors")
    cov = ledger.coverage[u]
    best = None
    best_count = -1
    for v in sorted(candidates):
        c = cov.get(v, 0).bit_count()
        if c > best_count:
            best, best_count = v, c
    return best


def classify(vendor: int, own: AbstractSet[int], known_collab: AbstractSet[int]) -> EventClass:
    if vendor in own:
        return EventClass.OWN_VENDOR
    if vendor in known_collab:
        return EventClass.COLLAB_VENDOR
    return EventClass.NEW_VENDOR


def _app_for(vendor: int, a0: int, a_rel: Sequence[int], catalog: AppCatalog) -> int:
    # sampled app wins when its vendor is chosen; else lowest app index
    if catalog.vendor_of[a0] == vendor:
        return a0
    vendor_of = catalog.vendor_of
    for a in a_rel:
        if vendor_of[a] == vendor:
            return a
    raise ValueError(f"vendor {vendor} has no app among the alternatives")


def decide(
    model: DecisionModel,
    u: int,
    a0: int,
    a_rel: Sequence[int],
    v_rel: Sequence[int],
    ledger: AccessLedger,
    catalog: AppCatalog,
    rng: random.Random,
    known_collab: AbstractSet[int] | None = None,
) -> DecisionOutcome:
    """Pick the app ``u`` installs among ``a_rel``.

    ``known_collab`` is the set of vendors u knows to be authorized by
    others; it defaults to the ledger's collaborator vendors of u and is
    narrowed or widened by the caller for team scope. One uniform draw
    ``r`` decides the history path for the whole step.
    """
    own_set = ledger.self_vendors[u]
    if known_collab is None:
        known_collab = ledger.collab_vendors[u]
    own = [v for v in v_rel if v in own_set]
    collab = [v for v in v_rel if v not in own_set and v in known_collab]
    if own:
        scenario = Scenario.SAME_VENDOR
    elif len(collab) == 1:
        scenario = Scenario.COLLAB_SINGLE
    elif collab:
        scenario = Scenario.COLLAB_MULTI
    else:
        scenario = Scenario.NO_HISTORY

    r = rng.random()
    v0 = catalog.vendor_of[a0]

    if model.kind is ModelKind.FA:
        chosen = optimal_vendor(ledger, u, v_rel)
        history = chosen != v0
    elif scenario is Scenario.SAME_VENDOR:
        history = r < model.q[scenario]
        chosen = own[rng.randrange(len(own))] if history else v0
    elif scenario is not Scenario.NO_HISTORY:
        history = r < model.q[scenario]
        chosen = optimal_vendor(ledger, u, collab) if history else v0
    else:
        history = False
        chosen = v0

    app = a0 if chosen == v0 else _app_for(chosen, a0, a_rel, catalog)
    return DecisionOutcome(
        chosen_app=app,
        chosen_vendor=chosen,
        scenario=scenario,
        event_class=classify(chosen, own_set, known_collab),
        took_history_path=history,
    )
