"""Small hand-computed cases, one per documented behavior."""

import json
import random
import warnings

import numpy as np
import pytest

from oracles import bfs_components
from vfcsim.catalog import App, AppCatalog, alternatives, generate_synthetic_catalog, ingest_catalog
from vfcsim.decisions import DecisionModel, EventClass, decide, optimal_vendor
from vfcsim.graph import (
    CollaborationGraph,
    degree_sequence,
    detect_teams,
    generate_configuration_model,
    ingest_edge_list,
)
from vfcsim.ledger import AccessLedger, mask_of
from vfcsim.sharing import SharingProfile, allocate_shared, build_empirical_tables, populate, shared_fraction
from vfcsim.dataset import records_from_dicts


# graph

def test_config_model_trivial_sequences():
    g = generate_configuration_model([0, 0, 0], 1)
    assert g.n_users == 3 and g.n_edges == 0
    for seed in range(10):
        assert list(generate_configuration_model([1, 1], seed).edges()) == [(0, 1)]
        g = generate_configuration_model([2, 2], seed)
        assert list(g.edges()) in ([], [(0, 1)])


def test_edge_list_small_cases():
    with pytest.warns(Warning):
        g = ingest_edge_list(["a b", "b a", "a a"])
    assert g.n_users == 2 and g.n_edges == 1
    tri = ingest_edge_list(["a b", "b c", "c a"])
    assert degree_sequence(tri) == [2, 2, 2]
    assert detect_teams(tri).n_teams == 1
    two = CollaborationGraph.from_edges(4, [(0, 1), (2, 3)])
    assert [len(m) for m in detect_teams(two).members()] == [2, 2]
    assert degree_sequence(CollaborationGraph.from_edges(0, [])) == []


def test_fifty_node_edge_file_matches_reference():
    rng = random.Random(50)
    pairs = [(f"n{rng.randrange(50)}", f"n{rng.randrange(50)}") for _ in range(120)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = ingest_edge_list(f"{a} {b}" for a, b in pairs)
    ref: dict[str, set] = {}
    for a, b in pairs:
        ref.setdefault(a, set())
        ref.setdefault(b, set())
        if a != b:
            ref[a].add(b)
            ref[b].add(a)
    for u in range(g.n_users):
        assert {g.label(v) for v in g.adjacency[u]} == ref[g.label(u)]
    assert degree_sequence(g) == [len(ref[g.label(u)]) for u in range(g.n_users)]


def test_two_hundred_node_teams_match_bfs():
    g = generate_configuration_model([random.Random(i).choice([0, 1, 1, 2, 3]) for i in range(200)], 4)
    comps = bfs_components(200, g.edges())
    teams = detect_teams(g)
    assert sorted(map(sorted, comps)) == sorted(map(sorted, teams.members()))


# sharing

def test_single_user_table():
    rows = [{"user_id": "a", "vendors": ["p", "q"], "files": [
        {"file_id": str(i), "collaborators": ["x", "y", "z"] if i < 2 else []}
        for i in range(10)
    ]}]
    t = build_empirical_tables(records_from_dicts(rows))
    assert dict(t.buckets) == {3: ((10, 0.2, 2),)}


def test_allocation_and_fraction_examples():
    out = allocate_shared(10, 0.3, [4, 9], np.random.default_rng(0))
    assert set().union(*out.values()) == {0, 1, 2}
    assert shared_fraction(SharingProfile(10)) == 0.0
    assert shared_fraction(SharingProfile(10, {1: frozenset({0, 1}), 2: frozenset({1, 2})})) == 0.3
    assert shared_fraction(SharingProfile(4, {1: frozenset(range(4))})) == 1.0


def test_isolated_user_population():
    from vfcsim.sharing import EmpiricalTables

    g = CollaborationGraph.from_edges(1, [])
    (p,) = populate(g, EmpiricalTables({0: ((5, 0.5, 1),)}), 0)
    assert p.shared_with == {} and shared_fraction(p) == 0.0


# catalog

def test_catalog_examples():
    cat = ingest_catalog([
        json.dumps({"app_id": "a", "vendor": "v", "install_count": 3}),
        json.dumps({"app_id": "b", "vendor": "v", "install_count": 1, "related": ["a"]}),
    ])
    assert cat.total_weight == 4
    rng = random.Random(2)
    hits = sum(cat.apps[cat.sample_index(rng)].app_id == "a" for _ in range(100_000))
    assert abs(hits / 100_000 - 0.75) < 0.02
    assert alternatives(cat, "a") == ({"a"}, {"v"})
    assert alternatives(cat, "b") == ({"a", "b"}, {"v"})
    one = generate_synthetic_catalog(1, seed=0)
    assert len(one) == 1 and one.apps[0].related == ()


def test_vendor_index_group_by():
    rng = random.Random(20)
    apps = [App(f"x{i}", f"w{rng.randrange(6)}", rng.randint(1, 9)) for i in range(20)]
    cat = AppCatalog(apps)
    ref: dict[str, list] = {}
    for a in apps:
        ref.setdefault(a.vendor, []).append(a.app_id)
    assert cat.vendor_index() == ref


def test_alternatives_hand_enumeration():
    cat = AppCatalog([
        App("a0", "A", 1, ("a1", "a2", "a3", "a4", "a5")),
        App("a1", "A", 1), App("a2", "B", 1), App("a3", "B", 1), App("a4", "C", 1), App("a5", "D", 1),
    ])
    assert alternatives(cat, "a0")[1] == {"A", "B", "C", "D"}


# ledger

def bound(n_files, edges, shares):
    g = CollaborationGraph.from_edges(len(n_files), edges)
    return AccessLedger.for_network(
        g, [SharingProfile(n, {c: frozenset(s) for c, s in shares.get(u, {}).items()}) for u, n in enumerate(n_files)]
    )


def test_ledger_examples():
    led = bound([10], [], {})
    assert led.authorize(0, 1) == (0,)
    assert led.vendor_coverage_percent(0, 1) == 1.0
    led = bound([3, 5], [(0, 1)], {1: {0: {1, 2}}})
    led.authorize(0, 4)
    assert led.coverage[1][4] == mask_of({1, 2})
    assert led.vendor_coverage_percent(1, 4) == 0.4
    snapshot = dict(led.coverage[0]), set(led.self_vendors[0])
    led.authorize(0, 4)
    assert (dict(led.coverage[0]), set(led.self_vendors[0])) == snapshot


def test_vfc_example():
    led = AccessLedger([10])
    led.grant_collab(0, 1, mask_of(range(7)))
    led.grant_collab(0, 2, mask_of(range(5, 10)))
    assert led.vfc(0, {1, 2}) == 1.2
    assert led.vfc(0, set()) == 0.0
    assert led.vendor_coverage_percent(0, 9) == 0.0


def test_collab_examples():
    led = bound([10, 1], [(0, 1)], {0: {1: {0, 1, 2}}})
    assert led.collaborators_vfc(0) == 0.0
    led.authorize(1, 3)
    assert led.collaborators_vfc(0) == 0.3
    led = bound([10, 1, 1], [(0, 1), (0, 2)], {0: {1: {0, 1, 2}, 2: {2, 3}}})
    led.authorize(1, 3)
    led.authorize(2, 3)
    assert led.vendor_coverage_percent(0, 3) == 0.4


# decisions

def test_optimal_vendor_examples():
    led = AccessLedger([10])
    led.grant_collab(0, 0, mask_of(range(7)))
    led.grant_collab(0, 1, mask_of(range(3)))
    assert optimal_vendor(led, 0, {0, 1, 2}) == 0
    assert optimal_vendor(AccessLedger([10]), 0, {4, 2, 7}) == 2


def trio():
    cat = AppCatalog([App("a0", "A", 1, ("a1", "a2")), App("a1", "B", 1), App("a2", "C", 1)])
    led = bound([10, 10], [(0, 1)], {0: {1: set(range(7))}})
    return cat, led


def test_fa_own_vendor_costs_nothing():
    cat, led = trio()
    led.authorize(0, cat.vendor_ix["B"])
    before = led.aggregate_count(0)
    a_rel, v_rel = cat.alternatives_ix(0)
    out = decide(DecisionModel("FA"), 0, 0, a_rel, v_rel, led, cat, random.Random(0))
    assert out.chosen_app == 1 and out.event_class is EventClass.OWN_VENDOR
    led.authorize(0, out.chosen_vendor, out.chosen_app)
    assert led.aggregate_count(0) == before


def test_ebl_unseen_installs_a0():
    cat, led = trio()
    a_rel, v_rel = cat.alternatives_ix(0)
    out = decide(DecisionModel("EBL"), 0, 0, a_rel, v_rel, led, cat, random.Random(0))
    assert out.chosen_app == 0 and out.event_class is EventClass.NEW_VENDOR


class FixedDraw(random.Random):
    def __init__(self, r):
        super().__init__(0)
        self.r = r

    def random(self):
        return self.r


def test_ehb_collab_trace_with_fixed_draw():
    cat, led = trio()
    led.authorize(1, cat.vendor_ix["B"])
    assert led.collaborators_vfc(0) == 0.7
    a_rel, v_rel = cat.alternatives_ix(0)
    out = decide(DecisionModel("EHB"), 0, 0, a_rel, v_rel, led, cat, FixedDraw(0.5))
    assert out.chosen_app == 1 and out.event_class is EventClass.COLLAB_VENDOR
    out = decide(DecisionModel("EHB"), 0, 0, a_rel, v_rel, led, cat, FixedDraw(0.75))
    assert out.chosen_app == 0 and out.event_class is EventClass.NEW_VENDOR
