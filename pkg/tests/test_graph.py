import itertools

import pytest

from bufmin.graph import (ConflictGraph, GraphError, PartiteSpec, build_named,
                          mu, parse_graph_arg)


def brute_independent_sets(g):
    out = []
    for r in range(g.n + 1):
        for comb in itertools.combinations(range(g.n), r):
            if all(not g.adjacent(u, v) for u, v in itertools.combinations(comb, 2)):
                out.append(frozenset(comb))
    return set(out)


def test_complete_graph():
    g = build_named("kn", 4)
    assert len(g.edges) == 6
    assert all(g.adjacent(u, v) for u in range(4) for v in range(4) if u != v)
    # clique: only the empty set and singletons are independent
    assert len(g.independent_sets()) == 5


def test_k3_plus_e_labeling():
    g = build_named("k3+e")
    assert g.edges == frozenset({(0, 1), (0, 2), (1, 2), (2, 3)})
    assert len(g.neighbors(2)) == 3
    assert len(g.neighbors(3)) == 1


def test_k4_minus_e_labeling():
    g = build_named("k4-e")
    assert g.adjacent(0, 1) and g.adjacent(1, 3) and g.adjacent(3, 2) and g.adjacent(2, 0)
    assert g.adjacent(1, 2)
    assert not g.adjacent(0, 3)
    assert len(g.neighbors(0)) == len(g.neighbors(3)) == 2
    assert len(g.neighbors(1)) == len(g.neighbors(2)) == 3


def test_independent_sets_c4():
    g = build_named("c4")
    sets = set(g.independent_sets())
    assert sets == brute_independent_sets(g)
    assert len(sets) == 7
    assert frozenset({0, 2}) in sets and frozenset({1, 3}) in sets


def test_independent_sets_k3pe():
    g = build_named("k3+e")
    sets = set(g.independent_sets())
    assert sets == brute_independent_sets(g)
    assert len(sets) == 7
    assert frozenset({0, 3}) in sets and frozenset({1, 3}) in sets


def test_independent_sets_subset_closed_and_edge_free():
    for g in (build_named("c4"), build_named("k3+e"), build_named("k4-e"),
              PartiteSpec((2, 2, 2)).build()):
        sets = set(g.independent_sets())
        for s in sets:
            for v in s:
                assert s - {v} in sets
            for u, v in g.edges:
                assert not (u in s and v in s)


def test_smooth_sets():
    kn = build_named("kn", 5)
    for r in range(1, 6):
        for comb in itertools.combinations(range(5), r):
            assert kn.is_smooth(comb)
    g = build_named("k3+e")
    assert g.neighbors_outside({0, 1}) == frozenset({2})
    assert g.is_smooth({0, 1})
    assert g.neighbors_outside({0, 2}) == frozenset({1, 3})
    assert not g.is_smooth({0, 2})
    # the full vertex set is vacuously smooth
    for gg in (kn, g, build_named("c4")):
        assert gg.is_smooth(range(gg.n))
        assert gg.neighbors_outside(range(gg.n)) == frozenset()


def test_mu():
    assert mu(PartiteSpec((1, 3))) == 1
    assert mu(PartiteSpec((2, 2))) == 0
    assert mu(PartiteSpec((1, 1, 1))) == 3


def test_partite_build():
    g = PartiteSpec((1, 2, 2)).build()
    assert g.n == 5
    classes = PartiteSpec((1, 2, 2)).classes()
    assert classes == ((0,), (1, 2), (3, 4))
    for a, b in itertools.combinations(range(3), 2):
        for u in classes[a]:
            for v in classes[b]:
                assert g.adjacent(u, v)
    for cls in classes:
        for u, v in itertools.combinations(cls, 2):
            assert not g.adjacent(u, v)


def test_rejects_bad_graphs():
    with pytest.raises(GraphError):
        build_named("kn", 0)
    with pytest.raises(GraphError):
        build_named("nosuchfamily")
    with pytest.raises(GraphError):
        # disconnected: two isolated edges
        ConflictGraph(4, frozenset({(0, 1), (2, 3)}))


def test_json_roundtrip():
    for g in (build_named("k3+e"), build_named("kn", 5), PartiteSpec((2, 3)).build()):
        assert ConflictGraph.loads(g.dumps()).edges == g.edges


def test_parse_graph_arg():
    assert parse_graph_arg("k4").n == 4 and len(parse_graph_arg("k4").edges) == 6
    assert parse_graph_arg("k3+e").edges == build_named("k3+e").edges
    assert parse_graph_arg("k1,3").n == 4
    assert parse_graph_arg("c4").edges == build_named("c4").edges
    assert parse_graph_arg("p4").edges == frozenset({(0, 1), (1, 2), (2, 3)})
