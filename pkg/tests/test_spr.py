import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mulrf.newick import parse_tree
from mulrf.oracle import enumerate_binary_supertrees, neighborhood_naive_check
from mulrf.rf import rf_multree_supertree
from mulrf.spr import (
    SprMove,
    SprSearcher,
    aleph_order,
    apply_spr,
    scan_cut_edge,
    spr_moves,
    spr_neighborhood,
    spr_search,
)
from mulrf.tree import Tree, TaxonTable, is_isomorphic, random_binary_tree, splits

from gen import random_multree, taxa


def distinct_neighbours(s):
    return sum(1 for _ in spr_neighborhood(s, distinct=True))


@pytest.mark.parametrize("n, expect", [(4, 2), (5, 12), (6, 30)])
def test_distinct_neighbour_counts(n, expect):
    rng = np.random.default_rng(n)
    for _ in range(3):
        assert distinct_neighbours(random_binary_tree(taxa(n), rng)) == expect


def test_neighbourhood_never_contains_the_tree_itself():
    rng = np.random.default_rng(0)
    s = random_binary_tree(taxa(7), rng)
    for mv, t in spr_neighborhood(s):
        assert t.is_binary and t.label_set == s.label_set
        assert not is_isomorphic(t, s)


def test_neighbourhood_needs_binary_tree():
    with pytest.raises(ValueError):
        list(spr_neighborhood(parse_tree("(a,b,c,(d,e,f));")))


def test_neighbours_of_a_quartet_are_the_other_two_quartets():
    s = parse_tree("((a,b),(c,d));")
    keys = set()
    tab = TaxonTable("abcd")
    for _, t in spr_neighborhood(s, distinct=True):
        keys.add(frozenset(splits(t, tab)))
    others = {frozenset(splits(t, tab)) for t in enumerate_binary_supertrees("abcd")} - {frozenset(splits(s, tab))}
    assert keys == others


def test_apply_spr_moves_a_leaf():
    s = parse_tree("((a,b),(c,d));")
    a, d = s.leaf_of("a"), s.leaf_of("d")
    mv = SprMove(tuple(sorted((a, s.adj[a][0]))), a, tuple(sorted((d, s.adj[d][0]))))
    t = apply_spr(s, mv)
    assert is_isomorphic(t, parse_tree("((b,c),(a,d));"))
    with pytest.raises(ValueError):
        apply_spr(s, SprMove((a, d), a, (a, d)))


def test_aleph_order_on_a_path():
    path = Tree([[2], [2], [0, 1]], ["a", "b", None])
    assert aleph_order(path, 0, distinct=True) == [(0, 2), (1, 2)]


def test_aleph_order_on_the_seven_edge_fragment():
    # leaves m1..m6, internal a, b, c, d; neighbour lists fix the visiting order
    names = ["m1", "m2", "m3", "m4", "m5", "m6", "a", "b", "c", "d"]
    v = {x: i for i, x in enumerate(names)}
    nbr = {
        "m1": ["a"], "m2": ["a"], "m3": ["c"], "m4": ["c"], "m5": ["d"], "m6": ["d"],
        "a": ["m1", "m2", "b"], "b": ["a", "c", "d"], "c": ["b", "m3", "m4"], "d": ["b", "m5", "m6"],
    }
    tree = Tree([[v[w] for w in nbr[x]] for x in names], names[:6] + [None] * 4)
    walk = ["m1", "a", "m2", "a", "b", "c", "m3", "c", "m4", "c", "b", "d", "m5", "d", "m6", "d", "b", "a", "m1"]
    expect = [tuple(sorted((v[p], v[q]))) for p, q in zip(walk, walk[1:])]
    assert aleph_order(tree, v["m1"]) == expect
    first = aleph_order(tree, v["m1"], distinct=True)
    assert first[:2] == [(v["m1"], v["a"]), (v["m2"], v["a"])]
    assert len(first) == len(tree.edges())


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_aleph_order_steps_between_adjacent_edges(n, seed):
    rng = np.random.default_rng(seed)
    t = random_binary_tree(taxa(n), rng)
    start = int(rng.integers(t.n_leaves))
    walk = aleph_order(t, start)
    for e, f in zip(walk, walk[1:]):
        assert e == f or set(e) & set(f)
    assert set(walk) == set(t.edges())
    assert set(aleph_order(t, start, distinct=True)) == set(t.edges())


def _naive_rows(s, t, cut, pruned):
    out = []
    for mv, rf in scan_cut_edge(s, t, cut, pruned):
        moved = apply_spr(s, mv) if mv.regraft_edge not in _identity_edges(s, mv) else s
        out.append((rf, rf_multree_supertree(t, moved)))
    return out


def _identity_edges(s, mv):
    x = mv.attach
    p, q = (w for w in s.adj[x] if w != mv.pruned)
    return {tuple(sorted((x, p))), tuple(sorted((x, q))), tuple(sorted((p, q)))}


def test_scan_covers_the_unmoved_tree():
    s = parse_tree("((a,b),(c,(d,e)));")
    t = parse_tree("((a,c),(b,(a,d)));")
    base = rf_multree_supertree(t, s)
    for u, v in s.edges():
        for y in (u, v):
            x = v if y == u else u
            if len(s.adj[x]) != 3:
                continue
            p, q = (w for w in s.adj[x] if w != y)
            rows = dict((mv.regraft_edge, rf) for mv, rf in scan_cut_edge(s, t, (u, v), y))
            assert rows[tuple(sorted((p, q)))] == base


def test_scan_is_constant_when_labels_sit_on_one_side():
    s = parse_tree("(((a,b),c),((d,e),(f,g)));")
    t = parse_tree("((a,b),(a,c),b);")  # only labels from {a, b, c}
    leaf = s.leaf_of("d")
    cut = (leaf, s.adj[leaf][0])
    rows = scan_cut_edge(s, t, cut, pruned=leaf)
    base = rf_multree_supertree(t, s)
    assert {rf for _, rf in rows} == {base}
    for rf, naive in _naive_rows(s, t, cut, leaf):
        assert rf == naive


def test_scan_rejects_non_edges():
    s = parse_tree("((a,b),(c,d));")
    with pytest.raises(ValueError):
        scan_cut_edge(s, s, (s.leaf_of("a"), s.leaf_of("b")))


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 12), st.integers(0, 2**32 - 1))
def test_scan_values_match_recomputation(n, seed):
    rng = np.random.default_rng(seed)
    s = random_binary_tree(taxa(n), rng)
    t = random_multree(rng, taxa(n))
    edges = s.edges()
    u, v = edges[int(rng.integers(len(edges)))]
    y = (u, v)[int(rng.integers(2))]
    x = v if y == u else u
    if len(s.adj[x]) != 3:
        y, x = x, y
    rows, steps = scan_cut_edge(s, t, (u, v), y, trace=True)
    assert len(rows) == len(set(e for e in s.edges() if x not in e and e in _host_edges(s, x, y))) + 1
    for rf, naive in _naive_rows(s, t, (u, v), y):
        assert rf == naive
    # every step of the walk (revisits included) carries the exact distance
    for st_ in steps:
        mv = SprMove(tuple(sorted((x, y))), y, st_.regraft_edge)
        moved = s if st_.regraft_edge in _identity_edges(s, mv) else apply_spr(s, mv)
        assert st_.rf == rf_multree_supertree(t, moved)
    for prev, cur in zip(steps, steps[1:]):
        delta = cur.rf - prev.rf
        assert delta % 2 == 0
        assert delta == 2 * cur.lost - 2 * cur.gained
        assert cur.gained <= 4 and cur.lost <= 4 and cur.changed <= 4


def _host_edges(s, x, y):
    side = set(range(s.n_vertices)) - s.side(x, y) - {x}
    return {e for e in s.edges() if e[0] in side and e[1] in side}


def test_search_from_a_quartet_profile():
    s = parse_tree("((a,b),(c,d));")
    t, score = spr_search([s], s)
    assert score == 2 and not is_isomorphic(t, s)


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 10), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_search_returns_the_first_best_neighbour(n, k, seed):
    rng = np.random.default_rng(seed)
    s = random_binary_tree(taxa(n), rng)
    p = [random_multree(rng, taxa(n)) for _ in range(k)]
    t, score = spr_search(p, s)
    naive = [(sum(rf_multree_supertree(g, nb) for g in p), mv) for mv, nb in
             ((mv, apply_spr(s, mv)) for mv in spr_moves(s))]
    best = min(sc for sc, _ in naive)
    assert score == best
    first = next(mv for sc, mv in naive if sc == best)
    assert is_isomorphic(t, apply_spr(s, first))
    assert sum(rf_multree_supertree(g, t) for g in p) == score


def test_naive_check_counts_every_move():
    rng = np.random.default_rng(3)
    s = random_binary_tree(taxa(6), rng)
    p = [random_multree(rng, taxa(6)) for _ in range(3)]
    report = neighborhood_naive_check(p, s)
    assert report.agree
    assert len(report.oracle) == len(spr_moves(s))
    tab = TaxonTable(taxa(6))
    tops = {frozenset(splits(apply_spr(s, SprMove(*k)), tab)) for k in report.oracle}
    assert len(tops - {frozenset(splits(s, tab))}) == distinct_neighbours(s) == 30


def test_profile_score_matches_recomputation():
    rng = np.random.default_rng(8)
    s = random_binary_tree(taxa(9), rng)
    p = [random_multree(rng, taxa(9)) for _ in range(4)]
    total, parts = SprSearcher(p).profile_score(s, per_tree=True)
    assert parts == [rf_multree_supertree(t, s) for t in p]
    assert total == sum(parts)
