import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mulrf.newick import parse_tree
from mulrf.tree import (
    TaxonTable,
    clusters,
    contract_edge,
    is_isomorphic,
    random_binary_tree,
    refine_vertex,
    restrict,
    root_at_taxon,
    splits,
    unroot,
)

from gen import taxa


def split_labels(tree):
    """Splits as sets of frozensets, independent of the taxon numbering."""
    tab = TaxonTable(sorted(tree.label_set))
    full = frozenset(tree.label_set)
    return {frozenset({tab.decode(m), full - tab.decode(m)}) for m in splits(tree, tab)}


def bip(a, b):
    return frozenset({frozenset(a), frozenset(b)})


def test_taxon_table_rejects_duplicates():
    with pytest.raises(ValueError):
        TaxonTable(["a", "b", "a"])
    tab = TaxonTable(["b", "a"])
    assert tab.index == {"b": 0, "a": 1}
    assert tab.decode(tab.mask(["a"])) == {"a"}


def test_restrict_to_all_leaves_is_identity():
    t = parse_tree("(a,b,(c,d));")
    assert is_isomorphic(restrict(t, "abcd"), t)


def test_restrict_to_three_leaves_gives_star():
    r = restrict(parse_tree("(a,b,(c,d));"), "abc")
    assert r.n_leaves == 3 and r.n_vertices == 4
    assert r.label_set == {"a", "b", "c"}


def test_restrict_drops_degree_two_vertices():
    r = restrict(parse_tree("((a,b),e,(c,d));"), {"a", "c", "e"})
    assert r.n_vertices == 4
    assert all(len(nb) in (1, 3) for nb in r.adj)


def test_restrict_empty_raises():
    with pytest.raises(ValueError, match="empty restriction"):
        restrict(parse_tree("(a,b,c);"), [])


def test_splits_examples():
    assert splits(parse_tree("(a,b,c);")) == set()
    assert split_labels(parse_tree("(a,b,(c,d));")) == {bip("ab", "cd")}
    assert split_labels(parse_tree("((a,b),e,(c,d));")) == {bip("ab", "cde"), bip("cd", "abe")}


def test_splits_need_singly_labelled_tree():
    with pytest.raises(ValueError):
        splits(parse_tree("((a,b),(a,c));"))


def test_clusters_exclude_root_and_leaves():
    rt = root_at_taxon(parse_tree("(a,b,c);"), "a")
    tab = TaxonTable(["a", "b", "c"])
    assert [tab.decode(m) for m in clusters(rt, tab).values()] == [frozenset("bc")]


def test_clusters_of_caterpillar_rooted_above_d():
    rt = root_at_taxon(parse_tree("(((a,b),c),d);"), "d")
    tab = TaxonTable(sorted("abcd"))
    got = {tab.decode(m) for m in clusters(rt, tab).values()}
    assert got == {frozenset("ab"), frozenset("abc")}


def test_binary_five_leaf_rooted_tree_has_three_clusters():
    rng = np.random.default_rng(5)
    t = random_binary_tree(taxa(5), rng)
    assert len(clusters(root_at_taxon(t, "t0"))) == 3


def test_root_at_taxon_subdivides_the_pendant_edge():
    t = parse_tree("(a,b,(c,d));")
    rt = root_at_taxon(t, "a")
    kids = rt.children[rt.root]
    assert len(kids) == 2
    leaf_a = t.leaf_of("a")
    assert leaf_a in kids
    other = next(k for k in kids if k != leaf_a)
    assert rt.leafsets()[other] == {"b", "c", "d"}


def test_root_at_taxon_errors():
    with pytest.raises(ValueError):
        root_at_taxon(parse_tree("(a,b,c);"), "z")
    with pytest.raises(ValueError):
        root_at_taxon(parse_tree("((a,b),(a,c));"), "a")


def test_contract_single_internal_edge_gives_star():
    t = parse_tree("(a,b,(c,d));")
    (u, v), = t.internal_edges()
    star = contract_edge(t, u, v)
    assert star.n_vertices == 5 and splits(star) == set()


def test_contract_pendant_edge_raises():
    t = parse_tree("(a,b,(c,d));")
    leaf = t.leaf_of("a")
    with pytest.raises(ValueError):
        contract_edge(t, leaf, t.adj[leaf][0])


def test_refine_star():
    star = parse_tree("(a,b,c,d);")
    centre = star.n_leaves
    r = refine_vertex(star, centre, [star.leaf_of("a"), star.leaf_of("b")])
    assert split_labels(r) == {bip("ab", "cd")}
    with pytest.raises(ValueError):
        refine_vertex(star, centre, [star.leaf_of("a")])


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 16), st.integers(0, 2**32 - 1))
def test_binary_tree_counts(n, seed):
    t = random_binary_tree(taxa(n), np.random.default_rng(seed))
    assert len(t.internal_vertices) == n - 2
    assert len(t.edges()) == 2 * n - 3
    assert len(splits(t)) == n - 3


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 14), st.integers(0, 2**32 - 1))
def test_restriction_restricts_splits(n, seed):
    rng = np.random.default_rng(seed)
    t = random_binary_tree(taxa(n), rng)
    keep = set(rng.choice(taxa(n), int(rng.integers(1, n + 1)), replace=False).tolist())
    expect = set()
    for s in split_labels(t):
        a, b = (side & keep for side in s)
        if len(a) >= 2 and len(b) >= 2:
            expect.add(frozenset({a, b}))
    assert split_labels(restrict(t, keep)) == expect
    assert is_isomorphic(restrict(t, t.label_set), t)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 14), st.integers(0, 2**32 - 1))
def test_root_then_unroot_is_identity(n, seed):
    rng = np.random.default_rng(seed)
    t = random_binary_tree(taxa(n), rng)
    r = str(rng.choice(taxa(n)))
    assert is_isomorphic(unroot(root_at_taxon(t, r)), t)


@settings(max_examples=100, deadline=None)
@given(st.integers(5, 14), st.integers(0, 2**32 - 1))
def test_contract_refine_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    t = random_binary_tree(taxa(n), rng)
    inner = t.internal_edges()
    u, v = inner[int(rng.integers(len(inner)))]
    before = split_labels(t)
    side_v = t.side(u, v)
    lost = frozenset({frozenset(t.labels[w] for w in side_v if w < t.n_leaves),
                      frozenset(t.labels[w] for w in range(t.n_leaves) if w not in side_v)})
    c = contract_edge(t, u, v)
    assert split_labels(c) == before - {lost}
    # the merged vertex is the only one of degree 4; refine it back
    m = next(w for w in c.internal_vertices if len(c.adj[w]) == 4)
    a, b = lost
    side = [w for w in c.adj[m] if _below(c, m, w) <= a]
    r = refine_vertex(c, m, side)
    assert len(split_labels(r)) == len(split_labels(c)) + 1
    assert is_isomorphic(r, t)


def _below(t, v, w):
    return {t.labels[x] for x in t.side(v, w) if x < t.n_leaves}
