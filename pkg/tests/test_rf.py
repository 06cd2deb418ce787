import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mulrf.lca import LcaIndex
from mulrf.newick import parse_tree
from mulrf.oracle import rf_differentiation_exhaustive
from mulrf.rf import (
    differentiate,
    extend_supertree,
    lca_mapping,
    rf_multree_supertree,
    rf_profile,
    rf_rooted,
    rf_unrooted,
    vertex_function,
)
from mulrf.tree import is_isomorphic, random_binary_tree, root_at_taxon, unroot

from gen import random_multree, random_multree_capped, taxa


def test_rf_unrooted_examples():
    t = parse_tree("(a,b,(c,d));")
    assert rf_unrooted(t, t) == 0
    assert rf_unrooted(t, parse_tree("(a,c,(b,d));")) == 2


def test_rf_unrooted_restricts_the_second_tree():
    small = parse_tree("(a,b,(c,d));")
    big = parse_tree("((a,b),e,(c,d));")
    assert rf_unrooted(small, big) == 0
    with pytest.raises(ValueError):
        rf_unrooted(big, small)


def test_extend_supertree():
    s = parse_tree("(a,b,c);")
    assert extend_supertree(s, parse_tree("(a,b,c);")).n_vertices == s.n_vertices
    ext = extend_supertree(s, parse_tree("((a,b),(a,c));"))
    assert ext.multiplicity() == {"a": 2, "b": 1, "c": 1}
    # both copies of a hang from one new internal vertex
    (va, vb) = [v for v in ext.leaves if ext.labels[v] == "a"]
    assert ext.adj[va] == ext.adj[vb]
    with pytest.raises(ValueError):
        extend_supertree(s, parse_tree("(a,b,z);"))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_extension_leaf_count(seed):
    rng = np.random.default_rng(seed)
    s = random_binary_tree(taxa(8), rng)
    t = random_multree(rng, taxa(8))
    mult = t.multiplicity()
    ext = extend_supertree(s, t)
    assert ext.n_leaves == sum(max(mult.get(a, 0), 1) for a in s.label_set)


def test_differentiate_example():
    t = parse_tree("((a,b),(a,c));")
    ext = extend_supertree(parse_tree("(a,b,c);"), t)
    dt, ds = differentiate(t, ext)
    assert dt.label_set == ds.label_set == {"a#1", "a#2", "b", "c"}
    assert rf_unrooted(dt, ds) == 2


def test_differentiate_leaves_singly_labelled_trees_alone():
    t = parse_tree("(a,b,(c,d));")
    s = parse_tree("(a,c,(b,d));")
    dt, ds = differentiate(t, s)
    assert dt.labels == t.labels and ds.labels == s.labels


def test_differentiate_rejects_multiplicity_mismatch():
    with pytest.raises(ValueError):
        differentiate(parse_tree("((a,b),(a,c));"), parse_tree("((a,a),(a,b),c);"))


def test_rf_multree_supertree_examples():
    assert rf_multree_supertree(parse_tree("((a,b),(a,c));"), parse_tree("(a,b,c);")) == 2
    s = parse_tree("((a,b),e,(c,d));")
    assert rf_multree_supertree(s, s) == 0
    with pytest.raises(ValueError):
        rf_multree_supertree(parse_tree("(a,b,(c,z));"), s)


def test_rf_profile_is_additive():
    s = parse_tree("((a,b),e,(c,d));")
    p = [parse_tree("((a,b),(a,c));"), parse_tree("(a,c,(b,d));"), s]
    total, parts = rf_profile(p, s, per_tree=True)
    assert parts == [rf_multree_supertree(t, s) for t in p]
    assert total == sum(parts)
    assert rf_profile([s, s, s], s) == 0


def test_lca_index_basics():
    rt = root_at_taxon(parse_tree("((a,b),e,(c,d));"), "e")
    idx = LcaIndex(rt)
    for u in range(rt.n_vertices):
        assert idx.lca(u, u) == u
        for v in range(rt.n_vertices):
            w = idx.lca(u, v)
            assert w == idx.lca(v, u)
            d = rt.depths()
            assert d[w] <= min(d[u], d[v])


def test_lca_mapping_sends_foreign_subtrees_to_null():
    sub = root_at_taxon(parse_tree("((a,x),(b,(c,d)));"), "d")
    ref = root_at_taxon(parse_tree("((b,c),d);"), "d")
    image = lca_mapping(sub, ref)
    x = sub.labels.index("x")
    assert image[x] is None
    a_parent = sub.parent[sub.labels.index("a")]
    assert image[a_parent] is None


@settings(max_examples=80, deadline=None)
@given(st.integers(4, 12), st.integers(0, 2**32 - 1))
def test_lca_mapping_matches_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    s = random_binary_tree(taxa(n), rng)
    keep = set(rng.choice(taxa(n), int(rng.integers(3, n + 1)), replace=False).tolist()) | {"t0"}
    t = random_binary_tree(sorted(keep), rng)
    sub, ref = root_at_taxon(s, "t0"), root_at_taxon(t, "t0")
    image = lca_mapping(sub, ref)
    ref_sets = ref.leafsets()
    depth = ref.depths()
    for v, cl in enumerate(sub.leafsets()):
        restricted = cl & keep
        if not restricted:
            assert image[v] is None
            continue
        holders = [u for u in range(ref.n_vertices) if restricted <= ref_sets[u]]
        assert image[v] == max(holders, key=lambda u: depth[u])


@settings(max_examples=80, deadline=None)
@given(st.integers(4, 12), st.integers(0, 2**32 - 1))
def test_vertex_function_is_at_most_one_on_equal_leaf_sets(n, seed):
    rng = np.random.default_rng(seed)
    a = random_binary_tree(taxa(n), rng)
    b = random_binary_tree(taxa(n), rng)
    sub, ref = root_at_taxon(a, "t0"), root_at_taxon(b, "t0")
    vf = vertex_function(sub, ref, lca_mapping(sub, ref))
    assert max(vf.f.values()) <= 1
    assert vf.fzero_count == sum(1 for c in vf.f.values() if c == 0)


def test_rf_rooted_on_identical_trees_is_zero():
    t = parse_tree("((a,b),e,(c,d));")
    for r in "abcde":
        assert rf_rooted(root_at_taxon(t, r), root_at_taxon(t, r)) == 0


def test_rf_rooted_star_reference():
    star = parse_tree("(a,b,c,d);")
    binary = parse_tree("((a,b),(c,d));")
    assert rf_rooted(root_at_taxon(star, "a"), root_at_taxon(binary, "a")) == 1
    assert rf_unrooted(star, binary) == 1


def test_rf_rooted_needs_a_shared_root():
    t = parse_tree("((a,b),e,(c,d));")
    with pytest.raises(ValueError):
        rf_rooted(root_at_taxon(t, "a"), root_at_taxon(t, "b"))


@settings(max_examples=100, deadline=None)
@given(st.integers(4, 12), st.integers(0, 2**32 - 1))
def test_rooted_and_split_distances_agree_for_every_root(n, seed):
    rng = np.random.default_rng(seed)
    s = random_binary_tree(taxa(n), rng)
    keep = sorted(rng.choice(taxa(n), int(rng.integers(4, n + 1)), replace=False).tolist())
    t = random_binary_tree(keep, rng)
    expect = rf_unrooted(t, s)
    for r in keep:
        assert rf_rooted(root_at_taxon(t, r), root_at_taxon(s, r)) == expect


@settings(max_examples=100, deadline=None)
@given(st.integers(4, 8), st.integers(0, 2**32 - 1))
def test_differentiation_choice_is_immaterial(n, seed):
    rng = np.random.default_rng(seed)
    s = random_binary_tree(taxa(n), rng)
    t = random_multree_capped(rng, taxa(n))
    low, values = rf_differentiation_exhaustive(t, s)
    assert values == {low}
    assert rf_multree_supertree(t, s) == low


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 8), st.integers(0, 2**32 - 1))
def test_extend_then_restrict_equals_restrict_then_extend(n, seed):
    rng = np.random.default_rng(seed)
    s = random_binary_tree(taxa(n), rng)
    t = random_multree_capped(rng, taxa(n))
    if t.n_leaves < 4:
        return
    ext = extend_supertree(s, t)
    dt, ds = differentiate(t, ext)
    assert rf_unrooted(dt, ds) == rf_multree_supertree(t, s)


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 10), st.integers(0, 2**32 - 1))
def test_rf_is_a_metric_on_binary_trees(n, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_binary_tree(taxa(n), rng) for _ in range(3))
    assert rf_unrooted(a, b) == rf_unrooted(b, a) >= 0
    assert (rf_unrooted(a, b) == 0) == is_isomorphic(a, b)
    assert rf_unrooted(a, a) == 0
    assert rf_unrooted(a, c) <= rf_unrooted(a, b) + rf_unrooted(b, c)
    assert rf_unrooted(a, unroot(root_at_taxon(a, "t1"))) == 0
