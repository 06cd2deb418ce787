import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mulrf.newick import NewickError, parse_newick, parse_tree, read_newick, write_newick, write_trees
from mulrf.tree import is_isomorphic, random_binary_tree

from gen import random_multree, taxa


def test_quartet_has_one_split():
    t = parse_tree("((a,b),(c,d));")
    assert t.n_leaves == 4 and len(t.internal_edges()) == 1
    # the artificial root is suppressed
    assert t.n_vertices == 6


def test_duplicate_labels_make_a_multree():
    t = parse_tree("((a,b),(a,c));")
    assert t.multiplicity() == {"a": 2, "b": 1, "c": 1}
    assert not t.is_singly_labeled


def test_branch_lengths_and_internal_labels_are_discarded():
    plain = parse_tree("((a,b),(c,d));")
    decorated = parse_tree("((a:0.1,b:2e-3)95:0.2,(c,d)x:1);")
    assert is_isomorphic(plain, decorated)


def test_whitespace_and_multiple_trees():
    doc = parse_newick("(a,b,(c,d));\n\n  ( a , b ,\n (c , e) ) ;\n")
    assert len(doc) == 2
    assert doc.source_lines == [1, 3]
    assert doc[1].label_set == {"a", "b", "c", "e"}


def test_multifurcations_are_kept():
    t = parse_tree("(a,b,c,d,e);")
    assert t.n_vertices == 6 and len(t.adj[5]) == 5


def test_quoted_labels_round_trip():
    t = parse_tree("('x y',b,('it''s',d_e));")
    assert t.label_set == {"x y", "b", "it's", "d_e"}
    assert parse_tree(write_newick(t)).label_set == t.label_set


@pytest.mark.parametrize("text, where", [
    ("((a,b),(c,d);", (1, 13)),
    ("((a,b),(c,d)))", None),
    ("((a,),(c,d));", None),
    ("((a,b),(c,d))", None),
    ("(a,b)\n(c,d);", (2, 1)),
])
def test_parse_errors_carry_position(text, where):
    with pytest.raises(NewickError) as info:
        parse_newick(text)
    assert info.value.line >= 1 and info.value.column >= 1
    if where is not None:
        assert (info.value.line, info.value.column) == where


def test_writer_small_cases():
    assert write_newick(parse_tree("a;")) == "a;"
    assert write_newick(parse_tree("(c,a,b);")) == "(a,b,c);"
    assert write_newick(parse_tree("((d,c),(b,a));")) == "(a,b,(c,d));"


def test_writer_is_deterministic_across_vertex_orders():
    a = parse_tree("((a,b),(c,(d,e)));")
    b = parse_tree("(((e,d),c),(b,a));")
    assert write_newick(a) == write_newick(b)


def test_files(tmp_path):
    trees = [parse_tree("(a,b,(c,d));"), parse_tree("((a,a),b,c);")]
    path = tmp_path / "p.nwk"
    write_trees(trees, path)
    back = read_newick(path)
    assert [write_newick(t) for t in back] == [write_newick(t) for t in trees]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_round_trip_preserves_splits(n, seed):
    t = random_binary_tree(taxa(n), np.random.default_rng(seed))
    assert is_isomorphic(parse_tree(write_newick(t)), t)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_preserves_label_multiset(seed):
    rng = np.random.default_rng(seed)
    t = random_multree(rng, taxa(8))
    back = parse_tree(write_newick(t))
    assert back.multiplicity() == t.multiplicity()
    assert write_newick(back) == write_newick(t)
