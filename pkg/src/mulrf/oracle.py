"""
Brute-force reference implementations, used to check the fast paths.

Everything here is exponential or quadratic-per-move on purpose and is
only meant for small instances.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .rf import _differentiate_one, copy_label, extend_supertree, rf_multree_supertree, rf_unrooted
from .spr import SprSearcher, _move_of, _profile_taxa, apply_spr
from .tree import Tree, restrict


@dataclass
class OracleReport:
    """Outcome of comparing an engine against an oracle on one instance."""

    description: str
    oracle: dict = field(default_factory=dict)
    engine: dict = field(default_factory=dict)
    agree: bool = True

    @property
    def mismatches(self) -> list:
        return [key for key in self.oracle if self.oracle[key] != self.engine.get(key)]


# -- distances ----------------------------------------------------------------


def rf_differentiation_exhaustive(t: Tree, s: Tree, max_multiplicity: int = 3,
                                  max_copies: int = 10) -> tuple[int, set]:
    """
    RF distance between every full differentiation of ``t`` and one fixed
    full differentiation of the other tree.

    If ``s`` is singly labelled it is first restricted to the labels of
    ``t`` and extended; otherwise ``s`` must carry the same label multiset
    as ``t``.  Returns the minimum and the set of all values seen.
    """
    mt = t.multiplicity()
    if s.is_singly_labeled:
        if not t.label_set <= s.label_set:
            raise ValueError("labels of t must occur in s")
        other = extend_supertree(restrict(s, t.label_set), t)
    else:
        if s.multiplicity() != mt:
            raise ValueError("mul-trees must carry the same label multiset")
        other = s
    dup = sorted((a for a, k in mt.items() if k > 1), key=str)
    if any(mt[a] > max_multiplicity for a in dup):
        raise ValueError(f"a label occurs more than {max_multiplicity} times")
    if sum(mt[a] for a in dup) > max_copies:
        raise ValueError(f"more than {max_copies} duplicated leaves")
    fixed = _differentiate_one(other, set(dup))
    leaves_of = {a: [v for v in t.leaves if t.labels[v] == a] for a in dup}
    values = set()
    for perms in itertools.product(*(itertools.permutations(range(1, mt[a] + 1)) for a in dup)):
        labels = list(t.labels)
        for a, perm in zip(dup, perms):
            for v, i in zip(leaves_of[a], perm):
                labels[v] = copy_label(a, i)
        values.add(rf_unrooted(Tree(t.adj, labels), fixed))
    return min(values), values


# -- enumeration ----------------------------------------------------------------


def enumerate_binary_supertrees(taxa, max_taxa: int = 8) -> Iterator[Tree]:
    """Every unrooted binary topology on ``taxa``, once each, by leaf insertion."""
    taxa = sorted(taxa, key=str)
    if not 3 <= len(taxa) <= max_taxa:
        raise ValueError(f"need between 3 and {max_taxa} taxa")

    def grow(edges, n_vertices, i):
        if i == len(taxa):
            labels = {v: taxa[v] for v in range(len(taxa))}
            yield Tree.from_edges(n_vertices, edges, labels)
            return
        for j in range(len(edges)):
            a, b = edges[j]
            mid = n_vertices
            new = edges[:j] + edges[j + 1:] + [(a, mid), (mid, b), (mid, i)]
            yield from grow(new, n_vertices + 1, i + 1)

    # leaves are vertices 0..n-1; the first internal vertex joins the first three
    n = len(taxa)
    start = [(0, n), (1, n), (2, n)]
    yield from grow(start, n + 1, 3)


def double_factorial(m: int) -> int:
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def exhaustive_optimum(profile: Sequence[Tree], max_taxa: int = 7) -> tuple[int, list[Tree]]:
    """Minimum profile distance over all binary supertrees, and the trees attaining it."""
    taxa = _profile_taxa(profile)
    if len(taxa) > max_taxa:
        raise ValueError(f"more than {max_taxa} taxa")
    best = None
    winners: list[Tree] = []
    for s in enumerate_binary_supertrees(taxa.names, max_taxa):
        score = sum(rf_multree_supertree(t, s) for t in profile)
        if best is None or score < best:
            best, winners = score, [s]
        elif score == best:
            winners.append(s)
    return best, winners


# -- neighbourhood check ------------------------------------------------------


def neighborhood_naive_check(profile: Sequence[Tree], s: Tree, max_leaves: int = 12) -> OracleReport:
    """Recompute the profile distance of every SPR neighbour from scratch and compare."""
    if s.n_leaves > max_leaves:
        raise ValueError(f"more than {max_leaves} leaves")
    searcher = SprSearcher(profile, _profile_taxa(profile, s))
    total, valid, sa, _ = searcher.scores(s)
    report = OracleReport(f"{len(profile)} trees, supertree on {s.n_leaves} leaves")
    for c, d, e in zip(*np.nonzero(valid)):
        mv = _move_of(sa, int(c), int(d), int(e))
        key = (mv.cut_edge, mv.pruned, mv.regraft_edge)
        nb = apply_spr(s, mv)
        report.oracle[key] = sum(rf_multree_supertree(t, nb) for t in profile)
        report.engine[key] = int(total[c, d, e])
    report.agree = not report.mismatches
    return report


# -- mul-tree structure -------------------------------------------------------


def multree_splits(t: Tree) -> Counter:
    """Multiset of splits of a mul-tree, each split a pair of label multisets."""
    out: Counter = Counter()
    for u, v in t.internal_edges():
        side = t.side(u, v)
        a = tuple(sorted((str(t.labels[w]) for w in side if w < t.n_leaves)))
        b = tuple(sorted((str(t.labels[w]) for w in range(t.n_leaves) if w not in side)))
        out[tuple(sorted((a, b)))] += 1
    return out


def _centers(t: Tree) -> list[int]:
    deg = [len(a) for a in t.adj]
    layer = [v for v in range(t.n_vertices) if deg[v] <= 1]
    left = t.n_vertices
    while left > 2:
        left -= len(layer)
        nxt = []
        for v in layer:
            for w in t.adj[v]:
                deg[w] -= 1
                if deg[w] == 1:
                    nxt.append(w)
        layer = nxt
    return layer


def _canon(t: Tree, v: int, parent: int) -> str:
    if v < t.n_leaves:
        return repr(str(t.labels[v]))
    kids = sorted(_canon(t, w, v) for w in t.adj[v] if w != parent)
    return "(" + ",".join(kids) + ")"


def canonical_form(t: Tree) -> str:
    """Label-aware canonical string of an unrooted (mul-)tree, rooted at its centre."""
    cs = _centers(t)
    if len(cs) == 1:
        return _canon(t, cs[0], -1)
    a, b = cs
    return "[" + ",".join(sorted((_canon(t, a, b), _canon(t, b, a)))) + "]"


def multree_isomorphic(t1: Tree, t2: Tree, max_leaves: int = 12) -> bool:
    """Labelled isomorphism of two mul-trees."""
    if max(t1.n_leaves, t2.n_leaves) > max_leaves:
        raise ValueError(f"more than {max_leaves} leaves")
    if t1.multiplicity() != t2.multiplicity():
        return False
    return canonical_form(t1) == canonical_form(t2)


# -- fixtures -----------------------------------------------------------------


def interleaved_balanced_pair(k: int, outgroup: str = "o") -> tuple[Tree, Tree]:
    """
    Two trees on ``k + 2`` leaves ``x0 .. x{k+1}`` (plus an outgroup marking
    the root) whose rooted clusters are pairwise distinct.

    ``T`` is the balanced tree over ``x0, x1, ..., x{k+1}``; ``T'`` is the
    same shape over ``x0, x2, ..., x1, x3, ...``, so the two leaves of
    every cherry of ``T`` sit in different halves of ``T'``.  Both have
    ``k`` internal edges and no split in common, so their distance is 2k.
    """
    m = k + 2
    if k < 2 or m & (m - 1):
        raise ValueError("k + 2 must be a power of two and k >= 2")
    names = [f"x{i}" for i in range(m)]
    shuffled = names[0::2] + names[1::2]
    return _balanced(names, outgroup), _balanced(shuffled, outgroup)


def _balanced(order: list[str], outgroup: str) -> Tree:
    edges = []
    labels = {}
    counter = [0]

    def new():
        counter[0] += 1
        return counter[0] - 1

    def build(items):
        v = new()
        if len(items) == 1:
            labels[v] = items[0]
            return v
        half = len(items) // 2
        for part in (items[:half], items[half:]):
            edges.append((v, build(part)))
        return v

    root = build(order)
    o = new()
    labels[o] = outgroup
    edges.append((root, o))
    return Tree.from_edges(counter[0], edges, labels)
