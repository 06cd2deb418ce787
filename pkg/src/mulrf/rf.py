"""
Robinson-Foulds distance kernels.

Two independent routes are provided:

* ``rf_unrooted`` compares canonical split sets directly.
* ``rf_rooted`` roots both trees on the pendant edge of a shared taxon and
  counts matched clusters through the LCA mapping and the vertex function,
  in time linear in the tree sizes.

``rf_multree_supertree`` reduces a (mul-tree, supertree) pair to a pair of
singly-labelled trees by extending the supertree and differentiating the
copies, then applies the rooted kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .lca import LcaIndex
from .tree import RootedTree, TaxonTable, Tree, restrict, root_at_taxon, splits

COPY_SEP = "#"


def rf_unrooted(t1: Tree, t2: Tree) -> int:
    """Split-based RF distance, with ``t2`` restricted to the leaves of ``t1``."""
    if not (t1.is_singly_labeled and t2.is_singly_labeled):
        raise ValueError("rf_unrooted needs singly-labelled trees")
    l1 = t1.label_set
    if not l1 <= t2.label_set:
        raise ValueError("leaf set of the first tree must be contained in the second")
    if l1 != t2.label_set:
        t2 = restrict(t2, l1)
    taxa = TaxonTable(sorted(l1, key=str))
    return len(splits(t1, taxa) ^ splits(t2, taxa))


def extend_supertree(s: Tree, t: Tree) -> Tree:
    """
    Replace every leaf ``a`` of ``s`` that occurs ``k > 1`` times in ``t``
    by an internal vertex carrying ``k`` leaves labelled ``a``.
    """
    mult = t.multiplicity()
    missing = set(mult) - s.label_set
    if missing:
        raise ValueError(f"labels absent from the supertree: {sorted(missing, key=str)}")
    edges = s.edges()
    labels = {}
    n = s.n_vertices
    for v in s.leaves:
        a = s.labels[v]
        k = mult.get(a, 1)
        if k == 1:
            labels[v] = a
            continue
        for _ in range(k):
            edges.append((v, n))
            labels[n] = a
            n += 1
    return Tree.from_edges(n, edges, labels)


def _copy_order(tree: Tree) -> list[int]:
    """Leaves in depth-first order from vertex 0."""
    order = []
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        if v < tree.n_leaves:
            order.append(v)
        for w in reversed(tree.adj[v]):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return order


def copy_label(label, i: int) -> str:
    return f"{label}{COPY_SEP}{i}"


def _differentiate_one(tree: Tree, dup: set) -> Tree:
    counter: dict = {}
    new = list(tree.labels)
    for v in _copy_order(tree):
        a = tree.labels[v]
        if a in dup:
            counter[a] = counter.get(a, 0) + 1
            new[v] = copy_label(a, counter[a])
    return Tree(tree.adj, new)


def differentiate(t: Tree, s_ext: Tree) -> tuple[Tree, Tree]:
    """
    Mutually consistent full differentiations of ``t`` and ``s_ext``.

    The ``k`` copies of a repeated label ``a`` become ``a#1 .. a#k`` in both
    trees, numbered in depth-first order from vertex 0.
    """
    mt, ms = t.multiplicity(), s_ext.multiplicity()
    for a in set(mt) & set(ms):
        if mt[a] != ms[a]:
            raise ValueError(f"multiplicity mismatch for {a!r}: {mt[a]} vs {ms[a]}")
    dup = {a for a, k in mt.items() if k > 1} | {a for a, k in ms.items() if k > 1}
    dt, ds = _differentiate_one(t, dup), _differentiate_one(s_ext, dup)
    if not (dt.is_singly_labeled and ds.is_singly_labeled):
        raise ValueError(f"copy labels collide with existing labels (separator {COPY_SEP!r})")
    return dt, ds


def lca_mapping(sub: RootedTree, ref: RootedTree, idx: LcaIndex | None = None) -> list:
    """
    Map each vertex of ``sub`` to the LCA in ``ref`` of its leaves that
    ``ref`` also carries, or to ``None`` when there are none.
    """
    if idx is None:
        idx = LcaIndex(ref)
    ref_leaf = {ref.labels[v]: v for v in ref.leaves}
    image: list = [None] * sub.n_vertices
    for v in sub.postorder():
        kids = sub.children[v]
        if not kids:
            image[v] = ref_leaf.get(sub.labels[v])
            continue
        acc = None
        for c in kids:
            m = image[c]
            if m is None:
                continue
            acc = m if acc is None else idx.lca(acc, m)
        image[v] = acc
    return image


@dataclass
class VertexFunction:
    f: dict            # internal vertex of ref -> number of matching sub vertices
    fzero_count: int   # |{u : f(u) = 0}|
    restricted_size: list  # |C_sub(v) restricted to L(ref)| per sub vertex
    cluster_size: list     # |C_ref(u)| per ref vertex


def vertex_function(sub: RootedTree, ref: RootedTree, mapping: Sequence) -> VertexFunction:
    """
    f(u) counts the internal ``v`` of ``sub`` mapped to ``u`` whose
    restricted cluster is as large as the cluster of ``u``.
    """
    ref_labels = set(ref.leaf_labels)
    size = [0] * sub.n_vertices
    for v in sub.postorder():
        kids = sub.children[v]
        if kids:
            size[v] = sum(size[c] for c in kids)
        else:
            size[v] = 1 if sub.labels[v] in ref_labels else 0
    csize = [0] * ref.n_vertices
    for u in ref.postorder():
        kids = ref.children[u]
        csize[u] = sum(csize[c] for c in kids) if kids else 1
    f = {u: 0 for u in ref.internal_vertices}
    for v in sub.internal_vertices:
        u = mapping[v]
        if u in f and size[v] == csize[u]:
            f[u] += 1
    zero = sum(1 for c in f.values() if c == 0)
    return VertexFunction(f, zero, size, csize)


def _root_label(rt: RootedTree):
    leaf_kids = [c for c in rt.children[rt.root] if not rt.children[c]]
    if not leaf_kids:
        raise ValueError("tree is not rooted on a pendant edge")
    return rt.labels[leaf_kids[0]]


def rf_rooted(ref: RootedTree, sub: RootedTree) -> int:
    """
    RF distance between ``ref`` and ``sub`` restricted to the leaves of
    ``ref``; both must be rooted on the pendant edge of the same taxon.

    With m = number of matched clusters (internal ``u`` with f(u) >= 1)
    the distance is |I(ref)| + |H(sub|L(ref))| - 2m.  For binary ``sub``,
    |H(sub|L(ref))| = |L(ref)| - 2 and this is the familiar
    |L| - |I| + 2|F| - 2.  Restricted supertrees are binary except at the
    star-shaped copy vertices of an extension, so the non-binary count is
    taken directly.
    """
    r = _root_label(ref)
    if r not in set(sub.leaf_labels) or _root_label(sub) != r:
        raise ValueError(f"both trees must be rooted at taxon {r!r}")
    ref_labels = set(ref.leaf_labels)
    if not ref_labels <= set(sub.leaf_labels):
        raise ValueError("leaf set of the reference must be contained in the other tree")
    mapping = lca_mapping(sub, ref)
    vf = vertex_function(sub, ref, mapping)
    n_internal = len(vf.f)
    matched = n_internal - vf.fzero_count
    # internal vertices of sub|L(ref): at least two children with leaves in L(ref)
    h = 0
    for v in sub.internal_vertices:
        if sum(1 for c in sub.children[v] if vf.restricted_size[c] > 0) >= 2:
            h += 1
    return n_internal + h - 2 * matched


def rf_multree_supertree(t: Tree, s: Tree) -> int:
    """RF distance from mul-tree ``t`` to singly-labelled supertree ``s``."""
    if not s.is_singly_labeled:
        raise ValueError("supertree must be singly labelled")
    labels = t.label_set
    if not labels <= s.label_set:
        raise ValueError("mul-tree labels must be contained in the supertree")
    if t.n_leaves <= 3:
        return 0
    s_ext = extend_supertree(restrict(s, labels), t)
    dt, ds = differentiate(t, s_ext)
    r = min(labels, key=str)
    rl = r if t.multiplicity()[r] == 1 else copy_label(r, 1)
    return rf_rooted(root_at_taxon(dt, rl), root_at_taxon(ds, rl))


def rf_profile(profile: Sequence[Tree], s: Tree, per_tree: bool = False):
    """Total distance from a profile of mul-trees to supertree ``s``."""
    parts = [rf_multree_supertree(t, s) for t in profile]
    if per_tree:
        return sum(parts), parts
    return sum(parts)
