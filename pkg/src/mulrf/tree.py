"""
Unrooted and rooted leaf-labelled trees.

Public API
----------
  TaxonTable(names)
      Dense integer ids for a set of labels.
  Tree(adj, labels)
      Unrooted tree whose leaves may share labels (a mul-tree).  Internal
      vertices carry the label ``None``.  Leaves always occupy the low id
      range ``0 .. n_leaves - 1``.
  RootedTree(parent, labels, root)
      Rooted tree with explicit parent pointers.

  restrict(tree, keep), splits(tree, taxa), clusters(rooted, taxa),
  root_at_taxon(tree, r), unroot(rooted), contract_edge(tree, u, v),
  refine_vertex(tree, v, side), random_binary_tree(labels, rng)

Trees are treated as immutable values: every operation returns a new tree.
Splits and clusters are plain ``int`` bitsets over a ``TaxonTable``.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

import numpy as np


class TaxonTable:
    """Ordered, duplicate-free list of labels with an inverse index."""

    __slots__ = ("names", "index")

    def __init__(self, names: Iterable[str]):
        self.names = list(names)
        self.index = {name: i for i, name in enumerate(self.names)}
        if len(self.index) != len(self.names):
            raise ValueError("duplicate taxon names")

    @classmethod
    def from_trees(cls, trees: Iterable["Tree"]) -> "TaxonTable":
        labels = set()
        for tree in trees:
            labels.update(tree.label_set)
        return cls(sorted(labels))

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name) -> bool:
        return name in self.index

    def __repr__(self) -> str:
        return f"TaxonTable({self.names!r})"

    def mask(self, labels: Iterable[str]) -> int:
        out = 0
        for name in labels:
            out |= 1 << self.index[name]
        return out

    def decode(self, mask: int) -> frozenset:
        return frozenset(n for i, n in enumerate(self.names) if mask >> i & 1)


class Tree:
    """
    Unrooted phylogenetic (mul-)tree.

    Parameters
    ----------
    adj : sequence of sequences of int
        Neighbour lists.  Must describe a connected acyclic graph.
    labels : sequence
        ``labels[v]`` is the label of leaf ``v`` and ``None`` for internal
        vertices.  Leaves must come first.

    Use :meth:`from_edges` to build a tree from an arbitrary edge list; it
    renumbers vertices so that the leaf block is contiguous.
    """

    __slots__ = ("adj", "labels", "n_leaves")

    def __init__(self, adj: Sequence[Sequence[int]], labels: Sequence):
        self.adj = tuple(tuple(a) for a in adj)
        self.labels = tuple(labels)
        if len(self.adj) != len(self.labels):
            raise ValueError("adjacency and labels differ in length")
        n_leaves = sum(1 for a in self.adj if len(a) <= 1)
        for v in range(len(self.adj)):
            is_leaf = len(self.adj[v]) <= 1
            if is_leaf != (v < n_leaves):
                raise ValueError("leaves must occupy the low id range")
            if is_leaf and self.labels[v] is None:
                raise ValueError(f"leaf {v} has no label")
            if not is_leaf and self.labels[v] is not None:
                raise ValueError(f"internal vertex {v} carries a label")
        self.n_leaves = n_leaves

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[tuple[int, int]],
                   labels: dict) -> "Tree":
        """Build a tree from an edge list; ``labels`` maps leaf vertex -> label."""
        adj = [[] for _ in range(n_vertices)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        leaves = [v for v in range(n_vertices) if len(adj[v]) <= 1]
        internal = [v for v in range(n_vertices) if len(adj[v]) > 1]
        order = leaves + internal
        new_id = {old: new for new, old in enumerate(order)}
        new_adj = [[new_id[w] for w in adj[old]] for old in order]
        new_labels = [labels.get(old) if len(adj[old]) <= 1 else None for old in order]
        return cls(new_adj, new_labels)

    # -- basic structure -------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.adj)

    @property
    def leaves(self) -> range:
        return range(self.n_leaves)

    @property
    def internal_vertices(self) -> range:
        return range(self.n_leaves, self.n_vertices)

    @property
    def leaf_labels(self) -> tuple:
        return self.labels[: self.n_leaves]

    @property
    def label_set(self) -> frozenset:
        return frozenset(self.leaf_labels)

    def multiplicity(self) -> dict:
        counts: dict = {}
        for lab in self.leaf_labels:
            counts[lab] = counts.get(lab, 0) + 1
        return counts

    @property
    def is_singly_labeled(self) -> bool:
        return len(self.label_set) == self.n_leaves

    @property
    def is_binary(self) -> bool:
        return all(len(self.adj[v]) == 3 for v in self.internal_vertices)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n_vertices) for v in self.adj[u] if u < v]

    def internal_edges(self) -> list[tuple[int, int]]:
        n = self.n_leaves
        return [(u, v) for u, v in self.edges() if u >= n and v >= n]

    def leaf_of(self, label) -> int:
        """Return the unique leaf carrying ``label``."""
        found = [v for v in self.leaves if self.labels[v] == label]
        if len(found) != 1:
            raise ValueError(f"label {label!r} is carried by {len(found)} leaves")
        return found[0]

    def side(self, u: int, v: int) -> set[int]:
        """Vertices reachable from ``v`` without crossing edge ``{u, v}``."""
        seen = {v}
        stack = [v]
        while stack:
            w = stack.pop()
            for z in self.adj[w]:
                if z not in seen and not (w == v and z == u):
                    seen.add(z)
                    stack.append(z)
        return seen

    def relabel(self, mapping: dict) -> "Tree":
        labels = [mapping.get(lab, lab) if lab is not None else None for lab in self.labels]
        return Tree(self.adj, labels)

    def __repr__(self) -> str:
        from .newick import write_newick

        return f"Tree({write_newick(self)!r})"


class RootedTree:
    """
    Rooted tree given by parent pointers.

    ``parent[root] == -1``.  Leaves are the vertices without children and
    carry a label; every other vertex carries ``None``.
    """

    __slots__ = ("parent", "children", "labels", "root")

    def __init__(self, parent: Sequence[int], labels: Sequence, root: int):
        self.parent = tuple(parent)
        self.labels = tuple(labels)
        self.root = root
        children = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p >= 0:
                children[p].append(v)
        self.children = tuple(tuple(c) for c in children)
        if self.parent[root] != -1:
            raise ValueError("root must have no parent")

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    @property
    def leaves(self) -> list[int]:
        return [v for v in range(self.n_vertices) if not self.children[v] and v != self.root]

    @property
    def internal_vertices(self) -> list[int]:
        """I(T): vertices that are neither leaves nor the root."""
        return [v for v in range(self.n_vertices) if self.children[v] and v != self.root]

    @property
    def leaf_labels(self) -> list:
        return [self.labels[v] for v in self.leaves]

    def postorder(self) -> list[int]:
        out = []
        stack = [(self.root, False)]
        while stack:
            v, done = stack.pop()
            if done:
                out.append(v)
                continue
            stack.append((v, True))
            for c in reversed(self.children[v]):
                stack.append((c, False))
        return out

    def depths(self) -> list[int]:
        depth = [0] * self.n_vertices
        for v in reversed(self.postorder()):
            if v != self.root:
                depth[v] = depth[self.parent[v]] + 1
        return depth

    def leafsets(self) -> list[frozenset]:
        """Labels below each vertex."""
        sets: list = [frozenset()] * self.n_vertices
        for v in self.postorder():
            if self.children[v]:
                sets[v] = frozenset().union(*(sets[c] for c in self.children[v]))
            else:
                sets[v] = frozenset([self.labels[v]])
        return sets


# -- construction helpers ------------------------------------------------


def _rooted_from_adj(adj: Sequence[Sequence[int]], root: int) -> list[int]:
    parent = [-2] * len(adj)
    parent[root] = -1
    stack = [root]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if parent[w] == -2:
                parent[w] = v
                stack.append(w)
    return parent


def _suppress_and_build(adj: list[set], labels: dict, alive: set) -> Tree:
    """Drop unlabelled tips, suppress degree-2 vertices, and pack into a Tree."""
    queue = deque(v for v in alive if len(adj[v]) <= 1 and v not in labels)
    while queue:
        v = queue.popleft()
        if v not in alive or len(alive) == 1:
            continue
        alive.discard(v)
        for w in adj[v]:
            adj[w].discard(v)
            if len(adj[w]) <= 1 and w not in labels:
                queue.append(w)
        adj[v] = set()
    for v in list(alive):
        if len(adj[v]) == 2 and v not in labels:
            a, b = adj[v]
            adj[a].discard(v)
            adj[b].discard(v)
            adj[a].add(b)
            adj[b].add(a)
            adj[v] = set()
            alive.discard(v)
    verts = sorted(alive)
    local = {v: i for i, v in enumerate(verts)}
    edges = [(local[u], local[w]) for u in verts for w in adj[u] if u < w]
    return Tree.from_edges(len(verts), edges, {local[v]: labels[v] for v in verts if v in labels})


def restrict(tree: Tree, keep: Iterable) -> Tree:
    """
    Restrict ``tree`` to the leaves whose label is in ``keep``.

    Returns the minimal subtree spanning those leaves with degree-2
    vertices suppressed.  Every copy of a kept label survives.
    """
    keep = set(keep)
    kept = [v for v in tree.leaves if tree.labels[v] in keep]
    return restrict_leaves(tree, kept)


def restrict_leaves(tree: Tree, kept: Iterable[int]) -> Tree:
    """Restriction to an explicit set of leaf vertices."""
    kept = set(kept)
    if not kept:
        raise ValueError("empty restriction")
    if any(v >= tree.n_leaves for v in kept):
        raise ValueError("restriction must name leaves")
    adj = [set(a) for a in tree.adj]
    labels = {v: tree.labels[v] for v in kept}
    # Dropped leaves lose their label so the pruning pass removes them.
    return _suppress_and_build(adj, labels, set(range(tree.n_vertices)))


def splits(tree: Tree, taxa: TaxonTable | None = None) -> set[int]:
    """
    Canonical splits of a singly-labelled tree, one per internal edge.

    Each split is the bitset (over ``taxa``) of the side that does not
    contain the lowest-indexed leaf of the tree.
    """
    if taxa is None:
        taxa = TaxonTable(sorted(tree.label_set))
    if not tree.is_singly_labeled:
        raise ValueError("splits() needs a singly-labelled tree; see oracle.multree_splits")
    if tree.n_leaves < 4:
        return set()
    bit = [0] * tree.n_vertices
    for v in tree.leaves:
        bit[v] = 1 << taxa.index[tree.labels[v]]
    root = tree.n_leaves  # first internal vertex
    parent = _rooted_from_adj(tree.adj, root)
    order = _preorder(tree.adj, root)
    mask = bit[:]
    for v in reversed(order):
        if parent[v] >= 0:
            mask[parent[v]] |= mask[v]
    universe = mask[root]
    low = universe & -universe
    out = set()
    for v in tree.internal_vertices:
        if v == root:
            continue
        m = mask[v]
        if m & low:
            m = universe & ~m
        out.add(m)
    return out


def _preorder(adj, root) -> list[int]:
    order = []
    seen = {root}
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return order


def is_isomorphic(t1: Tree, t2: Tree) -> bool:
    """Isomorphism of singly-labelled trees by canonical split sets."""
    if t1.label_set != t2.label_set:
        return False
    taxa = TaxonTable(sorted(t1.label_set))
    return splits(t1, taxa) == splits(t2, taxa)


def clusters(rooted: RootedTree, taxa: TaxonTable | None = None) -> dict[int, int]:
    """Cluster bitset of every internal (non-root, non-leaf) vertex."""
    if taxa is None:
        taxa = TaxonTable(sorted(set(rooted.leaf_labels)))
    mask = [0] * rooted.n_vertices
    for v in rooted.postorder():
        if rooted.children[v]:
            for c in rooted.children[v]:
                mask[v] |= mask[c]
        else:
            mask[v] = 1 << taxa.index[rooted.labels[v]]
    return {v: mask[v] for v in rooted.internal_vertices}


def root_at_taxon(tree: Tree, r) -> RootedTree:
    """
    Root ``tree`` on the pendant edge of the leaf labelled ``r``.

    The pendant edge is subdivided and the new vertex (id ``n_vertices``)
    becomes the root, so ``r`` stays a leaf and a child of the root.
    """
    leaf = tree.leaf_of(r)
    n = tree.n_vertices
    adj = [list(a) for a in tree.adj] + [[]]
    if tree.adj[leaf]:
        nb = tree.adj[leaf][0]
        adj[leaf] = [n]
        adj[nb] = [n if w == leaf else w for w in adj[nb]]
        adj[n] = [leaf, nb]
    else:
        adj[leaf] = [n]
        adj[n] = [leaf]
    parent = _rooted_from_adj(adj, n)
    labels = list(tree.labels) + [None]
    return RootedTree(parent, labels, n)


def unroot(rooted: RootedTree) -> Tree:
    """Forget the root, suppressing any vertex of degree two."""
    n = rooted.n_vertices
    adj = [set() for _ in range(n)]
    for v, p in enumerate(rooted.parent):
        if p >= 0:
            adj[v].add(p)
            adj[p].add(v)
    labels = {v: rooted.labels[v] for v in rooted.leaves}
    return _suppress_and_build(adj, labels, set(range(n)))


def contract_edge(tree: Tree, u: int, v: int) -> Tree:
    """Identify the endpoints of internal edge ``{u, v}``."""
    if v not in tree.adj[u]:
        raise ValueError(f"{{{u}, {v}}} is not an edge")
    if u < tree.n_leaves or v < tree.n_leaves:
        raise ValueError("cannot contract a pendant edge")
    adj = [set(a) for a in tree.adj]
    for w in adj[v]:
        if w != u:
            adj[w].discard(v)
            adj[w].add(u)
            adj[u].add(w)
    adj[u].discard(v)
    adj[v] = set()
    alive = set(range(tree.n_vertices)) - {v}
    labels = {x: tree.labels[x] for x in tree.leaves}
    return _suppress_and_build(adj, labels, alive)


def refine_vertex(tree: Tree, v: int, side: Iterable[int]) -> Tree:
    """
    Split vertex ``v`` in two: neighbours in ``side`` move to a new vertex
    joined to ``v`` by a new edge.
    """
    side = set(side)
    deg = len(tree.adj[v])
    if deg < 4:
        raise ValueError("only vertices of degree >= 4 can be refined")
    if not side <= set(tree.adj[v]):
        raise ValueError("side must be a subset of the neighbours")
    if not 2 <= len(side) <= deg - 2:
        raise ValueError("side must hold between 2 and deg-2 neighbours")
    n = tree.n_vertices
    adj = [set(a) for a in tree.adj] + [set()]
    for w in side:
        adj[v].discard(w)
        adj[w].discard(v)
        adj[w].add(n)
        adj[n].add(w)
    adj[v].add(n)
    adj[n].add(v)
    edges = [(a, b) for a in range(n + 1) for b in adj[a] if a < b]
    return Tree.from_edges(n + 1, edges, {x: tree.labels[x] for x in tree.leaves})


def random_binary_tree(labels: Sequence, rng: np.random.Generator) -> Tree:
    """Uniformly random unrooted binary topology by sequential leaf insertion."""
    labels = list(labels)
    if len(labels) < 2:
        if not labels:
            raise ValueError("need at least one label")
        return Tree([[]], labels)
    edges = [(0, 1)]
    leaf_label = {0: labels[0], 1: labels[1]}
    n_vertices = 2
    for lab in labels[2:]:
        a, b = edges.pop(int(rng.integers(len(edges))))
        mid, leaf = n_vertices, n_vertices + 1
        n_vertices += 2
        edges += [(a, mid), (mid, b), (mid, leaf)]
        leaf_label[leaf] = lab
    return Tree.from_edges(n_vertices, edges, leaf_label)
