"""
SPR moves on binary unrooted supertrees and the incremental neighbourhood scan.

A move cuts an edge ``{x, y}``, detaches the component containing ``y``,
suppresses ``x`` in the remaining component and re-inserts ``x`` on an
edge of that component.  Vertex ids are preserved: ``x`` is reused as the
subdivision vertex, so a move is fully described by its cut edge, the
pruned endpoint ``y`` and the regraft edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import _kernels as K
from .tree import TaxonTable, Tree, splits


@dataclass(frozen=True)
class SprMove:
    """Cut ``cut_edge``, move the side containing ``pruned``, regraft on ``regraft_edge``."""

    cut_edge: tuple[int, int]
    pruned: int
    regraft_edge: tuple[int, int]

    @property
    def attach(self) -> int:
        """Endpoint of the cut edge that travels with the pruned subtree."""
        a, b = self.cut_edge
        return a if b == self.pruned else b


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def _check_binary(s: Tree):
    if not s.is_binary:
        raise ValueError("SPR moves need a binary tree")
    if s.n_leaves < 4:
        raise ValueError("SPR moves need at least 4 leaves")


def apply_spr(s: Tree, move: SprMove) -> Tree:
    """Return the tree obtained by applying ``move`` to ``s``."""
    x, y = move.attach, move.pruned
    if y not in s.adj[x]:
        raise ValueError(f"cut edge {move.cut_edge} is not an edge")
    if len(s.adj[x]) != 3:
        raise ValueError("the regrafted endpoint must be an internal vertex")
    p, q = (w for w in s.adj[x] if w != y)
    adj = [set(a) for a in s.adj]
    adj[x] = {y}
    adj[p].discard(x)
    adj[q].discard(x)
    adj[p].add(q)
    adj[q].add(p)
    a, b = move.regraft_edge
    if b not in adj[a] or a == x or b == x:
        raise ValueError(f"regraft edge {move.regraft_edge} is not in the host component")
    # the host is the side of {x, y} not containing y
    host = _component(adj, p, x)
    if a not in host:
        raise ValueError(f"regraft edge {move.regraft_edge} lies in the pruned component")
    adj[a].discard(b)
    adj[b].discard(a)
    adj[a].add(x)
    adj[b].add(x)
    adj[x] |= {a, b}
    return Tree([sorted(n) for n in adj], s.labels)


def _component(adj, start, avoid) -> set:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w != avoid and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def aleph_order(tree: Tree, start_leaf: int, distinct: bool = False,
                avoid: int | None = None) -> list[tuple[int, int]]:
    """
    Depth-first edge walk of ``tree`` from leaf ``start_leaf``.

    Every edge is walked down and back up, so consecutive entries always
    share a vertex.  With ``distinct=True`` only the first occurrence of
    each edge is kept; the result is then the regraft order of the scan.
    Neighbours are visited in adjacency order.  ``avoid`` excludes one
    vertex (and the part of the tree behind it).
    """
    if len(tree.adj[start_leaf]) != 1:
        raise ValueError("walk must start at a leaf")
    walk = [start_leaf]
    stack = [(start_leaf, -1, iter(tree.adj[start_leaf]))]
    while stack:
        v, parent, it = stack[-1]
        for w in it:
            if w != parent and w != avoid:
                walk.append(w)
                stack.append((w, v, iter(tree.adj[w])))
                break
        else:
            stack.pop()
            if stack:
                walk.append(stack[-1][0])
    edges = [_edge(a, b) for a, b in zip(walk, walk[1:])]
    if not distinct:
        return edges
    seen = set()
    out = []
    for e in edges:
        if e not in seen:
            seen.add(e)
            out.append(e)
    return out


# -- move enumeration ------------------------------------------------------


def _valid_mask(sa: K.SuperArrays) -> np.ndarray:
    """valid[c, d, e]: move (c, d) may regraft on edge e; the identity column is excluded."""
    V = sa.n_vertices
    par = sa.parent
    valid = np.zeros((V, 2, V + 1), dtype=bool)
    es = np.arange(V)
    not_root = es != sa.root
    for c in range(V):
        if c == sa.root:
            continue
        inside = sa.in_subtree(es, c)
        x = par[c]
        valid[c, 0, :V] = not_root & ~inside & (es != x) & (par[es] != x)
        if sa.leaf_tax[c] < 0:
            valid[c, 1, :V] = not_root & inside & (es != c) & (par[es] != c)
    return valid


def _move_of(sa: K.SuperArrays, c: int, d: int, e: int) -> SprMove:
    p = int(sa.parent[c])
    y = c if d == 0 else p
    return SprMove(_edge(c, p), int(y), sa.edge(e))


def spr_moves(s: Tree) -> list[SprMove]:
    """All non-identity SPR moves of ``s`` in (cut edge id, direction, regraft edge id) order."""
    _check_binary(s)
    sa = K.SuperArrays(s, TaxonTable(sorted(s.label_set, key=str)))
    valid = _valid_mask(sa)
    return [_move_of(sa, c, d, e) for c, d, e in zip(*np.nonzero(valid))]


def spr_neighborhood(s: Tree, distinct: bool = False) -> Iterator[tuple[SprMove, Tree]]:
    """
    Yield ``(move, neighbour)`` for every SPR move that changes the topology.

    With ``distinct=True`` each neighbour topology is reported once (first
    move that produces it).
    """
    taxa = TaxonTable(sorted(s.label_set, key=str))
    own = splits(s, taxa)
    seen = set()
    for mv in spr_moves(s):
        t = apply_spr(s, mv)
        key = frozenset(splits(t, taxa))
        if key == own:
            continue
        if distinct:
            if key in seen:
                continue
            seen.add(key)
        yield mv, t


# -- scans -----------------------------------------------------------------


def _profile_taxa(profile: Sequence[Tree], s: Tree | None = None) -> TaxonTable:
    names = set()
    for t in profile:
        names |= t.label_set
    if s is not None:
        names |= s.label_set
    return TaxonTable(sorted(names, key=str))


@dataclass
class ScanStep:
    """One step of a scan: regraft edge reached, distance, and the update bookkeeping."""

    regraft_edge: tuple[int, int]
    rf: int
    case: int        # 0 for the initial position, else the update case 1..3
    gained: int      # |G|: gene-tree vertices whose f went from 0 to >= 1
    lost: int        # |L|: gene-tree vertices whose f went from >= 1 to 0
    changed: int     # |H|: gene-tree vertices whose f changed


def _pick_root(sa: K.SuperArrays, side: set, t: Tree) -> int | None:
    mult = t.multiplicity()
    best = None
    for v in side:
        if v >= sa.tree.n_leaves:
            continue
        lab = sa.tree.labels[v]
        if lab not in mult:
            continue
        key = (mult[lab] > 1, sa.taxa.index[lab])
        if best is None or key < best[0]:
            best = (key, v)
    return None if best is None else best[1]


def scan_cut_edge(s: Tree, t: Tree, cut: tuple[int, int], pruned: int | None = None,
                  trace: bool = False):
    """
    Distance from ``t`` to every tree obtained by regrafting the ``pruned``
    side of ``cut`` (default: the second endpoint) onto an edge of the
    other side.

    Returns a list of ``(SprMove, rf)`` in regraft order, starting at the
    pendant edge of the leaf the gene tree is rooted at.  The entry whose
    regraft edge joins the two other neighbours of the cut point
    reproduces ``s``.  With ``trace=True`` a list of :class:`ScanStep` is
    returned as well.
    """
    _check_binary(s)
    u, v = cut
    if v not in s.adj[u]:
        raise ValueError(f"{cut} is not an edge")
    y = v if pruned is None else pruned
    if y not in (u, v):
        raise ValueError("pruned endpoint must lie on the cut edge")
    x = u if y == v else v
    if len(s.adj[x]) != 3:
        raise ValueError("the host endpoint of the cut must be internal")
    if not t.label_set <= s.label_set:
        raise ValueError("gene tree labels must be contained in the supertree")
    taxa = _profile_taxa([t], s)
    sa = K.SuperArrays(s, taxa)
    bank = K.GeneBank([t], taxa)
    arr = bank.arrays()
    yside = s.side(x, y)
    xside = set(range(s.n_vertices)) - yside
    p, q = (w for w in s.adj[x] if w != y)

    def edge_of(w, pw):
        if {w, pw} == {p, q}:
            return _edge(p, q)
        return _edge(w, pw)

    rx = _pick_root(sa, xside, t)
    ry = _pick_root(sa, yside, t)
    if t.n_leaves <= 3 or rx is None or ry is None:
        # labels on one side only: every regraft gives the same distance
        if t.n_leaves <= 3:
            const = 0
        else:
            const = int(K.rf_single(0, rx if rx is not None else ry, arr, sa.nbr,
                                    sa.leaf_tax, sa.parent))
        start = next(w for w in xside if w < s.n_leaves)
        order = _host_order(s, x, y, p, q, start)
        out = [(SprMove(_edge(x, y), y, e), const) for e in order]
        steps = [ScanStep(e, const, 0, 0, 0, 0) for e in order]
        return (out, steps) if trace else out

    _, row, tr = K.scan_single(0, x, y, rx, arr, sa.nbr, sa.leaf_tax, sa.parent, True)
    # rebuild the host rooting used by the kernel to name edges
    m1 = s.adj[rx][0]
    if m1 == x:
        m1 = q if rx == p else p
    hpar = _host_parents(s, x, y, p, q, rx, m1)
    out = []
    steps = []
    seen = set()
    for w, rf, case, g, lo, h in tr:
        if w < 0:
            break
        e = edge_of(int(w), hpar[int(w)])
        steps.append(ScanStep(e, int(rf), int(case), int(g), int(lo), int(h)))
        if e not in seen:
            seen.add(e)
            out.append((SprMove(_edge(x, y), y, e), int(rf)))
    return (out, steps) if trace else out


def _host_parents(s: Tree, x, y, p, q, root, m1) -> dict:
    par = {m1: root}
    stack = [m1]
    while stack:
        v = stack.pop()
        for w in s.adj[v]:
            if w == x:
                w = q if v == p else p
            if w == y or w == par[v]:
                continue
            par[w] = v
            stack.append(w)
    return par


def _host_order(s: Tree, x, y, p, q, start) -> list[tuple[int, int]]:
    adj = [list(a) for a in s.adj]
    adj[p] = [q if w == x else w for w in adj[p]]
    adj[q] = [p if w == x else w for w in adj[q]]
    host = Tree(adj, s.labels)
    return aleph_order(host, start, distinct=True, avoid=x)


# -- profile search --------------------------------------------------------


class SprSearcher:
    """
    Scores whole SPR neighbourhoods of supertrees against a fixed profile.

    The profile is packed once; every call to :meth:`scores` or
    :meth:`best` runs one scan per (gene tree, cut edge, direction).
    """

    def __init__(self, profile: Sequence[Tree], taxa: TaxonTable | None = None):
        self.profile = list(profile)
        self.taxa = taxa if taxa is not None else _profile_taxa(self.profile)
        self.bank = K.GeneBank(self.profile, self.taxa)

    def scores(self, s: Tree):
        """
        Profile distance of every move.

        Returns ``(total, valid, sa, base)``: ``total[c, d, e]`` is the
        summed distance of move (c, d, e), ``valid`` masks non-identity
        moves, ``sa`` is the packed supertree and ``base`` the per-tree
        distance of ``s`` itself.
        """
        _check_binary(s)
        for t in self.profile:
            if not t.label_set <= s.label_set:
                raise ValueError("profile labels must be contained in the supertree")
        sa = K.SuperArrays(s, self.taxa)
        V = sa.n_vertices
        scores = np.zeros((V, 2, V + 1), dtype=np.int64)
        const = np.zeros((V, 2), dtype=np.int64)
        base = np.zeros(len(self.profile), dtype=np.int64)
        K.spr_scores(self.bank.arrays(), sa.nbr, sa.leaf_tax, sa.tax_leaf, sa.parent,
                     sa.order, sa.root, scores, const, base)
        total = scores + const[:, :, None]
        return total, _valid_mask(sa), sa, base

    def best(self, s: Tree):
        """Lowest-scoring neighbour ``(tree, score, move)``; first in move order on ties."""
        total, valid, sa, _ = self.scores(s)
        masked = np.where(valid, total, np.iinfo(np.int64).max)
        flat = int(np.argmin(masked))
        c, d, e = np.unravel_index(flat, masked.shape)
        mv = _move_of(sa, int(c), int(d), int(e))
        return apply_spr(s, mv), int(masked[c, d, e]), mv

    def profile_score(self, s: Tree, per_tree: bool = False):
        sa = K.SuperArrays(s, self.taxa)
        arr = self.bank.arrays()
        parts = []
        for i, t in enumerate(self.profile):
            if t.n_leaves <= 3:
                parts.append(0)
                continue
            r = _pick_root(sa, range(s.n_leaves), t)
            parts.append(int(K.rf_single(i, r, arr, sa.nbr, sa.leaf_tax, sa.parent)))
        return (sum(parts), parts) if per_tree else sum(parts)


def spr_search(profile: Sequence[Tree], s: Tree):
    """Best SPR neighbour of ``s`` for ``profile``: ``(tree, score)``."""
    tree, score, _ = SprSearcher(profile, _profile_taxa(profile, s)).best(s)
    return tree, score
