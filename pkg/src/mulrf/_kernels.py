"""
Compiled kernels for the incremental SPR neighbourhood scan.

Everything here works on flat integer arrays.  ``GeneBank`` packs a profile
of (mul-)trees once; ``SuperArrays`` packs the current supertree.  The scan
for one (gene tree, directed cut edge) pair evaluates the RF distance of
every regraft position in O(n) total:

* the gene tree is rooted on the pendant edge of a leaf ``r`` that stays in
  the host component; its LCA structure is built once for an arbitrary
  base rooting and re-rooted on the fly (the LCA under root ``r`` is the
  deepest of lca(u, v), lca(u, r), lca(v, r));
* the pruned subtree is first hung just below the root, then walked along
  a depth-first edge ordering of the host in which consecutive regraft
  edges are adjacent; each step remaps at most two supertree vertices and
  touches at most four entries of the vertex function.

Supertree vertices are leaves (possibly standing for a star of ``k``
copies, i.e. the extension for a label repeated ``k`` times) or binary
internal vertices.  The distance is kept as

    RF = h + |I(T)| - 2 * matched

where ``matched`` counts internal gene-tree vertices whose cluster is hit
by some supertree vertex and ``h = l - 2 - sum(max(0, k_a - 2))`` is the
number of internal vertices of the restricted, extended supertree.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .tree import TaxonTable, Tree

NO = -1
_LOW = (1 << 32) - 1


# -- packing ---------------------------------------------------------------


class SuperArrays:
    """Flat arrays describing a binary supertree."""

    def __init__(self, s: Tree, taxa: TaxonTable):
        if not s.is_singly_labeled:
            raise ValueError("supertree must be singly labelled")
        V = s.n_vertices
        nbr = np.full((V, 3), NO, dtype=np.int64)
        for v, a in enumerate(s.adj):
            if len(a) > 3:
                raise ValueError("supertree must be binary")
            nbr[v, : len(a)] = a
        leaf_tax = np.full(V, NO, dtype=np.int64)
        tax_leaf = np.full(len(taxa), NO, dtype=np.int64)
        for v in s.leaves:
            # labels outside the table occur in no gene tree
            tid = taxa.index.get(s.labels[v], NO)
            if tid == NO:
                continue
            leaf_tax[v] = tid
            tax_leaf[tid] = v
        root = s.n_leaves if V > s.n_leaves else 0
        parent = np.full(V, NO, dtype=np.int64)
        order = np.empty(V, dtype=np.int64)
        _bfs(nbr, root, parent, order)
        tin = np.empty(V, dtype=np.int64)
        size = np.empty(V, dtype=np.int64)
        _intervals(nbr, root, parent, tin, size)
        self.tree = s
        self.taxa = taxa
        self.nbr = nbr
        self.leaf_tax = leaf_tax
        self.tax_leaf = tax_leaf
        self.root = root
        self.parent = parent
        self.order = order
        self.tin = tin
        self.size = size
        self.n_vertices = V

    def edge_id(self, u: int, v: int) -> int:
        """Edges are named by their endpoint farther from the packing root."""
        return u if self.parent[u] == v else v

    def edge(self, e: int) -> tuple[int, int]:
        return (int(min(e, self.parent[e])), int(max(e, self.parent[e])))

    def in_subtree(self, v, c):
        return (self.tin[c] <= self.tin[v]) & (self.tin[v] < self.tin[c] + self.size[c])


@njit(cache=True)
def _bfs(nbr, root, parent, order):
    parent[root] = -1
    order[0] = root
    cnt = 1
    i = 0
    while i < cnt:
        v = order[i]
        i += 1
        for j in range(3):
            w = nbr[v, j]
            if w >= 0 and w != parent[v]:
                parent[w] = v
                order[cnt] = w
                cnt += 1
    return cnt


@njit(cache=True)
def _intervals(nbr, root, parent, tin, size):
    V = nbr.shape[0]
    stack = np.empty(V, dtype=np.int64)
    post = np.empty(V, dtype=np.int64)
    top = 0
    stack[0] = root
    clock = 0
    np_ = 0
    while top >= 0:
        v = stack[top]
        top -= 1
        tin[v] = clock
        clock += 1
        post[np_] = v
        np_ += 1
        for j in range(3):
            w = nbr[v, j]
            if w >= 0 and w != parent[v]:
                top += 1
                stack[top] = w
    for i in range(V - 1, -1, -1):
        v = post[i]
        s = 1
        for j in range(3):
            w = nbr[v, j]
            if w >= 0 and w != parent[v]:
                s += size[w]
        size[v] = s


class GeneBank:
    """
    A profile of unrooted (mul-)trees packed into flat arrays, together with
    an Euler-tour / sparse-table LCA structure per tree.
    """

    def __init__(self, trees, taxa: TaxonTable):
        self.taxa = taxa
        self.trees = list(trees)
        k = len(self.trees)
        nt = len(taxa)
        voff = np.zeros(k + 1, dtype=np.int64)
        for i, t in enumerate(self.trees):
            voff[i + 1] = voff[i] + t.n_vertices
        total = int(voff[-1])
        aptr = np.zeros(total + 1, dtype=np.int64)
        aidx = []
        ltax = np.full(total, NO, dtype=np.int64)
        mult = np.zeros((k, nt), dtype=np.int64)
        cstart = np.zeros((k, nt), dtype=np.int64)
        ccopy = []
        n_leaf = np.zeros(k, dtype=np.int64)
        n_int = np.zeros(k, dtype=np.int64)
        dsum = np.zeros(k, dtype=np.int64)
        g = 0
        for i, t in enumerate(self.trees):
            by_tax = {}
            for v in range(t.n_vertices):
                aidx.extend(t.adj[v])
                aptr[g + 1] = aptr[g] + len(t.adj[v])
                if v < t.n_leaves:
                    tid = taxa.index[t.labels[v]]
                    ltax[g] = tid
                    by_tax.setdefault(tid, []).append(v)
                g += 1
            base = len(ccopy)
            for tid in sorted(by_tax):
                cstart[i, tid] = len(ccopy) - base
                mult[i, tid] = len(by_tax[tid])
                ccopy.extend(by_tax[tid])
                dsum[i] += max(0, len(by_tax[tid]) - 2)
            n_leaf[i] = t.n_leaves
            n_int[i] = t.n_vertices - t.n_leaves
        self.k = k
        self.voff = voff
        self.aptr = aptr
        self.aidx = np.asarray(aidx, dtype=np.int64)
        self.ltax = ltax
        self.mult = mult
        self.cstart = cstart
        self.coff = np.concatenate([[0], np.cumsum(n_leaf)]).astype(np.int64)
        self.ccopy = np.asarray(ccopy, dtype=np.int64)
        self.n_leaf = n_leaf
        self.n_int = n_int
        self.dsum = dsum
        # each tree is rooted at the leaf scans prefer (single-copy taxon
        # first, then lowest id), so most scans need no re-rooting
        broot = np.zeros(k, dtype=np.int64)
        for i in range(k):
            if n_leaf[i] == 0:
                continue
            key = mult[i] > 1
            present = np.nonzero(mult[i])[0]
            tid = present[np.lexsort((present, key[present]))[0]]
            broot[i] = self.ccopy[self.coff[i] + cstart[i, tid]]
        self.broot = broot

        self.parent0 = np.full(total, NO, dtype=np.int64)
        self.depth0 = np.zeros(total, dtype=np.int64)
        self.sz0 = np.zeros(total, dtype=np.int64)
        self.first0 = np.zeros(total, dtype=np.int64)
        eoff = np.zeros(k + 1, dtype=np.int64)
        for i in range(k):
            eoff[i + 1] = eoff[i] + max(1, 2 * (voff[i + 1] - voff[i]) - 1)
        self.eoff = eoff
        self.euler = np.zeros(int(eoff[-1]), dtype=np.int64)
        levels = np.zeros(k, dtype=np.int64)
        toff = np.zeros(k + 1, dtype=np.int64)
        for i in range(k):
            m = int(eoff[i + 1] - eoff[i])
            levels[i] = max(1, m.bit_length())
            toff[i + 1] = toff[i] + levels[i] * m
        self.levels = levels
        self.toff = toff
        self.table = np.zeros(int(toff[-1]), dtype=np.int64)
        m_max = int(np.max(eoff[1:] - eoff[:-1])) if k else 1
        self.log2 = np.zeros(m_max + 2, dtype=np.int64)
        for i in range(2, m_max + 2):
            self.log2[i] = self.log2[i >> 1] + 1
        _build_lca(self.voff, self.aptr, self.aidx, self.n_leaf, self.broot, self.parent0, self.depth0,
                   self.sz0, self.first0, self.eoff, self.euler, self.toff, self.levels,
                   self.table)

    def arrays(self):
        return (self.voff, self.aptr, self.aidx, self.ltax, self.mult, self.cstart,
                self.coff, self.ccopy, self.n_leaf, self.n_int, self.dsum, self.parent0,
                self.depth0, self.sz0, self.first0, self.eoff, self.euler, self.toff,
                self.levels, self.table, self.log2, self.broot)


@njit(cache=True)
def _build_lca(voff, aptr, aidx, n_leaf, broot, parent0, depth0, sz0, first0, eoff, euler,
               toff, levels, table):
    k = voff.shape[0] - 1
    for i in range(k):
        vo = voff[i]
        Vt = voff[i + 1] - vo
        root = broot[i]
        eo = eoff[i]
        # iterative Euler tour: stack of (vertex, next neighbour slot)
        stack_v = np.empty(Vt, dtype=np.int64)
        stack_j = np.empty(Vt, dtype=np.int64)
        top = 0
        stack_v[0] = root
        stack_j[0] = 0
        parent0[vo + root] = -1
        depth0[vo + root] = 0
        first0[vo + root] = 0
        pos = 0
        euler[eo] = root
        pos = 1
        while top >= 0:
            v = stack_v[top]
            j = stack_j[top]
            start = aptr[vo + v]
            deg = aptr[vo + v + 1] - start
            advanced = False
            while j < deg:
                w = aidx[start + j]
                j += 1
                if w != parent0[vo + v]:
                    stack_j[top] = j
                    parent0[vo + w] = v
                    depth0[vo + w] = depth0[vo + v] + 1
                    first0[vo + w] = pos
                    euler[eo + pos] = w
                    pos += 1
                    top += 1
                    stack_v[top] = w
                    stack_j[top] = 0
                    advanced = True
                    break
            if not advanced:
                if v < n_leaf[i]:
                    sz0[vo + v] = 1
                top -= 1
                if top >= 0:
                    p = stack_v[top]
                    sz0[vo + p] += sz0[vo + v]
                    euler[eo + pos] = p
                    pos += 1
        m = eoff[i + 1] - eo
        to = toff[i]
        for t in range(m):
            w = euler[eo + t]
            table[to + t] = (depth0[vo + w] << 32) | w
        for lev in range(1, levels[i]):
            half = 1 << (lev - 1)
            row = to + lev * m
            prev = to + (lev - 1) * m
            for t in range(m):
                a = table[prev + t]
                if t + half < m:
                    b = table[prev + t + half]
                    if b < a:
                        a = b
                table[row + t] = a


# -- per-tree helpers ------------------------------------------------------
#
# ``L`` bundles the LCA context of one gene tree under one rooting:
# (rt, br, vo, first0, depth0, table, to, m, log2) where ``rt`` is the
# root leaf of the scan and ``br`` the leaf the tables are rooted at.


@njit(cache=True, inline="always")
def _lca0(u, v, vo, first0, table, to, m, log2):
    """LCA under the base rooting; table entries are depth << 32 | vertex."""
    i = first0[vo + u]
    j = first0[vo + v]
    if i > j:
        i, j = j, i
    lev = log2[j - i + 1]
    a = table[to + lev * m + i]
    b = table[to + lev * m + j - (1 << lev) + 1]
    return (a if a < b else b) & _LOW


@njit(cache=True, inline="always")
def _lr(u, v, L):
    """LCA of u and v with the gene tree rooted at leaf rt; -1 is null.

    Re-rooting at a leaf other than the table root takes the deepest of
    lca(u, v), lca(u, rt), lca(v, rt)."""
    rt, br, vo, first0, depth0, table, to, m, log2 = L
    if u < 0:
        return v
    if v < 0:
        return u
    a = _lca0(u, v, vo, first0, table, to, m, log2)
    if rt == br:
        return a
    b = _lca0(u, rt, vo, first0, table, to, m, log2)
    c = _lca0(v, rt, vo, first0, table, to, m, log2)
    best = a
    if depth0[vo + b] > depth0[vo + best]:
        best = b
    if depth0[vo + c] > depth0[vo + best]:
        best = c
    return best


@njit(cache=True, inline="always")
def _fch(f, csize, nleaf, mv, sz, d):
    """Add (d=+1) or remove (d=-1) one supertree vertex from the vertex function.

    Returns the change in the number of matched gene-tree vertices."""
    if mv < nleaf:  # null or a leaf of the gene tree
        return 0
    if sz != csize[mv]:
        return 0
    old = f[mv]
    f[mv] = old + d
    if d > 0 and old == 0:
        return 1
    if d < 0 and old == 1:
        return -1
    return 0


@njit(cache=True, inline="always")
def _down(w, c, x, y, Mv, Sz, f, csize, nleaf, L):
    """x hangs above w; move it onto the edge above w's child c.

    w inherits x's old image and size, so only w's old entry and x's new
    entry change the vertex function."""
    d = _fch(f, csize, nleaf, Mv[w], Sz[w], -1)
    Mv[w] = Mv[x]
    Sz[w] = Sz[x]
    Mv[x] = _lr(Mv[c], Mv[y], L)
    Sz[x] = Sz[c] + Sz[y]
    d += _fch(f, csize, nleaf, Mv[x], Sz[x], 1)
    return d


@njit(cache=True, inline="always")
def _side(c, x, y, Mv, Sz, f, csize, nleaf, L):
    """x hangs above a child of b; move it above b's other child c."""
    d = _fch(f, csize, nleaf, Mv[x], Sz[x], -1)
    Mv[x] = _lr(Mv[c], Mv[y], L)
    Sz[x] = Sz[c] + Sz[y]
    d += _fch(f, csize, nleaf, Mv[x], Sz[x], 1)
    return d


@njit(cache=True, inline="always")
def _up(a, b, o, x, Mv, Sz, f, csize, nleaf, L):
    """x hangs above a, a child of b with sibling o; move it above b.

    x inherits b's old image and size (mirror image of :func:`_down`)."""
    d = _fch(f, csize, nleaf, Mv[x], Sz[x], -1)
    Mv[x] = Mv[b]
    Sz[x] = Sz[b]
    Mv[b] = _lr(Mv[a], Mv[o], L)
    Sz[b] = Sz[a] + Sz[o]
    d += _fch(f, csize, nleaf, Mv[b], Sz[b], 1)
    return d


@njit(cache=True, inline="always")
def _edge_slot(w, pw, xp, xq, spar, identity_slot):
    if (w == xp and pw == xq) or (w == xq and pw == xp):
        return identity_slot
    if spar[w] == pw:
        return w
    return pw


@njit(cache=True)
def _log_step(tr, n_tr, w, rf, case, f, fprev):
    """Write one trace row (w, rf, case, |G|, |L|, |H|) by diffing f against fprev."""
    g = 0
    l_ = 0
    h = 0
    for u in range(fprev.shape[0]):
        old = fprev[u]
        new = f[u]
        if old != new:
            h += 1
            if old == 0:
                g += 1
            elif new == 0:
                l_ += 1
        fprev[u] = new
    tr[n_tr, 0] = w
    tr[n_tr, 1] = rf
    tr[n_tr, 2] = case
    tr[n_tr, 3] = g
    tr[n_tr, 4] = l_
    tr[n_tr, 5] = h
    return n_tr + 1


@njit(cache=True)
def _sweep(top, x, y, xp, xq, Mv, Sz, xpar, xch0, xch1, f, csize, nleaf, L, spar, row,
           islot, hI, matched, trace, tr, n_tr, fprev):
    """
    With x hanging above ``top``, visit every edge below ``top`` in
    depth-first order and return with x above ``top`` again.  Each visited
    edge receives its distance in ``row``.  Returns (matched, n_tr).
    """
    w = top
    ascending = False
    while True:
        if not ascending and xch0[w] >= 0:
            c = xch0[w]
            matched += _down(w, c, x, y, Mv, Sz, f, csize, nleaf, L)
            case = 1
            w = c
            ascending = False
        elif w == top:
            break
        else:
            b = xpar[w]
            if w == xch0[b]:
                c = xch1[b]
                matched += _side(c, x, y, Mv, Sz, f, csize, nleaf, L)
                case = 2
                w = c
                ascending = False
            else:
                matched += _up(w, b, xch0[b], x, Mv, Sz, f, csize, nleaf, L)
                case = 3
                w = b
                ascending = True
        rf = hI - 2 * matched
        if case != 3:
            row[_edge_slot(w, xpar[w], xp, xq, spar, islot)] += rf
        if trace:
            n_tr = _log_step(tr, n_tr, w, rf, case, f, fprev)
    return matched, n_tr


@njit(cache=True)
def _collect(start, frm, xs, xp, xq, nbr, xpar, xch0, xch1, order):
    """Breadth-first listing of the supertree component hanging from ``start``
    (entered from ``frm``), with vertex ``xs`` suppressed between ``xp`` and ``xq``."""
    cnt = 1
    order[0] = start
    xpar[start] = frm
    i = 0
    while i < cnt:
        v = order[i]
        i += 1
        xch0[v] = -1
        xch1[v] = -1
        for j in range(3):
            w = nbr[v, j]
            if w < 0:
                continue
            if w == xs:
                w = xq if v == xp else xp
            if w == xpar[v]:
                continue
            if xch0[v] < 0:
                xch0[v] = w
            else:
                xch1[v] = w
            xpar[w] = v
            order[cnt] = w
            cnt += 1
    return cnt


@njit(cache=True)
def _fill(cnt, order, xch0, xch1, leaf_tax, mult_i, cstart_i, ccopy_i, Mv, Sz, f, csize,
          nleaf, L):
    """Bottom-up LCA images and restricted sizes for listed vertices; returns matched gain."""
    matched = 0
    for t in range(cnt - 1, -1, -1):
        v = order[t]
        if xch0[v] < 0:
            mv = -1
            sz = 0
            tid = leaf_tax[v]
            if tid >= 0:
                k = mult_i[tid]
                if k > 0:
                    # a label with k copies is the star of its copies
                    c0 = cstart_i[tid]
                    mv = ccopy_i[c0]
                    for j in range(1, k):
                        mv = _lr(mv, ccopy_i[c0 + j], L)
                    sz = k
        else:
            a = xch0[v]
            b = xch1[v]
            mv = _lr(Mv[a], Mv[b], L)
            sz = Sz[a] + Sz[b]
        Mv[v] = mv
        Sz[v] = sz
        matched += _fch(f, csize, nleaf, mv, sz, 1)
    return matched


@njit(cache=True)
def _prepare(i, rtax, bank, f, csize):
    """
    Root gene tree ``i`` at the first copy of taxon ``rtax``: fill the
    re-rooted cluster sizes, clear ``f`` and account for the duplicated
    root label.  Returns (L, nleaf, h + |I(T)|, matched).
    """
    (voff, aptr, aidx, ltax, mult, cstart, coff, ccopy, n_leaf, n_int, dsum, parent0,
     depth0, sz0, first0, eoff, euler, toff, levels, table, log2, broot) = bank
    vo = voff[i]
    Vt = voff[i + 1] - vo
    nleaf = n_leaf[i]
    rt = ccopy[coff[i] + cstart[i, rtax]]
    for u in range(Vt):
        csize[u] = sz0[vo + u]
        f[u] = 0
    v = rt
    while parent0[vo + v] >= 0:
        p = parent0[vo + v]
        csize[p] = nleaf - sz0[vo + v]
        v = p
    matched = 0
    if mult[i, rtax] > 1:
        # the remaining copies of the root label hang together below the
        # root's neighbour, whose cluster is everything but the root leaf
        wr = aidx[aptr[vo + rt]]
        f[wr] += 1
        matched = 1
    eo = eoff[i]
    L = (rt, broot[i], vo, first0, depth0, table, toff[i], eoff[i + 1] - eo, log2)
    hI = nleaf - 2 - dsum[i] + n_int[i]
    return L, nleaf, hI, matched


@njit(cache=True)
def _scan(i, x, y, rS, bank, nbr, leaf_tax, spar, row, islot,
          Mv, Sz, xpar, xch0, xch1, order, f, csize, trace, tr):
    """
    Regraft the component of ``y`` (cut from ``x``) onto every edge of the
    component of ``x`` for gene tree ``i``, rebuilding all state from
    scratch; ``rS`` is a supertree leaf of the host component whose taxon
    occurs in the gene tree.  With ``x < 0`` only the distance of the
    unmodified supertree is computed.

    ``row[e] += rf`` for each regraft edge id ``e``.  Returns the distance
    at the first position (or of the unmodified tree).
    """
    mult_i = bank[4][i]
    cstart_i = bank[5][i]
    coff = bank[6]
    ccopy_i = bank[7][coff[i]:coff[i + 1]]
    L, nleaf, hI, matched = _prepare(i, leaf_tax[rS], bank, f, csize)

    xp = -1
    xq = -1
    if x >= 0:
        for j in range(3):
            w = nbr[x, j]
            if w != y:
                if xp < 0:
                    xp = w
                else:
                    xq = w
        cnt = _collect(y, x, -1, -1, -1, nbr, xpar, xch0, xch1, order)
        matched += _fill(cnt, order, xch0, xch1, leaf_tax, mult_i, cstart_i, ccopy_i, Mv, Sz,
                         f, csize, nleaf, L)

    m1 = nbr[rS, 0]
    if m1 == x:
        m1 = xq if rS == xp else xp
    cnt = _collect(m1, rS, x, xp, xq, nbr, xpar, xch0, xch1, order)
    matched += _fill(cnt, order, xch0, xch1, leaf_tax, mult_i, cstart_i, ccopy_i, Mv, Sz, f,
                     csize, nleaf, L)
    if x < 0:
        return hI - 2 * matched

    # pruned component hung above m1
    Mv[x] = _lr(Mv[m1], Mv[y], L)
    Sz[x] = Sz[m1] + Sz[y]
    matched += _fch(f, csize, nleaf, Mv[x], Sz[x], 1)
    rf = hI - 2 * matched
    row[_edge_slot(m1, rS, xp, xq, spar, islot)] += rf
    n_tr = 0
    fprev = f[:0]
    if trace:
        fprev = f[:nleaf + bank[9][i]].copy()
        n_tr = _log_step(tr, n_tr, m1, rf, 0, f, fprev)
    matched, n_tr = _sweep(m1, x, y, xp, xq, Mv, Sz, xpar, xch0, xch1, f, csize, nleaf, L,
                           spar, row, islot, hI, matched, trace, tr, n_tr, fprev)
    if trace:
        tr[n_tr, 0] = -1
    return rf


@njit(cache=True)
def _scan_from_base(x, y, bMv, bSz, bpar, bch0, bch1, bf, top0, bmatched, nleaf, L, hI,
                    spar, row, islot, Mv, Sz, xpar, xch0, xch1, f, csize):
    """
    Same as :func:`_scan` for a cut whose pruned side hangs below ``x`` in
    the precomputed base rooting: the base state of the unmodified tree is
    the identity regraft, so the sweep starts there without a rebuild.
    """
    V = bMv.shape[0]
    Mv[:V] = bMv
    Sz[:V] = bSz
    xpar[:V] = bpar
    xch0[:V] = bch0
    xch1[:V] = bch1
    f[: bf.shape[0]] = bf
    p = bpar[x]
    q = bch0[x] if bch1[x] == y else bch1[x]
    # suppress x: q becomes a child of p
    xpar[q] = p
    if xch0[p] == x:
        xch0[p] = q
    elif xch1[p] == x:
        xch1[p] = q
    top = q if top0 == x else top0
    matched = bmatched
    row[islot] += hI - 2 * matched
    tr = np.empty((1, 6), dtype=np.int64)
    matched, _ = _sweep(q, x, y, p, q, Mv, Sz, xpar, xch0, xch1, f, csize, nleaf, L, spar,
                        row, islot, hI, matched, False, tr, 0, f[:0])
    cur = q
    while cur != top:
        b = xpar[cur]
        o = xch0[b] if xch1[b] == cur else xch1[b]
        matched += _up(cur, b, o, x, Mv, Sz, f, csize, nleaf, L)
        row[_edge_slot(b, xpar[b], p, q, spar, islot)] += hI - 2 * matched
        matched += _down(b, o, x, y, Mv, Sz, f, csize, nleaf, L)
        row[_edge_slot(o, b, p, q, spar, islot)] += hI - 2 * matched
        matched, _ = _sweep(o, x, y, p, q, Mv, Sz, xpar, xch0, xch1, f, csize, nleaf, L,
                            spar, row, islot, hI, matched, False, tr, 0, f[:0])
        matched += _up(o, b, cur, x, Mv, Sz, f, csize, nleaf, L)
        cur = b


# -- drivers ---------------------------------------------------------------


@njit(cache=True)
def _tree_pass(i, bank, nbr, leaf_tax, spar, sorder, sroot, cnt, best, best_up):
    """Per-tree labels below/above every supertree vertex (packing rooting)."""
    mult = bank[4]
    nt = mult.shape[1]
    V = nbr.shape[0]
    big = 2 * nt
    for t in range(V - 1, -1, -1):
        v = sorder[t]
        tid = leaf_tax[v]
        if tid >= 0:
            k = mult[i, tid]
            if k > 0:
                cnt[v] = 1
                best[v] = tid if k == 1 else nt + tid
            else:
                cnt[v] = 0
                best[v] = big
        elif nbr[v, 1] < 0:  # leaf whose label no gene tree carries
            cnt[v] = 0
            best[v] = big
        else:
            c = 0
            bb = big
            for j in range(3):
                w = nbr[v, j]
                if w >= 0 and w != spar[v]:
                    c += cnt[w]
                    if best[w] < bb:
                        bb = best[w]
            cnt[v] = c
            best[v] = bb
    best_up[sroot] = big
    for t in range(1, V):
        v = sorder[t]
        p = spar[v]
        bb = best_up[p]
        for j in range(3):
            w = nbr[p, j]
            if w >= 0 and w != v and w != spar[p]:
                if best[w] < bb:
                    bb = best[w]
        best_up[v] = bb
    return big


@njit(cache=True)
def _rank_leaf(rank, nt, tax_leaf):
    return tax_leaf[rank - nt] if rank >= nt else tax_leaf[rank]


@njit(cache=True)
def spr_scores(bank, nbr, leaf_tax, tax_leaf, spar, sorder, sroot, scores, const, base_rf):
    """
    Accumulate, over every gene tree, the distance of every SPR move.

    ``scores[c, 0, e]``: prune the subtree below ``c`` (packing rooting),
    regraft on edge ``e``.  ``scores[c, 1, e]``: prune everything above
    ``c`` and regraft inside the subtree of ``c``.  Column ``V`` collects
    the position that reproduces the supertree.  Trees whose labels lie on
    one side of a cut contribute a constant, added to ``const[c, dir]``.
    """
    voff = bank[0]
    mult = bank[4]
    n_leaf = bank[8]
    broot = bank[21]
    ltax = bank[3]
    nt = mult.shape[1]
    k = voff.shape[0] - 1
    V = nbr.shape[0]
    Vt_max = 1
    for i in range(k):
        if voff[i + 1] - voff[i] > Vt_max:
            Vt_max = voff[i + 1] - voff[i]
    Mv = np.empty(V, dtype=np.int64)
    Sz = np.empty(V, dtype=np.int64)
    xpar = np.empty(V, dtype=np.int64)
    xch0 = np.empty(V, dtype=np.int64)
    xch1 = np.empty(V, dtype=np.int64)
    bMv = np.empty(V, dtype=np.int64)
    bSz = np.empty(V, dtype=np.int64)
    bpar = np.empty(V, dtype=np.int64)
    bch0 = np.empty(V, dtype=np.int64)
    bch1 = np.empty(V, dtype=np.int64)
    order = np.empty(V, dtype=np.int64)
    f = np.empty(Vt_max, dtype=np.int64)
    bf = np.empty(Vt_max, dtype=np.int64)
    csize = np.empty(Vt_max, dtype=np.int64)
    cnt = np.empty(V, dtype=np.int64)
    best = np.empty(V, dtype=np.int64)
    best_up = np.empty(V, dtype=np.int64)
    tr = np.empty((1, 6), dtype=np.int64)
    dummy = np.zeros(V + 1, dtype=np.int64)
    for i in range(k):
        if n_leaf[i] <= 3:
            base_rf[i] = 0
            continue
        _tree_pass(i, bank, nbr, leaf_tax, spar, sorder, sroot, cnt, best, best_up)
        total = cnt[sroot]
        # base state of the unmodified supertree rooted at the leaf the
        # gene tree's tables are rooted at
        r0 = tax_leaf[ltax[voff[i] + broot[i]]]
        rf0 = _scan(i, -1, -1, r0, bank, nbr, leaf_tax, spar, dummy, V, bMv, bSz, bpar, bch0,
                    bch1, order, bf, csize, False, tr)
        base_rf[i] = rf0
        L, nleaf, hI, bmatched = _prepare(i, leaf_tax[r0], bank, f, csize)
        bmatched = (hI - rf0) // 2
        Vt = voff[i + 1] - voff[i]
        bfv = bf[:Vt]
        bpar[r0] = -1
        top0 = nbr[r0, 0]
        for c in range(V):
            if c == sroot:
                continue
            p = spar[c]
            below = cnt[c]
            above = total - below
            for d in range(2):
                if d == 1 and leaf_tax[c] >= 0:
                    break
                if d == 1 and nbr[c, 1] < 0:
                    break
                if below == 0 or above == 0:
                    const[c, d] += rf0
                    continue
                x = p if d == 0 else c
                y = c if d == 0 else p
                if bpar[y] == x:
                    _scan_from_base(x, y, bMv, bSz, bpar, bch0, bch1, bfv, top0, bmatched,
                                    nleaf, L, hI, spar, scores[c, d], V, Mv, Sz, xpar, xch0,
                                    xch1, f, csize)
                else:
                    rS = _rank_leaf(best_up[c] if d == 0 else best[c], nt, tax_leaf)
                    _scan(i, x, y, rS, bank, nbr, leaf_tax, spar, scores[c, d], V, Mv, Sz,
                          xpar, xch0, xch1, order, f, csize, False, tr)
                    # _scan re-roots csize; restore the base rooting
                    L, nleaf, hI, _m = _prepare(i, leaf_tax[r0], bank, f, csize)


@njit(cache=True)
def scan_single(i, x, y, rS, bank, nbr, leaf_tax, spar, trace):
    """One scan, returning the per-edge row and the step trace."""
    voff = bank[0]
    V = nbr.shape[0]
    Vt = voff[i + 1] - voff[i]
    row = np.zeros(V + 1, dtype=np.int64)
    Mv = np.empty(V, dtype=np.int64)
    Sz = np.empty(V, dtype=np.int64)
    xpar = np.empty(V, dtype=np.int64)
    xch0 = np.empty(V, dtype=np.int64)
    xch1 = np.empty(V, dtype=np.int64)
    order = np.empty(V, dtype=np.int64)
    f = np.empty(Vt, dtype=np.int64)
    csize = np.empty(Vt, dtype=np.int64)
    tr = np.full((4 * V + 4, 6), -1, dtype=np.int64)
    first = _scan(i, x, y, rS, bank, nbr, leaf_tax, spar, row, V, Mv, Sz, xpar, xch0, xch1,
                  order, f, csize, trace, tr)
    return first, row, tr


@njit(cache=True)
def rf_single(i, rS, bank, nbr, leaf_tax, spar):
    voff = bank[0]
    V = nbr.shape[0]
    Vt = voff[i + 1] - voff[i]
    Mv = np.empty(V, dtype=np.int64)
    Sz = np.empty(V, dtype=np.int64)
    xpar = np.empty(V, dtype=np.int64)
    xch0 = np.empty(V, dtype=np.int64)
    xch1 = np.empty(V, dtype=np.int64)
    order = np.empty(V, dtype=np.int64)
    f = np.empty(Vt, dtype=np.int64)
    csize = np.empty(Vt, dtype=np.int64)
    tr = np.empty((1, 6), dtype=np.int64)
    dummy = np.zeros(V + 1, dtype=np.int64)
    return _scan(i, -1, -1, rS, bank, nbr, leaf_tax, spar, dummy, V, Mv, Sz, xpar, xch0, xch1,
                 order, f, csize, False, tr)


@njit(cache=True)
def cut_scores(bank, nbr, leaf_tax, spar, x, y, row):
    """
    Summed distance over all gene trees of regrafting the ``y`` side of
    the cut ``{x, y}`` onto each edge of the ``x`` side (``row[V]`` is the
    unmodified tree).  Used for leaf insertion, where ``y`` is a new leaf.
    """
    voff = bank[0]
    mult = bank[4]
    n_leaf = bank[8]
    nt = mult.shape[1]
    k = voff.shape[0] - 1
    V = nbr.shape[0]
    Vt_max = 1
    for i in range(k):
        if voff[i + 1] - voff[i] > Vt_max:
            Vt_max = voff[i + 1] - voff[i]
    Mv = np.empty(V, dtype=np.int64)
    Sz = np.empty(V, dtype=np.int64)
    xpar = np.empty(V, dtype=np.int64)
    xch0 = np.empty(V, dtype=np.int64)
    xch1 = np.empty(V, dtype=np.int64)
    order = np.empty(V, dtype=np.int64)
    f = np.empty(Vt_max, dtype=np.int64)
    csize = np.empty(Vt_max, dtype=np.int64)
    tr = np.empty((1, 6), dtype=np.int64)
    dummy = np.zeros(V + 1, dtype=np.int64)
    iny = np.zeros(V, dtype=np.bool_)
    cnt = _collect(y, x, -1, -1, -1, nbr, xpar, xch0, xch1, order)
    for t in range(cnt):
        iny[order[t]] = True
    valid = np.zeros(V + 1, dtype=np.bool_)
    for e in range(V):
        valid[e] = spar[e] >= 0 and e != x and spar[e] != x and not iny[e]
    valid[V] = True
    for i in range(k):
        if n_leaf[i] <= 3:
            continue
        big = 2 * nt
        bx = big
        rx = -1
        any_y = False
        for v in range(V):
            tid = leaf_tax[v]
            if tid < 0 or mult[i, tid] == 0:
                continue
            if iny[v]:
                any_y = True
            else:
                rank = tid if mult[i, tid] == 1 else nt + tid
                if rank < bx:
                    bx = rank
                    rx = v
        if rx < 0 or not any_y:
            r = rx
            if r < 0:
                for v in range(V):
                    tid = leaf_tax[v]
                    if tid >= 0 and mult[i, tid] > 0:
                        r = v
                        break
            rf0 = _scan(i, -1, -1, r, bank, nbr, leaf_tax, spar, dummy, V, Mv, Sz, xpar, xch0,
                        xch1, order, f, csize, False, tr)
            for e in range(V + 1):
                if valid[e]:
                    row[e] += rf0
        else:
            _scan(i, x, y, rx, bank, nbr, leaf_tax, spar, row, V, Mv, Sz, xpar, xch0, xch1,
                  order, f, csize, False, tr)
    return valid
