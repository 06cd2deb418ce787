"""Constant-time LCA queries on a rooted tree via Euler tour + sparse table."""

from __future__ import annotations

import numpy as np

from .tree import RootedTree


class LcaIndex:
    """
    Euler tour of ``tree`` with a sparse-table range-minimum structure.

    Build is O(n log n); :meth:`lca` is O(1).
    """

    __slots__ = ("euler", "first", "depth", "table", "log2")

    def __init__(self, tree: RootedTree):
        depth = tree.depths()
        euler = []
        first = [-1] * tree.n_vertices
        stack = [(tree.root, 0)]
        while stack:
            v, i = stack.pop()
            if first[v] < 0:
                first[v] = len(euler)
            euler.append(v)
            kids = tree.children[v]
            if i < len(kids):
                stack.append((v, i + 1))
                stack.append((kids[i], 0))
        self.euler = np.asarray(euler, dtype=np.int64)
        self.first = np.asarray(first, dtype=np.int64)
        self.depth = np.asarray(depth, dtype=np.int64)

        m = len(euler)
        levels = max(1, m.bit_length())
        table = np.empty((levels, m), dtype=np.int64)
        table[0] = self.euler
        for k in range(1, levels):
            half = 1 << (k - 1)
            prev = table[k - 1]
            a = prev[: m - half]
            b = prev[half:]
            table[k, : m - half] = np.where(self.depth[a] <= self.depth[b], a, b)
            table[k, m - half:] = prev[m - half:]
        self.table = table
        self.log2 = np.zeros(m + 1, dtype=np.int64)
        for i in range(2, m + 1):
            self.log2[i] = self.log2[i >> 1] + 1

    def lca(self, u: int, v: int) -> int:
        i, j = self.first[u], self.first[v]
        if i > j:
            i, j = j, i
        k = self.log2[j - i + 1]
        a = self.table[k, i]
        b = self.table[k, j - (1 << k) + 1]
        return int(a if self.depth[a] <= self.depth[b] else b)

    def lca_many(self, vertices) -> int:
        it = iter(vertices)
        out = next(it)
        for v in it:
            out = self.lca(out, v)
        return out
