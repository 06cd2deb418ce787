"""
Newick reading and writing for unrooted (mul-)trees.

Branch lengths, internal node labels and bracketed comments are read and
discarded.  A top-level bifurcation is treated as an artefact of the text
format: the implied root is suppressed so the result is unrooted.  Repeated
leaf labels are allowed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .tree import Tree, _suppress_and_build

_SPECIAL = set("()[],:;'")


class NewickError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass
class TreeDocument:
    trees: list[Tree] = field(default_factory=list)
    source_lines: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.trees)

    def __iter__(self):
        return iter(self.trees)

    def __getitem__(self, i):
        return self.trees[i]


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str):
        raise NewickError(message, self.line, self.col)

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def skip(self):
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace():
                self.advance()
            elif ch == "[":
                line, col = self.line, self.col
                while self.pos < len(self.text) and self.text[self.pos] != "]":
                    self.advance()
                if self.pos >= len(self.text):
                    raise NewickError("unterminated comment", line, col)
                self.advance()
            else:
                break

    def label(self) -> str:
        """Read an optional (possibly quoted) label; '' if absent."""
        if self.peek() == "'":
            self.advance()
            out = []
            while True:
                if self.pos >= len(self.text):
                    self.error("unterminated quoted label")
                ch = self.advance()
                if ch == "'":
                    if self.pos < len(self.text) and self.text[self.pos] == "'":
                        out.append(self.advance())
                        continue
                    return "".join(out)
                out.append(ch)
        start = self.pos
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in _SPECIAL or ch.isspace():
                break
            self.advance()
        return self.text[start:self.pos]

    def branch_length(self):
        if self.peek() == ":":
            self.advance()
            self.skip()
            raw = self.label()
            try:
                float(raw)
            except ValueError:
                self.error(f"bad branch length {raw!r}")


def _parse_one(rd: _Reader):
    """Parse one tree up to and including ';'.  Returns (n, edges, labels)."""
    edges = []
    labels = {}
    n = 0
    # stack holds the internal vertex ids whose child lists are still open
    stack = []
    root = None

    def new_vertex():
        nonlocal n
        n += 1
        return n - 1

    expect_item = True
    while True:
        ch = rd.peek()
        if ch == "":
            rd.error("missing ';'")
        if expect_item:
            if ch == "(":
                rd.advance()
                v = new_vertex()
                if stack:
                    edges.append((stack[-1], v))
                elif root is None:
                    root = v
                else:
                    rd.error("unexpected '('")
                stack.append(v)
                continue
            line, col = rd.line, rd.col
            name = rd.label()
            if name == "":
                raise NewickError("empty label", line, col)
            v = new_vertex()
            labels[v] = name
            if stack:
                edges.append((stack[-1], v))
            elif root is None:
                root = v
            else:
                rd.error("unexpected label")
            rd.branch_length()
            expect_item = False
            continue
        if ch == ",":
            if not stack:
                rd.error("',' outside parentheses")
            rd.advance()
            expect_item = True
        elif ch == ")":
            if not stack:
                rd.error("unbalanced ')'")
            rd.advance()
            stack.pop()
            if rd.peek() not in _SPECIAL or rd.peek() == "'":
                rd.label()  # internal node label, discarded
            rd.branch_length()
        elif ch == ";":
            if stack:
                rd.error("unbalanced '('")
            rd.advance()
            break
        else:
            rd.error(f"unexpected character {ch!r}")
    if not labels:
        rd.error("tree has no leaves")
    return n, edges, labels


def _to_unrooted(n, edges, labels) -> Tree:
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    # Internal vertices of degree <= 2 (including the implied root) are
    # suppressed; unlabelled tips such as "()" are dropped.
    return _suppress_and_build(adj, labels, set(range(n)))


def parse_newick(text: str) -> TreeDocument:
    """Parse one or more ';'-terminated Newick trees."""
    rd = _Reader(text)
    doc = TreeDocument()
    while rd.peek() != "":
        line = rd.line
        n, edges, labels = _parse_one(rd)
        doc.trees.append(_to_unrooted(n, edges, labels))
        doc.source_lines.append(line)
    return doc


def read_newick(path: str | os.PathLike) -> TreeDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_newick(fh.read())


def parse_tree(text: str) -> Tree:
    """Parse exactly one tree."""
    doc = parse_newick(text)
    if len(doc) != 1:
        raise ValueError(f"expected one tree, found {len(doc)}")
    return doc.trees[0]


def _quote(label) -> str:
    label = str(label)
    if label and not any(ch in _SPECIAL or ch.isspace() for ch in label):
        return label
    return "'" + label.replace("'", "''") + "'"


def write_newick(tree: Tree) -> str:
    """
    Deterministic Newick string for an unrooted tree.

    The tree is written from the internal vertex adjacent to the leaf with
    the smallest label, which yields a top-level multifurcation whenever
    the tree has an internal vertex.  Subtrees are ordered by the smallest
    label they contain.
    """
    if tree.n_vertices == 1:
        return _quote(tree.labels[0]) + ";"
    if tree.n_vertices == 2:
        a, b = sorted(map(str, tree.leaf_labels))
        return f"({_quote(a)},{_quote(b)});"
    low = min(str(tree.labels[v]) for v in tree.leaves)
    # copies of the smallest label compete so mul-tree output is canonical too
    starts = {tree.adj[v][0] for v in tree.leaves if str(tree.labels[v]) == low}
    return min(_write_from(tree, start) for start in starts)


def _write_from(tree: Tree, start: int) -> str:
    # iterative post-order with memoised (min label, text) per vertex
    parent = {start: -1}
    order = []
    stack = [start]
    while stack:
        v = stack.pop()
        order.append(v)
        for w in tree.adj[v]:
            if w != parent[v]:
                parent[w] = v
                stack.append(w)
    best = {}
    text = {}
    for v in reversed(order):
        if v < tree.n_leaves:
            best[v] = str(tree.labels[v])
            text[v] = _quote(tree.labels[v])
            continue
        kids = sorted((w for w in tree.adj[v] if w != parent[v]), key=lambda w: (best[w], text[w]))
        best[v] = best[kids[0]]
        text[v] = "(" + ",".join(text[w] for w in kids) + ")"
    return text[start] + ";"


def write_trees(trees, path: str | os.PathLike):
    with open(path, "w", encoding="utf-8") as fh:
        for tree in trees:
            fh.write(write_newick(tree) + "\n")
