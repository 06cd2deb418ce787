"""
Gene-tree simulation: Yule species trees, duplication-loss evolution inside
the species tree, subtree-transfer LGT, random taxon deletion, and the
average topological error between a true and an estimated species tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rf import rf_unrooted
from .tree import Tree, _suppress_and_build, restrict

CONDITIONS = ("none", "dl", "lgt", "both")


# -- rooted trees with node times -------------------------------------------


@dataclass
class TimedTree:
    """Rooted binary tree with node times measured from the root (time 0)."""

    parent: list[int]
    children: list[list[int]]
    labels: list
    times: list[float]
    root: int = 0

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    @property
    def leaves(self) -> list[int]:
        return [v for v in range(self.n_vertices) if not self.children[v]]

    def preorder(self) -> list[int]:
        out = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    def to_unrooted(self) -> Tree:
        """Unrooted tree on the leaves; the degree-2 root is suppressed."""
        adj = [set() for _ in range(self.n_vertices)]
        for v, p in enumerate(self.parent):
            if p >= 0:
                adj[v].add(p)
                adj[p].add(v)
        labels = {v: self.labels[v] for v in self.leaves}
        return _suppress_and_build(adj, labels, set(range(self.n_vertices)))


def yule_tree(n: int, height: float, rng: np.random.Generator, labels=None) -> TimedTree:
    """
    Pure-birth tree with ``n`` leaves, rescaled so every leaf sits at ``height``.

    The root splits at time 0; while fewer than ``n`` lineages exist, a
    uniformly chosen lineage splits after an exponential waiting time with
    rate equal to the number of lineages.  One more waiting time ends the
    process.
    """
    if n < 2:
        raise ValueError("a Yule tree needs at least two leaves")
    if height <= 0:
        raise ValueError("height must be positive")
    parent = [-1, 0, 0]
    children = [[1, 2], [], []]
    times = [0.0, math.nan, math.nan]
    active = [1, 2]
    t = 0.0
    while len(active) < n:
        t += rng.exponential(1.0 / len(active))
        v = active.pop(int(rng.integers(len(active))))
        times[v] = t
        for _ in range(2):
            parent.append(v)
            children.append([])
            times.append(math.nan)
            children[v].append(len(parent) - 1)
            active.append(len(parent) - 1)
    t += rng.exponential(1.0 / len(active))
    for v in active:
        times[v] = t
    scale = height / t
    times = [x * scale for x in times]
    for v in active:
        times[v] = height  # exact, so the tree is ultrametric without rounding
    tree = TimedTree(parent, children, [None] * len(parent), times)
    names = labels if labels is not None else [f"t{i + 1}" for i in range(n)]
    for i, v in enumerate(v for v in tree.preorder() if not children[v]):
        tree.labels[v] = names[i]
    return tree


# -- duplication and loss ---------------------------------------------------


@dataclass
class GeneTreeRecord:
    """
    A simulated gene tree with its history.

    ``events`` lists ``(kind, detail)`` pairs in order of occurrence;
    ``detail`` is a dict of scalar values.  ``rooted`` is the rooted gene
    tree before deletion; ``tree`` is the unrooted final gene tree.
    """

    tree: Tree
    rooted: TimedTree | None = None
    events: list[tuple[str, dict]] = field(default_factory=list)
    speciations: int = 0
    redraws: int = 0

    def count(self, kind: str) -> int:
        return sum(1 for k, _ in self.events if k == kind)


def _grow_gene(species: TimedTree, dl_rate: float, rng: np.random.Generator):
    """One draw of the gene process; returns the full (unpruned) history."""
    parent: list[int] = []
    children: list[list[int]] = []
    labels: list = []
    times: list[float] = []
    alive: list[bool] = []
    events: list[tuple[str, dict]] = []
    speciations = 0

    def node(p, t, label=None, ok=True):
        parent.append(p)
        children.append([])
        labels.append(label)
        times.append(t)
        alive.append(ok)
        if p >= 0:
            children[p].append(len(parent) - 1)
        return len(parent) - 1

    root = node(-1, 0.0)
    # each pending lineage: (gene parent, species node at branch end, start time)
    pending = [(root, c, 0.0) for c in species.children[species.root]]
    speciations += 1
    total = 2.0 * dl_rate
    while pending:
        gp, sp, t = pending.pop()
        end = species.times[sp]
        if total > 0:
            t += rng.exponential(1.0 / total)
        else:
            t = math.inf
        if t < end:
            if rng.random() < 0.5:
                g = node(gp, t)
                events.append(("duplication", {"species": _clade_name(species, sp), "time": round(t, 6)}))
                pending.append((g, sp, t))
                pending.append((g, sp, t))
            else:
                node(gp, t, ok=False)
                events.append(("loss", {"species": _clade_name(species, sp), "time": round(t, 6)}))
            continue
        if not species.children[sp]:
            node(gp, end, label=species.labels[sp])
            continue
        g = node(gp, end)
        speciations += 1
        for c in species.children[sp]:
            pending.append((g, c, end))
    full = TimedTree(parent, children, labels, times, root)
    return full, alive, events, speciations


def _clade_name(species: TimedTree, v: int) -> str:
    if not species.children[v]:
        return str(species.labels[v])
    return f"node{v}"


def _prune_dead(full: TimedTree, alive: list[bool]) -> TimedTree | None:
    """Drop lost lineages and suppress the resulting unary vertices."""
    n = full.n_vertices
    keep = [False] * n
    for v in reversed(full.preorder()):
        if not full.children[v]:
            keep[v] = alive[v] and full.labels[v] is not None
        else:
            keep[v] = any(keep[c] for c in full.children[v])
    if not keep[full.root]:
        return None
    # rebuild with unary vertices suppressed
    parent: list[int] = []
    children: list[list[int]] = []
    labels: list = []
    times: list[float] = []

    def descend(v):
        while True:
            kids = [c for c in full.children[v] if keep[c]]
            if len(kids) == 1:
                v = kids[0]
            else:
                return v, kids

    stack = [(full.root, -1)]
    while stack:
        v, p = stack.pop()
        v, kids = descend(v)
        i = len(parent)
        parent.append(p)
        children.append([])
        labels.append(full.labels[v] if not kids else None)
        times.append(full.times[v])
        if p >= 0:
            children[p].append(i)
        for c in reversed(kids):
            stack.append((c, i))
    return TimedTree(parent, children, labels, times, 0)


def evolve_duplication_loss(species: TimedTree, dl_rate: float, rng: np.random.Generator,
                            min_leaves: int = 4, max_redraws: int = 10_000) -> GeneTreeRecord:
    """
    Evolve one gene family down ``species``.

    Along every branch each gene lineage duplicates and is lost at rate
    ``dl_rate`` each; at internal species nodes every lineage speciates.
    Draws with fewer than ``min_leaves`` surviving copies are discarded and
    redrawn.  The event log keeps every duplication and loss of the
    accepted draw, including those on lineages that later died out.
    """
    if dl_rate < 0:
        raise ValueError("rate must be non-negative")
    for attempt in range(max_redraws):
        full, alive, events, n_spec = _grow_gene(species, dl_rate, rng)
        pruned = _prune_dead(full, alive)
        if pruned is None or len(pruned.leaves) < min_leaves:
            continue
        return GeneTreeRecord(pruned.to_unrooted(), pruned, events, n_spec, attempt)
    raise RuntimeError("gene family went extinct in every draw")


# -- lateral transfer -------------------------------------------------------


def _ancestors(tree: TimedTree, v: int) -> set[int]:
    out = set()
    while tree.parent[v] >= 0:
        v = tree.parent[v]
        out.add(v)
    return out


def _subtree(tree: TimedTree, v: int) -> set[int]:
    out = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for c in tree.children[u]:
            out.add(c)
            stack.append(c)
    return out


def lgt_legal(tree: TimedTree, c: int, b: int) -> bool:
    """
    May the subtree at ``c`` be moved onto the edge above ``b``?

    The edge must not lie on the path from the root to ``c``, must not be
    inside the moved subtree, and must change the topology (the edge above
    c's sibling would give the same tree back).
    """
    if c == tree.root or b == tree.root:
        return False
    if b in _subtree(tree, c) or b in _ancestors(tree, c):
        return False
    return tree.parent[b] != tree.parent[c]


def transfer_subtree(tree: TimedTree, c: int, b: int) -> TimedTree:
    """Prune the subtree at ``c`` and regraft it on the edge above ``b``."""
    if not lgt_legal(tree, c, b):
        raise ValueError(f"illegal transfer of {c} onto the edge above {b}")
    parent = list(tree.parent)
    children = [list(k) for k in tree.children]
    times = list(tree.times)
    p = parent[c]
    sib = next(k for k in children[p] if k != c)
    g = parent[p]
    # remove p, joining its parent to c's sibling
    root = tree.root
    if g < 0:
        root = sib
        parent[sib] = -1
    else:
        children[g][children[g].index(p)] = sib
        parent[sib] = g
    # reuse p to subdivide the edge above b
    a = parent[b]
    children[a][children[a].index(b)] = p
    parent[p] = a
    children[p] = [b, c]
    parent[b] = p
    parent[c] = p
    times[p] = (times[a] + times[b]) / 2
    return TimedTree(parent, children, list(tree.labels), times, root)


def apply_lgt(rec: GeneTreeRecord, count: int, rng: np.random.Generator,
              max_tries: int = 10_000) -> GeneTreeRecord:
    """
    Apply ``count`` subtree transfers to the rooted gene tree of ``rec``.

    Each transfer is drawn uniformly from all legal (subtree, edge) pairs by
    rejection.  When no legal pair exists the event is skipped and logged
    as ``lgt_skipped``.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    tree = rec.rooted
    events = list(rec.events)
    for _ in range(count):
        n = tree.n_vertices
        done = False
        for _ in range(max_tries):
            c = int(rng.integers(n))
            b = int(rng.integers(n))
            if lgt_legal(tree, c, b):
                leaves = sorted(str(tree.labels[v]) for v in _subtree(tree, c) if not tree.children[v])
                events.append(("transfer", {"donor": c, "recipient": b,
                                            "subtree": ",".join(leaves)}))
                tree = transfer_subtree(tree, c, b)
                done = True
                break
        if not done:
            events.append(("lgt_skipped", {"reason": "no legal transfer"}))
    return GeneTreeRecord(tree.to_unrooted(), tree, events, rec.speciations, rec.redraws)


# -- missing data and estimation error ----------------------------------------


def delete_taxa(gene: Tree, fraction: float, rng: np.random.Generator) -> tuple[Tree, list]:
    """
    Remove every copy of a random set of ``floor(fraction * |M|)`` species.

    Returns the restricted tree and the sorted list of removed labels.
    """
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must lie in [0, 1]")
    labels = sorted(gene.label_set, key=str)
    m = math.floor(fraction * len(labels))
    if m >= len(labels):
        raise ValueError("deletion would remove every label")
    if m == 0:
        return gene, []
    gone = sorted((labels[i] for i in rng.choice(len(labels), m, replace=False)), key=str)
    return restrict(gene, set(labels) - set(gone)), gone


def random_nni(tree: Tree, rng: np.random.Generator) -> Tree:
    """One nearest-neighbour interchange across a uniformly chosen internal edge."""
    inner = tree.internal_edges()
    if not inner:
        return tree
    u, v = inner[int(rng.integers(len(inner)))]
    a_opts = [w for w in tree.adj[u] if w != v]
    b_opts = [w for w in tree.adj[v] if w != u]
    a = a_opts[int(rng.integers(len(a_opts)))]
    b = b_opts[int(rng.integers(len(b_opts)))]
    adj = [list(x) for x in tree.adj]
    adj[u][adj[u].index(a)] = b
    adj[v][adj[v].index(b)] = a
    adj[a][adj[a].index(u)] = v
    adj[b][adj[b].index(v)] = u
    return Tree(adj, tree.labels)


# -- evaluation ---------------------------------------------------------------


def ate(true_tree: Tree, estimate: Tree) -> float:
    """
    Average topological error in percent: 100 * RF / (internal edges of
    both trees), or 0 when neither tree has an internal edge.
    """
    if true_tree.label_set != estimate.label_set:
        raise ValueError("trees must share their leaf set")
    denom = len(true_tree.internal_edges()) + len(estimate.internal_edges())
    if denom == 0:
        return 0.0
    return 100.0 * rf_unrooted(true_tree, estimate) / denom


# -- whole data sets ------------------------------------------------------------


@dataclass
class SimParams:
    """
    Parameters
    ----------
    n_taxa : int
    n_genes : int
    condition : {"none", "dl", "lgt", "both"}
        ``dl_rate`` applies under "dl" and "both", ``lgt_count`` under
        "lgt" and "both".
    dl_rate : float
        Duplication rate and, separately, loss rate per lineage per time unit.
    lgt_count : int
        Maximum transfers per gene; each gene draws uniformly from 0..lgt_count.
    deletion_fraction : float
        Each gene deletes a fraction drawn uniformly from [0, deletion_fraction].
    tree_height : float or None
        Species tree height; defaults to 4.4 time units per taxon.
    nni_moves : int
        Random NNI moves per gene tree, standing in for estimation error.
    seed : int
    """

    n_taxa: int = 16
    n_genes: int = 20
    condition: str = "none"
    dl_rate: float = 0.002
    lgt_count: int = 2
    deletion_fraction: float = 0.0
    tree_height: float | None = None
    nni_moves: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n_taxa < 4:
            raise ValueError("need at least four taxa")
        if self.n_genes < 1:
            raise ValueError("need at least one gene")
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}")
        if self.dl_rate < 0 or self.lgt_count < 0 or self.nni_moves < 0:
            raise ValueError("rates and counts must be non-negative")
        if not 0 <= self.deletion_fraction <= 0.25:
            raise ValueError("deletion_fraction must lie in [0, 0.25]")
        if self.tree_height is not None and self.tree_height <= 0:
            raise ValueError("tree_height must be positive")

    @property
    def height(self) -> float:
        return self.tree_height if self.tree_height is not None else 4.4 * self.n_taxa

    @property
    def effective_dl_rate(self) -> float:
        return self.dl_rate if self.condition in ("dl", "both") else 0.0

    @property
    def effective_lgt(self) -> int:
        return self.lgt_count if self.condition in ("lgt", "both") else 0


@dataclass
class SimResult:
    params: SimParams
    species: TimedTree
    species_tree: Tree
    records: list[GeneTreeRecord]

    @property
    def profile(self) -> list[Tree]:
        return [r.tree for r in self.records]

    def event_lines(self) -> list[str]:
        """Event log as ``gene_id<TAB>event<TAB>key=value ...`` lines."""
        lines = []
        for gid, rec in enumerate(self.records):
            for kind, detail in rec.events:
                text = " ".join(f"{k}={v}" for k, v in detail.items())
                lines.append(f"{gid}\t{kind}\t{text}")
        return lines


def simulate(params: SimParams) -> SimResult:
    """Species tree plus one gene tree per gene, each from its own derived seed."""
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_genes + 1)
    species = yule_tree(params.n_taxa, params.height, np.random.default_rng(seeds[0]))
    records = []
    for g in range(params.n_genes):
        rng = np.random.default_rng(seeds[g + 1])
        rec = evolve_duplication_loss(species, params.effective_dl_rate, rng)
        if params.effective_lgt:
            rec = apply_lgt(rec, int(rng.integers(params.effective_lgt + 1)), rng)
        tree = rec.tree
        for _ in range(params.nni_moves):
            tree = random_nni(tree, rng)
            rec.events.append(("nni", {}))
        if params.deletion_fraction > 0:
            frac = rng.uniform(0, params.deletion_fraction)
            tree, gone = delete_taxa(tree, frac, rng)
            for lab in gone:
                rec.events.append(("deletion", {"species": lab}))
        rec.tree = tree
        records.append(rec)
    return SimResult(params, species, species.to_unrooted(), records)
