"""
Hill-climbing supertree search over the SPR neighbourhood.

Each restart builds an initial binary supertree, then repeatedly moves to
the best SPR neighbour while the profile distance strictly decreases.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .spr import SprMove, SprSearcher, _profile_taxa, apply_spr
from .tree import Tree, random_binary_tree, restrict


@dataclass
class SearchConfig:
    """
    Parameters
    ----------
    restarts : int
        Independent hill climbs; the best result is kept.
    max_iterations : int
        Cap on accepted moves per restart.
    seed : int
        Master seed; restart ``r`` draws from ``default_rng([seed, r])``.
    init_strategy : {"greedy", "random"}
        ``"greedy"`` builds the first restart's tree by greedy leaf
        insertion and the rest at random; ``"random"`` uses random trees
        throughout.
    workers : int
        Processes used to run restarts.  The result does not depend on it.
    """

    restarts: int = 10
    max_iterations: int = 1000
    seed: int = 0
    init_strategy: str = "greedy"
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.init_strategy not in ("greedy", "random"):
            raise ValueError(f"unknown init_strategy {self.init_strategy!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class SearchResult:
    best_tree: Tree
    best_score: int
    trajectories: list[list[int]] = field(default_factory=list)
    timings: list[float] = field(default_factory=list)
    best_restart: int = 0
    seed: int = 0


def taxon_frequencies(profile: Sequence[Tree]) -> dict:
    """Number of input trees containing each label."""
    freq: dict = {}
    for t in profile:
        for a in t.label_set:
            freq[a] = freq.get(a, 0) + 1
    return freq


def _insertion_order(profile: Sequence[Tree]) -> list:
    freq = taxon_frequencies(profile)
    return sorted(freq, key=lambda a: (-freq[a], str(a)))


def _attach_leaf(s: Tree, label, edge: tuple[int, int]) -> tuple[Tree, int, int]:
    """Subdivide ``edge`` and hang a new leaf; returns (tree, attach vertex, leaf)."""
    n = s.n_vertices
    mid, leaf = n, n + 1
    a, b = edge
    edges = [e for e in s.edges() if set(e) != {a, b}]
    edges += [(a, mid), (mid, b), (mid, leaf)]
    labels = {v: s.labels[v] for v in s.leaves}
    labels[leaf] = label
    t = Tree.from_edges(n + 2, edges, labels)
    new_leaf = t.leaf_of(label)
    return t, t.adj[new_leaf][0], new_leaf


def greedy_supertree(profile: Sequence[Tree]) -> Tree:
    """
    Insert taxa in decreasing order of profile frequency, each on the edge
    minimising the distance to the profile restricted to the taxa placed
    so far (first edge in packing order on ties).
    """
    order = _insertion_order(profile)
    if len(order) < 3:
        raise ValueError("need at least three taxa")
    s = Tree.from_edges(4, [(0, 3), (1, 3), (2, 3)], {0: order[0], 1: order[1], 2: order[2]})
    placed = set(order[:3])
    for z in order[3:]:
        placed.add(z)
        s, x, y = _attach_leaf(s, z, s.edges()[0])
        relevant = []
        for t in profile:
            if z not in t.label_set:
                continue  # constant over all positions of z
            r = t if t.label_set <= placed else _restrict_or_none(t, placed)
            if r is not None and r.n_leaves >= 4:
                relevant.append(r)
        if not relevant:
            continue
        taxa = _profile_taxa(relevant, s)
        bank = K.GeneBank(relevant, taxa)
        sa = K.SuperArrays(s, taxa)
        row = np.zeros(sa.n_vertices + 1, dtype=np.int64)
        valid = K.cut_scores(bank.arrays(), sa.nbr, sa.leaf_tax, sa.parent, x, y, row)
        masked = np.where(valid, row, np.iinfo(np.int64).max)
        # prefer the current position on ties so the result is stable
        e = sa.n_vertices if masked[-1] == masked.min() else int(np.argmin(masked))
        if e != sa.n_vertices:
            s = apply_spr(s, SprMove(_sorted(x, y), y, sa.edge(e)))
    return s


def _sorted(u, v):
    return (u, v) if u < v else (v, u)


def _restrict_or_none(t: Tree, keep: set):
    kept = [v for v in t.leaves if t.labels[v] in keep]
    if len(kept) < 4:
        return None
    return restrict(t, keep)


def initial_supertree(profile: Sequence[Tree], strategy: str, rng: np.random.Generator) -> Tree:
    """Binary tree on the union of the profile labels, built by ``strategy``."""
    if not profile:
        raise ValueError("empty profile")
    if strategy == "greedy":
        return greedy_supertree(profile)
    if strategy == "random":
        labels = _insertion_order(profile)
        labels = [labels[i] for i in rng.permutation(len(labels))]
        return random_binary_tree(labels, rng)
    raise ValueError(f"unknown strategy {strategy!r}")


def climb(searcher: SprSearcher, s: Tree, max_iterations: int):
    """Strict-improvement hill climb from ``s``; returns (tree, score, trajectory)."""
    score = searcher.profile_score(s)
    traj = [score]
    for _ in range(max_iterations):
        if score == 0:
            break
        t, sc, _ = searcher.best(s)
        if sc >= score:
            break
        s, score = t, sc
        traj.append(score)
    return s, score, traj


def _run_restart(profile, taxa, cfg: SearchConfig, r: int):
    t0 = time.perf_counter()
    rng = np.random.default_rng([cfg.seed, r])
    strategy = "greedy" if (cfg.init_strategy == "greedy" and r == 0) else "random"
    s = initial_supertree(profile, strategy, rng)
    searcher = SprSearcher(profile, taxa)
    s, score, traj = climb(searcher, s, cfg.max_iterations)
    return s, score, traj, time.perf_counter() - t0


def local_search(profile: Sequence[Tree], cfg: SearchConfig | None = None) -> SearchResult:
    """Best supertree over ``cfg.restarts`` hill climbs (first best on ties)."""
    cfg = cfg or SearchConfig()
    profile = list(profile)
    if not profile:
        raise ValueError("empty profile")
    taxa = _profile_taxa(profile)
    if len(taxa) < 4:
        raise ValueError("need at least four taxa")
    if cfg.workers > 1 and cfg.restarts > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            runs = list(ex.map(_run_restart, [profile] * cfg.restarts, [taxa] * cfg.restarts,
                               [cfg] * cfg.restarts, range(cfg.restarts)))
    else:
        runs = [_run_restart(profile, taxa, cfg, r) for r in range(cfg.restarts)]
    best = min(range(len(runs)), key=lambda r: runs[r][1])
    return SearchResult(
        best_tree=runs[best][0],
        best_score=runs[best][1],
        trajectories=[run[2] for run in runs],
        timings=[run[3] for run in runs],
        best_restart=best,
        seed=cfg.seed,
    )


__all__ = [
    "SearchConfig",
    "SearchResult",
    "climb",
    "greedy_supertree",
    "initial_supertree",
    "local_search",
    "taxon_frequencies",
]
