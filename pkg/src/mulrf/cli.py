"""
Command-line interface.

Results go to stdout, diagnostics to stderr.  Exit codes:

0  success
1  unexpected failure
2  unreadable input, Newick syntax error or invalid parameters
3  leaf sets that do not fit together (or fewer than four taxa)
4  distance between two mul-trees requested without ``--oracle-small``
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from .newick import NewickError, read_newick, write_newick, write_trees
from .oracle import rf_differentiation_exhaustive
from .rf import rf_multree_supertree, rf_unrooted
from .search import SearchConfig, local_search
from .simulate import CONDITIONS, SimParams, ate, simulate
from .spr import SprSearcher

log = logging.getLogger("mulrf")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_LEAVES, EXIT_HARD = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read(path, single: bool = False):
    try:
        doc = read_newick(path)
    except NewickError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from exc
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}", EXIT_INPUT) from exc
    if len(doc) == 0:
        raise CliError(f"{path}: no trees found", EXIT_INPUT)
    if single and len(doc) != 1:
        raise CliError(f"{path}: expected one tree, found {len(doc)}", EXIT_INPUT)
    return doc.trees[0] if single else doc.trees


# -- subcommands ----------------------------------------------------------------


def cmd_supertree(args) -> int:
    profile = _read(args.input)
    labels = set().union(*(t.label_set for t in profile))
    if len(labels) < 4:
        raise CliError(f"the profile has {len(labels)} taxa; at least four are needed", EXIT_LEAVES)
    try:
        cfg = SearchConfig(restarts=args.restarts, max_iterations=args.max_iterations,
                           seed=args.seed, init_strategy=args.init, workers=args.workers)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from exc
    log.info("%d trees over %d taxa", len(profile), len(labels))
    t0 = time.perf_counter()
    res = local_search(profile, cfg)
    elapsed = time.perf_counter() - t0
    print(f"elapsed {elapsed:.2f} s, best restart {res.best_restart}", file=sys.stderr)

    newick = write_newick(res.best_tree)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(newick + "\n")
    else:
        print(newick)
    print(f"score\t{res.best_score}")
    print(f"seed\t{res.seed}")
    if args.per_tree:
        _, parts = SprSearcher(profile).profile_score(res.best_tree, per_tree=True)
        for i, p in enumerate(parts):
            print(f"tree\t{i}\t{p}")
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("iteration\tscore\n")
            for it, sc in enumerate(res.trajectories[res.best_restart]):
                fh.write(f"{it}\t{sc}\n")
    return EXIT_OK


def _distance(a, b):
    """Distance for the supported combinations, or raise ``CliError``."""
    if not a.is_singly_labeled and not b.is_singly_labeled:
        raise CliError("both trees are mul-trees; the RF distance between two mul-trees "
                       "is NP-hard to compute (use --oracle-small for tiny inputs)", EXIT_HARD)
    if not a.is_singly_labeled:
        t, s = a, b
    elif not b.is_singly_labeled:
        t, s = b, a
    elif a.label_set == b.label_set:
        return rf_unrooted(a, b), (a, b)
    elif a.label_set <= b.label_set:
        t, s = a, b
    else:
        t, s = b, a
    if not t.label_set <= s.label_set:
        raise CliError("the leaf labels of one tree must all occur in the other", EXIT_LEAVES)
    return rf_multree_supertree(t, s), (t, s)


def cmd_rfdist(args) -> int:
    a = _read(args.tree_a, single=True)
    b = _read(args.tree_b, single=True)
    if not a.is_singly_labeled and not b.is_singly_labeled:
        if not args.oracle_small:
            _distance(a, b)
        if a.multiplicity() != b.multiplicity():
            raise CliError("the mul-trees carry different label multisets", EXIT_LEAVES)
        try:
            value, values = rf_differentiation_exhaustive(a, b)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_INPUT) from exc
        print(value)
        return EXIT_OK
    value, (t, s) = _distance(a, b)
    print(value)
    if args.oracle:
        try:
            ref, values = rf_differentiation_exhaustive(t, s)
        except ValueError as exc:
            print(f"oracle skipped: {exc}", file=sys.stderr)
            return EXIT_OK
        print(f"oracle\t{ref}")
        print(f"agree\t{'yes' if ref == value and len(values) == 1 else 'no'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        params = SimParams(n_taxa=args.taxa, n_genes=args.genes, condition=args.condition,
                           dl_rate=args.dl_rate, lgt_count=args.lgt, deletion_fraction=args.delete,
                           tree_height=args.height, nni_moves=args.nni, seed=args.seed)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from exc
    res = simulate(params)
    os.makedirs(args.output, exist_ok=True)
    species = os.path.join(args.output, "species.nwk")
    genes = os.path.join(args.output, "genes.nwk")
    events = os.path.join(args.output, "events.tsv")
    write_trees([res.species_tree], species)
    write_trees(res.profile, genes)
    with open(events, "w", encoding="utf-8") as fh:
        for line in res.event_lines():
            fh.write(line + "\n")
    print(f"species\t{species}")
    print(f"genes\t{genes}")
    print(f"events\t{events}")
    print(f"seed\t{params.seed}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    truth = _read(args.true_tree, single=True)
    est = _read(args.estimate, single=True)
    if truth.label_set != est.label_set:
        raise CliError("the two trees have different leaf sets", EXIT_LEAVES)
    print(f"{ate(truth, est):.2f}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mulrf", description="RF supertrees from gene-family mul-trees.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("supertree", help="search for a supertree minimising the RF distance to a profile")
    s.add_argument("-i", "--input", required=True, help="Newick file, one gene tree per ';'")
    s.add_argument("-o", "--output", help="write the supertree here instead of stdout")
    s.add_argument("--restarts", type=int, default=10)
    s.add_argument("--max-iterations", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--init", choices=("greedy", "random"), default="greedy")
    s.add_argument("--trace", help="write the best restart's per-iteration scores (TSV)")
    s.add_argument("--per-tree", action="store_true", help="also print each input tree's distance")
    s.set_defaults(func=cmd_supertree)

    r = sub.add_parser("rfdist", help="RF distance between two trees")
    r.add_argument("tree_a")
    r.add_argument("tree_b")
    r.add_argument("--oracle", action="store_true", help="cross-check against exhaustive differentiation")
    r.add_argument("--oracle-small", action="store_true",
                   help="allow two mul-trees and solve by exhaustive differentiation")
    r.set_defaults(func=cmd_rfdist)

    m = sub.add_parser("simulate", help="simulate a species tree and gene-tree profile")
    m.add_argument("--taxa", type=int, default=16)
    m.add_argument("--genes", type=int, default=20)
    m.add_argument("--condition", choices=CONDITIONS, default="none")
    m.add_argument("--dl-rate", type=float, default=0.002)
    m.add_argument("--lgt", type=int, default=2)
    m.add_argument("--delete", type=float, default=0.0)
    m.add_argument("--height", type=float, default=None)
    m.add_argument("--nni", type=int, default=0)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("-o", "--output", required=True, help="output directory")
    m.set_defaults(func=cmd_simulate)

    e = sub.add_parser("evaluate", help="ATE between a true and an estimated tree")
    e.add_argument("true_tree")
    e.add_argument("estimate")
    e.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"mulrf: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
