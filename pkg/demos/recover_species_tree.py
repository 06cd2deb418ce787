"""
Simulate gene families inside a species tree, infer a supertree from the
gene trees alone and measure how far it is from the truth.

    python3 demos/recover_species_tree.py [n_taxa] [n_genes]
"""

import sys
import time

from mulrf import SearchConfig, SimParams, ate, local_search, simulate, write_newick


def main(n_taxa=30, n_genes=60):
    for condition in ("none", "dl", "lgt", "both"):
        sim = simulate(SimParams(n_taxa=n_taxa, n_genes=n_genes, condition=condition,
                                 deletion_fraction=0.25, seed=7))
        multi = sum(not t.is_singly_labeled for t in sim.profile)
        t0 = time.perf_counter()
        res = local_search(sim.profile, SearchConfig(restarts=3, seed=7))
        took = time.perf_counter() - t0
        print(f"{condition:5s} {multi:3d}/{n_genes} mul-trees  score {res.best_score:6d}  "
              f"ATE {ate(sim.species_tree, res.best_tree):6.2f}  {took:5.1f} s")
    print("last estimate:", write_newick(res.best_tree))


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:3]))
