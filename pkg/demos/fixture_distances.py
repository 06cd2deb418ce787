"""
Balanced trees whose cherries are split across the root in the partner
tree share no split, so their distance is twice the number of internal
edges.  Print it for growing sizes.

    python3 demos/fixture_distances.py
"""

from mulrf import rf_unrooted, write_newick
from mulrf.oracle import interleaved_balanced_pair

for k in (2, 6, 14, 30):
    t, t2 = interleaved_balanced_pair(k)
    print(f"k={k:2d}  leaves={t.n_leaves:2d}  rf={rf_unrooted(t, t2):2d}")
    if k == 6:
        print("   ", write_newick(t))
        print("   ", write_newick(t2))
