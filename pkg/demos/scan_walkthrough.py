"""
Walk one pruned subtree across every edge of the rest of a supertree and
print the distance to a mul-tree at each step, with the bookkeeping that
drives the constant-time update.

    python3 demos/scan_walkthrough.py
"""

from mulrf import parse_tree, rf_multree_supertree
from mulrf.spr import apply_spr, scan_cut_edge

supertree = parse_tree("((a,b),(c,(d,(e,(f,g)))));")
gene = parse_tree("((a,c),((b,d),(a,(e,(g,f)))));")

leaf = supertree.leaf_of("b")
cut = (leaf, supertree.adj[leaf][0])
rows, steps = scan_cut_edge(supertree, gene, cut, pruned=leaf, trace=True)

print(f"pruning leaf b; distance before the move: {rf_multree_supertree(gene, supertree)}")
print("step  edge      rf  case  gained  lost")
for i, st in enumerate(steps):
    print(f"{i:4d}  {str(st.regraft_edge):8s} {st.rf:3d}  {st.case:4d}  {st.gained:6d}  {st.lost:4d}")

best_move, best_rf = min(rows, key=lambda r: r[1])
print(f"best regraft edge {best_move.regraft_edge} gives {best_rf}")
# the walk starts at the pendant edge of the leaf the gene tree is rooted at,
# so the unmoved tree appears somewhere in the middle; check the winner directly
assert rf_multree_supertree(gene, apply_spr(supertree, best_move)) == best_rf
