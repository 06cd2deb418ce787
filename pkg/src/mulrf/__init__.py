"""Robinson-Foulds supertrees for profiles of multi-labelled gene trees."""

from .newick import NewickError, parse_newick, parse_tree, read_newick, write_newick, write_trees
from .rf import extend_supertree, rf_multree_supertree, rf_profile, rf_rooted, rf_unrooted
from .search import SearchConfig, SearchResult, greedy_supertree, local_search
from .simulate import SimParams, SimResult, ate, simulate
from .spr import SprMove, SprSearcher, apply_spr, scan_cut_edge, spr_neighborhood, spr_search
from .tree import RootedTree, TaxonTable, Tree, is_isomorphic, restrict, splits

__all__ = [
    "NewickError", "parse_newick", "parse_tree", "read_newick", "write_newick", "write_trees",
    "extend_supertree", "rf_multree_supertree", "rf_profile", "rf_rooted", "rf_unrooted",
    "SearchConfig", "SearchResult", "greedy_supertree", "local_search",
    "SimParams", "SimResult", "ate", "simulate",
    "SprMove", "SprSearcher", "apply_spr", "scan_cut_edge", "spr_neighborhood", "spr_search",
    "RootedTree", "TaxonTable", "Tree", "is_isomorphic", "restrict", "splits",
]
