"""Prune an accelerating tree until a seeded name lands on a small tree.

Run: python3 demos/pruning_walkthrough.py [seed]
"""
import sys

from treeloc.pruning import Condition, DecidedName, HashName, prune_to_cover, slalom_of_decided
from treeloc.trees import build_minimal_accelerating, split_level, validate

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
tree = build_minimal_accelerating(12)  # split arities 2, 3, ..., 12 down every branch
name = DecidedName(Condition((), tree), 3, 2, HashName(seed))

res = prune_to_cover(name, 2)
pruned = res.pruned.tree
print("stem", res.pruned.stem, "accelerating", validate(pruned).is_accelerating)
for n in (1, 2):
    print("split level", n, "has", len(split_level(pruned, res.pruned.stem, n)), "nodes")

# every leaf's value, cut to length 2, is a branch of a 2-tree over 3 letters
print("cover leaves", sorted(s for s in res.cover.nodes if len(s) == 2))
print("2-tree", validate(res.cover, 2).is_k_tree)

sl = slalom_of_decided(name.restrict(res.pruned))
for row in sl.growth_table():
    print(row)
