"""How many k-trees (or k-predictors) does it take to cover b^D?

Run: python3 demos/cover_numbers.py
"""
from treeloc.covers import min_cover_trees, monotonicity_report, verify_certificate

# three letters, two levels, trees that keep two successors per node
cert = min_cover_trees(3, 2, 2)
print("size", cert.size, "verified", verify_certificate(cert))
for t in cert.family:
    print("  leaves", sorted(s for s in t.nodes if len(s) == 2))

# two trees always miss something; the certificate names a point they miss
print("two trees miss", cert.uncovered_witness)

# wider trees never need more members; predictors never need more than trees
print(monotonicity_report(3, 2, [1, 2, 3]).table())
