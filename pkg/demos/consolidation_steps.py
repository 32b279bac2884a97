"""Consolidate a two-coordinate product, one coordinate at a time.

Run: python3 demos/consolidation_steps.py [seed]
"""
import sys

from treeloc.acceptance import mixed_state
from treeloc.consolidation import consolidate_step, verify_consolidates

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
st = mixed_state(seed)  # accelerating coordinate 0, 2-branching coordinate 1
for beta in (0, 1, 0):
    st = consolidate_step(st, beta)
    rep = verify_consolidates(st)
    stems = [c.stem for c in st.q.coordinates]
    print(f"beta={beta} eta={st.eta} m={st.m} stems={stems} "
          f"cond1-3={rep.holds_1_to_3} cond4={rep.cond4}")
    print("  values decided so far", sorted(s for s in st.A.nodes if len(s) == st.m))
