import sys
from itertools import product

from hypothesis import strategies as st

from treeloc.trees import FiniteTree, TreeDomain


def closure(seqs):
    out = {()}
    for s in seqs:
        out.update(tuple(s[:j]) for j in range(len(s) + 1))
    return out


@st.composite
def uniform_trees(draw, max_b=3, max_depth=3):
    """Random prefix-closed trees inside ``b^{<=D}``."""
    b = draw(st.integers(2, max_b))
    D = draw(st.integers(1, max_depth))
    seqs = [s for n in range(D + 1) for s in product(range(b), repeat=n)]
    picked = draw(st.lists(st.sampled_from(seqs), max_size=12))
    return FiniteTree(TreeDomain.uniform(b, D), frozenset(closure(picked)))


def successor_counts(nodes):
    """Brute-force successor count of every node of a node set."""
    return {s: sum(1 for t in nodes if len(t) == len(s) + 1 and t[:-1] == s) for s in nodes}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
