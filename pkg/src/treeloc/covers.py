"""Exact finite cover numbers for k-trees and k-predictors.

Both searches cover ``b^D`` by maximal candidates: leveled k-trees where every
constrained node keeps ``min(k, b)`` successors.  Every k-tree sits inside
such a candidate, so the minimum is unchanged.  Candidates are leaf bitmasks
indexed by the lexicographic rank of a branch.

Predictor candidates leave the first ``m + 1`` levels full, because a
predictor is not consulted before the grace point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product

from .errors import BudgetExceeded, InvalidInput
from .prediction import Predictor, predicts
from .trees import FiniteTree, TreeDomain, skeleton, validate

TREES = "trees"
PREDICTORS = "predictors"

MAX_CANDIDATES = 200_000
MAX_SEARCH_NODES = 2_000_000


@dataclass(frozen=True)
class CoverInstance:
    b: int
    depth: int
    k: int
    mode: str = TREES
    m: int = 0

    def __post_init__(self):
        if self.b < 2 or self.k < 1 or self.depth < 1:
            raise InvalidInput("cover instance needs b >= 2, k >= 1, depth >= 1")
        if self.mode not in (TREES, PREDICTORS):
            raise InvalidInput(f"unknown mode {self.mode!r}")
        if self.mode == PREDICTORS and not 0 <= self.m < self.depth:
            raise InvalidInput(f"grace m must lie in 0..{self.depth - 1}")

    @property
    def width(self):
        return min(self.k, self.b)

    def constrained(self, level: int) -> bool:
        if self.mode == TREES:
            return True
        return self.m < level

    def trivial_bound(self) -> int:
        """Size of the product cover built from a partition of the letters."""
        levels = sum(1 for n in range(self.depth) if self.constrained(n))
        return math.ceil(self.b / self.width) ** levels

    def to_json(self):
        out = {"b": self.b, "depth": self.depth, "k": self.k, "mode": self.mode}
        if self.mode == PREDICTORS:
            out["m"] = self.m
        return out


@dataclass(frozen=True)
class CoverCertificate:
    instance: CoverInstance
    size: int
    family: tuple
    uncovered_witness: tuple | None = None
    refuted_family: tuple = ()
    exact: bool = True
    search_nodes: int = 0

    def to_json(self):
        fam = [x.to_json() if isinstance(x, Predictor) else _tree_json(x) for x in self.family]
        return {"size": self.size, "exact": self.exact, "instance": self.instance.to_json(),
                "family": fam,
                "uncoveredWitness": None if self.uncovered_witness is None
                else list(self.uncovered_witness),
                "searchNodes": self.search_nodes,
                "note": "finite truncation at depth D; not a cardinal invariant"}


def _tree_json(tree):
    return {"domain": tree.domain.to_json(), "nodes": [list(s) for s in tree.sorted_nodes()]}


# --------------------------------------------------------------- candidates


def _count(inst: CoverInstance, level: int) -> int:
    if level == inst.depth:
        return 1
    below = _count(inst, level + 1)
    if inst.constrained(level):
        return math.comb(inst.b, inst.width) * below ** inst.width
    return below ** inst.b


def candidates(inst: CoverInstance, max_candidates: int = MAX_CANDIDATES):
    """All maximal candidates as ``(mask, canonical_form)`` pairs, deduplicated by mask.

    The canonical form is the rooted-tree shape with children sorted, so two
    candidates share it iff a permutation of successors at each node maps one
    onto the other.
    """
    total = _count(inst, 0)
    if total > max_candidates:
        raise BudgetExceeded(f"{total} candidates exceed the budget of {max_candidates}",
                             best=inst.trivial_bound())
    b, D = inst.b, inst.depth

    def build(level, offset):
        # offset: rank of the node's first leaf
        if level == D:
            return [(1 << offset, ())]
        span = b ** (D - level - 1)
        subs = [build(level + 1, offset + x * span) for x in range(b)]
        choices = combinations(range(b), inst.width) if inst.constrained(level) else [tuple(range(b))]
        out = []
        for letters in choices:
            for picks in product(*(subs[x] for x in letters)):
                mask = 0
                for pm, _ in picks:
                    mask |= pm
                out.append((mask, tuple(sorted(pe for _, pe in picks))))
        return out

    seen = {}
    for mask, form in build(0, 0):
        seen.setdefault(mask, form)
    return sorted(seen.items())


def _branches(mask, b, D):
    out = []
    i = 0
    while mask:
        if mask & 1:
            digits = []
            r = i
            for _ in range(D):
                digits.append(r % b)
                r //= b
            out.append(tuple(reversed(digits)))
        mask >>= 1
        i += 1
    return out


def _rank(f, b):
    r = 0
    for x in f:
        r = r * b + x
    return r


def _as_tree(mask, inst):
    return FiniteTree.from_branches(TreeDomain.uniform(inst.b, inst.depth),
                                    _branches(mask, inst.b, inst.depth))


def _as_predictor(mask, inst):
    tree = _as_tree(mask, inst)
    default = tuple(range(inst.width))

    def entry(s):
        if len(s) > inst.m and s in tree:
            return tuple(c[-1] for c in tree.children(s))
        return default

    return Predictor.from_function(inst.b, inst.k, inst.depth, entry)


# ------------------------------------------------------------------- search


class _Search:
    def __init__(self, masks, forms, full, max_nodes):
        self.masks = masks
        self.full = full
        self.max_nodes = max_nodes
        self.nodes = 0
        self.cap = max(bin(x).count("1") for x in masks)
        self.by_point = {}
        for i, x in enumerate(masks):
            y = x
            while y:
                low = y & -y
                self.by_point.setdefault(low, []).append(i)
                y ^= low
        reps = {}
        for i, form in enumerate(forms):
            reps.setdefault(form, i)
        self.roots = sorted(reps.values())
        self.best = None  # (uncovered count, family) over failed searches

    def _note(self, family, covered):
        left = bin(self.full & ~covered).count("1")
        if self.best is None or left < self.best[0]:
            self.best = (left, tuple(family))

    def run(self, size):
        """A family of ``size`` candidates covering everything, or None."""
        self.best = None
        self.failed = set()
        for i in self.roots:
            got = self._dfs([i], self.masks[i], size - 1)
            if got is not None:
                return got
        return None

    def _dfs(self, family, covered, left):
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise BudgetExceeded(f"search exceeded {self.max_nodes} nodes")
        if covered == self.full:
            return family
        self._note(family, covered)
        uncovered = self.full & ~covered
        if left == 0 or bin(uncovered).count("1") > left * self.cap:
            return None
        key = (uncovered, left)
        if key in self.failed:
            return None
        point = uncovered & -uncovered
        for j in self.by_point[point]:
            got = self._dfs(family + [j], covered | self.masks[j], left - 1)
            if got is not None:
                return got
        self.failed.add(key)
        return None


def _greedy(masks, full, size):
    family, covered = [], 0
    for _ in range(size):
        j = max(range(len(masks)), key=lambda i: (bin(masks[i] & ~covered).count("1"), -i))
        family.append(j)
        covered |= masks[j]
    return family, covered


def min_cover(inst: CoverInstance, *, max_candidates: int = MAX_CANDIDATES,
              max_nodes: int = MAX_SEARCH_NODES) -> CoverCertificate:
    """Exact minimum cover with a size-1 refutation witness.

    Sizes below ``ceil(b^D / largest candidate)`` are refuted by counting;
    every size from there up to the answer is refuted by exhaustive search
    with the first member fixed to one representative per symmetry class.
    """
    pairs = candidates(inst, max_candidates)
    masks = [m for m, _ in pairs]
    forms = [f for _, f in pairs]
    full = (1 << inst.b ** inst.depth) - 1
    search = _Search(masks, forms, full, max_nodes)
    lower = -(-bin(full).count("1") // search.cap)
    size = lower
    refuted = None
    try:
        while True:
            found = search.run(size)
            if found is not None:
                break
            refuted = search.best[1] if search.best else None
            size += 1
    except BudgetExceeded as exc:
        raise BudgetExceeded(str(exc), best=inst.trivial_bound()) from None

    wrap = _as_tree if inst.mode == TREES else _as_predictor
    family = tuple(wrap(masks[j], inst) for j in found)
    if size == 1:
        witness, refuted_family = (0,) * inst.depth, ()
    else:
        if refuted is None or len(refuted) != size - 1:
            refuted, _ = _greedy(masks, full, size - 1)
        covered = 0
        for j in refuted:
            covered |= masks[j]
        gap = full & ~covered
        witness = _branches(gap & -gap, inst.b, inst.depth)[0]
        refuted_family = tuple(wrap(masks[j], inst) for j in refuted)
    return CoverCertificate(inst, size, family, witness, refuted_family, True, search.nodes)


def min_cover_trees(b, depth, k, **kw) -> CoverCertificate:
    return min_cover(CoverInstance(b, depth, k, TREES), **kw)


def min_cover_predictors(b, k, depth, m, **kw) -> CoverCertificate:
    return min_cover(CoverInstance(b, depth, k, PREDICTORS, m), **kw)


def family_covers(inst: CoverInstance, family) -> tuple | None:
    """First ``f`` in ``b^D`` missed by ``family``, or None when it covers."""
    for f in product(range(inst.b), repeat=inst.depth):
        if inst.mode == TREES:
            hit = any(f in t for t in family)
        else:
            hit = any(predicts(p, f, inst.m).predicted for p in family)
        if not hit:
            return f
    return None


def verify_certificate(cert: CoverCertificate) -> bool:
    """Recheck the family by direct membership and the witness against the refuted family."""
    inst = cert.instance
    if len(cert.family) != cert.size or family_covers(inst, cert.family) is not None:
        return False
    for member in cert.family:
        if inst.mode == TREES:
            r = validate(member, inst.k)
            if not (r.is_k_tree and r.is_leveled):
                return False
        elif member.k != inst.k:
            return False
    if cert.uncovered_witness is None:
        return True
    if cert.size == 1:
        return True
    if len(cert.refuted_family) != cert.size - 1:
        return False
    return family_covers(inst, cert.refuted_family) is not None and not any(
        (cert.uncovered_witness in t) if inst.mode == TREES
        else predicts(t, cert.uncovered_witness, inst.m).predicted
        for t in cert.refuted_family)


# -------------------------------------------------------------- composition


def compose_covers(outer, inner, k: int) -> list:
    """Refine a cover by (k+1)-branching trees into a cover by k-trees.

    ``inner`` maps a skeleton depth ``d`` to k-trees covering ``(k+1)^d``; a
    plain list is grouped by each tree's domain depth.  Each outer tree ``T``
    and inner tree ``A`` of depth ``d`` give the branches of ``T`` whose
    skeleton image lies in ``A``.
    """
    if isinstance(inner, dict):
        by_depth = {int(d): list(ts) for d, ts in inner.items()}
    else:
        by_depth = {}
        for t in inner:
            by_depth.setdefault(t.domain.depth, []).append(t)
    out = []
    for T in outer:
        forward, _ = skeleton(T, k + 1)
        d = len(next(iter(forward.values())))
        if d == 0:
            out.append(T)
            continue
        cover = by_depth.get(d)
        if not cover:
            raise InvalidInput(f"no inner cover of depth {d}")
        points = set(product(range(k + 1), repeat=d))
        for A in cover:
            if not validate(A, k).is_k_tree:
                raise InvalidInput("inner trees must be k-trees")
            points -= {s for s in A.nodes if len(s) == d}
        if points:
            raise InvalidInput(f"inner cover of depth {d} misses {list(min(points))}")
        for A in cover:
            kept = [br for br, ranks in forward.items() if ranks in A]
            if kept:
                out.append(FiniteTree.from_branches(T.domain, kept))
    return out


# ------------------------------------------------------------- monotonicity


@dataclass
class MonotonicityReport:
    b: int
    depth: int
    rows: list = field(default_factory=list)  # (k, trees, predictors) with None on budget
    m: int = 0

    def violations(self):
        bad = []
        for col in (1, 2):
            vals = [(r[0], r[col]) for r in self.rows if r[col] is not None]
            for (k0, v0), (k1, v1) in zip(vals, vals[1:]):
                if v1 > v0:
                    bad.append({"column": ("trees", "predictors")[col - 1], "k": [k0, k1],
                                "values": [v0, v1]})
        return bad

    def to_json(self):
        return {"b": self.b, "depth": self.depth, "m": self.m,
                "rows": [{"k": k, "trees": t, "predictors": p} for k, t, p in self.rows],
                "violations": self.violations()}

    def table(self):
        lines = [f"b={self.b} D={self.depth} m={self.m}", "k  trees  predictors"]
        for k, t, p in self.rows:
            lines.append(f"{k:<2} {'budget' if t is None else t:<6} "
                         f"{'budget' if p is None else p}")
        return "\n".join(lines)


def monotonicity_report(b, depth, k_range, m=0, **kw) -> MonotonicityReport:
    """Minimum covers for each ``k``; trees and predictors are reported side by side.

    Predictor numbers can sit below tree numbers at equal ``k`` because the
    first ``m + 1`` levels are free.
    """
    report = MonotonicityReport(b, depth, m=m)
    for k in k_range:
        row = [k]
        for inst in (CoverInstance(b, depth, k, TREES), CoverInstance(b, depth, k, PREDICTORS, m)):
            try:
                row.append(min_cover(inst, **kw).size)
            except BudgetExceeded:
                row.append(None)
        report.rows.append(tuple(row))
    return report


__all__ = ["CoverInstance", "CoverCertificate", "candidates", "min_cover", "min_cover_trees",
           "min_cover_predictors", "family_covers", "verify_certificate", "compose_covers",
           "MonotonicityReport", "monotonicity_report"]
