"""Selecting subfamilies of sequences whose restriction sets form k-trees.

The pigeonhole extraction picks ``n`` of ``b**n`` sequences so that their
prefix closure is a 2-tree.  The grouped variant handles several groups
``f[i][j]`` sharing one index set and keeps one index set ``S`` for all
groups; it needs a tower-sized index set, see :func:`n_bound`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import BudgetExceeded, HypothesisFailed, InvalidInput
from .trees import FiniteTree, TreeDomain

#: Largest nBound result, in bits, that is computed exactly.
MAX_BOUND_BITS = 1 << 16


@dataclass(frozen=True, eq=False)
class FunctionFamily:
    """Equal-length sequences over alphabet ``b``, optionally split into groups.

    ``functions`` is an ``(count, length)`` int array.  With ``groups``, row
    ``p`` belongs to group ``groups[p]`` and is that group's ``i``-th function
    when ``p`` is the ``i``-th row carrying the label.
    """

    b: int
    length: int
    functions: np.ndarray
    groups: np.ndarray | None = None

    def __post_init__(self):
        arr = np.asarray(self.functions, dtype=np.int64)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, self.length)
        if arr.ndim != 2 or arr.shape[1] != self.length:
            raise InvalidInput(f"functions must all have length {self.length}")
        if self.b < 2:
            raise InvalidInput("alphabet must have b >= 2")
        if arr.size and (arr.min() < 0 or arr.max() >= self.b):
            raise InvalidInput(f"letters must lie in 0..{self.b - 1}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "functions", arr)
        if self.groups is not None:
            g = np.asarray(self.groups, dtype=np.int64).copy()
            if g.shape != (len(arr),):
                raise InvalidInput("one group label per function is required")
            labels = sorted(set(g.tolist()))
            if labels != list(range(len(labels))):
                raise InvalidInput("group labels must be 0..a-1 with none missing")
            g.flags.writeable = False
            object.__setattr__(self, "groups", g)

    def __len__(self):
        return len(self.functions)

    @property
    def group_count(self) -> int:
        return 0 if self.groups is None else int(self.groups.max()) + 1

    def group_matrix(self) -> np.ndarray:
        """``(a, |I|, length)`` array with ``out[j, i] = f_i^j``."""
        if self.groups is None:
            return self.functions[None, :, :]
        a = self.group_count
        rows = [self.functions[self.groups == j] for j in range(a)]
        sizes = {len(r) for r in rows}
        if len(sizes) != 1:
            raise InvalidInput(f"groups have different sizes {sorted(sizes)}")
        return np.stack(rows)

    @classmethod
    def from_groups(cls, b, matrix) -> "FunctionFamily":
        """Inverse of :meth:`group_matrix`: rows listed group by group."""
        m = np.asarray(matrix, dtype=np.int64)
        a, count, length = m.shape
        return cls(b, length, m.reshape(a * count, length),
                   np.repeat(np.arange(a), count))

    def to_json(self):
        out = {"b": self.b, "length": self.length, "functions": self.functions.tolist()}
        if self.groups is not None:
            out["groups"] = self.groups.tolist()
        return out

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(int(obj["b"]), int(obj["length"]),
                       np.asarray(obj["functions"], dtype=np.int64).reshape(-1, int(obj["length"])),
                       obj.get("groups"))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"bad family JSON: {exc}") from exc


@dataclass(frozen=True)
class ExtractionResult:
    selected: tuple
    witness_tree: FiniteTree

    def to_json(self):
        from .trees import tree_to_json
        return {"selected": list(self.selected), "witnessTree": tree_to_json(self.witness_tree)}


def n_bound(n: int, k: int, base: int = 3) -> int:
    """Least index-set size the grouped extraction needs for ``k`` groups.

    ``N(n, 1) = base**n`` and ``N(n, k + 1) = base**N(n, k)``.
    """
    if n < 0 or k < 1:
        raise InvalidInput(f"need n >= 0 and k >= 1, got n={n}, k={k}")
    value = base ** n
    per_bit = math.log2(base)
    for _ in range(k - 1):
        if value > MAX_BOUND_BITS / per_bit:
            raise BudgetExceeded(f"N({n},{k}) exceeds {MAX_BOUND_BITS} bits")
        value = base ** value
    return value


def restriction_closure(rows, b: int, length: int) -> FiniteTree:
    """``{f|l : f in rows, l <= length}`` as a tree over ``b^{<=length}``."""
    return FiniteTree.from_branches(TreeDomain.uniform(b, max(length, 1)),
                                    (tuple(int(x) for x in r) for r in rows))


def _pigeonhole(F: np.ndarray, idx: np.ndarray, n: int, b: int) -> list:
    if n <= 1:
        return idx[:n].tolist()
    sub = F[idx]
    differs = (sub != sub[0]).any(axis=0)
    if not differs.any():
        return idx[:n].tolist()
    m = int(np.argmax(differs))
    col = sub[:, m]
    counts = np.bincount(col, minlength=b)
    letter = int(np.argmax(counts))  # argmax returns the least maximiser
    J = idx[col == letter][: b ** (n - 1)]
    i0 = int(idx[col != letter][0])
    return sorted(_pigeonhole(F, J, n - 1, b) + [i0])


def _check_size(have, need, strict, what):
    if have < need or (strict and have != need):
        raise InvalidInput(f"{what} needs exactly {need} functions, got {have}")


def extract_2tree(family: FunctionFamily, n: int, *, strict: bool = True) -> ExtractionResult:
    """Pick ``n`` of ``b**n`` functions whose prefix closure is a 2-tree.

    Ties: least differing coordinate, least most-frequent letter, first
    ``b**(n-1)`` qualifying indices, least non-qualifying index.  With
    ``strict=False`` a larger family is accepted and only its first
    ``b**n`` rows are used.
    """
    if family.groups is not None and family.group_count > 1:
        raise InvalidInput("extract_2tree takes an ungrouped family")
    if n < 0:
        raise InvalidInput("n must be >= 0")
    if family.b < 3 and n >= 2:
        raise InvalidInput("a 2-tree extraction needs alphabet b >= 3")
    need = family.b ** n
    _check_size(len(family), need, strict, "extract_2tree")
    F = family.functions
    selected = tuple(_pigeonhole(F, np.arange(need), n, family.b))
    return ExtractionResult(selected, restriction_closure(F[list(selected)], family.b, family.length))


@dataclass(frozen=True)
class HypothesisReport:
    ok: bool
    kind: str | None = None  # "tree" or "rigidity"
    violation: tuple | None = None

    def __bool__(self):
        return self.ok


def _tree_violation(rows, bound):
    """First node (lexicographic) of the closure with more than ``bound`` successors."""
    succ: dict = {}
    for r in rows:
        r = tuple(int(x) for x in r)
        for l in range(len(r)):
            succ.setdefault(r[:l], set()).add(r[l])
    bad = [node for node, s in succ.items() if len(s) > bound]
    return min(bad) if bad else None


def _row_classes(rows: np.ndarray, b: int) -> np.ndarray:
    """Integer id per row; equal rows share an id."""
    n, width = rows.shape
    if width == 0:
        return np.zeros(n, dtype=np.int64)
    if width * math.log2(b) < 62:
        return rows @ (b ** np.arange(width - 1, -1, -1, dtype=np.int64))
    _, inv = np.unique(rows, axis=0, return_inverse=True)
    return inv.reshape(-1)


def _least_rigidity_pair(members, group_of, full_class, count):
    # members ascend in (group, index) order; the partner lies in a later group
    by_group: dict = {}
    for p in members:
        by_group.setdefault(int(group_of[p]), set()).add(int(full_class[p]))
    later: dict = {}
    acc: set = set()
    for g in sorted(by_group, reverse=True):
        later[g] = set(acc)
        acc |= by_group[g]
    for p in members:
        g, f = int(group_of[p]), int(full_class[p])
        if len(later[g] - {f}):
            q = next(q for q in members
                     if int(group_of[q]) > g and int(full_class[q]) != f)
            return ((g, p % count), (int(group_of[q]), q % count))
    return None


def check_grouped_hypothesis(family: FunctionFamily, m: int) -> HypothesisReport:
    """Test the grouped-extraction hypothesis at cut ``m``.

    Tree clause: the restrictions to length ``<= m`` form a (b-1)-tree.
    Rigidity clause: ``f_i^j|m == f_s^t|m`` with ``t != j`` forces
    ``f_i^j == f_s^t``.  Violations are quadruples ``((j, i), (t, s))`` and
    the least one is reported.
    """
    if not 0 <= m <= family.length:
        raise InvalidInput(f"m must lie in 0..{family.length}")
    G = family.group_matrix()
    a, count, _ = G.shape
    flat = G.reshape(a * count, -1)
    prefix_class = _row_classes(flat[:, :m], family.b)
    if m:
        _, first = np.unique(prefix_class, return_index=True)
        node = _tree_violation(flat[first, :m], family.b - 1)
        if node is not None:
            return HypothesisReport(False, "tree", (node,))
    if a < 2:
        return HypothesisReport(True)
    group_of = np.repeat(np.arange(a), count)
    full_class = _row_classes(flat, family.b)
    best = None
    order = np.argsort(prefix_class, kind="stable")
    bounds = np.flatnonzero(np.diff(prefix_class[order])) + 1
    for members in np.split(order, bounds):
        fulls = full_class[members]
        if (fulls == fulls[0]).all() or (group_of[members] == group_of[members[0]]).all():
            continue
        quad = _least_rigidity_pair(members.tolist(), group_of, full_class, count)
        if best is None or quad < best:
            best = quad
    if best is not None:
        return HypothesisReport(False, "rigidity", best)
    return HypothesisReport(True)


def extract_grouped(family: FunctionFamily, n: int, m: int, *, strict: bool = True) -> ExtractionResult:
    """Pick one index set ``S`` of size ``n`` good for every group at once.

    Induction on the number of groups: extract from the last group down to
    ``N(n, a-1)`` indices, then recurse on the remaining groups.  The
    witness tree is the closure over all groups.
    """
    if family.groups is None:
        family = FunctionFamily(family.b, family.length, family.functions,
                                np.zeros(len(family), dtype=np.int64))
    G = family.group_matrix()
    a, count, length = G.shape
    b = family.b
    need = n_bound(n, a, base=b)
    _check_size(count, need, strict, "extract_grouped")
    G = G[:, :need]
    report = check_grouped_hypothesis(FunctionFamily.from_groups(b, G), m)
    if not report:
        raise HypothesisFailed(f"{report.kind} clause fails at {report.violation}", report.violation)
    idx = np.arange(need)
    for j in range(a - 1, 0, -1):
        target = n_bound(n, j, base=b)
        idx = np.asarray(_pigeonhole(G[j], idx, target, b))
    idx = _pigeonhole(G[0], idx, n, b)
    selected = tuple(sorted(int(i) for i in idx))
    rows = G[:, list(selected)].reshape(-1, length)
    witness = restriction_closure(rows, b, length)
    return ExtractionResult(selected, witness)


# ------------------------------------------------------- selection for pruning


def closure_violates(values, base_nodes, bound) -> bool:
    """True when ``closure(values) | base_nodes`` has a node with > ``bound`` successors."""
    succ: dict = {}
    for node in base_nodes:
        if node:
            succ.setdefault(node[:-1], set()).add(node[-1])
    for v in values:
        for l in range(len(v)):
            s = succ.setdefault(v[:l], set())
            s.add(v[l])
            if len(s) > bound:
                return True
    return any(len(s) > bound for s in succ.values())


def select_common_subset(values, keep: int, base_nodes, alphabet: int, m: int,
                         max_subsets: int = 250_000):
    """Choose one index set for a grouped table of decided values.

    ``values[j][i]`` is the value of candidate ``i`` in group ``j``; all values
    share one length.  The chosen ``S`` keeps ``closure(values[.][S]) | base``
    an ``(alphabet - 1)``-tree.  The grouped extraction is used when the index
    set reaches its bound and its hypothesis holds; otherwise subsets are
    searched exhaustively, most distinct values first, then lexicographically.
    Returns None when no subset works.
    """
    groups = len(values)
    width = len(values[0])
    bound = alphabet - 1
    if keep > width:
        return None
    try:
        need = n_bound(keep, groups, base=alphabet)
    except BudgetExceeded:
        need = None
    if need is not None and width >= need and alphabet >= 3:
        fam = FunctionFamily.from_groups(alphabet, np.asarray(values)[:, :need])
        if check_grouped_hypothesis(fam, m):
            S = extract_grouped(fam, keep, m).selected
            chosen = [values[j][i] for j in range(groups) for i in S]
            if not closure_violates(chosen, base_nodes, bound):
                return S
    if math.comb(width, keep) > max_subsets:
        raise BudgetExceeded(f"C({width},{keep}) subsets exceed the search budget")
    ranked = []
    for S in combinations(range(width), keep):
        z = len({values[j][i] for j in range(groups) for i in S})
        ranked.append((-z, S))
    ranked.sort()
    for _, S in ranked:
        if not closure_violates((values[j][i] for j in range(groups) for i in S), base_nodes, bound):
            return S
    return None
