"""Accelerating-tree conditions, density, decided-name pruning and slaloms."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import BudgetExceeded, InvalidInput, Undecided, VerificationFailed
from .extraction import closure_violates, select_common_subset
from .trees import (FiniteTree, Tree, TreeDomain, bfs_nodes, build_minimal_accelerating,
                    restrict, split_level, subtree_at, tree_from_json, tree_to_json, validate)

__all__ = [
    "Condition", "DecidedName", "HashName", "PruneResult", "Refinement",
    "avoid_tree", "build_minimal_accelerating", "close_leftmost", "forced_value",
    "prune_to_cover", "refine_split_level", "slalom_of_decided",
]

#: Exhaustive subset search cap per round.
MAX_SUBSETS = 250_000


@dataclass(frozen=True, eq=False)
class Condition:
    """A stem together with a tree through it."""

    stem: tuple
    tree: Tree

    def __post_init__(self):
        stem = tuple(self.stem)
        object.__setattr__(self, "stem", stem)
        if stem not in self.tree:
            raise InvalidInput(f"stem {list(stem)} is not a node of the tree")
        for j in range(len(stem)):
            if len(self.tree.children(stem[:j])) != 1:
                raise InvalidInput("every node below the stem must be unary")

    def to_json(self):
        out = tree_to_json(self.tree)
        out["stem"] = list(self.stem)
        return out

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(obj.get("stem", [])), tree_from_json(obj))


class HashName:
    """Seeded pseudo-random monotone labelling.

    Letter ``j`` of a node's label is a hash of the node's prefix of length
    ``j + 1 + lag``; a node of length ``n`` decides ``max(0, n - lag)``
    letters.
    """

    def __init__(self, seed: int, alphabet: int = 3, lag: int = 0):
        self.seed = seed
        self.alphabet = alphabet
        self.lag = lag
        self._cache: dict = {}

    def letter(self, prefix):
        v = self._cache.get(prefix)
        if v is None:
            h = hashlib.blake2b(repr((self.seed, prefix)).encode(), digest_size=8)
            v = int.from_bytes(h.digest(), "little") % self.alphabet
            self._cache[prefix] = v
        return v

    def __call__(self, node):
        node = tuple(node)
        return tuple(self.letter(node[:j + 1 + self.lag])
                     for j in range(max(0, len(node) - self.lag)))


@dataclass(frozen=True, eq=False)
class DecidedName:
    """Monotone labelling of a condition's nodes by decided output prefixes.

    ``labels`` is either a mapping node -> value or a callable.
    """

    condition: Condition
    output_alphabet: int
    target_length: int
    labels: Mapping | Callable = field(repr=False)

    def label(self, node) -> tuple:
        node = tuple(node)
        if callable(self.labels):
            return tuple(self.labels(node))
        try:
            return self.labels[node]
        except KeyError:
            raise Undecided(f"no label for node {list(node)}") from None

    def restrict(self, condition: Condition) -> "DecidedName":
        return DecidedName(condition, self.output_alphabet, self.target_length, self.labels)

    def check(self, max_nodes=200_000):
        """Verify totality, monotonicity, letter range and target length."""
        tree = self.condition.tree
        for count, node in enumerate(tree.iter_nodes()):
            if count > max_nodes:
                raise BudgetExceeded("name check exceeds the node budget")
            v = self.label(node)
            if any(not 0 <= x < self.output_alphabet for x in v):
                raise InvalidInput(f"label of {list(node)} leaves the output alphabet")
            if node and self.label(node[:-1]) != v[:len(self.label(node[:-1]))]:
                raise InvalidInput(f"labels are not monotone at {list(node)}")
            if not tree.children(node) and len(v) < self.target_length:
                raise InvalidInput(f"maximal node {list(node)} decides fewer than "
                                   f"{self.target_length} letters")
        return True

    def to_json(self):
        if callable(self.labels):
            labels = [{"node": list(n), "value": list(self.label(n))}
                      for n in sorted(self.condition.tree.iter_nodes())]
        else:
            labels = [{"node": list(n), "value": list(v)} for n, v in sorted(self.labels.items())]
        return {"condition": self.condition.to_json(), "outputAlphabet": self.output_alphabet,
                "targetLength": self.target_length, "labels": labels}

    @classmethod
    def from_json(cls, obj):
        try:
            cond = Condition.from_json(obj["condition"])
            labels = {tuple(e["node"]): tuple(e["value"]) for e in obj["labels"]}
            name = cls(cond, int(obj["outputAlphabet"]), int(obj["targetLength"]), labels)
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"bad name JSON: {exc}") from exc
        missing = [n for n in cond.tree.iter_nodes() if n not in labels]
        if missing:
            raise InvalidInput(f"labels must be total; {list(missing[0])} has none")
        return name


def forced_value(tree: Tree, label: Callable, node) -> tuple:
    """Value decided by ``<node, T_node>``: the label at the end of its unary run."""
    return tuple(label(tree.run_end(tuple(node))))


# ------------------------------------------------------------------- density


def avoid_tree(cond: Condition, U: Tree, k: int) -> Condition:
    """Move to a node off the k-tree ``U`` so no branch of the result is in ``U``.

    The first split above the stem (shallowest, then lexicographic) with at
    least ``k + 1`` successors has a successor outside ``U``; the least such
    successor becomes the new stem.
    """
    if not validate(U, k).is_k_tree:
        raise InvalidInput(f"U is not a {k}-tree")
    tree = cond.tree
    for x in bfs_nodes(tree, cond.stem):
        kids = tree.children(x)
        if len(kids) >= k + 1:
            rho = next(c for c in kids if c not in U)
            return Condition(rho, subtree_at(tree, rho))
    raise BudgetExceeded(f"no split with {k + 1} successors within depth {tree.domain.depth}")


# -------------------------------------------------------------------- rounds


@dataclass(frozen=True)
class Refinement:
    """Outcome of one split-level refinement.

    ``kept`` maps each old level node to its kept successors, which form the
    new split level; ``decision`` maps each kept successor to the node where
    the common length ``M`` is decided.
    """

    overrides: dict
    kept: dict
    decision: dict
    M: int
    values: tuple
    selected: tuple
    attempt: int


def _candidate_split(tree, start, keep, attempt):
    """``attempt``-th node with >= ``keep`` successors on the leftmost path from ``start``."""
    seen = 0
    path = []
    for node in tree.leftmost_path(start):
        if len(tree.children(node)) >= keep:
            if seen == attempt:
                return node, path
            seen += 1
        path.append(node)
    return None, None


def refine_split_level(tree: Tree, level_nodes, keep: int, groups, value: Callable,
                       m: int, A_nodes, alphabet: int, floor: int = 0,
                       max_subsets: int = MAX_SUBSETS) -> Refinement:
    """Grow the next split level below ``level_nodes`` keeping ``keep`` successors each.

    Args:
        tree: current tree of the coordinate being refined.
        level_nodes: sorted nodes of the current split level.
        keep: successors to keep at every new split.
        groups: list of ``(t, key)``; ``t`` is a level node and ``key`` is
            passed to ``value`` (grid points in the product case).
        value: ``value(key, node)`` is the monotone label seen by group
            ``key`` when the refined coordinate sits at ``node``.
        m: current decision length; all values restricted to ``m`` lie in
            ``A_nodes``.
        A_nodes: node set of the current output tree.
        alphabet: output alphabet; the output tree must stay an
            ``(alphabet - 1)``-tree.
        floor: lower bound for the new decision length.

    The candidate split below a level node is searched along its leftmost
    path; when no common index set works the search moves to the next
    qualifying split, all level nodes in lockstep.
    """
    depth = tree.domain.depth
    for attempt in range(depth + 1):
        splits = {}
        for t in level_nodes:
            x, path = _candidate_split(tree, t, keep, attempt)
            if x is None:
                raise BudgetExceeded(
                    f"no split with {keep} successors below {list(t)} (attempt {attempt})")
            splits[t] = (x, path)
        width = min(len(tree.children(x)) for x, _ in splits.values())
        cands = {t: tree.children(x)[:width] for t, (x, _) in splits.items()}
        M = max(m + 1, floor)
        decision = {}
        ok = True
        for t in level_nodes:
            keys = [key for s, key in groups if s == t]
            for y in cands[t]:
                rho = next((r for r in tree.leftmost_path(y)
                            if all(len(value(key, r)) >= M for key in keys)), None)
                if rho is None:
                    ok = False
                    break
                decision[y] = rho
            if not ok:
                break
        if not ok:
            continue
        table = [[tuple(value(key, decision[y]))[:M] for y in cands[t]] for t, key in groups]
        S = select_common_subset(table, keep, A_nodes, alphabet, m, max_subsets)
        if S is None:
            continue
        overrides = {}
        kept = {}
        for t in level_nodes:
            x, path = splits[t]
            for p in path:
                overrides[p] = {tree.children(p)[0][-1]}
            ys = tuple(cands[t][i] for i in S)
            overrides[x] = {y[-1] for y in ys}
            kept[t] = ys
            for y in ys:
                for p in tree.leftmost_path(y):
                    if p == decision[y]:
                        break
                    overrides[p] = {tree.children(p)[0][-1]}
        values = tuple(sorted({row[i] for row in table for i in S}))
        return Refinement(overrides, kept, {y: decision[y] for ys in kept.values() for y in ys},
                          M, values, tuple(S), attempt)
    raise BudgetExceeded(f"no admissible selection of {keep} successors within depth {depth}")


def close_leftmost(tree: Tree, nodes) -> Tree:
    """Make the tree unary from each of ``nodes`` down to a maximal node."""
    overrides = {}
    for n in nodes:
        for p in tree.leftmost_path(n):
            kids = tree.children(p)
            if kids:
                overrides[p] = {kids[0][-1]}
    return restrict(tree, overrides)


def prefix_closure(values) -> frozenset:
    nodes = {()}
    for v in values:
        nodes.update(v[:j] for j in range(len(v) + 1))
    return frozenset(nodes)


@dataclass(frozen=True)
class PruneResult:
    pruned: Condition
    cover: FiniteTree
    lengths: tuple = ()  # decision length reached after each round

    def to_json(self):
        return {"pruned": self.pruned.to_json(), "cover": tree_to_json(self.cover),
                "lengths": list(self.lengths)}


def prune_to_cover(name: DecidedName, t: int, *, max_subsets: int = MAX_SUBSETS) -> PruneResult:
    """Prune a condition so its decided values lie on the branches of a small tree.

    Round ``r`` adds output split ``r`` with exactly ``r + 2`` successors
    below every node of the current split level, chooses the kept successors
    so that the decided values stay an ``(alphabet - 1)``-tree, and makes the
    connecting segments unary.  The last round decides at least
    ``target_length`` letters; afterwards every kept node is extended along
    its leftmost path to a maximal node.
    """
    if t < 0:
        raise InvalidInput("t must be >= 0")
    cond = name.condition
    c = name.output_alphabet
    E = name.target_length
    tree = cond.tree
    level = (cond.stem,)
    A = frozenset({()})
    m = 0
    lengths = []
    for r in range(t):
        ref = refine_split_level(tree, level, r + 2, [(s, None) for s in level],
                                 lambda _key, node: name.label(node), m, A, c,
                                 floor=E if r == t - 1 else 0, max_subsets=max_subsets)
        tree = restrict(tree, ref.overrides)
        A = A | prefix_closure(ref.values)
        m = ref.M
        lengths.append(m)
        level = tuple(sorted(y for ys in ref.kept.values() for y in ys))
    tree = close_leftmost(tree, level).materialize()
    leaves = sorted(tree.maximal_nodes())
    finals = []
    for leaf in leaves:
        v = name.label(leaf)
        if len(v) < E:
            raise Undecided(f"leaf {list(leaf)} decides {len(v)} < {E} letters")
        finals.append(v[:E])
    cover_nodes = prefix_closure(finals)
    if closure_violates(finals, (), c - 1):
        raise VerificationFailed("pruned cover is not an (alphabet-1)-tree")
    cover = FiniteTree(TreeDomain.uniform(c, max(E, 1)), cover_nodes)
    return PruneResult(Condition(cond.stem, tree), cover, tuple(lengths))


# -------------------------------------------------------------------- slalom


@dataclass(frozen=True)
class Slalom:
    """``sets[n]`` holds the ``n``-th output letters decided at split level ``n + 1``."""

    sets: tuple
    level_sizes: tuple

    def goes_through(self, g) -> bool:
        return all(n < len(g) and g[n] in s for n, s in enumerate(self.sets))

    def growth_table(self):
        from math import factorial
        return [{"n": n, "size": len(s), "levelSize": self.level_sizes[n], "nFactorial": factorial(n)}
                for n, s in enumerate(self.sets)]


def slalom_of_decided(name: DecidedName, levels: int | None = None) -> Slalom:
    """Slalom read off the decided values at successive split levels.

    Every node at split level ``n + 1`` must decide at least ``n + 1``
    letters.  ``levels`` defaults to the number of non-empty split levels.
    """
    cond = name.condition
    tree = cond.tree
    sets = []
    sizes = []
    n = 0
    while levels is None or n < levels:
        nodes = split_level(tree, cond.stem, n + 1)
        if not nodes:
            if levels is not None:
                raise InvalidInput(f"split level {n + 1} is empty")
            break
        letters = set()
        for s in nodes:
            v = forced_value(tree, name.label, s)
            if len(v) < n + 1:
                raise InvalidInput(f"node {list(s)} at split level {n + 1} decides "
                                   f"only {len(v)} letters")
            letters.add(v[n])
        sets.append(frozenset(letters))
        sizes.append(len(nodes))
        n += 1
    return Slalom(tuple(sets), tuple(sizes))
