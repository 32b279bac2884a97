"""Finite trees of sequences over graded alphabets.

A node is a tuple of non-negative ints.  Python's tuple order is exactly the
lexicographic (depth-first preorder) order used for every set-valued output.

Three tree flavours share the :class:`Tree` read interface:

* :class:`FiniteTree` stores its node set explicitly.
* :class:`RuleTree` computes successors from a rule; used for fixtures whose
  node count is astronomically large (the minimal accelerating tree of depth
  12 has 12! / 1 leaves).
* :class:`RestrictedTree` is a base tree with per-node successor overrides;
  every pruning operation produces one of these when the base is lazy.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping

from .errors import InvalidInput, NotSkeletal

Seq = tuple  # tuple[int, ...]


@dataclass(frozen=True)
class TreeDomain:
    """Depth-bounded graded alphabet.

    ``kind == "uniform"`` admits letters ``0..b-1`` at every level;
    ``kind == "accelerating"`` admits letters ``0..n`` at level ``n``.
    """

    depth: int
    kind: str = "uniform"
    b: int | None = None

    def __post_init__(self):
        if self.depth < 1:
            raise InvalidInput(f"domain depth must be >= 1, got {self.depth}")
        if self.kind == "uniform":
            if self.b is None or self.b < 2:
                raise InvalidInput(f"uniform domain needs b >= 2, got {self.b}")
        elif self.kind == "accelerating":
            if self.b is not None:
                raise InvalidInput("accelerating domain takes no b")
        else:
            raise InvalidInput(f"unknown domain kind {self.kind!r}")

    @classmethod
    def uniform(cls, b, depth):
        return cls(depth=depth, kind="uniform", b=b)

    @classmethod
    def accelerating(cls, depth):
        return cls(depth=depth, kind="accelerating")

    def width(self, level: int) -> int:
        """Number of letters admitted at ``level``."""
        return self.b if self.kind == "uniform" else level + 1

    def admits(self, seq) -> bool:
        if len(seq) > self.depth:
            return False
        return all(0 <= x < self.width(n) for n, x in enumerate(seq))

    def all_sequences(self, length) -> Iterator[Seq]:
        """Every admitted sequence of the given length, lexicographically."""
        if length == 0:
            yield ()
            return
        for head in self.all_sequences(length - 1):
            for x in range(self.width(length - 1)):
                yield head + (x,)

    def to_json(self):
        if self.kind == "uniform":
            return {"kind": "uniform", "b": self.b, "depth": self.depth}
        return {"kind": "accelerating", "depth": self.depth}

    @classmethod
    def from_json(cls, obj):
        try:
            kind = obj["kind"]
            if kind == "uniform":
                return cls.uniform(int(obj["b"]), int(obj["depth"]))
            return cls(depth=int(obj["depth"]), kind=kind)
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"bad domain JSON: {obj!r}") from exc


class Tree:
    """Read interface shared by all trees.

    Subclasses provide ``domain``, :meth:`children` and :meth:`__contains__`.
    """

    domain: TreeDomain
    #: True when the subtree above a node depends only on the node's length.
    homogeneous: bool = False

    def children(self, node) -> tuple:
        raise NotImplementedError

    def __contains__(self, node) -> bool:
        raise NotImplementedError

    def successor_count(self, node) -> int:
        return len(self.children(node))

    def is_split(self, node) -> bool:
        return self.successor_count(node) >= 2

    def iter_nodes(self, start=()) -> Iterator[Seq]:
        """Nodes extending ``start`` in lexicographic order."""
        stack = [start]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(self.children(node)))

    def maximal_nodes(self, start=()) -> Iterator[Seq]:
        for node in self.iter_nodes(start):
            if not self.children(node):
                yield node

    def leftmost_path(self, node) -> Iterator[Seq]:
        """``node`` followed by its leftmost descendants down to a maximal node."""
        while True:
            yield node
            kids = self.children(node)
            if not kids:
                return
            node = kids[0]

    def run_end(self, node) -> Seq:
        """Last node of the unary run starting at ``node``."""
        kids = self.children(node)
        while len(kids) == 1:
            node = kids[0]
            kids = self.children(node)
        return node

    def materialize(self) -> "FiniteTree":
        return FiniteTree(self.domain, frozenset(self.iter_nodes()))

    def node_count(self) -> int:
        return sum(1 for _ in self.iter_nodes())


@dataclass(frozen=True)
class FiniteTree(Tree):
    """Prefix-closed finite set of sequences over a :class:`TreeDomain`."""

    domain: TreeDomain
    nodes: frozenset = field(default_factory=lambda: frozenset({()}))

    def __post_init__(self):
        nodes = frozenset(tuple(int(x) for x in s) for s in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if () not in nodes:
            raise InvalidInput("tree must contain the empty sequence")
        for s in nodes:
            if not self.domain.admits(s):
                raise InvalidInput(f"node {list(s)} violates the domain grading")
            if s and s[:-1] not in nodes:
                raise InvalidInput(f"not prefix-closed: {list(s[:-1])} missing")

    @classmethod
    def from_branches(cls, domain, branches: Iterable) -> "FiniteTree":
        """Prefix closure of ``branches``."""
        nodes = {()}
        for b in branches:
            b = tuple(b)
            nodes.update(b[:j] for j in range(len(b) + 1))
        return cls(domain, frozenset(nodes))

    @classmethod
    def full(cls, domain) -> "FiniteTree":
        nodes = set()
        for n in range(domain.depth + 1):
            nodes.update(domain.all_sequences(n))
        return cls(domain, frozenset(nodes))

    @cached_property
    def _kids(self):
        kids: dict = {s: [] for s in self.nodes}
        for s in self.nodes:
            if s:
                kids[s[:-1]].append(s)
        return {s: tuple(sorted(v)) for s, v in kids.items()}

    def children(self, node):
        return self._kids.get(tuple(node), ())

    def __contains__(self, node):
        return tuple(node) in self.nodes

    def __len__(self):
        return len(self.nodes)

    def sorted_nodes(self) -> list:
        return sorted(self.nodes)

    def materialize(self):
        return self

    def node_count(self):
        return len(self.nodes)


@dataclass(frozen=True, eq=False)
class RuleTree(Tree):
    """Tree whose successor letters come from ``rule(node)``.

    ``rule`` must return the admitted successor letters in ascending order and
    an empty sequence at maximal nodes.
    """

    domain: TreeDomain
    rule: Callable = field(repr=False)
    homogeneous: bool = False
    name: str = "rule"

    def children(self, node):
        node = tuple(node)
        return tuple(node + (x,) for x in self.rule(node))

    def __contains__(self, node):
        node = tuple(node)
        if len(node) > self.domain.depth:
            return False
        for j in range(len(node)):
            if node[j] not in self.rule(node[:j]):
                return False
        return True


@dataclass(frozen=True, eq=False)
class RestrictedTree(Tree):
    """``base`` with the successors of some nodes cut down to ``overrides[node]``."""

    base: Tree
    overrides: Mapping = field(default_factory=dict)

    @property
    def domain(self):
        return self.base.domain

    def children(self, node):
        node = tuple(node)
        kids = self.base.children(node)
        allowed = self.overrides.get(node)
        if allowed is None:
            return kids
        return tuple(k for k in kids if k[-1] in allowed)

    def __contains__(self, node):
        node = tuple(node)
        for j in range(len(node)):
            allowed = self.overrides.get(node[:j])
            if allowed is not None and node[j] not in allowed:
                return False
        return node in self.base


def restrict(tree: Tree, overrides: Mapping) -> Tree:
    """Apply successor overrides; explicit trees stay explicit."""
    overrides = {tuple(k): frozenset(v) for k, v in overrides.items()}
    if isinstance(tree, RestrictedTree):
        merged = dict(tree.overrides)
        for k, v in overrides.items():
            merged[k] = merged[k] & v if k in merged else v
        return RestrictedTree(tree.base, merged)
    if isinstance(tree, FiniteTree):
        keep = RestrictedTree(tree, overrides)
        return FiniteTree(tree.domain, frozenset(keep.iter_nodes()))
    return RestrictedTree(tree, overrides)


def is_subtree(small: Tree, big: Tree, max_nodes=200_000) -> bool:
    """Node-set inclusion ``small ⊆ big``.

    Restricted trees sharing a base are compared through their overrides, so
    the check stays cheap for lazy trees.
    """
    if small is big:
        return True
    if isinstance(small, RestrictedTree) and (small.base is big or (
            isinstance(big, RestrictedTree) and small.base is big.base)):
        if small.base is big:
            return True
        for node, allowed in big.overrides.items():
            if node in small and not {k[-1] for k in small.children(node)} <= allowed:
                return False
        return True
    for count, node in enumerate(small.iter_nodes()):
        if count > max_nodes:
            raise InvalidInput("subtree check exceeds the node budget")
        if node not in big:
            return False
    return True


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class TreeClassReport:
    """Result of :func:`validate`.

    ``is_k_tree`` and ``is_k_branching`` are None when no ``k`` was given.
    For homogeneous lazy trees the split list holds one representative path.
    """

    k: int | None
    is_k_tree: bool | None
    is_k_branching: bool | None
    is_accelerating: bool
    is_leveled: bool
    perfect_within_depth: bool
    split_arities: tuple
    representative: bool = False

    def holds(self, tree_class: str) -> bool:
        value = {
            "k-tree": self.is_k_tree,
            "k-branching": self.is_k_branching,
            "accelerating": self.is_accelerating,
            "leveled": self.is_leveled,
            "perfect": self.perfect_within_depth,
        }[tree_class]
        if value is None:
            raise InvalidInput(f"class {tree_class!r} needs k")
        return value

    def to_json(self):
        return {
            "k": self.k,
            "isKTree": self.is_k_tree,
            "isKBranching": self.is_k_branching,
            "isAccelerating": self.is_accelerating,
            "isLeveled": self.is_leveled,
            "perfectWithinDepth": self.perfect_within_depth,
            "splitArities": [[list(n), a] for n, a in self.split_arities],
            "representative": self.representative,
        }


def validate(tree: Tree, k: int | None = None) -> TreeClassReport:
    """Classify ``tree`` as k-tree, k-branching, accelerating and leveled.

    The accelerating check covers only the arity clause: a split with ``n``
    splits strictly below it must have at least ``n + 2`` successors.
    """
    if k is not None and k < 1:
        raise InvalidInput(f"k must be >= 1, got {k}")
    depth = tree.domain.depth
    representative = tree.homogeneous
    # (node, splits strictly below node); homogeneous trees need one path only
    stack = [((), 0)]
    k_tree = k_branch = accelerating = leveled = perfect = True
    splits = []
    while stack:
        node, below = stack.pop()
        kids = tree.children(node)
        a = len(kids)
        if a == 0:
            if len(node) != depth:
                leveled = perfect = False
            if below == 0:
                perfect = False
            continue
        if k is not None:
            if a > k:
                k_tree = False
            if a != 1 and a != k:
                k_branch = False
        if a >= 2:
            splits.append((node, a))
            if a < below + 2:
                accelerating = False
        nxt = below + (a >= 2)
        if representative:
            stack.append((kids[0], nxt))
        else:
            stack.extend((c, nxt) for c in reversed(kids))
    return TreeClassReport(
        k=k,
        is_k_tree=k_tree if k is not None else None,
        is_k_branching=k_branch if k is not None else None,
        is_accelerating=accelerating,
        is_leveled=leveled,
        perfect_within_depth=perfect,
        split_arities=tuple(splits),
        representative=representative,
    )


def is_k_tree(tree: Tree, k: int) -> bool:
    return validate(tree, k).is_k_tree


# ----------------------------------------------------------------- operations


def subtree_at(tree: Tree, rho) -> Tree:
    """``T_rho``: the nodes comparable with ``rho``."""
    rho = tuple(rho)
    if rho not in tree:
        raise InvalidInput(f"{list(rho)} is not a node of the tree")
    if isinstance(tree, FiniteTree):
        n = len(rho)
        return FiniteTree(tree.domain, frozenset(
            t for t in tree.nodes if t[:n] == rho or rho[:len(t)] == t))
    return restrict(tree, {rho[:j]: {rho[j]} for j in range(len(rho))})


def split_level(tree: Tree, stem, n: int) -> tuple:
    """Successors of the ``n``-th split above ``stem``; ``(stem,)`` when n is 0.

    A node's split index counts the split nodes between ``stem`` and the node,
    both ends included.
    """
    stem = tuple(stem)
    if stem not in tree:
        raise InvalidInput(f"stem {list(stem)} is not a node of the tree")
    if n < 0:
        raise InvalidInput("split level must be >= 0")
    if n == 0:
        return (stem,)
    out = []
    stack = [(stem, 0)]
    while stack:
        node, seen = stack.pop()
        kids = tree.children(node)
        if len(kids) >= 2:
            seen += 1
            if seen == n:
                out.extend(kids)
                continue
        stack.extend((c, seen) for c in kids)
    return tuple(sorted(out))


def pullback(tree: FiniteTree, f) -> FiniteTree:
    """``{sigma : f o sigma in tree}`` for a letter surjection ``f`` onto the tree's alphabet.

    ``f`` is a sequence of length k+1 with values in ``0..s`` where the tree
    lives over alphabet s+1.  An s-tree pulls back to a k-tree.
    """
    dom = tree.domain
    if dom.kind != "uniform":
        raise InvalidInput("pullback needs a uniform domain")
    f = tuple(int(x) for x in f)
    if set(f) != set(range(dom.b)):
        raise InvalidInput(f"{list(f)} is not a surjection onto 0..{dom.b - 1}")
    if not validate(tree, dom.b - 1).is_k_tree:
        raise InvalidInput(f"input is not a {dom.b - 1}-tree")
    out_dom = TreeDomain.uniform(len(f), dom.depth)
    nodes = {()}
    frontier = [((), ())]
    while frontier:
        sigma, image = frontier.pop()
        for letter, target in enumerate(f):
            img = image + (target,)
            if img in tree:
                child = sigma + (letter,)
                nodes.add(child)
                frontier.append((child, img))
    return FiniteTree(out_dom, frozenset(nodes))


def skeleton(tree: Tree, k: int):
    """Bijection between the branches of a perfect k-branching tree and ``k^d``.

    Each branch maps to the ranks of its chosen successors at the splits it
    passes, so unary runs are contracted.

    Returns:
        ``(forward, inverse)`` dicts: branch -> rank sequence and back.

    Raises:
        NotSkeletal: when a split has arity other than ``k`` or branches pass
            through different numbers of splits.
    """
    if k < 2:
        raise NotSkeletal("skeleton needs k >= 2")
    forward = {}
    depth = None
    stack = [((), ())]
    while stack:
        node, ranks = stack.pop()
        kids = tree.children(node)
        if not kids:
            if depth is None:
                depth = len(ranks)
            elif len(ranks) != depth:
                raise NotSkeletal(
                    f"branch {list(node)} passes {len(ranks)} splits, expected {depth}")
            forward[node] = ranks
            continue
        if len(kids) == 1:
            stack.append((kids[0], ranks))
        elif len(kids) == k:
            stack.extend((c, ranks + (r,)) for r, c in enumerate(kids))
        else:
            raise NotSkeletal(f"node {list(node)} has {len(kids)} successors, not 1 or {k}")
    inverse = {v: b for b, v in forward.items()}
    return forward, inverse


# ------------------------------------------------------------------- fixtures


def _minimal_accelerating_rule(depth):
    def rule(node):
        n = len(node)
        if n >= depth:
            return ()
        if n == 0:
            return (0,)
        return tuple(range(n + 1))
    return rule


def build_minimal_accelerating(depth: int) -> RuleTree:
    """Accelerating tree splitting at every level with the least legal arity.

    Level 0 admits a single letter, so split ``i`` sits at level ``i + 1`` with
    exactly ``i + 2`` successors.  The result is lazy; call
    :meth:`Tree.materialize` for small depths.
    """
    if depth < 2:
        raise InvalidInput("depth must be >= 2 to host a split")
    return RuleTree(TreeDomain.accelerating(depth), _minimal_accelerating_rule(depth),
                    homogeneous=True, name=f"minimal-accelerating-{depth}")


def full_branching_tree(k: int, depth: int, unary_before_split: int = 0) -> RuleTree:
    """Homogeneous k-branching tree over ``k`` letters.

    Splits happen every ``unary_before_split + 1`` levels; other levels keep
    only letter 0.
    """
    period = unary_before_split + 1

    def rule(node):
        n = len(node)
        if n >= depth:
            return ()
        return tuple(range(k)) if n % period == period - 1 else (0,)

    return RuleTree(TreeDomain.uniform(k, depth), rule, homogeneous=True,
                    name=f"branching-{k}-{depth}")


# ------------------------------------------------------------------------ I/O


def tree_to_json(tree: Tree):
    t = tree.materialize()
    return {"domain": t.domain.to_json(), "nodes": [list(s) for s in t.sorted_nodes()]}


def tree_from_json(obj) -> FiniteTree:
    try:
        domain = TreeDomain.from_json(obj["domain"])
        nodes = obj["nodes"]
    except (KeyError, TypeError) as exc:
        raise InvalidInput("tree JSON needs 'domain' and 'nodes'") from exc
    return FiniteTree(domain, frozenset(tuple(s) for s in nodes))


def _label(seq):
    return "<" + ",".join(map(str, seq)) + ">"


def to_dot(tree: Tree, name="T") -> str:
    """Graphviz digraph: one node per tree node, edges parent -> child."""
    t = tree.materialize()
    ids = {s: f"n{i}" for i, s in enumerate(t.sorted_nodes())}
    lines = [f"digraph {name} {{"]
    for s, i in ids.items():
        lines.append(f'  {i} [label="{_label(s)}"];')
    for s, i in ids.items():
        if s:
            lines.append(f"  {ids[s[:-1]]} -> {i};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def bfs_nodes(tree: Tree, start=()) -> Iterator[Seq]:
    """Nodes extending ``start``, shallowest first, then lexicographically."""
    queue = deque([start])
    while queue:
        node = queue.popleft()
        yield node
        queue.extend(tree.children(node))
