"""Finite products of tree conditions and the consolidation step.

A product condition is a tuple of coordinates, each an accelerating
condition or a k-branching tree with a stem.  A product name labels tuples
of nodes (one node per coordinate) monotonically in every coordinate.

A consolidation state ``(q, F, eta, m, A)`` couples a product condition to an
output tree ``A``: for every selector ``sigma`` picking one node at split
level ``eta[a]`` of each coordinate ``a`` in ``F``, the value decided by
``q * sigma`` restricted to ``m`` lies in ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product
from typing import Callable, Mapping

from .errors import BudgetExceeded, InvalidInput, Undecided
from .pruning import (MAX_SUBSETS, Condition, DecidedName, HashName, PruneResult,
                      close_leftmost, prefix_closure,
                      refine_split_level)
from .trees import (FiniteTree, Tree, TreeDomain, is_subtree, restrict, split_level,
                    subtree_at, tree_from_json, tree_to_json, validate)

ACCELERATING = "accelerating"
BRANCHING = "branching"

#: Default cap on the number of coordinates of a product.
MAX_COORDINATES = 3


@dataclass(frozen=True, eq=False)
class Coordinate:
    kind: str
    condition: Condition
    k: int | None = None  # arity for k-branching coordinates

    def __post_init__(self):
        if self.kind not in (ACCELERATING, BRANCHING):
            raise InvalidInput(f"unknown coordinate kind {self.kind!r}")
        if self.kind == BRANCHING and (self.k is None or self.k < 2):
            raise InvalidInput("k-branching coordinates need k >= 2")

    @property
    def stem(self):
        return self.condition.stem

    @property
    def tree(self):
        return self.condition.tree

    def keep(self, eta: int) -> int:
        """Successors kept at the split following split level ``eta``."""
        return eta + 2 if self.kind == ACCELERATING else self.k

    def check(self) -> bool:
        report = validate(self.tree, self.k)
        if self.kind == ACCELERATING:
            return report.is_accelerating
        return report.is_k_branching

    def with_condition(self, condition):
        return replace(self, condition=condition)

    def to_json(self):
        out = {"kind": self.kind, "condition": self.condition.to_json()}
        if self.k is not None:
            out["k"] = self.k
        return out

    @classmethod
    def from_json(cls, obj):
        return cls(obj["kind"], Condition.from_json(obj["condition"]), obj.get("k"))


@dataclass(frozen=True, eq=False)
class ProductCondition:
    coordinates: tuple

    def __post_init__(self):
        object.__setattr__(self, "coordinates", tuple(self.coordinates))
        if not self.coordinates:
            raise InvalidInput("a product needs at least one coordinate")

    @property
    def support(self):
        return tuple(range(len(self.coordinates)))

    def __getitem__(self, alpha) -> Coordinate:
        return self.coordinates[alpha]

    def replace_coordinate(self, alpha, coord) -> "ProductCondition":
        coords = list(self.coordinates)
        coords[alpha] = coord
        return ProductCondition(tuple(coords))

    def check(self) -> bool:
        return all(c.check() for c in self.coordinates)

    def to_json(self):
        return {"coordinates": [c.to_json() for c in self.coordinates]}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(Coordinate.from_json(c) for c in obj["coordinates"]))


class ProductName:
    """Monotone labelling of node tuples.

    Wraps a callable ``fn(nodes_tuple) -> value`` or a mapping.
    """

    def __init__(self, labels, output_alphabet: int = 3, target_length: int = 0):
        self.labels = labels
        self.output_alphabet = output_alphabet
        self.target_length = target_length

    def __call__(self, nodes) -> tuple:
        nodes = tuple(tuple(n) for n in nodes)
        if callable(self.labels):
            return tuple(self.labels(nodes))
        try:
            return self.labels[nodes]
        except KeyError:
            raise Undecided(f"no label for {[list(n) for n in nodes]}") from None

    @classmethod
    def from_decided(cls, name: DecidedName) -> "ProductName":
        """Single-coordinate view of a :class:`DecidedName`."""
        return cls(lambda nodes: name.label(nodes[0]), name.output_alphabet, name.target_length)

    def to_json(self, q: ProductCondition):
        trees = [c.tree.materialize() for c in q.coordinates]
        entries = [{"nodes": [list(n) for n in combo], "value": list(self(combo))}
                   for combo in product(*(t.sorted_nodes() for t in trees))]
        return {"outputAlphabet": self.output_alphabet, "targetLength": self.target_length,
                "labels": entries}

    @classmethod
    def from_json(cls, obj):
        labels = {tuple(tuple(n) for n in e["nodes"]): tuple(e["value"]) for e in obj["labels"]}
        return cls(labels, int(obj.get("outputAlphabet", 3)), int(obj.get("targetLength", 0)))


def _tabulated(name, alphabet):
    return name if isinstance(name, ProductName) else ProductName(name, alphabet)


class HashProductName:
    """Seeded monotone product labelling for tests and demos.

    The first ``base`` letters are constants.  After that, letter ``j`` reads
    prefixes of length ``ceil((j + 1 - base) / rate)``: of coordinate 0
    always, of the other coordinates only at odd offsets ``j - base``.  A
    node of length ``L`` in any coordinate thus supports ``rate * L + base``
    letters, so refining one coordinate lengthens the label while the others
    stay put.
    """

    def __init__(self, seed, alphabet=3, rate=2, base=2):
        self._h = HashName(seed, alphabet, 0)
        self.rate = rate
        self.base = base

    def _need(self, alpha, j):
        if j < self.base:
            return 0
        if alpha > 0 and (j - self.base) % 2 == 0:
            return 0
        return -(-(j + 1 - self.base) // self.rate)

    def __call__(self, nodes):
        out = []
        j = 0
        while all(len(s) >= self._need(a, j) for a, s in enumerate(nodes)):
            out.append(self._h.letter(
                (j,) + tuple(s[:self._need(a, j)] for a, s in enumerate(nodes))))
            j += 1
        return tuple(out)


# ------------------------------------------------------------ orders, grafting


def extends(p: ProductCondition, q: ProductCondition) -> bool:
    """``p <= q``: stems extend, trees shrink, and p's stems lie in q's trees."""
    if len(p.coordinates) != len(q.coordinates):
        return False
    for a, b in zip(p.coordinates, q.coordinates):
        if b.stem != a.stem[:len(b.stem)] or a.stem not in b.tree:
            return False
        if not is_subtree(a.tree, b.tree):
            return False
    return True


def leq_F_eta(p: ProductCondition, q: ProductCondition, F, eta: Mapping) -> bool:
    """``p <= q`` with split levels ``1..eta[a]`` unchanged on every ``a`` in ``F``."""
    if not extends(p, q):
        return False
    for a in F:
        for n in range(1, eta[a] + 1):
            if split_level(p[a].tree, p[a].stem, n) != split_level(q[a].tree, q[a].stem, n):
                return False
    return True


def grid(q: ProductCondition, F, eta: Mapping) -> list:
    """All selectors: dicts ``a -> node`` with the node at split level ``eta[a]``."""
    F = sorted(F)
    levels = [split_level(q[a].tree, q[a].stem, eta[a]) for a in F]
    return [dict(zip(F, combo)) for combo in product(*levels)]


def graft(p: ProductCondition, sigma: Mapping, eta: Mapping) -> ProductCondition:
    """``p * sigma``: move coordinate ``a`` to ``<sigma[a], T_sigma[a]>`` for ``a`` in the selector."""
    out = p
    for a, node in sorted(sigma.items()):
        node = tuple(node)
        coord = p[a]
        if node not in split_level(coord.tree, coord.stem, eta[a]):
            raise InvalidInput(f"{list(node)} is not at split level {eta[a]} of coordinate {a}")
        out = out.replace_coordinate(a, coord.with_condition(
            Condition(node, subtree_at(coord.tree, node))))
    return out


def _position(q: ProductCondition, sigma: Mapping | None = None):
    """Nodes at which ``q * sigma`` decides: each coordinate at the end of its unary run."""
    sigma = sigma or {}
    return tuple(c.tree.run_end(tuple(sigma.get(a, c.stem)))
                 for a, c in enumerate(q.coordinates))


def decided(q: ProductCondition, name, sigma=None) -> tuple:
    return name(_position(q, sigma))


# ------------------------------------------------------------------ the state


@dataclass(frozen=True, eq=False)
class ConsolidationState:
    q: ProductCondition
    F: tuple
    eta: Mapping
    m: int
    A: FiniteTree
    name: Callable = field(repr=False)
    alphabet: int = 3

    def __post_init__(self):
        object.__setattr__(self, "F", tuple(sorted(self.F)))
        object.__setattr__(self, "eta", dict(self.eta))

    @classmethod
    def initial(cls, q: ProductCondition, name, F=(0,), alphabet=3):
        """The base state: ``eta = 0`` on ``F``, ``m = 0`` and ``A = {()}``."""
        return cls(q, tuple(F), {a: 0 for a in F}, 0,
                   FiniteTree(TreeDomain.uniform(alphabet, 1), frozenset({()})), name, alphabet)

    def to_json(self):
        return {"q": self.q.to_json(), "F": list(self.F),
                "eta": {str(a): v for a, v in self.eta.items()}, "m": self.m,
                "A": tree_to_json(self.A), "alphabet": self.alphabet,
                "name": _tabulated(self.name, self.alphabet).to_json(self.q)}

    @classmethod
    def from_json(cls, obj):
        try:
            q = ProductCondition.from_json(obj["q"])
            name = ProductName.from_json(obj["name"])
            return cls(q, tuple(obj["F"]), {int(a): int(v) for a, v in obj["eta"].items()},
                       int(obj["m"]), tree_from_json(obj["A"]), name,
                       int(obj.get("alphabet", 3)))
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"bad state JSON: {exc}") from exc


@dataclass(frozen=True)
class ConsolidationReport:
    cond1: bool
    cond2: bool
    cond3: bool
    cond4: str  # "bounded-pass" or "bounded-fail"; never a proof
    witness: dict | None = None
    candidates_checked: int = 0

    @property
    def holds_1_to_3(self):
        return self.cond1 and self.cond2 and self.cond3

    def to_json(self):
        return {"cond1": self.cond1, "cond2": self.cond2, "cond3": self.cond3,
                "cond4": self.cond4, "witness": self.witness,
                "candidatesChecked": self.candidates_checked}


def _leftmost_descend(tree: Tree, node, steps):
    for _ in range(steps):
        kids = tree.children(node)
        if not kids:
            break
        node = kids[0]
    return node


def verify_consolidates(state: ConsolidationState, condition4_budget: int = 4) -> ConsolidationReport:
    """Check the four consolidation conditions.

    Conditions 1-3 are exact over the full selector grid.  Condition 4 is
    tested on at most ``condition4_budget`` refinements ``q*`` that push every
    grid node down its leftmost path by ``1..budget`` levels, so its verdict
    is labelled bounded.
    """
    q, F, eta, m, A = state.q, state.F, state.eta, state.m, state.A
    cond1 = (set(F) <= set(q.support) and set(eta) == set(F)
             and all(v >= 0 for v in eta.values()) and m >= 0)
    if not cond1:
        return ConsolidationReport(False, False, False, "bounded-fail", {"reason": "structure"})
    cond2 = all(len(s) <= m for s in A.nodes) and validate(A, state.alphabet - 1).is_k_tree
    witness = None
    sigmas = grid(q, F, eta)
    values = []
    for sigma in sigmas:
        v = decided(q, state.name, sigma)
        if len(v) < m:
            raise Undecided(f"selector {sigma} decides {len(v)} < {m} letters")
        values.append(v)
        if v[:m] not in A and witness is None:
            witness = {"sigma": {a: list(n) for a, n in sigma.items()}, "value": list(v[:m])}
    cond3 = witness is None
    cond2 = cond2 and cond3

    checked = 0
    cond4_ok = True
    for steps in range(1, condition4_budget + 1):
        checked += 1
        pos = []
        for sigma in sigmas:
            moved = {a: _leftmost_descend(q[a].tree, n, steps) for a, n in sigma.items()}
            pos.append(decided(q, state.name, moved))
        for i in range(len(sigmas)):
            for j in range(len(sigmas)):
                if i == j:
                    continue
                M = min(len(pos[i]), len(pos[j]))
                if M > m and pos[i][:M] != pos[j][:M] and values[i][:m] == values[j][:m]:
                    cond4_ok = False
                    if witness is None:
                        witness = {"cond4": [i, j], "steps": steps}
    return ConsolidationReport(cond1, cond2, cond3,
                               "bounded-pass" if cond4_ok else "bounded-fail", witness, checked)


def consolidate_step(state: ConsolidationState, beta: int, *, min_length: int = 0,
                     max_subsets: int = MAX_SUBSETS) -> ConsolidationState:
    """Advance ``eta[beta]`` by one, extending ``A`` to a longer decision length.

    Below each node ``t`` at split level ``eta[beta]`` of coordinate ``beta``
    the next split keeps ``eta[beta] + 2`` successors (accelerating) or all
    ``k`` successors (k-branching).  Groups are the grid selectors; one index
    set is kept for all of them, chosen so that ``A`` stays an
    ``(alphabet - 1)``-tree.  Other coordinates are untouched.
    """
    q, F, eta = state.q, state.F, state.eta
    if beta not in F:
        raise InvalidInput(f"beta={beta} is not in F={list(F)}")
    if len(q.coordinates) > MAX_COORDINATES:
        raise BudgetExceeded(f"more than {MAX_COORDINATES} coordinates")
    coord = q[beta]
    tree = coord.tree
    level = split_level(tree, coord.stem, eta[beta])
    sigmas = grid(q, F, eta)
    groups = [(sigma[beta], i) for i, sigma in enumerate(sigmas)]
    base_pos = [list(_position(q, sigma)) for sigma in sigmas]

    def value(key, node):
        pos = base_pos[key]
        pos[beta] = node
        return state.name(tuple(pos))

    for i, sigma in enumerate(sigmas):
        v = decided(q, state.name, sigma)
        if len(v) < state.m:
            raise Undecided(f"selector {sigma} decides fewer than m={state.m} letters")
    ref = refine_split_level(tree, level, coord.keep(eta[beta]), groups, value, state.m,
                             state.A.nodes, state.alphabet, floor=min_length,
                             max_subsets=max_subsets)
    new_tree = restrict(tree, ref.overrides)
    new_q = q.replace_coordinate(beta, coord.with_condition(Condition(coord.stem, new_tree)))
    A_nodes = state.A.nodes | prefix_closure(ref.values)
    if frozenset(s for s in A_nodes if len(s) <= state.m) != state.A.nodes:
        raise InvalidInput("state is not consolidated: new values leave A below length m")
    new_eta = dict(eta)
    new_eta[beta] += 1
    A = FiniteTree(TreeDomain.uniform(state.alphabet, max(ref.M, 1)), A_nodes)
    return ConsolidationState(new_q, F, new_eta, ref.M, A, state.name, state.alphabet)


def single_coordinate_state(name: DecidedName) -> ConsolidationState:
    """Fresh state for one accelerating coordinate labelled by ``name``."""
    q = ProductCondition((Coordinate(ACCELERATING, name.condition),))
    return ConsolidationState.initial(q, ProductName.from_decided(name), (0,),
                                      name.output_alphabet)


def consolidate_to_cover(name: DecidedName, t: int, *, max_subsets: int = MAX_SUBSETS):
    """Iterate :func:`consolidate_step` ``t`` times on one coordinate.

    The pruned tree is closed along leftmost paths and the cover is ``A`` cut
    at the target length, which makes the result comparable with
    :func:`treeloc.pruning.prune_to_cover`.
    """
    state = single_coordinate_state(name)
    lengths = []
    for r in range(t):
        state = consolidate_step(state, 0, min_length=name.target_length if r == t - 1 else 0,
                                 max_subsets=max_subsets)
        lengths.append(state.m)
    coord = state.q[0]
    level = split_level(coord.tree, coord.stem, state.eta[0])
    tree = close_leftmost(coord.tree, level).materialize()
    E = name.target_length
    cover = FiniteTree(TreeDomain.uniform(name.output_alphabet, max(E, 1)),
                       frozenset(s for s in state.A.nodes if len(s) <= E))
    return PruneResult(Condition(coord.stem, tree), cover, tuple(lengths)), state
