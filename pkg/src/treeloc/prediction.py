"""Globally adaptive predictors at a finite horizon.

A predictor over alphabet ``b`` with horizon ``D`` maps every history of
length ``n < D`` to a set of at most ``k`` candidate next letters.  It
predicts ``f`` at grace ``m`` when ``f[n]`` is among the candidates for
``f[:n]`` at every ``n`` with ``m < n < D``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Mapping

from .errors import InvalidInput
from .trees import FiniteTree, Tree, TreeDomain, validate


@dataclass(frozen=True, eq=False)
class Predictor:
    b: int
    k: int
    horizon: int
    table: Mapping  # history tuple -> sorted tuple of letters

    def __post_init__(self):
        if self.b < 2 or self.k < 1 or self.horizon < 1:
            raise InvalidInput("predictor needs b >= 2, k >= 1, horizon >= 1")
        table = {}
        for s, letters in self.table.items():
            s = tuple(int(x) for x in s)
            letters = tuple(sorted({int(x) for x in letters}))
            if not 1 <= len(letters) <= self.k:
                raise InvalidInput(f"entry {list(s)} has {len(letters)} letters, need 1..{self.k}")
            if letters[0] < 0 or letters[-1] >= self.b:
                raise InvalidInput(f"entry {list(s)} uses letters outside 0..{self.b - 1}")
            table[s] = letters
        expected = sum(self.b ** n for n in range(self.horizon))
        if len(table) != expected or any(
                len(s) >= self.horizon or any(not 0 <= x < self.b for x in s) for s in table):
            raise InvalidInput("table must be total on every history of length < horizon")
        object.__setattr__(self, "table", table)

    def __eq__(self, other):
        return (isinstance(other, Predictor)
                and (self.b, self.k, self.horizon) == (other.b, other.k, other.horizon)
                and self.table == other.table)

    def __hash__(self):
        return hash((self.b, self.k, self.horizon, tuple(sorted(self.table.items()))))

    def __call__(self, history) -> tuple:
        return self.table[tuple(history)]

    @classmethod
    def from_function(cls, b, k, horizon, fn: Callable) -> "Predictor":
        """Tabulate ``fn(history)`` on every history."""
        table = {}
        for n in range(horizon):
            for s in product(range(b), repeat=n):
                table[s] = fn(s)
        return cls(b, k, horizon, table)

    @classmethod
    def constant(cls, b, k, horizon, letters) -> "Predictor":
        letters = tuple(letters)
        return cls.from_function(b, k, horizon, lambda s: letters)

    def to_json(self):
        return {"b": self.b, "k": self.k, "horizon": self.horizon,
                "table": [{"s": list(s), "set": list(v)} for s, v in sorted(self.table.items())]}

    @classmethod
    def from_json(cls, obj):
        try:
            table = {tuple(e["s"]): tuple(e["set"]) for e in obj["table"]}
            return cls(int(obj["b"]), int(obj["k"]), int(obj["horizon"]), table)
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"bad predictor JSON: {exc}") from exc


@dataclass(frozen=True)
class PredictionVerdict:
    """``predicted`` refers to the grace point that was asked about.

    ``grace`` is the least grace point ``<= m`` that already predicts ``f``;
    ``first_escape`` the least ``n > m`` where the prediction misses.
    """

    predicted: bool
    grace: int | None
    first_escape: int | None

    def to_json(self):
        return {"predicted": self.predicted, "grace": self.grace, "firstEscape": self.first_escape}


def _misses(pi: Predictor, f):
    return [n for n in range(1, len(f)) if f[n] not in pi.table[f[:n]]]


def predicts(pi: Predictor, f, m: int) -> PredictionVerdict:
    f = tuple(int(x) for x in f)
    if len(f) != pi.horizon:
        raise InvalidInput(f"f has length {len(f)}, predictor horizon is {pi.horizon}")
    if not 0 <= m < pi.horizon:
        raise InvalidInput(f"grace m must lie in 0..{pi.horizon - 1}")
    if any(not 0 <= x < pi.b for x in f):
        raise InvalidInput("f uses letters outside the predictor alphabet")
    misses = _misses(pi, f)
    escapes = [n for n in misses if n > m]
    if escapes:
        return PredictionVerdict(False, None, escapes[0])
    grace = misses[-1] if misses else 0
    return PredictionVerdict(True, grace, None)


def predicted_set(pi: Predictor, m: int) -> set:
    return {f for f in product(range(pi.b), repeat=pi.horizon) if predicts(pi, f, m).predicted}


def predictor_to_trees(pi: Predictor, m: int) -> list:
    """One leveled k-tree per stem of length ``m + 1``.

    Above the stem a node keeps exactly the successors the predictor allows,
    so the depth-``D`` branches of all trees are the functions predicted at
    grace ``m``.
    """
    if not 0 <= m < pi.horizon:
        raise InvalidInput(f"grace m must lie in 0..{pi.horizon - 1}")
    domain = TreeDomain.uniform(pi.b, pi.horizon)
    trees = []
    for stem in product(range(pi.b), repeat=min(m + 1, pi.horizon)):
        nodes = {stem[:j] for j in range(len(stem) + 1)}
        frontier = [stem]
        while frontier:
            t = frontier.pop()
            if len(t) < pi.horizon:
                for x in pi.table[t]:
                    nodes.add(t + (x,))
                    frontier.append(t + (x,))
        trees.append(FiniteTree(domain, frozenset(nodes)))
    return trees


def tree_to_predictor(tree: Tree, k: int) -> Predictor:
    """Predictor whose tables follow the successor sets of a leveled k-tree.

    Off-tree histories get the least ``min(k, b)`` letters.
    """
    dom = tree.domain
    if dom.kind != "uniform":
        raise InvalidInput("tree_to_predictor needs a uniform domain")
    report = validate(tree, k)
    if not report.is_k_tree:
        raise InvalidInput(f"tree is not a {k}-tree")
    if not report.is_leveled:
        raise InvalidInput("tree must be leveled")
    default = tuple(range(min(k, dom.b)))

    def entry(s):
        if s in tree:
            kids = tree.children(s)
            if kids:
                return tuple(c[-1] for c in kids)
        return default

    return Predictor.from_function(dom.b, k, dom.depth, entry)


def find_evader(predictors, m: int, *, b: int | None = None, horizon: int | None = None):
    """Lexicographically least ``f`` predicted by none of ``predictors``, or None."""
    predictors = list(predictors)
    if predictors:
        b = predictors[0].b if b is None else b
        horizon = predictors[0].horizon if horizon is None else horizon
        if any((p.b, p.horizon) != (b, horizon) for p in predictors):
            raise InvalidInput("predictors must share alphabet and horizon")
    if b is None or horizon is None:
        raise InvalidInput("b and horizon are required for an empty predictor list")
    if not 0 <= m < horizon:
        raise InvalidInput(f"grace m must lie in 0..{horizon - 1}")
    for f in product(range(b), repeat=horizon):
        if not any(predicts(p, f, m).predicted for p in predictors):
            return f
    return None
