import json
from itertools import combinations, product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import closure, successor_counts
from treeloc.acceptance import compose_cases
from treeloc.errors import BudgetExceeded, InvalidInput, NotSkeletal
from treeloc.covers import (CoverInstance, candidates, compose_covers, family_covers, min_cover,
                            min_cover_predictors, min_cover_trees, monotonicity_report,
                            verify_certificate)
from treeloc.prediction import Predictor, predicted_set, tree_to_predictor
from treeloc.trees import FiniteTree, TreeDomain, validate


def brute_tree_cover(b, D, k):
    """Smallest number of k-trees covering b^D, from raw leaf subsets."""
    points = list(product(range(b), repeat=D))
    sets = []
    for bits in range(1, 1 << len(points)):
        leaves = [p for i, p in enumerate(points) if bits >> i & 1]
        if max(successor_counts(closure(leaves)).values()) <= k:
            sets.append(bits)
    maximal = [s for s in sets if not any(s != t and s & t == s for t in sets)]
    full = (1 << len(points)) - 1
    return _min_union(maximal, full)


def brute_predictor_cover(b, k, D, m):
    nodes = [s for n in range(D) for s in product(range(b), repeat=n)]
    options = [c for r in range(1, min(k, b) + 1) for c in combinations(range(b), r)]
    points = list(product(range(b), repeat=D))
    sets = set()
    for choice in product(options, repeat=len(nodes)):
        pi = Predictor(b, k, D, dict(zip(nodes, choice)))
        got = predicted_set(pi, m)
        sets.add(sum(1 << i for i, p in enumerate(points) if p in got))
    return _min_union(sorted(sets), (1 << len(points)) - 1)


def _min_union(sets, full):
    for size in range(1, len(sets) + 1):
        for fam in combinations(sets, size):
            acc = 0
            for s in fam:
                acc |= s
            if acc == full:
                return size
    return None


@pytest.mark.parametrize("b,D,k,expected", [(3, 1, 2, 2), (3, 2, 2, 3), (3, 2, 3, 1),
                                            (2, 2, 1, 4), (2, 3, 1, 8)])
def test_tree_cover_examples(b, D, k, expected):
    cert = min_cover_trees(b, D, k)
    assert cert.size == expected
    assert verify_certificate(cert)


@pytest.mark.parametrize("b,D,k", [(2, 2, 1), (3, 1, 1), (3, 2, 2), (2, 3, 1), (3, 2, 1)])
def test_tree_cover_matches_brute_force(b, D, k):
    assert min_cover_trees(b, D, k).size == brute_tree_cover(b, D, k)


@pytest.mark.parametrize("b,k,D,m,expected", [(3, 2, 2, 0, 2), (2, 1, 2, 0, 2),
                                              (3, 2, 2, 1, 1)])
def test_predictor_cover_examples(b, k, D, m, expected):
    cert = min_cover_predictors(b, k, D, m)
    assert cert.size == expected
    assert verify_certificate(cert)
    assert brute_predictor_cover(b, k, D, m) == expected


def test_size_three_cover_refutes_two():
    cert = min_cover_trees(3, 2, 2)
    assert len(cert.refuted_family) == 2
    assert family_covers(cert.instance, cert.refuted_family) is not None
    assert not any(cert.uncovered_witness in t for t in cert.refuted_family)


def test_cover_members_are_leveled_k_trees():
    for t in min_cover_trees(3, 3, 2).family:
        r = validate(t, 2)
        assert r.is_k_tree and r.is_leveled


def test_every_candidate_is_a_maximal_k_tree():
    inst = CoverInstance(3, 2, 2)
    pairs = candidates(inst)
    # 3 choices of root pair, 3 choices of successor pair below each
    assert len(pairs) == 27
    assert all(bin(m).count("1") == 4 for m, _ in pairs)


def test_tree_cover_gives_predictor_cover():
    for b, D, k in [(3, 2, 2), (2, 2, 1), (2, 3, 1)]:
        cert = min_cover_trees(b, D, k)
        preds = [tree_to_predictor(t, k) for t in cert.family]
        inst = CoverInstance(b, D, k, "predictors", 0)
        assert family_covers(inst, preds) is None
        assert min_cover_predictors(b, k, D, 0).size <= cert.size


def test_certificate_json():
    obj = json.loads(json.dumps(min_cover_trees(3, 2, 2).to_json()))
    assert obj["size"] == 3 and obj["exact"]
    assert obj["instance"] == {"b": 3, "depth": 2, "k": 2, "mode": "trees"}
    assert len(obj["family"]) == 3
    assert "truncation" in obj["note"]


def test_budget_reports_trivial_bound():
    with pytest.raises(BudgetExceeded) as info:
        min_cover(CoverInstance(3, 3, 2), max_nodes=5)
    assert info.value.best == 8
    with pytest.raises(BudgetExceeded) as info:
        min_cover(CoverInstance(3, 2, 2), max_candidates=5)
    assert info.value.best == 4


def test_instance_validation():
    with pytest.raises(InvalidInput):
        CoverInstance(1, 2, 1)
    with pytest.raises(InvalidInput):
        CoverInstance(3, 2, 2, "predictors", 2)
    with pytest.raises(InvalidInput):
        CoverInstance(3, 2, 2, "forests")


def test_monotone_in_k():
    rep = monotonicity_report(3, 2, range(1, 4))
    assert [r[1] for r in rep.rows] == [9, 3, 1]
    assert [r[2] for r in rep.rows] == [3, 2, 1]
    assert rep.violations() == []
    assert "k" in rep.table()


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.integers(1, 2), st.integers(1, 3))
def test_cover_never_exceeds_trivial_bound(b, D, k):
    cert = min_cover_trees(b, D, k)
    assert cert.size <= cert.instance.trivial_bound()
    assert family_covers(cert.instance, cert.family) is None


@pytest.mark.parametrize("label", ["identity", "depth-3-skeleton-1"])
def test_compose_cases(label):
    outer, inner, k, dom = compose_cases()[label]
    out = compose_covers(outer, inner, k)
    assert len(out) <= len(outer) * len(inner)
    assert all(validate(t, k).is_k_tree for t in out)
    assert family_covers(CoverInstance(dom.b, dom.depth, k), out) is None


def test_compose_unary_runs_count():
    outer, inner, k, _ = compose_cases()["depth-3-skeleton-1"]
    assert len(compose_covers(outer, inner, k)) == 9 * 2


def test_compose_identity_returns_inner():
    outer, inner, k, _ = compose_cases()["identity"]
    out = compose_covers(outer, inner, k)
    assert {t.nodes for t in out} == {t.nodes for t in inner}


def test_compose_rejects_ragged_outer():
    dom = TreeDomain.uniform(3, 2)
    ragged = FiniteTree.from_branches(dom, [(0, 0), (0, 1), (0, 2), (1, 0)])
    with pytest.raises(NotSkeletal):
        compose_covers([ragged], [], 2)


def test_compose_rejects_bad_inner():
    outer, inner, k, _ = compose_cases()["identity"]
    with pytest.raises(InvalidInput):
        compose_covers(outer, inner[:-1], k)
    with pytest.raises(InvalidInput):
        compose_covers(outer, {5: inner}, k)
    full = FiniteTree.full(TreeDomain.uniform(3, 2))
    with pytest.raises(InvalidInput):
        compose_covers(outer, [full], k)
