from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from treeloc.acceptance import grouped_family
from treeloc.errors import BudgetExceeded, HypothesisFailed, InvalidInput
from treeloc.extraction import (FunctionFamily, check_grouped_hypothesis, extract_2tree,
                                extract_grouped, n_bound, select_common_subset)
from treeloc.trees import validate


def is_two_tree(rows):
    succ = {}
    for r in rows:
        r = tuple(int(x) for x in r)
        for l in range(len(r)):
            succ.setdefault(r[:l], set()).add(r[l])
    return all(len(s) <= 2 for s in succ.values())


def test_n_bound_values():
    assert n_bound(2, 1) == 9
    assert n_bound(1, 2) == 27
    assert n_bound(2, 2) == 3 ** 9
    assert n_bound(0, 1) == 1


def test_n_bound_tower_overflows_budget():
    with pytest.raises(BudgetExceeded):
        n_bound(2, 4)


def test_single_function_family():
    fam = FunctionFamily(3, 4, np.array([[2, 1, 0, 0], [1, 1, 1, 1], [0, 0, 0, 0]]))
    assert extract_2tree(fam, 1).selected == (0,)


def test_ternary_digit_family():
    fam = FunctionFamily(3, 3, np.array([[0, i // 3, i % 3] for i in range(9)]))
    res = extract_2tree(fam, 2)
    assert res.selected == (0, 3)
    assert validate(res.witness_tree, 2).is_k_tree


def test_size_must_match_strictly():
    fam = FunctionFamily(3, 2, np.zeros((10, 2), dtype=int))
    with pytest.raises(InvalidInput):
        extract_2tree(fam, 2)
    assert len(extract_2tree(fam, 2, strict=False).selected) == 2


@settings(max_examples=300)
@given(st.integers(1, 3), st.data())
def test_extraction_is_among_brute_force_solutions(n, data):
    L = data.draw(st.integers(1, 4))
    F = data.draw(arrays(np.int64, (3 ** n, L), elements=st.integers(0, 2)))
    res = extract_2tree(FunctionFamily(3, L, F), n)
    assert len(res.selected) == n and len(set(res.selected)) == n
    assert is_two_tree(F[list(res.selected)])
    if n <= 2:
        valid = {S for S in combinations(range(3 ** n), n) if is_two_tree(F[list(S)])}
        assert res.selected in valid


def test_extraction_is_deterministic():
    rng = np.random.default_rng(7)
    F = rng.integers(0, 3, size=(27, 5))
    fam = FunctionFamily(3, 5, F)
    assert extract_2tree(fam, 3).selected == extract_2tree(fam, 3).selected


def test_hypothesis_single_group_checks_tree_only():
    F = np.array([[0, 0, 0], [1, 2, 2], [2, 0, 1]])
    fam = FunctionFamily(3, 3, F)
    report = check_grouped_hypothesis(fam, 1)
    assert not report and report.kind == "tree" and report.violation == ((),)
    assert check_grouped_hypothesis(fam, 0)


def test_hypothesis_rigidity_violation_witness():
    # groups share prefix (0,) but diverge afterwards
    G = np.array([[[0, 1, 1], [1, 0, 0]],
                  [[0, 2, 2], [1, 0, 0]]])
    fam = FunctionFamily.from_groups(3, G)
    report = check_grouped_hypothesis(fam, 1)
    assert not report and report.kind == "rigidity"
    assert report.violation == ((0, 0), (1, 0))


def test_constructed_family_satisfies_hypothesis():
    rng = np.random.default_rng(1)
    fam = grouped_family(rng, 2, 2, 1, 4)
    assert len(fam) == 2 * n_bound(2, 2)
    assert check_grouped_hypothesis(fam, 1)
    res = extract_grouped(fam, 2, 1)
    rows = fam.group_matrix()[:, list(res.selected)].reshape(-1, 4)
    assert is_two_tree(rows)
    assert validate(res.witness_tree, 2).is_k_tree


def test_one_group_grouped_equals_plain():
    rng = np.random.default_rng(3)
    for _ in range(20):
        F = rng.integers(0, 3, size=(9, 4))
        fam = FunctionFamily(3, 4, F)
        assert extract_grouped(fam, 2, 0).selected == extract_2tree(fam, 2).selected


def test_two_constant_groups():
    G = np.stack([np.zeros((27, 3), dtype=int), np.ones((27, 3), dtype=int)])
    fam = FunctionFamily.from_groups(3, G)
    res = extract_grouped(fam, 1, 1)
    assert len(res.selected) == 1
    assert validate(res.witness_tree, 2).is_k_tree


def test_grouped_extraction_refuses_failed_hypothesis():
    G = np.zeros((2, 27, 2), dtype=int)
    G[0, 0] = [0, 1]
    G[1, 0] = [0, 2]
    with pytest.raises(HypothesisFailed):
        extract_grouped(FunctionFamily.from_groups(3, G), 1, 1)


def test_family_json_round_trip():
    fam = FunctionFamily.from_groups(3, np.arange(12).reshape(2, 3, 2) % 3)
    back = FunctionFamily.from_json(fam.to_json())
    assert np.array_equal(back.functions, fam.functions)
    assert np.array_equal(back.groups, fam.groups)


def test_family_rejects_bad_letters():
    with pytest.raises(InvalidInput):
        FunctionFamily(3, 2, np.array([[0, 3]]))


def test_select_common_subset_keeps_base_tree():
    # base tree already splits twice at the root, so new values may not add a third letter
    base = frozenset({(), (0,), (1,)})
    values = [[(0, 0), (2, 0), (1, 1), (0, 1)]]
    S = select_common_subset(values, 2, base, 3, 1)
    chosen = [values[0][i] for i in S]
    assert all(v[0] in (0, 1) for v in chosen)
    assert select_common_subset([[(2, 0), (2, 1)]], 2, base, 3, 1) is None


def test_select_common_subset_prefers_distinct_values():
    values = [[(0,), (0,), (1,)]]
    assert select_common_subset(values, 2, frozenset({()}), 3, 0) == (0, 2)


@given(st.lists(st.tuples(*[st.integers(0, 2)] * 3), min_size=3, max_size=3))
def test_select_common_subset_result_is_valid(row):
    S = select_common_subset([row], 2, frozenset({()}), 3, 0)
    assert S is not None  # 3 values always contain a valid pair
    assert is_two_tree([row[i] for i in S])
