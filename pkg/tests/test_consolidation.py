import json

import pytest

from treeloc.acceptance import mixed_state
from treeloc.consolidation import (ACCELERATING, BRANCHING, ConsolidationState, Coordinate,
                                   HashProductName, ProductCondition, ProductName,
                                   consolidate_step, consolidate_to_cover, extends, graft, grid,
                                   leq_F_eta, single_coordinate_state, verify_consolidates)
from treeloc.errors import InvalidInput, Undecided
from treeloc.pruning import Condition, DecidedName, HashName, prune_to_cover
from treeloc.trees import (FiniteTree, TreeDomain, build_minimal_accelerating,
                           full_branching_tree, split_level, subtree_at)

TREE12 = build_minimal_accelerating(12)


def small_product():
    return ProductCondition((Coordinate(ACCELERATING, Condition((), build_minimal_accelerating(5))),
                             Coordinate(BRANCHING, Condition((), full_branching_tree(2, 4)), k=2)))


def test_product_name_monotone_in_each_coordinate():
    name = HashProductName(3)
    a, b = (0, 1, 2, 0), (1, 0, 1)
    base = name((a[:2], b[:1]))
    assert name((a, b[:1]))[:len(base)] == base
    assert name((a[:2], b))[:len(base)] == base
    # extending the coordinate that binds the length lengthens the label
    assert len(name((a[:2], b[:1]))) > len(name((a[:1], b[:1])))
    assert len(name((a, b[:2]))) > len(name((a, b[:1])))


def test_coordinate_checks():
    assert small_product().check()
    bad = Coordinate(BRANCHING, Condition((), build_minimal_accelerating(4)), k=2)
    assert not bad.check()
    with pytest.raises(InvalidInput):
        Coordinate("weird", Condition((), build_minimal_accelerating(3)))


def test_graft_empty_selector_is_identity():
    q = small_product()
    assert graft(q, {}, {}) is q


def test_graft_single_coordinate():
    tree = build_minimal_accelerating(5)
    q = ProductCondition((Coordinate(ACCELERATING, Condition((), tree)),))
    p = graft(q, {0: (0, 1)}, {0: 1})
    assert p[0].stem == (0, 1)
    assert p[0].tree.materialize().nodes == subtree_at(tree, (0, 1)).materialize().nodes


def test_graft_two_coordinates_matches_set_builder():
    q = small_product()
    sigma = {0: (0, 1), 1: (1,)}
    p = graft(q, sigma, {0: 1, 1: 1})
    for a, node in sigma.items():
        full = q[a].tree.materialize().nodes
        expected = {t for t in full if t[:len(node)] == node or node[:len(t)] == t}
        assert p[a].tree.materialize().nodes == expected
        assert p[a].stem == node


def test_graft_leaves_other_coordinates():
    q = small_product()
    p = graft(q, {0: (0, 0)}, {0: 1})
    assert p[1] is q[1]


def test_graft_rejects_off_level_nodes():
    with pytest.raises(InvalidInput):
        graft(small_product(), {0: (0,)}, {0: 1})


def test_base_state_consolidates():
    st = ConsolidationState.initial(small_product(), HashProductName(0), (0, 1))
    rep = verify_consolidates(st)
    assert rep.holds_1_to_3 and rep.cond4 == "bounded-pass"


def test_single_coordinate_one_point_grid():
    st = single_coordinate_state(DecidedName(Condition((), TREE12), 3, 2, HashName(1)))
    assert grid(st.q, st.F, st.eta) == [{0: ()}]
    assert verify_consolidates(st).holds_1_to_3


def test_missing_value_breaks_condition_3():
    st = consolidate_step(mixed_state(2), 0)
    assert verify_consolidates(st).holds_1_to_3
    leaves = sorted(s for s in st.A.nodes if len(s) == st.m)
    pruned = frozenset(s for s in st.A.nodes if s != leaves[-1])
    broken = ConsolidationState(st.q, st.F, st.eta, st.m, FiniteTree(st.A.domain, pruned),
                                st.name, st.alphabet)
    rep = verify_consolidates(broken)
    assert not rep.cond3
    assert tuple(rep.witness["value"]) == leaves[-1]


def test_step_requires_long_enough_values():
    st = mixed_state(0)
    st = ConsolidationState(st.q, st.F, st.eta, 9, st.A, st.name)
    with pytest.raises(Undecided):
        verify_consolidates(st)


def test_first_step_matches_first_prune_round():
    name = DecidedName(Condition((), TREE12), 3, 1, HashName(5))
    res, state = consolidate_to_cover(name, 1)
    assert json.dumps(res.to_json()) == json.dumps(prune_to_cover(name, 1).to_json())
    assert state.eta == {0: 1}


def test_iterated_steps_match_pruning():
    for seed in range(15):
        name = DecidedName(Condition((), TREE12), 3, 2, HashName(seed))
        a = prune_to_cover(name, 2).to_json()
        b = consolidate_to_cover(name, 2)[0].to_json()
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_mixed_steps_keep_invariants():
    for seed in range(8):
        st = mixed_state(seed)
        for beta in (0, 1):
            new = consolidate_step(st, beta)
            assert verify_consolidates(new).holds_1_to_3
            assert frozenset(s for s in new.A.nodes if len(s) <= st.m) == st.A.nodes
            assert leq_F_eta(new.q, st.q, st.F, st.eta)
            assert new.q[1 - beta] is st.q[1 - beta]
            assert new.q[0].check() and new.q[1].check()
            st = new
        # one pass over F advances eta pointwise
        assert st.eta == {0: 1, 1: 1}


def test_branching_coordinate_keeps_every_successor():
    st = consolidate_step(consolidate_step(mixed_state(4), 0), 1)
    level = split_level(st.q[1].tree, st.q[1].stem, 1)
    assert len(level) == 2


def test_step_rejects_coordinates_outside_f():
    with pytest.raises(InvalidInput):
        consolidate_step(mixed_state(0), 5)


def test_extends_detects_grown_trees():
    q = small_product()
    p = graft(q, {0: (0, 1)}, {0: 1})
    assert extends(p, q) and not extends(q, p)


def test_state_json_round_trip():
    q = ProductCondition((Coordinate(ACCELERATING, Condition((), build_minimal_accelerating(3))),
                          Coordinate(BRANCHING, Condition((), full_branching_tree(2, 2)), k=2)))
    h = HashProductName(6)
    st = ConsolidationState.initial(q, h, (0, 1))
    obj = json.loads(json.dumps(st.to_json()))
    st2 = ConsolidationState.from_json(obj)
    assert isinstance(st2.name, ProductName)
    for combo in [((0, 1, 2), (1, 0)), ((0,), ()), ((0, 0), (0,))]:
        assert st2.name(combo) == h(combo)
    assert st2.to_json() == obj
    new = consolidate_step(st2, 0)
    assert verify_consolidates(new).holds_1_to_3


def test_product_name_json_is_total():
    obj = {"labels": [{"nodes": [[0]], "value": [1]}]}
    name = ProductName.from_json(obj)
    with pytest.raises(Undecided):
        name(((1,),))
