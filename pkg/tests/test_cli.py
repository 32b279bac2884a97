import io
import json

import numpy as np
import pytest

from treeloc.acceptance import compose_cases
from treeloc.cli import main
from treeloc.consolidation import (ACCELERATING, BRANCHING, ConsolidationState, Coordinate,
                                   HashProductName, ProductCondition)
from treeloc.extraction import FunctionFamily
from treeloc.prediction import Predictor
from treeloc.pruning import Condition
from treeloc.trees import (FiniteTree, TreeDomain, build_minimal_accelerating,
                           full_branching_tree, tree_to_json)


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def dump(path, obj):
    path.write_text(json.dumps(obj))
    return path


def test_cover_certificate(tmp_path):
    code, out, _ = run("cover", "--b", 3, "--depth", 2, "--k", 2, "--mode", "trees", "--exact")
    assert code == 0
    obj = json.loads(out)
    assert obj["size"] == 3 and len(obj["family"]) == 3


def test_cover_predictors_and_table():
    code, out, _ = run("--format", "table", "cover", "--b", 3, "--depth", 2, "--k", 2,
                       "--mode", "predictors")
    assert code == 0 and out.startswith("size 2")


def test_cover_monotonicity_table():
    code, out, _ = run("cover", "--b", 3, "--depth", 2, "--k-range", "1,2,3", "--format", "table")
    assert code == 0
    assert "9" in out and "3" in out


def test_cover_budget_exit_code(monkeypatch):
    monkeypatch.setenv("TREELOC_MAX_SEARCH_NODES", "5")
    code, _, err = run("cover", "--b", 3, "--depth", 3, "--k", 2)
    assert code == 3 and "best bound 8" in err


def test_bad_budget_variable(monkeypatch):
    monkeypatch.setenv("TREELOC_MAX_CANDIDATES", "lots")
    assert run("cover", "--b", 3, "--depth", 2, "--k", 2)[0] == 2


def test_extract_ternary_digits(tmp_path):
    fam = FunctionFamily(3, 3, np.array([[0, i // 3, i % 3] for i in range(9)]))
    path = dump(tmp_path / "fam.json", fam.to_json())
    code, out, _ = run("extract", "--family", path, "--n", 2)
    assert code == 0 and json.loads(out) == {"selected": [0, 3]}


def test_extract_wrong_size_is_invalid(tmp_path):
    fam = FunctionFamily(3, 2, np.zeros((10, 2), dtype=int))
    path = dump(tmp_path / "fam.json", fam.to_json())
    assert run("extract", "--family", path, "--n", 2)[0] == 2
    assert run("extract", "--family", path, "--n", 2, "--loose")[0] == 0


def test_validate_exit_codes(tmp_path):
    full = FiniteTree.full(TreeDomain.uniform(3, 2))
    path = dump(tmp_path / "t.json", tree_to_json(full))
    assert run("validate", "--tree", path, "--class", "k-tree", "--k", 3)[0] == 0
    code, out, _ = run("validate", "--tree", path, "--class", "k-tree", "--k", 2)
    assert code == 1 and json.loads(out)["holds"] is False
    assert run("validate", "--tree", path, "--class", "k-tree")[0] == 2


def test_validate_dot_format(tmp_path):
    path = dump(tmp_path / "t.json", tree_to_json(FiniteTree.full(TreeDomain.uniform(2, 1))))
    code, out, _ = run("prune", "--minimal-depth", 12, "--t", 1, "--format", "dot")
    assert code == 0 and out.startswith("digraph")
    assert run("--format", "dot", "validate", "--tree", path, "--class", "leveled")[0] == 2


def test_predict_and_evade(tmp_path):
    pi = Predictor.constant(2, 1, 3, (0,))
    path = dump(tmp_path / "p.json", pi.to_json())
    code, out, _ = run("predict", "--predictor", path, "--f", "1,0,0", "--m", 0)
    assert code == 0 and json.loads(out)["predicted"]
    plist = dump(tmp_path / "ps.json", [Predictor.constant(2, 1, 2, (0,)).to_json()])
    code, out, _ = run("evade", "--predictors", plist)
    assert json.loads(out) == {"evader": [0, 1]}


def test_avoid(tmp_path):
    cond = Condition((), build_minimal_accelerating(6).materialize())
    U = FiniteTree(TreeDomain.accelerating(6), frozenset({()}))
    c = dump(tmp_path / "c.json", cond.to_json())
    u = dump(tmp_path / "u.json", tree_to_json(U))
    code, out, _ = run("avoid", "--condition", c, "--U", u, "--k", 2)
    assert code == 0 and json.loads(out)["stem"] == [0, 0, 0]


def test_prune_json_is_deterministic():
    a = run("--seed", 4, "prune", "--minimal-depth", 12, "--t", 2)
    b = run("prune", "--minimal-depth", 12, "--t", 2, "--seed", 4)
    assert a[0] == 0 and a[1] == b[1]


def test_slalom():
    code, out, _ = run("slalom", "--minimal-depth", 12, "--prune", 2)
    assert code == 0 and json.loads(out)["sets"]


def test_consolidate_round_trip(tmp_path):
    q = ProductCondition((Coordinate(ACCELERATING, Condition((), build_minimal_accelerating(4))),
                          Coordinate(BRANCHING, Condition((), full_branching_tree(2, 2)), k=2)))
    state = ConsolidationState.initial(q, HashProductName(6), (0, 1))
    path = dump(tmp_path / "s.json", state.to_json())
    code, out, _ = run("consolidate", "--state", path, "--beta", 0)
    assert code == 0
    obj = json.loads(out)
    assert obj["report"]["cond1"] and obj["report"]["cond3"]
    nxt = dump(tmp_path / "s2.json", obj["state"])
    assert run("consolidate", "--state", nxt, "--beta", 1)[0] == 0
    assert run("consolidate", "--state", path, "--beta", 7)[0] == 2


def test_compose(tmp_path):
    outer, inner, k, _ = compose_cases()["depth-3-skeleton-1"]
    o = dump(tmp_path / "o.json", [tree_to_json(t) for t in outer])
    i = dump(tmp_path / "i.json", [tree_to_json(t) for t in inner])
    code, out, _ = run("compose", "--outer", o, "--inner", i, "--k", k)
    assert code == 0 and len(json.loads(out)) == 18


def test_input_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run("validate", "--tree", bad, "--class", "leveled")[0] == 2
    assert run("validate", "--tree", tmp_path / "missing.json", "--class", "leveled")[0] == 2
    assert run("frobnicate")[0] == 2
    assert run("cover", "--b", 1, "--depth", 2, "--k", 1)[0] == 2


@pytest.mark.slow
def test_verify_suite_quick():
    code, out, _ = run("--format", "table", "verify-suite", "--quick")
    assert code == 0
    assert out.count("PASS") == 12
