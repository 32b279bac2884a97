"""The acceptance matrix as plain functions.

Each ``criterion_N`` returns ``(ok, detail)``.  Inputs are generated from a
seeded ``numpy`` generator, so reruns are bit-identical.  Both the test
suite and ``treeloc verify-suite`` call :func:`run_all`.
"""

from __future__ import annotations

import json
import time
from itertools import combinations, product

import numpy as np

from .consolidation import (ACCELERATING, BRANCHING, ConsolidationState, Coordinate,
                            HashProductName, ProductCondition, consolidate_step,
                            consolidate_to_cover, verify_consolidates)
from .covers import (CoverInstance, candidates, compose_covers, family_covers, min_cover,
                     monotonicity_report, verify_certificate)
from .extraction import (FunctionFamily, check_grouped_hypothesis, extract_2tree,
                         extract_grouped, n_bound)
from .prediction import Predictor, predicted_set, predictor_to_trees, predicts, tree_to_predictor
from .pruning import Condition, DecidedName, HashName, avoid_tree, prune_to_cover, slalom_of_decided
from .trees import (FiniteTree, TreeDomain, build_minimal_accelerating, full_branching_tree,
                    is_subtree, split_level, subtree_at, validate)

SEED = 20240601


def _closure_ok(rows, bound=2):
    succ = {}
    for r in rows:
        r = tuple(int(x) for x in r)
        for l in range(len(r)):
            succ.setdefault(r[:l], set()).add(r[l])
    return all(len(s) <= bound for s in succ.values())


# ---------------------------------------------------------------- extraction


def criterion_1(seed=SEED, cases=10_000):
    """Random ternary families: extraction size, witness shape, brute-force agreement."""
    rng = np.random.default_rng(seed)
    failures = []
    brute = 0
    for case in range(cases):
        n = 1 + case % 3
        F = rng.integers(0, 3, size=(3 ** n, 5))
        res = extract_2tree(FunctionFamily(3, 5, F), n)
        if len(res.selected) != n or not validate(res.witness_tree, 2).is_k_tree:
            failures.append(case)
            continue
        if n <= 2:
            short = FunctionFamily(3, 3, F[:, :3])
            got = extract_2tree(short, n).selected
            valid = {S for S in combinations(range(3 ** n), n) if _closure_ok(F[list(S), :3])}
            brute += 1
            if got not in valid:
                failures.append(case)
    return not failures, {"cases": cases, "bruteForced": brute, "failures": failures[:5]}


def criterion_2():
    want = {(2, 1): 9, (1, 2): 27, (2, 2): 3 ** 9}
    got = {k: n_bound(*k) for k in want}
    return got == want, {f"N{n},{k}": v for (n, k), v in got.items()}


def grouped_family(rng, a, n, m, length):
    """A family satisfying the grouped hypothesis at ``m``.

    Prefixes of length ``m`` come from a random leveled 2-tree.  Each prefix
    is private to one group (free tails) or shared, in which case every row
    carrying it is one fixed function.
    """
    leaves = [()]
    for _ in range(m):
        leaves = [s + (x,) for s in leaves
                  for x in rng.choice(3, size=int(rng.integers(1, 3)), replace=False).tolist()]
    owner = rng.integers(-1, a, size=len(leaves))
    owner[rng.integers(len(leaves))] = -1
    shared = {i: tuple(leaves[i]) + tuple(rng.integers(0, 3, size=length - m).tolist())
              for i in range(len(leaves)) if owner[i] == -1}
    need = n_bound(n, a)
    blocks = []
    for j in range(a):
        allowed = np.flatnonzero((owner == j) | (owner == -1))
        pick = rng.choice(allowed, size=need)
        tails = rng.integers(0, 3, size=(need, length - m))
        rows = np.empty((need, length), dtype=np.int64)
        for r, i in enumerate(pick.tolist()):
            rows[r] = shared[i] if i in shared else tuple(leaves[i]) + tuple(tails[r].tolist())
        blocks.append(rows)
    return FunctionFamily.from_groups(3, np.stack(blocks))


def criterion_3(seed=SEED, cases=1000):
    rng = np.random.default_rng(seed + 3)
    failures = []
    for case in range(cases):
        a = 1 + case % 2
        n = 1 + (case // 2) % 2
        m = int(rng.integers(0, 3))
        fam = grouped_family(rng, a, n, m, m + 3)
        if not check_grouped_hypothesis(fam, m):
            failures.append((case, "hypothesis"))
            continue
        res = extract_grouped(fam, n, m)
        rows = fam.group_matrix()[:, list(res.selected)].reshape(-1, fam.length)
        if len(res.selected) != n or not _closure_ok(rows) or not validate(res.witness_tree, 2).is_k_tree:
            failures.append((case, "closure"))
    return not failures, {"cases": cases, "failures": failures[:5]}


# -------------------------------------------------------------------- covers


def _brute_refutes(inst, size):
    """Independent check: no ``size`` candidates cover ``b^D``."""
    masks = [mk for mk, _ in candidates(inst)]
    full = (1 << inst.b ** inst.depth) - 1
    for combo in combinations(masks, size):
        acc = 0
        for mk in combo:
            acc |= mk
        if acc == full:
            return False
    return True


def _cover_case(inst, expected):
    cert = min_cover(inst)
    ok = cert.size == expected and verify_certificate(cert)
    if cert.size > 1:
        ok = ok and _brute_refutes(inst, cert.size - 1)
    return ok, {"instance": inst.to_json(), "size": cert.size,
                "witness": list(cert.uncovered_witness)}


def criterion_4():
    cases = [((3, 1, 2), 2), ((3, 2, 2), 3), ((3, 2, 3), 1)]
    rows = [_cover_case(CoverInstance(b, D, k), want) for (b, D, k), want in cases]
    return all(ok for ok, _ in rows), {"rows": [d for _, d in rows]}


def criterion_5():
    cases = [((3, 2, 2, 0), 2), ((2, 1, 2, 0), 2)]
    rows = [_cover_case(CoverInstance(b, D, k, "predictors", m), want)
            for (b, k, D, m), want in cases]
    return all(ok for ok, _ in rows), {"rows": [d for _, d in rows]}


def criterion_6():
    rep = monotonicity_report(3, 2, [2, 3])
    ok = not rep.violations() and all(None not in r for r in rep.rows)
    return ok, rep.to_json()


# ------------------------------------------------------------------- pruning


def pruning_invariants(name, res, t):
    """List of failed invariants for one pruning result."""
    bad = []
    tree = res.pruned.tree
    if not validate(tree).is_accelerating:
        bad.append("accelerating")
    if not is_subtree(tree, name.condition.tree):
        bad.append("subset")
    if not validate(res.cover, name.output_alphabet - 1).is_k_tree:
        bad.append("cover")
    E = name.target_length
    for leaf in tree.maximal_nodes():
        if name.label(leaf)[:E] not in res.cover or len(name.label(leaf)) < E:
            bad.append("containment")
            break
    stack = [(res.pruned.stem, 0)]
    while stack:
        node, r = stack.pop()
        kids = tree.children(node)
        if not kids:
            if r != t:
                bad.append("split-count")
                break
        elif len(kids) == 1:
            stack.append((kids[0], r))
        elif len(kids) == r + 2:
            stack.extend((c, r + 1) for c in kids)
        else:
            bad.append("arity")
            break
    return bad


def criterion_7_names(count=100):
    tree = build_minimal_accelerating(12)
    return [DecidedName(Condition((), tree), 3, 2, HashName(seed)) for seed in range(count)]


def criterion_7(count=100):
    failures = []
    results = []
    for i, name in enumerate(criterion_7_names(count)):
        try:
            res = prune_to_cover(name, 2)
        except Exception as exc:  # any failure counts against the criterion
            failures.append((i, type(exc).__name__))
            continue
        bad = pruning_invariants(name, res, 2)
        if bad:
            failures.append((i, bad))
        results.append((name, res))
    return not failures, {"names": count, "failures": failures[:5]}, results


def _random_k_tree(rng, domain, k):
    nodes = {()}
    frontier = [()]
    while frontier:
        s = frontier.pop()
        if len(s) == domain.depth:
            continue
        width = domain.width(len(s))
        c = int(rng.integers(0, min(k, width) + 1))
        for x in rng.choice(width, size=c, replace=False).tolist():
            nodes.add(s + (x,))
            frontier.append(s + (x,))
    return FiniteTree(domain, frozenset(nodes))


def criterion_8(seed=SEED, cases=500):
    rng = np.random.default_rng(seed + 8)
    failures = []
    for case in range(cases):
        D = int(rng.integers(3, 9))
        tree = build_minimal_accelerating(D)
        stem = ()
        for _ in range(int(rng.integers(0, 2))):
            kids = tree.children(stem)
            stem = kids[int(rng.integers(len(kids)))]
        cond = Condition(stem, subtree_at(tree, stem)) if stem else Condition((), tree)
        U = _random_k_tree(rng, tree.domain, 2)
        out = avoid_tree(cond, U, 2)
        leaves = set(out.tree.maximal_nodes(out.stem))
        if any(len(s) == D and s in U for s in leaves):
            failures.append(case)
    return not failures, {"cases": cases, "failures": failures[:5]}


def _random_predictor(rng):
    b = int(rng.integers(2, 4))
    D = int(rng.integers(1, 4))
    k = int(rng.integers(1, 3))
    table = {}
    for n in range(D):
        for s in product(range(b), repeat=n):
            size = int(rng.integers(1, min(k, b) + 1))
            table[s] = tuple(rng.choice(b, size=size, replace=False).tolist())
    return Predictor(b, k, D, table), int(rng.integers(0, D))


def criterion_9(seed=SEED, cases=1000):
    rng = np.random.default_rng(seed + 9)
    failures = []
    for case in range(cases):
        pi, m = _random_predictor(rng)
        trees = predictor_to_trees(pi, m)
        union = {s for t in trees for s in t.nodes if len(s) == pi.horizon}
        if union != predicted_set(pi, m):
            failures.append((case, "union"))
            continue
        for t in trees:
            back = tree_to_predictor(t, pi.k)
            if not all(predicts(back, s, 0).predicted for s in t.nodes if len(s) == pi.horizon):
                failures.append((case, "round-trip"))
                break
    return not failures, {"cases": cases, "failures": failures[:5]}


def compose_cases():
    d2 = TreeDomain.uniform(3, 2)
    d3 = TreeDomain.uniform(3, 3)
    identity = ([FiniteTree.full(d2)], list(min_cover(CoverInstance(3, 2, 2)).family), 2, d2)
    unary = ([FiniteTree.from_branches(d3, [(a, b, c) for c in range(3)])
              for a in range(3) for b in range(3)],
             list(min_cover(CoverInstance(3, 1, 2)).family), 2, d3)
    return {"identity": identity, "depth-3-skeleton-1": unary}


def criterion_10():
    rows = {}
    ok = True
    for label, (outer, inner, k, dom) in compose_cases().items():
        out = compose_covers(outer, inner, k)
        inst = CoverInstance(dom.b, dom.depth, k)
        good = (family_covers(inst, out) is None and len(out) <= len(outer) * len(inner)
                and all(validate(t, k).is_k_tree for t in out))
        rows[label] = {"outputs": len(out), "bound": len(outer) * len(inner), "ok": good}
        ok = ok and good
    return ok, rows


def criterion_11(names=50, states=20):
    tree = build_minimal_accelerating(12)
    mismatches = []
    for seed in range(names):
        name = DecidedName(Condition((), tree), 3, 2, HashName(seed))
        a = json.dumps(prune_to_cover(name, 2).to_json(), sort_keys=True)
        b = json.dumps(consolidate_to_cover(name, 2)[0].to_json(), sort_keys=True)
        if a != b:
            mismatches.append(seed)
    state_failures = []
    for seed in range(states):
        st = mixed_state(seed)
        for beta in (0, 1):
            new = consolidate_step(st, beta)
            rep = verify_consolidates(new)
            keeps = frozenset(s for s in new.A.nodes if len(s) <= st.m) == st.A.nodes
            if not (rep.holds_1_to_3 and keeps and new.m > st.m):
                state_failures.append((seed, beta))
            st = new
    ok = not mismatches and not state_failures
    return ok, {"names": names, "mismatches": mismatches, "states": states,
                "stateFailures": state_failures}


def mixed_state(seed):
    """Accelerating coordinate next to a 2-branching one, labelled by a seeded product name."""
    q = ProductCondition((Coordinate(ACCELERATING, Condition((), build_minimal_accelerating(8))),
                          Coordinate(BRANCHING, Condition((), full_branching_tree(2, 6)), k=2)))
    return ConsolidationState.initial(q, HashProductName(seed), (0, 1))


def criterion_12(results):
    failures = []
    growth = []
    for i, (name, res) in enumerate(results):
        restricted = name.restrict(res.pruned)
        sl = slalom_of_decided(restricted)
        tree = res.pruned.tree
        if not all(sl.goes_through(name.label(l)) for l in tree.maximal_nodes()):
            failures.append((i, "pass-through"))
        for n, s in enumerate(sl.sets):
            if len(s) > len(split_level(tree, res.pruned.stem, n + 1)):
                failures.append((i, "size"))
        if i == 0:
            growth = sl.growth_table()
    return not failures, {"names": len(results), "failures": failures[:5], "growth": growth}


# ----------------------------------------------------------------------- run

LIMITS = {1: 60, 3: 60, 4: 120, 5: 120, 7: 60, 11: 120}


def run_all(quick=False):
    """Run every criterion; returns ``[(number, ok, seconds, detail)]``.

    ``quick`` shrinks the randomized sample sizes for smoke runs.
    """
    scale = 10 if quick else 1
    out = []

    def timed(num, fn, *args):
        t0 = time.perf_counter()
        try:
            ok, detail, *rest = fn(*args)
        except Exception as exc:
            ok, detail, rest = False, {"error": f"{type(exc).__name__}: {exc}"}, [[]]
        dt = time.perf_counter() - t0
        if num in LIMITS and dt > LIMITS[num]:
            ok = False
            detail = dict(detail, overTime=LIMITS[num])
        out.append((num, ok, dt, detail))
        return rest

    timed(1, criterion_1, SEED, 10_000 // scale)
    timed(2, criterion_2)
    timed(3, criterion_3, SEED, 1000 // scale)
    timed(4, criterion_4)
    timed(5, criterion_5)
    timed(6, criterion_6)
    (results,) = timed(7, criterion_7, 100 // scale)
    timed(8, criterion_8, SEED, 500 // scale)
    timed(9, criterion_9, SEED, 1000 // scale)
    timed(10, criterion_10)
    timed(11, criterion_11, 50 // scale, 20 // scale)
    timed(12, criterion_12, results)
    return out


def format_table(rows):
    lines = []
    for num, ok, dt, _ in rows:
        lines.append(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  ({dt:.2f}s)")
    return "\n".join(lines)
