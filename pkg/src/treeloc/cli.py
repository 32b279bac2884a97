"""Command-line front end.

Exit codes: 0 success, 1 a checked property fails, 2 invalid input,
3 budget exceeded.  Budgets can be raised through environment variables
``TREELOC_MAX_SEARCH_NODES``, ``TREELOC_MAX_CANDIDATES``,
``TREELOC_MAX_SUBSETS`` and ``TREELOC_MAX_COORDINATES``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import consolidation, covers, pruning
from .acceptance import format_table, run_all
from .errors import BudgetExceeded, InvalidInput, TreelocError, Undecided, VerificationFailed
from .extraction import FunctionFamily, extract_2tree, extract_grouped
from .prediction import Predictor, find_evader, predicts
from .pruning import Condition, DecidedName, HashName
from .trees import build_minimal_accelerating, to_dot, tree_from_json, tree_to_json, validate

OK, FAILED, INVALID, BUDGET = 0, 1, 2, 3


class _Failed(Exception):
    def __init__(self, payload):
        super().__init__("verification failed")
        self.payload = payload


def budgets():
    def read(var, default):
        raw = os.environ.get(var)
        if raw is None:
            return default
        try:
            value = int(raw)
        except ValueError:
            raise InvalidInput(f"{var} must be an integer") from None
        if value <= 0:
            raise InvalidInput(f"{var} must be positive")
        return value

    return {"max_nodes": read("TREELOC_MAX_SEARCH_NODES", covers.MAX_SEARCH_NODES),
            "max_candidates": read("TREELOC_MAX_CANDIDATES", covers.MAX_CANDIDATES),
            "max_subsets": read("TREELOC_MAX_SUBSETS", pruning.MAX_SUBSETS),
            "max_coordinates": read("TREELOC_MAX_COORDINATES", consolidation.MAX_COORDINATES)}


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path} is not valid JSON: {exc}") from None


def _ints(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip() != "")
    except ValueError:
        raise InvalidInput(f"expected comma-separated integers, got {text!r}") from None


def _name(args):
    if args.name:
        return DecidedName.from_json(_load(args.name))
    if args.minimal_depth:
        tree = build_minimal_accelerating(args.minimal_depth)
        return DecidedName(Condition((), tree), 3, args.target_length, HashName(args.seed, 3, args.lag))
    raise InvalidInput("give --name or --minimal-depth")


# ----------------------------------------------------------------- commands


def cmd_validate(args):
    tree = tree_from_json(_load(args.tree))
    report = validate(tree, args.k)
    if args.tree_class in ("k-tree", "k-branching") and args.k is None:
        raise InvalidInput(f"--class {args.tree_class} needs --k")
    out = dict(report.to_json(), treeClass=args.tree_class, holds=report.holds(args.tree_class))
    if not out["holds"]:
        raise _Failed(out)
    return out


def cmd_extract(args):
    family = FunctionFamily.from_json(_load(args.family))
    if args.m is not None:
        res = extract_grouped(family, args.n, args.m, strict=not args.loose)
    else:
        res = extract_2tree(family, args.n, strict=not args.loose)
    out = {"selected": list(res.selected)}
    if args.witness:
        out["witnessTree"] = tree_to_json(res.witness_tree)
    return out


def cmd_predict(args):
    pi = Predictor.from_json(_load(args.predictor))
    return predicts(pi, _ints(args.f), args.m).to_json()


def cmd_evade(args):
    raw = _load(args.predictors)
    preds = [Predictor.from_json(p) for p in (raw if isinstance(raw, list) else raw["predictors"])]
    f = find_evader(preds, args.m, b=args.b, horizon=args.depth)
    return {"evader": None if f is None else list(f)}


def cmd_avoid(args):
    cond = Condition.from_json(_load(args.condition))
    U = tree_from_json(_load(args.U))
    return pruning.avoid_tree(cond, U, args.k)


def cmd_prune(args):
    name = _name(args)
    return pruning.prune_to_cover(name, args.t, max_subsets=budgets()["max_subsets"])


def cmd_consolidate(args):
    state = consolidation.ConsolidationState.from_json(_load(args.state))
    if len(state.q.coordinates) > budgets()["max_coordinates"]:
        raise BudgetExceeded("coordinate count exceeds TREELOC_MAX_COORDINATES")
    new = consolidation.consolidate_step(state, args.beta, max_subsets=budgets()["max_subsets"])
    report = consolidation.verify_consolidates(new)
    out = {"state": new.to_json(), "report": report.to_json()}
    if not report.holds_1_to_3:
        raise _Failed(out)
    return out


def cmd_slalom(args):
    name = _name(args)
    if args.prune is not None:
        res = pruning.prune_to_cover(name, args.prune, max_subsets=budgets()["max_subsets"])
        name = name.restrict(res.pruned)
    s = pruning.slalom_of_decided(name)
    return {"sets": [sorted(x) for x in s.sets], "levelSizes": list(s.level_sizes),
            "growth": s.growth_table()}


def cmd_cover(args):
    b = budgets()
    kw = {"max_nodes": b["max_nodes"], "max_candidates": b["max_candidates"]}
    if args.k_range:
        ks = _ints(args.k_range)
        rep = covers.monotonicity_report(args.b, args.depth, ks, m=args.m, **kw)
        if rep.violations():
            raise _Failed(rep)
        return rep
    mode = covers.PREDICTORS if args.mode == "predictors" else covers.TREES
    if args.k is None:
        raise InvalidInput("cover needs --k or --k-range")
    inst = covers.CoverInstance(args.b, args.depth, args.k, mode, args.m)
    cert = covers.min_cover(inst, **kw)
    if not covers.verify_certificate(cert):
        raise _Failed(cert)
    return cert


def cmd_compose(args):
    outer_raw = _load(args.outer)
    inner_raw = _load(args.inner)
    outer = [tree_from_json(t) for t in outer_raw]
    if isinstance(inner_raw, dict):
        inner = {int(d): [tree_from_json(t) for t in ts] for d, ts in inner_raw.items()}
    else:
        inner = [tree_from_json(t) for t in inner_raw]
    return covers.compose_covers(outer, inner, args.k)


def cmd_verify_suite(args):
    rows = run_all(quick=args.quick)
    out = {"seed": args.seed, "quick": args.quick,
           "criteria": [{"criterion": n, "pass": ok, "seconds": round(dt, 3)}
                        for n, ok, dt, _ in rows]}
    out["_table"] = format_table(rows)
    if not all(ok for _, ok, _, _ in rows):
        raise _Failed(out)
    return out


# ------------------------------------------------------------------- output


def _trees_in(result):
    if isinstance(result, list):
        return result
    if isinstance(result, Condition):
        return [result.tree]
    if isinstance(result, pruning.PruneResult):
        return [result.pruned.tree, result.cover]
    if isinstance(result, covers.CoverCertificate) and result.instance.mode == covers.TREES:
        return list(result.family)
    return None


def _as_json(result):
    if isinstance(result, list):
        return [tree_to_json(t) for t in result]
    if hasattr(result, "to_json"):
        return result.to_json()
    return {k: v for k, v in result.items() if not k.startswith("_")}


def _as_table(result):
    if isinstance(result, dict) and "_table" in result:
        return result["_table"]
    if isinstance(result, covers.MonotonicityReport):
        return result.table()
    if isinstance(result, covers.CoverCertificate):
        return f"size {result.size}\nwitness {list(result.uncovered_witness or [])}"
    data = _as_json(result)
    if isinstance(data, dict):
        return "\n".join(f"{k}: {json.dumps(v)}" for k, v in data.items())
    return json.dumps(data)


def emit(result, fmt, stream):
    if fmt == "dot":
        trees = _trees_in(result)
        if trees is None:
            raise InvalidInput("--format dot needs a tree-valued output")
        stream.write("".join(to_dot(t, f"T{i}") for i, t in enumerate(trees)))
    elif fmt == "table":
        stream.write(_as_table(result) + "\n")
    else:
        stream.write(json.dumps(_as_json(result), sort_keys=True) + "\n")


def build_parser():
    p = argparse.ArgumentParser(prog="treeloc", description=__doc__.splitlines()[0])
    p.add_argument("--format", choices=["json", "dot", "table"], default="json")
    p.add_argument("--seed", type=int, default=0, help="seed for generated inputs")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "dot", "table"], default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    s = sub.add_parser("validate", help="classify a tree")
    s.add_argument("--tree", required=True)
    s.add_argument("--class", dest="tree_class", required=True,
                   choices=["k-tree", "k-branching", "accelerating", "leveled", "perfect"])
    s.add_argument("--k", type=int)
    s.set_defaults(fn=cmd_validate)

    s = sub.add_parser("extract", help="pick functions whose closure is a 2-tree")
    s.add_argument("--family", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=int, help="cut for grouped extraction")
    s.add_argument("--loose", action="store_true", help="accept oversized families")
    s.add_argument("--witness", action="store_true", help="include the closure tree")
    s.set_defaults(fn=cmd_extract)

    s = sub.add_parser("predict", help="does a predictor predict f")
    s.add_argument("--predictor", required=True)
    s.add_argument("--f", required=True, help="comma-separated letters")
    s.add_argument("--m", type=int, default=0)
    s.set_defaults(fn=cmd_predict)

    s = sub.add_parser("evade", help="least function no predictor predicts")
    s.add_argument("--predictors", required=True)
    s.add_argument("--m", type=int, default=0)
    s.add_argument("--b", type=int)
    s.add_argument("--depth", type=int)
    s.set_defaults(fn=cmd_evade)

    s = sub.add_parser("avoid", help="move a condition off a k-tree")
    s.add_argument("--condition", required=True)
    s.add_argument("--U", required=True)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(fn=cmd_avoid)

    for cmd, fn, helptext in (("prune", cmd_prune, "prune a named condition to a 2-tree cover"),
                              ("slalom", cmd_slalom, "slalom of a named condition")):
        s = sub.add_parser(cmd, help=helptext)
        s.add_argument("--name")
        s.add_argument("--minimal-depth", type=int,
                       help="use the minimal accelerating tree with a seeded hash name")
        s.add_argument("--target-length", type=int, default=2)
        s.add_argument("--lag", type=int, default=0)
        if cmd == "prune":
            s.add_argument("--t", type=int, required=True)
        else:
            s.add_argument("--prune", type=int, help="prune with this many splits first")
        s.set_defaults(fn=fn)

    s = sub.add_parser("consolidate", help="one consolidation step")
    s.add_argument("--state", required=True)
    s.add_argument("--beta", type=int, required=True)
    s.set_defaults(fn=cmd_consolidate)

    s = sub.add_parser("cover", help="exact minimum cover")
    s.add_argument("--b", type=int, required=True)
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--k", type=int)
    s.add_argument("--k-range", help="comma-separated k values for a monotonicity table")
    s.add_argument("--mode", choices=["trees", "predictors"], default="trees")
    s.add_argument("--m", type=int, default=0)
    s.add_argument("--exact", action="store_true", help="exact search (the only mode)")
    s.set_defaults(fn=cmd_cover)

    s = sub.add_parser("compose", help="refine a cover through skeletons")
    s.add_argument("--outer", required=True)
    s.add_argument("--inner", required=True)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(fn=cmd_compose)

    s = sub.add_parser("verify-suite", help="run the acceptance matrix")
    s.add_argument("--quick", action="store_true")
    s.set_defaults(fn=cmd_verify_suite)
    return p


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INVALID if exc.code else OK
    try:
        result = args.fn(args)
        emit(result, args.format, stdout)
        return OK
    except _Failed as exc:
        emit(exc.payload, "table" if args.format == "table" else "json", stdout)
        return FAILED
    except (VerificationFailed, Undecided) as exc:
        stderr.write(f"treeloc: {exc}\n")
        return FAILED
    except BudgetExceeded as exc:
        best = f" (best bound {exc.best})" if exc.best is not None else ""
        stderr.write(f"treeloc: budget exceeded: {exc}{best}\n")
        return BUDGET
    except (InvalidInput, TreelocError) as exc:
        stderr.write(f"treeloc: {exc}\n")
        return INVALID


if __name__ == "__main__":
    sys.exit(main())
