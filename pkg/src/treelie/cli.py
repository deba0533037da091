"""Command-line front end: deterministic tables and graphs.

Six subcommands, one per module surface:

  series    rank tables of central / dimension series, subgroup orders
  cayley    graded Lie algebra Cayley graphs (DOT or JSON)
  growth    word-growth ball sizes
  vn        uniserial module profiles and certificates
  gs        generator-relator growth bound and exact witness
  jennings  rank sequence -> augmentation-quotient dimensions

`series jennings ...` and `series gs ...` are accepted as aliases for the
corresponding top-level commands.  Every command takes --json; tables
default to TSV.  Exit codes: 0 success, 1 invariant violation, 2 config
error, 3 budget exceeded.  TREELIE_BUDGET overrides the element budget.
"""

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .finite_quotients import (BudgetExceeded, FinitePermGroup,
                               GroupContext, verify_n_series)
from .lie_cayley import (build_graded_lie, cayley_graph, check_round_trip,
                         export_dot, export_json, grigorchuk_lie,
                         match_theorem_labels, overgroup_lie,
                         quaternion_lie)
from .series_tools import (augmentation_dims, golod_profile,
                           growth_bound_check, gs_bound_series,
                           gs_numeric_witness, jennings_product,
                           relator_profile)
from .tree_automorphisms import (grigorchuk_group, overgroup,
                                 parse_automaton)
from .vn_modules import check_dec1, corank_profile

_BUILTIN = ("grigorchuk", "overgroup")
_VERIFY_CAP = 1 << 12


# ---------------------------------------------------------------------------
# plumbing

def _budget(args):
    if getattr(args, "budget", None) is not None:
        return args.budget
    env = os.environ.get("TREELIE_BUDGET")
    return int(env) if env else None


def _named_generators(selector):
    """{name: automorphism} for a builtin name or an automaton file."""
    if selector == "grigorchuk":
        return grigorchuk_group()[1]
    if selector == "overgroup":
        return overgroup()[1]
    with open(selector, encoding="utf-8") as fh:
        _, elems, _ = parse_automaton(fh.read())
    return elems


def _context(selector, level, budget):
    if selector in _BUILTIN:
        return GroupContext.from_name(selector, level, budget=budget)
    with open(selector, encoding="utf-8") as fh:
        group, elems, name = parse_automaton(fh.read())
    return GroupContext(group, elems, level, budget=budget, name=name)


def _emit_tsv(columns, rows, comments=()):
    out = []
    for line in comments:
        out.append(f"# {line}")
    out.append("\t".join(columns))
    for row in rows:
        out.append("\t".join(str(v) for v in row))
    print("\n".join(out))


def _emit_json(payload):
    payload = dict(payload)
    payload["version"] = __version__
    print(json.dumps(payload, indent=2, sort_keys=True, default=str))


def _use_json(args):
    return args.json or getattr(args, "format", None) == "json"


# ---------------------------------------------------------------------------
# series

def _series_ranks(ctx, kind, depth):
    terms = ctx.lcs(depth) if kind == "lcs" else ctx.dim(depth)
    return terms


def cmd_series(args):
    budget = _budget(args)
    depth = args.degree if args.degree is not None else 2 * args.level - 1
    ctx = _context(args.group, args.level, budget)
    terms = _series_ranks(ctx, args.kind, depth + 1)
    top = terms[0].log2_order

    faithful = {}
    if args.level >= 2:
        prev = _context(args.group, args.level - 1, budget)
        prev_terms = _series_ranks(prev, args.kind, depth + 1)
        for n in range(1, depth + 1):
            if n <= len(prev_terms) - 1 and n <= len(terms) - 1:
                a, b = prev_terms[n - 1].rank, terms[n - 1].rank
                faithful[n] = a is not None and a == b

    rows = []
    for n in range(1, min(depth, len(terms) - 1) + 1):
        t = terms[n - 1]
        if t.log2_order == 0:
            break
        rows.append({
            "index": n,
            "log2_index": top - t.log2_order,
            "rank": t.rank,
            "faithful": "yes" if faithful.get(n) else "?",
            "log2_order": t.log2_order,
        })

    subgroups = []
    for spec in args.subgroup or ():
        pset = ctx.subgroup_from_spec(spec)
        subgroups.append({"spec": spec,
                          "log2_order": pset.log2_size(),
                          "log2_index": top - pset.log2_size()})

    checks = {"status": "skipped (not enumerated)"}
    psets = [t.pset for t in terms]
    if all(p is not None for p in psets) and psets[0].size <= _VERIFY_CAP:
        report = verify_n_series(psets, ctx.gen_rows,
                                 require_power_step=(args.kind == "dim"))
        checks = {"status": "ok" if not report["failures"] else "failed",
                  "failures": report["failures"]}

    if _use_json(args):
        _emit_json({"group": args.group, "kind": args.kind,
                    "level": args.level, "rows": rows,
                    "subgroups": subgroups, "checks": checks})
    else:
        comments = [f"group={args.group} kind={args.kind} "
                    f"level={args.level} log2|G|={top}"]
        for s in subgroups:
            comments.append(f"subgroup {s['spec']} "
                            f"log2_order={s['log2_order']} "
                            f"log2_index={s['log2_index']}")
        if checks["status"] == "failed":
            comments.append(f"invariant failures: {checks['failures']}")
        _emit_tsv(("index", "log2_index", "rank", "faithful"),
                  [(r["index"], r["log2_index"], r["rank"], r["faithful"])
                   for r in rows],
                  comments)
    return 1 if checks["status"] == "failed" else 0


# ---------------------------------------------------------------------------
# cayley

def _lie_for(args, budget):
    if args.group == "quaternion":
        return quaternion_lie()
    if args.group == "grigorchuk":
        return grigorchuk_lie(args.series, args.level, args.degrees,
                              budget=budget)
    if args.group == "overgroup":
        return overgroup_lie(args.series, args.level, args.degrees,
                             budget=budget)
    ctx = _context(args.group, args.level, budget)
    terms = (ctx.lcs(args.degrees + 1) if args.series == "lcs"
             else ctx.dim(args.degrees + 1))
    lie = build_graded_lie(terms, args.degrees, gen_rows=ctx.gen_rows,
                           restricted=(args.series == "dim"),
                           meta={"group": ctx.name or args.group,
                                 "series": args.series,
                                 "level": args.level,
                                 "generators": dict(zip(
                                     ctx.gen_names,
                                     [np.asarray(r) for r in
                                      ctx.gen_rows]))})
    return lie


def cmd_cayley(args):
    budget = _budget(args)
    lie = _lie_for(args, budget)
    graph = cayley_graph(lie, lie.meta["generators"])
    status = 0
    if not check_round_trip(graph):
        print("round-trip check failed", file=sys.stderr)
        status = 1
    if args.check and args.group in _BUILTIN:
        report = match_theorem_labels(lie)
        if not report["ok"]:
            print(f"label check failed: {report['summary']}",
                  file=sys.stderr)
            status = 1
    if args.format == "dot" and not args.json:
        sys.stdout.write(export_dot(graph))
    else:
        payload = export_json(graph)
        payload["group"] = args.group
        payload["series"] = args.series
        _emit_json(payload)
    return status


# ---------------------------------------------------------------------------
# growth

def cmd_growth(args):
    budget = _budget(args)
    ctx = _context(args.group, args.level, budget)
    balls = FinitePermGroup(ctx.gen_rows,
                            budget=budget).ball_sizes(args.radius)
    faithful = {}
    if args.level >= 2:
        prev = _context(args.group, args.level - 1, budget)
        prev_balls = FinitePermGroup(prev.gen_rows,
                                     budget=budget).ball_sizes(args.radius)
        faithful = {n: prev_balls[n] == balls[n]
                    for n in range(len(balls))}
    rows = [{"n": n, "ball": balls[n],
             "faithful": "yes" if faithful.get(n) else "?"}
            for n in range(len(balls))]

    status = 0
    dim_report = None
    if args.against_dims:
        dim_report = growth_bound_check(ctx, args.radius)
        if not dim_report["ok"]:
            status = 1

    if _use_json(args):
        payload = {"group": args.group, "level": args.level,
                   "radius": args.radius, "rows": rows}
        if dim_report is not None:
            payload["dimension_bound"] = dim_report
        _emit_json(payload)
    else:
        comments = [f"group={args.group} level={args.level}"]
        if dim_report is not None:
            comments.append(
                "a_n <= ball(n): "
                + ("ok" if dim_report["ok"] else "VIOLATED"))
        _emit_tsv(("n", "ball", "faithful"),
                  [(r["n"], r["ball"], r["faithful"]) for r in rows],
                  comments)
    return status


# ---------------------------------------------------------------------------
# vn modules

def cmd_vn(args):
    gens = _named_generators(args.group)
    if args.check_dec1:
        report = check_dec1(gens, args.level, radius=args.radius)
        rows = [{"n": s["n"], "r": s["r"],
                 "ok": "pass" if s["ok"] else "fail"}
                for s in report["steps"]]
        witnesses = {str(m): (w if w is None else
                              {"base": w["base"],
                               "conjugator": w["conjugator"]})
                     for m, w in report["witnesses"].items()}
        if _use_json(args):
            _emit_json({"group": args.group, "level": args.level,
                        "mode": "check-dec1", "rows": rows,
                        "witnesses": witnesses,
                        "hypothesis": report["hypothesis"],
                        "ok": report["ok"]})
        else:
            comments = [f"group={args.group} level={args.level} "
                        f"radius={args.radius}",
                        f"witness hypothesis: "
                        f"{'yes' if report['hypothesis'] else 'incomplete'}"]
            _emit_tsv(("n", "r", "status"),
                      [(r["n"], r["r"], r["ok"]) for r in rows], comments)
        return 0 if report["ok"] else 1

    coranks = corank_profile(list(gens.values()), args.level)
    rows = [{"r": r, "corank": c} for r, c in enumerate(coranks)]
    if _use_json(args):
        _emit_json({"group": args.group, "level": args.level,
                    "mode": "profile", "rows": rows})
    else:
        _emit_tsv(("r", "corank"),
                  [(r["r"], r["corank"]) for r in rows],
                  [f"group={args.group} level={args.level}"])
    return 0


# ---------------------------------------------------------------------------
# generator-relator bounds

def cmd_gs(args):
    profile = relator_profile(args.relators_profile)
    xi = Fraction(args.xi)
    bound = gs_bound_series(args.d, profile, args.degree)
    witness = gs_numeric_witness(args.d, profile, xi, args.degree,
                                 all_ones_from=profile.tail_from)
    if _use_json(args):
        _emit_json({"d": args.d, "relators_profile": args.relators_profile,
                    "xi": str(xi),
                    "witness": {k: str(v) if isinstance(v, Fraction)
                                else v for k, v in witness.items()},
                    "bound": list(bound.coeffs)})
    else:
        comments = [f"d={args.d} profile={args.relators_profile} "
                    f"xi={xi}",
                    f"witness value {witness['value']} "
                    f"({'negative' if witness['negative'] else 'nonnegative'})"]
        _emit_tsv(("n", "c_n"),
                  [(n, bound[n]) for n in range(args.degree + 1)],
                  comments)
    return 0


def cmd_jennings(args):
    try:
        b = [int(x) for x in args.b.split(",")] if args.b else []
    except ValueError:
        raise ValueError(f"--b must be a comma-separated integer list, "
                         f"got {args.b!r}")
    series = jennings_product(b, args.p, args.degree)
    if _use_json(args):
        _emit_json({"b": b, "p": args.p, "degree": args.degree,
                    "coeffs": list(series.coeffs),
                    "total": series.total()})
    else:
        _emit_tsv(("n", "a_n"),
                  [(n, series[n]) for n in range(args.degree + 1)],
                  [f"b={','.join(map(str, b))} p={args.p} "
                   f"total={series.total()}"])
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_common(sub):
    sub.add_argument("--json", action="store_true",
                     help="emit JSON instead of TSV")
    sub.add_argument("--budget", type=int, default=None,
                     help="element budget override (default: "
                          "TREELIE_BUDGET)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="treelie",
        description="Series, Lie algebras and growth of tree "
                    "automorphism groups.")
    parser.add_argument("--version", action="version",
                        version=f"treelie {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("series", help="central / dimension series ranks")
    p.add_argument("--group", default="grigorchuk",
                   help="builtin name or automaton file")
    p.add_argument("--kind", choices=("lcs", "dim"), default="dim")
    p.add_argument("--level", type=int, default=5)
    p.add_argument("--degree", type=int, default=None,
                   help="table depth (default 2*level-1)")
    p.add_argument("--subgroup", action="append",
                   help="named subgroup spec (K, T, KxK, N_2, gamma_5, "
                        "dim_7, rist(3), stab(2)); repeatable")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    _add_common(p)
    p.set_defaults(func=cmd_series)

    p = subs.add_parser("cayley", help="graded Lie algebra Cayley graph")
    p.add_argument("--group", default="grigorchuk",
                   help="grigorchuk, overgroup, quaternion, or automaton "
                        "file")
    p.add_argument("--series", choices=("lcs", "dim"), default="dim")
    p.add_argument("--degrees", type=int, default=6)
    p.add_argument("--level", type=int, default=5)
    p.add_argument("--format", choices=("dot", "json"), default="dot")
    p.add_argument("--check", action="store_true",
                   help="also verify drawn labels (builtin groups)")
    _add_common(p)
    p.set_defaults(func=cmd_cayley)

    p = subs.add_parser("growth", help="word growth ball sizes")
    p.add_argument("--group", default="grigorchuk")
    p.add_argument("--level", type=int, default=5)
    p.add_argument("--radius", type=int, default=5)
    p.add_argument("--against-dims", action="store_true",
                   help="check a_n <= ball(n) (needs |Q| <= 2^10)")
    _add_common(p)
    p.set_defaults(func=cmd_growth)

    p = subs.add_parser("vn", help="uniserial module profile / certificate")
    p.add_argument("--group", default="grigorchuk")
    p.add_argument("--level", type=int, default=3,
                   help="module level n")
    p.add_argument("--radius", type=int, default=4,
                   help="witness search radius")
    p.add_argument("--profile", action="store_true",
                   help="corank table (default mode)")
    p.add_argument("--check-dec1", action="store_true",
                   help="full uniseriality certificate")
    _add_common(p)
    p.set_defaults(func=cmd_vn)

    p = subs.add_parser("gs", help="generator-relator growth bound")
    p.add_argument("--d", type=int, default=2, help="generator count")
    p.add_argument("--relators-profile", default="0^7,1*",
                   help='relator counts, e.g. "0^7,1*"')
    p.add_argument("--xi", default="3/4",
                   help="rational evaluation point in [0,1)")
    p.add_argument("--degree", type=int, default=64)
    _add_common(p)
    p.set_defaults(func=cmd_gs)

    p = subs.add_parser("jennings",
                        help="rank sequence -> dimension series")
    p.add_argument("--b", default="",
                   help='comma-separated ranks, e.g. "3,2,1,2,1"')
    p.add_argument("--p", type=int, default=2,
                   help="characteristic (0 for characteristic zero)")
    p.add_argument("--degree", type=int, default=20)
    _add_common(p)
    p.set_defaults(func=cmd_jennings)

    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    # `series jennings ...` / `series gs ...` alias the top-level commands
    if len(argv) >= 2 and argv[0] == "series" and argv[1] in ("jennings",
                                                              "gs"):
        argv = argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except (ValueError, NotImplementedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
