"""Command-line surface.

Subcommands: run, trace, hot, extract, optimize, check, pipeline, gp-compile,
gp-trace, gp-check, gen, render.  Exit codes: 0 all PASS, 1 any FAIL,
2 usage or parse errors.  Reports are deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import gen as genmod
from . import gp as gpmod
from . import hotpath, observe, optimize, textio, witness
from .extract import extract_gp, extract_nested
from .lang import Program, rename_equal, well_formed
from .semantics import Store, run
from .values import UNDEF


class CliError(Exception):
    pass


def _load_program(path: str) -> Program:
    p = textio.parse_program(Path(path).read_text())
    diags = well_formed(p)
    if diags:
        raise CliError("program is not well-formed:\n  " + "\n  ".join(diags))
    return p


def _initial_stores(args) -> list[Store]:
    stores: list[Store] = []
    if getattr(args, "initials", None):
        text = args.initials
        if Path(text).exists():
            text = Path(text).read_text()
        data = json.loads(text)
        if isinstance(data, dict):
            data = [data]
        stores.extend(textio.store_from_json(obj) for obj in data)
    if getattr(args, "sample", 0):
        pool_vars = getattr(args, "_sample_vars", ("x", "y", "z", "w", "s", "i", "j"))
        stores.extend(genmod.gen_stores(args.seed, pool_vars, args.sample))
    if not stores:
        stores.append(Store())
    return stores


def _mine(p: Program, original: Program, stores, args) -> list[tuple[hotpath.HotPath, int]]:
    found: list[tuple[hotpath.HotPath, int]] = []
    for rho in stores:
        r = run(p, rho, args.budget)
        mined = hotpath.outerhot_n(r.states, original, args.threshold, args.domain, p,
                                   with_counts=True)
        for hp, c in mined:
            if all(hp != h for h, _ in found):
                found.append((hp, c))
    return found


def _hp_json(hp: hotpath.HotPath, count_: int) -> dict:
    return {
        "domain": hp.domain,
        "threshold": hp.threshold,
        "count": count_,
        "pairs": [{"store": str(a), "command": str(c)} for a, c in hp.pairs],
    }


def cmd_run(args) -> int:
    p = _load_program(args.program)
    for rho in _initial_stores(args):
        r = run(p, rho, args.budget)
        last = r.states[-1]
        status = "truncated" if r.truncated else "complete"
        print(f"{status} after {len(r.states)} states; final {last}")
    return 0


def cmd_trace(args) -> int:
    p = _load_program(args.program)
    (rho,) = _initial_stores(args)[:1] or [Store()]
    r = run(p, rho, args.budget)
    sys.stdout.write(textio.trace_to_jsonl(r.states, r.truncated))
    return 0


def cmd_hot(args) -> int:
    p = _load_program(args.program)
    stores = _initial_stores(args)
    for hp, c in _mine(p, p, stores, args):
        print(f"{args.threshold}-hot [{args.domain}] : {hp}  (count {c})")
    return 0


def _select_hotpath(found, index: int) -> hotpath.HotPath:
    if not found:
        raise CliError("no hot path found")
    if index >= len(found):
        raise CliError(f"hot path index {index} out of range ({len(found)} found)")
    return found[index][0]


def cmd_extract(args) -> int:
    p = _load_program(args.program)
    original = _load_program(args.original) if args.original else p
    stores = _initial_stores(args)
    hp = _select_hotpath(_mine(p, original, stores, args), args.hotpath)
    st = extract_nested(p, hp, original)
    if args.dot:
        Path(args.dot).write_text(textio.program_to_dot(st.transformed, st.stitched))
    sys.stdout.write(textio.print_program(st.transformed))
    return 0


def cmd_optimize(args) -> int:
    p = _load_program(args.program)
    original = _load_program(args.original) if args.original else p
    stores = _initial_stores(args)
    hp = _select_hotpath(_mine(p, original, stores, args), args.hotpath)
    out = p
    for name in args.passes:
        try:
            opt = optimize.PASSES[name]
        except KeyError:
            raise CliError(f"unknown pass {name!r}; have {sorted(optimize.PASSES)}")
        out = optimize.optimize_full(p, hp, opt, original)
    sys.stdout.write(textio.print_program(out))
    return 0


def cmd_check(args) -> int:
    p1 = _load_program(args.program)
    p2 = _load_program(args.other)
    stores = _initial_stores(args)
    if args.observe == "out":
        xs = frozenset(args.vars.split(",")) if args.vars else p1.vars() | p2.vars()
        report = observe.out_equiv_check(p1, p2, stores, args.budget, xs)
    else:
        report = observe.sc_equiv_check(p1, p2, stores, args.budget)
    print(report.tap())
    return 0 if report.passed else 1


def cmd_pipeline(args) -> int:
    p = _load_program(args.program)
    stores = _initial_stores(args)
    before = textio.print_program(p)
    current = p
    hotpaths_json = []
    for _ in range(args.rounds):
        found = _mine(current, p, stores, args)
        if not found:
            break
        hp, c = found[0]
        hotpaths_json.append(_hp_json(hp, c))
        if args.passes:
            for name in args.passes:
                current = optimize.optimize_full(current, hp, optimize.PASSES[name], p)
        else:
            current = extract_nested(current, hp, p).transformed
    wf = well_formed(current)
    if wf:
        raise CliError("pipeline produced an ill-formed program: " + "; ".join(wf))

    if "dse" in (args.passes or []):
        xs = frozenset(args.vars.split(",")) if args.vars else p.vars()
        report = observe.out_equiv_check(p, current, stores, args.budget, xs)
    else:
        report = observe.sc_equiv_check(p, current, stores, args.budget)

    verdicts = []
    for v in sorted(report.verdicts, key=lambda v: str(v.initial)):
        item = {"initial": textio.store_to_json(v.initial),
                "result": "PASS" if v.passed else "FAIL"}
        if not v.passed:
            item["divergence"] = v.divergence
            item["minimized"] = _shrink(p, current, v.initial, args)
        verdicts.append(item)
    report_json = {
        "hotpaths": hotpaths_json,
        "verdicts": verdicts,
        "programs": {"before": before, "after": textio.print_program(current)},
    }
    out = json.dumps(report_json, indent=2, sort_keys=True)
    if args.json:
        Path(args.json).write_text(out + "\n")
    else:
        print(out)
    return 0 if report.passed else 1


def _shrink(p1: Program, p2: Program, rho: Store, args) -> dict:
    """Deterministic shrinking: halve the bound store and the budget while the
    failure persists."""
    budget = args.budget
    store = rho

    def fails(s: Store, b: int) -> bool:
        rep = observe.sc_equiv_check(p1, p2, [s], b)
        return not rep.passed

    changed = True
    while changed:
        changed = False
        if budget > 2 and fails(store, budget // 2):
            budget //= 2
            changed = True
        keys = sorted(store.keys())
        if len(keys) > 1:
            half = Store({k: v for k, v in store.items() if k in keys[: len(keys) // 2]})
            if fails(half, budget):
                store = half
                changed = True
    rep = observe.sc_equiv_check(p1, p2, [store], budget)
    return {
        "initial": textio.store_to_json(store),
        "budget": budget,
        "divergence": rep.verdicts[0].divergence,
    }


def cmd_gen(args) -> int:
    p = genmod.gen_program(args.seed, args.min_cmds, args.max_cmds)
    sys.stdout.write(textio.print_program(p))
    return 0


def cmd_render(args) -> int:
    p = _load_program(args.program)
    text = textio.program_to_dot(p)
    if args.dot:
        Path(args.dot).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gp_compile(args) -> int:
    stm = textio.parse_gp_program(Path(args.program).read_text())
    p = gpmod.GPCompiler().compile(stm)
    sys.stdout.write(textio.print_program(p))
    return 0


def cmd_gp_trace(args) -> int:
    stm = textio.parse_gp_program(Path(args.program).read_text())
    (rho,) = _initial_stores(args)[:1] or [Store()]
    rec = gpmod.gp_record_hot_path(stm, rho, args.budget)
    print("trace:", gpmod.stm_str(rec.trace_stm))
    print("hot path:", " ; ".join(str(c) for c in rec.hot_path))
    print("stitched:", gpmod.stm_str(rec.stitched))
    return 0


def cmd_gp_check(args) -> int:
    stm = textio.parse_gp_program(Path(args.program).read_text())
    (rho,) = _initial_stores(args)[:1] or [Store()]
    res = gpmod.gp_equivalence_check(stm, rho, args.budget)
    if res.passed:
        renames = ", ".join(f"{a} -> {b}" for a, b in sorted((res.renaming or {}).items()))
        print(f"ok - stitched compilation matches extraction ({renames})")
        return 0
    print("not ok - " + ("store behavior differs" if res.renaming else "no label renaming exists"))
    return 1


def _add_common(sp, sample_default: int = 0):
    sp.add_argument("--domain", default="onepoint")
    sp.add_argument("--threshold", "-N", type=int, default=2)
    sp.add_argument("--budget", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--initials", help="JSON store(s), inline or a file path")
    sp.add_argument("--sample", type=int, default=sample_default,
                    help="number of seeded random initial stores to add")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tracelab")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("run", help="run a program from initial stores")
    sp.add_argument("program")
    _add_common(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("trace", help="print a bounded run as JSON lines")
    sp.add_argument("program")
    _add_common(sp)
    sp.set_defaults(fn=cmd_trace)

    sp = sub.add_parser("hot", help="mine hot paths from bounded runs")
    sp.add_argument("program")
    _add_common(sp)
    sp.set_defaults(fn=cmd_hot)

    sp = sub.add_parser("extract", help="stitch a mined hot path")
    sp.add_argument("program")
    sp.add_argument("--hotpath", type=int, default=0, help="index into the mined list")
    sp.add_argument("--original", help="base program for nested extraction")
    sp.add_argument("--dot", help="write a DOT flow graph here")
    _add_common(sp)
    sp.set_defaults(fn=cmd_extract)

    sp = sub.add_parser("optimize", help="extract and optimize a hot path")
    sp.add_argument("program")
    sp.add_argument("--pass", dest="passes", action="append", default=[],
                    choices=sorted(optimize.PASSES))
    sp.add_argument("--hotpath", type=int, default=0)
    sp.add_argument("--original")
    _add_common(sp)
    sp.set_defaults(fn=cmd_optimize)

    sp = sub.add_parser("check", help="differential store-change check")
    sp.add_argument("program")
    sp.add_argument("other")
    sp.add_argument("--observe", choices=["sc", "out"], default="sc")
    sp.add_argument("--vars", help="comma-separated output variable set")
    _add_common(sp)
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("pipeline", help="run, mine, extract/optimize, check")
    sp.add_argument("program")
    sp.add_argument("--pass", dest="passes", action="append", default=[],
                    choices=sorted(optimize.PASSES))
    sp.add_argument("--rounds", type=int, default=1)
    sp.add_argument("--vars")
    sp.add_argument("--json", help="write the report here instead of stdout")
    _add_common(sp)
    sp.set_defaults(fn=cmd_pipeline)

    sp = sub.add_parser("gen", help="generate a seeded random program")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--min-cmds", type=int, default=4)
    sp.add_argument("--max-cmds", type=int, default=40)
    sp.set_defaults(fn=cmd_gen)

    sp = sub.add_parser("render", help="emit a DOT flow graph")
    sp.add_argument("program")
    sp.add_argument("--dot")
    sp.set_defaults(fn=cmd_render)

    sp = sub.add_parser("gp-compile", help="compile a while-language program")
    sp.add_argument("program")
    sp.set_defaults(fn=cmd_gp_compile)

    sp = sub.add_parser("gp-trace", help="record a hot path of a while-language loop")
    sp.add_argument("program")
    _add_common(sp)
    sp.set_defaults(fn=cmd_gp_trace)

    sp = sub.add_parser("gp-check", help="stitch-vs-extraction agreement check")
    sp.add_argument("program")
    _add_common(sp)
    sp.set_defaults(fn=cmd_gp_check)

    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (CliError, textio.ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
