"""Command line: ``arbor solve|gen|oracle|compare|bench``.

Exit codes: 0 success, 1 malformed input, 2 infeasible or unreachable,
64 usage error. Reports go to standard output as ``key=value`` lines; the
wall time goes to standard error so that reports for a fixed seed and one
worker are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path
from typing import List, Optional

from .exceptions import ArborError, BudgetTooSmall, InputError, TooLarge, UnreachableError
from .generators import FAMILIES, generate
from .io import emit_instance, emit_tree, read_instance
from .oracle import OracleBudget
from .runner import (ENGINES, PROBLEMS, RunReport, UsageError, _fmt, check_combo, default_engine, default_problem,
                     run)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _time_cap() -> float:
    ms = os.environ.get("ARBOR_TIME_CAP_MS")
    return float(ms) / 1000.0 if ms else 900.0


def _solver_flags(p):
    p.add_argument("--engine", choices=ENGINES)
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--depth", type=int)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--block", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="arbor", description="Recursive-greedy tree orienteering and Steiner solvers.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one instance file")
    s.add_argument("instance")
    _solver_flags(s)
    s.add_argument("--oracle", action="store_true", help="also run the exact oracle and report the ratio")
    s.add_argument("--out", help="write tree edges here as 'edge u v' lines")
    s.add_argument("--json", action="store_true", help="print a single-line JSON record instead")

    g = sub.add_parser("gen", help="write a seeded random instance")
    g.add_argument("family", choices=sorted(FAMILIES))
    g.add_argument("--n", type=int, default=6)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--cost-min", type=int)
    g.add_argument("--cost-max", type=int)
    g.add_argument("--length-min", type=int)
    g.add_argument("--length-max", type=int)
    g.add_argument("--lbudget", type=int)
    g.add_argument("--levels", type=int)
    g.add_argument("--k", type=int, help="number of terminals")
    g.add_argument("--out")

    o = sub.add_parser("oracle", help="exact optimum of a small instance")
    o.add_argument("instance")
    o.add_argument("--engine", choices=ENGINES, help="selects the constrained variant for 'sto'")
    o.add_argument("--problem", choices=PROBLEMS)

    c = sub.add_parser("compare", help="several engines against the oracle on one instance")
    c.add_argument("instance")
    c.add_argument("--engines", default="rg,rg-qp,rg-fast")
    _solver_flags(c)
    c.set_defaults(engine=None)

    b = sub.add_parser("bench", help="run a suite directory of instances")
    b.add_argument("suite", nargs="?", help="directory of *.inst files (default: bundled suite)")
    b.add_argument("--engines", help="comma-separated filter of engine or problem names")
    b.add_argument("--no-oracle", action="store_true")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--json", action="store_true", help="one JSON record per row")
    return p


def _load(path):
    return read_instance(path)


def cmd_solve(a) -> int:
    inst = _load(a.instance)
    rep, tree = run(inst, problem=a.problem, engine=a.engine, depth=a.depth, epsilon=a.epsilon, block=a.block,
                    workers=a.workers, seed=a.seed, oracle=a.oracle, name=Path(a.instance).name)
    sys.stdout.write(rep.record() + "\n" if a.json else rep.lines())
    sys.stderr.write(f"wall_time={rep.wall_time:.6f}\n")
    if a.out:
        Path(a.out).write_text(emit_tree(tree))
    return EXIT_OK


def _gen_kwargs(a):
    kw = {}
    if a.cost_min is not None or a.cost_max is not None:
        lo = 0 if a.cost_min is None else a.cost_min
        hi = max(lo, 20 if a.cost_max is None else a.cost_max)
        kw["cost_range"] = (lo, hi)
    if a.family == "two-cost":
        if a.length_min is not None or a.length_max is not None:
            lo = 0 if a.length_min is None else a.length_min
            kw["length_range"] = (lo, max(lo, 4 if a.length_max is None else a.length_max))
        if a.lbudget is not None:
            kw["lbudget"] = a.lbudget
    elif a.length_min is not None or a.length_max is not None or a.lbudget is not None:
        raise UsageError("length flags only apply to the two-cost family")
    if a.levels is not None:
        if a.family != "priority":
            raise UsageError("--levels only applies to the priority family")
        kw["levels"] = a.levels
    if a.k is not None:
        kw["k"] = a.k
    return kw


def cmd_gen(a) -> int:
    try:
        inst = generate(a.family, a.n, a.seed, **_gen_kwargs(a))
    except InputError as exc:
        raise UsageError(str(exc)) from None
    text = emit_instance(inst)
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(a) -> int:
    inst = _load(a.instance)
    problem = a.problem or default_problem(inst)
    engine = a.engine or default_engine(inst, problem)
    check_combo(problem, engine)
    rep, _ = run(inst, problem=problem, engine=engine, oracle=True, name=Path(a.instance).name)
    sys.stdout.write(f"instance={rep.instance}\nproblem={problem}\nengine={engine}\nopt={rep.opt}\n")
    return EXIT_OK


def cmd_compare(a) -> int:
    inst = _load(a.instance)
    engines = [e for e in a.engines.split(",") if e]
    for e in engines:
        if e not in ENGINES:
            raise UsageError(f"unknown engine {e!r}")
    rows = []
    for e in engines:
        rep, _ = run(inst, problem=a.problem, engine=e, depth=a.depth, epsilon=a.epsilon, block=a.block,
                     workers=a.workers, seed=a.seed, oracle=True, name=Path(a.instance).name)
        rows.append(rep)
    _print_table(rows)
    return EXIT_OK


def bundled_suite() -> Path:
    return Path(str(resources.files("arbor") / "data" / "bench"))


def _bench_plan(inst):
    """``(problem, engine)`` pairs run on a suite instance of this kind."""
    if inst.kind == "sto":
        return [("sto", "rg"), ("sto", "rg-qp"), ("sto", "rg-fast"), ("dst", "rg-qp")]
    if inst.kind == "stolc":
        plan = [("sto", "rg-dc"), ("sto", "rg-dl")]
        return plan + [("bab", "rg-dc")] if inst.n <= 6 else plan
    if inst.kind == "prio":
        return [("sto", "rg-pr"), ("priority", "rg-pr")]
    return [("bab", "rg-dc")]


_COLUMNS = ("instance", "problem", "engine", "depth", "block", "value", "objective", "opt", "ratio", "bound",
            "within_bound", "valid", "subproblems", "status")


def _print_table(rows: List[RunReport], timing=True):
    head = list(_COLUMNS) + (["wall_time"] if timing else [])
    sys.stdout.write("\t".join(head) + "\n")
    for r in rows:
        cells = [_fmt(getattr(r, c)) for c in _COLUMNS]
        if timing:
            cells.append(f"{r.wall_time:.3f}")
        sys.stdout.write("\t".join(cells) + "\n")


def bench(suite: Path, engines: Optional[List[str]] = None, oracle: bool = True, workers: int = 1,
          time_cap: Optional[float] = None) -> List[RunReport]:
    """Run every ``*.inst`` file in ``suite``; failures become rows with a non-ok status."""
    time_cap = _time_cap() if time_cap is None else time_cap
    start = time.perf_counter()
    rows = []
    for path in sorted(Path(suite).glob("*.inst")):
        try:
            inst = read_instance(path)
        except InputError as exc:
            rows.append(RunReport(instance=path.name, status="malformed", message=str(exc)))
            continue
        for problem, engine in _bench_plan(inst):
            if engines and engine not in engines and problem not in engines:
                continue
            if time.perf_counter() - start > time_cap:
                rows.append(RunReport(instance=path.name, problem=problem, engine=engine, status="skipped",
                                      message="time cap reached"))
                continue
            left = max(1.0, time_cap - (time.perf_counter() - start))
            try:
                rep, _ = run(inst, problem=problem, engine=engine, workers=workers, oracle=oracle,
                             oracle_budget=OracleBudget(time_cap=left), name=path.name)
            except (UnreachableError, BudgetTooSmall) as exc:
                rep = RunReport(instance=path.name, problem=problem, engine=engine, status="infeasible",
                                message=str(exc))
            except TooLarge as exc:
                rep = RunReport(instance=path.name, problem=problem, engine=engine, status="too-large",
                                message=str(exc))
            except ArborError as exc:
                rep = RunReport(instance=path.name, problem=problem, engine=engine, status="error",
                                message=str(exc))
            rows.append(rep)
    return rows


def summarize(rows: List[RunReport]):
    """Per engine: row count, geometric-mean ratio, mean subproblem count, total wall time.

    Covering rows are grouped under ``problem/engine``.
    """
    out = {}
    for r in rows:
        out.setdefault(r.engine if r.problem == "sto" else f"{r.problem}/{r.engine}", []).append(r)
    summary = {}
    for e, rs in out.items():
        ratios = [r.ratio for r in rs if r.ratio is not None and math.isfinite(r.ratio) and r.ratio > 0]
        subs = [r.subproblems for r in rs if r.subproblems is not None]
        summary[e] = {
            "rows": len(rs),
            "geomean_ratio": math.exp(sum(map(math.log, ratios)) / len(ratios)) if ratios else None,
            "mean_subproblems": sum(subs) / len(subs) if subs else None,
            "wall_time": sum(r.wall_time for r in rs),
        }
    return summary


def cmd_bench(a) -> int:
    suite = Path(a.suite) if a.suite else bundled_suite()
    if not suite.is_dir():
        raise UsageError(f"suite directory {suite} does not exist")
    engines = [e for e in a.engines.split(",") if e] if a.engines else None
    rows = bench(suite, engines, oracle=not a.no_oracle, workers=a.workers)
    if a.json:
        for r in rows:
            sys.stdout.write(r.record() + "\n")
    else:
        _print_table(rows)
    for e, s in summarize(rows).items():
        g = "-" if s["geomean_ratio"] is None else f"{s['geomean_ratio']:.6g}"
        m = "-" if s["mean_subproblems"] is None else f"{s['mean_subproblems']:.6g}"
        sys.stdout.write(f"summary engine={e} rows={s['rows']} geomean_ratio={g} mean_subproblems={m} "
                         f"wall_time={s['wall_time']:.3f}\n")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "gen": cmd_gen, "oracle": cmd_oracle, "compare": cmd_compare, "bench": cmd_bench}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (UnreachableError, BudgetTooSmall) as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except InputError as exc:
        sys.stderr.write(f"malformed input: {exc}\n")
        return EXIT_INPUT
    except TooLarge as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_INPUT
    except OSError as exc:
        sys.stderr.write(f"malformed input: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
