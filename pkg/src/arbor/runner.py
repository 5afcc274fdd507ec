"""One solve, start to finish: dispatch, optional oracle, validation, report.

:func:`run` is what the command line and the estimators call. It never
prints; it returns a :class:`RunReport` plus the tree.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Tuple

from .engine.constrained import ConstrainedSubproblem, rg_dc, rg_dl, rg_pr
from .engine.greedy import SolverConfig, solve_sto
from .exceptions import InputError
from .instance import Instance
from .metric import Arborescence, PriorityClosure
from .oracle import (OracleBudget, brute_force_constrained, brute_force_min_cover, brute_force_min_polymatroid,
                     brute_force_sto)
from .reductions import (solve_buy_at_bulk, solve_directed_steiner, solve_polymatroid, solve_priority_steiner)
from .rewards import to_mask
from .validate import validate_tree

ENGINES = ("rg", "rg-qp", "rg-fast", "rg-dc", "rg-dl", "rg-pr")
PROBLEMS = ("sto", "dst", "polymatroid", "bab", "priority")
PLAIN = ("rg", "rg-qp", "rg-fast")
MINIMIZE = ("dst", "polymatroid", "bab", "priority")

# engines each problem accepts; the first one is the default
_ALLOWED = {
    "sto": ENGINES,
    "dst": ("rg-qp", "rg", "rg-fast"),
    "polymatroid": ("rg-qp", "rg", "rg-fast"),
    "bab": ("rg-dc",),
    "priority": ("rg-pr",),
}


class UsageError(ValueError):
    """Incompatible flag combination."""


@dataclass
class RunReport:
    """Result of one run. ``ratio`` is ``OPT/value`` or ``objective/OPT``.

    ``subproblems`` counts recursive calls (memo hits included) and
    ``frames`` the distinct frames actually computed.
    """

    instance: str = ""
    problem: str = "sto"
    engine: str = "rg"
    depth: int = 0
    block: Optional[int] = None
    workers: int = 1
    seed: Optional[int] = None
    status: str = "ok"
    value: Optional[int] = None
    cost: Optional[int] = None
    objective: Optional[float] = None
    opt: Optional[float] = None
    ratio: Optional[float] = None
    bound: Optional[float] = None
    within_bound: Optional[bool] = None
    iterations: Optional[int] = None
    subproblems: Optional[int] = None
    frames: Optional[int] = None
    engine_calls: Optional[int] = None
    frame_violations: Optional[int] = None
    valid: Optional[bool] = None
    message: str = ""
    wall_time: float = 0.0
    extra: Dict = field(default_factory=dict)

    # wall time is kept out of the deterministic renderings
    _UNTIMED = ("wall_time", "extra")

    def fields(self):
        return [(k, v) for k, v in asdict(self).items() if k not in self._UNTIMED]

    def lines(self) -> str:
        """``key=value`` lines, one per field, without wall time."""
        return "".join(f"{k}={_fmt(v)}\n" for k, v in self.fields())

    def record(self) -> str:
        """Single-line JSON record, without wall time."""
        return json.dumps(dict(self.fields()), sort_keys=True, separators=(",", ":"))


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.6g}"
    return str(v).replace("\n", " ")


def max_ratio(value, opt) -> float:
    """``OPT / value`` for maximization with the ``0/0 = 1`` convention."""
    if opt == value:
        return 1.0
    return math.inf if value == 0 else opt / value


def min_ratio(objective, opt) -> float:
    """``objective / OPT`` for minimization with the ``0/0 = 1`` convention."""
    if objective == opt:
        return 1.0
    return math.inf if opt == 0 else objective / opt


def default_problem(inst: Instance) -> str:
    return {"sto": "sto", "stolc": "sto", "prio": "priority", "bab": "bab"}[inst.kind]


def default_engine(inst: Instance, problem: str) -> str:
    if problem == "sto":
        return {"stolc": "rg-dc", "prio": "rg-pr"}.get(inst.kind, "rg")
    return _ALLOWED[problem][0]


def check_combo(problem: str, engine: str) -> None:
    if problem not in PROBLEMS:
        raise UsageError(f"unknown problem {problem!r}")
    if engine not in _ALLOWED[problem]:
        raise UsageError(f"engine {engine} cannot solve problem {problem}; use one of {', '.join(_ALLOWED[problem])}")


def _requirements(inst: Instance):
    return {t: q for t, q in inst.terminals.items() if q is not None and t != inst.root}


def _priority_closure(inst: Instance) -> PriorityClosure:
    levels = max([inst.graph.max_priority, *_requirements(inst).values()])
    return PriorityClosure(inst.graph, levels=levels, infeasible_cost=inst.infeasible_cost)


def _deadline_horizon(inst: Instance) -> int:
    """Longest root-path length worth representing for the deadline engine."""
    rewarded = [v for v, w in inst.rewards.items() if w > 0 and v != inst.root]
    if inst.matroid is None and inst.deadlines and all(v in inst.deadlines for v in rewarded):
        return max(inst.deadlines.values())
    return inst.total_length


def _ln_bound(d: int, k: int) -> float:
    return 2 * d * (math.log(k) + 1) if k >= 1 else 1.0


def run(inst: Instance, *, problem: Optional[str] = None, engine: Optional[str] = None,
        depth: Optional[int] = None, epsilon: float = 1.0, block: Optional[int] = None, workers: int = 1,
        seed: Optional[int] = None, oracle: bool = False, oracle_budget: Optional[OracleBudget] = None,
        name: str = "") -> Tuple[RunReport, Optional[Arborescence]]:
    """Solve ``inst`` and return ``(report, tree)``.

    Raises :class:`UsageError` for bad engine/problem combinations,
    :class:`~arbor.exceptions.InputError` for instances missing what the
    problem needs and :class:`~arbor.exceptions.UnreachableError` when a
    covering target cannot be reached.
    """
    problem = problem or default_problem(inst)
    engine = engine or default_engine(inst, problem)
    check_combo(problem, engine)
    if workers < 1:
        raise UsageError("workers must be >= 1")
    cfg = SolverConfig(engine=engine if engine in PLAIN else "rg-qp", epsilon=epsilon, depth=depth, block=block,
                       workers=workers)
    rep = RunReport(instance=name, problem=problem, engine=engine, workers=workers, seed=seed)
    t0 = time.perf_counter()
    if problem == "sto":
        tree = _run_sto(inst, engine, cfg, rep, oracle, oracle_budget)
    else:
        tree = _run_cover(inst, problem, cfg, rep, oracle, oracle_budget)
    rep.wall_time = time.perf_counter() - t0
    if rep.ratio is not None and rep.bound is not None:
        rep.within_bound = rep.ratio <= rep.bound + 1e-9
    return rep, tree


def _run_sto(inst, engine, cfg, rep, oracle, oracle_budget):
    n, root, B = inst.n, inst.root, inst.budget
    f = inst.reward_oracle()
    d = cfg.resolve_depth(n)
    rep.depth = d
    rep.bound = d
    if engine in PLAIN:
        sol = solve_sto(inst.metric, f, cfg)
        if engine == "rg-fast":
            rep.block = sol.stats.get("block")
            rep.bound = math.ceil(d / rep.block)
        check = validate_tree(inst.graph, sol.tree, root, budget=B)
        opt = (lambda: brute_force_sto(inst.cost, f, B, root, oracle_budget)[0])
    else:
        sub_kw = dict(B=B, i=d)
        if engine == "rg-dc":
            if inst.lbudget is None:
                raise InputError("rg-dc needs an 'lbudget' line")
            tc = inst.two_cost(inst.lbudget)
            sol = rg_dc(tc, f, ConstrainedSubproblem(root, L=inst.lbudget, **sub_kw), cfg)
            check_kw = dict(length_budget=inst.lbudget, check_lengths=True)
            opt = (lambda: brute_force_constrained("length", tc, f, B, root, L=inst.lbudget,
                                                   budget=oracle_budget)[0])
        elif engine == "rg-dl":
            tc = inst.two_cost(_deadline_horizon(inst))
            sol = rg_dl(tc, f, inst.deadlines, ConstrainedSubproblem(root, **sub_kw), cfg)
            check_kw = dict(check_lengths=True)
            opt = (lambda: brute_force_constrained("deadline", tc, f, B, root, deadlines=inst.deadlines,
                                                   budget=oracle_budget)[0])
        else:
            pc = _priority_closure(inst)
            req = _requirements(inst)
            sol = rg_pr(pc, f, req, ConstrainedSubproblem(root, **sub_kw), cfg)
            check_kw = dict(check_priorities=True)
            opt = (lambda: brute_force_constrained("priority", pc, f, B, root, requirements=req,
                                                   budget=oracle_budget)[0])
        if not sol.feasible:
            sol.tree, sol.value, sol.cost = Arborescence(root), f.value(1 << root) - f.value(0), 0
        check = validate_tree(inst.graph, sol.tree, root, budget=B, **check_kw)
    rep.value, rep.cost, rep.objective = int(sol.value), int(sol.tree.cost), int(sol.value)
    rep.subproblems = sol.stats.get("calls")
    rep.frames = sol.stats.get("frames")
    rep.frame_violations = sol.stats.get("frame_violations")
    rep.valid = bool(check)
    if not check:
        rep.message = "; ".join(check.errors)
    if oracle:
        rep.opt = int(opt())
        rep.ratio = max_ratio(rep.value, rep.opt)
    return sol.tree


def _run_cover(inst, problem, cfg, rep, oracle, oracle_budget):
    n, root = inst.n, inst.root
    ts = sorted(set(inst.terminals) - {root})
    if problem == "dst":
        res = solve_directed_steiner(inst, config=cfg)
        k = len(ts)
        check = validate_tree(inst.graph, res.tree, root, terminals=ts)
        opt = (lambda: brute_force_min_cover("dst", inst.cost, root, ts, budget=oracle_budget)[0])
    elif problem == "polymatroid":
        res = solve_polymatroid(inst, config=cfg)
        m = inst.matroid
        k = m.full_rank - m.rank(1 << root)
        check = validate_tree(inst.graph, res.tree, root)
        if check and m.rank(to_mask(res.tree.vertices)) < m.full_rank:
            check.ok = False
            check.errors.append("tree does not span a basis")
        opt = (lambda: brute_force_min_polymatroid(inst.cost, root, m, oracle_budget)[0])
    elif problem == "bab":
        res = solve_buy_at_bulk(inst, config=cfg)
        k = len(ts)
        check = validate_tree(inst.graph, res.tree, root, terminals=ts, check_lengths=True)
        opt = (lambda: brute_force_min_cover("bab", inst.two_cost(inst.total_length), root, ts,
                                             budget=oracle_budget)[0])
    else:
        res = solve_priority_steiner(inst, config=cfg)
        k = len(ts)
        req = {t: (q if q is not None else 1) for t, q in inst.terminals.items() if t != root}
        check = validate_tree(inst.graph, res.tree, root, terminals=ts, priority_floors=req,
                              check_priorities=True)
        opt = (lambda: brute_force_min_cover("priority", _priority_closure(inst), root, req,
                                             budget=oracle_budget)[0])
    rep.depth = res.depth
    bound = _ln_bound(res.depth, max(1, k))
    if problem == "bab":
        bound *= 1 + 1 / n ** 2
    rep.bound = bound
    rep.cost, rep.objective = int(res.cost), int(res.objective)
    rep.iterations = res.iterations
    rep.engine_calls = res.engine_calls
    rep.extra = {"budget_guess": res.budget, "rounds": res.rounds, "refine_rounds": res.refine_rounds}
    rep.valid = bool(check)
    if not check:
        rep.message = "; ".join(check.errors)
    if oracle:
        rep.opt = int(opt())
        rep.ratio = min_ratio(rep.objective, rep.opt)
    return res.tree
