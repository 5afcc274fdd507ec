"""Covering drivers: repeated budgeted maximization turned into minimum-cost trees.

Each driver guesses a budget ``B``, then runs :func:`cover_loop`: solve the
orienteering problem with unit rewards on what is still uncovered, merge
the tree into the forest, repeat. A pass that stops making progress (or
needs more passes than the greedy bound allows) means ``B`` was too small,
and the next guess is tried.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .engine.constrained import ConstrainedSubproblem, rg_dc, rg_pr
from .engine.greedy import SolverConfig, solve_sto
from .exceptions import ArborError, BudgetTooSmall, InputError, UnreachableError
from .instance import Instance
from .metric import (Arborescence, DirectedGraph, Edge, MetricInstance, PriorityClosure, TreeEdge,
                     build_metric_closure, build_two_cost_closure, merge_and_prune, merge_union)
from .rewards import Matroid, TerminalReward, contract, from_mask, gated_set, to_mask


@dataclass
class CoverResult:
    """Outcome of a covering driver.

    ``cost`` is the forest's edge cost; ``objective`` equals ``cost`` except
    for buy-at-bulk, where terminal path lengths are added. ``log`` has one
    entry per pass of the winning budget guess.
    """

    tree: Arborescence
    cost: int
    objective: int
    iterations: int
    budget: int
    depth: int
    rounds: int = 0
    refine_rounds: int = 0
    log: List[dict] = field(default_factory=list)
    engine_calls: int = 0


def iteration_cap(depth: int, k: int) -> int:
    """Pass limit ``ceil(d ln k) + 1`` implied by the greedy covering argument."""
    return math.ceil(depth * math.log(k)) + 1 if k > 1 else 1


def cover_loop(step: Callable[[Set[int], int], Tuple[Arborescence, Set[int], int]], root: int, B: int,
               done: Callable[[Set[int]], bool], *, covered: Iterable[int] = (), max_iterations: Optional[int] = None,
               merge: Callable = merge_and_prune):
    """Run covering passes at budget ``B`` until ``done(covered)``.

    ``step(covered, B)`` returns ``(tree, newly_covered, gain)``. Raises
    :class:`BudgetTooSmall` when a pass has zero gain or the pass count
    would exceed ``max_iterations``. Returns ``(forest, iterations, log)``.
    """
    if B < 0:
        raise ArborError("budget guess must be nonnegative")
    covered = set(covered)
    forest = Arborescence(root)
    log = []
    it = 0
    while not done(covered):
        if max_iterations is not None and it >= max_iterations:
            raise BudgetTooSmall(f"BUDGET_TOO_SMALL: B={B} needs more than {max_iterations} passes")
        tree, new, gain = step(covered, B)
        it += 1
        if gain <= 0:
            raise BudgetTooSmall(f"BUDGET_TOO_SMALL: pass {it} at B={B} covered nothing new")
        forest = merge(forest, tree)
        covered |= set(new)
        log.append({"iteration": it, "cost": tree.cost, "gain": gain, "new": sorted(set(new))})
    return forest, it, log


def _budget_search(run: Callable[..., CoverResult], hi: int, zero_ok: bool, refine: bool,
                   fixed: Optional[int] = None) -> CoverResult:
    """Doubling over ``1, 2, 4, ..., hi`` then, if ``refine``, bisection below the first success.

    With ``fixed`` set, a single uncapped run at that budget replaces the search.
    """
    if fixed is not None:
        res = run(fixed, False)
        res.rounds = 1
        return res
    if zero_ok:
        res = run(0)
        res.rounds = 1
        return res
    hi = max(1, hi)
    B, rounds, last_fail = 1, 0, 0
    while True:
        rounds += 1
        try:
            res = run(B)
            break
        except BudgetTooSmall:
            if B >= hi:
                raise ArborError(f"covering failed even at B={B}; the instance violates the driver's assumptions")
            last_fail = B
            B = min(2 * B, hi)
    res.rounds = rounds
    lo, hi_ok = last_fail, B
    if refine:
        # invariant: lo fails (or is 0), hi_ok succeeds
        while hi_ok - lo > 1:
            mid = (lo + hi_ok) // 2
            res.refine_rounds += 1
            try:
                cand = run(mid)
            except BudgetTooSmall:
                lo = mid
                continue
            cand.rounds, cand.refine_rounds = res.rounds, res.refine_rounds
            res, hi_ok = cand, mid
    return res


def _depth(n: int, k: int, config: SolverConfig) -> Tuple[int, SolverConfig]:
    k_cap = max(1, min(2 * k, n - 1))
    config = dataclasses.replace(config, k_cap=k_cap)
    return config.resolve_depth(n), config


def _reachable(n, edges, root):
    adj: Dict[int, List[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
    seen = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _sentinel(instance: Instance, budget: Optional[int]) -> int:
    """Unreachable-pair cost, kept above every budget the drivers will try."""
    return max(instance.infeasible_cost, (budget or 0) + 1)


def _terminal_list(instance: Instance, terminals) -> List[int]:
    ts = sorted(set(instance.terminals if terminals is None else terminals) - {instance.root})
    for t in ts:
        if not 0 <= t < instance.n:
            raise InputError(f"terminal {t} out of range")
    return ts


# ---------------------------------------------------------------------------
# directed Steiner tree


def solve_directed_steiner(instance: Instance, terminals: Optional[Iterable[int]] = None,
                           config: Optional[SolverConfig] = None, refine: bool = False,
                           budget: Optional[int] = None) -> CoverResult:
    """Tree from the root spanning every terminal, by covering with the orienteering engine."""
    config = config or SolverConfig(engine="rg-qp")
    n, root = instance.n, instance.root
    ts = _terminal_list(instance, terminals)
    inf = _sentinel(instance, budget)
    cost = build_metric_closure(instance.graph, inf)
    for t in ts:
        if cost[root, t] >= inf:
            raise UnreachableError(f"UNREACHABLE_TERMINAL: terminal {t} is not reachable from root {root}", t)
    k = len(ts)
    d, cfg = _depth(n, k, config)
    need = set(ts)
    calls = [0]

    def step(covered, B):
        calls[0] += 1
        f = TerminalReward(n, need - covered)
        sol = solve_sto(MetricInstance(cost, root, B), f, cfg)
        return sol.tree, need & set(sol.tree.vertices), sol.value

    def run(B, capped=True):
        cap = iteration_cap(d, k) if capped else None
        forest, it, log = cover_loop(step, root, B, lambda c: need <= c, max_iterations=cap)
        return CoverResult(forest, forest.cost, forest.cost, it, B, d, log=log, engine_calls=calls[0])

    zero = all(cost[root, t] == 0 for t in ts)
    return _budget_search(run, instance.graph.total_cost, zero, refine, budget)


# ---------------------------------------------------------------------------
# polymatroid Steiner tree


def solve_polymatroid(instance: Instance, m: Optional[Matroid] = None, config: Optional[SolverConfig] = None,
                      refine: bool = False, budget: Optional[int] = None) -> CoverResult:
    """Cheapest-found tree whose vertex set spans a basis of ``m``."""
    config = config or SolverConfig(engine="rg-qp")
    m = m or instance.matroid
    if m is None:
        raise InputError("polymatroid problem needs a matroid")
    n, root = instance.n, instance.root
    inf = _sentinel(instance, budget)
    cost = build_metric_closure(instance.graph, inf)
    reach = [v for v in range(n) if v == root or cost[root, v] < inf]
    full = m.full_rank
    if m.rank(to_mask(reach)) < full:
        raise UnreachableError(f"RANK_UNREACHABLE: reachable vertices have rank {m.rank(to_mask(reach))} < {full}")
    k = full - m.rank(1 << root)
    d, cfg = _depth(n, max(1, k), config)
    calls = [0]

    def step(covered, B):
        calls[0] += 1
        f = contract(m, covered)
        sol = solve_sto(MetricInstance(cost, root, B), f, cfg)
        return sol.tree, set(sol.tree.vertices), sol.value

    def done(covered):
        return m.rank(to_mask(covered)) == full

    def run(B, capped=True):
        forest, it, log = cover_loop(step, root, B, done, covered={root},
                                     max_iterations=iteration_cap(d, max(1, k)) if capped else None)
        return CoverResult(forest, forest.cost, forest.cost, it, B, d, log=log, engine_calls=calls[0])

    zero = m.rank(to_mask(v for v in range(n) if cost[root, v] == 0)) == full
    return _budget_search(run, instance.graph.total_cost, zero, refine, budget)


# ---------------------------------------------------------------------------
# priority Steiner tree


def solve_priority_steiner(instance: Instance, config: Optional[SolverConfig] = None,
                           refine: bool = False, budget: Optional[int] = None) -> CoverResult:
    """Tree in which each terminal's root path uses only edges of priority at least its requirement."""
    config = config or SolverConfig(engine="rg-qp")
    n, root = instance.n, instance.root
    req = {t: (q if q is not None else 1) for t, q in instance.terminals.items() if t != root}
    ts = sorted(req)
    levels = max([instance.graph.max_priority, *req.values()])
    inf = _sentinel(instance, budget)
    pc = PriorityClosure(instance.graph, levels=levels, infeasible_cost=inf)
    for t in ts:
        if pc[req[t]][root, t] >= inf:
            raise UnreachableError(f"UNREACHABLE_TERMINAL: terminal {t} has no route of priority >= {req[t]}", t)
    k = len(ts)
    d, cfg = _depth(n, k, config)
    need = set(ts)
    calls = [0]

    def step(covered, B):
        calls[0] += 1
        f = TerminalReward(n, need - covered)
        sol = rg_pr(pc, f, req, ConstrainedSubproblem(root, B=B, i=d), cfg)
        if not sol.feasible:
            return Arborescence(root), set(), 0
        ok = set(from_mask(gated_set(sol.tree, requirements=req)))
        return sol.tree, need & ok, sol.value

    def run(B, capped=True):
        cap = iteration_cap(d, k) if capped else None
        forest, it, log = cover_loop(step, root, B, lambda c: need <= c, max_iterations=cap,
                                     merge=lambda a, b: merge_union(a, b, "priority"))
        return CoverResult(forest, forest.cost, forest.cost, it, B, d, log=log, engine_calls=calls[0])

    zero = all(pc[req[t]][root, t] == 0 for t in ts)
    return _budget_search(run, instance.graph.total_cost, zero, refine, budget)


# ---------------------------------------------------------------------------
# buy-at-bulk


@dataclass
class ScaledInstance:
    """Two-cost graph with lengths rounded down in units of ``unit = B / n**4``.

    ``origin`` maps each scaled edge to the shortest original edge it
    stands for.
    """

    graph: DirectedGraph
    budget: int
    unit: Fraction
    length_budget: int
    origin: Dict[Edge, Edge]


def scale_lengths(instance, B: int) -> ScaledInstance:
    """Drop edges longer than ``B`` and round lengths to multiples of ``B / n**4``.

    ``instance`` is an :class:`Instance` or a :class:`DirectedGraph`. With
    ``B = 0`` only zero-length edges survive and the unit is 0.
    """
    graph = instance.graph if isinstance(instance, Instance) else instance
    if B < 0:
        raise ArborError("budget must be nonnegative")
    n = graph.n
    scale = n ** 4
    unit = Fraction(B, scale)
    origin: Dict[Edge, Edge] = {}
    edges = []
    for e in graph.edges:
        ln = e.length or 0
        if ln > B:
            continue
        sl = (ln * scale) // B if B > 0 else 0
        se = Edge(e.u, e.v, e.cost, sl)
        prev = origin.get(se)
        if prev is None:
            edges.append(se)
            origin[se] = e
        elif (e.length or 0) < (prev.length or 0):
            origin[se] = e
    return ScaledInstance(DirectedGraph(n, edges), B, unit, scale, origin)


def _raw_tree(root, raw_edges, key_index):
    """Shortest-path arborescence over ``raw_edges`` (tuples ``(u, v, cost, length, scaled)``)."""
    adj: Dict[int, list] = {}
    for idx, e in enumerate(raw_edges):
        adj.setdefault(e[0], []).append((idx, e))
    best = {root: (0, 0)}
    chosen: Dict[int, TreeEdge] = {}
    heap = [(0, 0, root)]
    done = set()
    while heap:
        key, rank, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for idx, e in adj.get(u, ()):
            v = e[1]
            if v == root or v in done:
                continue
            cand = (key + e[key_index], idx)
            if v not in best or cand < best[v]:
                best[v] = cand
                chosen[v] = TreeEdge(u, e[2], e[3])
                heapq.heappush(heap, (cand[0], cand[1], v))
    return Arborescence(root, chosen)


def solve_buy_at_bulk(instance: Instance, terminals: Optional[Iterable[int]] = None,
                      config: Optional[SolverConfig] = None, refine: bool = True,
                      budget: Optional[int] = None) -> CoverResult:
    """Tree minimizing edge cost plus the sum of terminal root-path lengths.

    Every pass uses the total-length engine on lengths scaled by
    :func:`scale_lengths`, with only terminals charged against the length
    budget. Reported trees use original edges and true lengths.
    """
    config = config or SolverConfig(engine="rg-qp")
    n, root = instance.n, instance.root
    ts = _terminal_list(instance, terminals)
    g = instance.graph
    reach = _reachable(n, [(e.u, e.v) for e in g.edges], root)
    for t in ts:
        if t not in reach:
            raise UnreachableError(f"UNREACHABLE_TERMINAL: terminal {t} is not reachable from root {root}", t)
    k = len(ts)
    d, cfg = _depth(n, k, config)
    need = set(ts)
    calls = [0]

    def run(B, capped=True):
        scaled = scale_lengths(g, B)
        tc = build_two_cost_closure(scaled.graph, scaled.length_budget)
        log_extra = []

        def step(covered, B_):
            calls[0] += 1
            f = TerminalReward(n, need - covered)
            sub = ConstrainedSubproblem(root, B=B_, L=scaled.length_budget, i=d, charged=frozenset(ts))
            sol = rg_dc(tc, f, sub, cfg)
            if not sol.feasible:
                return Arborescence(root), set(), 0
            raw = []
            for v, e in sol.tree.in_edge.items():
                for se in tc.path(e.parent, v, (e.cost, e.length)):
                    oe = scaled.origin[Edge(se.u, se.v, se.cost, se.length)]
                    raw.append((se.u, se.v, se.cost, oe.length or 0, se.length))
            tree = _raw_tree(root, raw, 4)
            # terminals the engine charged vs. ones picked up inside expanded closure edges
            charged = [t for t in ts if t in sol.tree]
            log_extra.append({"accepted_length": sum(tree.path_length(t) for t in charged),
                              "terminal_length": sum(tree.path_length(t) for t in ts if t in tree),
                              "scaled_length": sum(_scaled_len(tree, t, raw) for t in charged),
                              "incidental": sorted(t for t in ts if t in tree and t not in sol.tree)})
            return tree, need & set(tree.vertices), sol.value

        cap = iteration_cap(d, k) if capped else None
        forest, it, log = cover_loop(step, root, B, lambda c: need <= c, max_iterations=cap,
                                     merge=lambda a, b: merge_union(a, b, "length"))
        for entry, extra in zip(log, log_extra):
            entry.update(extra)
        obj = forest.cost + sum(forest.path_length(t) for t in ts)
        return CoverResult(forest, forest.cost, obj, it, B, d, log=log, engine_calls=calls[0])

    zero_edges = [(e.u, e.v) for e in g.edges if e.cost == 0 and not e.length]
    zero = need <= _reachable(n, zero_edges, root)
    hi = g.total_cost + k * instance.total_length
    return _budget_search(run, hi, zero, refine, budget)


def _scaled_len(tree, t, raw):
    """Scaled length of ``t``'s root path in a tree built from ``raw`` edges."""
    by_pair = {}
    for u, v, c, ln, sl in raw:
        key = (u, v, c, ln)
        by_pair[key] = min(sl, by_pair.get(key, sl))
    total = 0
    for v in tree.path(t)[1:]:
        e = tree.in_edge[v]
        total += by_pair[(e.parent, v, e.cost, e.length)]
    return total


def concave_to_two_cost(samples: Sequence[Tuple[int, int]]) -> List[Tuple[Fraction, Fraction]]:
    """Lines ``(intercept, slope)`` whose lower envelope is the sampled concave function.

    ``samples`` are ``(x, g(x))`` breakpoints with increasing ``x >= 0``.
    Each returned line becomes a parallel edge with cost = intercept and
    length = slope. Raises :class:`InputError` (``NOT_CONCAVE``) when the
    samples decrease, bend upward, or give a negative intercept.
    """
    pts = sorted((Fraction(x), Fraction(y)) for x, y in samples)
    if not pts:
        raise InputError("NOT_CONCAVE: no samples")
    if any(x < 0 for x, _ in pts) or len({x for x, _ in pts}) != len(pts):
        raise InputError("NOT_CONCAVE: sample points must be distinct and nonnegative")
    if len(pts) == 1:
        return [(pts[0][1], Fraction(0))]
    lines = []
    prev_slope = None
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        slope = (y1 - y0) / (x1 - x0)
        if slope < 0:
            raise InputError(f"NOT_CONCAVE: g decreases between x={x0} and x={x1}")
        if prev_slope is not None and slope > prev_slope:
            raise InputError(f"NOT_CONCAVE: slope rises at x={x0}")
        icpt = y0 - slope * x0
        if icpt < 0:
            raise InputError(f"NOT_CONCAVE: line through x={x0} has negative intercept")
        if not lines or lines[-1] != (icpt, slope):
            lines.append((icpt, slope))
        prev_slope = slope
    return lines


def concave_graph(n: int, arcs: Mapping[Tuple[int, int], Sequence[Tuple[int, int]]]) -> DirectedGraph:
    """Parallel ``(cost, length)`` edges for arcs with sampled concave cost functions (integral lines only)."""
    edges = []
    for (u, v), samples in sorted(arcs.items()):
        for icpt, slope in concave_to_two_cost(samples):
            if icpt.denominator != 1 or slope.denominator != 1:
                raise InputError(f"arc {u}->{v}: line ({icpt}, {slope}) is not integral")
            edges.append(Edge(u, v, int(icpt), int(slope)))
    return DirectedGraph(n, edges)
