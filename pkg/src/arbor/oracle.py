"""Exhaustive solvers for small instances, used as ground truth.

Maximization oracles return ``(value, tree)``; minimization oracles return
``(objective, tree)`` with ``tree = None`` when nothing is feasible. All of
them refuse instances above their caps instead of truncating.
"""

from __future__ import annotations

import itertools
import os
import time
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from .exceptions import TooLarge
from .metric import Arborescence, PriorityClosure, TreeEdge, TwoCostClosure, min_arborescence


def _default_time_cap() -> float:
    ms = os.environ.get("ARBOR_TIME_CAP_MS")
    return float(ms) / 1000.0 if ms else 300.0


@dataclass
class OracleBudget:
    """Caps for exhaustive search."""

    max_vertices: int = 8
    max_nodes: int = 50_000_000
    time_cap: Optional[float] = None

    def __post_init__(self):
        if self.time_cap is None:
            self.time_cap = _default_time_cap()
        if self.max_vertices < 1 or self.max_nodes < 1 or self.time_cap <= 0:
            raise ValueError("oracle caps must be positive")


class _Clock:
    def __init__(self, budget: OracleBudget):
        self.budget = budget
        self.start = time.perf_counter()
        self.nodes = 0

    def tick(self, k=1):
        self.nodes += k
        if self.nodes > self.budget.max_nodes:
            raise TooLarge("TOO_LARGE: enumeration node cap reached")
        if self.nodes % 4096 == 0 and time.perf_counter() - self.start > self.budget.time_cap:
            raise TooLarge("TOO_LARGE: time cap reached")


def _check_size(n, budget):
    if n > budget.max_vertices:
        raise TooLarge(f"TOO_LARGE: {n} vertices exceeds cap {budget.max_vertices}")


def _subsets(n, root):
    """Vertex sets containing ``root`` by increasing size, as sorted lists."""
    others = [v for v in range(n) if v != root]
    for k in range(len(others) + 1):
        for combo in itertools.combinations(others, k):
            yield [root, *combo]


def _mask(vs):
    m = 0
    for v in vs:
        m |= 1 << v
    return m


# ---------------------------------------------------------------------------
# plain orienteering


def brute_force_sto(cost, f, B: int, root: int, budget: Optional[OracleBudget] = None):
    """Best ``f(W)`` over vertex sets whose minimum arborescence costs at most ``B``."""
    budget = budget or OracleBudget()
    cost = np.asarray(cost)
    n = cost.shape[0]
    _check_size(n, budget)
    clock = _Clock(budget)
    best_val, best_tree = f.value(1 << root), Arborescence(root)
    for W in _subsets(n, root):
        clock.tick()
        val = f.value(_mask(W))
        if val <= best_val:
            continue
        if any(cost[:, w].min(initial=B + 1) > B for w in W if w != root):
            continue
        t = min_arborescence(cost, W, root)
        if t.cost <= B:
            best_val, best_tree = val, t
    return best_val, best_tree


# ---------------------------------------------------------------------------
# generic tree enumeration over per-pair edge options


def edge_options_two_cost(tc: TwoCostClosure):
    """Options ``(cost, length, priority)`` for every ordered pair from a two-cost closure."""
    return {(u, v): [(c, ln, None) for c, ln in tc.frontier(u, v)]
            for u in range(tc.n) for v in range(tc.n) if u != v}


def edge_options_priority(pc: PriorityClosure, limit: int):
    """Per pair, one option per priority level whose cost is not matched by a higher level."""
    out = {}
    for u in range(pc.n):
        for v in range(pc.n):
            if u == v:
                continue
            opts = []
            for q in range(1, pc.levels + 1):
                c = int(pc[q][u, v])
                if c > limit or c >= pc.infeasible_cost or (q < pc.levels and int(pc[q + 1][u, v]) == c):
                    continue
                opts.append((c, 0, q))
            out[(u, v)] = opts
    return out


def _trees_on(W: Sequence[int], root: int, options, cost_cap, clock):
    """Yield ``(parent, choice, cost)`` for every arborescence on ``W`` with cost within ``cost_cap``."""
    others = [v for v in W if v != root]
    parent: Dict[int, int] = {}
    choice: Dict[int, tuple] = {}

    def creates_cycle(x, p):
        while p != root:
            if p == x:
                return True
            if p not in parent:
                return False
            p = parent[p]
        return False

    def rec(idx, spent):
        if idx == len(others):
            yield dict(parent), dict(choice), spent
            return
        x = others[idx]
        for p in W:
            if p == x or creates_cycle(x, p):
                continue
            for opt in options.get((p, x), ()):
                clock.tick()
                c = spent + opt[0]
                if c > cost_cap:
                    continue
                parent[x] = p
                choice[x] = opt
                yield from rec(idx + 1, c)
                del parent[x]
                del choice[x]

    yield from rec(0, 0)


def _tree_from(root, parent, choice):
    return Arborescence(root, {v: TreeEdge(parent[v], opt[0], opt[1] or 0, opt[2]) for v, opt in choice.items()})


def _lengths(root, parent, choice):
    out = {root: 0}

    def get(v):
        if v not in out:
            out[v] = get(parent[v]) + (choice[v][1] or 0)
        return out[v]

    for v in parent:
        get(v)
    return out


def _prios(root, parent, choice, top):
    out = {root: top}

    def get(v):
        if v not in out:
            out[v] = min(get(parent[v]), choice[v][2])
        return out[v]

    for v in parent:
        get(v)
    return out


def brute_force_constrained(problem: str, closure, f, B: int, root: int, *, L: Optional[int] = None,
                            charged: Optional[Iterable[int]] = None, deadlines: Optional[Mapping[int, int]] = None,
                            requirements: Optional[Mapping[int, int]] = None,
                            budget: Optional[OracleBudget] = None):
    """Exact optimum over closure arborescences for ``problem`` in ``length``, ``deadline``, ``priority``.

    * ``length``: maximize ``f(V(T))`` with ``c(T) <= B`` and the sum of
      charged root-path lengths at most ``L``.
    * ``deadline``: maximize ``f`` of the vertices reached by their deadline.
    * ``priority``: maximize ``f`` of the vertices whose root path has
      priority at least their requirement.
    """
    budget = budget or OracleBudget()
    n = closure.n
    _check_size(n, budget)
    clock = _Clock(budget)
    if problem == "priority":
        options = edge_options_priority(closure, B)
    else:
        options = edge_options_two_cost(closure)
    charged_set = set(range(n)) if charged is None else set(charged)
    deadlines = {v: d for v, d in (deadlines or {}).items() if d is not None}
    requirements = {v: q for v, q in (requirements or {}).items() if q is not None}
    top = closure.levels if problem == "priority" else None

    def counted(parent, choice):
        if problem == "length":
            return _mask([root, *parent])
        if problem == "deadline":
            ln = _lengths(root, parent, choice)
            return _mask(v for v in ln if v not in deadlines or ln[v] <= deadlines[v])
        pr = _prios(root, parent, choice, top)
        return _mask(v for v in pr if v not in requirements or pr[v] >= requirements[v])

    def feasible(parent, choice):
        if problem != "length":
            return True
        ln = _lengths(root, parent, choice)
        return sum(ln[v] for v in parent if v in charged_set) <= L

    best_val = f.value(counted({}, {}))
    best_tree = Arborescence(root)
    subsets = sorted(_subsets(n, root), key=lambda W: -f.value(_mask(W)))
    for W in subsets:
        if f.value(_mask(W)) <= best_val:
            break
        for parent, choice, _ in _trees_on(W, root, options, B, clock):
            if not feasible(parent, choice):
                continue
            val = f.value(counted(parent, choice))
            if val > best_val:
                best_val, best_tree = val, _tree_from(root, parent, choice)
                if val == f.value(_mask(W)):
                    break
    return best_val, best_tree


# ---------------------------------------------------------------------------
# minimization targets


def brute_force_min_cover(problem: str, closure, root: int, terminals: Mapping[int, Optional[int]] | Iterable[int],
                          *, method: str = "auto", budget: Optional[OracleBudget] = None):
    """Exact minimum for the covering problems.

    ``problem`` is ``dst`` (``closure`` = cost matrix), ``bab`` (two-cost
    closure; objective = tree cost + sum of terminal path lengths) or
    ``priority`` (priority closure; ``terminals`` maps to requirements).
    For ``dst``, ``method="trees"`` uses full tree enumeration instead of
    minimum arborescences on vertex subsets.
    """
    budget = budget or OracleBudget()
    terms = dict(terminals) if isinstance(terminals, Mapping) else {t: None for t in terminals}
    need = set(terms) - {root}
    clock = _Clock(budget)
    if problem == "dst" and method != "trees":
        cost = np.asarray(closure)
        n = cost.shape[0]
        _check_size(n, budget)
        best, best_tree = None, None
        for W in _subsets(n, root):
            clock.tick()
            if not need <= set(W):
                continue
            t = min_arborescence(cost, W, root)
            if best is None or t.cost < best:
                best, best_tree = t.cost, t
        return best, best_tree
    if problem == "dst":
        cost = np.asarray(closure)
        n = cost.shape[0]
        options = {(u, v): [(int(cost[u, v]), 0, None)] for u in range(n) for v in range(n) if u != v}
    elif problem == "bab":
        n = closure.n
        options = edge_options_two_cost(closure)
    elif problem == "priority":
        n = closure.n
        options = edge_options_priority(closure, closure.infeasible_cost - 1)
    else:
        raise ValueError(f"unknown problem {problem!r}")
    _check_size(n, budget)
    best, best_tree = None, None
    for W in _subsets(n, root):
        if not need <= set(W):
            continue
        cap = float("inf") if best is None else best
        for parent, choice, spent in _trees_on(W, root, options, cap, clock):
            obj = spent
            if problem == "bab":
                ln = _lengths(root, parent, choice)
                obj += sum(ln[t] for t in need)
            elif problem == "priority":
                pr = _prios(root, parent, choice, closure.levels)
                if any(terms[t] is not None and pr[t] < terms[t] for t in need):
                    continue
            if best is None or obj < best:
                best, best_tree = obj, _tree_from(root, parent, choice)
    return best, best_tree


def brute_force_min_polymatroid(cost, root: int, matroid, budget: Optional[OracleBudget] = None):
    """Cheapest arborescence (over vertex subsets, via minimum arborescences) whose vertices span a basis."""
    budget = budget or OracleBudget()
    cost = np.asarray(cost)
    n = cost.shape[0]
    _check_size(n, budget)
    clock = _Clock(budget)
    full = matroid.full_rank
    best, best_tree = None, None
    for W in _subsets(n, root):
        clock.tick()
        if matroid.rank(_mask(W)) < full:
            continue
        t = min_arborescence(cost, W, root)
        if best is None or t.cost < best:
            best, best_tree = t.cost, t
    return best, best_tree
