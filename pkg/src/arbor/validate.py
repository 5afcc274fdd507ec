"""Standalone output checker.

Everything here is recomputed from the raw edge list; nothing is borrowed
from the closures or the engines. A tree edge ``u -> v`` with claimed
``(cost, length, priority)`` is accepted only if the raw graph has a
``u -> v`` walk using edges of priority at least the claimed one whose
cost and length are both no larger than claimed.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional

INF = float("inf")


@dataclass
class Validation:
    ok: bool
    errors: List[str] = field(default_factory=list)
    cost: int = 0
    lengths: Dict[int, int] = field(default_factory=dict)
    priorities: Dict[int, float] = field(default_factory=dict)
    charged_length: int = 0

    def __bool__(self):
        return self.ok


def _cheapest(graph, u, v, max_length, min_priority):
    """Cheapest raw ``u -> v`` walk with length within ``max_length`` over edges of high enough priority.

    Missing priorities count as 1; ``max_length=None`` ignores lengths.
    """
    adj: Dict[int, list] = {}
    for e in graph.edges:
        if min_priority is not None and (e.priority or 1) < min_priority:
            continue
        ln = 0 if max_length is None else (e.length or 0)
        adj.setdefault(e.u, []).append((e.v, e.cost, ln))
    cap = 0 if max_length is None else max_length
    # best[(x, l)]: cheapest known cost to reach x with length exactly l
    best = {(u, 0): 0}
    heap = [(0, 0, u)]
    while heap:
        c, ln, x = heapq.heappop(heap)
        if x == v:
            return c
        if best.get((x, ln), INF) < c:
            continue
        for y, ec, el in adj.get(x, ()):
            nl, nc = ln + el, c + ec
            if nl > cap or any(best.get((y, l2), INF) <= nc for l2 in range(nl + 1)):
                continue
            best[(y, nl)] = nc
            heapq.heappush(heap, (nc, nl, y))
    return None


def validate_tree(graph, tree, root: int, *, budget: Optional[int] = None,
                  responsibilities: Iterable[int] = (), length_caps: Optional[Mapping[int, Optional[int]]] = None,
                  length_budget: Optional[int] = None, charged: Optional[Iterable[int]] = None,
                  priority_floors: Optional[Mapping[int, Optional[int]]] = None,
                  terminals: Iterable[int] = (), check_lengths: bool = False,
                  check_priorities: bool = False) -> Validation:
    """Check ``tree`` against the raw ``graph`` and the given bounds.

    ``length_caps`` bounds root-to-vertex lengths, ``priority_floors``
    bounds root-path priorities from below, ``length_budget`` bounds the
    sum of root-path lengths over ``charged`` non-root vertices (all when
    ``charged`` is ``None``). ``terminals`` and ``responsibilities`` must be
    spanned.
    """
    errors: List[str] = []
    if tree is None:
        return Validation(False, ["no tree"])
    if tree.root != root:
        errors.append(f"tree rooted at {tree.root}, expected {root}")
    parent = {v: e.parent for v, e in tree.in_edge.items()}
    if root in parent:
        errors.append("root has an incoming edge")
    verts = {root, *parent}
    for v, p in parent.items():
        if p not in verts:
            errors.append(f"parent {p} of {v} is not in the tree")
        if not 0 <= v < graph.n or not 0 <= p < graph.n:
            errors.append(f"edge {p}->{v} has an out-of-range endpoint")
    # acyclicity and reachability: follow parents to the root
    lengths: Dict[int, int] = {root: 0}
    prios: Dict[int, float] = {root: float("inf")}
    for v in parent:
        seen = []
        x = v
        while x not in lengths and x in parent and x not in seen:
            seen.append(x)
            x = parent[x]
        if x not in lengths:
            errors.append(f"vertex {v} does not reach the root")
            continue
        for y in reversed(seen):
            e = tree.in_edge[y]
            lengths[y] = lengths[parent[y]] + (e.length or 0)
            pr = e.priority if e.priority is not None else float("inf")
            prios[y] = min(prios[parent[y]], pr)
    if errors:
        return Validation(False, errors)

    cost = 0
    for v, e in tree.in_edge.items():
        if e.cost < 0 or (e.length or 0) < 0:
            errors.append(f"edge {e.parent}->{v} has negative weight")
        cost += e.cost
        need_len = e.length if check_lengths else None
        need_pr = e.priority if check_priorities else None
        c = _cheapest(graph, e.parent, v, need_len, need_pr)
        if c is None or c > e.cost:
            errors.append(f"edge {e.parent}->{v} with cost {e.cost}, length {e.length}, priority {e.priority} "
                          "is not realizable in the graph")
    if budget is not None and cost > budget:
        errors.append(f"cost {cost} exceeds budget {budget}")
    for w in responsibilities:
        if w not in verts:
            errors.append(f"responsibility {w} not spanned")
    for t in terminals:
        if t not in verts:
            errors.append(f"terminal {t} not spanned")
    for w, cap in (length_caps or {}).items():
        if cap is not None and w in lengths and lengths[w] > cap:
            errors.append(f"root path to {w} has length {lengths[w]} > cap {cap}")
    for w, floor in (priority_floors or {}).items():
        if floor is None:
            continue
        if w not in prios:
            errors.append(f"vertex {w} with priority floor {floor} not spanned")
        elif prios[w] < floor:
            errors.append(f"root path to {w} has priority {prios[w]} < {floor}")
    charged_set = None if charged is None else set(charged)
    used = sum(lengths[v] for v in parent if charged_set is None or v in charged_set)
    if length_budget is not None and used > length_budget:
        errors.append(f"charged length {used} exceeds {length_budget}")
    return Validation(not errors, errors, cost, lengths, prios, used)


def on_time(validation: Validation, deadlines: Mapping[int, Optional[int]]):
    """Vertices reached no later than their deadline (vertices without one always count)."""
    return {v for v, ln in validation.lengths.items() if deadlines.get(v) is None or ln <= deadlines[v]}


def meets_priority(validation: Validation, requirements: Mapping[int, Optional[int]]):
    """Vertices whose root path priority meets their requirement."""
    return {v for v, p in validation.priorities.items() if requirements.get(v) is None or p >= requirements[v]}
