"""Recursive greedy under total-length budgets, per-vertex deadlines and edge priorities.

Besides the separator and the responsibility split, each recursive step
must know how far the separator sits from the current root (a length, or
the priority level of its path): it bounds the separator in the left
subtree and fixes what the right subtree starts from. Offers record that
quantity for every responsibility, so the bound becomes part of the budget
lookup. Merged trees give every vertex its best root path over the union of
both trees' edges, so no bound proven for either part is lost.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import FrozenSet, Mapping, Optional

from ..exceptions import ArborError
from ..metric import Arborescence, PriorityClosure, TreeEdge, TwoCostClosure, merge_union
from ..rewards import RewardOracle, from_mask, gated_set, to_mask
from .core import INFEASIBLE, Engine, Family, Offer, answer, popcount
from .greedy import SolverConfig, Solution

INF = float("inf")


@dataclass(frozen=True)
class ConstrainedSubproblem:
    """Frame for the constrained engines.

    ``D`` maps each responsibility to its bound (``None`` for no bound):
    a cap on the root-to-vertex length, or a floor on the path priority.
    ``k_r`` is the length already accrued above ``r``; ``p_r`` the smallest
    priority above ``r`` (``None`` at the top). ``charged`` lists the
    vertices whose lengths count toward ``L`` (``None`` means all).
    """

    r: int
    Y: FrozenSet[int] = frozenset()
    D: Mapping[int, Optional[int]] = field(default_factory=dict)
    B: int = 0
    L: int = 0
    X: FrozenSet[int] = frozenset()
    i: int = 1
    k_r: int = 0
    p_r: Optional[int] = None
    charged: Optional[FrozenSet[int]] = None

    def __post_init__(self):
        object.__setattr__(self, "Y", frozenset(self.Y))
        object.__setattr__(self, "X", frozenset(self.X))
        object.__setattr__(self, "D", dict(self.D))
        if set(self.D) != set(self.Y):
            raise ArborError("bound table must have exactly the responsibilities as keys")
        if self.r in self.Y:
            raise ArborError("root may not be its own responsibility")
        if self.i < 1 or self.B < 0 or self.L < 0:
            raise ArborError("need i >= 1 and nonnegative budgets")


class _TaggedFamily(Family):
    """Shared logic of the constrained families.

    A frame is keyed by one number about the path above its root: the
    accrued length ``k_r`` or the smallest priority ``p_r``. An offer's
    point starts with ``head`` budget coordinates and then lists a tag per
    responsibility in increasing vertex order: the root-path length, or
    the negated root-path priority. A caller enforces its caps or floors
    with an ordinary budget lookup, so guessing the separator's distance
    or priority level spawns no frames: each left tree meets the right
    frame keyed by what that tree actually achieved at the separator.
    """

    head = 1
    mode = "length"

    def check_extra(self, eng, r, Y, extra):
        return isinstance(extra, int) and extra >= 0

    def check_offers(self, eng, r, Y, offers):
        width = self.head + popcount(Y)
        return all(len(o.point) == width for o in offers)

    def _tag(self, point, Y, w):
        """Tag of ``w`` recorded in ``point`` of a frame with responsibilities ``Y``."""
        return point[self.head + popcount(Y & ((1 << w) - 1))]

    def guesses(self, eng, r, Y, X, i, extra, v, Y1, Y2):
        return ((extra, (extra, v, Y, Y1, Y2)),)

    def right_extra(self, eng, ctx, lo):
        above, v, Y, Y1, Y2 = ctx
        if not (Y1 >> v) & 1:
            return above
        return self._shift(above, self._tag(lo.point, Y1, v))

    def base(self, eng, r, Y, X, extra):
        if Y:
            v = Y.bit_length() - 1
            return self._leaf_offers(eng, r, v, X, extra, True, 1)
        out = [self.empty(eng, r, X, extra)]
        for v in range(self.n):
            if v != r:
                out.extend(self._leaf_offers(eng, r, v, X, extra, False, (v + 1) * 1024))
        return out

    def _leaf_offers(self, eng, r, v, X, above, tagged, seq0):
        out = []
        for j, edge in enumerate(self._edges(r, v)):
            c = edge.cost
            if c > eng.budget[0]:
                continue
            t = Arborescence(r, {v: edge})
            head = self._head(eng, t, above, c)
            if head is None:
                continue
            counted = self._counted(t, above)
            point = head + ((self._tree_tag(t, v),) if tagged else ())
            out.append(Offer(point, eng.gain(X, counted), c, t.mask, counted, popcount(t.mask & ~counted),
                             seq0 + j, tree=t))
        return out

    def empty(self, eng, r, X, extra):
        t = Arborescence(r)
        counted = self._counted(t, extra)
        return Offer(self._head(eng, t, extra, 0), eng.gain(X, counted), 0, t.mask, counted, 0, 0, tree=t)

    def combine(self, eng, r, X, extra, v, lo, ro, seq, ctx=None):
        above, _, Y, Y1, Y2 = ctx
        b = lo.point[0] + ro.point[0]
        if b > eng.budget[0]:
            return None
        mask = lo.mask | ro.mask
        if lo.mask & ro.mask == 1 << v:
            # disjoint apart from the separator: every root path is a concatenation
            tv = self._tag(lo.point, Y1, v) if (Y1 >> v) & 1 else self.identity
            tags = tuple(self._tag(lo.point, Y1, w) if (Y1 >> w) & 1 else self._concat(tv, self._tag(ro.point, Y2, w))
                         for w in from_mask(Y))
            head = self._join_heads(eng, lo.point, ro.point, b, tv)
            if head is None:
                return None
            counted = lo.counted | ro.counted
            mode = self.mode
            return Offer(head + tags, lo.value + ro.value, lo.cost + ro.cost, mask, counted,
                         popcount(mask & ~counted), seq, build=lambda: merge_union(lo.tree, ro.tree, mode))
        tree = merge_union(lo.tree, ro.tree, self.mode)
        head = self._head(eng, tree, above, b)
        if head is None:
            return None
        counted = self._counted(tree, above)
        tags = tuple(self._tree_tag(tree, w) for w in from_mask(Y))
        return Offer(head + tags, eng.gain(X, counted), tree.cost, mask, counted, popcount(mask & ~counted),
                     seq, tree=tree)

    def _head(self, eng, tree, above, point_cost):
        return (point_cost,)

    def _join_heads(self, eng, lp, rp, b, dv):
        return (b,)


class _LengthFamily(_TaggedFamily):
    identity = 0

    def __init__(self, closure: TwoCostClosure):
        self.closure = closure
        self.n = closure.n

    def _edges(self, r, v):
        return [TreeEdge(r, c, ln) for c, ln in self.closure.frontier(r, v)]

    def _tree_tag(self, tree, w):
        return tree.path_length(w)

    def _concat(self, a, b):
        return a + b

    def _shift(self, k_r, dist):
        return k_r + dist


class LengthBudgetFamily(_LengthFamily):
    """Cost budget plus a budget on the sum of charged root-path lengths.

    Points start with ``(cost, count, length)``: the number of charged
    non-root vertices and the sum of their lengths from the frame root. A
    frame below accrued length ``k_r`` uses ``k_r * count + length`` of the
    budget, so frames need not be keyed by ``k_r`` at all.
    """

    head = 3
    dims = 3

    def __init__(self, closure, charged_mask):
        super().__init__(closure)
        self.charged = charged_mask
        # with no positive length anywhere the count can never matter
        self.flat = all(ln == 0 for u in range(self.n) for v in range(self.n) if u != v
                        for _, ln in closure.frontier(u, v))

    def _counted(self, tree, above):
        return tree.mask

    def _shift(self, above, dist):
        return 0

    def _head(self, eng, tree, above, point_cost):
        cnt = total = 0
        for w, ln in tree.lengths().items():
            if w != tree.root and (self.charged >> w) & 1:
                cnt += 1
                total += ln
        if total > eng.budget[1]:
            return None
        return (point_cost, 0 if self.flat else cnt, total)

    def _join_heads(self, eng, lp, rp, b, dv):
        total = lp[2] + rp[2] + dv * rp[1]
        if total > eng.budget[1]:
            return None
        return (b, lp[1] + rp[1], total)

    def usage(self, point, k_r):
        return k_r * point[1] + point[2]


class DeadlineFamily(_LengthFamily):
    """Cost budget; a vertex's reward counts only if it is reached by its deadline."""

    def __init__(self, closure, deadlines: Mapping[int, int]):
        super().__init__(closure)
        self.deadlines = {v: d for v, d in deadlines.items() if d is not None}

    def _counted(self, tree, k_r):
        return gated_set(tree, deadlines=self.deadlines, offset=k_r)


class PriorityFamily(_TaggedFamily):
    """Cost budget with priority floors; rewards need a root path of high enough priority.

    Tags are negated path priorities so that a floor ``q`` is the budget ``-q``.
    """

    mode = "priority"

    def __init__(self, closure: PriorityClosure, requirements: Mapping[int, int]):
        self.closure = closure
        self.n = closure.n
        self.levels = closure.levels
        self.identity = -self.levels
        self.req = {v: q for v, q in requirements.items() if q is not None}

    def check_extra(self, eng, r, Y, extra):
        return isinstance(extra, int) and 1 <= extra <= self.levels

    def _edges(self, r, v):
        cost = self.closure.cost
        out = []
        for q in range(1, self.levels + 1):
            c = int(cost[q][r, v])
            if c >= self.closure.infeasible_cost:
                break
            # a level whose cost the next level matches is never needed
            if q < self.levels and int(cost[q + 1][r, v]) == c:
                continue
            out.append(TreeEdge(r, c, 0, q))
        return out

    def _tree_tag(self, tree, w):
        return -min(self.levels, tree.path_priority(w, default=self.levels))

    def _concat(self, a, b):
        return max(a, b)

    def _shift(self, p_r, tag):
        return min(p_r, -tag)

    def _counted(self, tree, p_r):
        return gated_set(tree, requirements=self.req, root_priority=p_r)


# ---------------------------------------------------------------------------
# public entry points


def _run(family, f, n, sub, budget, config, extra, top_budget=None, accept=None):
    t0 = time.perf_counter()
    config = config or SolverConfig()
    depth = max(sub.i + len(sub.Y), config.depth or 0)
    eng = Engine(family, f, n, depth, budget, mode="linear", workers=config.workers, debug=config.debug)
    offers = eng.solve(sub.r, to_mask(sub.Y), to_mask(sub.X), sub.i, extra)
    if accept is None:
        best = answer(offers, top_budget or budget)
    else:
        best = min((o for o in offers if accept(o)), key=lambda o: o.key, default=None)
    stats = eng.stats.as_dict()
    stats["wall_time"] = time.perf_counter() - t0
    if best is None:
        return Solution(INFEASIBLE, 0, 0, stats)
    return Solution(best.tree, best.value, best.tree.cost, stats)


def _caps(budget, sub):
    return tuple(budget) + tuple(INF if sub.D[w] is None else sub.D[w] for w in sorted(sub.Y))


def rg_dc(two_cost: TwoCostClosure, f: RewardOracle, sub: ConstrainedSubproblem,
          config: Optional[SolverConfig] = None) -> Solution:
    """Recursive greedy with a cost budget ``B`` and a total-length budget ``L``."""
    charged = to_mask(range(two_cost.n)) if sub.charged is None else to_mask(sub.charged)
    fam = LengthBudgetFamily(two_cost, charged)
    caps = _caps((), sub)

    def accept(o):
        return (o.point[0] <= sub.B and fam.usage(o.point, sub.k_r) <= sub.L
                and all(t <= c for t, c in zip(o.point[3:], caps)))

    return _run(fam, f, two_cost.n, sub, (sub.B, sub.L), config, 0, accept=accept)


def rg_dl(two_cost: TwoCostClosure, f: RewardOracle, deadlines: Mapping[int, int], sub: ConstrainedSubproblem,
          config: Optional[SolverConfig] = None) -> Solution:
    """Recursive greedy where a vertex pays off only if reached by its deadline.

    The returned value is the marginal reward of the on-time vertices.
    """
    fam = DeadlineFamily(two_cost, deadlines)
    return _run(fam, f, two_cost.n, sub, (sub.B,), config, sub.k_r, _caps((sub.B,), sub))


def rg_pr(closure: PriorityClosure, f: RewardOracle, requirements: Mapping[int, int], sub: ConstrainedSubproblem,
          config: Optional[SolverConfig] = None) -> Solution:
    """Recursive greedy with priority floors on responsibilities and priority-gated rewards."""
    fam = PriorityFamily(closure, requirements)
    p_r = closure.levels if sub.p_r is None else sub.p_r
    floors = tuple(INF if sub.D[w] is None else -sub.D[w] for w in sorted(sub.Y))
    return _run(fam, f, closure.n, sub, (sub.B,), config, p_r, (sub.B,) + floors)
