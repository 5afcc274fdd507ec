"""Recursive greedy for submodular tree orienteering and its faster variants."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Optional

import numpy as np

from ..exceptions import ArborError
from ..metric import Arborescence, MetricInstance, TreeEdge, merge_and_prune
from ..rewards import RewardOracle, from_mask, to_mask
from .core import (INFEASIBLE, Engine, Family, Offer, answer, default_depth, linear_min_budget, popcount, prune,
                   size_cap, submasks)

NO_BUDGET = None


@dataclass(frozen=True)
class Subproblem:
    """Recursion frame ``(r, Y, B, X, i)``."""

    r: int
    Y: FrozenSet[int] = frozenset()
    B: int = 0
    X: FrozenSet[int] = frozenset()
    i: int = 1

    def __post_init__(self):
        object.__setattr__(self, "Y", frozenset(self.Y))
        object.__setattr__(self, "X", frozenset(self.X))
        if self.r in self.Y:
            raise ArborError("root may not be its own responsibility")
        if self.i < 1 or self.B < 0:
            raise ArborError("need i >= 1 and B >= 0")


@dataclass
class SolverConfig:
    """Engine selection and knobs.

    ``depth`` defaults to the smallest ``d`` with ``1.5**d >= k_cap`` where
    ``k_cap`` defaults to ``n - 1``. ``block`` (rg-fast) defaults to
    ``max(1, floor(epsilon * log2(log2(k_cap))))``.
    """

    engine: str = "rg"
    epsilon: float = 1.0
    depth: Optional[int] = None
    block: Optional[int] = None
    workers: int = 1
    debug: bool = True
    k_cap: Optional[int] = None
    check_search: bool = False

    def resolve_depth(self, n: int) -> int:
        if self.depth is not None:
            if self.depth < 1:
                raise ArborError("depth must be >= 1")
            return self.depth
        k = self.k_cap if self.k_cap is not None else n - 1
        return default_depth(max(1, k))

    def resolve_block(self, n: int, d: int) -> int:
        if self.block is not None:
            s = self.block
        else:
            k = self.k_cap if self.k_cap is not None else n - 1
            ll = math.log2(math.log2(k)) if k > 2 else 0.0
            s = max(1, int(math.floor(self.epsilon * ll)))
        if not 1 <= s:
            raise ArborError("block size must be >= 1")
        return min(s, d)


@dataclass
class Solution:
    """Engine output: a tree (or :data:`INFEASIBLE`) with its marginal value."""

    tree: object
    value: int = 0
    cost: int = 0
    stats: Dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.tree is not INFEASIBLE

    def __bool__(self):
        return self.feasible


def _cost_matrix(metric):
    if isinstance(metric, MetricInstance):
        return metric.cost
    return np.asarray(metric, dtype=np.int64)


class PlainFamily(Family):
    """Cost budget only; trees are merged keeping the left tree's in-edges."""

    dims = 1

    def __init__(self, cost):
        self.cost = cost
        self.n = cost.shape[0]

    def empty(self, eng, r, X, extra):
        m = 1 << r
        return Offer((0,), eng.gain(X, m), 0, m, m, 0, 0, tree=Arborescence(r))

    def _edge(self, eng, r, v, X, seq):
        c = int(self.cost[r, v])
        m = (1 << r) | (1 << v)
        return Offer((c,), eng.gain(X, m), c, m, m, 0, seq, tree=Arborescence(r, {v: TreeEdge(r, c)}))

    def base(self, eng, r, Y, X, extra):
        Bt = eng.budget[0]
        if Y:
            v = Y.bit_length() - 1
            if self.cost[r, v] > Bt:
                return []
            return [self._edge(eng, r, v, X, 1)]
        out = [self.empty(eng, r, X, extra)]
        for v in range(self.n):
            if v != r and self.cost[r, v] <= Bt:
                out.append(self._edge(eng, r, v, X, v + 1))
        return out

    def guesses(self, eng, r, Y, X, i, extra, v, Y1, Y2):
        return ((None, None),)

    def right_extra(self, eng, ctx, left):
        return None

    def combine(self, eng, r, X, extra, v, lo, ro, seq, ctx=None):
        b = lo.point[0] + ro.point[0]
        if b > eng.budget[0]:
            return None
        overlap = lo.mask & ro.mask & ~(1 << v)
        cost = lo.cost + ro.cost
        if overlap:
            inn = ro.tree.in_edge
            for w in from_mask(overlap):
                cost -= inn[w].cost
        return Offer((b,), lo.value + ro.value, cost, lo.mask | ro.mask, lo.counted | ro.counted, 0, seq,
                     build=lambda: merge_and_prune(lo.tree, ro.tree))


def _engine(metric, f, sub: Subproblem, mode, config: Optional[SolverConfig], depth=None):
    cost = _cost_matrix(metric)
    config = config or SolverConfig()
    d = depth if depth is not None else max(sub.i + len(sub.Y), config.depth or 0)
    return Engine(PlainFamily(cost), f, cost.shape[0], d, (sub.B,), mode=mode, workers=config.workers,
                  debug=config.debug, check_search=config.check_search)


def _finish(eng, offers, sub, t0):
    best = answer(offers, (sub.B,))
    stats = eng.stats.as_dict()
    stats["wall_time"] = time.perf_counter() - t0
    if best is None:
        return Solution(INFEASIBLE, 0, 0, stats)
    return Solution(best.tree, best.value, best.tree.cost, stats)


def rg(metric, f: RewardOracle, sub: Subproblem, config: Optional[SolverConfig] = None, depth=None) -> Solution:
    """Recursive greedy: every budget split of the left subtree is tried."""
    t0 = time.perf_counter()
    eng = _engine(metric, f, sub, "linear", config, depth)
    offers = eng.solve(sub.r, to_mask(sub.Y), to_mask(sub.X), sub.i)
    return _finish(eng, offers, sub, t0)


def rg_qp(metric, f: RewardOracle, sub: Subproblem, config: Optional[SolverConfig] = None, depth=None) -> Solution:
    """Recursive greedy with value-targeted budget splits found by binary search."""
    t0 = time.perf_counter()
    eng = _engine(metric, f, sub, "qp", config, depth)
    offers = eng.solve(sub.r, to_mask(sub.Y), to_mask(sub.X), sub.i)
    return _finish(eng, offers, sub, t0)


def min_budget_for_value(metric, f: RewardOracle, r: int, Y: Iterable[int], X: Iterable[int], i: int, u: int,
                         max_budget: int, linear: bool = False):
    """Smallest budget at which :func:`rg_qp` reaches value ``u``, or ``NO_BUDGET``.

    Uses binary search over ``[0, max_budget]``; ``linear=True`` scans
    upward instead (reference route).
    """
    if u > f.upper_bound:
        return NO_BUDGET
    sub = Subproblem(r, frozenset(Y), max_budget, frozenset(X), i)
    eng = _engine(metric, f, sub, "qp", None)
    offers = eng.solve(r, to_mask(sub.Y), to_mask(sub.X), i)
    if linear:
        return linear_min_budget(offers, u, max_budget)
    return eng.min_budget(offers, u)


# ---------------------------------------------------------------------------
# depth compression


class BlockEngine:
    """Guess ``s`` recursion levels at once.

    Levels are grouped into blocks; a block frame enumerates the complete
    binary guess tree of its levels (separators, responsibility splits,
    budget splits) and solves the ``2**s`` leaves left to right, each leaf
    augmenting the vertices collected by the leaves before it. Leaves are
    block frames one block lower. In the bottom block the leaves are base
    cases whose vertex is guessed too, which makes the bottom block exact
    over the trees its guess trees can express.
    """

    def __init__(self, cost, f, depth: int, block: int, budget: int, debug: bool = True,
                 check_depth: Optional[int] = None):
        self.cost = cost
        self.check_depth = depth if check_depth is None else check_depth
        self.n = cost.shape[0]
        self.f = f
        self.depth = depth
        self.block = block
        self.blocks = -(-depth // block)
        self.bottom = depth - block * (self.blocks - 1)
        self.budget = budget
        self.debug = debug
        self.reach_memo = {}
        self.block_memo = {}
        self.node_memo = {}
        self.pruned_memo = {}
        self.stats = {"calls": 0, "frames": 0, "frame_checks": 0, "frame_violations": 0}

    def _check(self, Y, level):
        self.stats["calls"] += 1
        if self.debug:
            self.stats["frame_checks"] += 1
            if popcount(Y) + level > self.check_depth:
                self.stats["frame_violations"] += 1

    def gain(self, X, S):
        return self.f.value(X | S) - self.f.value(X)

    def top_level(self, j):
        return self.bottom + self.block * (j - 1)

    # -- bottom block: X-independent reachable vertex sets -------------------

    def reach(self, r, Y, t):
        """Dense table ``W -> min budget`` for guess trees of ``t`` levels rooted at ``r`` covering ``Y``."""
        key = (r, Y, t)
        hit = self.reach_memo.get(key)
        if hit is not None:
            return hit
        self._check(Y, t)
        self.stats["frames"] += 1
        size = 1 << self.n
        INF = np.iinfo(np.int64).max
        pt = np.full(size, INF, dtype=np.int64)
        wit = np.full((size, 4), -1, dtype=np.int64)  # v, S, W1, W2
        Bt = self.budget
        rb = 1 << r
        if popcount(Y) <= size_cap(t):
            if t == 1:
                if Y:
                    v = Y.bit_length() - 1
                    if self.cost[r, v] <= Bt:
                        pt[rb | (1 << v)] = self.cost[r, v]
                else:
                    pt[rb] = 0
                    for v in range(self.n):
                        if v != r and self.cost[r, v] <= Bt:
                            pt[rb | (1 << v)] = self.cost[r, v]
            else:
                if Y == 0:
                    pt[rb] = 0
                for v in range(self.n):
                    vb = 1 << v
                    for S in submasks(Y):
                        Y1 = (S | vb) & ~rb
                        Y2 = Y & ~(S | vb)
                        L = self.reach(r, Y1, t - 1)
                        if L[0].size == 0:
                            continue
                        R = self.reach(v, Y2, t - 1)
                        if R[0].size == 0:
                            continue
                        Wa, ca = L[0], L[1]
                        Wb, cb = R[0], R[1]
                        W = (Wa[:, None] | Wb[None, :]).ravel()
                        c = (ca[:, None] + cb[None, :]).ravel()
                        ok = c <= Bt
                        if not ok.any():
                            continue
                        idx = np.nonzero(ok)[0]
                        W, c = W[idx], c[idx]
                        order = np.lexsort((idx, c, W))
                        Ws = W[order]
                        first = np.ones(len(Ws), dtype=bool)
                        first[1:] = Ws[1:] != Ws[:-1]
                        pick = order[first]
                        Wp, cp, ip = W[pick], c[pick], idx[pick]
                        better = cp < pt[Wp]
                        Wp, cp, ip = Wp[better], cp[better], ip[better]
                        pt[Wp] = cp
                        wit[Wp, 0] = v
                        wit[Wp, 1] = S
                        wit[Wp, 2] = Wa[ip // len(Wb)]
                        wit[Wp, 3] = Wb[ip % len(Wb)]
        nz = np.nonzero(pt < INF)[0]
        out = (nz.astype(np.int64), pt[nz], wit, pt)
        self.reach_memo[key] = out
        return out

    def reach_tree(self, r, Y, t, W) -> Arborescence:
        if t == 1:
            others = W & ~(1 << r)
            if not others:
                return Arborescence(r)
            v = others.bit_length() - 1
            return Arborescence(r, {v: TreeEdge(r, int(self.cost[r, v]))})
        _, _, wit, _ = self.reach(r, Y, t)
        v, S, W1, W2 = (int(x) for x in wit[W])
        if v < 0:
            return Arborescence(r)
        vb = 1 << v
        Y1 = (S | vb) & ~(1 << r)
        Y2 = Y & ~(S | vb)
        return merge_and_prune(self.reach_tree(r, Y1, t - 1, W1), self.reach_tree(v, Y2, t - 1, W2))

    def _bottom_offers(self, r, Y, X):
        Ws, pts, _, _ = self.reach(r, Y, self.bottom)
        out = []
        # enumeration order: the empty tree first, then by vertex set
        for seq, (W, p) in enumerate(sorted(zip(Ws.tolist(), pts.tolist()), key=lambda wp: (wp[0] != 1 << r, wp[0]))):
            tree = self.reach_tree(r, Y, self.bottom, W)
            out.append(Offer((p,), self.gain(X, W), tree.cost, W, W, 0, seq, tree=tree))
        return prune(out)

    # -- upper blocks --------------------------------------------------------

    def solve(self, r, Y, X, j):
        key = (r, Y, X, j)
        hit = self.block_memo.get(key)
        if hit is not None:
            return hit
        if j == 1:
            out = self._bottom_offers(r, Y, X)
        else:
            out = prune(self._node(r, Y, X, self.block, self.top_level(j), j))
        self.block_memo[key] = out
        return out

    def _pruned_node(self, r, Y, X, t, level, j):
        key = (r, Y, X, t, j)
        hit = self.pruned_memo.get(key)
        if hit is None:
            hit = self.pruned_memo[key] = prune(self._node(r, Y, X, t, level, j))
        return hit

    def _node(self, r, Y, X, t, level, j):
        """Outcomes of a guess subtree with ``t`` levels left in block ``j``.

        Values are relative to ``X``. Inside the block nothing is pruned by
        value: an outcome survives unless another one reaching the same
        collected set is at least as cheap in budget and tree cost.
        """
        if t == 0:
            return self.solve(r, Y, X, j - 1)
        key = (r, Y, X, t, j)
        hit = self.node_memo.get(key)
        if hit is not None:
            return hit
        self._check(Y, level)
        self.stats["frames"] += 1
        out = []
        budget = self.budget
        # at the top of a block only the best right value per budget matters
        right = self._pruned_node if t == self.block else self._node
        if popcount(Y) <= size_cap(level):
            rb = 1 << r
            if Y == 0:
                out.append(Offer((0,), self.gain(X, rb), 0, rb, rb, 0, 0, tree=Arborescence(r)))
            for v in range(self.n):
                vb = 1 << v
                seq = (v + 1) << 40
                for S in submasks(Y):
                    Y1 = (S | vb) & ~rb
                    Y2 = Y & ~(S | vb)
                    for lo in self._node(r, Y1, X, t - 1, level - 1, j):
                        room = budget - lo.point[0]
                        if room < 0:
                            continue
                        # right lists are sorted by point, so stop at the first one over budget
                        for ro in right(v, Y2, X | lo.counted, t - 1, level - 1, j):
                            if ro.point[0] > room:
                                break
                            b = lo.point[0] + ro.point[0]
                            overlap = lo.mask & ro.mask & ~vb
                            cost = lo.cost + ro.cost
                            if overlap:
                                inn = ro.tree.in_edge
                                for w in from_mask(overlap):
                                    cost -= inn[w].cost
                            out.append(Offer((b,), lo.value + ro.value, cost, lo.mask | ro.mask,
                                             lo.counted | ro.counted, 0, seq,
                                             build=lambda lo=lo, ro=ro: merge_and_prune(lo.tree, ro.tree)))
                            seq += 1
        out = _prune_by_outcome(out) if t < self.block else out
        out.sort(key=lambda o: o.point)
        self.node_memo[key] = out
        return out


def _prune_by_outcome(offers):
    groups = {}
    for o in offers:
        groups.setdefault(o.counted, []).append(o)
    out = []
    for g in groups.values():
        out.extend(prune(g))
    return out


def rg_fast(metric, f: RewardOracle, sub: Subproblem, block: int, config: Optional[SolverConfig] = None) -> Solution:
    """Depth-compressed recursive greedy.

    ``sub.i`` is the total number of levels; they are split into
    ``ceil(i / block)`` blocks (the bottom block takes the remainder).
    """
    t0 = time.perf_counter()
    cost = _cost_matrix(metric)
    config = config or SolverConfig()
    block = max(1, min(block, sub.i))
    eng = BlockEngine(cost, f, sub.i, block, sub.B, debug=config.debug, check_depth=sub.i + len(sub.Y))
    offers = eng.solve(sub.r, to_mask(sub.Y), to_mask(sub.X), eng.blocks)
    best = answer(offers, (sub.B,))
    stats = dict(eng.stats)
    stats["wall_time"] = time.perf_counter() - t0
    stats["blocks"] = eng.blocks
    if best is None:
        return Solution(INFEASIBLE, 0, 0, stats)
    return Solution(best.tree, best.value, best.tree.cost, stats)


def solve_sto(instance: MetricInstance, f: RewardOracle, config: Optional[SolverConfig] = None) -> Solution:
    """Top-level call ``(r*, {}, B, {}, d)`` with the configured engine."""
    config = config or SolverConfig()
    n = instance.n
    d = config.resolve_depth(n)
    sub = Subproblem(instance.root, frozenset(), int(instance.budget), frozenset(), d)
    if config.engine == "rg":
        sol = rg(instance, f, sub, config, depth=d)
    elif config.engine == "rg-qp":
        sol = rg_qp(instance, f, sub, config, depth=d)
    elif config.engine == "rg-fast":
        sol = rg_fast(instance, f, sub, config.resolve_block(n, d), config)
    else:
        raise ArborError(f"engine {config.engine!r} does not solve plain instances")
    if not sol.feasible:
        sol = Solution(Arborescence(instance.root), f.value(1 << instance.root) - f.value(0), 0, sol.stats)
    sol.stats.update(engine=config.engine, depth=d)
    if config.engine == "rg-fast":
        sol.stats["block"] = config.resolve_block(n, d)
    return sol
