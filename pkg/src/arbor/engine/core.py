"""Shared recursion machinery for the recursive-greedy engines.

A frame ``(r, Y, X, i, extra)`` is solved once for every budget at the same
time: its result is a Pareto set of *offers*. An offer records a budget
point (cost, or cost and total length), the tree achievable at that point
and its marginal value. The answer of the frame at budget ``B`` is the best
offer whose point fits in ``B``; best means larger value, then lower tree
cost, then earlier enumeration order. Because answers are drawn from a set
that only grows with ``B``, the value is nondecreasing in the budget.

Families (plain, length-constrained, deadline, priority) plug in through a
small hook interface; the recursion, pruning and bookkeeping live here.
"""

from __future__ import annotations

import bisect
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from ..exceptions import ArborError
from ..metric import Arborescence


class _Infeasible:
    """Sentinel returned when no tree meets a frame's requirements."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INFEASIBLE"

    def __bool__(self):
        return False


INFEASIBLE = _Infeasible()


def popcount(m: int) -> int:
    return m.bit_count()


def size_cap(i: int) -> int:
    """``floor(1.5 ** i)`` in exact integer arithmetic."""
    return 3**i // 2**i


def default_depth(k: int) -> int:
    """Smallest ``d >= 1`` with ``1.5 ** d >= k``."""
    d = 1
    while 3**d < k * 2**d:
        d += 1
    return d


def submasks(Y: int):
    """All subsets of ``Y`` in increasing numeric order."""
    out = []
    s = 0
    while True:
        out.append(s)
        if s == Y:
            break
        s = (s - Y) & Y
    return out


class Offer:
    """One point of a frame's budget/value trade-off."""

    __slots__ = ("point", "value", "cost", "mask", "counted", "tie", "seq", "_tree", "_build")

    def __init__(self, point, value, cost, mask, counted, tie, seq, tree=None, build=None):
        self.point = point
        self.value = value
        self.cost = cost
        self.mask = mask
        self.counted = counted
        self.tie = tie
        self.seq = seq
        self._tree = tree
        self._build = build

    @property
    def key(self):
        return (-self.value, self.cost, self.tie, self.seq)

    @property
    def tree(self) -> Arborescence:
        if self._tree is None:
            self._tree = self._build()
            self._build = None
        return self._tree

    def __repr__(self):
        return f"Offer(point={self.point}, value={self.value}, cost={self.cost})"


def fits(point, budget) -> bool:
    return all(p <= b for p, b in zip(point, budget))


def prune(offers: List[Offer]) -> List[Offer]:
    """Drop every offer that can never be the answer at any budget.

    One-dimensional results come back sorted by point with strictly improving
    keys, which makes the answer lookup a bisection.
    """
    if not offers:
        return []
    if len(offers[0].point) == 1:
        offers = sorted(offers, key=lambda o: (o.point, o.key))
        out = []
        best = None
        for o in offers:
            k = o.key
            if best is None or k < best:
                out.append(o)
                best = k
        return out
    offers = sorted(offers, key=lambda o: o.key)
    out = []
    for o in offers:
        if not any(fits(p.point, o.point) for p in out):
            out.append(o)
    out.sort(key=lambda o: (o.point, o.key))
    return out


def answer(offers: Sequence[Offer], budget) -> Optional[Offer]:
    """Best offer whose point fits in ``budget`` (``None`` if none fits)."""
    if not offers:
        return None
    if len(budget) == 1:
        idx = bisect.bisect_right(_points(offers), budget[0])
        return offers[idx - 1] if idx else None
    best = None
    for o in offers:
        if fits(o.point, budget) and (best is None or o.key < best.key):
            best = o
    return best


def _points(offers):
    return [o.point[0] for o in offers]


@dataclass
class Stats:
    """Counters collected during one solve."""

    calls: int = 0
    frames: int = 0
    guesses: int = 0
    probes: int = 0
    search_mismatches: int = 0
    frame_checks: int = 0
    frame_violations: int = 0
    max_responsibility: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if k != "lock"}


class Family:
    """Hook interface implemented by each engine family."""

    dims = 1

    def top_extra(self, eng):
        return None

    def check_extra(self, eng, r, Y, extra):
        return True

    def viable(self, eng, r, Y, extra):
        """Cheap necessary condition for a frame to have any offer."""
        return True

    def check_offers(self, eng, r, Y, offers):
        """Debug check on a finished frame's offers."""
        return True

    def empty(self, eng, r, X, extra):
        raise NotImplementedError

    def base(self, eng, r, Y, X, extra):
        raise NotImplementedError

    def guesses(self, eng, r, Y, X, i, extra, v, Y1, Y2):
        raise NotImplementedError

    def right_extra(self, eng, ctx, left: Offer):
        raise NotImplementedError

    def combine(self, eng, r, X, extra, v, left: Offer, right: Offer, seq, ctx=None):
        raise NotImplementedError


class Engine:
    """Memoized frame solver.

    ``mode="linear"`` uses every left offer as a budget split point.
    ``mode="qp"`` picks, for each target value ``u``, the smallest budget at
    which the left frame reaches ``u`` (found by binary search over budgets).
    """

    def __init__(self, family: Family, f, n: int, depth: int, budget: Tuple[int, ...],
                 mode: str = "linear", workers: int = 1, debug: bool = True,
                 check_search: bool = False, strict: bool = False):
        if depth < 1:
            raise ArborError("depth must be >= 1")
        if mode not in ("linear", "qp"):
            raise ArborError(f"unknown split mode {mode!r}")
        self.family = family
        self.f = f
        self.n = n
        self.depth = depth
        self.budget = tuple(budget)
        self.mode = mode
        self.workers = max(1, int(workers))
        self.debug = debug
        self.check_search = check_search
        self.strict = strict
        self.stats = Stats()
        self.memo = {}
        self.value_cache = {}

    # -- value helpers -------------------------------------------------------

    def gain(self, X: int, S: int) -> int:
        f = self.f
        return f.value(X | S) - f.value(X)

    # -- recursion -----------------------------------------------------------

    def _enter(self, r, Y, i, extra):
        st = self.stats
        ysize = popcount(Y)
        with st.lock:
            st.calls += 1
            if self.debug:
                st.frame_checks += 1
                if ysize + i > self.depth or (Y >> r) & 1:
                    st.frame_violations += 1
                st.max_responsibility = max(st.max_responsibility, ysize)
        if self.debug:
            if self.strict and (ysize + i > self.depth or (Y >> r) & 1):
                raise AssertionError(f"frame invariant broken at r={r} |Y|={ysize} i={i} d={self.depth}")
            if not self.family.check_extra(self, r, Y, extra):
                raise AssertionError(f"bound table keys differ from responsibilities at r={r}")

    def _repeat(self, r, Y, i, times):
        """Account for ``times`` repeated calls of a frame just solved; each would be a memo hit."""
        st = self.stats
        with st.lock:
            st.calls += times
            if self.debug:
                st.frame_checks += times
                if popcount(Y) + i > self.depth or (Y >> r) & 1:
                    st.frame_violations += times

    def solve(self, r: int, Y: int, X: int, i: int, extra=None) -> List[Offer]:
        self._enter(r, Y, i, extra)
        key = (r, Y, X, i, extra)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        out = self._solve(r, Y, X, i, extra)
        self.memo[key] = out
        return out

    def _solve(self, r, Y, X, i, extra):
        with self.stats.lock:
            self.stats.frames += 1
        if popcount(Y) > size_cap(i) or not self.family.viable(self, r, Y, extra):
            return []
        if i == 1:
            return prune(self.family.base(self, r, Y, X, extra))
        cands = []
        if Y == 0:
            cands.append(self.family.empty(self, r, X, extra))
        order = [(v,) for v in range(self.n)]
        if self.workers > 1 and len(order) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                parts = list(pool.map(lambda v: self._guess_vertex(r, Y, X, i, extra, v[0]), order))
        else:
            parts = [self._guess_vertex(r, Y, X, i, extra, v[0]) for v in order]
        for part in parts:
            cands.extend(part)
        out = prune(cands)
        if self.debug and not self.family.check_offers(self, r, Y, out):
            raise AssertionError(f"offer shape does not match the responsibilities at r={r}")
        return out

    def _guess_vertex(self, r, Y, X, i, extra, v):
        fam = self.family
        vb = 1 << v
        out = []
        # enumeration order (v, S, guess, split, right offer) fixes tie-breaks
        seq = (v + 1) << 40
        for S in submasks(Y):
            Y1 = (S | vb) & ~(1 << r)
            Y2 = Y & ~(S | vb)
            for left_extra, ctx in fam.guesses(self, r, Y, X, i, extra, v, Y1, Y2):
                with self.stats.lock:
                    self.stats.guesses += 1
                left = self.solve(r, Y1, X, i - 1, left_extra)
                if not left:
                    continue
                for lo, calls in self.split_points(left):
                    rx = fam.right_extra(self, ctx, lo)
                    if rx is INFEASIBLE:
                        continue
                    right = self.solve(v, Y2, X | lo.counted, i - 1, rx)
                    if calls > 1:
                        self._repeat(v, Y2, i - 1, calls - 1)
                    for ro in right:
                        c = fam.combine(self, r, X, extra, v, lo, ro, seq, ctx)
                        if c is not None:
                            out.append(c)
                            seq += 1
            out = prune(out) if len(out) > 64 else out
        return prune(out)

    # -- budget split points -------------------------------------------------

    def split_points(self, left: List[Offer]) -> List[Tuple[Offer, int]]:
        """Left offers to pair with right frames, each with the number of budget splits that select it.

        Linear mode covers every left budget ``0..B`` like the textbook loop;
        splits that select the same left tree repeat the same right call,
        which the memo would answer, so they are counted rather than issued.
        Qp mode visits one budget per value level.
        Multi-coordinate families pair every offer once.
        """
        if self.family.dims != 1:
            return [(o, 1) for o in left]
        if self.mode == "linear":
            # left is sorted by point with strictly improving keys, so budget b
            # selects the last offer whose point is <= b
            top = self.budget[0] + 1
            out = []
            for idx, o in enumerate(left):
                p = o.point[0]
                if p >= top:
                    break
                nxt = left[idx + 1].point[0] if idx + 1 < len(left) else top
                out.append((o, min(nxt, top) - p))
            return out
        chosen = []
        seen = set()
        levels = sorted({o.value for o in left})
        if 0 not in levels:
            levels.insert(0, 0)
        for u in levels:
            b = self.min_budget(left, u)
            if b is None:
                break
            o = answer(left, (b,))
            if id(o) not in seen:
                seen.add(id(o))
                chosen.append((o, 1))
        return chosen

    def min_budget(self, offers: List[Offer], u: int) -> Optional[int]:
        """Smallest budget ``b`` in ``[0, B]`` whose answer reaches value ``u`` (binary search)."""
        hi_b = self.budget[0]
        top = answer(offers, (hi_b,))
        with self.stats.lock:
            self.stats.probes += 1
        if top is None or top.value < u:
            found = None
        else:
            lo_b, hi = 0, hi_b
            while lo_b < hi:
                mid = (lo_b + hi) // 2
                a = answer(offers, (mid,))
                with self.stats.lock:
                    self.stats.probes += 1
                if a is not None and a.value >= u:
                    hi = mid
                else:
                    lo_b = mid + 1
            found = lo_b
        if self.check_search:
            scan = linear_min_budget(offers, u, hi_b)
            if scan != found:
                with self.stats.lock:
                    self.stats.search_mismatches += 1
        return found


def linear_min_budget(offers: List[Offer], u: int, max_budget: int) -> Optional[int]:
    """Reference for :meth:`Engine.min_budget`: scan budgets upward."""
    for b in range(max_budget + 1):
        a = answer(offers, (b,))
        if a is not None and a.value >= u:
            return b
    return None
