"""Monotone submodular value oracles over vertex sets.

Vertex sets are passed either as iterables of ids or as integer bitmasks
(bit ``v`` set when ``v`` is in the set); the engines use bitmasks.
"""

from __future__ import annotations

import threading
from typing import Dict, Iterable, List, Optional, Sequence, Union

from .exceptions import ArborError

VertexSet = Union[int, Iterable[int]]


def to_mask(S: VertexSet) -> int:
    if isinstance(S, int):
        return S
    m = 0
    for v in S:
        m |= 1 << int(v)
    return m


def from_mask(m: int) -> List[int]:
    out = []
    v = 0
    while m:
        if m & 1:
            out.append(v)
        m >>= 1
        v += 1
    return out


class RewardOracle:
    """Base class: integer-valued, monotone, submodular, ``f(empty) = 0``.

    Subclasses implement ``_eval(mask)``. Values are memoized per mask; the
    cache is guarded by a lock so concurrent solvers can share an oracle.
    """

    kind = "abstract"

    def __init__(self, n: int, upper_bound: Optional[int] = None):
        self.n = n
        self._cache: Dict[int, int] = {}
        self._lock = threading.Lock()
        self._upper = upper_bound

    def _eval(self, mask: int) -> int:
        raise NotImplementedError

    def value(self, S: VertexSet) -> int:
        m = to_mask(S)
        hit = self._cache.get(m)
        if hit is None:
            hit = int(self._eval(m))
            with self._lock:
                self._cache[m] = hit
        return hit

    __call__ = value

    @property
    def ground(self) -> int:
        return (1 << self.n) - 1

    @property
    def upper_bound(self) -> int:
        if self._upper is None:
            self._upper = self.value(self.ground)
        return self._upper

    def marginal(self, X: VertexSet, S: VertexSet) -> int:
        return marginal(self, X, S)


def marginal(f: RewardOracle, X: VertexSet, S: VertexSet) -> int:
    """``f(X | S) - f(X)``."""
    x = to_mask(X)
    return f.value(x | to_mask(S)) - f.value(x)


class LinearReward(RewardOracle):
    """Additive vertex weights."""

    kind = "linear"

    def __init__(self, weights: Sequence[int], upper_bound: Optional[int] = None):
        super().__init__(len(weights), upper_bound)
        if any(w < 0 for w in weights):
            raise ArborError("rewards must be nonnegative")
        self.weights = [int(w) for w in weights]

    def _eval(self, mask):
        return sum(self.weights[v] for v in from_mask(mask))


class CoverageReward(RewardOracle):
    """Weighted coverage: vertex ``v`` covers the elements ``covers[v]``."""

    kind = "coverage"

    def __init__(self, covers: Sequence[Iterable[int]], element_weights: Optional[Dict[int, int]] = None,
                 upper_bound: Optional[int] = None):
        super().__init__(len(covers), upper_bound)
        self.covers = [frozenset(c) for c in covers]
        self.element_weights = dict(element_weights or {})

    def _eval(self, mask):
        seen = set()
        for v in from_mask(mask):
            seen |= self.covers[v]
        return sum(self.element_weights.get(e, 1) for e in seen)


class Matroid:
    """Matroid on vertex ids ``0..n-1`` given by a rank function.

    ``kind`` is ``uniform`` (``k``), ``partition`` (``parts`` with
    ``capacities``) or ``graphic`` (``edges[v] = (a, b)`` endpoints of the
    element labelled by vertex ``v``; vertices without an edge are loops).
    """

    def __init__(self, n: int, kind: str, k: int = 0, parts: Sequence[Iterable[int]] = (),
                 capacities: Sequence[int] = (), edges: Optional[Dict[int, tuple]] = None):
        self.n = n
        self.kind = kind
        if kind == "uniform":
            if k < 0:
                raise ArborError("uniform matroid needs k >= 0")
            self.k = k
        elif kind == "partition":
            self.parts = [to_mask(p) for p in parts]
            self.capacities = list(capacities)
            if len(self.parts) != len(self.capacities):
                raise ArborError("partition matroid needs one capacity per part")
            seen = 0
            for p in self.parts:
                if p & seen:
                    raise ArborError("partition parts overlap")
                seen |= p
        elif kind == "graphic":
            self.edges = dict(edges or {})
        else:
            raise ArborError(f"unknown matroid kind {kind!r}")

    @classmethod
    def uniform(cls, n, k):
        return cls(n, "uniform", k=k)

    @classmethod
    def partition(cls, n, parts, capacities):
        return cls(n, "partition", parts=parts, capacities=capacities)

    @classmethod
    def graphic(cls, n, edges):
        return cls(n, "graphic", edges=edges)

    def rank(self, S: VertexSet) -> int:
        m = to_mask(S)
        if self.kind == "uniform":
            return min(bin(m).count("1"), self.k)
        if self.kind == "partition":
            return sum(min(bin(m & p).count("1"), c) for p, c in zip(self.parts, self.capacities))
        parent = {}

        def find(a):
            while parent.setdefault(a, a) != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        r = 0
        for v in from_mask(m):
            if v not in self.edges:
                continue
            a, b = self.edges[v]
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
                r += 1
        return r

    @property
    def full_rank(self) -> int:
        return self.rank((1 << self.n) - 1)


class MatroidRank(RewardOracle):
    """Rank function of a matroid, optionally contracted by a set ``C``."""

    kind = "matroid-rank"

    def __init__(self, matroid: Matroid, contracted: VertexSet = 0):
        super().__init__(matroid.n)
        self.matroid = matroid
        self.contracted = to_mask(contracted)
        self._base = matroid.rank(self.contracted)

    def _eval(self, mask):
        return self.matroid.rank(mask | self.contracted) - self._base


def contract(m: Matroid, C: VertexSet) -> MatroidRank:
    """Oracle ``S -> rank(S | C) - rank(C)``."""
    return MatroidRank(m, C)


class TerminalReward(LinearReward):
    """Unit reward on a terminal set (zero elsewhere)."""

    def __init__(self, n: int, terminals: Iterable[int]):
        w = [0] * n
        for t in terminals:
            w[t] = 1
        super().__init__(w)


def gated_set(tree, deadlines=None, requirements=None, offset: int = 0, root_priority=float("inf")) -> int:
    """Bitmask of vertices of ``tree`` whose reward may be claimed.

    With ``deadlines`` a vertex counts when ``offset + l_T(v) <= deadline``;
    vertices without a deadline always count. With ``requirements`` a vertex
    counts when ``min(root_priority, path priority) >= requirement``.
    """
    m = 0
    for v in tree.vertices:
        ok = True
        if deadlines is not None and deadlines.get(v) is not None:
            ok = offset + tree.path_length(v) <= deadlines[v]
        if ok and requirements is not None and requirements.get(v) is not None:
            ok = min(root_priority, tree.path_priority(v)) >= requirements[v]
        if ok:
            m |= 1 << v
    return m


def gated_value(f: RewardOracle, tree, deadlines=None, requirements=None) -> int:
    """Reward of the vertices that meet their deadline or priority requirement."""
    return f.value(gated_set(tree, deadlines, requirements))
