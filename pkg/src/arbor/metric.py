"""Graphs, metric completion, arborescences and tree utilities."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .exceptions import ArborError


class Edge(NamedTuple):
    u: int
    v: int
    cost: int
    length: Optional[int] = None
    priority: Optional[int] = None


@dataclass
class DirectedGraph:
    """Directed multigraph on vertices ``0..n-1``.

    Self-loops are dropped on construction. Parallel edges are kept; the
    closures pick whichever copy is useful.
    """

    n: int
    edges: List[Edge] = field(default_factory=list)

    def __post_init__(self):
        if self.n < 1:
            raise ArborError("graph needs at least one vertex")
        kept = []
        for e in self.edges:
            e = Edge(*e)
            if not (0 <= e.u < self.n and 0 <= e.v < self.n):
                raise ArborError(f"edge {e.u}->{e.v} out of range for n={self.n}")
            if e.cost < 0 or (e.length is not None and e.length < 0):
                raise ArborError(f"negative cost/length on edge {e.u}->{e.v}")
            if e.priority is not None and e.priority < 1:
                raise ArborError(f"priority must be >= 1 on edge {e.u}->{e.v}")
            if e.u != e.v:
                kept.append(e)
        self.edges = kept

    def add_edge(self, u, v, cost, length=None, priority=None):
        e = Edge(int(u), int(v), int(cost), length, priority)
        if u != v:
            self.edges.append(e)

    @property
    def total_cost(self) -> int:
        return sum(e.cost for e in self.edges)

    @property
    def max_priority(self) -> int:
        return max((e.priority or 1 for e in self.edges), default=1)


def build_metric_closure(g: DirectedGraph, infeasible_cost: Optional[int] = None) -> np.ndarray:
    """All-pairs shortest path costs as an ``n x n`` integer matrix.

    Unreachable pairs get ``infeasible_cost`` (default: total edge cost + 1,
    which exceeds every meaningful budget).
    """
    n = g.n
    if infeasible_cost is None:
        infeasible_cost = g.total_cost + 1
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for e in g.edges:
        if e.cost < dist[e.u, e.v]:
            dist[e.u, e.v] = e.cost
    for k in range(n):
        dist = np.minimum(dist, dist[:, k, None] + dist[None, k, :])
    out = np.where(np.isinf(dist), infeasible_cost, dist)
    return out.astype(np.int64)


@dataclass
class MetricInstance:
    """Complete directed metric with a root and a cost budget."""

    cost: np.ndarray
    root: int = 0
    budget: int = 0

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=np.int64)
        if self.cost.ndim != 2 or self.cost.shape[0] != self.cost.shape[1]:
            raise ArborError("cost matrix must be square")
        if not 0 <= self.root < self.n:
            raise ArborError(f"root {self.root} out of range")
        if self.budget < 0:
            raise ArborError("budget must be nonnegative")

    @property
    def n(self) -> int:
        return self.cost.shape[0]

    @classmethod
    def from_graph(cls, g: DirectedGraph, root: int, budget: int) -> "MetricInstance":
        return cls(build_metric_closure(g, infeasible_cost=max(budget, g.total_cost) + 1), root, budget)

    def is_metric(self, limit: Optional[int] = None) -> bool:
        c = self.cost
        if limit is None:
            limit = int(c.max())
        if np.any(np.diag(c) != 0):
            return False
        finite = c < limit
        via = c[:, :, None] + c[None, :, :]
        ok_pair = finite[:, :, None] & finite[None, :, :]
        return bool(np.all(~ok_pair | (c[:, None, :] <= via)))


# ---------------------------------------------------------------------------
# two-cost and priority closures


class TwoCostClosure:
    """Per-pair Pareto frontiers of (cost, length) over directed paths.

    ``frontier(u, v)`` lists the non-dominated values sorted by ascending
    cost / descending length. Paths longer than ``max_length`` are ignored.
    """

    def __init__(self, n: int, max_length: int, labels):
        self.n = n
        self.max_length = max_length
        # labels[(s, v)][(cost, length)] = (pred vertex, pred key, raw edge)
        self._labels = labels
        self._front = {
            key: tuple(sorted(labs, key=lambda cl: (cl[0], -cl[1]))) for key, labs in labels.items() if labs
        }

    def frontier(self, u: int, v: int) -> Tuple[Tuple[int, int], ...]:
        return self._front.get((u, v), ())

    def cost_matrix(self, infeasible_cost: int) -> np.ndarray:
        out = np.full((self.n, self.n), infeasible_cost, dtype=np.int64)
        for (u, v), front in self._front.items():
            out[u, v] = front[0][0]
        return out

    def realizable(self, u: int, v: int, cost: int, length: int) -> bool:
        """True when some frontier entry is at least as good as ``(cost, length)``."""
        return any(c <= cost and ln <= length for c, ln in self.frontier(u, v))

    def path(self, u: int, v: int, entry: Tuple[int, int]) -> List[Edge]:
        """Raw edges of a path realizing a frontier entry."""
        key = tuple(entry)
        if key not in self._labels.get((u, v), {}):
            raise ArborError(f"{key} is not on the frontier of ({u},{v})")
        out = []
        cur = v
        while True:
            pred, pkey, edge = self._labels[(u, cur)][key]
            if edge is None:
                break
            out.append(edge)
            cur, key = pred, pkey
        return out[::-1]


def build_two_cost_closure(g: DirectedGraph, max_length: int) -> TwoCostClosure:
    """Pareto (cost, length) closure; edges longer than ``max_length`` are removed first.

    Labels are settled in lexicographic (cost, length) order, so a settled
    label is never dominated later and predecessor links stay valid.
    """
    n = g.n
    out_edges: Dict[int, List[Edge]] = {u: [] for u in range(n)}
    for e in g.edges:
        ln = e.length or 0
        if ln <= max_length:
            out_edges[e.u].append(e._replace(length=ln))
    labels = {}
    for s in range(n):
        lab = {v: {} for v in range(n)}
        lab[s][(0, 0)] = (None, None, None)
        queue = [(0, 0, s)]
        while queue:
            c, ln, u = heapq.heappop(queue)
            if (c, ln) not in lab[u]:
                continue
            for e in out_edges[u]:
                nc, nl = c + e.cost, ln + e.length
                if nl > max_length:
                    continue
                here = lab[e.v]
                if any(a <= nc and b <= nl for a, b in here):
                    continue
                for key in [k for k in here if nc <= k[0] and nl <= k[1]]:
                    del here[key]
                here[(nc, nl)] = (u, (c, ln), e)
                heapq.heappush(queue, (nc, nl, e.v))
        for v in range(n):
            labels[(s, v)] = lab[v]
    return TwoCostClosure(n, max_length, labels)


class PriorityClosure:
    """Shortest-path costs restricted to edges of priority at least ``q``.

    ``cost[q]`` is the closure of the subgraph of edges with priority >= q,
    for ``q`` in ``1..levels``.
    """

    def __init__(self, g: DirectedGraph, levels: Optional[int] = None, infeasible_cost: Optional[int] = None):
        self.n = g.n
        self.levels = levels or g.max_priority
        if infeasible_cost is None:
            infeasible_cost = g.total_cost + 1
        self.infeasible_cost = infeasible_cost
        self.cost = {}
        for q in range(1, self.levels + 1):
            sub = DirectedGraph(g.n, [e for e in g.edges if (e.priority or 1) >= q])
            self.cost[q] = build_metric_closure(sub, infeasible_cost)

    def __getitem__(self, q: int) -> np.ndarray:
        return self.cost[q]


# ---------------------------------------------------------------------------
# arborescences


class TreeEdge(NamedTuple):
    parent: int
    cost: int
    length: int = 0
    priority: Optional[int] = None


class Arborescence:
    """Out-tree stored as an in-edge map ``child -> TreeEdge``.

    Instances are treated as immutable; all operations return new trees.
    """

    __slots__ = ("root", "in_edge", "cost", "mask")

    def __init__(self, root: int, in_edge: Optional[Dict[int, TreeEdge]] = None):
        self.root = root
        self.in_edge = dict(in_edge or {})
        self.cost = sum(e.cost for e in self.in_edge.values())
        m = 1 << root
        for v in self.in_edge:
            m |= 1 << v
        self.mask = m

    @classmethod
    def single(cls, root: int) -> "Arborescence":
        return cls(root)

    @classmethod
    def from_parents(cls, root: int, parents: Dict[int, int], cost: np.ndarray) -> "Arborescence":
        return cls(root, {v: TreeEdge(p, int(cost[p, v])) for v, p in parents.items()})

    def __repr__(self):
        edges = ", ".join(f"{e.parent}->{v}" for v, e in sorted(self.in_edge.items()))
        return f"Arborescence(root={self.root}, cost={self.cost}, edges=[{edges}])"

    def __eq__(self, other):
        return isinstance(other, Arborescence) and self.root == other.root and self.in_edge == other.in_edge

    def __hash__(self):
        return hash((self.root, tuple(sorted(self.in_edge.items()))))

    def __len__(self):
        return len(self.in_edge) + 1

    @property
    def vertices(self) -> frozenset:
        return frozenset(self.in_edge) | {self.root}

    def __contains__(self, v):
        return v == self.root or v in self.in_edge

    def edges(self) -> List[Tuple[int, int]]:
        return sorted((e.parent, v) for v, e in self.in_edge.items())

    def children(self) -> Dict[int, List[int]]:
        out = {v: [] for v in self.vertices}
        for v, e in sorted(self.in_edge.items()):
            out[e.parent].append(v)
        return out

    def path(self, v: int) -> List[int]:
        out = [v]
        while v != self.root:
            v = self.in_edge[v].parent
            out.append(v)
        return out[::-1]

    def path_length(self, v: int) -> int:
        total = 0
        while v != self.root:
            e = self.in_edge[v]
            total += e.length
            v = e.parent
        return total

    def path_priority(self, v: int, default: float = float("inf")):
        """Smallest edge priority on the root path of ``v`` (``default`` for the root)."""
        best = default
        while v != self.root:
            e = self.in_edge[v]
            if e.priority is not None and e.priority < best:
                best = e.priority
            v = e.parent
        return best

    def lengths(self) -> Dict[int, int]:
        return {v: self.path_length(v) for v in self.vertices}

    def is_valid(self) -> bool:
        if self.root in self.in_edge:
            return False
        for v in self.in_edge:
            seen = set()
            while v != self.root:
                if v in seen or v not in self.in_edge:
                    return False
                seen.add(v)
                v = self.in_edge[v].parent
        return True


def merge_and_prune(t1: Arborescence, t2: Arborescence) -> Arborescence:
    """Union of two trees, rooted at ``t1.root``.

    ``t2.root`` must lie in ``t1``. Vertices present in both keep ``t1``'s
    in-edge; ``t2``'s children of such a vertex stay attached through it.
    """
    if t2.root not in t1:
        raise ArborError(f"DISCONNECTED_MERGE: root {t2.root} of second tree not in first")
    merged = dict(t1.in_edge)
    for v, e in t2.in_edge.items():
        if v not in merged and v != t1.root:
            merged[v] = e
    return Arborescence(t1.root, merged)


def merge_union(t1: Arborescence, t2: Arborescence, mode: str = "length") -> Arborescence:
    """Best-path tree over the union of both trees' edges.

    ``mode="length"`` gives every vertex its shortest root path in the union
    graph; ``mode="priority"`` maximizes the bottleneck priority. Ties keep
    ``t1``'s edge, so with all-equal keys this coincides with
    :func:`merge_and_prune`.
    """
    if t2.root not in t1:
        raise ArborError(f"DISCONNECTED_MERGE: root {t2.root} of second tree not in first")
    out: Dict[int, List[Tuple[int, int, TreeEdge]]] = {}
    for rank, tree in enumerate((t1, t2)):
        for v, e in tree.in_edge.items():
            out.setdefault(e.parent, []).append((rank, v, e))
    root = t1.root
    if mode == "length":
        best = {root: (0, 0)}
        heap = [(0, 0, root)]
    else:
        best = {root: (-float("inf"), 0)}
        heap = [(-float("inf"), 0, root)]
    chosen: Dict[int, TreeEdge] = {}
    done = set()
    while heap:
        key, rank, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for erank, v, e in sorted(out.get(u, ()), key=lambda t: (t[0], t[1])):
            if v in done or v == root:
                continue
            if mode == "length":
                cand = (key + e.length, erank)
            else:
                prio = e.priority if e.priority is not None else float("inf")
                cand = (max(key, -prio), erank)
            if v not in best or cand < best[v]:
                best[v] = cand
                chosen[v] = e
                heapq.heappush(heap, (cand[0], cand[1], v))
    return Arborescence(root, chosen)


def find_balanced_separator(t: Arborescence):
    """Split ``t`` at one vertex into two connected sides.

    Returns ``(v, side_a, side_b)`` with ``side_a`` holding the root, both
    sides containing ``v`` and the non-``v`` vertices partitioned between
    them. ``v`` minimizes the largest component of ``t - v``; components are
    then binned to minimize the larger side (the root's component is forced
    into ``side_a``).
    """
    n = len(t)
    if n < 2:
        raise ArborError("TREE_TOO_SMALL: separator needs at least two vertices")
    adj = {v: [] for v in t.vertices}
    for v, e in t.in_edge.items():
        adj[v].append(e.parent)
        adj[e.parent].append(v)

    def components(v):
        comps = []
        for start in sorted(adj[v]):
            seen = {start}
            stack = [start]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y != v and y not in seen:
                        seen.add(y)
                        stack.append(y)
            comps.append(seen)
        return comps

    best = None
    for v in sorted(t.vertices):
        comps = components(v)
        worst = max(len(c) for c in comps)
        if best is None or worst < best[0]:
            best = (worst, v, comps)
    _, v, comps = best
    forced = [c for c in comps if t.root in c]
    free = [c for c in comps if t.root not in c]
    sizes = [len(c) for c in free]
    base = sum(len(c) for c in forced)
    total = sum(sizes) + base
    # exact subset-sum over free components: choose side_a's extra load
    reach = {0: ()}
    for idx, s in enumerate(sizes):
        for cur, picks in list(reach.items()):
            if cur + s not in reach:
                reach[cur + s] = picks + (idx,)
    load_a = min(reach, key=lambda a: (max(base + a, total - base - a), a))
    picks = set(reach[load_a])
    side_a = {v}
    side_b = {v}
    for c in forced:
        side_a |= c
    for idx, c in enumerate(free):
        (side_a if idx in picks else side_b).update(c)
    if v == t.root and len(side_b) > len(side_a):
        side_a, side_b = side_b, side_a
    return v, frozenset(side_a), frozenset(side_b)


def subtree(t: Arborescence, keep: Iterable[int], root: Optional[int] = None) -> Arborescence:
    """Restriction of ``t`` to a connected vertex set containing ``root``."""
    keep = set(keep)
    root = t.root if root is None else root
    return Arborescence(root, {v: e for v, e in t.in_edge.items() if v in keep and v != root})


def min_arborescence(cost: np.ndarray, W: Iterable[int], root: int) -> Arborescence:
    """Minimum-cost arborescence rooted at ``root`` spanning exactly ``W``.

    Chu-Liu/Edmonds via networkx on the induced complete digraph. Weights are
    perturbed by parent id so that ties resolve toward smaller parents.
    """
    W = sorted(set(W) | {root})
    if len(W) == 1:
        return Arborescence(root)
    cost = np.asarray(cost)
    scale = len(cost) + 1
    g = nx.DiGraph()
    g.add_nodes_from(W)
    for u in W:
        for v in W:
            if u != v and v != root:
                g.add_edge(u, v, weight=int(cost[u, v]) * scale + u)
    try:
        arb = nx.minimum_spanning_arborescence(g, attr="weight", preserve_attrs=False)
    except nx.NetworkXException as exc:
        raise ArborError(f"UNREACHABLE: no arborescence spans {W}") from exc
    parents = {v: u for u, v in arb.edges()}
    return Arborescence.from_parents(root, parents, cost)


def enumerate_arborescences(vertices: Sequence[int], root: int):
    """Yield every parent map (child -> parent) forming a ``root`` arborescence on ``vertices``."""
    others = [v for v in vertices if v != root]
    choices = [[p for p in vertices if p != v] for v in others]
    for combo in itertools.product(*choices):
        parents = dict(zip(others, combo))
        ok = True
        for v in others:
            seen = set()
            x = v
            while x != root:
                if x in seen:
                    ok = False
                    break
                seen.add(x)
                x = parents[x]
            if not ok:
                break
        if ok:
            yield parents
