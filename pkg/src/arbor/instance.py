"""Problem instances: raw graph plus root, budgets, rewards and terminals."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional

from .exceptions import InputError
from .metric import (DirectedGraph, MetricInstance, PriorityClosure, TwoCostClosure, build_metric_closure,
                     build_two_cost_closure)
from .rewards import LinearReward, Matroid, MatroidRank, RewardOracle

KINDS = ("sto", "stolc", "prio", "bab")


@dataclass
class Instance:
    """Everything a solver needs, in raw (non-closed) form.

    ``terminals`` maps terminal ids to their priority requirement (``None``
    when the instance has no priorities). ``deadlines`` is only used by the
    deadline engine.
    """

    kind: str
    graph: DirectedGraph
    root: int = 0
    budget: int = 0
    lbudget: Optional[int] = None
    rewards: Dict[int, int] = field(default_factory=dict)
    terminals: Dict[int, Optional[int]] = field(default_factory=dict)
    deadlines: Dict[int, int] = field(default_factory=dict)
    matroid: Optional[Matroid] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown instance kind {self.kind!r}")
        n = self.graph.n
        if not 0 <= self.root < n:
            raise InputError(f"root {self.root} out of range")
        if self.budget < 0 or (self.lbudget is not None and self.lbudget < 0):
            raise InputError("budgets must be nonnegative")
        for table in (self.rewards, self.terminals, self.deadlines):
            for v in table:
                if not 0 <= v < n:
                    raise InputError(f"vertex {v} out of range")
        if any(w < 0 for w in self.rewards.values()):
            raise InputError("rewards must be nonnegative")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def infeasible_cost(self) -> int:
        return max(self.budget, self.graph.total_cost) + 1

    @cached_property
    def cost(self):
        return build_metric_closure(self.graph, self.infeasible_cost)

    @property
    def metric(self) -> MetricInstance:
        return MetricInstance(self.cost, self.root, self.budget)

    def two_cost(self, max_length: Optional[int] = None) -> TwoCostClosure:
        if max_length is None:
            max_length = self.lbudget if self.lbudget is not None else self.total_length
        return build_two_cost_closure(self.graph, max_length)

    @cached_property
    def priority_closure(self) -> PriorityClosure:
        return PriorityClosure(self.graph, infeasible_cost=self.infeasible_cost)

    @property
    def total_length(self) -> int:
        return sum(e.length or 0 for e in self.graph.edges)

    def reward_oracle(self) -> RewardOracle:
        if self.matroid is not None:
            return MatroidRank(self.matroid)
        w = [0] * self.n
        for v, x in self.rewards.items():
            w[v] = x
        return LinearReward(w)
