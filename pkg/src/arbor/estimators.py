"""Estimator-style wrapper around :func:`arbor.runner.run`.

``get_params``/``set_params`` come from scikit-learn's ``BaseEstimator``,
so solver settings can be cloned and swept like any other estimator.
"""

from __future__ import annotations

from pathlib import Path

from sklearn.base import BaseEstimator

from .instance import Instance
from .io import parse_instance, read_instance
from .runner import run


def _as_instance(X) -> Instance:
    if isinstance(X, Instance):
        return X
    if isinstance(X, Path):
        return read_instance(X)
    if isinstance(X, str):
        return parse_instance(X) if "\n" in X else read_instance(X)
    raise TypeError(f"expected an Instance, a path or instance text, got {type(X).__name__}")


class TreeSolver(BaseEstimator):
    """Solve one instance per :meth:`fit` call.

    ``X`` is an :class:`~arbor.instance.Instance`, a file path or the
    instance text; ``y`` is ignored. After fitting, ``tree_`` holds the
    arborescence and ``report_`` the full :class:`~arbor.runner.RunReport`.
    ``score`` returns the value for orienteering and the negated objective
    for covering problems, so larger is better in both cases.
    """

    def __init__(self, problem=None, engine=None, depth=None, epsilon=1.0, block=None, workers=1, oracle=False):
        self.problem = problem
        self.engine = engine
        self.depth = depth
        self.epsilon = epsilon
        self.block = block
        self.workers = workers
        self.oracle = oracle

    def fit(self, X, y=None):
        inst = _as_instance(X)
        report, tree = run(inst, problem=self.problem, engine=self.engine, depth=self.depth, epsilon=self.epsilon,
                           block=self.block, workers=self.workers, oracle=self.oracle)
        self.report_ = report
        self.tree_ = tree
        self.cost_ = report.cost
        self.objective_ = report.objective
        self.value_ = report.value
        return self

    def score(self, X, y=None):
        self.fit(X)
        if self.report_.problem == "sto":
            return self.report_.value
        return -self.report_.objective
