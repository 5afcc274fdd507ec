import pytest
from sklearn.base import clone

from arbor.cli import bundled_suite
from arbor.estimators import TreeSolver
from arbor.io import read_instance
from arbor.runner import UsageError

TRIVIAL = "sto v1\nn 2\nroot 0\nbudget 5\nedge 0 1 3\nreward 1 4\n"


def test_params_round_trip():
    est = TreeSolver(engine="rg-qp", depth=3)
    assert est.get_params()["engine"] == "rg-qp"
    twin = clone(est).set_params(engine="rg-fast", block=2)
    assert twin.get_params()["block"] == 2 and est.get_params()["block"] is None


@pytest.mark.parametrize("as_input", ["text", "path", "str_path", "instance"])
def test_fit_accepts_inputs(as_input, tmp_path):
    p = tmp_path / "t.inst"
    p.write_text(TRIVIAL)
    X = {"text": TRIVIAL, "path": p, "str_path": str(p), "instance": read_instance(p)}[as_input]
    est = TreeSolver(oracle=True).fit(X)
    assert est.value_ == 4 and est.cost_ == 3 and est.report_.ratio == 1.0
    assert est.tree_.edges() == [(0, 1)]


def test_score_signs():
    path = bundled_suite() / "random-metric-n5-s1.inst"
    assert TreeSolver().score(path) == TreeSolver().fit(path).value_
    assert TreeSolver(problem="dst").score(path) == -TreeSolver(problem="dst").fit(path).objective_


def test_bad_combo_raises():
    with pytest.raises(UsageError):
        TreeSolver(problem="bab", engine="rg").fit(TRIVIAL)


def test_rejects_unknown_input():
    with pytest.raises(TypeError):
        TreeSolver().fit(42)
