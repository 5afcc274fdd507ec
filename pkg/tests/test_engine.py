import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arbor.engine.core import INFEASIBLE, default_depth, size_cap
from arbor.engine.greedy import (NO_BUDGET, SolverConfig, Subproblem, min_budget_for_value, rg, rg_fast, rg_qp,
                                 solve_sto)
from arbor.exceptions import ArborError
from arbor.generators import random_metric
from arbor.metric import MetricInstance
from arbor.oracle import brute_force_sto
from arbor.rewards import LinearReward
from arbor.validate import validate_tree


def _pair(c_rv=5, c_vr=9):
    return np.array([[0, c_rv], [c_vr, 0]])


def test_unaffordable_leaf_gives_empty_tree():
    sol = rg(_pair(), LinearReward([0, 1]), Subproblem(0, B=4, i=1))
    assert sol.feasible and sol.value == 0 and sol.tree.vertices == {0}


def test_unaffordable_responsibility_is_infeasible():
    sol = rg(_pair(), LinearReward([0, 1]), Subproblem(0, Y={1}, B=4, i=1))
    assert sol.tree is INFEASIBLE and not sol


def test_argmax_leaf():
    c = np.array([[0, 2, 3], [50, 0, 50], [50, 50, 0]])
    sol = rg(c, LinearReward([0, 3, 7]), Subproblem(0, B=3, i=1))
    assert sol.value == 7 and sol.tree.edges() == [(0, 2)]


@pytest.mark.parametrize("solver", [rg, rg_qp])
def test_zero_oracle(solver):
    c = random_metric(5, seed=3).cost
    sol = solver(c, LinearReward([0] * 5), Subproblem(0, B=30, i=2))
    assert sol.value == 0


def test_subproblem_rejects_root_in_y():
    with pytest.raises(ArborError):
        Subproblem(0, Y={0})


def test_min_budget_single_leaf():
    c = _pair(3)
    f = LinearReward([0, 7])
    assert min_budget_for_value(c, f, 0, (), (), 1, 7, 10) == 3
    assert min_budget_for_value(c, f, 0, (), (), 1, 8, 10) is NO_BUDGET


@pytest.mark.parametrize("n,d", [(2, 1), (3, 2), (4, 3), (5, 4), (8, 5), (10, 6)])
def test_default_depth(n, d):
    # smallest d >= 1 with 1.5**d >= n - 1
    assert default_depth(n - 1) == d
    assert 1.5 ** d >= n - 1 and (d == 1 or 1.5 ** (d - 1) < n - 1)


@pytest.mark.parametrize("i", range(1, 9))
def test_size_cap(i):
    assert size_cap(i) == math.floor(1.5 ** i)


def _case(seed):
    inst = random_metric(5 + seed % 3, seed=seed)
    f = inst.reward_oracle()
    d = default_depth(inst.n - 1)
    return inst, f, d


@pytest.mark.parametrize("seed", range(12))
def test_engines_against_oracle(seed):
    inst, f, d = _case(seed)
    opt, _ = brute_force_sto(inst.cost, f, inst.budget, inst.root)
    sub = Subproblem(inst.root, B=inst.budget, i=d)
    linear = rg(inst.cost, f, sub)
    qp = rg_qp(inst.cost, f, sub, SolverConfig(check_search=True))
    exact = rg_fast(inst.cost, f, sub, block=d)
    for sol in (linear, qp, exact):
        assert sol.value * d >= opt
        assert sol.value <= opt
        assert validate_tree(inst.graph, sol.tree, inst.root, budget=inst.budget)
    assert exact.value == opt


@pytest.mark.parametrize("seed", range(8))
def test_block_one_matches_rg(seed):
    inst, f, d = _case(seed)
    sub = Subproblem(inst.root, B=inst.budget, i=d)
    assert rg_fast(inst.cost, f, sub, block=1).value == rg(inst.cost, f, sub).value


@pytest.mark.parametrize("seed", range(8))
def test_qp_binary_search_matches_scan(seed):
    inst, f, d = _case(seed)
    for u in range(0, f.upper_bound + 2, 3):
        fast = min_budget_for_value(inst.cost, f, inst.root, (), (), d, u, inst.budget)
        slow = min_budget_for_value(inst.cost, f, inst.root, (), (), d, u, inst.budget, linear=True)
        assert fast == slow


def test_qp_makes_fewer_calls():
    inst, f, d = _case(4)
    sub = Subproblem(inst.root, B=inst.budget, i=d)
    assert rg_qp(inst.cost, f, sub).stats["calls"] < rg(inst.cost, f, sub).stats["calls"]


def test_star_everything_affordable():
    n = 6
    c = np.full((n, n), 4)
    np.fill_diagonal(c, 0)
    m = MetricInstance(c, 0, 4 * (n - 1))
    sol = solve_sto(m, LinearReward([0] + [1] * (n - 1)))
    d = default_depth(n - 1)
    assert sol.value * d >= n - 1
    assert brute_force_sto(c, LinearReward([0] + [1] * (n - 1)), 4 * (n - 1), 0)[0] == n - 1


@pytest.mark.parametrize("engine", ["rg", "rg-qp", "rg-fast"])
def test_deterministic(engine):
    inst, f, _ = _case(7)
    cfg = SolverConfig(engine=engine)
    a = solve_sto(inst.metric, f, cfg)
    b = solve_sto(inst.metric, inst.reward_oracle(), cfg)
    assert a.value == b.value and a.tree == b.tree
    assert a.stats["calls"] == b.stats["calls"]


def test_no_frame_violations():
    inst, f, _ = _case(2)
    sol = solve_sto(inst.metric, f, SolverConfig(engine="rg", debug=True))
    assert sol.stats["frame_checks"] > 0 and sol.stats["frame_violations"] == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 5), st.integers(0, 10 ** 6), st.integers(0, 40))
def test_value_monotone_in_budget(n, seed, extra):
    inst = random_metric(n, seed=seed)
    f = inst.reward_oracle()
    d = default_depth(n - 1)
    lo = rg_qp(inst.cost, f, Subproblem(inst.root, B=inst.budget, i=d))
    hi = rg_qp(inst.cost, f, Subproblem(inst.root, B=inst.budget + extra, i=d))
    assert hi.value >= lo.value
    assert lo.tree.cost <= inst.budget
