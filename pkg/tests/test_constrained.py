import pytest

from arbor.engine.constrained import ConstrainedSubproblem, rg_dc, rg_dl, rg_pr
from arbor.engine.core import INFEASIBLE, default_depth
from arbor.engine.greedy import Subproblem, rg
from arbor.exceptions import ArborError
from arbor.generators import priority, two_cost
from arbor.metric import DirectedGraph, Edge, MetricInstance, PriorityClosure, build_two_cost_closure
from arbor.oracle import brute_force_constrained
from arbor.rewards import LinearReward, gated_value
from arbor.validate import validate_tree


def _leaf(cost, length, horizon=10):
    return build_two_cost_closure(DirectedGraph(2, [Edge(0, 1, cost, length)]), horizon)


def test_dc_length_cap_violated():
    sub = ConstrainedSubproblem(0, Y={1}, D={1: 2}, B=5, L=10, i=1)
    assert rg_dc(_leaf(2, 3), LinearReward([0, 1]), sub).tree is INFEASIBLE


def test_dc_boundary_feasible():
    sub = ConstrainedSubproblem(0, Y={1}, D={1: 3}, B=5, L=3, i=1)
    sol = rg_dc(_leaf(2, 3), LinearReward([0, 1]), sub)
    assert sol.tree.edges() == [(0, 1)] and sol.value == 1


def test_dc_total_length_budget():
    sub = ConstrainedSubproblem(0, B=5, L=2, i=1)
    sol = rg_dc(_leaf(2, 3), LinearReward([0, 1]), sub)
    assert sol.value == 0 and sol.tree.vertices == {0}


def test_dl_late_leaf_prefers_empty_tree():
    sol = rg_dl(_leaf(1, 2), LinearReward([0, 5]), {1: 1}, ConstrainedSubproblem(0, B=5, i=1))
    assert sol.value == 0 and sol.tree.vertices == {0}


def test_dl_on_time_boundary():
    sol = rg_dl(_leaf(1, 2), LinearReward([0, 5]), {1: 2}, ConstrainedSubproblem(0, B=5, i=1))
    assert sol.value == 5 and sol.tree.edges() == [(0, 1)]


def test_pr_floor_unreachable():
    pc = PriorityClosure(DirectedGraph(2, [Edge(0, 1, 1, None, 1)]), levels=2)
    sub = ConstrainedSubproblem(0, Y={1}, D={1: 2}, B=5, i=1)
    assert rg_pr(pc, LinearReward([0, 1]), {}, sub).tree is INFEASIBLE


def test_pr_forced_route():
    g = DirectedGraph(2, [Edge(0, 1, 5, None, 2), Edge(0, 1, 1, None, 1)])
    pc = PriorityClosure(g, levels=2)
    sol = rg_pr(pc, LinearReward([0, 1]), {}, ConstrainedSubproblem(0, Y={1}, D={1: 2}, B=5, i=1))
    assert sol.tree.cost == 5 and sol.tree.in_edge[1].priority == 2


def test_bound_table_keys_checked():
    with pytest.raises(ArborError):
        ConstrainedSubproblem(0, Y={1}, D={}, B=1)


def _two_cost_case(seed):
    inst = two_cost(4 + seed % 3, seed=seed)
    return inst, inst.reward_oracle(), default_depth(inst.n - 1)


@pytest.mark.parametrize("seed", range(8))
def test_dc_against_oracle(seed):
    inst, f, d = _two_cost_case(seed)
    tc = inst.two_cost(inst.lbudget)
    sol = rg_dc(tc, f, ConstrainedSubproblem(inst.root, B=inst.budget, L=inst.lbudget, i=d))
    opt, _ = brute_force_constrained("length", tc, f, inst.budget, inst.root, L=inst.lbudget)
    assert sol.value * d >= opt and sol.value <= opt
    assert validate_tree(inst.graph, sol.tree, inst.root, budget=inst.budget, length_budget=inst.lbudget,
                         check_lengths=True)


@pytest.mark.parametrize("seed", range(8))
def test_dl_value_is_gated_reward(seed):
    inst, f, d = _two_cost_case(seed)
    deadlines = {v: 1 + (v * 3 + seed) % 5 for v in range(inst.n) if v != inst.root}
    tc = inst.two_cost(max(deadlines.values()))
    sol = rg_dl(tc, f, deadlines, ConstrainedSubproblem(inst.root, B=inst.budget, i=d))
    assert sol.value == gated_value(f, sol.tree, deadlines=deadlines)
    opt, _ = brute_force_constrained("deadline", tc, f, inst.budget, inst.root, deadlines=deadlines)
    assert sol.value * d >= opt


@pytest.mark.parametrize("seed", range(8))
def test_pr_against_oracle(seed):
    inst = priority(4 + seed % 3, seed=seed, levels=3)
    f, d = inst.reward_oracle(), default_depth(inst.n - 1)
    req = {t: q for t, q in inst.terminals.items() if q is not None and t != inst.root}
    pc = PriorityClosure(inst.graph, levels=3)
    sol = rg_pr(pc, f, req, ConstrainedSubproblem(inst.root, B=inst.budget, i=d))
    assert sol.value == gated_value(f, sol.tree, requirements=req)
    opt, _ = brute_force_constrained("priority", pc, f, inst.budget, inst.root, requirements=req)
    assert sol.value * d >= opt


@pytest.mark.parametrize("seed", range(6))
def test_degenerate_parameters_match_rg(seed):
    base = two_cost(5, seed=seed)
    g = DirectedGraph(base.n, [Edge(e.u, e.v, e.cost, 0, 1) for e in base.graph.edges])
    f, d = base.reward_oracle(), default_depth(base.n - 1)
    tc = build_two_cost_closure(g, 0)
    plain = rg(MetricInstance.from_graph(g, base.root, base.budget).cost, f, Subproblem(base.root, B=base.budget, i=d))
    dc = rg_dc(tc, f, ConstrainedSubproblem(base.root, B=base.budget, L=0, i=d))
    pr = rg_pr(PriorityClosure(g, levels=1), f, {}, ConstrainedSubproblem(base.root, B=base.budget, i=d))
    assert plain.value == dc.value == pr.value
