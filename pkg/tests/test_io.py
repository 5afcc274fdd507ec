import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arbor.cli import bundled_suite
from arbor.exceptions import InputError
from arbor.generators import FAMILIES, generate
from arbor.io import emit_instance, emit_tree, parse_instance, read_instance, write_instance
from arbor.metric import Arborescence, TreeEdge

SAMPLE = """\
sto v1
# a comment
n 3
root 0
budget 10
edge 0 1 4
edge 1 2 3   # trailing comment
reward 2 5
"""


def test_parse_sample():
    inst = parse_instance(SAMPLE)
    assert inst.kind == "sto" and inst.n == 3 and inst.budget == 10
    assert [(e.u, e.v, e.cost) for e in inst.graph.edges] == [(0, 1, 4), (1, 2, 3)]
    assert inst.rewards == {2: 5}


def test_prio_four_field_edge_is_priority():
    inst = parse_instance("prio v1\nn 2\nroot 0\nbudget 1\nedge 0 1 3 2\nterminal 1 2\n")
    e = inst.graph.edges[0]
    assert e.priority == 2 and e.length is None
    assert inst.terminals == {1: 2}


@pytest.mark.parametrize("text,fragment", [
    ("", "empty"),
    ("sto v2\nn 2\nroot 0\nbudget 1\n", "version"),
    ("graph v1\n", "header"),
    ("sto v1\nn 2\nbudget 1\n", "'root'"),
    ("sto v1\nn 2\nroot 0\nroot 1\nbudget 1\n", "more than one root"),
    ("sto v1\nn 2\nroot 0\nbudget x\n", "integer"),
    ("sto v1\nn 2\nroot 0\nbudget -1\n", "nonnegative"),
    ("sto v1\nn 2\nroot 0\nbudget 1\nedge 0 5 1\n", ">= n"),
    ("sto v1\nn 2\nroot 0\nbudget 1\nedge 0 1 -3\n", "negative"),
    ("sto v1\nn 2\nroot 0\nbudget 1\nwidget 3\n", "unknown line"),
    ("sto v1\nn 2\nroot 0\nbudget 1\nreward 4 1\n", "out of range"),
])
def test_malformed(text, fragment):
    with pytest.raises(InputError, match=fragment):
        parse_instance(text)


@pytest.mark.parametrize("path", sorted(bundled_suite().glob("*.inst")), ids=lambda p: p.name)
def test_bundled_round_trip(path):
    inst = read_instance(path)
    text = emit_instance(inst)
    assert emit_instance(parse_instance(text)) == text
    assert parse_instance(text) == inst


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sorted(FAMILIES)), st.integers(3, 8), st.integers(0, 2 ** 32))
def test_generated_round_trip(family, n, seed):
    inst = generate(family, n, seed)
    assert parse_instance(emit_instance(inst)) == inst


def test_matroid_lines_round_trip():
    for line in ("matroid uniform 2", "matroid partition 1,2:1;3:1", "matroid graphic 1:0-1,2:1-2"):
        text = f"sto v1\nn 4\nroot 0\nbudget 3\nedge 0 1 1\n{line}\n"
        inst = parse_instance(text)
        assert emit_instance(inst).splitlines()[-1] == line


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_generators_deterministic(family, tmp_path):
    a, b = tmp_path / "a.inst", tmp_path / "b.inst"
    write_instance(generate(family, 7, 42), a)
    write_instance(generate(family, 7, 42), b)
    assert a.read_bytes() == b.read_bytes()
    assert emit_instance(generate(family, 7, 43)) != a.read_text()


def test_random_metric_closure_complete():
    inst = generate("random-metric", 8, 5)
    assert inst.n == 8
    assert (inst.cost < inst.infeasible_cost).all()


def test_two_cost_parses_into_closure():
    inst = parse_instance(emit_instance(generate("two-cost", 6, 9)))
    tc = inst.two_cost(inst.lbudget)
    for u in range(inst.n):
        for v in range(inst.n):
            for c, ln in tc.frontier(u, v):
                assert c >= 0 and 0 <= ln <= inst.lbudget


@pytest.mark.parametrize("family,n", [("nope", 5), ("random-metric", 1), ("star-trap", 2)])
def test_generate_rejects(family, n):
    with pytest.raises(InputError):
        generate(family, n, 0)


def test_emit_tree():
    t = Arborescence(0, {2: TreeEdge(1, 1), 1: TreeEdge(0, 1)})
    assert emit_tree(t) == "edge 0 1\nedge 1 2\n"
