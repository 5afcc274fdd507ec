"""Line-oriented instance files and tree output.

Example::

    sto v1
    n 3
    root 0
    budget 10
    edge 0 1 4
    edge 1 2 3
    reward 2 5

Edge lines read ``edge u v cost [length] [priority]``; in ``prio`` files a
four-field edge line is ``edge u v cost priority``. Extra line kinds:
``deadline v d`` and ``matroid graphic v:a-b,...``.
"""

from __future__ import annotations

from typing import List

from .exceptions import InputError
from .instance import KINDS, Instance
from .metric import DirectedGraph, Edge
from .rewards import Matroid, from_mask


def _int(tok: str, what: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InputError(f"line {lineno}: {what} must be an integer, got {tok!r}") from None


def _parse_partition(spec: str, n: int, lineno: int) -> Matroid:
    parts, caps = [], []
    for chunk in spec.split(";"):
        if ":" not in chunk:
            raise InputError(f"line {lineno}: partition part {chunk!r} needs 'ids:capacity'")
        ids, cap = chunk.split(":")
        parts.append([_int(x, "vertex", lineno) for x in ids.split(",") if x])
        caps.append(_int(cap, "capacity", lineno))
    return Matroid.partition(n, parts, caps)


def _parse_graphic(spec: str, n: int, lineno: int) -> Matroid:
    edges = {}
    for chunk in spec.split(","):
        try:
            v, ab = chunk.split(":")
            a, b = ab.split("-")
        except ValueError:
            raise InputError(f"line {lineno}: graphic element {chunk!r} needs 'v:a-b'") from None
        edges[_int(v, "vertex", lineno)] = (_int(a, "endpoint", lineno), _int(b, "endpoint", lineno))
    return Matroid.graphic(n, edges)


def parse_instance(text: str) -> Instance:
    """Parse an instance file body; raises :class:`InputError` on malformed input."""
    kind = None
    n = root = budget = lbudget = None
    edges: List[Edge] = []
    rewards, terminals, deadlines = {}, {}, {}
    matroid_line = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if kind is None:
            if len(tok) != 2 or tok[0] not in KINDS:
                raise InputError(f"line {lineno}: expected header like 'sto v1', got {line!r}")
            if tok[1] != "v1":
                raise InputError(f"line {lineno}: unsupported format version {tok[1]!r}")
            kind = tok[0]
            continue
        key = tok[0]
        if key in ("n", "root", "budget", "lbudget"):
            if len(tok) != 2:
                raise InputError(f"line {lineno}: '{key}' takes one integer")
            val = _int(tok[1], key, lineno)
            if key == "n":
                if n is not None:
                    raise InputError(f"line {lineno}: duplicate 'n'")
                n = val
            elif key == "root":
                if root is not None:
                    raise InputError(f"line {lineno}: more than one root")
                root = val
            elif key == "budget":
                budget = val
            else:
                lbudget = val
        elif key == "edge":
            if not 4 <= len(tok) <= 6:
                raise InputError(f"line {lineno}: edge needs 'u v cost [length] [priority]'")
            nums = [_int(x, "edge field", lineno) for x in tok[1:]]
            u, v, c = nums[:3]
            length = prio = None
            if len(nums) == 4:
                if kind == "prio":
                    prio = nums[3]
                else:
                    length = nums[3]
            elif len(nums) == 5:
                length, prio = nums[3], nums[4]
            if c < 0 or (length is not None and length < 0) or (prio is not None and prio < 1):
                raise InputError(f"line {lineno}: edge has a negative cost/length or priority < 1")
            edges.append(Edge(u, v, c, length, prio))
        elif key == "reward":
            if len(tok) != 3:
                raise InputError(f"line {lineno}: reward needs 'v value'")
            rewards[_int(tok[1], "vertex", lineno)] = _int(tok[2], "reward", lineno)
        elif key == "terminal":
            if len(tok) not in (2, 3):
                raise InputError(f"line {lineno}: terminal needs 'v [priority]'")
            terminals[_int(tok[1], "vertex", lineno)] = _int(tok[2], "priority", lineno) if len(tok) == 3 else None
        elif key == "deadline":
            if len(tok) != 3:
                raise InputError(f"line {lineno}: deadline needs 'v d'")
            deadlines[_int(tok[1], "vertex", lineno)] = _int(tok[2], "deadline", lineno)
        elif key == "matroid":
            if len(tok) != 3 or tok[1] not in ("uniform", "partition", "graphic"):
                raise InputError(f"line {lineno}: matroid needs 'uniform k', 'partition spec' or 'graphic spec'")
            matroid_line = (tok[1], tok[2], lineno)
        else:
            raise InputError(f"line {lineno}: unknown line kind {key!r}")
    if kind is None:
        raise InputError("empty instance file")
    if n is None or root is None or budget is None:
        raise InputError("instance needs 'n', 'root' and 'budget' lines")
    if n < 1:
        raise InputError("n must be >= 1")
    for e in edges:
        if not (0 <= e.u < n and 0 <= e.v < n):
            raise InputError(f"edge {e.u}->{e.v} refers to a vertex >= n={n}")
    matroid = None
    if matroid_line is not None:
        mk, spec, lineno = matroid_line
        if mk == "uniform":
            matroid = Matroid.uniform(n, _int(spec, "k", lineno))
        elif mk == "partition":
            matroid = _parse_partition(spec, n, lineno)
        else:
            matroid = _parse_graphic(spec, n, lineno)
    graph = DirectedGraph(n, edges)
    return Instance(kind, graph, root, budget, lbudget, rewards, terminals, deadlines, matroid)


def read_instance(path) -> Instance:
    with open(path) as fh:
        return parse_instance(fh.read())


def _matroid_line(m: Matroid) -> str:
    if m.kind == "uniform":
        return f"matroid uniform {m.k}"
    if m.kind == "partition":
        spec = ";".join(",".join(map(str, from_mask(p))) + f":{c}" for p, c in zip(m.parts, m.capacities))
        return f"matroid partition {spec}"
    spec = ",".join(f"{v}:{a}-{b}" for v, (a, b) in sorted(m.edges.items()))
    return f"matroid graphic {spec}"


def emit_instance(inst: Instance) -> str:
    """Canonical text form; ``parse_instance(emit_instance(x))`` reproduces ``x``."""
    lines = [f"{inst.kind} v1", f"n {inst.n}", f"root {inst.root}", f"budget {inst.budget}"]
    if inst.lbudget is not None:
        lines.append(f"lbudget {inst.lbudget}")
    for e in inst.graph.edges:
        fields = [e.u, e.v, e.cost]
        if e.length is not None:
            fields.append(e.length)
            if e.priority is not None:
                fields.append(e.priority)
        elif e.priority is not None:
            if inst.kind == "prio":
                fields.append(e.priority)
            else:
                fields.extend([0, e.priority])
        lines.append("edge " + " ".join(map(str, fields)))
    for v in sorted(inst.rewards):
        lines.append(f"reward {v} {inst.rewards[v]}")
    for v in sorted(inst.deadlines):
        lines.append(f"deadline {v} {inst.deadlines[v]}")
    for v in sorted(inst.terminals):
        p = inst.terminals[v]
        lines.append(f"terminal {v}" + ("" if p is None else f" {p}"))
    if inst.matroid is not None:
        lines.append(_matroid_line(inst.matroid))
    return "\n".join(lines) + "\n"


def write_instance(inst: Instance, path) -> None:
    with open(path, "w") as fh:
        fh.write(emit_instance(inst))


def emit_tree(tree) -> str:
    """``edge u v`` lines, one per tree edge, sorted."""
    return "".join(f"edge {u} {v}\n" for u, v in tree.edges())
