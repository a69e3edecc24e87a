"""The extraction engine.

Extraction searches for a *valid symbolic execution graph* of a network:
a graph over annotated networks where every node commits to one
interaction (or to the two branches of one conditional), every leaf is
either fully terminated or recorded as deadlocked, and every cycle passes
through a node whose live processes are all unmarked.  That last
condition is what rules out starvation: a loop is only closed if every
process that still wants to run got a turn since the previous closure.

The search is a depth-first construction with three-valued outcomes:

* ``ok`` — the subgraph below the node was completed;
* ``badloop`` — a closing edge was rejected by the validity test, try the
  next candidate action;
* ``fail`` — a state was reached from which no graph can be completed
  (all candidate actions exhausted); this aborts the whole search, since
  abstract execution is confluent.

Nodes carry a *choice path* — the string of conditional branches (0 then,
1 else) under which they were created.  Communications inherit their
parent's path; conditional children extend it.  A closing edge may only
target a node whose path is a prefix of the closing node's path, which
keeps separately-created conditional branches from being confused.

When the search succeeds, nodes with more than one incoming edge (and a
root with any) become recursive procedure definitions, their incoming
edges become calls, and the resulting acyclic graph is read off into a
choreography.  Networks whose communication graph is disconnected are
split and extracted per component (concurrently unless disabled), then
recomposed as a parallel program.
"""

from __future__ import annotations

import graphlib
import random
import sys
import threading
from dataclasses import dataclass
from enum import Enum

from . import cc, sp
from .parser import pretty
from .semantics import (
    AnnotatedNetwork,
    ComAction,
    ElseAction,
    SelAction,
    ThenAction,
    annotate,
    enabled_steps,
    pretty_action,
)
from .strategies import Strategy, group_units, order_steps


class Outcome(Enum):
    OK = "ok"
    FAIL = "fail"
    BADLOOP = "badloop"


class SegNode:
    __slots__ = ("an", "path", "uid", "deadlock")

    def __init__(self, an: AnnotatedNetwork, path: str, uid: int):
        self.an = an
        self.path = path
        self.uid = uid
        self.deadlock = False

    @property
    def white(self) -> bool:
        return self.an.white

    def __repr__(self):
        return f"SegNode#{self.uid}(path={self.path!r})"


class Seg:
    """The graph under construction, with an undo journal.

    Every node/edge addition is journalled; `rollback` undoes additions
    down to a remembered mark, which is how failed conditional branches
    are deleted without bookkeeping errors.  `created`/`deleted` count
    events (a node created, deleted, and recreated counts twice in both).
    """

    def __init__(self, root_an: AnnotatedNetwork):
        self.nodes = {}  # (an, path) -> SegNode
        self.by_state = {}  # an -> [SegNode], in creation order
        self.edges = {}  # SegNode -> [(label, SegNode)]
        self.journal = []
        self.created = 0
        self.deleted = 0
        self.badloops = 0
        self.created_keys = set()
        self._next_uid = 0
        self.root = self.add_node(root_an, "")

    def add_node(self, an: AnnotatedNetwork, path: str) -> SegNode:
        key = (an, path)
        assert key not in self.nodes, "node identity created twice"
        node = SegNode(an, path, self._next_uid)
        self._next_uid += 1
        self.nodes[key] = node
        self.by_state.setdefault(an, []).append(node)
        self.edges[node] = []
        self.journal.append(("node", node))
        self.created += 1
        self.created_keys.add(key)
        return node

    def add_edge(self, src: SegNode, label, dst: SegNode):
        self.edges[src].append((label, dst))
        self.journal.append(("edge", src))

    def mark(self) -> int:
        return len(self.journal)

    def rollback(self, to: int):
        while len(self.journal) > to:
            kind, payload = self.journal.pop()
            if kind == "edge":
                self.edges[payload].pop()
            else:
                node = payload
                del self.nodes[(node.an, node.path)]
                siblings = self.by_state[node.an]
                assert siblings[-1] is node
                siblings.pop()
                if not siblings:
                    del self.by_state[node.an]
                del self.edges[node]
                self.deleted += 1

    def find_loop_candidate(self, an: AnnotatedNetwork, path: str):
        """The unique existing node with this state whose choice path is a
        prefix of `path`, if any."""
        candidates = [
            n for n in self.by_state.get(an, ()) if path.startswith(n.path)
        ]
        assert len(candidates) <= 1, "duplicate loop candidates"
        return candidates[0] if candidates else None


@dataclass(frozen=True, slots=True)
class PathStackEntry:
    node: SegNode
    white: bool
    white_below: int  # white nodes strictly below this entry


class PathStack:
    def __init__(self):
        self.entries = []
        self._index = {}

    def push(self, node: SegNode) -> PathStackEntry:
        if self.entries:
            top = self.entries[-1]
            below = top.white_below + (1 if top.white else 0)
        else:
            below = 0
        entry = PathStackEntry(node, node.white, below)
        self.entries.append(entry)
        self._index[node] = entry
        return entry

    def pop(self):
        entry = self.entries.pop()
        del self._index[entry.node]

    @property
    def top(self) -> PathStackEntry:
        return self.entries[-1]

    def entry_of(self, node: SegNode):
        return self._index.get(node)


def loop_is_valid(
    target_entry: PathStackEntry,
    top_entry: PathStackEntry,
    target_node_white: bool,
) -> bool:
    """True iff the cycle being closed contains a white node.

    The counters make this O(1): whites strictly below the top, plus the
    top itself, minus whites strictly below the target, counts the white
    nodes on the stack segment from the target up to and including the
    top.  The target's own whiteness is part of the difference.
    """
    assert target_entry.white == target_node_white
    whites = (
        top_entry.white_below
        + (1 if top_entry.white else 0)
        - target_entry.white_below
    )
    return whites >= 1


class _Builder:
    def __init__(self, seg: Seg, strategy: Strategy, rng):
        self.seg = seg
        self.stack = PathStack()
        self.strategy = strategy
        self.rng = rng
        self.saw_deadlock = False

    def build_graph(self, node: SegNode) -> Outcome:
        steps = enabled_steps(node.an)
        if not steps:
            if not node.an.terminal:
                node.deadlock = True
                self.saw_deadlock = True
            return Outcome.OK
        ordered = order_steps(steps, self.strategy, node.an, self.rng)
        for unit in group_units(ordered):
            if len(unit) == 1:
                out = self.build_communication(node, unit[0])
            else:
                out = self.build_conditional(node, unit[0], unit[1])
            if out is Outcome.OK:
                return Outcome.OK
            if out is Outcome.FAIL:
                return Outcome.FAIL
        return Outcome.FAIL  # nothing but rejected loops

    def build_communication(self, node: SegNode, step) -> Outcome:
        return self._build_edge(node, step, node.path)

    def build_conditional(self, node: SegNode, then_step, else_step) -> Outcome:
        mark = self.seg.mark()
        out = self._build_edge(node, then_step, node.path + "0")
        if out is not Outcome.OK:
            return out
        out = self._build_edge(node, else_step, node.path + "1")
        if out is not Outcome.OK:
            self.seg.rollback(mark)  # delete everything the then branch built
            return out
        return Outcome.OK

    def _build_edge(self, node: SegNode, step, child_path: str) -> Outcome:
        target = self.seg.find_loop_candidate(step.successor, child_path)
        if target is not None:
            entry = self.stack.entry_of(target)
            assert entry is not None, "loop candidate must lie on the DFS path"
            if loop_is_valid(entry, self.stack.top, target.white):
                self.seg.add_edge(node, step.label, target)
                return Outcome.OK
            self.seg.badloops += 1
            return Outcome.BADLOOP
        mark = self.seg.mark()
        fresh = self.seg.add_node(step.successor, child_path)
        self.seg.add_edge(node, step.label, fresh)
        self.stack.push(fresh)
        out = self.build_graph(fresh)
        self.stack.pop()
        if out is not Outcome.OK:
            self.seg.rollback(mark)
        return out


# ------------------------------------------------------- graph verification


def _iter_nodes(seg: Seg):
    return sorted(seg.nodes.values(), key=lambda n: n.uid)


def verify_seg(seg: Seg):
    """Independent whole-graph check of the accepted result.

    Out-degrees must be 0 (leaves), 1 (an interaction) or 2 (a then/else
    pair over the same guard); all nodes reachable from the root; and the
    subgraph induced by non-white nodes must be acyclic, which is
    equivalent to every cycle containing a white node.
    """
    reachable = set()
    frontier = [seg.root]
    while frontier:
        n = frontier.pop()
        if n in reachable:
            continue
        reachable.add(n)
        frontier.extend(dst for _, dst in seg.edges[n])
    assert len(reachable) == len(seg.nodes), "unreachable nodes survive"

    for node in _iter_nodes(seg):
        es = seg.edges[node]
        if len(es) == 0:
            assert node.deadlock or node.an.terminal, "bare internal node"
        elif len(es) == 1:
            assert isinstance(es[0][0], (ComAction, SelAction)), (
                "single outgoing edge must be an interaction"
            )
        elif len(es) == 2:
            (l1, _), (l2, _) = es
            assert isinstance(l1, ThenAction) and isinstance(l2, ElseAction), (
                "double outgoing edges must be a then/else pair"
            )
            assert (l1.process, l1.expr) == (l2.process, l2.expr)
        else:
            raise AssertionError("out-degree above 2")

    ts = graphlib.TopologicalSorter()
    for node in _iter_nodes(seg):
        if node.white:
            continue
        ts.add(node)
        for _, dst in seg.edges[node]:
            if not dst.white:
                ts.add(dst, node)
    try:
        ts.prepare()
    except graphlib.CycleError as err:  # pragma: no cover - engine bug guard
        raise AssertionError(f"accepted graph has an all-marked cycle: {err}")


# --------------------------------------------------- unrolling and read-off


def unroll_graph(seg: Seg):
    """Split loop nodes into procedure definitions plus call leaves.

    Loop nodes are those with more than one incoming edge, or the root if
    it has any.  They are named X1, X2, … in depth-first discovery order.
    Returns (names, dag_edges) where dag_edges maps each node to its edge
    list with loop-node targets replaced by ("call", name); the remaining
    graph is verified to be acyclic.
    """
    indegree = {}
    for node in _iter_nodes(seg):
        for _, dst in seg.edges[node]:
            indegree[dst] = indegree.get(dst, 0) + 1

    loop_nodes = {
        node
        for node in seg.nodes.values()
        if indegree.get(node, 0) > 1
        or (node is seg.root and indegree.get(node, 0) >= 1)
    }

    names = {}
    visited = set()
    frontier = [seg.root]
    while frontier:
        node = frontier.pop()
        if node in visited:
            continue
        visited.add(node)
        if node in loop_nodes:
            names[node] = f"X{len(names) + 1}"
        frontier.extend(dst for _, dst in reversed(seg.edges[node]))
    assert len(visited) == len(seg.nodes)

    dag_edges = {}
    for node in visited:
        dag_edges[node] = [
            (label, ("call", names[dst]) if dst in loop_nodes else ("node", dst))
            for label, dst in seg.edges[node]
        ]

    ts = graphlib.TopologicalSorter()
    for node in _iter_nodes(seg):
        ts.add(node)
        for _, tgt in dag_edges[node]:
            if tgt[0] == "node":
                ts.add(tgt[1], node)
    try:
        ts.prepare()
    except graphlib.CycleError as err:  # pragma: no cover - engine bug guard
        raise AssertionError(f"loop splitting left a cycle: {err}")

    return names, dag_edges


def build_choreography(seg: Seg, names: dict, dag_edges: dict) -> cc.Choreography:
    def read_target(tgt):
        kind, payload = tgt
        if kind == "call":
            return cc.Call(payload)
        return read(payload)

    def read(node: SegNode) -> cc.ChoreographyBody:
        es = dag_edges[node]
        if not es:
            return cc.DEADLOCK if node.deadlock else cc.NIL
        if len(es) == 1:
            label, tgt = es[0]
            cont = read_target(tgt)
            match label:
                case ComAction(p, e, q, x):
                    return cc.Com(p, e, q, x, cont)
                case SelAction(p, q, l):
                    return cc.Sel(p, q, l, cont)
            raise AssertionError(f"unexpected edge label {label!r}")
        (l1, t1), (_, t2) = es
        return cc.Cond(l1.process, l1.expr, read_target(t1), read_target(t2))

    procedures = {name: read(node) for node, name in names.items()}
    main = (
        cc.Call(names[seg.root]) if seg.root in names else read(seg.root)
    )
    return cc.Choreography(procedures, main)


# ------------------------------------------------- components and top level


def communication_graph(n: sp.Network) -> dict:
    """Undirected adjacency: p—q iff either's term ever names the other."""
    adjacency = {p: set() for p in n.processes}
    for p, term in n.processes.items():
        for q in sp.term_mentioned_processes(term):
            if q != p and q in adjacency:
                adjacency[p].add(q)
                adjacency[q].add(p)
    return adjacency


def connected_components(adjacency: dict) -> list:
    """Components as sorted name lists, ordered by smallest member."""
    seen = set()
    out = []
    for start in sorted(adjacency):
        if start in seen:
            continue
        comp = []
        frontier = [start]
        seen.add(start)
        while frontier:
            p = frontier.pop()
            comp.append(p)
            for q in sorted(adjacency[p]):
                if q not in seen:
                    seen.add(q)
                    frontier.append(q)
        out.append(sorted(comp))
    return sorted(out, key=lambda comp: comp[0])


def node_bound(n: sp.Network) -> int:
    """Upper bound on distinct node identities for one component."""
    conds = 0
    product = 1
    for term in n.processes.values():
        product *= term.size
        for body in [term.main, *term.procedures.values()]:
            stack = [body]
            while stack:
                node = stack.pop()
                match node:
                    case sp.Cond(_, t, o):
                        conds += 1
                        stack.append(t)
                        stack.append(o)
                    case sp.Send(_, _, c) | sp.Receive(_, _, c) | sp.Select(_, _, c):
                        stack.append(c)
                    case sp.Offer(_, branches):
                        stack.extend(b for _, b in branches)
                    case _:
                        pass
    return (2 ** len(n.processes)) * product * (2 ** conds)


@dataclass
class ComponentResult:
    processes: tuple
    services: frozenset
    outcome: Outcome
    seg: Seg
    choreography: object  # cc.Choreography | None
    saw_deadlock: bool

    @property
    def deadlock_remainders(self) -> list:
        """For each deadlock leaf: the stuck processes and their terms."""
        out = []
        for node in _iter_nodes(self.seg):
            if node.deadlock:
                out.append(
                    {
                        p: t
                        for p, t in node.an.net.processes.items()
                        if t.is_live() and p not in self.services
                    }
                )
        return out


@dataclass
class FailureReport:
    processes: tuple
    saw_deadlock: bool
    badloops: int

    def __str__(self):
        why = (
            "encountered a deadlocked state"
            if self.saw_deadlock
            else f"exhausted all loop closures ({self.badloops} rejected)"
        )
        names = ", ".join(self.processes)
        return f"no valid execution graph for component {{{names}}}: {why}"


class ExtractionResult:
    def __init__(self, components: list):
        self.components = components

    @property
    def ok(self) -> bool:
        return all(c.outcome is Outcome.OK for c in self.components)

    @property
    def program(self):
        assert self.ok
        return cc.Program([c.choreography for c in self.components])

    @property
    def failure(self):
        for c in self.components:
            if c.outcome is not Outcome.OK:
                return FailureReport(
                    c.processes, c.saw_deadlock, c.seg.badloops
                )
        return None

    @property
    def nodes_created(self) -> int:
        return sum(c.seg.created for c in self.components)

    @property
    def nodes_deleted(self) -> int:
        return sum(c.seg.deleted for c in self.components)

    @property
    def badloops(self) -> int:
        return sum(c.seg.badloops for c in self.components)

    @property
    def deadlock_remainders(self) -> list:
        out = []
        for c in self.components:
            out.extend(c.deadlock_remainders)
        return out

    def to_dot(self) -> str:
        def esc(s: str) -> str:
            return s.replace("\\", "\\\\").replace('"', '\\"')

        lines = ["digraph seg {", "  node [shape=box];"]
        ids = {}
        for comp in self.components:
            for node in _iter_nodes(comp.seg):
                ids[node] = f"n{len(ids)}"
                marking = " ".join(
                    f"{p}={'1' if p in node.an.marked else '0'}"
                    for p in sorted(node.an.net.processes)
                )
                label = esc(
                    f"{pretty(node.an.net)}\\nmarking: {marking}"
                    f"\\npath: [{node.path}]"
                )
                lines.append(f'  {ids[node]} [label="{label}"];')
        for comp in self.components:
            for node in _iter_nodes(comp.seg):
                for action, dst in comp.seg.edges[node]:
                    lines.append(
                        f'  {ids[node]} -> {ids[dst]} '
                        f'[label="{esc(pretty_action(action))}"];'
                    )
        lines.append("}")
        return "\n".join(lines) + "\n"


def _extract_component(
    net: sp.Network, services: frozenset, strategy: Strategy, rng
) -> ComponentResult:
    seg = Seg(annotate(net, services))
    builder = _Builder(seg, strategy, rng)
    builder.stack.push(seg.root)
    outcome = builder.build_graph(seg.root)
    builder.stack.pop()
    assert len(seg.created_keys) <= node_bound(net), "node bound exceeded"
    choreography = None
    if outcome is Outcome.OK:
        verify_seg(seg)
        names, dag_edges = unroll_graph(seg)
        choreography = build_choreography(seg, names, dag_edges)
    return ComponentResult(
        processes=tuple(sorted(net.processes)),
        services=services,
        outcome=outcome,
        seg=seg,
        choreography=choreography,
        saw_deadlock=builder.saw_deadlock,
    )


_STACK_SIZES = (512 * 1024 * 1024, 256 * 1024 * 1024, 64 * 1024 * 1024, 0)


def _spawn_worker(job):
    """Run a job in a thread with a large stack (deep DFS recursion)."""
    box = {}

    def runner():
        try:
            box["value"] = job()
        except BaseException as err:  # noqa: BLE001 - reraised in caller
            box["error"] = err

    thread = None
    for size in _STACK_SIZES:
        try:
            if size:
                threading.stack_size(size)
            thread = threading.Thread(target=runner, daemon=True)
            thread.start()
            break
        except (ValueError, RuntimeError, OSError):
            continue
    if thread is None:  # pragma: no cover - last resort
        runner()
        thread = None

    def wait():
        if thread is not None:
            thread.join()
        if "error" in box:
            raise box["error"]
        return box["value"]

    return wait


def extract(
    n: sp.Network,
    services=frozenset(),
    strategy: Strategy = Strategy(),
    parallel: bool = True,
) -> ExtractionResult:
    """Extract a choreography program from a network.

    `services` are processes allowed to run forever without being served
    in every loop (they start marked and stay marked).  With `parallel`
    the network is split into communication-graph components extracted
    concurrently; without it the whole network is explored as one
    component.
    """
    services = frozenset(services)
    missing = services - n.processes.keys()
    if missing:
        raise ValueError(f"services not in network: {sorted(missing)}")
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 1_000_000))

    if parallel:
        groups = connected_components(communication_graph(n))
    else:
        groups = [sorted(n.processes)]

    jobs = []
    for i, names in enumerate(groups):
        sub = n.restrict(names)
        comp_services = services & set(names)
        rng = random.Random(f"{strategy.seed}:{strategy.name}:{i}")
        jobs.append(
            lambda sub=sub, cs=comp_services, rng=rng: _extract_component(
                sub, cs, strategy, rng
            )
        )

    if parallel and len(jobs) > 1:
        waiters = [_spawn_worker(job) for job in jobs]
        results = [w() for w in waiters]
    else:
        results = [_spawn_worker(job)() for job in jobs]
    return ExtractionResult(results)
