"""Random choreography generation, amendment, inefficiency injection,
network fuzzing, and loop unrolling.

The generator partitions an action budget and a conditional budget
uniformly over the main body and the procedure bodies, then builds each
body sequentially.  Generated choreographies are not necessarily
projectable; amend() inserts selections at conditionals until projection
succeeds.  inject_inefficiency() applies behaviour-preserving rewrites
(procedure inlining, conditional/conditional swaps, pushing an
interaction into both branches of a conditional) that blow up the term
without changing the protocol.  fuzz() damages one process of a network
by deleting and swapping actions; unroll() unfolds procedure calls and
rotates the closing point of simple loops, both of which keep the
network's behaviour intact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import cc
from . import sp
from .cc import Call, Choreography, Com, Cond, Sel, choreography_process_names
from .epp import MergeError, epp, merge, project_body
from .sp import Network, ProcessTerm


@dataclass(frozen=True)
class GenParams:
    """Budget for one generated choreography."""

    size: int
    processes: int
    ifs: int = 0
    defs: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.ifs < 0 or self.size < self.ifs:
            raise ValueError("need size >= ifs >= 0")
        if self.processes < 2:
            raise ValueError("need at least two processes")
        if self.defs < 0:
            raise ValueError("defs must be nonnegative")


@dataclass(frozen=True)
class FuzzParams:
    """Damage budget for one fuzzed network."""

    deletions: int = 0
    swaps: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.deletions < 0 or self.swaps < 0:
            raise ValueError("deletions and swaps must be nonnegative")
        if self.deletions == 0 and self.swaps == 0:
            raise ValueError("nothing to do: deletions and swaps are both zero")


class _Fresh:
    """Counters for fresh expressions, variables, and labels."""

    def __init__(self):
        self.e = 0
        self.x = 0
        self.l = 0

    def expr(self):
        self.e += 1
        return f"e{self.e}"

    def var(self):
        self.x += 1
        return f"x{self.x}"

    def label(self):
        self.l += 1
        return f"L{self.l}"


def _def_name(i):
    return f"X{i + 1}"


class _Gen:
    def __init__(self, params: GenParams, rng: random.Random, nil_terminals=False):
        self.p = params
        self.rng = rng
        self.fresh = _Fresh()
        self.procs = [f"p{i + 1}" for i in range(params.processes)]
        self.names = [_def_name(i) for i in range(params.defs)]
        self.nil_terminals = nil_terminals

    def _split(self, n):
        """Send each of n budget units left or right with equal probability."""
        left = sum(self.rng.getrandbits(1) for _ in range(n))
        return left, n - left

    def _pair(self):
        a = self.rng.choice(self.procs)
        b = self.rng.choice([q for q in self.procs if q != a])
        return a, b

    def _terminal(self):
        if self.nil_terminals:
            return cc.NIL
        k = self.rng.randrange(len(self.names) + 1)
        if k == 0:
            return cc.NIL
        return Call(self.names[k - 1])

    def body(self, actions, conds, def_top=False):
        if actions == 0 and conds == 0:
            # A procedure body must not be a bare call.
            return cc.NIL if def_top else self._terminal()
        if self.rng.random() < conds / (actions + conds):
            p = self.rng.choice(self.procs)
            ta, ea = self._split(actions)
            tc, ec = self._split(conds - 1)
            return Cond(p, self.fresh.expr(), self.body(ta, tc), self.body(ea, ec))
        a, b = self._pair()
        cont = self.body(actions - 1, conds)
        if self.rng.getrandbits(1):
            return Com(a, self.fresh.expr(), b, self.fresh.var(), cont)
        return Sel(a, b, self.fresh.label(), cont)

    def build(self):
        buckets = self.p.defs + 1  # main plus one per procedure
        act = [0] * buckets
        cnd = [0] * buckets
        for _ in range(self.p.size):
            act[self.rng.randrange(buckets)] += 1
        for _ in range(self.p.ifs):
            cnd[self.rng.randrange(buckets)] += 1
        main = self.body(act[0], cnd[0])
        procedures = {
            self.names[i]: self.body(act[i + 1], cnd[i + 1], def_top=True)
            for i in range(self.p.defs)
        }
        return Choreography(procedures, main)


def _called_names(body):
    out = set()
    stack = [body]
    while stack:
        b = stack.pop()
        match b:
            case Call(name):
                out.add(name)
            case Com(cont=k) | Sel(cont=k):
                stack.append(k)
            case Cond(then=t, orelse=e):
                stack.append(t)
                stack.append(e)
    return out


def _all_reachable(c: Choreography) -> bool:
    seen = set()
    frontier = _called_names(c.main)
    while frontier:
        name = frontier.pop()
        if name in seen:
            continue
        seen.add(name)
        frontier |= _called_names(c.procedures[name]) - seen
    return seen == set(c.procedures)


def _nil_leaf_paths(body, path=()):
    match body:
        case Com(cont=k) | Sel(cont=k):
            yield from _nil_leaf_paths(k, path + (0,))
        case Cond(then=t, orelse=e):
            yield from _nil_leaf_paths(t, path + (0,))
            yield from _nil_leaf_paths(e, path + (1,))
        case cc.Nil():
            yield path


def _set_leaf(body, path, new):
    if not path:
        return new
    i, rest = path[0], path[1:]
    match body:
        case Com(s, e, r, v, k):
            return Com(s, e, r, v, _set_leaf(k, rest, new))
        case Sel(s, r, l, k):
            return Sel(s, r, l, _set_leaf(k, rest, new))
        case Cond(p, e, t, o):
            if i == 0:
                return Cond(p, e, _set_leaf(t, rest, new), o)
            return Cond(p, e, t, _set_leaf(o, rest, new))
    raise AssertionError("path walked off the body")


def _generate_connected(params: GenParams, attempt=0):
    """Build a choreography whose procedures are reachable by construction.

    Bodies are drawn as usual but with all-Nil terminals; each procedure
    then gets one call site at a uniformly chosen free leaf of a body that
    is already reachable from main.  Leftover leaves take the ordinary
    Nil-or-call draw.  Returns None when the spanning placement strands a
    procedure (caller retries with a fresh draw).
    """
    rng = random.Random(f"gen:{params.seed}:fallback:{attempt}")
    gen = _Gen(params, rng, nil_terminals=True)
    c = gen.build()
    bodies = {"main": c.main, **c.procedures}
    free = {}
    for owner, body in bodies.items():
        paths = list(_nil_leaf_paths(body))
        if owner != "main":
            # A procedure body must not collapse to a bare call.
            paths = [p for p in paths if p != ()]
        free[owner] = paths
    order = list(c.procedures)
    rng.shuffle(order)
    reachable = ["main"]
    for name in order:
        hosts = [o for o in reachable if free[o]]
        if not hosts:
            return None
        host = rng.choice(hosts)
        slot = free[host].pop(rng.randrange(len(free[host])))
        bodies[host] = _set_leaf(bodies[host], slot, Call(name))
        reachable.append(name)
    for owner, paths in free.items():
        for slot in paths:
            k = rng.randrange(len(gen.names) + 1)
            if k:
                bodies[owner] = _set_leaf(bodies[owner], slot, Call(gen.names[k - 1]))
    return Choreography({x: bodies[x] for x in c.procedures}, bodies["main"])


def generate(params: GenParams) -> Choreography:
    """Draw a random choreography; redraw while some procedure is unreachable.

    Dense procedure budgets can make the reachability condition all but
    unsatisfiable for independent uniform draws (every body has only one
    terminal slot, so covering all procedures needs a call chain), so
    after 1000 rejections the terminals are placed constructively instead.
    """
    for attempt in range(1000):
        rng = random.Random(f"gen:{params.seed}:{attempt}")
        c = _Gen(params, rng).build()
        if _all_reachable(c):
            return c
    for attempt in range(1000):
        c = _generate_connected(params, attempt)
        if c is not None and _all_reachable(c):
            return c
    raise RuntimeError(
        f"no reachable draw after 1000 attempts and no connected layout "
        f"found for {params}"
    )


# --- amendment -----------------------------------------------------------


def _amend_body(body, universe):
    match body:
        case Com(s, e, r, v, cont):
            return Com(s, e, r, v, _amend_body(cont, universe))
        case Sel(s, r, l, cont):
            return Sel(s, r, l, _amend_body(cont, universe))
        case Cond(p, e, then, orelse):
            then = _amend_body(then, universe)
            orelse = _amend_body(orelse, universe)
            need = []
            for r in universe:
                if r == p:
                    continue
                try:
                    merge(project_body(then, r), project_body(orelse, r))
                except MergeError:
                    need.append(r)
            for r in reversed(need):
                then = Sel(p, r, "thenL", then)
                orelse = Sel(p, r, "elseL", orelse)
            return Cond(p, e, then, orelse)
        case _:
            return body


def amend(c: Choreography) -> Choreography:
    """Insert selections at conditionals until the choreography projects."""
    universe = sorted(choreography_process_names(c))
    for _ in range(50):
        try:
            epp(c)
            return c
        except MergeError:
            pass
        c = Choreography(
            {x: _amend_body(b, universe) for x, b in c.procedures.items()},
            _amend_body(c.main, universe),
        )
    epp(c)  # surface the residual failure
    return c


# --- inefficiency injection ---------------------------------------------


def _inline_calls(body, name, replacement):
    """Replace every Call(name) in body with replacement (one round)."""
    match body:
        case Call(n) if n == name:
            return replacement
        case Com(s, e, r, v, cont):
            return Com(s, e, r, v, _inline_calls(cont, name, replacement))
        case Sel(s, r, l, cont):
            return Sel(s, r, l, _inline_calls(cont, name, replacement))
        case Cond(p, e, t, o):
            return Cond(p, e, _inline_calls(t, name, replacement), _inline_calls(o, name, replacement))
        case _:
            return body


def _swap_cond_cond(body, rng):
    match body:
        case Com(s, e, r, v, cont):
            return Com(s, e, r, v, _swap_cond_cond(cont, rng))
        case Sel(s, r, l, cont):
            return Sel(s, r, l, _swap_cond_cond(cont, rng))
        case Cond(p, e, then, orelse):
            then = _swap_cond_cond(then, rng)
            orelse = _swap_cond_cond(orelse, rng)
            match (then, orelse):
                case (Cond(q1, f1, a, b), Cond(q2, f2, c, d)) if (
                    q1 == q2 and f1 == f2 and q1 != p and rng.random() < 0.5
                ):
                    return Cond(q1, f1, Cond(p, e, a, c), Cond(p, e, b, d))
            return Cond(p, e, then, orelse)
        case _:
            return body


def _push_eta(body, rng):
    match body:
        case Cond(p, e, then, orelse):
            return Cond(p, e, _push_eta(then, rng), _push_eta(orelse, rng))
        case Com() | Sel():
            cont = _push_eta(body.cont, rng)
            match cont:
                case Cond(p, e, then, orelse) if (
                    p not in {body.sender, body.receiver} and rng.random() < 0.5
                ):
                    return Cond(
                        p,
                        e,
                        _copy_with_cont(body, then),
                        _copy_with_cont(body, orelse),
                    )
            return _copy_with_cont(body, cont)
        case _:
            return body


def _copy_with_cont(prefix, cont):
    if isinstance(prefix, Com):
        return Com(prefix.sender, prefix.expr, prefix.receiver, prefix.var, cont)
    return Sel(prefix.sender, prefix.receiver, prefix.label, cont)


def inject_inefficiency(c: Choreography, seed=0) -> Choreography:
    """Blow up a projectable choreography without changing its behaviour.

    Applies, in order: one round of whole-procedure inlining for a random
    subset of procedures (call sites outside the procedure's own body are
    replaced by its body), conditional/conditional swaps, and pushes of an
    interaction into both branches of a following conditional.  Inlining a
    procedure at all of its call sites keeps projection working: wherever
    two merged branches both said `X`, they now both carry the same body.
    """
    rng = random.Random(f"ineff:{seed}")
    procedures = dict(c.procedures)
    main = c.main
    for name in sorted(procedures):
        if rng.random() < 0.5:
            body = procedures[name]
            main = _inline_calls(main, name, body)
            procedures = {
                x: (_inline_calls(b, name, body) if x != name else b)
                for x, b in procedures.items()
            }
    main = _swap_cond_cond(main, rng)
    procedures = {x: _swap_cond_cond(b, rng) for x, b in procedures.items()}
    for _ in range(2):
        main = _push_eta(main, rng)
        procedures = {x: _push_eta(b, rng) for x, b in procedures.items()}
    return Choreography(procedures, main)


# --- network fuzzing -----------------------------------------------------


def _occurrences(b, path=()):
    """Preorder paths of every action constructor in a behaviour.

    An action here is anything that is not Nil and not a bare call:
    sends, receives, selections, offers, and conditionals all count.
    """
    match b:
        case sp.Send(cont=k) | sp.Receive(cont=k) | sp.Select(cont=k):
            yield path
            yield from _occurrences(k, path + (0,))
        case sp.Offer(branches=branches):
            yield path
            for i, (_, branch) in enumerate(branches):
                yield from _occurrences(branch, path + (i,))
        case sp.Cond(then=t, orelse=e):
            yield path
            yield from _occurrences(t, path + (0,))
            yield from _occurrences(e, path + (1,))


def _at(b, path):
    for i in path:
        match b:
            case sp.Send(cont=k) | sp.Receive(cont=k) | sp.Select(cont=k):
                b = k
            case sp.Offer(branches=branches):
                b = branches[i][1]
            case sp.Cond(then=t, orelse=e):
                b = t if i == 0 else e
    return b


def _replace(b, path, new):
    if not path:
        return new
    i, rest = path[0], path[1:]
    match b:
        case sp.Send(to, e, k):
            return sp.Send(to, e, _replace(k, rest, new))
        case sp.Receive(frm, v, k):
            return sp.Receive(frm, v, _replace(k, rest, new))
        case sp.Select(to, l, k):
            return sp.Select(to, l, _replace(k, rest, new))
        case sp.Offer(frm, branches):
            out = list(branches)
            label, branch = out[i]
            out[i] = (label, _replace(branch, rest, new))
            return sp.Offer(frm, out)
        case sp.Cond(e, t, o):
            if i == 0:
                return sp.Cond(e, _replace(t, rest, new), o)
            return sp.Cond(e, t, _replace(o, rest, new))
    raise AssertionError("path walked off the term")


def _delete_at(b, path):
    """Delete the action at path: a prefix keeps its continuation, an
    offer keeps its first branch, a conditional keeps its then branch."""
    node = _at(b, path)
    match node:
        case sp.Send(cont=k) | sp.Receive(cont=k) | sp.Select(cont=k):
            return _replace(b, path, k)
        case sp.Offer(branches=branches):
            return _replace(b, path, branches[0][1])
        case sp.Cond(then=t):
            return _replace(b, path, t)
    raise AssertionError("not an action")


def _prefix_with_cont(node, cont):
    match node:
        case sp.Send(to, e, _):
            return sp.Send(to, e, cont)
        case sp.Receive(frm, v, _):
            return sp.Receive(frm, v, cont)
        case sp.Select(to, l, _):
            return sp.Select(to, l, cont)
    raise AssertionError("not a prefix")


def _successor_slot(node):
    """Where the structurally next action of node lives: its continuation
    for a prefix, the first branch for an offer, the then branch for a
    conditional.  Returns (child, rebuild) with rebuild(new_child)."""
    match node:
        case sp.Send() | sp.Receive() | sp.Select():
            return node.cont, lambda k: _prefix_with_cont(node, k)
        case sp.Offer(frm, branches):
            def rebuild(k, frm=frm, branches=branches):
                out = list(branches)
                out[0] = (out[0][0], k)
                return sp.Offer(frm, out)
            return branches[0][1], rebuild
        case sp.Cond(e, t, o):
            return t, lambda k: sp.Cond(e, k, o)
    raise AssertionError("not an action")


def _swap_at(b, path):
    """Swap the action at path with its structural successor.

    Swapping with a terminal (the successor slot holds nil or a call)
    deletes the action.  A prefix swapped with a following prefix is the
    usual exchange.  A prefix swapped with an offer or conditional is
    pushed into the successor slot of that construct; an offer or
    conditional swapped with a leading prefix of its first/then branch
    pulls that prefix out in front.  Anything else is left unchanged.
    """
    node = _at(b, path)
    succ, rebuild = _successor_slot(node)
    if not isinstance(succ, (sp.Send, sp.Receive, sp.Select, sp.Offer, sp.Cond)):
        return _delete_at(b, path)
    prefix_node = isinstance(node, (sp.Send, sp.Receive, sp.Select))
    prefix_succ = isinstance(succ, (sp.Send, sp.Receive, sp.Select))
    if prefix_node and prefix_succ:
        swapped = _prefix_with_cont(succ, _prefix_with_cont(node, succ.cont))
        return _replace(b, path, swapped)
    if prefix_node:
        # Push the prefix into the successor slot of the offer/conditional.
        inner, rebuild_succ = _successor_slot(succ)
        return _replace(b, path, rebuild_succ(_prefix_with_cont(node, inner)))
    if prefix_succ:
        # Pull the leading prefix of the first/then branch out in front.
        return _replace(b, path, _prefix_with_cont(succ, rebuild(succ.cont)))
    return b


def _term_paths(term: ProcessTerm):
    """Occurrences across main and all procedure bodies, main first."""
    out = [("main", p) for p in _occurrences(term.main)]
    for name in sorted(term.procedures):
        out.extend((name, p) for p in _occurrences(term.procedures[name]))
    return out


def _term_edit(term: ProcessTerm, where, op):
    name, path = where
    if name == "main":
        return ProcessTerm(term.procedures, op(term.main, path))
    procs = dict(term.procedures)
    procs[name] = op(procs[name], path)
    return ProcessTerm(procs, term.main)


def fuzz(n: Network, params: FuzzParams) -> Network:
    """Damage one uniformly chosen process of the network."""
    rng = random.Random(f"fuzz:{params.seed}")
    victim = rng.choice(sorted(n.processes))
    term = n.processes[victim]
    for _ in range(params.deletions):
        places = _term_paths(term)
        if not places:
            break
        term = _term_edit(term, rng.choice(places), _delete_at)
    for _ in range(params.swaps):
        places = _term_paths(term)
        if not places:
            break
        term = _term_edit(term, rng.choice(places), _swap_at)
    return n.replace({victim: term})


# --- unrolling -----------------------------------------------------------


def _behaviour_replace_one_call(b, name, replacement, which, counter):
    """Replace the `which`-th (preorder) Call(name) occurrence."""
    match b:
        case sp.Call(n) if n == name:
            counter[0] += 1
            if counter[0] - 1 == which:
                return replacement
            return b
        case sp.Send(to, e, k):
            return sp.Send(to, e, _behaviour_replace_one_call(k, name, replacement, which, counter))
        case sp.Receive(frm, v, k):
            return sp.Receive(frm, v, _behaviour_replace_one_call(k, name, replacement, which, counter))
        case sp.Select(to, l, k):
            return sp.Select(to, l, _behaviour_replace_one_call(k, name, replacement, which, counter))
        case sp.Offer(frm, branches):
            out = []
            for label, branch in branches:
                out.append((label, _behaviour_replace_one_call(branch, name, replacement, which, counter)))
            return sp.Offer(frm, out)
        case sp.Cond(e, t, o):
            t = _behaviour_replace_one_call(t, name, replacement, which, counter)
            o = _behaviour_replace_one_call(o, name, replacement, which, counter)
            return sp.Cond(e, t, o)
        case _:
            return b


def _call_sites(term: ProcessTerm):
    sites = []

    def scan(owner, b):
        match b:
            case sp.Call(name):
                sites.append((owner, name))
            case sp.Send(cont=k) | sp.Receive(cont=k) | sp.Select(cont=k):
                scan(owner, k)
            case sp.Offer(branches=branches):
                for _, branch in branches:
                    scan(owner, branch)
            case sp.Cond(then=t, orelse=e):
                scan(owner, t)
                scan(owner, e)

    scan("main", term.main)
    for name in sorted(term.procedures):
        scan(name, term.procedures[name])
    return sites


def _action_chain(body):
    """Split a pure prefix chain ending in a call: returns (prefixes, name)
    or None if the body has any other shape."""
    chain = []
    while True:
        match body:
            case sp.Send() | sp.Receive() | sp.Select():
                chain.append(body)
                body = body.cont
            case sp.Call(name):
                return chain, name
            case _:
                return None


def _rotate_loop(term: ProcessTerm, rng):
    """Shift the closing point of one self-calling action-chain loop."""
    eligible = []
    for name in sorted(term.procedures):
        split = _action_chain(term.procedures[name])
        if split is None:
            continue
        chain, target = split
        if target == name and len(chain) >= 2:
            eligible.append((name, chain))
    if not eligible:
        return term
    name, chain = eligible[rng.randrange(len(eligible))]
    j = rng.randrange(1, len(chain))
    rotated = chain[j:] + chain[:j]
    body = sp.Call(name)
    for prefix in reversed(rotated):
        body = _prefix_with_cont(prefix, body)

    def entry(cont):
        for prefix in reversed(chain[:j]):
            cont = _prefix_with_cont(prefix, cont)
        return cont

    def fix(owner, b):
        # Prepend the skipped prefix at every call site outside the loop body.
        match b:
            case sp.Call(n) if n == name and owner != name:
                return entry(sp.Call(name))
            case sp.Send(to, e, k):
                return sp.Send(to, e, fix(owner, k))
            case sp.Receive(frm, v, k):
                return sp.Receive(frm, v, fix(owner, k))
            case sp.Select(to, l, k):
                return sp.Select(to, l, fix(owner, k))
            case sp.Offer(frm, branches):
                return sp.Offer(frm, [(l, fix(owner, br)) for l, br in branches])
            case sp.Cond(e, t, o):
                return sp.Cond(e, fix(owner, t), fix(owner, o))
            case _:
                return b

    procedures = {}
    for x, b in term.procedures.items():
        if x == name:
            procedures[x] = body
        else:
            procedures[x] = fix(x, b)
    return ProcessTerm(procedures, fix("main", term.main))


def unroll(n: Network, seed=0) -> Network:
    """Unfold a few procedure calls of one process and rotate one loop."""
    rng = random.Random(f"unroll:{seed}")
    candidates = sorted(p for p, t in n.processes.items() if t.procedures)
    if not candidates:
        return n
    victim = rng.choice(candidates)
    term = n.processes[victim]
    for _ in range(rng.randint(1, 3)):
        sites = _call_sites(term)
        if not sites:
            break
        site = rng.randrange(len(sites))
        owner, name = sites[site]
        # Rank of this site among the owner's calls to the same procedure,
        # so the preorder replacement hits exactly the chosen occurrence.
        which = sum(
            1 for o, nm in sites[:site] if o == owner and nm == name
        )
        body = term.procedures[name]
        if owner == "main":
            term = ProcessTerm(
                term.procedures,
                _behaviour_replace_one_call(term.main, name, body, which, [0]),
            )
        else:
            procs = dict(term.procedures)
            procs[owner] = _behaviour_replace_one_call(procs[owner], name, body, which, [0])
            term = ProcessTerm(procs, term.main)
    term = _rotate_loop(term, rng)
    return n.replace({victim: term})
