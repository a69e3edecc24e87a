"""Projection of choreographies onto per-process behaviours.

Each process sees only its own side of every interaction; a conditional
decided by somebody else collapses to the merge of the two branch
projections, which is defined only when the branches differ behind
distinct offered labels.  A choreography is projectable when every such
merge is defined for every process.
"""

from __future__ import annotations

from . import cc, sp


class MergeError(Exception):
    """Two behaviours whose heads cannot be reconciled."""

    def __init__(self, left: sp.Behaviour, right: sp.Behaviour, location=None):
        self.left = left
        self.right = right
        self.location = location
        super().__init__(self._render())

    def _render(self):
        msg = f"cannot merge {describe_head(self.left)} with {describe_head(self.right)}"
        if self.location:
            msg = f"{self.location}: {msg}"
        return msg

    def at(self, location: str) -> "MergeError":
        return MergeError(self.left, self.right, location)


def describe_head(b: sp.Behaviour) -> str:
    match b:
        case sp.Nil():
            return "stop"
        case sp.Call(x):
            return f"call {x}"
        case sp.Send(to, expr, _):
            return f"send {expr} to {to}"
        case sp.Receive(frm, var, _):
            return f"receive {var} from {frm}"
        case sp.Select(to, label, _):
            return f"select {label} at {to}"
        case sp.Offer(frm, branches):
            labels = ", ".join(l for l, _ in branches)
            return f"offer {{{labels}}} from {frm}"
        case sp.Cond(expr, _, _):
            return f"conditional on {expr}"
    raise TypeError(f"not a behaviour: {b!r}")


def merge(a: sp.Behaviour, b: sp.Behaviour) -> sp.Behaviour:
    """Combine behaviours that differ only behind distinct offered labels.

    Offers union their branches (shared labels merge recursively); every
    other constructor requires an identical head and merges its
    continuations pointwise.
    """
    match (a, b):
        case (sp.Nil(), sp.Nil()):
            return a
        case (sp.Call(x), sp.Call(y)) if x == y:
            return a
        case (sp.Send(q1, e1, c1), sp.Send(q2, e2, c2)) if q1 == q2 and e1 == e2:
            return sp.Send(q1, e1, merge(c1, c2))
        case (sp.Receive(p1, x1, c1), sp.Receive(p2, x2, c2)) if (
            p1 == p2 and x1 == x2
        ):
            return sp.Receive(p1, x1, merge(c1, c2))
        case (sp.Select(q1, l1, c1), sp.Select(q2, l2, c2)) if (
            q1 == q2 and l1 == l2
        ):
            return sp.Select(q1, l1, merge(c1, c2))
        case (sp.Offer(p1, br1), sp.Offer(p2, br2)) if p1 == p2:
            left = dict(br1)
            right = dict(br2)
            out = {}
            for label in left.keys() | right.keys():
                if label in left and label in right:
                    out[label] = merge(left[label], right[label])
                else:
                    out[label] = left.get(label) or right[label]
            return sp.Offer(p1, out)
        case (sp.Cond(e1, t1, o1), sp.Cond(e2, t2, o2)) if e1 == e2:
            return sp.Cond(e1, merge(t1, t2), merge(o1, o2))
    raise MergeError(a, b)


def project_body(body: cc.ChoreographyBody, r: str) -> sp.Behaviour:
    """Project one choreography body onto process r."""
    match body:
        case cc.Nil():
            return sp.NIL
        case cc.Deadlock():
            raise ValueError("deadlock terms cannot be projected")
        case cc.Call(x):
            return sp.Call(x)
        case cc.Com(p, e, q, x, cont):
            rest = project_body(cont, r)
            if r == p:
                return sp.Send(q, e, rest)
            if r == q:
                return sp.Receive(p, x, rest)
            return rest
        case cc.Sel(p, q, label, cont):
            rest = project_body(cont, r)
            if r == p:
                return sp.Select(q, label, rest)
            if r == q:
                return sp.Offer(p, {label: rest})
            return rest
        case cc.Cond(p, e, then, orelse):
            pthen = project_body(then, r)
            pelse = project_body(orelse, r)
            if r == p:
                return sp.Cond(e, pthen, pelse)
            try:
                return merge(pthen, pelse)
            except MergeError as err:
                raise err.at(
                    f"process {r} at conditional on {p}.{e}"
                ) from None
    raise TypeError(f"not a choreography body: {body!r}")


def _collapse_call_cycles(procedures: dict, main: sp.Behaviour) -> sp.ProcessTerm:
    """Rewrite procedures whose bodies chase bare calls forever into stop.

    Projection for an uninvolved process turns a looping procedure into a
    bare self-call; such a procedure can never expose an action, so its
    body is equivalent to termination.
    """
    dead = set()
    for name in procedures:
        seen = []
        cur = name
        while isinstance(procedures.get(cur), sp.Call):
            if cur in seen:
                dead.update(seen[seen.index(cur):])
                break
            seen.append(cur)
            cur = procedures[cur].name
    if dead:
        procedures = {
            x: (sp.NIL if x in dead else b) for x, b in procedures.items()
        }
    return sp.ProcessTerm(procedures, main)


def project_process(c: cc.Choreography, r: str) -> sp.ProcessTerm:
    """Project every procedure and the main body onto process r."""
    procedures = {x: project_body(b, r) for x, b in c.procedures.items()}
    return _collapse_call_cycles(procedures, project_body(c.main, r))


def epp(c: cc.Choreography, processes=()) -> sp.Network:
    """Project a choreography onto every process it names.

    `processes` adds names to the universe beyond those occurring in the
    choreography (their projections are all-stop terms unless some
    procedure involves them).
    """
    universe = set(cc.choreography_process_names(c)) | set(processes)
    if not universe:
        raise ValueError("cannot project: no processes in the choreography")
    return sp.Network({r: project_process(c, r) for r in sorted(universe)})
