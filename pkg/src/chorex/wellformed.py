"""Pre-extraction validation of networks.

Two passes: structural well-formedness (no self-communication, no calls to
undefined procedures, no duplicate definitions) and guardedness (no
reachable procedure unfolds forever through bare calls).  Violations are
data, not exceptions, so a caller can report all of them at once.

Guard expressions are opaque strings and are never evaluated, so there is
nothing to validate about them; that check is intentionally skipped.
"""

from __future__ import annotations

from . import sp


class CheckReport:
    """Outcome of a validation pass; ok iff no violations."""

    __slots__ = ("violations",)

    def __init__(self, violations=()):
        self.violations = list(violations)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self):
        return [
            {"kind": kind, "where": where, "description": description}
            for kind, where, description in self.violations
        ]

    def __repr__(self):
        return f"CheckReport(ok={self.ok}, violations={self.violations!r})"


def _subterms(b: sp.Behaviour):
    stack = [b]
    while stack:
        node = stack.pop()
        yield node
        match node:
            case sp.Send(_, _, cont) | sp.Receive(_, _, cont) | sp.Select(_, _, cont):
                stack.append(cont)
            case sp.Offer(_, branches):
                stack.extend(body for _, body in branches)
            case sp.Cond(_, then, orelse):
                stack.append(then)
                stack.append(orelse)
            case _:
                pass


def check_well_formed(n: sp.Network) -> CheckReport:
    violations = []
    for name, term in n.processes.items():
        bodies = [("main", term.main)]
        bodies.extend((f"def {x}", b) for x, b in term.procedures.items())
        for where, body in bodies:
            loc = f"{name}/{where}"
            for node in _subterms(body):
                match node:
                    case sp.Send(to=peer) | sp.Select(to=peer):
                        if peer == name:
                            violations.append(
                                ("self-communication", loc,
                                 f"process {name} communicates with itself")
                            )
                    case sp.Receive(frm=peer) | sp.Offer(frm=peer):
                        if peer == name:
                            violations.append(
                                ("self-communication", loc,
                                 f"process {name} communicates with itself")
                            )
                    case sp.Call(x):
                        if x not in term.procedures:
                            violations.append(
                                ("unresolved-call", loc,
                                 f"call to undefined procedure {x}")
                            )
                    case _:
                        pass
    # Duplicate definitions cannot survive the map representation, but a
    # report slot exists so parser-level duplicates share the same shape.
    return CheckReport(violations)


def _reachable_procedures(term: sp.ProcessTerm):
    """Procedures reachable from main, over-approximating through all
    constructors (both conditional branches, every offer branch)."""
    seen = set()
    frontier = [term.main]
    while frontier:
        body = frontier.pop()
        for node in _subterms(body):
            if isinstance(node, sp.Call) and node.name not in seen:
                if node.name in term.procedures:
                    seen.add(node.name)
                    frontier.append(term.procedures[node.name])
    return seen


def check_guardedness(n: sp.Network) -> CheckReport:
    violations = []
    for name, term in n.processes.items():
        for x in sorted(_reachable_procedures(term)):
            # Chase bodies that are bare calls; a cycle means unfolding
            # this procedure can never expose an action.
            chain = set()
            cur = x
            while True:
                if cur in chain:
                    violations.append(
                        ("unguarded-recursion", f"{name}/def {x}",
                         f"procedure {x} unfolds to a bare self-call")
                    )
                    break
                chain.add(cur)
                body = term.procedures.get(cur)
                if isinstance(body, sp.Call):
                    cur = body.name
                    if cur not in term.procedures:
                        break  # unresolved; reported by check_well_formed
                else:
                    break
    return CheckReport(violations)
