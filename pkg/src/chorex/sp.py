"""Process-side terms: behaviours, process terms, and networks.

A network maps process names to process terms; a process term couples a set
of named procedure definitions with a main behaviour.  Behaviours are the
usual communication prefixes (send, receive, label selection, label offer),
a binary conditional, procedure calls, and the terminated behaviour.

Expressions are never evaluated here: they are carried around as opaque
token strings and compared by string equality.  All terms are immutable,
hash-consed-ish (each node caches its hash and node count at construction),
and safe to share between threads.
"""

from __future__ import annotations


class Behaviour:
    """Base class for process behaviours."""

    __slots__ = ("_hash", "size")

    _hash: int
    size: int  # number of constructor nodes in this subtree

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._fields() == other._fields()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._hash

    def _fields(self):
        raise NotImplementedError

    def __repr__(self):
        name = type(self).__name__
        return f"{name}{self._fields()!r}"


class Nil(Behaviour):
    """Terminated behaviour."""

    __slots__ = ()

    def __init__(self):
        object.__setattr__(self, "_hash", hash(("Nil",)))
        object.__setattr__(self, "size", 1)

    def _fields(self):
        return ()

    def __repr__(self):
        return "Nil()"


NIL = Nil()


class Call(Behaviour):
    """Invocation of a named procedure."""

    __slots__ = ("name",)
    __match_args__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        object.__setattr__(self, "_hash", hash(("Call", name)))
        object.__setattr__(self, "size", 1)

    def _fields(self):
        return (self.name,)


class Send(Behaviour):
    """Send the value of expression `e` to process `to`, then continue."""

    __slots__ = ("to", "expr", "cont")
    __match_args__ = ("to", "expr", "cont")

    def __init__(self, to: str, expr: str, cont: Behaviour):
        self.to = to
        self.expr = expr
        self.cont = cont
        object.__setattr__(self, "_hash", hash(("Send", to, expr, cont._hash)))
        object.__setattr__(self, "size", 1 + cont.size)

    def _fields(self):
        return (self.to, self.expr, self.cont)


class Receive(Behaviour):
    """Receive a value from process `frm` into variable `var`, then continue."""

    __slots__ = ("frm", "var", "cont")
    __match_args__ = ("frm", "var", "cont")

    def __init__(self, frm: str, var: str, cont: Behaviour):
        self.frm = frm
        self.var = var
        self.cont = cont
        object.__setattr__(self, "_hash", hash(("Receive", frm, var, cont._hash)))
        object.__setattr__(self, "size", 1 + cont.size)

    def _fields(self):
        return (self.frm, self.var, self.cont)


class Select(Behaviour):
    """Select branch label `label` at process `to`, then continue."""

    __slots__ = ("to", "label", "cont")
    __match_args__ = ("to", "label", "cont")

    def __init__(self, to: str, label: str, cont: Behaviour):
        self.to = to
        self.label = label
        self.cont = cont
        object.__setattr__(self, "_hash", hash(("Select", to, label, cont._hash)))
        object.__setattr__(self, "size", 1 + cont.size)

    def _fields(self):
        return (self.to, self.label, self.cont)


class Offer(Behaviour):
    """Offer a choice of labelled branches to process `frm`.

    Branches are stored as a tuple of (label, behaviour) pairs sorted by
    label, so two offers with the same branches in different source order
    compare equal.
    """

    __slots__ = ("frm", "branches")
    __match_args__ = ("frm", "branches")

    def __init__(self, frm: str, branches):
        if isinstance(branches, dict):
            items = sorted(branches.items())
        else:
            items = sorted(branches)
        if not items:
            raise ValueError("offer must have at least one branch")
        labels = [l for l, _ in items]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate branch labels in offer: {labels}")
        self.frm = frm
        self.branches = tuple(items)
        object.__setattr__(
            self,
            "_hash",
            hash(("Offer", frm) + tuple((l, b._hash) for l, b in self.branches)),
        )
        object.__setattr__(self, "size", 1 + sum(b.size for _, b in self.branches))

    def _fields(self):
        return (self.frm, self.branches)

    def branch(self, label: str) -> Behaviour:
        for l, b in self.branches:
            if l == label:
                return b
        raise KeyError(label)

    def has_label(self, label: str) -> bool:
        return any(l == label for l, _ in self.branches)


class Cond(Behaviour):
    """Conditional on an opaque expression."""

    __slots__ = ("expr", "then", "orelse")
    __match_args__ = ("expr", "then", "orelse")

    def __init__(self, expr: str, then: Behaviour, orelse: Behaviour):
        self.expr = expr
        self.then = then
        self.orelse = orelse
        object.__setattr__(
            self, "_hash", hash(("Cond", expr, then._hash, orelse._hash))
        )
        object.__setattr__(self, "size", 1 + then.size + orelse.size)

    def _fields(self):
        return (self.expr, self.then, self.orelse)


class ProcessTerm:
    """A set of procedure definitions together with a main behaviour."""

    __slots__ = ("procedures", "main", "_hash", "size", "_head")

    def __init__(self, procedures, main: Behaviour):
        if isinstance(procedures, dict):
            items = sorted(procedures.items())
        else:
            items = sorted(procedures)
        names = [x for x, _ in items]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate procedure names: {names}")
        self.procedures = dict(items)
        self.main = main
        object.__setattr__(
            self,
            "_hash",
            hash(tuple((x, b._hash) for x, b in items) + (main._hash,)),
        )
        object.__setattr__(
            self, "size", main.size + sum(b.size for _, b in items)
        )
        object.__setattr__(self, "_head", None)

    def head_behaviour(self) -> Behaviour:
        """Main behaviour with leading procedure calls chased away.

        Requires guardedness: the chase must leave the call layer within
        |procedures| hops (asserted).  The result is cached.
        """
        head = self._head
        if head is None:
            head = self.main
            hops = 0
            while isinstance(head, Call):
                hops += 1
                assert hops <= len(self.procedures), (
                    f"unguarded recursion while unfolding {self.main!r}"
                )
                head = self.procedures[head.name]
            object.__setattr__(self, "_head", head)
        return head

    def is_live(self) -> bool:
        """True unless the process has terminated (head is Nil)."""
        return not isinstance(self.head_behaviour(), Nil)

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not ProcessTerm or self._hash != other._hash:
            return False
        return self.main == other.main and self.procedures == other.procedures

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._hash

    def with_main(self, main: Behaviour) -> "ProcessTerm":
        """Same procedure environment, different main behaviour."""
        if main is self.main:
            return self
        return ProcessTerm(self.procedures, main)

    def __repr__(self):
        return f"ProcessTerm({self.procedures!r}, {self.main!r})"


TERMINATED = ProcessTerm({}, NIL)


class Network:
    """A nonempty map from process names to process terms.

    Terminated processes stay in the map (as ⟨∅, Nil⟩-like terms); node
    identity during extraction compares the full map.
    """

    __slots__ = ("processes", "_hash")

    def __init__(self, processes: dict):
        if not processes:
            raise ValueError("network must contain at least one process")
        self.processes = dict(sorted(processes.items()))
        object.__setattr__(
            self,
            "_hash",
            hash(tuple((p, t._hash) for p, t in self.processes.items())),
        )

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not Network or self._hash != other._hash:
            return False
        return self.processes == other.processes

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._hash

    def names(self):
        return self.processes.keys()

    def __getitem__(self, name: str) -> ProcessTerm:
        return self.processes[name]

    def replace(self, updates: dict) -> "Network":
        """New network with some terms swapped out."""
        procs = dict(self.processes)
        procs.update(updates)
        return Network(procs)

    def restrict(self, names) -> "Network":
        """Sub-network over the given process names."""
        return Network({p: t for p, t in self.processes.items() if p in names})

    def __repr__(self):
        return f"Network({self.processes!r})"


def behaviour_eq(a: Behaviour, b: Behaviour) -> bool:
    """Syntactic equality of behaviours (offer branches label-sorted)."""
    return a == b


def mentioned_processes(b: Behaviour) -> frozenset:
    """All process names that occur in communication constructors of `b`."""
    out = set()
    stack = [b]
    while stack:
        node = stack.pop()
        match node:
            case Send(to, _, cont) | Select(to, _, cont):
                out.add(to)
                stack.append(cont)
            case Receive(frm, _, cont):
                out.add(frm)
                stack.append(cont)
            case Offer(frm, branches):
                out.add(frm)
                stack.extend(body for _, body in branches)
            case Cond(_, then, orelse):
                stack.append(then)
                stack.append(orelse)
            case _:
                pass
    return frozenset(out)


def term_mentioned_processes(t: ProcessTerm) -> frozenset:
    """Process names mentioned anywhere in a term (main and procedures)."""
    out = set(mentioned_processes(t.main))
    for body in t.procedures.values():
        out |= mentioned_processes(body)
    return frozenset(out)
