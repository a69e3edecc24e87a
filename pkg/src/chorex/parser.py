"""Concrete syntax: parsing and pretty-printing.

Networks (`.sp` files)::

    p { def X { q!<e>; X } main { X } } | q { main { p?x; stop } }

    B ::= stop | X | q!<e>; B | p?x; B | q+l; B
        | p&{ l: B, l: B } | if e then B else B [continue]

Choreographies (`.cc` files)::

    def X { p.e -> q.x; X } main { X }

    C ::= stop | deadlock | X | p.e -> q.x; C | p -> q[l]; C
        | if p.e then C else C

Programs are choreographies joined by `||`; networks are process
definitions joined by `|`.  `#` starts a line comment.  Expressions are
opaque: runs of identifier-ish characters and/or balanced parenthesized
groups, captured verbatim and never interpreted.

Both branches of a conditional are complete behaviours; there is no
joined continuation (the optional trailing `continue` keyword is accepted
and ignored).  Pretty-printing is deterministic and round-trips:
parse(pretty(v)) is structurally equal to v.
"""

from __future__ import annotations

from . import cc, sp

KEYWORDS = {"stop", "deadlock", "main", "def", "if", "then", "else", "continue"}

_IDENT_START = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz")
_IDENT_CHARS = _IDENT_START | set("0123456789_")
_EXPR_CHARS = _IDENT_CHARS | {"'"}


class SourceSpan:
    """1-based line/column plus character offset into the input."""

    __slots__ = ("line", "column", "offset")

    def __init__(self, line: int, column: int, offset: int):
        self.line = line
        self.column = column
        self.offset = offset

    def __repr__(self):
        return f"{self.line}:{self.column}"

    def __eq__(self, other):
        return (
            isinstance(other, SourceSpan)
            and (self.line, self.column, self.offset)
            == (other.line, other.column, other.offset)
        )


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def span(self, pos=None) -> SourceSpan:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        last_nl = self.text.rfind("\n", 0, pos)
        return SourceSpan(line, pos - last_nl, pos)

    def error(self, message: str, pos=None):
        raise ParseError(message, self.span(pos))

    def skip_ws(self):
        text, n = self.text, len(self.text)
        while self.pos < n:
            ch = text[self.pos]
            if ch in " \t\r\n":
                self.pos += 1
            elif ch == "#":
                nl = text.find("\n", self.pos)
                self.pos = n if nl < 0 else nl + 1
            else:
                return

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self, s: str) -> bool:
        self.skip_ws()
        return self.text.startswith(s, self.pos)

    def try_take(self, s: str) -> bool:
        if self.peek(s):
            self.pos += len(s)
            return True
        return False

    def expect(self, s: str):
        if not self.try_take(s):
            got = self.text[self.pos : self.pos + 12] or "end of input"
            self.error(f"expected {s!r}, found {got!r}")

    def peek_word(self):
        """The identifier starting at the cursor, or None."""
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] not in _IDENT_START:
            return None
        j = self.pos + 1
        while j < len(self.text) and self.text[j] in _IDENT_CHARS:
            j += 1
        return self.text[self.pos : j]

    def try_keyword(self, kw: str) -> bool:
        if self.peek_word() == kw:
            self.pos += len(kw)
            return True
        return False

    def ident(self, what="identifier") -> str:
        word = self.peek_word()
        if word is None:
            got = self.text[self.pos : self.pos + 12] or "end of input"
            self.error(f"expected {what}, found {got!r}")
        if word in KEYWORDS:
            self.error(f"expected {what}, found keyword {word!r}")
        self.pos += len(word)
        return word

    def expression(self, stop: str) -> str:
        """Capture an opaque expression.

        `stop` selects the terminator: ">" (send argument), "then"
        (conditional guard) or "->" (communication arrow).  Atoms and
        balanced parenthesized groups are captured verbatim; surrounding
        whitespace is dropped.
        """
        self.skip_ws()
        start = self.pos
        parts = []
        text, n = self.text, len(self.text)
        while True:
            self.skip_ws()
            if stop == "then" and self.peek_word() == "then":
                break
            if self.pos >= n:
                self.error(f"unterminated expression (expected {stop!r})", start)
            ch = text[self.pos]
            if stop == ">" and ch == ">":
                break
            if stop == "->" and ch == "-":
                break
            if ch in _EXPR_CHARS:
                j = self.pos
                while j < n and text[j] in _EXPR_CHARS:
                    j += 1
                parts.append(text[self.pos : j])
                self.pos = j
            elif ch == "(":
                depth, j = 0, self.pos
                while j < n:
                    if text[j] == "(":
                        depth += 1
                    elif text[j] == ")":
                        depth -= 1
                        if depth == 0:
                            break
                    j += 1
                if depth != 0:
                    self.error("unbalanced parentheses in expression", self.pos)
                parts.append(text[self.pos : j + 1])
                self.pos = j + 1
            else:
                self.error(f"unexpected character {ch!r} in expression")
        expr = "".join(parts)
        if not expr:
            self.error("empty expression", start)
        return expr


# ---------------------------------------------------------------- networks


def _parse_behaviour(sc: _Scanner) -> sp.Behaviour:
    if sc.try_keyword("stop"):
        return sp.NIL
    if sc.try_keyword("if"):
        expr = sc.expression("then")
        if not sc.try_keyword("then"):
            sc.error("expected 'then'")
        then = _parse_behaviour(sc)
        if not sc.try_keyword("else"):
            sc.error("expected 'else'")
        orelse = _parse_behaviour(sc)
        sc.try_keyword("continue")  # optional, carries no meaning
        return sp.Cond(expr, then, orelse)

    name = sc.ident("process or procedure name")
    if sc.try_take("!"):
        sc.expect("<")
        expr = sc.expression(">")
        sc.expect(">")
        sc.expect(";")
        return sp.Send(name, expr, _parse_behaviour(sc))
    if sc.try_take("?"):
        var = sc.ident("variable name")
        sc.expect(";")
        return sp.Receive(name, var, _parse_behaviour(sc))
    if sc.try_take("+"):
        label = sc.ident("label")
        sc.expect(";")
        return sp.Select(name, label, _parse_behaviour(sc))
    if sc.try_take("&"):
        sc.expect("{")
        branches = []
        while True:
            at = sc.pos
            label = sc.ident("label")
            if any(l == label for l, _ in branches):
                sc.error(f"duplicate branch label {label!r}", at)
            sc.expect(":")
            branches.append((label, _parse_behaviour(sc)))
            if not sc.try_take(","):
                break
        sc.expect("}")
        return sp.Offer(name, branches)
    return sp.Call(name)


def _check_behaviour(sc: _Scanner, owner: str, term: sp.ProcessTerm, at):
    """Reject self-communication and unresolved calls inside one process."""
    bodies = [term.main, *term.procedures.values()]
    while bodies:
        b = bodies.pop()
        match b:
            case sp.Send(to, _, knt) | sp.Select(to, _, knt):
                if to == owner:
                    sc.error(f"process {owner!r} communicates with itself", at)
                bodies.append(knt)
            case sp.Receive(frm, _, knt):
                if frm == owner:
                    sc.error(f"process {owner!r} communicates with itself", at)
                bodies.append(knt)
            case sp.Offer(frm, branches):
                if frm == owner:
                    sc.error(f"process {owner!r} communicates with itself", at)
                bodies.extend(body for _, body in branches)
            case sp.Cond(_, then, orelse):
                bodies.append(then)
                bodies.append(orelse)
            case sp.Call(x):
                if x not in term.procedures:
                    sc.error(f"call to undefined procedure {x!r} in {owner!r}", at)
            case _:
                pass


def _parse_process_def(sc: _Scanner):
    sc.skip_ws()
    at = sc.pos
    name = sc.ident("process name")
    sc.expect("{")
    procedures = {}
    while sc.try_keyword("def"):
        x_at = sc.pos
        x = sc.ident("procedure name")
        if x in procedures:
            sc.error(f"duplicate procedure {x!r} in process {name!r}", x_at)
        sc.expect("{")
        procedures[x] = _parse_behaviour(sc)
        sc.expect("}")
    if not sc.try_keyword("main"):
        sc.error("expected 'main'")
    sc.expect("{")
    main = _parse_behaviour(sc)
    sc.expect("}")
    sc.expect("}")
    term = sp.ProcessTerm(procedures, main)
    _check_behaviour(sc, name, term, at)
    return name, term, at


def parse_network(text: str) -> sp.Network:
    sc = _Scanner(text)
    processes = {}
    while True:
        name, term, at = _parse_process_def(sc)
        if name in processes:
            sc.error(f"duplicate process {name!r}", at)
        processes[name] = term
        if sc.at_end():
            break
        if sc.peek("||"):
            sc.error("'||' joins programs; use '|' between processes")
        sc.expect("|")
    return sp.Network(processes)


# ------------------------------------------------------------ choreographies


def _parse_body(sc: _Scanner) -> cc.ChoreographyBody:
    if sc.try_keyword("stop"):
        return cc.NIL
    if sc.try_keyword("deadlock"):
        return cc.DEADLOCK
    if sc.try_keyword("if"):
        p = sc.ident("process name")
        sc.expect(".")
        expr = sc.expression("then")
        if not sc.try_keyword("then"):
            sc.error("expected 'then'")
        then = _parse_body(sc)
        if not sc.try_keyword("else"):
            sc.error("expected 'else'")
        orelse = _parse_body(sc)
        sc.try_keyword("continue")
        return cc.Cond(p, expr, then, orelse)

    sc.skip_ws()
    at = sc.pos
    name = sc.ident("process or procedure name")
    if sc.try_take("."):
        expr = sc.expression("->")
        sc.expect("->")
        q = sc.ident("process name")
        sc.expect(".")
        var = sc.ident("variable name")
        sc.expect(";")
        if name == q:
            sc.error(f"process {name!r} communicates with itself", at)
        return cc.Com(name, expr, q, var, _parse_body(sc))
    if sc.try_take("->"):
        q = sc.ident("process name")
        sc.expect("[")
        label = sc.ident("label")
        sc.expect("]")
        sc.expect(";")
        if name == q:
            sc.error(f"process {name!r} selects at itself", at)
        return cc.Sel(name, q, label, _parse_body(sc))
    return cc.Call(name)


def _collect_calls(body: cc.ChoreographyBody, out: set):
    stack = [body]
    while stack:
        node = stack.pop()
        match node:
            case cc.Call(x):
                out.add(x)
            case cc.Com(_, _, _, _, knt) | cc.Sel(_, _, _, knt):
                stack.append(knt)
            case cc.Cond(_, _, then, orelse):
                stack.append(then)
                stack.append(orelse)
            case _:
                pass
    return out


def _parse_one_choreography(sc: _Scanner) -> cc.Choreography:
    procedures = {}
    start = sc.pos
    while sc.try_keyword("def"):
        x_at = sc.pos
        x = sc.ident("procedure name")
        if x in procedures:
            sc.error(f"duplicate procedure {x!r}", x_at)
        sc.expect("{")
        body = _parse_body(sc)
        sc.expect("}")
        if isinstance(body, cc.Call):
            sc.error(f"procedure {x!r} is an unguarded call to {body.name!r}", x_at)
        procedures[x] = body
    if not sc.try_keyword("main"):
        sc.error("expected 'def' or 'main'")
    sc.expect("{")
    main = _parse_body(sc)
    sc.expect("}")
    calls = set()
    _collect_calls(main, calls)
    for body in procedures.values():
        _collect_calls(body, calls)
    for x in sorted(calls - procedures.keys()):
        sc.error(f"call to undefined procedure {x!r}", start)
    return cc.Choreography(procedures, main)


def parse_choreography(text: str) -> cc.Choreography:
    sc = _Scanner(text)
    out = _parse_one_choreography(sc)
    if not sc.at_end():
        sc.error("trailing input after choreography (use parse_program for '||')")
    return out


def parse_program(text: str) -> cc.Program:
    sc = _Scanner(text)
    components = [_parse_one_choreography(sc)]
    while not sc.at_end():
        sc.expect("||")
        components.append(_parse_one_choreography(sc))
    return cc.Program(components)


# ------------------------------------------------------------------ pretty


def pretty_behaviour(b: sp.Behaviour) -> str:
    match b:
        case sp.Nil():
            return "stop"
        case sp.Call(x):
            return x
        case sp.Send(to, expr, knt):
            return f"{to}!<{expr}>; {pretty_behaviour(knt)}"
        case sp.Receive(frm, var, knt):
            return f"{frm}?{var}; {pretty_behaviour(knt)}"
        case sp.Select(to, label, knt):
            return f"{to}+{label}; {pretty_behaviour(knt)}"
        case sp.Offer(frm, branches):
            inner = ", ".join(f"{l}: {pretty_behaviour(body)}" for l, body in branches)
            return f"{frm}&{{ {inner} }}"
        case sp.Cond(expr, then, orelse):
            return f"if {expr} then {pretty_behaviour(then)} else {pretty_behaviour(orelse)}"
    raise TypeError(f"not a behaviour: {b!r}")


def _pretty_process(name: str, term: sp.ProcessTerm) -> str:
    parts = [name, "{"]
    for x in sorted(term.procedures):
        parts.append(f"def {x} {{ {pretty_behaviour(term.procedures[x])} }}")
    parts.append(f"main {{ {pretty_behaviour(term.main)} }}")
    parts.append("}")
    return " ".join(parts)


def pretty_body(body: cc.ChoreographyBody) -> str:
    match body:
        case cc.Nil():
            return "stop"
        case cc.Deadlock():
            return "deadlock"
        case cc.Call(x):
            return x
        case cc.Com(p, expr, q, var, knt):
            return f"{p}.{expr} -> {q}.{var}; {pretty_body(knt)}"
        case cc.Sel(p, q, label, knt):
            return f"{p} -> {q}[{label}]; {pretty_body(knt)}"
        case cc.Cond(p, expr, then, orelse):
            return f"if {p}.{expr} then {pretty_body(then)} else {pretty_body(orelse)}"
    raise TypeError(f"not a choreography body: {body!r}")


def _pretty_choreography(c: cc.Choreography) -> str:
    parts = []
    for x in sorted(c.procedures):
        parts.append(f"def {x} {{ {pretty_body(c.procedures[x])} }}")
    parts.append(f"main {{ {pretty_body(c.main)} }}")
    return " ".join(parts)


def pretty(value) -> str:
    if isinstance(value, sp.Network):
        return " | ".join(
            _pretty_process(p, t) for p, t in value.processes.items()
        )
    if isinstance(value, cc.Choreography):
        return _pretty_choreography(value)
    if isinstance(value, cc.Program):
        return " || ".join(_pretty_choreography(c) for c in value.components)
    raise TypeError(f"cannot pretty-print {type(value).__name__}")
