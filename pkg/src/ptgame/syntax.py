"""Text syntax for constraints, zone unions and game models."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .model import GAME, PTG, Location, ModelError, Transition, build_ptg
from .zones import Constraint, LinearTerm, Space, Zone, ZoneUnion, format_union, format_zone

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>&&|\|\||->|<=|>=|==|[<>=+\-*{}();:,])
""", re.VERBOSE)

RELATIONS = ("<", "<=", "==", "=", ">=", ">")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list:
    tokens, line, start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ModelError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, m.start() - start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.clocks: list = []
        self.params: list = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ModelError(message, tok.line, tok.column)

    def at(self, *texts: str) -> bool:
        return self.tok.kind != "eof" and self.tok.text in texts

    def take(self, text: str | None = None, kind: str | None = None) -> Token:
        tok = self.tok
        if text is not None and tok.text != text:
            self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        if kind is not None and tok.kind != kind:
            self.error(f"expected {kind}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def ident(self) -> str:
        return self.take(kind="id").text

    # constraints
    @property
    def space(self) -> Space:
        return Space(tuple(self.clocks), tuple(self.params))

    def number(self) -> Fraction:
        return Fraction(self.take(kind="num").text)

    def term(self) -> LinearTerm:
        tok = self.tok
        if tok.kind == "num":
            k = self.number()
            if self.at("*"):
                self.take("*")
                return LinearTerm.var(self.variable(), k)
            if self.tok.kind == "id" and self.tok.text not in ("true", "false"):
                return LinearTerm.var(self.variable(), k)
            return LinearTerm.constant(k)
        if tok.kind == "id":
            name = self.variable()
            if self.at("*"):
                self.take("*")
                return LinearTerm.var(name, self.number())
            return LinearTerm.var(name)
        self.error(f"expected a linear term, found {tok.text or 'end of input'!r}")

    def variable(self) -> str:
        tok = self.take(kind="id")
        if tok.text not in self.clocks and tok.text not in self.params:
            self.error(f"unknown identifier {tok.text!r}", tok)
        return tok.text

    def expr(self) -> LinearTerm:
        negate = False
        if self.at("-"):
            self.take("-")
            negate = True
        e = self.term()
        if negate:
            e = -e
        while self.at("+", "-"):
            op = self.take().text
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def atom(self) -> list:
        if self.at("true"):
            self.take()
            return []
        if self.at("false"):
            self.take()
            return [Constraint.make({}, 1, "<=")]
        start = self.tok
        left = self.expr()
        if not self.at(*RELATIONS):
            self.error("expected a comparison")
        out = []
        while self.at(*RELATIONS):
            rel = self.take().text
            right = self.expr()
            c = Constraint.relation(left, rel, right)
            self.check_shape(c, start)
            out.append(c)
            left = right
        return out

    def check_shape(self, c: Constraint, tok: Token) -> None:
        clock_coefs = [a for v, a in c.terms if v in self.clocks]
        if len(clock_coefs) > 2 or (len(clock_coefs) == 2 and clock_coefs[0] != -clock_coefs[1]):
            self.error("clock part must be a single clock or a difference of two clocks", tok)

    def conjunction(self) -> Zone:
        rows = self.atom()
        while self.at("&&"):
            self.take()
            rows += self.atom()
        return Zone.make(self.space, rows)

    def disjunction(self) -> ZoneUnion:
        if not self.at("("):
            z = self.conjunction()
            return ZoneUnion.make(self.space, [z])
        pieces = []
        while True:
            self.take("(")
            pieces.append(self.conjunction())
            self.take(")")
            if not self.at("||"):
                break
            self.take()
        return ZoneUnion.make(self.space, pieces)

    # model
    def id_list(self, closing: str) -> list:
        names = []
        if self.at(closing):
            return names
        names.append(self.ident())
        while self.at(","):
            self.take()
            names.append(self.ident())
        return names

    def declare(self, names, into: list, other: list) -> None:
        for n in names:
            if n in into or n in other:
                self.error(f"duplicate declaration of {n!r}", self.tokens[self.i - 1])
            into.append(n)

    def model(self) -> PTG:
        actions: list = []
        locations: list = []
        transitions: list = []
        pending: list = []  # transitions with label resolution deferred
        initial, goal, kind = None, [], GAME
        while self.tok.kind != "eof":
            tok = self.take(kind="id")
            key = tok.text
            if key == "clocks":
                self.take(":")
                self.declare(self.id_list(";"), self.clocks, self.params)
                self.take(";")
            elif key == "parameters":
                self.take(":")
                self.declare(self.id_list(";"), self.params, self.clocks)
                self.take(";")
            elif key == "actions":
                self.take(":")
                while not self.at(";"):
                    label_tok = self.take(kind="id")
                    flag = self.take(kind="id")
                    if flag.text not in ("controllable", "uncontrollable"):
                        self.error("expected 'controllable' or 'uncontrollable'", flag)
                    if any(a == label_tok.text for a, _ in actions):
                        self.error(f"duplicate action {label_tok.text!r}", label_tok)
                    actions.append((label_tok.text, flag.text == "controllable"))
                    if not self.at(","):
                        break
                    self.take()
                self.take(";")
            elif key == "location":
                locations.append(self.location())
            elif key == "transition":
                pending.append(self.transition())
            elif key == "init":
                self.take(":")
                initial = self.ident()
                self.take(";")
            elif key == "goal":
                self.take(":")
                self.take("{")
                goal = self.id_list("}")
                self.take("}")
                self.take(";")
            elif key == "kind":
                self.take(":")
                kind = self.ident()
                self.take(";")
            else:
                self.error(f"unknown section {key!r}", tok)
        if initial is None:
            raise ModelError("missing init", self.tok.line, self.tok.column)
        table = dict(actions)
        seen: dict = {}
        for tok, (src, dst, label, guard, resets) in pending:
            if label not in table:
                self.error(f"unknown identifier {label!r} (undeclared action)", tok)
            if kind == GAME and label in seen:
                self.error(f"duplicate label {label!r} (also used at line {seen[label].line})", tok)
            seen.setdefault(label, tok)
            for r in resets:
                if r not in self.clocks:
                    self.error(f"reset of undeclared clock {r!r}", tok)
            transitions.append(Transition(src, dst, guard, label, frozenset(resets), table[label]))
        names = {l.name for l in locations}
        for tok, (src, dst, *_rest) in pending:
            for n in (src, dst):
                if n not in names:
                    self.error(f"unknown identifier {n!r} (undeclared location)", tok)
        if initial not in names:
            raise ModelError(f"unknown identifier {initial!r} (initial location)")
        for n in goal:
            if n not in names:
                raise ModelError(f"unknown identifier {n!r} (goal location)")
        return build_ptg(self.clocks, self.params, actions, locations, transitions, initial, goal, kind)

    def location(self) -> Location:
        name = self.ident()
        self.take("{")
        invariant, urgent = Zone.top(self.space), False
        while not self.at("}"):
            key = self.take(kind="id")
            self.take(":")
            if key.text == "invariant":
                invariant = self.conjunction()
            elif key.text == "urgent":
                flag = self.take(kind="id")
                if flag.text not in ("true", "false"):
                    self.error("expected true or false", flag)
                urgent = flag.text == "true"
            else:
                self.error(f"unknown location field {key.text!r}", key)
            self.take(";")
        self.take("}")
        return Location(name, invariant, urgent)

    def transition(self):
        tok = self.tok
        src = self.ident()
        self.take("->")
        dst = self.ident()
        self.take("{")
        label, guard, resets = None, Zone.top(self.space), []
        while not self.at("}"):
            key = self.take(kind="id")
            self.take(":")
            if key.text == "action":
                label = self.ident()
            elif key.text == "guard":
                guard = self.conjunction()
            elif key.text == "reset":
                self.take("{")
                resets = self.id_list("}")
                self.take("}")
            else:
                self.error(f"unknown transition field {key.text!r}", key)
            self.take(";")
        self.take("}")
        if label is None:
            self.error("transition without action", tok)
        return tok, (src, dst, label, guard, resets)


def parse_model(text: str) -> PTG:
    """Parse and validate a model; errors carry line and column."""
    return _Parser(text).model()


def parse_zone(text: str, space: Space) -> Zone:
    p = _Parser(text)
    p.clocks, p.params = list(space.clocks), list(space.params)
    z = p.conjunction()
    p.take(kind="eof")
    return z


def parse_union(text: str, space: Space) -> ZoneUnion:
    p = _Parser(text)
    p.clocks, p.params = list(space.clocks), list(space.params)
    if p.at("false") and p.tokens[1].kind == "eof":
        return ZoneUnion.empty(space)
    u = p.disjunction()
    p.take(kind="eof")
    return u


def _flag(b: bool) -> str:
    return "true" if b else "false"


def serialize_model(g: PTG, header: str = "") -> str:
    lines = []
    if header:
        lines += [f"# {h}" if h else "#" for h in header.splitlines()]
    if g.kind != GAME:
        lines.append(f"kind: {g.kind};")
    lines.append(f"clocks: {', '.join(g.clocks)};")
    lines.append(f"parameters: {', '.join(g.params)};")
    acts = ", ".join(f"{a} {'controllable' if c else 'uncontrollable'}" for a, c in g.actions)
    lines.append(f"actions: {acts};")
    lines.append("")
    for loc in g.locations:
        lines.append(f"location {loc.name} {{ invariant: {format_zone(loc.invariant)}; urgent: {_flag(loc.urgent)}; }}")
    lines.append("")
    for t in g.transitions:
        resets = ", ".join(x for x in g.clocks if x in t.resets)
        lines.append(
            f"transition {t.source} -> {t.target} {{ action: {t.label}; "
            f"guard: {format_zone(t.guard)}; reset: {{{resets}}}; }}"
        )
    lines.append("")
    lines.append(f"init: {g.initial};")
    goal = ", ".join(l.name for l in g.locations if l.name in g.goal)
    lines.append(f"goal: {{ {goal} }};" if goal else "goal: {};")
    return "\n".join(lines) + "\n"


def format_params(u: ZoneUnion) -> str:
    """Parameter constraints with an explicit lower bound for every free parameter."""
    if u.is_empty():
        return "false"
    pieces = []
    for z in u.pieces:
        mentioned = {v for c in z.constraints for v in c.variables}
        extra = [Constraint.make({p: -1}, 0, "<=") for p in z.params if p not in mentioned]
        pieces.append(Zone.make(z.space, list(z.constraints) + extra))
    return format_union(ZoneUnion(u.space, tuple(pieces)))
