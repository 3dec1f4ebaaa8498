"""Temporal-epistemic formulas: AST, text parser, and trace evaluation.

The language has bounded temporal operators (globally / until over step
windows), per-agent knowledge and possibility operators, and mutual
knowledge over agent groups.  Conjunction, implication, possibility and
mutual knowledge are sugar over the core grammar (top, atoms, negation,
disjunction, globally, until, knowledge).

Concrete text syntax (one formula per string)::

    formula  := implies
    implies  := until ("->" implies)?           right associative
    until    := or ("U[0,ALPHA]" or)?
    or       := and ("|" and)*
    and      := unary ("&" unary)*
    unary    := "!" unary
              | "K" AGENT unary
              | "P" AGENT unary
              | "E{" AGENT ("," AGENT)* "}" unary
              | "G[0,BETA)" unary
              | "top" | ATOM | "(" formula ")"

ALPHA / BETA are positive integers, AGENT a positive integer, ATOM an
identifier such as ``H1``, ``p_3_2`` or ``pi_opt``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class LogicError(Exception):
    pass


class ParseError(LogicError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class HorizonExceededError(LogicError):
    """A temporal window runs past the end of the trace."""


class UnknownSymbolError(LogicError):
    """Atom or agent not present in the trace's model."""


# ---------------------------------------------------------------------------
# AST


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Top(Formula):
    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Globally(Formula):
    steps: int  # window [t, t+steps), steps > 0
    arg: Formula

    def __post_init__(self):
        if self.steps <= 0:
            raise LogicError("globally horizon must be a positive integer")


@dataclass(frozen=True)
class Until(Formula):
    steps: int  # witness in [t, t+steps], steps > 0
    left: Formula
    right: Formula

    def __post_init__(self):
        if self.steps <= 0:
            raise LogicError("until horizon must be a positive integer")


@dataclass(frozen=True)
class Knows(Formula):
    agent: int
    arg: Formula


@dataclass(frozen=True)
class Possible(Formula):
    agent: int
    arg: Formula


@dataclass(frozen=True)
class Mutual(Formula):
    agents: frozenset
    arg: Formula

    def __post_init__(self):
        object.__setattr__(self, "agents", frozenset(self.agents))
        if not self.agents:
            raise LogicError("mutual knowledge needs a nonempty agent group")


# ---------------------------------------------------------------------------
# Printing (parse . format == identity up to whitespace)


def format_formula(f: Formula) -> str:
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return f"!{_fmt_operand(f.arg)}"
    if isinstance(f, Or):
        return f"({format_formula(f.left)} | {format_formula(f.right)})"
    if isinstance(f, And):
        return f"({format_formula(f.left)} & {format_formula(f.right)})"
    if isinstance(f, Implies):
        return f"({format_formula(f.left)} -> {format_formula(f.right)})"
    if isinstance(f, Globally):
        return f"G[0,{f.steps}) {_fmt_operand(f.arg)}"
    if isinstance(f, Until):
        return f"({format_formula(f.left)} U[0,{f.steps}] {format_formula(f.right)})"
    if isinstance(f, Knows):
        return f"K {f.agent} {_fmt_operand(f.arg)}"
    if isinstance(f, Possible):
        return f"P {f.agent} {_fmt_operand(f.arg)}"
    if isinstance(f, Mutual):
        group = ",".join(str(a) for a in sorted(f.agents))
        return f"E{{{group}}} {_fmt_operand(f.arg)}"
    raise TypeError(f"not a formula: {f!r}")


def _fmt_operand(f: Formula) -> str:
    if isinstance(f, (Top, Atom, Not, Knows, Possible, Mutual, Globally)):
        return format_formula(f)
    return f"({format_formula(f)})"


# ---------------------------------------------------------------------------
# Parser

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<until>U\[0,(?P<alpha>\d+)\])"
    r"|(?P<glob>G\[0,(?P<beta>\d+)\))"
    r"|(?P<group>E\{(?P<agents>[\d\s,]+)\})"
    r"|(?P<arrow>->)"
    r"|(?P<sym>[!|&()])"
    r"|(?P<word>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<int>\d+)"
    r")"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:].lstrip()
            if not rest:
                break
            raise ParseError(f"unexpected character {rest[0]!r}", pos)
        tokens.append((m, m.start()))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect_sym(self, sym: str):
        m, pos = self.next()
        if m is None or m.lastgroup not in ("sym", "arrow") or m.group(m.lastgroup) != sym:
            raise ParseError(f"expected {sym!r}", pos)

    def parse(self) -> Formula:
        f = self.parse_implies()
        m, pos = self.peek()
        if m is not None:
            raise ParseError(f"unexpected token {m.group(0).strip()!r}", pos)
        return f

    def parse_implies(self) -> Formula:
        left = self.parse_until()
        m, _ = self.peek()
        if m is not None and m.lastgroup == "arrow":
            self.next()
            return Implies(left, self.parse_implies())
        return left

    def parse_until(self) -> Formula:
        left = self.parse_or()
        m, pos = self.peek()
        if m is not None and m.lastgroup == "until":
            self.next()
            alpha = int(m.group("alpha"))
            if alpha <= 0:
                raise ParseError("until horizon must be positive", pos)
            right = self.parse_or()
            return Until(alpha, left, right)
        return left

    def parse_or(self) -> Formula:
        f = self.parse_and()
        while True:
            m, _ = self.peek()
            if m is not None and m.lastgroup == "sym" and m.group("sym") == "|":
                self.next()
                f = Or(f, self.parse_and())
            else:
                return f

    def parse_and(self) -> Formula:
        f = self.parse_unary()
        while True:
            m, _ = self.peek()
            if m is not None and m.lastgroup == "sym" and m.group("sym") == "&":
                self.next()
                f = And(f, self.parse_unary())
            else:
                return f

    def parse_unary(self) -> Formula:
        m, pos = self.next()
        if m is None:
            raise ParseError("unexpected end of formula", pos)
        kind = m.lastgroup
        if kind == "sym" and m.group("sym") == "!":
            return Not(self.parse_unary())
        if kind == "sym" and m.group("sym") == "(":
            f = self.parse_implies()
            self.expect_sym(")")
            return f
        if kind == "glob":
            beta = int(m.group("beta"))
            if beta <= 0:
                raise ParseError("globally horizon must be positive", pos)
            return Globally(beta, self.parse_unary())
        if kind == "group":
            agents = frozenset(int(a) for a in m.group("agents").replace(" ", "").split(",") if a)
            if not agents:
                raise ParseError("empty agent group", pos)
            return Mutual(agents, self.parse_unary())
        if kind == "word":
            word = m.group("word")
            if word in ("K", "P"):
                am, apos = self.next()
                if am is None or am.lastgroup != "int":
                    raise ParseError(f"expected agent id after {word}", apos)
                agent = int(am.group("int"))
                arg = self.parse_unary()
                return Knows(agent, arg) if word == "K" else Possible(agent, arg)
            if word == "top":
                return Top()
            return Atom(word)
        raise ParseError(f"unexpected token {m.group(0).strip()!r}", pos)


def parse(text: str) -> Formula:
    """Parse the concrete text syntax into a Formula."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Desugaring to the core grammar


def desugar(f: Formula) -> Formula:
    """Rewrite to the core grammar: Top/Atom/Not/Or/Globally/Until/Knows."""
    if isinstance(f, (Top, Atom)):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.arg))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, And):
        return Not(Or(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        return Or(Not(desugar(f.left)), desugar(f.right))
    if isinstance(f, Globally):
        return Globally(f.steps, desugar(f.arg))
    if isinstance(f, Until):
        return Until(f.steps, desugar(f.left), desugar(f.right))
    if isinstance(f, Knows):
        return Knows(f.agent, desugar(f.arg))
    if isinstance(f, Possible):
        return Not(Knows(f.agent, Not(desugar(f.arg))))
    if isinstance(f, Mutual):
        agents = sorted(f.agents)
        conj: Formula = Knows(agents[0], f.arg)
        for a in agents[1:]:
            conj = And(conj, Knows(a, f.arg))
        return desugar(conj)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Evaluation

# A trace must expose:
#   length           -> int, number of steps
#   actual_world(t)  -> world id
#   atoms_of(w)      -> set of atom names true in world w
#   accessible(agent, w, t) -> iterable of world ids
#   has_atom(name)   -> bool
#   has_agent(agent) -> bool


@dataclass(frozen=True)
class EvalPoint:
    """Evaluation point (trace, t) with an optional world override at t.

    The override realises r[t -> w']: the run agrees with the trace at
    every time except t, where the given world is substituted.
    """

    trace: object
    t: int
    override: tuple | None = None  # (time, world id)

    def world_at(self, t: int) -> int:
        if self.override is not None and self.override[0] == t:
            return self.override[1]
        return self.trace.actual_world(t)


def eval_formula(point: EvalPoint, f: Formula) -> bool:
    """Satisfaction at (trace, t): the inductive Kripke semantics."""
    trace = point.trace
    t = point.t
    if t < 0 or t >= trace.length:
        raise HorizonExceededError(f"time {t} outside trace of length {trace.length}")
    if isinstance(f, Top):
        return True
    if isinstance(f, Atom):
        if not trace.has_atom(f.name):
            raise UnknownSymbolError(f"unknown atom {f.name!r}")
        return f.name in trace.atoms_of(point.world_at(t))
    if isinstance(f, Not):
        return not eval_formula(point, f.arg)
    if isinstance(f, Or):
        return eval_formula(point, f.left) or eval_formula(point, f.right)
    if isinstance(f, And):
        return eval_formula(point, f.left) and eval_formula(point, f.right)
    if isinstance(f, Implies):
        return (not eval_formula(point, f.left)) or eval_formula(point, f.right)
    if isinstance(f, Globally):
        last = t + f.steps - 1
        if last >= trace.length:
            raise HorizonExceededError(
                f"globally window [{t},{t + f.steps}) exceeds trace length {trace.length}")
        return all(
            eval_formula(EvalPoint(trace, u, point.override), f.arg)
            for u in range(t, last + 1))
    if isinstance(f, Until):
        last = t + f.steps
        if last >= trace.length:
            raise HorizonExceededError(
                f"until window [{t},{t + f.steps}] exceeds trace length {trace.length}")
        for u in range(t, last + 1):
            if eval_formula(EvalPoint(trace, u, point.override), f.right):
                return True
            if not eval_formula(EvalPoint(trace, u, point.override), f.left):
                return False
        return False
    if isinstance(f, Knows):
        if not trace.has_agent(f.agent):
            raise UnknownSymbolError(f"unknown agent {f.agent}")
        w = point.world_at(t)
        return all(
            eval_formula(EvalPoint(trace, t, (t, w2)), f.arg)
            for w2 in trace.accessible(f.agent, w, t))
    if isinstance(f, Possible):
        return not eval_formula(point, Knows(f.agent, Not(f.arg)))
    if isinstance(f, Mutual):
        return all(eval_formula(point, Knows(a, f.arg)) for a in sorted(f.agents))
    raise TypeError(f"not a formula: {f!r}")
