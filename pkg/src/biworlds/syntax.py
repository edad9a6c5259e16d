"""Formulas: abstract syntax, concrete syntax and modal depth.

Concrete grammar (whitespace-insensitive)::

    formula := implies
    implies := or ( "->" implies )?
    or      := and ( "|" and )*
    and     := unary ( "&" unary )*
    unary   := "~" unary | modal | atom | "true" | "false" | "(" formula ")"
    modal   := ("K"|"M"|"O") "[" ident "]" unary
             | ("E"|"C") "[" "{" ident ("," ident)* "}" "]" unary
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Iterator, Union

from .errors import EmptyGroup, FormulaSyntaxError, UndeclaredSymbol

IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


@total_ordering
@dataclass(frozen=True)
class Ordinal:
    """An ordinal below omega squared, ``omega * omega_coeff + finite``."""

    omega_coeff: int = 0
    finite: int = 0

    def __post_init__(self):
        if self.omega_coeff < 0 or self.finite < 0:
            raise ValueError("ordinal components must be non-negative")

    def __lt__(self, other: Ordinal) -> bool:
        return (self.omega_coeff, self.finite) < (other.omega_coeff, other.finite)

    def succ(self) -> Ordinal:
        return Ordinal(self.omega_coeff, self.finite + 1)

    def plus_omega(self) -> Ordinal:
        # smallest limit ordinal above self
        return Ordinal(self.omega_coeff + 1, 0)

    @property
    def is_finite(self) -> bool:
        return self.omega_coeff == 0

    def __str__(self) -> str:
        if self.omega_coeff == 0:
            return str(self.finite)
        head = "ω" if self.omega_coeff == 1 else f"ω·{self.omega_coeff}"
        return head if self.finite == 0 else f"{head}+{self.finite}"


# -- abstract syntax -------------------------------------------------------


class _Node:
    """Formula nodes are immutable trees; their hash is computed once."""

    __slots__ = ()

    def __hash__(self) -> int:
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((type(self).__name__,) + tuple(self.__dict__[f] for f in self.__dataclass_fields__))
            object.__setattr__(self, "_hash", h)
            return h


@dataclass(frozen=True)
class Atom(_Node):
    name: str


@dataclass(frozen=True)
class Top(_Node):
    pass


@dataclass(frozen=True)
class Bottom(_Node):
    pass


@dataclass(frozen=True)
class Not(_Node):
    sub: Formula


@dataclass(frozen=True)
class And(_Node):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(_Node):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(_Node):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class K(_Node):
    agent: str
    sub: Formula


@dataclass(frozen=True)
class M(_Node):
    agent: str
    sub: Formula


@dataclass(frozen=True)
class O(_Node):
    agent: str
    sub: Formula


@dataclass(frozen=True)
class E(_Node):
    group: tuple[str, ...]
    sub: Formula

    def __post_init__(self):
        object.__setattr__(self, "group", _normalize_group(self.group))


@dataclass(frozen=True)
class C(_Node):
    group: tuple[str, ...]
    sub: Formula

    def __post_init__(self):
        object.__setattr__(self, "group", _normalize_group(self.group))


Formula = Union[Atom, Top, Bottom, Not, And, Or, Implies, K, M, O, E, C]

for _cls in (Atom, Top, Bottom, Not, And, Or, Implies, K, M, O, E, C):
    # the dataclass decorator installs a field-tuple hash; keep the cached one
    _cls.__hash__ = _Node.__hash__

AGENT_OPS = (K, M, O)
GROUP_OPS = (E, C)
BINARY_OPS = (And, Or, Implies)


def _normalize_group(group: Iterable[str]) -> tuple[str, ...]:
    members = tuple(sorted(set(group)))
    if not members:
        raise EmptyGroup("agent groups must be non-empty")
    return members


def children(phi: Formula) -> tuple[Formula, ...]:
    if isinstance(phi, BINARY_OPS):
        return (phi.left, phi.right)
    if isinstance(phi, (Not,) + AGENT_OPS + GROUP_OPS):
        return (phi.sub,)
    return ()


def subformulas(phi: Formula) -> Iterator[Formula]:
    yield phi
    for child in children(phi):
        yield from subformulas(child)


def atoms_of(phi: Formula) -> set[str]:
    return {f.name for f in subformulas(phi) if isinstance(f, Atom)}


def agents_of(phi: Formula) -> set[str]:
    out: set[str] = set()
    for f in subformulas(phi):
        if isinstance(f, AGENT_OPS):
            out.add(f.agent)
        elif isinstance(f, GROUP_OPS):
            out.update(f.group)
    return out


def has_common_knowledge(phi: Formula) -> bool:
    return any(isinstance(f, C) for f in subformulas(phi))


def modal_depth(phi: Formula) -> Ordinal:
    if isinstance(phi, (Atom, Top, Bottom)):
        return Ordinal()
    if isinstance(phi, Not):
        return modal_depth(phi.sub)
    if isinstance(phi, BINARY_OPS):
        return max(modal_depth(phi.left), modal_depth(phi.right))
    if isinstance(phi, C):
        return modal_depth(phi.sub).plus_omega()
    return modal_depth(phi.sub).succ()


def finite_depth(phi: Formula) -> int:
    """Modal depth as an integer; raises ValueError for formulas with C."""
    md = modal_depth(phi)
    if not md.is_finite:
        raise ValueError(f"modal depth {md} is not finite")
    return md.finite


# -- rendering -------------------------------------------------------------


def render(phi: Formula) -> str:
    if isinstance(phi, Atom):
        return phi.name
    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Bottom):
        return "false"
    if isinstance(phi, Not):
        return "~" + render(phi.sub)
    if isinstance(phi, And):
        return f"({render(phi.left)} & {render(phi.right)})"
    if isinstance(phi, Or):
        return f"({render(phi.left)} | {render(phi.right)})"
    if isinstance(phi, Implies):
        return f"({render(phi.left)} -> {render(phi.right)})"
    if isinstance(phi, AGENT_OPS):
        return f"{type(phi).__name__}[{phi.agent}] {render(phi.sub)}"
    if isinstance(phi, GROUP_OPS):
        return f"{type(phi).__name__}[{{{','.join(phi.group)}}}] {render(phi.sub)}"
    raise TypeError(f"not a formula: {phi!r}")


# -- parsing ---------------------------------------------------------------

_PUNCT = ("->", "~", "&", "|", "(", ")", "[", "]", "{", "}", ",")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        m = IDENT.match(text, i)
        if m:
            tokens.append(("ident", m.group(), i))
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append((p, p, i))
                i += len(p)
                break
        else:
            raise FormulaSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, atoms, agents):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.atoms = None if atoms is None else set(atoms)
        self.agents = None if agents is None else set(agents)

    def peek(self, offset: int = 0):
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.advance()
        if tok[0] != kind:
            shown = tok[1] or "end of input"
            raise FormulaSyntaxError(f"expected {kind!r}, found {shown!r}", tok[2])
        return tok

    def parse(self) -> Formula:
        phi = self.implies()
        tok = self.peek()
        if tok[0] != "eof":
            raise FormulaSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return phi

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.peek()[0] == "->":
            self.advance()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        phi = self.conjunction()
        while self.peek()[0] == "|":
            self.advance()
            phi = Or(phi, self.conjunction())
        return phi

    def conjunction(self) -> Formula:
        phi = self.unary()
        while self.peek()[0] == "&":
            self.advance()
            phi = And(phi, self.unary())
        return phi

    def unary(self) -> Formula:
        kind, value, where = self.peek()
        if kind == "~":
            self.advance()
            return Not(self.unary())
        if kind == "(":
            self.advance()
            phi = self.implies()
            self.expect(")")
            return phi
        if kind == "ident":
            if value in ("K", "M", "O", "E", "C") and self.peek(1)[0] == "[":
                return self.modal()
            self.advance()
            if value == "true":
                return Top()
            if value == "false":
                return Bottom()
            if self.atoms is not None and value not in self.atoms:
                raise UndeclaredSymbol(f"undeclared atom {value!r} at position {where}")
            return Atom(value)
        shown = value or "end of input"
        raise FormulaSyntaxError(f"unexpected {shown!r}", where)

    def agent(self) -> str:
        _, name, where = self.expect("ident")
        if self.agents is not None and name not in self.agents:
            raise UndeclaredSymbol(f"undeclared agent {name!r} at position {where}")
        return name

    def modal(self) -> Formula:
        op = self.advance()[1]
        self.expect("[")
        if op in ("K", "M", "O"):
            agent = self.agent()
            self.expect("]")
            return {"K": K, "M": M, "O": O}[op](agent, self.unary())
        brace = self.expect("{")
        members = []
        if self.peek()[0] != "}":
            members.append(self.agent())
            while self.peek()[0] == ",":
                self.advance()
                members.append(self.agent())
        self.expect("}")
        self.expect("]")
        if not members:
            raise EmptyGroup(f"empty agent group at position {brace[2]}")
        return (E if op == "E" else C)(tuple(members), self.unary())


def parse(text: str, atoms: Iterable[str] | None = None, agents: Iterable[str] | None = None) -> Formula:
    """Parse concrete syntax into a formula.

    When ``atoms`` or ``agents`` are given, every symbol must be declared.
    """
    return _Parser(text, atoms, agents).parse()
