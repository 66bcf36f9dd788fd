"""Propositional-logic expressions: parsing, printing, normalization, truth tables.

Grammar (whitespace insignificant):

    atom     :  a single letter in [a-z]
    unary    :  '!' unary | atom | '(' expr ')'
    conj     :  unary ('&' unary)*          left-associative
    disj     :  conj ('|' conj)*            left-associative
    implies  :  disj ('->' implies)?        right-associative
    expr     :  implies ('<->' expr)?       right-associative

Precedence: ! > & > | > -> > <->.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

NOT = "not"
AND = "and"
OR = "or"
IMPLIES = "implies"
IFF = "iff"
ATOM = "atom"

BINARY_OPS = (AND, OR, IMPLIES, IFF)

_PRECEDENCE = {IFF: 1, IMPLIES: 2, OR: 3, AND: 4, NOT: 5, ATOM: 6}
_SYMBOL = {AND: "&", OR: "|", IMPLIES: "->", IFF: "<->"}
# left-assoc ops parenthesize an equal-precedence right child; right-assoc the left child
_RIGHT_ASSOC = {IMPLIES, IFF}


class ParseError(ValueError):
    """Malformed expression text; `position` is 1-based."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True, eq=False)
class Expression:
    op: str
    args: tuple["Expression", ...] = ()
    name: str = ""  # atom letter when op == ATOM

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.op, self.args, self.name)))

    def __hash__(self) -> int:
        return self._hash  # cached: trees are immutable

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expression):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.op == other.op
            and self.name == other.name
            and self.args == other.args
        )

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"Expression({to_text(self)!r})"


def atom(name: str) -> Expression:
    return Expression(ATOM, (), name)


def neg(e: Expression) -> Expression:
    return Expression(NOT, (e,))


def conj(a: Expression, b: Expression) -> Expression:
    return Expression(AND, (a, b))


def disj(a: Expression, b: Expression) -> Expression:
    return Expression(OR, (a, b))


def implies(a: Expression, b: Expression) -> Expression:
    return Expression(IMPLIES, (a, b))


def iff(a: Expression, b: Expression) -> Expression:
    return Expression(IFF, (a, b))


# --- parsing ---------------------------------------------------------------

_TWO_CHAR = {"->": "->"}
_THREE_CHAR = {"<->": "<->"}


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens: list[tuple[str, int]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("<->", i):
            tokens.append(("<->", i + 1))
            i += 3
        elif text.startswith("->", i):
            tokens.append(("->", i + 1))
            i += 2
        elif ch in "!&|()":
            tokens.append((ch, i + 1))
            i += 1
        elif ch.isalpha() and ch.islower() and ch.isascii():
            tokens.append((ch, i + 1))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i + 1)
    tokens.append(("<end>", n + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> str:
        return self.tokens[self.pos][0]

    def here(self) -> int:
        return self.tokens[self.pos][1]

    def take(self) -> str:
        tok = self.tokens[self.pos][0]
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        if self.peek() != tok:
            raise ParseError(f"expected {tok!r}", self.here())
        self.take()

    def parse(self) -> Expression:
        e = self.iff_expr()
        if self.peek() != "<end>":
            raise ParseError(f"unexpected token {self.peek()!r}", self.here())
        return e

    def iff_expr(self) -> Expression:
        left = self.implies_expr()
        if self.peek() == "<->":
            self.take()
            return iff(left, self.iff_expr())
        return left

    def implies_expr(self) -> Expression:
        left = self.or_expr()
        if self.peek() == "->":
            self.take()
            return implies(left, self.implies_expr())
        return left

    def or_expr(self) -> Expression:
        e = self.and_expr()
        while self.peek() == "|":
            self.take()
            e = disj(e, self.and_expr())
        return e

    def and_expr(self) -> Expression:
        e = self.unary()
        while self.peek() == "&":
            self.take()
            e = conj(e, self.unary())
        return e

    def unary(self) -> Expression:
        tok = self.peek()
        if tok == "!":
            self.take()
            return neg(self.unary())
        if tok == "(":
            self.take()
            e = self.iff_expr()
            self.expect(")")
            return e
        if len(tok) == 1 and tok.isalpha():
            self.take()
            return atom(tok)
        raise ParseError(f"expected an expression, found {tok!r}", self.here())


def parse_expression(text: str) -> Expression:
    """Parse `text` into an Expression; raises ParseError with a 1-based position."""
    return _Parser(text).parse()


# --- printing ---------------------------------------------------------------


def to_text(e: Expression) -> str:
    """Minimal-parentheses rendering that round-trips through parse_expression."""
    if e.op == ATOM:
        return e.name
    if e.op == NOT:
        inner = e.args[0]
        body = to_text(inner)
        if _PRECEDENCE[inner.op] < _PRECEDENCE[NOT]:
            body = f"({body})"
        return f"!{body}"
    left, right = e.args
    myprec = _PRECEDENCE[e.op]
    ltext = to_text(left)
    rtext = to_text(right)
    lprec = _PRECEDENCE[left.op]
    rprec = _PRECEDENCE[right.op]
    if lprec < myprec or (lprec == myprec and e.op in _RIGHT_ASSOC):
        ltext = f"({ltext})"
    if rprec < myprec or (rprec == myprec and e.op not in _RIGHT_ASSOC):
        rtext = f"({rtext})"
    return f"{ltext} {_SYMBOL[e.op]} {rtext}"


# --- normalization ----------------------------------------------------------


def _flatten(op: str, e: Expression) -> list[Expression]:
    if e.op == op:
        out: list[Expression] = []
        for a in e.args:
            out.extend(_flatten(op, a))
        return out
    return [e]


@lru_cache(maxsize=65536)
def normalize(e: Expression) -> Expression:
    """Canonical form for matching: flatten and sort and/or operand lists.

    Keeps duplicates (p & p stays a conjunction) and never applies
    negation-level rewrites, so !!p, !(p & q) etc. remain distinct forms.
    """
    if e.op == ATOM:
        return e
    if e.op == NOT:
        return neg(normalize(e.args[0]))
    if e.op in (AND, OR):
        operands = [normalize(a) for a in _flatten(e.op, e)]
        operands.sort(key=to_text)
        out = operands[0]
        for a in operands[1:]:
            out = Expression(e.op, (out, a))
        return out
    return Expression(e.op, tuple(normalize(a) for a in e.args))


@lru_cache(maxsize=65536)
def canonical_text(e: Expression) -> str:
    return to_text(normalize(e))


def equivalent_form(a: Expression, b: Expression) -> bool:
    """Equality up to and/or associativity and commutativity."""
    return normalize(a) == normalize(b)


def subformulas(e: Expression) -> tuple[Expression, ...]:
    """All subterms of `e` including itself, deduplicated, in deterministic order."""
    seen: dict[str, Expression] = {}

    def walk(x: Expression) -> None:
        key = to_text(x)
        if key not in seen:
            seen[key] = x
            for a in x.args:
                walk(a)

    walk(e)
    return tuple(seen[k] for k in sorted(seen))


# --- truth-table semantics ---------------------------------------------------


def variables(e: Expression) -> tuple[str, ...]:
    names: set[str] = set()

    def walk(x: Expression) -> None:
        if x.op == ATOM:
            names.add(x.name)
        for a in x.args:
            walk(a)

    walk(e)
    return tuple(sorted(names))


def evaluate(e: Expression, assignment: dict[str, bool]) -> bool:
    if e.op == ATOM:
        return assignment[e.name]
    if e.op == NOT:
        return not evaluate(e.args[0], assignment)
    a = evaluate(e.args[0], assignment)
    b = evaluate(e.args[1], assignment)
    if e.op == AND:
        return a and b
    if e.op == OR:
        return a or b
    if e.op == IMPLIES:
        return (not a) or b
    if e.op == IFF:
        return a == b
    raise ValueError(f"unknown operator {e.op!r}")


def entails(premises: tuple[Expression, ...] | list[Expression], conclusion: Expression) -> bool:
    """True iff every assignment satisfying all premises satisfies the conclusion."""
    names = sorted({v for p in premises for v in variables(p)} | set(variables(conclusion)))
    for values in product((False, True), repeat=len(names)):
        assignment = dict(zip(names, values))
        if all(evaluate(p, assignment) for p in premises) and not evaluate(conclusion, assignment):
            return False
    return True


def tautologically_equivalent(a: Expression, b: Expression) -> bool:
    return entails((a,), b) and entails((b,), a)
