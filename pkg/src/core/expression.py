"""
Arithmetic expressions in two variables s and t.

User-supplied nonlinearities are written in a small grammar:
- numbers (decimal, optional exponent), the variables s and t
- binary + - * / and right-associative ^ (binds tighter than unary minus)
- unary minus, parentheses
- the functions abs, ln, exp, sign

Expressions compile to a tree of nodes evaluated with numpy, so a single call
covers every vertex. A non-integer power of a negative base is the signed
real root sign(b)|b|^e. Parse errors carry the character position and the
set of tokens that would have been accepted there.
"""

from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Tuple

import numpy as np
from pyparsing import (
    Forward,
    Keyword,
    OpAssoc,
    ParseException,
    ParserElement,
    Regex,
    Suppress,
    infix_notation,
    one_of,
)

from src.core.exceptions import ExpressionParseError

ParserElement.enable_packrat()

FUNCTIONS = ("abs", "ln", "exp", "sign")
VARIABLES = ("s", "t")

# ─── Syntax tree ──────────────────────────────────────────────────────────


class Node:
    """Base class of expression tree nodes."""

    def evaluate(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def variables(self) -> FrozenSet[str]:
        return frozenset()


@dataclass(frozen=True)
class Num(Node):
    value: float

    def evaluate(self, s, t):
        return np.full(np.broadcast(s, t).shape, self.value)


@dataclass(frozen=True)
class Var(Node):
    name: str

    def evaluate(self, s, t):
        return np.broadcast_arrays(s, t)[0 if self.name == "s" else 1].astype(float)

    def variables(self):
        return frozenset({self.name})


@dataclass(frozen=True)
class Neg(Node):
    operand: Node

    def evaluate(self, s, t):
        return -self.operand.evaluate(s, t)

    def variables(self):
        return self.operand.variables()


@dataclass(frozen=True)
class Call(Node):
    name: str
    arg: Node

    def evaluate(self, s, t):
        x = self.arg.evaluate(s, t)
        if self.name == "abs":
            return np.abs(x)
        if self.name == "ln":
            return np.log(x)
        if self.name == "exp":
            return np.exp(x)
        return np.sign(x)

    def variables(self):
        return self.arg.variables()


def signed_power(base: np.ndarray, exponent: np.ndarray) -> np.ndarray:
    """b^e, using sign(b)|b|^e wherever e is not an integer."""
    base, exponent = np.broadcast_arrays(np.asarray(base, float), np.asarray(exponent, float))
    integral = exponent == np.round(exponent)
    return np.where(
        integral,
        np.power(base, exponent),
        np.sign(base) * np.power(np.abs(base), exponent),
    )


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def evaluate(self, s, t):
        a = self.left.evaluate(s, t)
        b = self.right.evaluate(s, t)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return signed_power(a, b)

    def variables(self):
        return self.left.variables() | self.right.variables()


# ─── Grammar ──────────────────────────────────────────────────────────────


def _fold_left(tokens):
    items = tokens[0]
    node = items[0]
    for op, rhs in zip(items[1::2], items[2::2]):
        node = BinOp(op, node, rhs)
    return node


def _fold_right(tokens):
    items = tokens[0]
    node = items[-1]
    for lhs, op in zip(items[-3::-2], items[-2::-2]):
        node = BinOp(op, lhs, node)
    return node


def _unary(tokens):
    op, operand = tokens[0]
    return Neg(operand) if op == "-" else operand


NUMBER_PATTERN = r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?"


def _build_grammar() -> ParserElement:
    number = Regex(NUMBER_PATTERN).set_parse_action(lambda tok: Num(float(tok[0])))
    variable = one_of(" ".join(VARIABLES), as_keyword=True).set_parse_action(
        lambda tok: Var(tok[0])
    )
    expr = Forward()
    function = one_of(" ".join(FUNCTIONS), as_keyword=True)
    call = (function + Suppress("(") + expr + Suppress(")")).set_parse_action(
        lambda tok: Call(tok[0], tok[1])
    )
    operand = call | number | variable
    expr <<= infix_notation(
        operand,
        [
            ("^", 2, OpAssoc.RIGHT, _fold_right),
            (one_of("- +"), 1, OpAssoc.RIGHT, _unary),
            (one_of("* /"), 2, OpAssoc.LEFT, _fold_left),
            (one_of("+ -"), 2, OpAssoc.LEFT, _fold_left),
        ],
    )
    return expr


_GRAMMAR = _build_grammar()

# Token scanner used for error positions
_TOKEN = Regex(NUMBER_PATTERN)("number") | Regex(r"[A-Za-z_]\w*")("ident") | Regex(r"[-+*/^()]")("op")

_OPERAND_START = frozenset({"number", "s", "t", "(", "-", "+"} | set(FUNCTIONS))
_AFTER_CARET = frozenset({"number", "s", "t", "("} | set(FUNCTIONS))
_OPERATORS = frozenset({"+", "-", "*", "/", "^"})


def _scan(text: str) -> List[Tuple[str, int]]:
    """Split text into (token, start) pairs; unmatched characters become their own token."""
    tokens: List[Tuple[str, int]] = []
    cursor = 0
    for match, start, end in _TOKEN.scan_string(text):
        for pos in range(cursor, start):
            if not text[pos].isspace():
                tokens.append((text[pos], pos))
        tokens.append((text[start:end], start))
        cursor = end
    for pos in range(cursor, len(text)):
        if not text[pos].isspace():
            tokens.append((text[pos], pos))
    return tokens


def _locate_error(text: str) -> Optional[Tuple[int, FrozenSet[str]]]:
    """
    Walk the token stream with an operand/operator automaton.

    Returns the first offending position and the expected-token set, or None
    when the token sequence is well formed.
    """
    expect_operand = True
    after_caret = False
    after_function = False
    depth = 0

    for token, pos in _scan(text):
        if after_function:
            if token != "(":
                return pos, frozenset({"("})
            after_function = False
            depth += 1
            continue

        if expect_operand:
            allowed = _AFTER_CARET if after_caret else _OPERAND_START
            kind = "number" if token[0].isdigit() or token[0] == "." else token
            if kind not in allowed:
                return pos, allowed
            after_caret = False
            if kind in FUNCTIONS:
                after_function = True
            elif token == "(":
                depth += 1
            elif token in ("-", "+"):
                pass
            else:
                expect_operand = False
            continue

        if token in _OPERATORS:
            expect_operand = True
            after_caret = token == "^"
        elif token == ")" and depth > 0:
            depth -= 1
        else:
            expected = set(_OPERATORS)
            expected.add(")" if depth > 0 else "end of input")
            return pos, frozenset(expected)

    end = len(text)
    if after_function:
        return end, frozenset({"("})
    if expect_operand:
        return end, _AFTER_CARET if after_caret else _OPERAND_START
    if depth > 0:
        return end, frozenset(_OPERATORS | {")"})
    return None


# ─── Public API ───────────────────────────────────────────────────────────


class Expression:
    """
    A parsed expression in s and t.

    Evaluation broadcasts over numpy arrays; NaN and infinity are returned
    as-is and detected by the caller.
    """

    def __init__(self, text: str) -> None:
        """
        Parse text.

        Raises:
            ExpressionParseError: On a syntax error, with position and expected tokens.
        """
        self.text = text
        located = _locate_error(text)
        if located is not None:
            position, expected = located
            raise ExpressionParseError(text, position, expected)
        try:
            self.tree: Node = _GRAMMAR.parse_string(text, parse_all=True)[0]
        except ParseException as e:
            raise ExpressionParseError(text, e.loc, frozenset(), detail=str(e.msg)) from None

    def __call__(self, s, t) -> np.ndarray:
        with np.errstate(all="ignore"):
            return self.tree.evaluate(np.asarray(s, float), np.asarray(t, float))

    @property
    def variables(self) -> FrozenSet[str]:
        """Variables the expression depends on."""
        return self.tree.variables()

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"
