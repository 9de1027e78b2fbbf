"""Small arithmetic expression language for user-defined shapes and loops.

Grammar (whitespace insensitive):

    expr   := ["-"] term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := base ("^" ["-"] factor)?          # "^" binds right
    base   := number | ident | func "(" expr ")" | "(" expr ")"
    func   := "sin" | "cos" | "exp" | "log" | "sqrt"
    ident  := "u1".."u9" | "t" | "pi" | declared parameter names

Numbers are unsigned decimal literals with optional fraction and exponent;
signs are expression structure. Unknown identifiers are rejected at parse
time with their position; runtime problems (division by zero, log of a
non-positive value) raise EvaluationError carrying the operator position.

The module also provides exact symbolic differentiation of parsed
expressions, used to build gradient-graph shapes and loop velocities.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from .errors import EvaluationError, ParseError

__all__ = ["Expression", "parse_expression", "differentiate"]

_FUNCTIONS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
}

_BASE_IDENTS = {f"u{k}" for k in range(1, 10)} | {"t", "pi"}

_NUMBER_RE = re.compile(r"\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "ident" | one of "+-*/^()" | "end"
    text: str
    line: int
    column: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(src):
        ch = src[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch in "+-*/^()":
            tokens.append(_Token(ch, ch, line, col))
            col += 1
            i += 1
            continue
        m = _NUMBER_RE.match(src, i)
        if m:
            tokens.append(_Token("num", m.group(), line, col))
            col += m.end() - i
            i = m.end()
            continue
        m = _IDENT_RE.match(src, i)
        if m:
            tokens.append(_Token("ident", m.group(), line, col))
            col += m.end() - i
            i = m.end()
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("end", "", line, col))
    return tokens


# AST nodes. Positions point at the token that produced the node and are
# carried through so evaluation errors can name a location.

@dataclass(frozen=True)
class Num:
    value: float
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class Name:
    ident: str
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    line: int = 0
    column: int = 0


Node = Union[Num, Name, Call, Neg, BinOp]


class _Parser:
    def __init__(self, tokens: list[_Token], idents: set[str]):
        self.tokens = tokens
        self.pos = 0
        self.idents = idents

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            shown = tok.text if tok.kind != "end" else "end of input"
            raise ParseError(f"expected {kind!r}, found {shown!r}", tok.line, tok.column)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.column)
        return node

    def expr(self) -> Node:
        tok = self.peek()
        if tok.kind == "-":
            self.advance()
            node: Node = Neg(self.term(), tok.line, tok.column)
        else:
            node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance()
            node = BinOp(op.kind, node, self.term(), op.line, op.column)
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.advance()
            node = BinOp(op.kind, node, self.factor(), op.line, op.column)
        return node

    def factor(self) -> Node:
        node = self.base()
        tok = self.peek()
        if tok.kind == "^":
            self.advance()
            neg = self.peek()
            if neg.kind == "-":
                self.advance()
                exponent: Node = Neg(self.factor(), neg.line, neg.column)
            else:
                exponent = self.factor()
            node = BinOp("^", node, exponent, tok.line, tok.column)
        return node

    def base(self) -> Node:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text), tok.line, tok.column)
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.advance()
            if tok.text in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg, tok.line, tok.column)
            if tok.text not in self.idents:
                raise ParseError(f"unknown identifier {tok.text!r}", tok.line, tok.column)
            return Name(tok.text, tok.line, tok.column)
        shown = tok.text if tok.kind != "end" else "end of input"
        raise ParseError(f"expected a value, found {shown!r}", tok.line, tok.column)


def _evaluate(node: Node, env: dict) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.ident == "pi":
            return math.pi
        return float(env[node.ident])
    if isinstance(node, Neg):
        return -_evaluate(node.operand, env)
    if isinstance(node, Call):
        value = _evaluate(node.arg, env)
        try:
            return _FUNCTIONS[node.func](value)
        except ValueError:
            raise EvaluationError(
                f"{node.func} undefined at argument {value!r}", node.line, node.column
            ) from None
    if isinstance(node, BinOp):
        left = _evaluate(node.left, env)
        right = _evaluate(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            if right == 0.0:
                raise EvaluationError("division by zero", node.line, node.column)
            return left / right
        if node.op == "^":
            try:
                result = left**right
            except (ValueError, ZeroDivisionError, OverflowError):
                raise EvaluationError(
                    f"power undefined for base {left!r} and exponent {right!r}",
                    node.line,
                    node.column,
                ) from None
            if isinstance(result, complex):
                raise EvaluationError(
                    f"power of negative base {left!r} with fractional exponent",
                    node.line,
                    node.column,
                )
            return result
    raise TypeError(f"not an expression node: {node!r}")


def _pretty(node: Node, context: int = 0) -> str:
    # context levels: 0 expression start, 1 sum operand, 2 product operand,
    # 3 exponent head. Parenthesize whenever the node binds looser than the
    # context demands; Neg prints as a subtraction from zero so the result
    # stays inside the grammar wherever it lands.
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Name):
        return node.ident
    if isinstance(node, Call):
        return f"{node.func}({_pretty(node.arg, 0)})"
    if isinstance(node, Neg):
        return f"(0 - {_pretty(node.operand, 1)})"
    if isinstance(node, BinOp):
        if node.op in ("+", "-"):
            text = f"{_pretty(node.left, 1)} {node.op} {_pretty(node.right, 2)}"
            return f"({text})" if context >= 2 else text
        if node.op in ("*", "/"):
            text = f"{_pretty(node.left, 2)} {node.op} {_pretty(node.right, 3)}"
            return f"({text})" if context >= 3 else text
        text = f"{_pretty(node.left, 3)} ^ {_pretty(node.right, 2)}"
        return f"({text})" if context >= 3 else text
    raise TypeError(f"not an expression node: {node!r}")


def _free_names(node: Node, acc: set[str]) -> set[str]:
    if isinstance(node, Name):
        if node.ident != "pi":
            acc.add(node.ident)
    elif isinstance(node, Call):
        _free_names(node.arg, acc)
    elif isinstance(node, Neg):
        _free_names(node.operand, acc)
    elif isinstance(node, BinOp):
        _free_names(node.left, acc)
        _free_names(node.right, acc)
    return acc


# Simplifying constructors keep derivative trees small enough to nest.

def _num(value: float) -> Num:
    return Num(float(value))


def _add(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and a.value == 0.0:
        return b
    if isinstance(b, Num) and b.value == 0.0:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    if isinstance(b, Num) and b.value == 0.0:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value - b.value)
    return BinOp("-", a, b)


def _mul(a: Node, b: Node) -> Node:
    if isinstance(a, Num):
        if a.value == 0.0:
            return _num(0.0)
        if a.value == 1.0:
            return b
    if isinstance(b, Num):
        if b.value == 0.0:
            return _num(0.0)
        if b.value == 1.0:
            return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value * b.value)
    return BinOp("*", a, b)


def _div(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and a.value == 0.0:
        return _num(0.0)
    if isinstance(b, Num) and b.value == 1.0:
        return a
    return BinOp("/", a, b)


def _diff(node: Node, var: str) -> Node:
    if isinstance(node, Num):
        return _num(0.0)
    if isinstance(node, Name):
        return _num(1.0) if node.ident == var else _num(0.0)
    if isinstance(node, Neg):
        return Neg(_diff(node.operand, var))
    if isinstance(node, Call):
        inner = _diff(node.arg, var)
        if node.func == "sin":
            outer: Node = Call("cos", node.arg)
        elif node.func == "cos":
            outer = Neg(Call("sin", node.arg))
        elif node.func == "exp":
            outer = Call("exp", node.arg)
        elif node.func == "log":
            outer = _div(_num(1.0), node.arg)
        else:  # sqrt
            outer = _div(_num(0.5), Call("sqrt", node.arg))
        return _mul(outer, inner)
    if isinstance(node, BinOp):
        da = _diff(node.left, var)
        db = _diff(node.right, var)
        if node.op == "+":
            return _add(da, db)
        if node.op == "-":
            return _sub(da, db)
        if node.op == "*":
            return _add(_mul(da, node.right), _mul(node.left, db))
        if node.op == "/":
            num = _sub(_mul(da, node.right), _mul(node.left, db))
            return _div(num, _mul(node.right, node.right))
        # a^b: constant exponent gets the power rule, otherwise the
        # logarithmic derivative a^b (db log a + b da / a).
        if isinstance(node.right, Num):
            power = _mul(
                _num(node.right.value),
                BinOp("^", node.left, _num(node.right.value - 1.0)),
            )
            return _mul(power, da)
        log_term = _mul(db, Call("log", node.left))
        ratio_term = _div(_mul(node.right, da), node.left)
        return _mul(node, _add(log_term, ratio_term))
    raise TypeError(f"not an expression node: {node!r}")


class Expression:
    """A parsed expression: evaluable, printable, differentiable."""

    def __init__(self, root: Node, source: str = ""):
        self.root = root
        self.source = source or _pretty(root)

    def variables(self) -> set[str]:
        """Free identifiers (excluding the constant pi)."""
        return _free_names(self.root, set())

    def evaluate(self, env: dict | None = None, **values) -> float:
        scope = dict(env or {})
        scope.update(values)
        return _evaluate(self.root, scope)

    def pretty(self) -> str:
        """Round-trippable text form: re-parsing evaluates identically."""
        return _pretty(self.root)

    def __repr__(self):
        return f"Expression({self.pretty()!r})"


def parse_expression(src: str, parameters=()) -> Expression:
    """Parse source text against the grammar.

    ``parameters`` lists extra identifier names (beyond u1..u9, t, pi)
    that the expression may reference.
    """
    if not src or not src.strip():
        raise ParseError("empty expression", 1, 1)
    idents = _BASE_IDENTS | set(parameters)
    root = _Parser(_tokenize(src), idents).parse()
    return Expression(root, src)


def differentiate(expr: Expression, var: str) -> Expression:
    """Exact derivative of a parsed expression with respect to one variable."""
    return Expression(_diff(expr.root, var))
