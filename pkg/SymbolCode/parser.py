"""
Pratt parser for the symbol mini-language.

    expr    := expr ('+' | '-') expr | expr ('*' | '/') expr | '-' expr | expr '^' expr | atom
    atom    := number | 'pi' | 'i' | 'xi' | 'xi1' .. 'xin' | '(' expr ')'

`^` binds tightest and is right-associative; exponents must be constant integers no larger
than MAX_EXPONENT in magnitude and divisors must be nonzero constants.
"""
import cmath
import logging
import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from Utils.errors import DimensionMismatchError, NonPolynomialError, SymbolSyntaxError, UnknownIdentifierError

logger = logging.getLogger(__name__)

# largest |k| accepted in `base ^ k`
MAX_EXPONENT = 1024


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str  # 'pi' or 'i'


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


Node = Union[Num, Const, Var, Neg, BinOp, Pow]


def is_constant(node: Node) -> bool:
    if isinstance(node, (Num, Const)):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, Neg):
        return is_constant(node.operand)
    if isinstance(node, BinOp):
        return is_constant(node.left) and is_constant(node.right)
    return is_constant(node.base)


def evaluate_node(node: Node, xi):
    """Evaluate a tree at xi, a sequence of n coordinates (scalars or broadcastable arrays)."""
    if isinstance(node, Num):
        return complex(node.value)
    if isinstance(node, Const):
        return complex(math.pi) if node.name == 'pi' else 1j
    if isinstance(node, Var):
        return np.asarray(xi[node.index], dtype=np.complex128)
    if isinstance(node, Neg):
        return -evaluate_node(node.operand, xi)
    if isinstance(node, Pow):
        return evaluate_node(node.base, xi) ** node.exponent
    left = evaluate_node(node.left, xi)
    right = evaluate_node(node.right, xi)
    if node.op == '+':
        return left + right
    if node.op == '-':
        return left - right
    if node.op == '*':
        return left * right
    return left / right


@dataclass(frozen=True)
class SymbolExpr:
    root: Node
    n: int
    text: str = ""

    def __call__(self, xi):
        xi = _split_coordinates(xi, self.n)
        value = evaluate_node(self.root, xi)
        shape = np.broadcast(*[np.asarray(c) for c in xi]).shape
        return np.broadcast_to(np.asarray(value, dtype=np.complex128), shape).copy()

    def __str__(self):
        return print_symbol(self)


def _split_coordinates(xi, n: int):
    arr = np.asarray(xi, dtype=float)
    if n == 1 and (arr.ndim == 0 or arr.shape[0] != 1):
        return [arr]
    if arr.ndim == 0 or arr.shape[0] != n:
        raise DimensionMismatchError(f"Point of shape {arr.shape} does not match dimension {n}")
    return [arr[k] for k in range(n)]


# tokens

TOKEN_PATTERN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


@dataclass
class Token:
    kind: str  # 'num', 'name', 'op', 'end'
    value: str
    offset: int


class SymbolParser:
    """One parser per input text; `parse` returns the tree."""

    binding = {'+': 10, '-': 10, '*': 20, '/': 20, '^': 30, ')': 0}

    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.tokens = list(self._tokenize())
        self.position = 0

    def _byte_offset(self, char_index: int) -> int:
        return len(self.text[:char_index].encode('utf-8'))

    def _tokenize(self):
        index = 0
        while index < len(self.text):
            if self.text[index:].strip() == "":
                break
            match = TOKEN_PATTERN.match(self.text, index)
            number, name, op = match.groups()
            start = match.start(match.lastindex)
            offset = self._byte_offset(start)
            if number:
                yield Token('num', number, offset)
            elif name:
                yield Token('name', name, offset)
            elif op in '+-*/^()':
                yield Token('op', op, offset)
            else:
                raise SymbolSyntaxError(f"Unexpected character {op!r}", offset)
            index = match.end()
        yield Token('end', '', self._byte_offset(len(self.text)))

    @property
    def token(self) -> Token:
        return self.tokens[self.position]

    def advance(self) -> Token:
        t = self.tokens[self.position]
        if t.kind != 'end':
            self.position += 1
        return t

    def lbp(self, t: Token) -> int:
        if t.kind == 'op':
            return self.binding.get(t.value, 0)
        if t.kind == 'end':
            return 0
        # two atoms in a row
        raise SymbolSyntaxError(f"Expected an operator, found {t.value!r}", t.offset)

    def parse(self) -> SymbolExpr:
        if not self.text.strip():
            raise SymbolSyntaxError("Empty symbol text", 0)
        root = self.expression(0)
        if self.token.kind != 'end':
            raise SymbolSyntaxError(f"Unexpected {self.token.value!r}", self.token.offset)
        return SymbolExpr(root, self.n, self.text)

    def expression(self, rbp: int) -> Node:
        t = self.advance()
        left = self.nud(t)
        while rbp < self.lbp(self.token):
            t = self.advance()
            left = self.led(t, left)
        return left

    def nud(self, t: Token) -> Node:
        if t.kind == 'num':
            return Num(float(t.value))
        if t.kind == 'name':
            return self.identifier(t)
        if t.kind == 'op' and t.value == '-':
            # binds looser than ^ so that -xi^2 is -(xi^2)
            return Neg(self.expression(25))
        if t.kind == 'op' and t.value == '(':
            inner = self.expression(0)
            closing = self.advance()
            if closing.kind != 'op' or closing.value != ')':
                raise SymbolSyntaxError("Expected ')'", closing.offset)
            return inner
        if t.kind == 'end':
            raise SymbolSyntaxError("Unexpected end of input", t.offset)
        raise SymbolSyntaxError(f"Unexpected {t.value!r}", t.offset)

    def led(self, t: Token, left: Node) -> Node:
        if t.value == '^':
            exponent_offset = self.token.offset
            # right associative
            right = self.expression(self.binding['^'] - 1)
            return Pow(left, self._integer_exponent(left, right, exponent_offset))
        right_offset = self.token.offset
        right = self.expression(self.binding[t.value])
        if t.value == '/':
            if not is_constant(right):
                raise SymbolSyntaxError("Division by a non-constant expression", right_offset)
            divisor = self._constant_value(right, right_offset)
            if divisor == 0 or not cmath.isfinite(divisor):
                raise NonPolynomialError(f"Division by {divisor}", right_offset)
        return BinOp(t.value, left, right)

    def _integer_exponent(self, base: Node, exponent: Node, offset: int) -> int:
        if not is_constant(exponent):
            raise SymbolSyntaxError("Non-integer exponent (exponent depends on xi)", offset)
        value = self._constant_value(exponent, offset)
        if value.imag != 0 or not math.isfinite(value.real) or value.real != round(value.real):
            raise SymbolSyntaxError(f"Non-integer exponent {value.real:g}", offset)
        k = int(round(value.real))
        if abs(k) > MAX_EXPONENT:
            raise NonPolynomialError(f"Exponent {k} exceeds the limit of {MAX_EXPONENT}", offset)
        if k < 0:
            if not is_constant(base):
                raise SymbolSyntaxError("Negative exponent on a non-constant base", offset)
            if self._constant_value(base, offset) == 0:
                raise NonPolynomialError("Negative power of zero", offset)
        return k

    def _constant_value(self, node: Node, offset: int) -> complex:
        try:
            return complex(evaluate_node(node, [0.0] * self.n))
        except (ZeroDivisionError, OverflowError) as e:
            raise NonPolynomialError(f"Constant subexpression cannot be evaluated ({e})", offset)

    def identifier(self, t: Token) -> Node:
        name = t.value
        if name in ('pi', 'i'):
            return Const(name)
        if name == 'xi' and self.n == 1:
            return Var(0)
        match = re.fullmatch(r"xi([1-9][0-9]*)", name)
        if match and int(match.group(1)) <= self.n:
            return Var(int(match.group(1)) - 1)
        raise UnknownIdentifierError(f"Unknown identifier {name!r} for dimension {self.n}", t.offset)


def parse_symbol(text: str, n: int = 1) -> SymbolExpr:
    return SymbolParser(text, n).parse()


# printer

_PRECEDENCE = {'+': 10, '-': 10, '*': 20, '/': 20}


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _precedence(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PRECEDENCE[node.op]
    if isinstance(node, Neg):
        return 25
    if isinstance(node, Pow):
        return 30
    return 100


def _render(node: Node, n: int) -> str:
    if isinstance(node, Num):
        return _format_number(node.value)
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return 'xi' if n == 1 else f'xi{node.index + 1}'
    if isinstance(node, Neg):
        inner = _render(node.operand, n)
        if _precedence(node.operand) < 25:
            inner = f'({inner})'
        return f'-{inner}'
    if isinstance(node, Pow):
        base = _render(node.base, n)
        if _precedence(node.base) <= 30:
            base = f'({base})'
        exponent = str(node.exponent) if node.exponent >= 0 else f'({node.exponent})'
        return f'{base}^{exponent}'
    prec = _PRECEDENCE[node.op]
    left = _render(node.left, n)
    if _precedence(node.left) < prec:
        left = f'({left})'
    right = _render(node.right, n)
    # keep the tree shape: a - (b - c) and a + (b + c) both keep their parentheses
    if _precedence(node.right) <= prec:
        right = f'({right})'
    if node.op in '+-':
        return f'{left} {node.op} {right}'
    return f'{left}{node.op}{right}'


def print_symbol(expr: SymbolExpr) -> str:
    """Canonical text; parse(print_symbol(e)) prints back to the same string."""
    return _render(expr.root, expr.n)
