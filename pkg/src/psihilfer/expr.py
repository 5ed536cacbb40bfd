"""A small arithmetic expression language for ``f(t, y)``, ``g(t, y)``, ``Psi(t)``.

Grammar (EBNF)::

    expr    = sum ;
    sum     = product , { ("+" | "-") , product } ;
    product = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | "+" , unary | power ;
    power   = atom , [ "^" , unary ] ;            (* right-associative *)
    atom    = number | name | name , "(" , args , ")" | "(" , expr , ")" ;
    args    = expr , { "," , expr } ;
    number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ]
            | "." , digits , [ exponent ] ;

``^`` binds tighter than unary minus, so ``-t^2`` is ``-(t^2)``, while
``2^-t`` is ``2^(-t)``. ``**`` is accepted as a synonym of ``^``.

Builtins: ``sin cos exp log sqrt abs`` (one argument), ``pow`` (two) and
``gamma`` (one). ``pi`` and ``e`` are constants unless declared as variables.

Evaluation works on floats and on NumPy arrays alike. Domain errors (log of
a non-positive number, division by zero, square root of a negative number,
negative base with a non-integer exponent, Gamma at a pole) raise
:class:`~psihilfer.errors.DomainError` carrying the source offset of the
offending node. Overflow to ``inf`` is not an error here; callers check.
"""

from __future__ import annotations

import math
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.special import gamma as _sc_gamma

from psihilfer.errors import (
    ArityError,
    DomainError,
    ExprSyntaxError,
    MissingBindingError,
    UnknownIdentifierError,
)

# {{{ AST


@dataclass(frozen=True)
class Num:
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]
    offset: int = field(default=0, compare=False)


Node = Union[Num, Var, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}

#: name -> arity
BUILTINS = {
    "sin": 1,
    "cos": 1,
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "abs": 1,
    "pow": 2,
    "gamma": 1,
}


@dataclass(frozen=True)
class Expr:
    """A parsed expression together with its declared variables."""

    root: Node
    variables: tuple[str, ...]
    source: str = field(default="", compare=False)

    def __call__(self, *args, **kwargs):
        if args:
            if len(args) != len(self.variables):
                raise MissingBindingError(
                    f"expected {len(self.variables)} positional values "
                    f"for {self.variables}, got {len(args)}"
                )
            kwargs = {**dict(zip(self.variables, args)), **kwargs}
        return evaluate(self, kwargs)

    def __str__(self) -> str:
        return to_string(self.root)

    @property
    def free_variables(self) -> frozenset[str]:
        return frozenset(_collect_vars(self.root))

    def is_constant(self) -> bool:
        return not self.free_variables


def _collect_vars(node: Node):
    if isinstance(node, Var):
        yield node.name
    elif isinstance(node, Neg):
        yield from _collect_vars(node.operand)
    elif isinstance(node, BinOp):
        yield from _collect_vars(node.left)
        yield from _collect_vars(node.right)
    elif isinstance(node, Call):
        for arg in node.args:
            yield from _collect_vars(arg)


# }}}


# {{{ tokenizer


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    offset: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    encoded_offsets = _byte_offsets(source)
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(
                f"unexpected character {source[pos]!r}", encoded_offsets[pos]
            )
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            if kind == "op" and text == "**":
                text = "^"
            tokens.append(Token(kind, text, encoded_offsets[pos]))
        pos = m.end()

    tokens.append(Token("end", "", encoded_offsets[len(source)]))
    return tokens


def _byte_offsets(source: str) -> list[int]:
    offsets = [0]
    for ch in source:
        offsets.append(offsets[-1] + len(ch.encode("utf-8")))
    return offsets


# }}}


# {{{ Pratt parser

# left binding powers
_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


class _Parser:
    def __init__(self, source: str, variables: Sequence[str]) -> None:
        self.tokens = tokenize(source)
        self.pos = 0
        self.variables = tuple(variables)

    @property
    def token(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.token
        if tok.kind != "op" or tok.text != text:
            found = tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", tok.offset)
        return self.advance()

    def lbp(self, tok: Token) -> int:
        if tok.kind == "op":
            return _LBP.get(tok.text, 0)
        if tok.kind in ("num", "name"):
            # juxtaposition such as "2 t" is not allowed
            raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.offset)
        return 0

    def expression(self, rbp: int = 0) -> Node:
        left = self.nud(self.advance())
        while rbp < self.lbp(self.token):
            left = self.led(self.advance(), left)
        return left

    def nud(self, tok: Token) -> Node:
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"number literal overflows: {tok.text}", tok.offset)
            return Num(value, tok.offset)

        if tok.kind == "name":
            if self.token.kind == "op" and self.token.text == "(":
                return self.call(tok)
            if tok.text in self.variables:
                return Var(tok.text, tok.offset)
            if tok.text in CONSTANTS:
                return Num(CONSTANTS[tok.text], tok.offset)
            if tok.text in BUILTINS:
                raise ExprSyntaxError(
                    f"function {tok.text!r} must be called with parentheses", tok.offset
                )
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.offset)

        if tok.kind == "op":
            if tok.text == "-":
                return Neg(self.expression(_UNARY_BP), tok.offset)
            if tok.text == "+":
                return self.expression(_UNARY_BP)
            if tok.text == "(":
                inner = self.expression()
                self.expect(")")
                return inner

        found = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", tok.offset)

    def led(self, tok: Token, left: Node) -> Node:
        if tok.text == "^":
            # right-associative; the exponent may carry a unary sign
            right = self.expression(_LBP["^"] - 1)
        else:
            right = self.expression(_LBP[tok.text])
        return BinOp(tok.text, left, right, tok.offset)

    def call(self, name: Token) -> Node:
        if name.text not in BUILTINS:
            raise UnknownIdentifierError(f"unknown function {name.text!r}", name.offset)
        self.expect("(")
        args = []
        if not (self.token.kind == "op" and self.token.text == ")"):
            args.append(self.expression())
            while self.token.kind == "op" and self.token.text == ",":
                self.advance()
                args.append(self.expression())
        self.expect(")")

        arity = BUILTINS[name.text]
        if len(args) != arity:
            raise ArityError(
                f"{name.text}() takes {arity} argument(s), got {len(args)}", name.offset
            )
        return Call(name.text, tuple(args), name.offset)


def parse(source: str, variables: Sequence[str]) -> Expr:
    """Parse *source* into an :class:`Expr` over the declared *variables*."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    variables = tuple(variables)
    if not variables:
        raise ValueError("at least one variable must be declared")
    if len(set(variables)) != len(variables):
        raise ValueError(f"variables must be distinct: {variables}")
    for name in variables:
        if name in BUILTINS:
            raise ValueError(f"variable name shadows a builtin function: {name!r}")

    parser = _Parser(source, variables)
    root = parser.expression()
    if parser.token.kind != "end":
        raise ExprSyntaxError(f"unexpected {parser.token.text!r}", parser.token.offset)

    return Expr(root, variables, source)


# }}}


# {{{ printing


def to_string(node: Node) -> str:
    """Fully parenthesized rendering that :func:`parse` maps back to *node*."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_string(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_string(node.left)} {node.op} {to_string(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_string(a) for a in node.args)})"
    raise TypeError(f"unknown node: {node!r}")


# }}}


# {{{ evaluation

Value = Union[float, np.ndarray]


def _domain(msg: str, node: Node) -> DomainError:
    return DomainError(msg, node.offset)


def _pow(base: Value, exponent: Value, node: Node) -> Value:
    base_a = np.asarray(base, dtype=np.float64)
    exp_a = np.asarray(exponent, dtype=np.float64)
    bad = (base_a < 0) & (exp_a != np.floor(exp_a)) & np.isfinite(exp_a)
    if np.any(bad):
        raise _domain("negative base raised to a non-integer power", node)
    zero_neg = (base_a == 0) & (exp_a < 0)
    if np.any(zero_neg):
        raise _domain("zero raised to a negative power", node)
    return np.power(base_a, exp_a)


def _apply(func: str, args: list[Value], node: Call) -> Value:
    (x, *rest) = args
    xa = np.asarray(x, dtype=np.float64)
    if func == "sin":
        return np.sin(xa)
    if func == "cos":
        return np.cos(xa)
    if func == "exp":
        return np.exp(xa)
    if func == "abs":
        return np.abs(xa)
    if func == "log":
        if np.any(xa <= 0):
            raise _domain("log of a non-positive number", node)
        return np.log(xa)
    if func == "sqrt":
        if np.any(xa < 0):
            raise _domain("sqrt of a negative number", node)
        return np.sqrt(xa)
    if func == "pow":
        return _pow(xa, rest[0], node)
    if func == "gamma":
        if np.any((xa <= 0) & (xa == np.floor(xa))):
            raise _domain("gamma at a non-positive integer", node)
        return _sc_gamma(xa)
    raise _domain(f"unknown function {func!r}", node)


def _eval(node: Node, env: Mapping[str, Value]) -> Value:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -np.asarray(_eval(node.operand, env))
    if isinstance(node, BinOp):
        a = np.asarray(_eval(node.left, env), dtype=np.float64)
        b = np.asarray(_eval(node.right, env), dtype=np.float64)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(b == 0):
                raise _domain("division by zero", node)
            return a / b
        if node.op == "^":
            return _pow(a, b, node)
        raise _domain(f"unknown operator {node.op!r}", node)
    if isinstance(node, Call):
        return _apply(node.func, [_eval(a, env) for a in node.args], node)
    raise TypeError(f"unknown node: {node!r}")


def evaluate(e: Expr, bindings: Mapping[str, Value]) -> Value:
    """Evaluate *e* in IEEE double precision.

    Array bindings broadcast against each other; the result has the broadcast
    shape (or is a float when every binding is scalar).
    """
    missing = [v for v in e.variables if v not in bindings]
    if missing:
        raise MissingBindingError(f"missing binding(s) for {', '.join(missing)}")

    env = {}
    for name in e.variables:
        value = bindings[name]
        env[name] = value if isinstance(value, np.ndarray) else float(value)

    with np.errstate(all="ignore"):
        result = _eval(e.root, env)

    shape = np.broadcast_shapes(*(np.shape(env[v]) for v in e.variables))
    result = np.broadcast_to(np.asarray(result, dtype=np.float64), shape)
    if result.ndim == 0:
        return float(result)
    return np.array(result)


def compile_function(e: Expr) -> Callable[..., Value]:
    """Wrap *e* as a positional function of its declared variables."""

    def func(*args: Value) -> Value:
        return evaluate(e, dict(zip(e.variables, args)))

    func.__name__ = f"expr<{e.source or to_string(e.root)}>"
    return func


# }}}
