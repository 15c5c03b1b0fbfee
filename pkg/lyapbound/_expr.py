"""Analytic-expression language for branch formulas.

Grammar (EBNF)::

    expr     = term , { ("+" | "-") , term } ;
    term     = unary , { ("*" | "/") , unary } ;
    unary    = ("-" | "+") , unary | power ;
    power    = atom , [ "^" , unary ] ;          (* exponent must be a rational constant *)
    atom     = number | "x" | "c" | func , "(" , expr , ")" | "(" , expr , ")" ;
    func     = "sqrt" | "abs" | "exp" | "log" ;
    number   = digits , [ "." , [ digits ] ] , [ exponent ] | "." , digits , [ exponent ] ;

Decimal literals are read exactly as rationals. Parsed trees are sympy
expressions in the real symbols ``x`` and ``c``.
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from ._base import DomainError, ExprSyntaxError, MapSpecError

logger = logging.getLogger(__name__)

X = sympy.Symbol("x", real=True)
C = sympy.Symbol("c", real=True)

FUNCTIONS = {"sqrt": sympy.sqrt, "abs": sympy.Abs, "exp": sympy.exp, "log": sympy.log}
VARIABLES = {"x": X, "c": C}

_TOKEN = re.compile(
    r"(?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r"|(?P<space>[ \t\r\n]+)"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(source):
    """Split ``source`` into tokens tagged with 1-based line and column."""
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        match = _TOKEN.match(source, pos)
        if match is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1, source)
        kind = match.lastgroup
        text = match.group()
        if kind == "space":
            for offset, char in enumerate(text):
                if char == "\n":
                    line, line_start = line + 1, pos + offset + 1
        else:
            tokens.append(_Token(kind, text, line, pos - line_start + 1))
        pos = match.end()
    tokens.append(_Token("end", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    """Recursive-descent parser producing sympy trees."""

    def __init__(self, source):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def current(self):
        return self.tokens[self.pos]

    def error(self, message, token=None):
        token = token or self.current
        return ExprSyntaxError(message, token.line, token.column, self.source)

    def advance(self):
        token = self.current
        self.pos += 1
        return token

    def accept(self, text):
        if self.current.kind == "op" and self.current.text == text:
            return self.advance()
        return None

    def expect(self, text):
        token = self.accept(text)
        if token is None:
            found = self.current.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return token

    def parse(self):
        if self.current.kind == "end":
            raise self.error("empty expression")
        tree = self.expr()
        if self.current.kind != "end":
            raise self.error(f"unexpected {self.current.text!r}")
        return tree

    def expr(self):
        tree = self.term()
        while True:
            if self.accept("+"):
                tree = tree + self.term()
            elif self.accept("-"):
                tree = tree - self.term()
            else:
                return tree

    def term(self):
        tree = self.unary()
        while True:
            if self.accept("*"):
                tree = tree * self.unary()
            elif self.accept("/"):
                tree = tree / self.unary()
            else:
                return tree

    def unary(self):
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        caret = self.accept("^")
        if caret is None:
            return base
        exponent = self.unary()
        if not exponent.is_Rational:
            raise self.error(f"exponent must be a rational constant, got {exponent}", caret)
        return sympy.Pow(base, exponent)

    def atom(self):
        token = self.current
        if token.kind == "number":
            self.advance()
            value = Fraction(token.text)
            return sympy.Rational(value.numerator, value.denominator)
        if token.kind == "name":
            self.advance()
            name = token.text
            if name in FUNCTIONS:
                self.expect("(")
                argument = self.expr()
                self.expect(")")
                return FUNCTIONS[name](argument)
            if self.current.kind == "op" and self.current.text == "(":
                raise self.error(f"unknown function {name!r}", token)
            if name in VARIABLES:
                return VARIABLES[name]
            raise self.error(f"unknown name {name!r}", token)
        if self.accept("("):
            tree = self.expr()
            self.expect(")")
            return tree
        found = token.text or "end of input"
        raise self.error(f"unexpected {found!r}")


###############################################################################
# Expressions


@dataclass(frozen=True)
class Expr:
    """Immutable expression in ``x`` with a compiled high-precision evaluator.

    Equality and hashing follow the sympy tree; ``source`` is kept for
    reporting only.
    """

    tree: sympy.Expr
    source: str = field(default="", compare=False)

    def __post_init__(self):
        free = self.tree.free_symbols - {X}
        if free:
            names = ", ".join(sorted(str(s) for s in free))
            raise MapSpecError(f"expression {self} has unbound symbols: {names}")
        if self.tree.has(sympy.zoo, sympy.oo, -sympy.oo, sympy.nan):
            raise MapSpecError(f"expression {self} is not finite (division by zero?)")
        if self.tree.has(sympy.I):
            raise MapSpecError(f"expression {self} is not real-valued")

    def __str__(self):
        return self.source or str(self.tree)

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_compiled_fn", None)
        return state

    def diff(self):
        """Symbolic derivative with respect to ``x``."""
        return Expr(sympy.diff(self.tree, X))

    def evaluate(self, x, ctx):
        """Value at ``x`` in ``ctx``; domain violations raise ``DomainError``."""
        return self._compiled(ctx.mpf(x), ctx)

    def to_numpy(self):
        """Vectorised double-precision callable, for float-only estimators."""
        return sympy.lambdify(X, self.tree, "numpy")

    @property
    def _compiled(self):
        compiled = self.__dict__.get("_compiled_fn")
        if compiled is None:
            compiled = _compile(self.tree)
            object.__setattr__(self, "_compiled_fn", compiled)
        return compiled


def parse_expr(source, params=None):
    """Parse ``source`` and substitute the named parameters.

    Parameters
    ----------
    source : str
        Expression text in the grammar above.
    params : dict, optional
        Values for ``c``; numbers are converted exactly to rationals.

    Returns
    -------
    Expr
    """
    if not isinstance(source, str):
        raise MapSpecError(f"expression source should be text, got {type(source).__name__}")
    tree = _Parser(source).parse()
    if params:
        tree = tree.subs({VARIABLES[k]: _rational(v) for k, v in params.items()})
    return Expr(tree, source.strip())


def _rational(value):
    if isinstance(value, sympy.Basic):
        return value
    value = Fraction(repr(value)) if isinstance(value, float) else Fraction(value)
    return sympy.Rational(value.numerator, value.denominator)


###############################################################################
# Compilation to closures over an mpmath context


def _compile(node):
    if node.is_Integer or node.is_Rational:
        p, q = int(node.p), int(node.q)
        return lambda x, ctx: ctx.mp.mpf(p) / q
    if node == X:
        return lambda x, ctx: x
    if node.is_NumberSymbol:
        # exp(1) folds to E
        return lambda x, ctx: ctx.mp.mpf(str(node.evalf(ctx.mp.dps + 10)))
    if node.is_Add:
        terms = [_compile(a) for a in node.args]
        return lambda x, ctx: ctx.mp.fsum(f(x, ctx) for f in terms)
    if node.is_Mul:
        factors = [_compile(a) for a in node.args]
        return lambda x, ctx: ctx.mp.fprod(f(x, ctx) for f in factors)
    if node.is_Pow:
        return _compile_pow(node)
    if isinstance(node, sympy.exp):
        arg = _compile(node.args[0])
        return lambda x, ctx: ctx.mp.exp(arg(x, ctx))
    if isinstance(node, sympy.log):
        return _compile_log(node)
    if isinstance(node, sympy.Abs):
        arg = _compile(node.args[0])
        return lambda x, ctx: abs(arg(x, ctx))
    if isinstance(node, sympy.sign):
        return _compile_sign(node)
    raise MapSpecError(f"unsupported construct {node} ({type(node).__name__})")


def _compile_pow(node):
    base_node, exp_node = node.args
    if not exp_node.is_Rational:
        raise MapSpecError(f"exponent must be a rational constant in {node}")
    base = _compile(base_node)
    p, q = int(exp_node.p), int(exp_node.q)

    def power(x, ctx):
        b = base(x, ctx)
        if b == 0 and p < 0:
            raise DomainError(f"division by zero in {node}: {base_node} = 0")
        if q == 1:
            return b**p
        if b < 0:
            raise DomainError(f"negative base in {node}: {base_node} = {ctx.mp.nstr(b, 15)}")
        root = ctx.mp.sqrt(b) if q == 2 else ctx.mp.cbrt(b) if q == 3 else ctx.mp.root(b, q)
        return root**p

    return power


def _compile_log(node):
    arg_node = node.args[0]
    arg = _compile(arg_node)

    def log(x, ctx):
        value = arg(x, ctx)
        if value <= 0:
            raise DomainError(f"log of nonpositive value in {node}: {arg_node} = {ctx.mp.nstr(value, 15)}")
        return ctx.mp.log(value)

    return log


def _compile_sign(node):
    arg_node = node.args[0]
    arg = _compile(arg_node)

    def sign(x, ctx):
        value = arg(x, ctx)
        if value == 0:
            raise DomainError(f"derivative undefined at kink: {arg_node} = 0")
        return ctx.mp.one if value > 0 else -ctx.mp.one

    return sign
