"""Minimal expression kernel: parsing, normalization, differentiation and
decidable-in-practice zero testing.

Expressions are plain sympy objects restricted to a fixed fragment:
rational constants, declared symbols, sums, products, integer/rational
powers, exp, sin, cos, sqrt, and opaque (unanalyzed) function symbols.
All operations are pure; expressions are immutable and thread-safe.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass

import sympy as sp
from sympy.core.function import AppliedUndef, UndefinedFunction
from sympy.simplify.fu import TR5, TR8

__all__ = [
    "VarKind", "VarId", "Context",
    "ExprError", "ParseError", "UndeclaredSymbolError",
    "UnboundSymbolError", "DomainError", "InconclusiveError",
    "Verdict", "parse_expr", "normalize", "differentiate", "substitute",
    "zero_verdict", "is_zero", "eval_numeric", "to_dsl",
]

BUILTIN_FUNCTIONS = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "sqrt": sp.sqrt}


class VarKind(enum.Enum):
    SPATIAL = "spatial"
    TIME = "time"
    PARAMETER = "parameter"
    DEPENDENT = "dependent"
    NOISE = "noise"


@dataclass(frozen=True)
class VarId:
    kind: VarKind
    index: int = 0

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("variable index must be >= 0")


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message, line, col):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UndeclaredSymbolError(ParseError):
    def __init__(self, name, line, col):
        super().__init__(f"undeclared symbol '{name}'", line, col)
        self.name = name


class UnboundSymbolError(ExprError):
    pass


class DomainError(ExprError):
    pass


class InconclusiveError(ExprError):
    """Raised by is_zero when normalization cannot decide."""


class Context:
    """Declaration table: spatial variables, time, parameters, noise names,
    dependent symbols and opaque function symbols.

    Parameters may carry assumptions ("positive" or "nonzero"), used both by
    sympy's simplifier and by the randomized zero-test probe when picking
    sample values.
    """

    def __init__(self, spatial=(), params=None, noises=(), dependent=(),
                 opaque=(), time="t"):
        self.time_name = time
        self.t = sp.Symbol(time, real=True)
        self.spatial_names = tuple(spatial)
        self.spatial = tuple(sp.Symbol(n, real=True) for n in self.spatial_names)
        self.noise_names = tuple(noises)
        if params is None:
            params = {}
        elif not isinstance(params, dict):
            params = {n: None for n in params}
        self.param_assumptions = dict(params)
        self.params = {}
        for name, assumption in params.items():
            kwargs = {"real": True}
            if assumption == "positive":
                kwargs["positive"] = True
            elif assumption == "nonzero":
                kwargs["nonzero"] = True
            elif assumption not in (None, "real"):
                raise ValueError(f"unknown assumption '{assumption}' for parameter {name}")
            self.params[name] = sp.Symbol(name, **kwargs)
        self.dependent_names = tuple(dependent)
        self.dependent = tuple(sp.Symbol(n, real=True) for n in self.dependent_names)
        self.opaque_names = tuple(opaque)
        self.opaque = {n: sp.Function(n) for n in self.opaque_names}

        self._symbols = {}
        for sym in (*self.spatial, self.t, *self.params.values(), *self.dependent):
            if sym.name in self._symbols:
                raise ValueError(f"duplicate declaration of '{sym.name}'")
            self._symbols[sym.name] = sym

    @property
    def n(self):
        return len(self.spatial)

    @property
    def m(self):
        return len(self.noise_names)

    def symbol(self, name):
        try:
            return self._symbols[name]
        except KeyError:
            raise KeyError(f"'{name}' is not declared in this context") from None

    def is_declared(self, name):
        return name in self._symbols or name in self.opaque

    def resolve(self, var: VarId) -> sp.Symbol:
        if var.kind is VarKind.SPATIAL:
            pool = self.spatial
        elif var.kind is VarKind.TIME:
            return self.t
        elif var.kind is VarKind.PARAMETER:
            pool = tuple(self.params.values())
        elif var.kind is VarKind.DEPENDENT:
            pool = self.dependent
        else:
            raise ValueError("noise variables have no expression-level symbol")
        if var.index >= len(pool):
            raise IndexError(f"{var.kind.value} index {var.index} out of range")
        return pool[var.index]

    def with_params(self, extra):
        """New context extended with additional parameter declarations."""
        merged = dict(self.param_assumptions)
        for name, assumption in dict(extra).items():
            if name in merged and merged[name] != assumption:
                raise ValueError(f"conflicting redeclaration of parameter '{name}'")
            merged[name] = assumption
        return Context(spatial=self.spatial_names, params=merged,
                       noises=self.noise_names, dependent=self.dependent_names,
                       opaque=self.opaque_names, time=self.time_name)


# ---------------------------------------------------------------------------
# parsing

_OPS = set("+-*/^(),[]=")


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < len(text) and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < len(text) and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            tokens.append(("NUMBER", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("NAME", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in _OPS:
            tokens.append(("OP", ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character '{ch}'", line, col)
    tokens.append(("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens, context):
        self.tokens = tokens
        self.pos = 0
        self.ctx = context

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, val, line, col = self.peek()
        if val != value:
            shown = val if kind != "EOF" else "end of input"
            raise ParseError(f"expected '{value}', found '{shown}'", line, col)
        return self.advance()

    def parse(self):
        e = self.expr()
        kind, val, line, col = self.peek()
        if kind != "EOF":
            raise ParseError(f"unexpected trailing input '{val}'", line, col)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            rhs = self.unary()
            e = e * rhs if op == "*" else e / rhs
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.advance()
            return -self.unary()
        if self.peek()[1] == "+":
            self.advance()
            return self.unary()
        return self.factor()

    def factor(self):
        e = self.base()
        if self.peek()[1] == "^":
            self.advance()
            return e ** self.exponent()
        return e

    def exponent(self):
        kind, val, line, col = self.peek()
        if val == "-":
            self.advance()
            return -self.exponent()
        if val == "(":
            self.advance()
            p = self.exponent()
            if self.peek()[1] == "/":
                self.advance()
                q = self.exponent()
                p = sp.Rational(p, q)
            self.expect(")")
            return p
        if kind != "NUMBER" or "." in val:
            raise ParseError("exponent must be an integer or parenthesized rational", line, col)
        self.advance()
        return sp.Integer(val)

    def base(self):
        kind, val, line, col = self.advance()
        if kind == "NUMBER":
            return sp.Integer(val) if "." not in val else sp.Rational(val)
        if kind == "NAME":
            if self.peek()[1] == "(":
                self.advance()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if val in BUILTIN_FUNCTIONS:
                    return BUILTIN_FUNCTIONS[val](*args)
                if val in self.ctx.opaque:
                    return self.ctx.opaque[val](*args)
                raise UndeclaredSymbolError(val, line, col)
            if self.ctx.is_declared(val) and val not in self.ctx.opaque:
                return self.ctx.symbol(val)
            raise UndeclaredSymbolError(val, line, col)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        shown = val if kind != "EOF" else "end of input"
        raise ParseError(f"unexpected '{shown}'", line, col)


def parse_expr(text: str, context: Context) -> sp.Expr:
    """Parse a DSL expression against the declared names in `context`.

    Raises ParseError (with line/column) on malformed input and
    UndeclaredSymbolError on free names missing from the context.
    """
    return normalize(_Parser(_tokenize(text), context).parse())


# ---------------------------------------------------------------------------
# normalization and calculus

def normalize(e) -> sp.Expr:
    """Canonical form within the supported fragment: expand, rewrite
    sin^2 -> 1 - cos^2, product-to-sum for sin*cos pairs, cancel rational
    parts. Idempotent (iterated to a fixpoint)."""
    e = sp.sympify(e)
    for _ in range(4):
        new = sp.expand(e)
        if new.has(sp.sin, sp.cos):
            new = sp.expand(TR8(TR5(new)))
        try:
            new = sp.cancel(new)
        except (sp.PolynomialError, NotImplementedError):
            pass
        new = sp.expand(new)
        if new == e:
            return new
        e = new
    return e


def differentiate(e, v, context: Context | None = None) -> sp.Expr:
    """Exact partial derivative; opaque function symbols yield derivative
    markers. Total on the fragment."""
    if isinstance(v, VarId):
        if context is None:
            raise ValueError("a Context is required to resolve a VarId")
        v = context.resolve(v)
    return normalize(sp.diff(sp.sympify(e), v))


def substitute(e, bindings, context: Context | None = None) -> sp.Expr:
    """Simultaneous substitution followed by normalization.

    Keys may be symbols, VarIds, or opaque function symbols (values then
    being sympy Lambdas); derivative markers of substituted functions are
    evaluated.
    """
    e = sp.sympify(e)
    plain = {}
    funcs = {}
    for k, val in dict(bindings).items():
        if isinstance(k, VarId):
            if context is None:
                raise ValueError("a Context is required to resolve a VarId")
            k = context.resolve(k)
        if isinstance(k, UndefinedFunction):
            funcs[k] = val
        else:
            plain[k] = sp.sympify(val)
    if plain:
        e = e.subs(plain, simultaneous=True)
    if funcs:
        e = e.subs(funcs).doit()
    return normalize(e)


# ---------------------------------------------------------------------------
# zero testing

class Verdict(enum.Enum):
    ZERO = "zero"
    NONZERO = "nonzero"
    INCONCLUSIVE = "inconclusive"


_PROBE_POINTS = 8
_PROBE_TOL = 1e-10


def _sample_value(sym, rng):
    q = sp.Rational(rng.randint(1, 48), rng.randint(1, 16))
    if sym.is_positive:
        return q
    if rng.random() < 0.5:
        return -q
    return q


def _probe(e, rng, points=_PROBE_POINTS):
    """Randomized numeric evaluation at rational sample points.

    Returns 'zero' if every sample is below tolerance, 'nonzero' if some
    sample is clearly away from zero, 'mixed' otherwise.
    """
    symbols = sorted(e.free_symbols, key=lambda s: s.name)
    max_abs = 0.0
    evaluated = 0
    for _ in range(4 * points):
        if evaluated >= points:
            break
        point = {s: _sample_value(s, rng) for s in symbols}
        try:
            val = complex(e.subs(point).evalf(25))
        except (TypeError, ValueError):
            continue
        if val != val:  # NaN
            continue
        evaluated += 1
        max_abs = max(max_abs, abs(val))
        if abs(val) > 1e-6:
            return "nonzero"
    if evaluated == 0:
        return "mixed"
    return "zero" if max_abs < _PROBE_TOL else "mixed"


def _opaque_atoms(e):
    return e.atoms(AppliedUndef, sp.Derivative)


def zero_verdict(e, seed: int = 0) -> Verdict:
    """Tri-state zero test. Structural normalization first; a randomized
    rational-point probe guards against simplifier gaps and downgrades any
    disagreement to INCONCLUSIVE rather than guessing a boolean.
    """
    rng = random.Random(seed ^ 0x5EED)
    n = normalize(e)
    if n.is_zero is True:
        return Verdict.ZERO
    atoms = _opaque_atoms(n)
    if atoms:
        return _structural_verdict(n, atoms, seed)
    if n.is_number:
        return Verdict.NONZERO if n != 0 else Verdict.ZERO
    # expanded polynomials over QQ(params) are already canonical
    if n.free_symbols and not n.atoms(sp.Function) and n.is_polynomial(*n.free_symbols):
        return Verdict.NONZERO
    s = sp.simplify(sp.powsimp(n))
    if s.is_zero is True:
        return Verdict.ZERO if _probe(n, rng) == "zero" else Verdict.INCONCLUSIVE
    outcome = _probe(s, rng)
    if outcome == "nonzero":
        return Verdict.NONZERO
    if outcome == "zero":
        # simplifier says nonzero, every sample vanished: do not guess
        return Verdict.INCONCLUSIVE
    return Verdict.INCONCLUSIVE


def _structural_verdict(n, atoms, seed):
    """Zero test in the presence of opaque function symbols: collect the
    coefficients of independent derivative/function markers and test each."""
    try:
        poly = sp.Poly(n, *sorted(atoms, key=sp.default_sort_key))
    except (sp.PolynomialError, sp.polys.polyerrors.GeneratorsNeeded):
        return Verdict.INCONCLUSIVE
    verdicts = set()
    for coeff in poly.coeffs():
        if _opaque_atoms(coeff):
            return Verdict.INCONCLUSIVE
        verdicts.add(zero_verdict(coeff, seed=seed))
    if verdicts <= {Verdict.ZERO}:
        return Verdict.ZERO
    if Verdict.NONZERO in verdicts:
        return Verdict.NONZERO
    return Verdict.INCONCLUSIVE


def is_zero(e, seed: int = 0) -> bool:
    """Boolean zero test; raises InconclusiveError when undecidable."""
    verdict = zero_verdict(e, seed=seed)
    if verdict is Verdict.INCONCLUSIVE:
        raise InconclusiveError(f"cannot decide whether {e} vanishes identically")
    return verdict is Verdict.ZERO


# ---------------------------------------------------------------------------
# numeric evaluation and serialization

def eval_numeric(e, point, context: Context | None = None) -> float:
    """Double-precision evaluation at a full binding of the free symbols."""
    e = sp.sympify(e)
    if _opaque_atoms(e):
        raise DomainError("expression contains opaque function symbols")
    resolved = {}
    for k, val in dict(point).items():
        if isinstance(k, VarId):
            if context is None:
                raise ValueError("a Context is required to resolve a VarId")
            k = context.resolve(k)
        elif isinstance(k, str):
            if context is None:
                raise ValueError("a Context is required to resolve names")
            k = context.symbol(k)
        resolved[k] = sp.Float(val)
    missing = e.free_symbols - set(resolved)
    if missing:
        names = ", ".join(sorted(s.name for s in missing))
        raise UnboundSymbolError(f"unbound symbols: {names}")
    val = e.subs(resolved).evalf()
    if val.has(sp.zoo, sp.oo, -sp.oo, sp.nan) or not val.is_real:
        raise DomainError(f"evaluation left the real domain: {val}")
    return float(val)


def to_dsl(e) -> str:
    """Canonical string form, parseable by parse_expr."""
    return sp.sstr(normalize(e), order="lex").replace("**", "^")
