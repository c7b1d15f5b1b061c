"""Symbolic scalar expressions.

Expressions are immutable trees over named symbols.  ``simplify`` maps any tree
to a canonical form: a fully expanded Laurent polynomial whose atoms are
symbols, ``sin``/``cos``/``arctan`` of canonical arguments, and negative powers
of canonical sums.  Two canonical trees are equal exactly when they are
structurally identical, which is what the golden tests rely on.
"""
from __future__ import annotations

import enum
import math
import numbers
import random
import re
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

Number = Union[Fraction, float]
Bindings = Mapping[str, float]

FUNCTIONS = ("sin", "cos", "arctan")


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnboundSymbolError(ExprError):
    def __init__(self, name: str):
        super().__init__(f"unbound symbol {name!r}")
        self.name = name


class EvaluationError(ExprError):
    pass


# --------------------------------------------------------------------------
# nodes
# --------------------------------------------------------------------------

class Expr:
    """Base class for expression nodes.

    Equality and hashing go through ``key``, a nested tuple that also defines
    the total order used to sort terms and factors.
    """

    __slots__ = ("key", "_hash", "_poly")

    def _init_key(self, key: tuple) -> None:
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "_hash", hash(key))
        object.__setattr__(self, "_poly", None)

    def __setattr__(self, name, value):
        raise AttributeError("Expr is immutable")

    def __eq__(self, other):
        return isinstance(other, Expr) and self._hash == other._hash and self.key == other.key

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Expr({to_text(self)!r})"

    def __str__(self):
        return to_text(self)

    # arithmetic returns canonical results
    def __add__(self, other):
        return _from_poly(_padd(_poly(self), _poly(as_expr(other))))

    __radd__ = __add__

    def __neg__(self):
        return _from_poly(_pscale(_poly(self), Fraction(-1)))

    def __sub__(self, other):
        return self + (-as_expr(other))

    def __rsub__(self, other):
        return as_expr(other) + (-self)

    def __mul__(self, other):
        return _from_poly(_pmul(_poly(self), _poly(as_expr(other))))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * Pow(as_expr(other), -1)

    def __rtruediv__(self, other):
        return as_expr(other) * Pow(self, -1)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise ExprError("only integer exponents are supported")
        return simplify(Pow(self, n))


class Num(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, numbers.Integral):
            value = Fraction(int(value))
        elif isinstance(value, numbers.Real) and not isinstance(value, Fraction):
            value = float(value)
            if not math.isfinite(value):
                raise ExprError(f"non-finite constant {value!r}")
        elif not isinstance(value, Fraction):
            raise TypeError(f"unsupported constant type {type(value).__name__}")
        object.__setattr__(self, "value", value)
        self._init_key((0, value))


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)
        self._init_key((1, name))


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ExprError(f"unknown function {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "arg", arg)
        self._init_key((2, name, arg.key))


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Sequence[Expr]):
        terms = tuple(terms)
        object.__setattr__(self, "terms", terms)
        self._init_key((3, tuple(t.key for t in terms)))


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Sequence[Expr]):
        factors = tuple(factors)
        object.__setattr__(self, "factors", factors)
        self._init_key((4, tuple(f.key for f in factors)))


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        if not isinstance(exp, int) or isinstance(exp, bool):
            raise ExprError("only integer exponents are supported")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exp", exp)
        self._init_key((5, base.key, exp))


ZERO = Num(0)
ONE = Num(1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    return Num(value)


def sym(name: str) -> Sym:
    return Sym(name)


def symbols(names: str) -> Tuple[Sym, ...]:
    return tuple(Sym(n) for n in names.replace(",", " ").split())


def sin(e) -> Expr:
    return simplify(Func("sin", as_expr(e)))


def cos(e) -> Expr:
    return simplify(Func("cos", as_expr(e)))


def arctan(e) -> Expr:
    return simplify(Func("arctan", as_expr(e)))


# --------------------------------------------------------------------------
# canonical polynomial representation
#
# poly: dict monomial -> nonzero coefficient
# monomial: tuple of (atom, exponent) sorted by atom key, exponents nonzero
# --------------------------------------------------------------------------

Monomial = Tuple[Tuple[Expr, int], ...]
Poly = Dict[Monomial, Number]


def _mono_key(mono: Monomial) -> tuple:
    return tuple((atom.key, e) for atom, e in mono)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps: Dict[Expr, int] = dict(a)
    for atom, e in b:
        exps[atom] = exps.get(atom, 0) + e
    items = [(atom, e) for atom, e in exps.items() if e != 0]
    items.sort(key=lambda item: item[0].key)
    return tuple(items)


def _padd(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for mono, c in b.items():
        s = out.get(mono, 0) + c
        if s == 0:
            out.pop(mono, None)
        else:
            out[mono] = s
    return out


def _pscale(a: Poly, c: Number) -> Poly:
    if c == 0:
        return {}
    return {mono: v * c for mono, v in a.items()}


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            mono = _mono_mul(ma, mb)
            s = out.get(mono, 0) + ca * cb
            if s == 0:
                out.pop(mono, None)
            else:
                out[mono] = s
    # positive powers of sum atoms can appear after cancelling a reciprocal
    if any(isinstance(atom, Add) and e > 0 for mono in out for atom, e in mono):
        return _expand_sum_atoms(out)
    return out


def _expand_sum_atoms(p: Poly) -> Poly:
    out: Poly = {}
    for mono, c in p.items():
        term: Poly = {(): c}
        rest = []
        for atom, e in mono:
            if isinstance(atom, Add) and e > 0:
                term = _pmul(term, _ppow(_poly(atom), e))
            else:
                rest.append((atom, e))
        term = _pmul(term, {tuple(rest): 1})
        out = _padd(out, term)
    return out


def _ppow(p: Poly, n: int) -> Poly:
    if n == 0:
        return {(): Fraction(1)}
    if n > 0:
        result: Poly = {(): Fraction(1)}
        base = p
        while n:
            if n & 1:
                result = _pmul(result, base)
            n >>= 1
            if n:
                base = _pmul(base, base)
        return result
    # negative powers
    if not p:
        raise ExprError("division by zero")
    if len(p) == 1:
        (mono, c), = p.items()
        inv = tuple((atom, e * n) for atom, e in mono)
        return _pmul({(): _num_pow(c, n)}, {inv: Fraction(1)})
    # factor out the leading coefficient so the reciprocal atom is normalized
    lead_mono = min(p, key=_mono_key)
    c = p[lead_mono]
    atom = _from_poly(_pscale(p, 1 / c))
    return {((atom, n),): _num_pow(c, n)}


def _num_pow(c: Number, n: int) -> Number:
    if c == 0 and n < 0:
        raise ExprError("division by zero")
    return c ** n


def _fold_func(name: str, arg: Expr):
    """Constant-fold a function of a number; None when it must stay symbolic."""
    if not isinstance(arg, Num):
        return None
    v = arg.value
    if isinstance(v, float):
        return Num(_MATH[name](v))
    if v == 0:
        return Num(1) if name == "cos" else Num(0)
    return None


def _poly(e: Expr) -> Poly:
    cached = e._poly
    if cached is not None:
        return cached
    if isinstance(e, Num):
        p: Poly = {} if e.value == 0 else {(): e.value}
    elif isinstance(e, Sym):
        p = {((e, 1),): Fraction(1)}
    elif isinstance(e, Func):
        arg = simplify(e.arg)
        folded = _fold_func(e.name, arg)
        if folded is not None:
            p = _poly(folded)
        else:
            atom = e if arg is e.arg else Func(e.name, arg)
            p = {((atom, 1),): Fraction(1)}
    elif isinstance(e, Add):
        p = {}
        for t in e.terms:
            p = _padd(p, _poly(t))
    elif isinstance(e, Mul):
        p = {(): Fraction(1)}
        for f in e.factors:
            p = _pmul(p, _poly(f))
            if not p:
                break
    elif isinstance(e, Pow):
        p = _ppow(_poly(e.base), e.exp)
    else:
        raise TypeError(f"not an expression node: {e!r}")
    object.__setattr__(e, "_poly", p)
    return p


def _term_node(mono: Monomial, c: Number) -> Expr:
    factors: List[Expr] = [atom if e == 1 else Pow(atom, e) for atom, e in mono]
    if not factors:
        return Num(c)
    if c != 1:
        factors.insert(0, Num(c))
    if len(factors) == 1:
        return factors[0]
    return Mul(factors)


def _from_poly(p: Poly) -> Expr:
    if not p:
        return ZERO
    monos = sorted(p, key=_mono_key)
    terms = [_term_node(m, p[m]) for m in monos]
    out = terms[0] if len(terms) == 1 else Add(terms)
    object.__setattr__(out, "_poly", p)
    return out


def simplify(e: Expr) -> Expr:
    """Return the canonical form of ``e``."""
    return _from_poly(_poly(e))


def expand(e: Expr) -> Expr:
    return simplify(e)


def is_zero(e: Expr) -> bool:
    return not _poly(e)


def is_constant(e: Expr) -> bool:
    p = _poly(e)
    return not p or (len(p) == 1 and () in p)


def constant_value(e: Expr) -> Number:
    p = _poly(e)
    if not p:
        return Fraction(0)
    if len(p) == 1 and () in p:
        return p[()]
    raise ExprError(f"{to_text(e)} is not a constant")


# --------------------------------------------------------------------------
# traversal helpers
# --------------------------------------------------------------------------

def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, Func):
        return (e.arg,)
    if isinstance(e, Add):
        return e.terms
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, Pow):
        return (e.base,)
    return ()


def free_symbols(e: Expr) -> frozenset:
    names = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Sym):
            names.add(node.name)
        else:
            stack.extend(children(node))
    return frozenset(names)


def substitute(e: Expr, mapping: Mapping[str, object]) -> Expr:
    """Replace symbols by expressions or numbers and canonicalize."""
    repl = {name: as_expr(v) for name, v in mapping.items()}
    memo: Dict[Expr, Expr] = {}

    def walk(node: Expr) -> Expr:
        if node in memo:
            return memo[node]
        if isinstance(node, Sym):
            out = repl.get(node.name, node)
        elif isinstance(node, Num):
            out = node
        elif isinstance(node, Func):
            out = Func(node.name, walk(node.arg))
        elif isinstance(node, Add):
            out = Add([walk(t) for t in node.terms])
        elif isinstance(node, Mul):
            out = Mul([walk(f) for f in node.factors])
        else:
            out = Pow(walk(node.base), node.exp)
        memo[node] = out
        return out

    return simplify(walk(e))


# --------------------------------------------------------------------------
# differentiation
# --------------------------------------------------------------------------

def _pdiff(p: Poly, name: str, memo: Dict[Expr, Poly]) -> Poly:
    out: Poly = {}
    for mono, c in p.items():
        for i, (atom, e) in enumerate(mono):
            d_atom = _atom_diff(atom, name, memo)
            if not d_atom:
                continue
            rest = mono[:i] + mono[i + 1:]
            if e != 1:
                rest = _mono_mul(rest, ((atom, e - 1),))
            term = _pmul(d_atom, {rest: c * e})
            out = _padd(out, term)
    return out


def _atom_diff(atom: Expr, name: str, memo: Dict[Expr, Poly]) -> Poly:
    if atom in memo:
        return memo[atom]
    if isinstance(atom, Sym):
        d: Poly = {(): Fraction(1)} if atom.name == name else {}
    elif isinstance(atom, Func):
        d_arg = _pdiff(_poly(atom.arg), name, memo)
        if not d_arg:
            d = {}
        elif atom.name == "sin":
            d = _pmul(_poly(Func("cos", atom.arg)), d_arg)
        elif atom.name == "cos":
            d = _pmul(_pscale(_poly(Func("sin", atom.arg)), Fraction(-1)), d_arg)
        else:
            one_plus_sq = _padd({(): Fraction(1)}, _pmul(_poly(atom.arg), _poly(atom.arg)))
            d = _pmul(_ppow(one_plus_sq, -1), d_arg)
    elif isinstance(atom, Add):
        d = _pdiff(_poly(atom), name, memo)
    else:
        raise TypeError(f"unexpected atom {atom!r}")
    memo[atom] = d
    return d


def differentiate(e: Expr, s) -> Expr:
    """Partial derivative of ``e`` with respect to symbol ``s`` (name or Sym)."""
    name = s.name if isinstance(s, Sym) else s
    return _from_poly(_pdiff(_poly(e), name, {}))


# --------------------------------------------------------------------------
# printing
# --------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _num_text(v: Number) -> Tuple[str, int]:
    if isinstance(v, float):
        text = repr(v)
        return text, (_PREC_NEG if v < 0 else _PREC_ATOM)
    if v.denominator == 1:
        return str(v.numerator), (_PREC_NEG if v < 0 else _PREC_ATOM)
    return f"{v.numerator}/{v.denominator}", _PREC_MUL


def _text(e: Expr) -> Tuple[str, int]:
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, Sym):
        return e.name, _PREC_ATOM
    if isinstance(e, Func):
        return f"{e.name}({_text(e.arg)[0]})", _PREC_ATOM
    if isinstance(e, Pow):
        base, prec = _text(e.base)
        if prec < _PREC_ATOM:
            base = f"({base})"
        return f"{base}^{e.exp}", _PREC_POW
    if isinstance(e, Mul):
        parts = []
        for i, f in enumerate(e.factors):
            text, prec = _text(f)
            if isinstance(f, Num) and i == 0:
                if f.value == -1 and len(e.factors) > 1:
                    parts.append("-")
                    continue
                parts.append(text)
                continue
            if prec <= _PREC_MUL:
                text = f"({text})"
            parts.append(text)
        if parts[0] == "-":
            return "-" + "*".join(parts[1:]), _PREC_NEG
        lead = e.factors[0]
        neg = isinstance(lead, Num) and lead.value < 0
        return "*".join(parts), (_PREC_NEG if neg else _PREC_MUL)
    if isinstance(e, Add):
        out = ""
        for i, t in enumerate(e.terms):
            text, prec = _text(t)
            if prec <= _PREC_ADD:
                text = f"({text})"
            if i == 0:
                out = text
            elif text.startswith("-"):
                out += " - " + text[1:]
            else:
                out += " + " + text
        return out, _PREC_ADD
    raise TypeError(f"not an expression node: {e!r}")


def to_text(e: Expr) -> str:
    """Render ``e`` in the input grammar; ``parse(to_text(e))`` reproduces it."""
    return _text(e)[0]


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: List[Tuple[str, str, int]] = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos]!r}", self._offset(pos))
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def _offset(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        return ParseError(message, self._offset(tok[2]))

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value or tok[0] == "end":
            raise self.error(f"expected {value!r}", tok)
        return tok

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        e = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Mul([Num(-1), t]))
        return terms[0] if len(terms) == 1 else Add(terms)

    def term(self) -> Expr:
        factors = [self.unary()]
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            f = self.unary()
            factors.append(f if op == "*" else Pow(f, -1))
        return factors[0] if len(factors) == 1 else Mul(factors)

    def unary(self) -> Expr:
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Mul([Num(-1), self.unary()])
        if self.peek()[1] == "+" and self.peek()[0] == "op":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            tok = self.peek()
            exponent = simplify(self.unary())
            if not (isinstance(exponent, Num) and isinstance(exponent.value, Fraction)
                    and exponent.value.denominator == 1):
                raise self.error("exponent must be an integer constant", tok)
            return Pow(base, int(exponent.value))
        return base

    def atom(self) -> Expr:
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            if any(ch in value for ch in ".eE"):
                return Num(float(value))
            return Num(int(value))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if value not in FUNCTIONS:
                    raise self.error(f"unknown function {value!r}", tok)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Func(value, arg)
            return Sym(value)
        if kind == "op" and value == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected token {value!r}", tok)


def parse_raw(text: str) -> Expr:
    """Parse without canonicalizing."""
    return _Parser(text).parse()


def parse(text: str) -> Expr:
    """Parse ``text`` and return its canonical form."""
    try:
        return simplify(parse_raw(text))
    except ParseError:
        raise
    except ExprError as exc:
        raise ParseError(str(exc), 0) from None


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

_MATH = {"sin": math.sin, "cos": math.cos, "arctan": math.atan}


def _check(value: float) -> float:
    if not math.isfinite(value):
        raise EvaluationError(f"non-finite intermediate value {value}")
    return value


def evaluate(e: Expr, b: Bindings) -> float:
    """Evaluate ``e`` in IEEE doubles with every free symbol bound by ``b``."""
    memo: Dict[Expr, float] = {}

    def walk(node: Expr) -> float:
        if node in memo:
            return memo[node]
        if isinstance(node, Num):
            out = float(node.value)
        elif isinstance(node, Sym):
            try:
                out = float(b[node.name])
            except KeyError:
                raise UnboundSymbolError(node.name) from None
        elif isinstance(node, Func):
            out = _MATH[node.name](walk(node.arg))
        elif isinstance(node, Add):
            out = math.fsum(walk(t) for t in node.terms)
        elif isinstance(node, Mul):
            out = 1.0
            for f in node.factors:
                out *= walk(f)
        else:
            base = walk(node.base)
            try:
                out = base ** node.exp
            except ZeroDivisionError:
                raise EvaluationError(f"division by zero in {to_text(node)}") from None
            except OverflowError:
                raise EvaluationError(f"overflow in {to_text(node)}") from None
        memo[node] = _check(out)
        return out

    return walk(e)


class _Codegen:
    def __init__(self, backend: str):
        self.backend = backend
        self.consts: Dict[str, object] = {}
        self.lines: List[str] = []
        self.names: Dict[Expr, str] = {}

    def const(self, v: Number) -> str:
        if self.backend == "math":
            return repr(float(v))
        name = f"_c{len(self.consts)}"
        import mpmath

        if isinstance(v, Fraction):
            self.consts[name] = mpmath.mpf(v.numerator) / v.denominator
        else:
            self.consts[name] = mpmath.mpf(v)
        return name

    def emit(self, node: Expr, symbol_names: Dict[str, str]) -> str:
        if node in self.names:
            return self.names[node]
        if isinstance(node, Num):
            return self.const(node.value)
        if isinstance(node, Sym):
            try:
                return symbol_names[node.name]
            except KeyError:
                raise UnboundSymbolError(node.name) from None
        if isinstance(node, Func):
            code = f"_{node.name}({self.emit(node.arg, symbol_names)})"
        elif isinstance(node, Add):
            code = " + ".join(self.emit(t, symbol_names) for t in node.terms)
        elif isinstance(node, Mul):
            code = " * ".join(self.emit(f, symbol_names) for f in node.factors)
        else:
            code = f"{self.emit(node.base, symbol_names)} ** {node.exp}"
        var = f"_t{len(self.names)}"
        self.lines.append(f"    {var} = {code}")
        self.names[node] = var
        return var


def lambdify(exprs: Sequence[Expr], names: Sequence[str], backend: str = "math") -> Callable:
    """Compile expressions into ``f(*values) -> tuple`` with shared subexpressions.

    ``backend`` is ``"math"`` (floats) or ``"mpmath"`` (arbitrary precision at
    the ``mpmath.mp`` precision current when compiling).
    """
    gen = _Codegen(backend)
    args = [f"_a{i}" for i in range(len(names))]
    symbol_names = dict(zip(names, args))
    outs = [gen.emit(e, symbol_names) for e in exprs]
    src = f"def _f({', '.join(args)}):\n" + "\n".join(gen.lines)
    src += f"\n    return ({', '.join(outs)}{',' if len(outs) == 1 else ''})\n"
    if backend == "math":
        ns = {"_sin": math.sin, "_cos": math.cos, "_arctan": math.atan}
    elif backend == "mpmath":
        import mpmath

        ns = {"_sin": mpmath.sin, "_cos": mpmath.cos, "_arctan": mpmath.atan}
    else:
        raise ValueError(f"unknown backend {backend!r}")
    ns.update(gen.consts)
    exec(compile(src, "<lambdify>", "exec"), ns)
    return ns["_f"]


# --------------------------------------------------------------------------
# equality
# --------------------------------------------------------------------------

class Equality(enum.Enum):
    STRUCTURAL = "structurally-equal"
    NUMERIC = "numerically-equal"
    DIFFERENT = "not-equal"

    def __bool__(self):
        return self is not Equality.DIFFERENT


def equal_canonical(
    a: Expr,
    b: Expr,
    samples: int = 64,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    seed: int = 0,
) -> Equality:
    """Compare two expressions.

    Structural identity of the canonical forms is checked first; otherwise both
    are evaluated at ``samples`` random points with every symbol uniform in
    [-2, 2].  Points where either side cannot be evaluated are redrawn.
    """
    a, b = simplify(as_expr(a)), simplify(as_expr(b))
    if a == b:
        return Equality.STRUCTURAL
    names = sorted(free_symbols(a) | free_symbols(b))
    fa = lambdify([a], names)
    fb = lambdify([b], names)
    rng = random.Random(seed)
    good = 0
    attempts = 0
    while good < samples:
        attempts += 1
        if attempts > 20 * samples:
            return Equality.DIFFERENT
        point = [rng.uniform(-2.0, 2.0) for _ in names]
        try:
            va, = fa(*point)
            vb, = fb(*point)
        except (ZeroDivisionError, OverflowError, ValueError):
            continue
        if not (math.isfinite(va) and math.isfinite(vb)):
            continue
        good += 1
        if abs(va - vb) > rtol * max(abs(va), abs(vb)) + atol:
            return Equality.DIFFERENT
    return Equality.NUMERIC


def polynomial_coeffs(e: Expr, var: str) -> List[Expr]:
    """Coefficients of ``e`` as a polynomial in ``var`` (constant term first).

    Raises ``ExprError`` when ``var`` occurs other than as a non-negative
    integer power.
    """
    buckets: Dict[int, Poly] = {}
    for mono, c in _poly(e).items():
        power = 0
        rest = []
        for atom, k in mono:
            if isinstance(atom, Sym) and atom.name == var:
                power = k
            else:
                if var in free_symbols(atom):
                    raise ExprError(f"{to_text(e)} is not polynomial in {var}")
                rest.append((atom, k))
        if power < 0:
            raise ExprError(f"{to_text(e)} is not polynomial in {var}")
        buckets[power] = _padd(buckets.get(power, {}), {tuple(rest): c})
    if not buckets:
        return [ZERO]
    return [_from_poly(buckets.get(k, {})) for k in range(max(buckets) + 1)]


def from_coeffs(coeffs: Sequence, var: str) -> Expr:
    t = Sym(var)
    out: Poly = {}
    for k, c in enumerate(coeffs):
        out = _padd(out, _pmul(_poly(as_expr(c)), _ppow(_poly(t), k)))
    return _from_poly(out)


def integrate_polynomial(e: Expr, var: str, lower=0, upper=None) -> Expr:
    """Definite integral of a polynomial in ``var`` from ``lower`` to ``upper``.

    ``upper`` defaults to the symbol ``var`` itself, giving the antiderivative
    that vanishes at ``lower``.
    """
    coeffs = polynomial_coeffs(e, var)
    anti = from_coeffs([ZERO] + [c * Fraction(1, k + 1) for k, c in enumerate(coeffs)], var)
    hi = Sym(var) if upper is None else as_expr(upper)
    return substitute(anti, {var: hi}) - substitute(anti, {var: as_expr(lower)})


def evaluate_many(exprs: Iterable[Expr], b: Bindings) -> List[float]:
    return [evaluate(e, b) for e in exprs]
