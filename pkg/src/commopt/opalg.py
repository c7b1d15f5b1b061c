"""Noncommutative operator algebra of positions and conjugate momenta.

An operator is kept normal-ordered: a sum over momentum monomials, each carrying
a complex position-function coefficient on its left.  Positions are ordinary
symbols; the momentum conjugate to a position symbol ``y`` is identified by the
name ``y``.  Symbols without a conjugate momentum in play (parameters such as
``w`` or ``eps``) behave as c-numbers automatically.

The only reordering rule needed is ``p_j f(y) = f(y) p_j - i df/dy_j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, Mapping, Sequence, Tuple

from .expr import ZERO, Expr, ExprError, as_expr, differentiate, is_zero, simplify, to_text

MomMonomial = Tuple[Tuple[str, int], ...]


class MomentumDegreeError(ExprError):
    """Raised when a position function is requested from an operator with momenta."""


@dataclass(frozen=True)
class Complex:
    """Complex scalar field element with expression-valued parts."""

    re: Expr
    im: Expr

    def __add__(self, other: "Complex") -> "Complex":
        return Complex(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "Complex") -> "Complex":
        return Complex(self.re - other.re, self.im - other.im)

    def __mul__(self, other: "Complex") -> "Complex":
        return Complex(self.re * other.re - self.im * other.im,
                       self.re * other.im + self.im * other.re)

    def is_zero(self) -> bool:
        return is_zero(self.re) and is_zero(self.im)

    def scale(self, factor: Expr) -> "Complex":
        return Complex(self.re * factor, self.im * factor)

    def times_minus_i(self) -> "Complex":
        return Complex(self.im, -self.re)


I = Complex(ZERO, as_expr(1))


def _mom_mul(a: MomMonomial, b: MomMonomial) -> MomMonomial:
    exps = dict(a)
    for name, k in b:
        exps[name] = exps.get(name, 0) + k
    return tuple(sorted(exps.items()))


@dataclass(frozen=True)
class OperatorTerm:
    """One normal-ordered term ``coeff * pos * P^mom``.

    ``coeff`` is an exact Gaussian rational ``(re, im)``; ``pos`` is a position
    function carrying no numeric prefactor beyond what canonical form leaves.
    """

    coeff: Tuple[Fraction, Fraction]
    pos: Expr
    mom: MomMonomial


class OperatorPoly:
    """Normal-ordered operator polynomial, keyed by momentum monomial."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[MomMonomial, Complex] = None):
        clean: Dict[MomMonomial, Complex] = {}
        for mom, c in (terms or {}).items():
            mom = tuple(sorted((n, k) for n, k in mom if k))
            c = Complex(simplify(c.re), simplify(c.im))
            if mom in clean:
                c = clean[mom] + c
            if c.is_zero():
                clean.pop(mom, None)
            else:
                clean[mom] = c
        self._terms = clean

    # constructors -----------------------------------------------------
    @classmethod
    def position(cls, f) -> "OperatorPoly":
        return cls({(): Complex(as_expr(f), ZERO)})

    @classmethod
    def momentum(cls, name: str, power: int = 1) -> "OperatorPoly":
        return cls({((name, power),): Complex(as_expr(1), ZERO)})

    @classmethod
    def scalar(cls, re=0, im=0) -> "OperatorPoly":
        return cls({(): Complex(as_expr(re), as_expr(im))})

    # introspection ----------------------------------------------------
    @property
    def terms(self) -> Dict[MomMonomial, Complex]:
        return dict(self._terms)

    def items(self) -> Iterator[Tuple[MomMonomial, Complex]]:
        for mom in sorted(self._terms):
            yield mom, self._terms[mom]

    def split_terms(self) -> Iterator[OperatorTerm]:
        """Split into terms with Gaussian-rational coefficients."""
        from .expr import Add, Mul, Num

        for mom, c in self.items():
            for part, unit in ((c.re, (1, 0)), (c.im, (0, 1))):
                if is_zero(part):
                    continue
                pieces = part.terms if isinstance(part, Add) else (part,)
                for piece in pieces:
                    k = Fraction(1)
                    pos = piece
                    if isinstance(piece, Num) and isinstance(piece.value, Fraction):
                        k, pos = piece.value, as_expr(1)
                    elif isinstance(piece, Mul) and isinstance(piece.factors[0], Num) \
                            and isinstance(piece.factors[0].value, Fraction):
                        k = piece.factors[0].value
                        pos = simplify(Mul(piece.factors[1:]))
                    yield OperatorTerm((k * unit[0], k * unit[1]), pos, mom)

    def degree(self) -> int:
        return max((sum(k for _, k in mom) for mom in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # arithmetic -------------------------------------------------------
    def __add__(self, other: "OperatorPoly") -> "OperatorPoly":
        merged = dict(self._terms)
        for mom, c in other._terms.items():
            merged[mom] = merged[mom] + c if mom in merged else c
        return OperatorPoly(merged)

    def __neg__(self) -> "OperatorPoly":
        return OperatorPoly({m: Complex(-c.re, -c.im) for m, c in self._terms.items()})

    def __sub__(self, other: "OperatorPoly") -> "OperatorPoly":
        return self + (-other)

    def __mul__(self, other: "OperatorPoly") -> "OperatorPoly":
        return normal_order_product(self, other)

    def scale(self, c: Complex) -> "OperatorPoly":
        return OperatorPoly({m: v * c for m, v in self._terms.items()})

    def times_i_power(self, k: int) -> "OperatorPoly":
        unit = Complex(as_expr(1), ZERO)
        for _ in range(k % 4):
            unit = unit * I
        return self.scale(unit)

    def __repr__(self):
        return f"OperatorPoly({to_text_op(self)!r})"

    def __str__(self):
        return to_text_op(self)


def _left_momentum(name: str, b: OperatorPoly) -> OperatorPoly:
    """Normal-ordered ``p_name * b``: one application of the swap rule per term."""
    out: Dict[MomMonomial, Complex] = {}

    def put(mom, c):
        out[mom] = out[mom] + c if mom in out else c

    for mom, c in b._terms.items():
        put(_mom_mul(((name, 1),), mom), c)
        d = Complex(differentiate(c.re, name), differentiate(c.im, name))
        if not d.is_zero():
            put(mom, d.times_minus_i())
    return OperatorPoly(out)


def normal_order_product(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    """Normal-ordered product ``a * b``."""
    total: Dict[MomMonomial, Complex] = {}
    for mom_a, c_a in a._terms.items():
        moved = b
        for name, k in mom_a:
            for _ in range(k):
                moved = _left_momentum(name, moved)
        for mom, c in moved._terms.items():
            term = c_a * c
            total[mom] = total[mom] + term if mom in total else term
    return OperatorPoly(total)


def commutator(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    return normal_order_product(a, b) - normal_order_product(b, a)


def iterated_commutator(h: OperatorPoly, y: OperatorPoly, k: int) -> OperatorPoly:
    """``[h, y]_k`` with ``[h, y]_0 = y`` and ``[h, y]_k = [h, [h, y]_{k-1}]``."""
    if k < 0:
        raise ValueError("commutator order must be non-negative")
    out = y
    for _ in range(k):
        out = commutator(h, out)
    return out


def _unpack(field, components):
    if components is None:
        return list(field.vars), list(field.components)
    return list(field), list(components)


def build_hamiltonian(field, components: Sequence = None) -> OperatorPoly:
    """Symmetrized generator ``1/2 sum_j (p_j g_j + g_j p_j)``, normal-ordered.

    Accepts a ``VectorField`` or a pair ``(vars, components)``.
    """
    vars, components = _unpack(field, components)
    if len(vars) != len(components):
        raise ValueError("need one component per variable")
    if len(vars) % 2:
        raise ValueError(
            f"state/adjoint pairing needs an even number of components, got {len(vars)}")
    half = Complex(as_expr(Fraction(1, 2)), ZERO)
    h = OperatorPoly()
    for name, g in zip(vars, components):
        g_op = OperatorPoly.position(g)
        p = OperatorPoly.momentum(name)
        h = h + (normal_order_product(p, g_op) + normal_order_product(g_op, p)).scale(half)
    return h


def unsymmetrized_hamiltonian(field, components: Sequence = None) -> OperatorPoly:
    """``sum_j g_j p_j`` without the ordering correction."""
    vars, components = _unpack(field, components)
    h = OperatorPoly()
    for name, g in zip(vars, components):
        h = h + normal_order_product(OperatorPoly.position(g), OperatorPoly.momentum(name))
    return h


def position_part(a: OperatorPoly) -> Expr:
    """The position function of a momentum-free, real operator."""
    if a.degree() > 0:
        raise MomentumDegreeError(
            f"operator has momentum degree {a.degree()}, expected a position function")
    c = a.terms.get((), Complex(ZERO, ZERO))
    if not is_zero(c.im):
        raise MomentumDegreeError(
            f"operator has a non-zero imaginary part {to_text(c.im)}")
    return c.re


def _coeff_text(c: Complex) -> str:
    re_zero, im_zero = is_zero(c.re), is_zero(c.im)
    if im_zero:
        return to_text(c.re)
    im = to_text(c.im)
    if im.startswith("-") and not to_text(-c.im).startswith("-"):
        neg = to_text(-c.im)
        im_part = "-i" if neg == "1" else f"-i*({neg})"
    else:
        im_part = "i" if im == "1" else f"i*({im})"
    if re_zero:
        return im_part
    return f"{to_text(c.re)} + {im_part}"


def to_text_op(a: OperatorPoly, momentum_prefix: str = "p_") -> str:
    """Readable normal-ordered text: coefficient first, momenta on the right."""
    if a.is_zero():
        return "0"
    parts = []
    for mom, c in a.items():
        coeff = _coeff_text(c)
        moms = "*".join(f"{momentum_prefix}{n}" + (f"^{k}" if k != 1 else "") for n, k in mom)
        if not moms:
            parts.append(f"({coeff})")
        elif coeff == "1":
            parts.append(moms)
        else:
            parts.append(f"({coeff})*{moms}")
    return " + ".join(parts)
