"""Matrix-algebra expression trees and their canonical form.

Nodes are immutable and hashable; every operation returns new trees.  The
canonical form is what makes search-tree deduplication and segment
counting possible: two trees are structurally equal exactly when they are
equal under associativity flattening, scalar commutation/ordering,
double-operator elimination and pushing transposes/negations inward.
Matrix factor order is never permuted (products do not commute); sums are
sorted because matrix addition does commute.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator


class ValidationError(Exception):
    """Malformed expression or problem description."""


class DimensionError(ValidationError):
    """Dimension-inconsistent expression; message names the subtree."""


class Expression:
    """Base class for expression nodes."""

    _hash: int

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, eq=False, repr=False)
class Operand(Expression):
    name: str

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("opnd", self.name)))

    def __eq__(self, other):
        return type(other) is Operand and other.name == self.name

    __hash__ = Expression.__hash__


@dataclass(frozen=True, eq=False, repr=False)
class Scalar(Expression):
    """Exact rational literal.  Floating literals are rejected."""

    value: Fraction

    def __post_init__(self):
        if isinstance(self.value, float):
            raise ValidationError("floating-point literals are not allowed; use rationals")
        object.__setattr__(self, "value", Fraction(self.value))
        object.__setattr__(self, "_hash", hash(("lit", self.value)))

    def __eq__(self, other):
        return type(other) is Scalar and other.value == self.value

    __hash__ = Expression.__hash__


@dataclass(frozen=True, eq=False, repr=False)
class Identity(Expression):
    """Dimension-polymorphic identity matrix symbol."""

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash("id"))

    def __eq__(self, other):
        return type(other) is Identity

    __hash__ = Expression.__hash__


ID = Identity()


@dataclass(frozen=True, eq=False, repr=False)
class Plus(Expression):
    terms: tuple[Expression, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "_hash", hash(("plus",) + tuple(t._hash for t in self.terms)))

    def __eq__(self, other):
        return (
            type(other) is Plus
            and other._hash == self._hash
            and other.terms == self.terms
        )

    __hash__ = Expression.__hash__


@dataclass(frozen=True, eq=False, repr=False)
class Times(Expression):
    factors: tuple[Expression, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "_hash", hash(("times",) + tuple(f._hash for f in self.factors)))

    def __eq__(self, other):
        return (
            type(other) is Times
            and other._hash == self._hash
            and other.factors == self.factors
        )

    __hash__ = Expression.__hash__


@dataclass(frozen=True, eq=False, repr=False)
class Negate(Expression):
    child: Expression

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("neg", self.child._hash)))

    def __eq__(self, other):
        return type(other) is Negate and other.child == self.child

    __hash__ = Expression.__hash__


@dataclass(frozen=True, eq=False, repr=False)
class Inv(Expression):
    child: Expression

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("inv", self.child._hash)))

    def __eq__(self, other):
        return type(other) is Inv and other.child == self.child

    __hash__ = Expression.__hash__


@dataclass(frozen=True, eq=False, repr=False)
class Trans(Expression):
    child: Expression

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("trans", self.child._hash)))

    def __eq__(self, other):
        return type(other) is Trans and other.child == self.child

    __hash__ = Expression.__hash__


@dataclass(frozen=True)
class Equation:
    """`output := rhs`; the output operand may not occur on the right."""

    output: str
    rhs: Expression


def scalar(value: int | str | Fraction) -> Scalar:
    return Scalar(Fraction(value))


def children(e: Expression) -> tuple[Expression, ...]:
    if isinstance(e, Plus):
        return e.terms
    if isinstance(e, Times):
        return e.factors
    if isinstance(e, (Negate, Inv, Trans)):
        return (e.child,)
    return ()


def walk(e: Expression) -> Iterator[Expression]:
    """Pre-order traversal."""
    yield e
    for c in children(e):
        yield from walk(c)


def operand_names(e: Expression) -> set[str]:
    return {node.name for node in walk(e) if isinstance(node, Operand)}


def node_count(e: Expression) -> int:
    return sum(1 for _ in walk(e))


def contains_identity(e: Expression) -> bool:
    return any(isinstance(node, Identity) for node in walk(e))


def rebuild(e: Expression, new_children: tuple[Expression, ...]) -> Expression:
    if isinstance(e, Plus):
        return Plus(new_children)
    if isinstance(e, Times):
        return Times(new_children)
    if isinstance(e, Negate):
        return Negate(new_children[0])
    if isinstance(e, Inv):
        return Inv(new_children[0])
    if isinstance(e, Trans):
        return Trans(new_children[0])
    return e


def substitute(e: Expression, mapping: dict[Expression, Expression]) -> Expression:
    """Replace every occurrence of the mapped subtrees (largest match first)."""
    if e in mapping:
        return mapping[e]
    kids = children(e)
    if not kids:
        return e
    new = tuple(substitute(c, mapping) for c in kids)
    if new == kids:
        return e
    return rebuild(e, new)


def map_expression(e: Expression, fn: Callable[[Expression], Expression | None]) -> Expression:
    """Bottom-up rewrite; `fn` returns a replacement or None to keep the node."""
    kids = children(e)
    if kids:
        new = tuple(map_expression(c, fn) for c in kids)
        if new != kids:
            e = rebuild(e, new)
    replacement = fn(e)
    return e if replacement is None else replacement


# --- total structural order -------------------------------------------------

_KIND_RANK = {
    Scalar: 0,
    Operand: 1,
    Identity: 2,
    Trans: 3,
    Inv: 4,
    Times: 5,
    Plus: 6,
    Negate: 7,
}


def structural_key(e: Expression):
    """Total order on expressions; used for sorting sums and scalar factors."""
    rank = _KIND_RANK[type(e)]
    if isinstance(e, Scalar):
        return (rank, e.value.numerator, e.value.denominator)
    if isinstance(e, Operand):
        return (rank, e.name)
    if isinstance(e, Identity):
        return (rank,)
    kids = children(e)
    return (rank, len(kids)) + tuple(structural_key(c) for c in kids)


# --- canonicalization ---------------------------------------------------------


def is_scalar_expr(e: Expression, scalar_names: frozenset[str]) -> bool:
    """Structurally scalar: literals, declared scalar operands, and their algebra."""
    if isinstance(e, Scalar):
        return True
    if isinstance(e, Operand):
        return e.name in scalar_names
    if isinstance(e, (Plus, Times)):
        return all(is_scalar_expr(c, scalar_names) for c in children(e))
    if isinstance(e, (Negate, Inv, Trans)):
        return is_scalar_expr(e.child, scalar_names)
    return False  # Identity is a matrix of its context's dimension


def canonicalize(e: Expression, ctx=None) -> Expression:
    """Rewrite `e` to canonical form.

    When a property context is supplied its scalar operands commute to the
    front of products and the tree is dimension-validated; without one only
    literal-built scalars are recognized.
    """
    scalars = ctx.scalar_operands() if ctx is not None else frozenset()
    out = _canon(e, scalars)
    if ctx is not None:
        ctx.validate_dims(out)
    return out


def _canon(e: Expression, scalars: frozenset[str]) -> Expression:
    if isinstance(e, (Operand, Scalar, Identity)):
        return e

    if isinstance(e, Negate):
        return _canon(Times((Scalar(Fraction(-1)), e.child)), scalars)

    if isinstance(e, Trans):
        c = _canon(e.child, scalars)
        if isinstance(c, (Scalar, Identity)):
            return c
        if isinstance(c, Operand):
            return c if c.name in scalars else Trans(c)
        if isinstance(c, Trans):
            return c.child
        if isinstance(c, Inv):
            return _canon(Inv(Trans(c.child)), scalars)
        if isinstance(c, Plus):
            return _canon(Plus(tuple(Trans(t) for t in c.terms)), scalars)
        if isinstance(c, Times):
            return _canon(Times(tuple(Trans(f) for f in reversed(c.factors))), scalars)
        raise ValidationError(f"cannot transpose {c!r}")

    if isinstance(e, Inv):
        c = _canon(e.child, scalars)
        if isinstance(c, Identity):
            return c
        if isinstance(c, Scalar):
            if c.value == 0:
                raise ValidationError("inverse of the zero scalar")
            return Scalar(1 / c.value)
        if isinstance(c, Inv):
            return c.child
        return Inv(c)

    if isinstance(e, Plus):
        terms: list[Expression] = []
        literal = Fraction(0)
        saw_literal = False
        for t in e.terms:
            ct = _canon(t, scalars)
            parts = ct.terms if isinstance(ct, Plus) else (ct,)
            for part in parts:
                if isinstance(part, Scalar):
                    literal += part.value
                    saw_literal = True
                else:
                    terms.append(part)
        if saw_literal and (literal != 0 or not terms):
            terms.append(Scalar(literal))
        terms.sort(key=structural_key)
        if not terms:
            return Scalar(Fraction(0))
        if len(terms) == 1:
            return terms[0]
        return Plus(tuple(terms))

    if isinstance(e, Times):
        flat: list[Expression] = []
        for f in e.factors:
            cf = _canon(f, scalars)
            flat.extend(cf.factors if isinstance(cf, Times) else (cf,))
        literal = Fraction(1)
        scalar_factors: list[Expression] = []
        matrix_factors: list[Expression] = []
        for f in flat:
            if isinstance(f, Scalar):
                literal *= f.value
            elif is_scalar_expr(f, scalars):
                scalar_factors.append(f)
            else:
                matrix_factors.append(f)
        scalar_factors.sort(key=structural_key)
        parts: list[Expression] = []
        if literal != 1 or not (scalar_factors or matrix_factors):
            parts.append(Scalar(literal))
        parts.extend(scalar_factors)
        parts.extend(matrix_factors)
        if len(parts) == 1:
            return parts[0]
        return Times(tuple(parts))

    raise ValidationError(f"unknown node {e!r}")


def transposed(e: Expression, ctx=None) -> Expression:
    """Canonical form of the transpose of a canonical expression."""
    scalars = ctx.scalar_operands() if ctx is not None else frozenset()
    return _canon(Trans(e), scalars)


# --- atoms --------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    """An operand reference as it appears in a product: name with optional
    transpose/inverse markers (the shapes kernels bind to)."""

    name: str
    trans: bool = False
    inv: bool = False

    def expression(self) -> Expression:
        e: Expression = Operand(self.name)
        if self.trans:
            e = Trans(e)
        if self.inv:
            e = Inv(e)
        return e


def as_atom(e: Expression) -> Atom | None:
    """Decompose `operand`, `operand'`, `inv(operand)` or `inv(operand')`."""
    inv = False
    if isinstance(e, Inv):
        inv = True
        e = e.child
    trans = False
    if isinstance(e, Trans):
        trans = True
        e = e.child
    if isinstance(e, Operand):
        return Atom(e.name, trans, inv)
    return None


# --- rendering ------------------------------------------------------------------


def _needs_parens(e: Expression, context: str) -> bool:
    if isinstance(e, Plus):
        return True
    if isinstance(e, Times) and context in ("trans", "factor-tight",):
        return True
    return False


def to_text(e: Expression) -> str:
    """Compact infix rendering (matches the problem-file syntax)."""
    if isinstance(e, Operand):
        return e.name
    if isinstance(e, Scalar):
        return str(e.value)
    if isinstance(e, Identity):
        return "id"
    if isinstance(e, Inv):
        return f"inv({to_text(e.child)})"
    if isinstance(e, Trans):
        inner = to_text(e.child)
        if _needs_parens(e.child, "trans") or isinstance(e.child, (Times, Inv)):
            inner = f"({inner})"
        return f"{inner}'"
    if isinstance(e, Negate):
        inner = to_text(e.child)
        if isinstance(e.child, (Plus, Times)):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Times):
        parts = []
        factors = list(e.factors)
        # -1 literal prefix renders as a leading minus
        prefix = ""
        if factors and isinstance(factors[0], Scalar) and factors[0].value == -1 and len(factors) > 1:
            prefix = "-"
            factors = factors[1:]
        for f in factors:
            s = to_text(f)
            if isinstance(f, Plus):
                s = f"({s})"
            parts.append(s)
        return prefix + " * ".join(parts)
    if isinstance(e, Plus):
        out = to_text(e.terms[0])
        for t in e.terms[1:]:
            s = to_text(t)
            if s.startswith("-"):
                out += f" - {s[1:]}"
            else:
                out += f" + {s}"
        return out
    raise ValidationError(f"unknown node kind {type(e).__name__}")
