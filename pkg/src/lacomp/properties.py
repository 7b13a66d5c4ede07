"""Operand/expression properties and the inference engine.

A property context records what is known about the declared operands
(structure, symbolic dimensions, size relations) plus any asserted
expression-level facts.  `infer` derives properties of compound
expressions from those of the operands; verdicts are tri-state because
an assertion mechanism only makes sense if "unknown" is representable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .expr import (
    DimensionError,
    Expression,
    Identity,
    Inv,
    Negate,
    Operand,
    Plus,
    Scalar,
    Times,
    Trans,
    ValidationError,
    canonicalize,
    is_scalar_expr,
    map_expression,
    to_text,
    transposed,
)

Size = "str | int | None"  # symbol, literal, or undetermined (identity)


class Property(Enum):
    IDENTITY = "identity"
    DIAGONAL = "diagonal"
    LOWER_TRIANGULAR = "lower_triangular"
    UPPER_TRIANGULAR = "upper_triangular"
    SYMMETRIC = "symmetric"
    SPD = "spd"
    ORTHONORMAL_COLUMNS = "orthonormal_columns"
    ORTHOGONAL_SQUARE = "orthogonal"
    FULL_RANK = "full_rank"
    SQUARE = "square"
    INPUT = "input"
    OUTPUT = "output"
    MATRIX = "matrix"
    VECTOR = "vector"
    SCALAR = "scalar"


class Tri(Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNKNOWN = "unknown"


_IMPLICATIONS: dict[Property, set[Property]] = {
    Property.IDENTITY: {Property.DIAGONAL, Property.ORTHOGONAL_SQUARE, Property.SPD},
    Property.SPD: {Property.SYMMETRIC, Property.FULL_RANK, Property.SQUARE},
    Property.DIAGONAL: {
        Property.LOWER_TRIANGULAR,
        Property.UPPER_TRIANGULAR,
        Property.SYMMETRIC,
    },
    Property.ORTHOGONAL_SQUARE: {
        Property.ORTHONORMAL_COLUMNS,
        Property.FULL_RANK,
        Property.SQUARE,
    },
    Property.SYMMETRIC: {Property.SQUARE},
}


def closure(props: "set[Property] | frozenset[Property]") -> frozenset[Property]:
    out = set(props)
    changed = True
    while changed:
        changed = False
        for p in list(out):
            extra = _IMPLICATIONS.get(p, ())
            for q in extra:
                if q not in out:
                    out.add(q)
                    changed = True
    return frozenset(out)


class Factorization(Enum):
    CHOLESKY = "cholesky"
    QR = "qr"
    EIG = "eig"
    SVD = "svd"


@dataclass(frozen=True)
class OperandInfo:
    properties: frozenset[Property]
    rows: "str | int"
    cols: "str | int"


class PropertyContext:
    """Immutable bundle of operand facts; extended copies share nothing mutable."""

    def __init__(
        self,
        operands: dict[str, OperandInfo],
        relations: frozenset[tuple[str, str, str]] = frozenset(),
        assertions: dict[Expression, frozenset[Property]] | None = None,
        size_symbols: frozenset[str] = frozenset(),
    ):
        self.operands = dict(operands)
        self.relations = frozenset(relations)
        self.assertions = dict(assertions or {})
        syms = set(size_symbols)
        for info in self.operands.values():
            for s in (info.rows, info.cols):
                if isinstance(s, str):
                    syms.add(s)
        self.size_symbols = frozenset(syms)
        self._infer_cache: dict[Expression, frozenset[Property]] = {}
        self._scalars = frozenset(
            name
            for name, info in self.operands.items()
            if Property.SCALAR in info.properties or (info.rows == 1 and info.cols == 1)
        )

    # -- construction helpers ------------------------------------------------

    def extended(
        self,
        new_operands: dict[str, OperandInfo] | None = None,
        new_assertions: dict[Expression, frozenset[Property]] | None = None,
    ) -> "PropertyContext":
        ops = dict(self.operands)
        if new_operands:
            ops.update(new_operands)
        asserts = dict(self.assertions)
        if new_assertions:
            asserts.update(new_assertions)
        return PropertyContext(ops, self.relations, asserts, self.size_symbols)

    def with_assertion(self, e: Expression, props: set[Property]) -> "PropertyContext":
        e = canonicalize(e, None if not self.operands else self)
        additions = {e: closure(props) | self.assertions.get(e, frozenset())}
        # SPD is preserved both ways through inversion; mirror the assertion
        # so it survives making the inverse (or its target) explicit.
        if Property.SPD in additions[e]:
            mirror = canonicalize(Inv(e), self)
            additions[mirror] = closure({Property.SPD}) | self.assertions.get(
                mirror, frozenset()
            )
        return self.extended(new_assertions=additions)

    def rewrite_assertions(self, mapping: dict[Expression, Expression]) -> "PropertyContext":
        """Apply a substitution (e.g. a factorization) to every asserted key."""
        from .expr import substitute

        out: dict[Expression, frozenset[Property]] = {}
        for key, props in self.assertions.items():
            new_key = canonicalize(substitute(key, mapping), self)
            out[new_key] = props | out.get(new_key, frozenset())
            if key not in out:
                out[key] = props
        ctx = PropertyContext(self.operands, self.relations, out, self.size_symbols)
        return ctx

    # -- primitive queries -----------------------------------------------------

    def scalar_operands(self) -> frozenset[str]:
        return self._scalars

    def info(self, name: str) -> OperandInfo:
        try:
            return self.operands[name]
        except KeyError:
            raise ValidationError(f"unknown operand {name!r}") from None

    def declared(self, name: str) -> frozenset[Property]:
        return closure(self.info(name).properties)

    def ge(self, a: "str | int", b: "str | int") -> bool:
        """Provably a >= b under the declared size relations."""
        if a == b:
            return True
        if isinstance(a, int) and isinstance(b, int):
            return a >= b
        if b == 1:
            return True  # sizes are at least 1
        if isinstance(a, str) and isinstance(b, str):
            return (a, ">", b) in self.relations
        return False

    def definitely_ne(self, a: "str | int", b: "str | int") -> bool:
        if isinstance(a, int) and isinstance(b, int):
            return a != b
        if isinstance(a, str) and isinstance(b, str) and a != b:
            return (a, ">", b) in self.relations or (b, ">", a) in self.relations
        return False

    # -- dimensions ------------------------------------------------------------

    def dims(self, e: Expression) -> tuple[Size, Size]:
        """Symbolic (rows, cols); identity symbols may stay undetermined (None)."""
        if isinstance(e, Scalar):
            return (1, 1)
        if isinstance(e, Operand):
            info = self.info(e.name)
            return (info.rows, info.cols)
        if isinstance(e, Identity):
            return (None, None)
        if isinstance(e, Trans):
            r, c = self.dims(e.child)
            return (c, r)
        if isinstance(e, Inv):
            r, c = self.dims(e.child)
            if r is not None and c is not None and r != c:
                if self.definitely_ne(r, c) or not self._maybe_equal(r, c):
                    raise DimensionError(f"inverse of non-square expression {to_text(e.child)}")
            s = r if r is not None else c
            return (s, s)
        if isinstance(e, Plus):
            rows: Size = None
            cols: Size = None
            for t in e.terms:
                if is_scalar_expr(t, self._scalars):
                    tr, tc = 1, 1
                else:
                    tr, tc = self.dims(t)
                rows = self._unify(rows, tr, e)
                cols = self._unify(cols, tc, e)
            return (rows, cols)
        if isinstance(e, Times):
            chain: list[tuple[Size, Size]] = []
            for f in e.factors:
                if is_scalar_expr(f, self._scalars):
                    continue
                chain.append(self.dims(f))
            if not chain:
                return (1, 1)
            # Boundary b[i] sits between factor i-1 and factor i; identities
            # (None, None) tie their two boundaries together.
            k = len(chain)
            parent = list(range(k + 1))

            def find(i: int) -> int:
                while parent[i] != i:
                    parent[i] = parent[parent[i]]
                    i = parent[i]
                return i

            values: dict[int, Size] = {}

            def assign(i: int, v: Size) -> None:
                if v is None:
                    return
                root = find(i)
                cur = values.get(root)
                if cur is None:
                    values[root] = v
                elif cur != v and not self._maybe_equal(cur, v):
                    raise DimensionError(
                        f"dimension mismatch in product {to_text(e)}: {cur} vs {v}"
                    )

            for i, (r, c) in enumerate(chain):
                if r is None and c is None:
                    ri, ci = find(i), find(i + 1)
                    parent[ri] = ci
                else:
                    assign(i, r)
                    assign(i + 1, c)
            return (values.get(find(0)), values.get(find(k)))
        if isinstance(e, Negate):
            return self.dims(e.child)
        raise ValidationError(f"cannot size node {e!r}")

    def _maybe_equal(self, a: Size, b: Size) -> bool:
        if a is None or b is None or a == b:
            return True
        return not self.definitely_ne(a, b) and not (
            isinstance(a, int) and isinstance(b, int)
        )

    def _unify(self, a: Size, b: Size, e: Expression) -> Size:
        if a is None:
            return b
        if b is None:
            return a
        if a == b:
            return a
        if self._maybe_equal(a, b):
            # distinct symbols that are not provably different: reject anyway,
            # declared dimensions must match exactly
            raise DimensionError(f"dimension mismatch in sum {to_text(e)}: {a} vs {b}")
        raise DimensionError(f"dimension mismatch in sum {to_text(e)}: {a} vs {b}")

    def validate_dims(self, e: Expression) -> tuple[Size, Size]:
        return self.dims(e)


def dims(e: Expression, ctx: PropertyContext) -> tuple[Size, Size]:
    """Symbolic dimensions of a dimension-consistent expression."""
    return ctx.dims(e)


# --- inference -----------------------------------------------------------------


def infer(e: Expression, ctx: PropertyContext) -> frozenset[Property]:
    """Set of properties that provably hold for canonical `e`."""
    cached = ctx._infer_cache.get(e)
    if cached is not None:
        return cached
    props = set(_infer_structural(e, ctx))
    asserted = ctx.assertions.get(e)
    if asserted:
        props |= asserted
    props |= _dim_properties(e, ctx)
    out = closure(props)
    ctx._infer_cache[e] = out
    return out


def verdict(e: Expression, ctx: PropertyContext, prop: Property) -> Tri:
    """Tri-state verdict for one property."""
    if prop in infer(e, ctx):
        return Tri.HOLDS
    if _fails(e, ctx, prop):
        return Tri.FAILS
    return Tri.UNKNOWN


def holds(e: Expression, ctx: PropertyContext, prop: Property) -> bool:
    return prop in infer(e, ctx)


def _dim_properties(e: Expression, ctx: PropertyContext) -> set[Property]:
    out: set[Property] = set()
    try:
        r, c = ctx.dims(e)
    except DimensionError:
        return out
    if r is None and c is None:
        out.add(Property.SQUARE)
        return out
    if r == c and r is not None:
        out.add(Property.SQUARE)
    if c == 1 and r == 1:
        out.add(Property.SCALAR)
    elif c == 1:
        out.add(Property.VECTOR)
    if not (r == 1 and c == 1):
        out.add(Property.MATRIX)
    return out


def _fails(e: Expression, ctx: PropertyContext, prop: Property) -> bool:
    try:
        r, c = ctx.dims(e)
    except DimensionError:
        return False
    if prop in (Property.SQUARE, Property.SYMMETRIC, Property.SPD, Property.DIAGONAL,
                Property.ORTHOGONAL_SQUARE, Property.IDENTITY):
        if r is not None and c is not None and self_ne(ctx, r, c):
            return True
    if prop is Property.VECTOR and c is not None and c != 1 and not isinstance(c, str):
        return True
    if prop is Property.SCALAR:
        if (r is not None and isinstance(r, int) and r != 1) or (
            c is not None and isinstance(c, int) and c != 1
        ):
            return True
    return False


def self_ne(ctx: PropertyContext, a, b) -> bool:
    return ctx.definitely_ne(a, b)


def _positive_literal(f: Expression) -> bool:
    return isinstance(f, Scalar) and f.value > 0


def _symmetry_normal(e: Expression, ctx: PropertyContext) -> Expression:
    def drop_trans(node: Expression):
        if isinstance(node, Trans) and isinstance(node.child, Operand):
            if Property.SYMMETRIC in ctx.declared(node.child.name):
                return node.child
        return None

    return map_expression(e, drop_trans)


def _is_symmetric_by_shape(e: Expression, ctx: PropertyContext) -> bool:
    """e equals its own transpose modulo declared-symmetric operands."""
    try:
        a = canonicalize(_symmetry_normal(e, ctx), ctx)
        b = canonicalize(_symmetry_normal(transposed(e, ctx), ctx), ctx)
    except (DimensionError, ValidationError):
        return False
    return a == b


def _spd_from_gram(e: Expression, ctx: PropertyContext) -> bool:
    """A'A is SPD when A is full rank with at least as many rows as columns."""
    if not isinstance(e, Times):
        return False
    factors = [f for f in e.factors if not is_scalar_expr(f, ctx.scalar_operands())]
    scalars = [f for f in e.factors if is_scalar_expr(f, ctx.scalar_operands())]
    if scalars and not all(_positive_literal(s) for s in scalars):
        return False
    if len(factors) == 2:
        left, right = factors
        if transposed(left, ctx) == right:
            a = right
        elif transposed(right, ctx) == left:
            a = left
        else:
            return False
        if Property.FULL_RANK not in infer(a, ctx):
            return False
        r, c = ctx.dims(a)
        other = transposed(a, ctx)
        # orientation: result is (cols x cols) for A'A, (rows x rows) for AA'
        if factors[0] == other and factors[1] == a:
            return r is not None and c is not None and ctx.ge(r, c)
        return r is not None and c is not None and ctx.ge(c, r)
    if len(factors) == 3:
        left, mid, right = factors
        if transposed(left, ctx) != right:
            return False
        if Property.SPD not in infer(mid, ctx):
            return False
        if Property.FULL_RANK not in infer(right, ctx):
            return False
        r, c = ctx.dims(right)
        return r is not None and c is not None and ctx.ge(r, c)
    return False


def _full_rank_product(factors: list[Expression], ctx: PropertyContext) -> bool:
    boundaries: list = []
    for i, f in enumerate(factors):
        if Property.FULL_RANK not in infer(f, ctx):
            return False
        r, c = ctx.dims(f)
        if r is None or c is None:
            return False
        if i == 0:
            boundaries.append(r)
        boundaries.append(c)
    first, last = boundaries[0], boundaries[-1]
    for inner in boundaries[1:-1]:
        if not (ctx.ge(inner, first) or ctx.ge(inner, last)):
            return False
    return True


def _infer_structural(e: Expression, ctx: PropertyContext) -> set[Property]:
    out: set[Property] = set()

    if isinstance(e, Operand):
        return set(ctx.declared(e.name))

    if isinstance(e, Identity):
        return set(closure({Property.IDENTITY}))

    if isinstance(e, Scalar):
        out = {Property.SCALAR}
        if e.value != 0:
            out |= {Property.FULL_RANK}
        return out

    if isinstance(e, Trans):
        inner = infer(e.child, ctx)
        keep = {
            Property.DIAGONAL,
            Property.SYMMETRIC,
            Property.SPD,
            Property.FULL_RANK,
            Property.SQUARE,
            Property.ORTHOGONAL_SQUARE,
            Property.SCALAR,
            Property.IDENTITY,
        }
        out = set(inner & keep)
        if Property.LOWER_TRIANGULAR in inner:
            out.add(Property.UPPER_TRIANGULAR)
        if Property.UPPER_TRIANGULAR in inner:
            out.add(Property.LOWER_TRIANGULAR)
        return out

    if isinstance(e, Inv):
        inner = infer(e.child, ctx)
        keep = {
            Property.DIAGONAL,
            Property.LOWER_TRIANGULAR,
            Property.UPPER_TRIANGULAR,
            Property.SYMMETRIC,
            Property.SPD,
            Property.ORTHOGONAL_SQUARE,
            Property.IDENTITY,
            Property.SCALAR,
        }
        out = set(inner & keep)
        # the inverse exists in any well-formed equation, so it is invertible
        out |= {Property.FULL_RANK, Property.SQUARE}
        return out

    scalars = ctx.scalar_operands()

    if isinstance(e, Times):
        matrix_factors = [f for f in e.factors if not is_scalar_expr(f, scalars)]
        scalar_factors = [f for f in e.factors if is_scalar_expr(f, scalars)]
        if not matrix_factors:
            return {Property.SCALAR}
        if _is_symmetric_by_shape(e, ctx):
            out.add(Property.SYMMETRIC)
        if _spd_from_gram(e, ctx):
            out.add(Property.SPD)
        structural = [infer(f, ctx) for f in matrix_factors]
        if all(Property.DIAGONAL in s for s in structural):
            out.add(Property.DIAGONAL)
        if all(Property.LOWER_TRIANGULAR in s for s in structural):
            out.add(Property.LOWER_TRIANGULAR)
        if all(Property.UPPER_TRIANGULAR in s for s in structural):
            out.add(Property.UPPER_TRIANGULAR)
        if all(Property.ORTHOGONAL_SQUARE in s for s in structural) and not scalar_factors:
            out.add(Property.ORTHOGONAL_SQUARE)
        # rank is insensitive to nonzero scalar factors, but only literal
        # scalars are provably nonzero
        if all(isinstance(s, Scalar) and s.value != 0 for s in scalar_factors):
            if _full_rank_product(matrix_factors, ctx):
                out.add(Property.FULL_RANK)
        return out

    if isinstance(e, Plus):
        if _is_symmetric_by_shape(e, ctx):
            out.add(Property.SYMMETRIC)
        term_props = []
        all_spd = True
        for t in e.terms:
            if is_scalar_expr(t, scalars):
                return out  # scalar sum mixed in: structure unknown
            tp = infer(t, ctx)
            term_props.append(tp)
            if isinstance(t, Times):
                sf = [f for f in t.factors if is_scalar_expr(f, scalars)]
                if not all(_positive_literal(s) for s in sf):
                    all_spd = False
            if Property.SPD not in tp:
                all_spd = False
        for structural_prop in (
            Property.DIAGONAL,
            Property.LOWER_TRIANGULAR,
            Property.UPPER_TRIANGULAR,
        ):
            if all(structural_prop in tp for tp in term_props):
                out.add(structural_prop)
        if all_spd:
            out.add(Property.SPD)
        return out

    return out


# --- factorization output properties ------------------------------------------


@dataclass(frozen=True)
class FactorSpec:
    role: str
    properties: frozenset[Property]
    rows: "str | int"
    cols: "str | int"


def factor_output_properties(
    kind: Factorization,
    operand_props: frozenset[Property],
    operand_dims: tuple,
    ctx: PropertyContext | None = None,
) -> list[FactorSpec]:
    """Properties and dimensions of the factors produced by a factorization."""
    r, c = operand_dims

    def ge(a, b) -> bool:
        if ctx is not None:
            return ctx.ge(a, b)
        return a == b

    if kind is Factorization.CHOLESKY:
        if Property.SPD not in operand_props:
            raise ValidationError("cholesky factorization needs an SPD operand")
        return [
            FactorSpec(
                "lower",
                frozenset({Property.SQUARE, Property.LOWER_TRIANGULAR, Property.FULL_RANK}),
                r,
                r,
            )
        ]

    if kind is Factorization.QR:
        if Property.FULL_RANK not in operand_props or not ge(r, c):
            raise ValidationError("qr factorization needs a full-rank operand with rows >= cols")
        q_props = {Property.ORTHONORMAL_COLUMNS}
        if r == c:
            q_props.add(Property.ORTHOGONAL_SQUARE)
        return [
            FactorSpec("orthonormal", frozenset(q_props), r, c),
            FactorSpec(
                "upper",
                frozenset({Property.UPPER_TRIANGULAR, Property.SQUARE, Property.FULL_RANK}),
                c,
                c,
            ),
        ]

    if kind is Factorization.EIG:
        if Property.SYMMETRIC not in operand_props:
            raise ValidationError("eigendecomposition needs a symmetric operand")
        w_props = {Property.DIAGONAL, Property.SQUARE}
        if Property.SPD in operand_props:
            w_props.add(Property.SPD)
        elif Property.FULL_RANK in operand_props:
            w_props.add(Property.FULL_RANK)
        return [
            FactorSpec("orthogonal", frozenset({Property.ORTHOGONAL_SQUARE}), r, r),
            FactorSpec("eigenvalues", frozenset(w_props), r, r),
        ]

    if kind is Factorization.SVD:
        if ge(r, c):
            k = c
        elif ge(c, r):
            k = r
        else:
            raise ValidationError("svd needs comparable dimensions")
        u_props = {Property.ORTHONORMAL_COLUMNS}
        if r == k:
            u_props.add(Property.ORTHOGONAL_SQUARE)
        v_props = {Property.ORTHONORMAL_COLUMNS}
        if c == k:
            v_props.add(Property.ORTHOGONAL_SQUARE)
        s_props = {Property.DIAGONAL, Property.SQUARE}
        if Property.SPD in operand_props:
            s_props.add(Property.SPD)
        elif Property.FULL_RANK in operand_props:
            s_props.add(Property.FULL_RANK)
        return [
            FactorSpec("left_vectors", frozenset(u_props), r, k),
            FactorSpec("singular_values", frozenset(s_props), k, k),
            FactorSpec("right_vectors", frozenset(v_props), c, k),
        ]

    raise ValidationError(f"unknown factorization {kind}")
