"""Building-block catalog: kernel patterns, guards, output shapes, flop costs.

Each pattern kernel carries one or more templates (expression shapes with
typed holes) plus per-hole property guards; segments match modulo
transposition of the whole segment.  Factorization kernels are selected by
operand structure rather than by pattern matching.  The catalog can also
be loaded from a declarative text file so new building blocks drop in
without code changes.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .cost import CostPolynomial
from .expr import (
    Expression,
    ID,
    Identity,
    Inv,
    Operand,
    Plus,
    Scalar,
    Times,
    Trans,
    ValidationError,
    canonicalize,
    is_scalar_expr,
    to_text,
    transposed,
)
from .properties import (
    Factorization,
    Property,
    PropertyContext,
    infer,
)

# --- guards -------------------------------------------------------------------

_GUARD_ALIASES: dict[str, frozenset[Property]] = {
    "triangular": frozenset({Property.LOWER_TRIANGULAR, Property.UPPER_TRIANGULAR}),
    "orthonormal": frozenset({Property.ORTHONORMAL_COLUMNS}),
}


@dataclass(frozen=True)
class Guard:
    """Conjunction of requirements; each requirement is a disjunction."""

    requires: tuple[frozenset[Property], ...] = ()
    not_vector: bool = False
    not_identity: bool = False

    def check(self, bound: Expression, ctx: PropertyContext) -> bool:
        props = infer(bound, ctx)
        if self.not_vector and Property.VECTOR in props:
            return False
        if self.not_identity and Property.IDENTITY in props:
            return False
        return all(props & alt for alt in self.requires)


def parse_guard(text: str) -> Guard:
    requires = []
    not_vector = not_identity = False
    for token in text.split():
        if token == "not_vector":
            not_vector = True
        elif token == "not_identity":
            not_identity = True
        elif token in _GUARD_ALIASES:
            requires.append(_GUARD_ALIASES[token])
        else:
            alts = frozenset(Property(t) for t in token.split("|"))
            requires.append(alts)
    return Guard(tuple(requires), not_vector, not_identity)


# --- templates ------------------------------------------------------------------


@dataclass(frozen=True)
class Hole:
    name: str
    kind: str = "matrix"  # matrix | scalar | matrix_or_identity


@dataclass(frozen=True)
class TNode:
    """Template node: op in {hole, trans_hole, inv, times, plus, identity}."""

    op: str
    kids: tuple = ()
    hole: Hole | None = None


_ATOM_RE = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")


def parse_template(text: str, holes: dict[str, Hole]) -> TNode:
    """Tiny template grammar: `a * A + b * B`, `inv(T) * B`, `A' * A`."""

    def split_top(s: str, sep: str) -> list[str]:
        out, depth, cur = [], 0, []
        for ch in s:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            if ch == sep and depth == 0:
                out.append("".join(cur))
                cur = []
            else:
                cur.append(ch)
        out.append("".join(cur))
        return out

    def parse_sum(s: str) -> TNode:
        parts = split_top(s, "+")
        if len(parts) > 1:
            return TNode("plus", kids=tuple(parse_sum(p) for p in parts))
        return parse_product(parts[0])

    def parse_product(s: str) -> TNode:
        parts = split_top(s, "*")
        if len(parts) > 1:
            return TNode("times", kids=tuple(parse_product(p) for p in parts))
        return parse_atom(parts[0].strip())

    def parse_atom(s: str) -> TNode:
        s = s.strip()
        if s.endswith("'"):
            inner = s[:-1].strip()
            if not _ATOM_RE.match(inner):
                raise ValidationError(f"bad template atom {s!r}")
            return TNode("trans_hole", hole=holes[inner])
        if s.startswith("inv(") and s.endswith(")"):
            return TNode("inv", kids=(parse_atom(s[4:-1]),))
        if s == "id":
            return TNode("identity")
        if not _ATOM_RE.match(s):
            raise ValidationError(f"bad template atom {s!r}")
        return TNode("hole", hole=holes[s])

    return parse_sum(text)


def _is_matrix_atom(e: Expression) -> bool:
    return isinstance(e, Operand) or (isinstance(e, Trans) and isinstance(e.child, Operand))


def _unify(t: TNode, e: Expression, binding: dict[str, Expression], ctx: PropertyContext) -> bool:
    scalars = ctx.scalar_operands()
    if t.op == "hole":
        h = t.hole
        if h.kind == "scalar":
            if not is_scalar_expr(e, scalars):
                return False
        elif h.kind == "matrix_or_identity":
            if not (_is_matrix_atom(e) or isinstance(e, Identity)):
                return False
        else:
            if not _is_matrix_atom(e):
                return False
        prev = binding.get(h.name)
        if prev is not None:
            return prev == e
        binding[h.name] = e
        return True
    if t.op == "trans_hole":
        h = t.hole
        if not _is_matrix_atom(e):
            return False
        inner = transposed(e, ctx)
        prev = binding.get(h.name)
        if prev is not None:
            return prev == inner
        binding[h.name] = inner
        return True
    if t.op == "identity":
        return isinstance(e, Identity)
    if t.op == "inv":
        return isinstance(e, Inv) and _unify(t.kids[0], e.child, binding, ctx)
    if t.op == "times":
        scalar_kids = [k for k in t.kids if k.op == "hole" and k.hole.kind == "scalar"]
        other_kids = [k for k in t.kids if not (k.op == "hole" and k.hole.kind == "scalar")]
        if not isinstance(e, Times):
            # a lone matrix part still matches `a * A` with the implicit a = 1
            if len(scalar_kids) == 1 and len(other_kids) == 1:
                if not _unify(other_kids[0], e, binding, ctx):
                    return False
                return _unify(scalar_kids[0], Scalar(Fraction(1)), binding, ctx)
            return False
        efactors = list(e.factors)
        escalars = [f for f in efactors if is_scalar_expr(f, scalars)]
        ematrix = [f for f in efactors if not is_scalar_expr(f, scalars)]
        if len(other_kids) != len(ematrix):
            return False
        if len(scalar_kids) == 0:
            if escalars:
                return False
        elif len(scalar_kids) == 1:
            if not escalars:
                combined: Expression = Scalar(Fraction(1))
            elif len(escalars) == 1:
                combined = escalars[0]
            else:
                combined = canonicalize(Times(tuple(escalars)), ctx)
            if not _unify(scalar_kids[0], combined, binding, ctx):
                return False
        else:
            return False
        return all(_unify(k, f, binding, ctx) for k, f in zip(other_kids, ematrix))
    if t.op == "plus":
        if not isinstance(e, Plus) or len(e.terms) != len(t.kids):
            return False
        for perm in itertools.permutations(e.terms):
            trial = dict(binding)
            if all(_unify(k, term, trial, ctx) for k, term in zip(t.kids, perm)):
                binding.clear()
                binding.update(trial)
                return True
        return False
    raise ValidationError(f"unknown template op {t.op}")


# --- kernels ---------------------------------------------------------------------


@dataclass(frozen=True)
class Template:
    node: TNode
    arg_order: tuple[str, ...]
    meta: tuple[tuple[str, str], ...] = ()


# cost fn: (binding: hole -> bound expression, result dims, ctx, config) -> poly
CostFn = Callable[[dict, tuple, PropertyContext, "CatalogConfig"], CostPolynomial]


@dataclass(frozen=True)
class Kernel:
    """One catalog entry: a pattern kernel or a factorization kernel."""

    name: str
    templates: tuple[Template, ...] = ()
    guards: dict[str, Guard] = field(default_factory=dict)
    cost: CostFn | None = None
    factorization: Factorization | None = None
    post: Callable[[dict, PropertyContext], bool] | None = None

    @property
    def is_factorization(self) -> bool:
        return self.factorization is not None


@dataclass(frozen=True)
class Arg:
    kind: str  # matrix | scalar | identity
    name: str | None = None
    trans: bool = False
    inv: bool = False
    scalar: Expression | None = None

    def expression(self) -> Expression:
        if self.kind == "identity":
            return ID
        if self.kind == "scalar":
            assert self.scalar is not None
            return self.scalar
        e: Expression = Operand(self.name)
        if self.trans:
            e = Trans(e)
        if self.inv:
            e = Inv(e)
        return e


def _to_arg(e: Expression, ctx: PropertyContext) -> Arg:
    if isinstance(e, Identity):
        return Arg("identity")
    if is_scalar_expr(e, ctx.scalar_operands()):
        return Arg("scalar", scalar=e)
    inv = False
    if isinstance(e, Inv):
        inv = True
        e = e.child
    trans = False
    if isinstance(e, Trans):
        trans = True
        e = e.child
    if not isinstance(e, Operand):
        raise ValidationError(f"kernel argument is not an atom: {to_text(e)}")
    return Arg("matrix", name=e.name, trans=trans, inv=inv)


@dataclass(frozen=True)
class Match:
    kernel: Kernel
    args: tuple[Arg, ...]
    expr: Expression  # the matched orientation (canonical)
    meta: tuple[tuple[str, str], ...]
    cost: CostPolynomial
    dims: tuple


@dataclass(frozen=True)
class KernelCall:
    kernel: str
    args: tuple[Arg, ...]
    outputs: tuple[str, ...]
    out_dims: tuple  # one (rows, cols) pair per output
    cost: CostPolynomial
    meta: tuple[tuple[str, str], ...] = ()

    def meta_get(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.meta:
            if k == key:
                return v
        return default

    def input_names(self) -> list[str]:
        names = [a.name for a in self.args if a.kind == "matrix"]
        from .expr import operand_names

        for a in self.args:
            if a.kind == "scalar":
                names.extend(sorted(operand_names(a.scalar)))
        return names


def match_kernel(e: Expression, ctx: PropertyContext, catalog: "Catalog") -> list[Match]:
    """All catalog patterns matching `e` (or its transpose), in catalog order."""
    e = canonicalize(e, ctx)
    orientations = [e]
    et = transposed(e, ctx)
    if et != e:
        orientations.append(et)
    out: list[Match] = []
    for kernel in catalog.patterns:
        found = None
        for orient in orientations:
            for template in kernel.templates:
                binding: dict[str, Expression] = {}
                if not _unify(template.node, orient, binding, ctx):
                    continue
                if not _check_guards(kernel, binding, ctx):
                    continue
                if kernel.post is not None and not kernel.post(binding, ctx):
                    continue
                dims = ctx.dims(orient)
                cost = (
                    kernel.cost(binding, dims, ctx, catalog.config)
                    if kernel.cost
                    else CostPolynomial.zero()
                )
                args = tuple(_to_arg(binding[h], ctx) for h in template.arg_order)
                meta = template.meta + _derived_meta(kernel, binding, ctx)
                found = Match(kernel, args, orient, meta, cost, dims)
                break
            if found:
                break
        if found:
            out.append(found)
    return out


def _check_guards(kernel: Kernel, binding: dict[str, Expression], ctx: PropertyContext) -> bool:
    for hole, guard in kernel.guards.items():
        if hole in binding and not guard.check(binding[hole], ctx):
            return False
    return True


def _derived_meta(kernel: Kernel, binding: dict[str, Expression], ctx: PropertyContext) -> tuple:
    meta = []
    if kernel.name in ("trsv", "trsm"):
        t = binding.get("T")
        if t is not None:
            props = infer(t, ctx)
            meta.append(("uplo", "lower" if Property.LOWER_TRIANGULAR in props else "upper"))
    return tuple(meta)


def viable_factorizations(operand: str, ctx: PropertyContext) -> list[Factorization]:
    """Factorizations applicable to an operand; already-factored shapes get none."""
    props = infer(Operand(operand), ctx)
    blocked = {
        Property.DIAGONAL,
        Property.LOWER_TRIANGULAR,
        Property.UPPER_TRIANGULAR,
        Property.ORTHONORMAL_COLUMNS,
        Property.IDENTITY,
        Property.SCALAR,
    }
    if props & blocked:
        return []
    info = ctx.info(operand)
    r, c = info.rows, info.cols
    if Property.SPD in props:
        return [Factorization.CHOLESKY, Factorization.QR, Factorization.EIG, Factorization.SVD]
    if Property.SYMMETRIC in props:
        return [Factorization.EIG, Factorization.SVD]
    if Property.FULL_RANK in props and ctx.ge(r, c):
        return [Factorization.QR, Factorization.SVD]
    if ctx.ge(r, c) or ctx.ge(c, r):
        return [Factorization.SVD]
    return []


def cost_of(call: KernelCall) -> CostPolynomial:
    return call.cost


# --- built-in catalog ---------------------------------------------------------------


@dataclass(frozen=True)
class CatalogConfig:
    c_eig: Fraction = Fraction(9)
    c_svd: Fraction = Fraction(21)


@dataclass(frozen=True)
class Catalog:
    patterns: tuple[Kernel, ...]
    factorizations: dict[Factorization, Kernel]
    config: CatalogConfig

    def factorization_kernel(self, kind: Factorization) -> Kernel:
        return self.factorizations[kind]

    def pattern(self, name: str) -> Kernel:
        for k in self.patterns:
            if k.name == name:
                return k
        raise KeyError(name)

    def kernel_names(self) -> list[str]:
        return [k.name for k in self.patterns] + [k.name for k in self.factorizations.values()]


def _size(s, exp: int = 1, coef=1) -> CostPolynomial:
    return CostPolynomial.of_size(s if s is not None else 1, exp, coef)


def _dims_of(binding: dict, hole: str, ctx: PropertyContext) -> tuple:
    return ctx.dims(binding[hole])


def _c_scal_add(binding, dims, ctx, cfg) -> CostPolynomial:
    r, c = dims
    r = r if r is not None else c
    c = c if c is not None else r
    diagonal = all(
        Property.DIAGONAL in infer(binding[h], ctx) for h in ("A", "B") if h in binding
    )
    if diagonal:
        return _size(r, 1, 2)
    return _size(r) * _size(c, 1, 2)


def _c_dot(binding, dims, ctx, cfg) -> CostPolynomial:
    r, _ = _dims_of(binding, "x", ctx)
    return _size(r, 1, 2)


def _c_axpy(binding, dims, ctx, cfg) -> CostPolynomial:
    r, _ = _dims_of(binding, "x", ctx)
    return _size(r, 1, 2)


def _c_scal(binding, dims, ctx, cfg) -> CostPolynomial:
    r, c = dims
    return _size(r) * _size(c)


def _c_trsv(binding, dims, ctx, cfg) -> CostPolynomial:
    t, _ = _dims_of(binding, "T", ctx)
    return _size(t, 2)


def _c_trsm(binding, dims, ctx, cfg) -> CostPolynomial:
    t, _ = _dims_of(binding, "T", ctx)
    br, bc = _dims_of(binding, "B", ctx)
    other = bc if br == t else br
    return _size(t, 2) * _size(other)


def _c_syrk(binding, dims, ctx, cfg) -> CostPolynomial:
    ar, ac = _dims_of(binding, "A", ctx)
    out_dim, _ = dims
    inner = ac if out_dim == ar else ar
    return _size(inner) * _size(out_dim, 2)


def _c_gemv(binding, dims, ctx, cfg) -> CostPolynomial:
    ar, ac = _dims_of(binding, "A", ctx)
    return _size(ar) * _size(ac, 1, 2)


def _c_gemm(binding, dims, ctx, cfg) -> CostPolynomial:
    ar, ac = _dims_of(binding, "A", ctx)
    _br, bc = _dims_of(binding, "B", ctx)
    return _size(ar) * _size(ac) * _size(bc, 1, 2)


def _c_potrf(binding, dims, ctx, cfg) -> CostPolynomial:
    r, _ = dims
    return _size(r, 3, Fraction(1, 3))


def _c_geqrf(binding, dims, ctx, cfg) -> CostPolynomial:
    r, c = dims
    return _size(r) * _size(c, 2, 2) + _size(c, 3, Fraction(-2, 3))


def _c_syev(binding, dims, ctx, cfg) -> CostPolynomial:
    r, _ = dims
    return _size(r, 3, cfg.c_eig)


def _c_svd(binding, dims, ctx, cfg) -> CostPolynomial:
    r, c = dims
    big, small = (r, c) if (isinstance(r, int) and isinstance(c, int) and r >= c) else (r, c)
    return _size(big) * _size(small, 2, cfg.c_svd)


def _tpl(text: str, holes: dict[str, Hole], order: Iterable[str], **meta: str) -> Template:
    return Template(parse_template(text, holes), tuple(order), tuple(sorted(meta.items())))


def build_catalog(config: CatalogConfig | None = None) -> Catalog:
    cfg = config or CatalogConfig()
    S, M, MI = (
        lambda n: Hole(n, "scalar"),
        lambda n: Hole(n, "matrix"),
        lambda n: Hole(n, "matrix_or_identity"),
    )

    patterns: list[Kernel] = []

    h = {"a": S("a"), "b": S("b"), "A": MI("A"), "B": MI("B")}
    patterns.append(
        Kernel(
            name="scal-add",
            templates=(_tpl("a * A + b * B", h, ("a", "A", "b", "B")),),
            cost=_c_scal_add,
            post=lambda b, ctx: not (
                isinstance(b.get("A"), Identity) and isinstance(b.get("B"), Identity)
            ),
        )
    )

    h = {"x": M("x"), "y": M("y")}
    patterns.append(
        Kernel(
            name="dot",
            templates=(_tpl("x' * y", h, ("x", "y")),),
            guards={"x": parse_guard("vector"), "y": parse_guard("vector")},
            cost=_c_dot,
        )
    )

    h = {"a": S("a"), "x": M("x"), "y": M("y")}
    patterns.append(
        Kernel(
            name="axpy",
            templates=(_tpl("a * x + y", h, ("a", "x", "y")),),
            guards={"x": parse_guard("vector"), "y": parse_guard("vector")},
            cost=_c_axpy,
        )
    )

    h = {"s": S("s"), "A": M("A"), "D": M("D")}
    patterns.append(
        Kernel(
            name="scal",
            templates=(
                _tpl("A * inv(D)", h, ("A", "D"), side="right", invert="yes"),
                _tpl("inv(D) * A", h, ("D", "A"), side="left", invert="yes"),
                _tpl("A * D", h, ("A", "D"), side="right", invert="no"),
                _tpl("D * A", h, ("D", "A"), side="left", invert="no"),
                _tpl("s * A", h, ("s", "A"), side="scalar", invert="no"),
            ),
            guards={"D": parse_guard("diagonal"), "A": parse_guard("not_identity")},
            cost=_c_scal,
        )
    )

    h = {"T": M("T"), "x": M("x")}
    patterns.append(
        Kernel(
            name="trsv",
            templates=(_tpl("inv(T) * x", h, ("T", "x")),),
            guards={"T": parse_guard("triangular"), "x": parse_guard("vector")},
            cost=_c_trsv,
        )
    )

    h = {"T": M("T"), "B": M("B")}
    patterns.append(
        Kernel(
            name="trsm",
            templates=(
                _tpl("inv(T) * B", h, ("T", "B"), side="left"),
                _tpl("B * inv(T)", h, ("B", "T"), side="right"),
            ),
            guards={"T": parse_guard("triangular"), "B": parse_guard("not_vector")},
            cost=_c_trsm,
        )
    )

    h = {"A": M("A")}
    patterns.append(
        Kernel(
            name="syrk",
            templates=(
                _tpl("A' * A", h, ("A",), form="gram"),
                _tpl("A * A'", h, ("A",), form="outer"),
            ),
            guards={"A": parse_guard("not_vector")},
            cost=_c_syrk,
        )
    )

    h = {"A": M("A"), "x": M("x")}
    patterns.append(
        Kernel(
            name="gemv",
            templates=(_tpl("A * x", h, ("A", "x")),),
            guards={"A": parse_guard("not_vector"), "x": parse_guard("vector")},
            cost=_c_gemv,
        )
    )

    h = {"A": M("A"), "B": M("B")}
    patterns.append(
        Kernel(
            name="gemm",
            templates=(_tpl("A * B", h, ("A", "B")),),
            guards={"A": parse_guard("not_vector"), "B": parse_guard("not_vector")},
            cost=_c_gemm,
        )
    )

    factorizations = {
        Factorization.CHOLESKY: Kernel(
            name="potrf", factorization=Factorization.CHOLESKY, cost=_c_potrf
        ),
        Factorization.QR: Kernel(name="geqrf", factorization=Factorization.QR, cost=_c_geqrf),
        Factorization.EIG: Kernel(name="syev", factorization=Factorization.EIG, cost=_c_syev),
        Factorization.SVD: Kernel(name="svd", factorization=Factorization.SVD, cost=_c_svd),
    }

    return Catalog(tuple(patterns), factorizations, cfg)


# --- declarative catalog files ---------------------------------------------------


def load_catalog_file(path: str, config: CatalogConfig | None = None) -> Catalog:
    """Extend the built-in catalog with kernels from a declarative text file.

    Format (one block per kernel, `#` comments):

        kernel name
          pattern: inv(T) * B
          guards: T triangular; B not_vector
          cost: rows(T)^2 * cols(B)
    """
    base = build_catalog(config)
    extra: list[Kernel] = []
    name = None
    pattern_texts: list[str] = []
    guard_map: dict[str, Guard] = {}
    cost_text = None

    def flush():
        nonlocal name, pattern_texts, guard_map, cost_text
        if name is None:
            return
        if not pattern_texts:
            raise ValidationError(f"kernel {name!r} has no pattern")
        holes: dict[str, Hole] = {}
        for ptext in pattern_texts:
            for token in re.findall(r"[A-Za-z_][A-Za-z_0-9]*", ptext):
                if token in ("inv", "id"):
                    continue
                kind = "scalar" if token.islower() and len(token) > 1 else "matrix"
                holes.setdefault(token, Hole(token, kind))
        templates = tuple(
            Template(parse_template(p, holes), tuple(_order_of(p, holes))) for p in pattern_texts
        )
        extra.append(
            Kernel(
                name=name,
                templates=templates,
                guards=dict(guard_map),
                cost=_compile_cost(cost_text) if cost_text else None,
            )
        )
        name, pattern_texts, guard_map, cost_text = None, [], {}, None

    for raw in open(path, encoding="utf-8"):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("kernel "):
            flush()
            name = line.split(None, 1)[1].strip()
        elif line.startswith("pattern:"):
            pattern_texts.append(line.split(":", 1)[1].strip())
        elif line.startswith("guards:"):
            for part in line.split(":", 1)[1].split(";"):
                part = part.strip()
                if not part:
                    continue
                hole, guard_text = part.split(None, 1)
                guard_map[hole] = parse_guard(guard_text)
        elif line.startswith("cost:"):
            cost_text = line.split(":", 1)[1].strip()
        else:
            raise ValidationError(f"unrecognized catalog line: {raw.strip()!r}")
    flush()
    return Catalog(base.patterns + tuple(extra), base.factorizations, base.config)


def _order_of(pattern_text: str, holes: dict[str, Hole]) -> list[str]:
    seen: list[str] = []
    for token in re.findall(r"[A-Za-z_][A-Za-z_0-9]*", pattern_text):
        if token in ("inv", "id") or token in seen or token not in holes:
            continue
        seen.append(token)
    return seen


_COST_TERM_RE = re.compile(
    r"(?P<coef>-?\d+(?:/\d+)?)?\s*\*?\s*(?P<body>(?:(?:rows|cols)\(\w+\)(?:\^\d+)?(?:\s*\*?\s*)?)*)"
)


def _compile_cost(text: str) -> CostFn:
    """Compile `2*rows(A)*cols(A) + ...` into a cost function."""
    pieces = []
    for term in text.replace("-", "+ -").split("+"):
        term = term.strip()
        if not term:
            continue
        coef = Fraction(1)
        if term.startswith("-"):
            coef = -coef
            term = term[1:].strip()
        factors: list[tuple[str, str, int]] = []
        for tok in re.findall(r"(?:\d+(?:/\d+)?)|(?:(?:rows|cols)\(\w+\)(?:\^\d+)?)", term):
            if tok[0].isdigit():
                coef *= Fraction(tok)
            else:
                m = re.match(r"(rows|cols)\((\w+)\)(?:\^(\d+))?", tok)
                factors.append((m.group(1), m.group(2), int(m.group(3) or 1)))
        pieces.append((coef, tuple(factors)))

    def fn(binding, dims, ctx, cfg) -> CostPolynomial:
        total = CostPolynomial.zero()
        for coef, factors in pieces:
            poly = CostPolynomial.constant(coef)
            for which, hole, exp in factors:
                r, c = ctx.dims(binding[hole])
                size = r if which == "rows" else c
                poly = poly * CostPolynomial.of_size(size if size is not None else 1, exp)
            total = total + poly
        return total

    return fn
