"""Value-preserving rewrites on canonical expressions.

`simplify` runs the knowledge-base rules to a fixpoint: distributing an
inverse over a product of square factors, cancelling products with an
orthonormal matrix or with an explicit inverse, absorbing identities and
collapsing scalar arithmetic.  `expand_identity` applies the reverse
orthonormal rewrite (an identity becomes Z*Z' or Z'*Z), which widens the
search space instead of narrowing it.  Segment discovery enumerates the
contiguous pieces of products and sums that later map onto kernels;
occurrences are counted modulo transposition, so a segment and its
transpose are one reusable quantity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .expr import (
    Expression,
    Identity,
    ID,
    Inv,
    Operand,
    Plus,
    Scalar,
    Times,
    Trans,
    canonicalize,
    children,
    is_scalar_expr,
    node_count,
    rebuild,
    structural_key,
    transposed,
    walk,
)
from .properties import Property, PropertyContext, infer

MAX_SIMPLIFY_PASSES = 50


def simplify(e: Expression, ctx: PropertyContext, max_passes: int = MAX_SIMPLIFY_PASSES) -> Expression:
    """Apply the rule set to a fixpoint (bounded by a pass budget)."""
    cur = canonicalize(e, ctx)
    for _ in range(max_passes):
        new = canonicalize(_pass(cur, ctx), ctx)
        if new == cur:
            return cur
        cur = new
    return cur


def _pass(e: Expression, ctx: PropertyContext) -> Expression:
    kids = children(e)
    if kids:
        new = tuple(_pass(c, ctx) for c in kids)
        if new != kids:
            e = canonicalize(rebuild(e, new), ctx)

    if isinstance(e, Inv):
        inner = e.child
        if isinstance(inner, Identity):
            return inner
        if Property.ORTHOGONAL_SQUARE in infer(inner, ctx):
            return canonicalize(Trans(inner), ctx)
        if isinstance(inner, Times):
            # distributing over square factors is sound: the product is being
            # inverted, so every square factor in it must itself be invertible
            scalars = ctx.scalar_operands()
            parts = []
            ok = True
            for f in inner.factors:
                if is_scalar_expr(f, scalars):
                    parts.append(Inv(f))
                elif Property.SQUARE in infer(f, ctx):
                    parts.append(Inv(f))
                else:
                    ok = False
                    break
            if ok:
                matrix_parts = [p for p in parts if not is_scalar_expr(p, scalars)]
                scalar_parts = [p for p in parts if is_scalar_expr(p, scalars)]
                matrix_parts.reverse()
                return canonicalize(Times(tuple(scalar_parts + matrix_parts)), ctx)
        return e

    if isinstance(e, Times):
        scalars = ctx.scalar_operands()
        factors = list(e.factors)
        changed = False
        i = 0
        while i < len(factors) - 1:
            a, b = factors[i], factors[i + 1]
            if is_scalar_expr(a, scalars) or is_scalar_expr(b, scalars):
                i += 1
                continue
            if _cancels_to_identity(a, b, ctx):
                factors[i : i + 2] = [ID]
                changed = True
                # rescan from the previous factor: new adjacency may cancel
                i = max(i - 1, 0)
                continue
            i += 1
        matrix_like = [
            f for f in factors
            if not is_scalar_expr(f, scalars) and not isinstance(f, Identity)
        ]
        if matrix_like and any(isinstance(f, Identity) for f in factors):
            factors = [f for f in factors if not isinstance(f, Identity)]
            changed = True
        if changed:
            return canonicalize(Times(tuple(factors)), ctx)
        return e

    return e


def _cancels_to_identity(a: Expression, b: Expression, ctx: PropertyContext) -> bool:
    if isinstance(a, Inv) and a.child == b and Property.SQUARE in infer(b, ctx):
        return True
    if isinstance(b, Inv) and b.child == a and Property.SQUARE in infer(a, ctx):
        return True
    # q' * q with orthonormal columns; q * q' needs square orthogonality
    if transposed(a, ctx) == b and Property.ORTHONORMAL_COLUMNS in infer(b, ctx):
        return True
    if transposed(b, ctx) == a and Property.ORTHOGONAL_SQUARE in infer(a, ctx):
        return True
    return False


# --- identity expansion ---------------------------------------------------------


def orthonormal_square_operands(e: Expression, ctx: PropertyContext) -> list[str]:
    names = sorted({n.name for n in walk(e) if isinstance(n, Operand)})
    return [n for n in names if Property.ORTHOGONAL_SQUARE in infer(Operand(n), ctx)]


def _identity_paths(e: Expression, prefix: tuple[int, ...] = ()) -> list[tuple[int, ...]]:
    if isinstance(e, Identity):
        return [prefix]
    out: list[tuple[int, ...]] = []
    for i, c in enumerate(children(e)):
        out.extend(_identity_paths(c, prefix + (i,)))
    return out


def _replace_at(e: Expression, path: tuple[int, ...], new: Expression) -> Expression:
    if not path:
        return new
    kids = list(children(e))
    kids[path[0]] = _replace_at(kids[path[0]], path[1:], new)
    return rebuild(e, tuple(kids))


def expand_identity(e: Expression, ctx: PropertyContext) -> set[Expression]:
    """Variants of `e` with one identity occurrence rewritten to Z*Z' or Z'*Z.

    Z ranges over the square orthonormal operands visible in `e`; an empty
    result means the transformation is inapplicable here.
    """
    paths = _identity_paths(e)
    if not paths:
        raise ValueError("expression contains no identity symbol")
    zs = orthonormal_square_operands(e, ctx)
    out: set[Expression] = set()
    for name in zs:
        z = Operand(name)
        for path in paths:
            for repl in (Times((z, Trans(z))), Times((Trans(z), z))):
                out.add(canonicalize(_replace_at(e, path, repl), ctx))
    return out


def group_common_outer(e: Expression, ctx: PropertyContext) -> Expression | None:
    """Factor a shared left/right pair out of a sum: F*A*G + s*F*G -> F*(A + s*I)*G.

    Returns None when the terms do not share both outer factors.  This is the
    grouping step that turns an expanded identity back into a congruence the
    inverse can be distributed over.
    """
    if not isinstance(e, Plus) or len(e.terms) < 2:
        return None
    scalars = ctx.scalar_operands()
    decomposed = []
    for term in e.terms:
        if not isinstance(term, Times):
            return None
        sc = [f for f in term.factors if is_scalar_expr(f, scalars)]
        mat = [f for f in term.factors if not is_scalar_expr(f, scalars)]
        if len(mat) < 2:
            return None
        decomposed.append((sc, mat))
    first = decomposed[0][1][0]
    last = decomposed[0][1][-1]
    for _, mat in decomposed[1:]:
        if mat[0] != first or mat[-1] != last:
            return None
    middles = []
    for sc, mat in decomposed:
        middle = mat[1:-1]
        inner: Expression
        if middle:
            inner = Times(tuple(sc + middle)) if sc else (
                middle[0] if len(middle) == 1 else Times(tuple(middle))
            )
        else:
            inner = Times(tuple(sc + [ID])) if sc else ID
        middles.append(inner)
    grouped = Times((first, Plus(tuple(middles)), last))
    return canonicalize(grouped, ctx)


# --- segment discovery ------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """A contiguous sub-product or sub-sum, counted modulo transposition."""

    expr: Expression  # canonical representative
    count: int

    def __repr__(self):
        return f"Segment({self.expr!r}, count={self.count})"


def _trans_count(e: Expression) -> int:
    return sum(1 for n in walk(e) if isinstance(n, Trans))


def _representative(canon: Expression, ctx: PropertyContext) -> Expression:
    other = transposed(canon, ctx)
    if other == canon:
        return canon
    a, b = sorted((canon, other), key=lambda x: (_trans_count(x), structural_key(x)))
    return a


def candidate_segments(e: Expression, ctx: PropertyContext) -> dict[Expression, int]:
    """Map canonical representative -> occurrence count over all of `e`."""
    scalars = ctx.scalar_operands()
    counts: dict[Expression, int] = {}

    def note(sub: Expression) -> None:
        canon = canonicalize(sub, ctx)
        if is_scalar_expr(canon, scalars):
            return
        rep = _representative(canon, ctx)
        counts[rep] = counts.get(rep, 0) + 1

    for node in walk(e):
        if isinstance(node, Times):
            fs = node.factors
            k = len(fs)
            for i in range(k):
                for j in range(i + 2, k + 1):
                    run = fs[i:j]
                    if all(is_scalar_expr(f, scalars) for f in run):
                        continue
                    # a run must not split a scalar prefix off uselessly
                    note(Times(run) if len(run) > 1 else run[0])
        elif isinstance(node, Plus):
            terms = node.terms
            if len(terms) == 2:
                note(node)
            else:
                for i in range(len(terms)):
                    for j in range(i + 1, len(terms)):
                        note(Plus((terms[i], terms[j])))
                note(node)
    return counts


def find_segments(
    e: Expression,
    ctx: PropertyContext,
    saving: Callable[[Expression], float] | None = None,
) -> list[Segment]:
    """Segments of `e` ordered by (occurrence count desc, flop saving desc).

    `saving` estimates the flops needed to compute a segment once; reusing a
    segment that occurs k times saves (k-1) of those.  Without a cost model
    the node count stands in.
    """
    counts = candidate_segments(e, ctx)
    est = saving if saving is not None else lambda s: float(node_count(s))
    segs = [Segment(expr, cnt) for expr, cnt in counts.items()]
    segs.sort(
        key=lambda s: (-s.count, -(s.count - 1) * est(s.expr), structural_key(s.expr))
    )
    return segs


def replace_segment(
    e: Expression, segment: Expression, replacement: Expression, ctx: PropertyContext
) -> Expression:
    """Replace occurrences of `segment` (or its transpose) throughout `e`.

    Matching is canonical and greedy left-to-right within each product, so
    overlapping occurrences resolve deterministically.
    """
    seg = canonicalize(segment, ctx)
    seg_t = transposed(seg, ctx)
    repl = canonicalize(replacement, ctx)
    repl_t = transposed(repl, ctx)
    seg_len = len(seg.factors) if isinstance(seg, Times) else 1

    def visit(node: Expression) -> Expression:
        kids = children(node)
        if kids:
            new_kids = tuple(visit(c) for c in kids)
            if new_kids != kids:
                node = canonicalize(rebuild(node, new_kids), ctx)
        if node == seg:
            return repl
        if node == seg_t:
            return repl_t
        if isinstance(node, Times) and seg_len >= 1:
            fs = list(node.factors)
            out: list[Expression] = []
            i = 0
            changed = False
            while i < len(fs):
                matched = False
                if i + seg_len <= len(fs):
                    window = fs[i : i + seg_len]
                    sub = window[0] if seg_len == 1 else Times(tuple(window))
                    sub_c = canonicalize(sub, ctx)
                    if sub_c == seg:
                        out.append(repl)
                        i += seg_len
                        matched = changed = True
                    elif sub_c == seg_t:
                        out.append(repl_t)
                        i += seg_len
                        matched = changed = True
                if not matched:
                    out.append(fs[i])
                    i += 1
            if changed:
                return canonicalize(Times(tuple(out)), ctx)
        if isinstance(node, Plus) and isinstance(seg, Plus):
            terms = list(node.terms)
            seg_terms = list(seg.terms)
            if len(terms) > len(seg_terms):
                remaining = terms[:]
                picked = []
                for st in seg_terms:
                    if st in remaining:
                        remaining.remove(st)
                        picked.append(st)
                if len(picked) == len(seg_terms):
                    return canonicalize(Plus(tuple([repl] + remaining)), ctx)
        return node

    return canonicalize(visit(canonicalize(e, ctx)), ctx)
