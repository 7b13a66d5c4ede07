"""Exact flop-count polynomials over the problem-size symbols n, p, m, t.

Coefficients are rationals so costs stay exact; asymptotic comparison uses
the size regime in which the solver families are meant to run: the matrix
dimension dominates the sequence extents, which dominate the panel width
(n >> m,t >> p).
"""

from __future__ import annotations

from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

# A monomial is a sorted tuple of (symbol, exponent) pairs, exponents > 0.
Monomial = tuple[tuple[str, int], ...]

#: Dominance ranks of the size symbols: higher rank grows faster.
DEFAULT_ORDERING: dict[str, int] = {"n": 3, "m": 2, "t": 2, "p": 1}


def monomial(**powers: int) -> Monomial:
    return tuple(sorted((s, e) for s, e in powers.items() if e != 0))


def monomial_str(m: Monomial) -> str:
    if not m:
        return "1"
    parts = []
    for sym, exp in sorted(m, key=lambda se: (-DEFAULT_ORDERING.get(se[0], 0), se[0])):
        parts.append(sym if exp == 1 else f"{sym}^{exp}")
    return "*".join(parts)


class CostPolynomial:
    """Polynomial with rational coefficients over size symbols."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = {}
        if terms:
            for mono, coef in terms.items():
                c = Fraction(coef)
                if c != 0:
                    self.terms[mono] = c

    @staticmethod
    def zero() -> "CostPolynomial":
        return CostPolynomial()

    @staticmethod
    def constant(value: Fraction | int) -> "CostPolynomial":
        return CostPolynomial({(): Fraction(value)})

    @staticmethod
    def symbol(name: str, exponent: int = 1, coef: Fraction | int = 1) -> "CostPolynomial":
        return CostPolynomial({monomial(**{name: exponent}): Fraction(coef)})

    @staticmethod
    def of_size(size: "str | int", exponent: int = 1, coef: Fraction | int = 1) -> "CostPolynomial":
        """Monomial from a symbolic dimension or a literal integer size."""
        if isinstance(size, int):
            return CostPolynomial.constant(Fraction(coef) * size**exponent)
        return CostPolynomial.symbol(size, exponent, coef)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CostPolynomial) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "CostPolynomial") -> "CostPolynomial":
        out = dict(self.terms)
        for mono, coef in other.terms.items():
            c = out.get(mono, Fraction(0)) + coef
            if c == 0:
                out.pop(mono, None)
            else:
                out[mono] = c
        return CostPolynomial(out)

    def __mul__(self, other: "CostPolynomial") -> "CostPolynomial":
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                powers: dict[str, int] = dict(m1)
                for sym, exp in m2:
                    powers[sym] = powers.get(sym, 0) + exp
                mono = tuple(sorted(powers.items()))
                c = out.get(mono, Fraction(0)) + c1 * c2
                if c == 0:
                    out.pop(mono, None)
                else:
                    out[mono] = c
        return CostPolynomial(out)

    def scale(self, factor: Fraction | int) -> "CostPolynomial":
        f = Fraction(factor)
        return CostPolynomial({m: c * f for m, c in self.terms.items()})

    def mul_by_extent(self, extents: Iterable[str | int]) -> "CostPolynomial":
        """Multiply by the product of loop extents (symbols or literal sizes)."""
        out = self
        for ext in extents:
            out = out * CostPolynomial.of_size(ext)
        return out

    def evaluate(self, values: Mapping[str, int]) -> Fraction:
        total = Fraction(0)
        for mono, coef in self.terms.items():
            term = coef
            for sym, exp in mono:
                if sym not in values:
                    raise KeyError(f"unbound size symbol {sym!r}")
                term *= Fraction(values[sym]) ** exp
            total += term
        return total

    def substitute_one(self, symbol: str) -> "CostPolynomial":
        """Set one symbol to 1 (drop it from every monomial)."""
        out: dict[Monomial, Fraction] = {}
        for mono, coef in self.terms.items():
            new = tuple((s, e) for s, e in mono if s != symbol)
            out[new] = out.get(new, Fraction(0)) + coef
        return CostPolynomial(out)

    def monomials(self) -> set[Monomial]:
        return set(self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        keys = sorted(self.terms, key=_render_key)
        parts = []
        for mono in keys:
            coef = self.terms[mono]
            if not mono:
                parts.append(str(coef))
            elif coef == 1:
                parts.append(monomial_str(mono))
            else:
                parts.append(f"{coef}*{monomial_str(mono)}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"CostPolynomial({self})"


def _render_key(m: Monomial):
    d = dict(m)
    return (
        -sum(e * DEFAULT_ORDERING.get(s, 0) for s, e in m),
        -d.get("n", 0),
        -d.get("m", 0),
        -d.get("t", 0),
        -d.get("p", 0),
    )


def _tier_vector(m: Monomial, ordering: Mapping[str, int]) -> tuple[int, int, int]:
    """Dominance coordinates: (top-tier degree, mid degree, top+low degree).

    A monomial is dominated when every coordinate is <=.  Folding the low
    tier into the top one encodes that any power of the small symbol is
    absorbed by one extra power of the dominant one, while mid-tier extents
    (the sequence lengths) are only comparable by their own total degree.
    """
    top = mid = low = 0
    for sym, exp in m:
        rank = ordering.get(sym, 0)
        if rank >= 3:
            top += exp
        elif rank == 2:
            mid += exp
        elif rank == 1:
            low += exp
    return (top, mid, top + low)


def dominated(m1: Monomial, m2: Monomial, ordering: Mapping[str, int] | None = None) -> bool:
    """True when m1 grows strictly slower than m2 in the declared regime."""
    if m1 == m2:
        return False
    ordering = ordering or DEFAULT_ORDERING
    v1 = _tier_vector(m1, ordering)
    v2 = _tier_vector(m2, ordering)
    if v1 == v2:
        return False
    return all(a <= b for a, b in zip(v1, v2))


def leading_terms(
    poly: CostPolynomial, ordering: Mapping[str, int] | None = None
) -> set[Monomial]:
    """Maximal monomials of a nonzero polynomial under the dominance regime."""
    if not poly:
        raise ValueError("leading_terms of the zero polynomial")
    ordering = ordering or DEFAULT_ORDERING
    monos = [m for m in poly.terms if poly.terms[m] > 0] or list(poly.terms)
    out = set()
    for m in monos:
        if not any(dominated(m, other, ordering) for other in monos if other != m):
            out.add(m)
    return out


def render_leading(terms: set[Monomial]) -> str:
    ordered = sorted(terms, key=_render_key)
    return "O(" + " + ".join(monomial_str(m) for m in ordered) + ")"


class Comparison(Enum):
    LESS = "less"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"


def compare_asymptotic(
    c1: CostPolynomial,
    c2: CostPolynomial,
    regime: Mapping[str, int] | None = None,
) -> Comparison:
    """Compare two cost polynomials in a growth regime.

    Symbols ranked 0 in the regime are fixed to 1 before comparison.  Equal
    leading sets (including identical polynomials) are reported as
    incomparable: neither side wins asymptotically.
    """
    regime = dict(regime or DEFAULT_ORDERING)
    for sym, rank in regime.items():
        if rank == 0:
            c1 = c1.substitute_one(sym)
            c2 = c2.substitute_one(sym)
    l1 = leading_terms(c1, regime)
    l2 = leading_terms(c2, regime)
    if l1 == l2:
        return Comparison.INCOMPARABLE

    def covered(src: set[Monomial], dst: set[Monomial]) -> bool:
        return all(m in dst or any(dominated(m, d, regime) for d in dst) for m in src)

    if covered(l1, l2) and not covered(l2, l1):
        return Comparison.LESS
    if covered(l2, l1) and not covered(l1, l2):
        return Comparison.GREATER
    return Comparison.INCOMPARABLE
