"""Koszul (quadratic) duality.

The dual of T(V)/(R) with R spanned by degree-2 relations is the quadratic
algebra on the dual generators, with relation space the annihilator of R
under the signed pairing

    (f (x) g)(u (x) v) = (-1)^{|v|(|u|+1)} f(u) g(v)

which degenerates to the plain pairing when all generators share one sign.
Dual generators get the flipped sign 1 - |x_i|.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

from .algebra import NcPoly, Presentation, VarSpec, make_presentation
from .errors import InvalidInput, NotQuadratic
from .linalg import fraction_nullspace, fraction_rref


@dataclass(frozen=True)
class QuadraticData:
    """Degree-2 relation span of a quadratic presentation, row-reduced over
    the n^2 word basis (column order: descending deglex)."""

    n: int
    signs: Tuple[int, ...]
    relation_matrix: Tuple[Tuple[Fraction, ...], ...]

    @classmethod
    def from_presentation(cls, pres: Presentation) -> "QuadraticData":
        n = pres.nvars
        if n == 0:
            raise InvalidInput("presentation has no generators")
        for r in pres.relations:
            if r.degree() != 2:
                raise NotQuadratic(
                    f"relation {r.to_str(pres.names)} has degree {r.degree()}"
                )
        rows = [_poly_row(r, n) for r in pres.relations]
        _, rref = fraction_rref(rows, n * n)
        return cls(n, pres.signs, tuple(tuple(r) for r in rref))

    @property
    def rank(self) -> int:
        return len(self.relation_matrix)


def _pair_order(n: int) -> List[Tuple[int, int]]:
    """Degree-2 words in descending deglex order (largest first)."""
    return [(i, j) for i in reversed(range(n)) for j in reversed(range(n))]


def _poly_row(p: NcPoly, n: int) -> List[Fraction]:
    col_of = {pair: col for col, pair in enumerate(_pair_order(n))}
    row = [Fraction(0)] * (n * n)
    for word, c in p.terms.items():
        row[col_of[word]] = c
    return row


def _row_poly(row, n: int) -> NcPoly:
    terms = {}
    for col, c in enumerate(row):
        if c:
            terms[_pair_order(n)[col]] = Fraction(c)
    return NcPoly(terms)


def pairing_sign(sign_u: int, sign_v: int) -> int:
    """Sign of (f (x) g)(u (x) v) for |u| = sign_u, |v| = sign_v."""
    return -1 if (sign_v * (sign_u + 1)) % 2 else 1


def koszul_dual_with_matrix(pres: Presentation):
    """The Koszul dual presentation and the canonical solution basis.

    The returned matrix rows are the dual relations in the descending-deglex
    word order of the dual generators, in reduced row echelon form with unit
    leading coefficients.
    """
    data = QuadraticData.from_presentation(pres)
    n, signs = data.n, data.signs
    order = _pair_order(n)
    # constraint rows: a dual tensor S annihilates relation r iff
    # sum_{ij} S_ij * eps_ij * r_ij = 0
    constraints = []
    for row in data.relation_matrix:
        constraints.append(
            [
                c * pairing_sign(signs[i], signs[j])
                for (i, j), c in zip(order, row)
            ]
        )
    kernel = fraction_nullspace(constraints, n * n)
    _, basis = fraction_rref(kernel, n * n)

    dual_vars = [VarSpec(f"T{i + 1}", 1 - signs[i]) for i in range(n)]
    rel_polys = [_row_poly(row, n) for row in basis]
    dual = make_presentation(
        name=pres.name + "_dual",
        vars=dual_vars,
        flavor="free",
        relations=rel_polys,
    )
    return dual, [list(r) for r in basis]


def koszul_dual(pres: Presentation) -> Presentation:
    """Quadratic dual presentation (see koszul_dual_with_matrix)."""
    dual, _ = koszul_dual_with_matrix(pres)
    return dual


def relation_span_equal(a: Presentation, b: Presentation) -> bool:
    """Whether two quadratic presentations on equally many generators have
    the same degree-2 relation span."""
    da = QuadraticData.from_presentation(a)
    db = QuadraticData.from_presentation(b)
    return da.n == db.n and da.relation_matrix == db.relation_matrix
