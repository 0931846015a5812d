"""Graded Lie algebras presented by generators and bracket relations.

Dimensions are extracted through the enveloping algebra: expand brackets via
[a,b] = ab - (-1)^{|a||b|} ba, compute the Hilbert series of the resulting
associative presentation, and apply the Moebius logarithm matching the sign
pattern of the generators.  A direct rank computation in degree 2 guards the
sign conventions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra import (
    NcPoly,
    Presentation,
    VarSpec,
    get_quotient,
    make_presentation,
)
from .errors import (
    InhomogeneousRelation,
    InvalidInput,
    NotAnEnvelopingSeries,
    ParseError,
)
from .linalg import fraction_rank
from .series import (
    DimSequence,
    SignedSeries,
    TruncSeries,
    logg,
    moebius,
    series_inverse,
    series_log,
)

# A Lie monomial is a generator leaf ('g', index) or a bracket
# ('b', left, right); a LieExpr is a rational linear combination of them.
LieMonomial = tuple


@dataclass(frozen=True)
class LieExpr:
    terms: Tuple[Tuple[Fraction, LieMonomial], ...]

    def __add__(self, other: "LieExpr") -> "LieExpr":
        return LieExpr(self.terms + other.terms)

    def scale(self, c) -> "LieExpr":
        c = Fraction(c)
        return LieExpr(tuple((c * a, mon) for a, mon in self.terms))

    @classmethod
    def generator(cls, index: int) -> "LieExpr":
        return cls(((Fraction(1), ("g", index)),))

    @classmethod
    def bracket(cls, left: "LieExpr", right: "LieExpr") -> "LieExpr":
        terms = []
        for c1, m1 in left.terms:
            for c2, m2 in right.terms:
                terms.append((c1 * c2, ("b", m1, m2)))
        return cls(tuple(terms))


def monomial_degree(mon: LieMonomial) -> int:
    if mon[0] == "g":
        return 1
    return monomial_degree(mon[1]) + monomial_degree(mon[2])


def monomial_sign(mon: LieMonomial, signs: Sequence[int]) -> int:
    if mon[0] == "g":
        return signs[mon[1]]
    return (monomial_sign(mon[1], signs) + monomial_sign(mon[2], signs)) % 2


def expr_degree(e: LieExpr) -> int:
    degs = {monomial_degree(m) for _, m in e.terms}
    if len(degs) != 1:
        raise InvalidInput("Lie expression mixes terms of different degree")
    return degs.pop()


def expand_monomial(mon: LieMonomial, signs: Sequence[int]) -> NcPoly:
    """Associative expansion: [a, b] = ab - (-1)^{|a||b|} ba."""
    if mon[0] == "g":
        return NcPoly.from_word((mon[1],))
    left, right = mon[1], mon[2]
    pl = expand_monomial(left, signs)
    pr = expand_monomial(right, signs)
    s = monomial_sign(left, signs) * monomial_sign(right, signs)
    return pl * pr - (pr * pl).scale((-1) ** s)


def expand_expr(e: LieExpr, signs: Sequence[int]) -> NcPoly:
    out = NcPoly.zero()
    for c, mon in e.terms:
        out = out + expand_monomial(mon, signs).scale(c)
    return out


@dataclass(frozen=True)
class LiePresentation:
    name: str
    generators: Tuple[VarSpec, ...]
    relations: Tuple[LieExpr, ...]

    @property
    def signs(self) -> Tuple[int, ...]:
        return tuple(v.sign for v in self.generators)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.generators)

    def __post_init__(self):
        for r in self.relations:
            expr_degree(r)
            seen = {monomial_sign(m, self.signs) for _, m in r.terms}
            if len(seen) > 1:
                raise InvalidInput("Lie relation mixes terms of different sign")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUM_RE = re.compile(r"\d+(/\d+)?")


def parse_lie_expr(text: str, name_index: Dict[str, int], line: int = None) -> LieExpr:
    """Nested brackets with rational coefficients, e.g. [h1,a1]+2*[h2,a1];
    bracket arguments may themselves be sums, expanded bilinearly."""
    pos = 0
    n = len(text)

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def fail(msg):
        raise ParseError(msg, line, pos + 1)

    def parse_sum() -> LieExpr:
        nonlocal pos
        skip_ws()
        sign = Fraction(1)
        if pos < n and text[pos] in "+-":
            sign = Fraction(-1) if text[pos] == "-" else Fraction(1)
            pos += 1
        acc = parse_term().scale(sign)
        while True:
            skip_ws()
            if pos < n and text[pos] in "+-":
                op = text[pos]
                pos += 1
                term = parse_term()
                acc = acc + term.scale(Fraction(-1) if op == "-" else Fraction(1))
            else:
                return acc

    def parse_term() -> LieExpr:
        nonlocal pos
        skip_ws()
        coeff = Fraction(1)
        m = _NUM_RE.match(text, pos)
        if m:
            coeff = Fraction(m.group(0))
            pos = m.end()
            skip_ws()
            if pos < n and text[pos] == "*":
                pos += 1
            skip_ws()
        return parse_atom().scale(coeff)

    def parse_atom() -> LieExpr:
        nonlocal pos
        skip_ws()
        if pos >= n:
            fail("unexpected end of Lie expression")
        if text[pos] == "[":
            pos += 1
            left = parse_sum()
            skip_ws()
            if pos >= n or text[pos] != ",":
                fail("expected ',' inside bracket")
            pos += 1
            right = parse_sum()
            skip_ws()
            if pos >= n or text[pos] != "]":
                fail("expected closing ']'")
            pos += 1
            return LieExpr.bracket(left, right)
        m = _NAME_RE.match(text, pos)
        if not m:
            fail(f"unexpected character {text[pos]!r}")
        name = m.group(0)
        if name not in name_index:
            raise ParseError(f"unknown variable {name!r}", line, pos + 1)
        pos = m.end()
        return LieExpr.generator(name_index[name])

    result = parse_sum()
    skip_ws()
    if pos != n:
        fail(f"trailing input {text[pos:]!r}")
    return result


def parse_lie_presentation(text: str) -> LiePresentation:
    name = None
    gens: List[VarSpec] = []
    name_index: Dict[str, int] = {}
    rels: List[Tuple[str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split(None, 1)
        head, rest = fields[0], (fields[1] if len(fields) > 1 else "")
        if head == "lie":
            if name is not None:
                raise ParseError("duplicate 'lie' line", lineno)
            if not rest or not _NAME_RE.fullmatch(rest.strip()):
                raise ParseError("expected: lie <name>", lineno)
            name = rest.strip()
        elif head == "var":
            parts = rest.split()
            if len(parts) != 2 or parts[1] not in ("even", "odd"):
                raise ParseError("expected: var <name> <even|odd>", lineno)
            if parts[0] in name_index:
                raise ParseError(f"duplicate variable {parts[0]!r}", lineno)
            name_index[parts[0]] = len(gens)
            gens.append(VarSpec(parts[0], 0 if parts[1] == "even" else 1))
        elif head == "rel":
            if not rest.strip():
                raise ParseError("empty relation", lineno)
            rels.append((rest.strip(), lineno))
        else:
            raise ParseError(f"unknown directive {head!r}", lineno)
    if name is None:
        raise ParseError("missing 'lie <name>' line", 1)
    exprs = []
    for text_, lineno in rels:
        e = parse_lie_expr(text_, name_index, lineno)
        try:
            expr_degree(e)
        except InvalidInput:
            raise InhomogeneousRelation(
                "Lie relation mixes terms of different degree", lineno
            )
        exprs.append(e)
    return LiePresentation(name, tuple(gens), tuple(exprs))


def lie_expr_to_str(e: LieExpr, names: Sequence[str]) -> str:
    def mono(m) -> str:
        if m[0] == "g":
            return names[m[1]]
        return f"[{mono(m[1])},{mono(m[2])}]"

    parts = []
    for c, m in e.terms:
        if c == 1:
            s = mono(m)
        elif c == -1:
            s = f"-{mono(m)}"
        else:
            cs = str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
            s = f"{cs}*{mono(m)}"
        parts.append(s)
    out = parts[0]
    for s in parts[1:]:
        out += f" - {s[1:]}" if s.startswith("-") else f" + {s}"
    return out


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def uea_presentation(L: LiePresentation) -> Presentation:
    """The enveloping algebra as an associative presentation."""
    signs = L.signs
    rels = []
    for e in L.relations:
        p = expand_expr(e, signs)
        if p.is_zero():
            continue  # e.g. [a,a] for even a expands to 0
        rels.append(p)
    return make_presentation(
        name=L.name + "_env",
        vars=L.generators,
        flavor="free",
        relations=rels,
    )


def _degree2_dimension(L: LiePresentation) -> int:
    """Independent degree-2 count: brackets [g_i,g_j] (i<j) and odd squares,
    minus the rank of the degree-2 relations expanded in the UEA."""
    m = len(L.generators)
    signs = L.signs
    free_dim = m * (m - 1) // 2 + sum(signs)
    quad = [expand_expr(e, signs) for e in L.relations if expr_degree(e) == 2]
    quad = [p for p in quad if not p.is_zero()]
    if not quad:
        return free_dim
    cols = {}
    rows = []
    for p in quad:
        row = {}
        for w, c in p.terms.items():
            col = cols.setdefault(w, len(cols))
            row[col] = c
        rows.append(row)
    dense = [[r.get(c, Fraction(0)) for c in range(len(cols))] for r in rows]
    return free_dim - fraction_rank(dense, len(cols))


def lie_dims(L: LiePresentation, N: int) -> DimSequence:
    """Graded dimensions of the Lie algebra through degree N."""
    if N < 1:
        raise InvalidInput("N must be at least 1")
    pres = uea_presentation(L)
    q = get_quotient(pres)
    signs = set(L.signs)
    if signs == {0}:
        H = q.hilbert(N)
        out = logg(H, "even")
    elif signs == {1}:
        H = q.hilbert(N)
        out = logg(H, "alternating")
    else:
        out = logg(q.hilbert_signed(N), "mixed")
    dims = DimSequence.from_signed_series(out)
    if N >= 2:
        expected2 = _degree2_dimension(L)
        if dims.total[1] != expected2:
            raise NotAnEnvelopingSeries(
                f"degree-2 dimension {dims.total[1]} disagrees with direct count {expected2}"
            )
    return dims


def koszul_lie_dims(H: TruncSeries, N: int) -> DimSequence:
    """Lie dimensions attached to a Koszul algebra's Hilbert series via the
    alternating Moebius logarithm of 1/H(-z)."""
    if H.coeffs[0] != 1:
        raise InvalidInput("Hilbert series must have constant term 1")
    if N > H.truncation:
        raise InvalidInput("requested degree exceeds the series truncation")
    V = series_inverse(H.substitute_power(1, -1)).truncate(N)
    out = logg(V, "alternating")
    return DimSequence.from_signed_series(out)


def edge_ideal_lie_dims(d: TruncSeries, n: int, N: int) -> DimSequence:
    """n*z + sum_{r,s>=1} mu(r)/(r*s) * (1 - d((-z)^r))^s, truncated at N.

    d is the alternating Koszul-homology polynomial of an edge-ideal ring on
    n generators; the output are the Lie dimensions of the associated
    diagonal subalgebra.
    """
    if d.coeffs[0] != 1:
        raise InvalidInput("d must have constant term 1")
    acc = TruncSeries.monomial(1, N, n)
    for r in range(1, N + 1):
        mu = moebius(r)
        if mu == 0:
            continue
        u = TruncSeries.one(N) - _subst_neg_power(d, r, N)
        val = next((k for k, c in enumerate(u.coeffs) if c), None)
        if val is None:
            continue
        power = u
        s = 1
        while s * val <= N:
            acc = acc + power.scale(Fraction(mu, r * s))
            s += 1
            if s * val <= N:
                power = power * u
    out = SignedSeries.by_parity(acc)
    for part in (out.even, out.odd):
        for c in part.coeffs:
            if c.denominator != 1:
                raise NotAnEnvelopingSeries("non-integral edge-ideal dimensions")
    return DimSequence.from_signed_series(out)


def _subst_neg_power(d: TruncSeries, r: int, N: int) -> TruncSeries:
    """d((-z)^r) truncated at N."""
    out = [Fraction(0)] * (N + 1)
    for k, c in enumerate(d.coeffs):
        deg = k * r
        if deg > N:
            break
        out[deg] = c if (k * r) % 2 == 0 else -c
    return TruncSeries(out, N)


def lie_element_is_zero(L: LiePresentation, e: LieExpr) -> bool:
    """Whether a homogeneous Lie expression vanishes in the Lie algebra;
    by injectivity into the enveloping algebra this is membership of the
    associative expansion in the defining ideal."""
    expr_degree(e)
    p = expand_expr(e, L.signs)
    if p.is_zero():
        return True
    q = get_quotient(uea_presentation(L))
    return q.is_zero_mod_ideal(p)
