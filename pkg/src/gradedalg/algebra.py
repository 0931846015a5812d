"""Finitely presented graded algebras over Q.

A presentation has signed degree-1 generators and homogeneous relations.
Hilbert coefficients and degreewise quotient bases come from exact row
reduction of the ideal's degree-n component, organized through the
recursion I_n = V*I_{n-1} + sum_r r*V^{n-deg r}: in quotient coordinates
the degree-n span is generated by the rows r*w over normal words w, which
keeps the matrices at the size of the quotient rather than of the free
algebra.

Every elimination is additionally split into independent blocks along the
finest abelian multigrading compatible with the relations (each relation's
words must share a class); for monomial or commutative presentations this
collapses to full multidegree blocks and the matrices become tiny.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    InhomogeneousRelation,
    InvalidInput,
    ParseError,
)
from .linalg import FreePivotRref, IntEchelon, clear_denominators
from .series import SignedSeries, TruncSeries

Word = Tuple[int, ...]

_INT64_SAFE = 1 << 62

FLAVORS = ("free", "polynomial", "exterior", "graded_commutative")


@dataclass(frozen=True)
class VarSpec:
    """A degree-1 generator with a Z_2 sign (0 even, 1 odd)."""

    name: str
    sign: int

    def __post_init__(self):
        if self.sign not in (0, 1):
            raise InvalidInput(f"sign of {self.name} must be 0 or 1")


def deglex_key(word: Word):
    return (len(word), word)


class NcPoly:
    """Noncommutative polynomial: finite map word -> nonzero rational."""

    __slots__ = ("terms",)

    def __init__(self, terms: Dict[Word, Fraction]):
        self.terms = {w: Fraction(c) for w, c in terms.items() if c != 0}

    @classmethod
    def from_word(cls, word: Word, coeff=1) -> "NcPoly":
        return cls({tuple(word): Fraction(coeff)})

    @classmethod
    def zero(cls) -> "NcPoly":
        return cls({})

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "NcPoly") -> "NcPoly":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, Fraction(0)) + c
        return NcPoly(out)

    def __neg__(self) -> "NcPoly":
        return NcPoly({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "NcPoly") -> "NcPoly":
        return self + (-other)

    def scale(self, c) -> "NcPoly":
        c = Fraction(c)
        return NcPoly({w: c * a for w, a in self.terms.items()})

    def __mul__(self, other: "NcPoly") -> "NcPoly":
        out: Dict[Word, Fraction] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = w1 + w2
                out[w] = out.get(w, Fraction(0)) + c1 * c2
        return NcPoly(out)

    def is_homogeneous(self) -> bool:
        lengths = {len(w) for w in self.terms}
        return len(lengths) <= 1

    def degree(self) -> int:
        if not self.terms:
            raise InvalidInput("degree of the zero polynomial")
        if not self.is_homogeneous():
            raise InvalidInput("polynomial is not homogeneous")
        return len(next(iter(self.terms)))

    def sign(self, signs: Sequence[int]) -> int:
        """Common Z_2 sign of all words; raises if mixed."""
        seen = {sum(signs[i] for i in w) % 2 for w in self.terms}
        if len(seen) > 1:
            raise InvalidInput("polynomial mixes terms of different sign")
        return seen.pop() if seen else 0

    def leading_word(self) -> Word:
        return max(self.terms, key=deglex_key)

    def monic(self) -> "NcPoly":
        if not self.terms:
            return self
        lead = self.terms[self.leading_word()]
        return self.scale(Fraction(1) / lead)

    def key(self):
        return tuple(sorted((w, c) for w, c in self.terms.items()))

    def __eq__(self, other):
        return isinstance(other, NcPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(self.key())

    def to_str(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for w in sorted(self.terms, key=deglex_key):
            c = self.terms[w]
            mono = "*".join(names[i] for i in w) if w else "1"
            if c == 1:
                term = mono
            elif c == -1:
                term = f"-{mono}"
            else:
                cs = str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
                term = f"{cs}*{mono}"
            parts.append(term)
        out = parts[0]
        for term in parts[1:]:
            out += f" - {term[1:]}" if term.startswith("-") else f" + {term}"
        return out

    def __repr__(self):
        return f"NcPoly({self.terms!r})"


@dataclass(frozen=True)
class Presentation:
    """A finitely presented graded algebra.

    `relations` is the flavor-expanded list actually dividing the free
    algebra; `source_relations` is what was listed by the user.
    """

    name: str
    vars: Tuple[VarSpec, ...]
    flavor: str
    relations: Tuple[NcPoly, ...]
    source_relations: Tuple[NcPoly, ...]

    @property
    def nvars(self) -> int:
        return len(self.vars)

    @property
    def signs(self) -> Tuple[int, ...]:
        return tuple(v.sign for v in self.vars)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.vars)

    def cache_key(self):
        return (
            self.names,
            self.signs,
            tuple(r.key() for r in self.relations),
        )

    def is_quadratic(self) -> bool:
        return all(r.degree() == 2 for r in self.relations)

    def max_relation_degree(self) -> int:
        return max((r.degree() for r in self.relations), default=0)

    def quadratic_part(self) -> "Presentation":
        """The subalgebra data cut out by the degree-2 relations only."""
        quad = tuple(r for r in self.relations if r.degree() == 2)
        return Presentation(
            name=self.name + "_quad",
            vars=self.vars,
            flavor="free",
            relations=quad,
            source_relations=quad,
        )

    def serialize(self) -> str:
        lines = [f"algebra {self.name}"]
        flavor = "graded" if self.flavor == "graded_commutative" else self.flavor
        lines.append(f"flavor {flavor}")
        for v in self.vars:
            lines.append(f"var {v.name} {'even' if v.sign == 0 else 'odd'}")
        for r in self.source_relations:
            lines.append(f"rel {r.to_str(self.names)}")
        return "\n".join(lines) + "\n"


def _flavor_relations(flavor: str, vars: Sequence[VarSpec]) -> List[NcPoly]:
    m = len(vars)
    out: List[NcPoly] = []
    if flavor == "polynomial":
        if any(v.sign != 0 for v in vars):
            raise ParseError("polynomial flavor requires all variables even")
        for i in range(m):
            for j in range(i + 1, m):
                out.append(NcPoly({(i, j): Fraction(1), (j, i): Fraction(-1)}))
    elif flavor == "exterior":
        if any(v.sign != 1 for v in vars):
            raise ParseError("exterior flavor requires all variables odd")
        for i in range(m):
            for j in range(i, m):
                if i == j:
                    out.append(NcPoly({(i, i): Fraction(1)}))
                else:
                    out.append(NcPoly({(i, j): Fraction(1), (j, i): Fraction(1)}))
    elif flavor == "graded_commutative":
        for i in range(m):
            for j in range(i + 1, m):
                s = vars[i].sign * vars[j].sign
                out.append(NcPoly({(i, j): Fraction(1), (j, i): Fraction(-((-1) ** s))}))
            if vars[i].sign == 1:
                out.append(NcPoly({(i, i): Fraction(1)}))
    elif flavor != "free":
        raise ParseError(f"unknown flavor {flavor!r}")
    return out


def make_presentation(
    name: str,
    vars: Sequence[VarSpec],
    flavor: str,
    relations: Sequence[NcPoly],
    line_of_relation: Optional[Sequence[int]] = None,
) -> Presentation:
    """Validate and flavor-expand a presentation."""
    seen = set()
    for v in vars:
        if v.name in seen:
            raise ParseError(f"duplicate variable {v.name!r}")
        seen.add(v.name)
    signs = [v.sign for v in vars]
    expanded = _flavor_relations(flavor, vars)
    checked: List[NcPoly] = []
    for k, r in enumerate(relations):
        line = line_of_relation[k] if line_of_relation else None
        if r.is_zero():
            raise ParseError("relation is identically zero", line)
        if not r.is_homogeneous():
            raise InhomogeneousRelation(
                "relation mixes terms of different degree", line
            )
        if r.degree() < 2:
            raise InhomogeneousRelation(
                f"relation of degree {r.degree()} < 2", line
            )
        try:
            r.sign(signs)
        except InvalidInput:
            raise InhomogeneousRelation(
                "relation mixes terms of different sign", line
            )
        checked.append(r.monic())
    return Presentation(
        name=name,
        vars=tuple(vars),
        flavor=flavor,
        relations=tuple(x.monic() for x in expanded) + tuple(checked),
        source_relations=tuple(checked),
    )


# ---------------------------------------------------------------------------
# Presentation file parsing
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUM_RE = re.compile(r"\d+(/\d+)?")


def tokenize_poly(text: str, line: int):
    """Yield (kind, value, column) for the relation grammar."""
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*":
            yield ("op", ch, i + 1)
            i += 1
            continue
        if ch.isdigit():
            m = _NUM_RE.match(text, i)
            yield ("num", m.group(0), i + 1)
            i = m.end()
            continue
        m = _NAME_RE.match(text, i)
        if m:
            yield ("name", m.group(0), i + 1)
            i = m.end()
            continue
        raise ParseError(f"unexpected character {ch!r}", line, i + 1)


def parse_poly(text: str, name_index: Dict[str, int], line: int) -> NcPoly:
    tokens = list(tokenize_poly(text, line)) + [("end", "", len(text) + 1)]
    pos = 0

    def peek():
        return tokens[pos]

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_term(sign: int) -> NcPoly:
        coeff = Fraction(sign)
        word: List[int] = []
        expect_factor = True
        saw_factor = False
        while True:
            kind, val, col = peek()
            if kind == "num" and expect_factor:
                advance()
                coeff *= Fraction(val)
                saw_factor = True
            elif kind == "name" and expect_factor:
                advance()
                if val not in name_index:
                    raise ParseError(f"unknown variable {val!r}", line, col)
                word.append(name_index[val])
                saw_factor = True
            elif kind == "op" and val == "*" and not expect_factor:
                advance()
                expect_factor = True
                continue
            else:
                break
            expect_factor = False
        if not saw_factor:
            kind, val, col = peek()
            raise ParseError("expected a term", line, col)
        return NcPoly({tuple(word): coeff})

    result = NcPoly.zero()
    kind, val, col = peek()
    sign = 1
    if kind == "op" and val in "+-":
        advance()
        sign = -1 if val == "-" else 1
    result = result + parse_term(sign)
    while True:
        kind, val, col = peek()
        if kind == "end":
            break
        if kind != "op" or val not in "+-":
            raise ParseError(f"expected '+' or '-', got {val!r}", line, col)
        advance()
        result = result + parse_term(-1 if val == "-" else 1)
    return result


def parse_presentation(text: str) -> Presentation:
    name = None
    flavor = "free"
    flavor_seen = False
    vars: List[VarSpec] = []
    name_index: Dict[str, int] = {}
    rel_texts: List[Tuple[str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split(None, 1)
        head, rest = fields[0], (fields[1] if len(fields) > 1 else "")
        if head == "algebra":
            if name is not None:
                raise ParseError("duplicate 'algebra' line", lineno)
            if not rest or not _NAME_RE.fullmatch(rest.strip()):
                raise ParseError("expected: algebra <name>", lineno)
            name = rest.strip()
        elif head == "flavor":
            if flavor_seen:
                raise ParseError("duplicate 'flavor' line", lineno)
            flavor_seen = True
            token = rest.strip()
            mapping = {
                "free": "free",
                "polynomial": "polynomial",
                "exterior": "exterior",
                "graded": "graded_commutative",
            }
            if token not in mapping:
                raise ParseError(
                    f"flavor must be one of free|polynomial|exterior|graded, got {token!r}",
                    lineno,
                )
            flavor = mapping[token]
        elif head == "var":
            parts = rest.split()
            if len(parts) != 2 or parts[1] not in ("even", "odd"):
                raise ParseError("expected: var <name> <even|odd>", lineno)
            vname, signword = parts
            if not _NAME_RE.fullmatch(vname):
                raise ParseError(f"bad variable name {vname!r}", lineno)
            if vname in name_index:
                raise ParseError(f"duplicate variable {vname!r}", lineno)
            name_index[vname] = len(vars)
            vars.append(VarSpec(vname, 0 if signword == "even" else 1))
        elif head == "rel":
            if not rest.strip():
                raise ParseError("empty relation", lineno)
            rel_texts.append((rest, lineno))
        else:
            raise ParseError(f"unknown directive {head!r}", lineno)
    if name is None:
        raise ParseError("missing 'algebra <name>' line", 1)
    relations = [parse_poly(t, name_index, ln) for t, ln in rel_texts]
    return make_presentation(
        name, vars, flavor, relations, [ln for _, ln in rel_texts]
    )


# ---------------------------------------------------------------------------
# Abelian block grading
# ---------------------------------------------------------------------------

class BlockGrading:
    """Finest grading of the free algebra by Z^m / U compatible with the
    relations, where U is generated by the abelianized differences of words
    appearing in one relation.  Words in distinct classes never interact, so
    all eliminations split along classes."""

    def __init__(self, nvars: int, relations: Sequence[NcPoly]):
        self.nvars = nvars
        self._rows: List[Tuple[int, List[int]]] = []  # (pivot col, vector)
        for r in relations:
            words = sorted(r.terms)
            base = self._expvec(words[0])
            for w in words[1:]:
                v = [a - b for a, b in zip(self._expvec(w), base)]
                self._insert(v)
        self._rows.sort(key=lambda t: t[0])
        self._cache: Dict[Word, Tuple[int, ...]] = {}

    def _expvec(self, word: Word) -> List[int]:
        v = [0] * self.nvars
        for i in word:
            v[i] += 1
        return v

    def _insert(self, v: List[int]):
        while True:
            lead = next((i for i, c in enumerate(v) if c), None)
            if lead is None:
                return
            hit = next((row for p, row in self._rows if p == lead), None)
            if hit is None:
                if v[lead] < 0:
                    v = [-c for c in v]
                self._rows.append((lead, v))
                self._rows.sort(key=lambda t: t[0])
                return
            a, b = hit[lead], v[lead]
            if b % a == 0:
                q = b // a
                v = [c - q * p for c, p in zip(v, hit)]
            else:
                # unimodular exchange keeping the lattice span
                g = gcd(a, b)
                x, y = self._xgcd(a, b, g)
                new_hit = [x * p + y * c for p, c in zip(hit, v)]
                v = [(a // g) * c - (b // g) * p for c, p in zip(v, hit)]
                hit[:] = new_hit

    @staticmethod
    def _xgcd(a: int, b: int, g: int):
        # minimal x, y with x*a + y*b = g
        old_r, r = a, b
        old_s, s = 1, 0
        old_t, t = 0, 1
        while r:
            q = old_r // r
            old_r, r = r, old_r - q * r
            old_s, s = s, old_s - q * s
            old_t, t = t, old_t - q * t
        if old_r < 0:
            old_s, old_t = -old_s, -old_t
        return old_s, old_t

    def label(self, word: Word) -> Tuple[int, ...]:
        hit = self._cache.get(word)
        if hit is not None:
            return hit
        v = self._expvec(word)
        for pivot, row in self._rows:
            q = v[pivot] // row[pivot]
            if q:
                v = [a - q * b for a, b in zip(v, row)]
        out = tuple(v)
        self._cache[word] = out
        return out


# ---------------------------------------------------------------------------
# The degreewise quotient engine
# ---------------------------------------------------------------------------

_NORMAL = ("n",)


def _combine_contributions(normal_items, pivot_items, ncols):
    """Assemble a dense integer row from single-column contributions and
    scaled scatter vectors, staying in int64 when a magnitude bound allows.

    normal_items: [(col, Fraction)]; pivot_items: [(Fraction, vec, den, idx)]
    meaning coeff * vec/den scattered to columns idx.
    """
    if not normal_items and not pivot_items:
        return None
    den_all = 1
    for _, c in normal_items:
        den_all = lcm(den_all, c.denominator)
    for c, _, den, _ in pivot_items:
        den_all = lcm(den_all, c.denominator * den)
    bound = 0
    plan = []
    ok64 = True
    for c, vec, den, idx in pivot_items:
        mult = c.numerator * (den_all // (c.denominator * den))
        if isinstance(vec, list):
            ok64 = False
        else:
            mx = int(np.abs(vec).max()) if vec.size else 0
            bound += abs(mult) * mx
        plan.append((mult, vec, idx))
    for _, c in normal_items:
        bound += abs(c.numerator * (den_all // c.denominator))
    if ok64 and bound < _INT64_SAFE:
        row = np.zeros(ncols, dtype=np.int64)
        for col, c in normal_items:
            row[col] += c.numerator * (den_all // c.denominator)
        for mult, vec, idx in plan:
            row[idx] += mult * vec
        if not row.any():
            return None
        return row
    # exact fallback via sparse rational accumulation
    acc: Dict[int, Fraction] = {}
    for col, c in normal_items:
        acc[col] = acc.get(col, Fraction(0)) + c
    for c, vec, den, idx in pivot_items:
        for k in range(len(idx)):
            x = int(vec[k])
            if x:
                col = int(idx[k])
                acc[col] = acc.get(col, Fraction(0)) + c * Fraction(x, den)
    items = [(col, c) for col, c in acc.items() if c]
    if not items:
        return None
    row, _den = clear_denominators(items, ncols)
    return row


class _Block:
    __slots__ = (
        "label",
        "words",
        "col_of",
        "echelon",
        "normal_cols",
        "normal_words",
        "expressions",
    )

    def __init__(self, label, words: List[Word]):
        self.label = label
        # descending deglex: column 0 is the largest word, so echelon pivots
        # are leading words and non-pivots the deglex-smallest normal words
        self.words = sorted(words, reverse=True)
        self.col_of = {w: i for i, w in enumerate(self.words)}
        self.echelon = IntEchelon(len(self.words))
        self.normal_cols: Optional[List[int]] = None
        self.normal_words: Optional[List[Word]] = None
        self.expressions = None

    def finish(self):
        self.normal_cols = self.echelon.nonpivot_columns()
        self.normal_words = [self.words[c] for c in self.normal_cols]

    def ensure_expressions(self):
        if self.expressions is None:
            self.expressions, _ = self.echelon.pivot_expressions()


class GradedQuotient:
    """Degree-by-degree normal words and reductions for a presentation."""

    def __init__(self, pres: Presentation):
        self.pres = pres
        self.m = pres.nvars
        self.signs = pres.signs
        self.grading = BlockGrading(self.m, pres.relations)
        self.relations = [
            (r.degree(), sorted(r.terms.items())) for r in pres.relations
        ]
        self.W: List[List[Word]] = [[()]]
        self.blocks: List[Dict[Tuple[int, ...], _Block]] = [{}]
        self.status: List[Dict[Word, tuple]] = [{(): _NORMAL}]
        self.rank_only: Dict[int, int] = {}
        b0 = _Block(self.grading.label(()), [()])
        b0.finish()
        self.blocks[0][b0.label] = b0
        if self.m:
            deg1: Dict[Tuple[int, ...], List[Word]] = {}
            for i in range(self.m):
                deg1.setdefault(self.grading.label((i,)), []).append((i,))
            blocks1 = {}
            for lab in sorted(deg1):
                blk = _Block(lab, deg1[lab])
                blk.finish()
                blocks1[lab] = blk
            self.W.append(sorted(w for ws in deg1.values() for w in ws))
            self.blocks.append(blocks1)
            self.status.append({(i,): _NORMAL for i in range(self.m)})

    # -- degree extension --------------------------------------------------

    def max_degree(self) -> int:
        return len(self.W) - 1

    def extend_to(self, n: int):
        while self.max_degree() < n:
            self._extend(self.max_degree() + 1)

    def _candidate_blocks(self, n: int) -> Dict[Tuple[int, ...], _Block]:
        groups: Dict[Tuple[int, ...], List[Word]] = {}
        for w in self.W[n - 1]:
            for i in range(self.m):
                cand = (i,) + w
                groups.setdefault(self.grading.label(cand), []).append(cand)
        return {lab: _Block(lab, ws) for lab, ws in sorted(groups.items())}

    def _extend(self, n: int):
        for blk in self.blocks[n - 1].values():
            blk.ensure_expressions()
        blocks = self._candidate_blocks(n)
        scatter_cache: Dict[tuple, np.ndarray] = {}

        for rel_index, (d, terms) in enumerate(self.relations):
            if d > n:
                continue
            for w in self.W[n - d]:
                first_word = terms[0][0]
                lab = self.grading.label(first_word + w)
                blk = blocks.get(lab)
                if blk is None:
                    continue  # class component of V (x) Q_{n-1} is zero
                row = self._relation_row(
                    n, d, terms, w, blk, scatter_cache
                )
                if row is not None:
                    blk.echelon.add(row)

        status: Dict[Word, tuple] = {}
        words_all: List[Word] = []
        for lab in sorted(blocks):
            blk = blocks[lab]
            blk.finish()
            words_all.extend(blk.normal_words)
            normal_set = set(blk.normal_cols)
            for col, word in enumerate(blk.words):
                if col in normal_set:
                    status[word] = _NORMAL
                else:
                    status[word] = ("p", blk)
        self.W.append(sorted(words_all))
        self.blocks.append(blocks)
        self.status.append(status)
        if n in self.rank_only and self.rank_only[n] != len(words_all):
            raise InvalidInput(
                "rank-only dimension disagrees with the full extension (engine bug)"
            )

    # -- dimension-only top degree -----------------------------------------

    def _expressions_huge(self, k: int) -> bool:
        """Whether the degree-k reduction expressions carry entries too large
        for the fast integer paths (the canonical reduced forms of some
        presentations are astronomically sized)."""
        limit = 1 << 48
        for blk in self.blocks[k].values():
            blk.ensure_expressions()
            for vec, den in blk.expressions.values():
                if isinstance(vec, list) or den >= limit:
                    return True
                if vec.size and int(np.abs(vec).max()) >= limit:
                    return True
        return False

    def _extend_rank_only(self, n: int) -> int:
        """Dimension of degree n without deglex normal-form coordinates.

        The degree-(n-1) system is re-reduced with free smallest-entry
        pivoting, whose complement basis plays the role of the normal words;
        the degree-n rows are assembled over it and only their rank is
        taken.  Rank does not depend on the choice of complement, and the
        free complement stays small on systems whose canonical reduced form
        explodes.
        """
        if n != self.max_degree() + 1:
            raise InvalidInput("rank-only extension must follow the last degree")
        m = self.m
        prev_blocks = self.blocks[n - 1]
        free: Dict[Tuple[int, ...], FreePivotRref] = {
            lab: FreePivotRref(len(blk.words)) for lab, blk in prev_blocks.items()
        }
        scatter_prev: Dict[tuple, np.ndarray] = {}
        for d, terms in self.relations:
            if d > n - 1:
                continue
            for w in self.W[n - 1 - d]:
                lab = self.grading.label(terms[0][0] + w)
                blk = prev_blocks.get(lab)
                if blk is None:
                    continue
                row = self._relation_row(n - 1, d, terms, w, blk, scatter_prev)
                if row is not None:
                    free[lab].add(row)
        for lab, blk in prev_blocks.items():
            if free[lab].rank != blk.echelon.rank:
                raise InvalidInput("free-pivot rank mismatch (engine bug)")
        # reduction data over the free complement, per degree-(n-1) class
        fdata = {}
        for lab, blk in prev_blocks.items():
            exprs, nonpiv = free[lab].pivot_expressions()
            fdata[lab] = (
                exprs,
                {c: k for k, c in enumerate(nonpiv)},
                [blk.words[c] for c in nonpiv],
            )
        # degree-n columns (i, complement candidate) grouped by class
        col_index: Dict[Tuple[int, ...], Dict[tuple, int]] = {}
        for i in range(m):
            for lab in sorted(fdata):
                for k, word in enumerate(fdata[lab][2]):
                    big = self.grading.label((i,) + word)
                    group = col_index.setdefault(big, {})
                    group[(i, lab, k)] = len(group)
        echelons = {big: IntEchelon(len(group)) for big, group in col_index.items()}
        scatter: Dict[tuple, np.ndarray] = {}
        for d, terms in self.relations:
            if d > n:
                continue
            for w in self.W[n - d]:
                big = self.grading.label(terms[0][0] + w)
                group = col_index.get(big)
                if group is None:
                    continue
                normal_items: List[Tuple[int, Fraction]] = []
                pivot_items = []
                for u, coeff in terms:
                    items = [(w, coeff)]
                    for letter in reversed(u[2:]):
                        items = self._reduce_left_letter(letter, items)
                        if not items:
                            break
                    for nw, cc in items:
                        cand = (u[1],) + nw
                        lab = self.grading.label(cand)
                        exprs, freepos, fwords = fdata[lab]
                        c = prev_blocks[lab].col_of[cand]
                        if c in freepos:
                            normal_items.append((group[(u[0], lab, freepos[c])], cc))
                        else:
                            vec, den = exprs[c]
                            key = (u[0], lab)
                            idx = scatter.get(key)
                            if idx is None:
                                idx = np.array(
                                    [group[(u[0], lab, k2)] for k2 in range(len(fwords))],
                                    dtype=np.int64,
                                )
                                scatter[key] = idx
                            pivot_items.append((cc, vec, den, idx))
                row = _combine_contributions(normal_items, pivot_items, len(group))
                if row is not None:
                    echelons[big].add(row)
        rank_n = sum(e.rank for e in echelons.values())
        h = m * len(self.W[n - 1]) - rank_n
        self.rank_only[n] = h
        return h

    def _pivot_expansion(self, k: int, word: Word):
        """Expansion of a pivot candidate at degree k: (vec, den, normals)."""
        st = self.status[k][word]
        blk: _Block = st[1]
        blk.ensure_expressions()
        vec, den = blk.expressions[blk.col_of[word]]
        return vec, den, blk.normal_words

    def _relation_row(self, n, d, terms, w, blk: _Block, scatter_cache):
        """Assemble the row of r*w over the block's candidate columns."""
        if d == 2:
            return self._relation_row_fast(n, terms, w, blk, scatter_cache)
        # general chain: reduce the tail of each term one letter at a time
        acc: Dict[Word, Fraction] = {}
        for u, c in terms:
            items = [(w, c)]
            for letter in reversed(u[1:]):
                items = self._reduce_left_letter(letter, items)
                if not items:
                    break
            # after folding the tail, prepend the first letter as the column
            for nw, cc in items:
                cand = (u[0],) + nw
                acc[cand] = acc.get(cand, Fraction(0)) + cc
        items = [(blk.col_of[word], c) for word, c in acc.items() if c]
        if not items:
            return None
        row, _den = clear_denominators(items, len(blk.words))
        return row

    def _relation_row_fast(self, n, terms, w, blk: _Block, scatter_cache):
        # terms are ((u0, u1), coeff); the reduction of (u1,)+w is a direct
        # lookup at degree n-1, so the row assembles with vectorized scatters
        normal_items: List[Tuple[int, Fraction]] = []
        pivot_items = []  # (coeff, vec, den, scatter index array)
        for u, c in terms:
            cand = (u[1],) + w
            st = self.status[n - 1][cand]
            if st is _NORMAL:
                normal_items.append((blk.col_of[(u[0],) + cand], c))
            else:
                src: _Block = st[1]
                src.ensure_expressions()
                vec, den = src.expressions[src.col_of[cand]]
                key = (u[0], id(src))
                idx = scatter_cache.get(key)
                if idx is None:
                    idx = np.array(
                        [blk.col_of[(u[0],) + nw] for nw in src.normal_words],
                        dtype=np.int64,
                    )
                    scatter_cache[key] = idx
                pivot_items.append((c, vec, den, idx))
        return _combine_contributions(normal_items, pivot_items, len(blk.words))

    # -- reductions for consumers -------------------------------------------

    def _reduce_left_letter(self, letter: int, items):
        """Multiply sum items (normal words of equal degree) by x_letter on
        the left, reducing to normal words one degree higher."""
        if not items:
            return []
        k = len(items[0][0]) + 1
        self.extend_to(k)
        acc: Dict[Word, Fraction] = {}
        for w, c in items:
            cand = (letter,) + w
            st = self.status[k][cand]
            if st is _NORMAL:
                acc[cand] = acc.get(cand, Fraction(0)) + c
            else:
                vec, den, normals = self._pivot_expansion(k, cand)
                if isinstance(vec, np.ndarray):
                    support = np.flatnonzero(vec)
                    pairs = ((int(q), int(vec[q])) for q in support)
                else:
                    pairs = ((q, x) for q, x in enumerate(vec) if x)
                for q, x in pairs:
                    nw = normals[q]
                    acc[nw] = acc.get(nw, Fraction(0)) + c * Fraction(x, den)
        return [(w, c) for w, c in sorted(acc.items()) if c]

    def reduce_word(self, word: Word):
        """Normal form of a word as [(normal word, coeff)]."""
        items = [((), Fraction(1))]
        for letter in reversed(word):
            items = self._reduce_left_letter(letter, items)
            if not items:
                return []
        return items

    def multiply_words(self, w1: Word, w2: Word):
        """Normal form of the product of two normal words."""
        self.extend_to(len(w1) + len(w2))
        items = [(w2, Fraction(1))]
        for letter in reversed(w1):
            items = self._reduce_left_letter(letter, items)
            if not items:
                return []
        return items

    def reduce_ncpoly(self, p: NcPoly):
        acc: Dict[Word, Fraction] = {}
        for w, c in p.terms.items():
            for nw, cc in self.reduce_word(w):
                acc[nw] = acc.get(nw, Fraction(0)) + c * cc
        return [(w, c) for w, c in sorted(acc.items()) if c]

    def is_zero_mod_ideal(self, p: NcPoly) -> bool:
        return not self.reduce_ncpoly(p)

    # -- series ---------------------------------------------------------------

    def basis(self, n: int) -> List[Word]:
        self.extend_to(n)
        return self.W[n]

    def dimension(self, n: int) -> int:
        """Dimension of the degree-n component.  The last degree is computed
        rank-only when the previous degree's reduction expressions are too
        large for the fast integer paths."""
        if n <= self.max_degree():
            return len(self.W[n])
        hit = self.rank_only.get(n)
        if hit is not None:
            return hit
        if n >= 2:
            self.extend_to(n - 1)
            if self._expressions_huge(n - 1):
                return self._extend_rank_only(n)
        return len(self.basis(n))

    def sign_counts(self, n: int) -> Tuple[int, int]:
        even = odd = 0
        for w in self.basis(n):
            if sum(self.signs[i] for i in w) % 2 == 0:
                even += 1
            else:
                odd += 1
        return even, odd

    def hilbert(self, N: int) -> TruncSeries:
        return TruncSeries([self.dimension(n) for n in range(N + 1)], N)

    def hilbert_signed(self, N: int) -> SignedSeries:
        counts = [self.sign_counts(n) for n in range(N + 1)]
        return SignedSeries(
            TruncSeries([c[0] for c in counts], N),
            TruncSeries([c[1] for c in counts], N),
        )


_quotients: Dict[tuple, GradedQuotient] = {}


def get_quotient(pres: Presentation) -> GradedQuotient:
    """Shared engine per presentation; degree extensions are reused."""
    key = pres.cache_key()
    q = _quotients.get(key)
    if q is None:
        q = GradedQuotient(pres)
        _quotients[key] = q
    return q


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def hilbert_series(pres: Presentation, N: int) -> TruncSeries:
    """Hilbert series of the quotient, exact, truncated at degree N."""
    if N < 0:
        raise InvalidInput("truncation must be nonnegative")
    return get_quotient(pres).hilbert(N)


def hilbert_series_signed(pres: Presentation, N: int) -> SignedSeries:
    if N < 0:
        raise InvalidInput("truncation must be nonnegative")
    return get_quotient(pres).hilbert_signed(N)


@dataclass
class DegreeBasis:
    """Normal words of one degree together with the reduction map."""

    degree: int
    normal_words: Tuple[Word, ...]
    _quotient: GradedQuotient

    def reduce(self, word: Word):
        """Express any degree-matching word in the normal basis."""
        if len(word) != self.degree:
            raise InvalidInput("word degree does not match basis degree")
        return self._quotient.reduce_word(tuple(word))

    def reduction_table(self) -> Dict[Word, list]:
        """Reductions of every non-normal word of this degree (small use)."""
        import itertools as _it

        table = {}
        normal = set(self.normal_words)
        for word in _it.product(range(self._quotient.m), repeat=self.degree):
            if word not in normal:
                table[word] = self._quotient.reduce_word(word)
        return table


def quotient_basis(pres: Presentation, n: int) -> DegreeBasis:
    if n < 0:
        raise InvalidInput("degree must be nonnegative")
    q = get_quotient(pres)
    return DegreeBasis(n, tuple(q.basis(n)), q)
