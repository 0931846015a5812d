"""Graphs and 2-flat families; holonomy Lie algebras and the quadratic part
of the Orlik-Solomon algebra.

A family of pairwise almost-disjoint flats of size >= 3 on a ground set
determines a simple matroid truncated at rank 3; every ground pair not
inside a stored flat commutes in the holonomy Lie algebra.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Sequence, Tuple

from .algebra import NcPoly, Presentation, VarSpec, make_presentation
from .errors import InvalidInput, ParseError
from .lie import LieExpr, LiePresentation, lie_element_is_zero

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Graph:
    """A simple graph with named edges over vertices 1..nvertices."""

    name: str
    nvertices: int
    edges: Tuple[Tuple[str, Tuple[int, int]], ...]

    def __post_init__(self):
        seen_names = set()
        seen_pairs = set()
        for ename, (a, b) in self.edges:
            if a == b:
                raise InvalidInput(f"loop at vertex {a} is not allowed")
            if not (1 <= a <= self.nvertices and 1 <= b <= self.nvertices):
                raise InvalidInput(f"edge {ename} uses an unknown vertex")
            if ename in seen_names:
                raise InvalidInput(f"duplicate edge name {ename!r}")
            pair = (min(a, b), max(a, b))
            if pair in seen_pairs:
                raise InvalidInput(f"multi-edge between {a} and {b}")
            seen_names.add(ename)
            seen_pairs.add(pair)


@dataclass(frozen=True)
class TwoFlatFamily:
    """Ground elements plus the flats of size >= 3; two flats share at most
    one element."""

    ground: Tuple[str, ...]
    flats: Tuple[Tuple[str, ...], ...]

    def __post_init__(self):
        index = {e: i for i, e in enumerate(self.ground)}
        if len(index) != len(self.ground):
            raise InvalidInput("duplicate ground element")
        for flat in self.flats:
            if len(flat) < 3:
                raise InvalidInput("flats must have size at least 3")
            if len(set(flat)) != len(flat):
                raise InvalidInput("flat repeats an element")
            for e in flat:
                if e not in index:
                    raise InvalidInput(f"flat element {e!r} not in ground set")
        for f1, f2 in combinations(self.flats, 2):
            if len(set(f1) & set(f2)) > 1:
                raise InvalidInput(
                    f"flats {f1} and {f2} share more than one element"
                )

    def commuting_pairs(self) -> List[Tuple[str, str]]:
        """Ground pairs contained in no stored flat."""
        covered = set()
        for flat in self.flats:
            for a, b in combinations(sorted(flat, key=self.ground.index), 2):
                covered.add((a, b) if self.ground.index(a) < self.ground.index(b) else (b, a))
        out = []
        for a, b in combinations(self.ground, 2):
            if (a, b) not in covered:
                out.append((a, b))
        return out

    def dependent_triples(self) -> List[Tuple[str, str, str]]:
        seen = set()
        for flat in self.flats:
            for trip in combinations(sorted(flat, key=self.ground.index), 3):
                seen.add(trip)
        return sorted(seen, key=lambda t: tuple(self.ground.index(e) for e in t))


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def parse_graph(text: str) -> Graph:
    name = None
    nvertices = None
    edges: List[Tuple[str, Tuple[int, int]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "graph":
            if name is not None:
                raise ParseError("duplicate 'graph' line", lineno)
            if len(fields) != 2 or not _NAME_RE.fullmatch(fields[1]):
                raise ParseError("expected: graph <name>", lineno)
            name = fields[1]
        elif fields[0] == "vertices":
            if nvertices is not None:
                raise ParseError("duplicate 'vertices' line", lineno)
            if len(fields) != 2 or not fields[1].isdigit():
                raise ParseError("expected: vertices <count>", lineno)
            nvertices = int(fields[1])
        elif fields[0] == "edge":
            if len(fields) != 4 or not fields[2].isdigit() or not fields[3].isdigit():
                raise ParseError("expected: edge <name> <i> <j>", lineno)
            edges.append((fields[1], (int(fields[2]), int(fields[3]))))
        else:
            raise ParseError(f"unknown directive {fields[0]!r}", lineno)
    if name is None:
        raise ParseError("missing 'graph <name>' line", 1)
    if nvertices is None:
        raise ParseError("missing 'vertices <count>' line", 1)
    return Graph(name, nvertices, tuple(edges))


def parse_flats(text: str) -> TwoFlatFamily:
    name = None
    ground: List[str] = []
    flats: List[Tuple[str, ...]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "flats":
            if len(fields) != 2:
                raise ParseError("expected: flats <name>", lineno)
            name = fields[1]
        elif fields[0] == "ground":
            if ground:
                raise ParseError("duplicate 'ground' line", lineno)
            ground = fields[1:]
            if not ground:
                raise ParseError("empty ground set", lineno)
        elif fields[0] == "flat":
            flats.append(tuple(fields[1:]))
        else:
            raise ParseError(f"unknown directive {fields[0]!r}", lineno)
    if name is None:
        raise ParseError("missing 'flats <name>' line", 1)
    try:
        return TwoFlatFamily(tuple(ground), tuple(flats))
    except InvalidInput as exc:
        raise ParseError(str(exc), 1)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def graph_two_flats(G: Graph) -> TwoFlatFamily:
    """Flats of size three are the edge triangles; all other pairs commute."""
    by_pair: Dict[Tuple[int, int], str] = {}
    for ename, (a, b) in G.edges:
        by_pair[(min(a, b), max(a, b))] = ename
    flats = []
    for u, v, w in combinations(range(1, G.nvertices + 1), 3):
        try:
            e1 = by_pair[(u, v)]
            e2 = by_pair[(v, w)]
            e3 = by_pair[(u, w)]
        except KeyError:
            continue
        ground_order = [name for name, _ in G.edges]
        flats.append(tuple(sorted((e1, e2, e3), key=ground_order.index)))
    ground = tuple(name for name, _ in G.edges)
    return TwoFlatFamily(ground, tuple(sorted(flats, key=lambda f: tuple(ground.index(e) for e in f))))


def holonomy_presentation(F: TwoFlatFamily) -> LiePresentation:
    """Even generators x_e; per flat, the relations [x_a, sum of the other
    flat members] for all but the flat's last element (the omitted one is
    minus the sum of the listed ones); one commutator per commuting pair."""
    index = {e: i for i, e in enumerate(F.ground)}
    gens = tuple(VarSpec(f"x{i + 1}", 0) for i in range(len(F.ground)))
    rels: List[LieExpr] = []
    for flat in F.flats:
        members = sorted(flat, key=index.__getitem__)
        for a in members[:-1]:
            others = [e for e in members if e != a]
            total = LieExpr.generator(index[others[0]])
            for e in others[1:]:
                total = total + LieExpr.generator(index[e])
            rels.append(LieExpr.bracket(LieExpr.generator(index[a]), total))
    for a, b in F.commuting_pairs():
        rels.append(
            LieExpr.bracket(LieExpr.generator(index[a]), LieExpr.generator(index[b]))
        )
    return LiePresentation("holonomy", gens, tuple(rels))


def orlik_solomon_quadratic(F: TwoFlatFamily) -> Presentation:
    """Exterior algebra on the ground set modulo ab - ac + bc for every
    dependent 3-set {a, b, c} (in ground order)."""
    index = {e: i for i, e in enumerate(F.ground)}
    vars = tuple(VarSpec(f"e{i + 1}", 1) for i in range(len(F.ground)))
    rels = []
    for a, b, c in F.dependent_triples():
        i, j, k = index[a], index[b], index[c]
        rels.append(
            NcPoly(
                {
                    (i, j): Fraction(1),
                    (i, k): Fraction(-1),
                    (j, k): Fraction(1),
                }
            )
        )
    return make_presentation("orlik_solomon", vars, "exterior", rels)


def is_decomposable(F: TwoFlatFamily) -> bool:
    """True iff [x,[y,z]] vanishes for every ground triple lying in no
    single flat.  By the Jacobi identity it suffices to test two of the
    three bracket arrangements per triple."""
    L = holonomy_presentation(F)
    index = {e: i for i, e in enumerate(F.ground)}
    dependent = {tuple(sorted(t, key=index.__getitem__)) for t in F.dependent_triples()}
    for trip in combinations(F.ground, 3):
        if trip in dependent:
            continue
        x, y, z = (LieExpr.generator(index[e]) for e in trip)
        if not lie_element_is_zero(L, LieExpr.bracket(x, LieExpr.bracket(y, z))):
            return False
        if not lie_element_is_zero(L, LieExpr.bracket(y, LieExpr.bracket(x, z))):
            return False
    return True
