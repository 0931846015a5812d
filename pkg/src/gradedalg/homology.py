"""Homology engines for graded algebras.

Covers the normalized bar complex (bigraded Tor of the trivial module), the
Koszul complex of a commutative presentation, the generalized Koszul complex
R (x) (R^!)^*, the Golod and R_3=0 closed-form Poincare series, and the
series identities tying Hilbert and Poincare series together.

All differentials are checked to square to zero when a complex is built, and
every strand satisfies the Euler-characteristic identity between chain and
homology dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra import (
    GradedQuotient,
    Presentation,
    Word,
    get_quotient,
    hilbert_series,
)
from .errors import (
    GradedAlgError,
    InvalidInput,
    NonCommutativeInput,
    NotAComplex,
    PreconditionFailed,
)
from .linalg import IntEchelon, clear_denominators, fraction_nullspace
from .quaddual import koszul_dual
from .series import TruncSeries, TruncSeries2


# ---------------------------------------------------------------------------
# Bigraded dimension tables
# ---------------------------------------------------------------------------

class BigradedDims:
    """Map (homological degree n, internal degree j) -> dimension, with
    every internal degree <= truncation fully computed."""

    def __init__(self, dims: Dict[Tuple[int, int], int], truncation: int):
        self.truncation = truncation
        self.dims = {k: int(v) for k, v in dims.items() if v}
        for (n, j), v in self.dims.items():
            if v < 0:
                raise InvalidInput("negative dimension")
            if j < n:
                raise InvalidInput(f"nonzero entry at (n={n}, j={j}) with j < n")
        if self.dims.get((0, 0), 0) != 1:
            raise InvalidInput("entry (0, 0) must be 1")

    def __getitem__(self, key: Tuple[int, int]) -> int:
        return self.dims.get(key, 0)

    def __eq__(self, other):
        return (
            isinstance(other, BigradedDims)
            and self.truncation == other.truncation
            and self.dims == other.dims
        )

    def entries(self):
        return sorted(self.dims.items(), key=lambda kv: (kv[0][1], kv[0][0]))

    def truncate(self, J: int) -> "BigradedDims":
        if J > self.truncation:
            raise InvalidInput("cannot extend a bigraded truncation")
        return BigradedDims(
            {k: v for k, v in self.dims.items() if k[1] <= J}, J
        )

    def to_series2(self) -> TruncSeries2:
        rows = []
        for j in range(self.truncation + 1):
            rows.append([self.dims.get((n, j), 0) for n in range(j + 1)])
        return TruncSeries2(rows, self.truncation)

    def alternating_sums(self) -> List[int]:
        """A_j = sum_n (-1)^n dim(n, j), one value per internal degree."""
        out = [0] * (self.truncation + 1)
        for (n, j), v in self.dims.items():
            out[j] += v if n % 2 == 0 else -v
        return out

    def diagonal(self) -> TruncSeries:
        return TruncSeries(
            [self.dims.get((n, n), 0) for n in range(self.truncation + 1)],
            self.truncation,
        )

    def off_diagonal_witness(self) -> Optional[Tuple[int, int]]:
        off = [(j, n) for (n, j) in self.dims if n != j]
        if not off:
            return None
        j, n = min(off)
        return (n, j)

    def to_json(self) -> dict:
        return {
            "truncation": self.truncation,
            "entries": [
                {"n": n, "j": j, "dim": v} for (n, j), v in self.entries()
            ],
        }


# ---------------------------------------------------------------------------
# Chain complexes
# ---------------------------------------------------------------------------

SparseMatrix = List[List[Tuple[int, Fraction]]]  # per source column: (target, coeff)


class ComplexSlice:
    """One internal-degree strand: spaces by homological position and the
    differentials d_n: spaces[n] -> spaces[n-1].  d o d = 0 is verified on
    construction."""

    def __init__(self, internal_degree: int, spaces: Sequence[Sequence], differentials: Sequence[Optional[SparseMatrix]]):
        self.internal_degree = internal_degree
        self.spaces = [list(s) for s in spaces]
        self.differentials = list(differentials)
        if len(self.differentials) != len(self.spaces):
            raise InvalidInput("need one differential slot per space")
        for n in range(1, len(self.spaces)):
            d = self.differentials[n]
            if d is None:
                raise InvalidInput(f"missing differential at position {n}")
            if len(d) != len(self.spaces[n]):
                raise InvalidInput("differential has wrong source dimension")
            tgt = len(self.spaces[n - 1])
            for col in d:
                for t, _ in col:
                    if not 0 <= t < tgt:
                        raise InvalidInput("differential has wrong target dimension")
        self._check_squares()

    def _check_squares(self):
        for n in range(2, len(self.spaces)):
            d_n = self.differentials[n]
            d_prev = self.differentials[n - 1]
            for col in d_n:
                acc: Dict[int, Fraction] = {}
                for mid, c in col:
                    for t, c2 in d_prev[mid]:
                        acc[t] = acc.get(t, Fraction(0)) + c * c2
                if any(v != 0 for v in acc.values()):
                    raise NotAComplex(
                        f"d^2 != 0 at position {n} of internal degree {self.internal_degree}"
                    )

    def dims(self) -> List[int]:
        return [len(s) for s in self.spaces]


def _matrix_rank(cols: SparseMatrix, ntargets: int) -> int:
    ech = IntEchelon(ntargets)
    for col in cols:
        if not col:
            continue
        row, _ = clear_denominators(col, ntargets)
        ech.add(row)
    return ech.rank


def homology_ranks(slice_: ComplexSlice) -> List[int]:
    """Homology dimensions per position: dim ker d_n - rank d_{n+1}."""
    dims = slice_.dims()
    k = len(dims)
    ranks = [0] * (k + 1)
    for n in range(1, k):
        ranks[n] = _matrix_rank(slice_.differentials[n], dims[n - 1])
    hom = [dims[n] - ranks[n] - ranks[n + 1] for n in range(k)]
    euler_chain = sum((-1) ** n * dims[n] for n in range(k))
    euler_hom = sum((-1) ** n * hom[n] for n in range(k))
    if euler_chain != euler_hom:
        raise GradedAlgError("Euler characteristic mismatch (engine bug)")
    return hom


# ---------------------------------------------------------------------------
# Bar complex (bigraded Tor)
# ---------------------------------------------------------------------------

def _compositions(j: int, part_ok) -> List[Tuple[int, ...]]:
    out: List[Tuple[int, ...]] = []

    def rec(rest, acc):
        if rest == 0:
            out.append(tuple(acc))
            return
        for p in range(1, rest + 1):
            if part_ok(p):
                acc.append(p)
                rec(rest - p, acc)
                acc.pop()

    rec(j, [])
    return out


class _MultCache:
    def __init__(self, quotient: GradedQuotient):
        self.q = quotient
        self.cache: Dict[Tuple[Word, Word], list] = {}

    def mul(self, w1: Word, w2: Word):
        key = (w1, w2)
        hit = self.cache.get(key)
        if hit is None:
            hit = self.q.multiply_words(w1, w2)
            self.cache[key] = hit
        return hit


def _strand_ranks_by_class(q: GradedQuotient, bases: Dict[int, List[tuple]], diff, j: int):
    """Split a strand into abelian-grading classes, build a ComplexSlice per
    class, and return summed homology dims per position.

    bases: position -> list of basis elements; diff(element) -> list of
    (element', Fraction) one position lower.  Elements must be tuples whose
    concatenated letters determine the class.
    """
    positions = sorted(bases)
    if not positions:
        return {}
    classes: Dict[tuple, Dict[int, List[tuple]]] = {}
    for n in positions:
        for elt in bases[n]:
            lab = q.grading.label(sum(elt, ()))
            classes.setdefault(lab, {}).setdefault(n, []).append(elt)
    hom_total: Dict[int, int] = {n: 0 for n in positions}
    lo, hi = positions[0], positions[-1]
    for lab in sorted(classes):
        by_pos = classes[lab]
        spaces = [by_pos.get(n, []) for n in range(lo, hi + 1)]
        index = [
            {elt: i for i, elt in enumerate(space)} for space in spaces
        ]
        diffs: List[Optional[SparseMatrix]] = [None] * len(spaces)
        for pos in range(1, len(spaces)):
            cols: SparseMatrix = []
            tgt_index = index[pos - 1]
            for elt in spaces[pos]:
                col = []
                for elt2, c in diff(elt):
                    col.append((tgt_index[elt2], c))
                cols.append(col)
            diffs[pos] = cols
        slice_ = ComplexSlice(j, spaces, diffs)
        hom = homology_ranks(slice_)
        for k, h in enumerate(hom):
            hom_total[lo + k] += h
    return hom_total


_bar_cache: Dict[tuple, Tuple[int, Dict[Tuple[int, int], int]]] = {}


def bar_tor_dims(pres: Presentation, Jmax: int) -> BigradedDims:
    """Bigraded Tor dimensions from the normalized bar complex.

    The strand of internal degree j has basis all tuples (w_1, ..., w_n) of
    positive-degree normal words with degrees summing to j, and differential
    the alternating sum of adjacent multiplications.
    """
    if Jmax < 0:
        raise InvalidInput("truncation must be nonnegative")
    key = pres.cache_key()
    done, dims = _bar_cache.get(key, (-1, {(0, 0): 1}))
    if done >= Jmax:
        return BigradedDims(
            {k: v for k, v in dims.items() if k[1] <= Jmax}, Jmax
        )
    q = get_quotient(pres)
    q.extend_to(Jmax)
    mult = _MultCache(q)

    def diff(elt):
        out: Dict[tuple, Fraction] = {}
        sign = 1
        for i in range(len(elt) - 1):
            for w, c in mult.mul(elt[i], elt[i + 1]):
                if len(w) == 0:
                    continue  # products of positive-degree words stay positive
                new = elt[:i] + (w,) + elt[i + 2 :]
                out[new] = out.get(new, Fraction(0)) + sign * c
            sign = -sign
        return [(e, c) for e, c in out.items() if c]

    for j in range(done + 1, Jmax + 1):
        if j == 0:
            continue
        bases: Dict[int, List[tuple]] = {}
        for comp in _compositions(j, lambda p: q.dimension(p) > 0):
            n = len(comp)
            target = bases.setdefault(n, [])
            def build(idx, acc):
                if idx == len(comp):
                    target.append(tuple(acc))
                    return
                for w in q.basis(comp[idx]):
                    acc.append(w)
                    build(idx + 1, acc)
                    acc.pop()
            build(0, [])
        for n in bases:
            bases[n].sort()
        hom = _strand_ranks_by_class(q, bases, diff, j)
        for n, h in hom.items():
            if h:
                dims[(n, j)] = h
    _bar_cache[key] = (Jmax, dims)
    return BigradedDims({k: v for k, v in dims.items() if k[1] <= Jmax}, Jmax)


# ---------------------------------------------------------------------------
# Koszul complex of a commutative presentation
# ---------------------------------------------------------------------------

_koszul_cache: Dict[tuple, Tuple[int, Dict[Tuple[int, int], int]]] = {}


def _koszul_strand_bases(q: GradedQuotient, m: int, j: int):
    """Basis (normal word, T-subset) by homological degree q."""
    from itertools import combinations

    bases: Dict[int, List[tuple]] = {}
    for k in range(0, min(m, j) + 1):
        words = q.basis(j - k)
        if not words:
            continue
        elts = []
        for S in combinations(range(m), k):
            for w in words:
                elts.append((w, S))
        bases[k] = sorted(elts)
    return bases


def _koszul_diff(mult: _MultCache):
    def diff(elt):
        w, S = elt
        out: Dict[tuple, Fraction] = {}
        for pos, i in enumerate(S):
            sign = Fraction((-1) ** pos)
            rest = S[:pos] + S[pos + 1 :]
            for nw, c in mult.mul(w, (i,)):
                key = (nw, rest)
                out[key] = out.get(key, Fraction(0)) + sign * c
        return [(e, c) for e, c in out.items() if c]

    return diff


def koszul_complex_homology(pres: Presentation, Jmax: int) -> BigradedDims:
    """Bigraded homology of R (x) Lambda(T_1..T_m) with dT_i = x_i."""
    if pres.flavor != "polynomial":
        raise NonCommutativeInput(
            "the Koszul complex requires a polynomial-flavor presentation"
        )
    if Jmax < 0:
        raise InvalidInput("truncation must be nonnegative")
    key = pres.cache_key()
    done, dims = _koszul_cache.get(key, (-1, {(0, 0): 1}))
    if done >= Jmax:
        return BigradedDims(
            {k: v for k, v in dims.items() if k[1] <= Jmax}, Jmax
        )
    q = get_quotient(pres)
    q.extend_to(Jmax)
    m = pres.nvars
    mult = _MultCache(q)
    diff = _koszul_diff(mult)

    def class_of(elt):
        w, S = elt
        return w + tuple(S)  # letters determining the abelian class

    for j in range(done + 1, Jmax + 1):
        if j == 0:
            continue
        bases = _koszul_strand_bases(q, m, j)
        # adapt to _strand_ranks_by_class: elements are pairs, flatten class
        classes: Dict[tuple, Dict[int, List[tuple]]] = {}
        positions = sorted(bases)
        for k in positions:
            for elt in bases[k]:
                lab = q.grading.label(class_of(elt))
                classes.setdefault(lab, {}).setdefault(k, []).append(elt)
        lo, hi = positions[0], positions[-1]
        for lab in sorted(classes):
            by_pos = classes[lab]
            spaces = [by_pos.get(k, []) for k in range(lo, hi + 1)]
            index = [{e: i for i, e in enumerate(s)} for s in spaces]
            diffs: List[Optional[SparseMatrix]] = [None] * len(spaces)
            for pos in range(1, len(spaces)):
                cols: SparseMatrix = []
                tgt = index[pos - 1]
                for elt in spaces[pos]:
                    cols.append([(tgt[e], c) for e, c in diff(elt)])
                diffs[pos] = cols
            hom = homology_ranks(ComplexSlice(j, spaces, diffs))
            for kpos, h in enumerate(hom):
                if h:
                    dims[(lo + kpos, j)] = dims.get((lo + kpos, j), 0) + h
    _koszul_cache[key] = (Jmax, dims)
    return BigradedDims({k: v for k, v in dims.items() if k[1] <= Jmax}, Jmax)


# ---------------------------------------------------------------------------
# Series identities
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    mode: str
    passed: bool
    first_discrepancy: Optional[int] = None
    reason: Optional[str] = None
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "pass": self.passed,
            "first_discrepancy": self.first_discrepancy,
            "reason": self.reason,
            "detail": self.detail,
        }


def verify_series_identity(pres: Presentation, mode: str, N: int) -> VerificationReport:
    """Exact check of the alternating-sum, Froberg, or Koszul-complex
    identity up to internal degree N."""
    if mode == "form":
        H = hilbert_series(pres, N)
        tor = bar_tor_dims(pres, N)
        alt = tor.alternating_sums()
        for j in range(N + 1):
            want = 1 if j == 0 else 0
            have = sum(H[p] * alt[j - p] for p in range(j + 1))
            if have != want:
                return VerificationReport(
                    mode, False, j,
                    detail=f"H(y)*P(-1,y) has coefficient {have} at y^{j}",
                )
        return VerificationReport(mode, True)
    if mode == "froberg":
        tor = bar_tor_dims(pres, N)
        witness = tor.off_diagonal_witness()
        if witness is not None:
            n, j = witness
            return VerificationReport(
                mode, False, j, reason="OffDiagonal",
                detail=f"Tor has dimension {tor[(n, j)]} at (n={n}, j={j})",
            )
        H = hilbert_series(pres, N)
        P = tor.diagonal()
        prod = H * P.substitute_power(1, -1)
        for j in range(N + 1):
            want = 1 if j == 0 else 0
            if prod[j] != want:
                return VerificationReport(
                    mode, False, j,
                    detail=f"H(z)*P(-z) has coefficient {prod[j]} at z^{j}",
                )
        return VerificationReport(mode, True)
    if mode == "kos":
        if pres.flavor != "polynomial":
            raise NonCommutativeInput("mode kos requires a polynomial presentation")
        H = hilbert_series(pres, N)
        m = pres.nvars
        HK = koszul_complex_homology(pres, N)
        lhs = H * TruncSeries(
            [Fraction((-1) ** k) * comb(m, k) for k in range(min(m, N) + 1)], N
        )
        rhs = HK.to_series2().at_x(-1)
        for j in range(N + 1):
            if lhs[j] != rhs[j]:
                return VerificationReport(
                    mode, False, j,
                    detail=f"H(z)(1-z)^{m} = {lhs[j]} but H(K)(-1,z) = {rhs[j]} at z^{j}",
                )
        return VerificationReport(mode, True)
    raise InvalidInput(f"unknown verification mode {mode!r}")


# ---------------------------------------------------------------------------
# Golod closed form and the trivial-product check
# ---------------------------------------------------------------------------

def golod_poincare(HK: TruncSeries2, n: int, N: int) -> TruncSeries2:
    """(1+xy)^n / (1 - x*(HK(x,y) - 1)), truncated at internal degree N."""
    if HK.coeff(0, 0) != 1:
        raise InvalidInput("Koszul homology series must have constant term 1")
    J = min(N, HK.truncation_y)
    numerator_rows = []
    for j in range(J + 1):
        row = [Fraction(0)] * (j + 1)
        if j <= n:
            row[j] = Fraction(comb(n, j))
        numerator_rows.append(row)
    numerator = TruncSeries2(numerator_rows, J)
    shifted_rows = [[Fraction(1)]]
    for j in range(1, J + 1):
        row = [Fraction(0)] * (j + 1)
        for qdeg in range(j):  # positive part has homological degree < j
            c = HK.coeff(qdeg, j)
            if c:
                row[qdeg + 1] = -c
        if HK.coeff(j, j) and j >= 1:
            raise InvalidInput(
                "positive Koszul homology on the diagonal cannot be shifted by x"
            )
        shifted_rows.append(row)
    denominator = TruncSeries2(shifted_rows, J)
    return numerator * denominator.inverse()


@dataclass
class ProductCheckReport:
    passed: bool
    witness: Optional[str] = None

    def to_json(self) -> dict:
        return {"pass": self.passed, "witness": self.witness}


def _dense_from_sparse(col, ntargets: int) -> List[Fraction]:
    v = [Fraction(0)] * ntargets
    for t, c in col:
        v[t] += c
    return v


def golod_product_check(pres: Presentation, Jmax: int) -> ProductCheckReport:
    """Verify that pairwise products of positive-degree Koszul homology
    classes vanish in homology up to internal degree Jmax."""
    if pres.flavor != "polynomial":
        raise NonCommutativeInput(
            "the Koszul complex requires a polynomial-flavor presentation"
        )
    q = get_quotient(pres)
    q.extend_to(Jmax)
    m = pres.nvars
    mult = _MultCache(q)
    diff = _koszul_diff(mult)

    bases: Dict[Tuple[int, int], List[tuple]] = {}
    index: Dict[Tuple[int, int], Dict[tuple, int]] = {}
    for j in range(Jmax + 1):
        for k, elts in _koszul_strand_bases(q, m, j).items():
            bases[(k, j)] = elts
            index[(k, j)] = {e: i for i, e in enumerate(elts)}

    def differential_cols(k, j):
        src = bases.get((k, j), [])
        tgt_index = index.get((k - 1, j), {})
        cols = []
        for elt in src:
            cols.append([(tgt_index[e], c) for e, c in diff(elt)])
        return cols

    # homology representatives per (k, j), k >= 1
    reps: Dict[Tuple[int, int], List[List[Fraction]]] = {}
    boundary_ech: Dict[Tuple[int, int], IntEchelon] = {}
    for (k, j), elts in sorted(bases.items()):
        dim = len(elts)
        if dim == 0 or k < 1 or j < 1:
            continue
        ech = IntEchelon(dim)
        for col in differential_cols(k + 1, j):
            if col:
                row, _ = clear_denominators(col, dim)
                ech.add(row)
        boundary_ech[(k, j)] = ech
        rank_b = ech.rank
        # kernel of d_k as explicit vectors
        rows_for_kernel: List[List[Fraction]] = []
        tdim = len(bases.get((k - 1, j), []))
        if tdim:
            matrix = [[Fraction(0)] * dim for _ in range(tdim)]
            for s, col in enumerate(differential_cols(k, j)):
                for t, c in col:
                    matrix[t][s] += c
            rows_for_kernel = matrix
        kernel = fraction_nullspace(rows_for_kernel, dim)
        # pick cycles extending the boundary space
        probe = IntEchelon(dim)
        for col in differential_cols(k + 1, j):
            if col:
                row, _ = clear_denominators(col, dim)
                probe.add(row)
        chosen = []
        for vec in kernel:
            row, _ = clear_denominators(
                [(i, c) for i, c in enumerate(vec) if c], dim
            )
            if probe.add(row) is not None:
                chosen.append(vec)
        assert len(chosen) == len(kernel) - rank_b
        if chosen:
            reps[(k, j)] = chosen

    def product_vector(vec1, key1, vec2, key2):
        k1, j1 = key1
        k2, j2 = key2
        tgt_key = (k1 + k2, j1 + j2)
        tgt_index = index.get(tgt_key, {})
        out: Dict[int, Fraction] = {}
        for s1, c1 in enumerate(vec1):
            if not c1:
                continue
            w1, S1 = bases[key1][s1]
            for s2, c2 in enumerate(vec2):
                if not c2:
                    continue
                w2, S2 = bases[key2][s2]
                if set(S1) & set(S2):
                    continue
                inv = sum(1 for a in S1 for b in S2 if b < a)
                sign = Fraction((-1) ** inv)
                S = tuple(sorted(S1 + S2))
                for nw, c in mult.mul(w1, w2):
                    t = tgt_index.get((nw, S))
                    if t is None:
                        continue
                    out[t] = out.get(t, Fraction(0)) + sign * c1 * c2 * c
        return out, tgt_key

    keys = sorted(reps)
    for a in range(len(keys)):
        for b in range(a, len(keys)):
            key1, key2 = keys[a], keys[b]
            if key1[1] + key2[1] > Jmax:
                continue
            pairs = [
                (i, k)
                for i in range(len(reps[key1]))
                for k in range(len(reps[key2]))
                if key1 != key2 or k >= i
            ]
            for i, k in pairs:
                prod, tgt_key = product_vector(
                    reps[key1][i], key1, reps[key2][k], key2
                )
                prod = {t: c for t, c in prod.items() if c}
                if not prod:
                    continue
                dim = len(bases.get(tgt_key, []))
                ech = boundary_ech.get(tgt_key)
                if ech is None:
                    ech = IntEchelon(dim)
                    for col in differential_cols(tgt_key[0] + 1, tgt_key[1]):
                        if col:
                            row, _ = clear_denominators(col, dim)
                            ech.add(row)
                    boundary_ech[tgt_key] = ech
                row, _ = clear_denominators(sorted(prod.items()), dim)
                probe = IntEchelon(dim)
                for r in ech.rows:
                    probe.add(r)
                if probe.add(row) is not None:
                    witness = (
                        f"class {i} at (hom {key1[0]}, deg {key1[1]}) times "
                        f"class {k} at (hom {key2[0]}, deg {key2[1]}) "
                        f"is nonzero in homology"
                    )
                    return ProductCheckReport(False, witness)
    return ProductCheckReport(True)


# ---------------------------------------------------------------------------
# Generalized Koszul complex
# ---------------------------------------------------------------------------

@dataclass
class GKData:
    """Dual-intersection spaces K_n, the homology of R (x) (R^!)^*, the
    cokernel series of the three-term exact sequences, and flags."""

    k_dims: Tuple[int, ...]
    homology: BigradedDims
    c_series: TruncSeries
    acyclic_positive: bool
    exactness_ok: bool
    k_bases: tuple = field(repr=False, default=())

    def to_json(self) -> dict:
        return {
            "k_dims": list(self.k_dims),
            "homology": self.homology.to_json(),
            "c_series": self.c_series.to_json(),
            "acyclic_positive": self.acyclic_positive,
            "exactness_ok": self.exactness_ok,
        }


def gk_homology(pres: Presentation, Jmax: int) -> GKData:
    """Generalized Koszul complex R (x) (R^!)^* through internal degree Jmax.

    K_n is computed by the kernel recursion
    K_{n+1} = ker(V (x) K_n -> R_2 (x) K_{n-1}), with K_0 = k and K_1 = V;
    its dimensions are cross-checked against the Hilbert series of the
    quadratic dual, and the cokernel dimensions of those maps give the
    series C(z).
    """
    if Jmax < 0:
        raise InvalidInput("truncation must be nonnegative")
    q = get_quotient(pres)
    q.extend_to(max(Jmax, 2))
    m = pres.nvars
    quad = pres.quadratic_part()
    w2 = q.basis(2)
    w2_index = {w: i for i, w in enumerate(w2)}
    red2: Dict[Tuple[int, int], list] = {}
    for i in range(m):
        for jj in range(m):
            red2[(i, jj)] = q.reduce_word((i, jj))

    # K bases: K[n] = list of vectors over V (x) K[n-1] coordinates
    k_dims = [1, m]
    k_bases: List[List[List[Fraction]]] = [
        [[Fraction(1)]],
        [[Fraction(1) if t == i else Fraction(0) for t in range(m)] for i in range(m)],
    ]
    c_dims = [0]
    exact_ok = True
    for n in range(1, Jmax + 1):
        kn = k_dims[n]
        kn1 = k_dims[n - 1]
        nsrc = m * kn
        ntgt = len(w2) * kn1
        rows = [[Fraction(0)] * nsrc for _ in range(ntgt)]
        for i in range(m):
            for b in range(kn):
                src = i * kn + b
                vec = k_bases[n][b]
                if n == 1:
                    # K_1 coordinates are V itself
                    for jj in range(m):
                        if vec[jj]:
                            for nw, c in red2[(i, jj)]:
                                rows[w2_index[nw] * 1 + 0][src] += c * vec[jj]
                else:
                    for jj in range(m):
                        for cidx in range(kn1):
                            coeff = vec[jj * kn1 + cidx]
                            if coeff:
                                for nw, c in red2[(i, jj)]:
                                    rows[w2_index[nw] * kn1 + cidx][src] += c * coeff
        kernel = fraction_nullspace(rows, nsrc)
        rank = nsrc - len(kernel)
        k_bases.append(kernel)
        k_dims.append(len(kernel))
        c_dims.append(ntgt - rank)
        if len(kernel) != nsrc - rank:
            exact_ok = False

    # cross-check K dimensions against the quadratic dual's Hilbert series
    dual_h = hilbert_series(koszul_dual(quad), Jmax + 1)
    for n, kd in enumerate(k_dims[: Jmax + 2]):
        if kd != dual_h[n]:
            raise GradedAlgError(
                f"K_{n} dimension {kd} disagrees with dual Hilbert coefficient {dual_h[n]}"
            )

    # GK homology by strand
    dims: Dict[Tuple[int, int], int] = {(0, 0): 1}

    def gk_diff_col(jdeg, n, w, b, tgt_index):
        vec = k_bases[n][b]
        out: Dict[int, Fraction] = {}
        kn1 = k_dims[n - 1]
        for i in range(m):
            if n == 1:
                entries = [(0, vec[i])] if vec[i] else []
            else:
                entries = [
                    (cidx, vec[i * kn1 + cidx])
                    for cidx in range(kn1)
                    if vec[i * kn1 + cidx]
                ]
            if not entries:
                continue
            for nw, c in q.multiply_words(w, (i,)):
                for cidx, coeff in entries:
                    t = tgt_index.get((nw, cidx))
                    if t is not None:
                        out[t] = out.get(t, Fraction(0)) + c * coeff
        return [(t, c) for t, c in out.items() if c]

    for j in range(1, Jmax + 1):
        spaces = []
        indexes = []
        top = min(j, Jmax + 1)
        for n in range(0, top + 1):
            if n > j or k_dims[n] == 0:
                spaces.append([])
            else:
                spaces.append([(w, b) for w in q.basis(j - n) for b in range(k_dims[n])])
        indexes = [{e: i for i, e in enumerate(s)} for s in spaces]
        diffs: List[Optional[SparseMatrix]] = [None] * len(spaces)
        for n in range(1, len(spaces)):
            cols: SparseMatrix = []
            for (w, b) in spaces[n]:
                cols.append(gk_diff_col(j, n, w, b, indexes[n - 1]))
            diffs[n] = cols
        hom = homology_ranks(ComplexSlice(j, spaces, diffs))
        for n, h in enumerate(hom):
            if h and not (n == 0 and j == 0):
                dims[(n, j)] = h

    homology = BigradedDims(dims, Jmax)
    acyclic = all(n == 0 for (n, j) in homology.dims)
    c_series = TruncSeries([c_dims[n] if n < len(c_dims) else 0 for n in range(Jmax + 1)], Jmax)
    return GKData(
        k_dims=tuple(k_dims[: Jmax + 2]),
        homology=homology,
        c_series=c_series,
        acyclic_positive=acyclic,
        exactness_ok=exact_ok,
        k_bases=tuple(tuple(tuple(v) for v in basis) for basis in k_bases),
    )


# ---------------------------------------------------------------------------
# Closed-form Poincare series when R_3 = 0
# ---------------------------------------------------------------------------

def r3_poincare(pres: Presentation, N: int) -> TruncSeries2:
    """x*H(xy) / (1 + x - H(xy)(1 - |R_1| xy + |R_2| x^2 y^2)) with H the
    Hilbert series of the quadratic dual; requires R_3 = 0."""
    H3 = hilbert_series(pres, 3)
    if H3[3] != 0:
        raise PreconditionFailed("this closed form requires R_3 = 0")
    a, b = H3[1], H3[2]
    Hd = hilbert_series(koszul_dual(pres.quadratic_part()), N)
    g = [Fraction(0)] * (N + 1)
    for mdeg in range(N + 1):
        val = Hd[mdeg]
        if mdeg >= 1:
            val -= a * Hd[mdeg - 1]
        if mdeg >= 2:
            val += b * Hd[mdeg - 2]
        g[mdeg] = val
    if g[0] != 1:
        raise GradedAlgError("dual Hilbert series must start at 1")
    rows = [[Fraction(1)]]
    for mdeg in range(1, N + 1):
        row = [Fraction(0)] * (mdeg + 1)
        row[mdeg - 1] = -g[mdeg]
        rows.append(row)
    denominator = TruncSeries2(rows, N)
    return TruncSeries2.from_xy_power(Hd, N) * denominator.inverse()
