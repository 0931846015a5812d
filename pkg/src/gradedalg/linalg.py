"""Exact linear algebra kernels.

Two engines share this module:

* a dense Fraction row-reduction used for small systems (dual relation
  spaces, kernel bases, homology representatives), kept deliberately simple
  so it can double as a reference oracle;

* IntEchelon, a streaming fraction-free integer echelon over numpy int64
  rows.  Every row operation is guarded by an a-priori magnitude bound, and
  rows that would overflow 64 bits are promoted to Python big integers, so
  all results are exact.  This is what makes degree-8 Hilbert computations
  of 5-generator algebras tractable.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidInput

_INT64_SAFE = 1 << 62


# ---------------------------------------------------------------------------
# Fraction reference engine
# ---------------------------------------------------------------------------

def fraction_rref(rows: Iterable[Sequence[Fraction]], ncols: int):
    """Reduced row echelon form over Q.

    Pivots are the first nonzero column of each row in the given column
    order.  Returns (pivot_columns, rref_rows) with unit leading
    coefficients, rows sorted by pivot column.
    """
    work: List[List[Fraction]] = []
    for r in rows:
        v = [Fraction(c) for c in r]
        if len(v) != ncols:
            raise InvalidInput("row length does not match column count")
        for pivot, prow in work:
            if v[pivot]:
                c = v[pivot]
                v = [a - c * b for a, b in zip(v, prow)]
        lead = next((i for i, c in enumerate(v) if c), None)
        if lead is None:
            continue
        inv = Fraction(1) / v[lead]
        work.append((lead, [c * inv for c in v]))
    work.sort(key=lambda t: t[0])
    # back-substitute to full RREF
    for i in range(len(work) - 1, -1, -1):
        lead_i, row_i = work[i]
        for k in range(i + 1, len(work)):
            lead_k, row_k = work[k]
            c = row_i[lead_k]
            if c:
                work[i] = (lead_i, [a - c * b for a, b in zip(row_i, row_k)])
                row_i = work[i][1]
    return [p for p, _ in work], [r for _, r in work]


def fraction_rank(rows: Iterable[Sequence[Fraction]], ncols: int) -> int:
    pivots, _ = fraction_rref(rows, ncols)
    return len(pivots)


def fraction_nullspace(rows: Iterable[Sequence[Fraction]], ncols: int):
    """Canonical kernel basis: one vector per free column f, with entry 1
    at f and the solved pivot entries elsewhere."""
    pivots, rref = fraction_rref(rows, ncols)
    pivot_set = set(pivots)
    basis = []
    for f in range(ncols):
        if f in pivot_set:
            continue
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for p, row in zip(pivots, rref):
            v[p] = -row[f]
        basis.append(v)
    return basis


# ---------------------------------------------------------------------------
# Integer streaming echelon
# ---------------------------------------------------------------------------

def _np_strip_gcd(v: np.ndarray) -> Tuple[np.ndarray, int]:
    nz = v[v != 0]
    if nz.size == 0:
        return v, 0
    g = int(np.gcd.reduce(np.abs(nz)))
    if g > 1:
        v //= g
    return v, int(np.abs(v).max())


def _list_strip_gcd(v: List[int]) -> Tuple[List[int], int]:
    g = 0
    for x in v:
        if x:
            g = gcd(g, abs(x))
            if g == 1:
                break
    if g > 1:
        v = [x // g for x in v]
    m = max((abs(x) for x in v), default=0)
    return v, m


def _first_nonzero(v, start: int) -> Optional[int]:
    if isinstance(v, np.ndarray):
        idx = np.flatnonzero(v[start:])
        return int(idx[0]) + start if idx.size else None
    for i in range(start, len(v)):
        if v[i]:
            return i
    return None


class IntEchelon:
    """Streaming integer row echelon with exact arithmetic.

    Columns are eliminated in index order, so callers encode their preferred
    pivot priority by ordering columns accordingly.  Rows are numpy int64
    arrays while entries fit, Python int lists afterwards.
    """

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.rows: List = []          # parallel: row data
        self.leads: List[int] = []    # pivot column of each row
        self.maxes: List[int] = []    # max |entry| per row
        self.pivot_row: dict = {}     # pivot column -> row index
        self._rref_done = False

    @property
    def rank(self) -> int:
        return len(self.rows)

    # -- internals ------------------------------------------------------

    @staticmethod
    def _as_list(v) -> List[int]:
        return [int(x) for x in v]

    def _normalized(self, v):
        if isinstance(v, np.ndarray):
            return _np_strip_gcd(v)
        v, m = _list_strip_gcd(v)
        if m < _INT64_SAFE:
            return np.array(v, dtype=np.int64), m
        return v, m

    def _combine(self, v, maxv: int, ridx: int, lead: int, allow_swap: bool = False):
        """Zero v[lead] against the pivot row: v <- v*(b/g) - w*(a/g), or the
        scale-free v <- v - (a/b)*w when the pivot divides.  With allow_swap
        a smaller incoming lead replaces the stored pivot row first, which
        keeps leads near +-1 and entry growth linear.

        Returns (v, maxv); may switch representations to stay exact.
        """
        w = self.rows[ridx]
        a = int(v[lead])
        b = int(w[lead])
        if allow_swap and abs(a) < abs(b):
            old_row, old_max = self.rows[ridx], self.maxes[ridx]
            keep = v.copy() if isinstance(v, np.ndarray) else list(v)
            keep, maxk = self._normalized(keep)
            if int(keep[lead]) < 0:
                keep = -keep if isinstance(keep, np.ndarray) else [-x for x in keep]
            self.rows[ridx], self.maxes[ridx] = keep, maxk
            v, maxv = old_row, old_max
            w = keep
            a, b = int(v[lead]), int(w[lead])
        maxw = self.maxes[ridx]
        np_v = isinstance(v, np.ndarray)
        if a % b == 0:
            q = a // b
            bound = maxv + abs(q) * maxw
            if np_v and bound >= _INT64_SAFE:
                v, maxv = _np_strip_gcd(v)
                a = int(v[lead])
                q = a // b
                bound = maxv + abs(q) * maxw
                if bound >= _INT64_SAFE:
                    v = self._as_list(v)
                    np_v = False
            if np_v and isinstance(w, np.ndarray):
                v -= w * q
                return v, bound
            v = v if isinstance(v, list) else self._as_list(v)
            wl = w if isinstance(w, list) else w.tolist()
            for i in range(lead, self.ncols):
                v[i] = v[i] - q * wl[i]
            return v, bound
        g = gcd(abs(a), abs(b))
        aa, bb = a // g, b // g
        bound = abs(bb) * maxv + abs(aa) * maxw
        if np_v and bound >= _INT64_SAFE:
            v, maxv = _np_strip_gcd(v)
            a = int(v[lead])
            g = gcd(abs(a), abs(b))
            aa, bb = a // g, b // g
            bound = abs(bb) * maxv + abs(aa) * maxw
            if bound >= _INT64_SAFE:
                v = self._as_list(v)
                np_v = False
        if np_v and isinstance(w, np.ndarray):
            np.multiply(v, bb, out=v)
            v -= w * aa
            return v, bound
        v = v if isinstance(v, list) else self._as_list(v)
        wl = w if isinstance(w, list) else w.tolist()
        for i in range(lead, self.ncols):
            v[i] = v[i] * bb - wl[i] * aa
        return v, bound

    def _reduce(self, v, maxv: int, allow_swap: bool = False):
        """Forward-reduce v against the echelon until its lead is a fresh
        column (or the vector vanishes)."""
        start = 0
        while True:
            lead = _first_nonzero(v, start)
            if lead is None:
                return None, v, 0
            ridx = self.pivot_row.get(lead)
            if ridx is None:
                return lead, v, maxv
            v, maxv = self._combine(v, maxv, ridx, lead, allow_swap)
            start = lead  # entry now zero; scan resumes here cheaply

    # -- public ----------------------------------------------------------

    def add(self, row) -> Optional[int]:
        """Insert a row; returns its pivot column or None if dependent."""
        if self._rref_done:
            raise InvalidInput("cannot add rows after RREF finalization")
        if isinstance(row, np.ndarray):
            v = row.astype(np.int64, copy=True)
            v, maxv = _np_strip_gcd(v)
        else:
            v = list(int(x) for x in row)
            m = max((abs(x) for x in v), default=0)
            if m < _INT64_SAFE:
                v = np.array(v, dtype=np.int64)
                v, maxv = _np_strip_gcd(v)
            else:
                v, maxv = _list_strip_gcd(v)
        if len(v) != self.ncols:
            raise InvalidInput("row length does not match column count")
        lead, v, maxv = self._reduce(v, maxv, allow_swap=True)
        if lead is None:
            return None
        if isinstance(v, np.ndarray):
            v, maxv = _np_strip_gcd(v)
        else:
            v, maxv = _list_strip_gcd(v)
            if maxv < _INT64_SAFE:
                v = np.array(v, dtype=np.int64)
        if int(v[lead]) < 0:
            v = -v if isinstance(v, np.ndarray) else [-x for x in v]
        self.rows.append(v)
        self.leads.append(lead)
        self.maxes.append(maxv)
        self.pivot_row[lead] = len(self.rows) - 1
        return lead

    def add_all(self, rows) -> int:
        for r in rows:
            self.add(r)
        return self.rank

    def finalize_rref(self):
        """Back-substitute so each row has support {pivot} + non-pivot cols."""
        if self._rref_done:
            return
        order = sorted(range(len(self.rows)), key=lambda i: self.leads[i])
        for pos in range(len(order) - 1, -1, -1):
            i = order[pos]
            v, maxv = self.rows[i], self.maxes[i]
            for later in order[pos + 1 :]:
                p = self.leads[later]
                if (int(v[p]) if isinstance(v, list) else int(v[p])) != 0:
                    v, maxv = self._combine(v, maxv, later, p)
            if isinstance(v, np.ndarray):
                v, maxv = _np_strip_gcd(v)
            else:
                v, maxv = _list_strip_gcd(v)
            if int(v[self.leads[i]]) < 0:
                v = -v if isinstance(v, np.ndarray) else [-x for x in v]
            self.rows[i], self.maxes[i] = v, maxv
        self._rref_done = True

    def nonpivot_columns(self) -> List[int]:
        pset = self.pivot_row
        return [c for c in range(self.ncols) if c not in pset]

    def pivot_expressions(self):
        """For each pivot column p, the expansion p = vec/den over the
        non-pivot columns, as (dict p -> (int64 ndarray over non-pivot
        positions, den)).  Requires finalize_rref()."""
        if not self._rref_done:
            self.finalize_rref()
        nonpiv = self.nonpivot_columns()
        pos = {c: k for k, c in enumerate(nonpiv)}
        out = {}
        for i, lead in enumerate(self.leads):
            v = self.rows[i]
            den = int(v[lead])
            vec = [0] * len(nonpiv)
            if isinstance(v, np.ndarray):
                support = np.flatnonzero(v)
                items = ((int(c), int(v[c])) for c in support)
            else:
                items = ((c, x) for c, x in enumerate(v) if x)
            big = False
            for c, x in items:
                if c == lead:
                    continue
                vec[pos[c]] = -x
                if abs(x) >= _INT64_SAFE:
                    big = True
            g = den
            for x in vec:
                if x:
                    g = gcd(g, abs(x))
                    if g == 1:
                        break
            if g > 1:
                den //= g
                vec = [x // g for x in vec]
                big = any(abs(x) >= _INT64_SAFE for x in vec)
            arr = vec if big else np.array(vec, dtype=np.int64)
            out[lead] = (arr, den)
        return out, nonpiv

    def normal_form(self, row, den: int = 1):
        """Exact residual of a vector modulo the row space, as (vec, den)
        supported on non-pivot columns.  Requires finalize_rref()."""
        if not self._rref_done:
            self.finalize_rref()
        if isinstance(row, np.ndarray):
            v = row.astype(np.int64, copy=True)
            maxv = int(np.abs(v).max()) if v.size else 0
        else:
            v = [int(x) for x in row]
            maxv = max((abs(x) for x in v), default=0)
            if maxv < _INT64_SAFE:
                v = np.array(v, dtype=np.int64)
        start = 0
        while True:
            lead = _first_nonzero(v, start)
            if lead is None:
                break
            ridx = self.pivot_row.get(lead)
            if ridx is None:
                start = lead + 1
                continue
            pl = int(self.rows[ridx][lead])
            v, maxv = self._combine(v, maxv, ridx, lead)
            den *= pl
            start = lead + 1
        # strip common content including the denominator
        g = abs(den)
        it = v if isinstance(v, list) else v[v != 0].tolist() if isinstance(v, np.ndarray) else v
        for x in it:
            if x:
                g = gcd(g, abs(int(x)))
                if g == 1:
                    break
        if g > 1:
            den //= g
            if isinstance(v, np.ndarray):
                v //= g
            else:
                v = [x // g for x in v]
        if den < 0:
            den = -den
            v = -v if isinstance(v, np.ndarray) else [-x for x in v]
        return v, den


class FreePivotRref(IntEchelon):
    """Fully reduced echelon with per-row smallest-magnitude pivot choice.

    Stored rows meet the pivot columns only in their own pivot, so reducing
    an incoming row never cascades, and pivots stay near +-1.  Canonical
    deglex pivoting can force astronomically large reduced coefficients on
    some systems; a free complement basis is often far smaller, and for
    rank purposes any complement is as good as another.
    """

    def __init__(self, ncols: int):
        super().__init__(ncols)
        self.mask = np.zeros(ncols, dtype=bool)

    def add(self, row) -> Optional[int]:
        if isinstance(row, np.ndarray):
            v = row.astype(np.int64, copy=True)
        else:
            v = [int(x) for x in row]
        v, maxv = self._normalized(v)
        while True:
            if isinstance(v, np.ndarray):
                nz = np.flatnonzero(v)
                if nz.size == 0:
                    return None
                hits = nz[self.mask[nz]]
                hit = int(hits[0]) if hits.size else None
            else:
                nz = [i for i, x in enumerate(v) if x]
                if not nz:
                    return None
                hit = next((c for c in nz if self.mask[c]), None)
            if hit is None:
                break
            v, maxv = self._combine(v, maxv, self.pivot_row[hit], hit)
        if isinstance(v, np.ndarray):
            vals = np.abs(v[nz])
            best = int(nz[int(np.argmin(vals))])
        else:
            best = min(nz, key=lambda c: abs(v[c]))
        v, maxv = self._normalized(v)
        if int(v[best]) < 0:
            v = -v if isinstance(v, np.ndarray) else [-x for x in v]
        self.rows.append(v)
        self.leads.append(best)
        self.maxes.append(int(maxv))
        new_idx = len(self.rows) - 1
        self.pivot_row[best] = new_idx
        self.mask[best] = True
        # keep older rows clean at the new pivot column
        for ridx in range(new_idx):
            w = self.rows[ridx]
            if int(w[best]) != 0:
                w, mw = self._combine(w, self.maxes[ridx], new_idx, best)
                w, mw = self._normalized(w)
                own = self.leads[ridx]
                if int(w[own]) < 0:
                    w = -w if isinstance(w, np.ndarray) else [-x for x in w]
                self.rows[ridx], self.maxes[ridx] = w, int(mw)
        return best

    def pivot_expressions(self):
        """As in IntEchelon, but no finalization step is needed."""
        nonpiv = self.nonpivot_columns()
        pos = {c: k for k, c in enumerate(nonpiv)}
        out = {}
        for i, lead in enumerate(self.leads):
            v = self.rows[i]
            den = int(v[lead])
            vec = [0] * len(nonpiv)
            big = False
            if isinstance(v, np.ndarray):
                items = ((int(c), int(v[c])) for c in np.flatnonzero(v))
            else:
                items = ((c, x) for c, x in enumerate(v) if x)
            for c, x in items:
                if c == lead:
                    continue
                vec[pos[c]] = -x
                if abs(x) >= _INT64_SAFE:
                    big = True
            g = den
            for x in vec:
                if x:
                    g = gcd(g, abs(x))
                    if g == 1:
                        break
            if g > 1:
                den //= g
                vec = [x // g for x in vec]
                big = any(abs(x) >= _INT64_SAFE for x in vec)
            arr = vec if big else np.array(vec, dtype=np.int64)
            out[lead] = (arr, den)
        return out, nonpiv


def int_rank(rows: Iterable, ncols: int) -> int:
    ech = IntEchelon(ncols)
    for r in rows:
        ech.add(r)
    return ech.rank


def clear_denominators(items: Sequence[Tuple[int, Fraction]], ncols: int):
    """Scatter sparse (col, Fraction) items into an integer row; returns
    (row, den) with row*1/den equal to the rational vector."""
    den = 1
    for _, c in items:
        den = den * c.denominator // gcd(den, c.denominator)
    big = False
    vals = []
    for col, c in items:
        x = int(c.numerator) * (den // int(c.denominator))
        vals.append((col, x))
        if abs(x) >= _INT64_SAFE:
            big = True
    if big:
        row: List[int] = [0] * ncols
        for col, x in vals:
            row[col] += x
        return row, den
    row = np.zeros(ncols, dtype=np.int64)
    for col, x in vals:
        row[col] += x
    return row, den
