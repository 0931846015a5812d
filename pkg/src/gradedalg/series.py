"""Exact truncated power series over Q and the Moebius-logarithm machinery.

Everything here is exact rational arithmetic.  A series knows its truncation
degree N (inclusive); asking for a coefficient beyond N raises instead of
silently returning 0, and every arithmetic result carries the minimum of the
operand truncations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional, Sequence

from .errors import InvalidInput, NotAnEnvelopingSeries, TruncationExceeded

_ZERO = Fraction(0)
_ONE = Fraction(1)


def fraction_to_str(c: Fraction) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def fraction_from_str(s: str) -> Fraction:
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInput(f"bad rational literal {s!r}") from exc


class TruncSeries:
    """A power series sum c_n z^n known exactly for 0 <= n <= truncation."""

    __slots__ = ("coeffs", "truncation")

    def __init__(self, coeffs: Sequence, truncation: Optional[int] = None):
        coeffs = [Fraction(c) for c in coeffs]
        if truncation is None:
            truncation = len(coeffs) - 1
        if truncation < 0:
            raise InvalidInput("truncation must be nonnegative")
        if len(coeffs) < truncation + 1:
            coeffs += [_ZERO] * (truncation + 1 - len(coeffs))
        self.coeffs = tuple(coeffs[: truncation + 1])
        self.truncation = truncation

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, N: int) -> "TruncSeries":
        return cls([_ZERO], N)

    @classmethod
    def one(cls, N: int) -> "TruncSeries":
        return cls([_ONE], N)

    @classmethod
    def monomial(cls, n: int, N: int, coeff=1) -> "TruncSeries":
        c = [_ZERO] * (N + 1)
        if n <= N:
            c[n] = Fraction(coeff)
        return cls(c, N)

    @classmethod
    def geometric(cls, N: int, ratio=1) -> "TruncSeries":
        """1/(1 - ratio*z) up to degree N."""
        r = Fraction(ratio)
        c, acc = [], _ONE
        for _ in range(N + 1):
            c.append(acc)
            acc *= r
        return cls(c, N)

    # -- access ----------------------------------------------------------

    def __getitem__(self, n: int) -> Fraction:
        if n < 0:
            raise InvalidInput("negative degree")
        if n > self.truncation:
            raise TruncationExceeded(
                f"coefficient {n} requested beyond truncation {self.truncation}"
            )
        return self.coeffs[n]

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __eq__(self, other):
        return (
            isinstance(other, TruncSeries)
            and self.truncation == other.truncation
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.truncation, self.coeffs))

    def __repr__(self):
        return f"TruncSeries({[str(c) for c in self.coeffs]})"

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    # -- arithmetic -------------------------------------------------------

    def truncate(self, N: int) -> "TruncSeries":
        if N > self.truncation:
            raise TruncationExceeded(
                f"cannot extend truncation {self.truncation} to {N}"
            )
        return TruncSeries(self.coeffs[: N + 1], N)

    def _common(self, other) -> int:
        return min(self.truncation, other.truncation)

    def __add__(self, other):
        if not isinstance(other, TruncSeries):
            other = TruncSeries([other], self.truncation)
        N = self._common(other)
        return TruncSeries(
            [self.coeffs[n] + other.coeffs[n] for n in range(N + 1)], N
        )

    __radd__ = __add__

    def __neg__(self):
        return TruncSeries([-c for c in self.coeffs], self.truncation)

    def __sub__(self, other):
        if not isinstance(other, TruncSeries):
            other = TruncSeries([other], self.truncation)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "TruncSeries":
        c = Fraction(c)
        return TruncSeries([c * a for a in self.coeffs], self.truncation)

    def __mul__(self, other):
        if not isinstance(other, TruncSeries):
            return self.scale(other)
        N = self._common(other)
        out = [_ZERO] * (N + 1)
        for i, a in enumerate(self.coeffs[: N + 1]):
            if a == 0:
                continue
            for j in range(N + 1 - i):
                b = other.coeffs[j]
                if b:
                    out[i + j] += a * b
        return TruncSeries(out, N)

    __rmul__ = __mul__

    def pow_int(self, e: int) -> "TruncSeries":
        if e < 0:
            return series_inverse(self.pow_int(-e))
        result = TruncSeries.one(self.truncation)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base if e > 1 else base
            e >>= 1
        return result

    def substitute_power(self, r: int, sign: int = 1) -> "TruncSeries":
        """Substitute z -> sign * z^r (sign is +1 or -1), same truncation."""
        if r < 1:
            raise InvalidInput("substitution exponent must be >= 1")
        N = self.truncation
        out = [_ZERO] * (N + 1)
        for n, c in enumerate(self.coeffs):
            if n * r > N:
                break
            out[n * r] = c if (sign == 1 or n % 2 == 0) else -c
        return TruncSeries(out, N)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "truncation": self.truncation,
            "coeffs": [fraction_to_str(c) for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TruncSeries":
        try:
            N = int(doc["truncation"])
            coeffs = [fraction_from_str(s) for s in doc["coeffs"]]
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed series document: {exc}") from exc
        return cls(coeffs, N)


def series_inverse(V: TruncSeries) -> TruncSeries:
    """Multiplicative inverse; requires a nonzero constant term."""
    if V.coeffs[0] == 0:
        raise InvalidInput("series with zero constant term has no inverse")
    N = V.truncation
    inv0 = _ONE / V.coeffs[0]
    out = [inv0] + [_ZERO] * N
    for n in range(1, N + 1):
        acc = _ZERO
        for k in range(1, n + 1):
            if V.coeffs[k]:
                acc += V.coeffs[k] * out[n - k]
        out[n] = -inv0 * acc
    return TruncSeries(out, N)


def series_log(V: TruncSeries) -> TruncSeries:
    """Formal logarithm; requires constant term 1."""
    if V.coeffs[0] != 1:
        raise InvalidInput("log requires constant term 1")
    N = V.truncation
    # n*l_n = n*v_n - sum_{k=1}^{n-1} k*l_k*v_{n-k}
    out = [_ZERO] * (N + 1)
    for n in range(1, N + 1):
        acc = Fraction(n) * V.coeffs[n]
        for k in range(1, n):
            if out[k] and V.coeffs[n - k]:
                acc -= k * out[k] * V.coeffs[n - k]
        out[n] = acc / n
    return TruncSeries(out, N)


def series_exp(V: TruncSeries) -> TruncSeries:
    """Formal exponential; requires constant term 0."""
    if V.coeffs[0] != 0:
        raise InvalidInput("exp requires constant term 0")
    N = V.truncation
    out = [_ONE] + [_ZERO] * N
    for n in range(1, N + 1):
        acc = _ZERO
        for k in range(1, n + 1):
            if V.coeffs[k] and out[n - k]:
                acc += k * V.coeffs[k] * out[n - k]
        out[n] = acc / n
    return TruncSeries(out, N)


def moebius(r: int) -> int:
    """Moebius mu via trial factorization."""
    if r < 1:
        raise InvalidInput("moebius argument must be a positive integer")
    result = 1
    d = 2
    while d * d <= r:
        if r % d == 0:
            r //= d
            if r % d == 0:
                return 0
            result = -result
        d += 1
    if r > 1:
        result = -result
    return result


def binomial_factor(i: int, exponent: int, N: int, sign: int) -> TruncSeries:
    """(1 + sign*z^i)^exponent for sign=+1, or (1 - z^i)^(-exponent) for sign=-1.

    Uses binomial coefficients directly so huge exponents stay cheap.
    """
    out = [_ZERO] * (N + 1)
    out[0] = _ONE
    k = 1
    while i * k <= N:
        if sign > 0:
            if k > exponent:
                break
            out[i * k] = Fraction(comb(exponent, k))
        else:
            out[i * k] = Fraction(comb(exponent + k - 1, k))
        k += 1
    return TruncSeries(out, N)


def pbw_env_series(alpha: Sequence[int], beta: Sequence[int], N: int) -> TruncSeries:
    """prod_i (1+z^i)^beta_i / (1-z^i)^alpha_i up to degree N.

    alpha/beta are indexed by degree starting at 1 (alpha[0] is degree 1).
    """
    for seq in (alpha, beta):
        for d in seq:
            if int(d) != d or d < 0:
                raise InvalidInput("dimension counts must be nonnegative integers")
    result = TruncSeries.one(N)
    for i, a in enumerate(alpha, start=1):
        if i > N:
            break
        if a:
            result = result * binomial_factor(i, int(a), N, sign=-1)
    for i, b in enumerate(beta, start=1):
        if i > N:
            break
        if b:
            result = result * binomial_factor(i, int(b), N, sign=+1)
    return result


def free_product_series(A: TruncSeries, B: TruncSeries) -> TruncSeries:
    """Series of a free product: 1/(A*B) = 1/A + 1/B - 1."""
    if A.coeffs[0] != 1 or B.coeffs[0] != 1:
        raise InvalidInput("free product series requires constant terms 1")
    return series_inverse(series_inverse(A) + series_inverse(B) - TruncSeries.one(A._common(B)))


class SignedSeries:
    """An element even(z) + y*odd(z) of Z[[z]][y]/(y^2-1), exact over Q."""

    __slots__ = ("even", "odd")

    def __init__(self, even: TruncSeries, odd: TruncSeries):
        if even.truncation != odd.truncation:
            N = min(even.truncation, odd.truncation)
            even, odd = even.truncate(N), odd.truncate(N)
        if odd.coeffs[0] != 0:
            raise InvalidInput("odd part must have zero constant term")
        self.even = even
        self.odd = odd

    @property
    def truncation(self) -> int:
        return self.even.truncation

    @classmethod
    def from_even(cls, even: TruncSeries) -> "SignedSeries":
        return cls(even, TruncSeries.zero(even.truncation))

    @classmethod
    def by_parity(cls, total: TruncSeries) -> "SignedSeries":
        """Split a single series by degree parity (sign = degree mod 2)."""
        N = total.truncation
        even = [c if n % 2 == 0 else _ZERO for n, c in enumerate(total.coeffs)]
        odd = [c if n % 2 == 1 else _ZERO for n, c in enumerate(total.coeffs)]
        return cls(TruncSeries(even, N), TruncSeries(odd, N))

    def total(self) -> TruncSeries:
        return self.even + self.odd

    def __eq__(self, other):
        return (
            isinstance(other, SignedSeries)
            and self.even == other.even
            and self.odd == other.odd
        )

    def __hash__(self):
        return hash((self.even, self.odd))

    def __repr__(self):
        return f"SignedSeries(even={self.even!r}, odd={self.odd!r})"

    def __add__(self, other):
        return SignedSeries(self.even + other.even, self.odd + other.odd)

    def __sub__(self, other):
        return SignedSeries(self.even - other.even, self.odd - other.odd)

    def __mul__(self, other):
        # (a + y b)(c + y d) = (ac + bd) + y(ad + bc) since y^2 = 1
        return SignedSeries(
            self.even * other.even + self.odd * other.odd,
            self.even * other.odd + self.odd * other.even,
        )

    def to_json(self) -> dict:
        return {"even": self.even.to_json(), "odd": self.odd.to_json()}


def _logg_mixed(V: SignedSeries, N: int) -> SignedSeries:
    """Moebius log in Z[[z]][y]/(y^2-1) via the idempotent split e+- = (1+-y)/2."""
    plus = V.even + V.odd     # value at y = +1
    minus = V.even - V.odd    # value at y = -1
    if plus.coeffs[0] != 1 or minus.coeffs[0] != 1:
        raise InvalidInput("logg requires even constant term 1 and odd constant term 0")
    ev = TruncSeries.zero(N)
    od = TruncSeries.zero(N)
    for r in range(1, N + 1):
        mu = moebius(r)
        if mu == 0:
            continue
        w = Fraction(mu, r)
        if r % 2 == 1:
            # substitution fixes y, so both idempotent components survive
            lp = series_log(plus.substitute_power(r))
            lm = series_log(minus.substitute_power(r))
            half = Fraction(1, 2)
            ev = ev + (lp + lm).scale(w * half)
            od = od + (lp - lm).scale(w * half)
        else:
            # y -> (-1)^{r+1} y^r = -1, leaving a plain series
            ev = ev + series_log(minus.substitute_power(r)).scale(w)
    return SignedSeries(ev, od)


def logg(V, mode: str, *, check_integral: bool = True) -> SignedSeries:
    """Recover graded Lie dimension series from an enveloping-algebra series.

    mode 'even'        -- all Lie elements of sign 0; input must have zero odd part.
    mode 'alternating' -- sign equals degree mod 2; input read as a single series.
    mode 'mixed'       -- general signs; input is a SignedSeries.

    The result is alpha(z) + y*beta(z) with alpha the even and beta the odd
    dimension series.  With check_integral the coefficients must be integers,
    otherwise NotAnEnvelopingSeries is raised; pass check_integral=False to
    evaluate the defining formulas on arbitrary unit-constant series.
    """
    if mode == "even":
        if isinstance(V, SignedSeries):
            if not V.odd.is_zero():
                raise InvalidInput("'even' mode requires a zero odd part")
            V = V.even
        if V.coeffs[0] != 1:
            raise InvalidInput("logg requires constant term 1")
        N = V.truncation
        acc = TruncSeries.zero(N)
        for r in range(1, N + 1):
            mu = moebius(r)
            if mu:
                acc = acc + series_log(V.substitute_power(r)).scale(Fraction(mu, r))
        out = SignedSeries.from_even(acc)
    elif mode == "alternating":
        if isinstance(V, SignedSeries):
            V = V.total()
        if V.coeffs[0] != 1:
            raise InvalidInput("logg requires constant term 1")
        N = V.truncation
        acc = TruncSeries.zero(N)
        for r in range(1, N + 1):
            mu = moebius(r)
            if mu:
                sign = 1 if r % 2 == 1 else -1
                acc = acc + series_log(V.substitute_power(r, sign)).scale(Fraction(mu, r))
        even = [c if n % 2 == 0 else _ZERO for n, c in enumerate(acc.coeffs)]
        odd = [c if n % 2 == 1 else _ZERO for n, c in enumerate(acc.coeffs)]
        out = SignedSeries(TruncSeries(even, N), TruncSeries(odd, N))
    elif mode == "mixed":
        if isinstance(V, TruncSeries):
            V = SignedSeries.from_even(V)
        out = _logg_mixed(V, V.truncation)
    else:
        raise InvalidInput(f"unknown logg mode {mode!r}")

    if check_integral:
        for part in (out.even, out.odd):
            for n, c in enumerate(part.coeffs):
                if c.denominator != 1:
                    raise NotAnEnvelopingSeries(
                        f"non-integral Lie dimension {c} in degree {n}"
                    )
    return out


@dataclass(frozen=True)
class DimSequence:
    """Dimension counts for degrees 1..N, split into even and odd signs."""

    N: int
    even: tuple
    odd: tuple

    def __post_init__(self):
        if len(self.even) != self.N or len(self.odd) != self.N:
            raise InvalidInput("dimension sequences must cover degrees 1..N")
        for d in itertools.chain(self.even, self.odd):
            if int(d) != d or d < 0:
                raise InvalidInput("dimensions must be nonnegative integers")

    @classmethod
    def from_even(cls, dims: Sequence[int]) -> "DimSequence":
        dims = tuple(int(d) for d in dims)
        return cls(len(dims), dims, (0,) * len(dims))

    @classmethod
    def from_alternating(cls, dims: Sequence[int]) -> "DimSequence":
        """Place degree-i count on the side of parity i mod 2."""
        dims = tuple(int(d) for d in dims)
        even = tuple(d if (i + 1) % 2 == 0 else 0 for i, d in enumerate(dims))
        odd = tuple(d if (i + 1) % 2 == 1 else 0 for i, d in enumerate(dims))
        return cls(len(dims), even, odd)

    @classmethod
    def from_signed_series(cls, s: SignedSeries) -> "DimSequence":
        N = s.truncation
        ev, od = [], []
        for n in range(1, N + 1):
            a, b = s.even[n], s.odd[n]
            if a.denominator != 1 or b.denominator != 1 or a < 0 or b < 0:
                raise NotAnEnvelopingSeries(
                    f"dimension counts must be nonnegative integers, got {a}, {b} in degree {n}"
                )
            ev.append(int(a))
            od.append(int(b))
        return cls(N, tuple(ev), tuple(od))

    @property
    def total(self) -> tuple:
        return tuple(a + b for a, b in zip(self.even, self.odd))

    def env_series(self) -> TruncSeries:
        return pbw_env_series(self.even, self.odd, self.N)

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "even": list(self.even),
            "odd": list(self.odd),
            "total": list(self.total),
        }


def detect_period(dims: Sequence[int]) -> Optional[tuple]:
    """Smallest (offset, period), lexicographically, such that the sequence
    repeats with that period from the 1-based offset through the available
    data, with at least two full periods visible.  None if no such pair.
    """
    dims = list(dims)
    N = len(dims)
    for offset in range(1, N + 1):
        span = N - offset + 1
        for period in range(1, span // 2 + 1):
            ok = all(
                dims[i - 1] == dims[i - 1 + period]
                for i in range(offset, N - period + 1)
            )
            if ok:
                return (offset, period)
    return None


class TruncSeries2:
    """Two-variable series sum c_{q,j} x^q y^j truncated at y-degree J.

    Row j stores the x-polynomial of y^j; the x-degree within row j never
    exceeds j (homological degree is bounded by internal degree).
    """

    __slots__ = ("rows", "truncation_y")

    def __init__(self, rows: Sequence[Sequence], truncation_y: Optional[int] = None):
        if truncation_y is None:
            truncation_y = len(rows) - 1
        if truncation_y < 0:
            raise InvalidInput("truncation must be nonnegative")
        fixed = []
        for j in range(truncation_y + 1):
            row = [Fraction(c) for c in (rows[j] if j < len(rows) else [])]
            if len(row) > j + 1:
                if any(c != 0 for c in row[j + 1 :]):
                    raise InvalidInput(
                        f"x-degree exceeds y-degree {j} in two-variable series"
                    )
                row = row[: j + 1]
            row += [_ZERO] * (j + 1 - len(row))
            fixed.append(tuple(row))
        self.rows = tuple(fixed)
        self.truncation_y = truncation_y

    @classmethod
    def one(cls, J: int) -> "TruncSeries2":
        return cls([[1]], J)

    @classmethod
    def from_xy_power(cls, coeff_series: TruncSeries, J: int) -> "TruncSeries2":
        """Lift sum c_m t^m to sum c_m x^m y^m (substitute t = xy)."""
        rows = []
        for j in range(J + 1):
            row = [_ZERO] * (j + 1)
            if j <= coeff_series.truncation:
                row[j] = coeff_series[j]
            rows.append(row)
        return cls(rows, J)

    def coeff(self, q: int, j: int) -> Fraction:
        if j > self.truncation_y:
            raise TruncationExceeded(f"y-degree {j} beyond truncation {self.truncation_y}")
        if q < 0 or q > j:
            return _ZERO
        return self.rows[j][q]

    def __eq__(self, other):
        return (
            isinstance(other, TruncSeries2)
            and self.truncation_y == other.truncation_y
            and self.rows == other.rows
        )

    def __repr__(self):
        return f"TruncSeries2(J={self.truncation_y})"

    def _common(self, other) -> int:
        return min(self.truncation_y, other.truncation_y)

    def truncate(self, J: int) -> "TruncSeries2":
        if J > self.truncation_y:
            raise TruncationExceeded("cannot extend a two-variable truncation")
        return TruncSeries2(self.rows[: J + 1], J)

    def __add__(self, other):
        J = self._common(other)
        return TruncSeries2(
            [
                [a + b for a, b in zip(self.rows[j], other.rows[j])]
                for j in range(J + 1)
            ],
            J,
        )

    def __sub__(self, other):
        J = self._common(other)
        return TruncSeries2(
            [
                [a - b for a, b in zip(self.rows[j], other.rows[j])]
                for j in range(J + 1)
            ],
            J,
        )

    def scale(self, c) -> "TruncSeries2":
        c = Fraction(c)
        return TruncSeries2(
            [[c * a for a in row] for row in self.rows], self.truncation_y
        )

    def __mul__(self, other):
        J = self._common(other)
        rows = [[_ZERO] * (j + 1) for j in range(J + 1)]
        for j1 in range(J + 1):
            r1 = self.rows[j1]
            for j2 in range(J + 1 - j1):
                r2 = other.rows[j2]
                row = rows[j1 + j2]
                for q1, a in enumerate(r1):
                    if a == 0:
                        continue
                    for q2, b in enumerate(r2):
                        if b:
                            row[q1 + q2] += a * b
        return TruncSeries2(rows, J)

    def inverse(self) -> "TruncSeries2":
        c0 = self.rows[0][0]
        if c0 == 0:
            raise InvalidInput("two-variable series with zero constant term has no inverse")
        J = self.truncation_y
        inv0 = _ONE / c0
        rows = [[inv0]]
        for j in range(1, J + 1):
            row = [_ZERO] * (j + 1)
            for k in range(1, j + 1):
                rk = self.rows[k]
                bj = rows[j - k]
                for q1, a in enumerate(rk):
                    if a == 0:
                        continue
                    for q2, b in enumerate(bj):
                        if b:
                            row[q1 + q2] -= a * b
            rows.append([inv0 * c for c in row])
        return TruncSeries2(rows, J)

    def diagonal(self) -> TruncSeries:
        """The series of the (n, n) coefficients."""
        return TruncSeries(
            [self.rows[j][j] for j in range(self.truncation_y + 1)],
            self.truncation_y,
        )

    def at_x(self, x_value) -> TruncSeries:
        """Evaluate the x-polynomials at a rational point, e.g. x = -1."""
        x = Fraction(x_value)
        out = []
        for row in self.rows:
            acc, p = _ZERO, _ONE
            for c in row:
                acc += c * p
                p *= x
            out.append(acc)
        return TruncSeries(out, self.truncation_y)

    def to_json(self) -> dict:
        return {
            "truncation_y": self.truncation_y,
            "rows": [
                {"j": j, "coeffs_x": [fraction_to_str(c) for c in row]}
                for j, row in enumerate(self.rows)
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TruncSeries2":
        try:
            J = int(doc["truncation_y"])
            rows = [[] for _ in range(J + 1)]
            for entry in doc["rows"]:
                rows[int(entry["j"])] = [fraction_from_str(s) for s in entry["coeffs_x"]]
        except (KeyError, TypeError, IndexError) as exc:
            raise InvalidInput(f"malformed two-variable series document: {exc}") from exc
        return cls(rows, J)
