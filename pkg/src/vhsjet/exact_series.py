"""Exact arithmetic for Q(i)[t_1..t_s]/m^(N+1) and finite Laurent polynomials in T.

Scalars are Gaussian rationals (:class:`QI`).  A :class:`TruncatedSeries`
is a sparse map from exponent multi-indices of total degree <= N to
nonzero scalars.  :class:`SeriesMatrix` is a matrix (or vector) over the
same ring, stored as a jet: one dense Q(i) array per monomial.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np
from gmpy2 import mpq

from .errors import MismatchedRing, ParseError

Monomial = tuple


def _to_mpq(x) -> mpq:
    if isinstance(x, str):
        return mpq(Fraction(x))
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a Fraction or string")
    return mpq(x)


class QI:
    """A Gaussian rational re + im*i with gmpy2 rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, QI):
            self.re, self.im = re.re, re.im + _to_mpq(im)
            return
        if isinstance(re, complex):
            raise TypeError("complex floats are not exact")
        self.re = _to_mpq(re)
        self.im = _to_mpq(im)

    @staticmethod
    def _raw(re, im) -> "QI":
        out = QI.__new__(QI)
        out.re = re
        out.im = im
        return out

    @staticmethod
    def coerce(x) -> "QI":
        return x if isinstance(x, QI) else QI(x)

    def __add__(self, other):
        if not isinstance(other, QI):
            if isinstance(other, np.ndarray):
                return NotImplemented
            other = QI(other)
        if not other.re and not other.im:
            return self
        if not self.re and not self.im:
            return other
        return QI._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, QI):
            if isinstance(other, np.ndarray):
                return NotImplemented
            other = QI(other)
        return QI._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return QI.coerce(other) - self

    def __neg__(self):
        return QI._raw(-self.re, -self.im)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, QI):
            if isinstance(other, np.ndarray):
                return NotImplemented
            other = QI(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if (not a and not b) or (not c and not d):
            return _ZERO
        if not b and not d:
            return QI._raw(a * c, mpq(0))
        return QI._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = QI.coerce(other)
        c, d = other.re, other.im
        if not c and not d:
            raise ZeroDivisionError("division by zero in Q(i)")
        if not d:
            return QI._raw(self.re / c, self.im / c)
        n = c * c + d * d
        a, b = self.re, self.im
        return QI._raw((a * c + b * d) / n, (b * c - a * d) / n)

    def __rtruediv__(self, other):
        return QI.coerce(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return (ONE / self) ** (-n)
        out, base = ONE, self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self) -> "QI":
        return QI._raw(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, QI):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)) or type(other).__name__ == "mpq":
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(Fraction(int(self.re.numerator), int(self.re.denominator)))
        return hash((self.re, self.im))

    def __repr__(self):
        if not self.im:
            return f"QI({self.re})"
        return f"QI({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    def to_json(self) -> list[str]:
        return [
            str(self.re.numerator), str(self.re.denominator),
            str(self.im.numerator), str(self.im.denominator),
        ]

    @staticmethod
    def from_json(obj) -> "QI":
        try:
            if isinstance(obj, (int, str)):
                return QI(obj)
            rn, rd, inum, iden = (int(x) for x in obj)
            return QI(mpq(rn, rd), mpq(inum, iden))
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad Gaussian rational literal {obj!r}") from exc


ZERO = QI(0)
_ZERO = ZERO
ONE = QI(1)
I_UNIT = QI(0, 1)


def qi_array(rows, shape=None) -> np.ndarray:
    """Build a numpy object array of QI from nested numbers."""
    arr = np.array(rows, dtype=object)
    if shape is not None:
        arr = arr.reshape(shape)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = QI.coerce(v)
    return out


def qi_zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(ZERO)
    return out


def qi_eye(n: int) -> np.ndarray:
    out = qi_zeros((n, n))
    for i in range(n):
        out[i, i] = ONE
    return out


def is_zero_array(a: np.ndarray) -> bool:
    return not any(a.flat)


@lru_cache(maxsize=None)
def monomials(s: int, N: int) -> tuple[Monomial, ...]:
    """All exponent tuples of length s with total degree <= N, graded order."""
    out = []
    for deg in range(N + 1):
        for e in product(range(deg + 1), repeat=s):
            if sum(e) == deg:
                out.append(e)
    out.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
    return tuple(out)


def _add_mono(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def _check_ring(a, b):
    if (a.s, a.N) != (b.s, b.N):
        raise MismatchedRing(f"ring (s={a.s}, N={a.N}) vs (s={b.s}, N={b.N})")


class TruncatedSeries:
    """Element of Q(i)[t_1..t_s] / m^(N+1); immutable."""

    __slots__ = ("s", "N", "_c")

    def __init__(self, s: int, N: int, coeffs: Mapping[Monomial, object] | None = None):
        if s < 0 or N < 0:
            raise ValueError("need s >= 0 and N >= 0")
        self.s = s
        self.N = N
        c = {}
        for mono, v in (coeffs or {}).items():
            mono = tuple(int(x) for x in mono)
            if len(mono) != s or any(x < 0 for x in mono):
                raise ValueError(f"bad exponent {mono} for s={s}")
            if sum(mono) > N:
                continue
            v = QI.coerce(v)
            if v:
                c[mono] = c[mono] + v if mono in c else v
                if not c[mono]:
                    del c[mono]
        self._c = c

    @classmethod
    def constant(cls, s: int, N: int, value) -> "TruncatedSeries":
        return cls(s, N, {(0,) * s: value})

    @classmethod
    def variable(cls, s: int, N: int, k: int) -> "TruncatedSeries":
        e = [0] * s
        e[k] = 1
        return cls(s, N, {tuple(e): 1})

    @classmethod
    def monomial(cls, s: int, N: int, mono: Monomial, value=1) -> "TruncatedSeries":
        return cls(s, N, {tuple(mono): value})

    @property
    def coefficients(self) -> dict[Monomial, QI]:
        return dict(self._c)

    def coefficient(self, mono: Monomial) -> QI:
        return self._c.get(tuple(mono), ZERO)

    def items(self):
        return self._c.items()

    def _lift(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            _check_ring(self, other)
            return other
        return TruncatedSeries.constant(self.s, self.N, other)

    def __add__(self, other):
        other = self._lift(other)
        c = dict(self._c)
        for m, v in other._c.items():
            c[m] = c[m] + v if m in c else v
        return TruncatedSeries(self.s, self.N, c)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.s, self.N, {m: -v for m, v in self._c.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            if isinstance(other, (SeriesMatrix, np.ndarray)):
                return NotImplemented
            v = QI.coerce(other)
            return TruncatedSeries(self.s, self.N, {m: x * v for m, x in self._c.items()})
        _check_ring(self, other)
        c: dict[Monomial, QI] = {}
        N = self.N
        for m1, v1 in self._c.items():
            d1 = sum(m1)
            for m2, v2 in other._c.items():
                if d1 + sum(m2) > N:
                    continue
                m = _add_mono(m1, m2)
                p = v1 * v2
                c[m] = c[m] + p if m in c else p
        return TruncatedSeries(self.s, N, c)

    __rmul__ = __mul__

    def scalar_mul(self, value) -> "TruncatedSeries":
        return self * QI.coerce(value)

    def __pow__(self, n: int):
        out = TruncatedSeries.constant(self.s, self.N, 1)
        for _ in range(n):
            out = out * self
        return out

    def partial(self, k: int) -> "TruncatedSeries":
        """Formal derivative in t_k (0-based); stays in the same ring."""
        if not 0 <= k < self.s:
            raise IndexError(f"variable index {k} out of range for s={self.s}")
        c = {}
        for m, v in self._c.items():
            if m[k]:
                e = list(m)
                e[k] -= 1
                c[tuple(e)] = v * m[k]
        return TruncatedSeries(self.s, self.N, c)

    def eval_at_zero(self) -> QI:
        return self._c.get((0,) * self.s, ZERO)

    def truncate(self, order: int) -> "TruncatedSeries":
        """Drop monomials of degree > order (ring unchanged)."""
        return TruncatedSeries(self.s, self.N, {m: v for m, v in self._c.items() if sum(m) <= order})

    def change_order(self, N: int) -> "TruncatedSeries":
        return TruncatedSeries(self.s, N, self._c)

    def is_zero(self) -> bool:
        return not self._c

    def __bool__(self):
        return bool(self._c)

    def __eq__(self, other):
        if isinstance(other, TruncatedSeries):
            return (self.s, self.N) == (other.s, other.N) and self._c == other._c
        if isinstance(other, (int, QI, Fraction)):
            return self == TruncatedSeries.constant(self.s, self.N, other)
        return NotImplemented

    def __hash__(self):
        return hash((self.s, self.N, frozenset(self._c.items())))

    def __repr__(self):
        if not self._c:
            return "0"
        terms = []
        for m in monomials(self.s, self.N):
            if m in self._c:
                var = "*".join(
                    f"t{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(m) if e
                )
                terms.append(f"({self._c[m]})" + (f"*{var}" if var else ""))
        return " + ".join(terms)

    def to_json(self) -> list:
        return [[list(m), self._c[m].to_json()] for m in monomials(self.s, self.N) if m in self._c]

    @classmethod
    def from_json(cls, s: int, N: int, obj) -> "TruncatedSeries":
        if isinstance(obj, (int, str)):
            return cls.constant(s, N, QI.from_json(obj))
        try:
            return cls(s, N, {tuple(m): QI.from_json(v) for m, v in obj})
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad series literal: {exc}") from exc


class SeriesMatrix:
    """An array (vector or matrix) over R_S, stored as monomial -> Q(i) array."""

    __slots__ = ("s", "N", "shape", "_jet")

    def __init__(self, s: int, N: int, shape, jet: Mapping[Monomial, np.ndarray] | None = None):
        self.s, self.N = s, N
        self.shape = tuple(shape)
        j = {}
        for m, a in (jet or {}).items():
            m = tuple(m)
            if sum(m) > N:
                continue
            a = np.asarray(a, dtype=object).reshape(self.shape)
            if not is_zero_array(a):
                j[m] = a
        self._jet = j

    @classmethod
    def zeros(cls, s, N, shape):
        return cls(s, N, shape)

    @classmethod
    def constant(cls, s, N, array) -> "SeriesMatrix":
        array = np.asarray(array, dtype=object)
        return cls(s, N, array.shape, {(0,) * s: array})

    @classmethod
    def identity(cls, s, N, n):
        return cls.constant(s, N, qi_eye(n))

    @classmethod
    def from_entries(cls, s, N, entries) -> "SeriesMatrix":
        """Build from a nested list of TruncatedSeries (or scalars)."""
        arr = np.array(entries, dtype=object)
        jet: dict[Monomial, np.ndarray] = {}
        for idx, e in np.ndenumerate(arr):
            e = e if isinstance(e, TruncatedSeries) else TruncatedSeries.constant(s, N, e)
            _check_ring(e, TruncatedSeries(s, N))
            for m, v in e.items():
                if m not in jet:
                    jet[m] = qi_zeros(arr.shape)
                jet[m][idx] = v
        return cls(s, N, arr.shape, jet)

    def entry(self, *idx) -> TruncatedSeries:
        return TruncatedSeries(self.s, self.N, {m: a[idx] for m, a in self._jet.items()})

    def entries(self) -> np.ndarray:
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(*self.shape):
            out[idx] = self.entry(*idx)
        return out

    def jet(self) -> dict[Monomial, np.ndarray]:
        return dict(self._jet)

    def coefficient(self, mono: Monomial) -> np.ndarray:
        a = self._jet.get(tuple(mono))
        return a.copy() if a is not None else qi_zeros(self.shape)

    def at_zero(self) -> np.ndarray:
        return self.coefficient((0,) * self.s)

    def _compatible(self, other: "SeriesMatrix"):
        if (self.s, self.N) != (other.s, other.N):
            raise MismatchedRing(f"ring (s={self.s}, N={self.N}) vs (s={other.s}, N={other.N})")

    def __add__(self, other):
        self._compatible(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        j = dict(self._jet)
        for m, a in other._jet.items():
            j[m] = j[m] + a if m in j else a
        return SeriesMatrix(self.s, self.N, self.shape, j)

    def __neg__(self):
        return SeriesMatrix(self.s, self.N, self.shape, {m: -a for m, a in self._jet.items()})

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        self._compatible(other)
        out: dict[Monomial, np.ndarray] = {}
        for m1, a in self._jet.items():
            d1 = sum(m1)
            for m2, b in other._jet.items():
                if d1 + sum(m2) > self.N:
                    continue
                m = _add_mono(m1, m2)
                p = a @ b
                out[m] = out[m] + p if m in out else p
        return SeriesMatrix(self.s, self.N, _matmul_shape(self.shape, other.shape), out)

    def scale(self, f) -> "SeriesMatrix":
        """Multiply by a series (or scalar)."""
        if not isinstance(f, TruncatedSeries):
            v = QI.coerce(f)
            return SeriesMatrix(self.s, self.N, self.shape, {m: a * v for m, a in self._jet.items()})
        _check_ring(f, TruncatedSeries(self.s, self.N))
        out: dict[Monomial, np.ndarray] = {}
        for m1, v in f.items():
            d1 = sum(m1)
            for m2, a in self._jet.items():
                if d1 + sum(m2) > self.N:
                    continue
                m = _add_mono(m1, m2)
                p = a * v
                out[m] = out[m] + p if m in out else p
        return SeriesMatrix(self.s, self.N, self.shape, out)

    def partial(self, k: int) -> "SeriesMatrix":
        if not 0 <= k < self.s:
            raise IndexError(f"variable index {k} out of range for s={self.s}")
        out = {}
        for m, a in self._jet.items():
            if m[k]:
                e = list(m)
                e[k] -= 1
                out[tuple(e)] = a * QI(m[k])
        return SeriesMatrix(self.s, self.N, self.shape, out)

    def map_coefficients(self, fn: Callable[[np.ndarray], np.ndarray], shape=None) -> "SeriesMatrix":
        """Apply a Q(i)-linear map to every jet coefficient."""
        out = {m: fn(a) for m, a in self._jet.items()}
        if shape is None:
            shape = next(iter(out.values())).shape if out else self.shape
        return SeriesMatrix(self.s, self.N, shape, out)

    def truncate(self, order: int) -> "SeriesMatrix":
        return SeriesMatrix(self.s, self.N, self.shape,
                            {m: a for m, a in self._jet.items() if sum(m) <= order})

    def change_order(self, N: int) -> "SeriesMatrix":
        return SeriesMatrix(self.s, N, self.shape, self._jet)

    @property
    def T(self) -> "SeriesMatrix":
        return SeriesMatrix(self.s, self.N, self.shape[::-1], {m: a.T for m, a in self._jet.items()})

    def is_zero(self) -> bool:
        return not self._jet

    def __eq__(self, other):
        if not isinstance(other, SeriesMatrix):
            return NotImplemented
        if (self.s, self.N, self.shape) != (other.s, other.N, other.shape):
            return False
        if self._jet.keys() != other._jet.keys():
            return False
        return all(np.array_equal(a, other._jet[m]) for m, a in self._jet.items())

    __hash__ = None

    def __repr__(self):
        return f"SeriesMatrix(s={self.s}, N={self.N}, shape={self.shape}, terms={len(self._jet)})"

    def to_json(self) -> list:
        ent = self.entries()
        if ent.ndim == 1:
            return [e.to_json() for e in ent]
        return [[e.to_json() for e in row] for row in ent]

    @classmethod
    def from_json(cls, s: int, N: int, obj) -> "SeriesMatrix":
        def conv(x):
            return TruncatedSeries.from_json(s, N, x)
        if not isinstance(obj, list) or not obj:
            raise ParseError("matrix literal must be a non-empty list")
        if isinstance(obj[0], list) and obj[0] and _looks_like_row(obj[0]):
            rows = [[conv(e) for e in row] for row in obj]
            if len({len(r) for r in rows}) != 1:
                raise ParseError("ragged matrix literal")
        else:
            rows = [conv(e) for e in obj]
        return cls.from_entries(s, N, rows)


def _matmul_shape(a: tuple, b: tuple) -> tuple:
    if a[-1] != b[0]:
        raise ValueError(f"matmul shape mismatch {a} @ {b}")
    return a[:-1] + b[1:]


def _looks_like_row(x) -> bool:
    # a row is a list of series literals; a series literal is a list of [mono, value] pairs
    # or a bare scalar; a row's elements are themselves lists-of-pairs or scalars.
    first = x[0]
    if isinstance(first, (int, str)):
        return True
    if isinstance(first, list) and (not first or isinstance(first[0], list)):
        return True
    return False


class LaurentT:
    """Finite Laurent polynomial in T with values in an additive group.

    ``zero_test`` decides when a value vanishes (canonical form stores no
    zero values).  Values are usually 1-D Q(i) arrays (module elements).
    """

    __slots__ = ("_terms", "_is_zero")

    def __init__(self, terms: Mapping[int, object] | Iterable = (), zero_test=None):
        self._is_zero = zero_test or _default_zero
        items = terms.items() if isinstance(terms, Mapping) else terms
        t: dict[int, object] = {}
        for k, v in items:
            k = int(k)
            t[k] = t[k] + v if k in t else v
        self._terms = {k: v for k, v in sorted(t.items()) if not self._is_zero(v)}

    def terms(self) -> dict[int, object]:
        return dict(self._terms)

    def exponents(self) -> list[int]:
        return list(self._terms)

    def __getitem__(self, k: int):
        return self._terms.get(k)

    def __add__(self, other: "LaurentT") -> "LaurentT":
        t = dict(self._terms)
        for k, v in other._terms.items():
            t[k] = t[k] + v if k in t else v
        return LaurentT(t, self._is_zero)

    def __neg__(self):
        return LaurentT({k: -v for k, v in self._terms.items()}, self._is_zero)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LaurentT":
        return LaurentT({k: v * c for k, v in self._terms.items()}, self._is_zero)

    def shift(self, j: int) -> "LaurentT":
        """Multiply by T^j."""
        return LaurentT({k + j: v for k, v in self._terms.items()}, self._is_zero)

    def map(self, fn) -> "LaurentT":
        return LaurentT({k: fn(v) for k, v in self._terms.items()}, self._is_zero)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if not isinstance(other, LaurentT):
            return NotImplemented
        if self._terms.keys() != other._terms.keys():
            return False
        return all(self._is_zero(v - other._terms[k]) for k, v in self._terms.items())

    __hash__ = None

    def __iter__(self) -> Iterator[tuple[int, object]]:
        return iter(self._terms.items())

    def __repr__(self):
        return "LaurentT(" + ", ".join(f"T^{k}: {v!r}" for k, v in self._terms.items()) + ")"


def _default_zero(v) -> bool:
    if isinstance(v, np.ndarray):
        return is_zero_array(v)
    if isinstance(v, (TruncatedSeries, SeriesMatrix)):
        return v.is_zero()
    return not v
