"""Exact real amplitudes of the form ``sum_k q_k * sqrt(k)``.

Coefficients ``q_k`` are rationals and ``k`` ranges over square-free
positive integers.  Optical coefficients built from half-wave plates and
polarizing beam splitters live in the subfield Q(sqrt 2) (only ``k`` in
{1, 2}); W-state amplitudes ``1/sqrt(n)`` need the other radicands.

Equality is exact because square roots of distinct square-free integers are
linearly independent over the rationals.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Union

RationalLike = Union[int, Fraction]


@lru_cache(maxsize=4096)
def _square_split(n: int) -> tuple[int, int]:
    """Return ``(s, r)`` with ``n == s*s*r`` and ``r`` square-free."""
    if n <= 0:
        raise ValueError(f"expected a positive integer, got {n}")
    s, r = 1, 1
    p = 2
    while p * p <= n:
        count = 0
        while n % p == 0:
            n //= p
            count += 1
        s *= p ** (count // 2)
        if count % 2:
            r *= p
        p += 1
    return s, r * n


def _smallest_prime(n: int) -> int:
    p = 2
    while p * p <= n:
        if n % p == 0:
            return p
        p += 1
    return n


class Amplitude:
    """Exact element of the multiquadratic field generated by square roots.

    >>> r2 = Amplitude.sqrt_of(2)
    >>> r2 * r2
    Amplitude(2)
    >>> Amplitude(1, 1).inverse() == Amplitude(-1, 1)
    True
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, a: RationalLike = 0, b: RationalLike = 0) -> None:
        terms = {}
        if a:
            terms[1] = Fraction(a)
        if b:
            terms[2] = Fraction(b)
        self._terms: tuple[tuple[int, Fraction], ...] = tuple(sorted(terms.items()))
        self._hash: int | None = None

    @classmethod
    def _from_terms(cls, terms: dict[int, Fraction]) -> Amplitude:
        obj = cls.__new__(cls)
        obj._terms = tuple(sorted((k, v) for k, v in terms.items() if v))
        obj._hash = None
        return obj

    @classmethod
    def from_radicals(cls, pairs: Iterable[tuple[RationalLike, int]]) -> Amplitude:
        """Build ``sum coeff * sqrt(radicand)`` from arbitrary positive radicands."""
        terms: dict[int, Fraction] = {}
        for coeff, radicand in pairs:
            s, r = _square_split(int(radicand))
            terms[r] = terms.get(r, Fraction(0)) + Fraction(coeff) * s
        return cls._from_terms(terms)

    @classmethod
    def sqrt_of(cls, q: RationalLike) -> Amplitude:
        """Exact square root of a non-negative rational."""
        q = Fraction(q)
        if q < 0:
            raise ValueError("square root of a negative rational is not real")
        if q == 0:
            return cls()
        # sqrt(p/d) = sqrt(p*d)/d
        return cls.from_radicals([(Fraction(1, q.denominator), q.numerator * q.denominator)])

    @classmethod
    def coerce(cls, x: object) -> Amplitude:
        if isinstance(x, Amplitude):
            return x
        if isinstance(x, (int, Fraction)) or isinstance(x, Rational):
            return cls(Fraction(x))
        raise TypeError(f"cannot represent {x!r} exactly")

    # -- field views ---------------------------------------------------------

    @property
    def a(self) -> Fraction:
        """Rational part."""
        return dict(self._terms).get(1, Fraction(0))

    @property
    def b(self) -> Fraction:
        """Coefficient of sqrt(2)."""
        return dict(self._terms).get(2, Fraction(0))

    @property
    def radicals(self) -> dict[int, Fraction]:
        return dict(self._terms)

    def in_qsqrt2(self) -> bool:
        return all(k in (1, 2) for k, _ in self._terms)

    def is_rational(self) -> bool:
        return all(k == 1 for k, _ in self._terms)

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is irrational")
        return self.a

    def conjugate(self) -> Amplitude:
        # every element is real
        return self

    @property
    def real(self) -> Amplitude:
        return self

    # -- arithmetic ----------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __neg__(self) -> Amplitude:
        return Amplitude._from_terms({k: -v for k, v in self._terms})

    def __pos__(self) -> Amplitude:
        return self

    def __add__(self, other):
        if isinstance(other, (float, complex)):
            return complex(self) + other if isinstance(other, complex) else float(self) + other
        try:
            other = Amplitude.coerce(other)
        except TypeError:
            return NotImplemented
        terms = dict(self._terms)
        for k, v in other._terms:
            terms[k] = terms.get(k, Fraction(0)) + v
        return Amplitude._from_terms(terms)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        if isinstance(other, complex):
            return complex(self) * other
        try:
            other = Amplitude.coerce(other)
        except TypeError:
            return NotImplemented
        terms: dict[int, Fraction] = {}
        for k1, v1 in self._terms:
            for k2, v2 in other._terms:
                g = math.gcd(k1, k2)
                k = (k1 // g) * (k2 // g)
                terms[k] = terms.get(k, Fraction(0)) + v1 * v2 * g
        return Amplitude._from_terms(terms)

    __rmul__ = __mul__

    def _conjugate_at(self, p: int) -> Amplitude:
        return Amplitude._from_terms({k: (-v if k % p == 0 else v) for k, v in self._terms})

    def inverse(self) -> Amplitude:
        if not self._terms:
            raise ZeroDivisionError("Amplitude(0) has no inverse")
        # multiply by Galois conjugates until only a rational remains
        x = self
        factor = Amplitude(1)
        while True:
            primes = [k for k, _ in x._terms if k != 1]
            if not primes:
                return factor * Amplitude(1 / x.a)
            p = _smallest_prime(primes[0])
            conj = x._conjugate_at(p)
            factor = factor * conj
            x = x * conj

    def __truediv__(self, other):
        if isinstance(other, (float, complex)):
            return complex(self) / other if isinstance(other, complex) else float(self) / other
        try:
            other = Amplitude.coerce(other)
        except TypeError:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        if isinstance(other, (float, complex)):
            return other / complex(self) if isinstance(other, complex) else other / float(self)
        try:
            return Amplitude.coerce(other) * self.inverse()
        except TypeError:
            return NotImplemented

    def __pow__(self, n: int) -> Amplitude:
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = Amplitude(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def sqrt(self) -> Amplitude:
        """Exact square root; only defined for non-negative rational values."""
        if not self.is_rational():
            raise ValueError(f"no exact square root available for {self}")
        return Amplitude.sqrt_of(self.a)

    # -- comparison and conversion ---------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, Amplitude):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Amplitude(other)._terms
        if isinstance(other, (float, complex)):
            return complex(self) == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            if self.is_rational():
                self._hash = hash(self.a)
            else:
                self._hash = hash(self._terms)
        return self._hash

    def __float__(self) -> float:
        return math.fsum(float(v) * math.sqrt(k) for k, v in self._terms)

    def __complex__(self) -> complex:
        return complex(float(self), 0.0)

    def __abs__(self) -> Amplitude:
        return -self if float(self) < 0 else self

    def __repr__(self) -> str:
        if not self._terms:
            return "Amplitude(0)"
        if self.in_qsqrt2():
            args = [str(self.a)] + ([str(self.b)] if self.b else [])
            return f"Amplitude({', '.join(args)})"
        pairs = ", ".join(f"({v}, {k})" for k, v in self._terms)
        return f"Amplitude.from_radicals([{pairs}])"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for k, v in self._terms:
            if k == 1:
                parts.append(str(v))
            else:
                parts.append(f"{v}·√{k}")
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out


SQRT2 = Amplitude(0, 1)
ONE = Amplitude(1)
ZERO = Amplitude(0)


def is_zero(x, tol: float = 1e-12) -> bool:
    """Exact zero test for exact values, tolerance test for floats."""
    if isinstance(x, (float, complex)):
        return abs(x) < tol
    return not x


def is_exact(x) -> bool:
    return isinstance(x, (Amplitude, int, Fraction))


def abs2(x):
    """``|x|**2`` keeping exact values exact."""
    if isinstance(x, complex):
        return x.real * x.real + x.imag * x.imag
    if isinstance(x, (int, Fraction)):
        return Amplitude(x * x)
    return x * x


def conj(x):
    return x.conjugate() if hasattr(x, "conjugate") else x


def as_exact(x) -> Amplitude:
    return Amplitude.coerce(x)


def as_fraction(x) -> Fraction:
    """Exact rational value of an exact amplitude (raises if irrational)."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return Amplitude.coerce(x).to_fraction()
