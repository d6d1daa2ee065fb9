"""Exact sums ``sum_i x_i ln y_i`` over the rationals, plus ``-inf``.

An expression is stored canonically as ``{prime: coefficient}``: expanding
each ``ln y`` over the prime factorisation of ``y`` and collecting terms
gives a unique form because the logarithms of distinct primes are linearly
independent over the rationals. Equality is therefore structural.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath
from sympy import factorint

from .errors import FactorizationCapExceeded

FACTOR_INPUT_CAP = 2**64


def _factor(n: int) -> dict[int, int]:
    if n > FACTOR_INPUT_CAP:
        raise FactorizationCapExceeded(f"{n} exceeds the factorisation cap 2^64")
    return {int(p): int(e) for p, e in factorint(n).items()} if n > 1 else {}


@dataclass(frozen=True)
class LogExpr:
    terms: tuple = ()  # sorted (prime, nonzero Fraction) pairs
    neg_inf: bool = False

    @classmethod
    def log(cls, x) -> "LogExpr":
        """``ln x`` for a nonnegative rational (``ln 0 = -inf``)."""
        x = Fraction(x)
        if x < 0:
            raise ValueError("log of a negative number")
        if x == 0:
            return NEG_INF
        coeffs: dict[int, Fraction] = {}
        for p, e in _factor(x.numerator).items():
            coeffs[p] = coeffs.get(p, Fraction(0)) + e
        for p, e in _factor(x.denominator).items():
            coeffs[p] = coeffs.get(p, Fraction(0)) - e
        return cls._make(coeffs)

    @classmethod
    def _make(cls, coeffs: dict) -> "LogExpr":
        return cls(tuple(sorted((p, Fraction(c)) for p, c in coeffs.items() if c)))

    @property
    def is_zero(self) -> bool:
        return not self.neg_inf and not self.terms

    def __add__(self, other: "LogExpr") -> "LogExpr":
        if not isinstance(other, LogExpr):
            return NotImplemented
        if self.neg_inf or other.neg_inf:
            return NEG_INF
        coeffs = dict(self.terms)
        for p, c in other.terms:
            coeffs[p] = coeffs.get(p, Fraction(0)) + c
        return LogExpr._make(coeffs)

    def scale(self, k) -> "LogExpr":
        """Multiply by a nonnegative rational (``0 * -inf`` is taken as 0)."""
        k = Fraction(k)
        if k < 0:
            raise ValueError("scaling by a negative factor")
        if k == 0:
            return ZERO_EXPR
        if self.neg_inf:
            return NEG_INF
        return LogExpr._make({p: c * k for p, c in self.terms})

    def __neg__(self) -> "LogExpr":
        if self.neg_inf:
            raise ValueError("cannot negate -inf")
        return LogExpr._make({p: -c for p, c in self.terms})

    def __sub__(self, other: "LogExpr") -> "LogExpr":
        return self + (-other)

    def _approx(self, prec: int):
        """Value at ``prec`` bits and a rigorous bound on its absolute error."""
        with mpmath.workprec(prec + 20):
            total = mpmath.mpf(0)
            scale = mpmath.mpf(0)
            for p, c in self.terms:
                term = mpmath.mpf(c.numerator) / c.denominator * mpmath.log(p)
                total += term
                scale += abs(term)
            # each term and each addition is off by a few ulps at most
            err = scale * (len(self.terms) + 2) * mpmath.mpf(2) ** (-prec)
            return total, err

    def sign(self) -> int:
        """Exact sign; raises precision until the error bound excludes 0."""
        if self.neg_inf:
            return -1
        if not self.terms:
            return 0
        prec = 64
        while True:
            v, err = self._approx(prec)
            if abs(v) > err:
                return 1 if v > 0 else -1
            prec *= 2

    def __float__(self) -> float:
        if self.neg_inf:
            return float("-inf")
        if not self.terms:
            return 0.0
        prec = 64
        while True:
            v, err = self._approx(prec)
            if v != 0 and err <= abs(v) * mpmath.mpf(2) ** -60:
                return float(v)
            prec *= 2

    def __lt__(self, other: "LogExpr") -> bool:
        if other.neg_inf:
            return False
        if self.neg_inf:
            return True
        return (self - other).sign() < 0

    def __str__(self) -> str:
        if self.neg_inf:
            return "-inf"
        if not self.terms:
            return "0"
        parts = []
        for p, c in self.terms:
            cs = str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
            parts.append(f"({cs}) ln {p}")
        return " + ".join(parts)


NEG_INF = LogExpr((), True)
ZERO_EXPR = LogExpr()


def logexpr_equal(e1: LogExpr, e2: LogExpr) -> bool:
    return e1 == e2


def logexpr_to_float(e: LogExpr) -> float:
    return float(e)


def linear_combination(weights, exprs) -> LogExpr:
    """``sum_i w_i e_i`` with nonnegative rational weights."""
    total = ZERO_EXPR
    for w, e in zip(weights, exprs):
        total = total + e.scale(w)
    return total
