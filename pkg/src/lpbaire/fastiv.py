"""Vectorized float64 interval enclosures for grid scans.

Every arithmetic result is widened outward by one ulp on each side, which
covers IEEE round-to-nearest.  Sines are only ever taken of ``pi * k / d``
with the integer ``k`` reduced exactly modulo ``2d`` (so frequencies of
size 2**60 and beyond cost nothing), folded into ``[-1/2, 1/2]``, and
widened by a relative slack of ``2**-48``.  That slack is the one assumption
of this tier: libm ``sin`` is accurate to a few ulp on ``[-pi/2, pi/2]``.
The scalar mpmath tier in :mod:`lpbaire.exact_numeric` cross-checks it in
the test suite.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

SIN_REL_SLACK = 2.0**-48
_TINY = 1e-300
_INT64_SAFE = 1 << 62
MAX_DEN = 1 << 60
_SPLIT_LIMIT = 1 << 41


def _down(x):
    return np.nextafter(x, -np.inf)


def _up(x):
    return np.nextafter(x, np.inf)


class IntervalArray:
    """Arrays of closed intervals ``[lo[k], hi[k]]``."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = np.asarray(lo, dtype=np.float64)
        hi = lo if hi is None else np.asarray(hi, dtype=np.float64)
        self.lo, self.hi = np.broadcast_arrays(lo, hi)

    @classmethod
    def exact(cls, values) -> IntervalArray:
        """Point intervals from exactly-representable floats."""
        v = np.asarray(values, dtype=np.float64)
        return cls(v, v)

    @classmethod
    def from_fraction(cls, q: Fraction, shape=()) -> IntervalArray:
        f = float(q)
        lo = f if Fraction(f) <= q else float(np.nextafter(f, -np.inf))
        hi = f if Fraction(f) >= q else float(np.nextafter(f, np.inf))
        return cls(np.full(shape, lo), np.full(shape, hi))

    @classmethod
    def from_fractions(cls, qs) -> IntervalArray:
        """Elementwise tight enclosures of a sequence of Fractions."""
        qs = list(qs)
        f = np.array([float(q) for q in qs], dtype=np.float64)
        exact = np.array([Fraction(x) == q for x, q in zip(f, qs)], dtype=bool)
        return cls(np.where(exact, f, _down(f)), np.where(exact, f, _up(f)))

    @classmethod
    def zeros(cls, shape) -> IntervalArray:
        z = np.zeros(shape)
        return cls(z, z.copy())

    @property
    def shape(self):
        return self.lo.shape

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    def __getitem__(self, idx) -> IntervalArray:
        return IntervalArray(self.lo[idx], self.hi[idx])

    def _coerce(self, other) -> IntervalArray:
        if isinstance(other, IntervalArray):
            return other
        if isinstance(other, Fraction):
            return IntervalArray.from_fraction(other)
        if isinstance(other, int) and abs(other) < 2**53:
            return IntervalArray.exact(float(other))
        raise TypeError("mix IntervalArray only with IntervalArray, Fraction or small int")

    def __add__(self, other) -> IntervalArray:
        o = self._coerce(other)
        return IntervalArray(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self) -> IntervalArray:
        return IntervalArray(-self.hi, -self.lo)

    def __sub__(self, other) -> IntervalArray:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> IntervalArray:
        return self._coerce(other) - self

    def __mul__(self, other) -> IntervalArray:
        o = self._coerce(other)
        p = np.stack([self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi])
        return IntervalArray(_down(p.min(axis=0)), _up(p.max(axis=0)))

    __rmul__ = __mul__

    def reciprocal(self) -> IntervalArray:
        if np.any((self.lo <= 0) & (self.hi >= 0)):
            raise ZeroDivisionError("interval divisor contains zero")
        return IntervalArray(_down(1.0 / self.hi), _up(1.0 / self.lo))

    def __truediv__(self, other) -> IntervalArray:
        return self * self._coerce(other).reciprocal()

    def abs(self) -> IntervalArray:
        lo = np.where(self.lo >= 0, self.lo, np.where(self.hi <= 0, -self.hi, 0.0))
        hi = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return IntervalArray(lo, hi)

    def square(self) -> IntervalArray:
        a = self.abs()
        return IntervalArray(_down(a.lo * a.lo), _up(a.hi * a.hi))

    def where(self, mask, other: IntervalArray) -> IntervalArray:
        return IntervalArray(np.where(mask, self.lo, other.lo), np.where(mask, self.hi, other.hi))

    def sum(self, axis=None) -> IntervalArray:
        # np.sum error is bounded by n * eps * sum|x|; widen by that.
        lo, hi = self.lo.sum(axis=axis), self.hi.sum(axis=axis)
        n = self.lo.size if axis is None else self.lo.shape[axis]
        slack = (n + 1) * np.finfo(float).eps * np.maximum(
            np.abs(self.lo).sum(axis=axis), np.abs(self.hi).sum(axis=axis)
        )
        return IntervalArray(_down(lo - slack), _up(hi + slack))

    def cumsum(self, axis=0) -> IntervalArray:
        """Running sums; each prefix widened by its own float-summation bound."""
        lo, hi = np.cumsum(self.lo, axis=axis), np.cumsum(self.hi, axis=axis)
        mag = np.cumsum(np.maximum(np.abs(self.lo), np.abs(self.hi)), axis=axis)
        n = self.lo.shape[axis]
        slack = (n + 1) * np.finfo(float).eps * mag
        return IntervalArray(_down(lo - slack), _up(hi + slack))

    def lower_abs(self):
        """Certified lower bound of ``|x|``."""
        return np.maximum(np.maximum(self.lo, -self.hi), 0.0)

    def __repr__(self) -> str:
        return f"IntervalArray(shape={self.shape}, max_width={float(np.max(self.width)) if self.lo.size else 0:.3g})"


def mulmod(mult: int, base, modulus: int):
    """``(mult * base) mod modulus`` elementwise, exact for any Python-int ``mult``.

    ``base`` is an int64 array (or int); the product is formed after reducing
    ``mult``, so it fits in int64 whenever ``modulus**2 < 2**62``.
    """
    m = mult % modulus
    base = np.mod(np.asarray(base, dtype=np.int64), modulus)
    if modulus * modulus < _INT64_SAFE:
        return np.mod(base * m, modulus)
    obj = base.astype(object) * m
    return np.mod(obj, modulus).astype(np.int64) if modulus < _INT64_SAFE else np.mod(obj, modulus)


def phase(mult, base, den: int):
    """Numerators of ``mult * base / den`` reduced modulo ``2 * den``.

    ``mult`` and ``base`` broadcast; either may hold Python ints of any size.
    """
    modulus = 2 * den
    mult = np.asarray(mult, dtype=object) if _is_big(mult) else np.asarray(mult, dtype=np.int64)
    base = np.asarray(base, dtype=object) if _is_big(base) else np.asarray(base, dtype=np.int64)
    mult = np.asarray(np.mod(mult, modulus))
    base = np.asarray(np.mod(base, modulus))
    if modulus * modulus < _INT64_SAFE:
        return np.mod(mult.astype(np.int64) * base.astype(np.int64), modulus)
    if modulus < _SPLIT_LIMIT:
        return _mulmod_split(mult.astype(np.int64), base.astype(np.int64), modulus)
    out = np.mod(mult.astype(object) * base.astype(object), modulus)
    return out.astype(np.int64) if modulus < _INT64_SAFE else out


def _mulmod_split(a, b, modulus: int):
    # a, b < modulus < 2**41: split b into 20-bit halves so no product passes 2**61
    lo = b & 0xFFFFF
    hi = b >> 20
    r = np.mod(a * hi, modulus)
    r = np.mod(r << 20, modulus)
    return np.mod(r + np.mod(a * lo, modulus), modulus)


def _is_big(x) -> bool:
    if isinstance(x, int):
        return abs(x) >= _INT64_SAFE
    arr = np.asarray(x)
    if arr.dtype == object:
        return True
    return False


def sinpi(num, den: int) -> IntervalArray:
    """Enclosures of ``sin(pi * num / den)`` for integer arrays ``num``."""
    if den >= MAX_DEN:
        raise ValueError(f"denominator {den} too large for the float tier")
    num = np.asarray(num)
    two_den = 2 * den
    if num.dtype == object:
        k = np.mod(num, two_den).astype(np.int64)
    else:
        k = np.mod(num.astype(np.int64), two_den)
    # k in [0, 2d); map to j in [-d/2, d/2] with sin(pi k/d) = sin(pi j/d)
    j = np.where(k > den, k - two_den, k)           # (-d, d]
    j = np.where(2 * j > den, den - j, j)            # fold (d/2, d] -> [0, d/2)
    j = np.where(2 * j < -den, -den - j, j)          # fold [-d, -d/2) -> (-d/2, 0]
    s = np.sin(np.pi * (j.astype(np.float64) / den))
    err = np.abs(s) * SIN_REL_SLACK + _TINY
    exact_zero = j == 0
    exact_one = 2 * np.abs(j) == den
    lo = np.where(exact_zero, 0.0, s - err)
    hi = np.where(exact_zero, 0.0, s + err)
    lo = np.where(exact_one, np.sign(j).astype(float), lo)
    hi = np.where(exact_one, np.sign(j).astype(float), hi)
    # sin never leaves [-1, 1] and keeps the sign of j
    lo = np.clip(lo, -1.0, 1.0)
    hi = np.clip(hi, -1.0, 1.0)
    pos = j > 0
    neg = j < 0
    lo = np.where(pos, np.maximum(lo, 0.0), lo)
    hi = np.where(neg, np.minimum(hi, 0.0), hi)
    return IntervalArray(lo, hi)


def cospi(num, den: int) -> IntervalArray:
    """``cos(pi * num / den) = sin(pi * (den - 2 num) / (2 den))``."""
    num = np.asarray(num)
    if num.dtype != object:
        num = np.mod(num.astype(np.int64), 2 * den)
    return sinpi(den - 2 * num, 2 * den)


def pi_array(shape=()) -> IntervalArray:
    lo = 3.141592653589793  # float(pi) < pi
    return IntervalArray(np.full(shape, lo), np.full(shape, float(np.nextafter(lo, np.inf))))


# -- midpoint-radius products --------------------------------------------------
#
# For long trigonometric sums the matrices are built as plain floats (sines of
# exactly reduced arguments, relative error <= SIN_REL_SLACK) and multiplied
# with BLAS.  Whatever the summation order, a length-K dot product is off by
# at most gamma_K * |M| |x| with gamma_K = K u / (1 - K u).

def sinpi_mid(num, den: int) -> np.ndarray:
    """Float ``sin(pi * num / den)``: exact at 0 and +-1, else relative error <= SIN_REL_SLACK."""
    if den >= MAX_DEN:
        raise ValueError(f"denominator {den} too large for the float tier")
    num = np.asarray(num)
    k = np.mod(num, 2 * den).astype(np.int64) if num.dtype == object else np.mod(num.astype(np.int64), 2 * den)
    j = np.where(k > den, k - 2 * den, k)
    j = np.where(2 * j > den, den - j, j)
    j = np.where(2 * j < -den, -den - j, j)
    s = np.sin(np.pi * (j.astype(np.float64) / den))
    s = np.where(j == 0, 0.0, s)
    return np.where(2 * np.abs(j) == den, np.sign(j).astype(np.float64), s)


def cospi_mid(num, den: int) -> np.ndarray:
    num = np.asarray(num)
    if num.dtype != object:
        num = np.mod(num.astype(np.int64), 2 * den)
    return sinpi_mid(den - 2 * num, 2 * den)


def _gamma(k: int) -> float:
    u = 2.0**-53
    return k * u / (1 - k * u)


def matvec(M: np.ndarray, x: IntervalArray, rel: float = SIN_REL_SLACK) -> IntervalArray:
    """Enclosure of ``M_true @ x`` where ``|M_true - M| <= rel * |M|`` entrywise."""
    K = M.shape[-1]
    xm = 0.5 * (x.lo + x.hi)
    xr = _up(np.maximum(x.hi - xm, xm - x.lo))
    g = _gamma(K + 2)
    ym = M @ xm
    w = xr + (rel + g) * (np.abs(xm) + xr)
    r = (np.abs(M) @ w) * (1 + 4 * g) + K * _TINY
    return IntervalArray(_down(ym - r), _up(ym + r))
