"""Exact rationals and certified interval enclosures.

Rationals are :class:`fractions.Fraction`.  Real quantities that are not
rational (pi, sines, logarithms) are carried as :class:`IntervalReal`, a
closed interval with rational endpoints that provably contains the true
value.  Transcendental enclosures come from mpmath's interval kernels
(``mpmath.libmp.libmpi``), which take the working precision as an explicit
argument, so nothing here touches mpmath's global context.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

from mpmath.libmp import libmpi
from mpmath.libmp.libmpf import from_rational, to_rational

DEFAULT_START_BITS = 64
DEFAULT_PRECISION_CAP = 4096


class PrecisionExhausted(ArithmeticError):
    """Raised when the adaptive precision loop hits its cap."""


class Cmp(enum.Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"
    UNKNOWN = "unknown"


Rational = Fraction
RealLike = Union[int, Fraction]


def rat(value) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to a Fraction.

    Floats are rejected on purpose: they would silently import rounding error.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def rat_arith(a: Fraction, b: Fraction, op: str) -> Fraction:
    a, b = rat(a), rat(b)
    if op == "+":
        return a + b
    if op in ("-", "−"):
        return a - b
    if op in ("*", "×"):
        return a * b
    if op in ("/", "÷"):
        if b == 0:
            raise ZeroDivisionError("rational division by zero")
        return a / b
    raise ValueError(f"unknown operator {op!r}")


def rat_to_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def rat_from_str(s: str) -> Fraction:
    return Fraction(s)


# -- conversion helpers between Fractions and raw mpmath mpf tuples ---------

def _mpf_to_fraction(x) -> Fraction:
    p, q = to_rational(x)
    return Fraction(p, q)


def _interval_from_fractions(lo: Fraction, hi: Fraction, prec: int):
    return (
        from_rational(lo.numerator, lo.denominator, prec, "f"),
        from_rational(hi.numerator, hi.denominator, prec, "c"),
    )


@dataclass(frozen=True)
class IntervalReal:
    """Closed interval ``[lo, hi]`` with rational endpoints."""

    lo: Fraction
    hi: Fraction
    precision_bits: int = DEFAULT_START_BITS

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: RealLike, bits: int = DEFAULT_START_BITS) -> IntervalReal:
        x = rat(x)
        return cls(x, x, bits)

    @classmethod
    def _from_mpi(cls, iv, bits: int) -> IntervalReal:
        return cls(_mpf_to_fraction(iv[0]), _mpf_to_fraction(iv[1]), bits)

    def _mpi(self, prec: int | None = None):
        return _interval_from_fractions(self.lo, self.hi, prec or self.precision_bits)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        if isinstance(x, IntervalReal):
            return self.lo <= x.lo and x.hi <= self.hi
        x = rat(x)
        return self.lo <= x <= self.hi

    def intersects(self, other: IntervalReal) -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def rounded(self, bits: int | None = None) -> IntervalReal:
        """Outward-round both endpoints to ``bits`` of binary precision."""
        bits = bits or self.precision_bits
        return IntervalReal._from_mpi(self._mpi(bits), bits)

    def _bits(self, other) -> int:
        if isinstance(other, IntervalReal):
            return max(self.precision_bits, other.precision_bits)
        return self.precision_bits

    @staticmethod
    def _lift(x, bits: int) -> IntervalReal:
        if isinstance(x, IntervalReal):
            return x
        return IntervalReal.point(x, bits)

    def __add__(self, other) -> IntervalReal:
        o = self._lift(other, self.precision_bits)
        return IntervalReal(self.lo + o.lo, self.hi + o.hi, self._bits(o))

    __radd__ = __add__

    def __neg__(self) -> IntervalReal:
        return IntervalReal(-self.hi, -self.lo, self.precision_bits)

    def __sub__(self, other) -> IntervalReal:
        return self + (-self._lift(other, self.precision_bits))

    def __rsub__(self, other) -> IntervalReal:
        return self._lift(other, self.precision_bits) - self

    def __mul__(self, other) -> IntervalReal:
        o = self._lift(other, self.precision_bits)
        products = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return IntervalReal(min(products), max(products), self._bits(o))

    __rmul__ = __mul__

    def __truediv__(self, other) -> IntervalReal:
        o = self._lift(other, self.precision_bits)
        if o.lo <= 0 <= o.hi:
            raise ZeroDivisionError("interval divisor contains zero")
        return self * IntervalReal(1 / o.hi, 1 / o.lo, o.precision_bits)

    def __rtruediv__(self, other) -> IntervalReal:
        return self._lift(other, self.precision_bits) / self

    def __abs__(self) -> IntervalReal:
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return IntervalReal(Fraction(0), max(-self.lo, self.hi), self.precision_bits)

    def square(self) -> IntervalReal:
        a = abs(self)
        return IntervalReal(a.lo * a.lo, a.hi * a.hi, self.precision_bits)

    def __pow__(self, k: int) -> IntervalReal:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        if k % 2 == 0:
            a = abs(self)
            return IntervalReal(a.lo**k, a.hi**k, self.precision_bits)
        return IntervalReal(self.lo**k, self.hi**k, self.precision_bits)

    def to_json(self) -> dict:
        return {"lo": rat_to_str(self.lo), "hi": rat_to_str(self.hi), "bits": self.precision_bits}

    @classmethod
    def from_json(cls, obj: dict) -> IntervalReal:
        return cls(Fraction(obj["lo"]), Fraction(obj["hi"]), int(obj["bits"]))

    def __float__(self) -> float:
        return float(self.mid)

    def __repr__(self) -> str:
        return f"IntervalReal([{float(self.lo)!r}, {float(self.hi)!r}], bits={self.precision_bits})"


@dataclass(frozen=True)
class PiMultiple:
    """The real number ``coefficient * pi`` kept symbolically."""

    coefficient: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coefficient", rat(self.coefficient))


def certified_compare(a: IntervalReal, b: RealLike) -> Cmp:
    """LESS / GREATER only when the interval bounds prove it."""
    b = rat(b)
    if a.hi < b:
        return Cmp.LESS
    if a.lo > b:
        return Cmp.GREATER
    if a.lo == a.hi == b:
        return Cmp.EQUAL
    return Cmp.UNKNOWN


def refine(
    compute: Callable[[int], IntervalReal],
    target_width: Fraction | None = None,
    *,
    start_bits: int = DEFAULT_START_BITS,
    cap_bits: int = DEFAULT_PRECISION_CAP,
    accept: Callable[[IntervalReal], bool] | None = None,
) -> IntervalReal:
    """Double the working precision until the enclosure is good enough.

    "Good enough" is ``width <= target_width`` or ``accept(result)``.
    """
    if target_width is None and accept is None:
        raise ValueError("need target_width or accept")
    bits = start_bits
    while True:
        iv = compute(bits)
        if target_width is not None and iv.width <= target_width:
            return iv
        if accept is not None and accept(iv):
            return iv
        if bits >= cap_bits:
            raise PrecisionExhausted(f"no acceptable enclosure at {bits} bits (width {float(iv.width):.3g})")
        bits = min(2 * bits, cap_bits)


def compare_refined(
    compute: Callable[[int], IntervalReal],
    b: RealLike,
    *,
    start_bits: int = DEFAULT_START_BITS,
    cap_bits: int = DEFAULT_PRECISION_CAP,
) -> Cmp:
    """Certified LESS/GREATER of a computed real against a rational.

    Refines until decided; an undecided comparison at the cap is an error.
    """
    iv = refine(
        compute,
        accept=lambda iv: certified_compare(iv, b) is not Cmp.UNKNOWN,
        start_bits=start_bits,
        cap_bits=cap_bits,
    )
    return certified_compare(iv, b)


# -- transcendental enclosures ---------------------------------------------

def pi_enclosure(bits: int = DEFAULT_START_BITS) -> IntervalReal:
    return IntervalReal._from_mpi(libmpi.mpi_pi(bits), bits)


def _reduce_mod2(r: Fraction) -> Fraction:
    """Representative of ``r`` modulo 2 in ``(-1, 1]``."""
    r = r - 2 * (r.numerator // (2 * r.denominator))  # now in [0, 2)
    return r - 2 if r > 1 else r


def sinpi_enclosure(r: RealLike, bits: int = DEFAULT_START_BITS) -> IntervalReal:
    """Enclosure of ``sin(pi * r)`` for exact rational ``r``.

    The argument is reduced modulo 2 exactly, so huge multiples of pi cost
    nothing extra.  Half-integers give exact results.
    """
    r = _reduce_mod2(rat(r))
    if r.denominator <= 2:
        exact = {Fraction(0): 0, Fraction(1, 2): 1, Fraction(1): 0, Fraction(-1, 2): -1}[r]
        return IntervalReal.point(exact, bits)
    # fold into [-1/2, 1/2] where sin is monotone and small args stay relative
    if r > Fraction(1, 2):
        r = 1 - r
    elif r < Fraction(-1, 2):
        r = -1 - r
    guard = bits + 10
    x = libmpi.mpi_mul(libmpi.mpi_pi(guard), _interval_from_fractions(r, r, guard), guard)
    return IntervalReal._from_mpi(libmpi.mpi_sin(x, guard), bits).rounded(bits)


def cospi_enclosure(r: RealLike, bits: int = DEFAULT_START_BITS) -> IntervalReal:
    return sinpi_enclosure(Fraction(1, 2) - rat(r), bits)


def sin_enclosure(x, precision: int = DEFAULT_START_BITS) -> IntervalReal:
    """Enclosure of ``sin(x)``.

    ``x`` may be a :class:`PiMultiple` (exact reduction), a rational, or an
    :class:`IntervalReal`.  For non-pi inputs mpmath reduces the argument with
    its own guard bits, which handles arguments of size ~1e9 and far beyond.
    """
    if precision < 16:
        raise ValueError("precision must be at least 16 bits")
    if isinstance(x, PiMultiple):
        return sinpi_enclosure(x.coefficient, precision)
    if not isinstance(x, IntervalReal):
        x = IntervalReal.point(x, precision)
    if x.lo == x.hi == 0:
        return IntervalReal.point(0, precision)
    # extra working bits cover cancellation in argument reduction
    guard = precision + x.hi.numerator.bit_length() - x.hi.denominator.bit_length() + 20
    guard = max(guard, precision + 20)
    iv = libmpi.mpi_sin(_interval_from_fractions(x.lo, x.hi, guard), guard)
    return IntervalReal._from_mpi(iv, precision).rounded(precision)


def cos_enclosure(x, precision: int = DEFAULT_START_BITS) -> IntervalReal:
    if isinstance(x, PiMultiple):
        return cospi_enclosure(x.coefficient, precision)
    if not isinstance(x, IntervalReal):
        x = IntervalReal.point(x, precision)
    guard = max(precision + x.hi.numerator.bit_length() - x.hi.denominator.bit_length() + 20, precision + 20)
    iv = libmpi.mpi_cos(_interval_from_fractions(x.lo, x.hi, guard), guard)
    return IntervalReal._from_mpi(iv, precision).rounded(precision)


def log_enclosure(x, precision: int = DEFAULT_START_BITS) -> IntervalReal:
    if not isinstance(x, IntervalReal):
        x = IntervalReal.point(x, precision)
    if x.lo <= 0:
        raise ValueError("log of a non-positive interval")
    return IntervalReal._from_mpi(libmpi.mpi_log(x._mpi(precision), precision), precision)


def sqrt_enclosure(x, precision: int = DEFAULT_START_BITS) -> IntervalReal:
    if not isinstance(x, IntervalReal):
        x = IntervalReal.point(x, precision)
    if x.lo < 0:
        raise ValueError("sqrt of a negative interval")
    return IntervalReal._from_mpi(libmpi.mpi_sqrt(x._mpi(precision), precision), precision)


def sqrt_log_enclosure(n: int, precision: int = DEFAULT_START_BITS) -> IntervalReal:
    """``log(n) ** (1/2)`` (natural log)."""
    return sqrt_enclosure(log_enclosure(n, precision), precision)


def rational_upper(iv: IntervalReal, max_den: int = 1 << 40) -> Fraction:
    """A rational >= iv.hi with bounded denominator."""
    q = Fraction(-((-iv.hi * max_den).__floor__()), max_den)
    return q


def rational_lower(iv: IntervalReal, max_den: int = 1 << 40) -> Fraction:
    return Fraction((iv.lo * max_den).__floor__(), max_den)
