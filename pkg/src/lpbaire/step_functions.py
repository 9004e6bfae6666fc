"""Rational step functions on [0, 2*pi] and their exact L^p geometry.

Breakpoints are stored as *coefficients of pi*: the coordinate ``x`` is
``c * pi`` with ``c`` a Fraction in ``[0, 2]``.  Every interval length is
then a rational multiple of pi, so ``||f - g||_p ** p`` is exactly
``(rational) * pi`` and all comparisons between step functions reduce to
rational arithmetic plus, at worst, a certified enclosure of pi.
"""
from __future__ import annotations

import bisect
import heapq
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .exact_numeric import (
    Cmp,
    DEFAULT_PRECISION_CAP,
    PiMultiple,
    compare_refined,
    pi_enclosure,
    rat,
    rat_to_str,
)

ZERO = Fraction(0)
TWO = Fraction(2)


def scaled_coord(c) -> Fraction:
    """Validate a pi-coefficient coordinate (``0 <= c <= 2``)."""
    c = rat(c)
    if not ZERO <= c <= TWO:
        raise ValueError(f"coordinate coefficient {c} outside [0, 2]")
    return c


@dataclass(frozen=True)
class RationalStepFunction:
    """``values[i]`` on ``[breakpoints[i]*pi, breakpoints[i+1]*pi)``.

    The last interval is closed at ``2*pi``.
    """

    breakpoints: tuple[Fraction, ...]
    values: tuple[Fraction, ...]

    def __post_init__(self):
        bps = tuple(rat(b) for b in self.breakpoints)
        vals = tuple(rat(v) for v in self.values)
        if len(bps) < 2 or bps[0] != 0 or bps[-1] != 2:
            raise ValueError("breakpoints must start at 0 and end at 2 (units of pi)")
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly ascending")
        if len(vals) != len(bps) - 1:
            raise ValueError("need exactly one value per interval")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, c) -> RationalStepFunction:
        return cls((ZERO, TWO), (rat(c),))

    @classmethod
    def from_pieces(cls, breakpoints: Iterable, values: Iterable) -> RationalStepFunction:
        """Build from possibly degenerate data: zero-length pieces are dropped."""
        bps = [rat(b) for b in breakpoints]
        vals = [rat(v) for v in values]
        keep_b, keep_v = [bps[0]], []
        for b, v in zip(bps[1:], vals):
            if b > keep_b[-1]:
                keep_b.append(b)
                keep_v.append(v)
        return cls(tuple(keep_b), tuple(keep_v))

    @classmethod
    def uniform(cls, values: Sequence) -> RationalStepFunction:
        """Equal-width pieces over [0, 2*pi]."""
        n = len(values)
        return cls(tuple(Fraction(2 * i, n) for i in range(n + 1)), tuple(values))

    @classmethod
    def from_integers(cls, B: int, bps, D: int, vals) -> RationalStepFunction:
        """``bps / B`` and ``vals / D`` from integer arrays, already validated.

        Used by the vectorized merge; skips the per-element checks and keeps
        the integer form cached for later distance computations.
        """
        f = object.__new__(cls)
        b_list = [int(b) for b in bps]
        v_list = [int(v) for v in vals]
        object.__setattr__(f, "breakpoints", tuple(Fraction(b, B) for b in b_list))
        object.__setattr__(f, "values", tuple(Fraction(v, D) for v in v_list))
        if b_list[0] != 0 or b_list[-1] != 2 * B or len(v_list) != len(b_list) - 1:
            raise ValueError("malformed integer step data")
        dtype = np.int64 if 2 * B < _INT64_LIMIT else object
        object.__setattr__(f, "_int_form", (B, np.array(b_list, dtype=dtype), D, np.array(v_list, dtype=object)))
        return f

    # -- basic queries ------------------------------------------------------

    @property
    def pieces(self) -> int:
        return len(self.values)

    def lengths(self) -> list[Fraction]:
        """Interval lengths in units of pi."""
        b = self.breakpoints
        return [b[i + 1] - b[i] for i in range(len(self.values))]

    def __call__(self, x) -> Fraction:
        """Value at the coordinate ``x = c*pi`` (``c`` given)."""
        c = scaled_coord(x.coefficient if isinstance(x, PiMultiple) else x)
        if c == TWO:
            return self.values[-1]
        return self.values[bisect.bisect_right(self.breakpoints, c) - 1]

    def max_abs(self) -> Fraction:
        return max(abs(v) for v in self.values)

    def integral_pi(self) -> Fraction:
        """``integral f`` as a coefficient of pi."""
        return sum((v * l for v, l in zip(self.values, self.lengths())), ZERO)

    def simplified(self) -> RationalStepFunction:
        """Merge adjacent pieces with equal values."""
        bps = [self.breakpoints[0]]
        vals: list[Fraction] = []
        for b, v in zip(self.breakpoints[1:], self.values):
            if vals and vals[-1] == v:
                bps[-1] = b
            else:
                vals.append(v)
                bps.append(b)
        return RationalStepFunction(tuple(bps), tuple(vals))

    def refine_to(self, grid: Sequence[Fraction]) -> RationalStepFunction:
        """Re-express on a finer grid that contains all own breakpoints."""
        out = []
        src = self.breakpoints
        k = 0
        for left in grid[:-1]:
            while src[k + 1] <= left:
                k += 1
            out.append(self.values[k])
        return RationalStepFunction(tuple(grid), tuple(out))

    # -- algebra ------------------------------------------------------------

    def scale_shift(self, add=0, scale=1) -> RationalStepFunction:
        add, scale = rat(add), rat(scale)
        return RationalStepFunction(self.breakpoints, tuple(scale * v + add for v in self.values)).simplified()

    def __add__(self, other: RationalStepFunction) -> RationalStepFunction:
        if not isinstance(other, RationalStepFunction):
            return self.scale_shift(add=other)
        return pointwise_add(self, other)

    def __sub__(self, other: RationalStepFunction) -> RationalStepFunction:
        return pointwise_sub(self, other)

    def __neg__(self) -> RationalStepFunction:
        return self.scale_shift(scale=-1)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "breakpoints_pi": [rat_to_str(b) for b in self.breakpoints],
            "values": [rat_to_str(v) for v in self.values],
        }

    @classmethod
    def from_json(cls, obj) -> RationalStepFunction:
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(tuple(Fraction(b) for b in obj["breakpoints_pi"]), tuple(Fraction(v) for v in obj["values"]))


def merged_grid(*fs: RationalStepFunction) -> list[Fraction]:
    grid: list[Fraction] = []
    for b in heapq.merge(*(f.breakpoints for f in fs)):
        if not grid or b != grid[-1]:
            grid.append(b)
    return grid


# -- integer form ------------------------------------------------------------
# A function with breakpoint denominators dividing B and value denominators
# dividing D is stored as integer arrays; merging two grids is then a sorted
# union plus searchsorted, and all sums stay exact in Python integers.

_INT64_LIMIT = 1 << 62


def _int_form(f: RationalStepFunction):
    enc = f.__dict__.get("_int_form")
    if enc is None:
        B = math.lcm(*(b.denominator for b in f.breakpoints))
        D = math.lcm(*(v.denominator for v in f.values))
        dtype = np.int64 if 2 * B < _INT64_LIMIT else object
        bps = np.array([b.numerator * (B // b.denominator) for b in f.breakpoints], dtype=dtype)
        vals = np.array([v.numerator * (D // v.denominator) for v in f.values], dtype=object)
        enc = (B, bps, D, vals)
        object.__setattr__(f, "_int_form", enc)
    return enc


def _merge(f: RationalStepFunction, g: RationalStepFunction):
    """Common grid ``xs / B`` and, per cell, each function's values over ``D``."""
    Bf, bf, Df, vf = _int_form(f)
    Bg, bg, Dg, vg = _int_form(g)
    B, D = math.lcm(Bf, Bg), math.lcm(Df, Dg)
    dtype = np.int64 if 2 * B < _INT64_LIMIT else object
    bf = bf.astype(dtype) * (B // Bf)
    bg = bg.astype(dtype) * (B // Bg)
    xs = np.union1d(bf, bg)
    left = xs[:-1]
    i = np.searchsorted(bf, left, side="right") - 1
    j = np.searchsorted(bg, left, side="right") - 1
    return B, xs, D, vf[i] * (D // Df), vg[j] * (D // Dg)


def _build_simplified(B: int, xs, D: int, vals) -> RationalStepFunction:
    vals = np.asarray(vals, dtype=object)
    keep = np.ones(len(vals), dtype=bool)
    keep[1:] = vals[1:] != vals[:-1]
    starts = np.flatnonzero(keep)
    bps = np.concatenate([np.asarray(xs)[starts], np.asarray(xs)[-1:]])
    v = vals[starts]
    # reduce the common denominators before building Fractions
    gb = math.gcd(B, *(int(b) for b in bps))
    gv = math.gcd(D, *(int(x) for x in v))
    if gb > 1:
        bps = [int(b) // gb for b in bps]
    if gv > 1:
        v = [int(x) // gv for x in v]
    return RationalStepFunction.from_integers(B // gb, bps, D // gv, v)


def common_refinement(f: RationalStepFunction, g: RationalStepFunction):
    """Both functions re-expressed on the union of their breakpoints."""
    if f.breakpoints == g.breakpoints:
        return f, g
    B, xs, D, a, b = _merge(f, g)
    return RationalStepFunction.from_integers(B, xs, D, a), RationalStepFunction.from_integers(B, xs, D, b)


def pointwise_add(f: RationalStepFunction, g: RationalStepFunction) -> RationalStepFunction:
    B, xs, D, a, b = _merge(f, g)
    return _build_simplified(B, xs, D, a + b)


def pointwise_sub(f: RationalStepFunction, g: RationalStepFunction) -> RationalStepFunction:
    B, xs, D, a, b = _merge(f, g)
    return _build_simplified(B, xs, D, a - b)


def scale_shift(f: RationalStepFunction, add) -> RationalStepFunction:
    return f.scale_shift(add=add)


def _diff_pow_sum(f: RationalStepFunction, g: RationalStepFunction, p: int) -> Fraction:
    if f is g:
        return ZERO
    B, xs, D, a, b = _merge(f, g)
    d = a - b
    lengths = np.diff(xs).astype(object)
    total = int(np.sum(np.abs(d) ** p * lengths)) if len(d) else 0
    return Fraction(total, D**p * B)


def lp_distance_pow(f: RationalStepFunction, g: RationalStepFunction, p: int = 1) -> Fraction:
    """``||f - g||_p ** p`` as the exact coefficient of pi."""
    if not isinstance(p, int) or p < 1:
        raise ValueError("p must be a positive integer")
    return _diff_pow_sum(f, g, p)


def lp_norm_pow(f: RationalStepFunction, p: int = 1) -> Fraction:
    return _diff_pow_sum(f, RationalStepFunction.constant(0), p)


@dataclass(frozen=True)
class PiPower:
    """The real number ``coefficient * pi ** exponent``."""

    coefficient: Fraction
    exponent: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coefficient", rat(self.coefficient))
        object.__setattr__(self, "exponent", rat(self.exponent))


def compare_pi_multiple(c: Fraction, t, p: int = 1, *, cap_bits: int = DEFAULT_PRECISION_CAP) -> Cmp:
    """Exact trichotomy of ``(c*pi)**(1/p)`` against a threshold ``t >= 0``.

    ``t`` is a rational, a :class:`PiMultiple` or a :class:`PiPower`.
    Compares p-th powers; pi enters only when the powers of pi differ.
    """
    c = rat(c)
    if c < 0:
        raise ValueError("distance power must be non-negative")
    if isinstance(t, PiMultiple):
        t = PiPower(t.coefficient, Fraction(1))
    if not isinstance(t, PiPower):
        t = PiPower(rat(t), Fraction(0))
    if t.coefficient < 0:
        raise ValueError("threshold must be non-negative")
    # lhs = c * pi ;  rhs = coef**p * pi ** (exponent * p)
    rhs_coef = t.coefficient**p
    e = t.exponent * p
    if e.denominator != 1:
        raise ValueError("threshold ** p must be an integer power of pi")
    e = int(e)
    if c == 0 or rhs_coef == 0:
        if c == 0 and rhs_coef == 0:
            return Cmp.EQUAL
        return Cmp.LESS if c == 0 else Cmp.GREATER
    # compare c against rhs_coef * pi ** (e - 1)
    k = e - 1
    if k == 0:
        return Cmp.LESS if c < rhs_coef else Cmp.GREATER if c > rhs_coef else Cmp.EQUAL
    ratio = c / rhs_coef  # compare against pi ** k, which is irrational for k != 0
    return _flip(compare_refined(lambda bits: _pi_pow(bits, k), ratio, cap_bits=cap_bits))


def _pi_pow(bits: int, k: int):
    pi = pi_enclosure(bits)
    return pi**k if k > 0 else 1 / (pi ** (-k))


def _flip(cmp: Cmp) -> Cmp:
    # compare_refined tells us pi**k vs ratio; we want ratio vs pi**k
    return {Cmp.LESS: Cmp.GREATER, Cmp.GREATER: Cmp.LESS}.get(cmp, cmp)


def norm_compare(f: RationalStepFunction, g: RationalStepFunction, p: int, threshold) -> Cmp:
    """Exact trichotomy of ``||f - g||_p`` against ``threshold``."""
    return compare_pi_multiple(lp_distance_pow(f, g, p), threshold, p)
