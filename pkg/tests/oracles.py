"""Independent reference computations.

None of these go through the library's closed forms: coefficients come from
brute-force cell enclosures, kernels and Kolmogorov partial sums from their
defining cosine sums in high-precision mpmath.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction

import mpmath
import numpy as np

from lpbaire.step_functions import RationalStepFunction

PAD = 1e-9  # absorbs float rounding in the cell sums


def random_step(rng: random.Random, max_pieces: int = 6, den_choices=(4, 7, 16, 33)) -> RationalStepFunction:
    k = rng.randrange(1, max_pieces + 1)
    cuts = sorted({Fraction(rng.randrange(1, 2 * d), d) for d in rng.choices(den_choices, k=k - 1)})
    values = [Fraction(rng.randrange(-30, 31), rng.randrange(1, 7)) for _ in range(len(cuts) + 1)]
    return RationalStepFunction((Fraction(0), *cuts, Fraction(2)), tuple(values))


def _cell_range_trig(n: int, lo: np.ndarray, hi: np.ndarray, kind: str):
    """Range of cos(n x) or sin(n x) over [lo, hi] (vectorized, padded)."""
    if kind == "cos":
        f, shift = np.cos, 0.0
    else:
        f, shift = np.sin, math.pi / 2   # sin t = cos(t - pi/2)
    u, v = n * lo, n * hi
    a, b = f(u), f(v)
    top = np.maximum(a, b)
    bot = np.minimum(a, b)
    # cos peaks at 2k pi + shift, bottoms at (2k+1) pi + shift
    peak = np.floor((v - shift) / (2 * math.pi)) * 2 * math.pi + shift >= u - 1e-12
    trough = np.floor((v - shift - math.pi) / (2 * math.pi)) * 2 * math.pi + shift + math.pi >= u - 1e-12
    top = np.where(peak, 1.0, top)
    bot = np.where(trough, -1.0, bot)
    return bot - PAD, top + PAD


def riemann_coeff_enclosure(f: RationalStepFunction, n: int, kind: str, cells: int = 100_000):
    """``(1/pi) int f(x) cos|sin(n x) dx`` enclosed by per-cell min/max products."""
    edges = np.linspace(0.0, 2 * math.pi, cells + 1)
    lo, hi = edges[:-1], edges[1:]
    bps = np.array([float(b) * math.pi for b in f.breakpoints])
    vals = np.array([float(v) for v in f.values])
    i_lo = np.clip(np.searchsorted(bps, lo, side="right") - 1, 0, len(vals) - 1)
    i_hi = np.clip(np.searchsorted(bps, hi, side="left") - 1, 0, len(vals) - 1)
    # cells are far narrower than any piece, so a cell meets at most two pieces
    assert np.all(i_hi - i_lo <= 1)
    f_lo = np.minimum(vals[i_lo], vals[i_hi])
    f_hi = np.maximum(vals[i_lo], vals[i_hi])
    if n == 0:
        t_lo = t_hi = np.ones(cells)
    else:
        t_lo, t_hi = _cell_range_trig(n, lo, hi, kind)
    prods = np.stack([f_lo * t_lo, f_lo * t_hi, f_hi * t_lo, f_hi * t_hi])
    h = hi - lo
    low = float(np.sum(prods.min(axis=0) * h)) / math.pi
    high = float(np.sum(prods.max(axis=0) * h)) / math.pi
    slack = 1e-9 * (1 + abs(low) + abs(high))
    return low - slack, high + slack


def mp_dirichlet(l: int, x) -> mpmath.mpf:
    return mpmath.mpf(1) / 2 + mpmath.fsum(mpmath.cos(k * x) for k in range(1, l + 1))


def mp_fejer(l: int, x) -> mpmath.mpf:
    return mpmath.fsum(mp_dirichlet(k, x) for k in range(l + 1)) / (l + 1)


def mp_fejer_fast(m: int, t) -> mpmath.mpf:
    """``K_m(t) = 1/2 + sum_{k<=m} (1 - k/(m+1)) cos k t`` (same defining sum, one pass)."""
    return mpmath.mpf(1) / 2 + mpmath.fsum((1 - mpmath.mpf(k) / (m + 1)) * mpmath.cos(k * t) for k in range(1, m + 1))


def mp_kolmogorov_partial_sum(freqs, nodes_pi, l: int, x) -> mpmath.mpf:
    """``S_l f_n(x)`` summed coefficient by coefficient from the Fejér definitions."""
    n = len(freqs)
    total = mpmath.mpf(0)
    for m, a in zip(freqs, nodes_pi):
        t = x - mpmath.pi * mpmath.mpf(a.numerator) / a.denominator
        top = min(l, m)
        total += mpmath.mpf(1) / 2 + mpmath.fsum((1 - mpmath.mpf(k) / (m + 1)) * mpmath.cos(k * t)
                                                for k in range(1, top + 1))
    return total / n


def mp_kolmogorov_value(freqs, nodes_pi, x) -> mpmath.mpf:
    return mp_kolmogorov_partial_sum(freqs, nodes_pi, max(freqs), x)


def mp_sinpi(r: Fraction) -> mpmath.mpf:
    return mpmath.sinpi(mpmath.mpf(r.numerator) / r.denominator)


def mp_step_partial_sum(f: RationalStepFunction, l: int, x) -> mpmath.mpf:
    """``S_l f(x)`` with coefficients from exact antiderivatives in mpmath."""
    pi = mpmath.pi
    pieces = [(pi * mpmath.mpf(a.numerator) / a.denominator, pi * mpmath.mpf(b.numerator) / b.denominator, v)
              for a, b, v in zip(f.breakpoints, f.breakpoints[1:], f.values)]
    a0 = mpmath.fsum(mpmath.mpf(v.numerator) / v.denominator * (b - a) for a, b, v in pieces) / pi
    total = a0 / 2
    for k in range(1, l + 1):
        ak = mpmath.fsum(mpmath.mpf(v.numerator) / v.denominator * (mpmath.sin(k * b) - mpmath.sin(k * a)) / k
                         for a, b, v in pieces) / pi
        bk = mpmath.fsum(mpmath.mpf(v.numerator) / v.denominator * (mpmath.cos(k * a) - mpmath.cos(k * b)) / k
                         for a, b, v in pieces) / pi
        total += ak * mpmath.cos(k * x) + bk * mpmath.sin(k * x)
    return total
