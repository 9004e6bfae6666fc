import random
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpbaire.exact_numeric import IntervalReal, PiMultiple
from lpbaire.fourier import (
    DilatedSum,
    FourierCoeffs,
    coefficient_perturbation_ok,
    dirichlet,
    fejer,
    kernel_coeff_sum,
    kernel_eval,
    kernel_grid,
    partial_sum,
    partial_sum_perturbation_bound,
    partial_sums_grid,
    step_coeffs_grid,
    step_fourier_coeffs,
    uniform_grid,
)
from lpbaire.step_functions import RationalStepFunction
from oracles import mp_dirichlet, mp_fejer, mp_step_partial_sum, random_step, riemann_coeff_enclosure

mpmath.mp.prec = 160
SQUARE = RationalStepFunction.from_pieces((0, 1, 2), (1, 0))


def _q(x) -> F:
    return F(mpmath.nstr(x, 50, strip_zeros=False))


def test_square_wave_coefficients():
    c = step_fourier_coeffs(SQUARE, 12, F(1, 10**12))
    assert c.a0.contains(1)
    pi = mpmath.pi
    for n in range(1, 13):
        assert c.a[n - 1].contains(0)
        expected = 2 / (n * pi) if n % 2 else mpmath.mpf(0)
        assert c.b[n - 1].lo <= _q(expected) <= c.b[n - 1].hi


def test_constant_and_zero():
    c = step_fourier_coeffs(RationalStepFunction.constant(F(3, 4)), 5)
    assert c.a0.contains(F(3, 2))
    assert all(iv.lo == iv.hi == 0 for iv in c.a + c.b)
    z = step_fourier_coeffs(RationalStepFunction.constant(0), 3)
    assert all(iv.lo == iv.hi == 0 for iv in (z.a0,) + z.a + z.b)
    for l in (0, 3, 17):
        assert partial_sum(RationalStepFunction.constant(F(3, 4)), l, F(2, 7)).contains(F(3, 4))
    assert partial_sum(SQUARE, 0, F(1, 3)).contains(F(1, 2))


def test_square_wave_partial_sum_vs_oracle():
    s = partial_sum(SQUARE, 9, F(1, 2), F(1, 10**8))
    ref = mp_step_partial_sum(SQUARE, 9, mpmath.pi / 2)
    assert s.width <= F(1, 10**8) and s.lo <= _q(ref) <= s.hi


def test_coefficients_vs_riemann_enclosure():
    rng = random.Random(21)
    for _ in range(3):
        f = random_step(rng)
        c = step_fourier_coeffs(f, 16)
        for n in (1, 5, 16):
            lo, hi = riemann_coeff_enclosure(f, n, "cos")
            assert lo <= c.a[n - 1].hi and c.a[n - 1].lo <= hi
            lo, hi = riemann_coeff_enclosure(f, n, "sin")
            assert lo <= c.b[n - 1].hi and c.b[n - 1].lo <= hi


def test_kernel_peaks():
    for l in (0, 3, 64):
        assert kernel_eval(dirichlet(l), 0).contains(F(2 * l + 1, 2))
        assert kernel_eval(fejer(l), F(2)).contains(F(l + 1, 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 64), st.fractions(0, 2, max_denominator=5000))
def test_kernels_vs_mpmath_sums(l, c):
    x = mpmath.pi * mpmath.mpf(c.numerator) / c.denominator
    d, k = kernel_eval(dirichlet(l), c), kernel_eval(fejer(l), c)
    assert d.lo - F(1, 10**30) <= _q(mp_dirichlet(l, x)) <= d.hi + F(1, 10**30)
    assert k.lo - F(1, 10**30) <= _q(mp_fejer(l, x)) <= k.hi + F(1, 10**30)


def test_kernel_guard_band_and_real_points():
    c = F(1, 2**30)
    assert kernel_eval(dirichlet(100), c).intersects(kernel_coeff_sum(dirichlet(100), c, 128))
    iv = kernel_eval(fejer(10), IntervalReal(F(1), F(1)))
    ref = mp_fejer(10, mpmath.mpf(1))
    assert iv.lo <= _q(ref) <= iv.hi
    assert kernel_eval(fejer(5), PiMultiple(F(4))).contains(3)


def test_fejer_mean_is_half():
    # trapezoid with M > l nodes integrates a degree-l trig polynomial exactly
    for l in (1, 8, 64):
        M = l + 3
        vals = [kernel_eval(fejer(l), F(2 * j, M)) for j in range(M)]
        mean = sum((v.mid for v in vals), F(0)) / M
        assert abs(mean - F(1, 2)) < F(1, 10**8)


def test_grid_tier_matches_scalar_tier():
    f = random_step(random.Random(5))
    num, den = uniform_grid(64)
    sums = partial_sums_grid(step_coeffs_grid(f, 40), [0, 7, 40], num, den)
    for k in (0, 9, 31, 50):
        x = F(int(num[k]), den)
        for l in (0, 7, 40):
            exact = partial_sum(f, l, x, F(1, 10**12))
            assert F(float(sums[l].lo[k])) <= exact.hi and exact.lo <= F(float(sums[l].hi[k]))
    kg = kernel_grid(fejer(33), num, den)
    for k in (0, 5, 63):
        ref = kernel_eval(fejer(33), F(int(num[k]), den))
        assert F(float(kg.lo[k])) <= ref.hi and ref.lo <= F(float(kg.hi[k]))


def test_folding_beyond_period():
    f = random_step(random.Random(6), den_choices=(3, 5))
    num, den = uniform_grid(16)       # period 2 den = 32
    c = step_coeffs_grid(f, 100)
    folded = partial_sums_grid(c, [100], num, den)[100]
    direct = partial_sums_grid(c, list(range(1, 101)), num, den)[100]
    assert np.all(folded.lo <= direct.hi) and np.all(direct.lo <= folded.hi)


def test_dilated_sum_matches_direct():
    s = random_step(random.Random(7))
    q = 3
    dil = RationalStepFunction.from_pieces([b / q + F(2 * r, q) for r in range(q) for b in s.breakpoints[:-1]] + [2],
                                           list(s.values) * q)
    num, den = uniform_grid(32)
    via = DilatedSum(((s, q),)).partial_sums([12, 13], num, den)
    direct = partial_sums_grid(step_coeffs_grid(dil, 13), [12, 13], num, den)
    for o in (12, 13):
        assert np.all(via[o].lo <= direct[o].hi + 1e-9) and np.all(direct[o].lo <= via[o].hi + 1e-9)


def test_coeff_json_round_trip():
    c = step_fourier_coeffs(SQUARE, 3)
    assert FourierCoeffs.from_json(c.to_json()) == c


def test_perturbation_bound():
    p = random_step(random.Random(30))
    rep = partial_sum_perturbation_bound(p, p, 16)
    assert rep.holds and rep.bound.hi == 0
    q = random_step(random.Random(31))
    rep = partial_sum_perturbation_bound(p, q, 16, grid=512, n_random=16)
    assert rep.holds and rep.margin > 0
    assert coefficient_perturbation_ok(p, q, 32)


def test_errors():
    with pytest.raises(ValueError):
        step_fourier_coeffs(SQUARE, -1)
    with pytest.raises(ValueError):
        partial_sum(SQUARE, -1, 0)
    with pytest.raises(ValueError):
        partial_sums_grid(step_coeffs_grid(SQUARE, 4), [5], *uniform_grid(8))
