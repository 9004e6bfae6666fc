"""Fourier coefficients, partial sums and the Dirichlet/Fejér kernels.

Normalization: ``a_n = (1/pi) int f(t) cos(nt) dt`` (likewise ``b_n`` with
sine) and ``S_l(f, x) = a_0/2 + sum_{n<=l} (a_n cos nx + b_n sin nx)``.

Two evaluation tiers share these definitions:

* scalar, in :class:`~lpbaire.exact_numeric.IntervalReal` with adaptive
  precision (``step_fourier_coeffs``, ``partial_sum``, ``kernel_eval``);
* vectorized float intervals on grids of rational multiples of pi
  (the ``*_grid`` functions), used for scans over thousands of points.

Points given as a ``Fraction`` or :class:`PiMultiple` mean ``c * pi``; an
:class:`IntervalReal` is a plain real.
"""
from __future__ import annotations

import enum
from math import lcm
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .exact_numeric import (
    DEFAULT_PRECISION_CAP,
    DEFAULT_START_BITS,
    IntervalReal,
    PiMultiple,
    cos_enclosure,
    cospi_enclosure,
    pi_enclosure,
    rat,
    refine,
    sin_enclosure,
    sinpi_enclosure,
)
from .fastiv import IntervalArray, cospi, cospi_mid, matvec, phase, pi_array, sinpi, sinpi_mid
from .step_functions import RationalStepFunction, lp_distance_pow, pointwise_sub

DEFAULT_TOL = Fraction(1, 10**8)
# below this |sin(t/2)| the kernels switch to their cosine-sum form
GUARD_BAND = Fraction(1, 2**20)
# ...but only while the cosine sum is cheap
COEFF_SUM_MAX_ORDER = 1 << 14

Point = Union[Fraction, int, PiMultiple, IntervalReal]


class KernelKind(enum.Enum):
    DIRICHLET = "dirichlet"
    FEJER = "fejer"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    order: int

    def __post_init__(self):
        if not isinstance(self.order, int) or self.order < 0:
            raise ValueError("kernel order must be a natural number")
        if not isinstance(self.kind, KernelKind):
            object.__setattr__(self, "kind", KernelKind(self.kind))

    def peak(self) -> Fraction:
        """Value at ``t = 0``."""
        if self.kind is KernelKind.DIRICHLET:
            return Fraction(2 * self.order + 1, 2)
        return Fraction(self.order + 1, 2)


def dirichlet(order: int) -> KernelSpec:
    return KernelSpec(KernelKind.DIRICHLET, order)


def fejer(order: int) -> KernelSpec:
    return KernelSpec(KernelKind.FEJER, order)


@dataclass(frozen=True)
class FourierCoeffs:
    a0: IntervalReal
    a: tuple[IntervalReal, ...]
    b: tuple[IntervalReal, ...]

    @property
    def L(self) -> int:
        return len(self.a)

    def max_width(self) -> Fraction:
        return max((iv.width for iv in (self.a0, *self.a, *self.b)), default=Fraction(0))

    def to_json(self) -> dict:
        return {
            "L": self.L,
            "a0": self.a0.to_json(),
            "a": [iv.to_json() for iv in self.a],
            "b": [iv.to_json() for iv in self.b],
        }

    @classmethod
    def from_json(cls, obj: dict) -> FourierCoeffs:
        return cls(
            IntervalReal.from_json(obj["a0"]),
            tuple(IntervalReal.from_json(o) for o in obj["a"]),
            tuple(IntervalReal.from_json(o) for o in obj["b"]),
        )


# -- scalar tier -------------------------------------------------------------

def _jumps(f: RationalStepFunction) -> list[tuple[Fraction, Fraction]]:
    """``(c_k, v_k - v_{k-1})`` at the interior breakpoints."""
    bps, vals = f.breakpoints, f.values
    return [(bps[k], vals[k] - vals[k - 1]) for k in range(1, len(vals)) if vals[k] != vals[k - 1]]


def _coeffs_at(f: RationalStepFunction, L: int, bits: int) -> FourierCoeffs:
    # Integrating piece by piece and regrouping by breakpoint:
    #   a_n = -(1/(n pi)) sum_k J_k sin(n c_k pi)
    #   b_n =  (1/(n pi)) (v_first - v_last + sum_k J_k cos(n c_k pi))
    # with J_k the jump at interior breakpoint c_k.
    jumps = _jumps(f)
    edge = f.values[0] - f.values[-1]
    pi = pi_enclosure(bits + 8)
    a0 = IntervalReal.point(f.integral_pi(), bits)
    a, b = [], []
    for n in range(1, L + 1):
        sa = IntervalReal.point(0, bits)
        sb = IntervalReal.point(edge, bits)
        for c, jump in jumps:
            sa = sa + sinpi_enclosure(n * c, bits + 8) * jump
            sb = sb + cospi_enclosure(n * c, bits + 8) * jump
        scale = pi * n
        a.append((-sa / scale).rounded(bits))
        b.append((sb / scale).rounded(bits))
    return FourierCoeffs(a0, tuple(a), tuple(b))


def step_fourier_coeffs(f: RationalStepFunction, L: int, tol=DEFAULT_TOL, *,
                        cap_bits: int = DEFAULT_PRECISION_CAP) -> FourierCoeffs:
    """Certified ``a_0, a_1..a_L, b_1..b_L`` of a step function, each no wider than ``tol``."""
    if L < 0:
        raise ValueError("L must be >= 0")
    tol = rat(tol)
    box: list[FourierCoeffs] = []

    def compute(bits: int) -> IntervalReal:
        c = _coeffs_at(f, L, bits)
        box[:] = [c]
        w = c.max_width()
        return IntervalReal(Fraction(0), w, bits)

    refine(compute, target_width=tol, cap_bits=cap_bits)
    return box[0]


def _point_trig(n: int, x: Point, bits: int) -> tuple[IntervalReal, IntervalReal]:
    if isinstance(x, IntervalReal):
        nx = x * n
        return cos_enclosure(nx, bits), sin_enclosure(nx, bits)
    c = x.coefficient if isinstance(x, PiMultiple) else rat(x)
    return cospi_enclosure(n * c, bits), sinpi_enclosure(n * c, bits)


def _sum_series(coeffs: FourierCoeffs, l: int, x: Point, bits: int) -> IntervalReal:
    total = coeffs.a0 / 2
    for n in range(1, l + 1):
        cn, sn = _point_trig(n, x, bits)
        total = (total + coeffs.a[n - 1] * cn + coeffs.b[n - 1] * sn).rounded(bits)
    return total


def partial_sum(f: RationalStepFunction | FourierCoeffs, l: int, x: Point, tol=DEFAULT_TOL, *,
                cap_bits: int = DEFAULT_PRECISION_CAP) -> IntervalReal:
    """Certified ``S_l(f, x)``.

    From a step function the enclosure is refined to width ``tol``; from
    precomputed coefficients it is as tight as those coefficients allow.
    """
    if l < 0:
        raise ValueError("order must be >= 0")
    if isinstance(f, FourierCoeffs):
        if l > f.L:
            raise ValueError(f"order {l} exceeds the {f.L} stored coefficients")
        bits = max(f.a0.precision_bits, DEFAULT_START_BITS)
        return _sum_series(f, l, x, bits)
    tol = rat(tol)

    def compute(bits: int) -> IntervalReal:
        return _sum_series(_coeffs_at(f, l, bits), l, x, bits)

    return refine(compute, target_width=tol, cap_bits=cap_bits)


def kernel_coeff_sum(k: KernelSpec, x: Point, bits: int = DEFAULT_START_BITS) -> IntervalReal:
    """``1/2 + sum_nu w_nu cos(nu t)``; valid everywhere, costs O(order)."""
    l = k.order
    total = IntervalReal.point(Fraction(1, 2), bits)
    for nu in range(1, l + 1):
        w = Fraction(1) if k.kind is KernelKind.DIRICHLET else Fraction(l + 1 - nu, l + 1)
        cn, _ = _point_trig(nu, x, bits)
        total = (total + cn * w).rounded(bits)
    return total


def _half_angle_sines(k: KernelSpec, x: Point, bits: int) -> tuple[IntervalReal, IntervalReal]:
    """``(sin(mult * t/2), sin(t/2))`` with ``mult = 2l+1`` or ``l+1``."""
    mult = 2 * k.order + 1 if k.kind is KernelKind.DIRICHLET else k.order + 1
    if isinstance(x, IntervalReal):
        half = x / 2
        return sin_enclosure(half * mult, bits), sin_enclosure(half, bits)
    c = x.coefficient if isinstance(x, PiMultiple) else rat(x)
    return sinpi_enclosure(c * mult / 2, bits), sinpi_enclosure(c / 2, bits)


def _closed_form(k: KernelSpec, num: IntervalReal, den: IntervalReal) -> IntervalReal:
    ratio = num / (den * 2)
    if k.kind is KernelKind.DIRICHLET:
        return ratio
    return ratio.square() * Fraction(2, k.order + 1)


def kernel_at_precision(k: KernelSpec, x: Point, bits: int) -> IntervalReal:
    if not isinstance(x, IntervalReal):
        c = x.coefficient if isinstance(x, PiMultiple) else rat(x)
        if c % 2 == 0:
            return IntervalReal.point(k.peak(), bits)
    num, den = _half_angle_sines(k, x, bits)
    near_zero = den.lo <= GUARD_BAND and den.hi >= -GUARD_BAND
    if near_zero and k.order <= COEFF_SUM_MAX_ORDER:
        return kernel_coeff_sum(k, x, bits)
    if den.lo <= 0 <= den.hi:
        # the real argument may sit on a zero of sin(t/2): fall back to the
        # global bounds |D_l| <= l + 1/2 and 0 <= K_l <= (l+1)/2
        p = k.peak()
        return IntervalReal(-p if k.kind is KernelKind.DIRICHLET else Fraction(0), p, bits)
    return _closed_form(k, num, den).rounded(bits)


def kernel_eval(k: KernelSpec, x: Point, tol=DEFAULT_TOL, *, cap_bits: int = DEFAULT_PRECISION_CAP) -> IntervalReal:
    """Certified ``D_l(t)`` or ``K_l(t)``.

    Exact at ``t ≡ 0 (mod 2 pi)``; inside the guard band around those zeros
    the cosine-sum form replaces the closed form.  ``tol`` is relative to
    ``max(1, |value|)`` because kernel values grow with the order.
    """
    tol = rat(tol)

    def good(iv: IntervalReal) -> bool:
        scale = max(Fraction(1), abs(iv.lo), abs(iv.hi))
        return iv.width <= tol * scale

    def compute(bits: int) -> IntervalReal:
        return kernel_at_precision(k, x, bits)

    if isinstance(x, IntervalReal):
        # a wide argument can never give a narrow value; report the best we get
        def good_or_stalled(iv: IntervalReal) -> bool:
            return good(iv) or iv.precision_bits >= 4 * DEFAULT_START_BITS
        return refine(compute, accept=good_or_stalled, cap_bits=cap_bits)
    return refine(compute, accept=good, cap_bits=cap_bits)


# -- vectorized tier on grids of pi * num / den ------------------------------

def _as_int_array(num):
    arr = np.asarray(num)
    if arr.dtype == object or arr.dtype.kind in "iu":
        return arr
    raise TypeError("grid numerators must be integers")


def kernel_grid(k: KernelSpec, num, den: int) -> IntervalArray:
    """Kernel enclosures at ``t = pi * num / den`` for an integer array ``num``."""
    num = _as_int_array(num)
    l = k.order
    mult = 2 * l + 1 if k.kind is KernelKind.DIRICHLET else l + 1
    s_den = sinpi(num, 2 * den)
    s_num = sinpi(phase(mult, num, 2 * den), 2 * den)
    zero = (s_den.lo == 0) & (s_den.hi == 0)
    near = s_den.lower_abs() < float(GUARD_BAND)
    safe_den = s_den.where(~zero, IntervalArray.exact(np.ones(s_den.shape)))
    ratio = s_num / (safe_den * 2)
    if k.kind is KernelKind.DIRICHLET:
        out = ratio
    else:
        out = ratio.square() * IntervalArray.from_fraction(Fraction(2, l + 1))
    peak = IntervalArray.from_fraction(k.peak(), s_den.shape)
    out = out.where(~zero, peak)
    fix = near & ~zero
    if fix.any() and l <= COEFF_SUM_MAX_ORDER:
        idx = np.nonzero(fix)
        sub = kernel_coeff_sum_grid(k, num[idx], den)
        lo, hi = out.lo.copy(), out.hi.copy()
        lo[idx], hi[idx] = sub.lo, sub.hi
        out = IntervalArray(lo, hi)
    return out


def kernel_coeff_sum_grid(k: KernelSpec, num, den: int, chunk: int = 1 << 12) -> IntervalArray:
    """Cosine-sum form of the kernel on a grid; O(order) per point."""
    num = _as_int_array(num).ravel()
    l = k.order
    total = IntervalArray.from_fraction(Fraction(1, 2), num.shape)
    acc = IntervalArray.zeros(num.shape)
    for start in range(1, l + 1, chunk):
        nu = np.arange(start, min(l + 1, start + chunk), dtype=np.int64)
        c = cospi(phase(nu[:, None], num[None, :], den), den)
        if k.kind is KernelKind.FEJER:
            c = c * IntervalArray.exact((l + 1 - nu).astype(np.float64)[:, None])
        acc = acc + c.sum(axis=0)
    if k.kind is KernelKind.FEJER:
        acc = acc / IntervalArray.from_fraction(Fraction(l + 1))
    return total + acc


@dataclass(frozen=True)
class GridCoeffs:
    """Coefficient enclosures from the vectorized tier (``a[n-1]``, ``b[n-1]``)."""

    a0: Fraction
    a: IntervalArray
    b: IntervalArray

    @property
    def L(self) -> int:
        return self.a.shape[0]


def _jump_sums(n: np.ndarray, base: np.ndarray, den: int, J: IntervalArray, chunk: int):
    """``sum_k J_k sin(pi n N_k / den)`` and the cosine analogue, for each n."""
    rows = max(1, chunk // max(1, base.size))
    sa_lo, sa_hi, sb_lo, sb_hi = (np.empty(n.size) for _ in range(4))
    for s in range(0, n.size, rows):
        ph = phase(n[s:s + rows, None], base[None, :], den)
        sa = matvec(sinpi_mid(ph, den), J)
        sb = matvec(cospi_mid(ph, den), J)
        sa_lo[s:s + rows], sa_hi[s:s + rows] = sa.lo, sa.hi
        sb_lo[s:s + rows], sb_hi[s:s + rows] = sb.lo, sb.hi
    return IntervalArray(sa_lo, sa_hi), IntervalArray(sb_lo, sb_hi)


def step_coeffs_grid(f: RationalStepFunction, L: int, chunk: int = 1 << 21) -> GridCoeffs:
    """Vectorized ``a_n, b_n`` (n = 1..L).

    The phase of ``n c_k`` only depends on ``n`` modulo ``2 D`` (``D`` the
    common denominator of the breakpoints), so for long tables the jump sums
    are computed once per residue and reused.
    """
    jumps = _jumps(f)
    edge = f.values[0] - f.values[-1]
    n_all = np.arange(1, L + 1, dtype=np.int64)
    if jumps:
        den = lcm(*(c.denominator for c, _ in jumps))
        nums = [int(c * den) for c, _ in jumps]
        base = np.array(nums, dtype=object if max(nums) >= (1 << 62) else np.int64)
        J = IntervalArray.from_fractions([j for _, j in jumps])
        period = 2 * den
        if L > period:
            ua, ub = _jump_sums(np.arange(period, dtype=np.int64), base, den, J, chunk)
            idx = n_all % period
            sa, sb = ua[idx], ub[idx]
        else:
            sa, sb = _jump_sums(n_all, base, den, J, chunk)
        sb = sb + IntervalArray.from_fraction(edge, (L,))
    else:
        sa = IntervalArray.zeros((L,))
        sb = IntervalArray.from_fraction(edge, (L,))
    scale = IntervalArray.exact(n_all.astype(np.float64)) * pi_array((L,))
    return GridCoeffs(f.integral_pi(), -sa / scale, sb / scale)


def _fold(v: IntervalArray, upto: int, period: int) -> IntervalArray:
    """``F_r = sum_{1 <= n <= upto, n = r mod period} v_n`` for r in [0, period)."""
    n_rows = -(-(upto + 1) // period)
    pad = n_rows * period - (upto + 1)
    lo = np.concatenate([[0.0], v.lo[:upto], np.zeros(pad)]).reshape(n_rows, period)
    hi = np.concatenate([[0.0], v.hi[:upto], np.zeros(pad)]).reshape(n_rows, period)
    return IntervalArray(lo, hi).sum(axis=0)


def partial_sums_grid(coeffs: GridCoeffs, orders: Sequence[int], num, den: int,
                      chunk: int = 1 << 22) -> dict[int, IntervalArray]:
    """``S_l`` for each ``l`` in ``orders`` at ``x = pi * num / den``.

    Orders beyond the period ``2 den`` of ``n -> n x mod 2 pi`` are folded
    onto residues first, so the cost is bounded by ``2 den`` per point.
    """
    num = _as_int_array(num).ravel()
    orders = sorted(set(int(o) for o in orders))
    if orders and orders[-1] > coeffs.L:
        raise ValueError("order exceeds available coefficients")
    if orders and orders[0] < 0:
        raise ValueError("orders must be >= 0")
    base = IntervalArray.from_fraction(coeffs.a0 / 2, num.shape)
    period = 2 * den
    out: dict[int, IntervalArray] = {}

    def block(n: np.ndarray, a: IntervalArray, b: IntervalArray) -> IntervalArray:
        acc = IntervalArray.zeros(num.shape)
        rows = max(1, chunk // max(1, num.size))
        for s in range(0, n.size, rows):
            ph = phase(n[s:s + rows, None], num[None, :], den)
            acc = acc + matvec(cospi_mid(ph, den).T, a[s:s + rows]) + matvec(sinpi_mid(ph, den).T, b[s:s + rows])
        return acc

    run = base
    done = 0
    for l in orders:
        if l > period:
            r = np.arange(period, dtype=np.int64)
            out[l] = base + block(r, _fold(coeffs.a, l, period), _fold(coeffs.b, l, period))
            continue
        if l > done:
            n = np.arange(done + 1, l + 1, dtype=np.int64)
            run = run + block(n, coeffs.a[done:l], coeffs.b[done:l])
            done = l
        out[l] = run
    return out


@dataclass(frozen=True)
class DilatedSum:
    """``sum_t s_t(q_t x)``: step functions composed with integer dilations.

    ``S_l(s(q .))(x) = S_{floor(l/q)}(s)(q x)`` because ``s(q .)`` only has
    frequencies divisible by ``q``; this keeps every coefficient table short.
    """

    terms: tuple[tuple[RationalStepFunction, int], ...]

    def partial_sums(self, orders: Sequence[int], num, den: int) -> dict[int, IntervalArray]:
        num = _as_int_array(num).ravel()
        total = {o: IntervalArray.zeros(num.shape) for o in orders}
        for s, q in self.terms:
            inner = {o: o // q for o in orders}
            L = max(inner.values(), default=0)
            coeffs = step_coeffs_grid(s, L)
            qnum = phase(q, num, den)  # q x reduced mod 2 pi
            sums = partial_sums_grid(coeffs, sorted(set(inner.values())), qnum, den)
            for o in orders:
                total[o] = total[o] + sums[inner[o]]
        return total


def uniform_grid(size: int) -> tuple[np.ndarray, int]:
    """``x_k = 2 pi k / size`` as ``(numerators, den)`` of ``x / pi``."""
    return 2 * np.arange(size, dtype=np.int64), size


# -- perturbation bound -----------------------------------------------------

@dataclass(frozen=True)
class PerturbationReport:
    l: int
    eps_over_pi: Fraction          # ||p - q||_1 = eps_over_pi * pi exactly
    bound: IntervalReal            # l * ||p - q||_1
    max_diff_upper: float          # certified max over sampled x of |S_l(p) - S_l(q)|
    points: int

    @property
    def margin(self) -> float:
        return float(self.bound.lo) - self.max_diff_upper

    @property
    def holds(self) -> bool:
        return self.max_diff_upper <= self.bound.lo

    def to_json(self) -> dict:
        return {"l": self.l, "eps_over_pi": str(self.eps_over_pi), "bound": self.bound.to_json(),
                "max_diff_upper": self.max_diff_upper, "margin": self.margin,
                "holds": self.holds, "points": self.points}


def sample_points(grid: int = 2048, n_random: int = 64, seed: int = 0, random_den: int = 1 << 20):
    """Equispaced plus seeded random points, as two ``(num, den)`` grids."""
    rng = np.random.default_rng(seed)
    eq = uniform_grid(grid)
    rnd = (rng.integers(0, 2 * random_den, size=n_random, dtype=np.int64), random_den)
    return [eq, rnd] if n_random else [eq]


def partial_sum_perturbation_bound(p_fn: RationalStepFunction, q_fn: RationalStepFunction, l: int, *,
                                   grid: int = 2048, n_random: int = 64, seed: int = 0) -> PerturbationReport:
    """Certify ``max_x |S_l(p,x) - S_l(q,x)| <= l * ||p - q||_1`` on sampled x."""
    if l < 1:
        raise ValueError("l must be >= 1")
    eps = lp_distance_pow(p_fn, q_fn, 1)
    bound = pi_enclosure(80) * (eps * l)
    if eps == 0:
        # equal almost everywhere, hence identical coefficients
        return PerturbationReport(l, eps, bound, 0.0, grid + n_random)
    diff_fn = pointwise_sub(p_fn, q_fn)
    cp, cq, cd = (step_coeffs_grid(g, l) for g in (p_fn, q_fn, diff_fn))
    worst = 0.0
    count = 0
    for num, den in sample_points(grid, n_random, seed):
        sp = partial_sums_grid(cp, [l], num, den)[l]
        sq = partial_sums_grid(cq, [l], num, den)[l]
        sd = partial_sums_grid(cd, [l], num, den)[l]
        # two enclosures of the same quantity; keep the intersection
        via_pair = sp - sq
        lo = np.maximum(via_pair.lo, sd.lo)
        hi = np.minimum(via_pair.hi, sd.hi)
        worst = max(worst, float(np.max(np.maximum(np.abs(lo), np.abs(hi)))))
        count += num.size
    return PerturbationReport(l, eps, bound, worst, count)


def coefficient_perturbation_ok(p_fn: RationalStepFunction, q_fn: RationalStepFunction, L: int = 32) -> bool:
    """``|a_n(p) - a_n(q)|, |b_n(p) - b_n(q)| <= (1/pi) ||p - q||_1`` for n <= L."""
    eps = lp_distance_pow(p_fn, q_fn, 1)  # (1/pi) * ||p-q||_1 is exactly this rational
    d = step_coeffs_grid(pointwise_sub(p_fn, q_fn), L)
    upper = max(float(np.max(d.a.abs().hi, initial=0)), float(np.max(d.b.abs().hi, initial=0)))
    return abs(d.a0) <= eps and upper <= eps
