"""Kolmogorov's polynomials ``f_n`` and the sets where their partial sums blow up.

``f_n(x) = (1/n) sum_{i=1}^n K_{m_i}(x - a_i)`` with nodes
``a_i = 4 pi i / (2n+1)`` and orders ``m_1 = n**4``, ``m_{i+1}`` the least
integer above ``2 m_i`` with ``2 m_{i+1} + 1`` divisible by ``2n + 1``.

The partial sum ``S_{m_j} f_n`` splits into three kernel sums (full Fejér
kernels for ``i <= j``, rescaled Fejér and Dirichlet kernels of order
``m_j`` for ``i > j``), so every evaluation costs O(n) closed-form kernels
regardless of how large the orders are.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact_numeric import (
    DEFAULT_PRECISION_CAP,
    IntervalReal,
    PiMultiple,
    pi_enclosure,
    rat,
    rational_upper,
    refine,
    sin_enclosure,
    sinpi_enclosure,
    sqrt_log_enclosure,
)
from .fastiv import SIN_REL_SLACK, IntervalArray, phase, sinpi
from .fourier import (
    DEFAULT_TOL,
    GUARD_BAND,
    Point,
    dirichlet,
    fejer,
    kernel_at_precision,
    kernel_grid,
    uniform_grid,
)

# rational lower bound for pi used in the (conservative) guard-band test
PI_LOWER = Fraction(314159, 100000)


@dataclass(frozen=True)
class KolmogorovPoly:
    n: int
    nodes: tuple[Fraction, ...]     # a_i / pi
    freqs: tuple[int, ...]          # m_1 .. m_n
    guard_halfwidth: Fraction       # half-width of the excluded intervals around each node

    @property
    def modulus(self) -> int:
        return 2 * self.n + 1

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "nodes_pi": [str(a) for a in self.nodes],
            "freqs": list(self.freqs),
            "guard_halfwidth": str(self.guard_halfwidth),
        }

    @classmethod
    def from_json(cls, obj: dict) -> KolmogorovPoly:
        p = build_poly(int(obj["n"]))
        if list(p.freqs) != [int(m) for m in obj["freqs"]]:
            raise ValueError("stored frequencies disagree with the construction")
        return p


def kolmogorov_freqs(n: int) -> list[int]:
    """Brute-force minimal search, exactly as the definition reads."""
    mod = 2 * n + 1
    m = [n**4]
    while len(m) < n:
        c = 2 * m[-1] + 1
        while (2 * c + 1) % mod:
            c += 1
        m.append(c)
    return m


def build_poly(n: int) -> KolmogorovPoly:
    if not isinstance(n, int) or n < 2:
        raise ValueError("n must be an integer >= 2")
    nodes = tuple(Fraction(4 * i, 2 * n + 1) for i in range(1, n + 1))
    return KolmogorovPoly(n, nodes, tuple(kolmogorov_freqs(n)), Fraction(1, n * n))


def freq_constraints_hold(P: KolmogorovPoly) -> bool:
    """All defining constraints, including minimality, as integer checks."""
    m, mod = P.freqs, P.modulus
    if len(m) != P.n or m[0] != P.n**4:
        return False
    for prev, cur in zip(m, m[1:]):
        if not (cur > 2 * prev and (2 * cur + 1) % mod == 0):
            return False
        if any((2 * c + 1) % mod == 0 for c in range(2 * prev + 1, cur)):
            return False
    return True


# -- scalar evaluation ---------------------------------------------------------

def _shift(x: Point, a: Fraction, bits: int) -> Point:
    """``x - a*pi`` keeping exact pi-multiples exact."""
    if isinstance(x, IntervalReal):
        return x - pi_enclosure(bits + 16) * a
    c = x.coefficient if isinstance(x, PiMultiple) else rat(x)
    return c - a


def _eval_at(P: KolmogorovPoly, x: Point, bits: int) -> IntervalReal:
    total = IntervalReal.point(0, bits)
    for a, m in zip(P.nodes, P.freqs):
        total = total + kernel_at_precision(fejer(m), _shift(x, a, bits), bits)
    return (total / P.n).rounded(bits)


def _tolerant(tol):
    tol = rat(tol)

    def good(iv: IntervalReal) -> bool:
        return iv.width <= tol * max(Fraction(1), abs(iv.lo), abs(iv.hi))
    return good


def eval_poly(P: KolmogorovPoly, x: Point, tol=DEFAULT_TOL, *, cap_bits: int = DEFAULT_PRECISION_CAP) -> IntervalReal:
    """Certified ``f_n(x)`` from n closed-form Fejér kernels."""
    return refine(lambda bits: _eval_at(P, x, bits), accept=_tolerant(tol), cap_bits=cap_bits)


def _dirichlet_shifted(m: int, x: Point, t: Point, bits: int) -> IntervalReal:
    """``D_m(t) = sin((m + 1/2) x) / (2 sin(t/2))`` where ``t = x - a_i``.

    Valid because ``(2m + 1) a_i / 2`` is a multiple of ``2 pi`` when
    ``2m + 1`` is divisible by ``2n + 1``.
    """
    if isinstance(x, IntervalReal):
        num = sin_enclosure(x * Fraction(2 * m + 1, 2), bits)
        den = sin_enclosure(t / 2, bits)
    else:
        c = x.coefficient if isinstance(x, PiMultiple) else rat(x)
        num = sinpi_enclosure(c * Fraction(2 * m + 1, 2), bits)
        den = sinpi_enclosure(t / 2, bits)
    if den.lo <= GUARD_BAND and den.hi >= -GUARD_BAND:
        return kernel_at_precision(dirichlet(m), t, bits)
    return (num / (den * 2)).rounded(bits)


@dataclass(frozen=True)
class Decomposition:
    """``S_{m_j} f_n = (T1 + T2 + T3) / n``."""

    t1: IntervalReal
    t2: IntervalReal
    t3: IntervalReal
    n: int

    @property
    def total(self) -> IntervalReal:
        return (self.t1 + self.t2 + self.t3) / self.n

    @property
    def kernel_part(self) -> IntervalReal:
        """``(T1 + T2) / n``: the part bounded by the constant A off the guard bands."""
        return (self.t1 + self.t2) / self.n


def has_congruence(P: KolmogorovPoly, j: int) -> bool:
    """Whether ``2 m_j + 1`` is divisible by ``2n + 1`` (not guaranteed for j = 1)."""
    return (2 * P.freqs[j - 1] + 1) % (2 * P.n + 1) == 0


def _decompose(P: KolmogorovPoly, j: int, x: Point, bits: int, form: str) -> Decomposition:
    mj = P.freqs[j - 1]
    # the shifted numerator needs 2 m_j + 1 = 0 mod 2n + 1, which m_1 = n^4 need not meet
    shifted = form == "shifted" and has_congruence(P, j)
    zero = IntervalReal.point(0, bits)
    t1, t2, t3 = zero, zero, zero
    for i, (a, mi) in enumerate(zip(P.nodes, P.freqs), start=1):
        t = _shift(x, a, bits)
        if i <= j:
            t1 = t1 + kernel_at_precision(fejer(mi), t, bits)
            continue
        t2 = t2 + kernel_at_precision(fejer(mj), t, bits) * Fraction(mj + 1, mi + 1)
        if shifted:
            d = _dirichlet_shifted(mj, x, t, bits)
        else:
            d = kernel_at_precision(dirichlet(mj), t, bits)
        t3 = t3 + d * Fraction(mi - mj, mi + 1)
    return Decomposition(t1.rounded(bits), t2.rounded(bits), t3.rounded(bits), P.n)


def partial_sum_at_mj(P: KolmogorovPoly, j: int, x: Point, tol=DEFAULT_TOL, *, form: str = "shifted",
                      cap_bits: int = DEFAULT_PRECISION_CAP) -> IntervalReal:
    """Certified ``S_{m_j}(f_n, x)`` via the three-term decomposition.

    ``form="shifted"`` uses the congruence on ``2 m_j + 1`` to pull the
    Dirichlet numerator out of the sum; ``form="direct"`` evaluates each
    ``D_{m_j}(x - a_i)`` as is.  Both must agree.
    """
    if not 1 <= j <= P.n:
        raise ValueError(f"j must be in 1..{P.n}")
    if form not in ("shifted", "direct"):
        raise ValueError("form is 'shifted' or 'direct'")
    return refine(lambda bits: _decompose(P, j, x, bits, form).total, accept=_tolerant(tol), cap_bits=cap_bits)


def decomposition(P: KolmogorovPoly, j: int, x: Point, bits: int = 96, form: str = "shifted") -> Decomposition:
    if not 1 <= j <= P.n:
        raise ValueError(f"j must be in 1..{P.n}")
    return _decompose(P, j, x, bits, form)


# -- grid evaluation -----------------------------------------------------------

@dataclass(frozen=True)
class GridScan:
    """All ``S_{m_j}`` and kernel parts on ``x_k = pi * num[k] / den``."""

    num: np.ndarray
    den: int
    sums: IntervalArray          # shape (n, G): S_{m_j}(f_n, x_k)
    kernel_part: IntervalArray   # shape (n, G): (T1 + T2) / n
    outside_guard: np.ndarray    # bool (G,): certified outside every guard interval


def _stack(rows: list[IntervalArray]) -> IntervalArray:
    return IntervalArray(np.stack([r.lo for r in rows]), np.stack([r.hi for r in rows]))


def _dirichlet_shifted_grid(m: int, xnum, tnum, den: int) -> IntervalArray:
    num = sinpi(phase(2 * m + 1, xnum, 2 * den), 2 * den)
    sden = sinpi(tnum, 2 * den)
    bad = sden.lower_abs() < float(GUARD_BAND)
    safe = sden.where(~bad, IntervalArray.exact(np.ones(sden.shape)))
    out = num / (safe * 2)
    if bad.any():
        direct = kernel_grid(dirichlet(m), tnum, den)
        out = out.where(~bad, direct)
    return out


def outside_guard_mask(P: KolmogorovPoly, num, den: int) -> np.ndarray:
    """Points certified to lie outside every ``[a_i - n^-2, a_i + n^-2]`` (mod 2 pi).

    Ambiguity resolves toward "inside", so the mask never admits a guard point.
    """
    N = P.modulus
    D = den * N
    x = np.asarray(num, dtype=np.int64) * N
    out = np.ones(x.shape, dtype=bool)
    n2 = P.n * P.n
    for i in range(1, P.n + 1):
        d = np.mod(x - 4 * i * den, 2 * D)
        d = np.minimum(d, 2 * D - d)            # distance / pi = d / D
        # d/D * pi >= n^-2  <=  d * PI_LOWER * n^2 >= D
        out &= d * PI_LOWER.numerator * n2 >= D * PI_LOWER.denominator
    return out


def scan_grid(P: KolmogorovPoly, num, den: int) -> GridScan:
    num = np.asarray(num, dtype=np.int64)
    N = P.modulus
    D = den * N
    xs = num * N
    tnums = [xs - 4 * i * den for i in range(1, P.n + 1)]
    full = [kernel_grid(fejer(m), t, D) for m, t in zip(P.freqs, tnums)]
    sums, parts = [], []
    t1 = IntervalArray.zeros(xs.shape)
    for j in range(1, P.n + 1):
        mj = P.freqs[j - 1]
        t1 = t1 + full[j - 1]
        t2 = IntervalArray.zeros(xs.shape)
        t3 = IntervalArray.zeros(xs.shape)
        for i in range(j + 1, P.n + 1):
            mi = P.freqs[i - 1]
            t2 = t2 + kernel_grid(fejer(mj), tnums[i - 1], D) * IntervalArray.from_fraction(Fraction(mj + 1, mi + 1))
            d = (_dirichlet_shifted_grid(mj, xs, tnums[i - 1], D) if has_congruence(P, j)
                 else kernel_grid(dirichlet(mj), tnums[i - 1], D))
            t3 = t3 + d * IntervalArray.from_fraction(Fraction(mi - mj, mi + 1))
        inv_n = IntervalArray.from_fraction(Fraction(1, P.n))
        parts.append((t1 + t2) * inv_n)
        sums.append((t1 + t2 + t3) * inv_n)
    return GridScan(num, den, _stack(sums), _stack(parts), outside_guard_mask(P, num, den))


def eval_poly_grid(P: KolmogorovPoly, num, den: int) -> IntervalArray:
    num = np.asarray(num, dtype=np.int64)
    N = P.modulus
    total = IntervalArray.zeros(num.shape)
    for a_i, m in zip(range(1, P.n + 1), P.freqs):
        total = total + kernel_grid(fejer(m), num * N - 4 * a_i * den, den * N)
    return total * IntervalArray.from_fraction(Fraction(1, P.n))


# -- quadrature of the mean ------------------------------------------------------

def _fejer_trapezoid(m: int, M: int, chunk: int = 1 << 16) -> tuple[float, float]:
    """``sum_{k=1}^{(M-1)//2} K_m(2 pi k / M) * (m+1)/2`` in plain floats, with an error bound.

    Returns ``(value, bound)``; the float terms are ``(sin((m+1) pi k/M) / sin(pi k/M))**2``.
    Each term is nonnegative and carries relative error below ``8 * SIN_REL_SLACK``
    (sines from exactly reduced arguments); summation adds ``(len+1) eps`` per dot
    product and one eps per chunk accumulation.
    """
    half = (M - 1) // 2
    eps = float(np.finfo(float).eps)
    pm = math.pi / M
    total = 0.0
    err = 0.0
    for s in range(1, half + 1, chunk):
        k = np.arange(s, min(half + 1, s + chunk), dtype=np.int64)
        j = phase(m + 1, k, M)                    # (m+1) k mod 2M, sin(pi j / M)
        j = np.where(j > M, j - 2 * M, j)
        j = np.where(2 * j > M, M - j, j)
        j = np.where(2 * j < -M, -M - j, j)
        s1 = np.sin(j * pm)
        s2 = np.sin(k * pm)                       # k <= M/2: already folded
        r = s1 / s2
        part = float(np.dot(r, r))
        total += part
        err += part * ((len(k) + 1) * eps + 8 * SIN_REL_SLACK) + total * eps
    return total, err


def kernel_mean_quadrature(m: int, extra_nodes: int = 7) -> IntervalReal:
    """``(1/2pi) int K_m`` by the trapezoid rule on ``M = m + 1 + extra_nodes`` nodes.

    The rule is exact for trigonometric polynomials of degree below ``M``,
    so the enclosure must contain the constant term 1/2.
    """
    M = m + 1 + extra_nodes
    body, err = _fejer_trapezoid(m, M)
    # off the origin K_m(t_k) = r_k^2 / (2(m+1)); K is even, so nodes k and M-k match
    peak = Fraction(m + 1, 2)
    tip = Fraction(1 if m % 2 == 0 else 0, 2 * (m + 1)) if M % 2 == 0 else Fraction(0)
    lo = (peak + (Fraction(body) - Fraction(err)) / (m + 1) + tip) / M
    hi = (peak + (Fraction(body) + Fraction(err)) / (m + 1) + tip) / M
    return IntervalReal(lo, hi)


def quadrature_mean(P: KolmogorovPoly) -> IntervalReal:
    """``(1/2pi) int f_n``: f_n is an average of shifted kernels and the shift
    does not change a kernel's mean, so each kernel is integrated on its own
    exact trapezoid rule."""
    total = IntervalReal.point(0)
    for m in P.freqs:
        total = total + kernel_mean_quadrature(m)
    return total / P.n


# -- the constant A and the exceptional set --------------------------------------

@dataclass(frozen=True)
class AEstimate:
    value: Fraction
    per_n: dict
    grid_size: int
    exclude_guard: bool
    headroom: Fraction

    def to_json(self) -> dict:
        return {"A": str(self.value), "A_float": float(self.value), "per_n": {str(k): v for k, v in self.per_n.items()},
                "grid_size": self.grid_size, "exclude_guard": self.exclude_guard, "headroom": str(self.headroom)}


def a_estimate(n_list: Sequence[int] = (8, 16, 32), grid_size: int = 4096, *, exclude_guard: bool = True,
               headroom: Fraction = Fraction(11, 10)) -> AEstimate:
    per_n = {}
    best = 0.0
    num, den = uniform_grid(grid_size)
    for n in n_list:
        scan = scan_grid(build_poly(n), num, den)
        mag = np.maximum(np.abs(scan.kernel_part.lo), np.abs(scan.kernel_part.hi)).max(axis=0)
        if exclude_guard:
            mag = mag[scan.outside_guard]
        m = float(mag.max()) if mag.size else 0.0
        per_n[n] = m
        best = max(best, m)
    value = rational_upper(IntervalReal(Fraction(best), Fraction(best)) * headroom, 1 << 20)
    return AEstimate(value, per_n, grid_size, exclude_guard, headroom)


def estimate_A(n_list: Sequence[int] = (8, 16, 32), grid_size: int = 4096, *, exclude_guard: bool = True) -> Fraction:
    """Empirical upper bound (10% headroom) on the kernel part of the decomposition
    off the guard intervals; the stand-in for the unnamed absolute constant."""
    return a_estimate(n_list, grid_size, exclude_guard=exclude_guard).value


def threshold(n: int, A, bits: int = 96) -> IntervalReal:
    """``log(n)^(1/2) - A``."""
    A = A if isinstance(A, IntervalReal) else IntervalReal.point(rat(A), bits)
    return sqrt_log_enclosure(n, bits) - A


@dataclass
class DivergenceReport:
    n: int
    A_used: IntervalReal
    threshold: IntervalReal
    grid_size: int
    max_abs_lower: np.ndarray = field(repr=False)
    max_abs_upper: np.ndarray = field(repr=False)
    witness_j: np.ndarray = field(repr=False)
    exceptional: np.ndarray = field(repr=False)

    @property
    def fraction(self) -> float:
        return float(self.exceptional.mean())

    def analytic_terms(self) -> dict:
        """Size of the analytic failure-set terms, for comparison only."""
        n = self.n
        return {"log_n^-1/2": 1 / math.sqrt(math.log(n)), "n*n^-2": 1 / n, "sqrt(n)*n^-1": 1 / math.sqrt(n)}

    def rows(self):
        for k in range(self.grid_size):
            yield {
                "k": k,
                "x_over_pi": str(Fraction(2 * k, self.grid_size)),
                "max_abs_S_lower": float(self.max_abs_lower[k]),
                "max_abs_S_upper": float(self.max_abs_upper[k]),
                "witness_j": int(self.witness_j[k]),
                "exceptional": bool(self.exceptional[k]),
            }

    def to_json(self, with_rows: bool = True) -> dict:
        out = {
            "n": self.n,
            "A_used": self.A_used.to_json(),
            "threshold": self.threshold.to_json(),
            "threshold_float": float(self.threshold.mid),
            "grid_size": self.grid_size,
            "fraction": self.fraction,
            "analytic_terms": self.analytic_terms(),
        }
        if with_rows:
            out["rows"] = list(self.rows())
        return out


def measure_exceptional_set(P: KolmogorovPoly, A, grid_size: int = 4096) -> DivergenceReport:
    """Grid fraction of x with a certified ``max_j |S_{m_j}(f_n, x)| > log^(1/2) n - A``."""
    if grid_size < 256:
        raise ValueError("grid_size must be >= 256")
    A_iv = A if isinstance(A, IntervalReal) else IntervalReal.point(rat(A))
    thr = threshold(P.n, A_iv)
    num, den = uniform_grid(grid_size)
    scan = scan_grid(P, num, den)
    lower = scan.sums.lower_abs()                        # (n, G)
    upper = np.maximum(np.abs(scan.sums.lo), np.abs(scan.sums.hi))
    witness = lower.argmax(axis=0) + 1
    best = lower.max(axis=0)
    # compare against the threshold's upper end, rounded up to a float
    thr_hi = float(thr.hi)
    if Fraction(thr_hi) < thr.hi:
        thr_hi = float(np.nextafter(thr_hi, np.inf))
    return DivergenceReport(P.n, A_iv, thr, grid_size, best, upper.max(axis=0), witness, best > thr_hi)
