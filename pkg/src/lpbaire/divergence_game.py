"""A constructor that pushes Fourier partial sums up, round after round.

The strategy ``g`` answers the opponent's ball ``O_m = B(psi_m, eps_m)`` by
adding a dilated, rescaled Kolmogorov block::

    psi_{m+1} = psi_m + s(q_k x),   s ~ lam * (f_{n_k} - 1/2)

where ``s`` is an explicit step function with a certified L1 distance to
``lam * (f_{n_k} - 1/2)``.  The dilation ``q_k`` separates the blocks'
spectra, so the partial sums ``S_{q_k m_j}`` see block ``k`` as a copy of
``S_{m_j} f_{n_k}``.  The new radius ``min(eps_m/4, beta)`` with
``q_k m_j beta < (m+1)/2`` makes later rounds unable to move those partial
sums by more than ``(m+1)/2`` (the perturbation bound ``|S_l p - S_l q| <=
l ||p - q||_1``).

Two amplitude policies:

* ``"full"`` takes ``lam = A_n^(-1/2)`` from the first schedule entry with
  ``2 pi A_n^(-1/2) < eps/2`` and ``A_n^(1/2) - max|psi_m| > m + 1``.  With
  ``n`` capped at desk scale no entry qualifies and the strategy raises
  :class:`ScheduleExhausted`.
* ``"budget"`` takes ``lam = eps/16``, always feasible; containment holds,
  but the partial sums only reach ``lam`` times the Kolmogorov level.
"""
from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .baire import IndexedStrategy
from .banach_mazur import Game, GameTranscript, result_scheme
from .exact_numeric import (
    IntervalReal,
    PiMultiple,
    certified_compare,
    Cmp,
    pi_enclosure,
    rat,
    rat_to_str,
    rational_lower,
    sqrt_enclosure,
    sqrt_log_enclosure,
)
from .fastiv import IntervalArray, phase
from .fourier import DilatedSum, partial_sums_grid, step_coeffs_grid, uniform_grid
from .kolmogorov import KolmogorovPoly, build_poly, eval_poly, eval_poly_grid, measure_exceptional_set
from .lp_space import RationalBall, ball_subset, check_consistency
from .step_functions import RationalStepFunction, lp_norm_pow, pointwise_sub

# rational upper bound for pi (355/113 exceeds pi by 2.7e-7)
PI_UPPER = Fraction(355, 113)
DYADIC_BITS = 40


class ScheduleExhausted(RuntimeError):
    """The capped schedule has no block meeting the round's requirements."""


@functools.lru_cache(maxsize=None)
def _poly(n: int) -> KolmogorovPoly:
    return build_poly(n)


@dataclass(frozen=True)
class DivergenceSchedule:
    """Block sizes ``n_k = 2**(2**k)`` (capped), dilations ``q_k`` and the constant A."""

    A_const: Fraction
    cap: int = 256
    n_seq: tuple[int, ...] = ()
    q_seq: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "A_const", rat(self.A_const))
        if not self.n_seq:
            ns, k = [], 0
            while 2 ** (2**k) <= self.cap:
                ns.append(2 ** (2**k))
                k += 1
            if not ns:
                raise ValueError("schedule cap below 2 leaves no blocks")
            object.__setattr__(self, "n_seq", tuple(ns))
        if not self.q_seq:
            qs = [1]
            for n in self.n_seq[:-1]:
                qs.append(qs[-1] * _poly(n).freqs[-1] + 1)
            object.__setattr__(self, "q_seq", tuple(qs))

    def __len__(self) -> int:
        return len(self.n_seq)

    def poly(self, k: int) -> KolmogorovPoly:
        self._check(k)
        return _poly(self.n_seq[k])

    def _check(self, k: int) -> None:
        if not 0 <= k < len(self.n_seq):
            raise ScheduleExhausted(f"block {k} is past the schedule (cap {self.cap})")

    def A_n(self, k: int, bits: int = 96) -> IntervalReal:
        """``log(n_k)^(1/2) - A``."""
        self._check(k)
        return sqrt_log_enclosure(self.n_seq[k], bits) - self.A_const

    def spectral_separation(self) -> bool:
        return all(self.q_seq[k + 1] > self.q_seq[k] * self.poly(k).freqs[-1] for k in range(len(self) - 1))

    def summable_prefix(self) -> bool:
        """``A_{n_k}^(-1/2)`` is positive and strictly decreasing on the prefix."""
        a = [self.A_n(k) for k in range(len(self))]
        usable = [iv for iv in a if iv.lo > 0]
        return all(nxt.lo > cur.hi for cur, nxt in zip(usable, usable[1:]))

    def to_json(self) -> dict:
        return {
            "A": rat_to_str(self.A_const),
            "cap": self.cap,
            "n_seq": list(self.n_seq),
            "q_seq": [str(q) for q in self.q_seq],
            "A_n": [float(self.A_n(k).mid) for k in range(len(self))],
            "spectral_separation": self.spectral_separation(),
            "summable_prefix": self.summable_prefix(),
        }


def schedule_params(A, cap: int = 256) -> DivergenceSchedule:
    return DivergenceSchedule(rat(A), cap)


# -- blocks --------------------------------------------------------------------

def _dilate_coord(x, q: int):
    if isinstance(x, IntervalReal):
        return x * q
    c = x.coefficient if isinstance(x, PiMultiple) else rat(x)
    c = c * q
    return c - 2 * (c.numerator // (2 * c.denominator))


def rescaled_block(k: int, sched: DivergenceSchedule, x, amplitude=None, tol=Fraction(1, 10**8)) -> IntervalReal:
    """``F_k(x) = lam (f_{n_k}(q_k x) - 1/2)``, by default ``lam = A_{n_k}^(-1/2)``."""
    a_n = sched.A_n(k)
    if amplitude is None:
        if a_n.lo <= 0:
            raise ScheduleExhausted(f"A_n <= 0 for n = {sched.n_seq[k]}: the block is undefined")
        lam = 1 / sqrt_enclosure(a_n)
    else:
        lam = IntervalReal.point(rat(amplitude))
    f = eval_poly(sched.poly(k), _dilate_coord(x, sched.q_seq[k]), tol)
    return (f - Fraction(1, 2)) * lam


def rescaled_block_grid(k: int, sched: DivergenceSchedule, num, den: int, amplitude) -> IntervalArray:
    qnum = phase(sched.q_seq[k], np.asarray(num, dtype=np.int64), den)
    f = eval_poly_grid(sched.poly(k), qnum, den)
    return (f - Fraction(1, 2)) * IntervalArray.from_fraction(rat(amplitude))


def kernel_tv_bound(P: KolmogorovPoly) -> Fraction:
    """Upper bound on the total variation of ``f_n`` over a period.

    ``K_m`` falls from ``(m+1)/2`` to its first zero, and each later lobe
    between zeros ``2 pi k/(m+1)`` rises and falls below the envelope
    ``pi^2 / (2(m+1) t^2)``, adding at most ``(m+1)/(4k^2)``.  Per half
    period that is ``(m+1)(1/2 + pi^2/24) < (m+1)``, so ``TV(K_m) <= 2(m+1)``.
    """
    return Fraction(2 * sum(m + 1 for m in P.freqs), P.n)


@dataclass(frozen=True)
class Discretization:
    step: RationalStepFunction       # s on [0, 2 pi]
    cells: int
    error_bound: Fraction            # >= ||s - lam (f - 1/2)||_1


def discretize_block(P: KolmogorovPoly, lam: Fraction, budget: Fraction, max_cells: int = 1 << 22) -> Discretization:
    """Midpoint samples on a uniform dyadic grid, values rounded to 2**-40.

    On a cell of length h the midpoint value differs from the function by at
    most its variation there, so the L1 error is at most
    ``h * TV(lam f) + 2 pi * (max sample error)``.  The cell count is the
    least power of two putting the first term under ``budget / 2``.
    """
    tv = lam * kernel_tv_bound(P)
    cells = 1
    while 2 * PI_UPPER * tv / cells > budget / 2:
        cells *= 2
        if cells > max_cells:
            raise ScheduleExhausted(f"n = {P.n} needs more than {max_cells} cells for the L1 budget")
    num = 2 * np.arange(cells, dtype=np.int64) + 1          # midpoints (2c+1) pi / cells
    f = eval_poly_grid(P, num, cells)
    lam_f = float(lam)
    scale = float(2**DYADIC_BITS)
    lo = lam_f * (f.lo - 0.5)
    hi = lam_f * (f.hi - 0.5)
    ints = np.rint(0.5 * (lo + hi) * scale).astype(np.int64)
    approx = ints / scale
    # distance from the rounded value to the far end of the enclosure, padded
    # for the float products above (relative 1e-12 is far beyond their error)
    dev = np.maximum(np.abs(approx - lo), np.abs(approx - hi))
    sample_err = Fraction(float(dev.max()) * (1 + 1e-12) + 1e-300) + abs(lam) * Fraction(1, 10**15)
    step = RationalStepFunction.from_integers(cells, 2 * np.arange(cells + 1), 2**DYADIC_BITS, ints)
    err = 2 * PI_UPPER * tv / cells + 2 * PI_UPPER * sample_err
    return Discretization(step, cells, err)


def dilate(s: RationalStepFunction, q: int) -> RationalStepFunction:
    """``x -> s(q x)`` for a function given on a uniform grid, as a step function."""
    if q == 1:
        return s
    N = s.pieces
    if any(b != Fraction(2 * i, N) for i, b in enumerate(s.breakpoints)):
        raise ValueError("dilate expects a uniform step function")
    D = math.lcm(*(v.denominator for v in s.values))
    ints = [v.numerator * (D // v.denominator) for v in s.values]
    total = q * N
    return RationalStepFunction.from_integers(total, 2 * np.arange(total + 1, dtype=object), D, ints * q)


# -- the strategy ----------------------------------------------------------------

@dataclass
class GameRoundState:
    m: int
    ball: RationalBall                       # the opponent's ball O_m
    new_radius: Fraction
    alpha_param: int | None = None           # block index k (n_k from the schedule)
    beta_param: Fraction | None = None       # beta(m+1)
    amplitude: Fraction | None = None
    cells: int | None = None
    discretization_bound: Fraction | None = None
    chain_bound: IntervalReal | None = None  # eps_m/2 + 2 pi lam, certified < eps_m
    contained: bool = True
    exceedance_fraction: float | None = None  # G_{m+1} proxy: block sums above lam * A_n
    literal_fraction: float | None = None     # certified max_j |S_{q m_j}(psi_{m+1})| > m + 1
    kolmogorov_fraction: float | None = None  # measured fraction for f_{n_k} at the same A
    block: RationalStepFunction | None = field(default=None, repr=False)
    q: int | None = None
    n: int | None = None
    center: RationalStepFunction | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        out = {
            "m": self.m,
            "eps_m": rat_to_str(self.ball.radius),
            "eps_next": rat_to_str(self.new_radius),
            "contained": self.contained,
        }
        if self.alpha_param is not None:
            out.update({
                "alpha_param": self.alpha_param,
                "n": self.n,
                "q": str(self.q),
                "beta_param": rat_to_str(self.beta_param),
                "amplitude": rat_to_str(self.amplitude),
                "cells": self.cells,
                "pieces": self.center.pieces if self.center is not None else None,
                "discretization_bound": float(self.discretization_bound),
                "chain_bound_hi": float(self.chain_bound.hi),
                "exceedance_fraction": self.exceedance_fraction,
                "literal_fraction": self.literal_fraction,
                "kolmogorov_fraction": self.kolmogorov_fraction,
            })
        return out


@dataclass(frozen=True)
class DivergenceStrategy(IndexedStrategy):
    schedule: DivergenceSchedule | None = None
    log: list = field(default_factory=list, compare=False)


def _beta(m: int, q: int, P: KolmogorovPoly) -> Fraction:
    """Largest-denominator-free choice with ``max_j q m_j beta < (m+1)/2``."""
    top = q * P.freqs[-1]
    beta = Fraction(m + 1, 2 * top + 1)
    assert top * beta < Fraction(m + 1, 2)
    return beta


def _full_amplitude_block(sched: DivergenceSchedule, k0: int, ball: RationalBall, m: int) -> tuple[int, Fraction]:
    eps = ball.radius
    bmax = ball.center.max_abs()
    for k in range(k0, len(sched)):
        a_n = sched.A_n(k)
        if a_n.lo <= 0:
            continue
        amp = 1 / sqrt_enclosure(a_n)
        small = certified_compare(pi_enclosure() * amp * 2, eps / 2) is Cmp.LESS
        big = certified_compare(sqrt_enclosure(a_n) - bmax, m + 1) is Cmp.GREATER
        if small and big:
            return k, rational_lower(amp)
    raise ScheduleExhausted(
        f"round {m}: no n_k <= {sched.cap} has 2 pi A^(-1/2) < {float(eps / 2):.3g} "
        f"and A^(1/2) - {float(bmax):.3g} > {m + 1}"
    )


def divergence_strategy(sched: DivergenceSchedule, policy: str = "budget", *, grid: int = 2048,
                        max_pieces: int = 1 << 21) -> DivergenceStrategy:
    """The shrinking constructor ``g``; blocks go in on odd rounds."""
    if policy not in ("budget", "full"):
        raise ValueError("policy is 'budget' or 'full'")
    log: list[GameRoundState] = []
    kolmo_cache: dict[int, float] = {}
    num, den = uniform_grid(grid)

    def move(ball: RationalBall, m: int) -> RationalBall:
        eps, psi = ball.radius, ball.center
        if m % 2 == 0:
            out = ball.with_radius(eps / 4)
            log.append(GameRoundState(m, ball, out.radius, center=psi))
            return out
        k0 = (m - 1) // 2
        if policy == "full":
            k, lam = _full_amplitude_block(sched, k0, ball, m)
        else:
            k, lam = k0, eps / 16
        P = sched.poly(k)
        q = sched.q_seq[k]
        disc = discretize_block(P, lam, eps / 4)
        if disc.cells * q > max_pieces:
            raise ScheduleExhausted(f"block n = {P.n} at dilation {q} needs {disc.cells * q} pieces")
        assert disc.error_bound < eps / 4
        new_center = psi + dilate(disc.step, q)
        beta = _beta(m, q, P)
        radius = min(eps / 4, beta)
        new_ball = RationalBall(new_center, radius, ball.p)
        chain = pi_enclosure() * (2 * lam) + eps / 2
        chain_ok = certified_compare(chain, eps) is Cmp.LESS
        contained = chain_ok and ball_subset(new_ball, ball)
        if not contained:
            raise AssertionError(f"round {m}: block move left the opponent's ball")

        # G_{m+1} proxy: the block's own partial sums S_{q m_j} at the grid
        orders = list(P.freqs)
        sums = partial_sums_grid(step_coeffs_grid(disc.step, orders[-1]), orders, phase(q, num, den), den)
        best = np.max(np.stack([sums[o].lower_abs() for o in orders]), axis=0)
        thr = (sqrt_log_enclosure(P.n) - sched.A_const) * lam
        frac = float(np.mean(best > float(thr.hi) * (1 + 1e-15)))
        # literal condition: partial sums of psi_{m+1} itself above m + 1
        full = DilatedSum(((pointwise_sub(new_center, dilate(disc.step, q)), 1), (disc.step, q)))
        full_sums = full.partial_sums([q * o for o in orders], num, den)
        lit = np.max(np.stack([full_sums[q * o].lower_abs() for o in orders]), axis=0)
        literal = float(np.mean(lit > m + 1))
        if P.n not in kolmo_cache:
            kolmo_cache[P.n] = measure_exceptional_set(P, sched.A_const, grid).fraction
        log.append(GameRoundState(m, ball, radius, k, beta, lam, disc.cells, disc.error_bound, chain, contained,
                                  frac, literal, kolmo_cache[P.n], disc.step, q, P.n, new_center))
        return new_ball

    return DivergenceStrategy(move, shrinking=True, name=f"diverge[{policy}]", schedule=sched, log=log)


# -- opponents -------------------------------------------------------------------

def identity_alpha() -> IndexedStrategy:
    return IndexedStrategy(lambda b, i: b, shrinking=False, name="identity")


def recentering_alpha(seed: int = 0) -> IndexedStrategy:
    """Moves the center by a random bump using half the slack, keeps radius/2."""

    def move(ball: RationalBall, i: int) -> RationalBall:
        rng = random.Random(seed * 1_000_003 + i)
        a = Fraction(rng.randrange(0, 64), 32)
        b = a + Fraction(rng.randrange(1, 8), 32)
        b = min(b, Fraction(2))
        sign = rng.choice((-1, 1))
        # ||bump||_1 = h (b - a) pi <= r / 4, with pi < 22/7
        h = ball.radius / 4 / ((b - a) * Fraction(22, 7))
        bump = RationalStepFunction.from_pieces((0, a, b, 2), (0, sign * h, 0))
        return RationalBall(ball.center + bump, ball.radius / 2, ball.p)

    return IndexedStrategy(move, shrinking=False, name=f"recenter[{seed}]")


# -- the demo --------------------------------------------------------------------

@dataclass
class DemoReport:
    rounds: list[GameRoundState]
    transcript: GameTranscript
    schedule: DivergenceSchedule
    grid: int
    final_max_lower: np.ndarray = field(repr=False)
    final_max_upper: np.ndarray = field(repr=False)
    persistence: list[dict] = field(default_factory=list)
    consistency_violations: list = field(default_factory=list)
    consistency_checked_upto: int = 0
    final_threshold: Fraction = Fraction(2)

    @property
    def block_rounds(self) -> list[GameRoundState]:
        return [r for r in self.rounds if r.alpha_param is not None]

    @property
    def containment_ok(self) -> bool:
        return all(r.contained for r in self.rounds)

    @property
    def fractions(self) -> list[float]:
        return [r.exceedance_fraction for r in self.block_rounds]

    def fractions_monotone(self, slack: float = 0.05) -> bool:
        f = self.fractions
        return all(b >= a - slack for a, b in zip(f, f[1:]))

    @property
    def final_fraction(self) -> float:
        return float(np.mean(self.final_max_lower > float(self.final_threshold)))

    def final_rows(self):
        for k in range(self.grid):
            yield (str(Fraction(2 * k, self.grid)), float(self.final_max_lower[k]), float(self.final_max_upper[k]))

    def to_json(self) -> dict:
        return {
            "schedule": self.schedule.to_json(),
            "grid": self.grid,
            "rounds": [r.to_json() for r in self.rounds],
            "containment_ok": self.containment_ok,
            "fractions": self.fractions,
            "fractions_monotone": self.fractions_monotone(),
            "final_threshold": rat_to_str(self.final_threshold),
            "final_fraction": self.final_fraction,
            "persistence": self.persistence,
            "consistency_checked_upto": self.consistency_checked_upto,
            "consistency_violations": [list(v) for v in self.consistency_violations],
        }


def _dilated_terms(states: Sequence[GameRoundState], center: RationalStepFunction) -> DilatedSum:
    """Split ``center`` into the blocks ``s(q .)`` plus an exact remainder."""
    remainder = center
    terms = []
    for st in states:
        remainder = pointwise_sub(remainder, dilate(st.block, st.q))
        terms.append((st.block, st.q))
    return DilatedSum(tuple([(remainder, 1)] + terms))


def divergence_demo(alpha: IndexedStrategy, rounds: int, sched: DivergenceSchedule, B0: RationalBall, *,
                    grid: int = 2048, policy: str = "budget", final_threshold=2,
                    consistency_upto: int = 10) -> DemoReport:
    """Play ``rounds`` rounds of ``alpha`` against ``g`` and certify what the result achieves."""
    if rounds < 2:
        raise ValueError("rounds must be >= 2")
    g = divergence_strategy(sched, policy, grid=grid)
    game = Game(alpha, g, B0)
    for _ in range(rounds):
        game.play_round()
    states = g.log
    blocks = [s for s in states if s.alpha_param is not None]
    final = game.transcript.ball(rounds - 1)
    num, den = uniform_grid(grid)

    orders_by_block = [[st.q * m for m in st_poly.freqs] for st, st_poly in
                       ((st, sched.poly(st.alpha_param)) for st in blocks)]
    all_orders = sorted({o for os in orders_by_block for o in os})
    final_sums = _dilated_terms(blocks, final.center).partial_sums(all_orders, num, den) if all_orders else {}
    if final_sums:
        lower = np.max(np.stack([final_sums[o].lower_abs() for o in all_orders]), axis=0)
        upper = np.max(np.stack([np.maximum(np.abs(final_sums[o].lo), np.abs(final_sums[o].hi))
                                 for o in all_orders]), axis=0)
    else:
        lower = upper = np.zeros(grid)

    persistence = []
    for idx, st in enumerate(blocks):
        orders = orders_by_block[idx]
        here = _dilated_terms(blocks[: idx + 1], st.center).partial_sums(orders, num, den)
        # accumulated drift: ||psi_M - psi_{m+1}||_1 = c * pi, certified below beta
        drift = lp_norm_pow(pointwise_sub(final.center, st.center), 1)
        drift_ok = certified_compare(pi_enclosure() * drift, st.beta_param) is Cmp.LESS
        level = st.m + 1
        witnesses = np.zeros(grid, dtype=bool)
        bound_ok = True
        persisted = True
        bound = pi_enclosure() * drift
        for o in orders:
            w = here[o].lower_abs() > level
            witnesses |= w
            # perturbation check: |S_o(psi_M) - S_o(psi_{m+1})| <= o * ||psi_M - psi_{m+1}||_1
            gap = final_sums[o] - here[o]
            # the bound must not be contradicted: certified |gap| never exceeds it
            bound_ok &= bool(np.all(gap.lower_abs() <= float(bound.hi * o) * (1 + 1e-12) + 1e-300))
            persisted &= bool(np.all(final_sums[o].lower_abs()[w] > level / 2))
        persistence.append({
            "m": st.m,
            "level": level,
            "witnesses": int(witnesses.sum()),
            "witness_fraction": float(witnesses.mean()),
            "drift_below_beta": drift_ok,
            "perturbation_bound_holds": bound_ok,
            "persists_above_half_level": persisted,
            "beta_rule": bool(max(orders) * st.beta_param < Fraction(level, 2)),
        })

    scheme = result_scheme(alpha, g, B0, game)
    upto = consistency_upto
    # approximants come from already played rounds while the radii allow it
    while upto > 0 and not any(r <= Fraction(1, 2 ** (upto + 1)) for r in game.transcript.radii):
        upto -= 1
    violations = check_consistency(scheme, upto)
    return DemoReport(states, game.transcript, sched, grid, lower, upper, persistence, violations, upto,
                      rat(final_threshold))
