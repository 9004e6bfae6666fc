"""Constructors (strategies), meagerness witnesses and their combinators."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Callable, Sequence, Union

from .exact_numeric import Cmp
from .lp_space import (
    ApproximationScheme,
    Membership,
    MixedP,
    RationalBall,
    SchemeInconsistent,
    ball_subset,
    consistency_holds,
)
from .step_functions import RationalStepFunction, common_refinement, compare_pi_multiple, lp_distance_pow

# rational stand-in for 8*pi (> 25.13): keeps the new radius below 2**-n / (8 pi)
EIGHT_PI_UPPER = 26


@dataclass(frozen=True)
class Strategy:
    move: Callable[[RationalBall], RationalBall]
    name: str = "strategy"

    def __call__(self, ball: RationalBall) -> RationalBall:
        return self.move(ball)

    def indexed(self) -> IndexedStrategy:
        return IndexedStrategy(lambda b, i: self.move(b), shrinking=False, name=self.name)


@dataclass(frozen=True)
class IndexedStrategy:
    move: Callable[[RationalBall, int], RationalBall]
    shrinking: bool = False
    name: str = "indexed-strategy"

    def __call__(self, ball: RationalBall, i: int) -> RationalBall:
        return self.move(ball, i)


def identity_strategy() -> IndexedStrategy:
    return IndexedStrategy(lambda b, i: b, shrinking=False, name="identity")


def shrink_strategy(factor: Fraction = Fraction(1, 4)) -> IndexedStrategy:
    """Same center, radius times ``factor`` (shrinking when factor < 1/2)."""
    factor = Fraction(factor)
    return IndexedStrategy(
        lambda b, i: b.with_radius(b.radius * factor),
        shrinking=factor < Fraction(1, 2),
        name=f"shrink-{factor}",
    )


# -- singleton avoidance ----------------------------------------------------

def avoidance_index(radius: Fraction, p: int) -> int:
    """Smallest n with ``2**-n < radius / 8`` (``/ 16`` when p > 1)."""
    limit = radius / (8 if p == 1 else 16)
    n = 0
    while Fraction(1, 2**n) >= limit:
        n += 1
    return n


def avoid_singleton(ball: RationalBall, f: ApproximationScheme) -> RationalBall:
    """A sub-ball of ``ball`` that provably misses the function ``f``.

    Pick ``n`` with ``2**-n`` well below the radius, refine the center onto
    the breakpoints of ``s_n = f(n)``, and wherever the center runs closer
    than ``w`` to ``s_n`` push it to ``s_n ± w``.  The new center then stays
    ``>= w`` away from ``s_n`` pointwise while moving at most ``w``; a tiny
    radius finishes the job.
    """
    if ball.p != f.p:
        raise MixedP(f"ball p={ball.p}, scheme p={f.p}")
    p = ball.p
    n = avoidance_index(ball.radius, p)
    delta = Fraction(1, 2**n)
    if not consistency_holds(f, n, n + 1):
        raise SchemeInconsistent(f"approximants {n} and {n + 1} of {f.name} disagree beyond 2^-{n} + 2^-{n + 1}")
    s_n = f(n)
    gap = 2 * delta / 3 if p == 1 else 2 * delta
    psi, s = common_refinement(ball.center, s_n)
    new_values = []
    for b, d in zip(psi.values, s.values):
        if abs(b - d) >= gap:
            new_values.append(b)
        elif b >= d:
            new_values.append(d + gap)
        else:
            new_values.append(d - gap)
    center = RationalStepFunction(psi.breakpoints, tuple(new_values)).simplified()
    new_ball = RationalBall(center, delta / EIGHT_PI_UPPER, p)

    if not ball_subset(new_ball, ball):
        raise AssertionError("avoid_singleton produced a ball outside its input")
    if not excludes_by_margin(new_ball, s_n, delta):
        raise AssertionError("avoid_singleton failed to separate from the approximant")
    return new_ball


def excludes_by_margin(ball: RationalBall, approximant: RationalStepFunction, err: Fraction) -> bool:
    """``||approximant - center|| - radius > err``: then nothing within err of it is in ball."""
    c = lp_distance_pow(approximant, ball.center, ball.p)
    return compare_pi_multiple(c, ball.radius + err, ball.p) is Cmp.GREATER


def certifies_exclusion(ball: RationalBall, f: ApproximationScheme, m_max: int = 40) -> bool:
    """Some approximant of ``f`` proves ``f`` is not in ``ball``."""
    return any(excludes_by_margin(ball, f(m), Fraction(1, 2**m)) for m in range(m_max + 1))


def singleton_avoider(f: ApproximationScheme) -> IndexedStrategy:
    return IndexedStrategy(lambda b, i: avoid_singleton(b, f), shrinking=False, name=f"avoid[{f.name}]")


# -- witnesses and unions ---------------------------------------------------

MembershipTest = Callable[[ApproximationScheme, int], Membership]


@dataclass(frozen=True)
class MeagerWitness:
    """``X = ∪ X_i`` together with an avoider: ``avoider(B, i) ∩ X_i = ∅``."""

    pieces: str
    avoider: IndexedStrategy
    membership_test: MembershipTest | None = None
    targets: tuple = field(default=(), compare=False)  # schemes known to lie in X, for tests


def singleton_witness(f: ApproximationScheme) -> MeagerWitness:
    def member(g: ApproximationScheme, i: int) -> Membership:
        return Membership.INSIDE if g is f else Membership.UNKNOWN

    return MeagerWitness(pieces=f"{{{f.name}}} (every piece)", avoider=singleton_avoider(f),
                         membership_test=member, targets=(f,))


def cantor_pair(k: int, i: int) -> int:
    """Cantor pairing ``(k, i) -> (k+i)(k+i+1)/2 + i``."""
    if k < 0 or i < 0:
        raise ValueError("pairing is defined on naturals")
    s = k + i
    return s * (s + 1) // 2 + i


def cantor_unpair(j: int) -> tuple[int, int]:
    if j < 0:
        raise ValueError("pairing is defined on naturals")
    s = (isqrt(8 * j + 1) - 1) // 2
    i = j - s * (s + 1) // 2
    return s - i, i


WitnessFamily = Union[Sequence[MeagerWitness], Callable[[int], MeagerWitness]]


def union_witness(parts: WitnessFamily) -> MeagerWitness:
    """One witness for ``∪_k X^(k)``: index ``j = pair(k, i)`` routes to part k, piece i.

    A finite list is repeated cyclically in ``k`` so every natural decodes.
    """
    if callable(parts) and not isinstance(parts, Sequence):
        family = parts
        label = "indexed family"
        targets: tuple = ()
    else:
        parts = list(parts)
        if not parts:
            raise ValueError("empty union")
        family = lambda k: parts[k % len(parts)]  # noqa: E731
        label = " ∪ ".join(p.pieces for p in parts)
        targets = tuple(t for p in parts for t in p.targets)

    def move(ball: RationalBall, j: int) -> RationalBall:
        k, i = cantor_unpair(j)
        return family(k).avoider(ball, i)

    def member(g: ApproximationScheme, j: int) -> Membership:
        k, i = cantor_unpair(j)
        test = family(k).membership_test
        return test(g, i) if test else Membership.UNKNOWN

    return MeagerWitness(pieces=f"union({label})", avoider=IndexedStrategy(move, False, "union"),
                         membership_test=member, targets=targets)


# -- validation -------------------------------------------------------------

@dataclass
class ValidationReport:
    checked: int = 0
    violations: list[dict] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


def validate_strategy(s: Strategy | IndexedStrategy, sample_balls: Sequence[RationalBall],
                      indices: Sequence[int] = (0,)) -> ValidationReport:
    """Probe a strategy: containment always, radius halving when it claims to shrink."""
    report = ValidationReport()
    shrinking = isinstance(s, IndexedStrategy) and s.shrinking
    for k, ball in enumerate(sample_balls):
        for i in indices if isinstance(s, IndexedStrategy) else (None,):
            report.checked += 1
            try:
                out = s(ball, i) if i is not None else s(ball)
            except Exception as exc:  # report, don't abort the sweep
                report.violations.append({"ball": k, "index": i, "kind": "error", "detail": repr(exc)})
                continue
            if out.p != ball.p or not ball_subset(out, ball):
                report.violations.append({"ball": k, "index": i, "kind": "not-contained"})
            elif shrinking and not out.radius < ball.radius / 2:
                report.violations.append({"ball": k, "index": i, "kind": "not-shrinking"})
    return report
