"""Rational balls in L^p and L^p-computable functions as approximation schemes."""
from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .exact_numeric import Cmp, rat, rat_to_str
from .step_functions import RationalStepFunction, compare_pi_multiple, lp_distance_pow, norm_compare


class MixedP(ValueError):
    """Two objects living in different L^p spaces were combined."""


class Membership(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNKNOWN = "boundary-unknown"


@dataclass(frozen=True)
class RationalBall:
    """The open ball ``{f : ||f - center||_p < radius}``."""

    center: RationalStepFunction
    radius: Fraction
    p: int = 1

    def __post_init__(self):
        object.__setattr__(self, "radius", rat(self.radius))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if not isinstance(self.p, int) or self.p < 1:
            raise ValueError("p must be a positive integer")

    def with_radius(self, r) -> RationalBall:
        return RationalBall(self.center, rat(r), self.p)

    def to_json(self) -> dict:
        return {"center": self.center.to_json(), "radius": rat_to_str(self.radius), "p": self.p}

    @classmethod
    def from_json(cls, obj: dict) -> RationalBall:
        return cls(RationalStepFunction.from_json(obj["center"]), Fraction(obj["radius"]), int(obj.get("p", 1)))


def ball_contains_step(ball: RationalBall, g: RationalStepFunction) -> bool:
    return norm_compare(g, ball.center, ball.p, ball.radius) is Cmp.LESS


def ball_subset(b1: RationalBall, b2: RationalBall) -> bool:
    """``b1 ⊆ b2`` for open balls: ``||c1 - c2|| + r1 <= r2``."""
    if b1.p != b2.p:
        raise MixedP(f"p={b1.p} vs p={b2.p}")
    slack = b2.radius - b1.radius
    if slack < 0:
        return False
    c = lp_distance_pow(b1.center, b2.center, b1.p)
    return compare_pi_multiple(c, slack, b1.p) in (Cmp.LESS, Cmp.EQUAL)


def balls_disjoint(b1: RationalBall, b2: RationalBall) -> bool:
    """Certified ``b1 ∩ b2 = ∅``: ``||c1 - c2|| >= r1 + r2``."""
    if b1.p != b2.p:
        raise MixedP(f"p={b1.p} vs p={b2.p}")
    c = lp_distance_pow(b1.center, b2.center, b1.p)
    return compare_pi_multiple(c, b1.radius + b2.radius, b1.p) in (Cmp.GREATER, Cmp.EQUAL)


class SchemeInconsistent(ValueError):
    """Two approximants of a scheme are further apart than the guarantee allows."""


@dataclass(eq=False)
class ApproximationScheme:
    """An L^p-computable function: ``m -> psi_m`` with ``||psi_m - f||_p < 2**-m``.

    Approximants are memoized; concurrent first calls may both compute, but
    the stored value is whichever lands first, and approximants are pure.
    """

    approximant: Callable[[int], RationalStepFunction]
    p: int = 1
    name: str = "scheme"
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __call__(self, m: int) -> RationalStepFunction:
        if m < 0:
            raise ValueError("approximation index must be >= 0")
        try:
            return self._cache[m]
        except KeyError:
            pass
        value = self.approximant(m)
        with self._lock:
            return self._cache.setdefault(m, value)

    @classmethod
    def constant(cls, f: RationalStepFunction, p: int = 1, name: str | None = None) -> ApproximationScheme:
        return cls(lambda m: f, p, name or "constant")


def consistency_holds(scheme: ApproximationScheme, m: int, k: int) -> bool:
    """``||psi_m - psi_k|| <= 2**-m + 2**-k``, decided exactly."""
    bound = Fraction(1, 2**m) + Fraction(1, 2**k)
    cmp = norm_compare(scheme(m), scheme(k), scheme.p, bound)
    return cmp in (Cmp.LESS, Cmp.EQUAL)


def check_consistency(scheme: ApproximationScheme, max_index: int) -> list[tuple[int, int]]:
    """All violating index pairs up to ``max_index``."""
    return [
        (m, k)
        for m in range(max_index + 1)
        for k in range(m + 1, max_index + 1)
        if not consistency_holds(scheme, m, k)
    ]


def scheme_in_ball(f: ApproximationScheme, ball: RationalBall, m_max: int = 30) -> Membership:
    """Semi-decide ``f ∈ ball`` by scanning approximants ``0..m_max``."""
    if f.p != ball.p:
        raise MixedP(f"p={f.p} vs p={ball.p}")
    for m in range(m_max + 1):
        err = Fraction(1, 2**m)
        c = lp_distance_pow(f(m), ball.center, ball.p)
        if ball.radius > err and compare_pi_multiple(c, ball.radius - err, ball.p) in (Cmp.LESS, Cmp.EQUAL):
            return Membership.INSIDE
        if compare_pi_multiple(c, ball.radius + err, ball.p) is Cmp.GREATER:
            return Membership.OUTSIDE
    return Membership.UNKNOWN
