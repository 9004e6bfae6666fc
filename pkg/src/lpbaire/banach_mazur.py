"""Banach-Mazur games between indexed constructors.

Round ``i`` maps ``R_{i-1}`` (with ``R_{-1} = B``) to
``R_i = beta(alpha(R_{i-1}, i), i)``.  The engine checks every move exactly:
``alpha``'s ball must sit inside ``R_{i-1}``, ``beta``'s inside ``alpha``'s
and with less than half its radius.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .baire import IndexedStrategy, MeagerWitness, cantor_pair, cantor_unpair
from .exact_numeric import Cmp, PrecisionExhausted, rat_to_str
from .lp_space import ApproximationScheme, Membership, RationalBall, ball_subset
from .step_functions import RationalStepFunction, common_refinement, compare_pi_multiple, lp_distance_pow


class StrategyContractViolation(RuntimeError):
    def __init__(self, round_index: int, player: str, detail: str = ""):
        self.round_index = round_index
        self.player = player
        super().__init__(f"round {round_index}: {player} broke the constructor contract {detail}".rstrip())


@dataclass
class GameTranscript:
    initial: RationalBall
    rounds: list[tuple[RationalBall, RationalBall]] = field(default_factory=list)
    radii: list[Fraction] = field(default_factory=list)

    def ball(self, i: int) -> RationalBall:
        """``R_i``; ``i = -1`` is the initial ball."""
        return self.initial if i < 0 else self.rounds[i][1]

    def to_json(self) -> dict:
        return {
            "initial": self.initial.to_json(),
            "rounds": [
                {
                    "index": i,
                    "alpha_move": a.to_json(),
                    "beta_move": b.to_json(),
                    "radius": rat_to_str(b.radius),
                    "verdicts": {"alpha_contained": True, "beta_contained": True, "beta_shrinks": True},
                }
                for i, (a, b) in enumerate(self.rounds)
            ],
        }


class Game:
    """A game that can be extended round by round (used lazily by result schemes)."""

    def __init__(self, alpha: IndexedStrategy, beta: IndexedStrategy, ball: RationalBall):
        if not beta.shrinking:
            raise StrategyContractViolation(0, "beta", "(beta is not declared shrinking)")
        self.alpha, self.beta = alpha, beta
        self.transcript = GameTranscript(ball)

    def play_round(self) -> RationalBall:
        t = self.transcript
        i = len(t.rounds)
        prev = t.ball(i - 1)
        a = self.alpha(prev, i)
        if a.p != prev.p or not ball_subset(a, prev):
            raise StrategyContractViolation(i, "alpha", "(move not inside current ball)")
        b = self.beta(a, i)
        if b.p != a.p or not ball_subset(b, a):
            raise StrategyContractViolation(i, "beta", "(move not inside alpha's ball)")
        if not b.radius < a.radius / 2:
            raise StrategyContractViolation(i, "beta", "(radius not below half)")
        t.rounds.append((a, b))
        t.radii.append(b.radius)
        return b

    def extend_to(self, k: int) -> GameTranscript:
        while len(self.transcript.rounds) <= k:
            self.play_round()
        return self.transcript


def run_game(alpha: IndexedStrategy, beta: IndexedStrategy, ball: RationalBall, rounds: int) -> GameTranscript:
    game = Game(alpha, beta, ball)
    for _ in range(rounds):
        game.play_round()
    return game.transcript


def result_round(radius: Fraction, n: int) -> int:
    """``min{k : radius * 2**-(k+1) <= 2**-(n+1)}``."""
    k = 0
    while radius / 2 ** (k + 1) > Fraction(1, 2 ** (n + 1)):
        k += 1
    return k


def result_scheme(alpha: IndexedStrategy, beta: IndexedStrategy, ball: RationalBall,
                  game: Game | None = None) -> ApproximationScheme:
    """The game's result as an approximation scheme.

    ``psi_n`` is the center of ``R_{k(n)}``, whose radius is below
    ``r * 2**-(k+1) <= 2**-(n+1)``; the result lies in that ball.  A round
    already played with an actual radius that small is used instead, so
    fast-shrinking strategies need not be extended further.
    """
    game = game or Game(alpha, beta, ball)

    def approximant(n: int) -> RationalStepFunction:
        target = Fraction(1, 2 ** (n + 1))
        k = result_round(ball.radius, n)
        played = game.transcript.radii
        early = next((i for i, r in enumerate(played[:k]) if r <= target), None)
        if early is not None:
            k = early
        return game.extend_to(k).ball(k).center

    scheme = ApproximationScheme(approximant, ball.p, name=f"R({alpha.name},{beta.name})")
    scheme.game = game  # type: ignore[attr-defined]
    return scheme


# -- "=>": witness to winning strategy --------------------------------------

def winning_from_witness(w: MeagerWitness) -> IndexedStrategy:
    """``beta(A, i)``: ``gamma(A, i)``'s center with radius ``min(eps/2, r/3)``.

    ``r/3`` rather than ``r/2`` keeps the shrinking inequality strict when
    ``gamma`` returns ``A`` itself.
    """
    gamma = w.avoider

    def move(ball: RationalBall, i: int) -> RationalBall:
        g = gamma(ball, i)
        return g.with_radius(min(g.radius / 2, ball.radius / 3))

    return IndexedStrategy(move, shrinking=True, name=f"win[{w.pieces}]")


# -- canonical enumeration of rational balls --------------------------------

def calkin_wilf(k: int) -> Fraction:
    """k-th positive rational (k >= 0) in Calkin-Wilf order."""
    a, b = 1, 1
    for bit in bin(k + 1)[3:]:
        a, b = (a, a + b) if bit == "0" else (a + b, b)
    return Fraction(a, b)


def calkin_wilf_index(q: Fraction) -> int:
    q = Fraction(q)
    if q <= 0:
        raise ValueError("Calkin-Wilf indexes positive rationals")
    a, b = q.numerator, q.denominator
    bits = []
    while (a, b) != (1, 1):
        if a < b:
            bits.append("0")
            b -= a
        else:
            bits.append("1")
            a -= b
    return int("1" + "".join(reversed(bits)), 2) - 1


def signed_rational(z: int) -> Fraction:
    if z == 0:
        return Fraction(0)
    t, odd = divmod(z - 1, 2)
    return calkin_wilf(t) if odd == 0 else -calkin_wilf(t)


def signed_rational_index(q: Fraction) -> int:
    if q == 0:
        return 0
    return 2 * calkin_wilf_index(abs(q)) + (1 if q > 0 else 2)


def _gamma_bits(x: int) -> str:
    y = bin(x + 1)[2:]
    return "0" * (len(y) - 1) + y


def pack_naturals(xs: list[int]) -> int:
    """Concatenated Elias-gamma codes behind a leading 1 bit, minus one."""
    return int("1" + "".join(_gamma_bits(x) for x in xs), 2) - 1


def unpack_naturals(code: int) -> list[int]:
    """Inverse of :func:`pack_naturals`; total on N (a dangling tail is ignored)."""
    bits = bin(code + 1)[3:]
    out, pos = [], 0
    while True:
        zeros = 0
        while pos + zeros < len(bits) and bits[pos + zeros] == "0":
            zeros += 1
        end = pos + 2 * zeros + 1
        if end > len(bits):
            return out
        out.append(int(bits[pos + zeros:end], 2) - 1)
        pos = end


@dataclass(frozen=True)
class BallEnumeration:
    """Surjection ``N -> rational balls`` (fixed p).

    ``b`` unpacks (Elias-gamma, so indices grow with total encoding size) to
    naturals ``[radius, w_1, v_1, ..., w_t, v_t]``; an even-length list drops
    its last entry and an empty one reads as ``[0]``.  Pieces get lengths
    proportional to the positive rationals ``cw(w_k)`` and values
    ``signed(v_k)``.  :meth:`encode` is a right inverse of :meth:`decode`.
    """

    p: int = 1

    def decode(self, b: int) -> RationalBall:
        xs = unpack_naturals(b) or [0]
        if len(xs) % 2 == 0:
            xs = xs[:-1]
        if len(xs) == 1:
            xs = xs + [0, 0]
        radius = calkin_wilf(xs[0])
        weights = [calkin_wilf(w) for w in xs[1::2]]
        values = [signed_rational(v) for v in xs[2::2]]
        total = sum(weights)
        bps, acc = [Fraction(0)], Fraction(0)
        for w in weights:
            acc += w
            bps.append(2 * acc / total)
        return RationalBall(RationalStepFunction(tuple(bps), tuple(values)), radius, self.p)

    def encode(self, ball: RationalBall) -> int:
        xs = [calkin_wilf_index(ball.radius)]
        for length, value in zip(ball.center.lengths(), ball.center.values):
            xs += [calkin_wilf_index(length), signed_rational_index(value)]
        return pack_naturals(xs)

    def piece(self, i: int) -> tuple[RationalBall, int]:
        """``i -> (O_{b(i)}, b'(i))``."""
        b, j = cantor_unpair(i)
        return self.decode(b), j

    def index_of(self, ball: RationalBall, j: int) -> int:
        return cantor_pair(self.encode(ball), j)


# -- "<=": winning strategy to witness --------------------------------------

def distance_bounds(c: Fraction, p: int, rel_bits: int = 40) -> tuple[Fraction, Fraction]:
    """Rationals ``lo < (c*pi)**(1/p) < hi`` (certified), for c > 0."""
    import math

    approx = (float(c) * math.pi) ** (1.0 / p)
    for bits in range(rel_bits, 4 * rel_bits + 1, rel_bits):
        eps = Fraction(1, 2**bits)
        lo = Fraction(approx) * (1 - eps)
        hi = Fraction(approx) * (1 + eps)
        if compare_pi_multiple(c, lo, p) is Cmp.GREATER and compare_pi_multiple(c, hi, p) is Cmp.LESS:
            return lo, hi
    raise PrecisionExhausted("could not bracket the distance")


def disjoint_sub_ball(o: RationalBall, oi: RationalBall, c: Fraction) -> RationalBall:
    """Case ``d > eps_i``: radius ``min(eps, nu)`` with ``nu = d - eps_i`` bounded below."""
    d_lo, _ = distance_bounds(c, o.p)
    nu = d_lo - oi.radius
    if nu <= 0:
        lo_bits = 80
        while nu <= 0:
            d_lo, _ = distance_bounds(c, o.p, lo_bits)
            nu = d_lo - oi.radius
            lo_bits *= 2
            if lo_bits > 4096:
                raise PrecisionExhausted("distance indistinguishable from radius")
    return o.with_radius(min(o.radius, nu))


def inner_sub_ball(o: RationalBall, oi: RationalBall, c: Fraction) -> RationalBall:
    """Case ``d < eps_i``: radius ``min(eps/4, nu)``, ``nu = eps_i - d`` bounded below."""
    if c == 0:
        nu = oi.radius
    else:
        _, d_hi = distance_bounds(c, o.p)
        nu = oi.radius - d_hi
        bits = 80
        while nu <= 0:
            _, d_hi = distance_bounds(c, o.p, bits)
            nu = oi.radius - d_hi
            bits *= 2
            if bits > 4096:
                raise PrecisionExhausted("distance indistinguishable from radius")
    return o.with_radius(min(o.radius / 4, nu))


def shifted_sub_ball(o: RationalBall, oi: RationalBall) -> RationalBall:
    """Case ``d = eps_i``: push ``psi_O`` away from ``psi_i`` by ``eps/13`` per piece.

    ``2*pi/13 < 1/2`` keeps the shifted center within ``eps/2`` of ``psi_O``;
    the radius is then chosen below both the room left in ``O`` and the
    certified gap beyond ``O_i``.
    """
    psi_o, psi_i = common_refinement(o.center, oi.center)
    w = o.radius / 13
    vals = tuple(b - w if b <= d else b + w for b, d in zip(psi_o.values, psi_i.values))
    psi_s = RationalStepFunction(psi_o.breakpoints, vals).simplified()
    ds_lo, _ = distance_bounds(lp_distance_pow(psi_s, oi.center, o.p), o.p)
    gap = ds_lo - oi.radius
    if gap <= 0:
        raise AssertionError("shifted center is not beyond O_i")
    return RationalBall(psi_s, min(o.radius / 4, gap / 2), o.p)


def gamma_for_case(o: RationalBall, oi: RationalBall, j: int, beta: IndexedStrategy, case: Cmp) -> RationalBall:
    c = lp_distance_pow(o.center, oi.center, o.p)
    if case is Cmp.GREATER:
        return disjoint_sub_ball(o, oi, c)
    if case is Cmp.LESS:
        return beta(inner_sub_ball(o, oi, c), j)
    if case is Cmp.EQUAL:
        return shifted_sub_ball(o, oi)
    raise ValueError(f"undecided case {case}")


def distance_case(o: RationalBall, oi: RationalBall) -> Cmp:
    """Exact trichotomy of ``||psi_O - psi_i||`` against ``eps_i``."""
    return compare_pi_multiple(lp_distance_pow(o.center, oi.center, o.p), oi.radius, o.p)


def witness_from_winning(beta: IndexedStrategy, enumeration: BallEnumeration | None = None) -> MeagerWitness:
    """Avoider ``gamma(O, i)`` for the pieces ``X_i`` attached to ``(O_{b(i)}, b'(i))``.

    With pi-scaled breakpoints and rational radii the distance between
    centers is ``(c*pi)**(1/p)``, which equals a positive rational radius
    only if ``c = 0``; so the ``d = eps_i`` branch is unreachable from
    :func:`distance_case` and is exercised through :func:`gamma_for_case`.
    """
    enumeration = enumeration or BallEnumeration()

    def move(o: RationalBall, i: int) -> RationalBall:
        oi, j = enumeration.piece(i)
        if oi.p != o.p:
            oi = RationalBall(oi.center, oi.radius, o.p)
        return gamma_for_case(o, oi, j, beta, distance_case(o, oi))

    def member(g: ApproximationScheme, i: int) -> Membership:
        return Membership.UNKNOWN  # X_i is defined by a universally quantified formula

    return MeagerWitness(pieces=f"pieces[{beta.name}]", avoider=IndexedStrategy(move, False, "gamma"),
                         membership_test=member)


def transcript_json(t: GameTranscript) -> str:
    return json.dumps(t.to_json(), sort_keys=True)


def iter_rounds(t: GameTranscript) -> Iterator[tuple[int, RationalBall, RationalBall]]:
    for i, (a, b) in enumerate(t.rounds):
        yield i, a, b
