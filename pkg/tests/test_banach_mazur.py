import random
from fractions import Fraction as F

import pytest

from lpbaire.baire import certifies_exclusion, identity_strategy, shrink_strategy, singleton_witness
from lpbaire.banach_mazur import (
    BallEnumeration,
    Game,
    StrategyContractViolation,
    calkin_wilf,
    calkin_wilf_index,
    distance_case,
    gamma_for_case,
    pack_naturals,
    result_round,
    result_scheme,
    run_game,
    signed_rational,
    signed_rational_index,
    unpack_naturals,
    winning_from_witness,
    witness_from_winning,
)
from lpbaire.divergence_game import recentering_alpha
from lpbaire.exact_numeric import Cmp
from lpbaire.lp_space import ApproximationScheme, RationalBall, ball_subset, balls_disjoint, check_consistency
from lpbaire.step_functions import RationalStepFunction, lp_distance_pow
from oracles import random_step

Z = RationalStepFunction.constant(0)
ONE = RationalStepFunction.constant(1)
B0 = RationalBall(Z, F(1))


def test_identity_vs_quarter_radii():
    t = run_game(identity_strategy(), shrink_strategy(F(1, 4)), B0, 5)
    assert t.radii == [F(1, 4**k) for k in range(1, 6)]
    assert all(ball_subset(t.ball(i), t.ball(i - 1)) for i in range(5))


def test_non_shrinking_beta_rejected():
    with pytest.raises(StrategyContractViolation):
        Game(identity_strategy(), shrink_strategy(F(1, 2)), B0)


def test_alpha_leaving_ball_rejected():
    bad = identity_strategy().__class__(lambda b, i: RationalBall(b.center + 5, b.radius), False, "bad")
    with pytest.raises(StrategyContractViolation):
        run_game(bad, shrink_strategy(), B0, 1)


def test_result_round_formula():
    assert result_round(F(1), 0) == 0
    assert result_round(F(1), 3) == 3
    assert result_round(F(1, 8), 3) == 0


def test_constant_center_scheme():
    psi0 = random_step(random.Random(4))
    s = result_scheme(identity_strategy(), shrink_strategy(F(1, 4)), RationalBall(psi0, F(1)))
    assert all(s(n) == psi0 for n in range(6))


def test_consistency_on_random_pairs():
    rng = random.Random(8)
    for _ in range(6):
        alpha = recentering_alpha(rng.randrange(100))
        beta = shrink_strategy(F(1, rng.choice((3, 4, 7))))
        ball = RationalBall(random_step(rng), F(rng.randrange(1, 5)))
        s = result_scheme(alpha, beta, ball)
        assert check_consistency(s, 12) == []


def test_singleton_witness_gives_winning_beta():
    f = ApproximationScheme.constant(random_step(random.Random(9)), name="f")
    beta = winning_from_witness(singleton_witness(f))
    g = Game(recentering_alpha(3), beta, B0)
    for _ in range(3):
        out = g.play_round()
        assert certifies_exclusion(out, f, 20)


def test_beta_inside_gamma_inside_A():
    w = singleton_witness(ApproximationScheme.constant(ONE))
    beta = winning_from_witness(w)
    a = RationalBall(Z, F(1, 2))
    g, b = w.avoider(a, 0), beta(a, 0)
    assert ball_subset(b, g) and ball_subset(g, a) and b.radius < a.radius / 2


def test_three_cases():
    beta = shrink_strategy(F(1, 4))
    o, oi = RationalBall(Z, F(1)), RationalBall(ONE, F(1))
    # d = 2 pi > 1: disjoint piece, radius min(1, nu) = 1
    assert distance_case(o, oi) is Cmp.GREATER
    out = gamma_for_case(o, oi, 0, beta, Cmp.GREATER)
    assert out.radius == 1 and balls_disjoint(out, oi)
    # d = 0 < eps_i: go inside O_i, then beta
    same = RationalBall(Z, F(1, 3))
    assert distance_case(o, same) is Cmp.LESS
    out = gamma_for_case(o, same, 0, beta, Cmp.LESS)
    assert ball_subset(out, same) and ball_subset(out, o)
    # d = eps_i never comes out of an exact test (d is a rational multiple of pi);
    # drive the branch with d = pi/4 and eps_i a rational 1.6e-7 below it
    near = RationalBall(RationalStepFunction.constant(F(1, 8)), F(785398, 10**6))
    assert distance_case(o, near) is Cmp.GREATER
    out = gamma_for_case(o, near, 0, beta, Cmp.EQUAL)
    assert ball_subset(out, o) and balls_disjoint(out, near)


def test_enumeration_round_trips():
    assert [calkin_wilf(k) for k in range(5)] == [1, F(1, 2), 2, F(1, 3), F(3, 2)]
    for q in (F(7, 3), F(1, 9), F(22, 7)):
        assert calkin_wilf(calkin_wilf_index(q)) == q
    for q in (F(0), F(-5, 2), F(3, 11)):
        assert signed_rational(signed_rational_index(q)) == q
    xs = [0, 5, 1, 0, 1000]
    assert unpack_naturals(pack_naturals(xs)) == xs
    enum = BallEnumeration()
    ball = RationalBall(random_step(random.Random(6)), F(5, 3))
    dec = enum.decode(enum.encode(ball))
    assert dec.radius == ball.radius and lp_distance_pow(dec.center, ball.center) == 0


def test_witness_from_winning_avoids_target():
    f = ApproximationScheme.constant(random_step(random.Random(12)), name="f")
    gamma = witness_from_winning(winning_from_witness(singleton_witness(f))).avoider
    enum = BallEnumeration()
    o = RationalBall(Z, F(2))
    for j in range(3):
        for piece in (o, RationalBall(Z, F(1, 5)), RationalBall(ONE, F(1))):
            out = gamma(o, enum.index_of(piece, j))
            assert ball_subset(out, o)
