import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from lpbaire.lp_space import (
    ApproximationScheme,
    Membership,
    MixedP,
    RationalBall,
    SchemeInconsistent,
    ball_contains_step,
    ball_subset,
    balls_disjoint,
    check_consistency,
    scheme_in_ball,
)
from lpbaire.step_functions import RationalStepFunction
from oracles import random_step

Z = RationalStepFunction.constant(0)
ONE = RationalStepFunction.constant(1)
B0 = RationalBall(Z, F(1))


def test_membership_examples():
    # 1/(8 pi) is irrational; the rational 1/26 < 1/(8 pi) stands in and stays inside
    assert ball_contains_step(B0, RationalStepFunction.constant(F(1, 26)))
    assert ball_contains_step(B0, Z)
    assert not ball_contains_step(B0, ONE)


def test_subset_examples():
    assert ball_subset(B0.with_radius(F(1, 2)), B0)
    # center at distance 2 pi c with c = 1/26: 2 pi / 26 + 1/4 < 1
    assert ball_subset(RationalBall(RationalStepFunction.constant(F(1, 26)), F(1, 4)), B0)
    assert not ball_subset(RationalBall(ONE, F(1)), B0)
    assert balls_disjoint(RationalBall(ONE, F(1)), RationalBall(Z, F(1)))
    with pytest.raises(MixedP):
        ball_subset(RationalBall(Z, F(1), 2), B0)


def test_scheme_membership():
    assert scheme_in_ball(ApproximationScheme.constant(Z), B0) is Membership.INSIDE
    assert scheme_in_ball(ApproximationScheme.constant(ONE), B0) is Membership.OUTSIDE
    # the constant 1/(2 pi) sits exactly on the boundary; its rational approximants never decide
    import mpmath
    target = mpmath.mpf(1) / (2 * mpmath.pi)

    def approx(m):
        q = F(int(mpmath.floor(target * 2 ** (m + 4))), 2 ** (m + 4))
        return RationalStepFunction.constant(q)

    s = ApproximationScheme(approx, 1, "boundary")
    assert not check_consistency(s, 8)
    assert scheme_in_ball(s, B0, m_max=12) is Membership.UNKNOWN


def test_ball_json_round_trip():
    b = RationalBall(random_step(random.Random(1)), F(3, 7), 2)
    assert RationalBall.from_json(b.to_json()) == b


@st.composite
def balls(draw):
    rng = random.Random(draw(st.integers(0, 2**32)))
    return RationalBall(random_step(rng), F(rng.randrange(1, 40), rng.randrange(1, 9)))


@settings(max_examples=80, deadline=None)
@given(balls(), balls(), balls())
def test_subset_is_a_partial_order(a, b, c):
    assert ball_subset(a, a)
    if ball_subset(a, b) and ball_subset(b, a):
        assert a.radius == b.radius
    if ball_subset(a, b) and ball_subset(b, c):
        assert ball_subset(a, c)
    if balls_disjoint(a, b):
        assert not ball_subset(a, b) and not ball_subset(b, a)


def test_memoization_and_bad_index():
    calls = []

    def approx(m):
        calls.append(m)
        return Z

    s = ApproximationScheme(approx)
    s(3), s(3)
    assert calls == [3]
    with pytest.raises(ValueError):
        s(-1)


def test_inconsistent_scheme_detected():
    s = ApproximationScheme(lambda m: RationalStepFunction.constant(m), 1, "drift")
    assert check_consistency(s, 3)
    assert issubclass(SchemeInconsistent, ValueError)
