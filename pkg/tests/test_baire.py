import random
from fractions import Fraction as F

import pytest

from lpbaire.baire import (
    IndexedStrategy,
    avoid_singleton,
    cantor_pair,
    cantor_unpair,
    certifies_exclusion,
    excludes_by_margin,
    identity_strategy,
    shrink_strategy,
    singleton_avoider,
    singleton_witness,
    union_witness,
    validate_strategy,
)
from lpbaire.lp_space import ApproximationScheme, MixedP, RationalBall, SchemeInconsistent, ball_subset
from lpbaire.step_functions import RationalStepFunction
from oracles import random_step

Z = RationalStepFunction.constant(0)
B0 = RationalBall(Z, F(1))


def _fourier_scheme(rng):
    """Truncated sine series sampled on a dyadic grid; consistent by a crude L1 bound."""
    amps = [F(rng.randrange(-8, 9), 8) for _ in range(3)]
    import math

    def approx(m):
        cells = 2 ** (m + 8)
        vals = []
        for c in range(cells):
            x = math.pi * (2 * c + 1) / cells
            v = sum(float(a) * math.sin((k + 1) * x) for k, a in enumerate(amps))
            vals.append(F(round(v * 2 ** (m + 8)), 2 ** (m + 8)))
        return RationalStepFunction.uniform(vals)

    return ApproximationScheme(approx, 1, "sine-series")


def test_avoid_constant_zero():
    f = ApproximationScheme.constant(Z)
    out = avoid_singleton(B0, f)
    assert ball_subset(out, B0)
    assert certifies_exclusion(out, f, 10)


def test_repeated_avoidance_gives_nested_excluding_chain():
    f = ApproximationScheme.constant(random_step(random.Random(2)))
    ball = B0
    for _ in range(4):
        nxt = avoid_singleton(ball, f)
        assert ball_subset(nxt, ball) and certifies_exclusion(nxt, f, 16)
        ball = nxt


def test_far_away_target():
    f = ApproximationScheme.constant(RationalStepFunction.constant(50))
    out = avoid_singleton(B0, f)
    assert ball_subset(out, B0) and certifies_exclusion(out, f)


@pytest.mark.parametrize("kind", ["constant", "step", "fourier"])
def test_avoid_postconditions_random(kind):
    rng = random.Random({"constant": 1, "step": 2, "fourier": 3}[kind])
    for _ in range(8 if kind == "fourier" else 30):
        ball = RationalBall(random_step(rng), F(rng.randrange(1, 9), rng.randrange(1, 5)))
        if kind == "constant":
            f = ApproximationScheme.constant(RationalStepFunction.constant(F(rng.randrange(-9, 9), 4)))
        elif kind == "step":
            f = ApproximationScheme.constant(random_step(rng))
        else:
            f = _fourier_scheme(rng)
        out = avoid_singleton(ball, f)
        assert ball_subset(out, ball)
        assert certifies_exclusion(out, f, 12)


def test_avoid_rejects_mixed_p_and_inconsistent():
    with pytest.raises(MixedP):
        avoid_singleton(RationalBall(Z, F(1), 2), ApproximationScheme.constant(Z))
    bad = ApproximationScheme(lambda m: RationalStepFunction.constant(m), 1)
    with pytest.raises(SchemeInconsistent):
        avoid_singleton(B0, bad)


def test_excludes_by_margin_is_strict():
    ball = RationalBall(RationalStepFunction.constant(1), F(1))
    # ||0 - 1|| = 2 pi = 6.28 > 1 + 5
    assert excludes_by_margin(ball, Z, F(5))
    assert not excludes_by_margin(ball, Z, F(6))


def test_cantor_pairing_round_trip():
    for k in range(0, 1000, 37):
        for i in range(0, 1000, 41):
            assert cantor_unpair(cantor_pair(k, i)) == (k, i)
    assert [cantor_pair(*cantor_unpair(j)) for j in range(500)] == list(range(500))


def test_union_routes_pieces():
    f1 = ApproximationScheme.constant(RationalStepFunction.constant(F(1, 8)), name="f1")
    f2 = ApproximationScheme.constant(RationalStepFunction.constant(F(-1, 8)), name="f2")
    w1, w2 = singleton_witness(f1), singleton_witness(f2)
    single = union_witness([w1])
    assert single.avoider(B0, cantor_pair(0, 3)) == w1.avoider(B0, 3)
    u = union_witness([w1, w2])
    for k, f in ((0, f1), (1, f2), (2, f1)):
        for i in range(3):
            out = u.avoider(B0, cantor_pair(k, i))
            assert ball_subset(out, B0) and certifies_exclusion(out, f)
    assert set(u.targets) == {f1, f2}


def test_validate_strategy():
    rng = random.Random(5)
    sample = [RationalBall(random_step(rng), F(rng.randrange(1, 9), 3)) for _ in range(20)]
    assert validate_strategy(identity_strategy(), sample).valid
    assert validate_strategy(shrink_strategy(F(1, 4)), sample, indices=(0, 1)).valid
    assert shrink_strategy(F(1, 4)).shrinking and not shrink_strategy(F(1, 2)).shrinking
    runaway = IndexedStrategy(lambda b, i: RationalBall(b.center + 10, b.radius / 4), True, "runaway")
    rep = validate_strategy(runaway, sample)
    assert not rep.valid and rep.violations[0]["kind"] == "not-contained"
    lazy = IndexedStrategy(lambda b, i: b.with_radius(b.radius * F(3, 4)), True, "lazy")
    assert validate_strategy(lazy, sample).violations[0]["kind"] == "not-shrinking"


def test_avoider_as_strategy_is_valid():
    rng = random.Random(11)
    f = ApproximationScheme.constant(random_step(rng))
    sample = [RationalBall(random_step(rng), F(rng.randrange(1, 9), 3)) for _ in range(100)]
    assert validate_strategy(singleton_avoider(f), sample).valid
