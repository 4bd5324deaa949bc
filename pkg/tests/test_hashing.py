import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, seed, settings, strategies as st

from kdcheck.core import Alphabet, FiniteDistribution
from kdcheck.hashing import (
    build_family,
    collision_bound,
    collision_probability,
    is_universal,
    joint_state,
    lhl_bound,
    lhl_distance,
    lhl_report,
    max_key_length,
    verify_universality,
)

UNIFORM8 = FiniteDistribution.uniform(Alphabet(2, 3))


def test_linear_family_sizes():
    fam = build_family("linear", 2, 3, 1)
    assert fam.group_size == 8
    assert fam.zeta == Fraction(3)
    fam2 = build_family("linear", 3, 2, 2)
    assert fam2.group_size == 81
    assert fam2.zeta == Fraction(4)


def test_toeplitz_family_sizes():
    fam = build_family("toeplitz", 2, 3, 2)
    assert fam.group_size == 2 ** (3 + 2 - 1)
    assert fam.zeta == Fraction(4)


def test_families_are_universal():
    for kind, q, m, k in (("linear", 2, 2, 1), ("linear", 2, 3, 2),
                          ("linear", 3, 2, 1), ("toeplitz", 2, 3, 1),
                          ("toeplitz", 3, 2, 2), ("toeplitz", 5, 2, 1)):
        fam = build_family(kind, q, m, k)
        worst = verify_universality(fam)
        assert worst <= Fraction(1, q**k)
        assert is_universal(fam)


def test_explicit_family_and_rejection():
    # both maps send inputs 0 and 1 to the same key: that pair always collides
    maps = [[0, 0, 0, 1], [0, 0, 1, 0]]
    fam = build_family("explicit", 2, 2, 1, maps=maps)
    assert not is_universal(fam)
    assert verify_universality(fam) == 1


def test_non_prime_alphabet_rejected():
    with pytest.raises(ValueError):
        build_family("linear", 4, 2, 1)
    with pytest.raises(ValueError):
        build_family("linear", 2, 1, 2)


def test_small_linear_family_contents():
    # q=2, m=2, k=1: 2^(mk) = 4 maps, zeta = 2, worst pair collision 1/2
    fam = build_family("linear", 2, 2, 1)
    assert fam.group_size == 4 and fam.zeta == Fraction(2)
    assert verify_universality(fam) == Fraction(1, 2)
    # q=2, m=1, k=1: the zero map and the identity
    tiny = build_family("linear", 2, 1, 1)
    assert sorted(tiny.maps) == [(0, 0), (0, 1)]
    assert verify_universality(tiny) == Fraction(1, 2)


def test_collision_probability_m2_uniform_oracle():
    # zero map collides always, the three others half the time:
    # (1/16) * (1 + 3/2) = 5/32, bound (1/2 + 1/4)/4 = 3/16
    fam = build_family("linear", 2, 2, 1)
    u = FiniteDistribution.uniform(Alphabet(2, 2))
    assert collision_probability(u, fam) == Fraction(5, 32)
    assert collision_bound(u, fam) == Fraction(3, 16)


def test_joint_state_uniform_oracle():
    fam = build_family("linear", 2, 3, 1)
    js = joint_state(UNIFORM8, fam)
    assert js.key_marginal().weights == (Fraction(9, 16), Fraction(7, 16))
    assert lhl_distance(UNIFORM8, fam) == Fraction(1, 16)


def test_collision_probability_oracle():
    fam = build_family("linear", 2, 3, 1)
    assert collision_probability(UNIFORM8, fam) == Fraction(9, 128)
    assert collision_bound(UNIFORM8, fam) == Fraction(5, 64)


def test_single_bit_collision():
    fam = build_family("linear", 2, 1, 1)
    u = FiniteDistribution.uniform(Alphabet(2))
    # maps are the zero map and the identity; joint (key, seed) collision
    # mass is 1/4 + 1/16 + 1/16
    assert collision_probability(u, fam) == Fraction(3, 8)
    assert collision_bound(u, fam) == Fraction(1, 2)


def test_lhl_bound_value():
    # bound q^(-(h-k)/2) with h = 3, k = 1: 1/2
    assert abs(lhl_bound(2, 1, 3) - 0.5) < 1e-15
    assert abs(lhl_bound(2, 2, 4) - 0.5) < 1e-15


def test_lhl_report_uniform():
    fam = build_family("linear", 2, 3, 1)
    rep = lhl_report(UNIFORM8, fam)
    assert rep["satisfied"] and rep["collision_satisfied"]
    assert rep["chain_cauchy_schwarz"] and rep["chain_tail"]
    assert rep["precondition_met"] and rep["exact_comparison"]
    assert rep["distance"] == Fraction(1, 16)


def test_lhl_report_manual_h_plus():
    fam = build_family("linear", 2, 3, 1)
    rep = lhl_report(UNIFORM8, fam, h_plus=2)
    assert rep["satisfied"]
    # overstating the entropy must be flagged
    rep_bad = lhl_report(UNIFORM8, fam, h_plus=4)
    assert not rep_bad["precondition_met"]


def test_lhl_report_float_h_plus_falls_back():
    fam = build_family("linear", 2, 3, 1)
    rep = lhl_report(UNIFORM8, fam, h_plus=2.5)
    assert not rep["exact_comparison"]
    assert rep["satisfied"]


def test_max_key_length_modes():
    assert max_key_length(3, Fraction(1, 2), 2) == 1
    assert max_key_length(3, Fraction(1, 2), 2, mode="paper-literal") == 5
    assert max_key_length(10, Fraction(1, 4), 2) == 6


def test_max_key_length_clamps_to_zero():
    with pytest.warns(UserWarning):
        assert max_key_length(1, Fraction(1, 8), 2) == 0


@seed(21)
@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=32), min_size=8, max_size=8))
def test_lhl_distance_within_bound_random(raw):
    tot = sum(raw)
    f = FiniteDistribution(Alphabet(2, 3),
                           tuple(Fraction(r, tot) for r in raw))
    fam = build_family("linear", 2, 3, 1)
    rep = lhl_report(f, fam)
    assert rep["satisfied"] and rep["collision_satisfied"]
    assert rep["chain_cauchy_schwarz"] and rep["chain_tail"]


@seed(22)
@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=16), min_size=4, max_size=4))
def test_toeplitz_lhl_random(raw):
    tot = sum(raw)
    f = FiniteDistribution(Alphabet(2, 2),
                           tuple(Fraction(r, tot) for r in raw))
    fam = build_family("toeplitz", 2, 2, 1)
    rep = lhl_report(f, fam)
    assert rep["satisfied"] and rep["exact_comparison"]


def test_joint_state_sums_to_one():
    fam = build_family("linear", 3, 2, 1)
    rng = np.random.default_rng(9)
    f = FiniteDistribution.random_rational(Alphabet(3, 2), rng)
    js = joint_state(f, fam)
    total = sum(sum(row) for row in js.table)
    assert total == 1


def test_float_distribution_rejected():
    fam = build_family("linear", 2, 2, 1)
    f = FiniteDistribution(Alphabet(2, 2), (0.25, 0.25, 0.25, 0.25))
    with pytest.raises(ValueError):
        lhl_distance(f, fam)


def test_point_mass_has_zero_entropy_margin():
    # distance can reach the trivial regime when the input is deterministic
    fam = build_family("linear", 2, 2, 1)
    f = FiniteDistribution.point_mass(Alphabet(2, 2), 1)
    rep = lhl_report(f, fam)
    assert rep["bound"] >= 1.0
    assert rep["satisfied"]
