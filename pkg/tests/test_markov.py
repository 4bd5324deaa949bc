import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, seed, settings, strategies as st

from kdcheck.markov import (
    Poly,
    RationalFunction,
    TransitionMatrix,
    first_return,
    markov_report,
    n_step,
    period,
    poly_gcd,
    radius_of_convergence,
    resolvent,
    theta_gf,
)

SWAP = TransitionMatrix.build([[0, 1], [1, 0]])
LAZY = TransitionMatrix.build(
    [[Fraction(1, 2), Fraction(1, 2)], [Fraction(1, 2), Fraction(1, 2)]])


def frac(a, b=1):
    return Fraction(a, b)


# ---------------------------------------------------------------------------
# Polynomial layer
# ---------------------------------------------------------------------------

def test_poly_arithmetic():
    p = Poly([frac(1), frac(2)])          # 1 + 2r
    q = Poly([frac(0), frac(1)])          # r
    assert (p * q).c == (frac(0), frac(1), frac(2))
    assert (p + q).c == (frac(1), frac(3))
    assert (p - p).is_zero()
    assert p.degree == 1 and Poly.zero().degree == -1


def test_poly_divmod_and_gcd():
    # (1 - r^2) = (1 - r)(1 + r)
    p = Poly([frac(1), frac(0), frac(-1)])
    d = Poly([frac(1), frac(-1)])
    quo, rem = p.divmod(d)
    assert rem.is_zero() and quo.c == (frac(1), frac(1))
    g = poly_gcd(p, d)
    assert g.monic().c == d.monic().c


def test_poly_eval():
    p = Poly([frac(1), frac(-1, 2)])
    assert p.eval(frac(1, 2)) == frac(3, 4)
    assert abs(p.eval(0.5) - 0.75) < 1e-15


def test_rational_function_reduces():
    # (1 - r^2)/(1 - r) reduces to 1 + r
    num = Poly([frac(1), frac(0), frac(-1)])
    den = Poly([frac(1), frac(-1)])
    rf = RationalFunction(num, den)
    assert rf.den == Poly.one() or rf.den.degree == 0
    assert rf.eval(frac(1, 3)) == frac(4, 3)


def test_rational_function_series_geometric():
    # 1/(1 - r)
    rf = RationalFunction(Poly.one(), Poly([frac(1), frac(-1)]))
    assert rf.series(5) == (frac(1),) * 6


def test_display_of_reference_forms():
    assert resolvent(LAZY, 0, 0).display() == "(1-r/2)/(1-r)"
    assert theta_gf(LAZY, 0).display() == "(r/2)/(1-r/2)"
    assert theta_gf(SWAP, 0).display() == "r^2"


# ---------------------------------------------------------------------------
# Transition matrices
# ---------------------------------------------------------------------------

def test_build_validates_rows():
    with pytest.raises(ValueError):
        TransitionMatrix.build([[Fraction(1, 2), Fraction(1, 3)],
                                [Fraction(1, 2), Fraction(1, 2)]])
    with pytest.raises(ValueError):
        TransitionMatrix.build([[Fraction(3, 2), Fraction(-1, 2)],
                                [0, 1]])


def test_n_step_zero_is_identity():
    p0 = n_step(SWAP, 0)
    assert p0[0][0] == 1 and p0[0][1] == 0 and p0[1][1] == 1


def test_n_step_oracle():
    p2 = n_step(SWAP, 2)
    assert p2[0][0] == 1 and p2[0][1] == 0
    p3 = n_step(LAZY, 3)
    assert p3[0][0] == Fraction(1, 2)


def test_first_return_starts_at_diagonal_entry():
    rng_rows = [[Fraction(1, 3), Fraction(2, 3)],
                [Fraction(3, 5), Fraction(2, 5)]]
    chain = TransitionMatrix.build(rng_rows)
    for i in range(2):
        assert first_return(chain, i, 3)[0] == chain.rows[i][i]


def test_resolvent_radius_at_pole_one():
    # 1/(1 - r^2) has poles at +-1
    rad = radius_of_convergence(resolvent(SWAP, 0, 0))
    assert abs(rad - 1.0) < 1e-9


def test_first_return_swap():
    assert first_return(SWAP, 0, 5) == (frac(0), frac(1), frac(0),
                                        frac(0), frac(0))


def test_first_return_lazy():
    want = tuple(Fraction(1, 2**n) for n in range(1, 7))
    assert first_return(LAZY, 0, 6) == want


def test_theta_series_matches_recursion():
    theta = theta_gf(LAZY, 0)
    assert theta.series(6)[1:] == first_return(LAZY, 0, 6)
    assert theta.series(6)[0] == 0


def test_theta_at_one_for_irreducible():
    assert theta_gf(SWAP, 0).eval(frac(1)) == 1
    assert theta_gf(LAZY, 1).eval(frac(1)) == 1


def test_radius_oracles():
    assert radius_of_convergence(theta_gf(SWAP, 0)) == math.inf
    assert abs(radius_of_convergence(theta_gf(LAZY, 0)) - 2.0) < 1e-9


def test_period_oracles():
    assert period(SWAP, 0) == 2
    assert period(LAZY, 0) == 1


def test_absorbing_state_theta_below_one():
    # from state 0 the walk may get absorbed at 1 and never return
    chain = TransitionMatrix.build(
        [[Fraction(1, 2), Fraction(1, 2)], [0, 1]])
    theta = theta_gf(chain, 0)
    assert theta.eval(frac(1)) == Fraction(1, 2)
    assert not chain.is_irreducible()


def test_markov_report_fields():
    rep = markov_report(LAZY, 0, series_terms=4)
    assert rep["P_gf"] == "(1-r/2)/(1-r)"
    assert rep["Theta_gf"] == "(r/2)/(1-r/2)"
    assert rep["theta_series"] == [frac(1, 2), frac(1, 4),
                                   frac(1, 8), frac(1, 16)]
    assert rep["irreducible"] and rep["theta_at_1"] == 1
    assert rep["period"] == 1


def random_chain(raw, n):
    rows = []
    for i in range(n):
        row = raw[i * n:(i + 1) * n]
        tot = sum(row)
        rows.append([Fraction(r, tot) for r in row])
    return TransitionMatrix.build(rows)


@seed(31)
@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=9), min_size=9, max_size=9))
def test_resolvent_series_equals_powers(raw):
    chain = random_chain(raw, 3)
    powers = [n_step(chain, n) for n in range(7)]
    for i in range(3):
        for j in range(3):
            series = resolvent(chain, i, j).series(6)
            assert all(series[n] == powers[n][i][j] for n in range(7))


@seed(32)
@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=9), min_size=4, max_size=4))
def test_renewal_convolution(raw):
    chain = random_chain(raw, 2)
    for i in range(2):
        t = theta_gf(chain, i).series(8)
        p = resolvent(chain, i, i).series(8)
        for n in range(1, 9):
            conv = sum((t[m] * p[n - m] for m in range(1, n + 1)),
                       start=Fraction(0))
            assert conv == p[n]


@seed(33)
@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=9), min_size=4, max_size=4))
def test_positive_chain_radius_beyond_one(raw):
    chain = random_chain(raw, 2)
    for i in range(2):
        assert radius_of_convergence(theta_gf(chain, i)) > 1 + 1e-6
