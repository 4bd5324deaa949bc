import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, seed, strategies as st

from kdcheck.core import (
    Alphabet,
    FiniteDistribution,
    StateDensity,
    distribution_from_json,
    distribution_to_json,
    format_rational,
    normalized_tensor_distance,
    parse_rational,
    schatten_norm,
    state_from_json,
    state_to_json,
    tensor,
    tensor_power,
    total_variation,
    trace_distance,
)


def test_parse_rational_roundtrip():
    assert parse_rational("3/4") == Fraction(3, 4)
    assert parse_rational("-2") == Fraction(-2)
    assert format_rational(Fraction(3, 4)) == "3/4"
    assert format_rational(Fraction(5)) == "5/1"


def test_parse_rational_rejects_floats():
    with pytest.raises(ValueError):
        parse_rational("0.5")
    with pytest.raises(ValueError):
        parse_rational("1e-3")


def test_alphabet_validation():
    a = Alphabet(2, 3)
    assert a.num_symbols == 8
    with pytest.raises(ValueError):
        Alphabet(1)
    with pytest.raises(ValueError):
        Alphabet(2, 0)


def test_distribution_exact_sum_enforced():
    with pytest.raises(ValueError):
        FiniteDistribution(Alphabet(2), (Fraction(1, 2), Fraction(1, 3)))
    f = FiniteDistribution(Alphabet(2), (Fraction(1, 2), Fraction(1, 2)))
    assert f.exact


def test_distribution_float_tolerance():
    f = FiniteDistribution(Alphabet(2), (0.5, 0.5 + 1e-13))
    assert not f.exact
    with pytest.raises(ValueError):
        FiniteDistribution(Alphabet(2), (0.5, 0.6))


def test_uniform_and_point_mass():
    u = FiniteDistribution.uniform(Alphabet(2, 2))
    assert u.weights == (Fraction(1, 4),) * 4
    p = FiniteDistribution.point_mass(Alphabet(2, 2), 3)
    assert p.weights[3] == 1 and sum(p.weights) == 1


def test_total_variation_oracle():
    f = FiniteDistribution(Alphabet(2), (Fraction(3, 4), Fraction(1, 4)))
    u = FiniteDistribution.uniform(Alphabet(2))
    assert total_variation(f, u) == Fraction(1, 4)


@seed(7)
@given(st.lists(st.integers(min_value=1, max_value=50), min_size=2, max_size=8))
def test_total_variation_bounds(raw):
    tot = sum(raw)
    f = FiniteDistribution(Alphabet(len(raw)),
                           tuple(Fraction(r, tot) for r in raw))
    u = FiniteDistribution.uniform(Alphabet(len(raw)))
    tv = total_variation(f, u)
    assert 0 <= tv <= 1
    assert total_variation(f, f) == 0


def test_state_from_diag_exact():
    s = StateDensity.from_diag((Fraction(1, 2), Fraction(1, 2)))
    assert s.trace() == 1
    assert s.eigenvalues() == (Fraction(1, 2), Fraction(1, 2))


def test_state_from_matrix_checks():
    with pytest.raises(ValueError):
        StateDensity.from_matrix(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        StateDensity.from_matrix(np.array([[1.5, 0.0], [0.0, -0.5]]))
    m = np.array([[0.5, 0.1], [0.1, 0.5]])
    s = StateDensity.from_matrix(m)
    assert s.is_normalized


def test_trace_distance_diagonal_matches_tv():
    f = FiniteDistribution(Alphabet(2), (Fraction(3, 4), Fraction(1, 4)))
    u = FiniteDistribution.uniform(Alphabet(2))
    sf = StateDensity.from_distribution(f)
    su = StateDensity.from_distribution(u)
    assert trace_distance(sf, su) == trace_distance(f, u) == Fraction(1, 2)
    assert total_variation(f, u) == trace_distance(f, u) / 2


def test_trace_distance_dense_oracle():
    a = StateDensity.from_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    b = StateDensity.from_matrix(np.array([[0.5, 0.5], [0.5, 0.5]]))
    # eigenvalues of the difference are +-sqrt(1/2)
    assert abs(trace_distance(a, b) - math.sqrt(2.0)) < 1e-12


def test_schatten_norms():
    s = StateDensity.from_diag((Fraction(3, 4), Fraction(1, 4)))
    assert schatten_norm(s, 1) == 1
    assert schatten_norm(s, math.inf) == Fraction(3, 4)
    v = np.array([3.0, 4.0])
    assert abs(schatten_norm(v, 2) - 5.0) < 1e-12


def test_tensor_and_power():
    f = FiniteDistribution(Alphabet(2), (Fraction(3, 4), Fraction(1, 4)))
    ff = tensor(f, f)
    assert ff.alphabet.power == 2
    assert ff.weights[0] == Fraction(9, 16)
    f3 = tensor_power(f, 3)
    assert f3.alphabet.num_symbols == 8
    assert sum(f3.weights) == 1


def test_tensor_exact_states():
    a = StateDensity.from_diag((Fraction(1, 2), Fraction(1, 2)))
    b = StateDensity.from_diag((Fraction(1, 4), Fraction(3, 4)))
    ab = tensor(a, b)
    assert ab.eigenvalues() == (Fraction(1, 8), Fraction(1, 8),
                                Fraction(3, 8), Fraction(3, 8))


def test_schatten_one_matches_eigenvalue_oracle():
    rng = np.random.default_rng(71)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = 0.5 * (a + a.conj().T)
    want = float(np.abs(np.linalg.eigvalsh(h)).sum())
    assert abs(schatten_norm(h, 1) - want) < 1e-9


def test_trace_distance_matches_direct_loop():
    rng = np.random.default_rng(72)
    f = FiniteDistribution.random_rational(Alphabet(8), rng)
    g = FiniteDistribution.random_rational(Alphabet(8), rng)
    direct = sum(abs(p - q) for p, q in zip(f.weights, g.weights))
    assert trace_distance(f, g) == direct


def test_tensor_square_subadditive():
    rng = np.random.default_rng(73)
    for _ in range(10):
        a = StateDensity.from_diag(
            FiniteDistribution.random_rational(Alphabet(3), rng).weights)
        b = StateDensity.from_diag(
            FiniteDistribution.random_rational(Alphabet(3), rng).weights)
        lhs = trace_distance(tensor(a, a), tensor(b, b))
        assert lhs <= 2 * trace_distance(a, b)


def test_normalized_tensor_distance_sequence():
    rho = StateDensity.from_diag((Fraction(3, 4), Fraction(1, 4)))
    sigma = StateDensity.from_diag((Fraction(1, 2), Fraction(1, 2)))
    base_distance = trace_distance(rho, sigma)
    for n in range(1, 5):
        val = normalized_tensor_distance(rho, sigma, n, base=2)
        # Kronecker expansion oracle
        dr = np.diag([float(x) for x in rho.diag])
        ds = np.diag([float(x) for x in sigma.diag])
        rn, sn = dr.copy(), ds.copy()
        for _ in range(n - 1):
            rn, sn = np.kron(rn, dr), np.kron(sn, ds)
        want = float(np.abs(np.diag(rn - sn)).sum()) / (n * 2)
        assert abs(float(val) - want) < 1e-12
        assert float(val) <= float(base_distance) / 2 + 1e-12


def test_normalized_tensor_distance_caps():
    rho = StateDensity.from_diag((Fraction(3, 4), Fraction(1, 4)))
    sigma = StateDensity.from_diag((Fraction(1, 2), Fraction(1, 2)))
    with pytest.raises(ValueError):
        normalized_tensor_distance(rho, sigma, 7)


def test_distribution_json_roundtrip():
    f = FiniteDistribution(Alphabet(2, 2),
                           (Fraction(1, 2), Fraction(1, 4),
                            Fraction(1, 8), Fraction(1, 8)))
    data = distribution_to_json(f)
    g = distribution_from_json(data)
    assert g.weights == f.weights and g.alphabet == f.alphabet


def test_state_json_roundtrip():
    s = StateDensity.from_diag((Fraction(1, 3), Fraction(2, 3)))
    t = state_from_json(state_to_json(s))
    assert t.eigenvalues() == s.eigenvalues()
    m = StateDensity.from_matrix(np.array([[0.5, 0.25j], [-0.25j, 0.5]]))
    m2 = state_from_json(state_to_json(m))
    assert np.allclose(m.to_matrix(), m2.to_matrix())
