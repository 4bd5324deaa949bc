import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, seed, settings, strategies as st

from kdcheck.core import Alphabet, FiniteDistribution, StateDensity
from kdcheck.hashing import build_family, lhl_distance
from kdcheck.quantum import (
    Ensemble,
    basis_plus_mixed_ensemble,
    cond_min_entropy,
    e_gen,
    e_opt,
    ensemble_from_json,
    hashed_joint_blocks,
    partial_trace,
    phi_report,
    povm_completeness_residual,
    pretty_good_measurement,
    tripartite_distance,
    tripartite_report,
)
from kdcheck.verify import random_diagonal_ensemble, rotate_ensemble

DENSE_TOL = 1e-9


def diag_state(*entries):
    return StateDensity.from_diag(tuple(Fraction(e) if not isinstance(e, Fraction)
                                        else e for e in entries))


def two_state_ensemble():
    prior = FiniteDistribution(Alphabet(2), (Fraction(1, 2), Fraction(1, 2)))
    s0 = diag_state(Fraction(3, 4), Fraction(1, 4))
    s1 = diag_state(Fraction(1, 4), Fraction(3, 4))
    return Ensemble(prior, (s0, s1))


# ---------------------------------------------------------------------------
# Success probability table
# ---------------------------------------------------------------------------

def test_phi_n2_exact():
    rep = phi_report(2)
    assert rep["phi"] == Fraction(5, 9)
    assert rep["t_diag"] == Fraction(1, 2)
    assert rep["gamma_basis_coeff"] == Fraction(2, 3)
    assert rep["gamma_mixed_coeff"] == Fraction(1, 3)


def test_phi_closed_form_through_six():
    for n in range(2, 7):
        rep = phi_report(n)
        assert rep["phi"] == Fraction(n * n + 1, (n + 1) ** 2)
        assert rep["matches_closed_form"]


def test_basis_plus_mixed_average_is_maximally_mixed():
    ens = basis_plus_mixed_ensemble(3)
    avg = ens.average()
    assert avg.diag == (Fraction(1, 3),) * 3


# ---------------------------------------------------------------------------
# Measurements
# ---------------------------------------------------------------------------

def test_pgm_is_complete():
    ens = two_state_ensemble()
    povm = pretty_good_measurement(ens)
    assert povm_completeness_residual(povm) == 0


def test_pgm_complete_on_random_qutrit_ensembles():
    rng = np.random.default_rng(40)
    for _ in range(50):
        ens = rotate_ensemble(random_diagonal_ensemble(rng, 3, 3), rng)
        povm = pretty_good_measurement(ens)
        assert povm_completeness_residual(povm) < 1e-9


def test_orthogonal_pure_states_perfectly_distinguished():
    prior = FiniteDistribution(Alphabet(2), (Fraction(1, 2), Fraction(1, 2)))
    ens = Ensemble(prior, (diag_state(1, 0), diag_state(0, 1)))
    povm = pretty_good_measurement(ens)
    assert e_gen(ens, povm) == 1
    assert e_opt(ens) == 1
    assert cond_min_entropy(ens, base=2) == 0


def test_pgm_exact_two_state_oracle():
    # weighted states (3/8, 1/8) and (1/8, 3/8); average is uniform
    # PGM elements divide entrywise by (1/2, 1/2)
    ens = two_state_ensemble()
    povm = pretty_good_measurement(ens)
    assert povm.elements[0] == (Fraction(3, 4), Fraction(1, 4))
    # success functionals: sum_q max_x for the optimum, 5/8 for the PGM
    assert e_opt(ens) == Fraction(3, 4)
    assert e_gen(ens, povm) == Fraction(5, 8)
    assert e_opt(ens) ** 2 <= e_gen(ens, povm) <= e_opt(ens)


def test_error_sandwich_exact():
    rng = np.random.default_rng(41)
    for _ in range(25):
        ens = random_diagonal_ensemble(rng, int(rng.integers(2, 5)),
                                       int(rng.integers(2, 5)))
        eo, eg = e_opt(ens), e_gen(ens)
        assert eo * eo <= eg <= eo


def test_error_sandwich_dense_commuting():
    rng = np.random.default_rng(42)
    for _ in range(10):
        ens = rotate_ensemble(
            random_diagonal_ensemble(rng, 3, 3), rng)
        eo, eg = e_opt(ens), e_gen(ens)
        assert eo * eo - DENSE_TOL <= eg <= eo + DENSE_TOL


def test_rotation_preserves_error_quantities():
    rng = np.random.default_rng(43)
    ens = random_diagonal_ensemble(rng, 3, 4)
    dens = rotate_ensemble(ens, rng)
    assert abs(float(e_opt(ens)) - e_opt(dens)) < DENSE_TOL
    assert abs(float(e_gen(ens)) - e_gen(dens)) < DENSE_TOL


def test_noncommuting_ensemble_rejected_for_e_opt():
    prior = FiniteDistribution(Alphabet(2), (Fraction(1, 2), Fraction(1, 2)))
    plus = StateDensity.from_matrix(np.array([[0.5, 0.5], [0.5, 0.5]]))
    zero = StateDensity.from_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    ens = Ensemble(prior, (zero, plus))
    with pytest.raises(ValueError):
        e_opt(ens)


def test_cond_min_entropy_uniform_prior():
    # trivial side register: conditional min-entropy equals min-entropy
    prior = FiniteDistribution(Alphabet(2, 2),
                               (Fraction(1, 2), Fraction(1, 4),
                                Fraction(1, 8), Fraction(1, 8)))
    triv = Ensemble(prior, tuple([diag_state(Fraction(1))] * 4))
    h = cond_min_entropy(triv, base=4)
    assert abs(h - 0.5) < 1e-12


def test_cond_min_entropy_two_state_oracle():
    h = cond_min_entropy(two_state_ensemble(), base=2)
    assert abs(h + math.log2(0.75)) < 1e-12


# ---------------------------------------------------------------------------
# Partial trace
# ---------------------------------------------------------------------------

def test_partial_trace_product_state():
    a = np.diag([0.7, 0.3]).astype(complex)
    b = np.diag([0.5, 0.5]).astype(complex)
    joint = np.kron(a, b)
    out = partial_trace(joint, (2, 2), 1)
    assert np.allclose(out, a)
    out0 = partial_trace(joint, (2, 2), 0)
    assert np.allclose(out0, b)


def test_partial_trace_exact_diag():
    joint = diag_state(Fraction(1, 4), Fraction(1, 4),
                       Fraction(1, 4), Fraction(1, 4))
    out = partial_trace(joint, (2, 2), 1)
    assert out.diag == (Fraction(1, 2), Fraction(1, 2))


def test_partial_trace_entangled():
    # maximally entangled pair reduces to the maximally mixed state
    v = np.zeros(4)
    v[0] = v[3] = 1.0 / math.sqrt(2.0)
    joint = np.outer(v, v)
    out = partial_trace(joint, (2, 2), 1)
    assert np.allclose(out, np.eye(2) / 2.0)


# ---------------------------------------------------------------------------
# Hashed key with a side register
# ---------------------------------------------------------------------------

def test_trivial_side_register_matches_classical():
    rng = np.random.default_rng(44)
    fam = build_family("linear", 2, 2, 1)
    for _ in range(5):
        prior = FiniteDistribution.random_rational(Alphabet(2, 2), rng)
        ens = Ensemble(prior, tuple([diag_state(Fraction(1))] * 4))
        cq = hashed_joint_blocks(ens, fam)
        assert tripartite_distance(cq) == lhl_distance(prior, fam)


def test_key_sum_per_seed_is_scaled_side_state():
    # summing the joint blocks over keys must give (1/|G|) T_Q per seed
    rng = np.random.default_rng(48)
    fam = build_family("linear", 2, 2, 1)
    ens = random_diagonal_ensemble(rng, 4, 3)
    cq = hashed_joint_blocks(ens, fam)
    avg = ens.average().diag
    for g in range(cq.group_size):
        acc = [Fraction(0)] * cq.dim_q
        for kappa in range(cq.q ** cq.k):
            for i, v in enumerate(cq.blocks[kappa][g]):
                acc[i] += v
        assert tuple(acc) == tuple(a / cq.group_size for a in avg)


def test_tripartite_report_exact_and_satisfied():
    rng = np.random.default_rng(45)
    fam = build_family("linear", 2, 2, 1)
    for _ in range(10):
        ens = random_diagonal_ensemble(rng, 4, 3)
        rep = tripartite_report(ens, fam)
        assert rep["satisfied"] and rep["precondition_met"]
        assert rep["exact_comparison"]
        assert rep["distance"] <= rep["bound"] + 1e-15


def test_tripartite_manual_h_plus_flagged():
    rng = np.random.default_rng(46)
    fam = build_family("linear", 2, 2, 1)
    ens = random_diagonal_ensemble(rng, 4, 2)
    hmin = rep_hmin = tripartite_report(ens, fam)["h_min_cond"]
    rep = tripartite_report(ens, fam, h_plus=rep_hmin + 1.0)
    assert not rep["precondition_met"]


def test_side_marginal_is_average_state():
    rng = np.random.default_rng(47)
    fam = build_family("linear", 2, 2, 1)
    ens = random_diagonal_ensemble(rng, 4, 3)
    cq = hashed_joint_blocks(ens, fam)
    avg = ens.average()
    assert cq.side_marginal() == avg.diag


def test_ensemble_from_json_roundtrip():
    data = {
        "prior": {"alphabet": {"size": 2, "power": 1},
                  "weights": ["1/2", "1/2"]},
        "states": [{"dim": 2, "diag": ["3/4", "1/4"]},
                   {"dim": 2, "diag": ["1/4", "3/4"]}],
    }
    ens = ensemble_from_json(data)
    assert ens.exact
    assert e_opt(ens) == Fraction(3, 4)


def test_ensemble_validation():
    prior = FiniteDistribution(Alphabet(2), (Fraction(1, 2), Fraction(1, 2)))
    sub = StateDensity.from_diag((Fraction(1, 4), Fraction(1, 4)))
    with pytest.raises(ValueError):
        Ensemble(prior, (sub, sub))
    with pytest.raises(ValueError):
        Ensemble(prior, (diag_state(Fraction(1)),
                         diag_state(Fraction(1, 2), Fraction(1, 2))))
