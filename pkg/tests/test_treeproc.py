import math
import os
from fractions import Fraction

import numpy as np
import pytest

from kdcheck.treeproc import (
    PathEnsemble,
    grid,
    grid_factor,
    increment_stats,
    refinement_delta,
    simulate,
    simulate_ensemble,
)

REPS = 4000


def test_grid_factor_oracles():
    assert grid_factor(0) == 1
    assert grid_factor(2) == 2
    assert grid_factor(4) == 8
    assert grid_factor(6) == 48
    assert grid_factor(8) == 384


def test_grid_contents():
    g0 = grid(0)
    assert g0.times == (Fraction(0), Fraction(1))
    g2 = grid(2)
    assert g2.times == (Fraction(0), Fraction(1, 2), Fraction(1))
    g4 = grid(4)
    assert len(g4.times) == 9
    assert g4.times[1] == Fraction(1, 8)


def test_grids_nest_exactly():
    # factor 8 divides factor 48: every level-4 time appears at level 6
    t4, t6 = set(grid(4).times), set(grid(6).times)
    assert t4 <= t6
    t8 = set(grid(8).times)
    assert t6 <= t8


def test_odd_or_large_eta_rejected():
    with pytest.raises(ValueError):
        grid(3)
    with pytest.raises(ValueError):
        grid(18)
    with pytest.raises(ValueError):
        simulate_ensemble(1, 5, 10)


def test_path_starts_at_zero():
    ens = simulate_ensemble(2, 4, 50, seed=9)
    assert np.all(ens.values[:, 0, :] == 0.0)


def test_seed_determinism():
    a = simulate_ensemble(1, 6, 40, seed=5)
    b = simulate_ensemble(1, 6, 40, seed=5)
    c = simulate_ensemble(1, 6, 40, seed=6)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_thread_count_does_not_change_values():
    a = simulate_ensemble(1, 4, 700, seed=5)
    os.environ["KD_THREADS"] = "4"
    try:
        b = simulate_ensemble(1, 4, 700, seed=5)
    finally:
        del os.environ["KD_THREADS"]
    assert np.array_equal(a.values, b.values)


def test_terminal_variance_near_one():
    ens = simulate_ensemble(1, 8, REPS, seed=0)
    var = ens.values[:, -1, 0].var(ddof=1)
    assert 0.93 < var < 1.07


def test_covariance_matches_min_of_times():
    ens = simulate_ensemble(1, 6, REPS, seed=1)
    times = [float(t) for t in ens.times]
    vals = ens.values[:, :, 0]
    idx = [len(times) // 4, len(times) // 2, len(times) - 1]
    for a in idx:
        for b in idx:
            cov = np.mean(vals[:, a] * vals[:, b])
            assert abs(cov - min(times[a], times[b])) < 0.05


def test_increment_stats_standard():
    ens = simulate_ensemble(2, 6, REPS, seed=2)
    stats = increment_stats(ens, eta=4)
    assert stats["corr_violations"] == 0
    assert abs(stats["var_min"] - stats["expected_var"]) < 0.02
    assert abs(stats["var_max"] - stats["expected_var"]) < 0.02
    assert stats["max_abs_mean"] < 0.02


def test_increment_stats_rejects_literal_mode():
    ens = simulate_ensemble(1, 4, 10, seed=3, mode="paper-literal")
    with pytest.raises(ValueError):
        increment_stats(ens)


def test_keep_eta_subsamples_grid():
    full = simulate_ensemble(1, 8, 30, seed=7)
    kept = simulate_ensemble(1, 8, 30, seed=7, keep_eta=4)
    assert kept.eta == 4 and kept.values.shape[1] == 9
    ratio = grid_factor(8) // grid_factor(4)
    assert np.array_equal(kept.values, full.values[:, ::ratio, :])


def test_refinement_deltas_shrink():
    deltas = refinement_delta(1, [4, 6, 8], seed=4, reps=60)
    med = np.median(deltas, axis=0)
    assert med[0] > med[1] > med[2]


def test_literal_mode_flagged_and_different():
    std = simulate_ensemble(1, 4, 20, seed=8)
    lit = simulate_ensemble(1, 4, 20, seed=8, mode="paper-literal")
    assert not std.nonstandard and lit.nonstandard
    assert not np.array_equal(std.values, lit.values)


def test_single_path_shape():
    p = simulate(3, 6, seed=10)
    assert p.values.shape == (1, len(grid(6).times), 3)
    assert p.path().shape == (len(grid(6).times), 3)
