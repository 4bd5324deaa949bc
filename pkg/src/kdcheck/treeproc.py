"""Brownian paths on factorial-dyadic grids with level-by-level refinement.

Level ``eta`` (even, up to 16) carries the uniform grid with
``f(eta) = (eta/2)! * 2**(eta/2)`` steps on [0, 1]; consecutive levels
nest because ``f(eta+2)/f(eta) = (eta/2 + 1) * 2`` is an integer.  Grid
times are exact Fractions.

Standard mode inserts each new grid point by sequential bridge sampling:
given the current left anchor (a, W_a) and the enclosing right anchor
(r, W_r), the value at ``t`` is Gaussian with mean the linear interpolant
and variance ``(t - a)(r - t)/(r - a)``; the single-midpoint case reduces
to ``(W_l + W_r)/2 + sqrt(r - l)/2 * Z``.  Coordinates are independent.

The "paper-literal" mode instead applies the printed interpolation rule
``W(t) = (1/eta!) * (W(l) + W(l + 1/f(eta-2))) * k + (1/f(eta)) * Z``
with ``k`` the 1-based left-to-right index of the new point at its level
and ``(l, l + 1/f(eta-2))`` the enclosing previous-level gap.  That rule
is not distribution preserving; outputs are flagged nonstandard and no
statistical claims attach to them.

Replications are simulated in fixed chunks of 256, each chunk seeded by
``SeedSequence(seed).spawn``, so results are identical for a fixed
(seed, reps) no matter how many workers ``KD_THREADS`` allows.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

MAX_ETA = 16
CHUNK = 256


def _check_eta(eta: int):
    if eta < 0 or eta % 2 != 0 or eta > MAX_ETA:
        raise ValueError("level must be even and lie in 0..%d, got %r" % (MAX_ETA, eta))


def grid_factor(eta: int) -> int:
    """Steps per unit time at level ``eta``: ``(eta/2)! * 2**(eta/2)``."""
    _check_eta(eta)
    h = eta // 2
    return math.factorial(h) * 2**h


@dataclass(frozen=True)
class TimeGrid:
    """Exact uniform grid ``{j / f(eta)}`` on [0, 1]."""

    eta: int
    factor: int
    times: Tuple[Fraction, ...]


def grid(eta: int) -> TimeGrid:
    f = grid_factor(eta)
    return TimeGrid(eta, f, tuple(Fraction(j, f) for j in range(f + 1)))


@dataclass(frozen=True)
class PathEnsemble:
    """Replicated paths on one grid: values has shape (reps, len(times), dim)."""

    dim: int
    eta: int
    times: Tuple[Fraction, ...]
    values: np.ndarray
    mode: str
    seed: int

    @property
    def reps(self) -> int:
        return self.values.shape[0]

    @property
    def nonstandard(self) -> bool:
        return self.mode == "paper-literal"

    def path(self, rep: int = 0) -> np.ndarray:
        return self.values[rep]


def _refine_standard(vals: np.ndarray, eta_prev: int, eta: int,
                     rng: np.random.Generator) -> np.ndarray:
    """One refinement step: (reps, P_prev, d) -> (reps, P_new, d)."""
    f_prev = grid_factor(eta_prev)
    f_new = grid_factor(eta)
    ratio = f_new // f_prev
    reps, _, d = vals.shape
    out = np.empty((reps, f_new + 1, d))
    out[:, ::ratio, :] = vals
    for g in range(f_prev):
        left = g * ratio
        right = (g + 1) * ratio
        # Sequential bridge fill, left to right inside the gap.
        for j in range(left + 1, right):
            a, r = j - 1, right
            # Times in units of 1/f_new; variance scales accordingly.
            mean = out[:, a, :] + (out[:, r, :] - out[:, a, :]) / (r - a)
            var = ((1.0) * (r - j)) / ((r - a) * f_new)
            out[:, j, :] = mean + math.sqrt(var) * rng.standard_normal((reps, d))
    return out


def _refine_literal(vals: np.ndarray, eta_prev: int, eta: int,
                    rng: np.random.Generator) -> np.ndarray:
    f_prev = grid_factor(eta_prev)
    f_new = grid_factor(eta)
    ratio = f_new // f_prev
    reps, _, d = vals.shape
    out = np.empty((reps, f_new + 1, d))
    out[:, ::ratio, :] = vals
    prefac = 1.0 / math.factorial(eta)
    innov = 1.0 / f_new
    k = 0
    for g in range(f_prev):
        left = g * ratio
        right = (g + 1) * ratio
        for j in range(left + 1, right):
            k += 1
            pair = out[:, left, :] + out[:, right, :]
            out[:, j, :] = prefac * pair * k + innov * rng.standard_normal((reps, d))
    return out


def _simulate_levels(dim: int, etas: Sequence[int], reps: int,
                     rng: np.random.Generator, mode: str
                     ) -> Dict[int, np.ndarray]:
    """Coupled paths for every requested level, shared randomness."""
    top = max(etas)
    refine = _refine_standard if mode == "standard" else _refine_literal
    vals = np.zeros((reps, 2, dim))
    vals[:, 1, :] = rng.standard_normal((reps, dim))
    out = {}
    if 0 in etas:
        out[0] = vals.copy()
    eta = 0
    while eta < top:
        vals = refine(vals, eta, eta + 2, rng)
        eta += 2
        if eta in etas:
            out[eta] = vals if eta == top else vals.copy()
    return out


def _check_mode(mode: str):
    if mode not in ("standard", "paper-literal"):
        raise ValueError("mode must be 'standard' or 'paper-literal'")


def _worker_count() -> int:
    raw = os.environ.get("KD_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _chunk_sizes(reps: int) -> List[int]:
    out = [CHUNK] * (reps // CHUNK)
    if reps % CHUNK:
        out.append(reps % CHUNK)
    return out


def _run_chunks(dim: int, etas: Sequence[int], reps: int, seed: int, mode: str,
                transform=None) -> Dict:
    """Simulate in fixed chunks and concatenate per-chunk results on axis 0.

    ``transform`` may reduce each chunk's level dict to smaller arrays
    (same keys across chunks) before assembly.
    """
    sizes = _chunk_sizes(reps)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def one(idx: int) -> Dict:
        rng = np.random.default_rng(seeds[idx])
        levels = _simulate_levels(dim, etas, sizes[idx], rng, mode)
        return transform(levels) if transform is not None else levels

    workers = _worker_count()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(i) for i in range(len(sizes))]
    return {key: np.concatenate([p[key] for p in parts], axis=0)
            for key in parts[0]}


def simulate(dim: int, eta: int, seed: int = 0, mode: str = "standard"
             ) -> PathEnsemble:
    """Single path on the level-``eta`` grid."""
    return simulate_ensemble(dim, eta, 1, seed=seed, mode=mode)


def simulate_ensemble(dim: int, eta: int, reps: int, seed: int = 0,
                      mode: str = "standard", keep_eta: Optional[int] = None
                      ) -> PathEnsemble:
    """Replicated paths; ``keep_eta`` returns the coarser subgrid only.

    Simulation always runs to level ``eta``; restricting the returned grid
    keeps memory at desk scale for large ensembles.
    """
    _check_eta(eta)
    _check_mode(mode)
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    if reps < 1:
        raise ValueError("replication count must be >= 1")
    out_eta = eta if keep_eta is None else keep_eta
    _check_eta(out_eta)
    if out_eta > eta:
        raise ValueError("keep_eta cannot exceed the simulated level")
    ratio = grid_factor(eta) // grid_factor(out_eta)

    def keep(levels: Dict[int, np.ndarray]) -> Dict[int, np.ndarray]:
        vals = levels[eta]
        if ratio > 1:
            vals = vals[:, ::ratio, :].copy()
        return {out_eta: vals}

    levels = _run_chunks(dim, [eta], reps, seed, mode, transform=keep)
    return PathEnsemble(dim, out_eta, grid(out_eta).times, levels[out_eta],
                        mode, seed)


def increment_stats(ensemble: PathEnsemble, eta: Optional[int] = None) -> dict:
    """Mean, variance, and pairwise correlation of disjoint grid increments.

    ``eta`` selects a coarser subgrid of the ensemble (default: its own).
    Correlations are computed across all increment-coordinate series;
    entries beyond ``4/sqrt(reps)`` in absolute value are counted as
    violations.
    """
    if ensemble.nonstandard:
        raise ValueError("increment statistics attach to standard mode only")
    if ensemble.reps < 2:
        raise ValueError("increment statistics need at least 2 replications")
    eta = ensemble.eta if eta is None else eta
    _check_eta(eta)
    ratio = grid_factor(ensemble.eta) // grid_factor(eta)
    if grid_factor(eta) * ratio != grid_factor(ensemble.eta):
        raise ValueError("requested level is not a subgrid")
    vals = ensemble.values[:, ::ratio, :]
    reps, n_pts, d = vals.shape
    inc = np.diff(vals, axis=1)  # (reps, n_inc, d)
    n_inc = n_pts - 1
    dt = 1.0 / n_inc
    series = inc.reshape(reps, n_inc * d)
    means = series.mean(axis=0)
    variances = series.var(axis=0, ddof=1)
    corr = np.corrcoef(series, rowvar=False)
    off = corr[np.triu_indices(n_inc * d, k=1)]
    threshold = 4.0 / math.sqrt(reps)
    return {
        "eta": eta,
        "reps": reps,
        "n_increments": n_inc,
        "dt": dt,
        "max_abs_mean": float(np.abs(means).max()),
        "var_min": float(variances.min()),
        "var_max": float(variances.max()),
        "expected_var": dt,
        "max_abs_corr": float(np.abs(off).max()) if off.size else 0.0,
        "corr_threshold": threshold,
        "corr_violations": int((np.abs(off) > threshold).sum()),
        "n_pairs": int(off.size),
    }


def refinement_delta(dim: int, etas: Sequence[int], seed: int = 0,
                     reps: int = 1, mode: str = "standard") -> np.ndarray:
    """Sup deviation of each level from the previous level's interpolant.

    For each ``eta`` in ``etas`` (even, >= 2) the coupled pair
    ``(W_{eta-2}, W_eta)`` is simulated with shared randomness and
    ``sup_t |W_eta(t) - interp(W_{eta-2})(t)|`` over the level-``eta``
    grid is recorded.  Returns shape (reps, len(etas)).
    """
    _check_mode(mode)
    etas = list(etas)
    if not etas:
        raise ValueError("need at least one level")
    for eta in etas:
        _check_eta(eta)
        if eta < 2:
            raise ValueError("refinement levels start at 2")
    wanted = sorted({e for eta in etas for e in (eta - 2, eta)})

    def deltas(levels: Dict[int, np.ndarray]) -> Dict[str, np.ndarray]:
        chunk_reps = levels[wanted[0]].shape[0]
        out = np.empty((chunk_reps, len(etas)))
        for col, eta in enumerate(etas):
            coarse = levels[eta - 2]
            fine = levels[eta]
            ratio = grid_factor(eta) // grid_factor(eta - 2)
            # Linear interpolation of the coarse path onto the fine grid.
            idx = np.arange(fine.shape[1])
            g = idx // ratio
            frac = (idx % ratio) / ratio
            g_next = np.minimum(g + 1, coarse.shape[1] - 1)
            interp = (coarse[:, g, :] * (1.0 - frac)[None, :, None]
                      + coarse[:, g_next, :] * frac[None, :, None])
            out[:, col] = np.abs(fine - interp).max(axis=(1, 2))
        return {"delta": out}

    return _run_chunks(dim, wanted, reps, seed, mode, transform=deltas)["delta"]
