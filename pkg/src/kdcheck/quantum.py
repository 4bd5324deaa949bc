"""Classical-quantum ensembles, pretty-good measurement, guessing bounds.

An :class:`Ensemble` pairs a prior on symbols with one density operator
per symbol.  The pretty-good measurement conjugates every weighted state
by the inverse square root of the ensemble average; its success
probability ``e_gen`` sandwiches the optimal guessing probability
``e_opt`` via ``e_opt**2 <= e_gen <= e_opt``.  Diagonal ensembles with
rational entries evaluate in exact Fraction arithmetic; commuting dense
ensembles are rotated once into a verified common eigenbasis; ``e_opt``
is defined on commuting ensembles only.

Hashing a quantum side register: ``hashed_joint_blocks`` forms the
subnormalized blocks ``(1/|G|) sum_{x: g(x)=kappa} T_x`` of the
(key, member, side) state, and ``tripartite_report`` checks the exact
distance of that state from (uniform key) x (member) x (side marginal)
against ``q**-((h_plus - k)/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .core import (
    Alphabet,
    FiniteDistribution,
    StateDensity,
    distribution_from_json,
    state_from_json,
)
from .hashing import HashFamily, _q_pow_neg, lhl_bound

COMMUTE_TOL = 1e-9
PINV_CUTOFF = 1e-12


class Ensemble:
    """Prior plus one normalized state per symbol, all of one dimension."""

    __slots__ = ("alphabet", "prior", "states", "dim", "exact")

    def __init__(self, prior: FiniteDistribution, states: Sequence[StateDensity]):
        states = tuple(states)
        if len(states) != prior.alphabet.num_symbols:
            raise ValueError(
                "need one state per symbol: %d states for %d symbols"
                % (len(states), prior.alphabet.num_symbols)
            )
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise ValueError("all states must share one dimension")
        for s in states:
            if not s.is_normalized:
                raise ValueError("ensemble states must have trace 1")
        object.__setattr__(self, "alphabet", prior.alphabet)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "dim", dims.pop())
        object.__setattr__(
            self, "exact",
            prior.exact and all(s.is_diagonal and s.exact for s in states),
        )

    def __setattr__(self, name, value):
        raise AttributeError("Ensemble is immutable")

    def weighted(self, x: int):
        """Subnormalized operator ``p_x rho_x`` (diag tuple or dense array)."""
        p = self.prior.weights[x]
        s = self.states[x]
        if s.is_diagonal and self.exact:
            return tuple(p * d for d in s.diag)
        return float(p) * s.to_matrix()

    def average(self) -> StateDensity:
        """Ensemble average ``sum_x p_x rho_x``."""
        if self.exact:
            acc = [Fraction(0)] * self.dim
            for x in range(len(self.states)):
                for i, d in enumerate(self.weighted(x)):
                    acc[i] += d
            return StateDensity.from_diag(acc)
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for x in range(len(self.states)):
            total += self.weighted(x)
        return StateDensity.from_matrix(total)


def average_state(ensemble: Ensemble) -> StateDensity:
    return ensemble.average()


@dataclass(frozen=True)
class Povm:
    """Measurement elements summing to the identity on ``support``.

    ``elements`` are diagonal tuples or dense Hermitian arrays.  When the
    ensemble average is rank deficient the completeness check runs against
    the support projector instead of the identity.
    """

    dim: int
    elements: Tuple
    exact: bool
    complete_on_support_only: bool = False

    def element_matrix(self, x: int) -> np.ndarray:
        e = self.elements[x]
        if isinstance(e, tuple):
            return np.diag(np.array([float(v) for v in e], dtype=complex))
        return e


def povm_completeness_residual(povm: Povm, average: Optional[StateDensity] = None):
    """Largest deviation of ``sum_x Gamma_x`` from its completeness target.

    The target is the identity, or the support projector of ``average``
    when the POVM was built on a rank-deficient ensemble average.  Exact
    zero Fraction on the exact path of a full-rank diagonal ensemble.
    """
    if povm.exact and all(isinstance(e, tuple) for e in povm.elements):
        totals = [sum((e[i] for e in povm.elements), start=Fraction(0))
                  for i in range(povm.dim)]
        if povm.complete_on_support_only:
            if average is None or not average.is_diagonal:
                raise ValueError("support completeness needs the diagonal average")
            target = [Fraction(0) if d == 0 else Fraction(1) for d in average.diag]
        else:
            target = [Fraction(1)] * povm.dim
        return max(abs(t - g) for t, g in zip(target, totals))
    total = np.zeros((povm.dim, povm.dim), dtype=complex)
    for x in range(len(povm.elements)):
        total += povm.element_matrix(x)
    if povm.complete_on_support_only:
        if average is None:
            raise ValueError("support completeness needs the ensemble average")
        m = average.to_matrix()
        evals, vecs = np.linalg.eigh(m)
        proj = (vecs * (evals > PINV_CUTOFF)) @ vecs.conj().T
        return float(np.abs(total - proj).max())
    return float(np.abs(total - np.eye(povm.dim)).max())


def _commutes(mats: Sequence[np.ndarray], tol: float = COMMUTE_TOL) -> bool:
    for a in range(len(mats)):
        for b in range(a + 1, len(mats)):
            comm = mats[a] @ mats[b] - mats[b] @ mats[a]
            if np.abs(comm).max() > tol:
                return False
    return True


def _common_eigenbasis(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Unitary diagonalizing every matrix of a commuting family at once."""
    if not _commutes(mats):
        raise ValueError("ensemble states do not commute within 1e-9")
    dim = mats[0].shape[0]
    rng = np.random.default_rng(0x5EED)
    for _ in range(8):
        w = rng.random(len(mats)) + 0.5
        mix = sum(wi * m for wi, m in zip(w, mats))
        _, v = np.linalg.eigh(mix)
        ok = True
        for m in mats:
            rot = v.conj().T @ m @ v
            if np.abs(rot - np.diag(np.diag(rot))).max() > COMMUTE_TOL:
                ok = False
                break
        if ok:
            return v
    raise ValueError("failed to find a common eigenbasis within tolerance")


def _diagonals_in_common_basis(ensemble: Ensemble):
    """Weighted operators as diagonal vectors: exact Fractions or floats."""
    if ensemble.exact:
        return [ensemble.weighted(x) for x in range(len(ensemble.states))], None
    mats = [np.asarray(ensemble.weighted(x), dtype=complex)
            if not isinstance(ensemble.weighted(x), tuple)
            else np.diag([float(v) for v in ensemble.weighted(x)]).astype(complex)
            for x in range(len(ensemble.states))]
    if all(np.abs(m - np.diag(np.diag(m))).max() < COMMUTE_TOL for m in mats):
        return [tuple(float(np.real(d)) for d in np.diag(m)) for m in mats], None
    basis = _common_eigenbasis(mats)
    out = []
    for m in mats:
        rot = basis.conj().T @ m @ basis
        out.append(tuple(float(np.real(d)) for d in np.diag(rot)))
    return out, basis


def pretty_good_measurement(ensemble: Ensemble) -> Povm:
    """PGM ``Gamma_x = T^(-1/2) (p_x rho_x) T^(-1/2)`` on the support of T.

    Diagonal rational ensembles stay exact (entrywise division).  Dense
    ensembles use an eigendecomposition with pseudo-inverse cutoff 1e-12.
    """
    if ensemble.exact:
        t = ensemble.average().diag
        elements = []
        for x in range(len(ensemble.states)):
            wx = ensemble.weighted(x)
            elements.append(tuple(
                (d / ti if ti != 0 else Fraction(0)) for d, ti in zip(wx, t)
            ))
        rank_deficient = any(ti == 0 for ti in t)
        return Povm(ensemble.dim, tuple(elements), exact=True,
                    complete_on_support_only=rank_deficient)
    t = ensemble.average().to_matrix()
    evals, vecs = np.linalg.eigh(t)
    inv_sqrt = np.where(evals > PINV_CUTOFF, 1.0 / np.sqrt(np.clip(evals, PINV_CUTOFF, None)), 0.0)
    s = (vecs * inv_sqrt) @ vecs.conj().T
    elements = []
    for x in range(len(ensemble.states)):
        wx = ensemble.weighted(x)
        if isinstance(wx, tuple):
            wx = np.diag([float(v) for v in wx]).astype(complex)
        g = s @ wx @ s
        elements.append(0.5 * (g + g.conj().T))
    rank_deficient = bool((evals <= PINV_CUTOFF).any())
    return Povm(ensemble.dim, tuple(elements), exact=False,
                complete_on_support_only=rank_deficient)


def e_gen(ensemble: Ensemble, povm: Optional[Povm] = None):
    """Success probability ``sum_x tr((p_x rho_x) Gamma_x)`` of a measurement.

    Defaults to the pretty-good measurement.  Exact Fraction for diagonal
    rational ensembles with an exact POVM.
    """
    if povm is None:
        povm = pretty_good_measurement(ensemble)
    if ensemble.exact and povm.exact:
        acc = Fraction(0)
        for x in range(len(ensemble.states)):
            wx = ensemble.weighted(x)
            gx = povm.elements[x]
            acc += sum((a * b for a, b in zip(wx, gx)), start=Fraction(0))
        return acc
    acc = 0.0
    for x in range(len(ensemble.states)):
        wx = ensemble.weighted(x)
        if isinstance(wx, tuple):
            wx = np.diag([float(v) for v in wx]).astype(complex)
        acc += float(np.real(np.trace(wx @ povm.element_matrix(x))))
    return acc


def e_opt(ensemble: Ensemble):
    """Optimal guessing probability for commuting ensembles.

    In a common eigenbasis the best strategy picks, per basis vector, the
    symbol with the largest weighted diagonal entry, so
    ``e_opt = sum_i max_x (p_x rho_x)_{ii}``.  Exact for diagonal rational
    ensembles; raises for non-commuting ensembles.
    """
    diags, _ = _diagonals_in_common_basis(ensemble)
    dim = ensemble.dim
    zero = Fraction(0) if ensemble.exact else 0.0
    total = zero
    for i in range(dim):
        total += max(d[i] for d in diags)
    return total


def cond_min_entropy(ensemble: Ensemble, base: Optional[int] = None) -> float:
    """``-log_q e_opt``: min-entropy of the symbol given the side register."""
    b = float(base if base is not None else ensemble.alphabet.size)
    if not b > 1:
        raise ValueError("logarithm base must exceed 1")
    return -math.log(float(e_opt(ensemble))) / math.log(b)


def partial_trace(state, dims: Sequence[int], traced: Union[int, Sequence[int]]):
    """Trace out the ``traced`` tensor factor(s) of a composite operator.

    ``dims`` declares the factorization; ``traced`` indexes into it.
    Diagonal states reduce exactly; dense inputs return a dense result.
    """
    dims = tuple(int(d) for d in dims)
    if isinstance(traced, (int, np.integer)):
        traced = (int(traced),)
    traced = tuple(sorted(set(int(t) for t in traced)))
    if any(not 0 <= t < len(dims) for t in traced):
        raise ValueError("traced subsystem index out of range")
    if len(traced) == len(dims):
        raise ValueError("cannot trace out every subsystem")
    total = 1
    for d in dims:
        total *= d
    if isinstance(state, StateDensity) and state.is_diagonal:
        if total != state.dim:
            raise ValueError("declared dims do not match the state dimension")
        arr = np.array(state.diag, dtype=object).reshape(dims)
        arr = arr.sum(axis=traced)
        return StateDensity.from_diag(tuple(arr.ravel()))
    m = state.to_matrix() if isinstance(state, StateDensity) else np.asarray(state, dtype=complex)
    if m.shape != (total, total):
        raise ValueError("declared dims do not match the operator shape")
    t = m.reshape(dims + dims)
    for ax in sorted(traced, reverse=True):
        half = t.ndim // 2
        t = np.trace(t, axis1=ax, axis2=ax + half)
    keep = int(np.prod([d for i, d in enumerate(dims) if i not in traced]))
    out = t.reshape(keep, keep)
    if isinstance(state, StateDensity):
        return StateDensity.from_matrix(out)
    return out


# ---------------------------------------------------------------------------
# Hashed key with a quantum side register
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CqKeyState:
    """Blocks of the (key, member, side register) state.

    ``blocks[kappa][g]`` is the subnormalized side-register operator
    ``(1/|G|) sum_{x: g(x)=kappa} p_x rho_x`` as a diagonal tuple (exact
    path) or dense array.  Block-diagonal structure over the classical
    registers means Schatten-1 norms decompose as sums over blocks.
    """

    q: int
    k: int
    group_size: int
    dim_q: int
    blocks: Tuple
    exact: bool

    def side_marginal(self):
        """``T_Q``: sum of all blocks, trace-1 side-register state."""
        if self.exact:
            acc = [Fraction(0)] * self.dim_q
            for row in self.blocks:
                for b in row:
                    for i, v in enumerate(b):
                        acc[i] += v
            return tuple(acc)
        acc = np.zeros((self.dim_q, self.dim_q), dtype=complex)
        for row in self.blocks:
            for b in row:
                acc += b
        return acc

    def member_blocks(self):
        """``T_GQ`` blocks per member: key register traced out."""
        if self.exact:
            out = []
            for g in range(self.group_size):
                acc = [Fraction(0)] * self.dim_q
                for kappa in range(len(self.blocks)):
                    for i, v in enumerate(self.blocks[kappa][g]):
                        acc[i] += v
                out.append(tuple(acc))
            return tuple(out)
        out = []
        for g in range(self.group_size):
            acc = np.zeros((self.dim_q, self.dim_q), dtype=complex)
            for kappa in range(len(self.blocks)):
                acc += self.blocks[kappa][g]
            out.append(acc)
        return tuple(out)


def hashed_joint_blocks(ensemble: Ensemble, family: HashFamily) -> CqKeyState:
    """Apply every family member to the symbol register of an ensemble."""
    n_in = family.q**family.m
    if ensemble.alphabet.num_symbols != n_in:
        raise ValueError("ensemble alphabet does not match the family input")
    diags, basis = _diagonals_in_common_basis(ensemble)
    exact = ensemble.exact
    size = family.group_size
    n_out = family.q**family.k
    share = Fraction(1, size) if exact else 1.0 / size
    zero_block = ((Fraction(0),) * ensemble.dim if exact
                  else (0.0,) * ensemble.dim)
    blocks = [[list(zero_block) for _ in range(size)] for _ in range(n_out)]
    for g, table in enumerate(family.maps):
        for x in range(n_in):
            d = diags[x]
            row = blocks[table[x]][g]
            for i in range(ensemble.dim):
                row[i] += share * d[i]
    blocks = tuple(tuple(tuple(b) for b in row) for row in blocks)
    return CqKeyState(family.q, family.k, size, ensemble.dim, blocks, exact)


def tripartite_distance(cq: CqKeyState):
    """Exact distance of the hashed state from uniform-key x member x side.

    ``(1/q) sum_{kappa,g} || block(kappa,g) - q**-k (1/|G|) T_Q ||_1``;
    diagonal blocks make each trace norm a plain absolute sum.
    """
    t_q = cq.side_marginal()
    if cq.exact:
        scale = Fraction(1, cq.q**cq.k * cq.group_size)
        total = Fraction(0)
        for row in cq.blocks:
            for b in row:
                for v, t in zip(b, t_q):
                    total += abs(v - scale * t)
        return total / cq.q
    scale = 1.0 / (cq.q**cq.k * cq.group_size)
    total = 0.0
    for row in cq.blocks:
        for b in row:
            diff = np.asarray(b) - scale * t_q
            if diff.ndim == 1:
                total += float(np.abs(diff).sum())
            else:
                total += float(np.abs(np.linalg.eigvalsh(diff)).sum())
    return total / cq.q


def tripartite_report(ensemble: Ensemble, family: HashFamily,
                      h_plus=None) -> dict:
    """Distance, bound ``q**-((h_plus-k)/2)``, and exact verdict.

    ``h_plus`` defaults to the conditional min-entropy ``-log_q e_opt``,
    making the squared-bound comparison exact on rational ensembles.
    """
    cq = hashed_joint_blocks(ensemble, family)
    dist = tripartite_distance(cq)
    q, k = family.q, family.k
    eopt = e_opt(ensemble)
    if h_plus is None:
        q_pow_neg_h = eopt  # q**-h_min(X|Q), exact on the rational path
        h_val = -math.log(float(eopt)) / math.log(q)
    else:
        try:
            q_pow_neg_h = _q_pow_neg(q, h_plus, None)
        except ValueError:
            q_pow_neg_h = float(q) ** (-float(h_plus))
        h_val = float(h_plus)
    bound_sq = (Fraction(q**k) * q_pow_neg_h
                if isinstance(q_pow_neg_h, Fraction) and isinstance(dist, Fraction)
                else float(q**k) * float(q_pow_neg_h))
    satisfied = dist * dist <= bound_sq
    precondition_met = q_pow_neg_h >= eopt  # h_plus <= h_min(X|Q)
    return {
        "q": q,
        "m": family.m,
        "k": k,
        "group_size": family.group_size,
        "dim_q": ensemble.dim,
        "distance": dist,
        "bound": lhl_bound(q, k, h_val),
        "satisfied": bool(satisfied),
        "h_min_cond": h_val,
        "e_opt": eopt,
        "precondition_met": bool(precondition_met),
        "exact_comparison": isinstance(dist, Fraction)
        and isinstance(q_pow_neg_h, Fraction),
    }


# ---------------------------------------------------------------------------
# The uniform basis-plus-mixed ensemble family
# ---------------------------------------------------------------------------

def basis_plus_mixed_ensemble(n: int) -> Ensemble:
    """Uniform ensemble of the ``n`` basis states and the maximally mixed state.

    ``n + 1`` symbols in dimension ``n``; the ensemble average is ``I/n``.
    All entries rational, so the PGM path is exact.
    """
    if n < 2:
        raise ValueError("dimension must be >= 2")
    prior = FiniteDistribution.uniform(Alphabet(n + 1))
    states = []
    for xi in range(n):
        diag = [Fraction(0)] * n
        diag[xi] = Fraction(1)
        states.append(StateDensity.from_diag(diag))
    states.append(StateDensity.from_diag([Fraction(1, n)] * n))
    return Ensemble(prior, states)


def phi_report(n: int) -> dict:
    """Exact PGM table for the basis-plus-mixed ensemble of dimension ``n``.

    The average is ``I/n``; conjugation scales every weighted state by
    ``n``, giving projector elements with coefficient ``n/(n+1)``, the
    identity element with coefficient ``1/(n+1)``, and success probability
    ``(n**2 + 1)/(n + 1)**2``.
    """
    ens = basis_plus_mixed_ensemble(n)
    povm = pretty_good_measurement(ens)
    phi = e_gen(ens, povm)
    gamma_basis_coeff = povm.elements[0][0]
    gamma_mixed_coeff = povm.elements[n][0]
    return {
        "n": n,
        "t_diag": Fraction(1, n),
        "gamma_basis_coeff": gamma_basis_coeff,
        "gamma_mixed_coeff": gamma_mixed_coeff,
        "phi": phi,
        "expected_phi": Fraction(n * n + 1, (n + 1) ** 2),
        "matches_closed_form": phi == Fraction(n * n + 1, (n + 1) ** 2),
    }


def ensemble_from_json(obj: dict) -> Ensemble:
    """Read ``{"prior": {...}, "states": [...]}`` built from the core schema."""
    try:
        prior = distribution_from_json(obj["prior"])
        states = [state_from_json(s) for s in obj["states"]]
    except (KeyError, TypeError) as exc:
        raise ValueError("ensemble JSON needs 'prior' and 'states'") from exc
    return Ensemble(prior, states)
