"""Universal hash families over prime fields and exact key-uniformity bounds.

Symbols are integers in ``[0, q**m)`` identified with little-endian base-q
digit vectors (digit 0 is the least significant).  A family is stored as a
lookup table per member, so every probability below is a finite sum of
``Fraction`` terms: distances, collision probabilities, and bound
comparisons are exact, with square-form comparisons used wherever the
bound itself is an irrational square root.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .core import Alphabet, FiniteDistribution

# Family enumeration cap: q**(m*k) members for the all-linear kind.
MAX_FAMILY_SIZE = 2**20


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in range(2, int(math.isqrt(n)) + 1):
        if n % p == 0:
            return False
    return True


def digits(x: int, q: int, m: int) -> Tuple[int, ...]:
    """Little-endian base-q digits of ``x``, padded to length ``m``."""
    if not 0 <= x < q**m:
        raise ValueError("symbol %d out of range [0, %d)" % (x, q**m))
    out = []
    for _ in range(m):
        out.append(x % q)
        x //= q
    return tuple(out)


def undigits(ds: Sequence[int], q: int) -> int:
    x = 0
    for d in reversed(ds):
        x = x * q + int(d)
    return x


def _matrix_to_table(matrix: Sequence[Sequence[int]], q: int, m: int, k: int
                     ) -> Tuple[int, ...]:
    table = []
    for x in range(q**m):
        ds = digits(x, q, m)
        out = [sum(matrix[i][j] * ds[j] for j in range(m)) % q for i in range(k)]
        table.append(undigits(out, q))
    return tuple(table)


@dataclass(frozen=True)
class HashFamily:
    """Finite family of maps ``[0, q**m) -> [0, q**k)`` with uniform seeding.

    ``maps[g][x]`` is the output of member ``g`` on symbol ``x``.
    ``zeta`` is ``log_q |G|`` when that is exact (all enumerated kinds),
    else None; bound formulas use ``1/|G|`` directly so an inexact zeta
    never enters the arithmetic.
    """

    q: int
    m: int
    k: int
    kind: str
    maps: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if not _is_prime(self.q):
            raise ValueError("alphabet size must be prime, got %d" % self.q)
        if self.k < 1 or self.m < self.k:
            raise ValueError("need m >= k >= 1, got m=%d k=%d" % (self.m, self.k))
        if not self.maps:
            raise ValueError("family must be nonempty")
        n_in, n_out = self.q**self.m, self.q**self.k
        for table in self.maps:
            if len(table) != n_in:
                raise ValueError("each map needs %d entries" % n_in)
            if any(not 0 <= v < n_out for v in table):
                raise ValueError("map output out of range [0, %d)" % n_out)

    @property
    def group_size(self) -> int:
        return len(self.maps)

    @property
    def zeta(self) -> Optional[Fraction]:
        g = self.group_size
        # Exact log_q |G| exists iff |G| is a power of q.
        e = 0
        while g % self.q == 0:
            g //= self.q
            e += 1
        return Fraction(e) if g == 1 else None

    @property
    def input_alphabet(self) -> Alphabet:
        return Alphabet(self.q, self.m)

    @property
    def output_alphabet(self) -> Alphabet:
        return Alphabet(self.q, self.k)


def build_family(kind: str, q, m: int, k: int, seed: Optional[int] = None,
                 maps: Optional[Sequence[Sequence[int]]] = None) -> HashFamily:
    """Construct a hash family.

    Parameters
    ----------
    kind : {"linear", "toeplitz", "explicit"}
        "linear" enumerates every k x m matrix over GF(q); "toeplitz"
        enumerates the q**(m+k-1) Toeplitz matrices; "explicit" wraps the
        given lookup tables.
    q : int or Alphabet
        Prime base alphabet size.
    m, k : int
        Input and output string lengths, m >= k >= 1.
    seed : int, optional
        Accepted for signature stability; the enumerated kinds are
        deterministic and ignore it.
    maps : sequence, optional
        Lookup tables for the explicit kind, maps[g][x] = kappa.
    """
    if isinstance(q, Alphabet):
        q = q.size
    q = int(q)
    if kind == "linear":
        if q ** (m * k) > MAX_FAMILY_SIZE:
            raise ValueError("all-linear family of size %d exceeds cap" % q ** (m * k))
        tables = []
        for flat in itertools.product(range(q), repeat=m * k):
            matrix = [flat[i * m:(i + 1) * m] for i in range(k)]
            tables.append(_matrix_to_table(matrix, q, m, k))
        return HashFamily(q, m, k, "linear", tuple(tables))
    if kind == "toeplitz":
        if q ** (m + k - 1) > MAX_FAMILY_SIZE:
            raise ValueError("Toeplitz family of size %d exceeds cap" % q ** (m + k - 1))
        tables = []
        for params in itertools.product(range(q), repeat=m + k - 1):
            # T[i][j] = params[i - j + m - 1]; constant along diagonals.
            matrix = [[params[i - j + m - 1] for j in range(m)] for i in range(k)]
            tables.append(_matrix_to_table(matrix, q, m, k))
        return HashFamily(q, m, k, "toeplitz", tuple(tables))
    if kind == "explicit":
        if maps is None:
            raise ValueError("explicit kind requires lookup tables")
        return HashFamily(q, m, k, "explicit", tuple(tuple(t) for t in maps))
    raise ValueError("unknown family kind %r" % kind)


def verify_universality(family: HashFamily) -> Fraction:
    """Worst-case collision probability ``max_{x != x'} Pr_g[g(x) = g(x')]``.

    The family is universal iff the returned value is <= q**-k.
    """
    n_in = family.q**family.m
    if n_in < 2:
        return Fraction(0)
    worst = Fraction(0)
    size = family.group_size
    for x in range(n_in):
        for y in range(x + 1, n_in):
            hits = sum(1 for t in family.maps if t[x] == t[y])
            worst = max(worst, Fraction(hits, size))
    return worst


def is_universal(family: HashFamily) -> bool:
    return verify_universality(family) <= Fraction(1, family.q**family.k)


@dataclass(frozen=True)
class JointKeyState:
    """Exact joint law of (hashed key, family member).

    ``table[kappa][g] = (1/|G|) sum_{x: g(x)=kappa} P_X(x)``.  The member
    marginal is uniform by construction; validated on creation.
    """

    q: int
    k: int
    group_size: int
    table: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self):
        total = Fraction(0)
        per_g = [Fraction(0)] * self.group_size
        for row in self.table:
            for g, p in enumerate(row):
                if p < 0:
                    raise ValueError("joint weights must be nonnegative")
                per_g[g] += p
                total += p
        if total != 1:
            raise ValueError("joint weights must sum to exactly 1")
        share = Fraction(1, self.group_size)
        if any(pg != share for pg in per_g):
            raise ValueError("member marginal must be exactly uniform")

    def key_marginal(self) -> FiniteDistribution:
        weights = [sum(row, start=Fraction(0)) for row in self.table]
        return FiniteDistribution(Alphabet(self.q, self.k), weights)


def _require_exact(f: FiniteDistribution):
    if not f.exact:
        raise ValueError(
            "hashing requires an exact rational distribution; "
            "build weights from Fractions or 'num/den' strings"
        )


def joint_state(f: FiniteDistribution, family: HashFamily) -> JointKeyState:
    """Joint law of key and member under uniform member choice, exact."""
    _require_exact(f)
    if f.alphabet.num_symbols != family.q**family.m:
        raise ValueError("distribution does not match the family input alphabet")
    size = family.group_size
    n_out = family.q**family.k
    share = Fraction(1, size)
    table = [[Fraction(0)] * size for _ in range(n_out)]
    for g, t in enumerate(family.maps):
        for x, p in enumerate(f.weights):
            if p:
                table[t[x]][g] += p * share
    return JointKeyState(family.q, family.k, size,
                         tuple(tuple(row) for row in table))


def lhl_distance(f: FiniteDistribution, family: HashFamily) -> Fraction:
    """Distance of (key, member) from (uniform key, member), exact.

    ``(1/q) * sum_{kappa,g} | P_KG(kappa,g) - q**-k / |G| |``; the ``1/q``
    prefactor is the inverse alphabet size carried by the norm convention.
    """
    js = joint_state(f, family)
    ideal = Fraction(1, family.q**family.k * family.group_size)
    d = Fraction(0)
    for row in js.table:
        for p in row:
            d += abs(p - ideal)
    return d / family.q


def collision_probability(f: FiniteDistribution, family: HashFamily) -> Fraction:
    """``sum_{kappa,g} P_KG(kappa,g)**2``, exact."""
    js = joint_state(f, family)
    return sum((p * p for row in js.table for p in row), start=Fraction(0))


def collision_bound(f: FiniteDistribution, family: HashFamily,
                    h_plus: Optional[Fraction] = None) -> Fraction:
    """``q**-k/|G| + q**-h_plus/|G|`` with ``q**-h_plus = max_x P_X(x)`` by default.

    Exact for integer ``h_plus`` or the default ``h_plus = h_min``.
    """
    _require_exact(f)
    size = family.group_size
    qk = Fraction(1, family.q**family.k)
    if h_plus is None:
        tail = Fraction(f.max_weight)
    else:
        tail = _q_pow_neg(family.q, h_plus, f)
    return (qk + tail) / size


def _q_pow_neg(q: int, h_plus, f: Optional[FiniteDistribution]) -> Fraction:
    """``q**-h_plus`` as an exact Fraction when possible."""
    if h_plus is None:
        if f is None:
            raise ValueError("h_plus required without a distribution")
        return Fraction(f.max_weight)
    if isinstance(h_plus, float):
        if not h_plus.is_integer():
            raise ValueError(
                "exact comparison needs integer h_plus or the h_min default"
            )
        h_plus = int(h_plus)
    frac = Fraction(h_plus)
    if frac.denominator != 1:
        raise ValueError("exact comparison needs integer h_plus or the h_min default")
    e = frac.numerator
    return Fraction(1, q**e) if e >= 0 else Fraction(q**-e)


def lhl_bound(q: int, k: int, h_plus) -> float:
    """Float value of ``q**-((h_plus - k)/2)``."""
    return float(q) ** (-(float(h_plus) - k) / 2.0)


def max_key_length(h_plus, epsilon, q: int, mode: str = "default") -> int:
    """Largest key length whose uniformity distance stays below ``epsilon``.

    default: ``floor(h_plus + 2 log_q epsilon)`` (the bound inverted for
    ``q**-((h_plus-k)/2) <= epsilon``).  mode="paper-literal" computes
    ``floor(h_plus - 2 log_q epsilon)`` instead, which grows as epsilon
    shrinks and is kept only for comparison.  Negative results clamp to 0
    with a warning.
    """
    eps = float(epsilon)
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    log_eps = math.log(eps) / math.log(q)
    if mode == "default":
        raw = math.floor(float(h_plus) + 2.0 * log_eps)
    elif mode == "paper-literal":
        raw = math.floor(float(h_plus) - 2.0 * log_eps)
    else:
        raise ValueError("mode must be 'default' or 'paper-literal'")
    if raw < 0:
        warnings.warn("requested distance unreachable: key length clamps to 0")
        return 0
    return raw


def lhl_report(f: FiniteDistribution, family: HashFamily,
               h_plus=None) -> dict:
    """Distance, collision probability, bounds, and exact verdicts.

    All comparisons are exact: the distance bound ``q**-((h_plus-k)/2)``
    is checked in squared form ``distance**2 <= q**(k-2) * (q**-h_plus)``
    ... more precisely through the tightening chain

    ``distance <= q**(k/2-1) sqrt(|G| P_col - q**-k) <= q**((k-h_plus)/2-1)``,

    each step compared with rational squares.  ``precondition_met`` records
    ``h_plus <= h_min`` (the entropy floor assumption).
    """
    _require_exact(f)
    q, k = family.q, family.k
    size = family.group_size
    dist = lhl_distance(f, family)
    pcol = collision_probability(f, family)
    qk = Fraction(1, q**k)
    max_w = Fraction(f.max_weight)
    try:
        q_pow_neg_h = _q_pow_neg(q, h_plus, f)
        exact_cmp = True
    except ValueError:
        # Non-integer entropy floor: comparisons fall back to floats.
        q_pow_neg_h = float(q) ** (-float(h_plus))
        exact_cmp = False
    precondition_met = q_pow_neg_h >= max_w  # q**-h_plus >= max P  <=>  h_plus <= h_min
    # Chain middle term, squared: q**(k-2) * (|G| P_col - q**-k).
    mid_sq = Fraction(q**k, q**2) * (size * pcol - qk)
    bound_sq = Fraction(q**k, q**2) * q_pow_neg_h if exact_cmp \
        else float(q) ** (k - 2) * q_pow_neg_h
    cs_ok = dist * dist <= mid_sq
    tail_ok = mid_sq <= bound_sq
    final_sq = Fraction(q**k) * q_pow_neg_h if exact_cmp \
        else float(q) ** k * q_pow_neg_h  # (q**-((h_plus-k)/2))**2
    satisfied = dist * dist <= final_sq
    col_bound = (qk + q_pow_neg_h) / size
    return {
        "q": q,
        "m": family.m,
        "k": k,
        "kind": family.kind,
        "group_size": size,
        "zeta": family.zeta,
        "distance": dist,
        "bound": lhl_bound(q, k, float(h_plus) if h_plus is not None
                           else -math.log(float(max_w)) / math.log(q)),
        "satisfied": satisfied,
        "collision_probability": pcol,
        "collision_bound": col_bound,
        "collision_satisfied": pcol <= col_bound,
        "chain_cauchy_schwarz": cs_ok,
        "chain_tail": tail_ok,
        "precondition_met": precondition_met,
        "exact_comparison": exact_cmp,
    }
