"""Shared state types and distance primitives.

Finite alphabets, probability weight vectors with an exact-rational or a
float backend, density operators with a diagonal fast path, Schatten
p-norms, trace distance, tensor products, and the JSON encoding used by
the command line tools.

Exactness contract: whenever every input is rational (``fractions.Fraction``
weights or diagonal entries), sums, distances with p in {1, inf}, and tensor
products stay rational end to end.  Dense complex matrices always go through
the float path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Sequence, Union

import numpy as np

# Eigenvalues of a positive operator may come out slightly negative from
# floating point; anything in (-PSD_TOL, 0) is clamped to zero, anything
# below -PSD_TOL is rejected.
PSD_TOL = 1e-10
TRACE_TOL = 1e-9
SUM_TOL = 1e-12
HERMITIAN_TOL = 1e-10

Scalar = Union[Fraction, float]


def _is_rational(x) -> bool:
    return isinstance(x, Rational)


def parse_rational(text) -> Fraction:
    """Parse ``"num/den"`` strings (or bare integers) into a Fraction."""
    if isinstance(text, Rational):
        return Fraction(text)
    if isinstance(text, str):
        stripped = text.strip()
        if "." in stripped or "e" in stripped.lower():
            raise ValueError(
                "exact rational expected; got %r (write it as 'num/den')" % text
            )
        try:
            return Fraction(stripped)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError("cannot parse %r as a rational" % (text,)) from exc
    if isinstance(text, float):
        raise ValueError(
            "exact rational expected; got float %r (write it as 'num/den')" % text
        )
    raise ValueError("cannot parse %r as a rational" % (text,))


def format_rational(x: Fraction) -> str:
    """Canonical ``"num/den"`` string, denominator always present."""
    f = Fraction(x)
    return "%d/%d" % (f.numerator, f.denominator)


def format_number(x) -> Union[str, float, int]:
    """JSON-friendly scalar: rationals as "num/den", floats unchanged."""
    if _is_rational(x) and not isinstance(x, int):
        return format_rational(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


@dataclass(frozen=True)
class Alphabet:
    """Finite alphabet of ``size`` symbols, optionally raised to a power.

    ``Alphabet(q, m)`` models strings of length ``m`` over ``q`` symbols;
    ``num_symbols`` is ``q**m``.
    """

    size: int
    power: int = 1

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("alphabet size must be >= 2, got %d" % self.size)
        if self.power < 1:
            raise ValueError("alphabet power must be >= 1, got %d" % self.power)

    @property
    def num_symbols(self) -> int:
        return self.size**self.power


class FiniteDistribution:
    """Probability weights over an :class:`Alphabet`.

    Weights are stored either as exact ``Fraction`` values or as floats;
    the backend is recorded in :attr:`exact` and preserved by every
    operation that can preserve it.

    Parameters
    ----------
    alphabet : Alphabet
        Index set; the weight vector has ``alphabet.num_symbols`` entries.
    weights : sequence of Fraction/int or float
        Nonnegative, summing to one (exactly for the rational backend,
        within 1e-12 for the float backend).
    """

    __slots__ = ("alphabet", "weights", "exact")

    def __init__(self, alphabet: Alphabet, weights: Sequence[Scalar]):
        weights = tuple(weights)
        if len(weights) != alphabet.num_symbols:
            raise ValueError(
                "expected %d weights for this alphabet, got %d"
                % (alphabet.num_symbols, len(weights))
            )
        exact = all(_is_rational(w) for w in weights)
        if exact:
            weights = tuple(Fraction(w) for w in weights)
            if any(w < 0 for w in weights):
                raise ValueError("weights must be nonnegative")
            if sum(weights) != 1:
                raise ValueError("rational weights must sum to exactly 1")
        else:
            weights = tuple(float(w) for w in weights)
            if any(w < -SUM_TOL for w in weights):
                raise ValueError("weights must be nonnegative")
            weights = tuple(0.0 if w < 0 else w for w in weights)
            if abs(math.fsum(weights) - 1.0) > SUM_TOL:
                raise ValueError("float weights must sum to 1 within 1e-12")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "exact", exact)

    def __setattr__(self, name, value):
        raise AttributeError("FiniteDistribution is immutable")

    def __len__(self) -> int:
        return len(self.weights)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteDistribution)
            and self.alphabet == other.alphabet
            and self.weights == other.weights
        )

    def __repr__(self) -> str:
        return "FiniteDistribution(%r, %r)" % (self.alphabet, list(self.weights))

    @classmethod
    def uniform(cls, alphabet: Alphabet) -> "FiniteDistribution":
        n = alphabet.num_symbols
        return cls(alphabet, [Fraction(1, n)] * n)

    @classmethod
    def point_mass(cls, alphabet: Alphabet, symbol: int) -> "FiniteDistribution":
        n = alphabet.num_symbols
        if not 0 <= symbol < n:
            raise ValueError("symbol %d out of range [0, %d)" % (symbol, n))
        w = [Fraction(0)] * n
        w[symbol] = Fraction(1)
        return cls(alphabet, w)

    @classmethod
    def random_rational(
        cls,
        alphabet: Alphabet,
        rng: np.random.Generator,
        max_weight: int = 32,
    ) -> "FiniteDistribution":
        """Random exact distribution: integer weights in [1, max_weight], normalized."""
        n = alphabet.num_symbols
        raw = rng.integers(1, max_weight + 1, size=n)
        total = int(raw.sum())
        return cls(alphabet, [Fraction(int(r), total) for r in raw])

    @property
    def support(self) -> tuple:
        return tuple(i for i, w in enumerate(self.weights) if w > 0)

    @property
    def max_weight(self) -> Scalar:
        return max(self.weights)

    def as_floats(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights], dtype=float)


class StateDensity:
    """Density operator, possibly subnormalized (trace <= 1).

    Diagonal operators keep their entries as a tuple (exact rationals or
    floats); general operators are dense Hermitian ``complex128`` arrays.
    Construct through :meth:`from_diag`, :meth:`from_matrix`, or
    :meth:`from_distribution`.
    """

    __slots__ = ("dim", "diag", "mat", "exact")

    def __init__(self, dim: int, diag=None, mat=None, exact: bool = False):
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "exact", exact)

    def __setattr__(self, name, value):
        raise AttributeError("StateDensity is immutable")

    @classmethod
    def from_diag(cls, entries: Sequence[Scalar]) -> "StateDensity":
        entries = tuple(entries)
        if not entries:
            raise ValueError("state must have dimension >= 1")
        exact = all(_is_rational(e) for e in entries)
        if exact:
            entries = tuple(Fraction(e) for e in entries)
            if any(e < 0 for e in entries):
                raise ValueError("diagonal entries must be nonnegative")
            tr = sum(entries)
            if tr > 1:
                raise ValueError("trace %s exceeds 1" % tr)
        else:
            vals = [float(e) for e in entries]
            if any(v < -PSD_TOL for v in vals):
                raise ValueError("diagonal entry below -1e-10: not positive semidefinite")
            entries = tuple(0.0 if v < 0 else v for v in vals)
            if math.fsum(entries) > 1 + TRACE_TOL:
                raise ValueError("trace exceeds 1 beyond tolerance")
        return cls(len(entries), diag=entries, exact=exact)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "StateDensity":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("state matrix must be square")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.conj().T).max() > HERMITIAN_TOL * scale:
            raise ValueError("state matrix is not Hermitian within 1e-10")
        m = 0.5 * (m + m.conj().T)
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -PSD_TOL:
            raise ValueError(
                "state matrix has eigenvalue %g below -1e-10: not positive semidefinite"
                % evals.min()
            )
        tr = float(np.real(np.trace(m)))
        if tr > 1 + TRACE_TOL:
            raise ValueError("trace %g exceeds 1 beyond tolerance" % tr)
        return cls(m.shape[0], mat=m, exact=False)

    @classmethod
    def from_distribution(cls, f: FiniteDistribution) -> "StateDensity":
        return cls.from_diag(f.weights)

    @property
    def is_diagonal(self) -> bool:
        return self.diag is not None

    def trace(self) -> Scalar:
        if self.diag is not None:
            return sum(self.diag) if self.exact else math.fsum(self.diag)
        return float(np.real(np.trace(self.mat)))

    @property
    def is_normalized(self) -> bool:
        tr = self.trace()
        if self.exact:
            return tr == 1
        return abs(float(tr) - 1.0) <= TRACE_TOL

    def to_matrix(self) -> np.ndarray:
        if self.diag is not None:
            return np.diag(np.array([float(d) for d in self.diag], dtype=complex))
        return self.mat.copy()

    def eigenvalues(self) -> tuple:
        """Ascending eigenvalues; exact Fractions on the exact diagonal path."""
        if self.diag is not None:
            if self.exact:
                return tuple(sorted(self.diag))
            vals = sorted(float(d) for d in self.diag)
            return tuple(0.0 if -PSD_TOL < v < 0 else v for v in vals)
        vals = np.linalg.eigvalsh(self.mat)
        return tuple(0.0 if -PSD_TOL < v < 0 else float(v) for v in vals)

    def __sub__(self, other: "StateDensity"):
        """Difference as a diagonal tuple (both diagonal) or dense array."""
        if not isinstance(other, StateDensity):
            return NotImplemented
        if self.dim != other.dim:
            raise ValueError("dimension mismatch: %d vs %d" % (self.dim, other.dim))
        if self.diag is not None and other.diag is not None:
            return tuple(a - b for a, b in zip(self.diag, other.diag))
        return self.to_matrix() - other.to_matrix()

    def __repr__(self) -> str:
        kind = "diag" if self.is_diagonal else "dense"
        return "StateDensity(dim=%d, %s, trace=%s)" % (self.dim, kind, self.trace())


@dataclass(frozen=True)
class NormSpec:
    """Schatten norm order ``p >= 1`` plus an optional 1/normalize_by prefactor.

    ``p`` may be ``math.inf`` for the operator norm.  ``normalize_by``
    divides the norm by the given positive integer (used for distances
    that carry an inverse alphabet-size factor).
    """

    p: float = 1
    normalize_by: int | None = None

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError("Schatten order must satisfy p >= 1, got %r" % (self.p,))
        if self.normalize_by is not None and self.normalize_by < 1:
            raise ValueError("normalize_by must be a positive integer")


def _singular_values(x) -> np.ndarray:
    m = np.asarray(x, dtype=complex)
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.conj().T).max() <= HERMITIAN_TOL * scale:
        return np.abs(np.linalg.eigvalsh(m))
    return np.linalg.svd(m, compute_uv=False)


def schatten_norm(x, spec: NormSpec = NormSpec()) -> Scalar:
    """Schatten p-norm ``(sum_i s_i^p)^(1/p)`` of an operator or diagonal.

    Parameters
    ----------
    x : StateDensity, ndarray, or sequence
        A state, a dense (Hermitian or general) matrix, a 1-D array, or a
        sequence of scalars interpreted as a diagonal.  Differences of two
        diagonal states (tuples of rationals) stay exact for p in {1, inf}.
    spec : NormSpec
        Order and optional 1/normalize_by prefactor.

    Returns
    -------
    Fraction or float
        Exact when the input is rational and p in {1, inf}; float otherwise.
    """
    if not isinstance(spec, NormSpec):
        spec = NormSpec(p=spec)
    p = spec.p
    if isinstance(x, StateDensity):
        x = x.diag if x.diag is not None else x.mat
    if isinstance(x, np.ndarray) and x.ndim == 2:
        sv = _singular_values(x)
        if math.isinf(p):
            val = float(sv.max()) if sv.size else 0.0
        elif p == 1:
            val = float(sv.sum())
        else:
            val = float((sv**p).sum() ** (1.0 / p))
        return val / spec.normalize_by if spec.normalize_by else val

    entries = list(x)
    if all(_is_rational(e) for e in entries):
        if p == 1:
            val = sum(abs(Fraction(e)) for e in entries)
            val = Fraction(val)
        elif math.isinf(p):
            val = max((abs(Fraction(e)) for e in entries), default=Fraction(0))
        else:
            val = math.fsum(abs(float(e)) ** p for e in entries) ** (1.0 / p)
        if spec.normalize_by:
            if isinstance(val, Fraction):
                return val / spec.normalize_by
            return val / spec.normalize_by
        return val
    vals = np.abs(np.array([complex(e) for e in entries]))
    if math.isinf(p):
        val = float(vals.max()) if vals.size else 0.0
    elif p == 1:
        val = float(vals.sum())
    else:
        val = float((vals**p).sum() ** (1.0 / p))
    return val / spec.normalize_by if spec.normalize_by else val


def trace_distance(a, b, spec: NormSpec = NormSpec(p=1)) -> Scalar:
    """Schatten-1 distance between two distributions or two states.

    Exact (Fraction) when both arguments are rational-backed; the optional
    ``spec.normalize_by`` prefactor is applied to the result.
    """
    if isinstance(a, FiniteDistribution) and isinstance(b, FiniteDistribution):
        if a.alphabet != b.alphabet:
            raise ValueError("distributions live on different alphabets")
        diff = tuple(x - y for x, y in zip(a.weights, b.weights))
        return schatten_norm(diff, spec)
    if isinstance(a, StateDensity) and isinstance(b, StateDensity):
        return schatten_norm(a - b, spec)
    raise ValueError("trace_distance expects two distributions or two states")


def total_variation(a, b) -> Scalar:
    """Half the Schatten-1 distance."""
    d = trace_distance(a, b)
    if isinstance(d, Fraction):
        return d / 2
    return d / 2.0


def tensor(a, b):
    """Tensor product of two distributions or two states.

    Distributions must share the alphabet base size; the result lives on
    the power-summed alphabet.  Diagonal rational states stay exact.
    """
    if isinstance(a, FiniteDistribution) and isinstance(b, FiniteDistribution):
        if a.alphabet.size != b.alphabet.size:
            raise ValueError("tensor requires a common alphabet base size")
        alphabet = Alphabet(a.alphabet.size, a.alphabet.power + b.alphabet.power)
        weights = [x * y for x in a.weights for y in b.weights]
        return FiniteDistribution(alphabet, weights)
    if isinstance(a, StateDensity) and isinstance(b, StateDensity):
        if a.diag is not None and b.diag is not None:
            entries = [x * y for x in a.diag for y in b.diag]
            return StateDensity.from_diag(entries)
        return StateDensity.from_matrix(np.kron(a.to_matrix(), b.to_matrix()))
    raise ValueError("tensor expects two distributions or two states")


def tensor_power(a, n: int):
    if n < 1:
        raise ValueError("tensor power requires n >= 1")
    out = a
    for _ in range(n - 1):
        out = tensor(out, a)
    return out


# Tensor powers grow exponentially; keep sweeps desk-scale.
TENSOR_POWER_CAP = 6
TENSOR_DIM_CAP = 4096


def normalized_tensor_distance(rho, sigma, n: int, base: int | None = None) -> Scalar:
    """``(1/(n*base)) * || rho^(x n) - sigma^(x n) ||_1``.

    ``base`` defaults to the alphabet size for distributions and to the
    operator dimension for states.  ``n`` is capped at 6 and the tensor
    dimension at 4096.
    """
    if n < 1 or n > TENSOR_POWER_CAP:
        raise ValueError("tensor copies must satisfy 1 <= n <= %d" % TENSOR_POWER_CAP)
    if isinstance(rho, FiniteDistribution):
        dim = rho.alphabet.num_symbols
        if base is None:
            base = rho.alphabet.size
    elif isinstance(rho, StateDensity):
        dim = rho.dim
        if base is None:
            base = rho.dim
    else:
        raise ValueError("expected a distribution or a state")
    if dim**n > TENSOR_DIM_CAP:
        raise ValueError(
            "tensor dimension %d exceeds cap %d" % (dim**n, TENSOR_DIM_CAP)
        )
    d = trace_distance(tensor_power(rho, n), tensor_power(sigma, n))
    denom = n * base
    if isinstance(d, Fraction):
        return d / denom
    return d / denom


# ---------------------------------------------------------------------------
# JSON encoding
# ---------------------------------------------------------------------------

def distribution_to_json(f: FiniteDistribution) -> dict:
    return {
        "schema": 1,
        "alphabet": {"size": f.alphabet.size, "power": f.alphabet.power},
        "weights": [format_number(w) for w in f.weights],
    }


def distribution_from_json(obj: dict) -> FiniteDistribution:
    """Inverse of :func:`distribution_to_json`; floats allowed for the float backend."""
    try:
        alpha = obj["alphabet"]
        alphabet = Alphabet(int(alpha["size"]), int(alpha.get("power", 1)))
        raw = obj["weights"]
    except (KeyError, TypeError) as exc:
        raise ValueError("distribution JSON needs 'alphabet' and 'weights'") from exc
    weights: list = []
    for w in raw:
        if isinstance(w, str):
            weights.append(Fraction(w))
        elif isinstance(w, bool):
            raise ValueError("weights must be numbers, got %r" % w)
        elif isinstance(w, int):
            weights.append(Fraction(w))
        else:
            weights.append(float(w))
    return FiniteDistribution(alphabet, weights)


def state_to_json(s: StateDensity) -> dict:
    if s.diag is not None:
        return {"schema": 1, "dim": s.dim, "diag": [format_number(d) for d in s.diag]}
    m = s.mat
    rows = [[[float(m[i, j].real), float(m[i, j].imag)] for j in range(s.dim)]
            for i in range(s.dim)]
    return {"schema": 1, "dim": s.dim, "matrix": rows}


def state_from_json(obj: dict) -> StateDensity:
    if "diag" in obj:
        entries = []
        for d in obj["diag"]:
            if isinstance(d, str):
                entries.append(Fraction(d))
            elif isinstance(d, int) and not isinstance(d, bool):
                entries.append(Fraction(d))
            else:
                entries.append(float(d))
        return StateDensity.from_diag(entries)
    if "matrix" in obj:
        rows = obj["matrix"]
        n = len(rows)
        m = np.zeros((n, n), dtype=complex)
        for i, row in enumerate(rows):
            for j, cell in enumerate(row):
                if isinstance(cell, (list, tuple)):
                    m[i, j] = complex(cell[0], cell[1])
                else:
                    m[i, j] = complex(cell)
        return StateDensity.from_matrix(m)
    raise ValueError("state JSON needs either 'diag' or 'matrix'")
