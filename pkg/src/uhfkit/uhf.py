"""Finite tensor stages of a UHF algebra in exact rational arithmetic.

A stage ``L`` of the factor sequence ``(n_1, n_2, ...)`` is the matrix algebra
``M_{n_1} (x) ... (x) M_{n_L}``.  Elements are stored as an integer matrix
together with one positive common denominator, which keeps products of
64 x 64 matrices cheap while staying exact.  Factor 1 varies slowest in the
Kronecker index (``numpy.kron`` order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from sympy import factorint, isprime

from .errors import (
    InvalidInput,
    NotUnitary,
    StageCapExceeded,
    StageMismatch,
)

INFINITY = math.inf
DEFAULT_STAGE_CAP = 4096

Rational = Union[int, Fraction]


# ---------------------------------------------------------------------------
# supernatural numbers


@dataclass(frozen=True)
class SupernaturalNumber:
    """Formal product of primes with exponents in ``N u {inf}``.

    ``universal`` means every prime carries an infinite exponent.
    ``lower_bound`` marks exponents read off a finite prefix only.
    """

    exponents: tuple = ()
    universal: bool = False
    lower_bound: bool = False

    def __post_init__(self):
        items = self.exponents
        if isinstance(items, dict):
            items = tuple(items.items())
        items = tuple(sorted((int(p), e) for p, e in items))
        for p, e in items:
            if not isprime(p):
                raise InvalidInput(f"supernatural key {p} is not prime")
            if e != INFINITY and (int(e) != e or e < 1):
                raise InvalidInput(f"exponent of {p} must be a positive integer or infinity")
        if self.universal and items:
            raise InvalidInput("the universal flag subsumes explicit exponents")
        object.__setattr__(self, "exponents", items)

    @classmethod
    def of_integer(cls, n: int) -> "SupernaturalNumber":
        if n < 1:
            raise InvalidInput("supernatural numbers are built from positive integers")
        return cls(tuple(factorint(n).items()))

    def exponent(self, p: int):
        if self.universal:
            return INFINITY
        return dict(self.exponents).get(p, 0)

    def __mul__(self, other: "SupernaturalNumber") -> "SupernaturalNumber":
        lower = self.lower_bound or other.lower_bound
        if self.universal or other.universal:
            return SupernaturalNumber(universal=True, lower_bound=lower)
        acc = dict(self.exponents)
        for p, e in other.exponents:
            acc[p] = acc.get(p, 0) + e
        return SupernaturalNumber(tuple(acc.items()), lower_bound=lower)

    def divides_infinitely(self, p: int) -> bool:
        return self.exponent(p) == INFINITY

    def to_json(self) -> dict:
        return {
            "universal": self.universal,
            "lower_bound": self.lower_bound,
            "exponents": {str(p): ("inf" if e == INFINITY else int(e)) for p, e in self.exponents},
        }

    def __str__(self) -> str:
        if self.universal:
            return "prod_p p^inf"
        if not self.exponents:
            return "1"
        rel = ">=" if self.lower_bound else ""
        return " * ".join(f"{p}^{rel}{'inf' if e == INFINITY else int(e)}" for p, e in self.exponents)


# ---------------------------------------------------------------------------
# factor sequences


class SequenceRule:
    """Closed-form rule ``l -> n_l`` (levels are 1-indexed)."""

    length: Optional[int] = None  # None means infinite

    def factor(self, l: int) -> int:
        raise NotImplementedError

    def supernatural(self) -> Optional[SupernaturalNumber]:
        """Exact supernatural number, or None if only a lower bound is knowable."""
        return None

    def unbounded(self) -> Optional[bool]:
        """True if ``n_l -> inf``; None when undecidable from the rule."""
        return None

    def recurrent_gcds(self, d: int) -> Optional[frozenset]:
        """Values of ``gcd(n_l, d)`` attained for infinitely many ``l``."""
        return None

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(SequenceRule):
    c: int

    def __post_init__(self):
        if self.c < 2:
            raise InvalidInput("constant factor must be >= 2")

    def factor(self, l):
        return self.c

    def supernatural(self):
        return SupernaturalNumber(tuple((p, INFINITY) for p in factorint(self.c)))

    def unbounded(self):
        return False

    def recurrent_gcds(self, d):
        return frozenset({math.gcd(self.c, d)})

    def to_json(self):
        return {"rule": "Constant", "c": self.c}


@dataclass(frozen=True)
class Factorial(SequenceRule):
    """``n_l = (l+1)!`` so that every factor is at least 2."""

    def factor(self, l):
        return math.factorial(l + 1)

    def supernatural(self):
        return SupernaturalNumber(universal=True)

    def unbounded(self):
        return True

    def recurrent_gcds(self, d):
        # d | (l+1)! once l+1 >= d
        return frozenset({abs(d)}) if d else None

    def to_json(self):
        return {"rule": "Factorial"}


@dataclass(frozen=True)
class Linear(SequenceRule):
    """``n_l = l + 1``."""

    def factor(self, l):
        return l + 1

    def supernatural(self):
        return SupernaturalNumber(universal=True)

    def unbounded(self):
        return True

    def recurrent_gcds(self, d):
        # l+1 runs through every residue class mod d infinitely often
        if not d:
            return None
        d = abs(d)
        return frozenset(q for q in range(1, d + 1) if d % q == 0)

    def to_json(self):
        return {"rule": "Linear"}


@dataclass(frozen=True)
class PrimePower(SequenceRule):
    """``n_l = p**l``."""

    p: int

    def __post_init__(self):
        if not isprime(self.p):
            raise InvalidInput(f"PrimePower needs a prime, got {self.p}")

    def factor(self, l):
        return self.p ** l

    def supernatural(self):
        return SupernaturalNumber(((self.p, INFINITY),))

    def unbounded(self):
        return True

    def recurrent_gcds(self, d):
        if not d:
            return None
        d = abs(d)
        part = 1
        while d % self.p == 0:
            d //= self.p
            part *= self.p
        return frozenset({part})

    def to_json(self):
        return {"rule": "PrimePower", "p": self.p}


@dataclass(frozen=True)
class Table(SequenceRule):
    """Finite custom table; nothing is known past its end."""

    values: tuple

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise InvalidInput("empty factor sequence")
        if any(v < 2 for v in vals):
            raise InvalidInput("every factor must be >= 2")
        object.__setattr__(self, "values", vals)

    @property
    def length(self):
        return len(self.values)

    def factor(self, l):
        if not 1 <= l <= len(self.values):
            raise InvalidInput(f"level {l} outside table of length {len(self.values)}")
        return self.values[l - 1]

    def to_json(self):
        return {"rule": "Table", "values": list(self.values)}


@dataclass(frozen=True)
class FactorSequence:
    rule: SequenceRule

    @classmethod
    def constant(cls, c):
        return cls(Constant(c))

    @classmethod
    def factorial(cls):
        return cls(Factorial())

    @classmethod
    def linear(cls):
        return cls(Linear())

    @classmethod
    def prime_power(cls, p):
        return cls(PrimePower(p))

    @classmethod
    def table(cls, values):
        return cls(Table(tuple(values)))

    @property
    def length(self) -> Optional[int]:
        return self.rule.length

    def factor(self, l: int) -> int:
        if l < 1:
            raise InvalidInput("levels start at 1")
        return self.rule.factor(l)

    def prefix(self, L: int) -> tuple:
        if L < 0 or (self.length is not None and L > self.length):
            raise InvalidInput(f"stage {L} out of range")
        return tuple(self.factor(l) for l in range(1, L + 1))

    def to_json(self) -> dict:
        return self.rule.to_json()


def supernatural_of(seq: FactorSequence, horizon: int) -> SupernaturalNumber:
    """Supernatural number (type) of the UHF algebra with factors ``seq``.

    Library rules are answered exactly.  A custom table only yields the
    exponents of its first ``horizon`` factors, flagged as lower bounds.
    """
    exact = seq.rule.supernatural()
    if exact is not None:
        return exact
    if seq.length is not None and horizon < seq.length:
        raise InvalidInput("horizon must cover the whole table")
    used = seq.prefix(min(horizon, seq.length))
    acc = SupernaturalNumber()
    for n in used:
        acc = acc * SupernaturalNumber.of_integer(n)
    return SupernaturalNumber(acc.exponents, lower_bound=True)


def stage_dim(seq: FactorSequence, L: int, cap: Optional[int] = None) -> int:
    dim = math.prod(seq.prefix(L))
    if cap is not None and dim > cap:
        raise StageCapExceeded(f"stage {L} has dimension {dim} > cap {cap}")
    return dim


# ---------------------------------------------------------------------------
# stage elements


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    raise InvalidInput(f"entries must be exact rationals, got {type(v).__name__}")


def _int_matrix(rows) -> np.ndarray:
    out = np.empty((len(rows), len(rows[0]) if len(rows) else 0), dtype=object)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            out[i, j] = int(v)
    return out


def _obj_eye(n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=object)
    out[np.arange(n), np.arange(n)] = 1
    # object zeros from np.zeros are Python ints already
    return out


class StageElement:
    """Exact rational matrix at a given tensor stage.

    Immutable; all arithmetic returns new elements.  The matrix is
    ``num / den`` with ``num`` an object array of Python ints.
    """

    __slots__ = ("seq", "stage", "num", "den", "__dict__")

    def __init__(self, seq: FactorSequence, stage: int, num: np.ndarray, den: int = 1,
                 *, stage_cap: int = DEFAULT_STAGE_CAP):
        dim = stage_dim(seq, stage, stage_cap)
        num = np.asarray(num, dtype=object)
        if num.shape != (dim, dim):
            raise InvalidInput(f"stage {stage} needs a {dim}x{dim} matrix, got {num.shape}")
        den = int(den)
        if den == 0:
            raise InvalidInput("zero denominator")
        if den < 0:
            num, den = -num, -den
        g = reduce(math.gcd, (int(v) for v in num.flat), den)
        if g > 1:
            num = num // g
            den //= g
        num.flags.writeable = False
        self.seq = seq
        self.stage = stage
        self.num = num
        self.den = den

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_rows(cls, seq, stage, rows, **kw) -> "StageElement":
        fr = [[_as_fraction(v) for v in row] for row in rows]
        den = math.lcm(1, *(v.denominator for row in fr for v in row))
        num = _int_matrix([[v.numerator * (den // v.denominator) for v in row] for row in fr])
        return cls(seq, stage, num, den, **kw)

    @classmethod
    def identity(cls, seq, stage, **kw):
        return cls(seq, stage, _obj_eye(stage_dim(seq, stage)), 1, **kw)

    @classmethod
    def zero(cls, seq, stage, **kw):
        d = stage_dim(seq, stage)
        return cls(seq, stage, np.zeros((d, d), dtype=object), 1, **kw)

    @classmethod
    def diagonal(cls, seq, stage, values: Sequence, **kw):
        fr = [_as_fraction(v) for v in values]
        den = math.lcm(1, *(v.denominator for v in fr))
        d = len(fr)
        num = np.zeros((d, d), dtype=object)
        for i, v in enumerate(fr):
            num[i, i] = v.numerator * (den // v.denominator)
        return cls(seq, stage, num, den, **kw)

    @classmethod
    def diagonal_projection(cls, seq, stage, indices: Iterable[int], **kw):
        d = stage_dim(seq, stage)
        vals = [0] * d
        for i in indices:
            vals[i] = 1
        return cls.diagonal(seq, stage, vals, **kw)

    # -- basic properties -------------------------------------------------

    @property
    def dim(self) -> int:
        return self.num.shape[0]

    @property
    def factors(self) -> tuple:
        return self.seq.prefix(self.stage)

    def entry(self, i, j) -> Fraction:
        return Fraction(int(self.num[i, j]), self.den)

    def entries(self) -> list:
        return [[Fraction(int(v), self.den) for v in row] for row in self.num]

    def to_float(self) -> np.ndarray:
        return np.array([[float(Fraction(int(v), self.den)) for v in row] for row in self.num])

    @cached_property
    def is_diagonal(self) -> bool:
        off = self.num.copy()
        np.fill_diagonal(off, 0)
        return not off.any()

    @cached_property
    def permutation(self) -> Optional[np.ndarray]:
        """Images ``pi`` with ``self e_j = e_{pi(j)}`` if this is a permutation matrix."""
        if self.den != 1:
            return None
        nz = self.num != 0
        if not np.all((self.num == 0) | (self.num == 1)):
            return None
        if not (np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1)):
            return None
        return np.argmax(nz, axis=0)

    def is_zero(self) -> bool:
        return not self.num.any()

    def is_projection(self) -> bool:
        return self == self.adjoint() and self @ self == self

    def is_unitary(self) -> bool:
        if self.permutation is not None:
            return True
        return self @ self.adjoint() == StageElement.identity(self.seq, self.stage)

    def trace(self) -> Fraction:
        return Fraction(sum(int(v) for v in self.num.diagonal()), self.den)

    def normalized_trace(self) -> Fraction:
        return self.trace() / self.dim

    # -- arithmetic -------------------------------------------------------

    def _check(self, other):
        if not isinstance(other, StageElement):
            raise TypeError(f"expected StageElement, got {type(other).__name__}")
        if other.stage != self.stage or other.seq != self.seq:
            raise StageMismatch(f"stage {self.stage} vs stage {other.stage}; embed first")

    def _new(self, num, den):
        return StageElement(self.seq, self.stage, num, den, stage_cap=max(DEFAULT_STAGE_CAP, self.dim))

    def __add__(self, other):
        self._check(other)
        den = math.lcm(self.den, other.den)
        return self._new(self.num * (den // self.den) + other.num * (den // other.den), den)

    def __neg__(self):
        return self._new(-self.num, self.den)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: Rational) -> "StageElement":
        c = _as_fraction(c)
        return self._new(self.num * c.numerator, self.den * c.denominator)

    def __mul__(self, c):
        if isinstance(c, StageElement):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        if self.is_diagonal:
            num = self.num.diagonal()[:, None] * other.num
        elif other.is_diagonal:
            num = self.num * other.num.diagonal()[None, :]
        else:
            num = self.num @ other.num
        return self._new(num, self.den * other.den)

    def adjoint(self) -> "StageElement":
        # real entries only, so the adjoint is the transpose
        return self._new(self.num.T.copy(), self.den)

    def __eq__(self, other):
        if not isinstance(other, StageElement):
            return NotImplemented
        return (self.stage == other.stage and self.seq == other.seq and self.den == other.den
                and np.array_equal(self.num, other.num))

    def __hash__(self):
        return hash((self.stage, self.den, tuple(self.num.flat)))

    def __repr__(self):
        return f"StageElement(stage={self.stage}, dim={self.dim}, den={self.den})"


def embed_stage(x: StageElement, L_target: int, *, stage_cap: int = DEFAULT_STAGE_CAP) -> StageElement:
    """Unital embedding ``x -> x (x) 1`` into a later stage."""
    if L_target < x.stage:
        raise InvalidInput(f"cannot embed stage {x.stage} into earlier stage {L_target}")
    if L_target == x.stage:
        return x
    extra = math.prod(x.seq.factor(l) for l in range(x.stage + 1, L_target + 1))
    stage_dim(x.seq, L_target, stage_cap)
    return StageElement(x.seq, L_target, np.kron(x.num, _obj_eye(extra)), x.den, stage_cap=stage_cap)


def common_stage(*xs: StageElement) -> list:
    L = max(x.stage for x in xs)
    return [embed_stage(x, L) for x in xs]


def check_permutation(sigma: Sequence[int], n: Optional[int] = None) -> tuple:
    sigma = tuple(int(s) for s in sigma)
    if n is not None and len(sigma) != n:
        raise InvalidInput(f"permutation has length {len(sigma)}, expected {n}")
    if sorted(sigma) != list(range(len(sigma))):
        raise InvalidInput(f"{sigma} is not a bijection of 0..{len(sigma) - 1}")
    return sigma


def lift_permutation(sigma: Sequence[int], position: int, factors: Sequence[int]) -> np.ndarray:
    """Images of the full basis under ``sigma`` acting on tensor factor ``position`` (1-indexed)."""
    factors = tuple(factors)
    idx = np.indices(factors).reshape(len(factors), -1)
    idx[position - 1] = np.asarray(sigma)[idx[position - 1]]
    return np.ravel_multi_index(tuple(idx), factors)


def permutation_matrix(seq: FactorSequence, stage: int, images: Sequence[int], **kw) -> StageElement:
    d = len(images)
    num = np.zeros((d, d), dtype=object)
    num[np.asarray(images), np.arange(d)] = 1
    return StageElement(seq, stage, num, 1, **kw)


def perm_unitary(sigma: Sequence[int], position: int, seq: FactorSequence, L: int, **kw) -> StageElement:
    """Permutation unitary of ``sigma`` (0-indexed images) on factor ``position`` at stage ``L``.

    The unitary sends basis vector ``e_i`` of that factor to ``e_{sigma(i)}``,
    so conjugation moves ``e_{ii}`` to ``e_{sigma(i) sigma(i)}``.
    """
    if not 1 <= position <= L:
        raise InvalidInput(f"factor position {position} not within stage {L}")
    factors = seq.prefix(L)
    sigma = check_permutation(sigma, factors[position - 1])
    return permutation_matrix(seq, L, lift_permutation(sigma, position, factors), **kw)


def ad(u: StageElement, x: StageElement) -> StageElement:
    """Inner automorphism ``x -> u x u*``."""
    u._check(x)
    pi = u.permutation
    if pi is not None:
        inv = np.empty_like(pi)
        inv[pi] = np.arange(len(pi))
        return x._new(x.num[np.ix_(inv, inv)], x.den)
    if not u.is_unitary():
        raise NotUnitary("ad() needs a unitary")
    return u @ x @ u.adjoint()


def normalized_trace(x: StageElement) -> Fraction:
    return x.normalized_trace()


# ---------------------------------------------------------------------------
# operator norm brackets


@dataclass(frozen=True)
class NormBracket:
    lower: float
    upper: float
    converged: bool = True
    squarings: int = 0

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, v: float) -> bool:
        return self.lower <= v <= self.upper

    def to_json(self):
        return {"lower": self.lower, "upper": self.upper, "converged": self.converged}


def _down(v: float, ulps: int = 2) -> float:
    for _ in range(ulps):
        v = math.nextafter(v, -math.inf)
    return max(v, 0.0)


def _up(v: float, ulps: int = 2) -> float:
    for _ in range(ulps):
        v = math.nextafter(v, math.inf)
    return v


def _frac_sqrt_bracket(q: Fraction) -> tuple:
    """Floats ``lo <= sqrt(q) <= hi``."""
    s = math.sqrt(float(q))
    lo, hi = _down(s, 4), _up(s, 4)
    # float(q) is correctly rounded; four ulps absorb both roundings
    return lo, hi


def op_norm_bracket(x: StageElement, tol: float = 1e-9, max_squarings: int = 64) -> NormBracket:
    """Two-sided bracket on the operator norm ``||x||``.

    The upper bound uses ``lambda_max(A)^(2^k) <= ||A^(2^k)||_F`` for
    ``A = x* x`` with repeated normalized squaring; the lower bound is the
    exact Rayleigh quotient ``||x v|| / ||v||`` at the dominant column of the
    last power, evaluated in rationals.
    """
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    if x.is_zero():
        return NormBracket(0.0, 0.0)
    if x.is_diagonal:
        m = max(abs(int(v)) for v in x.num.diagonal())
        lo, hi = Fraction(m, x.den), Fraction(m, x.den)
        return NormBracket(_down(float(lo), 1), _up(float(hi), 1))

    gram = x.num.T @ x.num  # x* x == gram / den^2
    big = max(abs(int(v)) for v in gram.flat)
    shift = max(0, big.bit_length() - 900)
    scale = big >> shift
    a = np.array([[int(v) >> shift if shift else int(v) for v in row] for row in gram], dtype=float) / float(scale)
    # true lambda_max(x* x) = lambda_max(a) * scale * 2^shift / den^2
    log_unit = math.log(scale) + shift * math.log(2) - 2 * math.log(x.den)

    n = x.dim
    margin = 8 * n * np.finfo(float).eps + 1e-15
    frob = np.linalg.norm(a)
    exact_frob2 = Fraction(sum(int(v) * int(v) for v in x.num.flat), x.den * x.den)
    hi_frob = _frac_sqrt_bracket(exact_frob2)[1]

    b = a / frob
    log_pow = math.log(frob)  # log ||a^(2^k)||_F
    k = 0
    best_hi = hi_frob
    lower = 0.0
    converged = False
    while True:
        lam_log = log_pow / (2 ** k) + log_unit
        hi = math.exp(0.5 * lam_log) * (1 + margin)
        best_hi = min(best_hi, hi)
        col = int(np.argmax(np.linalg.norm(b, axis=0)))
        lower = max(lower, _rayleigh_lower(x, b[:, col]))
        if best_hi - lower <= tol * max(1.0, best_hi):
            converged = True
            break
        if k >= max_squarings:
            break
        c = b @ b
        f = np.linalg.norm(c)
        if f == 0.0 or not math.isfinite(f):
            break
        log_pow = 2 * log_pow + math.log(f)
        b = c / f
        k += 1
    return NormBracket(float(min(lower, best_hi)), float(best_hi), converged, k)


def _rayleigh_lower(x: StageElement, v: np.ndarray) -> float:
    if not np.any(v):
        return 0.0
    vmax = float(np.max(np.abs(v)))
    vi = np.array([int(round(t / vmax * 2 ** 40)) for t in v], dtype=object)
    vv = int(vi @ vi)
    if vv == 0:
        return 0.0
    w = x.num @ vi
    ww = int(w @ w)
    return _frac_sqrt_bracket(Fraction(ww, vv * x.den * x.den))[0]
