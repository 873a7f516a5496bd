"""Characters of finite abelian groups, Bratteli data of finite-stage crossed
products, integer direct limits, and the closed-form K-groups.

Character values are stored as exponents ``e`` of ``zeta_N = exp(2 pi i / N)``
with ``N`` the exponent of the group; integer combinations of roots of unity
are reduced modulo the cyclotomic polynomial, so every multiplicity is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Optional, Sequence

from sympy import cyclotomic_poly, primerange

from .errors import InconsistencyError, InvalidInput
from .groups import EmbeddingPattern, FgAbelianGroup
from .gset import PermutationAction, abelian_presentation, cycle_power, fixed_points
from .snf import elementary_divisors, matmul
from .uhf import FactorSequence, SequenceRule, SupernaturalNumber

DEFAULT_PRIME_BOUND = 97


# ---------------------------------------------------------------------------
# cyclotomic arithmetic


@lru_cache(maxsize=None)
def _cyclotomic(N: int) -> tuple:
    """Coefficients of Phi_N, lowest degree first."""
    return tuple(int(c) for c in reversed(cyclotomic_poly(N, polys=True).all_coeffs()))


def cyclotomic_reduce(coeffs: Sequence[int], N: int) -> list:
    """Reduce ``sum c_k zeta_N^k`` to its canonical form of degree < phi(N)."""
    phi = _cyclotomic(N)
    deg = len(phi) - 1
    r = [0] * max(len(coeffs), deg)
    for k, c in enumerate(coeffs):
        r[k % N if k >= N else k] += int(c)
    for top in range(len(r) - 1, deg - 1, -1):
        c = r[top]
        if c:
            for i, a in enumerate(phi):
                r[top - deg + i] -= c * a
    return r[:deg]


def root_sum(terms, N: int) -> Optional[int]:
    """Exact value of ``sum w * zeta_N^e`` over ``(w, e)`` if it is an integer, else None."""
    coeffs = [0] * N
    for w, e in terms:
        coeffs[e % N] += w
    r = cyclotomic_reduce(coeffs, N)
    if any(r[1:]):
        return None
    return r[0] if r else 0


# ---------------------------------------------------------------------------
# character tables


@dataclass(frozen=True)
class CharacterTable:
    orders: tuple

    def __post_init__(self):
        orders = tuple(int(d) for d in self.orders)
        if any(d < 1 for d in orders):
            raise InvalidInput("orders must be positive")
        object.__setattr__(self, "orders", orders)

    @property
    def exponent(self) -> int:
        return math.lcm(1, *self.orders)

    @property
    def order(self) -> int:
        return math.prod(self.orders)

    @cached_property
    def elements(self) -> tuple:
        return tuple(itertools.product(*(range(d) for d in self.orders)))

    # the dual group is indexed by the same exponent tuples
    @property
    def characters(self) -> tuple:
        return self.elements

    def value(self, chi, h) -> int:
        """``chi(h)`` as an exponent of ``zeta_N``."""
        N = self.exponent
        return sum(c * x * (N // d) for c, x, d in zip(chi, h, self.orders)) % N

    def mul(self, chi, psi) -> tuple:
        return tuple((a + b) % d for a, b, d in zip(chi, psi, self.orders))

    def inv(self, chi) -> tuple:
        return tuple(-a % d for a, d in zip(chi, self.orders))

    def trivial(self) -> tuple:
        return (0,) * len(self.orders)

    def inner(self, chi, psi) -> Fraction:
        """``(1/|H|) sum_h chi(h) psi(h)^{-1}``, exactly."""
        N = self.exponent
        s = root_sum(((1, self.value(chi, h) - self.value(psi, h)) for h in self.elements), N)
        return Fraction(s, self.order)

    def is_real(self, chi) -> bool:
        return self.inv(chi) == chi

    def label(self, chi) -> str:
        return "chi(" + ",".join(map(str, chi)) + ")"


def characters(orders: Sequence[int]) -> CharacterTable:
    return CharacterTable(tuple(orders))


# ---------------------------------------------------------------------------
# actions of H and multiplicities


def _element_word(h) -> tuple:
    return tuple((i, 1) for i, c in enumerate(h) for _ in range(c))


def fixed_point_table(table: CharacterTable, action: PermutationAction) -> dict:
    if len(action.presentation.generators) != len(table.orders):
        raise InvalidInput("action does not match the character table")
    return {h: fixed_points(action, _element_word(h)) for h in table.elements}


def perm_character_multiplicity(table: CharacterTable, action: PermutationAction, psi,
                                fix: Optional[dict] = None) -> int:
    """``m(psi) = (1/|H|) sum_h fix(h) psi(h)^{-1}``."""
    fix = fixed_point_table(table, action) if fix is None else fix
    s = root_sum(((fix[h], -table.value(psi, h)) for h in table.elements), table.exponent)
    if s is None or s % table.order:
        raise InconsistencyError(f"multiplicity of {table.label(psi)} is not an integer; invalid action?")
    return s // table.order


def multiplicities(table: CharacterTable, action: PermutationAction) -> dict:
    fix = fixed_point_table(table, action)
    m = {psi: perm_character_multiplicity(table, action, psi, fix) for psi in table.characters}
    if sum(m.values()) != action.n:
        raise InconsistencyError("multiplicities do not add up to the number of points")
    return m


def bratteli_step(table: CharacterTable, action: PermutationAction) -> list:
    """``M[chi'][chi] = m(chi' chi^{-1})``; rows and columns follow ``table.characters``."""
    m = multiplicities(table, action)
    chars = table.characters
    return [[m[table.mul(c2, table.inv(c1))] for c1 in chars] for c2 in chars]


def trivial_action(orders: Sequence[int], n: int) -> PermutationAction:
    pres = abelian_presentation(_names(len(orders)), orders)
    ident = tuple(range(n))
    return PermutationAction(pres, n, tuple(ident for _ in orders))


def _names(k: int) -> list:
    return [chr(ord("a") + i) for i in range(k)]


def pattern_actions(pattern: EmbeddingPattern, stages: int) -> list:
    """Level actions of a finite group: each generator acts by its coordinate power of the ``n_l``-cycle."""
    G = pattern.group
    if not G.is_finite:
        raise InvalidInput("crossed-product diagrams need a finite group")
    pres = abelian_presentation(_names(len(G.torsion)), G.torsion)
    out = []
    for l in range(1, stages + 1):
        n = pattern.modulus(l)
        perms = [cycle_power(n, pattern.coordinate(G.generator(j), l)) for j in range(G.ngens)]
        out.append(PermutationAction(pres, n, tuple(perms)))
    return out


# ---------------------------------------------------------------------------
# Bratteli diagrams


@dataclass(frozen=True)
class BratteliDiagram:
    labels: tuple
    sizes: tuple  # per stage, block sizes in label order
    matrices: tuple  # per step, rows indexed by the new stage

    def __post_init__(self):
        for m, M in enumerate(self.matrices):
            prev, nxt = self.sizes[m], self.sizes[m + 1]
            if [sum(r * s for r, s in zip(row, prev)) for row in M] != list(nxt):
                raise InconsistencyError(f"size recursion fails at step {m + 1}")

    def to_text(self) -> str:
        lines = []
        for m, sizes in enumerate(self.sizes):
            for lab, s in zip(self.labels, sizes):
                lines.append(f"stage {m} block {lab} size {s}")
            if m < len(self.matrices):
                for lab, row in zip(self.labels, self.matrices[m]):
                    lines.append(f"step {m + 1} row {lab} " + " ".join(map(str, row)))
        return "\n".join(lines) + "\n"

    def to_json(self):
        return {"labels": list(self.labels), "sizes": [list(s) for s in self.sizes],
                "matrices": [[list(r) for r in M] for M in self.matrices]}


@dataclass(frozen=True)
class UhfVerdict:
    kind: str  # UHF | NotUHF | UnknownUpTo
    supernatural: Optional[SupernaturalNumber]
    windows: tuple  # closing stage of each telescope window with all entries equal
    reason: str

    def to_json(self):
        return {"verdict": self.kind,
                "supernatural": self.supernatural.to_json() if self.supernatural else None,
                "windows": list(self.windows), "reason": self.reason}


def _all_equal(M) -> bool:
    first = M[0][0]
    return all(v == first for row in M for v in row)


def crossed_product_diagram(table: CharacterTable, actions: Sequence[PermutationAction],
                            pattern: Optional[EmbeddingPattern] = None, horizon: int = 64):
    """Bratteli diagram of ``M_{n_1...n_m} x| H`` for ``m = 0..len(actions)``.

    With a pattern the verdict is analytic: the telescope closes infinitely
    often iff every ``h != 0`` acts freely at infinitely many levels.
    """
    labels = tuple(table.label(c) for c in table.characters)
    sizes = [tuple(1 for _ in labels)]
    mats, windows = [], []
    window = None
    for m, act in enumerate(actions, start=1):
        M = bratteli_step(table, act)
        fix = fixed_point_table(table, act)
        if all(f == 0 for h, f in fix.items() if any(h)):
            if act.n % table.order:
                raise InconsistencyError(f"free level {m} with {act.n} points not divisible by |H|")
            if any(v != act.n // table.order for row in M for v in row):
                raise InconsistencyError(f"free level {m} gives a nonconstant matrix")
        mats.append(tuple(tuple(r) for r in M))
        sizes.append(tuple(sum(r * s for r, s in zip(row, sizes[-1])) for row in M))
        window = M if window is None else matmul(M, window)
        if _all_equal(window):
            windows.append(m)
            window = None
    diagram = BratteliDiagram(labels, tuple(sizes), tuple(mats))
    order = SupernaturalNumber.of_integer(table.order)
    if table.order == 1:
        windows = list(range(1, len(actions) + 1))
    if pattern is not None:
        verdict = _pattern_verdict(table, pattern, horizon, tuple(windows), order)
    else:
        verdict = _finite_verdict(table, actions, mats, tuple(windows), order)
    return diagram, verdict


def _pattern_verdict(table, pattern, horizon, windows, order):
    G = pattern.group
    seq_sn = pattern.sequence().rule.supernatural()
    unknown = []
    for h in table.elements:
        if not any(h):
            continue
        v = pattern.eventually_nonzero(G.element(tors=h), horizon)
        if v is False:
            return UhfVerdict("NotUHF", None, windows,
                              f"{h} acts trivially from some level on; the diagram splits")
        if v is None:
            unknown.append(h)
    if unknown:
        return UhfVerdict("UnknownUpTo", None, windows, f"no certificate for {unknown} up to {horizon}")
    sn = None if seq_sn is None else seq_sn * order
    return UhfVerdict("UHF", sn, windows, "every nonzero element acts freely at infinitely many levels")


def _finite_verdict(table, actions, mats, windows, order):
    k = table.order
    # components of the union graph of all steps
    adj = {i: {i} for i in range(k)}
    for M in mats:
        for a in range(k):
            for b in range(k):
                if M[a][b]:
                    adj[a].add(b)
                    adj[b].add(a)
    seen, comps = set(), 0
    for s in range(k):
        if s in seen:
            continue
        comps += 1
        stack = [s]
        while stack:
            v = stack.pop()
            if v not in seen:
                seen.add(v)
                stack.extend(adj[v] - seen)
    if comps > 1:
        return UhfVerdict("NotUHF", None, windows, f"diagram splits into {comps} disconnected columns")
    if windows and windows[-1] == len(actions):
        sn = order
        for a in actions:
            sn = sn * SupernaturalNumber.of_integer(a.n)
        return UhfVerdict("UHF", sn, windows, f"telescope closes at stages {list(windows)}")
    return UhfVerdict("UnknownUpTo", None, windows, f"telescope open after stage {windows[-1] if windows else 0}")


# ---------------------------------------------------------------------------
# direct limits


@dataclass(frozen=True)
class DirectLimitSystem:
    """``Z^{r_0} -> Z^{r_1} -> ...``; ``maps[m]`` is ``r_{m+1} x r_m``.

    ``rule`` marks a scalar system ``x -> n_m x`` given in closed form; then
    ``maps`` holds a finite prefix only.
    """

    ranks: tuple
    maps: tuple
    rule: Optional[SequenceRule] = None

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        maps = tuple(tuple(tuple(int(v) for v in row) for row in M) for M in self.maps)
        if len(maps) != len(ranks) - 1:
            raise InvalidInput("need one map between consecutive ranks")
        for m, M in enumerate(maps):
            if len(M) != ranks[m + 1] or any(len(row) != ranks[m] for row in M):
                raise InvalidInput(f"map {m} has the wrong shape for {ranks[m]} -> {ranks[m + 1]}")
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "maps", maps)

    @classmethod
    def scalar(cls, rule: SequenceRule, steps: int) -> "DirectLimitSystem":
        seq = FactorSequence(rule)
        return cls((1,) * (steps + 1), tuple(((seq.factor(m),),) for m in range(1, steps + 1)), rule)

    @classmethod
    def constant(cls, M, steps: int) -> "DirectLimitSystem":
        r = len(M)
        return cls((r,) * (steps + 1), tuple(M for _ in range(steps)))

    def composite(self, m: int, M: int) -> list:
        """``phi_{M,m}: Z^{r_m} -> Z^{r_M}``."""
        out = [[int(i == j) for j in range(self.ranks[m])] for i in range(self.ranks[m])]
        for k in range(m, M):
            out = matmul([list(r) for r in self.maps[k]], out)
        return out

    def to_json(self):
        out = {"ranks": list(self.ranks), "maps": [[list(r) for r in M] for M in self.maps]}
        if self.rule is not None:
            out["rule"] = self.rule.to_json()
        return out


@dataclass(frozen=True)
class LimitInvariants:
    rank: int
    stabilized_from: int
    divisible: dict  # prime -> "infinite" | "up-to-horizon" | False
    certificate: str

    def divisible_primes(self) -> list:
        return [p for p, v in self.divisible.items() if v]

    def to_json(self):
        return {"rank": self.rank, "stabilized_from": self.stabilized_from,
                "divisible": {str(p): v for p, v in self.divisible.items()},
                "certificate": self.certificate}


def _vp(n: int, p: int) -> int:
    if n == 0:
        return math.inf
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def direct_limit_invariants(system: DirectLimitSystem, prime_bound: int = DEFAULT_PRIME_BOUND) -> LimitInvariants:
    """Rational rank of the limit and ``p``-divisibility for primes ``p <= prime_bound``.

    The rank is the largest ``rank phi_{M,m}`` over the first half of the
    stages, with ``M`` the last stage.  A scalar system with a closed-form rule is
    ``p``-divisible iff ``p`` divides infinitely many multipliers.  For a
    table, ``p`` counts as divisible up to the horizon when every element of
    the first half of the stages becomes divisible by ``p`` in the last one.
    """
    M = len(system.ranks) - 1
    if M == 0:
        return LimitInvariants(system.ranks[0], 0, {p: False for p in primerange(2, prime_bound + 1)}, "no maps")
    ranks = [len(elementary_divisors(system.composite(m, M), system.ranks[m])) for m in range(M)]
    half = max(1, (M + 1) // 2)
    # the image of stage m in the limit has rank lim_M rank phi_{M,m}; keep M - m >= M/2
    rank = max(ranks[:half])
    start = ranks.index(rank)
    primes = list(primerange(2, prime_bound + 1))
    if system.rule is not None and system.rule.supernatural() is not None:
        sn = system.rule.supernatural()
        div = {p: "infinite" if sn.divides_infinitely(p) else False for p in primes}
        cert = f"closed form: multipliers have supernatural number {sn}"
    else:
        div = {}
        for p in primes:
            ok = True
            for m in range(half):
                ed = elementary_divisors(system.composite(m, M), system.ranks[m])
                if len(ed) < system.ranks[m] or min(_vp(d, p) for d in ed) < 1:
                    ok = False
                    break
            div[p] = "up-to-horizon" if ok else False
        cert = f"finite check through stage {M}"
    return LimitInvariants(rank, start, div, cert)


# ---------------------------------------------------------------------------
# K-groups of the crossed product


@dataclass(frozen=True)
class KInvariants:
    k0_rank: Optional[int]  # None means countably infinite
    k1_rank: Optional[int]
    r: Optional[int]
    rokhlin: bool
    order: str = "trace-induced strict order, unit [1]"
    trace_normalization: str = "tau([1]) = 1"
    notes: tuple = ()

    def ranks(self) -> tuple:
        return (self.k0_rank, self.k1_rank)

    def to_json(self):
        def fmt(v):
            return "countably-infinite" if v is None else v
        return {"K0_rank": fmt(self.k0_rank), "K1_rank": fmt(self.k1_rank), "r": fmt(self.r),
                "rokhlin_hypothesis": self.rokhlin, "order": self.order,
                "trace": self.trace_normalization, "notes": list(self.notes)}


def k_invariants(G: Optional[FgAbelianGroup] = None, *, r: Optional[int] = None,
                 rokhlin: bool = True) -> KInvariants:
    """Ranks of ``K_0, K_1`` over the rationals; ``r = None`` with no group is infinite rank."""
    if G is not None:
        r = G.torsion_free_rank
    notes = []
    if not rokhlin:
        notes.append("Rokhlin hypothesis not asserted by the caller; formula may not apply")
    if r is None:
        return KInvariants(None, None, None, rokhlin, notes=tuple(notes))
    if r < 0:
        raise InvalidInput("rank must be nonnegative")
    if r == 0:
        notes.append("finite group: crossed product is the universal UHF algebra")
        return KInvariants(1, 0, 0, rokhlin, notes=tuple(notes))
    k = 2 ** (r - 1)
    return KInvariants(k, k, r, rokhlin, notes=tuple(notes))


def exterior_ranks(r: int) -> tuple:
    """Even and odd parts of the exterior algebra on ``Q^r``: ``(sum C(r,2i), sum C(r,2i+1))``."""
    even = sum(math.comb(r, i) for i in range(0, r + 1, 2))
    return even, 2 ** r - even
