"""Abelian groups and their embeddings into products of finite cyclic groups.

An embedding ``G -> prod_l Z/n_l`` is described by an :class:`EmbeddingPattern`.
Whether a nonzero element keeps nonzero coordinates at infinitely many levels
(i.e. avoids the direct sum ``(+)_l Z/n_l``) is decided analytically for the
closed-form rules in this module and is never searched for without bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from sympy import factorint

from .errors import InvalidInput
from .snf import diagonal, smith_normal_form
from .uhf import INFINITY, Factorial, FactorSequence, PrimePower, SequenceRule, SupernaturalNumber

DEFAULT_BOX_BOUND = 10
MAX_BOX_SIZE = 1_000_000


# ---------------------------------------------------------------------------
# finitely generated abelian groups


@dataclass(frozen=True)
class GroupElement:
    free: tuple = ()
    tors: tuple = ()
    local: tuple = ()

    def coords(self) -> tuple:
        return self.free + self.local + self.tors

    def to_json(self):
        out = {"free": list(self.free), "tors": list(self.tors)}
        if self.local:
            out["local"] = [str(x) for x in self.local]
        return out

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coords()) + ")"


@dataclass(frozen=True)
class FgAbelianGroup:
    """``Z^rank (+) Z_(p_1) (+) ... (+) Z/d_1 (+) ... (+) Z/d_t``.

    ``localized`` lists primes ``p`` for summands ``Z_(p)`` (rationals whose
    denominator is prime to ``p``); these are the only non finitely
    generated pieces and are modeled as one coordinate each.
    Generator order is: free, localized, torsion.
    """

    rank: int = 0
    torsion: tuple = ()
    localized: tuple = ()

    def __post_init__(self):
        tors = tuple(int(d) for d in self.torsion)
        if self.rank < 0:
            raise InvalidInput("rank must be nonnegative")
        if any(d < 2 for d in tors):
            raise InvalidInput("torsion coefficients must be >= 2")
        if any(b % a for a, b in zip(tors, tors[1:])):
            raise InvalidInput(f"torsion {tors} is not a divisibility chain")
        object.__setattr__(self, "torsion", tors)
        object.__setattr__(self, "localized", tuple(int(p) for p in self.localized))

    @property
    def ngens(self) -> int:
        return self.rank + len(self.localized) + len(self.torsion)

    @property
    def torsion_free_rank(self) -> int:
        return self.rank + len(self.localized)

    @property
    def is_finite(self) -> bool:
        return self.torsion_free_rank == 0

    @property
    def order(self) -> Optional[int]:
        return math.prod(self.torsion) if self.is_finite else None

    def gen_orders(self) -> tuple:
        """Order of each generator, 0 meaning infinite."""
        return (0,) * (self.rank + len(self.localized)) + self.torsion

    def element(self, free=(), tors=(), local=()) -> GroupElement:
        free = tuple(int(v) for v in free) or (0,) * self.rank
        tors = tuple(int(v) for v in tors) or (0,) * len(self.torsion)
        local = tuple(Fraction(v) for v in local) or (Fraction(0),) * len(self.localized)
        if len(free) != self.rank or len(tors) != len(self.torsion) or len(local) != len(self.localized):
            raise InvalidInput("element shape does not match the group")
        for p, x in zip(self.localized, local):
            if x.denominator % p == 0:
                raise InvalidInput(f"{x} is not in Z_({p})")
        tors = tuple(t % d for t, d in zip(tors, self.torsion))
        return GroupElement(free, tors, local)

    def from_coords(self, coords: Sequence) -> GroupElement:
        r, s = self.rank, len(self.localized)
        coords = list(coords)
        if len(coords) != self.ngens:
            raise InvalidInput(f"expected {self.ngens} coordinates, got {len(coords)}")
        return self.element(coords[:r], coords[r + s:], coords[r:r + s])

    def identity(self) -> GroupElement:
        return self.element()

    def generator(self, j: int) -> GroupElement:
        c = [0] * self.ngens
        c[j] = 1
        return self.from_coords(c)

    def generators(self) -> list:
        return [self.generator(j) for j in range(self.ngens)]

    def add(self, g: GroupElement, h: GroupElement) -> GroupElement:
        return self.element(
            tuple(a + b for a, b in zip(g.free, h.free)),
            tuple(a + b for a, b in zip(g.tors, h.tors)),
            tuple(a + b for a, b in zip(g.local, h.local)),
        )

    def neg(self, g: GroupElement) -> GroupElement:
        return self.scale(-1, g)

    def scale(self, c: int, g: GroupElement) -> GroupElement:
        return self.element(tuple(c * a for a in g.free), tuple(c * a for a in g.tors),
                            tuple(c * a for a in g.local))

    def is_zero(self, g: GroupElement) -> bool:
        return not any(g.coords())

    def element_order(self, g: GroupElement) -> Optional[int]:
        """Order of ``g``; None for infinite order."""
        if any(g.free) or any(g.local):
            return None
        return math.lcm(1, *(d // math.gcd(t, d) for t, d in zip(g.tors, self.torsion)))

    def to_json(self):
        out = {"kind": "abelian", "rank": self.rank, "torsion": list(self.torsion)}
        if self.localized:
            out["localized"] = list(self.localized)
        return out

    def __str__(self):
        parts = ["Z"] * self.rank + [f"Z_({p})" for p in self.localized] + [f"Z/{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"


def canonical_decomposition(relation_matrix: Sequence[Sequence[int]], ngens: int) -> FgAbelianGroup:
    """Invariant-factor form of ``Z^ngens / rowspace(relation_matrix)``."""
    rows = [list(r) for r in relation_matrix]
    if any(len(r) != ngens for r in rows):
        raise InvalidInput(f"relation matrix must have {ngens} columns")
    if not rows:
        return FgAbelianGroup(rank=ngens)
    _, D, _ = smith_normal_form(rows, ngens)
    diag = [d for d in diagonal(D) if d]
    return FgAbelianGroup(rank=ngens - len(diag), torsion=tuple(d for d in diag if d >= 2))


# ---------------------------------------------------------------------------
# per-generator coordinate rules


def _residue_inverse(b: int, m: int) -> int:
    return pow(b, -1, m)


class GeneratorRule:
    """Coordinate stream of one generator: stream index ``j >= 1`` -> ``Z/modulus(j)``."""

    name = "rule"

    def modulus(self, j: int) -> int:
        raise NotImplementedError

    def image(self, c, j: int, order: int) -> int:
        """Coordinate of ``c * generator`` (``order`` 0 = infinite)."""
        raise NotImplementedError

    def infinitely_nonzero(self, c, order: int) -> Optional[bool]:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class QuotientMod(GeneratorRule):
    """Generator ``1 -> n_j / gcd(n_j, d)`` in ``Z/n_j`` (``1 -> 1`` for free generators).

    This is reduction mod ``n_j`` on ``Z`` and the natural inclusion when
    ``d | n_j``.  ``support`` restricts nonzero images to finitely many stream
    indices.
    """

    moduli: FactorSequence
    support: Optional[frozenset] = None
    name = "QuotientMod"

    def __post_init__(self):
        if self.moduli.length is not None:
            raise InvalidInput("QuotientMod needs a closed-form modulus rule; use CustomTable for tables")
        if self.support is not None:
            object.__setattr__(self, "support", frozenset(int(s) for s in self.support))

    def modulus(self, j):
        return self.moduli.factor(j)

    def image(self, c, j, order):
        if isinstance(c, Fraction):
            if c.denominator != 1:
                raise InvalidInput("QuotientMod acts on integer coordinates only")
            c = c.numerator
        if self.support is not None and j not in self.support:
            return 0
        n = self.modulus(j)
        if order == 0:
            return c % n
        return (c * (n // math.gcd(n, order))) % n

    def infinitely_nonzero(self, c, order):
        if c == 0:
            return False
        if self.support is not None:
            return False
        rule: SequenceRule = self.moduli.rule
        if order == 0:
            unbounded = rule.unbounded()
            if unbounded is None:
                return None
            # the only bounded library rule is Constant
            return True if unbounded else c % rule.factor(1) != 0
        gcds = rule.recurrent_gcds(order)
        if gcds is None:
            return None
        return any(c % g for g in gcds)

    def to_json(self):
        out = {"rule": self.name, "moduli": self.moduli.to_json()}
        if self.support is not None:
            out["support"] = sorted(self.support)
        return out


@dataclass(frozen=True)
class FactorialMod(QuotientMod):
    """``Z -> Z/(j+1)!`` by reduction."""

    moduli: FactorSequence = field(default_factory=lambda: FactorSequence(Factorial()))
    name = "FactorialMod"

    def to_json(self):
        out = {"rule": self.name}
        if self.support is not None:
            out["support"] = sorted(self.support)
        return out


@dataclass(frozen=True)
class PadicDigits(GeneratorRule):
    """``Z_(p) -> Z/p^j``, ``a/b -> a * b^{-1} mod p^j``."""

    p: int
    name = "PadicDigits"

    def __post_init__(self):
        PrimePower(self.p)  # validates primality

    def modulus(self, j):
        return self.p ** j

    def image(self, c, j, order):
        if order:
            raise InvalidInput("PadicDigits applies to torsion-free generators")
        c = Fraction(c)
        if c.denominator % self.p == 0:
            raise InvalidInput(f"{c} is not an element of Z_({self.p})")
        m = self.p ** j
        return (c.numerator * _residue_inverse(c.denominator % m, m)) % m if m > 1 else 0

    def infinitely_nonzero(self, c, order):
        # p^j eventually exceeds the p-adic valuation of the numerator
        return c != 0

    def to_json(self):
        return {"rule": self.name, "p": self.p}


# ---------------------------------------------------------------------------
# patterns


class EmbeddingPattern:
    """Level maps ``G -> Z/n_l`` for ``l = 1, 2, ...``."""

    group: FgAbelianGroup
    kind = "pattern"

    @property
    def horizon(self) -> Optional[int]:
        """Number of defined levels; None for infinitely many."""
        return None

    def modulus(self, l: int) -> int:
        raise NotImplementedError

    def coordinate(self, g: GroupElement, l: int) -> int:
        raise NotImplementedError

    def eventually_nonzero(self, g: GroupElement, search: int = 64) -> Optional[bool]:
        """True: nonzero at infinitely many levels.  False: zero from some level on."""
        raise NotImplementedError

    def sequence(self) -> FactorSequence:
        """The moduli ``n_l`` as a factor sequence, for building stage elements."""
        return FactorSequence(PatternModuli(self))

    def image_order(self, g: GroupElement, l: int) -> int:
        n = self.modulus(l)
        return n // math.gcd(self.coordinate(g, l), n)

    def _check_level(self, l):
        if l < 1 or (self.horizon is not None and l > self.horizon):
            raise InvalidInput(f"level {l} outside pattern horizon {self.horizon}")

    def to_json(self) -> dict:
        raise NotImplementedError


def _combine(verdicts) -> Optional[bool]:
    verdicts = list(verdicts)
    if any(v is True for v in verdicts):
        return True
    if all(v is False for v in verdicts):
        return False
    return None


@dataclass(frozen=True)
class ProductPattern(EmbeddingPattern):
    """Tensor-product layout: generator ``j`` owns levels ``j+1, j+1+m, j+1+2m, ...``."""

    group: FgAbelianGroup
    rules: tuple
    kind = "product"

    def __post_init__(self):
        rules = tuple(self.rules)
        if len(rules) != self.group.ngens:
            raise InvalidInput(f"need one rule per generator ({self.group.ngens}), got {len(rules)}")
        nloc = len(self.group.localized)
        for j, (rule, order) in enumerate(zip(rules, self.group.gen_orders())):
            is_local = self.group.rank <= j < self.group.rank + nloc
            if isinstance(rule, PadicDigits):
                if order:
                    raise InvalidInput("PadicDigits cannot carry a torsion generator")
                if is_local and rule.p != self.group.localized[j - self.group.rank]:
                    raise InvalidInput("PadicDigits prime must match the Z_(p) summand")
            elif is_local:
                raise InvalidInput("Z_(p) summands need a PadicDigits rule")
        object.__setattr__(self, "rules", rules)

    def _locate(self, l):
        m = len(self.rules)
        return (l - 1) % m, (l - 1) // m + 1

    def modulus(self, l):
        self._check_level(l)
        if not self.rules:
            return 2
        j, idx = self._locate(l)
        return self.rules[j].modulus(idx)

    def coordinate(self, g, l):
        self._check_level(l)
        if not self.rules:
            return 0
        j, idx = self._locate(l)
        return self.rules[j].image(g.coords()[j], idx, self.group.gen_orders()[j])

    def component_verdict(self, j: int, c) -> Optional[bool]:
        return self.rules[j].infinitely_nonzero(c, self.group.gen_orders()[j])

    def eventually_nonzero(self, g, search=64):
        return _combine(self.component_verdict(j, c)
                        for j, c in enumerate(g.coords()) if c != 0)

    def to_json(self):
        return {"kind": self.kind, "rules": [r.to_json() for r in self.rules]}


@dataclass(frozen=True)
class CustomTable(EmbeddingPattern):
    """Finite table of generator images; ``tail`` says what happens past it.

    ``tail="unknown"`` (default) leaves later levels unspecified;
    ``tail="zero"`` declares every later coordinate zero.
    """

    group: FgAbelianGroup
    moduli: tuple
    table: tuple
    tail: str = "unknown"
    kind = "custom_table"

    def __post_init__(self):
        if self.group.localized:
            raise InvalidInput("CustomTable cannot describe Z_(p) summands")
        moduli = tuple(int(n) for n in self.moduli)
        table = tuple(tuple(int(v) for v in row) for row in self.table)
        if not moduli or len(moduli) != len(table):
            raise InvalidInput("CustomTable needs one modulus per table row")
        if any(n < 2 for n in moduli):
            raise InvalidInput("every modulus must be >= 2")
        if any(len(row) != self.group.ngens for row in table):
            raise InvalidInput("each table row needs one image per generator")
        if self.tail not in ("unknown", "zero"):
            raise InvalidInput("tail must be 'unknown' or 'zero'")
        table = tuple(tuple(v % n for v in row) for row, n in zip(table, moduli))
        object.__setattr__(self, "moduli", moduli)
        object.__setattr__(self, "table", table)

    @property
    def horizon(self):
        return len(self.table)

    def modulus(self, l):
        self._check_level(l)
        return self.moduli[l - 1]

    def coordinate(self, g, l):
        self._check_level(l)
        return sum(c * t for c, t in zip(g.coords(), self.table[l - 1])) % self.moduli[l - 1]

    def eventually_nonzero(self, g, search=64):
        return False if self.tail == "zero" else None

    def to_json(self):
        return {"kind": self.kind, "moduli": list(self.moduli), "table": [list(r) for r in self.table],
                "tail": self.tail}


def cantor_schedule(count: int, source_levels: Optional[int] = None) -> list:
    """First ``count`` entries of the diagonal order 1; 1,2; 1,2,3; ...

    With finitely many source levels every diagonal is capped at that number.
    """
    out = []
    d = 1
    while len(out) < count:
        top = d if source_levels is None else min(d, source_levels)
        out.extend(range(1, top + 1))
        d += 1
    return out[:count]


def cantor_level(l: int) -> int:
    """Source level visited at resequenced level ``l`` (uncapped schedule)."""
    d = (math.isqrt(8 * l) + 1) // 2
    while d * (d - 1) // 2 >= l:
        d -= 1
    while d * (d + 1) // 2 < l:
        d += 1
    return l - d * (d - 1) // 2


@dataclass(frozen=True)
class DiagonalResequence(EmbeddingPattern):
    """Resequencing of the diagonal embedding ``G -> (prod_l Z/n_l)^N``.

    Every source level is visited infinitely often, so any element with one
    nonzero source coordinate has infinitely many nonzero coordinates.
    """

    inner: EmbeddingPattern
    kind = "diagonal_resequence"

    @property
    def group(self):
        return self.inner.group

    def source_level(self, l: int) -> int:
        if l < 1:
            raise InvalidInput("levels start at 1")
        H = self.inner.horizon
        if H is None:
            return cantor_level(l)
        return cantor_schedule(l, H)[-1]

    def modulus(self, l):
        return self.inner.modulus(self.source_level(l))

    def coordinate(self, g, l):
        return self.inner.coordinate(g, self.source_level(l))

    def eventually_nonzero(self, g, search=64):
        if self.inner.eventually_nonzero(g, search) is True:
            return True
        H = self.inner.horizon
        top = search if H is None else min(H, search)
        if any(self.inner.coordinate(g, l) for l in range(1, top + 1)):
            return True
        if H is not None and top == H:
            return False  # g is zero at every source level
        return None

    def to_json(self):
        return {"kind": self.kind, "inner": self.inner.to_json()}


@dataclass(frozen=True)
class PatternModuli(SequenceRule):
    pattern: EmbeddingPattern

    @property
    def length(self):
        return self.pattern.horizon

    def factor(self, l):
        return self.pattern.modulus(l)

    def supernatural(self):
        pat = self.pattern
        if isinstance(pat, ProductPattern):
            acc = SupernaturalNumber()
            for r in pat.rules:
                s = (SupernaturalNumber(((r.p, INFINITY),)) if isinstance(r, PadicDigits)
                     else r.moduli.rule.supernatural())
                if s is None:
                    return None
                acc = acc * s
            return acc if pat.rules else None
        if isinstance(pat, DiagonalResequence):
            inner = pat.inner
            if inner.horizon is not None:
                # every table level recurs, so each prime it contains recurs
                primes = set()
                for l in range(1, inner.horizon + 1):
                    primes |= set(factorint(inner.modulus(l)))
                return SupernaturalNumber(tuple((q, INFINITY) for q in primes))
            s = PatternModuli(inner).supernatural()
            if s is None or s.universal:
                return s
            return SupernaturalNumber(tuple((q, INFINITY) for q, _ in s.exponents))
        return None

    def unbounded(self):
        return None

    def to_json(self):
        return {"rule": "Pattern", "pattern": self.pattern.to_json()}


def diagonal_resequence(pattern: EmbeddingPattern) -> EmbeddingPattern:
    if pattern.group.ngens == 0:
        return pattern
    return DiagonalResequence(pattern)


def coordinate(pattern: EmbeddingPattern, g: GroupElement, l: int) -> int:
    return pattern.coordinate(g, l)


def verify_homomorphism(pattern: EmbeddingPattern, horizon: int) -> list:
    """Levels ``<= horizon`` where a torsion relation ``d * e_j = 0`` fails."""
    G = pattern.group
    top = horizon if pattern.horizon is None else min(horizon, pattern.horizon)
    bad = []
    for l in range(1, top + 1):
        n = pattern.modulus(l)
        for j, d in enumerate(G.gen_orders()):
            if d and (d * pattern.coordinate(G.generator(j), l)) % n:
                bad.append((l, j))
    return bad


# ---------------------------------------------------------------------------
# trivial-intersection predicate


@dataclass(frozen=True)
class IntersectionVerdict:
    kind: str  # ProvenTrivial | Counterexample | UnknownUpTo
    element: Optional[GroupElement] = None
    horizon: Optional[int] = None
    box_bound: int = DEFAULT_BOX_BOUND
    detail: str = ""

    def to_json(self):
        return {
            "verdict": self.kind,
            "element": self.element.to_json() if self.element is not None else None,
            "horizon": self.horizon,
            "box_bound": self.box_bound,
            "detail": self.detail,
        }


def _component_candidates(G: FgAbelianGroup, j: int, bound: int) -> list:
    """Nonzero values of coordinate ``j`` inside the generating box, small first."""
    order = G.gen_orders()[j]
    r, s = G.rank, len(G.localized)
    if r <= j < r + s:
        p = G.localized[j - r]
        vals = {Fraction(a, b) for a in range(-bound, bound + 1) for b in range(1, bound + 1)
                if a and b % p}
        return sorted(vals, key=lambda x: (max(abs(x.numerator), x.denominator), x))
    if order:
        vals = sorted({c % order for c in range(-bound, bound + 1)} - {0})
        return vals
    return sorted((c for c in range(-bound, bound + 1) if c), key=lambda c: (abs(c), -c))


def box_elements(G: FgAbelianGroup, bound: int):
    """Every nonzero element of the generating box, ordered by height."""
    cands = [[0] + _component_candidates(G, j, bound) for j in range(G.ngens)]
    size = math.prod(len(c) for c in cands)
    if size > MAX_BOX_SIZE:
        raise InvalidInput(f"generating box has {size} elements; lower the bound")

    def height(x):
        x = Fraction(x)
        return max(abs(x.numerator), x.denominator if x else 0)

    elems = [coords for coords in itertools.product(*cands) if any(coords)]
    elems.sort(key=lambda cs: (max(height(c) for c in cs), sum(1 for c in cs if c)))
    return [G.from_coords(cs) for cs in elems]


def _nonzero_within(pattern, g, horizon):
    top = horizon if pattern.horizon is None else min(horizon, pattern.horizon)
    return any(pattern.coordinate(g, l) for l in range(1, top + 1))


def trivial_intersection(pattern: EmbeddingPattern, horizon: int,
                         box_bound: int = DEFAULT_BOX_BOUND) -> IntersectionVerdict:
    """Decide ``i(G) n (+)_l Z/n_l = 0`` on the generating box.

    ``ProvenTrivial`` needs an analytic certificate for every nonzero box
    element; a single element that is provably zero from some level on is a
    ``Counterexample``; anything else is ``UnknownUpTo(horizon)``.
    """
    G = pattern.group
    if G.ngens == 0:
        return IntersectionVerdict("ProvenTrivial", horizon=horizon, box_bound=box_bound,
                                   detail="trivial group")
    if isinstance(pattern, CustomTable):
        H = min(horizon, pattern.horizon)
        if pattern.tail == "zero":
            g = next(iter(box_elements(G, 1)))
            return IntersectionVerdict("Counterexample", g, H, box_bound,
                                       "table declares every later coordinate zero")
        return IntersectionVerdict("UnknownUpTo", None, H, box_bound,
                                   "custom table: levels past the table are unknown")

    if isinstance(pattern, ProductPattern):
        # an element avoids the direct sum iff one of its components does
        unknown = None
        for j in range(G.ngens):
            for c in _component_candidates(G, j, box_bound):
                v = pattern.component_verdict(j, c)
                if v is False:
                    coords = [0] * G.ngens
                    coords[j] = c
                    g = G.from_coords(coords)
                    why = ("coordinates vanish beyond a finite level"
                           if _nonzero_within(pattern, g, horizon) else "element lies in the kernel")
                    return IntersectionVerdict("Counterexample", g, horizon, box_bound, why)
                if v is None and unknown is None:
                    coords = [0] * G.ngens
                    coords[j] = c
                    unknown = G.from_coords(coords)
        if unknown is not None:
            return IntersectionVerdict("UnknownUpTo", unknown, horizon, box_bound,
                                       "no closed-form certificate for this rule")
        return IntersectionVerdict("ProvenTrivial", None, horizon, box_bound,
                                   "closed-form certificate for every box element")

    unknown = None
    for g in box_elements(G, box_bound):
        v = pattern.eventually_nonzero(g, horizon)
        if v is False:
            why = ("coordinates vanish beyond a finite level"
                   if _nonzero_within(pattern, g, horizon) else "element lies in the kernel")
            return IntersectionVerdict("Counterexample", g, horizon, box_bound, why)
        if v is None and unknown is None:
            unknown = g
    if unknown is not None:
        return IntersectionVerdict("UnknownUpTo", unknown, horizon, box_bound, "undecided within horizon")
    return IntersectionVerdict("ProvenTrivial", None, horizon, box_bound,
                               "every box element has infinitely many nonzero coordinates")


# ---------------------------------------------------------------------------
# divisible groups: the negative shadow


def prufer_level_images(p: int, n: int, depth: int) -> set:
    """Images of the order-``p`` element ``1/p`` under all homomorphisms
    ``Z/p^depth -> Z/n`` (the depth-``depth`` piece of the Pruefer ``p``-group).

    Brute force over the image ``y`` of the generator ``1/p^depth``.
    """
    pk = p ** depth
    return {(p ** (depth - 1) * y) % n for y in range(n) if (pk * y) % n == 0}


def prufer_obstruction(p: int, max_modulus: int) -> dict:
    """For each modulus ``n <= max_modulus``: the smallest truncation depth
    forcing ``1/p -> 0``.  Since the Pruefer group contains every depth,
    no level can see ``1/p``, hence no injective pattern exists."""
    out = {}
    for n in range(2, max_modulus + 1):
        depth = 1
        while prufer_level_images(p, n, depth) != {0}:
            depth += 1
        out[n] = depth
    return out
