"""Finite G-sets given by permutations of generators, and induction ``G x_H X``.

Words are strings over single-letter generator names; an uppercase letter is
the inverse generator and ``a^k`` is shorthand for a power, e.g. ``"baBa"``
or ``"b a b^-1 a"``.  Words act on the left: in ``s1 s2 ... sk`` the last
letter acts first.  Points are 0-indexed internally and printed 1-indexed in
cycle notation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

from .errors import InconsistentCocycle, InvalidInput, RelationViolation
from .groups import FgAbelianGroup, GroupElement
from .snf import smith_normal_form
from .uhf import FactorSequence

Word = tuple  # of (generator index, +1 | -1)


# ---------------------------------------------------------------------------
# words and presentations

_TOKEN = re.compile(r"([A-Za-z])(?:\^(-?\d+))?")


@dataclass(frozen=True)
class Presentation:
    generators: tuple
    relations: tuple = ()

    def __post_init__(self):
        gens = tuple(self.generators)
        if any(len(g) != 1 or not g.islower() for g in gens):
            raise InvalidInput("generator names must be single lowercase letters")
        if len(set(gens)) != len(gens):
            raise InvalidInput("duplicate generator names")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "relations", tuple(self.relations))
        for r in self.relations:
            self.parse(r)

    def parse(self, text: str) -> Word:
        text = text.strip()
        if text in ("", "1", "e"):
            return ()
        out = []
        pos = 0
        for m in _TOKEN.finditer(text):
            if text[pos:m.start()].strip():
                raise InvalidInput(f"cannot parse word {text!r}")
            pos = m.end()
            letter, exp = m.group(1), int(m.group(2) or 1)
            name = letter.lower()
            if name not in self.generators:
                raise InvalidInput(f"unknown generator {letter!r} in {text!r}")
            if letter.isupper():
                exp = -exp
            sign = 1 if exp > 0 else -1
            out.extend([(self.generators.index(name), sign)] * abs(exp))
        if text[pos:].strip():
            raise InvalidInput(f"cannot parse word {text!r}")
        return free_reduce(tuple(out))

    def format(self, word: Word) -> str:
        if not word:
            return "1"
        return "".join(self.generators[i] if e > 0 else self.generators[i].upper() for i, e in word)

    def relation_words(self) -> list:
        return [self.parse(r) for r in self.relations]


def free_reduce(word: Word) -> Word:
    out = []
    for letter in word:
        if out and out[-1][0] == letter[0] and out[-1][1] == -letter[1]:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def inverse_word(word: Word) -> Word:
    return tuple((i, -e) for i, e in reversed(word))


def reduced_words(pres: Presentation, max_len: int) -> list:
    """Freely reduced words of length ``<= max_len`` in shortlex order."""
    letters = [(i, s) for i in range(len(pres.generators)) for s in (1, -1)]
    out = [()]
    layer = [()]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for lt in letters:
                if w and w[-1][0] == lt[0] and w[-1][1] == -lt[1]:
                    continue
                nxt.append(w + (lt,))
        out.extend(nxt)
        layer = nxt
    return out


# ---------------------------------------------------------------------------
# permutations


def compose(p: tuple, q: tuple) -> tuple:
    """``p o q`` (``q`` first)."""
    return tuple(p[i] for i in q)


def invert(p: tuple) -> tuple:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def to_cycles(p: Sequence[int]) -> str:
    """One-line cycle notation, 1-indexed, fixed points omitted."""
    seen = set()
    parts = []
    for start in range(len(p)):
        if start in seen or p[start] == start:
            seen.add(start)
            continue
        cyc = []
        x = start
        while x not in seen:
            seen.add(x)
            cyc.append(x + 1)
            x = p[x]
        parts.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(parts) or "()"


def from_cycles(text: str, n: int) -> tuple:
    img = list(range(n))
    for cyc in re.findall(r"\(([^)]*)\)", text):
        pts = [int(t) - 1 for t in cyc.replace(",", " ").split()]
        if any(not 0 <= x < n for x in pts) or len(set(pts)) != len(pts):
            raise InvalidInput(f"bad cycle ({cyc}) on {n} points")
        for a, b in zip(pts, pts[1:] + pts[:1]):
            img[a] = b
    if sorted(img) != list(range(n)):
        raise InvalidInput(f"{text!r} is not a permutation of {n} points")
    return tuple(img)


def cycle_power(n: int, c: int) -> tuple:
    """``c``-th power of the full cycle ``x -> x + 1 mod n``."""
    return tuple((x + c) % n for x in range(n))


@dataclass(frozen=True)
class PermutationAction:
    presentation: Presentation
    n: int
    perms: tuple

    def __post_init__(self):
        perms = tuple(tuple(int(v) for v in p) for p in self.perms)
        if len(perms) != len(self.presentation.generators):
            raise InvalidInput("need one permutation per generator")
        for p in perms:
            if sorted(p) != list(range(self.n)):
                raise InvalidInput(f"{p} is not a permutation of {self.n} points")
        object.__setattr__(self, "perms", perms)
        for rel, w in zip(self.presentation.relations, self.presentation.relation_words()):
            img = self.perm_of(w)
            if img != tuple(range(self.n)):
                raise RelationViolation(rel, f"evaluates to {to_cycles(img)}")

    @cached_property
    def _inverses(self):
        return tuple(invert(p) for p in self.perms)

    def perm_of(self, word) -> tuple:
        if isinstance(word, str):
            word = self.presentation.parse(word)
        out = tuple(range(self.n))
        for i, e in word:
            out = compose(out, self.perms[i] if e > 0 else self._inverses[i])
        return out

    def act(self, word, x: int) -> int:
        return self.perm_of(word)[x]

    def to_json(self):
        return {"n": self.n, "generators": list(self.presentation.generators),
                "perms": [to_cycles(p) for p in self.perms]}


def action_from_generators(presentation: Presentation, perms, n: Optional[int] = None) -> PermutationAction:
    """Validated action; ``perms`` may be image tuples or cycle strings."""
    if n is None:
        tuples = [p for p in perms if not isinstance(p, str)]
        if len(tuples) != len(perms):
            raise InvalidInput("cycle notation needs an explicit number of points")
        n = len(tuples[0]) if tuples else 1
    perms = [from_cycles(p, n) if isinstance(p, str) else tuple(p) for p in perms]
    return PermutationAction(presentation, n, tuple(perms))


def fixed_points(action: PermutationAction, word) -> int:
    p = action.perm_of(word)
    return sum(1 for x, y in enumerate(p) if x == y)


def product_action(X: PermutationAction, Y: PermutationAction) -> PermutationAction:
    """Diagonal action on ``X x Y``, point ``(x, y)`` at index ``x * |Y| + y``."""
    if X.presentation != Y.presentation:
        raise InvalidInput("product action needs a common presentation")
    perms = []
    for p, q in zip(X.perms, Y.perms):
        perms.append(tuple(p[x] * Y.n + q[y] for x in range(X.n) for y in range(Y.n)))
    return PermutationAction(X.presentation, X.n * Y.n, tuple(perms))


# ---------------------------------------------------------------------------
# normal forms


class NormalForm:
    """Exact multiplication in a concrete group, elements hashable."""

    presentation: Presentation

    def identity(self):
        raise NotImplementedError

    def generator(self, i: int):
        raise NotImplementedError

    def mul(self, x, y):
        raise NotImplementedError

    def inv(self, x):
        raise NotImplementedError

    def evaluate(self, word) -> object:
        if isinstance(word, str):
            word = self.presentation.parse(word)
        out = self.identity()
        for i, e in word:
            g = self.generator(i)
            out = self.mul(out, g if e > 0 else self.inv(g))
        return out

    def format(self, x) -> str:
        return str(x)


def abelian_presentation(names: Sequence[str], orders: Sequence[int]) -> Presentation:
    """Commuting generators; ``orders[i] == 0`` means infinite order."""
    rels = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = names[i], names[j]
            rels.append(f"{a}{b}{a.upper()}{b.upper()}")
    for a, d in zip(names, orders):
        if d:
            rels.append(f"{a}^{d}")
    return Presentation(tuple(names), tuple(rels))


class AbelianNormalForm(NormalForm):
    def __init__(self, group: FgAbelianGroup, names: Optional[Sequence[str]] = None):
        if group.localized:
            raise InvalidInput("Z_(p) summands have no finite presentation")
        names = tuple(names or "abcdefghijklmnopqrstuvwxyz"[:group.ngens])
        if len(names) != group.ngens:
            raise InvalidInput("one name per generator")
        self.group = group
        self.presentation = abelian_presentation(names, group.gen_orders())

    def identity(self):
        return self.group.identity()

    def generator(self, i):
        return self.group.generator(i)

    def mul(self, x, y):
        return self.group.add(x, y)

    def inv(self, x):
        return self.group.neg(x)

    def format(self, x):
        parts = [f"{n}^{c}" if c != 1 else n for n, c in zip(self.presentation.generators, x.coords()) if c]
        return " ".join(parts) or "1"


class KleinBottleNormalForm(NormalForm):
    """``<a, b | b a b^-1 = a^-1>``; elements ``a^m b^n`` stored as ``(m, n)``."""

    presentation = Presentation(("a", "b"), ("baBa",))

    def identity(self):
        return (0, 0)

    def generator(self, i):
        return ((1, 0), (0, 1))[i]

    def mul(self, x, y):
        (m1, n1), (m2, n2) = x, y
        return (m1 + (-1) ** (n1 % 2) * m2, n1 + n2)

    def inv(self, x):
        m, n = x
        return (-((-1) ** (n % 2)) * m, -n)

    def format(self, x):
        m, n = x
        parts = ([f"a^{m}" if m != 1 else "a"] if m else []) + ([f"b^{n}" if n != 1 else "b"] if n else [])
        return " ".join(parts) or "1"


# ---------------------------------------------------------------------------
# subgroups


class Subgroup:
    """Finite-index subgroup ``H`` with its own presentation.

    ``contains``/``to_word`` work on ambient normal-form elements;
    ``to_ambient`` evaluates an ``H``-word in the ambient group.
    """

    ambient: NormalForm
    presentation: Presentation

    def contains(self, x) -> bool:
        raise NotImplementedError

    def to_word(self, x) -> Word:
        raise NotImplementedError

    def to_ambient(self, word) -> object:
        raise NotImplementedError

    def to_vector(self, x) -> Optional[tuple]:
        """Integer coordinates w.r.t. ``H``'s generators, when ``H`` is abelian."""
        return None


class KleinTranslationSubgroup(Subgroup):
    """``N = <a, b^2>`` of index 2, isomorphic to ``Z^2`` with generators ``x = a``, ``y = b^2``."""

    def __init__(self):
        self.ambient = KleinBottleNormalForm()
        self.presentation = abelian_presentation(("x", "y"), (0, 0))

    def contains(self, x):
        return x[1] % 2 == 0

    def to_vector(self, x):
        if not self.contains(x):
            raise InvalidInput(f"{self.ambient.format(x)} is not in <a, b^2>")
        return (x[0], x[1] // 2)

    def to_word(self, x):
        m, k = self.to_vector(x)
        return self.presentation.parse(f"x^{m} y^{k}") if (m or k) else ()

    def to_ambient(self, word):
        if isinstance(word, str):
            word = self.presentation.parse(word)
        m = sum(e for i, e in word if i == 0)
        k = sum(e for i, e in word if i == 1)
        return (m, 2 * k)


class AbelianSubgroup(Subgroup):
    """Subgroup of an abelian group spanned by given elements.

    Membership and coordinates come from the Smith form of
    ``[generators | torsion relations]``.
    """

    def __init__(self, ambient: AbelianNormalForm, gens: Sequence[GroupElement], names=None):
        self.ambient = ambient
        G = ambient.group
        self.gens = tuple(gens)
        s = len(self.gens)
        names = tuple(names or "xyzuvw"[:s])
        n = G.ngens
        cols = [list(g.coords()) for g in self.gens]
        for j, d in enumerate(G.gen_orders()):
            if d:
                col = [0] * n
                col[j] = d
                cols.append(col)
        self._A = [[cols[c][r] for c in range(len(cols))] for r in range(n)]
        self._ncols = len(cols)
        U, D, V = smith_normal_form(self._A, self._ncols) if n else ([], [], [[int(i == j) for j in range(self._ncols)] for i in range(self._ncols)])
        self._U, self._V = U, V
        self._d = [D[i][i] for i in range(min(n, self._ncols))] if n else []
        r = sum(1 for d in self._d if d)
        kernel = [[V[i][j] for i in range(s)] for j in range(r, self._ncols)]
        rels = list(abelian_presentation(names, [0] * s).relations)
        for vec in kernel:
            if any(vec):
                rels.append(" ".join(f"{nm}^{c}" for nm, c in zip(names, vec) if c))
        self.presentation = Presentation(names, tuple(rels))

    def _solve(self, x: GroupElement):
        v = list(x.coords())
        Uv = [sum(u * t for u, t in zip(row, v)) for row in self._U]
        y = [0] * self._ncols
        for i, val in enumerate(Uv):
            d = self._d[i] if i < len(self._d) else 0
            if d == 0:
                if val:
                    return None
            elif val % d:
                return None
            else:
                y[i] = val // d
        return [sum(self._V[i][j] * y[j] for j in range(self._ncols)) for i in range(self._ncols)]

    def contains(self, x):
        return self._solve(x) is not None

    def to_vector(self, x):
        sol = self._solve(x)
        if sol is None:
            raise InvalidInput(f"{x} is not in the subgroup")
        return tuple(sol[:len(self.gens)])

    def to_word(self, x):
        vec = self.to_vector(x)
        return tuple((i, 1 if c > 0 else -1) for i, c in enumerate(vec) for _ in range(abs(c)))

    def to_ambient(self, word):
        if isinstance(word, str):
            word = self.presentation.parse(word)
        G = self.ambient.group
        out = G.identity()
        for i, e in word:
            out = G.add(out, self.gens[i] if e > 0 else G.neg(self.gens[i]))
        return out


# ---------------------------------------------------------------------------
# transversals and induction


@dataclass(frozen=True)
class SubgroupTransversal:
    """Coset representatives ``g_1..g_k`` of ``H`` and the factorization table.

    ``table[s][i] = (j, h)`` records ``s g_i = g_j h`` with ``h`` an ``H``-word.
    """

    nf: NormalForm
    subgroup: Subgroup
    reps: tuple  # ambient words
    table: tuple

    def __post_init__(self):
        k = len(self.reps)
        for s, row in enumerate(self.table):
            if len(row) != k or sorted(j for j, _ in row) != list(range(k)):
                raise InconsistentCocycle(f"generator {self.nf.presentation.generators[s]} does not permute cosets")
        H = self.subgroup
        e = self.nf.identity()
        for rel, w in zip(self.nf.presentation.relations, self.nf.presentation.relation_words()):
            for i in range(k):
                j, h = self.trace_word(w, i)
                if j != i or H.to_ambient(h) != e:
                    raise InconsistentCocycle(f"relation {rel} fails on coset {i + 1}")

    @property
    def index(self) -> int:
        return len(self.reps)

    @classmethod
    def from_normal_form(cls, nf: NormalForm, subgroup: Subgroup, reps: Sequence[str]):
        rep_elems = [nf.evaluate(r) for r in reps]
        rep_inv = [nf.inv(g) for g in rep_elems]
        table = []
        for s in range(len(nf.presentation.generators)):
            row = []
            for gi in rep_elems:
                x = nf.mul(nf.generator(s), gi)
                hits = [j for j, gj_inv in enumerate(rep_inv) if subgroup.contains(nf.mul(gj_inv, x))]
                if len(hits) != 1:
                    raise InconsistentCocycle("representatives do not form a transversal")
                j = hits[0]
                row.append((j, subgroup.to_word(nf.mul(rep_inv[j], x))))
            table.append(tuple(row))
        return cls(nf, subgroup, tuple(reps), tuple(table))

    def step(self, letter, i: int):
        s, e = letter
        if e > 0:
            return self.table[s][i]
        for j, (t, h) in enumerate(self.table[s]):
            if t == i:
                return j, inverse_word(h)
        raise InconsistentCocycle("broken coset permutation")

    def trace_word(self, word: Word, i: int):
        """``w g_i = g_j h``; returns ``(j, h)`` with ``h`` an ``H``-word."""
        h = ()
        for letter in reversed(word):
            i, hs = self.step(letter, i)
            h = hs + h
        return i, free_reduce(h)

    def conjugates(self, g) -> list:
        """``(i, g_i^{-1} g g_i)`` for every coset ``i`` where the conjugate lies in ``H``."""
        x = as_element(self.nf, g)
        out = []
        for i, r in enumerate(self.reps):
            gi = self.nf.evaluate(r)
            c = self.nf.mul(self.nf.inv(gi), self.nf.mul(x, gi))
            if self.subgroup.contains(c):
                out.append((i, c))
        return out

    def to_json(self):
        P, Hp = self.nf.presentation, self.subgroup.presentation
        return {
            "reps": [r or "1" for r in self.reps],
            "cocycle": {P.generators[s]: [[j + 1, Hp.format(h)] for j, h in row]
                        for s, row in enumerate(self.table)},
        }


def as_element(nf: NormalForm, g):
    """Accept a word string, a parsed word, or an element already in normal form."""
    if isinstance(g, str):
        return nf.evaluate(g)
    if isinstance(g, tuple) and all(isinstance(t, tuple) for t in g):
        return nf.evaluate(g)  # parsed word; () is the empty word
    return g


def conjugate_trace_set(transversal: SubgroupTransversal, g, normal_form: Optional[NormalForm] = None) -> list:
    """The set ``H_g`` of conjugates ``g_i^{-1} g g_i`` lying in ``H`` (first-seen order)."""
    if normal_form is not None and normal_form.presentation != transversal.nf.presentation:
        raise InvalidInput("normal form does not match the transversal's group")
    out = []
    for _, c in transversal.conjugates(g):
        if c not in out:
            out.append(c)
    return out


def induce(transversal: SubgroupTransversal, h_action: PermutationAction) -> PermutationAction:
    """Induced action on ``{1..k} x X``; point ``(i, x)`` has index ``i * |X| + x``."""
    if h_action.presentation != transversal.subgroup.presentation:
        raise InvalidInput("H-action presentation does not match the subgroup")
    n = h_action.n
    perms = []
    for row in transversal.table:
        img = [0] * (transversal.index * n)
        for i, (j, h) in enumerate(row):
            ph = h_action.perm_of(h)
            for x in range(n):
                img[i * n + x] = j * n + ph[x]
        perms.append(tuple(img))
    return PermutationAction(transversal.nf.presentation, transversal.index * n, tuple(perms))


def induced_fixed_points(transversal: SubgroupTransversal, h_action: PermutationAction, g) -> int:
    """``fix_Y(g) = sum over cosets with g_i^{-1} g g_i in H of fix_X(g_i^{-1} g g_i)``."""
    H = transversal.subgroup
    return sum(fixed_points(h_action, H.to_word(c)) for _, c in transversal.conjugates(g))


# ---------------------------------------------------------------------------
# level families of actions


def translation_action(presentation: Presentation, moduli: Sequence[int]) -> PermutationAction:
    """Free abelian group acting on ``prod Z/q_i`` by unit translations.

    Generator ``i`` adds 1 to coordinate ``i``; points are mixed-radix with
    the first coordinate most significant.
    """
    moduli = tuple(int(q) for q in moduli)
    total = math.prod(moduli)
    perms = []
    for i in range(len(moduli)):
        stride = math.prod(moduli[i + 1:])
        q = moduli[i]
        perms.append(tuple(x - ((x // stride) % q) * stride + (((x // stride) % q + 1) % q) * stride
                           for x in range(total)))
    return PermutationAction(presentation, total, tuple(perms))


@dataclass
class InducedFamily:
    """Level ``l`` action ``G x_H (Z/n_l)^s`` with ``H`` free abelian of rank ``s``
    translating ``(Z/n_l)^s``."""

    transversal: SubgroupTransversal
    moduli: FactorSequence
    label: str = "induced"
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def nf(self):
        return self.transversal.nf

    def base_action(self, l: int) -> PermutationAction:
        H = self.transversal.subgroup
        s = len(H.presentation.generators)
        return translation_action(H.presentation, (self.moduli.factor(l),) * s)

    def action(self, l: int) -> PermutationAction:
        if l not in self._cache:
            self._cache[l] = induce(self.transversal, self.base_action(l))
        return self._cache[l]

    def fixed_points(self, g, l: int) -> int:
        """Closed form: only cosets with conjugate in ``H`` contribute, and a translation
        is free unless it vanishes mod ``n_l``."""
        n = self.moduli.factor(l)
        H = self.transversal.subgroup
        s = len(H.presentation.generators)
        total = 0
        for _, c in self.transversal.conjugates(g):
            vec = H.to_vector(c)
            if all(v % n == 0 for v in vec):
                total += n ** s
        return total

    def free_at_all_large_levels(self, g) -> Optional[bool]:
        """Analytic: every element of ``H_g`` is a nonzero translation and ``n_l`` is increasing."""
        H = self.transversal.subgroup
        conj = conjugate_trace_set(self.transversal, g)
        if not conj:
            return True
        if any(not any(H.to_vector(c)) for c in conj):
            return False
        return True if self.moduli.rule.unbounded() else None


def klein_bottle_transversal() -> SubgroupTransversal:
    nf = KleinBottleNormalForm()
    return SubgroupTransversal.from_normal_form(nf, KleinTranslationSubgroup(), ("", "b"))


def klein_bottle_family(p: int) -> InducedFamily:
    """``Z x| Z`` acting on ``(Z x| Z) x_N (Z/p^l)^2``, a set of size ``2 p^(2l)``."""
    return InducedFamily(klein_bottle_transversal(), FactorSequence.prime_power(p), label=f"klein-bottle p={p}")


def distinct_elements(nf: NormalForm, max_len: int) -> list:
    """``(shortlex-first word, element)`` for every element reachable by a reduced word of length ``<= max_len``."""
    seen = {}
    for w in reduced_words(nf.presentation, max_len):
        x = nf.evaluate(w)
        if x not in seen:
            seen[x] = w
    return [(w, x) for x, w in seen.items()]


def cantor_interleave(selections: Sequence[Sequence[int]]) -> list:
    """Interleave per-element level lists along anti-diagonals ``(element i, choice j)``."""
    out = []
    total = sum(len(s) for s in selections)
    d = 0
    longest = max((len(s) for s in selections), default=0)
    while len(out) < total and d <= len(selections) + longest:
        for i in range(d + 1):
            j = d - i
            if i < len(selections) and j < len(selections[i]):
                out.append((i, selections[i][j]))
        d += 1
    return out


def regroup_schedule(family: InducedFamily, max_len: int, horizon: int, per_element: int = 3) -> dict:
    """For each nontrivial element up to ``max_len``, the first ``per_element`` levels
    ``<= horizon`` where it acts without fixed points, interleaved in Cantor order."""
    e = family.nf.identity()
    elems = [(w, x) for w, x in distinct_elements(family.nf, max_len) if x != e]
    selections = []
    for w, x in elems:
        lv = [l for l in range(1, horizon + 1) if family.fixed_points(x, l) == 0][:per_element]
        selections.append(lv)
    return {
        "elements": [(family.nf.presentation.format(w), x) for w, x in elems],
        "selections": selections,
        "schedule": cantor_interleave(selections),
        "missing": [family.nf.presentation.format(w) for (w, _), s in zip(elems, selections) if not s],
    }
