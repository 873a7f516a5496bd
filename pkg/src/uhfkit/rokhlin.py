"""Rokhlin towers, uniform-outerness witnesses and vanishing-trace certificates.

Everything here is built on diagonal 0/1 projections in the product basis,
so the tower identities hold exactly; norms are only estimated where an
approximating element enters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from sympy import factorint

from .errors import CertificateFailure, InconsistencyError, InvalidInput
from .groups import EmbeddingPattern, GroupElement
from .gset import InducedFamily, as_element, cycle_power
from .uhf import (
    DEFAULT_STAGE_CAP,
    StageElement,
    ad,
    embed_stage,
    lift_permutation,
    op_norm_bracket,
    permutation_matrix,
    stage_dim,
)

DEFAULT_HORIZON = 64
DEFAULT_POWER_BOUND = 10
OUTERNESS_CONSTANT = 13


# ---------------------------------------------------------------------------
# the automorphism alpha_g at a finite stage


def alpha_unitary(pattern: EmbeddingPattern, g: GroupElement, stage: int, **kw) -> StageElement:
    """``rho(i(g))`` at ``stage``: the ``c_l``-th power of the ``n_l``-cycle on each factor."""
    seq = pattern.sequence()
    factors = seq.prefix(stage)
    images = np.arange(math.prod(factors))
    for l in range(1, stage + 1):
        sigma = cycle_power(factors[l - 1], pattern.coordinate(g, l))
        images = lift_permutation(sigma, l, factors)[images]
    return permutation_matrix(seq, stage, images, **kw)


def alpha(pattern: EmbeddingPattern, g: GroupElement, x: StageElement) -> StageElement:
    return ad(alpha_unitary(pattern, g, x.stage), x)


def _norm_upper(x: StageElement, tol: float = 1e-9) -> Fraction:
    """Exact norm for diagonal elements, certified float upper bound otherwise."""
    if x.is_diagonal:
        return Fraction(max((abs(int(v)) for v in x.num.diagonal()), default=0), x.den)
    return Fraction(op_norm_bracket(x, tol).upper)


# ---------------------------------------------------------------------------
# vanishing trace


@dataclass(frozen=True)
class VanishingProfile:
    levels: tuple  # levels <= horizon with no fixed points
    fixed: tuple  # fixed-point count at every level 1..horizon
    verdict: str  # ProvenInfinite | ProvenFinite | UnknownUpTo
    horizon: int

    def to_json(self):
        return {"levels": list(self.levels), "fixed": list(self.fixed),
                "verdict": self.verdict, "horizon": self.horizon}


def vanishing_trace_profile(source: Union[EmbeddingPattern, InducedFamily], g, horizon: int) -> VanishingProfile:
    """Levels where ``g`` acts without fixed points (normalized trace 0)."""
    if isinstance(source, InducedFamily):
        x = as_element(source.nf, g)
        if x == source.nf.identity():
            raise InvalidInput("the identity has fixed points everywhere")
        fixed = tuple(source.fixed_points(x, l) for l in range(1, horizon + 1))
        cert = source.free_at_all_large_levels(x)
    else:
        if source.group.is_zero(g):
            raise InvalidInput("the identity has fixed points everywhere")
        top = horizon if source.horizon is None else min(horizon, source.horizon)
        # the c-th power of an n-cycle is free unless c = 0 mod n
        fixed = tuple(0 if source.coordinate(g, l) else source.modulus(l) for l in range(1, top + 1))
        cert = source.eventually_nonzero(g, horizon)
    levels = tuple(l for l, f in enumerate(fixed, start=1) if f == 0)
    verdict = {True: "ProvenInfinite", False: "ProvenFinite"}.get(cert, "UnknownUpTo")
    return VanishingProfile(levels, fixed, verdict, horizon)


# ---------------------------------------------------------------------------
# uniform outerness


@dataclass(frozen=True)
class OuternessWitness:
    projections: tuple
    level: int
    k: int
    brackets: tuple  # NormBracket of p_j a alpha_g(p_j)
    epsilon: Fraction
    certified: bool
    sums_to_p: bool

    @property
    def achieved(self) -> float:
        return max((b.upper for b in self.brackets), default=0.0)

    @property
    def bound(self) -> Fraction:
        return OUTERNESS_CONSTANT * self.epsilon

    def to_json(self):
        return {
            "level": self.level,
            "k": self.k,
            "epsilon": str(self.epsilon),
            "certified_bound": str(self.bound),
            "achieved": self.achieved,
            "brackets": [b.to_json() for b in self.brackets],
            "certified": self.certified,
            "sums_to_p": self.sums_to_p,
            "projections": [_diag_support(p) for p in self.projections],
        }


def _diag_support(p: StageElement) -> list:
    if not p.is_diagonal:
        return []
    return [i for i, v in enumerate(p.num.diagonal()) if v]


def block_projections(pattern: EmbeddingPattern, level: int, k: int, stage: int) -> list:
    """``q_j' = sum of e_ii (on factor ``level``) with floor(i k / n_l) = j``, j = 0..k-1."""
    seq = pattern.sequence()
    factors = seq.prefix(stage)
    n = factors[level - 1]
    coord = np.indices(factors).reshape(len(factors), -1)[level - 1]
    block = (coord * k) // n
    return [StageElement.diagonal(seq, stage, [int(b == j) for b in block]) for j in range(k)]


def outerness_witness(a: StageElement, p: StageElement, g: GroupElement, pattern: EmbeddingPattern,
                      epsilon, level: int, *, base_stage: Optional[int] = None,
                      tol: float = 1e-9) -> OuternessWitness:
    """Split ``p`` into ``k`` pieces with ``||p_j a alpha_g(p_j)||`` small.

    ``base_stage`` is the stage of the approximants ``b, q`` of ``a, p``
    (defaults to ``a.stage``); ``level`` must lie beyond it and ``g`` must
    have image of order ``k > 1`` there.  ``p`` has to commute with factor
    ``level`` (true whenever it is supported in earlier factors).
    """
    epsilon = Fraction(epsilon)
    L = a.stage if base_stage is None else base_stage
    if level <= L:
        raise InvalidInput(f"level {level} must exceed the base stage {L}")
    k = pattern.image_order(g, level)
    if k == 1:
        raise InvalidInput(f"g has trivial image at level {level}")
    if p.is_zero() or not p.is_projection():
        raise InvalidInput("p must be a nonzero projection")
    M = max(a.stage, p.stage, level)
    a, p = embed_stage(a, M), embed_stage(p, M)
    if op_norm_bracket(a, tol).lower > 1:
        raise InvalidInput("||a|| must be at most 1")
    U = alpha_unitary(pattern, g, M)
    pieces, brackets = [], []
    for q in block_projections(pattern, level, k, M):
        pq = p @ q
        if pq != q @ p:
            raise InvalidInput("p does not commute with the chosen factor")
        pieces.append(pq)
        brackets.append(op_norm_bracket(pq @ a @ ad(U, pq), tol))
    total = pieces[0]
    for x in pieces[1:]:
        total = total + x
    bound = OUTERNESS_CONSTANT * epsilon
    certified = all(Fraction(b.upper) <= bound for b in brackets)
    return OuternessWitness(tuple(pieces), level, k, tuple(brackets), epsilon, certified, total == p)


def _sqrt_upper(q: Fraction, bits: int = 64) -> Fraction:
    """Rational ``t >= sqrt(q)``."""
    scale = 1 << bits
    num = q.numerator * scale * scale
    r = math.isqrt(num // q.denominator) + 1
    return Fraction(r, scale)


def _frobenius_sq(x: StageElement) -> Fraction:
    return Fraction(sum(int(v) * int(v) for v in x.num.flat), x.den * x.den)


def random_staged_pair(seq, base_stage: int, stage: int, epsilon, rng, *, entry_bound: int = 9):
    """Random rational ``(a, b)``: ``b`` at ``base_stage``, ``a`` at ``stage``,
    with ``||a|| <= 1`` and ``||a - b|| <= epsilon`` certified through exact
    Frobenius norms."""
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < 1:
        raise InvalidInput("epsilon must lie in (0, 1)")

    def draw(L, radius):
        d = stage_dim(seq, L)
        raw = StageElement(seq, L, rng.integers(-entry_bound, entry_bound + 1, size=(d, d)).astype(object), entry_bound)
        f2 = _frobenius_sq(raw)
        if f2 == 0:
            return raw
        t = radius / _sqrt_upper(f2)
        return raw.scale(t.limit_denominator(10 ** 6) * Fraction(999, 1000))

    b = draw(base_stage, 1 - epsilon)
    d = draw(stage, epsilon)
    a = embed_stage(b, stage) + d
    # Frobenius bounds the operator norm; recheck exactly after rounding the scales
    if _frobenius_sq(d) > epsilon ** 2 or _frobenius_sq(b) > (1 - epsilon) ** 2:
        raise InconsistencyError("scaled sample exceeds its radius")
    return a, b


# ---------------------------------------------------------------------------
# Rokhlin towers


@dataclass(frozen=True)
class RokhlinTower:
    projections: tuple
    stage: int
    k: int
    levels: tuple  # levels carrying the tower
    index_sets: tuple  # diagonal support of each projection
    achieved: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "k": self.k,
            "stage": self.stage,
            "levels": list(self.levels),
            "index_sets": [list(s) for s in self.index_sets],
            "achieved": self.achieved,
        }


def _select_levels(pattern, g, k, L, horizon):
    chosen, missing = [], []
    top = horizon if pattern.horizon is None else min(horizon, pattern.horizon)
    for P, r in sorted(factorint(k).items()):
        q = P ** r
        if any(pattern.image_order(g, l) % q == 0 for l in chosen):
            continue
        hit = next((l for l in range(L + 1, top + 1)
                    if l not in chosen and pattern.image_order(g, l) % q == 0), None)
        if hit is None:
            missing.append(q)
        else:
            chosen.append(hit)
    return sorted(chosen), missing


def tower_labels(pattern: EmbeddingPattern, g: GroupElement, k: int, levels: Sequence[int], stage: int) -> np.ndarray:
    """Residue mod ``k`` of each product-basis index's position along its ``g``-orbit.

    On the chosen levels ``g`` translates ``prod Z/n_l`` by ``(c_l)``; each
    orbit starts at its lexicographically smallest point.
    """
    factors = pattern.sequence().prefix(stage)
    sub = tuple(factors[l - 1] for l in levels)
    shift = tuple(pattern.coordinate(g, l) for l in levels)
    size = math.prod(sub)
    pos = np.full(size, -1, dtype=np.int64)
    for start in range(size):
        if pos[start] >= 0:
            continue
        y = list(np.unravel_index(start, sub))
        t = 0
        while True:
            idx = int(np.ravel_multi_index(tuple(y), sub))
            if pos[idx] >= 0:
                break
            pos[idx] = t
            t += 1
            y = [(yi + ci) % ni for yi, ci, ni in zip(y, shift, sub)]
    full = np.indices(factors).reshape(len(factors), -1)
    sub_idx = np.ravel_multi_index(tuple(full[l - 1] for l in levels), sub) if levels else np.zeros(full.shape[1], dtype=np.int64)
    return pos[sub_idx] % k


def tower_synthesize(g: GroupElement, pattern: EmbeddingPattern, F: Sequence[StageElement] = (),
                     horizon: int = DEFAULT_HORIZON, *, base_stage: Optional[int] = None,
                     stage_cap: int = DEFAULT_STAGE_CAP) -> RokhlinTower:
    """Exact order-``k`` Rokhlin tower for ``g`` commuting with everything in ``F``.

    For each prime power ``P^r || k`` a level beyond the stage of ``F`` is
    chosen where ``P^r`` divides the order of ``g``'s image; on their product
    the projections collect orbit positions ``t = i mod k``.
    """
    G = pattern.group
    k = G.element_order(g)
    if k is None:
        raise InvalidInput("tower_synthesize needs an element of finite order")
    seq = pattern.sequence()
    L = max([x.stage for x in F] + [0]) if base_stage is None else base_stage
    if k == 1:
        one = StageElement.identity(seq, L, stage_cap=stage_cap)
        return RokhlinTower((one,), L, 1, (), (tuple(range(one.dim)),),
                            {"sum_defect": "0", "shift_defects": ["0"], "commutators": []})
    levels, missing = _select_levels(pattern, g, k, L, horizon)
    if missing:
        raise CertificateFailure(f"no level in ({L}, {horizon}] supplies {missing}", missing)
    M = max(levels + [L])
    stage_dim(seq, M, stage_cap)
    labels = tower_labels(pattern, g, k, levels, M)
    index_sets = tuple(tuple(int(i) for i in np.flatnonzero(labels == j)) for j in range(k))
    projs = tuple(StageElement.diagonal_projection(seq, M, s, stage_cap=stage_cap) for s in index_sets)
    tower = RokhlinTower(projs, M, k, tuple(levels), index_sets)
    report = tower_verify(tower, g, pattern, F, Fraction(0))
    object.__setattr__(tower, "achieved", report.achieved())
    return tower


@dataclass(frozen=True)
class TowerReport:
    commutator_defects: tuple  # (i, index in F, upper bound)
    shift_defects: tuple
    sum_defect: Fraction
    orthogonal: bool
    epsilon: Fraction
    passed: bool

    def achieved(self):
        return {
            "sum_defect": str(self.sum_defect),
            "shift_defects": [str(d) for d in self.shift_defects],
            "commutators": [[i, j, str(d)] for i, j, d in self.commutator_defects],
            "orthogonal": self.orthogonal,
        }

    def to_json(self):
        out = self.achieved()
        out.update({"epsilon": str(self.epsilon), "passed": self.passed})
        return out


def tower_verify(tower: RokhlinTower, g: GroupElement, pattern: EmbeddingPattern,
                 F: Sequence[StageElement], epsilon) -> TowerReport:
    """Recompute commutator, cyclic-shift and sum defects; pass iff all are ``<= epsilon``."""
    epsilon = Fraction(epsilon)
    M = max([tower.stage] + [x.stage for x in F])
    P = [embed_stage(p, M) for p in tower.projections]
    Fs = [embed_stage(x, M) for x in F]
    seq = P[0].seq
    U = alpha_unitary(pattern, g, M)
    k = len(P)
    shifts = tuple(_norm_upper(ad(U, P[i]) - P[(i + 1) % k]) for i in range(k))
    total = P[0]
    for x in P[1:]:
        total = total + x
    sum_defect = _norm_upper(total - StageElement.identity(seq, M))
    orthogonal = all((P[i] @ P[j]).is_zero() for i in range(k) for j in range(k) if i != j)
    comms = tuple((i, j, _norm_upper(P[i] @ a - a @ P[i])) for i in range(k) for j, a in enumerate(Fs))
    passed = (all(d <= epsilon for d in shifts) and sum_defect <= epsilon
              and all(d <= epsilon for _, _, d in comms))
    return TowerReport(comms, shifts, sum_defect, orthogonal, epsilon, passed)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class RokhlinVerdict:
    kind: str  # FiniteOrderRokhlin | InfiniteOrderUniformlyOuter | Fails | UnknownUpTo
    order: Optional[int]
    element: Optional[GroupElement] = None
    certificates: tuple = ()
    tower: Optional[RokhlinTower] = None
    detail: str = ""

    def to_json(self):
        return {
            "verdict": self.kind,
            "order": self.order,
            "element": self.element.to_json() if self.element is not None else None,
            "certificates": [dict(c) for c in self.certificates],
            "tower": self.tower.to_json() if self.tower is not None else None,
            "detail": self.detail,
        }


def _first_levels(pattern, h, horizon, count=3):
    top = horizon if pattern.horizon is None else min(horizon, pattern.horizon)
    return [l for l in range(1, top + 1) if pattern.coordinate(h, l)][:count]


def rokhlin_classify(pattern: EmbeddingPattern, g: GroupElement, horizon: int = DEFAULT_HORIZON,
                     power_bound: int = DEFAULT_POWER_BOUND) -> RokhlinVerdict:
    """Finite order ``k``: for each prime ``P | k`` the power ``(k/P) g`` must avoid the
    direct sum, which is exactly "``P^r`` divides the image order infinitely often".
    Infinite order: every power ``j g`` with ``j <= power_bound`` must avoid it."""
    G = pattern.group
    if G.is_zero(g):
        raise InvalidInput("rokhlin_classify needs a nontrivial element")
    k = G.element_order(g)
    if k is not None:
        probes = [(f"(k/{P}) g", G.scale(k // P, g)) for P in sorted(factorint(k))]
    else:
        probes = [(f"{j} g", G.scale(j, g)) for j in range(1, power_bound + 1)]
    certs = []
    unknown = None
    for label, h in probes:
        v = pattern.eventually_nonzero(h, horizon)
        cert = {"power": label, "element": h.to_json(),
                "infinitely_many_levels": v, "sample_levels": _first_levels(pattern, h, horizon)}
        certs.append(cert)
        if v is False:
            return RokhlinVerdict("Fails", k, h, tuple(certs),
                                  detail="image lies in the direct sum from some level on")
        if v is None and unknown is None:
            unknown = h
    if unknown is not None:
        return RokhlinVerdict("UnknownUpTo", k, unknown, tuple(certs),
                              detail=f"no closed-form certificate; horizon {horizon}")
    if k is None:
        return RokhlinVerdict("InfiniteOrderUniformlyOuter", None, g, tuple(certs),
                              detail=f"every power up to {power_bound} avoids the direct sum")
    try:
        tower = tower_synthesize(g, pattern, (), horizon)
    except CertificateFailure:
        tower = None
    return RokhlinVerdict("FiniteOrderRokhlin", k, g, tuple(certs), tower,
                          detail=f"order {k} Rokhlin towers exist beyond every stage")
