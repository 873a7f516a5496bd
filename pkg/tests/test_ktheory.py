import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import crossed_product_step, enumerate_actions
from sympy import Matrix, primerange

from uhfkit.errors import InconsistencyError, InvalidInput
from uhfkit.groups import FgAbelianGroup, ProductPattern, QuotientMod
from uhfkit.gset import PermutationAction, abelian_presentation, cycle_power, fixed_points
from uhfkit.ktheory import (
    BratteliDiagram,
    DirectLimitSystem,
    bratteli_step,
    characters,
    crossed_product_diagram,
    cyclotomic_reduce,
    direct_limit_invariants,
    exterior_ranks,
    k_invariants,
    multiplicities,
    pattern_actions,
    root_sum,
    trivial_action,
)
from uhfkit.uhf import Constant, FactorSequence, Linear, Table

Z2 = FgAbelianGroup(0, (2,))


def action(orders, perms):
    return PermutationAction(abelian_presentation(list("ab"[:len(orders)]), orders), len(perms[0]), perms)


# -- cyclotomic arithmetic ---------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 12), st.lists(st.integers(-5, 5), min_size=1, max_size=14))
def test_cyclotomic_reduce_preserves_value(N, coeffs):
    z = cmath.exp(2j * math.pi / N)
    red = cyclotomic_reduce(coeffs, N)
    assert abs(sum(c * z ** k for k, c in enumerate(coeffs)) - sum(c * z ** k for k, c in enumerate(red))) < 1e-8


def test_root_sum_full_circle_is_zero():
    for N in range(2, 13):
        assert root_sum(((1, e) for e in range(N)), N) == 0
    assert root_sum([(1, 1)], 4) is None
    assert root_sum([(1, 2)], 4) == -1


# -- characters --------------------------------------------------------------


@pytest.mark.parametrize("orders", [(1,), (2,), (3,), (4,), (2, 2), (2, 3)])
def test_orthogonality(orders):
    T = characters(orders)
    for a in T.characters:
        for b in T.characters:
            assert T.inner(a, b) == (1 if a == b else 0)


def test_character_group_law():
    T = characters((4, 2))
    for a in T.characters:
        for h in T.elements:
            assert (T.value(T.mul(a, T.inv(a)), h)) == 0
    assert T.is_real((2, 1)) and not T.is_real((1, 0))
    assert T.label((1, 0)) == "chi(1,0)"


# -- multiplicities ----------------------------------------------------------


def test_regular_z2():
    assert bratteli_step(characters((2,)), action((2,), [(1, 0)])) == [[1, 1], [1, 1]]


def test_z2_three_points_one_fixed():
    assert bratteli_step(characters((2,)), action((2,), [(1, 0, 2)])) == [[2, 1], [1, 2]]


def test_trivial_action_is_diagonal():
    M = bratteli_step(characters((2,)), trivial_action((2,), 3))
    assert M == [[3, 0], [0, 3]]


def test_bad_table_rejected():
    with pytest.raises(InvalidInput):
        multiplicities(characters((2, 2)), action((2,), [(1, 0)]))


@pytest.mark.parametrize("orders", [(2,), (3,), (4,), (2, 2)])
def test_matches_crossed_product_oracle(orders):
    T = characters(orders)
    for n in range(1, 5):
        for perms in enumerate_actions(orders, n):
            A = action(orders, perms)
            M = bratteli_step(T, A)
            assert M == crossed_product_step(orders, perms)
            # every column sums to n, and M depends only on chi' chi^{-1}
            assert all(sum(col) == n for col in zip(*M))
            chars = T.characters
            for i, a in enumerate(chars):
                for j, b in enumerate(chars):
                    s = chars.index(T.mul(a, T.inv(b)))
                    assert M[i][j] == M[s][0]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(2,), (3,), (4,), (2, 2)]), st.integers(1, 5), st.data())
def test_free_iff_constant(orders, n, data):
    acts = list(enumerate_actions(orders, n))
    perms = data.draw(st.sampled_from(acts))
    A = action(orders, perms)
    T = characters(orders)
    M = bratteli_step(T, A)
    free = all(fixed_points(A, tuple((i, 1) for i, c in enumerate(h) for _ in range(c))) == 0
               for h in T.elements if any(h))
    const = all(v == M[0][0] for row in M for v in row)
    assert free == const
    if free:
        assert M[0][0] * T.order == n


# -- diagrams ---------------------------------------------------------------


def test_diagram_size_recursion():
    T = characters((2,))
    acts = [action((2,), [cycle_power(2, 1)]), action((2,), [(1, 0, 2)])]
    diagram, _ = crossed_product_diagram(T, acts)
    assert diagram.sizes == ((1, 1), (2, 2), (6, 6))
    text = diagram.to_text()
    assert "stage 2 block chi(1) size 6" in text
    with pytest.raises(InconsistencyError):
        BratteliDiagram(("a",), ((1,), (3,)), (((2,),),))


def test_rokhlin_pattern_is_uhf():
    pat = ProductPattern(Z2, (QuotientMod(FactorSequence.factorial()),))
    T = characters((2,))
    diagram, verdict = crossed_product_diagram(T, pattern_actions(pat, 4), pat)
    assert verdict.kind == "UHF"
    assert verdict.supernatural.universal
    assert verdict.windows == (1, 2, 3, 4)


def test_trivial_pattern_is_not_uhf():
    pat = ProductPattern(Z2, (QuotientMod(FactorSequence.constant(2), support=frozenset()),))
    T = characters((2,))
    _, verdict = crossed_product_diagram(T, pattern_actions(pat, 3), pat)
    assert verdict.kind == "NotUHF"


def test_explicit_actions_verdicts():
    T = characters((2,))
    free = action((2,), [(1, 0)])
    _, v = crossed_product_diagram(T, [free, free])
    assert v.kind == "UHF" and dict(v.supernatural.exponents) == {2: 3}
    _, v = crossed_product_diagram(T, [trivial_action((2,), 2)] * 2)
    assert v.kind == "NotUHF"
    _, v = crossed_product_diagram(T, [free, action((2,), [(1, 0, 2)])])
    assert v.kind == "UnknownUpTo"


# -- direct limits -----------------------------------------------------------


def test_linear_system_is_universal():
    inv = direct_limit_invariants(DirectLimitSystem.scalar(Linear(), 12))
    assert inv.rank == 1
    assert inv.divisible_primes() == list(primerange(2, 98))


def test_constant_two_system():
    inv = direct_limit_invariants(DirectLimitSystem.scalar(Constant(2), 12))
    assert inv.rank == 1 and inv.divisible_primes() == [2]


def test_table_system_up_to_horizon():
    inv = direct_limit_invariants(DirectLimitSystem.scalar(Table((6, 6, 6, 6)), 4))
    assert inv.divisible == {p: ("up-to-horizon" if p in (2, 3) else False) for p in primerange(2, 98)}


def test_matrix_system_rank_and_divisibility():
    inv = direct_limit_invariants(DirectLimitSystem.constant([[2, 0], [0, 1]], 8))
    assert inv.rank == 2 and inv.divisible_primes() == []
    inv = direct_limit_invariants(DirectLimitSystem.constant([[1, 1], [1, 1]], 6))
    assert inv.rank == 1


def test_shape_checked():
    with pytest.raises(InvalidInput):
        DirectLimitSystem((1, 2), (((1,),),))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=3, max_size=3))
def test_rank_matches_sympy(rows):
    sys = DirectLimitSystem.constant(rows, 5)
    inv = direct_limit_invariants(sys, prime_bound=5)
    assert inv.rank == (Matrix(rows) ** 5).rank()


# -- K-groups ----------------------------------------------------------------


@pytest.mark.parametrize("r, ranks", [(0, (1, 0)), (1, (1, 1)), (2, (2, 2)), (3, (4, 4))])
def test_k_ranks(r, ranks):
    assert k_invariants(r=r).ranks() == ranks


@pytest.mark.parametrize("r", range(1, 9))
def test_k_ranks_match_exterior_algebra(r):
    assert k_invariants(r=r).ranks() == exterior_ranks(r) == (2 ** (r - 1),) * 2


def test_k_from_group_and_infinite_rank():
    assert k_invariants(FgAbelianGroup(2, (3,))).ranks() == (2, 2)
    inv = k_invariants()
    assert inv.ranks() == (None, None)
    assert inv.to_json()["K0_rank"] == "countably-infinite"
    assert k_invariants(r=1, rokhlin=False).notes
