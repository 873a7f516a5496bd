import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import multiplicity

from uhfkit.errors import InvalidInput
from uhfkit.groups import (
    CustomTable,
    FactorialMod,
    FgAbelianGroup,
    PadicDigits,
    ProductPattern,
    QuotientMod,
    canonical_decomposition,
    cantor_schedule,
    coordinate,
    diagonal_resequence,
    prufer_level_images,
    prufer_obstruction,
    trivial_intersection,
    verify_homomorphism,
)
from uhfkit.uhf import FactorSequence

Z = FgAbelianGroup(1)
Z2 = FgAbelianGroup(0, (2,))


# -- groups ----------------------------------------------------------------


def test_torsion_chain_enforced():
    with pytest.raises(InvalidInput):
        FgAbelianGroup(0, (2, 3))


def test_residues_reduced():
    G = FgAbelianGroup(1, (2, 4))
    assert G.element([3], [5, 7]).tors == (1, 3)
    assert G.element_order(G.element([0], [1, 2])) == 2
    assert G.element_order(G.element([1])) is None


def test_canonical_decomposition():
    G = canonical_decomposition([[2, 0]], 2)
    assert (G.rank, G.torsion) == (1, (2,))
    G = canonical_decomposition([], 3)
    assert (G.rank, G.torsion) == (3, ())
    G = canonical_decomposition([[1, 0], [0, 1]], 2)
    assert G.ngens == 0 and G.order == 1


def test_canonical_decomposition_chain():
    # Z/4 + Z/6 = Z/2 + Z/12
    G = canonical_decomposition([[4, 0], [0, 6]], 2)
    assert G.torsion == (2, 12)


# -- coordinates -----------------------------------------------------------


def test_padic_digit_of_half():
    pat = ProductPattern(FgAbelianGroup(0, (), (3,)), (PadicDigits(3),))
    g = pat.group.element(local=[Fraction(1, 2)])
    assert pat.modulus(2) == 9
    assert coordinate(pat, g, 2) == 5


def test_padic_rejects_bad_denominator():
    G = FgAbelianGroup(0, (), (3,))
    with pytest.raises(InvalidInput):
        G.element(local=[Fraction(1, 3)])
    with pytest.raises(InvalidInput):
        PadicDigits(3).image(Fraction(1, 3), 1, 0)


def test_quotient_mod_value():
    pat = ProductPattern(Z, (QuotientMod(FactorSequence.constant(6)),))
    assert coordinate(pat, Z.element([4]), 1) == 4


def test_identity_has_zero_coordinates():
    for pat in (ProductPattern(Z, (FactorialMod(),)),
                ProductPattern(Z2, (QuotientMod(FactorSequence.linear()),)),
                CustomTable(Z, (4, 9), ((1,), (2,)))):
        assert all(coordinate(pat, pat.group.identity(), l) == 0 for l in (1, 2))


def test_torsion_generator_maps_to_order_two():
    pat = ProductPattern(Z2, (QuotientMod(FactorSequence.factorial()),))
    for l in range(1, 6):
        n = pat.modulus(l)
        assert coordinate(pat, Z2.generator(0), l) == n // 2
    assert verify_homomorphism(pat, 10) == []


def test_bad_table_fails_homomorphism_check():
    pat = CustomTable(Z2, (3,), ((1,),))
    assert verify_homomorphism(pat, 5) == [(1, 0)]


PATTERNS = [
    ProductPattern(FgAbelianGroup(1, (2,)), (FactorialMod(), QuotientMod(FactorSequence.constant(4)))),
    ProductPattern(FgAbelianGroup(0, (), (5,)), (PadicDigits(5),)),
    diagonal_resequence(ProductPattern(FgAbelianGroup(2), (FactorialMod(), QuotientMod(FactorSequence.linear())))),
    CustomTable(FgAbelianGroup(1, (6,)), (12, 18, 30), ((1, 2), (5, 3), (7, 5))),
]


def _elem(G, a, b):
    coords = [a, b][: G.ngens]
    if G.localized:
        return G.from_coords([Fraction(a, 1 + 5 * abs(b))] + coords[1:])
    return G.from_coords(coords)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(range(len(PATTERNS))), st.integers(-30, 30), st.integers(-30, 30),
       st.integers(-30, 30), st.integers(-30, 30), st.integers(1, 3))
def test_coordinate_is_additive(k, a, b, c, d, l):
    pat = PATTERNS[k]
    G = pat.group
    g, h = _elem(G, a, b), _elem(G, c, d)
    n = pat.modulus(l)
    assert coordinate(pat, G.add(g, h), l) == (coordinate(pat, g, l) + coordinate(pat, h, l)) % n


# -- trivial intersection ---------------------------------------------------


def test_factorial_is_proven_trivial():
    assert trivial_intersection(ProductPattern(Z, (FactorialMod(),)), 64).kind == "ProvenTrivial"


def test_factorial_oracle():
    # g mod (l+1)! = g once (l+1)! > |g|: never zero again
    pat = ProductPattern(Z, (FactorialMod(),))
    for g in range(1, 11):
        start = next(l for l in range(1, 20) if math.factorial(l + 1) > g)
        assert all(coordinate(pat, Z.element([g]), l) == g for l in range(start, start + 8))


def test_single_level_is_counterexample():
    pat = ProductPattern(Z2, (QuotientMod(FactorSequence.constant(2), support={1}),))
    v = trivial_intersection(pat, 64)
    assert v.kind == "Counterexample"
    assert v.element == Z2.generator(0)


def test_constant_diagonal_is_proven_trivial():
    pat = ProductPattern(Z2, (QuotientMod(FactorSequence.constant(2)),))
    assert trivial_intersection(pat, 64).kind == "ProvenTrivial"


def test_constant_free_generator_counterexample():
    # Z -> Z/4 every level: 4 is in the kernel
    pat = ProductPattern(Z, (QuotientMod(FactorSequence.constant(4)),))
    v = trivial_intersection(pat, 64)
    assert v.kind == "Counterexample" and v.element.free[0] % 4 == 0


def test_custom_table_is_unknown():
    pat = CustomTable(Z, (4, 9), ((1,), (1,)))
    v = trivial_intersection(pat, 64)
    assert v.kind == "UnknownUpTo" and v.horizon == 2


def test_custom_table_zero_tail_is_counterexample():
    pat = CustomTable(Z, (4, 9), ((1,), (1,)), tail="zero")
    assert trivial_intersection(pat, 64).kind == "Counterexample"


def test_padic_is_proven_trivial():
    pat = ProductPattern(FgAbelianGroup(0, (), (3,)), (PadicDigits(3),))
    assert trivial_intersection(pat, 64, box_bound=6).kind == "ProvenTrivial"


# -- resequencing ------------------------------------------------------------


def test_cantor_prefix():
    assert cantor_schedule(6, 3) == [1, 1, 2, 1, 2, 3]
    assert cantor_schedule(10) == [1, 1, 2, 1, 2, 3, 1, 2, 3, 4]


def test_resequenced_table_is_proven_trivial():
    inj = CustomTable(Z, (4, 9), ((1,), (1,)))
    assert trivial_intersection(diagonal_resequence(inj), 64).kind == "ProvenTrivial"


def test_resequenced_counterexample_becomes_trivial():
    pat = ProductPattern(Z2, (QuotientMod(FactorSequence.constant(2), support={1}),))
    assert trivial_intersection(diagonal_resequence(pat), 64).kind == "ProvenTrivial"


def test_resequence_of_trivial_group():
    pat = ProductPattern(FgAbelianGroup(0), ())
    assert diagonal_resequence(pat) is pat
    assert trivial_intersection(pat, 8).kind == "ProvenTrivial"


def test_resequenced_moduli_supernatural():
    seq = diagonal_resequence(CustomTable(FgAbelianGroup(0, (6,)), (2, 3), ((1,), (1,)))).sequence()
    s = seq.rule.supernatural()
    assert {p for p, _ in s.exponents} == {2, 3}
    assert all(s.divides_infinitely(p) for p in (2, 3))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(2, 12), min_size=1, max_size=4), st.data())
def test_resequence_never_counterexample_when_separating(moduli, data):
    table = tuple((data.draw(st.integers(0, n - 1)),) for n in moduli)
    pat = CustomTable(Z, tuple(moduli), table)
    separating = all(any(coordinate(pat, Z.element([g]), l) for l in range(1, len(moduli) + 1))
                     for g in range(-10, 11) if g)
    v = trivial_intersection(diagonal_resequence(pat), 64)
    if separating:
        assert v.kind == "ProvenTrivial"
    assert v.kind != "UnknownUpTo"


# -- divisible groups --------------------------------------------------------


def test_prufer_images_brute_force():
    # depth 1: Z/3 -> Z/6 reaches the subgroup {0, 2, 4}; depth 2 forces 1/3 -> 0
    assert prufer_level_images(3, 6, 1) == {0, 2, 4}
    assert prufer_level_images(3, 6, 2) == {0}


def test_prufer_obstruction_matches_valuation():
    table = prufer_obstruction(3, 40)
    for n, depth in table.items():
        assert depth == multiplicity(3, n) + 1
