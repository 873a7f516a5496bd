import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uhfkit.errors import InconsistentCocycle, InvalidInput, RelationViolation
from uhfkit.groups import FgAbelianGroup
from uhfkit.gset import (
    AbelianNormalForm,
    AbelianSubgroup,
    KleinBottleNormalForm,
    KleinTranslationSubgroup,
    Presentation,
    SubgroupTransversal,
    abelian_presentation,
    action_from_generators,
    compose,
    conjugate_trace_set,
    cycle_power,
    distinct_elements,
    fixed_points,
    from_cycles,
    induce,
    induced_fixed_points,
    klein_bottle_family,
    klein_bottle_transversal,
    product_action,
    reduced_words,
    regroup_schedule,
    to_cycles,
    translation_action,
)
from uhfkit.uhf import FactorSequence, perm_unitary

KLEIN = Presentation(("a", "b"), ("baBa",))


def brute_fixed(action, word):
    # apply letters one point at a time, last letter first
    w = action.presentation.parse(word) if isinstance(word, str) else word
    count = 0
    for x in range(action.n):
        y = x
        for i, e in reversed(w):
            p = action.perms[i]
            y = p[y] if e > 0 else p.index(y)
        count += y == x
    return count


# -- actions -----------------------------------------------------------------


def test_klein_relation_violation_named():
    with pytest.raises(RelationViolation) as exc:
        action_from_generators(KLEIN, ["(1 2 3)", "()"], 3)
    assert exc.value.relation == "baBa"


def test_klein_valid_action():
    act = action_from_generators(KLEIN, ["(1 2 3)", "(2 3)"], 3)
    assert act.n == 3


def test_commuting_disjoint_cycles():
    pres = abelian_presentation(["a", "b"], [0, 0])
    act = action_from_generators(pres, ["(1 2 3)", "(4 5)"], 5)
    assert fixed_points(act, "ab") == 0
    assert fixed_points(act, "b") == 3


def test_trivial_group_one_point():
    act = action_from_generators(Presentation(()), [], 1)
    assert fixed_points(act, "") == 1


def test_identity_word_fixes_everything():
    act = action_from_generators(KLEIN, ["(1 2 3)", "(2 3)"], 3)
    assert fixed_points(act, "") == 3


def test_cycle_generator_is_free():
    pres = abelian_presentation(["a"], [0])
    act = action_from_generators(pres, [cycle_power(7, 1)])
    assert fixed_points(act, "a") == 0


def test_cycles_round_trip():
    p = (2, 0, 1, 4, 3, 5)
    assert to_cycles(p) == "(1 3 2)(4 5)"
    assert from_cycles(to_cycles(p), 6) == p
    with pytest.raises(InvalidInput):
        from_cycles("(1 7)", 6)


def test_reduced_words_count():
    # 1 + 4 + 12 + 36 + 108 freely reduced words on two generators
    assert len(reduced_words(KLEIN, 4)) == 161


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_product_action_fixed_points(nx, ny, data):
    pres = abelian_presentation(["a"], [0])
    X = action_from_generators(pres, [tuple(data.draw(st.permutations(range(nx))))])
    Y = action_from_generators(pres, [tuple(data.draw(st.permutations(range(ny))))])
    XY = product_action(X, Y)
    for w in ("a", "aa", "A", "aaa"):
        assert fixed_points(XY, w) == brute_fixed(X, w) * brute_fixed(Y, w)


@settings(max_examples=40, deadline=None)
@given(st.permutations(list(range(5))))
def test_fixed_points_match_trace(sigma):
    pres = abelian_presentation(["a"], [0])
    act = action_from_generators(pres, [tuple(sigma)])
    u = perm_unitary(sigma, 1, FactorSequence.constant(5), 1)
    assert fixed_points(act, "a") == act.n * u.normalized_trace()


# -- H_g ---------------------------------------------------------------------


def test_klein_conjugate_sets():
    T = klein_bottle_transversal()
    assert sorted(conjugate_trace_set(T, "a")) == [(-1, 0), (1, 0)]
    assert conjugate_trace_set(T, "b") == []
    assert conjugate_trace_set(T, "") == [(0, 0)]


def test_klein_normal_form_relation():
    nf = KleinBottleNormalForm()
    assert nf.evaluate("baB") == nf.evaluate("A")
    assert nf.evaluate("bb") == (0, 2)


# -- induction ---------------------------------------------------------------


def test_klein_level_one_size():
    fam = klein_bottle_family(3)
    assert fam.action(1).n == 18
    assert fam.action(2).n == 2 * 3 ** 4


def test_cocycle_bijection_and_relation():
    T = klein_bottle_transversal()
    for row in T.table:
        assert sorted(j for j, _ in row) == [0, 1]
    for i in range(T.index):
        j, h = T.trace_word(KLEIN.parse("baBa"), i)
        assert j == i and T.subgroup.to_ambient(h) == (0, 0)


def test_broken_cocycle_rejected():
    T = klein_bottle_transversal()
    bad = (T.table[0], ((0, ()), (1, ())))
    with pytest.raises(InconsistentCocycle):
        SubgroupTransversal(T.nf, T.subgroup, T.reps, bad)


def test_index_one_induction_is_identity():
    G = FgAbelianGroup(2)
    nf = AbelianNormalForm(G)
    H = AbelianSubgroup(nf, G.generators())
    T = SubgroupTransversal.from_normal_form(nf, H, [""])
    X = translation_action(H.presentation, (3, 4))
    Y = induce(T, X)
    assert Y.n == X.n and Y.perms == X.perms


def test_index_two_abelian_induction():
    # H = 2Z inside Z: Z x_H (Z/3) is the 6-cycle
    G = FgAbelianGroup(1)
    nf = AbelianNormalForm(G)
    H = AbelianSubgroup(nf, [G.element([2])])
    T = SubgroupTransversal.from_normal_form(nf, H, ["", "a"])
    Y = induce(T, translation_action(H.presentation, (3,)))
    assert Y.n == 6
    assert [fixed_points(Y, "a" * k) for k in range(7)] == [6, 0, 0, 0, 0, 0, 6]


@pytest.mark.parametrize("p, l", [(2, 1), (3, 1), (2, 2)])
def test_fixed_point_identity_brute_force(p, l):
    fam = klein_bottle_family(p)
    Y = fam.action(l)
    X = fam.base_action(l)
    assert Y.n == 2 * X.n
    for w in reduced_words(KLEIN, 4):
        word = KLEIN.format(w)
        brute = brute_fixed(Y, w)
        assert induced_fixed_points(fam.transversal, X, w) == brute, word
        assert fam.fixed_points(fam.nf.evaluate(w), l) == brute, word


def test_free_when_every_conjugate_is_free():
    fam = klein_bottle_family(3)
    X = fam.base_action(2)
    e = fam.nf.identity()
    for w, x in distinct_elements(fam.nf, 4):
        if x == e:
            continue
        conj = conjugate_trace_set(fam.transversal, x)
        if all(fixed_points(X, fam.transversal.subgroup.to_word(c)) == 0 for c in conj):
            assert fixed_points(fam.action(2), w) == 0


def test_klein_level_one_nonfree_words():
    # a^3 lies in N and translates (Z/3)^2 by (3, 0) = 0: it fixes every point at p = 3, l = 1
    fam = klein_bottle_family(3)
    Y = fam.action(1)
    nonfree = sorted(KLEIN.format(w) for w, x in distinct_elements(fam.nf, 4)
                     if x != (0, 0) and fixed_points(Y, w))
    assert nonfree == ["AAA", "aaa"]
    assert fixed_points(Y, "aaa") == 18
    assert all(fixed_points(fam.action(2), w) == 0 for w, x in distinct_elements(fam.nf, 4) if x != (0, 0))


def test_klein_at_five_is_free_at_level_one():
    fam = klein_bottle_family(5)
    assert all(fixed_points(fam.action(1), w) == 0 for w, x in distinct_elements(fam.nf, 4) if x != (0, 0))


def test_regroup_schedule_covers_every_word():
    fam = klein_bottle_family(3)
    sched = regroup_schedule(fam, 4, 6)
    assert not sched["missing"]
    assert sched["selections"][[w for w, _ in sched["elements"]].index("aaa")][0] == 2
    first = sched["schedule"][:3]
    assert first == [(0, sched["selections"][0][0]), (0, sched["selections"][0][1]), (1, sched["selections"][1][0])]


def test_translation_subgroup_membership():
    H = KleinTranslationSubgroup()
    assert H.contains((5, 2)) and not H.contains((0, 1))
    assert H.to_vector((3, -4)) == (3, -2)


def test_compose_order():
    p, q = (1, 2, 0), (1, 0, 2)
    assert compose(p, q) == tuple(p[q[i]] for i in range(3))
    assert list(itertools.chain(compose(p, (0, 1, 2)))) == list(p)
