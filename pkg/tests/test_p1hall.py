"""Tests for the finite-field Hall algebra of the projective line."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.algebra.coeff import LaurentScalar, v_power
from src.algebra.loopalg import AlgElem
from src.errors import ArgumentError, BoundsExceededError, NotInjectiveError, WindowClosureError
from src.hall.p1hall import (
    ClosedPoint,
    CohSheafClass,
    HallFn,
    HallWindow,
    SheafMap,
    automorphism_count,
    closed_points,
    cokernel_class,
    count_subsheaves,
    cross_validate,
    euler_pairing,
    fn_E,
    fn_generators,
    fn_xi,
    hall_mul,
    hom_ext_dims,
    hom_space,
    identity_checks,
    is_injective,
    line_constancy_check,
    quadratic_check,
    rational_point_count,
    specialize,
    subsheaf_polynomial,
)


def line(q, *degrees):
    return CohSheafClass(q, degrees)


def tor(q, point, *parts):
    return CohSheafClass(q, (), {point: parts})


# Points and classes


@pytest.mark.parametrize("q", [2, 3, 4])
def test_rational_point_count(q):
    assert rational_point_count(q) == q + 1


def test_closed_points_of_degree_two():
    assert len(closed_points(2)) == 4
    assert len(closed_points(3)) == 7


def test_reducible_point_rejected():
    with pytest.raises(ArgumentError):
        ClosedPoint(2, (1, 0, 1))
    with pytest.raises(ArgumentError):
        ClosedPoint(2, (1, 1, 0, 1))


def test_class_key_and_parse():
    c = CohSheafClass(3, (2, -1), {ClosedPoint.infinity(3): (1, 2)})
    assert c.key == "O(-1)+O(2)+T[inf](2,1)"
    assert c.cls == (2, 4)
    assert CohSheafClass.parse(3, c.key) == c
    assert CohSheafClass.parse(3, "0") == CohSheafClass(3)


def test_rank_three_rejected():
    with pytest.raises(ArgumentError):
        line(2, 0, 0, 0)


# Hom, Ext and automorphisms


def test_hom_ext_of_line_bundles():
    assert hom_ext_dims(line(2, 0), line(2, 2)) == (3, 0)
    assert hom_ext_dims(line(2, 2), line(2, 0)) == (0, 1)


def test_hom_ext_with_torsion():
    x = ClosedPoint(2, (1, 1, 1))
    assert hom_ext_dims(line(2, 5), tor(2, x, 2)) == (4, 0)
    assert hom_ext_dims(tor(2, x, 2), line(2, 5)) == (0, 4)
    y = ClosedPoint.rational(2, 0)
    assert hom_ext_dims(tor(2, y, 2, 1), tor(2, y, 1)) == (2, 2)


_Q3_POINTS = [ClosedPoint.infinity(3), ClosedPoint.rational(3, 0), ClosedPoint.rational(3, 1), ClosedPoint(3, (1, 0, 1))]

sheaf_classes_q3 = st.builds(
    lambda vb, tors: CohSheafClass(3, vb, tors),
    st.lists(st.integers(min_value=-3, max_value=3), max_size=2),
    st.dictionaries(
        st.sampled_from(_Q3_POINTS), st.lists(st.integers(min_value=1, max_value=2), min_size=1, max_size=2), max_size=2
    ),
)


@settings(max_examples=100)
@given(sheaf_classes_q3, sheaf_classes_q3)
def test_hom_minus_ext_is_euler_form(a, b):
    hom, ext = hom_ext_dims(a, b)
    assert hom - ext == euler_pairing(a, b)


@pytest.mark.parametrize(
    "a",
    [line(2, 0, 0), line(2, 0, 1), tor(2, ClosedPoint.rational(2, 0), 2, 1), CohSheafClass(2, (0,), {ClosedPoint.infinity(2): (1,)})],
)
def test_automorphisms_by_enumeration(a):
    zero = CohSheafClass(2)
    invertible = sum(1 for f in hom_space(a, a) if is_injective(f) and cokernel_class(f) == zero)
    assert invertible == automorphism_count(a)


# Cokernels


def test_cokernel_of_independent_forms():
    f = SheafMap(line(3, -1), line(3, 0, 0), {(0, 0): (0, 1), (1, 0): (1, 0)})
    assert cokernel_class(f) == line(3, 1)


def test_cokernel_of_dependent_forms():
    f = SheafMap(line(3, -1), line(3, 0, 0), {(0, 0): (0, 1)})
    assert cokernel_class(f) == CohSheafClass(3, (0,), {ClosedPoint.rational(3, 0): (1,)})
    g = SheafMap(line(3, -1), line(3, 0, 0), {(1, 0): (2, 0)})
    assert cokernel_class(g) == CohSheafClass(3, (0,), {ClosedPoint.infinity(3): (1,)})


def test_cokernel_of_square():
    f = SheafMap(line(3, 0), line(3, 2), {(0, 0): (0, 0, 1)})
    assert cokernel_class(f) == tor(3, ClosedPoint.rational(3, 0), 2)


def test_cokernel_at_degree_two_point():
    f = SheafMap(line(3, 0), line(3, 2), {(0, 0): (1, 0, 1)})
    assert cokernel_class(f) == tor(3, ClosedPoint(3, (1, 0, 1)), 1)


def test_cokernel_errors():
    with pytest.raises(NotInjectiveError):
        cokernel_class(SheafMap(line(2, 0), line(2, 1)))
    with pytest.raises(WindowClosureError):
        cokernel_class(SheafMap(line(2, -3), line(2, 0), {(0, 0): (1, 1, 0, 1)}))


def test_sheaf_map_rejects_maps_from_torsion_to_lines():
    with pytest.raises(ArgumentError):
        SheafMap(tor(2, ClosedPoint.infinity(2), 1), line(2, 0), {(0, 0): (1,)})


# Counting subsheaves


@pytest.mark.parametrize("q,count", [(2, 6), (3, 24)])
def test_count_line_subsheaves(q, count):
    assert count_subsheaves(line(q, 0, 0), line(q, -1), line(q, 1), q) == count


def test_count_subsheaves_with_torsion_quotient():
    for q in (2, 3):
        quotient = CohSheafClass(q, (0,), {ClosedPoint.rational(q, 0): (1,)})
        assert count_subsheaves(line(q, 0, 0), line(q, -1), quotient) == q + 1


def test_count_zero_subsheaf():
    zero = CohSheafClass(2)
    assert count_subsheaves(line(2, 0, 0), zero, line(2, 0, 0)) == 1
    assert count_subsheaves(line(2, 0, 0), zero, line(2, -1, 1)) == 0


def test_length_two_module_has_one_submodule():
    x = ClosedPoint.rational(2, 1)
    assert count_subsheaves(tor(2, x, 2), tor(2, x, 1), tor(2, x, 1)) == 1
    assert count_subsheaves(tor(2, x, 1, 1), tor(2, x, 1), tor(2, x, 1)) == 3


def test_count_argument_checks():
    with pytest.raises(ArgumentError):
        count_subsheaves(line(2, 0, 0), line(2, -1), line(2, 2))
    with pytest.raises(BoundsExceededError):
        count_subsheaves(line(2, 0, 5), line(2, 0), line(2, 5))


def test_counts_are_polynomial_in_q():
    poly = subsheaf_polynomial(lambda q: (line(q, 0, 0), line(q, -1), line(q, 1)), max_degree=3)
    assert poly == [0, -1, 0, 1]


def test_torsion_counts_are_polynomial_in_q():
    def build(q):
        x = ClosedPoint.rational(q, 0)
        return tor(q, x, 1, 1), tor(q, x, 1), tor(q, x, 1)

    assert subsheaf_polynomial(build, max_degree=1) == [1, 1]


# Hall products


def test_unit():
    f = fn_E(2, 1) * fn_E(2, 0)
    assert hall_mul(HallFn.unit(2), f) == f
    assert hall_mul(f, HallFn.unit(2)) == f


@pytest.mark.parametrize("q", [2, 3])
def test_adjacent_line_bundles_commute_up_to_v2(q):
    left = fn_E(q, 1) * fn_E(q, 0)
    right = fn_E(q, 0) * fn_E(q, 1)
    assert left == right * v_power(-2)
    assert specialize(left.value(line(q, 0, 1)), q) == specialize(v_power(-6), q)


def test_xi_squared():
    x, y = ClosedPoint.rational(2, 0), ClosedPoint.infinity(2)
    product = fn_xi(2, 1) * fn_xi(2, 1)
    assert product.value(tor(2, x, 2)) == LaurentScalar.from_int(1)
    assert product.value(tor(2, x, 1, 1)) == LaurentScalar.from_int(3)
    assert product.value(CohSheafClass(2, (), {x: (1,), y: (1,)})) == LaurentScalar.from_int(2)
    assert product.value(tor(2, ClosedPoint(2, (1, 1, 1)), 1)).is_zero


def test_associativity():
    e1, e0, x1 = fn_E(2, 1), fn_E(2, 0), fn_xi(2, 1)
    assert (e1 * x1) * e0 == e1 * (x1 * e0)


def test_generator_values():
    assert fn_generators("E", 3, 2).value(line(2, 3)) == v_power(-1)
    assert fn_generators("E", 3, 2).value(line(2, 2)).is_zero
    x = ClosedPoint.rational(2, 0)
    xi2 = fn_generators("xi", 2, 2)
    assert xi2.value(tor(2, x, 1, 1)) == LaurentScalar.one()
    assert xi2.value(tor(2, x, 2)) == LaurentScalar.one()
    with pytest.raises(ArgumentError):
        fn_generators("F", 0, 2)


def test_hall_fn_json():
    data = (fn_E(2, 1) * fn_E(2, 0)).to_json()
    assert data["q"] == 2
    assert data["class"] == {"rank": 2, "degree": 1}
    assert [entry["class"] for entry in data["values"]] == ["O(0)+O(1)"]


# Identity checks


def test_window_parse():
    assert HallWindow.parse("deg=-2..3,tor<=2") == HallWindow(-2, 3, 2)
    with pytest.raises(WindowClosureError):
        HallWindow.parse("deg=0..1,tor<=3")
    with pytest.raises(ArgumentError):
        HallWindow.parse("degrees 0 to 1")


@pytest.mark.parametrize("q,t1,t2", [(2, 0, 0), (3, 0, 0), (2, 1, -1), (2, -2, 1)])
def test_quadratic_relation(q, t1, t2):
    assert quadratic_check(q, t1, t2, HallWindow()).passed


def test_line_element_is_constant():
    report = line_constancy_check(2, 0, HallWindow(-2, 3, 2))
    assert report.passed
    assert report.classes > 1
    assert report.detail["exponent"] == -1


@pytest.mark.parametrize(
    "x,y",
    [
        (AlgElem.xi((1,)), AlgElem.E(0)),
        (AlgElem.xi((2,)), AlgElem.E(0)),
        (AlgElem.E(1), AlgElem.E(0)),
        (AlgElem.xi((1,)), AlgElem.E(0) * AlgElem.E(1)),
    ],
)
def test_cross_validation(x, y):
    assert cross_validate(2, x, y, HallWindow(-2, 3, 2)).passed


def test_identity_checks_dispatch():
    reports = identity_checks(["line"], HallWindow(-1, 1, 1), [2])
    assert len(reports) == 3
    assert all(r.passed for r in reports)
    with pytest.raises(ArgumentError):
        identity_checks(["bogus"], HallWindow(), [2])


def test_words_outside_window_rejected():
    with pytest.raises(WindowClosureError):
        quadratic_check(2, 3, 0, HallWindow(-2, 3, 2))
