"""Tests for the canonical basis constructors and their checks."""

import pytest

from src.algebra.canbasis import (
    RANK2_KINDS,
    b_line,
    b_rank2,
    b_torsion,
    bar_invariance,
    canonical_completion,
    coproduct_identity,
    coproduct_through_lines,
    difference_two_count,
    kappa_equivariance,
    line_coproduct,
    line_torsion_positivity,
    parse_label,
    is_positive,
    principal_character,
    psi_E,
    rank2_acting_on_letter,
    rank2_lead,
    rank2_xi_free,
    schur_coefficients,
    telescoping_check,
    torsion_positivity,
    vacuum_reduction,
    xi_from_b,
)
from src.algebra.coeff import LaurentScalar, quantum_int, v_power
from src.algebra.loopalg import AlgElem, AlgTensor, NormalMonomial, Window, bar
from src.algebra.symm import Partition
from src.errors import ArgumentError
from src.hall.cyclichall import u_recursion


def mono(eword, lam=(), coeff=None):
    return AlgElem.monomial(eword, lam, coeff)


# Constructors


def test_torsion_element():
    b = b_torsion((1, 1))
    assert b.label == "lambda:1,1"
    assert b.body.elem == AlgElem.xi((1, 1)) - AlgElem.xi((2,))
    assert schur_coefficients(b.body.elem) == {((), Partition((1, 1))): LaurentScalar.one()}


@pytest.mark.parametrize("t", [-2, 0, 3])
def test_line_element_terms(t):
    body = b_line(t).body
    assert body.cls == (1, t)
    assert body.coefficient(NormalMonomial((t,))) == LaurentScalar.one()
    assert body.coefficient(NormalMonomial((t - 3,), (3,))) == v_power(3)
    assert body.coefficient(NormalMonomial((t - 3,), (2, 1))) == LaurentScalar.zero()


def test_rank2_leading_terms():
    assert b_rank2(0, "tt").body.coefficient(NormalMonomial((0, 0))) == LaurentScalar.one()
    assert b_rank2(0, "t,t+1").body.coefficient(NormalMonomial((0, 1))) == v_power(2)
    assert b_rank2(-2, "tt").cls == (2, -4)
    assert b_rank2(-2, "t,t+1").cls == (2, -3)


def test_rank2_family_terms():
    body = b_rank2(0, "tt").body
    assert body.coefficient(NormalMonomial((-1, 1))) == v_power(3)
    assert body.coefficient(NormalMonomial((-1, -1), (2,))) == v_power(4)
    assert body.coefficient(NormalMonomial((-1, 0), (1,))) == v_power(4)


def test_rank2_rejects_unknown_kind():
    with pytest.raises(ArgumentError):
        b_rank2(0, "t,t+2")


def test_parse_label():
    assert parse_label("O(-2)").kind == "line"
    assert parse_label("O(1)+O(1)").kind == "tt"
    assert parse_label("O(1) + O(2)").kind == "t,t+1"
    assert parse_label("lambda:2,1").params == (2, 1)
    for bad in ("O(1)+O(3)", "P(1)", "lambda:x"):
        with pytest.raises(ArgumentError):
            parse_label(bad)


# Bar invariance and the completion solver


@pytest.mark.parametrize("t", [-1, 0, 2])
def test_line_elements_are_bar_invariant(t):
    assert bar_invariance(b_line(t), Window(t - 3, t + 3, 3))


def test_torsion_elements_are_bar_invariant():
    assert bar_invariance(b_torsion((2, 1)), Window(-2, 2, 3))


def test_completion_reproduces_line_element():
    window = Window(-3, 0, 3)
    assert canonical_completion(NormalMonomial((0,)), window) == b_line(0).body.restrict(window)


def test_completion_of_divided_square():
    window = Window(-1, 2, 2)
    expected = (
        AlgElem.E(0, 2)
        + mono((-1, 1), coeff=v_power(1))
        + mono((-1, 0), (1,), coeff=v_power(2))
        + mono((-1, -1), (2,), coeff=v_power(4))
    )
    assert canonical_completion(NormalMonomial((0, 0)), window) == expected


@pytest.mark.parametrize("kind", RANK2_KINDS)
@pytest.mark.parametrize("t", [-1, 0])
def test_xi_free_closed_form_is_bar_invariant(t, kind):
    flat = Window(t - 3, t + 5, 0)
    x = rank2_xi_free(t, kind, flat.index_min)
    assert bar(x).restrict(flat) == x


def test_xi_free_closed_form_terms():
    assert rank2_xi_free(0, "tt", -2) == (
        AlgElem.E(0, 2) + mono((-1, 1), coeff=v_power(1)) + mono((-2, 2), coeff=v_power(3))
    )
    assert rank2_xi_free(0, "t,t+1", -1) == mono((0, 1)) + mono((-1, 2), coeff=v_power(2))
    with pytest.raises(ArgumentError):
        rank2_xi_free(0, "t,t+2", -1)


@pytest.mark.parametrize("kind", RANK2_KINDS)
def test_completion_matches_xi_free_closed_form(kind):
    flat = Window(-3, 5, 0)
    assert canonical_completion(rank2_lead(0, kind), flat) == rank2_xi_free(0, kind, -3)


def test_displayed_rank2_xi_free_parts():
    flat = Window(-4, 4, 0)
    # O(t)+O(t+1): v^2 times the bar-invariant element
    printed = b_rank2(-1, "t,t+1").body.restrict(flat)
    assert printed == rank2_xi_free(-1, "t,t+1", -4) * v_power(2)
    assert bar(printed * v_power(-2)).restrict(flat) == printed * v_power(-2)
    # O(t)+O(t): lead 1, the rest v^2 times the bar-invariant tail
    printed = b_rank2(0, "tt").body.restrict(flat)
    lead = AlgElem.E(0, 2)
    assert printed.terms[NormalMonomial((-1, 1))] == v_power(3)
    assert printed - lead == (rank2_xi_free(0, "tt", -4) - lead) * v_power(2)
    assert bar(printed).restrict(flat) != printed


def test_completion_needs_pure_leading_monomial():
    with pytest.raises(ArgumentError):
        canonical_completion(NormalMonomial((0,), (1,)), Window(-2, 2, 2))
    with pytest.raises(ArgumentError):
        canonical_completion(NormalMonomial((-5,)), Window(-2, 2, 2))


# Shift equivariance and positivity


@pytest.mark.parametrize("label,n", [("O(0)", 2), ("O(-1)+O(-1)", 1), ("O(-1)+O(0)", -1), ("lambda:2", 3)])
def test_kappa_equivariance(label, n):
    assert kappa_equivariance(label, n, Window(-4, 3, 3))


def test_torsion_products_are_positive():
    assert torsion_positivity((2, 1), (1, 1))
    assert torsion_positivity((1,), (1,))


def test_line_times_torsion_is_positive():
    assert line_torsion_positivity(0, (1, 1), Window(-3, 0, 3))


def test_positivity_rejects_negative_coefficients():
    assert is_positive(AlgElem.xi((2,)))
    assert is_positive(AlgElem.xi((1, 1)))
    assert not is_positive(AlgElem.xi((2,)) * -1)
    # xi_2 - xi_1^2 is minus the Schur element of (1, 1)
    assert not is_positive(AlgElem.xi((2,)) - AlgElem.xi((1, 1)))
    assert not is_positive(mono((0,), coeff=v_power(1) - v_power(-1)))


# Inversion through line elements


@pytest.mark.parametrize("t,window", [(0, Window(-4, 0, 4)), (2, Window(-2, 2, 4))])
def test_telescoping(t, window):
    assert telescoping_check(t, window)


def test_weight_one_contributions_cancel():
    assert psi_E(0).coefficient(NormalMonomial((-1,), (1,))) == LaurentScalar.zero()
    assert psi_E(0).coefficient(NormalMonomial((0,))) == LaurentScalar.one()


@pytest.mark.parametrize("left,right", [((1, 0), (0, 0)), ((0, 1), (1, -1)), ((0, 2), (1, -2))])
def test_coproduct_through_line_elements(left, right):
    assert coproduct_identity(Window(-2, 2, 2), left, right)


def test_line_coproduct_families():
    window = Window(-3, 1, 2)
    left = line_coproduct(0, (1, -1), (0, 1), window)
    assert left == AlgTensor.tensor(b_line(-1).body.restrict(window), AlgElem.xi((1,))) * v_power(1)
    right = line_coproduct(0, (0, 2), (1, -2), window)
    assert right == AlgTensor.tensor(AlgElem.xi((2,)), b_line(-2).body.restrict(window)) * v_power(-2)
    assert line_coproduct(0, (1, 0), (1, 0), window).is_zero
    assert line_coproduct(0, (1, 1), (0, -1), window).is_zero


def test_coproduct_assembled_from_line_elements():
    window = Window(-3, 1, 2)
    theta_one = AlgElem.xi((1,)) * (v_power(-1) - v_power(1))
    assert coproduct_through_lines((0, 1), (1, -1), window) == AlgTensor.tensor(theta_one, AlgElem.E(-1))
    assert coproduct_through_lines((1, 0), (0, 0), window) == AlgTensor.tensor(AlgElem.E(0), AlgElem.one())
    assert coproduct_through_lines((1, -1), (0, 1), window).is_zero


def test_xi_from_b_projective_line():
    assert xi_from_b((), 3).is_trivial
    assert xi_from_b((2, 2), 0).is_trivial


def test_xi_from_b_two_branches():
    expansion = xi_from_b((2, 2), 1)
    assert len(expansion.correction) == 2
    first, second = sorted(expansion.correction, key=lambda term: term.parts)
    u1 = u_recursion(2, 1).rotate()
    assert first.parts == (0, 1) and first.factors == (None, u1)
    assert second.parts == (1, 0) and second.factors == (u1, None)
    assert expansion.to_json()["weights"] == [2, 2]


def test_xi_from_b_rejects_bad_weights():
    with pytest.raises(ArgumentError):
        xi_from_b((1,), 1)


# Principal subspace


def test_vacuum_reductions():
    tt = AlgElem.E(-3, 2) + mono((-4, -2), coeff=v_power(3)) + mono((-5, -1), coeff=v_power(5))
    assert vacuum_reduction("tt", -3) == tt
    adjacent = mono((-3, -2), coeff=v_power(2)) + mono((-4, -1), coeff=v_power(4))
    assert vacuum_reduction("t,t+1", -3) == adjacent
    with pytest.raises(ArgumentError):
        vacuum_reduction("tt", 0)


def test_principal_character_low_ranks():
    dims = principal_character(Window(-8, 0, 0), k_max=2)
    for d in range(-8, 0):
        assert dims[(1, d)] == 1
    for d in range(-9, -1):
        assert dims[(2, d)] == difference_two_count(2, d)
    assert dims[(2, -4)] == 1
    assert dims[(2, -2)] == 0


@pytest.mark.parametrize("source", ["printed", "completion"])
def test_rank2_element_times_a_letter(source):
    # E_{-1}^(2) E_{-1} = [3] E_{-1}^(3); nothing else of b_{O(-1)+O(-1)} survives
    assert rank2_acting_on_letter("tt", -1, -1, source) == mono((-1, -1, -1), coeff=quantum_int(3))
    assert rank2_acting_on_letter("t,t+1", -1, -1, source) == AlgElem.zero()


def test_rank2_element_times_a_letter_rejects_nonnegative_letters():
    with pytest.raises(ArgumentError):
        rank2_acting_on_letter("tt", -1, 0)
    with pytest.raises(ArgumentError):
        rank2_acting_on_letter("tt", -1, -1, source="other")


def test_principal_character_rank_three():
    dims = principal_character(Window(-7, 0, 0), k_max=3, source="completion")
    for d in range(-9, -2):
        assert dims[(3, d)] == difference_two_count(3, d)
    assert dims[(3, -9)] == 1
    assert dims[(3, -3)] == 0


def test_principal_character_rejects_large_rank():
    with pytest.raises(ArgumentError):
        principal_character(Window(-4, 0, 0), k_max=4)
