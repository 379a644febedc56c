"""Tests for partitions, Schur elements and the xi/chi/theta/H series."""

import pytest

from src.algebra.coeff import V, LaurentScalar, RationalScalar, quantum_int
from src.algebra.symm import (
    Partition,
    SymElem,
    chi,
    h_generator,
    partitions_of,
    schur,
    schur_expand,
    series_exp,
    theta,
    xi,
    xi_mul,
)
from src.errors import ArgumentError


def mono(*parts, coeff=1):
    return SymElem.monomial(parts, LaurentScalar.from_int(coeff) if isinstance(coeff, int) else coeff)


def test_partition_normalizes_and_conjugates():
    lam = Partition((1, 3, 2, 0))
    assert tuple(lam) == (3, 2, 1)
    assert lam.weight == 6
    assert tuple(Partition((4, 2, 1)).conjugate()) == (3, 2, 1, 1)
    with pytest.raises(ArgumentError):
        Partition((2, -1))


def test_partition_counts():
    assert [len(partitions_of(n)) for n in range(9)] == [1, 1, 2, 3, 5, 7, 11, 15, 22]


def test_xi_mul_examples():
    assert xi_mul(xi(2), xi(1)) == mono(2, 1)
    assert xi(1) * xi(1) == mono(1, 1)
    assert (xi(1) + xi(2)) * xi(1) == mono(1, 1) + mono(2, 1)
    assert xi(2) * xi(1) == xi(1) * xi(2)


def test_schur_examples():
    assert schur((2,)) == xi(2)
    assert schur((1, 1)) == mono(1, 1) - mono(2)
    assert schur((2, 1)) == mono(2, 1) - mono(3)
    assert schur(()) == SymElem.one()


def test_schur_column_is_signed_chi():
    # s_(1^n) = e_n = (-1)^n chi_n under xi = h
    for n in range(1, 6):
        expected = chi(n) if n % 2 == 0 else -chi(n)
        assert schur((1,) * n) == expected


def test_chi_examples():
    assert chi(1) == -xi(1)
    assert chi(2) == mono(1, 1) - mono(2)


def test_series_inverse_identity():
    for l in range(11):
        total = SymElem.zero()
        for i in range(l + 1):
            total = total + xi(i) * chi(l - i)
        assert total == (SymElem.one() if l == 0 else SymElem.zero())


def test_theta_examples():
    assert theta(0) == SymElem.one()
    assert theta(1) == mono(1, coeff=V ** (-1) - V)
    assert theta(2) == mono(2, coeff=V ** (-2) - V**2) + mono(1, 1, coeff=V**2 - 1)


def test_h_generator_examples():
    assert h_generator(1) == xi(1)
    assert h_generator(2) == xi(2) - mono(1, 1) * RationalScalar(1, 2)
    assert h_generator(3) == xi(3) - mono(2, 1) + mono(1, 1, 1) * RationalScalar(1, 3)
    with pytest.raises(ArgumentError):
        h_generator(0)


def test_exp_log_round_trip():
    series = series_exp({r: h_generator(r) for r in range(1, 9)}, 8)
    for n, term in enumerate(series):
        assert term == xi(n)


def test_theta_series_is_exponential():
    factor = V ** (-1) - V
    gens = {r: h_generator(r) * (factor * quantum_int(r)) for r in range(1, 7)}
    series = series_exp(gens, 6)
    for l in range(7):
        assert series[l] == theta(l)


def test_schur_expand_recovers_schur():
    lam = (3, 1, 1)
    assert schur_expand(schur(lam)) == {Partition(lam): LaurentScalar.one()}


def test_pieri_product():
    expansion = schur_expand(schur((1,)) * schur((1,)))
    assert expansion == {Partition((2,)): 1, Partition((1, 1)): 1}


def test_littlewood_richardson_positivity():
    for total in range(2, 7):
        for a in range(1, total):
            for lam in partitions_of(a):
                for mu in partitions_of(total - a):
                    expansion = schur_expand(schur(lam) * schur(mu))
                    for c in expansion.values():
                        assert c.is_monomial and c.degree_range() == (0, 0) and c.coeff(0) > 0


def test_bar_fixes_integer_elements():
    assert schur((2, 2)).bar() == schur((2, 2))
    assert theta(2).bar() != theta(2)


def test_json_shape():
    doc = (mono(2, 1) - mono(3)).to_json()
    assert [t["partition"] for t in doc["terms"]] == [[2, 1], [3]]
    assert SymElem.from_json(doc) == mono(2, 1) - mono(3)
