"""Tests for the cyclic quiver Hall algebra."""

import pytest

from src.algebra.coeff import LaurentScalar, RationalScalar, quantum_int, v_power
from src.errors import ArgumentError, BoundsExceededError, NotNilpotentError
from src.hall.cyclichall import (
    E,
    CDim,
    HallElem,
    HallTensor,
    Multisegment,
    NilRep,
    aperiodic_test,
    coproduct_component,
    h,
    hall_structure,
    in_generated_subalgebra,
    named_elements,
    one_nilcone,
    orbit_of,
    orbits,
    representative,
    rotate,
    serre_check,
    serre_relation,
    u_recursion,
    zeta,
)


def seg(p, i, l, m=1):
    return Multisegment.segment(p, i, l, m)


def semisimple(p, dims):
    return Multisegment(p, {(i, 1): d for i, d in enumerate(dims)})


# Orbits and representatives


def test_orbit_of_zero_maps():
    rep = NilRep(2, 2, (1, 1), [[[0]], [[0]]])
    assert orbit_of(rep) == semisimple(2, (1, 1))


def test_orbit_of_single_arrow_is_a_segment():
    rep = NilRep(2, 3, (1, 1), [[[1]], [[0]]])
    assert orbit_of(rep) == seg(2, 0, 2)


def test_orbit_of_jordan_block():
    rep = NilRep(1, 2, (2,), [[[0, 0], [1, 0]]])
    assert orbit_of(rep) == seg(1, 0, 2)


def test_orbit_of_rejects_invertible_loop():
    with pytest.raises(NotNilpotentError):
        orbit_of(NilRep(1, 2, (1,), [[[1]]]))


def test_nilrep_checks_shapes():
    with pytest.raises(ArgumentError):
        NilRep(2, 2, (1, 2), [[[0]], [[0]]])


@pytest.mark.parametrize("p,dims,count", [(1, (4,), 5), (2, (1, 1), 3), (3, (1, 1, 1), 7), (2, (2, 0), 1)])
def test_orbit_counts(p, dims, count):
    assert len(orbits(p, dims)) == count


@pytest.mark.parametrize("p,dims", [(1, (3,)), (2, (2, 1)), (2, (2, 2)), (3, (1, 2, 1)), (4, (1, 1, 1, 1))])
def test_representative_round_trip(p, dims):
    for m in orbits(p, dims):
        assert m.dim().dims == dims
        assert orbit_of(representative(m, 2)) == m


def test_kernel_dims_determine_multisegment():
    m = Multisegment(3, {(0, 2): 1, (2, 3): 1, (1, 1): 2})
    total = m.dim().total
    d = [[m.kernel_dim(i, k) for k in range(total + 2)] for i in range(3)]
    assert Multisegment.from_kernel_dims(3, d, total) == m


def test_multisegment_json():
    m = Multisegment(3, {(0, 2): 1, (2, 3): 2})
    assert Multisegment.from_json(3, m.to_json()) == m
    assert m.key == "0.2x1+2.3x2"


# Structure constants


def test_lines_in_a_plane():
    a = seg(1, 0, 1)
    assert hall_structure(1, a, a, seg(1, 0, 1, 2)) == [1, 1]


def test_jordan_block_has_one_submodule():
    a = seg(1, 0, 1)
    assert hall_structure(1, a, a, seg(1, 0, 2)) == [1]


def test_explicit_points_and_check():
    a = seg(1, 0, 1)
    assert hall_structure(1, a, a, seg(1, 0, 1, 2), points=[2, 3], check=[5]) == [1, 1]


def test_empty_subobject():
    b = seg(2, 0, 2)
    zero = Multisegment.zero(2)
    assert hall_structure(2, zero, b, b) == [1]
    assert hall_structure(2, zero, b, seg(2, 1, 2)) == [0]


def test_dimension_mismatch():
    with pytest.raises(ArgumentError):
        hall_structure(1, seg(1, 0, 1), seg(1, 0, 1), seg(1, 0, 3))


def test_structure_constants_are_cached(in_memory_cache):
    a = seg(1, 0, 1)
    hall_structure(1, a, a, seg(1, 0, 2))
    entries = in_memory_cache.get_status()["entries"]
    assert entries > 0
    hall_structure(1, a, a, seg(1, 0, 2))
    assert in_memory_cache.get_status()["entries"] == entries
    assert in_memory_cache.get_status()["hits"] > 0


# Products


def test_e1_e0():
    expected = HallElem(2, CDim((1, 1)), {semisimple(2, (1, 1)): 1, seg(2, 0, 2): 1}) * v_power(1)
    assert E(2, 1) * E(2, 0) == expected


def test_rotation_commutes_with_product():
    assert (E(2, 1) * E(2, 0)).rotate() == E(2, 0) * E(2, 1)
    assert (E(3, 0) * E(3, 1)).rotate() == E(3, 1) * E(3, 2)


def test_square_is_divided_power():
    for p in (2, 3):
        assert E(p, 0) * E(p, 0) == E(p, 0, 2) * quantum_int(2).shift(-2)


def test_jordan_product():
    x = HallElem.indicator(seg(1, 0, 1))
    expected = HallElem(1, CDim((2,)), {seg(1, 0, 2): 1, seg(1, 0, 1, 2): LaurentScalar.from_q_poly([1, 1])})
    assert x * x == expected


def test_unit():
    f = E(2, 1) * E(2, 0)
    assert f * HallElem.one(2) == f
    assert HallElem.one(2) * f == f


def test_associativity():
    e0, e1 = E(2, 0), E(2, 1)
    assert (e0 * e1) * e0 == e0 * (e1 * e0)


def test_bounds_exceeded():
    with pytest.raises(BoundsExceededError):
        E(2, 0, 3) * E(2, 0, 2)


def test_mixed_quivers_rejected():
    with pytest.raises(ArgumentError):
        E(2, 0) * E(3, 0)


@pytest.mark.parametrize("p", [2, 3])
def test_serre_relations(p):
    assert serre_check(p)


def test_serre_relation_needs_adjacent_vertices():
    with pytest.raises(ArgumentError):
        serre_relation(4, 0, 2)


# Coproduct


def test_coproduct_of_jordan_block():
    one = HallElem.indicator(seg(1, 0, 1))
    result = coproduct_component(HallElem.indicator(seg(1, 0, 2)), CDim((1,)), CDim((1,)))
    assert result == HallTensor.tensor(one, one) * LaurentScalar({-2: 1, 0: -1})


def test_coproduct_counit_side():
    f = E(2, 1) * E(2, 0)
    result = coproduct_component(f, CDim.zero(2), f.deg)
    assert result == HallTensor.tensor(HallElem.one(2), f)


def test_coproduct_of_whole_nilcone_factors():
    result = coproduct_component(one_nilcone(2, 1), CDim((0, 1)), CDim((1, 0)))
    assert result == HallTensor.tensor(E(2, 1), E(2, 0)) * v_power(-3)


def test_coproduct_dimension_mismatch():
    with pytest.raises(ArgumentError):
        coproduct_component(E(2, 0), CDim((0, 1)), CDim((0, 0)))


# Named elements and the u recursion


def test_zeta_one_is_the_cyclic_segment():
    assert zeta(2, 1) == HallElem.indicator(seg(2, 0, 2))


def test_h_coefficients():
    assert h(2, 1) == HallElem.indicator(seg(2, 0, 2))
    h2 = h(1, 2)
    assert h2.coeff(seg(1, 0, 2)) == RationalScalar(1, 2)
    assert h2.coeff(seg(1, 0, 1, 2)) == RationalScalar(LaurentScalar({0: 1, -2: -1}), 2)


def test_named_elements_dispatch():
    assert named_elements(2, "E", l=2, i=1) == E(2, 1, 2)
    assert named_elements(2, "H_star", l=1) == h(2, 1) * v_power(2)
    with pytest.raises(ArgumentError):
        named_elements(2, "z", l=1)
    with pytest.raises(ArgumentError):
        E(1, 0)


def test_u1_for_two_vertices():
    u1 = u_recursion(2, 1)
    assert u1 == HallElem(2, CDim((1, 1)), {semisimple(2, (1, 1)): 1, seg(2, 1, 2): 1})
    assert u1 == E(2, 0) * E(2, 1) * v_power(-1)


@pytest.mark.parametrize("p", [2, 3])
def test_u1_in_generated_subalgebra(p):
    assert in_generated_subalgebra(u_recursion(p, 1))


@pytest.mark.parametrize("l", [2, 3])
def test_higher_u_in_generated_subalgebra_for_two_vertices(l):
    assert in_generated_subalgebra(u_recursion(2, l))


def test_zeta_not_in_generated_subalgebra():
    assert not in_generated_subalgebra(zeta(2, 1))


@pytest.mark.parametrize("l", [1, 2, 3])
def test_u_vanishes_for_the_jordan_quiver(l):
    assert u_recursion(1, l).is_zero


# Aperiodicity and rotation


def test_aperiodic_examples():
    assert not aperiodic_test(semisimple(2, (1, 1)))
    assert aperiodic_test(seg(2, 0, 2))
    assert aperiodic_test(Multisegment.zero(3))


def test_rotation_fixes_totally_periodic():
    m = Multisegment(3, {(0, 2): 1, (1, 2): 1, (2, 2): 1})
    assert rotate(m) == m
    assert not aperiodic_test(m)
    assert rotate(rotate(seg(3, 0, 1))) == seg(3, 2, 1)


def test_hall_elem_json():
    f = E(2, 1) * E(2, 0)
    assert HallElem.from_json(f.to_json()) == f
