"""Tests for the star-diagram lattice: Euler form, HN types, roots and strata."""

import itertools
import math
import random
from fractions import Fraction

import pytest

from src.algebra.symm import partitions_of
from src.errors import ArgumentError, UnsupportedDiagramError
from src.geometry.starcomb import (
    HNOrder,
    HNType,
    KClass,
    PicElem,
    RootKind,
    StarDiagram,
    aut_count,
    basis_class,
    builder_dims,
    cartan_matrix,
    dim_borel,
    dim_end,
    euler_form,
    finite_roots,
    generated_at,
    hn_compare,
    twist_bound,
    omega,
    omega_degree,
    root_test,
    slope_and_hn,
    strata_codim,
    symmetric_form,
)

P1 = StarDiagram(())


def rd(r, d):
    return KClass(rank=r, ndelta=d)


def finite_type_weights(limit):
    out = [()]
    for n_branches in (1, 2, 3):
        for ws in itertools.combinations_with_replacement(range(2, limit + 2), n_branches):
            d = StarDiagram(ws)
            if d.is_finite_type() and sum(p - 1 for p in ws) <= limit:
                out.append(ws)
    return out


def test_euler_form_on_p1():
    for r1, d1, r2, d2 in itertools.product(range(-2, 3), repeat=4):
        assert euler_form(P1, rd(r1, d1), rd(r2, d2)) == r1 * r2 + r1 * d2 - r2 * d1


def test_structure_sheaf_against_point():
    assert euler_form(P1, rd(1, 0), rd(0, 1)) == 1


def test_euler_form_rejects_bad_labels():
    d = StarDiagram((2, 3))
    with pytest.raises(ArgumentError):
        euler_form(d, KClass.simple(1, 2), rd(1, 0))
    with pytest.raises(ArgumentError):
        euler_form(d, KClass.simple(3, 1), rd(1, 0))


def test_symmetrized_euler_form_is_cartan():
    for ws in finite_type_weights(8):
        d = StarDiagram(ws)
        labels = d.basis()
        cartan = cartan_matrix(d)
        for r, a in enumerate(labels):
            for c, b in enumerate(labels):
                assert symmetric_form(d, basis_class(a), basis_class(b)) == cartan[r][c], (ws, a, b)


def test_serre_duality_shadow_on_p1():
    rng = random.Random(7)
    for _ in range(100):
        r1, d1, r2, d2 = (rng.randint(-5, 5) for _ in range(4))
        assert euler_form(P1, rd(r1, d1), rd(r2, d2)) == -euler_form(P1, rd(r2, d2), rd(r1, d1 - 2 * r1))


def test_pic_group_law():
    for ws in [(2,), (3, 4), (2, 3, 5)]:
        d = StarDiagram(ws)
        for i in range(1, len(ws) + 1):
            gen = PicElem.generator(d, i)
            total = PicElem(d.weights)
            for _ in range(d.weight_of(i)):
                total = total + gen
            assert total == PicElem.delta(d)
            assert gen - gen == PicElem(d.weights)


def test_omega_degree():
    assert omega_degree(P1) == KClass(ndelta=-2)
    d = StarDiagram((2, 3))
    w = omega(d).class_of()
    assert w.rank == 1
    assert w.size(d) == Fraction(-2) + Fraction(1, 2) + Fraction(2, 3)


def test_slopes():
    d = StarDiagram((3,))
    assert KClass(rank=0, ndelta=2).slope(d) == math.inf
    assert (rd(2, 1) + KClass.simple(1, 1)).slope(d) == Fraction(2, 3)


def test_hn_examples():
    hn = slope_and_hn(P1, [rd(1, 1), rd(1, -1), rd(0, 2)])
    assert hn.parts == (rd(0, 2), rd(1, 1), rd(1, -1))
    assert slope_and_hn(P1, [rd(1, 0), rd(1, 0)]).parts == (rd(2, 0),)
    assert slope_and_hn(P1, [rd(0, 1)]).parts == (rd(0, 1),)
    with pytest.raises(ArgumentError):
        slope_and_hn(P1, [])


def hn_types_of_rank2_class(total_degree, degree_range=range(-4, 5)):
    types = set()
    for a, b in itertools.combinations_with_replacement(degree_range, 2):
        tor = total_degree - a - b
        if tor < 0:
            continue
        summands = [rd(1, a), rd(1, b)] + ([rd(0, tor)] if tor else [])
        types.add(slope_and_hn(P1, summands))
    return sorted(types, key=lambda t: [(p.rank, p.ndelta) for p in t.parts])


def test_semistable_type_is_maximal():
    types = hn_types_of_rank2_class(0)
    semistable = HNType((rd(2, 0),))
    assert semistable in types
    for other in types:
        if other != semistable:
            assert hn_compare(P1, semistable, other) == HNOrder.SUCCEEDS
    assert hn_compare(P1, semistable, semistable) == HNOrder.EQUAL


def test_hn_order_is_strict_partial_order():
    types = hn_types_of_rank2_class(1)
    rel = {(a, b): hn_compare(P1, a, b) for a in types for b in types}
    for a in types:
        assert rel[(a, a)] == HNOrder.EQUAL
    for a, b in itertools.product(types, repeat=2):
        if rel[(a, b)] == HNOrder.PRECEDES:
            assert rel[(b, a)] == HNOrder.SUCCEEDS
    for a, b, c in itertools.product(types, repeat=3):
        if rel[(a, b)] == HNOrder.PRECEDES and rel[(b, c)] == HNOrder.PRECEDES:
            assert rel[(a, c)] == HNOrder.PRECEDES


def test_hn_compare_decides_by_first_slope():
    a = HNType((rd(0, 1), rd(1, 0)))
    b = HNType((rd(1, 1),))
    assert hn_compare(P1, a, b) == HNOrder.PRECEDES
    with pytest.raises(ArgumentError):
        hn_compare(P1, a, HNType((rd(1, 0),)))


def test_root_test_on_p1():
    for n in range(-4, 5):
        assert root_test(P1, rd(1, n)) == RootKind.REAL
        assert root_test(P1, rd(2, n)) == RootKind.NONE
    assert root_test(P1, rd(0, 3)) == RootKind.IMAGINARY
    assert root_test(P1, rd(0, 0)) == RootKind.NONE


def test_finite_root_counts():
    assert len(finite_roots(StarDiagram((2, 2)))) == 6  # A3
    assert len(finite_roots(StarDiagram((2, 3)))) == 10  # A4
    assert len(finite_roots(StarDiagram((2, 2, 2)))) == 12  # D4
    assert len(finite_roots(StarDiagram((2, 2, 3)))) == 20  # D5
    assert len(finite_roots(StarDiagram((2, 3, 3)))) == 36  # E6
    assert len(finite_roots(StarDiagram((2, 3, 5)))) == 120  # E8


def test_root_test_rejects_wild_diagrams():
    with pytest.raises(UnsupportedDiagramError):
        root_test(StarDiagram((3, 3, 3)), rd(1, 0))
    with pytest.raises(UnsupportedDiagramError):
        root_test(StarDiagram((2, 2, 2, 2)), rd(1, 0))


def test_twist_bound_examples():
    assert twist_bound(P1, rd(2, 0), rd(2, 0), 0) == -4
    assert twist_bound(P1, rd(1, 3), rd(2, 0), 5) == twist_bound(P1, rd(1, 3), rd(3, -7), -2)
    assert twist_bound(P1, rd(2, 0), rd(2, 2), 0) < twist_bound(P1, rd(2, 0), rd(2, 0), 0)
    with pytest.raises(ArgumentError):
        twist_bound(P1, rd(0, 1), rd(1, 0), 0)


def test_builder_dims_examples():
    assert builder_dims(P1, 0, rd(0, 4)) == {(0, 0): 4}
    for t in range(-3, 4):
        for n in range(-3, 4):
            assert builder_dims(P1, n, rd(1, t)) == {(0, 0): t - n + 1}
    d = StarDiagram((3, 4))
    for i, j in d.torsion_labels():
        dims = builder_dims(d, 0, KClass.simple(i, j))
        for key, value in dims.items():
            assert value == (1 if key == (i, j) else 0)


def test_generation_implies_slope_bound():
    # a sum of O(a_k) with every a_k >= n plus torsion has slope >= n
    for n in range(-2, 3):
        for degrees in itertools.combinations_with_replacement(range(-3, 4), 2):
            if min(degrees) < n:
                continue
            for tor in range(3):
                assert all(generated_at(builder_dims(P1, n, rd(1, a))) for a in degrees)
                assert rd(2, sum(degrees) + tor).slope(P1) >= n


def test_strata_codim_examples():
    assert strata_codim([(1,)] * 4, 4) == 0
    assert strata_codim([(2,)], 2) == 1
    assert strata_codim([(1, 1)], 2) == 3
    with pytest.raises(ArgumentError):
        strata_codim([(2,)], 3)


def test_strata_codim_matches_automorphism_oracle():
    for l in range(1, 5):
        for lam in partitions_of(l):
            assert dim_end(lam) == 2 * dim_borel(lam) + l
            assert aut_count(lam, 3) < 3 ** dim_end(lam) <= aut_count(lam, 3) * 3**l


def _det_mod2(m):
    n = len(m)
    total = 0
    for perm in itertools.permutations(range(n)):
        prod = 1
        for r in range(n):
            prod *= m[r][perm[r]]
        total += prod
    return total % 2


def test_aut_count_brute_force_over_f2():
    for lam in [(1,), (2,), (1, 1), (3,), (2, 1), (1, 1, 1)]:
        n = sum(lam)
        jordan = [[0] * n for _ in range(n)]
        start = 0
        for part in lam:
            for k in range(part - 1):
                jordan[start + k][start + k + 1] = 1
            start += part
        count = 0
        for bits in itertools.product((0, 1), repeat=n * n):
            x = [list(bits[r * n : (r + 1) * n]) for r in range(n)]
            xj = [[sum(x[a][k] * jordan[k][b] for k in range(n)) % 2 for b in range(n)] for a in range(n)]
            jx = [[sum(jordan[a][k] * x[k][b] for k in range(n)) % 2 for b in range(n)] for a in range(n)]
            if xj == jx and _det_mod2(x):
                count += 1
        assert count == aut_count(lam, 2), lam


def test_kclass_json_round_trip():
    a = KClass(rank=2, tor=(((1, 2), 3),), ndelta=-1)
    assert KClass.from_json(a.to_json()) == a
    assert a.to_json() == {"rank": 2, "tor": [[1, 2, 3]], "ndelta": -1}
