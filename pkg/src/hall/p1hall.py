"""
Finite-field Hall algebra of coherent sheaves on the projective line.

Sheaves of rank at most two over F_q are modelled split: line bundles O(a),
with morphisms given by binary forms, and torsion sheaves as finite modules
over the local rings at closed points of degree at most two. A form of
degree n is stored as its coefficients (c_0, ..., c_n) on X^i Y^(n-i); its
germ at a finite point uses t = X/Y and at infinity s = Y/X.

Hall numbers are counted by enumerating Hom spaces, keeping the injective
maps with the requested cokernel and dividing by the automorphism count of
the subsheaf. With q = v^-2 the product is

    (f * g)(F) = sum_{G <= F} v^(-<F/G, G>) f(F/G) g(G),

f read on the quotient and g on the subsheaf. Under this convention
fn(E_t) = v^-1 1_{O(t)} and fn(xi_l) = 1 on torsion of degree l satisfy the
quadratic relation and the xi-E commutation rule, which is how the side and
sign were fixed.
"""

import itertools
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from src.algebra.coeff import LaurentScalar, v_power
from src.algebra.linalg import interpolate_counts
from src.algebra.loopalg import E_LETTER, AlgElem, NormalMonomial, mul, quadratic_relation_words
from src.algebra.symm import Partition, partitions_of
from src.errors import (
    ArgumentError,
    BoundsExceededError,
    NonClearingDivisionError,
    NotInjectiveError,
    WindowClosureError,
)
from src.geometry.starcomb import KClass, StarDiagram, aut_count, euler_form
from src.hall.cyclichall import Q_POINTS
from src.hall.finite_field import FiniteField, Poly, get_field

logger = logging.getLogger(__name__)

P1 = StarDiagram(())

MAX_POINT_DEGREE = 2
MAX_RANK = 2
MAX_ABS_DEGREE = 4
MAX_TORSION_WEIGHT = 3
# Torsion of degree 3 can sit at a point of degree 3, which is not modelled
MAX_EXACT_TORSION = 2
MAX_HOM_MAPS = 250_000

VB = "vb"
TOR = "tor"

ZERO = LaurentScalar.zero()
ONE = LaurentScalar.one()

Class = Tuple[int, int]


# Polynomial helpers over F_q


def _poly_sub(fq: FiniteField, f: Sequence[int], g: Sequence[int]) -> Poly:
    return fq.poly_add(f, fq.poly_mul((fq.neg(1),), g))


def _poly_mod(fq: FiniteField, f: Sequence[int], modulus: Sequence[int]) -> Poly:
    return fq.poly_divmod(f, modulus)[1]


def _poly_pow(fq: FiniteField, f: Sequence[int], n: int) -> Poly:
    result: Poly = (1,)
    for _ in range(n):
        result = fq.poly_mul(result, f)
    return result


def _poly_monic(fq: FiniteField, f: Sequence[int]) -> Poly:
    f = fq.poly_trim(f)
    if not f:
        return f
    return fq.poly_mul((fq.inv(f[-1]),), f)


def _poly_gcd(fq: FiniteField, f: Sequence[int], g: Sequence[int]) -> Poly:
    f, g = fq.poly_trim(f), fq.poly_trim(g)
    while g:
        f, g = g, fq.poly_divmod(f, g)[1]
    return _poly_monic(fq, f)


def _poly_inverse_mod(fq: FiniteField, u: Sequence[int], modulus: Sequence[int]) -> Poly:
    """Inverse of u modulo a polynomial coprime to it (extended Euclid)."""
    r0, r1 = fq.poly_trim(modulus), _poly_mod(fq, u, modulus)
    s0, s1 = (), (1,)
    while r1:
        quot, rem = fq.poly_divmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, _poly_sub(fq, s0, fq.poly_mul(quot, s1))
    if len(r0) != 1:
        raise ArgumentError(f"{tuple(u)} is not a unit modulo {tuple(modulus)}")
    return _poly_mod(fq, fq.poly_mul(s0, (fq.inv(r0[0]),)), modulus)


def _pad(f: Sequence[int], n: int) -> List[int]:
    return list(f) + [0] * (n - len(f))


@lru_cache(maxsize=None)
def _irreducibles(q: int, degree: int) -> Tuple[Poly, ...]:
    return tuple(get_field(q).monic_irreducibles(degree))


# Closed points and isomorphism classes


@dataclass(frozen=True, order=True)
class ClosedPoint:
    """
    A closed point of P^1 over F_q.

    poly is a monic irreducible in t = X/Y (constant term first), or the
    empty tuple for the point at infinity.
    """

    q: int
    poly: Poly = ()

    def __post_init__(self):
        poly = tuple(int(c) for c in self.poly)
        object.__setattr__(self, "poly", poly)
        if poly:
            degree = len(poly) - 1
            if not 1 <= degree <= MAX_POINT_DEGREE or poly not in _irreducibles(self.q, degree):
                raise ArgumentError(f"{poly} is not a monic irreducible of degree <= {MAX_POINT_DEGREE} over F_{self.q}")

    @classmethod
    def infinity(cls, q: int) -> "ClosedPoint":
        return cls(q, ())

    @classmethod
    def rational(cls, q: int, a: int) -> "ClosedPoint":
        """The point t = a."""
        fq = get_field(q)
        if a not in fq.elements():
            raise ArgumentError(f"{a} is not an element of F_{q}")
        return cls(q, (fq.neg(a), 1))

    @property
    def is_infinity(self) -> bool:
        return not self.poly

    @property
    def degree(self) -> int:
        return 1 if self.is_infinity else len(self.poly) - 1

    @property
    def uniformizer(self) -> Poly:
        return (0, 1) if self.is_infinity else self.poly

    @property
    def key(self) -> str:
        return "inf" if self.is_infinity else ".".join(str(c) for c in self.poly)

    @classmethod
    def parse(cls, q: int, key: str) -> "ClosedPoint":
        if key == "inf":
            return cls.infinity(q)
        try:
            return cls(q, tuple(int(c) for c in key.split(".")))
        except ValueError as e:
            raise ArgumentError(f"Malformed closed point {key!r}") from e

    def germ(self, form: Sequence[int], n: int) -> Poly:
        """Local function of a degree-n form near this point."""
        padded = _pad(form, n + 1)
        if self.is_infinity:
            padded.reverse()
        return get_field(self.q).poly_trim(padded)

    def __str__(self) -> str:
        return self.key


@lru_cache(maxsize=None)
def closed_points(q: int, max_degree: int = MAX_POINT_DEGREE) -> Tuple[ClosedPoint, ...]:
    """Closed points of degree <= max_degree, infinity first."""
    if not 1 <= max_degree <= MAX_POINT_DEGREE:
        raise ArgumentError(f"Point degree must lie in 1..{MAX_POINT_DEGREE}, got {max_degree}")
    points = [ClosedPoint.infinity(q)]
    for degree in range(1, max_degree + 1):
        points.extend(ClosedPoint(q, poly) for poly in _irreducibles(q, degree))
    return tuple(points)


def rational_point_count(q: int) -> int:
    """Number of F_q-rational points, which is q + 1."""
    return sum(1 for x in closed_points(q, 1) if x.degree == 1)


class Summand(NamedTuple):
    """An indecomposable summand: O(degree), or O_x / m^length at point."""

    kind: str
    degree: int = 0
    point: Optional[ClosedPoint] = None
    length: int = 0


_LINE_RE = re.compile(r"^O\((-?\d+)\)$")
_TORSION_RE = re.compile(r"^T\[([^\]]+)\]\((\d+(?:,\d+)*)\)$")


@dataclass(frozen=True)
class CohSheafClass:
    """
    Isomorphism class O(a_1) + ... + O(a_r) + sum_x T_x(lambda_x).

    vb holds the line-bundle degrees in increasing order and torsion the
    pairs (point, partition) sorted by point.
    """

    q: int
    vb: Tuple[int, ...] = ()
    torsion: Tuple[Tuple[ClosedPoint, Partition], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vb", tuple(sorted(int(a) for a in self.vb)))
        if len(self.vb) > MAX_RANK:
            raise ArgumentError(f"Rank {len(self.vb)} exceeds {MAX_RANK}")
        items = self.torsion.items() if isinstance(self.torsion, Mapping) else self.torsion
        merged: Dict[ClosedPoint, Partition] = {}
        for x, lam in items:
            if not isinstance(x, ClosedPoint) or x.q != self.q:
                raise ArgumentError(f"Torsion point {x} does not live over F_{self.q}")
            if x in merged:
                raise ArgumentError(f"Point {x} listed twice")
            lam = Partition(lam)
            if lam:
                merged[x] = lam
        object.__setattr__(self, "torsion", tuple(sorted(merged.items())))

    @property
    def rank(self) -> int:
        return len(self.vb)

    @property
    def torsion_degree(self) -> int:
        return sum(x.degree * lam.weight for x, lam in self.torsion)

    @property
    def degree(self) -> int:
        return sum(self.vb) + self.torsion_degree

    @property
    def cls(self) -> Class:
        return (self.rank, self.degree)

    @property
    def kclass(self) -> KClass:
        return KClass(rank=self.rank, ndelta=self.degree)

    @property
    def support(self) -> Tuple[ClosedPoint, ...]:
        return tuple(x for x, _ in self.torsion)

    def partition_at(self, x: ClosedPoint) -> Partition:
        return dict(self.torsion).get(x, Partition())

    def summands(self) -> List[Summand]:
        """Line bundles in increasing degree, then torsion by point and decreasing length."""
        out = [Summand(VB, a) for a in self.vb]
        for x, lam in self.torsion:
            out.extend(Summand(TOR, 0, x, k) for k in lam)
        return out

    @property
    def key(self) -> str:
        parts = [f"O({a})" for a in self.vb]
        parts += [f"T[{x.key}]({','.join(str(k) for k in lam)})" for x, lam in self.torsion]
        return "+".join(parts) if parts else "0"

    @property
    def sort_key(self) -> Tuple:
        return (self.rank, self.degree, self.vb, self.key)

    @classmethod
    def parse(cls, q: int, text: str) -> "CohSheafClass":
        """Inverse of key, e.g. "O(-1)+T[inf](2,1)"."""
        text = text.replace(" ", "")
        if text == "0":
            return cls(q)
        vb: List[int] = []
        torsion: List[Tuple[ClosedPoint, Partition]] = []
        for part in text.split("+"):
            if match := _LINE_RE.match(part):
                vb.append(int(match.group(1)))
            elif match := _TORSION_RE.match(part):
                point = ClosedPoint.parse(q, match.group(1))
                torsion.append((point, Partition(int(k) for k in match.group(2).split(","))))
            else:
                raise ArgumentError(f"Cannot parse sheaf summand {part!r}")
        return cls(q, tuple(vb), tuple(torsion))

    def to_json(self) -> Dict:
        return {"key": self.key, "rank": self.rank, "degree": self.degree}

    def __str__(self) -> str:
        return self.key


def line_bundle(q: int, a: int) -> CohSheafClass:
    return CohSheafClass(q, (a,))


def _torsion_configurations(points: Tuple[ClosedPoint, ...], start: int, weight: int) -> Iterator[Tuple]:
    if weight == 0:
        yield ()
        return
    if start == len(points):
        return
    x = points[start]
    yield from _torsion_configurations(points, start + 1, weight)
    for n in range(1, weight // x.degree + 1):
        for lam in partitions_of(n):
            for rest in _torsion_configurations(points, start + 1, weight - n * x.degree):
                yield ((x, lam),) + rest


@lru_cache(maxsize=None)
def torsion_classes(q: int, weight: int) -> Tuple[CohSheafClass, ...]:
    """
    All torsion classes of degree `weight`.

    Raises:
        WindowClosureError: If weight is large enough to need points of degree > 2
    """
    if weight > MAX_EXACT_TORSION:
        raise WindowClosureError(f"Torsion of degree {weight} needs closed points of degree > {MAX_POINT_DEGREE}")
    configs = _torsion_configurations(closed_points(q), 0, weight)
    return tuple(CohSheafClass(q, (), config) for config in configs)


def sheaf_classes(q: int, cls: Class, deg_range: Tuple[int, int], tor_max: int) -> List[CohSheafClass]:
    """Isomorphism classes of K-class cls with line degrees in deg_range and torsion degree <= tor_max."""
    rank, degree = cls
    lo, hi = deg_range
    out: List[CohSheafClass] = []
    for vb in itertools.combinations_with_replacement(range(lo, hi + 1), rank):
        weight = degree - sum(vb)
        if 0 <= weight <= tor_max:
            out.extend(CohSheafClass(q, vb, t.torsion) for t in torsion_classes(q, weight))
    return sorted(out, key=lambda c: c.sort_key)


# Hom and Ext


def _summand_hom(s: Summand, t: Summand) -> int:
    if s.kind == VB and t.kind == VB:
        return max(t.degree - s.degree + 1, 0)
    if s.kind == VB:
        return t.point.degree * t.length
    if t.kind == VB or s.point != t.point:
        return 0
    return s.point.degree * min(s.length, t.length)


def _summand_ext(s: Summand, t: Summand) -> int:
    if s.kind == VB and t.kind == VB:
        return max(s.degree - t.degree - 1, 0)
    if s.kind == VB:
        return 0
    if t.kind == VB:
        return s.point.degree * s.length
    if s.point != t.point:
        return 0
    return s.point.degree * min(s.length, t.length)


def _check_same_field(*classes: CohSheafClass):
    qs = {c.q for c in classes}
    if len(qs) > 1:
        raise ArgumentError(f"Classes live over different fields {sorted(qs)}")


def hom_ext_dims(a: CohSheafClass, b: CohSheafClass) -> Tuple[int, int]:
    """
    Dimensions of Hom(a, b) and Ext^1(a, b) over F_q.

    Ext is computed by Serre duality with the canonical sheaf O(-2), so both
    are additive over summands.
    """
    _check_same_field(a, b)
    pairs = [(s, t) for s in a.summands() for t in b.summands()]
    return sum(_summand_hom(s, t) for s, t in pairs), sum(_summand_ext(s, t) for s, t in pairs)


def euler_pairing(a: CohSheafClass, b: CohSheafClass) -> int:
    return euler_form(P1, a.kclass, b.kclass)


def automorphism_count(a: CohSheafClass) -> int:
    """|Aut(a)|: the line-bundle block, the torsion modules and Hom(vb, torsion)."""
    q = a.q
    if a.rank == 0:
        count = 1
    elif a.rank == 1:
        count = q - 1
    elif a.vb[0] == a.vb[1]:
        count = (q * q - 1) * (q * q - q)
    else:
        count = (q - 1) ** 2 * q ** (a.vb[1] - a.vb[0] + 1)
    for x, lam in a.torsion:
        count *= aut_count(lam, q**x.degree)
    return count * q ** (a.rank * a.torsion_degree)


# Morphisms


@dataclass
class SheafMap:
    """
    A morphism source -> target, one entry per (target summand, source summand).

    Line-to-line entries are binary forms of degree b - a, padded to length
    b - a + 1. Entries landing in O_x / m^k are germs at x reduced modulo
    pi^k; torsion-to-torsion entries give the image of the generator.
    Missing entries are zero.
    """

    source: CohSheafClass
    target: CohSheafClass
    entries: Dict[Tuple[int, int], Poly] = field(default_factory=dict)

    def __post_init__(self):
        _check_same_field(self.source, self.target)
        fq = get_field(self.q)
        src, tgt = self.source.summands(), self.target.summands()
        cleaned: Dict[Tuple[int, int], Poly] = {}
        for (i, j), poly in self.entries.items():
            if not (0 <= i < len(tgt) and 0 <= j < len(src)):
                raise ArgumentError(f"Entry ({i}, {j}) out of range")
            if any(c not in fq.elements() for c in poly):
                raise ArgumentError(f"Entry {tuple(poly)} has coefficients outside F_{self.q}")
            s, t = src[j], tgt[i]
            if not _summand_hom(s, t):
                if fq.poly_trim(poly):
                    raise ArgumentError(f"Hom({s}, {t}) is zero but entry ({i}, {j}) is not")
                continue
            if s.kind == VB and t.kind == VB:
                n = t.degree - s.degree
                if len(fq.poly_trim(poly)) > n + 1:
                    raise ArgumentError(f"Entry ({i}, {j}) is not a form of degree {n}")
                cleaned[(i, j)] = tuple(_pad(fq.poly_trim(poly), n + 1))
            else:
                modulus = _poly_pow(fq, t.point.uniformizer, t.length)
                poly = _poly_mod(fq, poly, modulus)
                if s.kind == TOR:
                    killed = fq.poly_mul(_poly_pow(fq, t.point.uniformizer, s.length), poly)
                    if _poly_mod(fq, killed, modulus):
                        raise ArgumentError(f"Entry ({i}, {j}) is not killed by pi^{s.length}")
                cleaned[(i, j)] = poly
        self.entries = cleaned

    @property
    def q(self) -> int:
        return self.source.q

    def entry(self, i: int, j: int) -> Poly:
        return self.entries.get((i, j), ())


def _hom_slots(a: CohSheafClass, b: CohSheafClass) -> List[Tuple[Tuple[int, int], int, Callable[[Sequence[int]], Poly]]]:
    fq = get_field(a.q)
    slots = []
    for j, s in enumerate(a.summands()):
        for i, t in enumerate(b.summands()):
            size = _summand_hom(s, t)
            if not size:
                continue
            if s.kind == VB and t.kind == VB:
                build = tuple
            elif s.kind == VB:
                build = fq.poly_trim
            else:
                pi = t.point.uniformizer
                shift = _poly_pow(fq, pi, max(t.length - s.length, 0))
                modulus = _poly_pow(fq, pi, t.length)

                def build(coords, shift=shift, modulus=modulus):
                    return _poly_mod(fq, fq.poly_mul(shift, coords), modulus)

            slots.append(((i, j), size, build))
    return slots


def hom_space(a: CohSheafClass, b: CohSheafClass) -> Iterator[SheafMap]:
    """
    Every morphism a -> b.

    Raises:
        BoundsExceededError: If the space has more than MAX_HOM_MAPS elements
    """
    slots = _hom_slots(a, b)
    dim = sum(size for _, size, _ in slots)
    if a.q**dim > MAX_HOM_MAPS:
        raise BoundsExceededError(f"Hom({a}, {b}) has {a.q}^{dim} elements, limit {MAX_HOM_MAPS}")
    fq = get_field(a.q)
    for coords in fq.vectors(dim):
        entries = {}
        pos = 0
        for key, size, build in slots:
            chunk = coords[pos : pos + size]
            pos += size
            if any(chunk):
                entries[key] = build(chunk)
        yield SheafMap(a, b, entries)


# Cokernels


def _generic_minors(f: SheafMap) -> Optional[List[Tuple[Poly, int]]]:
    """
    Maximal minors of the line-bundle block as (finite-chart polynomial, form degree).

    None when the source has no line summands; an empty list when the block
    cannot have full column rank.
    """
    fq = get_field(f.q)
    src, tgt = f.source.summands(), f.target.summands()
    cols = [j for j, s in enumerate(src) if s.kind == VB]
    rows = [i for i, t in enumerate(tgt) if t.kind == VB]
    if not cols:
        return None
    if len(cols) > len(rows):
        return []

    def entry(i: int, j: int) -> Tuple[Poly, int]:
        return fq.poly_trim(f.entry(i, j)), tgt[i].degree - src[j].degree

    if len(cols) == 1:
        return [entry(i, cols[0]) for i in rows]
    (a, na), (d, nd) = entry(rows[0], cols[0]), entry(rows[1], cols[1])
    (b, _), (c, _) = entry(rows[0], cols[1]), entry(rows[1], cols[0])
    return [(_poly_sub(fq, fq.poly_mul(a, d), fq.poly_mul(b, c)), na + nd)]


def _torsion_injective(f: SheafMap) -> bool:
    fq = get_field(f.q)
    src, tgt = f.source.summands(), f.target.summands()
    for x in f.source.support:
        d = x.degree
        sources = [(j, s.length) for j, s in enumerate(src) if s.point == x]
        targets = [(i, t.length) for i, t in enumerate(tgt) if t.point == x]
        if not targets:
            return False
        moduli = {m: _poly_pow(fq, x.uniformizer, m) for _, m in targets}
        rows = []
        for j, k in sources:
            for e in range(d * k):
                monomial = (0,) * e + (1,)
                vec: List[int] = []
                for i, m in targets:
                    image = _poly_mod(fq, fq.poly_mul(monomial, f.entry(i, j)), moduli[m])
                    vec.extend(_pad(image, d * m))
                rows.append(vec)
        if fq.rank(rows) < len(rows):
            return False
    return True


def is_injective(f: SheafMap) -> bool:
    """Generic full column rank on line bundles and injectivity on the torsion part."""
    minors = _generic_minors(f)
    if minors is not None and not any(poly for poly, _ in minors):
        return False
    return _torsion_injective(f)


def _local_invariants(fq: FiniteField, pi: Poly, rows: List[List[Poly]], n: int) -> Tuple[List[int], int]:
    """
    Smith form over O_x / pi^n.

    Returns:
        (pi-valuations of the pivots, number of rows left without a pivot)
    """
    modulus = _poly_pow(fq, pi, n)
    mat = [[_poly_mod(fq, e, modulus) for e in row] for row in rows]
    nrows = len(mat)
    ncols = len(mat[0]) if mat else 0
    pivots: List[int] = []
    r = 0
    while r < min(nrows, ncols):
        best = None
        for i in range(r, nrows):
            for j in range(r, ncols):
                if mat[i][j]:
                    val = fq.valuation(mat[i][j], pi)
                    if best is None or val < best[0]:
                        best = (val, i, j)
        if best is None:
            break
        val, i, j = best
        mat[r], mat[i] = mat[i], mat[r]
        for row in mat:
            row[r], row[j] = row[j], row[r]
        pi_v = _poly_pow(fq, pi, val)
        unit_inv = _poly_inverse_mod(fq, fq.poly_divmod(mat[r][r], pi_v)[0], modulus)
        for i in range(r + 1, nrows):
            if mat[i][r]:
                factor = _poly_mod(fq, fq.poly_mul(fq.poly_divmod(mat[i][r], pi_v)[0], unit_inv), modulus)
                mat[i] = [_poly_mod(fq, _poly_sub(fq, a, fq.poly_mul(factor, b)), modulus) for a, b in zip(mat[i], mat[r])]
        # column operations only touch row r once column r is cleared
        for j in range(r + 1, ncols):
            mat[r][j] = ()
        pivots.append(val)
        r += 1
    return pivots, nrows - len(pivots)


def _truncation(f: SheafMap) -> int:
    """A power of pi beyond every torsion length the cokernel can have at one point."""
    a, b = f.source, f.target
    deg_c = b.degree - a.degree
    rank_c = b.rank - a.rank
    bound = deg_c - rank_c * min(b.vb) if rank_c > 0 else deg_c
    longest = max([0] + [lam[0] for _, lam in b.torsion + a.torsion])
    return max(bound, longest, 0) + 1


def _local_cokernel(f: SheafMap, x: ClosedPoint, n: int) -> Partition:
    fq = get_field(f.q)
    pi = x.uniformizer
    src, tgt = f.source.summands(), f.target.summands()
    row_ids = [i for i, t in enumerate(tgt) if t.kind == VB or t.point == x]
    columns: List[List[Poly]] = []
    for r, i in enumerate(row_ids):
        if tgt[i].kind == TOR:
            col: List[Poly] = [()] * len(row_ids)
            col[r] = _poly_pow(fq, pi, tgt[i].length)
            columns.append(col)
    for j, s in enumerate(src):
        if s.kind == TOR and s.point != x:
            continue
        col = []
        for i in row_ids:
            t = tgt[i]
            if s.kind == VB and t.kind == VB:
                col.append(x.germ(f.entry(i, j), t.degree - s.degree))
            else:
                col.append(fq.poly_trim(f.entry(i, j)))
        columns.append(col)
    rows = [[col[r] for col in columns] for r in range(len(row_ids))]
    pivots, free = _local_invariants(fq, pi, rows, n)
    if free != f.target.rank - f.source.rank:
        raise NotInjectiveError(f"Local free rank {free} at {x} does not match the ranks of {f.source} -> {f.target}")
    return Partition(v for v in pivots if v > 0)


def _cokernel(f: SheafMap) -> Optional[CohSheafClass]:
    """Cokernel class of an injective map; None if it has torsion at a point of degree > 2."""
    fq = get_field(f.q)
    q = f.q
    a, b = f.source, f.target
    points = set(a.support) | set(b.support)
    minors = [(poly, n) for poly, n in (_generic_minors(f) or []) if poly]
    if minors:
        g: Poly = ()
        for poly, _ in minors:
            g = _poly_gcd(fq, g, poly)
        for degree in range(1, MAX_POINT_DEGREE + 1):
            for pi in _irreducibles(q, degree):
                if fq.valuation(g, pi):
                    points.add(ClosedPoint(q, pi))
                    while not fq.poly_divmod(g, pi)[1]:
                        g = fq.poly_divmod(g, pi)[0]
        if len(g) > 1:
            return None
        if min(n - (len(poly) - 1) for poly, n in minors) > 0:
            points.add(ClosedPoint.infinity(q))

    n = _truncation(f)
    torsion = {}
    for x in sorted(points):
        lam = _local_cokernel(f, x, n)
        if lam:
            torsion[x] = lam
    tor_deg = sum(x.degree * lam.weight for x, lam in torsion.items())
    if not a.vb:
        vb = b.vb
    elif b.rank == a.rank:
        vb = ()
    else:
        vb = (b.degree - a.degree - tor_deg,)
    return CohSheafClass(q, vb, torsion)


def cokernel_class(f: SheafMap) -> CohSheafClass:
    """
    Isomorphism class of the cokernel of an injective map.

    The torsion is read off local Smith forms at the torsion points of
    source and target and at the common zeros of the maximal minors; the
    line-bundle part then follows from rank and degree.

    Raises:
        NotInjectiveError: If f is not injective
        WindowClosureError: If the cokernel has torsion at a point of degree > 2
    """
    if not is_injective(f):
        raise NotInjectiveError(f"Map {f.source} -> {f.target} is not injective")
    result = _cokernel(f)
    if result is None:
        raise WindowClosureError(f"Cokernel of {f.source} -> {f.target} has torsion at a point of degree > {MAX_POINT_DEGREE}")
    return result


# Counting subsheaves


def _may_embed(a: CohSheafClass, b: CohSheafClass) -> bool:
    if a.rank > b.rank:
        return False
    for x, lam in a.torsion:
        mu = b.partition_at(x)
        if len(lam) > len(mu) or any(l > m for l, m in zip(lam, mu)):
            return False
    return True


@lru_cache(maxsize=None)
def _subsheaf_tally(b: CohSheafClass, a: CohSheafClass) -> Tuple[Tuple[CohSheafClass, int], ...]:
    if not _may_embed(a, b):
        return ()
    tally: Counter = Counter()
    for f in hom_space(a, b):
        if is_injective(f):
            quotient = _cokernel(f)
            if quotient is not None:
                tally[quotient] += 1
    aut = automorphism_count(a)
    out = []
    for quotient, n in tally.items():
        count, rem = divmod(n, aut)
        if rem:
            raise NonClearingDivisionError(f"{n} embeddings {a} -> {b} with cokernel {quotient} are not divisible by |Aut| = {aut}")
        out.append((quotient, count))
    logger.debug(f"Subsheaves {a} <= {b}: {len(out)} quotient classes")
    return tuple(sorted(out, key=lambda item: item[0].sort_key))


def subsheaf_counts(b: CohSheafClass, a: CohSheafClass) -> Dict[CohSheafClass, int]:
    """quotient class -> number of subsheaves G <= b with G isomorphic to a."""
    _check_same_field(a, b)
    return dict(_subsheaf_tally(b, a))


def _check_bounds(c: CohSheafClass):
    if any(abs(d) > MAX_ABS_DEGREE for d in c.vb):
        raise BoundsExceededError(f"Line degrees of {c} exceed +-{MAX_ABS_DEGREE}")
    if c.torsion_degree > MAX_TORSION_WEIGHT:
        raise BoundsExceededError(f"Torsion degree of {c} exceeds {MAX_TORSION_WEIGHT}")


def count_subsheaves(f: CohSheafClass, a: CohSheafClass, b: CohSheafClass, q: Optional[int] = None) -> int:
    """
    Hall number #{G <= f : G isomorphic to a, f/G isomorphic to b}.

    Args:
        f: Ambient class
        a: Subsheaf class
        b: Quotient class
        q: Field size, checked against the classes when given

    Returns:
        The number of subsheaves

    Raises:
        ArgumentError: If the classes do not add up or live over other fields
        BoundsExceededError: If a class or the Hom space is too large
        NonClearingDivisionError: If the embedding count is not divisible by |Aut(a)|
    """
    _check_same_field(f, a, b)
    if q is not None and q != f.q:
        raise ArgumentError(f"Classes live over F_{f.q}, not F_{q}")
    if (a.rank + b.rank, a.degree + b.degree) != f.cls:
        raise ArgumentError(f"class({a}) + class({b}) != class({f})")
    for c in (f, a, b):
        _check_bounds(c)
    return subsheaf_counts(f, a).get(b, 0)


def subsheaf_polynomial(
    build: Callable[[int], Tuple[CohSheafClass, CohSheafClass, CohSheafClass]], max_degree: int
) -> List[int]:
    """
    Interpolate a Hall number in q.

    Args:
        build: q -> (ambient, subsheaf, quotient) over F_q
        max_degree: Degree bound of the count in q

    Returns:
        Integer coefficients, constant term first

    Raises:
        InterpolationError: If the held-out field size disagrees with the fit
    """
    needed = max_degree + 2
    if needed > len(Q_POINTS):
        raise BoundsExceededError(f"Degree bound {max_degree} needs {needed} field sizes")
    fit, check = Q_POINTS[: needed - 1], Q_POINTS[needed - 1]
    counts = {q: count_subsheaves(*build(q)) for q in fit}
    held_out = {check: count_subsheaves(*build(check))}
    return interpolate_counts(counts, check=held_out, max_degree=max_degree)


# Functions on isomorphism classes


@dataclass(frozen=True)
class SupportBox:
    """
    Bounds containing every class a function can be nonzero on.

    lo and hi bound the line-bundle degrees (None for torsion functions),
    torsion bounds the torsion degree.
    """

    lo: Optional[int] = None
    hi: Optional[int] = None
    torsion: int = 0

    @staticmethod
    def _opt(values: Iterable[Optional[int]], pick) -> Optional[int]:
        present = [v for v in values if v is not None]
        return pick(present) if present else None

    def union(self, other: "SupportBox") -> "SupportBox":
        return SupportBox(
            self._opt((self.lo, other.lo), min),
            self._opt((self.hi, other.hi), max),
            max(self.torsion, other.torsion),
        )

    @classmethod
    def extension(cls, quotient: "SupportBox", sub: "SupportBox") -> "SupportBox":
        """Box of all extensions of a quotient by a subsheaf."""
        raised = None if sub.hi is None else sub.hi + quotient.torsion
        return cls(
            cls._opt((quotient.lo, sub.lo), min),
            cls._opt((quotient.hi, raised), max),
            quotient.torsion + sub.torsion,
        )

    def classes(self, q: int, cls: Class) -> List[CohSheafClass]:
        if cls[0] == 0:
            return sheaf_classes(q, cls, (0, -1), self.torsion)
        if self.lo is None:
            return []
        return sheaf_classes(q, cls, (self.lo, self.hi), self.torsion)


def specialize(c: LaurentScalar, q: int) -> Tuple[Fraction, Fraction]:
    """
    Value at v = q^(-1/2) as (a, b) meaning a + b v.

    For square q the value is rational and returned as (a, 0).
    """
    even, odd = c.at_q(q)
    root = math.isqrt(q)
    if root * root == q:
        return even + odd / root, Fraction(0)
    return even, odd


def monomial_exponent(c: LaurentScalar, q: int, search: int = 40) -> Optional[int]:
    """The n with c = v^n at v = q^(-1/2), if there is one."""
    target = specialize(c, q)
    for n in range(-search, search + 1):
        if specialize(v_power(n), q) == target:
            return n
    return None


class HallFn:
    """
    Function on isomorphism classes of one K-class (rank, degree) over F_q.

    Values are Laurent polynomials read at v = q^(-1/2); two functions are
    equal when their values agree there. Every class inside `box` carries its
    exact value, and the function vanishes outside.
    """

    __slots__ = ("q", "cls", "box", "values")

    def __init__(
        self,
        q: int,
        cls: Class,
        values: Optional[Mapping[CohSheafClass, LaurentScalar]] = None,
        box: Optional[SupportBox] = None,
    ):
        self.q = q
        self.cls = (int(cls[0]), int(cls[1]))
        self.box = box or SupportBox()
        cleaned = {}
        for c, value in (values or {}).items():
            value = LaurentScalar.coerce(value)
            if c.q != q or c.cls != self.cls:
                raise ArgumentError(f"Class {c} does not have K-class {self.cls} over F_{q}")
            if value:
                cleaned[c] = value
        self.values = cleaned

    @classmethod
    def unit(cls, q: int) -> "HallFn":
        return cls(q, (0, 0), {CohSheafClass(q): ONE})

    def value(self, c: CohSheafClass) -> LaurentScalar:
        return self.values.get(c, ZERO)

    def items(self) -> Iterator[Tuple[CohSheafClass, LaurentScalar]]:
        for c in sorted(self.values, key=lambda c: c.sort_key):
            yield c, self.values[c]

    @property
    def is_zero(self) -> bool:
        return all(specialize(v, self.q) == (0, 0) for v in self.values.values())

    def _check_compatible(self, other: "HallFn"):
        if self.q != other.q or self.cls != other.cls:
            raise ArgumentError(f"Cannot combine functions of class {self.cls} over F_{self.q} and {other.cls} over F_{other.q}")

    def __add__(self, other: "HallFn") -> "HallFn":
        if not isinstance(other, HallFn):
            return NotImplemented
        self._check_compatible(other)
        out = dict(self.values)
        for c, value in other.values.items():
            out[c] = out.get(c, ZERO) + value
        return HallFn(self.q, self.cls, out, self.box.union(other.box))

    def __neg__(self) -> "HallFn":
        return HallFn(self.q, self.cls, {c: -v for c, v in self.values.items()}, self.box)

    def __sub__(self, other: "HallFn") -> "HallFn":
        if not isinstance(other, HallFn):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other) -> "HallFn":
        if isinstance(other, HallFn):
            return hall_mul(self, other)
        if isinstance(other, (int, LaurentScalar)):
            return HallFn(self.q, self.cls, {c: v * other for c, v in self.values.items()}, self.box)
        return NotImplemented

    def __rmul__(self, other) -> "HallFn":
        if isinstance(other, (int, LaurentScalar)):
            return self * other
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, HallFn):
            return NotImplemented
        if self.q != other.q or self.cls != other.cls:
            return False
        return (self - other).is_zero

    def to_json(self) -> Dict:
        return {
            "q": self.q,
            "class": {"rank": self.cls[0], "degree": self.cls[1]},
            "values": [{"class": c.key, "coeff": v.to_json()} for c, v in self.items()],
        }

    def __repr__(self) -> str:
        body = ", ".join(f"{c}: {v}" for c, v in self.items())
        return f"HallFn(q={self.q}, cls={self.cls}, {{{body}}})"


def hall_mul(f: HallFn, g: HallFn) -> HallFn:
    """
    Hall product, f read on the quotient and g on the subsheaf.

    Raises:
        ArgumentError: If f and g live over different fields
        BoundsExceededError: If the product has rank > 2
        WindowClosureError: If the product reaches torsion the point model cannot hold
    """
    if f.q != g.q:
        raise ArgumentError(f"Cannot multiply functions over F_{f.q} and F_{g.q}")
    q = f.q
    cls = (f.cls[0] + g.cls[0], f.cls[1] + g.cls[1])
    if cls[0] > MAX_RANK:
        raise BoundsExceededError(f"Product of rank {cls[0]} exceeds {MAX_RANK}")
    box = SupportBox.extension(f.box, g.box)
    if box.torsion > MAX_EXACT_TORSION:
        raise WindowClosureError(f"Product needs torsion up to degree {box.torsion}, limit {MAX_EXACT_TORSION}")
    out: Dict[CohSheafClass, LaurentScalar] = {}
    for ambient in box.classes(q, cls):
        total = ZERO
        for sub, g_value in g.values.items():
            for quotient, count in subsheaf_counts(ambient, sub).items():
                f_value = f.values.get(quotient)
                if f_value:
                    total = total + f_value * g_value * count * v_power(-euler_pairing(quotient, sub))
        if total:
            out[ambient] = total
    return HallFn(q, cls, out, box)


# Images of the loop algebra generators


def fn_E(q: int, t: int) -> HallFn:
    """v^-1 times the indicator of O(t)."""
    return HallFn(q, (1, t), {line_bundle(q, t): v_power(-1)}, SupportBox(t, t, 0))


def fn_xi(q: int, l: int) -> HallFn:
    """The constant function 1 on torsion sheaves of degree l."""
    if l < 0:
        raise ArgumentError(f"xi index must be nonnegative, got {l}")
    if l == 0:
        return HallFn.unit(q)
    return HallFn(q, (0, l), {c: ONE for c in torsion_classes(q, l)}, SupportBox(None, None, l))


def fn_b_line(q: int, t: int, tor_max: int) -> HallFn:
    """
    Image of the line element sum_w v^w E_{t-w} xi_w, truncated at w <= tor_max.

    Exact on rank-one classes of degree t with torsion degree <= tor_max.
    """
    total = HallFn(q, (1, t), box=SupportBox(t, t, 0))
    for w in range(tor_max + 1):
        total = total + hall_mul(fn_E(q, t - w), fn_xi(q, w)) * v_power(w)
    return total


def fn_generators(which: str, value: int, q: int, tor_max: int = MAX_EXACT_TORSION) -> HallFn:
    """
    Dispatch on the generator name.

    Args:
        which: "E", "xi", "b_torsion" or "b_line"
        value: The index t or l
        q: Field size
        tor_max: Truncation for "b_line"

    Raises:
        ArgumentError: For an unknown name
    """
    if which == "E":
        return fn_E(q, value)
    if which in ("xi", "b_torsion"):
        # the constant-sheaf element of a torsion class is its xi
        return fn_xi(q, value)
    if which == "b_line":
        return fn_b_line(q, value, tor_max)
    raise ArgumentError(f"Unknown generator {which!r}; expected E, xi, b_torsion or b_line")


def fn_word(q: int, letters: Sequence[Tuple[int, int]]) -> HallFn:
    """Ordered Hall product of the images of a plain word."""
    result = HallFn.unit(q)
    for kind, index in reversed(letters):
        factor = fn_E(q, index) if kind == E_LETTER else fn_xi(q, index)
        result = hall_mul(factor, result)
    return result


def fn_monomial(q: int, mon: NormalMonomial) -> HallFn:
    """Image of the undivided monomial E_{t_1} ... E_{t_k} xi_lambda."""
    return fn_word(q, mon.letters())


def fn(x: AlgElem, q: int) -> HallFn:
    """
    Image of a loop algebra element.

    Divided runs are expanded as E^n / [n]!, which needs each coefficient
    to be divisible by the run factorial.

    Raises:
        ArgumentError: For the zero element, which has no class
        NonClearingDivisionError: If a coefficient is not divisible
    """
    if x.is_zero:
        raise ArgumentError("The zero element has no class")
    result = HallFn(q, x.cls)
    for mon, c in x.items():
        if not isinstance(c, LaurentScalar):
            c = c.to_laurent()
        result = result + fn_monomial(q, mon) * c.exact_div(mon.run_factorial())
    return result


# Identity checks


@dataclass(frozen=True)
class HallWindow:
    """Line degrees in [deg_min, deg_max] and torsion degree <= tor_max."""

    deg_min: int = -2
    deg_max: int = 3
    tor_max: int = 2

    def __post_init__(self):
        if self.deg_min > self.deg_max:
            raise ArgumentError(f"Empty degree range {self.deg_min}..{self.deg_max}")
        if not 0 <= self.tor_max <= MAX_EXACT_TORSION:
            raise WindowClosureError(f"Torsion bound must lie in 0..{MAX_EXACT_TORSION}, got {self.tor_max}")

    @classmethod
    def parse(cls, text: str) -> "HallWindow":
        """Parse "deg=-2..3,tor<=2"."""
        match = re.fullmatch(r"\s*deg=(-?\d+)\.\.(-?\d+)\s*,\s*tor<=(\d+)\s*", text)
        if not match:
            raise ArgumentError(f"Window must look like 'deg=-2..3,tor<=2', got {text!r}")
        return cls(int(match.group(1)), int(match.group(2)), int(match.group(3)))

    def contains(self, c: CohSheafClass) -> bool:
        return all(self.deg_min <= a <= self.deg_max for a in c.vb) and c.torsion_degree <= self.tor_max

    def check_word(self, letters: Sequence[Tuple[int, int]]):
        """
        Raises:
            WindowClosureError: If a letter lies outside the window
        """
        for kind, index in letters:
            inside = self.deg_min <= index <= self.deg_max if kind == E_LETTER else index <= self.tor_max
            if not inside:
                raise WindowClosureError(f"Letter {kind, index} lies outside {self}")


@dataclass
class HallCheck:
    """Outcome of one identity check at one field size."""

    name: str
    q: int
    passed: bool
    classes: int
    counterexample: Optional[Dict] = None
    detail: Dict = field(default_factory=dict)

    def to_json(self) -> Dict:
        return {
            "name": self.name,
            "q": self.q,
            "passed": self.passed,
            "classes": self.classes,
            "counterexample": self.counterexample,
            "detail": self.detail,
        }


def _compare(name: str, q: int, lhs: HallFn, rhs: HallFn, window: HallWindow) -> HallCheck:
    classes = [c for c in set(lhs.values) | set(rhs.values) if window.contains(c)]
    for c in sorted(classes, key=lambda c: c.sort_key):
        if specialize(lhs.value(c), q) != specialize(rhs.value(c), q):
            counterexample = {"class": c.key, "lhs": str(lhs.value(c)), "rhs": str(rhs.value(c))}
            logger.warning(f"{name} fails at q = {q} on {c}: {counterexample}")
            return HallCheck(name, q, False, len(classes), counterexample)
    return HallCheck(name, q, True, len(classes))


def quadratic_check(q: int, t1: int, t2: int, window: HallWindow) -> HallCheck:
    """v^2 E_{t1+1} E_{t2} - E_{t2} E_{t1+1} against E_{t1} E_{t2+1} - v^2 E_{t2+1} E_{t1}."""
    terms = quadratic_relation_words(t1, t2)
    for _, word in terms:
        window.check_word(word)
    sides = [fn_word(q, word) * c for c, word in terms]
    return _compare(f"quadratic({t1},{t2})", q, sides[0] + sides[1], -(sides[2] + sides[3]), window)


def line_constancy_check(q: int, t: int, window: HallWindow) -> HallCheck:
    """The line element takes a single monomial value on every rank-one class of degree t."""
    window.check_word([(E_LETTER, t)])
    image = fn_b_line(q, t, window.tor_max)
    classes = [c for c in SupportBox(t - window.tor_max, t, window.tor_max).classes(q, (1, t)) if window.contains(c)]
    name = f"line({t})"
    if not classes:
        return HallCheck(name, q, True, 0)
    reference = specialize(image.value(classes[0]), q)
    for c in classes[1:]:
        if specialize(image.value(c), q) != reference:
            counterexample = {"class": c.key, "value": str(image.value(c)), "reference": str(image.value(classes[0]))}
            return HallCheck(name, q, False, len(classes), counterexample)
    exponent = monomial_exponent(image.value(classes[0]), q)
    if exponent is None:
        counterexample = {"class": classes[0].key, "value": str(image.value(classes[0])), "reason": "not a power of v"}
        return HallCheck(name, q, False, len(classes), counterexample)
    return HallCheck(name, q, True, len(classes), detail={"exponent": exponent})


def cross_validate(q: int, x: AlgElem, y: AlgElem, window: HallWindow) -> HallCheck:
    """fn(x * y) computed through normal forms against the Hall product fn(x) * fn(y)."""
    for elem in (x, y):
        for mon, _ in elem.items():
            window.check_word(mon.letters())
    return _compare(f"cross({x})({y})", q, fn(mul(x, y), q), hall_mul(fn(x, q), fn(y, q)), window)


def default_cross_pairs(window: HallWindow) -> List[Tuple[AlgElem, AlgElem]]:
    """Generator pairs and one length-two word, placed inside the window."""
    t = max(min(max(0, window.deg_min), window.deg_max - 1), window.deg_min)
    e0, e1 = AlgElem.E(t), AlgElem.E(min(t + 1, window.deg_max))
    pairs = [(e1, e0), (e0, e1), (e0, e0)]
    if window.tor_max >= 1:
        xi1 = AlgElem.xi((1,))
        pairs += [(xi1, e0), (e0, xi1), (xi1, xi1), (xi1, e0 * e1)]
    if window.tor_max >= 2:
        pairs.append((AlgElem.xi((2,)), e0))
    return pairs


CHECK_NAMES = ("quadratic", "line", "cross")


def identity_checks(which: Sequence[str], window: HallWindow, qs: Sequence[int]) -> List[HallCheck]:
    """
    Run the named identity families over every field size.

    quadratic runs every (t1, t2) whose letters stay in the window, line
    every t in the window, cross the default generator pairs.

    Raises:
        ArgumentError: For an unknown check name
    """
    unknown = set(which) - set(CHECK_NAMES)
    if unknown:
        raise ArgumentError(f"Unknown checks {sorted(unknown)}; expected {', '.join(CHECK_NAMES)}")
    indices = range(window.deg_min, window.deg_max)
    reports: List[HallCheck] = []
    for q in qs:
        logger.info(f"P1 identity checks {list(which)} at q = {q} on {window}")
        if "quadratic" in which:
            reports += [quadratic_check(q, t1, t2, window) for t1 in indices for t2 in indices]
        if "line" in which:
            reports += [line_constancy_check(q, t, window) for t in range(window.deg_min, window.deg_max + 1)]
        if "cross" in which:
            reports += [cross_validate(q, x, y, window) for x, y in default_cross_pairs(window)]
    return reports
