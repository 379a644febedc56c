"""
Hall algebra of nilpotent representations of the cyclic quiver.

The quiver has vertices Z/pZ and arrows x_i: V_i -> V_{i-1}. Isoclasses of
nilpotent representations are multisegments: the segment (i, l) has its top
at vertex i and basis vectors b_0..b_{l-1} with b_s at vertex i - s and
x(b_s) = b_{s+1}.

Structure constants are counted over small finite fields by enumerating
stable graded subspaces of a fixed representative, interpolated to
polynomials in q, checked at one held-out field size and cached. With the
product normalized as

    (f * g)(x) = v^{-{d', d''}} sum_{U stable, dim U = d'} f(x|U) g(x|V/U),

and q = v^{-2}, the simple indicators E_i satisfy the quantum Serre
relations, which is how the sub/quotient convention is pinned.
"""

import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from sympy.utilities.iterables import multiset_permutations

from src.algebra.coeff import LaurentScalar, RationalScalar, Scalar, quantum_binomial, v_power
from src.algebra.linalg import in_span, interpolate_counts
from src.algebra.symm import partitions_of
from src.errors import ArgumentError, BoundsExceededError, NotNilpotentError
from src.hall.finite_field import FiniteField, Matrix, get_field
from src.utils.cache import get_structure_cache

logger = logging.getLogger(__name__)

# Field sizes used for interpolation, in order of preference
Q_POINTS = (2, 3, 4, 5, 7, 8, 9)

MAX_VERTEX_DIM = 4


@dataclass(frozen=True)
class CDim:
    """Dimension vector on Z/pZ."""

    dims: Tuple[int, ...]

    def __post_init__(self):
        if not self.dims:
            raise ArgumentError("A dimension vector needs at least one vertex")
        if any(d < 0 for d in self.dims):
            raise ArgumentError(f"Dimension vector entries must be nonnegative: {self.dims}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @classmethod
    def zero(cls, p: int) -> "CDim":
        return cls((0,) * p)

    @classmethod
    def unit(cls, p: int, i: int, l: int = 1) -> "CDim":
        """l times the unit vector at vertex i."""
        dims = [0] * p
        dims[i % p] = l
        return cls(tuple(dims))

    @classmethod
    def constant(cls, p: int, l: int) -> "CDim":
        """(l, ..., l)."""
        return cls((l,) * p)

    @property
    def p(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return sum(self.dims)

    @property
    def is_zero(self) -> bool:
        return not any(self.dims)

    def __getitem__(self, i: int) -> int:
        return self.dims[i % self.p]

    def __iter__(self) -> Iterator[int]:
        return iter(self.dims)

    def _check_same_p(self, other: "CDim"):
        if self.p != other.p:
            raise ArgumentError(f"Dimension vectors on different quivers: {self.dims} vs {other.dims}")

    def __add__(self, other: "CDim") -> "CDim":
        self._check_same_p(other)
        return CDim(tuple(a + b for a, b in zip(self.dims, other.dims)))

    def __sub__(self, other: "CDim") -> "CDim":
        self._check_same_p(other)
        return CDim(tuple(a - b for a, b in zip(self.dims, other.dims)))

    def pairing(self, other: "CDim") -> int:
        """{self, other} = sum_i a_i b_i - sum_i a_i b_{i+1}."""
        self._check_same_p(other)
        return sum(self[i] * other[i] - self[i] * other[i + 1] for i in range(self.p))

    def rotate(self) -> "CDim":
        """Relabel vertex i as i + 1."""
        return CDim(tuple(self[i - 1] for i in range(self.p)))

    def check_bounds(self):
        if any(d > MAX_VERTEX_DIM for d in self.dims):
            raise BoundsExceededError(f"Dimension vector {self.dims} exceeds {MAX_VERTEX_DIM} at some vertex")

    def to_json(self) -> List[int]:
        return list(self.dims)


class Multisegment:
    """
    Isoclass of a nilpotent representation: multiplicities m_{i,l} of segments.

    Hashable and immutable; the string key is used in cache keys.
    """

    __slots__ = ("p", "segments", "_hash")

    def __init__(self, p: int, mult: Optional[Mapping[Tuple[int, int], int]] = None):
        if p < 1:
            raise ArgumentError(f"The cyclic quiver needs p >= 1, got {p}")
        cleaned: Dict[Tuple[int, int], int] = {}
        for (i, l), m in (mult or {}).items():
            if l < 1 or m < 0:
                raise ArgumentError(f"Invalid segment multiplicity m[{i},{l}] = {m}")
            if m:
                key = (i % p, int(l))
                cleaned[key] = cleaned.get(key, 0) + int(m)
        self.p = p
        self.segments: Tuple[Tuple[int, int, int], ...] = tuple(
            sorted((i, l, m) for (i, l), m in cleaned.items())
        )
        self._hash = hash((p, self.segments))

    @classmethod
    def zero(cls, p: int) -> "Multisegment":
        return cls(p)

    @classmethod
    def segment(cls, p: int, i: int, l: int, m: int = 1) -> "Multisegment":
        """m copies of the segment (i, l)."""
        return cls(p, {(i, l): m})

    @classmethod
    def from_kernel_dims(cls, p: int, d: Sequence[Sequence[int]], max_length: int) -> "Multisegment":
        """
        Recover multiplicities from kernel dimensions.

        Args:
            p: Number of vertices
            d: d[i][k] = dim Ker(x_{i-k+1} ... x_i) on V_i, for k = 0..max_length + 1
            max_length: Longest segment length to consider

        Raises:
            ArgumentError: If the kernel data is inconsistent
        """
        mult = {}
        for i in range(p):
            nxt = (i + 1) % p
            for l in range(1, max_length + 1):
                m = d[i][l] - d[i][l - 1] + d[nxt][l] - d[nxt][l + 1]
                if m < 0:
                    raise ArgumentError(f"Kernel dimensions give m[{i},{l}] = {m}")
                if m:
                    mult[(i, l)] = m
        return cls(p, mult)

    @classmethod
    def from_json(cls, p: int, data: Iterable[Sequence[int]]) -> "Multisegment":
        try:
            return cls(p, {(int(i), int(l)): int(m) for i, l, m in data})
        except (TypeError, ValueError) as e:
            raise ArgumentError(f"Malformed multisegment JSON: {data!r}") from e

    def mult(self, i: int, l: int) -> int:
        for j, length, m in self.segments:
            if j == i % self.p and length == l:
                return m
        return 0

    @property
    def key(self) -> str:
        if not self.segments:
            return "0"
        return "+".join(f"{i}.{l}x{m}" for i, l, m in self.segments)

    @property
    def max_length(self) -> int:
        return max((l for _, l, _ in self.segments), default=0)

    def dim(self) -> CDim:
        dims = [0] * self.p
        for i, l, m in self.segments:
            for s in range(l):
                dims[(i - s) % self.p] += m
        return CDim(tuple(dims))

    def kernel_dim(self, i: int, k: int) -> int:
        """Basis vectors at vertex i killed by k consecutive arrows."""
        total = 0
        for j, l, m in self.segments:
            for s in range(max(l - k, 0), l):
                if (j - s) % self.p == i % self.p:
                    total += m
        return total

    def direct_sum(self, other: "Multisegment") -> "Multisegment":
        if self.p != other.p:
            raise ArgumentError("Direct sum of multisegments on different quivers")
        mult: Dict[Tuple[int, int], int] = {}
        for i, l, m in self.segments + other.segments:
            mult[(i, l)] = mult.get((i, l), 0) + m
        return Multisegment(self.p, mult)

    def rotate(self) -> "Multisegment":
        """s(m)_{i+1,l} = m_{i,l}."""
        return Multisegment(self.p, {(i + 1, l): m for i, l, m in self.segments})

    def is_aperiodic(self) -> bool:
        """For every length t some vertex carries no segment of length t."""
        for t in range(1, self.max_length + 1):
            if all(self.mult(i, t) for i in range(self.p)):
                return False
        return True

    def to_json(self) -> List[List[int]]:
        return [[i, l, m] for i, l, m in self.segments]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Multisegment):
            return NotImplemented
        return self.p == other.p and self.segments == other.segments

    def __lt__(self, other: "Multisegment") -> bool:
        return (self.p, self.segments) < (other.p, other.segments)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Multisegment(p={self.p}, {self.key})"


def aperiodic_test(m: Multisegment) -> bool:
    return m.is_aperiodic()


def rotate(m: Multisegment) -> Multisegment:
    return m.rotate()


@lru_cache(maxsize=None)
def _orbits(p: int, dims: Tuple[int, ...]) -> Tuple[Multisegment, ...]:
    total = sum(dims)
    segs = [(i, l) for l in range(1, total + 1) for i in range(p)]
    seg_dims = [Multisegment.segment(p, i, l).dim().dims for i, l in segs]
    found: List[Multisegment] = []

    def extend(idx: int, remaining: Tuple[int, ...], chosen: Dict[Tuple[int, int], int]):
        if not any(remaining):
            found.append(Multisegment(p, chosen))
            return
        if idx == len(segs):
            return
        vec = seg_dims[idx]
        count = 0
        rest = remaining
        while True:
            extend(idx + 1, rest, {**chosen, segs[idx]: count} if count else chosen)
            rest = tuple(r - v for r, v in zip(rest, vec))
            if any(r < 0 for r in rest):
                break
            count += 1

    extend(0, dims, {})
    return tuple(sorted(found))


def orbits(p: int, dim) -> Tuple[Multisegment, ...]:
    """
    All isoclasses of nilpotent representations of a dimension vector.

    Args:
        p: Number of vertices
        dim: CDim or sequence of p nonnegative integers
    """
    dims = tuple(dim.dims if isinstance(dim, CDim) else dim)
    if len(dims) != p:
        raise ArgumentError(f"Dimension vector {dims} does not have {p} entries")
    return _orbits(p, dims)


# Representations over F_q


@dataclass
class NilRep:
    """
    A representation over F_q: maps[i] is the matrix of x_i: V_i -> V_{i-1}.

    Matrices act on column vectors, so maps[i] has dims[i-1] rows and
    dims[i] columns.
    """

    p: int
    q: int
    dims: Tuple[int, ...]
    maps: List[Matrix]

    def __post_init__(self):
        if len(self.dims) != self.p or len(self.maps) != self.p:
            raise ArgumentError(f"Representation needs {self.p} spaces and maps")
        for i, x in enumerate(self.maps):
            rows = self.dims[(i - 1) % self.p]
            if len(x) != rows or any(len(row) != self.dims[i] for row in x):
                raise ArgumentError(f"Map x_{i} must be {rows} x {self.dims[i]}")


def representative(m: Multisegment, q: int) -> NilRep:
    """The basis-vector representation of m over F_q."""
    p = m.p
    dims = m.dim().dims
    maps = [[[0] * dims[i] for _ in range(dims[(i - 1) % p])] for i in range(p)]
    counter = [0] * p
    for i, l, mult in m.segments:
        for _ in range(mult):
            slots = []
            for s in range(l):
                vertex = (i - s) % p
                slots.append((vertex, counter[vertex]))
                counter[vertex] += 1
            for (src, col), (_, row) in zip(slots, slots[1:]):
                maps[src][row][col] = 1
    return NilRep(p, q, dims, maps)


def _composites(field: FiniteField, rep: NilRep, depth: int) -> List[List[Matrix]]:
    """comps[i][k] is the matrix of x_{i-k+1} ... x_i: V_i -> V_{i-k}."""
    p, dims = rep.p, rep.dims
    comps = []
    for i in range(p):
        chain = [[[1 if r == c else 0 for c in range(dims[i])] for r in range(dims[i])]]
        for k in range(1, depth + 1):
            chain.append(field.matmul(rep.maps[(i - k + 1) % p], chain[-1], dims[i]))
        comps.append(chain)
    return comps


def orbit_of(rep: NilRep) -> Multisegment:
    """
    Isoclass of a representation, from the ranks of its arrow composites.

    Raises:
        NotNilpotentError: If some long composite does not vanish
    """
    field = get_field(rep.q)
    total = sum(rep.dims)
    comps = _composites(field, rep, total + 1)
    d = [[rep.dims[i] - field.rank(comps[i][k]) for k in range(total + 2)] for i in range(rep.p)]
    if any(d[i][total] != rep.dims[i] for i in range(rep.p)):
        raise NotNilpotentError(f"Representation with dims {rep.dims} is not nilpotent")
    return Multisegment.from_kernel_dims(rep.p, d, total)


def _pivots(basis: Matrix) -> List[int]:
    return [next(c for c, x in enumerate(row) if x) for row in basis]


def _stable_subspaces(
    field: FiniteField, rep: NilRep, sub_dims: Sequence[int]
) -> Iterator[List[Tuple[Matrix, List[int]]]]:
    """Graded subspaces U with x_i(U_i) inside U_{i-1}, as (RREF basis, pivots) per vertex."""
    p = rep.p
    choices = [
        [(basis, _pivots(basis)) for basis in field.subspaces(rep.dims[i], sub_dims[i])] for i in range(p)
    ]
    for subspace in itertools.product(*choices):
        stable = True
        for i in range(p):
            target, pivots = subspace[(i - 1) % p]
            for u in subspace[i][0]:
                if not field.in_span(target, pivots, field.mat_vec(rep.maps[i], u)):
                    stable = False
                    break
            if not stable:
                break
        if stable:
            yield list(subspace)


def _sub_and_quotient(
    field: FiniteField, rep: NilRep, comps: List[List[Matrix]], subspace: List[Tuple[Matrix, List[int]]]
) -> Tuple[Multisegment, Multisegment]:
    p, dims = rep.p, rep.dims
    sub_total = sum(len(basis) for basis, _ in subspace)
    quot_total = sum(dims) - sub_total
    sub_d = []
    quot_d = []
    for i in range(p):
        basis = subspace[i][0]
        sub_row = []
        for k in range(sub_total + 2):
            images = [field.mat_vec(comps[i][k], u) for u in basis]
            sub_row.append(len(basis) - field.rank(images))
        quot_row = []
        for k in range(quot_total + 2):
            composite = comps[i][k]
            target = subspace[(i - k) % p][0]
            columns = [[row[j] for row in composite] for j in range(dims[i])]
            image_rank = field.rank(columns + target) - len(target)
            quot_row.append(dims[i] - image_rank - len(basis))
        sub_d.append(sub_row)
        quot_d.append(quot_row)
    return (
        Multisegment.from_kernel_dims(p, sub_d, sub_total),
        Multisegment.from_kernel_dims(p, quot_d, quot_total),
    )


# Interpolated counts


def _fit_tallies(
    prefix: str,
    bound: int,
    tally_at: Callable[[int], Counter],
    candidates: Mapping[str, object],
    points: Optional[Sequence[int]] = None,
    check: Optional[Sequence[int]] = None,
) -> Dict[object, List[int]]:
    """
    Interpolate labelled counts to polynomials in q.

    Args:
        prefix: Cache key prefix identifying the enumeration
        bound: Degree bound in q of every count
        tally_at: q -> Counter of labels
        candidates: label -> object for every label the enumeration can produce
        points: Explicit fit points (disables the cache)
        check: Held-out points used with explicit fit points

    Returns:
        object -> coefficient list, for the nonzero counts only
    """
    cache = get_structure_cache()
    use_cache = points is None
    if use_cache and cache.get(f"{prefix}:done") is not None:
        out = {}
        for label, obj in candidates.items():
            poly = cache.get(f"{prefix}:{label}")
            if poly is not None:
                out[obj] = poly
        return out

    if points is None:
        needed = bound + 2
        if needed > len(Q_POINTS):
            raise BoundsExceededError(f"Degree bound {bound} needs {needed} field sizes, have {len(Q_POINTS)}")
        fit_points = list(Q_POINTS[: needed - 1])
        check_points = [Q_POINTS[needed - 1]]
    else:
        fit_points = list(points)
        check_points = list(check or [])

    logger.info(f"Enumerating {prefix} over q in {fit_points + check_points}")
    tallies = {q: tally_at(q) for q in fit_points + check_points}
    labels = set()
    for tally in tallies.values():
        labels.update(tally)
    unknown = labels - set(candidates)
    if unknown:
        raise ArgumentError(f"Enumeration produced unexpected labels {sorted(unknown)}")

    out = {}
    for label in sorted(labels):
        poly = interpolate_counts(
            {q: tallies[q].get(label, 0) for q in fit_points},
            check={q: tallies[q].get(label, 0) for q in check_points},
            max_degree=bound,
        )
        if any(poly):
            out[candidates[label]] = poly
            if use_cache:
                cache.put(f"{prefix}:{label}", poly)
    if use_cache:
        cache.put(f"{prefix}:done", [1])
    return out


def _pair_label(a: Multisegment, b: Multisegment) -> str:
    return f"a={a.key}:b={b.key}"


def structure_degree_bound(total_dim: CDim, sub_dim: CDim) -> int:
    """Degree bound in q for counts of stable subspaces: the dimension of the product of Grassmannians."""
    return sum(d * (n - d) for d, n in zip(sub_dim, total_dim))


def structure_polys(
    p: int,
    c: Multisegment,
    sub_dim: CDim,
    points: Optional[Sequence[int]] = None,
    check: Optional[Sequence[int]] = None,
) -> Dict[Tuple[Multisegment, Multisegment], List[int]]:
    """
    All Hall polynomials g^c_{a,b} with dim a = sub_dim, keyed by (a, b).

    Raises:
        BoundsExceededError: If the dimension of c is too large
    """
    total_dim = c.dim()
    total_dim.check_bounds()
    quot_dim = total_dim - sub_dim
    candidates = {
        _pair_label(a, b): (a, b) for a in orbits(p, sub_dim) for b in orbits(p, quot_dim)
    }
    bound = structure_degree_bound(total_dim, sub_dim)

    def tally_at(q: int) -> Counter:
        field = get_field(q)
        rep = representative(c, q)
        comps = _composites(field, rep, total_dim.total + 1)
        tally: Counter = Counter()
        for subspace in _stable_subspaces(field, rep, sub_dim.dims):
            a, b = _sub_and_quotient(field, rep, comps, subspace)
            tally[_pair_label(a, b)] += 1
        return tally

    prefix = f"cyclic:p={p}:c={c.key}:d={','.join(map(str, sub_dim))}"
    return _fit_tallies(prefix, bound, tally_at, candidates, points, check)


def hall_structure(
    p: int,
    a: Multisegment,
    b: Multisegment,
    c: Multisegment,
    points: Optional[Sequence[int]] = None,
    check: Optional[Sequence[int]] = None,
) -> List[int]:
    """
    Number of stable subspaces U of c with U isomorphic to a and c/U to b.

    Args:
        p: Number of vertices
        a: Isoclass of the subrepresentation
        b: Isoclass of the quotient
        c: Isoclass of the ambient representation
        points: Explicit field sizes to fit on (default: enough of Q_POINTS)
        check: Held-out field sizes for explicit points

    Returns:
        Integer coefficients in q, constant term first

    Raises:
        ArgumentError: If dim a + dim b != dim c
        BoundsExceededError: If the dimensions are too large
        InterpolationError: If the counts are not polynomial within the bound
    """
    if a.dim() + b.dim() != c.dim():
        raise ArgumentError(f"dim {a.key} + dim {b.key} != dim {c.key}")
    polys = structure_polys(p, c, a.dim(), points, check)
    return polys.get((a, b), [0])


# Functions on orbits


class HallElem:
    """Homogeneous function on isoclasses of a fixed dimension vector."""

    __slots__ = ("p", "deg", "terms")

    def __init__(self, p: int, deg: CDim, terms: Optional[Mapping[Multisegment, Scalar]] = None):
        if deg.p != p:
            raise ArgumentError(f"Degree {deg.dims} does not live on {p} vertices")
        cleaned: Dict[Multisegment, Scalar] = {}
        for m, c in (terms or {}).items():
            if isinstance(c, int):
                c = LaurentScalar.from_int(c)
            if m.p != p or m.dim() != deg:
                raise ArgumentError(f"Orbit {m.key} does not have dimension {deg.dims}")
            if c:
                cleaned[m] = c
        self.p = p
        self.deg = deg
        self.terms = cleaned

    @classmethod
    def zero(cls, p: int, deg: CDim) -> "HallElem":
        return cls(p, deg)

    @classmethod
    def one(cls, p: int) -> "HallElem":
        return cls(p, CDim.zero(p), {Multisegment.zero(p): 1})

    @classmethod
    def indicator(cls, m: Multisegment, coeff: Scalar = None) -> "HallElem":
        return cls(m.p, m.dim(), {m: LaurentScalar.one() if coeff is None else coeff})

    @classmethod
    def from_json(cls, data: Mapping) -> "HallElem":
        try:
            p = int(data["p"])
            deg = CDim(tuple(int(d) for d in data["dim"]))
            terms = {
                Multisegment.from_json(p, t["multisegment"]): LaurentScalar.from_json(t["coeff"])
                for t in data["terms"]
            }
        except (KeyError, TypeError, ValueError) as e:
            raise ArgumentError(f"Malformed HallElem JSON: {data!r}") from e
        return cls(p, deg, terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, m: Multisegment) -> Scalar:
        return self.terms.get(m, LaurentScalar.zero())

    def items(self) -> Iterator[Tuple[Multisegment, Scalar]]:
        for m in sorted(self.terms):
            yield m, self.terms[m]

    def vector(self) -> List[Scalar]:
        """Coefficients over orbits(p, deg) in order."""
        return [self.coeff(m) for m in orbits(self.p, self.deg)]

    def _check_compatible(self, other: "HallElem"):
        if self.p != other.p or self.deg != other.deg:
            raise ArgumentError(f"Cannot add elements of degrees {self.deg.dims} and {other.deg.dims}")

    def __add__(self, other: "HallElem") -> "HallElem":
        if not isinstance(other, HallElem):
            return NotImplemented
        self._check_compatible(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return HallElem(self.p, self.deg, out)

    def __neg__(self) -> "HallElem":
        return HallElem(self.p, self.deg, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "HallElem") -> "HallElem":
        if not isinstance(other, HallElem):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other) -> "HallElem":
        if isinstance(other, HallElem):
            return product(self, other)
        if isinstance(other, (int, LaurentScalar, RationalScalar)):
            return HallElem(self.p, self.deg, {m: c * other for m, c in self.terms.items()})
        return NotImplemented

    def __rmul__(self, other) -> "HallElem":
        if isinstance(other, (int, LaurentScalar, RationalScalar)):
            return self * other
        return NotImplemented

    def __pow__(self, n: int) -> "HallElem":
        if n < 0:
            raise ArgumentError("Negative powers are not defined")
        result = HallElem.one(self.p)
        for _ in range(n):
            result = result * self
        return result

    def rotate(self) -> "HallElem":
        return HallElem(self.p, self.deg.rotate(), {m.rotate(): c for m, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, HallElem):
            return NotImplemented
        if self.p != other.p or self.deg != other.deg or set(self.terms) != set(other.terms):
            return False
        return all(self.terms[m] == other.terms[m] for m in self.terms)

    def to_json(self) -> Dict:
        return {
            "p": self.p,
            "dim": self.deg.to_json(),
            "terms": [{"multisegment": m.to_json(), "coeff": c.to_json()} for m, c in self.items()],
        }

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({c})[{m.key}]" for m, c in self.items())

    def __repr__(self) -> str:
        return f"HallElem(p={self.p}, {self})"


def product(f: HallElem, g: HallElem) -> HallElem:
    """
    Hall product, f evaluated on the subrepresentation and g on the quotient.

    Raises:
        ArgumentError: If f and g live on different quivers
        BoundsExceededError: If the total dimension is too large
    """
    if f.p != g.p:
        raise ArgumentError(f"Cannot multiply elements for p = {f.p} and p = {g.p}")
    p = f.p
    deg = f.deg + g.deg
    if f.is_zero or g.is_zero:
        return HallElem.zero(p, deg)
    if f.deg.is_zero:
        return g * f.coeff(Multisegment.zero(p))
    if g.deg.is_zero:
        return f * g.coeff(Multisegment.zero(p))
    deg.check_bounds()
    twist = v_power(-f.deg.pairing(g.deg))
    out: Dict[Multisegment, Scalar] = {}
    for c in orbits(p, deg):
        total: Scalar = LaurentScalar.zero()
        for (a, b), poly in structure_polys(p, c, f.deg).items():
            fa = f.terms.get(a)
            gb = g.terms.get(b)
            if fa is None or gb is None:
                continue
            total = total + fa * gb * LaurentScalar.from_q_poly(poly)
        if total:
            out[c] = total * twist
    return HallElem(p, deg, out)


class HallTensor:
    """Element of H_p (x) H_p with fixed bidegree, keyed by (left orbit, right orbit)."""

    __slots__ = ("p", "degs", "terms")

    def __init__(
        self,
        p: int,
        degs: Tuple[CDim, CDim],
        terms: Optional[Mapping[Tuple[Multisegment, Multisegment], Scalar]] = None,
    ):
        self.p = p
        self.degs = degs
        self.terms = {pair: c for pair, c in (terms or {}).items() if c}

    @classmethod
    def tensor(cls, f: HallElem, g: HallElem) -> "HallTensor":
        terms = {(a, b): ca * cb for a, ca in f.terms.items() for b, cb in g.terms.items()}
        return cls(f.p, (f.deg, g.deg), terms)

    def coeff(self, left: Multisegment, right: Multisegment) -> Scalar:
        return self.terms.get((left, right), LaurentScalar.zero())

    def __mul__(self, scalar) -> "HallTensor":
        if not isinstance(scalar, (int, LaurentScalar, RationalScalar)):
            return NotImplemented
        return HallTensor(self.p, self.degs, {k: c * scalar for k, c in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, HallTensor):
            return NotImplemented
        if self.p != other.p or self.degs != other.degs or set(self.terms) != set(other.terms):
            return False
        return all(self.terms[k] == other.terms[k] for k in self.terms)

    def to_json(self) -> Dict:
        return {
            "p": self.p,
            "dims": [d.to_json() for d in self.degs],
            "terms": [
                {"left": a.to_json(), "right": b.to_json(), "coeff": c.to_json()}
                for (a, b), c in sorted(self.terms.items())
            ],
        }

    def __repr__(self) -> str:
        body = " + ".join(f"({c})[{a.key}]x[{b.key}]" for (a, b), c in sorted(self.terms.items()))
        return f"HallTensor(p={self.p}, {body or '0'})"


def _extension_rep(q: int, quot: NilRep, sub: NilRep, stars: Sequence[int]) -> NilRep:
    """Block upper triangular representation [[sub, star], [0, quot]]."""
    p = sub.p
    dims = tuple(a + b for a, b in zip(sub.dims, quot.dims))
    values = iter(stars)
    maps = []
    for i in range(p):
        lower = (i - 1) % p
        top_rows = []
        for r in range(sub.dims[lower]):
            top_rows.append(list(sub.maps[i][r]) + [next(values) for _ in range(quot.dims[i])])
        bottom_rows = [[0] * sub.dims[i] + list(quot.maps[i][r]) for r in range(quot.dims[lower])]
        maps.append(top_rows + bottom_rows)
    return NilRep(p, q, dims, maps)


def coproduct_component(f: HallElem, quot_dim: CDim, sub_dim: CDim) -> HallTensor:
    """
    The (quot_dim, sub_dim) component of the coproduct.

    The coefficient of [b] (x) [a] is v^{{sub_dim, quot_dim}} times the sum of f
    over all representations preserving a fixed subspace of dimension sub_dim
    whose restriction is a and whose quotient is b.

    Raises:
        ArgumentError: If the dimensions do not add up to deg f
        BoundsExceededError: If the extension space is too large to interpolate
    """
    p = f.p
    if quot_dim + sub_dim != f.deg:
        raise ArgumentError(f"{quot_dim.dims} + {sub_dim.dims} != {f.deg.dims}")
    f.deg.check_bounds()
    twist = v_power(sub_dim.pairing(quot_dim))
    bound = sum(sub_dim[i - 1] * quot_dim[i] for i in range(p))
    candidates = {c.key: c for c in orbits(p, f.deg)}
    out: Dict[Tuple[Multisegment, Multisegment], Scalar] = {}
    for b in orbits(p, quot_dim):
        for a in orbits(p, sub_dim):

            def tally_at(q: int, a=a, b=b) -> Counter:
                field = get_field(q)
                sub_rep = representative(a, q)
                quot_rep = representative(b, q)
                tally: Counter = Counter()
                for stars in field.vectors(bound):
                    tally[orbit_of(_extension_rep(q, quot_rep, sub_rep, stars)).key] += 1
                return tally

            prefix = f"cyclic-coproduct:p={p}:b={b.key}:a={a.key}"
            total: Scalar = LaurentScalar.zero()
            for c, poly in _fit_tallies(prefix, bound, tally_at, candidates).items():
                fc = f.terms.get(c)
                if fc is not None:
                    total = total + fc * LaurentScalar.from_q_poly(poly)
            if total:
                out[(b, a)] = total * twist
    return HallTensor(p, (quot_dim, sub_dim), out)


# Named elements


def _require_cyclic(p: int):
    if p < 2:
        raise ArgumentError(f"The generators E_i need p >= 2, got {p}")


def E(p: int, i: int, l: int = 1) -> HallElem:
    """Divided power E_i^{(l)}: indicator of the semisimple point of dimension l e_i."""
    _require_cyclic(p)
    return HallElem.indicator(Multisegment.segment(p, i, 1, l))


def periodic_orbit(p: int, lam: Sequence[int]) -> Multisegment:
    """The orbit O_lambda: segments of length p*lambda_j topped at vertex 0."""
    mult: Dict[Tuple[int, int], int] = {}
    for part in lam:
        mult[(0, p * part)] = mult.get((0, p * part), 0) + 1
    return Multisegment(p, mult)


def zeta(p: int, l: int) -> HallElem:
    """Sum of the indicators of O_lambda over partitions of l."""
    return HallElem(p, CDim.constant(p, l), {periodic_orbit(p, lam): 1 for lam in partitions_of(l)})


def _n_factor(k: int) -> LaurentScalar:
    result = LaurentScalar.one()
    for i in range(1, k + 1):
        result = result * (1 - v_power(-2 * i))
    return result


def h(p: int, l: int) -> HallElem:
    """h_l = (1/l) sum_lambda n(l(lambda) - 1) 1_{O_lambda}, with rational coefficients."""
    if l < 1:
        raise ArgumentError(f"h_l needs l >= 1, got {l}")
    terms = {
        periodic_orbit(p, lam): RationalScalar(_n_factor(len(lam) - 1), l) for lam in partitions_of(l)
    }
    return HallElem(p, CDim.constant(p, l), terms)


def H_star(p: int, l: int) -> HallElem:
    return h(p, l) * v_power(l * p)


def one_nilcone(p: int, l: int) -> HallElem:
    """Indicator of the whole nilpotent variety of dimension (l, ..., l)."""
    return HallElem(p, CDim.constant(p, l), {m: 1 for m in orbits(p, CDim.constant(p, l))})


_NAMED = {
    "E": lambda p, l, i: E(p, i, l),
    "h": lambda p, l, i: h(p, l),
    "zeta": lambda p, l, i: zeta(p, l),
    "H_star": lambda p, l, i: H_star(p, l),
    "one_nilcone": lambda p, l, i: one_nilcone(p, l),
}


def named_elements(p: int, which: str, l: int = 1, i: int = 0) -> HallElem:
    """
    Build a named element of H_p.

    Args:
        p: Number of vertices
        which: One of "E", "h", "zeta", "H_star", "one_nilcone"
        l: Degree index
        i: Vertex (for "E" only)

    Raises:
        ArgumentError: For an unknown selector or invalid indices
    """
    if which not in _NAMED:
        raise ArgumentError(f"Unknown element {which!r}; choose from {sorted(_NAMED)}")
    if l < 1:
        raise ArgumentError(f"Degree index must be >= 1, got {l}")
    return _NAMED[which](p, l, i)


@lru_cache(maxsize=None)
def u_recursion(p: int, l: int) -> HallElem:
    """
    u_l = 1_{nilcone, l} - zeta_l - zeta_{l-1} u_1 - ... - zeta_1 u_{l-1}.

    For p = 1 every nilpotent orbit is some O_lambda and u_l vanishes.
    """
    if l < 1:
        raise ArgumentError(f"u_l needs l >= 1, got {l}")
    result = one_nilcone(p, l) - zeta(p, l)
    for k in range(1, l):
        result = result - zeta(p, l - k) * u_recursion(p, k)
    logger.debug(f"u_{l} for p = {p}: {result}")
    return result


# The subalgebra generated by the E_i


@lru_cache(maxsize=None)
def e_monomial(p: int, word: Tuple[int, ...]) -> HallElem:
    """E_{w_1} E_{w_2} ... E_{w_k}."""
    if not word:
        return HallElem.one(p)
    return e_monomial(p, word[:-1]) * E(p, word[-1])


def span_basis(p: int, dim) -> List[HallElem]:
    """All E-monomials of a dimension vector (a spanning set, not a basis)."""
    _require_cyclic(p)
    dims = dim.dims if isinstance(dim, CDim) else tuple(dim)
    letters = [i for i in range(p) for _ in range(dims[i])]
    return [e_monomial(p, tuple(word)) for word in multiset_permutations(letters)]


def in_generated_subalgebra(x: HallElem) -> bool:
    """Whether x lies in the span of the E-monomials of its degree."""
    if x.is_zero:
        return True
    vector = [c.to_laurent() if isinstance(c, RationalScalar) else c for c in x.vector()]
    rows = [b.vector() for b in span_basis(x.p, x.deg)]
    return in_span(rows, vector)


def serre_relation(p: int, i: int, j: int) -> HallElem:
    """
    sum_k (-1)^k [n choose k] E_i^{n-k} E_j E_i^k with n = 1 - a_ij.

    Raises:
        ArgumentError: If i and j are not adjacent distinct vertices
    """
    _require_cyclic(p)
    i, j = i % p, j % p
    if i == j or (p > 2 and (i - j) % p not in (1, p - 1)):
        raise ArgumentError(f"Vertices {i} and {j} are not joined by an arrow")
    n = 3 if p == 2 else 2
    deg = CDim.unit(p, i, n) + CDim.unit(p, j)
    total = HallElem.zero(p, deg)
    for k in range(n + 1):
        term = (E(p, i) ** (n - k)) * E(p, j) * (E(p, i) ** k) * quantum_binomial(n, k)
        total = total - term if k % 2 else total + term
    return total


def serre_check(p: int) -> bool:
    """Whether every quantum Serre relation holds for the E_i of H_p."""
    _require_cyclic(p)
    ok = True
    for i in range(p):
        for j in {(i - 1) % p, (i + 1) % p}:
            residual = serre_relation(p, i, j)
            if not residual.is_zero:
                logger.warning(f"Serre relation ({i}, {j}) fails for p = {p}: {residual}")
                ok = False
    return ok
