"""
Lattice combinatorics of a weighted projective line.

A star diagram with branch weights (p_1, ..., p_N) describes the curve with
N orbifold points. Its Grothendieck group is the lattice spanned by the
class of the structure sheaf, the classes of the exceptional simples at the
orbifold points and the class of a generic point. This module provides the
Euler form on that lattice, degrees and slopes, the Picard group, HN types
with their combinatorial order, root tests for finite-type diagrams, the
twist bound used when choosing presentations, and codimensions of the
torsion strata.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from sympy.polys.domains import ZZ
from sympy.polys.matrices import DomainMatrix

from src.algebra.symm import Partition
from src.errors import ArgumentError, UnsupportedDiagramError

logger = logging.getLogger(__name__)

Slope = Union[Fraction, float]
STAR = (0, 0)


@dataclass(frozen=True)
class StarDiagram:
    """Branch weights (p_1, ..., p_N); N = 0 is the projective line."""

    weights: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(p) for p in self.weights))
        for p in self.weights:
            if p < 2:
                raise ArgumentError(f"Branch weights must be >= 2, got {self.weights}")

    @classmethod
    def parse(cls, text: str) -> "StarDiagram":
        """Parse a comma list such as "2,3,5" (empty text gives N = 0)."""
        text = text.strip()
        if not text:
            return cls(())
        try:
            return cls(tuple(int(part) for part in text.split(",")))
        except ValueError as e:
            raise ArgumentError(f"Weights must be a comma list of integers: {text!r}") from e

    @property
    def n_branches(self) -> int:
        return len(self.weights)

    def torsion_labels(self) -> List[Tuple[int, int]]:
        """Labels (i, j) of the exceptional simples, i = 1..N, j = 1..p_i - 1."""
        return [(i + 1, j) for i, p in enumerate(self.weights) for j in range(1, p)]

    def basis(self) -> List[Tuple[int, int]]:
        """Basis order: structure sheaf, torsion labels, then the point class (-1, -1)."""
        return [STAR] + self.torsion_labels() + [(-1, -1)]

    def weight_of(self, i: int) -> int:
        if not 1 <= i <= len(self.weights):
            raise ArgumentError(f"Branch {i} out of range for weights {self.weights}")
        return self.weights[i - 1]

    def check(self, a: "KClass"):
        """
        Raise if a class uses a torsion label outside the diagram.

        Raises:
            ArgumentError: For an out-of-range branch or position
        """
        for (i, j), _ in a.tor:
            p = self.weight_of(i)
            if not 1 <= j <= p - 1:
                raise ArgumentError(f"Torsion label ({i},{j}) out of range for p_{i} = {p}")

    def is_finite_type(self) -> bool:
        ws = sorted(self.weights)
        if len(ws) <= 2:
            return True
        if len(ws) == 3:
            return ws[0] == 2 and (ws[1] == 2 or (ws[1] == 3 and ws[2] in (3, 4, 5)))
        return False


@dataclass(frozen=True)
class KClass:
    """
    Element rank * [O] + sum c_(i,j) [S_(i,j)] + ndelta * delta of K(X).

    tor is stored as a sorted tuple of ((i, j), c) with c != 0.
    """

    rank: int = 0
    tor: Tuple[Tuple[Tuple[int, int], int], ...] = ()
    ndelta: int = 0

    def __post_init__(self):
        merged: Dict[Tuple[int, int], int] = {}
        items = self.tor.items() if isinstance(self.tor, Mapping) else self.tor
        for key, c in items:
            key = (int(key[0]), int(key[1]))
            merged[key] = merged.get(key, 0) + int(c)
        object.__setattr__(self, "tor", tuple(sorted((k, c) for k, c in merged.items() if c)))

    @classmethod
    def line(cls, degree: int) -> "KClass":
        """Class of O(degree) on the projective line."""
        return cls(rank=1, ndelta=degree)

    @classmethod
    def torsion(cls, degree: int) -> "KClass":
        """Class of a torsion sheaf of degree `degree` supported away from orbifold points."""
        return cls(rank=0, ndelta=degree)

    @classmethod
    def simple(cls, i: int, j: int) -> "KClass":
        return cls(tor=(((i, j), 1),))

    @classmethod
    def from_json(cls, data: Mapping) -> "KClass":
        try:
            return cls(
                rank=int(data.get("rank", 0)),
                tor=tuple(((int(i), int(j)), int(c)) for i, j, c in data.get("tor", [])),
                ndelta=int(data.get("ndelta", 0)),
            )
        except (TypeError, ValueError) as e:
            raise ArgumentError(f"Malformed KClass JSON: {data!r}") from e

    def tor_dict(self) -> Dict[Tuple[int, int], int]:
        return dict(self.tor)

    def __add__(self, other: "KClass") -> "KClass":
        if not isinstance(other, KClass):
            return NotImplemented
        return KClass(self.rank + other.rank, self.tor + other.tor, self.ndelta + other.ndelta)

    def __neg__(self) -> "KClass":
        return KClass(-self.rank, tuple((k, -c) for k, c in self.tor), -self.ndelta)

    def __sub__(self, other: "KClass") -> "KClass":
        if not isinstance(other, KClass):
            return NotImplemented
        return self + (-other)

    def scale(self, n: int) -> "KClass":
        return KClass(self.rank * n, tuple((k, c * n) for k, c in self.tor), self.ndelta * n)

    @property
    def is_zero(self) -> bool:
        return self.rank == 0 and not self.tor and self.ndelta == 0

    def degree(self) -> "KClass":
        """deg(alpha): the class with its structure-sheaf part removed."""
        return KClass(0, self.tor, self.ndelta)

    def size(self, d: StarDiagram) -> Fraction:
        """|alpha| = ndelta + sum c_(i,j) / p_i."""
        total = Fraction(self.ndelta)
        for (i, _), c in self.tor:
            total += Fraction(c, d.weight_of(i))
        return total

    def slope(self, d: StarDiagram) -> Slope:
        """mu(alpha) = |alpha| / rank, infinite for torsion classes."""
        if self.rank == 0:
            return math.inf
        return self.size(d) / self.rank

    def in_positive_cone(self) -> bool:
        """Membership in the cone spanned by classes of sheaves."""
        if self.rank > 0:
            return True
        if self.rank < 0 or self.ndelta < 0:
            return False
        if self.ndelta > 0:
            return True
        return all(c >= 0 for _, c in self.tor)

    def residue(self) -> Tuple[int, Tuple]:
        """The class modulo delta, as (rank, tor)."""
        return self.rank, self.tor

    def to_json(self) -> Dict:
        return {"rank": self.rank, "tor": [[i, j, c] for (i, j), c in self.tor], "ndelta": self.ndelta}

    def __str__(self) -> str:
        parts = []
        if self.rank:
            parts.append(f"{self.rank}[O]")
        for (i, j), c in self.tor:
            parts.append(f"{c}S({i},{j})")
        if self.ndelta:
            parts.append(f"{self.ndelta}d")
        return " + ".join(parts) if parts else "0"


def _basis_pairing(a: Tuple[int, int], b: Tuple[int, int]) -> int:
    """Euler form on basis labels: STAR, (-1, -1) for delta, (i, j) for simples."""
    delta = (-1, -1)
    if a == STAR:
        return 1 if b in (STAR, delta) else 0
    if a == delta:
        return -1 if b == STAR else 0
    if b == STAR:
        return -1 if a[1] == 1 else 0
    if b == delta or a[0] != b[0]:
        return 0
    return int(a[1] == b[1]) - int(a[1] - 1 == b[1])


def _coordinates(a: KClass) -> Dict[Tuple[int, int], int]:
    coords = {STAR: a.rank, (-1, -1): a.ndelta}
    coords.update(a.tor_dict())
    return coords


def euler_form(d: StarDiagram, a: KClass, b: KClass) -> int:
    """
    The Euler form <a, b> = dim Hom - dim Ext, extended bilinearly.

    Args:
        d: Star diagram
        a: First class
        b: Second class

    Returns:
        Integer value of the form

    Raises:
        ArgumentError: If a class uses a label outside the diagram
    """
    d.check(a)
    d.check(b)
    total = 0
    for ka, ca in _coordinates(a).items():
        if not ca:
            continue
        for kb, cb in _coordinates(b).items():
            if cb:
                total += ca * cb * _basis_pairing(ka, kb)
    return total


def symmetric_form(d: StarDiagram, a: KClass, b: KClass) -> int:
    return euler_form(d, a, b) + euler_form(d, b, a)


def basis_class(label: Tuple[int, int]) -> KClass:
    if label == STAR:
        return KClass(rank=1)
    if label == (-1, -1):
        return KClass(ndelta=1)
    return KClass.simple(*label)


def cartan_matrix(d: StarDiagram) -> List[List[int]]:
    """
    Generalized Cartan matrix of the affinized star on basis order d.basis().

    The star node is joined to the first node of each branch, branch nodes
    form chains, and delta pairs to zero with everything.
    """
    labels = d.basis()
    size = len(labels)
    matrix = [[0] * size for _ in range(size)]
    for r, a in enumerate(labels):
        for c, b in enumerate(labels):
            if a == (-1, -1) or b == (-1, -1):
                continue
            if a == b:
                matrix[r][c] = 2
            elif STAR in (a, b):
                other = b if a == STAR else a
                matrix[r][c] = -1 if other[1] == 1 else 0
            elif a[0] == b[0] and abs(a[1] - b[1]) == 1:
                matrix[r][c] = -1
    return matrix


@dataclass(frozen=True)
class PicElem:
    """
    Line bundle L_delta^n tensor (tensor_i L_i^{j_i}) with 0 <= j_i < p_i.

    L_i^{p_i} is identified with L_delta, so overflowing twists carry into n.
    """

    weights: Tuple[int, ...]
    n: int = 0
    twists: Tuple[int, ...] = ()

    def __post_init__(self):
        twists = tuple(self.twists) or (0,) * len(self.weights)
        if len(twists) != len(self.weights):
            raise ArgumentError(f"Need {len(self.weights)} twists, got {twists}")
        n = self.n
        normalized = []
        for j, p in zip(twists, self.weights):
            carry, rem = divmod(j, p)
            n += carry
            normalized.append(rem)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "twists", tuple(normalized))

    @classmethod
    def generator(cls, d: StarDiagram, i: int) -> "PicElem":
        """L_i, the generator attached to branch i (1-based)."""
        d.weight_of(i)
        twists = [0] * d.n_branches
        twists[i - 1] = 1
        return cls(d.weights, 0, tuple(twists))

    @classmethod
    def delta(cls, d: StarDiagram) -> "PicElem":
        return cls(d.weights, 1)

    def __add__(self, other: "PicElem") -> "PicElem":
        if not isinstance(other, PicElem) or other.weights != self.weights:
            return NotImplemented
        return PicElem(self.weights, self.n + other.n, tuple(a + b for a, b in zip(self.twists, other.twists)))

    def __neg__(self) -> "PicElem":
        return PicElem(self.weights, -self.n, tuple(-j for j in self.twists))

    def __sub__(self, other: "PicElem") -> "PicElem":
        return self + (-other)

    def class_of(self) -> KClass:
        """[L] = [O] + n delta + sum_i sum_{k <= j_i} alpha_(i,k)."""
        tor = tuple(((i + 1, k), 1) for i, j in enumerate(self.twists) for k in range(1, j + 1))
        return KClass(rank=1, tor=tor, ndelta=self.n)


def omega(d: StarDiagram) -> PicElem:
    """The dualizing sheaf L_delta^{N-2} tensor (tensor_i L_i^{-1})."""
    return PicElem(d.weights, d.n_branches - 2, tuple(-1 for _ in d.weights))


def omega_degree(d: StarDiagram) -> KClass:
    return omega(d).class_of().degree()


def s_set(d: StarDiagram) -> Dict[Tuple[int, int], PicElem]:
    """The line bundles L_s: the structure sheaf (key (0, 0)) and L_i^j (key (i, j))."""
    out = {STAR: PicElem(d.weights)}
    for i, j in d.torsion_labels():
        twists = [0] * d.n_branches
        twists[i - 1] = j
        out[(i, j)] = PicElem(d.weights, 0, tuple(twists))
    return out


def builder_dims(d: StarDiagram, n: int, alpha: KClass) -> Dict[Tuple[int, int], int]:
    """
    Multiplicities d_s(n, alpha) = <[L_s(n)], alpha> for every s in S.

    Negative entries mean alpha is not generated at twist n.
    """
    twist = PicElem(d.weights, n)
    return {key: euler_form(d, (line + twist).class_of(), alpha) for key, line in s_set(d).items()}


def generated_at(dims: Mapping[Tuple[int, int], int]) -> bool:
    return all(v >= 0 for v in dims.values())


class HNOrder(str, Enum):
    """Outcome of comparing two HN types."""

    PRECEDES = "<"
    SUCCEEDS = ">"
    EQUAL = "="
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class HNType:
    """Classes of the HN subquotients, slopes strictly decreasing."""

    parts: Tuple[KClass, ...]

    def total(self) -> KClass:
        total = KClass()
        for part in self.parts:
            total = total + part
        return total

    def to_json(self, d: Optional[StarDiagram] = None) -> List[Dict]:
        out = []
        for part in self.parts:
            entry = part.to_json()
            if d is not None:
                mu = part.slope(d)
                entry["slope"] = "inf" if mu == math.inf else str(mu)
            out.append(entry)
        return out


def slope_and_hn(d: StarDiagram, summands: Sequence[KClass]) -> HNType:
    """
    HN type of a direct sum of indecomposables.

    Summands of equal slope are merged and the groups are ordered by
    decreasing slope.

    Raises:
        ArgumentError: On empty input or zero summands
    """
    if not summands:
        raise ArgumentError("HN type of an empty sum is undefined")
    groups: Dict[Slope, KClass] = {}
    for s in summands:
        if s.is_zero:
            raise ArgumentError("Zero summand in HN computation")
        d.check(s)
        mu = s.slope(d)
        groups[mu] = groups[mu] + s if mu in groups else s
    return HNType(tuple(groups[mu] for mu in sorted(groups, reverse=True)))


def hn_compare(d: StarDiagram, a: HNType, b: HNType) -> HNOrder:
    """
    Compare HN types of equal total class.

    a succeeds b when, at the first index where they differ, a's part has
    smaller slope, or equal slope and smaller size.

    Raises:
        ArgumentError: If the total classes differ
    """
    if a.total() != b.total():
        raise ArgumentError(f"HN types of different classes: {a.total()} vs {b.total()}")
    if a.parts == b.parts:
        return HNOrder.EQUAL
    for pa, pb in zip(a.parts, b.parts):
        if pa == pb:
            continue
        ma, mb = pa.slope(d), pb.slope(d)
        if ma < mb:
            return HNOrder.SUCCEEDS
        if ma > mb:
            return HNOrder.PRECEDES
        sa, sb = pa.size(d), pb.size(d)
        if sa < sb:
            return HNOrder.SUCCEEDS
        if sa > sb:
            return HNOrder.PRECEDES
        return HNOrder.INCOMPARABLE
    return HNOrder.INCOMPARABLE


class RootKind(str, Enum):
    REAL = "real root"
    IMAGINARY = "imaginary root"
    NONE = "not a root"


@lru_cache(maxsize=None)
def finite_roots(d: StarDiagram) -> Tuple[KClass, ...]:
    """
    Positive roots of the finite star diagram, as classes without delta.

    Built by adding simple roots while the symmetric form with the simple
    root is -1.

    Raises:
        UnsupportedDiagramError: If the diagram is not of finite type
    """
    if not d.is_finite_type():
        raise UnsupportedDiagramError(f"Weights {d.weights} do not give a finite-type diagram")
    simples = [basis_class(label) for label in d.basis()[:-1]]
    roots = set(simples)
    frontier = list(simples)
    while frontier:
        nxt = []
        for beta in frontier:
            for alpha in simples:
                if symmetric_form(d, beta, alpha) == -1:
                    gamma = beta + alpha
                    if gamma not in roots:
                        roots.add(gamma)
                        nxt.append(gamma)
        frontier = nxt
    logger.debug(f"Finite root system for {d.weights}: {len(roots)} positive roots")
    return tuple(sorted(roots, key=lambda r: (r.rank, r.tor)))


def root_test(d: StarDiagram, a: KClass) -> RootKind:
    """
    Classify a class as a real root, an imaginary root or neither.

    Real roots are beta + n delta with beta a finite root (up to sign);
    imaginary roots are the nonzero multiples of delta.

    Raises:
        UnsupportedDiagramError: If the diagram is not of finite type
    """
    d.check(a)
    roots = finite_roots(d)
    residue = KClass(a.rank, a.tor, 0)
    if residue.is_zero:
        return RootKind.IMAGINARY if a.ndelta != 0 else RootKind.NONE
    if residue in roots or (-residue) in roots:
        return RootKind.REAL
    return RootKind.NONE


def twist_bound(d: StarDiagram, alpha: KClass, beta: KClass, n0: int) -> int:
    """
    Twist bound q(alpha, beta, n0).

    Q = deg(alpha) - (rk(alpha) - 1) * (deg(beta) - (rk(beta) - 1) n0 delta
    + (rk(alpha) - 1)(3 delta - deg(omega))), and q is the greatest integer
    strictly below |Q| - |omega|.

    Raises:
        ArgumentError: If rank(alpha) < 1 or rank(beta) < rank(alpha)
    """
    if alpha.rank < 1:
        raise ArgumentError("twist_bound needs rank(alpha) >= 1")
    if beta.rank < alpha.rank:
        raise ArgumentError("twist_bound needs rank(beta) >= rank(alpha)")
    ra, rb = alpha.rank, beta.rank
    w = omega_degree(d)
    inner = beta.degree() - KClass(ndelta=(rb - 1) * n0) + (KClass(ndelta=3) - w).scale(ra - 1)
    big_q = alpha.degree() - inner.scale(ra - 1)
    bound = big_q.size(d) - w.size(d)
    return math.ceil(bound) - 1


def dim_borel(lam: Iterable[int]) -> int:
    """dim B_lambda = sum_i (i - 1) lambda_i."""
    return sum(i * part for i, part in enumerate(Partition(lam)))


def strata_codim(multi: Sequence[Iterable[int]], l: int) -> int:
    """
    Codimension of the torsion stratum labelled by a tuple of partitions.

    Raises:
        ArgumentError: If the partitions do not have total weight l
    """
    parts = [Partition(lam) for lam in multi]
    if sum(p.weight for p in parts) != l:
        raise ArgumentError(f"Partitions {parts} do not have total weight {l}")
    return (l - len(parts)) + 2 * sum(dim_borel(p) for p in parts)


def aut_count(lam: Iterable[int], q: int) -> int:
    """
    |Aut| of the nilpotent module of Jordan type lambda over F_q.

    q^{sum lambda'_i^2} prod_i prod_{j=1}^{m_i} (1 - q^{-j}).
    """
    lam = Partition(lam)
    total = Fraction(q) ** sum(c * c for c in lam.conjugate())
    for mult in lam.multiplicities().values():
        for j in range(1, mult + 1):
            total *= 1 - Fraction(1, q**j)
    if total.denominator != 1:
        raise ArgumentError(f"Non-integral automorphism count for {lam} at q = {q}")
    return int(total)


def dim_end(lam: Iterable[int]) -> int:
    """
    dim End of the nilpotent module of Jordan type lambda.

    Computed as the nullity of X -> XJ - JX by an exact rank over Z.
    """
    lam = Partition(lam)
    n = lam.weight
    if n == 0:
        return 0
    jordan = [[0] * n for _ in range(n)]
    start = 0
    for part in lam:
        for k in range(part - 1):
            jordan[start + k][start + k + 1] = 1
        start += part
    rows = []
    # entry (a, b) of XJ - JX as a linear form in the entries of X
    for a in range(n):
        for b in range(n):
            row = [0] * (n * n)
            for k in range(n):
                row[a * n + k] += jordan[k][b]
                row[k * n + b] -= jordan[a][k]
            rows.append(row)
    matrix = DomainMatrix([[ZZ(x) for x in row] for row in rows], (n * n, n * n), ZZ)
    return n * n - matrix.to_field().rank()
