"""
The commutative torsion sector: partitions and the ring of xi-monomials.

The generators xi_1, xi_2, ... commute, so a monomial xi_a xi_b ... is
recorded as the partition of its indices. Under the identification of xi_l
with the complete homogeneous symmetric function h_l, Schur elements come from
the Jacobi-Trudi determinant, and the series chi, theta and the logarithmic
generators H_(l) are all obtained by exact series manipulation.
"""

import logging
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from src.algebra.coeff import LaurentScalar, RationalScalar, Scalar, v_power
from src.errors import ArgumentError

logger = logging.getLogger(__name__)


class Partition(tuple):
    """Weakly decreasing tuple of positive integers."""

    def __new__(cls, parts: Iterable[int] = ()):
        parts = [int(p) for p in parts]
        if any(p < 0 for p in parts):
            raise ArgumentError(f"Partition parts must be nonnegative: {parts}")
        return super().__new__(cls, sorted((p for p in parts if p > 0), reverse=True))

    @property
    def weight(self) -> int:
        return sum(self)

    @property
    def length(self) -> int:
        return len(self)

    def union(self, other: "Partition") -> "Partition":
        """Multiset union of parts (the product of xi-monomials)."""
        return Partition(tuple(self) + tuple(other))

    def conjugate(self) -> "Partition":
        if not self:
            return Partition()
        return Partition(sum(1 for p in self if p > i) for i in range(self[0]))

    def multiplicities(self) -> Dict[int, int]:
        """part -> number of occurrences."""
        counts: Dict[int, int] = {}
        for p in self:
            counts[p] = counts.get(p, 0) + 1
        return counts

    def __repr__(self) -> str:
        return f"Partition({tuple(self)})"


EMPTY = Partition()


@lru_cache(maxsize=None)
def partitions_of(n: int, max_part: Optional[int] = None) -> Tuple[Partition, ...]:
    """
    All partitions of n with parts at most max_part, in decreasing lex order.

    Raises:
        ArgumentError: If n is negative
    """
    if n < 0:
        raise ArgumentError(f"Cannot partition a negative number: {n}")
    if max_part is None or max_part > n:
        max_part = n
    if n == 0:
        return (EMPTY,)
    out: List[Partition] = []
    for first in range(max_part, 0, -1):
        for rest in partitions_of(n - first, first):
            out.append(Partition((first,) + tuple(rest)))
    return tuple(out)


def _is_zero(c) -> bool:
    return not c


class SymElem:
    """
    Finite combination sum c_lambda xi_lambda.

    Coefficients are LaurentScalar, or RationalScalar inside derivations.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Partition, Scalar]] = None):
        cleaned: Dict[Partition, Scalar] = {}
        if terms:
            for lam, c in terms.items():
                if isinstance(c, int):
                    c = LaurentScalar.from_int(c)
                if not _is_zero(c):
                    cleaned[Partition(lam)] = c
        self.terms = cleaned

    @classmethod
    def one(cls) -> "SymElem":
        return cls({EMPTY: LaurentScalar.one()})

    @classmethod
    def zero(cls) -> "SymElem":
        return cls()

    @classmethod
    def monomial(cls, lam: Iterable[int], coeff: Scalar = None) -> "SymElem":
        """xi_lambda, times an optional coefficient."""
        return cls({Partition(lam): LaurentScalar.one() if coeff is None else coeff})

    @classmethod
    def from_json(cls, data: Mapping) -> "SymElem":
        try:
            return cls(
                {Partition(t["partition"]): LaurentScalar.from_json(t["coeff"]) for t in data["terms"]}
            )
        except (KeyError, TypeError) as e:
            raise ArgumentError(f"Malformed SymElem JSON: {data!r}") from e

    def items(self) -> Iterator[Tuple[Partition, Scalar]]:
        for lam in sorted(self.terms, key=lambda p: (p.weight, p)):
            yield lam, self.terms[lam]

    def coeff(self, lam: Iterable[int]) -> Scalar:
        return self.terms.get(Partition(lam), LaurentScalar.zero())

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def weights(self) -> List[int]:
        return sorted({lam.weight for lam in self.terms})

    def homogeneous(self, w: int) -> "SymElem":
        """The weight-w component."""
        return SymElem({lam: c for lam, c in self.terms.items() if lam.weight == w})

    def __add__(self, other: "SymElem") -> "SymElem":
        if not isinstance(other, SymElem):
            return NotImplemented
        out = dict(self.terms)
        for lam, c in other.terms.items():
            out[lam] = out[lam] + c if lam in out else c
        return SymElem(out)

    def __neg__(self) -> "SymElem":
        return SymElem({lam: -c for lam, c in self.terms.items()})

    def __sub__(self, other: "SymElem") -> "SymElem":
        if not isinstance(other, SymElem):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other) -> "SymElem":
        if isinstance(other, SymElem):
            out: Dict[Partition, Scalar] = {}
            for l1, c1 in self.terms.items():
                for l2, c2 in other.terms.items():
                    lam = l1.union(l2)
                    c = c1 * c2
                    out[lam] = out[lam] + c if lam in out else c
            return SymElem(out)
        if isinstance(other, (int, LaurentScalar, RationalScalar)):
            return SymElem({lam: c * other for lam, c in self.terms.items()})
        return NotImplemented

    def __rmul__(self, other) -> "SymElem":
        if isinstance(other, (int, LaurentScalar, RationalScalar)):
            return self * other
        return NotImplemented

    def bar(self) -> "SymElem":
        """Bar involution: xi_l is fixed, coefficients are conjugated."""
        return SymElem({lam: c.bar() for lam, c in self.terms.items()})

    def to_laurent(self) -> "SymElem":
        """Clear rational coefficients, raising if one does not clear."""
        return SymElem(
            {lam: c.to_laurent() if isinstance(c, RationalScalar) else c for lam, c in self.terms.items()}
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymElem):
            return NotImplemented
        if set(self.terms) != set(other.terms):
            return False
        return all(self.terms[lam] == other.terms[lam] for lam in self.terms)

    def to_json(self) -> Dict:
        return {
            "terms": [
                {"partition": list(lam), "coeff": c.to_json()} for lam, c in self.items()
            ]
        }

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({c})xi{tuple(lam)}" for lam, c in self.items())

    def __repr__(self) -> str:
        return f"SymElem({self})"


def xi(l: int) -> SymElem:
    """The generator xi_l (xi_0 = 1, xi_l = 0 for l < 0)."""
    if l < 0:
        return SymElem.zero()
    if l == 0:
        return SymElem.one()
    return SymElem.monomial((l,))


def xi_mul(a: SymElem, b: SymElem) -> SymElem:
    return a * b


def _jacobi_trudi_entry(lam: Tuple[int, ...], row: int, col: int) -> SymElem:
    return xi(lam[row] - row + col)


@lru_cache(maxsize=None)
def _jacobi_trudi_minor(lam: Tuple[int, ...], row: int, columns: Tuple[int, ...]) -> SymElem:
    # Laplace expansion along `row` over the remaining columns.
    if row == len(lam):
        return SymElem.one()
    total = SymElem.zero()
    for position, col in enumerate(columns):
        entry = _jacobi_trudi_entry(lam, row, col)
        if entry.is_zero:
            continue
        rest = columns[:position] + columns[position + 1 :]
        term = entry * _jacobi_trudi_minor(lam, row + 1, rest)
        total = total - term if position % 2 else total + term
    return total


def schur(lam: Iterable[int]) -> SymElem:
    """
    Schur element s_lambda = det(xi_{lambda_i - i + j}) in xi-monomials.

    Args:
        lam: Partition (any iterable of parts)

    Returns:
        Integer combination of xi-monomials
    """
    parts = tuple(Partition(lam))
    return _jacobi_trudi_minor(parts, 0, tuple(range(len(parts))))


@lru_cache(maxsize=None)
def chi(n: int) -> SymElem:
    """
    The inverse series: sum_{i+j=n} xi_i chi_j = delta_{n,0}.

    Raises:
        ArgumentError: If n is negative
    """
    if n < 0:
        raise ArgumentError(f"chi needs n >= 0, got {n}")
    if n == 0:
        return SymElem.one()
    total = SymElem.zero()
    for i in range(1, n + 1):
        total = total - xi(i) * chi(n - i)
    return total


@lru_cache(maxsize=None)
def theta(l: int) -> SymElem:
    """theta_l = sum_{k=0}^{l} v^(2k-l) xi_{l-k} chi_k."""
    if l < 0:
        raise ArgumentError(f"theta needs l >= 0, got {l}")
    total = SymElem.zero()
    for k in range(l + 1):
        total = total + (xi(l - k) * chi(k)) * v_power(2 * k - l)
    return total


@lru_cache(maxsize=None)
def h_generator(l: int) -> SymElem:
    """
    H_(l), the degree-l coefficient of the formal logarithm of 1 + sum xi_l s^l.

    Coefficients are RationalScalar.

    Raises:
        ArgumentError: If l < 1
    """
    if l < 1:
        raise ArgumentError(f"H generator needs l >= 1, got {l}")
    total = xi(l) * RationalScalar(1)
    correction = SymElem.zero()
    for i in range(1, l):
        correction = correction + h_generator(i) * xi(l - i) * i
    return total - correction * RationalScalar(1, l)


def series_exp(gens: Mapping[int, SymElem], order: int) -> List[SymElem]:
    """
    Coefficients F_0..F_order of exp(sum_r gens[r] s^r).

    Uses n F_n = sum_{i=1}^{n} i g_i F_{n-i}, exact over the rationals.
    """
    series = [SymElem.one() * RationalScalar(1)]
    for n in range(1, order + 1):
        acc = SymElem.zero()
        for i in range(1, n + 1):
            g = gens.get(i)
            if g is None or g.is_zero:
                continue
            acc = acc + g * series[n - i] * i
        series.append(acc * RationalScalar(1, n))
    return series


def schur_expand(x: SymElem) -> Dict[Partition, Scalar]:
    """
    Re-expand an element in the Schur basis.

    s_lambda equals h_lambda plus terms indexed by partitions dominating
    lambda, so the lex-smallest partition in the support always carries the
    Schur coefficient of that partition.

    Returns:
        partition -> coefficient
    """
    remaining = x
    out: Dict[Partition, Scalar] = {}
    while not remaining.is_zero:
        lam = min(remaining.terms)
        c = remaining.terms[lam]
        out[lam] = c
        remaining = remaining - schur(tuple(lam)) * c
    return out
