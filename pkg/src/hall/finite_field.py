"""
Small finite fields and exact linear algebra over them.

Fields F_q with q = p^k, k <= 3, are realized with elements 0..q-1 read as
base-p digit vectors of polynomials modulo a monic irreducible of degree k.
Addition, multiplication and inversion are precomputed tables, which keeps the
brute-force enumeration kernels of the Hall-algebra engines simple.
"""

import itertools
import logging
from functools import lru_cache
from typing import Iterator, List, Sequence, Tuple

import sympy

from src.errors import ArgumentError

logger = logging.getLogger(__name__)

Matrix = List[List[int]]
Poly = Tuple[int, ...]


class FiniteField:
    """
    The field with q elements.

    Elements are ints in range(q); 0 and 1 are the additive and
    multiplicative identities.
    """

    MAX_EXTENSION_DEGREE = 3

    def __init__(self, q: int):
        """
        Build the operation tables.

        Args:
            q: Prime power p^k with k <= 3

        Raises:
            ArgumentError: If q is not a supported prime power
        """
        if q < 2:
            raise ArgumentError(f"Field size must be a prime power, got {q}")
        factors = sympy.factorint(q)
        if len(factors) != 1:
            raise ArgumentError(f"Field size must be a prime power, got {q}")
        ((p, k),) = factors.items()
        if k > self.MAX_EXTENSION_DEGREE:
            raise ArgumentError(f"Extension degree {k} exceeds {self.MAX_EXTENSION_DEGREE}")
        self.q = q
        self.p = int(p)
        self.k = int(k)
        self.modulus = self._find_modulus()
        self._build_tables()
        logger.debug(f"FiniteField({q}) built with modulus {self.modulus}")

    def _digits(self, a: int) -> List[int]:
        return [(a // self.p**i) % self.p for i in range(self.k)]

    def _from_digits(self, digits: Sequence[int]) -> int:
        return sum((d % self.p) * self.p**i for i, d in enumerate(digits))

    def _find_modulus(self) -> Tuple[int, ...]:
        # degree <= 3: irreducible iff no root in F_p
        if self.k == 1:
            return (0, 1)
        p = self.p
        for tail in itertools.product(range(p), repeat=self.k):
            coeffs = tuple(tail) + (1,)
            if coeffs[0] == 0:
                continue
            if all(sum(c * x**i for i, c in enumerate(coeffs)) % p for x in range(p)):
                return coeffs
        raise ArgumentError(f"No irreducible polynomial of degree {self.k} over F_{p}")

    def _mul_digits(self, a: List[int], b: List[int]) -> List[int]:
        p, k = self.p, self.k
        prod = [0] * (2 * k - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                prod[i + j] = (prod[i + j] + x * y) % p
        for deg in range(len(prod) - 1, k - 1, -1):
            c = prod[deg]
            if c:
                for i in range(k + 1):
                    prod[deg - k + i] = (prod[deg - k + i] - c * self.modulus[i]) % p
        return prod[:k]

    def _build_tables(self):
        q = self.q
        digits = [self._digits(a) for a in range(q)]
        self.add_table = [
            [self._from_digits([x + y for x, y in zip(digits[a], digits[b])]) for b in range(q)] for a in range(q)
        ]
        self.mul_table = [
            [self._from_digits(self._mul_digits(digits[a], digits[b])) for b in range(q)] for a in range(q)
        ]
        self.neg_table = [self._from_digits([-x for x in digits[a]]) for a in range(q)]
        self.inv_table = [0] * q
        for a in range(1, q):
            for b in range(1, q):
                if self.mul_table[a][b] == 1:
                    self.inv_table[a] = b
                    break

    # Scalar operations

    def add(self, a: int, b: int) -> int:
        return self.add_table[a][b]

    def sub(self, a: int, b: int) -> int:
        return self.add_table[a][self.neg_table[b]]

    def mul(self, a: int, b: int) -> int:
        return self.mul_table[a][b]

    def neg(self, a: int) -> int:
        return self.neg_table[a]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ArgumentError("Zero has no inverse")
        return self.inv_table[a]

    def elements(self) -> range:
        return range(self.q)

    def nonzero(self) -> range:
        return range(1, self.q)

    # Vectors and matrices

    def dot(self, a: Sequence[int], b: Sequence[int]) -> int:
        total = 0
        for x, y in zip(a, b):
            if x and y:
                total = self.add_table[total][self.mul_table[x][y]]
        return total

    def mat_vec(self, m: Matrix, vec: Sequence[int]) -> List[int]:
        return [self.dot(row, vec) for row in m]

    def matmul(self, a: Matrix, b: Matrix, ncols: int) -> Matrix:
        """Product of an r x s matrix with an s x ncols matrix."""
        cols = [[b[k][j] for k in range(len(b))] for j in range(ncols)]
        return [[self.dot(row, col) for col in cols] for row in a]

    def rref(self, rows: Sequence[Sequence[int]]) -> Tuple[Matrix, List[int]]:
        """
        Reduced row echelon form.

        Returns:
            (nonzero rows in RREF, pivot column of each row)
        """
        m = [list(r) for r in rows]
        if not m:
            return [], []
        ncols = len(m[0])
        pivots: List[int] = []
        r = 0
        for c in range(ncols):
            pivot = next((i for i in range(r, len(m)) if m[i][c]), None)
            if pivot is None:
                continue
            m[r], m[pivot] = m[pivot], m[r]
            inv = self.inv_table[m[r][c]]
            m[r] = [self.mul_table[inv][x] for x in m[r]]
            for i in range(len(m)):
                if i != r and m[i][c]:
                    factor = m[i][c]
                    m[i] = [self.sub(x, self.mul_table[factor][y]) for x, y in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
            if r == len(m):
                break
        return m[:r], pivots

    def rank(self, rows: Sequence[Sequence[int]]) -> int:
        return len(self.rref(rows)[1])

    def in_span(self, basis_rref: Matrix, pivots: Sequence[int], vec: Sequence[int]) -> bool:
        return not any(self.reduce(basis_rref, pivots, vec))

    def reduce(self, basis_rref: Matrix, pivots: Sequence[int], vec: Sequence[int]) -> List[int]:
        """Subtract the RREF basis to clear the pivot entries of vec."""
        out = list(vec)
        for row, c in zip(basis_rref, pivots):
            factor = out[c]
            if factor:
                out = [self.sub(x, self.mul_table[factor][y]) for x, y in zip(out, row)]
        return out

    def vectors(self, n: int) -> Iterator[Tuple[int, ...]]:
        return itertools.product(range(self.q), repeat=n)

    def subspaces(self, n: int, k: int) -> Iterator[Matrix]:
        """
        All k-dimensional subspaces of F_q^n, each as its RREF basis.

        The number yielded is the Gaussian binomial [n choose k] at q.
        """
        if k < 0 or k > n:
            return
        if k == 0:
            yield []
            return
        for pivots in itertools.combinations(range(n), k):
            free_slots = [(r, c) for r, pc in enumerate(pivots) for c in range(pc + 1, n) if c not in pivots]
            for values in itertools.product(range(self.q), repeat=len(free_slots)):
                basis = [[0] * n for _ in range(k)]
                for r, pc in enumerate(pivots):
                    basis[r][pc] = 1
                for (r, c), val in zip(free_slots, values):
                    basis[r][c] = val
                yield basis

    # Polynomials over the field (tuples, constant term first)

    def poly_trim(self, f: Sequence[int]) -> Poly:
        f = list(f)
        while f and f[-1] == 0:
            f.pop()
        return tuple(f)

    def poly_add(self, f: Sequence[int], g: Sequence[int]) -> Poly:
        n = max(len(f), len(g))
        return self.poly_trim(
            [self.add(f[i] if i < len(f) else 0, g[i] if i < len(g) else 0) for i in range(n)]
        )

    def poly_mul(self, f: Sequence[int], g: Sequence[int]) -> Poly:
        if not f or not g:
            return ()
        out = [0] * (len(f) + len(g) - 1)
        for i, a in enumerate(f):
            if not a:
                continue
            for j, b in enumerate(g):
                if b:
                    out[i + j] = self.add(out[i + j], self.mul(a, b))
        return self.poly_trim(out)

    def poly_divmod(self, f: Sequence[int], g: Sequence[int]) -> Tuple[Poly, Poly]:
        g = self.poly_trim(g)
        if not g:
            raise ArgumentError("Polynomial division by zero")
        rem = list(self.poly_trim(f))
        lead_inv = self.inv(g[-1])
        quot = [0] * max(len(rem) - len(g) + 1, 0)
        while len(rem) >= len(g) and rem:
            shift = len(rem) - len(g)
            c = self.mul(rem[-1], lead_inv)
            quot[shift] = c
            for i, b in enumerate(g):
                rem[shift + i] = self.sub(rem[shift + i], self.mul(c, b))
            rem = list(self.poly_trim(rem))
        return self.poly_trim(quot), tuple(rem)

    def poly_eval(self, f: Sequence[int], x: int) -> int:
        total = 0
        for c in reversed(f):
            total = self.add(self.mul(total, x), c)
        return total

    def valuation(self, f: Sequence[int], pi: Sequence[int]) -> int:
        """Multiplicity of the irreducible pi in f (f must be nonzero)."""
        f = self.poly_trim(f)
        if not f:
            raise ArgumentError("Valuation of the zero polynomial is infinite")
        count = 0
        while True:
            quot, rem = self.poly_divmod(f, pi)
            if rem:
                return count
            f = quot
            count += 1

    def monic_irreducibles(self, degree: int) -> List[Poly]:
        """Monic irreducible polynomials of degree 1 or 2."""
        if degree == 1:
            return [(self.neg(a), 1) for a in range(self.q)]
        if degree == 2:
            out = []
            for c0, c1 in itertools.product(range(self.q), repeat=2):
                f = (c0, c1, 1)
                if all(self.poly_eval(f, x) for x in range(self.q)):
                    out.append(f)
            return out
        raise ArgumentError(f"Only degrees 1 and 2 are supported, got {degree}")


@lru_cache(maxsize=None)
def get_field(q: int) -> FiniteField:
    """Shared FiniteField instance for q."""
    return FiniteField(q)


def gaussian_binomial_count(n: int, k: int, q: int) -> int:
    """Number of k-dimensional subspaces of F_q^n."""
    if k < 0 or k > n:
        return 0
    num = 1
    den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den
