"""
Exact coefficient arithmetic in the ring Z[v, v^-1].

LaurentScalar is the coefficient type of every algebra in the package. The
counting variable of the finite-field engines enters through q = v^-2.
RationalScalar adds integer denominators for the few derivations that pass
through 1/l; results leaving the package are always cleared back to
LaurentScalar.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import sympy

from src.errors import ArgumentError, NonClearingDivisionError

logger = logging.getLogger(__name__)

Number = Union[int, "LaurentScalar"]


class LaurentScalar:
    """
    Immutable Laurent polynomial in v with integer coefficients.

    Stored sparsely as exponent -> nonzero integer.
    """

    __slots__ = ("_c", "_hash")

    def __init__(self, coeffs: Optional[Mapping[int, int]] = None):
        cleaned: Dict[int, int] = {}
        if coeffs:
            for exp, c in coeffs.items():
                c = int(c)
                if c:
                    cleaned[int(exp)] = c
        self._c = cleaned
        self._hash: Optional[int] = None

    # Construction

    @classmethod
    def zero(cls) -> "LaurentScalar":
        return cls()

    @classmethod
    def one(cls) -> "LaurentScalar":
        return cls({0: 1})

    @classmethod
    def monomial(cls, exp: int, coeff: int = 1) -> "LaurentScalar":
        """Return coeff * v^exp."""
        return cls({exp: coeff})

    @classmethod
    def from_int(cls, n: int) -> "LaurentScalar":
        return cls({0: n})

    @classmethod
    def from_q_poly(cls, coeffs: Sequence[int]) -> "LaurentScalar":
        """
        Convert a polynomial in q (constant term first) using q = v^-2.

        Args:
            coeffs: Integer coefficients c_0, c_1, ... of sum c_k q^k

        Returns:
            The Laurent polynomial sum c_k v^(-2k)
        """
        return cls({-2 * k: c for k, c in enumerate(coeffs)})

    @classmethod
    def from_json(cls, data: Iterable[Sequence]) -> "LaurentScalar":
        """Parse the [[exponent, "coefficient"], ...] encoding."""
        try:
            return cls({int(exp): int(c) for exp, c in data})
        except (TypeError, ValueError) as e:
            raise ArgumentError(f"Malformed Laurent polynomial JSON: {data!r}") from e

    @staticmethod
    def coerce(x) -> "LaurentScalar":
        """Turn an int into a constant polynomial; pass LaurentScalar through."""
        if isinstance(x, LaurentScalar):
            return x
        if isinstance(x, int):
            return LaurentScalar({0: x})
        raise ArgumentError(f"Cannot use {type(x).__name__} as a Laurent coefficient")

    # Inspection

    def items(self) -> Iterator[Tuple[int, int]]:
        """Iterate (exponent, coefficient) pairs in increasing exponent order."""
        for exp in sorted(self._c):
            yield exp, self._c[exp]

    def coeff(self, exp: int) -> int:
        return self._c.get(exp, 0)

    @property
    def is_zero(self) -> bool:
        return not self._c

    @property
    def is_monomial(self) -> bool:
        return len(self._c) == 1

    def degree_range(self) -> Tuple[int, int]:
        """Lowest and highest exponent (raises on zero)."""
        if not self._c:
            raise ArgumentError("The zero polynomial has no degree range")
        return min(self._c), max(self._c)

    def content(self) -> int:
        """Gcd of the coefficients (0 for the zero polynomial)."""
        g = 0
        for c in self._c.values():
            g = gcd(g, c)
        return g

    def at_one(self) -> int:
        """Value at v = 1."""
        return sum(self._c.values())

    def at_q(self, q: int) -> Tuple[Fraction, Fraction]:
        """
        Specialize to a finite field size q, where v^2 = 1/q.

        Returns:
            (a, b) with the value equal to a + b*v
        """
        even = Fraction(0)
        odd = Fraction(0)
        for exp, c in self._c.items():
            if exp % 2 == 0:
                even += c * Fraction(q) ** (-(exp // 2))
            else:
                odd += c * Fraction(q) ** (-((exp - 1) // 2))
        return even, odd

    def is_nonnegative(self) -> bool:
        """True when every coefficient is >= 0 (membership in N[v, v^-1])."""
        return all(c >= 0 for c in self._c.values())

    def is_palindromic(self) -> bool:
        return self == self.bar()

    # Ring operations

    def __add__(self, other) -> "LaurentScalar":
        if not isinstance(other, (int, LaurentScalar)):
            return NotImplemented
        other = LaurentScalar.coerce(other)
        out = dict(self._c)
        for exp, c in other._c.items():
            out[exp] = out.get(exp, 0) + c
        return LaurentScalar(out)

    __radd__ = __add__

    def __neg__(self) -> "LaurentScalar":
        return LaurentScalar({exp: -c for exp, c in self._c.items()})

    def __sub__(self, other) -> "LaurentScalar":
        if not isinstance(other, (int, LaurentScalar)):
            return NotImplemented
        return self + (-LaurentScalar.coerce(other))

    def __rsub__(self, other) -> "LaurentScalar":
        if not isinstance(other, int):
            return NotImplemented
        return LaurentScalar.coerce(other) - self

    def __mul__(self, other) -> "LaurentScalar":
        if isinstance(other, int):
            return LaurentScalar({exp: c * other for exp, c in self._c.items()})
        if not isinstance(other, LaurentScalar):
            return NotImplemented
        out: Dict[int, int] = {}
        for e1, c1 in self._c.items():
            for e2, c2 in other._c.items():
                out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
        return LaurentScalar(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LaurentScalar":
        if n < 0:
            if self.is_monomial:
                ((exp, c),) = self._c.items()
                if c in (1, -1):
                    return LaurentScalar({exp * n: c ** (-n)})
            raise ArgumentError("Only unit monomials have negative powers")
        result = LaurentScalar.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, k: int) -> "LaurentScalar":
        """Multiply by v^k."""
        return LaurentScalar({exp + k: c for exp, c in self._c.items()})

    def bar(self) -> "LaurentScalar":
        """The bar involution v -> v^-1."""
        return LaurentScalar({-exp: c for exp, c in self._c.items()})

    def div_int(self, n: int) -> "LaurentScalar":
        """
        Divide every coefficient by an integer.

        Raises:
            NonClearingDivisionError: If some coefficient is not divisible by n
        """
        if n == 0:
            raise ArgumentError("Division by zero")
        out = {}
        for exp, c in self._c.items():
            quot, rem = divmod(c, n)
            if rem:
                raise NonClearingDivisionError(f"{self} is not divisible by {n}")
            out[exp] = quot
        return LaurentScalar(out)

    def exact_div(self, other: Number) -> "LaurentScalar":
        """
        Exact division in Z[v, v^-1].

        Both operands are normalized to polynomials with nonzero constant
        term; the quotient is then computed by integer long division from the
        leading coefficient.

        Args:
            other: Nonzero divisor

        Returns:
            The quotient

        Raises:
            NonClearingDivisionError: If the division does not clear
        """
        other = LaurentScalar.coerce(other)
        if other.is_zero:
            raise ArgumentError("Division by zero")
        if self.is_zero:
            return LaurentScalar()

        a_low = min(self._c)
        b_low = min(other._c)
        rem = {exp - a_low: c for exp, c in self._c.items()}
        div = {exp - b_low: c for exp, c in other._c.items()}
        b_top = max(div)
        b_lead = div[b_top]

        quot: Dict[int, int] = {}
        while rem:
            top = max(rem)
            if top < b_top:
                break
            c, r = divmod(rem[top], b_lead)
            if r:
                raise NonClearingDivisionError(f"({self}) / ({other}) has a non-integral coefficient")
            shift = top - b_top
            quot[shift] = c
            for exp, d in div.items():
                key = exp + shift
                value = rem.get(key, 0) - c * d
                if value:
                    rem[key] = value
                else:
                    rem.pop(key, None)
        if rem:
            raise NonClearingDivisionError(f"({self}) / ({other}) leaves a remainder")
        return LaurentScalar({exp + a_low - b_low: c for exp, c in quot.items()})

    # Comparison and hashing

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = LaurentScalar.coerce(other)
        if isinstance(other, RationalScalar):
            return other == self
        if not isinstance(other, LaurentScalar):
            return NotImplemented
        return self._c == other._c

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._c.items()))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._c)

    # Conversion

    def to_json(self) -> List[List]:
        """Encode as [[exponent, "coefficient"], ...] sorted by exponent."""
        return [[exp, str(c)] for exp, c in self.items()]

    def to_sympy(self, symbol: Optional[sympy.Symbol] = None) -> sympy.Expr:
        v = symbol if symbol is not None else sympy.Symbol("v")
        return sympy.Add(*[sympy.Integer(c) * v**exp for exp, c in self.items()])

    def __str__(self) -> str:
        if not self._c:
            return "0"
        pieces = []
        for exp in sorted(self._c, reverse=True):
            c = self._c[exp]
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if exp == 0:
                body = str(mag)
            else:
                power = "v" if exp == 1 else f"v^{exp}"
                body = power if mag == 1 else f"{mag}{power}"
            pieces.append((sign, body))
        first_sign, first_body = pieces[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"LaurentScalar({self})"


class RationalScalar:
    """
    Laurent polynomial over an integer denominator, kept reduced.

    Only used inside derivations that divide by integers (formal logarithms,
    the H generators); exported results are converted with to_laurent().
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Number, den: int = 1):
        if den == 0:
            raise ArgumentError("Zero denominator")
        num = LaurentScalar.coerce(num)
        if den < 0:
            num, den = -num, -den
        g = gcd(num.content(), den)
        if g > 1:
            num = num.div_int(g)
            den //= g
        if num.is_zero:
            den = 1
        self.num = num
        self.den = den

    @classmethod
    def from_fraction(cls, x: Fraction) -> "RationalScalar":
        return cls(LaurentScalar.from_int(x.numerator), x.denominator)

    @staticmethod
    def coerce(x) -> "RationalScalar":
        if isinstance(x, RationalScalar):
            return x
        if isinstance(x, Fraction):
            return RationalScalar.from_fraction(x)
        return RationalScalar(LaurentScalar.coerce(x))

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def __add__(self, other) -> "RationalScalar":
        if not isinstance(other, (int, Fraction, LaurentScalar, RationalScalar)):
            return NotImplemented
        other = RationalScalar.coerce(other)
        return RationalScalar(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "RationalScalar":
        return RationalScalar(-self.num, self.den)

    def __sub__(self, other) -> "RationalScalar":
        if not isinstance(other, (int, Fraction, LaurentScalar, RationalScalar)):
            return NotImplemented
        return self + (-RationalScalar.coerce(other))

    def __rsub__(self, other) -> "RationalScalar":
        return RationalScalar.coerce(other) - self

    def __mul__(self, other) -> "RationalScalar":
        if not isinstance(other, (int, Fraction, LaurentScalar, RationalScalar)):
            return NotImplemented
        other = RationalScalar.coerce(other)
        return RationalScalar(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, n: int) -> "RationalScalar":
        if not isinstance(n, int):
            return NotImplemented
        return RationalScalar(self.num, self.den * n)

    def shift(self, k: int) -> "RationalScalar":
        return RationalScalar(self.num.shift(k), self.den)

    def bar(self) -> "RationalScalar":
        return RationalScalar(self.num.bar(), self.den)

    def to_laurent(self) -> LaurentScalar:
        """
        Clear the denominator.

        Raises:
            NonClearingDivisionError: If the denominator is not 1
        """
        if self.den != 1:
            raise NonClearingDivisionError(f"({self.num})/{self.den} is not in Z[v, v^-1]")
        return self.num

    def __eq__(self, other) -> bool:
        if not isinstance(other, (int, Fraction, LaurentScalar, RationalScalar)):
            return NotImplemented
        other = RationalScalar.coerce(other)
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __bool__(self) -> bool:
        return not self.num.is_zero

    def to_json(self) -> Dict:
        return {"num": self.num.to_json(), "den": str(self.den)}

    def __str__(self) -> str:
        if self.den == 1:
            return str(self.num)
        return f"({self.num})/{self.den}"

    def __repr__(self) -> str:
        return f"RationalScalar({self})"


Scalar = Union[LaurentScalar, RationalScalar]

V = LaurentScalar.monomial(1)
V_INV = LaurentScalar.monomial(-1)


def v_power(n: int) -> LaurentScalar:
    """Return v^n."""
    return LaurentScalar.monomial(n)


def q_power(n: int) -> LaurentScalar:
    """Return q^n = v^(-2n)."""
    return LaurentScalar.monomial(-2 * n)


@lru_cache(maxsize=None)
def quantum_int(l: int) -> LaurentScalar:
    """
    The quantum integer [l] = v^(l-1) + v^(l-3) + ... + v^(1-l).

    Raises:
        ArgumentError: If l is negative
    """
    if l < 0:
        raise ArgumentError(f"Quantum integer needs l >= 0, got {l}")
    return LaurentScalar({l - 1 - 2 * i: 1 for i in range(l)})


@lru_cache(maxsize=None)
def quantum_factorial(l: int) -> LaurentScalar:
    """[l]! = [1][2]...[l], with [0]! = 1."""
    if l < 0:
        raise ArgumentError(f"Quantum factorial needs l >= 0, got {l}")
    result = LaurentScalar.one()
    for i in range(2, l + 1):
        result = result * quantum_int(i)
    return result


@lru_cache(maxsize=None)
def quantum_binomial(n: int, k: int) -> LaurentScalar:
    """Gaussian binomial [n]! / ([k]! [n-k]!)."""
    if n < 0 or k < 0 or k > n:
        raise ArgumentError(f"Quantum binomial needs 0 <= k <= n, got ({n}, {k})")
    return quantum_factorial(n).exact_div(quantum_factorial(k) * quantum_factorial(n - k))


def quantum_number(kind: str, *args: int) -> LaurentScalar:
    """
    Dispatch on the kind of quantum number.

    Args:
        kind: "int", "factorial" or "binomial"
        *args: l for the first two kinds, (n, k) for binomials

    Returns:
        The requested Laurent polynomial

    Raises:
        ArgumentError: For an unknown kind, wrong arity or negative input
    """
    builders = {"int": (quantum_int, 1), "factorial": (quantum_factorial, 1), "binomial": (quantum_binomial, 2)}
    if kind not in builders:
        raise ArgumentError(f"Unknown quantum number kind: {kind}")
    func, arity = builders[kind]
    if len(args) != arity:
        raise ArgumentError(f"{kind} takes {arity} argument(s), got {len(args)}")
    return func(*args)
