"""
The loop algebra of sl_2 in PBW normal form.

Elements are combinations of normal monomials E_{t_1} ... E_{t_k} xi_lambda
with weakly increasing indices; a run of r equal indices stands for the
divided power E_t^(r), so the integral form has Laurent coefficients.
Products are computed by a memoized straightening system:

    E_s E_t     -> v^-2 E_t E_s + v^-2 E_{s-1} E_{t+1} - E_{t+1} E_{s-1}   (s > t + 1)
    E_{t+1} E_t -> v^-2 E_t E_{t+1}
    xi_n E_t    -> sum_{m=0}^{n} [m+1] E_{t+m} xi_{n-m}

Infinite elements of the completion (the bar images of E_t, the canonical
elements) are SeriesElem objects that can list all their terms whose
E-indices are bounded below. Coefficients of products are extracted from
finitely many leaf terms, with lower bounds derived from two facts:
straightening a decreasing pair (s, t) only produces pairs inside [t, s],
and moving xi past E only raises E-indices while lowering xi-weight.
"""

import itertools
import logging
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from src.algebra.coeff import LaurentScalar, RationalScalar, Scalar, quantum_factorial, quantum_int, v_power
from src.algebra.symm import EMPTY, Partition, SymElem, chi, partitions_of, theta, xi
from src.errors import ArgumentError, NonClearingDivisionError, UnboundedError

logger = logging.getLogger(__name__)

E_LETTER = 0
XI_LETTER = 1

Letter = Tuple[int, int]
Class = Tuple[int, int]

ONE = LaurentScalar.one()
V_MINUS_2 = v_power(-2)


@dataclass(frozen=True, order=True)
class NormalMonomial:
    """E_{t_1} ... E_{t_k} xi_lambda with t_1 <= ... <= t_k; runs are divided powers."""

    eword: Tuple[int, ...] = ()
    xi: Partition = EMPTY

    def __post_init__(self):
        eword = tuple(int(t) for t in self.eword)
        if any(a > b for a, b in zip(eword, eword[1:])):
            raise ArgumentError(f"E-indices must be weakly increasing: {eword}")
        object.__setattr__(self, "eword", eword)
        object.__setattr__(self, "xi", Partition(self.xi))

    @property
    def rank(self) -> int:
        return len(self.eword)

    @property
    def xi_weight(self) -> int:
        return self.xi.weight

    @property
    def degree(self) -> int:
        return sum(self.eword) + self.xi.weight

    @property
    def cls(self) -> Class:
        return (self.rank, self.degree)

    @property
    def min_index(self) -> Optional[int]:
        return self.eword[0] if self.eword else None

    def runs(self) -> List[Tuple[int, int]]:
        """(index, multiplicity) for each run of equal indices."""
        return [(t, len(list(group))) for t, group in itertools.groupby(self.eword)]

    def run_factorial(self) -> LaurentScalar:
        result = ONE
        for _, r in self.runs():
            result = result * quantum_factorial(r)
        return result

    def letters(self) -> Tuple[Letter, ...]:
        """The plain word: E letters then xi letters."""
        return tuple((E_LETTER, t) for t in self.eword) + tuple((XI_LETTER, n) for n in self.xi)

    def kappa(self, n: int) -> "NormalMonomial":
        return NormalMonomial(tuple(t + n for t in self.eword), self.xi)

    def in_window(self, window: "Window") -> bool:
        return (
            all(window.index_min <= t <= window.index_max for t in self.eword)
            and self.xi_weight <= window.xi_max
        )

    def to_json(self) -> Dict:
        return {"eword": list(self.eword), "xi": list(self.xi)}

    def __str__(self) -> str:
        pieces = []
        for t, r in self.runs():
            pieces.append(f"E({t})" if r == 1 else f"E({t})^({r})")
        if self.xi:
            pieces.append(f"xi{tuple(self.xi)}")
        return "".join(pieces) or "1"


@dataclass(frozen=True)
class Window:
    """Truncation box: E-indices in [index_min, index_max], xi-weight at most xi_max."""

    index_min: int = -6
    index_max: int = 6
    xi_max: int = 6

    def __post_init__(self):
        if self.index_min > self.index_max:
            raise ArgumentError(f"Empty window [{self.index_min}, {self.index_max}]")
        if self.xi_max < 0:
            raise ArgumentError(f"xi_max must be nonnegative, got {self.xi_max}")

    @classmethod
    def from_config(cls, config) -> "Window":
        return cls(config.index_min, config.index_max, config.xi_max)


def census(window: Window, k: int, d: int) -> List[NormalMonomial]:
    """All normal monomials of class (k, d) inside the window."""
    out = []
    indices = range(window.index_min, window.index_max + 1)
    for eword in itertools.combinations_with_replacement(indices, k):
        w = d - sum(eword)
        if 0 <= w <= window.xi_max:
            out.extend(NormalMonomial(eword, lam) for lam in partitions_of(w))
    return sorted(out)


# Straightening


def _violations(letters: Sequence[Letter]) -> List[int]:
    out = []
    for i in range(len(letters) - 1):
        (ka, a), (kb, b) = letters[i], letters[i + 1]
        if ka == XI_LETTER and kb == E_LETTER:
            out.append(i)
        elif ka == E_LETTER and kb == E_LETTER and a > b:
            out.append(i)
    return out


def _rewrite_at(letters: Tuple[Letter, ...], pos: int) -> List[Tuple[Tuple[Letter, ...], LaurentScalar]]:
    (ka, a), (_, b) = letters[pos], letters[pos + 1]
    head, tail = letters[:pos], letters[pos + 2 :]
    if ka == XI_LETTER:
        out = []
        for m in range(a + 1):
            middle = ((E_LETTER, b + m),) + (((XI_LETTER, a - m),) if m < a else ())
            out.append((head + middle + tail, quantum_int(m + 1)))
        return out
    s, t = a, b
    if s == t + 1:
        return [(head + ((E_LETTER, t), (E_LETTER, s)) + tail, V_MINUS_2)]
    return [
        (head + ((E_LETTER, t), (E_LETTER, s)) + tail, V_MINUS_2),
        (head + ((E_LETTER, s - 1), (E_LETTER, t + 1)) + tail, V_MINUS_2),
        (head + ((E_LETTER, t + 1), (E_LETTER, s - 1)) + tail, -ONE),
    ]


def _terminal_key(letters: Sequence[Letter]) -> Tuple[Tuple[int, ...], Partition]:
    return (
        tuple(x for kind, x in letters if kind == E_LETTER),
        Partition(x for kind, x in letters if kind == XI_LETTER),
    )


@lru_cache(maxsize=None)
def _plain_normal_form(letters: Tuple[Letter, ...]) -> Tuple[Tuple[Tuple[Tuple[int, ...], Partition], LaurentScalar], ...]:
    # Always rewrites the leftmost violation; memoized on the word.
    found = _violations(letters)
    if not found:
        return ((_terminal_key(letters), ONE),)
    acc: Dict[Tuple[Tuple[int, ...], Partition], LaurentScalar] = {}
    for new_letters, c in _rewrite_at(letters, found[0]):
        for key, c2 in _plain_normal_form(new_letters):
            acc[key] = acc.get(key, LaurentScalar.zero()) + c * c2
    return tuple((key, c) for key, c in acc.items() if c)


def straighten_in_order(
    letters: Sequence[Letter],
    pick: Callable[[List[int]], int],
    memo: Optional[Dict[Tuple[Letter, ...], Dict]] = None,
) -> Dict[Tuple[Tuple[int, ...], Partition], LaurentScalar]:
    """
    Plain normal form, rewriting whichever violation pick chooses.

    Used to compare rewriting orders. With a memo dict, each intermediate word
    is normalized once, in the order pick chose on its first visit.
    """
    letters = tuple(letters)
    if memo is not None and letters in memo:
        return memo[letters]
    found = _violations(letters)
    if not found:
        return {_terminal_key(letters): ONE}
    acc: Dict[Tuple[Tuple[int, ...], Partition], LaurentScalar] = {}
    for new_letters, c in _rewrite_at(letters, pick(found)):
        for key, c2 in straighten_in_order(new_letters, pick, memo).items():
            acc[key] = acc.get(key, LaurentScalar.zero()) + c * c2
    result = {key: c for key, c in acc.items() if c}
    if memo is not None:
        memo[letters] = result
    return result


def random_order_normal_form(letters: Sequence[Letter], seed: int) -> "AlgElem":
    """Normal form of a plain word using a seeded random rewriting order."""
    rng = random.Random(seed)
    plain = straighten_in_order(letters, lambda found: rng.choice(found), memo={})
    return _divided_from_plain(plain.items())


def rewrite_measure(letters: Sequence[Letter]) -> Tuple[int, int]:
    """
    Termination measure of the straightening system, compared lexicographically.

    First: for each xi letter, the number of E letters to its right. Second:
    sum of a - b over pairs of E letters with a before b and a > b. R3 lowers
    the first; R1 and R2 keep the first and lower the second.
    """
    crossings = 0
    e_seen = 0
    for kind, _ in reversed(letters):
        if kind == E_LETTER:
            e_seen += 1
        else:
            crossings += e_seen
    eword = [x for kind, x in letters if kind == E_LETTER]
    inversions = sum(a - b for a, b in itertools.combinations(eword, 2) if a > b)
    return crossings, inversions


def local_rewrites(letters: Sequence[Letter]) -> Dict[int, List[Tuple[Tuple[Letter, ...], LaurentScalar]]]:
    """Every single rewrite step available on a plain word, keyed by position."""
    letters = tuple(letters)
    return {pos: _rewrite_at(letters, pos) for pos in _violations(letters)}


def plain_normal_form(letters: Sequence[Letter]) -> Dict[Tuple[Tuple[int, ...], Partition], LaurentScalar]:
    """Plain normal form under the leftmost rewriting order."""
    return dict(_plain_normal_form(tuple(letters)))


def _divided_from_plain(items: Iterable[Tuple[Tuple[Tuple[int, ...], Partition], Scalar]]) -> "AlgElem":
    terms: Dict[NormalMonomial, Scalar] = {}
    for (eword, lam), c in items:
        mon = NormalMonomial(eword, lam)
        value = c * mon.run_factorial()
        terms[mon] = terms[mon] + value if mon in terms else value
    return AlgElem(terms)


def straighten(word: Sequence[int], xi_part: Iterable[int] = (), coeff: Scalar = None) -> "AlgElem":
    """
    Normal form of coeff * E_{w_1} ... E_{w_k} xi_lambda (plain product).

    Args:
        word: E-indices in any order
        xi_part: Partition of the trailing xi factor
        coeff: Scalar multiplier (default 1)
    """
    letters = tuple((E_LETTER, int(t)) for t in word) + tuple((XI_LETTER, n) for n in Partition(xi_part))
    result = _divided_from_plain(_plain_normal_form(letters))
    return result if coeff is None else result * coeff


@lru_cache(maxsize=None)
def _mul_monomials(a: NormalMonomial, b: NormalMonomial) -> Tuple[Tuple[NormalMonomial, LaurentScalar], ...]:
    denominator = a.run_factorial() * b.run_factorial()
    out = []
    for (eword, lam), c in _plain_normal_form(a.letters() + b.letters()):
        mon = NormalMonomial(eword, lam)
        try:
            out.append((mon, (c * mon.run_factorial()).exact_div(denominator)))
        except NonClearingDivisionError as e:
            raise NonClearingDivisionError(f"Product {a} * {b} leaves the integral form at {mon}") from e
    return tuple(out)


def xi_commutation_table(n: int) -> List[Tuple[int, LaurentScalar]]:
    """Coefficients c_m of xi_n E_t = sum_m c_m E_{t+m} xi_{n-m}."""
    if n < 1:
        raise ArgumentError(f"xi commutation needs n >= 1, got {n}")
    return [(m, quantum_int(m + 1)) for m in range(n + 1)]


def xi_commutation_oracle(n: int) -> List[RationalScalar]:
    """
    The same coefficients from conjugation by exp(sum_l H_(l) s^l).

    [H_(l), E_t] = ((v^l + v^-l)/l) E_{t+l}, so c_m is the s^m coefficient of
    exp(sum_l (v^l + v^-l) s^l / l), computed exactly over the rationals.
    """
    series = [RationalScalar(1)]
    for k in range(1, n + 1):
        acc = RationalScalar(0)
        for i in range(1, k + 1):
            acc = acc + series[k - i] * (v_power(i) + v_power(-i))
        series.append(acc / k)
    return series


# Finite elements


class AlgElem:
    """Finite homogeneous combination of normal monomials."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[NormalMonomial, Scalar]] = None):
        cleaned: Dict[NormalMonomial, Scalar] = {}
        classes = set()
        for mon, c in (terms or {}).items():
            if isinstance(c, int):
                c = LaurentScalar.from_int(c)
            if c:
                cleaned[mon] = c
                classes.add(mon.cls)
        if len(classes) > 1:
            raise ArgumentError(f"Element mixes classes {sorted(classes)}")
        self.terms = cleaned

    @classmethod
    def zero(cls) -> "AlgElem":
        return cls()

    @classmethod
    def one(cls) -> "AlgElem":
        return cls({NormalMonomial(): ONE})

    @classmethod
    def E(cls, t: int, n: int = 1) -> "AlgElem":
        """The divided power E_t^(n) (a single normal monomial)."""
        if n < 0:
            raise ArgumentError(f"Divided power needs n >= 0, got {n}")
        return cls({NormalMonomial((t,) * n): ONE})

    @classmethod
    def xi(cls, lam: Iterable[int]) -> "AlgElem":
        return cls({NormalMonomial((), Partition(lam)): ONE})

    @classmethod
    def monomial(cls, eword: Sequence[int], lam: Iterable[int] = (), coeff: Scalar = None) -> "AlgElem":
        return cls({NormalMonomial(tuple(eword), Partition(lam)): ONE if coeff is None else coeff})

    @classmethod
    def from_sym(cls, s: SymElem) -> "AlgElem":
        return cls({NormalMonomial((), lam): c for lam, c in s.terms.items()})

    @classmethod
    def from_json(cls, data: Mapping) -> "AlgElem":
        try:
            return cls(
                {
                    NormalMonomial(tuple(t["eword"]), Partition(t["xi"])): LaurentScalar.from_json(t["coeff"])
                    for t in data["terms"]
                }
            )
        except (KeyError, TypeError) as e:
            raise ArgumentError(f"Malformed AlgElem JSON: {data!r}") from e

    @property
    def cls(self) -> Optional[Class]:
        for mon in self.terms:
            return mon.cls
        return None

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, mon: NormalMonomial) -> Scalar:
        return self.terms.get(mon, LaurentScalar.zero())

    def items(self) -> Iterator[Tuple[NormalMonomial, Scalar]]:
        for mon in sorted(self.terms):
            yield mon, self.terms[mon]

    def __add__(self, other: "AlgElem") -> "AlgElem":
        if not isinstance(other, AlgElem):
            return NotImplemented
        out = dict(self.terms)
        for mon, c in other.terms.items():
            out[mon] = out[mon] + c if mon in out else c
        return AlgElem(out)

    def __neg__(self) -> "AlgElem":
        return AlgElem({mon: -c for mon, c in self.terms.items()})

    def __sub__(self, other: "AlgElem") -> "AlgElem":
        if not isinstance(other, AlgElem):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, AlgElem):
            out: Dict[NormalMonomial, Scalar] = {}
            for a, ca in self.terms.items():
                for b, cb in other.terms.items():
                    for mon, c in _mul_monomials(a, b):
                        value = ca * cb * c
                        out[mon] = out[mon] + value if mon in out else value
            return AlgElem(out)
        if isinstance(other, (int, LaurentScalar, RationalScalar)):
            return AlgElem({mon: c * other for mon, c in self.terms.items()})
        if isinstance(other, SeriesElem):
            return FiniteSeries(self) * other
        return NotImplemented

    def __rmul__(self, other) -> "AlgElem":
        if isinstance(other, (int, LaurentScalar, RationalScalar)):
            return self * other
        return NotImplemented

    def __pow__(self, n: int) -> "AlgElem":
        if n < 0:
            raise ArgumentError("Negative powers are not defined")
        result = AlgElem.one()
        for _ in range(n):
            result = result * self
        return result

    def bar(self) -> "SeriesElem":
        return FiniteSeries(self).bar()

    def kappa(self, n: int) -> "AlgElem":
        """Shift every E-index by n."""
        return AlgElem({mon.kappa(n): c for mon, c in self.terms.items()})

    def restrict(self, window: Window) -> "AlgElem":
        return AlgElem({mon: c for mon, c in self.terms.items() if mon.in_window(window)})

    def plain_terms(self) -> Dict[NormalMonomial, LaurentScalar]:
        """Coefficients on plain products E_{t_1} ... E_{t_k} xi_lambda instead of divided powers."""
        out = {}
        for mon, c in self.terms.items():
            value = c.to_laurent() if isinstance(c, RationalScalar) else c
            out[mon] = value.exact_div(mon.run_factorial())
        return out

    def at_one(self) -> Dict[NormalMonomial, int]:
        """Specialize v = 1."""
        out = {}
        for mon, c in self.terms.items():
            value = c.to_laurent().at_one() if isinstance(c, RationalScalar) else c.at_one()
            if value:
                out[mon] = value
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgElem):
            return NotImplemented
        if set(self.terms) != set(other.terms):
            return False
        return all(self.terms[m] == other.terms[m] for m in self.terms)

    def to_json(self) -> Dict:
        k, d = self.cls or (0, 0)
        return {
            "class": {"k": k, "d": d},
            "terms": [{**mon.to_json(), "coeff": c.to_json()} for mon, c in self.items()],
        }

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({c}){mon}" for mon, c in self.items())

    def __repr__(self) -> str:
        return f"AlgElem({self})"


def mul(a: AlgElem, b: AlgElem) -> AlgElem:
    return a * b


def divided_power(t: int, n: int) -> AlgElem:
    """
    E_t^n / [n]!, computed by repeated multiplication and exact division.

    Raises:
        NonClearingDivisionError: If some coefficient does not clear
    """
    if n < 1:
        raise ArgumentError(f"Divided power needs n >= 1, got {n}")
    power = AlgElem.E(t) ** n
    denominator = quantum_factorial(n)
    return AlgElem({mon: c.exact_div(denominator) for mon, c in power.terms.items()})


def kappa(x, n: int):
    """The shift automorphism E_t -> E_{t+n} on finite or series elements."""
    return x.kappa(n)


# Series in the completion


def _filter_min(terms: Mapping[NormalMonomial, Scalar], min_index: int) -> Dict[NormalMonomial, Scalar]:
    return {mon: c for mon, c in terms.items() if mon.rank == 0 or mon.eword[0] >= min_index}


def _accumulate(out: Dict[NormalMonomial, Scalar], mon: NormalMonomial, value: Scalar):
    if mon in out:
        out[mon] = out[mon] + value
    else:
        out[mon] = value


class SeriesElem(ABC):
    """
    Homogeneous element of the completion.

    terms(min_index) lists every term whose E-indices are all >= min_index;
    the list is complete and enlarging it never changes earlier coefficients.
    """

    def __init__(self, cls: Class):
        self.cls = cls
        self._memo: Dict[int, Dict[NormalMonomial, Scalar]] = {}

    @property
    def rank(self) -> int:
        return self.cls[0]

    @property
    def degree(self) -> int:
        return self.cls[1]

    @abstractmethod
    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        """All terms with E-indices >= min_index."""

    @property
    def is_finite(self) -> bool:
        return False

    def terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        if min_index not in self._memo:
            computed = self._compute_terms(min_index)
            self._memo[min_index] = {mon: c for mon, c in computed.items() if c}
        return self._memo[min_index]

    def coefficient(self, mon: NormalMonomial) -> Scalar:
        if mon.cls != self.cls:
            return LaurentScalar.zero()
        min_index = mon.min_index if mon.rank else 0
        return self.terms(min_index).get(mon, LaurentScalar.zero())

    def restrict(self, window: Window) -> AlgElem:
        return AlgElem({mon: c for mon, c in self.terms(window.index_min).items() if mon.in_window(window)})

    def _check_class(self, other: "SeriesElem"):
        if self.cls != other.cls:
            raise ArgumentError(f"Cannot add series of classes {self.cls} and {other.cls}")

    def __add__(self, other) -> "SeriesElem":
        if isinstance(other, AlgElem):
            other = FiniteSeries(other, self.cls)
        if not isinstance(other, SeriesElem):
            return NotImplemented
        self._check_class(other)
        return SumSeries([self, other])

    __radd__ = __add__

    def __neg__(self) -> "SeriesElem":
        return ScaledSeries(self, -ONE)

    def __sub__(self, other) -> "SeriesElem":
        if isinstance(other, AlgElem):
            other = FiniteSeries(other, self.cls)
        if not isinstance(other, SeriesElem):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other) -> "SeriesElem":
        if isinstance(other, (int, LaurentScalar, RationalScalar)):
            return ScaledSeries(self, other)
        if isinstance(other, AlgElem):
            other = FiniteSeries(other)
        if isinstance(other, SeriesElem):
            return ProductSeries(self, other)
        return NotImplemented

    def __rmul__(self, other) -> "SeriesElem":
        if isinstance(other, (int, LaurentScalar, RationalScalar)):
            return ScaledSeries(self, other)
        if isinstance(other, AlgElem):
            return ProductSeries(FiniteSeries(other), self)
        return NotImplemented

    def bar(self) -> "SeriesElem":
        return BarSeries(self)

    def kappa(self, n: int) -> "SeriesElem":
        return KappaSeries(self, n)


class FiniteSeries(SeriesElem):
    """A finite element viewed as a series."""

    def __init__(self, elem: AlgElem, cls: Optional[Class] = None):
        if elem.cls is None and cls is None:
            raise ArgumentError("The class of a zero element must be given")
        if elem.cls is not None and cls is not None and elem.cls != cls:
            raise ArgumentError(f"Element of class {elem.cls} declared as {cls}")
        super().__init__(elem.cls or cls)
        self.elem = elem

    @property
    def is_finite(self) -> bool:
        return True

    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        return _filter_min(self.elem.terms, min_index)


class LineSeries(SeriesElem):
    """sum_{w >= 0} E_{t-w} block(w), with block(w) of xi-weight w."""

    def __init__(self, t: int, block: Callable[[int], SymElem], label: str = ""):
        super().__init__((1, t))
        self.t = t
        self.block = block
        self.label = label

    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        out = {}
        for w in range(0, self.t - min_index + 1):
            for lam, c in self.block(w).terms.items():
                out[NormalMonomial((self.t - w,), lam)] = c
        return out


class FamilySeries(SeriesElem):
    """A series given directly by a term enumerator."""

    def __init__(self, cls: Class, enumerate_terms: Callable[[int], Dict[NormalMonomial, Scalar]], label: str = ""):
        super().__init__(cls)
        self.enumerate_terms = enumerate_terms
        self.label = label

    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        return _filter_min(self.enumerate_terms(min_index), min_index)


class SumSeries(SeriesElem):
    def __init__(self, parts: Sequence[SeriesElem]):
        super().__init__(parts[0].cls)
        self.parts = list(parts)

    @property
    def is_finite(self) -> bool:
        return all(p.is_finite for p in self.parts)

    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        out: Dict[NormalMonomial, Scalar] = {}
        for part in self.parts:
            for mon, c in part.terms(min_index).items():
                _accumulate(out, mon, c)
        return out


class ScaledSeries(SeriesElem):
    def __init__(self, inner: SeriesElem, scalar: Scalar):
        super().__init__(inner.cls)
        self.inner = inner
        self.scalar = LaurentScalar.coerce(scalar) if isinstance(scalar, int) else scalar

    @property
    def is_finite(self) -> bool:
        return self.inner.is_finite

    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        return {mon: c * self.scalar for mon, c in self.inner.terms(min_index).items()}


class DividedSeries(SeriesElem):
    """inner / denominator, with every coefficient divided exactly."""

    def __init__(self, inner: SeriesElem, denominator: LaurentScalar):
        super().__init__(inner.cls)
        self.inner = inner
        self.denominator = denominator

    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        return {mon: c.exact_div(self.denominator) for mon, c in self.inner.terms(min_index).items()}


class KappaSeries(SeriesElem):
    def __init__(self, inner: SeriesElem, n: int):
        super().__init__((inner.rank, inner.degree + inner.rank * n))
        self.inner = inner
        self.n = n

    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        return {mon.kappa(self.n): c for mon, c in self.inner.terms(min_index - self.n).items()}


class ProductSeries(SeriesElem):
    """
    Product of two series of total rank at most 2, or of two finite elements.

    For a target with E-indices >= a:
      - a rank-0 left factor of degree d raises right indices by at most d,
        so right terms need indices >= a - d;
      - a rank-1 left factor keeps its letter x >= a (x either stays first
        or is the larger member of a straightened pair), and a right
        letter y satisfies y >= 2a - d_left.
    """

    def __init__(self, left: SeriesElem, right: SeriesElem):
        super().__init__((left.rank + right.rank, left.degree + right.degree))
        self.left = left
        self.right = right

    @property
    def is_finite(self) -> bool:
        return self.left.is_finite and self.right.is_finite

    def _factor_bounds(self, a: int) -> Tuple[int, int]:
        kl, kr = self.left.rank, self.right.rank
        dl = self.left.degree
        if kl == 0:
            return a, a - dl
        if kr == 0:
            return a, a
        if kl == 1 and kr == 1:
            return a, 2 * a - dl
        raise UnboundedError(f"Cannot bound a product of ranks {kl} and {kr}")

    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        if self.is_finite:
            left_terms = self.left.terms(-(10**9))
            right_terms = self.right.terms(-(10**9))
        else:
            left_min, right_min = self._factor_bounds(min_index)
            left_terms = self.left.terms(left_min)
            right_terms = self.right.terms(right_min)
        out: Dict[NormalMonomial, Scalar] = {}
        for a, ca in left_terms.items():
            for b, cb in right_terms.items():
                for mon, c in _mul_monomials(a, b):
                    if mon.rank and mon.eword[0] < min_index:
                        continue
                    _accumulate(out, mon, ca * cb * c)
        return out


@lru_cache(maxsize=None)
def bar_block(w: int) -> SymElem:
    """xi-part of the coefficient of E_{t-w} in bar(E_t): sum_{m+k=w} v^(m-k) xi_m chi_k."""
    total = SymElem.zero()
    for m in range(w + 1):
        total = total + xi(m) * chi(w - m) * v_power(2 * m - w)
    return total


@lru_cache(maxsize=None)
def bar_E(t: int) -> LineSeries:
    return LineSeries(t, bar_block, label=f"bar(E_{t})")


def bar_monomial(mon: NormalMonomial) -> SeriesElem:
    """bar of a normal monomial: prod bar(E_t)^r / [r]! times xi_lambda."""
    result: SeriesElem = FiniteSeries(AlgElem.one())
    for t, r in mon.runs():
        power: SeriesElem = bar_E(t)
        for _ in range(r - 1):
            power = ProductSeries(power, bar_E(t))
        if r > 1:
            power = DividedSeries(power, quantum_factorial(r))
        result = ProductSeries(result, power)
    if mon.xi:
        result = ProductSeries(result, FiniteSeries(AlgElem.xi(mon.xi)))
    return result


class BarSeries(SeriesElem):
    """
    Bar involution of a series of rank at most 2.

    bar(mu) only reaches targets with E-indices >= a when every letter of mu
    is >= a, so inner.terms(a) suffices.
    """

    def __init__(self, inner: SeriesElem):
        super().__init__(inner.cls)
        if inner.rank > 2:
            raise UnboundedError(f"Bar involution is only certified up to rank 2, got rank {inner.rank}")
        self.inner = inner

    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        out: Dict[NormalMonomial, Scalar] = {}
        for mon, c in self.inner.terms(min_index).items():
            c_bar = c.bar()
            for target, value in bar_monomial(mon).terms(min_index).items():
                _accumulate(out, target, c_bar * value)
        return out


def bar(x) -> SeriesElem:
    """Bar involution of a finite element or a series."""
    if isinstance(x, AlgElem):
        return x.bar()
    if isinstance(x, SeriesElem):
        return x.bar()
    raise ArgumentError(f"Cannot apply bar to {type(x).__name__}")


def as_series(x, cls: Optional[Class] = None) -> SeriesElem:
    if isinstance(x, SeriesElem):
        return x
    if isinstance(x, AlgElem):
        return FiniteSeries(x, cls)
    raise ArgumentError(f"Cannot view {type(x).__name__} as a series")


def coefficient(expr, mon: NormalMonomial) -> Scalar:
    """
    Exact coefficient of a normal monomial in a finite element or series.

    Raises:
        UnboundedError: If the expression cannot certify a finite set of contributions
    """
    if isinstance(expr, AlgElem):
        return expr.coeff(mon)
    return as_series(expr).coefficient(mon)


def brute_force_coefficient(left: SeriesElem, right: SeriesElem, mon: NormalMonomial, slack: int) -> Scalar:
    """Coefficient of mon in left * right using cutoffs lowered by slack on both factors."""
    a = mon.min_index if mon.rank else 0
    low = min(a, 2 * a - left.degree, a - left.degree) - slack
    total: Scalar = LaurentScalar.zero()
    for x, cx in left.terms(low).items():
        for y, cy in right.terms(low).items():
            for target, c in _mul_monomials(x, y):
                if target == mon:
                    total = total + cx * cy * c
    return total


# Drinfeld coproduct


class AlgTensor:
    """Finite combination of pairs (left monomial, right monomial)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Tuple[NormalMonomial, NormalMonomial], Scalar]] = None):
        cleaned = {}
        for pair, c in (terms or {}).items():
            if isinstance(c, int):
                c = LaurentScalar.from_int(c)
            if c:
                cleaned[pair] = c
        self.terms = cleaned

    @classmethod
    def tensor(cls, a: AlgElem, b: AlgElem) -> "AlgTensor":
        return cls({(x, y): cx * cy for x, cx in a.terms.items() for y, cy in b.terms.items()})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "AlgTensor") -> "AlgTensor":
        out = dict(self.terms)
        for pair, c in other.terms.items():
            out[pair] = out[pair] + c if pair in out else c
        return AlgTensor(out)

    def __neg__(self) -> "AlgTensor":
        return AlgTensor({pair: -c for pair, c in self.terms.items()})

    def __sub__(self, other: "AlgTensor") -> "AlgTensor":
        return self + (-other)

    def __mul__(self, scalar) -> "AlgTensor":
        return AlgTensor({pair: c * scalar for pair, c in self.terms.items()})

    __rmul__ = __mul__

    def product(self, other: "AlgTensor") -> "AlgTensor":
        """Multiplication in the tensor square: (a (x) b)(c (x) d) = v^(-2 rk(b) rk(c)) ac (x) bd."""
        out = AlgTensor()
        for (a, b), cx in self.terms.items():
            for (c, d), cy in other.terms.items():
                left = AlgElem({a: ONE}) * AlgElem({c: ONE})
                right = AlgElem({b: ONE}) * AlgElem({d: ONE})
                out = out + AlgTensor.tensor(left, right) * (cx * cy * v_power(-2 * b.rank * c.rank))
        return out

    def restrict(self, window: Window) -> "AlgTensor":
        return AlgTensor(
            {(a, b): c for (a, b), c in self.terms.items() if a.in_window(window) and b.in_window(window)}
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgTensor):
            return NotImplemented
        if set(self.terms) != set(other.terms):
            return False
        return all(self.terms[p] == other.terms[p] for p in self.terms)

    def to_json(self) -> Dict:
        return {
            "terms": [
                {"left": a.to_json(), "right": b.to_json(), "coeff": c.to_json()}
                for (a, b), c in sorted(self.terms.items())
            ]
        }

    def __repr__(self) -> str:
        body = " + ".join(f"({c}){a} x {b}" for (a, b), c in sorted(self.terms.items()))
        return f"AlgTensor({body or '0'})"


def _compositions(total: int, caps: Sequence[Optional[int]]) -> Iterator[Tuple[int, ...]]:
    """Tuples of nonnegative integers summing to total, part i at most caps[i] when given."""
    if not caps:
        if total == 0:
            yield ()
        return
    cap = caps[0] if caps[0] is not None else total
    for first in range(min(cap, total) + 1):
        for rest in _compositions(total - first, caps[1:]):
            yield (first,) + rest


def word_coproduct(letters: Sequence[Letter], left_cls: Class, right_cls: Class) -> AlgTensor:
    """
    The (left_cls, right_cls) component of the coproduct of a plain word.

    Letters map to E_t -> E_t (x) 1 + sum_l theta_l (x) E_{t-l} and
    xi_N -> sum_{i+j=N} xi_i (x) xi_j, multiplied in the tensor square with
    (a (x) b)(c (x) d) = v^(-2 rk(b) rk(c)) ac (x) bd.
    """
    letters = tuple(letters)
    k_left, d_left = left_cls
    k_right, d_right = right_cls
    e_positions = [i for i, (kind, _) in enumerate(letters) if kind == E_LETTER]
    total_degree = sum(x for _, x in letters)
    if k_left + k_right != len(e_positions) or d_left + d_right != total_degree:
        return AlgTensor()
    out = AlgTensor()
    for left_set in itertools.combinations(e_positions, k_left):
        budget = d_left - sum(letters[i][1] for i in left_set)
        if budget < 0:
            continue
        slots = [i for i in range(len(letters)) if i not in left_set]
        caps = [letters[i][1] if letters[i][0] == XI_LETTER else None for i in slots]
        for parts in _compositions(budget, caps):
            share = dict(zip(slots, parts))
            left = AlgElem.one()
            right = AlgElem.one()
            right_rank = 0
            twist = 0
            for i, (kind, x) in enumerate(letters):
                if kind == E_LETTER and i in left_set:
                    twist -= 2 * right_rank
                    left = left * AlgElem.E(x)
                elif kind == E_LETTER:
                    left = left * AlgElem.from_sym(theta(share[i]))
                    right = right * AlgElem.E(x - share[i])
                    right_rank += 1
                else:
                    left = left * AlgElem.xi((share[i],))
                    right = right * AlgElem.xi((x - share[i],))
            out = out + AlgTensor.tensor(left, right) * v_power(twist)
    return out


def coproduct(x, left_cls: Class, right_cls: Class, window: Optional[Window] = None) -> AlgTensor:
    """
    A bigraded component of the Drinfeld coproduct.

    Args:
        x: AlgElem, or a SeriesElem of rank at most 1 (then window is required)
        left_cls: (rank, degree) of the left tensor factor
        right_cls: (rank, degree) of the right tensor factor
        window: Restrict the result to monomials inside this window

    Raises:
        UnboundedError: For series of rank 2 or more, or a series without a window
    """
    if isinstance(x, SeriesElem):
        if isinstance(x, FiniteSeries):
            terms = x.elem.terms
        else:
            if window is None:
                raise UnboundedError("A window is required to take the coproduct of a series")
            if x.rank > 1:
                raise UnboundedError(f"Coproduct of series is only certified up to rank 1, got {x.rank}")
            terms = x.terms(window.index_min)
    else:
        terms = x.terms
    out = AlgTensor()
    for mon, c in terms.items():
        part = word_coproduct(mon.letters(), left_cls, right_cls)
        denominator = mon.run_factorial()
        if denominator != ONE:
            part = AlgTensor({pair: value.exact_div(denominator) for pair, value in part.terms.items()})
        out = out + part * c
    return out.restrict(window) if window is not None else out


def quadratic_relation_words(t1: int, t2: int) -> List[Tuple[LaurentScalar, Tuple[Letter, ...]]]:
    """
    The defining quadratic relation as plain words summing to zero:

    v^2 E_{t1+1} E_{t2} - E_{t2} E_{t1+1} - E_{t1} E_{t2+1} + v^2 E_{t2+1} E_{t1}.
    """
    v2 = v_power(2)

    def word(a: int, b: int) -> Tuple[Letter, ...]:
        return ((E_LETTER, a), (E_LETTER, b))

    return [
        (v2, word(t1 + 1, t2)),
        (-ONE, word(t2, t1 + 1)),
        (-ONE, word(t1, t2 + 1)),
        (v2, word(t2 + 1, t1)),
    ]
