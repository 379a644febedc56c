"""
Canonical basis elements of the loop algebra for the projective line.

Constructors for the torsion elements b_lambda, the line elements b_O(t),
the two rank-2 families b_O(t)+O(t) and b_O(t)+O(t+1), a triangular solver
that completes a leading monomial to a bar-invariant element, and the
principal-subspace character computed from the vacuum reductions.
"""

import itertools
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from src.algebra.coeff import LaurentScalar, RationalScalar, Scalar, v_power
from src.algebra.linalg import laurent_rank, laurent_vector
from src.algebra.loopalg import (
    AlgElem,
    AlgTensor,
    FamilySeries,
    FiniteSeries,
    LineSeries,
    NormalMonomial,
    ProductSeries,
    SeriesElem,
    Window,
    bar_monomial,
    coproduct,
)
from src.algebra.symm import Partition, SymElem, chi, partitions_of, schur, schur_expand, xi
from src.errors import ArgumentError, CheckFailedError, UnboundedError
from src.geometry.starcomb import StarDiagram
from src.hall.cyclichall import HallElem, u_recursion

logger = logging.getLogger(__name__)

RANK2_KINDS = ("tt", "t,t+1")

_LINE_RE = re.compile(r"^O\((-?\d+)\)$")
_PAIR_RE = re.compile(r"^O\((-?\d+)\)\+O\((-?\d+)\)$")
_TORSION_RE = re.compile(r"^lambda:([\d,]*)$")


@dataclass(frozen=True)
class CanElement:
    """A canonical basis element: a label and the series it stands for."""

    label: str
    kind: str
    params: Tuple[int, ...]
    body: SeriesElem

    @property
    def cls(self) -> Tuple[int, int]:
        return self.body.cls

    def to_json(self, window: Window) -> Dict:
        data = self.body.restrict(window).to_json()
        k, d = self.cls
        return {"label": self.label, "class": {"k": k, "d": d}, "terms": data["terms"]}


def b_torsion(lam: Iterable[int]) -> CanElement:
    """b_lambda: the Schur element s_lambda in the torsion sector."""
    lam = Partition(lam)
    body = FiniteSeries(AlgElem.from_sym(schur(lam)), (0, lam.weight))
    return CanElement(f"lambda:{','.join(str(p) for p in lam)}", "torsion", tuple(lam), body)


@lru_cache(maxsize=None)
def _line_block(w: int) -> SymElem:
    return xi(w) * v_power(w)


def b_line(t: int) -> CanElement:
    """b_O(t) = E_t + sum_{l > 0} v^l E_{t-l} xi_l."""
    return CanElement(f"O({t})", "line", (t,), LineSeries(t, _line_block, label=f"b_O({t})"))


def _rank2_terms(t: int, kind: str, min_index: int) -> Dict[NormalMonomial, Scalar]:
    d = 2 * t if kind == "tt" else 2 * t + 1
    out: Dict[NormalMonomial, Scalar] = {}
    if kind == "tt" and t >= min_index:
        out[NormalMonomial((t, t))] = LaurentScalar.one()
    top = (d - 1) // 2
    # 2 t1 + t2 = d with t2 > 0
    for t1 in range(min_index, top + 1):
        t2 = d - 2 * t1
        out[NormalMonomial((t1, t1), (t2,))] = v_power(2 * t2)
    # t1 + t2 + t3 = d with t1 < t2 and t3 >= 0; for d = 2t + 1 this contains v^2 E_t E_{t+1}
    for t1 in range(min_index, top + 1):
        for t2 in range(t1 + 1, d - t1 + 1):
            t3 = d - t1 - t2
            out[NormalMonomial((t1, t2), (t3,) if t3 else ())] = v_power(1 + t2 - t1 + 2 * t3)
    return out


def b_rank2(t: int, kind: str) -> CanElement:
    """
    The displayed rank-2 sums for O(t)+O(t) (kind "tt") and O(t)+O(t+1).

    Args:
        t: Degree of the first summand
        kind: "tt" or "t,t+1"

    Raises:
        ArgumentError: For an unknown kind
    """
    if kind not in RANK2_KINDS:
        raise ArgumentError(f"Unknown rank-2 kind {kind!r}; expected one of {RANK2_KINDS}")
    d = 2 * t if kind == "tt" else 2 * t + 1
    label = f"O({t})+O({t})" if kind == "tt" else f"O({t})+O({t + 1})"
    body = FamilySeries((2, d), lambda m: _rank2_terms(t, kind, m), label=label)
    return CanElement(label, kind, (t,), body)


def rank2_lead(t: int, kind: str) -> NormalMonomial:
    return NormalMonomial((t, t) if kind == "tt" else (t, t + 1))


def parse_label(label: str) -> CanElement:
    """
    Build the element named by a label.

    Accepted forms: "lambda:2,1", "O(t)", "O(t)+O(t)", "O(t)+O(t+1)".
    """
    label = label.replace(" ", "")
    if match := _TORSION_RE.match(label):
        parts = [int(p) for p in match.group(1).split(",") if p]
        return b_torsion(parts)
    if match := _LINE_RE.match(label):
        return b_line(int(match.group(1)))
    if match := _PAIR_RE.match(label):
        a, b = int(match.group(1)), int(match.group(2))
        if a == b:
            return b_rank2(a, "tt")
        if b == a + 1:
            return b_rank2(a, "t,t+1")
        raise ArgumentError(f"Only O(t)+O(t) and O(t)+O(t+1) are available, got {label}")
    raise ArgumentError(f"Unrecognized basis label: {label!r}")


def shift_element(element: CanElement, n: int) -> CanElement:
    """The element whose label is shifted by n (torsion labels are fixed)."""
    if element.kind == "torsion":
        return element
    if element.kind == "line":
        return b_line(element.params[0] + n)
    return b_rank2(element.params[0] + n, element.kind)


# Bar-invariant completion


def _completion_candidates(lead: NormalMonomial, index_min: int) -> List[NormalMonomial]:
    k, d = lead.cls
    out = []
    if k == 1:
        for s in range(index_min, lead.eword[0]):
            out.extend(NormalMonomial((s,), lam) for lam in partitions_of(d - s))
    elif k == 2:
        for a in range(index_min, lead.eword[0] + 1):
            for b in range(a, d - a + 1):
                if (a, b) >= lead.eword:
                    continue
                out.extend(NormalMonomial((a, b), lam) for lam in partitions_of(d - a - b))
    else:
        raise UnboundedError(f"Completion is only certified up to rank 2, got rank {k}")
    return sorted(out, key=lambda mon: mon.eword, reverse=True)


def canonical_completion(lead: NormalMonomial, window: Window) -> AlgElem:
    """
    The bar-invariant element lead + sum c_nu nu with every c_nu in v Z[v].

    The bar image of a normal monomial is the monomial itself plus terms with
    a lexicographically smaller E-word, so the coefficients are solved from
    the top down: c_nu - bar(c_nu) equals the contribution of the terms
    already found, and c_nu keeps its positive-exponent part.

    bar(mu) keeps the xi factor of mu on the right, so it only reaches
    monomials of xi-weight at least that of mu. Candidates above window.xi_max
    never feed a coefficient inside the window and are skipped.

    Raises:
        ArgumentError: If lead carries xi factors or lies outside the window
        CheckFailedError: If some residual is not antisymmetric under bar
    """
    if lead.xi or lead.rank == 0:
        raise ArgumentError(f"Completion needs a pure E leading monomial, got {lead}")
    if lead.eword[0] < window.index_min:
        raise ArgumentError(f"Leading monomial {lead} lies below the window")
    support: Dict[NormalMonomial, LaurentScalar] = {lead: LaurentScalar.one()}
    bar_images: Dict[NormalMonomial, Dict[NormalMonomial, Scalar]] = {}
    for nu in _completion_candidates(lead, window.index_min):
        if nu.xi_weight > window.xi_max:
            continue
        residual = LaurentScalar.zero()
        for mu, c in support.items():
            if mu not in bar_images:
                bar_images[mu] = bar_monomial(mu).terms(window.index_min)
            value = bar_images[mu].get(nu)
            if value:
                residual = residual + c.bar() * value
        if not residual:
            continue
        if residual.bar() != -residual:
            raise CheckFailedError(
                f"Residual at {nu} is not antisymmetric", {"monomial": str(nu), "residual": str(residual)}
            )
        c_nu = LaurentScalar({exp: c for exp, c in residual.items() if exp > 0})
        support[nu] = c_nu
    logger.debug(f"Completion of {lead}: {len(support)} terms")
    return AlgElem(support).restrict(window)


def rank2_xi_free(t: int, kind: str, index_min: int) -> AlgElem:
    """
    xi-free part of the bar-invariant rank-2 element with leading monomial
    E_t^(2) or E_t E_{t+1}, for terms with indices >= index_min.

        "tt":    E_t^(2) + sum_{s >= 1} v^(2s-1) E_{t-s} E_{t+s}
        "t,t+1": sum_{s >= 0} v^(2s) E_{t-s} E_{t+1+s}

    A xi-bearing term never feeds the xi-free part of a bar image, and the
    xi-free part of bar(E_a E_b) is sum_l phi_l E_{a-l} E_{b+l} with
    sum_l phi_l z^l = (1 - v^-2 z) / (1 - v^2 z). These closed forms solve the
    resulting triangular system, so they are independent of the solver above.

    Raises:
        ArgumentError: For an unknown kind
    """
    if kind not in RANK2_KINDS:
        raise ArgumentError(f"Unknown rank-2 kind {kind!r}; expected one of {RANK2_KINDS}")
    terms: Dict[NormalMonomial, Scalar] = {}
    if kind == "tt":
        if t >= index_min:
            terms[NormalMonomial((t, t))] = LaurentScalar.one()
        for s in range(1, t - index_min + 1):
            terms[NormalMonomial((t - s, t + s))] = v_power(2 * s - 1)
    else:
        for s in range(0, t - index_min + 1):
            terms[NormalMonomial((t - s, t + 1 + s))] = v_power(2 * s)
    return AlgElem(terms)


# Checks on single elements


def bar_invariance(element: CanElement, window: Window) -> bool:
    return element.body.bar().restrict(window) == element.body.restrict(window)


def kappa_equivariance(label: str, n: int, window: Window) -> bool:
    """Shifting b_label by n agrees with the element of the shifted label on the window."""
    element = parse_label(label)
    return element.body.kappa(n).restrict(window) == shift_element(element, n).body.restrict(window)


def schur_coefficients(x: AlgElem) -> Dict[Tuple[Tuple[int, ...], Partition], Scalar]:
    """Coefficients of x with its xi-parts re-expanded in Schur elements."""
    grouped: Dict[Tuple[int, ...], SymElem] = {}
    for mon, c in x.terms.items():
        grouped[mon.eword] = grouped.get(mon.eword, SymElem.zero()) + SymElem.monomial(mon.xi, c)
    out = {}
    for eword, sym in grouped.items():
        for lam, c in schur_expand(sym).items():
            out[(eword, lam)] = c
    return out


def _is_natural(c: Scalar) -> bool:
    if isinstance(c, RationalScalar):
        return c.den == 1 and c.num.is_nonnegative()
    return c.is_nonnegative()


def is_positive(x: AlgElem) -> bool:
    """All coefficients in the normal basis with Schur torsion lie in N[v, v^-1]."""
    return all(_is_natural(c) for c in schur_coefficients(x).values())


def torsion_positivity(lam: Iterable[int], mu: Iterable[int]) -> bool:
    return is_positive(b_torsion(lam).body.elem * b_torsion(mu).body.elem)


def line_torsion_positivity(s: int, lam: Iterable[int], window: Window) -> bool:
    product = ProductSeries(b_line(s).body, b_torsion(lam).body)
    return is_positive(product.restrict(window))


# Inverting the line elements


@lru_cache(maxsize=None)
def _compositions_of(n: int) -> Tuple[Tuple[int, ...], ...]:
    if n == 0:
        return ((),)
    return tuple((first,) + rest for first in range(1, n + 1) for rest in _compositions_of(n - first))


@lru_cache(maxsize=None)
def _psi_torsion(n: int) -> SymElem:
    # sum over compositions (a_1..a_r) of n of (-1)^r v^n xi_{a_r} ... xi_{a_1}
    total = SymElem.zero()
    for parts in _compositions_of(n):
        term = SymElem.one()
        for a in reversed(parts):
            term = term * xi(a)
        total = total + (term * -1 if len(parts) % 2 else term)
    return total * v_power(n)


class PsiSeries(SeriesElem):
    """sum_n (-1)^n sum_{a_i >= 1} v^(sum a) b_O(t - sum a) xi_{a_n} ... xi_{a_1}."""

    def __init__(self, t: int):
        super().__init__((1, t))
        self.t = t

    def _compute_terms(self, min_index: int) -> Dict[NormalMonomial, Scalar]:
        out: Dict[NormalMonomial, Scalar] = {}
        for n in range(0, self.t - min_index + 1):
            torsion = FiniteSeries(AlgElem.from_sym(_psi_torsion(n)), (0, n))
            for mon, c in ProductSeries(b_line(self.t - n).body, torsion).terms(min_index).items():
                out[mon] = out[mon] + c if mon in out else c
        return out


def psi_E(t: int) -> SeriesElem:
    """E_t rewritten through the line elements; collapses back to E_t."""
    return PsiSeries(t)


def telescoping_check(t: int, window: Window) -> bool:
    return psi_E(t).restrict(window) == AlgElem.E(t).restrict(window)


def line_coproduct(t: int, left_cls: Tuple[int, int], right_cls: Tuple[int, int], window: Window) -> AlgTensor:
    """
    A component of Delta(b_O(t)) from its two one-sided families.

    Delta(b_O(t)) = sum_m v^m b_O(t - m) (x) xi_m + v^-m xi_m (x) b_O(t - m);
    every other component vanishes.
    """
    (k_left, d_left), (k_right, d_right) = left_cls, right_cls
    if (k_left, k_right) == (1, 0):
        m, sign = d_right, 1
    elif (k_left, k_right) == (0, 1):
        m, sign = d_left, -1
    else:
        return AlgTensor()
    if m < 0 or d_left + d_right != t:
        return AlgTensor()
    line = b_line(t - m).body.restrict(window)
    torsion = AlgElem.xi((m,)) if m else AlgElem.one()
    pair = AlgTensor.tensor(line, torsion) if sign > 0 else AlgTensor.tensor(torsion, line)
    return pair * v_power(sign * m)


def coproduct_through_lines(left_cls: Tuple[int, int], right_cls: Tuple[int, int], window: Window) -> AlgTensor:
    """
    Delta(E_t) assembled from E_t = sum_n v^n b_O(t - n) chi_n.

    Each factor's coproduct comes from line_coproduct and
    Delta(chi_{i+j}) = chi_i (x) chi_j; the factors are multiplied in the
    tensor square. Restricting a line factor to the window first is exact,
    since multiplying by torsion keeps E-indices and only adds xi-weight.
    """
    (k_left, d_left), (k_right, d_right) = left_cls, right_cls
    t = d_left + d_right
    out = AlgTensor()
    if k_left + k_right != 1:
        return out
    for n in range(0, t - window.index_min + 1):
        for j in range(n + 1):
            line = line_coproduct(t - n, (k_left, d_left - j), (k_right, d_right - n + j), window)
            if line.is_zero:
                continue
            torsion = AlgTensor.tensor(AlgElem.from_sym(chi(j)), AlgElem.from_sym(chi(n - j)))
            out = out + line.product(torsion) * v_power(n)
    return out.restrict(window)


def coproduct_identity(window: Window, left_cls: Tuple[int, int], right_cls: Tuple[int, int]) -> bool:
    """Delta(E_0) assembled through the line elements matches the generator formula."""
    through_lines = coproduct_through_lines(left_cls, right_cls, window)
    return through_lines == coproduct(AlgElem.E(0), left_cls, right_cls).restrict(window)


@dataclass(frozen=True)
class CorrectionTerm:
    """xi_n times the rotated u_{n_i} of each branch (None where n_i = 0)."""

    n: int
    parts: Tuple[int, ...]
    factors: Tuple[Optional[HallElem], ...]

    def to_json(self) -> Dict:
        return {
            "xi": self.n,
            "parts": list(self.parts),
            "factors": [f.to_json() if f is not None else None for f in self.factors],
        }


@dataclass(frozen=True)
class XiExpansion:
    """xi_l = b_{l delta} - sum of correction terms."""

    l: int
    weights: Tuple[int, ...]
    correction: Tuple[CorrectionTerm, ...]

    @property
    def is_trivial(self) -> bool:
        return not self.correction

    def to_json(self) -> Dict:
        return {"l": self.l, "weights": list(self.weights), "correction": [c.to_json() for c in self.correction]}


def _inverse_rotation(x: HallElem, p: int) -> HallElem:
    for _ in range(p - 1):
        x = x.rotate()
    return x


def _branch_splits(total: int, n_branches: int) -> Iterator[Tuple[int, ...]]:
    for parts in itertools.product(range(total + 1), repeat=n_branches):
        if sum(parts) == total:
            yield parts


def xi_from_b(weights: Sequence[int], l: int) -> XiExpansion:
    """
    Express xi_l through b_{l delta} and cyclic-quiver data.

    Args:
        weights: Branch weights of the star diagram (empty for the projective line)
        l: Degree

    Raises:
        ArgumentError: If l is negative or a weight is invalid
        BoundsExceededError: If some u_{n_i} is beyond the cyclic-quiver bounds
    """
    diagram = StarDiagram(tuple(weights))
    if l < 0:
        raise ArgumentError(f"xi_l needs l >= 0, got {l}")
    terms = []
    if diagram.n_branches:
        for n in range(l):
            for parts in _branch_splits(l - n, diagram.n_branches):
                factors = tuple(
                    _inverse_rotation(u_recursion(p, k), p) if k else None
                    for p, k in zip(diagram.weights, parts)
                )
                terms.append(CorrectionTerm(n, parts, factors))
    return XiExpansion(l, diagram.weights, tuple(terms))


# Principal subspace


def vacuum(x: AlgElem) -> AlgElem:
    """Keep the terms that survive on the vacuum: no xi and every index negative."""
    return AlgElem({mon: c for mon, c in x.terms.items() if not mon.xi and all(t < 0 for t in mon.eword)})


def vacuum_reduction(kind: str, t: int) -> AlgElem:
    """
    The displayed rank-2 element acting on the vacuum, for t < 0.

    Raises:
        ArgumentError: If t >= 0 or the kind is unknown
    """
    if t >= 0:
        raise ArgumentError(f"Vacuum reductions are taken for t < 0, got {t}")
    element = b_rank2(t, kind)
    return vacuum(AlgElem(element.body.terms(2 * t)))


def _completion_reduction(kind: str, t: int) -> AlgElem:
    d = 2 * t if kind == "tt" else 2 * t + 1
    if d > -2:
        # no monomial of this class has every index negative
        return AlgElem.zero()
    return vacuum(canonical_completion(rank2_lead(t, kind), Window(d + 1, -1, 0)))


def rank2_acting_on_letter(kind: str, t: int, s: int, source: str = "printed") -> AlgElem:
    """
    b * E_s applied to the vacuum, for s < 0.

    A term E_a E_b xi_lambda of b survives only when |lambda| <= -1 - s (each
    xi part raises the index of E_s and xi alone kills the vacuum) and a is at
    least the lowest index a negative monomial of the product class can have
    (straightening never lowers the smallest index). That finite part of b is
    multiplied by E_s exactly.

    Raises:
        ArgumentError: If s >= 0 or the kind or source is unknown
    """
    if s >= 0:
        raise ArgumentError(f"The letter must have a negative index, got {s}")
    if source not in ("printed", "completion"):
        raise ArgumentError(f"Unknown relation source {source!r}")
    if kind not in RANK2_KINDS:
        raise ArgumentError(f"Unknown rank-2 kind {kind!r}; expected one of {RANK2_KINDS}")
    e = 2 * t if kind == "tt" else 2 * t + 1
    lowest = e + s + 2
    lead = rank2_lead(t, kind)
    if lowest > -1 or lead.eword[0] < lowest:
        # no term of b starts above its lead
        return AlgElem.zero()
    window = Window(lowest, e - lowest, -1 - s)
    if source == "printed":
        part = b_rank2(t, kind).body.restrict(window)
    else:
        part = canonical_completion(lead, window)
    return vacuum(part * AlgElem.E(s))


def _negative_monomials(k: int, d: int) -> List[NormalMonomial]:
    indices = range(d + k - 1, 0)
    return [NormalMonomial(e) for e in itertools.combinations_with_replacement(indices, k) if sum(e) == d]


def difference_two_count(k: int, d: int) -> int:
    """Monomials t_1 <= ... <= t_k <= -1 of sum d with consecutive gaps at least 2."""
    return sum(
        1 for mon in _negative_monomials(k, d) if all(b - a >= 2 for a, b in zip(mon.eword, mon.eword[1:]))
    )


def principal_character(window: Window, k_max: int = 3, source: str = "printed") -> Dict[Tuple[int, int], int]:
    """
    Graded dimensions of the principal subspace on the vacuum.

    The space of class (k, d) is spanned by normal monomials with all indices
    negative; relations are the vacuum reductions of the rank-2 elements
    (t < 0) multiplied on either side by negative E-monomials. Line elements
    with t >= 0 reduce to zero and add nothing. Products of negative
    monomials stay negative, so each class is a finite computation.

    Args:
        window: index_min bounds the lowest index of every monomial counted
        k_max: Largest number of E factors (at most 3)
        source: "printed" for the displayed rank-2 sums, "completion" for the solved ones

    Returns:
        (k, d) -> dimension over Q(v)
    """
    if not 1 <= k_max <= 3:
        raise ArgumentError(f"k_max must be between 1 and 3, got {k_max}")
    if source not in ("printed", "completion"):
        raise ArgumentError(f"Unknown relation source {source!r}")
    reduce = vacuum_reduction if source == "printed" else _completion_reduction

    def relation_label(e: int) -> Tuple[str, int]:
        return ("tt", e // 2) if e % 2 == 0 else ("t,t+1", (e - 1) // 2)

    def relation_element(e: int) -> AlgElem:
        return reduce(*relation_label(e))

    dims = {}
    for k in range(1, k_max + 1):
        for d in range(window.index_min - k + 1, -k + 1):
            basis = _negative_monomials(k, d)
            relations: List[AlgElem] = []
            if k == 2:
                relations.append(relation_element(d))
            elif k == 3:
                for s in range(d + 1, 0):
                    kind, t = relation_label(d - s)
                    relations.append(vacuum(AlgElem.E(s) * relation_element(d - s)))
                    relations.append(rank2_acting_on_letter(kind, t, s, source))
            rank = laurent_rank([laurent_vector(rel.terms, basis) for rel in relations]) if relations else 0
            dims[(k, d)] = len(basis) - rank
            logger.debug(f"W0[{k}, {d}]: {len(basis)} monomials, {len(relations)} relations, rank {rank}")
    return dims
