"""
Exact linear algebra over Q(v) and interpolation in q.

Vectors with LaurentScalar entries are shifted row by row into Z[v] and
handed to sympy's DomainMatrix, which computes ranks and echelon forms over
the fraction field. Finite-field counts are turned into polynomials in q
with sympy's interpolation.
"""

import logging
from typing import Dict, List, Mapping, Optional, Sequence

import sympy
from sympy.polys.matrices import DomainMatrix
from sympy.polys.polyfuncs import interpolate

from src.algebra.coeff import LaurentScalar
from src.errors import InterpolationError

logger = logging.getLogger(__name__)

V_SYMBOL = sympy.Symbol("v")
Q_SYMBOL = sympy.Symbol("q")


def _polynomial_rows(rows: Sequence[Sequence[LaurentScalar]]) -> List[List[sympy.Expr]]:
    out = []
    for row in rows:
        lows = [c.degree_range()[0] for c in row if not c.is_zero]
        shift = -min(lows) if lows else 0
        out.append([c.shift(shift).to_sympy(V_SYMBOL) for c in row])
    return out


def to_domain_matrix(rows: Sequence[Sequence[LaurentScalar]]) -> Optional[DomainMatrix]:
    """
    DomainMatrix over the fraction field of Z[v] (None for an empty list).

    Rows are multiplied by powers of v, which preserves row spaces.
    """
    if not rows:
        return None
    poly_rows = _polynomial_rows(rows)
    matrix = DomainMatrix.from_list_sympy(len(poly_rows), len(poly_rows[0]), poly_rows)
    return matrix.to_field()


def laurent_rank(rows: Sequence[Sequence[LaurentScalar]]) -> int:
    """Rank over Q(v) of a list of Laurent vectors."""
    matrix = to_domain_matrix([row for row in rows if any(not c.is_zero for c in row)])
    if matrix is None:
        return 0
    return matrix.rank()


def in_span(rows: Sequence[Sequence[LaurentScalar]], vector: Sequence[LaurentScalar]) -> bool:
    """Whether vector lies in the Q(v)-span of rows."""
    if all(c.is_zero for c in vector):
        return True
    return laurent_rank(list(rows) + [list(vector)]) == laurent_rank(rows)


def solve_in_span(
    rows: Sequence[Sequence[LaurentScalar]], vector: Sequence[LaurentScalar]
) -> Optional[List[sympy.Expr]]:
    """
    Coefficients c with sum c_i rows[i] = vector, as rational functions of v.

    Returns:
        One solution (free coefficients set to 0), or None if vector is not in the span
    """
    if not rows:
        return [] if all(c.is_zero for c in vector) else None
    n = len(rows)
    columns = [[rows[i][j] for i in range(n)] + [vector[j]] for j in range(len(vector))]
    lows = [c.degree_range()[0] for row in columns for c in row if not c.is_zero]
    shift = -min(lows) if lows else 0
    exprs = [[c.shift(shift).to_sympy(V_SYMBOL) for c in row] for row in columns]
    matrix = DomainMatrix.from_list_sympy(len(exprs), n + 1, exprs).to_field()
    reduced, pivots = matrix.rref()
    if n in pivots:
        return None
    solution = [sympy.Integer(0)] * n
    dense = reduced.to_Matrix()
    for r, c in enumerate(pivots):
        solution[c] = sympy.simplify(dense[r, n])
    return solution


def interpolate_counts(
    counts: Mapping[int, int], check: Optional[Mapping[int, int]] = None, max_degree: Optional[int] = None
) -> List[int]:
    """
    Fit integer counts at several field sizes with a polynomial in q.

    Args:
        counts: q -> count used for the fit
        check: Held-out q -> count that the fit must reproduce
        max_degree: Known degree bound; more points than max_degree + 1 are required

    Returns:
        Integer coefficients, constant term first

    Raises:
        InterpolationError: If the fit is not integral, too few points are given,
            or a held-out count disagrees
    """
    if max_degree is not None and len(counts) < max_degree + 1:
        raise InterpolationError(f"Need {max_degree + 1} points for degree {max_degree}, got {len(counts)}")
    points = sorted(counts.items())
    if len(points) == 1:
        expr = sympy.Integer(points[0][1])
    else:
        expr = interpolate(points, Q_SYMBOL)
    poly = sympy.Poly(sympy.expand(expr), Q_SYMBOL)
    coeffs = list(reversed(poly.all_coeffs()))
    if any(not c.is_integer for c in coeffs):
        raise InterpolationError(f"Counts {dict(points)} are not an integral polynomial in q")
    if max_degree is not None and len(coeffs) - 1 > max_degree:
        raise InterpolationError(f"Fit of degree {len(coeffs) - 1} exceeds the bound {max_degree}")
    result = [int(c) for c in coeffs]
    for q, expected in (check or {}).items():
        value = sum(c * q**k for k, c in enumerate(result))
        if value != expected:
            raise InterpolationError(f"Interpolated count {value} disagrees with {expected} at q = {q}")
    while len(result) > 1 and result[-1] == 0:
        result.pop()
    logger.debug(f"Interpolated {dict(points)} -> {result}")
    return result


def evaluate_q_poly(coeffs: Sequence[int], q: int) -> int:
    return sum(c * q**k for k, c in enumerate(coeffs))


def laurent_vector(coords: Dict, keys: Sequence) -> List[LaurentScalar]:
    """Dense vector of coords over an ordered key list (missing keys are 0)."""
    zero = LaurentScalar.zero()
    return [coords.get(k, zero) for k in keys]
