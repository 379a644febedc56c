"""
Verification suites for loopcanon.

Each suite runs a family of exact checks drawn from the algebra, Hall and
geometry modules and returns one CheckResult per check. Suites are
independent; run_suites evaluates them on a worker pool and assembles the
results in request order.
"""

import itertools
import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from src.algebra.canbasis import (
    RANK2_KINDS,
    b_line,
    b_rank2,
    b_torsion,
    bar_invariance,
    canonical_completion,
    coproduct_identity,
    difference_two_count,
    line_torsion_positivity,
    principal_character,
    rank2_lead,
    rank2_xi_free,
    telescoping_check,
    torsion_positivity,
)
from src.algebra.coeff import V, quantum_int, v_power
from src.algebra.loopalg import (
    E_LETTER,
    XI_LETTER,
    AlgElem,
    AlgTensor,
    Window,
    bar,
    local_rewrites,
    plain_normal_form,
    quadratic_relation_words,
    random_order_normal_form,
    rewrite_measure,
    straighten,
    word_coproduct,
    xi_commutation_oracle,
    xi_commutation_table,
)
from src.algebra.symm import SymElem, chi, h_generator, partitions_of, series_exp, theta, xi
from src.errors import ArgumentError, CheckFailedError, InterpolationError
from src.geometry.starcomb import (
    StarDiagram,
    aut_count,
    basis_class,
    cartan_matrix,
    dim_borel,
    dim_end,
    symmetric_form,
)
from src.hall.cyclichall import (
    Q_POINTS,
    CDim,
    in_generated_subalgebra,
    orbits,
    serre_check,
    structure_degree_bound,
    structure_polys,
    u_recursion,
)
from src.hall.p1hall import CHECK_NAMES, HallWindow, closed_points, identity_checks, rational_point_count
from src.utils.cache import get_structure_cache
from src.utils.config import Config

logger = logging.getLogger(__name__)

Counterexample = Optional[Dict]


@dataclass
class CheckResult:
    """Outcome of a single named check."""

    name: str
    passed: bool
    seconds: float
    counterexample: Counterexample = None
    informational: bool = False

    @property
    def status(self) -> str:
        if self.informational:
            return "info"
        return "pass" if self.passed else "fail"

    def to_json(self) -> Dict:
        return {
            "name": self.name,
            "status": self.status,
            "seconds": round(self.seconds, 3),
            "counterexample": self.counterexample,
        }


def _run(name: str, body: Callable[[], Counterexample], informational: bool = False) -> CheckResult:
    """
    Time a check body that returns None on success or a counterexample.

    CheckFailedError and InterpolationError raised by the body count as
    failures; every other error propagates.
    """
    start = time.perf_counter()
    try:
        counterexample = body()
    except CheckFailedError as e:
        counterexample = {"error": str(e), **e.counterexample}
    except InterpolationError as e:
        counterexample = {"error": str(e)}
    seconds = time.perf_counter() - start
    passed = counterexample is None
    if not passed and not informational:
        logger.error(f"Check {name} failed: {counterexample}")
    else:
        logger.debug(f"Check {name} finished in {seconds:.2f}s")
    return CheckResult(name, passed, seconds, counterexample, informational)


def _first_failure(cases: Iterable[Tuple], check: Callable[..., bool], describe: Callable[..., Dict]) -> Counterexample:
    for args in cases:
        if not check(*args):
            return describe(*args)
    return None


def _nonzero(terms: Dict) -> Dict:
    return {k: v for k, v in terms.items() if v}


# Straightening


def _straightening_support(max_gap: int) -> Counterexample:
    # E_s E_0 only reaches E_j E_{s-j}, no xi
    for s in range(1, max_gap + 1):
        allowed = {(j, s - j) for j in range(s // 2 + 1)}
        for mon, _ in straighten([s, 0]).items():
            if mon.xi or mon.eword not in allowed:
                return {"word": [s, 0], "monomial": str(mon)}
    return None


def _random_word(rng: random.Random, max_length: int = 5, span: int = 6, xi_part: int = 3) -> Tuple:
    length = rng.randint(2, max_length)
    letters = []
    for _ in range(length):
        if rng.random() < 0.25:
            letters.append((XI_LETTER, rng.randint(1, xi_part)))
        else:
            letters.append((E_LETTER, rng.randint(-span, span)))
    if all(kind == XI_LETTER for kind, _ in letters):
        letters[0] = (E_LETTER, 0)
    return tuple(letters)


def _random_confluence(seed: int, samples: int) -> Counterexample:
    rng = random.Random(seed)
    for _ in range(samples):
        word = _random_word(rng)
        s1, s2 = rng.randrange(2**31), rng.randrange(2**31)
        if random_order_normal_form(word, s1) != random_order_normal_form(word, s2):
            return {"word": [list(letter) for letter in word], "seeds": [s1, s2]}
    return None


def _diamond_words(span: int, xi_part: int) -> Iterable[Tuple]:
    for triple in itertools.product(range(span + 1), repeat=3):
        yield tuple((E_LETTER, t) for t in triple)
    for n in range(1, xi_part + 1):
        for pair in itertools.product(range(span + 1), repeat=2):
            yield ((XI_LETTER, n),) + tuple((E_LETTER, t) for t in pair)


def _diamonds(span: int, xi_part: int = 3) -> Counterexample:
    # every first rewrite step, finished in the leftmost order, reaches the same normal form
    for letters in _diamond_words(span, xi_part):
        steps = local_rewrites(letters)
        if len(steps) < 2:
            continue
        reached = []
        for pos, terms in sorted(steps.items()):
            acc: Dict = {}
            for new_letters, c in terms:
                for key, c2 in plain_normal_form(new_letters).items():
                    acc[key] = acc.get(key, c.zero()) + c * c2
            reached.append(_nonzero(acc))
        if any(r != reached[0] for r in reached[1:]):
            return {"word": [list(letter) for letter in letters], "positions": sorted(steps)}
    return None


def _measure_decrease(seed: int, samples: int) -> Counterexample:
    rng = random.Random(seed)
    for _ in range(samples):
        word = _random_word(rng)
        before = rewrite_measure(word)
        for pos, terms in local_rewrites(word).items():
            for new_letters, _ in terms:
                if rewrite_measure(new_letters) >= before:
                    return {"word": [list(letter) for letter in word], "position": pos}
    return None


def _xi_commutation(n_max: int) -> Counterexample:
    for n in range(1, n_max + 1):
        oracle = xi_commutation_oracle(n)
        for m, c in xi_commutation_table(n):
            if oracle[m] != c:
                return {"n": n, "m": m, "rule": str(c), "oracle": str(oracle[m])}
    return None


def suite_confluence(
    config: Config, samples: int = 10000, span: int = 8, max_gap: int = 12, xi_n: int = 5
) -> List[CheckResult]:
    """Straightening soundness: support, termination, random rewriting orders, diamonds and the xi rule."""
    return [
        _run("confluence:support", lambda: _straightening_support(max_gap)),
        _run("confluence:termination", lambda: _measure_decrease(config.seed, samples)),
        _run("confluence:random-order", lambda: _random_confluence(config.seed, samples)),
        _run("confluence:diamonds", lambda: _diamonds(span)),
        _run("confluence:xi-commutation", lambda: _xi_commutation(xi_n)),
    ]


# Bar involution


def _random_element(rng: random.Random) -> AlgElem:
    word = [rng.randint(-2, 2) for _ in range(rng.randint(1, 2))]
    weight = rng.randint(0, 2)
    lam = rng.choice(partitions_of(weight)) if weight else ()
    return straighten(word, xi_part=lam)


def _involution(seed: int, samples: int, window: Window) -> Counterexample:
    rng = random.Random(seed)
    for _ in range(samples):
        x = _random_element(rng)
        if bar(bar(x)).restrict(window) != x.restrict(window):
            return {"element": str(x)}
    return None


def _line_window(t: int, xi_max: int) -> Window:
    return Window(t - xi_max, t, xi_max)


def _rank2_window(t: int, xi_max: Optional[int] = None) -> Window:
    # without xi_max: every monomial of the class with indices >= t - 4
    return Window(t - 4, t + 6, 9 if xi_max is None else xi_max)


@lru_cache(maxsize=None)
def _solved_rank2(t: int, kind: str) -> AlgElem:
    return canonical_completion(rank2_lead(t, kind), _rank2_window(t))


def _completion_fixed(t: int, kind: str, xi_max: int) -> bool:
    x = _solved_rank2(t, kind)
    shown = _rank2_window(t, xi_max)
    return bar(x).restrict(shown) == x.restrict(shown)


def _printed_vs_completion(t_values: Sequence[int], xi_max: int) -> Counterexample:
    differences = []
    for t in t_values:
        for kind in RANK2_KINDS:
            shown = _rank2_window(t, xi_max)
            printed = b_rank2(t, kind).body.restrict(shown)
            solved = _solved_rank2(t, kind).restrict(shown)
            diff = printed - solved
            if not diff.is_zero:
                differences.append({"t": t, "kind": kind, "printed_minus_solved": str(diff)})
    return {"differences": differences} if differences else None


def _solved_xi_free(t_values: Sequence[int]) -> Counterexample:
    for t in t_values:
        for kind in RANK2_KINDS:
            flat = _rank2_window(t, 0)
            solved = _solved_rank2(t, kind).restrict(flat)
            expected = rank2_xi_free(t, kind, flat.index_min)
            if solved != expected:
                return {"t": t, "kind": kind, "solved_minus_closed_form": str(solved - expected)}
    return None


def _printed_leading(t_values: Sequence[int]) -> Counterexample:
    """Bar test on the xi-free part of the displayed sums, scaled to a leading coefficient of 1."""
    defects = []
    for t in t_values:
        for kind in RANK2_KINDS:
            flat = _rank2_window(t, 0)
            printed = b_rank2(t, kind).body.restrict(flat)
            lead = printed.terms[rank2_lead(t, kind)]
            # the displayed leads are 1 and v^2
            scaled = printed * (v_power(-2) if kind == "t,t+1" else v_power(0))
            defect = bar(scaled).restrict(flat) - scaled
            if not defect.is_zero:
                defects.append({"t": t, "kind": kind, "lead_coeff": str(lead), "bar_minus_scaled": str(defect)})
    return {"defects": defects} if defects else None


def suite_bar(
    config: Config,
    samples: int = 100,
    torsion_weight: int = 6,
    line_range: Tuple[int, int] = (-3, 3),
    rank2_range: Tuple[int, int] = (-3, 0),
) -> List[CheckResult]:
    """Bar is an involution and fixes every canonical element we construct."""
    xi_max = config.xi_max
    involution_window = Window(config.index_min, config.index_max, min(xi_max, 4))
    torsion = [(lam,) for w in range(1, torsion_weight + 1) for lam in partitions_of(w)]
    t_lines = range(line_range[0], line_range[1] + 1)
    t_rank2 = range(rank2_range[0], rank2_range[1] + 1)
    rank2 = [(t, kind) for t in t_rank2 for kind in RANK2_KINDS]
    rank2_xi = min(xi_max, 4)
    return [
        _run("bar:involution", lambda: _involution(config.seed, samples, involution_window)),
        _run(
            "bar:torsion",
            lambda: _first_failure(
                torsion,
                lambda lam: bar_invariance(b_torsion(lam), Window(0, 0, torsion_weight)),
                lambda lam: {"partition": list(lam)},
            ),
        ),
        _run(
            "bar:line",
            lambda: _first_failure(
                [(t,) for t in t_lines], lambda t: bar_invariance(b_line(t), _line_window(t, xi_max)), lambda t: {"label": f"O({t})"}
            ),
        ),
        _run(
            "bar:rank2",
            lambda: _first_failure(
                rank2, lambda t, kind: _completion_fixed(t, kind, rank2_xi), lambda t, kind: {"t": t, "kind": kind}
            ),
        ),
        _run("bar:rank2-xi-free", lambda: _solved_xi_free(t_rank2)),
        _run("bar:rank2-leading", lambda: _printed_leading(t_rank2), informational=True),
        _run(
            "bar:rank2-printed",
            lambda: _printed_vs_completion(t_rank2, rank2_xi),
            informational=True,
        ),
    ]


# Positivity


def suite_positivity(config: Config, max_weight: int = 8, line_range: Tuple[int, int] = (-1, 1)) -> List[CheckResult]:
    """Torsion products and line-times-torsion products have coefficients in N[v, v^-1]."""
    pairs = [
        (lam, mu)
        for a in range(1, max_weight)
        for b in range(1, max_weight - a + 1)
        for lam in partitions_of(a)
        for mu in partitions_of(b)
    ]
    line_cases = [(s, lam) for s in range(line_range[0], line_range[1] + 1) for w in (1, 2) for lam in partitions_of(w)]
    return [
        _run(
            "positivity:torsion",
            lambda: _first_failure(
                pairs, torsion_positivity, lambda lam, mu: {"lambda": list(lam), "mu": list(mu)}
            ),
        ),
        _run(
            "positivity:line-torsion",
            lambda: _first_failure(
                line_cases,
                lambda s, lam: line_torsion_positivity(s, lam, Window(s - 3, s + 3, 3)),
                lambda s, lam: {"line": f"O({s})", "lambda": list(lam)},
            ),
        ),
    ]


# Line elements


def suite_telescoping(config: Config, t_values: Optional[Sequence[int]] = None) -> List[CheckResult]:
    """E_t rewritten through the line elements collapses back to E_t."""
    t_values = list(range(-2, 3)) if t_values is None else list(t_values)
    return [
        _run(
            f"telescoping:t={t}",
            lambda t=t: None if telescoping_check(t, _line_window(t, config.xi_max)) else {"t": t},
        )
        for t in t_values
    ]


# Coproduct


_RELATION_CLASSES = ((2, 1), (0, 0)), ((0, 0), (2, 1)), ((0, 2), (2, -1)), ((1, 0), (1, 1)), ((1, 2), (1, -1))


def _coproduct_quadratic() -> Counterexample:
    for left, right in _RELATION_CLASSES:
        total = AlgTensor()
        for c, word in quadratic_relation_words(1, -1):
            total = total + word_coproduct(word, left, right) * c
        if not total.is_zero:
            return {"left": list(left), "right": list(right)}
    return None


def _theta_exponential(order: int) -> Counterexample:
    factor = V ** (-1) - V
    gens = {r: h_generator(r) * (factor * quantum_int(r)) for r in range(1, order + 1)}
    series = series_exp(gens, order)
    for l in range(order + 1):
        if series[l] != theta(l):
            return {"l": l, "exp": str(series[l]), "theta": str(theta(l))}
    return None


def _xi_chi_inverse(l_max: int) -> Counterexample:
    for l in range(l_max + 1):
        total = SymElem.zero()
        for i in range(l + 1):
            total = total + xi(i) * chi(l - i)
        expected = SymElem.one() if l == 0 else SymElem.zero()
        if total != expected:
            return {"l": l, "sum": str(total)}
    return None


def suite_coproduct(config: Config, inverse_max: int = 10) -> List[CheckResult]:
    """Delta(E_0) through the line elements, the quadratic relation and the theta series."""
    w = config.xi_max
    components = [((1, 0), (0, 0))] + [((0, l), (1, -l)) for l in range(w + 1)]
    return [
        _run(
            "coproduct:E0",
            lambda: _first_failure(
                components,
                lambda left, right: coproduct_identity(Window(-w, 2, w), left, right),
                lambda left, right: {"left": list(left), "right": list(right)},
            ),
        ),
        _run("coproduct:quadratic", _coproduct_quadratic),
        _run("coproduct:theta-exponential", lambda: _theta_exponential(w)),
        _run("coproduct:xi-chi-inverse", lambda: _xi_chi_inverse(inverse_max)),
    ]


# Principal subspace


def _principal(source: str, window: Window, k_max: int) -> Counterexample:
    dims = principal_character(window, k_max=k_max, source=source)
    for (k, d), dim in sorted(dims.items()):
        expected = difference_two_count(k, d)
        if dim != expected:
            return {"k": k, "d": d, "dimension": dim, "gap_two_count": expected}
    return None


def suite_principal(config: Config, index_min: int = -8, k_max: int = 3) -> List[CheckResult]:
    """
    Vacuum quotient dimensions equal the counts of gap-two monomials.

    The solved rank-2 elements decide the check. The displayed sums are not
    bar-invariant, so their quotient is reported for information.
    """
    window = Window(index_min, 0, 0)
    return [
        _run("principal:completion", lambda: _principal("completion", window, k_max)),
        _run("principal:printed", lambda: _principal("printed", window, k_max), informational=True),
    ]


# Cyclic quiver Hall algebras


def dimension_vectors(p: int, max_total: int) -> List[Tuple[int, ...]]:
    """Nonzero dimension vectors on p vertices with total at most max_total."""
    return [dims for dims in itertools.product(range(max_total + 1), repeat=p) if 0 < sum(dims) <= max_total]


def sub_vectors(dims: Sequence[int]) -> List[Tuple[int, ...]]:
    return list(itertools.product(*(range(d + 1) for d in dims)))


def fit_points(config: Config, bound: int) -> List[int]:
    """The configured field sizes, topped up from Q_POINTS until a degree-bound fit is determined."""
    points = list(config.primes)
    for q in Q_POINTS:
        if len(points) > bound:
            break
        if q not in points and q != config.check_prime:
            points.append(q)
    return points


def _structure_prediction(config: Config, p: int, max_total: int) -> Counterexample:
    get_structure_cache(config)
    for dims in dimension_vectors(p, max_total):
        for c in orbits(p, dims):
            for sub in sub_vectors(dims):
                points = fit_points(config, structure_degree_bound(c.dim(), CDim(sub)))
                try:
                    structure_polys(p, c, CDim(sub), points=points, check=[config.check_prime])
                except InterpolationError as e:
                    return {"p": p, "c": c.key, "sub_dim": list(sub), "fit_points": points, "error": str(e)}
    return None


# u_l membership is checked through l = 3 at p = 2; at p = 3 the degree-3 products
# enumerate dimension (3, 3, 3), past brute force, so it stops at l = 2
U_LIMITS = {2: 3, 3: 2}


def suite_cyclic(
    config: Config, ps: Sequence[int] = (1, 2, 3), max_total: int = 4, u_limits: Optional[Dict[int, int]] = None
) -> List[CheckResult]:
    """Held-out structure constants, quantum Serre relations and u_l membership."""
    u_limits = U_LIMITS if u_limits is None else u_limits
    results = [
        _run(f"cyclic:structure:p={p}", lambda p=p: _structure_prediction(config, p, max_total)) for p in ps
    ]
    for p in (p for p in ps if p >= 2):
        results.append(_run(f"cyclic:serre:p={p}", lambda p=p: None if serre_check(p) else {"p": p}))
        results.append(
            _run(
                f"cyclic:u-membership:p={p}",
                lambda p=p: _first_failure(
                    [(l,) for l in range(1, u_limits.get(p, 2) + 1)],
                    lambda l: in_generated_subalgebra(u_recursion(p, l)),
                    lambda l: {"p": p, "l": l},
                ),
            )
        )
    return results


# Projective line


def _point_counts(qs: Sequence[int]) -> Counterexample:
    for q in qs:
        rational = rational_point_count(q)
        quadratic = len(closed_points(q)) - rational
        if rational != q + 1 or quadratic != (q * q - q) // 2:
            return {"q": q, "rational": rational, "degree_two": quadratic}
    return None


def suite_p1(
    config: Config,
    window: Optional[HallWindow] = None,
    qs: Sequence[int] = (2, 3),
    checks: Sequence[str] = CHECK_NAMES,
) -> List[CheckResult]:
    """Point counts and the Hall-function identities on the projective line."""
    window = window or HallWindow()
    results = [_run("p1:points", lambda: _point_counts((2, 3, 4)))]
    start = time.perf_counter()
    reports = identity_checks(checks, window, qs)
    per_check = (time.perf_counter() - start) / max(len(reports), 1)
    for report in reports:
        if not report.passed:
            logger.error(f"Check p1:{report.name} failed at q = {report.q}: {report.counterexample}")
        counterexample = None if report.passed else {"q": report.q, **(report.counterexample or {})}
        results.append(CheckResult(f"p1:{report.name}:q={report.q}", report.passed, per_check, counterexample))
    return results


# Star diagrams


def _finite_type_weights(limit: int) -> List[Tuple[int, ...]]:
    out = [()]
    for n_branches in (1, 2, 3):
        for ws in itertools.combinations_with_replacement(range(2, limit + 2), n_branches):
            d = StarDiagram(ws)
            if d.is_finite_type() and sum(p - 1 for p in ws) <= limit:
                out.append(ws)
    return out


def _euler_is_cartan(limit: int) -> Counterexample:
    for ws in _finite_type_weights(limit):
        d = StarDiagram(ws)
        labels = d.basis()
        cartan = cartan_matrix(d)
        for r, a in enumerate(labels):
            for c, b in enumerate(labels):
                if symmetric_form(d, basis_class(a), basis_class(b)) != cartan[r][c]:
                    return {"weights": list(ws), "row": list(a), "column": list(b)}
    return None


def _codimensions(max_weight: int, q: int = 3) -> Counterexample:
    for l in range(1, max_weight + 1):
        for lam in partitions_of(l):
            end = dim_end(lam)
            if end != 2 * dim_borel(lam) + l or not aut_count(lam, q) < q**end <= aut_count(lam, q) * q**l:
                return {"partition": list(lam), "dim_end": end}
    return None


def suite_starcomb(config: Config, limit: int = 8, max_weight: int = 4) -> List[CheckResult]:
    """Symmetrized Euler form against the Cartan matrix and stratum codimensions."""
    return [
        _run("starcomb:euler-cartan", lambda: _euler_is_cartan(limit)),
        _run("starcomb:codimensions", lambda: _codimensions(max_weight)),
    ]


SUITES: Dict[str, Callable[..., List[CheckResult]]] = {
    "confluence": suite_confluence,
    "bar": suite_bar,
    "positivity": suite_positivity,
    "telescoping": suite_telescoping,
    "coproduct": suite_coproduct,
    "principal": suite_principal,
    "cyclic": suite_cyclic,
    "p1": suite_p1,
    "starcomb": suite_starcomb,
}


def run_suites(
    names: Sequence[str], config: Config, options: Optional[Dict[str, Dict]] = None
) -> List[CheckResult]:
    """
    Run the named suites and collect their results in request order.

    Args:
        names: Suite names from SUITES
        config: Run configuration (window, seed, interpolation points, workers)
        options: Optional per-suite keyword arguments

    Returns:
        All check results, suite by suite

    Raises:
        ArgumentError: For an unknown suite name
    """
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ArgumentError(f"Unknown suites {unknown}; expected one of {', '.join(SUITES)}")
    options = options or {}

    def run_one(name: str) -> List[CheckResult]:
        logger.info(f"Suite {name} started")
        results = SUITES[name](config, **options.get(name, {}))
        failed = sum(1 for r in results if r.status == "fail")
        logger.info(f"Suite {name} finished: {len(results) - failed}/{len(results)} checks passed")
        return results

    if config.max_workers > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
            batches = list(pool.map(run_one, names))
    else:
        batches = [run_one(name) for name in names]
    return [result for batch in batches for result in batch]
