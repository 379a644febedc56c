"""Tests for the verification suites."""

import random

import pytest

from src.algebra.loopalg import E_LETTER, XI_LETTER
from src.errors import ArgumentError, CheckFailedError
from src.hall.p1hall import HallWindow
from src.utils.config import Config
from src.verification import (
    CheckResult,
    _diamonds,
    _printed_leading,
    _random_word,
    _run,
    dimension_vectors,
    fit_points,
    run_suites,
    sub_vectors,
    suite_bar,
    suite_confluence,
    suite_cyclic,
    suite_p1,
    suite_principal,
    suite_starcomb,
    suite_telescoping,
)


@pytest.fixture
def config(tmp_path):
    return Config(
        cache_dir=str(tmp_path / "cache"),
        output_dir=str(tmp_path / "out"),
        xi_max=3,
        index_min=-3,
        index_max=2,
        primes=[2, 3, 4],
        check_prime=5,
    )


def names_and_status(results):
    return {r.name: r.status for r in results}


def test_check_result_json():
    result = CheckResult("x", False, 0.12345, {"t": 1})
    assert result.to_json() == {"name": "x", "status": "fail", "seconds": 0.123, "counterexample": {"t": 1}}
    assert CheckResult("y", False, 0.0, informational=True).status == "info"


def test_run_turns_check_failures_into_counterexamples():
    def body():
        raise CheckFailedError("residual", {"monomial": "E(0)"})

    result = _run("solver", body)
    assert not result.passed
    assert result.counterexample == {"error": "residual", "monomial": "E(0)"}


def test_run_lets_argument_errors_through():
    def body():
        raise ArgumentError("bad")

    with pytest.raises(ArgumentError):
        _run("bad", body)


def test_dimension_vectors():
    assert dimension_vectors(2, 1) == [(0, 1), (1, 0)]
    assert len(dimension_vectors(3, 2)) == 9
    assert sub_vectors((1, 2)) == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]


def test_confluence_suite(config):
    results = suite_confluence(config, samples=20, span=3, max_gap=6, xi_n=4)
    assert names_and_status(results) == {
        "confluence:support": "pass",
        "confluence:termination": "pass",
        "confluence:random-order": "pass",
        "confluence:diamonds": "pass",
        "confluence:xi-commutation": "pass",
    }


def test_random_words_cover_the_confluence_range():
    rng = random.Random(3)
    words = [_random_word(rng) for _ in range(500)]
    assert max(len(w) for w in words) == 5
    e_indices = {x for w in words for kind, x in w if kind == E_LETTER}
    xi_parts = {x for w in words for kind, x in w if kind == XI_LETTER}
    assert min(e_indices) == -6 and max(e_indices) == 6
    assert xi_parts == {1, 2, 3}


def test_diamonds_cover_xi_overlaps():
    assert _diamonds(2, xi_part=2) is None


def test_bar_suite_small(config):
    results = suite_bar(config, samples=3, torsion_weight=3, line_range=(0, 1), rank2_range=(0, -1))
    status = names_and_status(results)
    assert status["bar:involution"] == "pass"
    assert status["bar:torsion"] == "pass"
    assert status["bar:line"] == "pass"
    assert status["bar:rank2"] == "pass"
    assert status["bar:rank2-xi-free"] == "pass"
    assert status["bar:rank2-leading"] == "info"
    assert status["bar:rank2-printed"] == "info"


def test_printed_leading_defect_only_for_equal_summands():
    report = _printed_leading([-1])
    assert [(d["t"], d["kind"]) for d in report["defects"]] == [(-1, "tt")]
    assert report["defects"][0]["lead_coeff"] == "1"


def test_telescoping_suite(config):
    results = suite_telescoping(config, t_values=[0, 1])
    assert [r.name for r in results] == ["telescoping:t=0", "telescoping:t=1"]
    assert all(r.passed for r in results)


def test_principal_suite_decides_on_solved_relations(config):
    results = suite_principal(config, index_min=-6, k_max=2)
    assert names_and_status(results)["principal:completion"] == "pass"
    printed = results[1]
    assert printed.name == "principal:printed"
    assert printed.status == "info"
    assert printed.passed


def test_cyclic_suite_jordan_quiver(config):
    results = suite_cyclic(config, ps=(1,), max_total=2)
    assert names_and_status(results) == {"cyclic:structure:p=1": "pass"}


def test_fit_points_grow_with_the_degree_bound(config):
    assert fit_points(config, 2) == [2, 3, 4]
    assert fit_points(config, 3) == [2, 3, 4, 7]
    assert fit_points(config, 4) == [2, 3, 4, 7, 8]


def test_cyclic_suite_reaches_dimension_four(config):
    # two-dimensional subspaces of F_q^4 need a degree-4 fit
    results = suite_cyclic(config, ps=(1,), max_total=4)
    assert names_and_status(results) == {"cyclic:structure:p=1": "pass"}


def test_p1_suite(config):
    results = suite_p1(config, window=HallWindow(-1, 1, 1), qs=[2], checks=["line"])
    assert results[0].name == "p1:points"
    assert len(results) == 4
    assert all(r.passed for r in results)


def test_starcomb_suite(config):
    assert all(r.passed for r in suite_starcomb(config, limit=4, max_weight=3))


def test_run_suites_keeps_request_order(config):
    options = {"telescoping": {"t_values": [0]}, "starcomb": {"limit": 3, "max_weight": 2}}
    results = run_suites(["telescoping", "starcomb"], config, options)
    assert [r.name.split(":")[0] for r in results] == ["telescoping", "starcomb", "starcomb"]


def test_run_suites_in_parallel(config):
    config.max_workers = 2
    options = {"telescoping": {"t_values": [0]}, "starcomb": {"limit": 3, "max_weight": 2}}
    results = run_suites(["starcomb", "telescoping"], config, options)
    assert [r.name.split(":")[0] for r in results] == ["starcomb", "starcomb", "telescoping"]


def test_run_suites_rejects_unknown_names(config):
    with pytest.raises(ArgumentError):
        run_suites(["nonsense"], config)
