"""Tests for the loopcanon command line."""

import json

import pytest

from src.cli import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, main, parse_summands, parse_word
from src.errors import ArgumentError
from src.geometry.starcomb import KClass


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    for name in ("LOOPCANON_WINDOW", "LOOPCANON_XI_MAX", "LOOPCANON_PRIMES", "LOOPCANON_CHECK_PRIME", "MAX_WORKERS"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("LOOPCANON_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.setenv("LOOPCANON_OUTPUT_DIR", str(tmp_path / "out"))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_basis_line_element(capsys):
    code, report = run(capsys, "basis", "--label", "O(-1)", "--xi-max", "3")
    assert code == EXIT_OK
    assert report["command"] == "basis"
    assert report["result"]["class"] == {"k": 1, "d": -1}
    assert len(report["result"]["terms"]) == 4


def _xi_free_coeffs(report):
    return {tuple(term["eword"]): term["coeff"] for term in report["result"]["terms"] if not term["xi"]}


def test_basis_rank2_leading_coefficients(capsys):
    code, report = run(capsys, "basis", "--label", "O(-1)+O(-1)", "--xi-max", "2")
    assert code == EXIT_OK
    coeffs = _xi_free_coeffs(report)
    assert coeffs[(-1, -1)] == [[0, "1"]]
    assert coeffs[(-2, 0)] == [[3, "1"]]
    code, report = run(capsys, "basis", "--label", "O(-1)+O(0)", "--xi-max", "2")
    assert code == EXIT_OK
    coeffs = _xi_free_coeffs(report)
    assert coeffs[(-1, 0)] == [[2, "1"]]
    assert coeffs[(-2, 1)] == [[4, "1"]]


def test_basis_json_flag_keeps_the_report(capsys):
    _, plain = run(capsys, "basis", "--label", "O(0)", "--xi-max", "2")
    _, flagged = run(capsys, "basis", "--label", "O(0)", "--xi-max", "2", "--json")
    assert flagged == plain


def test_product_of_two_letters(capsys):
    code, report = run(capsys, "product", "--left", "E1", "--right", "E0")
    assert code == EXIT_OK
    terms = report["result"]["product"]["terms"]
    assert len(terms) == 1
    assert terms[0]["eword"] == [0, 1]


def test_bar_of_line_element_is_fixed(capsys):
    code, report = run(capsys, "bar", "--label", "O(0)", "--xi-max", "3")
    assert code == EXIT_OK
    assert report["result"]["fixed"] is True


def test_bar_needs_exactly_one_source(capsys):
    code, _ = run(capsys, "bar", "--label", "O(0)", "--word", "E0")
    assert code == EXIT_USAGE


def test_verify_telescoping(capsys):
    code, report = run(capsys, "verify", "--suite", "telescoping", "--t", "0", "--xi-max", "4")
    assert code == EXIT_OK
    assert report["status"] == "pass"
    assert [c["name"] for c in report["checks"]] == ["telescoping:t=0"]


def test_verify_unknown_suite(capsys):
    code, report = run(capsys, "verify", "--suite", "nonsense")
    assert code == EXIT_USAGE
    assert report is None


def test_hall_p1_line_checks(capsys):
    code, report = run(capsys, "hall", "p1", "--q", "2", "--window", "deg=-1..1,tor<=1", "--check", "line")
    assert code == EXIT_OK
    assert len(report["checks"]) == 3
    assert all(c["status"] == "pass" for c in report["checks"])


def test_hall_cyclic_structure_table(capsys):
    code, report = run(capsys, "hall", "cyclic", "--p", "1", "--primes", "2,3,4", "--check", "5", "--max-dim", "2")
    assert code == EXIT_OK
    assert report["result"]["primes"] == [2, 3, 4]
    assert report["result"]["structure"]


def test_hall_cyclic_check_must_be_a_field_size(capsys):
    code, _ = run(capsys, "hall", "cyclic", "--p", "1", "--check", "line")
    assert code == EXIT_USAGE


def test_roots_of_a3(capsys):
    code, report = run(capsys, "roots", "--weights", "2,2")
    assert code == EXIT_OK
    assert len(report["result"]["roots"]) == 6


def test_hn_of_split_sum(capsys):
    code, report = run(capsys, "hn", "--summands", "O(1),O(-1),T2")
    assert code == EXIT_OK
    assert len(report["result"]["hn_type"]) == 3


def test_bad_label_is_a_usage_error(capsys):
    code, _ = run(capsys, "basis", "--label", "Q(1)")
    assert code == EXIT_USAGE


def test_missing_required_argument_exits():
    with pytest.raises(SystemExit) as excinfo:
        main(["basis"])
    assert excinfo.value.code == EXIT_USAGE


def test_output_file_is_written(capsys, tmp_path):
    target = tmp_path / "reports" / "product.json"
    code, report = run(capsys, "--output", str(target), "product", "--left", "E0", "--right", "E0")
    assert code == EXIT_OK
    assert json.loads(target.read_text()) == report


def test_seed_is_reported(capsys):
    _, report = run(capsys, "--seed", "7", "product", "--left", "E0", "--right", "E1")
    assert report["seed"] == 7


def test_parse_summands():
    assert parse_summands("O(1), T2,S(1,1)") == [KClass.line(1), KClass.torsion(2), KClass.simple(1, 1)]
    with pytest.raises(ArgumentError):
        parse_summands("O(x)")


@pytest.mark.parametrize("word", ["", "F1", "xi0", "E1,,xi"])
def test_parse_word_rejects(word):
    with pytest.raises(ArgumentError):
        parse_word(word)


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE}) == 3
