"""
Command-line front end for loopcanon.

Computes canonical basis elements, products and bar images, runs the
verification suites and the Hall-algebra oracles, and prints a JSON report.
Exit code 0 means every requested check passed, 1 means some check failed
and 2 means the invocation itself was invalid.
"""

import argparse
import dataclasses
import json
import logging
import re
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from src.algebra.canbasis import CanElement, parse_label
from src.algebra.loopalg import AlgElem, Window, bar
from src.errors import ArgumentError, ConfigError, InterpolationError, LoopCanonError
from src.geometry.starcomb import KClass, StarDiagram, finite_roots, root_test, slope_and_hn
from src.hall.cyclichall import CDim, named_elements, orbits, structure_polys
from src.hall.p1hall import CHECK_NAMES, HallWindow, identity_checks
from src.utils.cache import get_structure_cache
from src.utils.config import Config, parse_int_list, parse_range, setup_logging
from src.verification import SUITES, CheckResult, dimension_vectors, run_suites, sub_vectors

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

_LETTER_RE = re.compile(r"^(E|xi)(-?\d+)$")
_SPLIT_RE = re.compile(r"S\(\d+,\d+\)|[^,]+")
_SUMMAND_RE = re.compile(r"^(?:O\((-?\d+)\)|T(\d+)|S\((\d+),(\d+)\))$")


# Parsing helpers


def parse_word(text: str) -> AlgElem:
    """
    Multiply out a comma separated word such as "E1,E0,xi2".

    Raises:
        ArgumentError: For an unknown letter or an empty word
    """
    letters = [part.strip() for part in text.split(",") if part.strip()]
    if not letters:
        raise ArgumentError("Empty word")
    result = AlgElem.one()
    for letter in letters:
        match = _LETTER_RE.match(letter)
        if not match:
            raise ArgumentError(f"Unknown letter {letter!r}; use E<t> or xi<l>")
        kind, index = match.group(1), int(match.group(2))
        if kind == "E":
            result = result * AlgElem.E(index)
        elif index < 1:
            raise ArgumentError(f"xi letters need l >= 1, got {letter!r}")
        else:
            result = result * AlgElem.xi((index,))
    return result


def parse_summands(text: str) -> List[KClass]:
    """Parse "O(1),O(-1),T2,S(1,1)" into classes."""
    out = []
    # commas inside S(i,j) are not separators
    for part in (p.strip() for p in _SPLIT_RE.findall(text) if p.strip()):
        match = _SUMMAND_RE.match(part)
        if not match:
            raise ArgumentError(f"Unknown summand {part!r}; use O(n), T<n> or S(i,j)")
        line, torsion, i, j = match.groups()
        if line is not None:
            out.append(KClass.line(int(line)))
        elif torsion is not None:
            out.append(KClass.torsion(int(torsion)))
        else:
            out.append(KClass.simple(int(i), int(j)))
    return out


def default_window(element: CanElement, xi_max: int) -> Window:
    """Window showing every term of a canonical element up to the given xi-weight."""
    if element.kind == "line":
        t = element.params[0]
        return Window(t - xi_max, t, xi_max)
    if element.kind in ("tt", "t,t+1"):
        t = element.params[0]
        return Window(t - xi_max, t + xi_max + 1, xi_max)
    return Window(0, 0, max(xi_max, sum(element.params)))


def _window_arg(args, xi_max: int) -> Optional[Window]:
    if not getattr(args, "window", None):
        return None
    try:
        lo, hi = parse_range(args.window)
    except ConfigError as e:
        raise ArgumentError(str(e)) from e
    return Window(lo, hi, xi_max)


# Verbs


def cmd_basis(args, config: Config) -> Tuple[List[CheckResult], Dict]:
    element = parse_label(args.label)
    window = _window_arg(args, config.xi_max) or default_window(element, config.xi_max)
    return [], {"window": dataclasses.asdict(window), **element.to_json(window)}


def cmd_product(args, config: Config) -> Tuple[List[CheckResult], Dict]:
    left, right = parse_word(args.left), parse_word(args.right)
    return [], {"left": args.left, "right": args.right, "product": (left * right).to_json()}


def cmd_bar(args, config: Config) -> Tuple[List[CheckResult], Dict]:
    if bool(args.label) == bool(args.word):
        raise ArgumentError("bar needs exactly one of --label or --word")
    if args.label:
        element = parse_label(args.label)
        window = _window_arg(args, config.xi_max) or default_window(element, config.xi_max)
        original = element.body.restrict(window)
        image = element.body.bar().restrict(window)
    else:
        x = parse_word(args.word)
        window = _window_arg(args, config.xi_max) or Window.from_config(config)
        original = x.restrict(window)
        image = bar(x).restrict(window)
    return [], {"window": dataclasses.asdict(window), "bar": image.to_json(), "fixed": image == original}


def cmd_verify(args, config: Config) -> Tuple[List[CheckResult], Dict]:
    names = [name.strip() for name in args.suite.split(",") if name.strip()]
    options: Dict[str, Dict] = {}
    if args.t is not None:
        options["telescoping"] = {"t_values": [args.t]}
    if args.samples is not None:
        options["confluence"] = {"samples": args.samples}
        options["bar"] = {"samples": args.samples}
    checks = run_suites(names, config, options)
    return checks, {"suites": names}


def _hall_cyclic(args, config: Config) -> Tuple[List[CheckResult], Dict]:
    if args.element:
        element = named_elements(args.p, args.element, args.l, args.i)
        return [], element.to_json()
    get_structure_cache(config)
    primes = parse_int_list(args.primes) if args.primes else config.primes
    check = args.check if args.check is not None else config.check_prime
    rows, checks = [], []
    for dims in dimension_vectors(args.p, args.max_dim):
        for c in orbits(args.p, dims):
            for sub in sub_vectors(dims):
                name = f"cyclic:{c.key}:sub={','.join(map(str, sub))}"
                try:
                    polys = structure_polys(args.p, c, CDim(sub), points=primes, check=[check])
                except InterpolationError as e:
                    checks.append(CheckResult(name, False, 0.0, {"error": str(e)}))
                    continue
                checks.append(CheckResult(name, True, 0.0))
                for (a, b), poly in sorted(polys.items(), key=lambda item: (item[0][0].key, item[0][1].key)):
                    rows.append({"c": c.to_json(), "a": a.to_json(), "b": b.to_json(), "poly": poly})
    return checks, {"p": args.p, "primes": primes, "check": check, "structure": rows}


def _hall_p1(args, config: Config) -> Tuple[List[CheckResult], Dict]:
    window = HallWindow.parse(args.window) if args.window else HallWindow()
    qs = parse_int_list(args.q)
    which = [name.strip() for name in args.check.split(",") if name.strip()]
    reports = identity_checks(which, window, qs)
    checks = [
        CheckResult(
            f"p1:{r.name}:q={r.q}", r.passed, 0.0, None if r.passed else {"q": r.q, **(r.counterexample or {})}
        )
        for r in reports
    ]
    return checks, {"window": str(window), "q": qs, "reports": [r.to_json() for r in reports]}


def cmd_hall(args, config: Config) -> Tuple[List[CheckResult], Dict]:
    if args.model == "cyclic":
        return _hall_cyclic(args, config)
    return _hall_p1(args, config)


def cmd_roots(args, config: Config) -> Tuple[List[CheckResult], Dict]:
    d = StarDiagram.parse(args.weights)
    if args.rank is not None or args.ndelta is not None:
        a = KClass(rank=args.rank or 0, ndelta=args.ndelta or 0)
        return [], {"weights": list(d.weights), "class": a.to_json(), "kind": root_test(d, a).value}
    return [], {"weights": list(d.weights), "roots": [r.to_json() for r in finite_roots(d)]}


def cmd_hn(args, config: Config) -> Tuple[List[CheckResult], Dict]:
    d = StarDiagram.parse(args.weights)
    summands = parse_summands(args.summands)
    hn = slope_and_hn(d, summands)
    return [], {"weights": list(d.weights), "hn_type": hn.to_json(d), "total": hn.total().to_json()}


COMMANDS = {
    "basis": cmd_basis,
    "product": cmd_product,
    "bar": cmd_bar,
    "verify": cmd_verify,
    "hall": cmd_hall,
    "roots": cmd_roots,
    "hn": cmd_hn,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loopcanon", description="Exact quantum loop algebra and Hall algebra toolkit")
    parser.add_argument("--log-level", help="Override LOG_LEVEL")
    parser.add_argument("--seed", type=int, help="Seed for randomized suites")
    parser.add_argument("--output", help="Also write the JSON report to this file")
    parser.add_argument("--env-file", help="Path to a .env file")
    parser.add_argument("--workers", type=int, help="Worker threads for suites")
    sub = parser.add_subparsers(dest="command", required=True)

    basis = sub.add_parser("basis", help="Print a canonical basis element")
    basis.add_argument("--label", required=True, help='e.g. "O(-1)", "O(0)+O(1)", "lambda:2,1"')
    basis.add_argument("--xi-max", "--depth", dest="xi_max", type=int, help="Largest xi-weight shown")
    basis.add_argument("--window", help="E-index range lo:hi")
    basis.add_argument("--json", action="store_true", help="Print the report as JSON (the only format)")

    product = sub.add_parser("product", help="Normal form of a product of two words")
    product.add_argument("--left", required=True, help='e.g. "E1,xi2"')
    product.add_argument("--right", required=True)

    bar_cmd = sub.add_parser("bar", help="Bar image of a canonical element or a word")
    bar_cmd.add_argument("--label")
    bar_cmd.add_argument("--word")
    bar_cmd.add_argument("--xi-max", dest="xi_max", type=int)
    bar_cmd.add_argument("--window", help="E-index range lo:hi")

    verify = sub.add_parser("verify", help="Run verification suites")
    verify.add_argument("--suite", required=True, help=f"Comma list from: {', '.join(SUITES)}")
    verify.add_argument("--t", type=int, help="Single t for the telescoping suite")
    verify.add_argument("--xi-max", dest="xi_max", type=int)
    verify.add_argument("--window", help="E-index range lo:hi")
    verify.add_argument("--samples", type=int, help="Random samples for confluence and bar")

    hall = sub.add_parser("hall", help="Hall algebra oracles")
    hall.add_argument("model", choices=["cyclic", "p1"])
    hall.add_argument("--p", type=int, default=2, help="Vertices of the cyclic quiver")
    hall.add_argument("--primes", help="Interpolation field sizes, e.g. 2,3,5")
    hall.add_argument("--check", help="Held-out field size (cyclic) or check names (p1)")
    hall.add_argument("--max-dim", dest="max_dim", type=int, default=2)
    hall.add_argument("--element", help="Named element of H_p instead of structure constants")
    hall.add_argument("--l", type=int, default=1)
    hall.add_argument("--i", type=int, default=0)
    hall.add_argument("--q", default="2,3", help="Field sizes for the P1 checks")
    hall.add_argument("--window", help='P1 window, e.g. "deg=-2..3,tor<=2"')

    roots = sub.add_parser("roots", help="Roots of a star diagram")
    roots.add_argument("--weights", default="", help="Branch weights, e.g. 2,3")
    roots.add_argument("--rank", type=int)
    roots.add_argument("--ndelta", type=int)

    hn = sub.add_parser("hn", help="Harder-Narasimhan type of a direct sum")
    hn.add_argument("--summands", required=True, help='e.g. "O(1),O(-1),T2"')
    hn.add_argument("--weights", default="")
    return parser


def _resolve_hall_check(args, config: Config):
    if args.command != "hall":
        return
    if args.model == "cyclic":
        try:
            args.check = int(args.check) if args.check is not None else None
        except ValueError as e:
            raise ArgumentError(f"--check for hall cyclic is a field size, got {args.check!r}") from e
    elif args.check is None:
        args.check = ",".join(CHECK_NAMES)


def load_config(args) -> Config:
    """Environment configuration with command-line overrides applied."""
    config = Config.from_env(args.env_file)
    overrides = {}
    if args.log_level:
        overrides["log_level"] = args.log_level
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["max_workers"] = args.workers
    if getattr(args, "xi_max", None) is not None:
        overrides["xi_max"] = args.xi_max
    if args.command == "verify" and args.window:
        overrides["index_min"], overrides["index_max"] = parse_range(args.window)
    return dataclasses.replace(config, **overrides) if overrides else config


def dispatch(args, config: Config) -> Tuple[int, Dict]:
    """
    Run one verb and assemble its report.

    Returns:
        (exit code, report)
    """
    _resolve_hall_check(args, config)
    command = args.command if args.command != "hall" else f"hall {args.model}"
    logger.info(f"Running {command}")
    checks, result = COMMANDS[args.command](args, config)
    failed = [c for c in checks if c.status == "fail"]
    report = {
        "command": command,
        "seed": config.seed,
        "status": "fail" if failed else "pass",
        "checks": [c.to_json() for c in checks],
        "result": result,
    }
    if failed:
        logger.error(f"{len(failed)} of {len(checks)} checks failed")
    return (EXIT_CHECK_FAILED if failed else EXIT_OK), report


def _emit(report: Dict, output: Optional[str]):
    text = json.dumps(report, indent=2, default=str)
    print(text)
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    setup_logging(config)

    try:
        code, report = dispatch(args, config)
    except (ArgumentError, ConfigError) as e:
        logger.error(f"Invalid request: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except LoopCanonError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE

    _emit(report, args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
