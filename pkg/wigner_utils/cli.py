import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

from . import report_helper
from .gaussian_engine import BlockGaussian, DiracDelta
from .log_scalar import LogScalar
from .mode_space import FieldFunction, ModeGrid
from .moyal import star, star3
from .scenario_builder import OPERATIONS, Scenario, ScenarioBuilder
from .states import (
    DistributionalResult,
    WignerState,
    characteristic,
    expectation,
    marginal_p,
    marginal_q,
    moments,
    s_transform,
)
from .verification import DIVERGENCE_EXCEPTIONS, CheckResult, VerificationContext, relative_error, run_suites

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3

THREADS_VARIABLE = "WIGNER_UTILS_THREADS"
FAILURE_MANIFEST = "failures.json"


def thread_count() -> int:
    raw = os.environ.get(THREADS_VARIABLE, "1")
    try:
        threads = int(raw)
    except ValueError:
        raise ScenarioBuilder.ConfigException(f"Expected an integer thread count, got {raw!r}", THREADS_VARIABLE)
    if threads < 1:
        raise ScenarioBuilder.ConfigException(f"Thread count must be positive, got {threads}", THREADS_VARIABLE)
    return threads


def evaluate_points(function: Callable[[FieldFunction], LogScalar], points: Sequence[FieldFunction]) -> List[LogScalar]:
    """
    Evaluates every point, in parallel when WIGNER_UTILS_THREADS > 1; results
    keep the order of the points
    """

    threads = thread_count()
    if threads == 1 or len(points) < 2:
        return [function(point) for point in points]
    logger.debug(f">> Evaluating {len(points)} points on {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(function, points))


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="wigner-utils",
        description="Evaluate and verify Wigner functionals of multimode bosonic states",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in OPERATIONS:
        sub = subparsers.add_parser(command)
        sub.add_argument("--config", help="Scenario JSON file (optional for verify)", required=command != "verify")
        sub.add_argument("--out", default=".", help="Directory for report files")
        sub.add_argument("--tol", type=float, help="Tolerance override applied to every check")
        sub.add_argument("--verbose", "-v", action="count", default=0)
        if command == "verify":
            sub.add_argument("--oracle", action="store_true", help="Also compare against the truncated Fock oracle")
            sub.add_argument("--suite", action="append", help="Suite to run; repeatable (default: all)")
    return parser.parse_args(argv)


def load_scenario(args: argparse.Namespace) -> Scenario:
    scenario = ScenarioBuilder.create_from(args.config) if args.config else Scenario("verify")
    if scenario.operation != args.command:
        raise ScenarioBuilder.ConfigException(
            f"Scenario describes {scenario.operation!r} but the command is {args.command!r}", "operation"
        )
    if args.tol is not None:
        if not args.tol > 0:
            raise ScenarioBuilder.ConfigException(f"Tolerances must be positive, got {args.tol}", "--tol")
        scenario.tolerances = {**scenario.tolerances, "default": args.tol}
    if getattr(args, "oracle", False):
        scenario.oracle = True
    if getattr(args, "suite", None):
        scenario.suites = ScenarioBuilder.validate_suites(args.suite)
    return scenario


def provenance(scenario: Scenario, **extra) -> dict:
    header = {"operation": scenario.operation}
    if scenario.grid is not None:
        header["grid_id"] = scenario.grid.grid_id
        header["mode_count"] = str(scenario.grid.mode_count)
    header.update({key: str(value) for key, value in extra.items()})
    return header


def context_for(scenario: Scenario) -> VerificationContext:
    return VerificationContext(scenario.seed, scenario.tolerances, scenario.oracle, scenario.cutoff)


def finish(results: Sequence[CheckResult], out_dir: str, scenario: Scenario, name: str) -> int:
    report_helper.write_checks(os.path.join(out_dir, name), results, provenance(scenario))
    if any(r.diverged for r in results):
        code = EXIT_DIVERGENCE
    elif all(r.passed for r in results):
        return EXIT_OK
    else:
        code = EXIT_TOLERANCE
    failed = [r for r in results if not r.passed]
    logger.warning(f"{len(failed)} of {len(results)} checks failed")
    report_helper.write_failure_manifest(os.path.join(out_dir, FAILURE_MANIFEST), results, code)
    return code


def run_verify(scenario: Scenario, out_dir: str) -> int:
    results = run_suites(scenario.suites, context_for(scenario))
    passed = sum(1 for r in results if r.passed)
    logger.info(f"{passed} of {len(results)} checks passed")
    return finish(results, out_dir, scenario, "checks.csv")


def run_eval(scenario: Scenario, out_dir: str) -> int:
    for i, state in enumerate(scenario.states):
        values = evaluate_points(state.evaluate, scenario.points)
        path = os.path.join(out_dir, f"eval_{i}.csv")
        report_helper.write_values(path, scenario.points, values, provenance(scenario, state=state.description))
    return EXIT_OK


def run_moments(scenario: Scenario, out_dir: str) -> int:
    m, n = scenario.moment_orders
    for i, state in enumerate(scenario.states):
        tensor = moments(characteristic(state), m, n)
        path = os.path.join(out_dir, f"moments_{i}.csv")
        report_helper.write_moments(path, tensor, m, n, provenance(scenario, state=state.description, m=m, n=n))
    return EXIT_OK


def run_star(scenario: Scenario, out_dir: str) -> int:
    states = scenario.states
    context = context_for(scenario)
    if len(states) == 2:
        result = star(*states)
        check = "trace_equals_expectation"
        error = relative_error(result.trace(), expectation(*states))
        samples = 1
    else:
        result = star3(*states)
        iterated = star(star(states[0], states[1]).as_state(), states[2])
        check = "star3_equals_iterated_star"
        scale = 2.0 ** scenario.grid.mode_count
        errors = [
            relative_error(a, b, scale)
            for a, b in zip(evaluate_points(result.evaluate, scenario.points), evaluate_points(iterated.evaluate, scenario.points))
        ]
        error = max(errors)
        samples = len(errors)
    values = evaluate_points(result.evaluate, scenario.points)
    label = " * ".join(result.inputs)
    report_helper.write_values(os.path.join(out_dir, "star.csv"), scenario.points, values, provenance(scenario, product=label))
    results = [CheckResult("star", check, error, context.tolerance(check, 1e-9), samples)]
    return finish(results, out_dir, scenario, "star_checks.csv")


def run_marginal(scenario: Scenario, out_dir: str) -> int:
    build = marginal_q if scenario.basis == "q" else marginal_p
    for i, state in enumerate(scenario.states):
        marginal = build(state)
        values = evaluate_points(marginal.evaluate, scenario.points)
        mass = marginal.total_mass().value()
        path = os.path.join(out_dir, f"marginal_{i}.csv")
        header = provenance(scenario, state=state.description, basis=scenario.basis, total_mass=report_helper.format_number(mass.real))
        report_helper.write_values(path, scenario.points, values, header, prefix=scenario.basis)
    return EXIT_OK


def run_stransform(scenario: Scenario, out_dir: str) -> int:
    flagged = []
    for i, state in enumerate(scenario.states):
        result = s_transform(state, scenario.s)
        path = os.path.join(out_dir, f"stransform_{i}.csv")
        header = provenance(scenario, state=state.description, s=scenario.s)
        if isinstance(result, DistributionalResult):
            logger.warning(f"s={scenario.s} distribution of {state.description} is distributional: {result.reason}")
            flagged.append(CheckResult("stransform", f"states[{i}]", math.inf, 0.0, 0, "distributional", result.reason))
        elif isinstance(result, DiracDelta):
            report_helper.write_delta(path, result, header)
        else:
            report_helper.write_values(path, scenario.points, evaluate_points(result.evaluate, scenario.points), header)
    if flagged:
        report_helper.write_failure_manifest(os.path.join(out_dir, FAILURE_MANIFEST), flagged, EXIT_DIVERGENCE)
        return EXIT_DIVERGENCE
    return EXIT_OK


RUNNERS = {
    "verify": run_verify,
    "eval": run_eval,
    "moments": run_moments,
    "star": run_star,
    "marginal": run_marginal,
    "stransform": run_stransform,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        scenario = load_scenario(args)
        os.makedirs(args.out, exist_ok=True)
        return RUNNERS[args.command](scenario, args.out)
    except (
        ScenarioBuilder.ConfigException,
        ModeGrid.GridMismatchException,
        FieldFunction.FieldException,
        WignerState.UnsupportedStateException,
        BlockGaussian.UnsupportedOrderException,
    ) as e:
        print(f"[error] {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DIVERGENCE_EXCEPTIONS as e:
        print(f"[divergence] {e}", file=sys.stderr)
        flagged = [CheckResult(args.command, type(e).__name__, math.inf, 0.0, 0, "divergence", str(e))]
        os.makedirs(args.out, exist_ok=True)
        report_helper.write_failure_manifest(os.path.join(args.out, FAILURE_MANIFEST), flagged, EXIT_DIVERGENCE)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
