"""
CSV and JSON writers for CLI reports. Numbers are printed with 17 significant
digits and rows end with LF, so repeated runs produce identical bytes.
"""
import csv
import json
import logging
import os
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .gaussian_engine import DiracDelta
from .log_scalar import LogScalar
from .mode_space import FieldFunction
from .verification import CheckResult

logger = logging.getLogger(__name__)

CHECK_HEADER = ["suite", "check", "max_error", "tolerance", "samples", "passed", "flag", "note"]


def format_number(value) -> str:
    value = float(value)
    if value == 0:
        return "0"
    return format(value, ".17g")


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence], provenance: Optional[Dict[str, str]] = None):
    """
    Writes rows with an optional block of '# key=value' provenance lines on top
    """

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    logger.info(f"Writing report to {path}")
    with open(path, "w", newline="", encoding="utf-8") as f:
        for key, value in (provenance or {}).items():
            f.write(f"# {key}={value}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) if isinstance(v, (float, np.floating)) else v for v in row])


def point_columns(mode_count: int, prefix: str = "alpha") -> List[str]:
    return [f"re_{prefix}_{i}" for i in range(mode_count)] + [f"im_{prefix}_{i}" for i in range(mode_count)]


VALUE_COLUMNS = ["log_value", "phase", "omega_2_coef", "omega_pi_coef", "omega_2pi_coef", "re_value", "im_value"]


def value_cells(value: LogScalar) -> List:
    """
    Log-magnitude, phase, the symbolic per-mode exponents of 2, pi and 2pi, and
    the collapsed complex value
    """

    omega = value.omega_coefficients
    if value.is_zero:
        log_value, phase, collapsed = float("-inf"), 0.0, 0j
    else:
        log = value.log()
        log_value, phase, collapsed = float(log.real), float(log.imag), complex(value.value())
    return [
        log_value,
        phase,
        float(omega["2"]),
        float(omega["pi"]),
        float(omega["2pi"]),
        float(collapsed.real),
        float(collapsed.imag),
    ]


def point_cells(point: FieldFunction) -> List[float]:
    values = point.values
    return [float(v) for v in values.real] + [float(v) for v in values.imag]


def write_values(path: str, points: Sequence[FieldFunction], values: Sequence[LogScalar],
                 provenance: Optional[Dict[str, str]] = None, prefix: str = "alpha"):
    if not points:
        raise ValueError("Cannot write a report without points")
    header = point_columns(points[0].grid.mode_count, prefix) + VALUE_COLUMNS
    rows = (point_cells(point) + value_cells(value) for point, value in zip(points, values))
    write_csv(path, header, rows, provenance)


def write_moments(path: str, tensor: np.ndarray, m: int, n: int, provenance: Optional[Dict[str, str]] = None):
    header = [f"q_index_{a}" for a in range(m)] + [f"p_index_{b}" for b in range(n)] + ["re_moment", "im_moment"]
    rows = []
    for index in np.ndindex(*tensor.shape):
        value = complex(tensor[index])
        rows.append(list(index) + [float(value.real), float(value.imag)])
    write_csv(path, header, rows, provenance)


def write_delta(path: str, delta: DiracDelta, provenance: Optional[Dict[str, str]] = None):
    """
    A distributional result is reported by its support point and total weight
    """

    grid = delta.weight.grid
    support = FieldFunction.from_balanced(grid, delta.support())
    mass = delta.integrate_out().value()
    header = point_columns(grid.mode_count, "support") + VALUE_COLUMNS
    write_csv(path, header, [point_cells(support) + value_cells(mass)], provenance)


def check_row(result: CheckResult) -> List:
    return [
        result.suite,
        result.check,
        float(result.error),
        float(result.tolerance),
        result.samples,
        "true" if result.passed else "false",
        result.flag,
        result.note,
    ]


def write_checks(path: str, results: Sequence[CheckResult], provenance: Optional[Dict[str, str]] = None):
    write_csv(path, CHECK_HEADER, (check_row(result) for result in results), provenance)


def write_failure_manifest(path: str, results: Sequence[CheckResult], exit_code: int, context: Optional[dict] = None):
    """
    Machine-readable list of failed or flagged checks
    """

    failures = [
        {
            "suite": r.suite,
            "check": r.check,
            "max_error": format_number(r.error),
            "tolerance": format_number(r.tolerance),
            "flag": r.flag,
            "note": r.note,
        }
        for r in results
        if not r.passed
    ]
    document = {"exit_code": exit_code, "failures": failures}
    if context:
        document.update(context)
    logger.info(f"Writing failure manifest to {path}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")
