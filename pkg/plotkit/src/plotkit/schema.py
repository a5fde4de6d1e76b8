"""CSV schema validation and readers for the experiment file formats.

The producer writes five kinds of CSV; each is recognized by its exact
header. validate_csv never raises on bad content, it returns the violation
list; the figure layer turns a non-empty list into CsvSchemaError.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TRACE_HEADER = ["epoch", "quantity", "i", "j", "value"]
SLICE_HEADER = ["m", "seed", "theta", "value", "source"]
GAP_HEADER = ["i", "j", "sup_dev", "threshold", "exceeded", "first_exceed_epoch"]
CERT_HEADER = ["family", "depth", "scale_a", "bias_mode", "n", "fingerprint",
               "lambda_min", "tolerance", "verdict"]
SWEEP_HEADER = ["m", "seed", "sup_dev"]

TRACE_QUANTITIES = {"f", "u", "V", "lambda_min", "K", "theta_inf_dist", "loss"}
INDEXED = {"f", "u", "K"}  # quantities that carry a sample index


class CsvSchemaError(Exception):
    pass


@dataclass
class SchemaReport:
    path: str
    schema: str | None  # trace | slice | gap | certificate | sweep-summary
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.schema is not None and not self.violations


def _is_int(s: str) -> bool:
    try:
        int(s)
        return True
    except ValueError:
        return False


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _check_trace_row(row, ln, out):
    epoch, quantity, i, j, value = row
    if not _is_int(epoch):
        out.append(f"row {ln}: epoch {epoch!r} is not an integer")
    if quantity not in TRACE_QUANTITIES:
        out.append(f"row {ln}: unknown quantity {quantity!r}")
        return
    if quantity in INDEXED:
        if not _is_int(i):
            out.append(f"row {ln}: quantity {quantity} needs an integer i, got {i!r}")
        if quantity == "K":
            if not _is_int(j):
                out.append(f"row {ln}: quantity K needs an integer j, got {j!r}")
        elif j != "":
            out.append(f"row {ln}: quantity {quantity} must leave j empty")
    elif i != "" or j != "":
        out.append(f"row {ln}: scalar quantity {quantity} must leave i and j empty")
    if not _is_float(value):
        out.append(f"row {ln}: value {value!r} is not numeric")


def _check_slice_row(row, ln, out):
    m, seed, theta, value, source = row
    if source not in ("empirical", "analytic"):
        # without a valid source the m/seed discipline is undefined
        out.append(f"row {ln}: source must be empirical or analytic, got {source!r}")
    elif source == "analytic":
        if m != "" or seed != "":
            out.append(f"row {ln}: analytic rows must leave m and seed empty")
    else:
        if not _is_int(m):
            out.append(f"row {ln}: m {m!r} is not an integer")
        if not _is_int(seed):
            out.append(f"row {ln}: seed {seed!r} is not an integer")
    for name, cell in (("theta", theta), ("value", value)):
        if not _is_float(cell):
            out.append(f"row {ln}: {name} {cell!r} is not numeric")


def _check_gap_row(row, ln, out):
    i, j, sup_dev, threshold, exceeded, first = row
    for name, cell in (("i", i), ("j", j)):
        if not _is_int(cell):
            out.append(f"row {ln}: {name} {cell!r} is not an integer")
    for name, cell in (("sup_dev", sup_dev), ("threshold", threshold)):
        if not _is_float(cell):
            out.append(f"row {ln}: {name} {cell!r} is not numeric")
    if exceeded not in ("true", "false"):
        out.append(f"row {ln}: exceeded must be true or false, got {exceeded!r}")
    if first != "" and not _is_int(first):
        out.append(f"row {ln}: first_exceed_epoch {first!r} is not an integer")


def _check_cert_row(row, ln, out):
    family, depth, scale_a, bias_mode, n, fingerprint, lam, tol, verdict = row
    if family not in ("fcntk", "resntk"):
        out.append(f"row {ln}: family {family!r} unknown")
    if not _is_int(depth):
        out.append(f"row {ln}: depth {depth!r} is not an integer")
    if not _is_float(scale_a):
        out.append(f"row {ln}: scale_a {scale_a!r} is not numeric")
    if bias_mode not in ("doubled", "unit"):
        out.append(f"row {ln}: bias_mode {bias_mode!r} unknown")
    if not _is_int(n):
        out.append(f"row {ln}: n {n!r} is not an integer")
    if not fingerprint:
        out.append(f"row {ln}: fingerprint is empty")
    for name, cell in (("lambda_min", lam), ("tolerance", tol)):
        if not _is_float(cell):
            out.append(f"row {ln}: {name} {cell!r} is not numeric")
    if verdict not in ("certified", "failed"):
        out.append(f"row {ln}: verdict {verdict!r} unknown")


def _check_sweep_row(row, ln, out):
    m, seed, sup_dev = row
    for name, cell in (("m", m), ("seed", seed)):
        if not _is_int(cell):
            out.append(f"row {ln}: {name} {cell!r} is not an integer")
    if not _is_float(sup_dev):
        out.append(f"row {ln}: sup_dev {sup_dev!r} is not numeric")


_SCHEMAS = {
    "trace": (TRACE_HEADER, _check_trace_row),
    "slice": (SLICE_HEADER, _check_slice_row),
    "gap": (GAP_HEADER, _check_gap_row),
    "certificate": (CERT_HEADER, _check_cert_row),
    "sweep-summary": (SWEEP_HEADER, _check_sweep_row),
}


def validate_csv(path) -> SchemaReport:
    """Identify the schema by exact header and type-check every row."""
    path = Path(path)
    report = SchemaReport(path=str(path), schema=None)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        for name, (expected, checker) in _SCHEMAS.items():
            if header == expected:
                report.schema = name
                break
        else:
            report.violations.append(
                f"header {header!r} matches no known schema "
                f"(expected one of: {', '.join(repr(h[0]) for h in _SCHEMAS.values())} ...)"
            )
            return report
        width = len(_SCHEMAS[report.schema][0])
        for ln, row in enumerate(reader, start=2):
            if len(row) != width:
                report.violations.append(
                    f"row {ln}: {len(row)} fields, expected {width}")
                continue
            checker(row, ln, report.violations)
    return report


def require_schema(path, expected: str) -> SchemaReport:
    """validate_csv that raises CsvSchemaError unless `expected` matches cleanly."""
    try:
        report = validate_csv(path)
    except OSError as exc:
        raise CsvSchemaError(f"cannot read {path}: {exc}") from None
    if report.schema != expected:
        raise CsvSchemaError(
            f"{path}: expected a {expected} CSV, found "
            f"{report.schema or 'no recognizable schema'}"
            + (f" ({report.violations[0]})" if report.violations else "")
        )
    if report.violations:
        shown = "; ".join(report.violations[:3])
        raise CsvSchemaError(f"{path}: schema violations: {shown}")
    return report


def read_trace(path) -> dict:
    """Trace CSV -> arrays: epochs, f (per sample), K (per pair), scalars."""
    per_epoch = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            epoch, quantity, i, j, value = row
            bucket = per_epoch.setdefault(int(epoch), {"f": {}, "u": {}, "K": {}})
            if quantity in ("f", "u"):
                bucket[quantity][int(i)] = float(value)
            elif quantity == "K":
                bucket["K"][(int(i), int(j))] = float(value)
            else:
                bucket[quantity] = float(value)
    epochs = sorted(per_epoch)
    samples = sorted(per_epoch[epochs[0]]["f"])
    pairs = sorted(per_epoch[epochs[0]]["K"])
    return {
        "epochs": np.array(epochs, dtype=np.int64),
        "f": {i: np.array([per_epoch[e]["f"][i] for e in epochs]) for i in samples},
        "u": {i: np.array([per_epoch[e]["u"][i] for e in epochs]) for i in samples},
        "K": {p: np.array([per_epoch[e]["K"][p] for e in epochs]) for p in pairs},
        "V": np.array([per_epoch[e].get("V", np.nan) for e in epochs]),
        "lambda_min": np.array([per_epoch[e].get("lambda_min", np.nan) for e in epochs]),
    }


def read_slice(path) -> dict:
    """Slice CSV -> analytic curve plus per-(m, seed) empirical curves."""
    analytic = []
    empirical = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            m, seed, theta, value, source = row
            if source == "analytic":
                analytic.append((float(theta), float(value)))
            else:
                empirical.setdefault((int(m), int(seed)), []).append(
                    (float(theta), float(value)))
    out = {"analytic": np.array(sorted(analytic)).reshape(-1, 2), "empirical": {}}
    for key, rows in empirical.items():
        out["empirical"][key] = np.array(sorted(rows)).reshape(-1, 2)
    return out
