"""CSV serialization of traces, kernel slices, gap reports, certificates.

Schemas (exact headers):

* trace:       ``epoch,quantity,i,j,value`` with quantity in
               {f, u, V, lambda_min, K, theta_inf_dist, loss}; i carries the
               sample index for f/u, (i, j) the pair for K, and both stay
               empty otherwise.
* kernel slice: ``m,seed,theta,value,source`` with source in
               {empirical, analytic}; m and seed are empty on analytic rows.
* gap report:  ``i,j,sup_dev,threshold,exceeded,first_exceed_epoch`` with
               first_exceed_epoch empty when the pair never exceeds.
* certificate: ``family,depth,scale_a,bias_mode,n,fingerprint,lambda_min,tolerance,verdict``

Floats are written with repr (shortest round-trip form), so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .certify import GapReport, SpdCertificate
from .errors import FormatError

TRACE_HEADER = ["epoch", "quantity", "i", "j", "value"]
SLICE_HEADER = ["m", "seed", "theta", "value", "source"]
GAP_HEADER = ["i", "j", "sup_dev", "threshold", "exceeded", "first_exceed_epoch"]
CERT_HEADER = ["family", "depth", "scale_a", "bias_mode", "n", "fingerprint",
               "lambda_min", "tolerance", "verdict"]

TRACE_QUANTITIES = ("f", "u", "V", "lambda_min", "K", "theta_inf_dist", "loss")


def _fmt(v) -> str:
    return repr(float(v))


class TraceCsvWriter:
    """Streams one trace record (all quantities of one epoch) per call.

    The file is flushed after every record so an aborted run leaves a valid
    partial trace behind.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(TRACE_HEADER)
        self._fh.flush()

    def write_record(self, rec: dict):
        epoch = int(rec["epoch"])
        rows = []
        for i, v in enumerate(rec["f"]):
            rows.append([epoch, "f", i, "", _fmt(v)])
        for i, v in enumerate(rec["u"]):
            rows.append([epoch, "u", i, "", _fmt(v)])
        rows.append([epoch, "V", "", "", _fmt(rec["V"])])
        rows.append([epoch, "lambda_min", "", "", _fmt(rec["lambda_min"])])
        for (i, j), v in rec["K"].items():
            rows.append([epoch, "K", i, j, _fmt(v)])
        rows.append([epoch, "theta_inf_dist", "", "", _fmt(rec["theta_inf_dist"])])
        rows.append([epoch, "loss", "", "", _fmt(rec["loss"])])
        self._w.writerows(rows)
        self._fh.flush()

    def close(self):
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_trace_csv(path, trace):
    """Serialize a finished TrainingTrace in one go."""
    with TraceCsvWriter(path) as w:
        for r in range(trace.epochs.size):
            w.write_record({
                "epoch": int(trace.epochs[r]),
                "f": trace.f[r],
                "u": trace.u[r],
                "V": trace.V[r],
                "lambda_min": trace.lambda_min[r],
                "K": {pair: trace.K_watch[r, k] for k, pair in enumerate(trace.watch)},
                "theta_inf_dist": trace.theta_inf_dist[r],
                "loss": trace.loss[r],
            })


def read_trace_csv(path):
    """Parse a trace CSV back into arrays keyed by quantity."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise FormatError(f"{path}: bad trace header {header!r}")
        per_epoch = {}
        for ln, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise FormatError(f"{path}: row {ln} has {len(row)} fields, expected 5")
            epoch_s, quantity, i_s, j_s, value_s = row
            if quantity not in TRACE_QUANTITIES:
                raise FormatError(f"{path}: row {ln} has unknown quantity {quantity!r}")
            try:
                epoch = int(epoch_s)
                value = float(value_s)
            except ValueError as exc:
                raise FormatError(f"{path}: row {ln}: {exc}") from None
            bucket = per_epoch.setdefault(epoch, {"f": {}, "u": {}, "K": {}})
            if quantity in ("f", "u"):
                bucket[quantity][int(i_s)] = value
            elif quantity == "K":
                bucket["K"][(int(i_s), int(j_s))] = value
            else:
                bucket[quantity] = value
    epochs = sorted(per_epoch)
    if not epochs:
        raise FormatError(f"{path}: no data rows")
    n = len(per_epoch[epochs[0]]["f"])
    pairs = sorted(per_epoch[epochs[0]]["K"])
    out = {
        "epochs": np.array(epochs, dtype=np.int64),
        "f": np.array([[per_epoch[e]["f"][i] for i in range(n)] for e in epochs]),
        "u": np.array([[per_epoch[e]["u"][i] for i in range(n)] for e in epochs]),
        "V": np.array([per_epoch[e]["V"] for e in epochs]),
        "lambda_min": np.array([per_epoch[e]["lambda_min"] for e in epochs]),
        "theta_inf_dist": np.array([per_epoch[e]["theta_inf_dist"] for e in epochs]),
        "loss": np.array([per_epoch[e]["loss"] for e in epochs]),
        "K": {p: np.array([per_epoch[e]["K"][p] for e in epochs]) for p in pairs},
    }
    return out


def write_slice_csv(path, rows):
    """rows: iterable of (m, seed, theta, value, source); m/seed may be None."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SLICE_HEADER)
        for m, seed, theta, value, source in rows:
            w.writerow([
                "" if m is None else int(m),
                "" if seed is None else int(seed),
                _fmt(theta), _fmt(value), source,
            ])


def write_gap_csv(path, report: GapReport):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GAP_HEADER)
        for k, (i, j) in enumerate(report.pairs):
            first = report.first_exceed_epoch[k]
            w.writerow([
                i, j, _fmt(report.sup_dev[k]), _fmt(report.threshold),
                "true" if report.pair_exceeded[k] else "false",
                "" if first is None else int(first),
            ])


def write_certificate_csv(path, cert: SpdCertificate):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CERT_HEADER)
        w.writerow([
            cert.spec.family, cert.spec.depth, _fmt(cert.spec.scale_a),
            cert.spec.bias_mode, cert.n, cert.fingerprint,
            _fmt(cert.lambda_min), _fmt(cert.tolerance), cert.verdict,
        ])


def write_sweep_summary_csv(path, rows):
    """rows: iterable of (m, seed, sup_dev)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "seed", "sup_dev"])
        for m, seed, sup in rows:
            w.writerow([int(m), int(seed), _fmt(sup)])
