"""Positive-definiteness certificates and kernel-divergence gap reports.

certify_spd pins down lambda_0 = lambda_min of an analytic NTK Gram on a
distinct point set; divergence_gap then compares a training trace's watched
empirical kernel entries against a baseline kernel, with the certified
threshold lambda_0 / (2 n^2) marking a deviation no lazy-regime run is
allowed to reach.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError
from .kernels import AnalyticKernelSpec, kernel_entries
from .linalg import frobenius_distance, sym_eig_min
from .training import TrainingTrace

DISTINCT_TOL = 1e-9


def point_fingerprint(X: np.ndarray) -> str:
    """sha256 of the C-order float64 bytes of X, prefixed by its shape."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    h = hashlib.sha256()
    h.update(repr(X.shape).encode())
    h.update(X.tobytes())
    return h.hexdigest()


def _check_distinct(X: np.ndarray):
    n = X.shape[0]
    for i in range(n):
        d = np.sqrt(np.sum((X[i + 1:] - X[i]) ** 2, axis=1))
        if d.size and float(np.min(d)) <= DISTINCT_TOL:
            j = i + 1 + int(np.argmin(d))
            raise ContractViolationError(
                f"points {i} and {j} coincide within {DISTINCT_TOL}; "
                "positive definiteness needs distinct points"
            )


@dataclass
class SpdCertificate:
    spec: AnalyticKernelSpec
    fingerprint: str
    n: int
    lambda_min: float
    tolerance: float
    verdict: str  # "certified" | "failed"

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"


def certify_spd(spec: AnalyticKernelSpec, X, tol: float | None = None) -> SpdCertificate:
    """Assemble the analytic Gram on X and certify lambda_min > tol.

    tol defaults to 1e-10 * trace / n, i.e. strict positivity relative to the
    kernel's own scale (NTK values grow with ||x||^2 and depth).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ContractViolationError(f"point set must be (n, d), got shape {X.shape}")
    _check_distinct(X)
    gram = spec.gram(X).entries
    lam = sym_eig_min(gram)
    if tol is None:
        tol = 1e-10 * float(np.trace(gram)) / X.shape[0]
    elif not tol > 0:
        raise ContractViolationError(f"tolerance must be > 0, got {tol}")
    verdict = "certified" if lam > tol else "failed"
    return SpdCertificate(
        spec=spec, fingerprint=point_fingerprint(X), n=X.shape[0],
        lambda_min=lam, tolerance=float(tol), verdict=verdict,
    )


def eigenvalue_transfer_check(K_emp, K_ana) -> float:
    """lambda_min(K_emp) - lambda_min(K_ana), with the Weyl bound enforced.

    The difference of minimum eigenvalues can never exceed the spectral norm
    of the perturbation, hence not the Frobenius distance either; a violation
    beyond round-off means one of the matrices is corrupt.
    """
    A = kernel_entries(K_emp)
    B = kernel_entries(K_ana)
    if A.shape != B.shape:
        raise ContractViolationError(f"shape mismatch: {A.shape} vs {B.shape}")
    diff = sym_eig_min(A) - sym_eig_min(B)
    bound = frobenius_distance(A, B)
    scale = max(1.0, float(np.max(np.abs(A))), float(np.max(np.abs(B))))
    if abs(diff) > bound + 1e-9 * scale:
        raise ContractViolationError(
            f"|delta lambda_min| = {abs(diff):.6e} exceeds Frobenius bound {bound:.6e}"
        )
    return float(diff)


@dataclass
class GapReport:
    """Per watched pair, the sup over recorded epochs of |K_t - baseline|."""

    pairs: tuple
    sup_dev: np.ndarray
    threshold: float
    pair_exceeded: np.ndarray
    first_exceed_epoch: tuple  # per pair, epoch or None
    exceeded: bool
    baseline: str  # "analytic" | "init"


def divergence_gap(trace: TrainingTrace, spec: AnalyticKernelSpec | None, X,
                   baseline: str = "analytic", threshold: float | None = None,
                   discard_recorded: int = 0) -> GapReport:
    """Evaluate the kernel-deviation gap of a trace.

    baseline "analytic": deviations are |K_t - K_spec| with the threshold
    lambda_0 / (2 n^2) from certify_spd (the certified Gram). baseline
    "init": deviations are taken from the first kept recorded epoch's kernel
    values (lazy-regime control); a threshold must then be supplied.
    discard_recorded drops that many leading recorded rows before the
    statistic (burn-in discard).
    """
    if trace.K_watch.shape[0] == 0 or len(trace.watch) == 0:
        raise ContractViolationError("trace carries no watched kernel entries")
    keep = slice(int(discard_recorded), None)
    epochs = trace.epochs[keep]
    values = trace.K_watch[keep]
    if epochs.size == 0:
        raise ContractViolationError("no recorded epochs left after discard")
    if baseline == "analytic":
        if spec is None:
            raise ContractViolationError("analytic baseline needs a kernel spec")
        X = np.asarray(X, dtype=np.float64)
        cert = certify_spd(spec, X)
        if threshold is None:
            threshold = cert.lambda_min / (2.0 * trace.n ** 2)
        gram = spec.gram(X).entries
        ref = np.array([gram[i, j] for (i, j) in trace.watch])
    elif baseline == "init":
        if threshold is None:
            raise ContractViolationError("init baseline needs an explicit threshold")
        ref = values[0]
    else:
        raise ContractViolationError(f"baseline must be 'analytic' or 'init', got {baseline!r}")
    dev = np.abs(values - ref[None, :])
    sup_dev = dev.max(axis=0)
    pair_exceeded = sup_dev >= threshold
    first = []
    for k in range(len(trace.watch)):
        hits = np.nonzero(dev[:, k] >= threshold)[0]
        first.append(int(epochs[hits[0]]) if hits.size else None)
    return GapReport(
        pairs=tuple(trace.watch), sup_dev=sup_dev, threshold=float(threshold),
        pair_exceeded=pair_exceeded, first_exceed_epoch=tuple(first),
        exceeded=bool(pair_exceeded.any()), baseline=baseline,
    )
