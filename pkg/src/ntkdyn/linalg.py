"""Dense symmetric-matrix helpers shared by every other module.

All arithmetic is float64: the divergence statistics accumulate over 1e4-1e5
gradient steps and 32-bit error is visible at that horizon.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolationError

SYMMETRY_RTOL = 1e-10


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise ContractViolationError(f"{name} must be 2-D, got ndim={A.ndim}")
    return A


def check_symmetric(M, name: str = "matrix") -> np.ndarray:
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise ContractViolationError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        # NaN compares false everywhere, so the skew test below would pass it
        raise ContractViolationError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 0.0)
    skew = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if skew > SYMMETRY_RTOL * scale:
        raise ContractViolationError(
            f"{name} is not symmetric: max |A - A^T| = {skew:.3e} (scale {scale:.3e})"
        )
    return A


def sym_eigvalues(M, name: str = "matrix") -> np.ndarray:
    """Full ascending spectrum of a symmetric matrix."""
    A = check_symmetric(M, name)
    # symmetrize so the solver sees an exactly Hermitian input
    return np.linalg.eigvalsh(0.5 * (A + A.T))


def sym_eig_min(M) -> float:
    """Minimum eigenvalue of a symmetric matrix."""
    return float(sym_eigvalues(M)[0])


def frobenius_distance(A, B) -> float:
    """sqrt(sum (A_ij - B_ij)^2); shapes must agree."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ContractViolationError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(np.sqrt(np.sum((A - B) ** 2)))
