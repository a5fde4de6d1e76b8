"""Infinite-width NTK evaluation for ReLU networks.

The kernels are built from the two arc-cosine moment functions

    kappa0(u) = (pi - arccos u) / pi
    kappa1(u) = (u (pi - arccos u) + sqrt(1 - u^2)) / pi

which give the ReLU Gaussian expectations in closed form: for (f, g) jointly
centered Gaussian with covariance [[S_xx, S_xy], [S_xy, S_yy]] and
correlation rho = S_xy / sqrt(S_xx S_yy),

    E[relu(f) relu(g)]   = sqrt(S_xx S_yy) kappa1(rho) / 2
    E[relu'(f) relu'(g)] = kappa0(rho) / 2

Two conventions are implemented for the fully connected kernel, differing
only in the bias constants of the layer recursion:

* ``bias_mode="doubled"`` (the default form of :func:`fcntk`): covariance
  recursion S' = sqrt(S_xx S_yy) kappa1(rho) + 2, and the depth sum keeps the
  top covariance term, i.e. K = sum_{l=1}^{L+1} S_l prod_{r=l}^{L} kappa0(rho_r).
* ``bias_mode="unit"``: covariance recursion adds +1 per layer and the output
  layer contributes only its weight Gram, K = sum_{l=1}^{L} S_l
  prod_{r=l}^{L} kappa0(rho_r) + sqrt(...) kappa1(rho_L). This is the
  infinite-width limit of the empirical NTK of the finite networks built by
  :mod:`ntkdyn.networks` (unit-variance biases, no output bias), and is the
  convention to compare finite-width measurements against.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ContractViolationError
from .linalg import check_symmetric

_DOMAIN_TOL = 1e-12

FCN_BIAS_MODES = ("doubled", "unit")


def _check_kappa_domain(u) -> np.ndarray:
    a = np.asarray(u, dtype=np.float64)
    # not-all form so NaN (which compares false both ways) is rejected too
    if not np.all(np.abs(a) <= 1.0 + _DOMAIN_TOL):
        worst = float(np.max(np.abs(a)))
        raise ContractViolationError(f"kappa argument outside [-1, 1]: |u| up to {worst!r}")
    return np.clip(a, -1.0, 1.0)


def kappa0(u):
    """(pi - arccos u) / pi on [-1, 1]; monotone, range [0, 1]."""
    a = _check_kappa_domain(u)
    out = 1.0 - np.arccos(a) / np.pi
    return float(out) if np.isscalar(u) else out


def kappa1(u):
    """(u (pi - arccos u) + sqrt(1 - u^2)) / pi on [-1, 1]."""
    a = _check_kappa_domain(u)
    out = (a * (np.pi - np.arccos(a)) + np.sqrt(np.maximum(0.0, 1.0 - a * a))) / np.pi
    return float(out) if np.isscalar(u) else out


def _clip_corr(rho: np.ndarray) -> np.ndarray:
    # float drift can push |rho| to 1 + 1e-16; clamp before arccos
    return np.clip(rho, -1.0, 1.0)


def _as_points(X) -> np.ndarray:
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ContractViolationError(f"point set must be (n, d) with n, d >= 1, got {A.shape}")
    return A


def fcn_gram(X, L: int, bias_mode: str = "doubled") -> np.ndarray:
    """Fully connected NTK Gram on the rows of X, depth L hidden layers."""
    if L < 1:
        raise ContractViolationError(f"depth must be >= 1, got {L}")
    if bias_mode not in FCN_BIAS_MODES:
        raise ContractViolationError(f"bias_mode must be one of {FCN_BIAS_MODES}, got {bias_mode!r}")
    X = _as_points(X)
    bias = 2.0 if bias_mode == "doubled" else 1.0
    S = X @ X.T + 1.0
    theta = S.copy() if bias_mode == "doubled" else np.zeros_like(S)
    A = None
    for _ in range(L):
        norms = np.sqrt(np.diag(S))
        outer = np.outer(norms, norms)
        rho = _clip_corr(S / outer)
        A = outer * kappa1(rho)
        dot = kappa0(rho)
        if bias_mode == "doubled":
            S = A + bias
            theta = theta * dot + S
        else:
            theta = (theta + S) * dot
            S = A + bias
    if bias_mode == "doubled":
        return theta
    return theta + A


def fcntk(x, xp, L: int, bias_mode: str = "doubled") -> float:
    """Fully connected NTK value for one input pair."""
    x = np.asarray(x, dtype=np.float64).ravel()
    xp = np.asarray(xp, dtype=np.float64).ravel()
    if x.shape != xp.shape:
        raise ContractViolationError(f"input dimension mismatch: {x.shape} vs {xp.shape}")
    return float(fcn_gram(np.stack([x, xp]), L, bias_mode)[0, 1])


def _res_augment(X) -> tuple[np.ndarray, np.ndarray]:
    X = _as_points(X)
    aug = np.hstack([X, np.ones((X.shape[0], 1))])
    norms = np.sqrt(np.sum(aug * aug, axis=1))
    return aug / norms[:, None], norms


def res_gram(X, L: int, a: float, return_level_args: bool = False):
    """Residual-network NTK Gram on the rows of X.

    Inputs are lifted and normalized to x_tilde = (x, 1) / ||(x, 1)||, the
    level recursion K_l = K_{l-1} + a^2 (1+a^2)^{l-1} kappa1(K_{l-1} /
    (1+a^2)^{l-1}) is run for l = 1..L together with the backward products
    B_l, and the result is scaled back by ||(x, 1)|| ||(x', 1)||.
    """
    if L < 1:
        raise ContractViolationError(f"depth must be >= 1, got {L}")
    if not a > 0:
        raise ContractViolationError(f"scale a must be > 0, got {a}")
    Xt, norms = _res_augment(X)
    a2 = a * a
    K = Xt @ Xt.T
    K0 = K.copy()
    levels = [K.copy()]  # K_0 .. K_{L-1} feed the kappa arguments
    args = []
    for l in range(1, L + 1):
        scale = (1.0 + a2) ** (l - 1)
        arg = levels[-1] / scale
        args.append(arg.copy())
        K = levels[-1] + a2 * scale * kappa1(_clip_corr(arg))
        levels.append(K.copy())
    if return_level_args:
        return np.stack(args)
    KL = levels[L]
    B = np.ones_like(K0)  # B_{L+1}
    r = np.zeros_like(K0)
    for l in range(L, 0, -1):
        scale = (1.0 + a2) ** (l - 1)
        arg = _clip_corr(levels[l - 1] / scale)
        r += B * (scale * kappa1(arg) + (levels[l - 1] + 1.0) * kappa0(arg) + 1.0)
        B = B * (1.0 + a2 * kappa0(arg))  # B_l from B_{l+1}
    outer = np.outer(norms, norms)
    return outer * (KL + K0 * B + a2 * r)


def resntk(x, xp, L: int, a: float) -> float:
    """Residual-network NTK value for one input pair."""
    x = np.asarray(x, dtype=np.float64).ravel()
    xp = np.asarray(xp, dtype=np.float64).ravel()
    if x.shape != xp.shape:
        raise ContractViolationError(f"input dimension mismatch: {x.shape} vs {xp.shape}")
    return float(res_gram(np.stack([x, xp]), L, a)[0, 1])


def resntk_level_args(x, xp, L: int, a: float) -> np.ndarray:
    """The kappa arguments K_{l-1}/(1+a^2)^{l-1} seen at every level.

    Diagnostic for the domain invariant: every returned value must lie in
    [-1, 1] (up to float drift) for the closed form to be meaningful.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    xp = np.asarray(xp, dtype=np.float64).ravel()
    stacked = res_gram(np.stack([x, xp]), L, a, return_level_args=True)
    return stacked[:, 0, 1]


def kappa_maclaurin_coeffs(which: str, N: int) -> tuple[np.ndarray, np.ndarray]:
    """First N terms of the Maclaurin series of kappa0 or kappa1.

    Returns (powers, coeffs): the exponent and real coefficient of each of
    the first N nonvanishing terms, in increasing power order. The factorial
    ratios are accumulated as exact rationals through a multiplicative
    recurrence (never raw factorials), then divided by pi at the end.

    kappa0(u) = 1/2 + (1/pi) sum_{n>=0} (2n)! / (4^n (n!)^2 (2n+1)) u^(2n+1)
    kappa1(u) = 1/pi + u/2 + (1/(2 pi)) sum_{n>=0} (2n)! / (4^n n! (n+1)! (2n+1)) u^(2n+2)
    """
    if N < 1:
        raise ContractViolationError(f"need N >= 1 terms, got {N}")
    if which not in ("kappa0", "kappa1"):
        raise ContractViolationError(f"which must be 'kappa0' or 'kappa1', got {which!r}")
    powers = []
    coeffs = []
    if which == "kappa0":
        powers.append(0)
        coeffs.append(0.5)
        c = Fraction(1)  # c_n = (2n)! / (4^n (n!)^2 (2n+1)), starting at n=0
        n = 0
        while len(powers) < N:
            powers.append(2 * n + 1)
            coeffs.append(float(c) / np.pi)
            c *= Fraction(2 * n + 1, 2 * n + 2) * Fraction(2 * n + 1, 2 * n + 3)
            n += 1
    else:
        powers.append(0)
        coeffs.append(1.0 / np.pi)
        if N > 1:
            powers.append(1)
            coeffs.append(0.5)
        d = Fraction(1)  # d_n = (2n)! / (4^n n! (n+1)! (2n+1)), starting at n=0
        n = 0
        while len(powers) < N:
            powers.append(2 * n + 2)
            coeffs.append(float(d) / (2.0 * np.pi))
            d *= Fraction(2 * n + 1, 2 * (n + 2)) * Fraction(2 * n + 1, 2 * n + 3)
            n += 1
    return np.asarray(powers, dtype=np.int64), np.asarray(coeffs, dtype=np.float64)


@dataclass(frozen=True)
class AnalyticKernelSpec:
    """Which infinite-width kernel to evaluate.

    family: "fcntk" or "resntk"; depth: hidden layers L >= 1; scale_a: the
    residual branch scale (resntk only); bias_mode: fcntk bias convention,
    see the module docstring ("doubled" is the standard closed form, "unit"
    matches the finite networks of this package at initialization).
    """

    family: str
    depth: int
    scale_a: float = 1.0
    bias_mode: str = "doubled"

    def __post_init__(self):
        if self.family not in ("fcntk", "resntk"):
            raise ContractViolationError(f"unknown kernel family {self.family!r}")
        if self.depth < 1:
            raise ContractViolationError(f"depth must be >= 1, got {self.depth}")
        if self.family == "resntk" and not self.scale_a > 0:
            raise ContractViolationError(f"scale_a must be > 0, got {self.scale_a}")
        if self.bias_mode not in FCN_BIAS_MODES:
            raise ContractViolationError(f"bias_mode must be one of {FCN_BIAS_MODES}")

    def value(self, x, xp) -> float:
        if self.family == "fcntk":
            return fcntk(x, xp, self.depth, self.bias_mode)
        return resntk(x, xp, self.depth, self.scale_a)

    def gram(self, X) -> "KernelMatrix":
        if self.family == "fcntk":
            entries = fcn_gram(X, self.depth, self.bias_mode)
        else:
            entries = res_gram(X, self.depth, self.scale_a)
        return KernelMatrix(entries=entries, provenance="analytic", spec=self)


@dataclass
class KernelMatrix:
    """A kernel Gram with its provenance.

    provenance is "analytic" (entries from an AnalyticKernelSpec) or
    "empirical" (Gram of finite-network parameter gradients, which is
    positive semi-definite by construction); empirical matrices carry the
    width and, when produced inside a training run, the epoch.
    """

    entries: np.ndarray
    provenance: str
    spec: AnalyticKernelSpec | None = None
    width: int | None = None
    epoch: int | None = None

    def __post_init__(self):
        self.entries = check_symmetric(self.entries, "kernel matrix")
        if self.provenance not in ("analytic", "empirical"):
            raise ContractViolationError(f"unknown provenance {self.provenance!r}")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def kernel_entries(K) -> np.ndarray:
    """Accept a KernelMatrix or a plain array and return the dense entries."""
    if isinstance(K, KernelMatrix):
        return K.entries
    return check_symmetric(K, "kernel matrix")
