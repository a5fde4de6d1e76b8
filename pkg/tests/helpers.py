"""Shared oracle helpers for the test suite.

Everything here is deliberately independent of the library implementation
paths it is used to check: Monte-Carlo estimators draw from numpy's default
generator, finite differences go through the public vector round-trip, and
the closed-form eigenvalue solver below is hand-rolled trigonometry.
"""

import numpy as np


def mc_relu_moments(sxx, sxy, syy, ndraw, seed):
    """Monte-Carlo E[relu(z)relu(z')] and E[1(z>0)1(z'>0)] for a centered
    Gaussian pair with the given covariance. Returns (m1, se1, m0, se0)."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((2, ndraw))
    rho = sxy / np.sqrt(sxx * syy)
    z1 = np.sqrt(sxx) * g[0]
    z2 = np.sqrt(syy) * (rho * g[0] + np.sqrt(max(1.0 - rho * rho, 0.0)) * g[1])
    p1 = np.maximum(z1, 0.0) * np.maximum(z2, 0.0)
    p0 = np.logical_and(z1 > 0.0, z2 > 0.0).astype(float)
    return (
        float(p1.mean()),
        float(p1.std() / np.sqrt(ndraw)),
        float(p0.mean()),
        float(p0.std() / np.sqrt(ndraw)),
    )


def det3(M):
    return (
        M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
        - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
        + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0])
    )


def cubic_symmetric_eigvalues(M):
    """All three eigenvalues of a symmetric 3x3 matrix via the trigonometric
    solution of the characteristic cubic. Shares no code with any LAPACK
    eigensolver route."""
    c2 = M[0, 0] + M[1, 1] + M[2, 2]
    c1 = (
        (M[1, 1] * M[2, 2] - M[1, 2] ** 2)
        + (M[0, 0] * M[2, 2] - M[0, 2] ** 2)
        + (M[0, 0] * M[1, 1] - M[0, 1] ** 2)
    )
    c0 = det3(M)
    # depressed cubic t^3 + p t + q after lambda = t + c2/3
    p = c1 - c2 * c2 / 3.0
    q = c1 * c2 / 3.0 - 2.0 * c2 ** 3 / 27.0 - c0
    r = np.sqrt(max(-p / 3.0, 0.0))
    if r == 0.0:
        return np.full(3, c2 / 3.0)
    arg = np.clip(-q / (2.0 * r ** 3), -1.0, 1.0)
    phi = np.arccos(arg) / 3.0
    k = np.arange(3)
    return np.sort(2.0 * r * np.cos(phi - 2.0 * np.pi * k / 3.0) + c2 / 3.0)


def circulant_eigvalues(first_row):
    """Eigenvalues of a symmetric circulant matrix from its first row."""
    c = np.asarray(first_row, dtype=float)
    n = c.size
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    return (c[None, :] * np.cos(2.0 * np.pi * k * j / n)).sum(axis=1)


def k_from_watch(trace, r):
    """Rebuild the full symmetric kernel matrix from a recorded trace row.

    Requires the trace watch list to cover every pair i <= j, which is the
    default watch."""
    K = np.zeros((trace.n, trace.n))
    for (i, j), v in zip(trace.watch, trace.K_watch[r]):
        K[i, j] = v
        K[j, i] = v
    return K


def fcn_forward_oracle(params, x):
    """Test-side FCN forward pass, written independently of the library.

    Returns (f, min margin over all preactivations)."""
    arch = params.arch
    a = np.asarray(x, dtype=float)
    margin = np.inf
    for W, b in zip(params.W, params.b):
        pre = W @ a + b
        margin = min(margin, float(np.abs(pre).min()))
        a = np.sqrt(2.0 / arch.m) * np.maximum(pre, 0.0)
    return float(params.w_out @ a), margin


def resnet_forward_oracle(params, x):
    """Test-side ResNet forward pass. Returns (f, min margin)."""
    arch = params.arch
    a = np.sqrt(1.0 / arch.m) * (params.A @ np.asarray(x, dtype=float) + params.b_in)
    margin = np.inf
    for W, b, V, d in zip(params.W, params.b, params.V, params.d):
        pre = W @ a + b
        margin = min(margin, float(np.abs(pre).min()))
        tilde = np.sqrt(2.0 / arch.m) * np.maximum(pre, 0.0)
        a = a + arch.a * np.sqrt(1.0 / arch.m) * (V @ tilde + d)
    return float(params.w_out @ a), margin


def forward_margin(params, x):
    if params.arch.family == "fcn":
        return fcn_forward_oracle(params, x)[1]
    return resnet_forward_oracle(params, x)[1]


def sample_kink_free(params, rng, min_margin=1e-2, scale=1.0, max_tries=500):
    """Draw an input whose preactivations all stay away from the ReLU kink."""
    for _ in range(max_tries):
        x = scale * rng.standard_normal(params.arch.d)
        if forward_margin(params, x) > min_margin:
            return x
    raise AssertionError("could not find a kink-free input")
