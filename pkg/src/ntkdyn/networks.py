"""Finite-width ReLU networks under NTK parameterization.

Two scalar-output families:

* fcn:    alpha^0 = x;  alpha^l = sqrt(2/m) relu(W^l alpha^{l-1} + b^l),
          l = 1..L;  f = w_out . alpha^L
* resnet: alpha^0 = sqrt(1/m) (A x + b_in);
          alpha~^l = sqrt(2/m) relu(W^l alpha^{l-1} + b^l);
          alpha^l = alpha^{l-1} + a sqrt(1/m) (V^l alpha~^l + d^l);
          f = w_out . alpha^L

All parameters are drawn i.i.d. N(0,1) at initialization except the resnet
per-layer biases b^l and d^l, which start at exactly zero. relu'(0) := 0
throughout (the activation masks use a strict inequality).

Parameter flattening order (used for gradient vectors, the theta tracking in
training traces, and nothing else):

* fcn:    W^1 (row-major), b^1, W^2, b^2, ..., W^L, b^L, w_out
* resnet: A, b_in, then per layer l: W^l, b^l, V^l, d^l, then w_out

The empirical NTK Gram is assembled from the backward sensitivities
(per-layer m-vectors) and cached activations, layer by layer, so memory
stays O(L m n); full flat gradients (O(total params) per sample) exist only
in :func:`param_gradients`, which is the oracle path, never the Gram path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError
from .kernels import KernelMatrix
from .rng import RngStream, gaussian_matrix

FAMILIES = ("fcn", "resnet")


@dataclass(frozen=True)
class ArchDescriptor:
    family: str
    d: int
    m: int
    L: int
    a: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ContractViolationError(f"unknown family {self.family!r}")
        if self.d < 1 or self.m < 1 or self.L < 1:
            raise ContractViolationError(
                f"need d, m, L >= 1, got d={self.d} m={self.m} L={self.L}"
            )
        if self.family == "resnet" and self.a < 0:
            raise ContractViolationError(f"scale a must be >= 0, got {self.a}")


@dataclass
class FcnParams:
    arch: ArchDescriptor
    W: list
    b: list
    w_out: np.ndarray


@dataclass
class ResNetParams:
    arch: ArchDescriptor
    A: np.ndarray
    b_in: np.ndarray
    W: list
    b: list
    V: list
    d: list
    w_out: np.ndarray


NetworkParams = FcnParams | ResNetParams


@dataclass
class ForwardCache:
    """Activations and ReLU masks of one batched forward pass.

    alphas[k] is alpha^k with samples as columns (alphas[0] is the raw input
    for fcn); masks[k] is the boolean mask of hidden layer k+1; tildes[k] is
    the resnet branch activation alpha~^{k+1}; f holds the scalar outputs.
    """

    alphas: list
    masks: list
    f: np.ndarray
    tildes: list | None = None


def init_network(arch: ArchDescriptor, rng: RngStream) -> NetworkParams:
    """Fresh parameters; consumes the stream in the documented block order."""
    m, d, L = arch.m, arch.d, arch.L
    if arch.family == "fcn":
        W, b = [], []
        for l in range(L):
            W.append(gaussian_matrix(rng, m, d if l == 0 else m))
            b.append(rng.normal(m))
        w_out = rng.normal(m)
        return FcnParams(arch=arch, W=W, b=b, w_out=w_out)
    A = gaussian_matrix(rng, m, d)
    b_in = rng.normal(m)
    W, b, V, dd = [], [], [], []
    for l in range(L):
        W.append(gaussian_matrix(rng, m, m))
        b.append(np.zeros(m))
        V.append(gaussian_matrix(rng, m, m))
        dd.append(np.zeros(m))
    w_out = rng.normal(m)
    return ResNetParams(arch=arch, A=A, b_in=b_in, W=W, b=b, V=V, d=dd, w_out=w_out)


def _as_batch(X, d: int) -> np.ndarray:
    A = np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2 or A.shape[1] != d:
        raise ContractViolationError(f"inputs must be (n, {d}), got shape {A.shape}")
    return A


def forward_many(params: NetworkParams, X) -> tuple[np.ndarray, ForwardCache]:
    """Batched forward pass; returns outputs (n,) and the full cache."""
    arch = params.arch
    X = _as_batch(X, arch.d)
    m = arch.m
    cols = X.T  # samples as columns
    if arch.family == "fcn":
        alphas = [cols]
        masks = []
        act = cols
        for l in range(arch.L):
            pre = params.W[l] @ act + params.b[l][:, None]
            mask = pre > 0
            act = np.sqrt(2.0 / m) * np.where(mask, pre, 0.0)
            masks.append(mask)
            alphas.append(act)
        f = params.w_out @ act
        return f, ForwardCache(alphas=alphas, masks=masks, f=f)
    act = np.sqrt(1.0 / m) * (params.A @ cols + params.b_in[:, None])
    alphas = [act]
    masks = []
    tildes = []
    for l in range(arch.L):
        pre = params.W[l] @ act + params.b[l][:, None]
        mask = pre > 0
        til = np.sqrt(2.0 / m) * np.where(mask, pre, 0.0)
        act = act + arch.a * np.sqrt(1.0 / m) * (params.V[l] @ til + params.d[l][:, None])
        masks.append(mask)
        tildes.append(til)
        alphas.append(act)
    f = params.w_out @ act
    return f, ForwardCache(alphas=alphas, masks=masks, f=f, tildes=tildes)


def fcn_forward(params: FcnParams, x) -> tuple[float, ForwardCache]:
    """Single-input forward for the fully connected family."""
    if params.arch.family != "fcn":
        raise ContractViolationError("fcn_forward got non-fcn parameters")
    f, cache = forward_many(params, x)
    return float(f[0]), cache


def resnet_forward(params: ResNetParams, x) -> tuple[float, ForwardCache]:
    """Single-input forward for the residual family."""
    if params.arch.family != "resnet":
        raise ContractViolationError("resnet_forward got non-resnet parameters")
    f, cache = forward_many(params, x)
    return float(f[0]), cache


@dataclass
class BackwardSensitivities:
    """Per-layer output sensitivities of one batched backward pass.

    B[k] = df/d(pre-activation of hidden layer k+1), samples as columns.
    For resnet, G[k] = df/d(alpha^{k+1}) and g0 = df/d(alpha^0); the skip
    connections make these distinct from the B chain.
    """

    B: list
    G: list | None = None
    g0: np.ndarray | None = None


def backward_sensitivities(params: NetworkParams, cache: ForwardCache) -> BackwardSensitivities:
    arch = params.arch
    m, L = arch.m, arch.L
    n = cache.f.shape[0]
    scale = np.sqrt(2.0 / m)
    if arch.family == "fcn":
        B = [None] * L
        beta = scale * cache.masks[L - 1] * params.w_out[:, None]
        B[L - 1] = beta
        for l in range(L - 1, 0, -1):
            beta = scale * cache.masks[l - 1] * (params.W[l].T @ beta)
            B[l - 1] = beta
        return BackwardSensitivities(B=B)
    B = [None] * L
    G = [None] * L
    g = np.broadcast_to(params.w_out[:, None], (m, n)).copy()
    for l in range(L - 1, -1, -1):
        G[l] = g
        h = arch.a * np.sqrt(1.0 / m) * (params.V[l].T @ g)
        B[l] = scale * cache.masks[l] * h
        g = params.W[l].T @ B[l] + g
    return BackwardSensitivities(B=B, G=G, g0=g)


def empirical_ntk(params: NetworkParams, X, cache: ForwardCache | None = None) -> KernelMatrix:
    """Gram of parameter gradients on the rows of X, via the factorized sums.

    Each layer contributes <beta_i, beta_j> (<alpha_i, alpha_j> + 1), the +1
    being the bias block; the output layer adds <alpha^L_i, alpha^L_j>. Flat
    gradients are never formed. A cache from forward_many on the same (params,
    X) may be passed to skip the forward pass.
    """
    arch = params.arch
    if cache is None:
        _, cache = forward_many(params, X)
    sens = backward_sensitivities(params, cache)
    if arch.family == "fcn":
        K = cache.alphas[arch.L].T @ cache.alphas[arch.L]
        for l in range(arch.L):
            K += (sens.B[l].T @ sens.B[l]) * (cache.alphas[l].T @ cache.alphas[l] + 1.0)
    else:
        Xb = _as_batch(X, arch.d)
        m, a = arch.m, arch.a
        K = cache.alphas[arch.L].T @ cache.alphas[arch.L]
        K += (1.0 / m) * (sens.g0.T @ sens.g0) * (Xb @ Xb.T + 1.0)
        for l in range(arch.L):
            K += (sens.B[l].T @ sens.B[l]) * (cache.alphas[l].T @ cache.alphas[l] + 1.0)
            K += (a * a / m) * (sens.G[l].T @ sens.G[l]) * (cache.tildes[l].T @ cache.tildes[l] + 1.0)
    K = 0.5 * (K + K.T)  # kill float asymmetry from the summed products
    return KernelMatrix(entries=K, provenance="empirical", width=arch.m)


def _blocks(params: NetworkParams):
    """Parameter blocks in the documented flattening order."""
    if params.arch.family == "fcn":
        for l in range(params.arch.L):
            yield params.W[l]
            yield params.b[l]
        yield params.w_out
        return
    yield params.A
    yield params.b_in
    for l in range(params.arch.L):
        yield params.W[l]
        yield params.b[l]
        yield params.V[l]
        yield params.d[l]
    yield params.w_out


def params_to_vector(params: NetworkParams) -> np.ndarray:
    return np.concatenate([blk.ravel() for blk in _blocks(params)])


def vector_to_params(arch: ArchDescriptor, vec: np.ndarray) -> NetworkParams:
    vec = np.asarray(vec, dtype=np.float64)
    pos = 0

    def take(shape):
        nonlocal pos
        size = int(np.prod(shape))
        if pos + size > vec.size:
            raise ContractViolationError(
                f"vector length {vec.size} too short for arch (needs more than {pos + size})"
            )
        out = vec[pos : pos + size].reshape(shape).copy()
        pos += size
        return out

    m, d, L = arch.m, arch.d, arch.L
    if arch.family == "fcn":
        W, b = [], []
        for l in range(L):
            W.append(take((m, d if l == 0 else m)))
            b.append(take((m,)))
        out = FcnParams(arch=arch, W=W, b=b, w_out=take((m,)))
    else:
        A = take((m, d))
        b_in = take((m,))
        W, b, V, dd = [], [], [], []
        for l in range(L):
            W.append(take((m, m)))
            b.append(take((m,)))
            V.append(take((m, m)))
            dd.append(take((m,)))
        out = ResNetParams(arch=arch, A=A, b_in=b_in, W=W, b=b, V=V, d=dd, w_out=take((m,)))
    if pos != vec.size:
        raise ContractViolationError(f"vector length {vec.size} does not match arch (used {pos})")
    return out


def copy_params(params: NetworkParams) -> NetworkParams:
    return vector_to_params(params.arch, params_to_vector(params))


def max_abs_param_delta(params: NetworkParams, ref: NetworkParams) -> float:
    """max_i |theta_i - theta0_i| without concatenating the flat vectors."""
    worst = 0.0
    for blk, blk0 in zip(_blocks(params), _blocks(ref)):
        worst = max(worst, float(np.max(np.abs(blk - blk0))))
    return worst


def param_gradients(params: NetworkParams, x) -> np.ndarray:
    """Flat gradient of the scalar output at one input, documented order."""
    arch = params.arch
    X = _as_batch(x, arch.d)
    if X.shape[0] != 1:
        raise ContractViolationError("param_gradients takes a single input vector")
    f, cache = forward_many(params, X)
    sens = backward_sensitivities(params, cache)
    xcol = X.T
    chunks = []
    if arch.family == "fcn":
        for l in range(arch.L):
            chunks.append((sens.B[l] @ cache.alphas[l].T).ravel())
            chunks.append(sens.B[l][:, 0])
        chunks.append(cache.alphas[arch.L][:, 0])
        return np.concatenate(chunks)
    root = np.sqrt(1.0 / arch.m)
    chunks.append(root * (sens.g0 @ xcol.T).ravel())
    chunks.append(root * sens.g0[:, 0])
    for l in range(arch.L):
        chunks.append((sens.B[l] @ cache.alphas[l].T).ravel())
        chunks.append(sens.B[l][:, 0])
        chunks.append(arch.a * root * (sens.G[l] @ cache.tildes[l].T).ravel())
        chunks.append(arch.a * root * sens.G[l][:, 0])
    chunks.append(cache.alphas[arch.L][:, 0])
    return np.concatenate(chunks)


def apply_weighted_gradients(params: NetworkParams, X, coeffs: np.ndarray,
                             cache: ForwardCache | None = None) -> NetworkParams:
    """In-place update theta += sum_i coeffs[i] * grad f(x_i); returns params."""
    arch = params.arch
    X = _as_batch(X, arch.d)
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape != (X.shape[0],):
        raise ContractViolationError(f"coeffs must have shape ({X.shape[0]},), got {c.shape}")
    if cache is None:
        _, cache = forward_many(params, X)
    sens = backward_sensitivities(params, cache)
    if arch.family == "fcn":
        for l in range(arch.L):
            params.W[l] += (sens.B[l] * c) @ cache.alphas[l].T
            params.b[l] += sens.B[l] @ c
        params.w_out += cache.alphas[arch.L] @ c
        return params
    root = np.sqrt(1.0 / arch.m)
    params.A += root * ((sens.g0 * c) @ X)
    params.b_in += root * (sens.g0 @ c)
    for l in range(arch.L):
        params.W[l] += (sens.B[l] * c) @ cache.alphas[l].T
        params.b[l] += sens.B[l] @ c
        params.V[l] += arch.a * root * ((sens.G[l] * c) @ cache.tildes[l].T)
        params.d[l] += arch.a * root * (sens.G[l] @ c)
    params.w_out += cache.alphas[arch.L] @ c
    return params


def grad_check(params: NetworkParams, x, step: float) -> float:
    """Max relative error of param_gradients against central differences."""
    if not step > 0:
        raise ContractViolationError(f"finite-difference step must be > 0, got {step}")
    analytic = param_gradients(params, x)
    theta = params_to_vector(params)
    worst = 0.0
    for i in range(theta.size):
        bump = np.zeros_like(theta)
        bump[i] = step
        f_plus, _ = forward_many(vector_to_params(params.arch, theta + bump), x)
        f_minus, _ = forward_many(vector_to_params(params.arch, theta - bump), x)
        fd = (float(f_plus[0]) - float(f_minus[0])) / (2.0 * step)
        err = abs(analytic[i] - fd) / max(1.0, abs(analytic[i]))
        worst = max(worst, err)
    return worst
