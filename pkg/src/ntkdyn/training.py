"""Full-batch gradient descent on cross-entropy or MSE, with trace recording.

Binary labels y in {0,1} enter through the sign s_i = 2 y_i - 1. The
cross-entropy loss is sum_i ln(1 + exp(-s_i f_i)) and its residual is

    u_i = 1 / (1 + exp(s_i f_i))  in [0, 1],

the gap between the sigmoid output and the label. The MSE loss is the
sample mean (1/(2n)) sum_i (f_i - s_i)^2 with targets +-1; the mean (rather
than sum) normalization keeps the paperwork of one fixed learning rate
meaningful across sample counts, and is what the lazy-regime control runs
assume.

Gradient flow is discretized as plain gradient descent, so one step of size
lr advances time by lr; no momentum, no weight decay, no stochasticity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, DivergedRunError
from .kernels import kernel_entries
from .linalg import sym_eig_min
from .networks import (ArchDescriptor, NetworkParams, apply_weighted_gradients,
                       copy_params, empirical_ntk, forward_many, init_network,
                       max_abs_param_delta)
from .rng import RngStream

LOSS_KINDS = ("xent", "mse")

LYAPUNOV_FLOOR = 1e-300


@dataclass
class SampleSet:
    """n training inputs (rows of X) with binary labels."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y)
        if self.X.ndim != 2:
            raise ContractViolationError(f"X must be (n, d), got shape {self.X.shape}")
        if self.y.shape != (self.X.shape[0],):
            raise ContractViolationError(
                f"y must have shape ({self.X.shape[0]},), got {self.y.shape}"
            )
        if not np.all((self.y == 0) | (self.y == 1)):
            raise ContractViolationError("labels must be 0 or 1")
        self.y = self.y.astype(np.int64)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def signs(self) -> np.ndarray:
        return 2.0 * self.y - 1.0


def _stable_sigmoid(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def residuals_from_outputs(f, y) -> np.ndarray:
    """u_i = 1 / (1 + exp(s_i f_i)), stable for |f| up to overflow scale."""
    f = np.asarray(f, dtype=np.float64)
    s = 2.0 * np.asarray(y) - 1.0
    return _stable_sigmoid(-s * f)


def residuals(params: NetworkParams, data: SampleSet) -> np.ndarray:
    f, _ = forward_many(params, data.X)
    return residuals_from_outputs(f, data.y)


def loss_from_outputs(f, y, kind: str) -> float:
    f = np.asarray(f, dtype=np.float64)
    s = 2.0 * np.asarray(y) - 1.0
    if kind == "xent":
        return float(np.sum(np.logaddexp(0.0, -s * f)))
    if kind == "mse":
        return float(0.5 * np.mean((f - s) ** 2))
    raise ContractViolationError(f"loss kind must be one of {LOSS_KINDS}, got {kind!r}")


def loss_value(params: NetworkParams, data: SampleSet, kind: str) -> float:
    f, _ = forward_many(params, data.X)
    return loss_from_outputs(f, data.y, kind)


def _step_coefficients(f: np.ndarray, data: SampleSet, kind: str, lr: float) -> np.ndarray:
    """Weights c with theta <- theta + sum_i c_i grad f(x_i) == one GD step."""
    s = data.signs
    if kind == "xent":
        u = residuals_from_outputs(f, data.y)
        return lr * s * u
    return -lr * (f - s) / data.n


@dataclass
class TrainingConfig:
    arch: ArchDescriptor
    lr: float
    epochs: int
    loss: str = "xent"
    record_every: int = 1
    seed: int = 0
    ntk_watch: tuple | None = None  # pairs (i, j); None -> all i <= j

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise ContractViolationError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.lr < 0:
            raise ContractViolationError(f"learning rate must be >= 0, got {self.lr}")
        if self.epochs < 0:
            raise ContractViolationError(f"epochs must be >= 0, got {self.epochs}")
        if self.record_every < 1:
            raise ContractViolationError(f"record-every must be >= 1, got {self.record_every}")
        if self.ntk_watch is not None:
            self.ntk_watch = tuple((int(i), int(j)) for i, j in self.ntk_watch)


def loss_gradient_step(params: NetworkParams, data: SampleSet, config: TrainingConfig) -> NetworkParams:
    """One full-batch gradient-descent step, in place; returns params."""
    f, cache = forward_many(params, data.X)
    c = _step_coefficients(f, data, config.loss, config.lr)
    return apply_weighted_gradients(params, data.X, c, cache)


def kr_matrix(K, y) -> np.ndarray:
    """Sign-conjugated Gram diag(2y-1) K diag(2y-1); same spectrum as K."""
    A = kernel_entries(K)
    y = np.asarray(y)
    if y.shape != (A.shape[0],):
        raise ContractViolationError(f"labels shape {y.shape} does not match Gram {A.shape}")
    s = 2.0 * y - 1.0
    return s[:, None] * A * s[None, :]


def lyapunov(u) -> float:
    """-sum ln(1 - u_i) >= 0; +inf sentinel once any residual saturates at 1."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0) or np.any(u > 1):
        raise ContractViolationError("residuals must lie in [0, 1]")
    if np.any(u >= 1.0):
        return float("inf")
    return float(-np.sum(np.log(np.maximum(1.0 - u, LYAPUNOV_FLOOR))))


def residual_dynamics_rhs(u, K, y) -> np.ndarray:
    """du_i/dt = -u_i (1 - u_i) [K^r u]_i along cross-entropy gradient flow."""
    u = np.asarray(u, dtype=np.float64)
    Kr = kr_matrix(K, y)
    if u.shape != (Kr.shape[0],):
        raise ContractViolationError(f"u shape {u.shape} does not match Gram {Kr.shape}")
    return -u * (1.0 - u) * (Kr @ u)


@dataclass
class TrainingTrace:
    """Everything recorded over one run, row per recorded epoch."""

    n: int
    watch: tuple
    epochs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    f: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    u: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    V: np.ndarray = field(default_factory=lambda: np.zeros(0))
    loss: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lambda_min: np.ndarray = field(default_factory=lambda: np.zeros(0))
    K_watch: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    theta_inf_dist: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diverged: bool = False

    def watch_series(self, i: int, j: int) -> np.ndarray:
        for k, (a, b) in enumerate(self.watch):
            if (a, b) == (i, j) or (b, a) == (i, j):
                return self.K_watch[:, k]
        raise ContractViolationError(f"pair ({i}, {j}) is not watched")


def default_watch(n: int) -> tuple:
    return tuple((i, j) for i in range(n) for j in range(i, n))


def train(config: TrainingConfig, data: SampleSet, rng: RngStream | None = None,
          on_record=None) -> TrainingTrace:
    """Run gradient descent and return the recorded trace.

    Records epoch 0 (initialization), every record_every-th epoch, and the
    final epoch. A non-finite loss aborts with DivergedRunError carrying the
    rows recorded so far. Identical (config, data, rng seed) reproduce the
    trace exactly.
    """
    if not config.lr > 0:
        raise ContractViolationError("train needs a strictly positive learning rate")
    if rng is None:
        rng = RngStream(config.seed)
    watch = config.ntk_watch if config.ntk_watch is not None else default_watch(data.n)
    for (i, j) in watch:
        if not (0 <= i < data.n and 0 <= j < data.n):
            raise ContractViolationError(f"watched pair ({i}, {j}) out of range for n={data.n}")
    params = init_network(config.arch, rng)
    params0 = copy_params(params)

    rows = {key: [] for key in ("epochs", "f", "u", "V", "loss", "lambda_min",
                                "K_watch", "theta_inf_dist")}

    def finalize(diverged: bool) -> TrainingTrace:
        R = len(rows["epochs"])
        return TrainingTrace(
            n=data.n,
            watch=tuple(watch),
            epochs=np.asarray(rows["epochs"], dtype=np.int64),
            f=np.asarray(rows["f"]).reshape(R, data.n),
            u=np.asarray(rows["u"]).reshape(R, data.n),
            V=np.asarray(rows["V"]),
            loss=np.asarray(rows["loss"]),
            lambda_min=np.asarray(rows["lambda_min"]),
            K_watch=np.asarray(rows["K_watch"]).reshape(R, len(watch)),
            theta_inf_dist=np.asarray(rows["theta_inf_dist"]),
            diverged=diverged,
        )

    def record(epoch: int):
        f, cache = forward_many(params, data.X)
        lossv = loss_from_outputs(f, data.y, config.loss)
        if not np.isfinite(lossv):
            raise DivergedRunError(
                f"non-finite loss at epoch {epoch}", trace=finalize(True)
            )
        u = residuals_from_outputs(f, data.y)
        # the stable loss keeps returning |f|-sized finite values long after
        # the Gram products have overflowed, so guard the kernel directly
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                K = empirical_ntk(params, data.X, cache=cache)
        except ContractViolationError:
            raise DivergedRunError(
                f"non-finite empirical kernel at epoch {epoch}", trace=finalize(True)
            ) from None
        if not np.all(np.isfinite(K.entries)):
            raise DivergedRunError(
                f"non-finite empirical kernel at epoch {epoch}", trace=finalize(True)
            )
        lam = sym_eig_min(K.entries)
        kv = np.array([K.entries[i, j] for (i, j) in watch])
        rows["epochs"].append(epoch)
        rows["f"].append(f.copy())
        rows["u"].append(u)
        rows["V"].append(lyapunov(u))
        rows["loss"].append(lossv)
        rows["lambda_min"].append(lam)
        rows["K_watch"].append(kv)
        rows["theta_inf_dist"].append(max_abs_param_delta(params, params0))
        if on_record is not None:
            on_record({
                "epoch": epoch, "f": f.copy(), "u": u.copy(), "V": rows["V"][-1],
                "loss": lossv, "lambda_min": lam,
                "K": {pair: float(val) for pair, val in zip(watch, kv)},
                "theta_inf_dist": rows["theta_inf_dist"][-1],
            })

    record(0)
    # overflow to inf/nan inside a blown-up step is how divergence is
    # detected, so the float warnings carry no extra information here
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(1, config.epochs + 1):
            f, cache = forward_many(params, data.X)
            lossv = loss_from_outputs(f, data.y, config.loss)
            if not np.isfinite(lossv):
                raise DivergedRunError(f"non-finite loss at epoch {t - 1}", trace=finalize(True))
            c = _step_coefficients(f, data, config.loss, config.lr)
            apply_weighted_gradients(params, data.X, c, cache)
            if t % config.record_every == 0 or t == config.epochs:
                record(t)
    return finalize(False)
