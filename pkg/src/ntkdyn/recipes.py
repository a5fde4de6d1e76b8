"""Experiment recipes: kernel slices, width sweeps, divergence runs, parity.

Every recipe is a pure function of its configuration and seed; rerunning
writes byte-identical CSVs. Empirical-vs-analytic comparisons use the
"unit" bias convention of the fully connected kernel (the initialization
limit of the finite networks here); the residual kernel has a single
convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .certify import GapReport, SpdCertificate, certify_spd, divergence_gap
from .datasets import load_mnist, make_circle_dataset
from .errors import ContractViolationError
from .kernels import AnalyticKernelSpec
from .networks import ArchDescriptor, empirical_ntk, init_network
from .rng import RngStream
from .training import SampleSet, TrainingConfig, TrainingTrace, train
from .traceio import (TraceCsvWriter, write_certificate_csv, write_gap_csv,
                      write_slice_csv, write_sweep_summary_csv)

LAZY_REL_TOL = 0.05  # lazy-regime control: 5% of max |K_0|

SUBSET_STREAM = 1  # stream-id for dataset subsetting, distinct from init


def circle_points(thetas) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=np.float64)
    if np.any(thetas < -np.pi - 1e-12) or np.any(thetas > np.pi + 1e-12):
        raise ContractViolationError("slice angles must lie in [-pi, pi]")
    return np.stack([np.cos(thetas), np.sin(thetas)], axis=1)


def slice_grid(count: int = 64) -> np.ndarray:
    if count < 1:
        raise ContractViolationError(f"grid needs >= 1 points, got {count}")
    return np.linspace(-np.pi, np.pi, count)


def kernel_slice(source, base, thetas) -> np.ndarray:
    """K(base, (cos t, sin t)) over the grid, empirical or analytic.

    source is either NetworkParams (empirical NTK at those parameters) or an
    AnalyticKernelSpec.
    """
    base = np.asarray(base, dtype=np.float64).ravel()
    pts = circle_points(thetas)
    if base.shape != (2,):
        raise ContractViolationError("slice base point must be 2-dimensional")
    X = np.vstack([base[None, :], pts])
    if isinstance(source, AnalyticKernelSpec):
        gram = source.gram(X).entries
    else:
        if source.arch.d != 2:
            raise ContractViolationError("slice needs a 2-d input network")
        gram = empirical_ntk(source, X).entries
    return gram[0, 1:]


def analytic_init_spec(arch: ArchDescriptor) -> AnalyticKernelSpec:
    """The infinite-width kernel matching init_network at initialization."""
    if arch.family == "fcn":
        return AnalyticKernelSpec(family="fcntk", depth=arch.L, bias_mode="unit")
    return AnalyticKernelSpec(family="resntk", depth=arch.L, scale_a=arch.a)


@dataclass
class WidthSweepResult:
    widths: tuple
    seeds: int
    thetas: np.ndarray
    analytic: np.ndarray
    empirical: dict  # (m, seed) -> values over grid
    sup_dev: dict  # (m, seed) -> float

    def mean_sup_dev(self, m: int) -> float:
        vals = [v for (mm, _), v in self.sup_dev.items() if mm == m]
        return float(np.mean(vals))


def run_width_sweep(widths, n_seeds: int, out_csv=None, summary_csv=None, *,
                    depth: int = 3, grid_points: int = 64, base=(1.0, 0.0),
                    family: str = "fcn") -> WidthSweepResult:
    """Init-kernel slices across widths and seeds, plus sup deviations.

    Stream (seed, stream-id=width) initializes each network, so widths do
    not share draws and adding a width never shifts the others.
    """
    widths = tuple(int(m) for m in widths)
    if not widths:
        raise ContractViolationError("width list must be nonempty")
    if n_seeds < 1:
        raise ContractViolationError(f"need >= 1 seeds, got {n_seeds}")
    thetas = slice_grid(grid_points)
    base = np.asarray(base, dtype=np.float64)
    ref_arch = ArchDescriptor(family=family, d=2, m=widths[0], L=depth)
    spec = analytic_init_spec(ref_arch)
    analytic = kernel_slice(spec, base, thetas)
    rows = [(None, None, t, v, "analytic") for t, v in zip(thetas, analytic)]
    empirical = {}
    sup_dev = {}
    for m in widths:
        arch = ArchDescriptor(family=family, d=2, m=m, L=depth)
        for seed in range(n_seeds):
            params = init_network(arch, RngStream(seed, stream_id=m))
            values = kernel_slice(params, base, thetas)
            empirical[(m, seed)] = values
            sup_dev[(m, seed)] = float(np.max(np.abs(values - analytic)))
            rows.extend((m, seed, t, v, "empirical") for t, v in zip(thetas, values))
    if out_csv is not None:
        write_slice_csv(out_csv, rows)
    if summary_csv is not None:
        write_sweep_summary_csv(
            summary_csv, [(m, s, sup_dev[(m, s)]) for m in widths for s in range(n_seeds)]
        )
    return WidthSweepResult(widths=widths, seeds=n_seeds, thetas=thetas,
                            analytic=analytic, empirical=empirical, sup_dev=sup_dev)


def circle_training_config(*, width: int = 2000, depth: int = 3, lr: float = 0.1,
                           epochs: int = 10_000, loss: str = "xent", seed: int = 0,
                           record_every: int = 50, family: str = "fcn",
                           scale_a: float = 1.0) -> TrainingConfig:
    """Defaults of the circle divergence run (width 500 is the desk scale).

    record_every=50 keeps a 1e4-epoch run at ~200 recorded rows (kernel
    assembly dominates recording cost) while still hitting epoch 100.
    """
    arch = ArchDescriptor(family=family, d=2, m=width, L=depth, a=scale_a)
    return TrainingConfig(arch=arch, lr=lr, epochs=epochs, loss=loss,
                          record_every=record_every, seed=seed)


@dataclass
class DivergenceRunResult:
    trace: TrainingTrace
    report: GapReport | None
    certificate: SpdCertificate
    out_dir: Path


def run_divergence(config: TrainingConfig, out_dir, data: SampleSet | None = None) -> DivergenceRunResult:
    """Train on the circle set, then evaluate the kernel-deviation gap.

    Cross-entropy runs measure sup_t |K_t - K_NT| per watched pair against
    the certified threshold lambda_0 / (2 n^2). MSE runs are the lazy-regime
    control: the baseline is the watched init kernel K_0 and the threshold is
    5% of max |K_0|. The trace CSV is streamed row by row so an aborted run
    leaves its partial trace on disk; the gap CSV is then skipped.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if data is None:
        data = make_circle_dataset()
    spec = analytic_init_spec(config.arch)
    cert = certify_spd(spec, data.X)
    write_certificate_csv(out_dir / "certificate.csv", cert)
    with TraceCsvWriter(out_dir / "trace.csv") as w:
        trace = train(config, data, on_record=w.write_record)
    if config.loss == "xent":
        report = divergence_gap(trace, spec, data.X, baseline="analytic")
    else:
        k0 = np.abs(trace.K_watch[0])
        report = divergence_gap(trace, None, data.X, baseline="init",
                                threshold=LAZY_REL_TOL * float(k0.max()))
    write_gap_csv(out_dir / "gap.csv", report)
    return DivergenceRunResult(trace=trace, report=report, certificate=cert, out_dir=out_dir)


def mnist_parity_config(*, width: int = 500, depth: int = 4, lr: float = 0.5,
                        epochs: int = 5000, seed: int = 0,
                        record_every: int = 1) -> TrainingConfig:
    arch = ArchDescriptor(family="fcn", d=784, m=width, L=depth)
    return TrainingConfig(arch=arch, lr=lr, epochs=epochs, loss="xent",
                          record_every=record_every, seed=seed)


@dataclass
class MnistRunResult:
    trace: TrainingTrace
    watch: tuple
    subset_digits: np.ndarray
    out_dir: Path


def run_mnist_parity(config: TrainingConfig, images_path, labels_path, n_train: int,
                     out_dir, watch_count: int = 3) -> MnistRunResult:
    """Parity classification on an IDX subset, watching top diagonal entries.

    The watched samples are the watch_count training inputs with the largest
    initial diagonal NTK values (largest gradient norm at init); their K_t
    diagonal entries land in the trace for the growth statistic, whose
    burn-in discard is applied downstream.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    subset = load_mnist(images_path, labels_path, n_train,
                        RngStream(config.seed, stream_id=SUBSET_STREAM))
    data = subset.sample_set()
    params0 = init_network(config.arch, RngStream(config.seed))
    diag = np.diag(empirical_ntk(params0, data.X).entries)
    top = np.argsort(diag)[::-1][:watch_count]
    watch = tuple((int(i), int(i)) for i in sorted(top))
    config = TrainingConfig(arch=config.arch, lr=config.lr, epochs=config.epochs,
                            loss=config.loss, record_every=config.record_every,
                            seed=config.seed, ntk_watch=watch)
    with TraceCsvWriter(out_dir / "trace.csv") as w:
        trace = train(config, data, on_record=w.write_record)
    return MnistRunResult(trace=trace, watch=watch, subset_digits=subset.digits,
                          out_dir=out_dir)
