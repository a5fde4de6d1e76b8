"""Command-line harness.

Subcommands: kernel-slice, train-circle, width-sweep, mnist-parity, certify,
mse-control. Flags can also be supplied through --config, a plain-text file
of key=value lines whose keys are the flag names (either - or _ spelling);
an explicit command-line flag always wins over the file. Exit codes: 0
success, 1 contract violation, 2 I/O or format error, 3 diverged-run abort.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .certify import certify_spd
from .datasets import make_circle_dataset
from .errors import ContractViolationError, DivergedRunError, FormatError
from .kernels import AnalyticKernelSpec
from .networks import ArchDescriptor, init_network
from .recipes import (analytic_init_spec, circle_training_config, kernel_slice,
                      mnist_parity_config, run_divergence, run_mnist_parity,
                      run_width_sweep, slice_grid)
from .rng import RngStream
from .traceio import write_certificate_csv, write_slice_csv

_CONVERT = {
    "arch": str, "width": int, "depth": int, "scale_a": float, "lr": float,
    "epochs": int, "loss": str, "seed": int, "record_every": int, "out": str,
    "grid_points": int, "widths": str, "sweep_seeds": int, "images": str,
    "labels": str, "n_train": int, "watch_count": int, "points": str,
    "n_points": int, "points_seed": int, "bias_mode": str,
}

_DEFAULTS = {
    "kernel-slice": {"arch": "fcn", "width": 2000, "depth": 3, "scale_a": 1.0,
                     "seed": 0, "grid_points": 64, "out": "out"},
    "train-circle": {"arch": "fcn", "width": 2000, "depth": 3, "scale_a": 1.0,
                     "lr": 0.1, "epochs": 10_000, "loss": "xent", "seed": 0,
                     "record_every": 50, "out": "out"},
    "mse-control": {"arch": "fcn", "width": 2000, "depth": 3, "scale_a": 1.0,
                    "lr": 0.1, "epochs": 10_000, "loss": "mse", "seed": 0,
                    "record_every": 50, "out": "out"},
    "width-sweep": {"widths": "200,1000,2000", "sweep_seeds": 10, "depth": 3,
                    "grid_points": 64, "out": "out"},
    "mnist-parity": {"width": 500, "depth": 4, "lr": 0.5, "epochs": 5000,
                     "seed": 0, "record_every": 1, "n_train": 200,
                     "watch_count": 3, "images": None, "labels": None,
                     "out": "out"},
    "certify": {"arch": "fcn", "depth": 3, "scale_a": 1.0, "bias_mode": "doubled",
                "points": "circle", "n_points": 50, "points_seed": 0,
                "out": "out"},
}


def _add_flags(sub: argparse.ArgumentParser, keys):
    flags = {
        "arch": dict(choices=["fcn", "resnet"]),
        "loss": dict(choices=["xent", "mse"]),
        "points": dict(choices=["circle", "random"]),
        "bias_mode": dict(choices=["doubled", "unit"]),
    }
    for key in keys:
        name = "--" + key.replace("_", "-")
        extra = flags.get(key, {})
        sub.add_argument(name, dest=key, default=None,
                         type=None if "choices" in extra else _CONVERT[key], **extra)
    sub.add_argument("--config", dest="config", default=None)


def _read_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from None
    out = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{ln}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(command: str, args: argparse.Namespace) -> dict:
    defaults = _DEFAULTS[command]
    merged = dict(defaults)
    if args.config is not None:
        for key, raw in _read_config(args.config).items():
            if key not in defaults:
                raise FormatError(f"config key {key!r} is not a {command} option")
            try:
                merged[key] = _CONVERT[key](raw)
            except ValueError:
                raise FormatError(f"config key {key!r} has invalid value {raw!r}") from None
    for key in defaults:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            merged[key] = cli_val
    return merged


def _cmd_kernel_slice(opt: dict) -> int:
    out = Path(opt["out"])
    out.mkdir(parents=True, exist_ok=True)
    arch = ArchDescriptor(family=opt["arch"], d=2, m=opt["width"], L=opt["depth"],
                          a=opt["scale_a"])
    thetas = slice_grid(opt["grid_points"])
    base = np.array([1.0, 0.0])
    spec = analytic_init_spec(arch)
    rows = [(None, None, t, v, "analytic")
            for t, v in zip(thetas, kernel_slice(spec, base, thetas))]
    params = init_network(arch, RngStream(opt["seed"], stream_id=opt["width"]))
    rows.extend((opt["width"], opt["seed"], t, v, "empirical")
                for t, v in zip(thetas, kernel_slice(params, base, thetas)))
    write_slice_csv(out / "slice.csv", rows)
    print(f"wrote {out / 'slice.csv'} ({len(rows)} rows)")
    return 0


def _cmd_train_circle(opt: dict) -> int:
    config = circle_training_config(
        width=opt["width"], depth=opt["depth"], lr=opt["lr"], epochs=opt["epochs"],
        loss=opt["loss"], seed=opt["seed"], record_every=opt["record_every"],
        family=opt["arch"], scale_a=opt["scale_a"])
    result = run_divergence(config, opt["out"])
    trace, report = result.trace, result.report
    print(f"wrote {result.out_dir / 'trace.csv'} ({trace.epochs.size} recorded epochs)")
    print(f"final loss {float(trace.loss[-1])!r}, V {float(trace.V[-1])!r}")
    print(f"gap: baseline={report.baseline} threshold={float(report.threshold)!r} "
          f"exceeded={str(report.exceeded).lower()}")
    return 0


def _cmd_width_sweep(opt: dict) -> int:
    out = Path(opt["out"])
    out.mkdir(parents=True, exist_ok=True)
    widths = [int(w) for w in str(opt["widths"]).replace(" ", "").split(",") if w]
    result = run_width_sweep(widths, opt["sweep_seeds"], out / "sweep.csv",
                             out / "sweep_summary.csv", depth=opt["depth"],
                             grid_points=opt["grid_points"])
    for m in result.widths:
        print(f"m={m}: mean sup deviation {float(result.mean_sup_dev(m))!r}")
    print(f"wrote {out / 'sweep.csv'} and {out / 'sweep_summary.csv'}")
    return 0


def _cmd_mnist_parity(opt: dict) -> int:
    if not opt["images"] or not opt["labels"]:
        raise FormatError("mnist-parity needs --images and --labels IDX paths")
    config = mnist_parity_config(width=opt["width"], depth=opt["depth"], lr=opt["lr"],
                                 epochs=opt["epochs"], seed=opt["seed"],
                                 record_every=opt["record_every"])
    result = run_mnist_parity(config, opt["images"], opt["labels"], opt["n_train"],
                              opt["out"], watch_count=opt["watch_count"])
    print(f"wrote {result.out_dir / 'trace.csv'} "
          f"({result.trace.epochs.size} recorded epochs)")
    print(f"watched diagonal samples: {[i for (i, _) in result.watch]}")
    return 0


def _cmd_certify(opt: dict) -> int:
    out = Path(opt["out"])
    out.mkdir(parents=True, exist_ok=True)
    family = "fcntk" if opt["arch"] == "fcn" else "resntk"
    spec = AnalyticKernelSpec(family=family, depth=opt["depth"],
                              scale_a=opt["scale_a"], bias_mode=opt["bias_mode"])
    if opt["points"] == "circle":
        X = make_circle_dataset().X
    else:
        stream = RngStream(opt["points_seed"], stream_id=2)
        X = 2.0 * stream.uniform(2 * opt["n_points"]).reshape(-1, 2) - 1.0
    cert = certify_spd(spec, X)
    write_certificate_csv(out / "certificate.csv", cert)
    print(f"{cert.verdict}: lambda_min={float(cert.lambda_min)!r} (tol {float(cert.tolerance)!r}) "
          f"on {cert.n} points")
    return 0


_HANDLERS = {
    "kernel-slice": _cmd_kernel_slice,
    "train-circle": _cmd_train_circle,
    "mse-control": _cmd_train_circle,
    "width-sweep": _cmd_width_sweep,
    "mnist-parity": _cmd_mnist_parity,
    "certify": _cmd_certify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ntkdyn", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)
    for command, defaults in _DEFAULTS.items():
        sub = subs.add_parser(command)
        _add_flags(sub, defaults.keys())
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        opt = _resolve(args.command, args)
        return _HANDLERS[args.command](opt)
    except ContractViolationError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 1
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except DivergedRunError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
