"""Batch command line: train / predict / predict-proba / tune / riskbound / shatter.

Exit codes: 0 success, 2 usage error, 1 runtime failure. All randomness is
controlled by explicit --seed flags (default 0), so every subcommand is
reproducible byte-for-byte. Diagnostics go to stderr; results go to the
output files or stdout.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import calibration, model_selection, risk, svc
from .dataset import parse_sparse
from .dual_solver import HARD_MARGIN_C, SolverConfig
from .kernels import KernelSpec, parse_kernel_spec


def _read_dataset(path: str):
    return parse_sparse(Path(path).read_text(encoding="utf-8"))


def _write(path: str, content: str) -> None:
    Path(path).write_text(content, encoding="utf-8", newline="\n")


def _kernel_arg(text: str) -> KernelSpec:
    return parse_kernel_spec(text)


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from None


def _h_range(text: str) -> range:
    lo, sep, hi = text.partition(":")
    try:
        if sep:
            return range(int(lo), int(hi) + 1)
        return range(int(lo), int(lo) + 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected <h> or <lo>:<hi>, got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svmkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a model (one machine per class pair)")
    train.add_argument("-k", "--kernel", type=_kernel_arg, default=KernelSpec("linear"),
                       help="kernel spec: linear | gaussian:<sigma> | rbf:<gamma> (default linear)")
    train.add_argument("-c", dest="C", type=float, default=None,
                       help="soft-margin trade-off; omit for hard margin")
    train.add_argument("--probability", action="store_true",
                       help="fit probability sigmoids via internal cross-validation")
    train.add_argument("--folds", type=int, default=5, help="calibration folds (default 5)")
    train.add_argument("--seed", type=int, default=0, help="fold-split seed (default 0)")
    train.add_argument("--tol", type=float, default=1e-3, help="solver KKT tolerance (default 1e-3)")
    train.add_argument("data", help="training data (sparse text format)")
    train.add_argument("model", help="output model path")

    predict = sub.add_parser("predict", help="predict labels, one per line")
    predict.add_argument("model")
    predict.add_argument("data", help="probe file; labels in it are ignored")
    predict.add_argument("output")

    proba = sub.add_parser("predict-proba", help="predict class probabilities")
    proba.add_argument("model", help="model trained with --probability")
    proba.add_argument("data")
    proba.add_argument("output")

    tune = sub.add_parser("tune", help="grid-search cross-validation over C (and gamma)")
    tune.add_argument("-k", "--kernel-kind", choices=("linear", "rbf"), default="linear")
    tune.add_argument("--c-values", type=_float_list, default=model_selection.DEFAULT_C_LADDER,
                      help="comma-separated C grid (default powers of two, 2^-5..2^15)")
    tune.add_argument("--gamma-values", type=_float_list, default=None,
                      help="comma-separated gamma grid (default 2^-15..2^3 for rbf)")
    tune.add_argument("--folds", type=int, default=5)
    tune.add_argument("--seed", type=int, default=0, help="fold-split seed (default 0)")
    tune.add_argument("--tol", type=float, default=1e-3)
    tune.add_argument("data")
    tune.add_argument("output", help="accuracy table CSV")

    bound = sub.add_parser("riskbound", help="emit (h, vc_confidence, bound) curve as CSV")
    bound.add_argument("--remp", type=float, required=True, help="empirical risk in [0, 1]")
    bound.add_argument("--m", type=int, required=True, help="sample count")
    bound.add_argument("--eta", type=float, required=True, help="confidence level in (0, 1]")
    bound.add_argument("--h", type=_h_range, required=True, help="capacity range <lo>:<hi> or single <h>")
    bound.add_argument("output")

    shatter = sub.add_parser("shatter", help="sampled shattering experiment for linear classifiers")
    shatter.add_argument("--dimension", type=int, required=True, help="input dimension (1..3)")
    shatter.add_argument("--max-points", type=int, required=True, help="largest set size to test (<= 8)")
    shatter.add_argument("--trials", type=int, default=200, help="configurations per size (default 200)")
    shatter.add_argument("--seed", type=int, default=0, help="configuration RNG seed (default 0)")
    shatter.add_argument("--collinear", action="store_true", help="force all trial points onto one line")
    return parser


def _train_params(args) -> svc.TrainParams:
    C = HARD_MARGIN_C if args.C is None else args.C
    return svc.TrainParams(args.kernel, C)


def _cmd_train(args) -> int:
    dataset = _read_dataset(args.data)
    params = _train_params(args)
    config = SolverConfig(tolerance=args.tol)
    if args.probability:
        model = calibration.train_calibrated(dataset, params, config, k=args.folds, seed=args.seed)
    else:
        model = svc.train_multiclass(dataset, params, config)
    _write(args.model, svc.save_model(model))
    correct = sum(
        1 for s in dataset.samples if svc.predict_multiclass(model, s.features) == s.label
    )
    print(f"trained {len(model.machines)} machine(s) on {len(dataset)} samples; "
          f"self-accuracy {correct / len(dataset):.4f}", file=sys.stderr)
    return 0


def _load_model(path: str):
    return svc.load_model(Path(path).read_text(encoding="utf-8"))


def _cmd_predict(args) -> int:
    model = _load_model(args.model)
    dataset = _read_dataset(args.data)
    if isinstance(model, svc.MulticlassModel):
        labels = [svc.predict_multiclass(model, s.features) for s in dataset.samples]
    else:
        labels = [svc.predict(model, s.features) for s in dataset.samples]
    _write(args.output, "".join(f"{label}\n" for label in labels))
    return 0


def _cmd_predict_proba(args) -> int:
    model = _load_model(args.model)
    if not isinstance(model, svc.MulticlassModel):
        raise ValueError("probability prediction needs a pairwise model file (train with --probability)")
    dataset = _read_dataset(args.data)
    lines = ["labels " + " ".join(str(c) for c in model.classes)]
    for s in dataset.samples:
        probs = calibration.predict_proba(model, s.features).p
        predicted = model.classes[int(np.argmax(probs))]
        lines.append(str(predicted) + " " + " ".join(repr(p) for p in probs))
    _write(args.output, "\n".join(lines) + "\n")
    return 0


def _cmd_tune(args) -> int:
    dataset = _read_dataset(args.data)
    gamma_values = args.gamma_values
    if gamma_values is None and args.kernel_kind == "rbf":
        gamma_values = model_selection.DEFAULT_GAMMA_LADDER
    grid = model_selection.ParamGrid(tuple(args.c_values), gamma_values)
    result = model_selection.grid_search(
        dataset, grid, args.kernel_kind, args.folds, args.seed, SolverConfig(tolerance=args.tol)
    )
    _write(args.output, model_selection.grid_csv(result))
    w = result.winner
    gamma = "-" if w.gamma is None else repr(w.gamma)
    print(f"C={w.C!r} gamma={gamma} accuracy={w.accuracy!r}")
    return 0


def _cmd_riskbound(args) -> int:
    rows = risk.bound_curve(args.remp, args.m, args.eta, args.h)
    _write(args.output, risk.bound_curve_csv(rows))
    return 0


def _cmd_shatter(args) -> int:
    generator = risk.collinear_point_generator(args.dimension) if args.collinear else None
    dim = risk.vc_dimension_bruteforce(
        args.dimension, args.max_points, trials=args.trials, seed=args.seed,
        point_generator=generator,
    )
    print(f"vc_dimension={dim}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "predict-proba": _cmd_predict_proba,
    "tune": _cmd_tune,
    "riskbound": _cmd_riskbound,
    "shatter": _cmd_shatter,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"svmkit {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
