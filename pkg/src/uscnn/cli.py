"""Command-line front end: detect, lmr, eval, and sweep-k subcommands.

detect runs the full unsupervised pipeline (train -> difference map ->
k-means -> binary map); lmr runs the classical log-mean-ratio baseline;
eval scores a binary map against ground truth; sweep-k repeats detect over a
list of sparsity weights and emits a CSV of the resulting scores.

Exit codes: 0 on success, 2 for invalid inputs (bad flags, dimension
mismatches), 1 for file and I/O failures.  Output files are written
atomically, so a failed run leaves nothing half-written.  Timing is reported
on the log stream, never inside report files, which keeps repeated runs with
the same seed byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

from . import image_io, operators
from .clustering import kmeans_binarize
from .metrics import evaluate
from .training import TrainConfig, train

logger = logging.getLogger("uscnn")

VERBOSITY_ENV = "USCNN_VERBOSITY"
_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


@dataclasses.dataclass
class RunReport:
    """Everything one detect run produced, serializable as JSON."""

    config: dict
    loss_history: list[dict]
    metrics: dict | None
    outputs: dict

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        data = json.loads(text)
        return cls(config=data["config"], loss_history=data["loss_history"],
                   metrics=data["metrics"], outputs=data["outputs"])


def _write_text_atomic(text: str, path: Path) -> None:
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _config_from_args(args) -> TrainConfig:
    return TrainConfig(k=args.k, epochs=args.epochs, learning_rate=args.lr,
                       n_kernels=args.kernels, seed=args.seed)


def _load_pair(path1, path2):
    i1 = image_io.load_gray(path1)
    i2 = image_io.load_gray(path2)
    if i1.shape != i2.shape:
        raise ValueError(
            f"input images differ in size: {i1.shape} vs {i2.shape}"
        )
    return i1, i2


def _run_detect_pipeline(i1, i2, config: TrainConfig):
    result = train(i1, i2, config)
    change_map = kmeans_binarize(result.difference_map)
    return result, change_map


def cmd_detect(args) -> int:
    started = time.perf_counter()
    i1, i2 = _load_pair(args.t1, args.t2)
    config = _config_from_args(args)
    result, change_map = _run_detect_pipeline(i1, i2, config)
    image_io.save_map(change_map, args.out)
    logger.info("wrote change map to %s", args.out)

    metrics_dict = None
    if args.truth:
        truth = image_io.load_truth(args.truth)
        metrics_dict = evaluate(change_map, truth).to_dict()
        print(json.dumps(metrics_dict, sort_keys=True))

    if args.report:
        report = RunReport(
            config=dataclasses.asdict(config),
            loss_history=[dataclasses.asdict(r) for r in result.history],
            metrics=metrics_dict,
            outputs={"change_map": str(args.out)},
        )
        _write_text_atomic(report.to_json(), Path(args.report))
        logger.info("wrote report to %s", args.report)
    logger.info("detect finished in %.2f s", time.perf_counter() - started)
    return 0


def cmd_lmr(args) -> int:
    i1, i2 = _load_pair(args.t1, args.t2)
    di = operators.lmr(i1, i2, window=args.window)
    change_map = kmeans_binarize(di)
    image_io.save_map(change_map, args.out)
    logger.info("wrote LMR change map to %s", args.out)
    if args.truth:
        truth = image_io.load_truth(args.truth)
        print(json.dumps(evaluate(change_map, truth).to_dict(), sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    pred = image_io.load_truth(args.pred)
    truth = image_io.load_truth(args.truth)
    if pred.shape != truth.shape:
        raise ValueError(
            f"prediction and truth differ in size: {pred.shape} vs {truth.shape}"
        )
    print(json.dumps(evaluate(pred, truth).to_dict(), sort_keys=True))
    return 0


def cmd_sweep_k(args) -> int:
    i1, i2 = _load_pair(args.t1, args.t2)
    truth = image_io.load_truth(args.truth)
    if truth.shape != i1.shape:
        raise ValueError(
            f"truth size {truth.shape} does not match images {i1.shape}"
        )
    k_values = _parse_k_list(args.k_list)
    print("k,pcc,kappa,oe")
    for k in k_values:
        config = TrainConfig(k=k, epochs=args.epochs, learning_rate=args.lr,
                             n_kernels=args.kernels, seed=args.seed)
        _, change_map = _run_detect_pipeline(i1, i2, config)
        m = evaluate(change_map, truth)
        print(f"{k:g},{m.pcc:.6f},{m.kappa:.6f},{m.oe}")
        logger.info("k=%g: pcc=%.4f kappa=%.4f oe=%d", k, m.pcc, m.kappa, m.oe)
    return 0


def _parse_k_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValueError(f"invalid k list {text!r}: {exc}") from None
    if not values:
        raise ValueError("k list is empty")
    if any(v <= 0 for v in values):
        raise ValueError("every k must be positive")
    return values


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, default=100,
                        help="gradient steps over the full image (default 100)")
    parser.add_argument("--lr", type=float, default=0.01,
                        help="RMSprop base learning rate (default 0.01)")
    parser.add_argument("--kernels", type=int, default=20,
                        help="convolution kernels per branch (default 20)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for the deterministic initialization (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uscnn",
        description="Unsupervised change detection for bi-temporal grayscale images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="train the network and emit a binary change map")
    p.add_argument("t1", help="first acquisition (PGM or PNG)")
    p.add_argument("t2", help="second acquisition")
    p.add_argument("out", help="output change map (.png or .pgm)")
    p.add_argument("--truth", help="ground-truth map; metrics are printed when given")
    p.add_argument("--k", type=float, default=30.0,
                   help="sparsity-vs-contrast weight in the objective (default 30)")
    _add_train_flags(p)
    p.add_argument("--report", help="write a JSON run report to this path")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("lmr", help="classical log-mean-ratio baseline")
    p.add_argument("t1")
    p.add_argument("t2")
    p.add_argument("out", help="output change map (.png or .pgm)")
    p.add_argument("--window", type=int, default=3,
                   help="odd neighborhood size for the mean filter (default 3)")
    p.add_argument("--truth", help="ground-truth map; metrics are printed when given")
    p.set_defaults(func=cmd_lmr)

    p = sub.add_parser("eval", help="score a binary change map against ground truth")
    p.add_argument("pred", help="predicted binary map")
    p.add_argument("truth", help="ground-truth binary map")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-k", help="run detect for several k values, emit CSV")
    p.add_argument("t1")
    p.add_argument("t2")
    p.add_argument("truth", help="ground-truth map (required for the sweep scores)")
    p.add_argument("--k-list", default="2,4,6,8,10,12,14,16,18,20,22,24,26,28,30,32,34,36,38,40",
                   help="comma-separated k values (default 2,4,...,40)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep_k)
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get(VERBOSITY_ENV, "info").lower()
    level = _LEVELS.get(level_name, logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, image_io.ImageIOError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
