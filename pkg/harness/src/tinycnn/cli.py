"""tinycnn-train: fit the small CNN on a split/label PNG tree."""

from __future__ import annotations

import argparse
import logging
import sys

from .data import DataError
from .train import HarnessConfig, train_and_eval


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tinycnn-train",
        description="Train a small CNN on a <split>/<label>/*.png tree "
        "(random crops at train time, center crop at test time, no flips).",
    )
    parser.add_argument("--data", required=True, help="tree root containing train/ and test/")
    parser.add_argument("--crop", type=int, required=True, help="square crop side in pixels")
    parser.add_argument("--epochs", type=int, default=5, help="training epochs (default 5)")
    parser.add_argument("--batch", type=int, default=32, help="batch size (default 32)")
    parser.add_argument("--lr", type=float, default=1e-3, help="learning rate (default 1e-3)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument("--device", default="cpu", help="torch device (default cpu)")
    parser.add_argument("--report", default=None, help="report path (default <data>/tinycnn-report.txt)")
    parser.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"],
                        help="logging verbosity on stderr (default info)")
    args = parser.parse_args(argv)

    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = HarnessConfig(
            data_root=args.data,
            crop_size=args.crop,
            epochs=args.epochs,
            batch_size=args.batch,
            learning_rate=args.lr,
            seed=args.seed,
            device=args.device,
            report_path=args.report,
        )
        result = train_and_eval(config)
    except (DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"test_error={result.test_error:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
