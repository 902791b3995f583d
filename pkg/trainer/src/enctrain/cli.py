"""Command line for single runs and the table experiments."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .experiment import ExperimentConfig, run_experiment
from .tables import TableConfig, run_table2, run_table3


def _add_scale_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--subset", type=float, default=0.1, help="training subset fraction")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--width", type=int, default=64, help="backbone width (64 = ResNet-18)")
    p.add_argument("--key-seed", type=int, default=2024)
    p.add_argument("--out", default=None, help="also write the report to this file")


def _table_config(args: argparse.Namespace) -> TableConfig:
    return TableConfig(
        plain_train=args.plain_train,
        plain_test=args.plain_test,
        workdir=args.workdir,
        subset=args.subset,
        epochs=args.epochs,
        seeds=tuple(args.seeds),
        batch_size=args.batch_size,
        width=args.width,
        key_seed=args.key_seed,
    )


def _emit(report: str, out: Optional[str]) -> None:
    print(report)
    if out:
        Path(out).write_text(report + "\n", encoding="utf-8")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="enctrain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one training run over prepared batch files")
    p.add_argument("--train", nargs="+", required=True, help="batch file(s); cycled per epoch")
    p.add_argument("--test", required=True)
    p.add_argument("--scheme", default="plain")
    p.add_argument("--site", default="none", choices=["client", "cloud", "none"])
    p.add_argument("--adaptation", action="store_true")
    p.add_argument("--subset", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--width", type=int, default=64)

    p = sub.add_parser("table2", help="all schemes under cloud-side augmentation")
    p.add_argument("--plain-train", required=True)
    p.add_argument("--plain-test", required=True)
    p.add_argument("--workdir", required=True)
    _add_scale_flags(p)

    p = sub.add_parser("table3", help="client vs cloud augmentation comparison")
    p.add_argument("--plain-train", required=True)
    p.add_argument("--plain-test", required=True)
    p.add_argument("--workdir", required=True)
    _add_scale_flags(p)

    args = parser.parse_args(argv)
    if args.command == "run":
        cfg = ExperimentConfig(
            train_paths=tuple(args.train),
            test_path=args.test,
            encryption=args.scheme,
            augmentation_site=args.site,
            adaptation=args.adaptation,
            subset=args.subset,
            epochs=args.epochs,
            seed=args.seed,
            batch_size=args.batch_size,
            width=args.width,
        )
        result = run_experiment(cfg)
        for epoch, acc in enumerate(result.curve):
            print(f"epoch={epoch},acc={acc:.2f}")
        print(f"row={args.scheme},acc={result.accuracy:.2f}")
        return 0
    if args.command == "table2":
        _emit(run_table2(_table_config(args)), args.out)
        return 0
    _emit(run_table3(_table_config(args)), args.out)
    return 0


def entry() -> None:
    sys.exit(main())
