"""Accuracy-ordering experiments: cloud-side augmentation across every
scheme, and the client-vs-cloud comparison for the pixel and block schemes.

Reports carry a header documenting the protocol (cloud arms consume fixed
pre-generated ciphertext copies appended by the CLI; client arms consume
per-epoch replicas augmented before encryption), a plain-text table, and
machine-readable `row=<scheme>,acc=<float>` lines.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .experiment import ExperimentConfig, run_experiment
from .pipeline import (
    cli_keygen,
    prepare_client_batches,
    prepare_cloud_batch,
    prepare_eval_batch,
)

TABLE2_ROWS: tuple[tuple[str, bool], ...] = (
    ("plain", False),
    ("pixel", False),
    ("pixel", True),
    ("pixel+shuffle", False),
    ("pixel+shuffle", True),
    ("tanaka", False),
    ("etc", False),
)

TABLE3_ROWS: tuple[tuple[str, bool], ...] = (
    ("pixel", False),
    ("pixel", True),
    ("tanaka", False),
)


@dataclass(frozen=True)
class TableConfig:
    plain_train: str
    plain_test: str
    workdir: str
    subset: float = 0.1
    epochs: int = 30
    seeds: tuple[int, ...] = (0, 1, 2)
    batch_size: int = 128
    width: int = 64
    key_seed: int = 2024


def _row_label(scheme: str, adaptation: bool) -> str:
    if scheme in ("pixel", "pixel+shuffle"):
        return f"{scheme}{'+adapt' if adaptation else ''}"
    return scheme


def _keyfile(cfg: TableConfig, workdir: Path) -> Path:
    return cli_keygen(workdir / "keys.txt", seed=cfg.key_seed, with_shuffle=True)


def _experiment(
    cfg: TableConfig,
    train_paths: Sequence[Path],
    test_path: Path,
    scheme: str,
    adaptation: bool,
    site: str,
    seed: int,
) -> ExperimentConfig:
    return ExperimentConfig(
        train_paths=tuple(str(p) for p in train_paths),
        test_path=str(test_path),
        encryption=scheme,
        augmentation_site=site,
        adaptation=adaptation,
        epochs=cfg.epochs,
        subset=cfg.subset,
        batch_size=cfg.batch_size,
        seed=seed,
        width=cfg.width,
    )


def _median_accuracy(configs: Sequence[ExperimentConfig]) -> float:
    return statistics.median(run_experiment(c).accuracy for c in configs)


def _header(cfg: TableConfig, what: str) -> list[str]:
    return [
        f"# {what}",
        "# cloud arms: fixed ciphertext copies appended by the encryption CLI (hflip)",
        "# client arms: per-epoch random pad-4 crop + flip applied before encryption",
        f"# scale: subset={cfg.subset} epochs={cfg.epochs} width={cfg.width} "
        f"seeds={list(cfg.seeds)} key_seed={cfg.key_seed}",
    ]


def run_table2(cfg: TableConfig, rows: Sequence[tuple[str, bool]] = TABLE2_ROWS) -> str:
    """Median accuracy per scheme with augmentation done server-side."""
    workdir = Path(cfg.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    keyfile = _keyfile(cfg, workdir)

    lines = _header(cfg, "accuracy with server-side (cloud) augmentation")
    results: list[tuple[str, float]] = []
    for scheme, adaptation in rows:
        train = prepare_cloud_batch(cfg.plain_train, keyfile, scheme, workdir)
        test = prepare_eval_batch(cfg.plain_test, keyfile, scheme, workdir)
        acc = _median_accuracy(
            [
                _experiment(cfg, [train], test, scheme, adaptation, "cloud", seed)
                for seed in cfg.seeds
            ]
        )
        results.append((_row_label(scheme, adaptation), acc))

    width = max(len(label) for label, _ in results)
    for label, acc in results:
        lines.append(f"{label.ljust(width)}  {acc:6.2f}")
    for label, acc in results:
        lines.append(f"row={label},acc={acc:.2f}")
    return "\n".join(lines)


def run_table3(cfg: TableConfig, rows: Sequence[tuple[str, bool]] = TABLE3_ROWS) -> str:
    """Client-side vs server-side augmentation; arms share seeds."""
    workdir = Path(cfg.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    keyfile = _keyfile(cfg, workdir)

    lines = _header(cfg, "accuracy with augmentation in client vs cloud")
    results: list[tuple[str, float, float]] = []
    for scheme, adaptation in rows:
        test = prepare_eval_batch(cfg.plain_test, keyfile, scheme, workdir)
        cloud_train = prepare_cloud_batch(cfg.plain_train, keyfile, scheme, workdir)
        client_train = prepare_client_batches(
            cfg.plain_train, keyfile, scheme, workdir, epochs=cfg.epochs, seed=cfg.key_seed
        )
        cloud = _median_accuracy(
            [
                _experiment(cfg, [cloud_train], test, scheme, adaptation, "cloud", seed)
                for seed in cfg.seeds
            ]
        )
        client = _median_accuracy(
            [
                _experiment(cfg, client_train, test, scheme, adaptation, "client", seed)
                for seed in cfg.seeds
            ]
        )
        results.append((_row_label(scheme, adaptation), client, cloud))

    width = max(len(label) for label, _, _ in results)
    lines.append(f"{'scheme'.ljust(width)}  client   cloud   drop")
    for label, client, cloud in results:
        lines.append(f"{label.ljust(width)}  {client:6.2f}  {cloud:6.2f}  {client - cloud:6.2f}")
    for label, client, cloud in results:
        lines.append(f"row={label}/client,acc={client:.2f}")
        lines.append(f"row={label}/cloud,acc={cloud:.2f}")
        lines.append(f"row={label}/drop,acc={client - cloud:.2f}")
    return "\n".join(lines)
