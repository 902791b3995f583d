"""Dataset preparation through the pixelcrypt command-line interface.

Every encrypted byte consumed by the trainer is produced by that CLI; this
module shells out to it and never performs encryption itself.  Cloud-side
augmentation is applied by the CLI to ciphertext (`--augment ... --append`,
fixed pre-generated copies); client-side augmentation is applied here to
plaintext tensors, which are then encrypted, one freshly augmented replica
per epoch.
"""

from __future__ import annotations

import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np

from .records import hflip_append, random_crop_flip, read_batch, write_batch

ENCRYPTED_SCHEMES = ("pixel", "pixel+shuffle", "etc", "tanaka")
ALL_SCHEMES = ("plain",) + ENCRYPTED_SCHEMES


def pixelcrypt_command() -> list[str]:
    """Locate the CLI; fall back to running its module with this interpreter."""
    exe = shutil.which("pixelcrypt")
    if exe:
        return [exe]
    return [sys.executable, "-m", "pixelcrypt.cli"]


def _run(args: list[str]) -> None:
    proc = subprocess.run(
        pixelcrypt_command() + args, capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise RuntimeError(
            f"pixelcrypt {' '.join(args)} failed ({proc.returncode}): {proc.stderr.strip()}"
        )


def cli_keygen(path: str | Path, seed: int, with_shuffle: bool) -> Path:
    args = ["keygen", str(path), "--seed", str(seed)]
    if with_shuffle:
        args.append("--with-shuffle")
    _run(args)
    return Path(path)


def cli_encrypt_batch(
    src: str | Path,
    keyfile: str | Path,
    dst: str | Path,
    scheme: str,
    augment: str | None = None,
    append: bool = False,
) -> Path:
    args = ["dataset", str(src), str(keyfile), str(dst), "--scheme", scheme]
    if augment is not None:
        args += ["--augment", augment]
        if append:
            args.append("--append")
    _run(args)
    return Path(dst)


def prepare_eval_batch(
    plain_test: str | Path, keyfile: Path, scheme: str, workdir: Path
) -> Path:
    """Encrypted (never augmented) test batch for one scheme."""
    if scheme == "plain":
        return Path(plain_test)
    workdir.mkdir(parents=True, exist_ok=True)
    dst = workdir / f"test.{scheme}.bin"
    return cli_encrypt_batch(plain_test, keyfile, dst, scheme)


def prepare_cloud_batch(
    plain_train: str | Path, keyfile: Path, scheme: str, workdir: Path
) -> Path:
    """Training batch with server-side augmentation: encrypt, then let the
    CLI append horizontally flipped ciphertext copies.  For the plain
    baseline the same fixed copies are appended to the plaintext here."""
    workdir.mkdir(parents=True, exist_ok=True)
    if scheme == "plain":
        labels, images = read_batch(plain_train)
        labels, images = hflip_append(labels, images)
        dst = workdir / "train.plain.cloud.bin"
        write_batch(dst, labels, images)
        return dst
    dst = workdir / f"train.{scheme}.cloud.bin"
    return cli_encrypt_batch(plain_train, keyfile, dst, scheme, augment="hflip", append=True)


def prepare_client_batches(
    plain_train: str | Path,
    keyfile: Path,
    scheme: str,
    workdir: Path,
    epochs: int,
    seed: int,
) -> list[Path]:
    """Client-side augmentation: one replica per epoch, each built by
    augmenting the plaintext (random pad-4 crop + random flip) and then
    encrypting it, so augmentation strictly precedes encryption."""
    workdir.mkdir(parents=True, exist_ok=True)
    labels, images = read_batch(plain_train)
    out: list[Path] = []
    for epoch in range(epochs):
        rng = np.random.default_rng((seed, epoch))
        augmented = random_crop_flip(images, rng)
        if scheme == "plain":
            dst = workdir / f"train.plain.client.e{epoch}.bin"
            write_batch(dst, labels, augmented)
        else:
            tmp = workdir / f"train.client.e{epoch}.tmp.bin"
            write_batch(tmp, labels, augmented)
            dst = workdir / f"train.{scheme}.client.e{epoch}.bin"
            cli_encrypt_batch(tmp, keyfile, dst, scheme)
            tmp.unlink()
        out.append(dst)
    return out
