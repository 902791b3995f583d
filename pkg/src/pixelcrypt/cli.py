"""Command-line pipeline: key generation, image/dataset encryption,
key-space reports, and gradient verification.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 internal
error (including a failed gradient check).  Successful commands write
nothing to standard error.  Every command is deterministic once its seeds
are pinned; pipelines composed through files match the same composition
through direct library calls byte-exactly.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import adaptnet, augment, cipher_block, cipher_pixel, imageio, keyspace
from .image import PlanarImage
from .keying import (
    KeySet,
    format_key_file,
    generate_keyset,
    materialize,
    parse_key_file,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

SCHEMES = ("pixel", "pixel+shuffle", "etc", "tanaka")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _read_keys(path: str) -> KeySet:
    return parse_key_file(Path(path).read_text(encoding="utf-8"))


def _parse_augment_spec(spec: str) -> Union[str, augment.ShiftSpec, tuple[str, int, int]]:
    if spec in ("hflip", "vflip"):
        return spec
    kind, sep, rest = spec.partition(":")
    if sep and kind in ("shift", "padcrop"):
        parts = rest.split(",")
        if len(parts) == 2:
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise _UsageError(f"bad augment spec {spec!r}") from None
            if kind == "shift":
                return augment.ShiftSpec(dx=a, dy=b)
            return ("padcrop", a, b)
    raise _UsageError(
        f"bad augment spec {spec!r} (expected hflip, vflip, shift:DX,DY or padcrop:OX,OY)"
    )


def _cmd_keygen(args: argparse.Namespace) -> int:
    keys = generate_keyset(seed=args.seed, with_shuffle=args.with_shuffle)
    Path(args.out).write_text(format_key_file(keys), encoding="utf-8")
    return EXIT_OK


def _encrypt_one(
    arr: np.ndarray, keys: KeySet, scheme: str, decrypt: bool
) -> np.ndarray:
    """Apply a scheme to a (..., 3, H, W) array; block schemes seed from KR."""
    if scheme in ("pixel", "pixel+shuffle"):
        use_shuffle = scheme == "pixel+shuffle"
        if use_shuffle and keys.k_s is None:
            raise ValueError("scheme pixel+shuffle requires a key file with a KS entry")
        h, w = arr.shape[-2:]
        planes = materialize(keys, w, h)
        fn = cipher_pixel.decrypt_array if decrypt else cipher_pixel.encrypt_array
        return fn(arr, planes, use_shuffle=use_shuffle)
    if scheme == "tanaka":
        key = cipher_block.TanakaKey.from_seed(keys.k_r)
        fn = cipher_block.tanaka_decrypt_array if decrypt else cipher_block.tanaka_encrypt_array
        return fn(arr, key)
    key = cipher_block.BlockKey(seed=keys.k_r)
    fn = cipher_block.etc_decrypt_array if decrypt else cipher_block.etc_encrypt_array
    return fn(arr, key)


def _cmd_encrypt(args: argparse.Namespace) -> int:
    keys = _read_keys(args.keyfile)
    img = imageio.read_ppm(Path(args.infile).read_bytes())
    out = _encrypt_one(img.planes, keys, args.scheme, args.decrypt)
    Path(args.outfile).write_bytes(imageio.write_ppm(PlanarImage(out)))
    return EXIT_OK


def _cmd_dataset(args: argparse.Namespace) -> int:
    if args.append and args.augment is None:
        raise _UsageError("--append requires --augment")
    keys = _read_keys(args.keyfile)
    batch = imageio.read_cifar_batch(Path(args.infile).read_bytes())
    encrypted = _encrypt_one(batch.images, keys, args.scheme, decrypt=False)
    labels = batch.labels
    if args.augment is not None:
        spec = _parse_augment_spec(args.augment)
        if isinstance(spec, tuple):
            augmented = augment.pad_crop_array(encrypted, 4, spec[1], spec[2])
        else:
            augmented = augment.apply_array(encrypted, spec)
        if args.append:
            encrypted = np.concatenate([encrypted, augmented])
            labels = np.concatenate([labels, labels])
        else:
            encrypted = augmented
    out = imageio.DatasetBatch(labels=labels, images=np.ascontiguousarray(encrypted))
    Path(args.outfile).write_bytes(imageio.write_cifar_batch(out))
    return EXIT_OK


def _cmd_keyspace(args: argparse.Namespace) -> int:
    n = keyspace.pixel_count(args.width, args.height)
    report = keyspace.proposed_keyspace(n, with_shuffle=not args.no_shuffle)
    if args.pretty:
        print(keyspace.render_text(report, with_shuffle=not args.no_shuffle))
    else:
        for line in keyspace.render_lines(report, with_shuffle=not args.no_shuffle):
            print(line)
    return EXIT_OK


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    results = adaptnet.run_gradcheck(seed=args.seed)
    for r in results:
        print(f"{r.op}_max_rel_err={r.max_rel_err:.3e}")
    print(f"tolerance={adaptnet.GRADCHECK_TOL:.1e}")
    worst = max(results, key=lambda r: r.max_rel_err)
    if worst.max_rel_err > adaptnet.GRADCHECK_TOL:
        print(
            f"gradient check failed: op {worst.op} shape {worst.shape} "
            f"max relative error {worst.max_rel_err:.3e}",
            file=sys.stderr,
        )
        return EXIT_INTERNAL
    print("status=pass")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="pixelcrypt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a key file")
    p.add_argument("out", help="output key file path")
    p.add_argument("--seed", type=int, default=None, help="reproducible seed (default: entropy)")
    p.add_argument("--with-shuffle", action="store_true", help="include a KS color-shuffle seed")
    p.set_defaults(func=_cmd_keygen)

    p = sub.add_parser("encrypt", help="encrypt or decrypt one PPM image")
    p.add_argument("infile")
    p.add_argument("keyfile")
    p.add_argument("outfile")
    p.add_argument("--scheme", choices=SCHEMES, default="pixel")
    p.add_argument("--decrypt", action="store_true", help="invert the scheme")
    p.set_defaults(func=_cmd_encrypt)

    p = sub.add_parser("dataset", help="encrypt a CIFAR-10 binary batch")
    p.add_argument("infile")
    p.add_argument("keyfile")
    p.add_argument("outfile")
    p.add_argument("--scheme", choices=SCHEMES, default="pixel")
    p.add_argument(
        "--augment",
        default=None,
        metavar="SPEC",
        help="post-encryption augmentation: hflip | vflip | shift:DX,DY | padcrop:OX,OY",
    )
    p.add_argument(
        "--append",
        action="store_true",
        help="append augmented copies after the originals instead of replacing",
    )
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("keyspace", help="print the key-space report")
    p.add_argument("width", type=int)
    p.add_argument("height", type=int)
    p.add_argument("--no-shuffle", action="store_true", help="report without the shuffle step")
    p.add_argument("--pretty", action="store_true", help="aligned text instead of field=value")
    p.set_defaults(func=_cmd_keyspace)

    p = sub.add_parser("gradcheck", help="verify adaptation-network gradients")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())
