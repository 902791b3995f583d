import subprocess

import numpy as np
import pytest

from enctrain.pipeline import (
    cli_encrypt_batch,
    cli_keygen,
    pixelcrypt_command,
    prepare_client_batches,
    prepare_cloud_batch,
    prepare_eval_batch,
)
from enctrain.records import read_batch


def _cli_available():
    try:
        proc = subprocess.run(
            pixelcrypt_command() + ["keyspace", "1", "1"], capture_output=True
        )
        return proc.returncode == 0
    except OSError:
        return False


pytestmark = pytest.mark.skipif(
    not _cli_available(), reason="pixelcrypt CLI not installed"
)


@pytest.fixture(scope="module")
def keyfile(tmp_path_factory):
    return cli_keygen(tmp_path_factory.mktemp("keys") / "keys.txt", seed=11, with_shuffle=True)


def test_keygen_writes_parseable_file(keyfile):
    text = keyfile.read_text()
    assert text.startswith("KR=")
    assert "KS=" in text


def test_encrypt_preserves_labels_and_count(tmp_path, data_dir, keyfile):
    out = cli_encrypt_batch(data_dir / "train.bin", keyfile, tmp_path / "enc.bin", "pixel")
    labels, images = read_batch(out)
    plain_labels, plain_images = read_batch(data_dir / "train.bin")
    assert np.array_equal(labels, plain_labels)
    assert images.shape == plain_images.shape
    assert not np.array_equal(images, plain_images)


def test_cli_failure_raises(tmp_path, data_dir, keyfile):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"\x00" * 7)
    with pytest.raises(RuntimeError, match="pixelcrypt"):
        cli_encrypt_batch(bad, keyfile, tmp_path / "out.bin", "pixel")


def test_cloud_batch_appends_ciphertext_copies(tmp_path, data_dir, keyfile):
    out = prepare_cloud_batch(data_dir / "train.bin", keyfile, "pixel", tmp_path)
    labels, images = read_batch(out)
    plain_labels, plain_images = read_batch(data_dir / "train.bin")
    n = len(plain_labels)
    assert len(labels) == 2 * n
    assert np.array_equal(labels[:n], plain_labels)
    assert np.array_equal(labels[n:], plain_labels)
    # the appended half is the hflip of the encrypted half, i.e. pure
    # ciphertext-domain augmentation
    assert np.array_equal(images[n:], images[:n][:, :, :, ::-1])
    assert not np.array_equal(images[:n], plain_images)


def test_cloud_batch_plain_scheme(tmp_path, data_dir, keyfile):
    out = prepare_cloud_batch(data_dir / "train.bin", keyfile, "plain", tmp_path)
    labels, images = read_batch(out)
    plain_labels, plain_images = read_batch(data_dir / "train.bin")
    n = len(plain_labels)
    assert len(labels) == 2 * n
    assert np.array_equal(images[:n], plain_images)


def test_eval_batch_is_encrypted_not_augmented(tmp_path, data_dir, keyfile):
    out = prepare_eval_batch(data_dir / "test.bin", keyfile, "tanaka", tmp_path)
    labels, images = read_batch(out)
    plain_labels, plain_images = read_batch(data_dir / "test.bin")
    assert len(labels) == len(plain_labels)
    assert not np.array_equal(images, plain_images)
    assert prepare_eval_batch(data_dir / "test.bin", keyfile, "plain", tmp_path) == data_dir / "test.bin"


def test_client_batches_one_per_epoch(tmp_path, data_dir, keyfile):
    replicas = prepare_client_batches(
        data_dir / "train.bin", keyfile, "pixel", tmp_path, epochs=3, seed=4
    )
    assert len(replicas) == 3
    plain_labels, plain_images = read_batch(data_dir / "train.bin")
    seen = []
    for path in replicas:
        labels, images = read_batch(path)
        assert np.array_equal(labels, plain_labels)
        assert not np.array_equal(images, plain_images)
        seen.append(images)
    # fresh augmentation randomness per epoch
    assert not np.array_equal(seen[0], seen[1])


def test_client_batches_deterministic(tmp_path, data_dir, keyfile):
    a = prepare_client_batches(data_dir / "train.bin", keyfile, "pixel", tmp_path / "a", epochs=2, seed=4)
    b = prepare_client_batches(data_dir / "train.bin", keyfile, "pixel", tmp_path / "b", epochs=2, seed=4)
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
