import numpy as np
import pytest

from enctrain.records import write_batch


def synthetic_batch(n, seed=0):
    """Easily separable 10-class data: one base color per class plus noise."""
    rng = np.random.default_rng(seed)
    labels = (np.arange(n) % 10).astype(np.uint8)
    rng.shuffle(labels)
    base = np.stack(
        [np.array([(k * 23) % 256, (k * 71 + 40) % 256, (k * 151 + 90) % 256]) for k in range(10)]
    )
    images = base[labels][:, :, None, None] + rng.normal(0, 18, size=(n, 3, 32, 32))
    return labels, np.clip(images, 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("batches")
    labels, images = synthetic_batch(640, seed=1)
    write_batch(root / "train.bin", labels, images)
    labels, images = synthetic_batch(320, seed=2)
    write_batch(root / "test.bin", labels, images)
    return root
