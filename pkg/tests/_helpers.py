import numpy as np

from pixelcrypt.image import PlanarImage


def random_image(rng, width, height):
    return PlanarImage(rng.integers(0, 256, size=(3, height, width), dtype=np.uint8))
