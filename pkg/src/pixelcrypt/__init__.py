"""Pixel-based perceptual image encryption toolkit.

Submodules:
    image        - the shared 8-bit RGB planar image type
    keying       - deterministic keystreams and key files
    cipher_pixel - per-pixel negative-positive + color-shuffle cipher
    cipher_block - block-based baseline ciphers (nibble-permutation, EtC-style)
    augment      - flips/shifts/pad-crop that commute with the pixel cipher
    imageio      - PPM images and CIFAR-10 binary batches, byte-exact
    keyspace     - key-space arithmetic and a toy brute-force demonstrator
    adaptnet     - 1x1-convolution adaptation stack with verified gradients
    cli          - command-line pipeline
"""

__version__ = "0.1.0"
