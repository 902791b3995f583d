"""Training harness for encrypted-image classification.

Consumes key files and CIFAR-10 binary batches produced by the pixelcrypt
CLI (never importing that package), trains an adaptation network +
ResNet-18 on them, and reproduces the accuracy-ordering experiments at a
configurable scale.
"""

__version__ = "0.1.0"
