"""Numeric core of the adaptation network: 1x1-convolution layers with
hand-written, finite-difference-verified gradients, SGD with classic
momentum, and a desk-scale training task showing the stack can learn the
48 per-pixel cipher patterns.

Everything here is float64 and fully deterministic: weights and batch
order come from keyed streams, never from ambient RNG state.  Tensors are
(N, C, H, W) row-major float64 arrays.  A 1x1 convolution touches each
spatial position independently, which is what makes the stack commute with
flips and shifts of its input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .cipher_pixel import encrypt_array
from .image import PlanarImage  # noqa: F401  (re-exported type context)
from .keying import KeySet, Stream, derive_permutation, materialize, uniforms

Tensor4 = np.ndarray  # (N, C, H, W) float64

GRADCHECK_EPS = 1e-5
GRADCHECK_TOL = 1e-4
PATTERN_CLASSES = 48

# Base plaintext pixel for the pattern-learning task: the six values
# {32, 96, 160} and their complements {223, 159, 95} are pairwise distinct,
# so every one of the 48 composite patterns maps it to a distinct ciphertext.
PATTERN_BASE_RGB = (32, 96, 160)


@dataclass
class Conv1x1Layer:
    """One pointwise convolution: weight (C_out, C_in), bias (C_out,)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError("weight must be (C_out, C_in) with matching bias (C_out,)")
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise ValueError("layer parameters must be finite")

    @property
    def c_out(self) -> int:
        return self.weight.shape[0]

    @property
    def c_in(self) -> int:
        return self.weight.shape[1]

    @classmethod
    def init(cls, c_in: int, c_out: int, stream: Stream) -> "Conv1x1Layer":
        """Uniform init in [-a, a], a = 1/sqrt(C_in), from a keyed stream."""
        a = 1.0 / math.sqrt(c_in)
        draws = uniforms(stream, c_out * c_in + c_out)
        weight = (2.0 * draws[: c_out * c_in] - 1.0).reshape(c_out, c_in) * a
        bias = (2.0 * draws[c_out * c_in :] - 1.0) * a
        return cls(weight=weight, bias=bias)


def _check_tensor4(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4:
        raise ValueError(f"expected a (N, C, H, W) tensor, got shape {x.shape}")
    return x


def conv1x1_forward(x: Tensor4, layer: Conv1x1Layer) -> Tensor4:
    """y[n,o,h,w] = bias[o] + sum_i weight[o,i] * x[n,i,h,w].

    Accumulated channel by channel so every spatial position sees the same
    association order; the op then commutes bit-exactly with positional
    transforms of its input.
    """
    x = _check_tensor4(x)
    if x.shape[1] != layer.c_in:
        raise ValueError(f"input has {x.shape[1]} channels, layer expects {layer.c_in}")
    n, _, h, w = x.shape
    y = np.broadcast_to(layer.bias[None, :, None, None], (n, layer.c_out, h, w)).copy()
    for i in range(layer.c_in):
        y += layer.weight[:, i][None, :, None, None] * x[:, i, None, :, :]
    return y


def conv1x1_backward(
    x: Tensor4, layer: Conv1x1Layer, grad_y: Tensor4
) -> tuple[Tensor4, np.ndarray, np.ndarray]:
    """Gradients (grad_x, grad_w, grad_b) for the forward above."""
    x = _check_tensor4(x)
    grad_y = _check_tensor4(grad_y)
    if x.shape[1] != layer.c_in or grad_y.shape[1] != layer.c_out:
        raise ValueError("gradient shapes do not match the layer")
    if grad_y.shape[0] != x.shape[0] or grad_y.shape[2:] != x.shape[2:]:
        raise ValueError("grad_y batch/spatial dims do not match x")
    n, _, h, w = x.shape
    grad_x = np.zeros_like(x)
    for o in range(layer.c_out):
        grad_x += layer.weight[o][None, :, None, None] * grad_y[:, o, None, :, :]
    grad_w = np.einsum("nohw,nihw->oi", grad_y, x)
    grad_b = grad_y.sum(axis=(0, 2, 3))
    return grad_x, grad_w, grad_b


def relu_forward(x: Tensor4) -> Tensor4:
    return np.maximum(_check_tensor4(x), 0.0)


def relu_backward(x: Tensor4, grad_y: Tensor4) -> Tensor4:
    x = _check_tensor4(x)
    grad_y = _check_tensor4(grad_y)
    if x.shape != grad_y.shape:
        raise ValueError("grad_y shape does not match x")
    return grad_y * (x > 0.0)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 0.0005
    batch_size: int = 128
    epochs: int = 10
    lr_drop_epochs: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")


def sgd_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    velocity: Optional[Sequence[np.ndarray]],
    cfg: TrainConfig,
    lr: Optional[float] = None,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Classic momentum SGD with L2 regularization folded into the gradient:

        v <- momentum * v + (grad + weight_decay * param)
        param <- param - lr * v

    Returns new parameter and velocity lists; inputs are not mutated.
    """
    if velocity is None:
        velocity = [np.zeros_like(p) for p in params]
    if len(params) != len(grads) or len(params) != len(velocity):
        raise ValueError("params, grads and velocity must have equal lengths")
    step = cfg.lr if lr is None else lr
    new_params, new_velocity = [], []
    for p, g, v in zip(params, grads, velocity):
        if p.shape != g.shape or p.shape != v.shape:
            raise ValueError("parameter/gradient/velocity shape mismatch")
        v = cfg.momentum * v + (g + cfg.weight_decay * p)
        new_velocity.append(v)
        new_params.append(p - step * v)
    return new_params, new_velocity


@dataclass
class AdaptationStack:
    """conv(3 -> M1), ReLU, conv(M1 -> M2), ReLU."""

    layers: list[Conv1x1Layer] = field(default_factory=list)

    def forward(self, x: Tensor4) -> Tensor4:
        return self.forward_cached(x)[0]

    def forward_cached(self, x: Tensor4) -> tuple[Tensor4, list[Tensor4]]:
        cache = [x]
        for layer in self.layers:
            pre = conv1x1_forward(cache[-1], layer)
            cache.append(pre)
            cache.append(relu_forward(pre))
        return cache[-1], cache

    def backward(self, cache: list[Tensor4], grad_out: Tensor4) -> tuple[Tensor4, list[np.ndarray]]:
        """Returns (grad_input, per-parameter grads ordered w1, b1, w2, b2, ...)."""
        grads: list[np.ndarray] = []
        g = grad_out
        for idx in range(len(self.layers) - 1, -1, -1):
            pre = cache[2 * idx + 1]
            inp = cache[2 * idx]
            g = relu_backward(pre, g)
            g, gw, gb = conv1x1_backward(inp, self.layers[idx], g)
            grads[:0] = [gw, gb]
        return g, grads

    def params(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for layer in self.layers:
            out += [layer.weight, layer.bias]
        return out

    def set_params(self, params: Sequence[np.ndarray]) -> None:
        for i, layer in enumerate(self.layers):
            layer.weight = params[2 * i]
            layer.bias = params[2 * i + 1]

    @property
    def parameter_count(self) -> int:
        return sum(l.weight.size + l.bias.size for l in self.layers)


def build_adaptation(m1: int = 8, m2: int = 32, stream: Optional[Stream] = None) -> AdaptationStack:
    """Two pointwise layers 3 -> m1 -> m2, each followed by a ReLU."""
    if m1 < 1 or m2 < 1:
        raise ValueError("feature-map counts must be at least 1")
    stream = stream if stream is not None else Stream(0)
    return AdaptationStack(
        layers=[Conv1x1Layer.init(3, m1, stream), Conv1x1Layer.init(m1, m2, stream)]
    )


# ---------------------------------------------------------------------------
# Checkpoint format: header of 64-bit little-endian dims (C_out, C_in), then
# row-major 64-bit little-endian floats (weight, then bias).
# ---------------------------------------------------------------------------

def save_layer(layer: Conv1x1Layer) -> bytes:
    header = np.array([layer.c_out, layer.c_in], dtype="<u8").tobytes()
    return header + layer.weight.astype("<f8").tobytes() + layer.bias.astype("<f8").tobytes()


def load_layer(data: bytes) -> Conv1x1Layer:
    if len(data) < 16:
        raise ValueError("checkpoint too short for its dims header")
    c_out, c_in = (int(v) for v in np.frombuffer(data[:16], dtype="<u8"))
    expected = 16 + 8 * (c_out * c_in + c_out)
    if len(data) != expected:
        raise ValueError(f"checkpoint length {len(data)} does not match dims ({expected} expected)")
    floats = np.frombuffer(data[16:], dtype="<f8")
    weight = floats[: c_out * c_in].reshape(c_out, c_in).copy()
    bias = floats[c_out * c_in :].copy()
    return Conv1x1Layer(weight=weight, bias=bias)


# ---------------------------------------------------------------------------
# Pattern-learning task
# ---------------------------------------------------------------------------

def pattern_index(bit_r: int, bit_g: int, bit_b: int, code: int) -> int:
    """Composite pattern class: ((bR*2 + bG)*2 + bB)*6 + code, in [0, 47]."""
    return ((bit_r * 2 + bit_g) * 2 + bit_b) * 6 + code


def make_pattern_dataset(
    keys: KeySet, width: int, height: int
) -> tuple[np.ndarray, np.ndarray]:
    """(encrypted pixel, pattern class) pairs from one KeySet.

    A constant plaintext (PATTERN_BASE_RGB at every position) is encrypted
    once; position i then contributes its encrypted RGB triple (scaled to
    [0, 1]) labeled with the composite pattern the keystream applied there.
    Requires a KeySet with k_s so all 48 classes are reachable.
    """
    if keys.k_s is None:
        raise ValueError("pattern dataset needs a KeySet with k_s (48 classes)")
    planes = materialize(keys, width, height)
    plain = np.empty((3, height, width), dtype=np.uint8)
    for c, v in enumerate(PATTERN_BASE_RGB):
        plain[c] = v
    enc = encrypt_array(plain, planes)
    features = enc.reshape(3, -1).T.astype(np.float64) / 255.0
    bits = planes.np_bits.reshape(3, -1)
    codes = planes.shuffle_codes.reshape(-1)
    labels = ((bits[0].astype(np.int64) * 2 + bits[1]) * 2 + bits[2]) * 6 + codes
    return features, labels


def _softmax_xent(logits: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample cross-entropy losses and the mean-loss gradient."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    probs = expv / expv.sum(axis=1, keepdims=True)
    n = len(labels)
    losses = -shifted[np.arange(n), labels] + np.log(expv.sum(axis=1))
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    return losses, grad / n


def toy_train(
    features: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    m1: int = 8,
    m2: int = 32,
) -> list[float]:
    """Train adaptation stack + linear head to classify the 48 patterns.

    Returns the per-epoch mean cross-entropy (sample-weighted over
    batches).  Fully deterministic in cfg.seed.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[1] != 3:
        raise ValueError("features must have shape (n, 3)")
    n = len(features)
    if n == 0:
        raise ValueError("dataset is empty")
    if labels.shape != (n,):
        raise ValueError("labels must match features")

    stream = Stream(cfg.seed)
    stack = build_adaptation(m1, m2, stream)
    head = Conv1x1Layer.init(m2, PATTERN_CLASSES, stream)
    velocity: Optional[list[np.ndarray]] = None
    lr = cfg.lr

    x_all = features.reshape(n, 3, 1, 1)
    history: list[float] = []
    for epoch in range(cfg.epochs):
        if epoch in cfg.lr_drop_epochs:
            lr /= 10.0
        order = derive_permutation(stream, n)
        # Per-sample losses land in dataset order so the epoch mean does not
        # depend on how batches partition the data.
        epoch_losses = np.empty(n)
        for start in range(0, n, cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            xb, yb = x_all[sel], labels[sel]
            hidden, cache = stack.forward_cached(xb)
            logits4 = conv1x1_forward(hidden, head)
            losses, dlogits = _softmax_xent(logits4[:, :, 0, 0], yb)
            epoch_losses[sel] = losses
            ghidden, gw_head, gb_head = conv1x1_backward(
                hidden, head, dlogits[:, :, None, None]
            )
            _, stack_grads = stack.backward(cache, ghidden)
            params = stack.params() + [head.weight, head.bias]
            grads = stack_grads + [gw_head, gb_head]
            params, velocity = sgd_step(params, grads, velocity, cfg, lr=lr)
            stack.set_params(params[:-2])
            head.weight, head.bias = params[-2], params[-1]
        history.append(float(epoch_losses.mean()))
    return history


# ---------------------------------------------------------------------------
# Finite-difference gradient verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradCheckResult:
    op: str
    shape: tuple[int, ...]
    max_rel_err: float


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return float((np.abs(analytic - numeric) / denom).max())


def _numeric_grad(f: Callable[[np.ndarray], float], x: np.ndarray, eps: float) -> np.ndarray:
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f(x)
        flat[i] = orig - eps
        lo = f(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * eps)
    return grad


def _rand(stream: Stream, shape: tuple[int, ...], away_from_zero: bool = False) -> np.ndarray:
    vals = 2.0 * uniforms(stream, int(np.prod(shape))).reshape(shape) - 1.0
    if away_from_zero:
        vals = vals + 0.1 * np.sign(vals) + 1e-3 * (vals == 0)
    return vals


def _check_conv1x1(stream: Stream, shape: tuple[int, int, int, int]) -> float:
    n, c, h, w = shape
    c_out = 1 + stream.next_u64() % 5
    x = _rand(stream, (n, c, h, w))
    layer = Conv1x1Layer(
        weight=_rand(stream, (int(c_out), c)), bias=_rand(stream, (int(c_out),))
    )
    proj = _rand(stream, (n, int(c_out), h, w))
    gx, gw, gb = conv1x1_backward(x, layer, proj)

    def loss_x(v: np.ndarray) -> float:
        return float((conv1x1_forward(v, layer) * proj).sum())

    def loss_w(v: np.ndarray) -> float:
        return float((conv1x1_forward(x, Conv1x1Layer(v, layer.bias)) * proj).sum())

    def loss_b(v: np.ndarray) -> float:
        return float((conv1x1_forward(x, Conv1x1Layer(layer.weight, v)) * proj).sum())

    return max(
        _rel_err(gx, _numeric_grad(loss_x, x.copy(), GRADCHECK_EPS)),
        _rel_err(gw, _numeric_grad(loss_w, layer.weight.copy(), GRADCHECK_EPS)),
        _rel_err(gb, _numeric_grad(loss_b, layer.bias.copy(), GRADCHECK_EPS)),
    )


def _check_relu(stream: Stream, shape: tuple[int, int, int, int]) -> float:
    x = _rand(stream, shape, away_from_zero=True)
    proj = _rand(stream, shape)
    gx = relu_backward(x, proj)

    def loss(v: np.ndarray) -> float:
        return float((relu_forward(v) * proj).sum())

    return _rel_err(gx, _numeric_grad(loss, x.copy(), GRADCHECK_EPS))


def _check_stack(stream: Stream, shape: tuple[int, int, int, int]) -> float:
    n, _, h, w = shape
    m1 = 2 + int(stream.next_u64() % 3)
    m2 = 2 + int(stream.next_u64() % 3)
    stack = build_adaptation(m1, m2, stream)
    x = _rand(stream, (n, 3, h, w), away_from_zero=True)
    proj = _rand(stream, (n, m2, h, w))
    _, cache = stack.forward_cached(x)
    gx, grads = stack.backward(cache, proj)

    def loss_x(v: np.ndarray) -> float:
        return float((stack.forward(v) * proj).sum())

    worst = _rel_err(gx, _numeric_grad(loss_x, x.copy(), GRADCHECK_EPS))
    params = stack.params()
    for idx, param in enumerate(params):
        def loss_p(v: np.ndarray, idx: int = idx) -> float:
            saved = params[idx].copy()
            params[idx][...] = v
            stack.set_params(params)
            out = float((stack.forward(x) * proj).sum())
            params[idx][...] = saved
            stack.set_params(params)
            return out

        worst = max(worst, _rel_err(grads[idx], _numeric_grad(loss_p, param.copy(), GRADCHECK_EPS)))
    return worst


DEFAULT_CHECKS: Mapping[str, Callable[[Stream, tuple[int, int, int, int]], float]] = {
    "conv1x1": _check_conv1x1,
    "relu": _check_relu,
    "stack": _check_stack,
}


def run_gradcheck(
    seed: int = 0,
    rounds: int = 20,
    checks: Optional[Mapping[str, Callable[[Stream, tuple[int, int, int, int]], float]]] = None,
) -> list[GradCheckResult]:
    """Run every check over `rounds` random shapes; one result per op
    carrying its worst shape and max relative error."""
    checks = DEFAULT_CHECKS if checks is None else checks
    stream = Stream(seed)
    worst: dict[str, GradCheckResult] = {}
    for _ in range(rounds):
        shape = (
            1 + int(stream.next_u64() % 3),
            1 + int(stream.next_u64() % 5),
            1 + int(stream.next_u64() % 5),
            1 + int(stream.next_u64() % 5),
        )
        for name, fn in checks.items():
            err = fn(stream, shape)
            prev = worst.get(name)
            if prev is None or err > prev.max_rel_err:
                worst[name] = GradCheckResult(op=name, shape=shape, max_rel_err=err)
    return [worst[name] for name in checks]
