"""From-scratch convolutional network engine: forward, backward, execution.

The reference detector is four convolution blocks followed by three fully
connected layers. Block one opens with the only 2-D convolution, whose kernel
spans both microphone channels; everything after it is 1-D. A rectifier
follows every convolution and every hidden dense layer; the two-way output is
read through a softmax.

All math runs in the dtype of the supplied parameters: float32 in production,
float64 when tests need finite-difference-grade precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dsp import SUPPORTED_RATES, DualChannelWindow
from .errors import ShapeMismatch, UnsupportedRate

CLASS_SUBJECT = 0
CLASS_OTHER = 1
CLASS_NAMES = ("subject_cough", "other")

BYTES_PER_VALUE = 4  # all persisted weights and activations are 32-bit reals


@dataclass(frozen=True)
class Conv2d:
    """2-D convolution over (mic channel, time); kernel height 2 eats both rows."""

    out_channels: int
    kernel: tuple[int, int] = (2, 9)
    stride: int = 2


@dataclass(frozen=True)
class Conv1d:
    out_channels: int
    kernel: int = 9
    stride: int = 1


@dataclass(frozen=True)
class MaxPool:
    width: int = 4


@dataclass(frozen=True)
class GlobalAvgPool:
    pass


@dataclass(frozen=True)
class Dense:
    out_features: int


LayerSpec = Conv2d | Conv1d | MaxPool | GlobalAvgPool | Dense


@dataclass(frozen=True)
class ModelSpec:
    """Layer graph of one detector variant; the unit of profiling and serialization."""

    sample_rate_hz: int
    layers: tuple[LayerSpec, ...]

    def __post_init__(self) -> None:
        _validate_structure(self.layers)
        if self.sample_rate_hz < 2 or self.sample_rate_hz % 2:
            raise ValueError("sample rate must be a positive even integer")

    @property
    def input_len(self) -> int:
        return self.sample_rate_hz // 2

    @property
    def input_shape(self) -> tuple[int, int]:
        return (2, self.input_len)


def _validate_structure(layers: tuple[LayerSpec, ...]) -> None:
    """Enforce the fixed topology: 4 conv blocks, then 3 dense layers, 2 outputs."""
    dense_start = next((i for i, l in enumerate(layers) if isinstance(l, Dense)), None)
    if dense_start is None:
        raise ValueError("spec has no dense layers")
    head, tail = layers[:dense_start], layers[dense_start:]
    if len(tail) != 3 or not all(isinstance(l, Dense) for l in tail):
        raise ValueError("spec must end in exactly three dense layers")
    if tail[-1].out_features != 2:
        raise ValueError("final layer must have width 2")
    if not head or not isinstance(head[0], Conv2d):
        raise ValueError("first layer must be the 2-D convolution")
    if head[0].kernel[0] != 2:
        raise ValueError("2-D convolution kernel height must equal 2")
    if any(isinstance(l, Conv2d) for l in head[1:]):
        raise ValueError("only the first layer may be a 2-D convolution")
    blocks = 0
    convs_in_block = 0
    for layer in head:
        if isinstance(layer, (Conv2d, Conv1d)):
            convs_in_block += 1
        elif isinstance(layer, (MaxPool, GlobalAvgPool)):
            if convs_in_block == 0:
                raise ValueError("pooling layer without preceding convolution")
            blocks += 1
            convs_in_block = 0
    if convs_in_block:
        raise ValueError("trailing convolutions not closed by a pooling layer")
    if blocks != 4:
        raise ValueError(f"spec must have exactly 4 convolution blocks, got {blocks}")
    if not isinstance(head[-1], GlobalAvgPool):
        raise ValueError("the final convolution block must end in global average pooling")


def default_spec(sample_rate_hz: int) -> ModelSpec:
    """The repository's reference architecture for one sampling-rate variant."""
    if sample_rate_hz not in SUPPORTED_RATES:
        raise UnsupportedRate(f"rate {sample_rate_hz} not in {SUPPORTED_RATES}")
    return ModelSpec(
        sample_rate_hz=sample_rate_hz,
        layers=(
            Conv2d(out_channels=12, kernel=(2, 9), stride=2),
            Conv1d(out_channels=12, kernel=9),
            MaxPool(4),
            Conv1d(out_channels=16, kernel=9),
            Conv1d(out_channels=16, kernel=9),
            MaxPool(4),
            Conv1d(out_channels=24, kernel=9),
            Conv1d(out_channels=24, kernel=9),
            MaxPool(4),
            Conv1d(out_channels=32, kernel=9),
            Conv1d(out_channels=32, kernel=9),
            GlobalAvgPool(),
            Dense(32),
            Dense(16),
            Dense(2),
        ),
    )


def reduced_spec(input_len: int = 64) -> ModelSpec:
    """A small same-topology spec for numerical tests (input 2 x input_len)."""
    return ModelSpec(
        sample_rate_hz=2 * input_len,
        layers=(
            Conv2d(out_channels=4, kernel=(2, 5), stride=2),
            Conv1d(out_channels=4, kernel=5),
            MaxPool(2),
            Conv1d(out_channels=6, kernel=5),
            Conv1d(out_channels=6, kernel=5),
            MaxPool(2),
            Conv1d(out_channels=8, kernel=3),
            Conv1d(out_channels=8, kernel=3),
            MaxPool(2),
            Conv1d(out_channels=8, kernel=3),
            Conv1d(out_channels=8, kernel=3),
            GlobalAvgPool(),
            Dense(8),
            Dense(8),
            Dense(2),
        ),
    )


# ---------------------------------------------------------------------------
# shapes and parameters
# ---------------------------------------------------------------------------

def _conv_out_len(length: int, kernel: int, stride: int) -> int:
    pad = (kernel - 1) // 2
    return (length + 2 * pad - kernel) // stride + 1


def activation_shapes(spec: ModelSpec) -> list[tuple[int, ...]]:
    """Output shape of the input buffer and of every layer, in order."""
    shapes: list[tuple[int, ...]] = [spec.input_shape]
    channels, length = spec.input_shape
    for layer in spec.layers:
        if isinstance(layer, Conv2d):
            channels = layer.out_channels
            length = _conv_out_len(length, layer.kernel[1], layer.stride)
            shapes.append((channels, length))
        elif isinstance(layer, Conv1d):
            channels = layer.out_channels
            length = _conv_out_len(length, layer.kernel, layer.stride)
            shapes.append((channels, length))
        elif isinstance(layer, MaxPool):
            length = length // layer.width
            shapes.append((channels, length))
        elif isinstance(layer, GlobalAvgPool):
            shapes.append((channels,))
            length = 1
        elif isinstance(layer, Dense):
            channels = layer.out_features
            shapes.append((channels,))
    return shapes


def param_shapes(spec: ModelSpec) -> list[tuple[int, ...]]:
    """Weight and bias shapes in traversal order (W then b per layer)."""
    shapes: list[tuple[int, ...]] = []
    channels = 2  # the 2-D conv consumes both mic rows like input channels
    for layer in spec.layers:
        if isinstance(layer, Conv2d):
            shapes += [(layer.out_channels, 2, layer.kernel[1]), (layer.out_channels,)]
            channels = layer.out_channels
        elif isinstance(layer, Conv1d):
            shapes += [(layer.out_channels, channels, layer.kernel), (layer.out_channels,)]
            channels = layer.out_channels
        elif isinstance(layer, Dense):
            shapes += [(layer.out_features, channels), (layer.out_features,)]
            channels = layer.out_features
    return shapes


def init_params(spec: ModelSpec, seed: int = 0, dtype=np.float32) -> list[np.ndarray]:
    """Fan-in-scaled uniform weights (variance 2/fan_in, right for rectifiers),
    zero biases."""
    rng = np.random.default_rng(seed)
    params = []
    for shape in param_shapes(spec):
        if len(shape) == 1:
            params.append(np.zeros(shape, dtype=dtype))
        else:
            fan_in = int(np.prod(shape[1:]))
            bound = np.sqrt(6.0 / fan_in)
            params.append(rng.uniform(-bound, bound, size=shape).astype(dtype))
    return params


def zero_params(spec: ModelSpec, dtype=np.float32) -> list[np.ndarray]:
    return [np.zeros(s, dtype=dtype) for s in param_shapes(spec)]


def validate_params(spec: ModelSpec, params: list[np.ndarray]) -> None:
    expected = param_shapes(spec)
    if len(params) != len(expected):
        raise ShapeMismatch(f"{len(params)} arrays, spec wants {len(expected)}")
    for i, (arr, shape) in enumerate(zip(params, expected)):
        if tuple(arr.shape) != shape:
            raise ShapeMismatch(f"array {i} has shape {arr.shape}, spec wants {shape}")
        if not np.isfinite(arr).all():
            raise ValueError(f"array {i} contains non-finite values")


# ---------------------------------------------------------------------------
# layer kernels (batch-first)
# ---------------------------------------------------------------------------

def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int):
    n, c, length = x.shape
    k = w.shape[2]
    pad = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    win = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]
    out = np.einsum("nclk,ock->nol", win, w, optimize=True)
    out += b[None, :, None]
    return out, xp


def _conv_backward(dout: np.ndarray, xp: np.ndarray, w: np.ndarray, stride: int, in_len: int):
    n, out_ch, t = dout.shape
    k = w.shape[2]
    pad = (k - 1) // 2
    win = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]
    dw = np.einsum("not,nctk->ock", dout, win, optimize=True)
    db = dout.sum(axis=(0, 2))
    dxp = np.zeros_like(xp)
    span = stride * (t - 1) + 1
    for tap in range(k):
        contrib = np.tensordot(dout, w[:, :, tap], axes=([1], [0]))  # (n, t, c)
        dxp[:, :, tap:tap + span:stride] += contrib.transpose(0, 2, 1)
    return dxp[:, :, pad:pad + in_len], dw, db


def _maxpool_forward(x: np.ndarray, width: int):
    n, c, length = x.shape
    t = length // width
    xr = x[:, :, : t * width].reshape(n, c, t, width)
    argmax = xr.argmax(axis=3)
    return xr.max(axis=3), argmax


def _maxpool_backward(dout: np.ndarray, argmax: np.ndarray, width: int, in_len: int):
    n, c, t = dout.shape
    dxr = np.zeros((n, c, t, width), dtype=dout.dtype)
    np.put_along_axis(dxr, argmax[..., None], dout[..., None], axis=3)
    dx = np.zeros((n, c, in_len), dtype=dout.dtype)
    dx[:, :, : t * width] = dxr.reshape(n, c, t * width)
    return dx


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# full network forward / backward
# ---------------------------------------------------------------------------

def _run_forward(spec: ModelSpec, params: list[np.ndarray], x: np.ndarray,
                 keep_cache: bool, n_layers: int | None = None):
    """Walk the layer graph; optionally record what backward needs."""
    cache: list[tuple] = []
    h = x
    pi = 0
    layers = spec.layers if n_layers is None else spec.layers[:n_layers]
    last = len(spec.layers) - 1
    for i, layer in enumerate(layers):
        if isinstance(layer, (Conv2d, Conv1d)):
            w, b = params[pi], params[pi + 1]
            pi += 2
            stride = layer.stride
            in_len = h.shape[2]
            out, xp = _conv_forward(h, w, b, stride)
            mask = out > 0
            out *= mask
            if keep_cache:
                cache.append(("conv", xp, w, stride, in_len, mask))
            h = out
        elif isinstance(layer, MaxPool):
            in_len = h.shape[2]
            out, argmax = _maxpool_forward(h, layer.width)
            if keep_cache:
                cache.append(("pool", argmax, layer.width, in_len))
            h = out
        elif isinstance(layer, GlobalAvgPool):
            in_len = h.shape[2]
            if keep_cache:
                cache.append(("gap", in_len))
            h = h.mean(axis=2)
        elif isinstance(layer, Dense):
            w, b = params[pi], params[pi + 1]
            pi += 2
            out = h @ w.T + b
            if i != last:
                mask = out > 0
                out *= mask
            else:
                mask = None
            if keep_cache:
                cache.append(("dense", h, w, mask))
            h = out
    return h, cache


def _run_backward(params: list[np.ndarray], cache: list[tuple], dh: np.ndarray):
    grads: list[np.ndarray] = []
    for entry in reversed(cache):
        kind = entry[0]
        if kind == "conv":
            _, xp, w, stride, in_len, mask = entry
            dh = dh * mask
            dh, dw, db = _conv_backward(dh, xp, w, stride, in_len)
            grads += [db, dw]
        elif kind == "pool":
            _, argmax, width, in_len = entry
            dh = _maxpool_backward(dh, argmax, width, in_len)
        elif kind == "gap":
            _, in_len = entry
            dh = np.repeat(dh[:, :, None], in_len, axis=2) / in_len
        elif kind == "dense":
            _, h_in, w, mask = entry
            if mask is not None:
                dh = dh * mask
            dw = dh.T @ h_in
            db = dh.sum(axis=0)
            dh = dh @ w
            grads += [db, dw]
    grads.reverse()
    return grads, dh


def _as_input(spec: ModelSpec, window, dtype) -> np.ndarray:
    data = window.data if isinstance(window, DualChannelWindow) else np.asarray(window)
    if tuple(data.shape) != spec.input_shape:
        raise ShapeMismatch(f"input shape {data.shape} != {spec.input_shape}")
    return data.astype(dtype)


def forward(spec: ModelSpec, params: list[np.ndarray], window) -> tuple[float, float]:
    """Probabilities (p_subject_cough, p_other) for one normalized window."""
    x = _as_input(spec, window, params[0].dtype)[None]
    logits, _ = _run_forward(spec, params, x, keep_cache=False)
    probs = _softmax(logits)[0]
    return float(probs[CLASS_SUBJECT]), float(probs[CLASS_OTHER])


def forward_batch(spec: ModelSpec, params: list[np.ndarray], x: np.ndarray) -> np.ndarray:
    """Probabilities (n, 2) for a batch of inputs shaped (n, 2, L)."""
    if tuple(x.shape[1:]) != spec.input_shape:
        raise ShapeMismatch(f"batch shape {x.shape[1:]} != {spec.input_shape}")
    logits, _ = _run_forward(spec, params, x.astype(params[0].dtype), keep_cache=False)
    return _softmax(logits)


def predict_probs(spec: ModelSpec, params: list[np.ndarray], x: np.ndarray,
                  batch_size: int = 256) -> np.ndarray:
    """Chunked forward_batch, keeping intermediate activations bounded."""
    outs = [forward_batch(spec, params, x[i:i + batch_size])
            for i in range(0, len(x), batch_size)]
    return np.concatenate(outs, axis=0)


def loss_and_grads(
    spec: ModelSpec,
    params: list[np.ndarray],
    x: np.ndarray,
    labels: np.ndarray,
    sample_weight: np.ndarray | None = None,
) -> tuple[float, list[np.ndarray]]:
    """Weighted-mean cross-entropy loss and gradients for a minibatch."""
    logits, cache = _run_forward(spec, params, x.astype(params[0].dtype), keep_cache=True)
    probs = _softmax(logits)
    n = len(labels)
    if sample_weight is None:
        weights = np.full(n, 1.0 / n)
    else:
        weights = sample_weight / sample_weight.sum()
    eps = np.finfo(probs.dtype).tiny
    losses = -np.log(np.maximum(probs[np.arange(n), labels], eps))
    loss = float(losses @ weights)
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits *= weights[:, None]
    grads, _ = _run_backward(params, cache, dlogits.astype(probs.dtype))
    return loss, grads


def backward(spec: ModelSpec, params: list[np.ndarray], window, label) -> tuple[list[np.ndarray], float]:
    """Gradients and cross-entropy loss for a single labeled window.

    label may be a class index or one of the names in CLASS_NAMES.
    """
    if isinstance(label, str):
        label = CLASS_NAMES.index(label)
    x = _as_input(spec, window, params[0].dtype)[None]
    loss, grads = loss_and_grads(spec, params, x, np.array([label]))
    return grads, loss


def conv_features(spec: ModelSpec, params: list[np.ndarray], x: np.ndarray) -> np.ndarray:
    """Last time-resolved feature map (the conv stack before global pooling)."""
    gap_at = next(i for i, l in enumerate(spec.layers) if isinstance(l, GlobalAvgPool))
    h, _ = _run_forward(spec, params, x.astype(params[0].dtype), keep_cache=False,
                        n_layers=gap_at)
    return h


# ---------------------------------------------------------------------------
# double-buffered executor
# ---------------------------------------------------------------------------

def forward_arena(spec: ModelSpec, params: list[np.ndarray], window) -> tuple[float, float]:
    """Forward pass through a two-region activation arena.

    Demonstrates that one input buffer plus the largest consecutive pair of
    layer outputs is a sufficient activation budget: every layer writes its
    output into whichever end of the arena its input does not occupy. Output
    must match forward() within float tolerance.
    """
    from .profile import profile  # local import; profile depends on this module

    dtype = params[0].dtype
    shapes = activation_shapes(spec)
    out_floats = [int(np.prod(s)) for s in shapes[1:]]
    arena_floats = profile(spec).peak_activation_bytes // BYTES_PER_VALUE \
        - int(np.prod(spec.input_shape))
    arena = np.empty(arena_floats, dtype=dtype)

    x = _as_input(spec, window, dtype).copy()  # the dedicated input buffer
    cur = x
    cur_at_start = False  # input lives outside the arena; first output at start
    cur_len = 0
    pi = 0
    last = len(spec.layers) - 1
    for i, layer in enumerate(spec.layers):
        n_out = out_floats[i]
        assert cur_len + n_out <= arena_floats, "arena budget violated"
        view = arena[:n_out] if not cur_at_start else arena[arena_floats - n_out:]
        out = view.reshape(shapes[i + 1])
        if isinstance(layer, (Conv2d, Conv1d)):
            w, b = params[pi], params[pi + 1]
            pi += 2
            k = w.shape[2]
            pad = (k - 1) // 2
            xp = np.pad(cur, ((0, 0), (pad, pad)))
            win = sliding_window_view(xp, k, axis=1)[:, ::layer.stride, :]
            np.einsum("ctk,ock->ot", win, w, optimize=True, out=out)
            out += b[:, None]
            np.maximum(out, 0, out=out)
        elif isinstance(layer, MaxPool):
            c, length = cur.shape
            t = length // layer.width
            cur[:, : t * layer.width].reshape(c, t, layer.width).max(axis=2, out=out)
        elif isinstance(layer, GlobalAvgPool):
            cur.mean(axis=1, out=out)
        elif isinstance(layer, Dense):
            w, b = params[pi], params[pi + 1]
            pi += 2
            np.matmul(w, cur, out=out)
            out += b
            if i != last:
                np.maximum(out, 0, out=out)
        cur = out
        cur_len = n_out
        cur_at_start = not cur_at_start
    probs = _softmax(cur[None])[0]
    return float(probs[CLASS_SUBJECT]), float(probs[CLASS_OTHER])
