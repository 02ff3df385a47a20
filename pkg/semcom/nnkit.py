"""Minimal differentiable-network kit.

Only the pieces the codecs need: dense, 1-D convolution and ReLU layers with
Xavier initialization, an MSE loss, an Adam optimizer, central-difference
gradient checking and a flat binary model format.

Forward passes return a tape (the cached activations) instead of storing it
on the model, so a trained model can be evaluated from several threads while
a training loop holds its own tapes.
"""
import dataclasses
import logging
import math
import struct
from pathlib import Path

import numpy as np

from .exceptions import DataError, NumericError, ShapeError, UsageError

logger = logging.getLogger(__name__)

DENSE = 'dense'
CONV1D = 'conv1d'
RELU = 'relu'

_KIND_CODES = {DENSE: 1, CONV1D: 2, RELU: 3}
_CODE_KINDS = {code: kind for kind, code in _KIND_CODES.items()}

MODEL_MAGIC = b'SMDMA-NN\x00'
MODEL_VERSION = 1
GRAD_CHECK_FLOOR = 1e-12


@dataclasses.dataclass(frozen=True)
class LayerSpec:
    """Declarative description of one layer."""
    kind: str
    in_dim: int = 0
    out_dim: int = 0
    channels_in: int = 0
    channels_out: int = 0
    kernel_size: int = 3

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise UsageError(f'unknown layer kind {self.kind!r}')
        if self.kind == DENSE and (self.in_dim < 1 or self.out_dim < 1):
            raise UsageError(f'dense layer needs positive dims, got {self.in_dim}->{self.out_dim}')
        if self.kind == CONV1D:
            if self.channels_in < 1 or self.channels_out < 1:
                raise UsageError('conv1d layer needs positive channel counts')
            if self.kernel_size < 1 or self.kernel_size % 2 == 0:
                raise UsageError(f'conv1d kernel_size must be odd, got {self.kernel_size}')

    @property
    def padding(self) -> int:
        return (self.kernel_size - 1) // 2

    @property
    def fans(self):
        """(fan_in, fan_out) used by Xavier initialization."""
        if self.kind == DENSE:
            return self.in_dim, self.out_dim
        if self.kind == CONV1D:
            return self.channels_in * self.kernel_size, self.channels_out * self.kernel_size
        return 0, 0

    @property
    def param_shapes(self):
        if self.kind == DENSE:
            return (self.out_dim, self.in_dim), (self.out_dim,)
        if self.kind == CONV1D:
            return (self.channels_out, self.channels_in, self.kernel_size), (self.channels_out,)
        return ()


def dense(in_dim, out_dim) -> LayerSpec:
    return LayerSpec(DENSE, in_dim=in_dim, out_dim=out_dim)


def conv1d(channels_in, channels_out, kernel_size=3) -> LayerSpec:
    return LayerSpec(CONV1D, channels_in=channels_in, channels_out=channels_out,
                     kernel_size=kernel_size)


def relu() -> LayerSpec:
    return LayerSpec(RELU)


def xavier_bound(fan_in, fan_out) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))


def xavier_init(spec: LayerSpec, rng: np.random.Generator):
    """Uniform Xavier weights within +-bound, zero biases."""
    if spec.kind == RELU:
        return []
    weight_shape, bias_shape = spec.param_shapes
    bound = xavier_bound(*spec.fans)
    return [rng.uniform(-bound, bound, size=weight_shape), np.zeros(bias_shape)]


class Dense:
    """y = W x + b on a 1-D input."""

    def __init__(self, spec, weight, bias):
        self.spec = spec
        self.params = [weight, bias]

    def forward(self, x):
        weight, bias = self.params
        return weight @ x + bias, x

    def backward(self, cache, grad):
        weight, _ = self.params
        x = cache
        return [np.outer(grad, x), grad.copy()], weight.T @ grad

    def check_input(self, index, x):
        if x.ndim != 1 or x.shape[0] != self.spec.in_dim:
            raise ShapeError('dense input length mismatch', index, self.spec.in_dim, x.shape)


class Conv1d:
    """Stride-1 cross-correlation with zero padding that keeps the length."""

    def __init__(self, spec, weight, bias):
        self.spec = spec
        self.params = [weight, bias]

    def _columns(self, x):
        channels, length = x.shape
        pad = self.spec.padding
        padded = np.pad(x, ((0, 0), (pad, pad)))
        cols = np.stack([padded[:, j:j + length] for j in range(self.spec.kernel_size)], axis=1)
        return cols.reshape(channels * self.spec.kernel_size, length)

    def forward(self, x):
        weight, bias = self.params
        input_shape = x.shape
        if x.ndim == 1:
            x = x[np.newaxis, :]
        cols = self._columns(x)
        kernel = weight.reshape(self.spec.channels_out, -1)
        return kernel @ cols + bias[:, np.newaxis], (cols, input_shape)

    def backward(self, cache, grad):
        weight, _ = self.params
        cols, input_shape = cache
        spec = self.spec
        length = grad.shape[1]
        kernel = weight.reshape(spec.channels_out, -1)
        grad_weight = (grad @ cols.T).reshape(weight.shape)
        grad_bias = grad.sum(axis=1)
        grad_cols = (kernel.T @ grad).reshape(spec.channels_in, spec.kernel_size, length)
        padded = np.zeros((spec.channels_in, length + 2 * spec.padding))
        for j in range(spec.kernel_size):
            padded[:, j:j + length] += grad_cols[:, j, :]
        grad_input = padded[:, spec.padding:spec.padding + length]
        return [grad_weight, grad_bias], grad_input.reshape(input_shape)

    def check_input(self, index, x):
        channels = 1 if x.ndim == 1 else x.shape[0]
        if x.ndim not in (1, 2) or channels != self.spec.channels_in:
            raise ShapeError('conv1d channel mismatch', index, self.spec.channels_in, x.shape)


class ReLU:

    def __init__(self, spec):
        self.spec = spec
        self.params = []

    def forward(self, x):
        return np.maximum(x, 0.0), x > 0.0

    def backward(self, cache, grad):
        return [], np.where(cache, grad, 0.0)

    def check_input(self, index, x):
        pass


def _build_layer(spec, params):
    if spec.kind == DENSE:
        return Dense(spec, *params)
    if spec.kind == CONV1D:
        return Conv1d(spec, *params)
    return ReLU(spec)


@dataclasses.dataclass
class Tape:
    """Activations cached by one forward pass."""
    model_id: int
    caches: list
    output_shape: tuple
    consumed: bool = False


class Sequential:
    """An ordered stack of layers. A stack with no layers is the identity."""

    def __init__(self, specs, params=None, rng=None):
        self.specs = list(specs)
        if params is None:
            if rng is None and any(s.kind != RELU for s in self.specs):
                raise UsageError('either params or an rng for Xavier initialization is required')
            params = [xavier_init(s, rng) for s in self.specs]
        if len(params) != len(self.specs):
            raise UsageError(f'{len(self.specs)} layer specs but {len(params)} parameter groups')
        self.layers = []
        for index, (spec, group) in enumerate(zip(self.specs, params)):
            group = [np.array(p, dtype=np.float64) for p in group]
            expected = spec.param_shapes
            if tuple(p.shape for p in group) != tuple(expected):
                raise ShapeError('parameter shape mismatch', index, expected,
                                 tuple(p.shape for p in group))
            self.layers.append(_build_layer(spec, group))

    def __len__(self):
        return len(self.layers)

    def parameters(self):
        """Parameter arrays in layer order (weight before bias); updated in place by training."""
        return [p for layer in self.layers for p in layer.params]

    def parameter_names(self):
        names = []
        for index, layer in enumerate(self.layers):
            names.extend(f'{index}.{name}' for name in ('weight', 'bias')[:len(layer.params)])
        return names

    def copy(self):
        return Sequential(self.specs, [[p.copy() for p in layer.params] for layer in self.layers])

    def _run(self, x, keep):
        x = np.array(x, dtype=np.float64)
        if x.ndim != 1:
            raise ShapeError(f'model input must be 1-D, got shape {x.shape}')
        caches = []
        for index, layer in enumerate(self.layers):
            layer.check_input(index, x)
            x, cache = layer.forward(x)
            if not np.all(np.isfinite(x)):
                raise NumericError(f'layer {index} ({layer.spec.kind}) produced non-finite values')
            if keep:
                caches.append(cache)
        return x, caches

    def forward(self, x):
        """Return (output, tape); the tape feeds exactly one ``backward`` call."""
        y, caches = self._run(x, keep=True)
        return y.ravel(), Tape(id(self), caches, y.shape)

    def predict(self, x):
        """Forward pass without caching; safe for concurrent readers."""
        y, _ = self._run(x, keep=False)
        return y.ravel()

    def backward(self, tape, output_grad):
        """Return (parameter gradients in ``parameters()`` order, input gradient)."""
        if not isinstance(tape, Tape) or tape.model_id != id(self):
            raise UsageError('backward called without a matching forward on this model')
        if tape.consumed:
            raise UsageError('backward called twice for one forward pass')
        tape.consumed = True
        grad = np.asarray(output_grad, dtype=np.float64)
        if grad.size != math.prod(tape.output_shape):
            raise ShapeError(f'output gradient has {grad.size} entries, '
                             f'output has {math.prod(tape.output_shape)}')
        grad = grad.reshape(tape.output_shape)
        grouped = []
        for index in range(len(self.layers) - 1, -1, -1):
            layer_grads, grad = self.layers[index].backward(tape.caches[index], grad)
            if not np.all(np.isfinite(grad)):
                raise NumericError(f'layer {index} produced a non-finite gradient')
            grouped.append(layer_grads)
        grouped.reverse()
        return [g for group in grouped for g in group], grad.ravel()


def mse(a, b) -> float:
    """Mean squared error between two equal-length arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f'mse operands differ in shape: {a.shape} vs {b.shape}')
    return float(np.mean((a - b) ** 2))


def mse_grad(prediction, target):
    """Gradient of ``mse(prediction, target)`` with respect to ``prediction``."""
    prediction = np.asarray(prediction, dtype=np.float64)
    return 2.0 * (prediction - np.asarray(target, dtype=np.float64)) / prediction.size


def mse_loss(target):
    """Loss closure for ``grad_check``: output -> (value, gradient)."""
    target = np.asarray(target, dtype=np.float64)

    def loss(output):
        return mse(output, target), mse_grad(output, target)
    return loss


@dataclasses.dataclass
class AdamState:
    """Bias-corrected Adam; moments are allocated on the first step."""
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_hat: float = 1e-8
    first_moment: list = dataclasses.field(default_factory=list)
    second_moment: list = dataclasses.field(default_factory=list)
    step: int = 0


def adam_step(state: AdamState, params, grads):
    """Apply one Adam update to ``params`` in place and return them."""
    if len(params) != len(grads):
        raise ShapeError(f'{len(params)} parameters but {len(grads)} gradients')
    for p, g in zip(params, grads):
        if p.shape != np.shape(g):
            raise ShapeError(f'gradient shape {np.shape(g)} does not match parameter {p.shape}')
    if not state.first_moment:
        state.first_moment = [np.zeros_like(p) for p in params]
        state.second_moment = [np.zeros_like(p) for p in params]
    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        p -= state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon_hat)
    return params


def check_gradients(params, analytic, evaluate, eps=1e-5, names=None, max_entries=None, seed=0,
                    floor=GRAD_CHECK_FLOOR):
    """Compare analytic gradients with central differences of ``evaluate()``.

    ``params`` are perturbed in place and restored. ``max_entries`` limits the
    number of checked entries per parameter (chosen with a seeded generator).
    Errors are relative to max(|analytic|, |numeric|, floor).
    Returns the maximum relative error, 0 when there is nothing to check.
    """
    if not 0.0 < eps <= 1e-2:
        raise UsageError(f'eps must lie in (0, 1e-2], got {eps}')
    names = names or [f'param{i}' for i in range(len(params))]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, p, g in zip(names, params, analytic):
        indices = np.arange(p.size)
        if max_entries is not None and p.size > max_entries:
            indices = rng.choice(p.size, size=max_entries, replace=False)
        flat = p.reshape(-1)
        grad_flat = np.asarray(g).reshape(-1)
        for i in indices:
            original = flat[i]
            flat[i] = original + eps
            plus = evaluate()
            flat[i] = original - eps
            minus = evaluate()
            flat[i] = original
            numeric = (plus - minus) / (2.0 * eps)
            exact = grad_flat[i]
            if not (math.isfinite(plus) and math.isfinite(minus) and math.isfinite(exact)):
                raise NumericError(f'non-finite value while checking {name}[{i}]')
            scale = max(abs(exact), abs(numeric), floor)
            worst = max(worst, abs(exact - numeric) / scale)
    return worst


def grad_check(model: Sequential, loss, x, eps=1e-5, max_entries=None, seed=0):
    """Max relative error between backprop and central differences for ``model``."""
    output, tape = model.forward(x)
    _, output_grad = loss(output)
    grads, _ = model.backward(tape, output_grad)

    def evaluate():
        return loss(model.predict(x))[0]

    return check_gradients(model.parameters(), grads, evaluate, eps,
                           model.parameter_names(), max_entries, seed)


_DIM_FIELDS = {
    DENSE: ('in_dim', 'out_dim'),
    CONV1D: ('channels_in', 'channels_out', 'kernel_size', 'padding'),
    RELU: (),
}


def dumps(model: Sequential) -> bytes:
    """Serialize to the flat little-endian ``SMDMA-NN`` format."""
    chunks = [MODEL_MAGIC, struct.pack('<HH', MODEL_VERSION, len(model.specs))]
    for spec, layer in zip(model.specs, model.layers):
        dims = [getattr(spec, field) for field in _DIM_FIELDS[spec.kind]]
        chunks.append(struct.pack('<B', _KIND_CODES[spec.kind]))
        chunks.append(struct.pack(f'<{len(dims)}I', *dims))
        for p in layer.params:
            chunks.append(np.ascontiguousarray(p, dtype='<f8').tobytes())
    return b''.join(chunks)


def loads(blob: bytes) -> Sequential:
    if not blob.startswith(MODEL_MAGIC):
        raise DataError('not an SMDMA-NN model file (bad magic)')
    offset = len(MODEL_MAGIC)

    def take(fmt):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(blob):
            raise DataError(f'model file truncated at byte {offset}')
        values = struct.unpack_from(fmt, blob, offset)
        offset += size
        return values

    version, count = take('<HH')
    if version != MODEL_VERSION:
        raise DataError(f'unsupported model version {version}')
    specs, params = [], []
    for _ in range(count):
        (code,) = take('<B')
        if code not in _CODE_KINDS:
            raise DataError(f'unknown layer code {code} at byte {offset - 1}')
        kind = _CODE_KINDS[code]
        fields = _DIM_FIELDS[kind]
        dims = dict(zip(fields, take(f'<{len(fields)}I'))) if fields else {}
        dims.pop('padding', None)
        spec = LayerSpec(kind, **dims)
        group = []
        for shape in spec.param_shapes:
            values = take(f'<{math.prod(shape)}d')
            group.append(np.array(values, dtype=np.float64).reshape(shape))
        specs.append(spec)
        params.append(group)
    if offset != len(blob):
        raise DataError(f'{len(blob) - offset} trailing bytes after the last layer')
    return Sequential(specs, params)


def save_model(model: Sequential, path):
    Path(path).write_bytes(dumps(model))
    logger.debug('saved %d-layer model to %s', len(model), path)


def load_model(path) -> Sequential:
    return loads(Path(path).read_bytes())
