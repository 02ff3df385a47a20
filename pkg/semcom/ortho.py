"""Kronecker orthogonal embedding, power-normalized superposition and separation.

Each cropped stream is expanded as F (x) u with its own unit signature
vector; since u1 and u2 are orthogonal the two expansions are orthogonal for
any stream contents, and a receiver recovers either stream by projecting
each length-q block of the mixed frame onto its signature.
"""
import dataclasses
import logging
import struct

import numpy as np

from .exceptions import ConfigError, FrameError, ShapeError
from .ranking import CALIBRATED, PER_FRAME

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-9
NORM_FLOOR = 1e-12

FRAME_MAGIC = b'SMDMA-FR'
FRAME_VERSION = 1
_MODE_CODES = {CALIBRATED: 0, PER_FRAME: 1}
_CODE_MODES = {code: mode for mode, code in _MODE_CODES.items()}


@dataclasses.dataclass(frozen=True)
class OrthoBasis:
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        u1 = np.asarray(self.u1, dtype=np.float64)
        u2 = np.asarray(self.u2, dtype=np.float64)
        object.__setattr__(self, 'u1', u1)
        object.__setattr__(self, 'u2', u2)
        if u1.ndim != 1 or u1.shape != u2.shape:
            raise ConfigError(f'basis vectors must be equal-length 1-D, got {u1.shape} and {u2.shape}')
        if abs(float(u1 @ u2)) > ORTHOGONALITY_TOLERANCE:
            raise ConfigError(f'basis vectors are not orthogonal (u1.u2 = {float(u1 @ u2):.3e})')
        for name, u in (('u1', u1), ('u2', u2)):
            if abs(np.linalg.norm(u) - 1.0) > NORM_TOLERANCE:
                raise ConfigError(f'{name} is not unit norm (|{name}| = {np.linalg.norm(u):.12f})')

    @property
    def q(self):
        return self.u1.shape[0]

    def vector(self, user_index):
        return self.u1 if user_index == 1 else self.u2


def default_basis():
    return OrthoBasis(np.array([0.5, -0.5, 0.5, -0.5]), np.array([0.5, 0.5, -0.5, -0.5]))


@dataclasses.dataclass(frozen=True)
class MixedFrame:
    payload: np.ndarray
    norm_scale: float
    keep: int
    q: int


def embed(features, u):
    """Kronecker expansion: block i equals features[i] * u."""
    return np.kron(np.asarray(features, dtype=np.float64), np.asarray(u, dtype=np.float64))


def unit_power(signal):
    """Scale ``signal`` to unit mean power; returns (scaled, scale), scale floored at NORM_FLOOR."""
    signal = np.asarray(signal, dtype=np.float64)
    scale = max(float(np.sqrt(np.mean(signal * signal))), NORM_FLOOR)
    return signal / scale, scale


def unit_power_backward(grad, scaled, scale):
    """Gradient of a loss w.r.t. the input of ``unit_power`` given the gradient w.r.t. its output."""
    grad = np.asarray(grad, dtype=np.float64)
    if scale <= NORM_FLOOR:
        # floored scale is a constant
        return grad / scale
    return (grad - scaled * np.mean(grad * scaled)) / scale


def mix(shared_embedded, delta_embedded, q, normalize=True, check=False):
    """Superpose two embedded streams and scale to unit mean power.

    With ``normalize`` off the scale is 1 and the sum is sent as is. ``check``
    asserts that the two streams are orthogonal.
    """
    shared_embedded = np.asarray(shared_embedded, dtype=np.float64)
    delta_embedded = np.asarray(delta_embedded, dtype=np.float64)
    if shared_embedded.shape != delta_embedded.shape:
        raise ShapeError(f'cannot mix streams of shapes {shared_embedded.shape} and {delta_embedded.shape}')
    if shared_embedded.shape[0] % q:
        raise ShapeError(f'stream length {shared_embedded.shape[0]} is not a multiple of q={q}')
    if check:
        inner = abs(float(shared_embedded @ delta_embedded))
        scale = float(np.linalg.norm(shared_embedded) * np.linalg.norm(delta_embedded))
        assert inner <= ORTHOGONALITY_TOLERANCE * max(scale, 1.0), f'streams not orthogonal: {inner}'
    total = shared_embedded + delta_embedded
    payload, norm_scale = unit_power(total) if normalize else (total, 1.0)
    return MixedFrame(payload, norm_scale, shared_embedded.shape[0] // q, q)


def separate(payload, norm_scale, u):
    """Blockwise projection of a (possibly noisy) frame payload onto ``u``."""
    payload = np.asarray(payload, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if payload.shape[0] % u.shape[0]:
        raise ShapeError(f'payload length {payload.shape[0]} is not divisible by q={u.shape[0]}')
    return (payload * norm_scale).reshape(-1, u.shape[0]) @ u


def separate_frame(frame: MixedFrame, u):
    return separate(frame.payload, frame.norm_scale, u)


def verify_lemma1(shared, delta, basis: OrthoBasis):
    """|<F_s (x) u1, F_d (x) u2>|; vanishes whenever u1 and u2 are orthogonal."""
    return abs(float(embed(shared, basis.u1) @ embed(delta, basis.u2)))


@dataclasses.dataclass(frozen=True)
class FrameHeader:
    """Noiseless side-channel metadata that travels with every frame."""
    dim: int
    keep: int
    q: int
    mode: str
    norm_scale: float
    perms: tuple = ()

    def __post_init__(self):
        if self.mode not in _MODE_CODES:
            raise FrameError(f'unknown ranking mode {self.mode!r}')
        if self.mode == PER_FRAME and len(self.perms) != 2:
            raise FrameError('per-frame headers carry the shared and difference permutations')


def pack_frame(header: FrameHeader, payload) -> bytes:
    payload = np.ascontiguousarray(payload, dtype='<f8')
    if payload.shape != (header.q * header.keep,):
        raise FrameError(f'payload has {payload.size} values, header promises {header.q * header.keep}')
    chunks = [FRAME_MAGIC,
              struct.pack('<HIIHB', FRAME_VERSION, header.dim, header.keep, header.q,
                          _MODE_CODES[header.mode])]
    if header.mode == PER_FRAME:
        for perm in header.perms:
            chunks.append(np.asarray(perm, dtype='<u4').tobytes())
    chunks.append(struct.pack('<d', header.norm_scale))
    chunks.append(payload.tobytes())
    return b''.join(chunks)


def unpack_frame(blob: bytes):
    """Return (FrameHeader, payload) or raise FrameError on any inconsistency."""
    if not blob.startswith(FRAME_MAGIC):
        raise FrameError('bad frame magic')
    offset = len(FRAME_MAGIC)
    fixed = struct.calcsize('<HIIHB')
    if len(blob) < offset + fixed:
        raise FrameError('frame header truncated')
    version, dim, keep, q, code = struct.unpack_from('<HIIHB', blob, offset)
    offset += fixed
    if version != FRAME_VERSION:
        raise FrameError(f'unsupported frame version {version}')
    if code not in _CODE_MODES or q == 0 or not 1 <= keep <= dim:
        raise FrameError(f'inconsistent frame header (d={dim}, K={keep}, q={q}, mode={code})')
    mode = _CODE_MODES[code]
    perms = ()
    if mode == PER_FRAME:
        size = 4 * dim
        if len(blob) < offset + 2 * size:
            raise FrameError('frame permutations truncated')
        perms = tuple(np.frombuffer(blob, dtype='<u4', count=dim, offset=offset + i * size).astype(np.int64)
                      for i in range(2))
        offset += 2 * size
        for perm in perms:
            if not np.array_equal(np.sort(perm), np.arange(dim)):
                raise FrameError('frame permutation is not a bijection')
    if len(blob) < offset + 8:
        raise FrameError('frame scale truncated')
    (norm_scale,) = struct.unpack_from('<d', blob, offset)
    offset += 8
    if not (np.isfinite(norm_scale) and norm_scale > 0.0):
        raise FrameError(f'invalid normalization scale {norm_scale}')
    if len(blob) - offset != 8 * q * keep:
        raise FrameError(f'payload holds {len(blob) - offset} bytes, expected {8 * q * keep}')
    payload = np.frombuffer(blob, dtype='<f8', offset=offset).astype(np.float64)
    return FrameHeader(dim, keep, q, mode, norm_scale, perms), payload
