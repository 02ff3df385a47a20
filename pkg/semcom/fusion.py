"""Similarity fusion of two feature vectors into shared and difference parts.

The first image's features are the shared part; the difference part keeps
only element-wise differences whose magnitude exceeds the threshold tau.
"""
import dataclasses

import numpy as np

from .exceptions import ConfigError, ShapeError

DEFAULT_TAU = 0.05


@dataclasses.dataclass(frozen=True)
class FusionConfig:
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        if not self.tau >= 0.0:
            raise ConfigError(f'fusion threshold must be >= 0, got {self.tau}')


@dataclasses.dataclass(frozen=True)
class FusionPair:
    shared: np.ndarray
    delta: np.ndarray
    tau: float

    @property
    def dim(self):
        return self.shared.shape[0]


def fuse(f1, f2, cfg: FusionConfig = FusionConfig()) -> FusionPair:
    f1 = np.asarray(f1, dtype=np.float64)
    f2 = np.asarray(f2, dtype=np.float64)
    if f1.shape != f2.shape or f1.ndim != 1:
        raise ShapeError(f'cannot fuse features of shapes {f1.shape} and {f2.shape}')
    difference = f2 - f1
    # strict inequality: |difference| == tau is dropped
    delta = np.where(np.abs(difference) > cfg.tau, difference, 0.0)
    return FusionPair(f1.copy(), delta, cfg.tau)


def defuse(pair: FusionPair):
    """Receiver-side inverse: (f1_hat, f2_hat) = (F_s, F_s + delta)."""
    return pair.shared.copy(), pair.shared + pair.delta
