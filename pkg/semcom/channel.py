"""Shadowed-Rician fading: power-gain density, sampling and the noisy link.

The density describes the channel *power* gain r = |h|^2; a frame sent over a
realization is scaled in amplitude by sqrt(r) and hit by white Gaussian noise
whose variance is set by the pre-fading SNR against unit transmit power.
"""
import dataclasses
import functools
import logging
import math

import numpy as np
from scipy import integrate, stats

from .exceptions import ConfigError, NumericError, UsageError
from .streams import CHANNEL, NOISE, make_generator

logger = logging.getLogger(__name__)

SR_FADING = 'sr_fading'
AWGN_ONLY = 'awgn_only'
CHANNEL_MODES = (SR_FADING, AWGN_ONLY)

SERIES_TOLERANCE = 1e-15
SERIES_MAX_TERMS = 10_000
# above this argument the series is replaced by its leading asymptotic term
_ASYMPTOTIC_ARGUMENT = 1_000.0
_CDF_GRID_POINTS = 1024
KS_CRITICAL_COEFFICIENT = 1.63


@dataclasses.dataclass(frozen=True)
class SrParams:
    b0: float = 0.158
    m: float = 19.4
    omega: float = 1.29

    def __post_init__(self):
        if not (self.b0 > 0.0 and self.m > 0.0 and self.omega >= 0.0):
            raise ConfigError(f'Shadowed-Rician parameters need b0 > 0, m > 0, omega >= 0; got {self}')

    @classmethod
    def parse(cls, text):
        """Build from a ``"b0,m,omega"`` triple."""
        try:
            b0, m, omega = (float(v) for v in text.split(','))
        except ValueError as exc:
            raise UsageError(f'channel parameters must be "b0,m,omega", got {text!r}') from exc
        return cls(b0, m, omega)


def _check_series_arguments(b, x):
    if b <= 0 and float(b).is_integer():
        raise UsageError(f'1F1 is undefined for non-positive integer b={b}')
    if x < 0:
        raise UsageError(f'1F1 series is evaluated for x >= 0 only, got {x}')


def hyp1f1(a, b, x):
    """Kummer's confluent hypergeometric function by direct power series."""
    _check_series_arguments(b, x)
    term = 1.0
    total = 1.0
    for k in range(SERIES_MAX_TERMS):
        term *= (a + k) * x / ((b + k) * (k + 1))
        total += term
        if not math.isfinite(total):
            break
        if term == 0.0 or abs(term) <= SERIES_TOLERANCE * abs(total):
            return total
    raise NumericError(f'1F1({a}, {b}, {x}) did not converge in {SERIES_MAX_TERMS} terms '
                       f'(partial value {total!r})')


def log_hyp1f1(a, b, x):
    """log 1F1(a; b; x) for a, b > 0 and x >= 0, without overflow."""
    _check_series_arguments(b, x)
    if a <= 0 or b <= 0:
        raise UsageError(f'log 1F1 needs a, b > 0, got a={a}, b={b}')
    if x > _ASYMPTOTIC_ARGUMENT:
        return x + (a - b) * math.log(x) + math.lgamma(b) - math.lgamma(a)
    # every term is positive: accumulate relative to the running largest
    log_term = 0.0
    log_total = 0.0
    for k in range(SERIES_MAX_TERMS):
        log_term += math.log((a + k) * x / ((b + k) * (k + 1))) if x > 0.0 else -math.inf
        if log_term == -math.inf:
            return log_total
        log_total = np.logaddexp(log_total, log_term)
        if log_term - log_total <= math.log(SERIES_TOLERANCE):
            return float(log_total)
    raise NumericError(f'log 1F1({a}, {b}, {x}) did not converge in {SERIES_MAX_TERMS} terms '
                       f'(partial value {float(log_total)!r})')


def _log_pdf(r, p: SrParams):
    scatter = 2.0 * p.b0
    shape = scatter * p.m + p.omega
    argument = p.omega * r / (scatter * shape)
    return (p.m * math.log(scatter * p.m / shape) - math.log(scatter) - r / scatter
            + log_hyp1f1(p.m, 1.0, argument))


def sr_pdf(r, p: SrParams = SrParams()):
    """Shadowed-Rician power-gain density; zero for r < 0. Accepts scalars or arrays."""
    if np.ndim(r) == 0:
        r = float(r)
        return math.exp(_log_pdf(r, p)) if r >= 0.0 else 0.0
    values = np.asarray(r, dtype=np.float64)
    return np.array([sr_pdf(v, p) for v in values.ravel()]).reshape(values.shape)


def sr_mean(p: SrParams = SrParams()):
    return 2.0 * p.b0 + p.omega


def _cdf_upper(p: SrParams):
    """Gain beyond which both the scatter and the shadowed LOS tails are negligible."""
    return (math.sqrt(p.omega * max(1.0, 40.0 / p.m)) + math.sqrt(80.0 * p.b0)) ** 2


@functools.lru_cache(maxsize=16)
def _cdf_table(p: SrParams):
    grid = np.linspace(0.0, _cdf_upper(p), _CDF_GRID_POINTS)
    pieces = [integrate.quad(sr_pdf, lo, hi, args=(p,), epsabs=1e-13)[0]
              for lo, hi in zip(grid[:-1], grid[1:])]
    cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
    logger.debug('SR CDF table for %s reaches %.12f at r=%.3f', p, cumulative[-1], grid[-1])
    return grid, np.minimum(cumulative, 1.0)


def sr_cdf(r, p: SrParams = SrParams()):
    """CDF by quadrature of ``sr_pdf`` on a grid, interpolated linearly."""
    grid, table = _cdf_table(p)
    return np.interp(r, grid, table, left=0.0, right=1.0)


def sr_sample(n, p: SrParams = SrParams(), seed=0):
    """Draw ``n`` power gains |sqrt(G) + Z|^2 with G ~ Gamma(m, omega/m) and E|Z|^2 = 2 b0."""
    if n < 1:
        raise UsageError(f'sample count must be >= 1, got {n}')
    rng = make_generator(seed, CHANNEL)
    if p.omega > 0.0:
        los_power = rng.gamma(p.m, p.omega / p.m, size=n)
    else:
        los_power = np.zeros(n)
    scatter = rng.normal(0.0, math.sqrt(p.b0), size=(2, n))
    return (np.sqrt(los_power) + scatter[0]) ** 2 + scatter[1] ** 2


def ks_statistic(samples, p: SrParams = SrParams()):
    """Kolmogorov-Smirnov distance between ``samples`` and the quadrature CDF."""
    return float(stats.kstest(np.asarray(samples, dtype=np.float64), lambda r: sr_cdf(r, p)).statistic)


def ks_critical(n):
    """Asymptotic KS critical value at alpha = 0.01."""
    return KS_CRITICAL_COEFFICIENT / math.sqrt(n)


def noise_variance(snr_db):
    return 10.0 ** (-snr_db / 10.0)


@dataclasses.dataclass(frozen=True)
class ChannelRealization:
    """One block-fading draw: a gain for the whole frame plus its noise stream."""
    mode: str
    snr_db: float
    gain: float
    noise_variance: float
    seed: int

    @property
    def post_fading_snr_db(self):
        if self.noise_variance == 0.0:
            return math.inf
        return 10.0 * math.log10(self.gain / self.noise_variance)


def realize_channel(mode, snr_db, params: SrParams = SrParams(), seed=0):
    """Draw the gain for one frame; an infinite SNR is the ideal channel (no fading, no noise)."""
    if mode not in CHANNEL_MODES:
        raise ConfigError(f'unknown channel mode {mode!r} (expected one of {", ".join(CHANNEL_MODES)})')
    snr_db = float(snr_db)
    if math.isinf(snr_db) and snr_db > 0:
        return ChannelRealization(AWGN_ONLY, snr_db, 1.0, 0.0, seed)
    if math.isnan(snr_db) or math.isinf(snr_db):
        raise UsageError(f'invalid SNR {snr_db}')
    gain = float(sr_sample(1, params, seed)[0]) if mode == SR_FADING else 1.0
    if not gain > 0.0:
        raise NumericError(f'non-positive fading gain {gain} for seed {seed}')
    return ChannelRealization(mode, snr_db, gain, noise_variance(snr_db), seed)


def ideal_channel():
    return ChannelRealization(AWGN_ONLY, math.inf, 1.0, 0.0, 0)


def apply_channel(y, realization: ChannelRealization):
    """sqrt(gain) * y + n with n ~ N(0, noise_variance), noise drawn from the realization seed."""
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise UsageError('cannot transmit an empty frame')
    output = math.sqrt(realization.gain) * y
    if realization.noise_variance > 0.0:
        rng = make_generator(realization.seed, NOISE)
        output = output + rng.normal(0.0, math.sqrt(realization.noise_variance), size=y.shape)
    return output


def equalize(received, realization: ChannelRealization):
    """Genie-CSI receiver: undo the fading amplitude."""
    return np.asarray(received, dtype=np.float64) / math.sqrt(realization.gain)


def empirical_snr_db(clean, received):
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(received, dtype=np.float64) - clean
    return 10.0 * math.log10(float(np.mean(clean * clean)) / float(np.mean(noise * noise)))
