"""Pilot reception, mixed-resolution quantization and LS estimation.

The user sends the pilot ``sqrt(P) * 1``; the base station sees
``y = sqrt(P) h + n``.  Antennas in the high-resolution set pass ``y``
through (optionally quantized at ``bits_high``), the rest go through a
symmetric mid-rise uniform quantizer applied to real and imaginary parts
separately.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize, stats

from .partition import AntennaPartition

# Step size (in units of the input standard deviation) minimizing the MSE of a
# b-bit uniform quantizer driven by a unit Gaussian.
GAUSSIAN_OPTIMAL_STEP = {1: 1.596, 2: 0.996, 3: 0.586, 4: 0.335}


@dataclass(frozen=True)
class PilotConfig:
    P: float = 1.0
    sigma0_sq: float = 1.0
    sigma_alpha_sq: float = 1.0

    def __post_init__(self):
        if not self.P > 0 or not self.sigma0_sq > 0:
            raise ValueError(f"P and sigma0_sq must be positive, got P={self.P}, "
                             f"sigma0_sq={self.sigma0_sq}")

    @classmethod
    def from_snr(cls, snr_db: float, P: float = 1.0, sigma_alpha_sq: float = 1.0) -> "PilotConfig":
        return cls(P=P, sigma0_sq=P * sigma_alpha_sq * 10.0 ** (-snr_db / 10.0),
                   sigma_alpha_sq=sigma_alpha_sq)

    @property
    def snr_db(self) -> float:
        return 10.0 * np.log10(self.P * self.sigma_alpha_sq / self.sigma0_sq)

    @property
    def sigma_dim(self) -> float:
        """Standard deviation of each real dimension of ``y`` (statistical, not per-sample)."""
        return float(np.sqrt((self.P * self.sigma_alpha_sq + self.sigma0_sq) / 2.0))


@dataclass(frozen=True)
class QuantizerSpec:
    """Bit depths for both antenna sets; ``None`` means unquantized."""

    bits_low: int = 1
    bits_high: int | None = None
    clip_scale: dict = field(default_factory=lambda: dict(GAUSSIAN_OPTIMAL_STEP))

    def __post_init__(self):
        for b in (self.bits_low, self.bits_high):
            if b is not None and (int(b) != b or b < 1):
                raise ValueError(f"bit depths must be integers >= 1, got {b}")

    def step(self, bits: int, sigma_dim: float) -> float:
        scale = self.clip_scale.get(bits)
        if scale is None:
            scale = optimal_uniform_step(bits)
        return float(scale) * sigma_dim


@dataclass(frozen=True)
class ReceivedSignal:
    y: np.ndarray
    r: np.ndarray
    ls: np.ndarray


def codebook(bits: int, delta: float) -> np.ndarray:
    K = 2 ** bits
    return (np.arange(K) + 0.5 - K / 2) * delta


def quantize(x, bits: int, delta: float) -> np.ndarray:
    """Mid-rise uniform quantizer with ``2**bits`` levels and saturation.

    Computed on ``|x|`` and re-signed, which makes ``Q(-x) == -Q(x)`` hold
    bitwise, signed zeros included.
    """
    x = np.asarray(x, dtype=float)
    top = 2 ** (bits - 1) - 1
    level = np.minimum(np.floor(np.abs(x) / delta), top)
    return np.copysign((level + 0.5) * delta, x)


def quantize_scalar(x: float, bits: int, delta: float) -> float:
    return float(quantize(x, bits, delta))


def gaussian_distortion(bits: int, step: float) -> float:
    """Normalized MSE ``E{(x - Q(x))^2} / E{x^2}`` for ``x ~ N(0, 1)``, in closed form."""
    levels = codebook(bits, step)
    edges = np.concatenate([[-np.inf], (levels[1:] + levels[:-1]) / 2, [np.inf]])
    lo, hi = edges[:-1], edges[1:]
    pdf_lo, pdf_hi = stats.norm.pdf(lo), stats.norm.pdf(hi)
    mass = stats.norm.cdf(hi) - stats.norm.cdf(lo)
    first = pdf_lo - pdf_hi
    # x*pdf(x) -> 0 at +-inf
    finite_lo, finite_hi = np.where(np.isinf(lo), 0.0, lo), np.where(np.isinf(hi), 0.0, hi)
    xpdf_lo = finite_lo * pdf_lo
    xpdf_hi = finite_hi * pdf_hi
    second = mass + xpdf_lo - xpdf_hi
    return float(np.sum(second - 2 * levels * first + levels ** 2 * mass))


@lru_cache(maxsize=None)
def optimal_uniform_step(bits: int) -> float:
    res = optimize.minimize_scalar(lambda d: gaussian_distortion(bits, d),
                                   bounds=(1e-4, 4.0), method="bounded",
                                   options={"xatol": 1e-10})
    return float(res.x)


def transmit_pilot(h, cfg: PilotConfig, rng: np.random.Generator | None = None,
                   unit_noise=None) -> np.ndarray:
    """``y = sqrt(P) h + n`` with ``n ~ CN(0, sigma0_sq)`` per entry.

    Pass ``unit_noise`` (``CN(0, 1)`` samples shaped like ``h``) to reuse a
    fixed noise draw across SNRs; it is scaled by ``sqrt(sigma0_sq)``.
    """
    h = np.asarray(h, dtype=complex)
    if not np.all(np.isfinite(h)):
        raise ValueError("channel contains non-finite entries")
    if unit_noise is None:
        if rng is None:
            raise ValueError("need either rng or unit_noise")
        unit_noise = complex_normal(rng, h.shape)
    return np.sqrt(cfg.P) * h + np.sqrt(cfg.sigma0_sq) * np.asarray(unit_noise)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """``CN(0, 1)`` samples."""
    g = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    return (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2.0)


def _quantize_complex(v, bits, delta):
    return quantize(v.real, bits, delta) + 1j * quantize(v.imag, bits, delta)


def quantize_mixed(y, part: AntennaPartition, spec: QuantizerSpec, cfg: PilotConfig) -> np.ndarray:
    """Apply the per-set ADC model to the last axis of ``y``."""
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] != part.M:
        raise ValueError(f"signal length {y.shape[-1]} does not match partition M={part.M}")
    r = y.copy()
    sigma = cfg.sigma_dim
    if len(part.set_b):
        delta = spec.step(spec.bits_low, sigma)
        r[..., part.set_b] = _quantize_complex(y[..., part.set_b], spec.bits_low, delta)
    if spec.bits_high is not None and len(part.set_a):
        delta = spec.step(spec.bits_high, sigma)
        r[..., part.set_a] = _quantize_complex(y[..., part.set_a], spec.bits_high, delta)
    return r


def ls_estimate(r, P: float) -> np.ndarray:
    if not P > 0:
        raise ValueError(f"P must be positive, got {P}")
    return np.asarray(r) / np.sqrt(P)


def receive(h, part: AntennaPartition, spec: QuantizerSpec, cfg: PilotConfig,
            rng: np.random.Generator | None = None, unit_noise=None) -> ReceivedSignal:
    y = transmit_pilot(h, cfg, rng=rng, unit_noise=unit_noise)
    r = quantize_mixed(y, part, spec, cfg)
    return ReceivedSignal(y, r, ls_estimate(r, cfg.P))


def complex_to_real(v) -> np.ndarray:
    """Stack real parts then imaginary parts along the last axis."""
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag], axis=-1).astype(float)


def real_to_complex(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] % 2:
        raise ValueError(f"real_to_complex needs an even length, got {x.shape[-1]}")
    k = x.shape[-1] // 2
    return x[..., :k] + 1j * x[..., k:]
