"""ADC acquisition chain simulation.

Modulo mode: z = fold(y) + v, optionally quantized.  Conventional mode:
z = clip(y, range) + v, optionally quantized over [-range, range].
Noise v is complex Gaussian with variance sigma^2 split evenly across
real/imag parts; sigma is calibrated from the noise-free folded signal:

    sigma^2 = ||z_clean||^2 / (M * 10^(snr_db/10)).

PRNG: numpy's Philox counter-based bit generator keyed by a
SeedSequence-derived per-trial seed (see evaluate.trial_rng), so trials
are reproducible and independent under parallel execution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import fold_complex

__all__ = [
    "AdcConfig",
    "NoiseConfig",
    "ModuloCapture",
    "calibrate_sigma",
    "quantize_uniform",
    "capture",
]


@dataclass(frozen=True)
class AdcConfig:
    """Folding threshold, optional quantizer bit depth, ADC mode."""

    lam: float
    bits: int | None = None
    mode: str = "modulo"
    conventional_range: float | None = None

    def __post_init__(self):
        if not (self.lam > 0):
            raise ValueError("lambda must be positive")
        if self.bits is not None and not (1 <= self.bits <= 32):
            raise ValueError("bits must be in [1, 32]")
        if self.mode not in ("modulo", "conventional"):
            raise ValueError(f"unknown ADC mode {self.mode!r}")
        if self.mode == "conventional" and not (
            self.conventional_range and self.conventional_range > 0
        ):
            raise ValueError("conventional mode requires a positive clip range")


@dataclass(frozen=True)
class NoiseConfig:
    """Requested SNR in dB (math.inf disables noise) and the trial seed."""

    snr_db: float
    seed: int = 0


@dataclass(frozen=True)
class ModuloCapture:
    """Captured sample vector with its acquisition configs."""

    z: np.ndarray
    config: AdcConfig
    noise: NoiseConfig
    sigma: float


def calibrate_sigma(z_clean: np.ndarray, snr_db: float) -> float:
    """Noise std from SNR = ||z||^2 / E||v||^2 using the clean folded signal."""
    energy = float(np.sum(np.abs(z_clean) ** 2))
    if energy == 0.0:
        raise ValueError("cannot calibrate noise against a zero signal")
    if math.isinf(snr_db):
        return 0.0
    m = z_clean.shape[0]
    return math.sqrt(energy / (m * 10.0 ** (snr_db / 10.0)))


def quantize_uniform(x, bits: int, rng: float):
    """Mid-rise uniform quantizer with step 2*range/2^bits, clamped in-range."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if not (rng > 0):
        raise ValueError("range must be positive")
    step = 2.0 * rng / (2.0**bits)
    q = np.floor(np.asarray(x, dtype=float) / step) * step + step / 2.0
    out = np.clip(q, -(rng - step / 2.0), rng - step / 2.0)
    return out if out.ndim else float(out)


def _quantize_complex(z: np.ndarray, bits: int, rng: float) -> np.ndarray:
    return quantize_uniform(z.real, bits, rng) + 1j * quantize_uniform(z.imag, bits, rng)


def capture(y: np.ndarray, adc: AdcConfig, noise: NoiseConfig) -> ModuloCapture:
    """Run the acquisition chain: fold/clip -> noise -> optional quantizer."""
    y = np.asarray(y, dtype=complex)
    if adc.mode == "modulo":
        z_clean = fold_complex(y, adc.lam)
        q_range = adc.lam
    else:
        r = adc.conventional_range
        z_clean = np.clip(y.real, -r, r) + 1j * np.clip(y.imag, -r, r)
        q_range = r

    sigma = calibrate_sigma(z_clean, noise.snr_db)
    z = z_clean
    if sigma > 0:
        rng = np.random.Generator(np.random.Philox(key=noise.seed))
        v = (rng.standard_normal(y.shape[0]) + 1j * rng.standard_normal(y.shape[0])) * (
            sigma / math.sqrt(2.0)
        )
        z = z + v
    if adc.bits is not None:
        z = _quantize_complex(z, adc.bits, q_range)
    return ModuloCapture(z=z, config=adc, noise=noise, sigma=sigma)


def quantization_sigma(bits: int, rng: float) -> float:
    """Effective per-complex-sample noise std of the mid-rise quantizer.

    Per real component the error is ~ uniform on [-step/2, step/2]
    (std step/sqrt(12)); the complex sample combines two components.
    Used to pick epsilon' for quantized, otherwise noiseless captures.
    """
    step = 2.0 * rng / (2.0**bits)
    return step / math.sqrt(6.0)
