"""Core signal substrate: folding operator, line-spectral synthesis,
difference operators, and steering dictionaries.

The centered modulo (folding) operator is

    fold(f) = 2*lam * (frac(f/(2*lam) + 1/2) - 1/2),

mapping any finite real f into [-lam, lam).  Complex values are folded
per real/imaginary part.  Difference operators D^N are applied
matrix-free; a dense matrix constructor is provided for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LineSpectrum",
    "SamplingGrid",
    "FrequencyGrid",
    "Dictionary",
    "fold_real",
    "fold_complex",
    "modulo_decompose",
    "synthesize",
    "synthesize_real",
    "build_dictionary",
    "apply_difference",
    "difference_matrix",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LineSpectrum:
    """Ground truth parameter set: K components (omega_k, alpha_k).

    omega in radians/sec within [0, 2*pi); alpha complex.
    """

    components: tuple[tuple[float, complex], ...]

    def __post_init__(self):
        if len(self.components) < 1:
            raise ValueError("spectrum needs at least one component")
        omegas = [w for w, _ in self.components]
        if len(set(omegas)) != len(omegas):
            raise ValueError("component frequencies must be distinct")
        for w in omegas:
            if not (0.0 <= w < TWO_PI):
                raise ValueError(f"omega {w} outside [0, 2*pi)")

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for _, a in self.components], dtype=complex)


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform sampling: t_m = m * delta_t for m = 1..m_count."""

    delta_t: float
    m_count: int

    def __post_init__(self):
        if not (self.delta_t > 0):
            raise ValueError("delta_t must be positive")
        if self.m_count < 2:
            raise ValueError("m_count must be at least 2")

    @property
    def times(self) -> np.ndarray:
        return self.delta_t * np.arange(1, self.m_count + 1)


@dataclass(frozen=True)
class FrequencyGrid:
    """Discretized frequency grid (strictly increasing, within [0, 2*pi))."""

    points: tuple[float, ...]

    def __post_init__(self):
        pts = np.asarray(self.points)
        if pts.size < 1:
            raise ValueError("frequency grid must be non-empty")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if pts[0] < 0 or pts[-1] >= TWO_PI:
            raise ValueError("frequency grid must lie in [0, 2*pi)")

    @classmethod
    def uniform(cls, start: float, step: float, count: int) -> "FrequencyGrid":
        return cls(tuple(start + step * p for p in range(count)))

    @property
    def p_count(self) -> int:
        return len(self.points)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points)


@dataclass(frozen=True)
class Dictionary:
    """M x P steering matrix with columns a_p = exp(-1j * omega_p * m * dt)."""

    matrix: np.ndarray = field(repr=False)
    fgrid: FrequencyGrid
    sgrid: SamplingGrid


def fold_real(f, lam: float):
    """Centered modulo into [-lam, lam).  Accepts scalars or arrays."""
    if not (lam > 0):
        raise ValueError("lambda must be positive")
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("fold input must be finite")
    out = 2.0 * lam * (np.mod(f / (2.0 * lam) + 0.5, 1.0) - 0.5)
    return out if out.ndim else float(out)


def fold_complex(a, lam: float):
    """Fold real and imaginary parts independently."""
    a = np.asarray(a, dtype=complex)
    out = fold_real(a.real, lam) + 1j * fold_real(a.imag, lam)
    return out if np.ndim(out) else complex(out)


def modulo_decompose(f, lam: float):
    """Split f = x + 2*lam*e with x = fold_real(f) and integer e.

    e = -floor(f/(2 lam) + 1/2); returned as integer array/scalar.
    """
    f = np.asarray(f, dtype=float)
    x = fold_real(f, lam)
    e = -np.floor(f / (2.0 * lam) + 0.5).astype(np.int64)
    if f.ndim:
        return x, e
    return float(x), int(e)


def synthesize(spectrum: LineSpectrum, sgrid: SamplingGrid) -> np.ndarray:
    """y_m = sum_k alpha_k exp(-1j omega_k m dt), m = 1..M."""
    t = sgrid.times
    steer = np.exp(-1j * np.outer(t, spectrum.omegas))
    return steer @ spectrum.alphas


def synthesize_real(amps, omegas, phases, sgrid: SamplingGrid) -> np.ndarray:
    """Real sinusoid mixture sum_k a_k sin(omega_k t + phi_k) at t = m dt.

    Used by the theorem checkers (whose statements concern real
    mixtures) and by the folding illustration presets.
    """
    t = sgrid.times
    amps = np.asarray(amps, dtype=float)
    return np.sin(np.outer(t, np.asarray(omegas)) + np.asarray(phases)) @ amps


def build_dictionary(fgrid: FrequencyGrid, sgrid: SamplingGrid) -> Dictionary:
    """Steering dictionary over the frequency grid; unit-modulus entries."""
    t = sgrid.times
    mat = np.exp(-1j * np.outer(t, fgrid.array))
    return Dictionary(matrix=mat, fgrid=fgrid, sgrid=sgrid)


def apply_difference(x: np.ndarray, order: int) -> np.ndarray:
    """N-th order forward difference (length M -> M-N), matrix-free."""
    x = np.asarray(x)
    if not (1 <= order <= x.shape[0] - 1):
        raise ValueError(f"difference order {order} out of range for length {x.shape[0]}")
    return np.diff(x, n=order, axis=0)


def difference_matrix(m_count: int, order: int) -> np.ndarray:
    """Dense (M-N) x M difference matrix, built by the first-order recursion.

    Exists as an independent oracle for apply_difference; O(M^2) memory.
    """
    if not (1 <= order <= m_count - 1):
        raise ValueError("order out of range")

    def d1(m):
        d = np.zeros((m - 1, m))
        idx = np.arange(m - 1)
        d[idx, idx] = -1.0
        d[idx, idx + 1] = 1.0
        return d

    mat = d1(m_count)
    for n in range(2, order + 1):
        mat = d1(m_count - n + 1) @ mat
    return mat
