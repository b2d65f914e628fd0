import math

import numpy as np
import pytest

from modlse.core import (
    FrequencyGrid,
    LineSpectrum,
    SamplingGrid,
    build_dictionary,
    synthesize,
)

PI = math.pi

# the K=3 experiment configuration: B = 13.6, beta_bar = 4
K3_OMEGAS = (0.4 * PI, 1.0 * PI, 1.8 * PI)
K3_AMPS = (11.2, 2.0, 0.4)
K3_GRID_INDICES = (4, 10, 18)


def k3_spectrum(phases=(0.0, 0.0, 0.0)) -> LineSpectrum:
    return LineSpectrum(
        tuple(
            (w, a * np.exp(1j * p))
            for w, a, p in zip(K3_OMEGAS, K3_AMPS, phases)
        )
    )


def k3_alpha_true(spectrum: LineSpectrum, p_count: int = 20) -> np.ndarray:
    alpha = np.zeros(p_count, dtype=complex)
    for idx, (_, a) in zip(K3_GRID_INDICES, spectrum.components):
        alpha[idx] = a
    return alpha


@pytest.fixture
def fgrid20() -> FrequencyGrid:
    return FrequencyGrid.uniform(0.0, 0.1 * PI, 20)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def make_capture_inputs(delta_t, m_count, phases, fgrid):
    spec = k3_spectrum(phases)
    sgrid = SamplingGrid(delta_t, m_count)
    return spec, synthesize(spec, sgrid), build_dictionary(fgrid, sgrid)
