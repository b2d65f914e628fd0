"""Metrics, theorem-property checkers, and the Monte Carlo sweep driver.

Metric definitions follow the source conventions exactly, including the
unconventional R-SNR = 20*log10(||y||^2 / ||y - y_hat||^2) (kept verbatim
for comparability; capped at 300 dB on exact reconstruction).

Seeding: a master seed expands through numpy SeedSequence spawn keys
(point index, trial index), so trials are independent, reproducible,
and order-insensitive under parallel execution.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import __version__
from .adc import AdcConfig, NoiseConfig, capture, quantization_sigma
from .config import ExperimentConfig
from .core import (
    FrequencyGrid,
    LineSpectrum,
    SamplingGrid,
    apply_difference,
    build_dictionary,
    fold_real,
    modulo_decompose,
    synthesize,
    synthesize_real,
)
from .hod import HodConfig, RecoveryResult, omp, recover_hod, required_order
from .milp import recover_milp
from .rcs import recover_rcs

__all__ = [
    "nmse",
    "rsnr_db",
    "success",
    "check_theorem1",
    "check_theorem2",
    "check_theorem3",
    "check_uniformity",
    "folding_threshold",
    "spread_mixture",
    "recover_conventional",
    "run_sweep",
    "SweepResult",
]

RSNR_CAP_DB = 300.0


# ---------------------------------------------------------------------------
# metrics

def nmse(alpha_true: np.ndarray, alpha_hat: np.ndarray) -> float:
    """Per-trial ||alpha - alpha_hat||^2 / ||alpha||^2."""
    alpha_true = np.asarray(alpha_true)
    alpha_hat = np.asarray(alpha_hat)
    if alpha_true.shape != alpha_hat.shape:
        raise ValueError("length mismatch")
    denom = float(np.sum(np.abs(alpha_true) ** 2))
    if denom == 0.0:
        raise ValueError("NMSE undefined for a zero reference")
    return float(np.sum(np.abs(alpha_true - alpha_hat) ** 2)) / denom


def rsnr_db(y: np.ndarray, y_hat: np.ndarray) -> float:
    """20*log10(||y||^2 / ||y - y_hat||^2), capped at 300 dB."""
    num = float(np.sum(np.abs(y) ** 2))
    den = float(np.sum(np.abs(y - y_hat) ** 2))
    if den == 0.0:
        return RSNR_CAP_DB
    return min(20.0 * math.log10(num / den), RSNR_CAP_DB)


def success(
    alpha_true: np.ndarray,
    alpha_hat: np.ndarray,
    zero_thresh: float = 0.1,
    rel_tol: float = 0.15,
) -> bool:
    """Support match after zeroing small entries, plus per-entry accuracy."""
    a = np.asarray(alpha_hat).copy()
    a[np.abs(a) < zero_thresh] = 0.0
    true_support = np.flatnonzero(np.asarray(alpha_true))
    if not np.array_equal(np.flatnonzero(a), true_support):
        return False
    at = np.asarray(alpha_true)[true_support]
    return bool(np.all(np.abs(a[true_support] - at) / np.abs(at) <= rel_tol))


# ---------------------------------------------------------------------------
# theorem checkers

def check_theorem1(
    trials: int = 200,
    seed: int = 0,
    lam: float = 1.0,
    m_count: int = 150,
    grid: FrequencyGrid | None = None,
) -> float:
    """Max over random on-grid spectra of ||fold(D^N z) - D^N y||_inf
    with (dt, N) drawn to satisfy the sampling/order conditions."""
    if grid is None:
        grid = FrequencyGrid.uniform(0.1 * math.pi, 0.1 * math.pi, 19)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    worst = 0.0
    for _ in range(trials):
        k = int(rng.integers(1, 4))
        idx = rng.choice(grid.p_count, size=k, replace=False)
        omegas = grid.array[idx]
        amps = rng.uniform(0.2, 6.0, size=k) * np.exp(
            1j * rng.uniform(-math.pi, math.pi, size=k)
        )
        omega = float(omegas.max())
        dt = float(rng.uniform(0.2, 1.0)) / (2.0 * omega * math.e)
        b_bound = float(np.sum(np.abs(amps)))
        order = required_order(lam, b_bound, dt, omega)
        spec = LineSpectrum(tuple(zip(map(float, omegas), map(complex, amps))))
        y = synthesize(spec, SamplingGrid(dt, m_count))
        z = fold_real(y.real, lam) + 1j * fold_real(y.imag, lam)
        lhs = apply_difference(z, order)
        lhs = fold_real(lhs.real, lam) + 1j * fold_real(lhs.imag, lam)
        rhs = apply_difference(y, order)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def _real_parts_of(amps, omegas, phases, sgrid):
    """The two real constituent signals of a complex mixture (cos/sin)."""
    t = sgrid.times
    arg = np.outer(t, np.asarray(omegas)) - np.asarray(phases)
    amps = np.asarray(amps, dtype=float)
    return np.cos(arg) @ amps, -np.sin(arg) @ amps


def check_theorem2(
    amps,
    omegas,
    sgrid: SamplingGrid,
    lam: float,
    trials: int = 10000,
    seed: int = 0,
) -> tuple[float, float]:
    """Empirical fold-free rate of first-difference components vs bound.

    Counts real/imag constituent components separately (the bound is
    stated for real mixtures; the complex model splits into two).
    Returns (empirical_rate, bound).
    """
    from .rcs import bound_probability

    amps = np.asarray(amps, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    omega = float(omegas.max())
    beta_bar = float(np.sum(np.abs(amps) * omegas) / omega)
    bound = bound_probability(sgrid.delta_t, omega, beta_bar, lam)

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    match = 0
    total = 0
    for _ in range(trials):
        phases = rng.uniform(0.0, 2.0 * math.pi, size=amps.size)
        for part in _real_parts_of(amps, omegas, phases, sgrid):
            _, e = modulo_decompose(part, lam)
            e_tilde = np.diff(e)
            match += int(np.count_nonzero(e_tilde == 0))
            total += e_tilde.size
    return match / total, bound


def check_theorem3(
    amps,
    omegas,
    sgrid: SamplingGrid,
    lam: float,
    trials: int = 10000,
    seed: int = 0,
) -> tuple[bool, int]:
    """Exact ternary check of the fold-count differences.

    Returns (all_ternary, violation_count); fold counts are computed as
    exact integers via the modulo decomposition, no float thresholds.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    amps = np.asarray(amps, dtype=float)
    violations = 0
    for _ in range(trials):
        phases = rng.uniform(0.0, 2.0 * math.pi, size=amps.size)
        for part in _real_parts_of(amps, omegas, phases, sgrid):
            _, e = modulo_decompose(part, lam)
            e_tilde = np.diff(e)
            violations += int(np.count_nonzero(np.abs(e_tilde) > 1))
    return violations == 0, violations


def folding_threshold(k: int, varsigma: float) -> int:
    """Integer folding-number requirement floor(K / (pi*varsigma)^2)."""
    if not (0.0 < varsigma <= 0.564):
        raise ValueError("varsigma must be in (0, 0.564]")
    return math.floor(k / (math.pi * varsigma) ** 2)


def check_uniformity(
    amps,
    omegas,
    lam: float,
    varsigma: float,
    trials: int = 1000,
    seed: int = 0,
    sgrid: SamplingGrid | None = None,
) -> tuple[bool, float]:
    """(condition_met, KS distance of folded samples vs Uniform(-lam, lam)).

    condition_met compares the folding number B/(2*lam) against
    folding_threshold(K, varsigma).
    """
    amps = np.asarray(amps, dtype=float)
    b_bound = float(np.sum(np.abs(amps)))
    cond = b_bound / (2.0 * lam) >= folding_threshold(amps.size, varsigma)
    if sgrid is None:
        sgrid = SamplingGrid(0.013, 100)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    samples = []
    for _ in range(trials):
        phases = rng.uniform(0.0, 2.0 * math.pi, size=amps.size)
        f = synthesize_real(amps, omegas, phases, sgrid)
        samples.append(fold_real(f, lam))
    folded = np.concatenate(samples)
    ks = stats.kstest(folded, stats.uniform(loc=-lam, scale=2 * lam).cdf).statistic
    return cond, float(ks)


def spread_mixture(k: int, omega_max: float, beta_bar: float):
    """Validation mixture with exactly the requested beta_bar: k tones
    spread over (0, omega_max] with amplitude inversely scaled by
    frequency so each contributes beta_bar/k."""
    omegas = omega_max * np.arange(1, k + 1) / k
    amps = (beta_bar / k) * omega_max / omegas
    return amps, omegas


# ---------------------------------------------------------------------------
# conventional-ADC baseline

def recover_conventional(cap, dictionary, max_atoms: int = 8) -> RecoveryResult:
    """Difference-domain OMP on conventional (clipped) ADC samples.

    The same first-difference pipeline the modulo methods use, applied
    to a conventional capture: OMP on [D A | 1] with a residual
    stopping rule scaled to the capture's own noise (Gaussian plus
    quantization).  This is the near-far baseline.
    """
    z_tilde = apply_difference(cap.z, 1)
    a_tilde = apply_difference(dictionary.matrix, 1)
    n, p = a_tilde.shape
    sigma_part = cap.sigma / math.sqrt(2.0)
    if cap.config.bits is not None:
        rng = (
            cap.config.conventional_range
            if cap.config.mode == "conventional"
            else cap.config.lam
        )
        q_part = quantization_sigma(cap.config.bits, rng) / math.sqrt(2.0)
        sigma_part = math.sqrt(sigma_part**2 + q_part**2)
    thr = 1.5 * max(sigma_part, 1e-9) * math.sqrt(2.0) * math.sqrt(2 * n)
    basis = np.concatenate([a_tilde, np.ones((n, 1))], axis=1)
    coef, diag = omp(basis, z_tilde, max_atoms, thr)
    alpha_hat = coef[:p]
    return RecoveryResult(
        alpha_hat=alpha_hat,
        y_hat=dictionary.matrix @ alpha_hat,
        method="conv",
        support=tuple(np.flatnonzero(alpha_hat != 0).tolist()),
        diagnostics=diag,
    )


# ---------------------------------------------------------------------------
# Monte Carlo driver

@dataclass
class SweepResult:
    rows: list[dict]
    config: ExperimentConfig
    per_trial: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        out = ["axis_value,method,trials,mean_nmse,mean_rsnr_db,success_rate"]
        for r in self.rows:
            out.append(
                f"{r['axis_value']:.10g},{r['method']},{r['trials']},"
                f"{r['mean_nmse']:.10g},{r['mean_rsnr_db']:.10g},"
                f"{r['success_rate']:.10g}"
            )
        return "\n".join(out) + "\n"

    def to_json(self) -> str:
        from dataclasses import asdict

        cfg = asdict(self.config)
        cfg["snr_db"] = repr(cfg["snr_db"])  # inf-safe
        return json.dumps(
            {"version": __version__, "config": cfg, "rows": self.rows},
            indent=2,
            default=str,
        )


def _trial_seeds(master: int, point_idx: int, trial_idx: int):
    ss = np.random.SeedSequence(master, spawn_key=(point_idx, trial_idx))
    phase_ss, noise_ss = ss.spawn(2)
    noise_seed = int(noise_ss.generate_state(1, dtype=np.uint64)[0])
    return np.random.default_rng(phase_ss), noise_seed


def _draw_spectrum(cfg: ExperimentConfig, rng) -> LineSpectrum:
    spec = cfg.spectrum
    fgrid_pts = cfg.grid_start + cfg.grid_step * np.arange(cfg.grid_count)
    if spec.kind == "components":
        comps = []
        for omega, amp in spec.components:
            phase = rng.uniform(0.0, 2.0 * math.pi) if spec.random_phase else 0.0
            comps.append((float(omega), amp * np.exp(1j * phase)))
        return LineSpectrum(tuple(comps))
    if spec.kind == "gaussian":
        idx = rng.choice(np.arange(1, cfg.grid_count), size=spec.k, replace=False)
        comps = []
        for j in idx:
            amp = rng.standard_normal() * np.exp(1j * rng.uniform(0, 2 * math.pi))
            comps.append((float(fgrid_pts[j]), complex(amp)))
        return LineSpectrum(tuple(comps))
    raise ValueError("sweep requires a components/gaussian spectrum")


def _alpha_true(spec: LineSpectrum, cfg: ExperimentConfig) -> np.ndarray:
    pts = cfg.grid_start + cfg.grid_step * np.arange(cfg.grid_count)
    alpha = np.zeros(cfg.grid_count, dtype=complex)
    for omega, amp in spec.components:
        j = int(np.argmin(np.abs(pts - omega)))
        if abs(pts[j] - omega) > 1e-9:
            raise ValueError(f"component frequency {omega} is off-grid")
        alpha[j] = amp
    return alpha


def _point_config(cfg: ExperimentConfig, value: float) -> ExperimentConfig:
    from dataclasses import replace

    if cfg.axis == "snr_db":
        return replace(cfg, snr_db=value)
    if cfg.axis == "delta_t":
        return replace(cfg, delta_t=value)
    if cfg.axis == "bits":
        return replace(cfg, bits=int(value))
    return cfg


def run_point(cfg: ExperimentConfig, point_idx: int, trial_idx: int) -> dict:
    """One Monte Carlo trial: synthesize, capture, recover all methods."""
    rng, noise_seed = _trial_seeds(cfg.seed, point_idx, trial_idx)
    spec = _draw_spectrum(cfg, rng)
    sgrid = SamplingGrid(cfg.delta_t, cfg.m_count)
    fgrid = FrequencyGrid.uniform(cfg.grid_start, cfg.grid_step, cfg.grid_count)
    dictionary = build_dictionary(fgrid, sgrid)
    y = synthesize(spec, sgrid)
    alpha_true = _alpha_true(spec, cfg)

    cap = None
    if any(m in cfg.methods for m in ("hod", "rcs", "milp")):
        cap = capture(
            y,
            AdcConfig(lam=cfg.lam, bits=cfg.bits),
            NoiseConfig(snr_db=cfg.snr_db, seed=noise_seed),
        )

    out: dict = {}
    for method in cfg.methods:
        try:
            if method == "hod":
                result = recover_hod(
                    cap,
                    dictionary,
                    HodConfig(cfg.lam, cfg.derived_b_bound(), cfg.derived_omega_max()),
                    max_sparsity=spec.k,
                )
            elif method == "rcs":
                result = recover_rcs(cap, dictionary)
            elif method == "milp":
                result = recover_milp(
                    cap, dictionary, epsilon_prime=cfg.epsilon_prime
                )
            else:  # conv
                conv_cap = capture(
                    y,
                    AdcConfig(
                        lam=cfg.lam,
                        bits=cfg.bits,
                        mode="conventional",
                        conventional_range=cfg.conventional_range,
                    ),
                    NoiseConfig(snr_db=cfg.snr_db, seed=noise_seed + 1),
                )
                result = recover_conventional(conv_cap, dictionary)
        except Exception as exc:  # solver failure counts as a failed trial
            out[method] = {
                "nmse": 1.0,
                "rsnr_db": 0.0,
                "success": False,
                "error": f"{type(exc).__name__}: {exc}",
            }
            continue
        out[method] = {
            "nmse": nmse(alpha_true, result.alpha_hat),
            "rsnr_db": rsnr_db(y, result.y_hat),
            "success": success(alpha_true, result.alpha_hat),
        }
    return out


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Seeded Monte Carlo over the configured axis points and methods."""
    points = cfg.points if cfg.axis != "none" else (0.0,)
    rows: list[dict] = []
    per_trial: dict = {}
    for pi, value in enumerate(points):
        pcfg = _point_config(cfg, value)
        if cfg.threads > 1:
            with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
                trials = list(
                    pool.map(
                        run_point,
                        [pcfg] * cfg.trials,
                        [pi] * cfg.trials,
                        range(cfg.trials),
                    )
                )
        else:
            trials = [run_point(pcfg, pi, t) for t in range(cfg.trials)]
        for method in cfg.methods:
            per = [t[method] for t in trials]
            rows.append(
                {
                    "axis_value": float(value),
                    "method": method,
                    "trials": cfg.trials,
                    "mean_nmse": float(np.mean([p["nmse"] for p in per])),
                    "mean_rsnr_db": float(np.mean([p["rsnr_db"] for p in per])),
                    "success_rate": float(np.mean([p["success"] for p in per])),
                }
            )
            if cfg.histogram:
                per_trial[f"{value}/{method}"] = [p["nmse"] for p in per]
    return SweepResult(rows=rows, config=cfg, per_trial=per_trial)


def histogram_bins(nmse_values, bin_width: float = 0.05):
    """Empirical-PDF bins over log10(NMSE) (Fig.-5 style)."""
    logs = np.log10(np.maximum(np.asarray(nmse_values, dtype=float), 1e-300))
    lo = math.floor(logs.min() / bin_width) * bin_width
    hi = math.ceil(logs.max() / bin_width) * bin_width + bin_width
    edges = np.arange(lo, hi + bin_width / 2, bin_width)
    counts, edges = np.histogram(logs, bins=edges, density=True)
    return edges, counts
