"""Experiment configuration: schema, TOML file loading, and the figure
reproduction presets.

A config file is a TOML document with the tables [spectrum], [sampling],
[grid], [adc], [noise], [sweep] and scalar top-level keys; unknown keys
anywhere are rejected.  CLI flags override file values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

MODULO_METHODS = ("hod", "rcs", "milp")
ALL_METHODS = MODULO_METHODS + ("conv",)
AXES = ("none", "snr_db", "delta_t", "bits")

PI = math.pi


class ConfigError(ValueError):
    """Invalid or unknown configuration content (CLI exit code 2)."""


@dataclass(frozen=True)
class SpectrumSpec:
    """Ground-truth signal rule.

    kind='components': fixed (omega, |amplitude|) pairs, phases drawn
    uniformly per trial when random_phase is set.
    kind='gaussian': k components on random distinct grid points with
    standard-normal amplitudes and uniform phases (Fig.-5 style).
    kind='real_sines': real mixture sum a_k sin(omega_k t + phi_k)
    (folding illustration only; no dictionary recovery).
    """

    kind: str = "components"
    components: tuple[tuple[float, float], ...] = ()
    random_phase: bool = True
    k: int = 0
    phases: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("components", "gaussian", "real_sines"):
            raise ConfigError(f"unknown spectrum kind {self.kind!r}")
        if self.kind in ("components", "real_sines") and not self.components:
            raise ConfigError("spectrum.components must be non-empty")
        if self.kind == "gaussian" and self.k < 1:
            raise ConfigError("gaussian spectrum needs k >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    spectrum: SpectrumSpec
    delta_t: float = 0.024
    m_count: int = 400
    grid_start: float = 0.0
    grid_step: float = 0.1 * PI
    grid_count: int = 20
    lam: float = 1.0
    bits: int | None = None
    conventional_range: float | None = None
    snr_db: float = 30.0
    seed: int = 20260826
    methods: tuple[str, ...] = ("hod", "rcs", "milp")
    axis: str = "none"
    points: tuple[float, ...] = ()
    trials: int = 200
    threads: int = 1
    epsilon_prime: float | None = None
    tau: float = 0.9
    b_bound: float | None = None
    beta_bar: float | None = None
    omega_max: float | None = None
    out_dir: str = "out"
    histogram: bool = False
    label: str = "custom"

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}")
        if self.axis != "none" and not self.points:
            raise ConfigError("sweep axis set but no points given")
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ConfigError(f"unknown method {m!r}")
        if not self.methods:
            raise ConfigError("at least one method required")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.delta_t <= 0 or self.m_count < 2:
            raise ConfigError("invalid sampling parameters")
        if "conv" in self.methods and not self.conventional_range:
            raise ConfigError("method 'conv' requires conventional_range")

    def derived_b_bound(self) -> float:
        if self.b_bound is not None:
            return self.b_bound
        if self.spectrum.kind == "components":
            return sum(a for _, a in self.spectrum.components)
        raise ConfigError("b_bound must be given for non-component spectra")

    def derived_omega_max(self) -> float:
        if self.omega_max is not None:
            return self.omega_max
        if self.spectrum.kind in ("components", "real_sines"):
            return max(w for w, _ in self.spectrum.components)
        return self.grid_start + self.grid_step * (self.grid_count - 1)


# ---------------------------------------------------------------------------
# built-in experiment presets

_K3_MIX = SpectrumSpec(
    kind="components",
    components=((0.4 * PI, 11.2), (1.0 * PI, 2.0), (1.8 * PI, 0.4)),
)

_NEAR_FAR = SpectrumSpec(
    kind="components",
    components=((0.2 * PI, 1000.0), (1.8 * PI, 1.0)),
)


def _k3(**kw) -> ExperimentConfig:
    base = dict(
        spectrum=_K3_MIX,
        lam=1.0,
        b_bound=13.6,
        beta_bar=4.0,
        omega_max=1.8 * PI,
    )
    base.update(kw)
    return ExperimentConfig(**base)


PRESETS: dict[str, tuple[ExperimentConfig, ...]] = {
    # folding illustration: three real sines, dt=0.05, range 0.5
    "fig1": (
        ExperimentConfig(
            spectrum=SpectrumSpec(
                kind="real_sines",
                components=(
                    (PI / 6.0, 4.0),
                    (PI / 3.0, -2.0),
                    (2.0 * PI - 0.2, 2.0),
                ),
                random_phase=False,
                phases=(0.0, 0.0, 0.0),
            ),
            delta_t=0.05,
            m_count=400,
            lam=0.5,
            snr_db=math.inf,
            methods=("milp",),
            b_bound=8.0,
            omega_max=2.0 * PI - 0.2,
            label="fig1",
        ),
    ),
    # SNR sweeps at the three HOD-feasible sampling intervals
    "fig2": tuple(
        _k3(
            delta_t=dt,
            axis="snr_db",
            points=(0.0, 10.0, 20.0, 30.0, 40.0, 50.0),
            label=f"fig2-dt{dt}",
        )
        for dt in (0.004, 0.014, 0.024)
    ),
    # sampling-interval sweep at SNR 30 dB
    "fig3": (
        _k3(
            axis="delta_t",
            points=tuple(round(0.004 + 0.008 * i, 3) for i in range(11)),
            snr_db=30.0,
            methods=("rcs", "milp"),
            label="fig3",
        ),
    ),
    # K=10 random spectra, NMSE histogram at SNR in {20, 50}
    "fig5": (
        ExperimentConfig(
            spectrum=SpectrumSpec(kind="gaussian", k=10),
            delta_t=0.027,
            lam=0.5,
            axis="snr_db",
            points=(20.0, 50.0),
            methods=("rcs", "milp"),
            histogram=True,
            b_bound=13.6,
            label="fig5",
        ),
    ),
    # near-far bit-depth sweep: modulo MILP vs conventional ADC
    "fig6": (
        ExperimentConfig(
            spectrum=_NEAR_FAR,
            delta_t=0.01,
            m_count=600,
            lam=10.0,
            snr_db=math.inf,
            axis="bits",
            points=(9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0),
            methods=("milp", "conv"),
            conventional_range=1001.0,
            trials=50,
            b_bound=1001.0,
            beta_bar=(1000.0 * 0.2 * PI + 1.0 * 1.8 * PI) / (1.8 * PI),
            omega_max=1.8 * PI,
            label="fig6",
        ),
    ),
}


# ---------------------------------------------------------------------------
# TOML loading

_TABLES = {
    "spectrum": {"kind", "components", "random_phase", "k", "phases"},
    "sampling": {"delta_t", "m_count"},
    "grid": {"start", "step", "count"},
    "adc": {"lam", "bits", "conventional_range"},
    "noise": {"snr_db", "seed"},
    "sweep": {"axis", "points"},
}
_TOP = {
    "methods", "trials", "threads", "epsilon_prime", "tau",
    "b_bound", "beta_bar", "omega_max", "out_dir", "histogram", "label",
}


def load_config(path: str) -> ExperimentConfig:
    """Parse and schema-validate a TOML experiment config."""
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    for key, val in raw.items():
        if key in _TABLES:
            unknown = set(val) - _TABLES[key]
            if unknown:
                raise ConfigError(f"unknown keys in [{key}]: {sorted(unknown)}")
        elif key not in _TOP:
            raise ConfigError(f"unknown top-level key {key!r}")

    spec_raw = raw.get("spectrum", {})
    comp = tuple(
        (float(w), float(a)) for w, a in spec_raw.get("components", ())
    )
    spectrum = SpectrumSpec(
        kind=spec_raw.get("kind", "components"),
        components=comp,
        random_phase=bool(spec_raw.get("random_phase", True)),
        k=int(spec_raw.get("k", 0)),
        phases=tuple(float(p) for p in spec_raw.get("phases", ())),
    )

    kw: dict = {"spectrum": spectrum}
    samp = raw.get("sampling", {})
    if "delta_t" in samp:
        kw["delta_t"] = float(samp["delta_t"])
    if "m_count" in samp:
        kw["m_count"] = int(samp["m_count"])
    grid = raw.get("grid", {})
    if "start" in grid:
        kw["grid_start"] = float(grid["start"])
    if "step" in grid:
        kw["grid_step"] = float(grid["step"])
    if "count" in grid:
        kw["grid_count"] = int(grid["count"])
    adc = raw.get("adc", {})
    if "lam" in adc:
        kw["lam"] = float(adc["lam"])
    if "bits" in adc:
        kw["bits"] = int(adc["bits"])
    if "conventional_range" in adc:
        kw["conventional_range"] = float(adc["conventional_range"])
    noise = raw.get("noise", {})
    if "snr_db" in noise:
        kw["snr_db"] = float(noise["snr_db"])
    if "seed" in noise:
        kw["seed"] = int(noise["seed"])
    sweep = raw.get("sweep", {})
    if "axis" in sweep:
        kw["axis"] = sweep["axis"]
    if "points" in sweep:
        kw["points"] = tuple(float(p) for p in sweep["points"])
    for key in _TOP:
        if key in raw:
            val = raw[key]
            if key == "methods":
                val = tuple(val)
            kw[key] = val
    return ExperimentConfig(**kw)


def apply_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """CLI flag overrides; None values are ignored."""
    clean = {k: v for k, v in overrides.items() if v is not None}
    if "methods" in clean:
        clean["methods"] = tuple(clean["methods"])
    return replace(cfg, **clean) if clean else cfg
