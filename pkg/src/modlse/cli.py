"""Command-line front end.

Subcommands: simulate (write y/z sample files), recover (one capture,
all selected methods), sweep (Monte Carlo over an axis, CSV + JSON),
verify (theorem property checks).  Exit codes: 0 success, 2 config or
input error, 3 recovery failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adc import AdcConfig, NoiseConfig, capture
from .config import (
    PRESETS,
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    load_config,
)
from .core import (
    FrequencyGrid,
    SamplingGrid,
    build_dictionary,
    synthesize,
    synthesize_real,
)
from .evaluate import (
    check_theorem1,
    check_theorem2,
    check_theorem3,
    check_uniformity,
    histogram_bins,
    nmse,
    rsnr_db,
    run_point,
    run_sweep,
    spread_mixture,
    success,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RECOVERY = 3
EXIT_VERIFY = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modlse",
        description="modulo-ADC line-spectral estimation experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "recover", "sweep", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, help="TOML config file")
        p.add_argument("--preset", type=str, choices=sorted(PRESETS))
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out", type=str, help="output directory")
        p.add_argument(
            "--methods", type=str, help="comma-separated subset of hod,rcs,milp,conv"
        )
        p.add_argument("--epsilon-prime", type=float, dest="epsilon_prime")
        if name == "recover":
            p.add_argument("--input", type=str, help="externally captured z CSV")
    return parser


def _load_configs(args) -> list[ExperimentConfig]:
    if args.config and args.preset:
        raise ConfigError("--config and --preset are mutually exclusive")
    if args.config:
        configs = [load_config(args.config)]
    elif args.preset:
        configs = list(PRESETS[args.preset])
    else:
        raise ConfigError("one of --config or --preset is required")
    overrides = {
        "seed": args.seed,
        "trials": args.trials,
        "threads": args.threads,
        "epsilon_prime": args.epsilon_prime,
        "methods": args.methods.split(",") if args.methods else None,
        "out_dir": args.out or os.environ.get("MODLSE_OUT"),
    }
    return [apply_overrides(c, **overrides) for c in configs]


def _outdir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_samples(path: Path, vec: np.ndarray) -> None:
    lines = ["m,re,im"]
    for m, v in enumerate(np.asarray(vec, dtype=complex), start=1):
        lines.append(f"{m},{v.real:.17g},{v.imag:.17g}")
    path.write_text("\n".join(lines) + "\n")


def cmd_simulate(cfg: ExperimentConfig) -> int:
    sgrid = SamplingGrid(cfg.delta_t, cfg.m_count)
    rng, noise_seed = _seeds(cfg)
    if cfg.spectrum.kind == "real_sines":
        omegas = [w for w, _ in cfg.spectrum.components]
        amps = [a for _, a in cfg.spectrum.components]
        phases = cfg.spectrum.phases or (0.0,) * len(amps)
        y = synthesize_real(amps, omegas, phases, sgrid).astype(complex)
    else:
        from .evaluate import _draw_spectrum

        y = synthesize(_draw_spectrum(cfg, rng), sgrid)
    cap = capture(
        y, AdcConfig(lam=cfg.lam, bits=cfg.bits), NoiseConfig(cfg.snr_db, noise_seed)
    )
    out = _outdir(cfg)
    _write_samples(out / f"{cfg.label}-y.csv", y)
    _write_samples(out / f"{cfg.label}-z.csv", cap.z)
    print(f"wrote {out / f'{cfg.label}-y.csv'} and {out / f'{cfg.label}-z.csv'}")
    return EXIT_OK


def _seeds(cfg: ExperimentConfig):
    from .evaluate import _trial_seeds

    return _trial_seeds(cfg.seed, 0, 0)


def cmd_recover(cfg: ExperimentConfig, z_path: str | None = None) -> int:
    if z_path is not None:
        try:
            _ = _read_samples(z_path)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    metrics = run_point(cfg, 0, 0)
    table = []
    any_ok = False
    for method, m in metrics.items():
        if "error" in m:
            table.append((method, "failed", m["error"]))
        else:
            any_ok = True
            table.append(
                (method, "ok", f"nmse={m['nmse']:.3g} rsnr={m['rsnr_db']:.1f}dB "
                               f"success={m['success']}")
            )
    for method, status, detail in table:
        print(f"{method:6s} {status:7s} {detail}")
    out = _outdir(cfg)
    (out / f"{cfg.label}-recover.json").write_text(
        json.dumps({"version": __version__, "metrics": metrics}, indent=2, default=str)
    )
    return EXIT_OK if any_ok else EXIT_RECOVERY


def _read_samples(path: str) -> np.ndarray:
    rows = Path(path).read_text().strip().splitlines()
    if not rows or rows[0].strip() != "m,re,im":
        raise ValueError(f"{path}:1: expected header 'm,re,im'")
    out = []
    for i, line in enumerate(rows[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}:{i}: expected 3 columns")
        try:
            out.append(float(parts[1]) + 1j * float(parts[2]))
        except ValueError:
            raise ValueError(f"{path}:{i}: non-numeric sample") from None
    return np.asarray(out)


def cmd_sweep(cfg: ExperimentConfig) -> int:
    result = run_sweep(cfg)
    out = _outdir(cfg)
    (out / f"{cfg.label}-sweep.csv").write_text(result.to_csv())
    (out / f"{cfg.label}-sweep.json").write_text(result.to_json())
    if cfg.histogram:
        lines = ["key,bin_left,bin_right,density"]
        for key, values in result.per_trial.items():
            edges, counts = histogram_bins(values)
            for j, c in enumerate(counts):
                lines.append(f"{key},{edges[j]:.10g},{edges[j + 1]:.10g},{c:.10g}")
        (out / f"{cfg.label}-hist.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / f'{cfg.label}-sweep.csv'}")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig) -> int:
    checks: list[tuple[str, bool, str]] = []

    err = check_theorem1(trials=min(cfg.trials, 200), seed=cfg.seed)
    checks.append(("theorem1-identity", err <= 1e-9, f"max |err| = {err:.3g}"))

    amps, omegas = spread_mixture(10, cfg.derived_omega_max(), cfg.beta_bar or 4.0)
    sgrid = SamplingGrid(cfg.delta_t, cfg.m_count)
    emp, bound = check_theorem2(
        amps, omegas, sgrid, cfg.lam, trials=min(cfg.trials * 10, 2000), seed=cfg.seed
    )
    checks.append(
        ("theorem2-bound", emp >= bound - 0.02, f"empirical {emp:.4f} vs bound {bound:.4f}")
    )

    from .milp import max_sampling_interval_milp

    limit = max_sampling_interval_milp(
        cfg.derived_omega_max(), cfg.beta_bar or 4.0, cfg.lam
    )
    dt3 = min(cfg.delta_t, 0.9 * limit)
    ok3, viol = check_theorem3(
        amps, omegas, SamplingGrid(dt3, cfg.m_count), cfg.lam,
        trials=min(cfg.trials * 10, 2000), seed=cfg.seed,
    )
    checks.append(("theorem3-ternary", ok3, f"{viol} violations at dt={dt3:.4g}"))

    big_amps = np.full(4, 30.0 * cfg.lam)
    _, ks = check_uniformity(
        big_amps, np.array([0.4, 0.9, 1.4, 1.8]) * math.pi, cfg.lam, 0.1,
        trials=min(cfg.trials * 5, 1000), seed=cfg.seed,
    )
    checks.append(("uniformity-ks", ks < 0.02, f"KS = {ks:.4f}"))

    failed = [name for name, ok, _ in checks if not ok]
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name:18s} {detail}")
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        configs = _load_configs(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rc = EXIT_OK
    try:
        for cfg in configs:
            if args.command == "simulate":
                rc = max(rc, cmd_simulate(cfg))
            elif args.command == "recover":
                rc = max(rc, cmd_recover(cfg, getattr(args, "input", None)))
            elif args.command == "sweep":
                rc = max(rc, cmd_sweep(cfg))
            else:
                rc = max(rc, cmd_verify(cfg))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return rc


if __name__ == "__main__":
    sys.exit(main())
