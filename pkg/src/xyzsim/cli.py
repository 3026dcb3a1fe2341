"""Command-line experiment driver.

Subcommands cover the four experiment families plus exact diagnostics:

  evolve        mx(t) for one configuration (deterministic or ensemble mean)
  gap           slowest decay rate versus jy (sweep CSV)
  trajectories  individual stochastic records (one CSV per trajectory)
  bimodality    b(jy) sweep with per-point histograms
  spectrum      exact Liouvillian spectrum, steady state checks, gap

Configuration comes from a TOML file (--config) or a packaged preset
(--preset), with --set section.key=value overrides winning over the file.
Exit codes: 0 ok, 1 configuration error, 2 numerical failure.
"""

import argparse
import sys
from pathlib import Path

from . import __version__, analysis, io
from .config import ExperimentConfig, apply_overrides, load_config, load_preset
from .errors import ConfigError, XyzSimError
from .liouville import build_liouvillian, full_spectrum
from .operators import build_hamiltonian
from .trajectories import RNG_IDENTITY


def _parse_jy_values(raw: str) -> list[float]:
    try:
        values = [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --jy-values {raw!r}: {exc}") from exc
    if not values:
        raise ConfigError("--jy-values is empty")
    return values


def _resolve_config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        config = load_config(args.config)
    elif args.preset:
        config = load_preset(args.preset)
    else:
        config = ExperimentConfig()
    config = apply_overrides(config, args.set or [])
    if args.out:
        config = config.with_updates(output_dir=args.out)
    return config.validate()


def _out_dir(config) -> Path:
    return Path(config.output_dir or ".")


def _metadata(config, **extra) -> dict:
    resolved = config.to_dict()
    resolved.pop("output", None)  # contents must not depend on destination
    meta = {
        "config": resolved,
        "rng": RNG_IDENTITY,
        "version": __version__,
    }
    meta.update(extra)
    return meta


def cmd_evolve(config: ExperimentConfig) -> int:
    out = _out_dir(config)
    if config.method == "spectrum":
        raise ConfigError("evolve needs method rk4, jump, or homodyne")
    if config.method == "rk4":
        series = analysis.run_evolution(config)
        meta = _metadata(config)
        io.write_timeseries_csv(out / "evolve.csv", series, meta)
    else:
        result = analysis.run_trajectory_ensemble(config)
        meta = _metadata(config, seeds=[r.seed for r in result.records])
        io.write_ensemble_csv(out / "evolve.csv", result, meta)
    io.write_metadata_json(out / "evolve.meta.json", meta)
    print(f"wrote {out / 'evolve.csv'}")
    return 0


def cmd_gap(config: ExperimentConfig, jy_values: list[float]) -> int:
    out = _out_dir(config)
    points = analysis.gap_sweep(config, jy_values)
    meta = _metadata(config, jy_values=jy_values)
    io.write_gap_sweep_csv(out / "gap.csv", points, meta)
    io.write_metadata_json(out / "gap.meta.json", meta)
    for p in points:
        err = "" if p.gap_err is None else f" +- {p.gap_err:.2e}"
        print(f"jy = {p.jy:g}: rate = {p.gap:.6g}{err}")
    return 0


def cmd_trajectories(config: ExperimentConfig, per_site: bool) -> int:
    if config.method not in ("jump", "homodyne"):
        raise ConfigError("trajectories needs method jump or homodyne")
    out = _out_dir(config)
    result = analysis.run_trajectory_ensemble(config, keep_per_site=per_site)
    meta = _metadata(config, seeds=[r.seed for r in result.records])
    for record in result.records:
        io.write_trajectory_csv(out / f"traj-{record.seed}.csv", record, meta)
    io.write_ensemble_csv(out / "ensemble.csv", result, meta)
    io.write_metadata_json(out / "trajectories.meta.json", meta)
    print(f"wrote {len(result.records)} trajectories to {out}")
    return 0


def cmd_bimodality(config: ExperimentConfig, jy_values: list[float]) -> int:
    if config.method not in ("jump", "homodyne"):
        raise ConfigError("bimodality needs method jump or homodyne")
    out = _out_dir(config)
    points = analysis.bimodality_sweep(config, jy_values)
    meta = _metadata(config, jy_values=jy_values)
    io.write_bimodality_csv(out / "bimodality.csv", points, meta)
    for p in points:
        io.write_histogram_csv(out / f"hist-jy{p.jy:g}.csv", p.histogram, meta)
        print(f"jy = {p.jy:g}: b = {p.b:.4f} ({p.sample_count} samples)")
    io.write_metadata_json(out / "bimodality.meta.json", meta)
    return 0


def cmd_spectrum(config: ExperimentConfig) -> int:
    out = _out_dir(config)
    geom = config.geometry()
    h = build_hamiltonian(geom, config.couplings())
    liou = build_liouvillian(h, config.couplings(), geom.n_sites)
    spectrum = full_spectrum(liou, gamma=config.gamma)
    meta = _metadata(config, gap=spectrum.gap)
    io.write_spectrum_csv(out / "spectrum.csv", spectrum, meta)
    io.write_metadata_json(out / "spectrum.meta.json", meta)
    print(f"gap = {spectrum.gap:.6g} (dim {liou.shape[0]})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xyzsim",
        description="dissipative XYZ Heisenberg lattice simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML experiment file")
        p.add_argument("--preset", help="packaged preset name (chain-1d, square-2d)")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config value (repeatable; flags win)")
        p.add_argument("--out", help="output directory (default: config or cwd)")

    common(sub.add_parser("evolve", help="average magnetization over time"))

    gap = sub.add_parser("gap", help="decay-rate sweep over jy")
    common(gap)
    gap.add_argument("--jy-values", required=True,
                     help="comma-separated jy list, units of gamma")

    traj = sub.add_parser("trajectories", help="individual stochastic records")
    common(traj)
    traj.add_argument("--per-site", action="store_true",
                      help="also record per-site <sigma^x_j> columns")

    bim = sub.add_parser("bimodality", help="bimodality-coefficient sweep over jy")
    common(bim)
    bim.add_argument("--jy-values", required=True,
                     help="comma-separated jy list, units of gamma")

    common(sub.add_parser("spectrum", help="exact Liouvillian spectrum and gap"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
        if args.command == "evolve":
            return cmd_evolve(config)
        if args.command == "gap":
            return cmd_gap(config, _parse_jy_values(args.jy_values))
        if args.command == "trajectories":
            return cmd_trajectories(config, args.per_site)
        if args.command == "bimodality":
            return cmd_bimodality(config, _parse_jy_values(args.jy_values))
        if args.command == "spectrum":
            return cmd_spectrum(config)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except XyzSimError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
