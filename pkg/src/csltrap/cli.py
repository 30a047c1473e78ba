"""Command-line front end.

Subcommands: ``simulate`` (trajectory CSV + metadata sidecar), ``analyze``
(PSD, temperature and damping reports from a trajectory file), ``bound``
(virtual experiment or replay to a bound report), ``exclude`` (exclusion
curve only) and ``reproduce`` (bundled benchmark tables).

Configs are TOML with SI values and unit-suffixed keys (``radius_m``,
``pressure_pa``); pressures are echoed in mbar in reports. Exit codes:
0 success, 1 config error, 2 numeric or fit error. Diagnostics go to stderr,
data to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__, io
from .errors import ConfigError, CslTrapError, DomainError, FitError, NumericError, SizeError
from .model import NoiseConfig, OscillatorMode, SphereParams, thermal_force_psd
from .csl import CslParams, csl_force_psd, diffusion_constant_sphere, exclusion_curve
from .dynamics import SimulationConfig, default_timestep, simulate
from .analysis import (
    effective_temperature,
    envelope_squared,
    excess_force_psd,
    fit_exponential_decay,
    fit_gaussian,
    normalized_energy_autocorrelation,
    psd_welch,
    temperature_uncertainty,
    welch_segment_length,
)
from .pipeline import (
    ReplayInputs,
    replay_bound,
    reproduce_benchmark_tables,
    run_virtual_experiment,
)


# --- schema validation -------------------------------------------------------

_NUMBER = (int, float)


def _check_leaf(value, types, where: str) -> None:
    if types is list:
        if not isinstance(value, list) or not all(
            isinstance(v, _NUMBER) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"field {where}: expected an array of numbers")
        return
    expected = _NUMBER if types is float else types
    if not isinstance(value, expected) or (
        isinstance(value, bool) and types is not bool
    ):
        raise ConfigError(f"field {where}: expected {getattr(types, '__name__', types)}")


def _validate_tree(data: dict, schema: dict, path: str = "") -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"section {path or '<root>'}: expected a table")
    for key in data:
        if key not in schema:
            raise ConfigError(f"unknown key {path}{key}")
    for key, (mode, spec) in schema.items():
        where = f"{path}{key}"
        if key not in data:
            if mode == "req":
                raise ConfigError(f"missing required key {where}")
            continue
        value = data[key]
        if isinstance(spec, dict):
            _validate_tree(value, spec, where + ".")
        elif isinstance(spec, tuple) and spec and isinstance(spec[0], dict):
            if not isinstance(value, list):
                raise ConfigError(f"field {where}: expected an array of tables")
            for idx, item in enumerate(value):
                _validate_tree(item, spec[0], f"{where}[{idx}].")
        else:
            _check_leaf(value, spec, where)


_SPHERE_SCHEMA = {
    "radius_m": ("req", float),
    "density_kg_m3": ("opt", float),
    "mass_kg": ("opt", float),
    "susceptibility": ("opt", float),
}
_MODE_SCHEMA = {
    "label": ("opt", str),
    "frequency_hz": ("req", float),
    "duffing_alpha_n_per_m3": ("opt", float),
}
_ENVIRONMENT_SCHEMA = {
    "temperature_k": ("req", float),
    "pressure_pa": ("opt", float),
    "gas_molar_mass_kg_per_mol": ("opt", float),
}
_RUN_SCHEMA = {
    "gamma_rad_per_s": ("opt", float),
    "gamma_over_2pi_hz": ("opt", float),
    "duration_s": ("req", float),
    "dt_s": ("opt", float),
    "seed": ("opt", int),
}
_NOISE_SCHEMA = {
    "thermal_from_environment": ("opt", bool),
    "extra_additive_psd_n2_per_hz": ("opt", float),
    "parametric_strength_sqrt_s": ("opt", float),
}
_CSL_SCHEMA = {
    "collapse_rate_per_s": ("req", float),
    "correlation_length_m": ("req", float),
}
_INITIAL_SCHEMA = {
    "x0_m": ("opt", list),
    "p0_kg_m_per_s": ("opt", list),
}
_BOUND_SCHEMA = {
    "r_c_grid_m": ("req", list),
    "confidence": ("opt", float),
}

SIMULATE_SCHEMA = {
    "seed": ("opt", int),
    "output_dir": ("opt", str),
    "sphere": ("req", _SPHERE_SCHEMA),
    "modes": ("req", (_MODE_SCHEMA,)),
    "environment": ("opt", _ENVIRONMENT_SCHEMA),
    "run": ("req", _RUN_SCHEMA),
    "noise": ("opt", _NOISE_SCHEMA),
    "csl_injection": ("opt", _CSL_SCHEMA),
    "coupling": ("opt", {"beta_n_per_m3": ("req", float)}),
    "initial_state": ("opt", _INITIAL_SCHEMA),
}

BOUND_SCHEMA = {
    "seed": ("opt", int),
    "output_dir": ("opt", str),
    "sphere": ("opt", _SPHERE_SCHEMA),
    "modes": ("opt", (_MODE_SCHEMA,)),
    "environment": ("opt", _ENVIRONMENT_SCHEMA),
    "noise": ("opt", _NOISE_SCHEMA),
    "csl_injection": ("opt", _CSL_SCHEMA),
    "coupling": ("opt", {"beta_n_per_m3": ("req", float)}),
    "experiment": (
        "opt",
        {
            "medium_vacuum": ("req", _RUN_SCHEMA),
            "high_vacuum": ("req", _RUN_SCHEMA),
            "envelope_bandwidth_hz": ("opt", float),
        },
    ),
    "replay": (
        "opt",
        {
            "mass_kg": ("req", float),
            "radius_m": ("req", float),
            "gamma_rad_per_s": ("opt", float),
            "gamma_over_2pi_hz": ("opt", float),
            "t_eff_hv_k": ("req", float),
            "sigma_hv_k": ("req", float),
            "t_eff_mv_k": ("req", float),
            "sigma_mv_k": ("req", float),
        },
    ),
    "bound": ("req", _BOUND_SCHEMA),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated declarative mirror of a simulation run plus surrounding
    analysis settings, grid, output directory and seed."""

    document: dict
    path: Path
    output_dir: Path
    seed: int | None

    @classmethod
    def load(cls, path: str | Path, schema: dict, out_override: str | None,
             seed_override: int | None) -> "RunConfig":
        path = Path(path)
        try:
            with path.open("rb") as handle:
                document = tomllib.load(handle)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        _validate_tree(document, schema)
        out = Path(out_override or document.get("output_dir", "."))
        seed = seed_override if seed_override is not None else document.get("seed")
        return cls(document=document, path=path, output_dir=out, seed=seed)


# --- config -> domain objects ------------------------------------------------


def _sphere_from(table: dict) -> SphereParams:
    radius = float(table["radius_m"])
    has_density = "density_kg_m3" in table
    has_mass = "mass_kg" in table
    chi = table.get("susceptibility")
    if has_density == has_mass:
        raise ConfigError("sphere: give exactly one of density_kg_m3 or mass_kg")
    if has_density:
        return SphereParams.from_radius_density(radius, float(table["density_kg_m3"]), chi)
    return SphereParams.from_radius_mass(radius, float(table["mass_kg"]), chi)


def _modes_from(tables: list[dict]) -> tuple[OscillatorMode, ...]:
    return tuple(
        OscillatorMode(
            frequency=float(t["frequency_hz"]),
            duffing_alpha=float(t.get("duffing_alpha_n_per_m3", 0.0)),
            label=t.get("label", f"mode{i + 1}"),
        )
        for i, t in enumerate(tables)
    )


def _gamma_from(table: dict, where: str) -> float:
    has_rad = "gamma_rad_per_s" in table
    has_hz = "gamma_over_2pi_hz" in table
    if has_rad == has_hz:
        raise ConfigError(f"{where}: give exactly one of gamma_rad_per_s or gamma_over_2pi_hz")
    if has_rad:
        return float(table["gamma_rad_per_s"])
    return 2.0 * math.pi * float(table["gamma_over_2pi_hz"])


def _csl_psd_from(document: dict, sphere: SphereParams) -> float:
    table = document.get("csl_injection")
    if not table:
        return 0.0
    params = CslParams(
        lam=float(table["collapse_rate_per_s"]),
        r_c=float(table["correlation_length_m"]),
    )
    return csl_force_psd(diffusion_constant_sphere(params, sphere))


def _noise_for(document: dict, sphere: SphereParams, gamma: float,
               n_modes: int) -> tuple[NoiseConfig, ...]:
    table = document.get("noise", {})
    env_table = document.get("environment")
    thermal = 0.0
    if table.get("thermal_from_environment", True):
        if env_table is None:
            raise ConfigError("noise.thermal_from_environment requires [environment]")
        thermal = thermal_force_psd(gamma, sphere.mass, float(env_table["temperature_k"]))
    return tuple(
        NoiseConfig(
            thermal_psd=thermal,
            csl_psd=_csl_psd_from(document, sphere),
            extra_additive_psd=float(table.get("extra_additive_psd_n2_per_hz", 0.0)),
            parametric_strength=float(table.get("parametric_strength_sqrt_s", 0.0)),
        )
        for _ in range(n_modes)
    )


def _sim_config_from(config: RunConfig, run_table: dict, where: str,
                     run_seed: int | None = None) -> SimulationConfig:
    document = config.document
    sphere = _sphere_from(document["sphere"])
    modes = _modes_from(document["modes"])
    gamma = _gamma_from(run_table, where)
    dt = float(run_table.get("dt_s") or default_timestep(modes))
    seed = run_seed if run_seed is not None else run_table.get("seed", config.seed)
    if seed is None:
        raise ConfigError(f"{where}: no seed given (config, [run] table, or --seed)")
    initial = document.get("initial_state", {})
    x0 = initial.get("x0_m", [0.0] * len(modes))
    p0 = initial.get("p0_kg_m_per_s", [0.0] * len(modes))
    if len(x0) != len(modes) or len(p0) != len(modes):
        raise ConfigError("initial_state arrays must have one entry per mode")
    beta = float(document.get("coupling", {}).get("beta_n_per_m3", 0.0))
    return SimulationConfig(
        sphere=sphere,
        modes=modes,
        gamma=gamma,
        noise=_noise_for(document, sphere, gamma, len(modes)),
        duration=float(run_table["duration_s"]),
        dt=dt,
        seed=int(seed),
        coupling_beta=beta,
        initial_state=tuple(zip(map(float, x0), map(float, p0))),
    )


def _parse_grid(spec: str) -> tuple[float, ...]:
    """Either comma-separated values or ``start:stop:count`` (log-spaced)."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError("grid must be 'start:stop:count' or comma-separated values")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if start <= 0 or stop <= start or count < 2:
            raise ConfigError("grid must be positive, increasing, with count >= 2")
        return tuple(np.logspace(math.log10(start), math.log10(stop), count))
    return tuple(float(v) for v in spec.split(","))


def _ensure_outdir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


# --- subcommands --------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    config = RunConfig.load(args.config, SIMULATE_SCHEMA, args.out, args.seed)
    sim = _sim_config_from(config, config.document["run"], "run")
    traj = simulate(sim)
    outdir = _ensure_outdir(config.output_dir)
    path = io.save_trajectory(traj, outdir / "trajectory.csv", sim.to_dict())
    print(path)
    print(io.sidecar_path(path))
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    traj, meta = io.load_trajectory(args.trajectory)
    config = meta.get("config")
    if not config:
        raise ConfigError("trajectory sidecar carries no config; cannot analyze")
    mass = float(config["sphere"]["mass_kg"])
    gamma_in = float(config["gamma_rad_per_s"])
    outdir = _ensure_outdir(Path(args.out or "."))
    results = []
    for index, mode_info in enumerate(config["modes"]):
        mode = OscillatorMode(
            frequency=float(mode_info["frequency_hz"]),
            duffing_alpha=float(mode_info.get("duffing_alpha_n_per_m3", 0.0)),
            label=mode_info.get("label", f"mode{index + 1}"),
        )
        samples = traj.steady(index)
        segment = welch_segment_length(gamma_in, traj.dt, samples.size)
        psd = psd_welch(traj, segment_length=segment, mode=index)
        io.save_psd(psd, outdir / f"psd_{mode.label}.csv", traj.config_digest)
        gauss = fit_gaussian(samples)
        temp = effective_temperature(gauss.sigma, mode, mass)
        bandwidth = args.bandwidth or mode.frequency / 10.0
        env = envelope_squared(traj, mode.frequency, bandwidth, mode=index)
        autocorr = normalized_energy_autocorrelation(
            env, (env.values.size // 10) * env.dt
        )
        io.save_autocorrelation(
            autocorr, outdir / f"autocorr_{mode.label}.csv", traj.config_digest
        )
        damping = fit_exponential_decay(autocorr)
        t_mea = samples.size * traj.dt
        sigma_t = temperature_uncertainty(temp.t_eff, damping.gamma, t_mea)
        results.append(
            {
                "mode": mode.label,
                "sigma_m": gauss.sigma,
                "sigma_stderr_m": gauss.sigma_stderr,
                "t_eff_k": temp.t_eff,
                "sigma_t_eff_k": sigma_t,
                "t_mea_s": t_mea,
                "gamma_fit_rad_per_s": damping.gamma,
                "gamma_fit_over_2pi_hz": damping.gamma / (2.0 * math.pi),
                "gamma_fit_residual": damping.fit_residual,
                "psd_file": f"psd_{mode.label}.csv",
                "autocorr_file": f"autocorr_{mode.label}.csv",
            }
        )
    payload = {
        "tool": "csltrap",
        "version": __version__,
        "digest": traj.config_digest,
        "modes": results,
    }
    io.save_json_report(payload, outdir / "analysis.json")
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        for entry in results:
            print(
                f"{entry['mode']}: T_eff = {entry['t_eff_k']:.4g} K "
                f"+/- {entry['sigma_t_eff_k']:.2g} K, "
                f"gamma/2pi = {entry['gamma_fit_over_2pi_hz']:.4g} Hz"
            )
        print(outdir / "analysis.json")
    return 0


def cmd_bound(args: argparse.Namespace) -> int:
    config = RunConfig.load(args.config, BOUND_SCHEMA, args.out, args.seed)
    document = config.document
    bound_table = document["bound"]
    grid = tuple(float(v) for v in bound_table["r_c_grid_m"])
    confidence = float(bound_table.get("confidence", 0.95))
    has_replay = "replay" in document
    has_experiment = "experiment" in document
    if has_replay == has_experiment:
        raise ConfigError("bound config needs exactly one of [replay] or [experiment]")
    if has_replay:
        table = document["replay"]
        inputs = ReplayInputs(
            sphere=SphereParams.from_radius_mass(
                float(table["radius_m"]), float(table["mass_kg"])
            ),
            gamma=_gamma_from(table, "replay"),
            t_eff_hv=float(table["t_eff_hv_k"]),
            sigma_hv=float(table["sigma_hv_k"]),
            t_eff_mv=float(table["t_eff_mv_k"]),
            sigma_mv=float(table["sigma_mv_k"]),
            r_c_grid=grid,
            confidence=confidence,
        )
        report = replay_bound(inputs)
    else:
        experiment = document["experiment"]
        base_seed = config.seed if config.seed is not None else 0
        mv = _sim_config_from(
            config, experiment["medium_vacuum"], "experiment.medium_vacuum",
            run_seed=experiment["medium_vacuum"].get("seed", base_seed + 1),
        )
        hv = _sim_config_from(
            config, experiment["high_vacuum"], "experiment.high_vacuum",
            run_seed=experiment["high_vacuum"].get("seed", base_seed),
        )
        report = run_virtual_experiment(
            mv, hv, grid, confidence,
            envelope_bandwidth=experiment.get("envelope_bandwidth_hz"),
        )
    outdir = _ensure_outdir(config.output_dir)
    io.save_json_report(report.to_dict(), outdir / "bound_report.json")
    if report.curve is not None:
        io.save_exclusion_curve(report.curve, outdir / "exclusion.csv", report.inputs_digest)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(
            f"delta_t = {report.delta_t:.4g} K, sigma_delta_t = "
            f"{report.sigma_delta_t:.4g} K, sqrt(excess bound) = "
            f"{math.sqrt(report.excess_psd_bound):.4g} N/sqrt(Hz)"
        )
        if report.flags:
            print("flags: " + ", ".join(report.flags))
        if report.curve is not None:
            for r_c, lam in report.curve.points:
                print(f"  r_c = {r_c:.3e} m  ->  lambda <= {lam:.3e} s^-1"
                      f"  (log10 = {math.log10(lam):.2f})")
        print(outdir / "bound_report.json")
    return 0


def cmd_exclude(args: argparse.Namespace) -> int:
    if (args.excess_psd is None) == (args.sigma_delta_t is None):
        raise ConfigError("give exactly one of --excess-psd or --sigma-delta-t")
    if args.density is not None:
        sphere = SphereParams.from_radius_density(args.radius, args.density)
    elif args.mass is not None:
        sphere = SphereParams.from_radius_mass(args.radius, args.mass)
    else:
        raise ConfigError("give one of --density or --mass")
    if args.excess_psd is not None:
        excess = args.excess_psd
    else:
        if args.gamma_over_2pi is None:
            raise ConfigError("--sigma-delta-t requires --gamma-over-2pi")
        gamma = 2.0 * math.pi * args.gamma_over_2pi
        excess = excess_force_psd(args.sigma_delta_t, sphere.mass, gamma)
    curve = exclusion_curve(excess, sphere, _parse_grid(args.grid), args.confidence)
    outdir = _ensure_outdir(Path(args.out or "."))
    path = io.save_exclusion_curve(curve, outdir / "exclusion.csv")
    if args.json:
        print(json.dumps(
            {
                "confidence_level": curve.confidence_level,
                "points": [
                    {"r_c_m": r, "lambda_upper_per_s": lam} for r, lam in curve.points
                ],
            },
            indent=2,
        ))
    else:
        for r_c, lam in curve.points:
            print(f"r_c = {r_c:.3e} m  ->  lambda <= {lam:.3e} s^-1")
        print(path)
    return 0


def cmd_reproduce(args: argparse.Namespace) -> int:
    table = {"1": "table1", "2": "table2", "3": "table3-replay",
             "projection": "projection"}[args.table]
    kwargs = {"full": args.full}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    report = reproduce_benchmark_tables(table, **kwargs)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.render())
    if args.out:
        outdir = _ensure_outdir(Path(args.out))
        io.save_json_report(report.to_dict(), outdir / f"{table}_report.json")
    return 0


# --- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csltrap",
        description="Virtual levitated-oscillator experiment and CSL bound toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"csltrap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate a configured run")
    p_sim.add_argument("config")
    p_sim.add_argument("--out", help="output directory (overrides config)")
    p_sim.add_argument("--seed", type=int, help="seed override for sweep scripting")
    p_sim.set_defaults(func=cmd_simulate)

    p_ana = sub.add_parser("analyze", help="PSD, temperature and damping reports")
    p_ana.add_argument("trajectory", help="trajectory CSV written by 'simulate'")
    p_ana.add_argument("--bandwidth", type=float, help="envelope bandwidth, Hz")
    p_ana.add_argument("--out", help="output directory")
    p_ana.add_argument("--json", action="store_true")
    p_ana.set_defaults(func=cmd_analyze)

    p_bound = sub.add_parser("bound", help="bound report from experiment or replay inputs")
    p_bound.add_argument("config")
    p_bound.add_argument("--out", help="output directory (overrides config)")
    p_bound.add_argument("--seed", type=int)
    p_bound.add_argument("--json", action="store_true")
    p_bound.set_defaults(func=cmd_bound)

    p_exc = sub.add_parser("exclude", help="exclusion curve from an excess budget")
    p_exc.add_argument("--grid", required=True,
                       help="r_c grid: 'start:stop:count' (log) or comma list, m")
    p_exc.add_argument("--excess-psd", type=float, help="excess force PSD, N^2/Hz")
    p_exc.add_argument("--sigma-delta-t", type=float, help="temperature budget, K")
    p_exc.add_argument("--gamma-over-2pi", type=float, help="damping rate, Hz")
    p_exc.add_argument("--radius", type=float, required=True, help="sphere radius, m")
    p_exc.add_argument("--density", type=float, help="sphere density, kg/m^3")
    p_exc.add_argument("--mass", type=float, help="sphere mass, kg")
    p_exc.add_argument("--confidence", type=float, default=0.95)
    p_exc.add_argument("--out", help="output directory")
    p_exc.add_argument("--json", action="store_true")
    p_exc.set_defaults(func=cmd_exclude)

    p_rep = sub.add_parser("reproduce", help="recompute a bundled benchmark table")
    p_rep.add_argument("--table", required=True, choices=["1", "2", "3", "projection"])
    p_rep.add_argument("--full", action="store_true",
                       help="full-fidelity damping benchmark (minutes)")
    p_rep.add_argument("--seed", type=int)
    p_rep.add_argument("--out", help="also write the report JSON here")
    p_rep.add_argument("--json", action="store_true")
    p_rep.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, SizeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, FitError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except CslTrapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
