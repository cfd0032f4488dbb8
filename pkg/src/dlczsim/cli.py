"""Command-line entry points tying the modules into reproducible runs.

Exit codes: 0 success, 2 configuration error, 3 estimation error.
"""

import argparse
import json
import math
from pathlib import Path
import sys

import numpy as np

from . import __version__, analysis, decoherence, geometry, link as link_mod, scenarios
from .config import load_config
from .errors import ConfigError, DomainError, EstimationError
from .manifest import RunManifest
from .states import matrix_to_pairs
from .tables import CoincidenceTable
from .tomography import TomographyCounts, reconstruct


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlczsim",
        description=(
            "Monte-Carlo simulator and estimators for a multimode "
            "spin-wave/photon entanglement interface"
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="PATH", help="TOML configuration file")
    parser.add_argument("--seed", type=int, metavar="U64", help="master seed override")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--workers", type=int, default=1, metavar="N")
    parser.add_argument(
        "--expected-counts",
        action="store_true",
        help="replace sampling with noiseless expected counts",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("geometry", help="mode angles, spin wavelengths, BTD matrices")
    cmd.add_argument("--grid", metavar="ROWSxCOLS", help="angle table for a scale-up array")

    cmd = commands.add_parser("lifetimes", help="per-channel lifetime budget")
    cmd.add_argument("--coherence", choices=("mfi", "mfs"), default=None)

    cmd = commands.add_parser("simulate", help="run a bundled or TOML-defined scenario")
    cmd.add_argument("scenario", help="bundled name or path to a scenario TOML")
    cmd.add_argument("--trials", type=int, default=None, help="override per-point trial count")
    cmd.add_argument("--log-trials", action="store_true", help="write a JSONL trial log")

    cmd = commands.add_parser("analyze", help="run estimators over count tables")
    cmd.add_argument("--estimator", required=True,
                     choices=("correlation", "chsh", "retrieval", "gain"))
    cmd.add_argument("--table", nargs="+", required=True, metavar="CSV")
    cmd.add_argument("--schedule", nargs="+", default=None, metavar="JSON")
    cmd.add_argument("--reference", metavar="CSV", help="single-mode table without the switch")
    cmd.add_argument("--reference-schedule", metavar="JSON")
    cmd.add_argument("--theta-s-deg", type=float, default=None)
    cmd.add_argument("--theta-t-deg", type=float, default=None)
    cmd.add_argument("--angles-deg", nargs=4, type=float, default=None,
                     metavar=("S", "S2", "T", "T2"))
    cmd.add_argument("--storage-time-us", type=float, default=None)
    cmd.add_argument("--eta-t", type=float, default=None)
    cmd.add_argument("--eta-sw", type=float, default=None)

    cmd = commands.add_parser("tomography", help="reconstruct a state from tomography counts")
    cmd.add_argument("--counts", required=True, metavar="CSV")

    cmd = commands.add_parser("link", help="elementary-link report and simulation")
    cmd.add_argument("--cycles", type=int, default=None, help="also run a cycle simulation")
    cmd.add_argument("--log-cycles", action="store_true",
                     help="write a per-cycle JSONL log next to the report (needs --out)")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        app = load_config(args.config)
        handler = _HANDLERS[args.command]
        handler(args, app)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit_json(args, name, payload) -> None:
    out = _out_dir(args)
    if out is not None:
        with open(out / name, "w") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")


def _cmd_geometry(args, app):
    geom = app.geometry
    rows = []
    print(
        f"array: {geom.channel_count} channels, pitch {geom.beam_separation_m * 1e3:g} mm, "
        f"focal length {geom.focal_length_m:g} m"
    )
    print("channel  angle_deg  spin_wavelength_m")
    for channel in range(1, geom.channel_count + 1):
        angle = geometry.mode_angle(channel, geom)
        wavelength = geometry.spin_wavelength(angle, geom.write_wavelength_m)
        rows.append({"channel": channel, "angle_deg": math.degrees(angle),
                     "spin_wavelength_m": wavelength})
        print(f"{channel:7d}  {math.degrees(angle):9.4f}  {wavelength:.4e}")

    shrink = geometry.btd_matrix(app.btd_focal_m, app.shrink_factor, "shrink")
    expand = geometry.btd_matrix(app.btd_focal_m, app.shrink_factor, "expand")
    print(f"BTD shrink (F={app.shrink_factor:g}, f_L={app.btd_focal_m:g} m): "
          f"{shrink.tolist()}")
    print(f"BTD expand (F={app.shrink_factor:g}, f_L={app.btd_focal_m:g} m): "
          f"{expand.tolist()}")

    payload = {
        "channels": rows,
        "btd_shrink": shrink.tolist(),
        "btd_expand": expand.tolist(),
    }

    if args.grid:
        try:
            n_rows, n_cols = (int(v) for v in args.grid.lower().split("x"))
        except ValueError:
            raise ConfigError(f"--grid expects ROWSxCOLS, got {args.grid!r}") from None
        angles = geometry.grid_mode_angles(
            n_rows, n_cols, geom.beam_separation_m, geom.focal_length_m
        )
        print(f"grid {n_rows}x{n_cols}: {angles.size} beams")
        print("row  col  angle_deg")
        grid_rows = []
        for r in range(n_rows):
            for c in range(n_cols):
                angle_deg = math.degrees(angles[r, c])
                grid_rows.append({"row": r + 1, "col": c + 1, "angle_deg": angle_deg})
                print(f"{r + 1:3d}  {c + 1:3d}  {angle_deg:9.4f}")
        payload["grid"] = grid_rows

    _emit_json(args, "geometry.json", payload)


def _cmd_lifetimes(args, app):
    coherence = app.coherence
    if args.coherence == "mfi":
        coherence = decoherence.MFI_COHERENCE
    elif args.coherence == "mfs":
        coherence = decoherence.MFS_COHERENCE
    angles = geometry.mode_angles(app.geometry)
    budget = decoherence.lifetime_budget(
        angles, app.geometry.write_wavelength_m, app.ensemble, coherence
    )
    fitted = app.node.lifetimes_s

    def fmt(seconds):
        return "unbounded" if math.isinf(seconds) else f"{seconds * 1e6:10.1f}"

    print(f"coherence: m_a={coherence.m_a}, m_b={coherence.m_b}")
    print("channel  angle_deg  motional_us  gradient_us  combined_us  fitted_us  model/fitted")
    rows = []
    for entry, tau_fit in zip(budget, fitted):
        ratio = (
            float("nan") if math.isinf(entry.combined_s) else entry.combined_s / tau_fit
        )
        print(
            f"{entry.channel:7d}  {math.degrees(entry.angle_rad):9.4f}  "
            f"{fmt(entry.motional_s)}  {fmt(entry.gradient_s)}  {fmt(entry.combined_s)}  "
            f"{tau_fit * 1e6:9.1f}  {ratio:12.3f}"
        )
        rows.append(
            {
                "channel": entry.channel,
                "angle_deg": math.degrees(entry.angle_rad),
                "motional_s": entry.motional_s,
                "gradient_s": None if math.isinf(entry.gradient_s) else entry.gradient_s,
                "combined_s": None if math.isinf(entry.combined_s) else entry.combined_s,
                "fitted_s": tau_fit,
            }
        )
    average = decoherence.average_lifetime(fitted)
    print(f"fitted-lifetime average: {average * 1e6:.1f} us")
    _emit_json(args, "lifetimes.json", {"channels": rows, "fitted_average_s": average})


def _cmd_simulate(args, app):
    out = _out_dir(args) or Path("runs") / Path(args.scenario).stem
    if args.log_trials and args.expected_counts:
        raise ConfigError("--log-trials and --expected-counts are mutually exclusive")
    if args.scenario.endswith(".toml"):
        result = scenarios.run_scenario_file(
            args.scenario, app, out, master_seed=args.seed, workers=args.workers,
            expected_counts=args.expected_counts, log_trials=args.log_trials,
        )
    else:
        if args.log_trials:
            raise ConfigError(
                "--log-trials is only supported for scenario files; bundled "
                "sweeps are too large to log per trial"
            )
        result = scenarios.run_scenario(
            args.scenario, app, out, master_seed=args.seed, workers=args.workers,
            expected_counts=args.expected_counts, trials=args.trials,
        )
    print(f"scenario {result.name}: wrote {len(result.files)} files to {result.out_dir}")
    for line in json.dumps(result.report, indent=2, sort_keys=True).splitlines():
        print(line)


def _load_table(path, schedule_path):
    if schedule_path is None:
        candidate = Path(path).with_suffix(".json")
        schedule_path = candidate if candidate.exists() else None
    return CoincidenceTable.read_csv(path, schedule_path)


def _cmd_analyze(args, app):
    storage = None if args.storage_time_us is None else args.storage_time_us * 1e-6
    schedules = args.schedule or [None] * len(args.table)
    if len(schedules) != len(args.table):
        raise ConfigError("--schedule must be given once per --table")

    if args.estimator == "gain":
        tables = {}
        for path, schedule_path in zip(args.table, schedules):
            table = _load_table(path, schedule_path)
            tables[table.channel_count] = table
        reference = None
        if args.reference:
            reference = _load_table(args.reference, args.reference_schedule)
        gain = analysis.multiplex_gain(
            tables, eta_sw=args.eta_sw if args.eta_sw is not None else app.node.eta_sw,
            reference_no_osn=reference,
        )
        payload = {
            "estimator": "gain",
            "rows": [
                {"m": r.mode_count, "P_S": r.p_stokes, "P_ST": r.p_coincidence}
                for r in gain.rows
            ],
            "stokes_gain": gain.stokes_gain,
            "coincidence_gain": gain.coincidence_gain,
            "osn_adjusted_gain": gain.osn_adjusted_gain,
            "analytic_osn_gain": gain.analytic_osn_gain,
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        _emit_json(args, "analysis.json", payload)
        return

    table = _load_table(args.table[0], schedules[0])

    if args.estimator == "correlation":
        if args.theta_s_deg is None or args.theta_t_deg is None:
            raise ConfigError("correlation needs --theta-s-deg and --theta-t-deg")
        estimate = analysis.correlation(
            table, math.radians(args.theta_s_deg), math.radians(args.theta_t_deg),
            storage_time_s=storage,
        )
        settings = {"theta_s_deg": args.theta_s_deg, "theta_t_deg": args.theta_t_deg}
    elif args.estimator == "chsh":
        angles = analysis.CANONICAL_CHSH_ANGLES
        if args.angles_deg is not None:
            angles = tuple(math.radians(a) for a in args.angles_deg)
        estimate = analysis.chsh(table, angles=angles, storage_time_s=storage)
        settings = {"angles_deg": [math.degrees(a) for a in angles]}
    else:  # retrieval
        eta_t = args.eta_t if args.eta_t is not None else app.node.eta_t
        eta_sw = args.eta_sw if args.eta_sw is not None else app.node.eta_sw
        result = analysis.retrieval_efficiency_estimate(
            table, eta_t=eta_t, eta_sw=eta_sw, storage_time_s=storage
        )
        payload = {
            "estimator": "retrieval",
            "value": result.raw.value,
            "sigma": result.raw.sigma,
            "switch_corrected": {
                "value": result.switch_corrected.value,
                "sigma": result.switch_corrected.sigma,
            },
            "settings": {"eta_t": eta_t, "eta_sw": eta_sw, "storage_time_s": storage},
            "n_trials": _total_trials(table),
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        _emit_json(args, "analysis.json", payload)
        return

    payload = {
        "estimator": args.estimator,
        "value": estimate.value,
        "sigma": estimate.sigma,
        "settings": settings,
        "n_trials": _total_trials(table),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    _emit_json(args, "analysis.json", payload)


def _total_trials(table) -> float:
    return sum(block.n_trials for block in table.blocks.values())


def _cmd_tomography(args, app):
    counts = TomographyCounts.read_csv(args.counts)
    result = reconstruct(counts)
    payload = {
        "estimator": "tomography",
        "fidelity": result.fidelity_vs_ideal.value,
        "sigma": result.fidelity_vs_ideal.sigma,
        "rho": matrix_to_pairs(result.rho),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    _emit_json(args, "reconstruction.json", payload)


def _cmd_link(args, app):
    cfg = app.link
    feasibility = link_mod.heralded_feasible(cfg)
    required, rate = link_mod.deterministic_rate(cfg)
    payload = {
        "L0_m": cfg.separation_m,
        "dt_s": link_mod.attempt_interval(cfg),
        "feasible": feasibility.feasible,
        "margin": None if math.isinf(feasibility.margin) else feasibility.margin,
        "deterministic": {
            "multiplexed_qubits": cfg.multiplexed_qubits,
            "required_storage_s": required,
            "rate_hz": rate,
        },
    }
    if args.cycles:
        seed = args.seed if args.seed is not None else 0
        out = _out_dir(args)
        if args.log_cycles and out is None:
            raise ConfigError("--log-cycles needs --out to place the JSONL file")
        if out is not None:
            outputs = ["link_report.json"]
            if args.log_cycles:
                outputs.append("link_cycles.jsonl")
            manifest = RunManifest(
                scenario={
                    "scenario": "link",
                    "master_seed": seed,
                    "cycles": args.cycles,
                    "config": app.describe(),
                },
                outputs=outputs,
            )
            manifest.write(out / "manifest.json")
        if args.log_cycles:
            with open(out / "link_cycles.jsonl", "w") as sink:
                report = link_mod.simulate_link(
                    cfg, app.node, n_cycles=args.cycles, seed=seed, log_sink=sink
                )
        else:
            report = link_mod.simulate_link(cfg, app.node, n_cycles=args.cycles, seed=seed)
        payload["simulation"] = report.to_payload()
    print(json.dumps(payload, indent=2, sort_keys=True))
    _emit_json(args, "link_report.json", payload)


_HANDLERS = {
    "geometry": _cmd_geometry,
    "lifetimes": _cmd_lifetimes,
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "tomography": _cmd_tomography,
    "link": _cmd_link,
}


if __name__ == "__main__":
    sys.exit(main())
