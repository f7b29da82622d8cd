"""Command-line entry point.

Commands: validate, run, rem, montecarlo, sweep. Exit codes: 0 success,
1 invalid scenario, 2 I/O failure. Every producing command writes a
run-manifest JSON embedding the resolved configuration; a manifest file
can be passed back in place of the scenario to reproduce the run.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .channel import combine_stats, gain_lowerbound, sample_exact_gain
from .config import (
    ScenarioConfig,
    ScenarioFormatError,
    apply_overrides,
    parse_scenario,
    to_document,
    validate_scenario,
)
from .engine import Direction, EvalMode, build_exact_snapshot, evaluate_gu, run as run_engine, step
from .output import (
    aggregate_throughput,
    write_kpi_csv,
    write_manifest,
    write_rem_csv,
    write_sweep_csv,
)
from .rem import generate_rem

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


def _parse_set(values: list[str]) -> dict:
    overrides = {}
    for item in values:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def _load_document(path: str) -> tuple[dict, dict]:
    """Raw scenario document plus any manifest-recorded arguments."""
    text = Path(path).read_text()
    doc = json.loads(text)
    if isinstance(doc, dict) and "config" in doc and "command" in doc:
        return doc["config"], doc.get("args", {})
    return doc, {}


def _build_config(path: str, overrides: dict) -> tuple[ScenarioConfig, dict, dict]:
    doc, manifest_args = _load_document(path)
    if overrides:
        doc = apply_overrides(doc, overrides)
    config = parse_scenario(doc)
    issues = validate_scenario(config)
    if issues:
        raise ScenarioFormatError(issues)
    return config, to_document(config), manifest_args


def _manifest(command: str, config_doc: dict, args: dict) -> dict:
    return {"command": command, "args": args, "config": config_doc}


def _fail_invalid(exc: Exception) -> int:
    if isinstance(exc, ScenarioFormatError):
        for issue in exc.issues:
            print(f"error: {issue}", file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INVALID


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        _build_config(args.scenario, _parse_set(args.set))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ScenarioFormatError, ValueError, json.JSONDecodeError) as exc:
        return _fail_invalid(exc)
    print(f"{args.scenario}: ok")
    return EXIT_OK


def _effective(cli_value, manifest_args: dict, key: str, default):
    if cli_value is not None:
        return cli_value
    if key in manifest_args:
        return manifest_args[key]
    return default


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        overrides = _parse_set(args.set)
        if args.seed is not None:
            overrides["sim.seed"] = args.seed
        config, doc, manifest_args = _build_config(args.scenario, overrides)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ScenarioFormatError, ValueError, json.JSONDecodeError) as exc:
        return _fail_invalid(exc)
    mode = EvalMode(_effective(args.mode, manifest_args, "mode", EvalMode.BOUND.value).upper())
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        records = run_engine(config, mode)
        kpi_path = write_kpi_csv(records, out / "kpi.csv")
        write_manifest(
            _manifest("run", doc, {"mode": mode.value}),
            out / "manifest.json",
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {kpi_path} ({len(records)} records)")
    return EXIT_OK


def _cmd_rem(args: argparse.Namespace) -> int:
    try:
        overrides = _parse_set(args.set)
        if args.seed is not None:
            overrides["sim.seed"] = args.seed
        config, doc, manifest_args = _build_config(args.scenario, overrides)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ScenarioFormatError, ValueError, json.JSONDecodeError) as exc:
        return _fail_invalid(exc)
    t = float(_effective(args.time, manifest_args, "time", 0.0))
    z = _effective(args.z, manifest_args, "z", None)
    res = _effective(args.resolution, manifest_args, "resolution", None)
    mode_raw = _effective(args.mode, manifest_args, "mode", None)
    out = Path(args.out)
    try:
        grid = generate_rem(
            config,
            t,
            z_m=None if z is None else float(z),
            resolution=None if res is None else float(res),
            mode=None if mode_raw is None else type(config.rem.mode)(mode_raw.upper()),
        )
    except ValueError as exc:
        return _fail_invalid(exc)
    try:
        out.mkdir(parents=True, exist_ok=True)
        rem_path = write_rem_csv(grid, out / "rem.csv")
        write_manifest(
            _manifest(
                "rem",
                doc,
                {
                    "time": t,
                    "z": grid.z_m,
                    "resolution": grid.resolution_samples_per_m2,
                    "mode": config.rem.mode.value if mode_raw is None else mode_raw.upper(),
                },
            ),
            out / "manifest.json",
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {rem_path} ({grid.values.shape[0]}x{grid.values.shape[1]} samples)")
    return EXIT_OK


def _cmd_montecarlo(args: argparse.Namespace) -> int:
    try:
        overrides = _parse_set(args.set)
        if args.seed is not None:
            overrides["sim.seed"] = args.seed
        config, doc, manifest_args = _build_config(args.scenario, overrides)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ScenarioFormatError, ValueError, json.JSONDecodeError) as exc:
        return _fail_invalid(exc)
    t = float(_effective(args.time, manifest_args, "time", 0.0))
    n = int(_effective(args.samples, manifest_args, "samples", 100_000))
    gu_id = _effective(args.gu, manifest_args, "gu", None)
    if gu_id is None:
        gus = config.ground_users
        if not gus:
            return _fail_invalid(ValueError("scenario has no ground users"))
        gu_id = gus[0].id

    from scipy import stats as sstats

    state = step(config, t)
    from .engine import gather_terms

    gu = config.node(gu_id)
    direct, cascades = gather_terms(
        config, state, gu.position, only_gu=gu_id, direct_los=state.direct_los[gu_id]
    )
    cstats = combine_stats(cascades, direct, mode=config.channel.multipath_mode)
    bound = gain_lowerbound(cstats, config.channel.outage_eps)
    snapshot = build_exact_snapshot(config, state, gu_id)
    rng = np.random.default_rng(config.sim.seed)
    samples = np.abs(sample_exact_gain(rng, snapshot, n))

    mean_power = float(np.mean(samples**2)) if n else 0.0
    if cstats.two_sigma_sq > 0.0 and n:
        sigma = math.sqrt(cstats.two_sigma_sq / 2.0)
        b = math.sqrt(cstats.nu_sq) / sigma
        ks = float(sstats.kstest(samples, sstats.rice(b, scale=sigma).cdf).statistic)
    else:
        ks = float(np.max(np.abs(samples - math.sqrt(cstats.nu_sq)))) if n else 0.0
    outage = float(np.mean(samples**2 < bound.gamma_eps)) if n else 0.0

    report = {
        "gu_id": gu_id,
        "time_s": t,
        "n_samples": n,
        "seed": config.sim.seed,
        "empirical": {
            "mean_power": mean_power,
            "ks_distance": ks,
            "outage_at_eps": outage,
        },
        "closed_form": {
            "nu_sq": cstats.nu_sq,
            "two_sigma_sq": cstats.two_sigma_sq,
            "kappa": cstats.kappa if math.isfinite(cstats.kappa) else "inf",
            "omega": cstats.omega_pow,
            "gain_lowerbound": bound.gamma_eps,
            "outage_eps": config.channel.outage_eps,
        },
    }
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "montecarlo.json").write_text(json.dumps(report, indent=2) + "\n")
        write_manifest(
            _manifest("montecarlo", doc, {"time": t, "samples": n, "gu": gu_id}),
            out / "manifest.json",
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps(report["empirical"]))
    return EXIT_OK


def _sweep_paths(param: str, config: ScenarioConfig) -> list[str]:
    """Expand a sweep parameter into one or more dotted override paths.

    The alias N resizes every surface (rows = columns = value) and grows
    every patch to the full surface.
    """
    if param == "N":
        paths = []
        for di in range(len(config.drones)):
            paths.append(f"drones.{di}.irs.Rows")
            paths.append(f"drones.{di}.irs.Columns")
        return paths
    return param.split("+")


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        overrides = _parse_set(args.set)
        config, doc, _ = _build_config(args.scenario, overrides)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ScenarioFormatError, ValueError, json.JSONDecodeError) as exc:
        return _fail_invalid(exc)
    values = [json.loads(v) for v in args.values.split(",")] if args.values else []
    if not values:
        return _fail_invalid(ValueError("sweep needs a nonempty --values list"))
    paths = _sweep_paths(args.param, config)
    rows = []
    for value in values:
        point_doc = json.loads(json.dumps(doc))
        point_overrides = {p: value for p in paths}
        if args.param == "N":
            for di, drone in enumerate(point_doc.get("drones", [])):
                for conf in drone["irs"]["configurations"]:
                    for patch in conf["patches"]:
                        patch["Size"] = [0, int(value) - 1, 0, int(value) - 1]
        apply_overrides(point_doc, point_overrides)
        try:
            point_config = parse_scenario(point_doc)
        except ScenarioFormatError as exc:
            return _fail_invalid(exc)
        records = run_engine(point_config, EvalMode.BOUND)
        by_key: dict[tuple[str, str], list] = {}
        for r in records:
            by_key.setdefault((r.gu_id, r.direction.value), []).append(r)
        for (gu_id, direction), recs in sorted(by_key.items()):
            finite = [r.sinr_db for r in recs if math.isfinite(r.sinr_db)]
            rows.append(
                {
                    "value": value,
                    "gu_id": gu_id,
                    "direction": direction,
                    "mean_sinr_db": sum(finite) / len(finite) if finite else -math.inf,
                    "mean_rate_bps": sum(r.rate_bps for r in recs) / len(recs),
                }
            )
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        sweep_path = write_sweep_csv(rows, out / "sweep.csv")
        write_manifest(
            _manifest("sweep", doc, {"param": args.param, "values": values}),
            out / "manifest.json",
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {sweep_path} ({len(rows)} rows)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irssim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
        p.add_argument("scenario", help="scenario JSON (or a previous run manifest)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path config override, repeatable")
        if out_required:
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument("--seed", type=int, default=None, help="override sim.seed")

    p = sub.add_parser("validate", help="parse and cross-check a scenario")
    common(p, out_required=False)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="full mission KPI sweep")
    common(p)
    p.add_argument("--mode", choices=["bound", "realized"], default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("rem", help="radio environment map at one instant")
    common(p)
    p.add_argument("--time", type=float, default=None)
    p.add_argument("--z", type=float, default=None)
    p.add_argument("--resolution", type=float, default=None, help="samples per square meter")
    p.add_argument("--mode", choices=["bound", "realized"], default=None)
    p.set_defaults(func=_cmd_rem)

    p = sub.add_parser("montecarlo", help="exact-sampler validation report")
    common(p)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--time", type=float, default=None)
    p.add_argument("--gu", default=None, help="ground user to evaluate (default: first)")
    p.set_defaults(func=_cmd_montecarlo)

    p = sub.add_parser("sweep", help="rerun the scenario across parameter values")
    common(p)
    p.add_argument("--param", required=True,
                   help="dotted path, '+'-joined paths, or the alias N (surface size)")
    p.add_argument("--values", required=True, help="comma-separated JSON values")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        return _fail_invalid(exc)


if __name__ == "__main__":
    sys.exit(main())
