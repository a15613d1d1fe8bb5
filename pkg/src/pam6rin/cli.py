"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import KEYS, ConfigError, load_config, parse_override
from .constellation import BUILTIN, serialize
from .labeling import builtin_labelings, construct_steps_1_2, edge_distances, neighbor_graph, search_step3
from .model import oma_to_eta

log = logging.getLogger("pam6rin")


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    keys_help = "\n".join(f"  {k:<22} {v.help}" for k, v in KEYS.items())
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--output", type=Path, default=Path("."), help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("-v", "--verbose", action="store_true")
    for key, spec in KEYS.items():
        common.add_argument(_flag(key), dest=f"cfg_{key}", metavar="VALUE", help=spec.help)

    p = argparse.ArgumentParser(
        prog="pam6rin",
        description="PAM-6 / QAM-32 design and simulation for RIN-limited IM-DD links.",
        epilog="config keys (file `key = value` or --flag VALUE; flag > file > default):\n" + keys_help,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    fmt = argparse.RawDescriptionHelpFormatter
    epilog = "config keys:\n" + keys_help

    sub.add_parser("sweep", parents=[common], formatter_class=fmt, epilog=epilog,
                   help="OMA x RIN x constellation sweep -> sweep.csv")

    o = sub.add_parser("optimize", parents=[common], formatter_class=fmt, epilog=epilog,
                       help="exhaustive constellation search -> search.csv")
    o.add_argument("--mode", choices=["symmetric", "full"], default="symmetric")
    o.add_argument("--evaluator", choices=["quadrature", "monte-carlo"], default="quadrature")
    o.add_argument("--rin", type=float, default=None,
                   help="RIN in dB/Hz for the search (default: -144, or first rin_db_hz of the config)")
    o.add_argument("--search-oma-dbm", type=float, default=None,
                   help="search at this OMA instead of the saturation operating point")
    o.add_argument("--mc-trials", type=int, default=200_000)

    ls = sub.add_parser("label-search", parents=[common], formatter_class=fmt, epilog=epilog,
                        help="three-step labeling with exhaustive 10! search")
    ls.add_argument("constellation", nargs="?", default="optimized",
                    help="builtin name or constellation file (needs the bottom-left 4x4 block)")

    e = sub.add_parser("export", parents=[common], formatter_class=fmt, epilog=epilog,
                       help="write a builtin labeled constellation file")
    e.add_argument("name")

    c = sub.add_parser("calibrate", parents=[common], formatter_class=fmt, epilog=epilog,
                       help="fit the noise bandwidth to a target BER floor")
    c.add_argument("--target-rin", type=float, default=-144.0)
    c.add_argument("--target-floor", type=float, default=1.77026e-5)
    return p


def effective_config(args) -> dict:
    values = load_config(args.config) if args.config is not None else {}
    for key in KEYS:
        raw = getattr(args, f"cfg_{key}")
        if raw is not None:
            values.update(parse_override(key, raw))
    if "beta" in values and "extinction_ratio_db" in values:
        # a flag for one of them overrides a file value for the other
        for key in ("beta", "extinction_ratio_db"):
            if getattr(args, f"cfg_{key}") is None:
                values.pop(key)
    return values


def _sweep_config(values):
    from .harness import SweepConfig
    try:
        return SweepConfig.from_mapping(values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_sweep(args, values) -> int:
    from .harness import emit_csv, run_sweep
    cfg = _sweep_config(values)
    rows, manifest = run_sweep(cfg, threads=args.threads)
    csv_path, _ = emit_csv(rows, manifest, args.output)
    log.info("wrote %d rows to %s", len(rows), csv_path)
    return 1 if manifest.failures else 0


def cmd_optimize(args, values) -> int:
    from .harness import RunManifest
    from .optimizer import optimize_constellation, report_to_csv, saturation_params
    cfg = _sweep_config(values)
    rin = args.rin if args.rin is not None else (values["rin_db_hz"][0] if "rin_db_hz" in values else -144.0)
    params = cfg.channel_template().replace(rin_db_hz=rin)
    if args.search_oma_dbm is None:
        params = saturation_params(params)
    else:
        params = params.replace(eta=oma_to_eta(args.search_oma_dbm))
    t0 = time.perf_counter()
    report = optimize_constellation(params.noise_model(), params.beta, mode=args.mode,
                                    evaluator=args.evaluator, mc_trials=args.mc_trials,
                                    seed=cfg.seed, threads=args.threads)
    report.config.update({"rin_db_hz": rin, "oma_dbm": round(params.oma_dbm, 6)})
    args.output.mkdir(parents=True, exist_ok=True)
    (args.output / "search.csv").write_text(report_to_csv(report), encoding="utf-8", newline="")
    manifest = RunManifest(cfg.echo(), extra={f"search.{k}": v for k, v in report.config.items()})
    manifest.extra["search.best"] = str(report.best)
    manifest.extra["search.best_ser"] = f"{report.best_ser:.9g}"
    manifest.wall_time_s = time.perf_counter() - t0
    (args.output / "manifest.txt").write_text(manifest.to_text(), encoding="utf-8", newline="")
    print(f"best removal set: {report.best}  SER={report.best_ser:.6g}")
    return 0


def _load_constellation(name: str):
    from .constellation import builtin_constellation, parse
    if name in BUILTIN:
        return builtin_constellation(name)
    path = Path(name)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read constellation {path}: {exc}") from None
    try:
        return parse(text, name=path.stem)[0]
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def cmd_label_search(args, values) -> int:
    c = _load_constellation(args.constellation)
    try:
        partial = construct_steps_1_2(c)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    g = neighbor_graph(c)
    t0 = time.perf_counter()
    result = search_step3(partial, c, g)
    elapsed = time.perf_counter() - t0
    d = edge_distances(result.labeling, g)
    args.output.mkdir(parents=True, exist_ok=True)
    out = args.output / f"{c.name}_labeled.qam32"
    out.write_text(serialize(c, result.labeling), encoding="utf-8", newline="")
    report = {
        "constellation": c.name,
        "edges": len(d),
        "objective": str(result.objective),
        "objective_float": f"{float(result.objective):.9g}",
        "max_edge_hamming": max(d),
        "edges_above_1": sum(x > 1 for x in d),
        "permutations_evaluated": result.evaluated,
        "search_seconds": f"{elapsed:.3f}",
    }
    text = "".join(f"{k} = {v}\n" for k, v in report.items())
    (args.output / "label_report.txt").write_text(text, encoding="utf-8", newline="")
    sys.stdout.write(text)
    return 0


def cmd_export(args, values) -> int:
    if args.name not in BUILTIN:
        raise ConfigError(f"unknown constellation {args.name!r}; choose from {', '.join(BUILTIN)}")
    c, lab = builtin_labelings()[args.name]
    args.output.mkdir(parents=True, exist_ok=True)
    out = args.output / f"{args.name}.qam32"
    out.write_text(serialize(c, lab), encoding="utf-8", newline="")
    print(out)
    return 0


def cmd_calibrate(args, values) -> int:
    from .harness import REFERENCE_FLOORS, calibrate_floor, floor_ser
    cfg = _sweep_config(values)
    cal = calibrate_floor(args.target_rin, args.target_floor, cfg.channel_template())
    lines = {
        "target_rin_db_hz": args.target_rin,
        "target_floor": f"{args.target_floor:.9g}",
        "achieved_floor": f"{cal.achieved_floor:.9g}",
        "bandwidth_hz": f"{cal.params.bandwidth_b:.9g}",
        "beta": f"{cal.params.beta:.9g}",
        "nep_w_sqrthz": f"{cal.params.nep:.9g}",
    }
    for rin, ref in sorted(REFERENCE_FLOORS.items()):
        pred = floor_ser(cal.params, rin).ser / 5
        lines[f"predicted_floor.{rin:g}"] = f"{pred:.6g}"
        lines[f"reference_floor.{rin:g}"] = f"{ref:.6g}"
    text = "".join(f"{k} = {v}\n" for k, v in lines.items())
    args.output.mkdir(parents=True, exist_ok=True)
    (args.output / "calibration.txt").write_text(text, encoding="utf-8", newline="")
    sys.stdout.write(text)
    return 0


COMMANDS = {
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "label-search": cmd_label_search,
    "export": cmd_export,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        values = effective_config(args)
        return COMMANDS[args.command](args, values)
    except ConfigError as exc:
        print(f"pam6rin: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - mapped to exit code 1
        print(f"pam6rin: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
