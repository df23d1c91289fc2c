"""Command-line front end.

    mdgsim surface --config surface.yaml --out runs/s1
    mdgsim sweep --preset sweep-desk --out runs/e2e --workers 4
    mdgsim analyze-taps --taps taps.npz --snr-db 12 --corrected
    mdgsim validate --config surface.yaml

Exit status: 0 success, 2 usage error (bad flags, unreadable config, schema
violation), 3 runtime failure. Failures print one JSON error record on
stderr (and to ``<out>/error.json`` when an output directory is known).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

EXPERIMENTS = ("scatter", "surface", "sweep", "voa")


class UsageError(Exception):
    def __init__(self, message: str, field: str = None):
        super().__init__(message)
        self.field = field


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mdgsim", description="MDL/MDG estimation experiments for coupled SDM links.")
    p.add_argument("--version", action="version", version=f"mdgsim {__version__}")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        _config_args(sp)
        sp.add_argument("--out", required=True, type=Path, help="output directory")
        sp.add_argument("--seed", type=int, help="override the base seed")
        sp.add_argument("--workers", type=int, help="worker processes (default: $MDGSIM_WORKERS or 1)")
        sp.add_argument("--trials", type=int, help="override trials per grid point")
        sp.add_argument("-v", "--verbose", action="count", default=0, help="progress on stderr")

    sp = sub.add_parser("analyze-taps", help="estimate MDL/MDG from an equalizer tap dump")
    sp.add_argument("--taps", required=True, type=Path, help="tap dump (.json or .npz)")
    sp.add_argument("--snr-db", type=float, help="SNR used for the correction, dB")
    sp.add_argument("--corrected", action="store_true", help="apply the SNR correction")
    sp.add_argument("--n-points", type=int, default=512, help="frequency points over one sample-rate period")
    sp.add_argument("--out", type=Path, help="also write report.json and manifest.json here")
    sp.add_argument("-v", "--verbose", action="count", default=0)

    sp = sub.add_parser("validate", help="check a configuration against the schema")
    _config_args(sp)
    sp.add_argument("--kind", choices=EXPERIMENTS, help="expected experiment kind")
    sp.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _config_args(sp):
    sp.add_argument("--config", type=Path, help="YAML or JSON experiment configuration")
    sp.add_argument("--preset", help="named preset used as the base configuration")


def _load(args, kind):
    from .experiments import ConfigError, ExperimentConfig, read_config_file

    if args.config is None and args.preset is None:
        raise UsageError("either --config or --preset is required", "config")
    try:
        d = read_config_file(args.config) if args.config is not None else {}
        if d.get("tool") == "mdgsim" and isinstance(d.get("config"), dict):
            # a run manifest: replay its config echo
            d = d["config"]
        if args.preset is not None:
            d["preset"] = args.preset
        for flag in ("seed", "workers", "trials"):
            v = getattr(args, flag, None)
            if v is not None:
                d[flag] = v
        if kind is not None:
            from .experiments.config import resolve

            got = resolve(d).get("kind")
            if got is None:
                d["kind"] = kind
            elif got != kind:
                raise ConfigError(f"configuration is for {got!r}, not {kind!r}", "kind")
        return d, ExperimentConfig.from_dict(d)
    except ConfigError as exc:
        raise UsageError(exc.detail, exc.path) from None


def _progress(enabled: bool, label: str):
    if not enabled:
        return None

    def report(done, total):
        print(f"[{label}] {done}/{total} jobs", file=sys.stderr, flush=True)

    return report


def _run_experiment(args) -> int:
    from .experiments import run_experiment, write_outputs

    _, cfg = _load(args, args.command)
    table = run_experiment(cfg, _progress(args.verbose > 0, args.command))
    write_outputs(table, cfg.to_dict(), args.out)
    if args.verbose:
        print(f"wrote {args.out}/results.csv ({len(table.rows)} trial rows, "
              f"{len(table.aggregates)} aggregate rows)", file=sys.stderr)
    return EXIT_OK


def _analyze_taps(args) -> int:
    from .metrics import SnrSpec
    from .signal import estimate_from_taps, load_taps

    if args.corrected and args.snr_db is None:
        raise UsageError("--corrected requires --snr-db", "snr-db")
    if args.n_points < 1:
        raise UsageError("--n-points must be >= 1", "n-points")
    try:
        state = load_taps(args.taps)
    except OSError as exc:
        raise UsageError(f"cannot read tap dump: {exc.strerror}", "taps") from None
    except (ValueError, KeyError) as exc:
        raise UsageError(f"invalid tap dump: {exc}", "taps") from None
    snr = None if args.snr_db is None else SnrSpec.from_db(args.snr_db)
    report = estimate_from_taps(state, snr, args.corrected, args.n_points)
    text = json.dumps(report.to_dict(), indent=1)
    print(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(text)
        manifest = {
            "tool": "mdgsim",
            "version": __version__,
            "kind": "analyze-taps",
            "config": {"taps": str(args.taps), "snr_db": args.snr_db, "corrected": args.corrected,
                       "n_points": args.n_points},
            "outputs": ["report.json"],
        }
        (args.out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return EXIT_OK


def _validate(args) -> int:
    _, cfg = _load(args, args.kind)
    print(json.dumps({"valid": True, "kind": cfg.kind}))
    return EXIT_OK


def _error_record(kind: str, code: int, message: str, field=None) -> dict:
    return {"error": {"type": kind, "exit_code": code, "message": message, "field": field}}


def _emit_error(record: dict, out_dir) -> None:
    print(json.dumps(record), file=sys.stderr)
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_text(json.dumps(record, indent=1))
        except OSError:
            pass


def main(argv=None) -> int:
    parser = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        if args.command in EXPERIMENTS:
            return _run_experiment(args)
        if args.command == "analyze-taps":
            return _analyze_taps(args)
        return _validate(args)
    except UsageError as exc:
        _emit_error(_error_record("usage", EXIT_USAGE, str(exc), exc.field), getattr(args, "out", None))
        return EXIT_USAGE
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # noqa: BLE001 - every runtime failure becomes an error record
        msg = f"{type(exc).__name__}: {exc}"
        _emit_error(_error_record("runtime", EXIT_RUNTIME, msg), getattr(args, "out", None))
        if args is not None and getattr(args, "verbose", 0) > 1:
            raise
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
