"""
Command-line front end.

::

    ctvff-sim run --preset fig4 --runs 200 --seed 7 --out fig4.csv
    ctvff-sim run --config scenario.toml --out trace.csv
    ctvff-sim validate scenario.toml
    ctvff-sim show-preset fig9 --variant tracking

Exit codes: 0 success, 2 usage or configuration error, 3 every run diverged.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .config import ConfigError, dump_config, load_config
from .harness import (SWEEP_AXES, WORKERS_ENV, EmptyAverageError, SweepTable,
                      predict_for_config, run_monte_carlo, sweep, write_trace_csv)
from .presets import PRESETS, Preset, get_preset

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED = 0, 2, 3


def _err(msg: str) -> None:
    print(f"ctvff-sim: {msg}", file=sys.stderr)


def _parse_values(text: str) -> tuple:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok:
            v = float(tok)
            out.append(int(v) if v.is_integer() and "." not in tok and "e" not in tok.lower() else v)
    return tuple(out)


def _preset_from_config(args) -> Preset:
    cfg = load_config(args.config)
    kind = "sweep" if args.sweep else "trace"
    values = _parse_values(args.values) if args.sweep else ()
    if args.sweep and not values:
        raise ConfigError(["--sweep needs --values"])
    return Preset(Path(args.config).stem, f"scenario file {args.config}", ((Path(args.config).stem, cfg),),
                  kind=kind, axis=args.sweep, values=values, analytical=args.analytical)


def _run_trace(preset: Preset, fh, log):
    summary = {}
    multi = len(preset.variants) > 1
    for j, (label, cfg) in enumerate(preset.variants):
        trace = run_monte_carlo(cfg)
        preds = predict_for_config(cfg) if preset.analytical else None
        write_trace_csv(trace, fh, prefix=f"{label}/" if multi else "", predictions=preds,
                        header=j == 0)
        summary[label] = {
            "steady_state": trace.steady_state(),
            "diverged_runs": dict(zip(trace.algorithms, map(int, trace.diverged_runs))),
        }
        if preds:
            summary[label]["analytical"] = {k: asdict(p) for k, p in preds.items()}
        log(f"{label}: {cfg.runs} runs done")
    return summary


def _run_sweep(preset: Preset, fh, log):
    rows = []
    multi = len(preset.variants) > 1
    for label, cfg in preset.variants:
        table = sweep(cfg, preset.axis, preset.values, analytical=preset.analytical,
                      log=lambda m, label=label: log(f"{label}: {m}"))
        for v, alg, metric, stat, source in table.rows:
            rows.append((v, f"{label}/{alg}" if multi else alg, metric, stat, source))
    SweepTable(preset.axis, tuple(rows)).to_csv(fh)
    return {}


def _metadata(preset: Preset, args, summary) -> dict:
    return {
        "tool": "ctvff-sim",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "preset": args.preset,
        "config_file": args.config,
        "kind": preset.kind,
        "axis": preset.axis,
        "values": list(preset.values),
        "analytical": preset.analytical,
        "seed": preset.config.seed,
        "sinr_averaging": "per-symbol SINR averaged over runs in the linear domain, then dB",
        "steady_state_window": "final 20% of symbols",
        "notes": list(preset.notes),
        "variants": {label: cfg.to_dict() for label, cfg in preset.variants},
        "summary": summary,
    }


def cmd_run(args) -> int:
    if args.preset is not None:
        try:
            preset = get_preset(args.preset)
        except KeyError as exc:
            _err(exc.args[0])
            return EXIT_USAGE
        if args.sweep or args.analytical:
            _err("--sweep/--analytical apply to --config runs only")
            return EXIT_USAGE
    else:
        try:
            preset = _preset_from_config(args)
        except FileNotFoundError:
            _err(f"config file not found: {args.config}")
            return EXIT_USAGE
        except (ConfigError, ValueError) as exc:
            _err(str(exc))
            return EXIT_USAGE
    algorithms = [a for a in args.algorithms.split(",") if a] if args.algorithms else None
    try:
        preset = preset.with_overrides(runs=args.runs, seed=args.seed, algorithms=algorithms)
        for _, cfg in preset.variants:
            cfg.validate()
    except (ConfigError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    if preset.kind == "sweep" and preset.axis not in SWEEP_AXES:
        _err(f"unsupported sweep axis {preset.axis!r}; expected one of {SWEEP_AXES}")
        return EXIT_USAGE

    log = (lambda m: None) if args.quiet else (lambda m: print(m, file=sys.stderr))
    out = Path(args.out)
    try:
        with out.open("w", newline="") as fh:
            runner = _run_sweep if preset.kind == "sweep" else _run_trace
            summary = runner(preset, fh, log)
    except EmptyAverageError as exc:
        _err(str(exc))
        return EXIT_DIVERGED
    meta = Path(str(out) + ".meta.json")
    meta.write_text(json.dumps(_metadata(preset, args, summary), indent=2, default=_jsonable) + "\n")
    return EXIT_OK


def _jsonable(x):
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.path)
    except FileNotFoundError:
        _err(f"config file not found: {args.path}")
        return EXIT_USAGE
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_USAGE
    sys.stdout.write(dump_config(cfg))
    return EXIT_OK


def cmd_show_preset(args) -> int:
    if args.name is None:
        for name, p in PRESETS.items():
            print(f"{name:12s} {p.description}")
        return EXIT_OK
    try:
        preset = get_preset(args.name)
    except KeyError as exc:
        _err(exc.args[0])
        return EXIT_USAGE
    variants = dict(preset.variants)
    label = args.variant or preset.variants[0][0]
    if label not in variants:
        _err(f"preset {preset.name!r} has variants {list(variants)}")
        return EXIT_USAGE
    sys.stdout.write(dump_config(variants[label]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctvff-sim", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a preset or a scenario file and write CSV",
                       epilog=f"Set {WORKERS_ENV} to spread trials over worker processes.")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help=f"one of: {', '.join(PRESETS)}")
    src.add_argument("--config", help="TOML scenario file")
    r.add_argument("--out", required=True, help="output CSV; metadata goes to <out>.meta.json")
    r.add_argument("--runs", type=int, help="Monte Carlo runs (overrides the scenario)")
    r.add_argument("--seed", type=int, help="master seed (overrides the scenario)")
    r.add_argument("--algorithms", help="comma-separated subset, by kind or label")
    r.add_argument("--sweep", choices=SWEEP_AXES, help="sweep axis for --config runs")
    r.add_argument("--values", help="comma-separated sweep values")
    r.add_argument("--analytical", action="store_true",
                   help="append CTVFF predictions for --config runs")
    r.add_argument("-q", "--quiet", action="store_true", help="no progress lines")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a scenario file and print it with defaults filled")
    v.add_argument("path")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("show-preset", help="list presets or print one as TOML")
    s.add_argument("name", nargs="?")
    s.add_argument("--variant")
    s.set_defaults(func=cmd_show_preset)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
