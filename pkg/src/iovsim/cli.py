"""Command-line entry point: ``iovsim run|sweep|calibrate|validate``.

Exit codes: 0 success, 2 usage error, 3 configuration error, 4 runtime failure.
The default output directory is ``$IOVSIM_OUT`` or ``./out``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__, kernels
from .config import ConfigError, ScenarioConfig, from_dict, load_scenario, to_dict, with_overrides
from .engine import TASK_LEDGER_COLUMNS, run, sweep
from .metrics import SCHEMA_VERSION
from .switch import InvariantError

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3, 4
MANIFEST_SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


def parse_seeds(text: str) -> list[int]:
    """``"1..10"`` (inclusive), ``"3"`` or ``"1,4,9"``."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise UsageError(f"empty seed range {text!r}")
            return list(range(lo, hi + 1))
        seeds = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad seed list {text!r}") from None
    if not seeds:
        raise UsageError("at least one seed is required")
    return seeds


def parse_list(text: str, kind=float) -> list:
    try:
        values = [kind(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad value list {text!r}") from None
    if not values:
        raise UsageError(f"empty value list {text!r}")
    return values


def load_config(path: str) -> ScenarioConfig:
    """A TOML scenario, ``default``, or a manifest JSON written by an earlier run."""
    if path.endswith(".json"):
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
            return from_dict(doc["config"])
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: not a usable manifest ({exc})") from None
    return load_scenario(path)


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest(cfg: ScenarioConfig, seeds: list[int], command: str, extra: dict | None = None) -> str:
    doc = {
        "tool": "iovsim",
        "version": __version__,
        "manifest_schema": MANIFEST_SCHEMA_VERSION,
        "csv_schema": SCHEMA_VERSION,
        "backend": kernels.BACKEND,
        "command": command,
        "seeds": seeds,
        "config": to_dict(cfg),
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def ledger_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TASK_LEDGER_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def point_dirname(params: dict) -> str:
    if not params:
        return "base"
    short = {"qos_mbps": "qos", "cache_scale": "cache", "n_vehicles": "vehicles"}
    return "_".join(f"{short[k]}{v:g}" for k, v in params.items())


def _apply_single(cfg: ScenarioConfig, args) -> ScenarioConfig:
    def one(text, kind, flag):
        if text is None:
            return None
        values = parse_list(text, kind)
        if len(values) != 1:
            raise UsageError(f"{flag} takes a single value for 'run'; use 'sweep' for lists")
        return values[0]

    return with_overrides(cfg, qos_mbps=one(args.qos, float, "--qos"),
                          cache_scale=one(args.cache_scale, float, "--cache-scale"),
                          n_vehicles=one(args.vehicles, int, "--vehicles"))


def cmd_run(args) -> int:
    cfg = _apply_single(load_config(args.scenario), args)
    seed = cfg.seed if args.seed is None else args.seed
    cfg = with_overrides(cfg, seed=seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.flow_log:
        with open(out / "flow.ndjson", "w", encoding="utf-8") as fh:
            result = run(cfg, seed, flow_log=fh)
    else:
        result = run(cfg, seed)
    atomic_write(out / "metrics.csv", result.series.to_csv_text())
    atomic_write(out / "tasks.csv", ledger_csv(result.ledger_rows()))
    atomic_write(out / "manifest.json", manifest(cfg, [seed], "run"))
    if args.charts:
        from .charts import emit_charts

        emit_charts({f"seed {seed}": result.series}, out / "charts")
    s = result.series
    print(f"seed {seed}: final loss {s.final('loss_rate'):.4f}, arrival {s.final('arrive_rate'):.4f} -> {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.scenario)
    seeds = parse_seeds(args.seeds) if args.seeds else [cfg.seed if args.seed is None else args.seed]
    grid = {}
    if args.qos:
        grid["qos_mbps"] = parse_list(args.qos, float)
    if args.cache_scale:
        grid["cache_scale"] = parse_list(args.cache_scale, float)
    if args.vehicles:
        grid["n_vehicles"] = parse_list(args.vehicles, int)
    # build every grid config up front so a bad value is a config error, not a crash mid-sweep
    for key, values in grid.items():
        for v in values:
            with_overrides(cfg, **{key: v})
    points = sweep(cfg, grid, seeds, jobs=args.jobs)
    out = Path(args.out)
    for p in points:
        d = out / point_dirname(p.params)
        atomic_write(d / "metrics.csv", p.mean.to_csv_text())
        for seed, s in p.per_seed.items():
            atomic_write(d / "seeds" / f"seed_{seed}.csv", s.to_csv_text())
        atomic_write(d / "manifest.json", manifest(p.config, seeds, "sweep", {"point": p.params}))
        print(f"{p.label or 'base'}: mean final loss {p.mean.final('loss_rate'):.4f}, "
              f"arrival {p.mean.final('arrive_rate'):.4f}")
    atomic_write(out / "manifest.json", manifest(cfg, seeds, "sweep", {
        "grid": grid, "points": [point_dirname(p.params) for p in points]}))
    if args.charts:
        from .charts import emit_charts

        emit_charts({p.label or "base": p.mean for p in points}, out / "charts")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .traffic import calibrate_qos

    cfg = load_config(args.scenario)
    seeds = parse_seeds(args.seeds) if args.seeds else [cfg.seed]
    if not 0 < args.target_loss <= 1:
        raise UsageError("--target-loss must lie in (0, 1]")
    q = calibrate_qos(cfg, args.target_loss, seeds, lo=args.lo, hi=args.hi, jobs=args.jobs)
    if q is None:
        print(f"no QoS up to {args.hi} Mbit/s keeps mean loss below {args.target_loss}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"largest QoS with mean final loss < {args.target_loss}: {q} Mbit/s")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.scenario)
    print(f"ok: {cfg.n_vehicles} vehicles, {cfg.n_rsus} RSUs, {cfg.n_slots} slots, "
          f"QoS {cfg.traffic.qos_mbps:g} Mbit/s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iovsim", description="Flow-level IoV mesh network simulator.")
    p.add_argument("--version", action="version", version=f"iovsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, outputs=True):
        sp.add_argument("--scenario", default="default",
                        help="scenario TOML, a manifest.json, or 'default' (default: %(default)s)")
        if outputs:
            sp.add_argument("--out", default=os.environ.get("IOVSIM_OUT", "out"),
                            help="output directory (default: $IOVSIM_OUT or ./out)")
            sp.add_argument("--charts", action="store_true", help="write SVG charts")
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    sp = sub.add_parser("run", help="one simulation")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--qos", help="QoS rate in Mbit/s")
    sp.add_argument("--cache-scale", help="multiplier on every node cache")
    sp.add_argument("--vehicles", help="number of vehicles")
    sp.add_argument("--flow-log", action="store_true", help="write per-slot per-task flows as NDJSON")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("sweep", help="grid of parameters x seeds, seed-averaged")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--seeds", help="A..B, or a comma list")
    sp.add_argument("--qos", help="comma list of QoS rates (Mbit/s)")
    sp.add_argument("--cache-scale", help="comma list of cache multipliers")
    sp.add_argument("--vehicles", help="comma list of vehicle counts")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("calibrate", help="largest QoS under a target loss rate")
    common(sp, outputs=False)
    sp.add_argument("--target-loss", type=float, required=True, help="fraction, e.g. 0.05")
    sp.add_argument("--seeds", help="A..B, or a comma list")
    sp.add_argument("--lo", type=int, help="lower QoS bound (default: one packet per slot)")
    sp.add_argument("--hi", type=int, default=500)
    sp.set_defaults(fn=cmd_calibrate)

    sp = sub.add_parser("validate", help="check a scenario file without running it")
    sp.add_argument("--scenario", default="default")
    sp.set_defaults(fn=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help/--version, 2 for usage errors
        return int(exc.code or 0)
    if getattr(args, "jobs", 1) < 1:
        print("iovsim: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"iovsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"iovsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantError, RuntimeError, OSError, ValueError) as exc:
        print(f"iovsim: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
