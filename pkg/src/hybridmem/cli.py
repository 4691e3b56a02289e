"""Command-line entry point: ``hybridmem <command> [options]``.

Each run gets its own directory ``<out>/<command>_<UTC timestamp>_s<seed>``
holding the outputs plus ``manifest.json``. ``hybridmem rerun manifest.json``
replays a run from its manifest and, with ``--check``, verifies that every
output hashes identically.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, apply_overrides, from_dict, load
from .experiments import (Outputs, netlist_summary, run_density, run_device_test, run_energy_scaling,
                          run_sweep, run_tile_characterization)

log = logging.getLogger("hybridmem")

COMMANDS = ("device-test", "energy-scaling", "tile", "density", "sweep")


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    version: str
    options: dict = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)  # name -> sha256
    duration_s: float = 0.0
    started_utc: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        data = json.loads(Path(path).read_text())
        return cls(**data)


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def execute(command: str, cfg: ExperimentConfig, options: dict) -> Outputs:
    """Run one study; pure apart from the computation itself."""
    jobs = int(options.get("jobs", 1))
    if command == "device-test":
        return run_device_test(cfg)
    if command == "energy-scaling":
        out = run_energy_scaling(cfg)
        out.files["netlist.txt"] = netlist_summary(_as_crossbar(cfg, max(cfg.scaling.sizes)))
        return out
    if command == "tile":
        if cfg.topology.type != "hybrid":
            raise ConfigError("topology.type", "the tile study needs the hybrid topology")
        out = run_tile_characterization(cfg, jobs=jobs, do_sweep=bool(options.get("with_sweep")))
        out.files["netlist.txt"] = netlist_summary(cfg)
        return out
    if command == "density":
        return run_density(cfg)
    if command == "sweep":
        return run_sweep(cfg, jobs=jobs)
    raise ValueError(f"unknown command {command!r}")


def _as_crossbar(cfg: ExperimentConfig, n: int) -> ExperimentConfig:
    return apply_overrides(cfg, ["topology.type=crossbar", f"topology.crossbar_rows={n}",
                                 f"topology.crossbar_cols={n}"])


def _run_dir(root: Path, command: str, seed: int) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    base = root / f"{command}_{stamp}_s{seed}"
    path, k = base, 1
    while path.exists():
        path = Path(f"{base}_{k}")
        k += 1
    return path


def write_run(root: Path, command: str, cfg: ExperimentConfig, options: dict) -> tuple[Path, RunManifest]:
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    out = execute(command, cfg, options)
    duration = time.perf_counter() - t0
    run_dir = _run_dir(root, command, cfg.workload.seed)
    run_dir.mkdir(parents=True)
    for name, text in out.files.items():
        (run_dir / name).write_text(text, newline="\n")
    man = RunManifest(command, cfg.to_dict(), cfg.workload.seed, __version__, options,
                      {n: sha256(t) for n, t in sorted(out.files.items())}, round(duration, 3), started)
    (run_dir / "manifest.json").write_text(man.to_json(), newline="\n")
    return run_dir, man


def _build_config(args) -> ExperimentConfig:
    cfg = load(args.config)
    sets = list(args.set or [])
    if args.seed is not None:
        sets.append(f"workload.seed={args.seed}")
    if args.rounds is not None:
        key = "sweep.rounds" if args.command == "sweep" else "workload.rounds"
        sets.append(f"{key}={args.rounds}")
    if args.topology is not None:
        sets.append(f'topology.type="{args.topology}"')
    return apply_overrides(cfg, sets) if sets else cfg


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridmem", description="Hybrid memristor memory experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int, help="workload seed (unsigned 64-bit)")
        p.add_argument("--rounds", type=int, help="workload rounds (sweep: rounds per grid point)")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
        p.add_argument("--set", action="append", metavar="PATH=VALUE", help="override a config field")
        p.add_argument("--out", help="parent directory for run folders")
        p.add_argument("--topology", choices=["crossbar", "1t1m", "hybrid"])
        if name == "tile":
            p.add_argument("--with-sweep", action="store_true", help="also run the configured R_s sweep")
    p = sub.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="parent directory for the new run folder")
    p.add_argument("--check", action="store_true", help="fail unless every output hashes identically")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rerun":
            man = RunManifest.load(args.manifest)
            cfg = from_dict(man.config)
            root = Path(args.out) if args.out else Path(args.manifest).resolve().parent.parent
            run_dir, new = write_run(root, man.command, cfg, man.options)
            print(run_dir)
            if args.check and new.files != man.files:
                bad = sorted(k for k in set(man.files) | set(new.files) if man.files.get(k) != new.files.get(k))
                print(f"error: outputs differ from manifest: {', '.join(bad)}", file=sys.stderr)
                return 3
            return 0
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")
        cfg = _build_config(args)
        options = {"jobs": args.jobs}
        if getattr(args, "with_sweep", False):
            options["with_sweep"] = True
        root = Path(args.out or cfg.output.directory)
        run_dir, _ = write_run(root, args.command, cfg, options)
        print(run_dir)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
