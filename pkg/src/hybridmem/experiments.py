"""The four studies, as pure functions from a config to named output texts.

Runners never touch the filesystem: they return ``Outputs`` (file name ->
text) and the caller decides where they land. That keeps reruns
byte-comparable and lets sweep workers stay side-effect free.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import analysis, area
from .config import ExperimentConfig, apply_overrides, from_dict
from .device import read_resistance
from .protocol import generate_workload, random_pattern, reads_only, writes_only
from .solver import GROUND, Memristor, Netlist, Schedule, VSource, transient_run
from .topology import CrossbarSpec, build_1t1m, build_hybrid, build_unconstrained, summary

log = logging.getLogger(__name__)

MAX_STUDIED_SIZE = 16


@dataclass
class Outputs:
    files: dict[str, str] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _csv(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else repr(v) for v in row))
    return "\n".join(lines) + "\n"


# -- device test ---------------------------------------------------------------


def device_test_schedule(cfg: ExperimentConfig) -> tuple[Schedule, list[tuple[str, float, float]]]:
    """Read, set pulse, read, reset pulse, read (reads only when ``read_only``)."""
    tm, dt_cfg = cfg.timing, cfg.device_test
    read_w = max(tm.read_width, 1e-9)
    steps = [("read", tm.v_read, read_w)]
    if not dt_cfg.read_only:
        steps += [("set", dt_cfg.v_pulse, dt_cfg.pulse_width), ("read", tm.v_read, read_w),
                  ("reset", -dt_cfg.v_pulse, dt_cfg.pulse_width)]
    steps.append(("read", tm.v_read, read_w))
    wave, spans, t = [], [], 0.0
    for kind, lvl, width in steps:
        t0 = t + tm.gap / 2
        t_up, t_dn = t0 + tm.ramp, t0 + tm.ramp + width
        t1 = t_dn + tm.ramp
        wave += [(t0, 0.0), (t_up, lvl), (t_dn, lvl), (t1, 0.0)]
        spans.append((kind, t_up, t_dn))
        t = t1 + tm.gap / 2
    return Schedule({"VIN": wave}, {}, t), spans


def run_device_test(cfg: ExperimentConfig) -> Outputs:
    p = cfg.device_params()
    net = Netlist()
    net.node("IN")
    net.add(VSource("VIN", "IN", GROUND))
    net.add(Memristor("M", "IN", GROUND, p))
    sched, spans = device_test_schedule(cfg)
    tr = transient_run(net, sched, cfg.solver_config(), probe_nodes=["IN"], probe_mems=["M"])
    rows = [(float(t * 1e9), float(v), float(i), float(x))
            for t, v, i, x in zip(tr.t, tr.v[:, 0], tr.mem_i[:, 0], tr.mem_x[:, 0])]
    measured = []
    for kind, t_up, t_dn in spans:
        if kind != "read":
            continue
        k = int(np.searchsorted(tr.t, 0.5 * (t_up + t_dn)))
        measured.append(float(tr.v[k, 0] / tr.mem_i[k, 0]))
    r_on, r_off = float(read_resistance(1.0, p)), float(read_resistance(p.x_floor, p))
    summ = {
        "r_on_ohm": r_on,
        "r_off_ohm": r_off,
        "ratio": r_off / r_on,
        "read_resistances_ohm": measured,
        "x_final": float(tr.final_x[0]),
        "x_max": float(tr.mem_x[:, 0].max()),
    }
    text = (f"R_on  {r_on / 1e3:.2f} kOhm\nR_off {r_off:.4e} Ohm\nR_off/R_on {r_off / r_on:.4e}\n"
            + "".join(f"read {k}: {r:.6e} Ohm\n" for k, r in enumerate(measured)))
    return Outputs({"device_trace.csv": _csv(["time_ns", "v_volts", "i_amperes", "x"], rows),
                    "device_summary.txt": text,
                    "device_summary.json": _json(summ)}, summ)


# -- unconstrained crossbar energy scaling ------------------------------------------


def background_rng(seed: int, k: int) -> np.random.Generator:
    """Stream for the k-th random background of an energy-scaling point."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(seed), int(k)))))


def crossbar_write_energies(n: int, cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    """Energies of ``cfg.scaling.writes`` single-bit writes on one random n x n passive crossbar.

    Background states are random ON/OFF. Each write drives the selected row
    to +-Vw/2 and the selected column to -+Vw/2 with every other line grounded.
    """
    p = cfg.device_params()
    bits = rng.integers(0, 2, size=(n, n))
    x0 = np.where(bits == 1, 1.0, p.x_floor)
    net, nm = build_unconstrained(CrossbarSpec(n, n, cfg.topology.wire_r, p, x0))
    tm = cfg.timing
    vh = tm.vw / 2
    waves: dict[str, list] = {}
    windows, t = [], 0.0
    for _ in range(cfg.scaling.writes):
        r, c, b = (int(v) for v in (rng.integers(n), rng.integers(n), rng.integers(2)))
        sign = 1.0 if b else -1.0
        t_start = t
        t0 = t + tm.gap / 2
        t_up, t_dn = t0 + tm.ramp, t0 + tm.ramp + tm.write_width
        t1 = t_dn + tm.ramp
        for src, lvl in ((nm.row_sources[r], sign * vh), (nm.col_sources[c], -sign * vh)):
            waves.setdefault(src, []).extend([(t0, 0.0), (t_up, lvl), (t_dn, lvl), (t1, 0.0)])
        t = t1 + tm.gap / 2
        windows.append((t_start, t))
    sched = Schedule(waves, {}, t)
    tr = transient_run(net, sched, cfg.solver_config(), probe_nodes=[], probe_mems=[])
    return np.array([analysis.energy_between(tr, a, min(b, tr.t[-1])) for a, b in windows])


def crossbar_write_energy(n: int, cfg: ExperimentConfig, seed: int) -> tuple[float, float]:
    """Mean and standard error of single-bit write energy, pooled over the configured backgrounds.

    One background alone is a poor estimator: the energy of a write is
    dominated by how many half-selected devices happen to be ON.
    """
    e = np.concatenate([crossbar_write_energies(n, cfg, background_rng(seed, k))
                        for k in range(cfg.scaling.backgrounds)])
    sem = float(e.std(ddof=1) / math.sqrt(len(e))) if len(e) > 1 else 0.0
    return float(e.mean()), sem


def run_energy_scaling(cfg: ExperimentConfig, sizes: list[int] | None = None) -> Outputs:
    sizes = list(sizes or cfg.scaling.sizes)
    big = [s for s in sizes if s > MAX_STUDIED_SIZE]
    if big:
        warnings.warn(f"sizes {big} exceed the {MAX_STUDIED_SIZE}x{MAX_STUDIED_SIZE} scale studied originally",
                      stacklevel=2)
    rows = []
    for n in sizes:
        mean, sem = crossbar_write_energy(n, cfg, cfg.workload.seed)
        log.info("crossbar %dx%d: %.4e J/bit", n, n, mean)
        rows.append((n, mean, sem))
    table = "size  write_energy_pJ  sem_pJ\n" + "".join(
        f"{n:>4}  {m * 1e12:>15.4f}  {s * 1e12:>6.4f}\n" for n, m, s in rows)
    summ = {"sizes": sizes, "write_energy_J": [r[1] for r in rows], "sem_J": [r[2] for r in rows],
            "beyond_scale": big}
    return Outputs({"energy_scaling.csv": _csv(["size", "write_energy_J", "sem_J"], rows),
                    "energy_scaling.txt": table}, summ)


# -- hybrid tile characterization --------------------------------------------------------


def margin_run(cfg: ExperimentConfig, rounds: int | None = None, monitor: bool = False):
    """Seeded read/write workload on the hybrid array; returns (report, samples, answer, monitor)."""
    spec, timing = cfg.hybrid_spec(), cfg.timing_config()
    rounds = cfg.workload.rounds if rounds is None else rounds
    net, nm = build_hybrid(spec)
    _, answer, prog = generate_workload(cfg.workload.seed, rounds, spec, timing, nm)
    mon = analysis.HalfSelectMonitor(prog, nm, [m.name for m in net.memristors]) if monitor else None
    probes = list(dict.fromkeys(nm.sense_nodes + list(cfg.output.probes)))
    tr = transient_run(net, prog, cfg.solver_config(), probe_nodes=probes, probe_mems=[], observer=mon)
    samples = analysis.read_samples(tr, prog, answer, nm)
    meta = {"sense_r_ron": cfg.topology.sense_r_ron, "vw": cfg.timing.vw,
            "tile": f"{spec.tile_rows}x{spec.tile_cols}", "seed": cfg.workload.seed, "rounds": rounds}
    return analysis.noise_margin(samples, meta), samples, answer, mon


def energy_runs(cfg: ExperimentConfig) -> analysis.EnergyReport:
    """Writes-only and reads-only runs over a randomly initialised array."""
    spec, timing, scfg = cfg.hybrid_spec(), cfg.timing_config(), cfg.solver_config()
    seed = cfg.workload.seed
    _, x0 = random_pattern(seed, spec)
    net, nm = build_hybrid(spec, x0)
    prog_w = writes_only(seed, cfg.workload.energy_writes, spec, nm, timing)
    tr_w = transient_run(net, prog_w, scfg, probe_nodes=[], probe_mems=[])
    per_op = analysis.op_energies(tr_w, prog_w, "write") / spec.n_cols
    per_sw, peak = analysis.peak_switch_current(tr_w)
    peak_name = max(per_sw, key=per_sw.get) if per_sw else ""

    net, nm = build_hybrid(spec, x0)
    prog_r = reads_only(cfg.workload.read_passes, spec, nm, timing)
    tr_r = transient_run(net, prog_r, scfg, probe_nodes=[], probe_mems=[])
    sem = float(per_op.std(ddof=1) / math.sqrt(len(per_op))) if len(per_op) > 1 else 0.0
    return analysis.EnergyReport(
        write_energy_per_bit=float(per_op.mean()),
        read_energy_per_bit=analysis.energy_per_bit(tr_r, prog_r, "read", spec.n_cols),
        peak_switch_current=peak, peak_switch=peak_name,
        n_writes=len(per_op), n_reads=len(prog_r.of_kind("read")),
        bits_per_op=spec.n_cols, write_energy_sem=sem)


def _point_config(base: dict, coords: dict) -> ExperimentConfig:
    sets = [f"sweep.rounds={base['sweep']['rounds']}"]
    for key, val in coords.items():
        if key == "sense_r_ron":
            sets.append(f"topology.sense_r_ron={json.dumps(val)}")
        elif key == "vw":
            sets.append(f"timing.vw={json.dumps(val)}")
        elif key == "tile":
            sets += [f"topology.tile_rows={int(val)}", f"topology.tile_cols={int(val)}"]
        else:
            raise KeyError(f"unknown sweep coordinate {key!r}")
    return apply_overrides(from_dict(base), sets)


def sweep_point(base: dict, coords: dict) -> dict:
    """One independent seeded grid-point simulation (module level so workers can pickle it)."""
    cfg = _point_config(base, coords)
    rep, *_ = margin_run(cfg, rounds=cfg.sweep.rounds)
    out = {"margin": rep.margin, "errors": rep.errors, "min_one": rep.min_one,
           "max_zero": rep.max_zero, "gap": rep.min_one - rep.max_zero, "n_samples": rep.n_samples}
    if cfg.sweep.energies:
        out.update({f"energy_{k}": v for k, v in energy_runs(cfg).to_dict().items()})
    return out


def sweep_grid(cfg: ExperimentConfig) -> dict[str, list]:
    s = cfg.sweep
    grid: dict[str, list] = {"sense_r_ron": list(s.sense_r_ron) or [cfg.topology.sense_r_ron]}
    if s.vw:
        grid["vw"] = list(s.vw)
    if s.tile:
        grid["tile"] = list(s.tile)
    return grid


def sweep_outputs(rows: list[analysis.SweepRow]) -> tuple[str, str, list[dict]]:
    keys = sorted(rows[0].coords) if rows else []
    extra = sorted({k for r in rows if r.ok for k in r.result})
    header = keys + ["ok", "best"] + extra + ["error"]
    csv_rows, records = [], []
    for r in rows:
        res = r.result or {}
        vals = [r.coords[k] for k in keys] + [int(r.ok), int(r.best)]
        vals += [res.get(k, "") for k in extra] + [(r.error or "").replace(",", ";")]
        csv_rows.append(vals)
        records.append(dataclasses.asdict(r))
    text = "  ".join(f"{h:>12}" for h in keys + ["margin_mV", "errors", "best"]) + "\n"
    for r in rows:
        res = r.result or {}
        m = f"{res['margin'] * 1e3:.3f}" if r.ok else "FAILED"
        text += "  ".join(f"{v!s:>12}" for v in [r.coords[k] for k in keys] + [m, res.get("errors", "-"),
                                                                                  "*" if r.best else ""]) + "\n"
    return _csv(header, csv_rows), text, records


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> Outputs:
    rows = analysis.sweep(sweep_grid(cfg), cfg.to_dict(), sweep_point, jobs=jobs)
    csv_text, text, records = sweep_outputs(rows)
    best = next((r.coords for r in rows if r.best), None)
    summ = {"best": best, "failed": [r.coords for r in rows if not r.ok]}
    return Outputs({"sweep.csv": csv_text, "sweep.txt": text, "sweep.json": _json(records)}, summ)


def run_tile_characterization(cfg: ExperimentConfig, jobs: int = 1, do_sweep: bool = False) -> Outputs:
    if cfg.topology.type != "hybrid":
        raise ValueError("tile characterization needs topology.type = 'hybrid'")
    spec = cfg.hybrid_spec()
    rep, samples, answer, mon = margin_run(cfg, monitor=True)
    en = energy_runs(cfg)
    out = Outputs()
    out.files["answer_matrix.csv"] = answer.to_csv()
    out.files["read_samples.csv"] = _csv(["cycle", "row", "col", "peak_v", "expected"],
                                         [(s.cycle, s.row, s.col, s.peak, s.expected) for s in samples])
    tile = f"{spec.tile_rows}x{spec.tile_cols}"
    lines = [
        f"{'':<28}{tile:>12}",
        f"{'Write Energy (pJ)':<28}{en.write_energy_per_bit * 1e12:>12.4f}",
        f"{'Read Energy (fJ)':<28}{en.read_energy_per_bit * 1e15:>12.4f}",
        f"{'Max. Noise Margin (mV)':<28}{rep.margin * 1e3:>12.3f}",
        f"{'Opt. Sense Resistance':<28}{cfg.topology.sense_r_ron:>10g}Ron",
        f"{'Write Voltage (V)':<28}{cfg.timing.vw:>12g}",
        f"{'Peak switch current (uA)':<28}{en.peak_switch_current * 1e6:>12.2f}",
        f"{'Read errors (best thr.)':<28}{rep.errors:>12d}",
        f"{'Worst half-select (V)':<28}{float(mon.worst.max()):>12.4f}",
    ]
    summ = {"margin": rep.to_dict(), "energy": en.to_dict(),
            "half_select_worst_v": mon.worst.tolist(), "config": cfg.to_dict()}
    if do_sweep:
        sw = run_sweep(cfg, jobs)
        out.files.update(sw.files)
        best = sw.summary["best"] or {}
        flag = best.get("sense_r_ron") == cfg.topology.sense_r_ron
        lines.append(f"{'Configured R_s is optimum':<28}{'yes' if flag else 'no':>12}")
        summ["sweep_best"] = best
        summ["configured_is_optimum"] = flag
    out.files["tile_report.txt"] = "\n".join(lines) + "\n"
    out.files["tile_report.json"] = _json(summ)
    out.summary = summ
    return out


# -- density ----------------------------------------------------------------------------------


def run_density(cfg: ExperimentConfig) -> Outputs:
    spec = cfg.area_spec()
    rows = area.comparison_table(spec, [(n, n) for n in cfg.area.tiles])
    summ = {"rows": [dataclasses.asdict(r) for r in rows], "ratios": area.density_ratios(rows, spec)}
    return Outputs({"density.txt": area.format_table(rows, spec), "density.csv": area.to_csv(rows),
                    "density.json": _json(summ)}, summ)


def netlist_summary(cfg: ExperimentConfig) -> str:
    t = cfg.topology
    p = cfg.device_params()
    if t.type == "hybrid":
        net, _ = build_hybrid(cfg.hybrid_spec())
    elif t.type == "crossbar":
        net, _ = build_unconstrained(CrossbarSpec(t.crossbar_rows, t.crossbar_cols, t.wire_r, p))
    else:
        net, _ = build_1t1m(t.crossbar_rows, t.crossbar_cols, t.wire_r, cfg.switch_params(), p)
    return f"topology: {t.type}\n" + summary(net) + "\n"


__all__ = [
    "Outputs", "run_device_test", "run_energy_scaling", "run_tile_characterization", "run_density",
    "run_sweep", "sweep_point", "margin_run", "energy_runs", "crossbar_write_energy", "crossbar_write_energies",
    "background_rng", "netlist_summary",
]
