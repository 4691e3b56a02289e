"""Acceptance criteria 1-9, each at its stated tolerance.

Every criterion prints one PASS/FAIL line (collected into the terminal
summary) listing the sub-checks and measured values. Expensive
simulations are shared between criteria through module-scoped fixtures.
"""
import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES
from test_solver import ladder_oracle

from hybridmem import analysis, cli
from hybridmem.area import AreaSpec, comparison_table, density_ratios
from hybridmem.config import ExperimentConfig, apply_overrides, preset
from hybridmem.device import DeviceParams, advance_state, device_current, read_resistance
from hybridmem.experiments import energy_runs, margin_run, run_device_test, run_energy_scaling, sweep_point
from hybridmem.protocol import TimingConfig, comparator_threshold, digitize, generate_workload
from hybridmem.solver import (GROUND, Netlist, Resistor, VSource, solve_operating_point,
                              transient_run)
from hybridmem.topology import HybridArraySpec, SwitchParams, build_hybrid

P = DeviceParams()
R_ON_TARGET = 124.95e3


def verdict(n: int, title: str, checks: list[tuple[str, bool]]) -> None:
    ok = all(c for _, c in checks)
    body = "; ".join(f"{'ok' if c else 'FAILED'} {d}" for d, c in checks)
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} :: {body}"
    ACCEPTANCE_LINES.append((n, line))
    print(line)
    assert ok, line


# -- shared simulations ----------------------------------------------------------------


@pytest.fixture(scope="module")
def tile4():
    cfg = preset("tile4")
    rep, *_ = margin_run(cfg)
    return cfg, rep, energy_runs(cfg)


@pytest.fixture(scope="module")
def tile8():
    cfg = preset("tile8")
    rep, *_ = margin_run(cfg)
    return cfg, rep, energy_runs(cfg)


@pytest.fixture(scope="module")
def rs_sweep():
    cfg = preset("tile4")
    cfg.sweep.rounds = cfg.workload.rounds  # 50-round workload at every point
    return analysis.sweep({"sense_r_ron": [0.5, 1.0, 2.0, 4.0, 8.0]}, cfg.to_dict(), sweep_point)


# -- 1 ----------------------------------------------------------------------------------------


def test_criterion_1_device_calibration():
    t0 = time.perf_counter()
    i_on = device_current(1.0, 1.0, P)
    r_on = read_resistance(1.0, P)
    x_set = advance_state(P.x0, 7.0, 10e-9, P)
    x_reset = advance_state(x_set, -7.0, 10e-9, P)
    r_off = read_resistance(x_reset, P)
    dev = run_device_test(ExperimentConfig()).summary  # same pulses through the circuit solver
    elapsed = time.perf_counter() - t0
    verdict(1, "device calibration", [
        (f"I_on(1V) = {i_on * 1e6:.4f} uA in 8.00 +- 0.05", abs(i_on - 8.00e-6) <= 0.05e-6),
        (f"R_on = {r_on / 1e3:.3f} kOhm within 1% of 124.95", abs(r_on / R_ON_TARGET - 1) <= 0.01),
        (f"+7V/10ns from x0 -> x = {x_set:.6f} >= 0.985", x_set >= 0.985),
        (f"-7V/10ns from ON -> R_off = {r_off:.4e} >= 1.2e11", r_off >= 1.2e11),
        (f"R_off/R_on = {r_off / r_on:.4e} >= 1e6", r_off / r_on >= 1e6),
        (f"circuit-level set x_max = {dev['x_max']:.6f} >= 0.985", dev["x_max"] >= 0.985),
        (f"circuit-level reset read = {dev['read_resistances_ohm'][2]:.4e} >= 1.2e11",
         dev["read_resistances_ohm"][2] >= 1.2e11),
        (f"runtime {elapsed:.3f} s < 1 s", elapsed < 1.0),
    ])


# -- 2 ----------------------------------------------------------------------------------------


def test_criterion_2_threshold_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    n = 10_000
    v = rng.uniform(-P.v_safe, P.v_safe, size=n)
    v[:4] = [P.Vp, -P.Vn, 0.0, 1.0]  # the edges of the dead band are included
    dt = 10 ** rng.uniform(-12, -6, size=n)
    x0 = rng.uniform(P.x_floor, 1.0)
    x = x0
    for k in range(n):  # one device, a train of 1e4 pulses
        x = advance_state(x, v[k], dt[k], P)
    xs = rng.uniform(P.x_floor, 1.0, size=n)  # and 1e4 devices, one pulse each
    moved = np.count_nonzero(advance_state(xs, v, 1e-6, P) != xs)
    elapsed = time.perf_counter() - t0
    verdict(2, "threshold exactness", [
        (f"pulse train leaves x bit-identical ({x!r} vs {x0!r})", x == x0),
        (f"{moved} of {n} devices moved", moved == 0),
        (f"runtime {elapsed:.3f} s < 5 s", elapsed < 5.0),
    ])


# -- 3 ----------------------------------------------------------------------------------------


def _ladder(rng):
    n = int(rng.integers(2, 31))
    series = [int(v) for v in rng.integers(1, 10**6, size=n - 1)]
    shunt = [int(v) for v in rng.integers(1, 10**7, size=n)]
    vs = int(rng.integers(-9000, 9001)) / 1000
    net = Netlist()
    nodes = [net.node(f"n{k}") for k in range(n)]
    net.add(VSource("V", nodes[0]))
    for k, (a, b) in enumerate(zip(nodes, nodes[1:])):
        net.add(Resistor(f"R{k}", a, b, series[k]))
    for k, a in enumerate(nodes):
        net.add(Resistor(f"P{k}", a, GROUND, shunt[k]))
    got = solve_operating_point(net, {"V": vs})
    want = ladder_oracle(Fraction(vs), series, shunt)
    return max(abs(got[nd] - float(w)) / max(abs(float(w)), 1e-300) for nd, w in zip(nodes, want) if w != 0)


def _power_mismatch(net, prog):
    idx = {n: i for i, n in enumerate(net.nodes[1:])}

    def pairs(elems):
        return np.array([[idx.get(e.a, -1), idx.get(e.b, -1)] for e in elems], dtype=int).reshape(-1, 2)

    res, sws, src = pairs(net.resistors), pairs(net.switches), pairs(net.sources)
    g = np.array([1.0 / r.r for r in net.resistors])
    worst = [0.0, 0]

    def drop(v, ab):
        vv = np.append(v, 0.0)  # index -1 is ground
        return vv[ab[:, 0]] - vv[ab[:, 1]]

    def obs(info):
        p_src = float(np.dot(info.src_i, drop(info.node_v, src)))
        p_el = float(np.dot(g, drop(info.node_v, res) ** 2) + np.dot(info.switch_i, drop(info.node_v, sws))
                     + np.dot(info.mem_v, info.mem_i))
        worst[0] = max(worst[0], abs(p_src - p_el) / max(abs(p_src), 1e-12))
        worst[1] += 1

    transient_run(net, prog, probe_nodes=[], probe_mems=[], observer=obs)
    return worst


def test_criterion_3_solver_oracle():
    rng = np.random.default_rng(3)
    errs = [_ladder(rng) for _ in range(50)]
    spec = HybridArraySpec()
    net, nm = build_hybrid(spec)
    _, _, prog = generate_workload(5, 1, spec, TimingConfig(), nm)
    worst, steps = _power_mismatch(net, prog)
    verdict(3, "solver oracle", [
        (f"50 ladders, max rel error {max(errs):.2e} <= 1e-9", max(errs) <= 1e-9),
        (f"power balance over {steps} steps, worst rel {worst:.2e} <= 1e-6", worst <= 1e-6),
    ])


# -- 4 ----------------------------------------------------------------------------------------


def test_criterion_4_crossbar_energy_trend():
    out = run_energy_scaling(ExperimentConfig(), [4, 8, 12, 16])
    e = out.summary["write_energy_J"]
    shown = ", ".join(f"{n}: {v * 1e12:.3f} pJ" for n, v in zip(out.summary["sizes"], e))
    verdict(4, "unconstrained crossbar write energy trend", [
        (f"strictly increasing ({shown})", all(b > a for a, b in zip(e, e[1:]))),
        (f"16x16 / 4x4 = {e[-1] / e[0]:.2f} >= 3", e[-1] >= 3 * e[0]),
    ])


# -- 5 ----------------------------------------------------------------------------------------


def test_criterion_5_table1_bands(tile4, tile8, rs_sweep):
    _, rep4, en4 = tile4
    _, rep8, en8 = tile8
    margins = {r.coords["sense_r_ron"]: r.result["margin"] for r in rs_sweep if r.ok}
    others = [m for k, m in margins.items() if k != 8.0]
    best4 = max(margins.values()) if margins else 0.0
    shown = ", ".join(f"{k:g}Ron: {m * 1e3:.1f} mV" for k, m in sorted(margins.items()))
    verdict(5, "table 1 bands and orderings", [
        (f"4x4 write {en4.write_energy_per_bit * 1e12:.3f} pJ/bit in [1, 10]",
         1e-12 <= en4.write_energy_per_bit <= 10e-12),
        (f"8x8 write {en8.write_energy_per_bit * 1e12:.3f} > 4x4 write", en8.write_energy_per_bit > en4.write_energy_per_bit),
        (f"4x4 read {en4.read_energy_per_bit * 1e15:.3f} fJ/bit in [1, 50]",
         1e-15 <= en4.read_energy_per_bit <= 50e-15),
        (f"8x8 read {en8.read_energy_per_bit * 1e15:.3f} fJ/bit in [1, 50]",
         1e-15 <= en8.read_energy_per_bit <= 50e-15),
        (f"margin 4x4 opt {best4 * 1e3:.1f} mV > 8x8 opt {rep8.margin * 1e3:.1f} mV "
         f"(errors {rep4.errors}/{rep4.n_samples} vs {rep8.errors}/{rep8.n_samples})", best4 > rep8.margin),
        (f"R_s sweep argmax unique at 8 Ron ({shown})",
         len(margins) == 5 and all(margins[8.0] > m for m in others)),
    ])


# -- 6 ----------------------------------------------------------------------------------------


def test_criterion_6_peak_switch_current(tile4, tile8):
    p4, p8 = tile4[2].peak_switch_current, tile8[2].peak_switch_current
    verdict(6, "peak switch current", [
        (f"4x4 peak {p4 * 1e6:.1f} uA within 3x of 120 uA", 40e-6 <= p4 <= 360e-6),
        (f"8x8 peak {p8 * 1e6:.1f} uA > 4x4 peak", p8 > p4),
    ])


# -- 7 ----------------------------------------------------------------------------------------


def test_criterion_7_density_table():
    spec = AreaSpec()
    rows = {r.name: r.gbits_per_cm2 for r in comparison_table(spec)}
    ratios = density_ratios(comparison_table(spec), spec)
    want = {"Hybrid (4x4)": 1.98, "Hybrid (8x8)": 3.95, "1kB Crossbar": 12.35}
    checks = [(f"{k} {rows[k]:.4f} = {v} +- 0.01", abs(rows[k] - v) <= 0.01) for k, v in want.items()]
    checks += [
        (f"SRAM {rows['SRAM']:.4f} -> 0.338", round(rows["SRAM"], 3) == 0.338),
        (f"STT-MRAM {rows['STT-MRAM']:.4f} -> 0.760", round(rows["STT-MRAM"], 3) == 0.760),
        (f"4x4/1T1M = {ratios['Hybrid (4x4) / 1T1M']!r}", abs(ratios["Hybrid (4x4) / 1T1M"] - 2) < 1e-12),
        (f"8x8/1T1M = {ratios['Hybrid (8x8) / 1T1M']!r}", abs(ratios["Hybrid (8x8) / 1T1M"] - 4) < 1e-12),
    ]
    verdict(7, "density table", checks)


# -- 8 ----------------------------------------------------------------------------------------


def _report_bytes(cfg):
    rep, samples, *_ = margin_run(cfg, rounds=10)
    return rep, json.dumps({"report": rep.to_dict(), "peaks": [s.peak for s in samples]}, sort_keys=True)


def test_criterion_8_round_trip():
    spec = HybridArraySpec(tiles_x=1, tiles_y=1, wire_r=0.0, switch=SwitchParams(0.0, 1e10))
    net, nm = build_hybrid(spec)
    _, ans, prog = generate_workload(8, 10, spec, TimingConfig(), nm)
    tr = transient_run(net, prog, probe_nodes=nm.sense_nodes, probe_mems=[])
    samples = analysis.read_samples(tr, prog, ans, nm)
    thr = comparator_threshold(spec)
    errors = sum(digitize(s.peak, thr) != s.expected for s in samples)

    cfg = apply_overrides(preset("tile4"), ["topology.tiles_x=1", "topology.tiles_y=1"])
    rep_a, bytes_a = _report_bytes(cfg)
    rep_b, bytes_b = _report_bytes(cfg)
    verdict(8, "end-to-end round trip", [
        (f"ideal tile: {errors} digitization errors in {len(samples)} reads (threshold {thr:.3f} V)", errors == 0),
        (f"wired tile: errors {rep_a.errors} == {rep_b.errors}, margin {rep_a.margin!r} == {rep_b.margin!r}",
         rep_a.errors == rep_b.errors and rep_a.margin == rep_b.margin),
        ("wired tile: reports byte-identical", bytes_a == bytes_b),
    ])


# -- 9 ----------------------------------------------------------------------------------------

SMALL = ["--seed", "11", "--set", "workload.rounds=2", "--set", "workload.energy_writes=2",
         "--set", "topology.tiles_x=1", "--set", "topology.tiles_y=1", "--set", "sweep.rounds=2",
         "--set", "sweep.sense_r_ron=[1,8]", "--set", "scaling.sizes=[2,3]", "--set", "scaling.writes=2",
         "--set", "scaling.backgrounds=2"]


def test_criterion_9_reproducibility(tmp_path, capsys):
    checks = []
    for command in cli.COMMANDS:
        rc = cli.main([command, "--out", str(tmp_path)] + SMALL)
        run_dir = Path(capsys.readouterr().out.strip().splitlines()[-1])
        rc2 = cli.main(["rerun", str(run_dir / "manifest.json"), "--check", "--out", str(tmp_path / "re")])
        rerun_dir = Path(capsys.readouterr().out.strip().splitlines()[-1])
        man = json.loads((run_dir / "manifest.json").read_text())
        same = all((run_dir / f).read_bytes() == (rerun_dir / f).read_bytes() for f in man["files"])
        checks.append((f"{command}: {len(man['files'])} files rerun identical", rc == 0 and rc2 == 0 and same))
    verdict(9, "reproducibility from manifests", checks)
