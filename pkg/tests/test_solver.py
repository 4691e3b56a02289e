from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridmem.device import DeviceParams
from hybridmem.solver import (GROUND, Memristor, Netlist, Resistor, Schedule, SingularNetwork, SolverConfig,
                              Switch, VSource, energy_between, solve_operating_point, transient_run)

P = DeviceParams()


# -- ladder oracle -------------------------------------------------------------------


def ladder_oracle(vs: Fraction, series: list[int], shunt: list[int]) -> list[Fraction]:
    """Exact node voltages of a source-driven ladder by back-to-front reduction.

    Node k (k = 1..n) connects to node k+1 through ``series[k-1]`` and to
    ground through ``shunt[k-1]``; the source drives node 1 directly.
    """
    n = len(shunt)
    z = [Fraction(0)] * (n + 1)
    z[n] = Fraction(shunt[n - 1])
    for k in range(n - 1, 0, -1):
        down = series[k - 1] + z[k + 1]
        z[k] = Fraction(shunt[k - 1]) * down / (shunt[k - 1] + down)
    v = [vs]
    for k in range(1, n):
        v.append(v[-1] * z[k + 1] / (series[k - 1] + z[k + 1]))
    return v


@st.composite
def ladders(draw):
    n = draw(st.integers(2, 30))
    series = draw(st.lists(st.integers(1, 10**6), min_size=n - 1, max_size=n - 1))
    shunt = draw(st.lists(st.integers(1, 10**7), min_size=n, max_size=n))
    kinds = draw(st.lists(st.sampled_from(["R", "S", "I"]), min_size=n - 1, max_size=n - 1))
    vs = draw(st.integers(-9000, 9000)) / 1000
    return vs, series, shunt, kinds


@settings(max_examples=50)
@given(ladders())
def test_random_ladder_matches_oracle(case):
    vs, series, shunt, kinds = case
    net = Netlist()
    nodes = [net.node(f"n{k}") for k in range(1, len(shunt) + 1)]
    net.add(VSource("V", nodes[0]))
    series = list(series)
    for k, (a, b) in enumerate(zip(nodes, nodes[1:])):
        if kinds[k] == "R":
            net.add(Resistor(f"R{k}", a, b, series[k]))
        elif kinds[k] == "S":  # closed non-ideal switch
            net.add(Switch(f"S{k}", a, b, "G", r_closed=series[k], r_open=1e12))
        else:  # ideal closed switch: zero series resistance
            net.add(Switch(f"S{k}", a, b, "G", r_closed=0.0))
            series[k] = 0
    for k, a in enumerate(nodes):
        net.add(Resistor(f"P{k}", a, GROUND, shunt[k]))
    got = solve_operating_point(net, {"V": vs}, {"G": True})
    want = ladder_oracle(Fraction(vs), series, shunt)
    for node, w in zip(nodes, want):
        assert got[node] == pytest.approx(float(w), rel=1e-9, abs=1e-15)


def test_ladder_oracle_self_check():
    # two equal resistors: a plain divider
    assert ladder_oracle(Fraction(2), [1], [10**9, 1])[1] == pytest.approx(Fraction(1), rel=1e-8)


# -- nonlinear operating points ------------------------------------------------------------------


def test_memristor_with_series_resistor():
    net = Netlist()
    net.node("a")
    net.node("m")
    net.add(VSource("V", "a"))
    net.add(Resistor("R", "a", "m", 500.0))
    net.add(Memristor("M", "m", GROUND, P, 1.0))
    v = solve_operating_point(net, {"V": 1.0})
    # mpmath root of v + 500 * I(v) = 1
    assert v["m"] == pytest.approx(0.996014295795123619, rel=1e-10)


def test_open_switch_leaks_through_r_open():
    net = Netlist()
    net.node("a")
    net.node("b")
    net.add(VSource("V", "a"))
    net.add(Switch("S", "a", "b", "G", r_closed=1e3, r_open=1e9))
    net.add(Resistor("R", "b", GROUND, 1e9))
    assert solve_operating_point(net, {"V": 2.0})["b"] == pytest.approx(1.0, rel=1e-12)
    assert solve_operating_point(net, {"V": 2.0}, {"G": True})["b"] == pytest.approx(2.0 * 1e9 / (1e9 + 1e3))


def test_floating_node_is_reported():
    net = Netlist()
    net.node("a")
    net.node("b")
    net.add(VSource("V", "a"))
    net.add(Switch("S", "a", "b", "G", r_closed=0.0, r_open=float("inf")))
    with pytest.raises(SingularNetwork, match="floating"):
        solve_operating_point(net, {"V": 1.0})


def test_netlist_rejects_bad_references():
    net = Netlist()
    net.node("a")
    net.add(Resistor("R", "a", GROUND, 1.0))
    with pytest.raises(ValueError):
        net.add(Resistor("R", "a", GROUND, 1.0))
    with pytest.raises(ValueError):
        net.add(Resistor("R2", "a", "nowhere", 1.0))


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule({"V": [(1e-9, 0.0), (1e-9, 1.0)]}, {}, 2e-9).validate()
    with pytest.raises(ValueError):
        Schedule({}, {}, 0.0).validate()
    s = Schedule({"V": [(0.0, 0.0), (1e-9, 2.0)]}, {"G": [(1e-9, True)]}, 2e-9)
    assert s.value("V", 0.5e-9) == pytest.approx(1.0)
    assert s.value("missing", 0.5e-9) == 0.0
    assert not s.gate("G", 0.5e-9) and s.gate("G", 1e-9)


# -- transient --------------------------------------------------------------------


def _mixed_net():
    net = Netlist()
    for n in ("a", "b", "c", "d"):
        net.node(n)
    net.add(VSource("V1", "a"))
    net.add(VSource("V2", "d"))
    net.add(Resistor("R1", "a", "b", 500.0))
    net.add(Memristor("M1", "b", "c", P, 0.5))
    net.add(Memristor("M2", "c", GROUND, P, 0.02))
    net.add(Switch("S1", "c", "d", "G", r_closed=1e3, r_open=1e10))
    net.add(Switch("S2", "b", "d", "H", r_closed=0.0, r_open=1e10))
    net.add(Resistor("R2", "d", GROUND, 2e3))
    return net


def _mixed_schedule():
    return Schedule(
        {"V1": [(0.5e-9, 0.0), (0.6e-9, 7.0), (5e-9, 7.0), (5.1e-9, -6.0), (9e-9, -6.0), (9.1e-9, 0.0)],
         "V2": [(2e-9, 0.0), (2.1e-9, 1.5), (7e-9, 1.5), (7.1e-9, 0.0)]},
        {"G": [(1e-9, True), (6e-9, False)], "H": [(8e-9, True), (8.5e-9, False)]},
        10e-9)


def test_power_balance_every_step():
    net = _mixed_net()
    idx = {n: i for i, n in enumerate(net.nodes[1:])}
    res = [(idx[r.a], idx.get(r.b, -1), r.r) for r in net.resistors]
    sws = [(idx[s.a], idx.get(s.b, -1)) for s in net.switches]
    src = [(idx[s.a], idx.get(s.b, -1)) for s in net.sources]
    worst = []

    def volt(v, i):
        return 0.0 if i < 0 else v[i]

    def obs(info):
        v = info.node_v
        p_src = sum(info.src_i[k] * (volt(v, a) - volt(v, b)) for k, (a, b) in enumerate(src))
        p_el = sum((volt(v, a) - volt(v, b)) ** 2 / r for a, b, r in res)
        p_el += sum(info.switch_i[k] * (volt(v, a) - volt(v, b)) for k, (a, b) in enumerate(sws))
        p_el += float(np.dot(info.mem_v, info.mem_i))
        worst.append(abs(p_src - p_el) / max(abs(p_src), 1e-12))

    tr = transient_run(net, _mixed_schedule(), observer=obs)
    assert len(worst) == len(tr.t)
    assert max(worst) < 1e-6
    assert tr.state("M2")[-1] != 0.02  # the run did switch something


def test_transient_is_deterministic():
    a = transient_run(_mixed_net(), _mixed_schedule())
    b = transient_run(_mixed_net(), _mixed_schedule())
    for f in ("t", "v", "mem_v", "mem_i", "mem_x", "power", "energy", "switch_peak", "final_x"):
        assert np.array_equal(getattr(a, f), getattr(b, f)), f
    assert a.to_csv() == b.to_csv()


def test_subthreshold_transient_leaves_states():
    net = _mixed_net()
    x0 = net.states().copy()
    sched = Schedule({"V1": [(0.0, 0.0), (1e-9, 1.0), (3e-9, 1.0), (4e-9, 0.0)]}, {"G": [(0.0, True)]}, 5e-9)
    tr = transient_run(net, sched)
    assert np.array_equal(tr.final_x, x0)
    assert np.array_equal(net.states(), x0)


def test_resistor_pulse_energy():
    net = Netlist()
    net.node("a")
    net.add(VSource("V", "a"))
    net.add(Resistor("R", "a", GROUND, 1e3))
    ramp, width = 0.1e-9, 10e-9
    sched = Schedule({"V": [(1e-9, 0.0), (1e-9 + ramp, 1.0), (1e-9 + ramp + width, 1.0),
                            (1e-9 + 2 * ramp + width, 0.0)]}, {}, 13e-9)
    tr = transient_run(net, sched, SolverConfig(dt=0.01e-9))
    exact = (width + 2 * ramp / 3) / 1e3
    assert tr.total_energy == pytest.approx(exact, rel=1e-4)
    assert energy_between(tr, 0.0, 13e-9) == pytest.approx(tr.total_energy)
    with pytest.raises(ValueError):
        energy_between(tr, 0.0, 20e-9)


def test_csv_layout():
    net = _mixed_net()
    tr = transient_run(net, _mixed_schedule(), probe_nodes=["b"], probe_mems=["M1"])
    text = tr.to_csv(["v:b", "i:M1", "x:M1"])
    lines = text.split("\n")
    assert lines[0] == "time_ns,v:b,i:M1,x:M1,energy_J"
    assert "\r" not in text and text.endswith("\n")
    assert len(lines) == len(tr.t) + 2
