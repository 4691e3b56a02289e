"""Resistive-network transient solver.

Modified nodal analysis with one branch-current unknown per voltage source.
Memristors enter through a Newton companion model (conductance plus
equivalent current); their states are frozen during each network solve and
advanced afterwards with the solved branch voltage (operator splitting).
"""
from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import device
from .device import DeviceParams

GROUND = "0"


class SolverError(RuntimeError):
    """Base class for network solve failures."""

    def __init__(self, msg: str, t: float | None = None):
        self.t = t
        if t is not None:
            msg = f"{msg} (at t={t * 1e9:.4f} ns)"
        super().__init__(msg)


class SingularNetwork(SolverError):
    pass


class NewtonDivergence(SolverError):
    pass


# -- netlist ---------------------------------------------------------------


@dataclass(frozen=True)
class Resistor:
    name: str
    a: str
    b: str
    r: float


@dataclass(frozen=True)
class Switch:
    """Two-state resistor driven by a named gate timeline."""

    name: str
    a: str
    b: str
    gate: str
    r_closed: float = 1e3
    r_open: float = 1e10


@dataclass(frozen=True)
class VSource:
    """Voltage source, ``v(a) - v(b) = waveform(t)``."""

    name: str
    a: str
    b: str = GROUND
    waveform: str | None = None

    @property
    def wave_id(self) -> str:
        return self.waveform or self.name


@dataclass
class Memristor:
    """Memristor from ``a`` to ``b``; positive v(a)-v(b) drives x upward."""

    name: str
    a: str
    b: str
    params: DeviceParams
    x: float | None = None

    def __post_init__(self):
        if self.x is None:
            self.x = self.params.x0


@dataclass
class Netlist:
    nodes: list[str] = field(default_factory=lambda: [GROUND])
    elements: list = field(default_factory=list)

    def __post_init__(self):
        self._node_set = set(self.nodes)
        self._names: set[str] = {e.name for e in self.elements}

    def node(self, name: str) -> str:
        if name not in self._node_set:
            self._node_set.add(name)
            self.nodes.append(name)
        return name

    def add(self, elem):
        if elem.name in self._names:
            raise ValueError(f"duplicate element name {elem.name!r}")
        for n in (elem.a, elem.b):
            if n not in self._node_set:
                raise ValueError(f"{elem.name}: unknown node {n!r}")
        self._names.add(elem.name)
        self.elements.append(elem)
        return elem

    def of_type(self, cls) -> list:
        return [e for e in self.elements if isinstance(e, cls)]

    @property
    def resistors(self) -> list[Resistor]:
        return self.of_type(Resistor)

    @property
    def switches(self) -> list[Switch]:
        return self.of_type(Switch)

    @property
    def sources(self) -> list[VSource]:
        return self.of_type(VSource)

    @property
    def memristors(self) -> list[Memristor]:
        return self.of_type(Memristor)

    def counts(self) -> dict[str, int]:
        return {
            "nodes": len(self.nodes),
            "resistors": len(self.resistors),
            "switches": len(self.switches),
            "sources": len(self.sources),
            "memristors": len(self.memristors),
        }

    def states(self) -> np.ndarray:
        return np.array([m.x for m in self.memristors], dtype=float)

    def set_states(self, x) -> None:
        for m, xi in zip(self.memristors, np.asarray(x, dtype=float)):
            m.x = float(xi)

    def listing(self) -> str:
        """Human-readable dump, one element per line."""
        out = [f"* {len(self.nodes)} nodes, " + ", ".join(f"{v} {k}" for k, v in self.counts().items() if k != "nodes")]
        for e in self.elements:
            if isinstance(e, Resistor):
                out.append(f"R {e.name} {e.a} {e.b} {e.r:g}")
            elif isinstance(e, Switch):
                out.append(f"S {e.name} {e.a} {e.b} gate={e.gate} ron={e.r_closed:g} roff={e.r_open:g}")
            elif isinstance(e, VSource):
                out.append(f"V {e.name} {e.a} {e.b} wave={e.wave_id}")
            elif isinstance(e, Memristor):
                out.append(f"M {e.name} {e.a} {e.b} x={e.x:.6g}")
        return "\n".join(out)


# -- schedule --------------------------------------------------------------


@dataclass
class Schedule:
    """Piecewise-linear source waveforms and piecewise-constant gate timelines.

    ``waveforms[id]`` is a list of ``(t, volts)`` with strictly increasing
    times; the value is held constant outside the breakpoints and a missing
    waveform reads as 0 V. ``gates[id]`` is a list of ``(t, closed)``: the
    gate takes state ``closed`` from ``t`` onward (open before the first
    entry).
    """

    waveforms: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    gates: dict[str, list[tuple[float, bool]]] = field(default_factory=dict)
    t_end: float = 0.0

    def validate(self) -> None:
        for k, pts in self.waveforms.items():
            ts = [t for t, _ in pts]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError(f"waveform {k!r}: breakpoint times not strictly increasing")
        for k, pts in self.gates.items():
            ts = [t for t, _ in pts]
            if any(b < a for a, b in zip(ts, ts[1:])):
                raise ValueError(f"gate {k!r}: times decreasing")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")

    def value(self, wave_id: str, t: float) -> float:
        pts = self.waveforms.get(wave_id)
        if not pts:
            return 0.0
        ts = [p[0] for p in pts]
        return float(np.interp(t, ts, [p[1] for p in pts]))

    def gate(self, gate_id: str, t: float) -> bool:
        pts = self.gates.get(gate_id)
        if not pts:
            return False
        i = bisect.bisect_right([p[0] for p in pts], t) - 1
        return bool(pts[i][1]) if i >= 0 else False

    def listing(self) -> str:
        out = [f"* t_end = {self.t_end * 1e9:.4f} ns"]
        for k in sorted(self.waveforms):
            pts = " ".join(f"({t * 1e9:.4g}ns,{v:.4g}V)" for t, v in self.waveforms[k])
            out.append(f"W {k} {pts}")
        for k in sorted(self.gates):
            pts = " ".join(f"({t * 1e9:.4g}ns,{'on' if s else 'off'})" for t, s in self.gates[k])
            out.append(f"G {k} {pts}")
        return "\n".join(out)


class _WaveTable:
    """Vectorised evaluation of all waveforms and gates of a schedule."""

    def __init__(self, sched: Schedule, wave_ids: list[str], gate_ids: list[str]):
        self.waves = []
        for w in wave_ids:
            pts = sched.waveforms.get(w) or [(0.0, 0.0)]
            self.waves.append((np.array([p[0] for p in pts]), np.array([p[1] for p in pts])))
        self.gates = []
        for g in gate_ids:
            pts = sched.gates.get(g) or []
            self.gates.append(([p[0] for p in pts], [bool(p[1]) for p in pts]))

    def sources(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, ts, vs) for ts, vs in self.waves])

    def gate_states(self, t: float) -> tuple[bool, ...]:
        out = []
        for ts, ss in self.gates:
            i = bisect.bisect_right(ts, t) - 1
            out.append(ss[i] if i >= 0 else False)
        return tuple(out)


# -- compiled system -------------------------------------------------------


@dataclass
class SolverConfig:
    dt: float = 0.05e-9
    v_tol: float = 1e-9
    i_tol: float = 1e-12
    max_iter: int = 100

    def __post_init__(self):
        if not (self.dt > 0 and self.v_tol > 0 and self.i_tol > 0 and self.max_iter > 0):
            raise ValueError("solver settings must be strictly positive")


class System:
    """Index-compiled form of a :class:`Netlist` for repeated solves.

    The sparsity pattern covers every element (switches in both states), so
    one pattern serves every gate configuration and Newton iterate.
    """

    def __init__(self, net: Netlist):
        self.net = net
        self.node_index = {n: i - 1 for i, n in enumerate(net.nodes)}  # ground -> -1
        self.n_nodes = len(net.nodes) - 1
        self.resistors = net.resistors
        self.switches = net.switches
        self.sources = net.sources
        self.memristors = net.memristors

        idx = self.node_index
        ra = np.array([idx[e.a] for e in self.resistors], dtype=int)
        rb = np.array([idx[e.b] for e in self.resistors], dtype=int)
        if any(e.r <= 0 for e in self.resistors):
            raise ValueError("resistors need r > 0; merge the nodes instead of a zero-ohm wire")
        self.g_res = np.array([1.0 / e.r for e in self.resistors])
        sa = np.array([idx[e.a] for e in self.switches], dtype=int)
        sb = np.array([idx[e.b] for e in self.switches], dtype=int)
        # zero-ohm (ideal) switches carry their own branch-current unknown
        self.sw_ideal = np.array([e.r_closed == 0 for e in self.switches], dtype=bool)
        self.ideal_ix = np.flatnonzero(self.sw_ideal)
        self.g_sw_closed = np.array([0.0 if e.r_closed == 0 else 1.0 / e.r_closed for e in self.switches])
        self.g_sw_open = np.array([0.0 if math.isinf(e.r_open) else 1.0 / e.r_open for e in self.switches])
        self.gate_ids = sorted({e.gate for e in self.switches})
        gpos = {g: i for i, g in enumerate(self.gate_ids)}
        self.sw_gate = np.array([gpos[e.gate] for e in self.switches], dtype=int)
        self.src_a = np.array([idx[e.a] for e in self.sources], dtype=int)
        self.src_b = np.array([idx[e.b] for e in self.sources], dtype=int)
        self.wave_ids = [e.wave_id for e in self.sources]
        self.mem_a = np.array([idx[e.a] for e in self.memristors], dtype=int)
        self.mem_b = np.array([idx[e.b] for e in self.memristors], dtype=int)
        self.sw_a, self.sw_b = sa, sb
        self.res_a, self.res_b = ra, rb
        self.n_src = len(self.sources)
        self.n = self.n_nodes + self.n_src + len(self.ideal_ix)

        # memristors grouped by parameter set so the model evaluates vectorised
        groups: dict[DeviceParams, list[int]] = {}
        for i, m in enumerate(self.memristors):
            groups.setdefault(m.params, []).append(i)
        self.mem_groups = [(p, np.array(ix, dtype=int)) for p, ix in groups.items()]

        # Every matrix entry is sign * weight[owner]; weights are rebuilt per
        # solve as [g_res, g_sw, g_mem, 1, closed(ideal), open(ideal)].
        n_r, n_s, n_m, n_i = len(self.resistors), len(self.switches), len(self.memristors), len(self.ideal_ix)
        self._w_one = n_r + n_s + n_m
        entries: list[tuple[int, int]] = []
        signs: list[float] = []
        owner: list[int] = []

        def put(r_, c_, sgn, own):
            if r_ >= 0 and c_ >= 0:
                entries.append((r_, c_))
                signs.append(sgn)
                owner.append(own)

        def add_quads(aa, bb, base):
            for k, (a, b) in enumerate(zip(aa, bb)):
                for r_, c_, sgn in ((a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)):
                    put(r_, c_, sgn, base + k)

        add_quads(ra, rb, 0)
        add_quads(sa, sb, n_r)
        add_quads(self.mem_a, self.mem_b, n_r + n_s)
        for k, (a, b) in enumerate(zip(self.src_a, self.src_b)):
            j = self.n_nodes + k
            # KCL: current j leaves the + terminal into the circuit
            put(a, j, -1.0, self._w_one)
            put(b, j, 1.0, self._w_one)
            put(j, a, 1.0, self._w_one)
            put(j, b, -1.0, self._w_one)
        for k, s_ix in enumerate(self.ideal_ix):
            j = self.n_nodes + self.n_src + k
            a, b = sa[s_ix], sb[s_ix]
            # branch current j flows a -> b; closed: v_a = v_b, open: j = 0
            put(a, j, 1.0, self._w_one)
            put(b, j, -1.0, self._w_one)
            put(j, a, 1.0, self._w_one + 1 + k)
            put(j, b, -1.0, self._w_one + 1 + k)
            put(j, j, 1.0, self._w_one + 1 + n_i + k)
        er = np.array([e[0] for e in entries], dtype=int)
        ec = np.array([e[1] for e in entries], dtype=int)
        self._signs = np.array(signs)
        self._owner = np.array(owner, dtype=int)
        # map entries to CSC positions
        key = ec * self.n + er
        uniq, pos = np.unique(key, return_inverse=True)
        self._pos = pos
        self._nnz = len(uniq)
        self._indices = (uniq % self.n).astype(np.int32)
        col_of = uniq // self.n
        self._indptr = np.searchsorted(col_of, np.arange(self.n + 1)).astype(np.int32)
        self._conn_cache: dict[tuple[bool, ...], list[str]] = {}
        self._lin_cache: dict[tuple[bool, ...], sp.csc_matrix] = {}
        n_m = len(self.memristors)
        inc_r = np.concatenate([np.arange(n_m)[self.mem_a >= 0], np.arange(n_m)[self.mem_b >= 0]])
        inc_c = np.concatenate([self.mem_a[self.mem_a >= 0], self.mem_b[self.mem_b >= 0]])
        inc_v = np.concatenate([np.ones(int(np.sum(self.mem_a >= 0))), -np.ones(int(np.sum(self.mem_b >= 0)))])
        self._mem_inc = sp.csr_matrix((inc_v, (inc_r, inc_c)), shape=(n_m, self.n))
        self._mem_inc_t = self._mem_inc.T.tocsr()
        self._lu = None
        self._lu_gates = None

    def _closed(self, gates: tuple[bool, ...]) -> np.ndarray:
        if not len(self.switches):
            return np.zeros(0, dtype=bool)
        return np.array(gates, dtype=bool)[self.sw_gate]

    def switch_conductance(self, gates: tuple[bool, ...]) -> np.ndarray:
        """Finite conductance per switch (0 for a closed ideal switch; its current is a branch unknown)."""
        return np.where(self._closed(gates), self.g_sw_closed, self.g_sw_open)

    def switch_currents(self, u: np.ndarray, gates: tuple[bool, ...]) -> np.ndarray:
        i_sw = self.switch_conductance(gates) * self.branch_voltages(u, self.sw_a, self.sw_b)
        if len(self.ideal_ix):
            closed = self._closed(gates)[self.ideal_ix]
            j = u[self.n_nodes + self.n_src:]
            i_sw[self.ideal_ix] = np.where(closed, j, i_sw[self.ideal_ix])
        return i_sw

    def matrix(self, gates: tuple[bool, ...], g_mem: np.ndarray) -> sp.csc_matrix:
        c = self._closed(gates)[self.ideal_ix].astype(float)
        w = np.concatenate([self.g_res, self.switch_conductance(gates), g_mem, [1.0], c, 1.0 - c])
        data = np.bincount(self._pos, weights=self._signs * w[self._owner], minlength=self._nnz)
        return sp.csc_matrix((data, self._indices, self._indptr), shape=(self.n, self.n))

    def floating_nodes(self, gates: tuple[bool, ...]) -> list[str]:
        """Nodes with no conductive path to ground in this gate configuration."""
        if gates in self._conn_cache:
            return self._conn_cache[gates]
        parent = list(range(self.n_nodes + 1))  # index n_nodes is ground

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        def union(a, b):
            a = self.n_nodes if a < 0 else a
            b = self.n_nodes if b < 0 else b
            ra_, rb_ = find(a), find(b)
            if ra_ != rb_:
                parent[ra_] = rb_

        for a, b in zip(self.res_a, self.res_b):
            union(a, b)
        conducts = (self.switch_conductance(gates) > 0) | (self._closed(gates) & self.sw_ideal)
        for a, b, on in zip(self.sw_a, self.sw_b, conducts):
            if on:
                union(a, b)
        for a, b in zip(self.mem_a, self.mem_b):
            union(a, b)
        for a, b in zip(self.src_a, self.src_b):
            union(a, b)
        root = find(self.n_nodes)
        names = self.net.nodes[1:]
        bad = [names[i] for i in range(self.n_nodes) if find(i) != root]
        self._conn_cache[gates] = bad
        return bad

    def branch_voltages(self, u: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if not len(a):
            return np.zeros(0)
        u_ext = np.append(u[: self.n_nodes], 0.0)  # index -1 -> ground
        return u_ext[a] - u_ext[b]

    def mem_voltages(self, u: np.ndarray) -> np.ndarray:
        return self._mem_inc @ u

    def mem_eval(self, vd: np.ndarray, x: np.ndarray):
        if len(self.mem_groups) == 1:
            p = self.mem_groups[0][0]
            return device.device_current(vd, x, p), device.device_conductance(vd, x, p)
        i = np.empty_like(vd)
        g = np.empty_like(vd)
        for p, ix in self.mem_groups:
            i[ix] = device.device_current(vd[ix], x[ix], p)
            g[ix] = device.device_conductance(vd[ix], x[ix], p)
        return i, g

    def _inject(self, rhs: np.ndarray, a: np.ndarray, b: np.ndarray, cur: np.ndarray) -> None:
        # current ``cur`` flowing a -> b through the branch leaves node a
        ma, mb = a >= 0, b >= 0
        np.add.at(rhs, a[ma], -cur[ma])
        np.add.at(rhs, b[mb], cur[mb])

    def linear_matrix(self, gates: tuple[bool, ...]) -> sp.csc_matrix:
        A = self._lin_cache.get(gates)
        if A is None:
            A = self._lin_cache[gates] = self.matrix(gates, np.zeros(len(self.memristors)))
        return A

    def residual(self, u: np.ndarray, rhs0: np.ndarray, gates: tuple[bool, ...], x: np.ndarray) -> np.ndarray:
        """MNA residual: node rows hold the net current leaving each node."""
        F = self.linear_matrix(gates) @ u - rhs0
        if len(self.memristors):
            i_m, _ = self.mem_eval(self.mem_voltages(u), x)
            F += self._mem_inc_t @ i_m
        return F

    def _factor(self, u, gates, x, t):
        vd = self.mem_voltages(u)
        _, g_m = self.mem_eval(vd, x) if len(vd) else (None, np.zeros(0))
        try:
            return spla.splu(self.matrix(gates, g_m))
        except RuntimeError as exc:
            raise SingularNetwork(f"singular MNA matrix: {exc}", t) from None

    @np.errstate(over="ignore", invalid="ignore")  # overshoots are caught and rolled back
    def solve(self, src_v: np.ndarray, gates: tuple[bool, ...], x: np.ndarray,
              cfg: SolverConfig, guess: np.ndarray | None = None, t: float | None = None) -> np.ndarray:
        """Newton solve; returns the MNA vector (node voltages, source currents, ideal-switch currents).

        The Jacobian factorization is kept between calls and reused (chord
        iteration) while the gate configuration is unchanged; it is refreshed
        whenever the update stops contracting quickly.
        """
        bad = self.floating_nodes(gates)
        if bad:
            shown = ", ".join(bad[:5]) + (" ..." if len(bad) > 5 else "")
            raise SingularNetwork(f"floating nodes with no path to ground: {shown}", t)
        rhs0 = np.zeros(self.n)
        rhs0[self.n_nodes:self.n_nodes + self.n_src] = src_v
        u = np.zeros(self.n) if guess is None else guess.copy()
        lu = self._lu if self._lu_gates == gates else None
        age = None if lu is None else 1
        dv, dv_prev = math.inf, math.inf
        nn = self.n_nodes
        u_prev = F_prev = None
        res_prev = math.inf
        chord_step = False
        for _ in range(cfg.max_iter):
            F = self.residual(u, rhs0, gates, x)
            res = float(np.max(np.abs(F[:nn]))) if nn else 0.0
            res_v = float(np.max(np.abs(F[nn:]))) if self.n > nn else 0.0
            if res < cfg.i_tol and res_v < cfg.v_tol and math.isfinite(dv):
                # Nodes isolated by open switches (~1e-10 S) have a voltage
                # roundoff floor near v_tol; a fresh-Jacobian step that no
                # longer contracts means the floor has been reached.
                if dv < cfg.v_tol or (age == 1 and dv >= 0.5 * dv_prev):
                    self._lu, self._lu_gates = lu, gates
                    return u
            if chord_step and not (res <= res_prev or res < cfg.i_tol):
                # a stale chord step made things worse: back up and refactor
                u, F, res = u_prev, F_prev, res_prev
                lu, age = self._factor(u, gates, x, t), 0
                dv = math.inf
            elif lu is None or (age > 1 and dv >= 0.25 * dv_prev):
                lu, age = self._factor(u, gates, x, t), 0
            du = lu.solve(F)
            if not np.all(np.isfinite(du)):
                if age == 0:
                    raise SingularNetwork("non-finite Newton update", t)
                lu, age = self._factor(u, gates, x, t), 0
                du = lu.solve(F)
                if not np.all(np.isfinite(du)):
                    raise SingularNetwork("non-finite Newton update", t)
            chord_step = age > 0
            u_prev, F_prev, res_prev = u, F, res
            u = u - du
            dv_prev, dv = dv, (float(np.max(np.abs(du[:nn]))) if nn else 0.0)
            age += 1
        raise NewtonDivergence(f"Newton did not converge in {cfg.max_iter} iterations", t)

    def kcl_residual(self, u: np.ndarray, gates: tuple[bool, ...], x: np.ndarray) -> float:
        """Max absolute Kirchhoff current mismatch over all nodes (amperes)."""
        res = np.zeros(self.n)
        self._inject(res, self.res_a, self.res_b, -self.g_res * self.branch_voltages(u, self.res_a, self.res_b))
        self._inject(res, self.sw_a, self.sw_b, -self.switch_currents(u, gates))
        vd = self.branch_voltages(u, self.mem_a, self.mem_b)
        i_m, _ = self.mem_eval(vd, x) if len(vd) else (np.zeros(0), None)
        self._inject(res, self.mem_a, self.mem_b, -i_m)
        # sources push j into their + node
        self._inject(res, self.src_a, self.src_b, self.source_currents(u))
        return float(np.max(np.abs(res[: self.n_nodes]))) if self.n_nodes else 0.0

    def powers(self, u: np.ndarray, gates: tuple[bool, ...], x: np.ndarray) -> tuple[float, float]:
        """(total power delivered by sources, total power dissipated by elements)."""
        p_src = float(np.dot(self.source_voltages(u), self.source_currents(u)))
        vr = self.branch_voltages(u, self.res_a, self.res_b)
        vs = self.branch_voltages(u, self.sw_a, self.sw_b)
        vm = self.branch_voltages(u, self.mem_a, self.mem_b)
        i_m, _ = self.mem_eval(vm, x) if len(vm) else (np.zeros(0), None)
        p_el = float(np.sum(self.g_res * vr**2) + np.sum(self.switch_currents(u, gates) * vs) + np.sum(vm * i_m))
        return p_src, p_el

    def source_currents(self, u: np.ndarray) -> np.ndarray:
        """Current delivered out of each source's + terminal."""
        return u[self.n_nodes:self.n_nodes + self.n_src]

    def source_voltages(self, u: np.ndarray) -> np.ndarray:
        return self.branch_voltages(u, self.src_a, self.src_b)


def solve_operating_point(net: Netlist, sources: dict[str, float] | None = None,
                          gates: dict[str, bool] | None = None,
                          cfg: SolverConfig | None = None) -> dict[str, float]:
    """DC solution with memristor states frozen; returns node voltages by name."""
    cfg = cfg or SolverConfig()
    sys_ = System(net)
    sources = sources or {}
    gates = gates or {}
    src_v = np.array([sources.get(w, 0.0) for w in sys_.wave_ids])
    gs = tuple(bool(gates.get(g, False)) for g in sys_.gate_ids)
    u = sys_.solve(src_v, gs, net.states(), cfg)
    out = {GROUND: 0.0}
    out.update({n: float(u[i]) for i, n in enumerate(net.nodes[1:])})
    return out


# -- transient -------------------------------------------------------------


@dataclass
class StepInfo:
    """Per-step view handed to transient observers."""

    k: int
    t: float
    node_v: np.ndarray  # non-ground nodes, netlist order (ground excluded)
    mem_v: np.ndarray
    mem_i: np.ndarray
    mem_x: np.ndarray
    switch_i: np.ndarray
    src_v: np.ndarray
    src_i: np.ndarray
    gates: tuple[bool, ...]


@dataclass
class Trace:
    t: np.ndarray
    node_names: list[str]
    v: np.ndarray  # samples x probed nodes
    mem_names: list[str]
    mem_v: np.ndarray
    mem_i: np.ndarray
    mem_x: np.ndarray
    power: np.ndarray  # total source power per sample
    energy: np.ndarray  # cumulative source energy per sample
    switch_names: list[str]
    switch_peak: np.ndarray  # max |i| per switch over the run
    final_x: np.ndarray

    @property
    def total_energy(self) -> float:
        return float(self.energy[-1])

    def voltage(self, node: str) -> np.ndarray:
        if node == GROUND:
            return np.zeros_like(self.t)
        return self.v[:, self.node_names.index(node)]

    def _mem_col(self, arr, name):
        return arr[:, self.mem_names.index(name)]

    def current(self, mem: str) -> np.ndarray:
        return self._mem_col(self.mem_i, mem)

    def state(self, mem: str) -> np.ndarray:
        return self._mem_col(self.mem_x, mem)

    def to_csv(self, probes: Iterable[str] | None = None) -> str:
        """CSV with ``time_ns``, requested ``v:``/``i:``/``x:`` probes, ``energy_J``."""
        if probes is None:
            probes = [f"v:{n}" for n in self.node_names]
            probes += [f"{k}:{m}" for m in self.mem_names for k in ("i", "x")]
        probes = list(probes)
        cols = [self.t * 1e9]
        for p in probes:
            kind, _, name = p.partition(":")
            if kind == "v":
                cols.append(self.voltage(name))
            elif kind == "i":
                cols.append(self.current(name))
            elif kind == "x":
                cols.append(self.state(name))
            else:
                raise ValueError(f"bad probe {p!r}")
        cols.append(self.energy)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_ns", *probes, "energy_J"])
        for row in zip(*cols):
            w.writerow([repr(float(c)) for c in row])
        return buf.getvalue()


def transient_run(net: Netlist, sched: Schedule, cfg: SolverConfig | None = None, *,
                  probe_nodes: Iterable[str] | None = None,
                  probe_mems: Iterable[str] | None = None,
                  observer: Callable[[StepInfo], None] | None = None,
                  update_netlist: bool = True) -> Trace:
    """Fixed-step transient over ``[0, sched.t_end]``.

    Each step solves the network with states frozen, records the sample,
    then advances every memristor with its solved branch voltage. When the
    inputs and gates are unchanged and no device moved, the previous solution
    is reused verbatim. Probes default to every node / memristor.
    """
    cfg = cfg or SolverConfig()
    sched.validate()
    sys_ = System(net)
    waves = _WaveTable(sched, sys_.wave_ids, sys_.gate_ids)
    n_steps = max(1, int(math.ceil(sched.t_end / cfg.dt - 1e-9)))
    times = np.arange(n_steps + 1) * cfg.dt

    node_names = list(net.nodes[1:]) if probe_nodes is None else list(probe_nodes)
    node_cols = np.array([sys_.node_index[n] for n in node_names], dtype=int)
    mem_names_all = [m.name for m in sys_.memristors]
    mem_names = mem_names_all if probe_mems is None else list(probe_mems)
    mpos = {n: i for i, n in enumerate(mem_names_all)}
    mem_cols = np.array([mpos[n] for n in mem_names], dtype=int)

    x = net.states()
    v_rec = np.zeros((n_steps + 1, len(node_names)))
    mv_rec = np.zeros((n_steps + 1, len(mem_names)))
    mi_rec = np.zeros_like(mv_rec)
    mx_rec = np.zeros_like(mv_rec)
    power = np.zeros(n_steps + 1)
    sw_peak = np.zeros(len(sys_.switches))

    u = None
    last_key = None
    moved = True
    cache = None
    for k, t in enumerate(times):
        src_v = waves.sources(t)
        gates = waves.gate_states(t)
        key = (src_v.tobytes(), gates)
        if moved or key != last_key or cache is None:
            u = sys_.solve(src_v, gates, x, cfg, guess=u, t=t)
            vd = sys_.mem_voltages(u)
            i_m, _ = sys_.mem_eval(vd, x) if len(vd) else (np.zeros(0), None)
            i_sw = sys_.switch_currents(u, gates)
            p = float(np.dot(src_v, sys_.source_currents(u)))
            cache = (vd, i_m, i_sw, p)
        vd, i_m, i_sw, p = cache
        last_key = key
        node_v = u[: sys_.n_nodes]
        v_rec[k] = np.where(node_cols >= 0, node_v[np.maximum(node_cols, 0)], 0.0) if len(node_cols) else 0.0
        mv_rec[k] = vd[mem_cols]
        mi_rec[k] = i_m[mem_cols]
        mx_rec[k] = x[mem_cols]
        power[k] = p
        if len(i_sw):
            np.maximum(sw_peak, np.abs(i_sw), out=sw_peak)
        if observer is not None:
            observer(StepInfo(k, t, node_v, vd, i_m, x, i_sw, src_v, sys_.source_currents(u), gates))
        if k < n_steps:
            moved = False
            if len(x):
                x_new = x.copy()
                for prm, ix in sys_.mem_groups:
                    x_new[ix] = device.advance_state(x[ix], vd[ix], cfg.dt, prm)
                moved = not np.array_equal(x_new, x)
                x = x_new

    energy = np.concatenate([[0.0], np.cumsum(0.5 * (power[1:] + power[:-1]) * np.diff(times))])
    if update_netlist:
        net.set_states(x)
    return Trace(
        t=times, node_names=node_names, v=v_rec, mem_names=mem_names,
        mem_v=mv_rec, mem_i=mi_rec, mem_x=mx_rec, power=power, energy=energy,
        switch_names=[s.name for s in sys_.switches], switch_peak=sw_peak, final_x=x,
    )


def energy_between(trace: Trace, t0: float, t1: float) -> float:
    """Source energy delivered over ``[t0, t1]`` (linear within a sample interval)."""
    span = (trace.t[0], trace.t[-1])
    tol = 1e-6 * (trace.t[1] - trace.t[0]) if len(trace.t) > 1 else 0.0
    if not (t0 < t1) or t0 < span[0] - tol or t1 > span[1] + tol:
        raise ValueError(f"interval [{t0}, {t1}] outside trace span {span}")
    e = np.interp([t0, t1], trace.t, trace.energy)
    return float(e[1] - e[0])
