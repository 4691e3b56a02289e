"""Netlist builders for the three array architectures.

* ``build_unconstrained`` - passive crossbar, every row and column wire
  driven by its own source, no isolation (sneak paths intact).
* ``build_1t1m`` - one access switch in series with every memristor.
* ``build_hybrid`` - small crossbar tiles isolated from shared global wires
  by row- and column-access switches, one tile-row selected at a time.

Memristors are oriented row -> column: a positive row-minus-column voltage
drives the state toward ON.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .device import DeviceParams
from .solver import GROUND, Memristor, Netlist, Resistor, Switch, VSource


@dataclass(frozen=True)
class SwitchParams:
    r_closed: float = 1e3
    r_open: float = 1e10

    def __post_init__(self):
        if self.r_closed < 0 or self.r_open <= 0 or self.r_open < self.r_closed:
            raise ValueError("switch resistances must satisfy 0 <= r_closed <= r_open")


@dataclass
class CrossbarSpec:
    rows: int
    cols: int
    wire_r: float = 500.0
    params: DeviceParams = field(default_factory=DeviceParams)
    x_init: np.ndarray | float | None = None  # scalar or rows x cols; default params.x0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if self.wire_r < 0:
            raise ValueError("wire_r must be >= 0")


@dataclass
class HybridArraySpec:
    tile_rows: int = 4
    tile_cols: int = 4
    tiles_x: int = 2
    tiles_y: int = 2
    wire_r: float = 500.0
    sense_r: float = 8 * 124947.93185363549
    threshold_r: float | None = None
    switch: SwitchParams = field(default_factory=SwitchParams)
    params: DeviceParams = field(default_factory=DeviceParams)

    def __post_init__(self):
        if not (1 <= self.tile_rows <= 16 and 1 <= self.tile_cols <= 16):
            raise ValueError("tile dimensions must lie in 1..16")
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise ValueError("tile grid must be at least 1 x 1")
        if self.sense_r <= 0:
            raise ValueError("sense_r must be positive")
        if self.wire_r < 0:
            raise ValueError("wire_r must be >= 0")

    @property
    def n_rows(self) -> int:
        return self.tile_rows * self.tiles_y

    @property
    def n_cols(self) -> int:
        return self.tile_cols * self.tiles_x

    @property
    def switches_per_tile(self) -> int:
        return self.tile_rows + self.tile_cols


@dataclass
class NodeMap:
    """Named handles into a built netlist.

    ``cells[(row, col)]`` gives the memristor name at a global (row, column);
    ``row_sources``/``col_sources`` are source (= waveform) ids. Only the
    fields meaningful for a topology are filled.
    """

    kind: str
    rows: int
    cols: int
    cells: dict[tuple[int, int], str] = field(default_factory=dict)
    row_sources: list[str] = field(default_factory=list)
    col_sources: list[str] = field(default_factory=list)
    selects: list[str] = field(default_factory=list)
    cell_gates: dict[tuple[int, int], str] = field(default_factory=dict)
    write_enable: str | None = None
    read_enable: str | None = None
    sense_nodes: list[str] = field(default_factory=list)
    tile_rows: int = 0
    tile_cols: int = 0
    tile_switches: dict[tuple[int, int], list[str]] = field(default_factory=dict)

    def memristor_order(self) -> list[tuple[int, int]]:
        return sorted(self.cells)


class _Wire:
    """Chain of nodes along a resistive wire; collapses to one node at 0 ohm."""

    def __init__(self, net: Netlist, wire_r: float, prefix: str):
        self.net, self.wire_r, self.prefix = net, wire_r, prefix
        self.n_seg = 0

    def extend(self, prev: str, name: str) -> str:
        if self.wire_r == 0:
            return prev
        node = self.net.node(name)
        self.net.add(Resistor(f"RW_{self.prefix}{self.n_seg}", prev, node, self.wire_r))
        self.n_seg += 1
        return node


def build_unconstrained(spec: CrossbarSpec) -> tuple[Netlist, NodeMap]:
    """Passive crossbar; rows driven from the left, columns from the bottom."""
    net = Netlist()
    nm = NodeMap("crossbar", spec.rows, spec.cols)
    x_init = _initial_states(spec.x_init, spec.rows, spec.cols, spec.params)
    row_nodes = [[None] * spec.cols for _ in range(spec.rows)]
    col_nodes = [[None] * spec.cols for _ in range(spec.rows)]
    for r in range(spec.rows):
        src = net.node(f"A{r}")
        net.add(VSource(f"VA{r}", src))
        nm.row_sources.append(f"VA{r}")
        w = _Wire(net, spec.wire_r, f"A{r}_")
        prev = src
        for c in range(spec.cols):
            prev = w.extend(prev, f"a{r}_{c}")
            row_nodes[r][c] = prev
    for c in range(spec.cols):
        src = net.node(f"B{c}")
        net.add(VSource(f"VB{c}", src))
        nm.col_sources.append(f"VB{c}")
        w = _Wire(net, spec.wire_r, f"B{c}_")
        prev = src
        for r in reversed(range(spec.rows)):
            prev = w.extend(prev, f"b{r}_{c}")
            col_nodes[r][c] = prev
    for r in range(spec.rows):
        for c in range(spec.cols):
            name = f"M{r}_{c}"
            net.add(Memristor(name, row_nodes[r][c], col_nodes[r][c], spec.params, float(x_init[r, c])))
            nm.cells[(r, c)] = name
    return net, nm


def build_1t1m(rows: int, cols: int, wire_r: float = 500.0, switch: SwitchParams | None = None,
               params: DeviceParams | None = None, x_init=None) -> tuple[Netlist, NodeMap]:
    """Crossbar with one access switch (own gate) in series with each memristor."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    switch = switch or SwitchParams()
    params = params or DeviceParams()
    net = Netlist()
    nm = NodeMap("1t1m", rows, cols)
    x_init = _initial_states(x_init, rows, cols, params)
    row_nodes = [[None] * cols for _ in range(rows)]
    col_nodes = [[None] * cols for _ in range(rows)]
    for r in range(rows):
        src = net.node(f"A{r}")
        net.add(VSource(f"VA{r}", src))
        nm.row_sources.append(f"VA{r}")
        w = _Wire(net, wire_r, f"A{r}_")
        prev = src
        for c in range(cols):
            prev = w.extend(prev, f"a{r}_{c}")
            row_nodes[r][c] = prev
    for c in range(cols):
        src = net.node(f"B{c}")
        net.add(VSource(f"VB{c}", src))
        nm.col_sources.append(f"VB{c}")
        w = _Wire(net, wire_r, f"B{c}_")
        prev = src
        for r in reversed(range(rows)):
            prev = w.extend(prev, f"b{r}_{c}")
            col_nodes[r][c] = prev
    for r in range(rows):
        for c in range(cols):
            mid = net.node(f"m{r}_{c}")
            name = f"M{r}_{c}"
            net.add(Memristor(name, row_nodes[r][c], mid, params, float(x_init[r, c])))
            gate = f"G{r}_{c}"
            net.add(Switch(f"T{r}_{c}", mid, col_nodes[r][c], gate, switch.r_closed, switch.r_open))
            nm.cells[(r, c)] = name
            nm.cell_gates[(r, c)] = gate
    return net, nm


def build_hybrid(spec: HybridArraySpec, x_init=None) -> tuple[Netlist, NodeMap]:
    """Tiled array of crossbars behind access switches.

    Global data row ``DR{r}`` reaches row ``r`` of every tile through a
    row-access switch gated by that tile-row's select ``S{ty}``; each tile
    column reaches global column ``GC{j}`` through a column-access switch on
    the same select. Every global column has a write-enable switch to its
    write source and a read-enable switch to the sense resistor.
    """
    sw = spec.switch
    net = Netlist()
    nm = NodeMap("hybrid", spec.n_rows, spec.n_cols, tile_rows=spec.tile_rows, tile_cols=spec.tile_cols)
    nm.write_enable, nm.read_enable = "WE", "RE"
    x_init = _initial_states(x_init, spec.n_rows, spec.n_cols, spec.params)

    for r in range(spec.tile_rows):
        net.node(f"DR{r}")
        net.add(VSource(f"VDR{r}", f"DR{r}"))
        nm.row_sources.append(f"VDR{r}")
    for j in range(spec.n_cols):
        gc, wsrc, sense = net.node(f"GC{j}"), net.node(f"W{j}"), net.node(f"VS{j}")
        net.add(VSource(f"VW{j}", wsrc))
        net.add(Switch(f"TWE{j}", wsrc, gc, "WE", sw.r_closed, sw.r_open))
        net.add(Switch(f"TRE{j}", gc, sense, "RE", sw.r_closed, sw.r_open))
        net.add(Resistor(f"RS{j}", sense, GROUND, spec.sense_r))
        nm.col_sources.append(f"VW{j}")
        nm.sense_nodes.append(sense)
    for ty in range(spec.tiles_y):
        sel = f"S{ty}"
        nm.selects.append(sel)
        for tx in range(spec.tiles_x):
            tag = f"t{ty}_{tx}"
            tile_sw = []
            row_nodes = [[None] * spec.tile_cols for _ in range(spec.tile_rows)]
            col_nodes = [[None] * spec.tile_cols for _ in range(spec.tile_rows)]
            for r in range(spec.tile_rows):
                rin = net.node(f"{tag}:rin{r}")
                name = f"TR_{tag}_{r}"
                net.add(Switch(name, f"DR{r}", rin, sel, sw.r_closed, sw.r_open))
                tile_sw.append(name)
                w = _Wire(net, spec.wire_r, f"{tag}r{r}_")
                prev = rin
                for c in range(spec.tile_cols):
                    prev = w.extend(prev, f"{tag}:a{r}_{c}")
                    row_nodes[r][c] = prev
            for c in range(spec.tile_cols):
                j = tx * spec.tile_cols + c
                cout = net.node(f"{tag}:cout{c}")
                name = f"TC_{tag}_{c}"
                net.add(Switch(name, cout, f"GC{j}", sel, sw.r_closed, sw.r_open))
                tile_sw.append(name)
                w = _Wire(net, spec.wire_r, f"{tag}c{c}_")
                prev = cout
                for r in reversed(range(spec.tile_rows)):
                    prev = w.extend(prev, f"{tag}:b{r}_{c}")
                    col_nodes[r][c] = prev
            for r in range(spec.tile_rows):
                for c in range(spec.tile_cols):
                    gr, gcol = ty * spec.tile_rows + r, tx * spec.tile_cols + c
                    name = f"M{gr}_{gcol}"
                    net.add(Memristor(name, row_nodes[r][c], col_nodes[r][c], spec.params, float(x_init[gr, gcol])))
                    nm.cells[(gr, gcol)] = name
            nm.tile_switches[(ty, tx)] = tile_sw
    return net, nm


def _initial_states(x_init, rows, cols, params: DeviceParams) -> np.ndarray:
    if x_init is None:
        return np.full((rows, cols), params.x0)
    arr = np.broadcast_to(np.asarray(x_init, dtype=float), (rows, cols))
    if np.any(arr < params.x_floor) or np.any(arr > 1):
        raise ValueError("initial states must lie in [x_floor, 1]")
    return np.array(arr)


def summary(net: Netlist) -> str:
    """One-line-per-count text summary of a netlist."""
    return "\n".join(f"{k:>10}: {v}" for k, v in net.counts().items())
