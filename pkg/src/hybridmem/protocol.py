"""Memory operations as source waveforms and gate timelines.

A write is the two-step V/2 scheme: step 1 raises the selected data row to
+Vw/2 while columns take -Vw/2 (bit 1) or +Vw/2 (bit 0), so only the 1-cells
see +Vw; step 2 flips the row to -Vw/2 with the columns unchanged, so only
the 0-cells see -Vw. Unselected data rows are grounded throughout.

A read raises the selected data row to the read voltage with every column
routed through its sense resistor.

Each pulse occupies ``gap/2 + ramp + width + ramp + gap/2``; the op's
``Mark`` spans all of that, so consecutive marks tile the timeline.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .device import DeviceParams, read_resistance
from .solver import Schedule
from .topology import HybridArraySpec, NodeMap, build_hybrid


@dataclass(frozen=True)
class TimingConfig:
    write_width: float = 10e-9
    vw: float = 7.0
    v_read: float = 1.0
    read_width: float = 0.3e-9
    gap: float = 1e-9
    ramp: float = 0.1e-9

    def check(self, params: DeviceParams | None = None) -> None:
        if min(self.write_width, self.vw, self.v_read, self.read_width, self.gap, self.ramp) <= 0:
            raise ValueError("timing values must be positive")
        if params is not None and self.v_read >= params.v_safe:
            raise ValueError(f"read voltage {self.v_read} V is not below the switching threshold {params.v_safe} V")


@dataclass(frozen=True)
class WriteOp:
    row: int  # row inside the tile
    bits: tuple[int, ...]  # one per global column
    tile_sel: int = 0  # which tile-row (select line) is addressed


@dataclass(frozen=True)
class ReadOp:
    row: int
    tile_sel: int = 0


@dataclass
class Mark:
    """A labelled interval of a schedule (one memory operation)."""

    kind: str  # "write" | "read"
    t0: float
    t1: float
    op: WriteOp | ReadOp
    cycle: int = -1
    pulses: list[tuple[float, float]] = field(default_factory=list)  # driven intervals incl. ramps


@dataclass
class Program(Schedule):
    """Schedule plus the operation marks that produced it."""

    marks: list[Mark] = field(default_factory=list)

    def of_kind(self, kind: str) -> list[Mark]:
        return [m for m in self.marks if m.kind == kind]


class ScheduleBuilder:
    """Appends operations back to back on a growing :class:`Program`."""

    def __init__(self, nm: NodeMap, timing: TimingConfig):
        if nm.kind != "hybrid":
            raise ValueError("ScheduleBuilder drives hybrid arrays")
        timing.check()
        self.nm, self.timing = nm, timing
        self.prog = Program()
        self.t = 0.0

    def _pulse(self, levels: dict[str, float], closed: list[str], width: float) -> tuple[float, float]:
        tm = self.timing
        t0 = self.t + tm.gap / 2
        t_up, t_dn = t0 + tm.ramp, t0 + tm.ramp + width
        t1 = t_dn + tm.ramp
        for src, lvl in levels.items():
            if lvl == 0:
                continue
            self.prog.waveforms.setdefault(src, []).extend(
                [(t0, 0.0), (t_up, lvl), (t_dn, lvl), (t1, 0.0)])
        for g in closed:
            self.prog.gates.setdefault(g, []).extend([(t0, True), (t1, False)])
        self.t = t1 + tm.gap / 2
        self.prog.t_end = self.t
        return t0, t1

    def _check(self, op):
        nm = self.nm
        if not 0 <= op.row < nm.tile_rows:
            raise IndexError(f"row {op.row} outside tile of {nm.tile_rows} rows")
        if not 0 <= op.tile_sel < len(nm.selects):
            raise IndexError(f"tile_sel {op.tile_sel} outside {len(nm.selects)} tile-rows")

    def write(self, op: WriteOp, cycle: int = -1) -> Mark:
        self._check(op)
        nm, vh = self.nm, self.timing.vw / 2
        if len(op.bits) != nm.cols:
            raise ValueError(f"expected {nm.cols} bits, got {len(op.bits)}")
        cols = {src: (-vh if b else vh) for src, b in zip(nm.col_sources, op.bits)}
        closed = [nm.selects[op.tile_sel], nm.write_enable]
        t_start = self.t
        p1 = self._pulse({nm.row_sources[op.row]: vh, **cols}, closed, self.timing.write_width)
        p2 = self._pulse({nm.row_sources[op.row]: -vh, **cols}, closed, self.timing.write_width)
        mark = Mark("write", t_start, self.t, op, cycle, [p1, p2])
        self.prog.marks.append(mark)
        return mark

    def read(self, op: ReadOp, cycle: int = -1) -> Mark:
        self._check(op)
        nm = self.nm
        t_start = self.t
        p = self._pulse({nm.row_sources[op.row]: self.timing.v_read},
                        [nm.selects[op.tile_sel], nm.read_enable], self.timing.read_width)
        mark = Mark("read", t_start, self.t, op, cycle, [p])
        self.prog.marks.append(mark)
        return mark


def schedule_write(op: WriteOp, timing: TimingConfig, nm: NodeMap) -> Program:
    b = ScheduleBuilder(nm, timing)
    b.write(op)
    return b.prog


def schedule_read(op: ReadOp, timing: TimingConfig, nm: NodeMap) -> Program:
    b = ScheduleBuilder(nm, timing)
    b.read(op)
    return b.prog


def digitize(v_s, threshold: float):
    """Comparator: 1 iff the sense voltage strictly exceeds the threshold."""
    out = np.asarray(v_s) > threshold
    return out.astype(int) if out.ndim else int(out)


def ideal_sense_levels(spec: HybridArraySpec, v_read: float = 1.0) -> tuple[float, float]:
    """Divider sense voltages (ON, OFF) for a lone device with ideal wiring."""
    p = spec.params
    r_on = read_resistance(1.0, p, v_read)
    r_off = read_resistance(p.x_floor, p, v_read)
    rs = spec.sense_r
    return v_read * rs / (rs + r_on), v_read * rs / (rs + r_off)


def comparator_threshold(spec: HybridArraySpec, v_read: float = 1.0) -> float:
    """Threshold voltage: from ``threshold_r`` if set, else the ON/OFF midpoint."""
    if spec.threshold_r is not None:
        return v_read * spec.sense_r / (spec.sense_r + spec.threshold_r)
    v_on, v_off = ideal_sense_levels(spec, v_read)
    return 0.5 * (v_on + v_off)


# -- workloads -------------------------------------------------------------


@dataclass
class Workload:
    seed: int
    rounds: int
    ops: list[WriteOp | ReadOp]

    @property
    def writes(self) -> list[WriteOp]:
        return [o for o in self.ops if isinstance(o, WriteOp)]


@dataclass
class AnswerMatrix:
    """Expected bits, indexed (row, column, cycle)."""

    bits: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.bits.shape

    def to_csv(self) -> str:
        lines = ["cycle,row,col,bit"]
        r, c, k = self.bits.shape
        for kk in range(k):
            for rr in range(r):
                for cc in range(c):
                    lines.append(f"{kk},{rr},{cc},{int(self.bits[rr, cc, kk])}")
        return "\n".join(lines) + "\n"


def rng_for(seed: int) -> np.random.Generator:
    """Seeded PCG64 stream; identical across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def _random_write(rng: np.random.Generator, spec: HybridArraySpec) -> WriteOp:
    g_row = int(rng.integers(spec.n_rows))
    bits = tuple(int(b) for b in rng.integers(0, 2, size=spec.n_cols))
    return WriteOp(g_row % spec.tile_rows, bits, g_row // spec.tile_rows)


def initial_bits(spec: HybridArraySpec) -> np.ndarray:
    """Bits implied by the initial state x0 (ON only above the midpoint)."""
    return np.full((spec.n_rows, spec.n_cols), int(spec.params.x0 >= 0.5))


def generate_workload(seed: int, rounds: int, spec: HybridArraySpec,
                      timing: TimingConfig | None = None, nm: NodeMap | None = None,
                      ) -> tuple[Workload, AnswerMatrix, Program]:
    """Random write followed by a read of every row, ``rounds`` times."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    timing = timing or TimingConfig()
    if nm is None:
        _, nm = build_hybrid(spec)
    rng = rng_for(seed)
    builder = ScheduleBuilder(nm, timing)
    contents = initial_bits(spec)
    answer = np.zeros((spec.n_rows, spec.n_cols, rounds), dtype=np.int8)
    ops: list[WriteOp | ReadOp] = []
    for k in range(rounds):
        w = _random_write(rng, spec)
        builder.write(w, cycle=k)
        ops.append(w)
        contents[w.tile_sel * spec.tile_rows + w.row] = w.bits
        answer[:, :, k] = contents
        for g_row in range(spec.n_rows):
            rd = ReadOp(g_row % spec.tile_rows, g_row // spec.tile_rows)
            builder.read(rd, cycle=k)
            ops.append(rd)
    return Workload(seed, rounds, ops), AnswerMatrix(answer), builder.prog


def writes_only(seed: int, n_writes: int, spec: HybridArraySpec, nm: NodeMap,
                timing: TimingConfig | None = None) -> Program:
    rng = rng_for(seed)
    b = ScheduleBuilder(nm, timing or TimingConfig())
    for k in range(n_writes):
        b.write(_random_write(rng, spec), cycle=k)
    return b.prog


def reads_only(n_passes: int, spec: HybridArraySpec, nm: NodeMap,
               timing: TimingConfig | None = None) -> Program:
    b = ScheduleBuilder(nm, timing or TimingConfig())
    for k in range(n_passes):
        for g_row in range(spec.n_rows):
            b.read(ReadOp(g_row % spec.tile_rows, g_row // spec.tile_rows), cycle=k)
    return b.prog


def random_pattern(seed: int, spec: HybridArraySpec) -> tuple[np.ndarray, np.ndarray]:
    """Random stored bits and the matching device states (1 -> x=1, 0 -> x_floor)."""
    bits = rng_for(seed).integers(0, 2, size=(spec.n_rows, spec.n_cols))
    x = np.where(bits == 1, 1.0, spec.params.x_floor)
    return bits, x
