"""Figures of merit extracted from transient traces."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .protocol import AnswerMatrix, Program, ReadOp, WriteOp
from .solver import StepInfo, Trace, energy_between
from .topology import NodeMap


@dataclass(frozen=True)
class ReadSample:
    cycle: int
    row: int
    col: int
    peak: float  # volts, max |V_s| over the read window
    expected: int


@dataclass
class NoiseMarginReport:
    margin: float
    errors: int  # misread samples at the best single threshold
    min_one: float
    max_zero: float
    best_threshold: float
    n_samples: int
    meta: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EnergyReport:
    write_energy_per_bit: float
    read_energy_per_bit: float
    peak_switch_current: float
    peak_switch: str
    n_writes: int
    n_reads: int
    bits_per_op: int
    write_energy_sem: float = 0.0  # standard error of the per-op mean, per bit

    def to_dict(self) -> dict:
        return asdict(self)


def read_samples(trace: Trace, prog: Program, answer: AnswerMatrix, nm: NodeMap) -> list[ReadSample]:
    """Peak sense voltage of every column for every read in ``prog``."""
    cols = [trace.node_names.index(n) for n in nm.sense_nodes]
    out = []
    for m in prog.of_kind("read"):
        op: ReadOp = m.op
        i0, i1 = np.searchsorted(trace.t, [m.t0, m.t1], side="left")
        i1 = max(i1, i0 + 1)
        peaks = np.max(np.abs(trace.v[i0:i1][:, cols]), axis=0)
        g_row = op.tile_sel * nm.tile_rows + op.row
        for c, pk in enumerate(peaks):
            out.append(ReadSample(m.cycle, g_row, c, float(pk), int(answer.bits[g_row, c, m.cycle])))
    return out


def _best_threshold(ones: np.ndarray, zeros: np.ndarray) -> tuple[float, int]:
    """Threshold minimising misreads under ``bit = v > thr``."""
    cands = np.unique(np.concatenate([ones, zeros, [-math.inf]]))
    ones_s, zeros_s = np.sort(ones), np.sort(zeros)
    # ones at or below thr are misread; zeros above thr are misread
    err = np.searchsorted(ones_s, cands, side="right") + (len(zeros_s) - np.searchsorted(zeros_s, cands, side="right"))
    k = int(np.argmin(err))
    return float(cands[k]), int(err[k])


def noise_margin(samples: Sequence[ReadSample], meta: dict | None = None) -> NoiseMarginReport:
    """Widest error-free dead zone between the stored-1 and stored-0 peak populations."""
    ones = np.array([s.peak for s in samples if s.expected == 1])
    zeros = np.array([s.peak for s in samples if s.expected == 0])
    if not len(ones) or not len(zeros):
        raise ValueError(f"need both populations, got {len(ones)} ones and {len(zeros)} zeros")
    lo1, hi0 = float(ones.min()), float(zeros.max())
    margin = max(0.0, lo1 - hi0)
    if margin > 0:
        thr, errors = 0.5 * (lo1 + hi0), 0
    else:
        thr, errors = _best_threshold(ones, zeros)
    return NoiseMarginReport(margin, errors, lo1, hi0, thr, len(samples), dict(meta or {}))


def digitization_errors(samples: Sequence[ReadSample], threshold: float) -> int:
    return sum(int(s.peak > threshold) != s.expected for s in samples)


def op_energies(trace: Trace, prog: Program, kind: str) -> np.ndarray:
    """Source energy over each op window of the given kind."""
    marks = prog.of_kind(kind)
    return np.array([energy_between(trace, m.t0, min(m.t1, trace.t[-1])) for m in marks])


def energy_per_bit(trace: Trace, prog: Program, kind: str, bits_per_op: int) -> float:
    """Total energy in the ``kind`` windows divided by the bits they target."""
    if kind not in ("write", "read"):
        raise ValueError(f"kind must be 'write' or 'read', not {kind!r}")
    e = op_energies(trace, prog, kind)
    if not len(e):
        raise ValueError(f"schedule contains no {kind} operations")
    return float(e.sum() / (len(e) * bits_per_op))


def peak_switch_current(trace: Trace) -> tuple[dict[str, float], float]:
    """Per-switch max |i| over the run, plus the global maximum."""
    per = {n: float(v) for n, v in zip(trace.switch_names, trace.switch_peak)}
    return per, max(per.values(), default=0.0)


class HalfSelectMonitor:
    """Transient observer recording, per write, the largest |v| on devices outside the written row.

    Devices of the selected tile-row that are not on the written row are the
    half-selected ones; their worst voltage goes to ``worst[k]``. The worst
    voltage over every device of the array goes to ``worst_any[k]``.
    """

    def __init__(self, prog: Program, nm: NodeMap, mem_names: list[str]):
        self.marks = prog.of_kind("write")
        pos = {name: i for i, name in enumerate(mem_names)}
        self.rows = np.zeros(len(mem_names), dtype=int)
        for (r, _c), name in nm.cells.items():
            self.rows[pos[name]] = r
        self.tile_rows = nm.tile_rows
        self.worst = np.zeros(len(self.marks))
        self.worst_any = np.zeros(len(self.marks))
        self._k = 0

    def __call__(self, info: StepInfo) -> None:
        while self._k < len(self.marks) and info.t > self.marks[self._k].t1:
            self._k += 1
        if self._k >= len(self.marks) or info.t < self.marks[self._k].t0:
            return
        op: WriteOp = self.marks[self._k].op
        g_row = op.tile_sel * self.tile_rows + op.row
        in_tile_row = (self.rows // self.tile_rows) == op.tile_sel
        half = in_tile_row & (self.rows != g_row)
        av = np.abs(info.mem_v)
        if half.any():
            self.worst[self._k] = max(self.worst[self._k], float(av[half].max()))
        self.worst_any[self._k] = max(self.worst_any[self._k], float(av.max()))


@dataclass
class SweepRow:
    coords: dict[str, Any]
    ok: bool
    result: dict[str, Any] | None = None
    error: str | None = None
    best: bool = False


def sweep(grid: dict[str, Sequence], base: Any, runner: Callable[[Any, dict], dict],
          jobs: int = 1) -> list[SweepRow]:
    """Run ``runner(base, coords)`` for every point of the Cartesian ``grid``.

    ``runner`` returns a dict with at least ``margin``. Failures are kept as
    rows with ``ok=False``. Rows come back sorted by grid coordinates and the
    largest-margin successful row is flagged ``best``. Ties (typically all
    margins at zero) go to fewer errors, then to the larger signed gap
    ``gap = min_one - max_zero`` when the runner reports it.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("sweep grid must be non-empty in every dimension")
    keys = sorted(grid)
    points = [dict(zip(keys, combo)) for combo in itertools.product(*(sorted(grid[k]) for k in keys))]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futs = [ex.submit(_safe_run, runner, base, p) for p in points]
            rows = [f.result() for f in futs]
    else:
        rows = [_safe_run(runner, base, p) for p in points]
    rows.sort(key=lambda r: tuple(r.coords[k] for k in keys))
    good = [r for r in rows if r.ok]
    if good:
        best = max(good, key=lambda r: (r.result["margin"], -r.result.get("errors", 0),
                                        r.result.get("gap", 0.0)))
        best.best = True
    return rows


def _safe_run(runner, base, coords) -> SweepRow:
    try:
        return SweepRow(coords, True, runner(base, coords))
    except Exception as exc:  # keep the other points going
        return SweepRow(coords, False, error=f"{type(exc).__name__}: {exc}")
