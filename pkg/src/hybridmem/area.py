"""Areal bit density of the compared memory cells.

Hybrid tiles are transistor-limited: an R x C tile needs R + C access
transistors for R*C bits. The passive crossbar is limited by the 4F^2
memristor cell. SRAM and STT-MRAM enter as calibrated cell areas that
reproduce the literature densities; they are not derived here.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

NM_TO_CM = 1e-7

# Display constants for the non-memristor columns (fJ/bit, ns).
LITERATURE = {
    "SRAM Active": {"read_fJ": 0.7, "write_fJ": 0.7, "read_ns": 0.3, "write_ns": 0.3},
    "SRAM Leakage": {"read_fJ": 27.7, "write_fJ": 27.7, "read_ns": None, "write_ns": None},
    "STT-MRAM": {"read_fJ": 60.4, "write_fJ": 1177.0, "read_ns": 0.3, "write_ns": 0.57},
    "Hybrid (4x4)": {"read_fJ": 5.506, "write_fJ": 3118.0, "read_ns": 0.3, "write_ns": 10.0},
    "Hybrid (8x8)": {"read_fJ": 6.849, "write_fJ": 6372.0, "read_ns": 0.3, "write_ns": 10.0},
    "1kB Crossbar": {"read_fJ": 21.0, "write_fJ": 70000.0, "read_ns": 0.3, "write_ns": 10.0},
}

# SRAM leakage assumption behind the "SRAM Leakage" energy column.
SRAM_LEAKAGE_A_PER_MB = 29e-6
SRAM_SUPPLY_V = 1.0
ACCESSES_PER_BIT_PER_S = 1000.0


@dataclass(frozen=True)
class CellConstant:
    f2_per_bit: float
    feature_nm: float


@dataclass
class AreaSpec:
    feature_nm: float = 45.0
    transistor_f2: float = 50.0
    memristor_f2: float = 4.0
    tile_rows: int = 4
    tile_cols: int = 4
    comparisons: dict[str, CellConstant] = field(default_factory=lambda: {
        # back-solved so that the literature densities are reproduced
        "SRAM": CellConstant(146.1, 45.0),
        "STT-MRAM": CellConstant(31.14, 65.0),
    })

    def __post_init__(self):
        if min(self.feature_nm, self.transistor_f2, self.memristor_f2) <= 0:
            raise ValueError("feature size and cell factors must be positive")
        if self.tile_rows < 1 or self.tile_cols < 1:
            raise ValueError("tile dimensions must be >= 1")


@dataclass(frozen=True)
class DensityRow:
    name: str
    gbits_per_cm2: float
    f2_per_bit: float
    feature_nm: float


def density(f2_per_bit: float, feature_nm: float) -> float:
    """Gbit/cm^2 for a cell of ``f2_per_bit`` F^2 at feature size F (nm)."""
    f_cm = feature_nm * NM_TO_CM
    return 1.0 / (f2_per_bit * f_cm * f_cm) / 1e9


def _row(name, f2, f_nm) -> DensityRow:
    return DensityRow(name, density(f2, f_nm), f2, f_nm)


def hybrid_f2_per_bit(tile_rows: int, tile_cols: int, transistor_f2: float = 50.0) -> float:
    return (tile_rows + tile_cols) * transistor_f2 / (tile_rows * tile_cols)


def hybrid_density(spec: AreaSpec, tile_rows: int | None = None, tile_cols: int | None = None) -> DensityRow:
    r = tile_rows or spec.tile_rows
    c = tile_cols or spec.tile_cols
    return _row(f"Hybrid ({r}x{c})", hybrid_f2_per_bit(r, c, spec.transistor_f2), spec.feature_nm)


def one_t_one_m_density(spec: AreaSpec) -> DensityRow:
    return _row("1T1M", spec.transistor_f2, spec.feature_nm)


def crossbar_density(spec: AreaSpec) -> DensityRow:
    return _row("1kB Crossbar", spec.memristor_f2, spec.feature_nm)


def comparison_table(spec: AreaSpec, hybrid_tiles=((4, 4), (8, 8))) -> list[DensityRow]:
    for name in ("SRAM", "STT-MRAM"):
        if name not in spec.comparisons:
            raise KeyError(f"missing comparison constant for {name!r}")
    rows = [_row(n, c.f2_per_bit, c.feature_nm) for n, c in spec.comparisons.items()]
    rows += [hybrid_density(spec, r, c) for r, c in hybrid_tiles]
    rows.append(crossbar_density(spec))
    return rows


def sram_leakage_energy_per_access() -> float:
    """Leakage energy charged to one bit access (J): I_leak/bit * V / accesses per second."""
    return SRAM_LEAKAGE_A_PER_MB / 2**20 * SRAM_SUPPLY_V / ACCESSES_PER_BIT_PER_S


def density_ratios(rows: list[DensityRow], spec: AreaSpec) -> dict[str, float]:
    """Both readings of the STT-MRAM comparison, plus the hybrid gain over 1T1M."""
    by = {r.name: r.gbits_per_cm2 for r in rows}
    t1 = one_t_one_m_density(spec).gbits_per_cm2
    out = {}
    for name, v in by.items():
        if name.startswith("Hybrid"):
            out[f"{name} / STT-MRAM"] = v / by["STT-MRAM"]
            out[f"{name} / 1T1M"] = v / t1
    return out


def format_table(rows: list[DensityRow], spec: AreaSpec) -> str:
    lines = [f"{'Memory Architecture':<22}{'Bit Density (Gbits/cm2)':>26}{'F2/bit':>10}{'F (nm)':>8}"]
    for r in rows:
        lines.append(f"{r.name:<22}{r.gbits_per_cm2:>26.3f}{r.f2_per_bit:>10.3f}{r.feature_nm:>8.0f}")
    lines.append("")
    lines.append("Literature values (not simulated here):")
    lines.append(f"{'':<16}{'Read fJ/bit':>12}{'Write fJ/bit':>14}{'Read ns':>9}{'Write ns':>10}")
    for name, v in LITERATURE.items():
        rn = "-" if v["read_ns"] is None else f"{v['read_ns']:g}"
        wn = "-" if v["write_ns"] is None else f"{v['write_ns']:g}"
        lines.append(f"{name:<16}{v['read_fJ']:>12g}{v['write_fJ']:>14g}{rn:>9}{wn:>10}")
    lines.append("")
    for k, v in density_ratios(rows, spec).items():
        lines.append(f"{k:<30} {v:.3f}x")
    return "\n".join(lines) + "\n"


def to_csv(rows: list[DensityRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["architecture", "gbits_per_cm2", "f2_per_bit", "feature_nm"])
    for r in rows:
        w.writerow([r.name, repr(r.gbits_per_cm2), repr(r.f2_per_bit), repr(r.feature_nm)])
    return buf.getvalue()
