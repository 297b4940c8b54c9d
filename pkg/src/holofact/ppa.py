"""Analytical performance/power/area model for the factorizer designs.

Three design points are modeled: a fully SRAM 2D macro, a 2D RRAM/SRAM
hybrid, and a three-tier heterogeneous 3D stack (logic tier plus RRAM
tiers).  The model composes per-block calibration parameters (area and
energy) with datapath arithmetic:

  ops per MVM        = 2 * d * cols * f            (2 ops per MAC)
  throughput (TOPS)  = frequency * ops_per_mvm / cycles_per_mvm
  compute density    = throughput / total area
  energy efficiency  = ops_per_mvm / energy_per_mvm  (frequency independent)
  TSV count          = (X + Y + Y/2) * arrays_per_tier * rram_tiers

Shipped defaults are calibration constants chosen to reproduce the
published reference tables; they are inputs, not derivations from device
physics (the underlying NeuroSim and standard-cell data are unpublished).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

__all__ = [
    "BlockParams",
    "TsvSpec",
    "PpaConfig",
    "PpaReport",
    "tsv_count",
    "evaluate",
    "compare",
    "load_ppa_config",
    "default_config",
    "DESIGN_KINDS",
]

DESIGN_KINDS = ("sram_2d", "hybrid_2d", "h3d_3tier")


@dataclass(frozen=True)
class BlockParams:
    """One hardware block: silicon area and its share of per-MVM energy."""

    name: str
    tier: int
    area_mm2: float
    energy_nj_per_mvm: float = 0.0

    def __post_init__(self) -> None:
        if self.area_mm2 < 0 or self.energy_nj_per_mvm < 0:
            raise ValueError(f"block {self.name}: area and energy must be >= 0")


@dataclass(frozen=True)
class TsvSpec:
    """Tier-to-tier interconnect geometry (3D designs only)."""

    diameter_um: float = 2.0
    pitch_um: float = 4.0
    oxide_thickness_nm: float = 100.0
    height_um: float = 10.0
    bond_pitch_um: float = 10.0
    bond_thickness_um: float = 3.0


@dataclass(frozen=True)
class PpaConfig:
    """Hardware composition of one design point.

    array_rows/array_cols are the CIM array geometry (d x cols);
    subarrays_per_tier is the number of arrays driven in parallel (f).
    cycles_per_mvm is the pipelined latency of one array MVM in cycles.
    """

    design_kind: str
    array_rows: int = 256
    array_cols: int = 256
    subarrays_per_tier: int = 4
    rram_tiers: int = 0
    adc_bits: int = 4
    adc_count: int = 0
    node_rram_nm: float | None = None
    node_periph_nm: float | None = None
    node_digital_nm: float = 16.0
    frequency_mhz: float = 200.0
    cycles_per_mvm: float = 69.0
    blocks: tuple[BlockParams, ...] = ()
    tsv_spec: TsvSpec = field(default_factory=TsvSpec)

    def __post_init__(self) -> None:
        if self.design_kind not in DESIGN_KINDS:
            raise ValueError(
                f"design_kind must be one of {DESIGN_KINDS}, got {self.design_kind!r}"
            )
        if self.design_kind == "h3d_3tier":
            if self.rram_tiers < 1:
                raise ValueError("h3d_3tier requires rram_tiers >= 1")
            if (
                self.node_rram_nm is not None
                and self.node_periph_nm is not None
                and self.node_periph_nm > self.node_rram_nm
            ):
                raise ValueError(
                    "h3d_3tier requires peripherals at an equal or more advanced "
                    f"node than RRAM (periph {self.node_periph_nm} nm > "
                    f"rram {self.node_rram_nm} nm)"
                )
        if self.design_kind == "sram_2d" and self.adc_count != 0:
            raise ValueError("sram_2d has no ADCs (adc_count must be 0)")
        if self.frequency_mhz <= 0 or self.cycles_per_mvm <= 0:
            raise ValueError("frequency and cycles_per_mvm must be > 0")
        if self.array_rows < 1 or self.array_cols < 1 or self.subarrays_per_tier < 1:
            raise ValueError("array geometry must be positive")

    def ops_per_mvm(self) -> float:
        return 2.0 * self.array_rows * self.array_cols * self.subarrays_per_tier

    def total_area_mm2(self) -> float:
        return sum(b.area_mm2 for b in self.blocks)

    def energy_nj_per_mvm(self) -> float:
        return sum(b.energy_nj_per_mvm for b in self.blocks)


@dataclass(frozen=True)
class PpaReport:
    """Derived metrics of one design point."""

    design_kind: str
    total_area_mm2: float
    frequency_mhz: float
    throughput_tops: float
    compute_density_tops_mm2: float
    energy_efficiency_tops_w: float
    power_w: float
    tsv_count: int
    adc_count: int
    tier_areas_mm2: dict[int, float]

    def to_csv_rows(self) -> list[tuple[str, str]]:
        rows = [
            ("design_kind", self.design_kind),
            ("total_area_mm2", f"{self.total_area_mm2:.6g}"),
            ("frequency_mhz", f"{self.frequency_mhz:.6g}"),
            ("throughput_tops", f"{self.throughput_tops:.6g}"),
            ("compute_density_tops_mm2", f"{self.compute_density_tops_mm2:.6g}"),
            ("energy_efficiency_tops_w", f"{self.energy_efficiency_tops_w:.6g}"),
            ("power_w", f"{self.power_w:.6g}"),
            ("tsv_count", str(self.tsv_count)),
            ("adc_count", str(self.adc_count)),
        ]
        for tier in sorted(self.tier_areas_mm2):
            rows.append((f"tier{tier}_area_mm2", f"{self.tier_areas_mm2[tier]:.6g}"))
        return rows

    def to_text(self) -> str:
        rows = self.to_csv_rows()
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def tsv_count(
    rows_x: int, cols_y: int, arrays_per_tier: int, rram_tiers: int
) -> int:
    """TSVs per the wiring rule: X word lines, Y bit lines, Y/2 source lines."""
    if cols_y % 2 != 0:
        raise ValueError(f"column count must be even (Y/2 source lines), got {cols_y}")
    per_array = rows_x + cols_y + cols_y // 2
    return per_array * arrays_per_tier * rram_tiers


def evaluate(config: PpaConfig) -> PpaReport:
    """Compose the config's blocks and datapath arithmetic into a report."""
    if not config.blocks:
        raise ValueError(f"{config.design_kind}: no blocks configured")
    area = config.total_area_mm2()
    if area <= 0:
        raise ValueError(f"{config.design_kind}: total area must be > 0")
    energy_nj = config.energy_nj_per_mvm()
    if energy_nj <= 0:
        raise ValueError(
            f"{config.design_kind}: per-MVM energy must be > 0 "
            "(set block energy_nj_per_mvm values)"
        )
    ops = config.ops_per_mvm()
    mvm_per_s = config.frequency_mhz * 1e6 / config.cycles_per_mvm
    throughput_tops = ops * mvm_per_s / 1e12
    efficiency = ops / energy_nj / 1e3  # (ops/nJ) -> TOPS/W
    power_w = throughput_tops / efficiency
    tsvs = 0
    if config.design_kind == "h3d_3tier":
        tsvs = tsv_count(
            config.array_rows,
            config.array_cols,
            config.subarrays_per_tier,
            config.rram_tiers,
        )
    tiers: dict[int, float] = {}
    for b in config.blocks:
        tiers[b.tier] = tiers.get(b.tier, 0.0) + b.area_mm2
    return PpaReport(
        design_kind=config.design_kind,
        total_area_mm2=area,
        frequency_mhz=config.frequency_mhz,
        throughput_tops=throughput_tops,
        compute_density_tops_mm2=throughput_tops / area,
        energy_efficiency_tops_w=efficiency,
        power_w=power_w,
        tsv_count=tsvs,
        adc_count=config.adc_count,
        tier_areas_mm2=tiers,
    )


def compare(a: PpaReport, b: PpaReport) -> dict[str, float]:
    """Headline ratios of design `a` over design `b`.

    area_ratio is b/a (how much more silicon b needs), while density_ratio
    and efficiency_ratio are a/b (how much better a performs per mm2/watt).
    """
    return {
        "area_ratio": b.total_area_mm2 / a.total_area_mm2,
        "density_ratio": a.compute_density_tops_mm2 / b.compute_density_tops_mm2,
        "efficiency_ratio": a.energy_efficiency_tops_w / b.energy_efficiency_tops_w,
    }


# Calibration defaults per design point.  Block areas sum to the published
# totals; block energies sum to the per-MVM energy implied by the published
# efficiency figures (524288 ops/MVM / energy = TOPS/W).
_DEF_BLOCKS: dict[str, tuple[BlockParams, ...]] = {
    "sram_2d": (
        BlockParams("sram_cim_arrays", tier=1, area_mm2=0.066, energy_nj_per_mvm=6.865),
        BlockParams("unbind_digital", tier=1, area_mm2=0.018, energy_nj_per_mvm=1.6),
        BlockParams("control_buffer", tier=1, area_mm2=0.030, energy_nj_per_mvm=2.0),
    ),
    "hybrid_2d": (
        BlockParams("rram_cim_arrays", tier=1, area_mm2=0.046, energy_nj_per_mvm=2.4516),
        BlockParams("adc_readout", tier=1, area_mm2=0.318, energy_nj_per_mvm=3.4),
        BlockParams("rram_periphery", tier=1, area_mm2=0.110, energy_nj_per_mvm=1.4),
        BlockParams("unbind_digital", tier=1, area_mm2=0.040, energy_nj_per_mvm=0.8),
        BlockParams("control_buffer", tier=1, area_mm2=0.030, energy_nj_per_mvm=0.6),
    ),
    "h3d_3tier": (
        BlockParams("digital_periph_tier", tier=1, area_mm2=0.047, energy_nj_per_mvm=4.2),
        BlockParams("rram_tier_2", tier=2, area_mm2=0.022, energy_nj_per_mvm=2.2258),
        BlockParams("rram_tier_3", tier=3, area_mm2=0.022, energy_nj_per_mvm=2.2258),
    ),
}


def default_config(design_kind: str) -> PpaConfig:
    """Shipped Tab-consistent defaults for one of the three design points."""
    if design_kind == "sram_2d":
        return PpaConfig(
            design_kind="sram_2d",
            rram_tiers=0,
            adc_count=0,
            node_rram_nm=None,
            node_periph_nm=None,
            node_digital_nm=16.0,
            frequency_mhz=200.0,
            blocks=_DEF_BLOCKS["sram_2d"],
        )
    if design_kind == "hybrid_2d":
        return PpaConfig(
            design_kind="hybrid_2d",
            rram_tiers=0,
            adc_count=1024,
            node_rram_nm=40.0,
            node_periph_nm=40.0,
            node_digital_nm=40.0,
            frequency_mhz=200.0,
            blocks=_DEF_BLOCKS["hybrid_2d"],
        )
    if design_kind == "h3d_3tier":
        return PpaConfig(
            design_kind="h3d_3tier",
            rram_tiers=2,
            adc_count=1024,
            node_rram_nm=40.0,
            node_periph_nm=16.0,
            node_digital_nm=16.0,
            frequency_mhz=185.0,
            blocks=_DEF_BLOCKS["h3d_3tier"],
        )
    raise ValueError(f"unknown design kind {design_kind!r}")


def load_ppa_config(path: str) -> PpaConfig:
    """Parse an INI-style design file.

    Layout: a [design] section with the scalar fields, an optional [tsv]
    section, and one [block:<name>] section per hardware block carrying
    tier, area_mm2 and energy_nj_per_mvm.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    if "design" not in parser:
        raise ValueError(f"{path}: missing [design] section")
    d = parser["design"]
    kind = d.get("kind", "")
    blocks: list[BlockParams] = []
    for section in parser.sections():
        if not section.startswith("block:"):
            continue
        name = section.split(":", 1)[1]
        blk = parser[section]
        try:
            blocks.append(
                BlockParams(
                    name=name,
                    tier=blk.getint("tier", 1),
                    area_mm2=blk.getfloat("area_mm2"),
                    energy_nj_per_mvm=blk.getfloat("energy_nj_per_mvm", 0.0),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: bad block section [{section}]: {exc}") from exc
    if not blocks:
        raise ValueError(f"{path}: no [block:<name>] sections")
    tsv = TsvSpec()
    if "tsv" in parser:
        t = parser["tsv"]
        tsv = TsvSpec(
            diameter_um=t.getfloat("diameter_um", 2.0),
            pitch_um=t.getfloat("pitch_um", 4.0),
            oxide_thickness_nm=t.getfloat("oxide_thickness_nm", 100.0),
            height_um=t.getfloat("height_um", 10.0),
            bond_pitch_um=t.getfloat("bond_pitch_um", 10.0),
            bond_thickness_um=t.getfloat("bond_thickness_um", 3.0),
        )

    def _optfloat(key: str) -> float | None:
        raw = d.get(key, "").strip()
        return float(raw) if raw else None

    try:
        return PpaConfig(
            design_kind=kind,
            array_rows=d.getint("array_rows", 256),
            array_cols=d.getint("array_cols", 256),
            subarrays_per_tier=d.getint("subarrays_per_tier", 4),
            rram_tiers=d.getint("rram_tiers", 0),
            adc_bits=d.getint("adc_bits", 4),
            adc_count=d.getint("adc_count", 0),
            node_rram_nm=_optfloat("node_rram_nm"),
            node_periph_nm=_optfloat("node_periph_nm"),
            node_digital_nm=d.getfloat("node_digital_nm", 16.0),
            frequency_mhz=d.getfloat("frequency_mhz", 200.0),
            cycles_per_mvm=d.getfloat("cycles_per_mvm", 69.0),
            blocks=tuple(blocks),
            tsv_spec=tsv,
        )
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
