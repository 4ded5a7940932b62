"""Energy, latency and area accounting."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .engine import DRAM_KINDS, FERAM_KINDS, Command, CommandKind, refresh_accounting
from .errors import ConfigError, UnknownCommandKind

BACKENDS = ("feram", "dram")


@dataclass(frozen=True)
class CostParams:
    """Per-row command energies (nJ) and timing.

    ``e_write_row`` of ``None`` means "use the backend's ACTIVATE energy".
    """
    e_activate_dram: float = 22.6
    e_activate_feram: float = 16.6
    e_precharge: float = 0.32
    e_copy: float = 0.32
    e_write_row: Optional[float] = None
    cycle_time_ns: float = 10.0
    cycles_per_command: int = 1
    refresh_interval_ms: float = 64.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and v < 0:
                raise ConfigError(f"cost parameter {f.name} must be >= 0, got {v}")
        if self.cycle_time_ns <= 0:
            raise ConfigError("cycle_time_ns must be > 0")
        if self.refresh_interval_ms <= 0:
            raise ConfigError("refresh_interval_ms must be > 0")
        if self.cycles_per_command < 1:
            raise ConfigError("cycles_per_command must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "CostParams":
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ConfigError(f"unknown cost parameter {key!r}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def write_energy(self, backend: str) -> float:
        if self.e_write_row is not None:
            return self.e_write_row
        return self.e_activate_feram if backend == "feram" else self.e_activate_dram

    def energy_nj(self, kind: CommandKind, backend: str) -> float:
        """Energy of one row command.

        Second-activation slots of a DRAM AAP (RowClone, DCC drive-out) are
        priced as row copies, mirroring the FeRAM COPY slot of an ACP.
        """
        K = CommandKind
        if backend == "feram":
            if kind not in FERAM_KINDS:
                raise UnknownCommandKind(f"{kind} is not a FeRAM command")
            if kind in (K.FE_ACTIVATE_TBA, K.FE_ACTIVATE_READ):
                return self.e_activate_feram
            if kind in (K.FE_WRITE_ROW, K.FE_WRITE_BACK_ROW):
                return self.write_energy(backend)
            if kind is K.FE_COPY:
                return self.e_copy
            return self.e_precharge
        if backend == "dram":
            if kind not in DRAM_KINDS:
                raise UnknownCommandKind(f"{kind} is not a DRAM command")
            if kind in (K.DR_ACTIVATE, K.DR_ACTIVATE_TRA):
                return self.e_activate_dram
            if kind is K.DR_WRITE_ROW:
                return self.write_energy(backend)
            if kind in (K.DR_COPY_ROWCLONE, K.DR_NOT_DCC):
                return self.e_copy
            if kind is K.DR_REFRESH_ROW:
                return self.e_activate_dram + self.e_precharge
            return self.e_precharge
        raise ValueError(f"unknown backend {backend!r}")


@dataclass
class EnergyLedger:
    backend: str
    params: CostParams = field(default_factory=CostParams)
    counts: Counter = field(default_factory=Counter)
    operand_copies: int = 0
    refresh_energy_J: float = 0.0
    refresh_cycles: float = 0.0
    finalized: bool = False

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")

    @property
    def total_cycles(self) -> int:
        return sum(self.counts.values()) * self.params.cycles_per_command

    @property
    def compute_energy_J(self) -> float:
        return sum(n * self.params.energy_nj(k, self.backend)
                   for k, n in sorted(self.counts.items(), key=lambda kv: kv[0].value)) * 1e-9

    @property
    def total_energy_J(self) -> float:
        return self.compute_energy_J + self.refresh_energy_J

    @property
    def exec_time_s(self) -> float:
        return (self.total_cycles + self.refresh_cycles) * self.params.cycle_time_ns * 1e-9

    def charge(self, command, times: int = 1) -> "EnergyLedger":
        kind = command.kind if isinstance(command, Command) else CommandKind(command)
        # raises UnknownCommandKind for the wrong backend
        self.params.energy_nj(kind, self.backend)
        self.counts[kind] += times
        return self

    def merge(self, other: "EnergyLedger") -> "EnergyLedger":
        """Sum of two unfinalized ledgers; refresh must be re-applied on the merged duration."""
        if other.backend != self.backend or other.params != self.params:
            raise ValueError("can only merge ledgers of the same backend and parameters")
        out = EnergyLedger(self.backend, self.params, self.counts + other.counts,
                           self.operand_copies + other.operand_copies)
        return out

    def command_counts(self) -> dict:
        return {k.value: n for k, n in sorted(self.counts.items(), key=lambda kv: kv[0].value)}


def charge(ledger: EnergyLedger, command, params: Optional[CostParams] = None,
           backend: Optional[str] = None) -> EnergyLedger:
    if params is not None and params != ledger.params:
        raise ValueError("ledger was opened with different cost parameters")
    if backend is not None and backend != ledger.backend:
        raise UnknownCommandKind(f"ledger is for {ledger.backend}, not {backend}")
    return ledger.charge(command)


def finalize(ledger: EnergyLedger, total_rows: int) -> EnergyLedger:
    """Apply amortized refresh (DRAM only) over the run's command time."""
    p = ledger.params
    if ledger.backend == "dram":
        e, cyc = refresh_accounting("dram", ledger.total_cycles, p.cycle_time_ns,
                                    p.e_activate_dram, p.e_precharge, total_rows=total_rows,
                                    interval_ms=p.refresh_interval_ms)
        ledger.refresh_energy_J, ledger.refresh_cycles = e, cyc
    else:
        ledger.refresh_energy_J, ledger.refresh_cycles = 0.0, 0.0
    ledger.finalized = True
    return ledger


# ---------------------------------------------------------------------------
# area


@dataclass(frozen=True)
class AreaModel:
    feature_size_nm: float = 28.0
    base_cell_f2: float = 30.0            # 2T-1C planar cell
    per_extra_cap_f2: float = 30.0        # 30 F^2 at n = 1 to 90 F^2 at n = 3, linear
    vertical_footprint_nm2: float = 130.0 * 130.0
    peripheral_overhead: float = 1.5

    def planar_area_nm2(self, n_caps: int) -> float:
        if n_caps < 1:
            raise ValueError("n_caps must be >= 1")
        f2 = self.base_cell_f2 + self.per_extra_cap_f2 * (n_caps - 1)
        return f2 * self.feature_size_nm ** 2


def area_report(model: AreaModel, n_caps: int, stacked: bool = False) -> dict:
    planar = model.planar_area_nm2(n_caps)
    vertical = model.vertical_footprint_nm2
    area = vertical if stacked else planar
    return {
        "n_caps": n_caps,
        "feature_size_nm": model.feature_size_nm,
        "stacked": stacked,
        "planar_area_nm2": planar,
        "vertical_area_nm2": vertical,
        "area_per_cell_nm2": area,
        "area_with_periphery_nm2": area * model.peripheral_overhead,
        "density_ratio": planar / vertical,
    }


def geomean(values) -> float:
    values = list(values)
    if not values:
        raise ValueError("geomean of no values")
    return math.exp(sum(math.log(v) for v in values) / len(values))
