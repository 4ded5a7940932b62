"""Behavioural models of single memory cells.

A 2T-nC FeRAM cell is ``n`` ferroelectric capacitors behind one write and one
read transistor.  Sensing is quasi-non-destructive and inverting: a capacitor
holding 1 senses as 0 and vice versa, and the stored polarization survives
the read.  Each read leaves a little partial switching behind, which we
count against a per-capacitor disturb budget.  Activating three capacitors at
once yields the MINORITY of their bits.

The DRAM cell is the 1T-1C baseline: reading drains the charge, so a read
must be followed by a restore before the cell is read again.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import (
    DisturbBudgetExhausted,
    DuplicateIndex,
    EnduranceExceeded,
    IndexOutOfRange,
    InvalidCellRead,
)

log = logging.getLogger(__name__)

DEFAULT_DISTURB_BUDGET = 100
DEFAULT_ENDURANCE_LIMIT = 10**6


def majority3(a: int, b: int, c: int) -> int:
    return int(a + b + c >= 2)


def minority3(a: int, b: int, c: int) -> int:
    return 1 - majority3(a, b, c)


@dataclass
class CellConfig:
    n_caps: int = 3
    disturb_budget: int = DEFAULT_DISTURB_BUDGET
    endurance_limit: int = DEFAULT_ENDURANCE_LIMIT
    # "abort" raises EnduranceExceeded; "warn" logs and keeps going
    endurance_policy: str = "abort"

    def __post_init__(self):
        if self.n_caps < 1:
            raise ValueError("n_caps must be >= 1")
        if self.disturb_budget < 1:
            raise ValueError("disturb_budget must be >= 1")
        if self.endurance_limit < 1:
            raise ValueError("endurance_limit must be >= 1")
        if self.endurance_policy not in ("abort", "warn"):
            raise ValueError(f"unknown endurance_policy {self.endurance_policy!r}")


@dataclass
class FeCapState:
    polarization: int = 0
    disturb_count: int = 0
    program_cycles: int = 0


@dataclass
class FeCell:
    config: CellConfig = field(default_factory=CellConfig)
    caps: list = field(default=None)

    def __post_init__(self):
        if self.caps is None:
            self.caps = [FeCapState() for _ in range(self.config.n_caps)]
        if len(self.caps) != self.config.n_caps:
            raise ValueError("caps length must equal config.n_caps")

    @property
    def n_caps(self) -> int:
        return len(self.caps)

    def bits(self) -> tuple:
        return tuple(c.polarization for c in self.caps)


def _check_index(cell: FeCell, index: int) -> None:
    if not 0 <= index < cell.n_caps:
        raise IndexOutOfRange(f"capacitor index {index} outside 0..{cell.n_caps - 1}")


def _program(cell: FeCell, index: int, bit: int) -> FeCell:
    _check_index(cell, index)
    cap = cell.caps[index]
    if cap.program_cycles >= cell.config.endurance_limit:
        msg = (f"capacitor {index} reached its endurance limit "
               f"({cell.config.endurance_limit} program cycles)")
        if cell.config.endurance_policy == "abort":
            raise EnduranceExceeded(msg)
        log.warning(msg)
    cap.polarization = int(bool(bit))
    cap.disturb_count = 0
    cap.program_cycles += 1
    return cell


def write_cap(cell: FeCell, index: int, bit: int) -> FeCell:
    """Program capacitor ``index`` to ``bit`` through the write transistor."""
    return _program(cell, index, bit)


def write_back(cell: FeCell, index: int, bit: int) -> FeCell:
    """Same physics as :func:`write_cap`; kept separate so write-back traffic is costed on its own."""
    return _program(cell, index, bit)


def _disturb(cell: FeCell, indices) -> None:
    budget = cell.config.disturb_budget
    for i in indices:
        if cell.caps[i].disturb_count >= budget:
            raise DisturbBudgetExhausted(
                f"capacitor {i} was sensed {budget} times since its last write; write back first")
    for i in indices:
        cell.caps[i].disturb_count += 1


def qnro_read(cell: FeCell, index: int) -> int:
    """Quasi-non-destructive read. Returns the inverse of the stored bit."""
    _check_index(cell, index)
    _disturb(cell, (index,))
    return 1 - cell.caps[index].polarization


def tba_sense(cell: FeCell, indices) -> int:
    """Triple-bit activation: sense three capacitors together, returning their MINORITY."""
    indices = tuple(indices)
    if len(indices) != 3:
        raise ValueError("TBA needs exactly three capacitor indices")
    for i in indices:
        _check_index(cell, i)
    if len(set(indices)) != 3:
        raise DuplicateIndex(f"TBA indices must be distinct, got {indices}")
    _disturb(cell, indices)
    a, b, c = (cell.caps[i].polarization for i in indices)
    return minority3(a, b, c)


@dataclass
class DramCellState:
    bit: int = 0
    valid: bool = True


def dram_read(cell: DramCellState) -> int:
    if not cell.valid:
        raise InvalidCellRead("DRAM cell read after a destructive read without restore")
    cell.valid = False
    return cell.bit


def dram_restore(cell: DramCellState, bit: int) -> DramCellState:
    cell.bit = int(bool(bit))
    cell.valid = True
    return cell


def triple_row_activate(cells) -> int:
    """Charge-share three DRAM cells; all three settle to (and keep) the majority."""
    a, b, c = (dram_read(x) for x in cells)
    m = majority3(a, b, c)
    for x in cells:
        dram_restore(x, m)
    return m


def minority_formula(a: int, b: int, c: int) -> int:
    """MINORITY written in the control-bit form: not(C(A+B) + not(C)(A.B))."""
    a, b, c = bool(a), bool(b), bool(c)
    return int(not ((c and (a or b)) or ((not c) and (a and b))))


def truth_table():
    """Rows of (a, b, c, minority, majority) for every input combination."""
    rows = []
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                cell = FeCell(CellConfig(n_caps=3))
                for i, bit in enumerate((a, b, c)):
                    write_cap(cell, i, bit)
                m = tba_sense(cell, (0, 1, 2))
                rows.append((a, b, c, m, 1 - m))
    return rows
