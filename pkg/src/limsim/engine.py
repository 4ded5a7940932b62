"""Row-organized arrays and the row-level command set for both backends.

Every array can hold ``lanes`` independent copies of the same subarray side
by side.  All lanes see the same command stream, so one executed command
stands for ``lanes`` physical row commands; the cost model multiplies
accordingly.  With ``lanes == 1`` an array is exactly one subarray.

Row contents are immutable numpy word arrays; copying a row shares the
reference.
"""
from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bits as B
from .cells import CellConfig
from .errors import (
    CommandSequenceError,
    DisturbBudgetExhausted,
    DuplicateIndex,
    EnduranceExceeded,
    IndexOutOfRange,
    InvalidCellRead,
    UnknownCommandKind,
    WidthMismatch,
)

log = logging.getLogger(__name__)

REFRESH_INTERVAL_MS = 64.0


class CommandKind(str, enum.Enum):
    FE_WRITE_ROW = "FE_WRITE_ROW"
    FE_ACTIVATE_TBA = "FE_ACTIVATE_TBA"
    FE_ACTIVATE_READ = "FE_ACTIVATE_READ"
    FE_COPY = "FE_COPY"
    FE_PRECHARGE = "FE_PRECHARGE"
    FE_WRITE_BACK_ROW = "FE_WRITE_BACK_ROW"
    DR_WRITE_ROW = "DR_WRITE_ROW"
    DR_ACTIVATE = "DR_ACTIVATE"
    DR_ACTIVATE_TRA = "DR_ACTIVATE_TRA"
    DR_COPY_ROWCLONE = "DR_COPY_ROWCLONE"
    DR_PRECHARGE = "DR_PRECHARGE"
    DR_REFRESH_ROW = "DR_REFRESH_ROW"
    DR_NOT_DCC = "DR_NOT_DCC"


FERAM_KINDS = frozenset(k for k in CommandKind if k.value.startswith("FE_"))
DRAM_KINDS = frozenset(k for k in CommandKind if k.value.startswith("DR_"))


@dataclass(frozen=True)
class Command:
    """One row-level primitive.

    ``row``/``caps`` address the sensed or written location, ``dst`` the
    destination of a copy: ``(row, cap)`` on FeRAM, ``(row,)`` on DRAM.
    ``src`` names the host data source of a write (input name or ``#0``/``#1``).
    """
    kind: CommandKind
    row: Optional[int] = None
    caps: tuple = ()
    dst: Optional[tuple] = None
    src: Optional[str] = None

    def to_json(self, seq: int) -> dict:
        d = {"seq": seq, "kind": self.kind.value, "row": self.row, "caps": list(self.caps),
             "dst": list(self.dst) if self.dst is not None else None}
        if self.src is not None:
            d["src"] = self.src
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Command":
        try:
            kind = CommandKind(d["kind"])
        except ValueError:
            raise UnknownCommandKind(d["kind"]) from None
        dst = tuple(d["dst"]) if d.get("dst") is not None else None
        return cls(kind, d.get("row"), tuple(d.get("caps", ())), dst, d.get("src"))


def trace_to_jsonl(trace) -> str:
    return "".join(json.dumps(c.to_json(i), separators=(",", ":")) + "\n"
                   for i, c in enumerate(trace))


def trace_from_jsonl(text: str) -> list:
    return [Command.from_json(json.loads(line)) for line in text.splitlines() if line.strip()]


@dataclass(frozen=True)
class ArrayGeometry:
    row_width: int = 65536                 # bits per row (8 KB)
    n_caps: int = 3
    total_rows: int = 1 << 20              # 8 GB / 8 KB

    def __post_init__(self):
        if self.row_width < 1 or self.n_caps < 1 or self.total_rows < 1:
            raise ValueError("geometry fields must be positive")


def _src_words(data, width):
    if isinstance(data, B.RowVector):
        if data.width != width:
            raise WidthMismatch(f"row data has {data.width} bits, array rows have {width}")
        return data.words
    data = np.asarray(data, dtype=np.uint64)
    if len(data) != B.n_words(width):
        raise WidthMismatch(f"row data has {len(data)} words, array rows need {B.n_words(width)}")
    return data


class _ArrayBase:
    def __init__(self, geometry: ArrayGeometry, lanes: int = 1):
        if lanes < 1:
            raise ValueError("lanes must be >= 1")
        self.geometry = geometry
        self.lanes = lanes
        self.width = geometry.row_width * lanes
        self.trace: list = []

    def _emit(self, cmd: Command) -> None:
        self.trace.append(cmd)

    def _check_row(self, row: int) -> None:
        if not 0 <= row < self.geometry.total_rows:
            raise IndexOutOfRange(f"row {row} outside 0..{self.geometry.total_rows - 1}")


class FeArray(_ArrayBase):
    """Rows of 2T-nC cells.

    Per-capacitor counters are kept per (row, cap) rather than per cell:
    every command addresses whole rows, so all cells of a row always carry
    the same counts.  A ``DisturbBudgetExhausted`` therefore reports column 0.
    """

    def __init__(self, geometry: ArrayGeometry, config: Optional[CellConfig] = None,
                 lanes: int = 1, auto_write_back: bool = False):
        super().__init__(geometry, lanes)
        self.config = config or CellConfig(n_caps=geometry.n_caps)
        if self.config.n_caps != geometry.n_caps:
            raise ValueError("cell config and geometry disagree on n_caps")
        self.auto_write_back = auto_write_back
        self._pol: dict = {}
        self._disturb: dict = {}
        self._cycles: dict = {}
        self._zero = B.fill_words(self.width, 0)
        self.rsl_buffer: Optional[np.ndarray] = None
        self.endurance_violations = 0

    # state inspection ---------------------------------------------------
    def _check_cap(self, cap: int) -> None:
        if not 0 <= cap < self.geometry.n_caps:
            raise IndexOutOfRange(f"capacitor {cap} outside 0..{self.geometry.n_caps - 1}")

    def stored(self, row: int, cap: int) -> B.RowVector:
        """Host-side view of the stored polarizations (not a sensing command)."""
        return B.RowVector(self._pol.get((row, cap), self._zero), self.width)

    def disturb_count(self, row: int, cap: int) -> int:
        return self._disturb.get((row, cap), 0)

    def program_cycles(self, row: int, cap: int) -> int:
        return self._cycles.get((row, cap), 0)

    # primitive commands -------------------------------------------------
    def _program(self, row, cap, words):
        self._check_row(row)
        self._check_cap(cap)
        key = (row, cap)
        if self._cycles.get(key, 0) >= self.config.endurance_limit:
            msg = f"row {row} cap {cap} reached {self.config.endurance_limit} program cycles"
            if self.config.endurance_policy == "abort":
                raise EnduranceExceeded(msg, column=0)
            self.endurance_violations += 1
            log.warning(msg)
        self._pol[key] = words
        self._disturb[key] = 0
        self._cycles[key] = self._cycles.get(key, 0) + 1

    def write_row(self, row: int, cap: int, data, src: Optional[str] = None) -> None:
        if self.rsl_buffer is not None:
            raise CommandSequenceError("host write while a row is activated; precharge first")
        self._program(row, cap, _src_words(data, self.width))
        self._emit(Command(CommandKind.FE_WRITE_ROW, row, (cap,), src=src))

    def write_back_row(self, row: int, cap: int) -> None:
        """Re-program a capacitor row with its own contents, clearing accumulated disturb."""
        self._program(row, cap, self._pol.get((row, cap), self._zero))
        self._emit(Command(CommandKind.FE_WRITE_BACK_ROW, row, (cap,)))

    def _sense(self, row, caps):
        budget = self.config.disturb_budget
        for cap in caps:
            if self._disturb.get((row, cap), 0) >= budget:
                if not self.auto_write_back:
                    raise DisturbBudgetExhausted(
                        f"row {row} cap {cap} exhausted its disturb budget ({budget})", column=0)
                self.write_back_row(row, cap)
        for cap in caps:
            self._disturb[(row, cap)] = self._disturb.get((row, cap), 0) + 1

    def activate_tba(self, row: int, caps) -> None:
        caps = tuple(caps)
        self._check_row(row)
        if len(caps) != 3:
            raise ValueError("TBA needs exactly three capacitors")
        for c in caps:
            self._check_cap(c)
        if len(set(caps)) != 3:
            raise DuplicateIndex(f"TBA capacitors must be distinct, got {caps}")
        if self.rsl_buffer is not None:
            raise CommandSequenceError("ACTIVATE while the RSL buffer is still latched")
        self._sense(row, caps)
        a, b, c = (self._pol.get((row, k), self._zero) for k in caps)
        self.rsl_buffer = B.min_words(a, b, c, self.width)
        self._emit(Command(CommandKind.FE_ACTIVATE_TBA, row, caps))

    def activate_read(self, row: int, cap: int) -> None:
        self._check_row(row)
        self._check_cap(cap)
        if self.rsl_buffer is not None:
            raise CommandSequenceError("ACTIVATE while the RSL buffer is still latched")
        self._sense(row, (cap,))
        self.rsl_buffer = B.invert_words(self._pol.get((row, cap), self._zero), self.width)
        self._emit(Command(CommandKind.FE_ACTIVATE_READ, row, (cap,)))

    def copy(self, dst_row: int, dst_cap: int) -> None:
        """Drive the latched RSL data through the tri-state buffer into a destination row."""
        if self.rsl_buffer is None:
            raise CommandSequenceError("COPY with no sensed data in the RSL buffer")
        self._program(dst_row, dst_cap, self.rsl_buffer)
        self._emit(Command(CommandKind.FE_COPY, dst=(dst_row, dst_cap)))

    def precharge(self) -> None:
        self.rsl_buffer = None
        self._emit(Command(CommandKind.FE_PRECHARGE))

    # composite row operations -------------------------------------------
    def fe_write_row(self, row: int, cap: int, data) -> None:
        self.write_row(row, cap, data)

    def fe_acp(self, row: int, caps, dst_row: int, dst_cap: int, fanout=()) -> None:
        """ACTIVATE (TBA) - COPY - PRECHARGE.  ``fanout`` adds further COPY destinations."""
        self.activate_tba(row, caps)
        self.copy(dst_row, dst_cap)
        for r, c in fanout:
            self.copy(r, c)
        self.precharge()

    def fe_not_row(self, row: int, cap: int, dst_row: int, dst_cap: int, fanout=()) -> None:
        self.activate_read(row, cap)
        self.copy(dst_row, dst_cap)
        for r, c in fanout:
            self.copy(r, c)
        self.precharge()

    # replay ----------------------------------------------------------------
    def apply(self, cmd: Command, sources=None) -> None:
        k = cmd.kind
        if k is CommandKind.FE_WRITE_ROW:
            self.write_row(cmd.row, cmd.caps[0], _resolve_source(cmd.src, sources, self.width),
                           src=cmd.src)
        elif k is CommandKind.FE_ACTIVATE_TBA:
            self.activate_tba(cmd.row, cmd.caps)
        elif k is CommandKind.FE_ACTIVATE_READ:
            self.activate_read(cmd.row, cmd.caps[0])
        elif k is CommandKind.FE_COPY:
            self.copy(*cmd.dst)
        elif k is CommandKind.FE_PRECHARGE:
            self.precharge()
        elif k is CommandKind.FE_WRITE_BACK_ROW:
            self.write_back_row(cmd.row, cmd.caps[0])
        else:
            raise UnknownCommandKind(f"{k} is not a FeRAM command")


def _resolve_source(src, sources, width):
    if src == "#0":
        return B.fill_words(width, 0)
    if src == "#1":
        return B.fill_words(width, 1)
    if sources is None or src not in sources:
        raise KeyError(f"no host data supplied for {src!r}")
    return sources[src]


class DramArray(_ArrayBase):
    """1T-1C DRAM subarray with Ambit-style reserved rows.

    Rows 0-3 are the compute rows T0-T3 and rows 4-5 the dual-contact rows
    DCC0/DCC1.  A second activation may open several reserved rows at once
    (a RowClone into each), and a DCC row opened through its negated
    wordline captures the complement of the bitlines.  A TRA senses any
    three reserved rows and leaves their majority in all three.  A row that
    was never written holds no valid charge.
    """
    COMPUTE_ROWS = (0, 1, 2, 3)
    DCC_ROWS = (4, 5)
    FIRST_DATA_ROW = 6

    def __init__(self, geometry: ArrayGeometry, lanes: int = 1,
                 refresh_interval_ms: float = REFRESH_INTERVAL_MS):
        super().__init__(geometry, lanes)
        self.refresh_interval_ms = refresh_interval_ms
        self._rows: dict = {}
        self._valid: dict = {}
        self.row_buffer: Optional[np.ndarray] = None

    @property
    def compute_rows(self):
        return self.COMPUTE_ROWS

    @property
    def dcc_rows(self):
        return self.DCC_ROWS

    def stored(self, row: int) -> B.RowVector:
        if not self._valid.get(row, False):
            raise InvalidCellRead(f"row {row} holds no valid data")
        return B.RowVector(self._rows[row], self.width)

    def is_valid(self, row: int) -> bool:
        return self._valid.get(row, False)

    def _sense_row(self, row):
        # destructive read: the cells drain into the sense amplifiers ...
        if not self._valid.get(row, False):
            raise InvalidCellRead(f"activate of row {row}, which holds no valid data")
        self._valid[row] = False
        words = self._rows[row]
        # ... and the latched amplifiers drive the value back (restore)
        self._valid[row] = True
        return words

    def _store(self, row, words):
        self._rows[row] = words
        self._valid[row] = True

    def write_row(self, row: int, data, src: Optional[str] = None) -> None:
        self._check_row(row)
        if self.row_buffer is not None:
            raise CommandSequenceError("host write while a row is open; precharge first")
        self._store(row, _src_words(data, self.width))
        self._emit(Command(CommandKind.DR_WRITE_ROW, row, src=src))

    def activate(self, row: int) -> None:
        self._check_row(row)
        if self.row_buffer is not None:
            raise CommandSequenceError("ACTIVATE while another row is open")
        self.row_buffer = self._sense_row(row)
        self._emit(Command(CommandKind.DR_ACTIVATE, row))

    def activate_tra(self, rows=(0, 1, 2)) -> None:
        """Triple-row activation: the three rows all settle to their majority."""
        rows = tuple(rows)
        reserved = self.COMPUTE_ROWS + self.DCC_ROWS
        if len(rows) != 3 or len(set(rows)) != 3 or any(r not in reserved for r in rows):
            raise CommandSequenceError(f"TRA needs three distinct reserved rows, got {rows}")
        if self.row_buffer is not None:
            raise CommandSequenceError("ACTIVATE while another row is open")
        a, b, c = (self._sense_row(r) for r in rows)
        m = B.maj_words(a, b, c)
        for r in rows:
            self._store(r, m)
        self.row_buffer = m
        self._emit(Command(CommandKind.DR_ACTIVATE_TRA, rows[0], rows))

    def rowclone(self, *dst_rows: int) -> None:
        """Second ACTIVATE of an AAP: the open row buffer overwrites every row in ``dst_rows``."""
        for r in dst_rows:
            self._check_row(r)
        if self.row_buffer is None:
            raise CommandSequenceError("RowClone with no open row")
        for r in dst_rows:
            self._store(r, self.row_buffer)
        self._emit(Command(CommandKind.DR_COPY_ROWCLONE, dst=tuple(dst_rows)))

    def not_dcc(self, dcc_row: int, *also: int) -> None:
        """Second ACTIVATE through a DCC row's negated wordline.

        The DCC row captures the complement of the open row; rows in ``also``
        are opened with it and receive a plain RowClone.
        """
        if dcc_row not in self.DCC_ROWS:
            raise CommandSequenceError(f"row {dcc_row} is not a dual-contact row")
        for r in also:
            self._check_row(r)
        if self.row_buffer is None:
            raise CommandSequenceError("DCC NOT with no open row")
        self._store(dcc_row, B.invert_words(self.row_buffer, self.width))
        for r in also:
            self._store(r, self.row_buffer)
        self._emit(Command(CommandKind.DR_NOT_DCC, dst=(dcc_row,) + tuple(also)))

    def precharge(self) -> None:
        self.row_buffer = None
        self._emit(Command(CommandKind.DR_PRECHARGE))

    # composite primitives ------------------------------------------------
    def dram_aap(self, src_row: int, *dst_rows: int) -> None:
        self.activate(src_row)
        self.rowclone(*dst_rows)
        self.precharge()

    def dram_tra_aap(self, *dst_rows: int, rows=(0, 1, 2)) -> None:
        self.activate_tra(rows)
        self.rowclone(*dst_rows)
        self.precharge()

    def dram_ap(self, rows) -> None:
        """ACTIVATE-PRECHARGE of a triple: an in-place TRA with no copy-out."""
        self.activate_tra(rows)
        self.precharge()

    def dram_not_dcc(self, src_row: int, dst_row: int, dcc_row: int = 4) -> None:
        """NOT as two AAPs: capture the complement in a DCC row, then copy it out."""
        self.activate(src_row)
        self.not_dcc(dcc_row)
        self.precharge()
        self.dram_aap(dcc_row, dst_row)

    def apply(self, cmd: Command, sources=None) -> None:
        k = cmd.kind
        if k is CommandKind.DR_WRITE_ROW:
            self.write_row(cmd.row, _resolve_source(cmd.src, sources, self.width), src=cmd.src)
        elif k is CommandKind.DR_ACTIVATE:
            self.activate(cmd.row)
        elif k is CommandKind.DR_ACTIVATE_TRA:
            self.activate_tra(cmd.caps)
        elif k is CommandKind.DR_COPY_ROWCLONE:
            self.rowclone(*cmd.dst)
        elif k is CommandKind.DR_NOT_DCC:
            self.not_dcc(*cmd.dst)
        elif k is CommandKind.DR_PRECHARGE:
            self.precharge()
        else:
            raise UnknownCommandKind(f"{k} is not an executable DRAM command")


def refresh_accounting(array, elapsed_cycles: float, cycle_time_ns: float,
                       e_activate_nj: float = 22.6, e_precharge_nj: float = 0.32,
                       total_rows: Optional[int] = None,
                       interval_ms: Optional[float] = None):
    """Amortized refresh cost over ``elapsed_cycles`` of execution.

    Every row of the memory is refreshed once per interval; a partial interval
    is charged pro rata.  Returns ``(energy_J, refresh_cycles)``; FeRAM arrays
    never refresh.
    """
    if elapsed_cycles < 0:
        raise ValueError("elapsed_cycles must be >= 0")
    if isinstance(array, FeArray) or array == "feram":
        return 0.0, 0.0
    if isinstance(array, DramArray):
        interval_ms = interval_ms or array.refresh_interval_ms
        rows = array.geometry.total_rows if total_rows is None else total_rows
    else:
        interval_ms = interval_ms or REFRESH_INTERVAL_MS
        rows = total_rows
    if rows is None:
        raise ValueError("total_rows is required when no DramArray is given")
    windows = elapsed_cycles * cycle_time_ns * 1e-9 / (interval_ms * 1e-3)
    energy_j = windows * rows * (e_activate_nj + e_precharge_nj) * 1e-9
    return energy_j, windows * rows
