"""Lowering of bit programs onto the FeRAM and DRAM command sets, and plan execution.

FeRAM: every two-input gate is a triple-bit activation in one row of
cells, so its two operands and the control bit sit in capacitors 0-2 of a
"gate row".  Host data (inputs, constants) is written straight into the
capacitors that consume it; computed values are delivered by the COPY slot
of the producing ACP, one COPY per destination.  Gate rows are pooled by the
constants they still hold, so a control bit written once is reused until
the row is repurposed.

DRAM: one row per live value.  AND/OR copy both operands and a constant row
into the three compute rows and finish with a TRA AAP; NOT goes through the
dual-contact row.
"""
from __future__ import annotations

import heapq
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .bits import RowVector
from .cells import CellConfig
from .cost import CostParams, EnergyLedger, finalize as finalize_ledger
from .engine import ArrayGeometry, Command, CommandKind, DramArray, FeArray, trace_to_jsonl
from .errors import CapacityExceeded, WidthMismatch
from .ir import BitProgram, validate

K = CommandKind
CONST_REFS = ("#0", "#1")


@dataclass
class LoweredPlan:
    backend: str
    geometry: ArrayGeometry
    commands: list
    placement: dict                    # output name -> (row, cap) | (row,)
    outputs: list
    inputs: list
    stats: dict = field(default_factory=dict)

    def to_jsonl(self) -> str:
        return trace_to_jsonl(self.commands)

    def command_counts(self) -> Counter:
        return Counter(c.kind for c in self.commands)


def _const_aliases(program: BitProgram) -> dict:
    alias = {}
    for d in program.decls:
        if d.role == "const0":
            alias[d.name] = "#0"
        elif d.role == "const1":
            alias[d.name] = "#1"
    for o in program.ops:
        if o.op == "CONST":
            alias[o.result] = f"#{o.value}"
    return alias


# ---------------------------------------------------------------------------
# FeRAM


@dataclass
class _Micro:
    kind: str          # "tba" | "read" | "const"
    args: tuple
    result: str


def _expand_feram(program: BitProgram):
    alias = _const_aliases(program)
    outputs = set(program.outputs)
    micros: list = []
    n = 0

    def tmp():
        nonlocal n
        n += 1
        return f"%{n}"

    def tba(a, b, c, r):
        micros.append(_Micro("tba", (a, b, c), r))
        return r

    def read(a, r):
        micros.append(_Micro("read", (a,), r))
        return r

    def xor(a, b, r):
        t = tba(a, b, "#0", tmp())
        u = tba(a, t, "#0", tmp())
        v = tba(b, t, "#0", tmp())
        return tba(u, v, "#0", r)

    for o in program.ops:
        a = [alias.get(x, x) for x in o.args]
        r = o.result
        if o.op == "NOT":
            read(a[0], r)
        elif o.op == "NAND":
            tba(a[0], a[1], "#0", r)
        elif o.op == "NOR":
            tba(a[0], a[1], "#1", r)
        elif o.op == "AND":
            read(tba(a[0], a[1], "#0", tmp()), r)
        elif o.op == "OR":
            read(tba(a[0], a[1], "#1", tmp()), r)
        elif o.op == "XOR":
            xor(a[0], a[1], r)
        elif o.op == "XNOR":
            read(xor(a[0], a[1], tmp()), r)
        elif o.op == "COPY":
            read(read(a[0], tmp()), r)
        elif o.op == "MAJ":
            read(tba(a[0], a[1], a[2], tmp()), r)
        elif o.op == "CONST":
            if r in outputs:
                micros.append(_Micro("const", (alias[r],), r))
        else:  # pragma: no cover - validate() rejects unknown ops
            raise ValueError(o.op)
    return micros


def _gate_layout(args):
    """Data operands go to caps 0.., constants (sorted) fill the remaining caps."""
    data = [a for a in args if a not in CONST_REFS]
    consts = sorted(int(a[1]) for a in args if a in CONST_REFS)
    layout = [(i, a) for i, a in enumerate(data)]
    sig = [None] * len(data) + consts
    return layout, tuple(sig)


class _FeAllocator:
    def __init__(self, n_caps: int):
        self.n_caps = n_caps
        self.next_row = 0
        self.sig: dict = {}                         # row -> [known constant per cap 0..2]
        self.pools: dict = defaultdict(list)        # signature -> heap of free gate rows
        self.storage_free: list = []                # heap of free (row, cap) storage slots
        self.storage_used: dict = {}

    def _fresh(self) -> int:
        r = self.next_row
        self.next_row += 1
        self.sig[r] = [None, None, None]
        return r

    def gate_row(self, need: tuple) -> int:
        best = None
        for sig, heap in self.pools.items():
            if not heap:
                continue
            cost = sum(1 for j in range(3) if need[j] is not None and sig[j] != need[j])
            key = (cost, 0, heap[0])
            if best is None or key < best[0]:
                best = (key, sig)
        fresh_cost = sum(1 for v in need if v is not None)
        if best is None or (fresh_cost, 1, self.next_row) < best[0]:
            return self._fresh()
        return heapq.heappop(self.pools[best[1]])

    def release_gate(self, row: int) -> None:
        heapq.heappush(self.pools[tuple(self.sig[row])], row)

    def storage(self) -> tuple:
        if not self.storage_free:
            pool = self.pools.get((None, None, None))
            row = heapq.heappop(pool) if pool else self._fresh()
            self.storage_used[row] = 0
            for c in range(self.n_caps):
                heapq.heappush(self.storage_free, (row, c))
        row, cap = heapq.heappop(self.storage_free)
        self.storage_used[row] += 1
        if cap < 3:
            self.sig[row][cap] = None
        return row, cap

    def release_storage(self, slot: tuple) -> None:
        row, _ = slot
        heapq.heappush(self.storage_free, slot)
        self.storage_used[row] -= 1
        if self.storage_used[row] == 0:
            del self.storage_used[row]
            self.storage_free = [s for s in self.storage_free if s[0] != row]
            heapq.heapify(self.storage_free)
            self.release_gate(row)


def lower_feram(program: BitProgram, geometry: Optional[ArrayGeometry] = None) -> LoweredPlan:
    geometry = geometry or ArrayGeometry()
    validate(program)
    if geometry.n_caps < 3:
        raise CapacityExceeded("triple-bit activation needs at least 3 capacitors per cell")
    micros = _expand_feram(program)
    inputs = set(program.inputs)
    outputs = set(program.outputs)

    tba_uses = defaultdict(list)       # value -> [(micro index, cap)]
    read_uses = defaultdict(list)      # value -> [micro index]
    layouts = {}
    for i, m in enumerate(micros):
        if m.kind == "tba":
            layout, sig = _gate_layout(m.args)
            layouts[i] = (layout, sig)
            for cap, v in layout:
                tba_uses[v].append((i, cap))
        elif m.kind == "read":
            read_uses[m.args[0]].append(i)

    alloc = _FeAllocator(geometry.n_caps)
    cmds: list = []
    gate_row: dict = {}
    storage: dict = {}                 # value -> storage slot
    reads_left = {v: len(ix) for v, ix in read_uses.items()}
    placement: dict = {}

    def ensure_gate(i):
        if i not in gate_row:
            gate_row[i] = alloc.gate_row(layouts[i][1])
        return gate_row[i]

    def write(row, cap, src):
        cmds.append(Command(K.FE_WRITE_ROW, row, (cap,), src=src))
        if cap < 3 and row in alloc.sig:
            alloc.sig[row][cap] = int(src[1]) if src in CONST_REFS else None

    def deliver(i, r):
        """COPY the just-sensed value ``r`` to every place that needs it, then PRECHARGE."""
        dests = []
        for j, cap in tba_uses.get(r, ()):
            row = ensure_gate(j)
            dests.append((row, cap))
            alloc.sig[row][cap] = None
        last_read = max(read_uses.get(r, [-1]))
        covered = any(j > last_read for j, _ in tba_uses.get(r, ()))
        if r in outputs or (last_read >= 0 and not covered):
            slot = alloc.storage()
            storage[r] = slot
            dests.append(slot)
            if r in outputs:
                placement[r] = slot
        for row, cap in dests:
            cmds.append(Command(K.FE_COPY, dst=(row, cap)))
        cmds.append(Command(K.FE_PRECHARGE))

    def locate(v, i):
        if v in storage:
            return storage[v]
        for j, cap in tba_uses.get(v, ()):
            if j > i and j in gate_row:
                return gate_row[j], cap
        raise AssertionError(f"no live location for {v!r} at micro-op {i}")

    for i, m in enumerate(micros):
        if m.kind == "const":
            slot = alloc.storage()
            write(*slot, m.args[0])
            placement[m.result] = slot
            continue
        if m.kind == "tba":
            row = ensure_gate(i)
            layout, sig = layouts[i]
            for cap in range(3):
                if sig[cap] is not None and alloc.sig[row][cap] != sig[cap]:
                    write(row, cap, f"#{sig[cap]}")
            for cap, v in layout:
                if v in inputs:
                    write(row, cap, v)
            cmds.append(Command(K.FE_ACTIVATE_TBA, row, (0, 1, 2)))
            for cap, _ in layout:
                alloc.sig[row][cap] = None
            alloc.release_gate(row)
        else:
            v = m.args[0]
            if v in inputs or v in CONST_REFS:
                if v not in storage:
                    slot = alloc.storage()
                    write(*slot, v)
                    storage[v] = slot
            cmds.append(Command(K.FE_ACTIVATE_READ, *_row_caps(locate(v, i))))
            reads_left[v] -= 1
            if reads_left[v] == 0 and v in storage and v not in outputs:
                alloc.release_storage(storage.pop(v))
        deliver(i, m.result)

    if alloc.next_row > geometry.total_rows:
        raise CapacityExceeded(f"plan needs {alloc.next_row} rows, array has {geometry.total_rows}")
    live = set(storage) - outputs
    if live:  # pragma: no cover - allocator invariant
        raise AssertionError(f"scratch values never released: {sorted(live)[:5]}")
    counts = Counter(c.kind for c in cmds)
    stats = {
        "peak_rows": alloc.next_row,
        "operand_copies": 0,
        "micro_ops": len(micros),
        "control_writes": sum(1 for c in cmds if c.kind is K.FE_WRITE_ROW and c.src in CONST_REFS),
        "input_writes": sum(1 for c in cmds if c.kind is K.FE_WRITE_ROW and c.src not in CONST_REFS),
        "acp": counts[K.FE_ACTIVATE_TBA],
        "not": counts[K.FE_ACTIVATE_READ],
    }
    return LoweredPlan("feram", geometry, cmds, placement, list(program.outputs),
                       list(program.inputs), stats)


def _row_caps(slot):
    row, cap = slot
    return row, (cap,)


# ---------------------------------------------------------------------------
# DRAM


def lower_dram(program: BitProgram, geometry: Optional[ArrayGeometry] = None) -> LoweredPlan:
    """Ambit command sequences.

    AND/OR: three operand-copy AAPs into T0-T2 and a TRA AAP out (4 AAP).
    NAND/NOR: the TRA result goes out through DCC0 (5 AAP).  NOT: 2 AAP via
    DCC0.  XOR/XNOR: 5 AAP + 2 AP using the DCC rows and multi-row opens.
    """
    geometry = geometry or ArrayGeometry()
    validate(program)
    alias = _const_aliases(program)
    inputs = set(program.inputs)
    outputs = set(program.outputs)
    T0, T1, T2, T3 = DramArray.COMPUTE_ROWS
    DCC0, DCC1 = DramArray.DCC_ROWS
    const_row = {"#0": DramArray.FIRST_DATA_ROW, "#1": DramArray.FIRST_DATA_ROW + 1}
    first_free = DramArray.FIRST_DATA_ROW + 2

    cmds: list = []
    loc: dict = {}
    materialized: set = set()
    free_rows: list = []
    next_row = first_free
    copies = 0

    uses = Counter()
    for o in program.ops:
        for a in o.args:
            uses[alias.get(a, a)] += 1

    def alloc():
        nonlocal next_row
        if free_rows:
            return heapq.heappop(free_rows)
        r = next_row
        next_row += 1
        return r

    def row_of(v):
        if v in CONST_REFS:
            if v not in materialized:
                cmds.append(Command(K.DR_WRITE_ROW, const_row[v], src=v))
                materialized.add(v)
            return const_row[v]
        if v not in loc and v in inputs:
            loc[v] = alloc()
            cmds.append(Command(K.DR_WRITE_ROW, loc[v], src=v))
        return loc[v]

    def aap(src, *dst):
        cmds.extend((Command(K.DR_ACTIVATE, src), Command(K.DR_COPY_ROWCLONE, dst=dst),
                     Command(K.DR_PRECHARGE)))

    def load(src, *dst):
        # operand copy into reserved rows, forced by destructive TRA
        nonlocal copies
        copies += 1
        aap(src, *dst)

    def load_neg(src, dcc, *also):
        nonlocal copies
        copies += 1
        cmds.extend((Command(K.DR_ACTIVATE, src), Command(K.DR_NOT_DCC, dst=(dcc,) + also),
                     Command(K.DR_PRECHARGE)))

    def tra(rows):
        cmds.append(Command(K.DR_ACTIVATE_TRA, rows[0], rows))

    def not_(src, dst):
        cmds.extend((Command(K.DR_ACTIVATE, src), Command(K.DR_NOT_DCC, dst=(DCC0,)),
                     Command(K.DR_PRECHARGE)))
        aap(DCC0, dst)

    def gate(a, b, ctrl, dst, invert=False):
        load(a, T0)
        load(b, T1)
        load(row_of(ctrl), T2)
        tra((T0, T1, T2))
        if invert:
            cmds.extend((Command(K.DR_NOT_DCC, dst=(DCC0,)), Command(K.DR_PRECHARGE)))
            aap(DCC0, dst)
        else:
            cmds.extend((Command(K.DR_COPY_ROWCLONE, dst=(dst,)), Command(K.DR_PRECHARGE)))

    def xor(a, b, dst, xnor=False):
        k, k_bar = ("#1", "#0") if xnor else ("#0", "#1")
        load_neg(a, DCC0, T0)                 # DCC0 = !a, T0 = a
        load_neg(b, DCC1, T1)                 # DCC1 = !b, T1 = b
        load(row_of(k), T2, T3)
        tra((DCC0, T1, T2))                   # !a.b   (xnor: !a+b)
        cmds.append(Command(K.DR_PRECHARGE))
        tra((DCC1, T0, T3))                   # a.!b   (xnor: a+!b)
        cmds.append(Command(K.DR_PRECHARGE))
        load(row_of(k_bar), T2)
        tra((T0, T1, T2))
        cmds.extend((Command(K.DR_COPY_ROWCLONE, dst=(dst,)), Command(K.DR_PRECHARGE)))

    for o in program.ops:
        if o.op == "CONST":
            if o.result in outputs:
                loc[o.result] = alloc()
                cmds.append(Command(K.DR_WRITE_ROW, loc[o.result], src=alias[o.result]))
            continue
        args = [alias.get(a, a) for a in o.args]
        src = [row_of(a) for a in args]
        dst = alloc()
        op = o.op
        if op == "NOT":
            not_(src[0], dst)
        elif op in ("AND", "NAND"):
            gate(src[0], src[1], "#0", dst, invert=op == "NAND")
        elif op in ("OR", "NOR"):
            gate(src[0], src[1], "#1", dst, invert=op == "NOR")
        elif op in ("XOR", "XNOR"):
            xor(src[0], src[1], dst, xnor=op == "XNOR")
        elif op == "COPY":
            aap(src[0], dst)
        elif op == "MAJ":
            load(src[0], T0)
            load(src[1], T1)
            load(src[2], T2)
            tra((T0, T1, T2))
            cmds.extend((Command(K.DR_COPY_ROWCLONE, dst=(dst,)), Command(K.DR_PRECHARGE)))
        loc[o.result] = dst
        for a in args:
            if a in CONST_REFS:
                continue
            uses[a] -= 1
            if uses[a] == 0 and a not in outputs:
                heapq.heappush(free_rows, loc[a])
        if uses[o.result] == 0 and o.result not in outputs:
            heapq.heappush(free_rows, dst)

    if next_row > geometry.total_rows:
        raise CapacityExceeded(f"plan needs {next_row} rows, array has {geometry.total_rows}")
    counts = Counter(c.kind for c in cmds)
    second = counts[K.DR_COPY_ROWCLONE] + counts[K.DR_NOT_DCC]
    stats = {
        "peak_rows": next_row,
        "operand_copies": copies,
        "aap": second,
        "ap": counts[K.DR_PRECHARGE] - second,
        "tra": counts[K.DR_ACTIVATE_TRA],
        "input_writes": sum(1 for c in cmds if c.kind is K.DR_WRITE_ROW and c.src not in CONST_REFS),
    }
    placement = {o: (loc[o],) for o in program.outputs}
    return LoweredPlan("dram", geometry, cmds, placement, list(program.outputs),
                       list(program.inputs), stats)


def lower(program: BitProgram, backend: str, geometry: Optional[ArrayGeometry] = None) -> LoweredPlan:
    if backend == "feram":
        return lower_feram(program, geometry)
    if backend == "dram":
        return lower_dram(program, geometry)
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# execution


def execute(plan: LoweredPlan, inputs: dict, cost_params: Optional[CostParams] = None,
            cell_config: Optional[CellConfig] = None, finalize: bool = True,
            width: Optional[int] = None):
    """Run ``plan`` on a fresh array.

    The input rows may be any whole multiple of the geometry's row width; each
    row-width slice is an independent subarray ("lane") driven by the same
    commands.  Returns ``(outputs, ledger, trace)``.  FeRAM capacitors that
    hit their disturb budget get an automatic row write-back, which shows up
    in both trace and ledger.
    """
    geo = plan.geometry
    params = cost_params or CostParams()
    widths = {v.width for v in inputs.values()}
    if width is not None:
        widths.add(width)
    if len(widths) > 1:
        raise WidthMismatch(f"input rows have differing widths {sorted(widths)}")
    width = widths.pop() if widths else geo.row_width
    if width % geo.row_width or width == 0:
        raise WidthMismatch(f"row data width {width} is not a multiple of row_width {geo.row_width}")
    lanes = width // geo.row_width
    if plan.stats.get("peak_rows", 0) * lanes > geo.total_rows:
        raise CapacityExceeded(
            f"{lanes} subarrays x {plan.stats['peak_rows']} rows exceeds {geo.total_rows} rows")
    missing = [n for n in plan.inputs if n not in inputs]
    if missing:
        raise KeyError(f"missing inputs: {missing}")
    sources = {n: inputs[n].words for n in plan.inputs}

    if plan.backend == "feram":
        config = cell_config or CellConfig(n_caps=geo.n_caps)
        arr = FeArray(geo, config, lanes=lanes, auto_write_back=True)
    else:
        arr = DramArray(geo, lanes=lanes, refresh_interval_ms=params.refresh_interval_ms)
    for cmd in plan.commands:
        arr.apply(cmd, sources)

    if plan.backend == "feram":
        outputs = {n: arr.stored(*plan.placement[n]) for n in plan.outputs}
    else:
        outputs = {n: arr.stored(plan.placement[n][0]) for n in plan.outputs}

    ledger = EnergyLedger(plan.backend, params)
    for kind, n in Counter(c.kind for c in arr.trace).items():
        ledger.charge(kind, n * lanes)
    ledger.operand_copies = plan.stats.get("operand_copies", 0) * lanes
    if finalize:
        finalize_ledger(ledger, geo.total_rows)
    return outputs, ledger, arr.trace


def run_program(program: BitProgram, backend: str, inputs: dict,
                geometry: Optional[ArrayGeometry] = None, **kw):
    """Lower and execute in one call."""
    plan = lower(program, backend, geometry)
    return execute(plan, inputs, **kw)
