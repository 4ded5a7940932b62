"""The eight benchmark workloads: data generators, bit-sliced programs, scalar oracles.

Layout is bit-sliced: each column of a row holds one record, and bit ``b``
of every record lives in the same input row.  A *block* is one row width
of records.  ``size_bytes`` is the total input data volume, so a workload
whose records carry ``k`` input bits has ``size_bytes * 8 // k`` records.
The last block is zero-padded; every block runs the same command stream and
outputs of padding columns are discarded.

Input row ``k`` (in program declaration order) is drawn from its own
:class:`~limsim.prng.BitStream` seeded with ``derive_seed(seed, k)``.
Build-time constants (CRC polynomial, cipher key, BNN weights) come from
``derive_seed(seed, CONST_STREAM)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import bits as B
from .cells import CellConfig
from .cost import CostParams, EnergyLedger, finalize as finalize_ledger
from .engine import ArrayGeometry
from .errors import CapacityExceeded, SizeNotAligned, UnsupportedParams
from .ir import BitProgram
from .lowering import LoweredPlan, execute, lower
from .prng import BitStream, derive_seed

WORKLOADS = ("crc8", "xor_cipher", "set_union", "set_intersection", "set_difference",
             "masked_init", "bitmap_query", "bnn_inference")
CONST_STREAM = 1 << 20
CHUNK_BITS = 1 << 26            # input bits held in memory per execution chunk

DEFAULT_PREDICATE = ["OR", ["AND", "B1", "B2"], ["AND", "B3", ["NOT", "B4"]]]
DEFAULT_PARAMS = {
    "crc8": {"poly": 0x07, "init": 0x00, "message_bytes": 8},
    "xor_cipher": {"key": None},
    "set_union": {},
    "set_intersection": {},
    "set_difference": {},
    "masked_init": {},
    "bitmap_query": {"predicate": DEFAULT_PREDICATE},
    "bnn_inference": {"n_inputs": 64, "n_neurons": 16, "threshold": 32, "popcount": "memory"},
}


@dataclass(frozen=True)
class WorkloadSpec:
    name: str
    size_bytes: int
    seed: int = 0
    params: dict = field(default_factory=dict, hash=False)

    def resolved_params(self) -> dict:
        if self.name not in WORKLOADS:
            raise UnsupportedParams(f"unknown workload {self.name!r}")
        defaults = DEFAULT_PARAMS[self.name]
        for k in self.params:
            if k not in defaults:
                raise UnsupportedParams(f"{self.name} has no parameter {k!r}")
        p = dict(defaults)
        p.update(self.params)
        return p

    def check_size(self, row_width: int) -> None:
        if self.size_bytes < 0:
            raise SizeNotAligned("size_bytes must be >= 0")
        if row_width % 64:
            raise UnsupportedParams("workloads need a row width that is a multiple of 64")
        if (self.size_bytes * 8) % row_width:
            raise SizeNotAligned(
                f"size_bytes {self.size_bytes} is not a multiple of the row size {row_width // 8}")

    def records(self, bits_per_record: int) -> int:
        return self.size_bytes * 8 // bits_per_record


def n_blocks(records: int, row_width: int) -> int:
    return -(-records // row_width)


@dataclass
class BitSlicedDataset:
    inputs: dict                   # input name -> RowVector
    layout: dict                   # input name -> (record field, bit)
    n_records: int

    def field_values(self, name: str, nbits: int) -> np.ndarray:
        """Reassemble record field ``name`` (``nbits`` wide) from its slice rows."""
        out = np.zeros(self.n_records, dtype=np.uint64)
        for var, (f, b) in self.layout.items():
            if f == name and b < nbits:
                out |= self.column_bits(var).astype(np.uint64) << np.uint64(b)
        return out

    def column_bits(self, var: str) -> np.ndarray:
        return self.inputs[var].to_bits()[: self.n_records]

    def field_bits(self, name: str, nbits: int) -> np.ndarray:
        """Record field as a (records, nbits) bool matrix, bit 0 first."""
        out = np.zeros((self.n_records, nbits), dtype=bool)
        for var, (f, b) in self.layout.items():
            if f == name:
                out[:, b] = self.column_bits(var)
        return out


# ---------------------------------------------------------------------------
# program builders


def _const_bits(seed: int, n: int) -> np.ndarray:
    return B.unpack_bits(BitStream(derive_seed(seed, CONST_STREAM)).words(-(-n // 64)), n)


def cipher_key(spec: WorkloadSpec) -> int:
    key = spec.resolved_params()["key"]
    if key is None:
        key = int(BitStream(derive_seed(spec.seed, CONST_STREAM)).words(1)[0]) & 0xFF
    return key


def bnn_weights(spec: WorkloadSpec) -> np.ndarray:
    p = spec.resolved_params()
    return _const_bits(spec.seed, p["n_neurons"] * p["n_inputs"]).reshape(p["n_neurons"], p["n_inputs"])


def _declare_const(prog: BitProgram, name: str, bit: int) -> str:
    return prog.declare(name, "const1" if bit else "const0")


def _build_crc8(spec, p):
    poly, init, nbytes = p["poly"], p["init"], p["message_bytes"]
    if not (0 <= poly <= 0xFF and 0 <= init <= 0xFF) or nbytes < 1:
        raise UnsupportedParams("crc8 needs 8-bit poly/init and message_bytes >= 1")
    prog = BitProgram()
    layout = {}
    msg = []
    for j in range(nbytes):
        for b in range(7, -1, -1):          # MSB of each byte enters first
            name = prog.declare(f"m{j}_{b}", "input")
            layout[name] = (f"byte{j}", b)
            msg.append(name)
    taps = [_declare_const(prog, f"poly{i}", (poly >> i) & 1) for i in range(8)]
    state = [_declare_const(prog, f"init{i}", (init >> i) & 1) for i in range(8)]
    outs = [prog.declare(f"crc{i}", "output") for i in range(8)]
    for n, m in enumerate(msg):
        last = n == len(msg) - 1
        fb = prog.emit("XOR", state[7], m)
        tap = [prog.emit("AND", fb, taps[i], out=outs[0] if (last and i == 0) else None)
               for i in range(8)]
        new = [tap[0]]
        for i in range(1, 8):
            new.append(prog.emit("XOR", state[i - 1], tap[i], out=outs[i] if last else None))
        state = new
    return prog, layout


def _build_xor_cipher(spec, p):
    key = cipher_key(spec)
    if not 0 <= key <= 0xFF:
        raise UnsupportedParams("xor_cipher key must be one byte")
    prog = BitProgram()
    layout = {}
    for i in range(8):
        layout[prog.declare(f"p{i}", "input")] = ("plain", i)
    for i in range(8):
        _declare_const(prog, f"k{i}", (key >> i) & 1)
    for i in range(8):
        prog.declare(f"c{i}", "output")
        prog.add("XOR", (f"p{i}", f"k{i}"), f"c{i}")
    return prog, layout


def _build_setop(spec, p):
    prog = BitProgram()
    layout = {prog.declare("A", "input"): ("A", 0), prog.declare("B", "input"): ("B", 0)}
    prog.declare("R", "output")
    if spec.name == "set_union":
        prog.add("OR", ("A", "B"), "R")
    elif spec.name == "set_intersection":
        prog.add("AND", ("A", "B"), "R")
    else:
        nb = prog.emit("NOT", "B")
        prog.add("AND", ("A", nb), "R")
    return prog, layout


def _build_masked_init(spec, p):
    prog = BitProgram()
    layout = {}
    for n in ("dst", "mask", "val"):
        layout[prog.declare(n, "input")] = (n, 0)
    prog.declare("R", "output")
    nm = prog.emit("NOT", "mask")
    keep = prog.emit("AND", "dst", nm)
    new = prog.emit("AND", "val", "mask")
    prog.add("OR", (keep, new), "R")
    return prog, layout


def predicate_leaves(pred) -> list:
    if isinstance(pred, str):
        return [pred]
    if not isinstance(pred, (list, tuple)) or not pred:
        raise UnsupportedParams(f"malformed predicate node {pred!r}")
    op, *kids = pred
    if op == "NOT" and len(kids) != 1 or op in ("AND", "OR") and len(kids) < 2 \
            or op not in ("AND", "OR", "NOT"):
        raise UnsupportedParams(f"malformed predicate node {pred!r}")
    out = []
    for k in kids:
        for leaf in predicate_leaves(k):
            if leaf not in out:
                out.append(leaf)
    return out


def _build_bitmap_query(spec, p):
    pred = p["predicate"]
    leaves = predicate_leaves(pred)
    prog = BitProgram()
    layout = {prog.declare(n, "input"): (n, 0) for n in leaves}
    prog.declare("R", "output")

    def walk(node, out=None):
        if isinstance(node, str):
            return prog.emit("COPY", node, out=out) if out else node
        op, *kids = node
        if op == "NOT":
            return prog.emit("NOT", walk(kids[0]), out=out)
        acc = walk(kids[0])
        for i, k in enumerate(kids[1:]):
            acc = prog.emit(op, acc, walk(k), out=out if i == len(kids) - 2 else None)
        return acc

    walk(pred, out="R")
    return prog, layout


class _Folder:
    """Boolean helpers that fold build-time constants (ints 0/1) instead of emitting ops."""

    def __init__(self, prog: BitProgram):
        self.prog = prog

    def not_(self, x):
        return 1 - x if isinstance(x, int) else self.prog.emit("NOT", x)

    def and_(self, x, y):
        if isinstance(x, int):
            x, y = y, x
        if isinstance(y, int):
            return x if y else 0
        return self.prog.emit("AND", x, y)

    def or_(self, x, y):
        if isinstance(x, int):
            x, y = y, x
        if isinstance(y, int):
            return 1 if y else x
        return self.prog.emit("OR", x, y)


def popcount_columns(prog: BitProgram, xs: list) -> list:
    """Column-compression adder tree; returns the count bits, LSB first."""
    cols = [list(xs)]
    k = 0
    while k < len(cols):
        col = cols[k]
        while len(col) > 1:
            if k + 1 == len(cols):
                cols.append([])
            if len(col) >= 3:
                a, b, c = col.pop(0), col.pop(0), col.pop(0)
                s = prog.emit("XOR", prog.emit("XOR", a, b), c)
                cols[k + 1].append(prog.emit("MAJ", a, b, c))
            else:
                a, b = col.pop(0), col.pop(0)
                s = prog.emit("XOR", a, b)
                cols[k + 1].append(prog.emit("AND", a, b))
            col.append(s)
        k += 1
    return [c[0] if c else 0 for c in cols]


def _greater_than(f: _Folder, count_bits: list, t: int):
    """count > t for a constant ``t``, scanning from the most significant bit."""
    if t >= (1 << len(count_bits)) - 1:
        return 0
    gt, eq = 0, 1
    for k in range(len(count_bits) - 1, -1, -1):
        c = count_bits[k]
        if (t >> k) & 1:
            eq = f.and_(eq, c)
        else:
            gt = f.or_(gt, f.and_(eq, c))
            eq = f.and_(eq, f.not_(c))
    return gt


def _build_bnn(spec, p):
    n_in, n_out, thr, mode = p["n_inputs"], p["n_neurons"], p["threshold"], p["popcount"]
    if n_in < 1 or n_out < 1 or thr < 0 or mode not in ("memory", "host"):
        raise UnsupportedParams("bnn_inference needs n_inputs, n_neurons >= 1, threshold >= 0, "
                                "popcount in {memory, host}")
    w = bnn_weights(spec)
    prog = BitProgram()
    layout = {}
    xs = []
    for i in range(n_in):
        xs.append(prog.declare(f"x{i}", "input"))
        layout[xs[-1]] = ("x", i)
    for n in range(n_out):
        for i in range(n_in):
            _declare_const(prog, f"w{n}_{i}", int(w[n, i]))
    f = _Folder(prog)
    for n in range(n_out):
        if mode == "host":
            for i in range(n_in):
                prog.declare(f"xn{n}_{i}", "output")
                prog.add("XNOR", (xs[i], f"w{n}_{i}"), f"xn{n}_{i}")
            continue
        match = [prog.emit("XNOR", xs[i], f"w{n}_{i}") for i in range(n_in)]
        y = _greater_than(f, popcount_columns(prog, match), thr)
        out = prog.declare(f"y{n}", "output")
        if isinstance(y, int):
            prog.add("CONST", (), out, value=y)
        else:
            prog.add("COPY", (y,), out)
    return prog, layout


_BUILDERS = {
    "crc8": _build_crc8, "xor_cipher": _build_xor_cipher, "set_union": _build_setop,
    "set_intersection": _build_setop, "set_difference": _build_setop,
    "masked_init": _build_masked_init, "bitmap_query": _build_bitmap_query,
    "bnn_inference": _build_bnn,
}


def build_with_layout(spec: WorkloadSpec):
    p = spec.resolved_params()
    return _BUILDERS[spec.name](spec, p)


def build_program(spec: WorkloadSpec) -> BitProgram:
    return build_with_layout(spec)[0]


# ---------------------------------------------------------------------------
# data


class _Generator:
    def __init__(self, spec: WorkloadSpec, inputs: list):
        self.streams = {n: BitStream(derive_seed(spec.seed, k)) for k, n in enumerate(inputs)}

    def take(self, width: int, records: int) -> dict:
        """Next ``records`` bits of every input, zero-padded to ``width`` columns."""
        nw = width // 64
        full, rem = divmod(records, 64)
        out = {}
        for n, s in self.streams.items():
            w = np.zeros(nw, dtype=np.uint64)
            got = s.words(full + (1 if rem else 0))
            w[: len(got)] = got
            if rem:
                w[full] &= np.uint64((1 << rem) - 1)
            out[n] = B.RowVector(w, width)
        return out


def generate(spec: WorkloadSpec, geometry: Optional[ArrayGeometry] = None) -> BitSlicedDataset:
    geometry = geometry or ArrayGeometry()
    spec.check_size(geometry.row_width)
    prog, layout = build_with_layout(spec)
    records = spec.records(len(prog.inputs))
    width = n_blocks(records, geometry.row_width) * geometry.row_width
    return BitSlicedDataset(_Generator(spec, prog.inputs).take(width, records), layout, records)


# ---------------------------------------------------------------------------
# oracles: plain per-record arithmetic on reassembled record fields


def crc8_bytes(data: np.ndarray, poly: int = 0x07, init: int = 0x00) -> np.ndarray:
    """CRC-8 (MSB first, no reflection, no final xor) of each row of a (records, n) byte array."""
    data = np.atleast_2d(np.asarray(data, dtype=np.uint8))
    crc = np.full(data.shape[0], init, dtype=np.uint16)
    for j in range(data.shape[1]):
        crc ^= data[:, j]
        for _ in range(8):
            hi = (crc & 0x80) != 0
            crc = (crc << 1) & 0xFF
            crc[hi] ^= poly
    return crc.astype(np.uint8)


def _int_bits(values: np.ndarray, nbits: int) -> list:
    return [((values >> np.uint64(b)) & np.uint64(1)).astype(bool) for b in range(nbits)]


def eval_predicate(pred, env: dict) -> np.ndarray:
    if isinstance(pred, str):
        return env[pred]
    op, *kids = pred
    vals = [eval_predicate(k, env) for k in kids]
    if op == "NOT":
        return ~vals[0]
    out = vals[0]
    for v in vals[1:]:
        out = (out & v) if op == "AND" else (out | v)
    return out


def oracle(spec: WorkloadSpec, dataset: BitSlicedDataset) -> dict:
    """Expected final outputs (name -> bool array over records)."""
    p = spec.resolved_params()
    ds = dataset
    if spec.name == "crc8":
        msg = np.stack([ds.field_values(f"byte{j}", 8) for j in range(p["message_bytes"])], axis=1)
        crc = crc8_bytes(msg.astype(np.uint8), p["poly"], p["init"]).astype(np.uint64)
        return {f"crc{i}": b for i, b in enumerate(_int_bits(crc, 8))}
    if spec.name == "xor_cipher":
        c = ds.field_values("plain", 8) ^ np.uint64(cipher_key(spec))
        return {f"c{i}": b for i, b in enumerate(_int_bits(c, 8))}
    if spec.name in ("set_union", "set_intersection", "set_difference"):
        a = ds.field_values("A", 1).astype(bool)
        b = ds.field_values("B", 1).astype(bool)
        r = {"set_union": a | b, "set_intersection": a & b, "set_difference": a & ~b}[spec.name]
        return {"R": r}
    if spec.name == "masked_init":
        d, m, v = (ds.field_values(n, 1).astype(bool) for n in ("dst", "mask", "val"))
        return {"R": np.where(m, v, d)}
    if spec.name == "bitmap_query":
        env = {n: ds.field_values(n, 1).astype(bool) for n in predicate_leaves(p["predicate"])}
        return {"R": eval_predicate(p["predicate"], env)}
    x = ds.field_bits("x", p["n_inputs"])
    w = bnn_weights(spec).astype(bool)
    return {f"y{n}": (x == w[n]).sum(axis=1) > p["threshold"] for n in range(p["n_neurons"])}


def final_outputs(spec: WorkloadSpec, engine_out: dict) -> dict:
    """Host-side post-processing of engine output rows into final outputs (packed)."""
    p = spec.resolved_params()
    if spec.name != "bnn_inference" or p["popcount"] == "memory":
        return engine_out
    out = {}
    for n in range(p["n_neurons"]):
        rows = [engine_out[f"xn{n}_{i}"].to_bits().astype(np.uint8) for i in range(p["n_inputs"])]
        count = np.sum(rows, axis=0)
        out[f"y{n}"] = B.RowVector.from_bits(count > p["threshold"])
    return out


def output_names(spec: WorkloadSpec) -> list:
    p = spec.resolved_params()
    if spec.name == "crc8":
        return [f"crc{i}" for i in range(8)]
    if spec.name == "xor_cipher":
        return [f"c{i}" for i in range(8)]
    if spec.name == "bnn_inference":
        return [f"y{n}" for n in range(p["n_neurons"])]
    return ["R"]


# ---------------------------------------------------------------------------
# run


@dataclass
class WorkloadReport:
    name: str
    backend: str
    size_bytes: int
    seed: int
    oracle_match: bool
    output_digest: str
    oracle_digest: str
    ledger: EnergyLedger
    blocks: int
    records: int
    plan_stats: dict
    params: dict
    extra: dict = field(default_factory=dict)

    @property
    def energy_J(self) -> float:
        return self.ledger.total_energy_J

    @property
    def cycles(self) -> float:
        return self.ledger.total_cycles + self.ledger.refresh_cycles

    def to_dict(self) -> dict:
        led = self.ledger
        d = {
            "name": self.name,
            "backend": self.backend,
            "size_bytes": self.size_bytes,
            "seed": self.seed,
            "params": self.params,
            "oracle_match": self.oracle_match,
            "energy_J": sig6(led.total_energy_J),
            "compute_energy_J": sig6(led.compute_energy_J),
            "refresh_energy_J": sig6(led.refresh_energy_J),
            "cycles": sig6(self.cycles),
            "compute_cycles": led.total_cycles,
            "refresh_cycles": sig6(led.refresh_cycles),
            "exec_time_s": sig6(led.exec_time_s),
            "operand_copies": led.operand_copies,
            "command_counts": led.command_counts(),
            "blocks": self.blocks,
            "records": self.records,
            "peak_rows_per_block": self.plan_stats.get("peak_rows", 0),
            "output_digest": self.output_digest,
            "oracle_digest": self.oracle_digest,
        }
        d.update(self.extra)
        return d


def sig6(x: float) -> float:
    """Round to 6 significant digits (stable across platforms once serialized)."""
    return float(f"{x:.6g}")


def plan_for(spec: WorkloadSpec, backend: str, geometry: Optional[ArrayGeometry] = None) -> LoweredPlan:
    return lower(build_program(spec), backend, geometry or ArrayGeometry())


def run(spec: WorkloadSpec, backend: str, cost_params: Optional[CostParams] = None,
        geometry: Optional[ArrayGeometry] = None,
        cell_config: Optional[CellConfig] = None) -> WorkloadReport:
    """Generate, build, lower, execute, check against the oracle and finalize the ledger."""
    geometry = geometry or ArrayGeometry()
    params = cost_params or CostParams()
    spec.check_size(geometry.row_width)
    rw = geometry.row_width
    prog, layout = build_with_layout(spec)
    records = spec.records(len(prog.inputs))
    blocks = n_blocks(records, rw)
    plan = lower(prog, backend, geometry)
    if plan.stats["peak_rows"] * blocks > geometry.total_rows:
        raise CapacityExceeded(
            f"{spec.name}: {blocks} blocks x {plan.stats['peak_rows']} rows exceeds "
            f"{geometry.total_rows} rows")
    names = output_names(spec)
    per_chunk = max(1, CHUNK_BITS // (rw * max(1, len(prog.inputs))))
    gen = _Generator(spec, prog.inputs)
    got = {n: [] for n in names}
    want = {n: [] for n in names}
    ledger = EnergyLedger(backend, params)
    done = 0
    while done < blocks:
        nb = min(per_chunk, blocks - done)
        width = nb * rw
        real = min(width, records - done * rw)
        inputs = gen.take(width, real)
        out, led, _ = execute(plan, inputs, params, cell_config, finalize=False, width=width)
        ledger = ledger.merge(led)
        out = final_outputs(spec, out)
        exp = oracle(spec, BitSlicedDataset(inputs, layout, real))
        for n in names:
            got[n].append(out[n].words)
            want[n].append(B.pack_bits(np.pad(exp[n], (0, width - real))))
        done += nb
    finalize_ledger(ledger, geometry.total_rows)

    def rows(acc):
        out = []
        for n in names:
            words = np.concatenate(acc[n]) if acc[n] else np.zeros(0, np.uint64)
            out.append(B.RowVector(words, blocks * rw).slice(0, records))
        return out

    got_rows, want_rows = rows(got), rows(want)
    match = all(a == b for a, b in zip(got_rows, want_rows))
    extra = {}
    if spec.name == "bitmap_query":
        extra["result_count"] = got_rows[0].popcount()
    report = WorkloadReport(spec.name, backend, spec.size_bytes, spec.seed, match,
                            B.digest_rows(got_rows), B.digest_rows(want_rows), ledger, blocks,
                            records, dict(plan.stats), _report_params(spec), extra)
    return report


def _report_params(spec: WorkloadSpec) -> dict:
    p = spec.resolved_params()
    if spec.name == "xor_cipher":
        p["key"] = cipher_key(spec)
    return p


def run_suite(specs, backends=("feram", "dram"), **kw) -> list:
    return [run(s, b, **kw) for s in specs for b in backends]


def energy_ratio(dram: WorkloadReport, feram: WorkloadReport) -> float:
    return dram.energy_J / feram.energy_J if feram.energy_J else math.nan
