import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from limsim.bits import RowVector
from limsim.cells import CellConfig
from limsim.cost import CostParams
from limsim.engine import ArrayGeometry, CommandKind as K
from limsim.errors import CapacityExceeded, WidthMismatch
from limsim.ir import TWO_INPUT_OPS, BitProgram, interpret
from limsim.lowering import execute, lower, lower_dram, lower_feram

from .strategies import programs

GEO = ArrayGeometry(row_width=64, total_rows=4096)


def one_op(op):
    p = BitProgram()
    p.declare("a", "input")
    p.declare("b", "input")
    p.declare("y", "output")
    p.add(op, ("a", "b"), "y")
    return p


def rows(seed, names, width):
    rng = np.random.default_rng(seed)
    return {n: RowVector.from_bits(rng.integers(0, 2, width)) for n in names}


@settings(max_examples=150, deadline=None)
@given(programs(), st.integers(0, 2**32 - 1), st.sampled_from([64, 192]))
def test_lowered_programs_match_interpreter(p, seed, width):
    ins = rows(seed, p.inputs, width)
    want = interpret(p, ins)
    for backend in ("feram", "dram"):
        out, ledger, trace = execute(lower(p, backend, GEO), ins)
        assert out == want
        assert ledger.total_cycles == len(trace) * width // 64


@settings(max_examples=60, deadline=None)
@given(programs())
def test_feram_plans_never_copy_operands(p):
    plan = lower_feram(p, GEO)
    assert plan.stats["operand_copies"] == 0
    assert not any(c.kind.value.startswith("DR_") for c in plan.commands)


@pytest.mark.parametrize("op", TWO_INPUT_OPS)
def test_copy_elimination_per_op(op):
    d = lower_dram(one_op(op), GEO)
    f = lower_feram(one_op(op), GEO)
    assert d.stats["operand_copies"] >= 3
    assert f.stats["operand_copies"] == 0


# Command-sequence lengths of single ops (Ambit sequences on DRAM; ACPs on FeRAM).
DRAM_SHAPE = {"AND": (4, 0), "OR": (4, 0), "NAND": (5, 0), "NOR": (5, 0), "XOR": (5, 2), "XNOR": (5, 2)}
FERAM_SHAPE = {"AND": (1, 1), "OR": (1, 1), "NAND": (1, 0), "NOR": (1, 0), "XOR": (4, 0), "XNOR": (4, 1)}


@pytest.mark.parametrize("op", TWO_INPUT_OPS)
def test_op_command_shapes(op):
    d = lower_dram(one_op(op), GEO)
    assert (d.stats["aap"], d.stats["ap"]) == DRAM_SHAPE[op]
    f = lower_feram(one_op(op), GEO)
    assert (f.stats["acp"], f.stats["not"]) == FERAM_SHAPE[op]


def test_not_costs():
    p = BitProgram()
    p.declare("a", "input")
    p.declare("y", "output")
    p.add("NOT", ("a",), "y")
    assert lower_dram(p, GEO).stats["aap"] == 2
    f = lower_feram(p, GEO)
    kinds = [c.kind for c in f.commands]
    assert kinds == [K.FE_WRITE_ROW, K.FE_ACTIVATE_READ, K.FE_COPY, K.FE_PRECHARGE]


def test_control_bits_stay_resident():
    # a chain of NANDs reuses gate rows that already hold control bit 0
    p = BitProgram()
    p.declare("a", "input")
    acc = "a"
    for i in range(20):
        acc = p.emit("NAND", acc, "a")
    p.declare("y", "output")
    p.add("COPY", (acc,), "y")
    plan = lower_feram(p, GEO)
    assert plan.stats["control_writes"] <= 2
    out, _, _ = execute(plan, rows(1, ["a"], 64))
    assert out == interpret(p, rows(1, ["a"], 64))


def test_disturb_write_backs_are_charged():
    p = BitProgram()
    p.declare("a", "input")
    acc = "a"
    for i in range(30):
        acc = p.emit("NAND", acc, "a")
    p.declare("y", "output")
    p.add("COPY", (acc,), "y")
    plan = lower_feram(p, GEO)
    ins = rows(2, ["a"], 64)
    out, led, trace = execute(plan, ins, cell_config=CellConfig(disturb_budget=4))
    assert out == interpret(p, ins)
    wb = sum(c.kind is K.FE_WRITE_BACK_ROW for c in trace)
    assert wb > 0 and led.counts[K.FE_WRITE_BACK_ROW] == wb


def test_capacity_and_width_errors():
    tiny = ArrayGeometry(row_width=64, total_rows=3)
    p = BitProgram()
    for n in "abcd":
        p.declare(n, "input")
    p.declare("y", "output")
    t = p.emit("AND", "a", "b")
    u = p.emit("AND", "c", "d")
    p.add("OR", (t, u), "y")
    with pytest.raises(CapacityExceeded):
        lower_dram(p, tiny)
    plan = lower_feram(p, GEO)
    with pytest.raises(WidthMismatch):
        execute(plan, rows(0, "abcd", 100))
    with pytest.raises(CapacityExceeded):
        execute(lower_feram(p, ArrayGeometry(row_width=64, total_rows=8)), rows(0, "abcd", 64 * 4))


def test_ledger_scales_with_lanes():
    p = one_op("XOR")
    plan = lower(p, "dram", GEO)
    _, l1, _ = execute(plan, rows(0, "ab", 64))
    _, l4, _ = execute(plan, rows(0, "ab", 256))
    assert l4.total_cycles == 4 * l1.total_cycles
    assert l4.compute_energy_J == pytest.approx(4 * l1.compute_energy_J)
    assert l4.refresh_energy_J == pytest.approx(4 * l1.refresh_energy_J)
    assert l4.operand_copies == 4 * l1.operand_copies


def test_custom_cost_params_flow_through():
    p = one_op("AND")
    plan = lower(p, "feram", GEO)
    _, a, _ = execute(plan, rows(0, "ab", 64))
    _, b, _ = execute(plan, rows(0, "ab", 64), CostParams(e_activate_feram=0.0))
    assert b.compute_energy_J < a.compute_energy_J
