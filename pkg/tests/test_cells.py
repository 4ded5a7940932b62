import itertools

import pytest
from hypothesis import given, strategies as st

from limsim.cells import (
    CellConfig, DramCellState, FeCell, dram_read, dram_restore, minority_formula, qnro_read,
    tba_sense, triple_row_activate, truth_table, write_back, write_cap,
)
from limsim.errors import (
    DisturbBudgetExhausted, DuplicateIndex, EnduranceExceeded, IndexOutOfRange, InvalidCellRead,
)

# Independent oracle: minority is 1 when at most one input is 1.
MINORITY_TABLE = {bits: int(sum(bits) <= 1) for bits in itertools.product((0, 1), repeat=3)}


def cell_with(*bits, **cfg):
    cell = FeCell(CellConfig(n_caps=len(bits), **cfg))
    for i, b in enumerate(bits):
        write_cap(cell, i, b)
    return cell


def test_tba_exhaustive_against_table():
    for bits, expected in MINORITY_TABLE.items():
        assert tba_sense(cell_with(*bits), (0, 1, 2)) == expected


def test_truth_table_rows_and_formula():
    rows = truth_table()
    assert len(rows) == 8
    for a, b, c, mn, mj in rows:
        assert mn == MINORITY_TABLE[(a, b, c)]
        assert mj == 1 - mn
        assert minority_formula(a, b, c) == mn
    assert (1, 1, 0, 0, 1) in rows


@pytest.mark.parametrize("a,b", list(itertools.product((0, 1), repeat=2)))
def test_control_bit_selects_nand_nor(a, b):
    assert tba_sense(cell_with(a, b, 0), (0, 1, 2)) == 1 - (a & b)
    assert tba_sense(cell_with(a, b, 1), (0, 1, 2)) == 1 - (a | b)


def test_qnro_inverts_and_preserves():
    cell = cell_with(1, 0, 0)
    assert qnro_read(cell, 0) == 0
    assert qnro_read(cell, 1) == 1
    assert cell.bits() == (1, 0, 0)
    assert cell.caps[0].disturb_count == 1


@given(bit=st.integers(0, 1), budget=st.integers(1, 40))
def test_qnro_budget(bit, budget):
    cell = cell_with(bit, 0, 0, disturb_budget=budget)
    for _ in range(budget):
        assert qnro_read(cell, 0) == 1 - bit
        assert cell.caps[0].polarization == bit
    with pytest.raises(DisturbBudgetExhausted):
        qnro_read(cell, 0)
    write_back(cell, 0, bit)
    assert cell.caps[0].disturb_count == 0
    assert qnro_read(cell, 0) == 1 - bit


def test_tba_checks_budget_before_disturbing():
    cell = cell_with(0, 0, 0, disturb_budget=2)
    qnro_read(cell, 2)
    qnro_read(cell, 2)
    with pytest.raises(DisturbBudgetExhausted):
        tba_sense(cell, (0, 1, 2))
    assert [c.disturb_count for c in cell.caps] == [0, 0, 2]


def test_tba_index_errors():
    cell = cell_with(0, 1, 1)
    with pytest.raises(DuplicateIndex):
        tba_sense(cell, (0, 0, 1))
    with pytest.raises(IndexOutOfRange):
        tba_sense(cell, (0, 1, 3))
    with pytest.raises(IndexOutOfRange):
        write_cap(cell, 5, 1)
    with pytest.raises(ValueError):
        tba_sense(cell, (0, 1))


def test_tba_any_three_of_larger_cell():
    cell = cell_with(1, 0, 1, 1, 0)
    assert tba_sense(cell, (1, 3, 4)) == MINORITY_TABLE[(0, 1, 0)]
    assert tba_sense(cell, (0, 2, 3)) == 0


def test_endurance_abort_and_warn(caplog):
    cell = cell_with(0, 0, 0, endurance_limit=3)
    write_cap(cell, 0, 1)
    write_cap(cell, 0, 0)
    with pytest.raises(EnduranceExceeded):
        write_cap(cell, 0, 1)
    warn = cell_with(0, 0, 0, endurance_limit=1, endurance_policy="warn")
    write_cap(warn, 0, 1)
    assert warn.caps[0].polarization == 1
    assert "endurance" in caplog.text


def test_config_validation():
    with pytest.raises(ValueError):
        CellConfig(disturb_budget=0)
    with pytest.raises(ValueError):
        CellConfig(endurance_policy="ignore")
    with pytest.raises(ValueError):
        FeCell(CellConfig(n_caps=3), caps=[])


def test_dram_destructive_read_and_tra():
    c = DramCellState(1)
    assert dram_read(c) == 1
    with pytest.raises(InvalidCellRead):
        dram_read(c)
    dram_restore(c, 1)
    assert dram_read(c) == 1
    for bits in itertools.product((0, 1), repeat=3):
        cells = [DramCellState(b) for b in bits]
        m = triple_row_activate(cells)
        assert m == 1 - MINORITY_TABLE[bits]
        # operands are overwritten by the result
        assert [x.bit for x in cells] == [m] * 3
