"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the pytest terminal summary ("acceptance criteria").
"""
import itertools
import time

import pytest

from limsim import cli
from limsim.cells import CellConfig, FeCell, minority_formula, qnro_read, tba_sense, write_cap
from limsim.cost import geomean
from limsim.errors import DisturbBudgetExhausted
from limsim.ir import TWO_INPUT_OPS
from limsim.lowering import lower_dram, lower_feram
from limsim.workloads import WORKLOADS, WorkloadSpec, build_program, run

from .test_lowering import one_op

MB = 1024 * 1024
KB = 1024
# 8 GB / 8 KB rows, one refresh per row per 64 ms at (22.6 + 0.32) nJ
REFRESH_J_PER_S = (1 << 20) * 22.92e-9 / 64e-3


def suite(size):
    return {(n, b): run(WorkloadSpec(n, size), b) for n in WORKLOADS for b in ("feram", "dram")}


@pytest.fixture(scope="module")
def reports_16mb():
    return suite(16 * MB)


def cell(bits, budget=100):
    c = FeCell(CellConfig(n_caps=3, disturb_budget=budget))
    for i, b in enumerate(bits):
        write_cap(c, i, b)
    return c


def test_c01_minority_truth_table(criterion):
    t0 = time.perf_counter()
    ok = True
    for a, b, c in itertools.product((0, 1), repeat=3):
        got = tba_sense(cell((a, b, c)), (0, 1, 2))
        maj = int(a + b + c >= 2)
        ok &= got == 1 - maj == minority_formula(a, b, c)
    dt = time.perf_counter() - t0
    criterion(1, ok and dt < 1.0, f"8/8 TBA rows equal NOT MAJ and the control-bit formula ({dt * 1e3:.1f} ms)")
    assert ok and dt < 1.0


def test_c02_qnro(criterion):
    budget = 100
    ok = True
    for bit in (0, 1):
        for k in range(1, budget + 1):
            c = cell((bit, 0, 0), budget)
            reads = [qnro_read(c, 0) for _ in range(k)]
            ok &= reads == [1 - bit] * k and c.caps[0].polarization == bit
        c = cell((bit, 0, 0), budget)
        for _ in range(budget):
            qnro_read(c, 0)
        try:
            qnro_read(c, 0)
            ok = False
        except DisturbBudgetExhausted:
            pass
    criterion(2, ok, f"k <= {budget} reads invert and preserve; read {budget + 1} raises DisturbBudgetExhausted")
    assert ok


def test_c03_control_bit_universality(criterion):
    ok = all(tba_sense(cell((a, b, 0)), (0, 1, 2)) == 1 - (a & b)
             and tba_sense(cell((a, b, 1)), (0, 1, 2)) == 1 - (a | b)
             for a, b in itertools.product((0, 1), repeat=2))
    criterion(3, ok, "MIN(A,B,0) = NAND and MIN(A,B,1) = NOR for all A, B")
    assert ok


def test_c04_cross_oracle(criterion):
    bad = []
    t_1mb = 0.0
    for size in (64 * KB, MB):
        t0 = time.perf_counter()
        reps = suite(size)
        if size == MB:
            t_1mb = time.perf_counter() - t0
        for (n, b), r in reps.items():
            if not (r.oracle_match and r.output_digest == r.oracle_digest):
                bad.append(f"{n}/{b}@{size}")
    ok = not bad and t_1mb < 60.0
    criterion(4, ok, f"32 runs match oracles{'' if not bad else ' except ' + ', '.join(bad)}; "
                     f"1 MB suite {t_1mb:.1f} s")
    assert not bad
    assert t_1mb < 60.0


def test_c05_headline_ratios(criterion, reports_16mb):
    r = reports_16mb
    e = [r[n, "dram"].energy_J / r[n, "feram"].energy_J for n in WORKLOADS]
    s = [r[n, "dram"].cycles / r[n, "feram"].cycles for n in WORKLOADS]
    ge, gs = geomean(e), geomean(s)
    direction = all(x > 1 for x in e) and all(x > 1 for x in s)
    ok = 2.0 <= ge <= 3.0 and 1.6 <= gs <= 2.4 and direction
    criterion(5, ok, f"16 MB geomean energy ratio {ge:.3f} in [2.0, 3.0], speedup {gs:.3f} in "
                     f"[1.6, 2.4], FeRAM better on every workload: {direction}")
    assert direction
    assert 2.0 <= ge <= 3.0
    assert 1.6 <= gs <= 2.4


def test_c06_copy_elimination(criterion):
    ok = True
    for op in TWO_INPUT_OPS:
        ok &= lower_dram(one_op(op)).stats["operand_copies"] >= 3
        ok &= lower_feram(one_op(op)).stats["operand_copies"] == 0
    for n in WORKLOADS:
        prog = build_program(WorkloadSpec(n, 16 * MB))
        two_input = sum(1 for o in prog.ops if o.op in TWO_INPUT_OPS)
        ok &= lower_dram(prog).stats["operand_copies"] >= 3 * two_input
        f = lower_feram(prog)
        ok &= f.stats["operand_copies"] == 0
    criterion(6, ok, "every 2-input op: DRAM >= 3 operand-copy AAPs, FeRAM 0; all 8 workload plans")
    assert ok


def test_c07_refresh(criterion, reports_16mb):
    worst = 0.0
    ok = True
    for (n, b), rep in reports_16mb.items():
        led = rep.ledger
        if b == "feram":
            ok &= led.refresh_energy_J == 0.0
        else:
            duration = led.total_cycles * led.params.cycle_time_ns * 1e-9
            expect = duration * REFRESH_J_PER_S
            err = abs(led.refresh_energy_J - expect) / expect
            worst = max(worst, err)
            ok &= led.refresh_energy_J > 0 and err < 1e-3
    criterion(7, ok, f"FeRAM refresh 0 in all reports; DRAM refresh matches (t/64ms)*2^20*22.92 nJ "
                     f"(worst rel. error {worst:.1e})")
    assert ok


def test_c08_area(criterion):
    ratio = cli.cmd_area(3, 28)["density_ratio"]
    ok = abs(ratio - 4.175) <= 0.02
    criterion(8, ok, f"area(3, 28 nm) density ratio {ratio:.4f} (4.175 +/- 0.02)")
    assert ok


def test_c09_determinism(criterion, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"workloads": [' + ", ".join(
        f'{{"name": "{n}", "size_bytes": 262144, "seed": 7}}' for n in WORKLOADS) + "]}")
    for d in ("a", "b"):
        assert cli.main(["run", "--config", str(cfg), "--output-dir", str(tmp_path / d)]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)
    ok = same and len(files) == 17
    criterion(9, ok, f"two runs of one config: {len(files)} files byte-identical: {same}")
    assert ok


def test_c10_scale_invariance(criterion, reports_16mb):
    small = suite(4 * MB)
    worst = 0.0
    for n in WORKLOADS:
        r4 = small[n, "dram"].energy_J / small[n, "feram"].energy_J
        r16 = reports_16mb[n, "dram"].energy_J / reports_16mb[n, "feram"].energy_J
        worst = max(worst, abs(r4 - r16) / r16)
    ok = worst < 0.01
    criterion(10, ok, f"per-workload energy ratio 4 MB vs 16 MB, worst deviation {worst:.2e} (< 1%)")
    assert ok
