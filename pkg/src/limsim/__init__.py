"""limsim: functional and cost simulation of bulk-bitwise logic in 2T-nC FeRAM and DRAM."""
from .bits import RowVector, digest_bits, digest_rows, majority, minority
from .cells import (CellConfig, FeCell, minority_formula, qnro_read, tba_sense, truth_table,
                    write_back, write_cap)
from .cost import AreaModel, CostParams, EnergyLedger, area_report, charge, finalize, geomean
from .engine import ArrayGeometry, Command, CommandKind, DramArray, FeArray, refresh_accounting
from .ir import BitProgram, interpret, validate
from .lowering import LoweredPlan, execute, lower, lower_dram, lower_feram
from .workloads import WORKLOADS, WorkloadReport, WorkloadSpec, build_program, generate, oracle, run

__version__ = "0.1.0"
