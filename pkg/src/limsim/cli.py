"""Command-line front end.

    limsim run [--config cfg.json] [--output-dir DIR]
    limsim compare --reports DIR
    limsim truth-table
    limsim area --ncaps 3 --feature 28 [--stacked]

``LIMSIM_OUTPUT_DIR`` overrides the output directory named in a config.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .cells import CellConfig, minority_formula, truth_table
from .cost import AreaModel, CostParams, area_report, geomean
from .engine import ArrayGeometry
from .errors import ConfigError, LimSimError, MissingPair
from .workloads import WORKLOADS, WorkloadSpec, run, sig6

log = logging.getLogger("limsim")

ENV_OUTPUT_DIR = "LIMSIM_OUTPUT_DIR"
DEFAULT_SIZE = 16 * 1024 * 1024
BACKENDS = ("feram", "dram")
CSV_COLUMNS = ("name", "backend", "size_bytes", "seed", "oracle_match", "energy_J",
               "compute_energy_J", "refresh_energy_J", "cycles", "compute_cycles",
               "refresh_cycles", "exec_time_s", "operand_copies", "output_digest")


@dataclass
class RunConfig:
    cost_params: CostParams = field(default_factory=CostParams)
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    cell: dict = field(default_factory=dict)
    workloads: list = field(default_factory=list)
    backends: tuple = BACKENDS
    output_dir: str = "reports"
    csv_name: str = "reports.csv"

    def cell_config(self) -> CellConfig:
        return CellConfig(n_caps=self.geometry.n_caps, **self.cell)


TOP_KEYS = ("cost_params", "geometry", "cell", "workloads", "backends", "output")
WORKLOAD_KEYS = ("name", "size_bytes", "seed", "params")
OUTPUT_KEYS = ("dir", "csv")
CELL_KEYS = ("disturb_budget", "endurance_limit", "endurance_policy")


def _reject_unknown(d, allowed, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r} in {where}")


def default_config() -> RunConfig:
    return RunConfig(workloads=[WorkloadSpec(n, DEFAULT_SIZE) for n in WORKLOADS])


def config_from_dict(d: dict) -> RunConfig:
    _reject_unknown(d, TOP_KEYS, "config")
    cfg = default_config()
    if "cost_params" in d:
        _reject_unknown(d["cost_params"], [f.name for f in fields(CostParams)], "cost_params")
        cfg.cost_params = CostParams.from_dict(d["cost_params"])
    if "geometry" in d:
        _reject_unknown(d["geometry"], [f.name for f in fields(ArrayGeometry)], "geometry")
        cfg.geometry = ArrayGeometry(**d["geometry"])
    if "cell" in d:
        _reject_unknown(d["cell"], CELL_KEYS, "cell")
        cfg.cell = dict(d["cell"])
        cfg.cell_config()
    if "workloads" in d:
        specs = []
        for i, w in enumerate(d["workloads"]):
            if isinstance(w, str):
                w = {"name": w}
            _reject_unknown(w, WORKLOAD_KEYS, f"workloads[{i}]")
            if w.get("name") not in WORKLOADS:
                raise ConfigError(f"workloads[{i}]: unknown workload {w.get('name')!r}")
            specs.append(WorkloadSpec(w["name"], int(w.get("size_bytes", DEFAULT_SIZE)),
                                      int(w.get("seed", 0)), dict(w.get("params", {}))))
        cfg.workloads = specs
    if "backends" in d:
        for b in d["backends"]:
            if b not in BACKENDS:
                raise ConfigError(f"unknown backend {b!r}")
        cfg.backends = tuple(b for b in BACKENDS if b in d["backends"])
    if "output" in d:
        _reject_unknown(d["output"], OUTPUT_KEYS, "output")
        cfg.output_dir = d["output"].get("dir", cfg.output_dir)
        cfg.csv_name = d["output"].get("csv", cfg.csv_name)
    return cfg


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        line = text.splitlines()[e.lineno - 1] if text.splitlines() else ""
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}\n    {line}\n    {' ' * (e.colno - 1)}^") from None
    try:
        return config_from_dict(data)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from None
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from None


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as f:
        f.write(text)
    os.replace(tmp, path)


def report_json(d: dict) -> str:
    return json.dumps(d, indent=2) + "\n"


def reports_csv(dicts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for d in dicts:
        # json.dumps keeps the CSV numbers identical to the JSON ones
        w.writerow([d[c] if isinstance(d[c], str) else json.dumps(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def output_dir(cfg: RunConfig, override: Optional[str] = None) -> Path:
    return Path(override or os.environ.get(ENV_OUTPUT_DIR) or cfg.output_dir)


def cmd_run(cfg: RunConfig, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    dicts = []
    for spec in cfg.workloads:
        for backend in cfg.backends:
            rep = run(spec, backend, cfg.cost_params, cfg.geometry, cfg.cell_config())
            d = rep.to_dict()
            _write_atomic(out_dir / f"{spec.name}__{backend}.json", report_json(d))
            dicts.append(d)
            status = "ok" if rep.oracle_match else "ORACLE MISMATCH"
            print(f"{spec.name:18s} {backend:6s} E={d['energy_J']:.6g} J  cycles={d['cycles']:.6g}  {status}")
    _write_atomic(out_dir / cfg.csv_name, reports_csv(dicts))
    bad = [f"{d['name']}/{d['backend']}" for d in dicts if not d["oracle_match"]]
    if bad:
        print(f"oracle mismatch: {', '.join(bad)}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# compare


def load_reports(report_dir) -> list:
    out = []
    for p in sorted(Path(report_dir).glob("*.json")):
        d = json.loads(p.read_text())
        if isinstance(d, dict) and "backend" in d and "energy_J" in d:
            out.append(d)
    return out


def compare_reports(dram: list, feram: list) -> dict:
    """Per-workload DRAM/FeRAM ratios over the workloads present on both sides."""
    by_d = {d["name"]: d for d in dram}
    by_f = {d["name"]: d for d in feram}
    names = sorted(set(by_d) & set(by_f))
    if not names:
        raise MissingPair("no workload has both a DRAM and a FeRAM report")
    rows = []
    for n in names:
        d, f = by_d[n], by_f[n]
        rows.append({
            "name": n,
            "energy_ratio": sig6(d["energy_J"] / f["energy_J"]) if f["energy_J"] else math.nan,
            "speedup": sig6(d["cycles"] / f["cycles"]) if f["cycles"] else math.nan,
            "dram_energy_J": d["energy_J"], "feram_energy_J": f["energy_J"],
            "dram_cycles": d["cycles"], "feram_cycles": f["cycles"],
            "oracle_match": bool(d.get("oracle_match")) and bool(f.get("oracle_match")),
        })
    e = [r["energy_ratio"] for r in rows]
    s = [r["speedup"] for r in rows]
    return {
        "aggregate": "geomean over workloads with both backends; arithmetic mean also given",
        "workloads": rows,
        "n_pairs": len(rows),
        "unpaired": sorted(set(by_d) ^ set(by_f)),
        "geomean_energy_ratio": sig6(geomean(e)),
        "geomean_speedup": sig6(geomean(s)),
        "mean_energy_ratio": sig6(sum(e) / len(e)),
        "mean_speedup": sig6(sum(s) / len(s)),
    }


def render_summary(summary: dict) -> str:
    lines = [f"{'workload':18s} {'E_dram/E_feram':>15s} {'speedup':>9s}"]
    for r in summary["workloads"]:
        lines.append(f"{r['name']:18s} {r['energy_ratio']:15.4f} {r['speedup']:9.4f}")
    lines.append(f"{'geomean':18s} {summary['geomean_energy_ratio']:15.4f} {summary['geomean_speedup']:9.4f}")
    lines.append(f"{'mean':18s} {summary['mean_energy_ratio']:15.4f} {summary['mean_speedup']:9.4f}")
    if summary["unpaired"]:
        lines.append(f"unpaired (excluded): {', '.join(summary['unpaired'])}")
    return "\n".join(lines)


def cmd_compare(report_dir) -> dict:
    reps = load_reports(report_dir)
    summary = compare_reports([r for r in reps if r["backend"] == "dram"],
                              [r for r in reps if r["backend"] == "feram"])
    _write_atomic(Path(report_dir) / "summary.json", report_json(summary))
    return summary


# ---------------------------------------------------------------------------
# utilities


def cmd_truth_table() -> str:
    rows = truth_table()
    lines = ["MINORITY (TBA sense)", "ABC -> MIN"]
    lines += [f"{a}{b}{c} → {m}" for a, b, c, m, _ in rows]
    lines += ["", "MAJORITY", "ABC -> MAJ"]
    lines += [f"{a}{b}{c} → {j}" for a, b, c, _, j in rows]
    for a, b, c, m, _ in rows:
        if minority_formula(a, b, c) != m:
            raise AssertionError(f"TBA sense disagrees with the control-bit formula at {a}{b}{c}")
    return "\n".join(lines)


def cmd_area(n_caps: int, feature_nm: float, stacked: bool = False) -> dict:
    return area_report(AreaModel(feature_size_nm=feature_nm), n_caps, stacked)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="limsim", description="FeRAM vs DRAM logic-in-memory simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run workloads and write reports")
    r.add_argument("--config", help="JSON run config (default: all workloads, 16 MB, both backends)")
    r.add_argument("--output-dir", help=f"overrides ${ENV_OUTPUT_DIR} and the config")
    c = sub.add_parser("compare", help="summarize DRAM/FeRAM report pairs")
    c.add_argument("--reports", required=True)
    sub.add_parser("truth-table", help="print MINORITY/MAJORITY tables")
    a = sub.add_parser("area", help="cell area report")
    a.add_argument("--ncaps", type=int, default=3)
    a.add_argument("--feature", type=float, default=28.0, help="feature size F in nm")
    a.add_argument("--stacked", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.cmd == "run":
            cfg = load_config(args.config) if args.config else default_config()
            return cmd_run(cfg, output_dir(cfg, args.output_dir))
        if args.cmd == "compare":
            print(render_summary(cmd_compare(args.reports)))
            return 0
        if args.cmd == "truth-table":
            print(cmd_truth_table())
            return 0
        print(json.dumps(cmd_area(args.ncaps, args.feature, args.stacked), indent=2))
        return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (LimSimError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
