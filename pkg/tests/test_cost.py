import pytest
from hypothesis import given, strategies as st

from limsim.cost import AreaModel, CostParams, EnergyLedger, area_report, charge, finalize, geomean
from limsim.engine import Command, CommandKind as K
from limsim.errors import ConfigError, UnknownCommandKind


def test_default_energies():
    p = CostParams()
    assert p.energy_nj(K.FE_ACTIVATE_TBA, "feram") == 16.6
    assert p.energy_nj(K.FE_ACTIVATE_READ, "feram") == 16.6
    assert p.energy_nj(K.DR_ACTIVATE_TRA, "dram") == 22.6
    assert p.energy_nj(K.FE_PRECHARGE, "feram") == p.energy_nj(K.DR_PRECHARGE, "dram") == 0.32
    assert p.energy_nj(K.FE_COPY, "feram") == 0.32
    assert p.energy_nj(K.DR_COPY_ROWCLONE, "dram") == 0.32
    assert p.energy_nj(K.DR_REFRESH_ROW, "dram") == pytest.approx(22.92)
    assert p.energy_nj(K.FE_WRITE_ROW, "feram") == 16.6
    assert p.energy_nj(K.DR_WRITE_ROW, "dram") == 22.6
    assert CostParams(e_write_row=5.0).energy_nj(K.FE_WRITE_BACK_ROW, "feram") == 5.0


def test_wrong_backend_kind():
    led = EnergyLedger("feram")
    with pytest.raises(UnknownCommandKind):
        led.charge(Command(K.DR_ACTIVATE, 0))
    with pytest.raises(UnknownCommandKind):
        charge(led, Command(K.FE_PRECHARGE), backend="dram")


def test_acp_and_aap_totals():
    # one ACP = 16.6 + 0.32 + 0.32 nJ, one AAP = 22.6 + 0.32 + 0.32 nJ, 3 cycles each
    fe = EnergyLedger("feram")
    for k in (K.FE_ACTIVATE_TBA, K.FE_COPY, K.FE_PRECHARGE):
        charge(fe, Command(k))
    dr = EnergyLedger("dram")
    for k in (K.DR_ACTIVATE_TRA, K.DR_COPY_ROWCLONE, K.DR_PRECHARGE):
        charge(dr, Command(k))
    assert fe.compute_energy_J == pytest.approx(17.24e-9)
    assert dr.compute_energy_J == pytest.approx(23.24e-9)
    assert fe.total_cycles == dr.total_cycles == 3
    assert fe.exec_time_s == pytest.approx(30e-9)


def test_finalize_refresh_only_on_dram():
    fe = EnergyLedger("feram")
    fe.charge(K.FE_ACTIVATE_READ, 1_000_000)
    finalize(fe, 1 << 20)
    assert fe.refresh_energy_J == 0.0 and fe.finalized
    dr = EnergyLedger("dram")
    dr.charge(K.DR_ACTIVATE, 1_000_000)
    finalize(dr, 1 << 20)
    assert dr.refresh_energy_J == pytest.approx(3.7552128e-3, rel=1e-9)
    assert dr.exec_time_s == pytest.approx((1_000_000 + 163840) * 10e-9)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_merge_is_additive(n1, n2):
    a = EnergyLedger("dram").charge(K.DR_ACTIVATE, n1)
    b = EnergyLedger("dram").charge(K.DR_ACTIVATE, n2)
    m = a.merge(b)
    assert m.total_cycles == n1 + n2
    assert m.compute_energy_J == pytest.approx(a.compute_energy_J + b.compute_energy_J)


def test_params_from_dict():
    p = CostParams.from_dict({"e_activate_feram": 10.0})
    assert p.e_activate_feram == 10.0
    with pytest.raises(ConfigError, match="e_activate_fram"):
        CostParams.from_dict({"e_activate_fram": 1.0})
    with pytest.raises(ConfigError):
        CostParams(cycle_time_ns=0)
    assert CostParams.from_dict(p.to_dict()) == p


def test_area_values():
    m = AreaModel()
    assert m.planar_area_nm2(1) == pytest.approx(23520.0)          # 30 F^2, F = 28
    assert m.planar_area_nm2(3) == pytest.approx(70560.0)          # 90 F^2
    r = area_report(m, 3)
    assert r["vertical_area_nm2"] == 16900.0
    assert r["density_ratio"] == pytest.approx(70560 / 16900)
    assert r["area_with_periphery_nm2"] == pytest.approx(70560 * 1.5)
    assert area_report(m, 3, stacked=True)["area_per_cell_nm2"] == 16900.0
    assert AreaModel(feature_size_nm=56).planar_area_nm2(2) == pytest.approx(4 * m.planar_area_nm2(2))


def test_geomean():
    assert geomean([2.0, 8.0]) == pytest.approx(4.0)
    assert geomean([2.5]) == 2.5
    with pytest.raises(ValueError):
        geomean([])
