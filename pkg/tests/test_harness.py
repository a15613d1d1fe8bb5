import math

import pytest

from pam6rin.constellation import cross_qam32, optimized_qam32, reference_qam32
from pam6rin.harness import (CSV_HEADER, DEFAULT_OMA_GRID, REFERENCE_FLOORS, SweepConfig, calibrate_floor,
                             emit_csv, floor_ser, gains_at, read_csv, rows_to_csv, run_sweep)
from pam6rin.model import oma_to_eta

POINTS = {"cross": cross_qam32, "reference": reference_qam32, "optimized": optimized_qam32}


def enumerated_snr_db(name, params):
    """Direct per-point recomputation of the SNR column."""
    pts = POINTS[name]().points
    eta_w = params.eta * 1e-3
    sth = (params.nep / eta_w) ** 2 * params.bandwidth_b
    srin = 10 ** (params.rin_db_hz / 10) * params.bandwidth_b
    e = sum(a * a + b * b for a, b in pts)
    n = sum(2 * sth + ((a + params.beta) ** 2 + (b + params.beta) ** 2) * srin for a, b in pts)
    return 10 * math.log10(e / n)


@pytest.fixture(scope="module")
def sweep_141(calibration):
    cfg = SweepConfig(rin_list=(-141.0,), min_symbol_errors=1000, seed=5,
                      bandwidth_b=calibration.params.bandwidth_b)
    return cfg, *run_sweep(cfg)


def test_default_grid():
    assert DEFAULT_OMA_GRID[0] == -8 and DEFAULT_OMA_GRID[-1] == 8 and len(DEFAULT_OMA_GRID) == 33
    cfg = SweepConfig()
    assert cfg.rin_list == (-147.0, -144.0, -141.0)
    assert len(cfg.rin_list) * len(cfg.constellations) == 9


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(oma_dbm_grid=())
    with pytest.raises(ValueError):
        SweepConfig(beta=4.0)
    assert SweepConfig(beta=None, extinction_ratio_db=10 * math.log10(11)).effective_beta == pytest.approx(6.0)


def test_rows_ordered_and_valid(sweep_141):
    cfg, rows, manifest = sweep_141
    assert len(rows) == 33 * 3
    keys = [(cfg.constellations.index(r.constellation), r.rin_db_hz, r.oma_dbm) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert math.isfinite(r.snr_db) and 0 <= r.ser <= 1 and 0 <= r.ber <= 1
    assert not manifest.failures


def test_snr_non_decreasing_and_saturating(sweep_141):
    _, rows, _ = sweep_141
    for name in POINTS:
        s = [r.snr_db for r in rows if r.constellation == name]
        assert all(b >= a for a, b in zip(s, s[1:]))
        assert s[-1] - s[-2] < 0.05


def test_snr_matches_enumeration(sweep_141):
    cfg, rows, _ = sweep_141
    for r in rows:
        params = cfg.channel_template().replace(rin_db_hz=r.rin_db_hz, eta=oma_to_eta(r.oma_dbm))
        assert r.snr_db == pytest.approx(enumerated_snr_db(r.constellation, params), rel=1e-12)


def test_ber_floor(sweep_141):
    _, rows, _ = sweep_141
    for name in POINTS:
        at = {r.oma_dbm: r for r in rows if r.constellation == name}
        a, b = at[6.0], at[8.0]
        assert abs(a.ber - b.ber) <= 3 * math.hypot(a.ber_ci95, b.ber_ci95)


def test_asymptotic_gain_in_sweep():
    cfg = SweepConfig(oma_dbm_grid=(40.0,), rin_list=(-144.0,), beta=5.0, mc_min_ber=1.0)
    rows, manifest = run_sweep(cfg)
    g = gains_at(rows, 40.0, -144.0)
    assert g["optimized"] == pytest.approx(10 * math.log10((23.5 / 66) / (20 / 70)), abs=1e-3)
    assert g["optimized"] == pytest.approx(0.956, abs=2e-3)
    # mc_min_ber = 1 sends every case to quadrature
    assert all(r.trials == 0 for r in rows) and len(manifest.quadrature_only) == 3


def test_quadrature_only_cases_flagged():
    cfg = SweepConfig(oma_dbm_grid=(8.0,), rin_list=(-147.0,), constellations=("optimized",))
    rows, manifest = run_sweep(cfg)
    assert rows[0].trials == 0 and rows[0].ber < 1e-7
    assert manifest.quadrature_only == ["optimized -147 8"]


def test_case_failures_recorded(monkeypatch):
    import pam6rin.harness as h
    real = h.run_case

    def flaky(cfg, name, *a):
        if name == "reference":
            raise RuntimeError("synthetic")
        return real(cfg, name, *a)

    monkeypatch.setattr(h, "run_case", flaky)
    rows, manifest = run_sweep(SweepConfig(oma_dbm_grid=(-8.0,), rin_list=(-141.0,)))
    assert [r.constellation for r in rows] == ["cross", "optimized"]
    assert len(manifest.failures) == 1 and "synthetic" in manifest.failures[0]


def test_csv_format_and_round_trip(sweep_141, tmp_path):
    _, rows, manifest = sweep_141
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == "oma_dbm,rin_db_hz,constellation,snr_db,ser,ber,ser_ci95,ber_ci95,trials,seed"
    assert tuple(text.splitlines()[0].split(",")) == CSV_HEADER
    back = read_csv(text)
    assert rows_to_csv(back) == text
    for a, b in zip(rows, back):
        assert a.constellation == b.constellation and a.trials == b.trials and a.seed == b.seed
        assert b.snr_db == pytest.approx(a.snr_db, rel=1e-8)
        assert b.ser == pytest.approx(a.ser, rel=1e-8)
    sample = text.splitlines()[1].split(",")
    assert len(sample[3].replace("-", "").replace(".", "").lstrip("0")) <= 9
    csv_path, man_path = emit_csv(rows, manifest, tmp_path)
    assert csv_path.read_bytes() == text.encode()
    assert "config.seed = 5" in man_path.read_text()
    assert read_csv("# comment\n" + text) == back
    with pytest.raises(ValueError):
        emit_csv([], manifest, tmp_path)


def test_manifest_records_case_seeds(sweep_141):
    cfg, rows, manifest = sweep_141
    assert manifest.case_seeds["-141.8"] == next(r.seed for r in rows if r.oma_dbm == 8.0)
    text = manifest.to_text()
    for key in cfg.echo():
        assert f"config.{key} = " in text


def test_sweep_deterministic():
    cfg = SweepConfig(oma_dbm_grid=(-2.0, 4.0), rin_list=(-141.0,), seed=7)
    a = rows_to_csv(run_sweep(cfg)[0])
    b = rows_to_csv(run_sweep(cfg, threads=4)[0])
    assert a == b


def test_calibration(calibration):
    assert calibration.achieved_floor == pytest.approx(REFERENCE_FLOORS[-144.0], rel=0.02)
    assert calibration.params.beta == 5.25
    p141 = floor_ser(calibration.params, -141.0).ser / 5
    p147 = floor_ser(calibration.params, -147.0).ser / 5
    assert 0.5 < p141 / REFERENCE_FLOORS[-141.0] < 2
    assert 1 / 3 < p147 / REFERENCE_FLOORS[-147.0] < 3


def test_calibration_idempotent(calibration):
    again = calibrate_floor(template=calibration.params)
    assert again.params.bandwidth_b == pytest.approx(calibration.params.bandwidth_b, rel=0.02)


def test_calibration_errors():
    with pytest.raises(ValueError):
        calibrate_floor(ber_floor=0.7)
    with pytest.raises(ValueError):
        calibrate_floor(ber_floor=1e-30, bracket=(1e9, 1e10))
