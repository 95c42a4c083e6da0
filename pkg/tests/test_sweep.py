"""Grid sweeps: ordering, determinism, reductions, and the writers.

Most tests run against a vacuum half-space, where every pipeline stage
still executes but the quadratures cost almost nothing and the steady
state is thermal at T_W, so the concurrence vanishes identically.  That
makes the whole-grid assertions cheap and exact.
"""
import json
import math

import numpy as np
import pytest

from noneq.config import RunConfig, SweepAxisSpec, dipole_from_angles
from noneq.rates import photon_number
from noneq.sweep import (SweepAxis, SweepRecord, SweepResult, _apply_point,
                         _reduce, channel_curve, dipole_angle_scan,
                         grid_sweep, summary_dict, white_line_scan,
                         write_summary_json, write_sweep_csv)

VACUUM = RunConfig(material="vacuum")

T_AXES = (SweepAxis("T_W", (100.0, 300.0)),
          SweepAxis("T_M", (100.0, 200.0, 300.0)))


@pytest.fixture(scope="module")
def vacuum_grid():
    return grid_sweep(VACUUM, T_AXES)


# -- axes ----------------------------------------------------------------

def test_axis_construction():
    axis = SweepAxis("T_M", (100, 200.5, 300))
    assert axis.values == (100.0, 200.5, 300.0)
    assert all(isinstance(v, float) for v in axis.values)
    assert SweepAxis("T_M", (300.0,)).values == (300.0,)


@pytest.mark.parametrize("values", [(), (1.0, 1.0), (2.0, 1.0),
                                    (1.0, float("inf")),
                                    (float("nan"), 1.0)])
def test_axis_rejects_bad_values(values):
    with pytest.raises(ValueError):
        SweepAxis("T_M", values)


def test_axis_from_range_matches_spec():
    spec = SweepAxisSpec(name="z2", min=1e-7, max=1e-5, count=7,
                         scale="log")
    assert SweepAxis.from_range("z2", 1e-7, 1e-5, 7,
                                scale="log") == SweepAxis.from_spec(spec)
    with pytest.raises(ValueError):
        SweepAxis.from_range("z2", 1e-7, 1e-5, 1)


# -- grid sweeps ---------------------------------------------------------

def test_grid_row_major_order(vacuum_grid):
    assert vacuum_grid.axes == T_AXES
    expected = [(tw, tm) for tw in T_AXES[0].values
                for tm in T_AXES[1].values]
    assert [r.point for r in vacuum_grid.records] == expected


def test_vacuum_steady_state_is_thermal_at_t_w(vacuum_grid):
    # No slab means no second bath: the occupation seen by both channels
    # is the environment's own, whatever T_M says, and a thermal state
    # carries no entanglement.
    for rec in vacuum_grid.records:
        assert rec.ok
        assert not rec.degenerate and not rec.rank_ambiguous
        assert rec.concurrence <= 1e-10
        n_w = photon_number(VACUUM.omega0, rec.point[0])
        assert rec.n_S == pytest.approx(n_w, rel=1e-12)
        assert rec.n_A == pytest.approx(n_w, rel=1e-12)
        assert rec.T_S == pytest.approx(rec.point[0], rel=1e-9)
        assert abs(rec.rho_G + rec.rho_A + rec.rho_S + rec.rho_E - 1.0) < 1e-12


def test_argmax_prefers_first_on_ties(vacuum_grid):
    # Equal concurrence everywhere: strict comparison keeps the first.
    assert vacuum_grid.argmax is vacuum_grid.records[0]
    assert vacuum_grid.n_failed == 0


def test_grid_axis_validation():
    axis = SweepAxis("T_M", (100.0, 200.0))
    with pytest.raises(ValueError, match="one to three"):
        grid_sweep(VACUUM, ())
    with pytest.raises(ValueError, match="one to three"):
        grid_sweep(VACUUM, (axis,) * 4)
    with pytest.raises(ValueError, match="distinct"):
        grid_sweep(VACUUM, (axis, SweepAxis("T_M", (1.0, 2.0))))
    with pytest.raises(ValueError, match="unknown sweep axis"):
        grid_sweep(VACUUM, (SweepAxis("T_X", (1.0, 2.0)),))
    with pytest.raises(ValueError, match="unknown sweep axis"):
        # the common-height shorthand belongs to white_line_scan only
        grid_sweep(VACUUM, (SweepAxis("z", (1e-6, 2e-6)),))


def test_worker_count_does_not_change_records(vacuum_grid, tmp_path):
    parallel = grid_sweep(VACUUM, T_AXES, jobs=2)
    assert parallel.records == vacuum_grid.records
    assert parallel.argmax == vacuum_grid.argmax

    paths = [tmp_path / name for name in ("serial.csv", "serial2.csv",
                                          "parallel.csv")]
    write_sweep_csv(vacuum_grid, paths[0], VACUUM.resolved_hash())
    write_sweep_csv(vacuum_grid, paths[1], VACUUM.resolved_hash())
    write_sweep_csv(parallel, paths[2], VACUUM.resolved_hash())
    blobs = [p.read_bytes() for p in paths]
    assert blobs[0] == blobs[1] == blobs[2]


def test_failed_points_are_kept_but_not_reduced():
    # Starved quadrature settings make every point fail; the grid shape
    # survives and the argmax is empty.
    cfg = RunConfig(rel_tol=1e-12, abs_tol=1e-15, max_subdivisions=1)
    res = grid_sweep(cfg, (SweepAxis("T_M", (100.0, 200.0)),))
    assert len(res.records) == 2
    assert res.n_failed == 2
    assert res.argmax is None
    for rec in res.records:
        assert not rec.ok
        assert "QuadratureError" in rec.error
        assert math.isnan(rec.concurrence)


# -- reduction rules -----------------------------------------------------

def test_reduce_skips_nan_and_failures():
    axis = SweepAxis("T_M", (1.0, 2.0, 3.0, 4.0))
    recs = [SweepRecord(point=(1.0,), concurrence=0.2),
            SweepRecord(point=(2.0,), concurrence=0.2),
            SweepRecord(point=(3.0,), ok=False, error="boom",
                        concurrence=0.9),
            SweepRecord(point=(4.0,))]
    res = _reduce((axis,), recs)
    assert res.argmax is recs[0]
    assert res.n_failed == 1


def test_result_checks_grid_size():
    axis = SweepAxis("T_M", (1.0, 2.0))
    with pytest.raises(ValueError, match="record count"):
        SweepResult(axes=(axis,), records=(SweepRecord(point=(1.0,)),),
                    argmax=None, n_failed=0)


# -- point application ---------------------------------------------------

def test_apply_point_field_mapping():
    moved = _apply_point(VACUUM, ("z",), (2.0e-6,))
    assert moved.z1 == moved.z2 == 2.0e-6
    assert _apply_point(VACUUM, ("delta",), (5e-9,)).thickness == 5e-9
    assert _apply_point(VACUUM, ("r12",), (1e-6,)).r12 == 1e-6


def test_apply_point_angles_rotate_both_dipoles():
    phi_scan = _apply_point(VACUUM, ("dipole_phi",), (math.pi / 2,))
    assert phi_scan.dipole1 == dipole_from_angles(math.pi / 2, 0.0)
    assert phi_scan.dipole1 == phi_scan.dipole2

    theta_scan = _apply_point(VACUUM, ("dipole_theta",), (math.pi / 2,))
    assert theta_scan.dipole1 == dipole_from_angles(math.pi / 2,
                                                    math.pi / 2)

    both = _apply_point(VACUUM, ("dipole_phi", "dipole_theta"),
                        (math.pi / 2, math.pi))
    assert both.dipole1 == dipole_from_angles(math.pi / 2, math.pi)


def test_dipole_angle_scan_runs():
    axis = SweepAxis("dipole_phi", (0.0, math.pi / 4, math.pi / 2))
    res = dipole_angle_scan(VACUUM, axis)
    assert all(r.ok for r in res.records)
    with pytest.raises(ValueError, match="angle axis"):
        dipole_angle_scan(VACUUM, SweepAxis("T_M", (100.0, 200.0)))


# -- symmetric-configuration scan ----------------------------------------

def test_white_line_scan_vacuum():
    axis = SweepAxis("z1", (0.8e-6, 1.3e-6))
    res = white_line_scan(VACUUM, axis)
    # "z1" is accepted as a synonym but the scan moves both heights
    assert res.axes[0].name == "z"
    assert res.axes[0].values == axis.values
    assert res.n_failed == 0
    for rec in res.records:
        assert rec.ok
        assert rec.concurrence <= 1e-10
        assert math.isfinite(rec.gamma_ratio) and rec.gamma_ratio > 0
        assert math.isfinite(rec.n_S) and math.isfinite(rec.n_A)
    # without a slab the channel asymmetry depends only on the emitter
    # separation, so it cannot move along the scan
    assert res.records[0].gamma_ratio == pytest.approx(
        res.records[1].gamma_ratio, rel=1e-9)


def test_white_line_scan_temperature_axis():
    res = white_line_scan(VACUUM, SweepAxis("T_M", (200.0, 400.0)))
    assert res.axes[0].name == "T_M"
    assert all(r.ok for r in res.records)


def test_white_line_scan_preconditions():
    from dataclasses import replace
    axis = SweepAxis("z", (1e-6, 2e-6))
    with pytest.raises(ValueError, match="z1 = z2"):
        white_line_scan(replace(VACUUM, z2=2.0e-6), axis)
    with pytest.raises(ValueError, match="identical emitters"):
        white_line_scan(replace(VACUUM, dipole2=(1.0, 0.0, 0.0)), axis)
    with pytest.raises(ValueError, match="identical emitters"):
        white_line_scan(replace(VACUUM, gamma0_ratio=2.0), axis)
    with pytest.raises(ValueError, match="real dipoles"):
        circular = (0.6, 0.8j, 0.0)
        white_line_scan(replace(VACUUM, dipole1=circular,
                                dipole2=circular), axis)
    with pytest.raises(ValueError, match="move z or a temperature"):
        white_line_scan(VACUUM, SweepAxis("r12", (1e-6, 2e-6)))


def test_white_line_scan_reports_check_failures():
    # An impossible tolerance trips the per-point cross-check, which
    # must demote the record rather than raise.
    res = white_line_scan(VACUUM, SweepAxis("z", (0.8e-6, 1.3e-6)),
                          check_tol=-1.0)
    assert res.n_failed == len(res.records) == 2
    assert res.argmax is None
    for rec in res.records:
        assert not rec.ok
        assert "deviates" in rec.error


# -- channel-space curve -------------------------------------------------

def test_channel_curve_saturating_family():
    n_a_values = (1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3)
    curve = channel_curve(1e-6, 1e-4, n_a_values)
    assert tuple(n for n, _ in curve) == n_a_values
    concs = [c for _, c in curve]
    assert all(0.0 < c < 1.0 / 3.0 for c in concs)
    # rises steeply while the upper channel fills, then saturates
    assert concs[:4] == sorted(concs[:4])
    assert concs[3] > 0.9 * max(concs)
    assert concs[-1] == pytest.approx(0.30291215849483244, rel=1e-12)


def test_channel_curve_equal_occupations_give_zero():
    ((_, c),) = channel_curve(1.0, 0.5, (0.5,))
    assert c == 0.0


# -- writers -------------------------------------------------------------

def test_sweep_csv_format(vacuum_grid, tmp_path):
    path = tmp_path / "grid.csv"
    write_sweep_csv(vacuum_grid, path, VACUUM.resolved_hash())
    lines = path.read_text().splitlines()
    assert lines[0] == f"# config_sha256={VACUUM.resolved_hash()}"
    header = lines[1].split(",")
    assert header[:2] == ["T_W", "T_M"]
    assert header[-1] == "error"
    assert len(lines) == 2 + len(vacuum_grid.records)

    first = lines[2].split(",")
    rec = vacuum_grid.records[0]
    # full round-trip precision on every numeric column
    assert float(first[0]) == rec.point[0]
    assert float(first[1]) == rec.point[1]
    assert first[2] == "1"
    assert float(first[3]) == rec.concurrence
    assert float(first[header.index("rho_G")]) == rec.rho_G
    assert float(first[header.index("n_S")]) == rec.n_S
    assert first[header.index("degenerate")] == "0"


def test_summary_json_structure(vacuum_grid, tmp_path):
    d = summary_dict(vacuum_grid, VACUUM)
    assert d["config_sha256"] == VACUUM.resolved_hash()
    assert d["n_points"] == 6
    assert d["diagnostics"] == {"n_failed": 0, "n_degenerate": 0,
                                "n_rank_ambiguous": 0}
    assert [a["name"] for a in d["axes"]] == ["T_W", "T_M"]
    assert d["axes"][1] == {"name": "T_M", "count": 3, "min": 100.0,
                            "max": 300.0}
    assert d["argmax"]["point"] == {"T_W": 100.0, "T_M": 100.0}
    assert d["argmax"]["ok"] is True
    assert d["parameters"]["material"]["model"] == "vacuum"

    path = tmp_path / "summary.json"
    write_summary_json(vacuum_grid, path, VACUUM)
    assert json.loads(path.read_text()) == d


def test_summary_json_is_strict_json_with_failures():
    cfg = RunConfig(rel_tol=1e-12, abs_tol=1e-15, max_subdivisions=1)
    res = grid_sweep(cfg, (SweepAxis("T_M", (100.0, 200.0)),))
    d = summary_dict(res, cfg)
    # NaN observables must become null, never a bare nan token
    text = json.dumps(d, allow_nan=False)
    assert d["diagnostics"]["n_failed"] == 2
    assert d["argmax"] is None
    assert "nan" not in text.lower() or "NaN" not in text


def test_quadrature_cache_shared_across_temperature_axis():
    from noneq.sweep import _INTEGRAL_CACHE
    cfg = RunConfig(material="vacuum", z1=0.97e-6, z2=0.97e-6,
                    r12=0.31e-6)
    before = len(_INTEGRAL_CACHE)
    grid_sweep(cfg, (SweepAxis("T_M", (100.0, 200.0, 300.0, 400.0)),))
    assert len(_INTEGRAL_CACHE) == before + 1
