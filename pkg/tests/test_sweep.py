"""
#########################################
##      created by: Al Muller
##       filename: tests/test_sweep.py
#########################################
"""

import io
from pathlib import Path

import pytest

from cvmdi.config import load_run_config
from cvmdi.errors import ConfigError, CvmdiError
from cvmdi.protocol import CaseId
from cvmdi.sweep import (
    SWEEP_COLUMNS,
    PointTask,
    distance_grid,
    eta_grid,
    evaluate_point,
    max_distances,
    reproduce,
    scan_distance,
    scan_eta,
    write_csv,
)


def _config(**overrides):
    return load_run_config(None, overrides)


def test_grids() -> None:
    assert len(distance_grid(2.0, 50.0, 0.5)) == 97
    assert list(distance_grid(0.0, 1.0, 0.5)) == [0.0, 0.5, 1.0]
    with pytest.raises(ConfigError):
        distance_grid(5.0, 5.0, 1.0)
    with pytest.raises(ConfigError):
        distance_grid(0.0, 5.0, 0.0)
    assert list(eta_grid(0.2, 0.5, 0.3)) == [0.2, 0.5]
    with pytest.raises(ConfigError):
        eta_grid(0.0, 0.5, 0.1)


def test_rate_row_statuses() -> None:
    cfg = _config(case="both", geometry="symmetric")
    near = evaluate_point(PointTask(cfg, CaseId.BOTH, 4.0, "realistic"))
    assert near.status == "ok"
    assert near.rate_bits_per_use > 0.0
    assert (near.l_ac_km, near.l_bc_km) == (2.0, 2.0)
    far = evaluate_point(PointTask(cfg, CaseId.BOTH, 500.0, "realistic"))
    assert far.status == "nonpositive"
    assert far.rate_bits_per_use <= 0.0


def test_failed_point_is_skipped_or_raised() -> None:
    cfg = _config(block_n="10", pe_mode="worst_case")
    task = PointTask(cfg, CaseId.BOTH, 4.0, "realistic")
    assert evaluate_point(task).status == "skipped"
    with pytest.raises(CvmdiError):
        evaluate_point(task, strict=True)


def test_estimated_mode_drops_rin() -> None:
    cfg = _config(v_rin="0.4", geometry="asymmetric")
    est = evaluate_point(PointTask(cfg, CaseId.BOTH, 10.0, "estimated"))
    real = evaluate_point(PointTask(cfg, CaseId.BOTH, 10.0, "realistic"))
    assert est.v_rin == real.v_rin == 0.4
    assert est.rate_bits_per_use >= real.rate_bits_per_use


def test_scan_distance_is_ordered_and_monotone() -> None:
    cfg = _config(geometry="asymmetric")
    rows = scan_distance(cfg, 2.0, 50.0, 0.5, cases=[CaseId.BOTH])
    assert len(rows) == 97
    distances = [r.l_bc_km for r in rows]
    assert distances == sorted(distances)
    rates = [r.rate_bits_per_use for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(rates, rates[1:], strict=False))


def test_scan_rows_interleave_cases_and_modes() -> None:
    cases = [CaseId.ALICE_ONLY, CaseId.BOB_ONLY]
    rows = scan_distance(_config(), 1.0, 2.0, 1.0, cases=cases, modes=["estimated", "realistic"])
    assert [(r.case, r.mode) for r in rows[:4]] == [
        (CaseId.ALICE_ONLY, "estimated"),
        (CaseId.ALICE_ONLY, "realistic"),
        (CaseId.BOB_ONLY, "estimated"),
        (CaseId.BOB_ONLY, "realistic"),
    ]
    assert len(rows) == 8


def test_parallel_scan_matches_serial() -> None:
    cfg = _config(v_rin="0.2", geometry="asymmetric")
    serial = scan_distance(cfg, 2.0, 12.0, 2.0, modes=["estimated", "realistic"])
    parallel = scan_distance(cfg, 2.0, 12.0, 2.0, modes=["estimated", "realistic"], workers=2)
    assert parallel == serial


def test_single_cell_eta_scan_matches_rate() -> None:
    cfg = _config(geometry="asymmetric", case="bob")
    [cell] = scan_eta(cfg, [0.9], [10.0])
    direct = evaluate_point(PointTask(cfg, CaseId.BOB_ONLY, 10.0, "realistic"))
    assert cell.rate_bits_per_use == direct.rate_bits_per_use
    assert cell.eta_m == 0.9


def test_csv_output_is_stable() -> None:
    cfg = _config()
    rows = scan_distance(cfg, 1.0, 3.0, 1.0)
    a, b = io.StringIO(), io.StringIO()
    assert write_csv(rows, a) == 3
    write_csv(scan_distance(cfg, 1.0, 3.0, 1.0), b)
    assert a.getvalue() == b.getvalue()
    lines = a.getvalue().split("\n")
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert lines[0].startswith("case,l_ac_km,l_bc_km,eta_m,v_rin,mode,i_ab")
    assert "\r" not in a.getvalue()


def test_max_distances_per_case() -> None:
    cfg = _config(geometry="asymmetric")
    out = max_distances(cfg, [CaseId.BOB_ONLY], [0.5, 0.9])
    assert [(case, eta) for case, eta, _ in out] == [(CaseId.BOB_ONLY, 0.5), (CaseId.BOB_ONLY, 0.9)]
    assert all(d > 0.0 for _, _, d in out)


def test_reproduce_writes_one_file_per_curve(tmp_path: Path) -> None:
    paths = reproduce(3, tmp_path)
    assert sorted(p.name for p in paths) == [
        "fig3_sym_alice.csv",
        "fig3_sym_bob.csv",
        "fig3_sym_both.csv",
        "fig3_sym_untrusted.csv",
    ]
    first = [p.read_bytes() for p in paths]
    reproduce(3, tmp_path)
    assert [p.read_bytes() for p in paths] == first
    with pytest.raises(ConfigError):
        reproduce(7, tmp_path)


def test_reproduce_rin_figure_writes_24_curves(tmp_path: Path) -> None:
    paths = reproduce(2, tmp_path)
    names = {p.name for p in paths}
    assert len(paths) == len(names) == 24
    assert {"fig2_a_est.csv", "fig2_c_rin0.1.csv", "fig2_f_rin0.4.csv"} <= names
    assert all(p.is_file() for p in paths)
