import io
import json
import math
from pathlib import Path

import pytest

from fncbounds.errors import DomainError
from fncbounds.tables import (
    PAPER_TABLES,
    SURFACE_HEADER,
    TABLE1_PRESETS,
    GridSpec,
    axis_points,
    compare_to_golden,
    evaluate_point,
    export_surface,
    load_golden,
    paper_table,
    parse_number,
    read_surface,
    rows_to_json,
    sweep,
    write_table_csv,
)

REPO = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="module")
def table2_090():
    return paper_table(2, gamma=0.90)


def test_preset_sizes():
    for name, grid in TABLE1_PRESETS.items():
        assert len(grid.means()) == 61 and len(grid.sds()) == 60
        assert len(grid) == 3660
        assert grid.means()[0] == 100.0 and grid.means()[-1] == 106.0
        assert grid.sds()[0] == 0.1 and grid.sds()[-1] == 6.0
    assert [g.n for g in TABLE1_PRESETS.values()] == [20, 40, 20, 40]


def test_axis_points_tolerates_rounding():
    assert axis_points(0.1, 0.3, 0.1) == [0.1, 0.2, 0.3]
    assert axis_points(5.0, 5.0, 1.0) == [5.0]


@pytest.mark.parametrize("kw", [dict(mean_step=0.0), dict(sd_start=0.0), dict(mean_stop=99.0),
                                dict(n=1), dict(gamma=1.0), dict(e_max=1.5)])
def test_grid_validation(kw):
    base = dict(mean_start=100.0, mean_stop=101.0, mean_step=0.5, sd_start=1.0, sd_stop=2.0,
                sd_step=0.5, n=20)
    base.update(kw)
    with pytest.raises(DomainError):
        GridSpec(**base)


def test_single_point_grid():
    rows = sweep(GridSpec(102.0, 102.0, 1.0, 3.0, 3.0, 1.0, n=20))
    assert len(rows) == 1
    assert (rows[0].mean, rows[0].sd) == (102.0, 3.0)
    assert not rows[0].errors


def test_paper_table_shape(table2_090):
    assert len(table2_090) == 30
    assert [(r.mean, r.sd) for r in table2_090[:6]] == [
        (100.0, 1.0), (100.0, 2.0), (100.0, 3.0), (100.0, 4.0), (100.0, 5.0), (101.0, 1.0)]
    with pytest.raises(DomainError):
        paper_table(7)


def test_paper_table_against_bundled_golden(table2_090):
    checked, bad, cells = compare_to_golden(table2_090, load_golden(which=2))
    assert checked == 180 and len(cells) == 180
    assert bad == []


def test_golden_mismatch_is_reported(table2_090):
    golden = load_golden(which=2)
    key = (100.0, 2.0, "lower_limit")
    e, lo, up = golden[key]
    golden[key] = (e, lo, up * 1.05)
    _, bad, _ = compare_to_golden(table2_090, golden)
    assert len(bad) == 1
    assert bad[0].field == "upper" and bad[0].rel_dev == pytest.approx(0.05 / 1.05, abs=5e-3)


def test_bundled_golden_shapes():
    for which in PAPER_TABLES:
        g = load_golden(which=which)
        assert len(g) == 60
        assert all(len(v) == 3 and all(x > 0 for x in v) for v in g.values())


def test_repo_golden_copies_match_package():
    for which in PAPER_TABLES:
        a = (REPO / "golden" / f"table{which}.csv").read_text()
        b = (REPO / "src" / "fncbounds" / "data" / f"table{which}.csv").read_text()
        assert a == b


def test_golden_with_decimal_commas():
    text = ("mean;sd;tail;expected;lower;upper\n"
            "100,00;2,00;lower_limit;2,87e-07;8,69e-10;5,32e-05\n")
    g = load_golden(io.StringIO(text))
    assert g[(100.0, 2.0, "lower_limit")] == (2.87e-7, 8.69e-10, 5.32e-5)
    assert parse_number(" 1,5 ") == 1.5


def test_export_surface_round_trip(tmp_path):
    rows = sweep(GridSpec(100.0, 101.0, 0.5, 1.0, 2.0, 0.5, n=20))
    path = tmp_path / "surface.csv"
    export_surface(rows, "lower_limit", path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(SURFACE_HEADER)
    assert len(lines) == 1 + 9
    back = read_surface(path)
    for rec, row in zip(back, rows):
        assert rec["mean"] == row.mean and rec["sd"] == row.sd
        for f in ("expected", "lower", "upper"):
            assert rec[f] == pytest.approx(getattr(row.lower_limit, f), rel=1e-6)


def test_export_surface_stream_and_errors():
    rows = sweep(GridSpec(100.0, 100.0, 1.0, 1.0, 1.0, 1.0, n=20))
    buf = io.StringIO()
    export_surface(rows, "upper_limit", buf)
    assert len(buf.getvalue().splitlines()) == 2
    with pytest.raises(DomainError):
        export_surface([], "upper_limit", io.StringIO())
    with pytest.raises(DomainError):
        export_surface(rows, "middle", io.StringIO())
    with pytest.raises(OSError):
        export_surface(rows, "upper_limit", "/nonexistent-dir/x.csv")


def test_underflow_cells_written_as_zero():
    # n=40, mean 106, sd 0.1: the lower-limit tail at 80 is far below the double range
    rows = sweep(GridSpec(106.0, 106.0, 1.0, 0.1, 0.1, 1.0, n=40, e_max=0.20))
    buf = io.StringIO()
    export_surface(rows, "lower_limit", buf)
    last = buf.getvalue().splitlines()[-1].split(",")
    assert last[2] == "0.000000e0" and last[-1] == "1"
    rec = read_surface(io.StringIO(buf.getvalue()))[0]
    assert rec["expected"] == 0.0 and rec["underflow"] == 1


def test_table_csv_and_json(table2_090):
    buf = io.StringIO()
    write_table_csv(table2_090, buf)
    assert len(buf.getvalue().splitlines()) == 1 + 60
    recs = json.loads(rows_to_json(table2_090))
    assert len(recs) == 30
    assert set(recs[0]) == {"mean", "sd", "lower_limit", "upper_limit", "errors"}
    assert set(recs[0]["lower_limit"]) >= {"expected", "lower", "upper", "underflow"}


def test_surface_monotone_in_mean():
    # lower-limit tail fraction falls as the mean moves away from the limit
    rows = sweep(GridSpec(100.0, 106.0, 0.5, 3.0, 3.0, 1.0, n=20))
    ups = [r.lower_limit.upper for r in rows]
    assert all(b < a for a, b in zip(ups, ups[1:]))
    ups = [r.upper_limit.upper for r in rows]
    assert all(b > a for a, b in zip(ups, ups[1:]))


def test_surface_monotone_in_sd():
    rows = sweep(GridSpec(103.0, 103.0, 1.0, 0.5, 6.0, 0.5, n=40))
    for tail in ("lower_limit", "upper_limit"):
        ups = [getattr(r, tail).upper for r in rows]
        assert all(b > a for a, b in zip(ups, ups[1:]))


def test_jobs_do_not_change_results():
    grid = GridSpec(100.0, 102.0, 1.0, 1.0, 3.0, 1.0, n=20)
    assert sweep(grid, jobs=1) == sweep(grid, jobs=2)


def test_convergence_failure_is_recorded(monkeypatch):
    from fncbounds import tables
    from fncbounds.errors import ConvergenceError

    def fail(*a, **k):
        raise ConvergenceError("boom")

    monkeypatch.setattr(tables, "upper_tail_bounds", fail)
    row = evaluate_point(101.0, 2.0, 20, 100.0, 0.1, 0.95)
    assert row.upper_limit is None and row.lower_limit is not None
    assert len(row.errors) == 1 and "upper_limit" in row.errors[0]
    buf = io.StringIO()
    export_surface([row], "upper_limit", buf)
    assert "nan" in buf.getvalue().splitlines()[1]
    assert math.isfinite(row.lower_limit.upper)
