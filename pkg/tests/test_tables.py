import math

import pytest

from vitalradar.errors import InputError, ParseError
from vitalradar.tables import (ESTIMATE_COLUMNS, TRUTH_COLUMNS, error_pct, evaluate,
                               read_rows, write_rows)

from conftest import FIXTURES

TABLE = FIXTURES / "table1.csv"
PUBLISHED_BR = [1.47, 1.60, 5.21, 0.85, 2.99, 1.55, 1.06, 0.90, 0.55, 1.83, 5.69, 0.97]


def test_fixture_has_measurement_schema():
    header = TABLE.read_text().splitlines()[0].split(",")
    assert tuple(header) == ESTIMATE_COLUMNS
    assert len(read_rows(TABLE)) == 12


def test_error_pct_example():
    assert error_pct(25.40, 25.78) == pytest.approx(1.47, abs=0.005)
    assert error_pct(70.0, 70.0) == 0.0
    with pytest.raises(InputError):
        error_pct(1.0, 0.0)


def test_every_error_cell_recomputes():
    for row in read_rows(TABLE):
        assert error_pct(row["br"], row["br_ref"]) == pytest.approx(row["br_error_pct"], abs=0.05)
        assert error_pct(row["hr"], row["hr_ref"]) == pytest.approx(row["hr_error_pct"], abs=0.05)


def test_published_br_column_and_means():
    rows = read_rows(TABLE)
    assert [r["br_error_pct"] for r in rows] == PUBLISHED_BR
    report = evaluate(rows)
    assert report.mean_br_error == pytest.approx(2.06, abs=0.01)
    assert report.mean_hr_error == pytest.approx(6.57, abs=0.01)
    assert report.br_accuracy == pytest.approx(97.94, abs=0.01)
    assert report.hr_accuracy == pytest.approx(93.43, abs=0.01)


def test_perfect_estimates_are_100pct_accurate():
    rows = [dict(exp=1, patient=i, br=r, br_ref=r, hr=h, hr_ref=h)
            for i, (r, h) in enumerate([(12.0, 70.0), (15.0, 88.0)], start=1)]
    report = evaluate(rows)
    assert report.mean_br_error == 0 and report.br_accuracy == 100 and report.hr_accuracy == 100


def test_key_matching_reports_unmatched():
    est = [dict(exp=1, patient=1, br=12.0, hr=70.0), dict(exp=1, patient=2, br=9.0, hr=60.0)]
    truth = [dict(exp=1, patient=1, br_ref=12.0, hr_ref=70.0),
             dict(exp=2, patient=1, br_ref=14.0, hr_ref=80.0)]
    report = evaluate(est, truth)
    assert len(report.rows) == 1
    assert report.unmatched_estimates == [(1, 2)] and report.unmatched_truth == [(2, 1)]
    assert "unmatched_estimate exp=1 patient=2" in report.summary()


def test_location_matching_pairs_nearest():
    est = [dict(exp=1, patient=1, range_m=1.52, azimuth_deg=0.0, br=18.0, hr=66.0),
           dict(exp=1, patient=2, range_m=0.98, azimuth_deg=-45.0, br=12.0, hr=75.0)]
    truth = [dict(exp=1, patient=1, range_m=1.0, azimuth_deg=-45.0, br_ref=12.0, hr_ref=75.0),
             dict(exp=1, patient=2, range_m=1.5, azimuth_deg=0.0, br_ref=18.0, hr_ref=66.0)]
    report = evaluate(est, truth, match="location")
    assert report.mean_br_error == 0 and report.mean_hr_error == 0
    assert not report.unmatched_truth


def test_duplicate_truth_rejected():
    truth = [dict(exp=1, patient=1, br_ref=1.0, hr_ref=1.0)] * 2
    with pytest.raises(InputError, match="duplicate"):
        evaluate([dict(exp=1, patient=1, br=1.0, hr=1.0)], truth)


def test_missing_column_rejected():
    with pytest.raises(InputError, match="br_x"):
        evaluate(read_rows(TABLE), br_column="br_x")


def test_write_read_round_trip(tmp_path):
    rows = [dict(exp=3, patient=2, range_m=1.0, azimuth_deg=30.0, range_bin=10,
                 azimuth_index=6, br_ref=18.75, hr_ref=math.nan)]
    path = tmp_path / "t.csv"
    write_rows(path, rows, TRUTH_COLUMNS)
    assert path.read_text().splitlines()[1] == "3,2,1.0,30.0,10,6,18.75,"
    back = read_rows(path)[0]
    assert back["br_ref"] == 18.75 and math.isnan(back["hr_ref"])


def test_parse_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("exp,patient,br\n1,1,12\n1,2,twelve\n")
    with pytest.raises(ParseError, match=":3"):
        read_rows(path)
    path.write_text("exp,br\n1,1\n")
    with pytest.raises(ParseError, match="patient"):
        read_rows(path)
    with pytest.raises(InputError):
        read_rows(tmp_path / "absent.csv")
