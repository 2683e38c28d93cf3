"""CSV schemas for estimates and ground truth, and the error/accuracy report.

Estimate rows use the measurement-table column order::

    exp, patient, range_m, azimuth_deg,
    br_f, br_a, br_p, br, br_ref, br_error_pct,
    hr_f, hr_a, hr_p, hr_fc, hr_ac, hr_pc, hr, hr_ref, hr_error_pct

followed by optional bookkeeping columns (``range_bin``, ``azimuth_index``,
``score``, ``flags``). Empty cells mean "not available". Ground-truth rows
are ``exp, patient, range_m, azimuth_deg, range_bin, azimuth_index,
br_ref, hr_ref``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError
from .estimators import BR_FIELDS, HR_FIELDS

ESTIMATE_COLUMNS = (
    "exp", "patient", "range_m", "azimuth_deg",
    *BR_FIELDS, "br", "br_ref", "br_error_pct",
    *HR_FIELDS, "hr", "hr_ref", "hr_error_pct",
)
EXTRA_COLUMNS = ("range_bin", "azimuth_index", "score", "flags")
TRUTH_COLUMNS = ("exp", "patient", "range_m", "azimuth_deg", "range_bin",
                 "azimuth_index", "br_ref", "hr_ref")
_TEXT_COLUMNS = {"flags"}


def error_pct(estimate: float, truth: float) -> float:
    if not truth > 0:
        raise InputError(f"reference rate must be positive, got {truth}")
    return abs(estimate - truth) / truth * 100.0


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def write_rows(path, rows: list[dict], columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])


def read_rows(path, required=("exp", "patient")) -> list[dict]:
    """Rows as dicts; numeric cells become floats (``nan`` when empty)."""
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError("empty file", path=path, line=1)
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise ParseError(f"missing columns: {', '.join(missing)}", path=path, line=1)
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            row = {}
            for k, v in raw.items():
                if k is None:
                    raise ParseError("more cells than header columns", path=path, line=lineno)
                v = (v or "").strip()
                if k in _TEXT_COLUMNS:
                    row[k] = v
                    continue
                try:
                    row[k] = float(v) if v else math.nan
                except ValueError:
                    raise ParseError(f"column {k!r}: not a number: {v!r}",
                                     path=path, line=lineno) from None
            rows.append(row)
    return rows


def row_key(row: dict) -> tuple[int, int]:
    return (int(row["exp"]), int(row["patient"]))


@dataclass
class EvaluatedRow:
    exp: int
    patient: int
    range_m: float
    azimuth_deg: float
    br: float
    br_ref: float
    br_error_pct: float
    hr: float
    hr_ref: float
    hr_error_pct: float


@dataclass
class EvaluationReport:
    rows: list[EvaluatedRow]
    unmatched_estimates: list[tuple[int, int]] = field(default_factory=list)
    unmatched_truth: list[tuple[int, int]] = field(default_factory=list)

    @property
    def mean_br_error(self) -> float:
        return _nanmean([r.br_error_pct for r in self.rows])

    @property
    def mean_hr_error(self) -> float:
        return _nanmean([r.hr_error_pct for r in self.rows])

    @property
    def br_accuracy(self) -> float:
        return 100.0 - self.mean_br_error

    @property
    def hr_accuracy(self) -> float:
        return 100.0 - self.mean_hr_error

    def summary(self) -> str:
        lines = [f"rows {len(self.rows)}",
                 f"mean_br_error_pct {self.mean_br_error:.2f}",
                 f"mean_hr_error_pct {self.mean_hr_error:.2f}",
                 f"br_accuracy_pct {self.br_accuracy:.2f}",
                 f"hr_accuracy_pct {self.hr_accuracy:.2f}"]
        for key in self.unmatched_estimates:
            lines.append(f"unmatched_estimate exp={key[0]} patient={key[1]}")
        for key in self.unmatched_truth:
            lines.append(f"unmatched_truth exp={key[0]} patient={key[1]}")
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        cols = ("exp", "patient", "range_m", "azimuth_deg", "br", "br_ref", "br_error_pct",
                "hr", "hr_ref", "hr_error_pct")
        write_rows(path, [r.__dict__ for r in self.rows], cols)


def _nanmean(values) -> float:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    return float(np.mean(v)) if v.size else math.nan


def _match_by_location(estimates, truth, range_tol_m, azimuth_tol_deg):
    """Greedy nearest-neighbour pairing within each experiment."""
    candidates = []
    for i, e in enumerate(estimates):
        for j, t in enumerate(truth):
            if int(e["exp"]) != int(t["exp"]):
                continue
            dr = abs(e["range_m"] - t["range_m"])
            da = abs(e["azimuth_deg"] - t["azimuth_deg"])
            if dr <= range_tol_m and da <= azimuth_tol_deg:
                candidates.append((dr / range_tol_m + da / max(azimuth_tol_deg, 1e-9), i, j))
    pairs, used_e, used_t = {}, set(), set()
    for _, i, j in sorted(candidates):
        if i not in used_e and j not in used_t:
            pairs[i] = j
            used_e.add(i)
            used_t.add(j)
    return pairs


def evaluate(estimates: list[dict], truth: list[dict] | None = None,
             br_column: str = "br", hr_column: str = "hr", match: str = "key",
             range_tol_m: float = 0.3, azimuth_tol_deg: float = 15.0) -> EvaluationReport:
    """Per-row error percentages and their means.

    Without ``truth`` the estimate rows' own ``br_ref``/``hr_ref`` cells are
    the reference. ``match="key"`` pairs rows on ``(exp, patient)``;
    ``match="location"`` pairs each estimate with the nearest truth row of
    the same experiment, for detections whose numbering is by score.
    """
    for col in (br_column, hr_column):
        if estimates and col not in estimates[0]:
            raise InputError(f"estimates have no column {col!r}")
    if truth is None:
        truth = estimates
        pairs = {i: i for i in range(len(estimates))}
    elif match == "key":
        index = {}
        for j, t in enumerate(truth):
            if row_key(t) in index:
                raise InputError(f"duplicate truth row exp={row_key(t)[0]} patient={row_key(t)[1]}")
            index[row_key(t)] = j
        pairs = {i: index[row_key(e)] for i, e in enumerate(estimates) if row_key(e) in index}
    elif match == "location":
        pairs = _match_by_location(estimates, truth, range_tol_m, azimuth_tol_deg)
    else:
        raise ValueError(f"unknown match mode {match!r}")

    rows = []
    for i, e in enumerate(estimates):
        if i not in pairs:
            continue
        t = truth[pairs[i]]
        br, hr = e[br_column], e[hr_column]
        br_ref, hr_ref = t.get("br_ref", math.nan), t.get("hr_ref", math.nan)
        rows.append(EvaluatedRow(
            int(e["exp"]), int(e["patient"]), e.get("range_m", math.nan),
            e.get("azimuth_deg", math.nan), br, br_ref,
            error_pct(br, br_ref) if math.isfinite(br) and math.isfinite(br_ref) else math.nan,
            hr, hr_ref,
            error_pct(hr, hr_ref) if math.isfinite(hr) and math.isfinite(hr_ref) else math.nan))
    matched_t = set(pairs.values())
    return EvaluationReport(
        rows,
        unmatched_estimates=[row_key(e) for i, e in enumerate(estimates) if i not in pairs],
        unmatched_truth=[row_key(t) for j, t in enumerate(truth) if j not in matched_t],
    )
