"""Command-line driver: simulate, process, calibrate, evaluate.

Exit status is 0 on success, 2 for bad input (unparsable or inconsistent
files, bad arguments) and 3 for numerical failures (singular calibration,
undefined phase). Failures print one tab-separated line on stderr::

    error<TAB>input|numerical<TAB><ExceptionType><TAB><message>
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .activity import DEFAULT_ALPHA, write_detections_csv
from .errors import InputError, NumericalError
from .estimators import BR_FIELDS, HR_FIELDS
from .fusion import (CalibrationSet, FusionWeights, cross_validate, fit,
                     single_estimator_errors)
from .ingest import LAYOUTS, load_capture, quantize, write_capture
from .pipeline import ProcessResult, process_cube
from .radar import RadarConfig, load_config
from .simulator import ground_truth, load_scene, reference_scene, synthesize_cube
from .tables import (ESTIMATE_COLUMNS, EXTRA_COLUMNS, TRUTH_COLUMNS, EvaluationReport,
                     evaluate, read_rows, write_rows)

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
SIGNAL_COLUMNS = ("chirp", "t_s", "raw", "unwrapped", "breath", "heart", "heart_comb")


def _config(path) -> RadarConfig:
    return load_config(path) if path else RadarConfig()


def _layout(name: str, config: RadarConfig):
    try:
        return LAYOUTS[name](config)
    except KeyError:
        raise InputError(f"unknown layout {name!r}; choose from {', '.join(LAYOUTS)}") from None


def _truth_path(out: Path) -> Path:
    return out.with_name(out.stem + ".truth.csv")


def cmd_simulate(scene_path, config_path, out, seed=None, truth_out=None,
                 layout: str = "canonical", threads: int = 1, exp: int = 1) -> list[dict]:
    """Render a scene to a 16-bit capture file and write its ground truth.

    Without a scene file the built-in three-subject reference scene is used.
    Returns the ground-truth rows.
    """
    config = _config(config_path)
    scene = load_scene(scene_path) if scene_path else reference_scene()
    if seed is not None:
        scene = dataclasses.replace(scene, seed=int(seed))
    cube = quantize(synthesize_cube(scene, config, threads=threads))
    out = Path(out)
    write_capture(cube, out, _layout(layout, config))
    rows = [dict(exp=exp, patient=i, range_m=g.range_m, azimuth_deg=g.azimuth_deg,
                 range_bin=g.range_bin, azimuth_index=g.azimuth_index,
                 br_ref=g.br_per_min, hr_ref=g.hr_per_min)
            for i, g in enumerate(ground_truth(scene, config), start=1)]
    write_rows(truth_out or _truth_path(out), rows, TRUTH_COLUMNS)
    return rows


def _estimate_rows(result: ProcessResult, exp: int) -> list[dict]:
    rows = []
    for i, s in enumerate(result.subjects, start=1):
        d, e = s.detection, s.estimate
        row = dict(exp=exp, patient=i, range_m=d.estimated_range_m,
                   azimuth_deg=d.estimated_azimuth_deg, br=s.br, hr=s.hr,
                   range_bin=d.range_bin, azimuth_index=d.azimuth_index, score=d.score,
                   flags=";".join(f"{k}={v}" for k, v in sorted(e.flags.items())))
        row.update({f: getattr(e, f) for f in BR_FIELDS + HR_FIELDS})
        if s.error:
            row["flags"] = ";".join(filter(None, [row["flags"], "fusion=" + s.error]))
        rows.append(row)
    return rows


def _dump_signals(result: ProcessResult, out_dir: Path) -> list[Path]:
    sig_dir = out_dir / "signals"
    sig_dir.mkdir(parents=True, exist_ok=True)
    dt = result.spectra.config.chirp_interval_s
    paths = []
    for i, s in enumerate(result.subjects, start=1):
        m = len(s.signals["raw"])
        cols = {"chirp": np.arange(m), "t_s": np.arange(m) * dt}
        for name in SIGNAL_COLUMNS[2:]:
            cols[name] = s.signals.get(name, np.full(m, math.nan))
        rows = [{k: v[j] for k, v in cols.items()} for j in range(m)]
        path = sig_dir / f"subject_{i}.csv"
        write_rows(path, rows, SIGNAL_COLUMNS)
        paths.append(path)
    return paths


def cmd_process(capture, config_path, out_dir, weights_path=None, layout="canonical",
                alpha: float = DEFAULT_ALPHA, dump_signals: bool = False,
                threads: int = 1, exp: int = 1) -> ProcessResult:
    """Localize subjects in a capture and estimate their rates.

    Writes ``detections.csv``, ``estimates.csv``, ``activity_map.csv`` and
    ``range_azimuth.csv`` into ``out_dir``; with ``dump_signals`` also
    ``signals/subject_<n>.csv`` per detection. Fused ``br``/``hr`` cells are
    filled only when a weights file is given.
    """
    config = _config(config_path)
    cube = load_capture(capture, config, _layout(layout, config))
    weights = FusionWeights.load(weights_path, config.digest()) if weights_path else None
    result = process_cube(cube, alpha=alpha, weights=weights, threads=threads)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_detections_csv(out_dir / "detections.csv",
                         [s.detection for s in result.subjects])
    write_rows(out_dir / "estimates.csv", _estimate_rows(result, exp),
               ESTIMATE_COLUMNS + EXTRA_COLUMNS)
    result.activity.to_csv(out_dir / "activity_map.csv")
    result.range_azimuth.to_csv(out_dir / "range_azimuth.csv")
    if dump_signals:
        _dump_signals(result, out_dir)
    return result


def _calibration_from_csv(estimates_path, truth_path=None, match="key") -> CalibrationSet:
    est = read_rows(estimates_path, required=("exp", "patient") + BR_FIELDS + HR_FIELDS)
    if truth_path:
        truth = read_rows(truth_path, required=("exp", "patient", "br_ref", "hr_ref"))
        report = evaluate(est, truth, br_column="br_f", hr_column="hr_f", match=match)
        if report.unmatched_estimates:
            missing = ", ".join(f"exp={e} patient={p}" for e, p in report.unmatched_estimates)
            raise InputError(f"estimate rows without truth: {missing}")
        ref = {(r.exp, r.patient): (r.br_ref, r.hr_ref) for r in report.rows}
        for row in est:
            row["br_ref"], row["hr_ref"] = ref[(int(row["exp"]), int(row["patient"]))]
    elif est and not {"br_ref", "hr_ref"} <= set(est[0]):
        raise InputError("no truth file given and estimates lack br_ref/hr_ref columns")
    B = [[r[f] for f in BR_FIELDS] for r in est]
    H = [[r[f] for f in HR_FIELDS] for r in est]
    return CalibrationSet(np.reshape(B, (-1, 3)), [r["br_ref"] for r in est],
                          np.reshape(H, (-1, 6)), [r["hr_ref"] for r in est])


def calibration_report(cal: CalibrationSet, weights: FusionWeights, folds: int) -> str:
    single = single_estimator_errors(cal)
    best_br = min(BR_FIELDS, key=single.get)
    best_hr = min(HR_FIELDS, key=single.get)
    lines = [f"rows {cal.P}",
             "c " + " ".join(f"{v:.6g}" for v in weights.c),
             "d " + " ".join(f"{v:.6g}" for v in weights.d),
             f"residual_br {weights.residual_br:.6g}",
             f"residual_hr {weights.residual_hr:.6g}"]
    # every training split must still determine all six HR coefficients
    smallest_train = cal.P - math.ceil(cal.P / folds)
    cv = None
    if smallest_train >= len(HR_FIELDS):
        cv = cross_validate(cal, folds)
        lines += [f"cv_folds {folds}",
                  f"cv_br_error_pct {cv.br_error:.4f}",
                  f"cv_hr_error_pct {cv.hr_error:.4f}"]
    else:
        lines.append(f"cv_unavailable training folds of {smallest_train} rows "
                     f"cannot fit {len(HR_FIELDS)} coefficients")
    lines += [f"single_{k}_error_pct {v:.4f}" for k, v in single.items()]
    lines += [f"best_single_br {best_br} {single[best_br]:.4f}",
              f"best_single_hr {best_hr} {single[best_hr]:.4f}"]
    if cv is not None:
        lines += [f"fusion_beats_best_br {str(cv.br_error <= single[best_br]).lower()}",
                  f"fusion_beats_best_hr {str(cv.hr_error <= single[best_hr]).lower()}"]
    return "\n".join(lines) + "\n"


def cmd_calibrate(estimates_path, out, truth_path=None, folds: int = 5,
                  config_path=None, match="key", stream=None) -> FusionWeights:
    """Fit fusion weights from an estimates CSV and print the fit report."""
    cal = _calibration_from_csv(estimates_path, truth_path, match)
    digest = _config(config_path).digest() if config_path else None
    weights = fit(cal, config_digest=digest)
    weights.save(out)
    if cal.P < 2 * folds:
        folds = cal.P  # leave-one-out on small sets
    (stream or sys.stdout).write(calibration_report(cal, weights, folds))
    return weights


def cmd_evaluate(estimates_path, truth_path=None, br_column="br", hr_column="hr",
                 match="key", out=None, stream=None) -> EvaluationReport:
    """Per-row error percentages plus mean errors and accuracies."""
    est = read_rows(estimates_path)
    truth = read_rows(truth_path, required=("exp", "patient", "br_ref", "hr_ref")) \
        if truth_path else None
    report = evaluate(est, truth, br_column=br_column, hr_column=hr_column, match=match)
    if out:
        report.to_csv(out)
    (stream or sys.stdout).write(report.summary())
    if report.unmatched_estimates or (truth is not None and report.unmatched_truth):
        raise InputError("unmatched rows: " + ", ".join(
            [f"estimate exp={e} patient={p}" for e, p in report.unmatched_estimates]
            + [f"truth exp={e} patient={p}" for e, p in report.unmatched_truth]))
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vitalradar",
                                description="FMCW radar breath- and heart-rate pipeline")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="radar config file (key = value); defaults built in")

    s = sub.add_parser("simulate", help="render a scene to a capture file")
    common(s)
    s.add_argument("--scene", help="scene file; the built-in reference scene if omitted")
    s.add_argument("--out", required=True, help="capture file to write")
    s.add_argument("--truth", help="ground-truth CSV (default: <out>.truth.csv)")
    s.add_argument("--seed", type=int, help="noise seed, overrides the scene's")
    s.add_argument("--layout", default="canonical", choices=sorted(LAYOUTS))
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--exp", type=int, default=1, help="experiment number for the CSV")

    s = sub.add_parser("process", help="detect subjects and estimate their rates")
    common(s)
    s.add_argument("capture")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--weights", help="fusion weights file; enables fused br/hr")
    s.add_argument("--layout", default="canonical", choices=sorted(LAYOUTS))
    s.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                   help="activity threshold as a fraction of the map maximum")
    s.add_argument("--dump-signals", action="store_true",
                   help="write per-subject phase signals as CSV")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--exp", type=int, default=1)

    s = sub.add_parser("calibrate", help="fit fusion weights")
    common(s)
    s.add_argument("estimates", help="estimates CSV (with br_ref/hr_ref unless --truth)")
    s.add_argument("--truth", help="ground-truth CSV")
    s.add_argument("--out", required=True, help="weights file to write")
    s.add_argument("--folds", type=int, default=5)
    s.add_argument("--match", choices=("key", "location"), default="key")

    s = sub.add_parser("evaluate", help="error percentages against ground truth")
    s.add_argument("estimates")
    s.add_argument("--truth", help="ground-truth CSV; else the br_ref/hr_ref columns")
    s.add_argument("--br-column", default="br")
    s.add_argument("--hr-column", default="hr")
    s.add_argument("--match", choices=("key", "location"), default="key")
    s.add_argument("--out", help="write the per-row report CSV here")
    return p


def _run(args) -> None:
    if args.command == "simulate":
        cmd_simulate(args.scene, args.config, args.out, seed=args.seed,
                     truth_out=args.truth, layout=args.layout, threads=args.threads,
                     exp=args.exp)
    elif args.command == "process":
        res = cmd_process(args.capture, args.config, args.out_dir, args.weights,
                          layout=args.layout, alpha=args.alpha,
                          dump_signals=args.dump_signals, threads=args.threads, exp=args.exp)
        print(f"detections {len(res.subjects)}")
    elif args.command == "calibrate":
        cmd_calibrate(args.estimates, args.out, truth_path=args.truth, folds=args.folds,
                      config_path=args.config, match=args.match)
    elif args.command == "evaluate":
        cmd_evaluate(args.estimates, args.truth, br_column=args.br_column,
                     hr_column=args.hr_column, match=args.match, out=args.out)


def _fail(kind: str, exc: BaseException) -> None:
    msg = " ".join(str(exc).split())
    print(f"error\t{kind}\t{type(exc).__name__}\t{msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _run(args)
    except NumericalError as exc:
        _fail("numerical", exc)
        return EXIT_NUMERICAL
    except (InputError, OSError, ValueError) as exc:
        _fail("input", exc)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
