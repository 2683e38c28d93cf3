"""Fit fusion weights on simulated trials and check them on fresh scenes.

Run:  python demos/calibrate_fusion.py [--scenes 50]
"""
import argparse

import numpy as np

from vitalradar import RadarConfig
from vitalradar.fusion import cross_validate, fit, single_estimator_errors
from vitalradar.trials import calibration_set, random_scenes, run_trials


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scenes", type=int, default=50)
    ap.add_argument("--variability", type=float, default=0.0,
                    help="peak fractional rate wander, e.g. 0.05")
    args = ap.parse_args()
    config = RadarConfig()
    var = (0.0, args.variability)

    trials = run_trials(random_scenes(args.scenes, seed=11, config=config, variability=var), config)
    cal = calibration_set(trials)
    weights = fit(cal, config.digest())
    print(f"calibration rows: {cal.P} of {len(trials)} trials")
    print("c =", np.round(weights.c, 4), " d =", np.round(weights.d, 4))

    single = single_estimator_errors(cal)
    cv = cross_validate(cal, 5)
    print("\nmean absolute % error per estimator:")
    for k, v in single.items():
        print(f"  {k:6s} {v:6.2f}")
    print(f"  fused BR (5-fold CV) {cv.br_error:.2f}, fused HR (5-fold CV) {cv.hr_error:.2f}")

    fresh = run_trials(random_scenes(10, seed=12, config=config, variability=var), config, weights)
    print("\nfresh scenes (truth -> fused):")
    for t in fresh:
        if t.result is None:
            print("  missed")
            continue
        if t.result.error:
            # a flagged estimate with nonzero weight blocks fusion for this subject
            print(f"  BR {t.truth.br_per_min:5.2f}, HR {t.truth.hr_per_min:6.2f}: {t.result.error}")
            continue
        print(f"  BR {t.truth.br_per_min:5.2f} -> {t.result.br:5.2f}   "
              f"HR {t.truth.hr_per_min:6.2f} -> {t.result.hr:6.2f}")


if __name__ == "__main__":
    main()
