"""Least-squares fusion of the individual rate estimates.

``br = c . (br_f, br_a, br_p)`` and ``hr = d . (hr_f, hr_a, hr_p, hr_fc, hr_ac, hr_pc)``
with no intercept. Coefficients minimise the squared error against ground
truth over a calibration set; the solve goes through an SVD-based
least-squares routine rather than forming ``(B^T B)^-1``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FusionInputError, InputError, SingularCalibrationError
from .estimators import BR_FIELDS, HR_FIELDS, VitalEstimate

MAX_CONDITION = 1e12  # on the normal matrix B^T B
WEIGHTS_VERSION = 1


@dataclass
class CalibrationSet:
    B: np.ndarray  # (P, 3)
    b: np.ndarray  # (P,)
    H: np.ndarray  # (P, 6)
    h: np.ndarray  # (P,)

    def __post_init__(self):
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.h = np.asarray(self.h, dtype=float).ravel()
        p = len(self.b)
        if self.B.shape != (p, len(BR_FIELDS)) or self.H.shape != (p, len(HR_FIELDS)) \
                or len(self.h) != p:
            raise InputError(
                f"calibration shapes disagree: B{self.B.shape} b{self.b.shape} "
                f"H{self.H.shape} h{self.h.shape}")
        for name in ("B", "b", "H", "h"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InputError(f"calibration matrix {name} has non-finite entries")

    @property
    def P(self) -> int:
        return len(self.b)

    def subset(self, idx) -> "CalibrationSet":
        return CalibrationSet(self.B[idx], self.b[idx], self.H[idx], self.h[idx])

    @classmethod
    def from_estimates(cls, estimates: Sequence[VitalEstimate],
                       br_truth: Sequence[float], hr_truth: Sequence[float]):
        B = np.array([e.br_vector() for e in estimates]).reshape(-1, len(BR_FIELDS))
        H = np.array([e.hr_vector() for e in estimates]).reshape(-1, len(HR_FIELDS))
        return cls(B, br_truth, H, hr_truth)


@dataclass
class FusionWeights:
    c: np.ndarray
    d: np.ndarray
    P: int = 0
    residual_br: float = math.nan
    residual_hr: float = math.nan
    config_digest: str | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.d = np.asarray(self.d, dtype=float).ravel()
        if self.c.shape != (3,) or self.d.shape != (6,):
            raise InputError("fusion weights need 3 BR and 6 HR coefficients")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.d))):
            raise InputError("fusion weights must be finite")

    def to_text(self) -> str:
        lines = [f"version = {WEIGHTS_VERSION}"]
        if self.config_digest:
            lines.append(f'config_digest = "{self.config_digest}"')
        lines.append(f"training_rows = {int(self.P)}")
        for name, v in (("residual_br", self.residual_br), ("residual_hr", self.residual_hr)):
            if math.isfinite(v):
                lines.append(f"{name} = {v!r}")
        for name, v in zip(("c_f", "c_a", "c_p"), self.c):
            lines.append(f"{name} = {float(v)!r}")
        for name, v in zip(("d_f", "d_a", "d_p", "d_fc", "d_ac", "d_pc"), self.d):
            lines.append(f"{name} = {float(v)!r}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path, config_digest: str | None = None) -> "FusionWeights":
        """Read a weights file; warns if it was fitted under another config."""
        from .radar import load_toml

        data = load_toml(path)
        if data.get("version") != WEIGHTS_VERSION:
            raise InputError(f"{path}: unsupported weights version {data.get('version')}")
        try:
            c = [data[k] for k in ("c_f", "c_a", "c_p")]
            d = [data[k] for k in ("d_f", "d_a", "d_p", "d_fc", "d_ac", "d_pc")]
        except KeyError as exc:
            raise InputError(f"{path}: missing coefficient {exc}") from exc
        w = cls(c, d, P=int(data.get("training_rows", 0)),
                residual_br=float(data.get("residual_br", math.nan)),
                residual_hr=float(data.get("residual_hr", math.nan)),
                config_digest=data.get("config_digest"))
        if config_digest and w.config_digest and w.config_digest != config_digest:
            warnings.warn(f"{path}: weights were fitted under a different radar config",
                          stacklevel=2)
        return w


def _solve(A: np.ndarray, y: np.ndarray, name: str, columns) -> tuple[np.ndarray, float]:
    label = f"{name} ({', '.join(columns)})"
    rows, cols = A.shape
    if rows < cols:
        raise SingularCalibrationError(
            f"calibration matrix {label} has {rows} rows, needs >= {cols}")
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] == 0 or (s[0] / s[-1]) ** 2 >= MAX_CONDITION:
        raise SingularCalibrationError(
            f"calibration matrix {label} is rank deficient or ill-conditioned")
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, float(np.linalg.norm(A @ coef - y))


def fit(cal: CalibrationSet, config_digest: str | None = None) -> FusionWeights:
    c, rb = _solve(cal.B, cal.b, "B", BR_FIELDS)
    d, rh = _solve(cal.H, cal.h, "H", HR_FIELDS)
    return FusionWeights(c, d, P=cal.P, residual_br=rb, residual_hr=rh,
                         config_digest=config_digest)


def apply(w: FusionWeights, e: VitalEstimate) -> tuple[float, float]:
    """Fused (br, hr) per minute."""
    for coefs, names in ((w.c, BR_FIELDS), (w.d, HR_FIELDS)):
        bad = [n for n, k in zip(names, coefs)
               if k != 0 and (e.is_flagged(n) or not math.isfinite(getattr(e, n)))]
        if bad:
            raise FusionInputError(f"flagged estimates with nonzero weight: {', '.join(bad)}")
    br = float(np.dot(w.c, np.nan_to_num(e.br_vector()) * (w.c != 0)))
    hr = float(np.dot(w.d, np.nan_to_num(e.hr_vector()) * (w.d != 0)))
    return br, hr


def mape(estimate, truth) -> float:
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    return float(np.mean(np.abs(estimate - truth) / truth) * 100.0)


@dataclass
class CrossValidation:
    br_fold_errors: list[float] = field(default_factory=list)
    hr_fold_errors: list[float] = field(default_factory=list)

    @property
    def br_error(self) -> float:
        return float(np.mean(self.br_fold_errors))

    @property
    def hr_error(self) -> float:
        return float(np.mean(self.hr_fold_errors))


def cross_validate(cal: CalibrationSet, folds: int = 5) -> CrossValidation:
    """k-fold (contiguous folds) mean absolute percentage error of the fused rates."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if folds < cal.P and cal.P < 2 * folds:
        raise ValueError(f"need at least {2 * folds} rows for {folds} folds")
    if folds > cal.P:
        raise ValueError(f"{folds} folds but only {cal.P} rows")
    out = CrossValidation()
    for test in np.array_split(np.arange(cal.P), folds):
        train = np.setdiff1d(np.arange(cal.P), test)
        w = fit(cal.subset(train))
        out.br_fold_errors.append(mape(cal.B[test] @ w.c, cal.b[test]))
        out.hr_fold_errors.append(mape(cal.H[test] @ w.d, cal.h[test]))
    return out


def single_estimator_errors(cal: CalibrationSet) -> dict[str, float]:
    """Mean absolute percentage error of each raw estimator column."""
    out = {n: mape(cal.B[:, i], cal.b) for i, n in enumerate(BR_FIELDS)}
    out.update({n: mape(cal.H[:, i], cal.h) for i, n in enumerate(HR_FIELDS)})
    return out
