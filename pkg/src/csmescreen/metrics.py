"""Confusion counts, ROC construction, AUC, operating points and selection summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _binary(v, name: str) -> np.ndarray:
    a = np.asarray(v)
    if a.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1")
    return a.astype(bool)


def confusion(truth: Sequence[int], predicted: Sequence[int]) -> ConfusionMatrix:
    t = _binary(truth, "truth")
    p = _binary(predicted, "predicted")
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.size} truth vs {p.size} predicted")
    if t.size == 0:
        raise ValueError("empty input")
    return ConfusionMatrix(
        tp=int(np.sum(t & p)),
        fp=int(np.sum(~t & p)),
        tn=int(np.sum(~t & ~p)),
        fn=int(np.sum(t & ~p)),
    )


def summary(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """(sensitivity, specificity, overall accuracy)."""
    if cm.tp + cm.fn == 0 or cm.tn + cm.fp == 0:
        raise ValueError("both classes must be present in the ground truth")
    return cm.tp / (cm.tp + cm.fn), cm.tn / (cm.tn + cm.fp), (cm.tp + cm.tn) / cm.total


# -- ROC -------------------------------------------------------------------------


@dataclass(frozen=True)
class RocCurve:
    """ROC points ordered by ascending FPR then TPR.

    ``n_pos``/``n_neg`` are the class totals the curve was built from; they are
    needed to turn a point back into an overall accuracy.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    n_pos: int | None = None
    n_neg: int | None = None

    def __post_init__(self):
        for name in ("fpr", "tpr", "thresholds"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not (self.fpr.shape == self.tpr.shape == self.thresholds.shape) or self.fpr.size < 2:
            raise ValueError("ROC curve needs at least two aligned points")

    def __len__(self) -> int:
        return self.fpr.size

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()))

    def to_text(self) -> str:
        lines = []
        if self.n_pos is not None and self.n_neg is not None:
            lines.append(f"#n_pos={self.n_pos},n_neg={self.n_neg}")
        lines.append("fpr,tpr,threshold")
        lines += [f"{f!r},{t!r},{th!r}" for f, t, th in self.points]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> RocCurve:
        n_pos = n_neg = None
        rows = []
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                meta = dict(kv.split("=", 1) for kv in line[1:].split(","))
                n_pos, n_neg = int(meta["n_pos"]), int(meta["n_neg"])
            elif line.startswith("fpr"):
                continue
            else:
                rows.append([float(c) for c in line.split(",")])
        a = np.array(rows, dtype=float).reshape(-1, 3)
        return cls(a[:, 0], a[:, 1], a[:, 2], n_pos, n_neg)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> RocCurve:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def roc_curve(truth: Sequence[int], scores: Sequence[float]) -> RocCurve:
    """Sweep every distinct score as a threshold (positive iff score > threshold).

    The highest score yields (0, 0); a final threshold of -inf yields (1, 1).
    """
    t = _binary(truth, "truth")
    s = np.asarray(scores, dtype=float)
    if s.shape != t.shape:
        raise ValueError(f"length mismatch: {t.size} labels vs {s.size} scores")
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes in the ground truth")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    t_sorted = t[order]
    tp_cum = np.cumsum(t_sorted)
    fp_cum = np.cumsum(~t_sorted)
    # last position of each run of equal scores: counts of rows with score >= that value
    last = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    thr = s_sorted[last]
    # predicted positive for threshold thr[i] = rows with score > thr[i] = rows before run i
    tp = np.r_[0, tp_cum[last[:-1]]]
    fp = np.r_[0, fp_cum[last[:-1]]]
    fpr = np.r_[fp / n_neg, 1.0]
    tpr = np.r_[tp / n_pos, 1.0]
    return RocCurve(fpr, tpr, np.r_[thr, -np.inf], n_pos, n_neg)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve."""
    f, t = curve.fpr, curve.tpr
    return float(np.sum(np.diff(f) * (t[1:] + t[:-1])) / 2.0)


def concordance_auc(truth: Sequence[int], scores: Sequence[float]) -> float:
    """Probability a positive outscores a negative, ties counted one half."""
    t = _binary(truth, "truth")
    s = np.asarray(scores, dtype=float)
    pos, neg = s[t], s[~t]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("concordance needs both classes")
    diff = pos[:, None] - neg[None, :]
    return float((np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / (pos.size * neg.size))


# -- operating points ------------------------------------------------------------


@dataclass(frozen=True)
class OperatingPoint:
    threshold: float
    se: float
    sp: float
    accuracy: float
    fpr: float
    tpr: float


def _point(curve: RocCurve, i: int) -> OperatingPoint:
    tpr = float(curve.tpr[i])
    fpr = float(curve.fpr[i])
    if curve.n_pos is not None and curve.n_neg is not None:
        acc = (tpr * curve.n_pos + (1.0 - fpr) * curve.n_neg) / (curve.n_pos + curve.n_neg)
    else:
        acc = math.nan
    return OperatingPoint(float(curve.thresholds[i]), tpr, 1.0 - fpr, acc, fpr, tpr)


def summary_at(curve: RocCurve, i: int) -> OperatingPoint:
    """Operating point for curve index ``i``; accuracy needs the curve's class totals."""
    return _point(curve, i)


def operating_point_a(curve: RocCurve) -> OperatingPoint:
    """Maximum Youden index (TPR - FPR); ties to higher TPR, then lower threshold."""
    j = curve.tpr - curve.fpr
    order = np.lexsort((curve.thresholds, -curve.tpr, -j))
    return _point(curve, int(order[0]))


def operating_point_b(curve: RocCurve, min_se: float = 0.95) -> OperatingPoint:
    """Lowest-FPR point with TPR >= ``min_se``; ties to higher TPR, then lower threshold."""
    if not 0.0 <= min_se <= 1.0:
        raise ValueError(f"min_se must lie in [0, 1], got {min_se}")
    ok = np.flatnonzero(curve.tpr >= min_se)
    if ok.size == 0:
        raise ValueError(f"no ROC point reaches sensitivity {min_se}")
    order = np.lexsort((curve.thresholds[ok], -curve.tpr[ok], curve.fpr[ok]))
    return _point(curve, int(ok[order[0]]))


def expected_cost(point: OperatingPoint, prevalence: float = 0.015, c_fn: float = 1.0, c_fp: float = 1.0) -> float:
    """Per-person misdiagnosis cost at a given prevalence and unit costs."""
    if not 0.0 <= prevalence <= 1.0:
        raise ValueError("prevalence must lie in [0, 1]")
    return c_fn * prevalence * (1.0 - point.se) + c_fp * (1.0 - prevalence) * (1.0 - point.sp)


# -- selection summaries ---------------------------------------------------------


def improvement_pi(j_prime: float, j_star_mean: float) -> float:
    """Relative criterion improvement of the selected subsets over the full set, in %."""
    if not j_prime > 0:
        raise ValueError(f"full-set criterion must be positive, got {j_prime}")
    return (j_prime - j_star_mean) / j_prime * 100.0


def reduction_xi(n: int, xi_avg: float) -> float:
    """Relative cardinality reduction, in %."""
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    if not 0.0 <= xi_avg <= n:
        raise ValueError(f"mean cardinality {xi_avg} outside [0, {n}]")
    return (n - xi_avg) / n * 100.0
