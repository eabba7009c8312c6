"""Augmentative explanation scoring.

The CO (confidence optimization) score measures how much combining an
input with its heatmap shifts the model's raw outputs toward the
groundtruth class:

    co = kappa . [f(g(x, h)) - f(x)]

with g either elementwise sum or product, and kappa the score constants:
+1 at the groundtruth class and -1/(C-1) elsewhere.  Since kappa sums to
zero, any uniform shift of the raw outputs leaves the score unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attribution import Heatmap, attribute_at_predicted
from .autodiff import ShapeError
from .models import predict

VARIANTS = ("sum", "mul")


@dataclass(frozen=True)
class ScoreConstants:
    """Score weight vector for one groundtruth class.

    Holds the integer core ((C-1) at the groundtruth, -1 elsewhere) and
    divides by C-1 on application, so the zero-sum property is exact in
    floating point for every class count.
    """
    num_classes: int
    groundtruth: int

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("need at least two classes")
        if not 0 <= self.groundtruth < self.num_classes:
            raise ValueError(
                f"groundtruth {self.groundtruth} out of range "
                f"for {self.num_classes} classes")

    def int_weights(self) -> np.ndarray:
        w = np.full(self.num_classes, -1.0)
        w[self.groundtruth] = self.num_classes - 1.0
        return w

    def as_array(self) -> np.ndarray:
        return self.int_weights() / (self.num_classes - 1.0)

    def apply(self, diff: np.ndarray) -> float:
        diff = np.asarray(diff, dtype=np.float64)
        if diff.shape != (self.num_classes,):
            raise ShapeError(
                f"score diff shape {diff.shape} != ({self.num_classes},)")
        # kappa sums to zero, so kappa . diff == kappa . (diff - diff[truth]);
        # centering first makes uniform output shifts cancel exactly
        centered = diff - diff[self.groundtruth]
        return float(self.int_weights() @ centered) / (self.num_classes - 1.0)


@dataclass(frozen=True)
class ScoreRecord:
    sample_id: str
    method: str
    variant: str
    co_score: float
    predicted: int
    groundtruth: int

    @property
    def correct(self) -> bool:
        return self.predicted == self.groundtruth


@dataclass(frozen=True)
class GroupSummary:
    count: int
    min: float
    q1: float
    median: float
    q3: float
    max: float


@dataclass(frozen=True)
class GapStats:
    correct: GroupSummary | None
    wrong: GroupSummary | None
    separation: float | None      # min over correct - max over wrong
    auroc: float | None           # co-score as a ranking of correctness


def co_score(model, x, h, groundtruth: int, variant: str = "sum") -> float:
    """CO score of heatmap ``h`` for one sample against its groundtruth."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected {VARIANTS}")
    x = np.asarray(x, dtype=np.float64)
    values = h.values if isinstance(h, Heatmap) else np.asarray(h,
                                                                dtype=np.float64)
    if x.shape != tuple(model.input_shape):
        raise ShapeError(f"input shape {x.shape} != model input "
                         f"{model.input_shape}")
    if values.shape != x.shape:
        raise ShapeError(f"heatmap shape {values.shape} != input shape {x.shape}")
    combined = x + values if variant == "sum" else x * values
    constants = ScoreConstants(model.num_classes, int(groundtruth))
    diff = model.scores(combined[None])[0] - model.scores(x[None])[0]
    return constants.apply(diff)


def ax_sweep(model, split, methods, variants=("sum", "mul"), *,
             attribute_kwargs: dict | None = None
             ) -> tuple[list[ScoreRecord], list[tuple[str, str]]]:
    """Score every (sample, method, variant) combination of a split.

    Heatmaps target the predicted class and enter the score normalized.
    Per-sample failures are collected, not fatal; returns (records, errors)
    with records sorted for deterministic export.
    """
    kwargs = attribute_kwargs or {}
    records: list[ScoreRecord] = []
    errors: list[tuple[str, str]] = []
    order = np.argsort(np.asarray(split.ids))
    for i in order:
        sid = split.ids[i]
        x = split.x[i]
        truth = int(split.y[i])
        for method in methods:
            try:
                pred, _ = predict(model, x)
                heat = attribute_at_predicted(model, x, method, **kwargs)
                for variant in variants:
                    score = co_score(model, x, heat, truth, variant)
                    records.append(ScoreRecord(sid, method, variant, score,
                                               pred, truth))
            except Exception as exc:  # noqa: BLE001 - sweep must survive samples
                errors.append((sid, f"{method}: {exc}"))
    records.sort(key=lambda r: (r.sample_id, r.method, r.variant))
    return records, errors


def _summary(scores: np.ndarray) -> GroupSummary:
    q = np.quantile(scores, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return GroupSummary(len(scores), *map(float, q))


def _auroc(positive: np.ndarray, negative: np.ndarray) -> float:
    """Rank-based AUROC (ties get half credit via average ranks)."""
    scores = np.concatenate([positive, negative])
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i: j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    n_pos, n_neg = len(positive), len(negative)
    r_pos = ranks[:n_pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def gap_stats(records, method: str | None = None,
              variant: str | None = None) -> GapStats:
    """Distribution summary of CO scores split by prediction correctness.

    With only one group present the comparison fields stay ``None``.
    """
    selected = [r for r in records
                if (method is None or r.method == method)
                and (variant is None or r.variant == variant)]
    if not selected:
        raise ValueError("gap_stats: no records match the filter")
    correct = np.array([r.co_score for r in selected if r.correct])
    wrong = np.array([r.co_score for r in selected if not r.correct])
    summary_c = _summary(correct) if len(correct) else None
    summary_w = _summary(wrong) if len(wrong) else None
    if len(correct) and len(wrong):
        separation = float(correct.min() - wrong.max())
        auroc = _auroc(correct, wrong)
    else:
        separation = auroc = None
    return GapStats(summary_c, summary_w, separation, auroc)


# ---------------------------------------------------------------------------
# CSV interfaces

SCORES_HEADER = "sample_id,method,variant,co_score,pred,truth,correct"


def write_scores_csv(records, path) -> None:
    lines = [SCORES_HEADER]
    for r in records:
        flag = "true" if r.correct else "false"
        lines.append(f"{r.sample_id},{r.method},{r.variant},{r.co_score:.9g},"
                     f"{r.predicted},{r.groundtruth},{flag}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_scores_csv(path) -> list[ScoreRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != SCORES_HEADER:
        raise ValueError(f"{path} is not a scores CSV")
    records = []
    for line in lines[1:]:
        if not line.strip():
            continue
        sid, method, variant, score, pred, truth, _ = line.split(",")
        records.append(ScoreRecord(sid, method, variant, float(score),
                                   int(pred), int(truth)))
    return records


def write_histogram_csv(records, path, bins: int = 40) -> None:
    """Shared-bin histogram of CO scores for the correct and wrong groups."""
    if not records:
        raise ValueError("write_histogram_csv: no records")
    scores = np.array([r.co_score for r in records])
    lo, hi = float(scores.min()), float(scores.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    correct = np.array([r.co_score for r in records if r.correct])
    wrong = np.array([r.co_score for r in records if not r.correct])
    count_c, _ = np.histogram(correct, bins=edges)
    count_w, _ = np.histogram(wrong, bins=edges)
    lines = ["bin_lo,bin_hi,count_correct,count_wrong"]
    for i in range(bins):
        lines.append(f"{edges[i]:.9g},{edges[i + 1]:.9g},"
                     f"{count_c[i]},{count_w[i]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
