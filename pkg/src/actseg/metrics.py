"""Evaluation suite: frame accuracy, segmental edit score, segmental F1 at
IoU thresholds, boundary-level F1, and optimal label matching for
unsupervised outputs.

Segmental F1 counts a predicted segment as a true positive when it can be
assigned one-to-one to an unconsumed ground-truth segment of the same class
with IoU at or above the threshold; the assignment maximises the number of
matches, which also makes F1 non-increasing in the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import BoundarySet, LabelSequence, Segment, boundaries_of, to_timeline

DEFAULT_THRESHOLDS = (0.10, 0.25, 0.50)


@dataclass(frozen=True)
class EvalOptions:
    """Scoring knobs: IoU thresholds for segmental F1, the frame tolerance
    for boundary F1, and class ids excluded from accuracy/edit/F1 (for
    background-style classes)."""

    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    boundary_tolerance: int = 5
    ignore: frozenset[int] = frozenset()

    def __post_init__(self):
        if any(not 0.0 < t < 1.0 for t in self.thresholds):
            raise ValueError(f"thresholds must lie in (0, 1), got {self.thresholds}")
        if self.boundary_tolerance < 0:
            raise ValueError(f"boundary_tolerance must be >= 0, got {self.boundary_tolerance}")


@dataclass(frozen=True)
class EvalResult:
    acc: float
    edit: float
    f1: Mapping[float, float]  # IoU threshold -> percentage
    boundary_f1: float

    def field_values(self) -> dict[str, float]:
        """The six report fields in their canonical order."""
        out = {"acc": float(self.acc), "edit": float(self.edit)}
        for thr, value in self.f1.items():
            out[f"f1_{int(round(thr * 100))}"] = float(value)
        out["boundary_f1"] = float(self.boundary_f1)
        return out


def frame_accuracy(pred: LabelSequence, gt: LabelSequence) -> float:
    """Percentage of frames whose class matches the ground truth."""
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: pred {len(pred)} vs gt {len(gt)}")
    if len(gt) == 0:
        raise ValueError("empty sequence")
    return 100.0 * float(np.count_nonzero(pred.labels == gt.labels)) / len(gt)


def _levenshtein(a: Sequence[int], b: Sequence[int]) -> int:
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def _run_string(labels: LabelSequence, ignore: frozenset[int]) -> list[int]:
    runs = [seg.label for seg in to_timeline(labels) if seg.label not in ignore]
    # dropping ignored runs can leave equal neighbours; re-collapse them
    out: list[int] = []
    for r in runs:
        if not out or out[-1] != r:
            out.append(r)
    return out


def edit_score(pred: LabelSequence, gt: LabelSequence,
               ignore: frozenset[int] = frozenset()) -> float:
    """Segmental edit score: 100 * (1 - normalised Levenshtein distance
    between the ordered segment-class strings)."""
    pred_runs = _run_string(pred, ignore)
    gt_runs = _run_string(gt, ignore)
    if not pred_runs and not gt_runs:
        return 100.0
    longest = max(len(pred_runs), len(gt_runs))
    distance = _levenshtein(pred_runs, gt_runs)
    return 100.0 * max(0.0, 1.0 - distance / longest)


def _iou(a: Segment, b: Segment) -> float:
    inter = max(0, min(a.end, b.end) - max(a.start, b.start))
    union = (a.end - a.start) + (b.end - b.start) - inter
    return inter / union


def _segments(labels: LabelSequence, ignore: frozenset[int]) -> list[Segment]:
    return [seg for seg in to_timeline(labels) if seg.label not in ignore]


def segment_match_counts(pred: LabelSequence, gt: LabelSequence, threshold: float,
                         ignore: frozenset[int] = frozenset()) -> tuple[int, int, int]:
    """(TP, FP, FN) under one-to-one class-constrained segment matching.

    The assignment maximises the number of (same class, IoU >= threshold)
    pairs, with each ground-truth segment consumed at most once.
    """
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: pred {len(pred)} vs gt {len(gt)}")
    pred_segs = _segments(pred, ignore)
    gt_segs = _segments(gt, ignore)
    if not pred_segs or not gt_segs:
        return 0, len(pred_segs), len(gt_segs)
    feasible = np.zeros((len(pred_segs), len(gt_segs)))
    for i, ps in enumerate(pred_segs):
        for j, gs in enumerate(gt_segs):
            if ps.label == gs.label and _iou(ps, gs) >= threshold:
                feasible[i, j] = 1.0
    tp = 0
    if feasible.any():
        rows, cols = linear_sum_assignment(feasible, maximize=True)
        tp = int(feasible[rows, cols].sum())
    return tp, len(pred_segs) - tp, len(gt_segs) - tp


def _f1_from_counts(tp: int, fp: int, fn: int) -> float:
    if tp == 0 and fp == 0 and fn == 0:
        return 100.0
    denom = 2 * tp + fp + fn
    return float(100.0 * 2 * tp / denom) if denom else 0.0


def f1_at(pred: LabelSequence, gt: LabelSequence, iou_threshold: float,
          ignore: frozenset[int] = frozenset()) -> float:
    """Segmental F1 at one IoU threshold, as a percentage."""
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must lie in (0, 1), got {iou_threshold}")
    return _f1_from_counts(*segment_match_counts(pred, gt, iou_threshold, ignore))


def boundary_match_counts(pred_bounds: BoundarySet, gt_bounds: BoundarySet,
                          tolerance: int) -> tuple[int, int, int]:
    """(TP, FP, FN) for one-to-one boundary matching within a frame tolerance.

    Predictions take, in order, the nearest still-unmatched ground-truth
    boundary within +-tolerance (ties go to the earlier one).
    """
    if tolerance < 0:
        raise ValueError(f"tolerance must be >= 0, got {tolerance}")
    available = list(gt_bounds.indices)
    tp = 0
    for p in pred_bounds:
        best = None
        for g in available:
            if abs(g - p) <= tolerance and (best is None or abs(g - p) < abs(best - p)):
                best = g
        if best is not None:
            available.remove(best)
            tp += 1
    return tp, len(pred_bounds) - tp, len(gt_bounds) - tp


def boundary_f1(pred_bounds: BoundarySet, gt_bounds: BoundarySet, tolerance: int) -> float:
    """Boundary-level F1 at a frame tolerance, as a percentage."""
    return _f1_from_counts(*boundary_match_counts(pred_bounds, gt_bounds, tolerance))


def hungarian_label_match(pred: LabelSequence, gt: LabelSequence) -> LabelSequence:
    """Relabel arbitrary prediction ids by optimal one-to-one assignment to
    ground-truth classes, maximising total frame overlap.

    Prediction ids left without a partner map to a reserved extra class
    (gt.class_count), so the result never collides with a real class.
    """
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: pred {len(pred)} vs gt {len(gt)}")
    overlap = np.zeros((pred.class_count, gt.class_count))
    np.add.at(overlap, (pred.labels, gt.labels), 1.0)
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    mapping = np.full(pred.class_count, gt.class_count, dtype=np.int64)
    mapping[rows] = cols
    return LabelSequence(mapping[pred.labels], gt.class_count + 1)


def greedy_label_match(pred: LabelSequence, gt: LabelSequence) -> LabelSequence:
    """Relabel each prediction id independently by its best-overlap class.

    Many-to-one variant of hungarian_label_match, kept for protocol
    comparisons.
    """
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: pred {len(pred)} vs gt {len(gt)}")
    overlap = np.zeros((pred.class_count, gt.class_count))
    np.add.at(overlap, (pred.labels, gt.labels), 1.0)
    mapping = overlap.argmax(axis=1).astype(np.int64)
    return LabelSequence(mapping[pred.labels], gt.class_count + 1)


def evaluate(pred: LabelSequence, gt: LabelSequence,
             opts: EvalOptions | None = None) -> EvalResult:
    """Score one prediction against its ground truth."""
    opts = opts or EvalOptions()
    acc = _masked_accuracy(pred, gt, opts.ignore)
    edit = edit_score(pred, gt, opts.ignore)
    f1 = {thr: f1_at(pred, gt, thr, opts.ignore) for thr in opts.thresholds}
    bf1 = boundary_f1(boundaries_of(pred), boundaries_of(gt), opts.boundary_tolerance)
    return EvalResult(acc=acc, edit=edit, f1=f1, boundary_f1=bf1)


def _masked_accuracy(pred: LabelSequence, gt: LabelSequence,
                     ignore: frozenset[int]) -> float:
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: pred {len(pred)} vs gt {len(gt)}")
    keep = ~np.isin(gt.labels, list(ignore)) if ignore else np.ones(len(gt), dtype=bool)
    kept = int(keep.sum())
    if kept == 0:
        return 100.0
    return 100.0 * float(np.count_nonzero(pred.labels[keep] == gt.labels[keep])) / kept


def evaluate_batch(pairs: Sequence[tuple[LabelSequence, LabelSequence]],
                   opts: EvalOptions | None = None) -> EvalResult:
    """Aggregate scores over a list of (pred, gt) videos.

    Accuracy is frame-weighted over the corpus; edit is the mean of the
    per-video scores; segmental and boundary F1 pool their TP/FP/FN
    tallies before the final ratio.
    """
    opts = opts or EvalOptions()
    if not pairs:
        raise ValueError("nothing to evaluate")
    correct = 0
    frames = 0
    edits = []
    seg_counts = {thr: np.zeros(3, dtype=np.int64) for thr in opts.thresholds}
    bound_counts = np.zeros(3, dtype=np.int64)
    for pred, gt in pairs:
        keep = (~np.isin(gt.labels, list(opts.ignore)) if opts.ignore
                else np.ones(len(gt), dtype=bool))
        if len(pred) != len(gt):
            raise ValueError(f"length mismatch: pred {len(pred)} vs gt {len(gt)}")
        correct += int(np.count_nonzero((pred.labels == gt.labels) & keep))
        frames += int(keep.sum())
        edits.append(edit_score(pred, gt, opts.ignore))
        for thr in opts.thresholds:
            seg_counts[thr] += segment_match_counts(pred, gt, thr, opts.ignore)
        bound_counts += boundary_match_counts(boundaries_of(pred), boundaries_of(gt),
                                              opts.boundary_tolerance)
    acc = 100.0 * correct / frames if frames else 100.0
    f1 = {thr: _f1_from_counts(*seg_counts[thr]) for thr in opts.thresholds}
    return EvalResult(acc=acc, edit=float(np.mean(edits)), f1=f1,
                      boundary_f1=_f1_from_counts(*bound_counts))


def mean_result(results: Sequence[EvalResult]) -> EvalResult:
    """Plain mean of already-aggregated results (e.g. across splits)."""
    if not results:
        raise ValueError("nothing to evaluate")
    thresholds = list(results[0].f1.keys())
    return EvalResult(
        acc=float(np.mean([r.acc for r in results])),
        edit=float(np.mean([r.edit for r in results])),
        f1={t: float(np.mean([r.f1[t] for r in results])) for t in thresholds},
        boundary_f1=float(np.mean([r.boundary_f1 for r in results])),
    )
