"""Boundary correction: shrink a feature window around each predicted boundary
using three similarity votes until the true transition frame is isolated.

Per boundary, a window of frames is cut into equal sub-segments. Cosine
similarity (lowest wins), DTW cost (highest wins), and a binary clustering
of the window each nominate the sub-segment where the action changes; the
window is narrowed to the span of the nominations and the process repeats.
A final binary clustering of the surviving frames pins the exact frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (AUTO, BoundarySet, CorrectionConfig, FeatureSequence,
                   LabelSequence, boundaries_of)
from .similarity import Metric, block_similarity, kmeans, transition_index


@dataclass(frozen=True)
class WindowState:
    """Half-open frame window under refinement, in segment_size steps."""

    start: int
    end: int
    segment_size: int


@dataclass(frozen=True)
class IterationProposals:
    """Sub-segment nominated by each method in one refinement step."""

    cosine: int
    dtw: int
    cluster: int | None


@dataclass(frozen=True)
class BoundaryRecord:
    original: int
    corrected: int
    iterations: int
    proposals: tuple[IterationProposals, ...]
    window: WindowState | None = None  # clamped extent the rewrite was confined to


@dataclass(frozen=True)
class CorrectionReport:
    records: tuple[BoundaryRecord, ...]

    def moved(self) -> int:
        return sum(1 for r in self.records if r.corrected != r.original)


def auto_window_params(bounds: BoundarySet) -> tuple[int, int]:
    """Derive (b_win, b_seg) from the spread of consecutive boundary gaps.

    b_win is the largest-to-smallest gap ratio, clamped to [4, 64] and
    rounded down to even; b_seg divides it by its smallest divisor > 1.
    Falls back to the fixed defaults (16, 4) with fewer than two
    boundaries. Experimental: the fixed defaults are usually better.
    """
    idx = bounds.indices
    if len(idx) < 2:
        return 16, 4
    gaps = np.diff(np.asarray(idx))
    ratio = int(round(float(gaps.max()) / float(gaps.min())))
    b_win = min(64, max(4, ratio))
    b_win -= b_win % 2
    divisor = next(d for d in range(2, b_win + 1) if b_win % d == 0)
    b_seg = max(2, b_win // divisor)
    while b_win % b_seg:
        b_seg -= 1
    return b_win, b_seg


def resolve_window_params(cfg: CorrectionConfig, bounds: BoundarySet) -> tuple[int, int]:
    """Fill in AUTO sides of (b_win, b_seg) for a given boundary set."""
    auto_win, auto_seg = (auto_window_params(bounds)
                          if cfg.b_win == AUTO or cfg.b_seg == AUTO else (0, 0))
    if cfg.b_win == AUTO and cfg.b_seg == AUTO:
        return auto_win, auto_seg
    if cfg.b_win == AUTO:
        b_seg = int(cfg.b_seg)
        b_win = max(2 * b_seg, auto_win - auto_win % b_seg)
        if b_win % 2:
            b_win += b_seg  # keep it even; b_seg must be odd here
        return b_win, b_seg
    if cfg.b_seg == AUTO:
        b_win = int(cfg.b_win)
        divisor = next(d for d in range(2, b_win + 1) if b_win % d == 0)
        b_seg = max(2, b_win // divisor)
        while b_win % b_seg:
            b_seg -= 1
        return b_win, b_seg
    return int(cfg.b_win), int(cfg.b_seg)


def _clamped_window(boundary: int, prev_b: int | None, next_b: int | None,
                    total: int, b_win: int, b_seg: int) -> WindowState | None:
    """Window around a boundary, kept inside the neighbour midpoints.

    Clamping to midpoints stops adjacent boundaries' windows from
    overlapping and swapping segment content. Returns None when the
    clamped extent is too narrow to refine or the boundary is not
    strictly inside it.
    """
    lo = 0 if prev_b is None else (prev_b + boundary) // 2
    hi = total if next_b is None else (boundary + next_b) // 2
    lo = max(lo, boundary - b_win // 2, 0)
    hi = min(hi, boundary + b_win // 2, total)
    width = ((hi - lo) // b_seg) * b_seg
    if width < 2 * b_seg:
        return None
    start = min(max(boundary - width // 2, lo), hi - width)
    end = start + width
    if not start < boundary < end:
        return None
    return WindowState(start, end, b_seg)


def _segment_majorities(cluster_labels: np.ndarray, b_seg: int) -> np.ndarray:
    count = cluster_labels.size // b_seg
    out = np.empty(count, dtype=np.int64)
    for j in range(count):
        out[j] = np.bincount(cluster_labels[j * b_seg:(j + 1) * b_seg]).argmax()
    return out


def _refine_window(values: np.ndarray, start: int, end: int, b_seg: int,
                   cfg: CorrectionConfig, seed: int):
    """Shrink [start, end) around the likeliest transition sub-segment.

    Stops when the window cannot be narrowed further (width <= 2 * b_seg
    with no progress) or after cfg.max_iterations. Nominations index the
    first sub-segment of the new action, matching transition_index.
    """
    history: list[IterationProposals] = []
    iterations = 0
    while end - start > b_seg and iterations < cfg.max_iterations:
        m = (end - start) // b_seg
        if m < 2:
            break
        segs = [values[start + j * b_seg: start + (j + 1) * b_seg] for j in range(m)]
        cos = [block_similarity(segs[j], segs[j + 1], cfg.cosine_unit, Metric.COSINE)
               for j in range(m - 1)]
        dtws = [block_similarity(segs[j], segs[j + 1], cfg.dtw_unit, Metric.DTW)
                for j in range(m - 1)]
        p_cos = int(np.argmin(cos)) + 1
        p_dtw = int(np.argmax(dtws)) + 1
        assignment = kmeans(values[start:end], 2, seed)
        p_clu = transition_index(_segment_majorities(assignment.labels, b_seg))
        history.append(IterationProposals(p_cos, p_dtw, p_clu))
        iterations += 1

        proposals = [p_cos, p_dtw] + ([p_clu] if p_clu is not None else [])
        lo, hi = min(proposals), max(proposals)
        new_start = start + max(lo - 1, 0) * b_seg
        new_end = start + (hi + 1) * b_seg
        if new_end - new_start < end - start:
            start, end = new_start, new_end
        elif end - start > 2 * b_seg:
            start, end = start + b_seg, end - b_seg
        else:
            break  # narrow enough for the final frame-level clustering
    return start, end, iterations, tuple(history)


def _correct_in_window(values: np.ndarray, boundary: int, window: WindowState,
                       cfg: CorrectionConfig, seed: int) -> BoundaryRecord:
    start, end, iterations, history = _refine_window(values, window.start, window.end,
                                                     window.segment_size, cfg, seed)
    corrected = boundary
    if end - start >= 2:
        assignment = kmeans(values[start:end], 2, seed)
        idx = transition_index(assignment.labels)
        if idx is not None:
            corrected = start + idx
    return BoundaryRecord(boundary, corrected, iterations, history, window)


def correct_boundary(feat: FeatureSequence, labels: LabelSequence, boundary: int,
                     cfg: CorrectionConfig | None = None, seed: int = 0) -> int:
    """Corrected frame index for one predicted boundary.

    The boundary must exist in the labels. Returns the input index
    unchanged when the window is degenerate or no transition is found.
    """
    cfg = cfg or CorrectionConfig()
    if len(labels) != feat.frames:
        raise ValueError(f"labels length {len(labels)} != feature frames {feat.frames}")
    bounds = boundaries_of(labels)
    boundary = int(boundary)
    if boundary not in bounds:
        raise ValueError(f"frame {boundary} is not a boundary of the label sequence")
    b_win, b_seg = resolve_window_params(cfg, bounds)
    idx = bounds.indices
    pos = idx.index(boundary)
    prev_b = idx[pos - 1] if pos > 0 else None
    next_b = idx[pos + 1] if pos + 1 < len(idx) else None
    window = _clamped_window(boundary, prev_b, next_b, feat.frames, b_win, b_seg)
    if window is None:
        return boundary
    return _correct_in_window(feat.values, boundary, window, cfg, seed).corrected


def correct_all(feat: FeatureSequence, labels: LabelSequence,
                cfg: CorrectionConfig | None = None,
                seed: int = 0) -> tuple[LabelSequence, CorrectionReport]:
    """Correct every boundary of a prediction, left to right.

    Each boundary's rewrite is confined to its midpoint-clamped window, so
    segment count, order and classes are preserved and frames outside the
    windows are untouched.
    """
    cfg = cfg or CorrectionConfig()
    if len(labels) != feat.frames:
        raise ValueError(f"labels length {len(labels)} != feature frames {feat.frames}")
    bounds = boundaries_of(labels)
    if not bounds:
        return LabelSequence(labels.labels.copy(), labels.class_count), CorrectionReport(())
    b_win, b_seg = resolve_window_params(cfg, bounds)
    original = labels.labels
    out = original.copy()
    records: list[BoundaryRecord] = []
    idx = bounds.indices
    for pos, boundary in enumerate(idx):
        prev_b = idx[pos - 1] if pos > 0 else None
        next_b = idx[pos + 1] if pos + 1 < len(idx) else None
        window = _clamped_window(boundary, prev_b, next_b, feat.frames, b_win, b_seg)
        if window is None:
            records.append(BoundaryRecord(boundary, boundary, 0, ()))
            continue
        record = _correct_in_window(feat.values, boundary, window, cfg, seed)
        records.append(record)
        ws, we = window.start, window.end
        corrected = record.corrected
        out[ws:min(corrected, we)] = original[boundary - 1]
        out[max(corrected, ws):we] = original[boundary]
    return LabelSequence(out, labels.class_count), CorrectionReport(tuple(records))
