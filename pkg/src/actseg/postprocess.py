"""Frame-wise prediction voting and segment smoothing.

Voting fuses multiple frame-wise predictions per frame by majority, with a
trusted source breaking ties. Smoothing slides a pair of windows over a
prediction: the first window is rewritten to its majority class while the
second probes whether a new segment is about to start, so genuine
boundaries survive while outlier classes inside segments are removed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AUTO, LabelSequence, boundaries_of


@dataclass(frozen=True)
class SmoothConfig:
    """s_win is the window length in frames (or AUTO to derive it from the
    widest boundary gap); both windows advance by `stride` frames per step,
    defaulting to s_win (non-overlapping steps)."""

    s_win: int | str = AUTO
    stride: int | None = None

    def __post_init__(self):
        if isinstance(self.s_win, str):
            if self.s_win != AUTO:
                raise ValueError(f"s_win must be a positive int or {AUTO!r}, got {self.s_win!r}")
        elif self.s_win < 1:
            raise ValueError(f"s_win must be >= 1, got {self.s_win}")
        if self.stride is not None and self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")


@dataclass(frozen=True)
class PredictionSet:
    """Two or more equal-length predictions plus the index of the source
    trusted to break total disagreement (default: the last one)."""

    sources: tuple[LabelSequence, ...]
    trusted_index: int = -1

    def __post_init__(self):
        sources = tuple(self.sources)
        if len(sources) < 2:
            raise ValueError(f"need at least 2 prediction sources, got {len(sources)}")
        length = len(sources[0])
        classes = sources[0].class_count
        for i, s in enumerate(sources[1:], start=1):
            if len(s) != length:
                raise ValueError(f"prediction length mismatch: source {i} has "
                                 f"{len(s)} frames, source 0 has {length}")
            if s.class_count != classes:
                raise ValueError(f"class_count mismatch: source {i} has "
                                 f"{s.class_count}, source 0 has {classes}")
        trusted = self.trusted_index
        if trusted < 0:
            trusted += len(sources)
        if not 0 <= trusted < len(sources):
            raise ValueError(f"trusted_index {self.trusted_index} out of range")
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "trusted_index", trusted)


def vote(preds: PredictionSet) -> LabelSequence:
    """Frame-wise majority vote across prediction sources.

    A class with strictly more votes than every other wins outright. On a
    tied maximum the trusted source wins if its class is among the leaders
    (this also covers total disagreement, where every class has one vote);
    otherwise the leader voted by the lowest-indexed source wins.
    """
    stack = np.stack([s.labels for s in preds.sources])
    n, total = stack.shape
    trusted = stack[preds.trusted_index]
    classes = preds.sources[0].class_count
    out = np.empty(total, dtype=np.int64)
    for t in range(total):
        counts = np.bincount(stack[:, t], minlength=classes)
        best = counts.max()
        leaders = np.flatnonzero(counts == best)
        if leaders.size == 1:
            out[t] = leaders[0]
        elif counts[trusted[t]] == best:
            out[t] = trusted[t]
        else:
            for s in range(n):
                if counts[stack[s, t]] == best:
                    out[t] = stack[s, t]
                    break
    return LabelSequence(out, classes)


def sum_probability_vote(probabilities) -> LabelSequence:
    """Baseline fusion over (T, C) score matrices: argmax of the sum.

    Comparison baseline only; the product path is class-level voting.
    """
    mats = [np.asarray(p, dtype=np.float64) for p in probabilities]
    if len(mats) < 2:
        raise ValueError("need at least 2 probability matrices")
    if any(m.shape != mats[0].shape for m in mats):
        raise ValueError("probability matrices must share one shape")
    total = np.sum(mats, axis=0)
    return LabelSequence(np.argmax(total, axis=1), mats[0].shape[1])


def _majority(window: np.ndarray) -> int:
    counts = np.bincount(window)
    best = counts.max()
    for v in window:  # tie: earliest class in window order
        if counts[v] == best:
            return int(v)
    raise AssertionError("unreachable")


def auto_s_win(labels: LabelSequence) -> int:
    """Smoothing window from the widest boundary gap, divided by 10.

    The sequence start and end count as virtual boundaries, so a video
    with no predicted boundaries uses its full length. Clamped to >= 2.
    """
    edges = [0, *boundaries_of(labels).indices, len(labels)]
    max_gap = max(b - a for a, b in zip(edges, edges[1:]))
    return max(2, int(round(max_gap / 10)))


def smooth(labels: LabelSequence, cfg: SmoothConfig | None = None) -> LabelSequence:
    """Two-window outlier smoothing over a frame-wise prediction.

    W1 = [p, p + s_win) is rewritten; W2 = [p + s_win, p + 2 * s_win)
    only checks whether a new segment is coming. When both windows agree
    on the majority class, W1 collapses to it, sparing a leading run that
    continues the segment entering the window. When they disagree, W1
    collapses to its own majority but the trailing run of the upcoming
    class is preserved as the next segment's start. Frames after the last
    full W1 stay untouched.
    """
    cfg = cfg or SmoothConfig()
    if len(labels) == 0:
        raise ValueError("empty sequence")
    s_win = auto_s_win(labels) if cfg.s_win == AUTO else int(cfg.s_win)
    stride = cfg.stride if cfg.stride is not None else s_win
    out = labels.labels.copy()
    total = out.size
    p = 0
    while p + s_win <= total:
        w1 = out[p:p + s_win]
        w2 = out[p + s_win:p + 2 * s_win]
        m1 = _majority(w1)
        m2 = _majority(w2) if w2.size else m1
        if m1 == m2:
            keep = 0
            if p > 0:
                prev = out[p - 1]
                while keep < s_win and w1[keep] == prev:
                    keep += 1
            w1[keep:] = m1
        else:
            cut = s_win
            while cut > 0 and w1[cut - 1] == m2:
                cut -= 1
            w1[:cut] = m1
        p += stride
    return LabelSequence(out, labels.class_count)
