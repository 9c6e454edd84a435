"""Deterministic synthetic videos: piecewise-constant features with known boundaries.

Each segment gets its own mean vector (optionally with i.i.d. Gaussian noise
on top), so every boundary is recoverable by construction. Used as the
verifiable ground truth for the correction and detection passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoundarySet, FeatureSequence, LabelSequence, boundaries_of, from_boundaries, run_classes, to_timeline

_MAX_MEAN_DRAWS = 10_000


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic video.

    Segment lengths are either explicit or sampled uniformly from
    length_range for num_segments segments. Means are either explicit
    per-segment D-vectors or sampled with a minimum pairwise separation.
    """

    dim: int
    segment_lengths: tuple[int, ...] | None = None
    num_segments: int | None = None
    length_range: tuple[int, int] | None = None
    means: tuple[tuple[float, ...], ...] | None = None
    mean_separation: float = 1.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.segment_lengths is not None:
            lengths = tuple(int(x) for x in self.segment_lengths)
            if not lengths or any(x < 1 for x in lengths):
                raise ValueError(f"segment lengths must be positive, got {lengths}")
            object.__setattr__(self, "segment_lengths", lengths)
        elif self.num_segments is None or self.length_range is None:
            raise ValueError("need explicit segment_lengths or num_segments + length_range")
        else:
            lo, hi = self.length_range
            if self.num_segments < 1 or lo < 1 or hi < lo:
                raise ValueError(f"infeasible spec: {self.num_segments} segments "
                                 f"with length_range {self.length_range}")
        if self.means is not None:
            means = tuple(tuple(float(v) for v in m) for m in self.means)
            if any(len(m) != self.dim for m in means):
                raise ValueError("every explicit mean must have length dim")
            object.__setattr__(self, "means", means)
        if self.mean_separation <= 0:
            raise ValueError(f"mean_separation must be > 0, got {self.mean_separation}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")

    @property
    def segments(self) -> int:
        if self.segment_lengths is not None:
            return len(self.segment_lengths)
        return int(self.num_segments)


def _sample_means(rng: np.random.Generator, count: int, dim: int,
                  separation: float) -> np.ndarray:
    """Means drawn at pairwise distance >= separation (rejection sampling)."""
    chosen: list[np.ndarray] = []
    for _ in range(_MAX_MEAN_DRAWS):
        cand = rng.normal(0.0, separation, size=dim)
        if all(np.linalg.norm(cand - m) >= separation for m in chosen):
            chosen.append(cand)
            if len(chosen) == count:
                return np.stack(chosen)
    raise ValueError(f"infeasible spec: could not place {count} means at "
                     f"separation {separation} in {dim} dims")


def generate(spec: SynthSpec) -> tuple[FeatureSequence, LabelSequence, BoundarySet]:
    """Build one video; bit-identical for identical specs."""
    rng = np.random.default_rng(spec.seed)
    if spec.segment_lengths is not None:
        lengths = np.asarray(spec.segment_lengths, dtype=np.int64)
    else:
        lo, hi = spec.length_range
        lengths = rng.integers(lo, hi + 1, size=spec.num_segments)
    count = lengths.size
    if spec.means is not None:
        if len(spec.means) != count:
            raise ValueError(f"got {len(spec.means)} means for {count} segments")
        means = np.asarray(spec.means, dtype=np.float64)
    else:
        means = _sample_means(rng, count, spec.dim, spec.mean_separation)

    total = int(lengths.sum())
    labels = np.repeat(np.arange(count, dtype=np.int64), lengths)
    values = means[labels]
    if spec.noise_sigma > 0:
        values = values + rng.normal(0.0, spec.noise_sigma, size=values.shape)
    bounds = BoundarySet(tuple(int(x) for x in np.cumsum(lengths)[:-1]))
    return FeatureSequence(values), LabelSequence(labels, count), bounds


def perturb_boundaries(labels: LabelSequence, max_shift: int, seed: int) -> LabelSequence:
    """Move every boundary by a uniform integer in [-max_shift, max_shift].

    Segment order and classes are preserved. Requires max_shift to be less
    than half the minimum segment length so segments cannot merge.
    """
    if max_shift < 0:
        raise ValueError(f"max_shift must be >= 0, got {max_shift}")
    timeline = to_timeline(labels)
    min_len = min(seg.end - seg.start for seg in timeline)
    if max_shift > 0 and 2 * max_shift >= min_len:
        raise ValueError(f"max_shift {max_shift} must be < half the minimum "
                         f"segment length {min_len}")
    bounds = boundaries_of(labels)
    if not bounds or max_shift == 0:
        return LabelSequence(labels.labels.copy(), labels.class_count)
    rng = np.random.default_rng(seed)
    shifts = rng.integers(-max_shift, max_shift + 1, size=len(bounds))
    moved = [int(b + s) for b, s in zip(bounds, shifts)]
    edges = [0, *moved, len(labels)]
    if any(b >= a for a, b in zip(edges[1:], edges[:-1])):
        raise ValueError("shift would merge segments")
    return from_boundaries(BoundarySet(tuple(moved)), run_classes(labels),
                           len(labels), labels.class_count)
