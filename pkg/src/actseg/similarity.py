"""Similarity and grouping kernels shared by the correction and detection passes.

Four primitives: cosine similarity, dynamic time warping, seeded k-means,
and the transition detector that locates the action change inside a binary
cluster labelling. All functions are pure and deterministic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np


class SimilarityUnit(Enum):
    """How a multi-frame block is presented to a similarity metric."""

    FLATTEN = "flatten"              # concatenate frames row-major into one vector
    MEANFRAME = "meanframe"          # average frames into a single D-vector
    SCALAR_SERIES = "scalar-series"  # treat a single frame's D values as a 1-D series


class Metric(Enum):
    COSINE = "cosine"
    DTW = "dtw"


@dataclass(frozen=True)
class ClusterAssignment:
    """Result of a k-means run, relabelled so labels[0] == 0."""

    labels: np.ndarray     # (n,) int cluster ids in [0, k)
    centroids: np.ndarray  # (k, D)
    inertia: float         # sum of squared distances to assigned centroids


def cosine(a, b) -> float:
    """Cosine similarity of two equal-length vectors, in [-1, 1].

    A zero-norm operand yields 0.0 with a RuntimeWarning instead of
    aborting: padded or silent frames must not kill a whole video.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size < 1 or a.shape != b.shape:
        raise ValueError(f"cosine needs equal-length non-empty vectors, got {a.size} vs {b.size}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        warnings.warn("zero-norm vector in cosine similarity, returning 0.0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def _as_sequence(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"expected a sequence of vectors, got ndim={arr.ndim}")
    return arr


def dtw(a, b) -> float:
    """Accumulated dynamic time warping cost between two vector sequences.

    Per-step cost is the Euclidean distance between elements, with the
    classic recurrence D(i,j) = cost(i,j) + min(D(i-1,j), D(i,j-1),
    D(i-1,j-1)). Unnormalised; 0 for identical sequences; symmetric.
    """
    a = _as_sequence(a)
    b = _as_sequence(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("dtw: empty sequence")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dtw: element dims differ ({a.shape[1]} vs {b.shape[1]})")
    cost = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    # Row-wise DP. Within a row the recurrence unrolls to a running minimum
    # over "enter column k from above, then move right", which vectorises:
    # D[i,j] = S[j] + cummin_k(min(prev[k], prev[k-1]) - S[k-1]).
    prev = np.cumsum(cost[0])
    inf = np.float64(np.inf)
    for i in range(1, cost.shape[0]):
        s = np.cumsum(cost[i])
        best_above = np.minimum(prev, np.concatenate(([inf], prev[:-1])))
        entry = best_above - np.concatenate(([0.0], s[:-1]))
        prev = s + np.minimum.accumulate(entry)
    return float(prev[-1])


def kmeans(points, k: int, seed: int, max_iter: int = 100, tol: float = 1e-4,
           restarts: int = 1) -> ClusterAssignment:
    """Seeded Lloyd k-means with farthest-point initialisation.

    Deterministic for a given (points, k, seed). Cluster ids are renumbered
    by order of first appearance, so labels[0] is always 0. A single run by
    default; `restarts` > 1 keeps the assignment with the lowest inertia.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < k:
        raise ValueError(f"too few points: n={n} < k={k}")
    best = None
    for r in range(restarts):
        labels, centroids, inertia = _lloyd(pts, k, np.random.default_rng(seed + r),
                                            max_iter, tol)
        if best is None or inertia < best[2]:
            best = (labels, centroids, inertia)
    labels, centroids, inertia = best
    labels, centroids = _relabel_first_occurrence(labels, centroids, k)
    return ClusterAssignment(labels=labels, centroids=centroids, inertia=float(inertia))


def _lloyd(pts: np.ndarray, k: int, rng: np.random.Generator,
           max_iter: int, tol: float):
    n = pts.shape[0]
    centroids = np.empty((k, pts.shape[1]))
    centroids[0] = pts[rng.integers(n)]
    d2 = ((pts - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        centroids[j] = pts[int(np.argmax(d2))]
        d2 = np.minimum(d2, ((pts - centroids[j]) ** 2).sum(axis=1))

    labels = np.full(n, -1, dtype=np.int64)
    inertia = np.inf
    for _ in range(max_iter):
        dists = _sq_dists(pts, centroids)
        new_labels = np.argmin(dists, axis=1)
        new_inertia = float(np.take_along_axis(dists, new_labels[:, None], axis=1).sum())
        if np.array_equal(new_labels, labels):
            inertia = new_inertia
            break
        converged = abs(inertia - new_inertia) < tol
        labels, inertia = new_labels, new_inertia
        for j in range(k):
            members = pts[labels == j]
            if members.shape[0]:  # empty clusters keep their previous centroid
                centroids[j] = members.mean(axis=0)
        if converged:
            break
    dists = _sq_dists(pts, centroids)
    labels = np.argmin(dists, axis=1)
    inertia = float(np.take_along_axis(dists, labels[:, None], axis=1).sum())
    return labels, centroids, max(inertia, 0.0)


def _sq_dists(pts: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = ((pts ** 2).sum(axis=1)[:, None] + (centroids ** 2).sum(axis=1)[None, :]
          - 2.0 * pts @ centroids.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _relabel_first_occurrence(labels: np.ndarray, centroids: np.ndarray, k: int):
    mapping: dict[int, int] = {}
    for lab in labels:
        lab = int(lab)
        if lab not in mapping:
            mapping[lab] = len(mapping)
    for j in range(k):  # clusters that won no points keep their slots, in order
        if j not in mapping:
            mapping[j] = len(mapping)
    new_labels = np.array([mapping[int(l)] for l in labels], dtype=np.int64)
    new_centroids = np.empty_like(centroids)
    for old, new in mapping.items():
        new_centroids[new] = centroids[old]
    return new_labels, new_centroids


def transition_index(binary_labels) -> int | None:
    """Index of the first 1 in the longest zeros-then-ones run.

    Scans maximal runs matching the pattern 0+1+ and returns the position
    where the ones start in the longest such run (ties: earliest run).
    None when the sequence contains no 0 -> 1 step.
    """
    seq = np.asarray(binary_labels).ravel()
    if seq.size == 0:
        return None
    change = np.flatnonzero(seq[1:] != seq[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [seq.size]))
    best_len = 0
    best_idx = None
    for i in range(len(starts) - 1):
        if seq[starts[i]] == 0 and seq[starts[i + 1]] == 1:
            run_len = int(ends[i + 1] - starts[i])
            if run_len > best_len:
                best_len = run_len
                best_idx = int(starts[i + 1])
    return best_idx


def block_similarity(left, right, unit: SimilarityUnit, metric: Metric) -> float:
    """Similarity between two frame blocks under the chosen unit and metric.

    FLATTEN+COSINE compares the concatenated block vectors (blocks must be
    the same length); MEANFRAME+COSINE compares frame means; DTW runs over
    the blocks' frame sequences. SCALAR_SERIES is only legal for
    single-frame blocks and treats the frame's D values as a 1-D series.
    """
    lb = _as_sequence(left)
    rb = _as_sequence(right)
    if lb.shape[0] == 0 or rb.shape[0] == 0:
        raise ValueError("block_similarity: empty block")
    if lb.shape[1] != rb.shape[1]:
        raise ValueError(f"block dims differ ({lb.shape[1]} vs {rb.shape[1]})")
    if unit is SimilarityUnit.SCALAR_SERIES and (lb.shape[0] != 1 or rb.shape[0] != 1):
        raise ValueError("SCALAR_SERIES is only legal for single-frame blocks")

    if metric is Metric.COSINE:
        if unit is SimilarityUnit.FLATTEN:
            if lb.shape[0] != rb.shape[0]:
                raise ValueError("FLATTEN cosine needs equal block lengths, "
                                 f"got {lb.shape[0]} vs {rb.shape[0]}")
            return cosine(lb.ravel(), rb.ravel())
        if unit is SimilarityUnit.MEANFRAME:
            return cosine(lb.mean(axis=0), rb.mean(axis=0))
        return cosine(lb[0], rb[0])

    if unit is SimilarityUnit.SCALAR_SERIES:
        return dtw(lb[0][:, None], rb[0][:, None])
    if unit is SimilarityUnit.MEANFRAME:
        return dtw(lb.mean(axis=0, keepdims=True), rb.mean(axis=0, keepdims=True))
    return dtw(lb, rb)
