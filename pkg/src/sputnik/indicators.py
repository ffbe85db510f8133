"""Front-quality indicators: exact 2-D hypervolume, normalization, and the
generations-to-threshold convergence measure."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import UsageError

DEFAULT_REFERENCE = 1.1


@dataclass
class ObjectiveBounds:
    """Per-objective (lower, upper) box.

    ``clamped`` counts how many coordinates ``normalize_front`` had to clip
    into the box.
    """

    lower: np.ndarray
    upper: np.ndarray
    clamped: int = field(default=0, compare=False)

    def __post_init__(self):
        self.lower = np.array(self.lower, dtype=np.float64)
        self.upper = np.array(self.upper, dtype=np.float64)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise UsageError("lower and upper bounds must be 1-D and of equal length")
        if np.any(self.upper < self.lower):
            raise UsageError(f"upper bound below lower bound: {self.lower} > {self.upper}")

    @classmethod
    def from_points(cls, points) -> "ObjectiveBounds":
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return cls(pts.min(axis=0), pts.max(axis=0))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "ObjectiveBounds":
        arr = np.asarray(list(pairs), dtype=np.float64)
        return cls(arr[:, 0], arr[:, 1])

    def widen(self, points) -> None:
        """Grow the box so it contains ``points``; never shrinks."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.size == 0:
            return
        np.minimum(self.lower, pts.min(axis=0), out=self.lower)
        np.maximum(self.upper, pts.max(axis=0), out=self.upper)

    def copy(self) -> "ObjectiveBounds":
        return ObjectiveBounds(self.lower.copy(), self.upper.copy())

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower


def normalize_front(front, bounds: ObjectiveBounds) -> np.ndarray:
    """Min-max scale ``front`` into the unit box defined by ``bounds``.

    Points outside the box are clamped and counted in ``bounds.clamped``.
    Zero-width objectives map to 0.
    """
    pts = np.atleast_2d(np.asarray(front, dtype=np.float64))
    if pts.size == 0:
        return pts.reshape(0, bounds.lower.size)
    span = bounds.span
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (pts - bounds.lower) / safe, 0.0)
    outside = (scaled < 0.0) | (scaled > 1.0)
    if outside.any():
        bounds.clamped += int(outside.sum())
        scaled = np.clip(scaled, 0.0, 1.0)
    return scaled


def reference_point(n_objectives: int = 2, offset: float = DEFAULT_REFERENCE) -> np.ndarray:
    return np.full(n_objectives, offset, dtype=np.float64)


def hypervolume_2d(front, ref) -> float:
    """Exact area dominated by a two-objective front, bounded by ``ref``.

    Dominated members are harmless; they add no area. Raises ``UsageError``
    for anything other than two objectives, or when a point fails to
    dominate the reference point.
    """
    pts = np.asarray(front, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if pts.size == 0:
        return 0.0
    pts = np.atleast_2d(pts)
    if pts.shape[1] != 2 or ref.shape != (2,):
        raise UsageError(
            f"exact hypervolume is implemented for 2 objectives only, got {pts.shape[1]}"
        )
    weak = np.all(pts <= ref, axis=1) & np.any(pts < ref, axis=1)
    if not weak.all():
        bad = pts[np.argmin(weak)]
        raise UsageError(f"point {tuple(bad.tolist())} does not dominate reference {tuple(ref.tolist())}")
    return float(kernels.hypervolume_2d(pts, ref))


def normalized_hypervolume(front, bounds: ObjectiveBounds, offset: float = DEFAULT_REFERENCE) -> float:
    """Hypervolume of ``front`` after normalization, reference at ``offset`` per axis."""
    scaled = normalize_front(front, bounds)
    return hypervolume_2d(scaled, reference_point(scaled.shape[1], offset))


def generations_to_threshold(hypervolumes, threshold: float) -> int | None:
    """Index of the first generation whose hypervolume reaches ``threshold``.

    Accepts a sequence of hypervolumes or anything with a ``hypervolumes``
    attribute (such as a run trace). Returns ``None`` when never reached.
    """
    series = getattr(hypervolumes, "hypervolumes", hypervolumes)
    for i, hv in enumerate(series):
        if hv >= threshold:
            return i
    return None
