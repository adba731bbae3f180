"""Shared score container used by every detector in the package."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ScoreVector:
    """Per-point anomaly scores plus provenance.

    Orientation is uniform across the package: higher means more anomalous,
    whatever the native convention of the underlying method.
    """

    scores: np.ndarray
    method: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(self.scores, dtype=float)
        if arr.ndim != 1:
            raise ValueError("scores must be a one-dimensional vector")
        if arr.size == 0:
            raise ValueError("scores must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("scores must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)

    def __len__(self) -> int:
        return int(self.scores.shape[0])


def as_score_array(scores) -> np.ndarray:
    """Accept a ScoreVector or any array-like and return a float vector."""
    if isinstance(scores, ScoreVector):
        return scores.scores
    arr = np.asarray(scores, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional score vector")
    return arr
