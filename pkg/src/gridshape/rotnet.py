"""Classification-loss math for joint class and orientation assignment.

A shape observed from m orientations yields m probability matrices, one
per view descriptor, each of shape (m, n + 1): a row per candidate
orientation over n classes plus an extra "incorrect view" class.  For a
view assigned orientation o and true class c the per-view loss is

    C = -log y[o, c] - sum over rows j != o of log y[j, n + 1]

and the total loss sums C over the m views.  Minimizing the total over
the orientation variables is equivalent to maximizing the product of the
ratios y[o_i, c] / y[o_i, n + 1], which is what the assignment search
below does (in log space).  Classes and orientation indices are 1-based
throughout, matching the label conventions of the rest of the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "LOG_EPS",
    "ClassProbs",
    "OrientationAssignment",
    "onehot_ce",
    "rotnet_target",
    "rotnet_view_loss",
    "rotnet_total_loss",
    "best_assignment",
    "predict_class",
]

# Probabilities are clamped here before any log, keeping losses finite on
# hard-zero inputs.
LOG_EPS = 1e-12

_ROW_SUM_TOL = 1e-6
_MODES = ("cyclic", "independent")


@dataclass(frozen=True, eq=False)
class ClassProbs:
    """(m, n + 1) class probabilities of one view descriptor."""

    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=np.float64)
        if y.ndim != 2 or y.shape[1] < 2:
            raise ValueError("y must have shape (m, n + 1) with n >= 1")
        if y.min() < -1e-9 or y.max() > 1.0 + 1e-9:
            raise ValueError("probabilities must lie in [0, 1]")
        if np.abs(y.sum(axis=1) - 1.0).max() > _ROW_SUM_TOL:
            raise ValueError("every row must sum to 1")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.y.shape[0]

    @property
    def n(self) -> int:
        return self.y.shape[1] - 1


@dataclass(frozen=True)
class OrientationAssignment:
    """Orientation variable per view, o_i in [1, m].

    In cyclic mode the assignment is the shift s applied to the identity,
    o_i = ((i - 1 + s) mod m) + 1, which is the consistent family of
    assignments a ring of grid rotations admits.
    """

    views: tuple[int, ...]
    mode: str
    shift: int | None = None

    def __post_init__(self):
        m = len(self.views)
        if m < 1:
            raise ValueError("assignment must cover at least one view")
        if any(not 1 <= o <= m for o in self.views):
            raise ValueError("orientation indices must lie in [1, m]")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if self.mode == "cyclic":
            if self.shift is None or not 0 <= self.shift < m:
                raise ValueError("cyclic assignment needs a shift in [0, m)")
            expected = tuple((i + self.shift) % m + 1 for i in range(m))
            if self.views != expected:
                raise ValueError("views are not the cyclic shift they claim")

    def __len__(self) -> int:
        return len(self.views)


def _log_clamped(y: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(y, LOG_EPS))


def onehot_ce(probs, class_id: int) -> float:
    """Cross-entropy against the one-hot target: -log probs[class_id]."""
    p = np.asarray(probs, dtype=np.float64).reshape(-1)
    if abs(p.sum() - 1.0) > _ROW_SUM_TOL:
        raise ValueError("probabilities must sum to 1")
    if not 1 <= class_id <= len(p):
        raise ValueError("class_id out of range")
    return float(-_log_clamped(p[class_id - 1]))


def rotnet_target(view_index: int, class_id: int, m: int, n: int) -> np.ndarray:
    """The (m, n + 1) one-hot-per-row target for a view at orientation
    ``view_index``: that row hits ``class_id``, every other row hits the
    incorrect-view class n + 1."""
    if not 1 <= view_index <= m:
        raise ValueError("view_index out of range")
    if not 1 <= class_id <= n:
        raise ValueError("class_id out of range")
    target = np.zeros((m, n + 1))
    target[:, n] = 1.0
    target[view_index - 1, n] = 0.0
    target[view_index - 1, class_id - 1] = 1.0
    return target


def rotnet_view_loss(probs: ClassProbs, view_index: int, class_id: int) -> float:
    """Per-view cross entropy against the orientation-aware target."""
    if not 1 <= view_index <= probs.m:
        raise ValueError("view_index out of range")
    if not 1 <= class_id <= probs.n:
        raise ValueError("class_id out of range")
    logs = _log_clamped(probs.y)
    o, c, n = view_index - 1, class_id - 1, probs.n
    return float(-logs[o, c] - (logs[:, n].sum() - logs[o, n]))


def rotnet_total_loss(
    views: Sequence[ClassProbs],
    assignment: OrientationAssignment,
    class_id: int,
) -> float:
    """Total loss: sum of per-view losses under an orientation assignment."""
    if len(views) != len(assignment):
        raise ValueError("one orientation per view required")
    return sum(
        rotnet_view_loss(probs, o, class_id)
        for probs, o in zip(views, assignment.views)
    )


def _stacked_log_ratios(views: Sequence[ClassProbs], class_id: int) -> np.ndarray:
    """R[i, j] = log ratio of view i's probs at orientation row j."""
    if not views:
        raise ValueError("at least one view required")
    m = len(views)
    n = views[0].n
    for probs in views:
        if probs.m != m or probs.n != n:
            raise ValueError("all views must share the same (m, n + 1) shape")
    if not 1 <= class_id <= n:
        raise ValueError("class_id out of range")
    logs = _log_clamped(np.stack([probs.y for probs in views]))
    return logs[:, :, class_id - 1] - logs[:, :, n]


def _search(ratios: np.ndarray, mode: str) -> tuple[OrientationAssignment, float]:
    m = ratios.shape[0]
    if mode == "cyclic":
        rows = np.arange(m)
        best_shift, best_score = 0, None
        for s in range(m):
            score = float(ratios[rows, (rows + s) % m].sum())
            if best_score is None or score > best_score:
                best_shift, best_score = s, score
        views = tuple((i + best_shift) % m + 1 for i in range(m))
        return OrientationAssignment(views, "cyclic", shift=best_shift), best_score
    if mode == "independent":
        cols = ratios.argmax(axis=1)  # first max: smallest index wins ties
        score = float(ratios[np.arange(m), cols].sum())
        return OrientationAssignment(tuple(int(j) + 1 for j in cols), "independent"), score
    raise ValueError(f"mode must be one of {_MODES}")


def best_assignment(
    views: Sequence[ClassProbs],
    class_id: int,
    mode: str = "cyclic",
) -> OrientationAssignment:
    """Orientation assignment maximizing the product of class ratios.

    Cyclic mode searches the m cyclic shifts; independent mode picks the
    best orientation row per view.  Ties resolve to the smallest shift or
    index.  The winner also minimizes :func:`rotnet_total_loss` over the
    same candidate set.
    """
    assignment, _ = _search(_stacked_log_ratios(views, class_id), mode)
    return assignment


def predict_class(
    views: Sequence[ClassProbs],
    mode: str = "cyclic",
) -> tuple[int, OrientationAssignment]:
    """Class (and its best assignment) with the highest assignment score.

    Ties resolve to the smallest class id.
    """
    n = views[0].n if views else 0
    best: tuple[int, OrientationAssignment] | None = None
    best_score = None
    for class_id in range(1, n + 1):
        assignment, score = _search(_stacked_log_ratios(views, class_id), mode)
        if best_score is None or score > best_score:
            best, best_score = (class_id, assignment), score
    if best is None:
        raise ValueError("at least one view required")
    return best
