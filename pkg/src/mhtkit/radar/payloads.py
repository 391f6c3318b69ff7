"""Content types the radar application stores in the engine.

Everything is a frozen dataclass over primitives and tuples so payloads
hash, compare by value, and serialize without custom hooks. Kalman state
is kept as tuples here and converted at the math boundary; two branches
that agree on a target's state then carry bit-identical payloads, which
is what lets split merge them.

A track is named by the scan tick and measurement index that initiated
it, so independently running trackers agree on names.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TargetId = tuple[int, int]  # (birth tick, measurement index within that scan)

Vec4 = tuple[float, float, float, float]
Mat44 = tuple[Vec4, Vec4, Vec4, Vec4]


def to_vec4(a) -> Vec4:
    x = np.asarray(a, dtype=np.float64).reshape(4)
    return (float(x[0]), float(x[1]), float(x[2]), float(x[3]))


def to_mat44(a) -> Mat44:
    x = np.asarray(a, dtype=np.float64).reshape(4, 4)
    return tuple(tuple(float(v) for v in row) for row in x)  # type: ignore[return-value]


@dataclass(frozen=True)
class TargetPositionFact:
    """Current state estimate of one hypothesized target."""

    target: TargetId
    mean: Vec4
    cov: Mat44
    last_seen: int  # tick of the last detection folded into the estimate

    def mean_array(self) -> np.ndarray:
        return np.array(self.mean)

    def cov_array(self) -> np.ndarray:
        return np.array(self.cov)


@dataclass(frozen=True)
class TrackInitiated:
    """A measurement was interpreted as the first sight of a new target."""

    target: TargetId
    x: float
    y: float
    tick: int


@dataclass(frozen=True)
class TrackTerminated:
    """A target was interpreted as gone after going undetected too long."""

    target: TargetId
    tick: int


@dataclass(frozen=True)
class TargetMoved:
    """A measurement was interpreted as a known target, moving it."""

    target: TargetId
    x_from: float
    y_from: float
    x_to: float
    y_to: float
    tick: int


@dataclass(frozen=True)
class FalseAlarm:
    """A measurement was interpreted as clutter."""

    x: float
    y: float
    tick: int
