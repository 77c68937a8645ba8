"""Unions of closed subintervals of [-1, 1] (direction-cosine sets)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-12

Pair = tuple[float, float]


def _canonical(pairs: Iterable[Sequence[float]], lo_bound: float, hi_bound: float) -> tuple[Pair, ...]:
    cleaned = []
    for pair in pairs:
        if len(pair) != 2:
            raise ValueError(f"segment {pair!r} is not a (lo, hi) pair")
        lo, hi = float(pair[0]), float(pair[1])
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"segment ({lo}, {hi}) has non-finite endpoints")
        if lo > hi + ATOL:
            raise ValueError(f"segment ({lo}, {hi}) has lo > hi")
        if lo < lo_bound - ATOL or hi > hi_bound + ATOL:
            raise ValueError(f"segment ({lo}, {hi}) leaves [{lo_bound}, {hi_bound}]")
        lo, hi = max(lo, lo_bound), min(hi, hi_bound)
        if hi - lo > ATOL:
            cleaned.append((lo, hi))
    cleaned.sort()
    merged: list[list[float]] = []
    for lo, hi in cleaned:
        if merged and lo <= merged[-1][1] + ATOL:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


@dataclass(frozen=True)
class IntervalSet:
    """Canonical union of closed segments inside [-1, 1].

    Construction accepts overlapping or unsorted pairs and merges them;
    touching segments merge as well since only Lebesgue measure matters.
    """

    segments: tuple[Pair, ...] = ()

    def __init__(self, segments: Iterable[Sequence[float]] = ()):
        object.__setattr__(self, "segments", _canonical(segments, -1.0, 1.0))

    @classmethod
    def full(cls) -> "IntervalSet":
        return cls([(-1.0, 1.0)])

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls()

    @classmethod
    def _trusted(cls, segments: tuple[Pair, ...]) -> "IntervalSet":
        obj = object.__new__(cls)
        object.__setattr__(obj, "segments", segments)
        return obj

    @property
    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.segments)

    @property
    def is_empty(self) -> bool:
        return not self.segments

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.segments + other.segments)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        a, b = self.segments, other.segments
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if hi - lo > ATOL:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet._trusted(tuple(out))

    def complement(self) -> "IntervalSet":
        out = []
        cursor = -1.0
        for lo, hi in self.segments:
            if lo - cursor > ATOL:
                out.append((cursor, lo))
            cursor = hi
        if 1.0 - cursor > ATOL:
            out.append((cursor, 1.0))
        return IntervalSet._trusted(tuple(out))

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        return self.intersect(other.complement())

    __or__ = union
    __and__ = intersect
    __sub__ = difference

    def contains(self, points) -> np.ndarray:
        """Boolean mask of which points lie in the set (closed segments)."""
        pts = np.asarray(points, dtype=float)
        mask = np.zeros(pts.shape, dtype=bool)
        for lo, hi in self.segments:
            mask |= (pts >= lo - ATOL) & (pts <= hi + ATOL)
        return mask

    def approx_equal(self, other: "IntervalSet", atol: float = ATOL) -> bool:
        if len(self.segments) != len(other.segments):
            return False
        return all(
            abs(a[0] - b[0]) <= atol and abs(a[1] - b[1]) <= atol
            for a, b in zip(self.segments, other.segments)
        )

    def to_pairs(self) -> list[list[float]]:
        return [[lo, hi] for lo, hi in self.segments]

    def __repr__(self) -> str:
        inner = ", ".join(f"[{lo:g}, {hi:g}]" for lo, hi in self.segments)
        return f"IntervalSet({{{inner}}})"


@dataclass(frozen=True)
class ElevationSet:
    """Canonical union of closed elevation-angle segments inside [0, pi]."""

    segments: tuple[Pair, ...] = ()

    def __init__(self, segments: Iterable[Sequence[float]] = ()):
        object.__setattr__(self, "segments", _canonical(segments, 0.0, math.pi))

    @property
    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.segments)


def measure(s: IntervalSet) -> float:
    return s.measure


def combine(a: IntervalSet, b: IntervalSet, op: str) -> IntervalSet:
    if op == "union":
        return a.union(b)
    if op == "intersect":
        return a.intersect(b)
    if op == "difference":
        return a.difference(b)
    raise ValueError(f"unknown set operation {op!r}")


def from_elevation(angles: ElevationSet) -> IntervalSet:
    """Map elevation angles to direction cosines t = cos(theta)."""
    # cos is decreasing on [0, pi], so each segment flips orientation
    def cos(x: float) -> float:
        c = math.cos(x)
        return 0.0 if abs(c) < 1e-15 else c

    return IntervalSet((cos(hi), cos(lo)) for lo, hi in angles.segments)
