"""Dynamic time warping of a scalar joint signal, and frame warping of clips."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .motion import MotionClip

__all__ = ["WarpPath", "foot_signal", "dtw_align", "warp_pair"]

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True, eq=False)
class WarpPath:
    """Monotone, continuous index pairs from (0, 0) to (len(a)-1, len(b)-1)."""

    pairs: np.ndarray  # L x 2 ints

    def __post_init__(self):
        pairs = np.array(self.pairs, dtype=np.int64).reshape(-1, 2)
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        if len(pairs) == 0 or tuple(pairs[0]) != (0, 0):
            raise DataError("warp path must start at (0, 0)")
        steps = np.diff(pairs, axis=0)
        ok = np.isin(steps[:, 0], (0, 1)) & np.isin(steps[:, 1], (0, 1)) & (steps.sum(axis=1) > 0)
        if not ok.all():
            raise DataError("warp path steps must be (1,0), (0,1) or (1,1)")

    def __len__(self):
        return len(self.pairs)

    @property
    def end(self) -> tuple:
        return tuple(int(v) for v in self.pairs[-1])

    def transposed(self) -> "WarpPath":
        return WarpPath(self.pairs[:, ::-1])

    def __eq__(self, other):
        return isinstance(other, WarpPath) and np.array_equal(self.pairs, other.pairs)

    __hash__ = None


def foot_signal(clip: MotionClip, joint_name="LeftFoot", axis="y") -> np.ndarray:
    """One coordinate of one joint over time."""
    if axis not in _AXES:
        raise DataError(f"axis must be one of x, y, z; got {axis!r}")
    return clip.frames[:, clip.skeleton.index(joint_name), _AXES[axis]].copy()


def _accumulate(a, b, band):
    n, m = len(a), len(b)
    local = (a[:, None] - b[None, :]) ** 2
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        if band is None:
            lo, hi = 1, m
        else:
            # band around the rescaled diagonal so unequal lengths stay reachable
            centre = (i - 1) * (m - 1) / max(n - 1, 1) + 1
            lo, hi = max(1, int(np.floor(centre - band))), min(m, int(np.ceil(centre + band)))
        for j in range(lo, hi + 1):
            acc[i, j] = local[i - 1, j - 1] + min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
    return acc


def dtw_align(a, b, band=None):
    """Optimal warping of ``a`` onto ``b`` under squared-difference cost.

    Returns ``(path, cost)`` with ``cost`` the summed local cost along the
    path. ``band`` optionally limits ``|j - i * (m-1)/(n-1)|``. Backtracking
    prefers the diagonal step, then (1, 0), then (0, 1).
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) == 0 or len(b) == 0:
        raise DataError("cannot align an empty series")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DataError("series contain non-finite values")
    if band is not None and band < 0:
        raise DataError("band must be non-negative")
    acc = _accumulate(a, b, band)
    cost = acc[-1, -1]
    if not np.isfinite(cost):
        raise DataError(f"band {band} too narrow to connect the series ends")

    i, j = len(a), len(b)
    pairs = [(i - 1, j - 1)]
    while (i, j) != (1, 1):
        options = ((acc[i - 1, j - 1], i - 1, j - 1), (acc[i - 1, j], i - 1, j), (acc[i, j - 1], i, j - 1))
        # min() keeps the first of equal candidates: diagonal, vertical, horizontal
        _, i, j = min(options, key=lambda o: o[0])
        pairs.append((i - 1, j - 1))
    return WarpPath(pairs[::-1]), float(cost)


def warp_pair(clip_a: MotionClip, clip_b: MotionClip, path: WarpPath):
    """Repeat frames of both clips along ``path`` so they share its length."""
    ia, ib = path.pairs[:, 0], path.pairs[:, 1]
    if ia.max() >= clip_a.n_frames or ib.max() >= clip_b.n_frames:
        raise DataError(
            f"path reaches {path.end} but clips have {clip_a.n_frames} and {clip_b.n_frames} frames"
        )
    return clip_a.replace(frames=clip_a.frames[ia]), clip_b.replace(frames=clip_b.frames[ib])
