"""Skeletons, positional motion clips and the per-clip z-normalisation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = [
    "Skeleton",
    "MotionClip",
    "NormStats",
    "bone_lengths",
    "subsample",
    "normalize",
    "fit_norm_stats",
    "denormalize",
    "select_joints",
    "select_joint_arrays",
]

STD_FLOOR = 1e-8


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Joint tree. ``parents[root] == -1``; the root's reference length is 0."""

    joint_names: tuple
    parents: tuple
    ref_bone_lengths: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.joint_names)
        parents = tuple(int(p) for p in self.parents)
        lengths = _frozen(self.ref_bone_lengths)
        object.__setattr__(self, "joint_names", names)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "ref_bone_lengths", lengths)

        n = len(names)
        if n == 0:
            raise DataError("skeleton has no joints")
        if len(parents) != n or lengths.shape != (n,):
            raise DataError("joint_names, parents and ref_bone_lengths must have equal length")
        if len(set(names)) != n:
            raise DataError("joint names must be unique")
        roots = [i for i, p in enumerate(parents) if p == -1]
        if len(roots) != 1:
            raise DataError(f"skeleton must have exactly one root, found {len(roots)}")
        for i, p in enumerate(parents):
            if p != -1 and not 0 <= p < n:
                raise DataError(f"joint {names[i]!r} has invalid parent index {p}")
        # every chain must reach the root without revisiting a joint
        for i in range(n):
            seen, j = set(), i
            while j != -1:
                if j in seen:
                    raise DataError(f"cycle in skeleton through joint {names[i]!r}")
                seen.add(j)
                j = parents[j]
        if not np.all(np.isfinite(lengths)):
            raise DataError("reference bone lengths must be finite")
        for i, p in enumerate(parents):
            if p != -1 and not lengths[i] > 0:
                raise DataError(f"bone {names[i]!r} needs a positive reference length")

    @property
    def n_joints(self) -> int:
        return len(self.joint_names)

    @property
    def root(self) -> int:
        return self.parents.index(-1)

    def index(self, name: str) -> int:
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise DataError(f"unknown joint {name!r}") from None

    def topological_order(self) -> list[int]:
        """Joint indices with every parent before its children."""
        return _topological(self.parents)

    def with_lengths(self, lengths) -> "Skeleton":
        return Skeleton(self.joint_names, self.parents, lengths)

    def __eq__(self, other):
        if not isinstance(other, Skeleton):
            return NotImplemented
        return (
            self.joint_names == other.joint_names
            and self.parents == other.parents
            and np.array_equal(self.ref_bone_lengths, other.ref_bone_lengths)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MotionClip:
    """``frames`` is F x N x 3; :attr:`matrix` is the row-stacked F x 3N view."""

    skeleton: Skeleton
    frames: np.ndarray
    fps: float

    def __post_init__(self):
        frames = _frozen(self.frames)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "fps", float(self.fps))
        if frames.ndim != 3 or frames.shape[1:] != (self.skeleton.n_joints, 3):
            raise DataError(
                f"frames must be F x {self.skeleton.n_joints} x 3, got {frames.shape}"
            )
        if frames.shape[0] < 2:
            raise DataError("a clip needs at least two frames")
        if not np.all(np.isfinite(frames)):
            raise DataError("clip contains non-finite positions")
        if not (np.isfinite(self.fps) and self.fps > 0):
            raise DataError(f"fps must be positive, got {self.fps}")

    @classmethod
    def from_matrix(cls, skeleton, matrix, fps) -> "MotionClip":
        matrix = np.asarray(matrix, dtype=float)
        return cls(skeleton, matrix.reshape(matrix.shape[0], -1, 3), fps)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_joints(self) -> int:
        return self.frames.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        return self.frames.reshape(self.n_frames, -1)

    def replace(self, frames=None, fps=None, skeleton=None) -> "MotionClip":
        return MotionClip(
            self.skeleton if skeleton is None else skeleton,
            self.frames if frames is None else frames,
            self.fps if fps is None else fps,
        )

    def __eq__(self, other):
        if not isinstance(other, MotionClip):
            return NotImplemented
        return (
            self.skeleton == other.skeleton
            and self.fps == other.fps
            and np.array_equal(self.frames, other.frames)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class NormStats:
    mean_pose: np.ndarray
    std: np.ndarray
    clamped: np.ndarray = field(default=None)

    def __post_init__(self):
        mean = _frozen(self.mean_pose)
        std = _frozen(self.std)
        if mean.ndim != 1 or mean.shape != std.shape:
            raise DataError("mean_pose and std must be vectors of equal length")
        if not np.all(std > 0):
            raise DataError("std entries must be positive")
        clamped = np.zeros(std.shape, bool) if self.clamped is None else self.clamped
        object.__setattr__(self, "mean_pose", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "clamped", _frozen(clamped, bool))

    def __eq__(self, other):
        if not isinstance(other, NormStats):
            return NotImplemented
        return np.array_equal(self.mean_pose, other.mean_pose) and np.array_equal(self.std, other.std)

    __hash__ = None


def _topological(parents) -> list[int]:
    children = {i: [] for i in range(len(parents))}
    roots = []
    for i, p in enumerate(parents):
        (children[p] if p != -1 else roots).append(i)
    order, stack = [], list(reversed(roots))
    while stack:
        j = stack.pop()
        order.append(j)
        stack.extend(reversed(children[j]))
    return order


def bone_lengths(frames, parents) -> np.ndarray:
    """Per-frame bone lengths, F x N; the root column is 0."""
    frames = np.asarray(frames, dtype=float)
    parents = np.asarray(parents)
    out = np.zeros(frames.shape[:2])
    child = np.flatnonzero(parents >= 0)
    out[:, child] = np.linalg.norm(frames[:, child] - frames[:, parents[child]], axis=-1)
    return out


def subsample(clip: MotionClip, target_fps: float) -> MotionClip:
    """Keep every ``fps / target_fps``-th frame, starting at frame 0."""
    if target_fps <= 0 or target_fps > clip.fps * (1 + 1e-9):
        raise DataError(f"target fps {target_fps} must be in (0, {clip.fps}]")
    ratio = clip.fps / target_fps
    stride = int(round(ratio))
    if abs(ratio - stride) > 1e-6 * ratio:
        raise DataError(
            f"{clip.fps} fps -> {target_fps} fps is not an integer stride; "
            "resampling by interpolation is not supported"
        )
    if stride == 1:
        return clip
    frames = clip.frames[::stride]
    if frames.shape[0] < 2:
        raise DataError("subsampled clip would have fewer than two frames")
    return clip.replace(frames=frames, fps=target_fps)


def fit_norm_stats(X) -> NormStats:
    """Column mean and population std of an F x 3N matrix, small stds clamped to 1."""
    X = np.asarray(X, dtype=float)
    std = X.std(axis=0)
    clamped = std < STD_FLOOR
    return NormStats(X.mean(axis=0), np.where(clamped, 1.0, std), clamped)


def normalize(clip: MotionClip) -> tuple[np.ndarray, NormStats]:
    """Z-score every coordinate column of the clip's F x 3N matrix.

    Population standard deviation; columns whose deviation falls below
    ``STD_FLOOR`` keep std = 1 so they map to zeros and invert exactly.
    """
    X = clip.matrix
    stats = fit_norm_stats(X)
    return (X - stats.mean_pose) / stats.std, stats


def denormalize(X, stats: NormStats) -> np.ndarray:
    """Undo :func:`normalize`; returns F x N x 3 frames."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != stats.mean_pose.shape[0]:
        raise DataError(f"matrix shape {X.shape} does not match stats of width {stats.mean_pose.shape[0]}")
    return (X * stats.std + stats.mean_pose).reshape(X.shape[0], -1, 3)


def select_joints(clip: MotionClip, names) -> MotionClip:
    """Restrict a clip to ``names``, re-parenting to the nearest kept ancestor.

    Reference lengths of re-parented bones are the mean measured distance,
    since skipping an intermediate joint makes the distance pose-dependent.
    """
    skel = clip.skeleton
    skeleton, frames = select_joint_arrays(
        skel.joint_names, skel.parents, skel.ref_bone_lengths, clip.frames, names
    )
    return MotionClip(skeleton, frames, clip.fps)


def select_joint_arrays(joint_names, parents, ref_lengths, frames, names):
    """:func:`select_joints` on raw arrays, for hierarchies that are not yet a valid Skeleton."""
    joint_names = list(joint_names)
    missing = [n for n in names if n not in joint_names]
    if missing:
        raise DataError(f"unknown joint(s): {', '.join(map(repr, missing))}")
    keep = [joint_names.index(n) for n in names]
    if len(set(keep)) != len(keep):
        raise DataError("duplicate joint in selection")
    # parents must precede children in the result
    topo = _topological(parents)
    keep = sorted(keep, key=topo.index)
    position = {j: i for i, j in enumerate(keep)}
    new_parents, direct = [], []
    for j in keep:
        p = parents[j]
        while p != -1 and p not in position:
            p = parents[p]
        new_parents.append(position.get(p, -1))
        direct.append(p == parents[j])
    frames = np.asarray(frames)[:, keep]
    measured = bone_lengths(frames, new_parents).mean(axis=0)
    lengths = np.array([
        ref_lengths[j] if new_parents[i] != -1 and direct[i] else measured[i]
        for i, j in enumerate(keep)
    ])
    lengths[np.array(new_parents) == -1] = 0.0
    return Skeleton([joint_names[j] for j in keep], new_parents, lengths), frames
