"""Limb-length correction of synthesised clips."""
from __future__ import annotations

import numpy as np

from .errors import DataError
from .motion import MotionClip, bone_lengths

__all__ = ["measure_limb_lengths", "enforce_limb_lengths", "enforce_frames"]


def measure_limb_lengths(clip: MotionClip) -> np.ndarray:
    """Mean bone length over frames for every joint (0 for the root)."""
    return bone_lengths(clip.frames, clip.skeleton.parents).mean(axis=0)


def enforce_frames(frames, parents, order, ref_lengths) -> np.ndarray:
    """Array-level worker behind :func:`enforce_limb_lengths`."""
    frames = np.asarray(frames, dtype=float)
    out = frames.copy()
    for j in order:
        p = parents[j]
        if p == -1:
            continue
        bone = frames[:, j] - frames[:, p]
        length = np.linalg.norm(bone, axis=1)
        degenerate = length == 0.0
        if degenerate.any():
            if degenerate[0]:
                raise DataError(f"bone {j} has zero length in frame 0; its direction is undefined")
            # carry the last valid direction forward
            valid = np.where(degenerate, 0, np.arange(len(length)))
            valid = np.maximum.accumulate(valid)
            bone, length = bone[valid], length[valid]
        out[:, j] = out[:, p] + bone * (ref_lengths[j] / length)[:, None]
    return out


def enforce_limb_lengths(clip: MotionClip, ref_lengths=None) -> MotionClip:
    """Rescale every bone to its reference length, root to leaves.

    Directions come from the uncorrected parent-to-child vectors; each child
    is re-attached to its already corrected parent. The root is not moved.
    ``ref_lengths`` defaults to the skeleton's reference lengths.
    """
    skel = clip.skeleton
    ref = skel.ref_bone_lengths if ref_lengths is None else np.asarray(ref_lengths, dtype=float)
    if ref.shape != (skel.n_joints,):
        raise DataError(f"expected {skel.n_joints} reference lengths, got shape {ref.shape}")
    child = np.array(skel.parents) != -1
    if not np.all(ref[child] > 0):
        raise DataError("reference lengths must be positive for every non-root joint")
    return clip.replace(frames=enforce_frames(clip.frames, skel.parents, skel.topological_order(), ref))
