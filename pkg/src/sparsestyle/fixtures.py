"""Synthetic walking clips on a 20-joint skeleton.

Motions are generated as Euler-angle channels and pushed through forward
kinematics, so bone lengths are exact. ``style="normal"`` is a symmetric
gait; ``style="limp"`` favours the right leg (stiff knee, short swing, torso
lean) at a slower cadence. Run ``python -m sparsestyle.fixtures DIR`` to
write the fixture files used by the examples and tests.
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .bvh import BvhHierarchy, positions
from .motion import MotionClip

__all__ = ["walk_hierarchy", "walk_channels", "walk_clip", "walk_bvh_text", "write_fixtures", "JOINTS"]

# name, parent, offset
_BONES = [
    ("Hips", None, (0.0, 0.0, 0.0)),
    ("Spine", "Hips", (0.0, 12.0, 0.0)),
    ("Neck", "Spine", (0.0, 30.0, 0.0)),
    ("Head", "Neck", (0.0, 10.0, 0.0)),
    ("LeftShoulder", "Spine", (4.0, 26.0, 0.0)),
    ("LeftArm", "LeftShoulder", (12.0, 0.0, 0.0)),
    ("LeftForeArm", "LeftArm", (0.0, -28.0, 0.0)),
    ("LeftHand", "LeftForeArm", (0.0, -25.0, 0.0)),
    ("RightShoulder", "Spine", (-4.0, 26.0, 0.0)),
    ("RightArm", "RightShoulder", (-12.0, 0.0, 0.0)),
    ("RightForeArm", "RightArm", (0.0, -28.0, 0.0)),
    ("RightHand", "RightForeArm", (0.0, -25.0, 0.0)),
    ("LeftUpLeg", "Hips", (9.0, 0.0, 0.0)),
    ("LeftLeg", "LeftUpLeg", (0.0, -42.0, 0.0)),
    ("LeftFoot", "LeftLeg", (0.0, -40.0, 0.0)),
    ("LeftToeBase", "LeftFoot", (0.0, -4.0, 12.0)),
    ("RightUpLeg", "Hips", (-9.0, 0.0, 0.0)),
    ("RightLeg", "RightUpLeg", (0.0, -42.0, 0.0)),
    ("RightFoot", "RightLeg", (0.0, -40.0, 0.0)),
    ("RightToeBase", "RightFoot", (0.0, -4.0, 12.0)),
]
JOINTS = [b[0] for b in _BONES]
_ROOT_CHANNELS = ("Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation", "Yrotation")
_JOINT_CHANNELS = ("Zrotation", "Xrotation", "Yrotation")

_STYLES = {
    # cadence Hz, speed per s, hip/knee amplitude per side (deg), arm swing, lean
    "normal": dict(cadence=1.0, speed=120.0, hip=(25.0, 25.0), knee=(50.0, 50.0), arm=20.0, lean=0.0),
    "limp": dict(cadence=0.8, speed=80.0, hip=(25.0, 12.0), knee=(50.0, 12.0), arm=8.0, lean=6.0),
}


def walk_hierarchy() -> BvhHierarchy:
    names = JOINTS
    parents = tuple(-1 if p is None else names.index(p) for _, p, _ in _BONES)
    offsets = np.array([o for _, _, o in _BONES], dtype=float)
    channels = tuple(_ROOT_CHANNELS if p is None else _JOINT_CHANNELS for _, p, _ in _BONES)
    return BvhHierarchy(tuple(names), parents, offsets, channels)


def walk_channels(n_frames, fps, style="normal", phase=0.0) -> np.ndarray:
    """Per-frame channel values (F x 63) for one walking style."""
    if style not in _STYLES:
        raise ValueError(f"unknown style {style!r}; choose from {sorted(_STYLES)}")
    s = _STYLES[style]
    t = np.arange(n_frames) / fps
    w = 2 * np.pi * s["cadence"] * t + phase
    hierarchy = walk_hierarchy()
    values = np.zeros((n_frames, hierarchy.channel_count))
    col = {}
    c = 0
    for name, chans in zip(hierarchy.joint_names, hierarchy.channels):
        for ch in chans:
            col[(name, ch)] = c
            c += 1

    def put(joint, channel, v):
        values[:, col[(joint, channel)]] = v

    put("Hips", "Xposition", 2.0 * np.sin(w))
    put("Hips", "Yposition", 88.0 + 2.0 * np.cos(2 * w))
    put("Hips", "Zposition", s["speed"] * t)
    put("Hips", "Yrotation", 5.0 * np.sin(w))
    put("Hips", "Zrotation", s["lean"] + 2.0 * np.sin(w))
    put("Spine", "Yrotation", -6.0 * np.sin(w))
    put("Spine", "Xrotation", 4.0 + s["lean"])
    put("Neck", "Xrotation", -3.0 + 1.5 * np.cos(2 * w))
    for side, sign, shift in (("Left", 1.0, 0.0), ("Right", -1.0, np.pi)):
        k = 0 if side == "Left" else 1
        ph = w + shift
        # negative X rotation swings the leg forward (+z)
        put(f"{side}UpLeg", "Xrotation", -s["hip"][k] * np.sin(ph))
        put(f"{side}Leg", "Xrotation", s["knee"][k] * np.clip(np.sin(ph - 0.6), 0.0, None))
        put(f"{side}Foot", "Xrotation", 10.0 * np.sin(ph + 0.8))
        put(f"{side}Arm", "Xrotation", s["arm"] * np.sin(ph))
        put(f"{side}Arm", "Zrotation", sign * 70.0)
        put(f"{side}ForeArm", "Xrotation", -15.0 - 10.0 * np.clip(np.sin(ph), 0.0, None))
    return values


def walk_clip(style="normal", n_frames=90, fps=30.0, phase=0.0) -> MotionClip:
    h = walk_hierarchy()
    return MotionClip(h.skeleton, positions(h, walk_channels(n_frames, fps, style, phase)), fps)


def walk_bvh_text(style="normal", n_frames=120, fps=120.0, phase=0.0) -> str:
    """Fixture BVH text for the walk (frame time printed to 6 decimals)."""
    h = walk_hierarchy()
    values = walk_channels(n_frames, fps, style, phase)
    lines = ["HIERARCHY"]

    def emit(j, depth):
        pad = "  " * depth
        name = h.joint_names[j]
        head = "ROOT" if h.parents[j] == -1 else "JOINT"
        lines.append(f"{pad}{head} {name}")
        lines.append(pad + "{")
        lines.append(f"{pad}  OFFSET " + " ".join(f"{v:.6f}" for v in h.offsets[j]))
        lines.append(f"{pad}  CHANNELS {len(h.channels[j])} " + " ".join(h.channels[j]))
        kids = [i for i, p in enumerate(h.parents) if p == j]
        for i in kids:
            emit(i, depth + 1)
        if not kids:
            lines.append(f"{pad}  End Site")
            lines.append(pad + "  {")
            lines.append(f"{pad}    OFFSET 0.000000 -3.000000 0.000000")
            lines.append(pad + "  }")
        lines.append(pad + "}")

    emit(0, 0)
    lines.append("MOTION")
    lines.append(f"Frames: {n_frames}")
    lines.append(f"Frame Time: {1.0 / fps:.6f}")
    lines.extend(" ".join(f"{v:.6f}" for v in row) for row in values)
    return "\n".join(lines) + "\n"


def write_fixtures(directory) -> list[Path]:
    from .formats import save_clip

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for style, phase in (("normal", 0.0), ("limp", 0.7)):
        path = directory / f"walk_{style}.json"
        save_clip(path, walk_clip(style, n_frames=90, fps=30.0, phase=phase))
        written.append(path)
    path = directory / "walk_normal_120fps.bvh"
    path.write_text(walk_bvh_text("normal", n_frames=240, fps=120.0))
    written.append(path)
    return written


if __name__ == "__main__":
    for p in write_fixtures(sys.argv[1] if len(sys.argv) > 1 else "fixtures"):
        print(p)
