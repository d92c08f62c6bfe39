"""Reader for a BVH subset and forward kinematics to joint positions.

Supported: one ROOT, JOINT and End Site blocks, OFFSET, CHANNELS with 3 or 6
entries (positions and Euler rotations in degrees, applied in the declared
order), and a MOTION block with ``Frames:`` and ``Frame Time:``. End Sites are
not joints and do not appear in the resulting skeleton.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BvhParseError, BvhStructureError
from .motion import MotionClip, Skeleton, select_joint_arrays

__all__ = ["BvhHierarchy", "BvhMotion", "parse_bvh", "forward_kinematics", "positions", "load_bvh"]

_ROTATIONS = ("Xrotation", "Yrotation", "Zrotation")
_POSITIONS = ("Xposition", "Yposition", "Zposition")
FPS_SNAP_RTOL = 1e-4


@dataclass(frozen=True)
class BvhHierarchy:
    joint_names: tuple
    parents: tuple
    offsets: np.ndarray  # N x 3
    channels: tuple  # per joint: tuple of channel names in file order

    @property
    def channel_count(self) -> int:
        return sum(len(c) for c in self.channels)

    @property
    def offset_lengths(self) -> np.ndarray:
        lengths = np.linalg.norm(self.offsets, axis=1)
        lengths[np.asarray(self.parents) == -1] = 0.0
        return lengths

    @property
    def skeleton(self) -> Skeleton:
        """The joint tree with OFFSET magnitudes as reference lengths.

        Fails for hierarchies with zero-length bones; select a joint subset
        that skips them (see :func:`load_bvh`).
        """
        return Skeleton(self.joint_names, self.parents, self.offset_lengths)


@dataclass(frozen=True)
class BvhMotion:
    hierarchy: BvhHierarchy
    values: np.ndarray  # F x channel_count
    fps: float

    @property
    def skeleton(self) -> Skeleton:
        return self.hierarchy.skeleton


class _Tokens:
    def __init__(self, text):
        self.items = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            for tok in line.split():
                self.items.append((tok, lineno))
        self.pos = 0

    def peek(self):
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    def line(self):
        if self.pos < len(self.items):
            return self.items[self.pos][1]
        return self.items[-1][1] if self.items else None

    def next(self, what="token"):
        if self.pos >= len(self.items):
            raise BvhParseError(f"unexpected end of file, expected {what}", self.line())
        tok = self.items[self.pos]
        self.pos += 1
        return tok

    def expect(self, word):
        tok, line = self.next(repr(word))
        if tok != word:
            raise BvhParseError(f"expected {word!r}, found {tok!r}", line)

    def number(self, what="number"):
        tok, line = self.next(what)
        try:
            return float(tok)
        except ValueError:
            raise BvhParseError(f"expected {what}, found {tok!r}", line) from None


def _parse_joint(tokens, parent, names, parents, offsets, channels):
    tok, line = tokens.next("joint name")
    name = tok
    if name in names:
        raise BvhParseError(f"duplicate joint name {name!r}", line)
    index = len(names)
    names.append(name)
    parents.append(parent)
    tokens.expect("{")
    tokens.expect("OFFSET")
    offsets.append([tokens.number("OFFSET value") for _ in range(3)])

    tokens.expect("CHANNELS")
    line = tokens.line()
    count = tokens.number("channel count")
    if count not in (3.0, 6.0):
        raise BvhParseError(f"only 3 or 6 channels are supported, got {count:g}", line)
    declared = []
    for _ in range(int(count)):
        ch, cline = tokens.next("channel name")
        if ch not in _ROTATIONS + _POSITIONS:
            raise BvhParseError(f"unsupported channel {ch!r}", cline)
        declared.append(ch)
    rot = [c for c in declared if c in _ROTATIONS]
    pos = [c for c in declared if c in _POSITIONS]
    if sorted(rot) != list(_ROTATIONS) or len(pos) not in (0, 3) or (pos and sorted(pos) != list(_POSITIONS)):
        raise BvhParseError(f"joint {name!r} must declare X/Y/Z rotations (and optionally X/Y/Z positions)", line)
    channels.append(tuple(declared))

    while True:
        tok, line = tokens.next("'JOINT', 'End' or '}'")
        if tok == "}":
            return index
        if tok == "JOINT":
            _parse_joint(tokens, index, names, parents, offsets, channels)
        elif tok == "End":
            tokens.expect("Site")
            tokens.expect("{")
            tokens.expect("OFFSET")
            for _ in range(3):
                tokens.number("OFFSET value")
            tokens.expect("}")
        elif tok == "ROOT":
            raise BvhParseError("multiple hierarchies are not supported", line)
        else:
            raise BvhParseError(f"unexpected token {tok!r}", line)


def parse_bvh(text: str) -> BvhMotion:
    """Parse BVH text into a hierarchy plus per-frame channel values."""
    tokens = _Tokens(text)
    tokens.expect("HIERARCHY")
    tokens.expect("ROOT")
    names, parents, offsets, channels = [], [], [], []
    _parse_joint(tokens, -1, names, parents, offsets, channels)
    if tokens.peek() == "ROOT":
        raise BvhParseError("multiple hierarchies are not supported", tokens.line())

    tokens.expect("MOTION")
    tokens.expect("Frames:")
    line = tokens.line()
    n_frames = tokens.number("frame count")
    if n_frames != int(n_frames) or n_frames < 1:
        raise BvhParseError(f"invalid frame count {n_frames:g}", line)
    tokens.expect("Frame")
    tokens.expect("Time:")
    line = tokens.line()
    frame_time = tokens.number("frame time")
    if not frame_time > 0:
        raise BvhParseError(f"frame time must be positive, got {frame_time:g}", line)

    offsets = np.array(offsets, dtype=float)
    n_channels = sum(len(c) for c in channels)
    rest = tokens.items[tokens.pos:]
    rows = {}
    for tok, lineno in rest:
        try:
            rows.setdefault(lineno, []).append(float(tok))
        except ValueError:
            raise BvhParseError(f"non-numeric motion value {tok!r}", lineno) from None
    for lineno, row in rows.items():
        if len(row) != n_channels:
            raise BvhStructureError(
                f"line {lineno}: frame has {len(row)} values, hierarchy declares {n_channels} channels"
            )
    if len(rows) != int(n_frames):
        raise BvhStructureError(f"header declares {int(n_frames)} frames, found {len(rows)}")
    values = np.array(list(rows.values()), dtype=float).reshape(int(n_frames), n_channels)

    fps = 1.0 / frame_time
    # frame times are printed with few digits (0.008333 for 120 Hz)
    if abs(fps - round(fps)) <= FPS_SNAP_RTOL * fps:
        fps = float(round(fps))

    hierarchy = BvhHierarchy(tuple(names), tuple(parents), offsets, tuple(channels))
    return BvhMotion(hierarchy, values, fps)


def _axis_rotation(axis, degrees):
    """Stack of 3x3 rotation matrices about one axis, column-vector convention."""
    t = np.radians(degrees)
    c, s = np.cos(t), np.sin(t)
    one, zero = np.ones_like(t), np.zeros_like(t)
    if axis == "X":
        rows = [[one, zero, zero], [zero, c, -s], [zero, s, c]]
    elif axis == "Y":
        rows = [[c, zero, s], [zero, one, zero], [-s, zero, c]]
    else:
        rows = [[c, -s, zero], [s, c, zero], [zero, zero, one]]
    return np.moveaxis(np.array(rows), (0, 1), (-2, -1))


def positions(hierarchy: BvhHierarchy, values) -> np.ndarray:
    """Forward kinematics for every frame of ``values`` (F x channels) -> F x N x 3."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[1] != hierarchy.channel_count:
        raise BvhStructureError(
            f"expected {hierarchy.channel_count} channel values per frame, got {values.shape[1]}"
        )
    F, N = values.shape[0], len(hierarchy.joint_names)
    pos = np.zeros((F, N, 3))
    rot = np.zeros((F, N, 3, 3))
    col = 0
    # declaration order puts parents before children
    for j, chans in enumerate(hierarchy.channels):
        local = np.broadcast_to(np.eye(3), (F, 3, 3)).copy()
        translation = np.zeros((F, 3))
        for name in chans:
            v = values[:, col]
            col += 1
            if name in _ROTATIONS:
                local = local @ _axis_rotation(name[0], v)
            else:
                translation[:, "XYZ".index(name[0])] = v
        p = hierarchy.parents[j]
        if p == -1:
            pos[:, j] = hierarchy.offsets[j] + translation
            rot[:, j] = local
        else:
            pos[:, j] = pos[:, p] + np.einsum("fij,fj->fi", rot[:, p], hierarchy.offsets[j] + translation)
            rot[:, j] = rot[:, p] @ local
    return pos


def forward_kinematics(hierarchy: BvhHierarchy, values, frame: int) -> np.ndarray:
    """Joint positions (N x 3) of one frame."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    return positions(hierarchy, values[frame : frame + 1])[0]


def load_bvh(text: str, joints=None) -> MotionClip:
    """Parse BVH text and convert it to a positional clip.

    ``joints`` optionally names the subset of joints to keep.
    """
    motion = parse_bvh(text)
    h = motion.hierarchy
    frames = positions(h, motion.values)
    if joints is None:
        return MotionClip(h.skeleton, frames, motion.fps)
    skeleton, frames = select_joint_arrays(h.joint_names, h.parents, h.offset_lengths, frames, joints)
    return MotionClip(skeleton, frames, motion.fps)
