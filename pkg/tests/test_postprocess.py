import numpy as np
import pytest

from sparsestyle.errors import DataError
from sparsestyle.motion import MotionClip, Skeleton, bone_lengths
from sparsestyle.postprocess import enforce_limb_lengths, measure_limb_lengths


def chain3(frames):
    return MotionClip(Skeleton(["a", "b", "c"], [-1, 0, 1], [0.0, 1.0, 1.0]), frames, 30.0)


def test_hand_computed_chain():
    clip = chain3(np.array([[[0, 0, 0], [2, 0, 0], [2, 3, 0]]] * 2, float))
    out = enforce_limb_lengths(clip)
    np.testing.assert_allclose(out.frames[0], [[0, 0, 0], [1, 0, 0], [1, 1, 0]], atol=1e-15)


def test_fixed_point(normal_clip):
    out = enforce_limb_lengths(normal_clip)
    np.testing.assert_allclose(out.frames, normal_clip.frames, atol=1e-12)


def distorted(clip, seed=0):
    rng = np.random.default_rng(seed)
    return clip.replace(frames=clip.frames + rng.normal(scale=2.0, size=clip.frames.shape))


def test_distorted_fixture(normal_clip):
    bad = distorted(normal_clip)
    out = enforce_limb_lengths(bad)
    skel = normal_clip.skeleton
    lengths = bone_lengths(out.frames, skel.parents)[:, 1:]
    ref = skel.ref_bone_lengths[1:]
    assert np.max(np.abs(lengths - ref) / ref) <= 1e-9
    root = skel.root
    np.testing.assert_array_equal(out.frames[:, root], bad.frames[:, root])
    # bone directions come from the uncorrected vectors
    parents = np.array(skel.parents)
    kids = np.flatnonzero(parents >= 0)
    before = bad.frames[:, kids] - bad.frames[:, parents[kids]]
    after = out.frames[:, kids] - out.frames[:, parents[kids]]
    unit = lambda v: v / np.linalg.norm(v, axis=-1, keepdims=True)
    np.testing.assert_allclose(unit(after), unit(before), atol=1e-9)


def test_idempotent(normal_clip):
    once = enforce_limb_lengths(distorted(normal_clip, 1))
    np.testing.assert_allclose(enforce_limb_lengths(once).frames, once.frames, atol=1e-12)


def test_measure_fk_clip(normal_clip):
    np.testing.assert_allclose(measure_limb_lengths(normal_clip), normal_clip.skeleton.ref_bone_lengths, rtol=1e-9)


def test_measure_static_clip():
    # a clip needs two frames; two identical frames stand in for a single pose
    frame = np.array([[0, 0, 0], [2, 0, 0], [2, 3, 0]], float)
    np.testing.assert_allclose(measure_limb_lengths(chain3(np.stack([frame, frame]))), [0, 2, 3])


def test_measure_jitter():
    rng = np.random.default_rng(2)
    eps = 0.05
    lengths = 1.0 + rng.uniform(-eps, eps, size=200)
    frames = np.zeros((200, 3, 3))
    frames[:, 1, 0] = lengths
    frames[:, 2] = frames[:, 1] + [0, 1, 0]
    assert abs(measure_limb_lengths(chain3(frames))[1] - 1.0) <= eps


def test_zero_length_bone_reuses_previous_direction():
    frames = np.array([[[0, 0, 0], [2, 0, 0], [2, 3, 0]], [[0, 0, 0], [0, 0, 0], [0, 3, 0]]], float)
    out = enforce_limb_lengths(chain3(frames))
    np.testing.assert_allclose(out.frames[1], [[0, 0, 0], [1, 0, 0], [1, 1, 0]], atol=1e-15)
    with pytest.raises(DataError, match="frame 0"):
        enforce_limb_lengths(chain3(frames[::-1].copy()))


def test_reference_validation(normal_clip):
    with pytest.raises(DataError):
        enforce_limb_lengths(normal_clip, np.ones(3))
    with pytest.raises(DataError):
        enforce_limb_lengths(normal_clip, np.zeros(20))


def test_custom_reference(normal_clip):
    ref = normal_clip.skeleton.ref_bone_lengths * 1.5
    out = enforce_limb_lengths(normal_clip, ref)
    np.testing.assert_allclose(measure_limb_lengths(out), ref, rtol=1e-12)
