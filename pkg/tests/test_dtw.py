import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_dtw
from sparsestyle.dtw import WarpPath, dtw_align, foot_signal, warp_pair
from sparsestyle.errors import DataError
from sparsestyle.fixtures import walk_clip

series = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=6)


def test_worked_example():
    path, cost = dtw_align([0, 1, 2], [0, 0, 1, 2])
    assert cost == 0.0
    assert [tuple(p) for p in path.pairs] == [(0, 0), (0, 1), (1, 2), (2, 3)]


def test_self_alignment_is_diagonal():
    s = np.random.default_rng(0).standard_normal(12)
    path, cost = dtw_align(s, s)
    assert cost == 0.0
    np.testing.assert_array_equal(path.pairs, np.column_stack([np.arange(12)] * 2))


@settings(max_examples=150, deadline=None)
@given(series, series)
def test_matches_enumeration_and_path_invariants(a, b):
    path, cost = dtw_align(a, b)
    assert cost == pytest.approx(brute_force_dtw(np.array(a), np.array(b)), rel=1e-12, abs=1e-12)
    assert path.end == (len(a) - 1, len(b) - 1)
    pairs = path.pairs
    assert cost == pytest.approx(sum((a[i] - b[j]) ** 2 for i, j in pairs), rel=1e-12, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(series, series)
def test_symmetry(a, b):
    p_ab, c_ab = dtw_align(a, b)
    p_ba, c_ba = dtw_align(b, a)
    assert c_ab == pytest.approx(c_ba, rel=1e-12, abs=1e-12)
    assert sum((a[i] - b[j]) ** 2 for i, j in p_ba.transposed().pairs) == pytest.approx(c_ab, rel=1e-12, abs=1e-12)


def test_band():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(20), rng.standard_normal(25)
    _, free = dtw_align(a, b)
    path, banded = dtw_align(a, b, band=2)
    assert banded >= free
    centre = path.pairs[:, 0] * 24 / 19
    assert np.all(np.abs(path.pairs[:, 1] - centre) <= 3)
    assert dtw_align(a, b, band=100)[1] == free


def test_errors():
    with pytest.raises(DataError):
        dtw_align([], [1.0])
    with pytest.raises(DataError):
        dtw_align([np.nan], [1.0])
    with pytest.raises(DataError):
        dtw_align([1.0], [1.0], band=-1)
    with pytest.raises(DataError):
        WarpPath([(0, 0), (2, 1)])
    with pytest.raises(DataError):
        WarpPath([(1, 0)])


def test_foot_signal_is_gait_sinusoid():
    clip = walk_clip("normal", n_frames=120, fps=30.0)
    s = foot_signal(clip, "LeftFoot", "z")
    assert s.shape == (120,)
    # remove forward travel of the root, leaving the periodic swing
    rel = s - clip.frames[:, clip.skeleton.index("Hips"), 2]
    spectrum = np.abs(np.fft.rfft(rel - rel.mean()))
    freqs = np.fft.rfftfreq(120, d=1 / 30.0)
    assert freqs[np.argmax(spectrum)] == pytest.approx(1.0)  # cadence of the normal style


def test_foot_signal_constant_pose(normal_clip):
    frozen = normal_clip.replace(frames=np.repeat(normal_clip.frames[:1], 5, axis=0))
    assert np.ptp(foot_signal(frozen)) == 0.0
    with pytest.raises(DataError):
        foot_signal(normal_clip, "Tail")
    with pytest.raises(DataError):
        foot_signal(normal_clip, axis="w")


def test_warp_pair_duplicates_frames(normal_clip):
    a = normal_clip.replace(frames=normal_clip.frames[:3])
    b = normal_clip.replace(frames=normal_clip.frames[:4])
    path, _ = dtw_align([0, 1, 2], [0, 0, 1, 2])
    wa, wb = warp_pair(a, b, path)
    assert wa.n_frames == wb.n_frames == 4
    np.testing.assert_array_equal(wa.frames, a.frames[[0, 0, 1, 2]])
    np.testing.assert_array_equal(wb.frames, b.frames)


def test_warp_identity_and_cost_not_increased(normal_clip, limp_clip):
    path, _ = dtw_align(np.arange(90.0), np.arange(90.0))
    wa, wb = warp_pair(normal_clip, normal_clip, path)
    assert wa == normal_clip and wb == normal_clip
    sa, sb = foot_signal(normal_clip), foot_signal(limp_clip)
    path, cost = dtw_align(sa, sb)
    wa, wb = warp_pair(normal_clip, limp_clip, path)
    assert wa.n_frames == wb.n_frames == len(path)
    assert dtw_align(foot_signal(wa), foot_signal(wb))[1] <= cost + 1e-9


def test_warp_out_of_range(normal_clip):
    with pytest.raises(DataError):
        warp_pair(normal_clip, normal_clip, WarpPath([(0, 0), (1, 1)] + [(i, i) for i in range(2, 100)]))
