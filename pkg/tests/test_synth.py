import numpy as np
import pytest

from sparsestyle.decompose import Decomposition, decompose, extract_basic_chain
from sparsestyle.errors import DataError
from sparsestyle.linalg import SparsityBudget
from sparsestyle.motion import normalize
from sparsestyle.synth import (
    blend_cores,
    core_decompose,
    exchange_basic,
    project_into_basis,
    synthesize_clip,
)


@pytest.fixture(scope="module")
def pair(normal_clip, limp_clip):
    X1, s1 = normalize(normal_clip)
    X2, s2 = normalize(limp_clip)
    return (decompose(X1, 10, 0.1), s1), (decompose(X2, 10, 0.1), s2)


def random_decomposition(rng, F=12, K=4, M=15):
    return Decomposition(rng.standard_normal((F, K)), rng.standard_normal((K, M)), SparsityBudget.full())


class TestCore:
    def test_contract(self, pair):
        d = pair[0][0]
        cd = core_decompose(d)
        assert cd.rank == 10
        np.testing.assert_allclose(cd.basis @ cd.basis.T, np.eye(10), atol=1e-10)
        assert np.linalg.norm(cd.components - d.C) <= 1e-10 * np.linalg.norm(d.C)
        assert np.linalg.norm(cd.reconstruction() - d.reconstruction()) <= 1e-10 * np.linalg.norm(d.reconstruction())

    def test_orthogonal_rows_give_diagonal_core(self):
        rng = np.random.default_rng(0)
        Q = np.linalg.qr(rng.standard_normal((9, 3)))[0].T
        C = np.diag([3.0, 2.0, 1.0]) @ Q
        cd = core_decompose(Decomposition(np.eye(3), C, SparsityBudget.full()))
        assert np.allclose(np.abs(cd.core), np.diag([3.0, 2.0, 1.0]), atol=1e-12)

    def test_rank_truncation(self, pair):
        cd = core_decompose(pair[0][0], rank=4)
        assert cd.core.shape == (10, 4) and cd.basis.shape == (4, 60)


class TestProjection:
    def test_self_projection_recovers_core(self):
        cd = core_decompose(random_decomposition(np.random.default_rng(1)))
        np.testing.assert_allclose(project_into_basis(cd, cd.components), cd.core, atol=1e-8)

    def test_orthogonal_source_gives_zero(self):
        rng = np.random.default_rng(2)
        Q = np.linalg.qr(rng.standard_normal((8, 8)))[0]
        cd = core_decompose(Decomposition(np.eye(3), rng.standard_normal((3, 3)) @ Q[:3], SparsityBudget.full()))
        src = rng.standard_normal((3, 5)) @ Q[3:]
        np.testing.assert_allclose(project_into_basis(cd, src), 0.0, atol=1e-12)

    def test_residual_orthogonal_to_basis(self):
        rng = np.random.default_rng(3)
        cd = core_decompose(random_decomposition(rng, K=3, M=10))
        src = rng.standard_normal((3, 10))
        resid = src - project_into_basis(cd, src) @ cd.basis
        np.testing.assert_allclose(resid @ cd.basis.T, 0.0, atol=1e-12)

    def test_width_mismatch(self):
        cd = core_decompose(random_decomposition(np.random.default_rng(4)))
        with pytest.raises(DataError):
            project_into_basis(cd, np.zeros((4, 3)))


class TestBlend:
    def test_identities(self, pair):
        cd1, cd2 = core_decompose(pair[0][0]), core_decompose(pair[1][0])
        k2 = project_into_basis(cd1, cd2)
        out0, out1, half = (blend_cores(cd1, k2, a) for a in (0.0, 1.0, 0.5))
        np.testing.assert_array_equal(out0, cd1.reconstruction())
        np.testing.assert_allclose(out1, cd1.W @ k2 @ cd1.basis, atol=1e-12)
        np.testing.assert_allclose(half, 0.5 * (out0 + out1), atol=1e-12)
        for a in np.linspace(0, 1, 7):
            np.testing.assert_allclose(blend_cores(cd1, k2, a), (1 - a) * out0 + a * out1, atol=1e-12)

    def test_self_blend_is_constant(self, pair):
        cd = core_decompose(pair[0][0])
        own = project_into_basis(cd, cd)
        for a in (0.0, 0.3, 1.0):
            np.testing.assert_allclose(blend_cores(cd, own, a), cd.reconstruction(), atol=1e-9)

    def test_errors(self, pair):
        cd = core_decompose(pair[0][0])
        with pytest.raises(DataError):
            blend_cores(cd, cd.core, 1.5)
        with pytest.raises(DataError):
            blend_cores(cd, cd.core[:, :3], 0.5)


@pytest.fixture(scope="module")
def chains(normal_clip, limp_clip):
    out = []
    for clip in (normal_clip, limp_clip):
        X, _ = normalize(clip)
        out.append([core_decompose(t) for t in extract_basic_chain(X, [0.1, 0.3, 0.6], 10, outer_iters=5).terms])
    return out


class TestExchange:
    def test_self_exchange(self, chains):
        c1, _ = chains
        recon = sum(t.reconstruction() for t in c1)
        for i in range(3):
            np.testing.assert_allclose(exchange_basic(c1, c1, i), recon, atol=1e-9)

    def test_difference_rank_bound(self, chains):
        c1, c2 = chains
        recon = sum(t.reconstruction() for t in c1)
        diff = exchange_basic(c1, c2, 1) - recon
        s = np.linalg.svd(diff, compute_uv=False)
        assert np.sum(s > 1e-9 * s[0]) <= 10
        np.testing.assert_allclose(diff, c1[1].W @ (project_into_basis(c1[1], c2[1]) - c1[1].core) @ c1[1].basis, atol=1e-9)

    def test_single_term_equals_full_blend(self, chains):
        c1, c2 = chains
        expected = blend_cores(c1[0], project_into_basis(c1[0], c2[0]), 1.0)
        np.testing.assert_allclose(exchange_basic(c1[:1], c2[:1], 0), expected, atol=1e-12)

    def test_errors(self, chains):
        c1, c2 = chains
        with pytest.raises(DataError):
            exchange_basic(c1, c2, 3)
        with pytest.raises(DataError):
            exchange_basic(c1, c2[:2], 0)


def test_synthesize_round_trip(normal_clip):
    X, stats = normalize(normal_clip)
    clip = synthesize_clip(X, stats, normal_clip.skeleton, normal_clip.fps)
    np.testing.assert_allclose(clip.frames, normal_clip.frames, atol=1e-10)
    with pytest.raises(DataError):
        synthesize_clip(X[:, :6], stats, normal_clip.skeleton, 30.0)
