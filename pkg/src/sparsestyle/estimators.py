"""scikit-learn style wrappers around the pipeline stages.

All estimators work on F x 3N animation matrices (frames as samples, joint
coordinates as features), so they drop into ``sklearn.pipeline.Pipeline``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .decompose import decompose, extract_basic_chain, optimize_weights
from .errors import DataError
from .linalg import SparsityBudget
from .motion import NormStats, fit_norm_stats
from .postprocess import enforce_frames
from .synth import core_decompose

__all__ = ["MotionNormalizer", "SparseMotionDecomposer", "BasicMotionChainDecomposer", "LimbLengthCorrector"]


def _check_width(estimator, X):
    if X.shape[1] != estimator.n_features_in_:
        raise DataError(f"X has {X.shape[1]} features, {type(estimator).__name__} was fitted with {estimator.n_features_in_}")


class MotionNormalizer(TransformerMixin, BaseEstimator):
    """Per-coordinate z-score with population std; near-constant columns keep scale 1."""

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        stats = fit_norm_stats(X)
        self.mean_ = stats.mean_pose
        self.scale_ = stats.std
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def stats_(self) -> NormStats:
        check_is_fitted(self, "mean_")
        return NormStats(self.mean_, self.scale_)

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X)
        _check_width(self, X)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X)
        _check_width(self, X)
        return X * self.scale_ + self.mean_


class SparseMotionDecomposer(TransformerMixin, BaseEstimator):
    """Factor ``X ~ W C`` with sparse component rows.

    ``transform`` returns weights for new frames with the fitted components
    held fixed; ``inverse_transform`` maps weights back to poses.

    Parameters
    ----------
    n_components : int
        Number of components K.
    sparsity : float or int
        Fraction (float) or count (int) of non-zeros kept per component row.
    max_iter : int
        Outer alternating iterations.
    tol : float
        Relative objective improvement below which iteration stops.
    inner_max_iter : int
        Thresholded-gradient iterations per components update.
    weight_constraint : {None, "box"}
        Projection applied to weight columns.
    init : {"projected", "vertex"}
        Initialisation variant, see :func:`sparsestyle.decompose.init_components`.
    """

    def __init__(self, n_components=10, sparsity=0.1, max_iter=20, tol=1e-8,
                 inner_max_iter=200, weight_constraint=None, init="projected"):
        self.n_components = n_components
        self.sparsity = sparsity
        self.max_iter = max_iter
        self.tol = tol
        self.inner_max_iter = inner_max_iter
        self.weight_constraint = weight_constraint
        self.init = init

    def fit(self, X, y=None):
        self._fit(X)
        return self

    def fit_transform(self, X, y=None):
        return self._fit(X).W.copy()

    def _fit(self, X):
        X = check_array(X)
        d = decompose(
            X, self.n_components, SparsityBudget.coerce(self.sparsity),
            outer_iters=self.max_iter, tol=self.tol, inner_iters=self.inner_max_iter,
            weight_constraint=self.weight_constraint, init=self.init,
        )
        self.decomposition_ = d
        self.components_ = d.C
        self.objective_trace_ = np.array(d.objective_trace)
        self.reconstruction_err_ = float(np.sqrt(d.objective_trace[-1]))
        self.n_iter_ = len(d.objective_trace) - 1
        self.n_features_in_ = X.shape[1]
        return d

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X)
        _check_width(self, X)
        W = np.zeros((X.shape[0], self.components_.shape[0]))
        for _ in range(100):
            W_new = optimize_weights(X, W, self.components_, self.weight_constraint)
            done = np.max(np.abs(W_new - W), initial=0.0) < self.tol
            W = W_new
            if done:
                break
        return W

    def inverse_transform(self, W):
        check_is_fitted(self, "components_")
        W = check_array(W)
        return W @ self.components_

    def core_decomposition(self, rank=None):
        check_is_fitted(self, "decomposition_")
        return core_decompose(self.decomposition_, rank=rank)


class BasicMotionChainDecomposer(BaseEstimator):
    """Residual-peeling chain of decompositions, one per sparsity level."""

    def __init__(self, schedule=(0.1, 0.3, 0.6), n_components=10, max_iter=20, tol=1e-8):
        self.schedule = schedule
        self.n_components = n_components
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        X = check_array(X)
        self.chain_ = extract_basic_chain(
            X, [SparsityBudget.coerce(f) for f in self.schedule], self.n_components,
            outer_iters=self.max_iter, tol=self.tol,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def core_decompositions(self, rank=None):
        check_is_fitted(self, "chain_")
        return [core_decompose(t, rank=rank) for t in self.chain_.terms]


class LimbLengthCorrector(TransformerMixin, BaseEstimator):
    """Rescale bones of F x 3N pose matrices to reference lengths.

    With ``measure=True`` the reference lengths are the mean bone lengths of
    the data passed to ``fit``; otherwise the skeleton's own lengths are used.
    """

    def __init__(self, skeleton=None, measure=False):
        self.skeleton = skeleton
        self.measure = measure

    def fit(self, X=None, y=None):
        if self.skeleton is None:
            raise DataError("LimbLengthCorrector needs a skeleton")
        skel = self.skeleton
        self.n_features_in_ = 3 * skel.n_joints
        if self.measure:
            if X is None:
                raise DataError("measure=True requires data to measure")
            X = check_array(X)
            _check_width(self, X)
            frames = X.reshape(X.shape[0], -1, 3)
            child = np.array(skel.parents)
            lengths = np.zeros(skel.n_joints)
            idx = np.flatnonzero(child >= 0)
            lengths[idx] = np.linalg.norm(frames[:, idx] - frames[:, child[idx]], axis=-1).mean(axis=0)
            self.ref_lengths_ = lengths
        else:
            self.ref_lengths_ = np.array(skel.ref_bone_lengths)
        return self

    def transform(self, X):
        check_is_fitted(self, "ref_lengths_")
        X = check_array(X)
        _check_width(self, X)
        skel = self.skeleton
        frames = enforce_frames(X.reshape(X.shape[0], -1, 3), skel.parents, skel.topological_order(), self.ref_lengths_)
        return frames.reshape(X.shape[0], -1)
